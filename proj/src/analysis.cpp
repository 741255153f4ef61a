#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace pidlab {

namespace {

struct RawComponents {
    double v[4];
};

RawComponents clamped_components(const PidResult& p, const char* who) {
    for (double c : {p.r, p.u1, p.u2, p.s})
        if (!std::isfinite(c)) throw std::invalid_argument(std::string(who) + ": non-finite component");
    return {{std::max(p.r, 0.0), std::max(p.u1, 0.0), std::max(p.u2, 0.0), std::max(p.s, 0.0)}};
}

}  // namespace

void RegistryEntry::validate() const {
    if (dataset_id.empty()) throw std::invalid_argument("RegistryEntry: empty dataset ID");
    std::set<std::string> seen;
    for (const ModelRecord& m : models)
        if (!seen.insert(m.name).second)
            throw std::invalid_argument("RegistryEntry: duplicate model name '" + m.name + "' in '" +
                                        dataset_id + "'");
}

InteractionProfile normalize(const PidResult& p) {
    RawComponents c = clamped_components(p, "normalize");
    double sum = c.v[0] + c.v[1] + c.v[2] + c.v[3];
    if (!(sum > 0.0)) throw std::invalid_argument("normalize: all components are zero");
    return {c.v[0] / sum, c.v[1] / sum, c.v[2] / sum, c.v[3] / sum};
}

AgreementScore agreement(const PidResult& dataset_pid, const PidResult& model_pid) {
    InteractionProfile w = normalize(dataset_pid);
    PidResult m = model_pid.to(dataset_pid.base);
    AgreementScore a;
    a.r = w.r * m.r;
    a.u1 = w.u1 * m.u1;
    a.u2 = w.u2 * m.u2;
    a.s = w.s * m.s;
    a.total = a.r + a.u1 + a.u2 + a.s;
    return a;
}

double similarity(const PidResult& a, const PidResult& b) {
    InteractionProfile pa = normalize(a);
    InteractionProfile pb = normalize(b);
    return std::abs(pa.r - pb.r) + std::abs(pa.u1 - pb.u1) + std::abs(pa.u2 - pb.u2) +
           std::abs(pa.s - pb.s);
}

SelectionResult select_models(const PidResult& new_pid, const std::vector<RegistryEntry>& registry,
                              int k) {
    if (registry.empty()) throw std::invalid_argument("select_models: empty registry");
    if (k < 1) throw std::invalid_argument("select_models: k must be positive");
    for (const RegistryEntry& e : registry) e.validate();

    const RegistryEntry* best = nullptr;
    double best_sim = 0.0;
    for (const RegistryEntry& e : registry) {
        double s = similarity(new_pid, e.dataset_pid);
        if (best == nullptr || s < best_sim || (s == best_sim && e.dataset_id < best->dataset_id)) {
            best = &e;
            best_sim = s;
        }
    }

    SelectionResult out;
    out.dataset_id = best->dataset_id;
    out.similarity = best_sim;
    out.recommendations = best->models;
    std::sort(out.recommendations.begin(), out.recommendations.end(),
              [](const ModelRecord& a, const ModelRecord& b) {
                  if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
                  return a.name < b.name;
              });
    if (int(out.recommendations.size()) > k) out.recommendations.resize(std::size_t(k));
    return out;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
    std::size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("pearson: need at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw std::invalid_argument("pearson: constant sequence");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace pidlab
