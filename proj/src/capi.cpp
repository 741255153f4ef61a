#include "../include/pidlab.h"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "analysis.hpp"
#include "batch.hpp"
#include "cvx.hpp"
#include "discretize.hpp"
#include "fusion.hpp"
#include "io.hpp"
#include "synthgen.hpp"
#include "types.hpp"

struct pidlab_features {
    pidlab::FeatureDataset d;
};
struct pidlab_discrete {
    pidlab::DiscreteDataset d;
};
struct pidlab_suite {
    std::vector<pidlab::NamedDataset> sets;
};
struct pidlab_result {
    pidlab::PidResult res;
};
struct pidlab_model {
    pidlab::FusionModel m;
    pidlab::TrainConfig cfg;
};
struct pidlab_registry {
    std::vector<pidlab::RegistryEntry> reg;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& what) {
    g_last_error = what;
    return code;
}

template <typename F>
int guarded(F&& f) {
    try {
        return f();
    } catch (const pidlab::io_error& e) {
        return fail(PIDLAB_E_IO, e.what());
    } catch (const pidlab::numeric_error& e) {
        return fail(PIDLAB_E_NUMERIC, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(PIDLAB_E_INVALID, e.what());
    } catch (const std::exception& e) {
        return fail(PIDLAB_E_OTHER, e.what());
    } catch (...) {
        return fail(PIDLAB_E_OTHER, "unknown error");
    }
}

int need(bool ok, const char* what) {
    if (ok) return PIDLAB_OK;
    throw std::invalid_argument(what);
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

pidlab::LogBase base_of(int log_base) {
    if (log_base == PIDLAB_BASE_BITS) return pidlab::LogBase::bits;
    if (log_base == PIDLAB_BASE_NATS) return pidlab::LogBase::nats;
    throw std::invalid_argument("unknown log base code");
}

pidlab::ClusterOptions cluster_options(const pidlab_estimate_opts& o) {
    pidlab::ClusterOptions co;
    if (o.cluster_k != 0) co.k = o.cluster_k;
    if (o.pca_dim != 0) co.pca_dim = o.pca_dim;
    return co;
}

pidlab::CvxConfig cvx_config(const pidlab_estimate_opts& o) {
    pidlab::CvxConfig cc;
    if (o.step_size != 0.0) cc.step_size = o.step_size;
    if (o.max_outer_iters != 0) cc.max_outer_iters = o.max_outer_iters;
    if (o.ipf_iters != 0) cc.ipf_iters = o.ipf_iters;
    if (o.ipf_tol != 0.0) cc.ipf_tol = o.ipf_tol;
    if (o.objective_tol != 0.0) cc.objective_tol = o.objective_tol;
    return cc;
}

pidlab::BatchConfig batch_config(const pidlab_estimate_opts& o) {
    pidlab::BatchConfig bc;
    if (o.batch_m != 0) bc.m = o.batch_m;
    if (o.batch_epochs != 0) bc.epochs = o.batch_epochs;
    if (o.unimodal_epochs != 0) bc.unimodal_epochs = o.unimodal_epochs;
    if (o.batch_lr != 0.0) bc.lr = o.batch_lr;
    if (o.sinkhorn_iters != 0) bc.sinkhorn_iters = o.sinkhorn_iters;
    if (o.eval_batches != 0) bc.eval_batches = o.eval_batches;
    bc.seed = o.seed;
    return bc;
}

pidlab::DiscreteDataset discretize_features(const pidlab::FeatureDataset& d,
                                            const pidlab_estimate_opts& o) {
    if (o.discretizer == PIDLAB_DISC_CLUSTER)
        return pidlab::cluster_dataset(d, cluster_options(o), o.seed).data;
    if (o.discretizer == PIDLAB_DISC_BINS) {
        if (o.bins < 1) throw std::invalid_argument("bins discretizer needs a positive bin count");
        if (!(o.bin_lo < o.bin_hi)) throw std::invalid_argument("bins discretizer needs lo < hi");
        pidlab::BinningCodebook b1 = pidlab::fixed_bins(o.bin_lo, o.bin_hi, o.bins, d.d1);
        pidlab::BinningCodebook b2 = pidlab::fixed_bins(o.bin_lo, o.bin_hi, o.bins, d.d2);
        return pidlab::bin_dataset(d, b1, b2);
    }
    throw std::invalid_argument("unknown discretizer code");
}

pidlab::PidResult run_estimate_features(const pidlab::FeatureDataset& d,
                                        const pidlab_estimate_opts& o) {
    pidlab::LogBase base = base_of(o.log_base);
    if (o.method == PIDLAB_METHOD_CVX) {
        pidlab::DiscreteDataset disc = discretize_features(d, o);
        return pidlab::estimate_pid_cvx(pidlab::empirical_joint(disc), cvx_config(o), base);
    }
    if (o.method == PIDLAB_METHOD_BATCH) return pidlab::estimate_pid_batch(d, batch_config(o), base);
    throw std::invalid_argument("unknown estimation method code");
}

pidlab::FeatureDataset onehot_features(const pidlab::DiscreteDataset& d) {
    pidlab::FeatureDataset f;
    f.n = d.n;
    f.d1 = d.k1;
    f.d2 = d.k2;
    f.classes = d.classes;
    f.x1.assign(std::size_t(d.n) * d.k1, 0.0);
    f.x2.assign(std::size_t(d.n) * d.k2, 0.0);
    f.y = d.y;
    for (long i = 0; i < d.n; ++i) {
        f.x1[std::size_t(i) * d.k1 + d.c1[std::size_t(i)]] = 1.0;
        f.x2[std::size_t(i) * d.k2 + d.c2[std::size_t(i)]] = 1.0;
    }
    return f;
}

}  // namespace

extern "C" {

const char* pidlab_version(void) { return "0.1.0"; }

const char* pidlab_last_error(void) { return g_last_error.c_str(); }

void pidlab_string_free(char* s) { std::free(s); }

/* datasets ---------------------------------------------------------- */

int pidlab_features_load(const char* path, pidlab_features** out) {
    return guarded([&] {
        need(path && out, "null argument");
        auto* h = new pidlab_features{pidlab::load_features(path)};
        *out = h;
        return PIDLAB_OK;
    });
}

int pidlab_features_save(const pidlab_features* d, const char* path, int binary) {
    return guarded([&] {
        need(d && path, "null argument");
        if (binary)
            pidlab::save_features_binary(d->d, path);
        else
            pidlab::save_features_text(d->d, path);
        return PIDLAB_OK;
    });
}

int pidlab_features_info(const pidlab_features* d, int64_t* n, int* d1, int* d2, int* classes) {
    return guarded([&] {
        need(d != nullptr, "null argument");
        if (n) *n = d->d.n;
        if (d1) *d1 = d->d.d1;
        if (d2) *d2 = d->d.d2;
        if (classes) *classes = d->d.classes;
        return PIDLAB_OK;
    });
}

void pidlab_features_free(pidlab_features* d) { delete d; }

int pidlab_discrete_load(const char* path, pidlab_discrete** out) {
    return guarded([&] {
        need(path && out, "null argument");
        *out = new pidlab_discrete{pidlab::load_discrete(path)};
        return PIDLAB_OK;
    });
}

int pidlab_discrete_save(const pidlab_discrete* d, const char* path) {
    return guarded([&] {
        need(d && path, "null argument");
        pidlab::save_discrete(d->d, path);
        return PIDLAB_OK;
    });
}

int pidlab_discrete_info(const pidlab_discrete* d, int64_t* n, int* k1, int* k2, int* classes) {
    return guarded([&] {
        need(d != nullptr, "null argument");
        if (n) *n = d->d.n;
        if (k1) *k1 = d->d.k1;
        if (k2) *k2 = d->d.k2;
        if (classes) *classes = d->d.classes;
        return PIDLAB_OK;
    });
}

void pidlab_discrete_free(pidlab_discrete* d) { delete d; }

/* generators -------------------------------------------------------- */

int pidlab_gen_bitwise(int gate, int64_t n, uint64_t seed, pidlab_discrete** out) {
    return guarded([&] {
        need(out != nullptr, "null argument");
        pidlab::Gate g;
        switch (gate) {
            case PIDLAB_GATE_AND: g = pidlab::Gate::AND; break;
            case PIDLAB_GATE_OR: g = pidlab::Gate::OR; break;
            case PIDLAB_GATE_XOR: g = pidlab::Gate::XOR; break;
            default: throw std::invalid_argument("unknown gate code");
        }
        *out = new pidlab_discrete{pidlab::gen_bitwise(g, n, seed)};
        return PIDLAB_OK;
    });
}

void pidlab_gmm_spec_init(pidlab_gmm_spec* spec) {
    if (!spec) return;
    spec->mean_norm = 1.0;
    spec->angle = 0.0;
    spec->coords = PIDLAB_GMM_CARTESIAN;
    spec->labels = PIDLAB_GMM_SOFT;
    spec->n = 1;
    spec->seed = 0;
}

int pidlab_gen_gmm(const pidlab_gmm_spec* spec, pidlab_features** out) {
    return guarded([&] {
        need(spec && out, "null argument");
        pidlab::GmmSpec s;
        s.mean_norm = spec->mean_norm;
        s.angle = spec->angle;
        switch (spec->coords) {
            case PIDLAB_GMM_CARTESIAN: s.coords = pidlab::GmmCoords::cartesian; break;
            case PIDLAB_GMM_POLAR_SIGNED: s.coords = pidlab::GmmCoords::polar_signed; break;
            case PIDLAB_GMM_POLAR_STANDARD: s.coords = pidlab::GmmCoords::polar_standard; break;
            default: throw std::invalid_argument("unknown coordinate code");
        }
        switch (spec->labels) {
            case PIDLAB_GMM_SOFT: s.labels = pidlab::GmmLabels::soft; break;
            case PIDLAB_GMM_HARD: s.labels = pidlab::GmmLabels::hard; break;
            default: throw std::invalid_argument("unknown label mode code");
        }
        s.n = spec->n;
        s.seed = spec->seed;
        *out = new pidlab_features{pidlab::gen_gmm(s)};
        return PIDLAB_OK;
    });
}

void pidlab_latent_spec_init(pidlab_latent_spec* spec) {
    if (!spec) return;
    std::memset(spec, 0, sizeof(*spec));
    spec->latent_dim = 50;
    spec->sigma = 0.5;
    spec->out_dim = 100;
    spec->dropout = 0.1;
    spec->n = 1;
}

int pidlab_gen_latent(const pidlab_latent_spec* spec, pidlab_features** out) {
    return guarded([&] {
        need(spec && out, "null argument");
        need(spec->n_sources >= 1 && spec->n_sources <= PIDLAB_MAX_SOURCES,
             "n_sources out of range");
        pidlab::LatentSpec s;
        s.latent_dim = spec->latent_dim;
        s.sigma = spec->sigma;
        s.out_dim = spec->out_dim;
        s.dropout = spec->dropout;
        s.n = spec->n;
        s.seed = spec->seed;
        for (int i = 0; i < spec->n_sources; ++i) {
            need(spec->source_which[i] >= PIDLAB_SRC_Z1 && spec->source_which[i] <= PIDLAB_SRC_ZC,
                 "unknown latent source code");
            s.sources.push_back({spec->source_which[i], spec->source_half[i] != 0});
        }
        *out = new pidlab_features{pidlab::gen_latent(s)};
        return PIDLAB_OK;
    });
}

uint64_t pidlab_suite_default_seed(void) { return pidlab::kSuiteSeed; }

int pidlab_suite_generate(uint64_t seed, int64_t train_n, int64_t val_n, pidlab_suite** out) {
    return guarded([&] {
        need(out != nullptr, "null argument");
        *out = new pidlab_suite{pidlab::latent_suite(seed, train_n, val_n)};
        return PIDLAB_OK;
    });
}

int pidlab_suite_count(const pidlab_suite* s) { return s ? int(s->sets.size()) : 0; }

const char* pidlab_suite_name(const pidlab_suite* s, int index) {
    if (!s || index < 0 || index >= int(s->sets.size())) {
        g_last_error = "suite index out of range";
        return nullptr;
    }
    return s->sets[std::size_t(index)].name.c_str();
}

int pidlab_suite_features(const pidlab_suite* s, int index, int split, pidlab_features** out) {
    return guarded([&] {
        need(s && out, "null argument");
        need(index >= 0 && index < int(s->sets.size()), "suite index out of range");
        need(split == 0 || split == 1, "split must be 0 (train) or 1 (val)");
        const pidlab::NamedDataset& nd = s->sets[std::size_t(index)];
        *out = new pidlab_features{split == 0 ? nd.train : nd.val};
        return PIDLAB_OK;
    });
}

void pidlab_suite_free(pidlab_suite* s) { delete s; }

/* estimation -------------------------------------------------------- */

void pidlab_estimate_opts_init(pidlab_estimate_opts* opts) {
    if (!opts) return;
    std::memset(opts, 0, sizeof(*opts));
}

int pidlab_estimate_features(const pidlab_features* d, const pidlab_estimate_opts* opts,
                             pidlab_result** out) {
    return guarded([&] {
        need(d && opts && out, "null argument");
        *out = new pidlab_result{run_estimate_features(d->d, *opts)};
        return PIDLAB_OK;
    });
}

int pidlab_estimate_discrete(const pidlab_discrete* d, const pidlab_estimate_opts* opts,
                             pidlab_result** out) {
    return guarded([&] {
        need(d && opts && out, "null argument");
        pidlab::LogBase base = base_of(opts->log_base);
        if (opts->method == PIDLAB_METHOD_CVX) {
            *out = new pidlab_result{
                pidlab::estimate_pid_cvx(pidlab::empirical_joint(d->d), cvx_config(*opts), base)};
            return PIDLAB_OK;
        }
        if (opts->method == PIDLAB_METHOD_BATCH) {
            *out = new pidlab_result{
                pidlab::estimate_pid_batch(onehot_features(d->d), batch_config(*opts), base)};
            return PIDLAB_OK;
        }
        throw std::invalid_argument("unknown estimation method code");
    });
}

int pidlab_result_values(const pidlab_result* r, double* red, double* u1, double* u2, double* syn,
                         double* total_mi) {
    return guarded([&] {
        need(r != nullptr, "null argument");
        if (red) *red = r->res.r;
        if (u1) *u1 = r->res.u1;
        if (u2) *u2 = r->res.u2;
        if (syn) *syn = r->res.s;
        if (total_mi) *total_mi = r->res.total_mi;
        return PIDLAB_OK;
    });
}

int pidlab_result_converged(const pidlab_result* r) {
    return r && r->res.diag.converged ? 1 : 0;
}

int pidlab_result_report_json(const pidlab_result* r, const char* method, const char* input_path,
                              int64_t n, int dim1, int dim2, char** out) {
    return guarded([&] {
        need(r && method && input_path && out, "null argument");
        *out = dup_string(pidlab::render_report(r->res, method, input_path, n, dim1, dim2));
        return PIDLAB_OK;
    });
}

int pidlab_result_from_report(const char* path, pidlab_result** out) {
    return guarded([&] {
        need(path && out, "null argument");
        *out = new pidlab_result{pidlab::parse_report(pidlab::read_text_file(path))};
        return PIDLAB_OK;
    });
}

void pidlab_result_free(pidlab_result* r) { delete r; }

/* fusion ------------------------------------------------------------ */

int pidlab_fusion_kind(const char* name) {
    if (!name) return -1;
    try {
        return int(pidlab::fusion_kind_from(name));
    } catch (const std::invalid_argument&) {
        return -1;
    }
}

const char* pidlab_fusion_kind_name(int kind) {
    if (kind < 0 || kind > PIDLAB_FUSION_UNIMODAL_X2) return nullptr;
    switch (pidlab::FusionKind(kind)) {
        case pidlab::FusionKind::early_fusion: return "early_fusion";
        case pidlab::FusionKind::additive: return "additive";
        case pidlab::FusionKind::elementwise: return "elementwise";
        case pidlab::FusionKind::tensor: return "tensor";
        case pidlab::FusionKind::unimodal_x1: return "unimodal_x1";
        case pidlab::FusionKind::unimodal_x2: return "unimodal_x2";
    }
    return nullptr;
}

void pidlab_train_cfg_init(pidlab_train_cfg* cfg) {
    if (!cfg) return;
    pidlab::TrainConfig def;
    cfg->lr = def.lr;
    cfg->epochs = def.epochs;
    cfg->batch = def.batch;
    cfg->seed = def.seed;
}

int pidlab_train_fusion(int kind, const pidlab_features* train, const pidlab_features* val,
                        const pidlab_train_cfg* cfg, pidlab_model** out, double* train_acc,
                        double* val_acc) {
    return guarded([&] {
        need(train && val && out, "null argument");
        need(kind >= 0 && kind <= PIDLAB_FUSION_UNIMODAL_X2, "unknown fusion kind code");
        pidlab::TrainConfig c;
        if (cfg) {
            c.lr = cfg->lr;
            c.epochs = cfg->epochs;
            c.batch = cfg->batch;
            c.seed = cfg->seed;
        }
        pidlab::FusionTrainResult r =
            pidlab::train_fusion(pidlab::FusionKind(kind), train->d, val->d, c);
        if (train_acc) *train_acc = r.train_acc;
        if (val_acc) *val_acc = r.val_acc;
        *out = new pidlab_model{std::move(r.model), c};
        return PIDLAB_OK;
    });
}

int pidlab_model_save(const pidlab_model* m, const char* path) {
    return guarded([&] {
        need(m && path, "null argument");
        pidlab::save_tensors(pidlab::pack_fusion(m->m, m->cfg), path);
        return PIDLAB_OK;
    });
}

int pidlab_model_load(const char* path, pidlab_model** out) {
    return guarded([&] {
        need(path && out, "null argument");
        pidlab::TrainConfig cfg;
        pidlab::FusionModel m = pidlab::unpack_fusion(pidlab::load_tensors(path), &cfg);
        *out = new pidlab_model{std::move(m), cfg};
        return PIDLAB_OK;
    });
}

int pidlab_model_kind(const pidlab_model* m) { return m ? int(m->m.kind) : -1; }

int pidlab_model_accuracy(const pidlab_model* m, const pidlab_features* d, double* out) {
    return guarded([&] {
        need(m && d && out, "null argument");
        *out = m->m.accuracy(d->d);
        return PIDLAB_OK;
    });
}

int pidlab_model_predict_dataset(const pidlab_model* m, const pidlab_features* d,
                                 pidlab_features** out) {
    return guarded([&] {
        need(m && d && out, "null argument");
        *out = new pidlab_features{pidlab::predict_dataset(m->m, d->d)};
        return PIDLAB_OK;
    });
}

int pidlab_quantify(const pidlab_model* m, const pidlab_features* d,
                    const pidlab_estimate_opts* opts, pidlab_result** out) {
    return guarded([&] {
        need(m && d && opts && out, "null argument");
        pidlab::FeatureDataset pred = pidlab::predict_dataset(m->m, d->d);
        *out = new pidlab_result{run_estimate_features(pred, *opts)};
        return PIDLAB_OK;
    });
}

int pidlab_robustness_drop(const pidlab_model* m, const pidlab_features* d, int modality,
                           double* delta) {
    return guarded([&] {
        need(m && d && delta, "null argument");
        *delta = pidlab::robustness_drop(m->m, d->d, modality);
        return PIDLAB_OK;
    });
}

void pidlab_model_free(pidlab_model* m) { delete m; }

/* selection --------------------------------------------------------- */

int pidlab_registry_load(const char* path, pidlab_registry** out) {
    return guarded([&] {
        need(path && out, "null argument");
        *out = new pidlab_registry{pidlab::load_registry(path)};
        return PIDLAB_OK;
    });
}

int pidlab_registry_count(const pidlab_registry* reg) { return reg ? int(reg->reg.size()) : 0; }

void pidlab_registry_free(pidlab_registry* reg) { delete reg; }

int pidlab_select(const pidlab_registry* reg, const pidlab_result* query, int k,
                  char** json_out) {
    return guarded([&] {
        need(reg && query && json_out, "null argument");
        pidlab::SelectionResult sel =
            pidlab::select_models(query->res, reg->reg, k > 0 ? k : 3);
        *json_out = dup_string(pidlab::render_selection(sel));
        return PIDLAB_OK;
    });
}

}  // extern "C"
