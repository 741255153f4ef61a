// pidlab command line: generate -> estimate -> train -> quantify -> select.
//
// Exit codes: 0 success, 2 usage or malformed content, 3 I/O failure,
// 4 estimator did not converge. stdout carries only the report; everything
// else goes to stderr. Commands that write files drop a manifest next to
// them; `pidlab replay <manifest>` reruns the recorded operation and
// regenerates its outputs byte for byte.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pidlab.h"

#ifndef PIDLAB_GIT_DESCRIBE
#define PIDLAB_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct CliError {
    int code;
    std::string message;
};

[[noreturn]] void bail(int code, const std::string& message) { throw CliError{code, message}; }

void check(int status) {
    if (status != PIDLAB_OK) throw CliError{status, pidlab_last_error()};
}

struct FeaturesDel {
    void operator()(pidlab_features* p) const { pidlab_features_free(p); }
};
struct DiscreteDel {
    void operator()(pidlab_discrete* p) const { pidlab_discrete_free(p); }
};
struct SuiteDel {
    void operator()(pidlab_suite* p) const { pidlab_suite_free(p); }
};
struct ResultDel {
    void operator()(pidlab_result* p) const { pidlab_result_free(p); }
};
struct ModelDel {
    void operator()(pidlab_model* p) const { pidlab_model_free(p); }
};
struct RegistryDel {
    void operator()(pidlab_registry* p) const { pidlab_registry_free(p); }
};
struct StrDel {
    void operator()(char* p) const { pidlab_string_free(p); }
};
using FeaturesPtr = std::unique_ptr<pidlab_features, FeaturesDel>;
using DiscretePtr = std::unique_ptr<pidlab_discrete, DiscreteDel>;
using SuitePtr = std::unique_ptr<pidlab_suite, SuiteDel>;
using ResultPtr = std::unique_ptr<pidlab_result, ResultDel>;
using ModelPtr = std::unique_ptr<pidlab_model, ModelDel>;
using RegistryPtr = std::unique_ptr<pidlab_registry, RegistryDel>;
using StrPtr = std::unique_ptr<char, StrDel>;

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

/* ------------------------------------------------------------- file plumbing */

enum class FileKind { features, discrete };

FileKind sniff_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) bail(3, "cannot open '" + path + "'");
    char buf[16] = {};
    in.read(buf, sizeof(buf));
    std::string head(buf, std::size_t(in.gcount()));
    if (head.rfind("#pidlab-discrete", 0) == 0) return FileKind::discrete;
    return FileKind::features;
}

FeaturesPtr load_features_or_die(const std::string& path, const char* who) {
    if (sniff_dataset(path) != FileKind::features)
        bail(2, std::string(who) + " expects a feature dataset, got a discrete one: '" + path +
                    "'");
    pidlab_features* d = nullptr;
    check(pidlab_features_load(path.c_str(), &d));
    return FeaturesPtr(d);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.good()) bail(3, "cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out.good()) bail(3, "short write to '" + path + "'");
}

/* ---------------------------------------------------------------- manifests */

ordered_json tool_block() {
    return ordered_json{
        {"name", "pidlab"}, {"version", pidlab_version()}, {"generator", PIDLAB_GIT_DESCRIBE}};
}

void write_manifest(const fs::path& path, const std::string& command, const ordered_json& args,
                    const std::vector<std::string>& outputs) {
    ordered_json m;
    m["format"] = "pidlab-manifest";
    m["version"] = 1;
    m["tool"] = tool_block();
    m["command"] = command;
    m["args"] = args;
    m["outputs"] = outputs;
    write_file(path.string(), m.dump(2) + "\n");
    std::cerr << "wrote " << path.string() << "\n";
}

/* a sidecar manifest for a single-file output, next to that output */
void write_sidecar(const std::string& out_path, const std::string& command,
                   const ordered_json& args) {
    fs::path out(out_path);
    write_manifest(out.string() + ".manifest.json", command, args,
                   {out.filename().string()});
}

/* ----------------------------------------------------------- estimator flags */

struct EstFlags {
    std::string method = "cvx";
    std::string base = "2";
    std::uint64_t seed = 0;
    std::string discretizer = "cluster";
    int cluster_k = 20;
    int pca_dim = 10;
    int bins = 50;
    double bin_lo = -5.0;
    double bin_hi = 5.0;
    double step_size = 0.3;
    int max_iters = 5000;
    int ipf_iters = 500;
    double ipf_tol = 1e-10;
    double objective_tol = 1e-9;
    int batch_m = 256;
    int batch_epochs = 10;
    int unimodal_epochs = 40;
    double batch_lr = 1e-3;
    int sinkhorn_iters = 20;
    int eval_batches = 16;
};

void attach_est_flags(CLI::App* cmd, EstFlags& f) {
    cmd->add_option("--method", f.method, "estimator: cvx or batch")
        ->check(CLI::IsMember({"cvx", "batch"}));
    cmd->add_option("--base", f.base, "log base for the report: 2 or e")
        ->check(CLI::IsMember({"2", "e"}));
    cmd->add_option("--seed", f.seed, "seed for discretization and batch training")
        ->envname("PIDLAB_SEED");
    cmd->add_option("--discretizer", f.discretizer,
                    "continuous input handling for cvx: cluster or bins")
        ->check(CLI::IsMember({"cluster", "bins"}));
    cmd->add_option("--cluster-k", f.cluster_k, "clusters per modality");
    cmd->add_option("--pca-dim", f.pca_dim, "PCA dimension before clustering");
    cmd->add_option("--bins", f.bins, "bins per coordinate");
    cmd->add_option("--bin-lo", f.bin_lo, "lower edge of the fixed binning range");
    cmd->add_option("--bin-hi", f.bin_hi, "upper edge of the fixed binning range");
    cmd->add_option("--step-size", f.step_size, "cvx mirror-descent step");
    cmd->add_option("--max-iters", f.max_iters, "cvx outer iteration cap");
    cmd->add_option("--ipf-iters", f.ipf_iters, "projection sweeps per cvx iteration");
    cmd->add_option("--ipf-tol", f.ipf_tol, "projection stopping tolerance");
    cmd->add_option("--objective-tol", f.objective_tol, "cvx stopping tolerance");
    cmd->add_option("--batch-m", f.batch_m, "batch estimator minibatch size");
    cmd->add_option("--batch-epochs", f.batch_epochs, "batch estimator epochs");
    cmd->add_option("--unimodal-epochs", f.unimodal_epochs, "epochs for the marginal critics");
    cmd->add_option("--batch-lr", f.batch_lr, "batch estimator learning rate");
    cmd->add_option("--sinkhorn-iters", f.sinkhorn_iters, "projection iterations per step");
    cmd->add_option("--eval-batches", f.eval_batches, "batches averaged for the final read");
}

pidlab_estimate_opts to_opts(const EstFlags& f) {
    pidlab_estimate_opts o;
    pidlab_estimate_opts_init(&o);
    o.method = f.method == "batch" ? PIDLAB_METHOD_BATCH : PIDLAB_METHOD_CVX;
    o.log_base = f.base == "e" ? PIDLAB_BASE_NATS : PIDLAB_BASE_BITS;
    o.seed = f.seed;
    o.discretizer = f.discretizer == "bins" ? PIDLAB_DISC_BINS : PIDLAB_DISC_CLUSTER;
    o.cluster_k = f.cluster_k;
    o.pca_dim = f.pca_dim;
    o.bins = f.bins;
    o.bin_lo = f.bin_lo;
    o.bin_hi = f.bin_hi;
    o.step_size = f.step_size;
    o.max_outer_iters = f.max_iters;
    o.ipf_iters = f.ipf_iters;
    o.ipf_tol = f.ipf_tol;
    o.objective_tol = f.objective_tol;
    o.batch_m = f.batch_m;
    o.batch_epochs = f.batch_epochs;
    o.unimodal_epochs = f.unimodal_epochs;
    o.batch_lr = f.batch_lr;
    o.sinkhorn_iters = f.sinkhorn_iters;
    o.eval_batches = f.eval_batches;
    return o;
}

ordered_json est_to_json(const EstFlags& f) {
    ordered_json a;
    a["method"] = f.method;
    a["base"] = f.base;
    a["seed"] = f.seed;
    a["discretizer"] = f.discretizer;
    a["cluster_k"] = f.cluster_k;
    a["pca_dim"] = f.pca_dim;
    a["bins"] = f.bins;
    a["bin_lo"] = f.bin_lo;
    a["bin_hi"] = f.bin_hi;
    a["step_size"] = f.step_size;
    a["max_iters"] = f.max_iters;
    a["ipf_iters"] = f.ipf_iters;
    a["ipf_tol"] = f.ipf_tol;
    a["objective_tol"] = f.objective_tol;
    a["batch_m"] = f.batch_m;
    a["batch_epochs"] = f.batch_epochs;
    a["unimodal_epochs"] = f.unimodal_epochs;
    a["batch_lr"] = f.batch_lr;
    a["sinkhorn_iters"] = f.sinkhorn_iters;
    a["eval_batches"] = f.eval_batches;
    return a;
}

EstFlags est_from_json(const ordered_json& a) {
    EstFlags f;
    f.method = a.at("method").get<std::string>();
    f.base = a.at("base").get<std::string>();
    f.seed = a.at("seed").get<std::uint64_t>();
    f.discretizer = a.at("discretizer").get<std::string>();
    f.cluster_k = a.at("cluster_k").get<int>();
    f.pca_dim = a.at("pca_dim").get<int>();
    f.bins = a.at("bins").get<int>();
    f.bin_lo = a.at("bin_lo").get<double>();
    f.bin_hi = a.at("bin_hi").get<double>();
    f.step_size = a.at("step_size").get<double>();
    f.max_iters = a.at("max_iters").get<int>();
    f.ipf_iters = a.at("ipf_iters").get<int>();
    f.ipf_tol = a.at("ipf_tol").get<double>();
    f.objective_tol = a.at("objective_tol").get<double>();
    f.batch_m = a.at("batch_m").get<int>();
    f.batch_epochs = a.at("batch_epochs").get<int>();
    f.unimodal_epochs = a.at("unimodal_epochs").get<int>();
    f.batch_lr = a.at("batch_lr").get<double>();
    f.sinkhorn_iters = a.at("sinkhorn_iters").get<int>();
    f.eval_batches = a.at("eval_batches").get<int>();
    return f;
}

/* --------------------------------------------------------------- gen bitwise */

struct GenBitwise {
    std::string gate = "and";
    std::int64_t n = 100000;
    std::uint64_t seed = 0;
    std::string out_dir;
};

void run_gen_bitwise(const GenBitwise& c, bool with_manifest) {
    fs::create_directories(c.out_dir);
    int gate = c.gate == "xor" ? PIDLAB_GATE_XOR : c.gate == "or" ? PIDLAB_GATE_OR
                                                                  : PIDLAB_GATE_AND;
    pidlab_discrete* raw = nullptr;
    check(pidlab_gen_bitwise(gate, c.n, c.seed, &raw));
    DiscretePtr d(raw);
    std::string data = (fs::path(c.out_dir) / "data.pidd").string();
    check(pidlab_discrete_save(d.get(), data.c_str()));
    std::cerr << "wrote " << data << " (" << c.n << " rows)\n";
    if (with_manifest) {
        ordered_json args{{"gate", c.gate}, {"n", c.n}, {"seed", c.seed}};
        write_manifest(fs::path(c.out_dir) / "manifest.json", "gen bitwise", args,
                       {"data.pidd"});
    }
}

/* ------------------------------------------------------------------- gen gmm */

struct GenGmm {
    double mean_norm = 1.0;
    double angle = 0.0;
    std::string coords = "cartesian";
    std::string labels = "soft";
    std::int64_t n = 100000;
    std::uint64_t seed = 0;
    std::string format = "text";
    std::string out_dir;
};

void run_gen_gmm(const GenGmm& c, bool with_manifest) {
    fs::create_directories(c.out_dir);
    pidlab_gmm_spec spec;
    pidlab_gmm_spec_init(&spec);
    spec.mean_norm = c.mean_norm;
    spec.angle = c.angle;
    spec.coords = c.coords == "polar_signed"     ? PIDLAB_GMM_POLAR_SIGNED
                  : c.coords == "polar_standard" ? PIDLAB_GMM_POLAR_STANDARD
                                                 : PIDLAB_GMM_CARTESIAN;
    spec.labels = c.labels == "hard" ? PIDLAB_GMM_HARD : PIDLAB_GMM_SOFT;
    spec.n = c.n;
    spec.seed = c.seed;
    pidlab_features* raw = nullptr;
    check(pidlab_gen_gmm(&spec, &raw));
    FeaturesPtr d(raw);
    std::string data = (fs::path(c.out_dir) / "data.pidf").string();
    check(pidlab_features_save(d.get(), data.c_str(), c.format == "binary" ? 1 : 0));
    std::cerr << "wrote " << data << " (" << c.n << " rows)\n";
    if (with_manifest) {
        ordered_json args{{"mean_norm", c.mean_norm}, {"angle", c.angle},
                          {"coords", c.coords},       {"labels", c.labels},
                          {"n", c.n},                 {"seed", c.seed},
                          {"format", c.format}};
        write_manifest(fs::path(c.out_dir) / "manifest.json", "gen gmm", args, {"data.pidf"});
    }
}

/* ---------------------------------------------------------------- gen latent */

struct GenLatent {
    int latent_dim = 50;
    double sigma = 0.5;
    int out_dim = 100;
    std::string sources = "zc";
    double dropout = 0.1;
    std::int64_t n = 20000;
    std::uint64_t seed = 0;
    std::string format = "text";
    std::string out_dir;
};

void parse_sources(const std::string& text, pidlab_latent_spec& spec) {
    spec.n_sources = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string tok = text.substr(start, comma == std::string::npos ? comma : comma - start);
        start = comma == std::string::npos ? text.size() + 1 : comma + 1;
        if (tok.empty()) bail(2, "empty latent source in '" + text + "'");
        int half = 0;
        if (tok.size() > 5 && tok.compare(tok.size() - 5, 5, ":half") == 0) {
            half = 1;
            tok.resize(tok.size() - 5);
        }
        int which;
        if (tok == "z1")
            which = PIDLAB_SRC_Z1;
        else if (tok == "z2")
            which = PIDLAB_SRC_Z2;
        else if (tok == "zc")
            which = PIDLAB_SRC_ZC;
        else
            bail(2, "unknown latent source '" + tok + "' (want z1, z2, or zc, with optional :half)");
        if (spec.n_sources >= PIDLAB_MAX_SOURCES) bail(2, "too many latent sources");
        spec.source_which[spec.n_sources] = which;
        spec.source_half[spec.n_sources] = half;
        ++spec.n_sources;
    }
}

void run_gen_latent(const GenLatent& c, bool with_manifest) {
    fs::create_directories(c.out_dir);
    pidlab_latent_spec spec;
    pidlab_latent_spec_init(&spec);
    spec.latent_dim = c.latent_dim;
    spec.sigma = c.sigma;
    spec.out_dim = c.out_dim;
    spec.dropout = c.dropout;
    spec.n = c.n;
    spec.seed = c.seed;
    parse_sources(c.sources, spec);
    pidlab_features* raw = nullptr;
    check(pidlab_gen_latent(&spec, &raw));
    FeaturesPtr d(raw);
    std::string data = (fs::path(c.out_dir) / "data.pidf").string();
    check(pidlab_features_save(d.get(), data.c_str(), c.format == "binary" ? 1 : 0));
    std::cerr << "wrote " << data << " (" << c.n << " rows)\n";
    if (with_manifest) {
        ordered_json args{{"latent_dim", c.latent_dim}, {"sigma", c.sigma},
                          {"out_dim", c.out_dim},       {"sources", c.sources},
                          {"dropout", c.dropout},       {"n", c.n},
                          {"seed", c.seed},             {"format", c.format}};
        write_manifest(fs::path(c.out_dir) / "manifest.json", "gen latent", args,
                       {"data.pidf"});
    }
}

/* ----------------------------------------------------------------- gen suite */

struct GenSuite {
    std::uint64_t seed = pidlab_suite_default_seed();
    std::int64_t train_n = 20000;
    std::int64_t val_n = 4000;
    std::string format = "binary";
    std::string out_dir;
};

void run_gen_suite(const GenSuite& c, bool with_manifest) {
    fs::create_directories(c.out_dir);
    pidlab_suite* raw = nullptr;
    check(pidlab_suite_generate(c.seed, c.train_n, c.val_n, &raw));
    SuitePtr s(raw);
    int binary = c.format == "binary" ? 1 : 0;
    std::vector<std::string> outputs;
    for (int i = 0; i < pidlab_suite_count(s.get()); ++i) {
        const char* name = pidlab_suite_name(s.get(), i);
        fs::path dir = fs::path(c.out_dir) / name;
        fs::create_directories(dir);
        for (int split = 0; split < 2; ++split) {
            pidlab_features* fraw = nullptr;
            check(pidlab_suite_features(s.get(), i, split, &fraw));
            FeaturesPtr f(fraw);
            std::string base = split == 0 ? "train.pidf" : "val.pidf";
            std::string path = (dir / base).string();
            check(pidlab_features_save(f.get(), path.c_str(), binary));
            outputs.push_back(std::string(name) + "/" + base);
        }
        std::cerr << "wrote " << (dir / "{train,val}.pidf").string() << "\n";
    }
    if (with_manifest) {
        ordered_json args{{"seed", c.seed},
                          {"train_n", c.train_n},
                          {"val_n", c.val_n},
                          {"format", c.format}};
        write_manifest(fs::path(c.out_dir) / "manifest.json", "gen suite-table1", args, outputs);
    }
}

/* ------------------------------------------------------------------ estimate */

struct Estimate {
    std::string input;
    EstFlags est;
    std::string out;
};

void emit_report(pidlab_result* r, const EstFlags& est, const std::string& input_path,
                 std::int64_t n, int dim1, int dim2, const std::string& out,
                 const std::string& command, const ordered_json& args, bool with_manifest) {
    char* raw = nullptr;
    check(pidlab_result_report_json(r, est.method.c_str(), input_path.c_str(), n, dim1, dim2,
                                    &raw));
    StrPtr text(raw);
    std::fputs(text.get(), stdout);
    std::fflush(stdout);
    if (!out.empty()) {
        write_file(out, text.get());
        std::cerr << "wrote " << out << "\n";
        if (with_manifest) write_sidecar(out, command, args);
    }
    if (!pidlab_result_converged(r)) bail(4, "estimator did not converge");
}

void run_estimate(const Estimate& c, bool with_manifest) {
    EstFlags est = c.est;
    ResultPtr r;
    std::int64_t n = 0;
    int a = 0, b = 0;
    pidlab_estimate_opts opts = to_opts(est);
    if (sniff_dataset(c.input) == FileKind::discrete) {
        pidlab_discrete* draw = nullptr;
        check(pidlab_discrete_load(c.input.c_str(), &draw));
        DiscretePtr d(draw);
        int classes = 0;
        check(pidlab_discrete_info(d.get(), &n, &a, &b, &classes));
        std::cerr << "estimate: " << c.input << " discrete n=" << n << " k=(" << a << "," << b
                  << ") method=" << est.method << "\n";
        pidlab_result* rraw = nullptr;
        check(pidlab_estimate_discrete(d.get(), &opts, &rraw));
        r.reset(rraw);
    } else {
        pidlab_features* fraw = nullptr;
        check(pidlab_features_load(c.input.c_str(), &fraw));
        FeaturesPtr d(fraw);
        int classes = 0;
        check(pidlab_features_info(d.get(), &n, &a, &b, &classes));
        std::cerr << "estimate: " << c.input << " features n=" << n << " d=(" << a << "," << b
                  << ") method=" << est.method << "\n";
        pidlab_result* rraw = nullptr;
        check(pidlab_estimate_features(d.get(), &opts, &rraw));
        r.reset(rraw);
    }
    ordered_json args = est_to_json(est);
    args["input"] = c.input;
    emit_report(r.get(), est, c.input, n, a, b, c.out, "estimate", args, with_manifest);
}

/* --------------------------------------------------------------------- train */

struct Train {
    std::string kind;
    std::string train;
    std::string val;
    double lr = 1e-4;
    int epochs = 100;
    int batch = 128;
    std::uint64_t seed = 0;
    std::string out;
};

void run_train(const Train& c, bool with_manifest) {
    int kind = pidlab_fusion_kind(c.kind.c_str());
    if (kind < 0) bail(2, "unknown fusion kind '" + c.kind + "'");
    FeaturesPtr train = load_features_or_die(c.train, "train");
    FeaturesPtr val = load_features_or_die(c.val, "train");
    pidlab_train_cfg cfg;
    pidlab_train_cfg_init(&cfg);
    cfg.lr = c.lr;
    cfg.epochs = c.epochs;
    cfg.batch = c.batch;
    cfg.seed = c.seed;
    std::cerr << "train: kind=" << c.kind << " epochs=" << c.epochs << " lr=" << c.lr
              << " seed=" << c.seed << "\n";
    pidlab_model* mraw = nullptr;
    double train_acc = 0, val_acc = 0;
    check(pidlab_train_fusion(kind, train.get(), val.get(), &cfg, &mraw, &train_acc, &val_acc));
    ModelPtr m(mraw);
    check(pidlab_model_save(m.get(), c.out.c_str()));
    std::cerr << "wrote " << c.out << "\n";
    std::string report;
    report += "{\n";
    report += "  \"kind\": \"" + c.kind + "\",\n";
    report += "  \"checkpoint\": \"" + c.out + "\",\n";
    report += "  \"train_accuracy\": " + fmt6(train_acc) + ",\n";
    report += "  \"val_accuracy\": " + fmt6(val_acc) + "\n";
    report += "}\n";
    std::fputs(report.c_str(), stdout);
    std::fflush(stdout);
    if (with_manifest) {
        ordered_json args{{"kind", c.kind},     {"train", c.train}, {"val", c.val},
                          {"lr", c.lr},         {"epochs", c.epochs}, {"batch", c.batch},
                          {"seed", c.seed}};
        write_sidecar(c.out, "train", args);
    }
}

/* ------------------------------------------------------------------ quantify */

struct Quantify {
    std::string model;
    std::string input;
    EstFlags est;
    std::string out;
};

void run_quantify(const Quantify& c, bool with_manifest) {
    pidlab_model* mraw = nullptr;
    check(pidlab_model_load(c.model.c_str(), &mraw));
    ModelPtr m(mraw);
    FeaturesPtr d = load_features_or_die(c.input, "quantify");
    std::int64_t n = 0;
    int d1 = 0, d2 = 0, classes = 0;
    check(pidlab_features_info(d.get(), &n, &d1, &d2, &classes));
    const char* kind_name = pidlab_fusion_kind_name(pidlab_model_kind(m.get()));
    std::cerr << "quantify: " << (kind_name ? kind_name : "?") << " on " << c.input
              << " n=" << n << " method=" << c.est.method << "\n";
    pidlab_estimate_opts opts = to_opts(c.est);
    pidlab_result* rraw = nullptr;
    check(pidlab_quantify(m.get(), d.get(), &opts, &rraw));
    ResultPtr r(rraw);
    ordered_json args = est_to_json(c.est);
    args["model"] = c.model;
    args["input"] = c.input;
    emit_report(r.get(), c.est, c.input, n, d1, d2, c.out, "quantify", args, with_manifest);
}

/* -------------------------------------------------------------------- select */

struct Select {
    std::string query;
    std::string registry;
    int k = 3;
    std::string out;
};

void run_select(const Select& c, bool with_manifest) {
    pidlab_registry* rraw = nullptr;
    check(pidlab_registry_load(c.registry.c_str(), &rraw));
    RegistryPtr reg(rraw);
    pidlab_result* qraw = nullptr;
    check(pidlab_result_from_report(c.query.c_str(), &qraw));
    ResultPtr query(qraw);
    std::cerr << "select: registry=" << c.registry << " ("
              << pidlab_registry_count(reg.get()) << " datasets) k=" << c.k << "\n";
    char* sraw = nullptr;
    check(pidlab_select(reg.get(), query.get(), c.k, &sraw));
    StrPtr text(sraw);
    std::fputs(text.get(), stdout);
    std::fflush(stdout);
    if (!c.out.empty()) {
        write_file(c.out, text.get());
        std::cerr << "wrote " << c.out << "\n";
        if (with_manifest) {
            ordered_json args{
                {"query", c.query}, {"registry", c.registry}, {"k", c.k}};
            write_sidecar(c.out, "select", args);
        }
    }
}

/* -------------------------------------------------------------------- replay */

void run_replay(const std::string& manifest_path, const std::string& out_override) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in.good()) bail(3, "cannot open '" + manifest_path + "'");
    ordered_json m;
    try {
        m = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        bail(2, "malformed manifest: " + std::string(e.what()));
    }
    try {
        if (m.at("format").get<std::string>() != "pidlab-manifest")
            bail(2, "not a pidlab manifest: '" + manifest_path + "'");
        std::string command = m.at("command").get<std::string>();
        const ordered_json& args = m.at("args");
        fs::path base = out_override.empty()
                            ? fs::absolute(manifest_path).parent_path()
                            : fs::path(out_override);
        std::cerr << "replay: " << command << " -> " << base.string() << "\n";
        if (command == "gen bitwise") {
            GenBitwise c;
            c.gate = args.at("gate").get<std::string>();
            c.n = args.at("n").get<std::int64_t>();
            c.seed = args.at("seed").get<std::uint64_t>();
            c.out_dir = base.string();
            run_gen_bitwise(c, false);
        } else if (command == "gen gmm") {
            GenGmm c;
            c.mean_norm = args.at("mean_norm").get<double>();
            c.angle = args.at("angle").get<double>();
            c.coords = args.at("coords").get<std::string>();
            c.labels = args.at("labels").get<std::string>();
            c.n = args.at("n").get<std::int64_t>();
            c.seed = args.at("seed").get<std::uint64_t>();
            c.format = args.at("format").get<std::string>();
            c.out_dir = base.string();
            run_gen_gmm(c, false);
        } else if (command == "gen latent") {
            GenLatent c;
            c.latent_dim = args.at("latent_dim").get<int>();
            c.sigma = args.at("sigma").get<double>();
            c.out_dim = args.at("out_dim").get<int>();
            c.sources = args.at("sources").get<std::string>();
            c.dropout = args.at("dropout").get<double>();
            c.n = args.at("n").get<std::int64_t>();
            c.seed = args.at("seed").get<std::uint64_t>();
            c.format = args.at("format").get<std::string>();
            c.out_dir = base.string();
            run_gen_latent(c, false);
        } else if (command == "gen suite-table1") {
            GenSuite c;
            c.seed = args.at("seed").get<std::uint64_t>();
            c.train_n = args.at("train_n").get<std::int64_t>();
            c.val_n = args.at("val_n").get<std::int64_t>();
            c.format = args.at("format").get<std::string>();
            c.out_dir = base.string();
            run_gen_suite(c, false);
        } else if (command == "estimate") {
            Estimate c;
            c.est = est_from_json(args);
            c.input = args.at("input").get<std::string>();
            c.out = (base / m.at("outputs").at(0).get<std::string>()).string();
            run_estimate(c, false);
        } else if (command == "train") {
            Train c;
            c.kind = args.at("kind").get<std::string>();
            c.train = args.at("train").get<std::string>();
            c.val = args.at("val").get<std::string>();
            c.lr = args.at("lr").get<double>();
            c.epochs = args.at("epochs").get<int>();
            c.batch = args.at("batch").get<int>();
            c.seed = args.at("seed").get<std::uint64_t>();
            c.out = (base / m.at("outputs").at(0).get<std::string>()).string();
            run_train(c, false);
        } else if (command == "quantify") {
            Quantify c;
            c.est = est_from_json(args);
            c.model = args.at("model").get<std::string>();
            c.input = args.at("input").get<std::string>();
            c.out = (base / m.at("outputs").at(0).get<std::string>()).string();
            run_quantify(c, false);
        } else if (command == "select") {
            Select c;
            c.query = args.at("query").get<std::string>();
            c.registry = args.at("registry").get<std::string>();
            c.k = args.at("k").get<int>();
            c.out = (base / m.at("outputs").at(0).get<std::string>()).string();
            run_select(c, false);
        } else {
            bail(2, "manifest records unknown command '" + command + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        bail(2, "malformed manifest: " + std::string(e.what()));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pidlab: partial information decomposition toolkit"};
    app.require_subcommand(1);

    /* gen */
    CLI::App* gen = app.add_subcommand("gen", "generate synthetic datasets");
    gen->require_subcommand(1);

    GenBitwise gb;
    CLI::App* gen_bit = gen->add_subcommand("bitwise", "noiseless logic gate data");
    gen_bit->add_option("--gate", gb.gate, "and, or, or xor")
        ->required()
        ->check(CLI::IsMember({"and", "or", "xor"}));
    gen_bit->add_option("--n", gb.n, "rows")->check(CLI::PositiveNumber);
    gen_bit->add_option("--seed", gb.seed)->envname("PIDLAB_SEED");
    gen_bit->add_option("-o,--out", gb.out_dir, "output directory")->required();

    GenGmm gg;
    CLI::App* gen_gmm = gen->add_subcommand("gmm", "two-component Gaussian mixture");
    gen_gmm->add_option("--mean-norm", gg.mean_norm, "distance of the means from the origin");
    gen_gmm->add_option("--angle", gg.angle, "mean direction in radians");
    gen_gmm->add_option("--coords", gg.coords, "cartesian, polar_signed, or polar_standard")
        ->check(CLI::IsMember({"cartesian", "polar_signed", "polar_standard"}));
    gen_gmm->add_option("--labels", gg.labels, "soft (posterior draw) or hard (component)")
        ->check(CLI::IsMember({"soft", "hard"}));
    gen_gmm->add_option("--n", gg.n, "rows")->check(CLI::PositiveNumber);
    gen_gmm->add_option("--seed", gg.seed)->envname("PIDLAB_SEED");
    gen_gmm->add_option("--format", gg.format, "text or binary")
        ->check(CLI::IsMember({"text", "binary"}));
    gen_gmm->add_option("-o,--out", gg.out_dir, "output directory")->required();

    GenLatent gl;
    CLI::App* gen_lat = gen->add_subcommand("latent", "nonlinear mixes of latent factors");
    gen_lat->add_option("--latent-dim", gl.latent_dim)->check(CLI::PositiveNumber);
    gen_lat->add_option("--sigma", gl.sigma, "observation noise scale");
    gen_lat->add_option("--out-dim", gl.out_dim, "observed dimension per modality")
        ->check(CLI::PositiveNumber);
    gen_lat->add_option("--sources", gl.sources,
                        "comma list of label sources: z1, z2, zc, each with optional :half");
    gen_lat->add_option("--dropout", gl.dropout, "probability of zeroing a latent coordinate");
    gen_lat->add_option("--n", gl.n, "rows")->check(CLI::PositiveNumber);
    gen_lat->add_option("--seed", gl.seed)->envname("PIDLAB_SEED");
    gen_lat->add_option("--format", gl.format, "text or binary")
        ->check(CLI::IsMember({"text", "binary"}));
    gen_lat->add_option("-o,--out", gl.out_dir, "output directory")->required();

    GenSuite gs;
    CLI::App* gen_suite =
        gen->add_subcommand("suite-table1", "the ten-dataset latent benchmark suite");
    gen_suite->add_option("--seed", gs.seed)->envname("PIDLAB_SEED");
    gen_suite->add_option("--train-n", gs.train_n, "training rows per dataset")
        ->check(CLI::PositiveNumber);
    gen_suite->add_option("--val-n", gs.val_n, "validation rows per dataset")
        ->check(CLI::NonNegativeNumber);
    gen_suite->add_option("--format", gs.format, "text or binary")
        ->check(CLI::IsMember({"text", "binary"}));
    gen_suite->add_option("-o,--out", gs.out_dir, "output directory")->required();

    /* estimate */
    Estimate es;
    CLI::App* estimate = app.add_subcommand("estimate", "estimate a PID from a dataset file");
    estimate->add_option("input", es.input, "dataset file (feature or discrete)")->required();
    attach_est_flags(estimate, es.est);
    estimate->add_option("-o,--out", es.out, "also write the report here");

    /* train */
    Train tr;
    CLI::App* train = app.add_subcommand("train", "train a fusion model");
    train->add_option("--kind", tr.kind,
                      "early_fusion, additive, elementwise, tensor, unimodal_x1, unimodal_x2")
        ->required()
        ->check(CLI::IsMember({"early_fusion", "additive", "elementwise", "tensor",
                               "unimodal_x1", "unimodal_x2"}));
    train->add_option("--train", tr.train, "training feature dataset")->required();
    train->add_option("--val", tr.val, "validation feature dataset")->required();
    train->add_option("--lr", tr.lr, "learning rate");
    train->add_option("--epochs", tr.epochs)->check(CLI::NonNegativeNumber);
    train->add_option("--batch", tr.batch)->check(CLI::PositiveNumber);
    train->add_option("--seed", tr.seed)->envname("PIDLAB_SEED");
    train->add_option("-o,--out", tr.out, "checkpoint path")->required();

    /* quantify */
    Quantify qt;
    CLI::App* quantify =
        app.add_subcommand("quantify", "estimate the PID of a model's predictions");
    quantify->add_option("--model", qt.model, "checkpoint path")->required();
    quantify->add_option("--data", qt.input, "feature dataset to predict on")->required();
    attach_est_flags(quantify, qt.est);
    quantify->add_option("-o,--out", qt.out, "also write the report here");

    /* select */
    Select se;
    CLI::App* select =
        app.add_subcommand("select", "recommend models for a dataset by profile similarity");
    select->add_option("--query", se.query, "PID report of the new dataset")->required();
    select->add_option("--registry", se.registry, "registry JSON")->required();
    select->add_option("-k,--top-k", se.k, "recommendations to return")
        ->check(CLI::PositiveNumber);
    select->add_option("-o,--out", se.out, "also write the selection report here");

    /* replay */
    std::string replay_manifest, replay_out;
    CLI::App* replay = app.add_subcommand("replay", "rerun a command from its manifest");
    replay->add_option("manifest", replay_manifest, "manifest path")->required();
    replay->add_option("-o,--out", replay_out, "override the output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (gen_bit->parsed())
            run_gen_bitwise(gb, true);
        else if (gen_gmm->parsed())
            run_gen_gmm(gg, true);
        else if (gen_lat->parsed())
            run_gen_latent(gl, true);
        else if (gen_suite->parsed())
            run_gen_suite(gs, true);
        else if (estimate->parsed())
            run_estimate(es, true);
        else if (train->parsed())
            run_train(tr, true);
        else if (quantify->parsed())
            run_quantify(qt, true);
        else if (select->parsed())
            run_select(se, true);
        else if (replay->parsed())
            run_replay(replay_manifest, replay_out);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
