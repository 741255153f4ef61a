/* pidlab C API: partial information decomposition estimation.
 *
 * Every function that can fail returns a status code from the PIDLAB_E_*
 * family; 0 means success. On failure, pidlab_last_error() returns a
 * human-readable message for the calling thread. Out-parameters are written
 * only on success. Handles are opaque and must be released with their
 * matching _free function; strings returned through char** out-parameters are
 * released with pidlab_string_free.
 */
#ifndef PIDLAB_H
#define PIDLAB_H

#include <stdint.h>

#if defined(_WIN32)
#define PIDLAB_API
#else
#define PIDLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
    PIDLAB_OK = 0,
    PIDLAB_E_OTHER = 1,   /* unexpected failure */
    PIDLAB_E_INVALID = 2, /* bad arguments or malformed content */
    PIDLAB_E_IO = 3,      /* file problems */
    PIDLAB_E_NUMERIC = 4  /* estimator failed to converge */
};

/* library version string, static storage */
PIDLAB_API const char* pidlab_version(void);

/* message for the most recent failure on this thread, static storage */
PIDLAB_API const char* pidlab_last_error(void);

PIDLAB_API void pidlab_string_free(char* s);

/* ------------------------------------------------------------------ */
/* datasets                                                            */

typedef struct pidlab_features pidlab_features;  /* continuous paired views */
typedef struct pidlab_discrete pidlab_discrete;  /* categorized triples */

/* Sniffs the text header or the PIDF binary magic. */
PIDLAB_API int pidlab_features_load(const char* path, pidlab_features** out);
/* binary nonzero selects the PIDF encoding */
PIDLAB_API int pidlab_features_save(const pidlab_features* d, const char* path, int binary);
PIDLAB_API int pidlab_features_info(const pidlab_features* d, int64_t* n, int* d1, int* d2,
                                    int* classes);
PIDLAB_API void pidlab_features_free(pidlab_features* d);

PIDLAB_API int pidlab_discrete_load(const char* path, pidlab_discrete** out);
PIDLAB_API int pidlab_discrete_save(const pidlab_discrete* d, const char* path);
PIDLAB_API int pidlab_discrete_info(const pidlab_discrete* d, int64_t* n, int* k1, int* k2,
                                    int* classes);
PIDLAB_API void pidlab_discrete_free(pidlab_discrete* d);

/* ------------------------------------------------------------------ */
/* generators                                                          */

enum { PIDLAB_GATE_AND = 0, PIDLAB_GATE_OR = 1, PIDLAB_GATE_XOR = 2 };

PIDLAB_API int pidlab_gen_bitwise(int gate, int64_t n, uint64_t seed, pidlab_discrete** out);

enum {
    PIDLAB_GMM_CARTESIAN = 0,
    PIDLAB_GMM_POLAR_SIGNED = 1,
    PIDLAB_GMM_POLAR_STANDARD = 2
};
enum { PIDLAB_GMM_SOFT = 0, PIDLAB_GMM_HARD = 1 };

typedef struct pidlab_gmm_spec {
    double mean_norm; /* distance of the component means from the origin */
    double angle;     /* direction of the mean, radians in [0, pi/2] */
    int coords;       /* PIDLAB_GMM_* coordinate system */
    int labels;       /* soft: mixture component; hard: optimal classifier */
    int64_t n;
    uint64_t seed;
} pidlab_gmm_spec;

PIDLAB_API void pidlab_gmm_spec_init(pidlab_gmm_spec* spec);
PIDLAB_API int pidlab_gen_gmm(const pidlab_gmm_spec* spec, pidlab_features** out);

/* label sources for the latent-variable generator */
enum { PIDLAB_SRC_Z1 = 0, PIDLAB_SRC_Z2 = 1, PIDLAB_SRC_ZC = 2 };

#define PIDLAB_MAX_SOURCES 8

typedef struct pidlab_latent_spec {
    int latent_dim;
    double sigma;
    int out_dim; /* per modality */
    int n_sources;
    int source_which[PIDLAB_MAX_SOURCES];
    int source_half[PIDLAB_MAX_SOURCES]; /* nonzero keeps only the first half */
    double dropout;
    int64_t n;
    uint64_t seed;
} pidlab_latent_spec;

PIDLAB_API void pidlab_latent_spec_init(pidlab_latent_spec* spec);
PIDLAB_API int pidlab_gen_latent(const pidlab_latent_spec* spec, pidlab_features** out);

/* The bundled ten-dataset suite. Index order and names are fixed. */
typedef struct pidlab_suite pidlab_suite;

PIDLAB_API uint64_t pidlab_suite_default_seed(void);
PIDLAB_API int pidlab_suite_generate(uint64_t seed, int64_t train_n, int64_t val_n,
                                     pidlab_suite** out);
PIDLAB_API int pidlab_suite_count(const pidlab_suite* s);
/* static storage owned by the suite handle */
PIDLAB_API const char* pidlab_suite_name(const pidlab_suite* s, int index);
/* split 0 = train, 1 = val; the returned handle is an independent copy */
PIDLAB_API int pidlab_suite_features(const pidlab_suite* s, int index, int split,
                                     pidlab_features** out);
PIDLAB_API void pidlab_suite_free(pidlab_suite* s);

/* ------------------------------------------------------------------ */
/* estimation                                                          */

enum { PIDLAB_METHOD_CVX = 0, PIDLAB_METHOD_BATCH = 1 };
enum { PIDLAB_BASE_BITS = 0, PIDLAB_BASE_NATS = 1 };
enum { PIDLAB_DISC_CLUSTER = 0, PIDLAB_DISC_BINS = 1 };

typedef struct pidlab_estimate_opts {
    int method;
    int log_base;
    uint64_t seed;    /* clustering and batch-training streams */

    /* feature discretization (CVX path); zero keeps the default */
    int discretizer;  /* cluster: PCA + k-means; bins: fixed-range grid */
    int cluster_k;    /* default 20 */
    int pca_dim;      /* default 10 */
    int bins;         /* required when discretizer = bins */
    double bin_lo, bin_hi;

    /* exact-solver knobs; zero keeps the default */
    double step_size;
    long max_outer_iters;
    int ipf_iters;
    double ipf_tol;
    double objective_tol;

    /* batch-estimator knobs; zero keeps the default */
    int batch_m;
    int batch_epochs;
    int unimodal_epochs;
    double batch_lr;
    int sinkhorn_iters;
    int eval_batches;
} pidlab_estimate_opts;

PIDLAB_API void pidlab_estimate_opts_init(pidlab_estimate_opts* opts);

typedef struct pidlab_result pidlab_result;

PIDLAB_API int pidlab_estimate_features(const pidlab_features* d,
                                        const pidlab_estimate_opts* opts, pidlab_result** out);
/* The batch method one-hot encodes the categories first. */
PIDLAB_API int pidlab_estimate_discrete(const pidlab_discrete* d,
                                        const pidlab_estimate_opts* opts, pidlab_result** out);

PIDLAB_API int pidlab_result_values(const pidlab_result* r, double* red, double* u1, double* u2,
                                    double* syn, double* total_mi);
/* 1 converged, 0 not */
PIDLAB_API int pidlab_result_converged(const pidlab_result* r);
/* report JSON: method label, input path, row count, and per-view dims are
 * echoed into the inputs block */
PIDLAB_API int pidlab_result_report_json(const pidlab_result* r, const char* method,
                                         const char* input_path, int64_t n, int dim1, int dim2,
                                         char** out);
/* parses a report document back into a result handle */
PIDLAB_API int pidlab_result_from_report(const char* path, pidlab_result** out);
PIDLAB_API void pidlab_result_free(pidlab_result* r);

/* ------------------------------------------------------------------ */
/* fusion models                                                       */

enum {
    PIDLAB_FUSION_EARLY = 0,
    PIDLAB_FUSION_ADDITIVE = 1,
    PIDLAB_FUSION_ELEMENTWISE = 2,
    PIDLAB_FUSION_TENSOR = 3,
    PIDLAB_FUSION_UNIMODAL_X1 = 4,
    PIDLAB_FUSION_UNIMODAL_X2 = 5
};

/* kind index for a name like "tensor", or -1 */
PIDLAB_API int pidlab_fusion_kind(const char* name);
/* static name for a kind index, or NULL */
PIDLAB_API const char* pidlab_fusion_kind_name(int kind);

typedef struct pidlab_train_cfg {
    double lr;   /* default 1e-4 */
    int epochs;  /* default 100 */
    int batch;   /* default 128 */
    uint64_t seed;
} pidlab_train_cfg;

PIDLAB_API void pidlab_train_cfg_init(pidlab_train_cfg* cfg);

typedef struct pidlab_model pidlab_model;

PIDLAB_API int pidlab_train_fusion(int kind, const pidlab_features* train,
                                   const pidlab_features* val, const pidlab_train_cfg* cfg,
                                   pidlab_model** out, double* train_acc, double* val_acc);
PIDLAB_API int pidlab_model_save(const pidlab_model* m, const char* path);
PIDLAB_API int pidlab_model_load(const char* path, pidlab_model** out);
PIDLAB_API int pidlab_model_kind(const pidlab_model* m);
PIDLAB_API int pidlab_model_accuracy(const pidlab_model* m, const pidlab_features* d,
                                     double* out);
/* features copied, labels replaced by the model's predictions */
PIDLAB_API int pidlab_model_predict_dataset(const pidlab_model* m, const pidlab_features* d,
                                            pidlab_features** out);
/* predict -> discretize -> estimate on the prediction-labeled dataset */
PIDLAB_API int pidlab_quantify(const pidlab_model* m, const pidlab_features* d,
                               const pidlab_estimate_opts* opts, pidlab_result** out);
/* accuracy lost when the given modality (1 or 2) is mean-imputed */
PIDLAB_API int pidlab_robustness_drop(const pidlab_model* m, const pidlab_features* d,
                                      int modality, double* delta);
PIDLAB_API void pidlab_model_free(pidlab_model* m);

/* ------------------------------------------------------------------ */
/* model selection                                                     */

typedef struct pidlab_registry pidlab_registry;

PIDLAB_API int pidlab_registry_load(const char* path, pidlab_registry** out);
PIDLAB_API int pidlab_registry_count(const pidlab_registry* reg);
PIDLAB_API void pidlab_registry_free(pidlab_registry* reg);

/* nearest dataset by interaction profile, then its top-k models; returns the
 * selection report JSON */
PIDLAB_API int pidlab_select(const pidlab_registry* reg, const pidlab_result* query, int k,
                             char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* PIDLAB_H */
