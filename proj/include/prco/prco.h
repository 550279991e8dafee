/* Public C API for the PRCO training laboratory.
 *
 * All functions return PRCO_OK (0) on success or a negative status code on
 * failure; prco_last_error() describes the most recent failure on the
 * calling thread. Handles are opaque and must be released with their
 * destroy function. NULL argument misuse yields PRCO_ERR_INVALID_ARGUMENT.
 */
#ifndef PRCO_H
#define PRCO_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined _WIN32
#define PRCO_API __declspec(dllexport)
#else
#define PRCO_API __attribute__((visibility("default")))
#endif

typedef enum prco_status {
  PRCO_OK = 0,
  PRCO_ERR_INVALID_ARGUMENT = -1, /* NULL handles, bad buffers */
  PRCO_ERR_CONFIG = -2,           /* inconsistent or out-of-range configuration */
  PRCO_ERR_INPUT = -3,            /* unreadable or malformed files / values */
  PRCO_ERR_NUMERIC = -4,          /* non-finite values aborted an update */
  PRCO_ERR_INTERNAL = -5
} prco_status;

typedef struct prco_config prco_config;
typedef struct prco_params prco_params;

/* Message for the last failure on this thread; never NULL. */
PRCO_API const char* prco_last_error(void);

/* ---- configuration ---------------------------------------------------- */

/* Fresh config with the built-in desk-scale defaults. */
PRCO_API prco_status prco_config_create(prco_config** out);
/* Merges a key=value config file (later values win). */
PRCO_API prco_status prco_config_load_file(prco_config* cfg, const char* path);
/* Applies one "section.key=value" assignment. */
PRCO_API prco_status prco_config_set(prco_config* cfg, const char* assignment);
/* Serializes the current key/value state; caller frees with prco_string_free. */
PRCO_API prco_status prco_config_dump(const prco_config* cfg, char** out);
PRCO_API void prco_config_destroy(prco_config* cfg);

/* ---- training --------------------------------------------------------- */

/* Runs the configured training; writes metrics logs, params and checkpoint
 * under out_dir (see README for the file set). resume_checkpoint may be NULL
 * to start fresh. */
PRCO_API prco_status prco_train(const prco_config* cfg, const char* out_dir,
                                const char* resume_checkpoint);

/* ---- parameters ------------------------------------------------------- */

PRCO_API prco_status prco_params_load(const char* path, prco_params** out);
PRCO_API prco_status prco_params_info(const prco_params* params, uint32_t* vocab_size,
                                      uint32_t* feature_dim, uint64_t* version);
PRCO_API void prco_params_destroy(prco_params* params);

/* ---- evaluation and diagnostics ---------------------------------------- */

/* Greedy accuracy of the dual-role pipeline over num_instances held-out
 * instances derived from seed. */
PRCO_API prco_status prco_eval_greedy(const prco_params* params, uint32_t num_instances,
                                      uint64_t seed, double* accuracy);

/* Sampled pass@k: draws samples_per_question rollouts per question at the
 * given temperature/top_p, then fills pass_at_k[i] for each ks[i]. */
PRCO_API prco_status prco_eval_pass_at_k(const prco_params* params, uint32_t num_instances,
                                         uint32_t samples_per_question, double temperature,
                                         double top_p, uint64_t seed, const uint32_t* ks,
                                         size_t num_ks, double* pass_at_k);

/* Unbiased pass@k estimator from per-question (n, c) pairs. */
PRCO_API prco_status prco_pass_at_k(const uint32_t* n, const uint32_t* c, size_t num_questions,
                                    uint32_t k, double* out);

/* Greedy error-category rates over num_instances held-out instances:
 * rates[0..3] = correct, perception, reasoning, other. */
PRCO_API prco_status prco_diagnose(const prco_params* params, uint32_t num_instances,
                                   uint64_t seed, double rates[4]);

/* Group-size sweep driven by [sweep] keys in the config; one training run
 * per combination, summary written to out_dir/sweep_results.csv. */
PRCO_API prco_status prco_sweep(const prco_config* cfg, const char* out_dir);

/* ---- instances --------------------------------------------------------- */

/* JSON record of the instance generated from seed under the config's
 * environment; caller frees with prco_string_free. */
PRCO_API prco_status prco_instance_json(const prco_config* cfg, uint64_t seed, char** out);

PRCO_API void prco_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* PRCO_H */
