/* C interface to the shuffled-order transformer library.
 *
 * Every function returns sg_status; on failure sg_last_error() holds a
 * message for the calling thread. Handles are opaque and freed with their
 * sg_*_free function (NULL is accepted). Configuration crossing this
 * boundary is JSON text; token/position buffers are caller-allocated.
 *
 * Probabilities are over data tokens (the reserved begin-of-sequence id
 * never appears in output), normalised after temperature scaling.
 */
#ifndef SIGMA_GPT_H
#define SIGMA_GPT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sg_status {
    SG_OK = 0,
    SG_ERR_ARG = 1,     /* invalid argument, bad config, call in a bad state */
    SG_ERR_RUNTIME = 2, /* I/O trouble or numeric failure */
} sg_status;

/* Message for the calling thread's most recent failure; "" if none yet. */
const char* sg_last_error(void);

/* Caps the linear-algebra worker pool; values below 1 clamp to 1. */
void sg_set_threads(int n);

/* --- orders ------------------------------------------------------------ */

/* out receives n entries. */
sg_status sg_identity_order(uint32_t n, uint32_t* out);
/* Midpoint-subdivision order: middle first, then quarters, recursively. */
sg_status sg_fractal_order(uint32_t n, uint32_t* out);
sg_status sg_random_order(uint32_t n, uint64_t seed, uint32_t* out);

/* Probability a training sequence keeps left-to-right order at this step:
 * c0 * (1 - step / total_steps). */
sg_status sg_curriculum_fraction(uint64_t step, uint64_t total_steps, double c0, double* out);

/* --- datasets ----------------------------------------------------------- */

typedef struct sg_dataset sg_dataset;

/* task_json: {"task":"product"|"step"|"perm"|"walk"|"maze", ...parameters}.
 * Row i derives from (seed, i), so the triple regenerates the same bytes. */
sg_status sg_dataset_generate(const char* task_json, uint64_t count, uint64_t seed,
                              sg_dataset** out);
sg_status sg_dataset_read(const char* path, sg_dataset** out);
sg_status sg_dataset_write(const sg_dataset* data, const char* path);
/* Generate and write in one step, with a "<path>.meta.json" sidecar. */
sg_status sg_dataset_generate_file(const char* task_json, uint64_t count, uint64_t seed,
                                   const char* path);
/* Any out pointer may be NULL. */
sg_status sg_dataset_info(const sg_dataset* data, uint32_t* vocab_size, uint32_t* seq_len,
                          uint64_t* count);
/* Copies row index into out (seq_len entries). */
sg_status sg_dataset_row(const sg_dataset* data, uint64_t index, uint16_t* out);
void sg_dataset_free(sg_dataset* data);

/* --- models ------------------------------------------------------------- */

typedef struct sg_model sg_model;

/* model_json holds the model configuration (vocab_size, max_len, d_model,
 * n_layers, n_heads, d_ff, ...); weights are drawn from init_seed. */
sg_status sg_model_create(const char* model_json, uint64_t init_seed, sg_model** out);
sg_status sg_model_load(const char* path, sg_model** out);
sg_status sg_model_save(const sg_model* model, const char* path);
sg_status sg_model_info(const sg_model* model, uint32_t* vocab_size, uint32_t* max_len,
                        uint64_t* n_params);
/* Trains in place. train_json holds the training configuration (steps,
 * batch_size, lr, order_mode, seed, ...; the seed is mandatory). val_data
 * may be NULL. log_path: NULL = silent, "-" = stdout, else a file that
 * receives one line per logged step. Sessions already created from this
 * model see the new weights after their next reset. */
sg_status sg_model_train(sg_model* model, const sg_dataset* train_data,
                         const sg_dataset* val_data, const char* train_json,
                         const char* log_path, double* out_final_loss,
                         double* out_final_val_nll);
/* exp(mean per-token negative log-likelihood), one decode order per row drawn
 * by order_mode: "ltr" | "random" | "fractal". */
sg_status sg_model_perplexity(sg_model* model, const sg_dataset* data, const char* order_mode,
                              uint64_t seed, uint32_t batch_size, double* out);
void sg_model_free(sg_model* model);

/* --- decode sessions ---------------------------------------------------- */

/* A session decodes one sequence at a time: it holds a growing set of
 * committed (position, token) pairs and answers conditional queries given
 * exactly that set. Transformer sessions keep a key/value cache, so cost is
 * one slot per query rather than one full pass. */
typedef struct sg_session sg_session;

/* seq_len 0 means the model's max_len. The session shares the model. */
sg_status sg_session_from_model(const sg_model* model, uint32_t seq_len, sg_session** out);
sg_status sg_session_from_checkpoint(const char* path, uint32_t seq_len, sg_session** out);
/* Exact oracle for a task law: closed-form conditionals for product and
 * perm at any T, enumerated support tables for the rest (small T only). */
sg_status sg_session_from_task(const char* task_json, sg_session** out);
sg_status sg_session_info(const sg_session* session, uint32_t* seq_len, uint32_t* data_vocab);
void sg_session_free(sg_session* session);

/* pos/tok are parallel arrays of length n. reset starts a fresh decode
 * conditioned on the given prompt; append commits further tokens. */
sg_status sg_session_reset(sg_session* session, const uint32_t* pos, const uint16_t* tok,
                           size_t n);
sg_status sg_session_append(sg_session* session, const uint32_t* pos, const uint16_t* tok,
                            size_t n);
/* One conditional per queried position given the committed set only; out is
 * row-major n * data_vocab. */
sg_status sg_session_query(sg_session* session, const uint32_t* positions, size_t n,
                           double temperature, double* out);
/* out[t] = P(tok[t] at pos[t] | committed set + pairs 0..t-1), in one pass. */
sg_status sg_session_chain(sg_session* session, const uint32_t* pos, const uint16_t* tok,
                           size_t n, double temperature, double* out);

/* --- decoding ----------------------------------------------------------- */

/* Resets the session to the prompt, then samples one open position per model
 * pass along order_mode ("ltr" | "random" | "fractal"; the order for "random"
 * derives from seed). out_sequence receives all seq_len tokens; out_log_prob
 * (optional) the summed log probability of the generated tokens. */
sg_status sg_generate(sg_session* session, const uint32_t* known_pos, const uint16_t* known_tok,
                      size_t n_known, const char* order_mode, double temperature, uint64_t seed,
                      uint16_t* out_sequence, double* out_log_prob);

/* Burst decoding: each round proposes a token at every open position in one
 * pass, scores the proposals under n_orders random evaluation orders and
 * commits the longest accepted run (never fewer than one token). out_rounds
 * (optional) receives the round count; trace_csv_path (optional) a per-round
 * trace with header round,n_open,n_orders,accepted,chosen_order_index. */
sg_status sg_burst(sg_session* session, const uint32_t* known_pos, const uint16_t* known_tok,
                   size_t n_known, uint32_t n_orders, double temperature, int shared_noise,
                   uint64_t seed, uint16_t* out_sequence, uint32_t* out_rounds,
                   const char* trace_csv_path);

/* Conditional density at every queried position given the prompt, computed in
 * one parallel pass; out is row-major n_queries * data_vocab. */
sg_status sg_density(sg_session* session, const uint32_t* known_pos, const uint16_t* known_tok,
                     size_t n_known, const uint32_t* queries, size_t n_queries,
                     double temperature, double* out);

/* Max minus min log-likelihood of the sequence across n_orders random
 * factorisation orders. Zero (to rounding) for exact conditionals. */
sg_status sg_chain_rule_spread(sg_session* session, const uint16_t* sequence, size_t len,
                               uint32_t n_orders, uint64_t seed, double* out_spread);

/* --- evaluation harnesses ----------------------------------------------- */

/* Solves n_mazes fresh mazes and scores the paths. layout: "solved" (prompt =
 * scattered non-empty cells) or "concat" (prompt = unsolved first half).
 * use_burst 0 decodes one token per pass along ar_order; n_orders applies to
 * burst only. Any out pointer may be NULL. */
sg_status sg_maze_eval(const sg_model* model, uint32_t width, uint32_t height,
                       uint32_t barriers, const char* layout, uint32_t n_mazes, int use_burst,
                       uint32_t n_orders, double temperature, const char* ar_order,
                       uint64_t seed, double* out_valid_rate, double* out_optimal_rate,
                       double* out_mean_rounds, double* out_mean_steps);

/* Mean model passes and sample validity for burst decoding of the exact task
 * session at each entry of n_orders_list, plus a one-token-per-pass baseline
 * when include_autoregressive is nonzero. Writes CSV with header
 * method,n_orders,steps,quality. */
sg_status sg_oracle_burst_curve(const char* task_json, const uint32_t* n_orders_list,
                                size_t n_configs, uint32_t n_samples,
                                int include_autoregressive, const char* ar_order,
                                double temperature, uint64_t seed, const char* csv_path);

/* --- analytic oracles --------------------------------------------------- */

/* Lazy random walk: steps are -1/0/+1 with probabilities p_move/p_stay/p_move.
 * The pmf of the altitude after n_steps steps from x0 lands in out_p (cap
 * entries available; fails if the pmf is longer). *out_len receives the pmf
 * length and *out_min the altitude of entry 0. */
sg_status sg_walk_forward(double p_move, double p_stay, int32_t x0, uint32_t n_steps,
                          int32_t* out_min, double* out_p, size_t cap, size_t* out_len);
/* Posterior pmf of the altitude at time t1 given altitude x_t2 at t2 >= t1,
 * with the start uniform over starts. */
sg_status sg_walk_backward(const int32_t* starts, size_t n_starts, double p_move, double p_stay,
                           uint32_t t1, uint32_t t2, int32_t x_t2, int32_t* out_min,
                           double* out_p, size_t cap, size_t* out_len);

/* P(k distinct classes from T uniform draws over T classes); out receives
 * T + 1 entries, index k. */
sg_status sg_class_count_pmf(uint32_t T, double* out);
/* Expected number of classes missed by T uniform draws: T ((T-1)/T)^T. */
sg_status sg_expected_incoherent(uint32_t T, double* out);
/* Simulated rounds to finish the permutation task under perfect conditionals
 * when every round guesses all remaining positions at once. */
sg_status sg_ideal_permutation_rounds(uint32_t T, uint64_t seed, uint32_t n_sims,
                                      double* out_mean, double* out_std);

#ifdef __cplusplus
}
#endif

#endif /* SIGMA_GPT_H */
