#ifndef SPLITSDE_H
#define SPLITSDE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SplitsdeStatus {
  SPLITSDE_STATUS_OK = 0,
  SPLITSDE_STATUS_NULL_POINTER = 1,
  SPLITSDE_STATUS_INVALID_INPUT = 2,
  SPLITSDE_STATUS_DOMAIN = 3,
  SPLITSDE_STATUS_SINGULARITY = 4,
  SPLITSDE_STATUS_DIVERGENCE = 5,
  SPLITSDE_STATUS_UNSUPPORTED = 6,
  SPLITSDE_STATUS_CONFIG = 7,
  SPLITSDE_STATUS_RUNTIME = 8,
  SPLITSDE_STATUS_IO = 9,
  SPLITSDE_STATUS_PANIC = 10,
} SplitsdeStatus;

/**
 * Linear multiplicative-noise problem.
 */
typedef struct SplitsdeLinearProblem SplitsdeLinearProblem;

/**
 * Wiener increments on a uniform grid.
 */
typedef struct SplitsdeWienerPath SplitsdeWienerPath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message on this thread, excluding the
 * terminating nul; 0 when the last call succeeded.
 */
size_t splitsde_last_error_length(void);

/**
 * Copies the last error message into `buf` (nul-terminated, truncated to
 * `len - 1` bytes). Returns the number of bytes written without the nul.
 *
 * # Safety
 * `buf` must point to `len` writable bytes.
 */
size_t splitsde_last_error_message(char *buf, size_t len);

/**
 * Builds a problem from row-major `dim × dim` matrices: `a`, then
 * `n_noise` noise operators packed back to back in `noise_ops`.
 *
 * # Safety
 * Pointers must reference arrays of the stated sizes; `out` must be writable.
 */
enum SplitsdeStatus splitsde_linear_problem_new(size_t dim,
                                                const double *a,
                                                size_t n_noise,
                                                const double *noise_ops,
                                                const double *y0,
                                                double t_end,
                                                struct SplitsdeLinearProblem **out);

/**
 * Builds a named preset: `scalar10`, `vec2x2:<weak01|weak001|strong>` or
 * `vecMxM:<m>`.
 *
 * # Safety
 * `name` must be a nul-terminated string; `out` must be writable.
 */
enum SplitsdeStatus splitsde_linear_problem_preset(const char *name,
                                                   struct SplitsdeLinearProblem **out);

/**
 * # Safety
 * `p` must come from a `splitsde_linear_problem_*` constructor or be null.
 */
void splitsde_linear_problem_free(struct SplitsdeLinearProblem *p);

/**
 * State dimension, 0 for a null handle.
 *
 * # Safety
 * `p` must be a live handle or null.
 */
size_t splitsde_linear_problem_dim(const struct SplitsdeLinearProblem *p);

/**
 * Number of noise operators, 0 for a null handle.
 *
 * # Safety
 * `p` must be a live handle or null.
 */
size_t splitsde_linear_problem_noise_dims(const struct SplitsdeLinearProblem *p);

/**
 * Draws a path of `n_steps` steps of size `dt` from `seed`. With `quiet`
 * set, all increments and the quadratic variation are zero.
 *
 * # Safety
 * `out` must be writable.
 */
enum SplitsdeStatus splitsde_path_generate(size_t dims,
                                           size_t n_steps,
                                           double dt,
                                           uint64_t seed,
                                           bool quiet,
                                           struct SplitsdeWienerPath **out);

/**
 * Sums `factor` consecutive increments into a new path.
 *
 * # Safety
 * `path` must be a live handle; `out` must be writable.
 */
enum SplitsdeStatus splitsde_path_coarsen(const struct SplitsdeWienerPath *path,
                                          size_t factor,
                                          struct SplitsdeWienerPath **out);

/**
 * # Safety
 * `p` must come from a `splitsde_path_*` constructor or be null.
 */
void splitsde_path_free(struct SplitsdeWienerPath *p);

/**
 * # Safety
 * `p` must be a live handle or null.
 */
size_t splitsde_path_n_steps(const struct SplitsdeWienerPath *p);

/**
 * Copies the main increments (row-major `n_steps × dims`) into `buf`.
 *
 * # Safety
 * `path` must be a live handle; `buf` must hold `len` doubles.
 */
enum SplitsdeStatus splitsde_path_increments(const struct SplitsdeWienerPath *path,
                                             double *buf,
                                             size_t len);

/**
 * One step of a linear scheme (`em`, `milstein`, `milstein_full`,
 * `ab_split`, `summative:<n>`, `iter:<k>`, `exact`) from `y` to `y_out`.
 *
 * # Safety
 * Handles must be live; `y` and `y_out` must hold the problem dimension.
 */
enum SplitsdeStatus splitsde_linear_step(const struct SplitsdeLinearProblem *problem,
                                         const struct SplitsdeWienerPath *path,
                                         size_t step,
                                         const char *scheme,
                                         const double *y,
                                         double *y_out);

/**
 * One step of a Coulomb scheme (`em`, `milstein`,
 * `coulomb_relax[:<sweeps>,<rule>]`, `coulomb_taylor[:<sweeps>,<rule>]`) on
 * `state = (v, mu, phi)`. `path` must have three noise dimensions.
 *
 * # Safety
 * `path` must be a live handle; `state` and `state_out` must hold 3 doubles.
 */
enum SplitsdeStatus splitsde_coulomb_step(const struct SplitsdeWienerPath *path,
                                          size_t step,
                                          const char *scheme,
                                          const double *state,
                                          double *state_out);

/**
 * `out = exp(a)` for a row-major `n × n` matrix.
 *
 * # Safety
 * `a` and `out` must hold `n * n` doubles.
 */
enum SplitsdeStatus splitsde_mat_exp(size_t n, const double *a, double *out);

/**
 * Runs an experiment described by `key=value` text and returns the report
 * in the configured format as a newly allocated string, released with
 * [`splitsde_string_free`]. Output and plot paths in the text are honoured
 * as well.
 *
 * # Safety
 * `config` must be a nul-terminated string; `report_out` must be writable.
 */
enum SplitsdeStatus splitsde_run_experiment(const char *config, char **report_out);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void splitsde_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPLITSDE_H */
