/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef CARTAN3_H
#define CARTAN3_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum Cartan3Status {
  CARTAN3_STATUS_OK = 0,
  CARTAN3_STATUS_INVALID_INPUT = 1,
  CARTAN3_STATUS_DOMAIN = 2,
  CARTAN3_STATUS_NUMERICAL = 3,
  CARTAN3_STATUS_BUDGET = 4,
  CARTAN3_STATUS_NON_FINITE = 5,
  CARTAN3_STATUS_SAMPLER = 6,
  CARTAN3_STATUS_NULL_POINTER = 7,
  CARTAN3_STATUS_PANIC = 8,
} Cartan3Status;

/*
 Which realization a matrix argument refers to.
 */
typedef enum Cartan3Domain {
  CARTAN3_DOMAIN_BOUNDED = 0,
  CARTAN3_DOMAIN_SIEGEL = 1,
} Cartan3Domain;

typedef enum Cartan3Action {
  CARTAN3_ACTION_ELLIPTIC = 0,
  CARTAN3_ACTION_HYPERBOLIC = 1,
  CARTAN3_ACTION_PARABOLIC = 2,
} Cartan3Action;

typedef enum Cartan3Method {
  CARTAN3_METHOD_AUTO = 0,
  CARTAN3_METHOD_REDUCED = 1,
  CARTAN3_METHOD_FULL = 2,
} Cartan3Method;

/*
 A parsed symbol.
 */
typedef struct Cartan3Symbol Cartan3Symbol;

/*
 A table of Toeplitz eigenvalues.
 */
typedef struct Cartan3Table Cartan3Table;

/*
 Sampling and quadrature settings; `workers = 0` picks the default.
 */
typedef struct Cartan3RunOptions {
  uint64_t mc_samples;
  uint64_t seed;
  uint32_t workers;
  uint32_t quad_order;
} Cartan3RunOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *cartan3_version(void);

/*
 Message for the most recent failure on this thread, or null. The pointer stays valid
 until the next failing call on the same thread.
 */
const char *cartan3_last_error_message(void);

/*
 `Γ_Ω(λ)` for the cone of `n × n` positive matrices.

 # Safety
 `out` must be a valid pointer to a double.
 */
enum Cartan3Status cartan3_multigamma(size_t n, double lambda, double *out);

/*
 Density of the weighted probability measure at `z`.

 # Safety
 `z` must hold `2·n·n` doubles and `out` must be valid.
 */
enum Cartan3Status cartan3_weight_density(enum Cartan3Domain domain,
                                          size_t n,
                                          double lambda,
                                          const double *z,
                                          double *out);

/*
 Weighted Bergman kernel `K_λ(z, w)`.

 # Safety
 `z` and `w` must hold `2·n·n` doubles; `out_re`, `out_im` must be valid.
 */
enum Cartan3Status cartan3_bergman_kernel(enum Cartan3Domain domain,
                                          size_t n,
                                          double lambda,
                                          const double *z,
                                          const double *w,
                                          double *out_re,
                                          double *out_im);

/*
 Moment map of `action` at `z`. Writes 1 value for the elliptic and hyperbolic actions and
 `n·n` row-major values for the parabolic one; `*written` receives the count. Fails with
 `InvalidInput` if `capacity` is too small.

 # Safety
 `z` must hold `2·n·n` doubles, `out` must hold `capacity` doubles, `written` must be valid.
 */
enum Cartan3Status cartan3_moment(enum Cartan3Action action,
                                  size_t n,
                                  const double *z,
                                  double *out,
                                  size_t capacity,
                                  size_t *written);

/*
 Parses a symbol from its JSON description.

 # Safety
 `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum Cartan3Status cartan3_symbol_from_json(const char *json, struct Cartan3Symbol **out);

/*
 Evaluates a symbol at a point of its own domain.

 # Safety
 `symbol` must come from [`cartan3_symbol_from_json`]; `z` must hold `2·n·n` doubles.
 */
enum Cartan3Status cartan3_symbol_eval(const struct Cartan3Symbol *symbol,
                                       size_t n,
                                       const double *z,
                                       double *out_re,
                                       double *out_im);

/*
 Releases a symbol. Null is ignored.

 # Safety
 `symbol` must come from [`cartan3_symbol_from_json`] and not be used afterwards.
 */
void cartan3_symbol_free(struct Cartan3Symbol *symbol);

/*
 Eigenvalues `c_α` for every signature of length `n` and degree `<= max_degree`.

 # Safety
 `symbol` must be a live handle; `options` and `out` must be valid pointers.
 */
enum Cartan3Status cartan3_c_table(const struct Cartan3Symbol *symbol,
                                   size_t n,
                                   double lambda,
                                   uint32_t max_degree,
                                   enum Cartan3Method method,
                                   const struct Cartan3RunOptions *options,
                                   struct Cartan3Table **out);

/*
 Number of rows of a table; 0 for null.

 # Safety
 `table` must be null or a live handle.
 */
size_t cartan3_table_len(const struct Cartan3Table *table);

/*
 Row `index`: the signature (`n` entries into `alpha`, which holds `alpha_capacity`), the
 value and its standard error.

 # Safety
 `table` must be a live handle and all output pointers valid.
 */
enum Cartan3Status cartan3_table_entry(const struct Cartan3Table *table,
                                       size_t index,
                                       uint32_t *alpha,
                                       size_t alpha_capacity,
                                       double *value_re,
                                       double *value_im,
                                       double *std_error);

/*
 The table as CSV text; release with [`cartan3_string_free`].

 # Safety
 `table` must be a live handle and `out` valid.
 */
enum Cartan3Status cartan3_table_csv(const struct Cartan3Table *table, char **out);

/*
 Releases a table. Null is ignored.

 # Safety
 `table` must come from [`cartan3_c_table`] and not be used afterwards.
 */
void cartan3_table_free(struct Cartan3Table *table);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not be used afterwards.
 */
void cartan3_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CARTAN3_H */
