/*
 * gradsort C API.
 *
 * Arranges n vectors on a WxH grid (W*H == n) so that neighboring cells hold
 * similar vectors, by gradient-based learning of a soft permutation matrix or
 * by one of the baseline methods.
 *
 * Every fallible call returns a gs_status. On failure a message is available
 * from gs_last_error() until the next failing call on the same thread.
 * Objects returned through out-parameters are owned by the caller and must be
 * released with the matching *_free function.
 *
 * Permutations use the cell-to-input convention: entry c is the index of the
 * input vector placed in grid cell c (cells are numbered row-major).
 */
#ifndef GRADSORT_H
#define GRADSORT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(GRADSORT_BUILDING)
#    define GS_API __declspec(dllexport)
#  else
#    define GS_API __declspec(dllimport)
#  endif
#else
#  define GS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gs_status {
  GS_OK = 0,
  GS_ERR_USAGE = 1,   /* bad arguments or configuration */
  GS_ERR_DATA = 2,    /* malformed, degenerate or inconsistent data */
  GS_ERR_NUMERIC = 3  /* overflow or non-finite values during computation */
} gs_status;

typedef struct gs_dataset gs_dataset;
typedef struct gs_results gs_results;

GS_API const char* gs_version(void);
GS_API const char* gs_last_error(void);
/* "usage", "dimension", "data", "numeric", "unsupported" or "internal". */
GS_API const char* gs_last_error_kind(void);
GS_API void gs_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

GS_API gs_status gs_dataset_gen_colors(size_t n, uint64_t seed, gs_dataset** out);
GS_API gs_status gs_dataset_load_csv(const char* path, gs_dataset** out);
/* Copies n*d row-major values. */
GS_API gs_status gs_dataset_from_array(const double* values, size_t n, size_t d, gs_dataset** out);
GS_API gs_status gs_dataset_save_csv(const gs_dataset* ds, const char* path);
GS_API size_t gs_dataset_rows(const gs_dataset* ds);
GS_API size_t gs_dataset_cols(const gs_dataset* ds);
/* Copies the row-major values into out (len must be rows*cols). */
GS_API gs_status gs_dataset_values(const gs_dataset* ds, double* out, size_t len);
GS_API void gs_dataset_free(gs_dataset* ds);

/* ---- sorting ----------------------------------------------------------- */

/* Called once per training step for the gradient-based methods. */
typedef void (*gs_progress_fn)(void* user, size_t step, double alpha, double nbr, double s, double p,
                               double total);

/*
 * method: gradsort | gradsort-lowrank | gradsort-softsort | som | random | 2opt
 * config_json: NULL or a JSON object whose keys are configuration field names.
 * trace_stride: keep every k-th loss trace record in the results (0 = auto).
 */
GS_API gs_status gs_sort(const gs_dataset* ds, const char* method, size_t grid_w, size_t grid_h,
                         const char* config_json, size_t trace_stride, gs_progress_fn progress,
                         void* user, gs_results** out);

GS_API gs_status gs_results_parse(const char* json_text, gs_results** out);
GS_API gs_status gs_results_load(const char* path, gs_results** out);
GS_API gs_status gs_results_save(const gs_results* r, const char* path);
/* Pretty-printed JSON; release with gs_string_free. */
GS_API gs_status gs_results_to_json(const gs_results* r, char** out);
GS_API size_t gs_results_size(const gs_results* r);
GS_API gs_status gs_results_permutation(const gs_results* r, size_t* out, size_t len);
GS_API gs_status gs_results_grid(const gs_results* r, size_t* grid_w, size_t* grid_h);
GS_API gs_status gs_results_q_nbr(const gs_results* r, double* q_nbr);
GS_API void gs_results_free(gs_results* r);

/* ---- evaluation -------------------------------------------------------- */

/*
 * Recomputes the neighborhood quality of the stored permutation. Returns
 * GS_ERR_DATA when it differs from the stored q_nbr by more than 1e-9; the
 * output values are filled in either way.
 */
GS_API gs_status gs_eval(const gs_dataset* ds, const gs_results* r, double* recomputed_q_nbr,
                         double* stored_q_nbr);

/* Exhaustive optimum for n <= 9; JSON report via out. */
GS_API gs_status gs_oracle(const gs_dataset* ds, size_t grid_w, size_t grid_h, char** out);

/*
 * Finite-difference check of every loss term and generator. inject_fault != 0
 * deliberately breaks one backward rule (negative control). JSON report via out.
 */
GS_API gs_status gs_gradcheck(uint64_t seed, size_t points, int inject_fault, char** out);

/* ---- rendering --------------------------------------------------------- */

/* Binary PPM (P6) of an RGB dataset arranged by order. */
GS_API gs_status gs_render_ppm(const gs_dataset* ds, const size_t* order, size_t n, size_t grid_w,
                               size_t grid_h, size_t cell_px, const char* path);

#ifdef __cplusplus
}
#endif

#endif /* GRADSORT_H */
