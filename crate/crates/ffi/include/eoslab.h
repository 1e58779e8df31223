#ifndef EOSLAB_H
#define EOSLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum EoslabStatus {
  EOSLAB_STATUS_OK = 0,
  EOSLAB_STATUS_NULL_POINTER = 1,
  EOSLAB_STATUS_INVALID_ARGUMENT = 2,
  EOSLAB_STATUS_IO = 3,
  EOSLAB_STATUS_PARSE = 4,
  EOSLAB_STATUS_NOT_SEPARABLE = 5,
  EOSLAB_STATUS_DEGENERATE_OFFSET = 6,
  EOSLAB_STATUS_NO_CONVERGENCE = 7,
  EOSLAB_STATUS_INFEASIBLE = 8,
  EOSLAB_STATUS_NUMERICAL = 9,
  EOSLAB_STATUS_OUT_OF_RANGE = 10,
  EOSLAB_STATUS_PANIC = 11,
} EoslabStatus;

typedef enum EoslabLoss {
  EOSLAB_LOSS_LOGISTIC = 0,
  EOSLAB_LOSS_EXPONENTIAL = 1,
} EoslabLoss;

typedef enum EoslabTermination {
  EOSLAB_TERMINATION_COMPLETED = 0,
  EOSLAB_TERMINATION_OVERFLOW = 1,
  EOSLAB_TERMINATION_NON_FINITE = 2,
} EoslabTermination;

typedef enum EoslabMode {
  EOSLAB_MODE_EXPECT_EOS = 0,
  EOSLAB_MODE_EXPECT_STABLE = 1,
  EOSLAB_MODE_EXP_DIVERGENCE = 2,
} EoslabMode;

typedef struct EoslabDataset EoslabDataset;

typedef struct EoslabGeometry EoslabGeometry;

typedef struct EoslabReport EoslabReport;

typedef struct EoslabTrajectory EoslabTrajectory;

// Scalar diagnostics of one recorded step. `hess_top` is NaN when the
// Hessian diagnostic was not computed.
typedef struct EoslabRecord {
  uint64_t t;
  double loss;
  double grad_norm;
  double proj_mm;
  double ns_norm;
  double ns_sign;
  double g_val;
  double h_val;
  double eff_step;
  double hess_top;
} EoslabRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *eoslab_last_error(void);

// Library version as a static NUL-terminated string.
const char *eoslab_version(void);

// The two-point dataset with margin `gamma`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum EoslabStatus eoslab_dataset_two_point(double gamma, struct EoslabDataset **out);

// A seeded synthetic dataset with `n` points in `d` dimensions and hard margin `margin`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum EoslabStatus eoslab_dataset_generate(size_t n,
                                          size_t d,
                                          double margin,
                                          uint64_t seed,
                                          struct EoslabDataset **out);

// A dataset from `n` row-major rows of length `d` and labels in {-1, +1}.
//
// # Safety
// `rows` must point to `n * d` doubles, `labels` to `n` bytes, `name` to a
// NUL-terminated string or be null, and `out` to writable storage.
enum EoslabStatus eoslab_dataset_from_rows(const char *name,
                                           const double *rows,
                                           const int8_t *labels,
                                           size_t n,
                                           size_t d,
                                           struct EoslabDataset **out);

// A dataset read from a CSV file with a header and a label column.
//
// # Safety
// `path` and `label_column` must be NUL-terminated strings and `out` must
// point to writable storage.
enum EoslabStatus eoslab_dataset_load_csv(const char *path,
                                          const char *label_column,
                                          struct EoslabDataset **out);

// Number of samples, or 0 for a null handle.
//
// # Safety
// `ds` must be null or a live dataset handle.
size_t eoslab_dataset_n(const struct EoslabDataset *ds);

// Feature dimension, or 0 for a null handle.
//
// # Safety
// `ds` must be null or a live dataset handle.
size_t eoslab_dataset_d(const struct EoslabDataset *ds);

// # Safety
// `ds` must be null or a handle not yet freed.
void eoslab_dataset_free(struct EoslabDataset *ds);

// Solves the hard-margin SVM and the complement geometry.
//
// With `lenient` nonzero a degenerate margin offset is not an error: the
// geometry is returned with a NaN offset.
//
// # Safety
// `ds` must be a live dataset handle and `out` must point to writable storage.
enum EoslabStatus eoslab_geometry_solve(const struct EoslabDataset *ds,
                                        bool lenient,
                                        struct EoslabGeometry **out);

// Max margin, or NaN for a null handle.
//
// # Safety
// `geo` must be null or a live geometry handle.
double eoslab_geometry_gamma(const struct EoslabGeometry *geo);

// Margin offset `b`: infinite for a trivial complement, NaN when degenerate.
//
// # Safety
// `geo` must be null or a live geometry handle.
double eoslab_geometry_offset_b(const struct EoslabGeometry *geo);

// Number of support vectors, or 0 for a null handle.
//
// # Safety
// `geo` must be null or a live geometry handle.
size_t eoslab_geometry_support_len(const struct EoslabGeometry *geo);

// Copies the minimum-norm separator into `buf`, which must hold `d` doubles.
//
// # Safety
// `geo` must be a live geometry handle and `buf` must point to `len` doubles.
enum EoslabStatus eoslab_geometry_w_hat(const struct EoslabGeometry *geo, double *buf, size_t len);

// Copies the 0-based support indices into `buf`.
//
// # Safety
// `geo` must be a live geometry handle and `buf` must point to `len` elements.
enum EoslabStatus eoslab_geometry_support(const struct EoslabGeometry *geo,
                                          size_t *buf,
                                          size_t len);

// # Safety
// `geo` must be null or a handle not yet freed.
void eoslab_geometry_free(struct EoslabGeometry *geo);

// Runs `steps` steps of constant-stepsize GD from `w0` (zero when null).
//
// An overflowing run still succeeds; its termination is reported by
// [`eoslab_trajectory_termination`].
//
// # Safety
// `ds` and `geo` must be live handles for the same data, `w0` must be null
// or point to `d` doubles, and `out` must point to writable storage.
enum EoslabStatus eoslab_gd_run(const struct EoslabDataset *ds,
                                const struct EoslabGeometry *geo,
                                enum EoslabLoss loss,
                                double eta,
                                uint64_t steps,
                                const double *w0,
                                struct EoslabTrajectory **out);

// Number of recorded steps, or 0 for a null handle.
//
// # Safety
// `traj` must be null or a live trajectory handle.
size_t eoslab_trajectory_len(const struct EoslabTrajectory *traj);

// Scalar diagnostics of the `index`-th record.
//
// # Safety
// `traj` must be a live trajectory handle and `out` must point to writable storage.
enum EoslabStatus eoslab_trajectory_record(const struct EoslabTrajectory *traj,
                                           size_t index,
                                           struct EoslabRecord *out);

// How the run ended, and the step at which it stopped early (0 if it completed).
//
// # Safety
// `traj` must be a live trajectory handle; `kind` and `step` must point to writable storage.
enum EoslabStatus eoslab_trajectory_termination(const struct EoslabTrajectory *traj,
                                                enum EoslabTermination *kind,
                                                uint64_t *step);

// Writes the per-step scalar diagnostics as CSV.
//
// # Safety
// `traj` must be a live trajectory handle and `path` a NUL-terminated string.
enum EoslabStatus eoslab_trajectory_save_csv(const struct EoslabTrajectory *traj, const char *path);

// # Safety
// `traj` must be null or a handle not yet freed.
void eoslab_trajectory_free(struct EoslabTrajectory *traj);

// Runs every check that applies to `traj` under `mode`.
//
// # Safety
// `ds`, `geo` and `traj` must be live handles from the same data and `out`
// must point to writable storage.
enum EoslabStatus eoslab_verify(const struct EoslabDataset *ds,
                                const struct EoslabGeometry *geo,
                                const struct EoslabTrajectory *traj,
                                enum EoslabMode mode,
                                struct EoslabReport **out);

// Whether every check passed; false for a null handle.
//
// # Safety
// `report` must be null or a live report handle.
bool eoslab_report_passed(const struct EoslabReport *report);

// Number of checks run.
//
// # Safety
// `report` must be null or a live report handle.
size_t eoslab_report_len(const struct EoslabReport *report);

// The report as pretty JSON, owned by the handle.
//
// # Safety
// `report` must be null or a live report handle.
const char *eoslab_report_json(const struct EoslabReport *report);

// # Safety
// `report` must be null or a handle not yet freed.
void eoslab_report_free(struct EoslabReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EOSLAB_H */
