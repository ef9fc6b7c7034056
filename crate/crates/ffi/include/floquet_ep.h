#ifndef FLOQUET_EP_H
#define FLOQUET_EP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FepStatus {
  FEP_STATUS_OK = 0,
  FEP_STATUS_NULL_POINTER = 1,
  FEP_STATUS_INVALID_ARGUMENT = 2,
  FEP_STATUS_CONFIG_ERROR = 3,
  FEP_STATUS_NUMERIC_ERROR = 4,
  FEP_STATUS_BUFFER_TOO_SMALL = 5,
  FEP_STATUS_PANIC = 6,
} FepStatus;

/**
 * Opaque periodic Hamiltonian handle.
 */
typedef struct FepHamiltonian FepHamiltonian;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fep_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL, or 0
 * when there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t fep_last_error_message(char *buf, size_t len);

/**
 * Builds a builtin model (`"longhi3"` or `"sqrt2"`) at signed frequency `omega`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum FepStatus fep_preset_new(const char *name,
                              double omega_cap,
                              double r0,
                              double omega,
                              struct FepHamiltonian **out);

/**
 * Builds the model described by an experiment configuration (JSON text) at
 * `+omega_abs` (`direction > 0`) or `-omega_abs` (`direction < 0`).
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum FepStatus fep_hamiltonian_from_config(const char *config_json,
                                           int32_t direction,
                                           struct FepHamiltonian **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `h` must be null or a handle returned by this library, not yet freed.
 */
void fep_hamiltonian_free(struct FepHamiltonian *h);

/**
 * Writes the Hilbert-space dimension of `h` to `dim`.
 *
 * # Safety
 * `h` must be a live handle and `dim` a valid pointer.
 */
enum FepStatus fep_hamiltonian_dim(const struct FepHamiltonian *h, size_t *dim);

/**
 * Folds `lambda` into `[-|omega|/2, |omega|/2)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FepStatus fep_fold(double lambda, double omega, double *out);

/**
 * Monodromy quasi-energies of `h` with default integrator settings.
 *
 * `quasi_energies` receives `dim` interleaved `(re, im)` pairs, sorted by
 * real part; `len` is its capacity in doubles and must be at least `2 * dim`.
 *
 * # Safety
 * `h` must be a live handle; `quasi_energies` must point to `len` writable
 * doubles; `defectivity` and `ep_flag` must be valid pointers.
 */
enum FepStatus fep_spectrum(const struct FepHamiltonian *h,
                            double *quasi_energies,
                            size_t len,
                            double *defectivity,
                            bool *ep_flag);

/**
 * Runs both circulation directions of an experiment configuration (JSON
 * text) and reports the 1-based dominant states (0 when undecided).
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; the outputs must be valid pointers.
 */
enum FepStatus fep_chirality(const char *config_json,
                             uint32_t *dominant_cw,
                             uint32_t *dominant_ccw,
                             bool *chiral);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLOQUET_EP_H */
