#ifndef PACSIM_H
#define PACSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PacsimStatus {
  PACSIM_STATUS_OK = 0,
  PACSIM_STATUS_NULL_POINTER = 1,
  PACSIM_STATUS_INVALID_ARGUMENT = 2,
  // The Fock truncation drops more than the allowed tail mass.
  PACSIM_STATUS_TRUNCATION = 3,
  PACSIM_STATUS_RANGE = 4,
  // The joint state would exceed the amplitude budget.
  PACSIM_STATUS_BUDGET = 5,
  PACSIM_STATUS_IMPOSSIBLE_OUTCOME = 6,
  PACSIM_STATUS_PANIC = 7,
} PacsimStatus;

// Seed amplitude plus amplifier stages.
typedef struct PacsimChain PacsimChain;

// A conditional state as a weighted set of pure branches.
typedef struct PacsimEnsemble PacsimEnsemble;

// A pure state on one or more modes.
typedef struct PacsimState PacsimState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after success.
// The pointer stays valid until the next `pacsim_*` call on the thread.
const char *pacsim_last_error_message(void);

// Laguerre polynomial `L_m(x)`.
//
// # Safety
// `out` must be a valid pointer to a `double`.
enum PacsimStatus pacsim_laguerre(uint32_t m, double x, double *out);

// Default signal truncation for seed `alpha` and up to `m_max` added photons.
//
// # Safety
// `out` must be a valid pointer.
enum PacsimStatus pacsim_default_signal_dim(double alpha_re,
                                            double alpha_im,
                                            size_t m_max,
                                            size_t *out);

// # Safety
// `out` must be a valid pointer; the handle it receives is owned by the caller.
enum PacsimStatus pacsim_coherent_state(double alpha_re,
                                        double alpha_im,
                                        size_t dim,
                                        struct PacsimState **out);

// # Safety
// `out` must be a valid pointer; the handle it receives is owned by the caller.
enum PacsimStatus pacsim_fock_state(size_t n, size_t dim, struct PacsimState **out);

// Photon-added coherent state `|alpha, m>`; `dim = 0` picks the default truncation.
//
// # Safety
// `out` must be a valid pointer; the handle it receives is owned by the caller.
enum PacsimStatus pacsim_pacs_state(double alpha_re,
                                    double alpha_im,
                                    uint32_t m,
                                    size_t dim,
                                    struct PacsimState **out);

// `N`-mode W state on idlers of dimension `idler_dim`.
//
// # Safety
// `out` must be a valid pointer; the handle it receives is owned by the caller.
enum PacsimStatus pacsim_w_state(size_t n, size_t idler_dim, struct PacsimState **out);

// Total number of amplitudes.
//
// # Safety
// `state` must be a live handle and `out` a valid pointer.
enum PacsimStatus pacsim_state_dim(const struct PacsimState *state, size_t *out);

// # Safety
// `state` must be a live handle and `out` a valid pointer.
enum PacsimStatus pacsim_state_num_modes(const struct PacsimState *state, size_t *out);

// Copies the amplitudes into `buf` as interleaved `(re, im)` pairs.
// `len` is the buffer length in doubles and must equal `2 * dim`.
//
// # Safety
// `state` must be a live handle and `buf` must hold `len` doubles.
enum PacsimStatus pacsim_state_amplitudes(const struct PacsimState *state, double *buf, size_t len);

// # Safety
// `state` must be null or a handle not yet freed.
void pacsim_state_free(struct PacsimState *state);

// `|<a|b>|^2`.
//
// # Safety
// `a`, `b` must be live handles and `out` a valid pointer.
enum PacsimStatus pacsim_fidelity(const struct PacsimState *a,
                                  const struct PacsimState *b,
                                  double *out);

// Single-mode Wigner function `W(x, p)`, normalized so the vacuum peaks at `1/pi`.
//
// # Safety
// `state` must be a live handle and `out` a valid pointer.
enum PacsimStatus pacsim_wigner_point(const struct PacsimState *state,
                                      double x,
                                      double p,
                                      double *out);

// Chain with `n` stages of strengths `lambdas[0..n]`. `signal_dim = 0`
// picks the default truncation.
//
// # Safety
// `lambdas` must point to `n` doubles and `out` must be a valid pointer.
enum PacsimStatus pacsim_chain_new(double alpha_re,
                                   double alpha_im,
                                   const double *lambdas,
                                   size_t n,
                                   size_t idler_dim,
                                   size_t signal_dim,
                                   struct PacsimChain **out);

// # Safety
// `chain` must be a live handle and `out` a valid pointer.
enum PacsimStatus pacsim_chain_signal_dim(const struct PacsimChain *chain, size_t *out);

// # Safety
// `chain` must be null or a handle not yet freed.
void pacsim_chain_free(struct PacsimChain *chain);

// Joint signal + idler state after every stage.
//
// # Safety
// `chain` must be a live handle and `out` a valid pointer.
enum PacsimStatus pacsim_chain_run_full(const struct PacsimChain *chain, struct PacsimState **out);

// Pattern probability and conditional signal, measuring each idler after
// its stage. `pattern` is a string such as `"101"`, one character per stage.
//
// # Safety
// Handles and pointers must be valid; `pattern` must be NUL-terminated.
enum PacsimStatus pacsim_chain_run_sequential(const struct PacsimChain *chain,
                                              double eta,
                                              double dark_prob,
                                              const char *pattern,
                                              double *probability,
                                              struct PacsimEnsemble **ensemble);

// Conditions a joint state from [`pacsim_chain_run_full`] on a click pattern.
//
// # Safety
// Handles and pointers must be valid; `pattern` must be NUL-terminated.
enum PacsimStatus pacsim_condition(const struct PacsimState *joint,
                                   double eta,
                                   double dark_prob,
                                   const char *pattern,
                                   double *probability,
                                   struct PacsimEnsemble **ensemble);

// `<reference| rho |reference>` for the ensemble `rho`.
//
// # Safety
// Handles must be live and `out` a valid pointer.
enum PacsimStatus pacsim_ensemble_fidelity(const struct PacsimEnsemble *ensemble,
                                           const struct PacsimState *reference,
                                           double *out);

// # Safety
// `ensemble` must be a live handle and `out` a valid pointer.
enum PacsimStatus pacsim_ensemble_num_branches(const struct PacsimEnsemble *ensemble, size_t *out);

// # Safety
// `ensemble` must be null or a handle not yet freed.
void pacsim_ensemble_free(struct PacsimEnsemble *ensemble);

// Projects the signal of `joint` onto `reference`; returns the outcome
// probability and the normalized idler state.
//
// # Safety
// Handles and out pointers must be valid.
enum PacsimStatus pacsim_project_signal(const struct PacsimState *joint,
                                        const struct PacsimState *reference,
                                        double *probability,
                                        struct PacsimState **idlers);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PACSIM_H */
