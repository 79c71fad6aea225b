//! C ABI over `pacsim`.
//!
//! Every function returns a [`PacsimStatus`] and writes results through out
//! pointers. Objects are opaque handles created by `*_new`/constructor calls
//! and released with the matching `*_free`. On failure the message is kept
//! per thread and can be read with [`pacsim_last_error_message`].
//!
//! Complex numbers are passed as `(re, im)` pairs; amplitude buffers are
//! interleaved `re0, im0, re1, im1, ...`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pacsim::analysis::{w_state_in, wigner_point};
use pacsim::fock::{default_signal_dim, WeightedEnsemble};
use pacsim::special::laguerre;
use pacsim::{
    coherent_state, condition_on_pattern, fidelity_ensemble, fidelity_pure, fock_state, pacs_state, project_signal,
    run_chain_full, run_chain_sequential, ChainConfig, ClickPattern, DetectorModel, Error, PureState, StageParams, C64,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The Fock truncation drops more than the allowed tail mass.
    Truncation = 3,
    Range = 4,
    /// The joint state would exceed the amplitude budget.
    Budget = 5,
    ImpossibleOutcome = 6,
    Panic = 7,
}

/// A pure state on one or more modes.
pub struct PacsimState(PureState);

/// Seed amplitude plus amplifier stages.
pub struct PacsimChain(ChainConfig);

/// A conditional state as a weighted set of pure branches.
pub struct PacsimEnsemble(WeightedEnsemble);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

enum Failure {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PacsimStatus {
    match e {
        Error::Truncation { .. } => PacsimStatus::Truncation,
        Error::Range { .. } => PacsimStatus::Range,
        Error::DimensionBudget { .. } => PacsimStatus::Budget,
        Error::ImpossibleOutcome { .. } => PacsimStatus::ImpossibleOutcome,
        Error::InvalidArgument(_) | Error::SpaceMismatch(_) | Error::Fit(_) => PacsimStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PacsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            PacsimStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(format!("null pointer: {name}"));
            PacsimStatus::NullPointer
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_last_error(msg);
            PacsimStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            PacsimStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn write<T>(out: *mut T, name: &'static str, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn parse_pattern(p: *const c_char) -> Result<ClickPattern, Failure> {
    if p.is_null() {
        return Err(Failure::Null("pattern"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|e| Failure::Arg(format!("pattern is not UTF-8: {e}")))?;
    Ok(s.parse()?)
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next `pacsim_*` call on the thread.
#[no_mangle]
pub extern "C" fn pacsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Laguerre polynomial `L_m(x)`.
///
/// # Safety
/// `out` must be a valid pointer to a `double`.
#[no_mangle]
pub unsafe extern "C" fn pacsim_laguerre(m: u32, x: f64, out: *mut f64) -> PacsimStatus {
    guard(|| write(out, "out", laguerre(m, x)?))
}

/// Default signal truncation for seed `alpha` and up to `m_max` added photons.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pacsim_default_signal_dim(alpha_re: f64, alpha_im: f64, m_max: usize, out: *mut usize) -> PacsimStatus {
    guard(|| write(out, "out", default_signal_dim(C64::new(alpha_re, alpha_im), m_max)))
}

/// # Safety
/// `out` must be a valid pointer; the handle it receives is owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn pacsim_coherent_state(alpha_re: f64, alpha_im: f64, dim: usize, out: *mut *mut PacsimState) -> PacsimStatus {
    guard(|| {
        let s = coherent_state(C64::new(alpha_re, alpha_im), dim)?;
        write(out, "out", boxed(PacsimState(s)))
    })
}

/// # Safety
/// `out` must be a valid pointer; the handle it receives is owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn pacsim_fock_state(n: usize, dim: usize, out: *mut *mut PacsimState) -> PacsimStatus {
    guard(|| write(out, "out", boxed(PacsimState(fock_state(n, dim)?))))
}

/// Photon-added coherent state `|alpha, m>`; `dim = 0` picks the default truncation.
///
/// # Safety
/// `out` must be a valid pointer; the handle it receives is owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn pacsim_pacs_state(
    alpha_re: f64,
    alpha_im: f64,
    m: u32,
    dim: usize,
    out: *mut *mut PacsimState,
) -> PacsimStatus {
    guard(|| {
        let alpha = C64::new(alpha_re, alpha_im);
        let dim = if dim == 0 { default_signal_dim(alpha, m as usize) } else { dim };
        write(out, "out", boxed(PacsimState(pacs_state(alpha, m, dim)?)))
    })
}

/// `N`-mode W state on idlers of dimension `idler_dim`.
///
/// # Safety
/// `out` must be a valid pointer; the handle it receives is owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn pacsim_w_state(n: usize, idler_dim: usize, out: *mut *mut PacsimState) -> PacsimStatus {
    guard(|| write(out, "out", boxed(PacsimState(w_state_in(n, idler_dim)?))))
}

/// Total number of amplitudes.
///
/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pacsim_state_dim(state: *const PacsimState, out: *mut usize) -> PacsimStatus {
    guard(|| write(out, "out", deref(state, "state")?.0.space().total_dim()))
}

/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pacsim_state_num_modes(state: *const PacsimState, out: *mut usize) -> PacsimStatus {
    guard(|| write(out, "out", deref(state, "state")?.0.space().num_modes()))
}

/// Copies the amplitudes into `buf` as interleaved `(re, im)` pairs.
/// `len` is the buffer length in doubles and must equal `2 * dim`.
///
/// # Safety
/// `state` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pacsim_state_amplitudes(state: *const PacsimState, buf: *mut f64, len: usize) -> PacsimStatus {
    guard(|| {
        let amps = deref(state, "state")?.0.amplitudes();
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        if len != 2 * amps.len() {
            return Err(Failure::Arg(format!("buffer holds {len} doubles, need {}", 2 * amps.len())));
        }
        let out = std::slice::from_raw_parts_mut(buf, len);
        for (pair, a) in out.chunks_exact_mut(2).zip(amps) {
            pair[0] = a.re;
            pair[1] = a.im;
        }
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pacsim_state_free(state: *mut PacsimState) {
    free(state)
}

/// `|<a|b>|^2`.
///
/// # Safety
/// `a`, `b` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pacsim_fidelity(a: *const PacsimState, b: *const PacsimState, out: *mut f64) -> PacsimStatus {
    guard(|| write(out, "out", fidelity_pure(&deref(a, "a")?.0, &deref(b, "b")?.0)?))
}

/// Single-mode Wigner function `W(x, p)`, normalized so the vacuum peaks at `1/pi`.
///
/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pacsim_wigner_point(state: *const PacsimState, x: f64, p: f64, out: *mut f64) -> PacsimStatus {
    guard(|| write(out, "out", wigner_point(&deref(state, "state")?.0, x, p)?.0))
}

/// Chain with `n` stages of strengths `lambdas[0..n]`. `signal_dim = 0`
/// picks the default truncation.
///
/// # Safety
/// `lambdas` must point to `n` doubles and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pacsim_chain_new(
    alpha_re: f64,
    alpha_im: f64,
    lambdas: *const f64,
    n: usize,
    idler_dim: usize,
    signal_dim: usize,
    out: *mut *mut PacsimChain,
) -> PacsimStatus {
    guard(|| {
        if lambdas.is_null() {
            return Err(Failure::Null("lambdas"));
        }
        let stages = std::slice::from_raw_parts(lambdas, n)
            .iter()
            .map(|&l| StageParams::new(l, idler_dim))
            .collect::<Result<Vec<_>, _>>()?;
        let signal_dim = (signal_dim != 0).then_some(signal_dim);
        let chain = ChainConfig::new(C64::new(alpha_re, alpha_im), stages, signal_dim)?;
        write(out, "out", boxed(PacsimChain(chain)))
    })
}

/// # Safety
/// `chain` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pacsim_chain_signal_dim(chain: *const PacsimChain, out: *mut usize) -> PacsimStatus {
    guard(|| write(out, "out", deref(chain, "chain")?.0.signal_dim()))
}

/// # Safety
/// `chain` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pacsim_chain_free(chain: *mut PacsimChain) {
    free(chain)
}

/// Joint signal + idler state after every stage.
///
/// # Safety
/// `chain` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pacsim_chain_run_full(chain: *const PacsimChain, out: *mut *mut PacsimState) -> PacsimStatus {
    guard(|| {
        let joint = run_chain_full(&deref(chain, "chain")?.0)?;
        write(out, "out", boxed(PacsimState(joint)))
    })
}

/// Pattern probability and conditional signal, measuring each idler after
/// its stage. `pattern` is a string such as `"101"`, one character per stage.
///
/// # Safety
/// Handles and pointers must be valid; `pattern` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pacsim_chain_run_sequential(
    chain: *const PacsimChain,
    eta: f64,
    dark_prob: f64,
    pattern: *const c_char,
    probability: *mut f64,
    ensemble: *mut *mut PacsimEnsemble,
) -> PacsimStatus {
    guard(|| {
        let det = DetectorModel::new(eta, dark_prob)?;
        let r = run_chain_sequential(&deref(chain, "chain")?.0, &det, &parse_pattern(pattern)?)?;
        write(probability, "probability", r.probability)?;
        write(ensemble, "ensemble", boxed(PacsimEnsemble(r.ensemble)))
    })
}

/// Conditions a joint state from [`pacsim_chain_run_full`] on a click pattern.
///
/// # Safety
/// Handles and pointers must be valid; `pattern` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pacsim_condition(
    joint: *const PacsimState,
    eta: f64,
    dark_prob: f64,
    pattern: *const c_char,
    probability: *mut f64,
    ensemble: *mut *mut PacsimEnsemble,
) -> PacsimStatus {
    guard(|| {
        let det = DetectorModel::new(eta, dark_prob)?;
        let r = condition_on_pattern(&deref(joint, "joint")?.0, &parse_pattern(pattern)?, &det)?;
        write(probability, "probability", r.probability)?;
        write(ensemble, "ensemble", boxed(PacsimEnsemble(r.ensemble)))
    })
}

/// `<reference| rho |reference>` for the ensemble `rho`.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pacsim_ensemble_fidelity(
    ensemble: *const PacsimEnsemble,
    reference: *const PacsimState,
    out: *mut f64,
) -> PacsimStatus {
    guard(|| {
        let f = fidelity_ensemble(&deref(ensemble, "ensemble")?.0, &deref(reference, "reference")?.0)?;
        write(out, "out", f)
    })
}

/// # Safety
/// `ensemble` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pacsim_ensemble_num_branches(ensemble: *const PacsimEnsemble, out: *mut usize) -> PacsimStatus {
    guard(|| write(out, "out", deref(ensemble, "ensemble")?.0.branches().len()))
}

/// # Safety
/// `ensemble` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pacsim_ensemble_free(ensemble: *mut PacsimEnsemble) {
    free(ensemble)
}

/// Projects the signal of `joint` onto `reference`; returns the outcome
/// probability and the normalized idler state.
///
/// # Safety
/// Handles and out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pacsim_project_signal(
    joint: *const PacsimState,
    reference: *const PacsimState,
    probability: *mut f64,
    idlers: *mut *mut PacsimState,
) -> PacsimStatus {
    guard(|| {
        let r = project_signal(&deref(joint, "joint")?.0, &deref(reference, "reference")?.0)?;
        write(probability, "probability", r.probability)?;
        write(idlers, "idlers", boxed(PacsimState(r.idlers)))
    })
}
