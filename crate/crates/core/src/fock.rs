//! Truncated multimode Fock space.
//!
//! A [`MultiMode`] is an ordered list of bosonic modes, each truncated to
//! `dim` levels `|0>..|dim-1>`. Amplitudes are flattened row-major in mode
//! order, so mode 0 (the signal, by convention) varies slowest and the last
//! idler varies fastest. Every module indexes amplitudes this way.

use std::collections::HashSet;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Tolerance on `||psi|| = 1` for stored states.
pub const NORM_TOL: f64 = 1e-12;

/// Largest probability mass a truncated basis may drop.
pub const TAIL_THRESHOLD: f64 = 1e-12;

/// Relative ladder leakage above which a truncation warning is raised.
pub const LEAKAGE_WARN: f64 = 1e-10;

/// Default idler truncation: the perturbative regime populates `n <= 2`,
/// plus one guard level.
pub const DEFAULT_IDLER_DIM: usize = 4;

/// Default signal truncation for a seed `alpha` and at most `m_max` added
/// photons: `max(16, ceil(|alpha|^2 + 6|alpha| + 10) + m_max)`, raised
/// further if `a†^m_max |alpha>` would still leave a tail above
/// [`TAIL_THRESHOLD`].
pub fn default_signal_dim(alpha: C64, m_max: usize) -> usize {
    let a = alpha.norm();
    let base = 16.max((a * a + 6.0 * a + 10.0).ceil() as usize + m_max);
    match u32::try_from(m_max) {
        Ok(m) if a.is_finite() => suggest_dim(alpha, m, base),
        _ => base,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSpec {
    label: String,
    dim: usize,
}

impl ModeSpec {
    pub fn new(label: impl Into<String>, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::range("mode dim", dim, ">= 2"));
        }
        Ok(ModeSpec {
            label: label.into(),
            dim,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Ordered collection of modes. Index 0 is the signal, `1..=N` the idlers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiMode {
    modes: Vec<ModeSpec>,
    total_dim: usize,
}

impl MultiMode {
    pub fn new(modes: Vec<ModeSpec>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidArgument("a space needs at least one mode".into()));
        }
        let mut seen = HashSet::new();
        for m in &modes {
            if !seen.insert(m.label.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate mode label '{}'", m.label)));
            }
        }
        let total_dim = modes
            .iter()
            .try_fold(1usize, |acc, m| acc.checked_mul(m.dim))
            .ok_or_else(|| Error::InvalidArgument("total dimension overflows usize".into()))?;
        Ok(MultiMode { modes, total_dim })
    }

    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self> {
        MultiMode::new(vec![ModeSpec::new(label, dim)?])
    }

    /// Signal mode followed by `idler_dims.len()` idlers labelled `idler-1..`.
    pub fn signal_idlers(signal_dim: usize, idler_dims: &[usize]) -> Result<Self> {
        let mut modes = vec![ModeSpec::new("signal", signal_dim)?];
        for (j, &d) in idler_dims.iter().enumerate() {
            modes.push(ModeSpec::new(format!("idler-{}", j + 1), d)?);
        }
        MultiMode::new(modes)
    }

    /// `n` idler modes only, labelled `idler-1..idler-n`.
    pub fn idlers(idler_dims: &[usize]) -> Result<Self> {
        let modes = idler_dims
            .iter()
            .enumerate()
            .map(|(j, &d)| ModeSpec::new(format!("idler-{}", j + 1), d))
            .collect::<Result<Vec<_>>>()?;
        MultiMode::new(modes)
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.dim).collect()
    }

    pub fn dim(&self, mode: usize) -> usize {
        self.modes[mode].dim
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Flat-index step for a unit change of `mode`'s occupation.
    pub fn stride(&self, mode: usize) -> usize {
        self.modes[mode + 1..].iter().map(|m| m.dim).product()
    }

    /// Same mode dimensions in the same order; labels are ignored.
    pub fn same_shape(&self, other: &MultiMode) -> bool {
        self.modes.len() == other.modes.len()
            && self.modes.iter().zip(&other.modes).all(|(a, b)| a.dim == b.dim)
    }

    pub fn concat(&self, other: &MultiMode) -> Result<MultiMode> {
        let mut modes = self.modes.clone();
        modes.extend(other.modes.iter().cloned());
        MultiMode::new(modes)
    }

    pub fn flat_index(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.modes.len() {
            return Err(Error::SpaceMismatch(format!(
                "{} occupations for {} modes",
                occupations.len(),
                self.modes.len()
            )));
        }
        let mut idx = 0;
        for (m, &n) in self.modes.iter().zip(occupations) {
            if n >= m.dim {
                return Err(Error::range("occupation", n, format!("< {}", m.dim)));
            }
            idx = idx * m.dim + n;
        }
        Ok(idx)
    }

    pub fn occupations(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes.len()];
        for (k, m) in self.modes.iter().enumerate().rev() {
            occ[k] = index % m.dim;
            index /= m.dim;
        }
        occ
    }
}

/// Normalized pure state on a [`MultiMode`] space.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    space: MultiMode,
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Normalizes `amplitudes` and returns the state with the original norm.
    pub fn from_amplitudes(space: MultiMode, mut amplitudes: Vec<C64>) -> Result<(Self, f64)> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::SpaceMismatch(format!(
                "{} amplitudes for total dimension {}",
                amplitudes.len(),
                space.total_dim()
            )));
        }
        let norm = l2_norm(&amplitudes);
        if !norm.is_finite() {
            return Err(Error::InvalidArgument("non-finite amplitudes".into()));
        }
        if norm == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|c| *c /= norm);
        Ok((PureState { space, amplitudes }, norm))
    }

    /// Basis state with the given occupation of each mode.
    pub fn basis(space: MultiMode, occupations: &[usize]) -> Result<Self> {
        let idx = space.flat_index(occupations)?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); space.total_dim()];
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(PureState { space, amplitudes })
    }

    pub fn space(&self) -> &MultiMode {
        &self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, occupations: &[usize]) -> Result<C64> {
        Ok(self.amplitudes[self.space.flat_index(occupations)?])
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if !self.space.same_shape(&other.space) {
            return Err(Error::SpaceMismatch("inner product across different shapes".into()));
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    /// Replaces the mode labels, keeping dimensions.
    pub fn relabel(self, labels: &[&str]) -> Result<Self> {
        if labels.len() != self.space.num_modes() {
            return Err(Error::SpaceMismatch("label count differs from mode count".into()));
        }
        let modes = self
            .space
            .modes()
            .iter()
            .zip(labels)
            .map(|(m, l)| ModeSpec::new(*l, m.dim()))
            .collect::<Result<Vec<_>>>()?;
        Ok(PureState {
            space: MultiMode::new(modes)?,
            amplitudes: self.amplitudes,
        })
    }
}

/// Mixture of pure states with real weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnsemble {
    space: MultiMode,
    branches: Vec<(f64, PureState)>,
}

impl WeightedEnsemble {
    pub fn new(space: MultiMode, branches: Vec<(f64, PureState)>) -> Result<Self> {
        for (w, s) in &branches {
            if !(0.0..=1.0 + 1e-12).contains(w) {
                return Err(Error::range("branch weight", w, "[0, 1]"));
            }
            if !s.space().same_shape(&space) {
                return Err(Error::SpaceMismatch("ensemble branch on a different space".into()));
            }
        }
        Ok(WeightedEnsemble { space, branches })
    }

    pub fn pure(state: PureState) -> Self {
        WeightedEnsemble {
            space: state.space().clone(),
            branches: vec![(1.0, state)],
        }
    }

    pub fn space(&self) -> &MultiMode {
        &self.space
    }

    pub fn branches(&self) -> &[(f64, PureState)] {
        &self.branches
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|(w, _)| w).sum()
    }
}

/// Output of [`ladder_apply`]: the unnormalized image and its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderOutput {
    pub amplitudes: Vec<C64>,
    pub norm: f64,
    /// Fraction of the image's squared norm that fell outside the
    /// truncation window and was dropped.
    pub leakage: f64,
}

impl LadderOutput {
    pub fn truncation_warning(&self) -> bool {
        self.leakage > LEAKAGE_WARN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

/// Applies a ladder operator to one mode of a (not necessarily normalized)
/// amplitude vector.
pub fn ladder_apply_raw(space: &MultiMode, amps: &[C64], mode: usize, kind: Ladder) -> Result<LadderOutput> {
    if mode >= space.num_modes() {
        return Err(Error::range("mode index", mode, format!("< {}", space.num_modes())));
    }
    if amps.len() != space.total_dim() {
        return Err(Error::SpaceMismatch("amplitude length differs from space".into()));
    }
    let dim = space.dim(mode);
    let stride = space.stride(mode);
    let block = dim * stride;
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    let mut dropped = 0.0;
    for (idx, &c) in amps.iter().enumerate() {
        let n = (idx % block) / stride;
        match kind {
            Ladder::Raise => {
                let f = ((n + 1) as f64).sqrt();
                if n + 1 < dim {
                    out[idx + stride] = c * f;
                } else {
                    dropped += c.norm_sqr() * f * f;
                }
            }
            Ladder::Lower => {
                if n > 0 {
                    out[idx - stride] = c * (n as f64).sqrt();
                }
            }
        }
    }
    let kept = out.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let leakage = if dropped > 0.0 { dropped / (dropped + kept) } else { 0.0 };
    Ok(LadderOutput {
        norm: kept.sqrt(),
        amplitudes: out,
        leakage,
    })
}

/// `a` or `a†` on `mode` of `state`.
pub fn ladder_apply(state: &PureState, mode: usize, kind: Ladder) -> Result<LadderOutput> {
    let out = ladder_apply_raw(&state.space, &state.amplitudes, mode, kind)?;
    if out.truncation_warning() {
        log::warn!("ladder operator on mode {mode} leaked {:.3e} of the norm", out.leakage);
    }
    Ok(out)
}

/// Coherent-state amplitudes `e^{-|a|^2/2} a^n / sqrt(n!)` for `n < count`,
/// evaluated in log space so large `|alpha|` does not underflow.
fn coherent_amplitudes(alpha: C64, count: usize) -> Vec<C64> {
    let r = alpha.norm();
    let phase = alpha.arg();
    let mut out = Vec::with_capacity(count);
    if r == 0.0 {
        out.push(C64::new(1.0, 0.0));
        out.resize(count, C64::new(0.0, 0.0));
        return out;
    }
    let ln_r = r.ln();
    let mut log_mag = -0.5 * r * r;
    for n in 0..count {
        if n > 0 {
            log_mag += ln_r - 0.5 * (n as f64).ln();
        }
        out.push(C64::from_polar(log_mag.exp(), phase * n as f64));
    }
    out
}

/// Probability mass of `a†^m |alpha>` (normalized) on levels `>= dim`.
pub fn photon_added_tail(alpha: C64, m: u32, dim: usize) -> f64 {
    let r2 = alpha.norm_sqr();
    let m = m as usize;
    if dim <= m {
        return 1.0;
    }
    // weight of coherent level n after m raisings: p_n (n+1)...(n+m)
    let start = dim - m;
    let far = start.max((r2 + 12.0 * r2.sqrt() + 40.0) as usize) + 64;
    let amps = coherent_amplitudes(alpha, far + 1);
    let weight = |n: usize| -> f64 {
        let rising: f64 = (1..=m).map(|k| (n + k) as f64).product();
        amps[n].norm_sqr() * rising
    };
    let total: f64 = (0..=far).map(weight).sum();
    let tail: f64 = (start..=far).map(weight).sum();
    (tail / total).clamp(0.0, 1.0)
}

fn suggest_dim(alpha: C64, m: u32, from: usize) -> usize {
    let mut d = from.max(m as usize + 2);
    while photon_added_tail(alpha, m, d) >= TAIL_THRESHOLD {
        d += 1;
    }
    d
}

/// Single-mode coherent state `|alpha>`, renormalized after truncation.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<PureState> {
    let space = MultiMode::single("signal", dim)?;
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::InvalidArgument("alpha must be finite".into()));
    }
    let tail = photon_added_tail(alpha, 0, dim);
    if tail >= TAIL_THRESHOLD {
        return Err(Error::Truncation {
            tail,
            threshold: TAIL_THRESHOLD,
            suggested_dim: suggest_dim(alpha, 0, dim),
        });
    }
    let (state, _) = PureState::from_amplitudes(space, coherent_amplitudes(alpha, dim))?;
    Ok(state)
}

/// Fock state `|n>`.
pub fn fock_state(n: usize, dim: usize) -> Result<PureState> {
    if n >= dim {
        return Err(Error::range("photon number", n, format!("< dim = {dim}")));
    }
    PureState::basis(MultiMode::single("signal", dim)?, &[n])
}

/// `a†^m |alpha>` before normalization, together with its squared norm.
pub fn photon_added_unnormalized(alpha: C64, m: u32, dim: usize) -> Result<(Vec<C64>, f64)> {
    let tail = photon_added_tail(alpha, m, dim);
    if tail >= TAIL_THRESHOLD {
        return Err(Error::Truncation {
            tail,
            threshold: TAIL_THRESHOLD,
            suggested_dim: suggest_dim(alpha, m, dim),
        });
    }
    let seed = coherent_state(alpha, dim)?;
    let space = seed.space().clone();
    let mut amps = seed.into_amplitudes();
    for _ in 0..m {
        amps = ladder_apply_raw(&space, &amps, 0, Ladder::Raise)?.amplitudes;
    }
    let norm_sq = amps.iter().map(|c| c.norm_sqr()).sum();
    Ok((amps, norm_sq))
}

/// Photon-added coherent state `|alpha, m> = a†^m |alpha> / sqrt(m! L_m(-|alpha|^2))`.
pub fn pacs_state(alpha: C64, m: u32, dim: usize) -> Result<PureState> {
    let (amps, _) = photon_added_unnormalized(alpha, m, dim)?;
    let (state, _) = PureState::from_amplitudes(MultiMode::single("signal", dim)?, amps)?;
    Ok(state)
}

/// Kronecker product; `a`'s modes come first (vary slowest).
pub fn tensor(a: &PureState, b: &PureState) -> Result<PureState> {
    let space = a.space.concat(&b.space)?;
    let mut amplitudes = Vec::with_capacity(space.total_dim());
    for &x in &a.amplitudes {
        amplitudes.extend(b.amplitudes.iter().map(|&y| x * y));
    }
    Ok(PureState { space, amplitudes })
}

/// Joint photon-number distribution over a subset of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub modes: Vec<usize>,
    pub dims: Vec<usize>,
    /// Row-major over `modes` in the given order.
    pub probs: Vec<f64>,
}

impl Marginal {
    pub fn get(&self, occupations: &[usize]) -> f64 {
        let idx = occupations
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&n, &d)| acc * d + n);
        self.probs[idx]
    }
}

pub fn partial_trace_to_marginal(state: &PureState, keep: &[usize]) -> Result<Marginal> {
    let space = &state.space;
    let mut seen = HashSet::new();
    for &k in keep {
        if k >= space.num_modes() || !seen.insert(k) {
            return Err(Error::InvalidArgument(format!("bad or repeated mode index {k}")));
        }
    }
    let dims: Vec<usize> = keep.iter().map(|&k| space.dim(k)).collect();
    let strides: Vec<usize> = keep.iter().map(|&k| space.stride(k)).collect();
    let mut probs = vec![0.0; dims.iter().product()];
    for (idx, c) in state.amplitudes.iter().enumerate() {
        let mut out = 0;
        for ((&d, &s), _) in dims.iter().zip(&strides).zip(keep) {
            out = out * d + (idx / s) % d;
        }
        probs[out] += c.norm_sqr();
    }
    Ok(Marginal {
        modes: keep.to_vec(),
        dims,
        probs,
    })
}

/// `|<a|b>|^2`.
pub fn fidelity_pure(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().clamp(0.0, 1.0))
}

/// `<ref| rho |ref>` for `rho = sum_i w_i |psi_i><psi_i|`.
pub fn fidelity_ensemble(e: &WeightedEnsemble, reference: &PureState) -> Result<f64> {
    let mut f = 0.0;
    for (w, s) in &e.branches {
        f += w * fidelity_pure(s, reference)?;
    }
    Ok(f.clamp(0.0, 1.0))
}

pub(crate) fn l2_norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `<a|b>` with `a` conjugated.
pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
