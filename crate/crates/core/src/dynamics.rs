//! Stage evolution and chain composition.
//!
//! With the pump treated as a classical field, one amplifier stage acts on
//! (signal, idler) as `U = exp(G)` with the real antisymmetric generator
//! `G = lambda (a† b† - a b)`, `lambda = V g t` the effective interaction time.
//!
//! `G` conserves `n_signal - n_idler`, so in the Fock basis it splits into
//! tridiagonal blocks, one per photon-number difference. Each block is
//! exponentiated exactly: with `S = diag(i^k)`, `S⁻¹ G S = -i T` for the real
//! symmetric tridiagonal `T` carrying the same off-diagonal couplings, hence
//! `exp(G) = S Q exp(-i Λ) Qᵀ S⁻¹` from the eigendecomposition `T = Q Λ Qᵀ`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::detection::{ClickPattern, Conditioned, DetectorModel};
use crate::error::{Error, Result};
use crate::fock::{self, default_signal_dim, Ladder, MultiMode, PureState, WeightedEnsemble, DEFAULT_IDLER_DIM};

/// Above this effective interaction time the leading-order claims stop
/// being reliable; exact evolution is still valid.
pub const PERTURBATIVE_LAMBDA_LIMIT: f64 = 0.3;

/// Default cap on the number of amplitudes in a full joint state.
pub const DEFAULT_AMPLITUDE_BUDGET: usize = 20_000_000;

/// Outcomes with probability below this are reported as impossible.
pub const IMPOSSIBLE_PROBABILITY: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageParams {
    lambda: f64,
    idler_dim: usize,
}

impl StageParams {
    pub fn new(lambda: f64, idler_dim: usize) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::range("lambda", lambda, ">= 0 and finite"));
        }
        if idler_dim < 2 {
            return Err(Error::range("idler_dim", idler_dim, ">= 2"));
        }
        if lambda > PERTURBATIVE_LAMBDA_LIMIT {
            log::warn!("lambda = {lambda} is outside the perturbative regime (> {PERTURBATIVE_LAMBDA_LIMIT})");
        }
        Ok(StageParams { lambda, idler_dim })
    }

    pub fn with_default_dim(lambda: f64) -> Result<Self> {
        StageParams::new(lambda, DEFAULT_IDLER_DIM)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn idler_dim(&self) -> usize {
        self.idler_dim
    }
}

/// Seed amplitude plus the ordered amplifier stages.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    alpha: C64,
    stages: Vec<StageParams>,
    signal_dim: usize,
}

impl ChainConfig {
    /// `signal_dim = None` applies the default truncation policy with one
    /// added photon per stage.
    pub fn new(alpha: C64, stages: Vec<StageParams>, signal_dim: Option<usize>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidArgument("a chain needs at least one stage".into()));
        }
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(Error::InvalidArgument("alpha must be finite".into()));
        }
        let signal_dim = signal_dim.unwrap_or_else(|| default_signal_dim(alpha, stages.len()));
        if signal_dim < 2 {
            return Err(Error::range("signal_dim", signal_dim, ">= 2"));
        }
        Ok(ChainConfig {
            alpha,
            stages,
            signal_dim,
        })
    }

    /// `n` identical stages with the default idler truncation.
    pub fn uniform(alpha: C64, lambda: f64, n: usize) -> Result<Self> {
        let stage = StageParams::with_default_dim(lambda)?;
        ChainConfig::new(alpha, vec![stage; n], None)
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn stages(&self) -> &[StageParams] {
        &self.stages
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn signal_dim(&self) -> usize {
        self.signal_dim
    }

    pub fn idler_dims(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.idler_dim).collect()
    }

    /// Signal followed by one idler per stage.
    pub fn joint_space(&self) -> Result<MultiMode> {
        MultiMode::signal_idlers(self.signal_dim, &self.idler_dims())
    }

    pub fn joint_amplitude_count(&self) -> u128 {
        self.stages
            .iter()
            .fold(self.signal_dim as u128, |acc, s| acc * s.idler_dim as u128)
    }
}

fn check_dims(signal_dim: usize, idler_dim: usize) -> Result<()> {
    if signal_dim < 2 {
        return Err(Error::range("signal_dim", signal_dim, ">= 2"));
    }
    if idler_dim < 2 {
        return Err(Error::range("idler_dim", idler_dim, ">= 2"));
    }
    Ok(())
}

/// Dense `G = lambda (a† b† - a b)` on signal ⊗ idler, index `s * idler_dim + i`.
pub fn stage_generator(lambda: f64, signal_dim: usize, idler_dim: usize) -> Result<DMatrix<f64>> {
    check_dims(signal_dim, idler_dim)?;
    let n = signal_dim * idler_dim;
    let mut g = DMatrix::zeros(n, n);
    for s in 0..signal_dim - 1 {
        for i in 0..idler_dim - 1 {
            let from = s * idler_dim + i;
            let to = (s + 1) * idler_dim + i + 1;
            let c = lambda * (((s + 1) * (i + 1)) as f64).sqrt();
            g[(to, from)] = c;
            g[(from, to)] = -c;
        }
    }
    Ok(g)
}

/// One fixed-difference block of a stage unitary.
#[derive(Debug, Clone, PartialEq)]
struct Block {
    /// Flat two-mode indices `(s0 + k) * idler_dim + (i0 + k)`, `k = 0..`.
    indices: Vec<usize>,
    matrix: DMatrix<f64>,
}

/// `exp(G)` stored as its photon-number-difference blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct StageUnitary {
    lambda: f64,
    signal_dim: usize,
    idler_dim: usize,
    blocks: Vec<Block>,
    /// Block index whose first basis element is `|n, 0>`, for each signal level `n`.
    vacuum_idler_block: Vec<usize>,
}

/// `exp(A)` for the real antisymmetric tridiagonal `A` with `A[k+1][k] = c[k]`.
fn exp_antisymmetric_tridiagonal(couplings: &[f64]) -> DMatrix<f64> {
    let n = couplings.len() + 1;
    if n == 1 {
        return DMatrix::identity(1, 1);
    }
    let mut t = DMatrix::<f64>::zeros(n, n);
    for (k, &c) in couplings.iter().enumerate() {
        t[(k + 1, k)] = c;
        t[(k, k + 1)] = c;
    }
    let eig = SymmetricEigen::new(t);
    let q = &eig.eigenvectors;
    let phases: Vec<C64> = eig.eigenvalues.iter().map(|&w| C64::from_polar(1.0, -w)).collect();
    // i^(j-k) for j - k mod 4
    let ipow = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
    DMatrix::from_fn(n, n, |j, k| {
        let s: C64 = (0..n).map(|l| phases[l] * (q[(j, l)] * q[(k, l)])).sum();
        let p = ipow[(j + 4 - k % 4) % 4];
        (p * s).re
    })
}

/// Exact stage unitary `exp(lambda (a† b† - a b))` on the truncated space.
pub fn stage_unitary(lambda: f64, signal_dim: usize, idler_dim: usize) -> Result<StageUnitary> {
    check_dims(signal_dim, idler_dim)?;
    if !lambda.is_finite() {
        return Err(Error::range("lambda", lambda, "finite"));
    }
    let mut blocks = Vec::new();
    let mut vacuum_idler_block = vec![0; signal_dim];
    // start points (s0, i0) with s0 == 0 or i0 == 0
    let starts = (0..signal_dim)
        .map(|s| (s, 0))
        .chain((1..idler_dim).map(|i| (0, i)));
    for (s0, i0) in starts {
        let len = (signal_dim - s0).min(idler_dim - i0);
        let indices: Vec<usize> = (0..len).map(|k| (s0 + k) * idler_dim + i0 + k).collect();
        let couplings: Vec<f64> = (0..len - 1)
            .map(|k| lambda * (((s0 + k + 1) * (i0 + k + 1)) as f64).sqrt())
            .collect();
        if i0 == 0 {
            vacuum_idler_block[s0] = blocks.len();
        }
        blocks.push(Block {
            indices,
            matrix: exp_antisymmetric_tridiagonal(&couplings),
        });
    }
    Ok(StageUnitary {
        lambda,
        signal_dim,
        idler_dim,
        blocks,
        vacuum_idler_block,
    })
}

impl StageUnitary {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn signal_dim(&self) -> usize {
        self.signal_dim
    }

    pub fn idler_dim(&self) -> usize {
        self.idler_dim
    }

    pub fn dim(&self) -> usize {
        self.signal_dim * self.idler_dim
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut u = DMatrix::zeros(n, n);
        for b in &self.blocks {
            for (r, &i) in b.indices.iter().enumerate() {
                for (c, &j) in b.indices.iter().enumerate() {
                    u[(i, j)] = b.matrix[(r, c)];
                }
            }
        }
        u
    }

    /// `max |UᵀU - I|` over the whole truncated space.
    pub fn unitarity_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let n = b.matrix.nrows();
                (b.matrix.transpose() * &b.matrix - DMatrix::identity(n, n)).amax()
            })
            .fold(0.0, f64::max)
    }

    /// In-place `v <- U v` for a two-mode amplitude vector.
    pub fn apply(&self, v: &mut [C64]) {
        debug_assert_eq!(v.len(), self.dim());
        let mut buf = Vec::new();
        for b in &self.blocks {
            buf.clear();
            buf.extend(b.indices.iter().map(|&i| v[i]));
            for (r, &i) in b.indices.iter().enumerate() {
                v[i] = buf
                    .iter()
                    .enumerate()
                    .map(|(c, &x)| x * b.matrix[(r, c)])
                    .sum();
            }
        }
    }

    /// Signal-side Kraus operator `<k|_idler U |0>_idler` for idler outcome `k`.
    pub fn kraus(&self, k: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.signal_dim, self.signal_dim);
        if k >= self.idler_dim {
            return out;
        }
        for n in 0..self.signal_dim {
            let b = &self.blocks[self.vacuum_idler_block[n]];
            if k < b.indices.len() {
                out[(n + k, n)] = b.matrix[(k, 0)];
            }
        }
        out
    }
}

/// Applies `U` to the (signal, idler `mode`) pair of a joint amplitude vector.
fn apply_stage(space: &MultiMode, amps: &mut [C64], mode: usize, u: &StageUnitary) {
    let signal_stride = space.stride(0);
    let idler_stride = space.stride(mode);
    let di = space.dim(mode);
    let mut local = vec![C64::new(0.0, 0.0); u.dim()];
    for base in 0..signal_stride {
        if !(base / idler_stride).is_multiple_of(di) {
            continue;
        }
        for s in 0..u.signal_dim() {
            for i in 0..di {
                local[s * di + i] = amps[base + s * signal_stride + i * idler_stride];
            }
        }
        u.apply(&mut local);
        for s in 0..u.signal_dim() {
            for i in 0..di {
                amps[base + s * signal_stride + i * idler_stride] = local[s * di + i];
            }
        }
    }
}

/// `sum_{k <= order} G^k / k!` applied to `|alpha>|0>`, renormalized.
pub fn perturbative_output(
    alpha: C64,
    lambda: f64,
    order: u32,
    signal_dim: usize,
    idler_dim: usize,
) -> Result<PureState> {
    check_dims(signal_dim, idler_dim)?;
    if lambda >= PERTURBATIVE_LAMBDA_LIMIT {
        log::warn!("perturbative expansion requested at lambda = {lambda}");
    }
    let space = MultiMode::signal_idlers(signal_dim, &[idler_dim])?;
    let seed = fock::coherent_state(alpha, signal_dim)?;
    let mut term = vec![C64::new(0.0, 0.0); space.total_dim()];
    for (n, &c) in seed.amplitudes().iter().enumerate() {
        term[n * idler_dim] = c;
    }
    let mut sum = term.clone();
    for k in 1..=order {
        let raise = fock::ladder_apply_raw(&space, &term, 0, Ladder::Raise)?;
        let raise = fock::ladder_apply_raw(&space, &raise.amplitudes, 1, Ladder::Raise)?;
        let lower = fock::ladder_apply_raw(&space, &term, 0, Ladder::Lower)?;
        let lower = fock::ladder_apply_raw(&space, &lower.amplitudes, 1, Ladder::Lower)?;
        let scale = lambda / f64::from(k);
        for ((t, r), l) in term.iter_mut().zip(&raise.amplitudes).zip(&lower.amplitudes) {
            *t = (r - l) * scale;
        }
        sum.iter_mut().zip(&term).for_each(|(s, t)| *s += t);
    }
    Ok(PureState::from_amplitudes(space, sum)?.0)
}

fn initial_joint(config: &ChainConfig) -> Result<(MultiMode, Vec<C64>)> {
    let space = config.joint_space()?;
    let seed = fock::coherent_state(config.alpha, config.signal_dim)?;
    let stride = space.stride(0);
    let mut amps = vec![C64::new(0.0, 0.0); space.total_dim()];
    for (n, &c) in seed.amplitudes().iter().enumerate() {
        amps[n * stride] = c;
    }
    Ok((space, amps))
}

/// Full joint state after all stages, with the default amplitude budget.
pub fn run_chain_full(config: &ChainConfig) -> Result<PureState> {
    run_chain_full_with_budget(config, DEFAULT_AMPLITUDE_BUDGET)
}

pub fn run_chain_full_with_budget(config: &ChainConfig, budget: usize) -> Result<PureState> {
    let required = config.joint_amplitude_count();
    if required > budget as u128 {
        return Err(Error::DimensionBudget { required, budget });
    }
    let (space, mut amps) = initial_joint(config)?;
    for (j, stage) in config.stages.iter().enumerate() {
        let u = stage_unitary(stage.lambda, config.signal_dim, stage.idler_dim)?;
        apply_stage(&space, &mut amps, j + 1, &u);
    }
    let (state, norm) = PureState::from_amplitudes(space, amps)?;
    if (norm - 1.0).abs() > 1e-9 {
        log::warn!("joint state norm drifted to {norm}");
    }
    Ok(state)
}

/// Click-pattern probability and conditional signal state, measuring each
/// idler right after its stage.
///
/// The signal is carried as a density matrix between stages; the returned
/// ensemble is its spectral decomposition.
pub fn run_chain_sequential(
    config: &ChainConfig,
    detector: &DetectorModel,
    pattern: &ClickPattern,
) -> Result<Conditioned> {
    if pattern.len() != config.num_stages() {
        return Err(Error::InvalidArgument(format!(
            "pattern has {} outcomes for {} stages",
            pattern.len(),
            config.num_stages()
        )));
    }
    let ds = config.signal_dim;
    let seed = fock::coherent_state(config.alpha, ds)?;
    let psi = nalgebra::DVector::from_column_slice(seed.amplitudes());
    let mut rho: DMatrix<C64> = &psi * psi.adjoint();
    for (stage, &click) in config.stages.iter().zip(pattern.clicks()) {
        let u = stage_unitary(stage.lambda, ds, stage.idler_dim)?;
        let mut next = DMatrix::<C64>::zeros(ds, ds);
        for k in 0..stage.idler_dim {
            let w = detector.outcome_probability(click, k);
            if w == 0.0 {
                continue;
            }
            let kr = u.kraus(k).map(|x| C64::new(x, 0.0));
            next += (&kr * &rho * kr.transpose()) * C64::new(w, 0.0);
        }
        rho = next;
    }
    let probability = rho.trace().re;
    if probability < IMPOSSIBLE_PROBABILITY {
        return Err(Error::ImpossibleOutcome { probability });
    }
    rho /= C64::new(probability, 0.0);
    // hermitize away rounding before the eigensolver
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(rho);
    let space = MultiMode::single("signal", ds)?;
    let cutoff = 1e-15;
    let mut branches = Vec::new();
    for (l, &w) in eig.eigenvalues.iter().enumerate() {
        if w > cutoff {
            let v = eig.eigenvectors.column(l).iter().copied().collect();
            branches.push((w, PureState::from_amplitudes(space.clone(), v)?.0));
        }
    }
    let total: f64 = branches.iter().map(|(w, _)| w).sum();
    branches.iter_mut().for_each(|(w, _)| *w /= total);
    branches.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(Conditioned {
        probability,
        ensemble: WeightedEnsemble::new(space, branches)?,
    })
}
