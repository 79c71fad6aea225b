//! On/off detectors, click-pattern conditioning and signal projection.
//!
//! Each idler is read by a binary detector whose POVM is diagonal in photon
//! number: `P(click | n) = 1 - (1 - dark_prob) (1 - eta)^n`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dynamics::IMPOSSIBLE_PROBABILITY;
use crate::error::{Error, Result};
use crate::fock::{l2_norm, MultiMode, ModeSpec, PureState, WeightedEnsemble};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    eta: f64,
    dark_prob: f64,
}

impl DetectorModel {
    pub fn new(eta: f64, dark_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::range("eta", eta, "[0, 1]"));
        }
        if !(0.0..1.0).contains(&dark_prob) {
            return Err(Error::range("dark_prob", dark_prob, "[0, 1)"));
        }
        Ok(DetectorModel { eta, dark_prob })
    }

    pub fn ideal() -> Self {
        DetectorModel {
            eta: 1.0,
            dark_prob: 0.0,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dark_prob(&self) -> f64 {
        self.dark_prob
    }

    pub fn click_probability_given_n(&self, n: usize) -> f64 {
        let n = i32::try_from(n).unwrap_or(i32::MAX);
        1.0 - (1.0 - self.dark_prob) * (1.0 - self.eta).powi(n)
    }

    /// POVM element for `click` (or no click) evaluated at photon number `n`.
    pub fn outcome_probability(&self, click: bool, n: usize) -> f64 {
        let p = self.click_probability_given_n(n);
        if click {
            p
        } else {
            1.0 - p
        }
    }
}

/// One binary outcome per idler detector, in stage order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClickPattern {
    clicks: Vec<bool>,
}

impl ClickPattern {
    pub fn new(clicks: Vec<bool>) -> Self {
        ClickPattern { clicks }
    }

    pub fn clicks(&self) -> &[bool] {
        &self.clicks
    }

    pub fn len(&self) -> usize {
        self.clicks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clicks.is_empty()
    }

    pub fn num_clicks(&self) -> usize {
        self.clicks.iter().filter(|&&c| c).count()
    }

    /// All `2^n` patterns; pattern `k` has detector `j` clicking iff bit
    /// `n-1-j` of `k` is set, so "00..0" comes first.
    pub fn all(n: usize) -> Vec<ClickPattern> {
        (0..1usize << n)
            .map(|k| ClickPattern::new((0..n).map(|j| (k >> (n - 1 - j)) & 1 == 1).collect()))
            .collect()
    }
}

impl fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.clicks {
            f.write_str(if c { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for ClickPattern {
    type Err = Error;

    /// Parses strings like `"101"`; `1` is a click.
    fn from_str(s: &str) -> Result<Self> {
        let clicks = s
            .trim()
            .chars()
            .map(|ch| match ch {
                '1' => Ok(true),
                '0' => Ok(false),
                _ => Err(Error::InvalidArgument(format!("bad click pattern '{s}': use 0/1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if clicks.is_empty() {
            return Err(Error::InvalidArgument("empty click pattern".into()));
        }
        Ok(ClickPattern { clicks })
    }
}

/// A heralding outcome: its probability and the normalized conditional state.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditioned {
    pub probability: f64,
    pub ensemble: WeightedEnsemble,
}

fn signal_space(joint: &MultiMode) -> Result<MultiMode> {
    let m = &joint.modes()[0];
    MultiMode::new(vec![ModeSpec::new(m.label(), m.dim())?])
}

fn idler_space(joint: &MultiMode) -> Result<MultiMode> {
    if joint.num_modes() < 2 {
        return Err(Error::SpaceMismatch("joint state has no idler modes".into()));
    }
    MultiMode::new(joint.modes()[1..].to_vec())
}

/// Conditions the joint (signal + N idlers) state on a click pattern and
/// traces out the idlers.
///
/// Every idler photon-number configuration contributes one pure signal
/// branch, weighted by its POVM factor times its squared amplitude.
pub fn condition_on_pattern(joint: &PureState, pattern: &ClickPattern, detector: &DetectorModel) -> Result<Conditioned> {
    let space = joint.space();
    let n_idlers = space.num_modes().saturating_sub(1);
    if pattern.len() != n_idlers || n_idlers == 0 {
        return Err(Error::InvalidArgument(format!(
            "pattern has {} outcomes for {} idlers",
            pattern.len(),
            n_idlers
        )));
    }
    let sig = signal_space(space)?;
    let ds = space.dim(0);
    let rest = space.stride(0);
    let idlers = idler_space(space)?;
    let amps = joint.amplitudes();

    let mut branches = Vec::new();
    let mut total = 0.0;
    for r in 0..rest {
        let occ = idlers.occupations(r);
        let povm: f64 = occ
            .iter()
            .zip(pattern.clicks())
            .map(|(&n, &c)| detector.outcome_probability(c, n))
            .product();
        if povm == 0.0 {
            continue;
        }
        let branch: Vec<C64> = (0..ds).map(|s| amps[s * rest + r]).collect();
        let norm = l2_norm(&branch);
        let w = povm * norm * norm;
        if w == 0.0 {
            continue;
        }
        total += w;
        branches.push((w, PureState::from_amplitudes(sig.clone(), branch)?.0));
    }
    if total < IMPOSSIBLE_PROBABILITY {
        return Err(Error::ImpossibleOutcome { probability: total });
    }
    branches.iter_mut().for_each(|(w, _)| *w /= total);
    Ok(Conditioned {
        probability: total,
        ensemble: WeightedEnsemble::new(sig, branches)?,
    })
}

/// Outcome of projecting the signal onto a reference state.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub probability: f64,
    /// Normalized state of the idler modes.
    pub idlers: PureState,
}

/// Ideal projection of the signal onto `|reference><reference|`.
pub fn project_signal(joint: &PureState, reference: &PureState) -> Result<Projection> {
    let space = joint.space();
    if reference.space().num_modes() != 1 || reference.space().dim(0) != space.dim(0) {
        return Err(Error::SpaceMismatch(format!(
            "reference must be a single mode of dim {}",
            space.dim(0)
        )));
    }
    let idlers = idler_space(space)?;
    let rest = space.stride(0);
    let amps = joint.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); rest];
    for (s, r) in reference.amplitudes().iter().enumerate() {
        let rc = r.conj();
        for (o, &a) in out.iter_mut().zip(&amps[s * rest..(s + 1) * rest]) {
            *o += rc * a;
        }
    }
    let norm = l2_norm(&out);
    let probability = norm * norm;
    if probability < IMPOSSIBLE_PROBABILITY {
        return Err(Error::ImpossibleOutcome { probability });
    }
    Ok(Projection {
        probability,
        idlers: PureState::from_amplitudes(idlers, out)?.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternRow {
    pub pattern: ClickPattern,
    pub probability: f64,
    /// `None` when the pattern cannot occur.
    pub conditional: Option<WeightedEnsemble>,
}

/// Every click pattern of the joint state's idlers, "00..0" first.
pub fn enumerate_patterns(joint: &PureState, detector: &DetectorModel) -> Result<Vec<PatternRow>> {
    let n = joint.space().num_modes().saturating_sub(1);
    if n == 0 {
        return Err(Error::SpaceMismatch("joint state has no idler modes".into()));
    }
    ClickPattern::all(n)
        .into_par_iter()
        .map(|pattern| match condition_on_pattern(joint, &pattern, detector) {
            Ok(c) => Ok(PatternRow {
                pattern,
                probability: c.probability,
                conditional: Some(c.ensemble),
            }),
            Err(Error::ImpossibleOutcome { probability }) => Ok(PatternRow {
                pattern,
                probability,
                conditional: None,
            }),
            Err(e) => Err(e),
        })
        .collect()
}
