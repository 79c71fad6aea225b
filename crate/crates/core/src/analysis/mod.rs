//! Derived quantities: scaling fits, photon statistics, W-state references
//! and Wigner grids.

mod fit;
mod wigner;

pub use fit::{fit_power_law, ScalingFit};
pub use wigner::{wigner, wigner_point, GridSpec, WignerGrid, WIGNER_TAIL_WARN};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{partial_trace_to_marginal, MultiMode, PureState};

/// Photon-number statistics of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonStats {
    pub distribution: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// `(<n^2> - <n>^2) / <n> - 1`; undefined for the vacuum.
    pub mandel_q: Option<f64>,
}

pub fn photon_statistics(state: &PureState, mode: usize) -> Result<PhotonStats> {
    let distribution = partial_trace_to_marginal(state, &[mode])?.probs;
    let mean: f64 = distribution.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let second: f64 = distribution.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum();
    let variance = second - mean * mean;
    let mandel_q = (mean > 0.0).then(|| variance / mean - 1.0);
    Ok(PhotonStats {
        distribution,
        mean,
        variance,
        mandel_q,
    })
}

/// `N`-qubit W state `(|10..0> + |01..0> + ... + |0..01>) / sqrt(N)` on
/// qubit (dim 2) idler modes.
pub fn w_state_reference(n: usize) -> Result<PureState> {
    w_state_in(n, 2)
}

/// The same W state embedded in idler modes of dimension `idler_dim`.
pub fn w_state_in(n: usize, idler_dim: usize) -> Result<PureState> {
    if n == 0 {
        return Err(Error::range("W-state size", n, ">= 1"));
    }
    w_state_on(&MultiMode::idlers(&vec![idler_dim; n])?)
}

/// Equal superposition of the single-excitation basis states of `space`.
pub fn w_state_on(space: &MultiMode) -> Result<PureState> {
    let n = space.num_modes();
    let mut amps = vec![C64::new(0.0, 0.0); space.total_dim()];
    let a = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    for j in 0..n {
        let mut occ = vec![0; n];
        occ[j] = 1;
        amps[space.flat_index(&occ)?] = a;
    }
    Ok(PureState::from_amplitudes(space.clone(), amps)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, fidelity_pure, fock_state, pacs_state};

    #[test]
    fn w_reference_examples() {
        let w1 = w_state_reference(1).unwrap();
        assert_eq!(w1.amplitudes(), &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);

        let w3 = w_state_reference(3).unwrap();
        let inv = 1.0 / 3f64.sqrt();
        for occ in [[1, 0, 0], [0, 1, 0], [0, 0, 1]] {
            assert!((w3.amplitude(&occ).unwrap().re - inv).abs() < 1e-15);
        }
        assert_eq!(w3.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 3);

        let w4 = w_state_reference(4).unwrap();
        let nz: Vec<f64> = w4.amplitudes().iter().filter(|z| z.norm() > 0.0).map(|z| z.re).collect();
        assert_eq!(nz, vec![0.5; 4]);
        assert!((w4.norm() - 1.0).abs() < 1e-15);
        assert!(w_state_reference(0).is_err());
    }

    #[test]
    fn w_reference_is_permutation_symmetric() {
        let n = 4;
        let w = w_state_in(n, 3).unwrap();
        let space = w.space().clone();
        // cyclic shift of the modes
        let mut shifted = vec![C64::new(0.0, 0.0); space.total_dim()];
        for (idx, &a) in w.amplitudes().iter().enumerate() {
            let mut occ = space.occupations(idx);
            occ.rotate_left(1);
            shifted[space.flat_index(&occ).unwrap()] = a;
        }
        let (s, _) = PureState::from_amplitudes(space, shifted).unwrap();
        assert!((fidelity_pure(&s, &w).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mandel_q_examples() {
        let coh = coherent_state(C64::new(1.0, 0.0), 32).unwrap();
        let q = photon_statistics(&coh, 0).unwrap();
        assert!(q.mandel_q.unwrap().abs() < 1e-8);
        assert!((q.distribution.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let one = photon_statistics(&fock_state(1, 8).unwrap(), 0).unwrap();
        assert!((one.mandel_q.unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(photon_statistics(&fock_state(0, 8).unwrap(), 0).unwrap().mandel_q, None);

        for &a in &[0.5, 1.0, 2.0] {
            let s = pacs_state(C64::new(a, 0.0), 1, 40).unwrap();
            let q = photon_statistics(&s, 0).unwrap().mandel_q.unwrap();
            assert!(q > -1.0 && q < 0.0, "alpha={a} q={q}");
        }
    }

    #[test]
    fn mandel_q_of_spacs_matches_brute_force() {
        // amplitudes of a†|alpha> by hand: sqrt(n) c_{n-1}
        let a: f64 = 1.0;
        let dim = 40;
        let mut c = vec![(-a * a / 2.0).exp()];
        for n in 1..dim {
            let prev = c[n - 1];
            c.push(prev * a / (n as f64).sqrt());
        }
        let w: Vec<f64> = (0..dim).map(|n| if n == 0 { 0.0 } else { n as f64 * c[n - 1] * c[n - 1] }).collect();
        let z: f64 = w.iter().sum();
        let m1: f64 = w.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / z;
        let m2: f64 = w.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum::<f64>() / z;
        let brute = (m2 - m1 * m1) / m1 - 1.0;
        let s = pacs_state(C64::new(a, 0.0), 1, dim).unwrap();
        let q = photon_statistics(&s, 0).unwrap().mandel_q.unwrap();
        assert!((q - brute).abs() < 1e-12);
    }
}
