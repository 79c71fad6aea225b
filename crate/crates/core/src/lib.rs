//! Truncated Fock-space simulation of cascaded parametric amplifiers.
//!
//! A coherent seed `|alpha>` passes through `N` two-mode squeezing stages,
//! each coupling the signal to a fresh vacuum idler. On/off detection of the
//! idlers heralds photon-added coherent states `|alpha, m>` in the signal;
//! projecting the signal instead leaves the idlers in a W-like state.
//!
//! Module map:
//! - [`fock`]: modes, states, ladder operators, marginals, fidelities
//! - [`special`]: Laguerre polynomials
//! - [`dynamics`]: stage unitaries and chain runners
//! - [`detection`]: detector POVMs, click conditioning, signal projection
//! - [`analysis`]: power-law fits, photon statistics, Wigner grids, W references
//! - [`scenario`]: TOML scenario files and their CSV/JSON/text outputs

pub mod analysis;
pub mod detection;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod output;
pub mod scenario;
pub mod special;

pub use num_complex::Complex64 as C64;

pub use analysis::{fit_power_law, photon_statistics, w_state_reference, wigner, GridSpec, PhotonStats, ScalingFit, WignerGrid};
pub use detection::{condition_on_pattern, enumerate_patterns, project_signal, ClickPattern, Conditioned, DetectorModel};
pub use dynamics::{perturbative_output, run_chain_full, run_chain_sequential, stage_generator, stage_unitary, ChainConfig, StageParams, StageUnitary};
pub use error::{Error, Result};
pub use fock::{coherent_state, fidelity_ensemble, fidelity_pure, fock_state, pacs_state, partial_trace_to_marginal, tensor, ModeSpec, MultiMode, PureState, WeightedEnsemble};
