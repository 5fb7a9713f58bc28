//! Dual-chain encoding of a qubit.
//!
//! Two identical sub-chains share one driven single-excitation dynamics. The
//! logical state `a|0> + b|1>` is stored as
//! `sum_n c_n (a |g>|n> + b |n>|g>)`, where `|g>` is a sub-chain with no flipped
//! spin and `|n>` one with site `n` flipped. Every dynamical phase lands in the
//! shared `c_n` and so is common to both branches.
//!
//! Decoding applies a CNOT between the two last spins (control in sub-chain 1,
//! target in sub-chain 2) and reads the last spin of sub-chain 2.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainSpec, StateVector, NORM_TOLERANCE};
use crate::propagator::{evolve, IntegratorConfig, PropagatorError, Trajectory};

#[derive(Debug, Error, PartialEq)]
pub enum DualError {
    #[error("logical qubit norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("state has {found} sites, chain has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogicalQubit {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl LogicalQubit {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self, DualError> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(DualError::NotNormalized(norm));
        }
        Ok(Self { alpha, beta })
    }

    /// `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        Self {
            alpha: Complex64::new((0.5 * theta).cos(), 0.0),
            beta: Complex64::from_polar((0.5 * theta).sin(), phi),
        }
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &LogicalQubit) -> f64 {
        (self.alpha.conj() * other.alpha + self.beta.conj() * other.beta).norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualChannelState {
    pub logical: LogicalQubit,
    pub shared: StateVector,
}

/// Basis label for the two-sub-chain space restricted to at most one flip per
/// sub-chain. `Flip(None)` is `|g>`; `Flip(Some(n))` has site `n` flipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TwoChainBasis {
    pub first: Option<usize>,
    pub second: Option<usize>,
    /// Extra flip of the last spin of sub-chain 2, set by the CNOT target.
    pub second_last_raised: bool,
}

impl DualChannelState {
    /// Expansion in the two-chain basis, skipping zero amplitudes.
    pub fn components(&self) -> Vec<(TwoChainBasis, Complex64)> {
        let mut out = Vec::new();
        for (n, &c) in self.shared.amplitudes().iter().enumerate() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            out.push((
                TwoChainBasis {
                    first: None,
                    second: Some(n),
                    second_last_raised: false,
                },
                self.logical.alpha * c,
            ));
            out.push((
                TwoChainBasis {
                    first: Some(n),
                    second: None,
                    second_last_raised: false,
                },
                self.logical.beta * c,
            ));
        }
        out
    }
}

/// Places the excitation on site 0 of the shared dynamics.
pub fn encode(q: LogicalQubit, spec: &ChainSpec) -> DualChannelState {
    DualChannelState {
        logical: q,
        shared: spec.initial_delta(0).expect("chains have at least two sites"),
    }
}

/// Evolves both sub-chains, which amounts to evolving the shared amplitudes once.
pub fn evolve_dual(
    state: &DualChannelState,
    spec: &ChainSpec,
    t0: f64,
    t1: f64,
    config: &IntegratorConfig,
) -> Result<(DualChannelState, Trajectory), DualError> {
    if state.shared.len() != spec.num_sites() {
        return Err(DualError::LengthMismatch {
            expected: spec.num_sites(),
            found: state.shared.len(),
        });
    }
    let (shared, traj) = evolve(&state.shared, spec, t0, t1, config)?;
    Ok((
        DualChannelState {
            logical: state.logical,
            shared,
        },
        traj,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStatus {
    /// Spin-up is possible; on that outcome the qubit sits at the end of sub-chain 1.
    Ready,
    /// No weight on the last site yet; wait and measure again.
    WaitAndRemeasure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    /// Probability that the last spin of sub-chain 2 reads up.
    pub success_probability: f64,
    /// Fidelity of the post-selected sub-chain-1 qubit with the input (0 if
    /// spin-up is impossible).
    pub recovered_state_fidelity: f64,
    /// Sub-chain-1 qubit after a spin-up outcome, `|g> -> |0>`, `|N> -> |1>`,
    /// with the common phase of `c_N` removed.
    pub conditional_logical: Option<LogicalQubit>,
    pub status: DecodeStatus,
    /// Excitation profile at decode time, kept for the re-measure branch.
    pub profile: Vec<f64>,
}

fn cnot_on_last_spins(
    components: Vec<(TwoChainBasis, Complex64)>,
    last: usize,
) -> Vec<(TwoChainBasis, Complex64)> {
    components
        .into_iter()
        .map(|(mut b, a)| {
            if b.first == Some(last) {
                if b.second == Some(last) {
                    b.second = None;
                } else if b.second.is_none() {
                    b.second = Some(last);
                } else {
                    b.second_last_raised = !b.second_last_raised;
                }
            }
            (b, a)
        })
        .collect()
}

pub fn decode_and_measure(state: &DualChannelState) -> DecodeOutcome {
    let last = state.shared.len() - 1;
    let decoded = cnot_on_last_spins(state.components(), last);
    let up = |b: &TwoChainBasis| b.second == Some(last) || b.second_last_raised;

    let mut success_probability = 0.0;
    let mut alpha = Complex64::new(0.0, 0.0);
    let mut beta = Complex64::new(0.0, 0.0);
    for (b, a) in &decoded {
        if !up(b) {
            continue;
        }
        success_probability += a.norm_sqr();
        match b.first {
            None => alpha += a,
            Some(n) if n == last => beta += a,
            Some(_) => {}
        }
    }
    let profile = state.shared.excitation_profile();
    if success_probability == 0.0 {
        return DecodeOutcome {
            success_probability,
            recovered_state_fidelity: 0.0,
            conditional_logical: None,
            status: DecodeStatus::WaitAndRemeasure,
            profile,
        };
    }
    // divide out c_N itself: its phase is common to both branches, so the
    // reported qubit is fixed in gauge
    let c_last = state.shared.amplitude(last);
    let gauge = c_last.conj() / c_last.norm();
    let scale = success_probability.sqrt();
    let conditional = LogicalQubit {
        alpha: alpha * gauge / scale,
        beta: beta * gauge / scale,
    };
    DecodeOutcome {
        success_probability: success_probability.min(1.0),
        recovered_state_fidelity: conditional.fidelity(&state.logical).min(1.0),
        conditional_logical: Some(conditional),
        status: DecodeStatus::Ready,
        profile,
    }
}
