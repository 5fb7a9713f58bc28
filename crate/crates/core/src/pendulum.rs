//! Classical pendulum picture of the driven chain.
//!
//! Quasi-momentum `k` plays the pendulum angle `x` and `sqrt(C) n` its momentum
//! `p`, giving `H = -J cos x + (p - p0)^2 / 2` with `p0 = sqrt(C) n0`. The
//! separatrix sits at energy `+J`; states inside it ride along when `p0` is
//! moved slowly.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainSpec, HoppingSign, StateVector};

#[derive(Debug, Error, PartialEq)]
pub enum PendulumError {
    #[error("field amplitude must be positive, got {0}")]
    NonPositiveField(f64),
    #[error("coupling must be positive, got {0}")]
    NonPositiveCoupling(f64),
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Chain(#[from] crate::chain::ChainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub coupling_j: f64,
    /// `sqrt(C)`.
    pub effective_planck: f64,
    /// `p0 = sqrt(C) n0`.
    pub p_offset: f64,
}

impl PendulumParams {
    pub fn new(coupling_j: f64, field_amplitude_c: f64, center: f64) -> Result<Self, PendulumError> {
        if !(coupling_j > 0.0) {
            return Err(PendulumError::NonPositiveCoupling(coupling_j));
        }
        if !(field_amplitude_c > 0.0) {
            return Err(PendulumError::NonPositiveField(field_amplitude_c));
        }
        let h = field_amplitude_c.sqrt();
        Ok(Self {
            coupling_j,
            effective_planck: h,
            p_offset: h * center,
        })
    }

    /// Parameters of `spec` with the potential at its position at time `t`.
    pub fn from_chain(spec: &ChainSpec, t: f64) -> Result<Self, PendulumError> {
        Self::new(spec.coupling_j(), spec.field_amplitude_c(), spec.center_at(t)?)
    }

    pub fn with_offset(self, p_offset: f64) -> Self {
        Self { p_offset, ..self }
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU
    if y >= PI {
        y - TAU
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x: wrap_angle(x), p }
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

pub fn pendulum_energy(params: &PendulumParams, point: &PhasePoint) -> f64 {
    let dp = point.p - params.p_offset;
    -params.coupling_j * point.x.cos() + 0.5 * dp * dp
}

/// Energy as a function of an unwrapped angle.
fn energy_raw(params: &PendulumParams, x: f64, p: f64) -> f64 {
    let dp = p - params.p_offset;
    -params.coupling_j * x.cos() + 0.5 * dp * dp
}

/// Both branches `p = p0 +- 2 sqrt(J) |cos(x/2)|` on a uniform grid of
/// `num_points` angles covering `[-pi, pi)`. Upper branch first.
pub fn separatrix_curve(params: &PendulumParams, num_points: usize) -> Result<Vec<PhasePoint>, PendulumError> {
    if num_points < 2 {
        return Err(PendulumError::TooFewPoints(num_points));
    }
    let amp = 2.0 * params.coupling_j.sqrt();
    let xs: Vec<f64> = (0..num_points)
        .map(|k| -PI + TAU * k as f64 / num_points as f64)
        .collect();
    let half_width = |x: f64| amp * (0.5 * x).cos().abs();
    let upper = xs.iter().map(|&x| PhasePoint::new(x, params.p_offset + half_width(x)));
    let lower = xs.iter().map(|&x| PhasePoint::new(x, params.p_offset - half_width(x)));
    Ok(upper.chain(lower).collect())
}

/// Largest initial wavepacket, in sites, the separatrix can hold:
/// `round(4 sqrt(J/C) + 1)`.
pub fn estimate_nmax(coupling_j: f64, field_amplitude_c: f64) -> Result<usize, PendulumError> {
    if !(field_amplitude_c > 0.0) {
        return Err(PendulumError::NonPositiveField(field_amplitude_c));
    }
    if !(coupling_j > 0.0) {
        return Err(PendulumError::NonPositiveCoupling(coupling_j));
    }
    Ok((4.0 * (coupling_j / field_amplitude_c).sqrt() + 1.0).round() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Inside,
    Outside,
    OnSeparatrix,
}

/// Position of `point` relative to the separatrix, with a band of `tolerance`
/// in energy counted as on it.
pub fn classify(params: &PendulumParams, point: &PhasePoint, tolerance: f64) -> Result<Region, PendulumError> {
    if !(tolerance > 0.0) {
        return Err(PendulumError::BadTolerance(tolerance));
    }
    let gap = pendulum_energy(params, point) - params.coupling_j;
    Ok(if gap.abs() <= tolerance {
        Region::OnSeparatrix
    } else if gap < 0.0 {
        Region::Inside
    } else {
        Region::Outside
    })
}

/// Leapfrog (kick-drift-kick) orbit; returns `steps + 1` points including the
/// start.
pub fn classical_orbit(
    params: &PendulumParams,
    start: PhasePoint,
    dt: f64,
    steps: usize,
) -> Result<Vec<PhasePoint>, PendulumError> {
    if !(dt > 0.0) {
        return Err(PendulumError::BadTimeStep(dt));
    }
    let j = params.coupling_j;
    let (mut x, mut p) = (start.x, start.p);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(start);
    for _ in 0..steps {
        p -= 0.5 * dt * j * x.sin();
        x += dt * (p - params.p_offset);
        p -= 0.5 * dt * j * x.sin();
        out.push(PhasePoint::new(x, p));
    }
    Ok(out)
}

/// Largest energy excursion along an orbit, relative to its first point.
pub fn energy_drift(params: &PendulumParams, orbit: &[PhasePoint]) -> f64 {
    let Some(first) = orbit.first() else { return 0.0 };
    let e0 = energy_raw(params, first.x, first.p);
    orbit
        .iter()
        .map(|q| (pendulum_energy(params, q) - e0).abs())
        .fold(0.0, f64::max)
}

/// Quasi-momentum distribution `|sum_n c_n e^{-i k n}|^2 / (N+1)` on the grid
/// `k_j = 2 pi j / (N+1)`, returned as `(k wrapped to [-pi, pi), weight)`.
pub fn momentum_distribution(state: &StateVector) -> Vec<(f64, f64)> {
    let len = state.len();
    let c = state.amplitudes();
    (0..len)
        .map(|j| {
            let k = TAU * j as f64 / len as f64;
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for (n, z) in c.iter().enumerate() {
                acc += z * num_complex::Complex64::from_polar(1.0, -k * n as f64);
            }
            (wrap_angle(k), acc.norm_sqr() / len as f64)
        })
        .collect()
}

/// Probability weight strictly inside the separatrix at time `t`.
///
/// Site and quasi-momentum marginals are combined as an uncorrelated
/// ensemble: cell `(n, k)` carries `|c_n|^2 * P(k)` and sits at
/// `(x, p) = (k, sqrt(C) n)`. With positive hopping the band is `+J cos k`, so
/// the angle is shifted by `pi` to land on the pendulum's `-J cos x`.
/// Diagnostic only.
pub fn adiabaticity_report(spec: &ChainSpec, state: &StateVector, t: f64) -> Result<f64, PendulumError> {
    let params = PendulumParams::from_chain(spec, t)?;
    let shift = match spec.hopping() {
        HoppingSign::Positive => PI,
        HoppingSign::Negative => 0.0,
    };
    let momenta = momentum_distribution(state);
    let mut inside = 0.0;
    for (n, pn) in state.excitation_profile().into_iter().enumerate() {
        if pn == 0.0 {
            continue;
        }
        let p = params.effective_planck * n as f64;
        for &(k, pk) in &momenta {
            let point = PhasePoint::new(k + shift, p);
            if pendulum_energy(&params, &point) < params.coupling_j - 1e-12 {
                inside += pn * pk;
            }
        }
    }
    Ok(inside)
}
