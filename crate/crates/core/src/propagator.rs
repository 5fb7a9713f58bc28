//! Time integration of `i dc/dt = H(t) c`.
//!
//! The production scheme is the Cayley (Crank-Nicolson) map with the
//! Hamiltonian sampled at the step midpoint,
//!
//! ```text
//! (I + i dt/2 H(t + dt/2)) c_new = (I - i dt/2 H(t + dt/2)) c_old,
//! ```
//!
//! solved as a complex tridiagonal system in O(N). It is exactly unitary for
//! real symmetric `H`, so the norm only drifts by round-off.
//!
//! [`oracle_evolve`] is an independent reference for small chains: it
//! exponentiates the dense midpoint Hamiltonian through its eigendecomposition
//! on a much finer grid.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{BondNoise, ChainError, ChainParams, ChainSpec, StateVector};
use crate::disorder::{DynamicRealization, GENERATOR_NAME};

/// Largest chain the dense oracle accepts.
pub const ORACLE_MAX_SITES: usize = 16;

/// Deviation above which [`convergence_check`] reports failure.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-4;

/// Steps between exact re-evaluations of the dynamic-noise phasors.
const PHASOR_RESYNC: usize = 1024;

#[derive(Debug, Error, PartialEq)]
pub enum PropagatorError {
    #[error("non-finite amplitude at t = {t}")]
    NumericalHealth { t: f64 },
    #[error("invalid integrator setting: {0}")]
    InvalidConfig(String),
    #[error("state has {found} amplitudes, chain has {expected} sites")]
    LengthMismatch { expected: usize, found: usize },
    #[error("dense oracle limited to {max} sites, chain has {found}")]
    ChainTooLarge { max: usize, found: usize },
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    CayleyMidpoint,
    /// Dense spectral exponential per step; small chains only.
    FineStepOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub snapshot_interval: f64,
    pub method: Method,
    /// Keep full complex amplitudes at every snapshot.
    #[serde(default)]
    pub store_amplitudes: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            snapshot_interval: 100.0,
            method: Method::CayleyMidpoint,
            store_amplitudes: false,
        }
    }
}

impl IntegratorConfig {
    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }

    pub fn with_snapshot_interval(self, snapshot_interval: f64) -> Self {
        Self {
            snapshot_interval,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), PropagatorError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(PropagatorError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.snapshot_interval >= self.dt) {
            return Err(PropagatorError::InvalidConfig(format!(
                "snapshot_interval {} is shorter than dt {}",
                self.snapshot_interval, self.dt
            )));
        }
        Ok(())
    }
}

/// Provenance carried by every trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub chain: ChainParams,
    pub integrator: IntegratorConfig,
    pub t0: f64,
    pub t1: f64,
    pub generator: String,
    pub seed: Option<u64>,
    pub code_version: String,
}

impl RunMetadata {
    fn new(spec: &ChainSpec, config: &IntegratorConfig, t0: f64, t1: f64) -> Self {
        Self {
            chain: spec.params(),
            integrator: *config,
            t0,
            t1,
            generator: GENERATOR_NAME.to_string(),
            seed: spec.disorder().seed(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Snapshots of an evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub profiles: Vec<Vec<f64>>,
    pub peaks: Vec<(usize, f64)>,
    pub end_probability: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<Vec<Complex64>>>,
    pub metadata: RunMetadata,
}

impl Trajectory {
    fn new(metadata: RunMetadata, store_amplitudes: bool) -> Self {
        Self {
            times: Vec::new(),
            profiles: Vec::new(),
            peaks: Vec::new(),
            end_probability: Vec::new(),
            amplitudes: store_amplitudes.then(Vec::new),
            metadata,
        }
    }

    fn record(&mut self, t: f64, c: &[Complex64]) {
        let profile: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
        self.peaks.push(crate::chain::peak_of(&profile));
        self.end_probability.push(*profile.last().unwrap_or(&0.0));
        self.profiles.push(profile);
        self.times.push(t);
        if let Some(a) = &mut self.amplitudes {
            a.push(c.to_vec());
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the snapshot closest to `t`.
    pub fn nearest(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
    }

    pub fn profile_at(&self, t: f64) -> Option<&[f64]> {
        self.nearest(t).map(|i| self.profiles[i].as_slice())
    }

    pub fn peak_at(&self, t: f64) -> Option<(usize, f64)> {
        self.nearest(t).map(|i| self.peaks[i])
    }

    /// Largest `|sum(profile) - 1|` over all snapshots.
    pub fn max_norm_drift(&self) -> f64 {
        self.profiles
            .iter()
            .map(|p| (p.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Rotating phasors `e^{i(w t + phi)}` for every dynamic-noise term, advanced
/// by one multiplication per step instead of one cosine.
struct PhasorBank<'a> {
    realization: &'a DynamicRealization,
    re: Vec<f64>,
    im: Vec<f64>,
    rot_re: Vec<f64>,
    rot_im: Vec<f64>,
    since_sync: usize,
}

impl<'a> PhasorBank<'a> {
    fn new(realization: &'a DynamicRealization, t_first: f64, dt: f64) -> Self {
        let n = realization.omegas().len();
        let mut bank = Self {
            realization,
            re: vec![0.0; n],
            im: vec![0.0; n],
            rot_re: realization.omegas().iter().map(|w| (w * dt).cos()).collect(),
            rot_im: realization.omegas().iter().map(|w| (w * dt).sin()).collect(),
            since_sync: 0,
        };
        bank.sync(t_first);
        bank
    }

    fn sync(&mut self, t: f64) {
        let r = self.realization;
        for (k, (w, phi)) in r.omegas().iter().zip(r.phases()).enumerate() {
            let (s, c) = (w * t + phi).sin_cos();
            self.re[k] = c;
            self.im[k] = s;
        }
        self.since_sync = 0;
    }

    /// Writes the offsets at the current time and advances by one step.
    /// `t_next` is the exact time of the following sample.
    fn emit_and_advance(&mut self, out: &mut [f64], t_next: f64) {
        let terms = self.realization.num_terms();
        let a = self.realization.amplitude();
        for (bond, o) in out.iter_mut().enumerate() {
            *o = a * self.re[bond * terms..(bond + 1) * terms].iter().sum::<f64>();
        }
        self.since_sync += 1;
        if self.since_sync >= PHASOR_RESYNC {
            self.sync(t_next);
            return;
        }
        for k in 0..self.re.len() {
            let (x, y) = (self.re[k], self.im[k]);
            self.re[k] = x * self.rot_re[k] - y * self.rot_im[k];
            self.im[k] = x * self.rot_im[k] + y * self.rot_re[k];
        }
    }
}

/// Reusable scratch for the Cayley step.
pub struct CayleyStepper {
    diag: Vec<f64>,
    hop: Vec<f64>,
    inv_w: Vec<Complex64>,
    fwd: Vec<Complex64>,
}

impl CayleyStepper {
    pub fn new(num_sites: usize) -> Self {
        Self {
            diag: vec![0.0; num_sites],
            hop: vec![0.0; num_sites.saturating_sub(1)],
            inv_w: vec![Complex64::new(0.0, 0.0); num_sites],
            fwd: vec![Complex64::new(0.0, 0.0); num_sites],
        }
    }

    fn load_static_hopping(&mut self, spec: &ChainSpec) {
        let sign = 0.5 * spec.hopping().factor();
        let j = spec.coupling_j();
        match spec.noise() {
            BondNoise::Static(d) => {
                for (h, delta) in self.hop.iter_mut().zip(d) {
                    *h = sign * (j + delta);
                }
            }
            _ => self.hop.iter_mut().for_each(|h| *h = sign * j),
        }
    }

    fn load_dynamic_hopping(&mut self, spec: &ChainSpec, offsets: &[f64]) {
        let sign = 0.5 * spec.hopping().factor();
        let j = spec.coupling_j();
        for (h, delta) in self.hop.iter_mut().zip(offsets) {
            *h = sign * (j + delta);
        }
    }

    /// One Cayley step in place using the loaded `diag` and `hop`.
    ///
    /// With `tau = dt/2`, `a_i = 1 + i tau d_i` and off-diagonal `i tau h_i`,
    /// Gaussian elimination gives pivots `w_i = a_i + (tau h_{i-1})^2 / w_{i-1}`,
    /// so only one complex reciprocal per row is needed.
    fn solve_in_place(&mut self, c: &mut [Complex64], dt: f64) {
        let n = c.len();
        let tau = 0.5 * dt;
        let diag = &self.diag[..n];
        let hop = &self.hop[..n - 1];
        let inv_w = &mut self.inv_w[..n];
        let fwd = &mut self.fwd[..n];

        // rhs_i = c_i - i tau (H c)_i
        let rhs = |hc: Complex64, ci: Complex64| Complex64::new(ci.re + tau * hc.im, ci.im - tau * hc.re);

        let (mut ir, mut ii);
        {
            let (wr, wi) = (1.0, tau * diag[0]);
            let s = 1.0 / (wr * wr + wi * wi);
            ir = wr * s;
            ii = -wi * s;
        }
        let iw0 = Complex64::new(ir, ii);
        inv_w[0] = iw0;
        let hc0 = if n > 1 { c[0] * diag[0] + c[1] * hop[0] } else { c[0] * diag[0] };
        fwd[0] = rhs(hc0, c[0]) * iw0;
        for i in 1..n {
            let b = tau * hop[i - 1];
            let bb = b * b;
            let wr = 1.0 + bb * ir;
            let wi = tau * diag[i] + bb * ii;
            let s = 1.0 / (wr * wr + wi * wi);
            ir = wr * s;
            ii = -wi * s;
            let iw = Complex64::new(ir, ii);
            inv_w[i] = iw;
            let mut hc = c[i] * diag[i] + c[i - 1] * hop[i - 1];
            if i + 1 < n {
                hc += c[i + 1] * hop[i];
            }
            // fwd_i = (rhs_i - i b fwd_{i-1}) / w_i
            let f = fwd[i - 1];
            let r = rhs(hc, c[i]) - Complex64::new(-b * f.im, b * f.re);
            fwd[i] = r * iw;
        }
        c[n - 1] = fwd[n - 1];
        for i in (0..n - 1).rev() {
            // x_i = fwd_i - i b / w_i * x_{i+1}
            let b = tau * hop[i];
            let q = Complex64::new(-b * inv_w[i].im, b * inv_w[i].re);
            c[i] = fwd[i] - q * c[i + 1];
        }
    }

    /// Advances `c` from `t` to `t + dt` under `spec`.
    pub fn step(&mut self, spec: &ChainSpec, c: &mut [Complex64], t: f64, dt: f64) {
        let t_mid = t + 0.5 * dt;
        spec.fill_diagonal(spec.schedule().center_unchecked(t_mid), &mut self.diag);
        match spec.noise() {
            BondNoise::Dynamic(r) => {
                let mut offsets = vec![0.0; self.hop.len()];
                r.offsets_at(t_mid, &mut offsets);
                self.load_dynamic_hopping(spec, &offsets);
            }
            _ => self.load_static_hopping(spec),
        }
        self.solve_in_place(c, dt);
    }
}

fn check_state(spec: &ChainSpec, state: &StateVector) -> Result<(), PropagatorError> {
    if state.len() != spec.num_sites() {
        return Err(PropagatorError::LengthMismatch {
            expected: spec.num_sites(),
            found: state.len(),
        });
    }
    Ok(())
}

fn check_finite(c: &[Complex64], t: f64) -> Result<(), PropagatorError> {
    if c.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(PropagatorError::NumericalHealth { t })
    }
}

/// One Cayley step from `t` to `t + dt`.
pub fn step(
    state: &StateVector,
    spec: &ChainSpec,
    t: f64,
    dt: f64,
) -> Result<StateVector, PropagatorError> {
    check_state(spec, state)?;
    if t < 0.0 {
        return Err(ChainError::NegativeTime(t).into());
    }
    let mut c = state.amplitudes().to_vec();
    CayleyStepper::new(spec.num_sites()).step(spec, &mut c, t, dt);
    check_finite(&c, t + dt)?;
    Ok(StateVector::from_evolved(c))
}

/// Splits `[t0, t1]` into `full` steps of `dt` plus an optional shorter tail.
fn step_plan(t0: f64, t1: f64, dt: f64) -> (usize, f64) {
    let span = t1 - t0;
    let full = (span / dt * (1.0 + 1e-12)).floor() as usize;
    let tail = span - full as f64 * dt;
    let tail = if tail > 1e-9 * dt { tail } else { 0.0 };
    (full, tail)
}

/// Propagates from `t0` to `t1`, recording a snapshot at `t0`, every
/// `snapshot_interval`, and at `t1`.
pub fn evolve(
    state: &StateVector,
    spec: &ChainSpec,
    t0: f64,
    t1: f64,
    config: &IntegratorConfig,
) -> Result<(StateVector, Trajectory), PropagatorError> {
    config.validate()?;
    check_state(spec, state)?;
    if t0 < 0.0 {
        return Err(ChainError::NegativeTime(t0).into());
    }
    if t1 < t0 {
        return Err(PropagatorError::InvalidConfig(format!("t1 = {t1} precedes t0 = {t0}")));
    }
    let mut traj = Trajectory::new(RunMetadata::new(spec, config, t0, t1), config.store_amplitudes);
    let mut c = state.amplitudes().to_vec();
    traj.record(t0, &c);
    if t1 == t0 {
        return Ok((state.clone(), traj));
    }

    let dt = config.dt;
    let (full, tail) = step_plan(t0, t1, dt);
    let every = ((config.snapshot_interval / dt).round() as usize).max(1);
    let health_every = every.min(10_000);
    let time_of = |k: usize| t0 + k as f64 * dt;

    match config.method {
        Method::CayleyMidpoint => {
            let mut stepper = CayleyStepper::new(spec.num_sites());
            stepper.load_static_hopping(spec);
            let mut bank = spec
                .dynamic_realization()
                .map(|r| PhasorBank::new(r, t0 + 0.5 * dt, dt));
            let mut offsets = vec![0.0; spec.num_bonds()];
            let schedule = spec.schedule();
            for k in 0..full {
                let t_mid = t0 + (k as f64 + 0.5) * dt;
                spec.fill_diagonal(schedule.center_unchecked(t_mid), &mut stepper.diag);
                if let Some(bank) = bank.as_mut() {
                    bank.emit_and_advance(&mut offsets, t_mid + dt);
                    stepper.load_dynamic_hopping(spec, &offsets);
                }
                stepper.solve_in_place(&mut c, dt);
                let done = k + 1;
                if done % health_every == 0 {
                    check_finite(&c, time_of(done))?;
                }
                if done % every == 0 && (done < full || tail > 0.0) {
                    traj.record(time_of(done), &c);
                }
            }
            if tail > 0.0 {
                stepper.step(spec, &mut c, time_of(full), tail);
            }
        }
        Method::FineStepOracle => {
            ensure_oracle_size(spec)?;
            let mut dense = DenseStepper::new(spec.num_sites());
            for k in 0..full {
                dense.step(spec, &mut c, time_of(k), dt);
                let done = k + 1;
                if done % every == 0 && (done < full || tail > 0.0) {
                    traj.record(time_of(done), &c);
                }
            }
            if tail > 0.0 {
                dense.step(spec, &mut c, time_of(full), tail);
            }
        }
    }
    check_finite(&c, t1)?;
    traj.record(t1, &c);
    Ok((StateVector::from_evolved(c), traj))
}

fn ensure_oracle_size(spec: &ChainSpec) -> Result<(), PropagatorError> {
    if spec.num_sites() > ORACLE_MAX_SITES {
        return Err(PropagatorError::ChainTooLarge {
            max: ORACLE_MAX_SITES,
            found: spec.num_sites(),
        });
    }
    Ok(())
}

/// Dense `exp(-i H dt)` through the eigendecomposition of the real symmetric `H`.
struct DenseStepper {
    scratch: Vec<Complex64>,
}

impl DenseStepper {
    fn new(n: usize) -> Self {
        Self {
            scratch: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    fn step(&mut self, spec: &ChainSpec, c: &mut [Complex64], t: f64, dt: f64) {
        let h = dense_hamiltonian(spec, t + 0.5 * dt);
        apply_spectral_exponential(&h, dt, c, &mut self.scratch);
    }
}

fn dense_hamiltonian(spec: &ChainSpec, t: f64) -> DMatrix<f64> {
    let n = spec.num_sites();
    let n0 = spec.schedule().center_unchecked(t);
    let sign = 0.5 * spec.hopping().factor();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            spec.potential_at(i as f64 - n0)
        } else if i + 1 == j || j + 1 == i {
            sign * (spec.coupling_j() + spec.bond_offset(i.min(j), t))
        } else {
            0.0
        }
    })
}

/// `c <- V diag(e^{-i lambda dt}) V^T c`.
fn apply_spectral_exponential(h: &DMatrix<f64>, dt: f64, c: &mut [Complex64], scratch: &mut [Complex64]) {
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let n = c.len();
    for k in 0..n {
        let mut proj = Complex64::new(0.0, 0.0);
        for i in 0..n {
            proj += c[i] * v[(i, k)];
        }
        scratch[k] = proj * Complex64::from_polar(1.0, -eig.eigenvalues[k] * dt);
    }
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            acc += scratch[k] * v[(i, k)];
        }
        c[i] = acc;
    }
}

/// Reference propagation with dense exponentials of the midpoint
/// Hamiltonian on steps of at most `fine_dt`. For chains of at most
/// [`ORACLE_MAX_SITES`] sites.
pub fn oracle_evolve(
    state: &StateVector,
    spec: &ChainSpec,
    t0: f64,
    t1: f64,
    fine_dt: f64,
) -> Result<StateVector, PropagatorError> {
    ensure_oracle_size(spec)?;
    check_state(spec, state)?;
    if !(fine_dt > 0.0) {
        return Err(PropagatorError::InvalidConfig(format!("fine_dt must be positive, got {fine_dt}")));
    }
    if t1 < t0 || t0 < 0.0 {
        return Err(PropagatorError::InvalidConfig(format!("bad interval [{t0}, {t1}]")));
    }
    let mut c = state.amplitudes().to_vec();
    if t1 == t0 {
        return Ok(state.clone());
    }
    let steps = ((t1 - t0) / fine_dt).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    let mut dense = DenseStepper::new(spec.num_sites());
    for k in 0..steps {
        dense.step(spec, &mut c, t0 + k as f64 * h, h);
    }
    check_finite(&c, t1)?;
    Ok(StateVector::from_evolved(c))
}

/// `exp(-i H (t1 - t0)) c` for a time-independent chain, in one shot.
pub fn spectral_exponential(
    state: &StateVector,
    spec: &ChainSpec,
    duration: f64,
) -> Result<StateVector, PropagatorError> {
    ensure_oracle_size(spec)?;
    check_state(spec, state)?;
    if spec.is_time_dependent() {
        return Err(PropagatorError::InvalidConfig(
            "single exponential requires a time-independent chain".into(),
        ));
    }
    let mut c = state.amplitudes().to_vec();
    let mut scratch = c.clone();
    apply_spectral_exponential(&dense_hamiltonian(spec, 0.0), duration, &mut c, &mut scratch);
    Ok(StateVector::from_evolved(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub dt: f64,
    /// Max |p_dt(n) - p_{dt/2}(n)| over the final profile.
    pub deviation: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn final_profile(
    state: &StateVector,
    spec: &ChainSpec,
    t1: f64,
    config: &IntegratorConfig,
) -> Result<Vec<f64>, PropagatorError> {
    let cfg = IntegratorConfig {
        snapshot_interval: t1.max(config.dt),
        store_amplitudes: false,
        ..*config
    };
    Ok(evolve(state, spec, 0.0, t1, &cfg)?.0.excitation_profile())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs `[0, t1]` at `dt` and `dt/2` and compares the final profiles.
pub fn convergence_check(
    spec: &ChainSpec,
    state: &StateVector,
    t1: f64,
    config: &IntegratorConfig,
) -> Result<ConvergenceReport, PropagatorError> {
    let coarse = final_profile(state, spec, t1, config)?;
    let fine = final_profile(state, spec, t1, &config.with_dt(config.dt / 2.0))?;
    let deviation = max_abs_diff(&coarse, &fine);
    Ok(ConvergenceReport {
        dt: config.dt,
        deviation,
        threshold: CONVERGENCE_THRESHOLD,
        passed: deviation <= CONVERGENCE_THRESHOLD,
    })
}

/// Observed order of accuracy from three step sizes `dt`, `dt/2`, `dt/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub coarse_deviation: f64,
    pub fine_deviation: f64,
    /// `coarse / fine`; about 4 for a second-order scheme.
    pub ratio: f64,
}

pub fn convergence_order(
    spec: &ChainSpec,
    state: &StateVector,
    t1: f64,
    config: &IntegratorConfig,
) -> Result<OrderReport, PropagatorError> {
    let p1 = final_profile(state, spec, t1, config)?;
    let p2 = final_profile(state, spec, t1, &config.with_dt(config.dt / 2.0))?;
    let p4 = final_profile(state, spec, t1, &config.with_dt(config.dt / 4.0))?;
    let coarse_deviation = max_abs_diff(&p1, &p2);
    let fine_deviation = max_abs_diff(&p2, &p4);
    Ok(OrderReport {
        coarse_deviation,
        fine_deviation,
        ratio: coarse_deviation / fine_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{PotentialSchedule, PotentialWindow};
    use crate::disorder::{DisorderModel, DynamicDisorder};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn rabi_pair() -> ChainSpec {
        ChainSpec::new(2, 1.0, 0.0, PotentialSchedule::stationary(0.0)).unwrap()
    }

    #[test]
    fn zero_generator_is_identity() {
        let spec = ChainSpec::uncoupled(5, 0.0, PotentialSchedule::stationary(0.0)).unwrap();
        let s = spec.initial_gaussian(2.0, 1.0, 0..=4).unwrap();
        let out = step(&s, &spec, 0.0, 0.1).unwrap();
        assert!(out.max_amplitude_difference(&s) < 1e-15);
    }

    #[test]
    fn two_site_rabi_transfer() {
        let spec = rabi_pair();
        let s = spec.initial_delta(0).unwrap();
        let (out, _) = evolve(&s, &spec, 0.0, PI, &IntegratorConfig::default()).unwrap();
        assert_abs_diff_eq!(out.probability(1), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn rabi_population_tracks_closed_form() {
        let spec = rabi_pair();
        let s = spec.initial_delta(0).unwrap();
        let cfg = IntegratorConfig::default().with_snapshot_interval(0.25);
        let (_, traj) = evolve(&s, &spec, 0.0, 10.0, &cfg).unwrap();
        for (t, p) in traj.times.iter().zip(&traj.profiles) {
            assert_abs_diff_eq!(p[1], (t / 2.0).sin().powi(2), epsilon = 1e-6);
        }
    }

    #[test]
    fn zero_duration_returns_input() {
        let spec = rabi_pair();
        let s = spec.initial_delta(1).unwrap();
        let (out, traj) = evolve(&s, &spec, 3.0, 3.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(out, s);
        assert_eq!(traj.len(), 1);
    }

    #[test]
    fn snapshot_times_and_tail_step() {
        let spec = rabi_pair();
        let s = spec.initial_delta(0).unwrap();
        let cfg = IntegratorConfig::default().with_dt(0.1).with_snapshot_interval(1.0);
        let (out, traj) = evolve(&s, &spec, 0.0, 3.05, &cfg).unwrap();
        assert_eq!(traj.times.len(), 5);
        assert_abs_diff_eq!(traj.times[3], 3.0, epsilon = 1e-12);
        assert_eq!(*traj.times.last().unwrap(), 3.05);
        // tail step lands on the same final state as a direct run at dt = 0.05
        let (fine, _) = evolve(&s, &spec, 0.0, 3.05, &cfg.with_dt(0.05)).unwrap();
        assert!(out.max_amplitude_difference(&fine) < 1e-3);
    }

    #[test]
    fn rejects_bad_config() {
        let spec = rabi_pair();
        let s = spec.initial_delta(0).unwrap();
        let bad = IntegratorConfig::default().with_dt(0.0);
        assert!(matches!(evolve(&s, &spec, 0.0, 1.0, &bad), Err(PropagatorError::InvalidConfig(_))));
        let bad = IntegratorConfig::default().with_snapshot_interval(1e-4);
        assert!(evolve(&s, &spec, 0.0, 1.0, &bad).is_err());
        assert!(evolve(&s, &spec, 2.0, 1.0, &IntegratorConfig::default()).is_err());
        let wrong = ChainSpec::new(3, 1.0, 0.0, PotentialSchedule::stationary(0.0))
            .unwrap()
            .initial_delta(0)
            .unwrap();
        assert!(matches!(
            evolve(&wrong, &spec, 0.0, 1.0, &IntegratorConfig::default()),
            Err(PropagatorError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn step_matches_stepper_in_evolve() {
        let spec = ChainSpec::new(9, 1.0, 3.0, PotentialSchedule::linear(1.0, 0.2, 100.0).unwrap()).unwrap();
        let s = spec.initial_gaussian(2.0, 1.0, 0..=4).unwrap();
        let mut cur = s.clone();
        for k in 0..50 {
            cur = step(&cur, &spec, k as f64 * 0.01, 0.01).unwrap();
        }
        let cfg = IntegratorConfig::default().with_dt(0.01).with_snapshot_interval(0.5);
        let (out, _) = evolve(&s, &spec, 0.0, 0.5, &cfg).unwrap();
        assert!(out.max_amplitude_difference(&cur) < 1e-13);
    }

    #[test]
    fn cayley_matches_dense_oracle() {
        let spec = ChainSpec::new(8, 1.0, 2.5, PotentialSchedule::linear(0.5, 0.07, 100.0).unwrap())
            .unwrap()
            .with_window(PotentialWindow::windowed(6))
            .unwrap();
        let s = spec.initial_delta(1).unwrap();
        let cfg = IntegratorConfig::default().with_dt(2e-5).with_snapshot_interval(50.0);
        let (prod, _) = evolve(&s, &spec, 0.0, 50.0, &cfg).unwrap();
        let oracle = oracle_evolve(&s, &spec, 0.0, 50.0, 5e-5).unwrap();
        let dev = prod.max_amplitude_difference(&oracle);
        assert!(dev < 1e-6, "{dev}");
    }

    #[test]
    fn phasor_bank_matches_direct_offsets() {
        let dd = DynamicDisorder::new(0.025, 1.0, 10, 3).unwrap();
        let spec = ChainSpec::new(6, 1.0, 2.0, PotentialSchedule::linear(0.0, 0.01, 1e6).unwrap())
            .unwrap()
            .with_disorder(DisorderModel::Dynamic(dd))
            .unwrap();
        let r = spec.dynamic_realization().unwrap();
        let dt = 1e-3;
        let mut bank = PhasorBank::new(r, 0.5 * dt, dt);
        let mut got = vec![0.0; 5];
        let mut want = vec![0.0; 5];
        for k in 0..5000 {
            let t_mid = (k as f64 + 0.5) * dt;
            r.offsets_at(t_mid, &mut want);
            bank.emit_and_advance(&mut got, t_mid + dt);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "step {k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn oracle_rejects_large_chain() {
        let spec = ChainSpec::new(17, 1.0, 0.0, PotentialSchedule::stationary(0.0)).unwrap();
        let s = spec.initial_delta(0).unwrap();
        assert_eq!(
            oracle_evolve(&s, &spec, 0.0, 1.0, 0.01),
            Err(PropagatorError::ChainTooLarge { max: 16, found: 17 })
        );
    }

    #[test]
    fn oracle_constant_generator_is_single_exponential() {
        let spec = ChainSpec::new(7, 1.0, 1.5, PotentialSchedule::stationary(2.3)).unwrap();
        let s = spec.initial_gaussian(3.0, 1.0, 1..=5).unwrap();
        let stepped = oracle_evolve(&s, &spec, 0.0, 7.0, 0.01).unwrap();
        let once = spectral_exponential(&s, &spec, 7.0).unwrap();
        assert!(stepped.max_amplitude_difference(&once) < 1e-11);
    }

    #[test]
    fn uncoupled_sites_only_pick_up_phase() {
        let spec = ChainSpec::uncoupled(6, 2.0, PotentialSchedule::linear(0.0, 0.3, 10.0).unwrap()).unwrap();
        let s = spec.initial_gaussian(2.0, 1.5, 0..=5).unwrap();
        let out = oracle_evolve(&s, &spec, 0.0, 10.0, 0.01).unwrap();
        for (a, b) in s.excitation_profile().iter().zip(out.excitation_profile()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let (prod, _) = evolve(&s, &spec, 0.0, 10.0, &IntegratorConfig::default()).unwrap();
        for (a, b) in s.excitation_profile().iter().zip(prod.excitation_profile()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn fine_step_method_runs_through_evolve() {
        let spec = ChainSpec::new(5, 1.0, 1.0, PotentialSchedule::linear(0.0, 0.1, 20.0).unwrap()).unwrap();
        let s = spec.initial_delta(0).unwrap();
        let cfg = IntegratorConfig {
            dt: 1e-3,
            snapshot_interval: 1.0,
            method: Method::FineStepOracle,
            store_amplitudes: true,
        };
        let (a, traj) = evolve(&s, &spec, 0.0, 5.0, &cfg).unwrap();
        let b = oracle_evolve(&s, &spec, 0.0, 5.0, 1e-3).unwrap();
        assert!(a.max_amplitude_difference(&b) < 1e-12);
        assert_eq!(traj.amplitudes.as_ref().unwrap().len(), traj.len());
    }

    #[test]
    fn zero_generator_convergence_is_exact() {
        let spec = ChainSpec::uncoupled(4, 0.0, PotentialSchedule::stationary(0.0)).unwrap();
        let s = spec.initial_delta(2).unwrap();
        let r = convergence_check(&spec, &s, 10.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(r.deviation, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn rabi_convergence_is_second_order() {
        let spec = rabi_pair();
        let s = spec.initial_delta(0).unwrap();
        let cfg = IntegratorConfig::default().with_dt(0.05).with_snapshot_interval(0.05);
        let r = convergence_order(&spec, &s, 3.0, &cfg).unwrap();
        assert!((r.ratio - 4.0).abs() < 0.2, "ratio {}", r.ratio);
    }
}
