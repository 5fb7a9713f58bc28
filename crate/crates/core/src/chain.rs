//! Chain configuration, the moving parabolic potential and the
//! single-excitation Hamiltonian.
//!
//! Sites are indexed `0..num_sites`. In the one-flip subspace the state is a
//! vector of amplitudes `c_m` and the generator is the real symmetric
//! tridiagonal matrix
//!
//! ```text
//! H[n][n]   = (C/2) (n - n0(t))^2          (possibly clamped outside a window)
//! H[n][n+1] = sign * (J + delta_n(t)) / 2
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disorder::{DisorderError, DisorderModel, DynamicRealization};

/// Normalization tolerance for constructed states.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("invalid chain parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("time {0} is negative")]
    NegativeTime(f64),
    #[error("site {site} outside chain of {num_sites} sites")]
    SiteOutOfRange { site: usize, num_sites: usize },
    #[error("state norm {norm} differs from 1 by more than {tolerance:e}")]
    NotNormalized { norm: f64, tolerance: f64 },
    #[error("state has {found} amplitudes, chain has {expected} sites")]
    LengthMismatch { expected: usize, found: usize },
    #[error("empty site span")]
    EmptySpan,
    #[error(transparent)]
    Disorder(#[from] DisorderError),
}

fn invalid(name: &'static str, reason: impl Into<String>) -> ChainError {
    ChainError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// A stretch of constant-velocity motion of the potential minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    /// Sites per unit time; zero is a pause.
    pub speed: f64,
}

/// Piecewise-linear trajectory of the potential minimum `n0(t)`.
///
/// Past the end of the last segment `n0` holds its final value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSchedule {
    start_center: f64,
    segments: Vec<Segment>,
}

impl PotentialSchedule {
    pub fn new(start_center: f64, segments: Vec<Segment>) -> Result<Self, ChainError> {
        if !start_center.is_finite() {
            return Err(invalid("start_center", "must be finite"));
        }
        for s in &segments {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(invalid("segment.duration", format!("must be positive, got {}", s.duration)));
            }
            if !s.speed.is_finite() {
                return Err(invalid("segment.speed", "must be finite"));
            }
        }
        Ok(Self {
            start_center,
            segments,
        })
    }

    /// A potential parked at `center` forever.
    pub fn stationary(center: f64) -> Self {
        Self {
            start_center: center,
            segments: Vec::new(),
        }
    }

    /// `n0 = start + speed * t` for `duration`, then held.
    pub fn linear(start_center: f64, speed: f64, duration: f64) -> Result<Self, ChainError> {
        Self::new(start_center, vec![Segment { duration, speed }])
    }

    /// Sweep from `start_center` to `end_center` at `speed`, then hold.
    pub fn sweep_to(start_center: f64, end_center: f64, speed: f64) -> Result<Self, ChainError> {
        if !(speed > 0.0) {
            return Err(invalid("speed", format!("must be positive, got {speed}")));
        }
        let distance = end_center - start_center;
        if distance == 0.0 {
            return Ok(Self::stationary(start_center));
        }
        Self::linear(start_center, speed * distance.signum(), distance.abs() / speed)
    }

    pub fn start_center(&self) -> f64 {
        self.start_center
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn final_center(&self) -> f64 {
        self.start_center + self.segments.iter().map(|s| s.duration * s.speed).sum::<f64>()
    }

    /// Position of the minimum at time `t`.
    pub fn center_at(&self, t: f64) -> Result<f64, ChainError> {
        if t < 0.0 || t.is_nan() {
            return Err(ChainError::NegativeTime(t));
        }
        Ok(self.center_unchecked(t))
    }

    pub(crate) fn center_unchecked(&self, t: f64) -> f64 {
        let mut center = self.start_center;
        let mut elapsed = 0.0;
        for s in &self.segments {
            if t < elapsed + s.duration {
                return center + s.speed * (t - elapsed);
            }
            center += s.speed * s.duration;
            elapsed += s.duration;
        }
        center
    }

    /// Schedule that replays `[t0, t1]` of this one backwards in time:
    /// `mirrored(t0, t1).center_at(s) == center_at(t1 - s)` for `s` in `[0, t1 - t0]`.
    pub fn mirrored(&self, t0: f64, t1: f64) -> Result<Self, ChainError> {
        if t0 < 0.0 {
            return Err(ChainError::NegativeTime(t0));
        }
        if !(t1 > t0) {
            return Err(invalid("t1", "must exceed t0"));
        }
        let mut pieces = Vec::new();
        let mut elapsed = 0.0f64;
        for s in &self.segments {
            let lo = elapsed.max(t0);
            let hi = (elapsed + s.duration).min(t1);
            if hi > lo {
                pieces.push(Segment {
                    duration: hi - lo,
                    speed: -s.speed,
                });
            }
            elapsed += s.duration;
        }
        if t1 > elapsed {
            pieces.push(Segment {
                duration: t1 - elapsed.max(t0),
                speed: 0.0,
            });
        }
        pieces.reverse();
        Self::new(self.center_unchecked(t1), pieces)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    Global,
    #[default]
    Windowed,
}

/// Spatial extent of the parabola around its minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialWindow {
    pub mode: WindowMode,
    /// Full width in sites; the parabola is applied for `|n - n0| <= width/2`.
    pub width: usize,
}

impl Default for PotentialWindow {
    fn default() -> Self {
        Self {
            mode: WindowMode::Windowed,
            width: 20,
        }
    }
}

impl PotentialWindow {
    pub fn global() -> Self {
        Self {
            mode: WindowMode::Global,
            ..Self::default()
        }
    }

    pub fn windowed(width: usize) -> Self {
        Self {
            mode: WindowMode::Windowed,
            width,
        }
    }
}

/// Sign of the nearest-neighbour element `H[n][n+1]`.
///
/// The two choices are related by the gauge `c_n -> (-1)^n c_n`; populations of
/// a state evolved under one sign equal those of its gauge image evolved under
/// the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoppingSign {
    /// `+(J + delta)/2`, as written in the amplitude equations.
    #[default]
    Positive,
    /// `-(J + delta)/2`, the tight-binding form with band `-J cos k`.
    Negative,
}

impl HoppingSign {
    pub fn factor(self) -> f64 {
        match self {
            HoppingSign::Positive => 1.0,
            HoppingSign::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            HoppingSign::Positive => HoppingSign::Negative,
            HoppingSign::Negative => HoppingSign::Positive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum BondNoise {
    None,
    Static(Vec<f64>),
    Dynamic(DynamicRealization),
}

/// Full description of a driven chain. Immutable once built; the disorder
/// realization is materialized at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChainParams", into = "ChainParams")]
pub struct ChainSpec {
    num_sites: usize,
    coupling_j: f64,
    field_amplitude_c: f64,
    schedule: PotentialSchedule,
    window: PotentialWindow,
    hopping: HoppingSign,
    disorder: DisorderModel,
    noise: BondNoise,
}

/// Serializable parameter view of a [`ChainSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub num_sites: usize,
    pub coupling_j: f64,
    pub field_amplitude_c: f64,
    pub schedule: PotentialSchedule,
    pub window: PotentialWindow,
    #[serde(default)]
    pub hopping: HoppingSign,
    #[serde(default)]
    pub disorder: DisorderModel,
}

impl TryFrom<ChainParams> for ChainSpec {
    type Error = ChainError;

    fn try_from(p: ChainParams) -> Result<Self, ChainError> {
        ChainSpec::new(p.num_sites, p.coupling_j, p.field_amplitude_c, p.schedule)?
            .with_window(p.window)?
            .with_hopping(p.hopping)
            .with_disorder(p.disorder)
    }
}

impl From<ChainSpec> for ChainParams {
    fn from(s: ChainSpec) -> Self {
        s.params()
    }
}

impl ChainSpec {
    /// Windowed (width 20), positive hopping, no disorder.
    pub fn new(
        num_sites: usize,
        coupling_j: f64,
        field_amplitude_c: f64,
        schedule: PotentialSchedule,
    ) -> Result<Self, ChainError> {
        if num_sites < 2 {
            return Err(invalid("num_sites", format!("need at least 2 sites, got {num_sites}")));
        }
        if !(coupling_j > 0.0 && coupling_j.is_finite()) {
            return Err(invalid("coupling_j", format!("must be positive, got {coupling_j}")));
        }
        if !(field_amplitude_c >= 0.0 && field_amplitude_c.is_finite()) {
            return Err(invalid(
                "field_amplitude_c",
                format!("must be non-negative, got {field_amplitude_c}"),
            ));
        }
        Ok(Self {
            num_sites,
            coupling_j,
            field_amplitude_c,
            schedule,
            window: PotentialWindow::default(),
            hopping: HoppingSign::default(),
            disorder: DisorderModel::None,
            noise: BondNoise::None,
        })
    }

    /// Like [`ChainSpec::new`] but allows `J = 0`, which decouples the sites.
    /// Only useful for checks of the integrators.
    pub fn uncoupled(
        num_sites: usize,
        field_amplitude_c: f64,
        schedule: PotentialSchedule,
    ) -> Result<Self, ChainError> {
        let mut s = Self::new(num_sites, 1.0, field_amplitude_c, schedule)?;
        s.coupling_j = 0.0;
        Ok(s)
    }

    pub fn with_window(mut self, window: PotentialWindow) -> Result<Self, ChainError> {
        if window.mode == WindowMode::Windowed && window.width == 0 {
            return Err(invalid("window.width", "must be positive"));
        }
        self.window = window;
        Ok(self)
    }

    pub fn with_hopping(mut self, hopping: HoppingSign) -> Self {
        self.hopping = hopping;
        self
    }

    pub fn with_schedule(mut self, schedule: PotentialSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_disorder(mut self, disorder: DisorderModel) -> Result<Self, ChainError> {
        let bonds = self.num_bonds();
        self.noise = match disorder {
            DisorderModel::None => BondNoise::None,
            DisorderModel::Static(s) => {
                crate::disorder::StaticDisorder::new(s.amplitude_delta, s.seed)?;
                BondNoise::Static(s.realize(bonds))
            }
            DisorderModel::Dynamic(d) => {
                crate::disorder::DynamicDisorder::new(d.amplitude_a, d.omega_max, d.num_terms, d.seed)?;
                BondNoise::Dynamic(d.realize(bonds))
            }
        };
        self.disorder = disorder;
        Ok(self)
    }

    /// Replaces the static offsets by an explicit list, e.g. one loaded from CSV.
    pub fn with_static_offsets(mut self, offsets: Vec<f64>) -> Result<Self, ChainError> {
        if offsets.len() != self.num_bonds() {
            return Err(invalid(
                "static_offsets",
                format!("expected {} bonds, got {}", self.num_bonds(), offsets.len()),
            ));
        }
        self.noise = BondNoise::Static(offsets);
        Ok(self)
    }

    /// Replaces the dynamic terms by an explicit realization.
    pub fn with_dynamic_realization(mut self, r: DynamicRealization) -> Result<Self, ChainError> {
        if r.num_bonds() != self.num_bonds() {
            return Err(invalid(
                "dynamic_realization",
                format!("expected {} bonds, got {}", self.num_bonds(), r.num_bonds()),
            ));
        }
        self.noise = BondNoise::Dynamic(r);
        Ok(self)
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn num_bonds(&self) -> usize {
        self.num_sites - 1
    }

    /// Index of the last site.
    pub fn last_site(&self) -> usize {
        self.num_sites - 1
    }

    pub fn coupling_j(&self) -> f64 {
        self.coupling_j
    }

    pub fn field_amplitude_c(&self) -> f64 {
        self.field_amplitude_c
    }

    pub fn schedule(&self) -> &PotentialSchedule {
        &self.schedule
    }

    pub fn window(&self) -> PotentialWindow {
        self.window
    }

    pub fn hopping(&self) -> HoppingSign {
        self.hopping
    }

    pub fn disorder(&self) -> &DisorderModel {
        &self.disorder
    }

    pub fn params(&self) -> ChainParams {
        ChainParams {
            num_sites: self.num_sites,
            coupling_j: self.coupling_j,
            field_amplitude_c: self.field_amplitude_c,
            schedule: self.schedule.clone(),
            window: self.window,
            hopping: self.hopping,
            disorder: self.disorder,
        }
    }

    /// True when the generator depends on time.
    pub fn is_time_dependent(&self) -> bool {
        let moves = self.schedule.segments().iter().any(|s| s.speed != 0.0);
        moves && self.field_amplitude_c != 0.0 || matches!(self.noise, BondNoise::Dynamic(_))
    }

    pub(crate) fn noise(&self) -> &BondNoise {
        &self.noise
    }

    /// Position of the potential minimum at `t`.
    pub fn center_at(&self, t: f64) -> Result<f64, ChainError> {
        self.schedule.center_at(t)
    }

    pub fn potential_energy(&self, site: usize, t: f64) -> Result<f64, ChainError> {
        self.check_site(site)?;
        let n0 = self.schedule.center_at(t)?;
        Ok(self.potential_at(site as f64 - n0))
    }

    /// Potential at displacement `dn = n - n0` from the minimum.
    #[inline]
    pub(crate) fn potential_at(&self, dn: f64) -> f64 {
        let half_c = 0.5 * self.field_amplitude_c;
        match self.window.mode {
            WindowMode::Global => half_c * dn * dn,
            WindowMode::Windowed => {
                let edge = 0.5 * self.window.width as f64;
                let d = dn.abs().min(edge);
                half_c * d * d
            }
        }
    }

    /// Bond offset `delta_n(t)`.
    pub fn bond_offset(&self, bond: usize, t: f64) -> f64 {
        match &self.noise {
            BondNoise::None => 0.0,
            BondNoise::Static(d) => d[bond],
            BondNoise::Dynamic(r) => r.offset(bond, t),
        }
    }

    /// Static offsets if the chain carries static disorder.
    pub fn static_offsets(&self) -> Option<&[f64]> {
        match &self.noise {
            BondNoise::Static(d) => Some(d),
            _ => None,
        }
    }

    pub fn dynamic_realization(&self) -> Option<&DynamicRealization> {
        match &self.noise {
            BondNoise::Dynamic(r) => Some(r),
            _ => None,
        }
    }

    pub fn assemble_hamiltonian(&self, t: f64) -> Result<TridiagonalOperator, ChainError> {
        let n0 = self.schedule.center_at(t)?;
        let mut op = TridiagonalOperator::zeros(self.num_sites);
        self.fill_diagonal(n0, &mut op.diagonal);
        let sign = 0.5 * self.hopping.factor();
        for (bond, e) in op.off_diagonal.iter_mut().enumerate() {
            *e = sign * (self.coupling_j + self.bond_offset(bond, t));
        }
        Ok(op)
    }

    pub(crate) fn fill_diagonal(&self, n0: f64, out: &mut [f64]) {
        for (n, d) in out.iter_mut().enumerate() {
            *d = self.potential_at(n as f64 - n0);
        }
    }

    pub(crate) fn check_site(&self, site: usize) -> Result<(), ChainError> {
        if site >= self.num_sites {
            return Err(ChainError::SiteOutOfRange {
                site,
                num_sites: self.num_sites,
            });
        }
        Ok(())
    }

    /// State with the excitation entirely on `site`.
    pub fn initial_delta(&self, site: usize) -> Result<StateVector, ChainError> {
        self.check_site(site)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.num_sites];
        amplitudes[site] = Complex64::new(1.0, 0.0);
        Ok(StateVector { amplitudes })
    }

    /// Real Gaussian `exp(-(m - center)^2 / (2 l0^2))` on the inclusive site
    /// span `first..=last`, normalized; zero elsewhere.
    pub fn initial_gaussian(
        &self,
        center: f64,
        width_l0: f64,
        span: std::ops::RangeInclusive<usize>,
    ) -> Result<StateVector, ChainError> {
        if span.is_empty() {
            return Err(ChainError::EmptySpan);
        }
        self.check_site(*span.end())?;
        if !(width_l0 > 0.0) {
            return Err(invalid("width_l0", format!("must be positive, got {width_l0}")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.num_sites];
        for m in span {
            let x = m as f64 - center;
            amplitudes[m] = Complex64::new((-x * x / (2.0 * width_l0 * width_l0)).exp(), 0.0);
        }
        StateVector::normalized(amplitudes)
    }
}

/// Amplitudes `c_m` of the one-flip state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Accepts amplitudes whose norm is 1 within [`NORM_TOLERANCE`].
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, ChainError> {
        let norm = norm_of(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(ChainError::NotNormalized {
                norm,
                tolerance: NORM_TOLERANCE,
            });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales to unit norm. Fails on the zero vector or non-finite input.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self, ChainError> {
        let norm = norm_of(&amplitudes);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(ChainError::NotNormalized {
                norm,
                tolerance: NORM_TOLERANCE,
            });
        }
        amplitudes.iter_mut().for_each(|c| *c /= norm);
        Ok(Self { amplitudes })
    }

    /// Wraps amplitudes produced by a unitary propagation without
    /// re-checking the norm.
    pub(crate) fn from_evolved(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn amplitude(&self, site: usize) -> Complex64 {
        self.amplitudes[site]
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amplitudes)
    }

    /// `|c_m|^2` per site.
    pub fn excitation_profile(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn probability(&self, site: usize) -> f64 {
        self.amplitudes[site].norm_sqr()
    }

    pub fn end_probability(&self) -> f64 {
        self.amplitudes.last().map_or(0.0, |c| c.norm_sqr())
    }

    /// Most probable site; ties go to the lower index.
    pub fn peak(&self) -> (usize, f64) {
        peak_of(&self.excitation_profile())
    }

    /// Multiplies every amplitude by `e^{i phase}`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let z = Complex64::from_polar(1.0, phase);
        Self {
            amplitudes: self.amplitudes.iter().map(|c| c * z).collect(),
        }
    }

    /// Image under the staggered gauge `c_n -> (-1)^n c_n`.
    pub fn staggered(&self) -> Self {
        Self {
            amplitudes: self
                .amplitudes
                .iter()
                .enumerate()
                .map(|(n, &c)| if n % 2 == 1 { -c } else { c })
                .collect(),
        }
    }

    pub fn conjugated(&self) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|c| c.conj()).collect(),
        }
    }

    /// Largest `|a_m - b_m|`.
    pub fn max_amplitude_difference(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn norm_of(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Argmax of a probability profile with ties broken toward the lower index.
pub fn peak_of(profile: &[f64]) -> (usize, f64) {
    profile
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p > best.1 { (i, p) } else { best })
}

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn zeros(n: usize) -> Self {
        Self {
            diagonal: vec![0.0; n],
            off_diagonal: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for (i, &d) in self.diagonal.iter().enumerate() {
            m[i][i] = d;
        }
        for (i, &e) in self.off_diagonal.iter().enumerate() {
            m[i][i + 1] = e;
            m[i + 1][i] = e;
        }
        m
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = v[i] * self.diagonal[i];
                if i > 0 {
                    acc += v[i - 1] * self.off_diagonal[i - 1];
                }
                if i + 1 < n {
                    acc += v[i + 1] * self.off_diagonal[i];
                }
                acc
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::StaticDisorder;
    use approx::assert_abs_diff_eq;

    fn chain(n: usize, c: f64, speed: f64) -> ChainSpec {
        ChainSpec::new(n, 1.0, c, PotentialSchedule::linear(0.0, speed, 1e9).unwrap()).unwrap()
    }

    #[test]
    fn center_follows_single_segment() {
        let s = PotentialSchedule::linear(0.0, 0.005, 20000.0).unwrap();
        assert_abs_diff_eq!(s.center_at(10000.0).unwrap(), 50.0, epsilon = 1e-12);
        assert_eq!(s.center_at(0.0).unwrap(), 0.0);
        // held past the end
        assert_abs_diff_eq!(s.center_at(25000.0).unwrap(), 100.0, epsilon = 1e-12);
    }

    #[test]
    fn center_with_pause() {
        let s = PotentialSchedule::new(
            0.0,
            vec![
                Segment { duration: 1000.0, speed: 0.01 },
                Segment { duration: 500.0, speed: 0.0 },
                Segment { duration: 1000.0, speed: 0.01 },
            ],
        )
        .unwrap();
        assert_abs_diff_eq!(s.center_at(2500.0).unwrap(), 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.center_at(1200.0).unwrap(), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.center_at(1750.0).unwrap(), 12.5, epsilon = 1e-12);
        assert_eq!(s.final_center(), 20.0);
    }

    #[test]
    fn center_rejects_negative_time() {
        let s = PotentialSchedule::stationary(3.0);
        assert_eq!(s.center_at(-1.0), Err(ChainError::NegativeTime(-1.0)));
        assert_eq!(s.center_at(0.0).unwrap(), 3.0);
    }

    #[test]
    fn schedule_rejects_bad_segments() {
        assert!(PotentialSchedule::linear(0.0, 1.0, 0.0).is_err());
        assert!(PotentialSchedule::linear(0.0, f64::INFINITY, 1.0).is_err());
        assert!(PotentialSchedule::sweep_to(0.0, 10.0, 0.0).is_err());
    }

    #[test]
    fn sweep_to_stops_at_end() {
        let s = PotentialSchedule::sweep_to(0.0, 100.0, 0.3).unwrap();
        assert_abs_diff_eq!(s.total_duration(), 1000.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.center_at(2200.0).unwrap(), 100.0, epsilon = 1e-9);
    }

    #[test]
    fn mirrored_schedule_replays_backwards() {
        let s = PotentialSchedule::new(
            2.0,
            vec![
                Segment { duration: 10.0, speed: 0.5 },
                Segment { duration: 5.0, speed: 0.0 },
                Segment { duration: 10.0, speed: -0.2 },
            ],
        )
        .unwrap();
        let m = s.mirrored(3.0, 30.0).unwrap();
        assert_abs_diff_eq!(m.total_duration(), 27.0, epsilon = 1e-12);
        for k in 0..=54 {
            let u = k as f64 * 0.5;
            assert_abs_diff_eq!(
                m.center_at(u).unwrap(),
                s.center_at(30.0 - u).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn potential_values() {
        let s = chain(101, 8.0, 0.0);
        assert_eq!(s.potential_energy(0, 0.0).unwrap(), 0.0);

        let g = ChainSpec::new(20, 1.0, 2.0, PotentialSchedule::stationary(2.0))
            .unwrap()
            .with_window(PotentialWindow::global())
            .unwrap();
        assert_abs_diff_eq!(g.potential_energy(5, 0.0).unwrap(), 9.0, epsilon = 1e-12);

        let w = ChainSpec::new(30, 1.0, 8.0, PotentialSchedule::stationary(0.0)).unwrap();
        assert_abs_diff_eq!(w.potential_energy(15, 0.0).unwrap(), 400.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.potential_energy(10, 0.0).unwrap(), 400.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.potential_energy(9, 0.0).unwrap(), 324.0, epsilon = 1e-12);
    }

    #[test]
    fn potential_rejects_out_of_range_site() {
        let s = chain(5, 1.0, 0.0);
        assert_eq!(
            s.potential_energy(5, 0.0),
            Err(ChainError::SiteOutOfRange { site: 5, num_sites: 5 })
        );
    }

    #[test]
    fn window_edge_is_continuous() {
        let w = ChainSpec::new(30, 1.0, 8.0, PotentialSchedule::stationary(0.0)).unwrap();
        let below = w.potential_at(10.0 - 1e-9);
        let above = w.potential_at(10.0 + 1e-9);
        assert!((below - above).abs() < 1e-6);
        assert_eq!(w.potential_at(12.0), w.potential_at(40.0));
    }

    #[test]
    fn free_chain_hamiltonian() {
        let s = chain(3, 0.0, 0.0);
        let h = s.assemble_hamiltonian(0.0).unwrap();
        assert_eq!(h.diagonal, vec![0.0; 3]);
        assert_eq!(h.off_diagonal, vec![0.5, 0.5]);
    }

    #[test]
    fn hamiltonian_centered_mid_chain() {
        let s = ChainSpec::new(101, 1.0, 8.0, PotentialSchedule::linear(0.0, 0.005, 20000.0).unwrap()).unwrap();
        let h = s.assemble_hamiltonian(10000.0).unwrap();
        assert_abs_diff_eq!(h.diagonal[50], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(h.diagonal[49], 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(h.diagonal[51], 4.0, epsilon = 1e-9);
    }

    #[test]
    fn hamiltonian_with_static_disorder() {
        let d = StaticDisorder::new(0.5, 1234).unwrap();
        let s = chain(101, 8.0, 0.005).with_disorder(DisorderModel::Static(d)).unwrap();
        let h = s.assemble_hamiltonian(0.0).unwrap();
        let offsets = d.realize(100);
        for (e, delta) in h.off_diagonal.iter().zip(&offsets) {
            assert!(delta.abs() <= 0.5);
            assert_abs_diff_eq!(*e, (1.0 + delta) / 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn negative_hopping_flips_off_diagonal() {
        let s = chain(4, 1.0, 0.0).with_hopping(HoppingSign::Negative);
        let h = s.assemble_hamiltonian(0.0).unwrap();
        assert_eq!(h.off_diagonal, vec![-0.5; 3]);
    }

    #[test]
    fn spec_validation() {
        let sched = PotentialSchedule::stationary(0.0);
        assert!(ChainSpec::new(1, 1.0, 1.0, sched.clone()).is_err());
        assert!(ChainSpec::new(5, 0.0, 1.0, sched.clone()).is_err());
        assert!(ChainSpec::new(5, 1.0, -1.0, sched.clone()).is_err());
        assert!(ChainSpec::new(5, 1.0, 1.0, sched)
            .unwrap()
            .with_window(PotentialWindow::windowed(0))
            .is_err());
    }

    #[test]
    fn delta_states() {
        let s = chain(6, 1.0, 0.0);
        let d0 = s.initial_delta(0).unwrap();
        assert_eq!(d0.excitation_profile(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.initial_delta(5).unwrap().end_probability(), 1.0);
        assert_eq!(s.initial_delta(1).unwrap().excitation_profile()[..3], [0.0, 1.0, 0.0]);
        assert!(s.initial_delta(6).is_err());
    }

    #[test]
    fn three_site_gaussian() {
        let s = chain(101, 2.0, 0.005);
        let g = s.initial_gaussian(1.0, 0.707, 0..=2).unwrap();
        // weights 1, e^{-1/(2 l0^2)}, normalized: p_side = w^2 / (1 + 2 w^2)
        let w2 = (-1.0f64 / (0.707 * 0.707)).exp();
        let side = w2 / (1.0 + 2.0 * w2);
        let p = g.excitation_profile();
        assert_abs_diff_eq!(p[0], side, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 1.0 - 2.0 * side, epsilon = 1e-12);
        assert_abs_diff_eq!(p[0], 0.1065, epsilon = 1e-4);
        assert_abs_diff_eq!(p[1], 0.7871, epsilon = 1e-4);
        assert_abs_diff_eq!(p[2], 0.1065, epsilon = 1e-4);
        assert!(p[3..].iter().all(|&x| x == 0.0));
        assert_abs_diff_eq!(g.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_limits() {
        let s = chain(10, 2.0, 0.0);
        let one = s.initial_gaussian(4.0, 0.3, 2..=2).unwrap();
        assert_eq!(one.peak(), (2, 1.0));
        let flat = s.initial_gaussian(1.0, 1e9, 0..=2).unwrap();
        for p in &flat.excitation_profile()[..3] {
            assert_abs_diff_eq!(*p, 1.0 / 3.0, epsilon = 1e-12);
        }
        #[allow(clippy::reversed_empty_ranges)]
        let empty = 3..=2;
        assert_eq!(s.initial_gaussian(1.0, 1.0, empty), Err(ChainError::EmptySpan));
        assert!(s.initial_gaussian(1.0, 0.0, 0..=2).is_err());
        assert!(s.initial_gaussian(1.0, 1.0, 8..=10).is_err());
    }

    #[test]
    fn peak_tie_breaks_low() {
        let s = chain(8, 1.0, 0.0);
        assert_eq!(s.initial_delta(5).unwrap().peak(), (5, 1.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut a = vec![Complex64::new(0.0, 0.0); 8];
        a[3] = Complex64::new(h, 0.0);
        a[4] = Complex64::new(0.0, h);
        let st = StateVector::new(a).unwrap();
        let (site, p) = st.peak();
        assert_eq!(site, 3);
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn state_requires_unit_norm() {
        let a = vec![Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)];
        assert!(matches!(StateVector::new(a.clone()), Err(ChainError::NotNormalized { .. })));
        assert_abs_diff_eq!(StateVector::normalized(a).unwrap().norm(), 1.0, epsilon = 1e-15);
        assert!(StateVector::normalized(vec![Complex64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn spec_serde_round_trip_rebuilds_disorder() {
        let d = StaticDisorder::new(0.5, 77).unwrap();
        let s = chain(12, 8.0, 0.005).with_disorder(DisorderModel::Static(d)).unwrap();
        let json = serde_json_like(&s);
        assert_eq!(json, s);
    }

    // ChainSpec serializes through ChainParams; rebuilding must re-materialize offsets.
    fn serde_json_like(s: &ChainSpec) -> ChainSpec {
        ChainSpec::try_from(ChainParams::from(s.clone())).unwrap()
    }

    #[test]
    fn profile_ignores_global_phase() {
        let s = chain(10, 2.0, 0.0);
        let g = s.initial_gaussian(4.0, 1.3, 1..=7).unwrap();
        let r = g.with_global_phase(1.234);
        for (a, b) in g.excitation_profile().iter().zip(r.excitation_profile()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }
}
