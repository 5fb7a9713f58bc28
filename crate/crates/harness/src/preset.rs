//! Named experiments and the flat parameter set they are built from.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use spinchain::chain::{ChainSpec, HoppingSign, PotentialSchedule, PotentialWindow, Segment, StateVector};
use spinchain::disorder::{DisorderModel, DynamicDisorder, StaticDisorder, DEFAULT_NUM_TERMS};
use spinchain::propagator::IntegratorConfig;

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Custom,
}

impl PresetName {
    pub const ALL: [PresetName; 10] = [
        PresetName::Fig2,
        PresetName::Fig3,
        PresetName::Fig4,
        PresetName::Fig5,
        PresetName::Fig6,
        PresetName::Fig7,
        PresetName::Fig8,
        PresetName::Fig9,
        PresetName::Fig10,
        PresetName::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Fig2 => "fig2",
            PresetName::Fig3 => "fig3",
            PresetName::Fig4 => "fig4",
            PresetName::Fig5 => "fig5",
            PresetName::Fig6 => "fig6",
            PresetName::Fig7 => "fig7",
            PresetName::Fig8 => "fig8",
            PresetName::Fig9 => "fig9",
            PresetName::Fig10 => "fig10",
            PresetName::Custom => "custom",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| HarnessError::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Delta,
    Gaussian,
}

/// Initial excitation. Only the fields of the selected kind are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub kind: InitialKind,
    pub site: usize,
    pub center: f64,
    pub width_l0: f64,
    pub first: usize,
    pub last: usize,
}

impl InitialState {
    pub fn delta(site: usize) -> Self {
        Self {
            kind: InitialKind::Delta,
            site,
            center: 1.0,
            width_l0: 0.707,
            first: 0,
            last: 2,
        }
    }

    /// Three-site Gaussian centred on site 1.
    pub fn three_site_gaussian() -> Self {
        Self {
            kind: InitialKind::Gaussian,
            ..Self::delta(0)
        }
    }

    pub fn build(&self, spec: &ChainSpec) -> Result<StateVector, HarnessError> {
        Ok(match self.kind {
            InitialKind::Delta => spec.initial_delta(self.site)?,
            InitialKind::Gaussian => spec.initial_gaussian(self.center, self.width_l0, self.first..=self.last)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSection {
    pub num_sites: usize,
    pub coupling_j: f64,
    pub field_amplitude_c: f64,
    pub window: PotentialWindow,
    pub hopping: HoppingSign,
}

/// Potential motion. With no explicit segments the minimum moves as
/// `start_center + speed * t` for the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSection {
    pub start_center: f64,
    pub speed: f64,
    #[serde(default)]
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderKind {
    None,
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderSection {
    pub kind: DisorderKind,
    pub delta: f64,
    pub amplitude_a: f64,
    pub omega_max: f64,
    pub num_terms: usize,
    pub seed: u64,
}

impl Default for DisorderSection {
    fn default() -> Self {
        Self {
            kind: DisorderKind::None,
            delta: 0.0,
            amplitude_a: 0.0,
            omega_max: 0.0,
            num_terms: DEFAULT_NUM_TERMS,
            seed: 1,
        }
    }
}

impl DisorderSection {
    pub fn model(&self) -> Result<DisorderModel, HarnessError> {
        Ok(match self.kind {
            DisorderKind::None => DisorderModel::None,
            DisorderKind::Static => DisorderModel::Static(StaticDisorder::new(self.delta, self.seed)?),
            DisorderKind::Dynamic => DisorderModel::Dynamic(DynamicDisorder::new(
                self.amplitude_a,
                self.omega_max,
                self.num_terms,
                self.seed,
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    /// Final time of the evolution.
    pub t_end: f64,
    /// Times singled out for panels and summary rows.
    pub snapshot_times: Vec<f64>,
}

/// A parameter swept within one preset run (fig2's field amplitudes).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanSection {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPreset {
    pub name: PresetName,
    pub chain: ChainSection,
    pub schedule: ScheduleSection,
    pub disorder: DisorderSection,
    pub initial: InitialState,
    pub run: RunSection,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub scan: ScanSection,
}

impl ExperimentPreset {
    pub fn schedule(&self) -> Result<PotentialSchedule, HarnessError> {
        let s = &self.schedule;
        if !s.segments.is_empty() {
            return Ok(PotentialSchedule::new(s.start_center, s.segments.clone())?);
        }
        if !(self.run.t_end > 0.0) {
            return Ok(PotentialSchedule::stationary(s.start_center));
        }
        Ok(PotentialSchedule::linear(s.start_center, s.speed, self.run.t_end)?)
    }

    pub fn chain_spec(&self) -> Result<ChainSpec, HarnessError> {
        let c = &self.chain;
        Ok(ChainSpec::new(c.num_sites, c.coupling_j, c.field_amplitude_c, self.schedule()?)?
            .with_window(c.window)?
            .with_hopping(c.hopping)
            .with_disorder(self.disorder.model()?)?)
    }

    pub fn initial_state(&self, spec: &ChainSpec) -> Result<StateVector, HarnessError> {
        self.initial.build(spec)
    }

    /// Same experiment at another speed, with the final time and the panel
    /// times stretched so the potential covers the same distance.
    pub fn with_speed(&self, speed: f64) -> Result<Self, HarnessError> {
        if !(speed > 0.0 && self.schedule.speed > 0.0) {
            return Err(HarnessError::Invalid(format!(
                "speed rescaling needs positive speeds, got {} -> {speed}",
                self.schedule.speed
            )));
        }
        if !self.schedule.segments.is_empty() {
            return Err(HarnessError::Invalid("speed rescaling is undefined for segmented schedules".into()));
        }
        // snapped to 1e-6 so that e.g. 20000 * 0.005 / 0.025 is exactly 4000
        let rescale = |t: f64| (t * self.schedule.speed / speed * 1e6).round() / 1e6;
        let mut out = self.clone();
        out.schedule.speed = speed;
        out.run.t_end = rescale(self.run.t_end);
        out.run.snapshot_times = self.run.snapshot_times.iter().map(|&t| rescale(t)).collect();
        Ok(out)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        out.disorder.seed = seed;
        out
    }
}

fn delta_base(name: PresetName, c: f64, speed: f64, t_end: f64, times: &[f64]) -> ExperimentPreset {
    ExperimentPreset {
        name,
        chain: ChainSection {
            num_sites: 101,
            coupling_j: 1.0,
            field_amplitude_c: c,
            window: PotentialWindow::default(),
            hopping: HoppingSign::Positive,
        },
        schedule: ScheduleSection {
            start_center: 0.0,
            speed,
            segments: Vec::new(),
        },
        disorder: DisorderSection::default(),
        initial: InitialState::delta(0),
        run: RunSection {
            t_end,
            snapshot_times: times.to_vec(),
        },
        integrator: IntegratorConfig::default(),
        scan: ScanSection::default(),
    }
}

/// The Gaussian runs put the well minimum on the packet centre and use the
/// `-J/2` hopping, so that the real positive packet sits at the bottom of the
/// `-J cos k` band, inside the separatrix.
fn gaussian_base(name: PresetName, speed: f64, t_end: f64, times: &[f64]) -> ExperimentPreset {
    let mut p = delta_base(name, 2.0, speed, t_end, times);
    p.initial = InitialState::three_site_gaussian();
    p.schedule.start_center = p.initial.center;
    p.chain.hopping = HoppingSign::Negative;
    p
}

fn static_noise(delta: f64) -> DisorderSection {
    DisorderSection {
        kind: DisorderKind::Static,
        delta,
        ..DisorderSection::default()
    }
}

fn dynamic_noise(amplitude_a: f64, omega_max: f64) -> DisorderSection {
    DisorderSection {
        kind: DisorderKind::Dynamic,
        amplitude_a,
        omega_max,
        ..DisorderSection::default()
    }
}

pub fn preset(name: PresetName) -> ExperimentPreset {
    use PresetName::*;
    match name {
        Fig2 => {
            let mut p = delta_base(Fig2, 8.0, 0.005, 20000.0, &[20000.0]);
            p.scan = ScanSection {
                parameter: "chain.field_amplitude_c".into(),
                values: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            };
            p
        }
        Fig3 => delta_base(Fig3, 8.0, 0.005, 20000.0, &[0.0, 10000.0, 20000.0]),
        Fig4 => gaussian_base(Fig4, 0.005, 21000.0, &[0.0, 10000.0, 20000.0, 21000.0]),
        Fig5 => delta_base(Fig5, 8.0, 0.025, 4000.0, &[1000.0, 2600.0, 4000.0]),
        Fig6 => gaussian_base(Fig6, 0.1, 1000.0, &[300.0, 600.0, 1000.0]),
        Fig7 => {
            let mut p = delta_base(Fig7, 8.0, 0.005, 20000.0, &[7000.0, 14000.0, 20000.0]);
            p.disorder = static_noise(0.5);
            p
        }
        Fig8 => {
            let mut p = gaussian_base(Fig8, 0.005, 21500.0, &[6000.0, 12000.0, 21500.0]);
            p.disorder = static_noise(0.5);
            p
        }
        Fig9 => {
            let mut p = delta_base(Fig9, 8.0, 0.005, 20000.0, &[7000.0, 14000.0, 20000.0]);
            p.disorder = dynamic_noise(0.025, 0.1);
            p
        }
        Fig10 => {
            let mut p = delta_base(Fig10, 8.0, 0.005, 20000.0, &[7000.0, 14000.0, 20000.0]);
            p.disorder = dynamic_noise(0.025, 1.0);
            p
        }
        Custom => delta_base(Custom, 8.0, 0.005, 20000.0, &[0.0, 10000.0, 20000.0]),
    }
}
