//! Integrator checks exposed on the command line: production versus the
//! dense oracle on small random chains, and dt halving on a preset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spinchain::chain::{ChainSpec, PotentialSchedule, StateVector};
use spinchain::disorder::{DisorderModel, DynamicDisorder, StaticDisorder, DEFAULT_NUM_TERMS};
use spinchain::propagator::{
    convergence_check, evolve, oracle_evolve, ConvergenceReport, IntegratorConfig, Method,
};

use crate::error::HarnessError;
use crate::preset::ExperimentPreset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckSpec {
    pub cases: usize,
    pub num_sites: usize,
    pub t1: f64,
    /// Production step.
    pub dt: f64,
    /// Oracle step.
    pub fine_dt: f64,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for OracleCheckSpec {
    fn default() -> Self {
        Self {
            cases: 6,
            num_sites: 8,
            t1: 50.0,
            dt: 5e-6,
            fine_dt: 5e-5,
            seed: 7,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub field_amplitude_c: f64,
    pub speed: f64,
    pub disorder: DisorderModel,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckReport {
    pub spec: OracleCheckSpec,
    pub cases: Vec<OracleCase>,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Random chain in the oracle-check family: `C ~ U[0.5, 8]`, `S ~ U[0, 0.1]`,
/// and no, static or dynamic disorder with equal odds.
pub fn random_case(rng: &mut ChaCha8Rng, num_sites: usize, t1: f64) -> Result<ChainSpec, HarnessError> {
    let c = rng.random_range(0.5..=8.0);
    let s = rng.random_range(0.0..=0.1);
    let seed = rng.random::<u64>();
    let disorder = match rng.random_range(0..3u8) {
        0 => DisorderModel::None,
        1 => DisorderModel::Static(StaticDisorder::new(rng.random_range(0.0..=0.5), seed)?),
        _ => DisorderModel::Dynamic(DynamicDisorder::new(
            rng.random_range(0.0..=0.025),
            rng.random_range(0.0..=1.0),
            DEFAULT_NUM_TERMS,
            seed,
        )?),
    };
    Ok(ChainSpec::new(num_sites, 1.0, c, PotentialSchedule::linear(0.0, s, t1)?)?.with_disorder(disorder)?)
}

pub fn oracle_check(spec: &OracleCheckSpec) -> Result<OracleCheckReport, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let config = IntegratorConfig {
        dt: spec.dt,
        snapshot_interval: spec.t1,
        method: Method::CayleyMidpoint,
        store_amplitudes: false,
    };
    let mut cases = Vec::new();
    for _ in 0..spec.cases {
        let chain = random_case(&mut rng, spec.num_sites, spec.t1)?;
        let s0: StateVector = chain.initial_delta(0)?;
        let (prod, _) = evolve(&s0, &chain, 0.0, spec.t1, &config)?;
        let reference = oracle_evolve(&s0, &chain, 0.0, spec.t1, spec.fine_dt)?;
        cases.push(OracleCase {
            field_amplitude_c: chain.field_amplitude_c(),
            speed: chain.schedule().segments()[0].speed,
            disorder: *chain.disorder(),
            max_deviation: prod.max_amplitude_difference(&reference),
        });
    }
    let max_deviation = cases.iter().map(|c| c.max_deviation).fold(0.0, f64::max);
    Ok(OracleCheckReport {
        spec: spec.clone(),
        cases,
        max_deviation,
        passed: max_deviation <= spec.tolerance,
    })
}

/// dt against dt/2 on the preset's full run.
pub fn converge(preset: &ExperimentPreset) -> Result<ConvergenceReport, HarnessError> {
    let spec = preset.chain_spec()?;
    let s0 = preset.initial_state(&spec)?;
    Ok(convergence_check(&spec, &s0, preset.run.t_end, &preset.integrator)?)
}
