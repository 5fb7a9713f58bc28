//! Parameter and seed ensembles, and the speed-threshold search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{canonical_key, with_value};
use crate::error::HarnessError;
use crate::preset::ExperimentPreset;
use crate::run::{simulate_final, SnapshotRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Dotted path or alias. `speed` rescales the run length with the speed,
    /// `seed` takes the values as seeds.
    pub parameter: String,
    pub values: Vec<f64>,
    /// Disorder realizations per value, seeded `base_seed + i`.
    pub ensemble: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub result: SnapshotRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueStats {
    pub value: f64,
    pub median_peak_probability: f64,
    pub median_end_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub stats: Vec<ValueStats>,
}

impl SweepTable {
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["value", "seed", "t", "peak_site", "peak_probability", "end_probability", "support"])?;
        for r in &self.rows {
            w.write_record([
                r.value.to_string(),
                r.seed.to_string(),
                r.result.t.to_string(),
                r.result.peak_site.to_string(),
                r.result.peak_probability.to_string(),
                r.result.end_probability.to_string(),
                r.result.support.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Median of a non-empty sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    assert!(n > 0, "median of an empty sample");
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn point_preset(base: &ExperimentPreset, parameter: &str, value: f64) -> Result<ExperimentPreset, HarnessError> {
    let mut p = match canonical_key(parameter) {
        "schedule.speed" => base.with_speed(value)?,
        _ => with_value(base, parameter, value)?,
    };
    p.scan = Default::default();
    Ok(p)
}

pub fn run_sweep(base: &ExperimentPreset, sweep: &SweepSpec) -> Result<SweepTable, HarnessError> {
    if sweep.values.is_empty() {
        return Err(HarnessError::Invalid("sweep needs at least one value".into()));
    }
    if sweep.ensemble == 0 {
        return Err(HarnessError::Invalid("ensemble size must be at least 1".into()));
    }
    let mut jobs = Vec::new();
    for &value in &sweep.values {
        let p = point_preset(base, &sweep.parameter, value)?;
        for i in 0..sweep.ensemble {
            let seed = p.disorder.seed.wrapping_add(i as u64);
            jobs.push((value, seed, p.with_seed(seed)));
        }
    }
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|(value, seed, p)| {
            Ok(SweepRow {
                value: *value,
                seed: *seed,
                result: simulate_final(p)?,
            })
        })
        .collect::<Result<_, HarnessError>>()?;
    let stats = sweep
        .values
        .iter()
        .map(|&value| {
            let of = |f: fn(&SnapshotRow) -> f64| {
                let v: Vec<f64> = rows.iter().filter(|r| r.value == value).map(|r| f(&r.result)).collect();
                median(&v)
            };
            ValueStats {
                value,
                median_peak_probability: of(|r| r.peak_probability),
                median_end_probability: of(|r| r.end_probability),
            }
        })
        .collect();
    Ok(SweepTable {
        spec: sweep.clone(),
        rows,
        stats,
    })
}

/// Search bracket on the speed.
pub const SPEED_MIN: f64 = 0.001;
pub const SPEED_MAX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdStatus {
    /// Bisection converged to the tolerance.
    Converged,
    /// Even the fastest speed meets the target.
    AboveRange,
    /// Not even the slowest speed meets the target.
    Unattainable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub target: f64,
    pub tolerance: f64,
    pub status: ThresholdStatus,
    /// Largest speed verified to meet the target (the bracket minimum when
    /// unattainable).
    pub speed: f64,
    /// `[meets target, fails target]` at the end of bisection.
    pub bracket: (f64, f64),
    pub midpoint: f64,
    /// Every `(speed, final end-site probability)` evaluated.
    pub evaluations: Vec<(f64, f64)>,
}

/// Bisection for the fastest speed whose final end-site probability reaches
/// `target`. Each trial runs the base preset rescaled to that speed, so the
/// potential always travels the same distance. Assumes the transfer degrades
/// monotonically with speed.
pub fn threshold_speed_search(base: &ExperimentPreset, target: f64, tolerance: f64) -> Result<ThresholdResult, HarnessError> {
    if !(target > 0.0 && target < 1.0) {
        return Err(HarnessError::Invalid(format!("target must lie in (0, 1), got {target}")));
    }
    if !(tolerance > 0.0) {
        return Err(HarnessError::Invalid(format!("tolerance must be positive, got {tolerance}")));
    }
    let mut evaluations = Vec::new();
    let mut f = |s: f64| -> Result<f64, HarnessError> {
        let p = base.with_speed(s)?;
        let v = simulate_final(&p)?.end_probability;
        evaluations.push((s, v));
        Ok(v)
    };
    let done = |status, speed, bracket: (f64, f64), evaluations| ThresholdResult {
        target,
        tolerance,
        status,
        speed,
        bracket,
        midpoint: 0.5 * (bracket.0 + bracket.1),
        evaluations,
    };

    if f(SPEED_MAX)? >= target {
        return Ok(done(ThresholdStatus::AboveRange, SPEED_MAX, (SPEED_MAX, SPEED_MAX), evaluations));
    }
    let (mut lo, mut hi) = (SPEED_MIN, SPEED_MAX);
    let mut lo_verified = false;
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= target {
            lo = mid;
            lo_verified = true;
        } else {
            hi = mid;
        }
    }
    if !lo_verified && f(SPEED_MIN)? < target {
        return Ok(done(ThresholdStatus::Unattainable, SPEED_MIN, (SPEED_MIN, hi), evaluations));
    }
    Ok(done(ThresholdStatus::Converged, lo, (lo, hi), evaluations))
}
