//! Running presets and turning trajectories into CSV, JSON and SVG artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spinchain::chain::{peak_of, ChainSpec, StateVector};
use spinchain::dual::{decode_and_measure, encode, evolve_dual, DecodeOutcome, LogicalQubit};
use spinchain::pendulum::{adiabaticity_report, estimate_nmax};
use spinchain::propagator::{evolve, IntegratorConfig, RunMetadata, Trajectory};

use crate::config::with_value;
use crate::error::HarnessError;
use crate::preset::ExperimentPreset;
use crate::svg::{LinePlot, Series};

/// Probability above which a site counts towards a wavepacket's support.
pub const SUPPORT_THRESHOLD: f64 = 0.01;

const META_PREFIX: &str = "# spinchain ";

#[derive(Debug, Clone)]
pub struct Simulation {
    pub preset: ExperimentPreset,
    pub spec: ChainSpec,
    pub trajectory: Trajectory,
    pub final_state: StateVector,
}

/// Evolves `[0, t_end]`, cutting the run at every requested snapshot time so
/// those instants are recorded exactly.
pub fn simulate(preset: &ExperimentPreset) -> Result<Simulation, HarnessError> {
    if !preset.scan.values.is_empty() {
        return Err(HarnessError::Invalid(format!(
            "preset {} scans `{}`; run it through run_preset",
            preset.name, preset.scan.parameter
        )));
    }
    let spec = preset.chain_spec()?;
    let t_end = preset.run.t_end;
    if !(t_end >= 0.0) {
        return Err(HarnessError::Invalid(format!("run.t_end must be non-negative, got {t_end}")));
    }
    let mut cuts: Vec<f64> = preset
        .run
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < t_end)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.push(t_end);

    let mut state = preset.initial_state(&spec)?;
    let mut merged: Option<Trajectory> = None;
    let mut t0 = 0.0;
    for t1 in cuts {
        let (next, part) = evolve(&state, &spec, t0, t1, &preset.integrator)?;
        merged = Some(match merged {
            None => part,
            Some(mut acc) => {
                append(&mut acc, part);
                acc
            }
        });
        state = next;
        t0 = t1;
    }
    let mut trajectory = merged.expect("at least one segment");
    trajectory.metadata.t1 = t_end;
    Ok(Simulation {
        preset: preset.clone(),
        spec,
        trajectory,
        final_state: state,
    })
}

fn append(acc: &mut Trajectory, part: Trajectory) {
    // the first snapshot of `part` repeats the last one of `acc`
    acc.times.extend(part.times.into_iter().skip(1));
    acc.profiles.extend(part.profiles.into_iter().skip(1));
    acc.peaks.extend(part.peaks.into_iter().skip(1));
    acc.end_probability.extend(part.end_probability.into_iter().skip(1));
    if let (Some(a), Some(p)) = (acc.amplitudes.as_mut(), part.amplitudes) {
        a.extend(p.into_iter().skip(1));
    }
}

/// Final-time observables only; skips intermediate snapshots.
pub fn simulate_final(preset: &ExperimentPreset) -> Result<SnapshotRow, HarnessError> {
    let spec = preset.chain_spec()?;
    let state = preset.initial_state(&spec)?;
    let t_end = preset.run.t_end;
    let config = IntegratorConfig {
        snapshot_interval: t_end.max(preset.integrator.dt),
        store_amplitudes: false,
        ..preset.integrator
    };
    let (out, _) = evolve(&state, &spec, 0.0, t_end, &config)?;
    Ok(SnapshotRow::new(t_end, &out.excitation_profile()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub t: f64,
    pub peak_site: usize,
    pub peak_probability: f64,
    pub end_probability: f64,
    /// Sites above [`SUPPORT_THRESHOLD`].
    pub support: usize,
    /// `|sum(profile) - 1|`.
    pub norm_error: f64,
}

impl SnapshotRow {
    pub fn new(t: f64, profile: &[f64]) -> Self {
        let (peak_site, peak_probability) = peak_of(profile);
        Self {
            t,
            peak_site,
            peak_probability,
            end_probability: *profile.last().unwrap_or(&0.0),
            support: profile.iter().filter(|&&p| p > SUPPORT_THRESHOLD).count(),
            norm_error: (profile.iter().sum::<f64>() - 1.0).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    /// Value of the scanned parameter, for scanning presets.
    pub scan_value: Option<f64>,
    pub metadata: RunMetadata,
    /// Rows at the preset's snapshot times.
    pub panels: Vec<SnapshotRow>,
    pub final_row: SnapshotRow,
    pub max_norm_drift: f64,
    /// Largest support over all snapshots after `t = 0`.
    pub max_support: usize,
    /// Initial weight strictly inside the separatrix (diagnostic).
    pub inside_separatrix: Option<f64>,
    pub nmax_estimate: Option<usize>,
    pub profile_csv: String,
}

impl PointSummary {
    fn new(sim: &Simulation, scan_value: Option<f64>, profile_csv: String) -> Result<Self, HarnessError> {
        let traj = &sim.trajectory;
        let rows: Vec<SnapshotRow> = traj.times.iter().zip(&traj.profiles).map(|(&t, p)| SnapshotRow::new(t, p)).collect();
        let panels = sim
            .preset
            .run
            .snapshot_times
            .iter()
            .filter_map(|&t| traj.nearest(t).map(|i| rows[i].clone()))
            .collect();
        let c = sim.spec.field_amplitude_c();
        let (inside, nmax) = if c > 0.0 {
            let s0 = sim.preset.initial_state(&sim.spec)?;
            (
                Some(adiabaticity_report(&sim.spec, &s0, 0.0)?),
                Some(estimate_nmax(sim.spec.coupling_j(), c)?),
            )
        } else {
            (None, None)
        };
        Ok(Self {
            scan_value,
            metadata: traj.metadata.clone(),
            panels,
            final_row: rows.last().cloned().expect("trajectory has snapshots"),
            max_norm_drift: traj.max_norm_drift(),
            max_support: rows.iter().skip(1).map(|r| r.support).max().unwrap_or(0),
            inside_separatrix: inside,
            nmax_estimate: nmax,
            profile_csv,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub preset: ExperimentPreset,
    pub points: Vec<PointSummary>,
    /// Scan table file, for scanning presets.
    pub scan_csv: Option<String>,
}

impl RunReport {
    /// The single point of an unscanned run, or the last scan point.
    pub fn final_point(&self) -> &PointSummary {
        self.points.last().expect("reports have points")
    }

    pub fn point_for(&self, scan_value: f64) -> Option<&PointSummary> {
        self.points.iter().find(|p| p.scan_value == Some(scan_value))
    }
}

/// Everything a run produces, keyed by file name.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub report: RunReport,
    pub files: BTreeMap<String, String>,
}

impl Artifacts {
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
        fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for (name, body) in &self.files {
            let path = dir.join(name);
            fs::write(&path, body)?;
            out.push(path);
        }
        Ok(out)
    }

    pub fn summary_name(&self) -> String {
        format!("{}_summary.json", self.report.preset.name)
    }
}

#[derive(Serialize, Deserialize)]
struct CsvMeta<'a> {
    preset: std::borrow::Cow<'a, ExperimentPreset>,
    metadata: Option<std::borrow::Cow<'a, RunMetadata>>,
}

fn meta_line(preset: &ExperimentPreset, metadata: Option<&RunMetadata>) -> Result<String, HarnessError> {
    let meta = CsvMeta {
        preset: std::borrow::Cow::Borrowed(preset),
        metadata: metadata.map(std::borrow::Cow::Borrowed),
    };
    Ok(format!("{META_PREFIX}{}\n", serde_json::to_string(&meta)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub t: f64,
    pub n: usize,
    pub probability: f64,
}

/// `t,n,probability` rows for every snapshot, preceded by a metadata comment.
pub fn profile_csv(sim: &Simulation) -> Result<String, HarnessError> {
    let mut buf = meta_line(&sim.preset, Some(&sim.trajectory.metadata))?.into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for (&t, profile) in sim.trajectory.times.iter().zip(&sim.trajectory.profiles) {
            for (n, &probability) in profile.iter().enumerate() {
                w.serialize(ProfileRow { t, n, probability })?;
            }
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn read_meta(text: &str) -> Option<ExperimentPreset> {
    let line = text.lines().next()?.strip_prefix(META_PREFIX)?;
    let meta: CsvMeta<'static> = serde_json::from_str(line).ok()?;
    Some(meta.preset.into_owned())
}

fn comment_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes())
}

pub fn read_profile_csv(text: &str) -> Result<Vec<ProfileRow>, HarnessError> {
    comment_reader(text).deserialize().map(|r| r.map_err(HarnessError::from)).collect()
}

/// Profiles grouped by snapshot time, in file order.
fn group_profiles(rows: &[ProfileRow]) -> Vec<(f64, Vec<f64>)> {
    let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some((t, p)) if *t == r.t => p.push(r.probability),
            _ => out.push((r.t, vec![r.probability])),
        }
    }
    out
}

/// Excitation profiles at the panel times recorded in the CSV metadata (or
/// first, middle and last snapshot).
pub fn profiles_svg(csv_text: &str) -> Result<String, HarnessError> {
    let groups = group_profiles(&read_profile_csv(csv_text)?);
    let preset = read_meta(csv_text);
    let wanted: Vec<f64> = match &preset {
        Some(p) if !p.run.snapshot_times.is_empty() => p.run.snapshot_times.clone(),
        _ if groups.is_empty() => Vec::new(),
        _ => vec![groups[0].0, groups[groups.len() / 2].0, groups[groups.len() - 1].0],
    };
    let series = wanted
        .iter()
        .filter_map(|&t| {
            groups
                .iter()
                .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
                .map(|(tt, p)| Series::new(format!("t = {tt}"), p.iter().enumerate().map(|(n, &v)| (n as f64, v)).collect()))
        })
        .collect();
    Ok(LinePlot {
        title: preset.as_ref().map_or("excitation profile".to_string(), |p| format!("{} excitation profile", p.name)),
        x_label: "site n".into(),
        y_label: "|c_n|^2".into(),
        series,
        y_range: Some((0.0, 1.0)),
        description: "profiles at the panel times".into(),
        ..LinePlot::default()
    }
    .render())
}

/// Peak and end-site probability against time.
pub fn series_svg(csv_text: &str) -> Result<String, HarnessError> {
    let groups = group_profiles(&read_profile_csv(csv_text)?);
    let peak: Vec<(f64, f64)> = groups.iter().map(|(t, p)| (*t, peak_of(p).1)).collect();
    let end: Vec<(f64, f64)> = groups.iter().map(|(t, p)| (*t, *p.last().unwrap_or(&0.0))).collect();
    Ok(LinePlot {
        title: read_meta(csv_text).map_or("transfer".to_string(), |p| format!("{} transfer", p.name)),
        x_label: "t".into(),
        y_label: "probability".into(),
        series: vec![Series::new("peak", peak), Series::new("end site", end)],
        y_range: Some((0.0, 1.0)),
        ..LinePlot::default()
    }
    .render())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub value: f64,
    pub final_end_probability: f64,
    pub final_peak_site: usize,
    pub final_peak_probability: f64,
}

fn scan_csv(preset: &ExperimentPreset, points: &[PointSummary]) -> Result<String, HarnessError> {
    let mut buf = meta_line(preset, None)?.into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for p in points {
            w.serialize(ScanRow {
                value: p.scan_value.unwrap_or(f64::NAN),
                final_end_probability: p.final_row.end_probability,
                final_peak_site: p.final_row.peak_site,
                final_peak_probability: p.final_row.peak_probability,
            })?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn scan_svg(csv_text: &str) -> Result<String, HarnessError> {
    let rows: Vec<ScanRow> = comment_reader(csv_text).deserialize().collect::<Result<_, _>>()?;
    let preset = read_meta(csv_text);
    Ok(LinePlot {
        title: preset.as_ref().map_or("scan".to_string(), |p| format!("{} final end-site probability", p.name)),
        x_label: preset.map_or("value".to_string(), |p| p.scan.parameter),
        y_label: "|c_N|^2".into(),
        series: vec![Series::new(
            "end site",
            rows.iter().map(|r| (r.value, r.final_end_probability)).collect(),
        )],
        y_range: Some((0.0, 1.0)),
        ..LinePlot::default()
    }
    .render())
}

/// Runs a preset (every scan point, if it scans) and renders all artifacts.
pub fn run_preset(preset: &ExperimentPreset) -> Result<Artifacts, HarnessError> {
    let name = preset.name.as_str();
    let mut files = BTreeMap::new();
    let mut points = Vec::new();
    let mut scan_file = None;

    let jobs: Vec<(Option<f64>, ExperimentPreset)> = if preset.scan.values.is_empty() {
        vec![(None, preset.clone())]
    } else {
        preset
            .scan
            .values
            .iter()
            .map(|&v| {
                let mut p = with_value(preset, &preset.scan.parameter, v)?;
                p.scan = Default::default();
                Ok((Some(v), p))
            })
            .collect::<Result<_, HarnessError>>()?
    };
    let sims: Vec<Simulation> = jobs.par_iter().map(|(_, p)| simulate(p)).collect::<Result<_, _>>()?;

    for (i, ((value, _), sim)) in jobs.iter().zip(&sims).enumerate() {
        let stem = match value {
            None => name.to_string(),
            Some(_) => format!("{name}_{i}"),
        };
        let csv_name = format!("{stem}_profile.csv");
        let csv_text = profile_csv(sim)?;
        files.insert(format!("{stem}_profiles.svg"), profiles_svg(&csv_text)?);
        files.insert(format!("{stem}_series.svg"), series_svg(&csv_text)?);
        points.push(PointSummary::new(sim, *value, csv_name.clone())?);
        files.insert(csv_name, csv_text);
    }
    if !preset.scan.values.is_empty() {
        let text = scan_csv(preset, &points)?;
        files.insert(format!("{name}_scan.svg"), scan_svg(&text)?);
        files.insert(format!("{name}_scan.csv"), text);
        scan_file = Some(format!("{name}_scan.csv"));
    }
    let report = RunReport {
        preset: preset.clone(),
        points,
        scan_csv: scan_file,
    };
    files.insert(format!("{name}_summary.json"), serde_json::to_string_pretty(&report)? + "\n");
    Ok(Artifacts { report, files })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub compared: Vec<String>,
    pub identical: bool,
}

/// Re-runs the preset stored in a summary file and compares every artifact
/// that exists next to it byte for byte.
pub fn replay(summary_path: &Path) -> Result<ReplayReport, HarnessError> {
    let report: RunReport = serde_json::from_str(&fs::read_to_string(summary_path)?)?;
    let dir = summary_path.parent().unwrap_or(Path::new("."));
    let fresh = run_preset(&report.preset)?;
    let mut compared = Vec::new();
    for (name, body) in &fresh.files {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        if fs::read(&path)? != body.as_bytes() {
            return Err(HarnessError::ReplayMismatch(name.clone()));
        }
        compared.push(name.clone());
    }
    if compared.is_empty() {
        return Err(HarnessError::ReplayMismatch("no artifacts found next to the summary".into()));
    }
    Ok(ReplayReport {
        compared,
        identical: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    pub preset: ExperimentPreset,
    pub qubit: LogicalQubit,
    pub metadata: RunMetadata,
    /// `|c_N|^2` of the shared single-chain amplitudes.
    pub end_probability: f64,
    pub outcome: DecodeOutcome,
}

/// Encodes `qubit`, drives both sub-chains to `t_end` and decodes.
pub fn run_dual(preset: &ExperimentPreset, qubit: LogicalQubit) -> Result<DualReport, HarnessError> {
    let spec = preset.chain_spec()?;
    let config = IntegratorConfig {
        snapshot_interval: preset.run.t_end.max(preset.integrator.dt),
        ..preset.integrator
    };
    let state = encode(qubit, &spec);
    let (out, traj) = evolve_dual(&state, &spec, 0.0, preset.run.t_end, &config)?;
    Ok(DualReport {
        preset: preset.clone(),
        qubit,
        metadata: traj.metadata,
        end_probability: out.shared.end_probability(),
        outcome: decode_and_measure(&out),
    })
}
