//! Pendulum phase portraits: the separatrix plus a family of orbits.

use serde::{Deserialize, Serialize};
use spinchain::pendulum::{classical_orbit, separatrix_curve, PendulumParams, PhasePoint};

use crate::error::HarnessError;
use crate::svg::{LinePlot, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitSpec {
    pub coupling_j: f64,
    pub field_amplitude_c: f64,
    pub orbits: usize,
    pub steps: usize,
    pub dt: f64,
    pub separatrix_points: usize,
}

impl Default for PortraitSpec {
    fn default() -> Self {
        Self {
            coupling_j: 1.0,
            field_amplitude_c: 2.0,
            orbits: 8,
            steps: 4000,
            dt: 0.005,
            separatrix_points: 256,
        }
    }
}

/// One row of the portrait CSV; `p` is measured from `p0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitRow {
    pub curve: String,
    pub x: f64,
    pub p: f64,
}

/// Separatrix branches and orbits started at `x = 0` with momenta spread
/// from deep inside the island to well outside it.
pub fn portrait_rows(spec: &PortraitSpec) -> Result<Vec<PortraitRow>, HarnessError> {
    let params = PendulumParams::new(spec.coupling_j, spec.field_amplitude_c, 0.0)?;
    let mut rows = Vec::new();
    let sep = separatrix_curve(&params, spec.separatrix_points)?;
    let (upper, lower) = sep.split_at(spec.separatrix_points);
    for (name, branch) in [("separatrix_upper", upper), ("separatrix_lower", lower)] {
        rows.extend(branch.iter().map(|q| PortraitRow {
            curve: name.to_string(),
            x: q.x(),
            p: q.p,
        }));
    }
    let width = 2.0 * spec.coupling_j.sqrt();
    for k in 0..spec.orbits {
        let frac = if spec.orbits == 1 {
            0.5
        } else {
            0.15 + 1.5 * k as f64 / (spec.orbits - 1) as f64
        };
        let orbit = classical_orbit(&params, PhasePoint::new(0.0, frac * width), spec.dt, spec.steps)?;
        let name = format!("orbit_{k}");
        rows.extend(orbit.iter().map(|q| PortraitRow {
            curve: name.clone(),
            x: q.x(),
            p: q.p,
        }));
    }
    Ok(rows)
}

pub fn portrait_csv(spec: &PortraitSpec) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in portrait_rows(spec)? {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn portrait_svg(csv_text: &str) -> Result<String, HarnessError> {
    let rows: Vec<PortraitRow> = csv::Reader::from_reader(csv_text.as_bytes()).deserialize().collect::<Result<_, _>>()?;
    let mut series: Vec<Series> = Vec::new();
    for r in rows {
        match series.last_mut() {
            Some(s) if s.label == r.curve => s.points.push((r.x, r.p)),
            _ => {
                let mut s = Series::new(r.curve, vec![(r.x, r.p)]);
                // angle wraps at +-pi
                s.break_above = Some(std::f64::consts::PI);
                series.push(s);
            }
        }
    }
    Ok(LinePlot {
        title: "pendulum phase portrait".into(),
        x_label: "x".into(),
        y_label: "p - p0".into(),
        series,
        x_range: Some((-std::f64::consts::PI, std::f64::consts::PI)),
        ..LinePlot::default()
    }
    .render())
}

#[cfg(test)]
mod tests {
    use super::*;
    use spinchain::pendulum::{classify, pendulum_energy, Region};

    #[test]
    fn inner_orbits_stay_inside() {
        let spec = PortraitSpec::default();
        let params = PendulumParams::new(1.0, 2.0, 0.0).unwrap();
        let rows = portrait_rows(&spec).unwrap();
        let first: Vec<&PortraitRow> = rows.iter().filter(|r| r.curve == "orbit_0").collect();
        assert_eq!(first.len(), spec.steps + 1);
        for r in first {
            let q = PhasePoint::new(r.x, r.p);
            assert_eq!(classify(&params, &q, 1e-9).unwrap(), Region::Inside);
        }
        for r in rows.iter().filter(|r| r.curve.starts_with("separatrix")) {
            assert!((pendulum_energy(&params, &PhasePoint::new(r.x, r.p)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn svg_from_csv() {
        let spec = PortraitSpec {
            orbits: 3,
            steps: 500,
            ..PortraitSpec::default()
        };
        let text = portrait_csv(&spec).unwrap();
        let svg = portrait_svg(&text).unwrap();
        assert!(svg.contains("separatrix_upper"));
        assert_eq!(svg, portrait_svg(&text).unwrap());
    }
}
