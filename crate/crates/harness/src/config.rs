//! Flat `key = value` configuration with dotted paths into a preset.
//!
//! ```text
//! # comment
//! chain.field_amplitude_c = 2
//! chain.window.mode = global
//! schedule.speed = 0.01
//! schedule.segments = 1000:0.01, 500:0, 1000:0.01
//! disorder.kind = static
//! disorder.delta = 0.5
//! run.snapshot_times = 0, 5000, 10000
//! ```
//!
//! Keys name fields of the preset's JSON form. Values are parsed by the type
//! of the field they replace: numbers, `true`/`false`, bare words for
//! enumerations, and comma lists for arrays. `schedule.segments` takes
//! `duration:speed` pairs. A few short aliases are accepted (`speed`,
//! `delta`, `seed`, ...). Later entries win, and command-line overrides are
//! applied after the file.

use std::str::FromStr;

use serde_json::{Map, Number, Value};

use crate::error::HarnessError;
use crate::preset::ExperimentPreset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Override {
    pub key: String,
    pub value: String,
}

impl FromStr for Override {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, value) = s.split_once('=').ok_or_else(|| HarnessError::BadOverride {
            key: s.to_string(),
            reason: "expected key=value".into(),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(HarnessError::BadOverride {
                key: s.to_string(),
                reason: "empty key".into(),
            });
        }
        Ok(Self {
            key: key.to_string(),
            value: value.trim().to_string(),
        })
    }
}

pub fn parse_config(text: &str) -> Result<Vec<Override>, HarnessError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let o = line.parse::<Override>().map_err(|e| HarnessError::Config {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(o);
    }
    Ok(out)
}

/// Canonical dotted path for a key, expanding the short aliases.
pub fn canonical_key(key: &str) -> &str {
    match key {
        "num_sites" => "chain.num_sites",
        "coupling_j" => "chain.coupling_j",
        "field_amplitude_c" | "c" => "chain.field_amplitude_c",
        "window" => "chain.window.mode",
        "hopping" => "chain.hopping",
        "speed" => "schedule.speed",
        "start_center" => "schedule.start_center",
        "delta" => "disorder.delta",
        "amplitude_a" => "disorder.amplitude_a",
        "omega_max" => "disorder.omega_max",
        "seed" => "disorder.seed",
        "dt" => "integrator.dt",
        "t_end" => "run.t_end",
        other => other,
    }
}

pub fn apply_overrides(preset: &ExperimentPreset, overrides: &[Override]) -> Result<ExperimentPreset, HarnessError> {
    if overrides.is_empty() {
        return Ok(preset.clone());
    }
    let mut tree = serde_json::to_value(preset)?;
    for o in overrides {
        set_path(&mut tree, canonical_key(&o.key), &o.value)?;
    }
    serde_json::from_value(tree).map_err(|e| HarnessError::BadOverride {
        key: overrides.iter().map(|o| o.key.as_str()).collect::<Vec<_>>().join(","),
        reason: e.to_string(),
    })
}

/// Sets one numeric field, used by scans and sweeps.
pub fn with_value(preset: &ExperimentPreset, key: &str, value: f64) -> Result<ExperimentPreset, HarnessError> {
    apply_overrides(
        preset,
        &[Override {
            key: key.to_string(),
            value: format_number(value),
        }],
    )
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

fn bad(key: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::BadOverride {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn set_path(tree: &mut Value, key: &str, raw: &str) -> Result<(), HarnessError> {
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (depth, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| bad(key, format!("`{}` is not a section", parts[..depth].join("."))))?;
        node = obj.get_mut(*part).ok_or_else(|| bad(key, "unknown key"))?;
    }
    let is_segments = key == "schedule.segments";
    *node = parse_like(node, raw, is_segments).map_err(|reason| bad(key, reason))?;
    Ok(())
}

fn parse_like(current: &Value, raw: &str, segments: bool) -> Result<Value, String> {
    match current {
        Value::Bool(_) => raw.parse::<bool>().map(Value::Bool).map_err(|_| format!("expected true/false, got `{raw}`")),
        Value::Number(n) if n.is_u64() => raw
            .parse::<u64>()
            .map(Value::from)
            .map_err(|_| format!("expected a non-negative integer, got `{raw}`")),
        Value::Number(_) => parse_float(raw),
        Value::String(_) => Ok(Value::String(raw.to_string())),
        Value::Array(_) if segments => parse_segments(raw),
        Value::Array(_) => {
            if raw.is_empty() {
                return Ok(Value::Array(Vec::new()));
            }
            raw.split(',').map(|s| parse_float(s.trim())).collect::<Result<Vec<_>, _>>().map(Value::Array)
        }
        Value::Object(_) => Err("names a section, not a value".into()),
        Value::Null => Err("field has no type to parse against".into()),
    }
}

fn parse_float(raw: &str) -> Result<Value, String> {
    let v: f64 = raw.parse().map_err(|_| format!("expected a number, got `{raw}`"))?;
    Number::from_f64(v).map(Value::Number).ok_or_else(|| format!("`{raw}` is not finite"))
}

fn parse_segments(raw: &str) -> Result<Value, String> {
    if raw.is_empty() {
        return Ok(Value::Array(Vec::new()));
    }
    raw.split(',')
        .map(|item| {
            let (d, s) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| format!("segment `{item}` is not duration:speed"))?;
            let mut m = Map::new();
            m.insert("duration".into(), parse_float(d.trim())?);
            m.insert("speed".into(), parse_float(s.trim())?);
            Ok(Value::Object(m))
        })
        .collect::<Result<Vec<_>, String>>()
        .map(Value::Array)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset::{preset, DisorderKind, PresetName};
    use spinchain::chain::{HoppingSign, WindowMode};

    fn ov(s: &str) -> Override {
        s.parse().unwrap()
    }

    #[test]
    fn empty_overrides_are_identity() {
        let p = preset(PresetName::Fig7);
        assert_eq!(apply_overrides(&p, &[]).unwrap(), p);
    }

    #[test]
    fn typed_fields() {
        let p = apply_overrides(
            &preset(PresetName::Fig3),
            &[
                ov("chain.field_amplitude_c = 2.5"),
                ov("chain.num_sites=21"),
                ov("window=global"),
                ov("hopping = negative"),
                ov("disorder.kind=static"),
                ov("delta=0.3"),
                ov("seed=17"),
                ov("run.snapshot_times = 1, 2.5,4"),
                ov("integrator.store_amplitudes=true"),
            ],
        )
        .unwrap();
        assert_eq!(p.chain.field_amplitude_c, 2.5);
        assert_eq!(p.chain.num_sites, 21);
        assert_eq!(p.chain.window.mode, WindowMode::Global);
        assert_eq!(p.chain.hopping, HoppingSign::Negative);
        assert_eq!(p.disorder.kind, DisorderKind::Static);
        assert_eq!((p.disorder.delta, p.disorder.seed), (0.3, 17));
        assert_eq!(p.run.snapshot_times, vec![1.0, 2.5, 4.0]);
        assert!(p.integrator.store_amplitudes);
    }

    #[test]
    fn segments_parse() {
        let p = apply_overrides(
            &preset(PresetName::Custom),
            &[ov("schedule.segments=1000:0.01, 500:0,1000:0.01")],
        )
        .unwrap();
        let spec = p.chain_spec().unwrap();
        assert!((spec.center_at(2500.0).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let base = preset(PresetName::Fig3);
        for bad in ["nope=1", "chain=3", "chain.num_sites=-4", "chain.coupling_j=abc", "window=sideways", "chain.num_sites.x=1"] {
            let err = apply_overrides(&base, &[ov(bad)]).unwrap_err();
            assert_eq!(err.class(), "bad_override", "{bad}");
        }
        assert!("no_equals".parse::<Override>().is_err());
    }

    #[test]
    fn config_text() {
        let text = "# header\n\nrun.t_end = 50  # trailing\nspeed=0.1\n";
        let o = parse_config(text).unwrap();
        assert_eq!(o, vec![ov("run.t_end=50"), ov("speed=0.1")]);
        let err = parse_config("a=1\njunk\n").unwrap_err();
        assert!(matches!(err, HarnessError::Config { line: 2, .. }));
    }

    #[test]
    fn later_entries_win() {
        let p = apply_overrides(&preset(PresetName::Fig3), &[ov("speed=0.1"), ov("speed=0.2")]).unwrap();
        assert_eq!(p.schedule.speed, 0.2);
        let q = with_value(&p, "chain.num_sites", 31.0).unwrap();
        assert_eq!(q.chain.num_sites, 31);
    }
}
