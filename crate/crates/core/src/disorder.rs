//! Coupling noise on the chain bonds.
//!
//! Both disorder flavours perturb the bond couplings `J -> J + delta_n`, never
//! the on-site potential. Every bond draws from its own ChaCha8 stream (stream
//! id = bond index) under the master seed, so a realization depends only on
//! `(seed, bond)` and not on the order in which bonds are materialized.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of the generator recorded in run metadata.
pub const GENERATOR_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(seed), stream = bond index";

/// Number of cosine terms per bond used throughout the experiments.
pub const DEFAULT_NUM_TERMS: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum DisorderError {
    #[error("disorder parameter `{name}` must be {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("malformed disorder CSV at line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

fn bond_rng(seed: u64, bond: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(bond as u64);
    rng
}

/// Time-independent offsets drawn uniformly from `[-delta, delta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticDisorder {
    pub amplitude_delta: f64,
    pub seed: u64,
}

impl StaticDisorder {
    pub fn new(amplitude_delta: f64, seed: u64) -> Result<Self, DisorderError> {
        if !(amplitude_delta >= 0.0 && amplitude_delta.is_finite()) {
            return Err(DisorderError::InvalidParameter {
                name: "amplitude_delta",
                requirement: "finite and non-negative",
                value: amplitude_delta,
            });
        }
        Ok(Self { amplitude_delta, seed })
    }

    /// Offset of a single bond.
    pub fn offset(&self, bond: usize) -> f64 {
        let u: f64 = bond_rng(self.seed, bond).random();
        self.amplitude_delta * (2.0 * u - 1.0)
    }

    /// Offsets for bonds `0..num_bonds`.
    pub fn realize(&self, num_bonds: usize) -> Vec<f64> {
        (0..num_bonds).map(|b| self.offset(b)).collect()
    }
}

/// Offsets that oscillate in time, each bond a sum of `num_terms` cosines
/// `A cos(w_i t + phi_i)` with `w_i ~ U[0, omega_max]` and `phi_i ~ U[0, 2pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicDisorder {
    pub amplitude_a: f64,
    pub omega_max: f64,
    pub num_terms: usize,
    pub seed: u64,
}

impl DynamicDisorder {
    pub fn new(
        amplitude_a: f64,
        omega_max: f64,
        num_terms: usize,
        seed: u64,
    ) -> Result<Self, DisorderError> {
        if !(amplitude_a >= 0.0 && amplitude_a.is_finite()) {
            return Err(DisorderError::InvalidParameter {
                name: "amplitude_a",
                requirement: "finite and non-negative",
                value: amplitude_a,
            });
        }
        if !(omega_max >= 0.0 && omega_max.is_finite()) {
            return Err(DisorderError::InvalidParameter {
                name: "omega_max",
                requirement: "finite and non-negative",
                value: omega_max,
            });
        }
        if num_terms == 0 {
            return Err(DisorderError::InvalidParameter {
                name: "num_terms",
                requirement: "at least 1",
                value: 0.0,
            });
        }
        Ok(Self {
            amplitude_a,
            omega_max,
            num_terms,
            seed,
        })
    }

    /// Frequencies and phases of one bond, in draw order `(w_1, phi_1), ...`.
    pub fn bond_terms(&self, bond: usize) -> Vec<(f64, f64)> {
        let mut rng = bond_rng(self.seed, bond);
        (0..self.num_terms)
            .map(|_| {
                let w = self.omega_max * rng.random::<f64>();
                let phi = TAU * rng.random::<f64>();
                (w, phi)
            })
            .collect()
    }

    pub fn realize(&self, num_bonds: usize) -> DynamicRealization {
        let mut omegas = Vec::with_capacity(num_bonds * self.num_terms);
        let mut phases = Vec::with_capacity(num_bonds * self.num_terms);
        for bond in 0..num_bonds {
            for (w, phi) in self.bond_terms(bond) {
                omegas.push(w);
                phases.push(phi);
            }
        }
        DynamicRealization {
            amplitude: self.amplitude_a,
            num_terms: self.num_terms,
            omegas,
            phases,
        }
    }

    /// Upper bound on `|delta_n(t)|`.
    pub fn bound(&self) -> f64 {
        self.num_terms as f64 * self.amplitude_a
    }
}

/// Offset of `bond` at time `t`, drawing the bond's terms from the seed.
pub fn dynamic_offset(d: &DynamicDisorder, bond: usize, t: f64) -> f64 {
    d.bond_terms(bond)
        .into_iter()
        .map(|(w, phi)| d.amplitude_a * (w * t + phi).cos())
        .sum()
}

/// Materialized frequencies and phases for every bond of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicRealization {
    amplitude: f64,
    num_terms: usize,
    omegas: Vec<f64>,
    phases: Vec<f64>,
}

impl DynamicRealization {
    /// Builds a realization from explicit per-bond `(omega, phase)` lists.
    /// Every bond must carry the same number of terms.
    pub fn from_terms(amplitude: f64, terms: &[Vec<(f64, f64)>]) -> Option<Self> {
        let num_terms = terms.first()?.len();
        if num_terms == 0 || terms.iter().any(|b| b.len() != num_terms) {
            return None;
        }
        let (omegas, phases) = terms.iter().flatten().copied().unzip();
        Some(Self {
            amplitude,
            num_terms,
            omegas,
            phases,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn num_terms(&self) -> usize {
        self.num_terms
    }

    pub fn num_bonds(&self) -> usize {
        self.omegas.len() / self.num_terms
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn offset(&self, bond: usize, t: f64) -> f64 {
        let range = bond * self.num_terms..(bond + 1) * self.num_terms;
        self.omegas[range.clone()]
            .iter()
            .zip(&self.phases[range])
            .map(|(w, phi)| (w * t + phi).cos())
            .sum::<f64>()
            * self.amplitude
    }

    pub fn offsets_at(&self, t: f64, out: &mut [f64]) {
        for (bond, o) in out.iter_mut().enumerate() {
            *o = self.offset(bond, t);
        }
    }

    /// CSV with header `bond,term,omega,phase`.
    pub fn to_csv(&self) -> String {
        let rows = self.omegas.iter().zip(&self.phases).enumerate().map(|(k, (&omega, &phase))| DynamicRow {
            bond: k / self.num_terms,
            term: k % self.num_terms,
            omega,
            phase,
        });
        write_rows(rows)
    }

    pub fn from_csv(amplitude: f64, text: &str) -> Result<Self, DisorderError> {
        let mut terms: Vec<Vec<(f64, f64)>> = Vec::new();
        for (line, row) in read_rows::<DynamicRow>(text)? {
            if row.bond == terms.len() {
                terms.push(Vec::new());
            }
            if row.bond + 1 != terms.len() || row.term != terms[row.bond].len() {
                return Err(DisorderError::Csv {
                    line,
                    reason: "rows must be ordered by bond then term".into(),
                });
            }
            terms[row.bond].push((row.omega, row.phase));
        }
        Self::from_terms(amplitude, &terms).ok_or(DisorderError::Csv {
            line: 0,
            reason: "empty or ragged realization".into(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct StaticRow {
    bond: usize,
    delta: f64,
}

#[derive(Serialize, Deserialize)]
struct DynamicRow {
    bond: usize,
    term: usize,
    omega: f64,
    phase: f64,
}

/// CSV with header `bond,delta`.
pub fn static_to_csv(offsets: &[f64]) -> String {
    write_rows(offsets.iter().enumerate().map(|(bond, &delta)| StaticRow { bond, delta }))
}

pub fn static_from_csv(text: &str) -> Result<Vec<f64>, DisorderError> {
    let mut out = Vec::new();
    for (line, row) in read_rows::<StaticRow>(text)? {
        if row.bond != out.len() {
            return Err(DisorderError::Csv {
                line,
                reason: format!("expected bond {}, found {}", out.len(), row.bond),
            });
        }
        out.push(row.delta);
    }
    Ok(out)
}

fn write_rows<T: Serialize>(rows: impl Iterator<Item = T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}

fn csv_error(e: csv::Error) -> DisorderError {
    DisorderError::Csv {
        line: e.position().map_or(0, |p| p.line() as usize),
        reason: e.to_string(),
    }
}

/// Rows with their 1-based line numbers.
fn read_rows<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<(usize, T)>, DisorderError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row = record.deserialize(Some(&headers)).map_err(|e| DisorderError::Csv {
            line,
            reason: e.to_string(),
        })?;
        out.push((line, row));
    }
    Ok(out)
}

/// Which kind of bond noise a chain carries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisorderModel {
    #[default]
    None,
    Static(StaticDisorder),
    Dynamic(DynamicDisorder),
}

impl DisorderModel {
    pub fn seed(&self) -> Option<u64> {
        match self {
            DisorderModel::None => None,
            DisorderModel::Static(s) => Some(s.seed),
            DisorderModel::Dynamic(d) => Some(d.seed),
        }
    }

    /// Same model with a different master seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        match *self {
            DisorderModel::None => DisorderModel::None,
            DisorderModel::Static(s) => DisorderModel::Static(StaticDisorder { seed, ..s }),
            DisorderModel::Dynamic(d) => DisorderModel::Dynamic(DynamicDisorder { seed, ..d }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_amplitude_static_is_zero() {
        let d = StaticDisorder::new(0.0, 7).unwrap();
        assert!(d.realize(100).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn static_values_stay_in_band() {
        for seed in 0..20 {
            let d = StaticDisorder::new(0.5, seed).unwrap();
            assert!(d.realize(100).iter().all(|x| x.abs() <= 0.5));
        }
    }

    #[test]
    fn static_is_deterministic_and_order_free() {
        let d = StaticDisorder::new(0.5, 42).unwrap();
        let a = d.realize(50);
        assert_eq!(a, d.realize(50));
        let reversed: Vec<f64> = (0..50).rev().map(|b| d.offset(b)).collect();
        let mut r = reversed.clone();
        r.reverse();
        assert_eq!(a, r);
        // a longer chain extends rather than reshuffles
        assert_eq!(&d.realize(80)[..50], &a[..]);
    }

    #[test]
    fn different_seeds_differ() {
        let a = StaticDisorder::new(0.5, 1).unwrap().realize(10);
        let b = StaticDisorder::new(0.5, 2).unwrap().realize(10);
        assert_ne!(a, b);
    }

    #[test]
    fn forced_quarter_phases_vanish_at_origin() {
        let terms = vec![vec![(0.3, FRAC_PI_2); 10]; 4];
        let r = DynamicRealization::from_terms(0.025, &terms).unwrap();
        for b in 0..4 {
            assert!(r.offset(b, 0.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_amplitude_dynamic_is_zero() {
        let d = DynamicDisorder::new(0.0, 1.0, 10, 3).unwrap();
        for k in 0..100 {
            assert_eq!(dynamic_offset(&d, 5, k as f64 * 13.7), 0.0);
        }
    }

    #[test]
    fn dynamic_offset_is_bounded() {
        let d = DynamicDisorder::new(0.025, 0.1, 10, 11).unwrap();
        let r = d.realize(100);
        for bond in [0, 17, 99] {
            for k in 0..2000 {
                let t = k as f64 * 10.0;
                let v = r.offset(bond, t);
                assert!(v.abs() <= 0.25 + 1e-15);
                assert!((v - dynamic_offset(&d, bond, t)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dynamic_draws_respect_ranges() {
        let d = DynamicDisorder::new(0.025, 0.1, 10, 5).unwrap();
        for bond in 0..30 {
            for (w, phi) in d.bond_terms(bond) {
                assert!((0.0..=0.1).contains(&w));
                assert!((0.0..=TAU).contains(&phi));
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(StaticDisorder::new(-0.1, 0).is_err());
        assert!(StaticDisorder::new(f64::NAN, 0).is_err());
        assert!(DynamicDisorder::new(0.1, -1.0, 10, 0).is_err());
        assert!(DynamicDisorder::new(0.1, 1.0, 0, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = StaticDisorder::new(0.7, 9).unwrap().realize(12);
        assert_eq!(static_from_csv(&static_to_csv(&s)).unwrap(), s);

        let r = DynamicDisorder::new(0.025, 1.0, 3, 9).unwrap().realize(5);
        let back = DynamicRealization::from_csv(0.025, &r.to_csv()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_rejects_out_of_order_rows() {
        let err = static_from_csv("bond,delta\n0,0.1\n2,0.3\n").unwrap_err();
        assert!(matches!(err, DisorderError::Csv { line: 3, .. }));
        assert!(static_from_csv("bond,delta\n0\n").is_err());
    }

    #[test]
    fn reseed_keeps_parameters() {
        let m = DisorderModel::Dynamic(DynamicDisorder::new(0.025, 0.1, 10, 1).unwrap());
        match m.reseeded(99) {
            DisorderModel::Dynamic(d) => {
                assert_eq!(d.seed, 99);
                assert_eq!(d.omega_max, 0.1);
            }
            _ => unreachable!(),
        }
        assert_eq!(m.reseeded(99).seed(), Some(99));
    }
}
