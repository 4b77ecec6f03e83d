//! Shared helpers for the acceptance suite: scenario builders, random
//! states and the per-criterion report.

use std::f64::consts::PI;

use jcphase::jc_reference::{
    coherent_cutoff, enlarged_index, AmplitudeState, AtomLevel, InitialState, JcParameters, ScenarioConfig,
};
use jcphase::fermion_fock::DIM;
use jcphase::C64;
use nalgebra::DMatrix;
use rand::Rng;

/// Result of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(id: u32, title: &'static str, checks: &[Check]) -> Self {
        let passed = checks.iter().all(|c| c.passed());
        let detail = checks.iter().map(Check::describe).collect::<Vec<_>>().join("; ");
        Self { id, title, passed, detail }
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("criterion {:02} {verdict} {}: {}", self.id, self.title, self.detail)
    }
}

/// A measured quantity and the bound it must satisfy.
#[derive(Debug, Clone)]
pub enum Check {
    /// `value <= limit`.
    AtMost { what: String, value: f64, limit: f64 },
    /// `lo <= value <= hi`.
    Within { what: String, value: f64, lo: f64, hi: f64 },
}

impl Check {
    pub fn at_most(what: impl Into<String>, value: f64, limit: f64) -> Self {
        Check::AtMost { what: what.into(), value, limit }
    }

    pub fn within(what: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check::Within { what: what.into(), value, lo, hi }
    }

    pub fn passed(&self) -> bool {
        match self {
            Check::AtMost { value, limit, .. } => *value <= *limit,
            Check::Within { value, lo, hi, .. } => *lo <= *value && *value <= *hi,
        }
    }

    pub fn describe(&self) -> String {
        let mark = if self.passed() { "" } else { " [out of bounds]" };
        match self {
            Check::AtMost { what, value, limit } => format!("{what} = {value:.3e} (limit {limit:.0e}){mark}"),
            Check::Within { what, value, lo, hi } => format!("{what} = {value:.4} (range [{lo:.4}, {hi:.4}]){mark}"),
        }
    }
}

pub fn params(detuning: f64) -> JcParameters {
    JcParameters { rabi: 1.0, detuning, cavity_omega: 5.0 }
}

pub fn fock(p: JcParameters, photons: usize, level: AtomLevel) -> ScenarioConfig {
    ScenarioConfig { params: p, initial: InitialState::Fock { photons, level }, n_max: photons + 3 }
}

pub fn coherent(p: JcParameters, eta: f64, level: AtomLevel) -> ScenarioConfig {
    let eta = C64::new(eta, 0.0);
    ScenarioConfig { params: p, initial: InitialState::Coherent { eta, level }, n_max: coherent_cutoff(eta) }
}

/// Fock 1, Fock 4 and coherent 2 in both atomic levels, for each detuning.
pub fn standard_scenarios() -> Vec<(String, ScenarioConfig)> {
    let mut out = Vec::new();
    for d in [0.0, 0.5] {
        for level in [AtomLevel::Lower, AtomLevel::Upper] {
            let p = params(d);
            out.push((format!("fock 1 {level:?} d={d}"), fock(p, 1, level)));
            out.push((format!("fock 4 {level:?} d={d}"), fock(p, 4, level)));
            out.push((format!("coherent 2 {level:?} d={d}"), coherent(p, 2.0, level)));
        }
    }
    out
}

fn random_c64(rng: &mut impl Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Normalised one-atom amplitudes with every entry populated.
pub fn random_amplitudes(rng: &mut impl Rng, n_max: usize) -> AmplitudeState {
    let mut s = AmplitudeState::zeros(n_max, 0.0);
    s.lower.iter_mut().chain(s.upper.iter_mut()).for_each(|c| *c = random_c64(rng));
    let norm = s.norm().sqrt();
    s.lower.iter_mut().chain(s.upper.iter_mut()).for_each(|c| *c /= norm);
    s
}

pub fn random_custom(rng: &mut impl Rng, p: JcParameters) -> ScenarioConfig {
    let n_max = rng.gen_range(3..=10);
    let s = random_amplitudes(rng, n_max);
    ScenarioConfig { params: p, initial: InitialState::Custom { lower: s.lower, upper: s.upper }, n_max }
}

/// Mixture of pure states from the empty, one-atom and doubly occupied sectors.
pub fn random_sector_density(rng: &mut impl Rng, n_max: usize) -> DMatrix<C64> {
    let dim = DIM * (n_max + 1);
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    let weights: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for (sector, fermions) in [vec![0usize], vec![1, 2], vec![3]].iter().enumerate() {
        let mut v = vec![C64::default(); dim];
        for &f in fermions {
            for n in 0..=n_max {
                v[enlarged_index(f, n, n_max)] = random_c64(rng) / (1.0 + n as f64);
            }
        }
        let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        let w = weights[sector] / total / norm;
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] += v[i] * v[j].conj() * w;
            }
        }
    }
    rho
}

/// Evenly spaced grid `0, step, ..., t_end`.
pub fn grid(t_end: f64, step: f64) -> Vec<f64> {
    let n = (t_end / step + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

/// Predicted revival time `4π sqrt(nbar) / Ω` of a coherent field.
pub fn revival_time(nbar: f64, rabi: f64) -> f64 {
    4.0 * PI * nbar.sqrt() / rabi
}
