//! Time evolution of the phase-space coefficients.
//!
//! * a separable closed-form solution where each pair block is the product
//!   `conj(Ψ_i) Ψ_j` of two field polynomials;
//! * fixed-step RK4 on the coupled coefficient equations, with the field
//!   multiplications and derivatives acting as shift matrices;
//! * the closed-form solution obtained from the standard (non-canonical)
//!   correspondence rules, which grows without bound.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::jc_reference::{AmplitudeState, JcParameters};
use crate::phase_space::{Block, CoefficientSeries};

const I: C64 = C64::new(0.0, 1.0);

/// Largest population allowed in the two highest photon bands.
pub const TRUNCATION_LEAK_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
    #[error("truncation leak at t = {t}: top bands reach {mass:e}")]
    TruncationLeak { t: f64, mass: f64 },
    #[error("non-finite coefficients at t = {0}")]
    NonFinite(f64),
}

fn sqrt_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).sqrt()).product()
}

/// Constants of the separable solution, one pair per excitation number `n`.
///
/// `cos[n]` and `sin[n]` multiply `z^n cos(ω_n t / 2)` and `z^n sin(ω_n t / 2)`
/// in the upper-level polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableConstants {
    pub params: JcParameters,
    pub cos: Vec<C64>,
    pub sin: Vec<C64>,
}

/// Field polynomials in the monomial basis `z^k`.
///
/// `psi1` pairs with the upper atomic level (degree `<= n_max - 1`),
/// `psi2` with the lower one (degree `<= n_max`).
#[derive(Debug, Clone, PartialEq)]
pub struct PsiPair {
    pub t: f64,
    pub psi1: Vec<C64>,
    pub psi2: Vec<C64>,
}

/// Constants fixed by matching the separable form to the initial amplitudes.
pub fn separable_constants(initial: &AmplitudeState, p: &JcParameters) -> SeparableConstants {
    let n_max = initial.n_max();
    let mut cos = vec![C64::default(); n_max + 1];
    let mut sin = vec![C64::default(); n_max + 1];
    for n in 0..=n_max {
        let w = p.rabi_frequency(n);
        let l = initial.lower[n];
        let u = if n > 0 { initial.upper[n - 1] } else { C64::default() };
        let norm = 1.0 / (2.0 * PI * sqrt_factorial(n));
        cos[n] = -norm * l.conj();
        if w > 0.0 {
            let bracket = (p.detuning * l - p.rabi * (n as f64).sqrt() * u) / w;
            sin[n] = norm * I * bracket.conj();
        }
    }
    SeparableConstants { params: *p, cos, sin }
}

pub fn separable_psi(c: &SeparableConstants, t: f64) -> PsiPair {
    let p = &c.params;
    let n_max = c.cos.len() - 1;
    let mut psi1 = vec![C64::default(); n_max];
    let mut psi2 = vec![C64::default(); n_max + 1];
    for n in 0..=n_max {
        let w = p.rabi_frequency(n);
        let (co, si) = ((0.5 * w * t).cos(), (0.5 * w * t).sin());
        let (a, b) = (c.cos[n], c.sin[n]);
        psi2[n] = a * co + b * si;
        if n > 0 {
            let d = p.detuning;
            psi1[n - 1] = I * ((w * b + I * d * a) / p.rabi * co + (-w * a + I * d * b) / p.rabi * si);
        }
    }
    PsiPair { t, psi1, psi2 }
}

/// Largest mismatch between the separable constants and the initial amplitudes.
///
/// Covers the cosine and sine coefficients of the upper-level polynomial and
/// the vanishing of the would-be `1/z` term at zero excitations.
pub fn consistency_residual(c: &SeparableConstants, initial: &AmplitudeState) -> f64 {
    let p = &c.params;
    let mut worst = 0.0f64;
    let (a0, b0) = (c.cos[0], c.sin[0]);
    let w0 = p.rabi_frequency(0);
    worst = worst.max((w0 * b0 + I * p.detuning * a0).norm());
    worst = worst.max((-w0 * a0 + I * p.detuning * b0).norm());
    for n in 1..c.cos.len() {
        let w = p.rabi_frequency(n);
        let (a, b) = (c.cos[n], c.sin[n]);
        let norm = 1.0 / (2.0 * PI * sqrt_factorial(n - 1));
        let (l, u) = (initial.lower[n], initial.upper[n - 1]);
        let cos_coeff = I * (w * b + I * p.detuning * a) / p.rabi;
        worst = worst.max((cos_coeff - norm * u.conj()).norm());
        let sin_coeff = I * (-w * a + I * p.detuning * b) / p.rabi;
        let bracket = (p.rabi * (n as f64).sqrt() * l + p.detuning * u) / w;
        worst = worst.max((sin_coeff - norm * I * bracket.conj()).norm());
    }
    worst
}

/// Pair blocks `conj(Ψ_i) Ψ_j` expanded on the normalised basis.
pub fn psi_coefficients(psi: &PsiPair, omega: f64) -> CoefficientSeries {
    let n_max = psi.psi2.len() - 1;
    let scale = |v: &[C64]| -> Vec<C64> {
        (0..=n_max).map(|k| v.get(k).copied().unwrap_or_default() * (2.0 * PI * sqrt_factorial(k))).collect()
    };
    let (h1, h2) = (scale(&psi.psi1), scale(&psi.psi2));
    let outer = |a: &[C64], b: &[C64]| DMatrix::from_fn(n_max + 1, n_max + 1, |n, m| a[n].conj() * b[m]);
    let mut out = CoefficientSeries::zeros(n_max, psi.t, omega);
    *out.block_mut(Block::S11) = outer(&h1, &h1);
    *out.block_mut(Block::S12) = outer(&h1, &h2);
    *out.block_mut(Block::S21) = outer(&h2, &h1);
    *out.block_mut(Block::S22) = outer(&h2, &h2);
    *out.block_mut(Block::S4) = out.block(Block::S11) + out.block(Block::S22);
    out
}

pub fn separable_coefficients(c: &SeparableConstants, t: f64) -> CoefficientSeries {
    psi_coefficients(&separable_psi(c, t), c.params.cavity_omega)
}

/// Conserved weight of each excitation doublet,
/// `4π² (n! |Ψ2_n|² + (n-1)! |Ψ1_{n-1}|²)`.
pub fn doublet_weights(psi: &PsiPair) -> Vec<f64> {
    let f = |k: usize| 2.0 * PI * sqrt_factorial(k);
    (0..psi.psi2.len())
        .map(|n| {
            let upper = if n > 0 { (psi.psi1[n - 1] * f(n - 1)).norm_sqr() } else { 0.0 };
            (psi.psi2[n] * f(n)).norm_sqr() + upper
        })
        .collect()
}

type Blocks = [DMatrix<C64>; 6];

/// Writes the canonical time derivative of `s` into `out`.
///
/// With `X[r, c]` the coefficient of `conj(z)^r z^c / sqrt(r! c!)`:
/// `z X -> sqrt(c) X[r, c-1]`, `conj(z) X -> sqrt(r) X[r-1, c]`,
/// `∂X/∂z -> sqrt(c+1) X[r, c+1]`, `∂X/∂conj(z) -> sqrt(r+1) X[r+1, c]`.
fn canonical_rhs_into(s: &Blocks, p: &JcParameters, sq: &[f64], out: &mut Blocks) {
    let n = s[0].nrows();
    let h = C64::new(0.0, 0.5 * p.rabi);
    let d = C64::new(0.0, p.detuning);
    let [s0, s11, s12, s21, s22, _] = [0, 1, 2, 3, 4, 5].map(|i| s[i].as_slice());
    let at = |x: &[C64], r: usize, c: usize| x[r + c * n];
    let upper = |r: usize, c: usize| at(s11, r, c) - at(s0, r, c);
    let lower = |r: usize, c: usize| at(s22, r, c) - at(s0, r, c);
    let zero = C64::default();
    for c in 0..n {
        for r in 0..n {
            let left = c > 0;
            let up = r > 0;
            let right = c + 1 < n;
            let down = r + 1 < n;
            let z21 = if left { sq[c] * at(s21, r, c - 1) } else { zero };
            let zu = if left { sq[c] * upper(r, c - 1) } else { zero };
            let zc12 = if up { sq[r] * at(s12, r - 1, c) } else { zero };
            let zcu = if up { sq[r] * upper(r - 1, c) } else { zero };
            let dz12 = if right { sq[c + 1] * at(s12, r, c + 1) } else { zero };
            let dzl = if right { sq[c + 1] * lower(r, c + 1) } else { zero };
            let dzc21 = if down { sq[r + 1] * at(s21, r + 1, c) } else { zero };
            let dzcl = if down { sq[r + 1] * lower(r + 1, c) } else { zero };
            let k = r + c * n;
            out[Block::S0.index()].as_mut_slice()[k] = zero;
            out[Block::S11.index()].as_mut_slice()[k] = h * (dzc21 - dz12);
            out[Block::S12.index()].as_mut_slice()[k] = -d * s12[k] + h * (dzcl - zu);
            out[Block::S21.index()].as_mut_slice()[k] = d * s21[k] + h * (zcu - dzl);
            out[Block::S22.index()].as_mut_slice()[k] = h * (zc12 - z21);
            out[Block::S4.index()].as_mut_slice()[k] = h * (dzc21 - z21 - dz12 + zc12);
        }
    }
}

fn sqrt_table(n: usize) -> Vec<f64> {
    (0..=n + 1).map(|k| (k as f64).sqrt()).collect()
}

/// Time derivative of every block under the canonical evolution equations.
pub fn canonical_rhs(s: &CoefficientSeries, p: &JcParameters) -> [DMatrix<C64>; 6] {
    let n = s.n_max + 1;
    let mut out: Blocks = std::array::from_fn(|_| DMatrix::zeros(n, n));
    canonical_rhs_into(&s.blocks, p, &sqrt_table(n), &mut out);
    out
}

fn axpy_into(y: &Blocks, h: f64, k: &Blocks, out: &mut Blocks) {
    for i in 0..6 {
        for ((o, a), b) in out[i].as_mut_slice().iter_mut().zip(y[i].as_slice()).zip(k[i].as_slice()) {
            *o = a + h * b;
        }
    }
}

/// RK4 on the coefficient equations from `s0.t` to `t_end`.
///
/// The step is shrunk so that a whole number of steps lands on `t_end`. The
/// two highest bands are checked after every step.
pub fn integrate_canonical(
    s0: &CoefficientSeries,
    p: &JcParameters,
    t_end: f64,
    dt: f64,
) -> Result<CoefficientSeries, SolverError> {
    if !(dt > 0.0 && dt.is_finite()) || !t_end.is_finite() || t_end < s0.t {
        return Err(SolverError::InvalidInput(format!("step {dt}, end time {t_end}, start {}", s0.t)));
    }
    let leak = s0.top_band_mass();
    if leak > TRUNCATION_LEAK_TOL {
        return Err(SolverError::TruncationLeak { t: s0.t, mass: leak });
    }
    let steps = ((t_end - s0.t) / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { (t_end - s0.t) / steps as f64 };
    let n = s0.n_max + 1;
    let sq = sqrt_table(n);
    let fresh = || -> Blocks { std::array::from_fn(|_| DMatrix::zeros(n, n)) };
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (fresh(), fresh(), fresh(), fresh(), fresh());
    let mut y = s0.clone();
    let t0 = s0.t;
    for step in 0..steps {
        canonical_rhs_into(&y.blocks, p, &sq, &mut k1);
        axpy_into(&y.blocks, 0.5 * h, &k1, &mut tmp);
        canonical_rhs_into(&tmp, p, &sq, &mut k2);
        axpy_into(&y.blocks, 0.5 * h, &k2, &mut tmp);
        canonical_rhs_into(&tmp, p, &sq, &mut k3);
        axpy_into(&y.blocks, h, &k3, &mut tmp);
        canonical_rhs_into(&tmp, p, &sq, &mut k4);
        for i in 0..6 {
            let ks = [k1[i].as_slice(), k2[i].as_slice(), k3[i].as_slice(), k4[i].as_slice()];
            for (j, v) in y.blocks[i].as_mut_slice().iter_mut().enumerate() {
                *v += h / 6.0 * (ks[0][j] + 2.0 * ks[1][j] + 2.0 * ks[2][j] + ks[3][j]);
            }
        }
        y.t = t0 + (step + 1) as f64 * h;
        if !y.is_finite() {
            return Err(SolverError::NonFinite(y.t));
        }
        let leak = y.top_band_mass();
        if leak > TRUNCATION_LEAK_TOL {
            return Err(SolverError::TruncationLeak { t: y.t, mass: leak });
        }
    }
    y.t = t_end;
    Ok(y)
}

/// Integrates through each time in `times` (ascending, starting at or after `s0.t`).
pub fn integrate_canonical_on_grid(
    s0: &CoefficientSeries,
    p: &JcParameters,
    times: &[f64],
    dt: f64,
) -> Result<Vec<CoefficientSeries>, SolverError> {
    let mut out = Vec::with_capacity(times.len());
    let mut cur = s0.clone();
    for &t in times {
        cur = integrate_canonical(&cur, p, t, dt)?;
        out.push(cur.clone());
    }
    Ok(out)
}

/// Constants of the standard-rule solution, indexed by field power `m >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardConstants {
    pub params: JcParameters,
    pub cos: Vec<C64>,
    pub sin: Vec<C64>,
}

impl StandardConstants {
    /// A single field power `m` with the given cosine and sine constants.
    pub fn single_mode(params: JcParameters, n_max: usize, m: usize, cos: C64, sin: C64) -> Result<Self, SolverError> {
        if m == 0 || m > n_max {
            return Err(SolverError::InvalidInput(format!("field power {m} outside 1..={n_max}")));
        }
        let mut c = vec![C64::default(); n_max + 1];
        let mut s = vec![C64::default(); n_max + 1];
        c[m] = cos;
        s[m] = sin;
        Ok(Self { params, cos: c, sin: s })
    }
}

/// Constants whose time-zero coefficients reproduce the initial amplitudes:
/// `Φ1_m(0) = lower[m]` and `Φ2_{m-1}(0) = upper[m-1]` for `m >= 1`.
///
/// The zero-photon lower amplitude has no partner and is dropped. The sine
/// constant is set to zero where the frequency vanishes.
pub fn standard_constants(initial: &AmplitudeState, p: &JcParameters) -> StandardConstants {
    let n_max = initial.n_max();
    let mut cos = vec![C64::default(); n_max + 1];
    let mut sin = vec![C64::default(); n_max + 1];
    for m in 1..=n_max {
        let nu = standard_frequency(p, m);
        let a = initial.lower[m];
        cos[m] = a;
        if nu.norm() > 0.0 {
            sin[m] = (-I * p.rabi * initial.upper[m - 1] - I * p.detuning * a) / nu;
        }
    }
    StandardConstants { params: *p, cos, sin }
}

/// Frequency of field power `m`: `sqrt(Δ² - mΩ²)`, taken as `-i sqrt(mΩ² - Δ²)`
/// once the radicand turns negative.
pub fn standard_frequency(p: &JcParameters, m: usize) -> C64 {
    let r = p.detuning * p.detuning - m as f64 * p.rabi * p.rabi;
    if r >= 0.0 { C64::new(r.sqrt(), 0.0) } else { C64::new(0.0, -(-r).sqrt()) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardSolution {
    pub t: f64,
    /// Coefficients of `β^m`, `m = 0..=n_max`.
    pub phi1: Vec<C64>,
    /// Coefficients of `β^(m-1)`, stored at index `m - 1`.
    pub phi2: Vec<C64>,
    /// Pair blocks `conj(Φ_i) Φ_j` on the monomial basis, ordered 11, 12, 21, 22.
    pub pair_blocks: [DMatrix<C64>; 4],
    /// The blocks still need the factor `exp(β β+)`, which makes the
    /// distribution non-normalisable; it is never multiplied in.
    pub exp_weight_omitted: bool,
}

/// Closed-form standard-rule solution at time `t`.
///
/// It satisfies `dΦ1/dt = -iΔ/2 Φ1 - iΩ/2 β Φ2` and
/// `dΦ2/dt = iΔ/2 Φ2 + iΩ/2 ∂Φ1/∂β`.
pub fn standard_fpe_solution(c: &StandardConstants, t: f64) -> StandardSolution {
    let p = &c.params;
    let n_max = c.cos.len() - 1;
    let mut phi1 = vec![C64::default(); n_max + 1];
    let mut phi2 = vec![C64::default(); n_max + 1];
    for m in 1..=n_max {
        let nu = standard_frequency(p, m);
        let arg = 0.5 * nu * t;
        let (co, si) = (arg.cos(), arg.sin());
        let (a, b) = (c.cos[m], c.sin[m]);
        phi1[m] = a * co + b * si;
        phi2[m - 1] = I * ((nu * b + I * p.detuning * a) / p.rabi * co + (-nu * a + I * p.detuning * b) / p.rabi * si);
    }
    let outer = |a: &[C64], b: &[C64]| DMatrix::from_fn(n_max + 1, n_max + 1, |i, j| a[i].conj() * b[j]);
    let pair_blocks = [outer(&phi1, &phi1), outer(&phi1, &phi2), outer(&phi2, &phi1), outer(&phi2, &phi2)];
    StandardSolution { t, phi1, phi2, pair_blocks, exp_weight_omitted: true }
}

/// Right-hand side of the standard-rule field equations.
pub fn standard_rhs(p: &JcParameters, phi1: &[C64], phi2: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let n = phi1.len();
    let mut d1 = vec![C64::default(); n];
    let mut d2 = vec![C64::default(); n];
    for m in 0..n {
        let beta_phi2 = if m > 0 { phi2[m - 1] } else { C64::default() };
        d1[m] = -0.5 * I * p.detuning * phi1[m] - 0.5 * I * p.rabi * beta_phi2;
        let dphi1 = if m + 1 < n { phi1[m + 1] * (m + 1) as f64 } else { C64::default() };
        d2[m] = 0.5 * I * p.detuning * phi2[m] + 0.5 * I * p.rabi * dphi1;
    }
    (d1, d2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeGrowth {
    pub m: usize,
    pub frequency: C64,
    /// `m Ω² > Δ²`.
    pub divergent: bool,
    pub predicted_rate: f64,
    /// Least-squares slope of `ln|Φ1_m|` over the second half of the grid.
    pub fitted_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub modes: Vec<ModeGrowth>,
    /// Largest `|Φ|` coefficient seen on the grid.
    pub standard_sup: f64,
    /// First grid time at which some `|Φ|` coefficient exceeds `threshold`.
    pub first_exceed: Option<f64>,
    /// Largest normalised separable coefficient seen on the grid.
    pub canonical_sup: f64,
    /// Bound from the conserved doublet weights at the first grid time.
    pub canonical_bound: f64,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if den == 0.0 { 0.0 } else { num / den }
}

/// Growth of the standard-rule solution against the bounded separable canonical one.
pub fn divergence_report(
    standard: &StandardConstants,
    canonical: &SeparableConstants,
    times: &[f64],
    threshold: f64,
) -> Result<DivergenceReport, SolverError> {
    if times.len() < 4 {
        return Err(SolverError::InvalidInput("need at least four grid times".into()));
    }
    let p = &standard.params;
    let sols: Vec<StandardSolution> = times.iter().map(|&t| standard_fpe_solution(standard, t)).collect();
    let half = times.len() / 2;
    let mut modes = Vec::new();
    for m in 1..standard.cos.len() {
        let nu = standard_frequency(p, m);
        let divergent = (m as f64) * p.rabi * p.rabi > p.detuning * p.detuning;
        let mags: Vec<f64> = sols[half..].iter().map(|s| s.phi1[m].norm()).collect();
        let fitted = if mags.iter().all(|v| *v > 0.0) {
            slope(&times[half..], &mags.iter().map(|v| v.ln()).collect::<Vec<_>>())
        } else {
            0.0
        };
        modes.push(ModeGrowth { m, frequency: nu, divergent, predicted_rate: 0.5 * (-nu.im).max(0.0), fitted_rate: fitted });
    }
    let sup_of = |s: &StandardSolution| s.phi1.iter().chain(&s.phi2).map(|c| c.norm()).fold(0.0, f64::max);
    let standard_sup = sols.iter().map(sup_of).fold(0.0, f64::max);
    let first_exceed = sols.iter().find(|s| sup_of(s) > threshold).map(|s| s.t);
    let psis: Vec<PsiPair> = times.iter().map(|&t| separable_psi(canonical, t)).collect();
    let normalised = |psi: &PsiPair| -> f64 {
        let f = |k: usize| 2.0 * PI * sqrt_factorial(k);
        psi.psi2
            .iter()
            .enumerate()
            .map(|(k, c)| (c * f(k)).norm())
            .chain(psi.psi1.iter().enumerate().map(|(k, c)| (c * f(k)).norm()))
            .fold(0.0, f64::max)
    };
    let canonical_sup = psis.iter().map(normalised).fold(0.0, f64::max);
    let canonical_bound = doublet_weights(&psis[0]).iter().map(|w| w.sqrt()).fold(0.0, f64::max);
    Ok(DivergenceReport { modes, standard_sup, first_exceed, canonical_sup, canonical_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jc_reference::{evolve_amplitudes, AtomLevel, InitialState, ScenarioConfig};
    use crate::phase_space::{from_amplitudes, initial_coefficients, observables};

    fn params(d: f64) -> JcParameters {
        JcParameters { rabi: 1.0, detuning: d, cavity_omega: 2.5 }
    }

    fn coherent(d: f64, eta: C64, level: AtomLevel) -> ScenarioConfig {
        ScenarioConfig { params: params(d), initial: InitialState::Coherent { eta, level }, n_max: crate::jc_reference::coherent_cutoff(eta) }
    }

    #[test]
    fn coherent_constants_have_sine_ratio() {
        let cfg = coherent(0.5, C64::new(1.5, 0.3), AtomLevel::Lower);
        let init = cfg.initial_amplitudes().unwrap();
        let c = separable_constants(&init, &cfg.params);
        for n in 1..c.cos.len() {
            let ratio = -I * 0.5 / cfg.params.rabi_frequency(n);
            assert!((c.sin[n] - ratio * c.cos[n]).norm() < 1e-15);
        }
        assert!(consistency_residual(&c, &init) < 1e-15);
    }

    #[test]
    fn separable_matches_density_route() {
        for d in [0.0, 0.5] {
            for level in [AtomLevel::Lower, AtomLevel::Upper] {
                let cfg = coherent(d, C64::new(0.9, -0.6), level);
                let init = cfg.initial_amplitudes().unwrap();
                let c = separable_constants(&init, &cfg.params);
                for &t in &[0.0, 1.3, 7.7] {
                    let via_amp = from_amplitudes(&evolve_amplitudes(&init, &cfg.params, t), &cfg.params).unwrap();
                    let sep = separable_coefficients(&c, t);
                    assert!(sep.max_abs_diff(&via_amp) < 1e-13, "d={d} t={t}: {}", sep.max_abs_diff(&via_amp));
                }
            }
        }
    }

    #[test]
    fn separable_solution_solves_canonical_equations() {
        let cfg = coherent(0.5, C64::new(1.0, 0.4), AtomLevel::Lower);
        let c = separable_constants(&cfg.initial_amplitudes().unwrap(), &cfg.params);
        let t = 2.0;
        let h = 1e-6;
        let rhs = canonical_rhs(&separable_coefficients(&c, t), &cfg.params);
        let (up, down) = (separable_coefficients(&c, t + h), separable_coefficients(&c, t - h));
        for b in Block::ALL {
            let fd = (up.block(b) - down.block(b)) / C64::from(2.0 * h);
            let err = (&fd - &rhs[b.index()]).iter().map(|x| x.norm()).fold(0.0, f64::max);
            let scale = rhs[b.index()].iter().map(|x| x.norm()).fold(1e-30, f64::max);
            assert!(err <= 1e-6 * scale.max(1.0), "{}: {err}", b.name());
        }
    }

    #[test]
    fn canonical_rk4_tracks_separable() {
        let cfg = coherent(0.0, C64::new(1.0, 0.0), AtomLevel::Lower);
        let s0 = initial_coefficients(&cfg).unwrap();
        let c = separable_constants(&cfg.initial_amplitudes().unwrap(), &cfg.params);
        let s = integrate_canonical(&s0, &cfg.params, 3.0, 1e-2).unwrap();
        assert!(s.max_abs_diff(&separable_coefficients(&c, 3.0)) < 1e-6);
        assert!((observables(&s).total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vacuum_lower_level_is_stationary() {
        let cfg = ScenarioConfig { params: params(0.3), initial: InitialState::Fock { photons: 0, level: AtomLevel::Lower }, n_max: 4 };
        let s0 = initial_coefficients(&cfg).unwrap();
        let s = integrate_canonical(&s0, &cfg.params, 5.0, 1e-2).unwrap();
        assert!(s.max_abs_diff(&CoefficientSeries { t: 5.0, ..s0 }) < 1e-15);
    }

    #[test]
    fn leak_is_reported() {
        let cfg = ScenarioConfig { params: params(0.0), initial: InitialState::Fock { photons: 3, level: AtomLevel::Lower }, n_max: 3 };
        let s0 = initial_coefficients(&cfg).unwrap();
        assert!(matches!(integrate_canonical(&s0, &cfg.params, 1.0, 1e-2), Err(SolverError::TruncationLeak { .. })));
    }

    #[test]
    fn standard_solution_grows_as_cosh() {
        let p = JcParameters { rabi: 1.0, detuning: 0.0, cavity_omega: 1.0 };
        let c = StandardConstants::single_mode(p, 3, 1, C64::new(1.0, 0.0), C64::default()).unwrap();
        let s = standard_fpe_solution(&c, 10.0);
        assert!((s.phi1[1].norm() - 5f64.cosh()).abs() < 1e-9 * 5f64.cosh());
        assert!(s.exp_weight_omitted);
    }

    #[test]
    fn standard_solution_oscillates_when_detuned() {
        let p = JcParameters { rabi: 1.0, detuning: 2.0, cavity_omega: 1.0 };
        let c = StandardConstants::single_mode(p, 3, 1, C64::new(1.0, 0.0), C64::default()).unwrap();
        assert_eq!(standard_frequency(&p, 1), C64::new(3f64.sqrt(), 0.0));
        for k in 0..50 {
            assert!(standard_fpe_solution(&c, k as f64).phi1[1].norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn standard_solution_satisfies_its_equations() {
        let p = JcParameters { rabi: 0.8, detuning: 0.6, cavity_omega: 1.0 };
        let c = StandardConstants { params: p, cos: vec![C64::default(), C64::new(0.3, 0.1), C64::new(-0.2, 0.5), C64::new(0.1, 0.0)], sin: vec![C64::default(), C64::new(0.0, 0.2), C64::new(0.4, 0.0), C64::new(0.0, -0.3)] };
        let (t, h) = (1.7, 1e-5);
        let s = standard_fpe_solution(&c, t);
        let (a, b) = (standard_fpe_solution(&c, t + h), standard_fpe_solution(&c, t - h));
        let (d1, d2) = standard_rhs(&p, &s.phi1, &s.phi2);
        for m in 0..4 {
            assert!(((a.phi1[m] - b.phi1[m]) / (2.0 * h) - d1[m]).norm() < 1e-8);
            if m < 3 {
                assert!(((a.phi2[m] - b.phi2[m]) / (2.0 * h) - d2[m]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn standard_constants_reproduce_initial_amplitudes() {
        let p = JcParameters { rabi: 1.0, detuning: 0.4, cavity_omega: 1.0 };
        let cfg = ScenarioConfig { params: p, initial: InitialState::Coherent { eta: C64::new(0.7, 0.2), level: AtomLevel::Upper }, n_max: 12 };
        let init = cfg.initial_amplitudes().unwrap();
        let s = standard_fpe_solution(&standard_constants(&init, &p), 0.0);
        for m in 1..=12 {
            assert!((s.phi1[m] - init.lower[m]).norm() < 1e-15);
            assert!((s.phi2[m - 1] - init.upper[m - 1]).norm() < 1e-15);
        }
    }
}
