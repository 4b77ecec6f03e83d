//! Canonical Grassmann phase-space distribution in truncated series form.
//!
//! Each block is a polynomial in the rotating-frame field variable `z` and its
//! conjugate, stored as coefficients on the basis
//! `e_nm(z) = conj(z)^n z^m / sqrt(n! m!)`, `0 <= n, m <= n_max`.
//! The Gaussian factors of the distribution and its `1/(4π²)` prefactor are
//! folded into that basis, so diagonal sums are physical moments directly.
//!
//! Block names follow the fermion monomial they multiply:
//! `S0` (scalar), `S11` (`g1 g1+`), `S12` (`g1 g2+`), `S21` (`g2 g1+`),
//! `S22` (`g2 g2+`) and `S4` (`g1 g2 g2+ g1+`).

use std::f64::consts::PI;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fermion_fock::{canonical_kernel, DIM, STANDARD_LABELS};
use crate::grassmann::GeneratorSet;
use crate::jc_reference::{enlarged_index, pure_state_density, AmplitudeState, JcError, JcParameters, ScenarioConfig};
use crate::observables::Observables;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("density matrix dimension {0} is not 4 (n_max + 1)")]
    BadDimension(usize),
    #[error("density has weight {weight:e} on |{ket}><{bra}|, outside the modelled sectors")]
    UnsupportedSector { ket: usize, bra: usize, weight: f64 },
    #[error("malformed coefficient series: {0}")]
    Malformed(String),
    #[error("quadrature grid too coarse (residual {0:e})")]
    GridTooCoarse(f64),
    #[error("invalid quadrature grid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Reference(#[from] JcError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    S0,
    S11,
    S12,
    S21,
    S22,
    S4,
}

impl Block {
    pub const ALL: [Block; 6] = [Block::S0, Block::S11, Block::S12, Block::S21, Block::S22, Block::S4];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Block::S0 => "S0",
            Block::S11 => "S11",
            Block::S12 => "S12",
            Block::S21 => "S21",
            Block::S22 => "S22",
            Block::S4 => "S4",
        }
    }

    /// Fermion monomial multiplying the block.
    fn monomial(self) -> &'static [&'static str] {
        match self {
            Block::S0 => &[],
            Block::S11 => &["g1", "g1p"],
            Block::S12 => &["g1", "g2p"],
            Block::S21 => &["g2", "g1p"],
            Block::S22 => &["g2", "g2p"],
            Block::S4 => &["g1", "g2", "g2p", "g1p"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSeries {
    pub t: f64,
    /// Cavity frequency used for the rotating frame.
    pub omega: f64,
    pub n_max: usize,
    pub blocks: [DMatrix<C64>; 6],
}

impl CoefficientSeries {
    pub fn zeros(n_max: usize, t: f64, omega: f64) -> Self {
        Self { t, omega, n_max, blocks: std::array::from_fn(|_| DMatrix::zeros(n_max + 1, n_max + 1)) }
    }

    pub fn block(&self, b: Block) -> &DMatrix<C64> {
        &self.blocks[b.index()]
    }

    pub fn block_mut(&mut self, b: Block) -> &mut DMatrix<C64> {
        &mut self.blocks[b.index()]
    }

    /// Largest entrywise difference over all blocks.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).iter().map(|c| c.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Population held by the two highest photon numbers, summed over the
    /// diagonals of the population blocks.
    pub fn top_band_mass(&self) -> f64 {
        let lo = self.n_max.saturating_sub(1);
        [Block::S0, Block::S11, Block::S22, Block::S4]
            .iter()
            .map(|b| (lo..=self.n_max).map(|n| self.block(*b)[(n, n)].norm()).sum::<f64>())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }

    pub fn to_json(&self) -> String {
        let doc = SeriesDocument {
            t: self.t,
            omega: self.omega,
            n_max: self.n_max,
            blocks: BlockDocument {
                s0: flatten(self.block(Block::S0)),
                s11: flatten(self.block(Block::S11)),
                s12: flatten(self.block(Block::S12)),
                s21: flatten(self.block(Block::S21)),
                s22: flatten(self.block(Block::S22)),
                s4: flatten(self.block(Block::S4)),
            },
        };
        serde_json::to_string(&doc).expect("series serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, PhaseError> {
        let doc: SeriesDocument = serde_json::from_str(text).map_err(|e| PhaseError::Malformed(e.to_string()))?;
        let n = doc.n_max + 1;
        let b = &doc.blocks;
        let mut out = Self::zeros(doc.n_max, doc.t, doc.omega);
        for (blk, data) in Block::ALL.iter().zip([&b.s0, &b.s11, &b.s12, &b.s21, &b.s22, &b.s4]) {
            if data.len() != n * n {
                return Err(PhaseError::Malformed(format!("block {} has {} entries", blk.name(), data.len())));
            }
            *out.block_mut(*blk) = DMatrix::from_fn(n, n, |i, j| C64::new(data[i * n + j][0], data[i * n + j][1]));
        }
        Ok(out)
    }
}

fn flatten(m: &DMatrix<C64>) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct SeriesDocument {
    t: f64,
    omega: f64,
    n_max: usize,
    blocks: BlockDocument,
}

#[derive(Serialize, Deserialize)]
struct BlockDocument {
    #[serde(rename = "S0")]
    s0: Vec<[f64; 2]>,
    #[serde(rename = "S11")]
    s11: Vec<[f64; 2]>,
    #[serde(rename = "S12")]
    s12: Vec<[f64; 2]>,
    #[serde(rename = "S21")]
    s21: Vec<[f64; 2]>,
    #[serde(rename = "S22")]
    s22: Vec<[f64; 2]>,
    #[serde(rename = "S4")]
    s4: Vec<[f64; 2]>,
}

/// Block weights of the phase-space image of each fermion matrix unit `|a><b|`,
/// or `None` when the image leaves the even one-, zero- and two-atom form.
fn kernel_table() -> &'static [[Option<[f64; 6]>; DIM]; DIM] {
    static TABLE: OnceLock<[[Option<[f64; 6]>; DIM]; DIM]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let gens = GeneratorSet::two_mode_doubled();
        std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                let k = canonical_kernel(&gens, &STANDARD_LABELS, a, b).expect("static labels");
                let mut w = [0.0; 6];
                let mut covered = 0usize;
                for blk in Block::ALL {
                    let c = k.coefficient(blk.monomial()).expect("static labels");
                    debug_assert!(c.im == 0.0);
                    w[blk.index()] = c.re;
                    if c != C64::default() {
                        covered += 1;
                    }
                }
                (covered == k.len()).then_some(w)
            })
        })
    })
}

/// Maps an enlarged-space density matrix at time `t` to rotating-frame coefficients.
///
/// Coherences between different atom numbers, and between the empty and
/// doubly occupied sectors, are rejected.
pub fn from_density(rho: &DMatrix<C64>, t: f64, omega: f64) -> Result<CoefficientSeries, PhaseError> {
    let dim = rho.nrows();
    if dim % DIM != 0 || dim < 2 * DIM || rho.ncols() != dim {
        return Err(PhaseError::BadDimension(dim));
    }
    let n_max = dim / DIM - 1;
    let table = kernel_table();
    let mut out = CoefficientSeries::zeros(n_max, t, omega);
    let rot: Vec<C64> = (0..=n_max).map(|n| (I * n as f64 * omega * t).exp()).collect();
    for a in 0..DIM {
        for b in 0..DIM {
            let sub = DMatrix::from_fn(n_max + 1, n_max + 1, |n, m| {
                rho[(enlarged_index(a, n, n_max), enlarged_index(b, m, n_max))]
            });
            let weight = sub.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if weight == 0.0 {
                continue;
            }
            let allowed = a == b || (a == 1 && b == 2) || (a == 2 && b == 1);
            let w = match table[a][b] {
                Some(w) if allowed => w,
                _ if weight <= 1e-12 => continue,
                _ => return Err(PhaseError::UnsupportedSector { ket: a, bra: b, weight }),
            };
            for blk in Block::ALL {
                let c = w[blk.index()];
                if c == 0.0 {
                    continue;
                }
                let frame = match blk {
                    Block::S12 => (I * omega * t).exp(),
                    Block::S21 => (-I * omega * t).exp(),
                    _ => C64::new(1.0, 0.0),
                };
                let target = out.block_mut(blk);
                for n in 0..=n_max {
                    for m in 0..=n_max {
                        target[(n, m)] += c * frame * sub[(n, m)] * rot[n] * rot[m].conj();
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Coefficients of a pure one-atom state given by slowly varying amplitudes.
pub fn from_amplitudes(s: &AmplitudeState, p: &JcParameters) -> Result<CoefficientSeries, PhaseError> {
    from_density(&pure_state_density(s, p), s.t, p.cavity_omega)
}

pub fn initial_coefficients(cfg: &ScenarioConfig) -> Result<CoefficientSeries, PhaseError> {
    cfg.params.validate()?;
    from_amplitudes(&cfg.initial_amplitudes()?, &cfg.params)
}

/// Closed form for the field in a coherent state with the atom in the lower
/// level: `S22 = S4 = exp(-|η|²) exp(conj(z) η) exp(z conj(η))` expanded on the basis.
pub fn coherent_closed_form(eta: C64, n_max: usize, omega: f64) -> CoefficientSeries {
    let mut c = vec![C64::new((-0.5 * eta.norm_sqr()).exp(), 0.0); n_max + 1];
    for n in 1..=n_max {
        c[n] = c[n - 1] * eta / (n as f64).sqrt();
    }
    let mut out = CoefficientSeries::zeros(n_max, 0.0, omega);
    let block = DMatrix::from_fn(n_max + 1, n_max + 1, |n, m| c[n] * c[m].conj());
    *out.block_mut(Block::S22) = block.clone();
    *out.block_mut(Block::S4) = block;
    out
}

fn diag_sum(m: &DMatrix<C64>) -> C64 {
    m.diagonal().iter().sum()
}

/// Observables from diagonal sums of the blocks.
pub fn observables(s: &CoefficientSeries) -> Observables {
    let s0 = diag_sum(s.block(Block::S0));
    let s11 = diag_sum(s.block(Block::S11));
    let s22 = diag_sum(s.block(Block::S22));
    let total = diag_sum(s.block(Block::S4));
    let nbar: C64 = s.block(Block::S4).diagonal().iter().enumerate().map(|(n, c)| c * n as f64).sum();
    let p12 = s0.re;
    let p1 = (s22 - s0).re;
    let p2 = (s11 - s0).re;
    let phase = (-I * s.omega * s.t).exp();
    Observables {
        p0: total.re - p1 - p2 - p12,
        p1,
        p2,
        p12,
        rho12: -phase * diag_sum(s.block(Block::S12)),
        rho21: -phase.conj() * diag_sum(s.block(Block::S21)),
        nbar: nbar.re,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureReport {
    /// `max |S12 - S21†|` and the self-adjointness defect of the diagonal blocks.
    pub hermiticity: f64,
    /// `|Σ S4_nn - 1|`.
    pub normalization: f64,
    pub s0_max: f64,
    /// Second singular value relative to the first, worst over the four pair blocks.
    pub rank_one_residual: f64,
    pub top_band: f64,
}

fn max_entry(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn rank_one_residual(m: &DMatrix<C64>) -> f64 {
    let sv = m.clone().singular_values();
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    if v.is_empty() || v[0] == 0.0 {
        0.0
    } else {
        v.get(1).copied().unwrap_or(0.0) / v[0]
    }
}

pub fn check_structure(s: &CoefficientSeries) -> StructureReport {
    let mut herm = max_entry(&(s.block(Block::S12) - s.block(Block::S21).adjoint()));
    for b in [Block::S0, Block::S11, Block::S22, Block::S4] {
        herm = herm.max(max_entry(&(s.block(b) - s.block(b).adjoint())));
    }
    let rank = [Block::S11, Block::S12, Block::S21, Block::S22]
        .iter()
        .map(|b| rank_one_residual(s.block(*b)))
        .fold(0.0, f64::max);
    StructureReport {
        hermiticity: herm,
        normalization: (diag_sum(s.block(Block::S4)) - 1.0).norm(),
        s0_max: max_entry(s.block(Block::S0)),
        rank_one_residual: rank,
        top_band: s.top_band_mass(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    P0,
    P1,
    P2,
    P12,
    Rho12,
    Rho21,
    Nbar,
    Norm,
}

impl Moment {
    pub const ALL: [Moment; 8] =
        [Moment::P0, Moment::P1, Moment::P2, Moment::P12, Moment::Rho12, Moment::Rho21, Moment::Nbar, Moment::Norm];

    pub fn closed_form(self, s: &CoefficientSeries) -> C64 {
        let o = observables(s);
        match self {
            Moment::P0 => o.p0.into(),
            Moment::P1 => o.p1.into(),
            Moment::P2 => o.p2.into(),
            Moment::P12 => o.p12.into(),
            Moment::Rho12 => o.rho12,
            Moment::Rho21 => o.rho21,
            Moment::Nbar => o.nbar.into(),
            Moment::Norm => diag_sum(s.block(Block::S4)),
        }
    }
}

/// Polar product grid on each complex plane: Gauss-Legendre in the radius on
/// `[0, radius]` and the trapezoidal rule in the angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    pub radius: f64,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Largest accepted difference against the same grid with half the radial nodes.
    pub tolerance: f64,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self { radius: 8.0, radial_nodes: 64, angular_nodes: 64, tolerance: 1e-6 }
    }
}

/// Nodes and area weights of one complex plane.
struct PlaneRule {
    nodes: Vec<C64>,
    weights: Vec<f64>,
}

impl PlaneRule {
    fn new(radius: f64, radial: usize, angular: usize) -> Result<Self, PhaseError> {
        let gl = GaussLegendre::new(radial).map_err(|e| PhaseError::BadGrid(e.to_string()))?;
        let mut nodes = Vec::with_capacity(radial * angular);
        let mut weights = Vec::with_capacity(radial * angular);
        let dtheta = 2.0 * PI / angular as f64;
        for &(x, w) in gl.as_node_weight_pairs() {
            let r = 0.5 * radius * (x + 1.0);
            let wr = 0.5 * radius * w * r;
            for k in 0..angular {
                nodes.push(C64::from_polar(r, k as f64 * dtheta));
                weights.push(wr * dtheta);
            }
        }
        Ok(Self { nodes, weights })
    }
}

/// `∫ d²z exp(-|z|²) conj(z)^n z^m` on one plane of the grid.
pub fn gaussian_moment(n: u32, m: u32, grid: &QuadratureGrid) -> Result<C64, PhaseError> {
    let rule = PlaneRule::new(grid.radius, grid.radial_nodes, grid.angular_nodes)?;
    Ok(rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(z, w)| *w * (-z.norm_sqr()).exp() * z.conj().powu(n) * z.powu(m))
        .sum())
}

fn series_value(block: &DMatrix<C64>, u: &[C64], v: &[C64]) -> C64 {
    let mut acc = C64::default();
    for n in 0..u.len() {
        let mut row = C64::default();
        for m in 0..v.len() {
            row += block[(n, m)] * v[m];
        }
        acc += u[n] * row;
    }
    acc
}

fn integrate_on(s: &CoefficientSeries, which: Moment, radius: f64, radial: usize, angular: usize) -> Result<C64, PhaseError> {
    let rule = PlaneRule::new(radius, radial, angular)?;
    let n_max = s.n_max;
    let prefactor = 1.0 / (4.0 * PI * PI);
    let combo: DMatrix<C64> = match which {
        Moment::P0 => s.block(Block::S4) - s.block(Block::S22) - s.block(Block::S11) + s.block(Block::S0),
        Moment::P1 => s.block(Block::S22) - s.block(Block::S0),
        Moment::P2 => s.block(Block::S11) - s.block(Block::S0),
        Moment::P12 => s.block(Block::S0).clone(),
        Moment::Rho12 => s.block(Block::S12) * (-(-I * s.omega * s.t).exp()),
        Moment::Rho21 => s.block(Block::S21) * (-(I * s.omega * s.t).exp()),
        Moment::Nbar | Moment::Norm => s.block(Block::S4).clone(),
    };
    // distribution at each node of the field plane, Gaussian included
    let dist: Vec<C64> = rule
        .nodes
        .par_iter()
        .map(|z| {
            let mut u = vec![C64::new(1.0, 0.0); n_max + 1];
            let mut v = vec![C64::new(1.0, 0.0); n_max + 1];
            for k in 1..=n_max {
                let f = (k as f64).sqrt();
                u[k] = u[k - 1] * z.conj() / f;
                v[k] = v[k - 1] * z / f;
            }
            prefactor * series_value(&combo, &u, &v) * (-z.norm_sqr()).exp()
        })
        .collect();
    let gauss: Vec<f64> = rule.nodes.iter().map(|d| (-d.norm_sqr()).exp()).collect();
    let nbar = which == Moment::Nbar;
    let total: C64 = (0..rule.nodes.len())
        .into_par_iter()
        .map(|i| {
            let z = rule.nodes[i];
            let mut acc = C64::default();
            for j in 0..rule.nodes.len() {
                let d = rule.nodes[j];
                let f = if nbar { (z + d) * (z.conj() - d.conj()) } else { C64::new(1.0, 0.0) };
                acc += rule.weights[j] * gauss[j] * f;
            }
            rule.weights[i] * dist[i] * acc
        })
        .sum();
    // the pair of field planes replaces the original pair with Jacobian 4
    Ok(4.0 * total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureValue {
    pub value: C64,
    /// Difference against the same grid with half the radial nodes.
    pub residual: f64,
}

/// Direct four-dimensional quadrature of a moment of the distribution over
/// the sum and difference field variables.
pub fn quadrature_oracle(s: &CoefficientSeries, which: Moment, grid: &QuadratureGrid) -> Result<QuadratureValue, PhaseError> {
    if !(grid.radius > 0.0) || grid.radial_nodes < 4 {
        return Err(PhaseError::BadGrid(format!("{grid:?}")));
    }
    if grid.angular_nodes <= s.n_max + 2 {
        return Err(PhaseError::GridTooCoarse(f64::INFINITY));
    }
    let value = integrate_on(s, which, grid.radius, grid.radial_nodes, grid.angular_nodes)?;
    let coarse = integrate_on(s, which, grid.radius, grid.radial_nodes / 2, grid.angular_nodes)?;
    let residual = (value - coarse).norm();
    if residual > grid.tolerance {
        return Err(PhaseError::GridTooCoarse(residual));
    }
    Ok(QuadratureValue { value, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jc_reference::{AtomLevel, InitialState};

    fn params() -> JcParameters {
        JcParameters { rabi: 1.0, detuning: 0.0, cavity_omega: 2.0 }
    }

    #[test]
    fn coherent_state_matches_closed_form() {
        let eta = C64::new(1.1, -0.7);
        let n_max = crate::jc_reference::coherent_cutoff(eta);
        let cfg = ScenarioConfig { params: params(), initial: InitialState::Coherent { eta, level: AtomLevel::Lower }, n_max };
        let s = initial_coefficients(&cfg).unwrap();
        assert!(s.max_abs_diff(&coherent_closed_form(eta, n_max, 2.0)) < 1e-14);
        // orientation: row index pairs with eta, column index with its conjugate
        assert!((s.block(Block::S22)[(1, 0)] - eta * (-eta.norm_sqr()).exp()).norm() < 1e-14);
        let r = check_structure(&s);
        assert!(r.rank_one_residual < 1e-12);
        assert!(r.normalization < 1e-12);
    }

    #[test]
    fn vacuum_lower_level() {
        let cfg = ScenarioConfig { params: params(), initial: InitialState::Fock { photons: 0, level: AtomLevel::Lower }, n_max: 3 };
        let s = initial_coefficients(&cfg).unwrap();
        let mut expect = CoefficientSeries::zeros(3, 0.0, 2.0);
        expect.block_mut(Block::S22)[(0, 0)] = C64::new(1.0, 0.0);
        expect.block_mut(Block::S4)[(0, 0)] = C64::new(1.0, 0.0);
        assert_eq!(s, expect);
    }

    #[test]
    fn mixed_sectors_reproduce_direct_traces() {
        let n_max = 3;
        let dim = DIM * (n_max + 1);
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        let put = |r: &mut DMatrix<C64>, a, n, b, m, c: C64| {
            r[(enlarged_index(a, n, n_max), enlarged_index(b, m, n_max))] += c;
        };
        put(&mut rho, 0, 1, 0, 1, C64::new(0.1, 0.0));
        put(&mut rho, 3, 2, 3, 2, C64::new(0.2, 0.0));
        put(&mut rho, 1, 2, 1, 2, C64::new(0.3, 0.0));
        put(&mut rho, 2, 1, 2, 1, C64::new(0.4, 0.0));
        put(&mut rho, 2, 1, 1, 2, C64::new(0.1, 0.2));
        put(&mut rho, 1, 2, 2, 1, C64::new(0.1, -0.2));
        let t = 0.7;
        let s = from_density(&rho, t, 1.5).unwrap();
        let direct = crate::jc_reference::density_observables(&rho, n_max);
        assert!(observables(&s).max_abs_diff(&direct) < 1e-14);
    }

    #[test]
    fn unsupported_coherence_is_rejected() {
        let n_max = 2;
        let dim = DIM * (n_max + 1);
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        rho[(enlarged_index(0, 0, n_max), enlarged_index(0, 0, n_max))] = C64::new(0.5, 0.0);
        rho[(enlarged_index(3, 0, n_max), enlarged_index(3, 0, n_max))] = C64::new(0.5, 0.0);
        rho[(enlarged_index(0, 0, n_max), enlarged_index(3, 0, n_max))] = C64::new(0.5, 0.0);
        rho[(enlarged_index(3, 0, n_max), enlarged_index(0, 0, n_max))] = C64::new(0.5, 0.0);
        assert!(matches!(from_density(&rho, 0.0, 1.0), Err(PhaseError::UnsupportedSector { ket: 0, bra: 3, .. })));
    }

    #[test]
    fn json_round_trip() {
        let s = coherent_closed_form(C64::new(0.3, 0.2), 4, 1.0);
        let text = s.to_json();
        assert!(text.starts_with("{\"t\":0.0,\"omega\":1.0,\"n_max\":4,\"blocks\":{\"S0\":"));
        assert_eq!(CoefficientSeries::from_json(&text).unwrap(), s);
        assert!(CoefficientSeries::from_json("{\"t\":0}").is_err());
    }

    #[test]
    fn gaussian_moments() {
        let grid = QuadratureGrid::default();
        for n in 0..=6u32 {
            for m in 0..=6u32 {
                let v = gaussian_moment(n, m, &grid).unwrap();
                let expect = if n == m { PI * (1..=n).map(f64::from).product::<f64>() } else { 0.0 };
                assert!((v - expect).norm() < 1e-10 * expect.max(1.0), "{n} {m} {v}");
            }
        }
    }

    #[test]
    fn coarse_angles_are_rejected() {
        let s = coherent_closed_form(C64::new(0.3, 0.2), 10, 1.0);
        let grid = QuadratureGrid { angular_nodes: 8, ..Default::default() };
        assert!(matches!(quadrature_oracle(&s, Moment::Norm, &grid), Err(PhaseError::GridTooCoarse(_))));
    }

    #[test]
    fn quadrature_normalisation() {
        let s = coherent_closed_form(C64::new(0.8, 0.1), 10, 1.0);
        let grid = QuadratureGrid::default();
        let q = quadrature_oracle(&s, Moment::Norm, &grid).unwrap();
        assert!((q.value - 1.0).norm() < 1e-8);
        let nb = quadrature_oracle(&s, Moment::Nbar, &grid).unwrap();
        assert!((nb.value - 0.65).norm() < 1e-8, "{}", nb.value);
    }
}
