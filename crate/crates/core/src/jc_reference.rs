//! Reference Jaynes-Cummings dynamics: closed-form amplitudes, a fixed-step
//! integrator for the amplitude equations, and exact density-matrix evolution
//! on the atom-mode space enlarged to two fermion modes.
//!
//! Units have ħ = 1. The lower level sits at `-ω0/2`, the upper at `+ω0/2`,
//! and the detuning is `Δ = ω0 - ω`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fermion_fock::{atomic_operators, PhysicalOperator, DIM};
use crate::observables::Observables;

/// Largest supported photon cutoff; `n!` must stay finite in double precision.
pub const MAX_PHOTONS: usize = 150;

/// Normalisation tolerance for initial states.
pub const NORM_TOL: f64 = 1e-12;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JcError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("initial state norm deviates from one by {0:e}")]
    NotNormalized(f64),
    #[error("photon cutoff {n_max} too small: {reason}")]
    CutoffTooSmall { n_max: usize, reason: String },
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("density matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace drifted by {0:e}")]
    TraceDrift(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JcParameters {
    /// Vacuum Rabi frequency `Ω`.
    pub rabi: f64,
    /// `ω0 - ω`.
    pub detuning: f64,
    /// Cavity frequency `ω`.
    pub cavity_omega: f64,
}

impl JcParameters {
    pub fn atom_omega(&self) -> f64 {
        self.cavity_omega + self.detuning
    }

    /// Rabi frequency of the doublet with `n` excitations, `sqrt(Δ² + nΩ²)`.
    pub fn rabi_frequency(&self, n: usize) -> f64 {
        (self.detuning * self.detuning + n as f64 * self.rabi * self.rabi).sqrt()
    }

    pub fn validate(&self) -> Result<(), JcError> {
        if !(self.rabi.is_finite() && self.rabi > 0.0) {
            return Err(JcError::InvalidParameter(format!("rabi frequency must be positive, got {}", self.rabi)));
        }
        if !self.detuning.is_finite() {
            return Err(JcError::InvalidParameter("detuning must be finite".into()));
        }
        if !self.cavity_omega.is_finite() {
            return Err(JcError::InvalidParameter("cavity frequency must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomLevel {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    Fock { photons: usize, level: AtomLevel },
    Coherent { eta: C64, level: AtomLevel },
    /// Amplitudes indexed by photon number.
    Custom { lower: Vec<C64>, upper: Vec<C64> },
}

/// Photon cutoff that keeps the coherent-state tail negligible.
pub fn coherent_cutoff(eta: C64) -> usize {
    let a = eta.norm();
    (a * a + 8.0 * a + 10.0).ceil() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: JcParameters,
    pub initial: InitialState,
    pub n_max: usize,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), JcError> {
        self.params.validate()?;
        self.initial_amplitudes().map(|_| ())
    }

    pub fn initial_amplitudes(&self) -> Result<AmplitudeState, JcError> {
        let n_max = self.n_max;
        if n_max == 0 || n_max > MAX_PHOTONS {
            return Err(JcError::InvalidParameter(format!(
                "photon cutoff must lie in 1..={MAX_PHOTONS}, got {n_max}"
            )));
        }
        let mut s = AmplitudeState::zeros(n_max, 0.0);
        match &self.initial {
            InitialState::Fock { photons, level } => {
                let slot = match level {
                    AtomLevel::Lower if *photons <= n_max => &mut s.lower[*photons],
                    AtomLevel::Upper if *photons < n_max => &mut s.upper[*photons],
                    _ => {
                        return Err(JcError::CutoffTooSmall {
                            n_max,
                            reason: format!("Fock state with {photons} photons does not fit"),
                        })
                    }
                };
                *slot = C64::new(1.0, 0.0);
            }
            InitialState::Coherent { eta, level } => {
                if !(eta.re.is_finite() && eta.im.is_finite()) {
                    return Err(JcError::InvalidParameter("coherent amplitude must be finite".into()));
                }
                let target = match level {
                    AtomLevel::Lower => &mut s.lower,
                    AtomLevel::Upper => &mut s.upper,
                };
                let mut c = C64::new((-0.5 * eta.norm_sqr()).exp(), 0.0);
                for (n, slot) in target.iter_mut().enumerate() {
                    if n > 0 {
                        c = c * eta / (n as f64).sqrt();
                    }
                    *slot = c;
                }
            }
            InitialState::Custom { lower, upper } => {
                if lower.len() > n_max + 1 || upper.len() > n_max {
                    return Err(JcError::CutoffTooSmall {
                        n_max,
                        reason: "custom amplitudes exceed the cutoff".into(),
                    });
                }
                if lower.iter().chain(upper).any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                    return Err(JcError::InvalidParameter("custom amplitudes must be finite".into()));
                }
                s.lower[..lower.len()].copy_from_slice(lower);
                s.upper[..upper.len()].copy_from_slice(upper);
            }
        }
        let dev = (s.norm() - 1.0).abs();
        if dev > NORM_TOL {
            return Err(match self.initial {
                InitialState::Coherent { .. } => JcError::CutoffTooSmall {
                    n_max,
                    reason: format!("coherent tail mass {dev:e} exceeds {NORM_TOL:e}"),
                },
                _ => JcError::NotNormalized(dev),
            });
        }
        Ok(s)
    }
}

/// Slowly varying amplitudes of the one-atom states.
///
/// `lower[n]` multiplies `|lower, n photons>` and `upper[k]` multiplies
/// `|upper, k photons>`. The doublet with `n` excitations pairs `lower[n]`
/// with `upper[n - 1]`; `lower[0]` is uncoupled.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeState {
    pub t: f64,
    pub lower: Vec<C64>,
    pub upper: Vec<C64>,
}

impl AmplitudeState {
    pub fn zeros(n_max: usize, t: f64) -> Self {
        Self { t, lower: vec![C64::default(); n_max + 1], upper: vec![C64::default(); n_max] }
    }

    pub fn n_max(&self) -> usize {
        self.upper.len()
    }

    pub fn norm(&self) -> f64 {
        self.lower.iter().chain(&self.upper).map(|c| c.norm_sqr()).sum()
    }

    /// Probability carried by the two highest photon numbers of either level.
    pub fn top_band_mass(&self) -> f64 {
        let tail = |v: &[C64]| v.iter().rev().take(2).map(|c| c.norm_sqr()).sum::<f64>();
        tail(&self.lower) + tail(&self.upper)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.lower
            .iter()
            .zip(&other.lower)
            .chain(self.upper.iter().zip(&other.upper))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn is_finite(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// `sin(w t / 2) / w`, continuous through `w = 0`.
fn half_sinc(w: f64, t: f64) -> f64 {
    if w * t.abs() < 1e-8 {
        0.5 * t
    } else {
        (0.5 * w * t).sin() / w
    }
}

/// Exact solution of the doublet equations from `initial` (taken at time zero) to `t`.
pub fn evolve_amplitudes(initial: &AmplitudeState, p: &JcParameters, t: f64) -> AmplitudeState {
    let n_max = initial.n_max();
    let mut out = AmplitudeState::zeros(n_max, t);
    let d = p.detuning;
    let down = (-0.5 * I * d * t).exp();
    let up = (0.5 * I * d * t).exp();
    for n in 0..=n_max {
        let w = p.rabi_frequency(n);
        let c = (0.5 * w * t).cos();
        let s = half_sinc(w, t);
        let g = p.rabi * (n as f64).sqrt();
        let l0 = initial.lower[n];
        let u0 = if n > 0 { initial.upper[n - 1] } else { C64::default() };
        out.lower[n] = down * (c * l0 + I * s * (d * l0 - g * u0));
        if n > 0 {
            out.upper[n - 1] = up * (c * u0 - I * s * (g * l0 + d * u0));
        }
    }
    out
}

pub fn closed_form_amplitudes(cfg: &ScenarioConfig, t: f64) -> Result<AmplitudeState, JcError> {
    cfg.params.validate()?;
    Ok(evolve_amplitudes(&cfg.initial_amplitudes()?, &cfg.params, t))
}

fn amplitude_rhs(p: &JcParameters, t: f64, s: &AmplitudeState) -> AmplitudeState {
    let mut d = AmplitudeState::zeros(s.n_max(), t);
    let fwd = (-I * p.detuning * t).exp();
    for n in 1..=s.n_max() {
        let g = 0.5 * p.rabi * (n as f64).sqrt();
        d.lower[n] = -I * g * fwd * s.upper[n - 1];
        d.upper[n - 1] = -I * g * fwd.conj() * s.lower[n];
    }
    d
}

fn axpy(base: &AmplitudeState, h: f64, k: &AmplitudeState) -> AmplitudeState {
    AmplitudeState {
        t: base.t,
        lower: base.lower.iter().zip(&k.lower).map(|(a, b)| a + h * b).collect(),
        upper: base.upper.iter().zip(&k.upper).map(|(a, b)| a + h * b).collect(),
    }
}

/// Classical RK4 on the interaction-picture amplitude equations.
///
/// The step is shrunk so that a whole number of steps reaches `t_end`.
pub fn integrate_amplitudes(
    initial: &AmplitudeState,
    p: &JcParameters,
    t_end: f64,
    dt: f64,
) -> Result<AmplitudeState, JcError> {
    if !(dt > 0.0 && dt.is_finite()) || !t_end.is_finite() || t_end < initial.t {
        return Err(JcError::InvalidParameter(format!("bad step {dt} or end time {t_end}")));
    }
    let steps = ((t_end - initial.t) / dt).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { (t_end - initial.t) / steps as f64 };
    let mut y = initial.clone();
    let t0 = initial.t;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = amplitude_rhs(p, t, &y);
        let k2 = amplitude_rhs(p, t + 0.5 * h, &axpy(&y, 0.5 * h, &k1));
        let k3 = amplitude_rhs(p, t + 0.5 * h, &axpy(&y, 0.5 * h, &k2));
        let k4 = amplitude_rhs(p, t + h, &axpy(&y, h, &k3));
        for (i, v) in y.lower.iter_mut().enumerate() {
            *v += h / 6.0 * (k1.lower[i] + 2.0 * k2.lower[i] + 2.0 * k3.lower[i] + k4.lower[i]);
        }
        for (i, v) in y.upper.iter_mut().enumerate() {
            *v += h / 6.0 * (k1.upper[i] + 2.0 * k2.upper[i] + 2.0 * k3.upper[i] + k4.upper[i]);
        }
        y.t = t + h;
        if !y.is_finite() {
            return Err(JcError::NonFinite(y.t));
        }
    }
    y.t = t_end;
    Ok(y)
}

pub fn amplitude_observables(s: &AmplitudeState, p: &JcParameters) -> Observables {
    let p1: f64 = s.lower.iter().map(|c| c.norm_sqr()).sum();
    let p2: f64 = s.upper.iter().map(|c| c.norm_sqr()).sum();
    let nbar = s
        .lower
        .iter()
        .enumerate()
        .chain(s.upper.iter().enumerate())
        .map(|(n, c)| n as f64 * c.norm_sqr())
        .sum();
    let coh: C64 = s.upper.iter().zip(&s.lower).map(|(u, l)| u * l.conj()).sum();
    let rho12 = (-I * p.atom_omega() * s.t).exp() * coh;
    Observables { p0: 0.0, p1, p2, p12: 0.0, rho12, rho21: rho12.conj(), nbar }
}

/// Index of `|fermion basis f> ⊗ |n photons>` in the enlarged space.
pub fn enlarged_index(f: usize, n: usize, n_max: usize) -> usize {
    f * (n_max + 1) + n
}

fn kron_fermion(op: &PhysicalOperator, boson: &DMatrix<C64>) -> DMatrix<C64> {
    let b = boson.nrows();
    let mut out = DMatrix::zeros(DIM * b, DIM * b);
    for i in 0..DIM {
        for j in 0..DIM {
            let c = op[(i, j)];
            if c == C64::default() {
                continue;
            }
            for r in 0..b {
                for s in 0..b {
                    out[(i * b + r, j * b + s)] = c * boson[(r, s)];
                }
            }
        }
    }
    out
}

/// Fermion operator acting on the enlarged space as `op ⊗ 1`.
pub fn lift_fermion(op: &PhysicalOperator, n_max: usize) -> DMatrix<C64> {
    kron_fermion(op, &DMatrix::identity(n_max + 1, n_max + 1))
}

pub fn photon_number(n_max: usize) -> DMatrix<C64> {
    let boson = DMatrix::from_fn(n_max + 1, n_max + 1, |r, s| {
        if r == s { C64::new(r as f64, 0.0) } else { C64::default() }
    });
    kron_fermion(&PhysicalOperator::identity(), &boson)
}

fn annihilation(n_max: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n_max + 1, n_max + 1, |r, s| {
        if s == r + 1 { C64::new((s as f64).sqrt(), 0.0) } else { C64::default() }
    })
}

/// Hamiltonian on the enlarged space of dimension `4 (n_max + 1)`.
pub fn enlarged_hamiltonian(p: &JcParameters, n_max: usize) -> DMatrix<C64> {
    let ops = atomic_operators();
    let n1 = ops.p1 + ops.p12;
    let n2 = ops.p2 + ops.p12;
    let a = annihilation(n_max);
    let ad = a.adjoint();
    let atom = lift_fermion(&((n2 - n1) * C64::new(0.5 * p.atom_omega(), 0.0)), n_max);
    let field = photon_number(n_max) * C64::new(p.cavity_omega, 0.0);
    let coupling = (kron_fermion(&ops.sigma_plus, &a) + kron_fermion(&ops.sigma_minus, &ad))
        * C64::new(0.5 * p.rabi, 0.0);
    atom + field + coupling
}

/// Laboratory-frame state vector on the enlarged space.
pub fn laboratory_vector(s: &AmplitudeState, p: &JcParameters) -> DVector<C64> {
    let n_max = s.n_max();
    let mut v = DVector::zeros(DIM * (n_max + 1));
    let (w, w0, t) = (p.cavity_omega, p.atom_omega(), s.t);
    for (n, c) in s.lower.iter().enumerate() {
        v[enlarged_index(1, n, n_max)] = c * (-I * (n as f64 * w - 0.5 * w0) * t).exp();
    }
    for (k, c) in s.upper.iter().enumerate() {
        v[enlarged_index(2, k, n_max)] = c * (-I * (k as f64 * w + 0.5 * w0) * t).exp();
    }
    v
}

pub fn pure_state_density(s: &AmplitudeState, p: &JcParameters) -> DMatrix<C64> {
    let v = laboratory_vector(s, p);
    &v * v.adjoint()
}

fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::default();
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Operators whose expectation values make up [`Observables`].
struct ObservableOperators {
    p0: DMatrix<C64>,
    p1: DMatrix<C64>,
    p2: DMatrix<C64>,
    p12: DMatrix<C64>,
    sigma_minus: DMatrix<C64>,
    sigma_plus: DMatrix<C64>,
    number: DMatrix<C64>,
}

impl ObservableOperators {
    fn new(n_max: usize) -> Self {
        let ops = atomic_operators();
        Self {
            p0: lift_fermion(&ops.p0, n_max),
            p1: lift_fermion(&ops.p1, n_max),
            p2: lift_fermion(&ops.p2, n_max),
            p12: lift_fermion(&ops.p12, n_max),
            sigma_minus: lift_fermion(&ops.sigma_minus, n_max),
            sigma_plus: lift_fermion(&ops.sigma_plus, n_max),
            number: photon_number(n_max),
        }
    }

    fn map(&self, f: impl Fn(&DMatrix<C64>) -> DMatrix<C64>) -> Self {
        Self {
            p0: f(&self.p0),
            p1: f(&self.p1),
            p2: f(&self.p2),
            p12: f(&self.p12),
            sigma_minus: f(&self.sigma_minus),
            sigma_plus: f(&self.sigma_plus),
            number: f(&self.number),
        }
    }

    fn expect(&self, rho: &DMatrix<C64>) -> Observables {
        Observables {
            p0: trace_product(&self.p0, rho).re,
            p1: trace_product(&self.p1, rho).re,
            p2: trace_product(&self.p2, rho).re,
            p12: trace_product(&self.p12, rho).re,
            rho12: trace_product(&self.sigma_minus, rho),
            rho21: trace_product(&self.sigma_plus, rho),
            nbar: trace_product(&self.number, rho).re,
        }
    }
}

pub fn density_observables(rho: &DMatrix<C64>, n_max: usize) -> Observables {
    ObservableOperators::new(n_max).expect(rho)
}

pub fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Exact propagator `exp(-iHt)` from the Hermitian eigendecomposition of `H`.
pub struct DensityPropagator {
    energies: DVector<f64>,
    vectors: DMatrix<C64>,
}

impl DensityPropagator {
    pub fn new(h: &DMatrix<C64>) -> Result<Self, JcError> {
        let dev = hermiticity_deviation(h);
        if dev > 1e-12 {
            return Err(JcError::NotHermitian(dev));
        }
        let eig = h.clone().symmetric_eigen();
        Ok(Self { energies: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    fn to_eigenbasis(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        self.vectors.adjoint() * m * &self.vectors
    }

    fn phase_evolve(&self, rho_eig: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
        let phases: Vec<C64> = self.energies.iter().map(|e| (-I * e * t).exp()).collect();
        DMatrix::from_fn(rho_eig.nrows(), rho_eig.ncols(), |j, k| phases[j] * rho_eig[(j, k)] * phases[k].conj())
    }

    pub fn evolve(&self, rho0: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
        let r = self.phase_evolve(&self.to_eigenbasis(rho0), t);
        &self.vectors * r * self.vectors.adjoint()
    }
}

fn check_density(rho: &DMatrix<C64>) -> Result<(), JcError> {
    let dev = hermiticity_deviation(rho);
    if dev > 1e-12 {
        return Err(JcError::NotHermitian(dev));
    }
    let tr: C64 = rho.diagonal().iter().sum();
    if (tr - 1.0).norm() > NORM_TOL {
        return Err(JcError::NotNormalized((tr - 1.0).norm()));
    }
    Ok(())
}

/// Evolves `rho0` on the enlarged space to time `t`.
pub fn evolve_density(
    p: &JcParameters,
    n_max: usize,
    rho0: &DMatrix<C64>,
    t: f64,
) -> Result<DMatrix<C64>, JcError> {
    p.validate()?;
    check_density(rho0)?;
    let prop = DensityPropagator::new(&enlarged_hamiltonian(p, n_max))?;
    let rho = prop.evolve(rho0, t);
    let drift = (rho.diagonal().iter().sum::<C64>() - 1.0).norm();
    if drift > 1e-10 {
        return Err(JcError::TraceDrift(drift));
    }
    Ok(rho)
}

/// Observables of an evolving density matrix on a time grid, computed in the
/// Hamiltonian eigenbasis so that each time point costs one elementwise pass.
pub struct DensityTrajectory {
    prop: DensityPropagator,
    rho_eig: DMatrix<C64>,
    ops_eig: ObservableOperators,
    top_eig: DMatrix<C64>,
}

impl DensityTrajectory {
    pub fn new(p: &JcParameters, n_max: usize, rho0: &DMatrix<C64>) -> Result<Self, JcError> {
        p.validate()?;
        check_density(rho0)?;
        let prop = DensityPropagator::new(&enlarged_hamiltonian(p, n_max))?;
        let rho_eig = prop.to_eigenbasis(rho0);
        let ops_eig = ObservableOperators::new(n_max).map(|m| prop.to_eigenbasis(m));
        let top = DMatrix::from_fn(DIM * (n_max + 1), DIM * (n_max + 1), |i, j| {
            if i == j && i % (n_max + 1) + 1 >= n_max { C64::new(1.0, 0.0) } else { C64::default() }
        });
        let top_eig = prop.to_eigenbasis(&top);
        Ok(Self { prop, rho_eig, ops_eig, top_eig })
    }

    pub fn observables(&self, t: f64) -> Result<Observables, JcError> {
        let r = self.prop.phase_evolve(&self.rho_eig, t);
        let drift = (r.diagonal().iter().sum::<C64>() - 1.0).norm();
        if drift > 1e-10 {
            return Err(JcError::TraceDrift(drift));
        }
        Ok(self.ops_eig.expect(&r))
    }

    /// Probability of the two highest photon numbers at time `t`.
    pub fn top_band_mass(&self, t: f64) -> f64 {
        trace_product(&self.top_eig, &self.prop.phase_evolve(&self.rho_eig, t)).re
    }
}

/// RK4 integration of `dρ/dt = -i[H, ρ]`, used as an independent check on the propagator.
pub fn evolve_density_rk4(h: &DMatrix<C64>, rho0: &DMatrix<C64>, t: f64, dt: f64) -> DMatrix<C64> {
    let steps = (t / dt).ceil().max(1.0) as usize;
    let step = t / steps as f64;
    let f = |r: &DMatrix<C64>| (h * r - r * h) * (-I);
    let mut rho = rho0.clone();
    for _ in 0..steps {
        let k1 = f(&rho);
        let k2 = f(&(&rho + &k1 * C64::from(0.5 * step)));
        let k3 = f(&(&rho + &k2 * C64::from(0.5 * step)));
        let k4 = f(&(&rho + &k3 * C64::from(step)));
        rho += (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(step / 6.0);
    }
    rho
}
