//! Two-mode fermion Fock space with Grassmann-valued coefficients.
//!
//! Basis order is `|0;0>, |1;0>, |0;1>, |1;1>` with
//! `|m1;m2> = (c1†)^m1 (c2†)^m2 |0>`.
//!
//! Grassmann coefficients are always stored to the left of kets, bras and
//! ket-bras. Moving a Grassmann number past a basis ket or bra with fermion
//! number `N` flips the sign of its odd part when `N` is odd; every product
//! below applies that rule explicitly.

use std::sync::Arc;

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;

use crate::grassmann::{GeneratorSet, GrassmannError, GrassmannPoly, Side};

pub const DIM: usize = 4;

/// c-number operator on the four-dimensional space.
pub type PhysicalOperator = Matrix4<C64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeOp {
    Annihilate1,
    Create1,
    Annihilate2,
    Create2,
}

/// Occupations `(m1, m2)` of a basis index.
pub fn occupation(index: usize) -> (u8, u8) {
    ((index & 1) as u8, ((index >> 1) & 1) as u8)
}

pub fn fermion_number(index: usize) -> u8 {
    let (a, b) = occupation(index);
    a + b
}

fn basis_index(m1: u8, m2: u8) -> usize {
    m1 as usize | ((m2 as usize) << 1)
}

/// Matrix of a single mode operator, built from the occupation-number rule:
/// acting on mode 2 passes the mode-1 operator already present.
pub fn mode_operator(op: ModeOp) -> PhysicalOperator {
    let mut m = PhysicalOperator::zeros();
    for col in 0..DIM {
        let (m1, m2) = occupation(col);
        let (mode, create) = match op {
            ModeOp::Annihilate1 => (1, false),
            ModeOp::Create1 => (1, true),
            ModeOp::Annihilate2 => (2, false),
            ModeOp::Create2 => (2, true),
        };
        let occ = if mode == 1 { m1 } else { m2 };
        if (create && occ == 1) || (!create && occ == 0) {
            continue;
        }
        let new_occ = if create { 1 } else { 0 };
        let (n1, n2) = if mode == 1 { (new_occ, m2) } else { (m1, new_occ) };
        let sign = if mode == 2 && m1 == 1 { -1.0 } else { 1.0 };
        m[(basis_index(n1, n2), col)] = C64::new(sign, 0.0);
    }
    m
}

/// Projectors and transition operators for the two-level atom built from the modes.
#[derive(Debug, Clone)]
pub struct AtomicOperators {
    /// No atom present.
    pub p0: PhysicalOperator,
    /// Atom in the lower level only.
    pub p1: PhysicalOperator,
    /// Atom in the upper level only.
    pub p2: PhysicalOperator,
    /// Both modes occupied.
    pub p12: PhysicalOperator,
    /// `c1† c2`, lowering the atom.
    pub sigma_minus: PhysicalOperator,
    /// `c2† c1`.
    pub sigma_plus: PhysicalOperator,
    pub number: PhysicalOperator,
}

pub fn atomic_operators() -> AtomicOperators {
    let c1 = mode_operator(ModeOp::Annihilate1);
    let c1d = mode_operator(ModeOp::Create1);
    let c2 = mode_operator(ModeOp::Annihilate2);
    let c2d = mode_operator(ModeOp::Create2);
    let n1 = c1d * c1;
    let n2 = c2d * c2;
    let pair = c1d * c2d * c2 * c1;
    AtomicOperators {
        p0: PhysicalOperator::identity() - n1 - n2 + pair,
        p1: n1 - pair,
        p2: n2 - pair,
        p12: pair,
        sigma_minus: c1d * c2,
        sigma_plus: c2d * c1,
        number: n1 + n2,
    }
}

/// Applies the sign change for moving `q` across kets/bras of total fermion number `n`.
fn pass(q: &GrassmannPoly, n: u8) -> GrassmannPoly {
    if n % 2 == 0 { q.clone() } else { q.grade_involution() }
}

/// Ket `Σ c_k |k>` with Grassmann coefficients on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionVector {
    pub coeffs: [GrassmannPoly; DIM],
}

/// Bra `Σ d_k <k|` with Grassmann coefficients on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionBra {
    pub coeffs: [GrassmannPoly; DIM],
}

/// Operator `Σ X_jk |j><k|` with Grassmann coefficients on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionOperator {
    pub entries: [[GrassmannPoly; DIM]; DIM],
}

impl FermionVector {
    pub fn basis(gens: &Arc<GeneratorSet>, index: usize) -> Self {
        let coeffs = std::array::from_fn(|k| {
            if k == index { GrassmannPoly::one(gens) } else { GrassmannPoly::zero(gens) }
        });
        Self { coeffs }
    }

    /// `q` times the vector.
    pub fn mul_left(&self, q: &GrassmannPoly) -> Self {
        Self { coeffs: std::array::from_fn(|k| q * &self.coeffs[k]) }
    }

    /// The vector times `q`.
    pub fn mul_right(&self, q: &GrassmannPoly) -> Self {
        Self {
            coeffs: std::array::from_fn(|k| &self.coeffs[k] * &pass(q, fermion_number(k))),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (0..DIM).map(|k| self.coeffs[k].max_abs_diff(&other.coeffs[k])).fold(0.0, f64::max)
    }

    /// `|self><bra|`.
    pub fn outer(&self, bra: &FermionBra) -> FermionOperator {
        FermionOperator {
            entries: std::array::from_fn(|j| {
                std::array::from_fn(|k| &self.coeffs[j] * &pass(&bra.coeffs[k], fermion_number(j)))
            }),
        }
    }
}

impl FermionBra {
    /// `<self|ket>`.
    pub fn dot(&self, ket: &FermionVector) -> GrassmannPoly {
        let gens = self.coeffs[0].generators().clone();
        (0..DIM).fold(GrassmannPoly::zero(&gens), |acc, k| {
            &acc + &(&self.coeffs[k] * &pass(&ket.coeffs[k], fermion_number(k)))
        })
    }

    /// `<self| X`.
    pub fn apply(&self, op: &FermionOperator) -> Self {
        let gens = self.coeffs[0].generators().clone();
        Self {
            coeffs: std::array::from_fn(|m| {
                (0..DIM).fold(GrassmannPoly::zero(&gens), |acc, k| {
                    &acc + &(&self.coeffs[k] * &pass(&op.entries[k][m], fermion_number(k)))
                })
            }),
        }
    }
}

impl FermionOperator {
    pub fn zero(gens: &Arc<GeneratorSet>) -> Self {
        Self { entries: std::array::from_fn(|_| std::array::from_fn(|_| GrassmannPoly::zero(gens))) }
    }

    pub fn identity(gens: &Arc<GeneratorSet>) -> Self {
        Self::from_physical(gens, &PhysicalOperator::identity())
    }

    pub fn from_physical(gens: &Arc<GeneratorSet>, m: &PhysicalOperator) -> Self {
        Self {
            entries: std::array::from_fn(|j| {
                std::array::from_fn(|k| GrassmannPoly::scalar(gens, m[(j, k)]))
            }),
        }
    }

    fn map(&self, f: impl Fn(usize, usize, &GrassmannPoly) -> GrassmannPoly) -> Self {
        Self {
            entries: std::array::from_fn(|j| std::array::from_fn(|k| f(j, k, &self.entries[j][k]))),
        }
    }

    fn entry_parity(j: usize, k: usize) -> u8 {
        fermion_number(j) + fermion_number(k)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let gens = self.entries[0][0].generators().clone();
        Self {
            entries: std::array::from_fn(|j| {
                std::array::from_fn(|m| {
                    (0..DIM).fold(GrassmannPoly::zero(&gens), |acc, k| {
                        &acc + &(&self.entries[j][k]
                            * &pass(&other.entries[k][m], Self::entry_parity(j, k)))
                    })
                })
            }),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.map(|j, k, x| x + &other.entries[j][k])
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.map(|j, k, x| x - &other.entries[j][k])
    }

    /// `q X`.
    pub fn mul_left(&self, q: &GrassmannPoly) -> Self {
        self.map(|_, _, x| q * x)
    }

    /// `X q`.
    pub fn mul_right(&self, q: &GrassmannPoly) -> Self {
        self.map(|j, k, x| x * &pass(q, Self::entry_parity(j, k)))
    }

    /// Derivative acting from the left on the whole operator.
    pub fn derive_left(&self, name: &str) -> Result<Self, GrassmannError> {
        let gens = self.entries[0][0].generators().clone();
        gens.index_of(name)?;
        Ok(self.map(|_, _, x| x.derive(name, Side::Left).expect("checked")))
    }

    /// Derivative acting from the right on the whole operator.
    pub fn derive_right(&self, name: &str) -> Result<Self, GrassmannError> {
        let gens = self.entries[0][0].generators().clone();
        gens.index_of(name)?;
        Ok(self.map(|j, k, x| {
            let p = Self::entry_parity(j, k);
            pass(&pass(x, p).derive(name, Side::Right).expect("checked"), p)
        }))
    }

    pub fn integrate_berezin(&self, names: &[&str]) -> Result<Self, GrassmannError> {
        let mut out = self.clone();
        for j in 0..DIM {
            for k in 0..DIM {
                out.entries[j][k] = self.entries[j][k].integrate_berezin(names)?;
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> GrassmannPoly {
        let gens = self.entries[0][0].generators().clone();
        (0..DIM).fold(GrassmannPoly::zero(&gens), |acc, j| &acc + &self.entries[j][j])
    }

    pub fn apply(&self, v: &FermionVector) -> FermionVector {
        let gens = self.entries[0][0].generators().clone();
        FermionVector {
            coeffs: std::array::from_fn(|j| {
                (0..DIM).fold(GrassmannPoly::zero(&gens), |acc, k| {
                    &acc + &(&self.entries[j][k] * &pass(&v.coeffs[k], Self::entry_parity(j, k)))
                })
            }),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..DIM {
            for k in 0..DIM {
                worst = worst.max(self.entries[j][k].max_abs_diff(&other.entries[j][k]));
            }
        }
        worst
    }
}

fn distinct(names: &[&str]) -> Result<(), GrassmannError> {
    for (i, a) in names.iter().enumerate() {
        if names[i + 1..].contains(a) {
            return Err(GrassmannError::DuplicateGenerator(a.to_string()));
        }
    }
    Ok(())
}

/// Bargmann ket `(1 + c1† h1)(1 + c2† h2)|0>` for odd elements `h1, h2`.
pub fn bargmann_ket_from(h1: &GrassmannPoly, h2: &GrassmannPoly) -> FermionVector {
    let gens = h1.generators().clone();
    let id = FermionOperator::identity(&gens);
    let f1 = id.add(&FermionOperator::from_physical(&gens, &mode_operator(ModeOp::Create1)).mul_right(h1));
    let f2 = id.add(&FermionOperator::from_physical(&gens, &mode_operator(ModeOp::Create2)).mul_right(h2));
    f1.mul(&f2).apply(&FermionVector::basis(&gens, 0))
}

/// Bargmann bra `<0|(1 + k2 c2)(1 + k1 c1)`, where `k_i` are the conjugated labels of the ket it
/// is dual to.
pub fn bargmann_bra_from(k1: &GrassmannPoly, k2: &GrassmannPoly) -> FermionBra {
    let gens = k1.generators().clone();
    let id = FermionOperator::identity(&gens);
    let f2 = id.add(&FermionOperator::from_physical(&gens, &mode_operator(ModeOp::Annihilate2)).mul_left(k2));
    let f1 = id.add(&FermionOperator::from_physical(&gens, &mode_operator(ModeOp::Annihilate1)).mul_left(k1));
    let vac = FermionBra {
        coeffs: std::array::from_fn(|k| {
            if k == 0 { GrassmannPoly::one(&gens) } else { GrassmannPoly::zero(&gens) }
        }),
    };
    vac.apply(&f2.mul(&f1))
}

pub fn bargmann_ket(gens: &Arc<GeneratorSet>, labels: [&str; 2]) -> Result<FermionVector, GrassmannError> {
    distinct(&labels)?;
    Ok(bargmann_ket_from(
        &GrassmannPoly::generator(gens, labels[0])?,
        &GrassmannPoly::generator(gens, labels[1])?,
    ))
}

/// Bra dual to a ket whose conjugated labels are `labels`.
pub fn bargmann_bra(gens: &Arc<GeneratorSet>, labels: [&str; 2]) -> Result<FermionBra, GrassmannError> {
    distinct(&labels)?;
    Ok(bargmann_bra_from(
        &GrassmannPoly::generator(gens, labels[0])?,
        &GrassmannPoly::generator(gens, labels[1])?,
    ))
}

/// `Π (1 + a_i b_i)`, the exponential of a sum of generator pairs.
pub fn pair_exponential(gens: &Arc<GeneratorSet>, pairs: &[(&str, &str)]) -> Result<GrassmannPoly, GrassmannError> {
    let mut acc = GrassmannPoly::scalar(gens, C64::new(0.0, 0.0));
    for (a, b) in pairs {
        acc = &acc + &GrassmannPoly::monomial(gens, &[a, b], C64::new(1.0, 0.0))?;
    }
    Ok(acc.exp())
}

/// Normalised projector `|g><g+*| / Tr(|g><g+*|)`.
///
/// `ket` names the ket labels, `plus` the labels carried by the bra.
pub fn normalized_projector(
    gens: &Arc<GeneratorSet>,
    ket: [&str; 2],
    plus: [&str; 2],
) -> Result<FermionOperator, GrassmannError> {
    distinct(&[ket[0], ket[1], plus[0], plus[1]])?;
    let raw = bargmann_ket(gens, ket)?.outer(&bargmann_bra(gens, plus)?);
    let tr = raw.trace();
    Ok(raw.mul_left(&tr.inverse()?))
}

/// Checks `∫ Π dg_i* dg_i exp(-Σ g_i* g_i) |g><g| = 1`, returning the largest coefficient error.
pub fn completeness_residual(
    gens: &Arc<GeneratorSet>,
    ket: [&str; 2],
    conj: [&str; 2],
) -> Result<f64, GrassmannError> {
    let proj = bargmann_ket(gens, ket)?.outer(&bargmann_bra(gens, conj)?);
    let mut weight = GrassmannPoly::zero(gens);
    for i in 0..2 {
        weight = &weight - &GrassmannPoly::monomial(gens, &[conj[i], ket[i]], C64::new(1.0, 0.0))?;
    }
    let integrand = proj.mul_left(&weight.exp());
    let total = integrand.integrate_berezin(&[conj[0], ket[0], conj[1], ket[1]])?;
    Ok(total.max_abs_diff(&FermionOperator::identity(gens)))
}

/// Labels used by the canonical phase-space kernel.
pub struct KernelLabels<'a> {
    pub g: [&'a str; 2],
    pub g_plus: [&'a str; 2],
    pub g_conj: [&'a str; 2],
    pub g_plus_conj: [&'a str; 2],
}

pub const STANDARD_LABELS: KernelLabels<'static> = KernelLabels {
    g: ["g1", "g2"],
    g_plus: ["g1p", "g2p"],
    g_conj: ["g1s", "g2s"],
    g_plus_conj: ["g1ps", "g2ps"],
};

/// Gaussian weight `exp Σ (g_i g_i* + g_i+* g_i+ + g_i g_i+)` of the canonical map.
pub fn canonical_weight(gens: &Arc<GeneratorSet>, l: &KernelLabels) -> Result<GrassmannPoly, GrassmannError> {
    let mut pairs = Vec::new();
    for i in 0..2 {
        pairs.push((l.g[i], l.g_conj[i]));
        pairs.push((l.g_plus_conj[i], l.g_plus[i]));
        pairs.push((l.g[i], l.g_plus[i]));
    }
    pair_exponential(gens, &pairs)
}

/// Integrates `f` against the canonical weight over the conjugated labels,
/// leaving a polynomial in `g` and `g+`.
pub fn canonical_integral(
    gens: &Arc<GeneratorSet>,
    l: &KernelLabels,
    f: &GrassmannPoly,
) -> Result<GrassmannPoly, GrassmannError> {
    let w = canonical_weight(gens, l)?;
    (&w * f).integrate_berezin(&[l.g_plus_conj[1], l.g_conj[1], l.g_plus_conj[0], l.g_conj[0]])
}

/// Phase-space image of the fermion matrix unit `|a><b|`: the canonical integral of
/// `<g| a><b |g+*>`.
pub fn canonical_kernel(
    gens: &Arc<GeneratorSet>,
    l: &KernelLabels,
    a: usize,
    b: usize,
) -> Result<GrassmannPoly, GrassmannError> {
    let bra = bargmann_bra(gens, l.g_conj)?;
    let ket = bargmann_ket(gens, l.g_plus_conj)?;
    let mut unit = PhysicalOperator::zeros();
    unit[(a, b)] = C64::new(1.0, 0.0);
    let op = FermionOperator::from_physical(gens, &unit);
    let element = bra.apply(&op).dot(&ket);
    canonical_integral(gens, l, &element)
}

/// Residuals of the eight projector identities for each mode, in the order
/// `c Λ = g Λ`, `g Λ = Λ g`, `Λ c† = Λ g+`, `Λ g+ = g+ Λ`,
/// `c† Λ = (-∂/∂g - g+) Λ`, `(-∂/∂g - g+) Λ = Λ (∂←/∂g - g+)`,
/// `Λ c = Λ (-∂←/∂g+ - g)`, `Λ (-∂←/∂g+ - g) = (∂/∂g+ - g) Λ`.
pub fn projector_identity_residuals(
    gens: &Arc<GeneratorSet>,
    ket: [&str; 2],
    plus: [&str; 2],
) -> Result<[[f64; 8]; 2], GrassmannError> {
    let lam = normalized_projector(gens, ket, plus)?;
    let modes = [
        (ModeOp::Annihilate1, ModeOp::Create1),
        (ModeOp::Annihilate2, ModeOp::Create2),
    ];
    let mut out = [[0.0; 8]; 2];
    for i in 0..2 {
        let c = FermionOperator::from_physical(gens, &mode_operator(modes[i].0));
        let cd = FermionOperator::from_physical(gens, &mode_operator(modes[i].1));
        let gi = GrassmannPoly::generator(gens, ket[i])?;
        let gp = GrassmannPoly::generator(gens, plus[i])?;

        let left_g = lam.mul_left(&gi);
        let right_gp = lam.mul_right(&gp);
        let d_left_g = lam.derive_left(ket[i])?;
        let d_right_g = lam.derive_right(ket[i])?;
        let d_left_gp = lam.derive_left(plus[i])?;
        let d_right_gp = lam.derive_right(plus[i])?;

        let create_left = d_left_g.mul_left(&GrassmannPoly::scalar(gens, C64::new(-1.0, 0.0))).sub(&lam.mul_left(&gp));
        let create_right = d_right_g.sub(&lam.mul_right(&gp));
        let annihilate_right = d_right_gp
            .mul_left(&GrassmannPoly::scalar(gens, C64::new(-1.0, 0.0)))
            .sub(&lam.mul_right(&gi));
        let annihilate_left = d_left_gp.sub(&lam.mul_left(&gi));

        out[i] = [
            c.mul(&lam).max_abs_diff(&left_g),
            left_g.max_abs_diff(&lam.mul_right(&gi)),
            lam.mul(&cd).max_abs_diff(&right_gp),
            right_gp.max_abs_diff(&lam.mul_left(&gp)),
            cd.mul(&lam).max_abs_diff(&create_left),
            create_left.max_abs_diff(&create_right),
            lam.mul(&c).max_abs_diff(&annihilate_right),
            annihilate_right.max_abs_diff(&annihilate_left),
        ];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gens() -> Arc<GeneratorSet> {
        GeneratorSet::two_mode_doubled()
    }

    fn g(s: &Arc<GeneratorSet>, n: &str) -> GrassmannPoly {
        GrassmannPoly::generator(s, n).unwrap()
    }

    fn anti(a: &PhysicalOperator, b: &PhysicalOperator) -> PhysicalOperator {
        a * b + b * a
    }

    #[test]
    fn canonical_anticommutators() {
        let ops = [
            (mode_operator(ModeOp::Annihilate1), mode_operator(ModeOp::Create1)),
            (mode_operator(ModeOp::Annihilate2), mode_operator(ModeOp::Create2)),
        ];
        for (i, (ci, cid)) in ops.iter().enumerate() {
            assert_eq!(anti(ci, cid), PhysicalOperator::identity());
            assert_eq!(anti(ci, ci), PhysicalOperator::zeros());
            for (j, (cj, cjd)) in ops.iter().enumerate() {
                if i != j {
                    assert_eq!(anti(ci, cjd), PhysicalOperator::zeros());
                    assert_eq!(anti(ci, cj), PhysicalOperator::zeros());
                }
            }
        }
    }

    #[test]
    fn mode_action_signs() {
        let c2 = mode_operator(ModeOp::Annihilate2);
        assert_eq!(c2[(1, 3)], C64::new(-1.0, 0.0));
        let c1d = mode_operator(ModeOp::Create1);
        assert_eq!(c1d[(3, 2)], C64::new(1.0, 0.0));
        let c2d = mode_operator(ModeOp::Create2);
        assert_eq!(c2d[(3, 1)], C64::new(-1.0, 0.0));
    }

    #[test]
    fn atomic_operators_resolve_identity() {
        let a = atomic_operators();
        assert_eq!(a.p0 + a.p1 + a.p2 + a.p12, PhysicalOperator::identity());
        let c1 = mode_operator(ModeOp::Annihilate1);
        let c1d = mode_operator(ModeOp::Create1);
        let c2 = mode_operator(ModeOp::Annihilate2);
        let c2d = mode_operator(ModeOp::Create2);
        let id = PhysicalOperator::identity();
        assert_eq!(a.p0, (id - c1d * c1) * (id - c2d * c2));
        assert_eq!(a.p1[(1, 1)], C64::new(1.0, 0.0));
        assert_eq!(a.sigma_minus[(1, 2)], C64::new(1.0, 0.0));
        assert_eq!(a.sigma_plus, a.sigma_minus.adjoint());
    }

    #[test]
    fn grassmann_passes_kets_with_number_sign() {
        let s = gens();
        let x = g(&s, "g1");
        for k in 0..DIM {
            let v = FermionVector::basis(&s, k);
            let sign = if fermion_number(k) % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(v.mul_left(&x), v.mul_right(&x).mul_left(&GrassmannPoly::scalar(&s, C64::new(sign, 0.0))));
        }
    }

    #[test]
    fn bargmann_ket_components() {
        let s = gens();
        let k = bargmann_ket(&s, ["g1", "g2"]).unwrap();
        assert_eq!(k.coeffs[0], GrassmannPoly::one(&s));
        assert_eq!(k.coeffs[1], -&g(&s, "g1"));
        assert_eq!(k.coeffs[2], -&g(&s, "g2"));
        assert_eq!(k.coeffs[3], GrassmannPoly::monomial(&s, &["g2", "g1"], C64::new(1.0, 0.0)).unwrap());
    }

    #[test]
    fn bargmann_ket_is_eigenvector() {
        let s = gens();
        let k = bargmann_ket(&s, ["g1", "g2"]).unwrap();
        for (op, name) in [(ModeOp::Annihilate1, "g1"), (ModeOp::Annihilate2, "g2")] {
            let lhs = FermionOperator::from_physical(&s, &mode_operator(op)).apply(&k);
            assert_eq!(lhs, k.mul_left(&g(&s, name)));
        }
    }

    #[test]
    fn overlap_is_exponential() {
        let s = gens();
        let bra = bargmann_bra(&s, ["g1s", "g2s"]).unwrap();
        let ket = bargmann_ket(&s, ["g1p", "g2p"]).unwrap();
        let expect = pair_exponential(&s, &[("g1s", "g1p"), ("g2s", "g2p")]).unwrap();
        assert!(bra.dot(&ket).approx_eq(&expect, 0.0));
    }

    #[test]
    fn trace_of_ket_bra() {
        let s = gens();
        let op = bargmann_ket(&s, ["g1", "g2"]).unwrap().outer(&bargmann_bra(&s, ["g1p", "g2p"]).unwrap());
        let expect = pair_exponential(&s, &[("g1", "g1p"), ("g2", "g2p")]).unwrap();
        assert_eq!(op.trace(), expect);
        let minus = bargmann_bra_from(&-&g(&s, "g1p"), &-&g(&s, "g2p"));
        assert_eq!(minus.dot(&bargmann_ket(&s, ["g1", "g2"]).unwrap()), expect);
    }

    #[test]
    fn projector_identities_hold() {
        let s = gens();
        let r = projector_identity_residuals(&s, ["g1", "g2"], ["g1p", "g2p"]).unwrap();
        for (i, row) in r.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                assert!(*v < 1e-14, "mode {} identity {}: {}", i + 1, k + 1, v);
            }
        }
    }

    #[test]
    fn completeness() {
        let s = gens();
        assert!(completeness_residual(&s, ["g1", "g2"], ["g1s", "g2s"]).unwrap() < 1e-14);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let s = gens();
        assert!(matches!(bargmann_ket(&s, ["g1", "g1"]), Err(GrassmannError::DuplicateGenerator(_))));
        assert!(matches!(bargmann_ket(&s, ["g1", "zz"]), Err(GrassmannError::UnknownGenerator(_))));
    }

    #[test]
    fn canonical_integral_of_pair_products() {
        let s = gens();
        let l = &STANDARD_LABELS;
        let one = C64::new(1.0, 0.0);
        let m = |names: &[&str], c: f64| GrassmannPoly::monomial(&s, names, C64::new(c, 0.0)).unwrap();
        for k in 0..2 {
            for ll in 0..2 {
                let f = GrassmannPoly::monomial(&s, &[l.g_conj[k], l.g_plus_conj[ll]], one).unwrap();
                let got = canonical_integral(&s, l, &f).unwrap();
                let d = |a: usize, b: usize| if k == a && ll == b { 1.0 } else { 0.0 };
                let mut expect = m(&["g1", "g1p"], d(1, 1));
                expect = &expect - &m(&["g1", "g2p"], d(1, 0));
                expect = &expect - &m(&["g2", "g1p"], d(0, 1));
                expect = &expect + &m(&["g2", "g2p"], d(0, 0));
                expect = &expect + &m(&["g1", "g2", "g2p", "g1p"], d(1, 1) + d(0, 0));
                assert!(got.approx_eq(&expect, 1e-15), "k={k} l={ll}: {got:?}");
            }
        }
    }
}
