//! Finite Grassmann algebra over a named generator set.
//!
//! A polynomial is a sparse map from generator subsets (bitmasks, lowest bit
//! leftmost) to complex coefficients. Each monomial is stored in ascending
//! generator order, so every product or reordering carries the sign of the
//! permutation that restores that order.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Largest supported number of generators.
pub const MAX_GENERATORS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrassmannError {
    #[error("polynomials are built over different generator sets")]
    MismatchedGenerators,
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator `{0}` listed more than once")]
    DuplicateGenerator(String),
    #[error("{0} generators requested, at most {MAX_GENERATORS} supported")]
    TooManyGenerators(usize),
    #[error("generator set has no star pairing")]
    MissingStarPairing,
    #[error("invalid star pairing: {0}")]
    InvalidStarPairing(String),
    #[error("element has no inverse (zero scalar part)")]
    NotInvertible,
}

/// Which side a derivative acts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

/// Ordered generator labels with an optional involutive star pairing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSet {
    names: Vec<String>,
    star: Option<Vec<usize>>,
}

impl GeneratorSet {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Arc<Self>, GrassmannError> {
        Ok(Arc::new(Self::build(names)?))
    }

    /// Builds a set where each `(a, b)` pair is mapped onto the other by conjugation.
    /// Every generator must appear in exactly one pair.
    pub fn with_star_pairing<S: AsRef<str>>(
        names: &[S],
        pairs: &[(&str, &str)],
    ) -> Result<Arc<Self>, GrassmannError> {
        let mut set = Self::build(names)?;
        let mut star = vec![usize::MAX; set.names.len()];
        for (a, b) in pairs {
            let ia = set.index_of(a)?;
            let ib = set.index_of(b)?;
            if ia == ib || star[ia] != usize::MAX || star[ib] != usize::MAX {
                return Err(GrassmannError::InvalidStarPairing(format!("{a} <-> {b}")));
            }
            star[ia] = ib;
            star[ib] = ia;
        }
        if let Some(i) = star.iter().position(|&s| s == usize::MAX) {
            return Err(GrassmannError::InvalidStarPairing(format!(
                "`{}` has no partner",
                set.names[i]
            )));
        }
        set.star = Some(star);
        Ok(Arc::new(set))
    }

    fn build<S: AsRef<str>>(names: &[S]) -> Result<Self, GrassmannError> {
        if names.len() > MAX_GENERATORS {
            return Err(GrassmannError::TooManyGenerators(names.len()));
        }
        let mut out: Vec<String> = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            if out.iter().any(|m| m == n) {
                return Err(GrassmannError::DuplicateGenerator(n.to_string()));
            }
            out.push(n.to_string());
        }
        Ok(Self { names: out, star: None })
    }

    /// The eight generators used for two fermion modes and their doubled
    /// phase-space partners: `g1 g2 g2p g1p` followed by their starred images
    /// `g1s g2s g2ps g1ps`.
    pub fn two_mode_doubled() -> Arc<Self> {
        Self::with_star_pairing(
            &["g1", "g2", "g2p", "g1p", "g1s", "g2s", "g2ps", "g1ps"],
            &[("g1", "g1s"), ("g2", "g2s"), ("g2p", "g2ps"), ("g1p", "g1ps")],
        )
        .expect("static generator table is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GrassmannError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| GrassmannError::UnknownGenerator(name.to_string()))
    }

    pub fn star_of(&self, i: usize) -> Option<usize> {
        self.star.as_ref().map(|s| s[i])
    }
}

/// Sign of the permutation taking `a` followed by `b` (both ascending) into ascending order.
/// Assumes the masks are disjoint.
fn merge_sign(a: u32, b: u32) -> f64 {
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if swaps % 2 == 0 { 1.0 } else { -1.0 }
}

/// Sign of the permutation sorting a sequence of distinct indices.
fn sequence_sign(seq: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 { 1.0 } else { -1.0 }
}

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    let mut rest = mask;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(j)
        }
    })
}

#[derive(Clone)]
pub struct GrassmannPoly {
    gens: Arc<GeneratorSet>,
    terms: BTreeMap<u32, C64>,
}

impl GrassmannPoly {
    pub fn zero(gens: &Arc<GeneratorSet>) -> Self {
        Self { gens: gens.clone(), terms: BTreeMap::new() }
    }

    pub fn scalar(gens: &Arc<GeneratorSet>, c: C64) -> Self {
        let mut p = Self::zero(gens);
        p.add_term(0, c);
        p
    }

    pub fn one(gens: &Arc<GeneratorSet>) -> Self {
        Self::scalar(gens, C64::new(1.0, 0.0))
    }

    pub fn generator(gens: &Arc<GeneratorSet>, name: &str) -> Result<Self, GrassmannError> {
        let i = gens.index_of(name)?;
        let mut p = Self::zero(gens);
        p.add_term(1 << i, C64::new(1.0, 0.0));
        Ok(p)
    }

    /// `c` times the product of the named generators in the order given.
    pub fn monomial(
        gens: &Arc<GeneratorSet>,
        names: &[&str],
        c: C64,
    ) -> Result<Self, GrassmannError> {
        let idx = names.iter().map(|n| gens.index_of(n)).collect::<Result<Vec<_>, _>>()?;
        let mut mask = 0u32;
        for &i in &idx {
            if mask & (1 << i) != 0 {
                return Ok(Self::zero(gens));
            }
            mask |= 1 << i;
        }
        let mut p = Self::zero(gens);
        p.add_term(mask, c * sequence_sign(&idx));
        Ok(p)
    }

    /// Builds a polynomial from raw `(mask, coefficient)` pairs in ascending order.
    pub fn from_terms(
        gens: &Arc<GeneratorSet>,
        terms: impl IntoIterator<Item = (u32, C64)>,
    ) -> Self {
        let mut p = Self::zero(gens);
        for (m, c) in terms {
            assert!(
                (m >> gens.len()) == 0,
                "monomial mask uses generators outside the set"
            );
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, mask: u32, c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let e = self.terms.entry(mask).or_insert(C64::new(0.0, 0.0));
        *e += c;
        if *e == C64::new(0.0, 0.0) {
            self.terms.remove(&mask);
        }
    }

    pub fn generators(&self) -> &Arc<GeneratorSet> {
        &self.gens
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, C64)> + '_ {
        self.terms.iter().map(|(&m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scalar_part(&self) -> C64 {
        self.terms.get(&0).copied().unwrap_or_default()
    }

    /// Coefficient of the named monomial, read in the order given.
    pub fn coefficient(&self, names: &[&str]) -> Result<C64, GrassmannError> {
        let idx = names.iter().map(|n| self.gens.index_of(n)).collect::<Result<Vec<_>, _>>()?;
        let mut mask = 0u32;
        for &i in &idx {
            if mask & (1 << i) != 0 {
                return Ok(C64::default());
            }
            mask |= 1 << i;
        }
        let c = self.terms.get(&mask).copied().unwrap_or_default();
        Ok(c * sequence_sign(&idx))
    }

    fn same_set(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.gens, &other.gens) || self.gens == other.gens
    }

    fn check(&self, other: &Self) -> Result<(), GrassmannError> {
        if self.same_set(other) { Ok(()) } else { Err(GrassmannError::MismatchedGenerators) }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m, c);
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m, -c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check(other)?;
        let mut out = Self::zero(&self.gens);
        for (&a, &ca) in &self.terms {
            for (&b, &cb) in &other.terms {
                if a & b != 0 {
                    continue;
                }
                out.add_term(a | b, ca * cb * merge_sign(a, b));
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(&self.gens);
        for (m, v) in self.terms() {
            out.add_term(m, v * c);
        }
        out
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn parity(&self) -> Parity {
        let odd = self.terms.keys().filter(|m| m.count_ones() % 2 == 1).count();
        match odd {
            0 => Parity::Even,
            n if n == self.terms.len() => Parity::Odd,
            _ => Parity::Mixed,
        }
    }

    pub fn even_part(&self) -> Self {
        self.filter(|m| m.count_ones() % 2 == 0)
    }

    pub fn odd_part(&self) -> Self {
        self.filter(|m| m.count_ones() % 2 == 1)
    }

    /// Even part minus odd part.
    pub fn grade_involution(&self) -> Self {
        let mut out = Self::zero(&self.gens);
        for (m, c) in self.terms() {
            out.add_term(m, if m.count_ones() % 2 == 1 { -c } else { c });
        }
        out
    }

    /// Highest monomial degree present, zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.count_ones()).max().unwrap_or(0)
    }

    fn filter(&self, keep: impl Fn(u32) -> bool) -> Self {
        Self {
            gens: self.gens.clone(),
            terms: self.terms.iter().filter(|(m, _)| keep(**m)).map(|(&m, &c)| (m, c)).collect(),
        }
    }

    pub fn derive(&self, name: &str, side: Side) -> Result<Self, GrassmannError> {
        let k = self.gens.index_of(name)?;
        Ok(self.derive_index(k, side))
    }

    pub(crate) fn derive_index(&self, k: usize, side: Side) -> Self {
        let bit = 1u32 << k;
        let mut out = Self::zero(&self.gens);
        for (m, c) in self.terms() {
            if m & bit == 0 {
                continue;
            }
            let passed = match side {
                Side::Left => (m & (bit - 1)).count_ones(),
                Side::Right => (m >> (k + 1)).count_ones(),
            };
            let s = if passed % 2 == 0 { 1.0 } else { -1.0 };
            out.add_term(m & !bit, c * s);
        }
        out
    }

    /// Left Berezin integral over the listed differentials.
    ///
    /// `[a, b]` means `∫ da db f`: the last differential acts first.
    pub fn integrate_berezin(&self, names: &[&str]) -> Result<Self, GrassmannError> {
        let idx = names.iter().map(|n| self.gens.index_of(n)).collect::<Result<Vec<_>, _>>()?;
        for (i, a) in idx.iter().enumerate() {
            if idx[i + 1..].contains(a) {
                return Err(GrassmannError::DuplicateGenerator(self.gens.name(*a).to_string()));
            }
        }
        let mut out = self.clone();
        for &k in idx.iter().rev() {
            out = out.derive_index(k, Side::Left);
        }
        Ok(out)
    }

    /// Integral with the differential written on the right, `∫ f dg`.
    pub fn integrate_right(&self, name: &str) -> Result<Self, GrassmannError> {
        Ok(self.derive(name, Side::Right)?.scale_re(-1.0))
    }

    /// Complex conjugation through the star pairing; reverses generator order.
    pub fn conjugate(&self) -> Result<Self, GrassmannError> {
        if self.gens.star.is_none() {
            return Err(GrassmannError::MissingStarPairing);
        }
        let mut out = Self::zero(&self.gens);
        for (m, c) in self.terms() {
            let mapped: Vec<usize> =
                bits(m).collect::<Vec<_>>().into_iter().rev().map(|i| self.gens.star_of(i).unwrap()).collect();
            let mask = mapped.iter().fold(0u32, |acc, &i| acc | (1 << i));
            out.add_term(mask, c.conj() * sequence_sign(&mapped));
        }
        Ok(out)
    }

    /// Exponential, terminating because the non-scalar part is nilpotent.
    pub fn exp(&self) -> Self {
        let c0 = self.scalar_part();
        let mut nil = self.clone();
        nil.terms.remove(&0);
        let mut acc = Self::one(&self.gens);
        let mut power = Self::one(&self.gens);
        for k in 1..=self.gens.len() + 1 {
            power = &power * &nil;
            if power.is_zero() {
                break;
            }
            acc = &acc + &power.scale_re(1.0 / factorial(k));
        }
        acc.scale(c0.exp())
    }

    pub fn inverse(&self) -> Result<Self, GrassmannError> {
        let c0 = self.scalar_part();
        if c0 == C64::default() {
            return Err(GrassmannError::NotInvertible);
        }
        let mut nil = self.scale(-1.0 / c0);
        nil.terms.remove(&0);
        let mut acc = Self::one(&self.gens);
        let mut power = Self::one(&self.gens);
        for _ in 0..=self.gens.len() {
            power = &power * &nil;
            if power.is_zero() {
                break;
            }
            acc = &acc + &power;
        }
        Ok(acc.scale(1.0 / c0))
    }

    /// Largest coefficient magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = self - other;
        d.max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.same_set(other) && self.max_abs_diff(other) <= tol
    }

    fn monomial_label(&self, m: u32) -> String {
        if m == 0 {
            "1".to_string()
        } else {
            bits(m).map(|i| self.gens.name(i)).collect::<Vec<_>>().join(" ")
        }
    }

    /// One line per term, `coeff * g_i g_j`, sorted by degree then mask.
    pub fn to_text(&self) -> String {
        let mut keys: Vec<u32> = self.terms.keys().copied().collect();
        keys.sort_by_key(|m| (m.count_ones(), *m));
        keys.iter()
            .map(|m| {
                let c = self.terms[m];
                format!("({:.17e}{:+.17e}i) * {}", c.re, c.im, self.monomial_label(*m))
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, i| a * i as f64)
}

impl fmt::Debug for GrassmannPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        write!(f, "{}", self.to_text())
    }
}

impl PartialEq for GrassmannPoly {
    fn eq(&self, other: &Self) -> bool {
        self.same_set(other) && self.terms == other.terms
    }
}

impl Add for &GrassmannPoly {
    type Output = GrassmannPoly;
    fn add(self, rhs: Self) -> GrassmannPoly {
        self.try_add(rhs).expect("generator sets differ")
    }
}

impl Sub for &GrassmannPoly {
    type Output = GrassmannPoly;
    fn sub(self, rhs: Self) -> GrassmannPoly {
        self.try_sub(rhs).expect("generator sets differ")
    }
}

impl Mul for &GrassmannPoly {
    type Output = GrassmannPoly;
    fn mul(self, rhs: Self) -> GrassmannPoly {
        self.try_mul(rhs).expect("generator sets differ")
    }
}

impl Neg for &GrassmannPoly {
    type Output = GrassmannPoly;
    fn neg(self) -> GrassmannPoly {
        self.scale_re(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn set4() -> Arc<GeneratorSet> {
        GeneratorSet::new(&["h1", "h2", "h3", "h4"]).unwrap()
    }

    fn gen(s: &Arc<GeneratorSet>, n: &str) -> GrassmannPoly {
        GrassmannPoly::generator(s, n).unwrap()
    }

    #[test]
    fn generators_anticommute_and_square_to_zero() {
        let s = set4();
        let (a, b) = (gen(&s, "h1"), gen(&s, "h3"));
        assert_eq!(&a * &b, -&(&b * &a));
        assert!((&a * &a).is_zero());
    }

    #[test]
    fn ordered_product_sign() {
        let s = set4();
        let p = GrassmannPoly::monomial(&s, &["h3", "h1", "h2"], c(1.0)).unwrap();
        // h3 h1 h2 = h1 h2 h3 after two swaps
        assert_eq!(p.coefficient(&["h1", "h2", "h3"]).unwrap(), c(1.0));
        assert_eq!(p.coefficient(&["h2", "h1", "h3"]).unwrap(), c(-1.0));
    }

    #[test]
    fn left_and_right_derivatives_of_pair() {
        let s = set4();
        let p = GrassmannPoly::monomial(&s, &["h1", "h2"], c(1.0)).unwrap();
        assert_eq!(p.derive("h2", Side::Left).unwrap(), -&gen(&s, "h1"));
        assert_eq!(p.derive("h2", Side::Right).unwrap(), gen(&s, "h1"));
        assert_eq!(p.derive("h1", Side::Left).unwrap(), gen(&s, "h2"));
        assert_eq!(p.derive("h1", Side::Right).unwrap(), -&gen(&s, "h2"));
    }

    #[test]
    fn berezin_rules() {
        let s = set4();
        let one = GrassmannPoly::one(&s);
        assert!(one.integrate_berezin(&["h1"]).unwrap().is_zero());
        assert_eq!(gen(&s, "h1").integrate_berezin(&["h1"]).unwrap(), one);
        let p = GrassmannPoly::monomial(&s, &["h2", "h1"], c(1.0)).unwrap();
        assert_eq!(p.integrate_berezin(&["h1", "h2"]).unwrap(), one);
        assert_eq!(gen(&s, "h1").integrate_right("h1").unwrap(), -&one);
        assert_eq!(
            p.integrate_berezin(&["h1", "h1"]).unwrap_err(),
            GrassmannError::DuplicateGenerator("h1".into())
        );
    }

    #[test]
    fn nested_pairs_integrate_to_one() {
        let s = GeneratorSet::new(&["a1", "a2", "b2", "b1"]).unwrap();
        let p = GrassmannPoly::monomial(&s, &["a1", "a2", "b2", "b1"], c(1.0)).unwrap();
        let r = p.integrate_berezin(&["b2", "a2", "b1", "a1"]).unwrap();
        assert_eq!(r, GrassmannPoly::one(&s));
    }

    #[test]
    fn conjugation_reverses_order() {
        let s = GeneratorSet::two_mode_doubled();
        let p = GrassmannPoly::monomial(&s, &["g1", "g2"], C64::new(0.0, 2.0)).unwrap();
        let expect = GrassmannPoly::monomial(&s, &["g2s", "g1s"], C64::new(0.0, -2.0)).unwrap();
        assert_eq!(p.conjugate().unwrap(), expect);
        assert_eq!(p.conjugate().unwrap().conjugate().unwrap(), p);
    }

    #[test]
    fn conjugation_needs_pairing() {
        let s = set4();
        assert_eq!(gen(&s, "h1").conjugate().unwrap_err(), GrassmannError::MissingStarPairing);
    }

    #[test]
    fn mixing_sets_is_rejected() {
        let a = gen(&set4(), "h1");
        let b = gen(&GeneratorSet::new(&["x"]).unwrap(), "x");
        assert_eq!(a.try_mul(&b).unwrap_err(), GrassmannError::MismatchedGenerators);
    }

    #[test]
    fn parity_classes() {
        let s = set4();
        assert_eq!(GrassmannPoly::zero(&s).parity(), Parity::Even);
        assert_eq!(gen(&s, "h2").parity(), Parity::Odd);
        let mixed = &GrassmannPoly::one(&s) + &gen(&s, "h2");
        assert_eq!(mixed.parity(), Parity::Mixed);
        assert_eq!(&mixed.even_part() + &mixed.odd_part(), mixed);
    }

    #[test]
    fn exp_and_inverse_of_even_pair() {
        let s = set4();
        let x = GrassmannPoly::monomial(&s, &["h1", "h2"], c(1.0)).unwrap();
        let y = GrassmannPoly::monomial(&s, &["h3", "h4"], c(1.0)).unwrap();
        let sum = &x + &y;
        let e = sum.exp();
        let expect = &(&GrassmannPoly::one(&s) + &x) * &(&GrassmannPoly::one(&s) + &y);
        assert!(e.approx_eq(&expect, 1e-15));
        let inv = e.inverse().unwrap();
        assert!((&inv * &e).approx_eq(&GrassmannPoly::one(&s), 1e-15));
        assert!(x.inverse().is_err());
    }

    #[test]
    fn text_form_is_sorted() {
        let s = set4();
        let p = &GrassmannPoly::monomial(&s, &["h1", "h3"], c(2.0)).unwrap() + &gen(&s, "h4");
        let t = p.to_text();
        let lines: Vec<_> = t.lines().collect();
        assert!(lines[0].ends_with("* h4"));
        assert!(lines[1].ends_with("* h1 h3"));
    }

    fn arb_poly(n: usize) -> impl Strategy<Value = Vec<(u32, f64, f64)>> {
        prop::collection::vec((0u32..(1 << n), -1.0f64..1.0, -1.0f64..1.0), 0..6)
    }

    fn build(s: &Arc<GeneratorSet>, t: Vec<(u32, f64, f64)>) -> GrassmannPoly {
        GrassmannPoly::from_terms(s, t.into_iter().map(|(m, a, b)| (m, C64::new(a, b))))
    }

    proptest! {
        #[test]
        fn product_is_associative(a in arb_poly(6), b in arb_poly(6), d in arb_poly(6)) {
            let s = GeneratorSet::new(&["a", "b", "c", "d", "e", "f"]).unwrap();
            let (a, b, d) = (build(&s, a), build(&s, b), build(&s, d));
            let l = &(&a * &b) * &d;
            let r = &a * &(&b * &d);
            prop_assert!(l.max_abs_diff(&r) < 1e-12);
        }

        #[test]
        fn homogeneous_elements_supercommute(a in arb_poly(6), b in arb_poly(6)) {
            let s = GeneratorSet::new(&["a", "b", "c", "d", "e", "f"]).unwrap();
            let (a, b) = (build(&s, a), build(&s, b));
            let (ao, bo) = (a.odd_part(), b.odd_part());
            prop_assert!((&(&ao * &bo) + &(&bo * &ao)).max_abs() < 1e-12);
            let ae = a.even_part();
            prop_assert!((&(&ae * &b) - &(&b * &ae)).max_abs() < 1e-12);
        }

        #[test]
        fn single_integral_is_left_derivative(a in arb_poly(6), k in 0usize..6) {
            let s = GeneratorSet::new(&["a", "b", "c", "d", "e", "f"]).unwrap();
            let a = build(&s, a);
            let name = s.name(k).to_string();
            prop_assert_eq!(a.integrate_berezin(&[&name]).unwrap(), a.derive(&name, Side::Left).unwrap());
        }

        #[test]
        fn conjugation_is_antimultiplicative(a in arb_poly(8), b in arb_poly(8)) {
            let s = GeneratorSet::two_mode_doubled();
            let (a, b) = (build(&s, a), build(&s, b));
            let l = (&a * &b).conjugate().unwrap();
            let r = &b.conjugate().unwrap() * &a.conjugate().unwrap();
            prop_assert!(l.max_abs_diff(&r) < 1e-12);
        }
    }
}
