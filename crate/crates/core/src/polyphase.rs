//! Exact multivariate polynomial phases.
//!
//! [`PolyPhase`] stores a polynomial with arbitrary-precision rational
//! coefficients keyed by exponent vector. All symbolic work (gradients,
//! Hessian determinants, Newton polygons, rescalings) happens here; the
//! quadrature side works on the binary64 image [`FloatPoly`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

pub type Rational = BigRational;

/// Build a rational from a numerator/denominator pair.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Exact conversion of a finite binary64 value.
pub fn rat_from_f64(v: f64) -> Result<Rational> {
    Rational::from_float(v).ok_or_else(|| Error::Invalid(format!("non-finite value {v}")))
}

/// Correctly rounded conversion to binary64.
pub fn rat_to_f64(v: &Rational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Exponent vector, ordered graded-lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Exponent(pub Vec<u32>);

impl Exponent {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A single nonzero term `coefficient · x^exponents`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub exponents: Exponent,
    pub coefficient: Rational,
}

/// Polynomial in `dimension` variables with exact rational coefficients.
///
/// Zero coefficients are never stored and each exponent vector appears at
/// most once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyPhase {
    dim: usize,
    terms: BTreeMap<Exponent, Rational>,
}

impl PolyPhase {
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "polynomial dimension must be at least 1");
        PolyPhase { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: Rational) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// The coordinate function `x_i` (zero-based).
    pub fn var(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        let mut p = Self::zero(dim);
        p.add_term(e, Rational::one());
        p
    }

    pub fn monomial(exponents: Vec<u32>, c: Rational) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    /// Collects terms, summing repeated exponents and dropping zeros.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        if dim == 0 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        let mut p = Self::zero(dim);
        for (e, c) in terms {
            if e.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: e.len() });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// Convenience constructor from integer coefficients; panics on a
    /// dimension mismatch, so it is meant for literals.
    pub fn from_int_terms(dim: usize, terms: &[(&[u32], i64)]) -> Self {
        Self::from_terms(dim, terms.iter().map(|(e, c)| (e.to_vec(), rat_int(*c))))
            .expect("literal polynomial")
    }

    fn add_term(&mut self, e: Vec<u32>, c: Rational) {
        if c.is_zero() {
            return;
        }
        let key = Exponent(e);
        let remove = match self.terms.get_mut(&key) {
            Some(v) => {
                *v += c;
                v.is_zero()
            }
            None => {
                self.terms.insert(key, c);
                false
            }
        };
        if remove {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in graded-lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Rational)> {
        self.terms.iter().map(|(e, c)| (e.0.as_slice(), c))
    }

    pub fn monomials(&self) -> Vec<Monomial> {
        self.terms
            .iter()
            .map(|(e, c)| Monomial { exponents: e.clone(), coefficient: c.clone() })
            .collect()
    }

    pub fn coefficient(&self, e: &[u32]) -> Rational {
        self.terms.get(&Exponent(e.to_vec())).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Exponent::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.dim);
        }
        PolyPhase {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.dim, Rational::one());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    fn check_point(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: len });
        }
        Ok(())
    }

    /// Exact value at a rational point.
    pub fn eval_exact(&self, x: &[Rational]) -> Result<Rational> {
        self.check_point(x.len())?;
        let mut total = Rational::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (xi, &k) in x.iter().zip(&e.0) {
                if k > 0 {
                    term *= num_traits::pow(xi.clone(), k as usize);
                }
            }
            total += term;
        }
        Ok(total)
    }

    /// Correctly rounded value at a binary64 point: the point is converted
    /// exactly, evaluated in rational arithmetic and rounded once.
    pub fn eval_f64(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x.len())?;
        let xr = x.iter().map(|&v| rat_from_f64(v)).collect::<Result<Vec<_>>>()?;
        Ok(rat_to_f64(&self.eval_exact(&xr)?))
    }

    /// Exact partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            let k = e.0[i];
            if k == 0 {
                continue;
            }
            let mut ne = e.0.clone();
            ne[i] -= 1;
            out.add_term(ne, c * rat_int(k as i64));
        }
        out
    }

    pub fn gradient(&self) -> Vec<PolyPhase> {
        (0..self.dim).map(|i| self.derivative(i)).collect()
    }

    /// Symmetric matrix of second partial derivatives.
    pub fn hessian(&self) -> Vec<Vec<PolyPhase>> {
        let g = self.gradient();
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| g[i].derivative(j)).collect())
            .collect()
    }

    /// Exact Hessian determinant `∂₁₁P·∂₂₂P − (∂₁₂P)²` (or `P''` in one
    /// variable). For more variables use [`PolyPhase::hessian_det_evaluator`].
    pub fn hessian_det(&self) -> Result<PolyPhase> {
        match self.dim {
            1 => Ok(self.derivative(0).derivative(0)),
            2 => {
                let h = self.hessian();
                Ok(&(&h[0][0] * &h[1][1]) - &(&h[0][1] * &h[1][0]))
            }
            n => Err(Error::Invalid(format!(
                "exact Hessian determinant is only built for n <= 2 (n = {n}); use the pointwise evaluator"
            ))),
        }
    }

    /// Hessian determinant as an exact polynomial when `n <= 2`, otherwise a
    /// pointwise evaluator over the binary64 Hessian entries.
    pub fn hessian_det_evaluator(&self) -> HessianDeterminant {
        match self.hessian_det() {
            Ok(p) => HessianDeterminant::Exact(p),
            Err(_) => HessianDeterminant::Pointwise(
                self.hessian()
                    .iter()
                    .map(|row| row.iter().map(PolyPhase::to_float).collect())
                    .collect(),
            ),
        }
    }

    /// Substitutes `x = A y + b`, returning the polynomial in `y`.
    pub fn compose_affine(&self, a: &[Vec<Rational>], b: &[Rational]) -> Result<PolyPhase> {
        if a.len() != self.dim || b.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: a.len() });
        }
        let m = a.first().map(Vec::len).unwrap_or(0);
        if m == 0 || a.iter().any(|r| r.len() != m) {
            return Err(Error::Invalid("affine map must be rectangular".into()));
        }
        let lin: Vec<PolyPhase> = (0..self.dim)
            .map(|i| {
                let mut p = PolyPhase::constant(m, b[i].clone());
                for (j, aij) in a[i].iter().enumerate() {
                    p = &p + &PolyPhase::var(m, j).scale(aij);
                }
                p
            })
            .collect();
        let mut out = PolyPhase::zero(m);
        for (e, c) in &self.terms {
            let mut term = PolyPhase::constant(m, c.clone());
            for (l, &k) in lin.iter().zip(&e.0) {
                if k > 0 {
                    term = &term * &l.pow(k);
                }
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// `P(c₁x₁, …, cₙxₙ)`.
    pub fn scale_vars(&self, c: &[Rational]) -> Result<PolyPhase> {
        self.check_point(c.len())?;
        let mut out = PolyPhase::zero(self.dim);
        for (e, v) in &self.terms {
            let mut f = v.clone();
            for (ci, &k) in c.iter().zip(&e.0) {
                f *= num_traits::pow(ci.clone(), k as usize);
            }
            out.add_term(e.0.clone(), f);
        }
        Ok(out)
    }

    /// Coefficients (ascending in `s`) of `s ↦ P(p + s·d)`.
    pub fn restrict_to_line(&self, p: &[Rational], d: &[Rational]) -> Result<Vec<Rational>> {
        self.check_point(p.len())?;
        self.check_point(d.len())?;
        let terms = self.terms.iter().map(|(e, c)| (e.0.as_slice(), c.clone()));
        Ok(restrict_terms(terms, p, d, self.degree() as usize))
    }

    pub fn to_float(&self) -> FloatPoly {
        FloatPoly::new(
            self.dim,
            self.terms.iter().map(|(e, c)| (e.0.clone(), rat_to_f64(c))).collect(),
        )
    }

    /// Serializable form.
    pub fn to_file(&self) -> Result<PhaseFile> {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let num = c.numer().to_i64();
                let den = c.denom().to_i64();
                match (num, den) {
                    (Some(num), Some(den)) => Ok(PhaseTerm { exp: e.0.clone(), num, den }),
                    _ => Err(Error::PhaseFile(format!(
                        "coefficient {c} does not fit the 64-bit phase file format"
                    ))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PhaseFile { dimension: self.dim, terms })
    }

    pub fn from_file(f: &PhaseFile) -> Result<Self> {
        if f.dimension == 0 {
            return Err(Error::PhaseFile("dimension must be at least 1".into()));
        }
        let mut terms = Vec::with_capacity(f.terms.len());
        for (idx, t) in f.terms.iter().enumerate() {
            if t.den == 0 {
                return Err(Error::PhaseFile(format!("term {idx}: zero denominator")));
            }
            if t.exp.len() != f.dimension {
                return Err(Error::PhaseFile(format!(
                    "term {idx}: exponent length {} but dimension {}",
                    t.exp.len(),
                    f.dimension
                )));
            }
            terms.push((t.exp.clone(), rat(t.num, t.den)));
        }
        Self::from_terms(f.dimension, terms)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&self.to_file()?).map_err(|e| Error::PhaseFile(e.to_string()))
    }

    /// Parses the JSON phase format; errors carry line and column.
    pub fn from_json(s: &str) -> Result<Self> {
        let f: PhaseFile = serde_json::from_str(s).map_err(|e| {
            Error::PhaseFile(format!("{} at line {} column {}", e, e.line(), e.column()))
        })?;
        Self::from_file(&f)
    }
}

/// Expands `Σ c·Π (pᵢ + s dᵢ)^{kᵢ}` into ascending coefficients in `s`.
/// Shared by the exact and binary64 paths.
pub(crate) fn restrict_terms<'a, T, I>(terms: I, p: &[T], d: &[T], degree: usize) -> Vec<T>
where
    T: Clone + Zero + One + std::ops::Mul<Output = T> + std::ops::Add<Output = T>,
    I: Iterator<Item = (&'a [u32], T)>,
{
    let mut out = vec![T::zero(); degree + 1];
    for (e, c) in terms {
        let mut acc = vec![c];
        for (i, &k) in e.iter().enumerate() {
            for _ in 0..k {
                // multiply acc by (p_i + s d_i)
                let mut next = vec![T::zero(); acc.len() + 1];
                for (j, a) in acc.iter().enumerate() {
                    next[j] = next[j].clone() + a.clone() * p[i].clone();
                    next[j + 1] = next[j + 1].clone() + a.clone() * d[i].clone();
                }
                acc = next;
            }
        }
        for (j, a) in acc.into_iter().enumerate() {
            out[j] = out[j].clone() + a;
        }
    }
    out
}

impl Add for &PolyPhase {
    type Output = PolyPhase;
    fn add(self, rhs: &PolyPhase) -> PolyPhase {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in polynomial sum");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.0.clone(), c.clone());
        }
        out
    }
}

impl Sub for &PolyPhase {
    type Output = PolyPhase;
    fn sub(self, rhs: &PolyPhase) -> PolyPhase {
        self + &(-rhs)
    }
}

impl Neg for &PolyPhase {
    type Output = PolyPhase;
    fn neg(self) -> PolyPhase {
        PolyPhase {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }
}

impl Mul for &PolyPhase {
    type Output = PolyPhase;
    fn mul(self, rhs: &PolyPhase) -> PolyPhase {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in polynomial product");
        let mut out = PolyPhase::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.0.iter().zip(&eb.0).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for PolyPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let vars: Vec<String> = e
                .0
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, k) })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", mag, vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// On-disk phase description:
/// `{"dimension": n, "terms": [{"exp": [...], "num": int, "den": int}]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseFile {
    pub dimension: usize,
    pub terms: Vec<PhaseTerm>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseTerm {
    pub exp: Vec<u32>,
    pub num: i64,
    pub den: i64,
}

/// Hessian determinant in whichever form the dimension allows.
#[derive(Clone, Debug)]
pub enum HessianDeterminant {
    Exact(PolyPhase),
    Pointwise(Vec<Vec<FloatPoly>>),
}

impl HessianDeterminant {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            HessianDeterminant::Exact(p) => p.to_float().eval(x),
            HessianDeterminant::Pointwise(h) => {
                let n = h.len();
                let m = nalgebra::DMatrix::from_fn(n, n, |i, j| h[i][j].eval(x));
                m.determinant()
            }
        }
    }
}

const FAST_POW: usize = 24;

/// Binary64 image of a polynomial, used inside quadrature loops.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatPoly {
    dim: usize,
    terms: Vec<(Vec<u32>, f64)>,
    max_exp: u32,
}

impl FloatPoly {
    pub fn new(dim: usize, terms: Vec<(Vec<u32>, f64)>) -> Self {
        let terms: Vec<_> = terms.into_iter().filter(|(_, c)| *c != 0.0).collect();
        let max_exp = terms.iter().flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0);
        FloatPoly { dim, terms, max_exp }
    }

    pub fn zero(dim: usize) -> Self {
        FloatPoly { dim, terms: Vec::new(), max_exp: 0 }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        if self.dim == 2 {
            return self.eval2(x[0], x[1]);
        }
        self.terms
            .iter()
            .map(|(e, c)| e.iter().zip(x).fold(*c, |acc, (&k, &xi)| acc * xi.powi(k as i32)))
            .sum()
    }

    /// Two-variable evaluation with tabulated powers.
    #[inline]
    pub fn eval2(&self, x1: f64, x2: f64) -> f64 {
        if (self.max_exp as usize) < FAST_POW {
            let mut p1 = [1.0f64; FAST_POW];
            let mut p2 = [1.0f64; FAST_POW];
            for k in 1..=self.max_exp as usize {
                p1[k] = p1[k - 1] * x1;
                p2[k] = p2[k - 1] * x2;
            }
            let mut s = 0.0;
            for (e, c) in &self.terms {
                s += c * p1[e[0] as usize] * p2[e[1] as usize];
            }
            s
        } else {
            self.terms
                .iter()
                .map(|(e, c)| c * x1.powi(e[0] as i32) * x2.powi(e[1] as i32))
                .sum()
        }
    }

    pub fn derivative(&self, i: usize) -> FloatPoly {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[i] > 0)
            .map(|(e, c)| {
                let mut ne = e.clone();
                ne[i] -= 1;
                (ne, c * e[i] as f64)
            })
            .collect();
        FloatPoly::new(self.dim, terms)
    }

    pub fn gradient(&self) -> Vec<FloatPoly> {
        (0..self.dim).map(|i| self.derivative(i)).collect()
    }

    pub fn hessian(&self) -> Vec<Vec<FloatPoly>> {
        let g = self.gradient();
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| g[i].derivative(j)).collect())
            .collect()
    }

    /// `c · P(s₁x₁, …, sₙxₙ)`.
    pub fn rescaled(&self, c: f64, s: &[f64]) -> FloatPoly {
        let terms = self
            .terms
            .iter()
            .map(|(e, v)| {
                let f = e.iter().zip(s).fold(c * v, |acc, (&k, &si)| acc * si.powi(k as i32));
                (e.clone(), f)
            })
            .collect();
        FloatPoly::new(self.dim, terms)
    }

    /// `d ↦ P(p + d)`.
    pub fn shifted(&self, p: &[f64]) -> FloatPoly {
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (e, c) in &self.terms {
            // expand Π (pᵢ + dᵢ)^{eᵢ} one axis at a time
            let mut partial: Vec<(Vec<u32>, f64)> = vec![(Vec::with_capacity(self.dim), *c)];
            for (&k, &pi) in e.iter().zip(p) {
                let mut next = Vec::with_capacity(partial.len() * (k as usize + 1));
                let mut binom = 1.0;
                for j in 0..=k {
                    let w = binom * pi.powi((k - j) as i32);
                    for (pe, pc) in &partial {
                        let mut ne = pe.clone();
                        ne.push(j);
                        next.push((ne, pc * w));
                    }
                    binom = binom * (k - j) as f64 / (j + 1) as f64;
                }
                partial = next;
            }
            for (ne, nc) in partial {
                *acc.entry(ne).or_insert(0.0) += nc;
            }
        }
        FloatPoly::new(self.dim, acc.into_iter().collect())
    }

    /// Multiplies each homogeneous part of degree `m` by `weights[m]`.
    pub fn radially_weighted(&self, weights: impl Fn(u32) -> f64) -> FloatPoly {
        let terms = self.terms.iter().map(|(e, v)| (e.clone(), v * weights(e.iter().sum()))).collect();
        FloatPoly::new(self.dim, terms)
    }

    pub fn scale(&self, c: f64) -> FloatPoly {
        FloatPoly::new(self.dim, self.terms.iter().map(|(e, v)| (e.clone(), c * v)).collect())
    }

    /// `self + c·x_i`, used to add a linear `ξ·x` term.
    pub fn plus_linear(&self, coeffs: &[f64]) -> FloatPoly {
        let mut terms = self.terms.clone();
        for (i, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0; self.dim];
            e[i] = 1;
            match terms.iter_mut().find(|(te, _)| *te == e) {
                Some(t) => t.1 += c,
                None => terms.push((e, c)),
            }
        }
        FloatPoly::new(self.dim, terms)
    }

    pub fn add(&self, other: &FloatPoly) -> FloatPoly {
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            match terms.iter_mut().find(|(te, _)| te == e) {
                Some(t) => t.1 += c,
                None => terms.push((e.clone(), *c)),
            }
        }
        FloatPoly::new(self.dim, terms)
    }

    pub fn mul(&self, other: &FloatPoly) -> FloatPoly {
        let mut terms: Vec<(Vec<u32>, f64)> = Vec::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                match terms.iter_mut().find(|(te, _)| *te == e) {
                    Some(t) => t.1 += ca * cb,
                    None => terms.push((e, ca * cb)),
                }
            }
        }
        FloatPoly::new(self.dim, terms)
    }

    /// Enclosure of the range over a box (natural interval extension, each
    /// monomial bounded with exact power ranges).
    pub fn range(&self, bx: &[Interval]) -> Interval {
        debug_assert_eq!(bx.len(), self.dim);
        let mut acc = Interval::point(0.0);
        for (e, c) in &self.terms {
            let mut t = Interval::point(*c);
            for (&k, iv) in e.iter().zip(bx) {
                if k > 0 {
                    t = t * iv.powi(k);
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Sum of |c|·|x^e| bounds; a cheap magnitude scale for relative tests.
    pub fn abs_bound(&self, bx: &[Interval]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter().zip(bx).fold(c.abs(), |acc, (&k, iv)| acc * iv.mag().powi(k as i32))
            })
            .sum()
    }

    /// Ascending coefficients of `s ↦ P(p + s d)`.
    pub fn restrict_to_line(&self, p: &[f64], d: &[f64]) -> Vec<f64> {
        let terms = self.terms.iter().map(|(e, c)| (e.as_slice(), *c));
        restrict_terms(terms, p, d, self.degree() as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cusp() -> PolyPhase {
        // (x2 + x1^2)^2
        PolyPhase::from_int_terms(2, &[(&[0, 2], 1), (&[2, 1], 2), (&[4, 0], 1)])
    }

    #[test]
    fn eval_examples() {
        let p = cusp();
        assert_eq!(p.eval_exact(&[rat_int(1), rat_int(-1)]).unwrap(), rat_int(0));
        let cubic = PolyPhase::from_int_terms(2, &[(&[3, 0], 1), (&[0, 3], 1)]);
        assert_eq!(cubic.eval_exact(&[rat_int(1), rat_int(2)]).unwrap(), rat_int(9));
        // (1/4 + 1/4)^2
        assert_eq!(p.eval_exact(&[rat(1, 2), rat(1, 4)]).unwrap(), rat(1, 4));
        assert_eq!(p.eval_f64(&[0.5, 0.25]).unwrap(), 0.25);
    }

    #[test]
    fn eval_rejects_wrong_dimension() {
        let err = cusp().eval_exact(&[rat_int(1)]).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, got: 1 });
        assert!(cusp().eval_f64(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let cubic = PolyPhase::from_int_terms(2, &[(&[3, 0], 1), (&[0, 3], 1)]);
        let g = cubic.gradient();
        assert_eq!(g[0], PolyPhase::from_int_terms(2, &[(&[2, 0], 3)]));
        assert_eq!(g[1], PolyPhase::from_int_terms(2, &[(&[0, 2], 3)]));

        let c = PolyPhase::constant(2, rat(7, 3));
        assert!(c.gradient().iter().all(PolyPhase::is_zero));

        // 4 x1 (x2 + x1^2), 2 (x2 + x1^2)
        let g = cusp().gradient();
        let w = PolyPhase::from_int_terms(2, &[(&[0, 1], 1), (&[2, 0], 1)]);
        assert_eq!(g[0], &PolyPhase::from_int_terms(2, &[(&[1, 0], 4)]) * &w);
        assert_eq!(g[1], w.scale(&rat_int(2)));
    }

    #[test]
    fn hessian_det_examples() {
        let w = PolyPhase::from_int_terms(2, &[(&[0, 1], 1), (&[2, 0], 1)]);
        assert_eq!(cusp().hessian_det().unwrap(), w.scale(&rat_int(8)));
        let cubic = PolyPhase::from_int_terms(2, &[(&[3, 0], 1), (&[0, 3], 1)]);
        assert_eq!(cubic.hessian_det().unwrap(), PolyPhase::from_int_terms(2, &[(&[1, 1], 36)]));
        let q = PolyPhase::from_terms(2, vec![(vec![2, 0], rat(1, 2)), (vec![0, 2], rat(1, 2))]).unwrap();
        assert_eq!(q.hessian_det().unwrap(), PolyPhase::constant(2, rat_int(1)));
    }

    #[test]
    fn hessian_det_pointwise_in_three_variables() {
        // x1^2 + x2^2 x3 + x3^3
        let p = PolyPhase::from_int_terms(3, &[(&[2, 0, 0], 1), (&[0, 2, 1], 1), (&[0, 0, 3], 1)]);
        assert!(p.hessian_det().is_err());
        let det = p.hessian_det_evaluator();
        assert!(matches!(det, HessianDeterminant::Pointwise(_)));
        // Hess = [[2,0,0],[0,2x3,2x2],[0,2x2,6x3]] at (0,1,2): 2*(4*12 - 4) = 88
        assert!((det.eval(&[0.0, 1.0, 2.0]) - 88.0).abs() < 1e-12);
    }

    #[test]
    fn affine_composition_matches_pointwise() {
        let p = cusp();
        let a = vec![vec![rat_int(2), rat(1, 3)], vec![rat_int(0), rat_int(-1)]];
        let b = vec![rat(1, 2), rat_int(3)];
        let q = p.compose_affine(&a, &b).unwrap();
        let y = [rat(3, 7), rat(-2, 5)];
        let x = [
            &a[0][0] * &y[0] + &a[0][1] * &y[1] + &b[0],
            &a[1][0] * &y[0] + &a[1][1] * &y[1] + &b[1],
        ];
        assert_eq!(q.eval_exact(&y).unwrap(), p.eval_exact(&x).unwrap());
    }

    #[test]
    fn line_restriction_matches_eval() {
        let p = cusp();
        let pt = [rat(1, 3), rat(-1, 2)];
        let d = [rat(2, 5), rat(3, 4)];
        let coeffs = p.restrict_to_line(&pt, &d).unwrap();
        let s = rat(5, 7);
        let mut v = Rational::zero();
        for c in coeffs.iter().rev() {
            v = v * &s + c;
        }
        let x = [&pt[0] + &s * &d[0], &pt[1] + &s * &d[1]];
        assert_eq!(v, p.eval_exact(&x).unwrap());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let p = PolyPhase::from_terms(
            2,
            vec![(vec![0, 2], rat(-3, 7)), (vec![2, 1], rat(2, 1)), (vec![4, 0], rat(1, 1_000_003))],
        )
        .unwrap();
        let s = p.to_json().unwrap();
        let back = PolyPhase::from_json(&s).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_json().unwrap(), s);
        // graded-lex order: lower degree first
        assert!(s.find("[0,2]").unwrap() < s.find("[2,1]").unwrap());
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = PolyPhase::from_json("{\"dimension\": 2,\n \"terms\": [ {\"exp\": [1], \"num\": 1, \"den\": 1} ]}")
            .unwrap_err();
        assert!(matches!(err, Error::PhaseFile(_)));
        let err = PolyPhase::from_json("{\"dimension\": 2,\n \"terms\": [ oops ]}").unwrap_err();
        let Error::PhaseFile(msg) = err else { panic!() };
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(cusp().to_string(), "x1^4 + 2*x1^2*x2 + x2^2");
    }

    #[test]
    fn float_range_encloses_samples() {
        let f = cusp().to_float();
        let bx = [Interval::new(-0.3, 0.7), Interval::new(-0.5, 0.1)];
        let r = f.range(&bx);
        for i in 0..=10 {
            for j in 0..=10 {
                let x = -0.3 + i as f64 * 0.1;
                let y = -0.5 + j as f64 * 0.06;
                let v = f.eval2(x, y);
                assert!(r.lo <= v && v <= r.hi);
            }
        }
    }

    #[test]
    fn shifted_polynomial_agrees_pointwise() {
        let f = cusp().to_float();
        let g = f.shifted(&[0.3, -0.7]);
        for &(a, b) in &[(0.0, 0.0), (0.2, -0.1), (-1.0, 0.5)] {
            assert!((g.eval(&[a, b]) - f.eval(&[0.3 + a, -0.7 + b])).abs() < 1e-14);
        }
        assert_eq!(f.shifted(&[0.0, 0.0]).terms().len(), f.terms().len());
    }
}
