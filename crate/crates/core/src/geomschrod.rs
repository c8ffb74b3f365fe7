//! The Schrödinger-type operator attached to a nondegenerate critical point.
//!
//! For a phase `Φ` with a nondegenerate critical point `p` in flat `ℝⁿ`, the
//! weighted Hessians
//!
//! ```text
//! ∇²_σΦ(q) = σ ∫₀¹ (1−s)^{σ−1} Hess Φ(p + s(q−p)) ds
//! ```
//!
//! define `a = (∇²₁Φ)⁻¹ ∇²₂Φ (∇²₁Φ)⁻¹`, the operator `□₀f = tr(a ∇²f)`, the
//! gauge `η(q) = ∫₀¹ (n − □₀Φ(p + s(q−p))) ds/s` and `b = (∇²₁Φ)⁻¹∇η`. Then
//! `□f = tr(a∇²f) + b·∇f` annihilates `(∂_t − (i/2)□) t^{−n/2}e^{i(Φ−Φ(p))/t}`.
//!
//! The stationary-phase coefficients of `t^{−n/2}∫e^{i(Φ−Φ(p))/t}ψ dμ` are
//!
//! ```text
//! c_ℓ = (2π)^{n/2} e^{iπω/4} μ(p)/√|det Hess Φ(p)| · (i/2)^ℓ/ℓ! · (□*)^ℓψ(p)
//! ```
//!
//! with `□*` the real transpose of `□` with respect to `μ`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::bump::Amplitude;
use crate::error::{Error, Result};
use crate::gauss::{integrate_adaptive, GaussLegendre};
use crate::interval::Interval;
use crate::polyphase::{rat_int, FloatPoly, PolyPhase, Rational};

/// Highest power of `□*` the nested stencils support.
pub const ADJOINT_BUDGET: usize = 4;

/// Smooth positive density of the measure `μ`.
pub type Density = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint {
    pub point: Vec<f64>,
    pub hessian: DMatrix<f64>,
    /// Positive minus negative eigenvalue count.
    pub signature: i32,
    pub det: f64,
}

impl CriticalPoint {
    /// Checks `∇Φ(p) ≈ 0` and `det Hess Φ(p) ≠ 0`.
    pub fn new(phi: &PolyPhase, p: &[f64]) -> Result<Self> {
        let n = phi.dimension();
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        let f = phi.to_float();
        let here: Vec<Interval> = p.iter().map(|&v| Interval::point(v)).collect();
        for g in f.gradient() {
            let scale = g.abs_bound(&here).max(1.0);
            if g.eval(p).abs() > 1e-10 * scale {
                return Err(Error::Invalid(format!("{p:?} is not a critical point of the phase")));
            }
        }
        let hessian = float_hessian(&f.hessian(), p);
        let det = hessian.determinant();
        let scale = hessian.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        if det.abs() <= 1e-12 * scale.powi(n as i32) {
            return Err(Error::DegenerateCriticalPoint { det, point: p.to_vec() });
        }
        let eig = hessian.clone().symmetric_eigen();
        let signature = eig.eigenvalues.iter().map(|&l| if l > 0.0 { 1 } else { -1 }).sum();
        Ok(CriticalPoint { point: p.to_vec(), hessian, signature, det })
    }
}

fn float_hessian(h: &[Vec<FloatPoly>], x: &[f64]) -> DMatrix<f64> {
    let n = h.len();
    DMatrix::from_fn(n, n, |i, j| h[i][j].eval(x))
}

/// `σ∫₀¹(1−s)^{σ−1}s^m ds = Π_{i=1}^m i/(σ+i)`.
fn beta_moment_exact(m: usize, sigma: &Rational) -> Rational {
    (1..=m).fold(Rational::one(), |acc, i| acc * rat_int(i as i64) / (sigma + rat_int(i as i64)))
}

fn beta_moments(m: usize, sigma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(m + 1);
    let mut acc = 1.0;
    out.push(acc);
    for i in 1..=m {
        acc *= i as f64 / (sigma + i as f64);
        out.push(acc);
    }
    out
}

/// Weighted Hessian in exact rational arithmetic.
pub fn weighted_hessian_exact(
    phi: &PolyPhase,
    p: &[Rational],
    sigma: &Rational,
    q: &[Rational],
) -> Result<Vec<Vec<Rational>>> {
    let n = phi.dimension();
    if p.len() != n || q.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len().min(q.len()) });
    }
    if *sigma <= Rational::zero() {
        return Err(Error::Invalid("weight exponent must be positive".into()));
    }
    let d: Vec<Rational> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    let hess = phi.hessian();
    let mut out = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let coeffs = hess[i][j].restrict_to_line(p, &d)?;
            let v: Rational = coeffs
                .iter()
                .enumerate()
                .map(|(m, c)| c * beta_moment_exact(m, sigma))
                .fold(Rational::zero(), |a, b| a + b);
            out[j][i] = v.clone();
            out[i][j] = v;
        }
    }
    Ok(out)
}

fn weighted_hessian_float(hess: &[Vec<FloatPoly>], p: &[f64], sigma: f64, q: &[f64]) -> DMatrix<f64> {
    let n = hess.len();
    let d: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let coeffs = hess[i][j].restrict_to_line(p, &d);
            let mom = beta_moments(coeffs.len(), sigma);
            let v: f64 = coeffs.iter().zip(&mom).map(|(c, w)| c * w).sum();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Weighted Hessian of a polynomial phase (Beta moments of the restriction).
pub fn weighted_hessian(phi: &PolyPhase, p: &[f64], sigma: f64, q: &[f64]) -> Result<DMatrix<f64>> {
    let n = phi.dimension();
    if p.len() != n || q.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len().min(q.len()) });
    }
    if !(sigma > 0.0) {
        return Err(Error::Invalid("weight exponent must be positive".into()));
    }
    Ok(weighted_hessian_float(&phi.to_float().hessian(), p, sigma, q))
}

/// Weighted Hessian of a general phase given its Hessian evaluator, by
/// adaptive quadrature after substituting `v = (1−s)^σ`.
pub fn weighted_hessian_fn(
    hess: &(dyn Fn(&[f64]) -> DMatrix<f64> + Sync),
    p: &[f64],
    sigma: f64,
    q: &[f64],
    tol: f64,
) -> DMatrix<f64> {
    let n = p.len();
    let point = |v: f64| -> Vec<f64> {
        let s = 1.0 - v.powf(1.0 / sigma);
        p.iter().zip(q).map(|(a, b)| a + s * (b - a)).collect()
    };
    DMatrix::from_fn(n, n, |i, j| integrate_adaptive(0.0, 1.0, tol, 30, &|v: f64| hess(&point(v))[(i, j)]).0)
}

/// `a` and `b` at one point, with the density value.
#[derive(Clone, Debug)]
struct Coeff {
    a: DMatrix<f64>,
    b: DVector<f64>,
    mu: f64,
}

pub struct SchrodOperator {
    phase: PolyPhase,
    hess: Vec<Vec<FloatPoly>>,
    grad: Vec<FloatPoly>,
    shifted: FloatPoly,
    /// `∇²₁Φ` and `∇²₂Φ` as polynomials in `q − p`.
    weighted_polys: [Vec<Vec<FloatPoly>>; 2],
    pub critical: CriticalPoint,
    pub domain: Vec<Interval>,
    density: Option<Density>,
}

/// Radial quadrature order for `η`.
const ETA_ORDER: usize = 24;
/// Below this radius the `η` integrand is extrapolated.
const ETA_SMALL: f64 = 4e-3;

/// Per-level stencil step for `ℓ` nested applications of `□*`.
fn adjoint_step(level: usize, x: &[f64]) -> f64 {
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    0.25 * f64::EPSILON.powf(1.0 / (2.0 * level as f64 + 4.0)) * scale
}

/// Builds `□` for `Φ` around the critical point `p` on the box `Ω`.
pub fn build_box(phi: &PolyPhase, p: &[f64], omega: &[Interval]) -> Result<SchrodOperator> {
    SchrodOperator::new(phi, p, omega)
}

impl SchrodOperator {
    pub fn new(phi: &PolyPhase, p: &[f64], omega: &[Interval]) -> Result<Self> {
        let n = phi.dimension();
        if omega.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: omega.len() });
        }
        let critical = CriticalPoint::new(phi, p)?;
        let f = phi.to_float();
        let base = f.eval(p);
        let shifted = f.add(&FloatPoly::new(n, vec![(vec![0; n], -base)]));
        let hess = f.hessian();
        let weighted_polys = [1.0, 2.0].map(|sigma| {
            hess.iter()
                .map(|row| {
                    row.iter()
                        .map(|h| {
                            let mom = beta_moments(h.degree() as usize, sigma);
                            h.shifted(p).radially_weighted(|m| mom[m as usize])
                        })
                        .collect()
                })
                .collect()
        });
        let op = SchrodOperator {
            phase: phi.clone(),
            weighted_polys,
            hess,
            grad: f.gradient(),
            shifted,
            critical,
            domain: omega.to_vec(),
            density: None,
        };
        op.check_nondegenerate()?;
        Ok(op)
    }

    pub fn with_density(mut self, density: Density) -> Self {
        self.density = Some(density);
        self
    }

    pub fn dim(&self) -> usize {
        self.phase.dimension()
    }

    pub fn phase(&self) -> &PolyPhase {
        &self.phase
    }

    fn density_at(&self, x: &[f64]) -> f64 {
        self.density.as_ref().map_or(1.0, |d| d(x))
    }

    /// Samples `det ∇²₁Φ` on a grid covering the closure of `Ω`.
    fn check_nondegenerate(&self) -> Result<()> {
        let n = self.dim();
        let per_axis: usize = if n <= 2 { 9 } else { 5 };
        let total = per_axis.pow(n as u32);
        for idx in 0..total {
            let mut rem = idx;
            let x: Vec<f64> = self
                .domain
                .iter()
                .map(|iv| {
                    let k = rem % per_axis;
                    rem /= per_axis;
                    iv.lo + iv.width() * k as f64 / (per_axis - 1) as f64
                })
                .collect();
            let det = self.weighted(1.0, &x).determinant();
            if det.abs() < 1e-10 {
                return Err(Error::DegenerateWeightedHessian { det, point: x });
            }
        }
        Ok(())
    }

    /// `∇²_σΦ(q)`.
    pub fn weighted(&self, sigma: f64, q: &[f64]) -> DMatrix<f64> {
        let slot = if sigma == 1.0 {
            0
        } else if sigma == 2.0 {
            1
        } else {
            return weighted_hessian_float(&self.hess, &self.critical.point, sigma, q);
        };
        let d: Vec<f64> = q.iter().zip(&self.critical.point).map(|(a, b)| a - b).collect();
        float_hessian(&self.weighted_polys[slot], &d)
    }

    fn inverse_first(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        let a1 = self.weighted(1.0, q);
        let det = a1.determinant();
        a1.try_inverse()
            .filter(|_| det.abs() >= 1e-14)
            .ok_or_else(|| Error::DegenerateWeightedHessian { det, point: q.to_vec() })
    }

    /// Second-order coefficients `(∇²₁Φ)⁻¹ ∇²₂Φ (∇²₁Φ)⁻¹`.
    pub fn second_order(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        let inv = self.inverse_first(q)?;
        Ok(&inv * self.weighted(2.0, q) * &inv)
    }

    /// `□₀Φ(q) = tr(a(q) Hess Φ(q))`.
    pub fn box0_phase(&self, q: &[f64]) -> Result<f64> {
        let a = self.second_order(q)?;
        Ok((a * float_hessian(&self.hess, q)).trace())
    }

    /// `η(q)`, vanishing at the critical point.
    pub fn eta(&self, q: &[f64]) -> Result<f64> {
        let p = &self.critical.point;
        let n = self.dim() as f64;
        if q == p.as_slice() {
            return Ok(0.0);
        }
        let radial = |s: f64| -> Result<f64> {
            let x: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + s * (b - a)).collect();
            Ok((n - self.box0_phase(&x)?) / s)
        };
        // quadratic through the values at s1 < s2 < s3, used near s = 0
        let (s1, s2, s3) = (1e-3, 2e-3, ETA_SMALL);
        let (h1, h2, h3) = (radial(s1)?, radial(s2)?, radial(s3)?);
        let extrapolate = |s: f64| {
            h1 * (s - s2) * (s - s3) / ((s1 - s2) * (s1 - s3))
                + h2 * (s - s1) * (s - s3) / ((s2 - s1) * (s2 - s3))
                + h3 * (s - s1) * (s - s2) / ((s3 - s1) * (s3 - s2))
        };
        let rule = GaussLegendre::cached(ETA_ORDER);
        let mut sum = 0.0;
        for (s, w) in rule.mapped(0.0, 1.0) {
            let v = if s < ETA_SMALL { extrapolate(s) } else { radial(s)? };
            sum += w * v;
        }
        Ok(sum)
    }

    /// `∇η` by fourth-order central differences.
    pub fn grad_eta(&self, q: &[f64]) -> Result<DVector<f64>> {
        let n = self.dim();
        let h = q.iter().fold(1.0f64, |m, v| m.max(v.abs())) * 6e-4;
        let mut g = DVector::zeros(n);
        let mut x = q.to_vec();
        for i in 0..n {
            let mut at = |off: f64| -> Result<f64> {
                x[i] = q[i] + off;
                self.eta(&x)
            };
            let (m2, m1, p1, p2) = (at(-2.0 * h)?, at(-h)?, at(h)?, at(2.0 * h)?);
            x[i] = q[i];
            g[i] = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
        }
        Ok(g)
    }

    /// First-order coefficients `(∇²₁Φ)⁻¹∇η`.
    pub fn first_order(&self, q: &[f64]) -> Result<DVector<f64>> {
        Ok(self.inverse_first(q)? * self.grad_eta(q)?)
    }

    fn coeff(&self, q: &[f64]) -> Result<Coeff> {
        Ok(Coeff { a: self.second_order(q)?, b: self.first_order(q)?, mu: self.density_at(q) })
    }

    /// `□f(q)` from the gradient and Hessian of `f` at `q`.
    pub fn apply(&self, q: &[f64], grad_f: &DVector<f64>, hess_f: &DMatrix<f64>) -> Result<f64> {
        let c = self.coeff(q)?;
        Ok((c.a * hess_f).trace() + c.b.dot(grad_f))
    }

    /// `[∂_t − (i/2)□] t^{−n/2}e^{i(Φ−Φ(p))/t}` at `(t, x)`.
    pub fn pde_residual(&self, t: f64, x: &[f64]) -> Result<PdeResidual> {
        if !(t > 0.0) {
            return Err(Error::Invalid(format!("time must be positive, got {t}")));
        }
        let n = self.dim() as f64;
        let phi = self.shifted.eval(x);
        let grad = DVector::from_iterator(self.dim(), self.grad.iter().map(|g| g.eval(x)));
        let hess = float_hessian(&self.hess, x);
        let c = self.coeff(x)?;
        let i = Complex64::i();
        let v = Complex64::cis(phi / t) * t.powf(-n / 2.0);
        let dt = v * (-n / (2.0 * t) - i * phi / (t * t));
        // □v / v = (i/t)(tr(aH) + b·∇Φ) − ∇Φᵀa∇Φ / t²
        let quad = grad.dot(&(&c.a * &grad));
        let first = (&c.a * &hess).trace() + c.b.dot(&grad);
        let boxv = v * (i * first / t - quad / (t * t));
        Ok(PdeResidual { residual: dt - i * 0.5 * boxv, time_derivative: dt })
    }

    /// `a`, `b` and `μ` on the lattice points accepted by `needed`. `∇η`
    /// comes from fourth-order differences of `η` on the lattice itself.
    fn coefficient_grid(&self, lat: &Lattice, needed: &(dyn Fn(&[f64]) -> bool + Sync)) -> Result<Vec<Option<Coeff>>> {
        let n = self.dim();
        let ext = lat.grown(2);
        let h = lat.h;
        // η is required within two steps of a needed point
        let near_needed = |y: &[f64]| {
            let mut z = y.to_vec();
            if needed(&z) {
                return true;
            }
            for d in 0..n {
                for s in [-2.0, -1.0, 1.0, 2.0] {
                    z[d] = y[d] + s * h;
                    if needed(&z) {
                        return true;
                    }
                }
                z[d] = y[d];
            }
            false
        };
        let eta: Vec<f64> = (0..ext.len())
            .into_par_iter()
            .map(|k| {
                let y = ext.point(k);
                if near_needed(&y) {
                    self.eta(&y)
                } else {
                    Ok(0.0)
                }
            })
            .collect::<Result<_>>()?;
        (0..lat.len())
            .into_par_iter()
            .map(|k| {
                let x = lat.point(k);
                if !needed(&x) {
                    return Ok(None);
                }
                let off = lat.offsets(k);
                let grad = DVector::from_fn(n, |d, _| {
                    let mut o = off.clone();
                    let mut at = |s: isize| {
                        o[d] = off[d] + s;
                        eta[ext.index(&o)]
                    };
                    (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h)
                });
                let inv = self.inverse_first(&x)?;
                let a = &inv * self.weighted(2.0, &x) * &inv;
                Ok(Some(Coeff { a, b: inv * grad, mu: self.density_at(&x) }))
            })
            .collect()
    }

    /// `(□*)^ℓ ψ(x)` by nested fourth-order stencils on `x + hℤⁿ`.
    pub fn adjoint_apply(&self, psi: &dyn Amplitude, x: &[f64], level: usize) -> Result<f64> {
        self.adjoint_apply_with_step(psi, x, level, adjoint_step(level.max(1), x))
    }

    /// Difference between stencil steps `h` and `2h`; a noise diagnostic.
    pub fn adjoint_consistency(&self, psi: &dyn Amplitude, x: &[f64], level: usize) -> Result<f64> {
        let h = adjoint_step(level.max(1), x);
        let a = self.adjoint_apply_with_step(psi, x, level, h)?;
        let b = self.adjoint_apply_with_step(psi, x, level, 2.0 * h)?;
        Ok((a - b).abs())
    }

    fn adjoint_apply_with_step(&self, psi: &dyn Amplitude, x: &[f64], level: usize, h: f64) -> Result<f64> {
        let n = self.dim();
        if x.len() != n || psi.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        if level > ADJOINT_BUDGET {
            return Err(Error::DerivativeBudget { requested: level, budget: ADJOINT_BUDGET });
        }
        if level == 0 {
            return Ok(psi.value(x));
        }
        let lat = Lattice::new(x.to_vec(), h, vec![2 * level; n]);
        let vals = self.nested(psi, &lat, level)?;
        Ok(vals[vals.len() / 2])
    }

    /// Applies `□*` `level` times to `ψ` sampled on `lat`; the result lives
    /// on the lattice shrunk by `2·level`.
    fn nested(&self, psi: &dyn Amplitude, lat: &Lattice, level: usize) -> Result<Vec<f64>> {
        let support: Vec<Interval> =
            psi.support().iter().map(|iv| iv.inflate(0.0, (2 * level) as f64 * lat.h * 1.01)).collect();
        let needed = |y: &[f64]| y.iter().zip(&support).all(|(v, iv)| iv.contains(*v));
        let coeffs = self.coefficient_grid(lat, &needed)?;
        let mut f: Vec<f64> = (0..lat.len()).into_par_iter().map(|k| psi.value(&lat.point(k))).collect();
        let mut cur = lat.clone();
        let mut cur_coeffs = coeffs;
        for _ in 0..level {
            let (next, g) = adjoint_step_on(&cur, &f, &cur_coeffs, self.dim());
            cur_coeffs = next.reindex_from(&cur, &cur_coeffs);
            cur = next;
            f = g;
        }
        Ok(f)
    }

    /// `∫|(□*)^m ψ| dx` by the trapezoid rule on the stencil lattice.
    pub fn adjoint_l1(&self, psi: &dyn Amplitude, m: usize) -> Result<f64> {
        if m > ADJOINT_BUDGET {
            return Err(Error::DerivativeBudget { requested: m, budget: ADJOINT_BUDGET });
        }
        let support = psi.support();
        let center: Vec<f64> = support.iter().map(|iv| iv.mid()).collect();
        // the integrand is smooth and compactly supported, so a moderate
        // trapezoid step suffices even where the stencil step is finer
        let width = support.iter().map(|iv| iv.width()).fold(f64::INFINITY, f64::min);
        let h = adjoint_step(m.max(1), &center).max(width / 256.0);
        let radius: Vec<usize> =
            support.iter().map(|iv| (0.5 * iv.width() / h).ceil() as usize + 2 * m + 1).collect();
        let lat = Lattice::new(center, h, radius);
        let vals = if m == 0 {
            (0..lat.len()).map(|k| psi.value(&lat.point(k))).collect()
        } else {
            self.nested(psi, &lat, m)?
        };
        // the amplitude vanishes on the lattice boundary, so the trapezoid
        // rule reduces to a plain sum
        Ok(vals.iter().map(|v| v.abs()).sum::<f64>() * h.powi(self.dim() as i32))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdeResidual {
    pub residual: Complex64,
    pub time_derivative: Complex64,
}

impl PdeResidual {
    /// `|residual| / |∂_t v|`.
    pub fn relative(&self) -> f64 {
        self.residual.norm() / self.time_derivative.norm().max(f64::MIN_POSITIVE)
    }
}

/// Axis-aligned lattice `center + h·k`, `|kᵢ| ≤ radiusᵢ`, last axis fastest.
#[derive(Clone, Debug)]
struct Lattice {
    center: Vec<f64>,
    h: f64,
    radius: Vec<usize>,
}

impl Lattice {
    fn new(center: Vec<f64>, h: f64, radius: Vec<usize>) -> Self {
        Lattice { center, h, radius }
    }

    fn side(&self, d: usize) -> usize {
        2 * self.radius[d] + 1
    }

    fn len(&self) -> usize {
        (0..self.radius.len()).map(|d| self.side(d)).product()
    }

    fn offsets(&self, mut k: usize) -> Vec<isize> {
        let n = self.radius.len();
        let mut off = vec![0isize; n];
        for d in (0..n).rev() {
            let s = self.side(d);
            off[d] = (k % s) as isize - self.radius[d] as isize;
            k /= s;
        }
        off
    }

    fn index(&self, off: &[isize]) -> usize {
        off.iter().enumerate().fold(0, |acc, (d, &o)| acc * self.side(d) + (o + self.radius[d] as isize) as usize)
    }

    fn point(&self, k: usize) -> Vec<f64> {
        self.offsets(k).iter().zip(&self.center).map(|(&o, c)| c + self.h * o as f64).collect()
    }

    fn grown(&self, by: usize) -> Lattice {
        Lattice { center: self.center.clone(), h: self.h, radius: self.radius.iter().map(|r| r + by).collect() }
    }

    fn shrunk(&self, by: usize) -> Lattice {
        Lattice { center: self.center.clone(), h: self.h, radius: self.radius.iter().map(|r| r - by).collect() }
    }

    fn reindex_from<T: Clone>(&self, outer: &Lattice, vals: &[T]) -> Vec<T> {
        (0..self.len()).map(|k| vals[outer.index(&self.offsets(k))].clone()).collect()
    }
}

const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

/// One application of `□*g = μ⁻¹[Σ∂ⱼ∂ₖ(aʲᵏμg) − Σ∂ⱼ(bʲμg)]`.
fn adjoint_step_on(lat: &Lattice, g: &[f64], coeffs: &[Option<Coeff>], n: usize) -> (Lattice, Vec<f64>) {
    // products aʲᵏμg and bʲμg on the lattice, zero where g vanishes
    let prods: Vec<(Vec<f64>, Vec<f64>)> = g
        .iter()
        .zip(coeffs)
        .map(|(&v, c)| match c {
            Some(c) if v != 0.0 => {
                let mg = c.mu * v;
                (c.a.iter().map(|a| a * mg).collect(), c.b.iter().map(|b| b * mg).collect())
            }
            _ => (vec![0.0; n * n], vec![0.0; n]),
        })
        .collect();
    let next = lat.shrunk(2);
    let h = lat.h;
    let out: Vec<f64> = (0..next.len())
        .into_par_iter()
        .map(|k| {
            let base = next.offsets(k);
            let at = |shift: &[(usize, isize)]| {
                let mut o = base.clone();
                for &(d, s) in shift {
                    o[d] += s;
                }
                lat.index(&o)
            };
            let mut acc = 0.0;
            for j in 0..n {
                for (u, w) in D2.iter().enumerate() {
                    acc += w * prods[at(&[(j, u as isize - 2)])].0[j * n + j] / (h * h);
                }
                for kk in (j + 1)..n {
                    let mut mixed = 0.0;
                    for (u, wu) in D1.iter().enumerate() {
                        if *wu == 0.0 {
                            continue;
                        }
                        for (v, wv) in D1.iter().enumerate() {
                            if *wv == 0.0 {
                                continue;
                            }
                            mixed += wu * wv * prods[at(&[(j, u as isize - 2), (kk, v as isize - 2)])].0[j * n + kk];
                        }
                    }
                    acc += 2.0 * mixed / (h * h);
                }
                for (u, w) in D1.iter().enumerate() {
                    acc -= w * prods[at(&[(j, u as isize - 2)])].1[j] / h;
                }
            }
            let mu = coeffs[lat.index(&base)].as_ref().map_or(1.0, |c| c.mu);
            acc / mu
        })
        .collect();
    (next, out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionResult {
    /// `c₀ … c_N`.
    pub coefficients: Vec<Complex64>,
    /// `(2π)^{n/2} e^{iπω/4} μ(p)/√|det Hess Φ(p)|`.
    pub prefactor: Complex64,
    /// `∫|(□*)^{N+1}ψ|` and `∫|(□*)^{N+k+1}ψ|`, when within the derivative
    /// budget.
    pub error_norms: Option<(f64, f64)>,
    pub dim: usize,
    pub order: usize,
    pub k: usize,
    pub signature: i32,
    pub det: f64,
}

impl ExpansionResult {
    /// `Σ_{ℓ≤N} c_ℓ t^ℓ`.
    pub fn partial_sum(&self, t: f64) -> Complex64 {
        self.coefficients.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * t + c)
    }

    /// `t^{N+1} A^{1−n/(2k)} B^{n/(2k)}` without the implied constant.
    pub fn error_functional(&self, t: f64) -> Option<f64> {
        let (a, b) = self.error_norms?;
        let e = self.dim as f64 / (2.0 * self.k as f64);
        Some(t.powi(self.order as i32 + 1) * a.powf(1.0 - e) * b.powf(e))
    }
}

/// Stationary-phase coefficients of `t^{−n/2}∫e^{i(Φ−Φ(p))/t}ψ dμ`.
pub fn expansion(op: &SchrodOperator, psi: &dyn Amplitude, order: usize, k: usize) -> Result<ExpansionResult> {
    let n = op.dim();
    if 2 * k <= n {
        return Err(Error::Invalid(format!("k = {k} must exceed n/2 = {}", n as f64 / 2.0)));
    }
    if order > ADJOINT_BUDGET {
        return Err(Error::DerivativeBudget { requested: order, budget: ADJOINT_BUDGET });
    }
    let cp = &op.critical;
    let p = &cp.point;
    let prefactor = Complex64::cis(PI * cp.signature as f64 / 4.0)
        * ((2.0 * PI).powf(n as f64 / 2.0) * op.density_at(p) / cp.det.abs().sqrt());
    let mut coefficients = Vec::with_capacity(order + 1);
    let mut fact = 1.0;
    for l in 0..=order {
        if l > 0 {
            fact *= l as f64;
        }
        let v = op.adjoint_apply(psi, p, l)?;
        coefficients.push(prefactor * Complex64::new(0.0, 0.5).powu(l as u32) * (v / fact));
    }
    let error_norms = if order + k + 1 <= ADJOINT_BUDGET {
        Some((op.adjoint_l1(psi, order + 1)?, op.adjoint_l1(psi, order + k + 1)?))
    } else {
        None
    };
    Ok(ExpansionResult {
        coefficients,
        prefactor,
        error_norms,
        dim: n,
        order,
        k,
        signature: cp.signature,
        det: cp.det,
    })
}
