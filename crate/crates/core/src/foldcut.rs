//! Fold curves of a nondegenerate cutoff in the plane.
//!
//! Given a phase `F = Φ + ξ·x` and a cutoff `u` with `du ≠ 0`, the points
//! where `dF ∧ du = 0` form curves transverse to the level sets of `u`.
//! Each curve is parametrized by `s = u(γ(s))`; along it the reduced phase
//! `f(s) = F(γ(s))` has `f′(s) = dF/du` and the coarea density is
//!
//! ```text
//! dφ/ds = μ(γ̇, X) / √|(∇²F − f′∇²u)(X, X)|,    X = unit tangent of {u = s}.
//! ```
//!
//! Since `γ̇·∇u = 1`, `μ(γ̇, X) = 1/|∇u|` for `X = J∇u/|∇u|`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::Serialize;

use crate::bump::{Amplitude, Cutoff, CutoffSides};
use crate::error::{Error, Result};
use crate::gauss::integrate_adaptive;
use crate::interval::Interval;
use crate::oscquad::{Osc1d, QuadOptions};
use crate::polyphase::{FloatPoly, PolyPhase};

/// The phase, the cutoff and the cross product `∂₁F∂₂u − ∂₂F∂₁u`.
#[derive(Clone, Debug)]
pub struct FoldSystem {
    phase: FloatPoly,
    grad_f: [FloatPoly; 2],
    hess_f: [[FloatPoly; 2]; 2],
    u: FloatPoly,
    grad_u: [FloatPoly; 2],
    hess_u: [[FloatPoly; 2]; 2],
    cross: FloatPoly,
    grad_cross: [FloatPoly; 2],
}

fn pair(v: Vec<FloatPoly>) -> [FloatPoly; 2] {
    let mut it = v.into_iter();
    [it.next().unwrap(), it.next().unwrap()]
}

fn quad(v: Vec<Vec<FloatPoly>>) -> [[FloatPoly; 2]; 2] {
    let mut it = v.into_iter().map(pair);
    [it.next().unwrap(), it.next().unwrap()]
}

fn grad_at(g: &[FloatPoly; 2], x: &[f64; 2]) -> Vector2<f64> {
    Vector2::new(g[0].eval2(x[0], x[1]), g[1].eval2(x[0], x[1]))
}

fn hess_at(h: &[[FloatPoly; 2]; 2], x: &[f64; 2]) -> Matrix2<f64> {
    Matrix2::from_fn(|i, j| h[i][j].eval2(x[0], x[1]))
}

impl FoldSystem {
    pub fn new(phi: &PolyPhase, xi: [f64; 2], u: &PolyPhase) -> Result<Self> {
        for p in [phi, u] {
            if p.dimension() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: p.dimension() });
            }
        }
        let phase = phi.to_float().plus_linear(&xi);
        let uf = u.to_float();
        if uf.degree() == 0 {
            return Err(Error::Invalid("the cutoff must be nonconstant".into()));
        }
        let grad_f = pair(phase.gradient());
        let grad_u = pair(uf.gradient());
        let cross = grad_f[0].mul(&grad_u[1]).add(&grad_f[1].mul(&grad_u[0]).scale(-1.0));
        Ok(FoldSystem {
            hess_f: quad(phase.hessian()),
            hess_u: quad(uf.hessian()),
            grad_cross: pair(cross.gradient()),
            phase,
            grad_f,
            u: uf,
            grad_u,
            cross,
        })
    }

    /// Defaults the cutoff to the Hessian determinant of `Φ`.
    pub fn hessian_cutoff(phi: &PolyPhase, xi: [f64; 2]) -> Result<Self> {
        Self::new(phi, xi, &phi.hessian_det()?)
    }

    pub fn u(&self, x: &[f64; 2]) -> f64 {
        self.u.eval2(x[0], x[1])
    }

    pub fn phase(&self, x: &[f64; 2]) -> f64 {
        self.phase.eval2(x[0], x[1])
    }

    pub fn cross(&self, x: &[f64; 2]) -> f64 {
        self.cross.eval2(x[0], x[1])
    }

    /// `|∇F||∇u|`, the natural size of the cross product at `x`.
    fn cross_scale(&self, x: &[f64; 2]) -> f64 {
        grad_at(&self.grad_f, x).norm() * grad_at(&self.grad_u, x).norm()
    }

    fn jacobian(&self, x: &[f64; 2]) -> Matrix2<f64> {
        let gc = grad_at(&self.grad_cross, x);
        let gu = grad_at(&self.grad_u, x);
        Matrix2::new(gc[0], gc[1], gu[0], gu[1])
    }

    /// `|det J| / (|∇cross||∇u|)`; small values mean the curve is singular
    /// or tangent to a level set.
    fn transversality(&self, x: &[f64; 2]) -> f64 {
        let j = self.jacobian(x);
        let scale = j.row(0).norm() * j.row(1).norm();
        if scale == 0.0 {
            0.0
        } else {
            j.determinant().abs() / scale
        }
    }

    /// `dγ/ds`: tangent to `{cross = 0}` with `γ̇·∇u = 1`.
    pub fn tangent(&self, x: &[f64; 2]) -> Option<Vector2<f64>> {
        self.jacobian(x).lu().solve(&Vector2::new(0.0, 1.0))
    }

    /// `f′ = dF/du` at a fold point.
    pub fn slope(&self, x: &[f64; 2]) -> f64 {
        let gu = grad_at(&self.grad_u, x);
        grad_at(&self.grad_f, x).dot(&gu) / gu.norm_squared()
    }

    /// `∇²F − f′∇²u` at a fold point.
    pub fn reduced_hessian(&self, x: &[f64; 2]) -> Matrix2<f64> {
        hess_at(&self.hess_f, x) - hess_at(&self.hess_u, x) * self.slope(x)
    }

    /// The reduced Hessian on the unit tangent of the level set.
    pub fn restricted_hessian(&self, x: &[f64; 2]) -> f64 {
        let gu = grad_at(&self.grad_u, x);
        let tan = Vector2::new(-gu[1], gu[0]) / gu.norm();
        tan.dot(&(self.reduced_hessian(x) * tan))
    }

    /// Damped Newton on `{cross = 0, u = s}` starting from `x0`.
    pub fn correct(&self, x0: [f64; 2], s: f64) -> Option<[f64; 2]> {
        let mut x = Vector2::new(x0[0], x0[1]);
        for _ in 0..40 {
            let p = [x[0], x[1]];
            let g = Vector2::new(self.cross(&p), self.u(&p) - s);
            if self.converged(&p, s) {
                return Some(self.polish(p, s));
            }
            let step = self.jacobian(&p).lu().solve(&g)?;
            let norm0 = g.norm();
            let mut lambda = 1.0;
            loop {
                let y = x - step * lambda;
                let q = [y[0], y[1]];
                let gn = Vector2::new(self.cross(&q), self.u(&q) - s).norm();
                if gn < norm0 || lambda < 1e-4 {
                    x = y;
                    break;
                }
                lambda *= 0.5;
            }
        }
        let p = [x[0], x[1]];
        self.converged(&p, s).then_some(p)
    }

    /// One more Newton step from a converged point, kept if it does not
    /// increase the residual; differences along the curve amplify what
    /// the stopping tolerance leaves behind.
    fn polish(&self, p: [f64; 2], s: f64) -> [f64; 2] {
        let residual = |q: &[f64; 2]| {
            let cs = self.cross_scale(q).max(1.0);
            ((self.u(q) - s) / s.abs().max(1.0)).abs().max(self.cross(q).abs() / cs)
        };
        let g = Vector2::new(self.cross(&p), self.u(&p) - s);
        let Some(step) = self.jacobian(&p).lu().solve(&g) else { return p };
        let q = [p[0] - step[0], p[1] - step[1]];
        if residual(&q) <= residual(&p) {
            q
        } else {
            p
        }
    }

    fn converged(&self, p: &[f64; 2], s: f64) -> bool {
        let cs = self.cross_scale(p).max(1e-300);
        (self.u(p) - s).abs() <= 1e-12 * s.abs().max(1.0) && self.cross(p).abs() <= 1e-12 * cs.max(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveSample {
    pub s: f64,
    pub point: [f64; 2],
    /// `dγ/ds`.
    pub tangent: [f64; 2],
    /// `f(s) = F(γ(s))`.
    pub f: f64,
    /// `f′(s) = dF/du`.
    pub f_prime: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FoldBranch {
    /// Samples on consecutive grid values of `s`.
    pub samples: Vec<CurveSample>,
    /// Why tracing stopped before the end of the parameter range, if it did.
    pub truncated: Option<String>,
}

impl FoldBranch {
    pub fn s_range(&self) -> Interval {
        Interval::new(self.samples[0].s, self.samples[self.samples.len() - 1].s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FoldCurve {
    pub s_range: Interval,
    pub window: [Interval; 2],
    pub branches: Vec<FoldBranch>,
    #[serde(skip)]
    pub system: Option<FoldSystem>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceOptions {
    /// Uniform samples across the parameter range.
    pub samples: usize,
    /// Seed search grid per axis.
    pub seed_grid: usize,
    /// Transversality below which a point counts as singular.
    pub min_transversality: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { samples: 65, seed_grid: 96, min_transversality: 1e-8 }
    }
}

fn inside(window: &[Interval; 2], x: &[f64; 2]) -> bool {
    window[0].contains(x[0]) && window[1].contains(x[1])
}

/// Zeros of the cross product on the edges of a grid over the window.
fn seeds(sys: &FoldSystem, window: &[Interval; 2], grid: usize) -> Vec<[f64; 2]> {
    let node = |i: usize, j: usize| {
        [
            window[0].lo + window[0].width() * i as f64 / grid as f64,
            window[1].lo + window[1].width() * j as f64 / grid as f64,
        ]
    };
    let vals: Vec<Vec<f64>> = (0..=grid).map(|i| (0..=grid).map(|j| sys.cross(&node(i, j))).collect()).collect();
    let mut out = Vec::new();
    let mut bisect = |a: [f64; 2], b: [f64; 2], fa: f64| {
        let (mut lo, mut hi, mut flo) = (a, b, fa);
        for _ in 0..60 {
            let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
            let fm = sys.cross(&mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        out.push([(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0]);
    };
    for i in 0..=grid {
        for j in 0..=grid {
            let v = vals[i][j];
            if v == 0.0 {
                bisect(node(i, j), node(i, j), v);
                continue;
            }
            if i < grid && v * vals[i + 1][j] < 0.0 {
                bisect(node(i, j), node(i + 1, j), v);
            }
            if j < grid && v * vals[i][j + 1] < 0.0 {
                bisect(node(i, j), node(i, j + 1), v);
            }
        }
    }
    out
}

/// Moves a fold point from level `from` to level `to`, halving the step
/// when the corrector fails or jumps away from the predictor.
fn continue_to(sys: &FoldSystem, x: [f64; 2], from: f64, to: f64, depth: u32) -> Option<[f64; 2]> {
    let t = sys.tangent(&x)?;
    let ds = to - from;
    let pred = [x[0] + ds * t[0], x[1] + ds * t[1]];
    let step = (ds * t.norm()).abs();
    if let Some(y) = sys.correct(pred, to) {
        let jump = ((y[0] - pred[0]).powi(2) + (y[1] - pred[1]).powi(2)).sqrt();
        if jump <= 0.5 * step + 1e-12 * (1.0 + x[0].abs() + x[1].abs()) {
            return Some(y);
        }
    }
    if depth == 0 {
        return None;
    }
    let mid = (from + to) / 2.0;
    let y = continue_to(sys, x, from, mid, depth - 1)?;
    continue_to(sys, y, mid, to, depth - 1)
}

fn sample(sys: &FoldSystem, s: f64, x: [f64; 2]) -> Option<CurveSample> {
    let t = sys.tangent(&x)?;
    Some(CurveSample { s, point: x, tangent: [t[0], t[1]], f: sys.phase(&x), f_prime: sys.slope(&x) })
}

/// Traces every branch of the fold curve meeting the window with
/// `u ∈ s_range`, sampled on a uniform grid of `s`.
pub fn trace_curve(
    phi: &PolyPhase,
    xi: [f64; 2],
    u: &PolyPhase,
    window: [Interval; 2],
    s_range: Interval,
    opts: &TraceOptions,
) -> Result<FoldCurve> {
    trace_system(FoldSystem::new(phi, xi, u)?, window, s_range, opts)
}

pub fn trace_system(sys: FoldSystem, window: [Interval; 2], s_range: Interval, opts: &TraceOptions) -> Result<FoldCurve> {
    if opts.samples < 2 || !(s_range.width() > 0.0) {
        return Err(Error::Invalid("need at least two samples on a nonempty parameter range".into()));
    }
    let m = opts.samples;
    let ds = s_range.width() / (m - 1) as f64;
    let grid_s = |k: usize| if k == m - 1 { s_range.hi } else { s_range.lo + ds * k as f64 };
    let tol_s = 1e-9 * s_range.mag().max(1.0);

    let mut branches: Vec<(usize, Vec<Option<[f64; 2]>>, Option<String>)> = Vec::new();
    let mut singular_seed = None;
    let mut any_regular = false;
    for z in seeds(&sys, &window, opts.seed_grid) {
        let s0 = sys.u(&z);
        if s0 < s_range.lo - tol_s || s0 > s_range.hi + tol_s {
            continue;
        }
        if sys.transversality(&z) < opts.min_transversality {
            singular_seed.get_or_insert(z);
            continue;
        }
        any_regular = true;
        let k0 = (((s0 - s_range.lo) / ds).round() as usize).min(m - 1);
        let Some(x0) = continue_to(&sys, z, s0, grid_s(k0), 12) else { continue };
        let scale = 1e-7 * (1.0 + x0[0].abs() + x0[1].abs());
        let known = branches.iter().any(|(_, pts, _)| {
            pts[k0].is_some_and(|p| (p[0] - x0[0]).abs() + (p[1] - x0[1]).abs() <= scale)
        });
        if known || !inside(&window, &x0) {
            continue;
        }
        let mut pts = vec![None; m];
        pts[k0] = Some(x0);
        let mut stop = None;
        for dir in [1isize, -1] {
            let mut k = k0;
            let mut x = x0;
            loop {
                let next = k as isize + dir;
                if next < 0 || next >= m as isize {
                    break;
                }
                let next = next as usize;
                let reason = match continue_to(&sys, x, grid_s(k), grid_s(next), 20) {
                    Some(y) if !inside(&window, &y) => Some("left the window"),
                    Some(y) if sys.transversality(&y) < opts.min_transversality => {
                        Some("curve became singular or tangent to a level set")
                    }
                    Some(y) => {
                        pts[next] = Some(y);
                        x = y;
                        k = next;
                        None
                    }
                    None => Some("corrector diverged"),
                };
                if let Some(r) = reason {
                    stop = Some(format!("{r} near s = {}", grid_s(next)));
                    break;
                }
            }
        }
        branches.push((k0, pts, stop));
    }
    if !any_regular {
        if let Some(point) = singular_seed {
            return Err(Error::RankDeficient { point: point.to_vec() });
        }
    }
    let mut out = Vec::new();
    for (_, pts, stop) in branches {
        let samples: Vec<CurveSample> = pts
            .iter()
            .enumerate()
            .filter_map(|(k, p)| p.and_then(|x| sample(&sys, grid_s(k), x)))
            .collect();
        if samples.len() >= 2 {
            out.push(FoldBranch { samples, truncated: stop });
        }
    }
    // deterministic order: by starting point
    out.sort_by(|a, b| a.samples[0].point.partial_cmp(&b.samples[0].point).unwrap_or(std::cmp::Ordering::Equal));
    Ok(FoldCurve { s_range, window, branches: out, system: Some(sys) })
}

impl FoldCurve {
    pub fn system(&self) -> &FoldSystem {
        self.system.as_ref().expect("fold curve without its system")
    }

    /// The point of `branch` at level `s`, corrected from the nearest sample.
    pub fn point_at(&self, branch: usize, s: f64) -> Result<[f64; 2]> {
        let b = &self.branches[branch];
        let near = b
            .samples
            .iter()
            .min_by(|a, c| (a.s - s).abs().total_cmp(&(c.s - s).abs()))
            .expect("branches have samples");
        continue_to(self.system(), near.point, near.s, s, 20)
            .ok_or_else(|| Error::IllConditioned(format!("cannot continue the fold curve to s = {s}")))
    }

    /// `dφ/ds` at a fold point; errors where the restricted Hessian degenerates.
    pub fn density_at(&self, x: &[f64; 2]) -> Result<f64> {
        let sys = self.system();
        let r = sys.restricted_hessian(x);
        let scale = sys.reduced_hessian(x).norm().max(1.0);
        if r.abs() <= 1e-10 * scale {
            return Err(Error::DegenerateRestrictedHessian { value: r, point: x.to_vec() });
        }
        Ok(1.0 / (grad_at(&sys.grad_u, x).norm() * r.abs().sqrt()))
    }

    /// Sign of the restricted Hessian along a branch.
    pub fn signature(&self, branch: usize) -> Result<i32> {
        let b = &self.branches[branch];
        let sys = self.system();
        let first = sys.restricted_hessian(&b.samples[0].point).signum();
        for smp in &b.samples {
            self.density_at(&smp.point)?;
            if sys.restricted_hessian(&smp.point).signum() != first {
                return Err(Error::DegenerateRestrictedHessian {
                    value: sys.restricted_hessian(&smp.point),
                    point: smp.point.to_vec(),
                });
            }
        }
        Ok(first as i32)
    }

    /// `f″(s)` from the determinant identity: `± det(∇²F − f′∇²u)·(dφ/ds)²`
    /// with the sign of the restricted Hessian.
    pub fn f2_formula_at(&self, x: &[f64; 2]) -> Result<f64> {
        let sys = self.system();
        let density = self.density_at(x)?;
        let sign = sys.restricted_hessian(x).signum();
        Ok(sign * sys.reduced_hessian(x).determinant() * density * density)
    }

    /// `f″(s)` as the reduced Hessian on `γ̇`.
    pub fn f2_tangent_at(&self, x: &[f64; 2]) -> Option<f64> {
        let sys = self.system();
        let t = sys.tangent(x)?;
        Some(t.dot(&(sys.reduced_hessian(x) * t)))
    }

    /// Central second difference of `f` along the curve.
    pub fn f2_numeric(&self, branch: usize, s: f64) -> Result<f64> {
        let h = 1e-3 * self.s_range.width();
        let f = |v: f64| -> Result<f64> { Ok(self.system().phase(&self.point_at(branch, v)?)) };
        let (a, b, c, d, e) = (f(s - 2.0 * h)?, f(s - h)?, f(s)?, f(s + h)?, f(s + 2.0 * h)?);
        Ok((-a + 16.0 * b - 30.0 * c + 16.0 * d - e) / (12.0 * h * h))
    }

    pub fn densities(&self, branch: usize) -> Result<Vec<f64>> {
        self.branches[branch].samples.iter().map(|s| self.density_at(&s.point)).collect()
    }
}

/// `dφ/ds` at every sample of every branch.
pub fn curve_density(curve: &FoldCurve) -> Result<Vec<Vec<f64>>> {
    (0..curve.branches.len()).map(|b| curve.densities(b)).collect()
}

/// `f″(s)` by the determinant identity at level `s` on `branch`.
pub fn reduced_f2(curve: &FoldCurve, branch: usize, s: f64) -> Result<f64> {
    let x = curve.point_at(branch, s)?;
    curve.f2_formula_at(&x)
}

/// Size data of the reduced weight `ω(s) = χ(s/ε)ψ(γ(s))dφ/ds` on one branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReducedIntegrand {
    pub sup: f64,
    pub l1: f64,
    pub derivative_l1: f64,
}

fn reduced_weight<'a>(
    curve: &'a FoldCurve,
    branch: usize,
    chi: Cutoff,
    eps: f64,
    psi: &'a dyn Amplitude,
) -> impl Fn(f64) -> f64 + Sync + 'a {
    move |s: f64| {
        let c = chi.value(s / eps);
        if c == 0.0 {
            return 0.0;
        }
        match curve.point_at(branch, s) {
            Ok(x) => c * psi.value(&x) * curve.density_at(&x).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    }
}

/// `‖ω‖∞`, `‖ω‖₁` and `‖ω′‖₁` over the branch's parameter range.
pub fn reduced_integrand(
    curve: &FoldCurve,
    branch: usize,
    chi: Cutoff,
    eps: f64,
    psi: &dyn Amplitude,
) -> Result<ReducedIntegrand> {
    curve.signature(branch)?;
    let w = reduced_weight(curve, branch, chi, eps, psi);
    let range = curve.branches[branch].s_range();
    let h = 1e-5 * range.width();
    let dw = |s: f64| {
        let a = (s - h).max(range.lo);
        let b = (s + h).min(range.hi);
        (w(b) - w(a)) / (b - a)
    };
    let (l1, _) = integrate_adaptive(range.lo, range.hi, 1e-8, 30, &|s: f64| w(s).abs());
    let (derivative_l1, _) = integrate_adaptive(range.lo, range.hi, 1e-8, 30, &|s: f64| dw(s).abs());
    let sup = (0..=512).map(|i| w(range.lo + range.width() * i as f64 / 512.0).abs()).fold(0.0, f64::max);
    if !(l1.is_finite() && derivative_l1.is_finite() && sup.is_finite()) {
        return Err(Error::IllConditioned("reduced weight could not be evaluated along the curve".into()));
    }
    Ok(ReducedIntegrand { sup, l1, derivative_l1 })
}

/// Parameter intervals on which `χ(s/ε)` can be nonzero.
pub fn cutoff_ranges(chi: Cutoff, eps: f64) -> Vec<Interval> {
    let pos = Interval::new(eps, 2.0 * eps);
    let neg = Interval::new(-2.0 * eps, -eps);
    match chi.sides {
        CutoffSides::Both => vec![neg, pos],
        CutoffSides::Positive => vec![pos],
        CutoffSides::Negative => vec![neg],
    }
}

/// The leading term of the reduced expansion,
/// `(2π)^{1/2} e^{iπω/4} ∫ e^{if(s)/t} χ(s/ε) ψ(γ(s)) dφ(s)`, summed over
/// the fold branches inside the support of `ψ`.
pub fn reduced_expansion0(
    sys: &FoldSystem,
    chi: Cutoff,
    eps: f64,
    psi: &dyn Amplitude,
    t: f64,
    trace: &TraceOptions,
    opts: &QuadOptions,
) -> Result<Complex64> {
    if !(t > 0.0 && eps > 0.0) {
        return Err(Error::Invalid("t and ε must be positive".into()));
    }
    let supp = psi.support();
    let window = [supp[0], supp[1]];
    let mut total = Complex64::new(0.0, 0.0);
    for range in cutoff_ranges(chi, eps) {
        let curve = trace_system(sys.clone(), window, range, trace)?;
        for b in 0..curve.branches.len() {
            let omega = curve.signature(b)?;
            let weight = reduced_weight(&curve, b, chi, eps, psi);
            let phase = |s: f64| curve.point_at(b, s).map_or(f64::NAN, |x| curve.system().phase(&x));
            let slope = |s: f64| curve.point_at(b, s).map_or(f64::NAN, |x| curve.system().slope(&x));
            let interval = curve.branches[b].s_range();
            let v = Osc1d { phase: &phase, phase_deriv: &slope, weight: &weight, interval, max_width: eps / 8.0 }
                .integrate(t, opts)?;
            if !v.value.is_finite() {
                return Err(Error::IllConditioned("fold curve lost along the cutoff support".into()));
            }
            total += Complex64::cis(PI * omega as f64 / 4.0) * v.value;
        }
    }
    Ok(total * (2.0 * PI).sqrt())
}
