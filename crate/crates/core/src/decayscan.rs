//! Decay-rate experiments for `I(λ, ε, ξ) = ∫ e^{iλ(Φ+ξ·x)} χ(ε⁻¹ det Hess Φ) ψ dx`.
//!
//! - [`sup_over_xi`] maximizes `|I|` over a compact box of `ξ` values with a
//!   coarse grid and local refinement, then re-evaluates the winner with the
//!   convergence-checked integrator.
//! - [`fit_decay`] fits `|I| ≈ C λ^{ρ_λ} ε^{ρ_ε}` and looks for a
//!   `log(1/ε)` factor in the compensated quantity `sup·λ·ε^{1/2}`.
//! - [`counterexample_profile`] tracks the cusp phase `(x₂+x₁²)²` along
//!   `ε = λ^{−1/2}`, where the decay is only `λ^{−1/2}`.
//! - [`classify_boxes`] and [`rescale_check`] cover the bi-dyadic
//!   decomposition into boxes `|xᵢ| ∈ [2^{−jᵢ−1}, 2^{−jᵢ}]`.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::{Amplitude, Cutoff, FnAmplitude};
use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::interval::Interval;
use crate::newton::{edge_data, Lattice, NewtonPolygon};
use crate::oscquad::{CutoffField, OscIntegrand, QuadOptions};
use crate::polyphase::{rat_to_f64, PolyPhase, Rational};

/// One cell of a `(λ, ε)` scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub lambda: f64,
    pub eps: f64,
    /// Maximizing `ξ`.
    pub xi: [f64; 2],
    pub sup_val: f64,
    /// `|I|` at `ξ = 0`, kept so the maximum can be compared with it.
    pub origin_val: f64,
    pub nodes_used: u64,
    pub est_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanOptions {
    /// Points per axis of the coarse `ξ` grid.
    pub xi_grid: usize,
    /// Points per axis of each refinement grid.
    pub refine_grid: usize,
    pub refine_passes: usize,
    /// Added on each side of the range of `−∇Φ` over the amplitude support.
    pub xi_margin: f64,
    /// Rule for the tabulated search over the `ξ` grid.
    pub search: QuadOptions,
    /// Rule for the convergence-checked value at the maximizer.
    pub quad: QuadOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            xi_grid: 17,
            refine_grid: 9,
            refine_passes: 2,
            xi_margin: 0.5,
            search: QuadOptions { order: 16, phase_budget: 3.0 * std::f64::consts::PI, ..QuadOptions::default() },
            quad: QuadOptions { tol: 1e-7, ..QuadOptions::default() },
        }
    }
}

/// Componentwise range of `−∇Φ` over the amplitude support, widened by
/// `margin`. The range is sampled on a 65×65 grid and then padded by the
/// grid spacing times the interval bound of the Hessian.
pub fn default_xi_box(phi: &PolyPhase, psi: &dyn Amplitude, margin: f64) -> Result<[Interval; 2]> {
    if phi.dimension() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: phi.dimension() });
    }
    let f = phi.to_float();
    let grad = f.gradient();
    let supp = psi.support();
    let n = 64;
    let mut out = [Interval::point(f64::INFINITY), Interval::point(f64::INFINITY)];
    for (i, g) in grad.iter().enumerate() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for a in 0..=n {
            for b in 0..=n {
                let x = [
                    supp[0].lo + supp[0].width() * a as f64 / n as f64,
                    supp[1].lo + supp[1].width() * b as f64 / n as f64,
                ];
                let v = -g.eval(&x);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let pad: f64 = (0..2)
            .map(|k| g.derivative(k).range(&supp).mag() * supp[k].width() / n as f64)
            .sum();
        out[i] = Interval::new(lo - pad - margin, hi + pad + margin);
    }
    Ok(out)
}

fn axis_grid(iv: Interval, m: usize) -> Vec<f64> {
    let m = m.max(2);
    (0..m).map(|k| iv.lo + iv.width() * k as f64 / (m - 1) as f64).collect()
}

fn grid_points(bx: &[Interval; 2], m: usize) -> Vec<[f64; 2]> {
    let (a, b) = (axis_grid(bx[0], m), axis_grid(bx[1], m));
    a.iter().flat_map(|&x| b.iter().map(move |&y| [x, y])).collect()
}

/// `sup_ξ |I(λ, ε, ξ)|` over `xi_box` (default: [`default_xi_box`]).
pub fn sup_over_xi(
    phi: &PolyPhase,
    lambda: f64,
    eps: f64,
    chi: Cutoff,
    psi: &dyn Amplitude,
    xi_box: Option<[Interval; 2]>,
    opts: &ScanOptions,
) -> Result<ScanRecord> {
    let xi_box = match xi_box {
        Some(b) => b,
        None => default_xi_box(phi, psi, opts.xi_margin)?,
    };
    let u = phi.hessian_det()?.to_float();
    let integrand =
        OscIntegrand::new(phi.to_float(), lambda, psi)?.with_cutoff(CutoffField::new(u, chi, eps)?);
    let prep = integrand.prepare(&xi_box, &opts.search)?;
    let mut record = ScanRecord {
        lambda,
        eps,
        xi: [xi_box[0].mid(), xi_box[1].mid()],
        sup_val: 0.0,
        origin_val: 0.0,
        nodes_used: prep.nodes,
        est_error: 0.0,
    };
    if prep.panels() == 0 {
        return Ok(record);
    }

    let best_of = |bx: &[Interval; 2], m: usize| -> ([f64; 2], f64) {
        let (a, b) = (axis_grid(bx[0], m), axis_grid(bx[1], m));
        let vals = prep.eval_grid(&a, &b);
        let mut best = ([a[0], b[0]], -1.0);
        for (i, &x) in a.iter().enumerate() {
            for (k, &y) in b.iter().enumerate() {
                let v = vals[i * b.len() + k].norm();
                if v > best.1 {
                    best = ([x, y], v);
                }
            }
        }
        best
    };
    let m = opts.xi_grid.max(2);
    let (mut best, mut best_val) = best_of(&xi_box, m);
    let mut spacing = [xi_box[0].width() / (m - 1) as f64, xi_box[1].width() / (m - 1) as f64];
    for _ in 0..opts.refine_passes {
        let local = [
            Interval::new((best[0] - spacing[0]).max(xi_box[0].lo), (best[0] + spacing[0]).min(xi_box[0].hi)),
            Interval::new((best[1] - spacing[1]).max(xi_box[1].lo), (best[1] + spacing[1]).min(xi_box[1].hi)),
        ];
        let r = opts.refine_grid.max(2);
        let (x, v) = best_of(&local, r);
        if v > best_val {
            best = x;
            best_val = v;
        }
        spacing = [local[0].width() / (r - 1) as f64, local[1].width() / (r - 1) as f64];
    }

    let verified = integrand.integrate(&best, &opts.quad)?;
    let mut nodes = prep.nodes + verified.nodes_used;
    let mut err = verified.est_error + (verified.value.norm() - best_val).abs();
    let mut xi_star = best;
    let mut sup = verified.value.norm();

    let inside = xi_box[0].contains(0.0) && xi_box[1].contains(0.0);
    let origin = if inside && best != [0.0, 0.0] {
        let o = integrand.integrate(&[0.0, 0.0], &opts.quad)?;
        nodes += o.nodes_used;
        if o.value.norm() > sup {
            sup = o.value.norm();
            xi_star = [0.0, 0.0];
            err = o.est_error;
        }
        o.value.norm()
    } else if best == [0.0, 0.0] {
        sup
    } else {
        integrand.integrate(&[0.0, 0.0], &opts.quad)?.value.norm()
    };

    record.xi = xi_star;
    record.sup_val = sup;
    record.origin_val = origin;
    record.nodes_used = nodes;
    record.est_error = err;
    Ok(record)
}

/// Runs [`sup_over_xi`] over a `(λ, ε)` grid; records come back in
/// `(λ, ε)` order.
pub fn scan_grid(
    phi: &PolyPhase,
    lambdas: &[f64],
    epss: &[f64],
    chi: Cutoff,
    psi: &dyn Amplitude,
    opts: &ScanOptions,
) -> Result<Vec<ScanRecord>> {
    let xi_box = default_xi_box(phi, psi, opts.xi_margin)?;
    let cells: Vec<(f64, f64)> = lambdas.iter().flat_map(|&l| epss.iter().map(move |&e| (l, e))).collect();
    cells
        .par_iter()
        .with_max_len(1)
        .map(|&(l, e)| sup_over_xi(phi, l, e, chi, psi, Some(xi_box), opts))
        .collect()
}

/// `2^{lo..=hi}`.
pub fn dyadic(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(k)).collect()
}

/// Least-squares coefficients, standard errors and residual RMS.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub rms: f64,
    /// Condition number of the column-normalized design matrix.
    pub condition: f64,
}

const MAX_CONDITION: f64 = 1e10;

/// Ordinary least squares `y ≈ X β`.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Regression> {
    let (m, p) = x.shape();
    if m <= p {
        return Err(Error::IllConditioned(format!("{m} observations for {p} coefficients")));
    }
    // column scaling keeps the condition number meaningful
    let norms: Vec<f64> = (0..p).map(|j| x.column(j).norm()).collect();
    if norms.iter().any(|&n| n == 0.0 || !n.is_finite()) {
        return Err(Error::IllConditioned("zero or non-finite design column".into()));
    }
    let mut xs = x.clone();
    for (j, n) in norms.iter().enumerate() {
        xs.column_mut(j).scale_mut(1.0 / n);
    }
    let svd = xs.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned(format!("design condition number {condition:.3e}")));
    }
    let beta_s = svd
        .solve(y, 0.0)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;
    let resid = y - &xs * &beta_s;
    let rss = resid.norm_squared();
    let s2 = rss / (m - p) as f64;
    let gram = xs.transpose() * &xs;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned("singular normal equations".into()))?;
    let coefficients = (0..p).map(|j| beta_s[j] / norms[j]).collect();
    let std_errors = (0..p).map(|j| (s2 * inv[(j, j)]).max(0.0).sqrt() / norms[j]).collect();
    Ok(Regression { coefficients, std_errors, rms: (rss / m as f64).sqrt(), condition })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub rho_lambda: f64,
    pub rho_lambda_se: f64,
    pub rho_eps: f64,
    pub rho_eps_se: f64,
    pub intercept: f64,
    /// RMS of the log-residuals of the pure power law.
    pub rms: f64,
    /// Slope of `sup·λ·ε^{1/2}` against `log(1/ε)`.
    pub log_slope: f64,
    pub log_slope_se: f64,
    pub log_tstat: f64,
    /// The power law with an extra `log log(1/ε)` regressor; `None` when some
    /// `ε ≥ 1`.
    pub augmented: Option<AugmentedFit>,
    /// Expected power of `log(1/ε)` (the exponent `s`).
    pub s_hint: u32,
    /// `log_slope > 0` with t-statistic above 4.
    pub log_factor_detected: bool,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentedFit {
    pub rho_lambda: f64,
    pub rho_eps: f64,
    /// Fitted power of `log(1/ε)`.
    pub log_power: f64,
    pub log_power_se: f64,
    pub rms: f64,
}

fn distinct(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = v.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Fits `log sup = c + ρ_λ log λ + ρ_ε log ε` and the log-factor slope.
pub fn fit_decay(records: &[ScanRecord], s_hint: u32) -> Result<FitResult> {
    for (name, vals) in [
        ("λ", distinct(records.iter().map(|r| r.lambda))),
        ("ε", distinct(records.iter().map(|r| r.eps))),
    ] {
        if vals.len() < 6 {
            return Err(Error::IllConditioned(format!("{} distinct values of {name}, need 6", vals.len())));
        }
        if (vals[vals.len() - 1] / vals[0]).log2() < 2.0 - 1e-12 {
            return Err(Error::IllConditioned(format!("values of {name} span less than two octaves")));
        }
    }
    if let Some(r) = records.iter().find(|r| !(r.sup_val > 0.0) || !(r.lambda > 0.0) || !(r.eps > 0.0)) {
        return Err(Error::IllConditioned(format!(
            "non-positive entry at λ = {}, ε = {}: {}",
            r.lambda, r.eps, r.sup_val
        )));
    }
    let m = records.len();
    let y = DVector::from_iterator(m, records.iter().map(|r| r.sup_val.ln()));
    let x = DMatrix::from_fn(m, 3, |i, j| match j {
        0 => 1.0,
        1 => records[i].lambda.ln(),
        _ => records[i].eps.ln(),
    });
    let base = least_squares(&x, &y)?;

    let q = DVector::from_iterator(m, records.iter().map(|r| r.sup_val * r.lambda * r.eps.sqrt()));
    let xl = DMatrix::from_fn(m, 2, |i, j| if j == 0 { 1.0 } else { -records[i].eps.ln() });
    let comp = least_squares(&xl, &q)?;
    let (slope, se) = (comp.coefficients[1], comp.std_errors[1]);
    let tstat = if se > 0.0 {
        slope / se
    } else if slope == 0.0 {
        0.0
    } else {
        slope.signum() * f64::INFINITY
    };

    let augmented = if records.iter().all(|r| r.eps < 1.0) {
        let xa = DMatrix::from_fn(m, 4, |i, j| match j {
            3 => (-records[i].eps.ln()).ln(),
            _ => x[(i, j)],
        });
        least_squares(&xa, &y).ok().map(|r| AugmentedFit {
            rho_lambda: r.coefficients[1],
            rho_eps: r.coefficients[2],
            log_power: r.coefficients[3],
            log_power_se: r.std_errors[3],
            rms: r.rms,
        })
    } else {
        None
    };

    Ok(FitResult {
        rho_lambda: base.coefficients[1],
        rho_lambda_se: base.std_errors[1],
        rho_eps: base.coefficients[2],
        rho_eps_se: base.std_errors[2],
        intercept: base.coefficients[0],
        rms: base.rms,
        log_slope: slope,
        log_slope_se: se,
        log_tstat: tstat,
        augmented,
        s_hint,
        log_factor_detected: slope > 0.0 && tstat > 4.0,
        points: m,
    })
}

/// Max/min of `sup·λ·ε^{1/2}` over the records.
pub fn compensated_spread(records: &[ScanRecord]) -> f64 {
    let q: Vec<f64> = records.iter().map(|r| r.sup_val * r.lambda * r.eps.sqrt()).collect();
    let max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = q.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// The cusp phase `(x₂+x₁²)²`.
pub fn cusp_phase() -> PolyPhase {
    PolyPhase::from_int_terms(2, &[(&[0, 2], 1), (&[2, 1], 2), (&[4, 0], 1)])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub lambda: f64,
    pub eps: f64,
    pub abs_val: f64,
    /// `|I|·λ^{1/2}`.
    pub compensated: f64,
    pub est_error: f64,
    /// The same integral after `x₂ ↦ λ^{−1/2}x₂ − x₁²`.
    pub substituted: Complex64,
    pub substitution_rel_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleProfile {
    pub rows: Vec<ProfileRow>,
    /// `|∫e^{iy²}χ(8y)dy|·|∫ψ(x₁,−x₁²)dx₁|`.
    pub limit_target: f64,
    pub fitted_exponent: f64,
    pub fitted_exponent_se: f64,
    /// `|I|·λ^{1/2}` over the limit at the largest `λ`.
    pub final_ratio: f64,
}

const PROFILE_RULE: usize = 24;

/// Panels on the support of `y ↦ χ(8y)` (plus a margin of quadrature
/// tolerance: the cutoff is flat to all orders at the ends).
fn cutoff_axis_panels(chi: Cutoff) -> Vec<Interval> {
    let mut out = Vec::new();
    for s in [-1.0, 1.0] {
        if chi.value(8.0 * s * 0.1875) != 0.0 {
            let (a, b) = (0.125 * s, 0.25 * s);
            out.push(Interval::new(a.min(b), a.max(b)));
        }
    }
    out
}

fn nested_quad(
    xs: Interval,
    ys: &[Interval],
    panels: usize,
    f: &(dyn Fn(f64, f64) -> Complex64 + Sync),
) -> Complex64 {
    let rule = GaussLegendre::cached(PROFILE_RULE);
    let h = xs.width() / panels as f64;
    let parts: Vec<Complex64> = (0..panels)
        .into_par_iter()
        .map(|k| {
            let lo = xs.lo + h * k as f64;
            rule.integrate(lo, lo + h, |x| {
                ys.iter()
                    .map(|iv| rule.integrate_panels(iv.lo, iv.hi, panels / 4 + 1, |y| f(x, y)))
                    .sum::<Complex64>()
            })
        })
        .collect();
    crate::gauss::compensated_sum(parts)
}

/// Two resolutions of [`nested_quad`]; returns the finer one and the gap.
fn converged_quad(xs: Interval, ys: &[Interval], f: &(dyn Fn(f64, f64) -> Complex64 + Sync)) -> (Complex64, f64) {
    let coarse = nested_quad(xs, ys, 32, f);
    let fine = nested_quad(xs, ys, 64, f);
    (fine, (fine - coarse).norm())
}

/// `|I|·λ^{1/2}` for the cusp phase at `ξ = 0`, `ε = λ^{−1/2}`.
pub fn counterexample_profile(
    lambdas: &[f64],
    chi: Cutoff,
    psi: &dyn Amplitude,
    opts: &QuadOptions,
) -> Result<CounterexampleProfile> {
    if psi.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: psi.dim() });
    }
    let phi = cusp_phase();
    let u = phi.hessian_det()?.to_float();
    let x1_range = psi.support()[0];
    let ys = cutoff_axis_panels(chi);

    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let eps = lambda.powf(-0.5);
        let v = OscIntegrand::new(phi.to_float(), lambda, psi)?
            .with_cutoff(CutoffField::new(u.clone(), chi, eps)?)
            .integrate(&[0.0, 0.0], opts)?;
        let sub = |x1: f64, y: f64| {
            let a = psi.value(&[x1, eps * y - x1 * x1]);
            if a == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::cis(y * y) * (chi.value(8.0 * y) * a)
        };
        let (s, _) = converged_quad(x1_range, &ys, &sub);
        let substituted = s * eps;
        let abs_val = v.value.norm();
        let scale = abs_val.max(substituted.norm());
        rows.push(ProfileRow {
            lambda,
            eps,
            abs_val,
            compensated: abs_val * lambda.sqrt(),
            est_error: v.est_error,
            substituted,
            substitution_rel_diff: if scale > 0.0 { (v.value - substituted).norm() / scale } else { 0.0 },
        });
    }

    let rule = GaussLegendre::cached(PROFILE_RULE);
    let y_factor: Complex64 = ys
        .iter()
        .map(|iv| rule.integrate_panels(iv.lo, iv.hi, 16, |y| Complex64::cis(y * y) * chi.value(8.0 * y)))
        .sum();
    let x_factor: f64 =
        rule.integrate_panels(x1_range.lo, x1_range.hi, 64, |x1| psi.value(&[x1, -x1 * x1]));
    let limit_target = y_factor.norm() * x_factor.abs();

    let (fitted_exponent, fitted_exponent_se) = if rows.len() >= 3 && rows.iter().all(|r| r.abs_val > 0.0) {
        let x = DMatrix::from_fn(rows.len(), 2, |i, j| if j == 0 { 1.0 } else { rows[i].lambda.ln() });
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.abs_val.ln()));
        let fit = least_squares(&x, &y)?;
        (fit.coefficients[1], fit.std_errors[1])
    } else {
        (f64::NAN, f64::NAN)
    };
    let final_ratio = rows.last().map_or(f64::NAN, |r| r.compensated / limit_target);
    Ok(CounterexampleProfile { rows, limit_target, fitted_exponent, fitted_exponent_se, final_ratio })
}

/// How a dyadic box is treated.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum BoxKind {
    /// `2^{α·j}Φ(2^{−j}·)` is dominated by the monomial `x^α`.
    Vertex { alpha: Lattice },
    /// Inside the band around a compact edge; `k` is the position along it.
    Edge { edge: usize, beta2: f64, k: f64 },
    Negligible,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxClass {
    pub j: (u32, u32),
    pub kind: BoxKind,
    /// Exponent `α` with `Φ_j = 2^{α·j}Φ(2^{−j₁}x₁, 2^{−j₂}x₂)`.
    pub scaling: Lattice,
    pub rescaled: String,
    /// Relative size of the non-leading terms of `Φ_j` on `[1/2,1]²`.
    pub remainder: f64,
    /// The box is active when `ε ≈ 2^{−band_exponent}`.
    pub band_exponent: Option<f64>,
    pub active: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoxOptions {
    /// Half-width of the edge band in `|β⁻¹j₁ − βj₂|`.
    pub c_edge: f64,
    /// Largest `jᵢ` considered.
    pub cap: u32,
    /// Dominance threshold for vertex boxes.
    pub dominance: f64,
    /// A box is active when `|band_exponent − log₂(1/ε)| ≤ active_width`.
    pub active_width: f64,
    /// Support of the amplitude; boxes not meeting it are skipped.
    pub support: [Interval; 2],
}

impl Default for BoxOptions {
    fn default() -> Self {
        BoxOptions {
            c_edge: 2.0,
            cap: 12,
            dominance: 0.1,
            active_width: 1.0,
            support: [Interval::new(-0.5, 0.5), Interval::new(-0.5, 0.5)],
        }
    }
}

/// Box `|xᵢ| ∈ [2^{−jᵢ−1}, 2^{−jᵢ}]` as its four sign quadrants.
pub fn box_quadrants(j: (u32, u32)) -> Vec<[Interval; 2]> {
    let side = |k: u32| {
        let hi = 2f64.powi(-(k as i32));
        [Interval::new(hi / 2.0, hi), Interval::new(-hi, -hi / 2.0)]
    };
    let (a, b) = (side(j.0), side(j.1));
    a.iter().flat_map(|x| b.iter().map(move |y| [*x, *y])).collect()
}

fn meets_open(a: Interval, b: Interval) -> bool {
    a.lo.max(b.lo) < a.hi.min(b.hi)
}

fn box_meets(j: (u32, u32), support: &[Interval; 2]) -> bool {
    box_quadrants(j)
        .iter()
        .any(|q| meets_open(q[0], support[0]) && meets_open(q[1], support[1]))
}

fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// `2^{α·j}Φ(2^{−j₁}x₁, 2^{−j₂}x₂)`, exactly.
pub fn rescaled_phase(phi: &PolyPhase, alpha: Lattice, j: (u32, u32)) -> Result<PolyPhase> {
    let s = phi.scale_vars(&[pow2(-(j.0 as i64)), pow2(-(j.1 as i64))])?;
    Ok(s.scale(&pow2(alpha.0 as i64 * j.0 as i64 + alpha.1 as i64 * j.1 as i64)))
}

/// `2(α − 𝟙)·j`: the Hessian determinant of `Φ_j` is `2^{this}·u(2^{−j}·)`.
fn hessian_exponent(alpha: Lattice, j: (u32, u32)) -> i64 {
    2 * ((alpha.0 as i64 - 1) * j.0 as i64 + (alpha.1 as i64 - 1) * j.1 as i64)
}

/// Relative size of the non-`α` terms of `Φ_j` on `[1/2, 1]²`: the terms are
/// bounded by their coefficients there and `|x^α| ≥ 2^{−|α|}`.
fn dominance_remainder(phi: &PolyPhase, alpha: Lattice, j: (u32, u32)) -> f64 {
    let lead = rat_to_f64(&phi.coefficient(&[alpha.0, alpha.1])).abs();
    if lead == 0.0 {
        return f64::INFINITY;
    }
    let rest: f64 = phi
        .terms()
        .filter(|(e, _)| (e[0], e[1]) != alpha)
        .map(|(e, c)| {
            let d = (alpha.0 as f64 - e[0] as f64) * j.0 as f64 + (alpha.1 as f64 - e[1] as f64) * j.1 as f64;
            rat_to_f64(&c.abs()) * 2f64.powf(d)
        })
        .sum();
    rest / lead * 2f64.powi((alpha.0 + alpha.1) as i32)
}

/// Support exponent minimizing `a·j`, i.e. the largest term on the box.
fn dominant_exponent(phi: &PolyPhase, j: (u32, u32)) -> Lattice {
    phi.terms()
        .map(|(e, _)| (e[0], e[1]))
        .min_by_key(|e| e.0 as u64 * j.0 as u64 + e.1 as u64 * j.1 as u64)
        .expect("nonzero phase")
}

/// Classifies every box with `0 ≤ jᵢ ≤ cap` that meets the support.
pub fn classify_boxes(phi: &PolyPhase, poly: &NewtonPolygon, eps: f64, opts: &BoxOptions) -> Result<Vec<BoxClass>> {
    if phi.dimension() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: phi.dimension() });
    }
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("ε must be positive, got {eps}")));
    }
    let edges = edge_data(phi, poly);
    let level = -eps.log2();
    let mut out = Vec::new();
    for j1 in 0..=opts.cap {
        for j2 in 0..=opts.cap {
            let j = (j1, j2);
            if !box_meets(j, &opts.support) {
                continue;
            }
            let vertex = poly
                .vertices
                .iter()
                .map(|&a| (a, dominance_remainder(phi, a, j)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("polygon has a vertex");
            let edge = edges.iter().enumerate().find_map(|(i, e)| {
                let b = e.beta();
                let off = j1 as f64 / b - b * j2 as f64;
                (off.abs() <= opts.c_edge).then(|| (i, e, (j1 as f64 / b + b * j2 as f64) / 2.0))
            });
            let (kind, scaling, remainder, band) = if vertex.1 < opts.dominance {
                let a = vertex.0;
                (BoxKind::Vertex { alpha: a }, a, vertex.1, Some(hessian_exponent(a, j) as f64))
            } else if let Some((i, e, k)) = edge {
                let a = dominant_exponent(phi, j);
                let band = 2.0 * (e.distance_f64() - 1.0) * e.beta_tilde() * k;
                (
                    BoxKind::Edge { edge: i, beta2: rat_to_f64(&e.slope_param), k },
                    a,
                    dominance_remainder(phi, a, j),
                    Some(band),
                )
            } else {
                let a = dominant_exponent(phi, j);
                (BoxKind::Negligible, a, dominance_remainder(phi, a, j), None)
            };
            let rescaled = rescaled_phase(phi, scaling, j)?.to_string();
            let active = band.is_some_and(|b| (b - level).abs() <= opts.active_width);
            out.push(BoxClass { j, kind, scaling, rescaled, remainder, band_exponent: band, active });
        }
    }
    Ok(out)
}

/// Active boxes by class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ActiveCounts {
    /// Vertex boxes whose vertex lies on the diagonal.
    pub diagonal_vertex: usize,
    pub other_vertex: usize,
    pub edge: usize,
}

pub fn active_counts(boxes: &[BoxClass]) -> ActiveCounts {
    let mut c = ActiveCounts::default();
    for b in boxes.iter().filter(|b| b.active) {
        match b.kind {
            BoxKind::Vertex { alpha } if alpha.0 == alpha.1 => c.diagonal_vertex += 1,
            BoxKind::Vertex { .. } => c.other_vertex += 1,
            BoxKind::Edge { .. } => c.edge += 1,
            BoxKind::Negligible => {}
        }
    }
    c
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RescaleReport {
    pub j: (u32, u32),
    pub scaling: Lattice,
    /// `∫_box e^{iλ(Φ+ξ·x)} χ(u/ε) ψ dx`.
    pub box_integral: Complex64,
    /// `2^{−j₁−j₂}∫ e^{iλ_j(Φ_j+ξ_j·y)} χ(u_j/ε_j) ψ(2^{−j}y) dy` over the
    /// reference box.
    pub rescaled_integral: Complex64,
    pub integral_rel_diff: f64,
    /// `det Hess Φ_j = 2^{2(α−𝟙)·j} u(2^{−j}·)` as polynomials.
    pub hessian_identity_exact: bool,
    /// Largest relative pointwise mismatch of the same identity in binary64.
    pub hessian_rel_diff: f64,
}

impl RescaleReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.hessian_identity_exact && self.integral_rel_diff <= tol && self.hessian_rel_diff <= tol
    }
}

fn rel_diff(a: Complex64, b: Complex64) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}

/// Checks the change of variables onto the reference box and the rescaled
/// Hessian-determinant identity for one box.
#[allow(clippy::too_many_arguments)]
pub fn rescale_check(
    phi: &PolyPhase,
    class: &BoxClass,
    xi: [f64; 2],
    lambda: f64,
    eps: f64,
    chi: Cutoff,
    psi: &dyn Amplitude,
    opts: &QuadOptions,
) -> Result<RescaleReport> {
    let j = class.j;
    let alpha = class.scaling;
    let u = phi.hessian_det()?;
    let phi_j = rescaled_phase(phi, alpha, j)?;
    let u_j = phi_j.hessian_det()?;
    let e = hessian_exponent(alpha, j);
    let shrink = [pow2(-(j.0 as i64)), pow2(-(j.1 as i64))];
    let expected = u.scale_vars(&shrink)?.scale(&pow2(e));
    let hessian_identity_exact = (&u_j - &expected).is_zero();

    let scale = [2f64.powi(-(j.0 as i32)), 2f64.powi(-(j.1 as i32))];
    let (uf, ujf) = (u.to_float(), u_j.to_float());
    let mut hessian_rel_diff: f64 = 0.0;
    for y in grid_points(&[Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0)], 9) {
        let lhs = ujf.eval(&y);
        let rhs = 2f64.powi(e as i32) * uf.eval(&[scale[0] * y[0], scale[1] * y[1]]);
        let s = lhs.abs().max(rhs.abs());
        if s > 0.0 {
            hessian_rel_diff = hessian_rel_diff.max((lhs - rhs).abs() / s);
        }
    }

    let quads = box_quadrants(j);
    let mut box_integral = Complex64::zero();
    for q in &quads {
        let part = OscIntegrand::new(phi.to_float(), lambda, psi)?
            .with_cutoff(CutoffField::new(uf.clone(), chi, eps)?)
            .restricted_to(q)
            .integrate(&xi, opts)?;
        box_integral += part.value;
    }

    let weight = (alpha.0 as i32) * j.0 as i32 + (alpha.1 as i32) * j.1 as i32;
    let lambda_j = lambda * 2f64.powi(-weight);
    let xi_j = [xi[0] * 2f64.powi(weight) * scale[0], xi[1] * 2f64.powi(weight) * scale[1]];
    let eps_j = eps * 2f64.powi(e as i32);
    let supp = psi.support();
    let amp = FnAmplitude {
        f: |y: &[f64]| psi.value(&[scale[0] * y[0], scale[1] * y[1]]),
        support: vec![
            Interval::new(supp[0].lo / scale[0], supp[0].hi / scale[0]),
            Interval::new(supp[1].lo / scale[1], supp[1].hi / scale[1]),
        ],
        scale: psi.length_scale() / scale[0].max(scale[1]),
    };
    let phi_jf = phi_j.to_float();
    // a different node order, so that agreement is not an artifact of
    // power-of-two scalings mapping the nodes onto each other
    let dual = QuadOptions { order: opts.order + 4, ..opts.clone() };
    let mut rescaled = Complex64::zero();
    for q in &quads {
        let reference = [q[0].scale(1.0 / scale[0]), q[1].scale(1.0 / scale[1])];
        let part = OscIntegrand::new(phi_jf.clone(), lambda_j, &amp)?
            .with_cutoff(CutoffField::new(ujf.clone(), chi, eps_j)?)
            .restricted_to(&reference)
            .integrate(&xi_j, &dual)?;
        rescaled += part.value;
    }
    let rescaled_integral = rescaled * (scale[0] * scale[1]);

    Ok(RescaleReport {
        j,
        scaling: alpha,
        box_integral,
        rescaled_integral,
        integral_rel_diff: rel_diff(box_integral, rescaled_integral),
        hessian_identity_exact,
        hessian_rel_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::{CutoffSides, ProductBump};
    use crate::newton::build_polygon;
    use crate::polyphase::rat;
    use proptest::prelude::*;

    fn cubic() -> PolyPhase {
        PolyPhase::from_int_terms(2, &[(&[3, 0], 1), (&[0, 3], 1)])
    }

    fn quadratic() -> PolyPhase {
        PolyPhase::from_terms(2, vec![(vec![2, 0], rat(1, 2)), (vec![0, 2], rat(1, 2))]).unwrap()
    }

    fn record(lambda: f64, eps: f64, sup_val: f64) -> ScanRecord {
        ScanRecord { lambda, eps, xi: [0.0; 2], sup_val, origin_val: 0.0, nodes_used: 0, est_error: 0.0 }
    }

    fn quick() -> ScanOptions {
        ScanOptions { xi_grid: 9, refine_grid: 5, ..ScanOptions::default() }
    }

    #[test]
    fn quadratic_maximum_sits_at_the_origin() {
        let psi = ProductBump::standard(2);
        let phi = quadratic();
        // at lower frequencies |I| peaks on a small ring around the origin
        let (lambda, eps) = (256.0, 2.0 / 3.0);
        let r = sup_over_xi(&phi, lambda, eps, Cutoff::default(), &psi, None, &quick()).unwrap();
        assert!(r.xi[0].abs() < 0.02 && r.xi[1].abs() < 0.02, "{:?}", r.xi);
        assert!(r.sup_val >= r.origin_val);

        // brute-force grid oracle with the convergence-checked integrator
        let u = phi.hessian_det().unwrap().to_float();
        let ig = OscIntegrand::new(phi.to_float(), lambda, &psi)
            .unwrap()
            .with_cutoff(CutoffField::new(u, Cutoff::default(), eps).unwrap());
        let opts = QuadOptions::default();
        let mut best = ([9.0, 9.0], 0.0);
        for x in grid_points(&[Interval::new(-0.2, 0.2), Interval::new(-0.2, 0.2)], 5) {
            let v = ig.integrate(&x, &opts).unwrap().value.norm();
            if v > best.1 {
                best = (x, v);
            }
        }
        assert_eq!(best.0, [0.0, 0.0]);
        assert!(r.sup_val >= best.1 * (1.0 - 1e-9));
    }

    #[test]
    fn far_frequencies_are_small() {
        let psi = ProductBump::standard(2);
        let phi = cubic();
        let (lambda, eps) = (16.0, 0.25);
        let r = sup_over_xi(&phi, lambda, eps, Cutoff::default(), &psi, None, &quick()).unwrap();
        let bx = default_xi_box(&phi, &psi, 0.5).unwrap();
        let far = [bx[0].scale(10.0), bx[1].scale(10.0)];
        let u = phi.hessian_det().unwrap().to_float();
        let ig = OscIntegrand::new(phi.to_float(), lambda, &psi)
            .unwrap()
            .with_cutoff(CutoffField::new(u, Cutoff::default(), eps).unwrap());
        for xi in [[far[0].lo, 0.0], [far[0].hi, far[1].hi], [0.0, far[1].lo], [far[0].lo, far[1].hi]] {
            let v = ig.integrate(&xi, &QuadOptions::default()).unwrap().value.norm();
            assert!(v * 10.0 <= r.sup_val, "{xi:?}: {v} vs {}", r.sup_val);
        }
    }

    #[test]
    fn empty_cutoff_support_gives_zero() {
        let psi = ProductBump::standard(2);
        // det Hess = 1, so χ(1/ε) = 0 for ε = 10
        let r = sup_over_xi(&quadratic(), 64.0, 10.0, Cutoff::default(), &psi, None, &quick()).unwrap();
        assert_eq!(r.sup_val, 0.0);
        let r = sup_over_xi(&quadratic(), 64.0, 0.7, Cutoff::new(CutoffSides::Negative), &psi, None, &quick())
            .unwrap();
        assert_eq!(r.sup_val, 0.0);
    }

    #[test]
    fn default_xi_box_covers_the_gradient_range() {
        let psi = ProductBump::standard(2);
        let bx = default_xi_box(&cubic(), &psi, 0.5).unwrap();
        // −∂ᵢΦ = −3xᵢ² ranges over [−3/4, 0]
        for iv in bx {
            assert!(iv.lo <= -1.25 && iv.lo > -1.35);
            assert!(iv.hi >= 0.5 && iv.hi < 0.6);
        }
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let mut recs = Vec::new();
        for l in dyadic(4, 11) {
            for e in dyadic(-8, -2) {
                recs.push(record(l, e, 3.0 / (l * e.sqrt())));
            }
        }
        let fit = fit_decay(&recs, 0).unwrap();
        assert!((fit.rho_lambda + 1.0).abs() < 1e-12);
        assert!((fit.rho_eps + 0.5).abs() < 1e-12);
        assert!(fit.log_slope.abs() < 1e-12);
        assert!(fit.rms < 1e-12);
        assert!(!fit.log_factor_detected);
        assert_eq!(fit.points, 56);
    }

    #[test]
    fn log_factor_is_detected() {
        let mut recs = Vec::new();
        for l in dyadic(4, 11) {
            for e in dyadic(-8, -2) {
                // mild multiplicative noise keeps the t-statistic finite
                let noise = 1.0 + 0.01 * ((l * 7.0 + 1.0 / e).sin());
                recs.push(record(l, e, noise * (1.0 / e).ln() / (l * e.sqrt())));
            }
        }
        let fit = fit_decay(&recs, 1).unwrap();
        assert!(fit.log_slope > 0.0);
        assert!(fit.log_tstat > 4.0, "{}", fit.log_tstat);
        assert!(fit.log_factor_detected);
        let aug = fit.augmented.unwrap();
        assert!(aug.rms < fit.rms);
        assert!((aug.log_power - 1.0).abs() < 0.05);
    }

    #[test]
    fn degenerate_designs_are_reported() {
        let few: Vec<_> = dyadic(0, 3).into_iter().map(|l| record(l, 1.0 / l, 1.0)).collect();
        assert!(matches!(fit_decay(&few, 0), Err(Error::IllConditioned(_))));
        // λ and ε move together: the two slopes cannot be separated
        let tied: Vec<_> = dyadic(0, 9).into_iter().map(|l| record(l, 1.0 / l, 1.0 / l)).collect();
        assert!(matches!(fit_decay(&tied, 0), Err(Error::IllConditioned(_))));
        let mut zero: Vec<_> = Vec::new();
        for l in dyadic(0, 6) {
            for e in dyadic(-7, -1) {
                zero.push(record(l, e, 1.0));
            }
        }
        zero[3].sup_val = 0.0;
        assert!(matches!(fit_decay(&zero, 0), Err(Error::IllConditioned(_))));
    }

    fn classes(phi: &PolyPhase, eps: f64) -> Vec<BoxClass> {
        let poly = build_polygon(phi).unwrap();
        classify_boxes(phi, &poly, eps, &BoxOptions::default()).unwrap()
    }

    #[test]
    fn cubic_boxes_split_into_edge_and_axis_vertices() {
        let boxes = classes(&cubic(), 2f64.powi(-8));
        for b in &boxes {
            let d = b.j.0 as i64 - b.j.1 as i64;
            match b.kind {
                BoxKind::Edge { edge, beta2, .. } => {
                    assert!(d.abs() <= 2, "{:?}", b.j);
                    assert_eq!(edge, 0);
                    assert_eq!(beta2, 1.0);
                }
                BoxKind::Vertex { alpha } => {
                    assert!(d.abs() >= 3, "{:?}", b.j);
                    assert_eq!(alpha, if d > 0 { (0, 3) } else { (3, 0) });
                    assert!(b.remainder < 0.1);
                }
                BoxKind::Negligible => panic!("negligible box {:?}", b.j),
            }
        }
        assert!(boxes.iter().any(|b| b.j == (5, 5) && matches!(b.kind, BoxKind::Edge { .. })));
    }

    #[test]
    fn cusp_edge_band_follows_the_parabola() {
        let boxes = classes(&crate::decayscan::cusp_phase(), 2f64.powi(-8));
        for b in &boxes {
            let m = 2 * b.j.0 as i64 - b.j.1 as i64;
            if let BoxKind::Edge { beta2, k, .. } = b.kind {
                assert_eq!(beta2, 0.5);
                assert!(m.abs() as f64 <= 2.0 * 2f64.sqrt() + 1e-12, "{:?}", b.j);
                assert!(k > 0.0 || b.j == (0, 0));
            }
            if m.abs() <= 2 {
                assert!(matches!(b.kind, BoxKind::Edge { .. }), "{:?}", b.j);
            }
        }
        let on_band = boxes.iter().find(|b| b.j == (3, 6)).unwrap();
        assert!(matches!(on_band.kind, BoxKind::Edge { .. }));
        // both vertex dominances appear far from the band
        assert!(boxes.iter().any(|b| b.kind == BoxKind::Vertex { alpha: (4, 0) }));
        assert!(boxes.iter().any(|b| b.kind == BoxKind::Vertex { alpha: (0, 2) }));
    }

    #[test]
    fn boxes_form_a_partition() {
        for phi in [cubic(), cusp_phase(), PolyPhase::from_int_terms(2, &[(&[2, 2], 1)])] {
            let opts = BoxOptions::default();
            let boxes = classes(&phi, 1e-3);
            let mut seen = std::collections::BTreeSet::new();
            for b in &boxes {
                assert!(seen.insert(b.j), "box {:?} listed twice", b.j);
            }
            let expected: Vec<_> = (0..=opts.cap)
                .flat_map(|a| (0..=opts.cap).map(move |b| (a, b)))
                .filter(|&j| box_meets(j, &opts.support))
                .collect();
            assert_eq!(seen.into_iter().collect::<Vec<_>>(), expected);
            // the unit-scale ring lies outside the standard bump
            assert!(!expected.contains(&(0, 0)));
        }
    }

    #[test]
    fn active_box_counts() {
        let diag = PolyPhase::from_int_terms(2, &[(&[2, 2], 1)]);
        let opts = BoxOptions { cap: 24, ..BoxOptions::default() };
        let count = |phi: &PolyPhase, level: i32| {
            let poly = build_polygon(phi).unwrap();
            active_counts(&classify_boxes(phi, &poly, 2f64.powi(-level), &opts).unwrap())
        };
        // vertex on the diagonal: the active set grows linearly in log(1/ε)
        let d: Vec<usize> = [8, 16, 24, 32].iter().map(|&l| count(&diag, l).diagonal_vertex).collect();
        assert!(d.windows(2).all(|w| w[1] > w[0]), "{d:?}");
        let growth = d[3] as f64 / d[1] as f64;
        assert!((1.6..=2.4).contains(&growth), "{d:?}");
        // a single edge: a bounded number of active edge boxes at every scale
        let e: Vec<usize> = [8, 16, 24, 32].iter().map(|&l| count(&cubic(), l).edge).collect();
        assert!(e.iter().all(|&c| c > 0 && c <= 8), "{e:?}");
        assert_eq!(e[1], e[2]);
    }

    #[test]
    fn rescaled_hessian_identity_is_exact() {
        for phi in [cubic(), cusp_phase()] {
            for j in [(1, 1), (3, 3), (3, 6), (7, 2)] {
                for alpha in [(3, 0), (0, 2), (2, 1)] {
                    let pj = rescaled_phase(&phi, alpha, j).unwrap();
                    let lhs = pj.hessian_det().unwrap();
                    let shrink = [pow2(-(j.0 as i64)), pow2(-(j.1 as i64))];
                    let rhs = phi.hessian_det().unwrap().scale_vars(&shrink).unwrap().scale(&pow2(hessian_exponent(alpha, j)));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    fn box_at(phi: &PolyPhase, j: (u32, u32)) -> BoxClass {
        let poly = build_polygon(phi).unwrap();
        let opts = BoxOptions { cap: j.0.max(j.1), ..BoxOptions::default() };
        classify_boxes(phi, &poly, 1e-3, &opts).unwrap().into_iter().find(|b| b.j == j).unwrap()
    }

    #[test]
    fn rescaling_identities_on_boxes() {
        let psi = ProductBump::standard(2);
        let opts = QuadOptions { tol: 1e-11, ..QuadOptions::default() };
        let chi = Cutoff::default();
        let cases = [(cubic(), (3, 3), [-0.01, 0.02]), (cubic(), (6, 2), [0.0, -0.05]), (cusp_phase(), (3, 6), [0.0, 0.0])];
        for (phi, j, xi) in cases {
            let b = box_at(&phi, j);
            // pick ε so that the cutoff band crosses the box
            let c = [0.75 * 2f64.powi(-(j.0 as i32)), 0.75 * 2f64.powi(-(j.1 as i32))];
            let eps = phi.hessian_det().unwrap().eval_f64(&c).unwrap().abs() / 1.5;
            let r = rescale_check(&phi, &b, xi, 512.0, eps, chi, &psi, &opts).unwrap();
            assert!(r.box_integral.norm() > 0.0, "{j:?}");
            assert!(r.holds(1e-8), "{r:?}");
        }
    }

    #[test]
    fn box_outside_the_support_is_empty() {
        let psi = ProductBump::standard(2);
        let b = BoxClass {
            j: (0, 0),
            kind: BoxKind::Negligible,
            scaling: (3, 0),
            rescaled: String::new(),
            remainder: 0.0,
            band_exponent: None,
            active: false,
        };
        let r = rescale_check(&cubic(), &b, [0.0, 0.0], 64.0, 0.1, Cutoff::default(), &psi, &QuadOptions::default())
            .unwrap();
        assert_eq!(r.box_integral, Complex64::zero());
        assert_eq!(r.rescaled_integral, Complex64::zero());
        assert!(r.holds(0.0));
    }

    #[test]
    fn counterexample_substitution_is_exact() {
        let psi = ProductBump::standard(2);
        let opts = QuadOptions { tol: 1e-11, ..QuadOptions::default() };
        let prof = counterexample_profile(&dyadic(4, 8), Cutoff::default(), &psi, &opts).unwrap();
        for row in &prof.rows {
            assert!(row.substitution_rel_diff < 1e-8, "{row:?}");
            assert_eq!(row.eps, row.lambda.powf(-0.5));
        }
        assert!(prof.limit_target > 0.0);
        assert!(prof.fitted_exponent < -0.4 && prof.fitted_exponent > -0.6, "{}", prof.fitted_exponent);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn power_laws_are_recovered(rl in -3.0f64..0.0, re in -2.0f64..0.0, c in 0.1f64..10.0) {
            let mut recs = Vec::new();
            for l in dyadic(2, 9) {
                for e in dyadic(-9, -3) {
                    recs.push(record(l, e, c * l.powf(rl) * e.powf(re)));
                }
            }
            let fit = fit_decay(&recs, 0).unwrap();
            prop_assert!((fit.rho_lambda - rl).abs() < 1e-12);
            prop_assert!((fit.rho_eps - re).abs() < 1e-12);
        }

        #[test]
        fn every_box_gets_one_class(
            terms in proptest::collection::vec(((0u32..6, 0u32..6), -3i64..4), 1..5),
        ) {
            let mut t: Vec<(Vec<u32>, Rational)> = terms
                .into_iter()
                .filter(|((a, b), _)| a + b >= 2)
                .map(|((a, b), c)| (vec![a, b], Rational::from_integer(c.into())))
                .collect();
            t.push((vec![4, 0], Rational::one()));
            t.push((vec![0, 5], Rational::one()));
            let phi = PolyPhase::from_terms(2, t).unwrap();
            prop_assume!(!phi.is_zero());
            let poly = build_polygon(&phi).unwrap();
            let opts = BoxOptions { cap: 8, ..BoxOptions::default() };
            let boxes = classify_boxes(&phi, &poly, 1e-3, &opts).unwrap();
            let mut seen = std::collections::BTreeSet::new();
            for b in &boxes {
                prop_assert!(seen.insert(b.j));
                if let BoxKind::Vertex { alpha } = b.kind {
                    prop_assert!(poly.vertices.contains(&alpha));
                    prop_assert!(b.remainder < opts.dominance);
                }
            }
            // boxes with a zero index lie outside the standard bump
            prop_assert_eq!(seen.len(), 8 * 8);
        }
    }
}
