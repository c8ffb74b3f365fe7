//! Brute-force panel quadrature for oscillatory integrals.
//!
//! Integrals have the form `∫ e^{iλ(Φ(x)+ξ·x)} χ(u(x)/ε) ψ(x) dx` with a
//! polynomial phase `Φ`, an optional polynomial cutoff field `u` and a
//! compactly supported amplitude `ψ`. The support box of `ψ` is split into
//! panels until every panel keeps the phase change, the cutoff argument
//! change and the amplitude width under budget. Panels on which interval
//! bounds show `χ(u/ε) ≡ 0` are dropped, which is what makes the thin
//! cutoff supports affordable.
//!
//! Each panel carries a tensor Gauss–Legendre rule. Accuracy is checked by
//! doubling passes: pass `k` splits every panel into `2^k` pieces per axis,
//! and the result is accepted once two passes agree.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::{Amplitude, Cutoff};
use crate::error::{Error, Result};
use crate::gauss::{compensated_sum, GaussLegendre};
use crate::interval::Interval;
use crate::polyphase::{FloatPoly, PolyPhase};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadOptions {
    /// Gauss–Legendre nodes per panel and axis.
    pub order: usize,
    /// Largest phase change `λ·Σ wᵢ sup|∂ᵢΦ+ξᵢ|` allowed on a panel.
    pub phase_budget: f64,
    /// Largest change of the cutoff argument `u/ε` across a panel.
    pub cutoff_budget: f64,
    /// Panel widths stay below this fraction of the amplitude length scale.
    pub amplitude_fraction: f64,
    /// Relative agreement between consecutive passes.
    pub tol: f64,
    /// Absolute agreement, relative to `∫|χψ|`; covers near-cancelling
    /// integrals.
    pub abs_tol: f64,
    pub max_passes: usize,
    /// Cap on integrand evaluations summed over all passes.
    pub max_nodes: u64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            order: 12,
            phase_budget: PI,
            cutoff_budget: 0.25,
            amplitude_fraction: 0.25,
            tol: 1e-8,
            abs_tol: 1e-12,
            max_passes: 6,
            max_nodes: 400_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegralValue {
    pub value: Complex64,
    /// Magnitude of the last refinement delta.
    pub est_error: f64,
    pub nodes_used: u64,
    /// `∫|χψ|` on the final pass: the trivial bound for `|value|`.
    pub abs_integral: f64,
}

impl IntegralValue {
    pub fn zero() -> Self {
        IntegralValue { value: Complex64::new(0.0, 0.0), est_error: 0.0, nodes_used: 0, abs_integral: 0.0 }
    }

    pub fn scaled(self, c: f64) -> Self {
        IntegralValue {
            value: self.value * c,
            est_error: self.est_error * c.abs(),
            abs_integral: self.abs_integral * c.abs(),
            ..self
        }
    }
}

/// The factor `χ(u/ε)`.
#[derive(Clone, Debug)]
pub struct CutoffField {
    pub u: FloatPoly,
    grad: Vec<FloatPoly>,
    pub chi: Cutoff,
    pub eps: f64,
}

impl CutoffField {
    pub fn new(u: FloatPoly, chi: Cutoff, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Invalid(format!("cutoff scale must be positive, got {eps}")));
        }
        let grad = u.gradient();
        Ok(CutoffField { u, grad, chi, eps })
    }

    #[inline]
    fn value(&self, x: &[f64]) -> f64 {
        self.chi.value(self.u.eval(x) / self.eps)
    }
}

/// An oscillatory integrand without its linear `ξ·x` term.
pub struct OscIntegrand<'a> {
    phase: FloatPoly,
    grad: Vec<FloatPoly>,
    lambda: f64,
    cutoff: Option<CutoffField>,
    amplitude: &'a dyn Amplitude,
    domain: Vec<Interval>,
}

type Panel = Vec<Interval>;

impl<'a> OscIntegrand<'a> {
    pub fn new(phase: FloatPoly, lambda: f64, amplitude: &'a dyn Amplitude) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Invalid(format!("frequency must be positive, got {lambda}")));
        }
        if phase.dimension() != amplitude.dim() {
            return Err(Error::DimensionMismatch { expected: phase.dimension(), got: amplitude.dim() });
        }
        let grad = phase.gradient();
        let domain = amplitude.support();
        Ok(OscIntegrand { phase, grad, lambda, cutoff: None, amplitude, domain })
    }

    pub fn with_cutoff(mut self, cutoff: CutoffField) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    /// Restricts integration to a sub-box of the amplitude support.
    pub fn restricted_to(mut self, bx: &[Interval]) -> Self {
        self.domain = self
            .domain
            .iter()
            .zip(bx)
            .map(|(a, b)| Interval { lo: a.lo.max(b.lo), hi: a.hi.min(b.hi) })
            .collect();
        self
    }

    pub fn dim(&self) -> usize {
        self.phase.dimension()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn culled(&self, p: &[Interval]) -> bool {
        match &self.cutoff {
            Some(c) => {
                let r = c.u.range(p).inflate(1e-12, 0.0).scale(1.0 / c.eps);
                !c.chi.may_be_active(r)
            }
            None => false,
        }
    }

    /// Panels meeting all budgets for every `ξ` in `xi`.
    pub fn plan(&self, xi: &[Interval], opts: &QuadOptions) -> Result<Vec<Panel>> {
        let n = self.dim();
        if xi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: xi.len() });
        }
        let per_panel = (opts.order as u64).pow(n as u32);
        let max_panels = (opts.max_nodes / per_panel.max(1)) as usize;
        let amp_width = opts.amplitude_fraction * self.amplitude.length_scale();
        let mut out = Vec::new();
        if self.domain.iter().any(|iv| iv.width() <= 0.0) {
            return Ok(out);
        }
        let mut stack = vec![self.domain.clone()];
        let mut demand = vec![0.0; n];
        while let Some(p) = stack.pop() {
            if self.culled(&p) {
                continue;
            }
            let mut phase = 0.0;
            let mut cut = 0.0;
            for i in 0..n {
                let w = p[i].width();
                let ph = self.lambda * w * (self.grad[i].range(&p) + xi[i]).mag();
                let cu = match &self.cutoff {
                    Some(c) => w * c.grad[i].range(&p).mag() / c.eps,
                    None => 0.0,
                };
                phase += ph;
                cut += cu;
                demand[i] = (ph / opts.phase_budget).max(cu / opts.cutoff_budget).max(w / amp_width);
            }
            let ok = phase <= opts.phase_budget
                && cut <= opts.cutoff_budget
                && p.iter().all(|iv| iv.width() <= amp_width);
            if ok {
                out.push(p);
                if out.len() > max_panels {
                    return Err(Error::Budget(format!(
                        "more than {max_panels} panels needed at frequency {}",
                        self.lambda
                    )));
                }
                continue;
            }
            let axis = (0..n).fold(0, |b, i| if demand[i] > demand[b] { i } else { b });
            if p[axis].width() <= 1e-13 * (1.0 + p[axis].mag()) {
                return Err(Error::Budget(format!("panel width underflow near {:?}", p)));
            }
            let (lo, hi) = p[axis].split();
            let mut right = p.clone();
            right[axis] = hi;
            let mut left = p;
            left[axis] = lo;
            stack.push(right);
            stack.push(left);
        }
        Ok(out)
    }

    /// Composite nodes of a panel at refinement level `k`, per axis.
    fn axis_nodes(rule: &GaussLegendre, iv: Interval, k: usize) -> (Vec<f64>, Vec<f64>) {
        let pieces = 1usize << k;
        let h = iv.width() / pieces as f64;
        let mut xs = Vec::with_capacity(pieces * rule.order());
        let mut ws = Vec::with_capacity(pieces * rule.order());
        for j in 0..pieces {
            let a = iv.lo + h * j as f64;
            for (x, w) in rule.mapped(a, a + h) {
                xs.push(x);
                ws.push(w);
            }
        }
        (xs, ws)
    }

    /// Weight `χψ` (without the oscillation) at a node.
    #[inline]
    fn envelope(&self, x: &[f64]) -> f64 {
        let a = self.amplitude.value(x);
        if a == 0.0 {
            return 0.0;
        }
        match &self.cutoff {
            Some(c) => a * c.value(x),
            None => a,
        }
    }

    fn eval_panel(&self, p: &[Interval], xi: &[f64], rule: &GaussLegendre, k: usize) -> (Complex64, f64) {
        let n = p.len();
        let axes: Vec<(Vec<f64>, Vec<f64>)> = p.iter().map(|iv| Self::axis_nodes(rule, *iv, k)).collect();
        let m = axes[0].0.len();
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        let mut sum = Complex64::new(0.0, 0.0);
        let mut l1 = 0.0;
        loop {
            let mut w = 1.0;
            for d in 0..n {
                x[d] = axes[d].0[idx[d]];
                w *= axes[d].1[idx[d]];
            }
            let env = self.envelope(&x);
            if env != 0.0 {
                let lin: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
                let ph = self.lambda * (self.phase.eval(&x) + lin);
                let (s, c) = ph.sin_cos();
                sum += Complex64::new(c, s) * (w * env);
                l1 += w * env.abs();
            }
            // odometer, last axis fastest
            let mut d = n;
            loop {
                if d == 0 {
                    return (sum, l1);
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < m {
                    break;
                }
                idx[d] = 0;
            }
        }
    }

    fn pass(&self, panels: &[Panel], xi: &[f64], rule: &GaussLegendre, k: usize) -> (Complex64, f64) {
        let parts: Vec<(Complex64, f64)> =
            panels.par_iter().with_min_len(16).map(|p| self.eval_panel(p, xi, rule, k)).collect();
        let l1 = compensated_sum(parts.iter().map(|(_, l)| Complex64::new(*l, 0.0))).re;
        (compensated_sum(parts.into_iter().map(|(v, _)| v)), l1)
    }

    /// Integral at a single `ξ`, refined until two passes agree.
    pub fn integrate(&self, xi: &[f64], opts: &QuadOptions) -> Result<IntegralValue> {
        let xi_box: Vec<Interval> = xi.iter().map(|&v| Interval::point(v)).collect();
        let panels = self.plan(&xi_box, opts)?;
        self.integrate_planned(&panels, xi, opts)
    }

    fn integrate_planned(&self, panels: &[Panel], xi: &[f64], opts: &QuadOptions) -> Result<IntegralValue> {
        if panels.is_empty() {
            return Ok(IntegralValue::zero());
        }
        let n = self.dim() as u32;
        let rule = GaussLegendre::cached(opts.order);
        let mut total = 0u64;
        let mut prev: Option<Complex64> = None;
        for k in 0..=opts.max_passes {
            let nodes = panels.len() as u64 * ((opts.order as u64) << k).pow(n);
            if total + nodes > opts.max_nodes {
                return Err(Error::Budget(format!(
                    "quadrature did not converge within {} nodes at frequency {}",
                    opts.max_nodes, self.lambda
                )));
            }
            let (v, l1) = self.pass(panels, xi, rule, k);
            total += nodes;
            if let Some(pv) = prev {
                let d = (v - pv).norm();
                if d <= opts.tol * v.norm() || d <= opts.abs_tol * l1 {
                    return Ok(IntegralValue { value: v, est_error: d, nodes_used: total, abs_integral: l1 });
                }
            }
            prev = Some(v);
        }
        Err(Error::Budget(format!(
            "quadrature did not converge in {} passes at frequency {}",
            opts.max_passes, self.lambda
        )))
    }

    /// Tabulates the non-`ξ` part of the integrand for fast evaluation over
    /// a box of `ξ` values. Two-dimensional integrands only.
    pub fn prepare(&self, xi_box: &[Interval], opts: &QuadOptions) -> Result<PreparedIntegral> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.dim() });
        }
        let panels = self.plan(xi_box, opts)?;
        let rule = GaussLegendre::cached(opts.order);
        let m = opts.order;
        let tabulated: Vec<Option<(Vec<f64>, Vec<f64>, Vec<Complex64>)>> = panels
            .par_iter()
            .with_min_len(16)
            .map(|p| {
                let (x1, w1) = Self::axis_nodes(rule, p[0], 0);
                let (x2, w2) = Self::axis_nodes(rule, p[1], 0);
                let mut w = vec![Complex64::new(0.0, 0.0); m * m];
                let mut any = false;
                for a in 0..m {
                    for b in 0..m {
                        let x = [x1[a], x2[b]];
                        let env = self.envelope(&x);
                        if env != 0.0 {
                            let (s, c) = (self.lambda * self.phase.eval2(x[0], x[1])).sin_cos();
                            w[a * m + b] = Complex64::new(c, s) * (w1[a] * w2[b] * env);
                            any = true;
                        }
                    }
                }
                any.then_some((x1, x2, w))
            })
            .collect();
        let mut prep = PreparedIntegral {
            lambda: self.lambda,
            order: m,
            x1: Vec::new(),
            x2: Vec::new(),
            weights: Vec::new(),
            abs_integral: 0.0,
            nodes: panels.len() as u64 * (m * m) as u64,
        };
        for (x1, x2, w) in tabulated.into_iter().flatten() {
            prep.x1.extend(x1);
            prep.x2.extend(x2);
            prep.weights.extend(w);
        }
        prep.abs_integral = compensated_sum(prep.weights.iter().map(|w| Complex64::new(w.norm(), 0.0))).re;
        Ok(prep)
    }
}

/// Tabulated weights `w·χψ·e^{iλΦ}` at fixed nodes; evaluating at a new `ξ`
/// only costs the separable factors `e^{iλξ₁x₁}e^{iλξ₂x₂}`.
#[derive(Clone, Debug)]
pub struct PreparedIntegral {
    lambda: f64,
    order: usize,
    x1: Vec<f64>,
    x2: Vec<f64>,
    weights: Vec<Complex64>,
    pub abs_integral: f64,
    /// Nodes tabulated, including panels found to vanish.
    pub nodes: u64,
}

impl PreparedIntegral {
    pub fn panels(&self) -> usize {
        self.x1.len() / self.order.max(1)
    }

    pub fn eval(&self, xi: [f64; 2]) -> Complex64 {
        let m = self.order;
        let k1 = self.lambda * xi[0];
        let k2 = self.lambda * xi[1];
        let parts: Vec<Complex64> = (0..self.panels())
            .into_par_iter()
            .with_min_len(64)
            .map(|p| {
                let x1 = &self.x1[p * m..(p + 1) * m];
                let x2 = &self.x2[p * m..(p + 1) * m];
                let w = &self.weights[p * m * m..(p + 1) * m * m];
                let e2: Vec<Complex64> = x2.iter().map(|x| Complex64::cis(k2 * x)).collect();
                let mut s = Complex64::new(0.0, 0.0);
                for a in 0..m {
                    let row = &w[a * m..(a + 1) * m];
                    let inner: Complex64 = row.iter().zip(&e2).map(|(w, e)| w * e).sum();
                    s += Complex64::cis(k1 * x1[a]) * inner;
                }
                s
            })
            .collect();
        compensated_sum(parts)
    }

    /// Values on the tensor grid `xi1 × xi2`, row-major in `xi1`. Each panel
    /// contributes `E₁ W E₂` with `E` the panel's exponential factors, which
    /// is much cheaper than one [`eval`](Self::eval) per grid point.
    pub fn eval_grid(&self, xi1: &[f64], xi2: &[f64]) -> Vec<Complex64> {
        let m = self.order;
        let (g1, g2) = (xi1.len(), xi2.len());
        let zero = Complex64::new(0.0, 0.0);
        // fixed chunks summed in order keep the result independent of the
        // thread count
        let panels: Vec<usize> = (0..self.panels()).collect();
        let parts: Vec<Vec<Complex64>> = panels
            .par_chunks(256)
            .map(|chunk| {
                let mut acc = vec![zero; g1 * g2];
                for &p in chunk {
                    let x1 = &self.x1[p * m..(p + 1) * m];
                    let x2 = &self.x2[p * m..(p + 1) * m];
                    let w = &self.weights[p * m * m..(p + 1) * m * m];
                    // inner[a][b] = Σ_c w[a][c] e^{iλ ξ2_b x2_c}
                    let e2: Vec<Complex64> = xi2
                        .iter()
                        .flat_map(|&k| x2.iter().map(move |&x| Complex64::cis(self.lambda * k * x)))
                        .collect();
                    let mut inner = vec![zero; m * g2];
                    for a in 0..m {
                        let row = &w[a * m..(a + 1) * m];
                        for b in 0..g2 {
                            let e = &e2[b * m..(b + 1) * m];
                            inner[a * g2 + b] = row.iter().zip(e).map(|(w, e)| w * e).sum();
                        }
                    }
                    for (i, &k) in xi1.iter().enumerate() {
                        let out = &mut acc[i * g2..(i + 1) * g2];
                        for a in 0..m {
                            let e = Complex64::cis(self.lambda * k * x1[a]);
                            for (o, v) in out.iter_mut().zip(&inner[a * g2..(a + 1) * g2]) {
                                *o += e * v;
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![zero; g1 * g2];
        for (i, o) in out.iter_mut().enumerate() {
            *o = compensated_sum(parts.iter().map(|p| p[i]));
        }
        out
    }
}

/// `∫ e^{iλ(Φ+ξ·x)} χ(ε⁻¹ det Hess Φ) ψ dx` for a two-variable phase.
pub fn osc2d(
    phi: &PolyPhase,
    xi: [f64; 2],
    lambda: f64,
    chi: Cutoff,
    eps: f64,
    psi: &dyn Amplitude,
    opts: &QuadOptions,
) -> Result<IntegralValue> {
    if phi.dimension() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: phi.dimension() });
    }
    let u = phi.hessian_det()?.to_float();
    OscIntegrand::new(phi.to_float(), lambda, psi)?
        .with_cutoff(CutoffField::new(u, chi, eps)?)
        .integrate(&xi, opts)
}

/// `t^{−n/2} ∫ e^{i(Φ−Φ(p))/t} ψ dx`.
pub fn nondeg_integral(
    phi: &PolyPhase,
    psi: &dyn Amplitude,
    p: &[f64],
    t: f64,
    opts: &QuadOptions,
) -> Result<IntegralValue> {
    if !(t > 0.0) {
        return Err(Error::Invalid(format!("time must be positive, got {t}")));
    }
    let n = phi.dimension();
    let base = phi.eval_f64(p)?;
    let shifted = phi.to_float().add(&FloatPoly::new(n, vec![(vec![0; n], -base)]));
    let v = OscIntegrand::new(shifted, 1.0 / t, psi)?.integrate(&vec![0.0; n], opts)?;
    Ok(v.scaled(t.powf(-(n as f64) / 2.0)))
}

/// A one-dimensional oscillatory integral `∫_I e^{if(s)/t} w(s) ds`.
pub struct Osc1d<'a> {
    pub phase: &'a (dyn Fn(f64) -> f64 + Sync),
    pub phase_deriv: &'a (dyn Fn(f64) -> f64 + Sync),
    pub weight: &'a (dyn Fn(f64) -> f64 + Sync),
    pub interval: Interval,
    /// Panels never exceed this width (the weight's length scale).
    pub max_width: f64,
}

impl Osc1d<'_> {
    fn sup_deriv(&self, a: f64, b: f64) -> f64 {
        (0..=8)
            .map(|i| (self.phase_deriv)(a + (b - a) * i as f64 / 8.0).abs())
            .fold(0.0, f64::max)
            * 1.25
    }

    fn plan(&self, t: f64, opts: &QuadOptions) -> Result<Vec<Interval>> {
        let max_panels = (opts.max_nodes / opts.order as u64) as usize;
        let mut out = Vec::new();
        let mut stack = vec![self.interval];
        while let Some(p) = stack.pop() {
            let w = p.width();
            if w * self.sup_deriv(p.lo, p.hi) / t <= opts.phase_budget && w <= self.max_width {
                out.push(p);
                if out.len() > max_panels {
                    return Err(Error::Budget(format!("more than {max_panels} panels needed at t = {t}")));
                }
                continue;
            }
            if w <= 1e-13 * (1.0 + p.mag()) {
                return Err(Error::Budget(format!("panel width underflow near {}", p.lo)));
            }
            let (l, r) = p.split();
            stack.push(r);
            stack.push(l);
        }
        Ok(out)
    }

    pub fn integrate(&self, t: f64, opts: &QuadOptions) -> Result<IntegralValue> {
        if !(t > 0.0) {
            return Err(Error::Invalid(format!("time must be positive, got {t}")));
        }
        if self.interval.width() <= 0.0 {
            return Ok(IntegralValue::zero());
        }
        let panels = self.plan(t, opts)?;
        let rule = GaussLegendre::cached(opts.order);
        let mut total = 0u64;
        let mut prev: Option<Complex64> = None;
        for k in 0..=opts.max_passes {
            let nodes = panels.len() as u64 * ((opts.order as u64) << k);
            if total + nodes > opts.max_nodes {
                break;
            }
            let parts: Vec<(Complex64, f64)> = panels
                .par_iter()
                .with_min_len(64)
                .map(|p| {
                    let (xs, ws) = OscIntegrand::axis_nodes(rule, *p, k);
                    let mut s = Complex64::new(0.0, 0.0);
                    let mut l1 = 0.0;
                    for (x, w) in xs.into_iter().zip(ws) {
                        let a = (self.weight)(x);
                        if a != 0.0 {
                            s += Complex64::cis((self.phase)(x) / t) * (w * a);
                            l1 += w * a.abs();
                        }
                    }
                    (s, l1)
                })
                .collect();
            total += nodes;
            let l1 = parts.iter().map(|p| p.1).sum::<f64>();
            let v = compensated_sum(parts.into_iter().map(|p| p.0));
            if let Some(pv) = prev {
                let d = (v - pv).norm();
                if d <= opts.tol * v.norm() || d <= opts.abs_tol * l1 {
                    return Ok(IntegralValue { value: v, est_error: d, nodes_used: total, abs_integral: l1 });
                }
            }
            prev = Some(v);
        }
        Err(Error::Budget(format!("one-dimensional quadrature did not converge at t = {t}")))
    }
}

/// Convenience wrapper for [`Osc1d::integrate`].
pub fn osc1d(
    f: &(dyn Fn(f64) -> f64 + Sync),
    df: &(dyn Fn(f64) -> f64 + Sync),
    w: &(dyn Fn(f64) -> f64 + Sync),
    t: f64,
    interval: Interval,
    opts: &QuadOptions,
) -> Result<IntegralValue> {
    Osc1d { phase: f, phase_deriv: df, weight: w, interval, max_width: interval.width().max(1e-300) / 4.0 }
        .integrate(t, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::{bump1, FnAmplitude, GaussianAmplitude, ProductBump};
    use crate::gauss::integrate_adaptive;
    use proptest::prelude::*;

    fn cusp() -> PolyPhase {
        PolyPhase::from_int_terms(2, &[(&[0, 2], 1), (&[2, 1], 2), (&[4, 0], 1)])
    }

    fn cubic() -> PolyPhase {
        PolyPhase::from_int_terms(2, &[(&[3, 0], 1), (&[0, 3], 1)])
    }

    #[test]
    fn zero_amplitude_and_empty_cutoff_give_zero() {
        let zero = FnAmplitude { f: |_: &[f64]| 0.0, support: vec![Interval::new(-0.5, 0.5); 2], scale: 0.5 };
        let opts = QuadOptions::default();
        let v = osc2d(&cubic(), [0.0, 0.0], 64.0, Cutoff::default(), 0.1, &zero, &opts).unwrap();
        assert_eq!(v.value, Complex64::new(0.0, 0.0));
        // sup |36 x1 x2| on the bump support is 9
        let psi = ProductBump::standard(2);
        let v = osc2d(&cubic(), [0.0, 0.0], 64.0, Cutoff::default(), 10.0, &psi, &opts).unwrap();
        assert_eq!(v.value, Complex64::new(0.0, 0.0));
        assert_eq!(v.nodes_used, 0);
    }

    #[test]
    fn gaussian_window_matches_complex_gaussian() {
        // ∫ e^{i|x|²/(2t)} e^{-|x|²} dx = π / (1 − i/(2t)), then times 1/t
        let amp = GaussianAmplitude { dim: 2, truncate: 4.0 };
        let phi = PolyPhase::from_terms(
            2,
            vec![(vec![2, 0], crate::rat(1, 2)), (vec![0, 2], crate::rat(1, 2))],
        )
        .unwrap();
        for &t in &[1.0, 0.5, 0.1] {
            let v = nondeg_integral(&phi, &amp, &[0.0, 0.0], t, &QuadOptions::default()).unwrap();
            let exact = Complex64::new(PI, 0.0) / Complex64::new(1.0, -1.0 / (2.0 * t)) / t;
            assert!((v.value - exact).norm() / exact.norm() < 1e-6, "t = {t}: {} vs {exact}", v.value);
        }
    }

    #[test]
    fn one_dimensional_examples() {
        let opts = QuadOptions::default();
        let one = |_: f64| 1.0;
        let zero = |_: f64| 0.0;
        let v = osc1d(&zero, &zero, &one, 0.01, Interval::new(0.0, 1.0), &opts).unwrap();
        assert!((v.value - Complex64::new(1.0, 0.0)).norm() < 1e-14);

        let lin = |s: f64| s;
        for &t in &[1.0, 0.1, 1e-3, 1e-4] {
            let v = osc1d(&lin, &one, &one, t, Interval::new(0.0, 1.0), &opts).unwrap();
            let exact = (Complex64::cis(1.0 / t) - 1.0) * t / Complex64::i();
            assert!((v.value - exact).norm() < 1e-10, "t = {t}");
        }

        let quad = |s: f64| 0.5 * s * s;
        let dquad = |s: f64| s;
        let w = |s: f64| bump1(s, 8.0) * std::f64::consts::E;
        let t = 1e-3;
        let v = osc1d(&quad, &dquad, &w, t, Interval::new(-8.0, 8.0), &opts).unwrap();
        let fresnel = Complex64::cis(PI / 4.0) * (2.0 * PI * t).sqrt();
        assert!((v.value - fresnel).norm() / fresnel.norm() < 0.02);
    }

    #[test]
    fn nondegenerate_limits() {
        let psi = ProductBump::standard(2);
        let psi0 = psi.value(&[0.0, 0.0]);
        let opts = QuadOptions::default();
        let plus = PolyPhase::from_terms(2, vec![(vec![2, 0], crate::rat(1, 2)), (vec![0, 2], crate::rat(1, 2))]).unwrap();
        let minus = PolyPhase::from_terms(2, vec![(vec![2, 0], crate::rat(1, 2)), (vec![0, 2], crate::rat(-1, 2))]).unwrap();
        let t = 1e-3;
        // leading term (2π) e^{iπω/4} ψ(0) with first correction (it/2)Δψ(0)
        let v = nondeg_integral(&plus, &psi, &[0.0, 0.0], t, &opts).unwrap();
        let lead = Complex64::new(0.0, 2.0 * PI * psi0);
        assert!((v.value - lead).norm() / lead.norm() < 1e-2);
        let v = nondeg_integral(&minus, &psi, &[0.0, 0.0], t, &opts).unwrap();
        let lead = Complex64::new(2.0 * PI * psi0, 0.0);
        assert!((v.value - lead).norm() / lead.norm() < 1e-2);
    }

    #[test]
    fn counterexample_profile_at_moderate_frequency() {
        // λ^{1/2} I → ∫e^{iy²}χ(8y)dy · ∫ψ(x1, −x1²)dx1 for ε = λ^{−1/2}
        let psi = ProductBump::standard(2);
        let lambda = 1024.0;
        let v = osc2d(&cusp(), [0.0, 0.0], lambda, Cutoff::default(), lambda.powf(-0.5), &psi, &QuadOptions::default())
            .unwrap();
        let chi = Cutoff::default();
        let (f1, _) = integrate_adaptive(-0.25, 0.25, 1e-13, 40, &|y: f64| Complex64::cis(y * y) * chi.value(8.0 * y));
        let (f2, _) = integrate_adaptive(-0.5, 0.5, 1e-13, 40, &|x: f64| psi.value(&[x, -x * x]));
        let target = (f1 * f2).norm();
        let got = v.value.norm() * lambda.sqrt();
        assert!((got - target).abs() / target < 0.05, "{got} vs {target}");
        assert!(v.value.norm() <= v.abs_integral);
    }

    #[test]
    fn prepared_matches_direct() {
        let psi = ProductBump::standard(2);
        let phi = cubic();
        let u = phi.hessian_det().unwrap().to_float();
        let opts = QuadOptions::default();
        let integrand = OscIntegrand::new(phi.to_float(), 128.0, &psi)
            .unwrap()
            .with_cutoff(CutoffField::new(u, Cutoff::default(), 0.25).unwrap());
        let xi_box = [Interval::new(-1.25, 0.5), Interval::new(-1.25, 0.5)];
        let prep = integrand.prepare(&xi_box, &opts).unwrap();
        for xi in [[0.0, 0.0], [-0.3, -0.1], [-1.2, 0.4]] {
            let direct = integrand.integrate(&xi, &opts).unwrap();
            let fast = prep.eval(xi);
            assert!((fast - direct.value).norm() <= 1e-7 * direct.abs_integral, "{xi:?}");
        }
        let xi1 = [-1.0, -0.2, 0.3];
        let xi2 = [-0.7, 0.0, 0.1, 0.5];
        let grid = prep.eval_grid(&xi1, &xi2);
        for (i, &a) in xi1.iter().enumerate() {
            for (k, &b) in xi2.iter().enumerate() {
                assert!((grid[i * xi2.len() + k] - prep.eval([a, b])).norm() <= 1e-14 * prep.abs_integral);
            }
        }
    }

    #[test]
    fn budget_overflow_is_an_error() {
        let psi = ProductBump::standard(2);
        let opts = QuadOptions { max_nodes: 10_000, ..Default::default() };
        let err = osc2d(&cubic(), [0.0, 0.0], 4096.0, Cutoff::default(), 0.01, &psi, &opts).unwrap_err();
        assert!(err.is_budget());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn trivial_bound_and_error_estimate(lp in 2u32..7, ep in 2u32..6, x1 in -1.0..0.5f64, x2 in -1.0..0.5f64) {
            let psi = ProductBump::standard(2);
            let lambda = 2f64.powi(lp as i32);
            let eps = 2f64.powi(-(ep as i32));
            let opts = QuadOptions::default();
            let v = osc2d(&cubic(), [x1, x2], lambda, Cutoff::default(), eps, &psi, &opts).unwrap();
            prop_assert!(v.value.norm() <= v.abs_integral * (1.0 + 1e-12));
            // a finer rule agrees within the reported error (plus roundoff)
            let fine = QuadOptions { order: 24, ..opts };
            let w = osc2d(&cubic(), [x1, x2], lambda, Cutoff::default(), eps, &psi, &fine).unwrap();
            prop_assert!((v.value - w.value).norm() <= v.est_error + 1e-12 * v.abs_integral);
        }
    }
}
