//! Explicit one-dimensional oscillatory bounds.
//!
//! For `f ∈ C²(I)` with a continuous comparison function `g` such that
//!
//! ```text
//! |f″ − g| ≤ C|f′|,    δ ≤ |g| ≤ Kδ,
//! ```
//!
//! every `t > 0` satisfies
//!
//! ```text
//! |∫_I e^{if/t} ω| ≤ (t/δ)^{1/2} (12‖ω‖∞ + 4‖ω′‖₁ + 2C√K‖ω‖₁).
//! ```
//!
//! The hypotheses are certified by dense sampling. The module also scans
//! the sets `E_ε = {|f′| ≤ ε}` and checks the real-line interpolation
//! inequality `‖f‖∞ ≲ A^{1−n/(2k)} B^{n/(2k)}`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::foldcut::ReducedIntegrand;
use crate::gauss::integrate_adaptive;
use crate::interval::Interval;
use crate::oscquad::{Osc1d, QuadOptions};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Sampling density for hypothesis checks.
pub const SAMPLES_PER_UNIT: f64 = 4096.0;
/// Safety factor applied to sampled suprema when deriving constants.
pub const SAFETY: f64 = 1.1;

fn sample_points(interval: Interval) -> impl Iterator<Item = f64> {
    let n = ((interval.width() * SAMPLES_PER_UNIT).ceil() as usize).max(4096);
    (0..=n).map(move |i| interval.lo + interval.width() * i as f64 / n as f64)
}

#[derive(Clone)]
pub struct VdcInstance {
    pub f: RealFn,
    pub df: RealFn,
    pub d2f: RealFn,
    pub g: RealFn,
    pub c: f64,
    pub k: f64,
    pub delta: f64,
    pub interval: Interval,
    pub omega: RealFn,
    pub norms: ReducedIntegrand,
}

/// `‖ω‖∞`, `‖ω‖₁` and `‖ω′‖₁` on `interval`; `ω′` by central differences.
pub fn weight_norms(omega: &(dyn Fn(f64) -> f64 + Sync), interval: Interval) -> ReducedIntegrand {
    let h = 1e-6 * interval.width();
    let dw = |s: f64| {
        let a = (s - h).max(interval.lo);
        let b = (s + h).min(interval.hi);
        (omega(b) - omega(a)) / (b - a)
    };
    let sup = sample_points(interval).map(|s| omega(s).abs()).fold(0.0, f64::max);
    let (l1, _) = integrate_adaptive(interval.lo, interval.hi, 1e-8, 30, &|s: f64| omega(s).abs());
    let (derivative_l1, _) = integrate_adaptive(interval.lo, interval.hi, 1e-8, 30, &|s: f64| dw(s).abs());
    ReducedIntegrand { sup, l1, derivative_l1 }
}

/// Sampled hypothesis data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certification {
    /// `sup |f″ − g| / |f′|` over the samples.
    pub c_required: f64,
    pub g_min: f64,
    pub g_max: f64,
    /// `|f″ − g| ≤ C|f′|` at every sample.
    pub almost_second: bool,
    /// `δ ≤ |g| ≤ Kδ` at every sample.
    pub comparable: bool,
    pub samples: usize,
}

impl Certification {
    pub fn holds(&self) -> bool {
        self.almost_second && self.comparable
    }
}

impl VdcInstance {
    /// An instance with constants derived from sampling: `δ = inf|g|`,
    /// `K = SAFETY·sup|g|/δ`, `C = SAFETY·sup|f″ − g|/|f′|`.
    pub fn certified(f: RealFn, df: RealFn, d2f: RealFn, g: RealFn, interval: Interval, omega: RealFn) -> Result<Self> {
        let mut inst =
            VdcInstance { f, df, d2f, g, c: 0.0, k: 1.0, delta: 1.0, interval, norms: weight_norms(&*omega, interval), omega };
        let cert = inst.sample_hypotheses();
        if !(cert.g_min > 0.0) || !cert.c_required.is_finite() {
            return Err(Error::Invalid(format!(
                "no admissible constants: inf|g| = {}, sup|f″ − g|/|f′| = {}",
                cert.g_min, cert.c_required
            )));
        }
        inst.delta = cert.g_min;
        inst.k = (SAFETY * cert.g_max / cert.g_min).max(1.0);
        inst.c = SAFETY * cert.c_required;
        Ok(inst)
    }

    /// An instance with explicit constants; hypotheses are checked later.
    #[allow(clippy::too_many_arguments)]
    pub fn with_constants(
        f: RealFn,
        df: RealFn,
        d2f: RealFn,
        g: RealFn,
        interval: Interval,
        omega: RealFn,
        c: f64,
        k: f64,
        delta: f64,
    ) -> Result<Self> {
        if !(c >= 0.0 && k >= 1.0 && delta > 0.0) {
            return Err(Error::Invalid(format!("need C ≥ 0, K ≥ 1, δ > 0; got C = {c}, K = {k}, δ = {delta}")));
        }
        Ok(VdcInstance { f, df, d2f, g, c, k, delta, interval, norms: weight_norms(&*omega, interval), omega })
    }

    fn sample_hypotheses(&self) -> Certification {
        let mut c_required: f64 = 0.0;
        let mut g_min = f64::INFINITY;
        let mut g_max: f64 = 0.0;
        let mut almost_second = true;
        let mut samples = 0;
        let mut g_sign = 0.0;
        let mut sign_change = false;
        for s in sample_points(self.interval) {
            samples += 1;
            let gap = ((self.d2f)(s) - (self.g)(s)).abs();
            let slope = (self.df)(s).abs();
            let tol = 1e-12 * (self.g)(s).abs().max(1.0);
            if gap > tol {
                c_required = c_required.max(if slope > 0.0 { gap / slope } else { f64::INFINITY });
            }
            if gap > self.c * slope + tol {
                almost_second = false;
            }
            let g_signed = (self.g)(s);
            if g_signed != 0.0 {
                if g_sign != 0.0 && g_signed.signum() != g_sign {
                    sign_change = true;
                }
                g_sign = g_signed.signum();
            }
            let g = g_signed.abs();
            g_min = g_min.min(g);
            g_max = g_max.max(g);
        }
        let slack = 1e-12 * self.delta;
        // a continuous g that changes sign vanishes in between
        if sign_change {
            g_min = 0.0;
        }
        let comparable = g_min >= self.delta - slack && g_max <= self.k * self.delta + slack;
        Certification { c_required, g_min, g_max, almost_second, comparable, samples }
    }

    pub fn certify(&self) -> Certification {
        self.sample_hypotheses()
    }
}

/// `(t/δ)^{1/2}(12‖ω‖∞ + 4‖ω′‖₁ + 2C√K‖ω‖₁)`.
pub fn estprop_rhs(inst: &VdcInstance, t: f64) -> f64 {
    let n = &inst.norms;
    (t / inst.delta).sqrt() * (12.0 * n.sup + 4.0 * n.derivative_l1 + 2.0 * inst.c * inst.k.sqrt() * n.l1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VdcRow {
    pub t: f64,
    pub lhs: f64,
    pub lhs_error: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// `‖ω‖₁ ≤ rhs`: the trivial bound is already at least as strong.
    pub trivial_binding: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VdcReport {
    pub certification: Certification,
    pub rows: Vec<VdcRow>,
    pub max_ratio: f64,
    /// Some `t` had `lhs − error > rhs`.
    pub violated: bool,
}

/// Compares `|∫ e^{if/t} ω|` by quadrature with the bound at each `t`.
pub fn estprop_verify(inst: &VdcInstance, t_grid: &[f64], opts: &QuadOptions) -> Result<VdcReport> {
    let certification = inst.certify();
    let f = &*inst.f;
    let df = &*inst.df;
    let w = &*inst.omega;
    let rows: Vec<VdcRow> = t_grid
        .par_iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(Error::Invalid(format!("t must be positive, got {t}")));
            }
            let v = Osc1d { phase: f, phase_deriv: df, weight: w, interval: inst.interval, max_width: inst.interval.width() / 16.0 }
                .integrate(t, opts)?;
            let lhs = v.value.norm();
            let rhs = estprop_rhs(inst, t);
            Ok(VdcRow { t, lhs, lhs_error: v.est_error, rhs, ratio: lhs / rhs, trivial_binding: inst.norms.l1 <= rhs })
        })
        .collect::<Result<_>>()?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let violated = rows.iter().any(|r| r.lhs - r.lhs_error > r.rhs);
    Ok(VdcReport { certification, rows, max_ratio, violated })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EsetReport {
    pub eps: f64,
    /// Maximal runs of consecutive samples with `|f′| ≤ ε`.
    pub runs: usize,
    pub length: f64,
    /// `2ε/δ` plus one grid cell per run end.
    pub length_bound: f64,
    /// `None` when the hypotheses fail or `ε ≥ δ/C`: no claim is made.
    pub connected: Option<bool>,
    pub within_length_bound: Option<bool>,
}

/// Samples `E_ε = {s ∈ I : |f′(s)| ≤ ε}`.
pub fn eset_structure(inst: &VdcInstance, eps: f64) -> EsetReport {
    let pts: Vec<f64> = sample_points(inst.interval).collect();
    let step = inst.interval.width() / (pts.len() - 1) as f64;
    let inside: Vec<bool> = pts.iter().map(|&s| (inst.df)(s).abs() <= eps).collect();
    let mut runs = 0;
    let mut count = 0usize;
    for (i, &b) in inside.iter().enumerate() {
        if b {
            count += 1;
            if i == 0 || !inside[i - 1] {
                runs += 1;
            }
        }
    }
    let length = count.saturating_sub(runs) as f64 * step;
    let length_bound = 2.0 * eps / inst.delta + 2.0 * step;
    let regime = inst.c == 0.0 || eps < inst.delta / inst.c;
    let claim = inst.certify().holds() && regime;
    EsetReport {
        eps,
        runs,
        length,
        length_bound,
        connected: claim.then_some(runs <= 1),
        within_length_bound: claim.then_some(length <= length_bound),
    }
}

/// A function on `(0, ∞)` with `|f| ≤ A t^{−n/2}` and `|f^{(k)}| ≤ B t^{−n/2}`.
#[derive(Clone)]
pub struct InterpMember {
    pub f: RealFn,
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SupInterpReport {
    /// `sup|f| / (A^{1−n/(2k)} B^{n/(2k)})` per member.
    pub constants: Vec<f64>,
    pub max_constant: f64,
    /// The first bound fails at some sample for these members.
    pub hypothesis_failures: Vec<usize>,
    pub bounded: bool,
}

/// Largest implied constant accepted as bounded.
pub const INTERP_CONSTANT_LIMIT: f64 = 50.0;

/// Scans `|f|` on a log grid over `[1e−8, 1e8]`.
pub fn sup_interp_check(family: &[InterpMember], n: u32, k: u32) -> Result<SupInterpReport> {
    if 2 * k <= n {
        return Err(Error::Invalid(format!("need 2k > n, got n = {n}, k = {k}")));
    }
    let e = n as f64 / (2.0 * k as f64);
    let grid: Vec<f64> = (0..=3200).map(|i| 10f64.powf(-8.0 + i as f64 * 16.0 / 3200.0)).collect();
    let mut constants = Vec::with_capacity(family.len());
    let mut hypothesis_failures = Vec::new();
    for (idx, m) in family.iter().enumerate() {
        let mut sup: f64 = 0.0;
        for &t in &grid {
            let v = (m.f)(t).abs();
            sup = sup.max(v);
            if v > m.a * t.powf(-(n as f64) / 2.0) * (1.0 + 1e-9) {
                hypothesis_failures.push(idx);
                break;
            }
        }
        constants.push(sup / (m.a.powf(1.0 - e) * m.b.powf(e)));
    }
    let max_constant = constants.iter().copied().fold(0.0, f64::max);
    Ok(SupInterpReport {
        bounded: max_constant <= INTERP_CONSTANT_LIMIT && hypothesis_failures.is_empty(),
        constants,
        max_constant,
        hypothesis_failures,
    })
}
