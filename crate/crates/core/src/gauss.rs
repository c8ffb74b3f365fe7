//! Gauss–Legendre rules and panel/adaptive integration on intervals.

use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

/// Nodes and weights of the `n`-point rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared rule of order `n`.
    pub fn cached(n: usize) -> &'static GaussLegendre {
        static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
        let mut map = CACHE.get_or_init(|| Mutex::new(HashMap::new())).lock().unwrap();
        map.entry(n).or_insert_with(|| Box::leak(Box::new(GaussLegendre::new(n))))
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate<T: QuadValue>(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> T) -> T {
        let mut s = T::zero();
        for (x, w) in self.mapped(a, b) {
            s = s + f(x) * w;
        }
        s
    }

    /// Composite rule over `panels` equal panels.
    pub fn integrate_panels<T: QuadValue>(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> T) -> T {
        let h = (b - a) / panels as f64;
        let mut s = T::zero();
        for k in 0..panels {
            let lo = a + k as f64 * h;
            s = s + self.integrate(lo, lo + h, &mut f);
        }
        s
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Values the quadrature helpers can accumulate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn norm(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

/// Adaptive bisection with a fixed-order rule: a panel is accepted when
/// its value agrees with the sum over its halves to `tol` (relative to the
/// running magnitude, with an absolute floor).
pub fn integrate_adaptive<T: QuadValue>(
    a: f64,
    b: f64,
    tol: f64,
    max_depth: usize,
    f: &impl Fn(f64) -> T,
) -> (T, f64) {
    let rule = GaussLegendre::cached(10);
    let whole = rule.integrate(a, b, f);
    let scale = (whole.norm()).max(1e-300);
    let mut err = 0.0;
    let v = adapt(rule, a, b, whole, tol, scale, max_depth, f, &mut err);
    (v, err)
}

#[allow(clippy::too_many_arguments)]
fn adapt<T: QuadValue>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: T,
    tol: f64,
    scale: f64,
    depth: usize,
    f: &impl Fn(f64) -> T,
    err: &mut f64,
) -> T {
    let m = 0.5 * (a + b);
    let left = rule.integrate(a, m, f);
    let right = rule.integrate(m, b, f);
    let both = left + right;
    let diff = (both - whole).norm();
    if diff <= tol * scale.max(1e-12 * (b - a)) || depth == 0 {
        *err += diff;
        return both;
    }
    adapt(rule, a, m, left, tol, scale, depth - 1, f, err)
        + adapt(rule, m, b, right, tol, scale, depth - 1, f, err)
}

/// Neumaier-compensated sum of complex terms in the given order.
pub fn compensated_sum(terms: impl IntoIterator<Item = Complex64>) -> Complex64 {
    let (mut sr, mut cr, mut si, mut ci) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let step = |s: &mut f64, c: &mut f64, x: f64| {
        let t = *s + x;
        if s.abs() >= x.abs() {
            *c += (*s - t) + x;
        } else {
            *c += (x - t) + *s;
        }
        *s = t;
    };
    for z in terms {
        step(&mut sr, &mut cr, z.re);
        step(&mut si, &mut ci, z.im);
    }
    Complex64::new(sr + cr, si + ci)
}
