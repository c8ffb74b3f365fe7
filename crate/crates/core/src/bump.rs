//! Closed-form smooth amplitudes and cutoffs.
//!
//! The amplitude ψ defaults to a product of one-dimensional bumps
//! `b(x) = exp(−1/(1−(x/r)²))` and the cutoff χ to
//! `χ(v) = exp(−1/(1−(2|v|−3)²))` on `1 < |v| < 2`. Both expose derivatives
//! through [`Jet`]s.

use serde::{Deserialize, Serialize};

use crate::interval::Interval;
use crate::jet::Jet;

/// One-dimensional bump of radius `r` centered at zero.
#[inline]
pub fn bump1(x: f64, r: f64) -> f64 {
    let y = x / r;
    let d = 1.0 - y * y;
    if d <= 0.0 {
        0.0
    } else {
        (-1.0 / d).exp()
    }
}

/// Taylor jet of [`bump1`] at `x`.
pub fn bump1_jet(x: f64, r: f64, order: usize) -> Jet {
    let y = x / r;
    if y.abs() >= 1.0 {
        return Jet::constant(0.0, order);
    }
    let yj = Jet::var(x, order).scale(1.0 / r);
    let d = (&yj * &yj).scale(-1.0).add_const(1.0);
    d.recip().scale(-1.0).exp()
}

/// Which signed components of `±[1, 2]` the cutoff covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CutoffSides {
    #[default]
    Both,
    Positive,
    Negative,
}

/// The cutoff χ, supported on `±(1, 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Cutoff {
    pub sides: CutoffSides,
}

impl Cutoff {
    pub fn new(sides: CutoffSides) -> Self {
        Cutoff { sides }
    }

    fn side_active(&self, v: f64) -> bool {
        match self.sides {
            CutoffSides::Both => true,
            CutoffSides::Positive => v > 0.0,
            CutoffSides::Negative => v < 0.0,
        }
    }

    #[inline]
    pub fn value(&self, v: f64) -> f64 {
        if !self.side_active(v) {
            return 0.0;
        }
        let y = 2.0 * v.abs() - 3.0;
        let d = 1.0 - y * y;
        if d <= 0.0 {
            0.0
        } else {
            (-1.0 / d).exp()
        }
    }

    pub fn jet(&self, v: f64, order: usize) -> Jet {
        if !self.side_active(v) || self.value(v) == 0.0 {
            return Jet::constant(0.0, order);
        }
        let s = v.signum();
        let y = Jet::var(v, order).scale(2.0 * s).add_const(-3.0);
        let d = (&y * &y).scale(-1.0).add_const(1.0);
        d.recip().scale(-1.0).exp()
    }

    /// Whether the range of `v` can meet the support.
    pub fn may_be_active(&self, v: Interval) -> bool {
        let pos = Interval::new(1.0, 2.0);
        let neg = Interval::new(-2.0, -1.0);
        match self.sides {
            CutoffSides::Both => v.intersects(&pos) || v.intersects(&neg),
            CutoffSides::Positive => v.intersects(&pos),
            CutoffSides::Negative => v.intersects(&neg),
        }
    }
}

/// Something that can serve as the amplitude of an oscillatory integral.
pub trait Amplitude: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// A box containing the support.
    fn support(&self) -> Vec<Interval>;
    /// Length over which the amplitude varies appreciably; limits panel size.
    fn length_scale(&self) -> f64;
}

/// ψ(x) = Π b(xᵢ − cᵢ) with common radius `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductBump {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl ProductBump {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        assert!(radius > 0.0, "bump radius must be positive");
        ProductBump { center, radius }
    }

    /// Default amplitude: centered at the origin, radius 1/2.
    pub fn standard(dim: usize) -> Self {
        Self::new(vec![0.0; dim], 0.5)
    }

    /// Mixed partial derivative `∂^orders ψ(x)`.
    pub fn partial(&self, x: &[f64], orders: &[usize]) -> f64 {
        x.iter()
            .zip(&self.center)
            .zip(orders)
            .map(|((xi, ci), &k)| bump1_jet(xi - ci, self.radius, k).derivative(k))
            .product()
    }

    /// Laplacian computed from exact jets.
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut o = vec![0; n];
                o[i] = 2;
                self.partial(x, &o)
            })
            .sum()
    }
}

impl Amplitude for ProductBump {
    fn dim(&self) -> usize {
        self.center.len()
    }

    #[inline]
    fn value(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (xi, ci) in x.iter().zip(&self.center) {
            v *= bump1(xi - ci, self.radius);
            if v == 0.0 {
                break;
            }
        }
        v
    }

    fn support(&self) -> Vec<Interval> {
        self.center
            .iter()
            .map(|c| Interval::new(c - self.radius, c + self.radius))
            .collect()
    }

    fn length_scale(&self) -> f64 {
        self.radius
    }
}

/// exp(−|x|²) cut off outside the cube of half-width `truncate`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianAmplitude {
    pub dim: usize,
    pub truncate: f64,
}

impl Amplitude for GaussianAmplitude {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        if x.iter().any(|v| v.abs() > self.truncate) {
            return 0.0;
        }
        (-x.iter().map(|v| v * v).sum::<f64>()).exp()
    }

    fn support(&self) -> Vec<Interval> {
        vec![Interval::new(-self.truncate, self.truncate); self.dim]
    }

    fn length_scale(&self) -> f64 {
        1.0
    }
}

/// Amplitude backed by a closure, with an explicit support box.
pub struct FnAmplitude<F> {
    pub f: F,
    pub support: Vec<Interval>,
    pub scale: f64,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Amplitude for FnAmplitude<F> {
    fn dim(&self) -> usize {
        self.support.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn support(&self) -> Vec<Interval> {
        self.support.clone()
    }
    fn length_scale(&self) -> f64 {
        self.scale
    }
}

/// Either kind of closed-form bump, as named in configuration and output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BumpSpec {
    Amplitude(ProductBump),
    Cutoff(Cutoff),
}

/// `C^∞` step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Dyadic partition function supported on `[1/2, 2]` with
/// `Σ_j η(2^j t) = 1` for `t > 0`.
pub fn dyadic_eta(t: f64) -> f64 {
    let phi = |s: f64| 1.0 - smooth_step(s - 1.0);
    phi(t) - phi(2.0 * t)
}
