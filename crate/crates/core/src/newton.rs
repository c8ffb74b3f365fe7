//! Newton polygons of two-variable phases at the origin.
//!
//! The polygon is the convex hull of `∪ (k + [0,∞)²)` over the support. Its
//! boundary is a staircase of compact edges between a vertical and a
//! horizontal ray; each compact edge carries an edge polynomial, a slope
//! `−β²` and a Newton distance `d` (where the extended edge line crosses the
//! diagonal).

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::polyphase::{rat_int, FloatPoly, PolyPhase, Rational};

/// Lattice point `(k₁, k₂)`.
pub type Lattice = (u32, u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonPolygon {
    /// Exponents with nonzero coefficient, sorted.
    pub support: Vec<Lattice>,
    /// Strictly increasing first and strictly decreasing second coordinate.
    pub vertices: Vec<Lattice>,
    /// Consecutive vertex pairs bounding the compact edges.
    pub compact_edges: Vec<(Lattice, Lattice)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeData {
    pub endpoints: (Lattice, Lattice),
    /// `β²`, so the edge has slope `−β²`.
    pub slope_param: Rational,
    pub edge_poly: PolyPhase,
    pub newton_distance: Rational,
    /// The edge touches the horizontal (first) axis, i.e. `k₂ = 0`.
    pub meets_axis1: bool,
    /// The edge touches the vertical (second) axis, i.e. `k₁ = 0`.
    pub meets_axis2: bool,
}

impl EdgeData {
    pub fn beta(&self) -> f64 {
        crate::polyphase::rat_to_f64(&self.slope_param).sqrt()
    }

    /// `β + β⁻¹`.
    pub fn beta_tilde(&self) -> f64 {
        let b = self.beta();
        b + 1.0 / b
    }

    pub fn distance_f64(&self) -> f64 {
        crate::polyphase::rat_to_f64(&self.newton_distance)
    }
}

fn cross(o: Lattice, a: Lattice, b: Lattice) -> i64 {
    let (ox, oy) = (o.0 as i64, o.1 as i64);
    (a.0 as i64 - ox) * (b.1 as i64 - oy) - (a.1 as i64 - oy) * (b.0 as i64 - ox)
}

/// Builds the polygon of a phase with `Φ(0) = ∇Φ(0) = 0`.
pub fn build_polygon(p: &PolyPhase) -> Result<NewtonPolygon> {
    if p.dimension() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: p.dimension() });
    }
    if p.terms().any(|(e, _)| e[0] + e[1] <= 1) {
        return Err(Error::NotCriticalAtOrigin);
    }
    if p.is_zero() {
        return Err(Error::Invalid("the zero phase has an empty Newton polygon".into()));
    }
    let mut support: Vec<Lattice> = p.terms().map(|(e, _)| (e[0], e[1])).collect();
    support.sort_unstable();

    // Minimal points of the quadrant union: scanning by increasing k1, keep
    // a point only if its k2 is below everything seen so far.
    let mut stairs: Vec<Lattice> = Vec::new();
    for &pt in &support {
        match stairs.last() {
            Some(&(_, y)) if pt.1 >= y => {}
            Some(&(x, _)) if x == pt.0 => {
                stairs.pop();
                stairs.push(pt);
            }
            _ => stairs.push(pt),
        }
    }

    // Lower convex chain (monotone chain); collinear points are dropped.
    let mut hull: Vec<Lattice> = Vec::new();
    for &pt in &stairs {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0 {
            hull.pop();
        }
        hull.push(pt);
    }
    let compact_edges = hull.windows(2).map(|w| (w[0], w[1])).collect();
    Ok(NewtonPolygon { support, vertices: hull, compact_edges })
}

impl NewtonPolygon {
    /// Point where the boundary meets the diagonal `k₁ = k₂`.
    pub fn diagonal_point(&self) -> Rational {
        let first = self.vertices[0];
        if first.0 >= first.1 {
            // vertical ray from the first vertex
            return rat_int(first.0 as i64);
        }
        let last = *self.vertices.last().unwrap();
        if last.1 >= last.0 {
            return rat_int(last.1 as i64);
        }
        for &(a, b) in &self.compact_edges {
            if a.0 <= a.1 && b.0 >= b.1 {
                return line_diagonal(a, b);
            }
        }
        unreachable!("staircase boundary always crosses the diagonal")
    }

    /// Whether the diagonal crossing lies on a vertex.
    pub fn diagonal_class(&self) -> u8 {
        diagonal_class(self)
    }

    /// Whether `(k₁, k₂)` lies in the polygon.
    pub fn contains(&self, k: (Rational, Rational)) -> bool {
        let first = self.vertices[0];
        let last = *self.vertices.last().unwrap();
        if k.0 < rat_int(first.0 as i64) || k.1 < rat_int(last.1 as i64) {
            return false;
        }
        self.compact_edges.iter().all(|&(a, b)| {
            // (b - a) x (k - a) >= 0 for points on the upper-right side
            let ax = rat_int(a.0 as i64);
            let ay = rat_int(a.1 as i64);
            let dx = rat_int(b.0 as i64 - a.0 as i64);
            let dy = rat_int(b.1 as i64 - a.1 as i64);
            &dx * (&k.1 - &ay) - &dy * (&k.0 - &ax) >= Rational::zero()
        })
    }
}

fn line_diagonal(a: Lattice, b: Lattice) -> Rational {
    let beta2 = Rational::new((a.1 as i64 - b.1 as i64).into(), (b.0 as i64 - a.0 as i64).into());
    (rat_int(a.1 as i64) + &beta2 * rat_int(a.0 as i64)) / (Rational::one() + beta2)
}

/// `1` when the boundary meets the diagonal at a vertex, else `0`.
pub fn diagonal_class(poly: &NewtonPolygon) -> u8 {
    u8::from(poly.vertices.iter().any(|v| v.0 == v.1))
}

/// Edge polynomial, slope, Newton distance and axis flags of every compact
/// edge.
pub fn edge_data(p: &PolyPhase, poly: &NewtonPolygon) -> Vec<EdgeData> {
    poly.compact_edges
        .iter()
        .map(|&(a, b)| {
            let dx = b.0 as i64 - a.0 as i64;
            let dy = a.1 as i64 - b.1 as i64;
            let on_edge = |e: &[u32]| {
                let (x, y) = (e[0] as i64, e[1] as i64);
                x >= a.0 as i64 && x <= b.0 as i64 && (x - a.0 as i64) * dy + (y - a.1 as i64) * dx == 0
            };
            let edge_poly = PolyPhase::from_terms(
                2,
                p.terms().filter(|(e, _)| on_edge(e)).map(|(e, c)| (e.to_vec(), c.clone())),
            )
            .expect("two-variable terms");
            EdgeData {
                endpoints: (a, b),
                slope_param: Rational::new(dy.into(), dx.into()),
                edge_poly,
                newton_distance: line_diagonal(a, b),
                meets_axis1: b.1 == 0,
                meets_axis2: a.0 == 0,
            }
        })
        .collect()
}

/// Where fold points are collected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldRegion {
    /// Both coordinates at least the margin away from zero.
    OffAxes,
    /// Near the `x₁`-axis (`|x₂| < margin`) with `|x₁| ≥ margin`.
    Axis1AwayOrigin,
    /// Near the `x₂`-axis (`|x₁| < margin`) with `|x₂| ≥ margin`.
    Axis2AwayOrigin,
}

impl FoldRegion {
    fn admits(&self, x: [f64; 2], margin: f64) -> bool {
        match self {
            FoldRegion::OffAxes => x[0].abs() >= margin && x[1].abs() >= margin,
            FoldRegion::Axis1AwayOrigin => x[1].abs() < margin && x[0].abs() >= margin,
            FoldRegion::Axis2AwayOrigin => x[0].abs() < margin && x[1].abs() >= margin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldVerdict {
    Fold,
    Violation,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldDefect {
    /// `∇ det Hess` vanishes on the zero set: not a first-order hypersurface.
    GradientVanishes,
    /// `Hess·T ≈ 0` for the fold tangent `T`: differential not injective.
    KernelTangent,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldWitness {
    pub point: [f64; 2],
    pub defect: FoldDefect,
    /// Normalized size of the quantity that should have been bounded below.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldReport {
    pub region: FoldRegion,
    pub samples_checked: usize,
    pub min_grad_det_hess: f64,
    pub min_fold_injectivity: f64,
    pub verdict: FoldVerdict,
    pub witnesses: Vec<FoldWitness>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoldCheckOptions {
    /// Grid lines per unit length.
    pub density: f64,
    /// Width of the strips excluded around the axes / origin.
    pub margin: f64,
    pub tau_grad: f64,
    pub tau_kernel: f64,
    /// Witnesses retained in the report.
    pub max_witnesses: usize,
}

impl Default for FoldCheckOptions {
    fn default() -> Self {
        FoldCheckOptions { density: 32.0, margin: 0.125, tau_grad: 1e-8, tau_kernel: 1e-8, max_witnesses: 8 }
    }
}

/// Samples the zero set of `det Hess φ` in `bx` along grid lines and checks
/// the Whitney-fold conditions at every zero that lies in `region`.
pub fn whitney_check(
    phi: &PolyPhase,
    region: FoldRegion,
    bx: [Interval; 2],
    opts: &FoldCheckOptions,
) -> Result<FoldReport> {
    if phi.dimension() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: phi.dimension() });
    }
    if opts.density <= 0.0 {
        return Err(Error::Invalid("grid density must be positive".into()));
    }
    let det = phi.hessian_det()?;
    let empty = |verdict| FoldReport {
        region,
        samples_checked: 0,
        min_grad_det_hess: f64::INFINITY,
        min_fold_injectivity: f64::INFINITY,
        verdict,
        witnesses: Vec::new(),
    };
    if det.is_zero() {
        // the whole plane is singular: no hypersurface at all
        let c = [bx[0].mid(), bx[1].mid()];
        let mut r = empty(FoldVerdict::Violation);
        r.witnesses.push(FoldWitness { point: c, defect: FoldDefect::GradientVanishes, value: 0.0 });
        r.min_grad_det_hess = 0.0;
        return Ok(r);
    }
    if det.degree() == 0 {
        // nonzero constant determinant: never singular
        return Ok(empty(FoldVerdict::Fold));
    }

    let d = det.to_float();
    let grad_d = d.gradient();
    let hess = phi.to_float().hessian();
    let zeros = sample_zero_set(&d, bx, opts.density);
    if zeros.is_empty() {
        return Ok(empty(FoldVerdict::Inconclusive));
    }

    let mut report = empty(FoldVerdict::Fold);
    for z in zeros.into_iter().filter(|z| region.admits(*z, opts.margin)) {
        report.samples_checked += 1;
        let pt = [Interval::point(z[0]), Interval::point(z[1])];
        let g = [grad_d[0].eval2(z[0], z[1]), grad_d[1].eval2(z[0], z[1])];
        let gscale = grad_d[0].abs_bound(&pt) + grad_d[1].abs_bound(&pt);
        let gnorm = g[0].hypot(g[1]);
        let grad_rel = if gscale > 0.0 { gnorm / gscale } else { 0.0 };
        report.min_grad_det_hess = report.min_grad_det_hess.min(grad_rel);
        if grad_rel < opts.tau_grad {
            push_witness(&mut report, opts, FoldWitness { point: z, defect: FoldDefect::GradientVanishes, value: grad_rel });
            continue;
        }
        let t = [-g[1] / gnorm, g[0] / gnorm];
        let h = [
            [hess[0][0].eval2(z[0], z[1]), hess[0][1].eval2(z[0], z[1])],
            [hess[1][0].eval2(z[0], z[1]), hess[1][1].eval2(z[0], z[1])],
        ];
        let hscale: f64 = hess.iter().flatten().map(|e| e.abs_bound(&pt)).sum();
        let ht = [h[0][0] * t[0] + h[0][1] * t[1], h[1][0] * t[0] + h[1][1] * t[1]];
        let inj = if hscale > 0.0 { ht[0].hypot(ht[1]) / hscale } else { 0.0 };
        report.min_fold_injectivity = report.min_fold_injectivity.min(inj);
        if inj < opts.tau_kernel {
            push_witness(&mut report, opts, FoldWitness { point: z, defect: FoldDefect::KernelTangent, value: inj });
        }
    }
    Ok(report)
}

fn push_witness(report: &mut FoldReport, opts: &FoldCheckOptions, w: FoldWitness) {
    report.verdict = FoldVerdict::Violation;
    if report.witnesses.len() < opts.max_witnesses {
        report.witnesses.push(w);
    }
}

/// Zeros of `d` on horizontal and vertical grid lines, ordered by line index.
fn sample_zero_set(d: &FloatPoly, bx: [Interval; 2], density: f64) -> Vec<[f64; 2]> {
    let lines_for = |iv: Interval| ((iv.width() * density).ceil() as usize).max(1);
    let nx = lines_for(bx[0]);
    let ny = lines_for(bx[1]);
    // fine sampling along each line to bracket sign changes
    let fine = 8;
    let mut jobs: Vec<(usize, f64)> = Vec::new();
    for i in 0..=nx {
        jobs.push((0, bx[0].lo + bx[0].width() * i as f64 / nx as f64));
    }
    for j in 0..=ny {
        jobs.push((1, bx[1].lo + bx[1].width() * j as f64 / ny as f64));
    }
    let per_line: Vec<Vec<[f64; 2]>> = jobs
        .par_iter()
        .map(|&(axis, c)| {
            // axis 0: vertical line x1 = c, parameter x2; axis 1: horizontal
            let (along, steps) = if axis == 0 { (bx[1], ny * fine) } else { (bx[0], nx * fine) };
            let point = |s: f64| if axis == 0 { [c, s] } else { [s, c] };
            let f = |s: f64| {
                let p = point(s);
                d.eval2(p[0], p[1])
            };
            let scale_at = |s: f64| {
                let p = point(s);
                d.abs_bound(&[Interval::point(p[0]), Interval::point(p[1])]).max(f64::MIN_POSITIVE)
            };
            let mut out = Vec::new();
            let h = along.width() / steps as f64;
            let mut s0 = along.lo;
            let mut f0 = f(s0);
            for k in 1..=steps {
                let s1 = along.lo + h * k as f64;
                let f1 = f(s1);
                if f0 == 0.0 || f0.abs() <= 1e-14 * scale_at(s0) {
                    out.push(point(s0));
                } else if f0.signum() != f1.signum() && f1 != 0.0 {
                    out.push(point(bisect(&f, s0, s1)));
                }
                s0 = s1;
                f0 = f1;
            }
            if f0 == 0.0 || f0.abs() <= 1e-14 * scale_at(s0) {
                out.push(point(s0));
            }
            out
        })
        .collect();
    per_line.into_iter().flatten().collect()
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa0 = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa0.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Regions the fold hypotheses apply to for an edge, per its axis contacts.
pub fn applicable_regions(edge: &EdgeData) -> Vec<FoldRegion> {
    let mut r = vec![FoldRegion::OffAxes];
    if edge.meets_axis1 {
        // edge on the horizontal axis: folds needed on the x2-axis
        r.push(FoldRegion::Axis2AwayOrigin);
    }
    if edge.meets_axis2 {
        r.push(FoldRegion::Axis1AwayOrigin);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyphase::rat;
    use proptest::prelude::*;

    fn cusp() -> PolyPhase {
        PolyPhase::from_int_terms(2, &[(&[0, 2], 1), (&[2, 1], 2), (&[4, 0], 1)])
    }
    fn cubic() -> PolyPhase {
        PolyPhase::from_int_terms(2, &[(&[3, 0], 1), (&[0, 3], 1)])
    }

    /// Independent hull oracle: a lattice point of the support is a vertex
    /// iff it is not in the convex hull of the other quadrants, tested by
    /// brute force over pairs.
    fn brute_vertices(support: &[Lattice]) -> Vec<Lattice> {
        let in_quadrant_hull = |p: Lattice, others: &[Lattice]| {
            // p dominated by a single point
            if others.iter().any(|q| q.0 <= p.0 && q.1 <= p.1) {
                return true;
            }
            // p dominated by a convex combination of two points: intersect the
            // exact t-intervals where each coordinate is at most p's
            let within = |a: u32, b: u32, c: u32, lo: &mut Rational, hi: &mut Rational| {
                let (a, d, c) = (rat_int(a as i64), rat_int(b as i64 - a as i64), rat_int(c as i64));
                if d.is_zero() {
                    if a > c {
                        *hi = rat_int(-1);
                    }
                } else if d > rat_int(0) {
                    *hi = hi.clone().min((c - a) / d);
                } else {
                    *lo = lo.clone().max((c - a) / d);
                }
            };
            for a in others {
                for b in others {
                    let (mut lo, mut hi) = (rat_int(0), rat_int(1));
                    within(a.0, b.0, p.0, &mut lo, &mut hi);
                    within(a.1, b.1, p.1, &mut lo, &mut hi);
                    if lo <= hi {
                        return true;
                    }
                }
            }
            false
        };
        let mut v: Vec<Lattice> = support
            .iter()
            .copied()
            .filter(|&p| {
                let others: Vec<Lattice> = support.iter().copied().filter(|&q| q != p).collect();
                !in_quadrant_hull(p, &others)
            })
            .collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn reference_polygons() {
        let g = build_polygon(&cusp()).unwrap();
        assert_eq!(g.vertices, vec![(0, 2), (4, 0)]);
        assert_eq!(g.compact_edges, vec![((0, 2), (4, 0))]);
        assert_eq!(g.vertices, brute_vertices(&g.support));

        let g = build_polygon(&cubic()).unwrap();
        assert_eq!(g.vertices, vec![(0, 3), (3, 0)]);
        assert_eq!(g.compact_edges.len(), 1);

        let g = build_polygon(&PolyPhase::from_int_terms(2, &[(&[2, 2], 1)])).unwrap();
        assert_eq!(g.vertices, vec![(2, 2)]);
        assert!(g.compact_edges.is_empty());
    }

    #[test]
    fn rejects_linear_terms() {
        let p = PolyPhase::from_int_terms(2, &[(&[1, 0], 1), (&[0, 2], 1)]);
        assert_eq!(build_polygon(&p).unwrap_err(), Error::NotCriticalAtOrigin);
        let p = PolyPhase::from_int_terms(2, &[(&[0, 0], 1), (&[0, 2], 1)]);
        assert_eq!(build_polygon(&p).unwrap_err(), Error::NotCriticalAtOrigin);
    }

    #[test]
    fn diagonal_classes() {
        assert_eq!(diagonal_class(&build_polygon(&cusp()).unwrap()), 0);
        assert_eq!(build_polygon(&cusp()).unwrap().diagonal_point(), rat(4, 3));
        assert_eq!(diagonal_class(&build_polygon(&cubic()).unwrap()), 0);
        assert_eq!(build_polygon(&cubic()).unwrap().diagonal_point(), rat(3, 2));
        let g = build_polygon(&PolyPhase::from_int_terms(2, &[(&[2, 2], 1)])).unwrap();
        assert_eq!(diagonal_class(&g), 1);
    }

    #[test]
    fn edge_data_examples() {
        let p = cubic();
        let e = edge_data(&p, &build_polygon(&p).unwrap());
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].edge_poly, p);
        assert_eq!(e[0].slope_param, rat(1, 1));
        assert_eq!(e[0].newton_distance, rat(3, 2));
        assert!(e[0].meets_axis1 && e[0].meets_axis2);

        let p = cusp();
        let e = edge_data(&p, &build_polygon(&p).unwrap());
        assert_eq!(e[0].edge_poly, p);
        assert_eq!(e[0].slope_param, rat(1, 2));
        assert_eq!(e[0].newton_distance, rat(4, 3));
        assert!(e[0].meets_axis1 && e[0].meets_axis2);

        // (2,2) lies on the segment between the axis vertices, so it is an
        // interior lattice point of a single edge, not a vertex.
        let p = PolyPhase::from_int_terms(2, &[(&[4, 0], 1), (&[2, 2], 1), (&[0, 4], 1)]);
        let g = build_polygon(&p).unwrap();
        assert_eq!(g.vertices, vec![(0, 4), (4, 0)]);
        assert_eq!(g.vertices, brute_vertices(&g.support));
        assert_eq!(diagonal_class(&g), 0);
        assert_eq!(g.diagonal_point(), rat(2, 1));
        let e = edge_data(&p, &g);
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].slope_param, rat(1, 1));
        assert_eq!(e[0].newton_distance, rat(2, 1));
        assert_eq!(e[0].edge_poly, p);

        // a genuine two-edge polygon with a vertex on the diagonal
        let p = PolyPhase::from_int_terms(2, &[(&[6, 0], 1), (&[2, 2], 1), (&[0, 6], 1)]);
        let g = build_polygon(&p).unwrap();
        assert_eq!(g.vertices, vec![(0, 6), (2, 2), (6, 0)]);
        assert_eq!(diagonal_class(&g), 1);
        let e = edge_data(&p, &g);
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].slope_param, rat(2, 1));
        assert_eq!(e[1].slope_param, rat(1, 2));
        for ed in &e {
            assert_eq!(ed.newton_distance, rat(2, 1));
            assert_eq!(ed.edge_poly.len(), 2);
        }
        assert!(e[0].meets_axis2 && !e[0].meets_axis1);
        assert!(e[1].meets_axis1 && !e[1].meets_axis2);
    }

    #[test]
    fn edge_line_hits_diagonal_at_distance() {
        let p = PolyPhase::from_int_terms(2, &[(&[0, 5], 1), (&[1, 3], 2), (&[3, 1], 1), (&[6, 0], 1)]);
        let g = build_polygon(&p).unwrap();
        for ed in edge_data(&p, &g) {
            let ((a1, a2), _) = ed.endpoints;
            let d = &ed.newton_distance;
            // (d, d) satisfies k2 - a2 = -β² (k1 - a1)
            let lhs = d - rat_int(a2 as i64);
            let rhs = -(&ed.slope_param) * (d - rat_int(a1 as i64));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn cubic_is_a_fold_on_the_axis() {
        let bx = [Interval::new(0.5, 2.0), Interval::new(-1.0, 1.0)];
        let r = whitney_check(&cubic(), FoldRegion::Axis1AwayOrigin, bx, &FoldCheckOptions::default()).unwrap();
        assert_eq!(r.verdict, FoldVerdict::Fold);
        assert!(r.samples_checked > 10);
        assert!(r.min_grad_det_hess > 0.1 && r.min_fold_injectivity > 0.1);
    }

    #[test]
    fn cusp_violates_with_kernel_witness() {
        let bx = [Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0)];
        let r = whitney_check(&cusp(), FoldRegion::OffAxes, bx, &FoldCheckOptions::default()).unwrap();
        assert_eq!(r.verdict, FoldVerdict::Violation);
        let w = &r.witnesses[0];
        assert_eq!(w.defect, FoldDefect::KernelTangent);
        assert!((w.point[1] + w.point[0] * w.point[0]).abs() < 1e-10);
    }

    #[test]
    fn nondegenerate_phase_is_vacuously_a_fold() {
        let p = PolyPhase::from_int_terms(2, &[(&[1, 1], 1)]);
        let bx = [Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0)];
        let r = whitney_check(&p, FoldRegion::OffAxes, bx, &FoldCheckOptions::default()).unwrap();
        assert_eq!(r.verdict, FoldVerdict::Fold);
        assert_eq!(r.samples_checked, 0);
    }

    #[test]
    fn empty_zero_set_in_box_is_inconclusive() {
        let bx = [Interval::new(0.5, 1.0), Interval::new(0.5, 1.0)];
        let r = whitney_check(&cubic(), FoldRegion::OffAxes, bx, &FoldCheckOptions::default()).unwrap();
        assert_eq!(r.verdict, FoldVerdict::Inconclusive);
    }

    fn arb_phase() -> impl Strategy<Value = PolyPhase> {
        proptest::collection::vec(((0u32..7, 0u32..7), -5i64..=5), 1..8).prop_filter_map(
            "needs a term of degree >= 2",
            |terms| {
                let t: Vec<_> = terms
                    .into_iter()
                    .filter(|((a, b), c)| a + b >= 2 && *c != 0)
                    .map(|((a, b), c)| (vec![a, b], rat_int(c)))
                    .collect();
                let p = PolyPhase::from_terms(2, t).ok()?;
                (!p.is_zero()).then_some(p)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn polygon_invariant_under_term_order(p in arb_phase(), seed in 0u64..1000) {
            let mut terms: Vec<_> = p.terms().map(|(e, c)| (e.to_vec(), c.clone())).collect();
            // deterministic shuffle
            let n = terms.len();
            for i in 0..n {
                let j = ((seed as usize).wrapping_mul(31).wrapping_add(i * 17)) % n;
                terms.swap(i, j);
            }
            let q = PolyPhase::from_terms(2, terms).unwrap();
            prop_assert_eq!(build_polygon(&p).unwrap(), build_polygon(&q).unwrap());
        }

        #[test]
        fn support_inside_and_vertices_in_support(p in arb_phase()) {
            let g = build_polygon(&p).unwrap();
            for &(a, b) in &g.support {
                prop_assert!(g.contains((rat_int(a as i64), rat_int(b as i64))));
            }
            for v in &g.vertices {
                prop_assert!(g.support.contains(v));
            }
            prop_assert!(g.vertices.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1));
            prop_assert_eq!(g.vertices.clone(), brute_vertices(&g.support));
        }

        #[test]
        fn monomial_polygon_is_a_quadrant(a in 0u32..6, b in 0u32..6) {
            prop_assume!(a + b >= 2);
            let g = build_polygon(&PolyPhase::from_int_terms(2, &[(&[a, b], 3)])).unwrap();
            prop_assert_eq!(g.vertices.clone(), vec![(a, b)]);
            prop_assert_eq!(diagonal_class(&g), u8::from(a == b));
        }

        #[test]
        fn cusp_always_violates(density in 16.0..64.0f64) {
            let bx = [Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0)];
            let opts = FoldCheckOptions { density, ..Default::default() };
            let r = whitney_check(&cusp(), FoldRegion::OffAxes, bx, &opts).unwrap();
            prop_assert_eq!(r.verdict, FoldVerdict::Violation);
        }
    }
}
