use std::path::Path;
use std::sync::Arc;

use hessdecay::bump::{bump1, Amplitude};
use hessdecay::decayscan::{classify_boxes, dyadic, fit_decay, scan_grid, BoxKind};
use hessdecay::foldcut::{trace_curve, TraceOptions};
use hessdecay::geomschrod::{build_box, expansion};
use hessdecay::interval::Interval;
use hessdecay::newton::{applicable_regions, build_polygon, diagonal_class, edge_data, whitney_check, FoldVerdict};
use hessdecay::oscquad::osc2d;
use hessdecay::vdc::{estprop_verify, RealFn, VdcInstance};
use hessdecay::{Complex64, Error, PolyPhase};
use serde::Serialize;
use serde_json::json;

use crate::config::Config;
use crate::{AnalyzeArgs, BoxesArgs, CliError, ExpandArgs, FoldcurveArgs, IntegrateArgs, Output, ScanArgs, VdcArgs};

fn read_phase(path: &Path) -> Result<PolyPhase, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    PolyPhase::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn require_dim(phi: &PolyPhase, n: usize) -> Result<(), CliError> {
    if phi.dimension() != n {
        return Err(Error::DimensionMismatch { expected: n, got: phi.dimension() }.into());
    }
    Ok(())
}

fn values<const N: usize>(flag: &str, v: &[f64]) -> Result<[f64; N], CliError> {
    v.try_into()
        .map_err(|_| CliError::Usage(format!("--{flag} needs {N} comma-separated values, got {}", v.len())))
}

fn complex(z: Complex64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

pub fn analyze(cfg: &Config, a: AnalyzeArgs, out: &mut Output) -> Result<(), CliError> {
    let phi = read_phase(&a.phase.phase)?;
    require_dim(&phi, 2)?;
    let poly = build_polygon(&phi)?;
    let edges = edge_data(&phi, &poly);
    let mut fold_opts = cfg.fold();
    if let Some(d) = a.density {
        fold_opts.density = d;
    }
    let r = a.fold_box.unwrap_or(cfg.fold_box);
    let bx = [Interval::new(-r, r), Interval::new(-r, r)];

    let mut verdicts = Vec::new();
    let mut edge_reports = Vec::new();
    for (i, e) in edges.iter().enumerate() {
        let mut reports = Vec::new();
        for region in applicable_regions(e) {
            let rep = whitney_check(&e.edge_poly, region, bx, &fold_opts)?;
            verdicts.push(rep.verdict);
            reports.push(rep);
        }
        edge_reports.push(json!({
            "index": i,
            "endpoints": [e.endpoints.0, e.endpoints.1],
            "beta2": e.slope_param.to_string(),
            "newton_distance": e.newton_distance.to_string(),
            "edge_poly": e.edge_poly.to_string(),
            "meets_axis1": e.meets_axis1,
            "meets_axis2": e.meets_axis2,
            "fold_checks": reports,
        }));
    }
    let verdict = if verdicts.is_empty() {
        None
    } else if verdicts.contains(&FoldVerdict::Violation) {
        Some(FoldVerdict::Violation)
    } else if verdicts.iter().all(|v| *v == FoldVerdict::Fold) {
        Some(FoldVerdict::Fold)
    } else {
        Some(FoldVerdict::Inconclusive)
    };
    out.json(&json!({
        "phase": phi.to_string(),
        "hessian_det": phi.hessian_det()?.to_string(),
        "vertices": poly.vertices,
        "diagonal_point": poly.diagonal_point().to_string(),
        "s": diagonal_class(&poly),
        "edges": edge_reports,
        "fold_verdict": verdict,
    }))
}

pub fn integrate(cfg: &Config, a: IntegrateArgs, out: &mut Output) -> Result<(), CliError> {
    let phi = read_phase(&a.phase.phase)?;
    require_dim(&phi, 2)?;
    let mut quad = cfg.quad();
    if let Some(t) = a.tol {
        quad.tol = t;
    }
    let xi = values::<2>("xi", &a.xi)?;
    let psi = cfg.amplitude(vec![0.0, 0.0]);
    let v = osc2d(&phi, xi, a.lambda, cfg.chi(), a.eps, &psi, &quad)?;
    out.json(&json!({
        "lambda": a.lambda,
        "eps": a.eps,
        "xi": a.xi,
        "value": complex(v.value),
        "abs": v.value.norm(),
        "est_error": v.est_error,
        "nodes_used": v.nodes_used,
        "abs_integral": v.abs_integral,
    }))
}

pub fn expand(cfg: &Config, a: ExpandArgs, out: &mut Output) -> Result<(), CliError> {
    let phi = read_phase(&a.phase.phase)?;
    let n = phi.dimension();
    if a.point.len() != n {
        return Err(CliError::Usage(format!("--point needs {n} coordinates, got {}", a.point.len())));
    }
    let center = a.center.unwrap_or_else(|| a.point.clone());
    if center.len() != n {
        return Err(CliError::Usage(format!("--center needs {n} coordinates, got {}", center.len())));
    }
    let radius = a.radius.unwrap_or(cfg.bump_radius);
    if !(radius > 0.0) {
        return Err(CliError::Usage(format!("--radius must be positive, got {radius}")));
    }
    let psi = hessdecay::bump::ProductBump::new(center, radius);
    let op = build_box(&phi, &a.point, &psi.support())?;
    let r = expansion(&op, &psi, a.order, a.k)?;
    out.json(&json!({
        "point": a.point,
        "order": r.order,
        "k": r.k,
        "signature": r.signature,
        "hessian_det": r.det,
        "prefactor": complex(r.prefactor),
        "coefficients": r.coefficients.iter().copied().map(complex).collect::<Vec<_>>(),
        "error_norms": r.error_norms.map(|(x, y)| [x, y]),
    }))
}

#[derive(Serialize)]
struct CurveRow {
    s: f64,
    gamma1: f64,
    gamma2: f64,
    f: f64,
    f_prime: f64,
    f2_formula: Option<f64>,
    f2_numeric: Option<f64>,
    density: Option<f64>,
    branch: usize,
}

pub fn foldcurve(cfg: &Config, a: FoldcurveArgs, out: &mut Output) -> Result<(), CliError> {
    let phi = read_phase(&a.phase.phase)?;
    require_dim(&phi, 2)?;
    let u = match &a.u {
        Some(p) => read_phase(p)?,
        None => phi.hessian_det()?,
    };
    require_dim(&u, 2)?;
    let r = cfg.bump_radius;
    let xi = values::<2>("xi", &a.xi)?;
    let s_range = values::<2>("s-range", &a.s_range)?;
    let window = match &a.window {
        Some(w) => {
            let w = values::<4>("window", w)?;
            [Interval::new(w[0], w[1]), Interval::new(w[2], w[3])]
        }
        None => [Interval::new(-r, r), Interval::new(-r, r)],
    };
    if !(s_range[0] < s_range[1]) {
        return Err(CliError::Usage("--s-range needs two increasing values a,b".into()));
    }
    let opts = TraceOptions { samples: a.samples, ..TraceOptions::default() };
    let curve = trace_curve(
        &phi,
        xi,
        &u,
        window,
        Interval::new(s_range[0], s_range[1]),
        &opts,
    )?;
    let mut w = out.csv();
    for (b, branch) in curve.branches.iter().enumerate() {
        for smp in &branch.samples {
            w.serialize(CurveRow {
                s: smp.s,
                gamma1: smp.point[0],
                gamma2: smp.point[1],
                f: smp.f,
                f_prime: smp.f_prime,
                f2_formula: curve.f2_formula_at(&smp.point).ok(),
                f2_numeric: curve.f2_numeric(b, smp.s).ok(),
                density: curve.density_at(&smp.point).ok(),
                branch: b,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct VdcCsvRow {
    t: f64,
    lhs: f64,
    rhs: f64,
    ratio: f64,
}

fn real_fn(p: PolyPhase) -> RealFn {
    let f = p.to_float();
    Arc::new(move |s: f64| f.eval(&[s]))
}

pub fn vdc_check(cfg: &Config, a: VdcArgs, out: &mut Output) -> Result<(), CliError> {
    let f = read_phase(&a.phase.phase)?;
    require_dim(&f, 1)?;
    let [lo, hi] = values::<2>("interval", &a.interval)?;
    let interval = Interval::new(lo, hi);
    if !(interval.width() > 0.0) {
        return Err(CliError::Usage("--interval needs a < b".into()));
    }
    if !(a.t_min > 0.0 && a.t_max > a.t_min && a.t_points >= 2) {
        return Err(CliError::Usage("need 0 < t-min < t-max and at least two t points".into()));
    }
    let df = f.derivative(0);
    let d2f = df.derivative(0);
    let (c, r) = (interval.mid(), interval.width() / 2.0);
    let omega: RealFn = Arc::new(move |s: f64| bump1(s - c, r));
    let inst = VdcInstance::certified(real_fn(f), real_fn(df), real_fn(d2f.clone()), real_fn(d2f), interval, omega)?;
    let ratio = (a.t_max / a.t_min).powf(1.0 / (a.t_points - 1) as f64);
    let grid: Vec<f64> = (0..a.t_points).map(|i| a.t_min * ratio.powi(i as i32)).collect();
    let report = estprop_verify(&inst, &grid, &cfg.quad())?;
    let mut w = out.csv();
    for row in &report.rows {
        w.serialize(VdcCsvRow { t: row.t, lhs: row.lhs, rhs: row.rhs, ratio: row.ratio })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ScanRow {
    lambda: f64,
    eps: f64,
    xi1: f64,
    xi2: f64,
    absval: f64,
    est_error: f64,
}

pub fn scan(cfg: &Config, a: ScanArgs, out: &mut Output) -> Result<(), CliError> {
    let phi = read_phase(&a.phase.phase)?;
    require_dim(&phi, 2)?;
    let mut opts = cfg.scan();
    if let Some(g) = a.xi_grid {
        opts.xi_grid = g;
    }
    let lambdas = dyadic(
        a.lambda_exp_min.unwrap_or(cfg.lambda_exp_min),
        a.lambda_exp_max.unwrap_or(cfg.lambda_exp_max),
    );
    let epss = dyadic(a.eps_exp_min.unwrap_or(cfg.eps_exp_min), a.eps_exp_max.unwrap_or(cfg.eps_exp_max));
    if lambdas.is_empty() || epss.is_empty() {
        return Err(CliError::Usage("empty λ or ε range".into()));
    }
    let psi = cfg.amplitude(vec![0.0, 0.0]);
    let records = scan_grid(&phi, &lambdas, &epss, cfg.chi(), &psi, &opts)?;
    let mut w = out.csv();
    for r in &records {
        w.serialize(ScanRow {
            lambda: r.lambda,
            eps: r.eps,
            xi1: r.xi[0],
            xi2: r.xi[1],
            absval: r.sup_val,
            est_error: r.est_error,
        })?;
    }
    w.flush()?;
    drop(w);

    let s_hint = a
        .s_hint
        .unwrap_or_else(|| build_polygon(&phi).map(|p| diagonal_class(&p) as u32).unwrap_or(0));
    let fit = match fit_decay(&records, s_hint) {
        Ok(f) => serde_json::to_value(f).map_err(|e| CliError::Io(e.to_string()))?,
        Err(e) => json!({ "error": e.to_string() }),
    };
    let text = serde_json::to_string_pretty(&fit).map_err(|e| CliError::Io(e.to_string()))?;
    match &a.fit_out {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => eprintln!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct BoxRow {
    j1: u32,
    j2: u32,
    class: &'static str,
    alpha1: Option<u32>,
    alpha2: Option<u32>,
    edge: Option<usize>,
    beta2: Option<f64>,
    k: Option<f64>,
    scaling1: u32,
    scaling2: u32,
    band_exponent: Option<f64>,
    active: bool,
    remainder: f64,
    rescaled: String,
}

pub fn boxes(cfg: &Config, a: BoxesArgs, out: &mut Output) -> Result<(), CliError> {
    let phi = read_phase(&a.phase.phase)?;
    require_dim(&phi, 2)?;
    let poly = build_polygon(&phi)?;
    let mut opts = cfg.boxes();
    if let Some(c) = a.c_edge {
        opts.c_edge = c;
    }
    if let Some(c) = a.cap {
        opts.cap = c;
    }
    let classes = classify_boxes(&phi, &poly, a.eps, &opts)?;
    let mut w = out.csv();
    for b in classes {
        let (class, alpha, edge, beta2, k) = match b.kind {
            BoxKind::Vertex { alpha } => ("vertex", Some(alpha), None, None, None),
            BoxKind::Edge { edge, beta2, k } => ("edge", None, Some(edge), Some(beta2), Some(k)),
            BoxKind::Negligible => ("negligible", None, None, None, None),
        };
        w.serialize(BoxRow {
            j1: b.j.0,
            j2: b.j.1,
            class,
            alpha1: alpha.map(|a| a.0),
            alpha2: alpha.map(|a| a.1),
            edge,
            beta2,
            k,
            scaling1: b.scaling.0,
            scaling2: b.scaling.1,
            band_exponent: b.band_exponent,
            active: b.active,
            remainder: b.remainder,
            rescaled: b.rescaled,
        })?;
    }
    w.flush()?;
    Ok(())
}
