//! Experiment configuration.
//!
//! A flat TOML file of `key = value` pairs. Every key is optional and
//! unknown keys are rejected. Command-line flags override the file.
//!
//! ```toml
//! tol = 1e-8
//! xi_grid = 17
//! lambda_exp_min = 4
//! lambda_exp_max = 11
//! cutoff = "both"
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use hessdecay::bump::{Cutoff, CutoffSides, ProductBump};
use hessdecay::decayscan::{BoxOptions, ScanOptions};
use hessdecay::interval::Interval;
use hessdecay::newton::FoldCheckOptions;
use hessdecay::oscquad::QuadOptions;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Relative agreement between quadrature refinement passes.
    pub tol: f64,
    /// Absolute agreement relative to the integral of the envelope.
    pub abs_tol: f64,
    /// Gauss–Legendre nodes per panel and axis.
    pub order: usize,
    pub max_passes: usize,
    /// Cap on integrand evaluations per integral.
    pub max_nodes: u64,
    /// Largest phase change per panel, in radians.
    pub phase_budget: f64,
    /// Largest change of the cutoff argument per panel.
    pub cutoff_budget: f64,

    /// Coarse ξ grid points per axis.
    pub xi_grid: usize,
    /// Points per axis of each ξ refinement grid.
    pub refine_grid: usize,
    pub refine_passes: usize,
    /// Margin added around the range of −∇Φ.
    pub xi_margin: f64,
    /// Relative tolerance of the value at the maximizing ξ.
    pub scan_tol: f64,
    pub lambda_exp_min: i32,
    pub lambda_exp_max: i32,
    pub eps_exp_min: i32,
    pub eps_exp_max: i32,

    /// Half-width of the edge band of dyadic boxes.
    pub c_edge: f64,
    /// Largest dyadic index per axis.
    pub box_cap: u32,

    /// Grid lines per unit length in the fold check.
    pub fold_density: f64,
    /// Width of the strips excluded around the axes in the fold check.
    pub fold_margin: f64,
    /// Half-width of the square searched by the fold check.
    pub fold_box: f64,

    /// Radius of the product-bump amplitude.
    pub bump_radius: f64,
    /// Signed sides of the cutoff support: both, positive or negative.
    pub cutoff: CutoffSides,

    /// Output file; standard output when unset.
    pub out: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        let quad = QuadOptions::default();
        let scan = ScanOptions::default();
        let boxes = BoxOptions::default();
        let fold = FoldCheckOptions::default();
        Config {
            tol: quad.tol,
            abs_tol: quad.abs_tol,
            order: quad.order,
            max_passes: quad.max_passes,
            max_nodes: quad.max_nodes,
            phase_budget: PI,
            cutoff_budget: quad.cutoff_budget,
            xi_grid: scan.xi_grid,
            refine_grid: scan.refine_grid,
            refine_passes: scan.refine_passes,
            xi_margin: scan.xi_margin,
            scan_tol: scan.quad.tol,
            lambda_exp_min: 4,
            lambda_exp_max: 11,
            eps_exp_min: -8,
            eps_exp_max: -2,
            c_edge: boxes.c_edge,
            box_cap: boxes.cap,
            fold_density: fold.density,
            fold_margin: fold.margin,
            fold_box: 1.0,
            bump_radius: 0.5,
            cutoff: CutoffSides::Both,
            out: None,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn quad(&self) -> QuadOptions {
        QuadOptions {
            order: self.order,
            phase_budget: self.phase_budget,
            cutoff_budget: self.cutoff_budget,
            tol: self.tol,
            abs_tol: self.abs_tol,
            max_passes: self.max_passes,
            max_nodes: self.max_nodes,
            ..QuadOptions::default()
        }
    }

    pub fn scan(&self) -> ScanOptions {
        let base = ScanOptions::default();
        ScanOptions {
            xi_grid: self.xi_grid,
            refine_grid: self.refine_grid,
            refine_passes: self.refine_passes,
            xi_margin: self.xi_margin,
            search: QuadOptions { max_nodes: self.max_nodes, ..base.search },
            quad: QuadOptions { tol: self.scan_tol, ..self.quad() },
        }
    }

    pub fn boxes(&self) -> BoxOptions {
        let r = self.bump_radius;
        BoxOptions {
            c_edge: self.c_edge,
            cap: self.box_cap,
            support: [Interval::new(-r, r), Interval::new(-r, r)],
            ..BoxOptions::default()
        }
    }

    pub fn fold(&self) -> FoldCheckOptions {
        FoldCheckOptions { density: self.fold_density, margin: self.fold_margin, ..FoldCheckOptions::default() }
    }

    pub fn amplitude(&self, center: Vec<f64>) -> ProductBump {
        ProductBump::new(center, self.bump_radius)
    }

    pub fn chi(&self) -> Cutoff {
        Cutoff::new(self.cutoff)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }

    #[test]
    fn keys_override_defaults() {
        let c = Config::parse("tol = 1e-6\nxi_grid = 9\ncutoff = \"negative\"\nout = \"a.csv\"").unwrap();
        assert_eq!(c.tol, 1e-6);
        assert_eq!(c.xi_grid, 9);
        assert_eq!(c.cutoff, CutoffSides::Negative);
        assert_eq!(c.out, Some(PathBuf::from("a.csv")));
        assert_eq!(c.order, Config::default().order);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Config::parse("xi_grdi = 9").unwrap_err();
        assert!(err.to_string().contains("xi_grdi"));
    }

    #[test]
    fn defaults_match_the_library() {
        let c = Config::default();
        assert_eq!(c.quad(), QuadOptions::default());
        assert_eq!(c.scan(), ScanOptions::default());
        assert_eq!(c.boxes(), BoxOptions::default());
        assert_eq!(c.fold(), FoldCheckOptions::default());
    }
}
