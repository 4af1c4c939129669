use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use lowk_core::{QuadratureConfig, SolverConfig};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "lowk-green", version, about = "Low-energy expansion of 1D Green functions")]
pub struct Cli {
    /// JSON file supplying any option; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for k-grid evaluation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Expand,
    Compare,
    Brackets,
    Scaling,
    Oracle,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Series coefficients gₙ at one point pair.
    Expand(Opts),
    /// Exact Green function against truncated sums over a k grid.
    Compare(Opts),
    /// Evaluate a single bracket integral.
    Brackets(Opts),
    /// Log-log slope of the truncation remainder.
    Scaling(Opts),
    /// Raw exact Green-function samples.
    Oracle(Opts),
}

impl Command {
    pub fn split(self) -> (Kind, Opts) {
        match self {
            Command::Expand(o) => (Kind::Expand, o),
            Command::Compare(o) => (Kind::Compare, o),
            Command::Brackets(o) => (Kind::Brackets, o),
            Command::Scaling(o) => (Kind::Scaling, o),
            Command::Oracle(o) => (Kind::Oracle, o),
        }
    }
}

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Deserialize, Debug, Default, Clone)]
#[serde(default, deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct Opts {
    /// Catalog potential.
    pub potential: Option<String>,
    /// Exponent of `logstep`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Height parameter of `barrier`.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    /// Truncation order N.
    #[arg(long)]
    pub order: Option<i32>,
    #[arg(long)]
    pub k_start: Option<f64>,
    #[arg(long)]
    pub k_stop: Option<f64>,
    #[arg(long)]
    pub k_count: Option<usize>,
    #[arg(long, value_enum)]
    pub spacing: Option<Spacing>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Use the zero-energy-solution route.
    #[arg(long)]
    pub generic: bool,
    /// Include the coefficient term tables.
    #[arg(long)]
    pub show_terms: bool,
    /// Add the exponentiated log-series columns.
    #[arg(long)]
    pub log_form: bool,
    /// Plain bracket `[σ…]`.
    #[arg(long, allow_hyphen_values = true)]
    pub plain: Option<String>,
    /// Left-angle bracket `⟨σ…]`.
    #[arg(long, allow_hyphen_values = true)]
    pub angle_left: Option<String>,
    /// Right-angle bracket `[σ…⟩`.
    #[arg(long, allow_hyphen_values = true)]
    pub angle_right: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lower: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub upper: Option<f64>,
    /// Quadrature relative tolerance (also `LOWK_GREEN_TOL`).
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub ode_rel_tol: Option<f64>,
    #[arg(long)]
    pub epsilon_imag: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub cutoff_left: Option<f64>,
    #[arg(long)]
    pub cutoff_right: Option<f64>,
    /// Expected remainder slope for `scaling`.
    #[arg(long)]
    pub expect_slope: Option<f64>,
}

macro_rules! prefer {
    ($flags:ident, $file:ident; $($f:ident),*) => {
        Opts {
            $($f: $flags.$f.or($file.$f),)*
            generic: $flags.generic || $file.generic,
            show_terms: $flags.show_terms || $file.show_terms,
            log_form: $flags.log_form || $file.log_form,
        }
    };
}

impl Opts {
    /// Flags take precedence over the file.
    pub fn over(self, file: Opts) -> Opts {
        let flags = self;
        prefer!(flags, file; potential, alpha, a, x, y, order, k_start, k_stop, k_count, spacing,
            output, format, plain, angle_left, angle_right, lower, upper, rel_tol, abs_tol,
            ode_rel_tol, epsilon_imag, cutoff_left, cutoff_right, expect_slope)
    }
}

pub fn read_config(path: &Path) -> Result<Opts, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
}

/// Per-potential defaults: the point pair of the reference plots and a k
/// window in which the order-0 remainder stands clear of solver noise.
struct Defaults {
    x: f64,
    y: f64,
    scaling: (f64, f64),
}

impl Defaults {
    fn for_potential(name: &str) -> Self {
        let (x, y, scaling) = match name {
            "parabolic" => (1.2, 1.0, (0.05, 0.4)),
            "logcosh" => (2.0, 0.0, (0.05, 0.4)),
            "exponential" => (0.5, 0.0, (1e-3, 1e-1)),
            "sqrtwell" => (1.0, -0.5, (0.05, 0.4)),
            "logstep" => (1.5, 0.8, (1e-2, 1e-1)),
            _ => (0.5, -0.5, (1e-2, 1e-1)),
        };
        Defaults { x, y, scaling }
    }
}

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub kind: Kind,
    pub potential: String,
    pub params: Vec<(&'static str, f64)>,
    pub x: f64,
    pub y: f64,
    pub order: i32,
    pub ks: Vec<f64>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub generic: bool,
    pub show_terms: bool,
    pub log_form: bool,
    pub bracket: Option<(lowk_core::BracketKind, String)>,
    pub lower: f64,
    pub upper: f64,
    pub quad: QuadratureConfig,
    pub solver: SolverConfig,
    pub expect_slope: Option<f64>,
}

pub fn k_grid(start: f64, stop: f64, count: usize, spacing: Spacing) -> Result<Vec<f64>, CliError> {
    if !(start > 0.0 && stop > 0.0 && start.is_finite() && stop.is_finite()) {
        return Err(CliError::usage(format!("k grid [{start}, {stop}] must be positive")));
    }
    if count == 0 {
        return Err(CliError::usage("k grid needs at least one point"));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let f = |i: usize| i as f64 / (count - 1) as f64;
    Ok(match spacing {
        Spacing::Linear => (0..count).map(|i| start + (stop - start) * f(i)).collect(),
        Spacing::Log => (0..count).map(|i| start * (stop / start).powf(f(i))).collect(),
    })
}

impl RunSpec {
    pub fn resolve(kind: Kind, o: Opts, env_tol: Option<&str>) -> Result<RunSpec, CliError> {
        let potential = o.potential.clone().ok_or_else(|| CliError::usage("missing potential name"))?;
        let mut params = Vec::new();
        if let Some(a) = o.alpha {
            params.push(("alpha", a));
        }
        if let Some(a) = o.a {
            params.push(("a", a));
        }
        let d = Defaults::for_potential(&potential);
        let x = o.x.unwrap_or(d.x);
        let y = o.y.unwrap_or(d.y);
        if !(x.is_finite() && y.is_finite()) {
            return Err(CliError::usage("x and y must be finite"));
        }
        if x < y {
            return Err(CliError::usage(format!("need x >= y, got x = {x}, y = {y}")));
        }
        let order = o.order.unwrap_or(0);
        if order < -2 {
            return Err(CliError::usage(format!("order {order} is below -2")));
        }
        let (start, stop, count, spacing) = match kind {
            Kind::Scaling => (d.scaling.0, d.scaling.1, 9, Spacing::Log),
            _ => (0.05, 1.2, 24, Spacing::Linear),
        };
        let ks = k_grid(
            o.k_start.unwrap_or(start),
            o.k_stop.unwrap_or(stop),
            o.k_count.unwrap_or(count),
            o.spacing.unwrap_or(spacing),
        )?;

        let mut quad = QuadratureConfig::default();
        if let Some(t) = env_tol {
            quad.rel_tol = t
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("LOWK_GREEN_TOL = {t:?} is not a number")))?;
        }
        if let Some(t) = o.rel_tol {
            quad.rel_tol = t;
        }
        if let Some(t) = o.abs_tol {
            quad.abs_tol = t;
        }
        quad.validate().map_err(CliError::from)?;
        let mut solver = SolverConfig::default();
        if let Some(t) = o.ode_rel_tol {
            solver.ode_rel_tol = t;
        }
        if let Some(t) = o.epsilon_imag {
            solver.epsilon_imag = t;
        }
        solver.cutoff_left = o.cutoff_left;
        solver.cutoff_right = o.cutoff_right;
        solver.validate().map_err(CliError::from)?;

        use lowk_core::BracketKind::*;
        let given: Vec<_> = [(Plain, &o.plain), (AngleLeft, &o.angle_left), (AngleRight, &o.angle_right)]
            .into_iter()
            .filter_map(|(k, s)| s.clone().map(|s| (k, s)))
            .collect();
        if given.len() > 1 {
            return Err(CliError::usage("give only one of --plain, --angle-left, --angle-right"));
        }
        let bracket = given.into_iter().next();
        if kind == Kind::Brackets && bracket.is_none() {
            return Err(CliError::usage("brackets needs --plain, --angle-left or --angle-right"));
        }

        Ok(RunSpec {
            kind,
            potential,
            params,
            x,
            y,
            order,
            ks,
            output: o.output,
            format: o.format.unwrap_or(match kind {
                Kind::Expand | Kind::Brackets => Format::Json,
                _ => Format::Csv,
            }),
            generic: o.generic,
            show_terms: o.show_terms,
            log_form: o.log_form,
            bracket,
            lower: o.lower.unwrap_or(f64::NEG_INFINITY),
            upper: o.upper.unwrap_or(f64::INFINITY),
            quad,
            solver,
            expect_slope: o.expect_slope,
        })
    }
}
