//! Run configuration: flat `key = value` text with `#` comments.
//!
//! Parsing is strict — unknown keys and malformed values are errors that
//! name the offending key — and the resolved configuration echoes back to
//! the same format, so a manifest is itself a runnable config.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::CliError;
use spde_core::convex::ConvexIntegrand;
use spde_core::evolution::{InitialData, SolverConfig};
use spde_core::grid::{Field, Grid};
use spde_core::noise::DiffusionCoefficient;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaSetting {
    /// Calibrate from the Lipschitz constant and a measured energy ratio.
    Auto,
    Fixed(f64),
}

/// How the initial datum is built on a grid.
#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    Zero,
    /// Product sine mode with fixed amplitude.
    Sine { mode: usize, amp: f64 },
    /// Sine mode with a per-path random amplitude in [lo, hi].
    RandSine { mode: usize, lo: f64, hi: f64 },
}

impl InitSpec {
    fn parse(text: &str) -> Result<Self, String> {
        if text == "zero" {
            return Ok(InitSpec::Zero);
        }
        let parts: Vec<&str> = text.split(':').collect();
        match parts.as_slice() {
            ["sine", m, a] => Ok(InitSpec::Sine {
                mode: m.parse().map_err(|_| format!("bad mode in `{text}`"))?,
                amp: a.parse().map_err(|_| format!("bad amplitude in `{text}`"))?,
            }),
            ["randsine", m, lo, hi] => Ok(InitSpec::RandSine {
                mode: m.parse().map_err(|_| format!("bad mode in `{text}`"))?,
                lo: lo.parse().map_err(|_| format!("bad bound in `{text}`"))?,
                hi: hi.parse().map_err(|_| format!("bad bound in `{text}`"))?,
            }),
            _ => Err(format!(
                "unknown init `{text}` (expected zero, sine:<m>:<amp>, randsine:<m>:<lo>:<hi>)"
            )),
        }
    }

    fn echo(&self) -> String {
        match self {
            InitSpec::Zero => "zero".into(),
            InitSpec::Sine { mode, amp } => format!("sine:{mode}:{amp}"),
            InitSpec::RandSine { mode, lo, hi } => format!("randsine:{mode}:{lo}:{hi}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub dim: usize,
    pub cells: usize,
    pub extent: f64,
    pub lambda: f64,
    /// None → the stability guard value λh²/(4n).
    pub dt: Option<f64>,
    pub t_final: f64,
    pub alpha: AlphaSetting,
    pub modes: usize,
    pub paths: usize,
    pub seed: u64,
    pub integrand: String,
    pub coefficient: String,
    pub coef_scale: f64,
    pub coef_decay: f64,
    pub coef_c0: f64,
    pub coef_c1: f64,
    pub coef_clamp: f64,
    pub init: InitSpec,
    pub store_every: usize,
    pub workers: usize,
    pub override_guard: bool,
    pub picard_max_iter: usize,
    pub tol_picard: f64,
    pub lambda_list: Vec<f64>,
    pub halvings: usize,
    pub refine_mode: String,
    pub sample_points: usize,
    pub sample_radius: f64,
    pub dump_final: bool,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            cells: 16,
            extent: 1.0,
            lambda: 0.25,
            dt: None,
            t_final: 0.25,
            alpha: AlphaSetting::Auto,
            modes: 8,
            paths: 4,
            seed: 0,
            integrand: "abs_quad".into(),
            coefficient: "add_smooth".into(),
            coef_scale: 1.0,
            coef_decay: 2.0,
            coef_c0: 1.0,
            coef_c1: 0.5,
            coef_clamp: 10.0,
            init: InitSpec::Sine { mode: 1, amp: 1.0 },
            store_every: 0,
            workers: 0,
            override_guard: false,
            picard_max_iter: 50,
            tol_picard: 1e-8,
            lambda_list: Vec::new(),
            halvings: 3,
            refine_mode: "dt".into(),
            sample_points: 10_000,
            sample_radius: 10.0,
            dump_final: false,
            out: None,
        }
    }
}

fn config_err(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_as<T: std::str::FromStr>(field: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| config_err(field, format!("cannot parse `{value}`")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(
                    "config",
                    format!("line {}: expected `key = value`, got `{raw}`", lineno + 1),
                ));
            };
            let key = key.trim();
            let value = value.trim();
            match key {
                "dim" => cfg.dim = parse_as(key, value)?,
                "cells" => cfg.cells = parse_as(key, value)?,
                "extent" => cfg.extent = parse_as(key, value)?,
                "lambda" => cfg.lambda = parse_as(key, value)?,
                "dt" => cfg.dt = Some(parse_as(key, value)?),
                "t_final" => cfg.t_final = parse_as(key, value)?,
                "alpha" => {
                    cfg.alpha = if value == "auto" {
                        AlphaSetting::Auto
                    } else {
                        AlphaSetting::Fixed(parse_as(key, value)?)
                    }
                }
                "modes" => cfg.modes = parse_as(key, value)?,
                "paths" => cfg.paths = parse_as(key, value)?,
                "seed" => cfg.seed = parse_as(key, value)?,
                "integrand" => cfg.integrand = value.to_string(),
                "coefficient" => cfg.coefficient = value.to_string(),
                "coef_scale" => cfg.coef_scale = parse_as(key, value)?,
                "coef_decay" => cfg.coef_decay = parse_as(key, value)?,
                "coef_c0" => cfg.coef_c0 = parse_as(key, value)?,
                "coef_c1" => cfg.coef_c1 = parse_as(key, value)?,
                "coef_clamp" => cfg.coef_clamp = parse_as(key, value)?,
                "init" => cfg.init = InitSpec::parse(value).map_err(|m| config_err(key, m))?,
                "store_every" => cfg.store_every = parse_as(key, value)?,
                "workers" => cfg.workers = parse_as(key, value)?,
                "override_guard" => cfg.override_guard = parse_as(key, value)?,
                "picard_max_iter" => cfg.picard_max_iter = parse_as(key, value)?,
                "tol_picard" => cfg.tol_picard = parse_as(key, value)?,
                "lambda_list" => {
                    cfg.lambda_list = value
                        .split(',')
                        .map(|v| parse_as::<f64>(key, v.trim()))
                        .collect::<Result<_, _>>()?;
                }
                "halvings" => cfg.halvings = parse_as(key, value)?,
                "refine_mode" => cfg.refine_mode = value.to_string(),
                "sample_points" => cfg.sample_points = parse_as(key, value)?,
                "sample_radius" => cfg.sample_radius = parse_as(key, value)?,
                "dump_final" => cfg.dump_final = parse_as(key, value)?,
                "out" => cfg.out = Some(PathBuf::from(value)),
                _ => {
                    return Err(config_err(
                        key,
                        "unknown configuration key".to_string(),
                    ))
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(config_err("dim", format!("must be 1 or 2, got {}", self.dim)));
        }
        if self.cells < 2 {
            return Err(config_err("cells", "need at least 2 cells per axis"));
        }
        if !(self.extent > 0.0) {
            return Err(config_err("extent", "must be positive"));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(config_err(
                "lambda",
                format!("must be a positive real, got {}", self.lambda),
            ));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(config_err("dt", format!("must be a positive real, got {dt}")));
            }
        }
        if !(self.t_final > 0.0) {
            return Err(config_err("t_final", "must be positive"));
        }
        if let AlphaSetting::Fixed(a) = self.alpha {
            if a < 0.0 || !a.is_finite() {
                return Err(config_err("alpha", format!("must be nonnegative, got {a}")));
            }
        }
        if self.paths == 0 {
            return Err(config_err("paths", "must be at least 1"));
        }
        if self.modes == 0 && self.coefficient != "none" {
            return Err(config_err("modes", "must be at least 1"));
        }
        if !(self.tol_picard > 0.0) {
            return Err(config_err("tol_picard", "must be positive"));
        }
        if !matches!(self.refine_mode.as_str(), "dt" | "h" | "both") {
            return Err(config_err(
                "refine_mode",
                format!("must be dt, h, or both, got `{}`", self.refine_mode),
            ));
        }
        // Registry names fail early with the field attributed.
        self.build_integrand()?;
        for l in &self.lambda_list {
            if !(*l > 0.0) {
                return Err(config_err("lambda_list", format!("lambda {l} must be positive")));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::unit(self.dim, self.cells)
            .and_then(|_| match self.dim {
                1 => Grid::line(self.cells, self.extent),
                _ => Grid::rectangle([self.cells, self.cells], [self.extent, self.extent]),
            })
            .map_err(CliError::from)
    }

    /// Effective time step: explicit `dt` or the stability-guard value.
    pub fn effective_dt(&self) -> Result<f64, CliError> {
        if let Some(dt) = self.dt {
            return Ok(dt);
        }
        let grid = self.grid()?;
        let h = grid.min_spacing();
        Ok(self.lambda * h * h / (4.0 * self.dim as f64))
    }

    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        let grid = self.grid()?;
        let mut cfg = SolverConfig::new(grid, self.lambda, self.effective_dt()?, self.t_final);
        cfg.alpha = match self.alpha {
            AlphaSetting::Fixed(a) => a,
            AlphaSetting::Auto => 0.0,
        };
        cfg.paths = self.paths;
        cfg.seed = self.seed;
        cfg.store_every = self.store_every;
        cfg.override_guard = self.override_guard;
        cfg.tol.picard = self.tol_picard;
        cfg.picard_max_iter = self.picard_max_iter;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn build_integrand(&self) -> Result<ConvexIntegrand, CliError> {
        ConvexIntegrand::from_name(&self.integrand, self.dim).map_err(CliError::from)
    }

    pub fn build_coefficient(&self, grid: Grid) -> Result<DiffusionCoefficient, CliError> {
        DiffusionCoefficient::from_name(
            &self.coefficient,
            grid,
            self.modes,
            self.coef_scale,
            self.coef_decay,
            self.coef_c0,
            self.coef_c1,
            self.coef_clamp,
        )
        .map_err(CliError::from)
    }

    pub fn build_initial(&self, grid: Grid) -> InitialData {
        match &self.init {
            InitSpec::Zero => InitialData::deterministic(Field::zeros(grid)),
            InitSpec::Sine { mode, amp } => {
                InitialData::deterministic(Field::sine_mode(grid, [*mode, *mode], *amp))
            }
            InitSpec::RandSine { mode, lo, hi } => InitialData::random_amplitude(
                Field::sine_mode(grid, [*mode, *mode], 1.0),
                *lo,
                *hi,
                self.seed,
            ),
        }
    }

    /// Echo the resolved configuration as a parsable config document with
    /// deterministic key order. The effective dt is always materialized.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let dt = self
            .dt
            .or_else(|| self.effective_dt().ok())
            .unwrap_or(f64::NAN);
        let alpha = match self.alpha {
            AlphaSetting::Auto => "auto".to_string(),
            AlphaSetting::Fixed(a) => format!("{a}"),
        };
        let _ = writeln!(s, "alpha = {alpha}");
        let _ = writeln!(s, "cells = {}", self.cells);
        let _ = writeln!(s, "coef_c0 = {}", self.coef_c0);
        let _ = writeln!(s, "coef_c1 = {}", self.coef_c1);
        let _ = writeln!(s, "coef_clamp = {}", self.coef_clamp);
        let _ = writeln!(s, "coef_decay = {}", self.coef_decay);
        let _ = writeln!(s, "coef_scale = {}", self.coef_scale);
        let _ = writeln!(s, "coefficient = {}", self.coefficient);
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "dt = {dt}");
        let _ = writeln!(s, "dump_final = {}", self.dump_final);
        let _ = writeln!(s, "extent = {}", self.extent);
        let _ = writeln!(s, "halvings = {}", self.halvings);
        let _ = writeln!(s, "init = {}", self.init.echo());
        let _ = writeln!(s, "integrand = {}", self.integrand);
        if !self.lambda_list.is_empty() {
            let list: Vec<String> = self.lambda_list.iter().map(|l| format!("{l}")).collect();
            let _ = writeln!(s, "lambda_list = {}", list.join(","));
        }
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "modes = {}", self.modes);
        let _ = writeln!(s, "override_guard = {}", self.override_guard);
        let _ = writeln!(s, "paths = {}", self.paths);
        let _ = writeln!(s, "picard_max_iter = {}", self.picard_max_iter);
        let _ = writeln!(s, "refine_mode = {}", self.refine_mode);
        let _ = writeln!(s, "sample_points = {}", self.sample_points);
        let _ = writeln!(s, "sample_radius = {}", self.sample_radius);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "store_every = {}", self.store_every);
        let _ = writeln!(s, "t_final = {}", self.t_final);
        let _ = writeln!(s, "tol_picard = {}", self.tol_picard);
        let _ = writeln!(s, "workers = {}", self.workers);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrips_through_echo() {
        let text = "lambda = 0.125\ncells = 32\ninit = sine:2:0.7\nalpha = 3.5\ndt = 1e-5\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.lambda, 0.125);
        assert_eq!(cfg.cells, 32);
        assert_eq!(cfg.init, InitSpec::Sine { mode: 2, amp: 0.7 });
        let echoed = RunConfig::parse(&cfg.echo()).unwrap();
        assert_eq!(echoed.lambda, cfg.lambda);
        assert_eq!(echoed.cells, cfg.cells);
        assert_eq!(echoed.init, cfg.init);
        assert_eq!(echoed.dt, Some(1e-5));
        assert_eq!(echoed.alpha, AlphaSetting::Fixed(3.5));
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let err = RunConfig::parse("lambduh = 3\n").unwrap_err();
        match err {
            CliError::Config { field, .. } => assert_eq!(field, "lambduh"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_lambda_names_the_field() {
        let cfg = RunConfig::parse("lambda = -1\n").unwrap();
        let err = cfg.validate().unwrap_err();
        match err {
            CliError::Config { field, .. } => assert_eq!(field, "lambda"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let cfg = RunConfig::parse("# header\n\nlambda = 2 # inline\n").unwrap();
        assert_eq!(cfg.lambda, 2.0);
    }
}
