//! Subcommand implementations: resolve the configuration, run the solver,
//! write CSVs and a manifest into the output directory.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use spde_core::convex::ConvexIntegrand;
use spde_core::diagnostics::{
    lambda_sweep, moment_report, refinement_study, RefineMode,
};
use spde_core::evolution::{
    apriori_estimate, energy_residual, solve_additive, SolutionBundle,
};
use spde_core::grid::{Field, Grid};
use spde_core::picard::{solve_multiplicative, AlphaChoice, PicardGuess};
use spde_core::{math, rng};

use crate::config::{AlphaSetting, InitSpec, RunConfig};
use crate::csvio::{self, ConvexCheckRow};
use crate::error::CliError;
use crate::parallel::RayonExecutor;

pub struct RunContext<'a> {
    pub config: &'a RunConfig,
    pub out: PathBuf,
    pub subcommand: &'a str,
    started: Instant,
}

impl<'a> RunContext<'a> {
    pub fn new(
        config: &'a RunConfig,
        out_flag: Option<PathBuf>,
        subcommand: &'a str,
    ) -> Result<Self, CliError> {
        config.validate()?;
        let out = out_flag
            .or_else(|| config.out.clone())
            .ok_or_else(|| CliError::Config {
                field: "out".into(),
                message: "no output directory (use --out or the `out` key)".into(),
            })?;
        fs::create_dir_all(&out)?;
        Ok(Self {
            config,
            out,
            subcommand,
            started: Instant::now(),
        })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Manifest: a parsable config document that reproduces the run, plus
    /// provenance comments.
    pub fn write_manifest(&self, extra: &[(String, String)]) -> Result<(), CliError> {
        let mut text = String::from("# spde manifest\n");
        text.push_str(&format!("# subcommand = {}\n", self.subcommand));
        text.push_str(&format!("# version = {}\n", env!("CARGO_PKG_VERSION")));
        text.push_str(&format!(
            "# wallclock_s = {:.3}\n",
            self.started.elapsed().as_secs_f64()
        ));
        for (k, v) in extra {
            text.push_str(&format!("# {k} = {v}\n"));
        }
        text.push_str(&self.config.echo());
        fs::write(self.file("manifest"), text)?;
        Ok(())
    }
}

fn write_bundle_outputs(ctx: &RunContext, bundle: &SolutionBundle) -> Result<(), CliError> {
    for sol in &bundle.paths {
        csvio::write_path_csv(&ctx.file(&format!("path{}.csv", sol.path)), sol)?;
        if ctx.config.dump_final {
            csvio::write_field_csv(
                &ctx.file(&format!("final_path{}.csv", sol.path)),
                &sol.terminal,
            )?;
        }
    }
    Ok(())
}

pub fn simulate_additive(ctx: &RunContext) -> Result<(), CliError> {
    let cfg = ctx.config.solver_config()?;
    let k = ctx.config.build_integrand()?;
    let coef = ctx.config.build_coefficient(cfg.grid)?;
    if !coef.is_additive() {
        return Err(CliError::Config {
            field: "coefficient".into(),
            message: "simulate-additive needs an additive coefficient (none or add_smooth)"
                .into(),
        });
    }
    let init = ctx.config.build_initial(cfg.grid);
    let exec = RayonExecutor::new(ctx.config.workers)?;
    let bundle = solve_additive(&exec, &cfg, &k, &coef, &|p| init.field(p))?;
    write_bundle_outputs(ctx, &bundle)?;
    let moments = moment_report(&bundle)?;
    csvio::write_moments_csv(&ctx.file("moments.csv"), &moments)?;
    let apriori = apriori_estimate(&bundle)?;
    csvio::write_apriori_csv(&ctx.file("apriori.csv"), &apriori)?;
    let t_end = bundle.steps() as f64 * cfg.dt;
    let (res, res_se) = energy_residual(&bundle, t_end, 0.0)?;
    ctx.write_manifest(&[(
        "coefficient_tail_ratio".into(),
        format!("{}", coef.tail_ratio()),
    )])?;
    println!(
        "simulate-additive: {} paths x {} steps, sup_t E|u|^2 = {:.6e}",
        bundle.paths.len(),
        bundle.steps(),
        moments.sup_u_l2_sq.mean
    );
    match res_se {
        Some(se) => println!("energy residual at T: {res:.6e} (se {se:.2e})"),
        None => println!("energy residual at T: {res:.6e} (single path)"),
    }
    Ok(())
}

pub fn solve_multiplicative_cmd(ctx: &RunContext, alpha_flag: Option<f64>) -> Result<(), CliError> {
    let cfg = ctx.config.solver_config()?;
    let k = ctx.config.build_integrand()?;
    let coef = ctx.config.build_coefficient(cfg.grid)?;
    let init = ctx.config.build_initial(cfg.grid);
    let initials: Vec<Field> = (0..cfg.paths).map(|p| init.field(p)).collect();
    let alpha = match (alpha_flag, ctx.config.alpha) {
        (Some(a), _) => AlphaChoice::Fixed(a),
        (None, AlphaSetting::Fixed(a)) => AlphaChoice::Fixed(a),
        (None, AlphaSetting::Auto) => AlphaChoice::Calibrated,
    };
    let exec = RayonExecutor::new(ctx.config.workers)?;
    let sol = solve_multiplicative(
        &exec,
        &cfg,
        &k,
        &coef,
        &initials,
        alpha,
        PicardGuess::InitialDatum,
    )?;
    write_bundle_outputs(ctx, &sol.bundle)?;
    csvio::write_picard_csv(&ctx.file("picard.csv"), &sol.report)?;
    let moments = moment_report(&sol.bundle)?;
    csvio::write_moments_csv(&ctx.file("moments.csv"), &moments)?;
    ctx.write_manifest(&[
        ("picard_alpha".into(), format!("{}", sol.report.alpha)),
        (
            "picard_iterations".into(),
            format!("{}", sol.report.iterations),
        ),
    ])?;
    let worst_ratio = sol
        .report
        .ratios
        .iter()
        .cloned()
        .fold(f64::NAN, f64::max);
    println!(
        "solve-multiplicative: alpha = {:.4e}, {} iterations, worst ratio {:.4}, residual {:.3e}",
        sol.report.alpha, sol.report.iterations, worst_ratio, sol.report.fixed_point_residual
    );
    Ok(())
}

pub fn lambda_sweep_cmd(ctx: &RunContext) -> Result<(), CliError> {
    if ctx.config.lambda_list.is_empty() {
        return Err(CliError::Config {
            field: "lambda_list".into(),
            message: "lambda-sweep needs a non-empty lambda_list".into(),
        });
    }
    let cfg = ctx.config.solver_config()?;
    let k = ctx.config.build_integrand()?;
    let coef = ctx.config.build_coefficient(cfg.grid)?;
    let init = ctx.config.build_initial(cfg.grid);
    let exec = RayonExecutor::new(ctx.config.workers)?;
    let rows = lambda_sweep(
        &exec,
        &cfg,
        &k,
        &coef,
        &|p| init.field(p),
        &ctx.config.lambda_list,
    )?;
    csvio::write_lambda_sweep_csv(&ctx.file("lambda_sweep.csv"), &rows)?;
    ctx.write_manifest(&[])?;
    for r in &rows {
        println!(
            "lambda {:.5}: diff {} k* {:.4e} kJ {:.4e} total_ratio {:.4}",
            r.lambda,
            r.diff_to_next
                .map(|d| format!("{d:.4e}"))
                .unwrap_or_else(|| "-".into()),
            r.k_star_stat,
            r.k_resolvent_stat,
            r.total_ratio
        );
    }
    Ok(())
}

pub fn refinement_study_cmd(ctx: &RunContext) -> Result<(), CliError> {
    let cfg = ctx.config.solver_config()?;
    let k = ctx.config.build_integrand()?;
    let mode = match ctx.config.refine_mode.as_str() {
        "dt" => RefineMode::Dt,
        "h" => RefineMode::Space,
        _ => RefineMode::Both,
    };
    let rc = ctx.config;
    let coef_for = |g: Grid| rc.build_coefficient(g).expect("validated coefficient");
    let initial_for = |g: Grid, p: usize| rc.build_initial(g).field(p);
    // Exact reference only for the linear benchmark: quadratic integrand,
    // zero noise, fixed sine datum. The regularized PDE then is the heat
    // equation with conductivity 1/(1+λ) + λ.
    let reference_closure;
    let reference: Option<&(dyn Fn(&spde_core::SolverConfig) -> Field + Sync)> =
        if rc.integrand == "quad" && rc.coefficient == "none" {
            if let InitSpec::Sine { mode: m, amp } = rc.init {
                reference_closure = move |c: &spde_core::SolverConfig| {
                    let cond = 1.0 / (1.0 + c.lambda) + c.lambda;
                    let mut rate = 0.0;
                    for axis in 0..c.grid.dim() {
                        let w = m as f64 * math::PI / c.grid.extent(axis);
                        rate += w * w;
                    }
                    let t_end = c.steps() as f64 * c.dt;
                    Field::sine_mode(c.grid, [m, m], amp * math::exp(-cond * rate * t_end))
                };
                Some(&reference_closure)
            } else {
                None
            }
        } else {
            None
        };
    let exec = RayonExecutor::new(ctx.config.workers)?;
    let rows = refinement_study(
        &exec,
        &cfg,
        &k,
        &coef_for,
        &initial_for,
        reference,
        ctx.config.halvings,
        mode,
    )?;
    csvio::write_refinement_csv(&ctx.file("refinement.csv"), &rows)?;
    ctx.write_manifest(&[])?;
    for r in &rows {
        println!(
            "level {}: dt {:.3e} h {:.3e} residual {:.4e}{}",
            r.level,
            r.dt,
            r.h,
            r.energy_residual,
            r.residual_order
                .map(|o| format!(" (order {o:.2})"))
                .unwrap_or_default()
        );
    }
    Ok(())
}

/// The convex-core identity battery over keyed random samples; shared by
/// the `convex-check` subcommand and the acceptance suite.
pub fn convex_battery(
    k: &ConvexIntegrand,
    lambdas: &[f64],
    points: usize,
    radius: f64,
    seed: u64,
) -> Result<Vec<ConvexCheckRow>, CliError> {
    let dim = k.dim();
    let sample = |i: u64, lane: u64| -> Vec<f64> {
        (0..dim)
            .map(|d| {
                let bits = rng::keyed_u64(seed, i, d as u64, lane, 7);
                (((bits >> 11) as f64) / 9_007_199_254_740_992.0 * 2.0 - 1.0) * radius
            })
            .collect()
    };
    let mut rows = Vec::new();
    for &lambda in lambdas {
        let mut gap_violation = 0.0_f64;
        let mut duality = 0.0_f64;
        let mut lipschitz_excess = 0.0_f64;
        let mut nonexpansive_excess = 0.0_f64;
        let mut reconstruction = 0.0_f64;
        for i in 0..points as u64 {
            let x = sample(i, 0);
            let y = sample(i, 1);
            let r = sample(i, 2);
            let gap = k.fenchel_gap(&x, &r)?;
            gap_violation = gap_violation.max(-gap);
            duality = duality.max(k.yosida_duality_residual(lambda, &x)?.abs());
            let px = k.prox(lambda, &x)?;
            let py = k.prox(lambda, &y)?;
            let gx = k.yosida(lambda, &x)?;
            let gy = k.yosida(lambda, &y)?;
            let dxy = math::norm2(
                &x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>(),
            );
            if dxy > 1e-8 {
                let dg = math::norm2(
                    &gx.iter().zip(&gy).map(|(a, b)| a - b).collect::<Vec<_>>(),
                );
                lipschitz_excess = lipschitz_excess.max(dg * lambda / dxy - 1.0);
                let dp = math::norm2(
                    &px.iter().zip(&py).map(|(a, b)| a - b).collect::<Vec<_>>(),
                );
                nonexpansive_excess = nonexpansive_excess.max(dp / dxy - 1.0);
            }
            let scale = math::norm2(&x).max(1.0);
            for d in 0..dim {
                reconstruction =
                    reconstruction.max((x[d] - (px[d] + lambda * gx[d])).abs() / scale);
            }
        }
        // Closed form against the adaptive Legendre search on a small
        // subsample; the search is the expensive half of the pair.
        let mut oracle_gap = 0.0_f64;
        if k.has_closed_conjugate() {
            let count = if dim == 1 { 16 } else { 6 };
            for i in 0..count {
                let r = sample(1_000_000 + i, 3);
                let closed = k.conjugate(&r)?;
                let oracle = k.legendre_oracle(&r)?;
                oracle_gap = oracle_gap.max((closed - oracle).abs() / (1.0 + closed.abs()));
            }
        }
        rows.push(ConvexCheckRow {
            integrand: k.name().to_string(),
            dim,
            lambda,
            max_gap_violation: gap_violation,
            max_duality_residual: duality,
            max_lipschitz_excess: lipschitz_excess.max(0.0),
            max_nonexpansive_excess: nonexpansive_excess.max(0.0),
            max_reconstruction_error: reconstruction,
            max_conjugate_oracle_gap: oracle_gap,
            asymmetry_bound: k.asymmetry_bound(),
        });
    }
    Ok(rows)
}

pub fn convex_check_cmd(ctx: &RunContext) -> Result<(), CliError> {
    let k = ctx.config.build_integrand()?;
    let rows = convex_battery(
        &k,
        &[1.0, 0.1, 0.01],
        ctx.config.sample_points,
        ctx.config.sample_radius,
        ctx.config.seed,
    )?;
    csvio::write_convex_check_csv(&ctx.file("convex_check.csv"), &rows)?;
    ctx.write_manifest(&[])?;
    let mut failed = Vec::new();
    for r in &rows {
        println!(
            "{} (n={}) lambda {:.4}: gap_violation {:.3e} duality {:.3e} lipschitz_excess {:.3e} nonexpansive_excess {:.3e} reconstruction {:.3e} oracle_gap {:.3e}",
            r.integrand,
            r.dim,
            r.lambda,
            r.max_gap_violation,
            r.max_duality_residual,
            r.max_lipschitz_excess,
            r.max_nonexpansive_excess,
            r.max_reconstruction_error,
            r.max_conjugate_oracle_gap,
        );
        if r.max_gap_violation > 1e-8 {
            failed.push(format!("{} λ={}: Fenchel gap", r.integrand, r.lambda));
        }
        if r.max_duality_residual > 1e-8 {
            failed.push(format!("{} λ={}: duality residual", r.integrand, r.lambda));
        }
        if r.max_lipschitz_excess > 1e-10 {
            failed.push(format!("{} λ={}: Yosida Lipschitz", r.integrand, r.lambda));
        }
        if r.max_nonexpansive_excess > 1e-12 {
            failed.push(format!("{} λ={}: resolvent expansion", r.integrand, r.lambda));
        }
        if r.max_reconstruction_error > 1e-12 {
            failed.push(format!("{} λ={}: reconstruction", r.integrand, r.lambda));
        }
        if r.max_conjugate_oracle_gap > 1e-6 {
            failed.push(format!("{} λ={}: conjugate vs oracle", r.integrand, r.lambda));
        }
    }
    if !failed.is_empty() {
        return Err(CliError::CheckFailed {
            what: failed.join("; "),
        });
    }
    Ok(())
}
