//! Cross-cutting estimators: moment reports, λ-sweeps with common random
//! numbers, and (Δt, h) refinement studies.
//!
//! Every expectation is a plain Monte Carlo mean over paths and carries a
//! standard error, so discretization error and sampling error stay
//! separable. Time quadrature is the left-endpoint rectangle rule.

use alloc::format;
use alloc::vec::Vec;

use crate::convex::ConvexIntegrand;
use crate::error::{Error, Result};
use crate::evolution::{
    apriori_estimate, energy_residual, solve_additive, SolutionBundle, SolverConfig,
};
use crate::exec::PathExecutor;
use crate::grid::{Field, Grid};
use crate::math::{self, KahanSum};
use crate::noise::DiffusionCoefficient;

/// Monte Carlo estimate with its standard error (`None` for one path,
/// which makes the value a point estimate).
#[derive(Clone, Copy, Debug)]
pub struct MomentEstimate {
    pub mean: f64,
    pub se: Option<f64>,
}

/// The integrability quantities of the well-posedness statement.
#[derive(Clone, Copy, Debug)]
pub struct MomentReport {
    /// sup_t E‖u(t)‖²_{L²}, standard error taken at the maximizing time.
    pub sup_u_l2_sq: MomentEstimate,
    /// E ∫₀ᵀ ‖∇u(t)‖_{L¹} dt (the W^{1,1}₀ seminorm in time).
    pub w11_integral: MomentEstimate,
    /// E ∫₀ᵀ ‖η(t)‖_{L¹} dt.
    pub eta_l1_integral: MomentEstimate,
    /// E ∫₀ᵀ ( ∫k(∇u) + ∫k*(η) ) dt.
    pub convex_integral: MomentEstimate,
    /// Weak-continuity proxy: max_m |E⟨u_{m+1}, φ⟩ − E⟨u_m, φ⟩| for the
    /// first sine mode φ. Reported, not asserted.
    pub weak_increment_max: f64,
}

fn estimate(samples: &[f64]) -> MomentEstimate {
    let (mean, se) = math::mean_se(samples);
    MomentEstimate { mean, se }
}

pub fn moment_report(bundle: &SolutionBundle) -> Result<MomentReport> {
    if bundle.paths.is_empty() {
        return Err(Error::EmptyBundle);
    }
    let n = bundle.steps();
    let dt = bundle.config.dt;
    let m = bundle.paths.len();

    // sup over time of the Monte Carlo mean of ‖u‖².
    let mut best_idx = 0;
    let mut best_mean = f64::NEG_INFINITY;
    for t_idx in 0..=n {
        let mut acc = KahanSum::new();
        for p in &bundle.paths {
            acc.add(p.diag[t_idx].u_l2_sq);
        }
        let mean = acc.value() / m as f64;
        if mean > best_mean {
            best_mean = mean;
            best_idx = t_idx;
        }
    }
    let sup_samples: Vec<f64> = bundle
        .paths
        .iter()
        .map(|p| p.diag[best_idx].u_l2_sq)
        .collect();

    let integral = |f: &dyn Fn(&crate::evolution::StepDiagnostics) -> f64| -> Vec<f64> {
        bundle
            .paths
            .iter()
            .map(|p| {
                let mut acc = KahanSum::new();
                for d in &p.diag[..n] {
                    acc.add(f(d));
                }
                dt * acc.value()
            })
            .collect()
    };
    let w11 = integral(&|d| d.grad_l1);
    let eta = integral(&|d| d.eta_l1);
    let convex = integral(&|d| d.k_grad + d.k_star_eta);

    let mut weak_max = 0.0_f64;
    for t_idx in 0..n {
        let mut a = KahanSum::new();
        let mut b = KahanSum::new();
        for p in &bundle.paths {
            a.add(p.diag[t_idx].u_dot_test);
            b.add(p.diag[t_idx + 1].u_dot_test);
        }
        let inc = (b.value() - a.value()).abs() / m as f64;
        if inc > weak_max {
            weak_max = inc;
        }
    }

    Ok(MomentReport {
        sup_u_l2_sq: estimate(&sup_samples),
        w11_integral: estimate(&w11),
        eta_l1_integral: estimate(&eta),
        convex_integral: estimate(&convex),
        weak_increment_max: weak_max,
    })
}

/// One λ of a sweep: the coupled difference to the next λ in the list, the
/// uniform-integrability statistics, and the a priori ratios.
#[derive(Clone, Debug)]
pub struct LambdaSweepRow {
    pub lambda: f64,
    /// ‖u_λ(T) − u_λ'(T)‖_{L²_{ω,x}} against the next list entry, under
    /// common random numbers. Empty on the last row.
    pub diff_to_next: Option<f64>,
    /// E ∫₀ᵀ ∫ k*(γ_λ(∇u_λ))
    pub k_star_stat: f64,
    /// E ∫₀ᵀ ∫ k((I+λγ)⁻¹ ∇u_λ)
    pub k_resolvent_stat: f64,
    /// E ∫₀ᵀ ∫ γ_λ(∇u_λ)·∇u_λ — the bound both statistics sit below.
    pub flux_stat: f64,
    pub ratios: [f64; 3],
    /// (sup + visc + flux) / rhs — the summed a priori estimate.
    pub total_ratio: f64,
    pub rhs: f64,
}

/// Solve the additive problem for every λ in the list with identical Wiener
/// increments and report the limit-passage statistics.
pub fn lambda_sweep<E: PathExecutor>(
    exec: &E,
    base: &SolverConfig,
    k: &ConvexIntegrand,
    coef: &DiffusionCoefficient,
    initial: &(dyn Fn(usize) -> Field + Sync),
    lambdas: &[f64],
) -> Result<Vec<LambdaSweepRow>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidConfig {
            field: "lambda_list",
            message: "need at least one lambda".into(),
        });
    }
    let mut rows: Vec<LambdaSweepRow> = Vec::with_capacity(lambdas.len());
    let mut terminals: Vec<Vec<Field>> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let mut cfg = *base;
        cfg.lambda = lambda;
        cfg.validate()?;
        let bundle = solve_additive(exec, &cfg, k, coef, initial)?;
        let n = bundle.steps();
        let dt = cfg.dt;
        let mcount = bundle.paths.len() as f64;
        let mut k_star = 0.0;
        let mut k_res = 0.0;
        let mut flux = 0.0;
        for p in &bundle.paths {
            let mut s1 = KahanSum::new();
            let mut s2 = KahanSum::new();
            let mut s3 = KahanSum::new();
            for d in &p.diag[..n] {
                s1.add(d.k_star_eta);
                s2.add(d.k_resolvent);
                s3.add(d.eta_dot_grad);
            }
            k_star += dt * s1.value();
            k_res += dt * s2.value();
            flux += dt * s3.value();
        }
        let apriori = apriori_estimate(&bundle)?;
        rows.push(LambdaSweepRow {
            lambda,
            diff_to_next: None,
            k_star_stat: k_star / mcount,
            k_resolvent_stat: k_res / mcount,
            flux_stat: flux / mcount,
            ratios: apriori.ratios,
            total_ratio: apriori.total_ratio,
            rhs: apriori.rhs,
        });
        terminals.push(bundle.paths.into_iter().map(|p| p.terminal).collect());
    }
    for i in 0..terminals.len().saturating_sub(1) {
        let (a, b) = (&terminals[i], &terminals[i + 1]);
        let mut acc = KahanSum::new();
        for (ua, ub) in a.iter().zip(b) {
            acc.add(ua.sub(ub).l2_norm_sq());
        }
        rows[i].diff_to_next = Some(math::sqrt(acc.value() / a.len() as f64));
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefineMode {
    /// Halve Δt per level at fixed grid.
    Dt,
    /// Halve h per level at fixed Δt (Δt must respect the guard at the
    /// finest level).
    Space,
    /// Halve h and quarter Δt per level, preserving the guard margin.
    Both,
}

#[derive(Clone, Copy, Debug)]
pub struct RefinementRow {
    pub level: usize,
    pub dt: f64,
    pub h: f64,
    pub energy_residual: f64,
    pub energy_se: Option<f64>,
    pub terminal_l2_sq: f64,
    pub terminal_se: Option<f64>,
    /// √(E‖u(T) − ref‖²) against a caller-supplied reference solution.
    pub reference_error: Option<f64>,
    /// log₂ of the residual ratio against the previous level.
    pub residual_order: Option<f64>,
    /// log₂ of the reference-error ratio against the previous level.
    pub reference_order: Option<f64>,
}

/// Maximum halvings accepted by [`refinement_study`].
pub const MAX_HALVINGS: usize = 5;
/// Desk-scale caps enforced per refinement level.
pub const MAX_CELLS_PER_AXIS: usize = 512;
pub const MAX_STEPS: usize = 1_000_000;

/// Energy residual and terminal moments across refinement levels, with the
/// same master seed at every level. `coef_for` and `initial_for` rebuild
/// the coefficient and the initial datum on each level's grid; `reference`
/// (optional) supplies an exact terminal state for error measurement.
#[allow(clippy::too_many_arguments)]
pub fn refinement_study<E: PathExecutor>(
    exec: &E,
    base: &SolverConfig,
    k: &ConvexIntegrand,
    coef_for: &(dyn Fn(Grid) -> DiffusionCoefficient + Sync),
    initial_for: &(dyn Fn(Grid, usize) -> Field + Sync),
    reference: Option<&(dyn Fn(&SolverConfig) -> Field + Sync)>,
    halvings: usize,
    mode: RefineMode,
) -> Result<Vec<RefinementRow>> {
    if halvings > MAX_HALVINGS {
        return Err(Error::ResourceGuard {
            what: format!("halvings {halvings} exceeds the limit {MAX_HALVINGS}"),
        });
    }
    let mut rows: Vec<RefinementRow> = Vec::with_capacity(halvings + 1);
    for level in 0..=halvings {
        let mut cfg = *base;
        match mode {
            RefineMode::Dt => {
                cfg.dt = base.dt / (1u64 << level) as f64;
            }
            RefineMode::Space => {
                let mut g = base.grid;
                for _ in 0..level {
                    g = g.refined()?;
                }
                cfg.grid = g;
            }
            RefineMode::Both => {
                let mut g = base.grid;
                for _ in 0..level {
                    g = g.refined()?;
                }
                cfg.grid = g;
                cfg.dt = base.dt / (1u64 << (2 * level)) as f64;
            }
        }
        for axis in 0..cfg.grid.dim() {
            if cfg.grid.cells(axis) > MAX_CELLS_PER_AXIS {
                return Err(Error::ResourceGuard {
                    what: format!(
                        "level {level} grid has {} cells per axis (limit {MAX_CELLS_PER_AXIS})",
                        cfg.grid.cells(axis)
                    ),
                });
            }
        }
        if cfg.steps() > MAX_STEPS {
            return Err(Error::ResourceGuard {
                what: format!(
                    "level {level} needs {} steps (limit {MAX_STEPS})",
                    cfg.steps()
                ),
            });
        }
        cfg.validate()?;
        let coef = coef_for(cfg.grid);
        let grid = cfg.grid;
        let bundle = solve_additive(exec, &cfg, k, &coef, &move |p| initial_for(grid, p))?;
        let t_end = bundle.steps() as f64 * cfg.dt;
        let (res, res_se) = energy_residual(&bundle, t_end, 0.0)?;
        let term: Vec<f64> = bundle
            .paths
            .iter()
            .map(|p| p.diag[bundle.steps()].u_l2_sq)
            .collect();
        let (tmean, tse) = math::mean_se(&term);
        let ref_err = reference.map(|r| {
            let exact = r(&cfg);
            let mut acc = KahanSum::new();
            for p in &bundle.paths {
                acc.add(p.terminal.sub(&exact).l2_norm_sq());
            }
            math::sqrt(acc.value() / bundle.paths.len() as f64)
        });
        let residual_order = rows.last().and_then(|prev: &RefinementRow| {
            if prev.energy_residual != 0.0 && res != 0.0 {
                Some(math::log2(prev.energy_residual.abs() / res.abs()))
            } else {
                None
            }
        });
        let reference_order = match (rows.last().and_then(|p| p.reference_error), ref_err) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some(math::log2(a / b)),
            _ => None,
        };
        rows.push(RefinementRow {
            level,
            dt: cfg.dt,
            h: cfg.grid.min_spacing(),
            energy_residual: res,
            energy_se: res_se,
            terminal_l2_sq: tmean,
            terminal_se: tse,
            reference_error: ref_err,
            residual_order,
            reference_order,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;

    fn cfg(cells: usize, lambda: f64, t_final: f64) -> SolverConfig {
        let grid = Grid::line(cells, 1.0).unwrap();
        let h = 1.0 / cells as f64;
        SolverConfig::new(grid, lambda, lambda * h * h / 8.0, t_final)
    }

    #[test]
    fn moments_vanish_for_zero_data() {
        let c = cfg(8, 0.5, 0.02);
        let k = ConvexIntegrand::quadratic(1);
        let coef = DiffusionCoefficient::zero(c.grid);
        let mut c2 = c;
        c2.paths = 2;
        let bundle =
            solve_additive(&Sequential, &c2, &k, &coef, &|_| Field::zeros(c2.grid)).unwrap();
        let rep = moment_report(&bundle).unwrap();
        assert_eq!(rep.sup_u_l2_sq.mean, 0.0);
        assert_eq!(rep.w11_integral.mean, 0.0);
        assert_eq!(rep.eta_l1_integral.mean, 0.0);
        assert_eq!(rep.convex_integral.mean, 0.0);
        assert_eq!(rep.weak_increment_max, 0.0);
    }

    #[test]
    fn dissipative_sup_is_attained_at_zero() {
        let c = {
            let mut c = cfg(16, 0.5, 0.02);
            c.paths = 2;
            c
        };
        let k = ConvexIntegrand::quadratic(1);
        let coef = DiffusionCoefficient::zero(c.grid);
        let u0 = Field::sine_mode(c.grid, [1, 0], 1.3);
        let bundle = solve_additive(&Sequential, &c, &k, &coef, &|_| u0.clone()).unwrap();
        let rep = moment_report(&bundle).unwrap();
        assert!((rep.sup_u_l2_sq.mean - u0.l2_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn lambda_sweep_single_row_has_no_difference() {
        let c = {
            let mut c = cfg(8, 0.25, 0.02);
            c.paths = 1;
            c
        };
        let k = ConvexIntegrand::abs_quadratic(1);
        let coef = DiffusionCoefficient::zero(c.grid);
        let u0 = Field::sine_mode(c.grid, [1, 0], 1.0);
        let rows =
            lambda_sweep(&Sequential, &c, &k, &coef, &|_| u0.clone(), &[0.25]).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].diff_to_next.is_none());
    }

    #[test]
    fn quadratic_sweep_differences_shrink_with_lambda() {
        let c = {
            // dt respecting the guard at the smallest λ in the list.
            let grid = Grid::line(16, 1.0).unwrap();
            let h: f64 = 1.0 / 16.0;
            let mut c = SolverConfig::new(grid, 1.0, 0.125 * h * h / 8.0, 0.05);
            c.paths = 1;
            c
        };
        let k = ConvexIntegrand::quadratic(1);
        let coef = DiffusionCoefficient::zero(c.grid);
        let u0 = Field::sine_mode(c.grid, [1, 0], 1.0);
        let rows = lambda_sweep(
            &Sequential,
            &c,
            &k,
            &coef,
            &|_| u0.clone(),
            &[1.0, 0.5, 0.25, 0.125],
        )
        .unwrap();
        let d: Vec<f64> = rows[..3].iter().map(|r| r.diff_to_next.unwrap()).collect();
        assert!(d[0] > d[1] && d[1] > d[2], "differences {d:?}");
    }

    #[test]
    fn refinement_guards_trip() {
        let c = cfg(8, 0.5, 0.02);
        let k = ConvexIntegrand::quadratic(1);
        let err = refinement_study(
            &Sequential,
            &c,
            &k,
            &|g| DiffusionCoefficient::zero(g),
            &|g, _| Field::zeros(g),
            None,
            9,
            RefineMode::Dt,
        );
        assert!(matches!(err, Err(Error::ResourceGuard { .. })));
    }
}
