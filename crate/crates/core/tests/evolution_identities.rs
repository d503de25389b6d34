//! Energy identities, a priori estimates, and the λ→0 limit behavior of the
//! regularized flow, measured on desk-scale configurations with common
//! random numbers.

use spde_core::convex::ConvexIntegrand;
use spde_core::diagnostics::lambda_sweep;
use spde_core::evolution::{
    apriori_estimate, energy_residual, solve_additive, SolverConfig,
};
use spde_core::exec::Sequential;
use spde_core::grid::{Field, Grid};
use spde_core::noise::DiffusionCoefficient;

fn config(cells: usize, lambda: f64, dt: f64, t_final: f64, paths: usize) -> SolverConfig {
    let grid = Grid::line(cells, 1.0).unwrap();
    let mut cfg = SolverConfig::new(grid, lambda, dt, t_final);
    cfg.paths = paths;
    cfg.seed = 2718;
    cfg
}

#[test]
fn deterministic_energy_residual_halves_with_dt() {
    let k = ConvexIntegrand::abs_quadratic(1);
    let lambda = 0.25;
    let h: f64 = 1.0 / 16.0;
    let base_dt = lambda * h * h / 8.0;
    let mut residuals = Vec::new();
    for level in 0..3 {
        let cfg = config(16, lambda, base_dt / (1 << level) as f64, 0.1, 1);
        let coef = DiffusionCoefficient::zero(cfg.grid);
        let u0 = Field::sine_mode(cfg.grid, [1, 0], 1.0);
        let bundle = solve_additive(&Sequential, &cfg, &k, &coef, &|_| u0.clone()).unwrap();
        let t_end = bundle.steps() as f64 * cfg.dt;
        let (r, _) = energy_residual(&bundle, t_end, 0.0).unwrap();
        residuals.push(r);
    }
    for w in residuals.windows(2) {
        let ratio = w[0].abs() / w[1].abs();
        assert!(
            (1.6..=2.4).contains(&ratio),
            "halving ratio {ratio}, residuals {residuals:?}"
        );
    }
}

#[test]
fn stochastic_energy_residual_within_monte_carlo_band() {
    // One-mode additive noise; the bias is measured by Richardson halving
    // of the residual means under the same seeds.
    let k = ConvexIntegrand::abs_quadratic(1);
    let lambda = 0.25;
    let h: f64 = 1.0 / 16.0;
    let dt = lambda * h * h / 8.0;
    let grid = Grid::line(16, 1.0).unwrap();
    let mode = Field::sine_mode(grid, [1, 0], 0.4);
    let run = |dt: f64| {
        let cfg = config(16, lambda, dt, 0.1, 400);
        let coef = DiffusionCoefficient::additive_from_modes(cfg.grid, vec![mode.clone()]);
        let u0 = Field::sine_mode(cfg.grid, [1, 0], 1.0);
        let bundle = solve_additive(&Sequential, &cfg, &k, &coef, &|_| u0.clone()).unwrap();
        let t_end = bundle.steps() as f64 * cfg.dt;
        energy_residual(&bundle, t_end, 0.0).unwrap()
    };
    let (mean, se) = run(dt);
    let (mean_half, _) = run(dt / 2.0);
    let bias = 2.0 * (mean - mean_half).abs();
    let se = se.unwrap();
    assert!(
        mean.abs() <= 3.0 * se + bias,
        "residual {mean} vs band 3·{se} + {bias}"
    );
}

#[test]
fn apriori_ratios_zero_for_trivial_data_and_scale_linearly() {
    let k = ConvexIntegrand::quadratic(1);
    let cfg = config(16, 0.5, 0.5 * (1.0f64 / 16.0).powi(2) / 8.0, 0.05, 1);
    let coef = DiffusionCoefficient::zero(cfg.grid);
    let bundle = solve_additive(&Sequential, &cfg, &k, &coef, &|_| Field::zeros(cfg.grid)).unwrap();
    let rep = apriori_estimate(&bundle).unwrap();
    assert_eq!(rep.ratios, [0.0, 0.0, 0.0]);
    assert_eq!(rep.rhs, 0.0);

    // Doubling u₀ doubles the first (linear) term exactly for quadratic k.
    let u0 = Field::sine_mode(cfg.grid, [1, 0], 1.0);
    let b1 = solve_additive(&Sequential, &cfg, &k, &coef, &|_| u0.clone()).unwrap();
    let mut u0x2 = u0.clone();
    u0x2.scale(2.0);
    let b2 = solve_additive(&Sequential, &cfg, &k, &coef, &|_| u0x2.clone()).unwrap();
    let r1 = apriori_estimate(&b1).unwrap();
    let r2 = apriori_estimate(&b2).unwrap();
    assert!((r2.sup_term - 2.0 * r1.sup_term).abs() < 1e-12 * r2.sup_term.max(1.0));
    assert!(r2.visc_term <= 2.0 * r1.visc_term * (1.0 + 1e-12));
}

#[test]
fn quadratic_apriori_estimate_is_lambda_uniform() {
    // The summed estimate (sup + √λ·grad + flux)/rhs stays within a factor
    // 2 across two decades of λ. The individual terms cannot be λ-flat:
    // √λ‖∇u‖ decays like √λ and the flux carries the Yosida factor
    // 1/(1+λ); the lemma-style bound is about their sum.
    let h: f64 = 1.0 / 16.0;
    let dt = 0.01 * h * h / 8.0; // guard at the smallest λ
    let k = ConvexIntegrand::quadratic(1);
    let grid = Grid::line(16, 1.0).unwrap();
    let mode = Field::sine_mode(grid, [1, 0], 0.3);
    let mut totals = Vec::new();
    for lambda in [1.0, 0.1, 0.01] {
        let cfg = config(16, lambda, dt, 0.02, 8);
        let coef = DiffusionCoefficient::additive_from_modes(cfg.grid, vec![mode.clone()]);
        let u0 = Field::sine_mode(cfg.grid, [1, 0], 1.0);
        let bundle = solve_additive(&Sequential, &cfg, &k, &coef, &|_| u0.clone()).unwrap();
        totals.push(apriori_estimate(&bundle).unwrap().total_ratio);
    }
    let max = totals.iter().cloned().fold(f64::MIN, f64::max);
    let min = totals.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max / min < 2.0, "summed ratios vary too much: {totals:?}");
}

#[test]
fn uniform_integrability_statistics_sit_below_the_flux() {
    // eq of the duality chain: k(J) + k*(γ_λ) = γ_λ·x − λ|γ_λ|² ≤ γ_λ·x,
    // integrated: both statistics stay below E∫∫ γ_λ(∇u)·∇u.
    let h: f64 = 1.0 / 16.0;
    let dt = 0.0625 * h * h / 8.0;
    let k = ConvexIntegrand::abs_quadratic(1);
    let grid = Grid::line(16, 1.0).unwrap();
    let mode = Field::sine_mode(grid, [1, 0], 0.4);
    let base = config(16, 1.0, dt, 0.05, 8);
    let coef = DiffusionCoefficient::additive_from_modes(grid, vec![mode]);
    let u0 = Field::sine_mode(grid, [1, 0], 1.5);
    let rows = lambda_sweep(
        &Sequential,
        &base,
        &k,
        &coef,
        &|_| u0.clone(),
        &[1.0, 0.5, 0.25, 0.125, 0.0625],
    )
    .unwrap();
    for row in &rows {
        assert!(
            row.k_star_stat + row.k_resolvent_stat <= row.flux_stat + 1e-8,
            "λ={}: k* {} + kJ {} vs flux {}",
            row.lambda,
            row.k_star_stat,
            row.k_resolvent_stat,
            row.flux_stat
        );
        assert!(row.k_star_stat >= -1e-10 && row.k_resolvent_stat >= -1e-10);
    }
}

#[test]
fn lambda_cauchy_differences_decrease_with_crn() {
    // ‖u_λ(T) − u_{λ/2}(T)‖ strictly decreasing over λ = 2^−j, j = 0..4.
    let h: f64 = 1.0 / 16.0;
    let lambdas: Vec<f64> = (0..=5).map(|j| 0.5f64.powi(j)).collect();
    let dt = lambdas.last().unwrap() * h * h / 8.0;
    let k = ConvexIntegrand::abs_quadratic(1);
    let grid = Grid::line(16, 1.0).unwrap();
    let mode = Field::sine_mode(grid, [1, 0], 0.3);
    let base = config(16, 1.0, dt, 0.05, 12);
    let coef = DiffusionCoefficient::additive_from_modes(grid, vec![mode]);
    let u0 = Field::sine_mode(grid, [1, 0], 1.2);
    let rows = lambda_sweep(&Sequential, &base, &k, &coef, &|_| u0.clone(), &lambdas).unwrap();
    let diffs: Vec<f64> = rows[..5].iter().map(|r| r.diff_to_next.unwrap()).collect();
    for w in diffs.windows(2) {
        assert!(w[1] < w[0], "not strictly decreasing: {diffs:?}");
    }
}
