//! Time stepping for the regularized equation
//!
//! ```text
//! du_λ − div γ_λ(∇u_λ) dt − λ Δu_λ dt = G(t) dW(t)
//! ```
//!
//! with the monotone term explicit (γ_λ is 1/λ-Lipschitz, so the guard
//! Δt ≤ λh²/(4n) keeps it stable) and the stiff viscosity implicit:
//!
//! ```text
//! u⁺ = (I − λΔt Δ_h)⁻¹ ( u + Δt div γ_λ(∇u) + ΔW_G ).
//! ```
//!
//! Itô convention throughout: coefficients are evaluated at the left
//! endpoint, and time quadrature in all diagnostics is the left-endpoint
//! rectangle rule so the discrete energy identities close to O(Δt).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::convex::ConvexIntegrand;
use crate::error::{Error, Result};
use crate::exec::PathExecutor;
use crate::grid::{Field, Grid, VectorField, ViscositySolver};
use crate::math::{self, KahanSum};
use crate::noise::DiffusionCoefficient;
use crate::rng;

/// Inner-solver tolerances, pinned once per run.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    /// Resolvent (prox) accuracy, relative.
    pub prox: f64,
    /// Linear-solve relative residual.
    pub linear: f64,
    /// Picard relative stopping tolerance.
    pub picard: f64,
    /// Absolute tolerance of the duality/selection identity checks.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            prox: 1e-12,
            linear: 1e-10,
            picard: 1e-8,
            identity: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub grid: Grid,
    /// Yosida regularization parameter λ > 0.
    pub lambda: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Exponential weight rate of the Picard norms (0 = unweighted).
    pub alpha: f64,
    /// Path count M for Monte Carlo expectations.
    pub paths: usize,
    pub seed: u64,
    /// Keep (u, η) snapshots every this many steps; 0 keeps only the
    /// terminal state. Scalar diagnostics are always kept at every step.
    pub store_every: usize,
    /// Run even when Δt violates the stability guard (recorded by callers).
    pub override_guard: bool,
    pub tol: Tolerances,
    pub picard_max_iter: usize,
}

impl SolverConfig {
    pub fn new(grid: Grid, lambda: f64, dt: f64, t_final: f64) -> Self {
        Self {
            grid,
            lambda,
            dt,
            t_final,
            alpha: 0.0,
            paths: 1,
            seed: 0,
            store_every: 0,
            override_guard: false,
            tol: Tolerances::default(),
            picard_max_iter: 50,
        }
    }

    /// Number of Euler steps ⌈T/Δt⌉.
    pub fn steps(&self) -> usize {
        math::ceil(self.t_final / self.dt - 1e-9) as usize
    }

    /// Explicit-drift stability bound λ h² / (4n).
    pub fn guard_bound(&self) -> f64 {
        let h = self.grid.min_spacing();
        self.lambda * h * h / (4.0 * self.grid.dim() as f64)
    }

    pub fn guard_satisfied(&self) -> bool {
        self.dt <= self.guard_bound() * (1.0 + 1e-12)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig {
                field: "lambda",
                message: format!("must be a positive real, got {}", self.lambda),
            });
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig {
                field: "dt",
                message: format!("must be a positive real, got {}", self.dt),
            });
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidConfig {
                field: "t_final",
                message: format!("must be a positive real, got {}", self.t_final),
            });
        }
        if self.alpha < 0.0 || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig {
                field: "alpha",
                message: format!("must be a nonnegative real, got {}", self.alpha),
            });
        }
        if self.paths == 0 {
            return Err(Error::InvalidConfig {
                field: "paths",
                message: "must be at least 1".into(),
            });
        }
        if !self.override_guard && !self.guard_satisfied() {
            return Err(Error::GuardViolation {
                dt: self.dt,
                bound: self.guard_bound(),
            });
        }
        Ok(())
    }
}

/// Scalar diagnostics recorded at every step m (state at t_m, noise and
/// selection quantities evaluated at the left endpoint).
#[derive(Clone, Copy, Debug, Default)]
pub struct StepDiagnostics {
    pub t: f64,
    /// ‖u‖²_{L²}
    pub u_l2_sq: f64,
    /// ∫ η·∇u (nonnegative: γ_λ is monotone with γ_λ(0) = 0)
    pub eta_dot_grad: f64,
    /// ‖∇u‖²_{L²}
    pub grad_l2_sq: f64,
    /// ‖∇u‖_{L¹}
    pub grad_l1: f64,
    /// ‖η‖_{L¹}
    pub eta_l1: f64,
    /// ‖B(t,·)‖²_HS at the noise-input state
    pub hs_sq: f64,
    /// ∫ (k(∇u) + k*(η) − η·∇u) — Fenchel gap at ∇u itself
    pub fenchel_gap: f64,
    /// ∫ k(∇u)
    pub k_grad: f64,
    /// ∫ k*(η)
    pub k_star_eta: f64,
    /// ∫ k((I+λγ)⁻¹∇u) — the uniform-integrability statistic
    pub k_resolvent: f64,
    /// max over sites of |k(J) + k*(η) − η·J| — selection consistency
    pub selection_gap_max: f64,
    /// ⟨u, φ⟩ against the first sine mode (weak-continuity proxy)
    pub u_dot_test: f64,
}

/// Stored snapshot: the pair (u_m, η_m) with η_m = γ_λ(∇u_m).
#[derive(Clone, Debug)]
pub struct StoredState {
    pub step: usize,
    pub u: Field,
    pub eta: VectorField,
}

/// One path of the solution: scalar diagnostics at every step, snapshots
/// per the store policy, and optionally the full u-trajectory (needed by
/// the fixed-point driver).
#[derive(Clone, Debug)]
pub struct PathSolution {
    pub path: usize,
    pub diag: Vec<StepDiagnostics>,
    pub stored: Vec<StoredState>,
    pub trajectory: Option<Vec<Field>>,
    pub terminal: Field,
}

/// Solution over M paths plus the configuration that produced it.
#[derive(Clone, Debug)]
pub struct SolutionBundle {
    pub config: SolverConfig,
    pub paths: Vec<PathSolution>,
}

impl SolutionBundle {
    pub fn steps(&self) -> usize {
        self.config.steps()
    }
}

/// What the diffusion coefficient sees at each step: the evolving state
/// itself, or a frozen exogenous trajectory (the map Γ of the fixed-point
/// construction).
#[derive(Clone, Copy)]
pub enum NoiseInput<'a> {
    SelfState,
    Frozen(&'a [Field]),
}

struct Workspace {
    grad: VectorField,
    eta: VectorField,
    resolvent: VectorField,
    div_eta: Field,
    noise: Field,
    rhs: Field,
    dw: Vec<f64>,
    solver: ViscositySolver,
    test_field: Field,
}

impl Workspace {
    fn new(cfg: &SolverConfig, modes: usize) -> Self {
        let g = cfg.grid;
        Self {
            grad: VectorField::zeros(g),
            eta: VectorField::zeros(g),
            resolvent: VectorField::zeros(g),
            div_eta: Field::zeros(g),
            noise: Field::zeros(g),
            rhs: Field::zeros(g),
            dw: vec![0.0; modes],
            solver: ViscositySolver::new(g, cfg.lambda * cfg.dt, 1e-10),
            test_field: Field::sine_mode(g, [1, 1], 1.0),
        }
    }
}

/// Apply the Yosida selection sitewise: η = γ_λ(∇u), J = (I+λγ)⁻¹∇u.
fn yosida_fields(
    k: &ConvexIntegrand,
    lambda: f64,
    grad: &VectorField,
    eta: &mut VectorField,
    resolvent: &mut VectorField,
) -> Result<()> {
    let d = grad.grid().dim();
    let mut e = [0.0; 2];
    let mut j = [0.0; 2];
    for idx in 0..grad.site_count() {
        let x = grad.site(idx);
        k.yosida_into(lambda, &x[..d], &mut e[..d], &mut j[..d])?;
        eta.set_site(idx, e);
        resolvent.set_site(idx, j);
    }
    Ok(())
}

/// Compute the per-step scalar diagnostics for the state (u, ∇u, η, J).
fn diagnostics_row(
    k: &ConvexIntegrand,
    lambda: f64,
    t: f64,
    u: &Field,
    grad: &VectorField,
    eta: &VectorField,
    resolvent: &VectorField,
    hs_sq: f64,
    test_field: &Field,
) -> Result<StepDiagnostics> {
    let g = u.grid();
    let d = g.dim();
    let vol = g.cell_volume();
    let closed = k.has_closed_conjugate();
    let mut dot_eg = KahanSum::new();
    let mut grad_sq = KahanSum::new();
    let mut grad_l1 = KahanSum::new();
    let mut eta_l1 = KahanSum::new();
    let mut k_grad = KahanSum::new();
    let mut k_star = KahanSum::new();
    let mut k_res = KahanSum::new();
    let mut sel_gap_max = 0.0_f64;
    for idx in 0..grad.site_count() {
        let x = grad.site(idx);
        let e = eta.site(idx);
        let j = resolvent.site(idx);
        let ex = e[0] * x[0] + e[1] * x[1];
        let ej = e[0] * j[0] + e[1] * j[1];
        let e_sq = e[0] * e[0] + e[1] * e[1];
        dot_eg.add(ex);
        grad_sq.add(x[0] * x[0] + x[1] * x[1]);
        grad_l1.add(x[0].abs() + x[1].abs());
        eta_l1.add(e[0].abs() + e[1].abs());
        k_grad.add(k.eval(&x[..d]));
        let kj = k.eval(&j[..d]);
        k_res.add(kj);
        // Without a closed conjugate, k*(η) for the Yosida selection is
        // recovered from the duality identity instead of the slow oracle.
        let ks = if closed {
            k.conjugate(&e[..d])?
        } else {
            ex - lambda * e_sq - kj
        };
        k_star.add(ks);
        let gap_at_res = kj + ks - ej;
        if gap_at_res.abs() > sel_gap_max {
            sel_gap_max = gap_at_res.abs();
        }
    }
    let k_grad = vol * k_grad.value();
    let k_star = vol * k_star.value();
    let eta_dot_grad = vol * dot_eg.value();
    Ok(StepDiagnostics {
        t,
        u_l2_sq: u.l2_norm_sq(),
        eta_dot_grad,
        grad_l2_sq: vol * grad_sq.value(),
        grad_l1: vol * grad_l1.value(),
        eta_l1: vol * eta_l1.value(),
        hs_sq,
        fenchel_gap: k_grad + k_star - eta_dot_grad,
        k_grad,
        k_star_eta: k_star,
        k_resolvent: vol * k_res.value(),
        selection_gap_max: sel_gap_max,
        u_dot_test: u.dot(test_field),
    })
}

/// One semi-implicit update from state `u` with an already-assembled noise
/// increment field.
pub fn step_regularized(
    u: &Field,
    cfg: &SolverConfig,
    k: &ConvexIntegrand,
    noise_increment: &Field,
) -> Result<Field> {
    cfg.validate()?;
    let mut ws = Workspace::new(cfg, 0);
    let mut out = Field::zeros(cfg.grid);
    advance(u, cfg, k, noise_increment, &mut ws, &mut out, 0, 0)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn advance(
    u: &Field,
    cfg: &SolverConfig,
    k: &ConvexIntegrand,
    noise_increment: &Field,
    ws: &mut Workspace,
    out: &mut Field,
    path: usize,
    step: usize,
) -> Result<()> {
    u.gradient_into(&mut ws.grad);
    yosida_fields(k, cfg.lambda, &ws.grad, &mut ws.eta, &mut ws.resolvent)?;
    ws.eta.divergence_into(&mut ws.div_eta);
    ws.rhs.copy_from(u);
    ws.rhs.add_scaled(cfg.dt, &ws.div_eta);
    ws.rhs.add_scaled(1.0, noise_increment);
    if !ws.rhs.is_finite() {
        return Err(Error::BlowUp { path, step });
    }
    ws.solver.solve_into(&ws.rhs, out)?;
    if !out.is_finite() {
        return Err(Error::BlowUp { path, step });
    }
    Ok(())
}

/// Solve one path of the additive-noise problem (or of the frozen-input
/// map Γ when `noise_input` is [`NoiseInput::Frozen`]). Replayable from
/// `(seed, path)`.
pub fn solve_path(
    cfg: &SolverConfig,
    k: &ConvexIntegrand,
    coef: &DiffusionCoefficient,
    u0: &Field,
    path: usize,
    noise_input: NoiseInput<'_>,
    want_trajectory: bool,
) -> Result<PathSolution> {
    cfg.validate()?;
    if u0.grid() != cfg.grid {
        return Err(Error::ShapeMismatch {
            context: "solve_path initial datum",
        });
    }
    if !u0.is_finite() {
        return Err(Error::BlowUp { path, step: 0 });
    }
    let steps = cfg.steps();
    if let NoiseInput::Frozen(v) = noise_input {
        if v.len() != steps + 1 {
            return Err(Error::ShapeMismatch {
                context: "frozen trajectory length",
            });
        }
    }
    let modes = coef.mode_count();
    let driver = crate::noise::WienerDriver::new(cfg.seed, modes, cfg.dt);
    let mut ws = Workspace::new(cfg, modes);
    let mut diag = Vec::with_capacity(steps + 1);
    let mut stored = Vec::new();
    let mut trajectory = if want_trajectory {
        Some(Vec::with_capacity(steps + 1))
    } else {
        None
    };
    let mut u = u0.clone();
    let mut u_next = Field::zeros(cfg.grid);
    for m in 0..=steps {
        let t = m as f64 * cfg.dt;
        u.gradient_into(&mut ws.grad);
        yosida_fields(k, cfg.lambda, &ws.grad, &mut ws.eta, &mut ws.resolvent)?;
        let noise_state = match noise_input {
            NoiseInput::SelfState => &u,
            NoiseInput::Frozen(v) => &v[m],
        };
        let hs_sq = coef.hs_norm_sq(t, noise_state);
        diag.push(diagnostics_row(
            k,
            cfg.lambda,
            t,
            &u,
            &ws.grad,
            &ws.eta,
            &ws.resolvent,
            hs_sq,
            &ws.test_field,
        )?);
        let keep = (cfg.store_every > 0 && m % cfg.store_every == 0) || m == steps;
        if keep {
            stored.push(StoredState {
                step: m,
                u: u.clone(),
                eta: ws.eta.clone(),
            });
        }
        if let Some(traj) = trajectory.as_mut() {
            traj.push(u.clone());
        }
        if m == steps {
            break;
        }
        // Drift: Δt div η, then the Itô increment, then the implicit solve.
        ws.eta.divergence_into(&mut ws.div_eta);
        ws.rhs.copy_from(&u);
        ws.rhs.add_scaled(cfg.dt, &ws.div_eta);
        if modes > 0 {
            driver.increment_into(path, m, &mut ws.dw);
            coef.apply_into(t, noise_state, &ws.dw, &mut ws.noise);
            ws.rhs.add_scaled(1.0, &ws.noise);
        }
        if !ws.rhs.is_finite() {
            return Err(Error::BlowUp { path, step: m });
        }
        ws.solver.solve_into(&ws.rhs, &mut u_next)?;
        if !u_next.is_finite() {
            return Err(Error::BlowUp { path, step: m });
        }
        core::mem::swap(&mut u, &mut u_next);
    }
    Ok(PathSolution {
        path,
        diag,
        stored,
        trajectory,
        terminal: u,
    })
}

/// Solve the additive-noise problem over `cfg.paths` independent paths.
pub fn solve_additive<E: PathExecutor>(
    exec: &E,
    cfg: &SolverConfig,
    k: &ConvexIntegrand,
    coef: &DiffusionCoefficient,
    initial: &(dyn Fn(usize) -> Field + Sync),
) -> Result<SolutionBundle> {
    if !coef.is_additive() {
        return Err(Error::InvalidConfig {
            field: "coefficient",
            message: "solve_additive requires an additive coefficient".into(),
        });
    }
    cfg.validate()?;
    let results = exec.run(cfg.paths, &|p| {
        solve_path(cfg, k, coef, &initial(p), p, NoiseInput::SelfState, false)
    });
    let mut paths = Vec::with_capacity(results.len());
    for r in results {
        paths.push(r?);
    }
    Ok(SolutionBundle { config: *cfg, paths })
}

/// Deterministic per-path initial data from the master seed: a fixed field
/// plus an optional per-path uniform amplitude factor in [lo, hi].
pub struct InitialData {
    base: Field,
    amplitude_range: Option<(f64, f64)>,
    seed: u64,
}

impl InitialData {
    pub fn deterministic(base: Field) -> Self {
        Self {
            base,
            amplitude_range: None,
            seed: 0,
        }
    }

    /// Per-path random amplitude: base · U with U uniform on [lo, hi],
    /// keyed by (seed, path) — an F₀-measurable random initial datum.
    pub fn random_amplitude(base: Field, lo: f64, hi: f64, seed: u64) -> Self {
        Self {
            base,
            amplitude_range: Some((lo, hi)),
            seed,
        }
    }

    pub fn field(&self, path: usize) -> Field {
        match self.amplitude_range {
            None => self.base.clone(),
            Some((lo, hi)) => {
                let bits = rng::keyed_u64(self.seed, path as u64, u64::MAX, 0, 2);
                let u = ((bits >> 11) as f64) * (1.0 / 9_007_199_254_740_992.0);
                let mut f = self.base.clone();
                f.scale(lo + (hi - lo) * u);
                f
            }
        }
    }
}

/// Monte Carlo estimates of the a priori energy estimate: each left-hand
/// term and its ratio against ‖u₀‖ + ‖G‖.
#[derive(Clone, Copy, Debug)]
pub struct AprioriReport {
    /// ‖u_λ‖_{L²_ω C_t L²_x}
    pub sup_term: f64,
    /// √λ ‖∇u_λ‖_{L²_{t,ω,x}}
    pub visc_term: f64,
    /// ‖γ_λ(∇u_λ)·∇u_λ‖_{L¹_{t,ω,x}}
    pub flux_term: f64,
    /// ‖u₀‖_{L²_{ω,x}} + ‖G‖_{L²_{t,ω} HS}
    pub rhs: f64,
    /// Each term divided by `rhs` (0 when rhs = 0).
    pub ratios: [f64; 3],
    /// The full estimate: (sup + visc + flux) / rhs — the quantity the
    /// λ-uniform bound is about.
    pub total_ratio: f64,
}

pub fn apriori_estimate(bundle: &SolutionBundle) -> Result<AprioriReport> {
    if bundle.paths.is_empty() {
        return Err(Error::EmptyBundle);
    }
    let dt = bundle.config.dt;
    let lambda = bundle.config.lambda;
    let n = bundle.steps();
    let m = bundle.paths.len() as f64;
    let mut sup_acc = 0.0;
    let mut visc_acc = 0.0;
    let mut flux_acc = 0.0;
    let mut u0_acc = 0.0;
    let mut g_acc = 0.0;
    for p in &bundle.paths {
        let sup = p.diag.iter().fold(0.0_f64, |s, d| s.max(d.u_l2_sq));
        sup_acc += sup;
        let mut visc = KahanSum::new();
        let mut flux = KahanSum::new();
        let mut gg = KahanSum::new();
        for d in &p.diag[..n] {
            visc.add(d.grad_l2_sq);
            flux.add(d.eta_dot_grad);
            gg.add(d.hs_sq);
        }
        visc_acc += dt * visc.value();
        flux_acc += dt * flux.value();
        g_acc += dt * gg.value();
        u0_acc += p.diag[0].u_l2_sq;
    }
    let sup_term = math::sqrt(sup_acc / m);
    let visc_term = math::sqrt(lambda * visc_acc / m);
    let flux_term = flux_acc / m;
    let rhs = math::sqrt(u0_acc / m) + math::sqrt(g_acc / m);
    let ratio = |lhs: f64| if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(AprioriReport {
        sup_term,
        visc_term,
        flux_term,
        rhs,
        ratios: [ratio(sup_term), ratio(visc_term), ratio(flux_term)],
        total_ratio: ratio(sup_term + visc_term + flux_term),
    })
}

/// Monte Carlo energy residual at a grid-aligned time t:
///
/// ```text
/// e^{-2αt} E‖u(t)‖² + E Σ_{j<m} Δt e^{-2αt_j} (2∫η·∇u + 2λ‖∇u‖² + 2α‖u‖²)
///   − E‖u₀‖² − E Σ_{j<m} Δt e^{-2αt_j} ‖G‖²_HS
/// ```
///
/// The viscosity term belongs to the regularized flow's Itô identity; with
/// it the deterministic residual is O(Δt). Returns (mean, standard error);
/// the standard error is `None` for a single path.
pub fn energy_residual(
    bundle: &SolutionBundle,
    t: f64,
    alpha: f64,
) -> Result<(f64, Option<f64>)> {
    if bundle.paths.is_empty() {
        return Err(Error::EmptyBundle);
    }
    let dt = bundle.config.dt;
    let n = bundle.steps();
    let idx_f = t / dt;
    let m = math::round(idx_f) as usize;
    if m > n || !(t >= 0.0) {
        return Err(Error::TimeOutOfRange {
            t,
            horizon: bundle.config.t_final,
        });
    }
    if (idx_f - m as f64).abs() > 1e-6 {
        return Err(Error::TimeOutOfRange {
            t,
            horizon: bundle.config.t_final,
        });
    }
    let lambda = bundle.config.lambda;
    let residuals: Vec<f64> = bundle
        .paths
        .iter()
        .map(|p| {
            let mut acc = KahanSum::new();
            for d in &p.diag[..m] {
                let w = math::exp(-2.0 * alpha * d.t);
                acc.add(dt * w * (2.0 * d.eta_dot_grad + 2.0 * lambda * d.grad_l2_sq));
                acc.add(dt * w * (2.0 * alpha * d.u_l2_sq - d.hs_sq));
            }
            math::exp(-2.0 * alpha * t) * p.diag[m].u_l2_sq - p.diag[0].u_l2_sq + acc.value()
        })
        .collect();
    let (mean, se) = math::mean_se(&residuals);
    Ok((mean, se))
}
