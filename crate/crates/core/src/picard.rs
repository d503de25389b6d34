//! Multiplicative-noise solver.
//!
//! The map Γ(u₀, v) solves the additive problem with the coefficient frozen
//! along v, i.e. G(t) := B(t, v(t)). With Wiener increments replayed from
//! the counter generator, v ↦ Γ(u₀, v) is a deterministic map of the
//! trajectory set, and in the exponentially weighted norm
//! ‖w‖²_α = Σ_m Δt e^{−αt_m} E‖w_m‖² it contracts with factor ≤ L_B/√α:
//! per step the monotone drift dissipates, the implicit solve is
//! nonexpansive, and the frozen-noise difference adds at most
//! Δt L_B² E‖δv_m‖², which the weight sums to L_B²/α.

use alloc::vec::Vec;

use crate::convex::ConvexIntegrand;
use crate::error::{Error, Result};
use crate::evolution::{
    apriori_estimate, solve_path, NoiseInput, PathSolution, SolutionBundle, SolverConfig,
};
use crate::exec::PathExecutor;
use crate::grid::Field;
use crate::math::{self, KahanSum};
use crate::noise::DiffusionCoefficient;

/// Time norm carried by a [`WeightedNorm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    /// L²([0,T], e^{−αt}dt) of L²_{ω,x} — the contraction norm.
    SquareIntegrable,
    /// sup_t e^{−αt/2} of the L²_{ω,x} norm.
    Supremum,
}

/// Exponentially weighted trajectory norm. α = 0 recovers the unweighted
/// norm; any two rates are equivalent with constants e^{±αT/2}.
#[derive(Clone, Copy, Debug)]
pub struct WeightedNorm {
    pub alpha: f64,
    pub kind: NormKind,
}

impl WeightedNorm {
    pub fn square_integrable(alpha: f64) -> Self {
        Self {
            alpha,
            kind: NormKind::SquareIntegrable,
        }
    }

    pub fn supremum(alpha: f64) -> Self {
        Self {
            alpha,
            kind: NormKind::Supremum,
        }
    }
}

/// The u-trajectories of M coupled paths on a common time grid.
#[derive(Clone, Debug)]
pub struct TrajectorySet {
    dt: f64,
    paths: Vec<Vec<Field>>,
}

impl TrajectorySet {
    pub fn new(dt: f64, paths: Vec<Vec<Field>>) -> Self {
        Self { dt, paths }
    }

    /// Constant-in-time trajectory v(t) ≡ v₀ per path.
    pub fn constant(initials: &[Field], steps: usize, dt: f64) -> Self {
        let paths = initials
            .iter()
            .map(|u0| (0..=steps).map(|_| u0.clone()).collect())
            .collect();
        Self { dt, paths }
    }

    /// Extract the trajectories stored in a solution bundle.
    pub fn from_bundle(bundle: &SolutionBundle) -> Result<Self> {
        let mut paths = Vec::with_capacity(bundle.paths.len());
        for p in &bundle.paths {
            match &p.trajectory {
                Some(t) => paths.push(t.clone()),
                None => {
                    return Err(Error::ShapeMismatch {
                        context: "bundle carries no trajectories",
                    })
                }
            }
        }
        Ok(Self {
            dt: bundle.config.dt,
            paths,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn steps(&self) -> usize {
        self.paths.first().map_or(0, |p| p.len() - 1)
    }

    pub fn path(&self, i: usize) -> &[Field] {
        &self.paths[i]
    }

    fn conforms(&self, other: &TrajectorySet) -> bool {
        self.dt == other.dt
            && self.paths.len() == other.paths.len()
            && self
                .paths
                .iter()
                .zip(&other.paths)
                .all(|(a, b)| a.len() == b.len())
    }
}

/// Weighted distance between two coupled trajectory sets. The expectation
/// is the Monte Carlo mean over the common path set; the reduction order is
/// fixed (paths then time), with compensated sums.
pub fn weighted_distance(
    a: &TrajectorySet,
    b: &TrajectorySet,
    norm: &WeightedNorm,
) -> Result<f64> {
    if !a.conforms(b) {
        return Err(Error::ShapeMismatch {
            context: "weighted_distance operands",
        });
    }
    if a.paths.is_empty() {
        return Err(Error::EmptyBundle);
    }
    let m = a.paths.len() as f64;
    let steps = a.steps();
    let dt = a.dt;
    // Mean-square difference per time index.
    let mut msd = Vec::with_capacity(steps + 1);
    for t_idx in 0..=steps {
        let mut acc = KahanSum::new();
        for (pa, pb) in a.paths.iter().zip(&b.paths) {
            acc.add(pa[t_idx].sub(&pb[t_idx]).l2_norm_sq());
        }
        msd.push(acc.value() / m);
    }
    match norm.kind {
        NormKind::SquareIntegrable => {
            let mut acc = KahanSum::new();
            for (j, v) in msd[..steps].iter().enumerate() {
                acc.add(dt * math::exp(-norm.alpha * j as f64 * dt) * v);
            }
            Ok(math::sqrt(acc.value().max(0.0)))
        }
        NormKind::Supremum => {
            let mut best = 0.0_f64;
            for (j, v) in msd.iter().enumerate() {
                let w = math::exp(-norm.alpha * j as f64 * dt) * v;
                if w > best {
                    best = w;
                }
            }
            Ok(math::sqrt(best))
        }
    }
}

fn gamma_pass<E: PathExecutor>(
    exec: &E,
    cfg: &SolverConfig,
    k: &ConvexIntegrand,
    coef: &DiffusionCoefficient,
    initials: &[Field],
    v: &TrajectorySet,
) -> Result<Vec<PathSolution>> {
    let results = exec.run(initials.len(), &|p| {
        solve_path(
            cfg,
            k,
            coef,
            &initials[p],
            p,
            NoiseInput::Frozen(v.path(p)),
            true,
        )
    });
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r?);
    }
    Ok(out)
}

/// One application of the map Γ(u₀, v): solve the additive problem with the
/// coefficient frozen along v, under replayed Wiener increments.
pub fn gamma_map<E: PathExecutor>(
    exec: &E,
    cfg: &SolverConfig,
    k: &ConvexIntegrand,
    coef: &DiffusionCoefficient,
    initials: &[Field],
    v: &TrajectorySet,
) -> Result<TrajectorySet> {
    let sols = gamma_pass(exec, cfg, k, coef, initials, v)?;
    Ok(TrajectorySet::new(
        cfg.dt,
        sols.into_iter().map(|s| s.trajectory.unwrap()).collect(),
    ))
}

/// How to pick the weight rate α.
#[derive(Clone, Copy, Debug)]
pub enum AlphaChoice {
    Fixed(f64),
    /// α = max(1, 16 L_B² Ñ²) with Ñ the largest a-priori ratio measured on
    /// the first (frozen-at-v⁰) pass, floored at 1. The contraction factor
    /// then satisfies q ≤ L_B/√α ≤ 1/4.
    Calibrated,
}

/// First Picard iterate v⁰.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PicardGuess {
    /// v⁰(t) ≡ u₀ (constant in time, adapted).
    InitialDatum,
    /// v⁰ ≡ 0 — used by the uniqueness cross-check.
    Zero,
}

#[derive(Clone, Debug)]
pub struct PicardReport {
    pub alpha: f64,
    /// Certified Lipschitz constant of the coefficient.
    pub lipschitz: f64,
    /// Measured calibration constant Ñ.
    pub calibration: f64,
    /// Predicted contraction bound L_B/√α.
    pub predicted_ratio: f64,
    /// d_n = dist(v^{n+1}, v^n) in the L²(α) norm, n = 0, 1, …
    pub distances: Vec<f64>,
    /// d_n / d_{n−1}, reported from the second distance onward.
    pub ratios: Vec<f64>,
    /// Γ applications until the stopping rule fired.
    pub iterations: usize,
    /// dist(Γu*, u*) measured by the final consistency pass.
    pub fixed_point_residual: f64,
    pub converged: bool,
}

#[derive(Debug)]
pub struct MultiplicativeSolution {
    pub bundle: SolutionBundle,
    pub report: PicardReport,
}

/// Solve du − div γ(∇u) dt ∋ B(t,u) dW by Picard iteration of Γ in the
/// weighted norm. Stops when dist(vⁿ⁺¹, vⁿ) ≤ tol·(1 + dist(v¹, v⁰)).
pub fn solve_multiplicative<E: PathExecutor>(
    exec: &E,
    cfg: &SolverConfig,
    k: &ConvexIntegrand,
    coef: &DiffusionCoefficient,
    initials: &[Field],
    alpha: AlphaChoice,
    guess: PicardGuess,
) -> Result<MultiplicativeSolution> {
    cfg.validate()?;
    if initials.len() != cfg.paths {
        return Err(Error::ShapeMismatch {
            context: "initial data count",
        });
    }
    let steps = cfg.steps();
    let v0 = match guess {
        PicardGuess::InitialDatum => TrajectorySet::constant(initials, steps, cfg.dt),
        PicardGuess::Zero => {
            let zeros: Vec<Field> = initials.iter().map(|_| Field::zeros(cfg.grid)).collect();
            TrajectorySet::constant(&zeros, steps, cfg.dt)
        }
    };

    // First pass doubles as the α-calibration run.
    let first = gamma_pass(exec, cfg, k, coef, initials, &v0)?;
    let calib_bundle = SolutionBundle {
        config: *cfg,
        paths: first,
    };
    let apriori = apriori_estimate(&calib_bundle)?;
    let calibration = apriori
        .ratios
        .iter()
        .fold(1.0_f64, |acc, r| acc.max(*r));
    let l_b = coef.lipschitz_bound();
    let alpha = match alpha {
        AlphaChoice::Fixed(a) => a,
        AlphaChoice::Calibrated => (16.0 * l_b * l_b * calibration * calibration).max(1.0),
    };
    let norm = WeightedNorm::square_integrable(alpha);
    let mut v_prev = TrajectorySet::from_bundle(&calib_bundle)?;
    drop(calib_bundle);

    let d0 = weighted_distance(&v_prev, &v0, &norm)?;
    drop(v0);
    let stop = cfg.tol.picard * (1.0 + d0);
    let mut distances = alloc::vec![d0];
    let mut ratios = Vec::new();
    let mut iterations = 1;
    let mut converged = false;
    while iterations < cfg.picard_max_iter {
        let v_next = gamma_map(exec, cfg, k, coef, initials, &v_prev)?;
        iterations += 1;
        let d = weighted_distance(&v_next, &v_prev, &norm)?;
        let d_prev = *distances.last().unwrap();
        distances.push(d);
        if d_prev > 0.0 {
            ratios.push(d / d_prev);
        }
        v_prev = v_next;
        if d <= stop {
            converged = true;
            break;
        }
        let expanding = ratios.len() >= 3 && ratios[ratios.len() - 3..].iter().all(|r| *r >= 1.0);
        if expanding {
            return Err(Error::NonContraction { distances, ratios });
        }
    }
    if !converged {
        return Err(Error::MaxIterations {
            iterations,
            distance: *distances.last().unwrap(),
        });
    }

    // Consistency pass: freeze the coefficient at the converged iterate and
    // solve once more; this yields the reported (u, η) bundle and measures
    // how far Γ moves the fixed point.
    let final_paths = gamma_pass(exec, cfg, k, coef, initials, &v_prev)?;
    let bundle = SolutionBundle {
        config: *cfg,
        paths: final_paths,
    };
    let v_final = TrajectorySet::from_bundle(&bundle)?;
    let fixed_point_residual = weighted_distance(&v_final, &v_prev, &norm)?;
    Ok(MultiplicativeSolution {
        bundle,
        report: PicardReport {
            alpha,
            lipschitz: l_b,
            calibration,
            predicted_ratio: if alpha > 0.0 { l_b / math::sqrt(alpha) } else { f64::INFINITY },
            distances,
            ratios,
            iterations,
            fixed_point_residual,
            converged,
        },
    })
}

/// Continuous dependence on the initial datum under common random numbers.
#[derive(Clone, Copy, Debug)]
pub struct DependenceReport {
    pub alpha: f64,
    /// ‖u₀₁ − u₀₂‖_{L²_{ω,x}}
    pub rhs: f64,
    /// ‖u₁ − u₂‖ in the α-weighted sup norm.
    pub lhs_sup_weighted: f64,
    /// √α · ‖u₁ − u₂‖ in the α-weighted L² norm.
    pub lhs_l2_weighted: f64,
    /// Unweighted sup-in-time distance.
    pub lhs_sup: f64,
    /// Measured Lipschitz constant lhs_sup / rhs (0 when rhs = 0).
    pub lipschitz: f64,
}

/// Solve the multiplicative problem from two initial data sets with the same
/// seed and grid, and compare the solutions in the norms of the continuous
/// dependence estimate.
#[allow(clippy::too_many_arguments)]
pub fn continuous_dependence_test<E: PathExecutor>(
    exec: &E,
    cfg: &SolverConfig,
    k: &ConvexIntegrand,
    coef: &DiffusionCoefficient,
    initials1: &[Field],
    initials2: &[Field],
    alpha: AlphaChoice,
) -> Result<(DependenceReport, MultiplicativeSolution, MultiplicativeSolution)> {
    let sol1 = solve_multiplicative(exec, cfg, k, coef, initials1, alpha, PicardGuess::InitialDatum)?;
    let sol2 = solve_multiplicative(
        exec,
        cfg,
        k,
        coef,
        initials2,
        AlphaChoice::Fixed(sol1.report.alpha),
        PicardGuess::InitialDatum,
    )?;
    let t1 = TrajectorySet::from_bundle(&sol1.bundle)?;
    let t2 = TrajectorySet::from_bundle(&sol2.bundle)?;
    let a = sol1.report.alpha;
    let mut rhs_acc = KahanSum::new();
    for (u1, u2) in initials1.iter().zip(initials2) {
        rhs_acc.add(u1.sub(u2).l2_norm_sq());
    }
    let rhs = math::sqrt(rhs_acc.value() / initials1.len() as f64);
    let lhs_sup_weighted = weighted_distance(&t1, &t2, &WeightedNorm::supremum(a))?;
    let lhs_l2_weighted =
        math::sqrt(a) * weighted_distance(&t1, &t2, &WeightedNorm::square_integrable(a))?;
    let lhs_sup = weighted_distance(&t1, &t2, &WeightedNorm::supremum(0.0))?;
    Ok((
        DependenceReport {
            alpha: a,
            rhs,
            lhs_sup_weighted,
            lhs_l2_weighted,
            lhs_sup,
            lipschitz: if rhs > 0.0 { lhs_sup / rhs } else { 0.0 },
        },
        sol1,
        sol2,
    ))
}
