//! Convex integrands k: ℝⁿ → ℝ₊ and their derived objects: the monotone
//! graph γ = ∂k, the resolvent (I + λγ)⁻¹ (a proximal map), the Yosida
//! approximation γ_λ, and the convex conjugate k*.
//!
//! γ is never evaluated directly — it may be multivalued. Everything goes
//! through the resolvent, the Yosida map, and the Fenchel gap
//! k(y) + k*(r) − r·y, which vanishes exactly when r ∈ γ(y).

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Iteration budget for the inner prox solvers.
const PROX_MAX_ITER: usize = 100;
/// Target accuracy of the resolvent point, relative to max(1, |x|).
const PROX_TOL: f64 = 1e-13;
/// Legendre search box is abandoned past this radius.
const CONJUGATE_BOX_LIMIT: f64 = 1e12;
/// Coarse Legendre grid resolution per axis.
const CONJUGATE_GRID: usize = 1 << 12;

/// A primal/dual pair. The pair belongs to the graph γ = ∂k exactly when
/// its Fenchel gap vanishes.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphPoint {
    pub y: Vec<f64>,
    pub r: Vec<f64>,
}

impl GraphPoint {
    pub fn new(y: Vec<f64>, r: Vec<f64>) -> Self {
        Self { y, r }
    }

    /// k(y) + k*(r) − r·y; zero (within tolerance) iff r ∈ γ(y).
    pub fn membership_gap(&self, k: &ConvexIntegrand) -> Result<f64> {
        k.fenchel_gap(&self.y, &self.r)
    }
}

/// User-supplied integrand. `eval` is mandatory; the other pieces unlock
/// closed-form paths or better inner solvers when present.
pub struct CustomIntegrand {
    pub eval: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    /// A measurable selection of ∂k, written into the output slice.
    pub gradient: Option<Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>>,
    /// Closed-form resolvent (λ, x) ↦ (I+λ∂k)⁻¹x.
    pub prox: Option<Box<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>>,
    /// Closed-form conjugate.
    pub conjugate: Option<Box<dyn Fn(&[f64]) -> f64 + Send + Sync>>,
    /// Radial profile (g, g′₊) with k(x) = g(|x|); enables the scalar
    /// root-find prox path.
    pub radial: Option<RadialProfile>,
}

/// Radial profile of a rotation-invariant integrand: value, right
/// derivative, and (optionally) second derivative of g.
pub struct RadialProfile {
    pub value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub slope: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub curvature: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
}

enum Form {
    /// k(x) = |x|²/2 — heat-equation sanity case, γ = I.
    Quadratic,
    /// k(x) = |x|^p / p, p > 1; q is the conjugate exponent.
    PowerGrowth { p: f64, q: f64 },
    /// k(x) = |x| + |x|²/2 — γ multivalued at the origin.
    AbsQuadratic,
    /// k(x) = |x|²/2 + max(x₁, 0) — asymmetric, kink on the hyperplane x₁=0.
    AnisoQuadratic,
    Custom(CustomIntegrand),
}

/// A convex integrand together with everything the solvers need from it.
pub struct ConvexIntegrand {
    name: String,
    dim: usize,
    asymmetry_bound: f64,
    form: Form,
}

impl core::fmt::Debug for ConvexIntegrand {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ConvexIntegrand")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

impl ConvexIntegrand {
    pub fn quadratic(dim: usize) -> Self {
        Self {
            name: "quad".to_string(),
            dim,
            asymmetry_bound: 1.0,
            form: Form::Quadratic,
        }
    }

    pub fn power_growth(dim: usize, p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidConfig {
                field: "integrand",
                message: format!("power-growth exponent must be > 1, got {p}"),
            });
        }
        Ok(Self {
            name: format!("pgrow:{p}"),
            dim,
            asymmetry_bound: 1.0,
            form: Form::PowerGrowth {
                p,
                q: p / (p - 1.0),
            },
        })
    }

    pub fn abs_quadratic(dim: usize) -> Self {
        Self {
            name: "abs_quad".to_string(),
            dim,
            asymmetry_bound: 1.0,
            form: Form::AbsQuadratic,
        }
    }

    pub fn aniso_quadratic(dim: usize) -> Self {
        // k(−x) = k(x) + max(−x₁,0) − max(x₁,0) ≤ k(x) + |x₁| ≤ 2(1 + k(x)).
        Self {
            name: "aniso_quad".to_string(),
            dim,
            asymmetry_bound: 2.0,
            form: Form::AnisoQuadratic,
        }
    }

    pub fn custom(name: &str, dim: usize, parts: CustomIntegrand) -> Self {
        Self {
            name: name.to_string(),
            dim,
            asymmetry_bound: 1.0,
            form: Form::Custom(parts),
        }
    }

    /// Registry lookup: `quad`, `pgrow:<p>`, `abs_quad`, `aniso_quad`.
    pub fn from_name(spec: &str, dim: usize) -> Result<Self> {
        match spec {
            "quad" => Ok(Self::quadratic(dim)),
            "abs_quad" => Ok(Self::abs_quadratic(dim)),
            "aniso_quad" => Ok(Self::aniso_quadratic(dim)),
            _ => {
                if let Some(rest) = spec.strip_prefix("pgrow:") {
                    let p: f64 = rest.parse().map_err(|_| Error::InvalidConfig {
                        field: "integrand",
                        message: format!("cannot parse power-growth exponent from `{spec}`"),
                    })?;
                    Self::power_growth(dim, p)
                } else {
                    Err(Error::InvalidConfig {
                        field: "integrand",
                        message: format!(
                            "unknown integrand `{spec}` (expected quad, pgrow:<p>, abs_quad, aniso_quad)"
                        ),
                    })
                }
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// A constant C with k(−x) ≤ C(1 + k(x)), reported by diagnostics.
    pub fn asymmetry_bound(&self) -> f64 {
        self.asymmetry_bound
    }

    pub fn has_closed_conjugate(&self) -> bool {
        match &self.form {
            Form::Custom(c) => c.conjugate.is_some(),
            _ => true,
        }
    }

    /// k(x).
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.form {
            Form::Quadratic => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            Form::PowerGrowth { p, .. } => math::pow(math::norm2(x), *p) / p,
            Form::AbsQuadratic => {
                let s = math::norm2(x);
                s + 0.5 * s * s
            }
            Form::AnisoQuadratic => {
                0.5 * x.iter().map(|v| v * v).sum::<f64>() + x[0].max(0.0)
            }
            Form::Custom(c) => (c.eval)(x),
        }
    }

    /// Resolvent point (I + λγ)⁻¹ x, written into `out`.
    pub fn prox_into(&self, lambda: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert!(lambda > 0.0);
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        match &self.form {
            Form::Quadratic => {
                let c = 1.0 / (1.0 + lambda);
                for (o, v) in out.iter_mut().zip(x) {
                    *o = c * v;
                }
                Ok(())
            }
            Form::PowerGrowth { p, .. } => {
                let s = math::norm2(x);
                if s == 0.0 {
                    out.fill(0.0);
                    return Ok(());
                }
                let p = *p;
                let rho = solve_radial_prox(
                    &|r| math::pow(r, p - 1.0),
                    Some(&|r| (p - 1.0) * math::pow(r, p - 2.0)),
                    lambda,
                    s,
                )?;
                let c = rho / s;
                for (o, v) in out.iter_mut().zip(x) {
                    *o = c * v;
                }
                Ok(())
            }
            Form::AbsQuadratic => {
                let s = math::norm2(x);
                let rho = if s > lambda {
                    (s - lambda) / (1.0 + lambda)
                } else {
                    0.0
                };
                let c = if s == 0.0 { 0.0 } else { rho / s };
                for (o, v) in out.iter_mut().zip(x) {
                    *o = c * v;
                }
                Ok(())
            }
            Form::AnisoQuadratic => {
                let c = 1.0 / (1.0 + lambda);
                let s = x[0];
                out[0] = if s > lambda {
                    (s - lambda) * c
                } else if s < 0.0 {
                    s * c
                } else {
                    0.0
                };
                for i in 1..x.len() {
                    out[i] = c * x[i];
                }
                Ok(())
            }
            Form::Custom(c) => {
                if let Some(prox) = &c.prox {
                    prox(lambda, x, out);
                    return Ok(());
                }
                if let Some(radial) = &c.radial {
                    let s = math::norm2(x);
                    if s == 0.0 {
                        out.fill(0.0);
                        return Ok(());
                    }
                    let rho = solve_radial_prox(
                        &*radial.slope,
                        radial.curvature.as_ref().map(|b| &**b as &dyn Fn(f64) -> f64),
                        lambda,
                        s,
                    )?;
                    let scale = rho / s;
                    for (o, v) in out.iter_mut().zip(x) {
                        *o = scale * v;
                    }
                    return Ok(());
                }
                prox_descent(c, lambda, x, out)
            }
        }
    }

    /// Resolvent point as a fresh vector.
    pub fn prox(&self, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.prox_into(lambda, x, &mut out)?;
        Ok(out)
    }

    /// Yosida approximation γ_λ(x) = (x − (I+λγ)⁻¹x)/λ and the resolvent
    /// point itself, in one prox evaluation.
    pub fn yosida_into(
        &self,
        lambda: f64,
        x: &[f64],
        eta: &mut [f64],
        resolvent: &mut [f64],
    ) -> Result<()> {
        self.prox_into(lambda, x, resolvent)?;
        for i in 0..x.len() {
            eta[i] = (x[i] - resolvent[i]) / lambda;
        }
        Ok(())
    }

    /// γ_λ(x) as a fresh vector.
    pub fn yosida(&self, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut eta = vec![0.0; self.dim];
        let mut res = vec![0.0; self.dim];
        self.yosida_into(lambda, x, &mut eta, &mut res)?;
        Ok(eta)
    }

    /// k*(r), by closed form when available, otherwise by the adaptive-box
    /// Legendre search.
    pub fn conjugate(&self, r: &[f64]) -> Result<f64> {
        debug_assert_eq!(r.len(), self.dim);
        match &self.form {
            Form::Quadratic => Ok(0.5 * r.iter().map(|v| v * v).sum::<f64>()),
            Form::PowerGrowth { q, .. } => Ok(math::pow(math::norm2(r), *q) / q),
            Form::AbsQuadratic => {
                let t = (math::norm2(r) - 1.0).max(0.0);
                Ok(0.5 * t * t)
            }
            Form::AnisoQuadratic => {
                let mut v = 0.5 * r[1..].iter().map(|v| v * v).sum::<f64>();
                let up = (r[0] - 1.0).max(0.0);
                let dn = r[0].min(0.0);
                v += 0.5 * (up * up + dn * dn);
                Ok(v)
            }
            Form::Custom(c) => {
                if let Some(conj) = &c.conjugate {
                    Ok(conj(r))
                } else {
                    self.legendre_oracle(r)
                }
            }
        }
    }

    /// Brute-force Legendre transform sup_x (x·r − k(x)): the box is doubled
    /// from radius max(10, 10|r|) until the boundary supremum has decreased
    /// twice in a row, then a dense grid plus local refinement locates the
    /// supremum. Always available, independent of the closed forms.
    pub fn legendre_oracle(&self, r: &[f64]) -> Result<f64> {
        let objective = |x: &[f64]| math::dot(x, r) - self.eval(x);
        match self.dim {
            1 => legendre_search_1d(&|t| objective(&[t]), r[0]),
            2 => legendre_search_2d(&|x, y| objective(&[x, y]), math::norm2(r)),
            n => Err(Error::ResourceGuard {
                what: format!("legendre oracle supports dimensions 1 and 2, got {n}"),
            }),
        }
    }

    /// Fenchel gap k(y) + k*(r) − r·y. Nonnegative up to rounding; zero
    /// exactly when r ∈ γ(y).
    pub fn fenchel_gap(&self, y: &[f64], r: &[f64]) -> Result<f64> {
        Ok(self.eval(y) + self.conjugate(r)? - math::dot(r, y))
    }

    /// Signed residual of the Yosida duality identity
    /// k((I+λγ)⁻¹x) + k*(γ_λ(x)) − γ_λ(x)·x + λ|γ_λ(x)|².
    /// Vanishes identically for exact arithmetic.
    pub fn yosida_duality_residual(&self, lambda: f64, x: &[f64]) -> Result<f64> {
        let mut eta = vec![0.0; self.dim];
        let mut res = vec![0.0; self.dim];
        self.yosida_into(lambda, x, &mut eta, &mut res)?;
        let eta_sq: f64 = eta.iter().map(|v| v * v).sum();
        Ok(self.eval(&res) + self.conjugate(&eta)? - math::dot(&eta, x) + lambda * eta_sq)
    }
}

/// Scalar root-find for the radial optimality condition
/// g′(ρ) + (ρ − s)/λ = 0 on [0, s]: safeguarded Newton with a bisection
/// bracket. ψ is strictly increasing, so the bracket never lies.
fn solve_radial_prox(
    slope: &dyn Fn(f64) -> f64,
    curvature: Option<&dyn Fn(f64) -> f64>,
    lambda: f64,
    s: f64,
) -> Result<f64> {
    let psi = |rho: f64| slope(rho) + (rho - s) / lambda;
    // Subdifferential check at the origin: if the right slope already
    // dominates, the resolvent point is 0.
    if slope(0.0) - s / lambda >= 0.0 {
        return Ok(0.0);
    }
    let tol = PROX_TOL * s.max(1.0);
    let (mut lo, mut hi) = (0.0_f64, s);
    let mut rho = s / (1.0 + lambda); // exact for the quadratic profile
    for iter in 0..PROX_MAX_ITER {
        let f = psi(rho);
        if f == 0.0 {
            return Ok(rho);
        }
        if f > 0.0 {
            hi = rho;
        } else {
            lo = rho;
        }
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }
        // Newton proposal; numeric curvature fallback keeps it usable for
        // profiles supplied without g″.
        let d = match curvature {
            Some(c) => c(rho) + 1.0 / lambda,
            None => {
                let h = 1e-6 * rho.max(1.0);
                let a = (rho - h).max(0.0);
                (slope(rho + h) - slope(a)) / (rho + h - a) + 1.0 / lambda
            }
        };
        let mut next = rho - f / d;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - rho).abs() <= tol && psi(next).abs() * lambda <= tol {
            return Ok(next);
        }
        rho = next;
        let _ = iter;
    }
    Err(Error::ProxSolver {
        iterations: PROX_MAX_ITER,
        last_radius: rho,
        residual: psi(rho),
    })
}

/// Gradient iteration on the 1/λ-strongly convex prox objective
/// k(y) + |y−x|²/(2λ), for custom integrands without closed form or radial
/// structure. Barzilai–Borwein steps work on gradients alone, so the
/// iteration is not limited by the fp resolution of objective differences.
/// Uses the supplied subgradient selection; without one, central differences
/// cap the achievable accuracy near √ε, and the tolerance is relaxed
/// accordingly.
fn prox_descent(c: &CustomIntegrand, lambda: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
    let n = x.len();
    let grad = |y: &[f64], g: &mut [f64]| {
        match &c.gradient {
            Some(gr) => gr(y, g),
            None => {
                let mut yy = y.to_vec();
                for i in 0..n {
                    let h = 1e-6 * y[i].abs().max(1.0);
                    yy[i] = y[i] + h;
                    let fp = (c.eval)(&yy);
                    yy[i] = y[i] - h;
                    let fm = (c.eval)(&yy);
                    yy[i] = y[i];
                    g[i] = (fp - fm) / (2.0 * h);
                }
            }
        }
        for i in 0..n {
            g[i] += (y[i] - x[i]) / lambda;
        }
    };
    let scale = math::norm2(x).max(1.0);
    let tol = if c.gradient.is_some() {
        1e-12 * scale
    } else {
        1e-8 * scale
    };
    let mut y = x.to_vec();
    let mut g = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    grad(&y, &mut g);
    let mut t = 0.5 * lambda;
    for _ in 0..PROX_MAX_ITER {
        // Strong convexity turns a small gradient into a small distance.
        if lambda * math::norm2(&g) <= tol {
            out.copy_from_slice(&y);
            return Ok(());
        }
        for i in 0..n {
            y_new[i] = y[i] - t * g[i];
        }
        grad(&y_new, &mut g_new);
        // BB step length (dy·dg)/(dg·dg); positive by monotonicity of ∇φ.
        let mut dy_dg = 0.0;
        let mut dg_dg = 0.0;
        for i in 0..n {
            let dy = y_new[i] - y[i];
            let dg = g_new[i] - g[i];
            dy_dg += dy * dg;
            dg_dg += dg * dg;
        }
        y.copy_from_slice(&y_new);
        g.copy_from_slice(&g_new);
        if dg_dg > 0.0 && dy_dg > 0.0 {
            t = (dy_dg / dg_dg).clamp(1e-3 * lambda, 1e3 * lambda);
        }
    }
    let residual = lambda * math::norm2(&g);
    if residual <= 10.0 * tol {
        out.copy_from_slice(&y);
        return Ok(());
    }
    Err(Error::ProxSolver {
        iterations: PROX_MAX_ITER,
        last_radius: math::norm2(&y),
        residual,
    })
}

/// Expand [−R, R] until the boundary supremum of the objective has dropped
/// twice consecutively; superlinearity of k guarantees the drop.
fn expand_box(boundary_sup: &dyn Fn(f64) -> f64, r_norm: f64) -> Result<f64> {
    let mut radius = 10.0_f64.max(10.0 * r_norm);
    let mut prev = boundary_sup(radius);
    let mut drops = 0;
    while drops < 2 {
        radius *= 2.0;
        if radius > CONJUGATE_BOX_LIMIT {
            return Err(Error::ConjugateBox { radius });
        }
        let cur = boundary_sup(radius);
        if cur < prev {
            drops += 1;
        } else {
            drops = 0;
        }
        prev = cur;
    }
    Ok(radius)
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-13 * (a.abs() + b.abs()).max(1.0) {
            break;
        }
    }
    let m = 0.5 * (a + b);
    (m, f(m))
}

fn legendre_search_1d(f: &dyn Fn(f64) -> f64, r: f64) -> Result<f64> {
    let radius = expand_box(&|rad: f64| f(rad).max(f(-rad)), r.abs())?;
    let n = CONJUGATE_GRID;
    let step = 2.0 * radius / n as f64;
    let mut best_x = -radius;
    let mut best = f(best_x);
    for i in 1..=n {
        let x = -radius + step * i as f64;
        let v = f(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    // Concavity puts the true maximiser within one cell of the best sample.
    let (x1, v1) = golden_max(f, best_x - step, best_x + step);
    Ok(best.max(v1).max(f(x1)))
}

fn legendre_search_2d(f: &dyn Fn(f64, f64) -> f64, r_norm: f64) -> Result<f64> {
    let boundary = |rad: f64| {
        let m = 512;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=m {
            let t = -rad + 2.0 * rad * i as f64 / m as f64;
            best = best.max(f(t, rad)).max(f(t, -rad)).max(f(rad, t)).max(f(-rad, t));
        }
        best
    };
    let radius = expand_box(&boundary, r_norm)?;
    // A full 2¹² × 2¹² pass is wasteful; two nested zooms reach the same
    // resolution per axis.
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut half = radius;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..3 {
        let n = 256;
        let step = 2.0 * half / n as f64;
        let (mut bx, mut by) = (cx, cy);
        for i in 0..=n {
            let x = cx - half + step * i as f64;
            for j in 0..=n {
                let y = cy - half + step * j as f64;
                let v = f(x, y);
                if v > best {
                    best = v;
                    bx = x;
                    by = y;
                }
            }
        }
        cx = bx;
        cy = by;
        half = 2.0 * step;
    }
    // Coordinate-wise golden polish.
    for _ in 0..3 {
        let fy = cy;
        let (nx, _) = golden_max(&|x| f(x, fy), cx - half, cx + half);
        cx = nx;
        let fx = cx;
        let (ny, _) = golden_max(&|y| f(fx, y), cy - half, cy + half);
        cy = ny;
        half *= 0.25;
    }
    Ok(best.max(f(cx, cy)))
}
