//! Truncated cylindrical Wiener process and Hilbert–Schmidt diffusion
//! coefficients.
//!
//! The cylindrical process is truncated to K modes; increments are keyed
//! draws from [`crate::rng`], so a full trajectory is a pure function of
//! `(seed, path)` and replays bitwise across runs and Picard iterations.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::math;
use crate::rng;

/// Truncated cylindrical Wiener process: K independent scalar Brownian
/// motions sampled at step resolution Δt.
#[derive(Clone, Copy, Debug)]
pub struct WienerDriver {
    seed: u64,
    modes: usize,
    dt: f64,
}

impl WienerDriver {
    pub fn new(seed: u64, modes: usize, dt: f64) -> Self {
        Self { seed, modes, dt }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// The K increments for (path, step): i.i.d. N(0, Δt), deterministic in
    /// the key.
    pub fn increment_into(&self, path: usize, step: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.modes);
        let sd = math::sqrt(self.dt);
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = sd * rng::keyed_normal(self.seed, path as u64, step as u64, k as u64);
        }
    }

    pub fn increment(&self, path: usize, step: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.modes];
        self.increment_into(path, step, &mut out);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientKind {
    Additive,
    Multiplicative,
}

enum CoefInner {
    /// B ≡ 0 (deterministic drift only).
    Zero,
    /// Time-independent additive modes G e_k, precomputed on the grid.
    AdditiveModes { fields: Vec<Field>, hs_sq: f64 },
    /// Nemytskii coefficient B(u) e_k = a_k (c₀ + c₁ clamp(u)).
    Nemytskii {
        weights: Vec<f64>,
        weight_sq_sum: f64,
        c0: f64,
        c1: f64,
        clamp: f64,
    },
}

/// Diffusion coefficient B(t, u) acting on the truncated basis of H.
pub struct DiffusionCoefficient {
    name: String,
    grid: Grid,
    kind: CoefficientKind,
    inner: CoefInner,
    lipschitz: f64,
    growth: f64,
    /// Σ_{k>K} a_k² / Σ_{k≤K} a_k² for the built-in decay law.
    tail_ratio: f64,
}

impl core::fmt::Debug for DiffusionCoefficient {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DiffusionCoefficient")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .finish()
    }
}

fn decay_weights(modes: usize, scale: f64, decay: f64) -> Vec<f64> {
    (1..=modes)
        .map(|k| scale * math::pow(k as f64, -decay))
        .collect()
}

/// Numerical tail Σ_{k>K} a_k² of the decay law, summed to convergence.
fn coeff_tail_ratio(modes: usize, scale: f64, decay: f64) -> f64 {
    let head: f64 = decay_weights(modes, scale, decay)
        .iter()
        .map(|a| a * a)
        .sum();
    if head == 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    let mut k = modes + 1;
    loop {
        let a = scale * math::pow(k as f64, -decay);
        let t = a * a;
        tail += t;
        if t < 1e-18 * (head + tail) || k > modes + 2_000_000 {
            break;
        }
        k += 1;
    }
    tail / head
}

impl DiffusionCoefficient {
    /// The zero coefficient (deterministic runs).
    pub fn zero(grid: Grid) -> Self {
        Self {
            name: "none".to_string(),
            grid,
            kind: CoefficientKind::Additive,
            inner: CoefInner::Zero,
            lipschitz: 0.0,
            growth: 0.0,
            tail_ratio: 0.0,
        }
    }

    /// Additive coefficient from explicit mode fields G e_k.
    pub fn additive_from_modes(grid: Grid, fields: Vec<Field>) -> Self {
        let hs_sq = fields.iter().map(|f| f.l2_norm_sq()).sum();
        Self {
            name: "additive_custom".to_string(),
            grid,
            kind: CoefficientKind::Additive,
            inner: CoefInner::AdditiveModes { fields, hs_sq },
            lipschitz: 0.0,
            growth: math::sqrt(hs_sq),
            tail_ratio: 0.0,
        }
    }

    /// Smooth additive coefficient with modes a_k · Π_d sin(kπx_d/L_d),
    /// a_k = scale · k^(−decay). Hilbert–Schmidt by construction.
    pub fn additive_smooth(grid: Grid, modes: usize, scale: f64, decay: f64) -> Self {
        let weights = decay_weights(modes, scale, decay);
        let fields: Vec<Field> = weights
            .iter()
            .enumerate()
            .map(|(i, a)| Field::sine_mode(grid, [i + 1, i + 1], *a))
            .collect();
        let hs_sq: f64 = fields.iter().map(|f| f.l2_norm_sq()).sum();
        Self {
            name: "add_smooth".to_string(),
            grid,
            kind: CoefficientKind::Additive,
            inner: CoefInner::AdditiveModes { fields, hs_sq },
            lipschitz: 0.0,
            growth: math::sqrt(hs_sq),
            tail_ratio: coeff_tail_ratio(modes, scale, decay),
        }
    }

    /// Globally Lipschitz multiplicative coefficient
    /// B(u) e_k = a_k (c₀ + c₁ clamp(u)), clamp to [−bound, bound].
    /// L_B = c₁ √(Σ a_k²) is certified by construction.
    pub fn nemytskii(
        grid: Grid,
        modes: usize,
        scale: f64,
        decay: f64,
        c0: f64,
        c1: f64,
        clamp: f64,
    ) -> Self {
        let weights = decay_weights(modes, scale, decay);
        let weight_sq_sum: f64 = weights.iter().map(|a| a * a).sum();
        let root = math::sqrt(weight_sq_sum);
        let volume: f64 = (0..grid.dim()).map(|a| grid.extent(a)).product();
        Self {
            name: "mult_nemytskii".to_string(),
            grid,
            kind: CoefficientKind::Multiplicative,
            inner: CoefInner::Nemytskii {
                weights,
                weight_sq_sum,
                c0,
                c1,
                clamp,
            },
            lipschitz: c1.abs() * root,
            growth: root * (c0.abs() * math::sqrt(volume)).max(c1.abs()),
            tail_ratio: coeff_tail_ratio(modes, scale, decay),
        }
    }

    /// Registry lookup: `none`, `add_smooth`, `mult_nemytskii`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_name(
        name: &str,
        grid: Grid,
        modes: usize,
        scale: f64,
        decay: f64,
        c0: f64,
        c1: f64,
        clamp: f64,
    ) -> Result<Self> {
        match name {
            "none" => Ok(Self::zero(grid)),
            "add_smooth" => Ok(Self::additive_smooth(grid, modes, scale, decay)),
            "mult_nemytskii" => Ok(Self::nemytskii(grid, modes, scale, decay, c0, c1, clamp)),
            _ => Err(Error::InvalidConfig {
                field: "coefficient",
                message: format!(
                    "unknown coefficient `{name}` (expected none, add_smooth, mult_nemytskii)"
                ),
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn kind(&self) -> CoefficientKind {
        self.kind
    }

    pub fn is_additive(&self) -> bool {
        self.kind == CoefficientKind::Additive
    }

    pub fn mode_count(&self) -> usize {
        match &self.inner {
            CoefInner::Zero => 0,
            CoefInner::AdditiveModes { fields, .. } => fields.len(),
            CoefInner::Nemytskii { weights, .. } => weights.len(),
        }
    }

    /// Certified Lipschitz constant of u ↦ B(t, u) in Hilbert–Schmidt norm.
    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    /// Certified linear-growth constant: ‖B(t,u)‖_HS ≤ C_B (1 + ‖u‖).
    pub fn growth_bound(&self) -> f64 {
        self.growth
    }

    /// Truncation diagnostic for the built-in decay law.
    pub fn tail_ratio(&self) -> f64 {
        self.tail_ratio
    }

    /// Action on the k-th basis vector, B(t, u) e_k.
    pub fn mode_field(&self, k: usize, _t: f64, u: &Field) -> Field {
        match &self.inner {
            CoefInner::Zero => Field::zeros(self.grid),
            CoefInner::AdditiveModes { fields, .. } => fields[k].clone(),
            CoefInner::Nemytskii {
                weights, c0, c1, clamp, ..
            } => {
                let mut out = u.clone();
                for v in out.values_mut() {
                    *v = weights[k] * (c0 + c1 * v.clamp(-clamp, *clamp));
                }
                out
            }
        }
    }

    /// One-step stochastic increment Σ_k (B(t,u) e_k) · dw_k.
    pub fn apply(&self, t: f64, u: &Field, dw: &[f64]) -> Field {
        let mut out = Field::zeros(self.grid);
        self.apply_into(t, u, dw, &mut out);
        out
    }

    /// As [`DiffusionCoefficient::apply`], into a preallocated field.
    pub fn apply_into(&self, _t: f64, u: &Field, dw: &[f64], out: &mut Field) {
        match &self.inner {
            CoefInner::Zero => out.values_mut().fill(0.0),
            CoefInner::AdditiveModes { fields, .. } => {
                debug_assert_eq!(dw.len(), fields.len());
                out.values_mut().fill(0.0);
                for (field, w) in fields.iter().zip(dw) {
                    out.add_scaled(*w, field);
                }
            }
            CoefInner::Nemytskii {
                weights, c0, c1, clamp, ..
            } => {
                debug_assert_eq!(dw.len(), weights.len());
                let mut s = math::KahanSum::new();
                for (a, w) in weights.iter().zip(dw) {
                    s.add(a * w);
                }
                let s = s.value();
                for (o, v) in out.values_mut().iter_mut().zip(u.values()) {
                    *o = s * (c0 + c1 * v.clamp(-*clamp, *clamp));
                }
            }
        }
    }

    /// ‖B(t,u)‖²_HS = Σ_k ‖B(t,u) e_k‖²_{L²}.
    pub fn hs_norm_sq(&self, _t: f64, u: &Field) -> f64 {
        match &self.inner {
            CoefInner::Zero => 0.0,
            CoefInner::AdditiveModes { hs_sq, .. } => *hs_sq,
            CoefInner::Nemytskii {
                weight_sq_sum,
                c0,
                c1,
                clamp,
                ..
            } => {
                let mut base = u.clone();
                for v in base.values_mut() {
                    *v = c0 + c1 * v.clamp(-clamp, *clamp);
                }
                weight_sq_sum * base.l2_norm_sq()
            }
        }
    }

    pub fn hs_norm(&self, t: f64, u: &Field) -> f64 {
        math::sqrt(self.hs_norm_sq(t, u))
    }
}
