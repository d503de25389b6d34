//! Rectangular grids with homogeneous Dirichlet boundary, scalar fields on
//! interior nodes, and vector fields on the gradient lattice.
//!
//! The gradient is the forward difference per axis anchored at the lower
//! node of each cell, so all components of ∇u live at a common site index
//! and pointwise nonlinearities act on honest n-vectors. The divergence is
//! *defined* as the negative adjoint of the gradient under the hⁿ-weighted
//! inner products, which makes summation by parts an identity rather than
//! an approximation, and div∘grad the standard (2n+1)-point Laplacian.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, KahanSum};

/// Uniform rectangle in dimension 1 or 2 with Dirichlet boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: [usize; 2],
    extent: [f64; 2],
}

impl Grid {
    pub fn line(cells: usize, extent: f64) -> Result<Self> {
        Self::checked(1, [cells, 1], [extent, 1.0])
    }

    pub fn rectangle(cells: [usize; 2], extent: [f64; 2]) -> Result<Self> {
        Self::checked(2, cells, extent)
    }

    /// Unit interval / unit square with `cells` cells per axis.
    pub fn unit(dim: usize, cells: usize) -> Result<Self> {
        match dim {
            1 => Self::line(cells, 1.0),
            2 => Self::rectangle([cells, cells], [1.0, 1.0]),
            _ => Err(Error::InvalidConfig {
                field: "dim",
                message: alloc::format!("dimension must be 1 or 2, got {dim}"),
            }),
        }
    }

    fn checked(dim: usize, cells: [usize; 2], extent: [f64; 2]) -> Result<Self> {
        for axis in 0..dim {
            if cells[axis] < 2 {
                return Err(Error::InvalidConfig {
                    field: "cells",
                    message: alloc::format!(
                        "need at least 2 cells per axis, got {}",
                        cells[axis]
                    ),
                });
            }
            if !(extent[axis] > 0.0) {
                return Err(Error::InvalidConfig {
                    field: "extent",
                    message: alloc::format!("extent must be positive, got {}", extent[axis]),
                });
            }
        }
        Ok(Self { dim, cells, extent })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.cells[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Quadrature weight hⁿ shared by node and site sums.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Interior nodes per axis.
    pub fn interior(&self, axis: usize) -> usize {
        if axis < self.dim {
            self.cells[axis] - 1
        } else {
            1
        }
    }

    pub fn field_len(&self) -> usize {
        (0..self.dim).map(|a| self.interior(a)).product()
    }

    /// Gradient-lattice sites per axis equal the cell count.
    pub fn site_len(&self) -> usize {
        (0..self.dim).map(|a| self.cells[a]).product()
    }

    /// Halve the spacing (double the cells) on every axis.
    pub fn refined(&self) -> Result<Self> {
        Self::checked(
            self.dim,
            [self.cells[0] * 2, if self.dim == 2 { self.cells[1] * 2 } else { 1 }],
            self.extent,
        )
    }

    /// Eigenvalue of −Δ_h (the (2n+1)-point Dirichlet stencil) for the
    /// product sine mode with the given per-axis mode numbers.
    pub fn dirichlet_eigenvalue(&self, mode: [usize; 2]) -> f64 {
        let mut mu = 0.0;
        for axis in 0..self.dim {
            let h = self.spacing(axis);
            let s = math::sin(0.5 * mode[axis] as f64 * math::PI * h / self.extent[axis]);
            mu += 4.0 / (h * h) * s * s;
        }
        mu
    }
}

/// Scalar field on interior nodes; the boundary is implicitly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    data: Vec<f64>,
}

/// Norms of a scalar field: hⁿ-weighted L¹ and L², and the W^{1,1}
/// seminorm ‖∇u‖_{L¹}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldNorms {
    pub l1: f64,
    pub l2: f64,
    pub w11_semi: f64,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.field_len()],
        }
    }

    pub fn from_values(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.field_len() {
            return Err(Error::ShapeMismatch {
                context: "Field::from_values",
            });
        }
        Ok(Self { grid, data })
    }

    /// Evaluate `f` at interior node positions.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut data = vec![0.0; grid.field_len()];
        let (nx, hx) = (grid.interior(0), grid.spacing(0));
        match grid.dim() {
            1 => {
                for i in 0..nx {
                    data[i] = f([(i + 1) as f64 * hx, 0.0]);
                }
            }
            _ => {
                let (ny, hy) = (grid.interior(1), grid.spacing(1));
                for j in 0..ny {
                    for i in 0..nx {
                        data[j * nx + i] = f([(i + 1) as f64 * hx, (j + 1) as f64 * hy]);
                    }
                }
            }
        }
        Self { grid, data }
    }

    /// Product sine mode `amp · Π_d sin(m_d π x_d / L_d)` — an exact
    /// eigenvector of the discrete Dirichlet Laplacian.
    pub fn sine_mode(grid: Grid, mode: [usize; 2], amp: f64) -> Self {
        Self::from_fn(grid, |x| {
            let mut v = amp;
            for axis in 0..grid.dim() {
                v *= math::sin(mode[axis] as f64 * math::PI * x[axis] / grid.extent(axis));
            }
            v
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.data {
            *v *= a;
        }
    }

    /// self += a · other.
    pub fn add_scaled(&mut self, a: f64, other: &Field) {
        assert_eq!(self.grid, other.grid, "field grids must agree");
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        assert_eq!(self.grid, other.grid, "field grids must agree");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Field {
            grid: self.grid,
            data,
        }
    }

    /// hⁿ-weighted inner product.
    pub fn dot(&self, other: &Field) -> f64 {
        assert_eq!(self.grid, other.grid, "field grids must agree");
        self.grid.cell_volume() * math::dot(&self.data, &other.data)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.cell_volume() * math::sum_sq(&self.data)
    }

    pub fn l2_norm(&self) -> f64 {
        math::sqrt(self.l2_norm_sq())
    }

    pub fn l1_norm(&self) -> f64 {
        self.grid.cell_volume() * math::sum_abs(&self.data)
    }

    pub fn norms(&self) -> FieldNorms {
        FieldNorms {
            l1: self.l1_norm(),
            l2: self.l2_norm(),
            w11_semi: self.gradient().l1_norm(),
        }
    }

    /// Value at node (i, j) of the closed grid, zero on the boundary.
    #[inline]
    fn node(&self, i: usize, j: usize) -> f64 {
        let g = &self.grid;
        if i == 0 || i == g.cells[0] {
            return 0.0;
        }
        match g.dim {
            1 => self.data[i - 1],
            _ => {
                if j == 0 || j == g.cells[1] {
                    0.0
                } else {
                    self.data[(j - 1) * (g.cells[0] - 1) + (i - 1)]
                }
            }
        }
    }

    pub fn copy_from(&mut self, other: &Field) {
        assert_eq!(self.grid, other.grid, "field grids must agree");
        self.data.copy_from_slice(&other.data);
    }

    /// Forward-difference gradient onto the site lattice.
    pub fn gradient(&self) -> VectorField {
        let mut out = VectorField::zeros(self.grid);
        self.gradient_into(&mut out);
        out
    }

    /// Gradient into a preallocated vector field.
    pub fn gradient_into(&self, out: &mut VectorField) {
        let g = self.grid;
        assert_eq!(g, out.grid, "gradient target grid must agree");
        let hx = g.spacing(0);
        match g.dim {
            1 => {
                for i in 0..g.cells[0] {
                    out.comp[0][i] = (self.node(i + 1, 0) - self.node(i, 0)) / hx;
                }
            }
            _ => {
                let hy = g.spacing(1);
                let cx = g.cells[0];
                for j in 0..g.cells[1] {
                    for i in 0..cx {
                        let idx = j * cx + i;
                        out.comp[0][idx] = (self.node(i + 1, j) - self.node(i, j)) / hx;
                        out.comp[1][idx] = (self.node(i, j + 1) - self.node(i, j)) / hy;
                    }
                }
            }
        }
    }
}

/// Vector field on the gradient lattice: all `dim` components per site.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    comp: [Vec<f64>; 2],
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.site_len();
        let second = if grid.dim() == 2 { vec![0.0; n] } else { Vec::new() };
        Self {
            grid,
            comp: [vec![0.0; n], second],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn site_count(&self) -> usize {
        self.grid.site_len()
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comp[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.comp[axis]
    }

    /// The vector at a site; the second entry is 0 in dimension 1.
    #[inline]
    pub fn site(&self, idx: usize) -> [f64; 2] {
        match self.grid.dim {
            1 => [self.comp[0][idx], 0.0],
            _ => [self.comp[0][idx], self.comp[1][idx]],
        }
    }

    #[inline]
    pub fn set_site(&mut self, idx: usize, v: [f64; 2]) {
        self.comp[0][idx] = v[0];
        if self.grid.dim == 2 {
            self.comp[1][idx] = v[1];
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comp.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    /// hⁿ-weighted inner product over sites and components.
    pub fn dot(&self, other: &VectorField) -> f64 {
        assert_eq!(self.grid, other.grid, "vector-field grids must agree");
        let mut acc = math::dot(&self.comp[0], &other.comp[0]);
        if self.grid.dim == 2 {
            let mut k = KahanSum::new();
            k.add(acc);
            k.add(math::dot(&self.comp[1], &other.comp[1]));
            acc = k.value();
        }
        self.grid.cell_volume() * acc
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let mut acc = math::sum_sq(&self.comp[0]);
        if self.grid.dim == 2 {
            acc += math::sum_sq(&self.comp[1]);
        }
        self.grid.cell_volume() * acc
    }

    /// hⁿ Σ_sites Σ_d |η_d| — the per-component L¹ norm.
    pub fn l1_norm(&self) -> f64 {
        let mut acc = math::sum_abs(&self.comp[0]);
        if self.grid.dim == 2 {
            acc += math::sum_abs(&self.comp[1]);
        }
        self.grid.cell_volume() * acc
    }

    /// Negative adjoint of [`Field::gradient`]: backward differences of each
    /// component onto interior nodes. ⟨div η, φ⟩ = −⟨η, ∇φ⟩ exactly.
    pub fn divergence(&self) -> Field {
        let mut out = Field::zeros(self.grid);
        self.divergence_into(&mut out);
        out
    }

    /// Divergence into a preallocated field.
    pub fn divergence_into(&self, out: &mut Field) {
        let g = self.grid;
        assert_eq!(g, out.grid, "divergence target grid must agree");
        let hx = g.spacing(0);
        match g.dim {
            1 => {
                let c = g.cells[0];
                for i in 1..c {
                    out.data[i - 1] = (self.comp[0][i] - self.comp[0][i - 1]) / hx;
                }
            }
            _ => {
                let hy = g.spacing(1);
                let (cx, cy) = (g.cells[0], g.cells[1]);
                for j in 1..cy {
                    for i in 1..cx {
                        let idx = j * cx + i;
                        let dx = (self.comp[0][idx] - self.comp[0][idx - 1]) / hx;
                        let dy = (self.comp[1][idx] - self.comp[1][idx - cx]) / hy;
                        out.data[(j - 1) * (cx - 1) + (i - 1)] = dx + dy;
                    }
                }
            }
        }
    }
}

/// Reusable solver for (I − σΔ_h) w = f. In 1D the forward-elimination
/// coefficients of the constant tridiagonal system are precomputed once;
/// in 2D conjugate-gradient workspaces are reused across solves.
#[derive(Clone, Debug)]
pub struct ViscositySolver {
    grid: Grid,
    sigma: f64,
    rel_tol: f64,
    tri_c: Vec<f64>,
    scratch: Vec<f64>,
    cg_r: Vec<f64>,
    cg_p: Vec<f64>,
    cg_ap: Vec<f64>,
}

impl ViscositySolver {
    pub fn new(grid: Grid, sigma: f64, rel_tol: f64) -> Self {
        assert!(sigma >= 0.0, "viscosity weight must be nonnegative");
        let n = grid.field_len();
        let mut tri_c = Vec::new();
        if grid.dim() == 1 && sigma > 0.0 {
            let h = grid.spacing(0);
            let r = sigma / (h * h);
            let diag = 1.0 + 2.0 * r;
            let off = -r;
            tri_c = vec![0.0; n];
            let mut denom = diag;
            tri_c[0] = off / denom;
            for i in 1..n {
                denom = diag - off * tri_c[i - 1];
                tri_c[i] = off / denom;
            }
        }
        let cg = grid.dim() == 2 && sigma > 0.0;
        Self {
            grid,
            sigma,
            rel_tol,
            tri_c,
            scratch: vec![0.0; n],
            cg_r: if cg { vec![0.0; n] } else { Vec::new() },
            cg_p: if cg { vec![0.0; n] } else { Vec::new() },
            cg_ap: if cg { vec![0.0; n] } else { Vec::new() },
        }
    }

    pub fn solve_into(&mut self, f: &Field, out: &mut Field) -> Result<()> {
        assert_eq!(f.grid, self.grid, "solver grid must agree");
        assert_eq!(out.grid, self.grid, "solver grid must agree");
        if self.sigma == 0.0 {
            out.copy_from(f);
            return Ok(());
        }
        match self.grid.dim() {
            1 => {
                let h = self.grid.spacing(0);
                let r = self.sigma / (h * h);
                let diag = 1.0 + 2.0 * r;
                let off = -r;
                let n = self.grid.field_len();
                let d = &mut self.scratch;
                d[0] = f.data[0] / diag;
                for i in 1..n {
                    let denom = diag - off * self.tri_c[i - 1];
                    d[i] = (f.data[i] - off * d[i - 1]) / denom;
                }
                out.data[n - 1] = d[n - 1];
                for i in (0..n - 1).rev() {
                    out.data[i] = d[i] - self.tri_c[i] * out.data[i + 1];
                }
                Ok(())
            }
            _ => self.cg_solve_into(f, out),
        }
    }

    fn cg_solve_into(&mut self, f: &Field, out: &mut Field) -> Result<()> {
        let g = self.grid;
        let n = g.field_len();
        let b_norm = math::sqrt(math::sum_sq(&f.data));
        out.data.fill(0.0);
        if b_norm == 0.0 {
            return Ok(());
        }
        self.cg_r.copy_from_slice(&f.data);
        self.cg_p.copy_from_slice(&f.data);
        let mut rs = math::sum_sq(&self.cg_r);
        let max_iter = 10 * n;
        for iter in 0..max_iter {
            if math::sqrt(rs) <= self.rel_tol * b_norm {
                return Ok(());
            }
            apply_shifted_2d(&g, self.sigma, &self.cg_p, &mut self.cg_ap);
            let pap = math::dot(&self.cg_p, &self.cg_ap);
            if !(pap > 0.0) {
                return Err(Error::LinearSolver {
                    residual: math::sqrt(rs) / b_norm,
                    iterations: iter,
                });
            }
            let alpha = rs / pap;
            for i in 0..n {
                out.data[i] += alpha * self.cg_p[i];
                self.cg_r[i] -= alpha * self.cg_ap[i];
            }
            let rs_new = math::sum_sq(&self.cg_r);
            let beta = rs_new / rs;
            rs = rs_new;
            for i in 0..n {
                self.cg_p[i] = self.cg_r[i] + beta * self.cg_p[i];
            }
        }
        if math::sqrt(rs) <= self.rel_tol * b_norm {
            Ok(())
        } else {
            Err(Error::LinearSolver {
                residual: math::sqrt(rs) / b_norm,
                iterations: max_iter,
            })
        }
    }
}

/// Solve (I − σ Δ_h) w = f for σ ≥ 0: exact tridiagonal elimination in 1D,
/// conjugate gradients (SPD operator) in 2D.
pub fn laplacian_solve(f: &Field, sigma: f64, rel_tol: f64) -> Result<Field> {
    let mut solver = ViscositySolver::new(f.grid(), sigma, rel_tol);
    let mut out = Field::zeros(f.grid());
    solver.solve_into(f, &mut out)?;
    Ok(out)
}

/// Apply w ↦ (I − σ Δ_h) w with the 5-point stencil.
fn apply_shifted_2d(g: &Grid, sigma: f64, w: &[f64], out: &mut [f64]) {
    let (cx, cy) = (g.cells[0], g.cells[1]);
    let (nx, ny) = (cx - 1, cy - 1);
    let rx = sigma / (g.spacing(0) * g.spacing(0));
    let ry = sigma / (g.spacing(1) * g.spacing(1));
    for j in 0..ny {
        for i in 0..nx {
            let idx = j * nx + i;
            let c = w[idx];
            let xm = if i > 0 { w[idx - 1] } else { 0.0 };
            let xp = if i + 1 < nx { w[idx + 1] } else { 0.0 };
            let ym = if j > 0 { w[idx - nx] } else { 0.0 };
            let yp = if j + 1 < ny { w[idx + nx] } else { 0.0 };
            out[idx] = c + rx * (2.0 * c - xm - xp) + ry * (2.0 * c - ym - yp);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_hand_example() {
        // 3 interior nodes, h = 0.25, u = (0, 1, 0) → faces (0, 4, −4, 0).
        let g = Grid::line(4, 1.0).unwrap();
        let u = Field::from_values(g, vec![0.0, 1.0, 0.0]).unwrap();
        let grad = u.gradient();
        assert_eq!(grad.component(0), &[0.0, 4.0, -4.0, 0.0]);
    }

    #[test]
    fn gradient_is_linear() {
        let g = Grid::line(8, 1.0).unwrap();
        let zero = Field::zeros(g);
        assert!(zero.gradient().component(0).iter().all(|v| *v == 0.0));
        let v = Field::from_fn(g, |x| x[0] * (1.0 - x[0]));
        let mut v3 = v.clone();
        v3.scale(3.0);
        let g1 = v.gradient();
        let g3 = v3.gradient();
        for (a, b) in g1.component(0).iter().zip(g3.component(0)) {
            assert!((3.0 * a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn divergence_of_constant_vanishes_at_interior() {
        let g = Grid::line(8, 1.0).unwrap();
        let mut eta = VectorField::zeros(g);
        eta.component_mut(0).fill(1.0);
        let div = eta.divergence();
        for v in div.values() {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn summation_by_parts_is_exact_1d() {
        let g = Grid::line(8, 1.0).unwrap();
        let mut eta = VectorField::zeros(g);
        for (i, v) in eta.component_mut(0).iter_mut().enumerate() {
            *v = math::sin(1.3 * i as f64 + 0.4);
        }
        let phi = Field::from_fn(g, |x| math::cos(5.0 * x[0]));
        let lhs = eta.divergence().dot(&phi);
        let rhs = -eta.dot(&phi.gradient());
        assert!((lhs - rhs).abs() <= 1e-14 * (lhs.abs() + rhs.abs()).max(1.0));
    }

    #[test]
    fn div_grad_matches_five_point_stencil() {
        let g = Grid::rectangle([6, 5], [1.0, 1.0]).unwrap();
        let u = Field::from_fn(g, |x| {
            math::sin(3.0 * x[0]) * math::cos(2.0 * x[1]) + x[0] * x[1]
        });
        let lap = u.gradient().divergence();
        let (hx, hy) = (g.spacing(0), g.spacing(1));
        let nx = g.interior(0);
        for j in 1..g.cells(1) {
            for i in 1..g.cells(0) {
                let c = u.node(i, j);
                let expect = (u.node(i + 1, j) - 2.0 * c + u.node(i - 1, j)) / (hx * hx)
                    + (u.node(i, j + 1) - 2.0 * c + u.node(i, j - 1)) / (hy * hy);
                let got = lap.values()[(j - 1) * nx + (i - 1)];
                assert!((got - expect).abs() < 1e-12, "node ({i},{j})");
            }
        }
    }

    #[test]
    fn norms_hand_example() {
        // u ≡ 1, 4 interior nodes with h = 0.2 → L¹ = 0.8.
        let g = Grid::line(5, 1.0).unwrap();
        let u = Field::from_values(g, vec![1.0; 4]).unwrap();
        let n = u.norms();
        assert!((n.l1 - 0.8).abs() < 1e-15);
        let zero = Field::zeros(g);
        let nz = zero.norms();
        assert_eq!((nz.l1, nz.l2, nz.w11_semi), (0.0, 0.0, 0.0));
    }

    #[test]
    fn norms_are_homogeneous() {
        let g = Grid::line(16, 2.0).unwrap();
        let u = Field::from_fn(g, |x| x[0] * x[0] - 0.7);
        let mut u3 = u.clone();
        u3.scale(-3.0);
        let (a, b) = (u.norms(), u3.norms());
        assert!((b.l1 - 3.0 * a.l1).abs() < 1e-12);
        assert!((b.l2 - 3.0 * a.l2).abs() < 1e-12);
    }

    #[test]
    fn laplacian_solve_identity_limit() {
        let g = Grid::line(8, 1.0).unwrap();
        let f = Field::from_fn(g, |x| x[0] - 0.3);
        let w = laplacian_solve(&f, 0.0, 1e-10).unwrap();
        assert_eq!(w, f);
    }

    #[test]
    fn laplacian_solve_sine_eigenvector_1d() {
        let g = Grid::line(16, 1.0).unwrap();
        let f = Field::sine_mode(g, [1, 0], 1.0);
        let sigma = 0.37;
        let mu = g.dirichlet_eigenvalue([1, 0]);
        let w = laplacian_solve(&f, sigma, 1e-12).unwrap();
        for (wv, fv) in w.values().iter().zip(f.values()) {
            assert!((wv - fv / (1.0 + sigma * mu)).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_solve_residual_2d() {
        let g = Grid::rectangle([9, 7], [1.0, 2.0]).unwrap();
        let f = Field::from_fn(g, |x| math::sin(7.0 * x[0]) + x[1]);
        let sigma = 0.05;
        let w = laplacian_solve(&f, sigma, 1e-12).unwrap();
        let mut aw = vec![0.0; g.field_len()];
        apply_shifted_2d(&g, sigma, w.values(), &mut aw);
        let mut err = 0.0_f64;
        let mut scale = 0.0_f64;
        for (a, b) in aw.iter().zip(f.values()) {
            err += (a - b) * (a - b);
            scale += b * b;
        }
        assert!(err.sqrt() <= 1e-10 * scale.sqrt());
    }

    #[test]
    fn laplacian_solve_is_monotone() {
        let g = Grid::unit(2, 12).unwrap();
        let f = Field::from_fn(g, |x| (x[0] - 0.5).abs() + 0.1 * x[1]);
        let w = laplacian_solve(&f, 0.2, 1e-12).unwrap();
        for v in w.values() {
            assert!(*v >= -1e-11, "monotone solve produced {v}");
        }
    }
}
