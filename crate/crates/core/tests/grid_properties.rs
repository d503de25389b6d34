//! Discretization invariants: exact summation by parts across grid sizes,
//! negative-semidefiniteness of the discrete Laplacian, M-matrix
//! monotonicity of the viscosity solve, and O(h²) consistency.

use spde_core::grid::{laplacian_solve, Field, Grid, VectorField};
use spde_core::rng;

fn filled_vector_field(grid: Grid, seed: u64) -> VectorField {
    let mut eta = VectorField::zeros(grid);
    for axis in 0..grid.dim() {
        for (i, v) in eta.component_mut(axis).iter_mut().enumerate() {
            let bits = rng::keyed_u64(seed, axis as u64, i as u64, 0, 0);
            *v = ((bits >> 11) as f64) / 9_007_199_254_740_992.0 * 2.0 - 1.0;
        }
    }
    eta
}

fn filled_field(grid: Grid, seed: u64) -> Field {
    let mut f = Field::zeros(grid);
    for (i, v) in f.values_mut().iter_mut().enumerate() {
        let bits = rng::keyed_u64(seed, 7, i as u64, 1, 0);
        *v = ((bits >> 11) as f64) / 9_007_199_254_740_992.0 * 2.0 - 1.0;
    }
    f
}

#[test]
fn summation_by_parts_exact_on_all_grid_sizes() {
    let mut grids = Vec::new();
    for cells in [8usize, 16, 32, 64] {
        grids.push(Grid::line(cells, 1.0).unwrap());
    }
    for cells in [8usize, 16, 32] {
        grids.push(Grid::rectangle([cells, cells], [1.0, 1.0]).unwrap());
    }
    for (gi, grid) in grids.into_iter().enumerate() {
        for trial in 0..100u64 {
            let eta = filled_vector_field(grid, 1000 * gi as u64 + trial);
            let phi = filled_field(grid, 2000 * gi as u64 + trial);
            let lhs = eta.divergence().dot(&phi);
            let rhs = -eta.dot(&phi.gradient());
            let scale = eta.l2_norm_sq().sqrt() * phi.gradient().l2_norm_sq().sqrt()
                + phi.l2_norm_sq().sqrt();
            assert!(
                (lhs - rhs).abs() <= 1e-14 * scale.max(1.0),
                "grid {gi} trial {trial}: {lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn discrete_laplacian_is_negative_semidefinite() {
    for grid in [Grid::line(16, 1.0).unwrap(), Grid::unit(2, 8).unwrap()] {
        for trial in 0..20u64 {
            let u = filled_field(grid, 31 * trial + 5);
            let quad = u.gradient().divergence().dot(&u);
            assert!(quad <= 1e-12, "⟨Δu, u⟩ = {quad}");
        }
        // Equality iff u = 0: a nonzero field must give a strictly negative form.
        let u = filled_field(grid, 77);
        assert!(u.gradient().divergence().dot(&u) < 0.0);
        let zero = Field::zeros(grid);
        assert_eq!(zero.gradient().divergence().dot(&zero), 0.0);
    }
}

#[test]
fn viscosity_solve_is_monotone_on_random_nonnegative_data() {
    for grid in [Grid::line(32, 1.0).unwrap(), Grid::unit(2, 16).unwrap()] {
        for trial in 0..10u64 {
            let mut f = filled_field(grid, 400 + trial);
            for v in f.values_mut() {
                *v = v.abs();
            }
            let w = laplacian_solve(&f, 0.3, 1e-12).unwrap();
            for v in w.values() {
                assert!(*v >= -1e-10, "negative entry {v}");
            }
        }
    }
}

#[test]
fn stencil_consistency_is_second_order() {
    // ‖Δ_h u + π² u‖_∞ = O(h²) for u = sin(πx).
    let mut errors = Vec::new();
    for cells in [8usize, 16, 32, 64] {
        let grid = Grid::line(cells, 1.0).unwrap();
        let u = Field::sine_mode(grid, [1, 0], 1.0);
        let lap = u.gradient().divergence();
        let pi = std::f64::consts::PI;
        let mut err: f64 = 0.0;
        for (lv, uv) in lap.values().iter().zip(u.values()) {
            err = err.max((lv + pi * pi * uv).abs());
        }
        errors.push(err);
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(
            (order - 2.0).abs() < 0.2,
            "observed order {order}, errors {errors:?}"
        );
    }
}

#[test]
fn two_dimensional_eigenmode_solve() {
    let grid = Grid::unit(2, 16).unwrap();
    let f = Field::sine_mode(grid, [2, 1], 1.0);
    let sigma = 0.21;
    let mu = grid.dirichlet_eigenvalue([2, 1]);
    let w = laplacian_solve(&f, sigma, 1e-12).unwrap();
    for (wv, fv) in w.values().iter().zip(f.values()) {
        assert!((wv - fv / (1.0 + sigma * mu)).abs() < 1e-10);
    }
}

#[test]
fn refined_grid_halves_spacing() {
    let g = Grid::line(8, 1.0).unwrap();
    let r = g.refined().unwrap();
    assert_eq!(r.cells(0), 16);
    assert!((r.spacing(0) - g.spacing(0) / 2.0).abs() < 1e-16);
}
