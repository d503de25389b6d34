//! CSV writers for every report kind, and the flat field format.
//!
//! Every table starts with a `# schema=<name>.v1` line. Floats are written
//! with Rust's shortest-roundtrip formatting, so equal values produce equal
//! bytes and a rerun with the same manifest reproduces files exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use spde_core::diagnostics::{LambdaSweepRow, MomentReport, RefinementRow};
use spde_core::evolution::{AprioriReport, PathSolution};
use spde_core::grid::{Field, Grid};
use spde_core::picard::PicardReport;

use crate::error::CliError;

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Per-step diagnostics of one path:
/// t, ‖u‖², ∫η·∇u, ‖G‖²_HS, gap, ∫k(∇u), ∫k*(η).
pub fn write_path_csv(path: &Path, sol: &PathSolution) -> Result<(), CliError> {
    let mut out = String::from("# schema=spde.path.v1\n");
    out.push_str("t,u_l2_sq,eta_dot_grad,g_hs_sq,gap,k_grad,k_star_eta\n");
    for d in &sol.diag {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt(d.t),
            fmt(d.u_l2_sq),
            fmt(d.eta_dot_grad),
            fmt(d.hs_sq),
            fmt(d.fenchel_gap),
            fmt(d.k_grad),
            fmt(d.k_star_eta),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_moments_csv(path: &Path, rep: &MomentReport) -> Result<(), CliError> {
    let mut out = String::from("# schema=spde.moments.v1\n");
    out.push_str("quantity,mean,se\n");
    let rows = [
        ("sup_u_l2_sq", rep.sup_u_l2_sq),
        ("w11_integral", rep.w11_integral),
        ("eta_l1_integral", rep.eta_l1_integral),
        ("convex_integral", rep.convex_integral),
    ];
    for (name, est) in rows {
        out.push_str(&format!("{name},{},{}\n", fmt(est.mean), fmt_opt(est.se)));
    }
    out.push_str(&format!(
        "weak_increment_max,{},\n",
        fmt(rep.weak_increment_max)
    ));
    fs::write(path, out)?;
    Ok(())
}

pub fn write_apriori_csv(path: &Path, rep: &AprioriReport) -> Result<(), CliError> {
    let mut out = String::from("# schema=spde.apriori.v1\n");
    out.push_str(
        "sup_term,visc_term,flux_term,rhs,ratio_sup,ratio_visc,ratio_flux,total_ratio\n",
    );
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{}\n",
        fmt(rep.sup_term),
        fmt(rep.visc_term),
        fmt(rep.flux_term),
        fmt(rep.rhs),
        fmt(rep.ratios[0]),
        fmt(rep.ratios[1]),
        fmt(rep.ratios[2]),
        fmt(rep.total_ratio),
    ));
    fs::write(path, out)?;
    Ok(())
}

/// One row per Picard iteration: (n, distance, ratio). Summary quantities
/// ride along as comment lines.
pub fn write_picard_csv(path: &Path, rep: &PicardReport) -> Result<(), CliError> {
    let mut out = String::from("# schema=spde.picard.v1\n");
    out.push_str(&format!("# alpha = {}\n", fmt(rep.alpha)));
    out.push_str(&format!("# lipschitz = {}\n", fmt(rep.lipschitz)));
    out.push_str(&format!("# calibration = {}\n", fmt(rep.calibration)));
    out.push_str(&format!("# predicted_ratio = {}\n", fmt(rep.predicted_ratio)));
    out.push_str(&format!("# iterations = {}\n", rep.iterations));
    out.push_str(&format!(
        "# fixed_point_residual = {}\n",
        fmt(rep.fixed_point_residual)
    ));
    out.push_str("n,distance,ratio\n");
    for (i, d) in rep.distances.iter().enumerate() {
        let ratio = if i == 0 {
            String::new()
        } else {
            fmt_opt(rep.ratios.get(i - 1).copied())
        };
        out.push_str(&format!("{i},{},{ratio}\n", fmt(*d)));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_lambda_sweep_csv(path: &Path, rows: &[LambdaSweepRow]) -> Result<(), CliError> {
    let mut out = String::from("# schema=spde.lambda_sweep.v1\n");
    out.push_str(
        "lambda,diff_to_next,k_star_stat,k_resolvent_stat,flux_stat,ratio_sup,ratio_visc,ratio_flux,total_ratio,rhs\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt(r.lambda),
            fmt_opt(r.diff_to_next),
            fmt(r.k_star_stat),
            fmt(r.k_resolvent_stat),
            fmt(r.flux_stat),
            fmt(r.ratios[0]),
            fmt(r.ratios[1]),
            fmt(r.ratios[2]),
            fmt(r.total_ratio),
            fmt(r.rhs),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_refinement_csv(path: &Path, rows: &[RefinementRow]) -> Result<(), CliError> {
    let mut out = String::from("# schema=spde.refinement.v1\n");
    out.push_str(
        "level,dt,h,energy_residual,energy_se,terminal_l2_sq,terminal_se,reference_error,residual_order,reference_order\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.level,
            fmt(r.dt),
            fmt(r.h),
            fmt(r.energy_residual),
            fmt_opt(r.energy_se),
            fmt(r.terminal_l2_sq),
            fmt_opt(r.terminal_se),
            fmt_opt(r.reference_error),
            fmt_opt(r.residual_order),
            fmt_opt(r.reference_order),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Residual maxima of the convex-core identity battery.
#[derive(Clone, Debug)]
pub struct ConvexCheckRow {
    pub integrand: String,
    pub dim: usize,
    pub lambda: f64,
    pub max_gap_violation: f64,
    pub max_duality_residual: f64,
    pub max_lipschitz_excess: f64,
    pub max_nonexpansive_excess: f64,
    pub max_reconstruction_error: f64,
    pub max_conjugate_oracle_gap: f64,
    pub asymmetry_bound: f64,
}

pub fn write_convex_check_csv(path: &Path, rows: &[ConvexCheckRow]) -> Result<(), CliError> {
    let mut out = String::from("# schema=spde.convex_check.v1\n");
    out.push_str("integrand,dim,lambda,max_gap_violation,max_duality_residual,max_lipschitz_excess,max_nonexpansive_excess,max_reconstruction_error,max_conjugate_oracle_gap,asymmetry_bound\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.integrand,
            r.dim,
            fmt(r.lambda),
            fmt(r.max_gap_violation),
            fmt(r.max_duality_residual),
            fmt(r.max_lipschitz_excess),
            fmt(r.max_nonexpansive_excess),
            fmt(r.max_reconstruction_error),
            fmt(r.max_conjugate_oracle_gap),
            fmt(r.asymmetry_bound),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Flat row-major field file with the grid header
/// `# grid n=<n> cells=<c> h=<h>`.
pub fn write_field_csv(path: &Path, field: &Field) -> Result<(), CliError> {
    let g = field.grid();
    let mut file = fs::File::create(path)?;
    match g.dim() {
        1 => {
            writeln!(file, "# grid n=1 cells={} h={}", g.cells(0), fmt(g.spacing(0)))?;
            let row: Vec<String> = field.values().iter().map(|v| fmt(*v)).collect();
            writeln!(file, "{}", row.join(","))?;
        }
        _ => {
            writeln!(
                file,
                "# grid n=2 cells={},{} h={},{}",
                g.cells(0),
                g.cells(1),
                fmt(g.spacing(0)),
                fmt(g.spacing(1)),
            )?;
            let nx = g.cells(0) - 1;
            for row in field.values().chunks(nx) {
                let line: Vec<String> = row.iter().map(|v| fmt(*v)).collect();
                writeln!(file, "{}", line.join(","))?;
            }
        }
    }
    Ok(())
}

pub fn read_field_csv(path: &Path) -> Result<Field, CliError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Config {
        field: "field file".into(),
        message: "empty file".into(),
    })?;
    let bad = |m: &str| CliError::Config {
        field: "field file".into(),
        message: m.to_string(),
    };
    let rest = header
        .strip_prefix("# grid n=")
        .ok_or_else(|| bad("missing `# grid` header"))?;
    let mut parts = rest.split_whitespace();
    let n: usize = parts
        .next()
        .ok_or_else(|| bad("missing dimension"))?
        .parse()
        .map_err(|_| bad("bad dimension"))?;
    let cells_part = parts
        .next()
        .and_then(|p| p.strip_prefix("cells="))
        .ok_or_else(|| bad("missing cells"))?;
    let h_part = parts
        .next()
        .and_then(|p| p.strip_prefix("h="))
        .ok_or_else(|| bad("missing h"))?;
    let cells: Vec<usize> = cells_part
        .split(',')
        .map(|c| c.parse().map_err(|_| bad("bad cells")))
        .collect::<Result<_, _>>()?;
    let spacings: Vec<f64> = h_part
        .split(',')
        .map(|c| c.parse().map_err(|_| bad("bad spacing")))
        .collect::<Result<_, _>>()?;
    let grid = match n {
        1 => Grid::line(cells[0], spacings[0] * cells[0] as f64)?,
        2 => Grid::rectangle(
            [cells[0], cells[1]],
            [
                spacings[0] * cells[0] as f64,
                spacings[1] * cells[1] as f64,
            ],
        )?,
        _ => return Err(bad("dimension must be 1 or 2")),
    };
    let mut values = Vec::with_capacity(grid.field_len());
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        for v in line.split(',') {
            values.push(v.trim().parse::<f64>().map_err(|_| bad("bad value"))?);
        }
    }
    Field::from_values(grid, values).map_err(CliError::from)
}
