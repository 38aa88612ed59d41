//! Operator validation suite: adjointness against the explicit-matrix
//! oracle, mass conservation, negative semidefiniteness, symbol consistency
//! under refinement, and the kappa-split sweep bounded by the small-jump
//! moment.

use serde::Serialize;

use crate::grid::{Field, Grid1D};
use crate::init;
use crate::levy::LevyMeasure;
use crate::nonlocal::{
    adjoint_residual, apply_levy, inner_product, operator_matrix, symbol_residual,
};
use crate::Result;

use super::{CheckResult, Status};

#[derive(Debug, Clone)]
pub struct OpcheckConfig {
    pub measure: LevyMeasure,
    pub seed: u64,
    pub n_pairs: usize,
    /// Grid size for the matrix-oracle checks.
    pub oracle_cells: usize,
    /// Two resolutions for the symbol-consistency refinement.
    pub resolutions: (usize, usize),
    pub max_mode: usize,
    pub length: f64,
    pub tail_cut: f64,
}

impl OpcheckConfig {
    pub fn standard(measure: LevyMeasure) -> Self {
        let tail_cut = measure.support_end().unwrap_or(8.0).max(1.0);
        OpcheckConfig {
            measure,
            seed: 0,
            n_pairs: 50,
            oracle_cells: 64,
            resolutions: (256, 512),
            max_mode: 8,
            length: 1.0,
            tail_cut,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolRow {
    pub mode: usize,
    pub psi_exact: f64,
    pub psi_coarse: f64,
    pub psi_fine: f64,
    pub residual_coarse: f64,
    pub residual_fine: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaRow {
    pub kappa_cells: usize,
    pub kappa: f64,
    pub small_moment: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct OpcheckReport {
    pub adjoint_max_rel: f64,
    pub matrix_asymmetry: f64,
    pub min_offdiag: f64,
    pub mass_max_rel: f64,
    pub energy_max: f64,
    pub symbol_rows: Vec<SymbolRow>,
    pub kappa_rows: Vec<KappaRow>,
    pub kappa_monotone_pairs: usize,
    pub fitted_bound_constant: f64,
    pub checks: Vec<CheckResult>,
}

const ADJOINT_RTOL: f64 = 1e-12;
const MASS_RTOL: f64 = 1e-12;
const SYMBOL_GAIN: f64 = 1.5;

pub fn run_opcheck(cfg: &OpcheckConfig) -> Result<OpcheckReport> {
    let mut checks = Vec::new();

    // --- adjointness and matrix oracle on a small grid ---
    let g = Grid1D::new(cfg.oracle_cells, cfg.length)?;
    let quad = cfg
        .measure
        .build_quadrature(g.spacing(), g.spacing(), cfg.tail_cut)?;

    // Operator scale for relative residuals.
    let op_scale = 2.0 * quad.small_moment() / (g.spacing() * g.spacing())
        + 2.0 * quad.total_rate()
        + quad.drift().abs() / g.spacing();

    let mut adjoint_max_rel = 0.0_f64;
    let mut mass_max_rel = 0.0_f64;
    let mut energy_max = f64::NEG_INFINITY;
    for i in 0..cfg.n_pairs {
        let phi = init::random_band_limited(
            g,
            cfg.seed.wrapping_add(2 * i as u64),
            12,
            1.0,
            (-2.0, 2.0),
        )?;
        let psi = init::random_band_limited(
            g,
            cfg.seed.wrapping_add(2 * i as u64 + 1),
            12,
            1.0,
            (-2.0, 2.0),
        )?;
        let res = adjoint_residual(&phi, &psi, &quad)?;
        let norm_phi = inner_product(&phi, &phi)?.sqrt();
        let norm_psi = inner_product(&psi, &psi)?.sqrt();
        adjoint_max_rel =
            adjoint_max_rel.max(res / (op_scale * norm_phi * norm_psi).max(1e-300));

        let l_phi = apply_levy(&phi, &quad)?;
        let total: f64 = l_phi.values().iter().sum();
        let scale: f64 = l_phi.values().iter().map(|v| v.abs()).sum::<f64>() + 1e-300;
        mass_max_rel = mass_max_rel.max(total.abs() / scale);
        energy_max = energy_max.max(inner_product(&phi, &l_phi)?);
    }

    // Matrix oracle: symmetry and sign structure of the explicit matrix.
    let matrix = operator_matrix(g, &quad)?;
    let n = matrix.len();
    let mut matrix_asymmetry = 0.0_f64;
    let mut min_offdiag = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                matrix_asymmetry = matrix_asymmetry.max((matrix[i][j] - matrix[j][i]).abs());
                min_offdiag = min_offdiag.min(matrix[i][j]);
            }
        }
    }
    let matrix_scale = op_scale.max(1e-300);

    checks.push(CheckResult::new(
        "opcheck_adjoint",
        if adjoint_max_rel < ADJOINT_RTOL && matrix_asymmetry / matrix_scale < ADJOINT_RTOL {
            Status::Pass
        } else {
            Status::Fail
        },
        format!(
            "max relative adjoint residual {adjoint_max_rel:e}, matrix asymmetry \
             {matrix_asymmetry:e} (scale {matrix_scale:e})"
        ),
    ));
    checks.push(CheckResult::new(
        "opcheck_monotone_offdiag",
        if min_offdiag >= -1e-15 * matrix_scale {
            Status::Pass
        } else {
            Status::Fail
        },
        format!("min off-diagonal entry {min_offdiag:e}"),
    ));
    checks.push(CheckResult::new(
        "opcheck_mass_energy",
        if mass_max_rel < MASS_RTOL && energy_max <= 1e-12 * matrix_scale {
            Status::Pass
        } else {
            Status::Fail
        },
        format!("max relative mass defect {mass_max_rel:e}, max energy {energy_max:e}"),
    ));

    // --- symbol consistency under refinement ---
    let (n_coarse, n_fine) = cfg.resolutions;
    let g1 = Grid1D::new(n_coarse, cfg.length)?;
    let g2 = Grid1D::new(n_fine, cfg.length)?;
    let q1 = cfg
        .measure
        .build_quadrature(g1.spacing(), g1.spacing(), cfg.tail_cut)?;
    let q2 = cfg
        .measure
        .build_quadrature(g2.spacing(), g2.spacing(), cfg.tail_cut)?;
    let mut symbol_rows = Vec::new();
    let mut min_gain = f64::INFINITY;
    for mode in 1..=cfg.max_mode {
        let omega = 2.0 * std::f64::consts::PI * mode as f64 / cfg.length;
        let psi_exact = cfg.measure.levy_symbol(omega)?;
        let r1 = symbol_residual(g1, &q1, &cfg.measure, mode)?;
        let r2 = symbol_residual(g2, &q2, &cfg.measure, mode)?;
        let ratio = r1 / r2.max(1e-300);
        min_gain = min_gain.min(ratio);
        symbol_rows.push(SymbolRow {
            mode,
            psi_exact,
            psi_coarse: psi_exact + r1.copysign(1.0),
            psi_fine: psi_exact + r2.copysign(1.0),
            residual_coarse: r1,
            residual_fine: r2,
            ratio,
        });
    }
    checks.push(CheckResult::new(
        "opcheck_symbol_refinement",
        if min_gain >= SYMBOL_GAIN {
            Status::Pass
        } else {
            Status::Fail
        },
        format!(
            "residual gain {n_coarse}->{n_fine} at least {min_gain:.2} per mode \
             (required {SYMBOL_GAIN})"
        ),
    ));

    // --- kappa-split sweep ---
    let gk = g1;
    let h = gk.spacing();
    let field = Field::from_fn(gk, |x| {
        let w = 2.0 * std::f64::consts::PI / cfg.length;
        (w * x).sin() + 0.3 * (3.0 * w * x).cos()
    })?;
    let reference = apply_levy(&field, &q1)?;
    let mut kappa_rows = Vec::new();
    for cells in [1usize, 2, 4, 8] {
        let kappa = cells as f64 * h;
        let quad_k = cfg.measure.build_quadrature(h, kappa, cfg.tail_cut)?;
        let lk = apply_levy(&field, &quad_k)?;
        let deviation = lk
            .values()
            .iter()
            .zip(reference.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        kappa_rows.push(KappaRow {
            kappa_cells: cells,
            kappa,
            small_moment: cfg.measure.small_jump_moment(kappa),
            deviation,
        });
    }
    // Deviations ordered with the small-jump moment (monotone in >= 3 of 4
    // consecutive comparisons, counting the zero reference rung).
    let mut monotone_pairs = 0;
    for w in kappa_rows.windows(2) {
        if w[1].deviation >= w[0].deviation - 1e-15 {
            monotone_pairs += 1;
        }
    }
    if kappa_rows.first().map(|r| r.deviation <= 1e-15) == Some(true) {
        monotone_pairs += 1; // the kappa = h rung deviates by zero
    }
    // Least-squares constant in deviation ~ C * small_jump_moment.
    let num: f64 = kappa_rows
        .iter()
        .map(|r| r.deviation * r.small_moment)
        .sum();
    let den: f64 = kappa_rows
        .iter()
        .map(|r| r.small_moment * r.small_moment)
        .sum();
    let fitted_bound_constant = if den > 0.0 { num / den } else { 0.0 };
    checks.push(CheckResult::new(
        "opcheck_kappa_sweep",
        if monotone_pairs >= 3 {
            Status::Pass
        } else {
            Status::Fail
        },
        format!(
            "{monotone_pairs}/4 ordered rungs, fitted bound constant \
             {fitted_bound_constant:.3e}"
        ),
    ));

    Ok(OpcheckReport {
        adjoint_max_rel,
        matrix_asymmetry,
        min_offdiag,
        mass_max_rel,
        energy_max,
        symbol_rows,
        kappa_rows,
        kappa_monotone_pairs: monotone_pairs,
        fitted_bound_constant,
        checks,
    })
}
