//! Contraction and comparison experiments: evolve pairs of initial data
//! under one config and check that the positive-part mass and the L1
//! distance never grow, and that cellwise ordering is preserved.

use rayon::prelude::*;

use crate::grid::{l1_distance, positive_part_mass, Trajectory};
use crate::init;
use crate::solver::{solve_pair, SolverConfig};
use crate::{Error, Result};

use super::{CheckResult, Status};

/// A pair experiment: seeded random pairs evolved under `base`.
#[derive(Debug, Clone)]
pub struct PairExperimentConfig {
    pub base: SolverConfig,
    pub n_pairs: usize,
    pub seed: u64,
    pub amplitude: f64,
    pub clip: (f64, f64),
}

/// Distances along one evolved pair.
#[derive(Debug, Clone)]
pub struct PairRecord {
    pub pair_index: usize,
    pub times: Vec<f64>,
    pub l1: Vec<f64>,
    pub ppm_uv: Vec<f64>,
    pub ppm_vu: Vec<f64>,
    /// Worst relative growth of any distance between consecutive snapshots.
    pub max_violation: f64,
}

#[derive(Debug, Clone)]
pub struct ContractionReport {
    pub records: Vec<PairRecord>,
    pub max_violation: f64,
    pub check: CheckResult,
    /// Trajectories kept for downstream audits.
    pub trajectories: Vec<(Trajectory, Trajectory)>,
}

const CONTRACTION_RTOL: f64 = 1e-10;

/// Worst relative growth along a distance sequence; contraction means
/// every value is at most its predecessor.
fn max_growth(series: &[f64], scale: f64) -> f64 {
    let mut worst = 0.0_f64;
    for w in series.windows(2) {
        worst = worst.max((w[1] - w[0]) / scale.max(1e-300));
    }
    worst
}

/// Evolve seeded random pairs and assert the L1 and positive-part
/// contraction along every trajectory pair.
pub fn run_contraction(cfg: &PairExperimentConfig) -> Result<ContractionReport> {
    let results: Vec<(PairRecord, (Trajectory, Trajectory))> = (0..cfg.n_pairs)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let u0 = init::random_band_limited(
                cfg.base.grid,
                cfg.seed.wrapping_add(2 * i as u64),
                8,
                cfg.amplitude,
                cfg.clip,
            )?;
            let v0 = init::random_band_limited(
                cfg.base.grid,
                cfg.seed.wrapping_add(2 * i as u64 + 1),
                8,
                cfg.amplitude,
                cfg.clip,
            )?;
            let (tu, tv) = solve_pair(&cfg.base, &u0, &v0)?;
            let mut times = Vec::new();
            let mut l1 = Vec::new();
            let mut ppm_uv = Vec::new();
            let mut ppm_vu = Vec::new();
            for (su, sv) in tu.snapshots().iter().zip(tv.snapshots()) {
                times.push(su.time());
                l1.push(l1_distance(su, sv)?);
                ppm_uv.push(positive_part_mass(su, sv)?);
                ppm_vu.push(positive_part_mass(sv, su)?);
            }
            let scale = l1[0];
            let max_violation = max_growth(&l1, scale)
                .max(max_growth(&ppm_uv, scale))
                .max(max_growth(&ppm_vu, scale));
            Ok((
                PairRecord {
                    pair_index: i,
                    times,
                    l1,
                    ppm_uv,
                    ppm_vu,
                    max_violation,
                },
                (tu, tv),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::with_capacity(results.len());
    let mut trajectories = Vec::with_capacity(results.len());
    for (r, t) in results {
        records.push(r);
        trajectories.push(t);
    }
    let max_violation = records
        .iter()
        .map(|r| r.max_violation)
        .fold(f64::NEG_INFINITY, f64::max);
    let status = if max_violation <= CONTRACTION_RTOL {
        Status::Pass
    } else {
        Status::Fail
    };
    let check = CheckResult::new(
        "contraction",
        status,
        format!(
            "max relative growth {max_violation:e} over {} pairs (tolerance {CONTRACTION_RTOL:e})",
            records.len()
        ),
    );
    Ok(ContractionReport {
        records,
        max_violation,
        check,
        trajectories,
    })
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub max_ordering_violation: f64,
    pub n_pairs: usize,
    pub check: CheckResult,
}

const COMPARISON_TOL: f64 = 1e-12;

/// Evolve ordered pairs (`v0 = u0 +` nonnegative bump) and assert the
/// cellwise ordering at every snapshot. Rejects crossing initial data.
pub fn run_comparison(cfg: &PairExperimentConfig) -> Result<ComparisonReport> {
    let violations: Vec<f64> = (0..cfg.n_pairs)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let (u0, v0) = init::ordered_pair(
                cfg.base.grid,
                cfg.seed.wrapping_add(i as u64),
                cfg.amplitude,
                cfg.clip,
            )?;
            if u0
                .values()
                .iter()
                .zip(v0.values())
                .any(|(a, b)| a > b)
            {
                return Err(Error::InvalidExperiment(
                    "comparison requires ordered initial data".into(),
                ));
            }
            let (tu, tv) = solve_pair(&cfg.base, &u0, &v0)?;
            let mut worst = 0.0_f64;
            for (su, sv) in tu.snapshots().iter().zip(tv.snapshots()) {
                for (a, b) in su.values().iter().zip(sv.values()) {
                    worst = worst.max(a - b);
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;

    let max_ordering_violation = violations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let status = if max_ordering_violation <= COMPARISON_TOL {
        Status::Pass
    } else {
        Status::Fail
    };
    let check = CheckResult::new(
        "comparison",
        status,
        format!(
            "max cellwise ordering violation {max_ordering_violation:e} over {} pairs \
             (tolerance {COMPARISON_TOL:e})",
            cfg.n_pairs
        ),
    );
    Ok(ComparisonReport {
        max_ordering_violation,
        n_pairs: cfg.n_pairs,
        check,
    })
}
