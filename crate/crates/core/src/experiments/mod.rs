//! Experiment runner: turns the contraction, comparison, continuous
//! dependence, regularity, and operator-validation checks into
//! reproducible numerical reports with pass/fail/inconclusive verdicts.
//!
//! Every experiment is a deterministic function of (config, seed); sub-runs
//! share only immutable inputs and results are merged in fixed key order.

mod contdep;
mod contraction;
mod opcheck;
mod regularity;

pub use contdep::{run_contdep, ContdepConfig, ContdepReport, ContdepRung, PerturbationKind};
pub use contraction::{
    run_comparison, run_contraction, ComparisonReport, ContractionReport, PairExperimentConfig,
    PairRecord,
};
pub use opcheck::{run_opcheck, KappaRow, OpcheckConfig, OpcheckReport, SymbolRow};
pub use regularity::{
    run_regularity, Classification, RegularityConfig, RegularityReport, ResolutionCurve,
};

use serde::Serialize;

/// Outcome of one named check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &str, status: Status, detail: String) -> Self {
        CheckResult {
            name: name.to_string(),
            status,
            detail,
        }
    }
}

/// Aggregate exit status: 0 all pass, 1 any fail, 2 inconclusive only.
pub fn exit_code(checks: &[CheckResult]) -> i32 {
    if checks.iter().any(|c| c.status == Status::Fail) {
        1
    } else if checks.iter().any(|c| c.status == Status::Inconclusive) {
        2
    } else {
        0
    }
}

/// Log-log least-squares fit: slope, intercept, and r^2.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fit `log y = slope log x + intercept`, skipping nonpositive samples.
/// Returns `None` with fewer than two usable points.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let r_squared = if ss_tot <= 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Some(RateFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_fit_recovers_power_law() {
        let xs: Vec<f64> = (1..=8).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(1.7)).collect();
        let fit = fit_loglog(&xs, &ys).unwrap();
        assert!((fit.slope - 1.7).abs() < 1e-12);
        assert!((fit.intercept - 3.0_f64.ln()).abs() < 1e-12);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn loglog_fit_skips_zeros() {
        let xs = [0.0, 1.0, 2.0, 4.0];
        let ys = [0.0, 2.0, 4.0, 8.0];
        let fit = fit_loglog(&xs, &ys).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exit_codes() {
        let pass = CheckResult::new("a", Status::Pass, String::new());
        let inc = CheckResult::new("b", Status::Inconclusive, String::new());
        let fail = CheckResult::new("c", Status::Fail, String::new());
        assert_eq!(exit_code(&[pass.clone()]), 0);
        assert_eq!(exit_code(&[pass.clone(), inc.clone()]), 2);
        assert_eq!(exit_code(&[pass, inc, fail]), 1);
    }
}
