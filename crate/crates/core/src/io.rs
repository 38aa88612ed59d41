//! CSV and JSON report writers. Field snapshots use the schema `x,u` at
//! full double precision (17 significant digits); every experiment report
//! has a plot-ready CSV form plus a pass/fail entry for `summary.json`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::experiments::{
    CheckResult, ContdepReport, ContractionReport, KappaRow, RegularityReport, SymbolRow,
};
use crate::grid::{bv_seminorm, Field, Grid1D, Trajectory};
use crate::{Error, Result};

/// 17 significant digits: round-trips f64 exactly.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_field_csv(path: &Path, field: &Field) -> Result<()> {
    let mut out = String::from("x,u\n");
    let grid = field.grid();
    for (i, v) in field.values().iter().enumerate() {
        out.push_str(&fmt(grid.cell_center(i)));
        out.push(',');
        out.push_str(&fmt(*v));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_field_csv(path: &Path, grid: Grid1D, time: f64) -> Result<Field> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            continue; // header
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let _x = cols.next();
        let u = cols
            .next()
            .ok_or_else(|| Error::ConfigParse(format!("{path:?} line {lineno}: missing u")))?
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::ConfigParse(format!("{path:?} line {lineno}: {e}")))?;
        values.push(u);
    }
    Field::new(grid, values, time)
}

/// Write one CSV per snapshot plus `meta.csv` with per-snapshot summary
/// statistics and the nominal marching step.
pub fn write_trajectory(dir: &Path, traj: &Trajectory, dt_nominal: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut meta = String::from("time,mass,min,max,bv,dt_used\n");
    for (k, snap) in traj.snapshots().iter().enumerate() {
        write_field_csv(&dir.join(format!("snapshot_{k:04}.csv")), snap)?;
        meta.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt(snap.time()),
            fmt(snap.mass()),
            fmt(snap.min()),
            fmt(snap.max()),
            fmt(bv_seminorm(snap)),
            fmt(dt_nominal)
        ));
    }
    fs::write(dir.join("meta.csv"), meta)?;
    Ok(())
}

/// Read back a trajectory written by [`write_trajectory`].
pub fn read_trajectory(dir: &Path, grid: Grid1D) -> Result<Trajectory> {
    let meta = fs::read_to_string(dir.join("meta.csv"))?;
    let mut snapshots = Vec::new();
    for (k, line) in meta.lines().skip(1).enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let time = line
            .split(',')
            .next()
            .and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| Error::ConfigParse(format!("meta.csv line {}: bad time", k + 1)))?;
        let field = read_field_csv(&dir.join(format!("snapshot_{k:04}.csv")), grid, time)?;
        snapshots.push(field);
    }
    Trajectory::new(snapshots)
}

/// One audited (entropy, threshold, test function, mode) tuple.
#[derive(Debug, Clone)]
pub struct AuditRow {
    pub entropy: String,
    pub c: f64,
    pub phi_id: String,
    pub mode: String,
    pub n_u: f64,
    pub m_u: f64,
    pub lhs: f64,
    pub residual: f64,
}

pub fn write_audit_csv(path: &Path, rows: &[AuditRow]) -> Result<()> {
    let mut out = String::from("entropy,c,phi_id,mode,n_u,m_u,lhs,residual\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.entropy,
            fmt(r.c),
            r.phi_id,
            r.mode,
            fmt(r.n_u),
            fmt(r.m_u),
            fmt(r.lhs),
            fmt(r.residual)
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_opcheck_csv(path: &Path, rows: &[SymbolRow], adjoint_max: f64) -> Result<()> {
    let mut out = String::from("mode,psi_exact,psi_discrete,residual\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.mode,
            fmt(r.psi_exact),
            fmt(r.psi_fine),
            fmt(r.residual_fine)
        ));
    }
    out.push_str(&format!("adjoint_max_residual={adjoint_max:e}\n"));
    fs::write(path, out)?;
    Ok(())
}

pub fn write_kappa_csv(path: &Path, rows: &[KappaRow]) -> Result<()> {
    let mut out = String::from("kappa_cells,kappa,small_moment,deviation\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.kappa_cells,
            fmt(r.kappa),
            fmt(r.small_moment),
            fmt(r.deviation)
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_contraction_csv(path: &Path, report: &ContractionReport) -> Result<()> {
    let mut out = String::from("pair,time,l1,ppm_uv,ppm_vu\n");
    for rec in &report.records {
        for k in 0..rec.times.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                rec.pair_index,
                fmt(rec.times[k]),
                fmt(rec.l1[k]),
                fmt(rec.ppm_uv[k]),
                fmt(rec.ppm_vu[k])
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_contdep_csv(path: &Path, report: &ContdepReport) -> Result<()> {
    let mut out = String::from(
        "ingredient,delta,time,error,dist_w1inf,dist_lip,dist_sigma,dist_measure_small,dist_measure_large\n",
    );
    for rung in &report.rungs {
        for (k, t) in report.times.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                report.kind.label(),
                fmt(rung.delta),
                fmt(*t),
                fmt(rung.errors[k]),
                fmt(rung.dist_w1inf),
                fmt(rung.dist_lip),
                fmt(rung.dist_sigma),
                fmt(rung.dist_measure_small),
                fmt(rung.dist_measure_large)
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_regularity_csv(path: &Path, report: &RegularityReport) -> Result<()> {
    let mut out = String::from("n_cells,time,max_gradient\n");
    for curve in &report.curves {
        for (t, g) in curve.times.iter().zip(&curve.max_gradient) {
            out.push_str(&format!("{},{},{}\n", curve.n_cells, fmt(*t), fmt(*g)));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_summary_json(path: &Path, checks: &[CheckResult]) -> Result<()> {
    let overall = match crate::experiments::exit_code(checks) {
        0 => "pass",
        1 => "fail",
        _ => "inconclusive",
    };
    let body = serde_json::json!({
        "checks": checks,
        "overall": overall,
    });
    let mut f = fs::File::create(path)?;
    writeln!(f, "{}", serde_json::to_string_pretty(&body).expect("serializable"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Status;

    #[test]
    fn field_csv_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid1D::new(64, 1.0).unwrap();
        let f = Field::from_fn(g, |x| (123.456 * x).sin() / 3.0).unwrap();
        let path = dir.path().join("f.csv");
        write_field_csv(&path, &f).unwrap();
        let g2 = read_field_csv(&path, g, 0.0).unwrap();
        assert_eq!(f.values(), g2.values());

        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,u\n"));
    }

    #[test]
    fn trajectory_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid1D::new(32, 2.0).unwrap();
        let u0 = Field::from_fn(g, |x| x.cos()).unwrap();
        let u1 = Field::from_fn(g, |x| (x + 0.3).cos()).unwrap().with_time(0.5);
        let traj = Trajectory::new(vec![u0, u1]).unwrap();
        write_trajectory(dir.path(), &traj, 1e-3).unwrap();
        let back = read_trajectory(dir.path(), g).unwrap();
        assert_eq!(back.snapshots().len(), 2);
        assert_eq!(back.times(), traj.times());
        assert_eq!(back.last().values(), traj.last().values());
    }

    #[test]
    fn summary_json_statuses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.json");
        let checks = vec![
            CheckResult::new("a", Status::Pass, "ok".into()),
            CheckResult::new("b", Status::Inconclusive, "meh".into()),
        ];
        write_summary_json(&path, &checks).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["overall"], "inconclusive");
        assert_eq!(v["checks"][0]["status"], "pass");
    }
}
