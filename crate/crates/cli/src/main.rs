//! `levy-hypar`: solve runs and theorem-checking experiments from a TOML
//! config. Exit code 0 = all checks pass, 1 = any failure, 2 =
//! inconclusive only.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use levy_hypar::audit::{
    entropy_residual, standard_battery, AuditInputs, AuditMode, TestFunction,
};
use levy_hypar::config::RunConfig;
use levy_hypar::experiments::{
    exit_code, run_comparison, run_contdep, run_contraction, run_opcheck, run_regularity,
    CheckResult, ContdepConfig, OpcheckConfig, PairExperimentConfig, PerturbationKind,
    RegularityConfig, Status,
};
use levy_hypar::grid::Field;
use levy_hypar::{init, io, solver};

#[derive(Parser)]
#[command(
    name = "levy-hypar",
    version,
    about = "Nonlocal mixed hyperbolic-parabolic solver and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// March the scheme and write one CSV per snapshot plus meta.csv.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// L1 / positive-part contraction on seeded random pairs.
    Contract {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Comparison principle on ordered pairs.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Continuous-dependence scaling for single-ingredient perturbations.
    Contdep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Gradient-blowup probe across resolutions.
    Regularity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Operator validation: adjointness, symbol, kappa split.
    Opcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Entropy audit of a stored trajectory.
    Audit {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "audit.csv")]
        out: PathBuf,
    },
}

fn initial_datum(cfg: &RunConfig, seed: u64) -> anyhow::Result<Field> {
    let grid = cfg.build_grid()?;
    let e = &cfg.experiment;
    let f = match e.initial.as_str() {
        "random" => {
            init::random_band_limited(grid, seed, 8, e.amplitude, (e.clip[0], e.clip[1]))?
        }
        "square" => init::square_wave(grid, 0.0, e.amplitude, 0.25, 0.75)?,
        "sine" => init::sine(grid, e.amplitude, 1)?,
        "steep_sine" => init::steep_sine(grid, e.amplitude, e.sharpness)?,
        other => bail!("unknown initial datum {other:?}"),
    };
    Ok(f)
}

fn pair_config(cfg: &RunConfig, seed: u64) -> anyhow::Result<PairExperimentConfig> {
    Ok(PairExperimentConfig {
        base: cfg.build_solver_config()?,
        n_pairs: cfg.experiment.pairs,
        seed,
        amplitude: cfg.experiment.amplitude,
        clip: (cfg.experiment.clip[0], cfg.experiment.clip[1]),
    })
}

fn finish(out: &Path, checks: &[CheckResult]) -> anyhow::Result<ExitCode> {
    std::fs::create_dir_all(out)?;
    io::write_summary_json(&out.join("summary.json"), checks)?;
    for c in checks {
        println!(
            "{}: {} ({})",
            c.name,
            match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Inconclusive => "inconclusive",
            },
            c.detail
        );
    }
    Ok(ExitCode::from(exit_code(checks) as u8))
}

fn cmd_solve(config: &Path, out: &Path, seed: Option<u64>) -> anyhow::Result<ExitCode> {
    let cfg = RunConfig::load(config)?;
    let sc = cfg.build_solver_config()?;
    let u0 = initial_datum(&cfg, seed.unwrap_or(cfg.experiment.seed))?;
    let (traj, stats) = solver::solve_with_stats(&sc, &u0)?;
    io::write_trajectory(out, &traj, stats.dt_nominal)?;
    println!(
        "wrote {} snapshots to {} (dt = {:e}, {} steps)",
        traj.snapshots().len(),
        out.display(),
        stats.dt_nominal,
        stats.n_steps
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_contract(config: &Path, out: &Path, seed: Option<u64>) -> anyhow::Result<ExitCode> {
    let cfg = RunConfig::load(config)?;
    let pc = pair_config(&cfg, seed.unwrap_or(cfg.experiment.seed))?;
    let report = run_contraction(&pc)?;
    std::fs::create_dir_all(out)?;
    io::write_contraction_csv(&out.join("contraction.csv"), &report)?;
    finish(out, &[report.check.clone()])
}

fn cmd_compare(config: &Path, out: &Path, seed: Option<u64>) -> anyhow::Result<ExitCode> {
    let cfg = RunConfig::load(config)?;
    let pc = pair_config(&cfg, seed.unwrap_or(cfg.experiment.seed))?;
    let report = run_comparison(&pc)?;
    finish(out, &[report.check.clone()])
}

fn cmd_contdep(config: &Path, out: &Path, _seed: Option<u64>) -> anyhow::Result<ExitCode> {
    let cfg = RunConfig::load(config)?;
    let kinds: Vec<PerturbationKind> = match cfg.experiment.perturbation.as_str() {
        "flux" => vec![PerturbationKind::Flux],
        "sigma" => vec![PerturbationKind::Sigma],
        "measure_small" => vec![PerturbationKind::MeasureSmall],
        "measure_large" => vec![PerturbationKind::MeasureLarge],
        "all" => vec![
            PerturbationKind::Flux,
            PerturbationKind::Sigma,
            PerturbationKind::MeasureSmall,
            PerturbationKind::MeasureLarge,
        ],
        other => bail!("unknown perturbation {other:?}"),
    };
    std::fs::create_dir_all(out)?;
    let mut checks = Vec::new();
    for kind in kinds {
        let cc = ContdepConfig {
            kind,
            magnitudes: cfg.experiment.magnitudes.clone(),
            times: cfg.experiment.times.clone(),
            n_cells: cfg.grid.n_cells,
        };
        let report = run_contdep(&cc)?;
        io::write_contdep_csv(&out.join(format!("contdep_{}.csv", kind.label())), &report)?;
        checks.push(report.check.clone());
    }
    finish(out, &checks)
}

fn cmd_regularity(config: &Path, out: &Path, _seed: Option<u64>) -> anyhow::Result<ExitCode> {
    let cfg = RunConfig::load(config)?;
    let rc = RegularityConfig {
        measure: cfg.build_measure()?,
        resolutions: cfg.experiment.resolutions.clone(),
        length: cfg.grid.length,
        t_end: cfg.solver.t_end,
        n_checkpoints: cfg.experiment.checkpoints,
        amplitude: cfg.experiment.amplitude,
        sharpness: cfg.experiment.sharpness,
    };
    let report = run_regularity(&rc)?;
    std::fs::create_dir_all(out)?;
    io::write_regularity_csv(&out.join("regularity.csv"), &report)?;
    finish(out, &[report.check.clone()])
}

fn cmd_opcheck(config: &Path, out: &Path, seed: Option<u64>) -> anyhow::Result<ExitCode> {
    let cfg = RunConfig::load(config)?;
    let measure = cfg
        .build_measure()?
        .context("opcheck needs a levy measure ([levy] kind != \"none\")")?;
    let oc = OpcheckConfig {
        seed: seed.unwrap_or(cfg.experiment.seed),
        length: cfg.grid.length,
        ..OpcheckConfig::standard(measure)
    };
    let report = run_opcheck(&oc)?;
    std::fs::create_dir_all(out)?;
    io::write_opcheck_csv(
        &out.join("opcheck.csv"),
        &report.symbol_rows,
        report.adjoint_max_rel,
    )?;
    io::write_kappa_csv(&out.join("kappa_sweep.csv"), &report.kappa_rows)?;
    println!("adjoint_max_residual={:e}", report.adjoint_max_rel);
    finish(out, &report.checks)
}

fn cmd_audit(traj_dir: &Path, config: &Path, out: &Path) -> anyhow::Result<ExitCode> {
    let cfg = RunConfig::load(config)?;
    let grid = cfg.build_grid()?;
    let traj = io::read_trajectory(traj_dir, grid)?;
    let flux = cfg.build_flux()?;
    let diffusion = cfg.build_diffusion()?;
    let measure = cfg.build_measure()?;
    let quad = cfg.build_quadrature(grid)?;
    let levy = match (&quad, &measure) {
        (Some(q), Some(m)) => Some((q, m)),
        _ => None,
    };
    let inputs = AuditInputs {
        flux: &flux,
        diffusion: &diffusion,
        levy,
    };

    let t_final = traj.last().time();
    let length = grid.length();
    let phis = [
        (
            "phi0",
            TestFunction::bump(0.5 * length, 0.3 * length, t_final, length)?,
        ),
        (
            "phi1",
            TestFunction::bump(0.25 * length, 0.15 * length, 0.8 * t_final, length)?,
        ),
    ];
    let lo = traj
        .snapshots()
        .iter()
        .map(|s| s.min())
        .fold(f64::INFINITY, f64::min);
    let hi = traj
        .snapshots()
        .iter()
        .map(|s| s.max())
        .fold(f64::NEG_INFINITY, f64::max);

    let mut rows = Vec::new();
    let mut min_residual = f64::INFINITY;
    let mut negative_dissipation = false;
    for ent in standard_battery(lo, hi) {
        for (phi_id, phi) in &phis {
            for mode in [AuditMode::Full, AuditMode::Simpler] {
                let rep = match entropy_residual(&traj, &ent, &inputs, phi, mode) {
                    Ok(r) => r,
                    Err(levy_hypar::Error::SimplerModeUnavailable(why)) => {
                        log::info!("simpler mode unavailable: {why}");
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                if rep.n_u < 0.0 || rep.m_u < 0.0 {
                    negative_dissipation = true;
                }
                min_residual = min_residual.min(rep.residual);
                rows.push(io::AuditRow {
                    entropy: ent.kind.label(),
                    c: ent.center,
                    phi_id: phi_id.to_string(),
                    mode: match mode {
                        AuditMode::Full => "full".into(),
                        AuditMode::Simpler => "simpler".into(),
                    },
                    n_u: rep.n_u,
                    m_u: rep.m_u,
                    lhs: rep.lhs,
                    residual: rep.residual,
                });
            }
        }
    }
    io::write_audit_csv(out, &rows)?;
    let check = CheckResult::new(
        "audit_dissipation_nonnegative",
        if negative_dissipation {
            Status::Fail
        } else {
            Status::Pass
        },
        format!(
            "{} rows, min residual {min_residual:e} (gate residuals against \
             two-level refinement drift)",
            rows.len()
        ),
    );
    let out_dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
    finish(&out_dir, &[check])
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { config, out, seed } => cmd_solve(config, out, *seed),
        Command::Contract { config, out, seed } => cmd_contract(config, out, *seed),
        Command::Compare { config, out, seed } => cmd_compare(config, out, *seed),
        Command::Contdep { config, out, seed } => cmd_contdep(config, out, *seed),
        Command::Regularity { config, out, seed } => cmd_regularity(config, out, *seed),
        Command::Opcheck { config, out, seed } => cmd_opcheck(config, out, *seed),
        Command::Audit { traj, config, out } => cmd_audit(traj, config, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
