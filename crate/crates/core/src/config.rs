//! TOML run configuration. Sections: `[grid] [flux] [diffusion] [levy]
//! [solver] [experiment]`; unknown keys are errors.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::grid::Grid1D;
use crate::levy::{LevyMeasure, LevyQuadrature};
use crate::models::{DiffusionModel, FluxModel};
use crate::solver::SolverConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    #[serde(default)]
    pub flux: FluxSection,
    #[serde(default)]
    pub diffusion: DiffusionSection,
    #[serde(default)]
    pub levy: LevySection,
    pub solver: SolverSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_cells: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSection {
    pub kind: String,
    /// Advection speed for `kind = "linear"`.
    pub speed: Option<f64>,
}

impl Default for FluxSection {
    fn default() -> Self {
        FluxSection {
            kind: "none".into(),
            speed: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSection {
    pub kind: String,
    pub scale: Option<f64>,
    pub exponent: Option<u32>,
    pub offset: Option<f64>,
    pub smoothing: Option<f64>,
}

impl Default for DiffusionSection {
    fn default() -> Self {
        DiffusionSection {
            kind: "none".into(),
            scale: None,
            exponent: None,
            offset: None,
            smoothing: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevySection {
    pub kind: String,
    pub alpha: Option<f64>,
    pub strength: Option<f64>,
    /// CSV file (`z,m` on z > 0, mirrored) for `kind = "custom"`.
    pub table: Option<PathBuf>,
    /// Split radius in grid cells (default 1: kappa = spacing).
    #[serde(default = "default_kappa_cells")]
    pub kappa_cells: usize,
    pub tail_cut: Option<f64>,
}

fn default_kappa_cells() -> usize {
    1
}

impl Default for LevySection {
    fn default() -> Self {
        LevySection {
            kind: "none".into(),
            alpha: None,
            strength: None,
            table: None,
            kappa_cells: 1,
            tail_cut: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub t_end: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

fn default_cfl() -> f64 {
    0.9
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct ExperimentSection {
    pub kind: String,
    pub seed: u64,
    pub pairs: usize,
    pub amplitude: f64,
    pub clip: [f64; 2],
    /// contdep: which single ingredient to perturb.
    pub perturbation: String,
    pub magnitudes: Vec<f64>,
    pub times: Vec<f64>,
    /// regularity: resolutions to compare.
    pub resolutions: Vec<usize>,
    pub checkpoints: usize,
    pub sharpness: f64,
    /// initial datum for `solve`: "random" | "square" | "sine" | "steep_sine".
    pub initial: String,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            kind: "solve".into(),
            seed: 0,
            pairs: 20,
            amplitude: 1.0,
            clip: [-1.0, 1.0],
            perturbation: "flux".into(),
            magnitudes: vec![0.04, 0.02, 0.01],
            times: vec![0.01, 0.02, 0.05, 0.1],
            resolutions: vec![128, 256, 512],
            checkpoints: 20,
            sharpness: 3.0,
            initial: "random".into(),
        }
    }
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_str(&text)?;
        // Resolve a custom density table relative to the config file.
        if let Some(table) = &cfg.levy.table {
            if table.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.levy.table = Some(dir.join(table));
                }
            }
        }
        Ok(cfg)
    }

    pub fn build_grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.grid.n_cells, self.grid.length)
    }

    pub fn build_flux(&self) -> Result<FluxModel> {
        match self.flux.kind.as_str() {
            "none" => Ok(FluxModel::zero()),
            "burgers" => Ok(FluxModel::burgers()),
            "linear" => {
                let c = self.flux.speed.ok_or_else(|| {
                    Error::ConfigParse("flux.kind = \"linear\" needs flux.speed".into())
                })?;
                Ok(FluxModel::linear(c))
            }
            k => Err(Error::ConfigParse(format!("unknown flux kind {k:?}"))),
        }
    }

    pub fn build_diffusion(&self) -> Result<DiffusionModel> {
        let scale = self.diffusion.scale;
        match self.diffusion.kind.as_str() {
            "none" => Ok(DiffusionModel::none()),
            "constant" => {
                let s = scale.ok_or_else(|| {
                    Error::ConfigParse("diffusion.kind = \"constant\" needs scale".into())
                })?;
                Ok(DiffusionModel::constant(s.sqrt()))
            }
            "power" => {
                let s = scale.ok_or_else(|| {
                    Error::ConfigParse("diffusion.kind = \"power\" needs scale".into())
                })?;
                match self.diffusion.exponent {
                    Some(2) | None => Ok(DiffusionModel::quadratic(s)),
                    Some(e) => Err(Error::ConfigParse(format!(
                        "power diffusion supports exponent 2 (sigma stays Lipschitz), got {e}"
                    ))),
                }
            }
            "threshold" => {
                let s = scale.unwrap_or(1.0);
                let offset = self.diffusion.offset.unwrap_or(0.5);
                let smoothing = self.diffusion.smoothing.unwrap_or(0.1);
                Ok(DiffusionModel::threshold(offset, s, smoothing))
            }
            k => Err(Error::ConfigParse(format!("unknown diffusion kind {k:?}"))),
        }
    }

    pub fn build_measure(&self) -> Result<Option<LevyMeasure>> {
        match self.levy.kind.as_str() {
            "none" => Ok(None),
            "fractional_truncated" => {
                let alpha = require(self.levy.alpha, "levy.alpha")?;
                let strength = require(self.levy.strength, "levy.strength")?;
                Ok(Some(LevyMeasure::fractional_truncated(alpha, strength)?))
            }
            "fractional_full" => {
                let alpha = require(self.levy.alpha, "levy.alpha")?;
                let strength = require(self.levy.strength, "levy.strength")?;
                Ok(Some(LevyMeasure::fractional_full(alpha, strength)?))
            }
            "custom" => {
                let table = self.levy.table.as_ref().ok_or_else(|| {
                    Error::ConfigParse("levy.kind = \"custom\" needs levy.table".into())
                })?;
                Ok(Some(load_density_table(table)?))
            }
            k => Err(Error::ConfigParse(format!("unknown levy kind {k:?}"))),
        }
    }

    pub fn build_quadrature(&self, grid: Grid1D) -> Result<Option<LevyQuadrature>> {
        let Some(measure) = self.build_measure()? else {
            return Ok(None);
        };
        let h = grid.spacing();
        let kappa = self.levy.kappa_cells.max(1) as f64 * h;
        let tail_cut = self.levy.tail_cut.unwrap_or_else(|| {
            measure
                .support_end()
                .unwrap_or(8.0 * grid.length())
                .max(1.0)
        });
        Ok(Some(measure.build_quadrature(h, kappa, tail_cut)?))
    }

    pub fn build_solver_config(&self) -> Result<SolverConfig> {
        let grid = self.build_grid()?;
        let cfg = SolverConfig {
            grid,
            flux: self.build_flux()?,
            diffusion: self.build_diffusion()?,
            quad: self.build_quadrature(grid)?,
            rho: self.solver.rho,
            t_end: self.solver.t_end,
            cfl_safety: self.solver.cfl_safety,
            snapshot_times: self.solver.snapshot_times.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn require(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::ConfigParse(format!("missing {name}")))
}

/// Load a sampled density `z,m` (z > 0) and mirror it evenly; linear
/// interpolation between samples, zero outside the sampled range.
fn load_density_table(path: &Path) -> Result<LevyMeasure> {
    let text = std::fs::read_to_string(path)?;
    let mut zs: Vec<f64> = Vec::new();
    let mut ms: Vec<f64> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || lineno == 0 && line.starts_with(|c: char| c.is_alphabetic()) {
            continue;
        }
        let mut cols = line.split(',');
        let z = cols
            .next()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::ConfigParse(format!("{path:?} line {lineno}: bad z")))?;
        let m = cols
            .next()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::ConfigParse(format!("{path:?} line {lineno}: bad m")))?;
        if z <= 0.0 || m < 0.0 {
            return Err(Error::ConfigParse(format!(
                "{path:?} line {lineno}: need z > 0 and m >= 0"
            )));
        }
        zs.push(z);
        ms.push(m);
    }
    if zs.len() < 2 {
        return Err(Error::ConfigParse(format!(
            "{path:?}: need at least 2 density samples"
        )));
    }
    let mut order: Vec<usize> = (0..zs.len()).collect();
    order.sort_by(|&a, &b| zs[a].total_cmp(&zs[b]));
    let zs: Vec<f64> = order.iter().map(|&i| zs[i]).collect();
    let ms: Vec<f64> = order.iter().map(|&i| ms[i]).collect();
    let support = *zs.last().expect("non-empty");
    let table = Arc::new((zs, ms));
    LevyMeasure::custom(
        move |z: f64| {
            let (zs, ms) = table.as_ref();
            if z < zs[0] || z > *zs.last().expect("non-empty") {
                return 0.0;
            }
            let idx = zs.partition_point(|&s| s < z).min(zs.len() - 1).max(1);
            let (z0, z1) = (zs[idx - 1], zs[idx]);
            let (m0, m1) = (ms[idx - 1], ms[idx]);
            if z1 == z0 {
                return m0;
            }
            m0 + (m1 - m0) * (z - z0) / (z1 - z0)
        },
        support,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[grid]
n_cells = 128
length = 1.0

[flux]
kind = "burgers"

[diffusion]
kind = "power"
exponent = 2
scale = 0.1

[levy]
kind = "fractional_truncated"
alpha = 0.5
strength = 1.0

[solver]
t_end = 0.1
snapshot_times = [0.05, 0.1]

[experiment]
kind = "contraction"
seed = 7
pairs = 5
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = RunConfig::from_str(SAMPLE).unwrap();
        let sc = cfg.build_solver_config().unwrap();
        assert_eq!(sc.grid.n_cells(), 128);
        assert!(sc.quad.is_some());
        assert_eq!(cfg.experiment.kind, "contraction");
        assert_eq!(cfg.experiment.seed, 7);
        assert_eq!(cfg.experiment.pairs, 5);
        // Defaults fill in.
        assert_eq!(cfg.experiment.amplitude, 1.0);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let bad = SAMPLE.replace("[solver]", "[solver]\nwhatever = 3");
        let err = RunConfig::from_str(&bad);
        assert!(err.is_err());
    }

    #[test]
    fn measure_spec_variants() {
        let linear = r#"
[grid]
n_cells = 64
length = 2.0

[flux]
kind = "linear"
speed = 0.7

[solver]
t_end = 0.05
"#;
        let cfg = RunConfig::from_str(linear).unwrap();
        let sc = cfg.build_solver_config().unwrap();
        assert!(sc.quad.is_none());
        assert_eq!(sc.flux.eval(2.0), 1.4);
    }

    #[test]
    fn custom_density_table() {
        let dir = tempfile::tempdir().unwrap();
        let table = dir.path().join("density.csv");
        std::fs::write(&table, "z,m\n0.1,1.0\n0.5,1.0\n1.0,0.0\n").unwrap();
        let m = load_density_table(&table).unwrap();
        assert_eq!(m.density_at(0.3), 1.0);
        assert_eq!(m.density_at(-0.3), 1.0); // mirrored
        assert!((m.density_at(0.75) - 0.5).abs() < 1e-12);
        assert_eq!(m.density_at(1.5), 0.0);
        assert_eq!(m.density_at(0.05), 0.0); // below first sample
    }

    #[test]
    fn bad_exponent_rejected() {
        let bad = SAMPLE.replace("exponent = 2", "exponent = 3");
        let cfg = RunConfig::from_str(&bad).unwrap();
        assert!(cfg.build_diffusion().is_err());
    }
}
