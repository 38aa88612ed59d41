//! Explicit monotone finite-difference scheme for
//! `d/dt u + d/dx f(u) = d/dx(a(u) d/dx u) + L[u] + rho d2/dx2 u`.
//!
//! Convection uses the Engquist-Osher two-point flux, degenerate diffusion
//! the conservative second difference of `A(u) = int_0^u a` (no division by
//! `a`, so `a = 0` on state intervals costs nothing), the jump operator the
//! grid-aligned quadrature, and `rho` an optional vanishing-viscosity knob.
//! Under the CFL bound the update is order-preserving in every stencil
//! argument, which is what the contraction and comparison checks lean on.
//!
//! The state-dependent primitives (`A`, the EO split integrals) are
//! evaluated by adaptive quadrature once and memoized on a 4096-point
//! lookup table over the state interval of the data; inside the hot loop
//! a table read replaces a quadrature call.

use crate::grid::{Field, Grid1D, Trajectory};
use crate::levy::LevyQuadrature;
use crate::models::{DiffusionModel, FluxModel};
use crate::nonlocal::apply_levy;
use crate::quad::integrate_loose;
use crate::{Error, Result};

/// Everything a solve needs: grid, models, operator, knobs, output times.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub grid: Grid1D,
    pub flux: FluxModel,
    pub diffusion: DiffusionModel,
    pub quad: Option<LevyQuadrature>,
    /// Vanishing-viscosity parameter; 0 by default (the scheme's own
    /// numerical viscosity plays its role).
    pub rho: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub snapshot_times: Vec<f64>,
}

impl SolverConfig {
    pub fn new(grid: Grid1D, flux: FluxModel, diffusion: DiffusionModel) -> Self {
        SolverConfig {
            grid,
            flux,
            diffusion,
            quad: None,
            rho: 0.0,
            t_end: 0.1,
            cfl_safety: 0.9,
            snapshot_times: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0) {
            return Err(Error::InvalidConfig(format!("rho = {} < 0", self.rho)));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::InvalidConfig(format!("t_end = {}", self.t_end)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cfl_safety = {} outside (0, 1]",
                self.cfl_safety
            )));
        }
        if let Some(q) = &self.quad {
            let h = self.grid.spacing();
            if (q.spacing() - h).abs() > 1e-12 * h {
                return Err(Error::SpacingMismatch {
                    quad: q.spacing(),
                    field: h,
                });
            }
            if q.tail_cut() > 0.5 * self.grid.length() {
                log::warn!(
                    "tail_cut = {} exceeds half the domain length {}; large jumps wrap \
                     (exact under periodicity, but self-interaction is possible)",
                    q.tail_cut(),
                    self.grid.length()
                );
            }
        }
        for w in self.snapshot_times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidConfig("snapshot times not increasing".into()));
            }
        }
        if let Some(&t) = self.snapshot_times.first() {
            if t <= 0.0 {
                return Err(Error::InvalidConfig("snapshot times must be positive".into()));
            }
        }
        if let Some(&t) = self.snapshot_times.last() {
            if t > self.t_end * (1.0 + 1e-12) {
                return Err(Error::InvalidConfig(format!(
                    "snapshot time {t} beyond t_end {}",
                    self.t_end
                )));
            }
        }
        Ok(())
    }
}

/// Engquist-Osher numeric flux
/// `F(a, b) = f(0) + int_0^a max(f', 0) + int_0^b min(f', 0)`;
/// consistent, nondecreasing in `a`, nonincreasing in `b`.
pub fn numeric_flux(flux: &FluxModel, a: f64, b: f64) -> f64 {
    let up = integrate_loose(&|s: f64| flux.d_eval(s).max(0.0), 0.0, a, 1e-12).value;
    let down = integrate_loose(&|s: f64| flux.d_eval(s).min(0.0), 0.0, b, 1e-12).value;
    flux.eval(0.0) + up + down
}

const TABLE_POINTS: usize = 4096;

/// Memoized primitives over the state interval.
struct ModelTables {
    lo: f64,
    inv_step: f64,
    a_primitive: Vec<f64>,
    eo_plus: Vec<f64>,
    eo_minus: Vec<f64>,
    f0: f64,
    max_a: f64,
    lip_f: f64,
}

impl ModelTables {
    fn build(flux: &FluxModel, diff: &DiffusionModel, lo: f64, hi: f64) -> Self {
        let n = TABLE_POINTS;
        let step = (hi - lo) / (n - 1) as f64;
        let us: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();

        // Cumulative integrals: exact monotonicity because each increment
        // integrates a signed-definite integrand.
        let cumulative = |f: &dyn Fn(f64) -> f64, anchor: f64| -> Vec<f64> {
            let mut vals = Vec::with_capacity(n);
            let mut acc = integrate_loose(&f, 0.0, anchor, 1e-13).value;
            vals.push(acc);
            for i in 1..n {
                acc += integrate_loose(&f, us[i - 1], us[i], 1e-13).value;
                vals.push(acc);
            }
            vals
        };
        let a_primitive = cumulative(&|u| diff.a(u), lo);
        let eo_plus = cumulative(&|u| flux.d_eval(u).max(0.0), lo);
        let eo_minus = cumulative(&|u| flux.d_eval(u).min(0.0), lo);

        let max_a = us.iter().map(|&u| diff.a(u)).fold(0.0, f64::max);
        let lip_f = us.iter().map(|&u| flux.d_eval(u).abs()).fold(0.0, f64::max);

        ModelTables {
            lo,
            inv_step: 1.0 / step,
            a_primitive,
            eo_plus,
            eo_minus,
            f0: flux.eval(0.0),
            max_a,
            lip_f,
        }
    }

    #[inline]
    fn lookup(&self, table: &[f64], u: f64) -> f64 {
        let t = ((u - self.lo) * self.inv_step).clamp(0.0, (TABLE_POINTS - 1) as f64);
        let i = (t as usize).min(TABLE_POINTS - 2);
        let frac = t - i as f64;
        table[i] + frac * (table[i + 1] - table[i])
    }
}

/// Precomputed marching state for one config and one state interval.
pub struct Stepper<'a> {
    config: &'a SolverConfig,
    tables: ModelTables,
    dt_stable: f64,
}

/// State interval of the data, padded so the maximum principle keeps all
/// later values strictly inside the lookup tables.
pub fn state_interval(fields: &[&Field]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for f in fields {
        lo = lo.min(f.min());
        hi = hi.max(f.max());
    }
    (lo - 1e-6, hi + 1e-6)
}

impl<'a> Stepper<'a> {
    pub fn new(config: &'a SolverConfig, interval: (f64, f64)) -> Result<Self> {
        config.validate()?;
        let (lo, hi) = interval;
        if !(hi > lo) {
            return Err(Error::InvalidConfig(format!(
                "empty state interval [{lo}, {hi}]"
            )));
        }
        let tables = ModelTables::build(&config.flux, &config.diffusion, lo, hi);
        let h = config.grid.spacing();
        let (small_moment, total_rate) = config
            .quad
            .as_ref()
            .map_or((0.0, 0.0), |q| (q.small_moment(), q.total_rate()));
        let denom = 2.0 * tables.lip_f / h
            + 2.0 * (tables.max_a + config.rho + small_moment) / (h * h)
            + total_rate;
        let dt_stable = if denom > 0.0 {
            let dt = config.cfl_safety / denom;
            if dt < 1e-12 {
                return Err(Error::TimestepUnderflow { dt });
            }
            dt.min(config.t_end.max(f64::MIN_POSITIVE))
        } else {
            config.t_end.max(f64::MIN_POSITIVE)
        };
        Ok(Stepper {
            config,
            tables,
            dt_stable,
        })
    }

    /// Largest dt for which the update map is monotone in every argument.
    pub fn cfl_dt(&self) -> f64 {
        self.dt_stable
    }

    /// One forward-Euler update. Requires `dt <= cfl_dt()`.
    pub fn step(&self, u: &Field, dt: f64) -> Result<Field> {
        if dt > self.dt_stable * (1.0 + 1e-9) {
            return Err(Error::InvalidConfig(format!(
                "dt = {dt:e} exceeds the monotone bound {:e}",
                self.dt_stable
            )));
        }
        let grid = self.config.grid;
        if u.grid() != grid {
            return Err(Error::GridMismatch("field off the config grid".into()));
        }
        let n = grid.n_cells();
        let h = grid.spacing();
        let v = u.values();
        let t = &self.tables;

        let lu = match &self.config.quad {
            Some(q) => Some(apply_levy(u, q)?),
            None => None,
        };

        let eo_p: Vec<f64> = v.iter().map(|&x| t.lookup(&t.eo_plus, x)).collect();
        let eo_m: Vec<f64> = v.iter().map(|&x| t.lookup(&t.eo_minus, x)).collect();
        let a_v: Vec<f64> = v.iter().map(|&x| t.lookup(&t.a_primitive, x)).collect();

        // face[i] = F(u_i, u_{i+1})
        let face: Vec<f64> = (0..n)
            .map(|i| t.f0 + eo_p[i] + eo_m[(i + 1) % n])
            .collect();

        let lam = dt / h;
        let mu = dt / (h * h);
        let rho_mu = self.config.rho * mu;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            let conv = lam * (face[i] - face[im]);
            let diff = mu * (a_v[ip] - 2.0 * a_v[i] + a_v[im]);
            let jump = lu.as_ref().map_or(0.0, |l| dt * l.values()[i]);
            let visc = rho_mu * (v[ip] - 2.0 * v[i] + v[im]);
            let next = v[i] - conv + diff + jump + visc;
            if !next.is_finite() {
                return Err(Error::Instability {
                    cell: i,
                    time: u.time(),
                });
            }
            out.push(next);
        }
        Field::new(grid, out, u.time() + dt)
    }
}

/// One-shot update (builds tables from the field's own range); marching
/// code should use [`Stepper`] or [`solve`] instead.
pub fn step(u: &Field, config: &SolverConfig, dt: f64) -> Result<Field> {
    Stepper::new(config, state_interval(&[u]))?.step(u, dt)
}

/// CFL-stable dt for this config and initial datum.
pub fn cfl_dt(config: &SolverConfig, u0: &Field) -> Result<f64> {
    Ok(Stepper::new(config, state_interval(&[u0]))?.cfl_dt())
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub dt_nominal: f64,
    pub n_steps: usize,
}

fn requested_times(config: &SolverConfig) -> Vec<f64> {
    let mut times: Vec<f64> = config
        .snapshot_times
        .iter()
        .cloned()
        .filter(|&t| t > 0.0 && t <= config.t_end * (1.0 + 1e-12))
        .collect();
    if times.is_empty() && config.t_end > 0.0 {
        times.push(config.t_end);
    }
    times
}

fn march(
    stepper: &Stepper,
    u0: &Field,
    targets: &[f64],
) -> Result<(Vec<Field>, usize)> {
    let mut snapshots = vec![u0.clone()];
    let mut u = u0.clone();
    let mut t = 0.0_f64;
    let mut n_steps = 0;
    let dt_nominal = stepper.cfl_dt();
    for &target in targets {
        while t < target - 1e-14 * target.max(1.0) {
            let dt = dt_nominal.min(target - t);
            u = stepper.step(&u, dt)?;
            t += dt;
            n_steps += 1;
        }
        // Snapshot times are hit exactly by the shortened final sub-step.
        u = u.with_time(target);
        t = target;
        snapshots.push(u.clone());
    }
    Ok((snapshots, n_steps))
}

/// March the scheme to `t_end`, recording the requested snapshot times
/// (plus the initial datum at t = 0).
pub fn solve(config: &SolverConfig, u0: &Field) -> Result<Trajectory> {
    solve_with_stats(config, u0).map(|(t, _)| t)
}

pub fn solve_with_stats(config: &SolverConfig, u0: &Field) -> Result<(Trajectory, SolveStats)> {
    if u0.grid() != config.grid {
        return Err(Error::GridMismatch("initial datum off the config grid".into()));
    }
    if config.t_end == 0.0 {
        return Ok((
            Trajectory::new(vec![u0.clone()])?,
            SolveStats {
                dt_nominal: 0.0,
                n_steps: 0,
            },
        ));
    }
    let stepper = Stepper::new(config, state_interval(&[u0]))?;
    let targets = requested_times(config);
    let (snapshots, n_steps) = march(&stepper, u0, &targets)?;
    Ok((
        Trajectory::new(snapshots)?,
        SolveStats {
            dt_nominal: stepper.cfl_dt(),
            n_steps,
        },
    ))
}

/// Evolve two initial data under the identical config and the shared CFL
/// step, so trajectories are time-aligned for contraction and comparison
/// checks.
pub fn solve_pair(
    config: &SolverConfig,
    u0: &Field,
    v0: &Field,
) -> Result<(Trajectory, Trajectory)> {
    if u0.grid() != config.grid || v0.grid() != config.grid {
        return Err(Error::GridMismatch("initial data off the config grid".into()));
    }
    if config.t_end == 0.0 {
        return Ok((
            Trajectory::new(vec![u0.clone()])?,
            Trajectory::new(vec![v0.clone()])?,
        ));
    }
    let stepper = Stepper::new(config, state_interval(&[u0, v0]))?;
    let targets = requested_times(config);
    let (su, _) = march(&stepper, u0, &targets)?;
    let (sv, _) = march(&stepper, v0, &targets)?;
    Ok((Trajectory::new(su)?, Trajectory::new(sv)?))
}
