//! Entropy-condition audits on computed trajectories.
//!
//! Evaluates, by space-time Riemann sums over the stored snapshots, the
//! two dissipation functionals (local gradient-of-zeta and nonlocal squared
//! jump increments), the weak entropy inequality residual, the chain-rule
//! defect, and the square-increment integrability functional.
//!
//! The test functions are a closed-form family (periodic bump in x times a
//! smooth cutoff ramp in t), so their derivatives are exact and the time
//! integral of `d/dt phi` telescopes exactly; the one discretized object on
//! the test-function side is `L[phi]`, which deliberately uses the same
//! discrete operator as the solver.

use rayon::prelude::*;

use crate::grid::{bv_seminorm, Field, Trajectory};
use crate::levy::{LevyMeasure, LevyQuadrature};
use crate::models::{
    eta_bar_double_prime, CenteredEntropy, DiffusionModel, Entropy, FluxModel,
    KruzkovRegularization, KruzkovVariant,
};
use crate::nonlocal::apply_levy;
use crate::quad::integrate_loose;
use crate::{Error, Result};

/// Nonnegative space-time test function `phi(t, x) = bump(x) ramp(t)`.
///
/// The bump is a periodic von Mises profile `exp(k (cos(2 pi (x-c)/L) - 1))`
/// (entire in cos, so uniform-grid sums of its derivatives vanish to
/// rounding), the ramp a cubic smoothstep that reaches zero at `ramp_end`.
#[derive(Debug, Clone, Copy)]
pub enum TestFunction {
    Bump {
        center: f64,
        width: f64,
        ramp_end: f64,
        length: f64,
    },
    /// `phi = 1`: no localization, no cutoff. Used by the standalone
    /// functionals; not admissible for the entropy inequality (phi(T) != 0).
    Uniform,
}

impl TestFunction {
    pub fn bump(center: f64, width: f64, ramp_end: f64, length: f64) -> Result<Self> {
        if !(width > 0.0 && ramp_end > 0.0 && length > 0.0) {
            return Err(Error::InvalidConfig(
                "test function needs positive width, ramp_end, length".into(),
            ));
        }
        Ok(TestFunction::Bump {
            center,
            width,
            ramp_end,
            length,
        })
    }

    fn concentration(width: f64, length: f64) -> f64 {
        (length / width) * (length / width)
    }

    pub fn space(&self, x: f64) -> f64 {
        match self {
            TestFunction::Uniform => 1.0,
            TestFunction::Bump {
                center,
                width,
                length,
                ..
            } => {
                let k = Self::concentration(*width, *length);
                let th = 2.0 * std::f64::consts::PI * (x - center) / length;
                (k * (th.cos() - 1.0)).exp()
            }
        }
    }

    pub fn space_dx(&self, x: f64) -> f64 {
        match self {
            TestFunction::Uniform => 0.0,
            TestFunction::Bump {
                center,
                width,
                length,
                ..
            } => {
                let k = Self::concentration(*width, *length);
                let c = 2.0 * std::f64::consts::PI / length;
                let th = c * (x - center);
                -k * th.sin() * c * (k * (th.cos() - 1.0)).exp()
            }
        }
    }

    pub fn space_dxx(&self, x: f64) -> f64 {
        match self {
            TestFunction::Uniform => 0.0,
            TestFunction::Bump {
                center,
                width,
                length,
                ..
            } => {
                let k = Self::concentration(*width, *length);
                let c = 2.0 * std::f64::consts::PI / length;
                let th = c * (x - center);
                c * c * (k * k * th.sin() * th.sin() - k * th.cos())
                    * (k * (th.cos() - 1.0)).exp()
            }
        }
    }

    pub fn ramp(&self, t: f64) -> f64 {
        match self {
            TestFunction::Uniform => 1.0,
            TestFunction::Bump { ramp_end, .. } => {
                if t >= *ramp_end {
                    0.0
                } else {
                    let xi = 1.0 - t / ramp_end;
                    xi * xi * (3.0 - 2.0 * xi)
                }
            }
        }
    }

    /// Exact antiderivative `R(t) = int_0^t ramp`.
    pub fn ramp_integral(&self, t: f64) -> f64 {
        match self {
            TestFunction::Uniform => t,
            TestFunction::Bump { ramp_end, .. } => {
                let r = *ramp_end;
                let s = |xi: f64| xi * xi * xi - 0.5 * xi * xi * xi * xi;
                if t >= r {
                    r * 0.5
                } else {
                    r * (0.5 - s(1.0 - t / r))
                }
            }
        }
    }

    pub fn is_admissible_for(&self, t_final: f64) -> bool {
        match self {
            TestFunction::Uniform => false,
            TestFunction::Bump { ramp_end, .. } => *ramp_end <= t_final * (1.0 + 1e-12),
        }
    }
}

/// Which form of the entropy inequality is being audited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditMode {
    /// Both dissipation functionals on the right-hand side.
    Full,
    /// The nonlocal dissipation dropped; requires an integrable first
    /// moment or (finite second moment + BV trajectory).
    Simpler,
}

/// One audited inequality: left-hand side, both dissipation functionals,
/// and the signed slack `residual = lhs - n_u - m_u` (or `lhs - n_u`).
#[derive(Debug, Clone, Copy)]
pub struct DissipationReport {
    pub n_u: f64,
    pub m_u: f64,
    pub lhs: f64,
    pub residual: f64,
    pub mode: AuditMode,
}

/// Inputs shared by all audit evaluations of one configuration.
pub struct AuditInputs<'a> {
    pub flux: &'a FluxModel,
    pub diffusion: &'a DiffusionModel,
    pub levy: Option<(&'a LevyQuadrature, &'a LevyMeasure)>,
}

const TABLE_POINTS: usize = 4096;

/// Cumulative lookup table of `int integrand` over the state interval.
struct Lookup {
    lo: f64,
    inv_step: f64,
    vals: Vec<f64>,
}

impl Lookup {
    fn cumulative<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Lookup {
        let n = TABLE_POINTS;
        let step = (hi - lo) / (n - 1) as f64;
        let mut vals = Vec::with_capacity(n);
        let mut acc = 0.0;
        vals.push(0.0);
        for i in 1..n {
            let a = lo + step * (i - 1) as f64;
            let b = lo + step * i as f64;
            acc += integrate_loose(&f, a, b, 1e-13).value;
            vals.push(acc);
        }
        Lookup {
            lo,
            inv_step: 1.0 / step,
            vals,
        }
    }

    #[inline]
    fn at(&self, u: f64) -> f64 {
        let t = ((u - self.lo) * self.inv_step).clamp(0.0, (TABLE_POINTS - 1) as f64);
        let i = (t as usize).min(TABLE_POINTS - 2);
        let frac = t - i as f64;
        self.vals[i] + frac * (self.vals[i + 1] - self.vals[i])
    }
}

fn trajectory_interval(traj: &Trajectory) -> (f64, f64) {
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
    (lo - 1e-6, hi + 1e-6)
}

/// Central difference of a composed field `g(u)` given its point values.
fn central_diff(vals: &[f64], h: f64) -> Vec<f64> {
    let n = vals.len();
    (0..n)
        .map(|i| (vals[(i + 1) % n] - vals[(i + n - 1) % n]) / (2.0 * h))
        .collect()
}

/// Parabolic dissipation
/// `n_u = sum_{t,x} eta''(u) sum_k (D_x zeta_k(u))^2 phi dt dx`.
pub fn parabolic_dissipation(
    traj: &Trajectory,
    ent: &CenteredEntropy,
    diff: &DiffusionModel,
    phi: &TestFunction,
) -> f64 {
    let (lo, hi) = trajectory_interval(traj);
    let zeta_tables: Vec<Lookup> = (0..diff.k())
        .map(|k| Lookup::cumulative(|u| diff.sigma_at(k, u), lo, hi))
        .collect();
    let grid = traj.grid();
    let h = grid.spacing();
    let bump: Vec<f64> = (0..grid.n_cells())
        .map(|i| phi.space(grid.cell_center(i)))
        .collect();

    let snaps = traj.snapshots();
    let mut total = 0.0;
    for k in 0..snaps.len() - 1 {
        let w_t = phi.ramp_integral(snaps[k + 1].time()) - phi.ramp_integral(snaps[k].time());
        if w_t == 0.0 {
            continue;
        }
        let u = snaps[k].values();
        let mut space_sum = 0.0;
        for table in &zeta_tables {
            let zvals: Vec<f64> = u.iter().map(|&x| table.at(x)).collect();
            let dz = central_diff(&zvals, h);
            for i in 0..u.len() {
                space_sum += ent.eta_double_prime(u[i]) * dz[i] * dz[i] * bump[i];
            }
        }
        total += w_t * h * space_sum;
    }
    total
}

/// Nonlocal dissipation
/// `m_u = sum_{t,x,j} etabar''(u_i, u_{i+j}) (u_{i+j} - u_i)^2 w_j phi`
/// plus the sub-grid surrogate `eta''(u) sigma_k^2/2 (D_x u)^2 phi`.
pub fn fractional_dissipation(
    traj: &Trajectory,
    ent: &CenteredEntropy,
    quad: &LevyQuadrature,
    phi: &TestFunction,
) -> f64 {
    let grid = traj.grid();
    let h = grid.spacing();
    let n = grid.n_cells();
    let bump: Vec<f64> = (0..n).map(|i| phi.space(grid.cell_center(i))).collect();
    let offsets = quad.node_offsets();
    let weights = quad.weights();
    let sm = quad.small_moment();

    let snaps = traj.snapshots();
    let mut total = 0.0;
    for k in 0..snaps.len() - 1 {
        let w_t = phi.ramp_integral(snaps[k + 1].time()) - phi.ramp_integral(snaps[k].time());
        if w_t == 0.0 {
            continue;
        }
        let u = snaps[k].values();
        let cell = |i: usize| -> f64 {
            let mut acc = 0.0;
            let u_i = u[i];
            for (j, w) in offsets.iter().zip(weights) {
                let u_j = u[(i as i64 + j).rem_euclid(n as i64) as usize];
                let inc = u_j - u_i;
                if inc != 0.0 {
                    acc += w * eta_bar_double_prime(ent, u_i, u_j) * inc * inc;
                }
            }
            if sm > 0.0 {
                let du = (u[(i + 1) % n] - u[(i + n - 1) % n]) / (2.0 * h);
                acc += ent.eta_double_prime(u_i) * 0.5 * sm * du * du;
            }
            acc * bump[i]
        };
        let space_sum: f64 = if n * offsets.len().max(1) > (1 << 14) {
            (0..n).into_par_iter().map(cell).sum()
        } else {
            (0..n).map(cell).sum()
        };
        total += w_t * h * space_sum;
    }
    total
}

/// Decide whether the simplified inequality (nonlocal dissipation dropped)
/// applies: either the measure has a finite total first moment, or a finite
/// total second moment paired with a BV-bounded trajectory.
fn check_simpler_mode(
    levy: Option<(&LevyQuadrature, &LevyMeasure)>,
    traj: &Trajectory,
) -> Result<()> {
    let Some((_, measure)) = levy else {
        return Ok(()); // no jump part at all
    };
    if measure.first_moment_total().is_some() {
        return Ok(());
    }
    if measure.second_moment_total().is_some() {
        let bv_max = traj
            .snapshots()
            .iter()
            .map(bv_seminorm)
            .fold(0.0_f64, f64::max);
        if bv_max.is_finite() {
            return Ok(());
        }
        return Err(Error::SimplerModeUnavailable(
            "finite |z|^2 moment but unbounded trajectory BV seminorm".into(),
        ));
    }
    Err(Error::SimplerModeUnavailable(
        "neither |z| pi(dz) nor |z|^2 pi(dz) is totally finite".into(),
    ))
}

/// Evaluate the entropy inequality for one (entropy, test function) pair.
///
/// The left-hand side consists of the time term (exact ramp increments, so
/// it telescopes), the convective and diffusive flux terms, the nonlocal
/// term `eta(u) L[phi]`, and the initial term; the report carries the
/// residual `lhs - n_u - m_u` (or `lhs - n_u` in simpler mode), which a
/// genuine entropy solution keeps nonnegative up to discretization error.
pub fn entropy_residual(
    traj: &Trajectory,
    ent: &CenteredEntropy,
    inputs: &AuditInputs,
    phi: &TestFunction,
    mode: AuditMode,
) -> Result<DissipationReport> {
    let t_final = traj.last().time();
    if !phi.is_admissible_for(t_final) {
        return Err(Error::InvalidConfig(format!(
            "test function does not vanish by t = {t_final}"
        )));
    }
    if mode == AuditMode::Simpler {
        check_simpler_mode(inputs.levy, traj)?;
    }

    let grid = traj.grid();
    let h = grid.spacing();
    let n = grid.n_cells();
    let (lo, hi) = trajectory_interval(traj);

    // Entropy fluxes about the entropy's center, memoized.
    let c = ent.center;
    let q_cum = Lookup::cumulative(|xi| ent.eta_prime(xi) * inputs.flux.d_eval(xi), lo, hi);
    let r_cum = Lookup::cumulative(|xi| ent.eta_prime(xi) * inputs.diffusion.a(xi), lo, hi);
    let q_at_c = q_cum.at(c);
    let r_at_c = r_cum.at(c);

    let bump: Vec<f64> = (0..n).map(|i| phi.space(grid.cell_center(i))).collect();
    let bump_dx: Vec<f64> = (0..n).map(|i| phi.space_dx(grid.cell_center(i))).collect();
    let bump_dxx: Vec<f64> = (0..n).map(|i| phi.space_dxx(grid.cell_center(i))).collect();
    let l_bump: Option<Vec<f64>> = match inputs.levy {
        Some((quad, _)) => {
            let bump_field = Field::new(grid, bump.clone(), 0.0)?;
            Some(apply_levy(&bump_field, quad)?.values().to_vec())
        }
        None => None,
    };

    let snaps = traj.snapshots();
    let mut time_term = 0.0;
    let mut conv_term = 0.0;
    let mut diff_term = 0.0;
    let mut nonlocal_term = 0.0;
    for k in 0..snaps.len() - 1 {
        let t0 = snaps[k].time();
        let t1 = snaps[k + 1].time();
        let d_ramp = phi.ramp(t1) - phi.ramp(t0);
        let w_t = phi.ramp_integral(t1) - phi.ramp_integral(t0);
        let u = snaps[k].values();

        let mut eta_bump = 0.0;
        let mut q_dx = 0.0;
        let mut r_dxx = 0.0;
        let mut eta_lphi = 0.0;
        for i in 0..n {
            let eta_u = ent.eta(u[i]);
            eta_bump += eta_u * bump[i];
            q_dx += (q_cum.at(u[i]) - q_at_c) * bump_dx[i];
            r_dxx += (r_cum.at(u[i]) - r_at_c) * bump_dxx[i];
            if let Some(lb) = &l_bump {
                eta_lphi += eta_u * lb[i];
            }
        }
        time_term += h * eta_bump * d_ramp;
        conv_term += h * q_dx * w_t;
        diff_term += h * r_dxx * w_t;
        nonlocal_term += h * eta_lphi * w_t;
    }

    let u0 = traj.initial().values();
    let init_term =
        phi.ramp(0.0) * h * (0..n).map(|i| ent.eta(u0[i]) * bump[i]).sum::<f64>();

    let n_u = parabolic_dissipation(traj, ent, inputs.diffusion, phi);
    let m_u = match inputs.levy {
        Some((quad, _)) => fractional_dissipation(traj, ent, quad, phi),
        None => 0.0,
    };

    let lhs = time_term + conv_term + diff_term + nonlocal_term + init_term;
    let residual = match mode {
        AuditMode::Full => lhs - n_u - m_u,
        AuditMode::Simpler => lhs - n_u,
    };
    Ok(DissipationReport {
        n_u,
        m_u,
        lhs,
        residual,
        mode,
    })
}

/// L2(Q_T) defect of the chain rule:
/// `D_x zeta^{a,psi}(u)` against `psi(u) D_x zeta^a(u)`.
pub fn chain_rule_residual(
    traj: &Trajectory,
    diff: &DiffusionModel,
    psi: &(dyn Fn(f64) -> f64 + Sync),
) -> f64 {
    let (lo, hi) = trajectory_interval(traj);
    let grid = traj.grid();
    let h = grid.spacing();
    let snaps = traj.snapshots();
    let mut total = 0.0;
    for k_comp in 0..diff.k() {
        let plain = Lookup::cumulative(|u| diff.sigma_at(k_comp, u), lo, hi);
        let weighted = Lookup::cumulative(|u| psi(u) * diff.sigma_at(k_comp, u), lo, hi);
        for k in 0..snaps.len() - 1 {
            let dt = snaps[k + 1].time() - snaps[k].time();
            let u = snaps[k].values();
            let z_plain: Vec<f64> = u.iter().map(|&x| plain.at(x)).collect();
            let z_weight: Vec<f64> = u.iter().map(|&x| weighted.at(x)).collect();
            let d_plain = central_diff(&z_plain, h);
            let d_weight = central_diff(&z_weight, h);
            let mut s = 0.0;
            for i in 0..u.len() {
                let defect = d_weight[i] - psi(u[i]) * d_plain[i];
                s += defect * defect;
            }
            total += dt * h * s;
        }
    }
    total.sqrt()
}

/// Square-increment functional
/// `sum_{t,x,j} w_j (u(x + z_j) - u(x))^2 + sigma_k^2 (D_x u)^2`,
/// the Riemann-sum surrogate of the jump-integrability condition. Equals
/// twice the nonlocal dissipation with the square entropy and `phi = 1`.
pub fn square_increment_functional(traj: &Trajectory, quad: &LevyQuadrature) -> f64 {
    let grid = traj.grid();
    let h = grid.spacing();
    let n = grid.n_cells();
    let offsets = quad.node_offsets();
    let weights = quad.weights();
    let sm = quad.small_moment();
    let snaps = traj.snapshots();
    let mut total = 0.0;
    for k in 0..snaps.len() - 1 {
        let dt = snaps[k + 1].time() - snaps[k].time();
        let u = snaps[k].values();
        let mut s = 0.0;
        for i in 0..n {
            for (j, w) in offsets.iter().zip(weights) {
                let inc = u[(i as i64 + j).rem_euclid(n as i64) as usize] - u[i];
                s += w * inc * inc;
            }
            let du = (u[(i + 1) % n] - u[(i + n - 1) % n]) / (2.0 * h);
            s += sm * du * du;
        }
        total += dt * h * s;
    }
    total
}

/// The audited entropy battery: the square entropy, regularized Kruzkov
/// pairs at two widths over thresholds spanning the state interval, and a
/// clipped exponential.
pub fn standard_battery(lo: f64, hi: f64) -> Vec<CenteredEntropy> {
    let mut out = vec![
        CenteredEntropy::new(Entropy::Square, 0.0),
        CenteredEntropy::new(
            Entropy::ExpClipped {
                cap: hi.abs().max(1.0) + 1.0,
            },
            0.0,
        ),
    ];
    let n_thresholds = 9;
    for j in 0..n_thresholds {
        let c = lo + (hi - lo) * (j as f64 + 0.5) / n_thresholds as f64;
        for eps in [1e-1, 1e-2] {
            for variant in [KruzkovVariant::Plus, KruzkovVariant::Minus] {
                let reg = KruzkovRegularization::new(eps, variant).expect("eps > 0");
                out.push(CenteredEntropy::new(Entropy::Kruzkov(reg), c));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::solver::{solve, SolverConfig};

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(n, 1.0).unwrap()
    }

    fn bump_phi(g: Grid1D, t_end: f64) -> TestFunction {
        TestFunction::bump(0.5 * g.length(), 0.3 * g.length(), t_end, g.length()).unwrap()
    }

    #[test]
    fn test_function_closed_forms() {
        let g = grid(128);
        let phi = bump_phi(g, 0.1);
        for i in 0..g.n_cells() {
            assert!(phi.space(g.cell_center(i)) >= 0.0);
        }
        assert_eq!(phi.ramp(0.1), 0.0);
        assert_eq!(phi.ramp(0.0), 1.0);
        // Derivative sums over the periodic grid vanish to rounding.
        let h = g.spacing();
        let s1: f64 =
            (0..g.n_cells()).map(|i| phi.space_dx(g.cell_center(i))).sum::<f64>() * h;
        let s2: f64 =
            (0..g.n_cells()).map(|i| phi.space_dxx(g.cell_center(i))).sum::<f64>() * h;
        assert!(s1.abs() < 1e-13, "sum dx = {s1:e}");
        assert!(s2.abs() < 1e-11, "sum dxx = {s2:e}");
        // Ramp integral is the exact antiderivative.
        let numeric = crate::quad::integrate(|t| phi.ramp(t), 0.0, 0.07, 1e-12)
            .unwrap()
            .value;
        assert!((phi.ramp_integral(0.07) - numeric).abs() < 1e-12);
    }

    #[test]
    fn parabolic_dissipation_trivial_cases() {
        let g = grid(64);
        let u0 = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x).sin()).unwrap();
        let u1 = u0.clone().with_time(0.1);
        let traj = Trajectory::new(vec![u0, u1]).unwrap();
        let phi = bump_phi(g, 0.1);
        let sq = CenteredEntropy::new(Entropy::Square, 0.0);

        // a = 0: zeta constant.
        assert_eq!(
            parabolic_dissipation(&traj, &sq, &DiffusionModel::none(), &phi),
            0.0
        );
        // linear entropy: eta'' = 0.
        let lin = CenteredEntropy::new(Entropy::Linear { slope: 2.0 }, 0.0);
        let d = parabolic_dissipation(&traj, &lin, &DiffusionModel::constant(1.0), &phi);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn parabolic_dissipation_gradient_energy_crosscheck() {
        // a = 1 (zeta(u) = u), eta = z^2/2, phi = 1: equals the plain
        // central-difference gradient energy, independently summed here.
        let g = grid(128);
        let u0 = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x).sin()).unwrap();
        let u1 = u0.clone().with_time(0.05);
        let traj = Trajectory::new(vec![u0.clone(), u1]).unwrap();
        let sq = CenteredEntropy::new(Entropy::Square, 0.0);
        let d = parabolic_dissipation(
            &traj,
            &sq,
            &DiffusionModel::constant(1.0),
            &TestFunction::Uniform,
        );

        let h = g.spacing();
        let v = u0.values();
        let n = v.len();
        let mut direct = 0.0;
        for i in 0..n {
            let du = (v[(i + 1) % n] - v[(i + n - 1) % n]) / (2.0 * h);
            direct += du * du;
        }
        direct *= 0.05 * h; // dt * h, eta'' = 1
        assert!((d - direct).abs() < 1e-6 * direct, "{d} vs {direct}");
    }

    #[test]
    fn fractional_dissipation_constant_trajectory_is_zero() {
        let g = grid(64);
        let m = LevyMeasure::fractional_truncated(0.5, 1.0).unwrap();
        let q = m.build_quadrature(g.spacing(), g.spacing(), 1.0).unwrap();
        let u0 = Field::constant(g, 0.4).unwrap();
        let u1 = u0.clone().with_time(0.1);
        let traj = Trajectory::new(vec![u0, u1]).unwrap();
        let sq = CenteredEntropy::new(Entropy::Square, 0.0);
        assert_eq!(
            fractional_dissipation(&traj, &sq, &q, &TestFunction::Uniform),
            0.0
        );
    }

    #[test]
    fn square_increment_identity() {
        // functional = 2 m_u for eta = z^2/2 and phi = 1 (etabar'' = 1/2).
        let g = grid(96);
        let m = LevyMeasure::fractional_truncated(0.8, 1.0).unwrap();
        let q = m.build_quadrature(g.spacing(), g.spacing(), 1.0).unwrap();
        let pi2 = 2.0 * std::f64::consts::PI;
        let u0 = Field::from_fn(g, |x| (pi2 * x).sin() + 0.3 * (3.0 * pi2 * x).cos()).unwrap();
        let u1 = Field::from_fn(g, |x| 0.7 * (pi2 * x).sin())
            .unwrap()
            .with_time(0.08);
        let traj = Trajectory::new(vec![u0, u1]).unwrap();
        let sq = CenteredEntropy::new(Entropy::Square, 0.0);
        let m_u = fractional_dissipation(&traj, &sq, &q, &TestFunction::Uniform);
        let f = square_increment_functional(&traj, &q);
        assert!(
            (f - 2.0 * m_u).abs() <= 1e-10 * f.max(1.0),
            "{f} vs {}",
            2.0 * m_u
        );
    }

    #[test]
    fn entropy_residual_constant_trajectory_telescopes() {
        let g = grid(64);
        let m = LevyMeasure::fractional_truncated(0.5, 1.0).unwrap();
        let q = m.build_quadrature(g.spacing(), g.spacing(), 1.0).unwrap();
        let c = 0.8;
        let u0 = Field::constant(g, c).unwrap();
        let snaps = vec![
            u0.clone(),
            u0.clone().with_time(0.03),
            u0.clone().with_time(0.07),
            u0.clone().with_time(0.1),
        ];
        let traj = Trajectory::new(snaps).unwrap();
        let flux = FluxModel::burgers();
        let diffusion = DiffusionModel::quadratic(0.2);
        let inputs = AuditInputs {
            flux: &flux,
            diffusion: &diffusion,
            levy: Some((&q, &m)),
        };
        let phi = bump_phi(g, 0.1);
        for ent in [
            CenteredEntropy::new(Entropy::Square, 0.0),
            CenteredEntropy::new(Entropy::ExpClipped { cap: 3.0 }, 0.0),
        ] {
            let rep = entropy_residual(&traj, &ent, &inputs, &phi, AuditMode::Full).unwrap();
            assert_eq!(rep.n_u, 0.0);
            assert_eq!(rep.m_u, 0.0);
            assert!(
                rep.residual.abs() < 1e-10,
                "constant trajectory residual {:e}",
                rep.residual
            );
        }
    }

    #[test]
    fn linear_entropy_collapses_report() {
        let g = grid(64);
        let cfg = SolverConfig {
            t_end: 0.05,
            snapshot_times: vec![0.01, 0.02, 0.03, 0.04, 0.05],
            ..SolverConfig::new(g, FluxModel::burgers(), DiffusionModel::quadratic(0.1))
        };
        let u0 = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x).sin()).unwrap();
        let traj = solve(&cfg, &u0).unwrap();
        let flux = FluxModel::burgers();
        let diffusion = DiffusionModel::quadratic(0.1);
        let inputs = AuditInputs {
            flux: &flux,
            diffusion: &diffusion,
            levy: None,
        };
        let lin = CenteredEntropy::new(Entropy::Linear { slope: 1.0 }, 0.0);
        let phi = bump_phi(g, 0.05);
        let rep = entropy_residual(&traj, &lin, &inputs, &phi, AuditMode::Full).unwrap();
        assert_eq!(rep.n_u, 0.0);
        assert_eq!(rep.m_u, 0.0);
        // Linear entropies dissipate nothing: equality up to discretization.
        assert!(rep.residual.abs() < 2e-3, "residual {:e}", rep.residual);
    }

    #[test]
    fn shock_produces_positive_square_entropy_residual() {
        // Burgers shock: strict entropy dissipation.
        let g = grid(128);
        let cfg = SolverConfig {
            t_end: 0.4,
            snapshot_times: (1..=10).map(|k| 0.04 * k as f64).collect(),
            ..SolverConfig::new(g, FluxModel::burgers(), DiffusionModel::none())
        };
        let u0 = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x).sin()).unwrap();
        let traj = solve(&cfg, &u0).unwrap();
        let flux = FluxModel::burgers();
        let diffusion = DiffusionModel::none();
        let inputs = AuditInputs {
            flux: &flux,
            diffusion: &diffusion,
            levy: None,
        };
        let sq = CenteredEntropy::new(Entropy::Square, 0.0);
        let phi = bump_phi(g, 0.4);
        let rep = entropy_residual(&traj, &sq, &inputs, &phi, AuditMode::Full).unwrap();
        assert!(rep.residual > 1e-3, "residual {:e}", rep.residual);
    }

    #[test]
    fn solver_trajectory_satisfies_kruzkov_inequalities() {
        let g = grid(128);
        let m = LevyMeasure::fractional_truncated(0.5, 1.0).unwrap();
        let q = m.build_quadrature(g.spacing(), g.spacing(), 1.0).unwrap();
        let cfg = SolverConfig {
            quad: Some(q.clone()),
            t_end: 0.1,
            snapshot_times: (1..=10).map(|k| 0.01 * k as f64).collect(),
            ..SolverConfig::new(g, FluxModel::burgers(), DiffusionModel::quadratic(0.1))
        };
        let u0 = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x).sin()).unwrap();
        let traj = solve(&cfg, &u0).unwrap();
        let flux = FluxModel::burgers();
        let diffusion = DiffusionModel::quadratic(0.1);
        let inputs = AuditInputs {
            flux: &flux,
            diffusion: &diffusion,
            levy: Some((&q, &m)),
        };
        let phi = bump_phi(g, 0.1);
        let (lo, hi) = trajectory_interval(&traj);
        for ent in standard_battery(lo, hi) {
            let rep = entropy_residual(&traj, &ent, &inputs, &phi, AuditMode::Full).unwrap();
            assert!(rep.n_u >= 0.0);
            assert!(rep.m_u >= 0.0);
            assert!(
                rep.residual >= -2e-3,
                "entropy {} c={} residual {:e}",
                ent.kind.label(),
                ent.center,
                rep.residual
            );
            // Full vs simpler: residual(full) = residual(simpler) - m_u.
            let simp =
                entropy_residual(&traj, &ent, &inputs, &phi, AuditMode::Simpler).unwrap();
            assert!((rep.residual - (simp.residual - rep.m_u)).abs() < 1e-12);
        }
    }

    #[test]
    fn simpler_mode_rejected_for_full_kernel() {
        // alpha in (1,2): neither |z| nor |z|^2 is totally integrable.
        let g = grid(64);
        let m = LevyMeasure::fractional_full(1.5, 0.3).unwrap();
        let q = m.build_quadrature(g.spacing(), g.spacing(), 4.0).unwrap();
        let u0 = Field::constant(g, 0.0).unwrap();
        let traj = Trajectory::new(vec![u0.clone(), u0.clone().with_time(0.1)]).unwrap();
        let flux = FluxModel::zero();
        let diffusion = DiffusionModel::none();
        let inputs = AuditInputs {
            flux: &flux,
            diffusion: &diffusion,
            levy: Some((&q, &m)),
        };
        let phi = bump_phi(g, 0.1);
        let sq = CenteredEntropy::new(Entropy::Square, 0.0);
        assert!(entropy_residual(&traj, &sq, &inputs, &phi, AuditMode::Simpler).is_err());

        // Truncated alpha < 1 kernel: first moment finite, simpler mode OK.
        let mt = LevyMeasure::fractional_truncated(0.5, 1.0).unwrap();
        let qt = mt.build_quadrature(g.spacing(), g.spacing(), 1.0).unwrap();
        let inputs2 = AuditInputs {
            flux: &flux,
            diffusion: &diffusion,
            levy: Some((&qt, &mt)),
        };
        assert!(entropy_residual(&traj, &sq, &inputs2, &phi, AuditMode::Simpler).is_ok());
    }

    #[test]
    fn chain_rule_trivial_and_refinement() {
        let psi_one = |_: f64| 1.0;
        let psi_u = |u: f64| u;

        // psi = 1: identical composed fields, exactly zero.
        let g = grid(64);
        let diffusion = DiffusionModel::quadratic(0.3);
        let u0 = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x).sin()).unwrap();
        let traj = Trajectory::new(vec![u0.clone(), u0.clone().with_time(0.05)]).unwrap();
        assert_eq!(chain_rule_residual(&traj, &diffusion, &psi_one), 0.0);

        // Constant trajectory: zero.
        let c0 = Field::constant(g, 0.3).unwrap();
        let ctraj = Trajectory::new(vec![c0.clone(), c0.clone().with_time(0.05)]).unwrap();
        assert_eq!(chain_rule_residual(&ctraj, &diffusion, &psi_u), 0.0);

        // Smooth trajectory: residual shrinks under refinement.
        let run = |n: usize| {
            let g = grid(n);
            let cfg = SolverConfig {
                t_end: 0.02,
                snapshot_times: vec![0.005, 0.01, 0.015, 0.02],
                ..SolverConfig::new(g, FluxModel::burgers(), DiffusionModel::quadratic(0.3))
            };
            let u0 =
                Field::from_fn(g, |x| 0.5 * (2.0 * std::f64::consts::PI * x).sin()).unwrap();
            let traj = solve(&cfg, &u0).unwrap();
            chain_rule_residual(&traj, &DiffusionModel::quadratic(0.3), &psi_u)
        };
        let r128 = run(128);
        let r256 = run(256);
        assert!(r256 < r128, "chain rule defect grew: {r128:e} -> {r256:e}");
    }
}
