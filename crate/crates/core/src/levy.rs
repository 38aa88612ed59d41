//! Symmetric pure-jump Levy measures `pi(dz) = m(z) dz`, their moment
//! structure, the characteristic exponent, and grid-aligned jump quadratures.
//!
//! The admissibility condition is finiteness of
//! `int (z^2 1_{|z|<1} + |z| 1_{|z|>=1}) m(z) dz`. Jumps below a split
//! radius `kappa` are absorbed into a second-moment diffusion surrogate;
//! jumps above it become weights on grid-multiple nodes `z_j = j h`, so the
//! shifted field `u(x + z_j)` is an exact array rotation.

use std::fmt;
use std::sync::Arc;

use crate::quad::{self, integrate, integrate_loose};
use crate::{Error, Result};

/// Shared density closure for custom measures, sampled on `z > 0` for
/// symmetric measures or on signed `z` for one-sided test measures.
#[derive(Clone)]
pub struct DensityFn(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl DensityFn {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        DensityFn(Arc::new(f))
    }

    pub fn eval(&self, z: f64) -> f64 {
        (self.0)(z)
    }
}

impl fmt::Debug for DensityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DensityFn(..)")
    }
}

/// A pure-jump Levy measure with density `m(z)`.
///
/// The paper-facing convention is even symmetry `m(z) = m(-z)`; the signed
/// custom variant exists only as a test device for the drift compensator
/// and adjointness counterexamples.
#[derive(Debug, Clone)]
pub enum LevyMeasure {
    /// `m(z) = strength |z|^{-1-alpha} 1_{|z|<1}`, `alpha` in (0, 2).
    FractionalTruncated { alpha: f64, strength: f64 },
    /// `m(z) = strength |z|^{-1-alpha}` on all of R \ {0}; `alpha` in (1, 2)
    /// so the first-moment tail is finite.
    FractionalFull { alpha: f64, strength: f64 },
    /// Tabulated or closure density with compact support `|z| <= support_radius`.
    Custom {
        density: DensityFn,
        support_radius: f64,
        symmetric: bool,
    },
}

/// Numerical values of the admissibility integrals.
#[derive(Debug, Clone, Copy)]
pub struct MomentReport {
    /// `int_{|z|<1} z^2 m(z) dz`
    pub second_moment_inner: f64,
    /// `int_{|z|>=1} |z| m(z) dz`
    pub first_moment_outer: f64,
}

const OVERFLOW_GUARD: f64 = 1e12;
const QTOL: f64 = 1e-12;

impl LevyMeasure {
    pub fn fractional_truncated(alpha: f64, strength: f64) -> Result<Self> {
        if !(0.0 < alpha && alpha < 2.0) {
            return Err(Error::InvalidMeasure(format!(
                "truncated kernel needs alpha in (0,2), got {alpha}"
            )));
        }
        if !(strength > 0.0) {
            return Err(Error::InvalidMeasure(format!("strength {strength} <= 0")));
        }
        Ok(LevyMeasure::FractionalTruncated { alpha, strength })
    }

    pub fn fractional_full(alpha: f64, strength: f64) -> Result<Self> {
        if !(1.0 < alpha && alpha < 2.0) {
            return Err(Error::InvalidMeasure(format!(
                "full kernel needs alpha in (1,2) for a finite first-moment tail, got {alpha}"
            )));
        }
        if !(strength > 0.0) {
            return Err(Error::InvalidMeasure(format!("strength {strength} <= 0")));
        }
        Ok(LevyMeasure::FractionalFull { alpha, strength })
    }

    /// Even density sampled on `z > 0`, mirrored to `z < 0`.
    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(
        density: F,
        support_radius: f64,
    ) -> Result<Self> {
        if !(support_radius > 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "support radius {support_radius} <= 0"
            )));
        }
        Ok(LevyMeasure::Custom {
            density: DensityFn::new(density),
            support_radius,
            symmetric: true,
        })
    }

    /// Signed density with the symmetry convention disabled; test device
    /// for drift and adjointness checks, not an admissible model measure.
    pub fn custom_signed<F: Fn(f64) -> f64 + Send + Sync + 'static>(
        density: F,
        support_radius: f64,
    ) -> Result<Self> {
        if !(support_radius > 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "support radius {support_radius} <= 0"
            )));
        }
        Ok(LevyMeasure::Custom {
            density: DensityFn::new(density),
            support_radius,
            symmetric: false,
        })
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            LevyMeasure::Custom { symmetric, .. } => *symmetric,
            _ => true,
        }
    }

    /// Density `m(z)` at a signed jump size `z != 0`.
    pub fn density_at(&self, z: f64) -> f64 {
        let az = z.abs();
        if az == 0.0 {
            return 0.0;
        }
        match self {
            LevyMeasure::FractionalTruncated { alpha, strength } => {
                if az < 1.0 {
                    strength * az.powf(-1.0 - alpha)
                } else {
                    0.0
                }
            }
            LevyMeasure::FractionalFull { alpha, strength } => {
                strength * az.powf(-1.0 - alpha)
            }
            LevyMeasure::Custom {
                density,
                support_radius,
                symmetric,
            } => {
                if az > *support_radius {
                    0.0
                } else if *symmetric {
                    density.eval(az)
                } else {
                    density.eval(z)
                }
            }
        }
    }

    /// Upper end of the support on the positive axis; `None` when unbounded.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            LevyMeasure::FractionalTruncated { .. } => Some(1.0),
            LevyMeasure::FractionalFull { .. } => None,
            LevyMeasure::Custom { support_radius, .. } => Some(*support_radius),
        }
    }

    /// Check the admissibility integrals and report their values.
    pub fn check_integrability(&self) -> Result<MomentReport> {
        let report = match self {
            LevyMeasure::FractionalTruncated { alpha, strength } => MomentReport {
                second_moment_inner: 2.0 * strength / (2.0 - alpha),
                first_moment_outer: 0.0,
            },
            LevyMeasure::FractionalFull { alpha, strength } => MomentReport {
                second_moment_inner: 2.0 * strength / (2.0 - alpha),
                first_moment_outer: 2.0 * strength / (alpha - 1.0),
            },
            LevyMeasure::Custom { support_radius, .. } => {
                let inner_end = support_radius.min(1.0);
                let inner = self.quad_both_sides(|z| z * z, 0.0, inner_end)?;
                let outer = if *support_radius > 1.0 {
                    self.quad_both_sides(|z| z.abs(), 1.0, *support_radius)?
                } else {
                    0.0
                };
                MomentReport {
                    second_moment_inner: inner,
                    first_moment_outer: outer,
                }
            }
        };
        if !report.second_moment_inner.is_finite()
            || !report.first_moment_outer.is_finite()
            || report.second_moment_inner.abs() > OVERFLOW_GUARD
            || report.first_moment_outer.abs() > OVERFLOW_GUARD
        {
            return Err(Error::InvalidMeasure(format!(
                "moment integrals diverge: inner {:e}, outer {:e}",
                report.second_moment_inner, report.first_moment_outer
            )));
        }
        Ok(report)
    }

    /// Total first moment `int |z| m(z) dz`; `None` when infinite.
    pub fn first_moment_total(&self) -> Option<f64> {
        match self {
            LevyMeasure::FractionalTruncated { alpha, strength } => {
                if *alpha >= 1.0 {
                    None // int_0^1 z^{-alpha} diverges
                } else {
                    Some(2.0 * strength / (1.0 - alpha))
                }
            }
            LevyMeasure::FractionalFull { .. } => None, // alpha > 1 near 0
            LevyMeasure::Custom { support_radius, .. } => {
                let q = integrate_loose(
                    &|z: f64| z.abs() * (self.density_at(z) + self.density_at(-z)),
                    0.0,
                    *support_radius,
                    QTOL,
                );
                (q.value.is_finite() && q.value < OVERFLOW_GUARD && q.abs_error < 1e-6)
                    .then_some(q.value)
            }
        }
    }

    /// Total second moment `int z^2 m(z) dz`; `None` when infinite.
    pub fn second_moment_total(&self) -> Option<f64> {
        match self {
            LevyMeasure::FractionalTruncated { alpha, strength } => {
                Some(2.0 * strength / (2.0 - alpha))
            }
            LevyMeasure::FractionalFull { .. } => None, // tail z^{1-alpha} diverges
            LevyMeasure::Custom { support_radius, .. } => {
                let q = integrate_loose(
                    &|z: f64| z * z * (self.density_at(z) + self.density_at(-z)),
                    0.0,
                    *support_radius,
                    QTOL,
                );
                (q.value.is_finite() && q.value < OVERFLOW_GUARD && q.abs_error < 1e-6)
                    .then_some(q.value)
            }
        }
    }

    /// `int_{|z| <= kappa} z^2 m(z) dz`, the small-jump diffusion surrogate.
    pub fn small_jump_moment(&self, kappa: f64) -> f64 {
        assert!(kappa > 0.0, "kappa must be positive");
        match self {
            LevyMeasure::FractionalTruncated { alpha, strength } => {
                let k = kappa.min(1.0);
                2.0 * strength * k.powf(2.0 - alpha) / (2.0 - alpha)
            }
            LevyMeasure::FractionalFull { alpha, strength } => {
                2.0 * strength * kappa.powf(2.0 - alpha) / (2.0 - alpha)
            }
            LevyMeasure::Custom { support_radius, .. } => {
                let end = kappa.min(*support_radius);
                self.quad_both_sides(|z| z * z, 0.0, end)
                    .unwrap_or(f64::INFINITY)
            }
        }
    }

    /// Drift compensator `int_{kappa < |z| < 1} z m(z) dz`; identically zero
    /// for even densities and for `kappa >= 1`.
    pub fn drift_correction(&self, kappa: f64) -> f64 {
        assert!(kappa > 0.0, "kappa must be positive");
        if kappa >= 1.0 || self.is_symmetric() {
            return 0.0;
        }
        // Signed custom measure: integrate each side of the origin.
        let pos = integrate_loose(&|z: f64| z * self.density_at(z), kappa, 1.0, QTOL).value;
        let neg = integrate_loose(&|z: f64| z * self.density_at(z), -1.0, -kappa, QTOL).value;
        pos + neg
    }

    /// Characteristic exponent `psi(omega) = int (cos(omega z) - 1) m(z) dz`,
    /// nonpositive for symmetric measures. The singular region near z = 0 is
    /// handled through the second-order expansion of `cos - 1`; for the full
    /// fractional kernel the oscillatory tail is summed by parts.
    pub fn levy_symbol(&self, omega: f64) -> Result<f64> {
        if omega == 0.0 {
            return Ok(0.0);
        }
        let w = omega.abs();
        match self {
            LevyMeasure::Custom {
                symmetric: false, ..
            } => {
                // Real part only; one-sided densities are test devices.
                let r = self.support_end().expect("custom support is finite");
                let f = |z: f64| crate::quad::cos_minus_one(w * z) * self.density_at(z);
                let pos = half_line_symbol(&f, |d| self.sided_second_moment(d, 1.0), w, r)?;
                let fneg = |z: f64| crate::quad::cos_minus_one(w * z) * self.density_at(-z);
                let neg =
                    half_line_symbol(&fneg, |d| self.sided_second_moment(d, -1.0), w, r)?;
                Ok(pos + neg)
            }
            _ => {
                let f = |z: f64| crate::quad::cos_minus_one(w * z) * self.density_at(z);
                let finite_end = self.support_end();
                let r = finite_end.unwrap_or_else(|| (30.0 / w).max(2.0));
                let mut val =
                    2.0 * half_line_symbol(&f, |d| 0.5 * self.small_jump_moment(d), w, r)?;
                if finite_end.is_none() {
                    // Oscillatory tail of the full kernel beyond r.
                    let (alpha, strength) = match self {
                        LevyMeasure::FractionalFull { alpha, strength } => (*alpha, *strength),
                        _ => unreachable!("only the full kernel has unbounded support"),
                    };
                    let cos_part =
                        strength * w.powf(alpha) * quad::cosine_tail(1.0 + alpha, w * r);
                    let one_part = strength * r.powf(-alpha) / alpha;
                    val += 2.0 * (cos_part - one_part);
                }
                Ok(val)
            }
        }
    }

    /// One-sided second moment `int_0^d z^2 m(s z) dz` with `s = +-1`.
    fn sided_second_moment(&self, d: f64, side: f64) -> f64 {
        integrate_loose(&|z: f64| z * z * self.density_at(side * z), 0.0, d, QTOL).value
    }

    /// Mass of the density over a positive-axis cell `[a, b]`, `0 < a <= b`.
    fn cell_mass(&self, a: f64, b: f64, side: f64) -> Result<f64> {
        debug_assert!(0.0 < a && a <= b);
        match self {
            LevyMeasure::FractionalTruncated { alpha, strength } => {
                let b = b.min(1.0);
                if a >= b {
                    return Ok(0.0);
                }
                Ok(strength / alpha * (a.powf(-alpha) - b.powf(-alpha)))
            }
            LevyMeasure::FractionalFull { alpha, strength } => {
                Ok(strength / alpha * (a.powf(-alpha) - b.powf(-alpha)))
            }
            LevyMeasure::Custom { support_radius, .. } => {
                let b = b.min(*support_radius);
                if a >= b {
                    return Ok(0.0);
                }
                Ok(integrate(|z| self.density_at(side * z), a, b, QTOL)?.value)
            }
        }
    }

    /// First-moment mass dropped beyond `tail_cut`:
    /// `int_{|z| > tail_cut} |z| m(z) dz`.
    fn dropped_tail(&self, tail_cut: f64) -> f64 {
        match self {
            LevyMeasure::FractionalTruncated { alpha, strength } => {
                if tail_cut >= 1.0 {
                    0.0
                } else if (*alpha - 1.0).abs() < 1e-12 {
                    2.0 * strength * (1.0 / tail_cut).ln()
                } else {
                    2.0 * strength * (tail_cut.powf(1.0 - alpha) - 1.0) / (alpha - 1.0)
                }
            }
            LevyMeasure::FractionalFull { alpha, strength } => {
                2.0 * strength * tail_cut.powf(1.0 - alpha) / (alpha - 1.0)
            }
            LevyMeasure::Custom { support_radius, .. } => {
                if tail_cut >= *support_radius {
                    0.0
                } else {
                    let pos = integrate_loose(
                        &|z: f64| z * self.density_at(z),
                        tail_cut,
                        *support_radius,
                        QTOL,
                    )
                    .value;
                    let neg = integrate_loose(
                        &|z: f64| z.abs() * self.density_at(-z),
                        tail_cut,
                        *support_radius,
                        QTOL,
                    )
                    .value;
                    pos + neg
                }
            }
        }
    }

    fn quad_both_sides<G: Fn(f64) -> f64>(&self, weight: G, a: f64, b: f64) -> Result<f64> {
        let pos = integrate(|z| weight(z) * self.density_at(z), a, b, QTOL)?.value;
        let neg = integrate(|z| weight(-z) * self.density_at(-z), a, b, QTOL)?.value;
        Ok(pos + neg)
    }

    /// Build a grid-aligned quadrature: nodes `z_j = j h` with
    /// `kappa < |z_j| <= tail_cut`, cell-integral weights tiling
    /// `(kappa, tail_cut]`, the sub-`kappa` mass absorbed into the
    /// diffusion surrogate, and the drift compensator for one-sided
    /// test measures.
    pub fn build_quadrature(
        &self,
        spacing: f64,
        kappa: f64,
        tail_cut: f64,
    ) -> Result<LevyQuadrature> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidQuadrature(format!("spacing {spacing} <= 0")));
        }
        if kappa < spacing * (1.0 - 1e-12) {
            return Err(Error::InvalidQuadrature(format!(
                "kappa = {kappa} < spacing = {spacing}: small jumps must be sub-grid"
            )));
        }
        if tail_cut <= kappa {
            return Err(Error::InvalidQuadrature(format!(
                "tail_cut = {tail_cut} <= kappa = {kappa}"
            )));
        }

        let h = spacing;
        let j_min = (kappa / h * (1.0 + 1e-12)).floor() as i64 + 1;
        let j_max = (tail_cut / h * (1.0 + 1e-12)).floor() as i64;

        let mut node_offsets = Vec::new();
        let mut weights = Vec::new();
        let mut push_side = |side: f64| -> Result<()> {
            for j in j_min..=j_max {
                // Cells tile (kappa, tail_cut]: the first reaches down to
                // kappa and the last up to tail_cut.
                let lo = if j == j_min { kappa } else { (j as f64 - 0.5) * h };
                let hi = if j == j_max {
                    tail_cut
                } else {
                    (j as f64 + 0.5) * h
                };
                if hi <= lo {
                    continue;
                }
                let w = self.cell_mass(lo, hi, side)?;
                if w > 0.0 {
                    node_offsets.push(j * side as i64);
                    weights.push(w);
                }
            }
            Ok(())
        };
        push_side(1.0)?;
        if self.is_symmetric() {
            // Mirror exactly so w_{-j} = w_j bit-for-bit.
            let m = node_offsets.len();
            for i in 0..m {
                node_offsets.push(-node_offsets[i]);
                weights.push(weights[i]);
            }
        } else {
            push_side(-1.0)?;
        }

        let small_moment = self.small_jump_moment(kappa);
        let drift = if kappa < 1.0 { self.drift_correction(kappa) } else { 0.0 };
        let quad = LevyQuadrature {
            spacing,
            node_offsets,
            weights,
            split_radius: kappa,
            small_moment,
            drift,
            tail_cut,
            tail_mass_dropped: self.dropped_tail(tail_cut),
        };
        if quad.is_degenerate() {
            log::warn!(
                "degenerate measure: no quadrature nodes and zero small-jump moment \
                 (kappa = {kappa}, tail_cut = {tail_cut})"
            );
        }
        Ok(quad)
    }
}

/// The pair of measure distances entering the continuous-dependence
/// estimate: `int_{|z|<1} z^2 |m - m~| dz` and
/// `int_{|z|>=1} |z| |m - m~| dz` (integrated out to `cap` when either
/// measure has unbounded support). `None` stands for the zero measure.
pub fn measure_distances(
    m: Option<&LevyMeasure>,
    m_tilde: Option<&LevyMeasure>,
    cap: f64,
) -> (f64, f64) {
    let diff = |z: f64| {
        let a = m.map_or(0.0, |mm| mm.density_at(z));
        let b = m_tilde.map_or(0.0, |mm| mm.density_at(z));
        (a - b).abs()
    };
    let end = [m, m_tilde]
        .iter()
        .flatten()
        .map(|mm| mm.support_end().unwrap_or(cap))
        .fold(1.0_f64, f64::max)
        .min(cap);
    let small = integrate_loose(&|z: f64| z * z * (diff(z) + diff(-z)), 0.0, 1.0, 1e-11).value;
    let large = if end > 1.0 {
        integrate_loose(&|z: f64| z * (diff(z) + diff(-z)), 1.0, end, 1e-11).value
    } else {
        0.0
    };
    (small, large)
}

/// Symbol integral over a positive half line `(0, r]` with the singular
/// origin replaced by the second-order moment surrogate.
fn half_line_symbol<F, M>(f: &F, half_moment: M, w: f64, r: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
{
    // |cos x - 1 + x^2/2| <= x^4/24, so replacing the integrand on (0, delta]
    // by -w^2 z^2 m / 2 costs at most w^4 delta^2 sigma^2(delta) / 24.
    let mut delta = (24.0 * QTOL).sqrt() / (w * w).max(1.0);
    delta = delta.min(0.5 * r);
    let near = -0.5 * w * w * (half_moment(delta) * 2.0) * 0.5;
    let mid = integrate(f, delta, r, QTOL)?;
    Ok(near + mid.value)
}

/// Grid-aligned discretization of a Levy measure: jump nodes on grid
/// multiples, nonnegative rate weights, the split radius, the sub-grid
/// second moment, and the drift compensator.
#[derive(Debug, Clone)]
pub struct LevyQuadrature {
    spacing: f64,
    node_offsets: Vec<i64>,
    weights: Vec<f64>,
    split_radius: f64,
    small_moment: f64,
    drift: f64,
    tail_cut: f64,
    tail_mass_dropped: f64,
}

impl LevyQuadrature {
    /// Assemble a quadrature from explicit parts (test device for atomic
    /// measures and hand-built operators).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        spacing: f64,
        node_offsets: Vec<i64>,
        weights: Vec<f64>,
        split_radius: f64,
        small_moment: f64,
        drift: f64,
        tail_cut: f64,
        tail_mass_dropped: f64,
    ) -> Result<Self> {
        if node_offsets.len() != weights.len() {
            return Err(Error::InvalidQuadrature(format!(
                "{} offsets vs {} weights",
                node_offsets.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidQuadrature("negative or non-finite weight".into()));
        }
        if node_offsets.iter().any(|j| *j == 0) {
            return Err(Error::InvalidQuadrature("zero node offset".into()));
        }
        if !(spacing > 0.0) || !(small_moment >= 0.0) {
            return Err(Error::InvalidQuadrature(
                "spacing must be positive and small_moment nonnegative".into(),
            ));
        }
        Ok(LevyQuadrature {
            spacing,
            node_offsets,
            weights,
            split_radius,
            small_moment,
            drift,
            tail_cut,
            tail_mass_dropped,
        })
    }

    /// The zero operator (no jumps, no surrogate).
    pub fn empty(spacing: f64) -> Self {
        LevyQuadrature {
            spacing,
            node_offsets: Vec::new(),
            weights: Vec::new(),
            split_radius: spacing,
            small_moment: 0.0,
            drift: 0.0,
            tail_cut: spacing,
            tail_mass_dropped: 0.0,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn node_offsets(&self) -> &[i64] {
        &self.node_offsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn split_radius(&self) -> f64 {
        self.split_radius
    }

    pub fn small_moment(&self) -> f64 {
        self.small_moment
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn tail_cut(&self) -> f64 {
        self.tail_cut
    }

    pub fn tail_mass_dropped(&self) -> f64 {
        self.tail_mass_dropped
    }

    /// Total jump rate `sum_j w_j`.
    pub fn total_rate(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `sum_j w_j z_j^2`, the resolved second moment.
    pub fn node_second_moment(&self) -> f64 {
        self.node_offsets
            .iter()
            .zip(&self.weights)
            .map(|(j, w)| {
                let z = *j as f64 * self.spacing;
                w * z * z
            })
            .sum()
    }

    pub fn is_degenerate(&self) -> bool {
        self.node_offsets.is_empty() && self.small_moment == 0.0
    }
}
