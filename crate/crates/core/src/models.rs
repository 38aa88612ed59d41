//! Local nonlinearities: convective flux `f`, diffusion `sigma`/`a` with the
//! primitives `zeta(z) = int_0^z sigma` and `A(z) = int_0^z a`, entropy and
//! entropy-flux triples, and the regularized Kruzkov family.

use std::fmt;
use std::sync::Arc;

use crate::quad::integrate;
use crate::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const QTOL: f64 = 1e-12;
const SAMPLES: usize = 2049;

/// Scalar convective flux with its derivative and a Lipschitz bound valid
/// on the reference state interval `[-2, 2]`; the solver re-samples the
/// bound on the actual state interval of the data.
#[derive(Clone)]
pub struct FluxModel {
    name: String,
    f: ScalarFn,
    f_prime: ScalarFn,
    pub lipschitz_bound: f64,
}

impl fmt::Debug for FluxModel {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "FluxModel({})", self.name)
    }
}

impl FluxModel {
    pub fn new<F, G>(name: &str, f: F, f_prime: G, lipschitz_bound: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        FluxModel {
            name: name.to_string(),
            f: Arc::new(f),
            f_prime: Arc::new(f_prime),
            lipschitz_bound,
        }
    }

    pub fn zero() -> Self {
        FluxModel::new("none", |_| 0.0, |_| 0.0, 0.0)
    }

    /// `f(u) = u^2 / 2`
    pub fn burgers() -> Self {
        FluxModel::new("burgers", |u| 0.5 * u * u, |u| u, 2.0)
    }

    /// `f(u) = c u`
    pub fn linear(c: f64) -> Self {
        FluxModel::new("linear", move |u| c * u, move |_| c, c.abs())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn d_eval(&self, u: f64) -> f64 {
        (self.f_prime)(u)
    }

    /// Sampled Lipschitz bound `max |f'|` on `[lo, hi]`.
    pub fn lipschitz_on(&self, lo: f64, hi: f64) -> f64 {
        sample_max(|u| self.d_eval(u).abs(), lo, hi)
    }

    /// The perturbed flux `f + delta * u` used in continuous-dependence runs.
    pub fn linear_shift(&self, delta: f64) -> FluxModel {
        let f = self.f.clone();
        let fp = self.f_prime.clone();
        FluxModel {
            name: format!("{}+{delta}u", self.name),
            f: Arc::new(move |u| f(u) + delta * u),
            f_prime: Arc::new(move |u| fp(u) + delta),
            lipschitz_bound: self.lipschitz_bound + delta.abs(),
        }
    }

    /// `sup |f - g| + sup |f' - g'|` sampled on `[lo, hi]`.
    pub fn w1_inf_distance(&self, other: &FluxModel, lo: f64, hi: f64) -> f64 {
        sample_max(|u| (self.eval(u) - other.eval(u)).abs(), lo, hi)
            + sample_max(|u| (self.d_eval(u) - other.d_eval(u)).abs(), lo, hi)
    }

    /// Lipschitz seminorm of the difference, `sup |f' - g'|` on `[lo, hi]`.
    pub fn lip_distance(&self, other: &FluxModel, lo: f64, hi: f64) -> f64 {
        sample_max(|u| (self.d_eval(u) - other.d_eval(u)).abs(), lo, hi)
    }
}

fn sample_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let mut m = 0.0_f64;
    for i in 0..SAMPLES {
        let u = lo + (hi - lo) * i as f64 / (SAMPLES - 1) as f64;
        m = m.max(f(u));
    }
    m
}

/// Diffusion given through its square root `sigma = (sigma_1..sigma_K)`,
/// with `a(u) = sum_k sigma_k(u)^2 >= 0` derived. Strong degeneracy
/// (`a = 0` on state intervals) is allowed.
#[derive(Clone)]
pub struct DiffusionModel {
    name: String,
    sigma: Vec<ScalarFn>,
    pub sigma_lipschitz: f64,
}

impl fmt::Debug for DiffusionModel {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "DiffusionModel({}, K={})", self.name, self.sigma.len())
    }
}

impl DiffusionModel {
    pub fn from_sigma(name: &str, sigma: Vec<ScalarFn>, sigma_lipschitz: f64) -> Self {
        DiffusionModel {
            name: name.to_string(),
            sigma,
            sigma_lipschitz,
        }
    }

    /// `a = 0`: the purely hyperbolic case (K = 0).
    pub fn none() -> Self {
        DiffusionModel::from_sigma("none", Vec::new(), 0.0)
    }

    /// `sigma = s`, so `a = s^2` (linear heat diffusion).
    pub fn constant(s: f64) -> Self {
        DiffusionModel::from_sigma("constant", vec![Arc::new(move |_| s)], 0.0)
    }

    /// `sigma(u) = sqrt(scale) u`, so `a(u) = scale u^2`, degenerate at 0.
    pub fn quadratic(scale: f64) -> Self {
        let s = scale.sqrt();
        DiffusionModel::from_sigma("quadratic", vec![Arc::new(move |u| s * u)], s)
    }

    /// Strongly degenerate ramp: `sigma` is a C1 smoothing of
    /// `sqrt(scale) (|u| - offset)^+`, so `a` vanishes on `|u| <= offset`.
    /// Defined through sigma so that sigma itself stays Lipschitz.
    pub fn threshold(offset: f64, scale: f64, smoothing: f64) -> Self {
        let s = scale.sqrt();
        let w = smoothing.max(1e-12);
        let ramp = move |x: f64| {
            if x <= 0.0 {
                0.0
            } else if x < w {
                x * x / (2.0 * w)
            } else {
                x - 0.5 * w
            }
        };
        DiffusionModel::from_sigma(
            "threshold",
            vec![Arc::new(move |u: f64| s * ramp(u.abs() - offset))],
            s,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma_at(&self, k: usize, u: f64) -> f64 {
        (self.sigma[k])(u)
    }

    /// `a(u) = sum_k sigma_k(u)^2`.
    pub fn a(&self, u: f64) -> f64 {
        self.sigma.iter().map(|s| s(u) * s(u)).sum()
    }

    pub fn max_a_on(&self, lo: f64, hi: f64) -> f64 {
        sample_max(|u| self.a(u), lo, hi)
    }

    /// Componentwise shift `sigma + delta` (continuous-dependence runs).
    pub fn shifted(&self, delta: f64) -> DiffusionModel {
        let sigma = self
            .sigma
            .iter()
            .map(|s| {
                let s = s.clone();
                Arc::new(move |u: f64| s(u) + delta) as ScalarFn
            })
            .collect();
        DiffusionModel {
            name: format!("{}+{delta}", self.name),
            sigma,
            sigma_lipschitz: self.sigma_lipschitz,
        }
    }

    /// `sup_u sqrt(sum_k (sigma_k^a - sigma_k^b)^2)` sampled on `[lo, hi]`.
    pub fn sup_sigma_distance(&self, other: &DiffusionModel, lo: f64, hi: f64) -> Result<f64> {
        if self.k() != other.k() {
            return Err(Error::ComponentMismatch(self.k(), other.k()));
        }
        Ok(sample_max(
            |u| eps_mismatch_unchecked(self, other, u).sqrt(),
            lo,
            hi,
        ))
    }
}

/// `zeta_k(z) = int_0^z psi(xi) sigma_k(xi) dxi` for each component,
/// with `psi = 1` when absent.
pub fn zeta(model: &DiffusionModel, z: f64, psi: Option<&ScalarFn>) -> Vec<f64>
{
    (0..model.k())
        .map(|k| {
            let integrand = |xi: f64| {
                let p = psi.map_or(1.0, |p| p(xi));
                p * model.sigma_at(k, xi)
            };
            integrate(integrand, 0.0, z, QTOL)
                .map(|q| q.value)
                .unwrap_or_else(|_| {
                    crate::quad::integrate_loose(&integrand, 0.0, z, QTOL).value
                })
        })
        .collect()
}

/// `A(z) = int_0^z a(xi) dxi`; nondecreasing since `a >= 0`.
pub fn a_primitive(model: &DiffusionModel, z: f64) -> f64 {
    integrate(|xi| model.a(xi), 0.0, z, QTOL)
        .map(|q| q.value)
        .unwrap_or_else(|_| crate::quad::integrate_loose(&|xi| model.a(xi), 0.0, z, QTOL).value)
}

fn eps_mismatch_unchecked(a: &DiffusionModel, b: &DiffusionModel, xi: f64) -> f64 {
    (0..a.k())
        .map(|k| {
            let d = a.sigma_at(k, xi) - b.sigma_at(k, xi);
            d * d
        })
        .sum()
}

/// `sum_k (sigma_k^a(xi) - sigma_k^b(xi))^2 >= 0`, the squared sigma
/// mismatch entering the continuous-dependence estimate.
pub fn eps_mismatch(a: &DiffusionModel, b: &DiffusionModel, xi: f64) -> Result<f64> {
    if a.k() != b.k() {
        return Err(Error::ComponentMismatch(a.k(), b.k()));
    }
    Ok(eps_mismatch_unchecked(a, b, xi))
}

/// Which one-sided (or signed) Kruzkov family a regularization smooths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KruzkovVariant {
    Plus,
    Minus,
    Signed,
}

/// C1 regularization `sgn_eps` of the sign function, built from a sine
/// transition of width `epsilon`, and its convex primitive `eta_eps`.
#[derive(Debug, Clone, Copy)]
pub struct KruzkovRegularization {
    pub epsilon: f64,
    pub variant: KruzkovVariant,
}

impl KruzkovRegularization {
    pub fn new(epsilon: f64, variant: KruzkovVariant) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidModel(format!("epsilon {epsilon} <= 0")));
        }
        Ok(KruzkovRegularization { epsilon, variant })
    }

    /// The smoothed sign, nondecreasing with values in [-1, 1].
    pub fn sgn(&self, z: f64) -> f64 {
        let e = self.epsilon;
        let c = std::f64::consts::PI / (2.0 * e);
        match self.variant {
            KruzkovVariant::Plus => {
                if z <= 0.0 {
                    0.0
                } else if z <= e {
                    (c * z).sin()
                } else {
                    1.0
                }
            }
            KruzkovVariant::Minus => {
                if z >= 0.0 {
                    0.0
                } else if z >= -e {
                    (c * z).sin()
                } else {
                    -1.0
                }
            }
            KruzkovVariant::Signed => {
                if z < -e {
                    -1.0
                } else if z <= e {
                    (c * z).sin()
                } else {
                    1.0
                }
            }
        }
    }

    /// `eta_eps(z) = int_0^z sgn_eps`, in closed form.
    pub fn eta(&self, z: f64) -> f64 {
        let e = self.epsilon;
        let c = std::f64::consts::PI / (2.0 * e);
        let sine_piece = |z: f64| (1.0 - (c * z).cos()) / c;
        match self.variant {
            KruzkovVariant::Plus => {
                if z <= 0.0 {
                    0.0
                } else if z <= e {
                    sine_piece(z)
                } else {
                    2.0 * e / std::f64::consts::PI + (z - e)
                }
            }
            KruzkovVariant::Minus => {
                if z >= 0.0 {
                    0.0
                } else if z >= -e {
                    sine_piece(z)
                } else {
                    2.0 * e / std::f64::consts::PI + (-z - e)
                }
            }
            KruzkovVariant::Signed => {
                if z.abs() <= e {
                    sine_piece(z)
                } else {
                    2.0 * e / std::f64::consts::PI + (z.abs() - e)
                }
            }
        }
    }

    /// `eta_eps''(z) = sgn_eps'(z)`, supported on the sine transition.
    pub fn eta_double_prime(&self, z: f64) -> f64 {
        let e = self.epsilon;
        let c = std::f64::consts::PI / (2.0 * e);
        let inside = match self.variant {
            KruzkovVariant::Plus => z > 0.0 && z < e,
            KruzkovVariant::Minus => z > -e && z < 0.0,
            KruzkovVariant::Signed => z.abs() < e,
        };
        if inside {
            c * (c * z).cos()
        } else {
            0.0
        }
    }

    /// Closed interval outside which `eta''` vanishes.
    pub fn dd_support(&self) -> (f64, f64) {
        let e = self.epsilon;
        match self.variant {
            KruzkovVariant::Plus => (0.0, e),
            KruzkovVariant::Minus => (-e, 0.0),
            KruzkovVariant::Signed => (-e, e),
        }
    }
}

/// Piecewise evaluation of the pair `(sgn_eps(z), eta_eps(z))`.
pub fn kruzkov_sgn_eta(reg: &KruzkovRegularization, z: f64) -> (f64, f64) {
    (reg.sgn(z), reg.eta(z))
}

/// Convex C2 entropy families used by the audits.
#[derive(Debug, Clone, Copy)]
pub enum Entropy {
    /// `eta(z) = z^2 / 2`
    Square,
    /// Regularized Kruzkov entropy.
    Kruzkov(KruzkovRegularization),
    /// `eta(z) = exp(z)` for `z <= cap`, extended linearly beyond the cap.
    ExpClipped { cap: f64 },
    /// `eta(z) = slope z`; dissipates nothing (eta'' = 0).
    Linear { slope: f64 },
}

impl Entropy {
    pub fn eta(&self, z: f64) -> f64 {
        match self {
            Entropy::Square => 0.5 * z * z,
            Entropy::Kruzkov(reg) => reg.eta(z),
            Entropy::ExpClipped { cap } => {
                if z <= *cap {
                    z.exp()
                } else {
                    cap.exp() * (1.0 + (z - cap))
                }
            }
            Entropy::Linear { slope } => slope * z,
        }
    }

    pub fn eta_prime(&self, z: f64) -> f64 {
        match self {
            Entropy::Square => z,
            Entropy::Kruzkov(reg) => reg.sgn(z),
            Entropy::ExpClipped { cap } => z.min(*cap).exp(),
            Entropy::Linear { slope } => *slope,
        }
    }

    pub fn eta_double_prime(&self, z: f64) -> f64 {
        match self {
            Entropy::Square => 1.0,
            Entropy::Kruzkov(reg) => reg.eta_double_prime(z),
            Entropy::ExpClipped { cap } => {
                if z <= *cap {
                    z.exp()
                } else {
                    0.0
                }
            }
            Entropy::Linear { .. } => 0.0,
        }
    }

    /// Interval outside which `eta''` vanishes; `None` means everywhere.
    fn dd_support(&self) -> Option<(f64, f64)> {
        match self {
            Entropy::Square => None,
            Entropy::Kruzkov(reg) => Some(reg.dd_support()),
            Entropy::ExpClipped { cap } => Some((f64::NEG_INFINITY, *cap)),
            Entropy::Linear { .. } => Some((0.0, -1.0)), // empty
        }
    }

    pub fn label(&self) -> String {
        match self {
            Entropy::Square => "square".into(),
            Entropy::Kruzkov(reg) => {
                let v = match reg.variant {
                    KruzkovVariant::Plus => "plus",
                    KruzkovVariant::Minus => "minus",
                    KruzkovVariant::Signed => "signed",
                };
                format!("kruzkov_{v}_eps{}", reg.epsilon)
            }
            Entropy::ExpClipped { .. } => "exp_clipped".into(),
            Entropy::Linear { .. } => "linear".into(),
        }
    }
}

/// An entropy evaluated about a threshold: `eta(u - center)`.
#[derive(Debug, Clone, Copy)]
pub struct CenteredEntropy {
    pub kind: Entropy,
    pub center: f64,
}

impl CenteredEntropy {
    pub fn new(kind: Entropy, center: f64) -> Self {
        CenteredEntropy { kind, center }
    }

    pub fn eta(&self, u: f64) -> f64 {
        self.kind.eta(u - self.center)
    }

    pub fn eta_prime(&self, u: f64) -> f64 {
        self.kind.eta_prime(u - self.center)
    }

    pub fn eta_double_prime(&self, u: f64) -> f64 {
        self.kind.eta_double_prime(u - self.center)
    }
}

/// Averaged second derivative
/// `int_0^1 (1 - tau) eta''((1-tau) a + tau b) dtau`,
/// the weight in the Taylor remainder
/// `eta(b) = eta(a) + eta'(a)(b - a) + etabar'' (b - a)^2`.
pub fn eta_bar_double_prime(ent: &CenteredEntropy, u_here: f64, u_there: f64) -> f64 {
    // Exact zero when eta'' vanishes on the whole segment.
    if let Some((lo, hi)) = ent.kind.dd_support() {
        let seg_lo = u_here.min(u_there) - ent.center;
        let seg_hi = u_here.max(u_there) - ent.center;
        if seg_hi < lo || seg_lo > hi || lo > hi {
            return 0.0;
        }
    }
    let f = |tau: f64| (1.0 - tau) * ent.eta_double_prime((1.0 - tau) * u_here + tau * u_there);
    crate::quad::integrate_loose(&f, 0.0, 1.0, QTOL).value
}

/// Entropy fluxes about the entropy's center `c`:
/// `q(z) = int_c^z eta'(xi - c) f'(xi) dxi` and
/// `r(z) = int_c^z eta'(xi - c) a(xi) dxi`.
#[derive(Debug, Clone, Copy)]
pub struct EntropyFluxPair {
    pub q: f64,
    pub r: f64,
}

pub fn entropy_fluxes(
    ent: &CenteredEntropy,
    flux: &FluxModel,
    diff: &DiffusionModel,
    z: f64,
) -> EntropyFluxPair {
    let c = ent.center;
    let q = crate::quad::integrate_loose(
        &|xi: f64| ent.eta_prime(xi) * flux.d_eval(xi),
        c,
        z,
        QTOL,
    )
    .value;
    let r = crate::quad::integrate_loose(&|xi: f64| ent.eta_prime(xi) * diff.a(xi), c, z, QTOL)
        .value;
    EntropyFluxPair { q, r }
}

/// Sharp (eps -> 0) Kruzkov fluxes:
/// `q(z,c) = sgn^(+-)(z - c) (f(z) - f(c))` and
/// `r(z,c) = sgn^(+-)(z - c) (A(z) - A(c))`.
pub fn kruzkov_limit_fluxes(
    variant: KruzkovVariant,
    flux: &FluxModel,
    diff: &DiffusionModel,
    z: f64,
    c: f64,
) -> EntropyFluxPair {
    let s = match variant {
        KruzkovVariant::Plus => {
            if z - c > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        KruzkovVariant::Minus => {
            if z - c <= 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        KruzkovVariant::Signed => {
            if z - c > 0.0 {
                1.0
            } else if z - c < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
    };
    EntropyFluxPair {
        q: s * (flux.eval(z) - flux.eval(c)),
        r: s * (a_primitive(diff, z) - a_primitive(diff, c)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_constant_sigma() {
        let d = DiffusionModel::constant(2.5);
        let z = zeta(&d, 1.7, None);
        assert_eq!(z.len(), 1);
        assert!((z[0] - 2.5 * 1.7).abs() < 1e-12);
        assert_eq!(zeta(&d, 0.0, None)[0], 0.0);
    }

    #[test]
    fn zeta_with_weight() {
        // sigma(u) = u, psi = 1: zeta(2) = int_0^2 xi dxi = 2.
        let d = DiffusionModel::from_sigma("id", vec![Arc::new(|u| u)], 1.0);
        let psi: ScalarFn = Arc::new(|_| 1.0);
        let z = zeta(&d, 2.0, Some(&psi));
        assert!((z[0] - 2.0).abs() < 1e-12);
        // psi = 1 equals the unweighted primitive exactly.
        assert_eq!(z[0], zeta(&d, 2.0, None)[0]);
    }

    #[test]
    fn a_primitive_examples() {
        let one = DiffusionModel::constant(1.0);
        assert!((a_primitive(&one, 0.9) - 0.9).abs() < 1e-12);

        // a(u) = u^2: A(2) = 8/3.
        let quad = DiffusionModel::quadratic(1.0);
        assert!((a_primitive(&quad, 2.0) - 8.0 / 3.0).abs() < 1e-11);

        // Degenerate on |u| <= 1/2: A constant there.
        let thr = DiffusionModel::threshold(0.5, 1.0, 0.05);
        let a1 = a_primitive(&thr, 0.4);
        let a2 = a_primitive(&thr, 0.1);
        assert!((a1 - a2).abs() < 1e-14);
    }

    #[test]
    fn entropy_fluxes_examples() {
        let burgers = FluxModel::burgers();
        let none = DiffusionModel::none();

        // z = c: empty integral.
        let sq = CenteredEntropy::new(Entropy::Square, 0.3);
        let p = entropy_fluxes(&sq, &burgers, &none, 0.3);
        assert_eq!(p.q, 0.0);
        assert_eq!(p.r, 0.0);

        // eta = z^2/2, c = 0, f = u^2/2: q(z) = z^3/3.
        let sq0 = CenteredEntropy::new(Entropy::Square, 0.0);
        let z = 1.3;
        let p = entropy_fluxes(&sq0, &burgers, &none, z);
        assert!((p.q - z * z * z / 3.0).abs() < 1e-12);

        // Kruzkov limit, Burgers, z = 1, c = 0, plus: q+ = 1/2.
        let lim = kruzkov_limit_fluxes(KruzkovVariant::Plus, &burgers, &none, 1.0, 0.0);
        assert!((lim.q - 0.5).abs() < 1e-15);
    }

    #[test]
    fn regularized_fluxes_converge_to_kruzkov_limit() {
        let burgers = FluxModel::burgers();
        let diff = DiffusionModel::quadratic(0.5);
        let c = 0.2;
        let z = 0.9;
        let exact = kruzkov_limit_fluxes(KruzkovVariant::Plus, &burgers, &diff, z, c);
        let mut prev = f64::INFINITY;
        for eps in [0.5, 0.1, 0.02] {
            let reg = KruzkovRegularization::new(eps, KruzkovVariant::Plus).unwrap();
            let ent = CenteredEntropy::new(Entropy::Kruzkov(reg), c);
            let p = entropy_fluxes(&ent, &burgers, &diff, z);
            let err = (p.q - exact.q).abs() + (p.r - exact.r).abs();
            assert!(err < prev, "not converging: {err} vs {prev}");
            prev = err;
        }
        assert!(prev < 5e-3);
    }

    #[test]
    fn kruzkov_pointwise_values() {
        let eps = 0.2;
        let plus = KruzkovRegularization::new(eps, KruzkovVariant::Plus).unwrap();
        // sgn at eps/2 is sin(pi/4).
        let (s, _) = kruzkov_sgn_eta(&plus, eps / 2.0);
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        // z <= 0 gives (0, 0).
        assert_eq!(kruzkov_sgn_eta(&plus, -0.3), (0.0, 0.0));

        let signed = KruzkovRegularization::new(eps, KruzkovVariant::Signed).unwrap();
        let z = 3.0 * eps;
        let (s, e) = kruzkov_sgn_eta(&signed, z);
        assert_eq!(s, 1.0);
        let expect = z - eps + 2.0 * eps / std::f64::consts::PI;
        assert!((e - expect).abs() < 1e-15);
        // Oracle: quadrature of the sgn function.
        let by_quad = integrate(|x| signed.sgn(x), 0.0, z, 1e-13).unwrap().value;
        assert!((e - by_quad).abs() < 1e-12);
    }

    #[test]
    fn kruzkov_sgn_monotone_bounded() {
        for variant in [
            KruzkovVariant::Plus,
            KruzkovVariant::Minus,
            KruzkovVariant::Signed,
        ] {
            let reg = KruzkovRegularization::new(0.1, variant).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for i in 0..400 {
                let z = -0.5 + i as f64 / 400.0;
                let s = reg.sgn(z);
                assert!(s.abs() <= 1.0);
                assert!(s >= prev - 1e-15);
                prev = s;
            }
        }
    }

    #[test]
    fn kruzkov_eta_converges_pointwise() {
        for z in [-0.7, -0.05, 0.0, 0.03, 1.2] {
            for eps in [0.1, 0.01, 0.001] {
                let plus = KruzkovRegularization::new(eps, KruzkovVariant::Plus).unwrap();
                assert!((plus.eta(z) - z.max(0.0)).abs() <= eps);
                let signed = KruzkovRegularization::new(eps, KruzkovVariant::Signed).unwrap();
                assert!((signed.eta(z) - z.abs()).abs() <= eps);
            }
        }
    }

    #[test]
    fn eta_bar_double_prime_square_is_half() {
        let sq = CenteredEntropy::new(Entropy::Square, 0.0);
        for (a, b) in [(0.0, 0.0), (-1.3, 2.2), (0.5, 0.5000001)] {
            let v = eta_bar_double_prime(&sq, a, b);
            assert!((v - 0.5).abs() < 1e-14, "got {v}");
        }
    }

    #[test]
    fn eta_bar_double_prime_equal_args() {
        // u_here = u_there: constant integrand, eta''(u)/2.
        let exp = CenteredEntropy::new(Entropy::ExpClipped { cap: 10.0 }, 0.0);
        let u = 0.73;
        let v = eta_bar_double_prime(&exp, u, u);
        assert!((v - 0.5 * u.exp()).abs() < 1e-12);
    }

    #[test]
    fn taylor_identity_for_exp() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let exp = CenteredEntropy::new(Entropy::ExpClipped { cap: 10.0 }, 0.0);
        for _ in 0..100 {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            let bar = eta_bar_double_prime(&exp, a, b);
            let resid =
                exp.eta(b) - exp.eta(a) - exp.eta_prime(a) * (b - a) - bar * (b - a) * (b - a);
            assert!(resid.abs() < 1e-10, "residual {resid:e} for ({a}, {b})");
        }
    }

    #[test]
    fn eta_bar_nonnegative_and_kruzkov_early_out() {
        let reg = KruzkovRegularization::new(0.1, KruzkovVariant::Plus).unwrap();
        let ent = CenteredEntropy::new(Entropy::Kruzkov(reg), 0.0);
        // Segment [-0.9, -0.4] misses the (0, eps) support entirely.
        assert_eq!(eta_bar_double_prime(&ent, -0.9, -0.4), 0.0);
        // Segment crossing the support is positive.
        assert!(eta_bar_double_prime(&ent, -0.05, 0.2) > 0.0);
    }

    #[test]
    fn eps_mismatch_examples() {
        let a = DiffusionModel::from_sigma("id", vec![Arc::new(|u| u)], 1.0);
        assert_eq!(eps_mismatch(&a, &a, 1.7).unwrap(), 0.0);

        let one = DiffusionModel::constant(1.0);
        let zero = DiffusionModel::constant(0.0);
        assert_eq!(eps_mismatch(&one, &zero, 0.4).unwrap(), 1.0);

        // sigma_a(u) = u, sigma_b(u) = u/2, xi = 2: (2 - 1)^2 = 1.
        let half = DiffusionModel::from_sigma("half", vec![Arc::new(|u: f64| 0.5 * u)], 0.5);
        assert_eq!(eps_mismatch(&a, &half, 2.0).unwrap(), 1.0);

        // Symmetry.
        assert_eq!(
            eps_mismatch(&a, &half, -1.3).unwrap(),
            eps_mismatch(&half, &a, -1.3).unwrap()
        );

        // K mismatch errors.
        let none = DiffusionModel::none();
        assert!(eps_mismatch(&a, &none, 0.0).is_err());
    }

    #[test]
    fn convexity_inequality_sampled() {
        // eta'(a)(b - a) <= eta(b) - eta(a) for convex eta.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for eps in [0.1, 0.01] {
            let reg = KruzkovRegularization::new(eps, KruzkovVariant::Plus).unwrap();
            for _ in 0..200 {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                let lhs = reg.sgn(a) * (b - a);
                let rhs = reg.eta(b) - reg.eta(a);
                assert!(lhs <= rhs + 1e-14);
            }
        }
    }

    #[test]
    fn flux_models() {
        let b = FluxModel::burgers();
        assert_eq!(b.eval(2.0), 2.0);
        assert_eq!(b.d_eval(-1.5), -1.5);
        assert!((b.lipschitz_on(-2.0, 2.0) - 2.0).abs() < 1e-12);

        let shifted = b.linear_shift(0.1);
        assert!((shifted.eval(1.0) - 0.6).abs() < 1e-15);
        assert!((b.w1_inf_distance(&shifted, -1.0, 1.0) - 0.2).abs() < 1e-12);
        assert!((b.lip_distance(&shifted, -1.0, 1.0) - 0.1).abs() < 1e-12);
    }
}
