//! Seeded initial data for experiments: band-limited random fields,
//! square waves, and steepened sines. All generators are deterministic
//! functions of (grid, seed, parameters).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Field, Grid1D};
use crate::Result;

/// Band-limited random field: at most `max_modes` Fourier modes with
/// seeded amplitudes decaying like 1/k, clipped to `[lo, hi]`.
pub fn random_band_limited(
    grid: Grid1D,
    seed: u64,
    max_modes: usize,
    amplitude: f64,
    clip: (f64, f64),
) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_modes = max_modes.max(1);
    let mut amps = Vec::with_capacity(n_modes);
    let mut phases = Vec::with_capacity(n_modes);
    for k in 1..=n_modes {
        amps.push(rng.gen_range(-1.0..1.0) * amplitude / k as f64);
        phases.push(rng.gen_range(0.0..2.0 * std::f64::consts::PI));
    }
    let offset = rng.gen_range(-0.2..0.2) * amplitude;
    let length = grid.length();
    Field::from_fn(grid, |x| {
        let mut v = offset;
        for k in 1..=n_modes {
            let th = 2.0 * std::f64::consts::PI * k as f64 * x / length + phases[k - 1];
            v += amps[k - 1] * th.cos();
        }
        v.clamp(clip.0, clip.1)
    })
}

/// Square wave: `hi_val` on `[start_frac, end_frac) * length`, `lo_val`
/// elsewhere. BV seminorm `2 |hi_val - lo_val|`.
pub fn square_wave(
    grid: Grid1D,
    lo_val: f64,
    hi_val: f64,
    start_frac: f64,
    end_frac: f64,
) -> Result<Field> {
    let length = grid.length();
    Field::from_fn(grid, |x| {
        let s = x / length;
        if s >= start_frac && s < end_frac {
            hi_val
        } else {
            lo_val
        }
    })
}

/// Single sine mode of the given amplitude.
pub fn sine(grid: Grid1D, amplitude: f64, mode: usize) -> Result<Field> {
    let omega = 2.0 * std::f64::consts::PI * mode as f64 / grid.length();
    Field::from_fn(grid, |x| amplitude * (omega * x).sin())
}

/// Sine steepened through a tanh profile: `A tanh(s sin(2 pi x/L)) / tanh(s)`.
/// The maximum slope grows with `sharpness`, so shock formation times drop.
pub fn steep_sine(grid: Grid1D, amplitude: f64, sharpness: f64) -> Result<Field> {
    let omega = 2.0 * std::f64::consts::PI / grid.length();
    let norm = sharpness.tanh();
    Field::from_fn(grid, |x| {
        amplitude * (sharpness * (omega * x).sin()).tanh() / norm
    })
}

/// Ordered pair for comparison runs: `v0 = u0 +` a seeded nonnegative bump.
pub fn ordered_pair(
    grid: Grid1D,
    seed: u64,
    amplitude: f64,
    clip: (f64, f64),
) -> Result<(Field, Field)> {
    let u0 = random_band_limited(grid, seed, 8, amplitude, clip)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let center: f64 = rng.gen_range(0.0..1.0);
    let width: f64 = rng.gen_range(0.1..0.3);
    let height: f64 = rng.gen_range(0.2..0.6) * amplitude.abs().max(0.5);
    let length = grid.length();
    let gap = Field::from_fn(grid, |x| {
        let th = 2.0 * std::f64::consts::PI * (x / length - center);
        let k = 1.0 / (width * width);
        height * (k * (th.cos() - 1.0)).exp()
    })?;
    let v0 = Field::new(
        grid,
        u0.values()
            .iter()
            .zip(gap.values())
            .map(|(a, b)| a + b)
            .collect(),
        0.0,
    )?;
    Ok((u0, v0))
}
