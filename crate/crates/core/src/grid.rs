//! Periodic 1D grid, solution fields, and the norms used by the
//! theorem checks.
//!
//! The domain is `[0, length)` with periodic wrap-around and cell-centered
//! point values, so the nonlocal shift `u(x + j h)` is an exact array
//! rotation. All norms are plain Riemann sums at grid resolution.

use crate::{Error, Result};

/// Uniform periodic grid on `[0, length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n_cells: usize,
    length: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize, length: f64) -> Result<Self> {
        if n_cells < 4 {
            return Err(Error::InvalidGrid(format!(
                "need at least 4 cells, got {n_cells}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("bad length {length}")));
        }
        Ok(Grid1D { n_cells, length })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    /// Center of cell `i`.
    pub fn cell_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing()
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.cell_center(i)).collect()
    }
}

/// Spatial solution values on a grid at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch(format!(
                "{} values on a {}-cell grid",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("value at cell {i}")));
        }
        if !time.is_finite() || time < 0.0 {
            return Err(Error::NonFinite(format!("time {time}")));
        }
        Ok(Field { grid, values, time })
    }

    /// Sample a function at the cell centers (time 0).
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid1D, f: F) -> Result<Self> {
        let values = (0..grid.n_cells())
            .map(|i| f(grid.cell_center(i)))
            .collect();
        Field::new(grid, values, 0.0)
    }

    pub fn constant(grid: Grid1D, c: f64) -> Result<Self> {
        Field::new(grid, vec![c; grid.n_cells()], 0.0)
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// `spacing * sum(u_i)`, the discrete integral.
    pub fn mass(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cyclic shift by `offset` cells: `out[i] = u[(i + offset) mod n]`.
    pub fn shifted(&self, offset: i64) -> Self {
        let n = self.values.len() as i64;
        let values = (0..n)
            .map(|i| self.values[(i + offset).rem_euclid(n) as usize])
            .collect();
        Field {
            grid: self.grid,
            values,
            time: self.time,
        }
    }
}

fn check_same_grid(f: &Field, g: &Field) -> Result<()> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch(format!(
            "{}x{} vs {}x{}",
            f.grid().n_cells(),
            f.grid().length(),
            g.grid().n_cells(),
            g.grid().length()
        )));
    }
    Ok(())
}

/// Discrete L1 distance `h * sum |f_i - g_i|`.
pub fn l1_distance(f: &Field, g: &Field) -> Result<f64> {
    check_same_grid(f, g)?;
    let h = f.grid().spacing();
    Ok(h * f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>())
}

/// Positive-part mass `h * sum (f_i - g_i)^+`.
pub fn positive_part_mass(f: &Field, g: &Field) -> Result<f64> {
    check_same_grid(f, g)?;
    let h = f.grid().spacing();
    Ok(h * f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| (a - b).max(0.0))
        .sum::<f64>())
}

/// Total variation `sum |f_{i+1} - f_i|` with periodic wrap-around.
pub fn bv_seminorm(f: &Field) -> f64 {
    let v = f.values();
    let n = v.len();
    (0..n).map(|i| (v[(i + 1) % n] - v[i]).abs()).sum()
}

/// Time history of a solution: snapshots at strictly increasing times
/// starting from the initial datum at t = 0.
#[derive(Debug, Clone)]
pub struct Trajectory {
    snapshots: Vec<Field>,
}

impl Trajectory {
    pub fn new(snapshots: Vec<Field>) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| Error::InvalidGrid("empty trajectory".into()))?;
        if first.time() != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "trajectory must start at t = 0, got {}",
                first.time()
            )));
        }
        let grid = first.grid();
        for w in snapshots.windows(2) {
            if w[1].time() <= w[0].time() {
                return Err(Error::InvalidGrid(format!(
                    "snapshot times not increasing: {} then {}",
                    w[0].time(),
                    w[1].time()
                )));
            }
        }
        if snapshots.iter().any(|s| s.grid() != grid) {
            return Err(Error::GridMismatch("snapshots on different grids".into()));
        }
        Ok(Trajectory { snapshots })
    }

    pub fn grid(&self) -> Grid1D {
        self.snapshots[0].grid()
    }

    pub fn snapshots(&self) -> &[Field] {
        &self.snapshots
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time()).collect()
    }

    pub fn initial(&self) -> &Field {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("non-empty by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, len: f64) -> Grid1D {
        Grid1D::new(n, len).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = grid(256, 2.0);
        assert_eq!(g.spacing() * g.n_cells() as f64, 2.0);
        assert!(Grid1D::new(3, 1.0).is_err());
        assert!(Grid1D::new(8, 0.0).is_err());
        assert!(Grid1D::new(8, -1.0).is_err());
    }

    #[test]
    fn l1_distance_identity_and_constants() {
        let g = grid(16, 2.0);
        let f = Field::from_fn(g, |x| x.sin()).unwrap();
        assert_eq!(l1_distance(&f, &f).unwrap(), 0.0);

        let one = Field::constant(g, 1.0).unwrap();
        let zero = Field::constant(g, 0.0).unwrap();
        // constant fields, exact Riemann sum over a length-2 domain
        assert!((l1_distance(&one, &zero).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn l1_distance_sine_analytic() {
        // \int_0^1 |sin(2 pi x)| dx = 2/pi
        let g = grid(256, 1.0);
        let f = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x).sin()).unwrap();
        let zero = Field::constant(g, 0.0).unwrap();
        let exact = 2.0 / std::f64::consts::PI;
        assert!((l1_distance(&f, &zero).unwrap() - exact).abs() < 1e-3);
    }

    #[test]
    fn l1_grid_mismatch_errors() {
        let f = Field::constant(grid(8, 1.0), 0.0).unwrap();
        let g = Field::constant(grid(16, 1.0), 0.0).unwrap();
        assert!(l1_distance(&f, &g).is_err());
    }

    #[test]
    fn positive_part_examples() {
        let g = grid(32, 1.0);
        let lo = Field::constant(g, 1.0).unwrap();
        let hi = Field::constant(g, 3.0).unwrap();
        // f <= g pointwise -> 0
        assert_eq!(positive_part_mass(&lo, &hi).unwrap(), 0.0);
        // f = 3, g = 1 on unit domain -> 2
        assert!((positive_part_mass(&hi, &lo).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn positive_parts_sum_to_l1() {
        let g = grid(64, 1.5);
        let f = Field::from_fn(g, |x| (7.3 * x).sin() + 0.2).unwrap();
        let v = Field::from_fn(g, |x| (3.1 * x).cos()).unwrap();
        let sum =
            positive_part_mass(&f, &v).unwrap() + positive_part_mass(&v, &f).unwrap();
        let l1 = l1_distance(&f, &v).unwrap();
        assert!((sum - l1).abs() <= 1e-12 * l1.max(1.0));
    }

    #[test]
    fn bv_examples() {
        let g = grid(64, 1.0);
        assert_eq!(bv_seminorm(&Field::constant(g, 5.0).unwrap()), 0.0);

        // single up-down square pulse of height h -> 2h
        let pulse = Field::from_fn(g, |x| if (0.25..0.5).contains(&x) { 3.0 } else { 0.0 })
            .unwrap();
        assert!((bv_seminorm(&pulse) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn bv_sine_converges_to_four() {
        // Total variation of sin(2 pi x) over one period is 4 x amplitude.
        let mut prev_err = f64::INFINITY;
        for n in [64, 256, 1024] {
            let g = grid(n, 1.0);
            let f = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x).sin()).unwrap();
            let err = (bv_seminorm(&f) - 4.0).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 1e-3);
    }

    #[test]
    fn shift_invariance() {
        // Same multiset summed in rotated order: equal up to rounding.
        let g = grid(32, 1.0);
        let f = Field::from_fn(g, |x| (9.0 * x).sin()).unwrap();
        let v = Field::from_fn(g, |x| (4.0 * x * x).cos()).unwrap();
        let d0 = l1_distance(&f, &v).unwrap();
        let d7 = l1_distance(&f.shifted(7), &v.shifted(7)).unwrap();
        assert!((d0 - d7).abs() <= 1e-14 * d0.max(1.0));
        let b0 = bv_seminorm(&f);
        let b11 = bv_seminorm(&f.shifted(11));
        assert!((b0 - b11).abs() <= 1e-14 * b0.max(1.0));
    }

    #[test]
    fn trajectory_validation() {
        let g = grid(8, 1.0);
        let u0 = Field::constant(g, 0.0).unwrap();
        let u1 = Field::constant(g, 0.5).unwrap().with_time(0.1);
        assert!(Trajectory::new(vec![u0.clone(), u1]).is_ok());

        let bad_start = Field::constant(g, 0.0).unwrap().with_time(0.2);
        assert!(Trajectory::new(vec![bad_start]).is_err());

        let dup = Field::constant(g, 1.0).unwrap().with_time(0.0);
        assert!(Trajectory::new(vec![u0, dup.with_time(0.0)]).is_err());
    }

    #[test]
    fn field_rejects_non_finite() {
        let g = grid(8, 1.0);
        assert!(Field::new(g, vec![f64::NAN; 8], 0.0).is_err());
        assert!(Field::new(g, vec![0.0; 7], 0.0).is_err());
    }
}
