//! Uniform periodic 2D grids and the scalar fields living on them.
//!
//! Storage is row-major: cell `(i, j)` with `i` along x and `j` along y sits at
//! `j * nx + i`. All stencils wrap periodically in both directions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, h: f64) -> Result<Self> {
        let spec = GridSpec { nx, ny, h };
        spec.validate()?;
        Ok(spec)
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 4 || self.ny < 4 {
            return Err(Error::InvalidGrid(format!(
                "{}x{} is below the 4x4 minimum",
                self.nx, self.ny
            )));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidGrid(format!("cell spacing h = {}", self.h)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_pow2(&self) -> bool {
        self.nx.is_power_of_two() && self.ny.is_power_of_two()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField2D {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} values, grid needs {}",
                values.len(),
                spec.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at cell {k}"
            )));
        }
        Ok(ScalarField2D { spec, values })
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        ScalarField2D {
            spec,
            values: vec![value; spec.len()],
        }
    }

    /// Builds a field from `f(i, j)`.
    pub fn from_fn(spec: GridSpec, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                values.push(f(i, j));
            }
        }
        ScalarField2D { spec, values }
    }

    /// Wraps values produced internally by a stencil; skips the finiteness scan.
    pub(crate) fn from_raw(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        ScalarField2D { spec, values }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        ScalarField2D {
            spec: self.spec,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    /// Cyclic shift: output cell `(i, j)` holds input cell `(i - di, j - dj)`.
    pub fn shifted(&self, di: usize, dj: usize) -> Self {
        let GridSpec { nx, ny, .. } = self.spec;
        Self::from_fn(self.spec, |i, j| {
            self.get((i + nx - di % nx) % nx, (j + ny - dj % ny) % ny)
        })
    }

    /// Sum of all cell values, reduced row by row in a fixed order so the
    /// result does not depend on the worker count.
    pub fn sum(&self) -> f64 {
        self.values
            .par_chunks(self.spec.nx)
            .map(|row| row.iter().sum::<f64>())
            .collect::<Vec<_>>()
            .iter()
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.spec.len() as f64
    }
}

/// Fills a grid with i.i.d. `N(mean, variance)` samples.
///
/// Each row draws from its own ChaCha8 stream keyed by `(seed, row)`, so the
/// field is a pure function of the seed no matter how rows are scheduled.
pub fn gaussian_field(spec: GridSpec, mean: f64, variance: f64, seed: u64) -> Result<ScalarField2D> {
    spec.validate()?;
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::InvalidInput(format!("variance = {variance}")));
    }
    if !(0.0..=1.0).contains(&mean) {
        return Err(Error::InvalidInput(format!("mean = {mean} is outside [0, 1]")));
    }
    let mut values = vec![0.0; spec.len()];
    if variance == 0.0 {
        values.fill(mean);
        return Ok(ScalarField2D::from_raw(spec, values));
    }
    let normal = Normal::new(mean, variance.sqrt())
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    values
        .par_chunks_mut(spec.nx)
        .enumerate()
        .for_each(|(row, out)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(row as u64);
            for v in out.iter_mut() {
                *v = normal.sample(&mut rng);
            }
        });
    Ok(ScalarField2D::from_raw(spec, values))
}

/// Five-point Laplacian with periodic wraparound.
pub fn laplacian_periodic(f: &ScalarField2D) -> ScalarField2D {
    let mut out = vec![0.0; f.spec.len()];
    laplacian_into(f.spec, &f.values, &mut out);
    ScalarField2D::from_raw(f.spec, out)
}

/// Writes the periodic five-point Laplacian of `src` into `dst`.
pub(crate) fn laplacian_into(spec: GridSpec, src: &[f64], dst: &mut [f64]) {
    let GridSpec { nx, ny, h } = spec;
    let inv_h2 = 1.0 / (h * h);
    dst.par_chunks_mut(nx).enumerate().for_each(|(j, out)| {
        let row = &src[j * nx..(j + 1) * nx];
        let up = &src[((j + 1) % ny) * nx..][..nx];
        let down = &src[((j + ny - 1) % ny) * nx..][..nx];
        for i in 0..nx {
            let left = row[if i == 0 { nx - 1 } else { i - 1 }];
            let right = row[if i + 1 == nx { 0 } else { i + 1 }];
            out[i] = (left + right + up[i] + down[i] - 4.0 * row[i]) * inv_h2;
        }
    });
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStats {
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

/// Population statistics over all cells.
pub fn field_stats(f: &ScalarField2D) -> FieldStats {
    let n = f.spec.len() as f64;
    let mean = f.mean();
    let rows: Vec<(f64, f64, f64)> = f
        .values
        .par_chunks(f.spec.nx)
        .map(|row| {
            row.iter().fold((0.0, f64::INFINITY, f64::NEG_INFINITY), |(s, lo, hi), &v| {
                let d = v - mean;
                (s + d * d, lo.min(v), hi.max(v))
            })
        })
        .collect();
    let (ss, min, max) = rows
        .iter()
        .fold((0.0, f64::INFINITY, f64::NEG_INFINITY), |(s, lo, hi), &(rs, rlo, rhi)| {
            (s + rs, lo.min(rlo), hi.max(rhi))
        });
    FieldStats {
        mean,
        variance: ss / n,
        min,
        max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_small_grids() {
        assert!(GridSpec::new(3, 8, 1.0).is_err());
        assert!(GridSpec::new(8, 8, 0.0).is_err());
        assert!(gaussian_field(GridSpec { nx: 2, ny: 2, h: 1.0 }, 0.5, 0.1, 1).is_err());
    }

    #[test]
    fn gaussian_mean_near_target() {
        let spec = GridSpec::square(256).unwrap();
        let f = gaussian_field(spec, 0.48, 1e-3, 1).unwrap();
        let tol = 4.0 * (1e-3_f64 / 65536.0).sqrt();
        assert!((f.mean() - 0.48).abs() < tol, "mean {}", f.mean());
        let s = field_stats(&f);
        assert!((s.variance - 1e-3).abs() < 1e-4, "variance {}", s.variance);
    }

    #[test]
    fn zero_variance_is_constant() {
        let spec = GridSpec::new(16, 8, 1.0).unwrap();
        let f = gaussian_field(spec, 0.5, 0.0, 7).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn gaussian_is_deterministic_across_pools() {
        let spec = GridSpec::square(64).unwrap();
        let a = gaussian_field(spec, 0.48, 1e-3, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| gaussian_field(spec, 0.48, 1e-3, 42).unwrap());
        assert_eq!(a, b);
        let c = gaussian_field(spec, 0.48, 1e-3, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let f = ScalarField2D::constant(GridSpec::square(8).unwrap(), 3.25);
        assert!(laplacian_periodic(&f).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_of_delta() {
        let spec = GridSpec::square(8).unwrap();
        let f = ScalarField2D::from_fn(spec, |i, j| if (i, j) == (0, 0) { 1.0 } else { 0.0 });
        let l = laplacian_periodic(&f);
        assert_eq!(l.get(0, 0), -4.0);
        for (i, j) in [(1, 0), (7, 0), (0, 1), (0, 7)] {
            assert_eq!(l.get(i, j), 1.0);
        }
        assert_eq!(l.values().iter().filter(|&&v| v != 0.0).count(), 5);
    }

    #[test]
    fn laplacian_cosine_eigenfield() {
        let spec = GridSpec::new(32, 16, 0.5).unwrap();
        let f = ScalarField2D::from_fn(spec, |i, _| (2.0 * PI * i as f64 / 32.0).cos());
        let eig = -(2.0 - 2.0 * (2.0 * PI / 32.0).cos()) / (0.5 * 0.5);
        let l = laplacian_periodic(&f);
        for (a, b) in l.values().iter().zip(f.values()) {
            assert_abs_diff_eq!(*a, eig * b, epsilon = 1e-12);
        }
    }

    #[test]
    fn stats_of_simple_fields() {
        let spec = GridSpec::square(4).unwrap();
        let s = field_stats(&ScalarField2D::constant(spec, 0.5));
        assert_eq!(s, FieldStats { mean: 0.5, variance: 0.0, min: 0.5, max: 0.5 });
        let f = ScalarField2D::from_fn(spec, |i, _| (i % 2) as f64);
        let s = field_stats(&f);
        assert_eq!((s.mean, s.variance, s.min, s.max), (0.5, 0.25, 0.0, 1.0));
    }

    #[test]
    fn new_rejects_bad_values() {
        let spec = GridSpec::square(4).unwrap();
        assert!(ScalarField2D::new(spec, vec![0.0; 15]).is_err());
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(ScalarField2D::new(spec, v).is_err());
    }

    fn arb_field() -> impl Strategy<Value = ScalarField2D> {
        (4usize..12, 4usize..12).prop_flat_map(|(nx, ny)| {
            prop::collection::vec(-1.0f64..2.0, nx * ny).prop_map(move |v| {
                ScalarField2D::new(GridSpec::new(nx, ny, 1.0).unwrap(), v).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn laplacian_sums_to_zero(f in arb_field()) {
            let max = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let n = f.spec().len() as f64;
            prop_assert!(laplacian_periodic(&f).sum().abs() <= 1e-10 * n * max.max(1e-300));
        }

        #[test]
        fn laplacian_commutes_with_shift(f in arb_field(), di in 0usize..12, dj in 0usize..12) {
            let a = laplacian_periodic(&f.shifted(di, dj));
            let b = laplacian_periodic(&f).shifted(di, dj);
            prop_assert_eq!(a, b);
        }
    }
}
