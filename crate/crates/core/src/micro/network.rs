//! Effective sheet resistance of a two-dimensional conductivity map.
//!
//! Each cell is a node at its center. Neighboring cells are joined by a bond
//! whose conductance is the harmonic mean of the two cell conductivities;
//! the cells on the two electrode edges connect to their electrode through a
//! half-cell bond of conductance `2 sigma`. Lateral edges are insulating.
//! On a square cell grid all bond geometry factors are 1, so with `nx` cells
//! along the current and `ny` across, a uniform map gives `R = nx / (ny sigma)`
//! and `R * ny / nx = 1 / sigma` per square.

use super::clusters::{Axis, Phase, PhaseMap};
use crate::error::{Error, Result};
use crate::field::GridSpec;

pub const CG_RELATIVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ConductivityMap {
    spec: GridSpec,
    sigma: Vec<f64>,
    pub descriptor: String,
}

impl ConductivityMap {
    pub fn new(spec: GridSpec, sigma: Vec<f64>, descriptor: impl Into<String>) -> Result<Self> {
        if sigma.len() != spec.len() {
            return Err(Error::InvalidInput(format!(
                "conductivity map has {} cells, grid needs {}",
                sigma.len(),
                spec.len()
            )));
        }
        if let Some(k) = sigma.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "conductivity at cell {k} is {}, must be positive",
                sigma[k]
            )));
        }
        Ok(ConductivityMap {
            spec,
            sigma,
            descriptor: descriptor.into(),
        })
    }

    /// Ti-rich cells get `sigma_ti`, Al-rich cells `contrast * sigma_ti`.
    pub fn two_phase(p: &PhaseMap, sigma_ti: f64, contrast: f64) -> Result<Self> {
        let sigma = p
            .labels()
            .iter()
            .map(|&l| match l {
                Phase::TiRich => sigma_ti,
                Phase::AlRich => contrast * sigma_ti,
            })
            .collect();
        Self::new(p.spec(), sigma, format!("two-phase sigma_ti={sigma_ti} contrast={contrast}"))
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Sparse nodal system in a frame where the current flows along the first
/// index: `n_along` cells between the electrodes, `n_across` lateral.
struct Network {
    n_along: usize,
    n_across: usize,
    /// Conductivity at (along, across), stored along-major.
    sigma: Vec<f64>,
    /// Bond to the next cell along the current, `(n_along - 1) * n_across`.
    g_along: Vec<f64>,
    /// Bond to the next cell across, `n_along * (n_across - 1)`.
    g_across: Vec<f64>,
    diag: Vec<f64>,
}

impl Network {
    fn build(c: &ConductivityMap, axis: Axis) -> Self {
        let GridSpec { nx, ny, .. } = c.spec;
        let (n_along, n_across) = match axis {
            Axis::X => (nx, ny),
            Axis::Y => (ny, nx),
        };
        let mut sigma = vec![0.0; nx * ny];
        for a in 0..n_along {
            for b in 0..n_across {
                let (i, j) = match axis {
                    Axis::X => (a, b),
                    Axis::Y => (b, a),
                };
                sigma[a * n_across + b] = c.sigma[j * nx + i];
            }
        }
        let s = |a: usize, b: usize| sigma[a * n_across + b];
        let mut g_along = Vec::with_capacity((n_along - 1) * n_across);
        for a in 0..n_along - 1 {
            for b in 0..n_across {
                g_along.push(harmonic(s(a, b), s(a + 1, b)));
            }
        }
        let mut g_across = Vec::with_capacity(n_along * (n_across - 1));
        for a in 0..n_along {
            for b in 0..n_across - 1 {
                g_across.push(harmonic(s(a, b), s(a, b + 1)));
            }
        }
        let mut net = Network {
            n_along,
            n_across,
            sigma,
            g_along,
            g_across,
            diag: Vec::new(),
        };
        net.diag = (0..nx * ny)
            .map(|k| {
                let (a, b) = (k / n_across, k % n_across);
                let mut d = net.electrode_g(a, b);
                if a > 0 { d += net.ga(a - 1, b) }
                if a + 1 < n_along { d += net.ga(a, b) }
                if b > 0 { d += net.gc(a, b - 1) }
                if b + 1 < n_across { d += net.gc(a, b) }
                d
            })
            .collect();
        net
    }

    #[inline]
    fn ga(&self, a: usize, b: usize) -> f64 {
        self.g_along[a * self.n_across + b]
    }

    #[inline]
    fn gc(&self, a: usize, b: usize) -> f64 {
        self.g_across[a * (self.n_across - 1) + b]
    }

    /// Conductance to whichever electrode the cell touches (both if `n_along == 1`).
    fn electrode_g(&self, a: usize, b: usize) -> f64 {
        let s = 2.0 * self.sigma[a * self.n_across + b];
        let mut g = 0.0;
        if a == 0 { g += s }
        if a + 1 == self.n_along { g += s }
        g
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let (na, nc) = (self.n_along, self.n_across);
        for a in 0..na {
            for b in 0..nc {
                let k = a * nc + b;
                let mut acc = self.diag[k] * v[k];
                if a > 0 { acc -= self.ga(a - 1, b) * v[k - nc] }
                if a + 1 < na { acc -= self.ga(a, b) * v[k + nc] }
                if b > 0 { acc -= self.gc(a, b - 1) * v[k - 1] }
                if b + 1 < nc { acc -= self.gc(a, b) * v[k + 1] }
                out[k] = acc;
            }
        }
    }

    /// Right-hand side for the source electrode at potential 1.
    fn rhs(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.sigma.len()];
        for (k, s) in self.sigma[..self.n_across].iter().enumerate() {
            b[k] = 2.0 * s;
        }
        b
    }

    /// Total dissipated power at unit drive. Stationary at the exact solution,
    /// so its error is second order in the potential error.
    fn power(&self, v: &[f64]) -> f64 {
        let (na, nc) = (self.n_along, self.n_across);
        let mut p = 0.0;
        for b in 0..nc {
            p += 2.0 * self.sigma[b] * (1.0 - v[b]).powi(2);
            let k = (na - 1) * nc + b;
            p += 2.0 * self.sigma[k] * v[k].powi(2);
        }
        for a in 0..na - 1 {
            for b in 0..nc {
                let k = a * nc + b;
                p += self.ga(a, b) * (v[k] - v[k + nc]).powi(2);
            }
        }
        for a in 0..na {
            for b in 0..nc - 1 {
                let k = a * nc + b;
                p += self.gc(a, b) * (v[k] - v[k + 1]).powi(2);
            }
        }
        p
    }

    /// Jacobi-preconditioned conjugate gradient.
    fn solve(&self, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
        let n = rhs.len();
        let max_iter = 20 * n + 100;
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let b_norm = dot(rhs, rhs).sqrt();
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        for it in 0..max_iter {
            let res = dot(&r, &r).sqrt() / b_norm;
            if res <= tol {
                return Ok(x);
            }
            self.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            for k in 0..n {
                z[k] = r[k] / self.diag[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
            if !rz.is_finite() {
                return Err(Error::NotConverged { iterations: it, residual: f64::NAN });
            }
        }
        Err(Error::NotConverged {
            iterations: max_iter,
            residual: dot(&r, &r).sqrt() / b_norm,
        })
    }
}

/// Sheet resistance (per square) for current along `axis`: unit potential
/// across the two edges normal to `axis`, `R_eff * width / length`.
pub fn effective_sheet_resistance(c: &ConductivityMap, axis: Axis) -> Result<f64> {
    let net = Network::build(c, axis);
    let v = net.solve(&net.rhs(), CG_RELATIVE_TOLERANCE)?;
    let current = net.power(&v);
    let r = 1.0 / current;
    Ok(r * net.n_across as f64 / net.n_along as f64)
}
