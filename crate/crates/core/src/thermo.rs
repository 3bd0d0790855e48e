//! Bulk Gibbs free energy and the discrete free-energy functional.
//!
//! Gradient-energy convention: the functional carries `kappa * |grad x|^2`,
//! so its variational derivative is `G'(x) - 2 kappa lap(x)`, the chemical
//! potential driving the solver.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ScalarField2D;

#[derive(Debug, Clone, PartialEq, Default)]
pub enum GibbsModel {
    /// `G(x) = x^2 (1 - x)^2`.
    #[default]
    DoubleWell,
    /// `G(x) = sum_k c[k] x^k`.
    Polynomial(Vec<f64>),
}

impl GibbsModel {
    pub fn gibbs(&self, x: f64) -> f64 {
        match self {
            GibbsModel::DoubleWell => {
                let y = x * (1.0 - x);
                y * y
            }
            GibbsModel::Polynomial(c) => horner(c, x),
        }
    }

    pub fn dgibbs(&self, x: f64) -> f64 {
        match self {
            GibbsModel::DoubleWell => x * (2.0 + x * (-6.0 + 4.0 * x)),
            GibbsModel::Polynomial(c) => horner(&derivative(c), x),
        }
    }

    pub fn d2gibbs(&self, x: f64) -> f64 {
        match self {
            GibbsModel::DoubleWell => 2.0 + x * (-12.0 + 12.0 * x),
            GibbsModel::Polynomial(c) => horner(&derivative(&derivative(c)), x),
        }
    }

    /// Maximal composition interval on which `G'' < 0`.
    pub fn spinodal_interval(&self) -> Result<(f64, f64)> {
        match self {
            GibbsModel::DoubleWell => {
                let r = 3.0_f64.sqrt() / 6.0;
                Ok((0.5 - r, 0.5 + r))
            }
            GibbsModel::Polynomial(_) => self.scan_spinodal(),
        }
    }

    // Grid scan over [0, 1] for the widest run of negative curvature, then
    // bisection on each end.
    fn scan_spinodal(&self) -> Result<(f64, f64)> {
        const N: usize = 4096;
        let xs = |k: usize| k as f64 / N as f64;
        let mut best: Option<(usize, usize)> = None;
        let mut start = None;
        for k in 0..=N {
            let neg = self.d2gibbs(xs(k)) < 0.0;
            match (neg, start) {
                (true, None) => start = Some(k),
                (false, Some(s)) => {
                    if best.is_none_or(|(a, b)| k - 1 - s > b - a) {
                        best = Some((s, k - 1));
                    }
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            if best.is_none_or(|(a, b)| N - s > b - a) {
                best = Some((s, N));
            }
        }
        let (a, b) = best.ok_or(Error::NoSpinodal)?;
        let lo = if a == 0 { 0.0 } else { self.curvature_root(xs(a - 1), xs(a)) };
        let hi = if b == N { 1.0 } else { self.curvature_root(xs(b), xs(b + 1)) };
        Ok((lo, hi))
    }

    fn curvature_root(&self, mut a: f64, mut b: f64) -> f64 {
        let fa = self.d2gibbs(a);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if (self.d2gibbs(m) < 0.0) == (fa < 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &ck)| k as f64 * ck)
        .collect()
}

/// Discrete free energy `sum_cells [G(x) + kappa |grad x|^2] h^2`.
///
/// `|grad x|^2` uses centered periodic differences. The solver's stencil is
/// the five-point Laplacian, so this is a monitor of the dynamics rather than
/// their exact Lyapunov functional; it is used only as a diagnostic.
pub fn free_energy(f: &ScalarField2D, model: &GibbsModel, kappa: f64) -> f64 {
    let spec = f.spec();
    let (nx, ny, h) = (spec.nx, spec.ny, spec.h);
    let v = f.values();
    let inv_h2 = 1.0 / (h * h);
    let rows: Vec<f64> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let row = &v[j * nx..(j + 1) * nx];
            let up = &v[((j + 1) % ny) * nx..][..nx];
            let down = &v[((j + ny - 1) % ny) * nx..][..nx];
            let mut acc = 0.0;
            for i in 0..nx {
                let dx = 0.5 * (row[(i + 1) % nx] - row[(i + nx - 1) % nx]);
                let dy = 0.5 * (up[i] - down[i]);
                acc += model.gibbs(row[i]) + kappa * (dx * dx + dy * dy) * inv_h2;
            }
            acc
        })
        .collect();
    rows.iter().sum::<f64>() * h * h
}
