//! Levenberg-Marquardt least squares with Marquardt diagonal scaling.
//!
//! Real observations contribute one residual per point, complex observations
//! two (real and imaginary parts), each scaled by `sqrt(weight)`. Bounded
//! parameters are optimized through a logistic transform, so the solver
//! itself always works in an unconstrained space.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Free,
    /// Open interval `(lo, hi)`.
    Interval(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub unit: &'static str,
    pub bound: Bound,
}

impl ParamSpec {
    pub const fn free(name: &'static str, unit: &'static str) -> Self {
        ParamSpec { name, unit, bound: Bound::Free }
    }

    pub const fn bounded(name: &'static str, unit: &'static str, lo: f64, hi: f64) -> Self {
        ParamSpec { name, unit, bound: Bound::Interval(lo, hi) }
    }

    fn to_internal(&self, p: f64) -> f64 {
        match self.bound {
            Bound::Free => p,
            Bound::Interval(lo, hi) => {
                let s = ((p - lo) / (hi - lo)).clamp(1e-12, 1.0 - 1e-12);
                (s / (1.0 - s)).ln()
            }
        }
    }

    fn to_external(&self, u: f64) -> f64 {
        match self.bound {
            Bound::Free => u,
            Bound::Interval(lo, hi) => lo + (hi - lo) / (1.0 + (-u).exp()),
        }
    }

    /// `dp/du` at internal coordinate `u`.
    fn chain(&self, u: f64) -> f64 {
        match self.bound {
            Bound::Free => 1.0,
            Bound::Interval(lo, hi) => {
                let s = 1.0 / (1.0 + (-u).exp());
                (hi - lo) * s * (1.0 - s)
            }
        }
    }
}

/// A parametric model `y = f(x; p)`, real or complex valued.
pub trait FitModel {
    fn name(&self) -> &str;

    fn params(&self) -> &[ParamSpec];

    fn is_complex(&self) -> bool {
        false
    }

    /// Model value; real models return a zero imaginary part.
    fn eval(&self, p: &[f64], x: f64) -> Complex64;

    /// `df/dp_j` for every parameter, if the model provides it analytically.
    fn gradient(&self, _p: &[f64], _x: f64) -> Option<Vec<Complex64>> {
        None
    }

    /// Natural size of parameter `j` at `p`; sets the finite-difference step.
    fn param_scale(&self, p: &[f64], j: usize) -> f64 {
        if p[j] != 0.0 { p[j].abs() } else { 1.0 }
    }

    /// Abscissas where the model leaves its physical domain at `p`.
    fn domain_warnings(&self, _p: &[f64], _xs: &[f64]) -> Vec<String> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint {
    pub x: f64,
    pub y: Complex64,
    pub weight: f64,
}

impl DataPoint {
    pub fn real(x: f64, y: f64) -> Self {
        DataPoint { x, y: Complex64::new(y, 0.0), weight: 1.0 }
    }

    pub fn complex(x: f64, y: Complex64) -> Self {
        DataPoint { x, y, weight: 1.0 }
    }

    pub fn weighted(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step reduces the residual norm by less than this fraction.
    pub cost_tolerance: f64,
    /// Stop when the relative step norm falls below this.
    pub step_tolerance: f64,
    pub initial_damping: f64,
    /// Multiplicative damping schedule.
    pub damping_factor: f64,
    /// Parameters held at their initial values; empty means none.
    pub fixed: Vec<bool>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            cost_tolerance: 1e-10,
            step_tolerance: 1e-12,
            initial_damping: 1e-3,
            damping_factor: 10.0,
            fixed: Vec::new(),
        }
    }
}

impl FitOptions {
    pub fn fixing(mut self, fixed: Vec<bool>) -> Self {
        self.fixed = fixed;
        self
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: String,
    pub names: Vec<&'static str>,
    pub units: Vec<&'static str>,
    pub params: Vec<f64>,
    /// Parameter covariance, zero rows/columns for fixed parameters.
    pub covariance: DMatrix<f64>,
    /// Weighted residual sum of squares.
    pub rss: f64,
    pub r_squared: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual norm after each accepted step, starting from the initial guess.
    pub cost_history: Vec<f64>,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn stderr(&self) -> Vec<f64> {
        (0..self.params.len())
            .map(|j| self.covariance[(j, j)].max(0.0).sqrt())
            .collect()
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| *n == name).map(|j| self.params[j])
    }
}

/// Weighted `R^2 = 1 - SS_res / SS_tot` with the (complex) weighted mean as
/// the reference.
pub fn r_squared(data: &[DataPoint], predicted: &[Complex64]) -> f64 {
    let wsum: f64 = data.iter().map(|d| d.weight).sum();
    let mean = data.iter().map(|d| d.y * d.weight).sum::<Complex64>() / wsum;
    let ss_tot: f64 = data.iter().map(|d| d.weight * (d.y - mean).norm_sqr()).sum();
    let ss_res: f64 = data
        .iter()
        .zip(predicted)
        .map(|(d, f)| d.weight * (d.y - f).norm_sqr())
        .sum();
    if ss_res == 0.0 {
        1.0
    } else if ss_tot == 0.0 {
        f64::NEG_INFINITY
    } else {
        1.0 - ss_res / ss_tot
    }
}

struct Problem<'a, M: FitModel + ?Sized> {
    model: &'a M,
    data: &'a [DataPoint],
    specs: &'a [ParamSpec],
    base: Vec<f64>,
    free: Vec<usize>,
    rows: usize,
}

impl<M: FitModel + ?Sized> Problem<'_, M> {
    fn external(&self, u: &[f64]) -> Vec<f64> {
        let mut p = self.base.clone();
        for (k, &j) in self.free.iter().enumerate() {
            p[j] = self.specs[j].to_external(u[k]);
        }
        p
    }

    fn residuals(&self, u: &[f64]) -> DVector<f64> {
        let p = self.external(u);
        let mut r = DVector::zeros(self.rows);
        let complex = self.model.is_complex();
        let mut row = 0;
        for d in self.data {
            let sw = d.weight.sqrt();
            let e = (d.y - self.model.eval(&p, d.x)) * sw;
            r[row] = e.re;
            row += 1;
            if complex {
                r[row] = e.im;
                row += 1;
            }
        }
        r
    }

    /// Jacobian of the model values (not residuals) in internal coordinates.
    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        let p = self.external(u);
        let n = self.free.len();
        let mut jac = DMatrix::zeros(self.rows, n);
        let complex = self.model.is_complex();
        let chain: Vec<f64> = self
            .free
            .iter()
            .enumerate()
            .map(|(k, &j)| self.specs[j].chain(u[k]))
            .collect();

        let analytic = self.data.first().is_some_and(|d| self.model.gradient(&p, d.x).is_some());
        if analytic {
            let mut row = 0;
            for d in self.data {
                let sw = d.weight.sqrt();
                let g = self.model.gradient(&p, d.x).expect("gradient");
                for (k, &j) in self.free.iter().enumerate() {
                    let v = g[j] * (chain[k] * sw);
                    jac[(row, k)] = v.re;
                    if complex {
                        jac[(row + 1, k)] = v.im;
                    }
                }
                row += if complex { 2 } else { 1 };
            }
            return jac;
        }

        for (k, &j) in self.free.iter().enumerate() {
            // Step in external units, mapped into internal ones.
            let scale = self.model.param_scale(&p, j);
            let step_ext = f64::EPSILON.cbrt() * scale;
            let step = match self.specs[j].bound {
                Bound::Free => step_ext,
                Bound::Interval(..) => (step_ext / chain[k]).min(1e-3 * u[k].abs().max(1.0)),
            };
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[k] += step;
            dn[k] -= step;
            // r = y - f, so df = -(dr).
            let col = (self.residuals(&dn) - self.residuals(&up)) / (2.0 * step);
            jac.set_column(k, &col);
        }
        jac
    }
}

/// Condition number of the column-scaled normal matrix.
fn scaled_condition(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let d: Vec<f64> = (0..n).map(|i| a[(i, i)].sqrt()).collect();
    if d.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return f64::INFINITY;
    }
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (d[i] * d[j]));
    let eig = SymmetricEigen::new(scaled).eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 { f64::INFINITY } else { max / min }
}

pub const SINGULAR_CONDITION: f64 = 1e14;

/// Weighted nonlinear least squares from `init`.
pub fn nlls_fit<M: FitModel + ?Sized>(
    model: &M,
    data: &[DataPoint],
    init: &[f64],
    opts: &FitOptions,
) -> Result<FitResult> {
    let specs = model.params();
    if specs.is_empty() {
        return Err(Error::InvalidInput(format!("{}: model has no parameters", model.name())));
    }
    if init.len() != specs.len() {
        return Err(Error::InvalidInput(format!(
            "{}: {} initial values for {} parameters",
            model.name(),
            init.len(),
            specs.len()
        )));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("initial parameters must be finite".into()));
    }
    if !opts.fixed.is_empty() && opts.fixed.len() != specs.len() {
        return Err(Error::InvalidInput("fixed mask length mismatch".into()));
    }
    let free: Vec<usize> = (0..specs.len())
        .filter(|&j| !opts.fixed.get(j).copied().unwrap_or(false))
        .collect();
    let rows = data.len() * if model.is_complex() { 2 } else { 1 };
    if rows < free.len() {
        return Err(Error::TooFewPoints(format!(
            "{} residuals for {} free parameters",
            rows,
            free.len()
        )));
    }
    if data.iter().any(|d| !(d.weight > 0.0) || !d.x.is_finite() || !d.y.re.is_finite() || !d.y.im.is_finite()) {
        return Err(Error::InvalidInput("data must be finite with positive weights".into()));
    }

    let prob = Problem {
        model,
        data,
        specs,
        base: init.to_vec(),
        free,
        rows,
    };
    let mut u: Vec<f64> = prob.free.iter().map(|&j| specs[j].to_internal(init[j])).collect();
    let mut r = prob.residuals(&u);
    let mut cost = r.norm_squared();
    let mut history = vec![cost.sqrt()];
    let mut lambda = opts.initial_damping;
    let mut converged = cost == 0.0;
    let mut iterations = 0;

    if prob.free.is_empty() {
        converged = true;
    }

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let jac = prob.jacobian(&u);
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        if iterations == 1 {
            let cond = scaled_condition(&a);
            if !(cond < SINGULAR_CONDITION) {
                return Err(Error::Singular { condition: cond });
            }
        }
        let diag: Vec<f64> = (0..a.nrows()).map(|i| a[(i, i)].max(1e-300)).collect();

        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda * diag[i];
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= opts.damping_factor;
                continue;
            };
            let delta = chol.solve(&g);
            let trial: Vec<f64> = u.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let r_trial = prob.residuals(&trial);
            let cost_trial = r_trial.norm_squared();
            if cost_trial.is_finite() && cost_trial < cost {
                let reduction = (cost - cost_trial) / cost;
                let unorm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                let small_step = delta.norm() < opts.step_tolerance * (unorm + opts.step_tolerance);
                u = trial;
                r = r_trial;
                cost = cost_trial;
                history.push(cost.sqrt());
                lambda = (lambda / opts.damping_factor).max(1e-12);
                accepted = true;
                if reduction < opts.cost_tolerance || small_step || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= opts.damping_factor;
        }
        if !accepted {
            // No descent direction left at working precision.
            converged = true;
        }
    }

    let params = prob.external(&u);
    let predicted: Vec<Complex64> = data.iter().map(|d| model.eval(&params, d.x)).collect();
    let r2 = r_squared(data, &predicted);

    let mut covariance = DMatrix::zeros(specs.len(), specs.len());
    if !prob.free.is_empty() {
        let jac = prob.jacobian(&u);
        let a = jac.transpose() * &jac;
        let cond = scaled_condition(&a);
        if !(cond < SINGULAR_CONDITION) {
            return Err(Error::Singular { condition: cond });
        }
        let dof = (rows - prob.free.len()).max(1) as f64;
        let s2 = cost / dof;
        let inv = a
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or(Error::Singular { condition: cond })?;
        for (ka, &ja) in prob.free.iter().enumerate() {
            for (kb, &jb) in prob.free.iter().enumerate() {
                let ca = specs[ja].chain(u[ka]);
                let cb = specs[jb].chain(u[kb]);
                covariance[(ja, jb)] = s2 * inv[(ka, kb)] * ca * cb;
            }
        }
    }

    let mut warnings = model.domain_warnings(&params, &data.iter().map(|d| d.x).collect::<Vec<_>>());
    if !converged {
        warnings.push(format!(
            "not converged after {iterations} iterations (residual norm {:e}, damping {lambda:e})",
            cost.sqrt()
        ));
    }

    Ok(FitResult {
        model: model.name().to_string(),
        names: specs.iter().map(|s| s.name).collect(),
        units: specs.iter().map(|s| s.unit).collect(),
        params,
        covariance,
        rss: cost,
        r_squared: r2,
        iterations,
        converged,
        cost_history: history,
        warnings,
    })
}

/// Jacobian `df_i/dp_j` of the model at `p` in external parameters, stacked
/// real/imaginary rows for complex models, weights ignored. Uses the same
/// path as the solver (analytic when available).
pub fn model_jacobian<M: FitModel + ?Sized>(model: &M, xs: &[f64], p: &[f64]) -> DMatrix<f64> {
    let data: Vec<DataPoint> = xs.iter().map(|&x| DataPoint::complex(x, Complex64::new(0.0, 0.0))).collect();
    let specs: Vec<ParamSpec> = model
        .params()
        .iter()
        .map(|s| ParamSpec { bound: Bound::Free, ..s.clone() })
        .collect();
    let rows = xs.len() * if model.is_complex() { 2 } else { 1 };
    let prob = Problem {
        model,
        data: &data,
        specs: &specs,
        base: p.to_vec(),
        free: (0..p.len()).collect(),
        rows,
    };
    prob.jacobian(p)
}
