//! Explicit finite-volume integration of the Cahn-Hilliard equation
//!
//! ```text
//! dx/dt = div(D grad(G'(x) - 2 kappa lap x))
//! ```
//!
//! on a periodic grid. Each step composes two five-point Laplacians:
//! `x <- x + dt D lap(G'(x) - 2 kappa lap x)`. The update is in divergence
//! form, so the mean composition is conserved to round-off.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{field_stats, laplacian_into, ScalarField2D};
use crate::thermo::{free_energy, GibbsModel};

/// Largest `|x|` tolerated before a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 2.0;

/// Fraction of the explicit stability bound used when no `dt` is given.
pub const DEFAULT_DT_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub d: f64,
    pub kappa: f64,
    pub dt: f64,
    /// Total steps; `None` runs until the last snapshot time.
    pub n_steps: Option<u64>,
    pub snapshot_times: Vec<f64>,
    /// Record diagnostics every `diag_stride` steps (always at step 0 and at the end).
    pub diag_stride: u64,
    /// Skip the stability guard on `dt`.
    pub force_dt: bool,
}

impl SolverParams {
    /// `D = kappa = 1` with the default time step for spacing `h`.
    pub fn with_defaults(h: f64, model: &GibbsModel) -> Self {
        SolverParams {
            d: 1.0,
            kappa: 1.0,
            dt: default_dt(h, 1.0, 1.0, model),
            n_steps: None,
            snapshot_times: vec![0.0, 10.0, 50.0, 500.0],
            diag_stride: 1,
            force_dt: false,
        }
    }

    pub fn validate(&self, h: f64, model: &GibbsModel) -> Result<()> {
        for (name, v) in [("D", self.d), ("kappa", self.kappa), ("dt", self.dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} = {v} must be positive")));
            }
        }
        if self.diag_stride == 0 {
            return Err(Error::InvalidInput("diagnostics stride must be >= 1".into()));
        }
        if self.snapshot_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::InvalidInput("snapshot times must be finite and >= 0".into()));
        }
        if self.snapshot_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("snapshot times must be sorted ascending".into()));
        }
        if let (Some(n), Some(&last)) = (self.n_steps, self.snapshot_times.last()) {
            if n < self.step_at(last) {
                return Err(Error::InvalidInput(format!(
                    "n_steps = {n} ends before the last snapshot time {last}"
                )));
            }
        }
        let bound = stability_bound(h, self.d, self.kappa, model);
        if !self.force_dt && self.dt > bound {
            return Err(Error::TimeStepTooLarge { dt: self.dt, bound });
        }
        Ok(())
    }

    /// First step whose time is at or after `t`.
    pub fn step_at(&self, t: f64) -> u64 {
        // Relative slack so that e.g. 10 / 0.01 lands on step 1000, not 1001.
        (t / self.dt * (1.0 - 1e-12)).ceil().max(0.0) as u64
    }

    pub fn total_steps(&self) -> u64 {
        self.n_steps.unwrap_or_else(|| {
            self.snapshot_times
                .last()
                .map_or(0, |&t| self.step_at(t))
        })
    }
}

/// Explicit forward-Euler stability bound `2 / lambda_max` for the linearized
/// operator, with `lambda_max = D (8/h^2) (c + 16 kappa / h^2)` and `c` the
/// largest bulk curvature on [0, 1].
pub fn stability_bound(h: f64, d: f64, kappa: f64, model: &GibbsModel) -> f64 {
    let c = max_curvature(model).max(0.0);
    let h2 = h * h;
    h2 * h2 / (4.0 * d * (c * h2 + 16.0 * kappa))
}

pub fn default_dt(h: f64, d: f64, kappa: f64, model: &GibbsModel) -> f64 {
    DEFAULT_DT_FRACTION * stability_bound(h, d, kappa, model)
}

fn max_curvature(model: &GibbsModel) -> f64 {
    match model {
        GibbsModel::DoubleWell => 2.0,
        _ => (0..=1000)
            .map(|k| model.d2gibbs(k as f64 / 1000.0))
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostic {
    pub step: u64,
    pub time: f64,
    /// Total composition `sum x h^2`.
    pub mass: f64,
    pub free_energy: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub field: ScalarField2D,
    pub t: f64,
    pub step: u64,
    pub diagnostics: Vec<Diagnostic>,
}

impl SolverState {
    pub fn new(field: ScalarField2D) -> Self {
        SolverState {
            field,
            t: 0.0,
            step: 0,
            diagnostics: Vec::new(),
        }
    }
}

/// Chemical potential `G'(x) - 2 kappa lap(x)`.
pub fn chemical_potential_field(f: &ScalarField2D, model: &GibbsModel, kappa: f64) -> ScalarField2D {
    let mut out = vec![0.0; f.spec().len()];
    chemical_potential_into(f, model, kappa, &mut out);
    ScalarField2D::from_raw(f.spec(), out)
}

fn chemical_potential_into(f: &ScalarField2D, model: &GibbsModel, kappa: f64, out: &mut [f64]) {
    laplacian_into(f.spec(), f.values(), out);
    out.par_iter_mut()
        .zip(f.values().par_iter())
        .for_each(|(mu, &x)| *mu = model.dgibbs(x) - 2.0 * kappa * *mu);
}

fn diagnose(state: &SolverState, model: &GibbsModel, kappa: f64) -> Diagnostic {
    let h = state.field.spec().h;
    let stats = field_stats(&state.field);
    Diagnostic {
        step: state.step,
        time: state.t,
        mass: state.field.sum() * h * h,
        free_energy: free_energy(&state.field, model, kappa),
        min: stats.min,
        max: stats.max,
    }
}

/// Reusable scratch buffers for repeated steps.
struct Stepper {
    mu: Vec<f64>,
    lap_mu: Vec<f64>,
}

impl Stepper {
    fn new(len: usize) -> Self {
        Stepper {
            mu: vec![0.0; len],
            lap_mu: vec![0.0; len],
        }
    }

    fn advance(&mut self, state: &mut SolverState, params: &SolverParams, model: &GibbsModel) -> Result<()> {
        let spec = state.field.spec();
        chemical_potential_into(&state.field, model, params.kappa, &mut self.mu);
        laplacian_into(spec, &self.mu, &mut self.lap_mu);
        let scale = params.dt * params.d;
        let bad = state
            .field
            .values_mut()
            .par_iter_mut()
            .zip(self.lap_mu.par_iter())
            .map(|(x, &l)| {
                *x += scale * l;
                !(x.abs() <= DIVERGENCE_LIMIT)
            })
            .reduce(|| false, |a, b| a || b);
        state.step += 1;
        state.t = state.step as f64 * params.dt;
        if bad {
            let worst = state
                .field
                .values()
                .iter()
                .fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
            return Err(Error::Diverged {
                step: state.step,
                time: state.t,
                reason: format!("max |x| = {worst} exceeds {DIVERGENCE_LIMIT}"),
            });
        }
        Ok(())
    }
}

/// One explicit step. Appends a diagnostic record for the new state.
pub fn ch_step(mut state: SolverState, params: &SolverParams, model: &GibbsModel) -> Result<SolverState> {
    params.validate(state.field.spec().h, model)?;
    Stepper::new(state.field.spec().len()).advance(&mut state, params, model)?;
    let diag = diagnose(&state, model, params.kappa);
    state.diagnostics.push(diag);
    Ok(state)
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    /// Time requested in the schedule.
    pub requested: f64,
    /// Actual solver time of the captured step.
    pub time: f64,
    pub step: u64,
    pub field: ScalarField2D,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<Diagnostic>,
    pub final_state: SolverState,
}

/// A run that stopped early; carries everything captured up to the failure.
#[derive(Debug)]
pub struct RunAborted {
    pub error: Error,
    pub partial: Option<RunOutput>,
}

impl RunAborted {
    pub fn last_stable_snapshot(&self) -> Option<&Snapshot> {
        self.partial.as_ref().and_then(|p| p.snapshots.last())
    }
}

impl std::fmt::Display for RunAborted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for RunAborted {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<Error> for RunAborted {
    fn from(error: Error) -> Self {
        RunAborted { error, partial: None }
    }
}

/// Integrates from `init`, capturing a snapshot at the first step at or after
/// each requested time.
pub fn run(init: ScalarField2D, params: &SolverParams, model: &GibbsModel) -> Result<RunOutput, RunAborted> {
    params.validate(init.spec().h, model)?;
    let total = params.total_steps();
    let targets: Vec<(f64, u64)> = params
        .snapshot_times
        .iter()
        .map(|&t| (t, params.step_at(t)))
        .collect();

    let mut state = SolverState::new(init);
    let mut snapshots = Vec::with_capacity(targets.len());
    let mut next = 0;
    let mut stepper = Stepper::new(state.field.spec().len());
    state.diagnostics.push(diagnose(&state, model, params.kappa));

    loop {
        while next < targets.len() && targets[next].1 == state.step {
            snapshots.push(Snapshot {
                requested: targets[next].0,
                time: state.t,
                step: state.step,
                field: state.field.clone(),
            });
            next += 1;
        }
        if state.step >= total {
            break;
        }
        if let Err(error) = stepper.advance(&mut state, params, model) {
            let diagnostics = std::mem::take(&mut state.diagnostics);
            let last_good = snapshots.last().map(|s: &Snapshot| SolverState {
                field: s.field.clone(),
                t: s.time,
                step: s.step,
                diagnostics: Vec::new(),
            });
            return Err(RunAborted {
                error,
                partial: last_good.map(|final_state| RunOutput {
                    snapshots,
                    diagnostics,
                    final_state,
                }),
            });
        }
        if state.step % params.diag_stride == 0 || state.step == total {
            let diag = diagnose(&state, model, params.kappa);
            state.diagnostics.push(diag);
        }
    }

    let diagnostics = state.diagnostics.clone();
    Ok(RunOutput {
        snapshots,
        diagnostics,
        final_state: state,
    })
}
