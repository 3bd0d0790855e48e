//! INI-style run configuration.
//!
//! ```text
//! [grid]
//! nx = 256
//! ny = 256
//! h = 1
//!
//! [init]
//! mean = 0.48
//! variance = 0.001
//! seed = 42
//!
//! [solver]
//! D = 1
//! kappa = 1
//! dt = auto
//! n_steps = auto
//! snapshot_times = 0, 10, 50, 500
//! diag_stride = 1
//! force_dt = false
//!
//! [analysis]
//! threshold = 0.5
//! contrast = 0.0001
//!
//! [paths]
//! out = out
//! ```
//!
//! Every key is optional. Unknown sections and keys are rejected so that a
//! typo never silently falls back to a default. `#` and `;` start comments.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::field::GridSpec;
use crate::micro::AnalysisSettings;
use crate::solver::{default_dt, SolverParams};
use crate::thermo::GibbsModel;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq)]
pub struct InitConfig {
    pub mean: f64,
    pub variance: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub d: f64,
    pub kappa: f64,
    /// `None` means the default fraction of the stability bound.
    pub dt: Option<f64>,
    /// `None` runs to the last snapshot time.
    pub n_steps: Option<u64>,
    pub snapshot_times: Vec<f64>,
    pub diag_stride: u64,
    pub force_dt: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub init: InitConfig,
    pub solver: SolverConfig,
    pub analysis: AnalysisSettings,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridSpec { nx: 256, ny: 256, h: 1.0 },
            init: InitConfig {
                mean: 0.48,
                variance: 1e-3,
                seed: DEFAULT_SEED,
            },
            solver: SolverConfig {
                d: 1.0,
                kappa: 1.0,
                dt: None,
                n_steps: None,
                snapshot_times: vec![0.0, 10.0, 50.0, 500.0],
                diag_stride: 1,
                force_dt: false,
            },
            analysis: AnalysisSettings::default(),
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn solver_params(&self, model: &GibbsModel) -> SolverParams {
        let s = &self.solver;
        SolverParams {
            d: s.d,
            kappa: s.kappa,
            dt: s
                .dt
                .unwrap_or_else(|| default_dt(self.grid.h, s.d, s.kappa, model)),
            n_steps: s.n_steps,
            snapshot_times: s.snapshot_times.clone(),
            diag_stride: s.diag_stride,
            force_dt: s.force_dt,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_config(&text)
    }

    /// Text that parses back to an identical config.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let g = &self.grid;
        let i = &self.init;
        let v = &self.solver;
        let auto = |x: Option<String>| x.unwrap_or_else(|| "auto".into());
        let times: Vec<String> = v.snapshot_times.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(s, "[grid]\nnx = {}\nny = {}\nh = {}\n", g.nx, g.ny, g.h);
        let _ = writeln!(s, "[init]\nmean = {}\nvariance = {}\nseed = {}\n", i.mean, i.variance, i.seed);
        let _ = writeln!(
            s,
            "[solver]\nD = {}\nkappa = {}\ndt = {}\nn_steps = {}\nsnapshot_times = {}\ndiag_stride = {}\nforce_dt = {}\n",
            v.d,
            v.kappa,
            auto(v.dt.map(|x| x.to_string())),
            auto(v.n_steps.map(|x| x.to_string())),
            times.join(", "),
            v.diag_stride,
            v.force_dt
        );
        let _ = writeln!(
            s,
            "[analysis]\nthreshold = {}\ncontrast = {}\n",
            self.analysis.threshold, self.analysis.contrast
        );
        let _ = writeln!(s, "[paths]\nout = {}", self.out.display());
        s
    }
}

struct Entry<'a> {
    line: usize,
    key: String,
    value: &'a str,
}

impl Entry<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Config {
            line: self.line,
            key: self.key.clone(),
            message: message.into(),
        }
    }

    fn float(&self) -> Result<f64> {
        self.value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(format!("expected a number, got '{}'", self.value)))
    }

    fn positive(&self) -> Result<f64> {
        let v = self.float()?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(format!("must be > 0, got {v}")))
        }
    }

    fn unit_interval(&self) -> Result<f64> {
        let v = self.float()?;
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(self.err(format!("must lie in [0, 1], got {v}")))
        }
    }

    fn uint(&self) -> Result<u64> {
        self.value
            .parse::<u64>()
            .map_err(|_| self.err(format!("expected a non-negative integer, got '{}'", self.value)))
    }

    fn is_auto(&self) -> bool {
        self.value.eq_ignore_ascii_case("auto")
    }

    fn boolean(&self) -> Result<bool> {
        match self.value.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(self.err(format!("expected true or false, got '{}'", self.value))),
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut section: Option<String> = None;
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split(['#', ';']).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').map(str::trim).ok_or_else(|| Error::Config {
                line,
                key: content.to_string(),
                message: "unterminated section header".into(),
            })?;
            if !matches!(name, "grid" | "init" | "solver" | "analysis" | "paths") {
                return Err(Error::Config {
                    line,
                    key: name.to_string(),
                    message: "unknown section".into(),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            key: content.to_string(),
            message: "expected 'key = value'".into(),
        })?;
        let sec = section.as_deref().ok_or_else(|| Error::Config {
            line,
            key: k.trim().to_string(),
            message: "key outside of any [section]".into(),
        })?;
        let e = Entry {
            line,
            key: format!("{sec}.{}", k.trim()),
            value: v.trim(),
        };
        if seen.contains(&e.key) {
            return Err(e.err("duplicate key"));
        }
        seen.push(e.key.clone());

        match e.key.as_str() {
            "grid.nx" => cfg.grid.nx = grid_side(&e)?,
            "grid.ny" => cfg.grid.ny = grid_side(&e)?,
            "grid.h" => cfg.grid.h = e.positive()?,
            "init.mean" => cfg.init.mean = e.unit_interval()?,
            "init.variance" => {
                let v = e.float()?;
                if v < 0.0 {
                    return Err(e.err(format!("must be >= 0, got {v}")));
                }
                cfg.init.variance = v;
            }
            "init.seed" => cfg.init.seed = e.uint()?,
            "solver.D" => cfg.solver.d = e.positive()?,
            "solver.kappa" => cfg.solver.kappa = e.positive()?,
            "solver.dt" => cfg.solver.dt = if e.is_auto() { None } else { Some(e.positive()?) },
            "solver.n_steps" => cfg.solver.n_steps = if e.is_auto() { None } else { Some(e.uint()?) },
            "solver.snapshot_times" => cfg.solver.snapshot_times = snapshot_times(&e)?,
            "solver.diag_stride" => {
                let n = e.uint()?;
                if n == 0 {
                    return Err(e.err("must be >= 1"));
                }
                cfg.solver.diag_stride = n;
            }
            "solver.force_dt" => cfg.solver.force_dt = e.boolean()?,
            "analysis.threshold" => cfg.analysis.threshold = e.unit_interval()?,
            "analysis.contrast" => {
                let c = e.float()?;
                if !(c > 0.0 && c <= 1.0) {
                    return Err(e.err(format!("must lie in (0, 1], got {c}")));
                }
                cfg.analysis.contrast = c;
            }
            "paths.out" => {
                if e.value.is_empty() {
                    return Err(e.err("empty path"));
                }
                cfg.out = PathBuf::from(e.value);
            }
            _ => return Err(e.err("unknown key")),
        }
    }
    Ok(cfg)
}

fn grid_side(e: &Entry) -> Result<usize> {
    let n = e.uint()?;
    if n < 4 {
        return Err(e.err(format!("must be >= 4, got {n}")));
    }
    usize::try_from(n).map_err(|_| e.err("too large"))
}

fn snapshot_times(e: &Entry) -> Result<Vec<f64>> {
    if e.value.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for tok in e.value.split(',') {
        let t: f64 = tok
            .trim()
            .parse()
            .ok()
            .filter(|t: &f64| t.is_finite() && *t >= 0.0)
            .ok_or_else(|| e.err(format!("bad time '{}'", tok.trim())))?;
        if out.last().is_some_and(|&p| t <= p) {
            return Err(e.err("times must be strictly increasing"));
        }
        out.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!((c.grid.nx, c.grid.ny), (256, 256));
        assert_eq!(c.init.mean, 0.48);
        assert_eq!(c.init.variance, 1e-3);
        assert_eq!((c.solver.d, c.solver.kappa, c.solver.dt), (1.0, 1.0, None));
    }

    #[test]
    fn mean_round_trips() {
        let c = parse_config("[init]\nmean = 0.48\n").unwrap();
        let again = parse_config(&c.serialize()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.init.mean, 0.48);
    }

    #[test]
    fn negative_dt_names_key() {
        let err = parse_config("[solver]\ndt = -1\n").unwrap_err();
        match &err {
            Error::Config { line, key, .. } => {
                assert_eq!(*line, 2);
                assert_eq!(key, "solver.dt");
            }
            other => panic!("{other:?}"),
        }
        assert!(err.to_string().contains("solver.dt"));
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config("# comment\n[grid]\nnx = 64\nnz = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 4, ref key, .. } if key == "grid.nz"), "{err}");
        assert!(parse_config("[mesh]\n").is_err());
        assert!(parse_config("nx = 3\n").is_err());
        assert!(parse_config("[grid]\nnx 64\n").is_err());
        assert!(parse_config("[grid]\nnx = 64\nnx = 32\n").is_err());
    }

    #[test]
    fn full_file() {
        let text = "[grid]\nnx = 64 ; side\nny = 32\nh = 0.5\n[solver]\ndt = 0.001\nn_steps = 500\n\
                    snapshot_times = 0, 0.25\nforce_dt = yes\n[paths]\nout = runs/a\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.grid, GridSpec { nx: 64, ny: 32, h: 0.5 });
        assert_eq!(c.solver.dt, Some(0.001));
        assert_eq!(c.solver.n_steps, Some(500));
        assert_eq!(c.solver.snapshot_times, vec![0.0, 0.25]);
        assert!(c.solver.force_dt);
        assert_eq!(c.out, PathBuf::from("runs/a"));
        assert_eq!(parse_config(&c.serialize()).unwrap(), c);
        let p = c.solver_params(&GibbsModel::DoubleWell);
        assert_eq!(p.dt, 0.001);
    }

    #[test]
    fn unsorted_snapshots_rejected() {
        assert!(parse_config("[solver]\nsnapshot_times = 0, 50, 10\n").is_err());
    }

    proptest! {
        #[test]
        fn serialize_parse_identity(
            nx in 4usize..600, ny in 4usize..600, h in 1e-3f64..10.0,
            mean in 0.0f64..=1.0, var in 0.0f64..0.1, seed in any::<u64>(),
            dt in proptest::option::of(1e-6f64..1.0), steps in proptest::option::of(0u64..1_000_000),
            times in proptest::collection::btree_set(0u32..100_000, 0..6),
            stride in 1u64..100, force in any::<bool>(),
            thr in 0.0f64..=1.0, contrast in 1e-9f64..=1.0,
        ) {
            let c = RunConfig {
                grid: GridSpec { nx, ny, h },
                init: InitConfig { mean, variance: var, seed },
                solver: SolverConfig {
                    d: 1.0, kappa: 0.5, dt, n_steps: steps,
                    snapshot_times: times.into_iter().map(|t| t as f64 / 7.0).collect(),
                    diag_stride: stride, force_dt: force,
                },
                analysis: AnalysisSettings { threshold: thr, contrast },
                out: PathBuf::from("x/y"),
            };
            prop_assert_eq!(parse_config(&c.serialize()).unwrap(), c);
        }
    }
}
