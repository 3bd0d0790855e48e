use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spinodalkit::config::RunConfig;
use spinodalkit::fit::{
    fit_conductivity_regimes, guess_gl_hc2, guess_inv_s21, guess_powerlaw_hc2, nlls_fit, DataPoint, FitOptions,
    FitResult, GlHc2, InvS21, PowerLawHc2, RegimeWindows,
};
use spinodalkit::micro::{analyze_snapshot, AnalysisRow};
use spinodalkit::solver::{run, RunOutput};
use spinodalkit::transport::{extract, hall_slope_ols, tc_midpoint, TransportReport};
use spinodalkit::{gaussian_field, io, Error, GibbsModel};

const THREADS_ENV: &str = "SPINODALKIT_THREADS";

#[derive(Parser)]
#[command(name = "spinodalkit", version, about = "Spinodal decomposition simulation and thin-film analysis")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the Cahn-Hilliard equation; writes snapshots and diagnostics.
    Simulate(SimulateArgs),
    /// Microstructure report for every snapshot in a directory (or one file).
    Analyze(AnalyzeArgs),
    /// Free-electron and kinetic-inductance table from transport records.
    Transport(TransportArgs),
    /// Fit the upper critical field versus temperature.
    FitHc2(FitHc2Args),
    /// Fit a resonator transmission trace.
    FitResonance(FitArgs),
    /// Fit the linear-in-T and linear-in-sqrt(T) conductivity regimes.
    FitSigma(FitSigmaArgs),
    /// Convert snapshot CSVs to PPM images.
    Render(RenderArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides [paths] out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides [init] seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Run even if dt exceeds the explicit stability bound.
    #[arg(long)]
    force_dt: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Snapshot directory or a single snapshot CSV.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Supplies [analysis] threshold and contrast.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for analysis.csv; stdout if omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransportArgs {
    /// CSV: label,d_m,Rs_ohm_sq,Tc_K,hall_slope_ohm_per_T
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// R(T) trace (T_K,R_ohm); its midpoint replaces T_c. Single-record input only.
    #[arg(long, value_name = "PATH")]
    rt: Option<PathBuf>,
    /// Hall sweep (muH_T,Rxy_ohm); its OLS slope replaces the record's. Single-record input only.
    #[arg(long, value_name = "PATH")]
    hall: Option<PathBuf>,
    /// Directory for transport_report.csv; stdout if omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Directory for the parameter CSV; the table always goes to stdout.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Hc2Model {
    Gl,
    Powerlaw,
}

#[derive(Args)]
struct FitHc2Args {
    #[command(flatten)]
    io: FitArgs,
    #[arg(long, value_enum, default_value = "gl")]
    model: Hc2Model,
    /// Hold T_c at this value (K), e.g. from a resistive transition.
    #[arg(long, value_name = "K")]
    fix_tc: Option<f64>,
}

#[derive(Args)]
struct FitSigmaArgs {
    #[command(flatten)]
    io: FitArgs,
    /// Window for sigma ~ T, as LO,HI in K.
    #[arg(long, value_name = "LO,HI", value_parser = parse_window, default_value = "100,300")]
    high_window: (f64, f64),
    /// Window for sigma ~ sqrt(T), as LO,HI in K.
    #[arg(long, value_name = "LO,HI", value_parser = parse_window, default_value = "10,60")]
    low_window: (f64, f64),
}

#[derive(Args)]
struct RenderArgs {
    /// Snapshot directory or a single snapshot CSV.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Image directory; defaults to the input directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad number '{a}'"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad number '{b}'"))?;
    if !(lo < hi) {
        return Err("LO must be below HI".into());
    }
    Ok((lo, hi))
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = configure_threads(cli.threads).and_then(|()| match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Transport(a) => transport(a),
        Command::FitHc2(a) => fit_hc2(a),
        Command::FitResonance(a) => fit_resonance(a),
        Command::FitSigma(a) => fit_sigma(a),
        Command::Render(a) => render(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn configure_threads(flag: Option<usize>) -> CmdResult {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Failure::Usage(format!("{THREADS_ENV} = '{v}' is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    match n {
        Some(0) => Err(Failure::Usage("thread count must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot start {n} threads: {e}"))),
        None => Ok(()),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Error> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

/// Writes `text` to `dir/name`, or to stdout when no directory is given.
fn emit(dir: Option<&Path>, name: &str, text: &str) -> Result<(), Error> {
    match dir {
        Some(d) => {
            io::create_dir(d)?;
            let path = d.join(name);
            io::write_text(&path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn write_run(out: &Path, r: &RunOutput) -> Result<(), Error> {
    for s in &r.snapshots {
        io::write_field(&out.join(io::snapshot_file_name(s.requested)), &s.field)?;
    }
    io::write_text(&out.join("diagnostics.csv"), &io::format_diagnostics(&r.diagnostics))
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(out) = a.out {
        cfg.out = out;
    }
    if let Some(seed) = a.seed {
        cfg.init.seed = seed;
    }
    if a.force_dt {
        cfg.solver.force_dt = true;
    }
    let model = GibbsModel::DoubleWell;
    let params = cfg.solver_params(&model);
    let init = gaussian_field(cfg.grid, cfg.init.mean, cfg.init.variance, cfg.init.seed)?;
    io::create_dir(&cfg.out)?;
    io::write_text(&cfg.out.join("config.ini"), &cfg.serialize())?;
    eprintln!(
        "{}x{} grid, dt = {}, {} steps",
        cfg.grid.nx,
        cfg.grid.ny,
        params.dt,
        params.total_steps()
    );
    match run(init, &params, &model) {
        Ok(r) => {
            write_run(&cfg.out, &r)?;
            eprintln!("wrote {} snapshots to {}", r.snapshots.len(), cfg.out.display());
            Ok(())
        }
        Err(aborted) => {
            if let Some(partial) = &aborted.partial {
                write_run(&cfg.out, partial)?;
                if let Some(s) = aborted.last_stable_snapshot() {
                    eprintln!("last stable snapshot: t = {} (step {})", s.time, s.step);
                }
            }
            Err(aborted.error.into())
        }
    }
}

fn snapshot_inputs(input: &Path) -> Result<Vec<(f64, PathBuf)>, Error> {
    if input.is_dir() {
        let list = io::list_snapshots(input)?;
        if list.is_empty() {
            return Err(Error::InvalidInput(format!("no snap_t*.csv files in {}", input.display())));
        }
        Ok(list)
    } else {
        Ok(vec![(io::snapshot_time_from_name(input).unwrap_or(0.0), input.to_path_buf())])
    }
}

fn analyze(a: AnalyzeArgs) -> CmdResult {
    let settings = load_config(a.config.as_deref())?.analysis;
    let mut text = format!("{}\n", AnalysisRow::HEADER);
    for (t, path) in snapshot_inputs(&a.input)? {
        let f = io::read_field(&path)?;
        text.push_str(&analyze_snapshot(t, &f, settings)?.to_csv());
        text.push('\n');
    }
    emit(a.out.as_deref(), "analysis.csv", &text)?;
    Ok(())
}

fn transport(a: TransportArgs) -> CmdResult {
    let mut records = io::read_transport(&a.input)?;
    if (a.rt.is_some() || a.hall.is_some()) && records.len() != 1 {
        return Err(Failure::Usage(format!(
            "--rt and --hall need a single-record input, {} has {}",
            a.input.display(),
            records.len()
        )));
    }
    if let Some(rt) = &a.rt {
        records[0].t_c = tc_midpoint(&io::read_rt_trace(rt)?)?;
    }
    if let Some(hall) = &a.hall {
        let (slope, offset) = hall_slope_ols(&io::read_hall_sweep(hall)?)?;
        eprintln!("Hall slope {slope:e} ohm/T, offset {offset:e} ohm");
        records[0].hall_slope = slope;
    }
    let mut text = format!("{}\n", TransportReport::HEADER);
    for r in &records {
        text.push_str(&extract(r)?.to_csv());
        text.push('\n');
    }
    emit(a.out.as_deref(), "transport_report.csv", &text)?;
    Ok(())
}

fn report_fit(r: &FitResult, out: Option<&Path>, name: &str) -> CmdResult {
    print!("{}", io::format_fit_table(r));
    if let Some(d) = out {
        io::create_dir(d)?;
        let path = d.join(name);
        io::write_text(&path, &io::format_fit_csv(r))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn fit_hc2(a: FitHc2Args) -> CmdResult {
    let pairs = io::read_hc2(&a.io.input)?;
    let data: Vec<DataPoint> = pairs.iter().map(|&(t, h)| DataPoint::real(t, h)).collect();
    let r = match a.model {
        Hc2Model::Gl => {
            let mut init = guess_gl_hc2(&pairs)?;
            let opts = match a.fix_tc {
                Some(tc) => {
                    init[1] = tc;
                    FitOptions::default().fixing(vec![false, true])
                }
                None => FitOptions::default(),
            };
            nlls_fit(&GlHc2, &data, &init, &opts)?
        }
        Hc2Model::Powerlaw => {
            let mut init = guess_powerlaw_hc2(&pairs)?;
            let opts = match a.fix_tc {
                Some(tc) => {
                    init[3] = tc;
                    FitOptions::default().fixing(vec![false, false, false, true])
                }
                None => FitOptions::default(),
            };
            nlls_fit(&PowerLawHc2, &data, &init, &opts)?
        }
    };
    report_fit(&r, a.io.out.as_deref(), "fit_hc2.csv")
}

fn fit_resonance(a: FitArgs) -> CmdResult {
    let data = io::read_s21(&a.input)?;
    let init = guess_inv_s21(&data)?;
    let r = nlls_fit(&InvS21, &data, &init, &FitOptions::default())?;
    report_fit(&r, a.out.as_deref(), "fit_resonance.csv")
}

fn fit_sigma(a: FitSigmaArgs) -> CmdResult {
    let trace = io::read_sigma(&a.io.input)?;
    let windows = RegimeWindows {
        high_t: a.high_window,
        low_t: a.low_window,
    };
    let r = fit_conductivity_regimes(&trace, windows)?;
    let mut text = String::from("regime,basis,T_lo_K,T_hi_K,slope,intercept,r_squared,n_points\n");
    for (name, basis, w, f) in [
        ("high_T", "T", windows.high_t, r.high_t),
        ("low_T", "sqrt_T", windows.low_t, r.low_t),
    ] {
        println!(
            "{name:<7} sigma = {:.6e} + {:.6e} * {basis}   R^2 = {:.6}  ({} points in [{}, {}] K)",
            f.intercept, f.slope, f.r_squared, f.n_points, w.0, w.1
        );
        text.push_str(&format!(
            "{name},{basis},{},{},{},{},{},{}\n",
            w.0, w.1, f.slope, f.intercept, f.r_squared, f.n_points
        ));
    }
    if let Some(d) = a.io.out.as_deref() {
        emit(Some(d), "fit_sigma.csv", &text)?;
    }
    Ok(())
}

fn render(a: RenderArgs) -> CmdResult {
    let inputs = snapshot_inputs(&a.input)?;
    for (_, path) in inputs {
        let f = io::read_field(&path)?;
        let dir = match &a.out {
            Some(d) => d.clone(),
            None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
        };
        io::create_dir(&dir)?;
        let img = dir.join(path.with_extension("ppm").file_name().expect("file name"));
        io::render_ppm(&f, &img)?;
        eprintln!("wrote {}", img.display());
    }
    Ok(())
}
