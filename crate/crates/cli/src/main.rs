//! `arcpose` command-line tool.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use arcpose::frames::rotation_to_euler;
use arcpose::harness::{
    cdf, cdf_grid, read_records_csv, records_for, run_monte_carlo, summarize_by_algorithm, sweep, write_results,
    write_sweep, ExperimentConfig, HarnessError, SummaryStats, SweepParam, SweepResult, PERCENTILES,
};
use arcpose::sim::{Scenario, Scene, SceneFile};
use arcpose::solver::{oavpa_pair, solve_oavpa, solve_vpa, solve_vpca, vpca_pair, Algorithm, PoseEstimate, SolveError};

use config::{read_json, ObservationFile, RunFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {}", .0.kind(), .0)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn from_io(path: &Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::FileNotFound(path.to_path_buf())
        } else {
            CliError::Io {
                path: path.to_path_buf(),
                message: e.to_string(),
            }
        }
    }

    /// 2 for anything the user can fix in the invocation or config, 1 for
    /// failures while running.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::FileNotFound(_) | CliError::Config(_) => 2,
            CliError::Harness(HarnessError::ConfigInvalid(_)) => 2,
            CliError::Solve(_) | CliError::Harness(_) | CliError::Io { .. } => 1,
        }
    }
}

/// Camera pose from arcs of circular ceiling luminaires, plus the
/// simulation harness used to evaluate it.
#[derive(Debug, Parser)]
#[command(name = "arcpose", version)]
struct Cli {
    /// Print progress and the resolved configuration on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate one pose from a scene file and an observation file.
    Solve(SolveArgs),
    /// Monte Carlo run; writes records, CDF, summary and manifest.
    Run(RunArgs),
    /// Repeat a run over pixel noise levels.
    SweepNoise(SweepArgs),
    /// Repeat a run over luminaire radii.
    SweepRadius(SweepArgs),
    /// Recompute the E_loc CDF of a records.csv file.
    Cdf(CdfArgs),
    /// Check a scene file.
    SceneValidate(SceneArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Scene JSON (luminaire ids, centres, radii).
    #[arg(long, value_parser = existing_file)]
    scene: PathBuf,
    /// Observation JSON (camera and fitted ellipses).
    #[arg(long, value_parser = existing_file)]
    observations: PathBuf,
    /// vpa, vpca or oavpa.
    #[arg(long, default_value = "vpa", value_parser = solve_algorithm)]
    algorithm: Algorithm,
    /// csv prints one row: algorithm,roll_deg,pitch_deg,yaw_deg,x_m,y_m,z_m
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Experiment JSON, e.g. tableIII.json.
    #[arg(long, value_parser = existing_file)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, env = "VPA_OUT_DIR", default_value = "results")]
    out: PathBuf,
    /// Master seed; sample i uses stream i.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of simulated locations.
    #[arg(long)]
    samples: Option<usize>,
    /// Pixel noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    /// Luminaire radius in m, applied to every luminaire.
    #[arg(long)]
    radius: Option<f64>,
    /// complete, complete_semicircle, semicircles, superior_arcs, mixed or
    /// image_bounds.
    #[arg(long)]
    arc_mode: Option<Scenario>,
    /// Comma-separated list of vpa, vpca, oavpa, pnp.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    /// Summary table format on stdout.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Overrides,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Overrides,
    /// Comma-separated sweep values; defaults to the config's sweep section.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct CdfArgs {
    /// records.csv written by `run`.
    #[arg(long, value_parser = existing_file)]
    records: PathBuf,
    /// Upper end of the grid (m).
    #[arg(long, default_value_t = 1.0)]
    max: f64,
    /// Grid step (m).
    #[arg(long, default_value_t = 0.01)]
    step: f64,
}

#[derive(Debug, Args)]
struct SceneArgs {
    #[arg(long, value_parser = existing_file)]
    scene: PathBuf,
}

fn existing_file(s: &str) -> Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.is_file() {
        Ok(p)
    } else {
        Err(format!("FileNotFound: {s}"))
    }
}

fn solve_algorithm(s: &str) -> Result<Algorithm, String> {
    match s.parse::<Algorithm>()? {
        Algorithm::Pnp => Err("pnp needs point correspondences; use vpa, vpca or oavpa".into()),
        a => Ok(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Run(a) => cmd_run(&a.common, cli.verbose),
        Command::SweepNoise(a) => cmd_sweep(a, SweepParam::Noise, cli.verbose),
        Command::SweepRadius(a) => cmd_sweep(a, SweepParam::Radius, cli.verbose),
        Command::Cdf(a) => cmd_cdf(a),
        Command::SceneValidate(a) => cmd_scene_validate(a),
    }
}

fn load_scene(path: &Path) -> Result<Scene, CliError> {
    let file: SceneFile = read_json(path)?;
    Scene::from_file(&file).map_err(|e| CliError::Config(e.to_string()))
}

fn cmd_solve(a: &SolveArgs) -> Result<(), CliError> {
    let scene = load_scene(&a.scene)?;
    let obs: ObservationFile = read_json(&a.observations)?;
    if obs.schema_version != config::CONFIG_SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "schema_version: expected {}, got {}",
            config::CONFIG_SCHEMA_VERSION,
            obs.schema_version
        )));
    }
    obs.camera
        .validate()
        .map_err(|e| CliError::Config(format!("camera: {e}")))?;
    let lums = scene.luminaire_map();
    let k = &obs.camera;
    let est = match a.algorithm {
        Algorithm::Vpca => {
            let (c, o) = vpca_pair(&obs.observations)?;
            solve_vpca(&c, &o, &lums, k)?
        }
        Algorithm::Oavpa => {
            let (f, s) = oavpa_pair(&obs.observations)?;
            solve_oavpa(&f, &s, &lums, k)?
        }
        _ => solve_vpa(&obs.observations, &lums, k)?,
    };
    print_estimate(&est, a.format)
}

fn print_estimate(est: &PoseEstimate, format: Format) -> Result<(), CliError> {
    let [roll, pitch, yaw] = rotation_to_euler(&est.pose.rotation)
        .map_err(SolveError::from)?
        .to_degrees();
    let t = est.pose.translation;
    match format {
        Format::Csv => println!("{},{roll},{pitch},{yaw},{},{},{}", est.algorithm, t.x, t.y, t.z),
        Format::Text => {
            println!("algorithm  {}", est.algorithm);
            println!("roll_deg   {roll:.6}");
            println!("pitch_deg  {pitch:.6}");
            println!("yaw_deg    {yaw:.6}");
            println!("x_m        {:.6}", t.x);
            println!("y_m        {:.6}", t.y);
            println!("z_m        {:.6}", t.z);
        }
    }
    Ok(())
}

fn experiment(o: &Overrides, verbose: bool) -> Result<(RunFile, ExperimentConfig), CliError> {
    let mut file: RunFile = read_json(&o.config)?;
    if let Some(s) = o.seed {
        file.seed = s;
    }
    if let Some(n) = o.samples {
        file.samples = n;
    }
    if let Some(s) = o.sigma {
        file.sigma_px = s;
    }
    if o.radius.is_some() {
        file.radius_m = o.radius;
    }
    if let Some(m) = o.arc_mode {
        file.arc_mode = m;
    }
    if let Some(a) = &o.algorithms {
        file.algorithms = a.clone();
    }
    let cfg = file.experiment()?;
    if verbose {
        eprintln!("{}", serde_json::to_string_pretty(&file).expect("config serialises"));
    }
    Ok((file, cfg))
}

fn cm(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn summary_header() -> Vec<String> {
    let mut h: Vec<String> = ["algorithm", "ok", "failed", "mean_cm", "std_err_cm"]
        .map(String::from)
        .to_vec();
    h.extend(PERCENTILES.iter().map(|p| format!("p{p}_cm")));
    h
}

fn summary_cells(label: String, s: Option<&SummaryStats>, total: usize) -> Vec<String> {
    let mut row = vec![label];
    match s {
        Some(s) => {
            row.extend([
                s.successes.to_string(),
                s.failures.to_string(),
                cm(s.mean_e_loc),
                cm(s.std_err_e_loc),
            ]);
            row.extend(s.percentiles.iter().map(|(_, v)| cm(*v)));
        }
        None => {
            row.extend(["0".into(), total.to_string()]);
            row.extend(std::iter::repeat_n("-".to_string(), 2 + PERCENTILES.len()));
        }
    }
    row
}

fn print_table(rows: &[Vec<String>], format: Format) {
    match format {
        Format::Csv => {
            for r in rows {
                println!("{}", r.join(","));
            }
        }
        Format::Text => {
            let widths: Vec<usize> = (0..rows[0].len())
                .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
                .collect();
            for r in rows {
                let cells: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
                println!("{}", cells.join("  "));
            }
        }
    }
}

fn cmd_run(o: &Overrides, verbose: bool) -> Result<(), CliError> {
    let (_, cfg) = experiment(o, verbose)?;
    if verbose {
        eprintln!("running {} samples with seed {}", cfg.samples, cfg.seed);
    }
    let records = run_monte_carlo(&cfg)?;
    let summaries = summarize_by_algorithm(&records, &cfg.algorithms);
    if summaries.iter().all(|(_, s)| s.is_none()) {
        return Err(HarnessError::NoSuccessfulRecords {
            failures: records.len(),
        }
        .into());
    }
    let files = write_results(&o.out, &cfg, &records)?;
    let mut rows = vec![summary_header()];
    for (a, s) in &summaries {
        rows.push(summary_cells(
            a.to_string(),
            s.as_ref(),
            records_for(&records, *a).len(),
        ));
    }
    print_table(&rows, o.format);
    if verbose {
        eprintln!("wrote {}", files.manifest.display());
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, param: SweepParam, verbose: bool) -> Result<(), CliError> {
    let (file, cfg) = experiment(&a.common, verbose)?;
    let values = a.values.clone().unwrap_or(match param {
        SweepParam::Noise => file.sweep.sigma_px.clone(),
        SweepParam::Radius => file.sweep.radius_m.clone(),
    });
    let result: SweepResult = sweep(&cfg, param, &values)?;
    let files = write_sweep(&a.common.out, &cfg, &result)?;
    let mut header = vec![param.as_str().to_string()];
    header.extend(summary_header());
    let mut rows = vec![header];
    for p in &result.points {
        let mut row = vec![format!("{}", p.value)];
        row.extend(summary_cells(p.algorithm.to_string(), p.stats.as_ref(), cfg.samples));
        rows.push(row);
    }
    print_table(&rows, a.common.format);
    if verbose {
        eprintln!("wrote {}", files.manifest.display());
    }
    Ok(())
}

fn cmd_cdf(a: &CdfArgs) -> Result<(), CliError> {
    if !(a.step > 0.0 && a.max > 0.0 && a.step <= a.max) {
        return Err(CliError::Config(format!(
            "need 0 < step <= max, got step {} max {}",
            a.step, a.max
        )));
    }
    let records = read_records_csv(&a.records)?;
    let mut algorithms: Vec<Algorithm> = records.iter().map(|r| r.algorithm).collect();
    algorithms.sort();
    algorithms.dedup();
    let grid = cdf_grid(a.max, a.step);
    println!("algorithm,e_loc_m,fraction");
    for alg in algorithms {
        let Ok(table) = cdf(&records_for(&records, alg), &grid) else {
            continue;
        };
        for (x, f) in table {
            println!("{alg},{x},{f}");
        }
    }
    Ok(())
}

fn cmd_scene_validate(a: &SceneArgs) -> Result<(), CliError> {
    let scene = load_scene(&a.scene)?;
    let [l, w, h] = scene.room;
    println!("ok: room {l} x {w} x {h} m, {} luminaires", scene.luminaires.len());
    for lum in &scene.luminaires {
        let c = lum.center_w;
        println!(
            "  {}: centre ({}, {}, {}) m, radius {} m",
            lum.id, c.x, c.y, c.z, lum.radius
        );
    }
    Ok(())
}
