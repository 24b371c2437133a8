mod config;
mod error;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use consensus_hmd::fusion::{fuse_guarded, optimize_weights, weight_cost, FusionMethod, OptimizerOptions};
use consensus_hmd::sim::report::fmt_float;
use consensus_hmd::sim::{
    write_metrics_csv, write_trackers_csv, Aggregate, MonteCarloResult, ScenarioConfig, Simulation, Summary,
};
use consensus_hmd::validation::run_kl_check;
use consensus_hmd::{GaussianDensity, WeightVector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "consensus-hmd",
    version,
    about = "Consensus HMD fusion for distributed bearings-only tracking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo scenario and write metrics.csv, trackers.csv and summary.json.
    Simulate(SimArgs),
    /// Fuse Gaussians listed in a config file and print the result as JSON.
    FuseDemo(FuseArgs),
    /// Check the closed-form KL divergence against quadrature and sampling.
    KlCheck(KlArgs),
    /// Run a scenario once per value of one parameter.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Amd,
    Gmd,
    Hmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightsArg {
    Equal,
    Optimized,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Cubature,
    Unscented,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Cv,
    Ct,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Amd => "amd",
            MethodArg::Gmd => "gmd",
            MethodArg::Hmd => "hmd",
        }
    }
}

#[derive(Args)]
struct SimArgs {
    /// Scenario file (TOML, or JSON by extension).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mc_runs: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    weights: Option<WeightsArg>,
    #[arg(long, value_enum)]
    filter: Option<FilterArg>,
    /// Preset used as the base; defaults to the file's `scenario` key, then cv.
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    #[arg(long)]
    no_feedback: bool,
    /// `key=value`, dotted for nested tables; repeatable.
    #[arg(long = "override", alias = "overrides", value_name = "KEY=VALUE", num_args = 1..)]
    overrides: Vec<String>,
}

impl SimArgs {
    fn flag_overrides(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(s) = self.seed {
            out.push(format!("seed={s}"));
        }
        if let Some(m) = self.mc_runs {
            out.push(format!("mc_runs={m}"));
        }
        if let Some(m) = self.method {
            out.push(format!("fusion_method=\"{}\"", m.name()));
        }
        if let Some(w) = self.weights {
            let w = match w {
                WeightsArg::Equal => "equal",
                WeightsArg::Optimized => "optimized",
            };
            out.push(format!("weight_mode=\"{w}\""));
        }
        if let Some(f) = self.filter {
            let f = match f {
                FilterArg::Cubature => "cubature",
                FilterArg::Unscented => "unscented",
            };
            out.push(format!("filter=\"{f}\""));
        }
        if self.no_feedback {
            out.push("feedback=false".into());
        }
        out
    }

    fn scenario_name(&self) -> Option<&'static str> {
        self.scenario.map(|s| match s {
            ScenarioArg::Cv => "cv",
            ScenarioArg::Ct => "ct",
        })
    }

    fn resolve(&self, extra: &[String]) -> Result<(ScenarioConfig, Vec<String>)> {
        let flags = self.flag_overrides();
        let user: Vec<String> = self.overrides.iter().chain(extra).cloned().collect();
        let cfg = config::resolve(self.config.as_deref(), self.scenario_name(), &flags, &user)?;
        Ok((cfg, flags.into_iter().chain(user).collect()))
    }
}

#[derive(Args)]
struct FuseArgs {
    /// File with `[[densities]]` entries (`mean`, `cov` rows), `method` and `weights`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    weights: Option<WeightsArg>,
    /// Also write the JSON result to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KlArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    pairs_1d: usize,
    #[arg(long, default_value_t = 50)]
    pairs_2d: usize,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Also write the JSON report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Parameter to vary, as accepted by `--override`.
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn write_outputs(dir: &Path, result: &MonteCarloResult, agg: &Aggregate, overrides: Vec<String>) -> Result<Summary> {
    create_dir(dir)?;
    let t = result.config.sampling_interval_min;
    write_file(&dir.join("metrics.csv"), |w| write_metrics_csv(w, agg, t))?;
    write_file(&dir.join("trackers.csv"), |w| write_trackers_csv(w, agg, t))?;
    let summary = Summary::new(result, agg, overrides);
    write_file(&dir.join("summary.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &summary)?;
        writeln!(w)
    })?;
    Ok(summary)
}

fn print_summary(s: &Summary) {
    println!(
        "fused ARMSE {:.2} m, {:.3} kn; divergence {:.1}%",
        s.armse.fused.pos_m, s.armse.fused.vel_knots, s.divergence.fused_pct
    );
    for (j, (a, d)) in s.armse.trackers.iter().zip(&s.divergence.trackers_pct).enumerate() {
        println!(
            "tracker {} ARMSE {:.2} m, {:.3} kn; divergence {:.1}%",
            j + 1,
            a.pos_m,
            a.vel_knots,
            d
        );
    }
}

fn simulate(args: &SimArgs) -> Result<()> {
    let (cfg, overrides) = args.resolve(&[])?;
    let result = Simulation::new(cfg)?.monte_carlo()?;
    let agg = result.aggregate()?;
    let summary = write_outputs(&args.out, &result, &agg, overrides)?;
    print_summary(&summary);
    println!("wrote {}", args.out.display());
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    create_dir(&args.sim.out)?;
    let mut rows = Vec::new();
    for value in &args.values {
        let spec = format!("{}={}", args.param, value);
        let (cfg, overrides) = args.sim.resolve(std::slice::from_ref(&spec))?;
        let result = Simulation::new(cfg)?.monte_carlo()?;
        let agg = result.aggregate()?;
        let dir = args.sim.out.join(format!("{}-{}", args.param, value));
        let summary = write_outputs(&dir, &result, &agg, overrides)?;
        println!("{spec}");
        print_summary(&summary);
        rows.push((value.clone(), summary));
    }
    let path = args.sim.out.join("sweep.csv");
    write_file(&path, |w| {
        let n = rows.first().map_or(0, |r| r.1.armse.trackers.len());
        write!(
            w,
            "param,value,fused_armse_pos_m,fused_armse_vel_knots,fused_divergence_pct"
        )?;
        for j in 1..=n {
            write!(w, ",tracker_{j}_armse_pos_m,tracker_{j}_divergence_pct")?;
        }
        writeln!(w)?;
        for (value, s) in &rows {
            write!(
                w,
                "{},{},{},{},{}",
                args.param,
                value,
                fmt_float(s.armse.fused.pos_m),
                fmt_float(s.armse.fused.vel_knots),
                fmt_float(s.divergence.fused_pct)
            )?;
            for (a, d) in s.armse.trackers.iter().zip(&s.divergence.trackers_pct) {
                write!(w, ",{},{}", fmt_float(a.pos_m), fmt_float(*d))?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WeightSpec {
    Mode(String),
    Explicit(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DensitySpec {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FuseInput {
    #[serde(default = "default_method")]
    method: FusionMethod,
    #[serde(default)]
    weights: Option<WeightSpec>,
    #[serde(default)]
    grid_step: Option<f64>,
    densities: Vec<DensitySpec>,
}

fn default_method() -> FusionMethod {
    FusionMethod::Hmd
}

#[derive(Serialize)]
struct DensityOut {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct FuseOutput {
    method: FusionMethod,
    weights: Vec<f64>,
    cost: f64,
    jitter_applied: bool,
    fused: DensityOut,
}

fn density(spec: &DensitySpec) -> Result<GaussianDensity> {
    let n = spec.mean.len();
    if spec.cov.len() != n || spec.cov.iter().any(|r| r.len() != n) {
        return Err(CliError::Config(format!(
            "covariance must be {n}x{n} to match the mean"
        )));
    }
    let flat: Vec<f64> = spec.cov.iter().flatten().copied().collect();
    Ok(GaussianDensity::from_slices(&spec.mean, &flat)?)
}

fn fuse_demo(args: &FuseArgs) -> Result<()> {
    let input: FuseInput = config::parse_file(&args.config)?;
    let densities = input.densities.iter().map(density).collect::<Result<Vec<_>>>()?;
    let method = args
        .method
        .map(|m| m.name().parse().expect("valid method"))
        .unwrap_or(input.method);
    let weights = match args.weights {
        Some(WeightsArg::Equal) => WeightSpec::Mode("equal".into()),
        Some(WeightsArg::Optimized) => WeightSpec::Mode("optimized".into()),
        None => input.weights.unwrap_or(WeightSpec::Mode("optimized".into())),
    };
    let options = OptimizerOptions {
        grid_step: input.grid_step.unwrap_or(OptimizerOptions::default().grid_step),
        ..Default::default()
    };
    let report = match weights {
        WeightSpec::Mode(m) if m == "optimized" => optimize_weights(&densities, method, &options)?,
        WeightSpec::Mode(m) if m == "equal" => fixed(&densities, method, WeightVector::uniform(densities.len()))?,
        WeightSpec::Mode(m) => {
            return Err(CliError::Config(format!(
                "weights {m:?}: expected equal, optimized or a list"
            )))
        }
        WeightSpec::Explicit(w) => fixed(&densities, method, WeightVector::new(w)?)?,
    };
    let fused = &report.fused;
    let n = fused.dim();
    let out = FuseOutput {
        method,
        weights: report.weights.as_slice().to_vec(),
        cost: report.cost,
        jitter_applied: report.jitter_applied,
        fused: DensityOut {
            mean: fused.mean().iter().copied().collect(),
            cov: (0..n).map(|i| (0..n).map(|j| fused.cov()[(i, j)]).collect()).collect(),
        },
    };
    let text = serde_json::to_string_pretty(&out).expect("output serializes");
    println!("{text}");
    if let Some(path) = &args.out {
        write_file(path, |w| writeln!(w, "{text}"))?;
    }
    Ok(())
}

fn fixed(
    densities: &[GaussianDensity],
    method: FusionMethod,
    weights: WeightVector,
) -> Result<consensus_hmd::FusionReport> {
    if weights.len() != densities.len() {
        return Err(CliError::Config(format!(
            "{} weights for {} densities",
            weights.len(),
            densities.len()
        )));
    }
    let (fused, jitter_applied) = fuse_guarded(method, densities, &weights, true)?;
    let cost = weight_cost(&weights, densities, method)?;
    Ok(consensus_hmd::FusionReport {
        fused,
        weights,
        cost,
        jitter_applied,
    })
}

fn kl_check(args: &KlArgs) -> Result<()> {
    let report = run_kl_check(args.seed, args.pairs_1d, args.pairs_2d, args.samples)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(path) = &args.out {
        write_file(path, |w| writeln!(w, "{text}"))?;
    }
    if !report.passed {
        return Err(CliError::CheckFailed(format!(
            "KL check outside tolerance: quadrature {:e}, sampling {:e}",
            report.max_quadrature_abs_dev, report.max_sampling_rel_dev
        )));
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("CONSENSUS_HMD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("CONSENSUS_HMD_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::FuseDemo(a) => fuse_demo(a),
        Command::KlCheck(a) => kl_check(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
