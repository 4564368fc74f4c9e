use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use jade_core::channel::synthesize;
use jade_core::dataset::{read_dataset, write_dataset};
use jade_core::delay::{fit_line, phase_residual};
use jade_core::pipeline::{estimate_stages, monte_carlo, run_stages, PipelineArtifacts};
use jade_core::pulse::{generate_pulse, spectrum_with_eta};
use jade_core::{JadeError, Result, ScenarioConfig};

#[derive(Parser)]
#[command(name = "jade", version, about = "Joint angle and delay estimation under Rayleigh fading")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key-value scenario file; unset keys use the default scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    snapshots: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Clone, Default)]
struct Dumps {
    /// Write correlation.csv (lag, re, im, abs, phase).
    #[arg(long)]
    dump_correlation: bool,
    /// Write roots.csv (re, im, modulus, selected).
    #[arg(long)]
    dump_roots: bool,
    /// Write fit_path<i>.csv (omega, phase_residual, fitted_line).
    #[arg(long)]
    dump_fit: bool,
    /// Snapshot used for --dump-fit.
    #[arg(long, default_value_t = 0)]
    fit_snapshot: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Write the pulse samples and spectrum as CSV.
    Pulse {
        #[command(flatten)]
        common: Common,
    },
    /// Synthesize array records and write them as a dataset file.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Estimate angles and delays from a dataset file.
    Estimate {
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dumps: Dumps,
    },
    /// Synthesize and estimate in one go, writing report.json.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dumps: Dumps,
        /// Record wall-clock time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Repeat the run over seeded trials and report bias and RMSE.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        trials: usize,
    },
}

fn load_config(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(s) = common.snapshots {
        cfg.snapshots = s;
    }
    cfg.validate()?;
    for w in cfg.array.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn cmd_pulse(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let pulse = generate_pulse(&cfg.pulse)?;
    let spec = spectrum_with_eta(&pulse, cfg.eta)?;
    let mut out = create(&common.out, "pulse.csv")?;
    writeln!(out, "t,g")?;
    for (t, g) in pulse.t.iter().zip(&pulse.values) {
        writeln!(out, "{t},{g}")?;
    }
    out.flush()?;
    let mut out = create(&common.out, "spectrum.csv")?;
    writeln!(out, "omega,magnitude,phase,phase_unwrapped")?;
    for q in spec.shifted_order() {
        let unwrapped = if spec.passband.contains(&q) {
            spec.phase_unwrapped[q - spec.passband.start].to_string()
        } else {
            String::new()
        };
        writeln!(out, "{},{},{},{unwrapped}", spec.omega[q], spec.magnitude[q], spec.phase[q])?;
    }
    out.flush()?;
    println!(
        "wrote {} and {} (N = {}, passband bins {}..{})",
        common.out.join("pulse.csv").display(),
        common.out.join("spectrum.csv").display(),
        pulse.len(),
        spec.passband.start,
        spec.passband.end
    );
    Ok(())
}

fn cmd_simulate(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let pulse = generate_pulse(&cfg.pulse)?;
    let set = synthesize(
        &pulse,
        &cfg.paths,
        &cfg.array,
        &cfg.fading,
        cfg.snapshots,
        cfg.noise_var,
        cfg.seed,
    )?;
    write_dataset(&set, create(&common.out, "dataset.jade")?)?;
    let mut echo = create(&common.out, "config.toml")?;
    echo.write_all(cfg.to_toml_string().as_bytes())?;
    echo.flush()?;
    println!(
        "wrote {} (S = {}, M = {}, N = {})",
        common.out.join("dataset.jade").display(),
        set.snapshots(),
        set.sensors(),
        set.samples()
    );
    Ok(())
}

fn print_summary(art: &PipelineArtifacts) {
    let r = &art.report;
    println!("band bins {}..{}", r.band.0, r.band.1);
    for (i, a) in r.angles.iter().enumerate() {
        match a.error_deg {
            Some(err) => println!("theta[{i}] = {:.6} deg (error {err:+.6})", a.theta_deg),
            None => println!("theta[{i}] = {:.6} deg", a.theta_deg),
        }
    }
    for i in 0..r.angles.len() {
        println!(
            "slope[{i}] median {:.4} mean {:.4} (tau median {:.4})",
            r.delays.slope_median[i], r.delays.slope_mean[i], r.delays.tau_median[i]
        );
    }
    let shown: Vec<String> = r
        .singular_values
        .iter()
        .take(8)
        .map(|v| format!("{v:.4e}"))
        .collect();
    println!("singular values: {}", shown.join(" "));
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
}

fn write_dumps(art: &PipelineArtifacts, dumps: &Dumps, dir: &Path) -> Result<()> {
    if dumps.dump_correlation {
        let mut out = create(dir, "correlation.csv")?;
        writeln!(out, "lag,re,im,abs,phase")?;
        let m = art.correlation.c.len() as isize;
        for lag in -(m - 1)..m {
            let v = art.correlation.at(lag);
            writeln!(out, "{lag},{},{},{},{}", v.re, v.im, v.norm(), v.arg())?;
        }
        out.flush()?;
    }
    if dumps.dump_roots {
        let mut out = create(dir, "roots.csv")?;
        writeln!(out, "re,im,modulus,selected")?;
        for (z, sel) in &art.modes.all_roots {
            writeln!(out, "{},{},{},{}", z.re, z.im, z.norm(), u8::from(*sel))?;
        }
        out.flush()?;
    }
    if dumps.dump_fit {
        let s = dumps.fit_snapshot;
        if s >= art.beams.snapshots {
            return Err(JadeError::Invalid(format!(
                "fit snapshot {s} out of range (S = {})",
                art.beams.snapshots
            )));
        }
        let band = art.delays.band.clone();
        let omega = &art.pulse_spectrum.omega[band.clone()];
        for i in 0..art.beams.paths() {
            let phi = phase_residual(art.beams.row(s, i), &art.pulse_spectrum, band.clone())?;
            let line = fit_line(omega, &phi, None);
            let mut out = create(dir, &format!("fit_path{i}.csv"))?;
            writeln!(out, "omega,phase_residual,fitted_line")?;
            for (w, p) in omega.iter().zip(&phi) {
                writeln!(out, "{w},{p},{}", line.intercept + line.slope * w)?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

fn write_report(art: &PipelineArtifacts, dir: &Path, timing_ms: Option<f64>) -> Result<()> {
    let mut report = art.report.clone();
    report.timing_ms = timing_ms;
    let mut out = create(dir, "report.json")?;
    out.write_all(report.to_json().as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn cmd_estimate(dataset: &Path, common: &Common, dumps: &Dumps) -> Result<()> {
    let cfg = load_config(common)?;
    let set = read_dataset(BufReader::new(File::open(dataset)?))?;
    if set.array != cfg.array {
        eprintln!(
            "warning: dataset geometry (M = {}, delta = {}) overrides the configured array",
            set.sensors(),
            set.array.delta
        );
    }
    let cfg = ScenarioConfig {
        array: set.array,
        snapshots: set.snapshots(),
        ..cfg
    };
    let pulse = generate_pulse(&cfg.pulse)?;
    let art = estimate_stages(&cfg, pulse, set)?;
    print_summary(&art);
    write_report(&art, &common.out, None)?;
    write_dumps(&art, dumps, &common.out)
}

fn cmd_run(common: &Common, dumps: &Dumps, timing: bool) -> Result<()> {
    let cfg = load_config(common)?;
    let start = Instant::now();
    let art = run_stages(&cfg)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    print_summary(&art);
    write_report(&art, &common.out, timing.then_some(elapsed))?;
    write_dumps(&art, dumps, &common.out)
}

fn cmd_montecarlo(common: &Common, trials: usize) -> Result<()> {
    let cfg = load_config(common)?;
    let mc = monte_carlo(&cfg, trials)?;
    let paths = cfg.paths.len();
    let header: Vec<String> = (0..paths)
        .map(|i| format!("theta[{i}]"))
        .chain((0..paths).map(|i| format!("-tau[{i}]")))
        .collect();
    println!("trial  seed                  {}", header.join("  "));
    for t in &mc.trials {
        match &t.result {
            Ok(sum) => {
                let cols: Vec<String> = sum
                    .theta_deg
                    .iter()
                    .map(|v| format!("{v:9.4}"))
                    .chain(sum.slope_median.iter().map(|v| format!("{v:8.4}")))
                    .collect();
                println!("{:5}  {:20}  {}", t.trial, t.seed, cols.join("  "));
            }
            Err(e) => println!("{:5}  {:20}  FAILED: {e}", t.trial, t.seed),
        }
    }
    for s in &mc.stats {
        println!("{:16} truth {:9.4} mean {:9.4} bias {:+.2e} rmse {:.2e}", s.name, s.truth, s.mean, s.bias, s.rmse);
    }
    let mut out = create(&common.out, "montecarlo.json")?;
    out.write_all(mc.to_json().as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    if mc.failed == trials {
        return Err(JadeError::Estimation {
            stage: jade_core::Stage::Prony,
            message: "every trial failed".into(),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Pulse { common } => cmd_pulse(common),
        Command::Simulate { common } => cmd_simulate(common),
        Command::Estimate {
            dataset,
            common,
            dumps,
        } => cmd_estimate(dataset, common, dumps),
        Command::Run {
            common,
            dumps,
            timing,
        } => cmd_run(common, dumps, *timing),
        Command::Montecarlo { common, trials } => cmd_montecarlo(common, *trials),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
