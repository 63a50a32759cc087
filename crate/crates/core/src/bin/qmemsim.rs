//! Command-line front end: single protocol runs and parameter sweeps.
//!
//! Exit codes: 0 success, 1 configuration/validation error, 2 solver
//! failure, 3 sweep finished with some failed points.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qmemsim::analysis::{spectrum_padded, SpectralWindow};
use qmemsim::config::{parse_config, ResolvedRun, RunConfig};
use qmemsim::output::{
    write_aggregate_csv, write_fields_csv, write_manifest, write_metrics_csv,
    write_real_trace_csv, write_spectrum_csv, write_trace_csv,
};
use qmemsim::record::RecordSpec;
use qmemsim::sequence::{run_protocol, RunResult};
use qmemsim::signal::{detect_averaged, synthesize_input};
use qmemsim::sweep::run_sweep;

#[derive(Parser)]
#[command(name = "qmemsim", version, about = "Atomic quantum memory simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a single protocol run and emit its data files.
    Run(CommonArgs),
    /// Execute the configured parameter sweep and emit an aggregate table.
    Sweep(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// RNG seed override (falls back to QMEMSIM_SEED, then the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Which outputs to write.
    #[arg(long, value_enum, default_value_t = Emit::All)]
    emit: Emit,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Emit {
    Fields,
    Trace,
    Spectrum,
    Metrics,
    All,
}

impl Emit {
    fn wants(self, what: Emit) -> bool {
        self == Emit::All || self == what
    }
}

fn fail(code: u8, msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut config = parse_config(&text).map_err(|e| e.to_string())?;
    let seed = args
        .seed
        .or_else(|| std::env::var("QMEMSIM_SEED").ok().and_then(|v| v.parse().ok()));
    if let Some(seed) = seed {
        config.detection.seed = Some(seed);
    }
    Ok(config)
}

fn emit_run_outputs(
    out_dir: &Path,
    run: &ResolvedRun,
    result: &RunResult,
    emit: Emit,
) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut emitted = Vec::new();
    let mut put = |name: &str| {
        let p = out_dir.join(name);
        emitted.push(p.clone());
        p
    };
    if emit.wants(Emit::Trace) {
        write_trace_csv(&put("input.csv"), &result.input_trace)?;
        write_trace_csv(&put("exit.csv"), &result.exit_trace)?;
        let beat = detect_averaged(&result.exit_trace, &run.detection)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
        write_real_trace_csv(&put("heterodyne.csv"), &beat)?;
    }
    if emit.wants(Emit::Spectrum) {
        let window = result.read_window();
        let sp = spectrum_padded(&window, SpectralWindow::None, 8)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
        write_spectrum_csv(&put("spectrum.csv"), &sp)?;
    }
    if emit.wants(Emit::Metrics) {
        write_metrics_csv(&put("metrics.csv"), result)?;
    }
    if emit.wants(Emit::Fields) {
        if let Some(fields) = &result.fields {
            write_fields_csv(&put("fields.csv"), fields)?;
        }
    }
    write_manifest(out_dir, run, result, &emitted)?;
    Ok(emitted)
}

fn cmd_run(args: &CommonArgs) -> ExitCode {
    let config = match load_config(args) {
        Ok(c) => c,
        Err(e) => return fail(1, &e),
    };
    let mut run = match config.resolve() {
        Ok(r) => r,
        Err(e) => return fail(1, &e.to_string()),
    };
    if args.emit.wants(Emit::Fields) {
        // keep the dense record near 200 time rows
        let stride = (run.grid.nt / 200).max(1);
        run.settings.record = Some(RecordSpec { stride });
    }
    let input = match synthesize_input(&run.pulse, &run.grid) {
        Ok(i) => i,
        Err(e) => return fail(1, &e.to_string()),
    };
    if input.clipped && !args.quiet {
        eprintln!("warning: input pulse is clipped by the simulation window");
    }
    let result = match run_protocol(&run.settings, &input.trace, &run.grid, &run.density, &run.params)
    {
        Ok(r) => r,
        Err(e) => return fail(2, &e.to_string()),
    };
    if !args.quiet {
        for w in &result.warnings {
            eprintln!("warning: {w}");
        }
    }
    match emit_run_outputs(&args.out_dir, &run, &result, args.emit) {
        Ok(files) => {
            if !args.quiet {
                println!(
                    "run complete: {} files written to {}",
                    files.len() + 1,
                    args.out_dir.display()
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(1, &format!("cannot write outputs: {e}")),
    }
}

fn cmd_sweep(args: &CommonArgs) -> ExitCode {
    let config = match load_config(args) {
        Ok(c) => c,
        Err(e) => return fail(1, &e),
    };
    let outcome = match run_sweep(&config) {
        Ok(o) => o,
        Err(e) => return fail(1, &e.to_string()),
    };
    if let Err(e) = std::fs::create_dir_all(&args.out_dir) {
        return fail(1, &format!("cannot create {}: {e}", args.out_dir.display()));
    }
    let path = args.out_dir.join("sweep.csv");
    if let Err(e) = write_aggregate_csv(&path, &outcome.axis_names, &outcome.rows) {
        return fail(1, &format!("cannot write {}: {e}", path.display()));
    }
    if !args.quiet {
        println!(
            "sweep complete: {} points, {} failed, table at {}",
            outcome.rows.len(),
            outcome.n_failed,
            path.display()
        );
    }
    if outcome.n_failed > 0 {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}
