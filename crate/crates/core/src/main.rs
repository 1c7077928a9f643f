//! Command-line front end: `run`, `grid`, `calibrate`, `compare` and `trace`.

use clap::{Args, Parser, Subcommand};
use critsearch::bms::{simulate, write_trace, SimOptions};
use critsearch::criticality::kappa_state;
use critsearch::harness::{
    calibration_report, compare_algorithms, grid_oracle, parse_override, run_experiment, write_json, Algorithm,
    ExperimentConfig, HarnessError,
};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use toml::{Table, Value};

#[derive(Parser)]
#[command(name = "critsearch", version, about = "Rare critical-event search over a battery charging simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file; see config/default.toml.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set hoo.rho=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm over the seed list.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        algorithm: Option<Algorithm>,
    },
    /// Evaluate the objective on a uniform grid and write grid.csv.
    Grid {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Grid oracle plus the calibration gates; fails if a gate fails.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Run the comparison set and check the ordering of critical counts.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate one configuration and export the state trace.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Ambient temperature, deg C.
        #[arg(long, allow_hyphen_values = true)]
        t_amb: f64,
        /// Maximum charging current, A.
        #[arg(long)]
        i_max: f64,
        /// Keep every n-th step.
        #[arg(long)]
        stride: Option<u64>,
    },
}

fn override_of(key: &str, value: Value) -> Table {
    let mut inner = Table::new();
    inner.insert(key.to_string(), value);
    inner
}

fn load(common: &Common, mut extra: Vec<Table>) -> Result<ExperimentConfig, HarnessError> {
    let mut overrides = common.set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = common.seed {
        let seed = i64::try_from(seed).map_err(|_| HarnessError::Config(format!("seed {seed} is too large")))?;
        overrides.push(override_of("seeds", Value::Array(vec![Value::Integer(seed)])));
    }
    if let Some(b) = common.budget {
        overrides.push(override_of("budget", Value::Integer(b as i64)));
    }
    if let Some(out) = &common.out {
        overrides.push(override_of("output_dir", Value::String(out.display().to_string())));
    }
    overrides.append(&mut extra);
    ExperimentConfig::load(common.config.as_deref(), &overrides)
}

fn prepare_out(cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| HarnessError::io(&cfg.output_dir, e))
}

fn resolution_override(resolution: Option<usize>) -> Vec<Table> {
    resolution.map(|r| override_of("grid_resolution", Value::Integer(r as i64))).into_iter().collect()
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { common, algorithm } => {
            let extra = algorithm.map(|a| override_of("algorithm", Value::String(a.to_string()))).into_iter().collect();
            let cfg = load(&common, extra)?;
            let s = run_experiment(&cfg)?;
            println!("{} budget={} seeds={:?}", s.variant, s.budget, s.seeds);
            for p in &s.per_seed {
                println!("  seed {:>4}: {} critical", p.seed, p.critical_count);
            }
            match s.sd_critical {
                Some(sd) => println!("mean {:.2} +- {:.2} critical ({:.4} of budget)", s.mean_critical, sd, s.critical_ratio),
                None => println!("mean {:.2} critical ({:.4} of budget)", s.mean_critical, s.critical_ratio),
            }
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Grid { common, resolution } => {
            let cfg = load(&common, resolution_override(resolution))?;
            prepare_out(&cfg)?;
            let objective = cfg.objective();
            let grid = grid_oracle(cfg.grid_resolution, &objective, &objective.space, cfg.crit.c_kappa)?;
            let path = cfg.output_dir.join("grid.csv");
            grid.write_csv(&path)?;
            println!("critical fraction {:.6} over {} points", grid.critical_fraction(), grid.points.len());
            println!("wrote {}", path.display());
        }
        Command::Calibrate { common, resolution } => {
            let cfg = load(&common, resolution_override(resolution))?;
            prepare_out(&cfg)?;
            let objective = cfg.objective();
            let grid = grid_oracle(cfg.grid_resolution, &objective, &objective.space, cfg.crit.c_kappa)?;
            grid.write_csv(&cfg.output_dir.join("grid.csv"))?;
            let report = calibration_report(&grid);
            write_json(&cfg.output_dir.join("calibration.json"), &report)?;
            for g in &report.gates {
                println!("{} {}: {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail);
            }
            if !report.passed {
                let failed: Vec<_> = report.gates.iter().filter(|g| !g.passed).map(|g| g.name).collect();
                return Err(HarnessError::Gate(format!("calibration failed: {}", failed.join(", "))));
            }
        }
        Command::Compare { common } => {
            let cfg = load(&common, Vec::new())?;
            prepare_out(&cfg)?;
            let report = compare_algorithms(&cfg)?;
            write_json(&cfg.output_dir.join("compare.json"), &report)?;
            for r in &report.results {
                match r.sd {
                    Some(sd) => println!("{:<32} {:>9.2} +- {:.2}", r.variant.to_string(), r.mean, sd),
                    None => println!("{:<32} {:>9.2}", r.variant.to_string(), r.mean),
                }
            }
            if !report.asserted {
                println!("ordering not asserted (budget {} or no baseline)", report.budget);
            }
            for c in &report.checks {
                let mark = match (c.holds, report.asserted) {
                    (true, _) => "ok  ",
                    (false, true) => "FAIL",
                    (false, false) => "no  ",
                };
                println!("{mark} {} ({:.2}) > {} ({:.2})", c.left, c.left_count, c.right, c.right_count);
            }
            if !report.passed {
                return Err(HarnessError::Gate("ordering chain violated".into()));
            }
        }
        Command::Trace { common, t_amb, i_max, stride } => {
            let extra = stride.map(|s| override_of("trace_stride", Value::Integer(s as i64))).into_iter().collect();
            let cfg = load(&common, extra)?;
            prepare_out(&cfg)?;
            let options = SimOptions { trace_stride: Some(cfg.trace_stride.unwrap_or(1)) };
            let crit = &cfg.crit;
            let outcome = simulate(t_amb, i_max, &cfg.sim, &cfg.limits, options, |s| kappa_state(s, crit))?;
            let path = cfg.output_dir.join("trace.csv");
            let file = std::fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
            let mut out = std::io::BufWriter::new(file);
            write_trace(&mut out, outcome.trace.as_deref().unwrap_or_default())
                .and_then(|()| out.flush())
                .map_err(|e| HarnessError::io(&path, e))?;
            println!(
                "charging time {:.3} h{}, peak temperature {:.3} C, peak kappa {:.6}{}",
                outcome.charging_time,
                if outcome.timed_out { " (cutoff)" } else { "" },
                outcome.t_bat_peak,
                outcome.kappa_peak,
                if outcome.kappa_peak >= crit.c_kappa { " critical" } else { "" }
            );
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
