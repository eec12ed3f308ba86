//! `qaoa-tl`: generate instances, optimize QAOA angles, transfer them to
//! other problems, sample, and export annealing schedules.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use qaoa_transfer::annealing::{export_schedule, schedule_from_params, Schedule, ScheduleMode, ScheduleTable};
use qaoa_transfer::experiment::{
    penalties_for, replay, run_sampling, run_transfer, self_optimize, ExperimentRecord, TargetSpec, TransferConfig,
};
use qaoa_transfer::io::{read_to_string, write_atomic};
use qaoa_transfer::optimizer::{DEFAULT_BUDGET_MULTIPLIER, DEFAULT_DELTA};
use qaoa_transfer::{generate, Error, OptimizerConfig, ParameterBank, PenaltyConfig, ProblemInstance, ProblemKind};

#[derive(Parser)]
#[command(name = "qaoa-tl", version, about = "QAOA parameter transfer experiments")]
struct Cli {
    /// Directory for outputs without an explicit path.
    #[arg(long, global = true, env = "QAOA_TL_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded problem instance as JSON.
    Generate {
        #[arg(long, value_parser = parse_kind)]
        kind: ProblemKind,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize angles on one instance and store them in a parameter bank.
    Optimize {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 10)]
        p: usize,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_BUDGET_MULTIPLIER)]
        budget_multiplier: usize,
        /// Bank entry name; defaults to kind and size, e.g. `bpp3`.
        #[arg(long)]
        label: Option<String>,
        /// Bank file, created or extended. Defaults to `<out-dir>/bank.json`.
        #[arg(long)]
        bank: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        initial_step: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the evaluation trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        penalties: PenaltyArgs,
    },
    /// Apply a bank entry to generated target instances.
    Transfer {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        entry: String,
        /// Target kind; repeat for several.
        #[arg(long = "kind", value_parser = parse_kind, required = true)]
        kinds: Vec<ProblemKind>,
        /// Comma-separated sizes; may be empty.
        #[arg(long, value_parser = parse_sizes, default_value = "")]
        sizes: Sizes,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        #[arg(long, default_value_t = 1.0)]
        risk_factor: f64,
        #[command(flatten)]
        penalties: PenaltyArgs,
    },
    /// Sample the QAOA state of a bank entry on one instance.
    Sample {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        entry: String,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        mitigate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        penalties: PenaltyArgs,
    },
    /// Export an annealing schedule shaped by a bank entry.
    Schedule {
        #[arg(long, requires = "entry")]
        bank: Option<PathBuf>,
        #[arg(long, requires = "bank")]
        entry: Option<String>,
        /// `s,A_GHz,B_GHz` CSV; a linear synthetic table when omitted.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, value_parser = parse_mode, default_value = "mixer")]
        mode: ScheduleMode,
        /// Total anneal time in microseconds.
        #[arg(long, default_value_t = 100.0)]
        tf: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a transfer record and check the outputs are identical.
    Replay {
        #[arg(long)]
        record: PathBuf,
    },
}

#[derive(Args)]
struct PenaltyArgs {
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
}

impl PenaltyArgs {
    fn overrides(&self) -> PenaltyConfig {
        PenaltyConfig::new(self.lambda0, self.lambda1, self.lambda2)
    }
}

fn parse_kind(s: &str) -> Result<ProblemKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Clone)]
struct Sizes(Vec<usize>);

fn parse_sizes(s: &str) -> Result<Sizes, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| format!("bad size {t:?}")))
        .collect::<Result<_, _>>()
        .map(Sizes)
}

fn parse_mode(s: &str) -> Result<ScheduleMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn created_unix() -> anyhow::Result<u64> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("SOURCE_DATE_EPOCH={v:?} is not an integer")),
        Err(_) => Ok(SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs()),
    }
}

fn load_instance(path: &Path) -> anyhow::Result<ProblemInstance> {
    Ok(ProblemInstance::from_json(&read_to_string(path)?)?)
}

fn load_bank(path: &Path) -> anyhow::Result<ParameterBank> {
    Ok(ParameterBank::from_json(&read_to_string(path)?)?)
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    write_atomic(path, text.as_bytes())?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let out_dir = cli.out_dir;
    match cli.command {
        Command::Generate { kind, size, seed, out } => {
            let inst = generate(kind, size, seed)?;
            let path =
                out.unwrap_or_else(|| out_dir.join(format!("{}{size}_seed{seed}.json", kind.name().to_lowercase())));
            write(&path, &inst.to_json()?)?;
            println!(
                "{kind}({size}) seed {seed}: {} variables -> {}",
                inst.n_vars(),
                path.display()
            );
        }

        Command::Optimize {
            instance,
            p,
            delta,
            budget_multiplier,
            label,
            bank,
            initial_step,
            tolerance,
            seed,
            trace,
            penalties,
        } => {
            let inst = load_instance(&instance)?;
            let kind = inst.kind();
            let label = label.unwrap_or_else(|| format!("{}{}", kind.name().to_lowercase(), inst.size()));
            let bank_path = bank.unwrap_or_else(|| out_dir.join("bank.json"));
            let mut bank = if bank_path.exists() {
                load_bank(&bank_path)?
            } else {
                ParameterBank::default()
            };
            let base = OptimizerConfig {
                max_evals: 0,
                initial_step,
                tolerance,
                seed,
            };
            let so = self_optimize(
                &inst,
                &penalties_for(kind, &penalties.overrides()),
                p,
                delta,
                budget_multiplier,
                &base,
            )?;
            println!(
                "{label}: {} qubits, p = {p}, {} evaluations",
                so.entry.provenance.n_qubits,
                so.trace.len()
            );
            println!(
                "  expectation  {:>12.6} -> {:>12.6}",
                so.init_expectation, so.final_expectation
            );
            println!(
                "  P(x*)        {:>12.6} -> {:>12.6}",
                so.init_prob_optimal, so.final_prob_optimal
            );
            if let Some(path) = trace {
                write(&path, &so.trace.to_csv())?;
            }
            bank.insert(label.clone(), so.entry);
            write(&bank_path, &bank.to_json()?)?;
            println!("  stored as {label:?} in {}", bank_path.display());
        }

        Command::Transfer {
            bank,
            entry,
            kinds,
            sizes,
            seeds,
            seed_base,
            risk_factor,
            penalties,
        } => {
            let bank = load_bank(&bank)?;
            let config = TransferConfig {
                entry_label: entry.clone(),
                targets: kinds
                    .iter()
                    .map(|&kind| TargetSpec {
                        kind,
                        sizes: sizes.0.clone(),
                        n_seeds: seeds,
                        seed_base,
                    })
                    .collect(),
                penalty_overrides: penalties.overrides(),
                risk_factor,
            };
            let record = run_transfer(&config, &bank, Some(created_unix()?))?;
            let stem = out_dir.join(format!("transfer_{entry}"));
            write(&stem.with_extension("csv"), &record.summary_csv())?;
            write(&stem.with_extension("json"), &record.to_json()?)?;
            print!("{}", record.summary_csv());
            let failed = record.outcomes.iter().filter(|o| o.error.is_some()).count();
            if failed > 0 {
                eprintln!(
                    "{failed} of {} instances failed; see the JSON record",
                    record.outcomes.len()
                );
            }
        }

        Command::Sample {
            instance,
            bank,
            entry,
            shots,
            seed,
            mitigate,
            out,
            penalties,
        } => {
            let inst = load_instance(&instance)?;
            let bank = load_bank(&bank)?;
            let params = &bank.get(&entry)?.params;
            let pen = penalties_for(inst.kind(), &penalties.overrides());
            let rec = run_sampling(&inst, &pen, &entry, params, shots, seed, mitigate)?;
            println!("{}({}) {} qubits, {shots} shots", rec.kind, rec.size, rec.n_qubits);
            println!("  ideal P(x*)        {:.6}", rec.ideal_prob_optimal);
            println!("  raw optimal        {:.6}", rec.raw_optimal_fraction);
            if let Some(m) = &rec.mitigation {
                println!("  mitigated optimal  {:.6}", m.mitigated_optimal_fraction);
                println!(
                    "  mean energy        {:.6} -> {:.6}",
                    m.raw_mean_energy, m.mitigated_mean_energy
                );
            }
            let path = out.unwrap_or_else(|| out_dir.join(format!("samples_{entry}.json")));
            write(&path, &serde_json::to_string_pretty(&rec)?)?;
        }

        Command::Schedule {
            bank,
            entry,
            table,
            mode,
            tf,
            out,
        } => {
            let schedule = match (bank, entry) {
                (Some(bank), Some(entry)) => {
                    let bank = load_bank(&bank)?;
                    let table = match table {
                        Some(path) => ScheduleTable::from_csv(&read_to_string(&path)?)?,
                        None => ScheduleTable::synthetic_linear(101),
                    };
                    schedule_from_params(&bank.get(&entry)?.params, &table, mode, tf)?.with_source(entry)
                }
                _ => Schedule::linear(tf)?,
            };
            let path = out.unwrap_or_else(|| out_dir.join("schedule.csv"));
            export_schedule(&schedule, &path)?;
            print!("{}", schedule.to_csv());
        }

        Command::Replay { record } => {
            let original_text = read_to_string(&record)?;
            let original = ExperimentRecord::from_json(&original_text)?;
            let again = replay(&original)?;
            let stem = out_dir.join("replay");
            write(&stem.with_extension("csv"), &again.summary_csv())?;
            write(&stem.with_extension("json"), &again.to_json()?)?;
            if again.to_json()? != original.to_json()? {
                bail!("replay of {} differs from the recorded outputs", record.display());
            }
            println!("replay identical: {} instances", again.outcomes.len());
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::Range { .. } | Error::Config(_) | Error::Input(_) | Error::Precondition(_) | Error::Dimension { .. },
        ) => 2,
        Some(Error::Resource { .. }) => 3,
        Some(Error::Numeric(_)) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
