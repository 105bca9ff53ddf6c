use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use boltzmann_alloc::ingest::{parse_player_triple, parse_players};
use boltzmann_alloc::report::{AllocationReport, ReportEnvelope, ReportPayload};
use boltzmann_alloc::solver::{find_reference_beta_with_grid, DEFAULT_SCAN_POINTS};
use boltzmann_alloc::{
    allocate, fair_divide, find_demand_crossings, sweep, AllocationProblem, CapMode, Dataset,
    Error, PotentialSpec, Result,
};

/// Boltzmann (entropy-maximizing) allocation of a capped resource.
#[derive(Debug, Parser)]
#[command(name = "boltzmann-alloc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Allocate the cap at one beta (or at the least-squares reference beta).
    Allocate {
        #[command(flatten)]
        input: InputArgs,
        /// A nonnegative number, or `solve` for the reference beta.
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Allocation curves and least-squares objective over a beta grid.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        beta_min: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        beta_max: f64,
        #[arg(long, default_value_t = 1001)]
        steps: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Least-squares reference beta.
    SolveBeta {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Betas where allocations meet demands, plus pairwise crossovers.
    Crossings {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        beta_lo: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        beta_hi: f64,
        #[arg(long, default_value_t = DEFAULT_SCAN_POINTS)]
        steps: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Divide a homogeneous good among weighted players.
    Divide {
        /// Player as `name:weight:potential`; repeat for each player.
        #[arg(long = "agent", allow_hyphen_values = true)]
        agents: Vec<String>,
        /// CSV with header `name,weight,potential`.
        #[arg(long, conflicts_with = "agents")]
        agents_file: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        total: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Dataset CSV path, or `table2` for the bundled eight-country data.
    #[arg(long, default_value = "table2")]
    data: String,
    #[command(flatten)]
    cap: CapArgs,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct CapArgs {
    /// Cap as a fraction below summed previous-period emissions.
    #[arg(long, allow_hyphen_values = true)]
    reduction: Option<f64>,
    /// Explicit cap, 1000 t.
    #[arg(long, allow_hyphen_values = true)]
    cap: Option<f64>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta_lo: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    beta_hi: f64,
    #[arg(long, default_value_t = 1e-6, allow_hyphen_values = true)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_SCAN_POINTS)]
    grid: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Loaded {
    dataset: Dataset,
    problem: AllocationProblem,
    params: BTreeMap<String, Value>,
}

fn load(input: &InputArgs) -> Result<Loaded> {
    let dataset = Dataset::load(&input.data)?;
    let mut params = BTreeMap::new();
    params.insert("data".into(), json!(input.data));
    let mode = match (input.cap.reduction, input.cap.cap) {
        (Some(f), None) => {
            params.insert("reduction".into(), json!(f));
            CapMode::Reduction(f)
        }
        (None, Some(q)) => {
            params.insert("cap".into(), json!(q));
            CapMode::Explicit(q)
        }
        _ => {
            return Err(Error::Config(
                "give exactly one of --reduction or --cap".into(),
            ))
        }
    };
    let problem = dataset.to_problem(mode, PotentialSpec::NegativePerCapitaDemand)?;
    params.insert("total_permits".into(), json!(problem.total_permits()));
    params.insert("potential".into(), json!("negative_per_capita_demand"));
    Ok(Loaded {
        dataset,
        problem,
        params,
    })
}

fn search_params(params: &mut BTreeMap<String, Value>, s: &SearchArgs) {
    params.insert("beta_lo".into(), json!(s.beta_lo));
    params.insert("beta_hi".into(), json!(s.beta_hi));
    params.insert("tol".into(), json!(s.tol));
    params.insert("grid".into(), json!(s.grid));
}

fn run(command: Command) -> Result<(ReportEnvelope, OutputArgs)> {
    let (name, params, results, provenance, output) = match command {
        Command::Allocate {
            input,
            beta,
            search,
            output,
        } => {
            let Loaded {
                dataset,
                problem,
                mut params,
            } = load(&input)?;
            let fit = if beta.trim() == "solve" {
                search_params(&mut params, &search);
                params.insert("beta".into(), json!("solve"));
                Some(find_reference_beta_with_grid(
                    &problem,
                    (search.beta_lo, search.beta_hi),
                    search.tol,
                    search.grid,
                )?)
            } else {
                None
            };
            let beta_value = match &fit {
                Some(f) => f.beta_star,
                None => {
                    let b: f64 = beta.trim().parse().map_err(|_| {
                        Error::Domain(format!("--beta must be a number or `solve`, got `{beta}`"))
                    })?;
                    params.insert("beta".into(), json!(b));
                    b
                }
            };
            let result = allocate(&problem, beta_value)?;
            (
                "allocate",
                params,
                ReportPayload::Allocation(AllocationReport::new(result, fit)),
                dataset.provenance,
                output,
            )
        }
        Command::Sweep {
            input,
            beta_min,
            beta_max,
            steps,
            output,
        } => {
            let Loaded {
                dataset,
                problem,
                mut params,
            } = load(&input)?;
            params.insert("beta_min".into(), json!(beta_min));
            params.insert("beta_max".into(), json!(beta_max));
            params.insert("steps".into(), json!(steps));
            let s = sweep(&problem, beta_min, beta_max, steps)?;
            (
                "sweep",
                params,
                ReportPayload::Sweep(s),
                dataset.provenance,
                output,
            )
        }
        Command::SolveBeta {
            input,
            search,
            output,
        } => {
            let Loaded {
                dataset,
                problem,
                mut params,
            } = load(&input)?;
            search_params(&mut params, &search);
            let fit = find_reference_beta_with_grid(
                &problem,
                (search.beta_lo, search.beta_hi),
                search.tol,
                search.grid,
            )?;
            (
                "solve-beta",
                params,
                ReportPayload::ReferenceBeta(fit),
                dataset.provenance,
                output,
            )
        }
        Command::Crossings {
            input,
            beta_lo,
            beta_hi,
            steps,
            output,
        } => {
            let Loaded {
                dataset,
                problem,
                mut params,
            } = load(&input)?;
            params.insert("beta_lo".into(), json!(beta_lo));
            params.insert("beta_hi".into(), json!(beta_hi));
            params.insert("steps".into(), json!(steps));
            let report = find_demand_crossings(&problem, (beta_lo, beta_hi), steps)?;
            (
                "crossings",
                params,
                ReportPayload::Crossings(report),
                dataset.provenance,
                output,
            )
        }
        Command::Divide {
            agents,
            agents_file,
            total,
            beta,
            output,
        } => {
            let (players, provenance) = match &agents_file {
                Some(path) => (
                    parse_players(File::open(path)?)?,
                    format!("file: {}", path.display()),
                ),
                None => {
                    let players = agents
                        .iter()
                        .map(|s| parse_player_triple(s))
                        .collect::<Result<Vec<_>>>()?;
                    if players.is_empty() {
                        return Err(Error::Config(
                            "give players with --agent or --agents-file".into(),
                        ));
                    }
                    (players, "inline players".to_string())
                }
            };
            let mut params = BTreeMap::new();
            params.insert("players".into(), serde_json::to_value(&players)?);
            params.insert("total".into(), json!(total));
            params.insert("beta".into(), json!(beta));
            let result = fair_divide(&players, total, beta)?;
            (
                "divide",
                params,
                ReportPayload::Division(result),
                provenance,
                output,
            )
        }
    };
    Ok((
        ReportEnvelope {
            command: name.to_string(),
            parameters: params,
            results,
            dataset_provenance: provenance,
        },
        output,
    ))
}

fn emit(envelope: &ReportEnvelope, output: &OutputArgs) -> Result<()> {
    let text = match output.format {
        Format::Table => envelope.to_table(),
        Format::Csv => envelope.to_csv(),
        Format::Json => envelope.to_json()?,
    };
    match &output.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command).and_then(|(env, out)| emit(&env, &out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
