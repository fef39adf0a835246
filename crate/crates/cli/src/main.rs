use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use normcompat_cli::commands::{self, CatalogueFilter, Overrides};
use normcompat_cli::config::RunConfig;
use normcompat_cli::report::Report;

#[derive(Parser)]
#[command(name = "normcompat", version, about = "Open-orbit, level-group and norm-relation checks for matrix pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
    /// Record wall-clock time per check (makes output nondeterministic).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    rmax: Option<u32>,
    #[arg(long)]
    depth: Option<u32>,
    /// Replaces every budget in the config.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run checks marked slow.
    #[arg(long)]
    extended: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Open orbit, stabilizer, condition (B) and torus image.
    CheckPair(RunArgs),
    /// Norm relations for r = 1..rmax and the compatible family.
    SimulateNorm(RunArgs),
    VerifyLemma(RunArgs),
    /// Search for u; prints the completed config on success.
    FindU(RunArgs),
    Catalogue {
        #[arg(long)]
        check_dims: bool,
        #[arg(long, value_enum, default_value = "none")]
        filter: CatalogueFilter,
    },
}

const USAGE: u8 = 64;

fn load(args: &RunArgs, timing: bool) -> Result<(RunConfig, Overrides), String> {
    let ov = Overrides {
        p: args.p,
        r_max: args.rmax,
        depth: args.depth,
        budget: args.budget,
        seed: args.seed,
        extended: args.extended,
        timing,
    };
    let cfg = RunConfig::load(&args.config).map_err(|e| e.to_string())?;
    let cfg = ov.apply(cfg).map_err(|e| e.to_string())?;
    Ok((cfg, ov))
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let run = |args: &RunArgs, f: fn(&RunConfig, &Overrides) -> Report| -> Result<Report, String> {
        let (cfg, ov) = load(args, cli.timing)?;
        Ok(f(&cfg, &ov))
    };
    let result = match &cli.command {
        Command::CheckPair(a) => run(a, commands::check_pair),
        Command::SimulateNorm(a) => run(a, commands::simulate_norm),
        Command::VerifyLemma(a) => run(a, commands::verify_lemma_cmd),
        Command::FindU(a) => run(a, commands::find_u_cmd),
        Command::Catalogue { check_dims, filter } => Ok(commands::catalogue_cmd(*check_dims, *filter)),
    };
    match result {
        Ok(report) => {
            match cli.format {
                Format::Json => print!("{}", report.to_json()),
                Format::Text => print!("{}", report.to_text()),
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
    }
}
