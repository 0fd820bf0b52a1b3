use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fbreg::cli::config::BarrierChoice;
use fbreg::cli::{run, Command, ExperimentConfig};
use fbreg::Error;

#[derive(Parser)]
#[command(name = "fbreg", version, about = "Nonlocal obstacle problems and free-boundary regularity experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Sub,
}

#[derive(Args)]
struct Global {
    /// TOML experiment configuration; defaults for the subcommand when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (all cores when omitted).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve an elliptic or parabolic obstacle problem.
    Solve,
    /// Fit local free-boundary exponents and classify points.
    FitExponent,
    /// Rescale around free-boundary points and fit one-dimensional profiles.
    Blowup,
    /// Check a barrier inequality on refining grids.
    VerifyBarrier {
        /// exp-cusp, cone-super, traveling-cone-sub, power-regularized or heat-tail-super.
        #[arg(long)]
        kind: Option<String>,
        /// Comma-separated key=value overrides; lists use ';'.
        #[arg(long)]
        params: Option<String>,
    },
    /// Tabulate critical exponents over directions and speeds.
    Gamma,
    /// Tabulate the symbol coefficients over directions and frequencies.
    Symbol,
    /// Boundary Harnack quotient oscillation experiment.
    Harnack,
    /// Time and Hölder regularity of a parabolic solution.
    Regularity,
}

fn config(cli: &Cli, cmd: Command, sub: &Sub) -> fbreg::Result<ExperimentConfig> {
    let (mut cfg, text) = match &cli.global.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            (ExperimentConfig::parse(&text)?, text)
        }
        None => (ExperimentConfig::defaults(cmd.default_scenario()), String::new()),
    };
    if let Some(seed) = cli.global.seed {
        cfg.seed = seed;
    }
    if let Sub::VerifyBarrier { kind, params } = sub {
        let b = cfg.barrier.get_or_insert_with(Default::default);
        if let Some(k) = kind {
            b.kind = BarrierChoice::parse(k).ok_or_else(|| Error::Config {
                code: "E_PARAM",
                line: 0,
                msg: format!("unknown barrier kind '{k}'"),
            })?;
        }
        if let Some(p) = params {
            b.apply_params(p)?;
        }
    }
    cfg.validate(&text)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.cmd {
        Sub::Solve => Command::Solve,
        Sub::FitExponent => Command::FitExponent,
        Sub::Blowup => Command::Blowup,
        Sub::VerifyBarrier { .. } => Command::VerifyBarrier,
        Sub::Gamma => Command::Gamma,
        Sub::Symbol => Command::Symbol,
        Sub::Harnack => Command::Harnack,
        Sub::Regularity => Command::Regularity,
    };
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("fbreg: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = config(&cli, cmd, &cli.cmd).and_then(|cfg| run(cmd, &cfg, &cli.global.out));
    match result {
        Ok(out) => {
            println!("{}", out.summary);
            for f in &out.files {
                println!("  wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fbreg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
