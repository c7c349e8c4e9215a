mod cmd;
mod config;
mod failure;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_generator, parse_verifier, MethodKind, RunConfig};
use deltom::scaling::{AggregationRule, Ranking};
use failure::{Failure, ResultExt};
use io::OutDir;

#[derive(Parser)]
#[command(name = "deltom", version, about = "Belief-trace stories, step verification and inference-time scaling")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate stories with gold traces and prompts.
    Gen {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample candidate traces for every question of a stories file.
    Sample {
        #[arg(long)]
        stories: PathBuf,
        /// e.g. `scripted:q=0.9` or `remote:URL,model=NAME`.
        #[arg(long)]
        generator: Option<String>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label candidate traces against gold and report step accuracy.
    Verify {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        stories: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best-of-N or beam search over every question of a stories file.
    Scale {
        #[arg(long)]
        stories: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodKind>,
        #[arg(long = "N", alias = "n")]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        b: Option<usize>,
        /// last, min, avg or prod; all four when omitted.
        #[arg(long)]
        rule: Option<String>,
        /// vanilla or weighted; both when omitted.
        #[arg(long)]
        ranking: Option<String>,
        /// exact, noisy8b, noisy3b, noisy:a0,..,a4 or remote:URL.
        #[arg(long)]
        verifier: Option<String>,
        #[arg(long)]
        generator: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form and Monte-Carlo success rates over a (q, K, N, L) grid.
    Analyze {
        /// e.g. `q=0.5,0.7,0.9;K=1,4,16;N=4,64,1024;L=5`.
        #[arg(long, default_value = "")]
        grid: String,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "analysis.csv")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().config()?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref()).config()?;
    match cli.command {
        Command::Gen { seed, count, out } => {
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.out = out.unwrap_or(cfg.out);
            let dir = OutDir::new(&cfg.out, cli.force).data()?;
            cmd::gen::run(&cfg, count, &dir)
        }
        Command::Sample {
            stories,
            generator,
            n,
            seed,
            out,
        } => {
            if let Some(g) = generator {
                cfg.generator = parse_generator(&g).config()?;
            }
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.out = out.unwrap_or(cfg.out);
            let dir = OutDir::new(&cfg.out, cli.force).data()?;
            cmd::sample::run(&cfg, &stories, n, &dir)
        }
        Command::Verify { traces, stories, out } => {
            cfg.out = out.unwrap_or(cfg.out);
            let dir = OutDir::new(&cfg.out, cli.force).data()?;
            cmd::verify::run(&stories, &traces, &dir)
        }
        Command::Scale {
            stories,
            method,
            n,
            k,
            b,
            rule,
            ranking,
            verifier,
            generator,
            seed,
            out,
        } => {
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.out = out.unwrap_or(cfg.out);
            let m = &mut cfg.method;
            m.kind = method.unwrap_or(m.kind);
            m.n = n.unwrap_or(m.n);
            m.beam.k = k.unwrap_or(m.beam.k);
            m.beam.b = b.unwrap_or(m.beam.b);
            if let Some(r) = rule {
                m.rule = Some(r.parse::<AggregationRule>().config()?);
            }
            if let Some(r) = ranking {
                m.ranking = Some(r.parse::<Ranking>().config()?);
            }
            if let Some(v) = verifier {
                cfg.verifier = parse_verifier(&v, cfg.seed).config()?;
            }
            if let Some(g) = generator {
                cfg.generator = parse_generator(&g).config()?;
            }
            let dir = OutDir::new(&cfg.out, cli.force).data()?;
            cmd::scale::run(&cfg, &stories, &dir)
        }
        Command::Analyze {
            grid,
            trials,
            seed,
            out,
        } => cmd::analyze::run(&grid, trials, seed.unwrap_or(cfg.seed), &out, cli.force),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("deltom: {f}");
            ExitCode::from(f.code() as u8)
        }
    }
}
