use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use coexplorer_core::baseline::SarsaParams;
use coexplorer_harness::compare::{compare, to_csv, to_text, CompareMatrix};
use coexplorer_harness::episode::{run_episode, AgentKind, EpisodeSpec};
use coexplorer_harness::oracle::OraclePolicy;
use coexplorer_harness::pca::{project_trajectory_pca, write_csv};
use coexplorer_harness::pilot::{run_pilot, PilotAgent, PilotSpec};

/// Headless benchmarks and trajectory analysis for the co-exploration agent.
#[derive(Debug, Parser)]
#[command(name = "harness", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MatrixArg {
    Default,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PilotArg {
    Sarsa,
    Random,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run one episode against a simulated user.
    Run {
        #[arg(long, default_value = "coexplorer")]
        agent: AgentKind,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long, default_value_t = 2000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Steps between oracle feedbacks.
        #[arg(long, default_value_t = 5)]
        period: u64,
        /// Oracle also labels zones near the target.
        #[arg(long)]
        mixed: bool,
        /// Write the per-step distance series as CSV.
        #[arg(long, value_name = "PATH")]
        distances: Option<PathBuf>,
    },
    /// Medians and IQRs over agent kinds and space sizes.
    Compare {
        #[arg(long, value_enum, default_value = "default")]
        matrix: MatrixArg,
        /// Seeds per cell.
        #[arg(long)]
        seeds: Option<u64>,
        /// Also write the table as CSV.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Project the states of a session log onto two principal components.
    Pca {
        #[arg(long, value_name = "PATH")]
        log: PathBuf,
        /// CSV destination; stdout if unset.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Tabular Sarsa or random walk on the coarse 12-dimension grid.
    Pilot {
        #[arg(long, value_enum, default_value = "sarsa")]
        agent: PilotArg,
        #[arg(long, default_value_t = 50)]
        episodes: u64,
        #[arg(long, default_value_t = 5000)]
        budget: u64,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().cmd {
        Cmd::Run { agent, dims, budget, seed, period, mixed, distances } => {
            anyhow::ensure!(dims >= 1 && period >= 1, "dims and period must be at least 1");
            let mut spec = EpisodeSpec::new(agent, dims, budget, seed);
            spec.feedback_period = period;
            if mixed {
                spec.oracle = OraclePolicy::Mixed;
            }
            let r = run_episode(&spec);
            match r.steps_to_target {
                Some(s) => println!("{agent} n={dims} seed={seed}: reached target in {s} steps"),
                None => println!("{agent} n={dims} seed={seed}: budget of {budget} steps exhausted"),
            }
            println!("feedback given: {}, final L-inf distance: {:.3}", r.feedback_count, r.final_distance);
            if let Some(path) = distances {
                let mut out = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                writeln!(out, "step,distance")?;
                for (i, d) in r.distances.iter().enumerate() {
                    writeln!(out, "{},{d}", i + 1)?;
                }
                out.flush()?;
            }
        }
        Cmd::Compare { matrix: MatrixArg::Default, seeds, csv } => {
            let mut m = CompareMatrix::default();
            if let Some(s) = seeds {
                anyhow::ensure!(s >= 1, "need at least one seed per cell");
                m.seeds_per_cell = s;
            }
            let cells = compare(&m);
            print!("{}", to_text(&cells));
            if let Some(path) = csv {
                std::fs::write(&path, to_csv(&cells)).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Cmd::Pca { log, out } => {
            let points = project_trajectory_pca(&log).with_context(|| format!("projecting {}", log.display()))?;
            match out {
                Some(path) => {
                    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    write_csv(&points, BufWriter::new(file))?;
                }
                None => write_csv(&points, io::stdout().lock())?,
            }
        }
        Cmd::Pilot { agent, episodes, budget } => {
            let agent = match agent {
                PilotArg::Sarsa => PilotAgent::Sarsa(SarsaParams::default()),
                PilotArg::Random => PilotAgent::Random,
            };
            let mut steps: Vec<u64> =
                (0..episodes).map(|seed| run_pilot(agent, &PilotSpec { budget, seed, ..PilotSpec::default() }).unwrap_or(budget)).collect();
            steps.sort_unstable();
            println!("median steps over {episodes} episodes: {}", steps.get(steps.len() / 2).copied().unwrap_or(0));
        }
    }
    Ok(())
}
