use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fame_core::evolution::{top_k_selector, write_generation, EvolutionConfig, Evolver, Ranking, ScoringMode};
use fame_core::functionality::{builtin_models, ensure_labeled, load_models, match_all, simplified_matches, ModelSet};
use fame_core::groups::enumerate_part_groups;
use fame_core::shape::io::{load_population, load_shape, write_shape};
use fame_core::{fixtures, Label, Shape};
use fame_service::SessionStore;

#[derive(Parser)]
#[command(
    name = "fame",
    version,
    about = "Evolve part-segmented 3D shapes under functionality constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Full,
    Simplified,
}

#[derive(Clone, Copy, ValueEnum)]
enum RankBy {
    Plausibility,
    MultiFunctionality,
}

#[derive(Subcommand)]
enum Command {
    /// Write the built-in fixture shapes as OBJ + JSON sidecars.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
        /// Write the whole corpus instead of the four-shape population.
        #[arg(long)]
        all: bool,
    },
    /// List the part groups of a shape as JSON.
    Groups {
        mesh: PathBuf,
        #[arg(long, default_value_t = 64)]
        max_groups: usize,
    },
    /// Partial-match a shape against every functionality model.
    Score {
        mesh: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
        /// Score only the whole shape and the parts inherited from each
        /// parent (needs provenance in the sidecar).
        #[arg(long)]
        simplified: bool,
    },
    /// Run a headless evolution that keeps the top-k shapes each generation.
    Evolve {
        /// Directory of OBJ + JSON shapes, or `fixtures`.
        #[arg(long)]
        dataset: String,
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
        #[arg(long, default_value_t = 3)]
        generations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mode::Full)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = RankBy::Plausibility)]
        ranking: RankBy,
        #[arg(long, default_value_t = 8)]
        top_k: usize,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Where sessions are stored.
        #[arg(long)]
        data: PathBuf,
        /// Root that session dataset names resolve under.
        #[arg(long)]
        datasets: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
    },
}

fn models(dir: Option<&Path>) -> Result<ModelSet> {
    match dir {
        Some(d) => load_models(d).with_context(|| format!("loading models from {}", d.display())),
        None => Ok(builtin_models()),
    }
}

fn dataset(name: &str) -> Result<Vec<Shape>> {
    if name == "fixtures" {
        return Ok(fixtures::population());
    }
    load_population(name).with_context(|| format!("loading dataset {name}"))
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fixtures { out, all } => {
            let shapes = if all {
                fixtures::corpus()
            } else {
                fixtures::population()
            };
            for s in &shapes {
                write_shape(s, &out)?;
            }
            println!("wrote {} shapes to {}", shapes.len(), out.display());
        }
        Command::Groups { mesh, max_groups } => {
            let shape = load_shape(&mesh)?;
            print_json(&enumerate_part_groups(&shape, max_groups))?;
        }
        Command::Score {
            mesh,
            models: dir,
            simplified,
        } => {
            let shape = load_shape(&mesh)?;
            let models = models(dir.as_deref())?;
            let results = if simplified {
                simplified_matches(&shape, &models)?
            } else {
                match_all(&shape, &models)
            };
            print_json(&results)?;
        }
        Command::Evolve {
            dataset: name,
            labels,
            generations,
            seed,
            mode,
            ranking,
            top_k,
            models: dir,
            out,
        } => {
            let models = models(dir.as_deref())?;
            let population: Vec<Shape> = dataset(&name)?
                .into_iter()
                .map(|s| ensure_labeled(s, &models))
                .collect();
            let labels: BTreeSet<Label> = labels.into_iter().filter(|l| !l.is_empty()).map(Label::from).collect();
            let present: BTreeSet<Label> = population.iter().flat_map(|s| s.labels()).collect();
            if let Some(l) = labels.difference(&present).next() {
                bail!("label `{l}` does not occur in the dataset");
            }
            let config = EvolutionConfig {
                labels,
                generations,
                seed,
                scoring: match mode {
                    Mode::Full => ScoringMode::Full,
                    Mode::Simplified => ScoringMode::Simplified,
                },
                ranking: match ranking {
                    RankBy::Plausibility => Ranking::Plausibility,
                    RankBy::MultiFunctionality => Ranking::MultiFunctionality,
                },
                top_k,
                ..EvolutionConfig::default()
            };
            let evolver = Evolver::new(config, models)?;
            write_generation(&evolver.initial_generation(population.clone())?, &out)?;
            for g in evolver.evolve(population, &mut top_k_selector(top_k))? {
                let dir = write_generation(&g, &out)?;
                let best = g
                    .entries
                    .first()
                    .map(|e| format!("{} ({:.3})", e.id, e.plausibility))
                    .unwrap_or_default();
                println!(
                    "generation {}: {} produced, {} kept, best {best} -> {}",
                    g.index,
                    g.produced,
                    g.shapes.len(),
                    dir.display()
                );
            }
        }
        Command::Serve {
            addr,
            data,
            datasets,
            models: dir,
        } => {
            let store = SessionStore::open(data, datasets, models(dir.as_deref())?)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(fame_service::serve(addr, Arc::new(store)))?;
        }
    }
    Ok(())
}

fn main() {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
