use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use qtdt_core::harness::{self, output, Scenario, ScenarioReport};
use qtdt_core::traits::{p_star_oracle, population_mean, TraitKind, TraitModel};

#[derive(Parser)]
#[command(name = "qtdt-sim", version, about = "Power studies for the sib-pair multivariate TDT with missing phenotypes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write power.csv, manifest.txt and optionally power.svg.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Master seed; overrides the scenario's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores). Results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        svg: bool,
    },
    /// Imputed-data power of each fixed strategy on a type 2.1 scenario.
    Strategies {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Report the resolved trait models and the p* they achieve.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario> {
    let mut scenario =
        Scenario::from_file(path).with_context(|| format!("loading scenario {}", path.display()))?;
    if let Some(s) = seed {
        scenario.master_seed = s;
    }
    Ok(scenario)
}

fn print_report(report: &ScenarioReport) {
    print!("{}", output::results_csv(report));
    let failures: usize = report.rows.iter().map(|r| r.failures).sum();
    let nonconverged: usize = report.rows.iter().map(|r| r.nonconverged).sum();
    if failures > 0 || nonconverged > 0 {
        eprintln!("note: {failures} failed tests, {nonconverged} non-converged fits (see manifest)");
    }
}

fn validate(scenario: &Scenario) -> Result<()> {
    println!("scenario {} (d = {}, m = {})", scenario.name, scenario.d, scenario.m);
    for (i, (cfg, spec)) in scenario.traits.iter().zip(scenario.trait_specs()?).enumerate() {
        let achieved = p_star_oracle(&spec, scenario.d);
        let residual = match spec.model {
            TraitModel::Normal { variance } => format!("variance = {variance:.6}"),
            TraitModel::ChiSquareShift { df } => format!("df = {df:.6}"),
            TraitModel::PoissonShift { lambda } => format!("lambda = {lambda:.6}"),
            TraitModel::BinaryThreshold { sigma, threshold } => format!("sigma = {sigma}, c = {threshold}"),
        };
        let target = match cfg.residual {
            harness::ResidualChoice::PStar(p) => format!("target p* = {p}"),
            harness::ResidualChoice::Explicit(_) => "explicit residual".to_string(),
        };
        print!(
            "trait {}: {} alpha = {} beta = {} {residual}; {target}; achieved p* = {achieved:.6}",
            i + 1,
            spec.kind().name(),
            spec.alpha,
            spec.beta
        );
        if spec.kind() == TraitKind::BinaryThreshold {
            print!("; prevalence = {:.6}", population_mean(&spec, scenario.d));
        }
        println!();
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            seed,
            out,
            threads,
            svg,
        } => {
            let scenario = load(&scenario, seed)?;
            let report = harness::run_scenario(&scenario, threads)?;
            harness::write_results(&out, &scenario, &report, svg)
                .with_context(|| format!("writing results to {}", out.display()))?;
            print_report(&report);
        }
        Command::Strategies {
            scenario,
            seed,
            threads,
        } => {
            let scenario = load(&scenario, seed)?;
            let cmp = harness::compare_strategies(&scenario, threads)?;
            print!("strategy");
            for ds in &scenario.delta_stars {
                print!(",delta_{ds}");
            }
            println!();
            for (s, rows) in &cmp.power {
                print!("{}", s.name());
                for r in rows {
                    print!(",{:.3}", r.power);
                }
                println!();
            }
            println!(
                "# rho1 = {:.3}, rho2 = {:.3}; selector picks {}; highest power: {}",
                cmp.correlations.rho1,
                cmp.correlations.rho2,
                cmp.selected.name(),
                cmp.best().name()
            );
        }
        Command::Validate { scenario } => {
            let scenario = load(&scenario, None)?;
            validate(&scenario)?;
        }
    }
    Ok(())
}
