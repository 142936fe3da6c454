//! Monte Carlo power studies over a grid of normalized LD values.

pub mod output;
pub mod run;
pub mod scenario;

pub use output::{results_csv, write_results, CSV_HEADER};
pub use run::{
    compare_strategies, run_replicate, run_replicates, run_scenario, simulate_replicate, summarize, PowerRow,
    ReplicateOutcome, ScenarioReport, StrategyComparison, Variant, VariantOutcome,
};
pub use scenario::{ResidualChoice, Scenario, TraitConfig};
