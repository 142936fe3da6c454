//! Monte Carlo replicates and power aggregation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::scenario::Scenario;
use crate::imputation::{estimate_correlations, impute_detailed, CorrelationSummary, Strategy, StrategyPolicy};
use crate::missingness::{apply_missingness, deleted_panel, PhenotypePanel};
use crate::pedigree::simulate_families;
use crate::rng::SeedStream;
use crate::tdt::{multivariate_tdt, TestInput, TestResult};
use crate::traits::TraitSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    NoMissing,
    Imputed,
    Deleted,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::NoMissing, Variant::Imputed, Variant::Deleted];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::NoMissing => "no_missing",
            Variant::Imputed => "imputed",
            Variant::Deleted => "deleted",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VariantOutcome {
    Tested(TestResult),
    /// Imputation or the test itself failed; excluded from the power denominator.
    Failed(String),
}

impl VariantOutcome {
    pub fn result(&self) -> Option<&TestResult> {
        match self {
            VariantOutcome::Tested(r) => Some(r),
            VariantOutcome::Failed(_) => None,
        }
    }
}

/// The complete panel of one replicate and its masked copy.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateData {
    pub complete: PhenotypePanel,
    pub masked: PhenotypePanel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateOutcome {
    pub delta_index: usize,
    pub rep_index: usize,
    /// Indexed like [`Variant::ALL`].
    pub outcomes: [VariantOutcome; 3],
    pub strategy: Option<Strategy>,
    pub dropped_offspring: usize,
}

impl ReplicateOutcome {
    pub fn outcome(&self, variant: Variant) -> &VariantOutcome {
        &self.outcomes[variant as usize]
    }
}

/// Generator tree of one replicate. Child 0 drives families, child 1 traits,
/// child 2 the missingness mask.
pub fn replicate_seed(master_seed: u64, delta_index: usize, rep_index: usize) -> SeedStream {
    SeedStream::new(master_seed).path(&[delta_index as u64, rep_index as u64])
}

pub fn simulate_replicate(
    scenario: &Scenario,
    specs: &[TraitSpec],
    delta_index: usize,
    rep_index: usize,
) -> Result<ReplicateData> {
    let delta_star = *scenario
        .delta_stars
        .get(delta_index)
        .ok_or_else(|| Error::Configuration(format!("no delta_star at index {delta_index}")))?;
    let seed = replicate_seed(scenario.master_seed, delta_index, rep_index);
    let locus = scenario.locus(delta_star)?;
    let families = simulate_families(scenario.n_families, &locus, &seed.child(0))?;
    let complete = PhenotypePanel::simulate(&families, specs, Some(scenario.correlation), &seed.child(1))?;
    let masked = apply_missingness(&complete, scenario.mtype, scenario.miss_p, &mut seed.child(2).rng())?;
    Ok(ReplicateData { complete, masked })
}

fn test_panel(panel: &PhenotypePanel, scenario: &Scenario) -> VariantOutcome {
    let run = || -> Result<TestResult> {
        multivariate_tdt(&TestInput {
            transmissions: panel.transmissions()?,
            centering: scenario.centering,
        })
    };
    match run() {
        Ok(r) => VariantOutcome::Tested(r),
        Err(e) => VariantOutcome::Failed(e.to_string()),
    }
}

/// Runs one replicate: the complete panel, its imputed completion and its
/// complete-case reduction are all tested on the same simulated data.
pub fn run_replicate(scenario: &Scenario, delta_index: usize, rep_index: usize) -> Result<ReplicateOutcome> {
    let specs = scenario.trait_specs()?;
    run_replicate_with(scenario, &specs, delta_index, rep_index)
}

fn run_replicate_with(
    scenario: &Scenario,
    specs: &[TraitSpec],
    delta_index: usize,
    rep_index: usize,
) -> Result<ReplicateOutcome> {
    let data = simulate_replicate(scenario, specs, delta_index, rep_index)?;
    let no_missing = test_panel(&data.complete, scenario);
    let (imputed, strategy, dropped) = match impute_detailed(&data.masked, scenario.mtype, scenario.strategy) {
        Ok(o) => (test_panel(&o.panel, scenario), o.strategy, o.dropped_offspring),
        Err(e) => (VariantOutcome::Failed(e.to_string()), None, 0),
    };
    let deleted = test_panel(&deleted_panel(&data.masked), scenario);
    Ok(ReplicateOutcome {
        delta_index,
        rep_index,
        outcomes: [no_missing, imputed, deleted],
        strategy,
        dropped_offspring: dropped,
    })
}

/// Empirical rejection rate of one variant at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerRow {
    pub delta_star: f64,
    pub variant: Variant,
    pub power: f64,
    pub monte_carlo_se: f64,
    /// Replicates that produced a test result.
    pub replications: usize,
    pub failures: usize,
    pub nonconverged: usize,
}

impl PowerRow {
    pub fn from_outcomes<'a>(
        delta_star: f64,
        variant: Variant,
        alpha: f64,
        outcomes: impl IntoIterator<Item = &'a VariantOutcome>,
    ) -> Self {
        let (mut tested, mut rejected, mut failures, mut nonconverged) = (0usize, 0usize, 0usize, 0usize);
        for o in outcomes {
            match o {
                VariantOutcome::Tested(r) => {
                    tested += 1;
                    rejected += usize::from(r.rejects(alpha));
                    nonconverged += usize::from(!r.converged);
                }
                VariantOutcome::Failed(_) => failures += 1,
            }
        }
        let (power, se) = if tested == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let p = rejected as f64 / tested as f64;
            (p, (p * (1.0 - p) / tested as f64).sqrt())
        };
        PowerRow {
            delta_star,
            variant,
            power,
            monte_carlo_se: se,
            replications: tested,
            failures,
            nonconverged,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioReport {
    /// Sorted by δ* then [`Variant`].
    pub rows: Vec<PowerRow>,
    /// How often each strategy was applied to type 2.1 data.
    pub strategy_counts: Vec<(Strategy, usize)>,
    pub dropped_offspring: usize,
}

impl ScenarioReport {
    pub fn row(&self, delta_star: f64, variant: Variant) -> Option<&PowerRow> {
        self.rows.iter().find(|r| r.delta_star == delta_star && r.variant == variant)
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Configuration("thread count must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    builder
        .build()
        .map_err(|e| Error::Configuration(format!("cannot start worker pool: {e}")))
}

fn grid(scenario: &Scenario) -> Vec<(usize, usize)> {
    (0..scenario.delta_stars.len())
        .flat_map(|d| (0..scenario.replications).map(move |r| (d, r)))
        .collect()
}

/// Runs every replicate of every δ* and returns them in grid order. The
/// result does not depend on `threads`.
pub fn run_replicates(scenario: &Scenario, threads: Option<usize>) -> Result<Vec<ReplicateOutcome>> {
    scenario.validate()?;
    let specs = scenario.trait_specs()?;
    let work = grid(scenario);
    pool(threads)?.install(|| {
        work.par_iter()
            .map(|&(d, r)| run_replicate_with(scenario, &specs, d, r))
            .collect::<Result<Vec<_>>>()
    })
}

pub fn summarize(scenario: &Scenario, outcomes: &[ReplicateOutcome]) -> ScenarioReport {
    let mut rows = Vec::new();
    for (di, &ds) in scenario.delta_stars.iter().enumerate() {
        for v in Variant::ALL {
            let these = outcomes.iter().filter(|o| o.delta_index == di).map(|o| o.outcome(v));
            rows.push(PowerRow::from_outcomes(ds, v, scenario.alpha, these));
        }
    }
    rows.sort_by(|a, b| a.delta_star.total_cmp(&b.delta_star).then(a.variant.cmp(&b.variant)));
    let strategy_counts = Strategy::ALL
        .iter()
        .map(|&s| (s, outcomes.iter().filter(|o| o.strategy == Some(s)).count()))
        .filter(|(_, n)| *n > 0)
        .collect();
    ScenarioReport {
        rows,
        strategy_counts,
        dropped_offspring: outcomes.iter().map(|o| o.dropped_offspring).sum(),
    }
}

pub fn run_scenario(scenario: &Scenario, threads: Option<usize>) -> Result<ScenarioReport> {
    let outcomes = run_replicates(scenario, threads)?;
    Ok(summarize(scenario, &outcomes))
}

/// Imputed-data power of each fixed strategy on the same replicates.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyComparison {
    /// One entry per strategy, rows in δ* order.
    pub power: Vec<(Strategy, Vec<PowerRow>)>,
    /// Correlations averaged over the complete panels of all replicates.
    pub correlations: CorrelationSummary,
    /// What the automatic selector picks for those correlations.
    pub selected: Strategy,
}

impl StrategyComparison {
    /// Strategy with the highest power summed over the grid.
    pub fn best(&self) -> Strategy {
        self.power
            .iter()
            .max_by(|a, b| {
                let sa: f64 = a.1.iter().map(|r| r.power).sum();
                let sb: f64 = b.1.iter().map(|r| r.power).sum();
                sa.total_cmp(&sb)
            })
            .map(|(s, _)| *s)
            .unwrap_or(Strategy::UseBoth)
    }
}

pub fn compare_strategies(scenario: &Scenario, threads: Option<usize>) -> Result<StrategyComparison> {
    scenario.validate()?;
    if scenario.mtype != crate::missingness::MissingType::T2_1 {
        return Err(Error::Configuration(
            "strategy comparison needs missing type T2_1".into(),
        ));
    }
    let specs = scenario.trait_specs()?;
    let work = grid(scenario);
    let per_rep = pool(threads)?.install(|| {
        work.par_iter()
            .map(|&(d, r)| -> Result<(usize, [VariantOutcome; 3], CorrelationSummary)> {
                let data = simulate_replicate(scenario, &specs, d, r)?;
                let corr = estimate_correlations(&data.complete)?;
                let outcomes = Strategy::ALL.map(|s| {
                    match impute_detailed(&data.masked, scenario.mtype, StrategyPolicy::Fixed(s)) {
                        Ok(o) => test_panel(&o.panel, scenario),
                        Err(e) => VariantOutcome::Failed(e.to_string()),
                    }
                });
                Ok((d, outcomes, corr))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let n = per_rep.len() as f64;
    let correlations = CorrelationSummary {
        rho1: per_rep.iter().map(|x| x.2.rho1).sum::<f64>() / n,
        rho2: per_rep.iter().map(|x| x.2.rho2).sum::<f64>() / n,
    };
    let selected = crate::imputation::select_strategy((specs[0].kind(), specs[1].kind()), &correlations)?;
    let power = Strategy::ALL
        .iter()
        .enumerate()
        .map(|(si, &s)| {
            let rows = scenario
                .delta_stars
                .iter()
                .enumerate()
                .map(|(di, &ds)| {
                    let these = per_rep.iter().filter(|x| x.0 == di).map(|x| &x.1[si]);
                    PowerRow::from_outcomes(ds, Variant::Imputed, scenario.alpha, these)
                })
                .collect();
            (s, rows)
        })
        .collect();
    Ok(StrategyComparison {
        power,
        correlations,
        selected,
    })
}
