//! Conditional-expectation imputation of missing trait cells.
//!
//! Each missing cell is replaced by E(Y | observed predictors) under a GLM
//! matched to the trait kind: identity-link least squares for normal and
//! (log-transformed) chi-square traits, log-link Poisson regression for
//! counts, and logistic regression for binary traits. All models carry an
//! intercept and are refit from the observed cells of the panel at hand.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::glm::{fit_logistic, fit_ols, fit_poisson, inverse_logit, DesignMatrix};
use crate::missingness::{FamilyRecord, MissingType, PhenotypePanel};
use crate::stats::pearson;
use crate::traits::TraitKind;

/// Minimum number of training rows for any imputation model.
pub const MIN_TRAINING_ROWS: usize = 10;
/// |ρ1 − ρ2| at or below this is treated as ρ1 = ρ2.
pub const CORRELATION_TIE_MARGIN: f64 = 0.02;

/// Predictor choice when exactly one of the four cells of a sib pair is missing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Same trait of the other sib.
    UseSame,
    /// Other trait of the same offspring.
    UseOther,
    /// Both of the above.
    UseBoth,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::UseSame, Strategy::UseOther, Strategy::UseBoth];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::UseSame => "use_same",
            Strategy::UseOther => "use_other",
            Strategy::UseBoth => "use_both",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace([' ', '-'], "_").as_str() {
            "use_same" | "same" => Ok(Strategy::UseSame),
            "use_other" | "other" => Ok(Strategy::UseOther),
            "use_both" | "both" => Ok(Strategy::UseBoth),
            other => Err(Error::Configuration(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StrategyPolicy {
    /// Pick from estimated correlations with [`select_strategy`].
    #[default]
    Auto,
    Fixed(Strategy),
}

impl StrategyPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("auto") {
            Ok(StrategyPolicy::Auto)
        } else {
            Strategy::parse(s).map(StrategyPolicy::Fixed)
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategyPolicy::Auto => "auto",
            StrategyPolicy::Fixed(s) => s.name(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationSummary {
    /// Correlation of the two traits within an offspring (both sibs pooled).
    pub rho1: f64,
    /// Largest cross-sib correlation of the same trait.
    pub rho2: f64,
}

/// Pearson correlations on families whose four cells are all observed.
pub fn estimate_correlations(panel: &PhenotypePanel) -> Result<CorrelationSummary> {
    if panel.k() != 2 {
        return Err(Error::Configuration(format!(
            "correlation summary needs two traits, panel has {}",
            panel.k()
        )));
    }
    let complete: Vec<&FamilyRecord> = panel
        .families
        .iter()
        .filter(|f| f.sibs.len() == 2 && f.sibs.iter().all(|s| s.is_complete()))
        .collect();
    if complete.len() < 10 {
        return Err(Error::Estimation(format!(
            "{} complete families; at least 10 required",
            complete.len()
        )));
    }
    let cell = |f: &FamilyRecord, s: usize, t: usize| f.sibs[s].values[t].expect("complete family");
    let (mut first, mut second) = (Vec::new(), Vec::new());
    for f in &complete {
        for s in 0..2 {
            first.push(cell(f, s, 0));
            second.push(cell(f, s, 1));
        }
    }
    let rho1 = pearson(&first, &second)
        .ok_or_else(|| Error::Estimation("a trait has zero variance".into()))?;
    let mut rho2 = f64::NEG_INFINITY;
    for t in 0..2 {
        let a: Vec<f64> = complete.iter().map(|f| cell(f, 0, t)).collect();
        let b: Vec<f64> = complete.iter().map(|f| cell(f, 1, t)).collect();
        let r = pearson(&a, &b).ok_or_else(|| Error::Estimation("a trait has zero variance".into()))?;
        rho2 = rho2.max(r);
    }
    Ok(CorrelationSummary { rho1, rho2 })
}

/// Best strategy for a trait combination, keyed on the sign of ρ1 − ρ2.
pub fn select_strategy(combo: (TraitKind, TraitKind), corr: &CorrelationSummary) -> Result<Strategy> {
    use Strategy::*;
    use TraitKind::*;
    #[derive(Clone, Copy)]
    enum Case {
        Within,
        Between,
        Tie,
    }
    let case = if (corr.rho1 - corr.rho2).abs() <= CORRELATION_TIE_MARGIN {
        Case::Tie
    } else if corr.rho1 > corr.rho2 {
        Case::Within
    } else {
        Case::Between
    };
    let (a, b) = if combo.0 <= combo.1 { combo } else { (combo.1, combo.0) };
    // Rows: (ρ1 > ρ2, ρ1 < ρ2, ρ1 = ρ2).
    let row = match (a, b) {
        (Normal, Normal) | (PoissonShift, PoissonShift) => [UseOther, UseOther, UseOther],
        (Normal, PoissonShift) => [UseOther, UseSame, UseOther],
        (Normal, ChiSquareShift) | (ChiSquareShift, PoissonShift) | (ChiSquareShift, ChiSquareShift) => {
            [UseSame, UseOther, UseOther]
        }
        _ => {
            return Err(Error::Configuration(format!(
                "no strategy table for trait combination ({}, {})",
                combo.0.name(),
                combo.1.name()
            )))
        }
    };
    Ok(match case {
        Case::Within => row[0],
        Case::Between => row[1],
        Case::Tie => row[2],
    })
}

/// Transform applied to a trait before regression: log for right-skewed
/// chi-square traits, identity otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkewTransform {
    Identity,
    Log,
}

impl SkewTransform {
    pub fn for_kind(kind: TraitKind) -> Self {
        match kind {
            TraitKind::ChiSquareShift => SkewTransform::Log,
            _ => SkewTransform::Identity,
        }
    }

    pub fn forward(&self, value: f64) -> Result<f64> {
        match self {
            SkewTransform::Identity => Ok(value),
            SkewTransform::Log if value > 0.0 => Ok(value.ln()),
            SkewTransform::Log => Err(Error::Transform(format!(
                "cannot log-transform nonpositive value {value}"
            ))),
        }
    }

    pub fn inverse(&self, value: f64) -> f64 {
        match self {
            SkewTransform::Identity => value,
            SkewTransform::Log => value.exp(),
        }
    }
}

/// Applies the kind's skew transform to every value.
pub fn transform_for_skew(values: &[f64], kind: TraitKind) -> Result<Vec<f64>> {
    let t = SkewTransform::for_kind(kind);
    values.iter().map(|&v| t.forward(v)).collect()
}

/// Inverse of [`transform_for_skew`].
pub fn inverse_transform_for_skew(values: &[f64], kind: TraitKind) -> Vec<f64> {
    let t = SkewTransform::for_kind(kind);
    values.iter().map(|&v| t.inverse(v)).collect()
}

/// Where a predictor comes from, relative to the offspring being imputed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    /// Trait of the same offspring.
    Own(usize),
    /// Trait of the other sib.
    Sib(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelKey {
    pub target: usize,
    pub predictors: Vec<Source>,
}

/// A fitted conditional-mean model: intercept first, then one coefficient
/// per predictor, all on the transformed scale.
#[derive(Clone, Debug, PartialEq)]
pub struct ImputationModel {
    pub key: ModelKey,
    pub target_kind: TraitKind,
    pub predictor_kinds: Vec<TraitKind>,
    pub coefficients: Vec<f64>,
    pub training_rows: usize,
}

impl ImputationModel {
    /// Conditional mean at raw (untransformed) predictor values.
    pub fn predict(&self, predictors: &[f64]) -> Result<f64> {
        let mut eta = self.coefficients[0];
        for ((v, kind), c) in predictors.iter().zip(&self.predictor_kinds).zip(&self.coefficients[1..]) {
            eta += c * SkewTransform::for_kind(*kind).forward(*v)?;
        }
        Ok(match self.target_kind {
            TraitKind::Normal | TraitKind::ChiSquareShift => {
                SkewTransform::for_kind(self.target_kind).inverse(eta)
            }
            TraitKind::PoissonShift => eta.exp(),
            TraitKind::BinaryThreshold => inverse_logit(eta),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImputationOutcome {
    pub panel: PhenotypePanel,
    /// Strategy applied to type 2.1 panels.
    pub strategy: Option<Strategy>,
    pub correlations: Option<CorrelationSummary>,
    pub models: Vec<ImputationModel>,
    /// Offspring dropped because nothing was observed to impute from.
    pub dropped_offspring: usize,
}

fn lookup(family: &FamilyRecord, own: usize, source: Source) -> Option<f64> {
    match source {
        Source::Own(t) => family.sibs[own].values[t],
        Source::Sib(t) => family.sibs.get(1 - own).and_then(|s| s.values[t]),
    }
}

fn fit_model(panel: &PhenotypePanel, key: &ModelKey) -> Result<ImputationModel> {
    let target_kind = panel.kinds[key.target];
    let predictor_kinds: Vec<TraitKind> = key
        .predictors
        .iter()
        .map(|s| match s {
            Source::Own(t) | Source::Sib(t) => panel.kinds[*t],
        })
        .collect();
    let target_transform = SkewTransform::for_kind(target_kind);

    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for family in &panel.families {
        for own in 0..family.sibs.len() {
            let Some(y) = family.sibs[own].values[key.target] else {
                continue;
            };
            let preds: Option<Vec<f64>> = key.predictors.iter().map(|&s| lookup(family, own, s)).collect();
            let Some(preds) = preds else { continue };
            let row = preds
                .iter()
                .zip(&predictor_kinds)
                .map(|(v, k)| SkewTransform::for_kind(*k).forward(*v))
                .collect::<Result<Vec<f64>>>()?;
            xs.push(row);
            ys.push(match target_kind {
                TraitKind::Normal | TraitKind::ChiSquareShift => target_transform.forward(y)?,
                _ => y,
            });
        }
    }
    if ys.len() < MIN_TRAINING_ROWS {
        return Err(Error::InsufficientData(format!(
            "{} training rows for imputation model {key:?}; at least {MIN_TRAINING_ROWS} required",
            ys.len()
        )));
    }
    let design = DesignMatrix::with_intercept(&xs)?;
    let fit = match target_kind {
        TraitKind::Normal | TraitKind::ChiSquareShift => fit_ols(&design, &ys)?,
        TraitKind::PoissonShift => fit_poisson(&design, &ys)?,
        TraitKind::BinaryThreshold => fit_logistic(&design, &ys)?,
    };
    Ok(ImputationModel {
        key: key.clone(),
        target_kind,
        predictor_kinds,
        coefficients: fit.coefficients,
        training_rows: ys.len(),
    })
}

/// Predictors for missing cell (`own`, `target`) of `family`.
fn predictors_for(
    family: &FamilyRecord,
    own: usize,
    target: usize,
    mtype: MissingType,
    strategy: Strategy,
) -> Option<Vec<Source>> {
    let k = family.sibs[own].values.len();
    if family.sibs.len() == 1 {
        // Lone offspring: only its own observed traits can help.
        let own_traits: Vec<Source> = (0..k)
            .filter(|&t| t != target && family.sibs[own].values[t].is_some())
            .map(Source::Own)
            .collect();
        return (!own_traits.is_empty()).then_some(own_traits);
    }
    let other = 1 - target.min(1);
    Some(match mtype {
        MissingType::T1 | MissingType::T2_3 => vec![Source::Sib(target)],
        MissingType::T2_1 => match strategy {
            Strategy::UseOther => vec![Source::Own(other)],
            Strategy::UseSame => vec![Source::Sib(target)],
            Strategy::UseBoth => vec![Source::Own(other), Source::Sib(target)],
        },
        MissingType::T2_4 => {
            let observed = (0..2)
                .flat_map(|s| (0..k).map(move |t| (s, t)))
                .find(|&(s, t)| family.sibs[s].values[t].is_some())?;
            if observed.0 == own {
                vec![Source::Own(observed.1)]
            } else {
                vec![Source::Sib(observed.1)]
            }
        }
    })
}

/// Imputes every missing cell of `masked`; see [`impute_detailed`].
pub fn impute(masked: &PhenotypePanel, mtype: MissingType, policy: StrategyPolicy) -> Result<PhenotypePanel> {
    impute_detailed(masked, mtype, policy).map(|o| o.panel)
}

/// Imputes every missing cell of a panel masked with pattern `mtype`.
/// Observed cells are never modified. Lone offspring with nothing observed
/// to predict from are dropped.
pub fn impute_detailed(
    masked: &PhenotypePanel,
    mtype: MissingType,
    policy: StrategyPolicy,
) -> Result<ImputationOutcome> {
    if masked.k() != mtype.required_k() {
        return Err(Error::Configuration(format!(
            "missing type {} needs {} trait(s), panel has {}",
            mtype.name(),
            mtype.required_k(),
            masked.k()
        )));
    }
    if masked.is_complete() {
        return Ok(ImputationOutcome {
            panel: masked.clone(),
            strategy: None,
            correlations: None,
            models: Vec::new(),
            dropped_offspring: 0,
        });
    }

    let (strategy, correlations) = match (mtype, policy) {
        (MissingType::T2_1, StrategyPolicy::Auto) => {
            let corr = estimate_correlations(masked)?;
            let s = select_strategy((masked.kinds[0], masked.kinds[1]), &corr)?;
            (Some(s), Some(corr))
        }
        (MissingType::T2_1, StrategyPolicy::Fixed(s)) => (Some(s), None),
        _ => (None, None),
    };
    let effective = strategy.unwrap_or(Strategy::UseSame);

    let mut models: BTreeMap<ModelKey, ImputationModel> = BTreeMap::new();
    let mut families = Vec::with_capacity(masked.families.len());
    let mut dropped_offspring = 0;
    for family in &masked.families {
        let mut out = family.clone();
        let mut keep = vec![true; family.sibs.len()];
        for own in 0..family.sibs.len() {
            for target in 0..masked.k() {
                if family.sibs[own].values[target].is_some() {
                    continue;
                }
                let Some(preds) = predictors_for(family, own, target, mtype, effective) else {
                    keep[own] = false;
                    continue;
                };
                let key = ModelKey {
                    target,
                    predictors: preds,
                };
                if !models.contains_key(&key) {
                    let model = fit_model(masked, &key)?;
                    models.insert(key.clone(), model);
                }
                let model = &models[&key];
                let values = key
                    .predictors
                    .iter()
                    .map(|&s| {
                        lookup(family, own, s).ok_or_else(|| {
                            Error::Configuration(format!(
                                "predictor {s:?} for a missing cell is itself missing; \
                                 panel does not follow pattern {}",
                                mtype.name()
                            ))
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                out.sibs[own].values[target] = Some(model.predict(&values)?);
            }
        }
        if keep.iter().any(|k| !k) {
            dropped_offspring += keep.iter().filter(|k| !**k).count();
            out.sibs = out
                .sibs
                .into_iter()
                .zip(&keep)
                .filter_map(|(s, k)| k.then_some(s))
                .collect();
        }
        if !out.sibs.is_empty() {
            families.push(out);
        }
    }
    Ok(ImputationOutcome {
        panel: PhenotypePanel {
            kinds: masked.kinds.clone(),
            families,
        },
        strategy,
        correlations,
        models: models.into_values().collect(),
        dropped_offspring,
    })
}
