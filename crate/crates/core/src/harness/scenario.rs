//! Scenario files.
//!
//! A scenario is a flat text file of `key = value` lines. Blank lines and
//! anything after `#` are ignored; list values are comma separated, and `-`
//! marks an unused entry in per-trait lists.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `name` | label copied into outputs | `scenario` |
//! | `n_families` | sib-pair families per replicate | 500 |
//! | `d` | frequency of QTL allele D2 | required |
//! | `m` | frequency of marker allele M2 | required |
//! | `theta` | recombination fraction | 0.01 |
//! | `delta_star` | normalized LD grid | 0, 0.33, 0.67, 1 |
//! | `traits` | trait kinds: `normal`, `chisq`, `poisson`, `binary` | required |
//! | `trait_alpha` | per-trait location α | 0 |
//! | `trait_beta` | per-trait allele effect β | required |
//! | `trait_p_star` | per-trait target p* (non-binary) | |
//! | `trait_residual` | per-trait σ², df, λ or latent σ; overrides `trait_p_star` | |
//! | `trait_threshold` | per-trait liability threshold c (binary) | |
//! | `rho_within` | latent residual correlation of two traits of one offspring | 0 |
//! | `rho_between` | latent residual correlation of one trait across sibs | 0 |
//! | `missing_type` | `T1`, `T2_1`, `T2_3` or `T2_4` | required |
//! | `miss_p` | proportion of families with missing cells | 0.2 |
//! | `strategy` | `auto`, `use_same`, `use_other`, `use_both` | `auto` |
//! | `replications` | Monte Carlo replicates per grid point | 1000 |
//! | `level` | test size | 0.05 |
//! | `seed` | master seed | 1 |
//! | `centering` | `mean` or `median` | `mean` |

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::genetics::LocusParams;
use crate::imputation::StrategyPolicy;
use crate::missingness::MissingType;
use crate::tdt::Centering;
use crate::traits::{HeritabilityTarget, ResidualCorrelation, TraitKind, TraitModel, TraitSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResidualChoice {
    /// Solve the residual parameter from a target p*.
    PStar(f64),
    /// Use the given σ², df, λ (or latent σ for binary traits).
    Explicit(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraitConfig {
    pub kind: TraitKind,
    pub alpha: f64,
    pub beta: f64,
    pub residual: ResidualChoice,
    pub threshold: Option<f64>,
}

impl TraitConfig {
    pub fn resolve(&self, d: f64) -> Result<TraitSpec> {
        match (self.kind, self.residual) {
            (TraitKind::BinaryThreshold, ResidualChoice::Explicit(sigma)) => {
                let threshold = self.threshold.ok_or_else(|| {
                    Error::Configuration("binary traits need trait_threshold".into())
                })?;
                TraitSpec::new(self.alpha, self.beta, TraitModel::BinaryThreshold { sigma, threshold })
            }
            (TraitKind::BinaryThreshold, ResidualChoice::PStar(_)) => Err(Error::Configuration(
                "binary traits need an explicit latent sigma in trait_residual".into(),
            )),
            (kind, ResidualChoice::PStar(p)) => {
                TraitSpec::calibrated(kind, self.alpha, self.beta, d, HeritabilityTarget::new(p)?)
            }
            (kind, ResidualChoice::Explicit(r)) => {
                let model = match kind {
                    TraitKind::Normal => TraitModel::Normal { variance: r },
                    TraitKind::ChiSquareShift => TraitModel::ChiSquareShift { df: r },
                    TraitKind::PoissonShift => TraitModel::PoissonShift { lambda: r },
                    TraitKind::BinaryThreshold => unreachable!(),
                };
                TraitSpec::new(self.alpha, self.beta, model)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub n_families: usize,
    pub d: f64,
    pub m: f64,
    pub theta: f64,
    pub delta_stars: Vec<f64>,
    pub traits: Vec<TraitConfig>,
    pub correlation: ResidualCorrelation,
    pub mtype: MissingType,
    pub miss_p: f64,
    pub strategy: StrategyPolicy,
    pub replications: usize,
    /// Test size.
    pub alpha: f64,
    pub master_seed: u64,
    pub centering: Centering,
}

pub const DEFAULT_DELTA_STARS: [f64; 4] = [0.0, 0.33, 0.67, 1.0];

impl Scenario {
    /// Scenario with the usual simulation settings (θ = .01, 500 families,
    /// 1000 replicates, size .05) and the given genetics, traits and missingness.
    pub fn new(d: f64, m: f64, traits: Vec<TraitConfig>, mtype: MissingType, miss_p: f64) -> Self {
        Scenario {
            name: "scenario".into(),
            n_families: 500,
            d,
            m,
            theta: 0.01,
            delta_stars: DEFAULT_DELTA_STARS.to_vec(),
            traits,
            correlation: ResidualCorrelation::default(),
            mtype,
            miss_p,
            strategy: StrategyPolicy::Auto,
            replications: 1000,
            alpha: 0.05,
            master_seed: 1,
            centering: Centering::Mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Configuration("replications must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Configuration(format!("level = {} not in (0,1)", self.alpha)));
        }
        if self.n_families == 0 {
            return Err(Error::Configuration("n_families must be at least 1".into()));
        }
        if self.delta_stars.is_empty() {
            return Err(Error::Configuration("delta_star grid is empty".into()));
        }
        for &ds in &self.delta_stars {
            LocusParams::new(self.d, self.m, ds, self.theta)?;
        }
        if self.traits.len() != self.mtype.required_k() {
            return Err(Error::Configuration(format!(
                "missing type {} needs {} trait(s), scenario defines {}",
                self.mtype.name(),
                self.mtype.required_k(),
                self.traits.len()
            )));
        }
        if !(0.0..1.0).contains(&self.miss_p) {
            return Err(Error::Configuration(format!("miss_p = {} not in [0,1)", self.miss_p)));
        }
        self.trait_specs()?;
        if !self.correlation.is_zero() {
            self.correlation.cholesky(self.traits.len())?;
        }
        Ok(())
    }

    pub fn locus(&self, delta_star: f64) -> Result<LocusParams> {
        LocusParams::new(self.d, self.m, delta_star, self.theta)
    }

    pub fn trait_specs(&self) -> Result<Vec<TraitSpec>> {
        self.traits.iter().map(|t| t.resolve(self.d)).collect()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ScenarioParse {
                line: i + 1,
                message: format!("expected key = value, found '{line}'"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            if entries.iter().any(|(_, k, _)| *k == key) {
                return Err(Error::ScenarioParse {
                    line: i + 1,
                    message: format!("duplicate key '{key}'"),
                });
            }
            entries.push((i + 1, key, value.trim().to_string()));
        }

        let find = |key: &str| entries.iter().find(|(_, k, _)| k == key);
        let perr = |line: usize, message: String| Error::ScenarioParse { line, message };

        const KNOWN: [&str; 21] = [
            "name",
            "n_families",
            "d",
            "m",
            "theta",
            "delta_star",
            "traits",
            "trait_alpha",
            "trait_beta",
            "trait_p_star",
            "trait_residual",
            "trait_threshold",
            "rho_within",
            "rho_between",
            "missing_type",
            "miss_p",
            "strategy",
            "replications",
            "level",
            "seed",
            "centering",
        ];
        if let Some((line, key, _)) = entries.iter().find(|(_, k, _)| !KNOWN.contains(&k.as_str())) {
            return Err(perr(*line, format!("unknown key '{key}'")));
        }

        let number = |key: &str| -> Result<Option<f64>> {
            match find(key) {
                None => Ok(None),
                Some((line, _, v)) => v
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| perr(*line, format!("'{key}' expects a number, found '{v}'"))),
            }
        };
        let integer = |key: &str| -> Result<Option<u64>> {
            match find(key) {
                None => Ok(None),
                Some((line, _, v)) => v
                    .parse::<u64>()
                    .map(Some)
                    .map_err(|_| perr(*line, format!("'{key}' expects a nonnegative integer, found '{v}'"))),
            }
        };
        let list = |key: &str| -> Result<Option<Vec<Option<f64>>>> {
            match find(key) {
                None => Ok(None),
                Some((line, _, v)) => v
                    .split(',')
                    .map(|item| {
                        let item = item.trim();
                        if item == "-" {
                            Ok(None)
                        } else {
                            item.parse::<f64>().map(Some).map_err(|_| {
                                perr(*line, format!("'{key}' expects numbers, found '{item}'"))
                            })
                        }
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Some),
            }
        };
        let required = |key: &str| -> Result<f64> {
            number(key)?.ok_or_else(|| Error::Configuration(format!("missing required key '{key}'")))
        };
        let line_of = |key: &str| find(key).map(|(l, _, _)| *l).unwrap_or(0);
        let wrap = |key: &str, e: Error| perr(line_of(key), e.to_string());

        let (d, m) = (required("d")?, required("m")?);
        let (_, _, traits_raw) =
            find("traits").ok_or_else(|| Error::Configuration("missing required key 'traits'".into()))?;
        let kinds = traits_raw
            .split(',')
            .map(TraitKind::parse)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| wrap("traits", e))?;
        let k = kinds.len();

        let per_trait = |key: &str| -> Result<Vec<Option<f64>>> {
            match list(key)? {
                None => Ok(vec![None; k]),
                Some(v) if v.len() == k => Ok(v),
                Some(v) => Err(perr(
                    line_of(key),
                    format!("'{key}' has {} entries for {k} trait(s)", v.len()),
                )),
            }
        };
        let alphas = per_trait("trait_alpha")?;
        let betas = per_trait("trait_beta")?;
        let p_stars = per_trait("trait_p_star")?;
        let residuals = per_trait("trait_residual")?;
        let thresholds = per_trait("trait_threshold")?;

        let mut traits = Vec::with_capacity(k);
        for (i, kind) in kinds.into_iter().enumerate() {
            let beta = betas[i].ok_or_else(|| perr(line_of("trait_beta"), format!("trait {} needs trait_beta", i + 1)))?;
            let residual = match (residuals[i], p_stars[i]) {
                (Some(r), _) => ResidualChoice::Explicit(r),
                (None, Some(p)) => ResidualChoice::PStar(p),
                (None, None) => {
                    return Err(perr(
                        line_of("traits"),
                        format!("trait {} needs trait_p_star or trait_residual", i + 1),
                    ))
                }
            };
            traits.push(TraitConfig {
                kind,
                alpha: alphas[i].unwrap_or(0.0),
                beta,
                residual,
                threshold: thresholds[i],
            });
        }

        let mtype_raw = find("missing_type")
            .map(|(_, _, v)| v.clone())
            .ok_or_else(|| Error::Configuration("missing required key 'missing_type'".into()))?;
        let mtype = MissingType::parse(&mtype_raw).map_err(|e| wrap("missing_type", e))?;

        let delta_stars = match list("delta_star")? {
            None => DEFAULT_DELTA_STARS.to_vec(),
            Some(v) => v
                .into_iter()
                .map(|x| x.ok_or_else(|| perr(line_of("delta_star"), "'-' not allowed in delta_star".into())))
                .collect::<Result<Vec<_>>>()?,
        };

        let mut scenario = Scenario::new(d, m, traits, mtype, 0.2);
        if let Some((_, _, v)) = find("name") {
            scenario.name = v.clone();
        }
        if let Some(n) = integer("n_families")? {
            scenario.n_families = n as usize;
        }
        if let Some(t) = number("theta")? {
            scenario.theta = t;
        }
        scenario.delta_stars = delta_stars;
        scenario.correlation = ResidualCorrelation {
            within: number("rho_within")?.unwrap_or(0.0),
            between_sibs: number("rho_between")?.unwrap_or(0.0),
        };
        if let Some(p) = number("miss_p")? {
            scenario.miss_p = p;
        }
        if let Some((_, _, v)) = find("strategy") {
            scenario.strategy = StrategyPolicy::parse(v).map_err(|e| wrap("strategy", e))?;
        }
        if let Some(r) = integer("replications")? {
            scenario.replications = r as usize;
        }
        if let Some(a) = number("level")? {
            scenario.alpha = a;
        }
        if let Some(s) = integer("seed")? {
            scenario.master_seed = s;
        }
        if let Some((_, _, v)) = find("centering") {
            scenario.centering = Centering::parse(v).map_err(|e| wrap("centering", e))?;
        }
        scenario.validate()?;
        Ok(scenario)
    }

    /// Serializes the scenario back to the file format, one key per line.
    pub fn to_text(&self) -> String {
        let join = |v: &[Option<f64>]| {
            v.iter()
                .map(|x| x.map(|x| x.to_string()).unwrap_or_else(|| "-".into()))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut out = String::new();
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "n_families = {}", self.n_families);
        let _ = writeln!(out, "d = {}", self.d);
        let _ = writeln!(out, "m = {}", self.m);
        let _ = writeln!(out, "theta = {}", self.theta);
        let _ = writeln!(
            out,
            "delta_star = {}",
            join(&self.delta_stars.iter().map(|x| Some(*x)).collect::<Vec<_>>())
        );
        let _ = writeln!(
            out,
            "traits = {}",
            self.traits.iter().map(|t| t.kind.name()).collect::<Vec<_>>().join(", ")
        );
        let _ = writeln!(
            out,
            "trait_alpha = {}",
            join(&self.traits.iter().map(|t| Some(t.alpha)).collect::<Vec<_>>())
        );
        let _ = writeln!(
            out,
            "trait_beta = {}",
            join(&self.traits.iter().map(|t| Some(t.beta)).collect::<Vec<_>>())
        );
        let p_stars: Vec<Option<f64>> = self
            .traits
            .iter()
            .map(|t| match t.residual {
                ResidualChoice::PStar(p) => Some(p),
                _ => None,
            })
            .collect();
        let residuals: Vec<Option<f64>> = self
            .traits
            .iter()
            .map(|t| match t.residual {
                ResidualChoice::Explicit(r) => Some(r),
                _ => None,
            })
            .collect();
        if p_stars.iter().any(Option::is_some) {
            let _ = writeln!(out, "trait_p_star = {}", join(&p_stars));
        }
        if residuals.iter().any(Option::is_some) {
            let _ = writeln!(out, "trait_residual = {}", join(&residuals));
        }
        let thresholds: Vec<Option<f64>> = self.traits.iter().map(|t| t.threshold).collect();
        if thresholds.iter().any(Option::is_some) {
            let _ = writeln!(out, "trait_threshold = {}", join(&thresholds));
        }
        let _ = writeln!(out, "rho_within = {}", self.correlation.within);
        let _ = writeln!(out, "rho_between = {}", self.correlation.between_sibs);
        let _ = writeln!(out, "missing_type = {}", self.mtype.name());
        let _ = writeln!(out, "miss_p = {}", self.miss_p);
        let _ = writeln!(out, "strategy = {}", self.strategy.name());
        let _ = writeln!(out, "replications = {}", self.replications);
        let _ = writeln!(out, "level = {}", self.alpha);
        let _ = writeln!(out, "seed = {}", self.master_seed);
        let _ = writeln!(out, "centering = {}", self.centering.name());
        out
    }
}
