//! Trait models conditional on the QTL allele count, and calibration of
//! residual parameters to a target heritability proportion p*.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::special::{gamma_quantile, normal_cdf, normal_sf, poisson_quantile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TraitKind {
    Normal,
    ChiSquareShift,
    PoissonShift,
    BinaryThreshold,
}

impl TraitKind {
    pub fn name(&self) -> &'static str {
        match self {
            TraitKind::Normal => "normal",
            TraitKind::ChiSquareShift => "chisq",
            TraitKind::PoissonShift => "poisson",
            TraitKind::BinaryThreshold => "binary",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(TraitKind::Normal),
            "chisq" | "chi-square" | "chisquare" | "chi_square" => Ok(TraitKind::ChiSquareShift),
            "poisson" => Ok(TraitKind::PoissonShift),
            "binary" => Ok(TraitKind::BinaryThreshold),
            other => Err(Error::Configuration(format!("unknown trait kind '{other}'"))),
        }
    }
}

/// Residual law added to α + βx.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraitModel {
    Normal { variance: f64 },
    /// χ² with (possibly fractional) degrees of freedom.
    ChiSquareShift { df: f64 },
    PoissonShift { lambda: f64 },
    /// Y = 1 when the latent α + βx + σε exceeds `threshold`.
    BinaryThreshold { sigma: f64, threshold: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraitSpec {
    pub alpha: f64,
    /// Additive effect per copy of D2.
    pub beta: f64,
    pub model: TraitModel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeritabilityTarget(f64);

impl HeritabilityTarget {
    pub fn new(p_star: f64) -> Result<Self> {
        if p_star > 0.0 && p_star < 1.0 {
            Ok(HeritabilityTarget(p_star))
        } else {
            Err(Error::ParameterDomain(format!("p* = {p_star} not in (0,1)")))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl TraitSpec {
    pub fn new(alpha: f64, beta: f64, model: TraitModel) -> Result<Self> {
        let spec = TraitSpec { alpha, beta, model };
        spec.validate()?;
        Ok(spec)
    }

    /// Continuous or count trait whose residual parameter is solved from `target`.
    pub fn calibrated(
        kind: TraitKind,
        alpha: f64,
        beta: f64,
        d: f64,
        target: HeritabilityTarget,
    ) -> Result<Self> {
        let residual = solve_residual_param(kind, d, beta, target)?;
        let model = match kind {
            TraitKind::Normal => TraitModel::Normal { variance: residual },
            TraitKind::ChiSquareShift => TraitModel::ChiSquareShift { df: residual },
            TraitKind::PoissonShift => TraitModel::PoissonShift { lambda: residual },
            TraitKind::BinaryThreshold => unreachable!("rejected by solve_residual_param"),
        };
        TraitSpec::new(alpha, beta, model)
    }

    pub fn kind(&self) -> TraitKind {
        match self.model {
            TraitModel::Normal { .. } => TraitKind::Normal,
            TraitModel::ChiSquareShift { .. } => TraitKind::ChiSquareShift,
            TraitModel::PoissonShift { .. } => TraitKind::PoissonShift,
            TraitModel::BinaryThreshold { .. } => TraitKind::BinaryThreshold,
        }
    }

    /// The kind-specific residual parameter (σ², df, λ, or latent σ).
    pub fn residual(&self) -> f64 {
        match self.model {
            TraitModel::Normal { variance } => variance,
            TraitModel::ChiSquareShift { df } => df,
            TraitModel::PoissonShift { lambda } => lambda,
            TraitModel::BinaryThreshold { sigma, .. } => sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (name, value) = match self.model {
            TraitModel::Normal { variance } => ("variance", variance),
            TraitModel::ChiSquareShift { df } => ("df", df),
            TraitModel::PoissonShift { lambda } => ("lambda", lambda),
            TraitModel::BinaryThreshold { sigma, .. } => ("sigma", sigma),
        };
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::ParameterDomain(format!("{name} = {value} must be positive")));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::ParameterDomain("alpha and beta must be finite".into()));
        }
        Ok(())
    }

    fn location(&self, x: u8) -> f64 {
        self.alpha + self.beta * f64::from(x)
    }

    /// E(Y | x) and V(Y | x).
    pub fn conditional_moments(&self, x: u8) -> (f64, f64) {
        let loc = self.location(x);
        match self.model {
            TraitModel::Normal { variance } => (loc, variance),
            TraitModel::ChiSquareShift { df } => (loc + df, 2.0 * df),
            TraitModel::PoissonShift { lambda } => (loc + lambda, lambda),
            TraitModel::BinaryThreshold { sigma, threshold } => {
                let p = normal_sf((threshold - loc) / sigma);
                (p, p * (1.0 - p))
            }
        }
    }
}

/// Variance of α + βx with x ~ Binomial(2, d): 2d(1−d)β².
pub fn genetic_variance(d: f64, beta: f64) -> f64 {
    2.0 * d * (1.0 - d) * beta * beta
}

/// Residual variance r = V_g (1−p*)/p*, returned as σ² (normal), df = r/2
/// (χ²) or λ = r (Poisson).
pub fn solve_residual_param(kind: TraitKind, d: f64, beta: f64, target: HeritabilityTarget) -> Result<f64> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::ParameterDomain(format!("d = {d} not in (0,1)")));
    }
    let p = target.value();
    let residual_variance = genetic_variance(d, beta) * (1.0 - p) / p;
    if !(residual_variance > 0.0 && residual_variance.is_finite()) {
        return Err(Error::Calibration(format!(
            "residual variance {residual_variance} is not positive (d = {d}, beta = {beta}, p* = {p})"
        )));
    }
    match kind {
        TraitKind::Normal | TraitKind::PoissonShift => Ok(residual_variance),
        TraitKind::ChiSquareShift => Ok(residual_variance / 2.0),
        TraitKind::BinaryThreshold => Err(Error::Calibration(
            "binary traits have no closed-form residual calibration".into(),
        )),
    }
}

/// P(Y = 1 | x) = 1 − Φ((c − α − βx)/σ).
pub fn binary_penetrance(spec: &TraitSpec, x: u8) -> Result<f64> {
    match spec.model {
        TraitModel::BinaryThreshold { sigma, threshold } => {
            if !(sigma > 0.0) {
                return Err(Error::ParameterDomain(format!("sigma = {sigma} must be positive")));
            }
            Ok(normal_sf((threshold - spec.location(x)) / sigma))
        }
        _ => Err(Error::Configuration(format!(
            "penetrance requested for a {} trait",
            spec.kind().name()
        ))),
    }
}

/// Binomial(2, d) genotype weights for x = 0, 1, 2.
pub fn genotype_weights(d: f64) -> [f64; 3] {
    [(1.0 - d) * (1.0 - d), 2.0 * d * (1.0 - d), d * d]
}

/// Population mean of Y (the prevalence for binary traits).
pub fn population_mean(spec: &TraitSpec, d: f64) -> f64 {
    genotype_weights(d)
        .iter()
        .enumerate()
        .map(|(x, w)| w * spec.conditional_moments(x as u8).0)
        .sum()
}

/// Exact p* = V(E(Y|x)) / [V(E(Y|x)) + E(V(Y|x))] by enumerating x.
pub fn p_star_oracle(spec: &TraitSpec, d: f64) -> f64 {
    let weights = genotype_weights(d);
    let moments: Vec<(f64, f64)> = (0..3u8).map(|x| spec.conditional_moments(x)).collect();
    let mean: f64 = weights.iter().zip(&moments).map(|(w, (m, _))| w * m).sum();
    let between: f64 = weights
        .iter()
        .zip(&moments)
        .map(|(w, (m, _))| w * (m - mean).powi(2))
        .sum();
    let within: f64 = weights.iter().zip(&moments).map(|(w, (_, v))| w * v).sum();
    if between == 0.0 {
        return 0.0;
    }
    between / (between + within)
}

/// Draws one trait value for an offspring carrying `x` copies of D2.
pub fn generate_trait<R: Rng + ?Sized>(spec: &TraitSpec, x: u8, rng: &mut R) -> f64 {
    let loc = spec.location(x);
    match spec.model {
        TraitModel::Normal { variance } => {
            let e: f64 = StandardNormal.sample(rng);
            loc + variance.sqrt() * e
        }
        TraitModel::ChiSquareShift { df } => {
            let chi = Gamma::new(df / 2.0, 2.0).expect("validated df");
            loc + chi.sample(rng)
        }
        TraitModel::PoissonShift { lambda } => {
            let pois = Poisson::new(lambda).expect("validated lambda");
            loc + pois.sample(rng)
        }
        TraitModel::BinaryThreshold { sigma, threshold } => {
            let e: f64 = StandardNormal.sample(rng);
            if loc + sigma * e > threshold {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Maps a standard-normal latent score to a trait value through the
/// residual's quantile function (Gaussian copula).
pub fn trait_from_latent(spec: &TraitSpec, x: u8, latent: f64) -> f64 {
    let loc = spec.location(x);
    match spec.model {
        TraitModel::Normal { variance } => loc + variance.sqrt() * latent,
        TraitModel::ChiSquareShift { df } => {
            // Work in the tail with the smaller probability to keep precision.
            let u = normal_cdf(latent);
            loc + 2.0 * gamma_quantile(df / 2.0, u)
        }
        TraitModel::PoissonShift { lambda } => loc + poisson_quantile(lambda, normal_cdf(latent)) as f64,
        TraitModel::BinaryThreshold { sigma, threshold } => {
            if loc + sigma * latent > threshold {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Latent residual correlations for a sib pair: `within` between two
/// traits of one offspring, `between_sibs` between the same trait of the two
/// sibs. Cross-sib cross-trait pairs get the product of the two, which makes
/// the matrix a Kronecker product and hence positive definite whenever both
/// correlations lie strictly inside (−1, 1).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ResidualCorrelation {
    pub within: f64,
    pub between_sibs: f64,
}

impl ResidualCorrelation {
    pub fn is_zero(&self) -> bool {
        self.within == 0.0 && self.between_sibs == 0.0
    }

    /// Lower Cholesky factor of the 2k×2k latent correlation matrix, laid
    /// out sib-major (sib 0 traits, then sib 1 traits).
    pub fn cholesky(&self, k: usize) -> Result<Vec<Vec<f64>>> {
        let dim = 2 * k;
        let corr = |a: usize, b: usize| -> f64 {
            if a == b {
                return 1.0;
            }
            let (sa, ta) = (a / k, a % k);
            let (sb, tb) = (b / k, b % k);
            match (sa == sb, ta == tb) {
                (true, false) => self.within,
                (false, true) => self.between_sibs,
                (false, false) => self.within * self.between_sibs,
                (true, true) => 1.0,
            }
        };
        let mut l = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in 0..=i {
                let s: f64 = (0..j).map(|p| l[i][p] * l[j][p]).sum();
                if i == j {
                    let diag = corr(i, i) - s;
                    if diag <= 1e-12 {
                        return Err(Error::ParameterDomain(format!(
                            "residual correlations (within = {}, between_sibs = {}) are not positive definite",
                            self.within, self.between_sibs
                        )));
                    }
                    l[i][j] = diag.sqrt();
                } else {
                    l[i][j] = (corr(i, j) - s) / l[j][j];
                }
            }
        }
        Ok(l)
    }
}

/// Generates the trait vectors of both sibs of one family. Without residual
/// correlation every cell is an independent draw; otherwise the residuals
/// are coupled through a Gaussian copula with factor `chol` (from
/// [`ResidualCorrelation::cholesky`]).
pub fn generate_family_traits<R: Rng + ?Sized>(
    specs: &[TraitSpec],
    qtl_counts: [u8; 2],
    chol: Option<&[Vec<f64>]>,
    rng: &mut R,
) -> [Vec<f64>; 2] {
    let k = specs.len();
    match chol {
        None => qtl_counts.map(|x| specs.iter().map(|s| generate_trait(s, x, rng)).collect()),
        Some(l) => {
            let raw: Vec<f64> = (0..2 * k).map(|_| StandardNormal.sample(rng)).collect();
            let latent: Vec<f64> = l
                .iter()
                .map(|row| row.iter().zip(&raw).map(|(a, b)| a * b).sum())
                .collect();
            let mut out = [Vec::with_capacity(k), Vec::with_capacity(k)];
            for (sib, x) in qtl_counts.iter().enumerate() {
                for (t, spec) in specs.iter().enumerate() {
                    out[sib].push(trait_from_latent(spec, *x, latent[sib * k + t]));
                }
            }
            out
        }
    }
}
