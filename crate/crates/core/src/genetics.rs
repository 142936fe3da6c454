//! Two-locus primitives: allele frequencies, linkage disequilibrium and the
//! haplotype distribution over a biallelic QTL (D1/D2) and a biallelic
//! marker (M1/M2).

use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance for probability feasibility checks.
pub const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MarkerAllele {
    M1,
    M2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QtlAllele {
    D1,
    D2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Haplotype {
    pub marker: MarkerAllele,
    pub qtl: QtlAllele,
}

impl Haplotype {
    pub const M2D2: Haplotype = Haplotype::new(MarkerAllele::M2, QtlAllele::D2);
    pub const M1D2: Haplotype = Haplotype::new(MarkerAllele::M1, QtlAllele::D2);
    pub const M2D1: Haplotype = Haplotype::new(MarkerAllele::M2, QtlAllele::D1);
    pub const M1D1: Haplotype = Haplotype::new(MarkerAllele::M1, QtlAllele::D1);

    /// Table order used throughout: M2D2, M1D2, M2D1, M1D1.
    pub const ALL: [Haplotype; 4] = [Self::M2D2, Self::M1D2, Self::M2D1, Self::M1D1];

    pub const fn new(marker: MarkerAllele, qtl: QtlAllele) -> Self {
        Haplotype { marker, qtl }
    }

    pub fn carries_d2(&self) -> bool {
        self.qtl == QtlAllele::D2
    }

    /// Position in [`Haplotype::ALL`].
    pub fn index(&self) -> usize {
        match (self.marker, self.qtl) {
            (MarkerAllele::M2, QtlAllele::D2) => 0,
            (MarkerAllele::M1, QtlAllele::D2) => 1,
            (MarkerAllele::M2, QtlAllele::D1) => 2,
            (MarkerAllele::M1, QtlAllele::D1) => 3,
        }
    }
}

/// Allele frequencies, normalized LD and recombination fraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocusParams {
    /// Frequency of QTL allele D2.
    pub d: f64,
    /// Frequency of marker allele M2.
    pub m: f64,
    /// LD as a fraction of its upper feasibility bound.
    pub delta_star: f64,
    /// Recombination fraction between marker and QTL.
    pub theta: f64,
}

impl LocusParams {
    pub fn new(d: f64, m: f64, delta_star: f64, theta: f64) -> Result<Self> {
        let params = LocusParams {
            d,
            m,
            delta_star,
            theta,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d < 1.0) {
            return Err(Error::ParameterDomain(format!("d = {} not in (0,1)", self.d)));
        }
        if !(self.m > 0.0 && self.m < 1.0) {
            return Err(Error::ParameterDomain(format!("m = {} not in (0,1)", self.m)));
        }
        if !(0.0..=1.0).contains(&self.delta_star) {
            return Err(Error::ParameterDomain(format!(
                "delta_star = {} not in [0,1]",
                self.delta_star
            )));
        }
        if !(0.0..=0.5).contains(&self.theta) {
            return Err(Error::ParameterDomain(format!(
                "theta = {} not in [0,0.5]",
                self.theta
            )));
        }
        Ok(())
    }

    pub fn with_delta_star(&self, delta_star: f64) -> Result<Self> {
        LocusParams::new(self.d, self.m, delta_star, self.theta)
    }

    pub fn delta(&self) -> f64 {
        compute_delta(self)
    }

    pub fn haplotype_distribution(&self) -> Result<HaplotypeDist> {
        haplotype_distribution(self.d, self.m, self.delta())
    }
}

/// δ = δ* · min{d(1−m), m(1−d)}.
pub fn compute_delta(params: &LocusParams) -> f64 {
    let (d, m) = (params.d, params.m);
    params.delta_star * (d * (1.0 - m)).min(m * (1.0 - d))
}

/// Probabilities of the four haplotypes, in [`Haplotype::ALL`] order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HaplotypeDist {
    pub p_m2d2: f64,
    pub p_m1d2: f64,
    pub p_m2d1: f64,
    pub p_m1d1: f64,
}

/// Builds the two-locus haplotype table
/// `md+δ | (1−m)d−δ | m(1−d)−δ | (1−m)(1−d)+δ`.
pub fn haplotype_distribution(d: f64, m: f64, delta: f64) -> Result<HaplotypeDist> {
    if !(d > 0.0 && d < 1.0 && m > 0.0 && m < 1.0) {
        return Err(Error::ParameterDomain(format!(
            "allele frequencies d = {d}, m = {m} must lie in (0,1)"
        )));
    }
    let upper = (d * (1.0 - m)).min(m * (1.0 - d));
    let lower = -(d * m).min((1.0 - d) * (1.0 - m));
    if delta > upper + FEASIBILITY_TOL {
        return Err(Error::ParameterDomain(format!(
            "delta = {delta} exceeds upper bound min(d(1-m), m(1-d)) = {upper}"
        )));
    }
    if delta < lower - FEASIBILITY_TOL {
        return Err(Error::ParameterDomain(format!(
            "delta = {delta} below lower bound -min(dm, (1-d)(1-m)) = {lower}"
        )));
    }
    // Clamp the round-off permitted by the tolerance.
    let clamp = |p: f64| p.clamp(0.0, 1.0);
    Ok(HaplotypeDist {
        p_m2d2: clamp(m * d + delta),
        p_m1d2: clamp((1.0 - m) * d - delta),
        p_m2d1: clamp(m * (1.0 - d) - delta),
        p_m1d1: clamp((1.0 - m) * (1.0 - d) + delta),
    })
}

impl HaplotypeDist {
    pub fn probabilities(&self) -> [f64; 4] {
        [self.p_m2d2, self.p_m1d2, self.p_m2d1, self.p_m1d1]
    }

    pub fn prob(&self, haplotype: Haplotype) -> f64 {
        self.probabilities()[haplotype.index()]
    }

    /// Marginal frequency of D2.
    pub fn d(&self) -> f64 {
        self.p_m2d2 + self.p_m1d2
    }

    /// Marginal frequency of M2.
    pub fn m(&self) -> f64 {
        self.p_m2d2 + self.p_m2d1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Haplotype {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (hap, p) in Haplotype::ALL.iter().zip(self.probabilities()) {
            acc += p;
            if u < acc {
                return *hap;
            }
        }
        // u landed in the round-off gap above the cumulative sum; take the
        // last haplotype with positive mass.
        Haplotype::ALL
            .iter()
            .zip(self.probabilities())
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map(|(h, _)| *h)
            .unwrap_or(Haplotype::M1D1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn delta_examples() {
        let p = LocusParams::new(0.1, 0.1, 1.0, 0.01).unwrap();
        assert!(close(compute_delta(&p), 0.09));
        let p = LocusParams::new(0.5, 0.5, 0.0, 0.01).unwrap();
        assert_eq!(compute_delta(&p), 0.0);
        let p = LocusParams::new(0.2, 0.5, 0.5, 0.01).unwrap();
        assert!(close(compute_delta(&p), 0.05));
    }

    #[test]
    fn distribution_examples() {
        let h = haplotype_distribution(0.1, 0.5, 0.0).unwrap();
        assert!(close(h.p_m2d2, 0.05) && close(h.p_m1d2, 0.05));
        assert!(close(h.p_m2d1, 0.45) && close(h.p_m1d1, 0.45));

        let h = haplotype_distribution(0.1, 0.1, 0.09).unwrap();
        assert!(close(h.p_m2d2, 0.10) && close(h.p_m1d2, 0.0));
        assert!(close(h.p_m2d1, 0.0) && close(h.p_m1d1, 0.90));

        let h = haplotype_distribution(0.2, 0.5, 0.05).unwrap();
        assert!(close(h.p_m2d2, 0.15) && close(h.p_m1d2, 0.05));
        assert!(close(h.p_m2d1, 0.35) && close(h.p_m1d1, 0.45));
    }

    #[test]
    fn infeasible_delta_names_bound() {
        let err = haplotype_distribution(0.1, 0.1, 0.2).unwrap_err();
        assert!(err.to_string().contains("upper bound"), "{err}");
        let err = haplotype_distribution(0.1, 0.1, -0.05).unwrap_err();
        assert!(err.to_string().contains("lower bound"), "{err}");
    }

    #[test]
    fn locus_params_reject_out_of_domain() {
        assert!(LocusParams::new(0.0, 0.5, 0.5, 0.01).is_err());
        assert!(LocusParams::new(0.5, 1.0, 0.5, 0.01).is_err());
        assert!(LocusParams::new(0.5, 0.5, 1.2, 0.01).is_err());
        assert!(LocusParams::new(0.5, 0.5, 0.5, 0.6).is_err());
    }

    #[test]
    fn degenerate_distribution_always_samples_mass_point() {
        let h = HaplotypeDist {
            p_m2d2: 1.0,
            p_m1d2: 0.0,
            p_m2d1: 0.0,
            p_m1d1: 0.0,
        };
        let mut rng = crate::rng::SeedStream::new(1).rng();
        assert!((0..1000).all(|_| h.sample(&mut rng) == Haplotype::M2D2));
    }

    proptest! {
        #[test]
        fn feasible_distributions_are_valid(
            d in 0.01f64..0.99, m in 0.01f64..0.99, frac in -1.0f64..=1.0
        ) {
            let upper = (d * (1.0 - m)).min(m * (1.0 - d));
            let lower = -(d * m).min((1.0 - d) * (1.0 - m));
            let delta = if frac >= 0.0 { frac * upper } else { -frac * lower };
            let h = haplotype_distribution(d, m, delta).unwrap();
            let probs = h.probabilities();
            prop_assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((h.d() - d).abs() < 1e-12);
            prop_assert!((h.m() - m).abs() < 1e-12);
        }

        #[test]
        fn delta_monotone_in_delta_star(
            d in 0.01f64..0.99, m in 0.01f64..0.99, a in 0.0f64..=1.0, b in 0.0f64..=1.0
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let p_lo = LocusParams::new(d, m, lo, 0.0).unwrap();
            let p_hi = LocusParams::new(d, m, hi, 0.0).unwrap();
            prop_assert!(compute_delta(&p_lo) <= compute_delta(&p_hi));
        }

        #[test]
        fn zero_delta_factorizes(d in 0.01f64..0.99, m in 0.01f64..0.99) {
            let h = haplotype_distribution(d, m, 0.0).unwrap();
            prop_assert!((h.p_m2d2 - m * d).abs() < 1e-15);
            prop_assert!((h.p_m1d2 - (1.0 - m) * d).abs() < 1e-15);
            prop_assert!((h.p_m2d1 - m * (1.0 - d)).abs() < 1e-15);
            prop_assert!((h.p_m1d1 - (1.0 - m) * (1.0 - d)).abs() < 1e-15);
        }

        #[test]
        fn nonzero_delta_does_not_factorize(
            d in 0.05f64..0.95, m in 0.05f64..0.95, frac in 0.01f64..=1.0
        ) {
            let upper = (d * (1.0 - m)).min(m * (1.0 - d));
            let h = haplotype_distribution(d, m, frac * upper).unwrap();
            prop_assert!((h.p_m2d2 - h.m() * h.d()).abs() > 1e-6);
        }
    }
}
