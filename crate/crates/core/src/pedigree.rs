//! Nuclear families with two offspring: parent genotypes drawn from the
//! haplotype distribution, informative-family filtering, gamete
//! transmission with recombination, and the transmission indicator Z.

use rand::Rng;

use crate::error::{Error, Result};
use crate::genetics::{Haplotype, HaplotypeDist, LocusParams, MarkerAllele, QtlAllele};
use crate::rng::SeedStream;

/// Unordered marker genotype.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MarkerGenotype {
    M1M1,
    M1M2,
    M2M2,
}

impl MarkerGenotype {
    pub fn from_alleles(a: MarkerAllele, b: MarkerAllele) -> Self {
        match (a, b) {
            (MarkerAllele::M1, MarkerAllele::M1) => MarkerGenotype::M1M1,
            (MarkerAllele::M2, MarkerAllele::M2) => MarkerGenotype::M2M2,
            _ => MarkerGenotype::M1M2,
        }
    }

    pub fn is_heterozygous(&self) -> bool {
        *self == MarkerGenotype::M1M2
    }

    fn can_transmit(&self, allele: MarkerAllele) -> bool {
        match self {
            MarkerGenotype::M1M1 => allele == MarkerAllele::M1,
            MarkerGenotype::M2M2 => allele == MarkerAllele::M2,
            MarkerGenotype::M1M2 => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParentGenotype {
    pub hap_a: Haplotype,
    pub hap_b: Haplotype,
}

impl ParentGenotype {
    pub fn new(hap_a: Haplotype, hap_b: Haplotype) -> Self {
        ParentGenotype { hap_a, hap_b }
    }

    pub fn marker_genotype(&self) -> MarkerGenotype {
        MarkerGenotype::from_alleles(self.hap_a.marker, self.hap_b.marker)
    }

    pub fn is_marker_heterozygous(&self) -> bool {
        self.hap_a.marker != self.hap_b.marker
    }

    pub fn is_qtl_heterozygous(&self) -> bool {
        self.hap_a.qtl != self.hap_b.qtl
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Offspring {
    pub marker_genotype: MarkerGenotype,
    /// Number of D2 alleles received (0, 1 or 2).
    pub qtl_count: u8,
    /// Transmission indicator; `None` only for non-informative trios.
    pub z: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    pub parents: [ParentGenotype; 2],
    pub sibs: [Offspring; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyPanel {
    pub families: Vec<Family>,
    pub locus_params: LocusParams,
}

impl FamilyPanel {
    pub fn len(&self) -> usize {
        self.families.len()
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    pub fn offspring(&self) -> impl Iterator<Item = &Offspring> {
        self.families.iter().flat_map(|f| f.sibs.iter())
    }
}

/// Two independent haplotype draws.
pub fn sample_parent<R: Rng + ?Sized>(dist: &HaplotypeDist, rng: &mut R) -> ParentGenotype {
    let hap_a = dist.sample(rng);
    let hap_b = dist.sample(rng);
    ParentGenotype { hap_a, hap_b }
}

/// A parent pair is informative when at least one parent is marker-heterozygous.
pub fn is_informative(parents: &[ParentGenotype; 2]) -> bool {
    parents.iter().any(ParentGenotype::is_marker_heterozygous)
}

/// Draws the haplotype a parent passes on.
///
/// Double heterozygotes transmit either parental haplotype with probability
/// (1−θ)/2 and either recombinant with probability θ/2; all other parents
/// transmit one of their two haplotypes uniformly.
pub fn transmit_haplotype<R: Rng + ?Sized>(
    parent: &ParentGenotype,
    theta: f64,
    rng: &mut R,
) -> Haplotype {
    let ParentGenotype { hap_a, hap_b } = *parent;
    match (parent.is_marker_heterozygous(), parent.is_qtl_heterozygous()) {
        (false, false) => hap_a,
        (true, false) | (false, true) => {
            if rng.random_bool(0.5) {
                hap_a
            } else {
                hap_b
            }
        }
        (true, true) => {
            let u: f64 = rng.random();
            let half_parental = 0.5 * (1.0 - theta);
            if u < half_parental {
                hap_a
            } else if u < 2.0 * half_parental {
                hap_b
            } else if u < 2.0 * half_parental + 0.5 * theta {
                Haplotype::new(hap_a.marker, hap_b.qtl)
            } else {
                Haplotype::new(hap_b.marker, hap_a.qtl)
            }
        }
    }
}

/// Transmission indicator for one offspring.
///
/// M1M1 → 0 and M2M2 → 1. A heterozygous offspring scores 0 with parents
/// (M1M2, M2M2), 1 with (M1M2, M1M1), and a fair coin when both parents are
/// heterozygous.
pub fn derive_z<R: Rng + ?Sized>(
    parent_markers: [MarkerGenotype; 2],
    offspring: MarkerGenotype,
    rng: &mut R,
) -> Result<bool> {
    let [p, q] = parent_markers;
    if !p.is_heterozygous() && !q.is_heterozygous() {
        return Err(Error::Configuration(format!(
            "non-informative parents {p:?} x {q:?}: transmission indicator undefined"
        )));
    }
    let consistent = match offspring {
        MarkerGenotype::M1M1 => p.can_transmit(MarkerAllele::M1) && q.can_transmit(MarkerAllele::M1),
        MarkerGenotype::M2M2 => p.can_transmit(MarkerAllele::M2) && q.can_transmit(MarkerAllele::M2),
        MarkerGenotype::M1M2 => {
            (p.can_transmit(MarkerAllele::M1) && q.can_transmit(MarkerAllele::M2))
                || (p.can_transmit(MarkerAllele::M2) && q.can_transmit(MarkerAllele::M1))
        }
    };
    if !consistent {
        return Err(Error::MendelianInconsistency(format!(
            "offspring {offspring:?} cannot arise from parents {p:?} x {q:?}"
        )));
    }
    Ok(match offspring {
        MarkerGenotype::M1M1 => false,
        MarkerGenotype::M2M2 => true,
        MarkerGenotype::M1M2 => {
            let other = if p.is_heterozygous() { q } else { p };
            match other {
                MarkerGenotype::M1M2 => rng.random_bool(0.5),
                MarkerGenotype::M2M2 => false,
                MarkerGenotype::M1M1 => true,
            }
        }
    })
}

fn draw_informative_parents<R: Rng + ?Sized>(dist: &HaplotypeDist, rng: &mut R) -> [ParentGenotype; 2] {
    loop {
        let parents = [sample_parent(dist, rng), sample_parent(dist, rng)];
        if is_informative(&parents) {
            return parents;
        }
    }
}

fn make_offspring<R: Rng + ?Sized>(parents: &[ParentGenotype; 2], theta: f64, rng: &mut R) -> Offspring {
    let from_first = transmit_haplotype(&parents[0], theta, rng);
    let from_second = transmit_haplotype(&parents[1], theta, rng);
    let marker_genotype = MarkerGenotype::from_alleles(from_first.marker, from_second.marker);
    let qtl_count = [from_first, from_second]
        .iter()
        .filter(|h| h.qtl == QtlAllele::D2)
        .count() as u8;
    let z = derive_z(
        [parents[0].marker_genotype(), parents[1].marker_genotype()],
        marker_genotype,
        rng,
    )
    .ok();
    Offspring {
        marker_genotype,
        qtl_count,
        z,
    }
}

/// Simulates one informative family from its own generator.
pub fn simulate_family<R: Rng + ?Sized>(dist: &HaplotypeDist, theta: f64, rng: &mut R) -> Family {
    let parents = draw_informative_parents(dist, rng);
    // Each sib's Z coin is drawn independently inside make_offspring.
    let sibs = [make_offspring(&parents, theta, rng), make_offspring(&parents, theta, rng)];
    Family { parents, sibs }
}

/// Simulates exactly `n` informative families. Family `i` draws from
/// `seed.child(i)`, so the panel does not depend on evaluation order.
pub fn simulate_families(n: usize, params: &LocusParams, seed: &SeedStream) -> Result<FamilyPanel> {
    if n == 0 {
        return Err(Error::Configuration("number of families must be at least 1".into()));
    }
    params.validate()?;
    let dist = params.haplotype_distribution()?;
    let families = (0..n)
        .map(|i| {
            let mut rng = seed.child(i as u64).rng();
            simulate_family(&dist, params.theta, &mut rng)
        })
        .collect();
    Ok(FamilyPanel {
        families,
        locus_params: *params,
    })
}
