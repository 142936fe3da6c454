//! Phenotype panels and the missing-data patterns applied to them.
//!
//! A panel stores, per family and per offspring, the transmission indicator
//! and the trait vector with each cell either observed (`Some`) or missing
//! (`None`).

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pedigree::FamilyPanel;
use crate::rng::SeedStream;
use crate::traits::{generate_family_traits, ResidualCorrelation, TraitKind, TraitSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct SibRecord {
    pub z: bool,
    pub values: Vec<Option<f64>>,
}

impl SibRecord {
    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// One family's offspring records (two sibs, or one after deletion).
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyRecord {
    pub sibs: Vec<SibRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhenotypePanel {
    pub kinds: Vec<TraitKind>,
    pub families: Vec<FamilyRecord>,
}

/// A (z, complete trait vector) pair fed to the association test.
#[derive(Clone, Debug, PartialEq)]
pub struct Transmission {
    pub z: bool,
    pub y: Vec<f64>,
}

impl PhenotypePanel {
    /// Generates traits for every offspring of `families`. Family `i` uses
    /// the generator of `seed.child(i)`.
    pub fn simulate(
        families: &FamilyPanel,
        specs: &[TraitSpec],
        correlation: Option<ResidualCorrelation>,
        seed: &SeedStream,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Configuration("at least one trait is required".into()));
        }
        for s in specs {
            s.validate()?;
        }
        let chol = match correlation {
            Some(c) if !c.is_zero() => Some(c.cholesky(specs.len())?),
            _ => None,
        };
        let records = families
            .families
            .iter()
            .enumerate()
            .map(|(i, fam)| {
                let mut rng = seed.child(i as u64).rng();
                let counts = [fam.sibs[0].qtl_count, fam.sibs[1].qtl_count];
                let values = generate_family_traits(specs, counts, chol.as_deref(), &mut rng);
                let sibs = fam
                    .sibs
                    .iter()
                    .zip(values)
                    .map(|(o, v)| {
                        let z = o.z.ok_or_else(|| {
                            Error::Configuration("offspring without a transmission indicator".into())
                        })?;
                        Ok(SibRecord {
                            z,
                            values: v.into_iter().map(Some).collect(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(FamilyRecord { sibs })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PhenotypePanel {
            kinds: specs.iter().map(TraitSpec::kind).collect(),
            families: records,
        })
    }

    pub fn k(&self) -> usize {
        self.kinds.len()
    }

    pub fn n_families(&self) -> usize {
        self.families.len()
    }

    pub fn n_offspring(&self) -> usize {
        self.families.iter().map(|f| f.sibs.len()).sum()
    }

    pub fn missing_cells(&self) -> usize {
        self.families
            .iter()
            .flat_map(|f| f.sibs.iter())
            .map(SibRecord::missing_count)
            .sum()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_cells() == 0
    }

    /// All offspring as test rows. Fails if any cell is still missing.
    pub fn transmissions(&self) -> Result<Vec<Transmission>> {
        self.families
            .iter()
            .flat_map(|f| f.sibs.iter())
            .map(|s| {
                let y = s
                    .values
                    .iter()
                    .map(|v| v.ok_or_else(|| Error::InsufficientData("panel has missing cells".into())))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(Transmission { z: s.z, y })
            })
            .collect()
    }
}

/// Missing-data patterns for sib pairs. `T1` uses one trait; the `T2_*`
/// patterns use two traits (x, y) per offspring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MissingType {
    /// The single trait of one sib is missing.
    T1,
    /// Exactly one of the four cells is missing.
    T2_1,
    /// Both traits of one sib are missing.
    T2_3,
    /// Three of the four cells are missing.
    T2_4,
}

impl MissingType {
    pub fn required_k(&self) -> usize {
        match self {
            MissingType::T1 => 1,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MissingType::T1 => "T1",
            MissingType::T2_1 => "T2_1",
            MissingType::T2_3 => "T2_3",
            MissingType::T2_4 => "T2_4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('.', "_").as_str() {
            "T1" | "1" => Ok(MissingType::T1),
            "T2_1" | "2_1" => Ok(MissingType::T2_1),
            "T2_3" | "2_3" => Ok(MissingType::T2_3),
            "T2_4" | "2_4" => Ok(MissingType::T2_4),
            "T2_2" | "2_2" => Err(Error::Configuration("missing type 2.2 is not supported".into())),
            other => Err(Error::Configuration(format!("unknown missing type '{other}'"))),
        }
    }

    /// The admissible patterns, each a list of missing (sib, trait) cells.
    pub fn patterns(&self) -> Vec<Vec<(usize, usize)>> {
        let cells = [(0, 0), (0, 1), (1, 0), (1, 1)];
        match self {
            MissingType::T1 => vec![vec![(0, 0)], vec![(1, 0)]],
            MissingType::T2_1 => cells.iter().map(|&c| vec![c]).collect(),
            MissingType::T2_3 => vec![vec![(0, 0), (0, 1)], vec![(1, 0), (1, 1)]],
            MissingType::T2_4 => cells
                .iter()
                .map(|kept| cells.iter().copied().filter(|c| c != kept).collect())
                .collect(),
        }
    }
}

/// round(miss_p · n) with halves rounded up.
pub fn selected_family_count(n_families: usize, miss_p: f64) -> usize {
    (miss_p * n_families as f64 + 0.5 + 1e-9).floor() as usize
}

/// Which families are masked and with which pattern. Drawn from panel
/// dimensions only, so the mask cannot depend on trait values or Z.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MissingMask {
    pub mtype: MissingType,
    /// (family index, pattern index), sorted by family index.
    pub selections: Vec<(usize, usize)>,
}

pub fn draw_mask<R: Rng + ?Sized>(
    n_families: usize,
    mtype: MissingType,
    miss_p: f64,
    rng: &mut R,
) -> Result<MissingMask> {
    if !(0.0..1.0).contains(&miss_p) {
        return Err(Error::Configuration(format!("miss_p = {miss_p} not in [0,1)")));
    }
    let count = selected_family_count(n_families, miss_p).min(n_families);
    let n_patterns = mtype.patterns().len();
    let mut families = index::sample(rng, n_families, count).into_vec();
    families.sort_unstable();
    let selections = families
        .into_iter()
        .map(|f| (f, rng.random_range(0..n_patterns)))
        .collect();
    Ok(MissingMask { mtype, selections })
}

impl MissingMask {
    pub fn apply(&self, panel: &PhenotypePanel) -> Result<PhenotypePanel> {
        if panel.k() != self.mtype.required_k() {
            return Err(Error::Configuration(format!(
                "missing type {} needs {} trait(s), panel has {}",
                self.mtype.name(),
                self.mtype.required_k(),
                panel.k()
            )));
        }
        let patterns = self.mtype.patterns();
        let mut out = panel.clone();
        for &(f, p) in &self.selections {
            let family = out
                .families
                .get_mut(f)
                .ok_or_else(|| Error::Configuration(format!("mask refers to missing family {f}")))?;
            if family.sibs.len() != 2 {
                return Err(Error::Configuration("missingness patterns need sib pairs".into()));
            }
            for &(sib, t) in &patterns[p] {
                family.sibs[sib].values[t] = None;
            }
        }
        Ok(out)
    }
}

/// Masks round(miss_p · n) randomly chosen families with a pattern drawn
/// uniformly among those admitted by `mtype`.
pub fn apply_missingness<R: Rng + ?Sized>(
    panel: &PhenotypePanel,
    mtype: MissingType,
    miss_p: f64,
    rng: &mut R,
) -> Result<PhenotypePanel> {
    if !panel.is_complete() {
        return Err(Error::Configuration("missingness must be applied to a complete panel".into()));
    }
    if panel.k() != mtype.required_k() {
        return Err(Error::Configuration(format!(
            "missing type {} needs {} trait(s), panel has {}",
            mtype.name(),
            mtype.required_k(),
            panel.k()
        )));
    }
    let mask = draw_mask(panel.n_families(), mtype, miss_p, rng)?;
    mask.apply(panel)
}

/// Complete-case panel: drops every family with a missing cell. A family
/// whose single observed trait is missing cannot be kept in part, and the
/// same rule is applied to every pattern so the deleted data never retain
/// an offspring whose sib was masked.
pub fn deleted_panel(masked: &PhenotypePanel) -> PhenotypePanel {
    let families = masked
        .families
        .iter()
        .filter(|f| f.sibs.iter().all(SibRecord::is_complete))
        .cloned()
        .collect();
    PhenotypePanel {
        kinds: masked.kinds.clone(),
        families,
    }
}
