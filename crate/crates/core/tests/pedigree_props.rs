use proptest::prelude::*;
use qtdt_core::genetics::LocusParams;
use qtdt_core::pedigree::*;
use qtdt_core::rng::SeedStream;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn panel(n: usize, d: f64, m: f64, delta_star: f64, seed: u64) -> FamilyPanel {
    simulate_families(n, &LocusParams::new(d, m, delta_star, 0.01).unwrap(), &SeedStream::new(seed)).unwrap()
}

fn chi2_sf(stat: f64, df: f64) -> f64 {
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

#[test]
fn offspring_qtl_counts_follow_hwe_without_ld() {
    let d = 0.3;
    let fams = panel(20_000, d, 0.4, 0.0, 11);
    let mut counts = [0f64; 3];
    for o in fams.offspring() {
        counts[o.qtl_count as usize] += 1.0;
    }
    let n: f64 = counts.iter().sum();
    let expected = [(1.0 - d) * (1.0 - d), 2.0 * d * (1.0 - d), d * d].map(|p| p * n);
    let stat: f64 = counts.iter().zip(&expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    assert!(chi2_sf(stat, 2.0) > 0.001, "counts {counts:?} expected {expected:?}");
}

#[test]
fn transmission_independent_of_qtl_without_ld() {
    let fams = panel(20_000, 0.2, 0.5, 0.0, 12);
    let mut table = [[0f64; 3]; 2];
    for o in fams.offspring() {
        table[o.z.unwrap() as usize][o.qtl_count as usize] += 1.0;
    }
    let n: f64 = table.iter().flatten().sum();
    let mut stat = 0.0;
    for row in &table {
        for j in 0..3 {
            let e = row.iter().sum::<f64>() * (table[0][j] + table[1][j]) / n;
            stat += (row[j] - e).powi(2) / e;
        }
    }
    assert!(chi2_sf(stat, 2.0) > 0.001, "{table:?}");
}

#[test]
fn full_ld_raises_qtl_dose_of_m2_transmissions() {
    let fams = panel(20_000, 0.1, 0.5, 1.0, 13);
    let (mut s, mut c) = ([0.0; 2], [0.0; 2]);
    for o in fams.offspring() {
        let z = o.z.unwrap() as usize;
        s[z] += o.qtl_count as f64;
        c[z] += 1.0;
    }
    // With every D2 on an M2 haplotype the transmitting heterozygote passes
    // D2 with probability about d/m = .2 when Z = 1 and never when Z = 0.
    let diff = s[1] / c[1] - s[0] / c[0];
    assert!(diff > 0.1 && diff < 0.3, "{diff}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn families_are_informative_and_mendelian(
        seed in 0u64..100_000,
        d in 0.05f64..0.95,
        m in 0.05f64..0.95,
        ds in 0.0f64..=1.0,
    ) {
        let fams = panel(50, d, m, ds, seed);
        prop_assert_eq!(fams.len(), 50);
        for f in &fams.families {
            prop_assert!(is_informative(&f.parents));
            for o in &f.sibs {
                let alleles = |p: &ParentGenotype| [p.hap_a.marker, p.hap_b.marker];
                let (a, b) = (alleles(&f.parents[0]), alleles(&f.parents[1]));
                let possible = a.iter().any(|&x| b.iter().any(|&y| MarkerGenotype::from_alleles(x, y) == o.marker_genotype));
                prop_assert!(possible);
                prop_assert!(o.qtl_count <= 2);
                match o.marker_genotype {
                    MarkerGenotype::M1M1 => prop_assert_eq!(o.z, Some(false)),
                    MarkerGenotype::M2M2 => prop_assert_eq!(o.z, Some(true)),
                    MarkerGenotype::M1M2 => prop_assert!(o.z.is_some()),
                }
            }
        }
    }

    #[test]
    fn panel_is_a_function_of_the_seed(seed in 0u64..100_000) {
        prop_assert_eq!(panel(20, 0.2, 0.3, 0.5, seed), panel(20, 0.2, 0.3, 0.5, seed));
    }
}
