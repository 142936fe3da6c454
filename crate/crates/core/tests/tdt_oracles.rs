mod common;

use common::*;
use proptest::prelude::*;
use qtdt_core::missingness::Transmission;
use qtdt_core::rng::SeedStream;
use qtdt_core::stats::ks_p_value;
use qtdt_core::glm::chi_square_cdf;
use qtdt_core::tdt::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn sample(n: usize, k: usize, effect: f64, seed: u64) -> Vec<Transmission> {
    let mut rng = SeedStream::new(seed).rng();
    (0..n)
        .map(|_| {
            let z = rng.random_bool(0.5);
            let y = (0..k)
                .map(|j| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    e + if z && j == 0 { effect } else { 0.0 } + 3.0 * j as f64
                })
                .collect();
            Transmission { z, y }
        })
        .collect()
}

fn oracle_lrt(rows: &[Transmission], centering: Centering) -> f64 {
    let k = rows[0].y.len();
    let centers: Vec<f64> = (0..k)
        .map(|j| {
            let mut v: Vec<f64> = rows.iter().map(|r| r.y[j]).collect();
            v.sort_by(f64::total_cmp);
            match centering {
                Centering::Mean => v.iter().sum::<f64>() / v.len() as f64,
                Centering::Median => {
                    let n = v.len();
                    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
                }
            }
        })
        .collect();
    let x: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.y.iter().zip(&centers).map(|(a, c)| a - c).collect())
        .collect();
    let z: Vec<f64> = rows.iter().map(|r| r.z as u8 as f64).collect();
    let b = grid_maximize(|b| logistic_ll(&x, &z, b), k);
    let ll = logistic_ll(&x, &z, &b);
    (2.0 * (ll - rows.len() as f64 * 0.5f64.ln())).max(0.0)
}

#[test]
fn lrt_matches_grid_oracle() {
    for (seed, k, effect, centering) in [
        (1, 1, 0.0, Centering::Mean),
        (2, 1, 0.3, Centering::Mean),
        (3, 1, 0.3, Centering::Median),
        (4, 2, 0.2, Centering::Mean),
        (5, 2, 0.5, Centering::Median),
    ] {
        let rows = sample(300, k, effect, seed);
        let res = multivariate_tdt(&TestInput { transmissions: rows.clone(), centering }).unwrap();
        let oracle = oracle_lrt(&rows, centering);
        assert!((res.lrt - oracle).abs() < 1e-6, "seed {seed}: {} vs {oracle}", res.lrt);
        assert_eq!(res.df, k);
        assert!((res.p_value - (1.0 - chi_square_cdf(res.lrt, k as f64))).abs() < 1e-12);
    }
}

#[test]
fn too_few_rows_is_an_error() {
    let rows = sample(6, 2, 0.0, 9);
    assert!(multivariate_tdt(&TestInput { transmissions: rows, centering: Centering::Mean }).is_err());
}

#[test]
fn null_p_values_are_uniform() {
    let p: Vec<f64> = (0..400)
        .map(|s| {
            let rows = sample(200, 2, 0.0, 1000 + s);
            multivariate_tdt(&TestInput { transmissions: rows, centering: Centering::Mean })
                .unwrap()
                .p_value
        })
        .collect();
    assert!(ks_p_value(&p, |x| x.clamp(0.0, 1.0)) > 0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lrt_invariant_under_affine_rescaling(
        seed in 0u64..10_000,
        scale in 0.01f64..100.0,
        shift in -50.0f64..50.0,
        flip in any::<bool>(),
    ) {
        let rows = sample(120, 2, 0.3, seed);
        let s = if flip { -scale } else { scale };
        let scaled: Vec<Transmission> = rows
            .iter()
            .map(|r| Transmission { z: r.z, y: vec![s * r.y[0] + shift, r.y[1]] })
            .collect();
        let a = multivariate_tdt(&TestInput { transmissions: rows, centering: Centering::Mean }).unwrap();
        let b = multivariate_tdt(&TestInput { transmissions: scaled, centering: Centering::Mean }).unwrap();
        prop_assert!((a.lrt - b.lrt).abs() < 1e-6 * a.lrt.max(1.0));
    }

    #[test]
    fn lrt_invariant_under_relabelling_transmissions(seed in 0u64..10_000) {
        let rows = sample(120, 1, 0.4, seed);
        let flipped: Vec<Transmission> = rows.iter().map(|r| Transmission { z: !r.z, y: r.y.clone() }).collect();
        let a = multivariate_tdt(&TestInput { transmissions: rows, centering: Centering::Median }).unwrap();
        let b = multivariate_tdt(&TestInput { transmissions: flipped, centering: Centering::Median }).unwrap();
        prop_assert!((a.lrt - b.lrt).abs() < 1e-8 * a.lrt.max(1.0));
        prop_assert!((a.coefficients[0] + b.coefficients[0]).abs() < 1e-6);
    }
}
