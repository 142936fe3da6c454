mod common;

use common::*;
use proptest::prelude::*;
use qtdt_core::glm::*;

#[test]
fn logistic_matches_grid_oracle() {
    for i in 0..20 {
        let ds = dataset(i);
        let fit = fit_logistic(&ds.design, &ds.binary).unwrap();
        assert!(fit.converged, "dataset {i}: {:?}", fit.warning);
        let oracle = grid_maximize(|b| logistic_ll(&ds.rows, &ds.binary, b), 3);
        for (a, b) in fit.coefficients.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-3, "dataset {i}: {:?} vs {:?}", fit.coefficients, oracle);
        }
        let ll = logistic_ll(&ds.rows, &ds.binary, &fit.coefficients);
        assert!((fit.log_likelihood - ll).abs() < 1e-9);
    }
}

#[test]
fn poisson_matches_grid_oracle() {
    for i in 0..20 {
        let ds = dataset(i);
        let fit = fit_poisson(&ds.design, &ds.counts).unwrap();
        assert!(fit.converged, "dataset {i}");
        let oracle = grid_maximize(|b| poisson_ll(&ds.rows, &ds.counts, b), 3);
        for (a, b) in fit.coefficients.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-3, "dataset {i}: {:?} vs {:?}", fit.coefficients, oracle);
        }
    }
}

#[test]
fn ols_matches_full_pivot_normal_equations() {
    for i in 0..20 {
        let ds = dataset(i);
        let fit = fit_ols(&ds.design, &ds.gaussian).unwrap();
        let oracle = ols_normal_equations(&ds.rows, &ds.gaussian);
        for (a, b) in fit.coefficients.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "dataset {i}");
        }
    }
}

#[test]
fn ols_log_likelihood_is_gaussian_at_mle_variance() {
    let ds = dataset(3);
    let fit = fit_ols(&ds.design, &ds.gaussian).unwrap();
    let n = ds.gaussian.len() as f64;
    let rss: f64 = ds
        .rows
        .iter()
        .zip(&ds.gaussian)
        .map(|(r, y)| {
            let f: f64 = r.iter().zip(&fit.coefficients).map(|(a, b)| a * b).sum();
            (y - f).powi(2)
        })
        .sum();
    let s2 = rss / n;
    let expected = -0.5 * n * ((2.0 * std::f64::consts::PI * s2).ln() + 1.0);
    assert!((fit.log_likelihood - expected).abs() < 1e-9);
}

#[test]
fn separated_logistic_data_is_flagged() {
    let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![1.0, i as f64 - 14.5]).collect();
    let y: Vec<f64> = (0..30).map(|i| if i >= 15 { 1.0 } else { 0.0 }).collect();
    let fit = fit_logistic(&DesignMatrix::from_rows(&rows).unwrap(), &y).unwrap();
    assert!(!fit.converged);
    assert_eq!(fit.warning, Some(FitWarning::Separation));
}

#[test]
fn chi_square_sf_matches_quadrature_and_statrs() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    for &k in &[1.0, 2.0, 3.0, 4.0, 7.5] {
        let dist = ChiSquared::new(k).unwrap();
        for &x in &[0.05, 0.5, 1.0, 3.84, 6.0, 10.0, 25.0] {
            let ours = chi_square_sf(x, k);
            assert!((ours - dist.sf(x)).abs() < 1e-10, "k={k} x={x}");
            if k >= 2.0 {
                // density is bounded, so plain Simpson on [0, x] converges
                let ln_norm = (k / 2.0) * 2f64.ln() + statrs::function::gamma::ln_gamma(k / 2.0);
                let pdf = |t: f64| {
                    if t <= 0.0 {
                        if k == 2.0 { 0.5 } else { 0.0 }
                    } else {
                        ((k / 2.0 - 1.0) * t.ln() - t / 2.0 - ln_norm).exp()
                    }
                };
                let cdf = integrate(&pdf, 0.0, x, 1e-13);
                assert!((ours - (1.0 - cdf)).abs() < 1e-9, "k={k} x={x}");
            }
        }
    }
    assert_eq!(chi_square_sf(0.0, 2.0), 1.0);
    assert!(chi_square_sf(500.0, 2.0) < 1e-100);
}

fn small_dataset() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (20usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(x, y)| {
                let rows = x.iter().map(|&v| vec![1.0, v]).collect();
                (rows, y.into_iter().map(|b| b as u8 as f64).collect())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn converged_logistic_fit_solves_score_equation((rows, y) in small_dataset()) {
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let fit = fit_logistic(&x, &y).unwrap();
        if fit.converged {
            let score = logistic_score(&x, &y, &fit.coefficients);
            prop_assert!(score.iter().all(|s| s.abs() < 1e-6), "{:?}", score);
        }
    }

    #[test]
    fn logistic_fit_ignores_row_order((rows, y) in small_dataset(), shift in 1usize..19) {
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let n = rows.len();
        let order: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let rows2: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
        let y2: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let a = fit_logistic(&x, &y).unwrap();
        let b = fit_logistic(&DesignMatrix::from_rows(&rows2).unwrap(), &y2).unwrap();
        prop_assert_eq!(a.converged, b.converged);
        if a.converged {
            for (u, v) in a.coefficients.iter().zip(&b.coefficients) {
                prop_assert!((u - v).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn poisson_fit_solves_score_equation(
        xs in prop::collection::vec(-1.5f64..1.5, 25..50),
        seed in 0u64..1000,
    ) {
        use rand::Rng;
        let mut rng = qtdt_core::rng::SeedStream::new(seed).rng();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&v| vec![1.0, v]).collect();
        let y: Vec<f64> = xs.iter().map(|&v| {
            let lam = (0.5 + 0.4 * v).exp();
            rand_distr::Distribution::sample(&rand_distr::Poisson::new(lam).unwrap(), &mut rng)
        }).collect();
        let _ = rng.random::<u8>();
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let fit = fit_poisson(&x, &y).unwrap();
        prop_assert!(fit.converged);
        let score = poisson_score(&x, &y, &fit.coefficients);
        prop_assert!(score.iter().all(|s| s.abs() < 1e-6), "{:?}", score);
    }
}
