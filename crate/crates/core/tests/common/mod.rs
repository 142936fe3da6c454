//! Reference implementations used as independent oracles by the tests.
#![allow(dead_code, clippy::needless_range_loop)]

use qtdt_core::glm::DesignMatrix;
use qtdt_core::rng::SeedStream;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

pub fn ln1pexp(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub fn logistic_ll(rows: &[Vec<f64>], y: &[f64], b: &[f64]) -> f64 {
    rows.iter()
        .zip(y)
        .map(|(r, &yi)| {
            let eta: f64 = r.iter().zip(b).map(|(a, c)| a * c).sum();
            yi * eta - ln1pexp(eta)
        })
        .sum()
}

pub fn poisson_ll(rows: &[Vec<f64>], y: &[f64], b: &[f64]) -> f64 {
    rows.iter()
        .zip(y)
        .map(|(r, &yi)| {
            let eta: f64 = r.iter().zip(b).map(|(a, c)| a * c).sum();
            let lf: f64 = (1..=yi as u64).map(|j| (j as f64).ln()).sum();
            yi * eta - eta.exp() - lf
        })
        .sum()
}

/// Maximizes a concave function by cyclic coordinate search: each
/// coordinate is scanned on a grid which is then refined around the best
/// point, until a full sweep no longer moves.
pub fn grid_maximize(f: impl Fn(&[f64]) -> f64, dim: usize) -> Vec<f64> {
    let mut b = vec![0.0; dim];
    for _sweep in 0..400 {
        let before = b.clone();
        for j in 0..dim {
            let mut center = b[j];
            let mut half = 8.0;
            while half > 1e-9 {
                let mut best = (f64::NEG_INFINITY, center);
                for s in 0..=40 {
                    let v = center - half + 2.0 * half * s as f64 / 40.0;
                    b[j] = v;
                    let val = f(&b);
                    if val > best.0 {
                        best = (val, v);
                    }
                }
                center = best.1;
                half /= 10.0;
            }
            b[j] = center;
        }
        let moved = b.iter().zip(&before).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        if moved < 1e-9 {
            break;
        }
    }
    b
}

/// Solves A x = rhs by Gaussian elimination with full pivoting.
pub fn solve_full_pivot(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, 0.0);
        for i in k..n {
            for j in k..n {
                if a[i][j].abs() > best {
                    best = a[i][j].abs();
                    pi = i;
                    pj = j;
                }
            }
        }
        a.swap(k, pi);
        rhs.swap(k, pi);
        for row in a.iter_mut() {
            row.swap(k, pj);
        }
        perm.swap(k, pj);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut z = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * z[j]).sum();
        z[k] = (rhs[k] - s) / a[k][k];
    }
    let mut x = vec![0.0; n];
    for (k, &p) in perm.iter().enumerate() {
        x[p] = z[k];
    }
    x
}

pub fn ols_normal_equations(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = rows[0].len();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (r, &yi) in rows.iter().zip(y) {
        for i in 0..p {
            xty[i] += r[i] * yi;
            for j in 0..p {
                xtx[i][j] += r[i] * r[j];
            }
        }
    }
    solve_full_pivot(xtx, xty)
}

/// Small regression dataset: intercept plus two standard normal covariates.
pub struct Dataset {
    pub rows: Vec<Vec<f64>>,
    pub design: DesignMatrix,
    pub binary: Vec<f64>,
    pub counts: Vec<f64>,
    pub gaussian: Vec<f64>,
}

pub fn dataset(index: u64) -> Dataset {
    let mut rng = SeedStream::new(0x00dd_5eed).child(index).rng();
    let n = 40 + (index as usize % 5) * 15;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let truth = [
        rng.random_range(-0.5..0.5),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ];
    let mut rows = Vec::with_capacity(n);
    let (mut binary, mut counts, mut gaussian) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let r = vec![1.0, normal.sample(&mut rng), normal.sample(&mut rng)];
        let eta: f64 = r.iter().zip(&truth).map(|(a, b)| a * b).sum();
        binary.push(if rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp()) { 1.0 } else { 0.0 });
        let lam = (0.3 * eta).exp();
        counts.push(Poisson::new(lam).unwrap().sample(&mut rng));
        gaussian.push(eta + normal.sample(&mut rng));
        rows.push(r);
    }
    let design = DesignMatrix::from_rows(&rows).unwrap();
    Dataset {
        rows,
        design,
        binary,
        counts,
        gaussian,
    }
}

/// Composite Simpson rule with interval halving until two estimates agree.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let simpson = |n: usize| {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let mut n = 64;
    let mut prev = simpson(n);
    loop {
        n *= 2;
        let cur = simpson(n);
        if (cur - prev).abs() < tol || n > 1 << 22 {
            return cur;
        }
        prev = cur;
    }
}
