//! Least squares and canonical-link GLMs (logistic, Poisson) fitted by
//! iteratively reweighted least squares, plus the chi-square upper tail used
//! for likelihood-ratio tests.

use crate::error::{Error, Result};
use crate::special::{gamma_q, ln_gamma};

/// IRLS stops when the score max-norm is below this and the Newton step is small.
pub const SCORE_TOL: f64 = 1e-8;
/// IRLS also stops when an accepted step has max-norm below this.
pub const STEP_TOL: f64 = 1e-10;
pub const MAX_IRLS_ITERS: usize = 50;
/// Coefficient max-norm beyond which a still-improving fit is declared separated.
pub const SEPARATION_NORM: f64 = 1e3;
/// |η| beyond which a fitted probability (or Poisson mean) is treated as 0 or 1.
const BOUNDARY_ETA: f64 = 25.0;

const NEWTON_STEP_AT_OPTIMUM: f64 = 1e-6;
const MAX_HALVINGS: usize = 40;
const RANK_TOL: f64 = 1e-10;

/// Dense row-major design matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if cols == 0 {
            return Err(Error::Configuration("design matrix needs at least one column".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Configuration(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(DesignMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds `[1, predictors...]` rows.
    pub fn with_intercept<R: AsRef<[f64]>>(predictors: &[R]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = predictors
            .iter()
            .map(|p| std::iter::once(1.0).chain(p.as_ref().iter().copied()).collect())
            .collect();
        DesignMatrix::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn linear_predictor(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), beta)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitWarning {
    /// Coefficients ran off towards infinity (complete or quasi-complete separation).
    Separation,
    /// Iteration budget exhausted without meeting the convergence criteria.
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub warning: Option<FitWarning>,
}

/// Householder QR least squares. Fails on (numerical) rank deficiency.
fn qr_least_squares(x: &DesignMatrix, y: &[f64]) -> Result<Vec<f64>> {
    let (n, p) = (x.rows, x.cols);
    // Column-major working copy.
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| (0..n).map(|i| x.data[i * p + j]).collect()).collect();
    let mut b = y.to_vec();
    let scale = a.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::SingularDesign("all columns are zero".into()));
    }
    let mut diag = vec![0.0; p];
    for k in 0..p {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= RANK_TOL * scale {
            return Err(Error::SingularDesign(format!("column {k} is linearly dependent")));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        diag[k] = alpha;
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(k + 1) {
                let f = 2.0 * dot(&v, &col[k..]) / vnorm2;
                for (c, vi) in col[k..].iter_mut().zip(&v) {
                    *c -= f * vi;
                }
            }
            let f = 2.0 * dot(&v, &b[k..]) / vnorm2;
            for (c, vi) in b[k..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
    }
    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let s: f64 = (k + 1..p).map(|j| a[j][k] * beta[j]).sum();
        beta[k] = (b[k] - s) / diag[k];
    }
    Ok(beta)
}

/// Solves the SPD system `a x = b` by Cholesky; `None` if `a` is not
/// numerically positive definite.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let p = b.len();
    let mut l = vec![vec![0.0; p]; p];
    let max_diag = (0..p).map(|i| a[i][i]).fold(0.0, f64::max);
    for i in 0..p {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 1e-14 * max_diag) || !d.is_finite() {
                    return None;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut z = vec![0.0; p];
    for i in 0..p {
        let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| l[k][i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i][i];
    }
    Some(x)
}

fn check_shape(x: &DesignMatrix, y: &[f64]) -> Result<()> {
    if x.rows != y.len() {
        return Err(Error::Configuration(format!(
            "design has {} rows but response has {} values",
            x.rows,
            y.len()
        )));
    }
    if x.rows < x.cols {
        return Err(Error::SingularDesign(format!(
            "{} rows cannot identify {} coefficients",
            x.rows, x.cols
        )));
    }
    if y.iter().any(|v| !v.is_finite()) || x.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Configuration("non-finite value in regression data".into()));
    }
    Ok(())
}

/// Ordinary least squares. The log-likelihood is the Gaussian one at the
/// MLE variance RSS/n (infinite for an exact fit).
pub fn fit_ols(x: &DesignMatrix, y: &[f64]) -> Result<FitResult> {
    check_shape(x, y)?;
    let coefficients = qr_least_squares(x, y)?;
    let rss: f64 = (0..x.rows)
        .map(|i| (y[i] - dot(x.row(i), &coefficients)).powi(2))
        .sum();
    let n = x.rows as f64;
    let log_likelihood = -0.5 * n * ((2.0 * std::f64::consts::PI * rss / n).ln() + 1.0);
    Ok(FitResult {
        coefficients,
        log_likelihood,
        converged: true,
        iterations: 1,
        warning: None,
    })
}

/// Canonical-link exponential family pieces needed by IRLS.
trait CanonicalFamily {
    /// Returns (y − μ, Var(μ)) at linear predictor `eta`.
    fn residual_and_weight(&self, y: f64, eta: f64) -> (f64, f64);
    fn log_likelihood(&self, y: &[f64], eta: &[f64]) -> f64;
    fn initial_eta(&self, y: f64) -> Option<f64>;
    /// Fitted mean numerically on the edge of its range.
    fn at_boundary(&self, eta: f64) -> bool;
}

struct Logistic;
struct PoissonLog;

/// ln(1 + e^x) without overflow.
fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl CanonicalFamily for Logistic {
    fn residual_and_weight(&self, y: f64, eta: f64) -> (f64, f64) {
        let mu = sigmoid(eta);
        let one_minus_mu = sigmoid(-eta);
        (y * one_minus_mu - (1.0 - y) * mu, mu * one_minus_mu)
    }

    fn log_likelihood(&self, y: &[f64], eta: &[f64]) -> f64 {
        y.iter().zip(eta).map(|(&y, &e)| y * e - log1p_exp(e)).sum()
    }

    fn at_boundary(&self, eta: f64) -> bool {
        eta.abs() > BOUNDARY_ETA
    }

    fn initial_eta(&self, _y: f64) -> Option<f64> {
        None
    }
}

impl CanonicalFamily for PoissonLog {
    fn residual_and_weight(&self, y: f64, eta: f64) -> (f64, f64) {
        let mu = eta.exp();
        (y - mu, mu)
    }

    fn log_likelihood(&self, y: &[f64], eta: &[f64]) -> f64 {
        y.iter()
            .zip(eta)
            .map(|(&y, &e)| y * e - e.exp() - ln_gamma(y + 1.0))
            .sum()
    }

    fn at_boundary(&self, eta: f64) -> bool {
        eta < -BOUNDARY_ETA
    }

    fn initial_eta(&self, y: f64) -> Option<f64> {
        Some((y + 0.1).ln())
    }
}

fn irls<F: CanonicalFamily>(family: &F, x: &DesignMatrix, y: &[f64]) -> Result<FitResult> {
    let p = x.cols;
    // Rank check up front so that a singular weighted system later means divergence.
    qr_least_squares(x, &vec![0.0; x.rows])?;

    let mut beta = vec![0.0; p];
    let mut ll = family.log_likelihood(y, &x.linear_predictor(&beta));
    let start: Option<Vec<f64>> = y.iter().map(|&v| family.initial_eta(v)).collect();
    if let Some(eta0) = start {
        if let Ok(b0) = qr_least_squares(x, &eta0) {
            let ll0 = family.log_likelihood(y, &x.linear_predictor(&b0));
            if ll0.is_finite() && ll0 > ll {
                beta = b0;
                ll = ll0;
            }
        }
    }

    let mut converged = false;
    let mut warning = None;
    let mut iterations = 0;
    while iterations < MAX_IRLS_ITERS {
        let eta = x.linear_predictor(&beta);
        let mut score = vec![0.0; p];
        let mut info = vec![vec![0.0; p]; p];
        for i in 0..x.rows {
            let row = x.row(i);
            let (r, w) = family.residual_and_weight(y[i], eta[i]);
            for a in 0..p {
                score[a] += row[a] * r;
                for b in 0..=a {
                    info[a][b] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                info[b][a] = info[a][b];
            }
        }
        let Some(step) = cholesky_solve(&info, &score) else {
            // Weights have collapsed: fitted means sit on the boundary.
            warning = Some(FitWarning::Separation);
            break;
        };
        if max_abs(&score) <= SCORE_TOL && max_abs(&step) <= NEWTON_STEP_AT_OPTIMUM {
            converged = true;
            break;
        }
        iterations += 1;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let ll_c = family.log_likelihood(y, &x.linear_predictor(&cand));
            if ll_c.is_finite() && ll_c >= ll - 1e-12 * ll.abs().max(1.0) {
                accepted = Some((cand, ll_c));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, ll_c)) = accepted else {
            // No ascent along the Newton direction: we are at the optimum up
            // to floating-point resolution.
            converged = max_abs(&score) <= 1e-6;
            break;
        };
        let improved = ll_c > ll;
        let moved = t * max_abs(&step);
        beta = cand;
        ll = ll_c;
        if max_abs(&beta) > SEPARATION_NORM && improved {
            warning = Some(FitWarning::Separation);
            break;
        }
        if moved <= STEP_TOL {
            let eta = x.linear_predictor(&beta);
            let mut s = vec![0.0; p];
            for i in 0..x.rows {
                let (r, _) = family.residual_and_weight(y[i], eta[i]);
                for (a, sa) in s.iter_mut().enumerate() {
                    *sa += x.row(i)[a] * r;
                }
            }
            converged = max_abs(&s) <= 1e-6;
            break;
        }
    }
    if !converged && warning.is_none() {
        let diverging = x.linear_predictor(&beta).iter().any(|&e| family.at_boundary(e));
        warning = Some(if diverging {
            FitWarning::Separation
        } else {
            FitWarning::MaxIterations
        });
    }
    Ok(FitResult {
        coefficients: beta,
        log_likelihood: ll,
        converged,
        iterations,
        warning,
    })
}

/// Logistic regression of a 0/1 response by IRLS with step-halving.
pub fn fit_logistic(x: &DesignMatrix, y: &[f64]) -> Result<FitResult> {
    check_shape(x, y)?;
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Configuration("logistic response must be 0 or 1".into()));
    }
    irls(&Logistic, x, y)
}

/// Log-link Poisson regression by IRLS with step-halving. Non-integer
/// nonnegative responses are accepted (quasi-likelihood).
pub fn fit_poisson(x: &DesignMatrix, y: &[f64]) -> Result<FitResult> {
    check_shape(x, y)?;
    if y.iter().any(|&v| v < 0.0) {
        return Err(Error::Configuration("Poisson response must be nonnegative".into()));
    }
    irls(&PoissonLog, x, y)
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_q(0.5 * df, 0.5 * x)
    }
}

pub fn chi_square_cdf(x: f64, df: f64) -> f64 {
    1.0 - chi_square_sf(x, df)
}

/// Score vector Xᵀ(y − μ̂) for a logistic fit, for diagnostics and tests.
pub fn logistic_score(x: &DesignMatrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    score_with(&Logistic, x, y, beta)
}

/// Score vector Xᵀ(y − μ̂) for a Poisson fit.
pub fn poisson_score(x: &DesignMatrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    score_with(&PoissonLog, x, y, beta)
}

fn score_with<F: CanonicalFamily>(family: &F, x: &DesignMatrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    let eta = x.linear_predictor(beta);
    let mut s = vec![0.0; x.cols];
    for i in 0..x.rows {
        let (r, _) = family.residual_and_weight(y[i], eta[i]);
        for (a, sa) in s.iter_mut().enumerate() {
            *sa += x.row(i)[a] * r;
        }
    }
    s
}

pub fn logistic_log_likelihood(x: &DesignMatrix, y: &[f64], beta: &[f64]) -> f64 {
    Logistic.log_likelihood(y, &x.linear_predictor(beta))
}

pub fn poisson_log_likelihood(x: &DesignMatrix, y: &[f64], beta: &[f64]) -> f64 {
    PoissonLog.log_likelihood(y, &x.linear_predictor(beta))
}

pub fn inverse_logit(eta: f64) -> f64 {
    sigmoid(eta)
}
