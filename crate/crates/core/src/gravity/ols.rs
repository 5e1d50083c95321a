//! Least squares with cluster-robust (sandwich) inference.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Point estimates of a least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub terms: Vec<String>,
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    /// `1 - SSR / SST` with SST taken about the mean.
    pub r_squared: f64,
    /// `(X^T X)^{-1}`.
    pub bread: DMatrix<f64>,
}

impl OlsFit {
    pub fn n_obs(&self) -> usize {
        self.residuals.len()
    }

    pub fn n_params(&self) -> usize {
        self.coefficients.len()
    }
}

/// Relative threshold on `|R_kk|` (against the column norm) below which a
/// column counts as linearly dependent on its predecessors.
const RANK_TOLERANCE: f64 = 1e-10;

/// Solves `min ||y - X b||` through a Householder QR of `X`.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>, terms: &[&str]) -> Result<OlsFit> {
    let (n, k) = x.shape();
    assert_eq!(terms.len(), k, "one name per column");
    assert_eq!(y.len(), n);
    if n <= k {
        return Err(Error::Undefined("OLS needs more observations than parameters"));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    for c in 0..k {
        let scale = x.column(c).norm();
        if scale == 0.0 || r[(c, c)].abs() <= RANK_TOLERANCE * scale {
            return Err(Error::RankDeficient { column: terms[c].to_string() });
        }
    }
    let qty = qr.q().transpose() * y;
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient { column: terms[k - 1].to_string() })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient { column: terms[k - 1].to_string() })?;
    let bread = &r_inv * r_inv.transpose();

    let residuals = y - x * &coefficients;
    let mean = y.mean();
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ssr = residuals.norm_squared();
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { f64::NAN };
    Ok(OlsFit {
        terms: terms.iter().map(|s| s.to_string()).collect(),
        coefficients,
        residuals,
        r_squared,
        bread,
    })
}

/// Cluster-robust inference for one coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterInference {
    pub standard_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub n_clusters: usize,
    /// Degrees of freedom of the Student t reference, `G - 1`.
    pub df: usize,
    /// `G/(G-1) * (n-1)/(n-k)`.
    pub small_sample_factor: f64,
    /// Two-sided 95% critical value.
    pub critical_value: f64,
}

/// Sandwich covariance
/// `V = c (X^T X)^{-1} (sum_g X_g^T u_g u_g^T X_g) (X^T X)^{-1}`
/// with per-cluster score sums, the CR1 small-sample factor `c` and a t
/// reference with `G - 1` degrees of freedom.
///
/// `clusters[i]` labels observation `i`; labels need not be contiguous.
pub fn cluster_robust(fit: &OlsFit, x: &DMatrix<f64>, clusters: &[usize]) -> Result<ClusterInference> {
    let (n, k) = x.shape();
    assert_eq!(clusters.len(), n);
    let mut scores: std::collections::BTreeMap<usize, DVector<f64>> = Default::default();
    for (i, &g) in clusters.iter().enumerate() {
        let s = scores.entry(g).or_insert_with(|| DVector::zeros(k));
        s.axpy(fit.residuals[i], &x.row(i).transpose(), 1.0);
    }
    let g = scores.len();
    if g < 2 {
        return Err(Error::TooFewClusters(g));
    }
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for s in scores.values() {
        meat.ger(1.0, s, s, 1.0);
    }
    let c = (g as f64 / (g - 1) as f64) * ((n - 1) as f64 / (n - k) as f64);
    let v = (&fit.bread * meat * &fit.bread) * c;

    let df = g - 1;
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    let critical_value = dist.inverse_cdf(0.975);
    let mut out = ClusterInference {
        standard_errors: Vec::with_capacity(k),
        t_values: Vec::with_capacity(k),
        p_values: Vec::with_capacity(k),
        ci_lower: Vec::with_capacity(k),
        ci_upper: Vec::with_capacity(k),
        n_clusters: g,
        df,
        small_sample_factor: c,
        critical_value,
    };
    for j in 0..k {
        let est = fit.coefficients[j];
        let se = v[(j, j)].max(0.0).sqrt();
        let t = est / se;
        out.standard_errors.push(se);
        out.t_values.push(t);
        out.p_values.push(if t.is_nan() { f64::NAN } else { 2.0 * dist.sf(t.abs()) });
        out.ci_lower.push(est - critical_value * se);
        out.ci_upper.push(est + critical_value * se);
    }
    Ok(out)
}

/// Classical `sigma^2 (X^T X)^{-1}` standard errors, for comparison.
pub fn conventional_standard_errors(fit: &OlsFit) -> Vec<f64> {
    let (n, k) = (fit.n_obs(), fit.n_params());
    let sigma2 = fit.residuals.norm_squared() / (n - k) as f64;
    (0..k).map(|j| (sigma2 * fit.bread[(j, j)]).sqrt()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_one_regressor() {
        // y = 1 + 2x through (0, 1) and (3, 7); a third point on the line
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 3.0, 1.0, 1.5]);
        let y = DVector::from_vec(vec![1.0, 7.0, 4.0]);
        let fit = ols(&x, &y, &["const", "x"]).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn names_the_dependent_column() {
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 1.0, 2.0, 1.0, 2.0, 4.0, 1.0, 3.0, 6.0, 1.0, 5.0, 10.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        match ols(&x, &y, &["const", "a", "twice_a"]) {
            Err(Error::RankDeficient { column }) => assert_eq!(column, "twice_a"),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        let zero = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(ols(&zero, &DVector::zeros(3), &["c", "z"]), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn needs_two_clusters() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 4.0]);
        let fit = ols(&x, &y, &["const"]).unwrap();
        assert!(matches!(cluster_robust(&fit, &x, &[0, 0, 0]), Err(Error::TooFewClusters(1))));
        assert!(cluster_robust(&fit, &x, &[0, 0, 1]).is_ok());
    }

    #[test]
    fn constant_shift_moves_only_the_intercept() {
        let x = DMatrix::from_row_slice(5, 2, &[1.0, 0.3, 1.0, 1.1, 1.0, 2.0, 1.0, 2.9, 1.0, 4.2]);
        let y = DVector::from_vec(vec![0.1, 0.9, 2.2, 2.8, 4.0]);
        let a = ols(&x, &y, &["c", "x"]).unwrap();
        let b = ols(&x, &y.add_scalar(3.5), &["c", "x"]).unwrap();
        assert!((b.coefficients[0] - a.coefficients[0] - 3.5).abs() < 1e-12);
        assert!((b.coefficients[1] - a.coefficients[1]).abs() < 1e-12);
        assert!((a.r_squared - b.r_squared).abs() < 1e-12);
    }
}
