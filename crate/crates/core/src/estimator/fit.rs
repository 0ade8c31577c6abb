use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::gmm::{hansen_j, HansenJ};
use super::linalg::{cluster_sums, count_clusters, gram, gram_cholesky};
use super::panel::{Design, Outcome};
use super::weak::{effective_f, WeakIvDiagnostics};
use crate::error::{Error, Result};

/// Covariance estimator for coefficient inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VcvKind {
    /// Homoskedastic `s^2 (X'X)^{-1}` with `s^2 = e'e / (N - K)`.
    Classical,
    /// Heteroskedasticity-robust sandwich with `N / (N - K)`.
    Robust,
    /// Cluster-robust sandwich; `cr1` applies `G/(G-1) * (N-1)/(N-K)`.
    Cluster { cr1: bool },
}

impl Default for VcvKind {
    fn default() -> Self {
        VcvKind::Cluster { cr1: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Ols,
    Tsls,
}

/// First-stage regression of the endogenous regressor on all instruments.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstStage {
    pub names: Vec<String>,
    pub coefficients: DVector<f64>,
    pub std_errors: DVector<f64>,
    /// Classical F for the excluded instruments.
    pub partial_f: f64,
    pub r2: f64,
    pub n_obs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub method: Method,
    pub outcome: String,
    pub names: Vec<String>,
    pub coefficients: DVector<f64>,
    pub vcv: DMatrix<f64>,
    pub vcv_kind: VcvKind,
    /// Within-transformed R^2, `1 - RSS / TSS` about the transformed mean.
    pub r2_within: f64,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub residuals: DVector<f64>,
    pub instruments: Vec<String>,
    pub first_stage: Option<FirstStage>,
    pub weak_iv: Option<WeakIvDiagnostics>,
    /// `None` when the model is just identified.
    pub hansen_j: Option<HansenJ>,
    pub omitted: Vec<String>,
}

impl EstimationResult {
    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coef(&self, name: &str) -> Option<f64> {
        self.position(name).map(|j| self.coefficients[j])
    }

    pub fn se(&self, name: &str) -> Option<f64> {
        self.position(name).map(|j| self.vcv[(j, j)].max(0.0).sqrt())
    }

    /// Two-sided normal confidence interval at `level`.
    pub fn ci(&self, name: &str, level: f64) -> Option<(f64, f64)> {
        let z = normal_quantile(0.5 + level / 2.0);
        let (b, s) = (self.coef(name)?, self.se(name)?);
        Some((b - z * s, b + z * s))
    }
}

pub(crate) fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

/// Sandwich covariance `B (sum_g s_g s_g') B` with scores `s = X_i e_i` and
/// bread `B = (X'X)^{-1}`, scaled by the small-sample factor of `kind`.
pub fn cluster_vcv(
    x: &DMatrix<f64>,
    residuals: &DVector<f64>,
    clusters: &[u64],
    kind: VcvKind,
    names: &[String],
) -> Result<DMatrix<f64>> {
    let (n, k) = x.shape();
    if residuals.len() != n || clusters.len() != n {
        return Err(Error::estimation("residual, design and cluster lengths differ"));
    }
    if n <= k {
        return Err(Error::estimation(format!("{n} observations for {k} regressors")));
    }
    let bread = gram_cholesky(&gram(x), names)?.inverse();
    let (nf, kf) = (n as f64, k as f64);
    let meat = match kind {
        VcvKind::Classical => {
            let s2 = residuals.norm_squared() / (nf - kf);
            return Ok(bread * s2);
        }
        VcvKind::Robust => {
            let mut scores = x.clone();
            for (i, e) in residuals.iter().enumerate() {
                scores.row_mut(i).scale_mut(*e);
            }
            gram(&scores) * (nf / (nf - kf))
        }
        VcvKind::Cluster { cr1 } => {
            let g = count_clusters(clusters);
            if g < 2 {
                return Err(Error::estimation("cluster-robust covariance needs at least two clusters"));
            }
            let mut scores = x.clone();
            for (i, e) in residuals.iter().enumerate() {
                scores.row_mut(i).scale_mut(*e);
            }
            let mut meat = DMatrix::zeros(k, k);
            for s in cluster_sums(&scores, clusters) {
                meat += &s * s.transpose();
            }
            if cr1 {
                let gf = g as f64;
                meat *= gf / (gf - 1.0) * (nf - 1.0) / (nf - kf);
            }
            meat
        }
    };
    let v = &bread * meat * &bread;
    Ok((&v + v.transpose()) * 0.5)
}

fn r2(y: &DVector<f64>, resid: &DVector<f64>) -> f64 {
    let mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if tss == 0.0 {
        0.0
    } else {
        1.0 - resid.norm_squared() / tss
    }
}

/// Least squares of `y` on `x` with the covariance of `kind`.
pub fn ols_fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
    clusters: &[u64],
    kind: VcvKind,
) -> Result<EstimationResult> {
    let chol = gram_cholesky(&gram(x), names)?;
    let beta = chol.solve(&x.tr_mul(y));
    let resid = y - x * &beta;
    let vcv = cluster_vcv(x, &resid, clusters, kind, names)?;
    Ok(EstimationResult {
        method: Method::Ols,
        outcome: String::new(),
        names: names.to_vec(),
        coefficients: beta,
        vcv,
        vcv_kind: kind,
        r2_within: r2(y, &resid),
        n_obs: x.nrows(),
        n_clusters: count_clusters(clusters),
        residuals: resid,
        instruments: Vec::new(),
        first_stage: None,
        weak_iv: None,
        hansen_j: None,
        omitted: Vec::new(),
    })
}

/// Column-wise concatenation.
pub(crate) fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows().max(b.nrows());
    let mut m = DMatrix::zeros(n, a.ncols() + b.ncols());
    m.view_mut((0, 0), (n, a.ncols())).copy_from(a);
    m.view_mut((0, a.ncols()), (n, b.ncols())).copy_from(b);
    m
}

/// Inputs of a linear IV model with one block of endogenous regressors.
#[derive(Debug, Clone, Copy)]
pub struct IvModel<'a> {
    pub y: &'a DVector<f64>,
    pub endog: &'a DMatrix<f64>,
    pub endog_names: &'a [String],
    pub exog: &'a DMatrix<f64>,
    pub exog_names: &'a [String],
    pub instruments: &'a DMatrix<f64>,
    pub instrument_names: &'a [String],
    pub clusters: &'a [u64],
}

impl IvModel<'_> {
    pub(crate) fn regressors(&self) -> (DMatrix<f64>, Vec<String>) {
        let names = self.endog_names.iter().chain(self.exog_names).cloned().collect();
        (hcat(self.endog, self.exog), names)
    }

    /// Excluded instruments followed by the exogenous regressors.
    pub(crate) fn full_instruments(&self) -> (DMatrix<f64>, Vec<String>) {
        let names = self.instrument_names.iter().chain(self.exog_names).cloned().collect();
        (hcat(self.instruments, self.exog), names)
    }
}

/// Two-stage least squares with first-stage results, effective F and, when
/// overidentified, the Hansen J test.
pub fn tsls_fit(model: IvModel<'_>, kind: VcvKind) -> Result<EstimationResult> {
    let l = model.instruments.ncols();
    let ke = model.endog.ncols();
    if l == 0 {
        return Err(Error::estimation("two-stage least squares needs at least one instrument"));
    }
    if l < ke {
        return Err(Error::estimation(format!("{l} instruments for {ke} endogenous regressors")));
    }
    let (x, names) = model.regressors();
    let (z, znames) = model.full_instruments();
    let zchol = gram_cholesky(&gram(&z), &znames)?;
    let pi = zchol.solve(&z.tr_mul(&x));
    let xhat = &z * &pi;
    let chol = gram_cholesky(&gram(&xhat), &names)?;
    let beta = chol.solve(&xhat.tr_mul(model.y));
    let resid = model.y - &x * &beta;
    let vcv = cluster_vcv(&xhat, &resid, model.clusters, kind, &names)?;

    let first_stage = if ke == 1 {
        let xe = model.endog.column(0).into_owned();
        let fs = ols_fit(&z, &xe, &znames, model.clusters, kind)?;
        let rss_u = fs.residuals.norm_squared();
        let restricted = super::linalg::partial_out(
            model.exog,
            &DMatrix::from_column_slice(xe.len(), 1, xe.as_slice()),
            model.exog_names,
        )?;
        let rss_r = restricted.norm_squared();
        let (n, kz) = (z.nrows() as f64, z.ncols() as f64);
        let partial_f = ((rss_r - rss_u) / l as f64) / (rss_u / (n - kz));
        Some(FirstStage {
            std_errors: fs.vcv.diagonal().map(|v| v.max(0.0).sqrt()),
            names: znames.clone(),
            coefficients: fs.coefficients,
            partial_f,
            r2: fs.r2_within,
            n_obs: fs.n_obs,
        })
    } else {
        None
    };
    let weak_iv = if ke == 1 { Some(effective_f(&model, kind)?) } else { None };
    let hansen = if l > ke { Some(hansen_j(&model, &resid, kind)?) } else { None };

    Ok(EstimationResult {
        method: Method::Tsls,
        outcome: String::new(),
        names,
        coefficients: beta,
        vcv,
        vcv_kind: kind,
        r2_within: r2(model.y, &resid),
        n_obs: x.nrows(),
        n_clusters: count_clusters(model.clusters),
        residuals: resid,
        instruments: model.instrument_names.to_vec(),
        first_stage,
        weak_iv,
        hansen_j: hansen,
        omitted: Vec::new(),
    })
}

/// OLS of `outcome` on `[ln_kd, exog]` of a transformed panel design.
pub fn ols_design(design: &Design, outcome: Outcome, kind: VcvKind) -> Result<EstimationResult> {
    let (x, names) = design.regressors();
    let mut r = ols_fit(&x, design.outcome(outcome), &names, &design.clusters, kind)?;
    r.outcome = outcome.name().into();
    r.omitted = design.omitted.clone();
    Ok(r)
}

/// 2SLS of `outcome` instrumenting `ln_kd` with the design's instruments.
pub fn tsls_design(design: &Design, outcome: Outcome, kind: VcvKind) -> Result<EstimationResult> {
    let endog = DMatrix::from_column_slice(design.n_obs(), 1, design.endog.as_slice());
    let endog_names = ["ln_kd".to_string()];
    let model = IvModel {
        y: design.outcome(outcome),
        endog: &endog,
        endog_names: &endog_names,
        exog: &design.exog,
        exog_names: &design.exog_names,
        instruments: &design.instruments,
        instrument_names: &design.instrument_names,
        clusters: &design.clusters,
    };
    let mut r = tsls_fit(model, kind)?;
    r.outcome = outcome.name().into();
    r.omitted = design.omitted.clone();
    Ok(r)
}
