use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::fit::{normal_quantile, tsls_design, IvModel, VcvKind};
use super::linalg::{cluster_sums, count_clusters, gram, gram_cholesky, partial_out};
use super::panel::{Design, Outcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HansenJ {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Moment covariance `S = (1/N) sum s s'` of the scores `z_i e_i`, summed
/// within clusters for the cluster kind. No small-sample factor.
fn moment_covariance(z: &DMatrix<f64>, e: &DVector<f64>, clusters: &[u64], kind: VcvKind) -> DMatrix<f64> {
    let n = z.nrows() as f64;
    match kind {
        VcvKind::Classical => gram(z) * (e.norm_squared() / n / n),
        VcvKind::Robust | VcvKind::Cluster { .. } => {
            let mut h = z.clone();
            for (i, v) in e.iter().enumerate() {
                h.row_mut(i).scale_mut(*v);
            }
            if let VcvKind::Cluster { .. } = kind {
                let mut s = DMatrix::zeros(z.ncols(), z.ncols());
                for g in cluster_sums(&h, clusters) {
                    s += &g * g.transpose();
                }
                s / n
            } else {
                gram(&h) / n
            }
        }
    }
}

/// Hansen J from two-step efficient GMM, with the weight matrix estimated
/// from the 2SLS residuals. The exogenous regressors are partialled out
/// first, so only the excluded instruments enter the moment covariance and
/// many fixed effects do not exhaust the cluster count.
pub fn hansen_j(model: &IvModel<'_>, tsls_residuals: &DVector<f64>, kind: VcvKind) -> Result<HansenJ> {
    let l = model.instruments.ncols();
    let ke = model.endog.ncols();
    let df = l.saturating_sub(ke);
    if df == 0 {
        return Err(Error::estimation("Hansen J is undefined for a just-identified model"));
    }
    let rows = model.y.len();
    let mut stacked = DMatrix::zeros(rows, 1 + ke + l);
    stacked.set_column(0, model.y);
    stacked.view_mut((0, 1), (rows, ke)).copy_from(model.endog);
    stacked.view_mut((0, 1 + ke), (rows, l)).copy_from(model.instruments);
    let tilde = partial_out(model.exog, &stacked, model.exog_names)?;
    let y = tilde.column(0).into_owned();
    let x = tilde.columns(1, ke).into_owned();
    let z = tilde.columns(1 + ke, l).into_owned();
    let n = rows as f64;
    let s = moment_covariance(&z, tsls_residuals, model.clusters, kind);
    let s_inv = gram_cholesky(&s, model.instrument_names)
        .map_err(|_| Error::estimation("moment covariance is singular; too few clusters for the instrument count"))?
        .inverse();
    let zx = z.tr_mul(&x);
    let zy = z.tr_mul(&y);
    let a = zx.transpose() * &s_inv * &zx;
    let chol = a.clone().cholesky().ok_or_else(|| Error::estimation("GMM normal matrix is singular"))?;
    let beta = chol.solve(&(zx.transpose() * &s_inv * &zy));
    let e = &y - &x * beta;
    let gbar = z.tr_mul(&e) / n;
    let j = n * (gbar.transpose() * &s_inv * &gbar)[(0, 0)];
    let chi = ChiSquared::new(df as f64).map_err(|e| Error::estimation(e.to_string()))?;
    Ok(HansenJ { statistic: j, df, p_value: 1.0 - chi.cdf(j) })
}

/// Joint estimates of the output equation and its two margins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub beta: f64,
    pub beta_p: f64,
    pub beta_q: f64,
    /// Joint covariance of `(beta, beta_p, beta_q)`.
    pub vcv: [[f64; 3]; 3],
    pub ratio_q: f64,
    pub ratio_q_se: f64,
    pub ratio_q_ci: (f64, f64),
    pub ratio_p: f64,
    pub ratio_p_se: f64,
    pub ratio_p_ci: (f64, f64),
    pub n_obs: usize,
    pub n_clusters: usize,
}

/// Equation-by-equation 2SLS of `ln_y`, `ln_yp`, `ln_yq` on a common design,
/// which is the stacked GMM estimator with the 2SLS weight matrix. The joint
/// covariance comes from the stacked influence functions, clustered; the
/// margin shares get delta-method intervals at `level`.
pub fn decompose_gmm(design: &Design, kind: VcvKind, level: f64) -> Result<Decomposition> {
    let fits: Vec<_> = Outcome::ALL.iter().map(|o| tsls_design(design, *o, kind)).collect::<Result<_>>()?;
    let b: Vec<f64> = fits.iter().map(|f| f.coefficients[0]).collect();
    let (beta, beta_p, beta_q) = (b[0], b[1], b[2]);
    let scale = beta.abs().max(beta_p.abs()).max(beta_q.abs()).max(1.0);
    if (beta - beta_p - beta_q).abs() > 1e-10 * scale {
        return Err(Error::estimation(format!(
            "additivity violated: {beta} != {beta_p} + {beta_q}; outcomes do not satisfy ln_y = ln_yp + ln_yq"
        )));
    }
    if beta.abs() < 1e-12 {
        return Err(Error::estimation("coefficient on ln_kd is zero; margin ratios are undefined"));
    }

    // Influence of observation i on the ln_kd coefficient: a' xhat_i e_i with
    // a the first row of (Xhat'Xhat)^{-1}.
    let (x, names) = design.regressors();
    let mut z = DMatrix::zeros(design.n_obs(), design.instruments.ncols() + design.exog.ncols());
    z.view_mut((0, 0), design.instruments.shape()).copy_from(&design.instruments);
    z.view_mut((0, design.instruments.ncols()), design.exog.shape()).copy_from(&design.exog);
    let zn: Vec<String> = design.instrument_names.iter().chain(&design.exog_names).cloned().collect();
    let pi = gram_cholesky(&gram(&z), &zn)?.solve(&z.tr_mul(&x));
    let xhat = &z * pi;
    let inv = gram_cholesky(&gram(&xhat), &names)?.inverse();
    let a = inv.row(0).transpose();
    let lev: DVector<f64> = &xhat * a;
    let n = design.n_obs();
    let mut scores = DMatrix::zeros(n, 3);
    for (k, f) in fits.iter().enumerate() {
        for i in 0..n {
            scores[(i, k)] = lev[i] * f.residuals[i];
        }
    }
    let g = count_clusters(&design.clusters);
    let mut v = match kind {
        VcvKind::Cluster { .. } => {
            if g < 2 {
                return Err(Error::estimation("cluster-robust covariance needs at least two clusters"));
            }
            let mut m = DMatrix::zeros(3, 3);
            for s in cluster_sums(&scores, &design.clusters) {
                m += &s * s.transpose();
            }
            m
        }
        VcvKind::Robust => gram(&scores),
        VcvKind::Classical => {
            let e: Vec<&DVector<f64>> = fits.iter().map(|f| &f.residuals).collect();
            let mut m = DMatrix::zeros(3, 3);
            for r in 0..3 {
                for c in 0..3 {
                    m[(r, c)] = e[r].dot(e[c]) / (n - x.ncols()) as f64 * inv[(0, 0)];
                }
            }
            m
        }
    };
    let (nf, kf) = (n as f64, x.ncols() as f64);
    match kind {
        VcvKind::Cluster { cr1: true } => v *= g as f64 / (g as f64 - 1.0) * (nf - 1.0) / (nf - kf),
        VcvKind::Robust => v *= nf / (nf - kf),
        _ => {}
    }
    let z_crit = normal_quantile(0.5 + level / 2.0);
    let ratio = |num: usize| -> (f64, f64, (f64, f64)) {
        let r = b[num] / beta;
        // gradient of b_num / b_0 with respect to (b_0, b_num)
        let (d0, d1) = (-b[num] / (beta * beta), 1.0 / beta);
        let var = d0 * d0 * v[(0, 0)] + 2.0 * d0 * d1 * v[(0, num)] + d1 * d1 * v[(num, num)];
        let se = var.max(0.0).sqrt();
        (r, se, (r - z_crit * se, r + z_crit * se))
    };
    let (ratio_q, ratio_q_se, ratio_q_ci) = ratio(2);
    let (ratio_p, ratio_p_se, ratio_p_ci) = ratio(1);
    let mut vcv = [[0.0; 3]; 3];
    for (r, row) in vcv.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = v[(r, c)];
        }
    }
    Ok(Decomposition {
        beta,
        beta_p,
        beta_q,
        vcv,
        ratio_q,
        ratio_q_se,
        ratio_q_ci,
        ratio_p,
        ratio_p_se,
        ratio_p_ci,
        n_obs: n,
        n_clusters: g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn hat(a: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        let g = a.tr_mul(a).try_inverse().unwrap();
        a * (g * a.tr_mul(v))
    }

    #[test]
    fn classical_j_equals_sargan_on_the_full_instrument_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 300;
        let mut draw = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
        let z = draw(n, 3);
        let w = draw(n, 2);
        let u = draw(n, 1);
        let noise = draw(n, 1);
        let x = DMatrix::from_fn(n, 1, |i, _| z[(i, 0)] + 0.5 * z[(i, 1)] - 0.3 * z[(i, 2)] + w[(i, 0)] + u[(i, 0)]);
        let y = DVector::from_fn(n, |i, _| 0.4 * x[(i, 0)] - w[(i, 1)] + u[(i, 0)] + noise[(i, 0)]);

        let xs = DMatrix::from_fn(n, 3, |i, j| if j == 0 { x[(i, 0)] } else { w[(i, j - 1)] });
        let zs = DMatrix::from_fn(n, 5, |i, j| if j < 3 { z[(i, j)] } else { w[(i, j - 3)] });
        let xh = hat(&zs, &xs);
        let beta = xh.tr_mul(&xs).try_inverse().unwrap() * xh.tr_mul(&DMatrix::from_column_slice(n, 1, y.as_slice()));
        let e = DVector::from_fn(n, |i, _| y[i] - (xs.row(i) * &beta)[(0, 0)]);
        let fitted = hat(&zs, &DMatrix::from_column_slice(n, 1, e.as_slice()));
        let sargan = n as f64 * fitted.norm_squared() / e.norm_squared();

        let clusters: Vec<u64> = (0..n as u64).collect();
        let names = |p: &str, k: usize| (0..k).map(|j| format!("{p}{j}")).collect::<Vec<_>>();
        let (en, wn, zn) = (names("x", 1), names("w", 2), names("z", 3));
        let model = IvModel {
            y: &y,
            endog: &x,
            endog_names: &en,
            exog: &w,
            exog_names: &wn,
            instruments: &z,
            instrument_names: &zn,
            clusters: &clusters,
        };
        let j = hansen_j(&model, &e, VcvKind::Classical).unwrap();
        assert_eq!(j.df, 2);
        assert!((j.statistic - sargan).abs() < 1e-9 * sargan.max(1.0), "{} vs {sargan}", j.statistic);
    }

    #[test]
    fn just_identified_has_no_j() {
        let n = 20;
        let y = DVector::from_fn(n, |i, _| i as f64);
        let x = DMatrix::from_fn(n, 1, |i, _| (i * i) as f64);
        let z = DMatrix::from_fn(n, 1, |i, _| (i % 3) as f64);
        let w = DMatrix::from_element(n, 1, 1.0);
        let clusters: Vec<u64> = (0..n as u64).collect();
        let s = |v: &str| vec![v.to_string()];
        let (en, wn, zn) = (s("x"), s("c"), s("z"));
        let model = IvModel {
            y: &y,
            endog: &x,
            endog_names: &en,
            exog: &w,
            exog_names: &wn,
            instruments: &z,
            instrument_names: &zn,
            clusters: &clusters,
        };
        assert!(matches!(hansen_j(&model, &y, VcvKind::Robust), Err(Error::Estimation(_))));
    }
}
