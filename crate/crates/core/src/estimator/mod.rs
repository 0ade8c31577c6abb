//! Panel fixed-effects OLS and 2SLS with cluster-robust inference,
//! weak-instrument and overidentification diagnostics, and the
//! quantity/quality decomposition.

mod fit;
mod gmm;
mod linalg;
mod panel;
mod weak;

pub use fit::{
    cluster_vcv, ols_design, ols_fit, tsls_design, tsls_fit, EstimationResult, FirstStage, IvModel, Method, VcvKind,
};
pub use gmm::{decompose_gmm, hansen_j, Decomposition, HansenJ};
pub use panel::{Design, Outcome, Panel, PanelObservation, Specification, Transform};
pub use weak::{
    b_tsls, critical_value, effective_f, noncentral_chi2_cdf, noncentral_chi2_quantile, simplified_critical_value,
    WeakIvDiagnostics, NAGAR_TAU, SIMPLIFIED_CRITICAL_VALUES, WEAK_IV_ALPHA,
};

use std::fmt::Write as _;

/// Two-sided normal critical value for confidence `level`.
pub fn ci_z(level: f64) -> f64 {
    fit::normal_quantile(0.5 + level / 2.0)
}

/// Aligned text table with one column per fit: coefficients with standard
/// errors underneath, then sample sizes and diagnostics.
pub fn format_table(columns: &[(String, &EstimationResult)]) -> String {
    let mut terms: Vec<&str> = Vec::new();
    for (_, r) in columns {
        for n in &r.names {
            if !terms.contains(&n.as_str()) {
                terms.push(n);
            }
        }
    }
    let label_w = terms.iter().map(|t| t.len()).chain([26]).max().unwrap_or(26);
    let col_w = columns.iter().map(|(h, _)| h.len()).chain([12]).max().unwrap_or(12) + 2;
    let mut out = String::new();
    let _ = write!(out, "{:<label_w$}", "");
    for (h, _) in columns {
        let _ = write!(out, "{h:>col_w$}");
    }
    out.push('\n');
    let row = |out: &mut String, label: &str, cells: Vec<String>| {
        let _ = write!(out, "{label:<label_w$}");
        for c in cells {
            let _ = write!(out, "{c:>col_w$}");
        }
        out.push('\n');
    };
    for t in &terms {
        row(&mut out, t, columns.iter().map(|(_, r)| r.coef(t).map_or(String::new(), |v| format!("{v:.4}"))).collect());
        row(
            &mut out,
            "",
            columns.iter().map(|(_, r)| r.se(t).map_or(String::new(), |v| format!("({v:.4})"))).collect(),
        );
    }
    row(&mut out, "Observations", columns.iter().map(|(_, r)| r.n_obs.to_string()).collect());
    row(&mut out, "Clusters", columns.iter().map(|(_, r)| r.n_clusters.to_string()).collect());
    row(&mut out, "R2 (within)", columns.iter().map(|(_, r)| format!("{:.3}", r.r2_within)).collect());
    row(
        &mut out,
        "Effective F",
        columns.iter().map(|(_, r)| r.weak_iv.map_or(String::new(), |w| format!("{:.2}", w.effective_f))).collect(),
    );
    row(
        &mut out,
        "Critical value (tau = 10%)",
        columns.iter().map(|(_, r)| r.weak_iv.map_or(String::new(), |w| format!("{:.2}", w.critical_value))).collect(),
    );
    row(
        &mut out,
        "Hansen J p-value",
        columns
            .iter()
            .map(|(_, r)| match (&r.hansen_j, r.method) {
                (Some(j), _) => format!("{:.3}", j.p_value),
                (None, Method::Tsls) => "n/a".into(),
                (None, Method::Ols) => String::new(),
            })
            .collect(),
    );
    out
}

/// `(column, term, estimate, std_error)` rows.
pub fn coefficient_rows(column: &str, r: &EstimationResult) -> Vec<(String, String, f64, f64)> {
    r.names
        .iter()
        .enumerate()
        .map(|(j, n)| (column.to_string(), n.clone(), r.coefficients[j], r.vcv[(j, j)].max(0.0).sqrt()))
        .collect()
}

/// `(column, row_term, col_term, value)` rows of the full covariance.
pub fn vcv_rows(column: &str, r: &EstimationResult) -> Vec<(String, String, String, f64)> {
    let mut out = Vec::new();
    for (a, na) in r.names.iter().enumerate() {
        for (b, nb) in r.names.iter().enumerate() {
            out.push((column.to_string(), na.clone(), nb.clone(), r.vcv[(a, b)]));
        }
    }
    out
}
