use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{InventorId, Period};

/// One inventor-period row of the estimation panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelObservation {
    pub inventor: InventorId,
    pub period: Period,
    pub ln_y: f64,
    pub ln_yp: f64,
    pub ln_yq: f64,
    pub ln_kd: f64,
    pub ln_k: f64,
    pub ln_k2: f64,
    /// No prior patents: `ln_k` and `ln_k2` are entered as zero.
    pub first_patent: bool,
    /// Values aligned with [`Panel::control_names`].
    pub controls: Vec<f64>,
    pub ipc_class: String,
    pub cluster: u64,
    /// Log instruments aligned with [`Panel::instrument_orders`].
    pub instruments: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub rows: Vec<PanelObservation>,
    pub control_names: Vec<String>,
    pub instrument_orders: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// Demeaning within inventor.
    #[default]
    Within,
    /// Second period minus first period, one row per inventor.
    FirstDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    LnY,
    LnYp,
    LnYq,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::LnY, Outcome::LnYp, Outcome::LnYq];

    pub fn name(self) -> &'static str {
        match self {
            Outcome::LnY => "ln_y",
            Outcome::LnYp => "ln_yp",
            Outcome::LnYq => "ln_yq",
        }
    }

    fn of(self, r: &PanelObservation) -> f64 {
        match self {
            Outcome::LnY => r.ln_y,
            Outcome::LnYp => r.ln_yp,
            Outcome::LnYq => r.ln_yq,
        }
    }
}

/// Which regressors enter the structural equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Specification {
    pub transform: Transform,
    pub scope_terms: bool,
    pub controls: bool,
    pub period_effect: bool,
    pub ipc_effects: bool,
    /// Instrument orders to use, a subset of the panel's orders.
    pub instruments: Vec<usize>,
}

impl Default for Specification {
    fn default() -> Self {
        Specification {
            transform: Transform::Within,
            scope_terms: true,
            controls: true,
            period_effect: true,
            ipc_effects: true,
            instruments: vec![3, 4, 5],
        }
    }
}

/// Transformed estimation arrays. The endogenous regressor `ln_kd` is kept
/// apart from the exogenous columns.
#[derive(Debug, Clone)]
pub struct Design {
    pub endog: DVector<f64>,
    pub exog: DMatrix<f64>,
    pub exog_names: Vec<String>,
    pub instruments: DMatrix<f64>,
    pub instrument_names: Vec<String>,
    pub outcomes: BTreeMap<Outcome, DVector<f64>>,
    pub clusters: Vec<u64>,
    /// Columns dropped because they are identically zero after the transform.
    pub omitted: Vec<String>,
    pub inventors: Vec<InventorId>,
}

impl Design {
    pub fn n_obs(&self) -> usize {
        self.endog.len()
    }

    pub fn outcome(&self, o: Outcome) -> &DVector<f64> {
        &self.outcomes[&o]
    }

    /// Regressor matrix `[ln_kd, exog]` and its column names.
    pub fn regressors(&self) -> (DMatrix<f64>, Vec<String>) {
        let n = self.n_obs();
        let mut x = DMatrix::zeros(n, 1 + self.exog.ncols());
        x.set_column(0, &self.endog);
        x.view_mut((0, 1), (n, self.exog.ncols())).copy_from(&self.exog);
        let mut names = vec!["ln_kd".to_string()];
        names.extend(self.exog_names.iter().cloned());
        (x, names)
    }
}

impl Panel {
    /// Checks the balanced two-period layout, consistent cluster ids and the
    /// identity `ln_y = ln_yp + ln_yq`.
    pub fn validate(&self) -> Result<()> {
        let mut by: BTreeMap<InventorId, Vec<&PanelObservation>> = BTreeMap::new();
        for r in &self.rows {
            if r.controls.len() != self.control_names.len() {
                return Err(Error::data(format!("inventor {} has {} controls", r.inventor, r.controls.len())));
            }
            if r.instruments.len() != self.instrument_orders.len() {
                return Err(Error::data(format!("inventor {} has {} instruments", r.inventor, r.instruments.len())));
            }
            let tol = 1e-12 * r.ln_y.abs().max(1.0);
            if (r.ln_y - r.ln_yp - r.ln_yq).abs() > tol {
                return Err(Error::data(format!("inventor {} violates ln_y = ln_yp + ln_yq", r.inventor)));
            }
            by.entry(r.inventor).or_default().push(r);
        }
        for (id, rows) in &by {
            if rows.len() != 2 || rows[0].period == rows[1].period {
                return Err(Error::data(format!("inventor {id} is not observed once in each of two periods")));
            }
            if rows[0].cluster != rows[1].cluster {
                return Err(Error::data(format!("inventor {id} changes cluster between periods")));
            }
        }
        let periods: BTreeSet<Period> = self.rows.iter().map(|r| r.period).collect();
        if periods.len() > 2 {
            return Err(Error::data("panel spans more than two periods"));
        }
        Ok(())
    }

    pub fn inventor_count(&self) -> usize {
        self.rows.iter().map(|r| r.inventor).collect::<BTreeSet<_>>().len()
    }

    /// Rows grouped by inventor in id order, earlier period first.
    fn pairs(&self) -> Vec<(&PanelObservation, &PanelObservation)> {
        let mut by: BTreeMap<InventorId, Vec<&PanelObservation>> = BTreeMap::new();
        for r in &self.rows {
            by.entry(r.inventor).or_default().push(r);
        }
        by.into_values()
            .map(|mut v| {
                v.sort_by_key(|r| r.period);
                (v[0], v[1])
            })
            .collect()
    }

    pub fn design(&self, spec: &Specification) -> Result<Design> {
        self.validate()?;
        let pairs = self.pairs();
        if pairs.is_empty() {
            return Err(Error::estimation("empty panel"));
        }
        let mut iv_cols = Vec::new();
        for ell in &spec.instruments {
            let pos = self
                .instrument_orders
                .iter()
                .position(|o| o == ell)
                .ok_or_else(|| Error::config(format!("instrument order {ell} not in panel")))?;
            iv_cols.push(pos);
        }
        let classes: Vec<String> = if spec.ipc_effects {
            let set: BTreeSet<&str> = self.rows.iter().map(|r| r.ipc_class.as_str()).collect();
            set.into_iter().skip(1).map(str::to_string).collect()
        } else {
            Vec::new()
        };

        let mut exog_names: Vec<String> = Vec::new();
        if spec.scope_terms {
            exog_names.extend(["ln_k".into(), "ln_k_sq".into(), "first_patent".into()]);
        }
        if spec.controls {
            exog_names.extend(self.control_names.iter().cloned());
        }
        if spec.period_effect {
            exog_names.push("period_2".into());
        }
        exog_names.extend(classes.iter().map(|c| format!("ipc_{c}")));
        let raw_exog = |r: &PanelObservation, second: bool| -> Vec<f64> {
            let mut v = Vec::with_capacity(exog_names.len());
            if spec.scope_terms {
                v.extend([r.ln_k, r.ln_k2, if r.first_patent { 1.0 } else { 0.0 }]);
            }
            if spec.controls {
                v.extend(r.controls.iter().copied());
            }
            if spec.period_effect {
                v.push(if second { 1.0 } else { 0.0 });
            }
            v.extend(classes.iter().map(|c| if &r.ipc_class == c { 1.0 } else { 0.0 }));
            v
        };

        let rows_out = match spec.transform {
            Transform::Within => 2 * pairs.len(),
            Transform::FirstDifference => pairs.len(),
        };
        let kx = exog_names.len();
        let mut endog = DVector::zeros(rows_out);
        let mut exog = DMatrix::zeros(rows_out, kx);
        let mut ivs = DMatrix::zeros(rows_out, iv_cols.len());
        let mut outcomes: BTreeMap<Outcome, DVector<f64>> =
            Outcome::ALL.iter().map(|o| (*o, DVector::zeros(rows_out))).collect();
        let mut clusters = Vec::with_capacity(rows_out);
        let mut inventors = Vec::with_capacity(rows_out);
        for (k, (a, b)) in pairs.iter().enumerate() {
            let (xa, xb) = (raw_exog(a, false), raw_exog(b, true));
            let mut put = |row: usize, w: f64| {
                // within: x_t - mean = w * (x_b - x_a) with w = -1/2, +1/2; difference: w = 1
                endog[row] = w * (b.ln_kd - a.ln_kd);
                for j in 0..kx {
                    exog[(row, j)] = w * (xb[j] - xa[j]);
                }
                for (j, &c) in iv_cols.iter().enumerate() {
                    ivs[(row, j)] = w * (b.instruments[c] - a.instruments[c]);
                }
                for o in Outcome::ALL {
                    outcomes.get_mut(&o).unwrap()[row] = w * (o.of(b) - o.of(a));
                }
            };
            match spec.transform {
                Transform::Within => {
                    put(2 * k, -0.5);
                    put(2 * k + 1, 0.5);
                    clusters.extend([a.cluster, a.cluster]);
                    inventors.extend([a.inventor, a.inventor]);
                }
                Transform::FirstDifference => {
                    put(k, 1.0);
                    clusters.push(a.cluster);
                    inventors.push(a.inventor);
                }
            }
        }

        let mut keep = Vec::new();
        let mut omitted = Vec::new();
        for (j, name) in exog_names.iter().enumerate() {
            if exog.column(j).iter().all(|v| *v == 0.0) {
                omitted.push(name.clone());
            } else {
                keep.push(j);
            }
        }
        // Category dummies spanned by the other regressors (classes whose
        // switches are collinear after the transform) are dropped too.
        let mut x = DMatrix::zeros(rows_out, 1 + keep.len());
        x.set_column(0, &endog);
        for (c, &j) in keep.iter().enumerate() {
            x.set_column(c + 1, &exog.column(j));
        }
        let dependent: BTreeSet<usize> = super::linalg::dependent_columns(&super::linalg::gram(&x))
            .into_iter()
            .filter(|&c| c > 0 && keep[c - 1] >= kx - classes.len())
            .map(|c| keep[c - 1])
            .collect();
        omitted.extend(dependent.iter().map(|&j| exog_names[j].clone()));
        keep.retain(|j| !dependent.contains(j));
        let exog = exog.select_columns(&keep);
        let exog_names = keep.iter().map(|&j| exog_names[j].clone()).collect();
        if endog.iter().all(|v| *v == 0.0) {
            return Err(Error::Collinear(vec!["ln_kd".into()]));
        }
        Ok(Design {
            endog,
            exog,
            exog_names,
            instruments: ivs,
            instrument_names: spec.instruments.iter().map(|l| format!("ln_kd_iv{l}")).collect(),
            outcomes,
            clusters,
            omitted,
            inventors,
        })
    }
}
