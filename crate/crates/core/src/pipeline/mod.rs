//! End-to-end pipeline: ingestion, measurement, sample selection, panel
//! construction, estimation, diagnostics and report files.
//!
//! Output files, all comma-separated with a header line:
//!
//! | file | columns |
//! |---|---|
//! | `measures.csv` | period, inventor, firm, establishment, n, y_bar, y, y_p, y_q, k_d, k |
//! | `exclusions.csv` | rule, count |
//! | `panel.csv` | inventor, period, ln_y, ln_yp, ln_yq, ln_kd, ln_k, ln_k2, first_patent, controls..., ipc_class, cluster, iv_l... |
//! | `estimates.csv` | column, outcome, term, estimate, std_error, ci_low, ci_high |
//! | `vcv.csv` | column, row, col, value |
//! | `diagnostics.csv` | column, method, n_obs, n_clusters, r2_within, effective_f, critical_value, critical_value_simplified, k_eff, hansen_j, hansen_df, hansen_p |
//! | `first_stage.csv` | column, term, estimate, std_error, partial_f, r2, n_obs |
//! | `jaccard.csv` | period, order, mean, inventors |
//! | `decomposition.csv` | quantity, estimate, std_error, ci_low, ci_high |
//! | `counterfactual.csv` | draw, beta_tilde, ratio, dropped, violations |
//! | `counterfactual_summary.csv` | draws, completed, skipped, beta_hat, mean, sd, q05, q25, q50, q75, q95 |
//!
//! `table.txt` holds the aligned coefficient table and `manifest.txt` the
//! SHA-256 of every file above with the configuration hash and seed.
//! `run.log` collects `key=value` lines and is not part of the manifest.
//! A failed run leaves `INCOMPLETE` in the output directory.

mod config;
mod measure;
mod output;
mod panel;
mod sample;

pub use config::{
    apply_override, CounterfactualConfig, EstimationConfig, MeasureConfig, PeriodConfig, PipelineConfig, RewireLevel,
    VcvChoice,
};
pub use measure::{measure, patent_values, Measurement, PeriodData};
pub use output::{Manifest, OutputWriter, RunLog};
pub use panel::{build_panel, control_names, PanelExtras, RURAL_CLUSTER};
pub use sample::{select_sample, ExclusionCounts, ExclusionRule, Sample};

use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Corpus, IngestLog};
use crate::counterfactual::{run_ensemble, Ensemble, EnsembleConfig, PeriodRewiring, RewireConstraint};
use crate::error::Result;
use crate::estimator::{
    decompose_gmm, ols_design, tsls_design, Decomposition, EstimationResult, Outcome, Panel, Specification,
};
use crate::measures::ScopeHistory;
use crate::network::{intern_scopes, jaccard_profile};

/// Column label of an instrument set: `IV3-5` for a contiguous range,
/// `IV3,5` otherwise.
pub fn iv_label(orders: &[usize]) -> String {
    let contiguous = orders.windows(2).all(|w| w[1] == w[0] + 1);
    match orders {
        [one] => format!("IV{one}"),
        [first, .., last] if contiguous => format!("IV{first}-{last}"),
        _ => format!("IV{}", orders.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(",")),
    }
}

pub fn specification(cfg: &PipelineConfig, instruments: Vec<usize>) -> Specification {
    Specification {
        transform: cfg.estimation.transform,
        scope_terms: true,
        controls: true,
        period_effect: true,
        ipc_effects: cfg.estimation.ipc_effects,
        instruments,
    }
}

/// Fitted columns: OLS, the configured instrument set and, when it has more
/// than one order, each order alone.
pub struct Estimates {
    pub columns: Vec<(String, EstimationResult)>,
    pub decomposition: Decomposition,
}

impl Estimates {
    /// The IV column with the full configured instrument set.
    pub fn main_iv(&self) -> &EstimationResult {
        &self.columns[1].1
    }
}

pub fn estimate(panel: &Panel, cfg: &PipelineConfig) -> Result<Estimates> {
    let orders = cfg.estimation.instrument_orders();
    let kind = cfg.estimation.vcv_kind();
    let full = panel.design(&specification(cfg, orders.clone()))?;
    let mut columns = vec![
        ("OLS".to_string(), ols_design(&full, Outcome::LnY, kind)?),
        (iv_label(&orders), tsls_design(&full, Outcome::LnY, kind)?),
    ];
    if orders.len() > 1 {
        for &l in &orders {
            let d = panel.design(&specification(cfg, vec![l]))?;
            columns.push((iv_label(&[l]), tsls_design(&d, Outcome::LnY, kind)?));
        }
    }
    let decomposition = decompose_gmm(&full, kind, cfg.estimation.ci_level)?;
    Ok(Estimates { columns, decomposition })
}

/// Mean Jaccard similarity by order over the sample, per panel period:
/// `(mean, inventors contributing)` for orders `0..=max`.
pub fn jaccard_profiles(
    m: &Measurement,
    sample: &Sample,
    corpus: &Corpus,
    cfg: &PipelineConfig,
) -> [Vec<(f64, usize)>; 2] {
    let scopes = ScopeHistory::new(&corpus.patents, &m.periodization, cfg.measures.jaccard_level);
    let origin = cfg.measures.jaccard_origin();
    let mut out: [Vec<(f64, usize)>; 2] = [Vec::new(), Vec::new()];
    for (p, data) in m.panel.iter().enumerate() {
        let interned = intern_scopes(&data.graph, &scopes.period_scopes(data.period));
        let profiles: Vec<Vec<Option<f64>>> =
            sample.hops[p].par_iter().map(|h| jaccard_profile(h, &interned, origin)).collect();
        let orders = profiles.first().map_or(0, Vec::len);
        out[p] = (0..orders)
            .map(|l| {
                let vals: Vec<f64> = profiles.iter().filter_map(|v| v[l]).collect();
                let mean = if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 };
                (mean, vals.len())
            })
            .collect();
    }
    out
}

/// Rewiring ensemble against the IV estimate of the full instrument set.
pub fn counterfactual(
    m: &Measurement,
    sample: &Sample,
    panel: &Panel,
    extras: &PanelExtras,
    beta_hat: f64,
    cfg: &PipelineConfig,
) -> Result<Ensemble> {
    let c = &cfg.counterfactual;
    let constraints = [
        RewireConstraint::build(&m.panel[0].graph, &m.membership, &sample.hops[0], c.level)?,
        RewireConstraint::build(&m.panel[1].graph, &m.membership, &sample.hops[1], c.level)?,
    ];
    let periods = [0, 1].map(|p| PeriodRewiring {
        graph: &m.panel[p].graph,
        weights: &m.panel[p].weights,
        constraint: &constraints[p],
    });
    let ecfg = EnsembleConfig {
        draws: c.draws,
        seed: cfg.seed,
        per_period: c.per_period,
        group_controls: c.group_controls,
        max_skip_rate: c.max_skip_rate,
        vcv: cfg.estimation.vcv_kind(),
        transform: cfg.estimation.transform,
        ipc_effects: cfg.estimation.ipc_effects,
    };
    run_ensemble(panel, &extras.groups, periods, &m.membership, beta_hat, &ecfg)
}

/// Everything a pipeline run produced.
pub struct Report {
    pub ingest: IngestLog,
    pub measurement: Measurement,
    pub sample: Sample,
    pub panel: Panel,
    pub extras: PanelExtras,
    pub estimates: Estimates,
    pub jaccard: [Vec<(f64, usize)>; 2],
    pub counterfactual: Option<Ensemble>,
    pub manifest: Manifest,
    pub log: RunLog,
}

/// Reads the inputs of `cfg` and runs every stage, writing the report files
/// to `cfg.output_dir` as each stage finishes.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Report> {
    let (corpus, ingest) = Corpus::read(&cfg.inputs)?;
    run_on_corpus(corpus, ingest, cfg)
}

/// Same as [`run_pipeline`] on a corpus already in memory.
pub fn run_on_corpus(corpus: Corpus, ingest: IngestLog, cfg: &PipelineConfig) -> Result<Report> {
    cfg.validate()?;
    let mut out = OutputWriter::create(&cfg.output_dir)?;
    let result = stages(&corpus, ingest, cfg, &mut out);
    match result {
        Ok(mut report) => {
            report.manifest = out.finish(cfg)?;
            Ok(report)
        }
        Err(e) => {
            out.fail(&e);
            Err(e)
        }
    }
}

fn stages(corpus: &Corpus, ingest: IngestLog, cfg: &PipelineConfig, out: &mut OutputWriter) -> Result<Report> {
    let mut log = RunLog::default();
    log.line(format!(
        "stage=ingest patents={} citations={} external_citations={} inventor_records={}",
        ingest.patents, ingest.citations, ingest.external_citations, ingest.inventor_records
    ));

    let measurement = measure(corpus, cfg)?;
    out.measures(&measurement)?;
    for d in &measurement.panel {
        log.line(format!("stage=measure period={} inventors={}", d.period, d.graph.node_count()));
    }

    let sample = select_sample(&measurement, cfg)?;
    out.exclusions(&sample.exclusions)?;
    log.line(format!("stage=sample {}", sample.exclusions));

    let (panel, extras) = build_panel(&measurement, &sample, corpus, cfg)?;
    out.panel(&panel)?;

    let estimates = estimate(&panel, cfg)?;
    out.estimates(&estimates, cfg.estimation.ci_level)?;
    let b = estimates.main_iv().coefficients[0];
    log.line(format!("stage=estimate n_obs={} beta_iv={b}", estimates.main_iv().n_obs));

    let jaccard = jaccard_profiles(&measurement, &sample, corpus, cfg);
    out.jaccard(&measurement, &jaccard)?;

    let counterfactual = if cfg.counterfactual.enabled {
        let e = counterfactual(&measurement, &sample, &panel, &extras, b, cfg)?;
        for (d, msg) in &e.skipped {
            log.line(format!("stage=counterfactual skipped_draw={d} error={msg:?}"));
        }
        log.line(format!(
            "stage=counterfactual draws={} completed={} skipped={} mean_ratio={}",
            e.summary.draws, e.summary.completed, e.summary.skipped, e.summary.mean
        ));
        out.counterfactual(&e)?;
        Some(e)
    } else {
        None
    };
    out.log(&log)?;
    Ok(Report {
        ingest,
        measurement,
        sample,
        panel,
        extras,
        estimates,
        jaccard,
        counterfactual,
        manifest: Manifest::default(),
        log,
    })
}

/// Loads a config file with `key=value` overrides and runs the pipeline.
pub fn run_config(path: &Path, overrides: &[String]) -> Result<Report> {
    run_pipeline(&PipelineConfig::load(path, overrides)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iv_labels() {
        assert_eq!(iv_label(&[3, 4, 5]), "IV3-5");
        assert_eq!(iv_label(&[3]), "IV3");
        assert_eq!(iv_label(&[3, 5]), "IV3,5");
    }
}
