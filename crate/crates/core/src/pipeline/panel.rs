use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::measure::Measurement;
use super::sample::Sample;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::estimator::{Panel, PanelObservation};
use crate::geo::{assign_ua, delineate_uas, GeoPoint, NeighborhoodContext, NeighborhoodCovariates, UaAssignment};
use crate::measures::{FirmCovariates, GroupScopeIndex};
use crate::types::{CategoryLevel, InventorId, PatentId, Period};

/// Cluster key of rural inventors.
pub const RURAL_CLUSTER: u64 = 0;

/// Per-row side information that does not enter the baseline regressions.
#[derive(Debug, Clone, Default)]
pub struct PanelExtras {
    /// Firm and establishment covariates aligned with the panel rows.
    pub groups: Vec<FirmCovariates>,
    pub clusters: BTreeMap<InventorId, UaAssignment>,
}

/// Most frequent IPC class over the inventor's patents of the period; ties
/// go to the smallest code.
fn modal_class(corpus: &Corpus, patents: impl Iterator<Item = PatentId>) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for id in patents {
        if let Ok(k) = corpus.patents.binary_search_by_key(&id, |p| p.id) {
            *counts.entry(CategoryLevel::Class.truncate(&corpus.patents[k].category)).or_default() += 1;
        }
    }
    let mut best: Option<(&str, usize)> = None;
    for (c, n) in counts {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((c, n));
        }
    }
    best.map(|(c, _)| c.to_string()).unwrap_or_default()
}

fn context(corpus: &Corpus, cfg: &PipelineConfig, t: Period) -> Result<NeighborhoodContext> {
    let locations: Vec<(InventorId, GeoPoint)> =
        corpus.inventors.iter().filter(|r| r.period == t).filter_map(|r| r.location.map(|p| (r.inventor, p))).collect();
    let prev = Period(t.0.saturating_sub(1));
    let rnd: HashMap<String, f64> =
        corpus.industry_rnd.iter().filter(|r| r.period == prev).map(|r| (r.industry.clone(), r.expenditure)).collect();
    let previous: Vec<_> = corpus.establishments.iter().filter(|(p, _)| *p == prev).map(|(_, e)| e.clone()).collect();
    let current: Vec<_> = corpus.establishments.iter().filter(|(p, _)| *p == t).map(|(_, e)| e.clone()).collect();
    NeighborhoodContext::new(cfg.measures.radii, &locations, &rnd, &previous, &current, &corpus.population)
}

pub fn control_names(cfg: &PipelineConfig) -> Vec<String> {
    let mut names = Vec::new();
    if cfg.estimation.neighborhood_controls {
        names.extend(NeighborhoodCovariates::NAMES.iter().map(|s| s.to_string()));
    }
    if cfg.estimation.firm_controls {
        names.extend(["ln_f", "ln_s_f"].map(String::from));
    }
    names
}

/// Builds the balanced panel of the selected inventors.
pub fn build_panel(
    m: &Measurement,
    sample: &Sample,
    corpus: &Corpus,
    cfg: &PipelineConfig,
) -> Result<(Panel, PanelExtras)> {
    let uas = if corpus.uas.is_empty() { delineate_uas(&corpus.population) } else { corpus.uas.clone() };
    let first = m.panel[0].period;
    let located: Vec<(InventorId, GeoPoint)> = sample
        .inventors
        .iter()
        .map(|&i| {
            m.membership
                .location(i, first)
                .map(|p| (i, p))
                .ok_or_else(|| Error::data(format!("inventor {i} has no location in period {first}")))
        })
        .collect::<Result<_>>()?;
    let clusters = assign_ua(&located, &uas);

    let need_groups = cfg.estimation.firm_controls || cfg.counterfactual.group_controls;
    let names = control_names(cfg);
    let mut per_period: Vec<Vec<(PanelObservation, FirmCovariates)>> = Vec::with_capacity(2);
    for (p, data) in m.panel.iter().enumerate() {
        let t = data.period;
        let ctx = if cfg.estimation.neighborhood_controls { Some(context(corpus, cfg, t)?) } else { None };
        let groups = need_groups.then(|| GroupScopeIndex::new(&m.membership, &m.scopes, t));
        let rows: Vec<(PanelObservation, FirmCovariates)> = sample
            .inventors
            .par_iter()
            .enumerate()
            .map(|(k, &i)| -> Result<(PanelObservation, FirmCovariates)> {
                let g = &data.graph;
                let node = g.require(i)?;
                let pm = data.measures[node]
                    .ok_or_else(|| Error::data(format!("inventor {i} has no measures in period {t}")))?;
                let collaborators: Vec<InventorId> = g.neighbors(node).iter().map(|&j| g.id(j)).collect();
                let scope = m.scopes.cumulative(i, t);
                let ln_k = if scope > 0 { (scope as f64).ln() } else { 0.0 };
                let mut controls = Vec::with_capacity(names.len());
                if let Some(ctx) = &ctx {
                    let at = m
                        .membership
                        .location(i, t)
                        .ok_or_else(|| Error::data(format!("inventor {i} has no location")))?;
                    let nb = ctx.covariates(at, |j| collaborators.binary_search(&j).is_ok());
                    controls.extend(nb.log_values());
                }
                let fc = match &groups {
                    Some(idx) => idx.covariates(&m.membership, &m.scopes, i, &collaborators)?,
                    None => FirmCovariates::default(),
                };
                if cfg.estimation.firm_controls {
                    controls.push((fc.f as f64).ln_1p());
                    controls.push((fc.s_f as f64).ln_1p());
                }
                let cluster = match clusters[&i] {
                    UaAssignment::Ua(id) => id.0,
                    UaAssignment::Rural => RURAL_CLUSTER,
                };
                let ln_y = pm.y.ln();
                let ln_yp = pm.y_p.ln();
                Ok((
                    PanelObservation {
                        inventor: i,
                        period: t,
                        ln_y,
                        ln_yp,
                        ln_yq: pm.y_q.ln(),
                        ln_kd: pm.k_d.ln(),
                        ln_k,
                        ln_k2: ln_k * ln_k,
                        first_patent: scope == 0,
                        controls,
                        ipc_class: modal_class(corpus, g.patents_of(node).iter().map(|&q| g.patent(q).0)),
                        cluster,
                        instruments: sample.instruments[p][k].iter().map(|v| v.ln()).collect(),
                    },
                    fc,
                ))
            })
            .collect::<Result<_>>()?;
        per_period.push(rows);
    }
    let mut rows = Vec::with_capacity(2 * sample.inventors.len());
    let mut groups = Vec::with_capacity(rows.capacity());
    let (b, a) = (per_period.pop().unwrap(), per_period.pop().unwrap());
    for (ra, rb) in a.into_iter().zip(b) {
        rows.push(ra.0);
        groups.push(ra.1);
        rows.push(rb.0);
        groups.push(rb.1);
    }
    let panel = Panel { rows, control_names: names, instrument_orders: sample.instrument_orders.clone() };
    panel.validate()?;
    Ok((panel, PanelExtras { groups, clusters }))
}
