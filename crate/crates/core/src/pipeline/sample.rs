use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::config::PipelineConfig;
use super::measure::Measurement;
use crate::error::{Error, Result};
use crate::network::{build_instrument, HopSets};
use crate::types::InventorId;

/// Sample rules in the order they are checked; an inventor is charged to
/// the first rule it fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExclusionRule {
    NotInBothPeriods,
    EstablishmentChanged,
    NoCollaborator,
    NonpositiveOutput,
    NonpositiveKd,
    MissingLocation,
    MissingOrder,
    NonpositiveInstrument,
}

impl ExclusionRule {
    pub const ALL: [ExclusionRule; 8] = [
        ExclusionRule::NotInBothPeriods,
        ExclusionRule::EstablishmentChanged,
        ExclusionRule::NoCollaborator,
        ExclusionRule::NonpositiveOutput,
        ExclusionRule::NonpositiveKd,
        ExclusionRule::MissingLocation,
        ExclusionRule::MissingOrder,
        ExclusionRule::NonpositiveInstrument,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExclusionRule::NotInBothPeriods => "not_in_both_periods",
            ExclusionRule::EstablishmentChanged => "establishment_changed",
            ExclusionRule::NoCollaborator => "no_collaborator",
            ExclusionRule::NonpositiveOutput => "nonpositive_output",
            ExclusionRule::NonpositiveKd => "nonpositive_kd",
            ExclusionRule::MissingLocation => "missing_location",
            ExclusionRule::MissingOrder => "missing_order",
            ExclusionRule::NonpositiveInstrument => "nonpositive_instrument",
        }
    }
}

impl fmt::Display for ExclusionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExclusionCounts {
    /// Inventors with a patent in either panel period.
    pub universe: usize,
    pub retained: usize,
    pub excluded: BTreeMap<ExclusionRule, usize>,
}

impl ExclusionCounts {
    pub fn count(&self, rule: ExclusionRule) -> usize {
        self.excluded.get(&rule).copied().unwrap_or(0)
    }

    /// `(rule, count)` for every rule, zeros included, then the totals.
    pub fn rows(&self) -> Vec<(String, usize)> {
        let mut v: Vec<(String, usize)> =
            ExclusionRule::ALL.iter().map(|r| (r.name().to_string(), self.count(*r))).collect();
        v.push(("universe".into(), self.universe));
        v.push(("retained".into(), self.retained));
        v
    }
}

impl fmt::Display for ExclusionCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.rows().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Panel inventors with their frontiers and instrument levels per period.
pub struct Sample {
    pub inventors: Vec<InventorId>,
    /// `hops[p][k]` for panel period `p` and inventor `k`.
    pub hops: [Vec<HopSets>; 2],
    /// `instruments[p][k][j]`: mean `k^D` over the `j`-th configured order.
    pub instruments: [Vec<Vec<f64>>; 2],
    pub instrument_orders: Vec<usize>,
    pub exclusions: ExclusionCounts,
    pub excluded: BTreeMap<InventorId, ExclusionRule>,
}

/// Applies the panel rules: present in both periods, same establishment,
/// at least one collaborator, positive `y` and `k^D`, known location,
/// non-empty frontier at the sample order, positive instruments.
pub fn select_sample(m: &Measurement, cfg: &PipelineConfig) -> Result<Sample> {
    let [pa, pb] = &m.panel;
    let universe: BTreeSet<InventorId> = pa.graph.ids().iter().chain(pb.graph.ids()).copied().collect();
    let mut excluded = BTreeMap::new();
    let mut candidates = Vec::new();
    let location_known =
        |i: InventorId, t| m.membership.establishment(i, t).is_some() && location_of(m, i, t).is_some();
    for &i in &universe {
        let rule = (|| {
            let (Some(_), Some(_)) = (pa.graph.node(i), pb.graph.node(i)) else {
                return Some(ExclusionRule::NotInBothPeriods);
            };
            let ea = m.membership.establishment(i, pa.period);
            if ea.is_none() || ea != m.membership.establishment(i, pb.period) {
                return Some(ExclusionRule::EstablishmentChanged);
            }
            let (Some(ma), Some(mb)) = (pa.measures_of(i), pb.measures_of(i)) else {
                return Some(ExclusionRule::NoCollaborator);
            };
            if !(ma.y > 0.0 && mb.y > 0.0) {
                return Some(ExclusionRule::NonpositiveOutput);
            }
            if !(ma.k_d > 0.0 && mb.k_d > 0.0) {
                return Some(ExclusionRule::NonpositiveKd);
            }
            if !(location_known(i, pa.period) && location_known(i, pb.period)) {
                return Some(ExclusionRule::MissingLocation);
            }
            None
        })();
        match rule {
            Some(r) => {
                excluded.insert(i, r);
            }
            None => candidates.push(i),
        }
    }

    let orders = cfg.estimation.instrument_orders();
    let max_order = cfg.estimation.max_order();
    let hops = [pa.hops(&candidates, max_order)?, pb.hops(&candidates, max_order)?];
    let mut keep = Vec::new();
    let mut kept_hops: [Vec<HopSets>; 2] = [Vec::new(), Vec::new()];
    let mut kept_iv: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    'inventor: for (k, &i) in candidates.iter().enumerate() {
        let mut levels: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for (p, data) in m.panel.iter().enumerate() {
            if hops[p][k].order(cfg.estimation.sample_order).is_empty() {
                excluded.insert(i, ExclusionRule::MissingOrder);
                continue 'inventor;
            }
            for &l in &orders {
                match build_instrument(&data.graph, data.kd.as_slice(), &hops[p][k], l)? {
                    Some(v) if v > 0.0 => levels[p].push(v),
                    Some(_) => {
                        excluded.insert(i, ExclusionRule::NonpositiveInstrument);
                        continue 'inventor;
                    }
                    None => {
                        excluded.insert(i, ExclusionRule::MissingOrder);
                        continue 'inventor;
                    }
                }
            }
        }
        keep.push(i);
        let [la, lb] = levels;
        kept_iv[0].push(la);
        kept_iv[1].push(lb);
        kept_hops[0].push(hops[0][k].clone());
        kept_hops[1].push(hops[1][k].clone());
    }

    let mut counts = ExclusionCounts { universe: universe.len(), retained: keep.len(), ..Default::default() };
    for r in excluded.values() {
        *counts.excluded.entry(*r).or_default() += 1;
    }
    if keep.is_empty() {
        return Err(Error::data(format!("sample is empty after selection: {counts}")));
    }
    Ok(Sample {
        inventors: keep,
        hops: kept_hops,
        instruments: kept_iv,
        instrument_orders: orders,
        exclusions: counts,
        excluded,
    })
}

pub(crate) fn location_of(m: &Measurement, i: InventorId, t: crate::types::Period) -> Option<crate::geo::GeoPoint> {
    m.membership.location(i, t)
}
