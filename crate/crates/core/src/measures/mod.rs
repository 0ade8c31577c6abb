//! Inventor-period measures: patent values, pairwise output, differentiated
//! knowledge, research scope and firm/establishment covariates.

mod value;

pub use value::{
    declared_values, novelty_values, quality_values, CitationWindow, PatentValues, QualityLog, ValueMetric,
    WindowOrigin,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::network::CollaborationGraph;
use crate::types::{
    CategoryLevel, EstablishmentId, FirmId, InventorId, InventorRecord, PatentRecord, Period, Periodization,
};

/// Firm and establishment membership by inventor and period.
#[derive(Debug, Clone, Default)]
pub struct Membership {
    firm_of: BTreeMap<(InventorId, Period), FirmId>,
    est_of: BTreeMap<(InventorId, Period), EstablishmentId>,
    location_of: BTreeMap<(InventorId, Period), GeoPoint>,
    firm_members: BTreeMap<(Period, FirmId), Vec<InventorId>>,
    est_members: BTreeMap<(Period, EstablishmentId), Vec<InventorId>>,
}

impl Membership {
    pub fn new(records: &[InventorRecord]) -> Self {
        let mut m = Membership::default();
        for r in records {
            if let Some(f) = r.firm {
                m.firm_of.insert((r.inventor, r.period), f);
                m.firm_members.entry((r.period, f)).or_default().push(r.inventor);
            }
            if let Some(p) = r.location {
                m.location_of.insert((r.inventor, r.period), p);
            }
            if let Some(e) = r.establishment {
                m.est_of.insert((r.inventor, r.period), e);
                m.est_members.entry((r.period, e)).or_default().push(r.inventor);
            }
        }
        for v in m.firm_members.values_mut().chain(m.est_members.values_mut()) {
            v.sort_unstable();
            v.dedup();
        }
        m
    }

    pub fn firm(&self, inventor: InventorId, period: Period) -> Option<FirmId> {
        self.firm_of.get(&(inventor, period)).copied()
    }

    pub fn establishment(&self, inventor: InventorId, period: Period) -> Option<EstablishmentId> {
        self.est_of.get(&(inventor, period)).copied()
    }

    pub fn location(&self, inventor: InventorId, period: Period) -> Option<GeoPoint> {
        self.location_of.get(&(inventor, period)).copied()
    }

    /// Every `(period, firm)` the inventor is recorded in.
    pub fn firms_of(&self, inventor: InventorId) -> impl Iterator<Item = (Period, FirmId)> + '_ {
        self.firm_of.range((inventor, Period(0))..=(inventor, Period(u8::MAX))).map(|((_, t), f)| (*t, *f))
    }

    pub fn firm_members(&self, period: Period, firm: FirmId) -> &[InventorId] {
        self.firm_members.get(&(period, firm)).map_or(&[], Vec::as_slice)
    }

    pub fn establishment_members(&self, period: Period, est: EstablishmentId) -> &[InventorId] {
        self.est_members.get(&(period, est)).map_or(&[], Vec::as_slice)
    }
}

/// Output and differentiated knowledge of one inventor in one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMeasures {
    pub y_bar: f64,
    pub n: usize,
    pub y: f64,
    pub y_p: f64,
    pub y_q: f64,
    pub k_d: f64,
}

/// Per-patent weights aligned with a graph's patent positions:
/// `g_j / |G_j|` and `1 / |G_j|`.
#[derive(Debug, Clone)]
pub struct PatentWeights {
    discounted: Vec<f64>,
    share: Vec<f64>,
}

impl PatentWeights {
    pub fn new(g: &CollaborationGraph, values: &PatentValues) -> Result<Self> {
        let mut discounted = Vec::with_capacity(g.patent_count());
        let mut share = Vec::with_capacity(g.patent_count());
        for k in 0..g.patent_count() {
            let (id, members) = g.patent(k);
            let v = *values.get(&id).ok_or_else(|| Error::data(format!("patent {id} has no value")))?;
            let s = 1.0 / members.len() as f64;
            discounted.push(v * s);
            share.push(s);
        }
        Ok(PatentWeights { discounted, share })
    }

    /// Sum of `g_k / |G_k|` over the patents of `node`.
    pub fn total_value(&self, g: &CollaborationGraph, node: usize) -> f64 {
        g.patents_of(node).iter().map(|&k| self.discounted[k]).sum()
    }
}

/// Pairwise measures for `node`; `None` without collaborators.
///
/// `k_d` sums, for every collaborator `j`, the discounted value of `j`'s
/// patents that do not list `node`, and divides by the collaborator count.
pub fn pairwise_measures(g: &CollaborationGraph, w: &PatentWeights, node: usize) -> Option<PairwiseMeasures> {
    let neighbors = g.neighbors(node);
    let n = neighbors.len();
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let mut y_bar = 0.0;
    let mut count = 0.0;
    for &k in g.patents_of(node) {
        y_bar += w.discounted[k];
        count += w.share[k];
    }
    let outside = outside_stock(g, w, node, neighbors.iter().map(|&j| Some(j)));
    let y = y_bar / nf;
    let y_p = count / nf;
    Some(PairwiseMeasures { y_bar, n, y, y_p, y_q: y / y_p, k_d: outside / nf })
}

/// Sum over `collaborators` of their discounted patent values, skipping
/// patents that list `node`. `None` entries are inventors without patents in
/// the period and contribute nothing.
pub fn outside_stock(
    g: &CollaborationGraph,
    w: &PatentWeights,
    node: usize,
    collaborators: impl IntoIterator<Item = Option<usize>>,
) -> f64 {
    let mut outside = 0.0;
    for j in collaborators.into_iter().flatten() {
        for &k in g.patents_of(j) {
            if g.patent(k).1.binary_search(&node).is_err() {
                outside += w.discounted[k];
            }
        }
    }
    outside
}

/// Pairwise measures for every node of the graph, in node order.
pub fn all_pairwise(g: &CollaborationGraph, w: &PatentWeights) -> Vec<Option<PairwiseMeasures>> {
    use rayon::prelude::*;
    (0..g.node_count()).into_par_iter().map(|u| pairwise_measures(g, w, u)).collect()
}

/// Per-inventor, per-period sets of primary categories.
#[derive(Debug, Clone, Default)]
pub struct ScopeHistory {
    scopes: BTreeMap<InventorId, BTreeMap<Period, BTreeSet<String>>>,
}

impl ScopeHistory {
    /// Scopes at `level` from every patent whose date falls in some period.
    pub fn new(patents: &[PatentRecord], periods: &Periodization, level: CategoryLevel) -> Self {
        let mut scopes: BTreeMap<InventorId, BTreeMap<Period, BTreeSet<String>>> = BTreeMap::new();
        for p in patents {
            let Some(t) = periods.period_of(p.application_date) else { continue };
            let code = level.truncate(&p.category).to_string();
            for &i in &p.inventors {
                scopes.entry(i).or_default().entry(t).or_default().insert(code.clone());
            }
        }
        ScopeHistory { scopes }
    }

    /// `S_it`; empty when the inventor has no patent in `t`.
    pub fn scope(&self, inventor: InventorId, t: Period) -> Option<&BTreeSet<String>> {
        self.scopes.get(&inventor)?.get(&t)
    }

    /// `k_it`: number of distinct categories over all periods before `t`.
    pub fn cumulative(&self, inventor: InventorId, t: Period) -> usize {
        let Some(by_period) = self.scopes.get(&inventor) else { return 0 };
        let mut all: BTreeSet<&str> = BTreeSet::new();
        for (_, s) in by_period.range(..t) {
            all.extend(s.iter().map(String::as_str));
        }
        all.len()
    }

    /// All period-`t` scopes keyed by inventor.
    pub fn period_scopes(&self, t: Period) -> std::collections::HashMap<InventorId, BTreeSet<String>> {
        self.scopes.iter().filter_map(|(i, by)| by.get(&t).map(|s| (*i, s.clone()))).collect()
    }
}

/// Size and scope of the inventor's firm and establishment outside the
/// inventor and their collaborators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirmCovariates {
    pub f: usize,
    pub s_f: usize,
    pub e: usize,
    pub s_e: usize,
}

/// `(|group \ core|, |scopes(group) \ scopes(core)|)` with `core = N ∪ {i}`.
pub fn group_size_and_scope(
    group: &[InventorId],
    inventor: InventorId,
    collaborators: &[InventorId],
    scopes: &ScopeHistory,
    t: Period,
) -> (usize, usize) {
    let core: BTreeSet<InventorId> = collaborators.iter().copied().chain([inventor]).collect();
    let mut covered: BTreeSet<&str> = BTreeSet::new();
    for u in &core {
        if let Some(s) = scopes.scope(*u, t) {
            covered.extend(s.iter().map(String::as_str));
        }
    }
    let mut outside: BTreeSet<&str> = BTreeSet::new();
    let mut size = 0;
    for j in group {
        if !core.contains(j) {
            size += 1;
        }
        if let Some(s) = scopes.scope(*j, t) {
            outside.extend(s.iter().map(String::as_str).filter(|c| !covered.contains(c)));
        }
    }
    (size, outside.len())
}

/// Firm and establishment covariates; errors when either membership is unknown.
pub fn firm_covariates(
    membership: &Membership,
    scopes: &ScopeHistory,
    inventor: InventorId,
    collaborators: &[InventorId],
    t: Period,
) -> Result<FirmCovariates> {
    let firm = membership
        .firm(inventor, t)
        .ok_or_else(|| Error::data(format!("inventor {inventor} has no firm in period {t}")))?;
    let est = membership
        .establishment(inventor, t)
        .ok_or_else(|| Error::data(format!("inventor {inventor} has no establishment in period {t}")))?;
    let (f, s_f) = group_size_and_scope(membership.firm_members(t, firm), inventor, collaborators, scopes, t);
    let (e, s_e) = group_size_and_scope(membership.establishment_members(t, est), inventor, collaborators, scopes, t);
    Ok(FirmCovariates { f, s_f, e, s_e })
}

/// Precomputed member lists and category unions of every firm and
/// establishment in one period, for computing [`FirmCovariates`] of many
/// inventors without rescanning group members.
#[derive(Debug, Clone)]
pub struct GroupScopeIndex {
    period: Period,
    firms: BTreeMap<FirmId, BTreeSet<String>>,
    establishments: BTreeMap<EstablishmentId, BTreeSet<String>>,
}

impl GroupScopeIndex {
    pub fn new(membership: &Membership, scopes: &ScopeHistory, t: Period) -> Self {
        let union = |members: &[InventorId]| {
            let mut u = BTreeSet::new();
            for j in members {
                if let Some(s) = scopes.scope(*j, t) {
                    u.extend(s.iter().cloned());
                }
            }
            u
        };
        let firms =
            membership.firm_members.iter().filter(|((p, _), _)| *p == t).map(|((_, f), m)| (*f, union(m))).collect();
        let establishments =
            membership.est_members.iter().filter(|((p, _), _)| *p == t).map(|((_, e), m)| (*e, union(m))).collect();
        GroupScopeIndex { period: t, firms, establishments }
    }

    /// Same result as [`firm_covariates`].
    pub fn covariates(
        &self,
        membership: &Membership,
        scopes: &ScopeHistory,
        inventor: InventorId,
        collaborators: &[InventorId],
    ) -> Result<FirmCovariates> {
        let t = self.period;
        let firm = membership
            .firm(inventor, t)
            .ok_or_else(|| Error::data(format!("inventor {inventor} has no firm in period {t}")))?;
        let est = membership
            .establishment(inventor, t)
            .ok_or_else(|| Error::data(format!("inventor {inventor} has no establishment in period {t}")))?;
        let core: BTreeSet<InventorId> = collaborators.iter().copied().chain([inventor]).collect();
        let mut covered: BTreeSet<&str> = BTreeSet::new();
        for u in &core {
            if let Some(s) = scopes.scope(*u, t) {
                covered.extend(s.iter().map(String::as_str));
            }
        }
        let count = |members: &[InventorId], union: Option<&BTreeSet<String>>| {
            let inside = members.iter().filter(|j| core.contains(j)).count();
            let scope = union.map_or(0, |u| u.len() - covered.iter().filter(|c| u.contains(**c)).count());
            (members.len() - inside, scope)
        };
        let (f, s_f) = count(membership.firm_members(t, firm), self.firms.get(&firm));
        let (e, s_e) = count(membership.establishment_members(t, est), self.establishments.get(&est));
        Ok(FirmCovariates { f, s_f, e, s_e })
    }
}
