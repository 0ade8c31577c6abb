//! Random rewiring of collaborators within firms or establishments.
//!
//! Each inventor's collaborators are replaced by members drawn uniformly
//! without replacement from the same groups, keeping the per-group counts
//! and avoiding everyone within two indirect steps. Differentiated knowledge
//! is recomputed from the drawn collaborators and the output equation is
//! refitted by OLS; the ratio of the counterfactual coefficient to the
//! actual IV estimate measures how much of the effect group membership
//! alone would produce.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{ols_design, Outcome, Panel, Specification, Transform, VcvKind};
use crate::measures::{outside_stock, FirmCovariates, Membership, PatentWeights};
use crate::network::{CollaborationGraph, HopSets};
use crate::rng::{stream_rng, Stream};
use crate::types::{InventorId, Period};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewireLevel {
    #[default]
    Firm,
    Establishment,
}

/// Rewiring targets of one inventor in one period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InventorConstraint {
    pub inventor: InventorId,
    /// `(group, n^A)` in group order; the counts sum to the collaborator count.
    pub counts: Vec<(u64, usize)>,
    /// Inventor, direct and first- and second-order indirect collaborators, sorted.
    pub exclusion: Vec<InventorId>,
    /// False when a collaborator's group is unknown or a pool is too small.
    pub feasible: bool,
}

impl InventorConstraint {
    pub fn collaborators(&self) -> usize {
        self.counts.iter().map(|(_, n)| n).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RewireConstraint {
    pub level: RewireLevel,
    pub period: Period,
    pub inventors: Vec<InventorConstraint>,
    members: BTreeMap<u64, Vec<InventorId>>,
}

impl RewireConstraint {
    /// Targets for the inventors whose frontiers are given; `hops` must reach
    /// at least order 2.
    pub fn build(
        g: &CollaborationGraph,
        membership: &Membership,
        hops: &[HopSets],
        level: RewireLevel,
    ) -> Result<Self> {
        let t = g.period();
        let group_of = |j: InventorId| match level {
            RewireLevel::Firm => membership.firm(j, t).map(|f| f.0),
            RewireLevel::Establishment => membership.establishment(j, t).map(|e| e.0),
        };
        let mut members: BTreeMap<u64, Vec<InventorId>> = BTreeMap::new();
        let mut inventors = Vec::with_capacity(hops.len());
        for h in hops {
            if h.max_order() < 2 {
                return Err(Error::domain("rewiring needs frontiers up to order 2"));
            }
            let i = g.id(h.origin);
            let mut exclusion: Vec<InventorId> = h.cumulative(2).into_iter().map(|u| g.id(u)).collect();
            exclusion.sort_unstable();
            let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
            let mut feasible = true;
            for &j in g.neighbors(h.origin) {
                match group_of(g.id(j)) {
                    Some(a) => *counts.entry(a).or_default() += 1,
                    None => feasible = false,
                }
            }
            for (&a, &n) in &counts {
                let pool = members.entry(a).or_insert_with(|| match level {
                    RewireLevel::Firm => membership.firm_members(t, crate::types::FirmId(a)).to_vec(),
                    RewireLevel::Establishment => {
                        membership.establishment_members(t, crate::types::EstablishmentId(a)).to_vec()
                    }
                });
                let blocked = pool.iter().filter(|j| exclusion.binary_search(j).is_ok()).count();
                if pool.len() - blocked < n {
                    feasible = false;
                }
            }
            inventors.push(InventorConstraint {
                inventor: i,
                counts: counts.into_iter().collect(),
                exclusion,
                feasible,
            });
        }
        Ok(RewireConstraint { level, period: t, inventors, members })
    }

    /// Members of `group` in this period, sorted.
    pub fn members(&self, group: u64) -> &[InventorId] {
        self.members.get(&group).map_or(&[], Vec::as_slice)
    }

    /// Eligible pool of `group` for inventor `k`.
    pub fn pool(&self, k: usize, group: u64) -> Vec<InventorId> {
        let ex = &self.inventors[k].exclusion;
        self.members(group).iter().copied().filter(|j| ex.binary_search(j).is_err()).collect()
    }

    /// One rewiring of inventor `k`: `n^A` uniform draws without replacement
    /// from each group's pool, sorted. `None` when infeasible.
    pub fn rewire_one<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Option<Vec<InventorId>> {
        let c = &self.inventors[k];
        if !c.feasible {
            return None;
        }
        let mut out = Vec::with_capacity(c.collaborators());
        for &(a, n) in &c.counts {
            let pool = self.pool(k, a);
            if pool.len() < n {
                return None;
            }
            out.extend(sample(rng, pool.len(), n).into_iter().map(|x| pool[x]));
        }
        out.sort_unstable();
        Some(out)
    }

    /// Rewiring of every inventor for ensemble draw `draw`. With `per_period`
    /// off the stream ignores the period, so both periods reuse it.
    pub fn rewire_once(&self, seed: u64, draw: u64, per_period: bool) -> Vec<Option<Vec<InventorId>>> {
        (0..self.inventors.len())
            .map(|k| {
                let i = self.inventors[k].inventor.0;
                let mut rng = if per_period {
                    stream_rng(seed, Stream::Rewire, &[draw, i, self.period.0 as u64])
                } else {
                    stream_rng(seed, Stream::Rewire, &[draw, i])
                };
                self.rewire_one(k, &mut rng)
            })
            .collect()
    }

    /// The actual collaborators, in the graph's neighbor order.
    pub fn identity(&self, g: &CollaborationGraph) -> Vec<Option<Vec<InventorId>>> {
        self.inventors
            .iter()
            .map(|c| g.node(c.inventor).map(|u| g.neighbors(u).iter().map(|&j| g.id(j)).collect()))
            .collect()
    }

    /// True when `drawn` meets inventor `k`'s group counts and avoids its
    /// exclusion set.
    pub fn satisfied_by(&self, k: usize, drawn: &[InventorId], membership: &Membership) -> bool {
        let c = &self.inventors[k];
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for &j in drawn {
            if c.exclusion.binary_search(&j).is_ok() {
                return false;
            }
            let g = match self.level {
                RewireLevel::Firm => membership.firm(j, self.period).map(|f| f.0),
                RewireLevel::Establishment => membership.establishment(j, self.period).map(|e| e.0),
            };
            match g {
                Some(a) => *counts.entry(a).or_default() += 1,
                None => return false,
            }
        }
        let mut uniq = drawn.to_vec();
        uniq.dedup();
        uniq.len() == drawn.len() && counts.into_iter().collect::<Vec<_>>() == c.counts
    }
}

/// `k^D` from an arbitrary collaborator list: their discounted output
/// outside patents with the inventor, divided by the list length. Drawn
/// members without patents in the period contribute zero.
pub fn counterfactual_kd(
    g: &CollaborationGraph,
    w: &PatentWeights,
    inventor: InventorId,
    collaborators: &[InventorId],
) -> Option<f64> {
    let node = g.node(inventor)?;
    if collaborators.is_empty() {
        return None;
    }
    Some(outside_stock(g, w, node, collaborators.iter().map(|j| g.node(*j))) / collaborators.len() as f64)
}

/// One graph of a panel period with its weights and rewiring targets.
pub struct PeriodRewiring<'a> {
    pub graph: &'a CollaborationGraph,
    pub weights: &'a PatentWeights,
    pub constraint: &'a RewireConstraint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub draws: usize,
    pub seed: u64,
    pub per_period: bool,
    /// Group size and scope controls; the panel's other controls are kept.
    pub group_controls: bool,
    pub max_skip_rate: f64,
    pub vcv: VcvKind,
    pub transform: Transform,
    pub ipc_effects: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            draws: 1000,
            seed: 1,
            per_period: true,
            group_controls: false,
            max_skip_rate: 0.01,
            vcv: VcvKind::default(),
            transform: Transform::Within,
            ipc_effects: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawResult {
    pub draw: usize,
    pub beta_tilde: f64,
    pub ratio: f64,
    /// Inventors dropped because a pool was too small or `k~D` was not positive.
    pub dropped: usize,
    /// Inventor-periods whose draw broke the group counts or exclusion set.
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub draws: usize,
    pub completed: usize,
    pub skipped: usize,
    pub beta_hat: f64,
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub draws: Vec<DrawResult>,
    /// `(draw, message)` of draws whose estimation failed.
    pub skipped: Vec<(usize, String)>,
    pub summary: EnsembleSummary,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn counterfactual_spec(cfg: &EnsembleConfig) -> Specification {
    Specification {
        transform: cfg.transform,
        instruments: Vec::new(),
        ipc_effects: cfg.ipc_effects,
        ..Specification::default()
    }
}

/// OLS of `ln_y` on the panel with `ln_kd` replaced by `kd[k][p]` for inventor
/// `k` (panel rows in pairs) and optional group controls. Inventors with a
/// missing or non-positive value are dropped. Returns the coefficient and the
/// number dropped.
pub fn refit(
    panel: &Panel,
    groups: &[FirmCovariates],
    level: RewireLevel,
    kd: &[[Option<f64>; 2]],
    cfg: &EnsembleConfig,
) -> Result<(f64, usize)> {
    let mut p = Panel {
        rows: Vec::with_capacity(panel.rows.len()),
        control_names: panel.control_names.clone(),
        instrument_orders: Vec::new(),
    };
    if cfg.group_controls {
        match level {
            RewireLevel::Firm => p.control_names.extend(["ln_f".into(), "ln_s_f".into()]),
            RewireLevel::Establishment => p.control_names.extend(["ln_e".into(), "ln_s_e".into()]),
        }
    }
    let mut dropped = 0;
    for (k, pair) in panel.rows.chunks(2).enumerate() {
        let (Some(a), Some(b)) = (kd[k][0], kd[k][1]) else {
            dropped += 1;
            continue;
        };
        if !(a > 0.0 && b > 0.0) {
            dropped += 1;
            continue;
        }
        for (r, v) in pair.iter().zip([a, b]) {
            let mut row = r.clone();
            row.ln_kd = v.ln();
            row.instruments.clear();
            if cfg.group_controls {
                let g = groups[2 * k + (row.period != pair[0].period) as usize];
                let (n, s) = match level {
                    RewireLevel::Firm => (g.f, g.s_f),
                    RewireLevel::Establishment => (g.e, g.s_e),
                };
                row.controls.push((n as f64).ln_1p());
                row.controls.push((s as f64).ln_1p());
            }
            p.rows.push(row);
        }
    }
    let design = p.design(&counterfactual_spec(cfg))?;
    let fit = ols_design(&design, Outcome::LnY, cfg.vcv)?;
    Ok((fit.coefficients[0], dropped))
}

/// Runs the rewiring ensemble. `panel` rows come in inventor pairs aligned
/// with the constraints' inventors; `beta_hat` is the actual-network
/// estimate the draws are compared with.
pub fn run_ensemble(
    panel: &Panel,
    groups: &[FirmCovariates],
    periods: [PeriodRewiring<'_>; 2],
    membership: &Membership,
    beta_hat: f64,
    cfg: &EnsembleConfig,
) -> Result<Ensemble> {
    let n = periods[0].constraint.inventors.len();
    if panel.rows.len() != 2 * n || periods[1].constraint.inventors.len() != n {
        return Err(Error::data("panel and rewiring constraints are not aligned"));
    }
    for (k, pair) in panel.rows.chunks(2).enumerate() {
        for (p, r) in pair.iter().enumerate() {
            if periods[p].constraint.inventors[k].inventor != r.inventor {
                return Err(Error::data(format!("panel row of inventor {} is out of order", r.inventor)));
            }
        }
    }
    if !(beta_hat.is_finite() && beta_hat != 0.0) {
        return Err(Error::estimation("actual-network coefficient is zero or undefined"));
    }
    let level = periods[0].constraint.level;
    let outcomes: Vec<std::result::Result<DrawResult, (usize, String)>> = (0..cfg.draws)
        .into_par_iter()
        .map(|d| {
            let mut kd = vec![[None, None]; n];
            let mut violations = 0;
            for (p, pr) in periods.iter().enumerate() {
                let drawn = pr.constraint.rewire_once(cfg.seed, d as u64, cfg.per_period);
                for (k, c) in drawn.iter().enumerate() {
                    if let Some(c) = c {
                        if !pr.constraint.satisfied_by(k, c, membership) {
                            violations += 1;
                        }
                        kd[k][p] = counterfactual_kd(pr.graph, pr.weights, pr.constraint.inventors[k].inventor, c);
                    }
                }
            }
            match refit(panel, groups, level, &kd, cfg) {
                Ok((b, dropped)) => Ok(DrawResult { draw: d, beta_tilde: b, ratio: b / beta_hat, dropped, violations }),
                Err(e) => Err((d, e.to_string())),
            }
        })
        .collect();
    let mut draws = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => draws.push(r),
            Err(s) => skipped.push(s),
        }
    }
    let rate = skipped.len() as f64 / cfg.draws.max(1) as f64;
    if rate > cfg.max_skip_rate {
        return Err(Error::estimation(format!(
            "{} of {} counterfactual draws failed to estimate (first: {})",
            skipped.len(),
            cfg.draws,
            skipped.first().map_or("", |s| s.1.as_str())
        )));
    }
    let mut ratios: Vec<f64> = draws.iter().map(|r| r.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let m = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / m;
    let sd = if ratios.len() > 1 {
        (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    let summary = EnsembleSummary {
        draws: cfg.draws,
        completed: draws.len(),
        skipped: skipped.len(),
        beta_hat,
        mean,
        sd,
        q05: quantile(&ratios, 0.05),
        q25: quantile(&ratios, 0.25),
        q50: quantile(&ratios, 0.5),
        q75: quantile(&ratios, 0.75),
        q95: quantile(&ratios, 0.95),
    };
    Ok(Ensemble { draws, skipped, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{hop_sets, HopScratch};
    use crate::types::{EstablishmentId, FirmId, InventorRecord};

    fn rec(i: u64, firm: u64) -> InventorRecord {
        InventorRecord {
            inventor: InventorId(i),
            period: Period(1),
            firm: Some(FirmId(firm)),
            establishment: Some(EstablishmentId(firm)),
            location: None,
        }
    }

    /// Inventor 1 collaborates with 2 and 3 (firm 10); 4 is a second-order
    /// contact; 5..=14 are unconnected firm-10 members and 20 sits in firm 20.
    fn fixture(extra: u64) -> (CollaborationGraph, Membership, Vec<HopSets>) {
        let ids: Vec<InventorId> = (1..=5 + extra).chain([20]).map(InventorId).collect();
        let e = [(1, 2), (1, 3), (3, 4)].map(|(a, b)| (InventorId(a), InventorId(b)));
        let g = CollaborationGraph::from_edges(Period(1), &ids, &e).unwrap();
        let mut recs: Vec<InventorRecord> = (1..=5 + extra).map(|i| rec(i, 10)).collect();
        recs.push(rec(20, 20));
        let m = Membership::new(&recs);
        let h = hop_sets(&g, InventorId(1), 3, &mut HopScratch::default()).unwrap();
        (g, m, vec![h])
    }

    #[test]
    fn forced_draw_takes_the_whole_pool() {
        let (g, m, h) = fixture(1);
        let c = RewireConstraint::build(&g, &m, &h, RewireLevel::Firm).unwrap();
        assert_eq!(c.inventors[0].counts, vec![(10, 2)]);
        assert_eq!(c.pool(0, 10), vec![InventorId(5), InventorId(6)]);
        let d = c.rewire_once(3, 0, true);
        assert_eq!(d[0].as_deref(), Some(&[InventorId(5), InventorId(6)][..]));
    }

    #[test]
    fn small_pool_is_infeasible() {
        let (g, m, h) = fixture(0);
        let c = RewireConstraint::build(&g, &m, &h, RewireLevel::Firm).unwrap();
        assert!(!c.inventors[0].feasible);
        assert_eq!(c.rewire_once(3, 0, true)[0], None);
    }

    #[test]
    fn groups_without_collaborators_are_not_drawn() {
        let (g, m, h) = fixture(10);
        let c = RewireConstraint::build(&g, &m, &h, RewireLevel::Firm).unwrap();
        for d in 0..50 {
            let drawn = c.rewire_once(9, d, true)[0].clone().unwrap();
            assert!(!drawn.contains(&InventorId(20)));
            assert!(c.satisfied_by(0, &drawn, &m));
        }
    }

    #[test]
    fn unknown_group_of_a_collaborator_is_infeasible() {
        let (g, _, h) = fixture(5);
        let mut recs: Vec<InventorRecord> = (1..=10).map(|i| rec(i, 10)).collect();
        recs[1].firm = None;
        let m = Membership::new(&recs);
        let c = RewireConstraint::build(&g, &m, &h, RewireLevel::Firm).unwrap();
        assert!(!c.inventors[0].feasible);
    }

    #[test]
    fn draw_frequencies_match_the_hypergeometric_rate() {
        // Ten eligible members, two drawn: each is chosen with probability 0.2.
        let (g, m, h) = fixture(9);
        let c = RewireConstraint::build(&g, &m, &h, RewireLevel::Firm).unwrap();
        assert_eq!(c.pool(0, 10).len(), 10);
        let mut hits: BTreeMap<InventorId, usize> = BTreeMap::new();
        let seeds = 10_000;
        for s in 0..seeds {
            for j in c.rewire_once(s, 0, true)[0].clone().unwrap() {
                *hits.entry(j).or_default() += 1;
            }
        }
        assert_eq!(hits.len(), 10);
        for (j, n) in hits {
            let f = n as f64 / seeds as f64;
            assert!((f - 0.2).abs() < 0.02, "{j}: {f}");
        }
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-15);
    }
}
