//! Per-period co-invention graphs and indirect-collaborator frontiers.
//!
//! Hop order follows the frontier convention: order 0 holds the inventor and
//! the direct collaborators, order `l >= 1` the inventors first reached at
//! graph distance `l + 1`.

mod hops;

pub use hops::{
    build_instrument, hop_dump_rows, hop_sets, intern_scopes, jaccard, jaccard_profile, HopScratch, HopSets,
    JaccardOrigin, StockSource,
};

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::types::{
    EstablishmentId, FirmId, InventorId, InventorRecord, PatentId, PatentRecord, Period, Periodization,
};

/// Undirected co-invention graph of one period. Nodes are stored densely in
/// increasing inventor-id order; adjacency lists are sorted node indices.
#[derive(Debug, Clone)]
pub struct CollaborationGraph {
    period: Period,
    ids: Vec<InventorId>,
    index: HashMap<InventorId, usize>,
    adjacency: Vec<Vec<usize>>,
    patents: Vec<(PatentId, Vec<usize>)>,
    patent_index: HashMap<PatentId, usize>,
    inventor_patents: Vec<Vec<usize>>,
    firms: Vec<Option<FirmId>>,
    establishments: Vec<Option<EstablishmentId>>,
}

impl CollaborationGraph {
    /// Graph of the patents whose application date falls in `period`.
    pub fn build(patents: &[PatentRecord], periods: &Periodization, period: Period) -> Result<Self> {
        let mut teams = Vec::new();
        for p in patents {
            if p.inventors.is_empty() {
                return Err(Error::EmptyTeam(p.id));
            }
            if periods.period_of(p.application_date) == Some(period) {
                teams.push((p.id, p.inventors.as_slice()));
            }
        }
        Self::from_teams(period, teams)
    }

    /// Graph from `(patent, team)` pairs that are already restricted to one period.
    pub fn from_teams<'a>(
        period: Period,
        teams: impl IntoIterator<Item = (PatentId, &'a [InventorId])>,
    ) -> Result<Self> {
        let teams: Vec<(PatentId, &[InventorId])> = teams.into_iter().collect();
        let mut ids: Vec<InventorId> = Vec::new();
        for (pid, team) in &teams {
            if team.is_empty() {
                return Err(Error::EmptyTeam(*pid));
            }
            ids.extend_from_slice(team);
        }
        ids.sort_unstable();
        ids.dedup();
        let index: HashMap<InventorId, usize> = ids.iter().enumerate().map(|(k, id)| (*id, k)).collect();
        let n = ids.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut inventor_patents = vec![Vec::new(); n];
        let mut patents = Vec::with_capacity(teams.len());
        let mut patent_index = HashMap::with_capacity(teams.len());
        for (pid, team) in teams {
            let mut members: Vec<usize> = team.iter().map(|id| index[id]).collect();
            members.sort_unstable();
            members.dedup();
            if patent_index.insert(pid, patents.len()).is_some() {
                return Err(Error::data(format!("patent {pid} listed twice in period {period}")));
            }
            for (a, &u) in members.iter().enumerate() {
                inventor_patents[u].push(patents.len());
                for &v in &members[a + 1..] {
                    adjacency[u].push(v);
                    adjacency[v].push(u);
                }
            }
            patents.push((pid, members));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(CollaborationGraph {
            period,
            ids,
            index,
            adjacency,
            patents,
            patent_index,
            inventor_patents,
            firms: vec![None; n],
            establishments: vec![None; n],
        })
    }

    /// Graph from an edge dump plus isolated nodes; carries no patents.
    pub fn from_edges(period: Period, nodes: &[InventorId], edges: &[(InventorId, InventorId)]) -> Result<Self> {
        let mut ids: Vec<InventorId> = nodes.to_vec();
        ids.extend(edges.iter().flat_map(|(a, b)| [*a, *b]));
        ids.sort_unstable();
        ids.dedup();
        let index: HashMap<InventorId, usize> = ids.iter().enumerate().map(|(k, id)| (*id, k)).collect();
        let n = ids.len();
        let mut adjacency = vec![Vec::new(); n];
        for (a, b) in edges {
            if a == b {
                return Err(Error::data(format!("self-loop on inventor {a}")));
            }
            let (u, v) = (index[a], index[b]);
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(CollaborationGraph {
            period,
            ids,
            index,
            adjacency,
            patents: Vec::new(),
            patent_index: HashMap::new(),
            inventor_patents: vec![Vec::new(); n],
            firms: vec![None; n],
            establishments: vec![None; n],
        })
    }

    /// Attaches firm and establishment labels from the records of this period.
    pub fn with_labels(mut self, records: &[InventorRecord]) -> Self {
        for r in records.iter().filter(|r| r.period == self.period) {
            if let Some(&k) = self.index.get(&r.inventor) {
                self.firms[k] = r.firm;
                self.establishments[k] = r.establishment;
            }
        }
        self
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn ids(&self) -> &[InventorId] {
        &self.ids
    }

    pub fn id(&self, node: usize) -> InventorId {
        self.ids[node]
    }

    pub fn node(&self, id: InventorId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn require(&self, id: InventorId) -> Result<usize> {
        self.node(id).ok_or(Error::UnknownInventor(id))
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn are_adjacent(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn firm(&self, node: usize) -> Option<FirmId> {
        self.firms[node]
    }

    pub fn establishment(&self, node: usize) -> Option<EstablishmentId> {
        self.establishments[node]
    }

    pub fn patent_count(&self) -> usize {
        self.patents.len()
    }

    /// Patent id and sorted member nodes of the `k`-th patent.
    pub fn patent(&self, k: usize) -> (PatentId, &[usize]) {
        let (id, m) = &self.patents[k];
        (*id, m)
    }

    pub fn patent_position(&self, id: PatentId) -> Option<usize> {
        self.patent_index.get(&id).copied()
    }

    /// Positions of the patents listing `node`, in insertion order.
    pub fn patents_of(&self, node: usize) -> &[usize] {
        &self.inventor_patents[node]
    }

    /// Sorted `(a, b)` pairs with `a < b`, in lexicographic order.
    pub fn edge_dump(&self) -> Vec<(InventorId, InventorId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, adj) in self.adjacency.iter().enumerate() {
            for &v in adj {
                if u < v {
                    out.push((self.ids[u], self.ids[v]));
                }
            }
        }
        out
    }

    /// Patent id to sorted inventor team.
    pub fn incidence(&self) -> BTreeMap<PatentId, Vec<InventorId>> {
        self.patents.iter().map(|(id, m)| (*id, m.iter().map(|&u| self.ids[u]).collect())).collect()
    }
}
