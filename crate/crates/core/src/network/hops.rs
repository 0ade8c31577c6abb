use std::collections::{BTreeSet, HashMap};

use super::CollaborationGraph;
use crate::error::{Error, Result};
use crate::types::{InventorId, Period};

/// Disjoint frontiers `N^0..N^L` of one inventor, as sorted node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopSets {
    pub origin: usize,
    pub orders: Vec<Vec<usize>>,
}

impl HopSets {
    pub fn max_order(&self) -> usize {
        self.orders.len() - 1
    }

    pub fn order(&self, ell: usize) -> &[usize] {
        &self.orders[ell]
    }

    /// Union of orders `0..=ell`, i.e. every node within distance `ell + 1`.
    pub fn cumulative(&self, ell: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.orders[..=ell].iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    /// True when some order up to the maximum is empty. Such inventors stay in
    /// the graph; sample selection decides what to do with them.
    pub fn is_truncated(&self) -> bool {
        self.orders.iter().any(Vec::is_empty)
    }
}

/// Reusable BFS buffers; one per worker thread.
#[derive(Debug, Default)]
pub struct HopScratch {
    stamp: Vec<u32>,
    epoch: u32,
    frontier: Vec<usize>,
    next: Vec<usize>,
}

impl HopScratch {
    fn reset(&mut self, n: usize) {
        if self.stamp.len() != n || self.epoch == u32::MAX {
            self.stamp = vec![0; n];
            self.epoch = 0;
        }
        self.epoch += 1;
    }
}

/// Breadth-first frontier expansion up to order `max_order`.
pub fn hop_sets(
    g: &CollaborationGraph,
    inventor: InventorId,
    max_order: usize,
    scratch: &mut HopScratch,
) -> Result<HopSets> {
    let origin = g.require(inventor)?;
    if max_order < 1 {
        return Err(Error::domain("maximum hop order must be at least 1"));
    }
    scratch.reset(g.node_count());
    let epoch = scratch.epoch;
    scratch.stamp[origin] = epoch;
    let mut orders = Vec::with_capacity(max_order + 1);
    let mut zero = vec![origin];
    scratch.frontier.clear();
    for &v in g.neighbors(origin) {
        scratch.stamp[v] = epoch;
        scratch.frontier.push(v);
        zero.push(v);
    }
    zero.sort_unstable();
    orders.push(zero);
    for _ in 1..=max_order {
        scratch.next.clear();
        for &u in &scratch.frontier {
            for &v in g.neighbors(u) {
                if scratch.stamp[v] != epoch {
                    scratch.stamp[v] = epoch;
                    scratch.next.push(v);
                }
            }
        }
        let mut level = scratch.next.clone();
        level.sort_unstable();
        orders.push(level);
        std::mem::swap(&mut scratch.frontier, &mut scratch.next);
    }
    Ok(HopSets { origin, orders })
}

/// Read access to differentiated-knowledge stocks. Tests wrap this to audit
/// which nodes an instrument touches.
pub trait StockSource {
    fn stock(&self, g: &CollaborationGraph, node: usize) -> Option<f64>;
}

impl StockSource for HashMap<InventorId, f64> {
    fn stock(&self, g: &CollaborationGraph, node: usize) -> Option<f64> {
        self.get(&g.id(node)).copied()
    }
}

/// Stocks aligned with the graph's node indices.
impl StockSource for [f64] {
    fn stock(&self, _: &CollaborationGraph, node: usize) -> Option<f64> {
        self.get(node).copied().filter(|v| v.is_finite())
    }
}

impl StockSource for Vec<f64> {
    fn stock(&self, g: &CollaborationGraph, node: usize) -> Option<f64> {
        self.as_slice().stock(g, node)
    }
}

/// Mean stock over `N^ell`; `None` when the frontier is empty.
pub fn build_instrument<S: StockSource + ?Sized>(
    g: &CollaborationGraph,
    stocks: &S,
    hops: &HopSets,
    ell: usize,
) -> Result<Option<f64>> {
    if ell > hops.max_order() {
        return Err(Error::domain(format!("order {ell} exceeds computed maximum {}", hops.max_order())));
    }
    let members = hops.order(ell);
    if members.is_empty() {
        return Ok(None);
    }
    let mut sum = 0.0;
    for &j in members {
        sum += stocks.stock(g, j).ok_or(Error::MissingStock(g.id(j)))?;
    }
    Ok(Some(sum / members.len() as f64))
}

/// Jaccard index of two sorted, duplicate-free category lists. Two empty
/// scopes give 0.
pub fn jaccard(a: &[u32], b: &[u32]) -> f64 {
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - common;
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}

/// Whether order 0 of a Jaccard profile compares the inventor with itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JaccardOrigin {
    #[default]
    Exclude,
    Include,
}

/// Mean Jaccard similarity between the inventor's scope and each member of
/// `N^0..N^L`. Empty frontiers give `None`.
pub fn jaccard_profile(hops: &HopSets, scopes: &[Vec<u32>], origin: JaccardOrigin) -> Vec<Option<f64>> {
    let own = &scopes[hops.origin];
    hops.orders
        .iter()
        .enumerate()
        .map(|(ell, members)| {
            let mut sum = 0.0;
            let mut n = 0usize;
            for &j in members {
                if ell == 0 && j == hops.origin && origin == JaccardOrigin::Exclude {
                    continue;
                }
                sum += jaccard(own, &scopes[j]);
                n += 1;
            }
            (n > 0).then(|| sum / n as f64)
        })
        .collect()
}

/// Category sets keyed by inventor, interned to sorted integer lists aligned
/// with the graph's nodes. Missing inventors get an empty scope.
pub fn intern_scopes(g: &CollaborationGraph, scopes: &HashMap<InventorId, BTreeSet<String>>) -> Vec<Vec<u32>> {
    let mut dict: HashMap<&str, u32> = HashMap::new();
    let mut all: BTreeSet<&str> = BTreeSet::new();
    for s in scopes.values() {
        all.extend(s.iter().map(String::as_str));
    }
    for (k, c) in all.into_iter().enumerate() {
        dict.insert(c, k as u32);
    }
    g.ids()
        .iter()
        .map(|id| match scopes.get(id) {
            Some(s) => s.iter().map(|c| dict[c.as_str()]).collect(),
            None => Vec::new(),
        })
        .collect()
}

/// `(period, inventor, order, member)` rows in lexicographic order.
pub fn hop_dump_rows(g: &CollaborationGraph, hops: &HopSets) -> Vec<(Period, InventorId, usize, InventorId)> {
    let i = g.id(hops.origin);
    let mut rows = Vec::new();
    for (ell, members) in hops.orders.iter().enumerate() {
        let mut ids: Vec<InventorId> = members.iter().map(|&m| g.id(m)).collect();
        ids.sort_unstable();
        rows.extend(ids.into_iter().map(|m| (g.period(), i, ell, m)));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;

    fn graph(edges: &[(u64, u64)]) -> CollaborationGraph {
        let e: Vec<(InventorId, InventorId)> = edges.iter().map(|&(a, b)| (InventorId(a), InventorId(b))).collect();
        CollaborationGraph::from_edges(Period(1), &[], &e).unwrap()
    }

    fn ids(g: &CollaborationGraph, v: &[usize]) -> Vec<u64> {
        v.iter().map(|&k| g.id(k).0).collect()
    }

    #[test]
    fn path_frontiers() {
        let g = graph(&[(1, 2), (2, 3), (3, 4)]);
        let h = hop_sets(&g, InventorId(1), 2, &mut HopScratch::default()).unwrap();
        assert_eq!(ids(&g, h.order(0)), vec![1, 2]);
        assert_eq!(ids(&g, h.order(1)), vec![3]);
        assert_eq!(ids(&g, h.order(2)), vec![4]);
    }

    #[test]
    fn triangle_has_empty_first_order() {
        let g = graph(&[(1, 2), (2, 3), (1, 3)]);
        let h = hop_sets(&g, InventorId(1), 1, &mut HopScratch::default()).unwrap();
        assert_eq!(ids(&g, h.order(0)), vec![1, 2, 3]);
        assert!(h.order(1).is_empty());
        assert!(h.is_truncated());
    }

    #[test]
    fn unknown_inventor_is_a_lookup_error() {
        let g = graph(&[(1, 2)]);
        let err = hop_sets(&g, InventorId(9), 2, &mut HopScratch::default()).unwrap_err();
        assert!(matches!(err, Error::UnknownInventor(InventorId(9))));
    }

    #[test]
    fn instrument_averages_the_frontier() {
        let g = graph(&[(1, 2), (2, 3), (3, 4), (3, 5), (4, 6), (5, 7)]);
        let h = hop_sets(&g, InventorId(1), 3, &mut HopScratch::default()).unwrap();
        let stocks: HashMap<InventorId, f64> = (1..=7)
            .map(|i| {
                (
                    InventorId(i),
                    if i == 4 {
                        4.0
                    } else if i == 5 {
                        6.0
                    } else {
                        2.0
                    },
                )
            })
            .collect();
        assert_eq!(ids(&g, h.order(2)), vec![4, 5]);
        assert_eq!(build_instrument(&g, &stocks, &h, 2).unwrap(), Some(5.0));
        let h7 = hop_sets(&g, InventorId(7), 3, &mut HopScratch::default()).unwrap();
        assert_eq!(ids(&g, h7.order(2)), vec![2, 4]);
        assert_eq!(ids(&g, h7.order(3)), vec![1, 6]);
        let single = graph(&[(1, 2), (2, 3), (3, 4), (4, 5)]);
        let hs = hop_sets(&single, InventorId(1), 4, &mut HopScratch::default()).unwrap();
        let st: HashMap<InventorId, f64> = (1..=5).map(|i| (InventorId(i), 2.0)).collect();
        assert_eq!(build_instrument(&single, &st, &hs, 4).unwrap(), None);
        assert_eq!(build_instrument(&single, &st, &hs, 3).unwrap(), Some(2.0));
    }

    struct Audited<'a> {
        inner: &'a [f64],
        seen: RefCell<Vec<usize>>,
    }

    impl StockSource for Audited<'_> {
        fn stock(&self, g: &CollaborationGraph, node: usize) -> Option<f64> {
            self.seen.borrow_mut().push(node);
            self.inner.stock(g, node)
        }
    }

    #[test]
    fn instrument_reads_only_its_own_frontier() {
        let g = graph(&[(1, 2), (2, 3), (3, 4), (4, 5), (2, 6), (6, 7), (7, 8)]);
        let h = hop_sets(&g, InventorId(1), 4, &mut HopScratch::default()).unwrap();
        let stocks = vec![1.0; g.node_count()];
        let audit = Audited { inner: &stocks, seen: RefCell::new(Vec::new()) };
        build_instrument(&g, &audit, &h, 2).unwrap();
        let inner = h.cumulative(1);
        assert!(audit.seen.borrow().iter().all(|v| inner.binary_search(v).is_err()));
        assert_eq!(*audit.seen.borrow(), h.order(2));
    }

    #[test]
    fn missing_stock_is_reported() {
        let g = graph(&[(1, 2), (2, 3)]);
        let h = hop_sets(&g, InventorId(1), 1, &mut HopScratch::default()).unwrap();
        let stocks: HashMap<InventorId, f64> = HashMap::new();
        assert!(matches!(build_instrument(&g, &stocks, &h, 1), Err(Error::MissingStock(InventorId(3)))));
    }

    #[test]
    fn jaccard_values() {
        assert_eq!(jaccard(&[1, 2], &[1, 2]), 1.0);
        assert_eq!(jaccard(&[1], &[2]), 0.0);
        assert!((jaccard(&[0, 1], &[1, 2]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard(&[], &[]), 0.0);
    }

    #[test]
    fn profile_excludes_origin_at_order_zero_by_default() {
        let g = graph(&[(1, 2), (2, 3)]);
        let h = hop_sets(&g, InventorId(1), 1, &mut HopScratch::default()).unwrap();
        let scopes = vec![vec![0, 1], vec![0, 1], vec![5]];
        assert_eq!(jaccard_profile(&h, &scopes, JaccardOrigin::Exclude), vec![Some(1.0), Some(0.0)]);
        assert_eq!(jaccard_profile(&h, &scopes, JaccardOrigin::Include), vec![Some(1.0), Some(0.0)]);
        let scopes2 = vec![vec![0], vec![1], vec![5]];
        assert_eq!(jaccard_profile(&h, &scopes2, JaccardOrigin::Include)[0], Some(0.5));
    }

    #[test]
    fn dump_rows_are_sorted() {
        let g = graph(&[(3, 1), (1, 2), (2, 4)]);
        let h = hop_sets(&g, InventorId(1), 1, &mut HopScratch::default()).unwrap();
        let rows: Vec<(usize, u64)> = hop_dump_rows(&g, &h).iter().map(|r| (r.2, r.3 .0)).collect();
        assert_eq!(rows, vec![(0, 1), (0, 2), (0, 3), (1, 4)]);
    }

    proptest::proptest! {
        #[test]
        fn frontiers_are_disjoint_and_adjacent(
            edges in proptest::collection::vec((1u64..25, 1u64..25), 1..60),
            origin in 1u64..25,
        ) {
            let edges: Vec<(u64, u64)> = edges.into_iter().filter(|(a, b)| a != b).collect();
            proptest::prop_assume!(edges.iter().any(|&(a, b)| a == origin || b == origin));
            let g = graph(&edges);
            let h = hop_sets(&g, InventorId(origin), 4, &mut HopScratch::default()).unwrap();
            let mut seen = std::collections::BTreeSet::new();
            for ell in 0..=4 {
                for &u in h.order(ell) {
                    proptest::prop_assert!(seen.insert(u));
                    if ell > 0 {
                        let touches_previous = g.neighbors(u).iter().any(|v| h.order(ell - 1).contains(v));
                        proptest::prop_assert!(touches_previous);
                    }
                }
            }
            proptest::prop_assert_eq!(h.cumulative(4).len(), seen.len());
        }
    }
}
