use rayon::prelude::*;

use super::config::PipelineConfig;
use crate::corpus::Corpus;
use crate::error::Result;
use crate::measures::{
    all_pairwise, declared_values, novelty_values, quality_values, Membership, PairwiseMeasures, PatentValues,
    PatentWeights, QualityLog, ScopeHistory, ValueMetric,
};
use crate::network::{hop_sets, CollaborationGraph, HopScratch, HopSets};
use crate::types::{InventorId, Period, Periodization};

/// Graph and pairwise measures of one panel period.
pub struct PeriodData {
    pub period: Period,
    pub graph: CollaborationGraph,
    pub weights: PatentWeights,
    pub measures: Vec<Option<PairwiseMeasures>>,
    /// `k^D` per node; NaN where the inventor has no collaborator.
    pub kd: Vec<f64>,
    /// `ybar` per node.
    pub y_bar: Vec<f64>,
}

impl PeriodData {
    pub fn new(graph: CollaborationGraph, values: &PatentValues) -> Result<Self> {
        let weights = PatentWeights::new(&graph, values)?;
        let measures = all_pairwise(&graph, &weights);
        let kd = measures.iter().map(|m| m.map_or(f64::NAN, |m| m.k_d)).collect();
        let y_bar = (0..graph.node_count()).map(|u| weights.total_value(&graph, u)).collect();
        Ok(PeriodData { period: graph.period(), graph, weights, measures, kd, y_bar })
    }

    pub fn measures_of(&self, inventor: InventorId) -> Option<&PairwiseMeasures> {
        self.measures[self.graph.node(inventor)?].as_ref()
    }

    /// Frontiers for several inventors, in input order.
    pub fn hops(&self, inventors: &[InventorId], max_order: usize) -> Result<Vec<HopSets>> {
        inventors.par_iter().map_init(HopScratch::default, |s, &i| hop_sets(&self.graph, i, max_order, s)).collect()
    }
}

pub struct Measurement {
    pub periodization: Periodization,
    pub membership: Membership,
    pub scopes: ScopeHistory,
    pub values: PatentValues,
    pub quality_log: Option<QualityLog>,
    pub panel: [PeriodData; 2],
}

pub fn patent_values(
    corpus: &Corpus,
    membership: &Membership,
    periods: &Periodization,
    cfg: &PipelineConfig,
) -> Result<(PatentValues, Option<QualityLog>)> {
    Ok(match cfg.measures.metric {
        ValueMetric::Novelty => (novelty_values(&corpus.patents), None),
        ValueMetric::Declared => (declared_values(&corpus.patents)?, None),
        ValueMetric::Quality => {
            let (v, log) = quality_values(&corpus.patents, membership, periods, cfg.measures.window())?;
            (v, Some(log))
        }
    })
}

/// Patent values, both panel graphs with their measures, and scope histories.
pub fn measure(corpus: &Corpus, cfg: &PipelineConfig) -> Result<Measurement> {
    let periodization = cfg.periodization()?;
    let membership = Membership::new(&corpus.inventors);
    let (values, quality_log) = patent_values(corpus, &membership, &periodization, cfg)?;
    let scopes = ScopeHistory::new(&corpus.patents, &periodization, cfg.measures.scope_level);
    let [a, b] = cfg.panel_periods();
    let period = |t: Period| -> Result<PeriodData> {
        let g = CollaborationGraph::build(&corpus.patents, &periodization, t)?.with_labels(&corpus.inventors);
        PeriodData::new(g, &values)
    };
    let panel = [period(a)?, period(b)?];
    Ok(Measurement { periodization, membership, scopes, values, quality_log, panel })
}
