use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::CorpusPaths;
use crate::error::{Error, Result};
use crate::estimator::{Transform, VcvKind};
use crate::geo::NeighborhoodRadii;
use crate::measures::{CitationWindow, ValueMetric, WindowOrigin};
use crate::network::JaccardOrigin;
use crate::types::{CategoryLevel, Period, PeriodSpan, Periodization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VcvChoice {
    Classical,
    Robust,
    #[default]
    Cluster,
}

pub use crate::counterfactual::RewireLevel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodConfig {
    pub spans: Vec<PeriodSpan>,
    /// The two panel periods, earlier first.
    pub panel: [u8; 2],
}

impl Default for PeriodConfig {
    fn default() -> Self {
        PeriodConfig { spans: Periodization::default().spans().to_vec(), panel: [1, 2] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    pub metric: ValueMetric,
    pub window_days: f64,
    pub window_origin: WindowOrigin,
    /// Category level for the cumulative scope `k`.
    pub scope_level: CategoryLevel,
    /// Category level for the Jaccard profile.
    pub jaccard_level: CategoryLevel,
    pub jaccard_include_self: bool,
    pub radii: NeighborhoodRadii,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        let w = CitationWindow::default();
        MeasureConfig {
            metric: ValueMetric::Quality,
            window_days: w.days,
            window_origin: w.origin,
            scope_level: CategoryLevel::Subgroup,
            jaccard_level: CategoryLevel::Subgroup,
            jaccard_include_self: false,
            radii: NeighborhoodRadii::default(),
        }
    }
}

impl MeasureConfig {
    pub fn window(&self) -> CitationWindow {
        CitationWindow { days: self.window_days, origin: self.window_origin }
    }

    pub fn jaccard_origin(&self) -> JaccardOrigin {
        if self.jaccard_include_self {
            JaccardOrigin::Include
        } else {
            JaccardOrigin::Exclude
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    /// Indirect-collaborator orders used as instruments.
    pub instruments: Vec<usize>,
    /// Deepest order that must be non-empty for an inventor to enter the sample.
    pub sample_order: usize,
    pub vcv: VcvChoice,
    /// Small-sample factor on the cluster covariance.
    pub cr1: bool,
    pub transform: Transform,
    pub neighborhood_controls: bool,
    pub firm_controls: bool,
    pub ipc_effects: bool,
    pub ci_level: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            instruments: vec![3, 4, 5],
            sample_order: 5,
            vcv: VcvChoice::Cluster,
            cr1: true,
            transform: Transform::Within,
            neighborhood_controls: true,
            firm_controls: false,
            ipc_effects: true,
            ci_level: 0.95,
        }
    }
}

impl EstimationConfig {
    pub fn vcv_kind(&self) -> VcvKind {
        match self.vcv {
            VcvChoice::Classical => VcvKind::Classical,
            VcvChoice::Robust => VcvKind::Robust,
            VcvChoice::Cluster => VcvKind::Cluster { cr1: self.cr1 },
        }
    }

    /// Orders the panel must carry: the configured set.
    pub fn instrument_orders(&self) -> Vec<usize> {
        let mut v = self.instruments.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Deepest order any stage needs.
    pub fn max_order(&self) -> usize {
        self.instruments.iter().copied().chain([self.sample_order, 2]).max().unwrap_or(5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterfactualConfig {
    pub enabled: bool,
    pub draws: usize,
    pub level: RewireLevel,
    /// Independent draws per period; otherwise each inventor reuses one
    /// random stream in both periods.
    pub per_period: bool,
    /// Add `ln(1 + f)` and `ln(1 + s^f)` (or the establishment versions) to
    /// the counterfactual regressions.
    pub group_controls: bool,
    /// Maximum share of draws whose estimation may fail.
    pub max_skip_rate: f64,
}

impl Default for CounterfactualConfig {
    fn default() -> Self {
        CounterfactualConfig {
            enabled: false,
            draws: 1000,
            level: RewireLevel::Firm,
            per_period: true,
            group_controls: false,
            max_skip_rate: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub inputs: CorpusPaths,
    pub periods: PeriodConfig,
    pub measures: MeasureConfig,
    pub estimation: EstimationConfig,
    pub counterfactual: CounterfactualConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 1,
            output_dir: PathBuf::from("out"),
            inputs: CorpusPaths::default(),
            periods: PeriodConfig::default(),
            measures: MeasureConfig::default(),
            estimation: EstimationConfig::default(),
            counterfactual: CounterfactualConfig::default(),
        }
    }
}

/// Sets `a.b.c = value` inside a TOML table. The value is parsed as a TOML
/// value when possible (`3`, `true`, `[3, 4]`) and taken as a string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override {assignment:?} is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(format!("invalid override key {key:?}")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("override key {key:?} descends into a non-table value")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl PipelineConfig {
    /// Parses a config text with overrides applied on top; relative paths
    /// are resolved against `base`.
    pub fn parse(text: &str, overrides: &[String], base: &Path) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: PipelineConfig = table.try_into().map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        cfg.inputs = cfg.inputs.relative_to(base);
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, overrides, &base)
    }

    pub fn periodization(&self) -> Result<Periodization> {
        Periodization::new(self.periods.spans.clone())
    }

    pub fn panel_periods(&self) -> [Period; 2] {
        self.periods.panel.map(Period)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.periodization()?;
        let [a, b] = self.periods.panel;
        if a >= b {
            return Err(Error::config("panel periods must be two increasing period numbers"));
        }
        for t in [a, b] {
            if !p.spans().iter().any(|s| s.period.0 == t) {
                return Err(Error::config(format!("panel period {t} is not defined")));
            }
        }
        let e = &self.estimation;
        if e.instruments.is_empty() || e.instruments.iter().any(|&l| !(1..=5).contains(&l)) {
            return Err(Error::config("instrument orders must be a non-empty subset of 1..=5"));
        }
        if !(1..=5).contains(&e.sample_order) {
            return Err(Error::config("sample_order must lie in 1..=5"));
        }
        if !(e.ci_level > 0.0 && e.ci_level < 1.0) {
            return Err(Error::config("ci_level must lie in (0, 1)"));
        }
        if !(self.measures.window_days >= 0.0) {
            return Err(Error::config("window_days must be non-negative"));
        }
        let c = &self.counterfactual;
        if c.enabled && c.draws == 0 {
            return Err(Error::config("counterfactual draws must be positive"));
        }
        if !(0.0..=1.0).contains(&c.max_skip_rate) {
            return Err(Error::config("max_skip_rate must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Canonical text of the resolved configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_text() {
        let c = PipelineConfig::parse("", &[], Path::new("/data")).unwrap();
        assert_eq!(c.estimation.instruments, vec![3, 4, 5]);
        assert_eq!(c.inputs.patents, PathBuf::from("/data/patents.csv"));
        assert_eq!(c.output_dir, PathBuf::from("/data/out"));
    }

    #[test]
    fn overrides_take_precedence() {
        let text = "seed = 4\n[estimation]\ninstruments = [3, 4, 5]\n";
        let o = vec!["estimation.instruments=[3]".to_string(), "measures.metric=novelty".to_string()];
        let c = PipelineConfig::parse(text, &o, Path::new(".")).unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.estimation.instruments, vec![3]);
        assert_eq!(c.measures.metric, ValueMetric::Novelty);
    }

    #[test]
    fn invalid_orders_are_config_errors() {
        let o = vec!["estimation.instruments=[6]".to_string()];
        assert!(matches!(PipelineConfig::parse("", &o, Path::new(".")), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::parse("bogus = 1", &[], Path::new(".")), Err(Error::Config(_))));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }
}
