use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::Membership;
use crate::error::{Error, Result};
use crate::types::{CategoryLevel, FirmId, PatentId, PatentRecord, Period, Periodization};

/// Patent value per id.
pub type PatentValues = BTreeMap<PatentId, f64>;

/// How a patent's value `g_j` is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueMetric {
    /// Windowed forward citations from outside the inventors' firms.
    Quality,
    /// Reciprocal application-date rank within the primary subgroup.
    Novelty,
    /// The `value` column supplied with the patent file.
    Declared,
}

impl ValueMetric {
    pub fn name(self) -> &'static str {
        match self {
            ValueMetric::Quality => "quality",
            ValueMetric::Novelty => "novelty",
            ValueMetric::Declared => "declared",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "quality" => Some(ValueMetric::Quality),
            "novelty" => Some(ValueMetric::Novelty),
            "declared" => Some(ValueMetric::Declared),
            _ => None,
        }
    }
}

/// `g_j = 1 / r_j`, where `r_j` is the rank of patent `j` within its primary
/// subgroup ordered by `(application date, patent id)` over the whole corpus.
pub fn novelty_values(patents: &[PatentRecord]) -> PatentValues {
    let mut groups: HashMap<&str, Vec<(NaiveDate, PatentId)>> = HashMap::new();
    for p in patents {
        groups.entry(CategoryLevel::Subgroup.truncate(&p.category)).or_default().push((p.application_date, p.id));
    }
    let mut out = PatentValues::new();
    for (_, mut members) in groups {
        members.sort_unstable();
        for (r, (_, id)) in members.into_iter().enumerate() {
            out.insert(id, 1.0 / (r + 1) as f64);
        }
    }
    out
}

/// Patent values taken from the `value` column.
pub fn declared_values(patents: &[PatentRecord]) -> Result<PatentValues> {
    patents
        .iter()
        .map(|p| match p.value {
            Some(v) if v.is_finite() && v >= 0.0 => Ok((p.id, v)),
            Some(v) => Err(Error::data(format!("patent {} has invalid value {v}", p.id))),
            None => Err(Error::data(format!("patent {} has no declared value", p.id))),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowOrigin {
    Application,
    Publication,
}

/// Citations count when they arrive within `days` of the origin date.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CitationWindow {
    pub days: f64,
    pub origin: WindowOrigin,
}

impl Default for CitationWindow {
    fn default() -> Self {
        CitationWindow { days: 5.0 * 365.25, origin: WindowOrigin::Application }
    }
}

impl CitationWindow {
    pub fn contains(&self, origin: NaiveDate, date: NaiveDate) -> bool {
        let d = (date - origin).num_days();
        d >= 0 && (d as f64) <= self.days
    }
}

/// Citation counts dropped while computing quality values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QualityLog {
    pub counted: u64,
    pub outside_window: u64,
    pub firm_overlap: u64,
    /// Citing patents missing from the corpus; their inventors are unknown.
    pub unknown_citing: BTreeSet<PatentId>,
    pub unknown_citing_count: u64,
    /// Citing patents dated outside every configured period.
    pub unperiodized: u64,
}

/// Forward citations within the window from potential citing patents.
///
/// A citing patent `k` of period `t` is dropped when one of its inventors
/// belonged in period `t` to the same firm as an inventor of the cited patent
/// in period `t`, or is itself an inventor of the cited patent.
pub fn quality_values(
    patents: &[PatentRecord],
    membership: &Membership,
    periods: &Periodization,
    window: CitationWindow,
) -> Result<(PatentValues, QualityLog)> {
    let by_id: HashMap<PatentId, &PatentRecord> = patents.iter().map(|p| (p.id, p)).collect();
    let mut log = QualityLog::default();
    let mut out = PatentValues::new();
    for p in patents {
        let origin = match window.origin {
            WindowOrigin::Application => p.application_date,
            WindowOrigin::Publication => {
                p.publication_date.ok_or_else(|| Error::data(format!("patent {} has no publication date", p.id)))?
            }
        };
        let mut firms: BTreeSet<(Period, FirmId)> = BTreeSet::new();
        for &i in &p.inventors {
            for (t, f) in membership.firms_of(i) {
                firms.insert((t, f));
            }
        }
        let mut g = 0u64;
        for c in &p.cited_by {
            if !window.contains(origin, c.date) {
                log.outside_window += 1;
                continue;
            }
            let Some(citing) = by_id.get(&c.citing) else {
                log.unknown_citing.insert(c.citing);
                log.unknown_citing_count += 1;
                continue;
            };
            let Some(t) = periods.period_of(citing.application_date) else {
                log.unperiodized += 1;
                continue;
            };
            let overlap = citing
                .inventors
                .iter()
                .any(|&u| p.has_inventor(u) || membership.firm(u, t).is_some_and(|f| firms.contains(&(t, f))));
            if overlap {
                log.firm_overlap += 1;
            } else {
                g += 1;
            }
        }
        log.counted += g;
        out.insert(p.id, g as f64);
    }
    Ok((out, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Citation, InventorId, InventorRecord};

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn pat(id: u64, team: &[u64], cat: &str, date: NaiveDate) -> PatentRecord {
        PatentRecord::new(PatentId(id), team.iter().map(|&i| InventorId(i)).collect(), cat, date)
    }

    fn rec(i: u64, t: u8, f: u64) -> InventorRecord {
        InventorRecord {
            inventor: InventorId(i),
            period: Period(t),
            firm: Some(FirmId(f)),
            establishment: None,
            location: None,
        }
    }

    #[test]
    fn novelty_ranks_within_subgroup() {
        let ps = vec![
            pat(3, &[1], "A01B1/00", d(2003, 1, 1)),
            pat(1, &[1], "A01B1/00", d(2001, 1, 1)),
            pat(2, &[1], "A01B1/00", d(2002, 1, 1)),
            pat(4, &[1], "H04L9/32", d(2009, 1, 1)),
        ];
        let v = novelty_values(&ps);
        assert_eq!(v[&PatentId(1)], 1.0);
        assert_eq!(v[&PatentId(2)], 0.5);
        assert_eq!(v[&PatentId(3)], 1.0 / 3.0);
        assert_eq!(v[&PatentId(4)], 1.0);
    }

    #[test]
    fn novelty_ties_break_on_patent_id() {
        let ps = vec![pat(9, &[1], "B", d(2001, 1, 1)), pat(5, &[2], "B", d(2001, 1, 1))];
        let v = novelty_values(&ps);
        assert_eq!(v[&PatentId(5)], 1.0);
        assert_eq!(v[&PatentId(9)], 0.5);
    }

    fn membership() -> Membership {
        Membership::new(&[rec(1, 1, 100), rec(2, 1, 200), rec(1, 2, 100), rec(3, 2, 100), rec(4, 2, 300)])
    }

    #[test]
    fn uncited_patent_has_zero_quality() {
        let ps = vec![pat(1, &[1], "A", d(2001, 1, 1))];
        let (v, _) = quality_values(&ps, &membership(), &Periodization::default(), CitationWindow::default()).unwrap();
        assert_eq!(v[&PatentId(1)], 0.0);
    }

    #[test]
    fn citation_from_a_firm_mate_is_excluded() {
        let mut cited = pat(1, &[1], "A", d(2001, 1, 1));
        cited.cited_by.push(Citation { citing: PatentId(2), date: d(2005, 6, 1) });
        let citing = pat(2, &[3], "A", d(2005, 6, 1));
        let (v, log) =
            quality_values(&[cited, citing], &membership(), &Periodization::default(), CitationWindow::default())
                .unwrap();
        assert_eq!(v[&PatentId(1)], 0.0);
        assert_eq!(log.firm_overlap, 1);
    }

    #[test]
    fn mixed_citation_list() {
        let mut cited = pat(1, &[1], "A", d(2001, 1, 1));
        let citers = vec![
            pat(10, &[3], "A", d(2006, 1, 1)),    // firm 100 in period 2: excluded
            pat(11, &[1, 4], "A", d(2002, 1, 1)), // self-citation: excluded
            pat(12, &[4], "A", d(2005, 3, 1)),    // counted
            pat(13, &[2], "A", d(2003, 1, 1)),    // counted
            pat(14, &[4], "A", d(2008, 1, 1)),    // outside five years
        ];
        for c in &citers {
            cited.cited_by.push(Citation { citing: c.id, date: c.application_date });
        }
        cited.cited_by.push(Citation { citing: PatentId(99), date: d(2002, 1, 1) });
        let mut all = vec![cited];
        all.extend(citers);
        let (v, log) =
            quality_values(&all, &membership(), &Periodization::default(), CitationWindow::default()).unwrap();
        assert_eq!(v[&PatentId(1)], 2.0);
        assert_eq!(log.firm_overlap, 2);
        assert_eq!(log.outside_window, 1);
        assert_eq!(log.unknown_citing_count, 1);
    }

    #[test]
    fn window_edge_is_inclusive() {
        let w = CitationWindow::default();
        let o = d(2001, 1, 1);
        assert!(w.contains(o, o + chrono::Duration::days(1826)));
        assert!(!w.contains(o, o + chrono::Duration::days(1827)));
    }

    #[test]
    fn declared_values_require_the_column() {
        let mut p = pat(1, &[1], "A", d(2001, 1, 1));
        assert!(declared_values(std::slice::from_ref(&p)).is_err());
        p.value = Some(2.5);
        assert_eq!(declared_values(&[p]).unwrap()[&PatentId(1)], 2.5);
    }
}
