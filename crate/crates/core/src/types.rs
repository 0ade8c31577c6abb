//! Shared record types for patents, inventors and periods.

use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident, $inner:ty) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub struct $name(pub $inner);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_newtype!(
    /// Pre-resolved inventor identity.
    InventorId,
    u64
);
id_newtype!(PatentId, u64);
id_newtype!(FirmId, u64);
id_newtype!(EstablishmentId, u64);

/// Aggregated multi-year period. Period 0 holds pre-sample years, periods 1
/// and 2 the panel, period 3 everything afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Period(pub u8);

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Inclusive calendar-year span of one period; `last_year = None` is open-ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSpan {
    pub period: Period,
    pub first_year: i32,
    pub last_year: Option<i32>,
}

/// Maps application dates onto aggregated periods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Periodization {
    spans: Vec<PeriodSpan>,
}

impl Default for Periodization {
    fn default() -> Self {
        Periodization {
            spans: vec![
                PeriodSpan { period: Period(0), first_year: 1993, last_year: Some(1999) },
                PeriodSpan { period: Period(1), first_year: 2000, last_year: Some(2004) },
                PeriodSpan { period: Period(2), first_year: 2005, last_year: Some(2009) },
                PeriodSpan { period: Period(3), first_year: 2010, last_year: None },
            ],
        }
    }
}

impl Periodization {
    /// Spans must be ordered, non-overlapping and carry strictly increasing
    /// period numbers.
    pub fn new(mut spans: Vec<PeriodSpan>) -> Result<Self> {
        if spans.is_empty() {
            return Err(Error::config("at least one period is required"));
        }
        spans.sort_by_key(|s| s.first_year);
        for w in spans.windows(2) {
            let end = w[0]
                .last_year
                .ok_or_else(|| Error::config(format!("period {} is open-ended but not last", w[0].period)))?;
            if end >= w[1].first_year {
                return Err(Error::config(format!("periods {} and {} overlap", w[0].period, w[1].period)));
            }
            if w[0].period >= w[1].period {
                return Err(Error::config("period numbers must increase with time"));
            }
        }
        for s in &spans {
            if let Some(last) = s.last_year {
                if last < s.first_year {
                    return Err(Error::config(format!("period {} ends before it starts", s.period)));
                }
            }
        }
        Ok(Periodization { spans })
    }

    pub fn spans(&self) -> &[PeriodSpan] {
        &self.spans
    }

    pub fn period_of(&self, date: NaiveDate) -> Option<Period> {
        let year = date.year();
        self.spans.iter().find(|s| year >= s.first_year && s.last_year.is_none_or(|l| year <= l)).map(|s| s.period)
    }
}

/// One forward citation received by a patent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Citation {
    pub citing: PatentId,
    pub date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatentRecord {
    pub id: PatentId,
    /// Sorted, duplicate-free inventor set.
    pub inventors: Vec<InventorId>,
    /// Primary technology category, an IPC-style subgroup code such as `A01C1/06`.
    pub category: String,
    pub application_date: NaiveDate,
    /// Needed only when citation windows start at publication.
    pub publication_date: Option<NaiveDate>,
    pub cited_by: Vec<Citation>,
    /// Externally supplied patent value, used by the `declared` metric.
    pub value: Option<f64>,
}

impl PatentRecord {
    pub fn new(id: PatentId, mut inventors: Vec<InventorId>, category: impl Into<String>, date: NaiveDate) -> Self {
        inventors.sort_unstable();
        inventors.dedup();
        PatentRecord {
            id,
            inventors,
            category: category.into(),
            application_date: date,
            publication_date: None,
            cited_by: Vec::new(),
            value: None,
        }
    }

    pub fn team_size(&self) -> usize {
        self.inventors.len()
    }

    pub fn has_inventor(&self, inventor: InventorId) -> bool {
        self.inventors.binary_search(&inventor).is_ok()
    }

    pub fn validate(&self) -> Result<()> {
        if self.inventors.is_empty() {
            return Err(Error::EmptyTeam(self.id));
        }
        if self.category.trim().is_empty() {
            return Err(Error::data(format!("patent {} has no primary category", self.id)));
        }
        Ok(())
    }
}

/// Firm, establishment and location of one inventor in one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventorRecord {
    pub inventor: InventorId,
    pub period: Period,
    pub firm: Option<FirmId>,
    pub establishment: Option<EstablishmentId>,
    pub location: Option<GeoPoint>,
}

/// Levels of the IPC hierarchy used for specialization profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoryLevel {
    Section,
    Class,
    Subclass,
    Subgroup,
}

impl CategoryLevel {
    pub const ALL: [CategoryLevel; 4] =
        [CategoryLevel::Section, CategoryLevel::Class, CategoryLevel::Subclass, CategoryLevel::Subgroup];

    pub fn name(self) -> &'static str {
        match self {
            CategoryLevel::Section => "section",
            CategoryLevel::Class => "class",
            CategoryLevel::Subclass => "subclass",
            CategoryLevel::Subgroup => "subgroup",
        }
    }

    /// Truncates a subgroup code (`A01C1/06`) to this level (`A`, `A01`, `A01C`).
    pub fn truncate(self, code: &str) -> &str {
        let code = code.trim();
        let cut = match self {
            CategoryLevel::Section => 1,
            CategoryLevel::Class => 3,
            CategoryLevel::Subclass => 4,
            CategoryLevel::Subgroup => return code,
        };
        match code.char_indices().nth(cut) {
            Some((idx, _)) => &code[..idx],
            None => code,
        }
    }
}
