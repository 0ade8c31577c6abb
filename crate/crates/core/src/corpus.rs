//! Typed in-memory corpus and its delimited-text table formats.
//!
//! Every table is a comma-separated file with a one-line header. Column order:
//!
//! | file | columns |
//! |------|---------|
//! | `patents.csv` | `patent_id, application_date, publication_date, category, inventors, value` |
//! | `citations.csv` | `cited_id, citing_id, citing_date` |
//! | `inventors.csv` | `inventor_id, period, firm_id, establishment_id, lat, lon` |
//! | `firms.csv` | `firm_id, industry` |
//! | `establishments.csv` | `period, establishment_id, industry, employment, output, lat, lon` |
//! | `population.csv` | `lat, lon, population` |
//! | `uas.csv` | `ua_id, lat, lon` (one row per member cell) |
//! | `industry_rnd.csv` | `period, industry, expenditure` |
//!
//! Dates are ISO `YYYY-MM-DD`; `inventors` is a `;`-separated id list;
//! optional cells are left empty.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{EstablishmentSite, GeoPoint, PopulationCell, UaId, UrbanAgglomeration};
use crate::types::{Citation, EstablishmentId, FirmId, InventorId, InventorRecord, PatentId, PatentRecord, Period};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmRecord {
    pub id: FirmId,
    pub industry: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndustryRnd {
    pub period: Period,
    pub industry: String,
    pub expenditure: f64,
}

/// A citation whose cited patent is not in the corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExternalCitation {
    pub cited: PatentId,
    pub citing: PatentId,
    pub date: NaiveDate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    /// Sorted by id; `cited_by` sorted by `(date, citing)`.
    pub patents: Vec<PatentRecord>,
    /// Sorted by `(inventor, period)`.
    pub inventors: Vec<InventorRecord>,
    pub firms: Vec<FirmRecord>,
    pub establishments: Vec<(Period, EstablishmentSite)>,
    pub population: Vec<PopulationCell>,
    pub uas: Vec<UrbanAgglomeration>,
    pub industry_rnd: Vec<IndustryRnd>,
    pub external_citations: Vec<ExternalCitation>,
}

/// File names inside a corpus directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusPaths {
    pub patents: PathBuf,
    pub citations: Option<PathBuf>,
    pub inventors: PathBuf,
    pub firms: Option<PathBuf>,
    pub establishments: Option<PathBuf>,
    pub population: Option<PathBuf>,
    pub uas: Option<PathBuf>,
    pub industry_rnd: Option<PathBuf>,
}

impl Default for CorpusPaths {
    fn default() -> Self {
        CorpusPaths::in_dir(Path::new("."))
    }
}

impl CorpusPaths {
    pub fn in_dir(dir: &Path) -> Self {
        CorpusPaths {
            patents: dir.join("patents.csv"),
            citations: Some(dir.join("citations.csv")),
            inventors: dir.join("inventors.csv"),
            firms: Some(dir.join("firms.csv")),
            establishments: Some(dir.join("establishments.csv")),
            population: Some(dir.join("population.csv")),
            uas: Some(dir.join("uas.csv")),
            industry_rnd: Some(dir.join("industry_rnd.csv")),
        }
    }

    /// Resolves relative paths against `base`.
    pub fn relative_to(&self, base: &Path) -> Self {
        let fix = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        CorpusPaths {
            patents: fix(&self.patents),
            citations: self.citations.as_ref().map(fix),
            inventors: fix(&self.inventors),
            firms: self.firms.as_ref().map(fix),
            establishments: self.establishments.as_ref().map(fix),
            population: self.population.as_ref().map(fix),
            uas: self.uas.as_ref().map(fix),
            industry_rnd: self.industry_rnd.as_ref().map(fix),
        }
    }
}

struct Table {
    file: String,
    reader: csv::Reader<Box<dyn Read>>,
}

struct Row<'a> {
    file: &'a str,
    line: u64,
    record: csv::StringRecord,
}

impl Row<'_> {
    fn err(&self, column: usize, message: impl Into<String>) -> Error {
        Error::Parse { file: self.file.to_string(), line: self.line, column: column + 1, message: message.into() }
    }

    fn raw(&self, i: usize) -> Result<&str> {
        self.record.get(i).map(str::trim).ok_or_else(|| self.err(i, "missing field"))
    }

    fn parse<T: FromStr>(&self, i: usize, what: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let s = self.raw(i)?;
        s.parse().map_err(|e| self.err(i, format!("invalid {what} {s:?}: {e}")))
    }

    fn optional<T: FromStr>(&self, i: usize, what: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if self.raw(i)?.is_empty() {
            Ok(None)
        } else {
            self.parse(i, what).map(Some)
        }
    }

    fn date(&self, i: usize) -> Result<NaiveDate> {
        let s = self.raw(i)?;
        NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| self.err(i, format!("invalid date {s:?}: {e}")))
    }

    fn finite(&self, i: usize, what: &str) -> Result<f64> {
        let v: f64 = self.parse(i, what)?;
        if !v.is_finite() {
            return Err(self.err(i, format!("{what} must be finite")));
        }
        Ok(v)
    }

    fn point(&self, lat: usize, lon: usize) -> Result<GeoPoint> {
        let (a, b) = (self.finite(lat, "latitude")?, self.finite(lon, "longitude")?);
        GeoPoint::new(a, b).map_err(|e| self.err(lat, e.to_string()))
    }

    fn period(&self, i: usize) -> Result<Period> {
        self.parse::<u8>(i, "period").map(Period)
    }
}

impl Table {
    fn open(path: &Path, header: &[&str]) -> Result<Self> {
        let file = path.display().to_string();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(Box::new(std::io::BufReader::new(f)) as Box<dyn Read>);
        let got = reader.headers().map_err(|e| csv_error(&file, e))?.clone();
        let names: Vec<&str> = got.iter().map(str::trim).collect();
        if names != header {
            return Err(Error::Parse {
                file,
                line: 1,
                column: 1,
                message: format!("expected header {:?}, found {:?}", header.join(","), names.join(",")),
            });
        }
        Ok(Table { file, reader })
    }

    fn rows<T>(mut self, mut f: impl FnMut(&Row<'_>) -> Result<T>) -> Result<Vec<T>> {
        let mut out = Vec::new();
        let mut record = csv::StringRecord::new();
        loop {
            match self.reader.read_record(&mut record) {
                Ok(false) => break,
                Ok(true) => {
                    let line = record.position().map_or(0, |p| p.line());
                    let row = Row { file: &self.file, line, record: record.clone() };
                    out.push(f(&row)?);
                }
                Err(e) => return Err(csv_error(&self.file, e)),
            }
        }
        Ok(out)
    }
}

fn csv_error(file: &str, e: csv::Error) -> Error {
    let (line, column) = match e.kind() {
        csv::ErrorKind::UnequalLengths { pos, len, expected_len } => {
            let col = (*len).min(*expected_len) as usize + 1;
            (pos.as_ref().map_or(0, |p| p.line()), col)
        }
        _ => (e.position().map_or(0, |p| p.line()), 1),
    };
    match e.kind() {
        csv::ErrorKind::Io(io) => {
            Error::Io { path: file.to_string(), source: std::io::Error::new(io.kind(), io.to_string()) }
        }
        _ => Error::Parse { file: file.to_string(), line, column, message: e.to_string() },
    }
}

const PATENT_HEADER: [&str; 6] =
    ["patent_id", "application_date", "publication_date", "category", "inventors", "value"];
const CITATION_HEADER: [&str; 3] = ["cited_id", "citing_id", "citing_date"];
const INVENTOR_HEADER: [&str; 6] = ["inventor_id", "period", "firm_id", "establishment_id", "lat", "lon"];
const FIRM_HEADER: [&str; 2] = ["firm_id", "industry"];
const ESTABLISHMENT_HEADER: [&str; 7] =
    ["period", "establishment_id", "industry", "employment", "output", "lat", "lon"];
const POPULATION_HEADER: [&str; 3] = ["lat", "lon", "population"];
const UA_HEADER: [&str; 3] = ["ua_id", "lat", "lon"];
const RND_HEADER: [&str; 3] = ["period", "industry", "expenditure"];

/// Counts reported while reading a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestLog {
    pub patents: usize,
    pub citations: usize,
    pub external_citations: usize,
    pub inventor_records: usize,
}

impl Corpus {
    /// Reads and validates all tables. Optional tables that are configured
    /// but missing on disk are an error; unconfigured ones stay empty.
    pub fn read(paths: &CorpusPaths) -> Result<(Corpus, IngestLog)> {
        let mut patents = Table::open(&paths.patents, &PATENT_HEADER)?.rows(|r| {
            let id = PatentId(r.parse(0, "patent id")?);
            let team: Vec<InventorId> = r
                .raw(4)?
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map(InventorId).map_err(|e| r.err(4, format!("invalid inventor id {s:?}: {e}"))))
                .collect::<Result<_>>()?;
            if team.is_empty() {
                return Err(r.err(4, format!("patent {id} has an empty inventor set")));
            }
            let category = r.raw(3)?;
            if category.is_empty() {
                return Err(r.err(3, format!("patent {id} has no primary category")));
            }
            let mut p = PatentRecord::new(id, team, category, r.date(1)?);
            if !r.raw(2)?.is_empty() {
                p.publication_date = Some(r.date(2)?);
            }
            p.value = r.optional::<f64>(5, "value")?;
            if p.value.is_some_and(|v| !(v >= 0.0 && v.is_finite())) {
                return Err(r.err(5, "patent value must be finite and non-negative"));
            }
            Ok(p)
        })?;
        if patents.is_empty() {
            return Err(Error::data(format!("{}: patent table has no rows", paths.patents.display())));
        }
        patents.sort_by_key(|p| p.id);
        if let Some(w) = patents.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::data(format!("duplicate patent id {}", w[0].id)));
        }

        let mut inventors = Table::open(&paths.inventors, &INVENTOR_HEADER)?.rows(|r| {
            let location = match (r.raw(4)?.is_empty(), r.raw(5)?.is_empty()) {
                (true, true) => None,
                (false, false) => Some(r.point(4, 5)?),
                _ => return Err(r.err(4, "latitude and longitude must both be present or both empty")),
            };
            Ok(InventorRecord {
                inventor: InventorId(r.parse(0, "inventor id")?),
                period: r.period(1)?,
                firm: r.optional(2, "firm id")?.map(FirmId),
                establishment: r.optional(3, "establishment id")?.map(EstablishmentId),
                location,
            })
        })?;
        inventors.sort_by_key(|r| (r.inventor, r.period));
        if let Some(w) = inventors.windows(2).find(|w| (w[0].inventor, w[0].period) == (w[1].inventor, w[1].period)) {
            return Err(Error::data(format!("inventor {} has two records for period {}", w[0].inventor, w[0].period)));
        }
        let known: BTreeSet<InventorId> = inventors.iter().map(|r| r.inventor).collect();
        let missing: Vec<String> = patents
            .iter()
            .flat_map(|p| {
                p.inventors.iter().filter(|i| !known.contains(i)).map(move |i| format!("{i} (patent {})", p.id))
            })
            .take(20)
            .collect();
        if !missing.is_empty() {
            return Err(Error::data(format!(
                "patent inventors missing from the inventor table: {}",
                missing.join(", ")
            )));
        }

        let mut log = IngestLog { patents: patents.len(), inventor_records: inventors.len(), ..Default::default() };
        let mut external_citations = Vec::new();
        if let Some(path) = &paths.citations {
            let rows = Table::open(path, &CITATION_HEADER)?
                .rows(|r| Ok((PatentId(r.parse(0, "cited id")?), PatentId(r.parse(1, "citing id")?), r.date(2)?)))?;
            let index: HashMap<PatentId, usize> = patents.iter().enumerate().map(|(k, p)| (p.id, k)).collect();
            for (cited, citing, date) in rows {
                log.citations += 1;
                match index.get(&cited) {
                    Some(&k) => patents[k].cited_by.push(Citation { citing, date }),
                    None => external_citations.push(ExternalCitation { cited, citing, date }),
                }
            }
            external_citations.sort();
            log.external_citations = external_citations.len();
            for p in &mut patents {
                p.cited_by.sort_by_key(|c| (c.date, c.citing));
            }
        }

        let firms = match &paths.firms {
            Some(path) => Table::open(path, &FIRM_HEADER)?
                .rows(|r| Ok(FirmRecord { id: FirmId(r.parse(0, "firm id")?), industry: r.raw(1)?.to_string() }))?,
            None => Vec::new(),
        };
        let firm_ids: BTreeSet<FirmId> = firms.iter().map(|f| f.id).collect();
        if !firms.is_empty() {
            if let Some(r) = inventors.iter().find(|r| r.firm.is_some_and(|f| !firm_ids.contains(&f))) {
                return Err(Error::data(format!(
                    "inventor {} period {} refers to unknown firm {}",
                    r.inventor,
                    r.period,
                    r.firm.unwrap()
                )));
            }
        }

        let establishments = match &paths.establishments {
            Some(path) => Table::open(path, &ESTABLISHMENT_HEADER)?.rows(|r| {
                let employment = r.finite(3, "employment")?;
                let output = r.finite(4, "output")?;
                if employment < 0.0 || output < 0.0 {
                    return Err(r.err(3, "employment and output must be non-negative"));
                }
                Ok((
                    r.period(0)?,
                    EstablishmentSite {
                        id: EstablishmentId(r.parse(1, "establishment id")?),
                        industry: r.raw(2)?.to_string(),
                        employment,
                        output,
                        location: r.point(5, 6)?,
                    },
                ))
            })?,
            None => Vec::new(),
        };

        let population = match &paths.population {
            Some(path) => Table::open(path, &POPULATION_HEADER)?.rows(|r| {
                let population = r.finite(2, "population")?;
                if population < 0.0 {
                    return Err(r.err(2, "population must be non-negative"));
                }
                Ok(PopulationCell { centroid: r.point(0, 1)?, population })
            })?,
            None => Vec::new(),
        };

        let uas = match &paths.uas {
            Some(path) => {
                let cells =
                    Table::open(path, &UA_HEADER)?.rows(|r| Ok((UaId(r.parse(0, "UA id")?), r.point(1, 2)?)))?;
                let mut by: BTreeMap<UaId, Vec<GeoPoint>> = BTreeMap::new();
                for (id, p) in cells {
                    by.entry(id).or_default().push(p);
                }
                let index =
                    crate::geo::PointIndex::new(population.iter().map(|c| (c.centroid, c.population)).collect(), 2.0);
                by.into_iter()
                    .map(|(id, cells)| {
                        let population =
                            cells.iter().map(|c| index.nearest_within(*c, 0.05).map_or(0.0, |(_, _, p)| *p)).sum();
                        UrbanAgglomeration { id, cells, population }
                    })
                    .collect()
            }
            None => Vec::new(),
        };

        let industry_rnd = match &paths.industry_rnd {
            Some(path) => Table::open(path, &RND_HEADER)?.rows(|r| {
                let expenditure = r.finite(2, "expenditure")?;
                if expenditure < 0.0 {
                    return Err(r.err(2, "expenditure must be non-negative"));
                }
                Ok(IndustryRnd { period: r.period(0)?, industry: r.raw(1)?.to_string(), expenditure })
            })?,
            None => Vec::new(),
        };

        let corpus =
            Corpus { patents, inventors, firms, establishments, population, uas, industry_rnd, external_citations };
        Ok((corpus, log))
    }

    /// Writes every table under `dir` with the default file names. Output
    /// is a pure function of the corpus.
    pub fn write(&self, dir: &Path) -> Result<CorpusPaths> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = CorpusPaths::in_dir(dir);
        let mut rows = Vec::with_capacity(self.patents.len());
        for p in &self.patents {
            let team: Vec<String> = p.inventors.iter().map(|i| i.to_string()).collect();
            rows.push(vec![
                p.id.to_string(),
                p.application_date.to_string(),
                p.publication_date.map(|d| d.to_string()).unwrap_or_default(),
                p.category.clone(),
                team.join(";"),
                p.value.map(fmt_f64).unwrap_or_default(),
            ]);
        }
        write_table(&paths.patents, &PATENT_HEADER, rows)?;

        let mut cites: Vec<(PatentId, PatentId, NaiveDate)> = self
            .patents
            .iter()
            .flat_map(|p| p.cited_by.iter().map(move |c| (p.id, c.citing, c.date)))
            .chain(self.external_citations.iter().map(|c| (c.cited, c.citing, c.date)))
            .collect();
        cites.sort();
        write_table(
            paths.citations.as_ref().unwrap(),
            &CITATION_HEADER,
            cites.into_iter().map(|(a, b, d)| vec![a.to_string(), b.to_string(), d.to_string()]),
        )?;

        write_table(
            &paths.inventors,
            &INVENTOR_HEADER,
            self.inventors.iter().map(|r| {
                vec![
                    r.inventor.to_string(),
                    r.period.to_string(),
                    r.firm.map(|f| f.to_string()).unwrap_or_default(),
                    r.establishment.map(|e| e.to_string()).unwrap_or_default(),
                    r.location.map(|p| fmt_f64(p.lat())).unwrap_or_default(),
                    r.location.map(|p| fmt_f64(p.lon())).unwrap_or_default(),
                ]
            }),
        )?;
        write_table(
            paths.firms.as_ref().unwrap(),
            &FIRM_HEADER,
            self.firms.iter().map(|f| vec![f.id.to_string(), f.industry.clone()]),
        )?;
        write_table(
            paths.establishments.as_ref().unwrap(),
            &ESTABLISHMENT_HEADER,
            self.establishments.iter().map(|(t, e)| {
                vec![
                    t.to_string(),
                    e.id.to_string(),
                    e.industry.clone(),
                    fmt_f64(e.employment),
                    fmt_f64(e.output),
                    fmt_f64(e.location.lat()),
                    fmt_f64(e.location.lon()),
                ]
            }),
        )?;
        write_table(
            paths.population.as_ref().unwrap(),
            &POPULATION_HEADER,
            self.population
                .iter()
                .map(|c| vec![fmt_f64(c.centroid.lat()), fmt_f64(c.centroid.lon()), fmt_f64(c.population)]),
        )?;
        write_table(
            paths.uas.as_ref().unwrap(),
            &UA_HEADER,
            self.uas
                .iter()
                .flat_map(|u| u.cells.iter().map(move |c| vec![u.id.to_string(), fmt_f64(c.lat()), fmt_f64(c.lon())])),
        )?;
        write_table(
            paths.industry_rnd.as_ref().unwrap(),
            &RND_HEADER,
            self.industry_rnd.iter().map(|r| vec![r.period.to_string(), r.industry.clone(), fmt_f64(r.expenditure)]),
        )?;
        Ok(paths)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Writes a header plus rows as comma-separated text.
pub fn write_table<I, R, S>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let wrap =
        |e: csv::Error| Error::Io { path: path.display().to_string(), source: std::io::Error::other(e.to_string()) };
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    let mut inner = w
        .into_inner()
        .map_err(|e| Error::Io { path: path.display().to_string(), source: std::io::Error::other(e.to_string()) })?;
    inner.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn minimal(dir: &Path) -> CorpusPaths {
        write(dir, "patents.csv", "patent_id,application_date,publication_date,category,inventors,value\n1,2001-02-03,,A01B1/00,1;2,\n2,2002-02-03,2003-08-01,A01B1/00,2,1.5\n");
        write(dir, "inventors.csv", "inventor_id,period,firm_id,establishment_id,lat,lon\n1,1,1,1,35,135\n2,1,1,1,,\n");
        write(dir, "citations.csv", "cited_id,citing_id,citing_date\n1,2,2002-02-03\n99,2,2002-02-03\n");
        CorpusPaths {
            patents: dir.join("patents.csv"),
            citations: Some(dir.join("citations.csv")),
            inventors: dir.join("inventors.csv"),
            firms: None,
            establishments: None,
            population: None,
            uas: None,
            industry_rnd: None,
        }
    }

    #[test]
    fn reads_minimal_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let (c, log) = Corpus::read(&minimal(dir.path())).unwrap();
        assert_eq!(c.patents.len(), 2);
        assert_eq!(c.patents[0].inventors, vec![InventorId(1), InventorId(2)]);
        assert_eq!(c.patents[0].cited_by.len(), 1);
        assert_eq!(c.patents[1].value, Some(1.5));
        assert_eq!(log.external_citations, 1);
        assert_eq!(c.external_citations[0].cited, PatentId(99));
        assert!(c.inventors[1].location.is_none());
    }

    #[test]
    fn empty_patent_table_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let paths = minimal(dir.path());
        write(dir.path(), "patents.csv", "patent_id,application_date,publication_date,category,inventors,value\n");
        assert!(matches!(Corpus::read(&paths), Err(Error::Data(_))));
    }

    #[test]
    fn parse_errors_name_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let paths = minimal(dir.path());
        write(dir.path(), "patents.csv", "patent_id,application_date,publication_date,category,inventors,value\n1,2001-02-03,,A01B1/00,1,\n2,2002-13-03,,A01B1/00,2,\n");
        match Corpus::read(&paths) {
            Err(Error::Parse { line, column, file, .. }) => {
                assert_eq!((line, column), (3, 2));
                assert!(file.ends_with("patents.csv"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_inventor_is_an_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let paths = minimal(dir.path());
        write(
            dir.path(),
            "patents.csv",
            "patent_id,application_date,publication_date,category,inventors,value\n1,2001-02-03,,A01B1/00,1;7,\n",
        );
        let err = Corpus::read(&paths).unwrap_err().to_string();
        assert!(err.contains("7 (patent 1)"), "{err}");
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (c, _) = Corpus::read(&minimal(dir.path())).unwrap();
        let out = dir.path().join("out");
        let paths = c.write(&out).unwrap();
        let (back, _) = Corpus::read(&paths).unwrap();
        assert_eq!(back, c);
    }
}
