use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::PipelineConfig;
use super::measure::Measurement;
use super::sample::ExclusionCounts;
use super::Estimates;
use crate::counterfactual::Ensemble;
use crate::error::{Error, Result};
use crate::estimator::{coefficient_rows, format_table, vcv_rows, Method, Panel};

const INCOMPLETE: &str = "INCOMPLETE";

/// Structured `key=value` log lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunLog {
    pub lines: Vec<String>,
}

impl RunLog {
    pub fn line(&mut self, l: String) {
        self.lines.push(l);
    }

    /// Value of `key` on the first line that has it.
    pub fn value(&self, key: &str) -> Option<&str> {
        let prefix = format!("{key}=");
        self.lines.iter().flat_map(|l| l.split(' ')).find_map(|kv| kv.strip_prefix(prefix.as_str()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    /// File name to SHA-256 hex digest.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut s = format!("config_hash={}\nseed={}\n", self.config_hash, self.seed);
        for (f, h) in &self.files {
            let _ = writeln!(s, "{h}  {f}");
        }
        s
    }
}

/// Writes report files and records their digests.
pub struct OutputWriter {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

impl OutputWriter {
    /// Creates the directory and marks it incomplete until [`Self::finish`].
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let w = OutputWriter { dir: dir.to_path_buf(), files: BTreeMap::new() };
        w.raw(INCOMPLETE, b"running\n")?;
        Ok(w)
    }

    fn raw(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
    }

    pub fn file(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        self.raw(name, bytes)?;
        self.files.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    pub fn csv<S: AsRef<str>>(
        &mut self,
        name: &str,
        header: &[S],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::data(format!("writing {name}: {e}"));
        w.write_record(header.iter().map(AsRef::as_ref)).map_err(io)?;
        for r in rows {
            w.write_record(&r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::data(format!("writing {name}: {e}")))?;
        self.file(name, &bytes)
    }

    pub fn measures(&mut self, m: &Measurement) -> Result<()> {
        let mut rows = Vec::new();
        for d in &m.panel {
            let g = &d.graph;
            for u in 0..g.node_count() {
                let i = g.id(u);
                let opt = |v: Option<u64>| v.map_or(String::new(), |x| x.to_string());
                let mut r = vec![
                    d.period.to_string(),
                    i.to_string(),
                    opt(g.firm(u).map(|f| f.0)),
                    opt(g.establishment(u).map(|e| e.0)),
                ];
                match &d.measures[u] {
                    Some(pm) => {
                        r.extend([pm.n.to_string(), num(pm.y_bar), num(pm.y), num(pm.y_p), num(pm.y_q), num(pm.k_d)])
                    }
                    None => r.extend([
                        "0".into(),
                        num(d.y_bar[u]),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]),
                }
                r.push(m.scopes.cumulative(i, d.period).to_string());
                rows.push(r);
            }
        }
        let header = ["period", "inventor", "firm", "establishment", "n", "y_bar", "y", "y_p", "y_q", "k_d", "k"];
        self.csv("measures.csv", &header, rows)
    }

    pub fn exclusions(&mut self, c: &ExclusionCounts) -> Result<()> {
        self.csv("exclusions.csv", &["rule", "count"], c.rows().into_iter().map(|(k, v)| vec![k, v.to_string()]))
    }

    pub fn panel(&mut self, p: &Panel) -> Result<()> {
        let mut header: Vec<String> =
            ["inventor", "period", "ln_y", "ln_yp", "ln_yq", "ln_kd", "ln_k", "ln_k2", "first_patent"]
                .map(String::from)
                .to_vec();
        header.extend(p.control_names.iter().cloned());
        header.extend(["ipc_class".to_string(), "cluster".to_string()]);
        header.extend(p.instrument_orders.iter().map(|l| format!("iv_l{l}")));
        let rows = p.rows.iter().map(|r| {
            let mut v = vec![
                r.inventor.to_string(),
                r.period.to_string(),
                num(r.ln_y),
                num(r.ln_yp),
                num(r.ln_yq),
                num(r.ln_kd),
                num(r.ln_k),
                num(r.ln_k2),
                (r.first_patent as u8).to_string(),
            ];
            v.extend(r.controls.iter().map(|c| num(*c)));
            v.push(r.ipc_class.clone());
            v.push(r.cluster.to_string());
            v.extend(r.instruments.iter().map(|c| num(*c)));
            v
        });
        self.csv("panel.csv", &header, rows)
    }

    pub fn estimates(&mut self, e: &Estimates, level: f64) -> Result<()> {
        let mut rows = Vec::new();
        let mut vcv = Vec::new();
        let mut diag = Vec::new();
        let mut first = Vec::new();
        for (col, r) in &e.columns {
            for (c, term, b, se) in coefficient_rows(col, r) {
                let (lo, hi) = r.ci(&term, level).unwrap_or((f64::NAN, f64::NAN));
                rows.push(vec![c, r.outcome.clone(), term, num(b), num(se), num(lo), num(hi)]);
            }
            vcv.extend(vcv_rows(col, r).into_iter().map(|(c, a, b, v)| vec![c, a, b, num(v)]));
            let w = r.weak_iv;
            let wv =
                |f: fn(&crate::estimator::WeakIvDiagnostics) -> f64| w.as_ref().map_or(String::new(), |w| num(f(w)));
            let (j, df, p) = match (&r.hansen_j, r.method) {
                (Some(h), _) => (num(h.statistic), h.df.to_string(), num(h.p_value)),
                (None, Method::Tsls) => ("n/a".into(), "n/a".into(), "n/a".into()),
                (None, Method::Ols) => (String::new(), String::new(), String::new()),
            };
            diag.push(vec![
                col.clone(),
                format!("{:?}", r.method).to_lowercase(),
                r.n_obs.to_string(),
                r.n_clusters.to_string(),
                num(r.r2_within),
                wv(|w| w.effective_f),
                wv(|w| w.critical_value),
                wv(|w| w.critical_value_simplified),
                wv(|w| w.k_eff),
                j,
                df,
                p,
            ]);
            if let Some(fs) = &r.first_stage {
                for (k, name) in fs.names.iter().enumerate() {
                    first.push(vec![
                        col.clone(),
                        name.clone(),
                        num(fs.coefficients[k]),
                        num(fs.std_errors[k]),
                        num(fs.partial_f),
                        num(fs.r2),
                        fs.n_obs.to_string(),
                    ]);
                }
            }
        }
        self.csv("estimates.csv", &["column", "outcome", "term", "estimate", "std_error", "ci_low", "ci_high"], rows)?;
        self.csv("vcv.csv", &["column", "row", "col", "value"], vcv)?;
        self.csv(
            "diagnostics.csv",
            &[
                "column",
                "method",
                "n_obs",
                "n_clusters",
                "r2_within",
                "effective_f",
                "critical_value",
                "critical_value_simplified",
                "k_eff",
                "hansen_j",
                "hansen_df",
                "hansen_p",
            ],
            diag,
        )?;
        self.csv("first_stage.csv", &["column", "term", "estimate", "std_error", "partial_f", "r2", "n_obs"], first)?;
        let cols: Vec<(String, &crate::estimator::EstimationResult)> =
            e.columns.iter().map(|(c, r)| (c.clone(), r)).collect();
        self.file("table.txt", format_table(&cols).as_bytes())?;

        let d = &e.decomposition;
        let z = crate::estimator::ci_z(level);
        let se = |k: usize| d.vcv[k][k].max(0.0).sqrt();
        let row = |name: &str, b: f64, s: f64| vec![name.to_string(), num(b), num(s), num(b - z * s), num(b + z * s)];
        let rows = vec![
            row("beta", d.beta, se(0)),
            row("beta_p", d.beta_p, se(1)),
            row("beta_q", d.beta_q, se(2)),
            vec!["ratio_q".into(), num(d.ratio_q), num(d.ratio_q_se), num(d.ratio_q_ci.0), num(d.ratio_q_ci.1)],
            vec!["ratio_p".into(), num(d.ratio_p), num(d.ratio_p_se), num(d.ratio_p_ci.0), num(d.ratio_p_ci.1)],
        ];
        self.csv("decomposition.csv", &["quantity", "estimate", "std_error", "ci_low", "ci_high"], rows)
    }

    pub fn jaccard(&mut self, m: &Measurement, profiles: &[Vec<(f64, usize)>; 2]) -> Result<()> {
        let mut rows = Vec::new();
        for (d, prof) in m.panel.iter().zip(profiles) {
            for (l, (mean, n)) in prof.iter().enumerate() {
                rows.push(vec![d.period.to_string(), l.to_string(), num(*mean), n.to_string()]);
            }
        }
        self.csv("jaccard.csv", &["period", "order", "mean", "inventors"], rows)
    }

    pub fn counterfactual(&mut self, e: &Ensemble) -> Result<()> {
        let rows = e.draws.iter().map(|d| {
            vec![d.draw.to_string(), num(d.beta_tilde), num(d.ratio), d.dropped.to_string(), d.violations.to_string()]
        });
        self.csv("counterfactual.csv", &["draw", "beta_tilde", "ratio", "dropped", "violations"], rows)?;
        let s = &e.summary;
        let row = vec![
            s.draws.to_string(),
            s.completed.to_string(),
            s.skipped.to_string(),
            num(s.beta_hat),
            num(s.mean),
            num(s.sd),
            num(s.q05),
            num(s.q25),
            num(s.q50),
            num(s.q75),
            num(s.q95),
        ];
        self.csv(
            "counterfactual_summary.csv",
            &["draws", "completed", "skipped", "beta_hat", "mean", "sd", "q05", "q25", "q50", "q75", "q95"],
            [row],
        )
    }

    /// Writes `run.log`, which stays out of the manifest.
    pub fn log(&mut self, log: &RunLog) -> Result<()> {
        let mut s = log.lines.join("\n");
        s.push('\n');
        self.raw("run.log", s.as_bytes())
    }

    pub fn finish(self, cfg: &PipelineConfig) -> Result<Manifest> {
        let manifest = Manifest { config_hash: cfg.hash(), seed: cfg.seed, files: self.files.clone() };
        self.raw("manifest.txt", manifest.to_text().as_bytes())?;
        let marker = self.dir.join(INCOMPLETE);
        std::fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
        Ok(manifest)
    }

    /// Leaves the failure reason in the incomplete marker.
    pub fn fail(&self, e: &Error) {
        let _ = self.raw(INCOMPLETE, format!("failed: {e}\n").as_bytes());
    }
}
