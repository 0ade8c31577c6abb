//! `knowex` command-line front end.
//!
//! Every subcommand takes an optional `--config` file; `--set key=value`
//! overrides any configuration key (dotted paths such as
//! `estimation.instruments=[3]`) and `--inputs`/`--out`/`--seed` are shorthands
//! for the input table directory, `output_dir` and `seed`. Set
//! `KNOWEX_THREADS` to bound the worker pool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use knowex::corpus::{fmt_f64, write_table, Corpus, CorpusPaths};
use knowex::model::{simulate_economy, EconomyConfig};
use knowex::pipeline::{
    apply_override, build_panel, counterfactual, estimate, jaccard_profiles, measure, run_on_corpus, select_sample,
    OutputWriter, PipelineConfig, RunLog,
};
use knowex::{Error, Result};

#[derive(Parser)]
#[command(name = "knowex", version, about = "Knowledge-exchange network measures and panel IV estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read and validate the input tables, then print their counts.
    Ingest(Common),
    /// Compute per-inventor measures, sample exclusions and Jaccard profiles.
    Measure(Common),
    /// Build the panel and fit the OLS and IV columns.
    Estimate(Common),
    /// Generate a synthetic economy in the input table format.
    Simulate(SimulateArgs),
    /// Fit the baseline and run the collaborator-rewiring ensemble.
    Counterfactual(Common),
    /// Run every stage and write the full report.
    Pipeline(Common),
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Directory holding the input tables under their default names.
    #[arg(long)]
    inputs: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Economy configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Directory receiving the tables, `truth.csv` and `economy.toml`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

fn read_text(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Io { path: p.display().to_string(), source: e }),
        None => Ok(String::new()),
    }
}

impl Common {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        let text = read_text(self.config.as_deref())?;
        let base = match &self.config {
            Some(p) => p.parent().map(Path::to_path_buf).unwrap_or_default(),
            None => PathBuf::new(),
        };
        let mut cfg = PipelineConfig::parse(&text, &overrides, &base)?;
        if let Some(dir) = &self.inputs {
            cfg.inputs = CorpusPaths::in_dir(dir);
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        Ok(cfg)
    }
}

fn print_log(log: &RunLog) {
    for l in &log.lines {
        println!("{l}");
    }
}

fn with_writer<T>(cfg: &PipelineConfig, body: impl FnOnce(&mut OutputWriter, &mut RunLog) -> Result<T>) -> Result<T> {
    let mut out = OutputWriter::create(&cfg.output_dir)?;
    let mut log = RunLog::default();
    match body(&mut out, &mut log) {
        Ok(v) => {
            out.log(&log)?;
            let m = out.finish(cfg)?;
            print_log(&log);
            println!("manifest config_hash={} files={}", m.config_hash, m.files.len());
            Ok(v)
        }
        Err(e) => {
            out.fail(&e);
            Err(e)
        }
    }
}

fn ingest(c: &Common) -> Result<()> {
    let cfg = c.resolve()?;
    let (_, log) = Corpus::read(&cfg.inputs)?;
    println!(
        "stage=ingest patents={} citations={} external_citations={} inventor_records={}",
        log.patents, log.citations, log.external_citations, log.inventor_records
    );
    Ok(())
}

fn measure_cmd(c: &Common) -> Result<()> {
    let cfg = c.resolve()?;
    let (corpus, _) = Corpus::read(&cfg.inputs)?;
    with_writer(&cfg, |out, log| {
        let m = measure(&corpus, &cfg)?;
        out.measures(&m)?;
        let s = select_sample(&m, &cfg)?;
        out.exclusions(&s.exclusions)?;
        log.line(format!("stage=sample {}", s.exclusions));
        out.jaccard(&m, &jaccard_profiles(&m, &s, &corpus, &cfg))
    })
}

fn estimate_cmd(c: &Common, rewire: bool) -> Result<()> {
    let mut cfg = c.resolve()?;
    cfg.counterfactual.enabled |= rewire;
    let (corpus, _) = Corpus::read(&cfg.inputs)?;
    with_writer(&cfg, |out, log| {
        let m = measure(&corpus, &cfg)?;
        let s = select_sample(&m, &cfg)?;
        out.exclusions(&s.exclusions)?;
        log.line(format!("stage=sample {}", s.exclusions));
        let (p, extras) = build_panel(&m, &s, &corpus, &cfg)?;
        out.panel(&p)?;
        let e = estimate(&p, &cfg)?;
        out.estimates(&e, cfg.estimation.ci_level)?;
        for (name, r) in &e.columns {
            log.line(format!(
                "stage=estimate column={name} beta={} se={} n_obs={}",
                r.coefficients[0],
                r.vcv[(0, 0)].sqrt(),
                r.n_obs
            ));
        }
        if rewire {
            let b = e.main_iv().coefficients[0];
            let ens = counterfactual(&m, &s, &p, &extras, b, &cfg)?;
            let sm = &ens.summary;
            log.line(format!(
                "stage=counterfactual draws={} completed={} skipped={} beta_hat={b} mean_ratio={} q05={} q95={}",
                sm.draws, sm.completed, sm.skipped, sm.mean, sm.q05, sm.q95
            ));
            out.counterfactual(&ens)?;
        }
        Ok(())
    })
}

fn pipeline(c: &Common) -> Result<()> {
    let cfg = c.resolve()?;
    let (corpus, ingest) = Corpus::read(&cfg.inputs)?;
    let report = run_on_corpus(corpus, ingest, &cfg)?;
    print_log(&report.log);
    println!("manifest config_hash={} files={}", report.manifest.config_hash, report.manifest.files.len());
    Ok(())
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut table: toml::Table =
        toml::from_str(&read_text(a.config.as_deref())?).map_err(|e| Error::Config(e.to_string()))?;
    for o in &a.overrides {
        apply_override(&mut table, o)?;
    }
    if let Some(s) = a.seed {
        table.insert("seed".into(), toml::Value::Integer(s as i64));
    }
    let cfg = EconomyConfig::from_toml(&table.to_string())?;
    let eco = simulate_economy(&cfg)?;
    let paths = eco.corpus.write(&a.out)?;
    let truth = eco.truth.iter().map(|t| {
        [
            t.inventor.to_string(),
            t.period.to_string(),
            fmt_f64(t.ln_kd),
            t.k.to_string(),
            fmt_f64(t.ln_y),
            fmt_f64(t.ln_yp),
            t.solo_patents.to_string(),
        ]
    });
    write_table(
        &a.out.join("truth.csv"),
        &["inventor", "period", "ln_kd", "k", "ln_y", "ln_yp", "solo_patents"],
        truth,
    )?;
    let text = toml::to_string(&cfg).map_err(|e| Error::Config(e.to_string()))?;
    let path = a.out.join("economy.toml");
    std::fs::write(&path, text).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    println!(
        "stage=simulate seed={} inventors={} patents={} true_beta={} patents_file={}",
        eco.seed,
        cfg.inventors,
        eco.corpus.patents.len(),
        eco.true_beta,
        paths.patents.display()
    );
    Ok(())
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("KNOWEX_THREADS") else { return Ok(()) };
    let n: usize =
        v.trim().parse().map_err(|_| Error::Config(format!("KNOWEX_THREADS={v:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Ingest(c) => ingest(c),
        Command::Measure(c) => measure_cmd(c),
        Command::Estimate(c) => estimate_cmd(c, false),
        Command::Simulate(a) => simulate(a),
        Command::Counterfactual(c) => estimate_cmd(c, true),
        Command::Pipeline(c) => pipeline(c),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
