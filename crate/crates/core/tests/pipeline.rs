use knowex::corpus::Corpus;
use knowex::counterfactual::{counterfactual_kd, refit, EnsembleConfig, RewireConstraint, RewireLevel};
use knowex::measures::ValueMetric;
use knowex::model::{simulate_economy, EconomyConfig, SyntheticEconomy};
use knowex::pipeline::{build_panel, estimate, measure, run_on_corpus, select_sample, ExclusionRule, PipelineConfig};
use knowex::{Error, EstablishmentId, InventorId, Period, Periodization};

fn small(seed: u64) -> SyntheticEconomy {
    simulate_economy(&EconomyConfig { inventors: 300, firms: 10, seed, ..EconomyConfig::default() }).unwrap()
}

fn declared() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.measures.metric = ValueMetric::Declared;
    cfg.estimation.ipc_effects = false;
    cfg
}

#[test]
fn export_then_ingest_is_identity() {
    let eco = small(1);
    let dir = tempfile::tempdir().unwrap();
    let paths = eco.corpus.write(dir.path()).unwrap();
    let (back, log) = Corpus::read(&paths).unwrap();
    assert_eq!(back, eco.corpus);
    assert_eq!(log.patents, eco.corpus.patents.len());
    assert_eq!(log.external_citations, 0);
}

#[test]
fn planted_faults_show_up_in_their_counters() {
    let eco = small(2);
    let cfg = declared();
    let base = select_sample(&measure(&eco.corpus, &cfg).unwrap(), &cfg).unwrap();
    let victims: Vec<InventorId> = base.inventors.iter().step_by(10).copied().take(12).collect();
    let (moved, unlocated, idle) = (&victims[..5], &victims[5..8], &victims[8..]);

    let mut corpus = eco.corpus.clone();
    let later = Period(2);
    for r in corpus.inventors.iter_mut() {
        if moved.contains(&r.inventor) && r.period == later {
            r.establishment = Some(EstablishmentId(9_999_999));
        }
        if unlocated.contains(&r.inventor) && r.period == later {
            r.location = None;
        }
    }
    let periods = Periodization::default();
    for p in corpus.patents.iter_mut() {
        if periods.period_of(p.application_date) == Some(Period(1)) && p.inventors.iter().any(|i| idle.contains(i)) {
            p.value = Some(0.0);
        }
    }
    let planted = select_sample(&measure(&corpus, &cfg).unwrap(), &cfg).unwrap();
    let delta = |rule| planted.exclusions.count(rule) as i64 - base.exclusions.count(rule) as i64;
    assert_eq!(delta(ExclusionRule::EstablishmentChanged), moved.len() as i64);
    assert_eq!(delta(ExclusionRule::MissingLocation), unlocated.len() as i64);
    assert_eq!(delta(ExclusionRule::NonpositiveOutput), idle.len() as i64);
    assert_eq!(planted.exclusions.retained, base.exclusions.retained - victims.len());
    for (i, rule) in moved
        .iter()
        .map(|i| (i, ExclusionRule::EstablishmentChanged))
        .chain(unlocated.iter().map(|i| (i, ExclusionRule::MissingLocation)))
        .chain(idle.iter().map(|i| (i, ExclusionRule::NonpositiveOutput)))
    {
        assert_eq!(planted.excluded[i], rule, "inventor {i}");
    }
    let total: usize = planted.exclusions.excluded.values().sum();
    assert_eq!(total + planted.exclusions.retained, planted.exclusions.universe);
}

#[test]
fn identity_rewiring_reproduces_ols() {
    let eco = small(3);
    let cfg = declared();
    let m = measure(&eco.corpus, &cfg).unwrap();
    let s = select_sample(&m, &cfg).unwrap();
    let (panel, extras) = build_panel(&m, &s, &eco.corpus, &cfg).unwrap();
    let ols = estimate(&panel, &cfg).unwrap().columns[0].1.coefficients[0];

    let mut kd = vec![[None, None]; s.inventors.len()];
    for p in 0..2 {
        let d = &m.panel[p];
        let c = RewireConstraint::build(&d.graph, &m.membership, &s.hops[p], RewireLevel::Firm).unwrap();
        for (k, drawn) in c.identity(&d.graph).into_iter().enumerate() {
            let i = c.inventors[k].inventor;
            kd[k][p] = counterfactual_kd(&d.graph, &d.weights, i, &drawn.unwrap());
            let actual = panel.rows[2 * k + p].ln_kd.exp();
            assert!((kd[k][p].unwrap() - actual).abs() <= 1e-12 * actual);
        }
    }
    let ecfg = EnsembleConfig { vcv: cfg.estimation.vcv_kind(), ipc_effects: false, ..EnsembleConfig::default() };
    let (beta, dropped) = refit(&panel, &extras.groups, RewireLevel::Firm, &kd, &ecfg).unwrap();
    assert_eq!(dropped, 0);
    assert!((beta - ols).abs() < 1e-10, "{beta} vs {ols}");
}

#[test]
fn iv_estimate_lies_within_two_standard_errors_of_truth() {
    let eco = simulate_economy(&EconomyConfig { true_beta: Some(0.4), seed: 7, ..EconomyConfig::default() }).unwrap();
    let cfg = declared();
    let m = measure(&eco.corpus, &cfg).unwrap();
    let s = select_sample(&m, &cfg).unwrap();
    let (panel, _) = build_panel(&m, &s, &eco.corpus, &cfg).unwrap();
    let e = estimate(&panel, &cfg).unwrap();
    let iv = e.main_iv();
    let se = iv.se("ln_kd").unwrap();
    assert!((iv.coefficients[0] - 0.4).abs() <= 2.0 * se, "{} +- {se}", iv.coefficients[0]);
    let j = iv.hansen_j.as_ref().expect("three instruments overidentify");
    assert_eq!(j.df, 2);
}

#[test]
fn runs_are_deterministic_and_flag_failures() {
    let eco = small(4);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = declared();
    cfg.output_dir = dir.path().join("out");
    let a = run_on_corpus(eco.corpus.clone(), Default::default(), &cfg).unwrap();
    let b = run_on_corpus(eco.corpus.clone(), Default::default(), &cfg).unwrap();
    assert_eq!(a.manifest, b.manifest);
    assert_eq!(a.log.value("retained"), Some(a.sample.inventors.len().to_string().as_str()));
    assert!(!cfg.output_dir.join("INCOMPLETE").exists());

    cfg.seed += 1;
    let c = run_on_corpus(eco.corpus.clone(), Default::default(), &cfg).unwrap();
    assert_ne!(a.manifest.config_hash, c.manifest.config_hash);

    cfg.periods.panel = [2, 3];
    let err = run_on_corpus(eco.corpus, Default::default(), &cfg).err().unwrap();
    assert!(matches!(err, Error::Data(_)), "{err}");
    assert_eq!(err.exit_code(), 3);
    assert!(cfg.output_dir.join("INCOMPLETE").exists());
}
