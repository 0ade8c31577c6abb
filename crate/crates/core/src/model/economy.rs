//! Synthetic two-period economy with a known structural output equation.
//!
//! Layout: each panel ("focal") inventor `i` owns a block of `B` ring
//! positions. In every panel period a fresh peer sits at each ring position;
//! the peers in `i`'s block are `i`'s only collaborators (one joint patent
//! each). Peer `p` also co-invents with peers `p + 1` and `p + 2` and files
//! solo patents, so the peer ring carries the indirect-collaborator structure
//! and the distance from `i` grows by about two positions per order.
//!
//! Patent values of peers combine a smooth random field over ring positions,
//! a firm-period productivity shock and, for patents owned by a peer in
//! `i`'s block, `shock_loading * u_it` where `u_it` also enters `i`'s own
//! output. The field and the firm shock make instruments built from distant
//! collaborators relevant; the shared shock makes `ln k^D` endogenous but only
//! reaches the values seen by nodes within three links of `i`.
//!
//! The focal inventor's output is then fixed by
//! `ln y = beta ln kD + g1 ln k + g2 (ln k)^2 + c phi + lambda + tau + e + u + ln(delta b)`,
//! split into `n` joint patents worth `2 omega y` and `m` solo patents worth
//! `n (1 - omega) y / m`, which gives `ybar = n y` exactly. The patent count
//! follows `y^p = (n/2 + m)/n = Q` with `ln Q` linear in `ln kD`.
//!
//! Random streams: `(Field, [t])` for the field, `(Firm, [t])` for firm shocks,
//! `(Inventor, [i])` for fixed focal draws, `(Inventor, [i, t])` per focal
//! period, `(Economy, [t, p])` per peer, `(Geography, [..])` for places and
//! `(Citations, [])` for citations.

use std::collections::BTreeSet;

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::bf::{steady_state_targets, BfParams};
use crate::corpus::{Corpus, FirmRecord, IndustryRnd};
use crate::error::{Error, Result};
use crate::geo::{delineate_uas, EstablishmentSite, GeoPoint, PopulationCell};
use crate::rng::{stream_rng, Stream, StreamRng};
use crate::types::{
    Citation, EstablishmentId, FirmId, InventorId, InventorRecord, PatentId, PatentRecord, Period, Periodization,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EconomyConfig {
    pub seed: u64,
    /// Panel inventors.
    pub inventors: usize,
    /// Direct collaborators per panel inventor and period.
    pub collaborators: usize,
    pub firms: usize,
    pub establishments_per_firm: usize,
    /// Probability that a peer works for the firm owning its ring position
    /// rather than a uniformly drawn one.
    pub same_firm_share: f64,
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    /// Coefficient on `ln k^D`; `(1 - theta)/2` when absent.
    pub true_beta: Option<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub lambda_sd: f64,
    pub tau: [f64; 2],
    pub error_sd: f64,
    /// Standard deviation of the shock shared with collaborators.
    pub shock_sd: f64,
    /// Weight of the shared shock in collaborators' patent values; zero
    /// makes `ln k^D` exogenous, negative values bias OLS downwards.
    pub shock_loading: f64,
    pub firm_shock_sd: f64,
    /// Weight of the firm-period shock in the panel inventor's own output.
    pub firm_output_loading: f64,
    pub field_sd: f64,
    /// Half-width, in ring positions, of the moving average that smooths the field.
    pub field_window: usize,
    pub value_noise_sd: f64,
    pub peer_solo_mean: f64,
    /// Share `omega` of output carried by joint patents.
    pub joint_share: f64,
    /// `beta^p / beta`.
    pub quantity_share: f64,
    /// Mean of `ln y^p`.
    pub quantity_level: f64,
    pub quantity_noise_sd: f64,
    /// Ring positions per technology category.
    pub category_width: f64,
    /// Standard deviation, in ring positions, of a patent's category around its owner.
    pub category_spread: f64,
    pub uas: usize,
    pub rural_share: f64,
    pub industries: usize,
    /// Mean forward citations per panel-period patent.
    pub citation_rate: f64,
}

impl Default for EconomyConfig {
    fn default() -> Self {
        EconomyConfig {
            seed: 1,
            inventors: 5000,
            collaborators: 4,
            firms: 50,
            establishments_per_firm: 2,
            same_firm_share: 0.9,
            theta: 1.0 / 3.0,
            a: 1.0,
            b: 1.0,
            true_beta: None,
            gamma1: 0.2,
            gamma2: -0.02,
            lambda_sd: 0.5,
            tau: [0.0, 0.1],
            error_sd: 0.2,
            shock_sd: 0.3,
            shock_loading: -1.0,
            firm_shock_sd: 0.3,
            firm_output_loading: 0.0,
            field_sd: 0.5,
            field_window: 12,
            value_noise_sd: 0.5,
            peer_solo_mean: 1.0,
            joint_share: 0.5,
            quantity_share: 0.5,
            quantity_level: 1.5f64.ln(),
            quantity_noise_sd: 0.05,
            category_width: 2.0,
            category_spread: 2.0,
            uas: 100,
            rural_share: 0.05,
            industries: 10,
            citation_rate: 0.2,
        }
    }
}

impl EconomyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: EconomyConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn beta(&self) -> f64 {
        self.true_beta.unwrap_or((1.0 - self.theta) / 2.0)
    }

    /// Output driven only by firm-period shocks: no exchange effect, no
    /// local field, no shared collaborator shock, collaborators all from the
    /// inventor's own firm.
    pub fn firm_only(mut self) -> Self {
        self.true_beta = Some(0.0);
        self.firm_output_loading = 1.0;
        self.firm_shock_sd = self.firm_shock_sd.max(1.0);
        self.same_firm_share = 1.0;
        self.field_sd = 0.0;
        self.shock_loading = 0.0;
        self
    }

    /// Exchange effect only: firm shocks switched off.
    pub fn exchange_only(mut self) -> Self {
        self.firm_shock_sd = 0.0;
        self.firm_output_loading = 0.0;
        self
    }

    pub fn ring_size(&self) -> usize {
        self.inventors * self.collaborators
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if self.inventors == 0 {
            return bad("inventors must be positive".into());
        }
        if self.collaborators == 0 {
            return bad("collaborators must be positive".into());
        }
        if self.firms == 0 || self.firms > self.inventors {
            return bad(format!("firms must lie in 1..={} (the inventor count), got {}", self.inventors, self.firms));
        }
        if self.establishments_per_firm == 0 {
            return bad("establishments_per_firm must be positive".into());
        }
        if self.ring_size() < 5 {
            return bad("inventors * collaborators must be at least 5".into());
        }
        if 2 * self.field_window + 1 > self.ring_size() {
            return bad("field_window is wider than the ring".into());
        }
        if self.uas == 0 || self.industries == 0 {
            return bad("uas and industries must be positive".into());
        }
        for (name, v) in [("same_firm_share", self.same_firm_share), ("rural_share", self.rural_share)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.joint_share > 0.0 && self.joint_share < 1.0) {
            return bad(format!("joint_share must lie in (0, 1), got {}", self.joint_share));
        }
        for (name, v) in [
            ("lambda_sd", self.lambda_sd),
            ("error_sd", self.error_sd),
            ("shock_sd", self.shock_sd),
            ("firm_shock_sd", self.firm_shock_sd),
            ("field_sd", self.field_sd),
            ("value_noise_sd", self.value_noise_sd),
            ("quantity_noise_sd", self.quantity_noise_sd),
            ("peer_solo_mean", self.peer_solo_mean),
            ("category_spread", self.category_spread),
            ("citation_rate", self.citation_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(self.category_width > 0.0) {
            return bad("category_width must be positive".into());
        }
        BfParams::new(self.a, self.b, self.theta).map_err(|e| Error::config(e.to_string()))?;
        Ok(())
    }
}

/// Structural quantities of one panel inventor-period, for oracle checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalTruth {
    pub inventor: InventorId,
    pub period: Period,
    pub ln_kd: f64,
    pub k: usize,
    pub ln_y: f64,
    pub ln_yp: f64,
    pub solo_patents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEconomy {
    pub config: EconomyConfig,
    pub params: BfParams,
    pub true_beta: f64,
    pub true_gammas: (f64, f64),
    /// `lambda_i` in panel-inventor order.
    pub lambdas: Vec<f64>,
    pub taus: [f64; 2],
    pub panel_inventors: Vec<InventorId>,
    pub truth: Vec<FocalTruth>,
    pub corpus: Corpus,
    pub seed: u64,
}

fn normal(rng: &mut StreamRng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

fn uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn date_in(rng: &mut StreamRng, first_year: i32, last_year: i32) -> NaiveDate {
    let start = NaiveDate::from_ymd_opt(first_year, 1, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(last_year, 12, 31).unwrap();
    let span = (end - start).num_days() as u64;
    start + Days::new(rng.random_range(0..=span))
}

/// IPC-style subgroup code for category index `c`. Neighbouring indices
/// share a subclass; fifty consecutive indices share a class.
pub fn category_code(c: usize) -> String {
    let c = c % 40_000;
    let class_idx = c / 50;
    let section = (b'A' + (class_idx / 100 % 8) as u8) as char;
    let subclass = (b'A' + (c / 10 % 5) as u8) as char;
    format!("{section}{:02}{subclass}{}/00", class_idx % 100, c % 10 + 1)
}

struct Ring<'a> {
    cfg: &'a EconomyConfig,
    size: usize,
}

impl Ring<'_> {
    fn firm_of(&self, pos: usize) -> usize {
        pos * self.cfg.firms / self.size
    }

    fn firm_start(&self, f: usize) -> usize {
        (f * self.size).div_ceil(self.cfg.firms)
    }

    fn establishment_of(&self, pos: usize) -> usize {
        let f = self.firm_of(pos);
        let (lo, hi) = (self.firm_start(f), self.firm_start(f + 1));
        let e = (pos - lo) * self.cfg.establishments_per_firm / (hi - lo).max(1);
        f * self.cfg.establishments_per_firm + e.min(self.cfg.establishments_per_firm - 1)
    }

    fn category(&self, rng: &mut StreamRng, center: f64) -> String {
        let p = (center + self.cfg.category_spread * normal(rng)).rem_euclid(self.size as f64);
        category_code((p / self.cfg.category_width) as usize)
    }
}

fn stochastic_round(rng: &mut StreamRng, x: f64) -> i64 {
    let f = x.floor();
    f as i64 + i64::from(rng.random::<f64>() < x - f)
}

/// Moving average over the ring, scaled so each value has sd `sd`.
fn smooth_field(rng: &mut StreamRng, size: usize, window: usize, sd: f64) -> Vec<f64> {
    let xi: Vec<f64> = (0..size).map(|_| normal(rng)).collect();
    let w = 2 * window + 1;
    let scale = sd / (w as f64).sqrt();
    let mut sum: f64 = (0..w).map(|d| xi[(d + size - window) % size]).sum();
    let mut out = Vec::with_capacity(size);
    for p in 0..size {
        out.push(sum * scale);
        sum += xi[(p + window + 1) % size] - xi[(p + size - window) % size];
    }
    out
}

pub fn simulate_economy(cfg: &EconomyConfig) -> Result<SyntheticEconomy> {
    cfg.validate()?;
    let params = BfParams::new(cfg.a, cfg.b, cfg.theta)?;
    let (_, delta) = steady_state_targets(cfg.theta)?;
    let constant = (delta * cfg.b).ln();
    let beta = cfg.beta();
    let beta_p = cfg.quantity_share * beta;
    let seed = cfg.seed;
    let n = cfg.inventors;
    let nb = cfg.collaborators;
    let size = cfg.ring_size();
    let ring = Ring { cfg, size };
    let periods = Periodization::default();
    let span = |t: usize| {
        let s = &periods.spans()[t];
        (s.first_year, s.last_year.unwrap())
    };
    let n_est = cfg.firms * cfg.establishments_per_firm;

    // Geography: one dense blob per agglomeration on a 45 km lattice, plus a
    // sparse rural cell far from each.
    let mut geo = stream_rng(seed, Stream::Geography, &[0]);
    let origin = GeoPoint::new(33.0, 131.0)?;
    let cols = (cfg.uas as f64).sqrt().ceil() as usize;
    let centers: Vec<GeoPoint> =
        (0..cfg.uas).map(|u| origin.offset_km((u / cols) as f64 * 45.0, (u % cols) as f64 * 45.0)).collect();
    let mut population = Vec::with_capacity(cfg.uas * 17);
    for c in &centers {
        for r in 0..4 {
            for k in 0..4 {
                population.push(PopulationCell {
                    centroid: c.offset_km(r as f64 - 1.5, k as f64 - 1.5),
                    population: uniform(&mut geo, 1500.0, 4000.0).round(),
                });
            }
        }
        population.push(PopulationCell {
            centroid: c.offset_km(22.0, 22.0),
            population: uniform(&mut geo, 100.0, 600.0).round(),
        });
    }
    let uas = delineate_uas(&population);
    let sites: Vec<GeoPoint> = (0..n_est)
        .map(|e| {
            let f = e / cfg.establishments_per_firm;
            let k = e % cfg.establishments_per_firm;
            let (lo, hi) = (ring.firm_start(f), ring.firm_start(f + 1));
            let mid = lo + ((2 * k + 1) * (hi - lo)) / (2 * cfg.establishments_per_firm);
            let c = centers[mid * cfg.uas / size];
            if geo.random::<f64>() < cfg.rural_share {
                c.offset_km(22.0 + uniform(&mut geo, -1.0, 1.0), 22.0 + uniform(&mut geo, -1.0, 1.0))
            } else {
                c.offset_km(uniform(&mut geo, -1.5, 1.5), uniform(&mut geo, -1.5, 1.5))
            }
        })
        .collect();
    let industry = |f: usize| format!("I{:02}", f % cfg.industries);
    let firms: Vec<FirmRecord> =
        (0..cfg.firms).map(|f| FirmRecord { id: FirmId(f as u64 + 1), industry: industry(f) }).collect();
    let mut establishments = Vec::with_capacity(3 * n_est);
    let mut industry_rnd = Vec::new();
    for t in 0..3u8 {
        let mut g = stream_rng(seed, Stream::Geography, &[1, t as u64]);
        for (e, site) in sites.iter().enumerate() {
            let employment = uniform(&mut g, 50.0, 500.0).round();
            establishments.push((
                Period(t),
                EstablishmentSite {
                    id: EstablishmentId(e as u64 + 1),
                    industry: industry(e / cfg.establishments_per_firm),
                    employment,
                    output: (employment * uniform(&mut g, 5.0, 15.0)).round(),
                    location: *site,
                },
            ));
        }
        for k in 0..cfg.industries {
            industry_rnd.push(IndustryRnd {
                period: Period(t),
                industry: format!("I{k:02}"),
                expenditure: uniform(&mut g, 1000.0, 10000.0).round(),
            });
        }
    }

    let focal_id = |i: usize| InventorId(i as u64 + 1);
    let peer_id = |t: usize, p: usize| InventorId((n + 1 + (t - 1) * size + p) as u64);
    let center = |i: usize| (i * nb) as f64 + (nb as f64 - 1.0) / 2.0;

    let mut next_patent = 1u64;
    let mut new_patent = |team: Vec<InventorId>, category: String, date: NaiveDate, value: f64| {
        let mut p = PatentRecord::new(PatentId(next_patent), team, category, date);
        next_patent += 1;
        p.publication_date = Some(date + Days::new(548));
        p.value = Some(value);
        p
    };
    let mut patents = Vec::new();
    let mut inventors = Vec::new();

    // Fixed panel-inventor draws and pre-sample patents.
    let mut lambdas = Vec::with_capacity(n);
    let mut focal_sites = Vec::with_capacity(n);
    let mut scopes: Vec<BTreeSet<String>> = vec![BTreeSet::new(); n];
    for i in 0..n {
        let mut r = stream_rng(seed, Stream::Inventor, &[i as u64]);
        lambdas.push(cfg.lambda_sd * normal(&mut r));
        let est = ring.establishment_of(i * nb);
        let loc = sites[est].offset_km(uniform(&mut r, -0.5, 0.5), uniform(&mut r, -0.5, 0.5));
        focal_sites.push((est, loc));
        let (y0, y1) = span(0);
        for _ in 0..r.random_range(1..=3) {
            let cat = ring.category(&mut r, center(i));
            scopes[i].insert(cat.clone());
            patents.push(new_patent(vec![focal_id(i)], cat, date_in(&mut r, y0, y1), 1.0));
        }
    }
    let focal_record = |i: usize, t: u8| InventorRecord {
        inventor: focal_id(i),
        period: Period(t),
        firm: Some(FirmId(ring.firm_of(i * nb) as u64 + 1)),
        establishment: Some(EstablishmentId(focal_sites[i].0 as u64 + 1)),
        location: Some(focal_sites[i].1),
    };
    for i in 0..n {
        inventors.push(focal_record(i, 0));
    }

    let mut truth = Vec::with_capacity(2 * n);
    for t in 1..=2usize {
        let (y0, y1) = span(t);
        let psi = smooth_field(&mut stream_rng(seed, Stream::Field, &[t as u64]), size, cfg.field_window, cfg.field_sd);
        let mut fr = stream_rng(seed, Stream::Firm, &[t as u64]);
        let phi: Vec<f64> = (0..cfg.firms).map(|_| cfg.firm_shock_sd * normal(&mut fr)).collect();
        let mut focal_rng: Vec<StreamRng> =
            (0..n).map(|i| stream_rng(seed, Stream::Inventor, &[i as u64, t as u64])).collect();
        let shocks: Vec<(f64, f64)> =
            focal_rng.iter_mut().map(|r| (cfg.shock_sd * normal(r), cfg.error_sd * normal(r))).collect();

        // Peers: firm, place and their own patents.
        let mut outside = vec![0.0; size];
        for p in 0..size {
            let mut r = stream_rng(seed, Stream::Economy, &[t as u64, p as u64]);
            let (firm, est) = if r.random::<f64>() < cfg.same_firm_share {
                (ring.firm_of(p), ring.establishment_of(p))
            } else {
                let f = r.random_range(0..cfg.firms);
                (f, f * cfg.establishments_per_firm + r.random_range(0..cfg.establishments_per_firm))
            };
            inventors.push(InventorRecord {
                inventor: peer_id(t, p),
                period: Period(t as u8),
                firm: Some(FirmId(firm as u64 + 1)),
                establishment: Some(EstablishmentId(est as u64 + 1)),
                location: Some(sites[est].offset_km(uniform(&mut r, -0.8, 0.8), uniform(&mut r, -0.8, 0.8))),
            });
            let base = psi[p] + phi[firm] + cfg.shock_loading * shocks[p / nb].0;
            let value = |r: &mut StreamRng| (base + cfg.value_noise_sd * normal(r)).exp();
            for d in 1..=2 {
                let q = (p + d) % size;
                let v = value(&mut r);
                outside[p] += v / 2.0;
                outside[q] += v / 2.0;
                let cat = ring.category(&mut r, p as f64 + d as f64 / 2.0);
                patents.push(new_patent(vec![peer_id(t, p), peer_id(t, q)], cat, date_in(&mut r, y0, y1), v));
            }
            let solo = 1 + Poisson::new(cfg.peer_solo_mean.max(1e-12)).map_or(0, |d| d.sample(&mut r) as usize);
            for _ in 0..solo {
                let v = value(&mut r);
                outside[p] += v;
                let cat = ring.category(&mut r, p as f64);
                patents.push(new_patent(vec![peer_id(t, p)], cat, date_in(&mut r, y0, y1), v));
            }
        }

        // Panel inventors: output, patent count and patents.
        let ln_kd: Vec<f64> =
            (0..n).map(|i| ((i * nb..(i + 1) * nb).map(|p| outside[p]).sum::<f64>() / nb as f64).ln()).collect();
        let mean_kd = ln_kd.iter().sum::<f64>() / n as f64;
        for i in 0..n {
            let r = &mut focal_rng[i];
            let k = scopes[i].len();
            let lk = (k as f64).ln();
            let firm = ring.firm_of(i * nb);
            let (u, e) = shocks[i];
            let ln_y = beta * ln_kd[i]
                + cfg.gamma1 * lk
                + cfg.gamma2 * lk * lk
                + cfg.firm_output_loading * phi[firm]
                + lambdas[i]
                + cfg.tau[t - 1]
                + e
                + u
                + constant;
            let y = ln_y.exp();
            let ln_q = beta_p * (ln_kd[i] - mean_kd) + cfg.quantity_level + cfg.quantity_noise_sd * normal(r);
            let nf = nb as f64;
            let m = stochastic_round(r, nf * ln_q.exp() - nf / 2.0).max(1) as usize;
            let mut period_scope = BTreeSet::new();
            for p in i * nb..(i + 1) * nb {
                let cat = ring.category(r, center(i));
                period_scope.insert(cat.clone());
                patents.push(new_patent(
                    vec![focal_id(i), peer_id(t, p)],
                    cat,
                    date_in(r, y0, y1),
                    2.0 * cfg.joint_share * y,
                ));
            }
            let solo_cat = ring.category(r, center(i));
            period_scope.insert(solo_cat.clone());
            for _ in 0..m {
                patents.push(new_patent(
                    vec![focal_id(i)],
                    solo_cat.clone(),
                    date_in(r, y0, y1),
                    nf * (1.0 - cfg.joint_share) * y / m as f64,
                ));
            }
            truth.push(FocalTruth {
                inventor: focal_id(i),
                period: Period(t as u8),
                ln_kd: ln_kd[i],
                k,
                ln_y,
                ln_yp: ((nf / 2.0 + m as f64) / nf).ln(),
                solo_patents: m,
            });
            scopes[i].extend(period_scope);
            inventors.push(focal_record(i, t as u8));
        }
    }

    // Forward citations from later patents.
    let mut order: Vec<(NaiveDate, usize)> = patents.iter().enumerate().map(|(k, p)| (p.application_date, k)).collect();
    order.sort_unstable();
    let mut cr = stream_rng(seed, Stream::Citations, &[]);
    if cfg.citation_rate > 0.0 {
        let pois = Poisson::new(cfg.citation_rate).map_err(|e| Error::config(e.to_string()))?;
        let first_panel = NaiveDate::from_ymd_opt(span(1).0, 1, 1).unwrap();
        for idx in 0..order.len() {
            let (date, k) = order[idx];
            if date < first_panel {
                continue;
            }
            let later = order.partition_point(|(d, _)| *d <= date);
            if later >= order.len() {
                continue;
            }
            let count = pois.sample(&mut cr) as usize;
            let mut citing = BTreeSet::new();
            for _ in 0..count {
                citing.insert(order[cr.random_range(later..order.len())].1);
            }
            let mut cites: Vec<Citation> = citing
                .into_iter()
                .map(|c| Citation { citing: patents[c].id, date: patents[c].application_date })
                .collect();
            cites.sort_by_key(|c| (c.date, c.citing));
            patents[k].cited_by = cites;
        }
    }
    inventors.sort_by_key(|r| (r.inventor, r.period));

    Ok(SyntheticEconomy {
        config: cfg.clone(),
        params,
        true_beta: beta,
        true_gammas: (cfg.gamma1, cfg.gamma2),
        lambdas,
        taus: cfg.tau,
        panel_inventors: (0..n).map(focal_id).collect(),
        truth,
        corpus: Corpus {
            patents,
            inventors,
            firms,
            establishments,
            population,
            uas,
            industry_rnd,
            external_citations: Vec::new(),
        },
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn small() -> EconomyConfig {
        EconomyConfig { inventors: 60, firms: 4, uas: 6, field_window: 4, ..Default::default() }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = simulate_economy(&small()).unwrap();
        let b = simulate_economy(&small()).unwrap();
        assert_eq!(a, b);
        let c = simulate_economy(&EconomyConfig { seed: 2, ..small() }).unwrap();
        assert_ne!(a.corpus.patents, c.corpus.patents);
    }

    #[test]
    fn more_firms_than_inventors_is_a_config_error() {
        let cfg = EconomyConfig { firms: 61, ..small() };
        assert!(matches!(simulate_economy(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn output_identity_holds_by_construction() {
        let e = simulate_economy(&small()).unwrap();
        let nb = e.config.collaborators as f64;
        let mut ybar: HashMap<(InventorId, Period), f64> = HashMap::new();
        let mut count: HashMap<(InventorId, Period), f64> = HashMap::new();
        let periods = Periodization::default();
        for p in &e.corpus.patents {
            let t = periods.period_of(p.application_date).unwrap();
            for i in &p.inventors {
                *ybar.entry((*i, t)).or_default() += p.value.unwrap() / p.team_size() as f64;
                *count.entry((*i, t)).or_default() += 1.0 / p.team_size() as f64;
            }
        }
        for tr in &e.truth {
            let key = (tr.inventor, tr.period);
            assert!(((ybar[&key] / nb).ln() - tr.ln_y).abs() < 1e-10);
            assert!(((count[&key] / nb).ln() - tr.ln_yp).abs() < 1e-12);
        }
    }

    #[test]
    fn category_codes_truncate_cleanly() {
        assert_eq!(category_code(0), "A00A1/00");
        assert_eq!(category_code(57), "A01A8/00");
        assert_eq!(category_code(5000 + 23), "B00C4/00");
    }

    #[test]
    fn field_has_requested_scale() {
        let mut r = stream_rng(3, Stream::Field, &[0]);
        let f = smooth_field(&mut r, 20000, 5, 2.0);
        let var = f.iter().map(|v| v * v).sum::<f64>() / f.len() as f64;
        assert!((var.sqrt() - 2.0).abs() < 0.15, "{var}");
    }
}
