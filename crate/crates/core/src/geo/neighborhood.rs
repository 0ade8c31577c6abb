use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{great_circle, GeoPoint, PointIndex, PopulationCell};
use crate::error::{Error, Result};
use crate::types::{EstablishmentId, InventorId};

/// Sum of weights of points strictly closer than `radius_km` to `center`.
pub fn radius_aggregate(points: &[(GeoPoint, f64)], center: GeoPoint, radius_km: f64) -> Result<f64> {
    if !(radius_km > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {radius_km}")));
    }
    Ok(points.iter().filter(|(p, _)| great_circle(center, *p) < radius_km).map(|(_, w)| *w).sum())
}

/// R&D stock around `center`: industry expenditure allocated to each
/// in-radius establishment in proportion to its employment share within the
/// industry. Inputs are previous-period values.
pub fn allocate_rnd(
    industry_rnd: &HashMap<String, f64>,
    establishments: &[(String, f64, GeoPoint)],
    center: GeoPoint,
    radius_km: f64,
) -> Result<f64> {
    if !(radius_km > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {radius_km}")));
    }
    if let Some((m, v)) = industry_rnd.iter().find(|(_, v)| **v < 0.0 || !v.is_finite()) {
        return Err(Error::data(format!("industry {m} has invalid R&D expenditure {v}")));
    }
    let mut total = 0.0;
    for (industry, share, p) in establishments {
        if !(0.0..=1.0).contains(share) {
            return Err(Error::data(format!("employment share {share} outside [0, 1]")));
        }
        if great_circle(center, *p) < radius_km {
            total += industry_rnd.get(industry).copied().unwrap_or(0.0) * share;
        }
    }
    Ok(total)
}

/// Establishment as listed in the establishment table for one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstablishmentSite {
    pub id: EstablishmentId,
    pub industry: String,
    pub employment: f64,
    pub output: f64,
    pub location: GeoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeighborhoodRadii {
    pub inventors_km: f64,
    pub rnd_km: f64,
    pub manufacturing_km: f64,
    pub population_km: f64,
}

impl Default for NeighborhoodRadii {
    fn default() -> Self {
        NeighborhoodRadii { inventors_km: 1.0, rnd_km: 1.0, manufacturing_km: 1.0, population_km: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodCovariates {
    pub a_inv: f64,
    pub a_rnd: f64,
    pub a_mnf_e: f64,
    pub a_mnf_o: f64,
    pub a_pop: f64,
}

impl NeighborhoodCovariates {
    pub const NAMES: [&'static str; 5] = ["ln_a_inv", "ln_a_rnd", "ln_a_mnf_e", "ln_a_mnf_o", "ln_a_pop"];

    /// `ln(1 + a)` for each aggregate, in [`Self::NAMES`] order.
    pub fn log_values(&self) -> [f64; 5] {
        [self.a_inv, self.a_rnd, self.a_mnf_e, self.a_mnf_o, self.a_pop].map(f64::ln_1p)
    }
}

/// Spatial indices for one period, queried once per inventor.
pub struct NeighborhoodContext {
    radii: NeighborhoodRadii,
    inventors: PointIndex<InventorId>,
    rnd: PointIndex<f64>,
    manufacturing: PointIndex<(f64, f64)>,
    population: PointIndex<f64>,
}

impl NeighborhoodContext {
    /// `previous` establishments carry the R&D allocation; `current` ones the
    /// manufacturing employment and output.
    pub fn new(
        radii: NeighborhoodRadii,
        inventor_locations: &[(InventorId, GeoPoint)],
        industry_rnd_previous: &HashMap<String, f64>,
        previous: &[EstablishmentSite],
        current: &[EstablishmentSite],
        population: &[PopulationCell],
    ) -> Result<Self> {
        for r in [radii.inventors_km, radii.rnd_km, radii.manufacturing_km, radii.population_km] {
            if !(r > 0.0) {
                return Err(Error::config(format!("neighborhood radius must be positive, got {r}")));
            }
        }
        let mut industry_employment: BTreeMap<&str, f64> = BTreeMap::new();
        for e in previous {
            if e.employment < 0.0 {
                return Err(Error::data(format!("establishment {} has negative employment", e.id)));
            }
            *industry_employment.entry(&e.industry).or_default() += e.employment;
        }
        let mut rnd_points = Vec::with_capacity(previous.len());
        for e in previous {
            let v = industry_rnd_previous.get(&e.industry).copied().unwrap_or(0.0);
            if v < 0.0 {
                return Err(Error::data(format!("industry {} has negative R&D expenditure", e.industry)));
            }
            let total = industry_employment[e.industry.as_str()];
            let share = if total > 0.0 { e.employment / total } else { 0.0 };
            rnd_points.push((e.location, v * share));
        }
        Ok(NeighborhoodContext {
            radii,
            inventors: PointIndex::new(inventor_locations.iter().map(|(i, p)| (*p, *i)).collect(), radii.inventors_km),
            rnd: PointIndex::new(rnd_points, radii.rnd_km),
            manufacturing: PointIndex::new(
                current.iter().map(|e| (e.location, (e.employment, e.output))).collect(),
                radii.manufacturing_km,
            ),
            population: PointIndex::new(
                population.iter().map(|c| (c.centroid, c.population)).collect(),
                radii.population_km.min(10.0),
            ),
        })
    }

    /// Aggregates around `center`. Inventors for which `is_collaborator`
    /// returns true are not counted in `a_inv`.
    pub fn covariates(&self, center: GeoPoint, is_collaborator: impl Fn(InventorId) -> bool) -> NeighborhoodCovariates {
        let mut out = NeighborhoodCovariates::default();
        self.inventors.for_each_within(center, self.radii.inventors_km, |_, _, id| {
            if !is_collaborator(*id) {
                out.a_inv += 1.0;
            }
        });
        self.rnd.for_each_within(center, self.radii.rnd_km, |_, _, w| out.a_rnd += w);
        self.manufacturing.for_each_within(center, self.radii.manufacturing_km, |_, _, (e, o)| {
            out.a_mnf_e += e;
            out.a_mnf_o += o;
        });
        self.population.for_each_within(center, self.radii.population_km, |_, _, w| out.a_pop += w);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn empty_neighborhood_sums_to_zero() {
        let pts = vec![(p(36.0, 135.0), 3.0)];
        assert_eq!(radius_aggregate(&pts, p(35.0, 135.0), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn center_point_is_counted() {
        let c = p(35.0, 135.0);
        assert_eq!(radius_aggregate(&[(c, 5.0)], c, 1.0).unwrap(), 5.0);
    }

    #[test]
    fn boundary_is_excluded() {
        let c = p(35.0, 135.0);
        let q = p(35.0, 135.1);
        let d = great_circle(c, q);
        assert_eq!(radius_aggregate(&[(q, 1.0)], c, d).unwrap(), 0.0);
        assert_eq!(radius_aggregate(&[(q, 1.0)], c, d * (1.0 + 1e-12)).unwrap(), 1.0);
    }

    #[test]
    fn nonpositive_radius_is_rejected() {
        assert!(radius_aggregate(&[], p(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn index_sum_matches_linear_scan_on_random_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let pts: Vec<(GeoPoint, f64)> = (0..100)
                .map(|_| (p(rng.random_range(35.0..35.3), rng.random_range(135.0..135.3)), rng.random_range(0.0..10.0)))
                .collect();
            let c = p(rng.random_range(35.0..35.3), rng.random_range(135.0..135.3));
            let r = rng.random_range(0.5..15.0);
            let idx = PointIndex::new(pts.clone(), 1.0);
            let mut s = 0.0;
            let mut hits = Vec::new();
            idx.for_each_within(c, r, |i, _, w| {
                s += w;
                hits.push(i);
            });
            let oracle: Vec<usize> = (0..pts.len()).filter(|&i| great_circle(c, pts[i].0) < r).collect();
            assert_eq!(hits, oracle);
            assert!((s - radius_aggregate(&pts, c, r).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn aggregate_is_monotone_in_radius() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<(GeoPoint, f64)> = (0..200)
            .map(|_| (p(rng.random_range(35.0..35.5), rng.random_range(135.0..135.5)), rng.random_range(0.0..3.0)))
            .collect();
        let c = p(35.25, 135.25);
        let mut last = 0.0;
        for k in 1..40 {
            let s = radius_aggregate(&pts, c, k as f64).unwrap();
            assert!(s >= last);
            last = s;
        }
    }

    #[test]
    fn single_rnd_establishment() {
        let c = p(35.0, 135.0);
        let rnd: HashMap<String, f64> = [("291".to_string(), 100.0)].into();
        let v = allocate_rnd(&rnd, &[("291".into(), 0.3, c)], c, 1.0).unwrap();
        assert!((v - 30.0).abs() < 1e-12);
        let far = c.offset_km(5.0, 0.0);
        assert_eq!(allocate_rnd(&rnd, &[("291".into(), 0.3, far)], c, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn three_industry_fixture_and_linearity() {
        let c = p(35.0, 135.0);
        let rnd: HashMap<String, f64> =
            [("a".to_string(), 100.0), ("b".to_string(), 40.0), ("c".to_string(), 7.0)].into();
        let est = vec![
            ("a".to_string(), 0.5, c.offset_km(0.2, 0.0)),
            ("a".to_string(), 0.5, c.offset_km(3.0, 0.0)),
            ("b".to_string(), 0.25, c.offset_km(0.0, 0.5)),
            ("b".to_string(), 0.75, c),
            ("c".to_string(), 1.0, c.offset_km(-0.9, 0.0)),
        ];
        // 100*0.5 + 40*0.25 + 40*0.75 + 7*1.0
        let v = allocate_rnd(&rnd, &est, c, 1.0).unwrap();
        assert!((v - 97.0).abs() < 1e-9);
        let doubled: HashMap<String, f64> = rnd.iter().map(|(k, v)| (k.clone(), 2.0 * v)).collect();
        assert!((allocate_rnd(&doubled, &est, c, 1.0).unwrap() - 2.0 * v).abs() < 1e-9);
        let bad: HashMap<String, f64> = [("a".to_string(), -1.0)].into();
        assert!(matches!(allocate_rnd(&bad, &est, c, 1.0), Err(Error::Data(_))));
    }

    #[test]
    fn context_excludes_collaborators_from_inventor_count() {
        let c = p(35.0, 135.0);
        let locs = vec![
            (InventorId(1), c),
            (InventorId(2), c.offset_km(0.3, 0.0)),
            (InventorId(3), c.offset_km(0.0, 0.4)),
            (InventorId(4), c.offset_km(5.0, 0.0)),
        ];
        let ctx =
            NeighborhoodContext::new(NeighborhoodRadii::default(), &locs, &HashMap::new(), &[], &[], &[]).unwrap();
        let cov = ctx.covariates(c, |id| id == InventorId(2));
        // inventors 1 (self) and 3 remain
        assert_eq!(cov.a_inv, 2.0);
    }
}
