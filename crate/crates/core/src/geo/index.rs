use std::collections::HashMap;

use super::{great_circle, GeoPoint, KM_PER_DEGREE};

/// Bucket grid over latitude/longitude for radius queries.
///
/// Queries visit only the buckets overlapping the query's bounding box and
/// then filter by exact great-circle distance, so results are identical to a
/// linear scan. Boxes touching a pole or the antimeridian fall back to a full
/// scan.
#[derive(Debug, Clone)]
pub struct PointIndex<T> {
    cell_deg: f64,
    buckets: HashMap<(i32, i32), Vec<usize>>,
    points: Vec<(GeoPoint, T)>,
}

impl<T> PointIndex<T> {
    /// `cell_km` is the bucket edge length; pick it near the typical query radius.
    pub fn new(points: Vec<(GeoPoint, T)>, cell_km: f64) -> Self {
        let cell_deg = (cell_km.max(0.01) / KM_PER_DEGREE).min(10.0);
        let mut buckets: HashMap<(i32, i32), Vec<usize>> = HashMap::new();
        for (idx, (p, _)) in points.iter().enumerate() {
            buckets.entry(bucket(cell_deg, *p)).or_default().push(idx);
        }
        PointIndex { cell_deg, buckets, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(GeoPoint, T)] {
        &self.points
    }

    /// Visits every point with `great_circle(center, p) < radius_km`, in
    /// insertion order.
    pub fn for_each_within(&self, center: GeoPoint, radius_km: f64, mut f: impl FnMut(usize, f64, &T)) {
        let mut hits: Vec<(usize, f64)> = Vec::new();
        match self.search_box(center, radius_km) {
            Some((lat_lo, lat_hi, lon_lo, lon_hi)) => {
                for bl in lat_lo..=lat_hi {
                    for bo in lon_lo..=lon_hi {
                        if let Some(ids) = self.buckets.get(&(bl, bo)) {
                            for &idx in ids {
                                let d = great_circle(center, self.points[idx].0);
                                if d < radius_km {
                                    hits.push((idx, d));
                                }
                            }
                        }
                    }
                }
                hits.sort_unstable_by_key(|h| h.0);
            }
            None => {
                for (idx, (p, _)) in self.points.iter().enumerate() {
                    let d = great_circle(center, *p);
                    if d < radius_km {
                        hits.push((idx, d));
                    }
                }
            }
        }
        for (idx, d) in hits {
            f(idx, d, &self.points[idx].1);
        }
    }

    /// Index, distance and payload of the closest point, if any lies within `max_km` (inclusive).
    pub fn nearest_within(&self, center: GeoPoint, max_km: f64) -> Option<(usize, f64, &T)> {
        let mut best: Option<(usize, f64)> = None;
        // Inclusive bound: search a hair wider and filter.
        self.for_each_within(center, max_km + 1e-9, |idx, d, _| {
            if d <= max_km && best.is_none_or(|(bi, bd)| d < bd || (d == bd && idx < bi)) {
                best = Some((idx, d));
            }
        });
        best.map(|(idx, d)| (idx, d, &self.points[idx].1))
    }

    fn search_box(&self, center: GeoPoint, radius_km: f64) -> Option<(i32, i32, i32, i32)> {
        let dlat = radius_km / KM_PER_DEGREE;
        let lat_lo = center.lat() - dlat;
        let lat_hi = center.lat() + dlat;
        if lat_lo <= -89.0 || lat_hi >= 89.0 {
            return None;
        }
        let max_abs_lat = lat_lo.abs().max(lat_hi.abs());
        let dlon = dlat / max_abs_lat.to_radians().cos();
        let lon_lo = center.lon() - dlon;
        let lon_hi = center.lon() + dlon;
        if lon_lo <= -180.0 || lon_hi >= 180.0 || dlon > 90.0 {
            return None;
        }
        let cells = |v: f64| (v / self.cell_deg).floor() as i32;
        let span = (cells(lat_hi) - cells(lat_lo) + 1) as usize * (cells(lon_hi) - cells(lon_lo) + 1) as usize;
        if span > 4 * self.buckets.len().max(1) {
            return None;
        }
        Some((cells(lat_lo), cells(lat_hi), cells(lon_lo), cells(lon_hi)))
    }
}

fn bucket(cell_deg: f64, p: GeoPoint) -> (i32, i32) {
    ((p.lat() / cell_deg).floor() as i32, (p.lon() / cell_deg).floor() as i32)
}
