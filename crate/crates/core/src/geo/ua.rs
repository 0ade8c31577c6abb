use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{GeoPoint, PointIndex};
use crate::error::{Error, Result};
use crate::types::InventorId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UaId(pub u64);

impl fmt::Display for UaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One 1 km x 1 km census cell, located by its centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationCell {
    pub centroid: GeoPoint,
    pub population: f64,
}

/// Minimum cell density (persons per km^2) for a cell to belong to an agglomeration.
pub const UA_MIN_DENSITY: f64 = 1000.0;
/// Minimum total population of an agglomeration.
pub const UA_MIN_POPULATION: f64 = 10_000.0;
/// Inventors farther than this from every agglomeration are rural.
pub const UA_BUFFER_KM: f64 = 10.0;
/// Two 1 km cells are contiguous when their centroids are at most this far
/// apart (covers diagonal neighbours, sqrt(2) km).
const CONTIGUITY_KM: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrbanAgglomeration {
    pub id: UaId,
    pub cells: Vec<GeoPoint>,
    pub population: f64,
}

impl UrbanAgglomeration {
    /// Checks the agglomeration against a population grid: every cell dense
    /// enough, the cell set contiguous and the total population large enough.
    pub fn validate(&self, grid: &[PopulationCell]) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::data(format!("UA {} has no cells", self.id)));
        }
        let index = PointIndex::new(grid.iter().map(|c| (c.centroid, c.population)).collect(), 2.0);
        let mut total = 0.0;
        for cell in &self.cells {
            let (_, _, pop) = index.nearest_within(*cell, 0.05).ok_or_else(|| {
                Error::data(format!("UA {} cell ({}, {}) missing from grid", self.id, cell.lat(), cell.lon()))
            })?;
            if *pop < UA_MIN_DENSITY {
                return Err(Error::data(format!("UA {} contains a cell below {UA_MIN_DENSITY}/km2", self.id)));
            }
            total += pop;
        }
        if total < UA_MIN_POPULATION {
            return Err(Error::data(format!("UA {} population {total} below {UA_MIN_POPULATION}", self.id)));
        }
        if contiguous_components(&self.cells).len() != 1 {
            return Err(Error::data(format!("UA {} cells are not contiguous", self.id)));
        }
        Ok(())
    }
}

fn contiguous_components(cells: &[GeoPoint]) -> Vec<Vec<usize>> {
    let index = PointIndex::new(cells.iter().map(|c| (*c, ())).collect(), CONTIGUITY_KM);
    let mut comp = vec![usize::MAX; cells.len()];
    let mut out = Vec::new();
    for start in 0..cells.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![start];
        comp[start] = id;
        let mut stack = vec![start];
        while let Some(c) = stack.pop() {
            index.for_each_within(cells[c], CONTIGUITY_KM + 1e-9, |n, _, _| {
                if comp[n] == usize::MAX {
                    comp[n] = id;
                    members.push(n);
                    stack.push(n);
                }
            });
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Builds agglomerations from a population grid: contiguous runs of cells
/// with density at least 1000/km^2 whose total population reaches 10,000.
/// Ids are assigned 1, 2, ... in order of each component's first cell.
pub fn delineate_uas(grid: &[PopulationCell]) -> Vec<UrbanAgglomeration> {
    let dense: Vec<&PopulationCell> = grid.iter().filter(|c| c.population >= UA_MIN_DENSITY).collect();
    let centroids: Vec<GeoPoint> = dense.iter().map(|c| c.centroid).collect();
    let mut uas = Vec::new();
    for members in contiguous_components(&centroids) {
        let population: f64 = members.iter().map(|&m| dense[m].population).sum();
        if population >= UA_MIN_POPULATION {
            uas.push(UrbanAgglomeration {
                id: UaId(uas.len() as u64 + 1),
                cells: members.iter().map(|&m| centroids[m]).collect(),
                population,
            });
        }
    }
    uas
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UaAssignment {
    Ua(UaId),
    Rural,
}

impl fmt::Display for UaAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UaAssignment::Ua(id) => write!(f, "{id}"),
            UaAssignment::Rural => f.write_str("rural"),
        }
    }
}

/// Assigns each inventor to the agglomeration with the nearest cell centroid
/// if that centroid is within the 10 km buffer, else to `Rural`.
pub fn assign_ua(
    inventors: &[(InventorId, GeoPoint)],
    uas: &[UrbanAgglomeration],
) -> BTreeMap<InventorId, UaAssignment> {
    let cells: Vec<(GeoPoint, UaId)> = uas.iter().flat_map(|ua| ua.cells.iter().map(move |c| (*c, ua.id))).collect();
    let index = PointIndex::new(cells, UA_BUFFER_KM);
    inventors
        .iter()
        .map(|(id, p)| {
            let a = match index.nearest_within(*p, UA_BUFFER_KM) {
                Some((_, _, ua)) => UaAssignment::Ua(*ua),
                None => UaAssignment::Rural,
            };
            (*id, a)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(origin: GeoPoint, side: usize, pop: f64) -> Vec<PopulationCell> {
        let mut v = Vec::new();
        for r in 0..side {
            for c in 0..side {
                v.push(PopulationCell { centroid: origin.offset_km(r as f64, c as f64), population: pop });
            }
        }
        v
    }

    fn ua_at(id: u64, p: GeoPoint) -> UrbanAgglomeration {
        UrbanAgglomeration { id: UaId(id), cells: vec![p], population: 20_000.0 }
    }

    #[test]
    fn inventor_inside_cell_gets_that_ua() {
        let p = GeoPoint::new(35.0, 135.0).unwrap();
        let out = assign_ua(&[(InventorId(1), p)], &[ua_at(7, p)]);
        assert_eq!(out[&InventorId(1)], UaAssignment::Ua(UaId(7)));
    }

    #[test]
    fn inventor_beyond_buffer_is_rural() {
        let base = GeoPoint::new(35.0, 135.0).unwrap();
        let inv = base.offset_km(11.0, 0.0);
        let out = assign_ua(&[(InventorId(1), inv)], &[ua_at(1, base)]);
        assert_eq!(out[&InventorId(1)], UaAssignment::Rural);
    }

    #[test]
    fn closest_ua_wins() {
        let inv = GeoPoint::new(35.0, 135.0).unwrap();
        let a = ua_at(1, inv.offset_km(3.0, 0.0));
        let b = ua_at(2, inv.offset_km(-7.0, 0.0));
        let out = assign_ua(&[(InventorId(1), inv)], &[b, a]);
        assert_eq!(out[&InventorId(1)], UaAssignment::Ua(UaId(1)));
    }

    #[test]
    fn delineation_keeps_dense_large_blobs() {
        let origin = GeoPoint::new(35.0, 135.0).unwrap();
        let mut grid = blob(origin, 4, 1500.0); // 24,000 people
        grid.extend(blob(origin.offset_km(30.0, 0.0), 2, 1500.0)); // 6,000: too small
        grid.extend(blob(origin.offset_km(60.0, 0.0), 5, 500.0)); // too sparse
        let uas = delineate_uas(&grid);
        assert_eq!(uas.len(), 1);
        assert_eq!(uas[0].cells.len(), 16);
        assert!((uas[0].population - 24_000.0).abs() < 1e-9);
        uas[0].validate(&grid).unwrap();
    }

    #[test]
    fn validation_rejects_split_cells() {
        let origin = GeoPoint::new(35.0, 135.0).unwrap();
        let grid = [blob(origin, 3, 2000.0), blob(origin.offset_km(10.0, 0.0), 3, 2000.0)].concat();
        let ua =
            UrbanAgglomeration { id: UaId(1), cells: grid.iter().map(|c| c.centroid).collect(), population: 36_000.0 };
        assert!(ua.validate(&grid).is_err());
    }
}
