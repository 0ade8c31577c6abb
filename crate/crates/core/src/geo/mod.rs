//! Great-circle geometry, urban-agglomeration assignment and within-radius
//! neighborhood aggregates.

mod index;
mod neighborhood;
mod ua;

pub use index::PointIndex;
pub use neighborhood::{
    allocate_rnd, radius_aggregate, EstablishmentSite, NeighborhoodContext, NeighborhoodCovariates, NeighborhoodRadii,
};
pub use ua::{assign_ua, delineate_uas, PopulationCell, UaAssignment, UaId, UrbanAgglomeration};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius (IUGG), km.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// WGS84 latitude/longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::domain(format!("latitude {lat} outside [-90, 90]")));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::domain(format!("longitude {lon} outside [-180, 180]")));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Point `north_km` / `east_km` away on a local flat approximation.
    /// Used to lay out synthetic grids; clamps to valid coordinates.
    pub fn offset_km(&self, north_km: f64, east_km: f64) -> GeoPoint {
        let dlat = north_km / KM_PER_DEGREE;
        let lat = (self.lat + dlat).clamp(-90.0, 90.0);
        let coslat = self.lat.to_radians().cos().max(1e-6);
        let mut lon = self.lon + east_km / (KM_PER_DEGREE * coslat);
        if lon > 180.0 {
            lon -= 360.0;
        } else if lon < -180.0 {
            lon += 360.0;
        }
        GeoPoint { lat, lon }
    }
}

/// Length of one degree of arc on the mean sphere, km.
pub const KM_PER_DEGREE: f64 = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;

/// Haversine distance on the mean-radius sphere, km.
pub fn great_circle(p: GeoPoint, q: GeoPoint) -> f64 {
    let (phi1, phi2) = (p.lat.to_radians(), q.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (q.lon - p.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}
