//! Geographic points, the local equirectangular projection and unit helpers.
//!
//! Everything that needs metric distances works in [`LocalXY`], meters east and
//! north of a fixed region origin. The projection is linear in (lat, lon), so
//! displacements can be applied directly in degrees without a round trip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
pub const KNOT_MS: f64 = 0.514_444;
pub const FEET_M: f64 = 0.3048;
pub const STANDARD_GRAVITY: f64 = 9.806_65;

#[inline]
pub fn knots_to_ms(kn: f64) -> f64 {
    kn * KNOT_MS
}

#[inline]
pub fn ms_to_knots(ms: f64) -> f64 {
    ms / KNOT_MS
}

/// Wraps any finite angle into `[0, 360)`.
#[inline]
pub fn normalize_heading(deg: f64) -> f64 {
    let h = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360.0 for tiny negative inputs
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

/// Signed smallest rotation from `from` to `to`, in `(-180, 180]`.
#[inline]
pub fn heading_delta(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lat.is_finite() || !(-90.0..=90.0).contains(&self.lat) {
            return Err(Error::range(format!("latitude {} outside [-90, 90]", self.lat)));
        }
        if !self.lon.is_finite() || !(-180.0..=180.0).contains(&self.lon) {
            return Err(Error::range(format!("longitude {} outside [-180, 180]", self.lon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalXY {
    /// meters east of the region origin
    pub x: f64,
    /// meters north of the region origin
    pub y: f64,
}

impl LocalXY {
    pub fn new(x: f64, y: f64) -> Self {
        LocalXY { x, y }
    }

    pub fn distance(&self, other: &LocalXY) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Compass bearing in degrees from `self` to `other` (0 = north, 90 = east).
    pub fn bearing_to(&self, other: &LocalXY) -> f64 {
        normalize_heading((other.x - self.x).atan2(other.y - self.y).to_degrees())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: GeoPoint,
    pub max: GeoPoint,
}

impl BoundingBox {
    pub fn contains(&self, p: &GeoPoint) -> bool {
        (self.min.lat..=self.max.lat).contains(&p.lat) && (self.min.lon..=self.max.lon).contains(&p.lon)
    }

    pub fn around(points: impl IntoIterator<Item = GeoPoint>, margin_deg: f64) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut lo, mut hi) = (first, first);
        for p in it {
            lo.lat = lo.lat.min(p.lat);
            lo.lon = lo.lon.min(p.lon);
            hi.lat = hi.lat.max(p.lat);
            hi.lon = hi.lon.max(p.lon);
        }
        Some(BoundingBox {
            min: GeoPoint {
                lat: (lo.lat - margin_deg).max(-90.0),
                lon: (lo.lon - margin_deg).max(-180.0),
            },
            max: GeoPoint {
                lat: (hi.lat + margin_deg).min(90.0),
                lon: (hi.lon + margin_deg).min(180.0),
            },
        })
    }
}

/// Equirectangular projection about a fixed origin, restricted to a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    origin: GeoPoint,
    bounds: BoundingBox,
    /// meters per degree of longitude at the origin latitude
    m_per_deg_lon: f64,
    m_per_deg_lat: f64,
}

impl Projection {
    pub fn new(origin: GeoPoint, bounds: BoundingBox) -> Result<Self> {
        origin.validate()?;
        if !bounds.contains(&origin) {
            return Err(Error::range("projection origin outside its region"));
        }
        if origin.lat.abs() >= 89.0 {
            return Err(Error::range("projection origin too close to a pole"));
        }
        let m_per_deg_lat = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        Ok(Projection {
            origin,
            bounds,
            m_per_deg_lon: m_per_deg_lat * origin.lat.to_radians().cos(),
            m_per_deg_lat,
        })
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    pub fn bounds(&self) -> BoundingBox {
        self.bounds
    }

    /// Projects a point inside the region; anything outside is a range error.
    pub fn project(&self, p: GeoPoint) -> Result<LocalXY> {
        p.validate()?;
        if !self.bounds.contains(&p) {
            return Err(Error::range(format!(
                "point ({}, {}) outside region [{}, {}]x[{}, {}]",
                p.lat, p.lon, self.bounds.min.lat, self.bounds.max.lat, self.bounds.min.lon, self.bounds.max.lon
            )));
        }
        Ok(self.to_local(p))
    }

    pub fn unproject(&self, xy: LocalXY) -> GeoPoint {
        GeoPoint {
            lat: self.origin.lat + xy.y / self.m_per_deg_lat,
            lon: self.origin.lon + xy.x / self.m_per_deg_lon,
        }
    }

    /// Unchecked projection for points that may have drifted out of the region
    /// during flight.
    #[inline]
    pub fn to_local(&self, p: GeoPoint) -> LocalXY {
        LocalXY {
            x: (p.lon - self.origin.lon) * self.m_per_deg_lon,
            y: (p.lat - self.origin.lat) * self.m_per_deg_lat,
        }
    }

    /// Moves `p` by a metric displacement.
    #[inline]
    pub fn displace(&self, p: GeoPoint, east_m: f64, north_m: f64) -> GeoPoint {
        GeoPoint {
            lat: (p.lat + north_m / self.m_per_deg_lat).clamp(-90.0, 90.0),
            lon: p.lon + east_m / self.m_per_deg_lon,
        }
    }

    pub fn distance(&self, a: GeoPoint, b: GeoPoint) -> f64 {
        self.to_local(a).distance(&self.to_local(b))
    }
}
