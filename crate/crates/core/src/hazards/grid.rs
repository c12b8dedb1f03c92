//! Rectilinear lat/lon lattices with bilinear lookup, and the plain-text grid
//! file format shared by wind and nav-loss fields:
//!
//! ```text
//! #windgrid v1
//! # lat lon wind_north wind_east
//! 40.5 -74.2 3.0 -1.5
//! ...
//! ```
//!
//! Nav-loss fields use header `#navgrid v1` and a single probability column.
//! Rows may appear in any order but every (lat, lon) node must be present once.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    lats: Vec<f64>,
    lons: Vec<f64>,
    channels: usize,
    /// row-major over (lat index, lon index, channel)
    values: Vec<f64>,
}

impl Lattice {
    pub fn new(lats: Vec<f64>, lons: Vec<f64>, channels: usize, values: Vec<f64>) -> Result<Self> {
        if lats.len() < 2 || lons.len() < 2 {
            return Err(Error::config("grid needs at least two nodes along each axis"));
        }
        for axis in [&lats, &lons] {
            if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config("grid axes must be finite and strictly increasing"));
            }
        }
        if channels == 0 || values.len() != lats.len() * lons.len() * channels {
            return Err(Error::config("grid value count does not match its axes"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("grid values must be finite"));
        }
        Ok(Lattice {
            lats,
            lons,
            channels,
            values,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, i: usize, j: usize) -> &[f64] {
        let k = (i * self.lons.len() + j) * self.channels;
        &self.values[k..k + self.channels]
    }

    /// Bilinear interpolation into `out`. Points outside the hull are clamped
    /// to the nearest edge; the return value reports whether that happened.
    pub fn sample_into(&self, p: GeoPoint, out: &mut [f64]) -> bool {
        debug_assert_eq!(out.len(), self.channels);
        let (i, ty, ci) = locate(&self.lats, p.lat);
        let (j, tx, cj) = locate(&self.lons, p.lon);
        let (v00, v01) = (self.node(i, j), self.node(i, j + 1));
        let (v10, v11) = (self.node(i + 1, j), self.node(i + 1, j + 1));
        for c in 0..self.channels {
            let south = v00[c] + (v01[c] - v00[c]) * tx;
            let north = v10[c] + (v11[c] - v10[c]) * tx;
            out[c] = south + (north - south) * ty;
        }
        ci || cj
    }

    pub fn parse(text: &str, header: &str, channels: usize, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, first)) if first.trim() == header => {}
            _ => return Err(parse_err(1, format!("expected header `{header}`"))),
        }
        let mut nodes: BTreeMap<(u64, u64), Vec<f64>> = BTreeMap::new();
        let mut lats = vec![];
        let mut lons = vec![];
        for (idx, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields = line
                .split_whitespace()
                .map(|f| f.parse::<f64>().map_err(|e| parse_err(idx + 1, format!("`{f}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if fields.len() != 2 + channels {
                return Err(parse_err(
                    idx + 1,
                    format!("expected {} columns, found {}", 2 + channels, fields.len()),
                ));
            }
            let key = (fields[0].to_bits(), fields[1].to_bits());
            if nodes.insert(key, fields[2..].to_vec()).is_some() {
                return Err(parse_err(idx + 1, "duplicate lattice node".into()));
            }
            lats.push(fields[0]);
            lons.push(fields[1]);
        }
        for axis in [&mut lats, &mut lons] {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        if nodes.len() != lats.len() * lons.len() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: 0,
                msg: format!(
                    "incomplete lattice: {} nodes for {}x{} axes",
                    nodes.len(),
                    lats.len(),
                    lons.len()
                ),
            });
        }
        let mut values = Vec::with_capacity(nodes.len() * channels);
        for lat in &lats {
            for lon in &lons {
                values.extend_from_slice(&nodes[&(lat.to_bits(), lon.to_bits())]);
            }
        }
        Lattice::new(lats, lons, channels, values)
    }

    pub fn load(path: &Path, header: &str, channels: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lattice::parse(&text, header, channels, path)
    }

    pub fn to_text(&self, header: &str) -> String {
        let mut out = format!("{header}\n");
        for (i, lat) in self.lats.iter().enumerate() {
            for (j, lon) in self.lons.iter().enumerate() {
                let _ = write!(out, "{lat} {lon}");
                for v in self.node(i, j) {
                    let _ = write!(out, " {v}");
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Cell index, fractional offset within the cell, and whether the coordinate
/// had to be clamped.
fn locate(axis: &[f64], v: f64) -> (usize, f64, bool) {
    let last = axis.len() - 1;
    if v.is_nan() || v < axis[0] {
        return (0, 0.0, true);
    }
    if v > axis[last] {
        return (last - 1, 1.0, true);
    }
    let i = axis.partition_point(|&a| a <= v).clamp(1, last) - 1;
    (i, (v - axis[i]) / (axis[i + 1] - axis[i]), false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(values: [f64; 4]) -> Lattice {
        // nodes ordered (lat0,lon0) (lat0,lon1) (lat1,lon0) (lat1,lon1)
        Lattice::new(vec![40.0, 41.0], vec![-74.0, -73.0], 1, values.to_vec()).unwrap()
    }

    #[test]
    fn reproduces_nodes_exactly() {
        let g = cell([1.0, 2.0, 3.0, 4.0]);
        let mut out = [0.0];
        for (lat, lon, v) in [(40.0, -74.0, 1.0), (40.0, -73.0, 2.0), (41.0, -74.0, 3.0), (41.0, -73.0, 4.0)] {
            assert!(!g.sample_into(GeoPoint { lat, lon }, &mut out));
            assert_eq!(out[0], v);
        }
    }

    #[test]
    fn clamps_outside_hull() {
        let g = cell([1.0, 2.0, 3.0, 4.0]);
        let mut out = [0.0];
        assert!(g.sample_into(GeoPoint { lat: 45.0, lon: -80.0 }, &mut out));
        assert_eq!(out[0], 3.0);
    }

    #[test]
    fn parse_rejects_bad_input() {
        let p = Path::new("mem");
        assert!(Lattice::parse("40 -74 1\n", "#navgrid v1", 1, p).is_err());
        let incomplete = "#navgrid v1\n40 -74 0.1\n40 -73 0.1\n41 -74 0.1\n";
        assert!(Lattice::parse(incomplete, "#navgrid v1", 1, p).is_err());
        let wrong_cols = "#navgrid v1\n40 -74 0.1 3\n";
        assert!(Lattice::parse(wrong_cols, "#navgrid v1", 1, p).is_err());
        let dup = "#navgrid v1\n40 -74 0.1\n40 -74 0.1\n";
        assert!(Lattice::parse(dup, "#navgrid v1", 1, p).is_err());
    }

    #[test]
    fn text_round_trip() {
        let g = Lattice::new(
            vec![40.0, 40.5, 41.0],
            vec![-74.0, -73.0],
            2,
            (0..12).map(|v| v as f64 * 0.25).collect(),
        )
        .unwrap();
        let text = g.to_text("#windgrid v1");
        let back = Lattice::parse(&text, "#windgrid v1", 2, Path::new("mem")).unwrap();
        assert_eq!(g, back);
    }
}
