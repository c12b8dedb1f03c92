use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::Lattice;
use crate::error::{Error, Result};
use crate::geo::GeoPoint;

pub const WIND_GRID_HEADER: &str = "#windgrid v1";

/// Horizontal wind in m/s, components toward north and east.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WindVector {
    pub north: f64,
    pub east: f64,
}

impl WindVector {
    pub fn magnitude(&self) -> f64 {
        self.north.hypot(self.east)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WindField {
    Constant(WindVector),
    Grid(Lattice),
}

impl WindField {
    pub fn calm() -> Self {
        WindField::Constant(WindVector::default())
    }

    pub fn is_calm(&self) -> bool {
        matches!(self, WindField::Constant(w) if w.north == 0.0 && w.east == 0.0)
    }

    pub fn from_grid(lattice: Lattice) -> Result<Self> {
        if lattice.channels() != 2 {
            return Err(Error::config("wind grid needs north and east columns"));
        }
        Ok(WindField::Grid(lattice))
    }

    pub fn load(path: &Path) -> Result<Self> {
        WindField::from_grid(Lattice::load(path, WIND_GRID_HEADER, 2)?)
    }
}

/// Wind at `p` plus whether the lookup was clamped to the grid edge.
pub fn wind_at(field: &WindField, p: GeoPoint) -> (WindVector, bool) {
    match field {
        WindField::Constant(w) => (*w, false),
        WindField::Grid(lattice) => {
            let mut out = [0.0; 2];
            let clamped = lattice.sample_into(p, &mut out);
            (
                WindVector {
                    north: out[0],
                    east: out[1],
                },
                clamped,
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindConfig {
    /// "constant" or "grid"
    pub kind: String,
    pub north: f64,
    pub east: f64,
    pub grid_file: Option<PathBuf>,
}

impl Default for WindConfig {
    fn default() -> Self {
        WindConfig {
            kind: "constant".into(),
            north: 0.0,
            east: 0.0,
            grid_file: None,
        }
    }
}

impl WindConfig {
    pub fn build(&self, base_dir: &Path) -> Result<WindField> {
        match self.kind.as_str() {
            "constant" => {
                if !(self.north.is_finite() && self.east.is_finite()) {
                    return Err(Error::config("wind components must be finite"));
                }
                Ok(WindField::Constant(WindVector {
                    north: self.north,
                    east: self.east,
                }))
            }
            "grid" => {
                let file = self
                    .grid_file
                    .as_ref()
                    .ok_or_else(|| Error::config("wind.kind = \"grid\" requires wind.grid_file"))?;
                WindField::load(&base_dir.join(file))
            }
            other => Err(Error::config(format!("unknown wind.kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_field() {
        let f = WindField::Constant(WindVector { north: 3.0, east: 4.0 });
        let (w, clamped) = wind_at(&f, GeoPoint { lat: 10.0, lon: 20.0 });
        assert_eq!(w, WindVector { north: 3.0, east: 4.0 });
        assert!(!clamped);
    }

    #[test]
    fn uniform_cell_interpolates_to_constant() {
        let vals = [10.0, 0.0].repeat(4);
        let f = WindField::from_grid(Lattice::new(vec![40.0, 41.0], vec![-74.0, -73.0], 2, vals).unwrap()).unwrap();
        let (w, _) = wind_at(&f, GeoPoint { lat: 40.3, lon: -73.6 });
        assert_abs_diff_eq!(w.north, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.east, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn latitude_gradient_midpoint() {
        // north component 0 along the southern edge, 10 along the northern edge
        let vals = vec![0.0, 0.0, 0.0, 0.0, 10.0, 0.0, 10.0, 0.0];
        let f = WindField::from_grid(Lattice::new(vec![40.0, 41.0], vec![-74.0, -73.0], 2, vals).unwrap()).unwrap();
        let (w, _) = wind_at(&f, GeoPoint { lat: 40.5, lon: -73.8 });
        assert_abs_diff_eq!(w.north, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn outside_grid_is_clamped_and_flagged() {
        let vals = vec![0.0, 0.0, 0.0, 0.0, 10.0, 0.0, 10.0, 0.0];
        let f = WindField::from_grid(Lattice::new(vec![40.0, 41.0], vec![-74.0, -73.0], 2, vals).unwrap()).unwrap();
        let (w, clamped) = wind_at(&f, GeoPoint { lat: 42.0, lon: -73.5 });
        assert!(clamped);
        assert_abs_diff_eq!(w.north, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn loads_grid_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wind.txt");
        std::fs::write(
            &path,
            "#windgrid v1\n40 -74 1 2\n40 -73 1 2\n41 -74 1 2\n41 -73 1 2\n",
        )
        .unwrap();
        let cfg = WindConfig {
            kind: "grid".into(),
            grid_file: Some("wind.txt".into()),
            ..Default::default()
        };
        let f = cfg.build(dir.path()).unwrap();
        assert_eq!(wind_at(&f, GeoPoint { lat: 40.5, lon: -73.5 }).0, WindVector { north: 1.0, east: 2.0 });
        assert!(WindConfig {
            kind: "gusty".into(),
            ..Default::default()
        }
        .build(dir.path())
        .is_err());
    }
}
