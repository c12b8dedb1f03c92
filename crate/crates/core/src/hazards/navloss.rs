use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::Lattice;
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::rng::SimRng;

pub const NAV_GRID_HEADER: &str = "#navgrid v1";

/// Per-aircraft, per-decision-step probability of losing navigation.
#[derive(Debug, Clone, PartialEq)]
pub enum NavLossModel {
    Constant(f64),
    Field(Lattice),
}

impl NavLossModel {
    pub fn constant(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config(format!("nav-loss probability {p} outside [0, 1]")));
        }
        Ok(NavLossModel::Constant(p))
    }

    pub fn field(lattice: Lattice) -> Result<Self> {
        if lattice.channels() != 1 {
            return Err(Error::config("nav-loss grid needs exactly one probability column"));
        }
        if lattice.values().iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("nav-loss grid probabilities must lie in [0, 1]"));
        }
        Ok(NavLossModel::Field(lattice))
    }

    pub fn probability_at(&self, p: GeoPoint) -> f64 {
        match self {
            NavLossModel::Constant(prob) => *prob,
            NavLossModel::Field(lattice) => {
                let mut out = [0.0];
                lattice.sample_into(p, &mut out);
                out[0].clamp(0.0, 1.0)
            }
        }
    }
}

/// One Bernoulli trial. Always consumes exactly one uniform so that runs with
/// different probabilities stay aligned on the same stream.
pub fn nav_loss_event(model: &NavLossModel, p: GeoPoint, rng: &mut SimRng) -> bool {
    let u: f64 = rng.random();
    u < model.probability_at(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavLossConfig {
    pub p_nav: f64,
    /// Optional `#navgrid v1` file; overrides `p_nav` when present.
    pub field_file: Option<PathBuf>,
}

impl Default for NavLossConfig {
    fn default() -> Self {
        NavLossConfig {
            p_nav: 0.0,
            field_file: None,
        }
    }
}

impl NavLossConfig {
    pub fn build(&self, base_dir: &Path) -> Result<NavLossModel> {
        match &self.field_file {
            Some(file) => NavLossModel::field(Lattice::load(&base_dir.join(file), NAV_GRID_HEADER, 1)?),
            None => NavLossModel::constant(self.p_nav),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    const HERE: GeoPoint = GeoPoint { lat: 40.7, lon: -74.0 };

    fn count(model: &NavLossModel, n: usize, seed: u64) -> usize {
        let mut rng = stream(seed, Stream::NavLoss, &[]);
        (0..n).filter(|_| nav_loss_event(model, HERE, &mut rng)).count()
    }

    #[test]
    fn certain_and_impossible() {
        assert_eq!(count(&NavLossModel::constant(0.0).unwrap(), 10_000, 1), 0);
        assert_eq!(count(&NavLossModel::constant(1.0).unwrap(), 10_000, 1), 10_000);
    }

    #[test]
    fn rare_events_match_binomial() {
        // Binomial(1e6, 1e-5): the central 99% interval is [3, 19] around a mean of 10
        let k = count(&NavLossModel::constant(1e-5).unwrap(), 1_000_000, 2023);
        assert!((3..=19).contains(&k), "count {k}");
    }

    #[test]
    fn frequency_within_three_sigma() {
        for (p, seed) in [(1e-3, 5), (1e-2, 6)] {
            let n = 100_000;
            let k = count(&NavLossModel::constant(p).unwrap(), n, seed) as f64;
            let mean = n as f64 * p;
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((k - mean).abs() <= 3.0 * sd, "p={p} k={k}");
        }
    }

    #[test]
    fn field_interpolates() {
        let lattice = Lattice::new(vec![40.0, 41.0], vec![-74.5, -73.5], 1, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let m = NavLossModel::field(lattice).unwrap();
        assert!((m.probability_at(GeoPoint { lat: 40.25, lon: -74.0 }) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn invalid_probabilities_rejected() {
        assert!(NavLossModel::constant(1.5).is_err());
        let lattice = Lattice::new(vec![40.0, 41.0], vec![-74.5, -73.5], 1, vec![0.0, 0.0, 2.0, 1.0]).unwrap();
        assert!(NavLossModel::field(lattice).is_err());
    }
}
