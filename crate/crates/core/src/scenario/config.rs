use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, EARTH_RADIUS_M};

/// Scenario keys. These live at the top level of a configuration file, so a
/// bare scenario file is itself a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub network: NetworkConfig,
    pub synthetic: SyntheticConfig,
    pub fleet_size: u32,
    /// Optional row-stochastic-up-to-scale origin/destination weights,
    /// indexed by vertiport order. Diagonal entries are ignored.
    pub od_weights: Option<Vec<Vec<f64>>>,
    /// No departures are dispatched after this time.
    pub duration_s: f64,
    pub turnaround_s: f64,
    pub cruise_speed_kn: f64,
    pub region_margin_deg: f64,
    pub lanes: LaneConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            network: NetworkConfig::default(),
            synthetic: SyntheticConfig::default(),
            fleet_size: 100,
            od_weights: None,
            duration_s: 86_400.0,
            turnaround_s: 60.0,
            cruise_speed_kn: 100.0,
            region_margin_deg: 0.5,
            lanes: LaneConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub vertiports: Vec<VertiportSpec>,
    /// Undirected vertiport pairs; each yields one corridor per direction.
    /// When omitted every pair of listed vertiports is connected.
    pub corridors: Option<Vec<[String; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertiportSpec {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub ring: Option<RingLayout>,
    pub grid: Option<GridLayout>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            ring: Some(RingLayout::default()),
            grid: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingLayout {
    pub count: u32,
    pub radius_m: f64,
    pub center_lat: f64,
    pub center_lon: f64,
}

impl Default for RingLayout {
    fn default() -> Self {
        RingLayout {
            count: 29,
            radius_m: 20_000.0,
            center_lat: 40.7,
            center_lon: -74.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridLayout {
    pub count: u32,
    pub spacing_m: f64,
    pub center_lat: f64,
    pub center_lon: f64,
}

impl Default for GridLayout {
    fn default() -> Self {
        GridLayout {
            count: 25,
            spacing_m: 8_000.0,
            center_lat: 40.7,
            center_lon: -74.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaneConfig {
    pub min_ft: f64,
    pub max_ft: f64,
    pub count: usize,
}

impl Default for LaneConfig {
    fn default() -> Self {
        LaneConfig {
            min_ft: 1000.0,
            max_ft: 5000.0,
            count: 8,
        }
    }
}

pub(crate) enum CorridorLayout {
    Listed(Vec<[String; 2]>),
    Complete,
    Ring,
    Grid { cols: usize },
}

fn offset(center: GeoPoint, east_m: f64, north_m: f64) -> GeoPoint {
    let dlat = (north_m / EARTH_RADIUS_M).to_degrees();
    let dlon = (east_m / (EARTH_RADIUS_M * center.lat.to_radians().cos())).to_degrees();
    GeoPoint {
        lat: center.lat + dlat,
        lon: center.lon + dlon,
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fleet_size == 0 {
            return Err(Error::config("fleet_size must be at least 1"));
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(Error::config("duration_s must be finite and >= 0"));
        }
        if !(self.turnaround_s >= 0.0 && self.turnaround_s.is_finite()) {
            return Err(Error::config("turnaround_s must be finite and >= 0"));
        }
        if !(self.cruise_speed_kn > 0.0 && self.cruise_speed_kn <= crate::kinematics::MAX_SPEED_KN) {
            return Err(Error::config("cruise_speed_kn must lie in (0, 120]"));
        }
        let LaneConfig { min_ft, max_ft, count } = self.lanes;
        if count < 2 || !(0.0 < min_ft && min_ft < max_ft && max_ft <= crate::kinematics::MAX_ALTITUDE_FT) {
            return Err(Error::config("lanes need count >= 2 and 0 < min_ft < max_ft <= 5000"));
        }
        if !(self.region_margin_deg >= 0.0 && self.region_margin_deg.is_finite()) {
            return Err(Error::config("region_margin_deg must be >= 0"));
        }
        Ok(())
    }

    /// Vertiport names and locations plus how they are connected.
    pub(crate) fn layout(&self) -> Result<(Vec<(String, GeoPoint)>, CorridorLayout)> {
        let explicit = !self.network.vertiports.is_empty();
        let synthetic = usize::from(self.synthetic.ring.is_some()) + usize::from(self.synthetic.grid.is_some());
        if explicit {
            let mut sites = Vec::with_capacity(self.network.vertiports.len());
            for v in &self.network.vertiports {
                if sites.iter().any(|(n, _): &(String, GeoPoint)| n == &v.id) {
                    return Err(Error::config(format!("duplicate vertiport id `{}`", v.id)));
                }
                sites.push((v.id.clone(), GeoPoint::new(v.lat, v.lon)?));
            }
            let corridors = match &self.network.corridors {
                Some(list) => CorridorLayout::Listed(list.clone()),
                None => CorridorLayout::Complete,
            };
            return Ok((sites, corridors));
        }
        if synthetic != 1 {
            return Err(Error::config(
                "configure exactly one of network.vertiports, synthetic.ring or synthetic.grid",
            ));
        }
        if let Some(ring) = self.synthetic.ring {
            if ring.count < 2 || !(ring.radius_m > 0.0) {
                return Err(Error::config("synthetic.ring needs count >= 2 and radius_m > 0"));
            }
            let center = GeoPoint::new(ring.center_lat, ring.center_lon)?;
            let sites = (0..ring.count)
                .map(|i| {
                    let theta = std::f64::consts::TAU * i as f64 / ring.count as f64;
                    let p = offset(center, ring.radius_m * theta.sin(), ring.radius_m * theta.cos());
                    (format!("V{i:02}"), p)
                })
                .collect();
            return Ok((sites, CorridorLayout::Ring));
        }
        let grid = self.synthetic.grid.expect("one synthetic layout present");
        if grid.count < 2 || !(grid.spacing_m > 0.0) {
            return Err(Error::config("synthetic.grid needs count >= 2 and spacing_m > 0"));
        }
        let center = GeoPoint::new(grid.center_lat, grid.center_lon)?;
        let cols = (grid.count as f64).sqrt().ceil() as usize;
        let rows = (grid.count as usize).div_ceil(cols);
        let sites = (0..grid.count as usize)
            .map(|i| {
                let (r, c) = (i / cols, i % cols);
                let east = (c as f64 - (cols - 1) as f64 / 2.0) * grid.spacing_m;
                let north = (r as f64 - (rows - 1) as f64 / 2.0) * grid.spacing_m;
                (format!("V{i:02}"), offset(center, east, north))
            })
            .collect();
        Ok((sites, CorridorLayout::Grid { cols }))
    }
}
