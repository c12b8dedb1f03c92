use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{BoundingBox, GeoPoint, LocalXY, Projection};

use super::config::{LaneConfig, ScenarioConfig};

pub type VertiportId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertiport {
    pub id: VertiportId,
    pub name: String,
    pub location: GeoPoint,
    pub total_pads: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    pub from: VertiportId,
    pub to: VertiportId,
    pub length_m: f64,
}

#[derive(Debug, Clone)]
pub struct VertiportNetwork {
    vertiports: Vec<Vertiport>,
    corridors: Vec<Corridor>,
    lanes: Vec<f64>,
    projection: Projection,
    local: Vec<LocalXY>,
    /// `next_hop[from * n + to]` on a shortest corridor path
    next_hop: Vec<u32>,
}

/// Pads per vertiport: enough for an even share of the fleet plus one spare.
pub fn allocate_pads(fleet: u32, vertiports: u32) -> u32 {
    assert!(vertiports >= 1, "at least one vertiport required");
    fleet / vertiports + 1
}

/// `count` altitudes evenly spaced over `[min_ft, max_ft]`, endpoints included.
pub fn lane_altitudes(min_ft: f64, max_ft: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![min_ft],
        n => (0..n)
            .map(|i| min_ft + (max_ft - min_ft) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

impl VertiportNetwork {
    pub fn build(cfg: &ScenarioConfig) -> Result<Self> {
        let (sites, listed) = cfg.layout()?;
        if sites.len() < 2 {
            return Err(Error::config("a network needs at least two vertiports"));
        }
        let n = sites.len();
        let mut pairs: Vec<(usize, usize)> = match listed {
            super::config::CorridorLayout::Listed(edges) => {
                let index = |name: &str| {
                    sites
                        .iter()
                        .position(|(s, _)| s == name)
                        .ok_or_else(|| Error::config(format!("corridor references unknown vertiport `{name}`")))
                };
                let mut out = vec![];
                for [a, b] in edges {
                    let (a, b) = (index(&a)?, index(&b)?);
                    if a == b {
                        return Err(Error::config("corridor endpoints must differ"));
                    }
                    out.push((a, b));
                    out.push((b, a));
                }
                out
            }
            super::config::CorridorLayout::Complete => (0..n)
                .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
                .collect(),
            super::config::CorridorLayout::Ring => (0..n)
                .flat_map(|a| {
                    let b = (a + 1) % n;
                    [(a, b), (b, a)]
                })
                .collect(),
            super::config::CorridorLayout::Grid { cols } => {
                let mut out = vec![];
                for a in 0..n {
                    let right = a + 1;
                    if right % cols != 0 && right < n {
                        out.extend([(a, right), (right, a)]);
                    }
                    if a + cols < n {
                        out.extend([(a, a + cols), (a + cols, a)]);
                    }
                }
                out
            }
        };
        pairs.sort_unstable();
        pairs.dedup();

        let bounds = BoundingBox::around(sites.iter().map(|(_, p)| *p), cfg.region_margin_deg)
            .ok_or_else(|| Error::config("empty network"))?;
        let centroid = GeoPoint {
            lat: sites.iter().map(|(_, p)| p.lat).sum::<f64>() / n as f64,
            lon: sites.iter().map(|(_, p)| p.lon).sum::<f64>() / n as f64,
        };
        let projection = Projection::new(centroid, bounds)?;
        let local: Vec<LocalXY> = sites.iter().map(|(_, p)| projection.to_local(*p)).collect();

        let pads = allocate_pads(cfg.fleet_size.max(1), n as u32);
        let vertiports = sites
            .into_iter()
            .enumerate()
            .map(|(i, (name, location))| Vertiport {
                id: i as VertiportId,
                name,
                location,
                total_pads: pads,
            })
            .collect();
        let corridors: Vec<Corridor> = pairs
            .iter()
            .map(|&(a, b)| Corridor {
                from: a as VertiportId,
                to: b as VertiportId,
                length_m: local[a].distance(&local[b]),
            })
            .collect();
        let next_hop = shortest_paths(n, &corridors)?;
        let LaneConfig { min_ft, max_ft, count } = cfg.lanes;

        Ok(VertiportNetwork {
            vertiports,
            corridors,
            lanes: lane_altitudes(min_ft, max_ft, count),
            projection,
            local,
            next_hop,
        })
    }

    pub fn vertiports(&self) -> &[Vertiport] {
        &self.vertiports
    }

    pub fn vertiport(&self, id: VertiportId) -> &Vertiport {
        &self.vertiports[id as usize]
    }

    pub fn len(&self) -> usize {
        self.vertiports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertiports.is_empty()
    }

    pub fn corridors(&self) -> &[Corridor] {
        &self.corridors
    }

    pub fn lanes(&self) -> &[f64] {
        &self.lanes
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    pub fn local(&self, id: VertiportId) -> LocalXY {
        self.local[id as usize]
    }

    pub fn has_corridor(&self, from: VertiportId, to: VertiportId) -> bool {
        self.corridors.iter().any(|c| c.from == from && c.to == to)
    }

    /// Vertiports visited on a shortest corridor path, both ends included.
    pub fn path(&self, from: VertiportId, to: VertiportId) -> Vec<VertiportId> {
        let n = self.vertiports.len();
        let mut out = vec![from];
        let mut at = from;
        while at != to {
            at = self.next_hop[at as usize * n + to as usize];
            out.push(at);
        }
        out
    }

    /// Vertiport nearest to `p` within `radius_m`, if any.
    pub fn vertiport_near(&self, p: LocalXY, radius_m: f64) -> Option<VertiportId> {
        self.local
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.distance(&p)))
            .filter(|&(_, d)| d <= radius_m)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i as VertiportId)
    }
}

/// Floyd-Warshall next-hop table. Fails when some vertiport cannot reach
/// another, i.e. the corridor graph is not strongly connected.
fn shortest_paths(n: usize, corridors: &[Corridor]) -> Result<Vec<u32>> {
    let mut dist = vec![f64::INFINITY; n * n];
    let mut next = vec![u32::MAX; n * n];
    for i in 0..n {
        dist[i * n + i] = 0.0;
        next[i * n + i] = i as u32;
    }
    for c in corridors {
        let k = c.from as usize * n + c.to as usize;
        if c.length_m < dist[k] {
            dist[k] = c.length_m;
            next[k] = c.to;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let through = dik + dist[k * n + j];
                if through < dist[i * n + j] {
                    dist[i * n + j] = through;
                    next[i * n + j] = next[i * n + k];
                }
            }
        }
    }
    if dist.iter().any(|d| !d.is_finite()) {
        return Err(Error::config("corridor network is not strongly connected"));
    }
    Ok(next)
}
