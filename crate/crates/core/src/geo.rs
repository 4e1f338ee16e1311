//! Cell geometry universe and nearest-cell resolution.
//!
//! Cells are point centroids (the source data provides no cell shapes), so
//! joining any geo-tagged record to a cell means finding the centroid nearest
//! to it under the great-circle metric. Nearest-neighbour queries go through a
//! k-d tree over unit-sphere coordinates; squared chord distance on the unit
//! sphere is monotone in great-circle distance, so the index returns exactly
//! the haversine-nearest cell. Ties are broken by the smallest cell id.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{BoroughProfile, CrimeEvent};
use crate::error::{Error, Result};
use crate::math;

/// Mean Earth radius in meters (IUGG mean radius).
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

const DEG_TO_RAD: f64 = core::f64::consts::PI / 180.0;

/// A validated WGS-84-style coordinate pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    /// Build a point, rejecting non-finite or out-of-range coordinates.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::InvalidInput(alloc::format!(
                "non-finite coordinate ({lat}, {lon})"
            )));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidInput(alloc::format!(
                "latitude {lat} outside [-90, 90]"
            )));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidInput(alloc::format!(
                "longitude {lon} outside [-180, 180]"
            )));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Unit-sphere Cartesian coordinates.
    fn unit_vector(&self) -> [f64; 3] {
        let lat = self.lat * DEG_TO_RAD;
        let lon = self.lon * DEG_TO_RAD;
        let (clat, slat) = (math::cos(lat), math::sin(lat));
        [clat * math::cos(lon), clat * math::sin(lon), slat]
    }
}

/// Opaque cell identifier; ordering is used only for deterministic tie-breaks.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct CellId(pub u64);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One geographic cell: centroid plus reported surface area.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: CellId,
    pub centroid: GeoPoint,
    pub surface_area_m2: f64,
}

impl Cell {
    pub fn new(id: CellId, centroid: GeoPoint, surface_area_m2: f64) -> Result<Self> {
        if !surface_area_m2.is_finite() || surface_area_m2 <= 0.0 {
            return Err(Error::InvalidInput(alloc::format!(
                "cell {id}: surface area {surface_area_m2} must be finite and > 0"
            )));
        }
        Ok(Cell {
            id,
            centroid,
            surface_area_m2,
        })
    }
}

/// Great-circle distance in meters on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat_a = a.lat * DEG_TO_RAD;
    let lat_b = b.lat * DEG_TO_RAD;
    let dlat = (b.lat - a.lat) * DEG_TO_RAD;
    let dlon = (b.lon - a.lon) * DEG_TO_RAD;
    let sin_dlat = math::sin(dlat / 2.0);
    let sin_dlon = math::sin(dlon / 2.0);
    let h = sin_dlat * sin_dlat + math::cos(lat_a) * math::cos(lat_b) * sin_dlon * sin_dlon;
    let h = h.clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_M * math::atan2(math::sqrt(h), math::sqrt(1.0 - h))
}

/// The immutable set of cells plus a spatial index over their centroids.
///
/// Construction is single-threaded; afterwards the universe is read-only and
/// safe to query concurrently. Iteration order is ascending cell id.
#[derive(Debug, Clone)]
pub struct CellUniverse {
    cells: Vec<Cell>,
    units: Vec<[f64; 3]>,
    nodes: Vec<KdNode>,
    root: i32,
}

#[derive(Debug, Clone)]
struct KdNode {
    point: u32,
    axis: u8,
    left: i32,
    right: i32,
}

impl CellUniverse {
    /// Build from a cell list. Fails on an empty list or duplicate ids.
    pub fn new(mut cells: Vec<Cell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Config("cell universe is empty".into()));
        }
        cells.sort_by_key(|c| c.id);
        for pair in cells.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Config(alloc::format!(
                    "duplicate cell id {}",
                    pair[0].id
                )));
            }
        }
        let units: Vec<[f64; 3]> = cells.iter().map(|c| c.centroid.unit_vector()).collect();
        let mut nodes = Vec::with_capacity(cells.len());
        let mut order: Vec<u32> = (0..cells.len() as u32).collect();
        let root = build_kd(&units, &mut order, 0, &mut nodes);
        Ok(CellUniverse {
            cells,
            units,
            nodes,
            root,
        })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cells in ascending id order.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn get(&self, id: CellId) -> Option<&Cell> {
        self.cells
            .binary_search_by_key(&id, |c| c.id)
            .ok()
            .map(|i| &self.cells[i])
    }

    pub fn contains(&self, id: CellId) -> bool {
        self.get(id).is_some()
    }

    /// Id of the cell whose centroid is nearest to `p`; ties go to the
    /// smallest id.
    pub fn nearest_cell(&self, p: GeoPoint) -> CellId {
        let query = p.unit_vector();
        let mut best = Best {
            dist2: f64::INFINITY,
            idx: u32::MAX,
        };
        self.search(self.root, &query, &mut best);
        self.cells[best.idx as usize].id
    }

    fn search(&self, node: i32, query: &[f64; 3], best: &mut Best) {
        if node < 0 {
            return;
        }
        let n = &self.nodes[node as usize];
        let idx = n.point;
        let d2 = dist2(&self.units[idx as usize], query);
        let better = d2 < best.dist2
            || (d2 == best.dist2
                && best.idx != u32::MAX
                && self.cells[idx as usize].id < self.cells[best.idx as usize].id);
        if better || best.idx == u32::MAX {
            *best = Best { dist2: d2, idx };
        }
        let axis = n.axis as usize;
        let delta = query[axis] - self.units[idx as usize][axis];
        let (near, far) = if delta < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.search(near, query, best);
        // Equal axis distance can still hold an equal-distance, lower-id cell.
        if delta * delta <= best.dist2 {
            self.search(far, query, best);
        }
    }
}

struct Best {
    dist2: f64,
    idx: u32,
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

fn build_kd(units: &[[f64; 3]], order: &mut [u32], depth: u8, nodes: &mut Vec<KdNode>) -> i32 {
    if order.is_empty() {
        return -1;
    }
    let axis = (depth % 3) as usize;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        units[a as usize][axis].total_cmp(&units[b as usize][axis])
    });
    let point = order[mid];
    let id = nodes.len() as i32;
    nodes.push(KdNode {
        point,
        axis: axis as u8,
        left: -1,
        right: -1,
    });
    let (lo, rest) = order.split_at_mut(mid);
    let hi = &mut rest[1..];
    let left = build_kd(units, lo, depth + 1, nodes);
    let right = build_kd(units, hi, depth + 1, nodes);
    nodes[id as usize].left = left;
    nodes[id as usize].right = right;
    id
}

/// Assign every crime event to its nearest cell.
///
/// Returns event indices grouped per cell; total multiplicity equals the
/// input length.
pub fn georeference_events(
    events: &[CrimeEvent],
    universe: &CellUniverse,
) -> BTreeMap<CellId, Vec<usize>> {
    let mut map: BTreeMap<CellId, Vec<usize>> = BTreeMap::new();
    for (i, event) in events.iter().enumerate() {
        map.entry(universe.nearest_cell(event.location))
            .or_default()
            .push(i);
    }
    map
}

/// Map every cell to the index of the profile whose representative point is
/// nearest to the cell centroid. Distance ties go to the lexicographically
/// smallest profile id.
pub fn georeference_profiles(
    profiles: &[BoroughProfile],
    universe: &CellUniverse,
) -> Result<BTreeMap<CellId, usize>> {
    if profiles.is_empty() {
        return Err(Error::Config("no borough profiles to assign".into()));
    }
    let mut map = BTreeMap::new();
    for cell in universe.cells() {
        let mut best = 0usize;
        let mut best_dist = haversine_distance(cell.centroid, profiles[0].location);
        for (i, profile) in profiles.iter().enumerate().skip(1) {
            let d = haversine_distance(cell.centroid, profile.location);
            if d < best_dist || (d == best_dist && profile.id < profiles[best].id) {
                best = i;
                best_dist = d;
            }
        }
        map.insert(cell.id, best);
    }
    Ok(map)
}
