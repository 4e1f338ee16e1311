//! Hotspot maps as GeoJSON: one Point feature per cell, colored by class.
//!
//! The `marker-color` property follows the simplestyle convention most
//! GeoJSON viewers understand: green for predicted/observed low crime,
//! red for high.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use hotspot_core::geo::{CellId, CellUniverse};
use hotspot_core::labeling::{Label, LabelSet};
use hotspot_core::Error;
use serde_json::{json, Value};

pub const LOW_COLOR: &str = "#2ca02c";
pub const HIGH_COLOR: &str = "#d62728";

fn color(label: Label) -> &'static str {
    match label {
        Label::Low => LOW_COLOR,
        Label::High => HIGH_COLOR,
    }
}

fn class_name(label: Label) -> &'static str {
    match label {
        Label::Low => "low",
        Label::High => "high",
    }
}

/// Build the map for classified cells; `score` is the forest's high-vote
/// fraction where one exists (predictions) and null for ground truth.
pub fn hotspot_map(
    universe: &CellUniverse,
    rows: &[(CellId, Label, Option<f64>)],
) -> Result<Value> {
    let mut features = Vec::with_capacity(rows.len());
    for &(cell, label, score) in rows {
        let centroid = universe
            .get(cell)
            .ok_or_else(|| {
                Error::Schema(format!("cell {cell} is not in the cell universe"))
            })?
            .centroid;
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "Point",
                "coordinates": [centroid.lon(), centroid.lat()],
            },
            "properties": {
                "cell_id": cell.0,
                "class": class_name(label),
                "score": score,
                "marker-color": color(label),
            },
        }));
    }
    Ok(json!({
        "type": "FeatureCollection",
        "features": features,
    }))
}

pub fn prediction_map(
    universe: &CellUniverse,
    predictions: &[(CellId, Label, f64)],
) -> Result<Value> {
    let rows: Vec<(CellId, Label, Option<f64>)> = predictions
        .iter()
        .map(|&(c, l, s)| (c, l, Some(s)))
        .collect();
    hotspot_map(universe, &rows)
}

pub fn label_map(universe: &CellUniverse, labels: &LabelSet) -> Result<Value> {
    let rows: Vec<(CellId, Label, Option<f64>)> =
        labels.iter().map(|(c, l)| (c, l, None)).collect();
    hotspot_map(universe, &rows)
}

pub fn write_geojson(path: &Path, map: &Value) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, map)
        .with_context(|| format!("writing {}", path.display()))?;
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use hotspot_core::geo::{Cell, GeoPoint};

    fn two_cell_universe() -> CellUniverse {
        CellUniverse::new(vec![
            Cell::new(CellId(1), GeoPoint::new(51.50, -0.10).unwrap(), 1.0e5).unwrap(),
            Cell::new(CellId(2), GeoPoint::new(51.52, -0.08).unwrap(), 1.0e5).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn one_feature_per_cell_with_class_colors() {
        let universe = two_cell_universe();
        let map = prediction_map(
            &universe,
            &[(CellId(1), Label::Low, 0.12), (CellId(2), Label::High, 0.93)],
        )
        .unwrap();
        assert_eq!(map["type"], "FeatureCollection");
        let features = map["features"].as_array().unwrap();
        assert_eq!(features.len(), 2);
        assert_eq!(features[0]["geometry"]["type"], "Point");
        assert_eq!(
            features[0]["geometry"]["coordinates"],
            json!([-0.10, 51.50])
        );
        assert_eq!(features[0]["properties"]["marker-color"], LOW_COLOR);
        assert_eq!(features[1]["properties"]["marker-color"], HIGH_COLOR);
        assert_eq!(features[1]["properties"]["class"], "high");
        assert_eq!(features[1]["properties"]["score"], 0.93);
    }

    #[test]
    fn unknown_cell_is_a_schema_error() {
        let universe = two_cell_universe();
        let err = prediction_map(&universe, &[(CellId(9), Label::Low, 0.5)]).unwrap_err();
        assert!(matches!(
            err.downcast_ref::<Error>(),
            Some(Error::Schema(_))
        ));
    }

    #[test]
    fn truth_and_prediction_maps_share_geometry() {
        use hotspot_core::labeling::{split_with_threshold, CrimeCounts};
        use std::collections::BTreeMap;

        let universe = two_cell_universe();
        let counts = CrimeCounts::new(
            hotspot_core::calendar::Month::new(2021, 1).unwrap(),
            BTreeMap::from([(CellId(1), 1), (CellId(2), 5)]),
        );
        let labels = split_with_threshold(&counts, 2.0);
        let truth = label_map(&universe, &labels).unwrap();
        let predicted = prediction_map(
            &universe,
            &[(CellId(1), Label::High, 0.7), (CellId(2), Label::Low, 0.2)],
        )
        .unwrap();
        let geoms = |v: &Value| -> Vec<Value> {
            v["features"]
                .as_array()
                .unwrap()
                .iter()
                .map(|f| f["geometry"].clone())
                .collect()
        };
        assert_eq!(geoms(&truth), geoms(&predicted));
        // Ground truth carries no score.
        assert!(truth["features"][0]["properties"]["score"].is_null());
    }
}
