//! Trained-forest persistence: a JSON envelope with an explicit format tag
//! and version around the serialized model, so stale or foreign files fail
//! with a clear message instead of a deserialization panic. Floats survive
//! the round trip bit-for-bit (split thresholds are midpoints of data values
//! and must reload exactly for predictions to be reproducible).

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::{Context, Result};
use hotspot_core::forest::ForestModel;
use hotspot_core::Error;
use serde::{Deserialize, Serialize};

const FORMAT: &str = "hotspot-forest";
const VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a> {
    format: &'a str,
    version: u32,
    model: &'a ForestModel,
}

/// The envelope with the payload left unparsed, so format and version can be
/// checked before attempting to interpret the model itself.
#[derive(Deserialize)]
struct EnvelopeHead {
    format: String,
    version: u32,
    model: serde_json::Value,
}

pub fn save_model(path: &Path, model: &ForestModel) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let envelope = Envelope {
        format: FORMAT,
        version: VERSION,
        model,
    };
    serde_json::to_writer(BufWriter::new(file), &envelope)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ForestModel> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let head: EnvelopeHead = serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("parsing {}", path.display()))?;
    if head.format != FORMAT {
        return Err(Error::Schema(format!(
            "{}: format {:?} is not a saved forest",
            path.display(),
            head.format
        ))
        .into());
    }
    if head.version != VERSION {
        return Err(Error::Schema(format!(
            "{}: model file version {} unsupported (expected {VERSION})",
            path.display(),
            head.version
        ))
        .into());
    }
    let model = serde_json::from_value(head.model)
        .with_context(|| format!("parsing model payload of {}", path.display()))?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hotspot_core::forest::{fit, predict_matrix, ForestParams};
    use hotspot_core::labeling::Label;
    use hotspot_core::matrix::FeatureMatrix;
    use hotspot_core::CellId;

    fn toy_model() -> (ForestModel, FeatureMatrix) {
        let x = FeatureMatrix::new(
            (0..12).map(CellId).collect(),
            vec!["f0".into(), "f1".into()],
            vec![
                (0..12).map(|i| i as f64 / 3.0).collect(),
                (0..12).map(|i| ((i * 7) % 5) as f64).collect(),
            ],
        )
        .unwrap();
        let y: Vec<Label> = (0..12)
            .map(|i| if i < 6 { Label::Low } else { Label::High })
            .collect();
        let params = ForestParams {
            n_trees: 12,
            seed: 5,
            ..ForestParams::default()
        };
        let model = fit(&x, &y, &params).unwrap();
        (model, x)
    }

    #[test]
    fn saved_model_predicts_identically_after_reload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let (model, x) = toy_model();
        save_model(&path, &model).unwrap();
        let reloaded = load_model(&path).unwrap();
        assert_eq!(model, reloaded);
        assert_eq!(
            predict_matrix(&model, &x).unwrap(),
            predict_matrix(&reloaded, &x).unwrap()
        );
    }

    #[test]
    fn foreign_or_future_files_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(&path, r#"{"format":"something-else","version":1,"model":null}"#).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(err.to_string().contains("not a saved forest"));

        let (model, _) = toy_model();
        save_model(&path, &model).unwrap();
        let bumped = std::fs::read_to_string(&path)
            .unwrap()
            .replacen("\"version\":1", "\"version\":9", 1);
        std::fs::write(&path, bumped).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(err.to_string().contains("version 9"));
    }
}
