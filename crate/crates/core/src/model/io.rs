//! Model and dataset file formats.
//!
//! Models are JSON with top-level keys `kind`, `dim`, `classes` and
//! kind-specific arrays; floats are serialized in shortest round-trip
//! precision, so save/load is bit-exact. Datasets are CSV, one row per
//! instance: D float columns, then an integer label column for labeled
//! datasets. A header row is optional and flagged by the caller.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Activation, LabeledInstance, MlpLayer, ModelSpec};
use crate::subspace::SubspaceDataset;

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ModelFile {
    Knn {
        dim: usize,
        classes: usize,
        k: usize,
        train_x: Vec<Vec<f64>>,
        train_y: Vec<usize>,
    },
    Svm {
        dim: usize,
        classes: usize,
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
    },
    Mlp {
        dim: usize,
        classes: usize,
        layers: Vec<LayerFile>,
    },
}

fn to_file(model: &ModelSpec) -> ModelFile {
    match model {
        ModelSpec::Knn { k, classes, train } => ModelFile::Knn {
            dim: train[0].x.len(),
            classes: *classes,
            k: *k,
            train_x: train.iter().map(|i| i.x.clone()).collect(),
            train_y: train.iter().map(|i| i.y).collect(),
        },
        ModelSpec::Svm { dim, classes, weights, biases } => ModelFile::Svm {
            dim: *dim,
            classes: *classes,
            weights: weights.clone(),
            biases: biases.clone(),
        },
        ModelSpec::Mlp { dim, classes, layers } => ModelFile::Mlp {
            dim: *dim,
            classes: *classes,
            layers: layers
                .iter()
                .map(|l| LayerFile {
                    weights: l.weights.clone(),
                    bias: l.bias.clone(),
                    activation: l.activation.tag().to_string(),
                })
                .collect(),
        },
    }
}

fn from_file(file: ModelFile) -> Result<ModelSpec> {
    let model = match file {
        ModelFile::Knn { dim, classes, k, train_x, train_y } => {
            if train_x.len() != train_y.len() {
                return Err(Error::InvalidModel(format!(
                    "knn: train_x has {} rows but train_y has {} labels",
                    train_x.len(),
                    train_y.len()
                )));
            }
            let train = train_x
                .into_iter()
                .zip(train_y)
                .map(|(x, y)| LabeledInstance::new(x, y))
                .collect::<Result<Vec<_>>>()?;
            if let Some(bad) = train.iter().position(|i| i.x.len() != dim) {
                return Err(Error::InvalidModel(format!(
                    "knn: train_x[{bad}] has dimension {} (header says dim = {dim})",
                    train[bad].x.len()
                )));
            }
            ModelSpec::Knn { k, classes, train }
        }
        ModelFile::Svm { dim, classes, weights, biases } => {
            ModelSpec::Svm { dim, classes, weights, biases }
        }
        ModelFile::Mlp { dim, classes, layers } => {
            let layers = layers
                .into_iter()
                .map(|l| {
                    Ok(MlpLayer {
                        weights: l.weights,
                        bias: l.bias,
                        activation: Activation::from_tag(&l.activation)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ModelSpec::Mlp { dim, classes, layers }
        }
    };
    model.validate()?;
    Ok(model)
}

pub fn save_model(model: &ModelSpec, path: &Path) -> Result<()> {
    model.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &to_file(model))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelSpec> {
    let r = BufReader::new(File::open(path)?);
    let file: ModelFile = serde_json::from_reader(r)?;
    from_file(file)
}

fn parse_float(field: &str, row: usize, col: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| {
        Error::InvalidDataset(format!("row {row}, column {col}: {field:?} is not a float"))
    })?;
    if !v.is_finite() {
        return Err(Error::InvalidDataset(format!(
            "row {row}, column {col}: non-finite value {field:?}"
        )));
    }
    Ok(v)
}

fn csv_reader(path: &Path, has_header: bool) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)?)
}

/// Loads a labeled dataset: D float columns then an integer label column.
pub fn load_labeled_dataset(path: &Path, has_header: bool) -> Result<Vec<LabeledInstance>> {
    let mut reader = csv_reader(path, has_header)?;
    let mut out = Vec::new();
    let mut width = None;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "row {row_idx}: needs at least one feature column and a label column"
            )));
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::InvalidDataset(format!(
                    "row {row_idx}: has {} columns, expected {w}",
                    record.len()
                )));
            }
            _ => {}
        }
        let label_col = record.len() - 1;
        let mut x = Vec::with_capacity(label_col);
        for (col, field) in record.iter().take(label_col).enumerate() {
            x.push(parse_float(field, row_idx, col)?);
        }
        let y: usize = record[label_col].trim().parse().map_err(|_| {
            Error::InvalidDataset(format!(
                "row {row_idx}: label {:?} is not a nonnegative integer",
                &record[label_col]
            ))
        })?;
        out.push(LabeledInstance { x, y });
    }
    if out.is_empty() {
        return Err(Error::InvalidDataset("dataset has no rows".into()));
    }
    Ok(out)
}

/// Loads an unlabeled dataset: every column is a float feature.
pub fn load_unlabeled_dataset(path: &Path, has_header: bool) -> Result<SubspaceDataset> {
    let mut reader = csv_reader(path, has_header)?;
    let mut instances = Vec::new();
    let mut width = None;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::InvalidDataset(format!(
                    "row {row_idx}: has {} columns, expected {w}",
                    record.len()
                )));
            }
            _ => {}
        }
        let mut x = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            x.push(parse_float(field, row_idx, col)?);
        }
        instances.push(x);
    }
    let dim = width.ok_or_else(|| Error::InvalidDataset("dataset has no rows".into()))?;
    SubspaceDataset::new(dim, instances)
}

pub fn save_labeled_dataset(instances: &[LabeledInstance], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for inst in instances {
        let mut record: Vec<String> = inst.x.iter().map(|v| v.to_string()).collect();
        record.push(inst.y.to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_unlabeled_dataset(dataset: &SubspaceDataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for inst in dataset.instances() {
        let record: Vec<String> = inst.iter().map(|v| v.to_string()).collect();
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn model_round_trip_is_bit_exact() {
        let model = ModelSpec::Mlp {
            dim: 3,
            classes: 2,
            layers: vec![
                MlpLayer {
                    weights: vec![
                        vec![0.1, -0.2, 0.3000000000000004],
                        vec![1.0 / 3.0, 2.0 / 7.0, -5.0 / 11.0],
                    ],
                    bias: vec![0.0, 1e-17],
                    activation: Activation::Tanh,
                },
                MlpLayer {
                    weights: vec![vec![1.5, -2.5], vec![0.25, 0.125]],
                    bias: vec![-0.75, 0.5],
                    activation: Activation::Identity,
                },
            ],
        };
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, model);
    }

    #[test]
    fn minimal_svm_file_parses() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("svm.json");
        std::fs::write(
            &path,
            r#"{"kind":"svm","dim":2,"classes":2,"weights":[[1.0,0.0]],"biases":[-1.0]}"#,
        )
        .unwrap();
        let model = load_model(&path).unwrap();
        assert!(matches!(model, ModelSpec::Svm { .. }));
    }

    #[test]
    fn mismatched_mlp_widths_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("mlp.json");
        std::fs::write(
            &path,
            r#"{"kind":"mlp","dim":3,"classes":2,
                "layers":[{"weights":[[1.0,0.0],[0.0,1.0]],"bias":[0.0,0.0],"activation":"relu"}]}"#,
        )
        .unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(err.to_string().contains("width"), "{err}");
    }

    #[test]
    fn unknown_activation_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("mlp.json");
        std::fs::write(
            &path,
            r#"{"kind":"mlp","dim":2,"classes":2,
                "layers":[{"weights":[[1.0,0.0],[0.0,1.0]],"bias":[0.0,0.0],"activation":"swish"}]}"#,
        )
        .unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(err.to_string().contains("activation"), "{err}");
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempdir().unwrap();
        let labeled = dir.path().join("train.csv");
        let instances = vec![
            LabeledInstance::new(vec![0.5, -1.25, 1.0 / 3.0], 0).unwrap(),
            LabeledInstance::new(vec![2.0, 1e-9, -7.5], 1).unwrap(),
        ];
        save_labeled_dataset(&instances, &labeled).unwrap();
        let loaded = load_labeled_dataset(&labeled, false).unwrap();
        assert_eq!(loaded, instances);

        let unlabeled = dir.path().join("sub.csv");
        let ds = SubspaceDataset::new(2, vec![vec![1.0, 2.0], vec![-0.125, 4.0]]).unwrap();
        save_unlabeled_dataset(&ds, &unlabeled).unwrap();
        let loaded = load_unlabeled_dataset(&unlabeled, false).unwrap();
        assert_eq!(loaded.instances(), ds.instances());
    }

    #[test]
    fn labeled_dataset_rejects_bad_label() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "1.0,2.0,cat\n").unwrap();
        assert!(load_labeled_dataset(&path, false).is_err());
    }
}
