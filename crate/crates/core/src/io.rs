//! CSV ingestion and the JSON model file.
//!
//! A model file is a single JSON object with exactly the keys
//! `format_version`, `model_kind`, `params`, `payload`, `scaling` and
//! `dataset_fingerprint`. Floats are written in shortest round-trip form and
//! parsed back bit-exactly.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data::{DataError, Dataset, InputScaling, Sample};
use crate::sqann::{SqannConfig, SqannLayer, SqannModel};
use crate::tnn::TnnModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}, column {column}: {value:?} is not a number")]
    NonNumericCell {
        line: u64,
        column: usize,
        value: String,
    },
    #[error("line {line} has {found} fields, expected {expected}")]
    RaggedRows {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("unknown target column {0:?}")]
    UnknownColumn(String),
    #[error("at least one target column and one input column are required")]
    NoColumns,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("model file has format version {found}, this build reads {expected}")]
    VersionMismatch { found: u64, expected: u32 },
    #[error("malformed model file: {0}")]
    Schema(String),
}

/// Target column selector: 0-based position, header name or the final column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
    Last,
}

impl std::str::FromStr for Column {
    type Err = std::convert::Infallible;

    /// Integers select by position, `last` the final column, anything else
    /// a header name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "last" {
            return Ok(Column::Last);
        }
        Ok(s.parse::<usize>()
            .map(Column::Index)
            .unwrap_or_else(|_| Column::Name(s.to_string())))
    }
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a numeric CSV file. Rows become samples in file order; the target
/// columns form `y` (in the order given) and the remaining columns form `x`.
pub fn load_csv(
    path: impl AsRef<Path>,
    targets: &[Column],
    has_header: bool,
) -> Result<Dataset, IoError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    read_csv(file, targets, has_header)
}

pub fn read_csv<R: Read>(
    reader: R,
    targets: &[Column],
    has_header: bool,
) -> Result<Dataset, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut header: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;
    let mut rows: Vec<(u64, Vec<f64>)> = Vec::new();

    for rec in rdr.records() {
        let rec = rec.map_err(|e| IoError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(IoError::RaggedRows {
                    line,
                    expected: w,
                    found: rec.len(),
                })
            }
            _ => {}
        }
        if has_header && header.is_none() {
            header = Some(rec.iter().map(str::to_string).collect());
            continue;
        }
        let mut vals = Vec::with_capacity(rec.len());
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| IoError::NonNumericCell {
                line,
                column: c + 1,
                value: cell.to_string(),
            })?;
            vals.push(v);
        }
        rows.push((line, vals));
    }

    let width = width.ok_or(DataError::Empty)?;
    let mut target_pos = Vec::with_capacity(targets.len());
    for t in targets {
        let pos = match t {
            Column::Index(i) if *i < width => *i,
            Column::Index(i) => return Err(IoError::UnknownColumn(i.to_string())),
            Column::Last => width - 1,
            Column::Name(n) => header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == n))
                .ok_or_else(|| IoError::UnknownColumn(n.clone()))?,
        };
        target_pos.push(pos);
    }
    if target_pos.is_empty() || target_pos.len() >= width {
        return Err(IoError::NoColumns);
    }

    let samples = rows
        .into_iter()
        .enumerate()
        .map(|(i, (_, vals))| {
            let y = target_pos.iter().map(|&p| vals[p]).collect();
            let x = vals
                .iter()
                .enumerate()
                .filter(|(c, _)| !target_pos.contains(c))
                .map(|(_, v)| *v)
                .collect();
            Sample::new(x, y, i)
        })
        .collect();
    Ok(Dataset::new(samples)?)
}

/// SHA-256 over the dataset's shape and every sample's index and value bits,
/// in order.
pub fn dataset_fingerprint(d: &Dataset) -> String {
    let mut h = Sha256::new();
    h.update((d.len() as u64).to_le_bytes());
    h.update((d.input_dim() as u64).to_le_bytes());
    h.update((d.output_dim() as u64).to_le_bytes());
    for s in d.samples() {
        h.update((s.index as u64).to_le_bytes());
        for v in s.x.iter().chain(&s.y) {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tnn,
    Sqann,
}

/// A fitted model of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Tnn(TnnModel),
    Sqann(SqannModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Tnn(_) => ModelKind::Tnn,
            Model::Sqann(_) => ModelKind::Sqann,
        }
    }

    /// The dataset the model was built on, in its stored order.
    pub fn fitting_dataset(&self) -> Result<Dataset, DataError> {
        match self {
            Model::Sqann(m) => Ok(m.fitting.clone()),
            Model::Tnn(m) => Dataset::new(
                m.ordered_x
                    .iter()
                    .zip(&m.ordered_y)
                    .zip(&m.ordered_index)
                    .map(|((x, y), i)| Sample::new(vec![*x], y.clone(), *i))
                    .collect(),
            ),
        }
    }
}

/// On-disk model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub params: Value,
    pub payload: Value,
    pub scaling: Option<InputScaling>,
    pub dataset_fingerprint: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TnnParams {
    a: f64,
    delta_dummy: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TnnPayload {
    weights: Vec<f64>,
    biases: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    ordered_x: Vec<f64>,
    ordered_y: Vec<Vec<f64>>,
    ordered_index: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SqannPayload {
    input_dim: usize,
    output_dim: usize,
    layers: Vec<SqannLayer>,
    fitting: Vec<Sample>,
}

fn schema<E: std::fmt::Display>(e: E) -> IoError {
    IoError::Schema(e.to_string())
}

impl ModelFile {
    pub fn from_model(model: &Model, scaling: Option<InputScaling>) -> Result<Self, IoError> {
        let fitting = model.fitting_dataset()?;
        let (params, payload) = match model {
            Model::Tnn(m) => (
                serde_json::to_value(TnnParams {
                    a: m.a,
                    delta_dummy: m.delta_dummy,
                }),
                serde_json::to_value(TnnPayload {
                    weights: m.weights.clone(),
                    biases: m.biases.clone(),
                    alpha: m.alpha.clone(),
                    ordered_x: m.ordered_x.clone(),
                    ordered_y: m.ordered_y.clone(),
                    ordered_index: m.ordered_index.clone(),
                }),
            ),
            Model::Sqann(m) => (
                serde_json::to_value(m.config),
                serde_json::to_value(SqannPayload {
                    input_dim: m.input_dim,
                    output_dim: m.output_dim,
                    layers: m.layers.clone(),
                    fitting: m.fitting.samples().to_vec(),
                }),
            ),
        };
        Ok(Self {
            format_version: FORMAT_VERSION,
            model_kind: model.kind(),
            params: params.map_err(schema)?,
            payload: payload.map_err(schema)?,
            scaling,
            dataset_fingerprint: dataset_fingerprint(&fitting),
        })
    }

    pub fn to_model(&self) -> Result<Model, IoError> {
        let model = match self.model_kind {
            ModelKind::Tnn => {
                let p: TnnParams = serde_json::from_value(self.params.clone()).map_err(schema)?;
                let b: TnnPayload = serde_json::from_value(self.payload.clone()).map_err(schema)?;
                let n = b.weights.len();
                let consistent = b.biases.len() == n
                    && b.ordered_x.len() == n
                    && b.ordered_y.len() == n
                    && b.ordered_index.len() == n
                    && b.alpha.iter().all(|r| r.len() == n);
                if !consistent || n == 0 {
                    return Err(IoError::Schema(
                        "TNN payload arrays differ in length".into(),
                    ));
                }
                Model::Tnn(TnnModel {
                    weights: b.weights,
                    biases: b.biases,
                    alpha: b.alpha,
                    a: p.a,
                    ordered_x: b.ordered_x,
                    ordered_y: b.ordered_y,
                    ordered_index: b.ordered_index,
                    delta_dummy: p.delta_dummy,
                })
            }
            ModelKind::Sqann => {
                let config: SqannConfig =
                    serde_json::from_value(self.params.clone()).map_err(schema)?;
                config.validate().map_err(schema)?;
                let b: SqannPayload =
                    serde_json::from_value(self.payload.clone()).map_err(schema)?;
                let fitting = Dataset::new(b.fitting)?;
                let housed: usize = b.layers.iter().map(SqannLayer::len).sum();
                if housed != fitting.len()
                    || b.input_dim != fitting.input_dim()
                    || b.output_dim != fitting.output_dim()
                {
                    return Err(IoError::Schema(
                        "SQANN layers do not match the fitting set".into(),
                    ));
                }
                Model::Sqann(SqannModel {
                    layers: b.layers,
                    config,
                    input_dim: b.input_dim,
                    output_dim: b.output_dim,
                    fitting,
                })
            }
        };
        let fitting = model.fitting_dataset()?;
        if dataset_fingerprint(&fitting) != self.dataset_fingerprint {
            return Err(IoError::Schema(
                "dataset fingerprint does not match the payload".into(),
            ));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files serialize")
    }

    /// Parses a document, checking the version before anything else.
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let raw: Value = serde_json::from_str(text).map_err(schema)?;
        let version = raw
            .get("format_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| IoError::Schema("missing format_version".into()))?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(IoError::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        serde_json::from_value(raw).map_err(schema)
    }
}

pub fn save_model(
    model: &Model,
    scaling: Option<InputScaling>,
    path: impl AsRef<Path>,
) -> Result<(), IoError> {
    let path = path.as_ref();
    let doc = ModelFile::from_model(model, scaling)?;
    fs::write(path, doc.to_json()).map_err(|e| io_err(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(Model, ModelFile), IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let doc = ModelFile::from_json(&text)?;
    Ok((doc.to_model()?, doc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sqann::build_sqann;
    use crate::tnn::{fit_tnn, DummyDeltaRule};
    use proptest::prelude::*;
    use serde_json::json;

    fn csv_of(text: &str, targets: &[Column], header: bool) -> Result<Dataset, IoError> {
        read_csv(text.as_bytes(), targets, header)
    }

    #[test]
    fn small_csv() {
        let d = csv_of("1,2\n3,4\n5,6\n", &[Column::Index(1)], false).unwrap();
        assert_eq!((d.len(), d.input_dim(), d.output_dim()), (3, 1, 1));
        assert_eq!(d.samples()[2].x, vec![5.0]);
        assert_eq!(d.samples()[2].y, vec![6.0]);
    }

    #[test]
    fn named_targets_and_header() {
        let d = csv_of("a, t ,b\n1,2,3\n4,5,6\n", &[Column::Name("t".into())], true).unwrap();
        assert_eq!(d.samples()[1].x, vec![4.0, 6.0]);
        assert_eq!(d.samples()[1].y, vec![5.0]);
        assert!(matches!(
            csv_of("a,b\n1,2\n", &[Column::Name("z".into())], true),
            Err(IoError::UnknownColumn(_))
        ));
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(
            csv_of("1,2\n3,x\n", &[Column::Index(1)], false),
            Err(IoError::NonNumericCell {
                line: 2,
                column: 2,
                ..
            })
        ));
        assert!(matches!(
            csv_of("1,2\n3\n", &[Column::Index(1)], false),
            Err(IoError::RaggedRows {
                line: 2,
                expected: 2,
                found: 1
            })
        ));
        assert!(matches!(
            csv_of("1\n2\n", &[Column::Index(0)], false),
            Err(IoError::NoColumns)
        ));
        assert!(matches!(
            load_csv("/nonexistent/file.csv", &[Column::Index(0)], false),
            Err(IoError::Io { .. })
        ));
    }

    #[test]
    fn column_parsing() {
        assert_eq!("3".parse::<Column>().unwrap(), Column::Index(3));
        assert_eq!(
            "MEDV".parse::<Column>().unwrap(),
            Column::Name("MEDV".into())
        );
        assert_eq!("last".parse::<Column>().unwrap(), Column::Last);
        let d = csv_of("1,2,3\n", &[Column::Last], false).unwrap();
        assert_eq!(d.samples()[0].y, vec![3.0]);
    }

    fn tnn_example() -> Model {
        let d = Dataset::from_scalar_targets(
            vec![vec![1.0], vec![0.5], vec![0.0]],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        Model::Tnn(fit_tnn(&d, 5.0, DummyDeltaRule::default()).unwrap())
    }

    fn sqann_example() -> Model {
        let d = Dataset::from_scalar_targets(
            vec![
                vec![1.0, 1.2],
                vec![1.2, 0.8],
                vec![-1.0, -1.0],
                vec![-1.2, -1.2],
            ],
            vec![1.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        Model::Sqann(build_sqann(&d, &SqannConfig::default()).unwrap().0)
    }

    #[test]
    fn file_has_exact_top_level_keys() {
        let doc = ModelFile::from_model(&tnn_example(), None).unwrap();
        let v: Value = serde_json::from_str(&doc.to_json()).unwrap();
        let mut keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "dataset_fingerprint",
                "format_version",
                "model_kind",
                "params",
                "payload",
                "scaling"
            ]
        );
        assert_eq!(v["model_kind"], "tnn");
        assert_eq!(v["payload"]["weights"], json!([20.0, 20.0, 20.0]));
    }

    #[test]
    fn round_trip_both_models() {
        let dir = tempfile::tempdir().unwrap();
        for m in [tnn_example(), sqann_example()] {
            let path = dir.path().join("m.json");
            save_model(&m, None, &path).unwrap();
            let (back, _) = load_model(&path).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn version_and_schema_errors() {
        let doc = ModelFile::from_model(&sqann_example(), None).unwrap();
        let mut v: Value = serde_json::from_str(&doc.to_json()).unwrap();
        v["format_version"] = json!(999);
        assert!(matches!(
            ModelFile::from_json(&v.to_string()),
            Err(IoError::VersionMismatch { found: 999, .. })
        ));
        v["format_version"] = json!(1);
        v["extra"] = json!(0);
        assert!(matches!(
            ModelFile::from_json(&v.to_string()),
            Err(IoError::Schema(_))
        ));
        v.as_object_mut().unwrap().remove("extra");
        v["payload"]["layers"][0]["nodes"][0][0] = json!(5.0);
        assert!(ModelFile::from_json(&v.to_string())
            .unwrap()
            .to_model()
            .is_ok());
        v["payload"]["fitting"][0]["y"][0] = json!(7.0);
        assert!(matches!(
            ModelFile::from_json(&v.to_string()).unwrap().to_model(),
            Err(IoError::Schema(_))
        ));
        assert!(matches!(
            ModelFile::from_json("[1,2]"),
            Err(IoError::Schema(_))
        ));
    }

    #[test]
    fn fingerprint_tracks_values_and_order() {
        let d = Dataset::from_scalar_targets(vec![vec![0.0], vec![1.0]], vec![1.0, 2.0]).unwrap();
        let f = dataset_fingerprint(&d);
        assert_eq!(f.len(), 64);
        assert_eq!(f, dataset_fingerprint(&d.clone()));
        let swapped = Dataset::new(d.samples().iter().rev().cloned().collect()).unwrap();
        assert_ne!(f, dataset_fingerprint(&swapped));
        let changed =
            Dataset::from_scalar_targets(vec![vec![0.0], vec![1.0]], vec![1.0, 2.0000001]).unwrap();
        assert_ne!(f, dataset_fingerprint(&changed));
    }

    proptest! {
        #[test]
        fn floats_survive_json(v in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..40)) {
            let text = serde_json::to_string(&v).unwrap();
            let back: Vec<f64> = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(
                back.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                v.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
