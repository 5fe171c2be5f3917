//! Datasets, sample ordering and input scaling shared by both models.
//!
//! Dataset order is meaningful: SQANN construction consumes samples in the
//! order they are stored, so nothing in this module shuffles. Only
//! [`linear_order`] re-sorts, and it is used exclusively by the TNN path.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("dataset is empty")]
    Empty,
    #[error("sample {index}: expected input dim {expected}, found {found}")]
    InputDim {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("sample {index}: expected output dim {expected}, found {found}")]
    OutputDim {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("sample {index} has a non-finite component")]
    NonFinite { index: usize },
    #[error("sample index {index} appears more than once")]
    DuplicateIndex { index: usize },
    #[error("input and output dimensions must be positive")]
    ZeroDim,
    #[error("samples {first} and {second} share the same input")]
    DuplicateInput { first: usize, second: usize },
    #[error("samples {first} and {second} share the same input but differ in output")]
    IllDefined { first: usize, second: usize },
    #[error("linear ordering needs scalar inputs, dataset has input dim {0}")]
    NotScalar(usize),
    #[error("scaling parameters cover {expected} dims, input has {found}")]
    ScalingDim { expected: usize, found: usize },
}

/// One (input, output) pair. `index` is its position in the originally
/// supplied dataset and survives any re-ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub index: usize,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Vec<f64>, index: usize) -> Self {
        Self { x, y, index }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
    input_dim: usize,
    output_dim: usize,
}

impl Dataset {
    /// Checks dimensions, finiteness and index uniqueness.
    pub fn new(samples: Vec<Sample>) -> Result<Self, DataError> {
        let first = samples.first().ok_or(DataError::Empty)?;
        let input_dim = first.x.len();
        let output_dim = first.y.len();
        if input_dim == 0 || output_dim == 0 {
            return Err(DataError::ZeroDim);
        }
        let mut seen = std::collections::HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.x.len() != input_dim {
                return Err(DataError::InputDim {
                    index: s.index,
                    expected: input_dim,
                    found: s.x.len(),
                });
            }
            if s.y.len() != output_dim {
                return Err(DataError::OutputDim {
                    index: s.index,
                    expected: output_dim,
                    found: s.y.len(),
                });
            }
            if s.x.iter().chain(&s.y).any(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { index: s.index });
            }
            if !seen.insert(s.index) {
                return Err(DataError::DuplicateIndex { index: s.index });
            }
        }
        Ok(Self {
            samples,
            input_dim,
            output_dim,
        })
    }

    /// Builds a dataset from parallel rows, numbering samples 0.. in row order.
    pub fn from_rows(xs: Vec<Vec<f64>>, ys: Vec<Vec<f64>>) -> Result<Self, DataError> {
        assert_eq!(xs.len(), ys.len(), "inputs and outputs differ in length");
        let samples = xs
            .into_iter()
            .zip(ys)
            .enumerate()
            .map(|(i, (x, y))| Sample::new(x, y, i))
            .collect();
        Self::new(samples)
    }

    /// Scalar-output convenience constructor.
    pub fn from_scalar_targets(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self, DataError> {
        Self::from_rows(xs, ys.into_iter().map(|y| vec![y]).collect())
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    /// Looks a sample up by its original index.
    pub fn by_index(&self, index: usize) -> Option<&Sample> {
        self.samples.iter().find(|s| s.index == index)
    }

    /// Ordered prefix split: the first `n` samples and the rest.
    pub fn split_at(&self, n: usize) -> Result<(Dataset, Dataset), DataError> {
        let n = n.min(self.samples.len());
        let head = Dataset::new(self.samples[..n].to_vec())?;
        let tail = Dataset::new(self.samples[n..].to_vec())?;
        Ok((head, tail))
    }

    /// Appends `other` after `self`, keeping each sample's index.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset, DataError> {
        let mut samples = self.samples.clone();
        samples.extend(other.samples.iter().cloned());
        Dataset::new(samples)
    }

    /// Replaces every input with `f(x)`; indices and outputs are kept.
    pub fn map_inputs(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Dataset, DataError> {
        let samples = self
            .samples
            .iter()
            .map(|s| Sample::new(f(&s.x), s.y.clone(), s.index))
            .collect();
        Dataset::new(samples)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationResult {
    /// Positions `(i, j)`, `i < j`, with equal inputs and different outputs.
    pub ill_defined: Vec<(usize, usize)>,
    /// Positions `(i, j)` of exact duplicate samples.
    pub duplicates: Vec<(usize, usize)>,
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        self.ill_defined.is_empty()
    }
}

fn bits(v: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 are the same input.
    v.iter()
        .map(|x| if *x == 0.0 { 0 } else { x.to_bits() })
        .collect()
}

/// Reports every pair of samples with bitwise-equal inputs. Pairs with
/// different outputs make the dataset ill-defined; identical pairs are only
/// warnings. Positions refer to the dataset order.
pub fn validate_dataset(d: &Dataset) -> ValidationResult {
    let mut groups: std::collections::HashMap<Vec<u64>, Vec<usize>> = Default::default();
    for (pos, s) in d.samples.iter().enumerate() {
        groups.entry(bits(&s.x)).or_default().push(pos);
    }
    let mut result = ValidationResult::default();
    for members in groups.values().filter(|m| m.len() > 1) {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                if bits(&d.samples[i].y) == bits(&d.samples[j].y) {
                    result.duplicates.push((i, j));
                } else {
                    result.ill_defined.push((i, j));
                }
            }
        }
    }
    result.ill_defined.sort_unstable();
    result.duplicates.sort_unstable();
    result
}

/// Per-dimension affine map onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingParams {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Constant dimensions map to 0.5. Values outside the fitted range land
    /// outside `[0, 1]`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 })
            .collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(v, (lo, hi))| if hi > lo { lo + v * (hi - lo) } else { *lo })
            .collect()
    }
}

/// Per-dimension z-score standardisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizeParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizeParams {
    /// Zero-variance dimensions map to 0.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s > 0.0 { m + v * s } else { *m })
            .collect()
    }
}

/// Input transform stored alongside a model so external inputs get the same
/// mapping as the fitting data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputScaling {
    MinMax(ScalingParams),
    Standardize(StandardizeParams),
}

impl InputScaling {
    pub fn dim(&self) -> usize {
        match self {
            InputScaling::MinMax(p) => p.min.len(),
            InputScaling::Standardize(p) => p.mean.len(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, DataError> {
        if x.len() != self.dim() {
            return Err(DataError::ScalingDim {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(match self {
            InputScaling::MinMax(p) => p.apply(x),
            InputScaling::Standardize(p) => p.apply(x),
        })
    }

    pub fn apply_dataset(&self, d: &Dataset) -> Result<Dataset, DataError> {
        if d.input_dim() != self.dim() {
            return Err(DataError::ScalingDim {
                expected: self.dim(),
                found: d.input_dim(),
            });
        }
        d.map_inputs(|x| match self {
            InputScaling::MinMax(p) => p.apply(x),
            InputScaling::Standardize(p) => p.apply(x),
        })
    }
}

pub fn fit_min_max(d: &Dataset) -> ScalingParams {
    let dim = d.input_dim();
    let mut min = vec![f64::INFINITY; dim];
    let mut max = vec![f64::NEG_INFINITY; dim];
    for s in d.samples() {
        for (k, v) in s.x.iter().enumerate() {
            min[k] = min[k].min(*v);
            max[k] = max[k].max(*v);
        }
    }
    ScalingParams { min, max }
}

/// Maps each input dimension onto `[0, 1]` using the dataset's own range.
pub fn min_max_scale(d: &Dataset) -> (Dataset, ScalingParams) {
    let params = fit_min_max(d);
    let scaled = d
        .map_inputs(|x| params.apply(x))
        .expect("scaling preserves dataset shape");
    (scaled, params)
}

/// Population mean and standard deviation per input dimension.
pub fn fit_standardize(d: &Dataset) -> StandardizeParams {
    let dim = d.input_dim();
    let n = d.len() as f64;
    let mut mean = vec![0.0; dim];
    for s in d.samples() {
        for (k, v) in s.x.iter().enumerate() {
            mean[k] += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for s in d.samples() {
        for (k, v) in s.x.iter().enumerate() {
            var[k] += (v - mean[k]).powi(2);
        }
    }
    let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
    StandardizeParams { mean, std }
}

/// Samples sorted strictly descending by their scalar input.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedDataset {
    inner: Dataset,
}

impl OrderedDataset {
    pub fn samples(&self) -> &[Sample] {
        self.inner.samples()
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn output_dim(&self) -> usize {
        self.inner.output_dim()
    }

    /// Scalar inputs, largest first.
    pub fn xs(&self) -> Vec<f64> {
        self.inner.samples().iter().map(|s| s.x[0]).collect()
    }

    pub fn as_dataset(&self) -> &Dataset {
        &self.inner
    }
}

/// Sorts a scalar-input dataset strictly descending by `x`.
pub fn linear_order(d: &Dataset) -> Result<OrderedDataset, DataError> {
    if d.input_dim() != 1 {
        return Err(DataError::NotScalar(d.input_dim()));
    }
    let mut samples = d.samples().to_vec();
    samples.sort_by(|a, b| b.x[0].total_cmp(&a.x[0]));
    for w in samples.windows(2) {
        if w[0].x[0] == w[1].x[0] {
            let (first, second) = (w[0].index.min(w[1].index), w[0].index.max(w[1].index));
            if bits(&w[0].y) != bits(&w[1].y) {
                return Err(DataError::IllDefined { first, second });
            }
            return Err(DataError::DuplicateInput { first, second });
        }
    }
    Ok(OrderedDataset {
        inner: Dataset::new(samples)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(points: &[(f64, f64)]) -> Dataset {
        Dataset::from_scalar_targets(
            points.iter().map(|p| vec![p.0]).collect(),
            points.iter().map(|p| p.1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn validate_reports_ill_defined_and_duplicates() {
        assert!(validate_dataset(&scalar(&[(1.0, 1.0), (0.5, 2.0), (0.0, 3.0)])).is_ok());

        let bad = validate_dataset(&scalar(&[(0.5, 1.0), (0.5, 2.0)]));
        assert_eq!(bad.ill_defined, vec![(0, 1)]);
        assert!(!bad.is_ok());

        let dup = validate_dataset(&scalar(&[(0.5, 1.0), (0.5, 1.0)]));
        assert!(dup.is_ok());
        assert_eq!(dup.duplicates, vec![(0, 1)]);
    }

    #[test]
    fn dataset_rejects_bad_shapes() {
        let err = Dataset::from_rows(vec![vec![1.0], vec![1.0, 2.0]], vec![vec![0.0], vec![0.0]]);
        assert!(matches!(err, Err(DataError::InputDim { .. })));
        let err = Dataset::from_rows(vec![vec![f64::NAN]], vec![vec![0.0]]);
        assert_eq!(err, Err(DataError::NonFinite { index: 0 }));
        assert_eq!(Dataset::new(vec![]), Err(DataError::Empty));
    }

    #[test]
    fn min_max_examples() {
        let (scaled, params) = min_max_scale(&scalar(&[(2.0, 0.0), (4.0, 0.0), (6.0, 0.0)]));
        let xs: Vec<f64> = scaled.samples().iter().map(|s| s.x[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        assert_eq!((params.min[0], params.max[0]), (2.0, 6.0));
        assert_eq!(params.apply(&[8.0]), vec![1.5]);

        let (scaled, _) = min_max_scale(&scalar(&[(3.0, 0.0), (3.0, 1.0)]));
        assert!(scaled.samples().iter().all(|s| s.x[0] == 0.5));
    }

    #[test]
    fn linear_order_sorts_descending() {
        let ordered = linear_order(&scalar(&[(0.0, 3.0), (1.0, 1.0), (0.5, 2.0)])).unwrap();
        assert_eq!(ordered.xs(), vec![1.0, 0.5, 0.0]);
        let idx: Vec<usize> = ordered.samples().iter().map(|s| s.index).collect();
        assert_eq!(idx, vec![1, 2, 0]);

        let single = linear_order(&scalar(&[(0.3, 7.0)])).unwrap();
        assert_eq!(single.xs(), vec![0.3]);

        assert_eq!(
            linear_order(&scalar(&[(0.5, 1.0), (0.5, 1.0)])),
            Err(DataError::DuplicateInput {
                first: 0,
                second: 1
            })
        );
        assert_eq!(
            linear_order(&scalar(&[(0.5, 1.0), (0.5, 2.0)])),
            Err(DataError::IllDefined {
                first: 0,
                second: 1
            })
        );
    }

    #[test]
    fn standardize_round_trips() {
        let d = scalar(&[(1.0, 0.0), (2.0, 0.0), (4.0, 0.0)]);
        let p = fit_standardize(&d);
        for s in d.samples() {
            let back = p.invert(&p.apply(&s.x));
            assert!((back[0] - s.x[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn prefix_split_keeps_order() {
        let d = scalar(&[(0.1, 1.0), (0.2, 2.0), (0.3, 3.0)]);
        let (head, tail) = d.split_at(2).unwrap();
        assert_eq!(head.len(), 2);
        assert_eq!(tail.samples()[0].index, 2);
        assert_eq!(head.concat(&tail).unwrap(), d);
    }
}
