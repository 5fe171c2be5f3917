//! Absorb-and-rebuild: external samples a model gets wrong are appended to
//! the fitting set and the model is reconstructed, round after round.
//!
//! Absorbed samples are appended in external order. Nothing already in the
//! fitting set is ever removed, so a constructive model keeps predicting its
//! old samples (exactly for SQANN, within `ε` for TNN).

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset, Sample};
use crate::sqann::{build_sqann, BuildError, SqannConfig, SqannError, SqannModel};
use crate::tnn::{
    fit_tnn, required_sharpness, DummyDeltaRule, TnnError, TnnModel, DEFAULT_SHARPNESS,
};

#[derive(Debug, Error)]
pub enum AbsorbError {
    #[error("epsilon must be positive and finite, got {0}")]
    Epsilon(f64),
    #[error("max_rounds must be at least 1")]
    ZeroRounds,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Tnn(#[from] TnnError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Predict(#[from] SqannError),
    #[error("TNN expects scalar inputs, got dimension {0}")]
    NotScalar(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OodCriterion {
    #[default]
    ErrorOnly,
    /// Also flags samples no neuron responds to strongly (SQANN only).
    ErrorOrWeakActivation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionConfig {
    pub epsilon: f64,
    pub max_rounds: usize,
    #[serde(default)]
    pub criterion: OodCriterion,
    /// Keep the model built on the original fitting set and answer with
    /// whichever of the two responds more strongly.
    #[serde(default)]
    pub keep_original: bool,
}

impl AbsorptionConfig {
    pub fn new(epsilon: f64, max_rounds: usize) -> Self {
        Self {
            epsilon,
            max_rounds,
            criterion: OodCriterion::ErrorOnly,
            keep_original: false,
        }
    }

    pub fn validate(&self) -> Result<(), AbsorbError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(AbsorbError::Epsilon(self.epsilon));
        }
        if self.max_rounds == 0 {
            return Err(AbsorbError::ZeroRounds);
        }
        Ok(())
    }
}

/// A fitted model the absorption loop can query.
pub trait Approximator {
    fn output(&self, x: &[f64]) -> Result<Vec<f64>, AbsorbError>;

    /// Strongest hidden response to `x`, for models that have a notion of it.
    fn peak_activation(&self, _x: &[f64]) -> Result<Option<f64>, AbsorbError> {
        Ok(None)
    }

    /// Whether `x` reached a strongly activated neuron. Models without
    /// selective neurons always answer `true`.
    fn strongly_activated(&self, _x: &[f64]) -> Result<bool, AbsorbError> {
        Ok(true)
    }

    /// Samples the model was built on, with their original indices.
    fn fitting_samples(&self) -> Vec<Sample>;

    /// Fitting samples are reproduced with zero error.
    fn exact_on_fitting(&self) -> bool;
}

impl Approximator for TnnModel {
    fn output(&self, x: &[f64]) -> Result<Vec<f64>, AbsorbError> {
        match x {
            [v] => Ok(self.predict(*v)),
            _ => Err(AbsorbError::NotScalar(x.len())),
        }
    }

    fn fitting_samples(&self) -> Vec<Sample> {
        self.ordered_x
            .iter()
            .zip(&self.ordered_y)
            .zip(&self.ordered_index)
            .map(|((x, y), i)| Sample::new(vec![*x], y.clone(), *i))
            .collect()
    }

    fn exact_on_fitting(&self) -> bool {
        false
    }
}

impl Approximator for SqannModel {
    fn output(&self, x: &[f64]) -> Result<Vec<f64>, AbsorbError> {
        Ok(self.predict(x)?.y)
    }

    fn peak_activation(&self, x: &[f64]) -> Result<Option<f64>, AbsorbError> {
        Ok(Some(self.predict(x)?.max_activation()))
    }

    fn strongly_activated(&self, x: &[f64]) -> Result<bool, AbsorbError> {
        Ok(!self.predict(x)?.is_interpolated())
    }

    fn fitting_samples(&self) -> Vec<Sample> {
        self.fitting.samples().to_vec()
    }

    fn exact_on_fitting(&self) -> bool {
        true
    }
}

/// Rebuilds a model from scratch on a fitting set.
pub trait ModelBuilder {
    type Model: Approximator + Clone;
    fn build(&self, fitting: &Dataset, cfg: &AbsorptionConfig) -> Result<Self::Model, AbsorbError>;
}

/// TNN rebuilds with `a = max(base, a_req)` where `a_req` caps every fitting
/// error at `ε/2` for the current `N` and `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TnnBuilder {
    pub base_sharpness: f64,
    pub dummy: DummyDeltaRule,
}

impl Default for TnnBuilder {
    fn default() -> Self {
        Self {
            base_sharpness: DEFAULT_SHARPNESS,
            dummy: DummyDeltaRule::default(),
        }
    }
}

impl TnnBuilder {
    pub fn sharpness_for(&self, fitting: &Dataset, epsilon: f64) -> f64 {
        let u = fitting
            .samples()
            .iter()
            .flat_map(|s| s.y.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        // a tolerance above U(N+1) holds for any a
        match required_sharpness(epsilon / 2.0, fitting.len(), u) {
            Ok(a) => a.max(self.base_sharpness),
            Err(_) => self.base_sharpness,
        }
    }
}

impl ModelBuilder for TnnBuilder {
    type Model = TnnModel;

    fn build(&self, fitting: &Dataset, cfg: &AbsorptionConfig) -> Result<TnnModel, AbsorbError> {
        let a = self.sharpness_for(fitting, cfg.epsilon);
        Ok(fit_tnn(fitting, a, self.dummy)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SqannBuilder {
    pub config: SqannConfig,
}

impl ModelBuilder for SqannBuilder {
    type Model = SqannModel;

    fn build(&self, fitting: &Dataset, _cfg: &AbsorptionConfig) -> Result<SqannModel, AbsorbError> {
        Ok(build_sqann(fitting, &self.config)?.0)
    }
}

/// The current model, optionally paired with the one built before any
/// absorption.
pub struct Ensemble<'a, M> {
    pub current: &'a M,
    pub original: Option<&'a M>,
}

impl<M: Approximator> Ensemble<'_, M> {
    fn pick(&self, x: &[f64]) -> Result<&M, AbsorbError> {
        if let Some(orig) = self.original {
            if let (Some(o), Some(c)) = (orig.peak_activation(x)?, self.current.peak_activation(x)?)
            {
                if o > c {
                    return Ok(orig);
                }
            }
        }
        Ok(self.current)
    }

    pub fn output(&self, x: &[f64]) -> Result<Vec<f64>, AbsorbError> {
        self.pick(x)?.output(x)
    }

    pub fn strongly_activated(&self, x: &[f64]) -> Result<bool, AbsorbError> {
        self.pick(x)?.strongly_activated(x)
    }
}

/// Componentwise max-norm error.
pub fn max_abs_error(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter()
        .zip(y)
        .fold(0.0f64, |m, (p, t)| m.max((p - t).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub max_error: f64,
    /// Mean over samples and output components of the squared error.
    pub mse: f64,
}

pub fn evaluate<M: Approximator>(
    model: &Ensemble<'_, M>,
    d: &Dataset,
) -> Result<ErrorSummary, AbsorbError> {
    let mut max_error = 0.0f64;
    let mut sq = 0.0;
    for s in d.samples() {
        let p = model.output(&s.x)?;
        max_error = max_error.max(max_abs_error(&p, &s.y));
        sq += p
            .iter()
            .zip(&s.y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    let count = (d.len() * d.output_dim()) as f64;
    Ok(ErrorSummary {
        max_error,
        mse: sq / count,
    })
}

fn scan<M: Approximator>(
    model: &Ensemble<'_, M>,
    external: &Dataset,
    cfg: &AbsorptionConfig,
    skip: &HashSet<usize>,
) -> Result<Vec<usize>, AbsorbError> {
    let mut out = Vec::new();
    for s in external.samples() {
        if skip.contains(&s.index) {
            continue;
        }
        let err = max_abs_error(&model.output(&s.x)?, &s.y);
        let weak = cfg.criterion == OodCriterion::ErrorOrWeakActivation
            && !model.strongly_activated(&s.x)?;
        if err > cfg.epsilon || weak {
            out.push(s.index);
        }
    }
    Ok(out)
}

/// Indices of external samples the model gets wrong by more than `ε`,
/// in external order.
pub fn find_ood<M: Approximator>(
    model: &M,
    external: &Dataset,
    cfg: &AbsorptionConfig,
) -> Result<Vec<usize>, AbsorbError> {
    let single = Ensemble {
        current: model,
        original: None,
    };
    scan(&single, external, cfg, &HashSet::new())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionRound {
    pub absorbed_indices: Vec<usize>,
    pub fitting_size_after: usize,
    pub external_max_error_after: f64,
    pub external_mse_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionReport {
    pub initial: ErrorSummary,
    pub initial_fitting_size: usize,
    pub rounds: Vec<AbsorptionRound>,
    /// No ood sample remained when the loop stopped.
    pub converged: bool,
}

impl AbsorptionReport {
    pub fn total_absorbed(&self) -> usize {
        self.rounds.iter().map(|r| r.absorbed_indices.len()).sum()
    }

    pub fn final_summary(&self) -> ErrorSummary {
        self.rounds.last().map_or(self.initial, |r| ErrorSummary {
            max_error: r.external_max_error_after,
            mse: r.external_mse_after,
        })
    }

    /// One row per round; round 0 is the model before absorption.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("round,absorbed,fitting_size,external_max_error,external_mse\n");
        let _ = writeln!(
            s,
            "0,0,{},{:?},{:?}",
            self.initial_fitting_size, self.initial.max_error, self.initial.mse
        );
        for (i, r) in self.rounds.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{:?},{:?}",
                i + 1,
                r.absorbed_indices.len(),
                r.fitting_size_after,
                r.external_max_error_after,
                r.external_mse_after
            );
        }
        s
    }
}

pub struct AbsorptionOutcome<M> {
    pub model: M,
    /// Model built on the initial fitting set; kept only with `keep_original`.
    pub original: Option<M>,
    pub fitting: Dataset,
    pub report: AbsorptionReport,
}

impl<M: Approximator> AbsorptionOutcome<M> {
    pub fn ensemble(&self) -> Ensemble<'_, M> {
        Ensemble {
            current: &self.model,
            original: self.original.as_ref(),
        }
    }
}

/// Runs find-ood / append / rebuild rounds until nothing is ood, every
/// external sample has been absorbed, or `max_rounds` is spent. Fitting and
/// external sample indices must be disjoint.
pub fn absorb_loop<B: ModelBuilder>(
    builder: &B,
    fitting: &Dataset,
    external: &Dataset,
    cfg: &AbsorptionConfig,
) -> Result<AbsorptionOutcome<B::Model>, AbsorbError> {
    cfg.validate()?;
    let mut current_fit = fitting.clone();
    let first = builder.build(&current_fit, cfg)?;
    let (mut model, original) = if cfg.keep_original {
        (first.clone(), Some(first))
    } else {
        (first, None)
    };

    let view = Ensemble {
        current: &model,
        original: original.as_ref(),
    };
    let initial = evaluate(&view, external)?;
    let mut absorbed: HashSet<usize> = HashSet::new();
    let mut rounds = Vec::new();
    let mut pending = scan(&view, external, cfg, &absorbed)?;

    while !pending.is_empty() && rounds.len() < cfg.max_rounds {
        let picked: HashSet<usize> = pending.iter().copied().collect();
        let extra: Vec<Sample> = external
            .samples()
            .iter()
            .filter(|s| picked.contains(&s.index))
            .cloned()
            .collect();
        current_fit = current_fit.concat(&Dataset::new(extra)?)?;
        absorbed.extend(picked);
        model = builder.build(&current_fit, cfg)?;

        let view = Ensemble {
            current: &model,
            original: original.as_ref(),
        };
        let summary = evaluate(&view, external)?;
        rounds.push(AbsorptionRound {
            absorbed_indices: pending,
            fitting_size_after: current_fit.len(),
            external_max_error_after: summary.max_error,
            external_mse_after: summary.mse,
        });
        pending = scan(&view, external, cfg, &absorbed)?;
    }

    let report = AbsorptionReport {
        initial,
        initial_fitting_size: fitting.len(),
        rounds,
        converged: pending.is_empty(),
    };
    Ok(AbsorptionOutcome {
        model,
        original,
        fitting: current_fit,
        report,
    })
}

#[derive(Debug, Error, PartialEq)]
pub enum CfViolation {
    #[error("old fitting sample {index} is not part of the {which} model's fitting set")]
    NotSuperset { index: usize, which: &'static str },
}

fn contains_all(
    model_fit: &[Sample],
    old: &Dataset,
    which: &'static str,
) -> Result<(), CfViolation> {
    for s in old.samples() {
        let found = model_fit
            .iter()
            .any(|m| m.index == s.index && m.x == s.x && m.y == s.y);
        if !found {
            return Err(CfViolation::NotSuperset {
                index: s.index,
                which,
            });
        }
    }
    Ok(())
}

/// Whether `after` still fits every sample of `old_fitting`: exactly for
/// models that reproduce fitting data, within `ε` otherwise. Both models
/// must have been built on sets containing `old_fitting`.
pub fn cf_check<M: Approximator>(
    before: &M,
    after: &M,
    old_fitting: &Dataset,
    epsilon: f64,
) -> Result<bool, CfViolation> {
    contains_all(&before.fitting_samples(), old_fitting, "earlier")?;
    contains_all(&after.fitting_samples(), old_fitting, "later")?;
    let exact = after.exact_on_fitting();
    Ok(old_fitting
        .samples()
        .iter()
        .all(|s| match after.output(&s.x) {
            Ok(p) => {
                let e = max_abs_error(&p, &s.y);
                if exact {
                    e == 0.0
                } else {
                    e < epsilon
                }
            }
            Err(_) => false,
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(xs: &[f64], ys: &[f64], offset: usize) -> Dataset {
        Dataset::new(
            xs.iter()
                .zip(ys)
                .enumerate()
                .map(|(i, (x, y))| Sample::new(vec![*x], vec![*y], i + offset))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            AbsorptionConfig::new(0.0, 1).validate(),
            Err(AbsorbError::Epsilon(_))
        ));
        assert!(matches!(
            AbsorptionConfig::new(0.1, 0).validate(),
            Err(AbsorbError::ZeroRounds)
        ));
    }

    #[test]
    fn fitting_samples_are_never_ood_for_sqann() {
        let d = Dataset::from_scalar_targets(
            vec![vec![0.0, 0.1], vec![0.5, 0.2], vec![0.9, 0.9]],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let (m, _) = build_sqann(&d, &SqannConfig::default()).unwrap();
        assert!(find_ood(&m, &d, &AbsorptionConfig::new(1e-12, 1))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn large_error_is_flagged() {
        let fit = scalar(&[0.0, 1.0], &[0.0, 1.0], 0);
        let m = TnnBuilder::default()
            .build(&fit, &AbsorptionConfig::new(0.1, 1))
            .unwrap();
        let p = m.predict(2.0)[0];
        let ext = scalar(&[2.0], &[p + 0.2], 10);
        assert_eq!(
            find_ood(&m, &ext, &AbsorptionConfig::new(0.1, 1)).unwrap(),
            vec![10]
        );
        let ext = scalar(&[2.0], &[p + 0.05], 10);
        assert!(find_ood(&m, &ext, &AbsorptionConfig::new(0.1, 1))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn nothing_to_absorb_converges_immediately() {
        let fit = scalar(&[0.0, 0.5, 1.0], &[0.0, 0.5, 1.0], 0);
        let ext = fit.clone();
        let ext = ext.map_inputs(|x| x.to_vec()).unwrap();
        let ext = Dataset::new(
            ext.samples()
                .iter()
                .map(|s| Sample::new(s.x.clone(), s.y.clone(), s.index + 100))
                .collect(),
        )
        .unwrap();
        let out = absorb_loop(
            &SqannBuilder::default(),
            &fit,
            &ext,
            &AbsorptionConfig::new(1e-6, 5),
        )
        .unwrap();
        assert!(out.report.converged);
        assert!(out.report.rounds.is_empty());
    }

    #[test]
    fn weak_activation_criterion() {
        let fit = Dataset::from_scalar_targets(vec![vec![0.0, 0.0]], vec![1.0]).unwrap();
        let (m, _) = build_sqann(&fit, &SqannConfig::default()).unwrap();
        // same label, far away: zero error but interpolated
        let ext = Dataset::new(vec![Sample::new(vec![3.0, 3.0], vec![1.0], 7)]).unwrap();
        let mut cfg = AbsorptionConfig::new(0.5, 1);
        assert!(find_ood(&m, &ext, &cfg).unwrap().is_empty());
        cfg.criterion = OodCriterion::ErrorOrWeakActivation;
        assert_eq!(find_ood(&m, &ext, &cfg).unwrap(), vec![7]);
    }

    #[test]
    fn non_superset_is_a_contract_violation() {
        let a = scalar(&[0.0, 1.0], &[0.0, 1.0], 0);
        let b = scalar(&[0.0, 2.0], &[0.0, 1.0], 0);
        let ma = SqannBuilder::default()
            .build(&a, &AbsorptionConfig::new(1.0, 1))
            .unwrap();
        let mb = SqannBuilder::default()
            .build(&b, &AbsorptionConfig::new(1.0, 1))
            .unwrap();
        assert_eq!(
            cf_check(&ma, &mb, &a, 1e-3),
            Err(CfViolation::NotSuperset {
                index: 1,
                which: "later"
            })
        );
        assert_eq!(cf_check(&ma, &ma, &a, 1e-3), Ok(true));
    }

    #[test]
    fn ensemble_prefers_stronger_model() {
        let fit = Dataset::from_scalar_targets(vec![vec![0.0, 0.0]], vec![1.0]).unwrap();
        let ext = Dataset::new(vec![Sample::new(vec![1.0, 1.0], vec![5.0], 1)]).unwrap();
        let mut cfg = AbsorptionConfig::new(0.5, 3);
        cfg.keep_original = true;
        let out = absorb_loop(&SqannBuilder::default(), &fit, &ext, &cfg).unwrap();
        let e = out.ensemble();
        assert_eq!(e.output(&[0.0, 0.0]).unwrap(), vec![1.0]);
        assert_eq!(e.output(&[1.0, 1.0]).unwrap(), vec![5.0]);
        assert!(out.report.converged);
        assert_eq!(out.report.total_absorbed(), 1);
    }

    #[test]
    fn report_csv_layout() {
        let fit = scalar(&[0.0, 1.0], &[0.0, 1.0], 0);
        let ext = scalar(&[0.5, 3.0], &[4.0, -2.0], 10);
        let out = absorb_loop(
            &SqannBuilder::default(),
            &fit,
            &ext,
            &AbsorptionConfig::new(0.1, 4),
        )
        .unwrap();
        let csv = out.report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "round,absorbed,fitting_size,external_max_error,external_mse"
        );
        assert!(lines[1].starts_with("0,0,2,"));
        assert!(lines[2].starts_with("1,2,4,0.0,0.0"));
        assert_eq!(lines.len(), 2 + out.report.rounds.len());
    }

    /// Found by brute force over small seeded 1-D datasets: absorbing the
    /// first ood sample pushes a previously accurate neighbour past `ε`.
    #[test]
    fn tnn_absorption_can_need_two_rounds() {
        let (fit, ext, eps) = two_round_case();
        let cfg = AbsorptionConfig::new(eps, 10);
        let out = absorb_loop(&TnnBuilder::default(), &fit, &ext, &cfg).unwrap();
        let rounds: Vec<Vec<usize>> = out
            .report
            .rounds
            .iter()
            .map(|r| r.absorbed_indices.clone())
            .collect();
        assert_eq!(rounds, vec![vec![100], vec![101]]);
        assert!(out.report.converged);
        let all = fit.concat(&ext).unwrap();
        for s in all.samples() {
            assert!(max_abs_error(&out.model.output(&s.x).unwrap(), &s.y) <= eps);
        }
        for s in out.fitting.samples() {
            assert!(max_abs_error(&out.model.output(&s.x).unwrap(), &s.y) < eps);
        }
    }

    fn two_round_case() -> (Dataset, Dataset, f64) {
        (
            scalar(&TWO_ROUND_FIT_X, &TWO_ROUND_FIT_Y, 0),
            scalar(&TWO_ROUND_EXT_X, &TWO_ROUND_EXT_Y, 100),
            TWO_ROUND_EPS,
        )
    }

    const TWO_ROUND_EPS: f64 = 0.1;
    const TWO_ROUND_FIT_X: [f64; 2] = [0.45, 0.3];
    const TWO_ROUND_FIT_Y: [f64; 2] = [-0.8, 0.2];
    const TWO_ROUND_EXT_X: [f64; 2] = [0.55, 0.6];
    const TWO_ROUND_EXT_Y: [f64; 2] = [0.8, -0.8];

    fn random_pair(rng: &mut ChaCha8Rng, dim: usize, n: usize, m: usize) -> (Dataset, Dataset) {
        let mut xs: Vec<Vec<f64>> = Vec::new();
        while xs.len() < n + m {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if !xs.contains(&x) {
                xs.push(x);
            }
        }
        let samples: Vec<Sample> = xs
            .into_iter()
            .enumerate()
            .map(|(i, x)| {
                let y = vec![rng.gen_range(-1.0..1.0)];
                Sample::new(x, y, i)
            })
            .collect();
        let d = Dataset::new(samples).unwrap();
        d.split_at(n).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn sqann_rounds_keep_old_samples_exact(seed in any::<u64>(), n in 1usize..40, m in 1usize..40, eps in 0.01f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (fit, ext) = random_pair(&mut rng, 2, n, m);
            let cfg = AbsorptionConfig::new(eps, 1);
            let b = SqannBuilder::default();
            let mut model = b.build(&fit, &cfg).unwrap();
            let mut current = fit.clone();
            let mut sizes = vec![current.len()];
            let mut seen = HashSet::new();
            for _ in 0..m {
                let out = absorb_loop(&b, &current, &ext_without(&ext, &current), &cfg).unwrap();
                if out.report.rounds.is_empty() { break; }
                for i in &out.report.rounds[0].absorbed_indices {
                    prop_assert!(seen.insert(*i));
                }
                prop_assert_eq!(cf_check(&model, &out.model, &fit, eps), Ok(true));
                prop_assert_eq!(cf_check(&model, &out.model, &current, eps), Ok(true));
                model = out.model;
                current = out.fitting;
                sizes.push(current.len());
            }
            prop_assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn tnn_converged_loop_meets_tolerance(seed in any::<u64>(), n in 1usize..20, m in 1usize..20, eps in 0.02f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (fit, ext) = random_pair(&mut rng, 1, n, m);
            let cfg = AbsorptionConfig::new(eps, m);
            let b = TnnBuilder::default();
            let before = b.build(&fit, &cfg).unwrap();
            let out = absorb_loop(&b, &fit, &ext, &cfg).unwrap();
            prop_assert!(out.report.rounds.len() <= m);
            prop_assert!(out.report.total_absorbed() <= m);
            prop_assert_eq!(cf_check(&before, &out.model, &fit, eps), Ok(true));
            for s in out.fitting.samples() {
                prop_assert!(max_abs_error(&out.model.output(&s.x).unwrap(), &s.y) < eps);
            }
            if out.report.converged {
                for s in ext.samples() {
                    prop_assert!(max_abs_error(&out.model.output(&s.x).unwrap(), &s.y) <= eps);
                }
            }
        }
    }

    fn ext_without(ext: &Dataset, fit: &Dataset) -> Dataset {
        let have: HashSet<usize> = fit.samples().iter().map(|s| s.index).collect();
        let rest: Vec<Sample> = ext
            .samples()
            .iter()
            .filter(|s| !have.contains(&s.index))
            .cloned()
            .collect();
        if rest.is_empty() {
            // an external set that can never be ood
            fit.clone()
        } else {
            Dataset::new(rest).unwrap()
        }
    }
}
