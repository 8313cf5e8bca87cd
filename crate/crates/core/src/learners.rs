//! Built-in downstream learners, metrics and the relative gain.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::tabular::{Targets, TaskKind};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LearnError {
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("matrix has {rows} rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("training targets contain a single class")]
    SingleClass,
    #[error("normal equations are singular")]
    Singular,
    #[error("model expects {expected} columns, matrix has {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("{0}")]
    TargetKind(&'static str),
    #[error("baseline metric is zero; relative gain undefined")]
    ZeroBaseline,
    #[error("metric kinds differ: {0:?} vs {1:?}")]
    MetricMismatch(MetricKind, MetricKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    LinearRegression,
    LogisticRegression,
}

impl LearnerKind {
    pub fn for_task(task: TaskKind) -> Self {
        if task.is_classification() {
            LearnerKind::LogisticRegression
        } else {
            LearnerKind::LinearRegression
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    /// L2 penalty; the intercept is never penalized.
    pub ridge: f64,
    pub epochs: usize,
    /// Relative step; the effective rate is `step / L` for a smoothness bound `L`.
    pub step: f64,
    /// Kept for interface stability; both learners are deterministic from
    /// zero initialization and do not draw from it.
    pub seed: u64,
}

impl Hyper {
    pub fn defaults(kind: LearnerKind) -> Self {
        match kind {
            LearnerKind::LinearRegression => Hyper {
                ridge: 1e-6,
                epochs: 0,
                step: 1.0,
                seed: 0,
            },
            LearnerKind::LogisticRegression => Hyper {
                ridge: 1e-4,
                epochs: 300,
                step: 1.0,
                seed: 0,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelFit {
    Linear {
        weights: DVector<f64>,
        intercept: f64,
    },
    Logistic {
        /// `(p + 1) x K`; the last row holds the class biases.
        weights: DMatrix<f64>,
        /// Penalized training loss before each epoch and after the last.
        loss_history: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Accuracy,
    Rmse,
}

impl MetricKind {
    pub fn for_task(task: TaskKind) -> Self {
        if task.is_classification() {
            MetricKind::Accuracy
        } else {
            MetricKind::Rmse
        }
    }

    pub fn higher_is_better(self) -> bool {
        self == MetricKind::Accuracy
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub kind: MetricKind,
    pub value: f64,
}

pub fn fit(kind: LearnerKind, x: &DMatrix<f64>, y: &Targets, hyper: &Hyper) -> Result<ModelFit, LearnError> {
    if x.nrows() != y.len() {
        return Err(LearnError::LengthMismatch {
            rows: x.nrows(),
            targets: y.len(),
        });
    }
    if x.nrows() < 2 {
        return Err(LearnError::TooFewRows(x.nrows()));
    }
    match (kind, y) {
        (LearnerKind::LinearRegression, Targets::Values(v)) => fit_linear(x, v, hyper.ridge),
        (LearnerKind::LogisticRegression, Targets::Classes { labels, n_classes }) => {
            fit_logistic(x, labels, *n_classes, hyper)
        }
        (LearnerKind::LinearRegression, _) => Err(LearnError::TargetKind("linear regression needs numeric targets")),
        (LearnerKind::LogisticRegression, _) => Err(LearnError::TargetKind("logistic regression needs class labels")),
    }
}

fn fit_linear(x: &DMatrix<f64>, y: &[f64], ridge: f64) -> Result<ModelFit, LearnError> {
    let n = x.nrows() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let x_mean: DVector<f64> = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n));
    let mut xc = x.clone();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-x_mean[j]);
    }
    let yc = DVector::from_iterator(y.len(), y.iter().map(|v| v - y_mean));
    let mut gram = xc.transpose() * &xc;
    for j in 0..gram.ncols() {
        gram[(j, j)] += ridge;
    }
    let rhs = xc.transpose() * yc;
    let weights = gram.cholesky().ok_or(LearnError::Singular)?.solve(&rhs);
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(LearnError::Singular);
    }
    let intercept = y_mean - x_mean.dot(&weights);
    Ok(ModelFit::Linear { weights, intercept })
}

fn with_bias(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().insert_column(x.ncols(), 1.0)
}

/// Row-wise softmax, in place, stabilized by the row maximum.
fn softmax_rows(logits: &mut DMatrix<f64>) {
    for mut row in logits.row_iter_mut() {
        let m = row.max();
        row.apply(|v| *v = (*v - m).exp());
        let s = row.sum();
        row /= s;
    }
}

fn fit_logistic(x: &DMatrix<f64>, labels: &[usize], n_classes: usize, hyper: &Hyper) -> Result<ModelFit, LearnError> {
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(LearnError::SingleClass);
    }
    let k = n_classes.max(labels.iter().max().map_or(0, |m| m + 1));
    let xb = with_bias(x);
    let (n, p1) = (xb.nrows(), xb.ncols());
    let nf = n as f64;
    let onehot = DMatrix::from_fn(n, k, |r, c| if labels[r] == c { 1.0 } else { 0.0 });
    // Softmax cross-entropy has Hessian bounded by ||X||_2^2 / n, itself
    // bounded by the Frobenius norm; a rate of 1/L keeps the loss monotone.
    let lipschitz = xb.norm_squared() / nf + hyper.ridge;
    let rate = hyper.step / lipschitz;
    let mut penalty_mask = DMatrix::from_element(p1, k, hyper.ridge);
    penalty_mask.row_mut(p1 - 1).fill(0.0);

    let mut w = DMatrix::<f64>::zeros(p1, k);
    let mut history = Vec::with_capacity(hyper.epochs + 1);
    for epoch in 0..=hyper.epochs {
        let mut probs = &xb * &w;
        softmax_rows(&mut probs);
        let ce = -(0..n).map(|r| probs[(r, labels[r])].max(1e-300).ln()).sum::<f64>() / nf;
        let reg = 0.5 * w.component_mul(&w).component_mul(&penalty_mask).sum();
        history.push(ce + reg);
        if epoch == hyper.epochs {
            break;
        }
        let grad = xb.transpose() * (probs - &onehot) / nf + w.component_mul(&penalty_mask);
        w -= grad * rate;
    }
    Ok(ModelFit::Logistic {
        weights: w,
        loss_history: history,
    })
}

impl ModelFit {
    pub fn input_width(&self) -> usize {
        match self {
            ModelFit::Linear { weights, .. } => weights.len(),
            ModelFit::Logistic { weights, .. } => weights.nrows() - 1,
        }
    }

    fn check_width(&self, x: &DMatrix<f64>) -> Result<(), LearnError> {
        if x.ncols() != self.input_width() {
            return Err(LearnError::WidthMismatch {
                expected: self.input_width(),
                found: x.ncols(),
            });
        }
        Ok(())
    }

    /// Regression predictions.
    pub fn predict_values(&self, x: &DMatrix<f64>) -> Result<Vec<f64>, LearnError> {
        self.check_width(x)?;
        match self {
            ModelFit::Linear { weights, intercept } => Ok((x * weights).iter().map(|v| v + intercept).collect()),
            ModelFit::Logistic { .. } => Err(LearnError::TargetKind("classifier has no value predictions")),
        }
    }

    /// Class predictions; argmax ties go to the lowest class index.
    pub fn predict_classes(&self, x: &DMatrix<f64>) -> Result<Vec<usize>, LearnError> {
        self.check_width(x)?;
        match self {
            ModelFit::Logistic { weights, .. } => {
                let logits = with_bias(x) * weights;
                Ok(logits
                    .row_iter()
                    .map(|row| argmax_lowest(row.iter().copied()))
                    .collect())
            }
            ModelFit::Linear { .. } => Err(LearnError::TargetKind("regressor has no class predictions")),
        }
    }
}

fn argmax_lowest(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub fn accuracy(predicted: &[usize], labels: &[usize]) -> f64 {
    let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    hits as f64 / labels.len() as f64
}

pub fn rmse(predicted: &[f64], targets: &[f64]) -> f64 {
    let mse = predicted.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / targets.len() as f64;
    mse.sqrt()
}

pub fn evaluate(model: &ModelFit, x: &DMatrix<f64>, y: &Targets) -> Result<MetricValue, LearnError> {
    if x.nrows() != y.len() {
        return Err(LearnError::LengthMismatch {
            rows: x.nrows(),
            targets: y.len(),
        });
    }
    match y {
        Targets::Classes { labels, .. } => Ok(MetricValue {
            kind: MetricKind::Accuracy,
            value: accuracy(&model.predict_classes(x)?, labels),
        }),
        Targets::Values(v) => Ok(MetricValue {
            kind: MetricKind::Rmse,
            value: rmse(&model.predict_values(x)?, v),
        }),
    }
}

/// Relative improvement of `new` over `base`; positive always means better.
pub fn relative_gain(base: MetricValue, new: MetricValue) -> Result<f64, LearnError> {
    if base.kind != new.kind {
        return Err(LearnError::MetricMismatch(base.kind, new.kind));
    }
    if base.value == 0.0 {
        return Err(LearnError::ZeroBaseline);
    }
    Ok(match base.kind {
        MetricKind::Accuracy => (new.value - base.value) / base.value,
        MetricKind::Rmse => (base.value - new.value) / base.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn exact_linear_fit() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 / 4.0).collect();
        let y = Targets::Values(x.iter().map(|v| 2.0 * v).collect());
        let kind = LearnerKind::LinearRegression;
        let m = fit(kind, &col(&x), &y, &Hyper::defaults(kind)).unwrap();
        let ModelFit::Linear { weights, intercept } = &m else {
            unreachable!()
        };
        assert!((weights[0] - 2.0).abs() < 1e-6);
        assert!(intercept.abs() < 1e-6);
    }

    #[test]
    fn zero_column_leaves_predictions() {
        let x = DMatrix::from_fn(30, 2, |r, c| ((r * 7 + c * 3) % 11) as f64);
        let y = Targets::Values((0..30).map(|r| (r % 5) as f64 + 0.3 * r as f64).collect());
        let kind = LearnerKind::LinearRegression;
        let h = Hyper::defaults(kind);
        let base = fit(kind, &x, &y, &h).unwrap().predict_values(&x).unwrap();
        let xz = x.clone().insert_column(2, 0.0);
        let aug = fit(kind, &xz, &y, &h).unwrap().predict_values(&xz).unwrap();
        for (a, b) in base.iter().zip(&aug) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn separable_logistic_reaches_full_accuracy() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 - 19.5).collect();
        let labels: Vec<usize> = x.iter().map(|v| usize::from(*v > 0.0)).collect();
        let y = Targets::Classes { labels, n_classes: 2 };
        let kind = LearnerKind::LogisticRegression;
        let m = fit(kind, &col(&x), &y, &Hyper::defaults(kind)).unwrap();
        assert_eq!(evaluate(&m, &col(&x), &y).unwrap().value, 1.0);
        let ModelFit::Logistic { loss_history, .. } = &m else {
            unreachable!()
        };
        assert!(loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_class_rejected() {
        let y = Targets::Classes {
            labels: vec![1; 5],
            n_classes: 2,
        };
        let kind = LearnerKind::LogisticRegression;
        assert_eq!(
            fit(kind, &col(&[1.0, 2.0, 3.0, 4.0, 5.0]), &y, &Hyper::defaults(kind)),
            Err(LearnError::SingleClass)
        );
    }

    #[test]
    fn metrics() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]), 1.0);
        assert_eq!(rmse(&[3.0, 3.0], &[3.0, 3.0]), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[0.0, 2.0]), 2f64.sqrt());
        assert_eq!(argmax_lowest([0.5, 0.7, 0.7].into_iter()), 1);
    }

    #[test]
    fn gain_sign_convention() {
        let acc = |v| MetricValue {
            kind: MetricKind::Accuracy,
            value: v,
        };
        let err = |v| MetricValue {
            kind: MetricKind::Rmse,
            value: v,
        };
        assert!((relative_gain(acc(0.8543), acc(0.8614)).unwrap() - 0.008311).abs() < 1e-6);
        assert!((relative_gain(err(3.360e7), err(1.798e7)).unwrap() - 0.46488).abs() < 1e-5);
        assert_eq!(relative_gain(err(2.0), err(2.0)).unwrap(), 0.0);
        assert!(relative_gain(err(1.0), err(1.5)).unwrap() < 0.0);
        assert_eq!(relative_gain(acc(0.0), acc(0.5)), Err(LearnError::ZeroBaseline));
    }
}
