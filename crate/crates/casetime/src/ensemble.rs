//! Two ensembles over the regression tree: a bagged forest with
//! per-split feature subsampling, and an adaptive boosting chain for
//! regression whose rounds reweight samples by relative error and
//! whose prediction is a weighted median of member outputs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tree::{fit_tree, RegressionTree, TreeParams};

/// Log weight recorded when a boosting round reproduces every target
/// exactly; stands in for the infinite confidence a zero-error round
/// would earn. Numerically ln(1e10).
pub const PERFECT_FIT_LOG_WEIGHT: f64 = 23.025850929940457;

/// Log weight recorded when the very first boosting round is already
/// too weak to certify. Keeping one near-zero-confidence member makes
/// the ensemble total rather than empty.
pub const DEGENERATE_ROUND_LOG_WEIGHT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Resample rows with replacement per tree.
    pub bootstrap: bool,
    /// Features drawn per split; `None` scans all of them.
    pub max_features: Option<usize>,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            bootstrap: true,
            max_features: None,
            tree: TreeParams::default(),
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.max_features == Some(0) {
            return Err(Error::InvalidConfig(
                "max_features must be at least 1 (omit it to scan all features)".into(),
            ));
        }
        self.tree.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossShape {
    Linear,
    Square,
    Exponential,
}

impl LossShape {
    /// Maps a relative residual in [0, 1] to a loss in [0, 1].
    fn apply(self, r: f64) -> f64 {
        match self {
            LossShape::Linear => r,
            LossShape::Square => r * r,
            LossShape::Exponential => 1.0 - (-r).exp(),
        }
    }
}

impl FromStr for LossShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(LossShape::Linear),
            "square" => Ok(LossShape::Square),
            "exponential" => Ok(LossShape::Exponential),
            other => Err(Error::InvalidConfig(format!(
                "unknown loss shape {other:?}; expected linear, square, or exponential"
            ))),
        }
    }
}

impl std::fmt::Display for LossShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossShape::Linear => "linear",
            LossShape::Square => "square",
            LossShape::Exponential => "exponential",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    /// Upper bound on rounds; boosting may stop earlier.
    pub n_estimators: usize,
    pub loss: LossShape,
    pub tree: TreeParams,
}

impl Default for BoostParams {
    /// Boosting rounds default to restrained trees (depth 5, splits
    /// only above 25 samples). Full-depth trees leave the reweighting
    /// nothing but noise to chase, which drags the ensemble below even
    /// a single tree; a capped learner is the customary choice.
    fn default() -> Self {
        BoostParams {
            n_estimators: 50,
            loss: LossShape::Linear,
            tree: TreeParams {
                min_samples_split: 25,
                max_depth: Some(5),
                min_samples_leaf: 1,
            },
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidConfig(
                "n_estimators must be at least 1".into(),
            ));
        }
        self.tree.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<RegressionTree>,
    feature_count: usize,
}

impl Forest {
    pub fn from_members(trees: Vec<RegressionTree>) -> Result<Self> {
        let width = match trees.first() {
            None => return Err(Error::DegenerateEnsemble),
            Some(t) => t.feature_count(),
        };
        for t in &trees {
            if t.feature_count() != width {
                return Err(Error::WidthMismatch {
                    expected: width,
                    got: t.feature_count(),
                });
            }
        }
        Ok(Forest {
            trees,
            feature_count: width,
        })
    }

    pub fn members(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    /// Mean of the member predictions.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let mut sum = 0.0;
        for tree in &self.trees {
            sum += tree.predict(x)?;
        }
        Ok(sum / self.trees.len() as f64)
    }

    /// Mean of the member importance vectors, renormalized to sum to 1.
    /// All zeros when no member ever split.
    pub fn importance(&self) -> Vec<f64> {
        mean_importance(self.feature_count, self.trees.iter().map(|t| (t, 1.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    trees: Vec<RegressionTree>,
    log_weights: Vec<f64>,
    feature_count: usize,
}

impl BoostedEnsemble {
    pub fn from_members(trees: Vec<RegressionTree>, log_weights: Vec<f64>) -> Result<Self> {
        if trees.is_empty() || trees.len() != log_weights.len() {
            return Err(Error::DegenerateEnsemble);
        }
        let width = trees[0].feature_count();
        for t in &trees {
            if t.feature_count() != width {
                return Err(Error::WidthMismatch {
                    expected: width,
                    got: t.feature_count(),
                });
            }
        }
        if log_weights.iter().any(|&lw| !lw.is_finite() || lw <= 0.0) {
            return Err(Error::DegenerateEnsemble);
        }
        Ok(BoostedEnsemble {
            trees,
            log_weights,
            feature_count: width,
        })
    }

    pub fn members(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    /// Weighted median of the member predictions under the members'
    /// log weights.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let mut preds = Vec::with_capacity(self.trees.len());
        for tree in &self.trees {
            preds.push(tree.predict(x)?);
        }
        Ok(weighted_median(&preds, &self.log_weights))
    }

    /// Importance vectors of the members averaged by log-weight share,
    /// renormalized to sum to 1.
    pub fn importance(&self) -> Vec<f64> {
        mean_importance(
            self.feature_count,
            self.trees.iter().zip(self.log_weights.iter().copied()),
        )
    }
}

fn mean_importance<'a>(
    width: usize,
    members: impl Iterator<Item = (&'a RegressionTree, f64)>,
) -> Vec<f64> {
    let mut acc = vec![0.0; width];
    let mut total_share = 0.0;
    for (tree, share) in members {
        let imp = tree.importance();
        for (a, v) in acc.iter_mut().zip(imp) {
            *a += share * v;
        }
        total_share += share;
    }
    if total_share > 0.0 {
        for a in &mut acc {
            *a /= total_share;
        }
    }
    let sum: f64 = acc.iter().sum();
    if sum > 0.0 {
        for a in &mut acc {
            *a /= sum;
        }
    }
    acc
}

/// Smallest value whose cumulative weight reaches half the total.
/// Entries are ranked by value, then by position for exact ties.
///
/// # Panics
///
/// Panics when `values` is empty, the lengths differ, or any weight is
/// not a positive finite number.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> f64 {
    assert!(!values.is_empty(), "weighted median of nothing");
    assert_eq!(values.len(), weights.len(), "values and weights differ in length");
    assert!(
        weights.iter().all(|w| w.is_finite() && *w > 0.0),
        "weights must be positive and finite"
    );
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let total: f64 = weights.iter().sum();
    let half = total / 2.0;
    let mut cum = 0.0;
    for &i in &order {
        cum += weights[i];
        if cum >= half {
            return values[i];
        }
    }
    values[*order.last().unwrap()]
}

/// Bagged forest: per-tree row resampling (when enabled) and per-split
/// feature subsampling, each tree on its own deterministic stream of
/// the seed.
pub fn fit_forest(x: &[Vec<f64>], z: &[f64], params: &ForestParams, seed: u64) -> Result<Forest> {
    params.validate()?;
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let width = x[0].len();
    if let Some(k) = params.max_features {
        if k > width {
            return Err(Error::InvalidConfig(format!(
                "max_features {k} exceeds the {width} available features"
            )));
        }
    }
    let unit = vec![1.0; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let tree = if params.bootstrap {
            let picks: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let xb: Vec<Vec<f64>> = picks.iter().map(|&i| x[i].clone()).collect();
            let zb: Vec<f64> = picks.iter().map(|&i| z[i]).collect();
            match params.max_features {
                Some(k) => fit_tree(&xb, &zb, &unit, &params.tree, Some((&mut rng, k)))?,
                None => fit_tree(&xb, &zb, &unit, &params.tree, None)?,
            }
        } else {
            match params.max_features {
                Some(k) => fit_tree(x, z, &unit, &params.tree, Some((&mut rng, k)))?,
                None => fit_tree(x, z, &unit, &params.tree, None)?,
            }
        };
        trees.push(tree);
    }
    Forest::from_members(trees)
}

/// One boosting round's reweighting: multiplies each sample weight by
/// `beta^(1 - loss)` and renormalizes to sum to 1. Returns the
/// pre-normalization total.
fn reweight(w: &mut [f64], losses: &[f64], beta: f64) -> f64 {
    for (wi, li) in w.iter_mut().zip(losses) {
        *wi *= beta.powf(1.0 - li);
    }
    let total: f64 = w.iter().sum();
    if total > 0.0 && total.is_finite() {
        for wi in w.iter_mut() {
            *wi /= total;
        }
    }
    total
}

fn fit_adaboost_impl(
    x: &[Vec<f64>],
    z: &[f64],
    params: &BoostParams,
    mut weight_trace: Option<&mut Vec<Vec<f64>>>,
) -> Result<BoostedEnsemble> {
    params.validate()?;
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut w = vec![1.0 / n as f64; n];
    let mut trees = Vec::new();
    let mut log_weights = Vec::new();

    for _round in 0..params.n_estimators {
        if let Some(trace) = weight_trace.as_deref_mut() {
            trace.push(w.clone());
        }
        let tree = fit_tree(x, z, &w, &params.tree, None)?;
        let mut residuals = Vec::with_capacity(n);
        let mut max_residual = 0.0f64;
        for (xi, &zi) in x.iter().zip(z) {
            let r = (zi - tree.predict(xi)?).abs();
            max_residual = max_residual.max(r);
            residuals.push(r);
        }
        if max_residual == 0.0 {
            trees.push(tree);
            log_weights.push(PERFECT_FIT_LOG_WEIGHT);
            break;
        }
        let losses: Vec<f64> = residuals
            .iter()
            .map(|&r| params.loss.apply(r / max_residual))
            .collect();
        let avg_loss: f64 = w.iter().zip(&losses).map(|(wi, li)| wi * li).sum();
        if avg_loss == 0.0 {
            // weight mass sits entirely on exactly-fit rows
            trees.push(tree);
            log_weights.push(PERFECT_FIT_LOG_WEIGHT);
            break;
        }
        if avg_loss >= 0.5 {
            if trees.is_empty() {
                trees.push(tree);
                log_weights.push(DEGENERATE_ROUND_LOG_WEIGHT);
            }
            break;
        }
        let beta = avg_loss / (1.0 - avg_loss);
        trees.push(tree);
        log_weights.push(-beta.ln());
        let total = reweight(&mut w, &losses, beta);
        if !(total > 0.0) || !total.is_finite() {
            break;
        }
    }

    BoostedEnsemble::from_members(trees, log_weights)
}

/// Boosting chain for regression: each round fits a weighted tree,
/// scores it by weighted average relative loss, earns a log weight
/// from that score, and shifts sample weight toward the rows it got
/// most wrong. Stops early on a perfect round, a round too weak to
/// certify, or exhausted rounds.
pub fn fit_adaboost_r2(x: &[Vec<f64>], z: &[f64], params: &BoostParams) -> Result<BoostedEnsemble> {
    fit_adaboost_impl(x, z, params, None)
}
