//! Binary regression tree grown by greedy weighted squared-error
//! reduction, in the classic style: thresholds sit at midpoints of
//! consecutive distinct sorted feature values, `x <= threshold` routes
//! left, and ties between equally good splits go to the lowest feature
//! index and then the lowest threshold.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// A node is eligible to split only when it holds at least this
    /// many samples.
    pub min_samples_split: usize,
    /// Depth budget; `None` grows until the other gates stop it.
    /// The root is at depth 0.
    pub max_depth: Option<usize>,
    /// Candidate splits leaving fewer rows than this on either side
    /// are discarded.
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_samples_split: 10,
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::InvalidConfig(format!(
                "min_samples_split must be at least 2, got {}",
                self.min_samples_split
            )));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidConfig(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Weighted SSE of this node minus the summed weighted SSE of
        /// its children; strictly positive by the split gate.
        risk_decrease: f64,
    },
    Leaf {
        /// Weighted mean of the targets routed here.
        value: f64,
        /// Total sample weight routed here.
        weight: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    feature_count: usize,
}

impl RegressionTree {
    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Routes a query down to a leaf. Fails only on a width mismatch.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_count {
            return Err(Error::WidthMismatch {
                expected: self.feature_count,
                got: x.len(),
            });
        }
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { value, .. } => return Ok(*value),
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    id = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Per-feature share of the total risk decrease, normalized to sum
    /// to 1. A tree with no splits has nothing to attribute and returns
    /// the zero vector.
    pub fn importance(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.feature_count];
        for node in &self.nodes {
            if let Node::Internal {
                feature,
                risk_decrease,
                ..
            } = node
            {
                acc[*feature] += risk_decrease;
            }
        }
        let total: f64 = acc.iter().sum();
        if total > 0.0 {
            for v in &mut acc {
                *v /= total;
            }
        }
        acc
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Internal { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Indented text form for inspection. Formatting is not a stable
    /// interface.
    pub fn render(&self, feature_names: &[String]) -> String {
        fn walk(
            out: &mut String,
            nodes: &[Node],
            names: &[String],
            id: usize,
            indent: usize,
        ) {
            for _ in 0..indent {
                out.push_str("  ");
            }
            match &nodes[id] {
                Node::Leaf { value, weight } => {
                    out.push_str(&format!("leaf value={value} n={weight}\n"));
                }
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    risk_decrease,
                } => {
                    let name = names
                        .get(*feature)
                        .map(String::as_str)
                        .unwrap_or("feature");
                    out.push_str(&format!(
                        "{name} <= {threshold} (risk_decrease={risk_decrease})\n"
                    ));
                    walk(out, nodes, names, *left, indent + 1);
                    walk(out, nodes, names, *right, indent + 1);
                }
            }
        }
        let mut out = String::new();
        walk(&mut out, &self.nodes, feature_names, 0, 0);
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    threshold: f64,
    post_sse: f64,
}

/// Scans one feature over the rows in `idx` for the cut minimizing the
/// summed weighted SSE of the two sides. Candidates that would leave a
/// side with fewer than `min_leaf` rows or zero total weight are
/// skipped. Ties keep the lowest threshold.
fn scan_feature(
    x: &[Vec<f64>],
    z: &[f64],
    w: &[f64],
    idx: &[usize],
    feature: usize,
    min_leaf: usize,
) -> Option<Candidate> {
    let n = idx.len();
    if n < 2 || min_leaf * 2 > n {
        return None;
    }
    // a contiguous (value, row) column sorts far faster than chasing
    // row pointers from inside the comparator
    let mut col: Vec<(f64, usize)> = idx.iter().map(|&i| (x[i][feature], i)).collect();
    col.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // prefix sums over the sorted order
    let mut pw = vec![0.0; n + 1];
    let mut pwz = vec![0.0; n + 1];
    let mut pwz2 = vec![0.0; n + 1];
    for (k, &(_, i)) in col.iter().enumerate() {
        pw[k + 1] = pw[k] + w[i];
        pwz[k + 1] = pwz[k] + w[i] * z[i];
        pwz2[k + 1] = pwz2[k] + w[i] * z[i] * z[i];
    }
    let (tw, twz, twz2) = (pw[n], pwz[n], pwz2[n]);

    let mut best: Option<Candidate> = None;
    for k in min_leaf..=(n - min_leaf) {
        let lo = col[k - 1].0;
        let hi = col[k].0;
        if lo == hi {
            continue;
        }
        let lw = pw[k];
        let rw = tw - pw[k];
        if !(lw > 0.0) || !(rw > 0.0) {
            continue;
        }
        let lsse = (pwz2[k] - pwz[k] * pwz[k] / lw).max(0.0);
        let rsse = ((twz2 - pwz2[k]) - (twz - pwz[k]) * (twz - pwz[k]) / rw).max(0.0);
        let post_sse = lsse + rsse;
        let mut threshold = (lo + hi) / 2.0;
        // adjacent floats can round the midpoint onto `hi`, which would
        // route the right block left; fall back to the exact low value
        if threshold >= hi {
            threshold = lo;
        }
        let better = match best {
            None => true,
            Some(b) => post_sse < b.post_sse,
        };
        if better {
            best = Some(Candidate {
                threshold,
                post_sse,
            });
        }
    }
    best
}

/// Best threshold for `feature` over all rows, with the weighted SSE
/// the split leaves behind. `None` when the feature is constant or no
/// cut keeps positive weight on both sides.
pub fn best_split(x: &[Vec<f64>], z: &[f64], w: &[f64], feature: usize) -> Option<(f64, f64)> {
    let idx: Vec<usize> = (0..z.len()).collect();
    scan_feature(x, z, w, &idx, feature, 1).map(|c| (c.threshold, c.post_sse))
}

fn weighted_mean(z: &[f64], w: &[f64], idx: &[usize]) -> (f64, f64) {
    let mut sw = 0.0;
    let mut swz = 0.0;
    for &i in idx {
        sw += w[i];
        swz += w[i] * z[i];
    }
    (sw, swz / sw)
}

fn weighted_sse_about(z: &[f64], w: &[f64], idx: &[usize], mean: f64) -> f64 {
    let mut sse = 0.0;
    for &i in idx {
        let d = z[i] - mean;
        sse += w[i] * d * d;
    }
    sse
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    z: &'a [f64],
    w: &'a [f64],
    params: &'a TreeParams,
    width: usize,
    subsample: Option<(&'a mut ChaCha8Rng, usize)>,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let (weight, mean) = weighted_mean(self.z, self.w, &idx);

        let n = idx.len();
        let depth_ok = self.params.max_depth.map_or(true, |d| depth < d);
        let pure = idx.iter().all(|&i| self.z[i] == self.z[idx[0]]);
        let mut chosen: Option<(usize, Candidate, f64)> = None;

        if n >= self.params.min_samples_split && depth_ok && !pure {
            let node_sse = weighted_sse_about(self.z, self.w, &idx, mean);
            let features: Vec<usize> = match &mut self.subsample {
                Some((rng, k)) if *k < self.width => {
                    let mut picked = rand::seq::index::sample(*rng, self.width, *k).into_vec();
                    picked.sort_unstable();
                    picked
                }
                _ => (0..self.width).collect(),
            };
            let mut best: Option<(usize, Candidate)> = None;
            for feature in features {
                if let Some(c) =
                    scan_feature(self.x, self.z, self.w, &idx, feature, self.params.min_samples_leaf)
                {
                    let better = match &best {
                        None => true,
                        Some((_, b)) => c.post_sse < b.post_sse,
                    };
                    if better {
                        best = Some((feature, c));
                    }
                }
            }
            if let Some((feature, cand)) = best {
                if cand.post_sse < node_sse {
                    chosen = Some((feature, cand, node_sse - cand.post_sse));
                }
            }
        }

        match chosen {
            None => {
                self.nodes.push(Node::Leaf {
                    value: mean,
                    weight,
                });
                self.nodes.len() - 1
            }
            Some((feature, cand, risk_decrease)) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
                    .into_iter()
                    .partition(|&i| self.x[i][feature] <= cand.threshold);
                debug_assert!(!left_idx.is_empty() && !right_idx.is_empty());
                let id = self.nodes.len();
                self.nodes.push(Node::Leaf {
                    value: mean,
                    weight,
                }); // placeholder until both subtrees exist
                let left = self.grow(left_idx, depth + 1);
                let right = self.grow(right_idx, depth + 1);
                self.nodes[id] = Node::Internal {
                    feature,
                    threshold: cand.threshold,
                    left,
                    right,
                    risk_decrease,
                };
                id
            }
        }
    }
}

/// Grows a tree on row-major features `x` with targets `z` and sample
/// weights `w`. When `subsample` is given as `(rng, k)`, every split
/// considers a fresh uniform subset of `k` features instead of all of
/// them.
pub fn fit_tree(
    x: &[Vec<f64>],
    z: &[f64],
    w: &[f64],
    params: &TreeParams,
    subsample: Option<(&mut ChaCha8Rng, usize)>,
) -> Result<RegressionTree> {
    params.validate()?;
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if z.len() != n || w.len() != n {
        return Err(Error::InvalidConfig(format!(
            "got {n} rows but {} targets and {} weights",
            z.len(),
            w.len()
        )));
    }
    let width = x[0].len();
    if width == 0 {
        return Err(Error::InvalidConfig("rows have no features".into()));
    }
    for row in x {
        if row.len() != width {
            return Err(Error::WidthMismatch {
                expected: width,
                got: row.len(),
            });
        }
    }
    if let Some((_, k)) = &subsample {
        if *k == 0 || *k > width {
            return Err(Error::InvalidConfig(format!(
                "feature subsample size must lie in 1..={width}, got {k}"
            )));
        }
    }
    if w.iter().any(|&wi| !wi.is_finite() || wi < 0.0) {
        return Err(Error::DegenerateInput(
            "sample weights must be finite and non-negative".into(),
        ));
    }
    if !w.iter().any(|&wi| wi > 0.0) {
        return Err(Error::DegenerateInput("all sample weights are zero".into()));
    }

    let mut builder = TreeBuilder {
        x,
        z,
        w,
        params,
        width,
        subsample,
        nodes: Vec::new(),
    };
    let root = builder.grow((0..n).collect(), 0);
    debug_assert_eq!(root, 0);
    Ok(RegressionTree {
        nodes: builder.nodes,
        feature_count: width,
    })
}
