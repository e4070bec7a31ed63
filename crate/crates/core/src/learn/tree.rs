use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;

/// Growth controls for a single CART tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried at each split; all when `None`.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        good_fraction: f64,
        samples: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Axis-aligned binary tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

fn gini(good: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = good / n;
    2.0 * p * (1.0 - p)
}

struct Builder<'a, R> {
    data: &'a Dataset,
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<TreeNode>,
    importance: Vec<f64>,
}

struct Best {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn leaf(&mut self, good: usize, n: usize) -> usize {
        self.nodes.push(TreeNode::Leaf {
            good_fraction: good as f64 / n as f64,
            samples: n,
        });
        self.nodes.len() - 1
    }

    fn best_split(&mut self, idx: &[usize], good: usize) -> Option<Best> {
        let d = self.data.n_features();
        let m = self.params.max_features.unwrap_or(d).clamp(1, d);
        let features: Vec<usize> = if m == d {
            (0..d).collect()
        } else {
            sample(self.rng, d, m).into_vec()
        };
        let n = idx.len();
        let parent = n as f64 * gini(good as f64, n as f64);
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<Best> = None;
        let mut col: Vec<(f64, bool)> = Vec::with_capacity(n);
        for f in features {
            col.clear();
            col.extend(idx.iter().map(|&i| (self.data.x[i][f], self.data.is_good(i))));
            col.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_good = 0usize;
            for p in 1..n {
                left_good += usize::from(col[p - 1].1);
                if p < min_leaf || n - p < min_leaf || col[p - 1].0 == col[p].0 {
                    continue;
                }
                let (nl, nr) = (p as f64, (n - p) as f64);
                let child = nl * gini(left_good as f64, nl)
                    + nr * gini((good - left_good) as f64, nr);
                let decrease = parent - child;
                // Zero-gain splits are allowed so that patterns like XOR can still be
                // separated one level down.
                if best.as_ref().is_none_or(|b| decrease > b.decrease + 1e-12) {
                    let (lo, hi) = (col[p - 1].0, col[p].0);
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Best {
                        feature: f,
                        threshold,
                        decrease: decrease.max(0.0),
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let n = idx.len();
        let good = idx.iter().filter(|&&i| self.data.is_good(i)).count();
        let stop = good == 0
            || good == n
            || n < 2 * self.params.min_leaf.max(1)
            || self.params.max_depth.is_some_and(|m| depth >= m);
        if stop {
            return self.leaf(good, n);
        }
        let Some(best) = self.best_split(idx, good) else {
            return self.leaf(good, n);
        };
        self.importance[best.feature] += best.decrease;
        let mut cut = 0;
        for k in 0..n {
            if self.data.x[idx[k]][best.feature] <= best.threshold {
                idx.swap(k, cut);
                cut += 1;
            }
        }
        let me = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            good_fraction: 0.0,
            samples: 0,
        });
        let (l, r) = idx.split_at_mut(cut);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[me] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        me
    }
}

impl Tree {
    /// Fit on the rows listed in `idx` (repeats allowed). Returns the tree
    /// and the per-feature sum of count-weighted Gini decrease.
    pub fn fit<R: Rng>(
        data: &Dataset,
        idx: &[usize],
        params: TreeParams,
        rng: &mut R,
    ) -> (Tree, Vec<f64>) {
        let mut b = Builder {
            data,
            params,
            rng,
            nodes: Vec::new(),
            importance: vec![0.0; data.n_features()],
        };
        let mut idx = idx.to_vec();
        b.grow(&mut idx, 0);
        (Tree { nodes: b.nodes }, b.importance)
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { good_fraction, .. } => return good_fraction,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, at: usize) -> usize {
            match t.nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}
