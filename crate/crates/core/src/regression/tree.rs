//! Regression trees and random forests on binary features.
//!
//! Every split is a single binary feature: samples without the feature go
//! left, samples with it go right. Splits greedily maximise the reduction of
//! squared error. Sample weights are integer multiplicities, which is how
//! bootstrap resamples are represented.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::TrainingData;

const LEAF: u32 = u32::MAX;
const MIN_GAIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub(crate) struct GrowParams {
    /// 0 means unlimited.
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Size of the random subset of non-constant features inspected per split; `None` inspects all.
    pub max_features: Option<usize>,
}

/// Flat binary tree. Node `i` is a leaf when `feature[i] == LEAF`; otherwise its
/// children are `child[i]` (feature absent) and `child[i] + 1` (feature present).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<(u32, u32)>,
    value: Vec<f64>,
}

impl RegressionTree {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.0 == LEAF).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &RegressionTree, i: usize) -> usize {
            let (f, c) = t.nodes[i];
            if f == LEAF {
                0
            } else {
                1 + go(t, c as usize).max(go(t, c as usize + 1))
            }
        }
        go(self, 0)
    }

    /// Walks the tree; `bit(f)` reports whether feature `f` is set.
    #[inline]
    pub fn predict_with<F: Fn(usize) -> bool>(&self, bit: F) -> f64 {
        let mut i = 0usize;
        loop {
            let (f, c) = self.nodes[i];
            if f == LEAF {
                return self.value[i];
            }
            i = c as usize + bit(f as usize) as usize;
        }
    }

    fn push_pair(&mut self) -> usize {
        self.nodes.push((LEAF, 0));
        self.nodes.push((LEAF, 0));
        self.value.push(0.0);
        self.value.push(0.0);
        self.nodes.len() - 2
    }

    /// Grows a tree on weighted samples `(row, multiplicity)`.
    ///
    /// Per-node feature histograms `(weight, positive weight)` are computed
    /// for the smaller child only; the larger child's is the parent's minus it.
    pub(crate) fn grow<R: Rng>(
        data: &TrainingData,
        mut samples: Vec<(u32, u32)>,
        params: GrowParams,
        rng: &mut R,
    ) -> RegressionTree {
        let n_features = data.n_features();
        let mut tree = RegressionTree {
            nodes: vec![(LEAF, 0)],
            value: vec![0.0],
        };
        let min_leaf = params.min_leaf.max(1) as u64;
        let mut pool: Vec<Vec<[u64; 2]>> = Vec::new();
        let mut candidates: Vec<usize> = Vec::new();

        let (w, s) = samples.iter().fold((0u64, 0u64), |(w, s), &(row, mult)| {
            (w + mult as u64, s + mult as u64 * data.target(row as usize) as u64)
        });
        let splittable = |w: u64, s: u64, depth: usize| {
            !(params.max_depth != 0 && depth >= params.max_depth) && s != 0 && s != w && w >= 2 * min_leaf
        };
        let value = |w: u64, s: u64| if w == 0 { 0.0 } else { s as f64 / w as f64 };
        tree.value[0] = value(w, s);
        if !splittable(w, s, 0) {
            return tree;
        }
        let mut root_hist = vec![[0u64; 2]; n_features];
        accumulate(data, &samples, &mut root_hist);

        struct Pending {
            node: usize,
            start: usize,
            end: usize,
            depth: usize,
            w: u64,
            s: u64,
            hist: Vec<[u64; 2]>,
        }
        let mut stack = vec![Pending {
            node: 0,
            start: 0,
            end: samples.len(),
            depth: 0,
            w,
            s,
            hist: root_hist,
        }];

        while let Some(Pending {
            node,
            start,
            end,
            depth,
            w,
            s,
            mut hist,
        }) = stack.pop()
        {
            let parent = (s * s) as f64 / w as f64;
            let gain_of = |f: usize| -> Option<f64> {
                let [w1, s1] = hist[f];
                let (w0, s0) = (w - w1, s - s1);
                if w1 < min_leaf || w0 < min_leaf {
                    return None;
                }
                Some((s1 * s1) as f64 / w1 as f64 + (s0 * s0) as f64 / w0 as f64 - parent)
            };
            let mut best: Option<(usize, f64)> = None;
            let consider = |f: usize, best: &mut Option<(usize, f64)>| {
                if let Some(g) = gain_of(f) {
                    if g > MIN_GAIN && best.is_none_or(|(_, bg)| g > bg) {
                        *best = Some((f, g));
                    }
                }
            };
            candidates.clear();
            candidates.extend((0..n_features).filter(|&f| hist[f][0] > 0 && hist[f][0] < w));
            match params.max_features {
                Some(m) if m < candidates.len() => {
                    // uniform subset of the non-constant features, as a partial shuffle
                    for k in 0..m {
                        let pick = rng.random_range(k..candidates.len());
                        candidates.swap(k, pick);
                        consider(candidates[k], &mut best);
                    }
                }
                _ => {
                    for &f in &candidates {
                        consider(f, &mut best);
                    }
                }
            }
            let Some((f, _)) = best else {
                pool.push(hist);
                continue;
            };

            let slice = &mut samples[start..end];
            let mut split = 0;
            for i in 0..slice.len() {
                if !data.has(slice[i].0 as usize, f) {
                    slice.swap(i, split);
                    split += 1;
                }
            }
            let left = tree.push_pair();
            tree.nodes[node] = (f as u32, left as u32);
            let [w1, s1] = hist[f];
            let (w0, s0) = (w - w1, s - s1);
            tree.value[left] = value(w0, s0);
            tree.value[left + 1] = value(w1, s1);

            let children = [
                (left, start, start + split, w0, s0),
                (left + 1, start + split, end, w1, s1),
            ];
            let grow_more = [
                splittable(w0, s0, depth + 1),
                splittable(w1, s1, depth + 1),
            ];
            let small = if split <= end - start - split { 0 } else { 1 };
            let large = 1 - small;
            if !grow_more[0] && !grow_more[1] {
                pool.push(hist);
                continue;
            }
            let (sn, sa, sb, sw, ss) = children[small];
            let mut small_hist = pool.pop().unwrap_or_else(|| vec![[0u64; 2]; n_features]);
            small_hist.iter_mut().for_each(|h| *h = [0, 0]);
            accumulate(data, &samples[sa..sb], &mut small_hist);
            if grow_more[large] {
                for (h, sh) in hist.iter_mut().zip(&small_hist) {
                    h[0] -= sh[0];
                    h[1] -= sh[1];
                }
                let (ln, la, lb, lw, ls) = children[large];
                stack.push(Pending {
                    node: ln,
                    start: la,
                    end: lb,
                    depth: depth + 1,
                    w: lw,
                    s: ls,
                    hist,
                });
            } else {
                pool.push(hist);
            }
            if grow_more[small] {
                stack.push(Pending {
                    node: sn,
                    start: sa,
                    end: sb,
                    depth: depth + 1,
                    w: sw,
                    s: ss,
                    hist: small_hist,
                });
            } else {
                pool.push(small_hist);
            }
        }
        tree
    }
}

fn accumulate(data: &TrainingData, samples: &[(u32, u32)], hist: &mut [[u64; 2]]) {
    for &(row, mult) in samples {
        let m = mult as u64;
        let y = data.target(row as usize) as u64;
        for &f in data.row(row as usize) {
            let h = &mut hist[f as usize];
            h[0] += m;
            h[1] += m * y;
        }
    }
}

/// Bagged ensemble of regression trees; prediction is the mean of the trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<RegressionTree>,
}

impl Forest {
    pub(crate) fn fit<R: Rng>(data: &TrainingData, size: usize, params: GrowParams, rng: &mut R) -> Forest {
        let n = data.len();
        let mut trees = Vec::with_capacity(size);
        let mut multiplicity = vec![0u32; n];
        for _ in 0..size {
            multiplicity.iter_mut().for_each(|m| *m = 0);
            for _ in 0..n {
                multiplicity[rng.random_range(0..n)] += 1;
            }
            let samples: Vec<(u32, u32)> = multiplicity
                .iter()
                .enumerate()
                .filter(|(_, &m)| m > 0)
                .map(|(i, &m)| (i as u32, m))
                .collect();
            trees.push(RegressionTree::grow(data, samples, params, rng));
        }
        Forest { trees }
    }

    pub fn from_trees(trees: Vec<RegressionTree>) -> Forest {
        assert!(!trees.is_empty(), "a forest needs at least one tree");
        Forest { trees }
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    #[inline]
    pub fn predict_with<F: Fn(usize) -> bool + Copy>(&self, bit: F) -> f64 {
        let sum = self.trees.iter().fold(0.0, |acc, t| acc + t.predict_with(bit));
        sum / self.trees.len() as f64
    }

    /// `predict_with` for queries `0..n`, tree by tree; bitwise equal to the per-query path.
    pub fn predict_many<F: Fn(usize, usize) -> bool>(&self, n: usize, bit: F) -> Vec<f64> {
        let mut acc = vec![0.0; n];
        const LANES: usize = 8;
        for t in &self.trees {
            // independent walks interleaved to hide load latency
            for (block, out) in acc.chunks_mut(LANES).enumerate() {
                let base = block * LANES;
                let mut at = [0usize; LANES];
                loop {
                    let mut moving = false;
                    for (k, i) in at.iter_mut().enumerate().take(out.len()) {
                        let (f, c) = t.nodes[*i];
                        if f != LEAF {
                            *i = c as usize + bit(base + k, f as usize) as usize;
                            moving = true;
                        }
                    }
                    if !moving {
                        break;
                    }
                }
                for (a, &i) in out.iter_mut().zip(&at) {
                    *a += t.value[i];
                }
            }
        }
        let b = self.trees.len() as f64;
        acc.into_iter().map(|a| a / b).collect()
    }
}
