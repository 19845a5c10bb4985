//! Per-node conditional participation models.
//!
//! For node `j`, a model estimates the probability that `j` takes part in an
//! event given the participation pattern of every other node, i.e. a
//! regression of the bit `x^(j)` on the reduced fingerprint `x^(-j)`.

mod data;
mod kernel;
mod tree;

use std::borrow::Borrow;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use data::TrainingData;
pub use kernel::{Kernel, KernelSmoother};
pub use tree::{Forest, RegressionTree};

use crate::error::{check_index, Error, Result};
use crate::stream::{exclude_node, BinaryVector, Event, EventFingerprint, EventStream, Window, WindowedStream};
use tree::GrowParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tree,
    Forest,
    Kernel,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Tree => "tree",
            Method::Forest => "forest",
            Method::Kernel => "kernel",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressorConfig {
    pub method: Method,
    pub forest_size: usize,
    /// 0 means unlimited.
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Kernel bandwidth `h`.
    pub bandwidth: f64,
    pub seed: u64,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        RegressorConfig {
            method: Method::Forest,
            forest_size: 100,
            max_depth: 12,
            min_leaf: 5,
            bandwidth: 1.0,
            seed: 0,
        }
    }
}

impl RegressorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.forest_size == 0 {
            return Err(Error::Config("forest_size must be at least 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::Config("min_leaf must be at least 1".into()));
        }
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(Error::Config(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        Ok(())
    }

    fn grow_params(&self, max_features: Option<usize>) -> GrowParams {
        GrowParams {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            max_features,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Predictor {
    Tree(RegressionTree),
    Forest(Forest),
    Kernel(KernelSmoother),
}

/// Fitted estimate of node `j`'s conditional participation probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalModel {
    node: usize,
    node_count: usize,
    train_size: usize,
    predictor: Predictor,
}

impl ConditionalModel {
    pub fn from_predictor(node: usize, node_count: usize, train_size: usize, predictor: Predictor) -> Result<Self> {
        check_index(node, node_count)?;
        Ok(ConditionalModel {
            node,
            node_count,
            train_size,
            predictor,
        })
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn train_size(&self) -> usize {
        self.train_size
    }

    pub fn predictor(&self) -> &Predictor {
        &self.predictor
    }

    pub fn method(&self) -> Method {
        match self.predictor {
            Predictor::Tree(_) => Method::Tree,
            Predictor::Forest(_) => Method::Forest,
            Predictor::Kernel(_) => Method::Kernel,
        }
    }

    /// Participation probability for a reduced fingerprint of length `N - 1`.
    pub fn predict(&self, x_reduced: &BinaryVector) -> Result<f64> {
        if x_reduced.len() + 1 != self.node_count {
            return Err(Error::Index {
                index: x_reduced.len(),
                len: self.node_count - 1,
            });
        }
        let bit = |f: usize| x_reduced.get_unchecked_len(f);
        let p = match &self.predictor {
            Predictor::Tree(t) => t.predict_with(bit),
            Predictor::Forest(f) => f.predict_with(bit),
            Predictor::Kernel(k) => k.predict(x_reduced),
        };
        Ok(p.clamp(0.0, 1.0))
    }

    /// Same as `predict(exclude_node(fp, node))`, without building the reduced vector.
    pub fn predict_event(&self, fp: &EventFingerprint) -> f64 {
        let j = self.node;
        let bits = fp.bits();
        let bit = |f: usize| bits.get_unchecked_len(if f >= j { f + 1 } else { f });
        let p = match &self.predictor {
            Predictor::Tree(t) => t.predict_with(bit),
            Predictor::Forest(f) => f.predict_with(bit),
            Predictor::Kernel(k) => k.predict(&exclude_node(fp, j).expect("node in range")),
        };
        p.clamp(0.0, 1.0)
    }

    /// `predict_event` over a batch of events; forests are walked tree by tree.
    pub fn predict_events(&self, events: &[Event]) -> Vec<f64> {
        self.predict_batch(events)
    }

    fn predict_batch<E: Borrow<Event>>(&self, events: &[E]) -> Vec<f64> {
        let j = self.node;
        match &self.predictor {
            Predictor::Forest(f) => {
                // reduced fingerprints packed into one flat buffer
                let stride = (self.node_count - 1).div_ceil(64).max(1);
                let mut flat = vec![0u64; events.len() * stride];
                for (row, e) in flat.chunks_exact_mut(stride).zip(events) {
                    for b in e.borrow().fingerprint.bits().ones().filter(|&b| b != j) {
                        let b = if b > j { b - 1 } else { b };
                        row[b / 64] |= 1 << (b % 64);
                    }
                }
                f.predict_many(events.len(), |q, b| flat[q * stride + b / 64] >> (b % 64) & 1 == 1)
                    .into_iter()
                    .map(|p| p.clamp(0.0, 1.0))
                    .collect()
            }
            _ => events.iter().map(|e| self.predict_event(&e.borrow().fingerprint)).collect(),
        }
    }
}

/// Fits the conditional model of node `j` on a (normal) training stream.
pub fn fit_node(train: &EventStream, j: usize, config: &RegressorConfig) -> Result<ConditionalModel> {
    config.validate()?;
    check_index(j, train.node_count())?;
    if train.is_empty() {
        return Err(Error::Training("training stream is empty".into()));
    }
    if train.node_count() < 2 {
        return Err(Error::Training("need at least two nodes".into()));
    }
    let data = TrainingData::for_node(train, j);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(j as u64));
    let predictor = fit_predictor(&data, config, &mut rng);
    ConditionalModel::from_predictor(j, train.node_count(), train.len(), predictor)
}

/// Fits a predictor on arbitrary binary rows.
pub fn fit_predictor(data: &TrainingData, config: &RegressorConfig, rng: &mut ChaCha8Rng) -> Predictor {
    match config.method {
        Method::Tree => {
            let samples = (0..data.len() as u32).map(|i| (i, 1)).collect();
            Predictor::Tree(RegressionTree::grow(data, samples, config.grow_params(None), rng))
        }
        Method::Forest => {
            let m = (data.n_features() as f64).sqrt().ceil().max(1.0) as usize;
            Predictor::Forest(Forest::fit(data, config.forest_size, config.grow_params(Some(m)), rng))
        }
        Method::Kernel => Predictor::Kernel(KernelSmoother::fit(data, config.bandwidth, Kernel::Exponential)),
    }
}

/// Sum of the predicted participation probabilities over the events of a window.
pub fn predicted_mean(model: &ConditionalModel, events: &[Event]) -> f64 {
    model.predict_events(events).into_iter().fold(0.0, |a, p| a + p)
}

const MODEL_FORMAT: &str = "cliquewatch-modelset";
const MODEL_VERSION: u32 = 1;

/// One conditional model per node, fitted with a shared configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSet {
    format: String,
    version: u32,
    config: RegressorConfig,
    node_count: usize,
    train_digest: String,
    models: Vec<ConditionalModel>,
}

/// Fits every node independently; node `j` uses seed `config.seed + j`.
pub fn fit_all(train: &EventStream, config: &RegressorConfig) -> Result<ModelSet> {
    config.validate()?;
    let models = (0..train.node_count())
        .into_par_iter()
        .map(|j| fit_node(train, j, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelSet {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        config: config.clone(),
        node_count: train.node_count(),
        train_digest: train.digest(),
        models,
    })
}

impl ModelSet {
    pub fn config(&self) -> &RegressorConfig {
        &self.config
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn train_digest(&self) -> &str {
        &self.train_digest
    }

    pub fn models(&self) -> &[ConditionalModel] {
        &self.models
    }

    pub fn model(&self, j: usize) -> Result<&ConditionalModel> {
        check_index(j, self.node_count)?;
        Ok(&self.models[j])
    }

    /// Predicted means `mu_hat[node][window position]` for the requested nodes.
    pub fn predicted_means(&self, windows: &WindowedStream, nodes: &[usize]) -> Result<Vec<Vec<f64>>> {
        if windows.node_count() != self.node_count {
            return Err(Error::Config(format!(
                "model set covers {} nodes but the stream has {}",
                self.node_count,
                windows.node_count()
            )));
        }
        let list: Vec<Window<'_>> = windows.windows().collect();
        self.predicted_means_in(&list, nodes)
    }

    /// Same as [`ModelSet::predicted_means`] for an arbitrary list of windows.
    pub fn predicted_means_in(&self, windows: &[Window<'_>], nodes: &[usize]) -> Result<Vec<Vec<f64>>> {
        for &j in nodes {
            check_index(j, self.node_count)?;
        }
        for w in windows {
            if let Some(e) = w.events.first() {
                if e.fingerprint.node_count() != self.node_count {
                    return Err(Error::Config(format!(
                        "model set covers {} nodes but the stream has {}",
                        self.node_count,
                        e.fingerprint.node_count()
                    )));
                }
            }
        }
        let all: Vec<&Event> = windows.iter().flat_map(|w| w.events.iter()).collect();
        Ok(nodes
            .par_iter()
            .map(|&j| {
                let p = self.models[j].predict_batch(&all);
                let mut start = 0;
                windows
                    .iter()
                    .map(|w| {
                        let end = start + w.n();
                        let mu = p[start..end].iter().fold(0.0, |a, &x| a + x);
                        start = end;
                        mu
                    })
                    .collect()
            })
            .collect())
    }

    /// CBOR encoding with a format tag and version.
    pub fn save<W: Write>(&self, out: W) -> Result<()> {
        ciborium::into_writer(self, out).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn load<R: Read>(input: R) -> Result<ModelSet> {
        let set: ModelSet = ciborium::from_reader(input).map_err(|e| Error::Model(e.to_string()))?;
        if set.format != MODEL_FORMAT || set.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model format {} v{}",
                set.format, set.version
            )));
        }
        if set.models.len() != set.node_count {
            return Err(Error::Model("model count does not match node count".into()));
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::Event;
    use proptest::prelude::*;
    use rand::Rng;

    fn stream_from(n: usize, rows: &[Vec<bool>]) -> EventStream {
        let events = rows
            .iter()
            .enumerate()
            .map(|(i, bits)| {
                Event::new(i as f64, EventFingerprint::new(BinaryVector::from_bools(bits)).unwrap()).unwrap()
            })
            .collect();
        EventStream::new(n, events).unwrap()
    }

    /// Node 0 copies node 1; node 2 is noise. Events with no participant are skipped.
    fn copy_stream(len: usize, seed: u64) -> EventStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        while rows.len() < len {
            let b1: bool = rng.random();
            let b2: bool = rng.random();
            let bits = vec![b1, b1, b2];
            if bits.iter().any(|&b| b) {
                rows.push(bits);
            }
        }
        stream_from(3, &rows)
    }

    fn tree_config() -> RegressorConfig {
        RegressorConfig {
            method: Method::Tree,
            max_depth: 0,
            min_leaf: 1,
            ..RegressorConfig::default()
        }
    }

    #[test]
    fn copy_node_gives_pure_leaves() {
        let s = copy_stream(500, 1);
        let m = fit_node(&s, 0, &tree_config()).unwrap();
        // reduced fingerprint for node 0 is (x1, x2)
        for (x1, x2) in [(true, false), (true, true)] {
            assert_eq!(m.predict(&BinaryVector::from_bools(&[x1, x2])).unwrap(), 1.0);
        }
        assert_eq!(m.predict(&BinaryVector::from_bools(&[false, true])).unwrap(), 0.0);
    }

    #[test]
    fn independent_coin_is_near_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<bool>> = (0..10_000).map(|_| vec![rng.random(), true, rng.random()]).collect();
        let s = stream_from(3, &rows);
        for config in [tree_config(), RegressorConfig::default()] {
            let m = fit_node(&s, 0, &RegressorConfig { min_leaf: 200, ..config }).unwrap();
            for q in [[true, false], [true, true]] {
                let p = m.predict(&BinaryVector::from_bools(&q)).unwrap();
                assert!((p - 0.5).abs() <= 0.05, "{p}");
            }
        }
    }

    #[test]
    fn predict_checks_length() {
        let s = copy_stream(50, 2);
        let m = fit_node(&s, 1, &tree_config()).unwrap();
        assert!(matches!(m.predict(&BinaryVector::zeros(3)), Err(Error::Index { .. })));
    }

    #[test]
    fn empty_training_stream_is_an_error() {
        let s = EventStream::new(3, vec![]).unwrap();
        assert!(matches!(fit_node(&s, 0, &tree_config()), Err(Error::Training(_))));
        assert!(matches!(fit_all(&s, &tree_config()), Err(Error::Training(_))));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let s = copy_stream(20, 2);
        for bad in [
            RegressorConfig { forest_size: 0, ..Default::default() },
            RegressorConfig { min_leaf: 0, ..Default::default() },
            RegressorConfig { bandwidth: 0.0, ..Default::default() },
        ] {
            assert!(matches!(fit_node(&s, 0, &bad), Err(Error::Config(_))));
        }
    }

    #[test]
    fn predicted_mean_examples() {
        let rows = vec![vec![false, true]; 3];
        let s = stream_from(2, &[vec![true, true], vec![false, true]]);
        let mut cfg = tree_config();
        cfg.min_leaf = 5;
        let m = fit_node(&s, 0, &cfg).unwrap();
        // a single leaf predicting the base rate 0.5
        let window = stream_from(2, &rows);
        assert!((predicted_mean(&m, window.events()) - 1.5).abs() < 1e-12);
        assert_eq!(predicted_mean(&m, &[]), 0.0);

        let s = copy_stream(400, 5);
        let m = fit_node(&s, 0, &tree_config()).unwrap();
        let window = stream_from(3, &[vec![true, true, false], vec![true, true, true]]);
        let observed = window.events().iter().filter(|e| e.fingerprint.contains(0)).count();
        assert_eq!(predicted_mean(&m, window.events()), observed as f64);
    }

    #[test]
    fn fit_all_covers_every_node_and_is_deterministic() {
        let s = copy_stream(300, 3);
        let cfg = RegressorConfig {
            forest_size: 5,
            ..RegressorConfig::default()
        };
        let a = fit_all(&s, &cfg).unwrap();
        let b = fit_all(&s, &cfg).unwrap();
        assert_eq!(a.models().len(), 3);
        assert_eq!(a, b);
        for j in 0..3 {
            for q in 0..4u32 {
                let x = BinaryVector::from_bools(&[q & 1 == 1, q & 2 == 2]);
                let pa = a.model(j).unwrap().predict(&x).unwrap();
                let pb = b.model(j).unwrap().predict(&x).unwrap();
                assert_eq!(pa.to_bits(), pb.to_bits());
            }
        }
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let s = copy_stream(200, 4);
        for method in [Method::Tree, Method::Forest, Method::Kernel] {
            let cfg = RegressorConfig {
                method,
                forest_size: 4,
                bandwidth: 0.7,
                ..RegressorConfig::default()
            };
            let set = fit_all(&s, &cfg).unwrap();
            let mut buf = Vec::new();
            set.save(&mut buf).unwrap();
            let back = ModelSet::load(buf.as_slice()).unwrap();
            assert_eq!(back, set);
            for e in s.events() {
                for j in 0..3 {
                    assert_eq!(
                        back.model(j).unwrap().predict_event(&e.fingerprint).to_bits(),
                        set.model(j).unwrap().predict_event(&e.fingerprint).to_bits()
                    );
                }
            }
        }
        assert!(matches!(ModelSet::load(&b"garbage"[..]), Err(Error::Model(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn predictions_stay_in_unit_interval(seed in 0u64..1000, method_ix in 0usize..3) {
            let method = [Method::Tree, Method::Forest, Method::Kernel][method_ix];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 6;
            let rows: Vec<Vec<bool>> = (0..150)
                .map(|_| {
                    let mut b: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
                    b[rng.random_range(0..n)] = true;
                    b
                })
                .collect();
            let s = stream_from(n, &rows);
            let cfg = RegressorConfig { method, forest_size: 5, min_leaf: 1, seed, ..RegressorConfig::default() };
            let j = (seed % n as u64) as usize;
            let m = fit_node(&s, j, &cfg).unwrap();
            for _ in 0..1000 {
                let q: Vec<bool> = (0..n - 1).map(|_| rng.random()).collect();
                let p = m.predict(&BinaryVector::from_bools(&q)).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
            }
            for e in s.events() {
                let direct = m.predict(&exclude_node(&e.fingerprint, j).unwrap()).unwrap();
                prop_assert_eq!(direct.to_bits(), m.predict_event(&e.fingerprint).to_bits());
            }
        }
    }
}
