//! Synthetic clique streams with a planted node-level anomaly.
//!
//! Nodes sit on the unit square, drawn from a Gaussian mixture. Each event
//! picks a transmission point from the same mixture, and node `j` at distance
//! `d` joins with probability `exp(-d / sigma_j)`. Empty events are redrawn.
//! During anomaly intervals the visibility of one node is scaled down and,
//! optionally, the number of events is scaled up.

use std::io::Write;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::stream::{Event, EventFingerprint, EventStream};

const MAX_REJECTIONS: usize = 10_000;

const LAYOUT_STREAM: u64 = 0;
const TRANSMIT_STREAM: u64 = 1;
const BERNOULLI_STREAM: u64 = 2;
const MIXING_STREAM: u64 = 3;

fn sub_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Isotropic Gaussian mixture on the plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    means: Vec<[f64; 2]>,
    sd: f64,
    weights: Vec<f64>,
}

impl MixtureModel {
    pub fn new(means: Vec<[f64; 2]>, sd: f64, weights: Vec<f64>) -> Result<Self> {
        if means.is_empty() || means.len() != weights.len() {
            return Err(Error::Config("mixture needs one weight per component and K >= 1".into()));
        }
        if !(sd >= 0.0) || !sd.is_finite() {
            return Err(Error::Config(format!("component sd must be non-negative, got {sd}")));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Config("mixture weights must be non-negative and sum to 1".into()));
        }
        Ok(MixtureModel { means, sd, weights })
    }

    /// `k` components with means uniform on the unit square and equal weights.
    pub fn random<R: Rng>(k: usize, sd: f64, rng: &mut R) -> Result<Self> {
        let means = (0..k).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        MixtureModel::new(means, sd, vec![1.0 / k as f64; k])
    }

    pub fn components(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[[f64; 2]] {
        &self.means
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// One draw using the given component weights.
    pub fn sample_with<R: Rng>(&self, weights: &[f64], rng: &mut R) -> [f64; 2] {
        let c = if weights.len() == 1 {
            0
        } else {
            WeightedIndex::new(weights).expect("valid weights").sample(rng)
        };
        let zx: f64 = rng.sample(StandardNormal);
        let zy: f64 = rng.sample(StandardNormal);
        [self.means[c][0] + self.sd * zx, self.means[c][1] + self.sd * zy]
    }
}

/// `n` points drawn from the mixture.
pub fn sample_locations(mixture: &MixtureModel, n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = sub_rng(seed, LAYOUT_STREAM);
    (0..n).map(|_| mixture.sample_with(&mixture.weights, &mut rng)).collect()
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `exp(-d(x_j, ell) / sigma_j)` for every node.
pub fn participation_probabilities(locations: &[[f64; 2]], sigmas: &[f64], ell: [f64; 2]) -> Vec<f64> {
    locations
        .iter()
        .zip(sigmas)
        .map(|(&x, &s)| (-distance(x, ell) / s).exp())
        .collect()
}

/// A drawn event together with its transmission point.
#[derive(Clone, Debug)]
pub struct SampledEvent {
    pub fingerprint: EventFingerprint,
    pub ell: [f64; 2],
}

/// Draws one non-empty fingerprint; `transmit` drives the transmission point
/// and `bernoulli` the participation draws.
pub fn sample_event<R: Rng, S: Rng>(
    locations: &[[f64; 2]],
    sigmas: &[f64],
    mixture: &MixtureModel,
    weights: &[f64],
    transmit: &mut R,
    bernoulli: &mut S,
) -> Result<SampledEvent> {
    if let Some(s) = sigmas.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::Config(format!("visibility must be positive, got {s}")));
    }
    let n = locations.len();
    let mut bits = vec![false; n];
    for _ in 0..MAX_REJECTIONS {
        let ell = mixture.sample_with(weights, transmit);
        let mut any = false;
        for (j, (&x, &s)) in locations.iter().zip(sigmas).enumerate() {
            let p = (-distance(x, ell) / s).exp();
            bits[j] = bernoulli.random::<f64>() < p;
            any |= bits[j];
        }
        if any {
            let fingerprint = EventFingerprint::new(crate::stream::BinaryVector::from_bools(&bits))?;
            return Ok(SampledEvent { fingerprint, ell });
        }
    }
    Err(Error::Degenerate(format!(
        "no participant after {MAX_REJECTIONS} transmission draws; visibilities are too small"
    )))
}

/// Node visibilities: one value for every node, or one per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Visibility {
    Constant(f64),
    PerNode(Vec<f64>),
}

/// Planted anomaly: inclusive 0-based window intervals with their multipliers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalySpec {
    pub node: usize,
    pub intervals: Vec<[usize; 2]>,
    /// Factor applied to the node's visibility, in (0, 1].
    pub visibility_multipliers: Vec<f64>,
    /// Factor applied to the number of events, >= 1.
    pub count_multipliers: Vec<f64>,
}

impl AnomalySpec {
    /// Interval containing window `t`, if any.
    pub fn interval_of(&self, t: usize) -> Option<usize> {
        self.intervals.iter().position(|&[a, b]| a <= t && t <= b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub nodes: usize,
    pub components: usize,
    pub timestamps: usize,
    pub train_windows: usize,
    pub events_per_timestamp: usize,
    pub sigma_g: f64,
    pub sigma_x: Visibility,
    pub dirichlet_mixing: bool,
    /// Seed of the node layout and mixture means.
    pub layout_seed: u64,
    /// Seed of the event draws.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anomaly: Option<AnomalySpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    E1,
    E2,
    E3,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::E1 => "E1",
            Preset::E2 => "E2",
            Preset::E3 => "E3",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "E1" => Ok(Preset::E1),
            "E2" => Ok(Preset::E2),
            "E3" => Ok(Preset::E3),
            _ => Err(Error::Config(format!("unknown preset {s:?}; expected E1, E2 or E3"))),
        }
    }
}

pub const PRESET_LAYOUT_SEED: u64 = 20_190_601;
pub const PRESET_INTERVALS: [[usize; 2]; 4] = [[750, 800], [850, 900], [950, 1000], [1050, 1099]];
pub const PRESET_VISIBILITY_MULTIPLIERS: [f64; 4] = [0.8, 0.6, 0.45, 0.3];
pub const PRESET_COUNT_MULTIPLIERS: [f64; 4] = [1.3, 1.6, 2.0, 2.5];

/// The experiment presets: 100 nodes, 10 components, 1100 timestamps of which
/// 500 train, 100 events per timestamp. The anomalous node is the one with the
/// largest expected participation under the shared layout.
pub fn preset(which: Preset, seed: u64) -> SimulationConfig {
    let mut config = SimulationConfig {
        nodes: 100,
        components: 10,
        timestamps: 1100,
        train_windows: 500,
        events_per_timestamp: 100,
        sigma_g: 0.05,
        sigma_x: Visibility::Constant(0.08),
        dirichlet_mixing: which != Preset::E1,
        layout_seed: PRESET_LAYOUT_SEED,
        seed,
        anomaly: None,
    };
    let node = busiest_node(&config).expect("preset is valid");
    config.anomaly = Some(AnomalySpec {
        node,
        intervals: PRESET_INTERVALS.to_vec(),
        visibility_multipliers: PRESET_VISIBILITY_MULTIPLIERS.to_vec(),
        count_multipliers: if which == Preset::E3 {
            PRESET_COUNT_MULTIPLIERS.to_vec()
        } else {
            vec![1.0; 4]
        },
    });
    config
}

/// Node with the largest participation probability averaged over 20 000
/// transmission points drawn from the layout's mixture.
pub fn busiest_node(config: &SimulationConfig) -> Result<usize> {
    let (mixture, locations) = layout(config)?;
    let sigmas = config.sigmas()?;
    let mut rng = sub_rng(config.layout_seed, TRANSMIT_STREAM);
    let mut total = vec![0.0; config.nodes];
    for _ in 0..20_000 {
        let ell = mixture.sample_with(mixture.weights(), &mut rng);
        for (t, p) in total.iter_mut().zip(participation_probabilities(&locations, &sigmas, ell)) {
            *t += p;
        }
    }
    Ok(total
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best })
        .0)
}

/// Mixture and node locations, both fixed by `layout_seed`.
pub fn layout(config: &SimulationConfig) -> Result<(MixtureModel, Vec<[f64; 2]>)> {
    if config.components == 0 {
        return Err(Error::Config("need at least one mixture component".into()));
    }
    let mut rng = sub_rng(config.layout_seed, MIXING_STREAM);
    let mixture = MixtureModel::random(config.components, config.sigma_g, &mut rng)?;
    let locations = sample_locations(&mixture, config.nodes, config.layout_seed);
    Ok((mixture, locations))
}

impl SimulationConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: SimulationConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn sigmas(&self) -> Result<Vec<f64>> {
        let s = match &self.sigma_x {
            Visibility::Constant(s) => vec![*s; self.nodes],
            Visibility::PerNode(v) => v.clone(),
        };
        if s.len() != self.nodes {
            return Err(Error::Config(format!("{} visibilities for {} nodes", s.len(), self.nodes)));
        }
        if let Some(bad) = s.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::Config(format!("visibility must be positive, got {bad}")));
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 || self.components == 0 || self.events_per_timestamp == 0 {
            return Err(Error::Config("nodes, components and events_per_timestamp must be positive".into()));
        }
        if self.timestamps <= self.train_windows {
            return Err(Error::Config(format!(
                "timestamps ({}) must exceed train_windows ({})",
                self.timestamps, self.train_windows
            )));
        }
        if !(self.sigma_g >= 0.0) || !self.sigma_g.is_finite() {
            return Err(Error::Config("sigma_g must be non-negative".into()));
        }
        self.sigmas()?;
        if let Some(a) = &self.anomaly {
            check_index(a.node, self.nodes)?;
            let k = a.intervals.len();
            if a.visibility_multipliers.len() != k || a.count_multipliers.len() != k {
                return Err(Error::Config("one visibility and one count multiplier per interval".into()));
            }
            let mut sorted = a.intervals.clone();
            sorted.sort();
            for (i, &[lo, hi]) in sorted.iter().enumerate() {
                if lo > hi || lo < self.train_windows || hi >= self.timestamps {
                    return Err(Error::Config(format!(
                        "anomaly interval [{lo}, {hi}] must lie within test windows {}..{}",
                        self.train_windows,
                        self.timestamps - 1
                    )));
                }
                if i > 0 && sorted[i - 1][1] >= lo {
                    return Err(Error::Config("anomaly intervals overlap".into()));
                }
            }
            if a.visibility_multipliers.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
                return Err(Error::Config("visibility multipliers must lie in (0, 1]".into()));
            }
            if a.count_multipliers.iter().any(|&v| !(v >= 1.0) || !v.is_finite()) {
                return Err(Error::Config("count multipliers must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Number of events at timestamp `t`.
    pub fn events_at(&self, t: usize) -> usize {
        let mult = self
            .anomaly
            .as_ref()
            .and_then(|a| a.interval_of(t).map(|i| a.count_multipliers[i]))
            .unwrap_or(1.0);
        (self.events_per_timestamp as f64 * mult).round() as usize
    }

    /// Visibility multiplier of the anomalous node at timestamp `t`.
    pub fn visibility_multiplier_at(&self, t: usize) -> f64 {
        self.anomaly
            .as_ref()
            .and_then(|a| a.interval_of(t).map(|i| a.visibility_multipliers[i]))
            .unwrap_or(1.0)
    }
}

/// Ground-truth label of one (node, window) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub node: usize,
    pub window: i64,
    pub label: u8,
}

/// Simulated stream with labels, layout and per-event oracle information.
#[derive(Clone, Debug)]
pub struct LabeledStream {
    pub config: SimulationConfig,
    pub mixture: MixtureModel,
    pub locations: Vec<[f64; 2]>,
    pub stream: EventStream,
    /// Transmission point of each event.
    pub ells: Vec<[f64; 2]>,
    /// Timestamp (window) each event was generated at.
    pub event_window: Vec<usize>,
}

impl LabeledStream {
    /// Labels for every node over the test windows.
    pub fn labels(&self) -> Vec<Label> {
        let c = &self.config;
        let mut out = Vec::with_capacity(c.nodes * (c.timestamps - c.train_windows));
        for j in 0..c.nodes {
            for t in c.train_windows..c.timestamps {
                let anomalous = c.anomaly.as_ref().is_some_and(|a| a.node == j && a.interval_of(t).is_some());
                out.push(Label {
                    node: j,
                    window: t as i64,
                    label: anomalous as u8,
                });
            }
        }
        out
    }

    fn sigmas_at(&self, t: usize) -> Vec<f64> {
        let mut s = self.config.sigmas().expect("validated");
        if let Some(a) = &self.config.anomaly {
            s[a.node] *= self.config.visibility_multiplier_at(t);
        }
        s
    }

    /// True participation probabilities of every node in event `i`, given its
    /// transmission point and that the event is non-empty.
    pub fn eta(&self, i: usize) -> Vec<f64> {
        let p = participation_probabilities(&self.locations, &self.sigmas_at(self.event_window[i]), self.ells[i]);
        let accept = 1.0 - p.iter().map(|q| 1.0 - q).product::<f64>();
        p.into_iter().map(|q| (q / accept).min(1.0)).collect()
    }

    /// Probability that an event drawn at `ell` has at least one participant.
    pub fn acceptance(&self, i: usize) -> f64 {
        let p = participation_probabilities(&self.locations, &self.sigmas_at(self.event_window[i]), self.ells[i]);
        1.0 - p.iter().map(|q| 1.0 - q).product::<f64>()
    }

    /// Training part: windows before `train_windows`.
    pub fn train(&self) -> EventStream {
        self.stream.time_slice(0.0, self.config.train_windows as f64)
    }

    /// Test part: windows from `train_windows` on.
    pub fn test(&self) -> EventStream {
        self.stream
            .time_slice(self.config.train_windows as f64, self.config.timestamps as f64)
    }

    pub fn write_labels<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for l in self.labels() {
            w.serialize(l)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_locations<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node", "x", "y"])?;
        for (j, p) in self.locations.iter().enumerate() {
            w.write_record([j.to_string(), p[0].to_string(), p[1].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One line per event: `{"event":i,"ell":[x,y],"accept":a}`. The
    /// probability of node `j` is `exp(-d(x_j, ell) / sigma_j) / accept`.
    pub fn write_oracle<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.ells.len() {
            let rec = serde_json::json!({"event": i, "ell": self.ells[i], "accept": self.acceptance(i)});
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Writes every artifact into `dir`; returns the paths written.
    pub fn write_all(&self, dir: &Path, oracle: bool) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut file = |name: &str| -> Result<std::io::BufWriter<std::fs::File>> {
            let path = dir.join(name);
            written.push(path.clone());
            Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
        };
        self.stream.write_jsonl(file("stream.jsonl")?, Some(1.0))?;
        self.train().write_jsonl(file("train.jsonl")?, Some(1.0))?;
        self.test().write_jsonl(file("test.jsonl")?, Some(1.0))?;
        self.write_labels(file("labels.csv")?)?;
        self.write_locations(file("locations.csv")?)?;
        if oracle {
            self.write_oracle(file("oracle.jsonl")?)?;
        }
        file("config.toml")?.write_all(self.config.to_toml().as_bytes())?;
        Ok(written)
    }
}

/// Runs the generator.
pub fn generate(config: &SimulationConfig) -> Result<LabeledStream> {
    config.validate()?;
    let (mixture, locations) = layout(config)?;
    let base = config.sigmas()?;
    let mut transmit = sub_rng(config.seed, TRANSMIT_STREAM);
    let mut bernoulli = sub_rng(config.seed, BERNOULLI_STREAM);
    let mut mixing = sub_rng(config.seed, MIXING_STREAM);
    let total: usize = (0..config.timestamps).map(|t| config.events_at(t)).sum();
    let mut events = Vec::with_capacity(total);
    let mut ells = Vec::with_capacity(total);
    let mut event_window = Vec::with_capacity(total);
    let mut sigmas = base.clone();
    let mut weights = mixture.weights().to_vec();

    for t in 0..config.timestamps {
        if config.dirichlet_mixing {
            // Dirichlet(1, ..., 1) as normalised unit exponentials
            let draws: Vec<f64> = (0..mixture.components()).map(|_| mixing.sample(Exp1)).collect();
            let sum: f64 = draws.iter().sum();
            weights = draws.into_iter().map(|g| g / sum).collect();
        }
        if let Some(a) = &config.anomaly {
            sigmas[a.node] = base[a.node] * config.visibility_multiplier_at(t);
        }
        let n_t = config.events_at(t);
        for i in 0..n_t {
            let e = sample_event(&locations, &sigmas, &mixture, &weights, &mut transmit, &mut bernoulli)?;
            let ts = t as f64 + (i + 1) as f64 / (n_t + 1) as f64;
            events.push(Event::new(ts, e.fingerprint)?);
            ells.push(e.ell);
            event_window.push(t);
        }
    }
    Ok(LabeledStream {
        config: config.clone(),
        mixture,
        locations,
        stream: EventStream::new(config.nodes, events)?,
        ells,
        event_window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::window_stream;

    fn small(t: usize) -> SimulationConfig {
        SimulationConfig {
            nodes: 12,
            components: 3,
            timestamps: t,
            train_windows: t / 2,
            events_per_timestamp: 100,
            sigma_g: 0.05,
            sigma_x: Visibility::Constant(0.08),
            dirichlet_mixing: false,
            layout_seed: 1,
            seed: 2,
            anomaly: None,
        }
    }

    #[test]
    fn degenerate_mixture_collapses_to_mean() {
        let m = MixtureModel::new(vec![[0.3, 0.7]], 0.0, vec![1.0]).unwrap();
        for p in sample_locations(&m, 50, 9) {
            assert_eq!(p, [0.3, 0.7]);
        }
    }

    #[test]
    fn zero_weight_component_is_never_drawn() {
        let m = MixtureModel::new(vec![[0.0, 0.0], [100.0, 100.0]], 1.0, vec![1.0, 0.0]).unwrap();
        let pts = sample_locations(&m, 10_000, 4);
        assert!(pts.iter().all(|p| p[0] < 50.0 && p[1] < 50.0));
    }

    #[test]
    fn uniform_weights_give_uniform_components() {
        let means: Vec<[f64; 2]> = (0..10).map(|c| [c as f64 * 100.0, 0.0]).collect();
        let m = MixtureModel::new(means, 1.0, vec![0.1; 10]).unwrap();
        let mut counts = [0usize; 10];
        for p in sample_locations(&m, 100_000, 5) {
            counts[((p[0] + 50.0) / 100.0).floor() as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e5 - 0.1).abs() < 0.01, "{c}");
        }
    }

    #[test]
    fn participation_probability_examples() {
        let p = participation_probabilities(&[[0.0, 0.0], [2f64.ln(), 0.0], [1.0, 0.0]], &[1.0, 1.0, 1e-9], [0.0, 0.0]);
        assert_eq!(p[0], 1.0);
        assert!((p[1] - 0.5).abs() < 1e-15);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn bernoulli_frequency_matches_probability() {
        // one node at distance ln 2 with sigma 1, one node at the transmission point
        let m = MixtureModel::new(vec![[0.0, 0.0]], 0.0, vec![1.0]).unwrap();
        let locs = [[2f64.ln(), 0.0], [0.0, 0.0]];
        let (mut a, mut b) = (sub_rng(1, 1), sub_rng(1, 2));
        let mut hits = 0;
        for _ in 0..100_000 {
            let e = sample_event(&locs, &[1.0, 1.0], &m, &[1.0], &mut a, &mut b).unwrap();
            assert!(e.fingerprint.contains(1));
            hits += e.fingerprint.contains(0) as usize;
        }
        assert!((hits as f64 / 1e5 - 0.5).abs() < 0.005, "{hits}");
    }

    #[test]
    fn invisible_nodes_are_degenerate() {
        let m = MixtureModel::new(vec![[0.0, 0.0]], 0.0, vec![1.0]).unwrap();
        let (mut a, mut b) = (sub_rng(1, 1), sub_rng(1, 2));
        let err = sample_event(&[[10.0, 0.0]], &[1e-3], &m, &[1.0], &mut a, &mut b).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn event_count_and_ordering() {
        let s = generate(&small(10)).unwrap();
        assert_eq!(s.stream.len(), 1000);
        let w = window_stream(s.stream.clone(), 1.0, 0.0).unwrap();
        assert_eq!(w.len(), 10);
        assert!(w.windows().all(|w| w.n() == 100));
        assert_eq!(s.train().len() + s.test().len(), 1000);
    }

    #[test]
    fn same_seed_same_stream() {
        let a = generate(&small(6)).unwrap();
        let b = generate(&small(6)).unwrap();
        assert_eq!(a.stream.to_jsonl(None), b.stream.to_jsonl(None));
        let mut c = small(6);
        c.seed = 3;
        assert_ne!(a.stream.digest(), generate(&c).unwrap().stream.digest());
    }

    #[test]
    fn identity_multipliers_change_nothing() {
        let plain = generate(&small(20)).unwrap();
        let mut cfg = small(20);
        cfg.anomaly = Some(AnomalySpec {
            node: 3,
            intervals: vec![[12, 15]],
            visibility_multipliers: vec![1.0],
            count_multipliers: vec![1.0],
        });
        assert_eq!(plain.stream.digest(), generate(&cfg).unwrap().stream.digest());
    }

    #[test]
    fn labels_mark_only_the_anomaly() {
        let mut cfg = small(20);
        cfg.anomaly = Some(AnomalySpec {
            node: 3,
            intervals: vec![[12, 13], [17, 19]],
            visibility_multipliers: vec![0.5, 0.5],
            count_multipliers: vec![1.0, 2.0],
        });
        let s = generate(&cfg).unwrap();
        let labels = s.labels();
        assert_eq!(labels.len(), 12 * 10);
        let pos: Vec<(usize, i64)> = labels.iter().filter(|l| l.label == 1).map(|l| (l.node, l.window)).collect();
        assert_eq!(pos, vec![(3, 12), (3, 13), (3, 17), (3, 18), (3, 19)]);
        assert_eq!(s.stream.len(), 100 * 17 + 200 * 3);
    }

    #[test]
    fn config_validation() {
        let mut c = small(10);
        c.train_windows = 10;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = small(10);
        c.anomaly = Some(AnomalySpec {
            node: 0,
            intervals: vec![[2, 3]],
            visibility_multipliers: vec![0.5],
            count_multipliers: vec![1.0],
        });
        assert!(c.validate().is_err());
        let mut c = small(10);
        c.sigma_x = Visibility::PerNode(vec![0.1; 3]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = preset(Preset::E3, 11);
        let text = c.to_toml();
        assert_eq!(SimulationConfig::from_toml(&text).unwrap(), c);
        assert!(SimulationConfig::from_toml("nodes = 3").is_err());
    }

    #[test]
    fn presets() {
        let e1 = preset(Preset::E1, 7);
        assert_eq!((e1.nodes, e1.components, e1.timestamps, e1.train_windows), (100, 10, 1100, 500));
        assert_eq!(e1.events_per_timestamp, 100);
        let a = e1.anomaly.as_ref().unwrap();
        assert_eq!(a.intervals.len(), 4);
        assert_eq!(a.count_multipliers, vec![1.0; 4]);
        let e2 = preset(Preset::E2, 7);
        assert_eq!(SimulationConfig { dirichlet_mixing: false, ..e2.clone() }, e1);
        let e3 = preset(Preset::E3, 7);
        assert_eq!(e3.anomaly.as_ref().unwrap().count_multipliers, PRESET_COUNT_MULTIPLIERS.to_vec());
        assert_eq!(e3.anomaly.as_ref().unwrap().visibility_multipliers, PRESET_VISIBILITY_MULTIPLIERS.to_vec());
        assert!("E4".parse::<Preset>().is_err());
    }

    #[test]
    fn oracle_matches_conditional_frequency() {
        // repeat a fixed transmission point: node frequencies match p_j / accept
        let m = MixtureModel::new(vec![[0.5, 0.5]], 0.0, vec![1.0]).unwrap();
        let locs = [[0.5, 0.6], [0.45, 0.5], [0.8, 0.8]];
        let sig = [0.08, 0.08, 0.08];
        let p = participation_probabilities(&locs, &sig, [0.5, 0.5]);
        let accept = 1.0 - p.iter().map(|q| 1.0 - q).product::<f64>();
        let (mut a, mut b) = (sub_rng(3, 1), sub_rng(3, 2));
        let mut hits = [0usize; 3];
        let reps = 50_000;
        for _ in 0..reps {
            let e = sample_event(&locs, &sig, &m, &[1.0], &mut a, &mut b).unwrap();
            for (j, h) in hits.iter_mut().enumerate() {
                *h += e.fingerprint.contains(j) as usize;
            }
        }
        for j in 0..3 {
            let eta = p[j] / accept;
            let se = (eta * (1.0 - eta) / reps as f64).sqrt();
            assert!((hits[j] as f64 / reps as f64 - eta).abs() < 4.0 * se + 1e-4, "node {j}");
        }
    }

    #[test]
    fn lower_visibility_means_fewer_participations() {
        let mut cfg = small(4);
        cfg.nodes = 30;
        let s = generate(&cfg).unwrap();
        let base = cfg.sigmas().unwrap();
        for i in (0..s.ells.len()).step_by(37) {
            let mut halved = base.clone();
            halved[5] *= 0.5;
            let p = participation_probabilities(&s.locations, &base, s.ells[i]);
            let q = participation_probabilities(&s.locations, &halved, s.ells[i]);
            assert!(q[5] <= p[5]);
            assert!(q.iter().sum::<f64>() <= p.iter().sum::<f64>());
        }
        // paired: same seed, halved visibility of node 5 throughout the test half
        let mut low = cfg.clone();
        low.anomaly = Some(AnomalySpec {
            node: 5,
            intervals: vec![[2, 3]],
            visibility_multipliers: vec![0.5],
            count_multipliers: vec![1.0],
        });
        let a = generate(&cfg).unwrap();
        let b = generate(&low).unwrap();
        let expected = |ls: &LabeledStream| -> f64 { (200..400).map(|i| ls.eta(i)[5]).sum() };
        assert!(expected(&b) < expected(&a));
    }

    #[test]
    fn eta_is_a_probability() {
        let s = generate(&small(3)).unwrap();
        for i in 0..s.ells.len() {
            let eta = s.eta(i);
            assert!(eta.iter().all(|&q| (0.0..=1.0).contains(&q)));
            assert!(eta.iter().sum::<f64>() >= 1.0 - 1e-12);
        }
    }
}
