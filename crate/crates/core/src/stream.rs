//! Events, fingerprints, streams and time windows.
//!
//! A clique stream is a time-ordered sequence of instantaneous events. Each
//! event carries a binary fingerprint over the `N` nodes of the network that
//! marks which nodes took part in it. Every participant of an event is linked
//! to every other one, so a single event is a clique.
//!
//! The interchange format is newline-delimited JSON: a header record
//! `{"N": <int>}` (optionally with `"window": <float>`, the natural window
//! length of the stream) followed by one `{"t": <float>, "nodes": [...]}`
//! record per event.

use std::fmt;
use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_index, Error, Result};

const WORD_BITS: usize = 64;

/// Fixed-length binary vector stored as packed 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryVector {
    len: usize,
    words: Vec<u64>,
}

impl BinaryVector {
    pub fn zeros(len: usize) -> Self {
        BinaryVector {
            len,
            words: vec![0; len.div_ceil(WORD_BITS)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BinaryVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i);
            }
        }
        v
    }

    /// Builds a vector of length `len` with the listed positions set.
    pub fn from_ones(len: usize, ones: &[usize]) -> Result<Self> {
        let mut v = BinaryVector::zeros(len);
        for &i in ones {
            check_index(i, len)?;
            v.set(i);
        }
        Ok(v)
    }

    /// Parses a string of `0`/`1` characters such as `"1011"`.
    pub fn parse_bits(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Validation(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BinaryVector::from_bools(&bits))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit `i`; panics if `i >= len`.
    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub(crate) fn get_unchecked_len(&self, i: usize) -> bool {
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn hamming(&self, other: &BinaryVector) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Positions of the set bits, in increasing order.
    pub fn ones(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            word_index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Removes position `j`, shifting the higher positions down by one.
    pub fn without(&self, j: usize) -> Result<BinaryVector> {
        check_index(j, self.len)?;
        let mut out = BinaryVector::zeros(self.len - 1);
        for i in self.ones() {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => out.set(i),
                std::cmp::Ordering::Greater => out.set(i - 1),
                std::cmp::Ordering::Equal => {}
            }
        }
        Ok(out)
    }

    /// Inserts `bit` at position `j`, shifting positions `>= j` up by one.
    pub fn with_inserted(&self, j: usize, bit: bool) -> Result<BinaryVector> {
        check_index(j, self.len + 1)?;
        let mut out = BinaryVector::zeros(self.len + 1);
        for i in self.ones() {
            out.set(if i < j { i } else { i + 1 });
        }
        if bit {
            out.set(j);
        }
        Ok(out)
    }
}

impl fmt::Display for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryVector({self})")
    }
}

/// Iterator over set-bit positions.
pub struct Ones<'a> {
    words: &'a [u64],
    word_index: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word_index * WORD_BITS + bit);
            }
            self.word_index += 1;
            if self.word_index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_index];
        }
    }
}

/// Participation vector of one event: bit `j` is set when node `j` took part.
/// Always has at least one bit set.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventFingerprint(BinaryVector);

impl EventFingerprint {
    pub fn new(bits: BinaryVector) -> Result<Self> {
        if bits.count_ones() == 0 {
            return Err(Error::Validation("event has no participating node".into()));
        }
        Ok(EventFingerprint(bits))
    }

    pub fn from_nodes(node_count: usize, nodes: &[usize]) -> Result<Self> {
        EventFingerprint::new(BinaryVector::from_ones(node_count, nodes)?)
    }

    pub fn bits(&self) -> &BinaryVector {
        &self.0
    }

    pub fn node_count(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn contains(&self, j: usize) -> bool {
        self.0.get(j)
    }

    pub fn nodes(&self) -> Ones<'_> {
        self.0.ones()
    }

    pub fn size(&self) -> usize {
        self.0.count_ones()
    }
}

impl fmt::Display for EventFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for EventFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EventFingerprint({})", self.0)
    }
}

/// The fingerprint of `fp` with node `j` removed (length `N - 1`).
pub fn exclude_node(fp: &EventFingerprint, j: usize) -> Result<BinaryVector> {
    fp.bits().without(j)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub timestamp: f64,
    pub fingerprint: EventFingerprint,
}

impl Event {
    pub fn new(timestamp: f64, fingerprint: EventFingerprint) -> Result<Self> {
        if !timestamp.is_finite() || timestamp < 0.0 {
            return Err(Error::Validation(format!(
                "timestamp must be finite and non-negative, got {timestamp}"
            )));
        }
        Ok(Event {
            timestamp,
            fingerprint,
        })
    }
}

/// Time-ordered sequence of events over a fixed node set.
#[derive(Clone, Debug, PartialEq)]
pub struct EventStream {
    node_count: usize,
    events: Vec<Event>,
}

#[derive(Serialize, Deserialize)]
struct HeaderRecord {
    #[serde(rename = "N")]
    node_count: usize,
    #[serde(rename = "window", default, skip_serializing_if = "Option::is_none")]
    window_length: Option<f64>,
}

#[derive(Deserialize)]
struct EventRecordIn {
    t: f64,
    nodes: Vec<i64>,
}

#[derive(Serialize)]
struct EventRecordOut<'a> {
    t: f64,
    nodes: &'a [usize],
}

/// Metadata carried by the header record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamHeader {
    pub node_count: usize,
    pub window_length: Option<f64>,
}

impl EventStream {
    /// Validates the events and sorts them by timestamp, keeping input order on ties.
    pub fn new(node_count: usize, mut events: Vec<Event>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Config("node count must be positive".into()));
        }
        for e in &events {
            if e.fingerprint.node_count() != node_count {
                return Err(Error::Validation(format!(
                    "fingerprint length {} does not match node count {node_count}",
                    e.fingerprint.node_count()
                )));
            }
        }
        events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Ok(EventStream { node_count, events })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events with `lo <= t < hi`.
    pub fn time_slice(&self, lo: f64, hi: f64) -> EventStream {
        EventStream {
            node_count: self.node_count,
            events: self
                .events
                .iter()
                .filter(|e| e.timestamp >= lo && e.timestamp < hi)
                .cloned()
                .collect(),
        }
    }

    /// Writes the stream in the JSONL interchange format.
    pub fn write_jsonl<W: Write>(&self, mut out: W, window_length: Option<f64>) -> Result<()> {
        let header = HeaderRecord {
            node_count: self.node_count,
            window_length,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        let mut nodes = Vec::new();
        for e in &self.events {
            nodes.clear();
            nodes.extend(e.fingerprint.nodes());
            serde_json::to_writer(
                &mut out,
                &EventRecordOut {
                    t: e.timestamp,
                    nodes: &nodes,
                },
            )?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self, window_length: Option<f64>) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf, window_length)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Hex SHA-256 of the canonical JSONL encoding (without window hint).
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl(None).as_bytes()))
    }
}

/// Parses the JSONL event format. `node_count` overrides the header when given;
/// a header that disagrees with it is an error.
pub fn parse_stream(text: &str, node_count: Option<usize>) -> Result<EventStream> {
    parse_stream_with_header(text, node_count).map(|(_, s)| s)
}

pub fn parse_stream_with_header(
    text: &str,
    node_count: Option<usize>,
) -> Result<(StreamHeader, EventStream)> {
    let mut header = node_count.map(|n| StreamHeader {
        node_count: n,
        window_length: None,
    });
    let mut seen_record = false;
    let mut events = Vec::new();
    let mut nodes = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(raw).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if value.get("N").is_some() {
            if seen_record {
                return Err(Error::Parse {
                    line,
                    message: "header record after event records".into(),
                });
            }
            let h: HeaderRecord = serde_json::from_value(value).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            match header {
                Some(prev) if prev.node_count != h.node_count => {
                    return Err(Error::Config(format!(
                        "header declares N = {} but {} was requested",
                        h.node_count, prev.node_count
                    )))
                }
                _ => {
                    header = Some(StreamHeader {
                        node_count: h.node_count,
                        window_length: h.window_length,
                    })
                }
            }
            continue;
        }
        seen_record = true;
        let n = header
            .ok_or_else(|| Error::Parse {
                line,
                message: "event record before header and no node count given".into(),
            })?
            .node_count;
        let rec: EventRecordIn = serde_json::from_value(value).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if rec.nodes.is_empty() {
            return Err(Error::Validation(format!("line {line}: empty node list")));
        }
        nodes.clear();
        for &v in &rec.nodes {
            if v < 0 {
                return Err(Error::Parse {
                    line,
                    message: format!("negative node index {v}"),
                });
            }
            check_index(v as usize, n)?;
            nodes.push(v as usize);
        }
        let fp = EventFingerprint::from_nodes(n, &nodes)?;
        if fp.size() != nodes.len() {
            return Err(Error::Validation(format!("line {line}: duplicate node index")));
        }
        let event = Event::new(rec.t, fp).map_err(|e| Error::Validation(format!("line {line}: {e}")))?;
        events.push(event);
    }

    let header = header.ok_or_else(|| Error::Parse {
        line: 0,
        message: "no header record and no node count given".into(),
    })?;
    Ok((header, EventStream::new(header.node_count, events)?))
}

/// A time window: its index and the events that fall in it.
#[derive(Clone, Copy, Debug)]
pub struct Window<'a> {
    pub index: i64,
    pub events: &'a [Event],
}

impl<'a> Window<'a> {
    /// Number of events in the window.
    pub fn n(&self) -> usize {
        self.events.len()
    }
}

/// A stream partitioned into half-open windows `[origin + kL, origin + (k+1)L)`.
/// Windows between the first and the last event are present even when empty.
#[derive(Clone, Debug)]
pub struct WindowedStream {
    stream: EventStream,
    window_length: f64,
    origin: f64,
    spans: Vec<(i64, Range<usize>)>,
}

pub fn window_stream(stream: EventStream, window_length: f64, origin: f64) -> Result<WindowedStream> {
    if !(window_length > 0.0) || !window_length.is_finite() {
        return Err(Error::Config(format!(
            "window length must be positive, got {window_length}"
        )));
    }
    if !origin.is_finite() {
        return Err(Error::Config("window origin must be finite".into()));
    }
    let index_of = |t: f64| ((t - origin) / window_length).floor() as i64;
    let mut spans: Vec<(i64, Range<usize>)> = Vec::new();
    let events = stream.events();
    if let (Some(first), Some(last)) = (events.first(), events.last()) {
        let (lo, hi) = (index_of(first.timestamp), index_of(last.timestamp));
        let mut pos = 0;
        for k in lo..=hi {
            let start = pos;
            while pos < events.len() && index_of(events[pos].timestamp) == k {
                pos += 1;
            }
            spans.push((k, start..pos));
        }
        debug_assert_eq!(pos, events.len());
    }
    Ok(WindowedStream {
        stream,
        window_length,
        origin,
        spans,
    })
}

impl WindowedStream {
    pub fn stream(&self) -> &EventStream {
        &self.stream
    }

    pub fn node_count(&self) -> usize {
        self.stream.node_count()
    }

    pub fn window_length(&self) -> f64 {
        self.window_length
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn window(&self, position: usize) -> Window<'_> {
        let (index, range) = &self.spans[position];
        Window {
            index: *index,
            events: &self.stream.events()[range.clone()],
        }
    }

    pub fn windows(&self) -> impl ExactSizeIterator<Item = Window<'_>> + '_ {
        (0..self.spans.len()).map(move |p| self.window(p))
    }

    pub fn window_indices(&self) -> Vec<i64> {
        self.spans.iter().map(|(k, _)| *k).collect()
    }

    /// Events of the windows at positions `positions`, as a new stream.
    pub fn substream<I: IntoIterator<Item = usize>>(&self, positions: I) -> EventStream {
        let mut events = Vec::new();
        for p in positions {
            events.extend_from_slice(&self.stream.events()[self.spans[p].1.clone()]);
        }
        EventStream::new(self.node_count(), events).expect("events already validated")
    }
}

/// Number of events in `events` in which node `j` participates.
pub fn node_count_in_window(events: &[Event], node_count: usize, j: usize) -> Result<usize> {
    check_index(j, node_count)?;
    Ok(events.iter().filter(|e| e.fingerprint.contains(j)).count())
}

/// Per-window weighted adjacency: entry `(u, v)` counts the events shared by `u` and `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregatedGraph {
    node_count: usize,
    weights: Vec<u32>,
}

impl AggregatedGraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.weights[u * self.node_count + v]
    }

    /// Sum of the weights of the edges incident to `u`.
    pub fn weighted_degree(&self, u: usize) -> u64 {
        let row = &self.weights[u * self.node_count..(u + 1) * self.node_count];
        row.iter().map(|&w| w as u64).sum()
    }

    /// Nonzero edges `(u, v, weight)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        let n = self.node_count;
        (0..n).flat_map(move |u| {
            ((u + 1)..n).filter_map(move |v| {
                let w = self.get(u, v);
                (w > 0).then_some((u, v, w))
            })
        })
    }

    /// CSV triples `u,v,weight` for the nonzero edges, `u < v`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["u", "v", "weight"])?;
        for (u, v, w) in self.edges() {
            wtr.serialize((u, v, w))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Aggregates a window into a weighted graph. Single-participant events add nothing.
pub fn aggregate_window(events: &[Event], node_count: usize) -> AggregatedGraph {
    let mut weights = vec![0u32; node_count * node_count];
    let mut members = Vec::new();
    for e in events {
        members.clear();
        members.extend(e.fingerprint.nodes());
        for (a, &u) in members.iter().enumerate() {
            for &v in &members[a + 1..] {
                weights[u * node_count + v] += 1;
                weights[v * node_count + u] += 1;
            }
        }
    }
    AggregatedGraph {
        node_count,
        weights,
    }
}
