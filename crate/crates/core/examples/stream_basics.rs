// Parse a JSONL clique stream, cut it into windows and inspect per-window
// counts and the aggregated weighted graph.
//
// cargo run --example stream_basics

use cliquewatch::stream::{aggregate_window, node_count_in_window, parse_stream_with_header, window_stream};

const STREAM: &str = r#"{"N": 5, "window": 10.0}
{"t": 1.5, "nodes": [0, 1, 2]}
{"t": 3.0, "nodes": [1, 2]}
{"t": 9.9, "nodes": [4]}
{"t": 12.0, "nodes": [0, 3, 4]}
{"t": 17.25, "nodes": [1, 3]}
{"t": 31.0, "nodes": [2, 3, 4]}
"#;

pub fn run_example() -> cliquewatch::Result<()> {
    let (header, stream) = parse_stream_with_header(STREAM, None)?;
    println!("N = {}, {} events, digest {}", header.node_count, stream.len(), &stream.digest()[..16]);

    let window = header.window_length.unwrap_or(86_400.0);
    let windowed = window_stream(stream, window, 0.0)?;
    for w in windowed.windows() {
        let counts: Vec<usize> = (0..windowed.node_count())
            .map(|j| node_count_in_window(w.events, windowed.node_count(), j))
            .collect::<cliquewatch::Result<_>>()?;
        println!("window {} has {} events, per-node counts {counts:?}", w.index, w.n());
    }

    // each event is a clique: every pair of its nodes gains one unit of weight
    let first = windowed.window(0);
    let graph = aggregate_window(first.events, windowed.node_count());
    for (u, v, weight) in graph.edges() {
        println!("edge ({u}, {v}) weight {weight}");
    }
    assert_eq!(graph.get(1, 2), 2);
    assert_eq!(graph.weighted_degree(4), 0);
    Ok(())
}

#[allow(dead_code)]
fn main() -> cliquewatch::Result<()> {
    run_example()
}
