//! Sampling from CSBM / CBA models, inductive extension, and ingestion of
//! real graphs from CSV files.

use std::collections::BTreeSet;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{param, Error, Result};
use crate::graph::{GenModel, Graph, Structure};
use crate::rng::{stream, Purpose};

/// Samples a graph with `model.n` nodes. All labels are marked known.
pub fn sample_graph(model: &GenModel, seed: u64) -> Result<Graph> {
    model.validate()?;
    if model.num_classes != 2 {
        return param("synthetic generators are binary");
    }
    let d = model.d();
    let mut g = Graph::new(d, 2, Vec::new(), &[], Vec::new(), Vec::new(), Some(model.clone()))?;
    for _ in 0..model.n {
        add_sampled_node(&mut g, model, seed, true);
    }
    Ok(g)
}

/// Appends `count` nodes, each sampled conditionally on the current graph.
/// Existing entries are untouched and new nodes are marked unknown.
pub fn extend_graph(g: &Graph, count: usize, seed: u64) -> Result<Graph> {
    let model = g.gen().ok_or(Error::Unsupported)?.clone();
    if count == 0 {
        return param("extension count must be positive");
    }
    let mut out = g.clone();
    for _ in 0..count {
        add_sampled_node(&mut out, &model, seed, false);
    }
    Ok(out)
}

fn add_sampled_node(g: &mut Graph, model: &GenModel, seed: u64, known: bool) {
    let i = g.n();
    let idx = i as u64;
    let label = usize::from(stream(seed, Purpose::Label, idx).random_bool(0.5));
    let mut frng = stream(seed, Purpose::Feature, idx);
    let row: Vec<f64> = model
        .class_mean(label)
        .iter()
        .map(|m| {
            let z: f64 = frng.sample(StandardNormal);
            m + model.sigma * z
        })
        .collect();

    let mut erng = stream(seed, Purpose::Edge, idx);
    let neighbors: Vec<usize> = match &model.structure {
        Structure::Csbm { p, q } => (0..i)
            .filter(|&j| {
                let prob = if g.label(j) == label { *p } else { *q };
                erng.random::<f64>() < prob
            })
            .collect(),
        Structure::Cba { m, omega } => {
            if i == 0 {
                Vec::new()
            } else {
                // The implicit self-loop of every node enters only as the `1 +`.
                let weights: Vec<f64> = (0..i)
                    .map(|j| (1.0 + g.degree(j) as f64) * omega[label][g.label(j)])
                    .collect();
                match WeightedIndex::new(&weights) {
                    Ok(dist) => {
                        let picked: BTreeSet<usize> =
                            (0..*m).map(|_| dist.sample(&mut erng)).collect();
                        picked.into_iter().collect()
                    }
                    Err(_) => Vec::new(),
                }
            }
        }
    };

    let v = g.push_node(&row, label, known);
    for j in neighbors {
        g.insert_edge(v, j);
    }
}

fn format_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), line, msg: msg.into() }
}

fn read_rows(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(rows)
}

fn parse_cell<T: std::str::FromStr>(path: &Path, line: usize, cell: &str) -> Result<T> {
    cell.parse()
        .map_err(|_| format_err(path, line, format!("non-numeric cell {cell:?}")))
}

/// Loads a real graph from CSV files.
///
/// * edges: `src,dst` rows of 0-based indices (an optional `src,dst` header
///   is skipped); reversed and duplicate rows collapse, self-loops are rejected
/// * features: one dense row per node
/// * labels: one integer per row
/// * mask (optional): one `0`/`1` per row; all labels are known without it
pub fn ingest_real_graph(
    edge_file: &Path,
    feature_file: &Path,
    label_file: &Path,
    mask_file: Option<&Path>,
) -> Result<Graph> {
    let label_rows = read_rows(label_file)?;
    let mut labels = Vec::with_capacity(label_rows.len());
    for (line, cells) in &label_rows {
        if cells.len() != 1 {
            return Err(format_err(label_file, *line, "expected one label per row"));
        }
        labels.push(parse_cell::<usize>(label_file, *line, &cells[0])?);
    }
    let n = labels.len();
    if n == 0 {
        return Err(format_err(label_file, 1, "no labels"));
    }
    let num_classes = labels.iter().max().unwrap() + 1;

    let feature_rows = read_rows(feature_file)?;
    if feature_rows.len() != n {
        let line = feature_rows.last().map(|r| r.0).unwrap_or(1);
        return Err(format_err(
            feature_file,
            line,
            format!("{} feature rows for {} labels", feature_rows.len(), n),
        ));
    }
    let d = feature_rows[0].1.len();
    let mut features = Vec::with_capacity(n * d);
    for (line, cells) in &feature_rows {
        if cells.len() != d {
            return Err(format_err(feature_file, *line, format!("expected {d} columns")));
        }
        for c in cells {
            let x: f64 = parse_cell(feature_file, *line, c)?;
            if !x.is_finite() {
                return Err(format_err(feature_file, *line, "non-finite feature"));
            }
            features.push(x);
        }
    }

    let known_mask = match mask_file {
        None => vec![true; n],
        Some(path) => {
            let rows = read_rows(path)?;
            if rows.len() != n {
                let line = rows.last().map(|r| r.0).unwrap_or(1);
                return Err(format_err(path, line, format!("{} mask rows for {} nodes", rows.len(), n)));
            }
            let mut mask = Vec::with_capacity(n);
            for (line, cells) in &rows {
                match cells.first().map(String::as_str) {
                    Some("0") if cells.len() == 1 => mask.push(false),
                    Some("1") if cells.len() == 1 => mask.push(true),
                    _ => return Err(format_err(path, *line, "mask cells must be 0 or 1")),
                }
            }
            mask
        }
    };

    let mut edges = Vec::new();
    for (k, (line, cells)) in read_rows(edge_file)?.into_iter().enumerate() {
        if k == 0 && cells.len() == 2 && cells[0] == "src" && cells[1] == "dst" {
            continue;
        }
        if cells.len() != 2 {
            return Err(format_err(edge_file, line, "expected src,dst"));
        }
        let i: usize = parse_cell(edge_file, line, &cells[0])?;
        let j: usize = parse_cell(edge_file, line, &cells[1])?;
        if i >= n || j >= n {
            return Err(format_err(edge_file, line, format!("index out of range for {n} nodes")));
        }
        if i == j {
            return Err(format_err(edge_file, line, format!("self-loop at node {i}")));
        }
        edges.push((i, j));
    }
    Graph::new(d, num_classes, features, &edges, labels, known_mask, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::default_dimension;

    fn reference_csbm(k: f64) -> GenModel {
        GenModel::csbm(1000, 0.0063, 0.0015, k, default_dimension(1000), 1.0)
    }

    #[test]
    fn zero_probabilities_give_no_edges() {
        let m = GenModel::csbm(200, 0.0, 0.0, 1.0, 4, 1.0);
        assert_eq!(sample_graph(&m, 3).unwrap().num_edges(), 0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = reference_csbm(1.0);
        assert_eq!(sample_graph(&m, 11).unwrap(), sample_graph(&m, 11).unwrap());
        assert_ne!(sample_graph(&m, 11).unwrap(), sample_graph(&m, 12).unwrap());
    }

    #[test]
    fn extension_matches_larger_sample() {
        // Streams are keyed by node index, so growing a graph node by node
        // reproduces a direct sample of the larger graph.
        let small = GenModel::csbm(50, 0.2, 0.05, 1.0, 3, 1.0);
        let mut big = small.clone();
        big.n = 53;
        let ext = extend_graph(&sample_graph(&small, 5).unwrap(), 3, 5).unwrap();
        let direct = sample_graph(&big, 5).unwrap();
        assert_eq!(ext.edges().collect::<Vec<_>>(), direct.edges().collect::<Vec<_>>());
        assert_eq!(ext.features(), direct.features());
        assert_eq!(&ext.known_mask()[50..], &[false, false, false]);
    }

    #[test]
    fn cba_nodes_pick_between_one_and_m_predecessors() {
        let omega = vec![vec![3.16, 0.74], vec![0.74, 3.16]];
        let m = GenModel::cba(300, 3, omega, 1.0, 4, 1.0);
        let g = sample_graph(&m, 9).unwrap();
        assert!(g.num_edges() <= 3 * 299);
        for i in 1..g.n() {
            let back = g.neighbors(i).iter().filter(|&&j| j < i).count();
            assert!((1..=3).contains(&back), "node {i} has {back} predecessor edges");
        }
    }

    #[test]
    fn extend_requires_model() {
        let g = Graph::new(1, 2, vec![0.0], &[], vec![0], vec![true], None).unwrap();
        assert!(matches!(extend_graph(&g, 1, 0), Err(Error::Unsupported)));
    }
}
