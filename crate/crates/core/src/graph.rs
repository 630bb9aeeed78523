//! Areal neighbor graphs and spatial weight matrices.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{input_err, Error, Result};
use crate::geometry::{segment_segment_distance, Polygon};
use crate::linalg::Matrix;

/// Default snap tolerance for polygon contiguity, in input coordinate units.
pub const DEFAULT_SNAP: f64 = 1e-9;

/// Symmetric adjacency over an ordered list of units. Every unit has at least
/// one neighbor and none is its own neighbor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    unit_labels: Vec<String>,
    neighbors: Vec<Vec<usize>>,
}

impl NeighborGraph {
    fn from_sets(unit_labels: Vec<String>, sets: Vec<BTreeSet<usize>>) -> Result<Self> {
        if let Some(i) = sets.iter().position(BTreeSet::is_empty) {
            return Err(Error::IsolatedUnit(unit_labels[i].clone()));
        }
        Ok(Self { unit_labels, neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect() })
    }

    pub fn len(&self) -> usize {
        self.unit_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_labels.is_empty()
    }

    pub fn unit_labels(&self) -> &[String] {
        &self.unit_labels
    }

    /// Sorted neighbor indices of unit `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn average_degree(&self) -> f64 {
        2.0 * self.n_edges() as f64 / self.len() as f64
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.unit_labels.iter().position(|u| u == label)
    }

    /// Undirected edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|i| self.neighbors[i].iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    /// Same graph with units reordered so that new unit `k` is old unit `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut inverse = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        let neighbors = order
            .iter()
            .map(|&old| {
                let mut v: Vec<usize> = self.neighbors[old].iter().map(|&j| inverse[j]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        Self { unit_labels: order.iter().map(|&o| self.unit_labels[o].clone()).collect(), neighbors }
    }
}

fn label_index(units: &[String]) -> Result<BTreeMap<&str, usize>> {
    let mut index = BTreeMap::new();
    for (i, u) in units.iter().enumerate() {
        if index.insert(u.as_str(), i).is_some() {
            return Err(input_err!("duplicate unit {u}"));
        }
    }
    Ok(index)
}

/// Symmetric closure of an undirected edge list.
pub fn graph_from_edge_list(units: &[String], edges: &[(String, String)]) -> Result<NeighborGraph> {
    let index = label_index(units)?;
    let mut sets = vec![BTreeSet::new(); units.len()];
    for (a, b) in edges {
        let lookup = |u: &String| index.get(u.as_str()).copied().ok_or_else(|| input_err!("edge ({a}, {b}) names unknown unit {u}"));
        let (i, j) = (lookup(a)?, lookup(b)?);
        if i == j {
            return Err(input_err!("self-loop on unit {a}"));
        }
        sets[i].insert(j);
        sets[j].insert(i);
    }
    NeighborGraph::from_sets(units.to_vec(), sets)
}

/// Queen contiguity: units are neighbors when their boundaries come within
/// `snap` of each other anywhere (shared vertex, vertex on edge, or shared
/// edge). Pairs are prefiltered by bounding boxes.
pub fn queen_from_polygons(polygons: &[(String, Polygon)], snap: f64) -> Result<NeighborGraph> {
    let units: Vec<String> = polygons.iter().map(|(u, _)| u.clone()).collect();
    label_index(&units)?;
    let boxes: Vec<_> = polygons.iter().map(|(_, p)| p.bbox()).collect();
    let mut sets = vec![BTreeSet::new(); polygons.len()];
    for i in 0..polygons.len() {
        for j in i + 1..polygons.len() {
            if !boxes[i].intersects(&boxes[j], snap) {
                continue;
            }
            let touches = polygons[i].1.boundary_segments().any(|(a, b)| {
                polygons[j].1.boundary_segments().any(|(c, d)| segment_segment_distance(a, b, c, d) <= snap)
            });
            if touches {
                sets[i].insert(j);
                sets[j].insert(i);
            }
        }
    }
    NeighborGraph::from_sets(units, sets)
}

/// Queen-contiguity graph of a `rows × cols` lattice, units in row-major order.
pub fn queen_lattice(rows: usize, cols: usize, labels: Vec<String>) -> Result<NeighborGraph> {
    if labels.len() != rows * cols {
        return Err(input_err!("{} labels for a {rows}x{cols} lattice", labels.len()));
    }
    let mut sets = vec![BTreeSet::new(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if (dr, dc) != (0, 0) && (0..rows as i64).contains(&nr) && (0..cols as i64).contains(&nc) {
                        sets[r * cols + c].insert(nr as usize * cols + nc as usize);
                    }
                }
            }
        }
    }
    NeighborGraph::from_sets(labels, sets)
}

/// Labels `u000, u001, …` for lattices built in tests and simulations.
pub fn lattice_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("u{i:03}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WeightScheme {
    Binary,
    #[cfg_attr(feature = "serde", serde(alias = "row"))]
    RowStandardized,
}

impl WeightScheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binary" | "b" => Some(Self::Binary),
            "row" | "row_standardized" | "row-standardized" | "w" => Some(Self::RowStandardized),
            _ => None,
        }
    }
}

/// Sparse non-negative weights sharing the sparsity pattern of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub scheme: WeightScheme,
    rows: Vec<Vec<(usize, f64)>>,
    /// Sum of all weights.
    pub s0: f64,
}

impl WeightMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|(k, _)| *k == j).map_or(0.0, |&(_, w)| w)
    }

    pub fn dense(&self) -> Matrix {
        let n = self.len();
        let mut m = Matrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[(i, j)] = w;
            }
        }
        m
    }

    /// Spatial lag `Σⱼ wᵢⱼ vⱼ` for every unit.
    pub fn lag(&self, values: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(j, w)| w * values[j]).sum()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.len()).all(|i| self.rows[i].iter().all(|&(j, w)| self.get(j, i) == w))
    }
}

/// Binary (`1` per neighbor) or row-standardized (`1/degree`) weights.
///
/// `s0` is exact: twice the edge count for binary weights and the number of
/// units for row-standardized weights (every unit has a neighbor).
pub fn weights(graph: &NeighborGraph, scheme: WeightScheme) -> WeightMatrix {
    let rows: Vec<Vec<(usize, f64)>> = (0..graph.len())
        .map(|i| {
            let nb = graph.neighbors(i);
            let w = match scheme {
                WeightScheme::Binary => 1.0,
                WeightScheme::RowStandardized => 1.0 / nb.len() as f64,
            };
            nb.iter().map(|&j| (j, w)).collect()
        })
        .collect();
    let s0 = match scheme {
        WeightScheme::Binary => (2 * graph.n_edges()) as f64,
        WeightScheme::RowStandardized => graph.len() as f64,
    };
    WeightMatrix { scheme, rows, s0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn e(a: &str, b: &str) -> (String, String) {
        (a.to_string(), b.to_string())
    }

    #[test]
    fn path_graph_degrees() {
        let g = graph_from_edge_list(&s(&["A", "B", "C"]), &[e("A", "B"), e("B", "C")]).unwrap();
        assert_eq!((g.degree(0), g.degree(1), g.degree(2)), (1, 2, 1));
        assert_eq!(g.n_edges(), 2);
    }

    #[test]
    fn isolated_unit_is_named() {
        let err = graph_from_edge_list(&s(&["A", "B", "C"]), &[e("A", "B")]).unwrap_err();
        assert_eq!(err, Error::IsolatedUnit("C".to_string()));
    }

    #[test]
    fn self_loop_and_unknown_unit_rejected() {
        assert!(matches!(graph_from_edge_list(&s(&["A", "B"]), &[e("A", "A")]), Err(Error::Input(_))));
        assert!(matches!(graph_from_edge_list(&s(&["A", "B"]), &[e("A", "Z")]), Err(Error::Input(_))));
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = graph_from_edge_list(&s(&["A", "B"]), &[e("A", "B"), e("B", "A"), e("A", "B")]).unwrap();
        assert_eq!(g.n_edges(), 1);
    }

    #[test]
    fn path_weights() {
        let g = graph_from_edge_list(&s(&["A", "B", "C"]), &[e("A", "B"), e("B", "C")]).unwrap();
        let w = weights(&g, WeightScheme::RowStandardized);
        assert_eq!((w.get(1, 0), w.get(1, 1), w.get(1, 2)), (0.5, 0.0, 0.5));
        // rows (0,1,0), (.5,0,.5), (0,1,0)
        assert_eq!(w.s0, 3.0);
        assert_eq!(w.dense().sum(), 3.0);
        let b = weights(&g, WeightScheme::Binary);
        assert_eq!(b.s0, 4.0);
        assert!(b.is_symmetric());
        assert!(!w.is_symmetric());
    }

    #[test]
    fn complete_graph_row_weights() {
        let g = graph_from_edge_list(&s(&["A", "B", "C"]), &[e("A", "B"), e("B", "C"), e("A", "C")]).unwrap();
        let w = weights(&g, WeightScheme::RowStandardized).dense();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(w[(i, j)], if i == j { 0.0 } else { 0.5 });
            }
        }
    }

    #[test]
    fn squares_sharing_edge_or_corner_are_neighbors() {
        let a = Polygon::rectangle(0., 0., 1., 1.);
        let edge = Polygon::rectangle(1., 0., 2., 1.);
        let corner = Polygon::rectangle(1., 1., 2., 2.);
        let g = queen_from_polygons(&[("a".into(), a.clone()), ("b".into(), edge)], DEFAULT_SNAP).unwrap();
        assert!(g.is_adjacent(0, 1));
        let g = queen_from_polygons(&[("a".into(), a.clone()), ("c".into(), corner)], DEFAULT_SNAP).unwrap();
        assert!(g.is_adjacent(0, 1));
        let gap = 10.0 * DEFAULT_SNAP;
        let apart = Polygon::rectangle(1. + gap, 0., 2., 1.);
        let err = queen_from_polygons(&[("a".into(), a), ("d".into(), apart)], DEFAULT_SNAP).unwrap_err();
        assert!(matches!(err, Error::IsolatedUnit(_)));
    }

    #[test]
    fn vertex_on_edge_counts() {
        let a = Polygon::rectangle(0., 0., 2., 1.);
        let b = Polygon::rectangle(1., 1., 3., 2.);
        let g = queen_from_polygons(&[("a".into(), a), ("b".into(), b)], DEFAULT_SNAP).unwrap();
        assert!(g.is_adjacent(0, 1));
    }

    #[test]
    fn lattice_degrees() {
        let g = queen_lattice(3, 3, lattice_labels(9)).unwrap();
        assert_eq!((0..9).map(|i| g.degree(i)).collect::<Vec<_>>(), [3, 5, 3, 5, 8, 5, 3, 5, 3]);
        assert_eq!(g.average_degree(), 2.0 * g.n_edges() as f64 / 9.0);
    }
}
