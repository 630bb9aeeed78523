//! Queen contiguity from polygons against brute-force geometry.

use arealrisk_core::geometry::{Point, Polygon};
use arealrisk_core::graph::{lattice_labels, queen_from_polygons, queen_lattice, weights, WeightScheme, DEFAULT_SNAP};
use proptest::prelude::*;

// Gap between two axis-aligned boxes; zero when they touch or overlap.
fn box_gap(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> f64 {
    let dx = (b.0 - a.2).max(a.0 - b.2).max(0.0);
    let dy = (b.1 - a.3).max(a.1 - b.3).max(0.0);
    (dx * dx + dy * dy).sqrt()
}

#[test]
fn three_by_three_squares() {
    let labels = lattice_labels(9);
    let boxes: Vec<_> = (0..9).map(|k| ((k % 3) as f64, (k / 3) as f64, (k % 3 + 1) as f64, (k / 3 + 1) as f64)).collect();
    let polys: Vec<_> = labels
        .iter()
        .zip(&boxes)
        .map(|(l, b)| (l.clone(), Polygon::rectangle(b.0, b.1, b.2, b.3)))
        .collect();
    let g = queen_from_polygons(&polys, DEFAULT_SNAP).unwrap();
    for i in 0..9 {
        for j in 0..9 {
            let expected = i != j && box_gap(boxes[i], boxes[j]) == 0.0;
            assert_eq!(g.is_adjacent(i, j), expected, "({i}, {j})");
        }
    }
    let degrees: Vec<usize> = (0..9).map(|i| g.degree(i)).collect();
    assert_eq!(degrees, [3, 5, 3, 5, 8, 5, 3, 5, 3]);
    assert_eq!(g, queen_lattice(3, 3, labels).unwrap());
}

#[test]
fn vertex_touching_edge_midpoint_is_adjacent() {
    let a = Polygon::rectangle(0.0, 0.0, 2.0, 1.0);
    let tri = Polygon::new(vec![Point::new(1.0, 1.0), Point::new(2.0, 3.0), Point::new(0.0, 3.0)], vec![]).unwrap();
    let far = Polygon::rectangle(5.0, 5.0, 6.0, 6.0);
    let g = queen_from_polygons(&[("a".into(), a), ("t".into(), tri), ("f".into(), far.clone()), ("g".into(), far.translated(1.0, 0.0))], DEFAULT_SNAP).unwrap();
    assert!(g.is_adjacent(0, 1));
    assert!(!g.is_adjacent(0, 2));
}

proptest! {
    #[test]
    fn lattice_matches_box_oracle(rows in 1usize..7, cols in 1usize..7) {
        prop_assume!(rows * cols >= 2);
        let n = rows * cols;
        let labels = lattice_labels(n);
        let boxes: Vec<_> = (0..n).map(|k| ((k % cols) as f64, (k / cols) as f64, (k % cols + 1) as f64, (k / cols + 1) as f64)).collect();
        let polys: Vec<_> = labels.iter().zip(&boxes).map(|(l, b)| (l.clone(), Polygon::rectangle(b.0, b.1, b.2, b.3))).collect();
        let g = queen_from_polygons(&polys, DEFAULT_SNAP).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(g.is_adjacent(i, j), i != j && box_gap(boxes[i], boxes[j]) == 0.0);
            }
        }
        let w = weights(&g, WeightScheme::RowStandardized);
        for i in 0..n {
            let s: f64 = w.row(i).iter().map(|&(_, v)| v).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
        prop_assert!(weights(&g, WeightScheme::Binary).is_symmetric());
    }
}
