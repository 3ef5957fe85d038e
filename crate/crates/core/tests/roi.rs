use std::f64::consts::FRAC_PI_2;

use detcore::bev_roi::{rotated_roi_align, FeatureGrid, RoiPatch};
use detcore::BevBox;
use proptest::prelude::*;

const N: usize = 16;
const CELL: f64 = 0.5;

fn arb_grid() -> impl Strategy<Value = FeatureGrid> {
    prop::collection::vec(-5.0..5.0f64, N * N * 2).prop_map(|v| FeatureGrid::new(N, N, 2, v, [0.0, 0.0], CELL).unwrap())
}

/// Boxes well inside the grid so every bilinear sample has four neighbors.
fn arb_interior_box() -> impl Strategy<Value = BevBox> {
    (2.5..5.5f64, 2.5..5.5f64, 0.5..2.5f64, 0.5..2.5f64, -3.2..3.2f64)
        .prop_map(|(cx, cy, w, l, yaw)| BevBox::new(cx, cy, w, l, yaw))
}

fn close(a: &RoiPatch, b: &RoiPatch, tol: f64) -> bool {
    a.values.len() == b.values.len() && a.values.iter().zip(&b.values).all(|(x, y)| (x - y).abs() <= tol)
}

fn combine(f: &FeatureGrid, g: &FeatureGrid, op: impl Fn(f64, f64) -> f64) -> FeatureGrid {
    let v = f.values().iter().zip(g.values()).map(|(a, b)| op(*a, *b)).collect();
    FeatureGrid::new(f.height(), f.width(), f.channels(), v, f.origin(), f.cell_size()).unwrap()
}

/// Grid contents rotated a quarter turn counter-clockwise about the grid center.
fn rotate_grid(g: &FeatureGrid) -> FeatureGrid {
    FeatureGrid::from_fn(N, N, g.channels(), g.origin(), g.cell_size(), |r, c, ch| {
        g.get(N - 1 - c, r, ch)
    })
    .unwrap()
}

fn rotate_box(b: &BevBox) -> BevBox {
    let half = N as f64 * CELL / 2.0;
    let (x, y) = (b.cx - half, b.cy - half);
    BevBox::new(half - y, half + x, b.w, b.l, b.yaw + FRAC_PI_2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn linear_in_the_grid(f in arb_grid(), g in arb_grid(), k in -3.0..3.0f64, b in arb_interior_box()) {
        let sum = rotated_roi_align(&combine(&f, &g, |a, b| a + b), &b, 7).unwrap();
        let pf = rotated_roi_align(&f, &b, 7).unwrap();
        let pg = rotated_roi_align(&g, &b, 7).unwrap();
        let expect = RoiPatch { values: pf.values.iter().zip(&pg.values).map(|(a, b)| a + b).collect(), ..pf.clone() };
        prop_assert!(close(&sum, &expect, 1e-9));
        let scaled = rotated_roi_align(&combine(&f, &f, |a, _| k * a), &b, 7).unwrap();
        let expect = RoiPatch { values: pf.values.iter().map(|v| k * v).collect(), ..pf };
        prop_assert!(close(&scaled, &expect, 1e-9));
    }

    #[test]
    fn values_are_convex_combinations(f in arb_grid(), b in arb_interior_box()) {
        let p = rotated_roi_align(&f, &b, 5).unwrap();
        for ch in 0..2 {
            let vals = (0..N * N).map(|k| f.values()[k * 2 + ch]);
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            for k in 0..25 {
                let v = p.values[k * 2 + ch];
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn one_cell_shift_equivariance(f in arb_grid(), b in arb_interior_box()) {
        let shifted = FeatureGrid::from_fn(N, N, 2, f.origin(), CELL, |r, c, ch| if c == 0 { 0.0 } else { f.get(r, c - 1, ch) }).unwrap();
        let moved = BevBox { cx: b.cx + CELL, ..b };
        let a = rotated_roi_align(&f, &b, 7).unwrap();
        let m = rotated_roi_align(&shifted, &moved, 7).unwrap();
        prop_assert!(close(&a, &m, 1e-9));
    }

    #[test]
    fn quarter_turn_equivariance(f in arb_grid(), b in arb_interior_box()) {
        let a = rotated_roi_align(&f, &b, 7).unwrap();
        let r = rotated_roi_align(&rotate_grid(&f), &rotate_box(&b), 7).unwrap();
        prop_assert!(close(&a, &r, 1e-9));
    }
}

#[test]
fn four_fold_symmetric_pattern() {
    let c = (N as f64 - 1.0) / 2.0;
    let grid = FeatureGrid::from_fn(N, N, 1, [0.0, 0.0], CELL, |r, col, _| {
        let (dr, dc) = (r as f64 - c, col as f64 - c);
        (dr * dr + dc * dc).sqrt() + (dr * dc).abs()
    })
    .unwrap();
    assert_eq!(rotate_grid(&grid), grid);
    let b = BevBox::new(3.1, 4.7, 1.2, 2.3, 0.4);
    let turned = rotate_box(&b);
    let p = rotated_roi_align(&grid, &b, 7).unwrap();
    let q = rotated_roi_align(&grid, &turned, 7).unwrap();
    assert!(close(&p, &q, 1e-9));

    // The same footprint written with the original yaw and swapped sides
    // visits the bins in transposed, lateral-flipped order.
    let same_footprint = BevBox::new(turned.cx, turned.cy, turned.l, turned.w, b.yaw);
    let s = rotated_roi_align(&grid, &same_footprint, 7).unwrap();
    for lat in 0..7 {
        for head in 0..7 {
            assert!((q.get(lat, head, 0) - s.get(head, 6 - lat, 0)).abs() < 1e-9);
        }
    }
}

#[test]
fn bins_on_cell_centers_copy_cells() {
    let grid = FeatureGrid::from_fn(N, N, 3, [0.0, 0.0], CELL, |r, c, ch| (r * 100 + c * 3 + ch) as f64).unwrap();
    // 7 bins of 0.5 m each, centered on cell centers.
    let b = BevBox::new(4.25, 3.75, 3.5, 3.5, 0.0);
    let p = rotated_roi_align(&grid, &b, 7).unwrap();
    for lat in 0..7 {
        for head in 0..7 {
            for ch in 0..3 {
                assert_eq!(p.get(lat, head, ch), grid.get(lat + 4, head + 5, ch));
            }
        }
    }
}
