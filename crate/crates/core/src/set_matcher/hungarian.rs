//! Rectangular min-cost assignment (Kuhn-Munkres with potentials, shortest
//! augmenting paths). O(M^2 N) for an M x N matrix with M <= N.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense row-major cost matrix; rows are ground truths, columns predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "cost matrix data has {} entries, expected {rows} x {cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged cost matrix rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// First non-finite entry, if any.
    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::NonFiniteCost {
                row: k / self.cols,
                col: k % self.cols,
                value: self.data[k],
            }),
        }
    }

    /// Sum of the entries picked by `pairs`, accumulated in slice order.
    pub fn cost_of(&self, pairs: &[(usize, usize)]) -> f64 {
        pairs.iter().map(|&(r, c)| self.get(r, c)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `(ground truth, prediction)` pairs sorted by ground-truth index; every
    /// ground truth appears exactly once and no prediction repeats.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl Assignment {
    pub fn prediction_for(&self, gt: usize) -> Option<usize> {
        self.pairs.get(gt).map(|&(_, p)| p)
    }
}

/// Minimum-cost injective assignment of every row to a distinct column.
///
/// Among equally cheap augmenting steps the lowest column index wins, so
/// the output is deterministic.
pub fn hungarian(costs: &CostMatrix) -> Result<Assignment> {
    let (m, n) = (costs.rows, costs.cols);
    if m > n {
        return Err(Error::TooFewPredictions {
            predictions: n,
            ground_truths: m,
        });
    }
    costs.check_finite()?;
    if m == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            total_cost: 0.0,
        });
    }

    // 1-based; column 0 is a virtual source. row_of[j] == 0 means free.
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=m {
        row_of[0] = i;
        let mut j0 = 0;
        min_slack.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let row = costs.row(i0 - 1);
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = row[j - 1] - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            debug_assert!(j1 != 0, "finite costs always leave a reachable column");
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        // Flip the augmenting path back to the source.
        while j0 != 0 {
            let prev = way[j0];
            row_of[j0] = row_of[prev];
            j0 = prev;
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=n)
        .filter(|&j| row_of[j] != 0)
        .map(|j| (row_of[j] - 1, j - 1))
        .collect();
    pairs.sort_unstable();
    let total_cost = costs.cost_of(&pairs);
    Ok(Assignment { pairs, total_cost })
}
