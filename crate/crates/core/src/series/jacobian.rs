use std::collections::HashMap;

use super::truncated::TruncatedSeries;
use crate::error::SeriesError;

/// A nonvanishing maximal minor of a Jacobian of series.
#[derive(Clone, PartialEq, Debug)]
pub struct JacobianRank {
    pub rank: usize,
    /// Rows (functions) and columns (variables) of the witness minor.
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub minor: TruncatedSeries,
}

fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, r, &mut Vec::new(), &mut out);
    out
}

fn mask_of(cols: &[usize]) -> u32 {
    cols.iter().fold(0, |m, &c| m | (1 << c))
}

/// All `r × r` minors on the rows `rows`, keyed by column mask, by Laplace
/// expansion along the last row.
fn minors_for_rows(jac: &[Vec<TruncatedSeries>], rows: &[usize], n: usize) -> HashMap<u32, TruncatedSeries> {
    let (nvars, order) = (jac[0][0].nvars(), jac[0][0].order());
    let mut level: HashMap<u32, TruncatedSeries> = HashMap::from([(0, TruncatedSeries::one(nvars, order))]);
    for (t, &row) in rows.iter().enumerate() {
        let mut next = HashMap::new();
        for cols in subsets(n, t + 1) {
            let mut det = TruncatedSeries::zero(nvars, order);
            for (k, &c) in cols.iter().enumerate() {
                let entry = &jac[row][c];
                let sub = &level[&(mask_of(&cols) & !(1 << c))];
                if entry.is_zero() || sub.is_zero() {
                    continue;
                }
                let prod = entry * sub;
                det = if (t + k) % 2 == 0 { &det + &prod } else { &det - &prod };
            }
            next.insert(mask_of(&cols), det);
        }
        level = next;
    }
    level
}

/// Generic rank of the Jacobian of `fs` over truncated series, certified by the
/// lexicographically first nonvanishing maximal minor. Entries are kept at order
/// `N − 1`, the last order at which one derivative is reliable.
pub fn jacobian_rank_series(fs: &[TruncatedSeries]) -> Result<JacobianRank, SeriesError> {
    let first = fs.first().ok_or(SeriesError::ArityMismatch { expected: 1, got: 0 })?;
    for f in fs {
        first.check_shape(f)?;
    }
    let n = first.nvars();
    if n > 31 {
        return Err(SeriesError::ArityMismatch { expected: 31, got: n });
    }
    let order = first.order().saturating_sub(1);
    let jac: Vec<Vec<TruncatedSeries>> =
        fs.iter().map(|f| f.gradient().into_iter().map(|g| g.with_order(order)).collect()).collect();
    for r in (1..=fs.len().min(n)).rev() {
        for rows in subsets(fs.len(), r) {
            let minors = minors_for_rows(&jac, &rows, n);
            for cols in subsets(n, r) {
                let minor = &minors[&mask_of(&cols)];
                if !minor.is_zero() {
                    return Ok(JacobianRank { rank: r, rows, cols, minor: minor.clone() });
                }
            }
        }
    }
    Ok(JacobianRank { rank: 0, rows: vec![], cols: vec![], minor: TruncatedSeries::zero(n, order) })
}
