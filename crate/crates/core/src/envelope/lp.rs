//! Dense two-phase simplex for the affine-minorant problem at one node.
//!
//! The supremum of `l(x0)` over affine `l <= w` at the points `x_i` equals,
//! by duality, `min sum_i lambda_i w_i` subject to `sum_i lambda_i x_i = x0`,
//! `sum_i lambda_i = 1`, `lambda >= 0`. That primal has only `d + 1` rows,
//! so a dense tableau over all points is cheap at desk scale.

use crate::error::{Error, Result};

/// Consecutive degenerate pivots before switching from Dantzig pricing to
/// Bland's rule.
const DEGENERATE_SWITCH: usize = 50;

struct Tableau {
    rows: usize,
    cols: usize,
    /// row-major, `rows x (cols + 1)`, last column is the right-hand side
    a: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.a[pr * w + pc];
        for c in 0..w {
            self.a[pr * w + c] /= p;
        }
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.a[r * w + pc];
            if f != 0.0 {
                for c in 0..w {
                    let v = self.a[pr * w + c];
                    self.a[r * w + c] -= f * v;
                }
            }
        }
        self.basis[pr] = pc;
    }
}

/// Lower convex hull of `(points, values)` evaluated at `points[target]`.
///
/// `points` is flat with `dim` coordinates per point, already expressed in
/// well-scaled units (grid offsets in cells work best).
pub fn lower_hull_at(points: &[f64], dim: usize, values: &[f64], target: usize) -> Result<f64> {
    let n_pts = values.len();
    if points.len() != n_pts * dim || target >= n_pts {
        return Err(Error::Internal("inconsistent LP input".into()));
    }
    let rows = dim + 1;
    // real columns, then one artificial column per coordinate row
    let cols = n_pts + dim;
    let width = cols + 1;
    let x0 = &points[target * dim..(target + 1) * dim];
    let mut a = vec![0.0; rows * width];
    for i in 0..n_pts {
        for r in 0..dim {
            a[r * width + i] = points[i * dim + r] - x0[r];
        }
        a[dim * width + i] = 1.0;
    }
    for r in 0..dim {
        a[r * width + n_pts + r] = 1.0;
    }
    a[dim * width + cols] = 1.0;
    let mut basis: Vec<usize> = (0..dim).map(|r| n_pts + r).collect();
    basis.push(target);
    let mut t = Tableau {
        rows,
        cols,
        a,
        basis,
    };

    // the start is feasible with every artificial at level zero; pivot them out
    for r in 0..dim {
        if t.basis[r] < n_pts {
            continue;
        }
        let best = (0..n_pts)
            .filter(|&c| !t.basis.contains(&c))
            .max_by(|&i, &j| t.at(r, i).abs().total_cmp(&t.at(r, j).abs()));
        match best {
            Some(c) if t.at(r, c).abs() > 1e-9 => t.pivot(r, c),
            _ => {
                return Err(Error::Internal(
                    "obstacle nodes do not span the ambient space".into(),
                ))
            }
        }
    }

    let scale = values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let eps_cost = 1e-12 * scale;
    let eps_piv = 1e-9;
    let mut degenerate_run = 0usize;
    for _iter in 0..100_000 {
        // duals y from c_B: reduced cost d_j = w_j - sum_r c_B[r] * B^-1 A_j
        let cb: Vec<f64> = t.basis.iter().map(|&b| values[b]).collect();
        let reduced = |t: &Tableau, j: usize| -> f64 {
            values[j] - (0..rows).map(|r| cb[r] * t.at(r, j)).sum::<f64>()
        };
        let bland = degenerate_run >= DEGENERATE_SWITCH;
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..n_pts {
            if t.basis.contains(&j) {
                continue;
            }
            let d = reduced(&t, j);
            if d < -eps_cost {
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.is_none_or(|(_, best)| d < best) {
                    entering = Some((j, d));
                }
            }
        }
        let Some((col, _)) = entering else {
            return Ok((0..rows).map(|r| cb[r] * t.rhs(r)).sum());
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            let v = t.at(r, col);
            if v > eps_piv {
                let ratio = t.rhs(r) / v;
                let better = match leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < best - 1e-15 || (ratio <= best + 1e-15 && t.basis[r] < t.basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((row, ratio)) = leave else {
            return Err(Error::Internal("affine-minorant LP is unbounded".into()));
        };
        if ratio <= 1e-15 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        t.pivot(row, col);
    }
    Err(Error::Internal("simplex iteration limit reached".into()))
}
