//! Exact solution of small zero-sum matrix games by enumerating square
//! equalizing subsystems.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

pub const MAX_GAME_DIM: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGameSolution {
    /// `min_x max_y ⟨Ax, y⟩`.
    pub value: f64,
    pub x: Vector,
    pub y: Vector,
    /// `max_i (Ax)_i − min_j (Aᵀy)_j`; zero at an exact equilibrium.
    pub exploitability: f64,
}

fn members(mask: u32, len: usize) -> Vec<usize> {
    (0..len).filter(|&i| mask & (1 << i) != 0).collect()
}

/// Solves `[[B, −1], [1ᵀ, 0]] [p; v] = [0; 1]`.
fn equalize(b: &Matrix) -> Option<(Vector, f64)> {
    let k = b.nrows();
    let mut sys = Matrix::zeros(k + 1, k + 1);
    sys.view_mut((0, 0), (k, k)).copy_from(b);
    for i in 0..k {
        sys[(i, k)] = -1.0;
        sys[(k, i)] = 1.0;
    }
    let mut rhs = Vector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = sys.lu().solve(&rhs)?;
    sol.iter().all(|v| v.is_finite()).then(|| (sol.rows(0, k).into_owned(), sol[k]))
}

fn scatter(part: &Vector, idx: &[usize], len: usize) -> Option<Vector> {
    if part.iter().any(|&p| p < -1e-12) {
        return None;
    }
    let mut out = Vector::zeros(len);
    for (k, &i) in idx.iter().enumerate() {
        out[i] = part[k].max(0.0);
    }
    let total = out.sum();
    (total > 0.0).then(|| out / total)
}

/// The row player `y` maximizes and the column player `x` minimizes `⟨Ax, y⟩`.
pub fn solve_matrix_game(a: &Matrix) -> Result<MatrixGameSolution> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 || m > MAX_GAME_DIM || n > MAX_GAME_DIM {
        return Err(Error::Dimension(format!("matrix game oracle handles 1..={MAX_GAME_DIM} per side, got {m}x{n}")));
    }
    let mut best: Option<MatrixGameSolution> = None;
    for rmask in 1u32..(1 << m) {
        let rows = members(rmask, m);
        for cmask in 1u32..(1 << n) {
            if cmask.count_ones() != rmask.count_ones() {
                continue;
            }
            let cols = members(cmask, n);
            let block = a.select_rows(&rows).select_columns(&cols);
            let (Some((xc, v1)), Some((yr, v2))) = (equalize(&block), equalize(&block.transpose())) else {
                continue;
            };
            if (v1 - v2).abs() > 1e-10 {
                continue;
            }
            let (Some(x), Some(y)) = (scatter(&xc, &cols, n), scatter(&yr, &rows, m)) else {
                continue;
            };
            let upper = (a * &x).max();
            let lower = (a.transpose() * &y).min();
            let exploitability = upper - lower;
            if best.as_ref().is_none_or(|b| exploitability < b.exploitability) {
                best = Some(MatrixGameSolution { value: 0.5 * (upper + lower), x, y, exploitability });
            }
        }
    }
    match best {
        Some(sol) if sol.exploitability <= 1e-10 => Ok(sol),
        Some(sol) => Err(Error::Oracle(format!("best equalizing pair still exploitable by {:e}", sol.exploitability))),
        None => Err(Error::Oracle("no equalizing subsystem found".into())),
    }
}
