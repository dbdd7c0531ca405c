//! Linear-time solvers for symmetric tridiagonal and cyclic tridiagonal systems.

/// Returned when elimination meets a pivot that is numerically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPivot {
    pub row: usize,
}

const PIVOT_EPS: f64 = 1e-300;

/// Solves `A x = rhs` for the symmetric tridiagonal `A` with main diagonal
/// `diag` and off-diagonal `off` (`off[i]` couples rows `i` and `i + 1`).
///
/// Thomas algorithm without pivoting; fine for the diagonally dominant and
/// positive definite systems assembled in this crate.
pub fn solve_symmetric(diag: &[f64], off: &[f64], rhs: &[f64]) -> Result<Vec<f64>, SingularPivot> {
    let m = diag.len();
    assert_eq!(rhs.len(), m);
    assert!(off.len() + 1 >= m, "off-diagonal too short");
    if m == 0 {
        return Ok(Vec::new());
    }
    // pivots are judged against their own row: the systems here are strongly
    // graded (rows near a pole scale like a high power of the spacing)
    let row_scale = |i: usize| {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < m { off[i].abs() } else { 0.0 };
        (diag[i].abs() + left + right).max(PIVOT_EPS)
    };
    let mut c = vec![0.0; m];
    let mut x = vec![0.0; m];
    let mut pivot = diag[0];
    if pivot.abs() <= 1e-14 * row_scale(0) {
        return Err(SingularPivot { row: 0 });
    }
    x[0] = rhs[0] / pivot;
    for i in 1..m {
        c[i - 1] = off[i - 1] / pivot;
        pivot = diag[i] - off[i - 1] * c[i - 1];
        if pivot.abs() <= 1e-14 * row_scale(i) || !pivot.is_finite() {
            return Err(SingularPivot { row: i });
        }
        x[i] = (rhs[i] - off[i - 1] * x[i - 1]) / pivot;
    }
    for i in (0..m - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Solves the cyclic system where `off[m - 1]` couples the last row with the
/// first. Uses the Sherman–Morrison correction on top of [`solve_symmetric`].
pub fn solve_cyclic(diag: &[f64], off: &[f64], rhs: &[f64]) -> Result<Vec<f64>, SingularPivot> {
    let m = diag.len();
    assert_eq!(off.len(), m, "cyclic system needs m off-diagonal entries");
    assert_eq!(rhs.len(), m);
    if m < 3 {
        // too small for the rank-one trick; dense 2x2 / 1x1
        return match m {
            0 => Ok(Vec::new()),
            1 => {
                let a = diag[0] + 2.0 * off[0];
                if a.abs() <= PIVOT_EPS {
                    Err(SingularPivot { row: 0 })
                } else {
                    Ok(vec![rhs[0] / a])
                }
            }
            _ => {
                let b = off[0] + off[1];
                let det = diag[0] * diag[1] - b * b;
                if det.abs() <= PIVOT_EPS {
                    return Err(SingularPivot { row: 0 });
                }
                Ok(vec![
                    (diag[1] * rhs[0] - b * rhs[1]) / det,
                    (diag[0] * rhs[1] - b * rhs[0]) / det,
                ])
            }
        };
    }
    let corner = off[m - 1];
    // A = T + u v^T with u = (gamma, 0, .., corner), v = (1, 0, .., corner / gamma)
    let gamma = if diag[0] != 0.0 { -diag[0] } else { -1.0 };
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[m - 1] -= corner * corner / gamma;
    let inner = &off[..m - 1];
    let y = solve_symmetric(&d, inner, rhs)?;
    let mut u = vec![0.0; m];
    u[0] = gamma;
    u[m - 1] = corner;
    let z = solve_symmetric(&d, inner, &u)?;
    let vy = y[0] + corner / gamma * y[m - 1];
    let vz = z[0] + corner / gamma * z[m - 1];
    let denom = 1.0 + vz;
    if denom.abs() <= 1e-14 {
        return Err(SingularPivot { row: m - 1 });
    }
    let factor = vy / denom;
    Ok(y.iter().zip(&z).map(|(yi, zi)| yi - factor * zi).collect())
}

/// `A x` for the tridiagonal (optionally cyclic) matrix described as above.
pub fn multiply(diag: &[f64], off: &[f64], cyclic: bool, x: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let mut y: Vec<f64> = diag.iter().zip(x).map(|(d, xi)| d * xi).collect();
    for i in 0..m.saturating_sub(1) {
        y[i] += off[i] * x[i + 1];
        y[i + 1] += off[i] * x[i];
    }
    if cyclic && m >= 2 {
        let c = off[m - 1];
        y[m - 1] += c * x[0];
        y[0] += c * x[m - 1];
    }
    y
}
