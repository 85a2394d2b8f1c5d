//! Dense helpers for the small matrices (M x M, M a handful of groups) used here.

pub type Matrix = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn is_square(a: &Matrix, n: usize) -> bool {
    a.len() == n && a.iter().all(|row| row.len() == n)
}

pub fn is_symmetric(a: &Matrix, tol: f64) -> bool {
    let n = a.len();
    (0..n).all(|i| (0..i).all(|j| (a[i][j] - a[j][i]).abs() <= tol * (1.0 + a[i][j].abs())))
}

fn scale_of(a: &Matrix) -> f64 {
    a.iter()
        .enumerate()
        .map(|(i, r)| r[i].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}

/// Lower-triangular Cholesky factor of a symmetric positive semi-definite
/// matrix. Zero pivots produce zero columns. `None` if the matrix is not PSD.
pub fn cholesky_psd(a: &Matrix) -> Option<Matrix> {
    let n = a.len();
    let tol = 1e-12 * scale_of(a);
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let d = a[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if d < -tol {
            return None;
        }
        if d <= tol {
            for i in j + 1..n {
                let r = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if r.abs() > tol.sqrt() * 1e-3 + tol {
                    return None;
                }
            }
            continue;
        }
        let ljj = d.sqrt();
        l[j][j] = ljj;
        for i in j + 1..n {
            let r = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = r / ljj;
        }
    }
    Some(l)
}

/// Cholesky factor of a strictly positive definite matrix.
pub fn cholesky_pd(a: &Matrix) -> Option<Matrix> {
    let l = cholesky_psd(a)?;
    let tol = 1e-12 * scale_of(a);
    (0..a.len()).all(|i| l[i][i] * l[i][i] > tol).then_some(l)
}

pub fn inverse_pd(a: &Matrix) -> Option<Matrix> {
    let l = cholesky_pd(a)?;
    let n = a.len();
    // columns of L^{-1}
    let mut linv = vec![vec![0.0; n]; n];
    for c in 0..n {
        for i in 0..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[i][k] * linv[k][c];
            }
            linv[i][c] = s / l[i][i];
        }
    }
    let mut inv = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            inv[i][j] = (0..n).map(|k| linv[k][i] * linv[k][j]).sum();
        }
    }
    Some(inv)
}

pub fn mat_vec(a: &Matrix, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

pub fn quad_form(a: &Matrix, x: &[f64]) -> f64 {
    a.iter()
        .zip(x)
        .map(|(row, xi)| xi * row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>())
        .sum()
}

pub fn is_diagonal(a: &Matrix) -> bool {
    a.iter()
        .enumerate()
        .all(|(i, row)| row.iter().enumerate().all(|(j, &v)| i == j || v == 0.0))
}
