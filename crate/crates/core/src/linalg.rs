//! Small dense linear algebra: jet-valued inversion, nullspaces and reduced row echelon form.

use nalgebra::{DMatrix, DVector};

use crate::calculus::Jet;
use crate::error::{Error, Result};

/// Inverse of a square matrix of jets by Gauss-Jordan elimination.
///
/// Pivoting uses the values at the base point; the result carries the
/// derivatives of the inverse to the same order as the input.
pub fn invert_jet_matrix(m: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch("jet matrix is not square".into()));
    }
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |s, j| s.max(j.value().abs()))
        .max(f64::MIN_POSITIVE);
    let mut a: Vec<Vec<Jet>> = m.to_vec();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| a[0][0].constant_like(if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].value().abs().total_cmp(&a[y][col].value().abs()))
            .expect("non-empty range");
        if a[pivot][col].value().abs() <= 1e-13 * scale {
            return Err(Error::Singular(format!(
                "pivot {:e} in column {col}",
                a[pivot][col].value()
            )));
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].recip();
        for j in 0..n {
            a[col][j] = &a[col][j] * &p;
            inv[col][j] = &inv[col][j] * &p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col].clone();
            if factor.coeffs().iter().all(|c| *c == 0.0) {
                continue;
            }
            for j in 0..n {
                let da = &factor * &a[col][j];
                a[row][j] -= &da;
                let di = &factor * &inv[col][j];
                inv[row][j] -= &di;
            }
        }
    }
    Ok(inv)
}

/// Numerical nullspace of a matrix, with the singular values that decided it.
#[derive(Debug, Clone)]
pub struct Nullspace {
    /// Basis vectors as columns.
    pub basis: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Largest singular value treated as zero.
    pub largest_zero: f64,
    /// Smallest singular value treated as nonzero.
    pub smallest_nonzero: f64,
}

/// Nullspace of `a` with singular values `<= zero_rel · σ_max` treated as zero.
///
/// Singular values strictly between `zero_rel · σ_max` and `gap_rel · σ_max`
/// make the rank ambiguous and are reported as an error.
pub fn nullspace(a: &DMatrix<f64>, zero_rel: f64, gap_rel: f64) -> Result<Nullspace> {
    let cols = a.ncols();
    let rows = a.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Singular("SVD did not converge".into()))?;
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sigma.iter().fold(0.0f64, |m, s| m.max(*s));
    let zero_cut = zero_rel * smax;
    let gap_cut = gap_rel * smax;
    if let Some(s) = sigma.iter().find(|&&s| s > zero_cut && s < gap_cut) {
        return Err(Error::RankAmbiguity(format!(
            "singular value {s:e} lies between {zero_cut:e} and {gap_cut:e}"
        )));
    }
    let zero_idx: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] <= zero_cut).collect();
    let mut basis = DMatrix::zeros(cols, zero_idx.len());
    for (k, &i) in zero_idx.iter().enumerate() {
        basis.set_column(k, &v_t.row(i).transpose());
    }
    let largest_zero = zero_idx.iter().map(|&i| sigma[i]).fold(0.0, f64::max);
    let smallest_nonzero = sigma
        .iter()
        .copied()
        .filter(|&s| s > zero_cut)
        .fold(f64::INFINITY, f64::min);
    Ok(Nullspace {
        basis,
        singular_values: sigma,
        largest_zero,
        smallest_nonzero,
    })
}

/// Reduced row echelon form with partial pivoting; returns the pivot columns.
pub fn rref(m: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, Vec<usize>) {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, val) = (r..rows)
            .map(|i| (i, a[(i, c)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty range");
        if val <= tol {
            continue;
        }
        a.swap_rows(r, best);
        let p = a[(r, c)];
        for j in 0..cols {
            a[(r, j)] /= p;
        }
        for i in 0..rows {
            if i != r {
                let f = a[(i, c)];
                if f != 0.0 {
                    for j in 0..cols {
                        a[(i, j)] -= f * a[(r, j)];
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    for v in a.iter_mut() {
        if v.abs() <= tol {
            *v = 0.0;
        }
    }
    (a, pivots)
}

/// Least-squares solution of `a x = b` and its max-abs residual.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(b, 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Singular(e.to_string()))?;
    let residual = (a * &x - b).amax();
    Ok((x, residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_inverse_matches_derivative_of_inverse() {
        // m(t) = [[1 + t, 2], [t^2, 3]] in one variable
        let t = Jet::seed(&[0.5, 0.0], 2);
        let one = t[0].constant_like(1.0);
        let m = vec![
            vec![&one + &t[0], one.constant_like(2.0)],
            vec![&t[0] * &t[0], one.constant_like(3.0)],
        ];
        let inv = invert_jet_matrix(&m).unwrap();
        // d(M^-1) = -M^-1 dM M^-1 at t = 0.5
        let mv = DMatrix::from_row_slice(2, 2, &[1.5, 2.0, 0.25, 3.0]);
        let dm = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let mi = mv.clone().try_inverse().unwrap();
        let dmi = -&mi * dm * &mi;
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[i][j].value() - mi[(i, j)]).abs() < 1e-14);
                assert!((inv[i][j].derivative(&[1, 0]) - dmi[(i, j)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn singular_jet_matrix_errors() {
        let t = Jet::seed(&[1.0], 1);
        let m = vec![vec![t[0].clone(), t[0].clone()], vec![t[0].clone(), t[0].clone()]];
        assert!(matches!(invert_jet_matrix(&m), Err(Error::Singular(_))));
    }

    #[test]
    fn nullspace_of_rank_one() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = nullspace(&a, 1e-10, 1e-6).unwrap();
        assert_eq!(ns.basis.ncols(), 2);
        assert!((&a * &ns.basis).amax() < 1e-14);
    }

    #[test]
    fn nullspace_flags_ambiguous_rank() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-8]);
        assert!(matches!(nullspace(&a, 1e-10, 1e-6), Err(Error::RankAmbiguity(_))));
    }

    #[test]
    fn rref_canonical_form() {
        let m = DMatrix::from_row_slice(2, 3, &[2.0, 4.0, 0.0, 1.0, 2.0, 1.0]);
        let (r, pivots) = rref(&m, 1e-12);
        assert_eq!(pivots, vec![0, 2]);
        assert_eq!(r, DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 0.0, 0.0, 1.0]));
    }
}
