//! Row-major dense `f64` matrices and the few factorizations this crate
//! needs: Cholesky (ridge solves, whitening), triangular inversion, and LU
//! with partial pivoting (inverting the benchmark's random affine maps).

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from row-major data. Errors if the length does not
    /// match or any entry is non-finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        let m = DenseMatrix { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::dim("ragged rows".to_string()));
            }
            data.extend_from_slice(row);
        }
        DenseMatrix::from_vec(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("matrix entry".to_string()))
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// `self * v` for a vector `v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::dim(format!(
                "matvec {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect())
    }

    /// Lower-triangular Cholesky factor `L` with `self = L Lᵀ`.
    ///
    /// Fails on matrices that are not (numerically) positive definite.
    pub fn cholesky(&self) -> Result<DenseMatrix> {
        if self.rows != self.cols {
            return Err(Error::dim("cholesky of non-square matrix".to_string()));
        }
        let n = self.rows;
        let scale = (0..n)
            .map(|i| self.get(i, i).abs())
            .fold(0.0_f64, f64::max)
            .max(1.0);
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                let v = l.get(j, k);
                d -= v * v;
            }
            if !(d > scale * 1e-13) {
                return Err(Error::Singular(format!(
                    "not positive definite at pivot {j}"
                )));
            }
            let d = d.sqrt();
            l.set(j, j, d);
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / d);
            }
        }
        Ok(l)
    }

    /// Solves `self * x = b` given that `self` is lower triangular.
    pub fn solve_lower(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.rows;
        if b.len() != n {
            return Err(Error::dim("solve_lower rhs length".to_string()));
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.get(i, j) * x[j];
            }
            x[i] = s / self.get(i, i);
        }
        Ok(x)
    }

    /// Solves `selfᵀ * x = b` given that `self` is lower triangular.
    pub fn solve_lower_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.rows;
        if b.len() != n {
            return Err(Error::dim("solve_lower_transpose rhs length".to_string()));
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in (i + 1)..n {
                s -= self.get(j, i) * x[j];
            }
            x[i] = s / self.get(i, i);
        }
        Ok(x)
    }

    /// Inverse of a lower-triangular matrix (column-by-column substitution).
    pub fn invert_lower(&self) -> Result<DenseMatrix> {
        let n = self.rows;
        let mut out = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve_lower(&e)?;
            e[j] = 0.0;
            for i in 0..n {
                out.set(i, j, col[i]);
            }
        }
        Ok(out)
    }

    /// General inverse via LU with partial pivoting.
    pub fn invert(&self) -> Result<DenseMatrix> {
        if self.rows != self.cols {
            return Err(Error::dim("invert of non-square matrix".to_string()));
        }
        let n = self.rows;
        let mut lu = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, piv_val) = (k..n)
                .map(|i| (i, lu.get(i, k).abs()))
                .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if piv_val < 1e-300 {
                return Err(Error::Singular("matrix not invertible".to_string()));
            }
            if piv != k {
                for j in 0..n {
                    let t = lu.get(k, j);
                    lu.set(k, j, lu.get(piv, j));
                    lu.set(piv, j, t);
                }
                perm.swap(k, piv);
            }
            let d = lu.get(k, k);
            for i in (k + 1)..n {
                let f = lu.get(i, k) / d;
                lu.set(i, k, f);
                for j in (k + 1)..n {
                    let v = lu.get(i, j) - f * lu.get(k, j);
                    lu.set(i, j, v);
                }
            }
        }
        let mut out = DenseMatrix::zeros(n, n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            for (i, c) in col.iter_mut().enumerate() {
                *c = if perm[i] == j { 1.0 } else { 0.0 };
            }
            // Forward substitution (unit lower part of lu).
            for i in 0..n {
                for k in 0..i {
                    col[i] -= lu.get(i, k) * col[k];
                }
            }
            // Back substitution (upper part).
            for i in (0..n).rev() {
                for k in (i + 1)..n {
                    col[i] -= lu.get(i, k) * col[k];
                }
                col[i] /= lu.get(i, i);
            }
            for i in 0..n {
                out.set(i, j, col[i]);
            }
        }
        Ok(out)
    }

    /// Largest singular value, estimated by power iteration on `selfᵀself`.
    pub fn op_norm_estimate(&self, iters: usize) -> f64 {
        let n = self.cols;
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut lambda = 0.0;
        for _ in 0..iters {
            let w = self.matvec(&v).expect("shape checked");
            let u = self.transpose().matvec(&w).expect("shape checked");
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            for (vi, ui) in v.iter_mut().zip(&u) {
                *vi = ui / norm;
            }
        }
        lambda.sqrt()
    }
}

/// Ridge regression: the `theta` minimizing `‖X·theta − y‖² + lambda‖theta‖²`,
/// solved by Cholesky on the normal equations `(XᵀX + lambda·I)theta = Xᵀy`.
///
/// With `lambda = 0` a singular Gram matrix is reported as
/// [`Error::Singular`] rather than regularized away.
pub fn solve_ridge(x: &DenseMatrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if x.rows() != y.len() {
        return Err(Error::dim(format!(
            "design matrix has {} rows but y has {} entries",
            x.rows(),
            y.len()
        )));
    }
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::arg("empty design matrix"));
    }
    if lambda < 0.0 {
        return Err(Error::arg("lambda must be nonnegative"));
    }
    let p = x.cols();
    let mut gram = DenseMatrix::zeros(p, p);
    for k in 0..x.rows() {
        let row = x.row(k);
        for i in 0..p {
            let a = row[i];
            if a == 0.0 {
                continue;
            }
            for j in i..p {
                let v = gram.get(i, j) + a * row[j];
                gram.set(i, j, v);
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram.set(i, j, gram.get(j, i));
        }
        gram.set(i, i, gram.get(i, i) + lambda);
    }
    let mut xty = vec![0.0; p];
    for k in 0..x.rows() {
        let row = x.row(k);
        let yk = y[k];
        for i in 0..p {
            xty[i] += row[i] * yk;
        }
    }
    let l = gram.cholesky()?;
    let z = l.solve_lower(&xty)?;
    let theta = l.solve_lower_transpose(&z)?;
    if !theta.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("ridge solution".to_string()));
    }
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ridge_residual_gradient(x: &DenseMatrix, y: &[f64], lambda: f64, theta: &[f64]) -> f64 {
        // 2Xᵀ(Xθ − y) + 2λθ
        let pred = x.matvec(theta).unwrap();
        let resid: Vec<f64> = pred.iter().zip(y).map(|(p, t)| p - t).collect();
        let xt = x.transpose();
        let g = xt.matvec(&resid).unwrap();
        g.iter()
            .zip(theta)
            .map(|(gi, ti)| (2.0 * gi + 2.0 * lambda * ti).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn ridge_identity_design() {
        let x = DenseMatrix::identity(3);
        let theta = solve_ridge(&x, &[1.0, 2.0, 3.0], 0.0).unwrap();
        for (t, e) in theta.iter().zip([1.0, 2.0, 3.0]) {
            assert!((t - e).abs() < 1e-12);
        }
    }

    #[test]
    fn ridge_ones_column_gives_mean() {
        let x = DenseMatrix::from_vec(4, 1, vec![1.0; 4]).unwrap();
        let theta = solve_ridge(&x, &[1.0, 1.0, 3.0, 3.0], 0.0).unwrap();
        assert!((theta[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_regularized_closed_form() {
        // (XᵀX + λI)⁻¹Xᵀy with X = I₂, y = (1,1), λ = 1 gives (0.5, 0.5).
        let x = DenseMatrix::identity(2);
        let theta = solve_ridge(&x, &[1.0, 1.0], 1.0).unwrap();
        assert!((theta[0] - 0.5).abs() < 1e-12);
        assert!((theta[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ridge_singular_with_zero_lambda_errors() {
        // Two identical columns.
        let x = DenseMatrix::from_vec(3, 2, vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).unwrap();
        match solve_ridge(&x, &[1.0, 2.0, 3.0], 0.0) {
            Err(Error::Singular(_)) => {}
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn ridge_residual_gradient_small() {
        let mut rng = crate::numkit::Rng::new(7);
        for _ in 0..20 {
            let n = 12;
            let p = 5;
            let data: Vec<f64> = (0..n * p).map(|_| rng.normal()).collect();
            let x = DenseMatrix::from_vec(n, p, data).unwrap();
            let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let lambda = rng.uniform() * 0.5;
            let theta = solve_ridge(&x, &y, lambda).unwrap();
            let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(ridge_residual_gradient(&x, &y, lambda, &theta) <= 1e-8 * (1.0 + ynorm));
        }
    }

    #[test]
    fn ridge_matches_exact_solve_on_full_rank_square() {
        let mut rng = crate::numkit::Rng::new(11);
        for _ in 0..20 {
            let n = 6;
            let mut data: Vec<f64> = (0..n * n).map(|_| rng.normal()).collect();
            for i in 0..n {
                data[i * n + i] += 4.0; // keep well-conditioned
            }
            let x = DenseMatrix::from_vec(n, n, data).unwrap();
            let truth: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let y = x.matvec(&truth).unwrap();
            let theta = solve_ridge(&x, &y, 0.0).unwrap();
            for (a, b) in theta.iter().zip(&truth) {
                assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn cholesky_round_trip() {
        let a = DenseMatrix::from_vec(3, 3, vec![4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0])
            .unwrap();
        let l = a.cholesky().unwrap();
        let back = l.matmul(&l.transpose()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.get(i, j) - a.get(i, j)).abs() < 1e-12);
            }
        }
        let linv = l.invert_lower().unwrap();
        let eye = linv.matmul(&l).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((eye.get(i, j) - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lu_inverse_round_trip() {
        let mut rng = crate::numkit::Rng::new(3);
        for _ in 0..10 {
            let n = 5;
            let data: Vec<f64> = (0..n * n).map(|_| rng.normal()).collect();
            let m = DenseMatrix::from_vec(n, n, data).unwrap();
            let inv = match m.invert() {
                Ok(inv) => inv,
                Err(_) => continue,
            };
            let eye = m.matmul(&inv).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((eye.get(i, j) - e).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn op_norm_of_scaled_identity() {
        let mut m = DenseMatrix::identity(4);
        for i in 0..4 {
            m.set(i, i, 3.0);
        }
        assert!((m.op_norm_estimate(50) - 3.0).abs() < 1e-9);
    }
}
