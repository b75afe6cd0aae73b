//! Minimal dense linear algebra.
//!
//! Storage is row-major `f64`. Every reduction (dot products, norms, matrix
//! products) accumulates strictly left to right so that results are
//! bit-reproducible across runs and across execution modes.

use std::fmt;
use std::ops::{Deref, DerefMut, Index, IndexMut};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    DimensionMismatch {
        op: &'static str,
        left: String,
        right: String,
    },
    #[error("matrix must be nonempty")]
    Empty,
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("power iteration did not converge after {iters} iterations (last estimate {estimate})")]
    NoConvergence { iters: usize, estimate: f64 },
    #[error("matrix is singular or too ill-conditioned (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite entry produced by {0}")]
    NonFinite(&'static str),
}

/// Owned dense vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Left-to-right dot product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Squared Euclidean distance between two slices.
#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
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
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                op: "from_vec",
                left: format!("{rows}x{cols}"),
                right: format!("{} entries", data.len()),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::DimensionMismatch {
                    op: "from_rows",
                    left: format!("{c} columns"),
                    right: format!("{} columns", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(DenseMatrix {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics; a zero-column matrix has no row data anyway
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn column(&self, c: usize) -> Vector {
        (0..self.rows).map(|r| self[(r, c)]).collect::<Vec<_>>().into()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                axpy(a, other.row(k), out_row);
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vector, LinalgError> {
        if self.cols != x.len() {
            return Err(LinalgError::DimensionMismatch {
                op: "matvec",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("vector of length {}", x.len()),
            });
        }
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        Ok(out.into())
    }

    /// Unchecked `out = self * x`.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(self.cols, x.len());
        debug_assert_eq!(self.rows, out.len());
        for (o, row) in out.iter_mut().zip(self.rows_iter()) {
            *o = dot(row, x);
        }
    }

    /// Unchecked `out = selfᵀ * x`.
    pub fn tr_matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(self.rows, x.len());
        debug_assert_eq!(self.cols, out.len());
        out.iter_mut().for_each(|o| *o = 0.0);
        for (xi, row) in x.iter().zip(self.rows_iter()) {
            axpy(*xi, row, out);
        }
    }

    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vector, LinalgError> {
        if self.rows != x.len() {
            return Err(LinalgError::DimensionMismatch {
                op: "tr_matvec",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("vector of length {}", x.len()),
            });
        }
        let mut out = vec![0.0; self.cols];
        self.tr_matvec_into(x, &mut out);
        Ok(out.into())
    }

    /// `selfᵀ self`, a `cols x cols` symmetric matrix.
    pub fn gram_cols(&self) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.cols, self.cols);
        for row in self.rows_iter() {
            for i in 0..self.cols {
                let a = row[i];
                if a == 0.0 {
                    continue;
                }
                axpy(a, row, g.row_mut(i));
            }
        }
        g
    }

    /// `self selfᵀ`, a `rows x rows` symmetric matrix.
    pub fn gram_rows(&self) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(
        &self,
        other: &DenseMatrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<DenseMatrix, LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch {
                op,
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Largest singular value of `m` by power iteration on `mᵀm`.
///
/// The start vector is `(1, 2, …, n)` normalized, which is never orthogonal
/// to the dominant singular vector of a mixing-matrix deviation `W - J`
/// the way the all-ones vector is. Convergence is declared when two
/// successive estimates agree to relative tolerance `tol`.
pub fn spectral_norm(m: &DenseMatrix, tol: f64, max_iters: usize) -> Result<f64, LinalgError> {
    if m.rows == 0 || m.cols == 0 {
        return Err(LinalgError::Empty);
    }
    if !(tol > 0.0) {
        return Err(LinalgError::BadTolerance(tol));
    }
    if m.data.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let n = m.cols;
    let mut v: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut mv = vec![0.0; m.rows];
    let mut w = vec![0.0; n];
    let mut estimate = 0.0_f64;
    for iter in 0..max_iters {
        m.matvec_into(&v, &mut mv);
        m.tr_matvec_into(&mv, &mut w);
        // Rayleigh quotient of mᵀm at unit v
        let sigma_sq = dot(&v, &w);
        let next = sigma_sq.max(0.0).sqrt();
        let wn = norm(&w);
        if wn == 0.0 {
            // start vector in the null space; restart from a basis vector
            if iter < n {
                v.iter_mut().for_each(|x| *x = 0.0);
                v[iter] = 1.0;
                continue;
            }
            return Ok(0.0);
        }
        if iter > 0 && (next - estimate).abs() <= tol * next {
            return Ok(next);
        }
        estimate = next;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
    }
    Err(LinalgError::NoConvergence {
        iters: max_iters,
        estimate,
    })
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &DenseMatrix) -> Option<DenseMatrix> {
    let n = a.rows;
    if a.cols != n {
        return None;
    }
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solve `L Lᵀ x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

const CONDITION_LIMIT: f64 = 1e12;

/// Cholesky factor, rejecting factors whose condition estimate
/// `(max L_ii / min L_ii)²` exceeds `1e12`.
pub fn spd_factor(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    if a.rows == 0 {
        return Err(LinalgError::Empty);
    }
    let l = cholesky(a).ok_or(LinalgError::Singular {
        condition: f64::INFINITY,
    })?;
    let (lo, hi) = (0..l.rows).fold((f64::INFINITY, 0.0_f64), |(lo, hi), i| {
        (lo.min(l[(i, i)]), hi.max(l[(i, i)]))
    });
    let condition = (hi / lo).powi(2);
    if !(condition <= CONDITION_LIMIT) {
        return Err(LinalgError::Singular { condition });
    }
    Ok(l)
}

/// Solve a symmetric positive definite system.
pub fn spd_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vector, LinalgError> {
    if b.len() != a.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "spd_solve",
            left: format!("{}x{}", a.rows, a.cols),
            right: format!("vector of length {}", b.len()),
        });
    }
    let l = spd_factor(a)?;
    Ok(cholesky_solve(&l, b).into())
}

/// Minimum-norm solution `Aᵀ(AAᵀ)⁻¹b` of an underdetermined full-row-rank system.
pub fn min_norm_solution(a: &DenseMatrix, b: &[f64]) -> Result<Vector, LinalgError> {
    if a.rows == 0 || a.cols == 0 {
        return Err(LinalgError::Empty);
    }
    if b.len() != a.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "min_norm_solution",
            left: format!("{}x{}", a.rows, a.cols),
            right: format!("rhs of length {}", b.len()),
        });
    }
    let gram = a.gram_rows();
    let z = spd_solve(&gram, b)?;
    let x = a.tr_matvec(&z)?;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(LinalgError::NonFinite("min_norm_solution"));
    }
    Ok(x)
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    let n = a.rows;
    if a.cols != n {
        return Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    let mut m = a.clone();
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok(vec![0.0; n]);
    }
    const MAX_SWEEPS: usize = 100;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring4_metropolis_minus_j() -> DenseMatrix {
        let third = 1.0 / 3.0;
        let mut w = DenseMatrix::zeros(4, 4);
        for i in 0..4 {
            w[(i, i)] = third;
            w[(i, (i + 1) % 4)] = third;
            w[(i, (i + 3) % 4)] = third;
        }
        w.sub(&DenseMatrix::filled(4, 4, 0.25)).unwrap()
    }

    #[test]
    fn spectral_norm_examples() {
        assert_eq!(spectral_norm(&DenseMatrix::zeros(3, 3), 1e-12, 100).unwrap(), 0.0);
        let id = spectral_norm(&DenseMatrix::identity(4), 1e-12, 100).unwrap();
        assert!((id - 1.0).abs() < 1e-14);
        let rho = spectral_norm(&ring4_metropolis_minus_j(), 1e-14, 1000).unwrap();
        assert!((rho - 1.0 / 3.0).abs() < 1e-12, "{rho}");
    }

    #[test]
    fn spectral_norm_reports_non_convergence() {
        // two nearly equal singular values with slow separation
        let m = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.999_999]]).unwrap();
        match spectral_norm(&m, 1e-300, 3) {
            Err(LinalgError::NoConvergence { iters, estimate }) => {
                assert_eq!(iters, 3);
                assert!(estimate > 0.9);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn spectral_norm_rejects_bad_input() {
        assert_eq!(
            spectral_norm(&DenseMatrix::identity(2), 0.0, 10),
            Err(LinalgError::BadTolerance(0.0))
        );
        assert_eq!(
            spectral_norm(&DenseMatrix::zeros(0, 0), 1e-9, 10),
            Err(LinalgError::Empty)
        );
    }

    #[test]
    fn min_norm_examples() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(min_norm_solution(&a, &[2.0]).unwrap().as_slice(), &[2.0, 0.0]);
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let x = min_norm_solution(&a, &[2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let x = min_norm_solution(&DenseMatrix::identity(2), &[3.0, 4.0]).unwrap();
        assert_eq!(x.as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn min_norm_rejects_rank_deficient() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
        assert!(matches!(
            min_norm_solution(&a, &[1.0, 2.0]),
            Err(LinalgError::Singular { .. })
        ));
    }

    #[test]
    fn plumbing_examples() {
        let id = DenseMatrix::identity(2);
        assert_eq!(id.matvec(&[5.0, 7.0]).unwrap().as_slice(), &[5.0, 7.0]);
        assert_eq!(DenseMatrix::zeros(3, 2).frobenius_norm(), 0.0);
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.matmul(&id).unwrap(), a);
        assert_eq!(a.transpose()[(0, 1)], 3.0);
        assert!(a.matvec(&[1.0]).is_err());
        assert!(a.matmul(&DenseMatrix::zeros(3, 1)).is_err());
        assert!(DenseMatrix::from_vec(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        let a = DenseMatrix::from_rows(&[
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ])
        .unwrap();
        let eig = symmetric_eigenvalues(&a).unwrap();
        let s2 = 2.0_f64.sqrt();
        let expect = [2.0 - s2, 2.0, 2.0 + s2];
        for (e, x) in eig.iter().zip(expect) {
            assert!((e - x).abs() < 1e-13, "{eig:?}");
        }
    }
}
