//! Dense linear algebra sized for tall `p × k` matrices.
//!
//! Everything here works on row-major `f64` storage. The decompositions
//! that matter for the streaming path (Householder QR, polar projection)
//! never form anything larger than `p × k` plus `k × k` scratch.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

/// Tolerance for `QᵀQ = I`, per entry.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Relative threshold below which a pivot (or singular value) counts as zero.
pub const RANK_TOL: f64 = 1e-12;

const SPECTRAL_MAX_ITERS: usize = 1000;
const SPECTRAL_RAYLEIGH_TOL: f64 = 1e-12;
/// Beyond this size the Gram matrix is applied implicitly instead of formed.
const EXPLICIT_GRAM_LIMIT: usize = 512;
pub const DIRECT_EIGEN_LIMIT: usize = 32;
const SPECTRAL_START_SEED: u64 = 0x005e_ed0f_5bec;

/// Row-major dense matrix with finite entries and at least one row and column.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        Matrix::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidMatrix("ragged columns".into()));
        }
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Matrix::from_vec(rows, cols, data)
    }

    pub fn column_vector(v: &[f64]) -> Result<Self> {
        Matrix::from_vec(v.len(), 1, v.to_vec())
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        let n = d.len();
        let mut data = vec![0.0; n * n];
        for (i, &v) in d.iter().enumerate() {
            data[i * n + i] = v;
        }
        Matrix::from_vec(n, n, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(l)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for l in 0..self.rows {
            let b_row = other.row(l);
            for (i, &a) in self.row(l).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · v` for a vector `v` of length `cols`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `selfᵀ · v` for a vector `v` of length `rows`.
    pub fn t_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: v.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            axpy(vi, self.row(i), &mut out);
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self.get(i, j) == 0.0))
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: other.rows,
            });
        }
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.cols,
            });
        }
        Ok(())
    }
}

/// A `p × k` matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalBasis {
    columns: Matrix,
}

impl OrthonormalBasis {
    /// Checks `QᵀQ = I` to [`ORTHONORMAL_TOL`] before accepting `columns`.
    pub fn new(columns: Matrix) -> Result<Self> {
        if columns.cols() > columns.rows() {
            return Err(Error::InvalidMatrix(format!(
                "basis has {} columns in dimension {}",
                columns.cols(),
                columns.rows()
            )));
        }
        let basis = OrthonormalBasis { columns };
        let deviation = basis.orthonormality_error();
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(basis)
    }

    pub(crate) fn from_trusted(columns: Matrix) -> Self {
        debug_assert!(columns.cols() <= columns.rows());
        OrthonormalBasis { columns }
    }

    /// The first `k` standard basis vectors of `R^dim`.
    pub fn canonical(dim: usize, k: usize) -> Result<Self> {
        if k == 0 || k > dim {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= k <= dim, got k={k}, dim={dim}"
            )));
        }
        let mut m = Matrix::zeros(dim, k);
        for j in 0..k {
            m.set(j, j, 1.0);
        }
        Ok(OrthonormalBasis { columns: m })
    }

    /// Ambient dimension `p`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.columns.rows()
    }

    /// Subspace dimension `k`.
    #[inline]
    pub fn k(&self) -> usize {
        self.columns.cols()
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.columns
    }

    pub fn into_matrix(self) -> Matrix {
        self.columns
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.columns.column(j)
    }

    /// Coordinates `Qᵀx` of a vector in this basis.
    pub fn coefficients(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.columns.t_mul_vec(x)
    }

    /// Largest entry of `|QᵀQ - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self
            .columns
            .t_matmul(&self.columns)
            .expect("gram of a matrix with itself");
        gram.max_abs_diff(&Matrix::identity(self.k()))
            .expect("gram is k x k")
    }

    /// Dense projector `QQᵀ`. Test/oracle use only; this is `p × p`.
    pub fn projector(&self) -> Matrix {
        self.columns
            .matmul(&self.columns.transpose())
            .expect("Q Qᵀ shapes agree")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha · x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Thin Householder QR: `m = Q·R` with `Q` `p × k` orthonormal and `R`
/// `k × k` upper-triangular with strictly positive diagonal.
pub fn qr_decompose(m: &Matrix) -> Result<(OrthonormalBasis, Matrix)> {
    qr_decompose_owned(m.clone())
}

/// Same as [`qr_decompose`], taking ownership of `m`.
pub fn qr_decompose_owned(a: Matrix) -> Result<(OrthonormalBasis, Matrix)> {
    if a.cols > a.rows {
        return Err(Error::InvalidMatrix(format!(
            "thin QR needs rows >= cols, got {}x{}",
            a.rows, a.cols
        )));
    }
    let at = a.transpose();
    drop(a);
    let (qt, r) = qr_decompose_columns(at)?;
    Ok((OrthonormalBasis::from_trusted(qt.transpose()), r))
}

/// Thin QR of the `p × k` matrix whose columns are the rows of `at`
/// (`k × p`). Returns `Qᵀ` in the same layout, plus `R`.
///
/// Column-contiguous storage keeps every inner loop a length-`p` sweep.
/// `at` is overwritten by the reflectors and dropped before returning.
pub fn qr_decompose_columns(mut at: Matrix) -> Result<(Matrix, Matrix)> {
    let k = at.rows;
    let p = at.cols;
    if k > p {
        return Err(Error::InvalidMatrix(format!(
            "thin QR needs rows >= cols, got {p}x{k}"
        )));
    }
    let scale = (0..k).map(|j| norm(at.row(j))).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::RankDeficient { column: 0 });
    }

    // Reflector j lives in at[j, j..]; R's strict upper part stays in place.
    let mut rdiag = vec![0.0; k];
    let mut vnorm2 = vec![0.0; k];
    for j in 0..k {
        let (head, tail) = at.data.split_at_mut((j + 1) * p);
        let v = &mut head[j * p + j..];
        let alpha = norm(v);
        if alpha <= RANK_TOL * scale {
            return Err(Error::RankDeficient { column: j });
        }
        let x0 = v[0];
        let sign = if x0 >= 0.0 { 1.0 } else { -1.0 };
        v[0] = x0 + sign * alpha;
        rdiag[j] = -sign * alpha;
        // ‖v‖² = ‖x‖² - x0² + (x0 + sign·alpha)² = 2·alpha·(alpha + |x0|)
        let vv = 2.0 * alpha * (alpha + x0.abs());
        vnorm2[j] = vv;
        for col in tail.chunks_exact_mut(p) {
            let c = &mut col[j..];
            let f = 2.0 * dot(v, c) / vv;
            axpy(-f, v, c);
        }
    }

    let mut r = Matrix::zeros(k, k);
    for i in 0..k {
        r.set(i, i, rdiag[i]);
        for c in i + 1..k {
            r.set(i, c, at.get(c, i));
        }
    }

    // Q = H_0 · … · H_{k-1} · [I_k; 0], accumulated backwards.
    let mut qt = Matrix::zeros(k, p);
    for j in 0..k {
        qt.set(j, j, 1.0);
    }
    for j in (0..k).rev() {
        let v = &at.row(j)[j..];
        let vv = vnorm2[j];
        for col in qt.data.chunks_exact_mut(p).skip(j) {
            let c = &mut col[j..];
            let d = dot(v, c);
            if d == 0.0 {
                continue;
            }
            axpy(-2.0 * d / vv, v, c);
        }
    }
    drop(at);

    for j in 0..k {
        if r.get(j, j) < 0.0 {
            for c in j..k {
                r.set(j, c, -r.get(j, c));
            }
            qt.data[j * p..(j + 1) * p]
                .iter_mut()
                .for_each(|v| *v = -*v);
        }
    }
    Ok((qt, r))
}

/// Largest singular value, from the smaller Gram matrix: Jacobi when that
/// is at most [`DIRECT_EIGEN_LIMIT`] wide, power iteration otherwise.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.data.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let tall = m.cols <= m.rows;
    let n = if tall { m.cols } else { m.rows };
    if n == 1 {
        return m.frobenius_norm();
    }

    if n <= DIRECT_EIGEN_LIMIT {
        let gram = if tall {
            m.t_matmul(m)
        } else {
            m.matmul(&m.transpose())
        }
        .expect("square gram");
        let top = symmetric_eigen(&gram).expect("square gram").values[0];
        return top.max(0.0).sqrt();
    }

    let explicit = if n <= EXPLICIT_GRAM_LIMIT {
        Some(if tall {
            m.t_matmul(m).expect("square gram")
        } else {
            m.matmul(&m.transpose()).expect("square gram")
        })
    } else {
        None
    };
    let apply = |v: &[f64]| -> Vec<f64> {
        match &explicit {
            Some(g) => g.mul_vec(v).expect("gram is n x n"),
            None if tall => m.t_mul_vec(&m.mul_vec(v).expect("cols")).expect("rows"),
            None => m.mul_vec(&m.t_mul_vec(v).expect("rows")).expect("cols"),
        }
    };

    let mut rng = rng::seeded(SPECTRAL_START_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut rayleigh = 0.0;
    for _ in 0..SPECTRAL_MAX_ITERS {
        let mut w = apply(&v);
        let next = dot(&v, &w);
        let nw = norm(&w);
        if nw == 0.0 {
            break;
        }
        w.iter_mut().for_each(|x| *x /= nw);
        v = w;
        let converged = (next - rayleigh).abs() <= SPECTRAL_RAYLEIGH_TOL * next.abs();
        rayleigh = next;
        if converged {
            break;
        }
    }
    // A final Rayleigh quotient on the converged direction.
    let w = apply(&v);
    dot(&v, &w).max(rayleigh).max(0.0).sqrt()
}

/// `p × k` matrix of i.i.d. standard normals, filled row by row.
///
/// # Panics
/// If `p` or `k` is zero.
pub fn sample_gaussian_matrix<R: Rng + ?Sized>(p: usize, k: usize, rng: &mut R) -> Matrix {
    let mut m = Matrix::zeros(p, k);
    m.data
        .iter_mut()
        .for_each(|x| *x = rng.sample(StandardNormal));
    m
}

/// Eigen-decomposition of a small symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: Matrix,
}

/// Cyclic Jacobi for symmetric `n × n` input. Meant for `k × k` Gram
/// matrices; cost is O(n³) per sweep.
pub fn symmetric_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.cols,
        });
    }
    let mut m = a.clone();
    // symmetrize against round-off in the caller's product
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, s);
            m.set(j, i, s);
        }
    }
    let mut v = Matrix::identity(n);
    let total = m.frobenius_norm();

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || off == 0.0 {
            break;
        }
        for pi in 0..n {
            for qi in pi + 1..n {
                let apq = m.get(pi, qi);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(pi, pi);
                let aqq = m.get(qi, qi);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let mrp = m.get(r, pi);
                    let mrq = m.get(r, qi);
                    m.set(r, pi, c * mrp - s * mrq);
                    m.set(r, qi, s * mrp + c * mrq);
                }
                for r in 0..n {
                    let mpr = m.get(pi, r);
                    let mqr = m.get(qi, r);
                    m.set(pi, r, c * mpr - s * mqr);
                    m.set(qi, r, s * mpr + c * mqr);
                }
                for r in 0..n {
                    let vrp = v.get(r, pi);
                    let vrq = v.get(r, qi);
                    v.set(r, pi, c * vrp - s * vrq);
                    v.set(r, qi, s * vrp + c * vrq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, dst, v.get(r, src));
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Singular values (descending) of a matrix with few columns, via its Gram.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let gram = if m.cols <= m.rows {
        m.t_matmul(m)
    } else {
        m.matmul(&m.transpose())
    }
    .expect("square gram");
    symmetric_eigen(&gram)
        .expect("gram is square")
        .values
        .into_iter()
        .map(|v| v.max(0.0).sqrt())
        .collect()
}

/// `U·Vᵀ` from the thin SVD `M = U·Σ·Vᵀ` (all singular values set to one).
///
/// Computed as `M · W · diag(μ^{-1/2}) · Wᵀ` from the eigenpairs `(μ, W)` of
/// the `k × k` Gram `MᵀM`.
pub fn polar_project(m: &Matrix) -> Result<OrthonormalBasis> {
    let k = m.cols;
    if k > m.rows {
        return Err(Error::InvalidMatrix(format!(
            "polar projection needs rows >= cols, got {}x{k}",
            m.rows
        )));
    }
    let gram = m.t_matmul(m)?;
    let eig = symmetric_eigen(&gram)?;
    let top = eig.values[0].max(0.0).sqrt();
    if top == 0.0 {
        return Err(Error::RankDeficient { column: 0 });
    }
    if let Some(rank) = eig
        .values
        .iter()
        .position(|&mu| mu.max(0.0).sqrt() <= RANK_TOL * top)
    {
        return Err(Error::RankDeficient { column: rank });
    }
    let w = &eig.vectors;
    let mut inv_sqrt = Matrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            let s: f64 = (0..k)
                .map(|l| w.get(a, l) * w.get(b, l) / eig.values[l].sqrt())
                .sum();
            inv_sqrt.set(a, b, s);
        }
    }
    Ok(OrthonormalBasis::from_trusted(m.matmul(&inv_sqrt)?))
}
