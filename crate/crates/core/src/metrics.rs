//! Recovery quality measures.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, symmetric_eigen, Matrix, OrthonormalBasis};
use crate::stream::SampleStream;

const UNIT_TOL: f64 = 1e-8;

/// Sine of the largest principal angle, in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct DistanceValue(f64);

impl DistanceValue {
    /// Clamps round-off excursions into `[0, 1]`.
    pub fn new(value: f64) -> Self {
        DistanceValue(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for DistanceValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// `‖(I - UUᵀ)Q‖₂ = ‖U⊥ᵀQ‖₂`.
///
/// Zero iff `span(Q) ⊆ span(U)`. Neither `U⊥` nor the `p × k` residual is
/// built: residual columns are formed one pair at a time to fill their
/// `k × k` Gram, so scratch is `O(p + k²)`.
pub fn principal_angle_distance(
    u: &OrthonormalBasis,
    q: &OrthonormalBasis,
) -> Result<DistanceValue> {
    if u.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: q.dim(),
        });
    }
    let m = q.matrix();
    Ok(distance_from_columns(u, q.k(), |j, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = m.get(i, j);
        }
    }))
}

/// [`principal_angle_distance`] for an orthonormal set stored as the rows
/// of `qt` (`k × p`).
pub fn transposed_distance(u: &OrthonormalBasis, qt: &Matrix) -> Result<DistanceValue> {
    if u.dim() != qt.cols() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: qt.cols(),
        });
    }
    Ok(distance_from_columns(u, qt.rows(), |j, out| {
        out.copy_from_slice(qt.row(j))
    }))
}

/// Same as [`principal_angle_distance`] for a single unit vector `q`.
pub fn vector_distance(u: &OrthonormalBasis, q: &[f64]) -> Result<DistanceValue> {
    if u.dim() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: q.len(),
        });
    }
    Ok(distance_from_columns(u, 1, |_, out| out.copy_from_slice(q)))
}

fn residual_into(u: &OrthonormalBasis, q: &[f64], coeffs: &mut [f64], out: &mut [f64]) {
    let um = u.matrix();
    coeffs.iter_mut().for_each(|c| *c = 0.0);
    for (&qi, row) in q.iter().zip(um.as_slice().chunks_exact(u.k())) {
        for (c, &uij) in coeffs.iter_mut().zip(row) {
            *c += qi * uij;
        }
    }
    for ((o, &qi), row) in out.iter_mut().zip(q).zip(um.as_slice().chunks_exact(u.k())) {
        *o = qi - dot(row, coeffs);
    }
}

fn distance_from_columns<F: Fn(usize, &mut [f64])>(
    u: &OrthonormalBasis,
    k: usize,
    column: F,
) -> DistanceValue {
    let p = u.dim();
    let mut coeffs = vec![0.0; u.k()];
    let (mut qa, mut ra) = (vec![0.0; p], vec![0.0; p]);
    let (mut qb, mut rb) = (vec![0.0; p], vec![0.0; p]);
    if k == 1 {
        column(0, &mut qa);
        residual_into(u, &qa, &mut coeffs, &mut ra);
        return DistanceValue::new(norm(&ra));
    }
    let mut gram = Matrix::zeros(k, k);
    for a in 0..k {
        column(a, &mut qa);
        residual_into(u, &qa, &mut coeffs, &mut ra);
        gram.set(a, a, dot(&ra, &ra));
        for b in a + 1..k {
            column(b, &mut qb);
            residual_into(u, &qb, &mut coeffs, &mut rb);
            let g = dot(&ra, &rb);
            gram.set(a, b, g);
            gram.set(b, a, g);
        }
    }
    let top = symmetric_eigen(&gram).expect("square gram").values[0];
    DistanceValue::new(top.max(0.0).sqrt())
}

fn check_unit_pair(q: &[f64], u: &[f64]) -> Result<()> {
    if q.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: q.len(),
        });
    }
    for (name, v) in [("q", q), ("u", u)] {
        let n = norm(v);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidParameter(format!(
                "{name} must be a unit vector, has norm {n}"
            )));
        }
    }
    Ok(())
}

/// `min(‖q - u‖, ‖q + u‖)`: the rank-one error modulo the sign ambiguity.
pub fn rank1_recovery_error(q: &[f64], u: &[f64]) -> Result<f64> {
    check_unit_pair(q, u)?;
    let (mut minus, mut plus) = (0.0, 0.0);
    for (a, b) in q.iter().zip(u) {
        minus += (a - b) * (a - b);
        plus += (a + b) * (a + b);
    }
    Ok(minus.min(plus).sqrt())
}

/// `δ = 1 - ⟨q, u⟩²`, the squared sine between two unit vectors.
pub fn sin_squared(q: &[f64], u: &[f64]) -> f64 {
    (1.0 - dot(q, u).powi(2)).clamp(0.0, 1.0)
}

/// Uncentered explained variance `Tr(VᵀXXᵀV) / Tr(XXᵀ)`, in one pass.
pub fn explained_variance<S: SampleStream + ?Sized>(
    v: &OrthonormalBasis,
    eval_stream: &mut S,
) -> Result<f64> {
    if eval_stream.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            found: eval_stream.dim(),
        });
    }
    let mut captured = 0.0;
    let mut total = 0.0;
    let mut seen = 0usize;
    let mut coeffs = vec![0.0; v.k()];
    while let Some(x) = eval_stream.next_sample() {
        coeffs.iter_mut().for_each(|c| *c = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (c, &vij) in coeffs.iter_mut().zip(v.matrix().row(i)) {
                *c += xi * vij;
            }
        }
        captured += dot(&coeffs, &coeffs);
        total += dot(x, x);
        seen += 1;
    }
    if seen == 0 {
        return Err(Error::EmptyStream);
    }
    if total == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    Ok((captured / total).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::InMemoryStream;

    fn basis(cols: &[Vec<f64>]) -> OrthonormalBasis {
        OrthonormalBasis::new(Matrix::from_columns(cols).unwrap()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let e1 = basis(&[vec![1.0, 0.0]]);
        let e2 = basis(&[vec![0.0, 1.0]]);
        assert_eq!(principal_angle_distance(&e1, &e1).unwrap().value(), 0.0);
        assert!((principal_angle_distance(&e1, &e2).unwrap().value() - 1.0).abs() < 1e-15);
        let t = 30f64.to_radians();
        let q = basis(&[vec![t.cos(), t.sin()]]);
        assert!((principal_angle_distance(&e1, &q).unwrap().value() - 0.5).abs() < 1e-12);
        assert!((vector_distance(&e1, &q.column(0)).unwrap().value() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn distance_dimension_mismatch() {
        let a = OrthonormalBasis::canonical(3, 1).unwrap();
        let b = OrthonormalBasis::canonical(4, 1).unwrap();
        assert!(matches!(
            principal_angle_distance(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rank1_error_examples() {
        let u = [0.6, 0.8];
        assert_eq!(rank1_recovery_error(&u, &u).unwrap(), 0.0);
        assert_eq!(rank1_recovery_error(&[-0.6, -0.8], &u).unwrap(), 0.0);
        let perp = [0.8, -0.6];
        assert!((rank1_recovery_error(&perp, &u).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(rank1_recovery_error(&[1.0, 1.0], &u).is_err());
    }

    #[test]
    fn sin_squared_examples() {
        assert_eq!(sin_squared(&[1.0, 0.0], &[1.0, 0.0]), 0.0);
        assert_eq!(sin_squared(&[0.0, 1.0], &[1.0, 0.0]), 1.0);
    }

    #[test]
    fn explained_variance_full_basis_and_in_span() {
        let data = vec![vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 0.0]];
        let full = OrthonormalBasis::canonical(3, 3).unwrap();
        let mut s = InMemoryStream::for_evaluation(data).unwrap();
        assert!((explained_variance(&full, &mut s).unwrap() - 1.0).abs() < 1e-15);

        let v = OrthonormalBasis::canonical(3, 2).unwrap();
        let mut s = InMemoryStream::new(vec![vec![1.0, 2.0, 0.0], vec![0.0, -3.0, 0.0]]).unwrap();
        assert!((explained_variance(&v, &mut s).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn explained_variance_errors() {
        let v = OrthonormalBasis::canonical(2, 1).unwrap();
        let mut zero = InMemoryStream::new(vec![vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            explained_variance(&v, &mut zero),
            Err(Error::ZeroEnergy)
        ));
        let mut s = InMemoryStream::new(vec![vec![1.0, 0.0]]).unwrap();
        while s.next_sample().is_some() {}
        assert!(matches!(
            explained_variance(&v, &mut s),
            Err(Error::EmptyStream)
        ));
    }
}
