//! Rectangular Cayley transformation, its constructive inverse, and the
//! sign-matrix selection that makes the inverse applicable to any
//! semi-orthogonal target.
//!
//! The forward map sends free blocks X (r×r) and Y ((q−r)×r) to a q×r
//! matrix with orthonormal columns:
//!
//! ```text
//! G = [ (I − Z)(I + Z)^{-1} ]          Z = X − X^T + Y^T Y
//!     [      −2Y(I + Z)^{-1} ]
//! ```
//!
//! I + Z is always invertible because its symmetric part is I + Y^T Y.
//! The inverse construction recovers some (X, Y) from any semi-orthogonal
//! G whose top r×r block U has I + U invertible; re-signing columns with
//! [`choose_sign_matrix`] always produces such a block.

use thiserror::Error;

use crate::matrix::{solve, Lu, Matrix};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CayleyError {
    /// I + U is numerically singular for the given partition; re-sign the
    /// columns via [`choose_sign_matrix`] and retry.
    #[error("top block of the semi-orthogonal input has I + U numerically singular")]
    SingularTopBlock,
}

/// Free parameters of the rectangular Cayley transformation.
#[derive(Clone, Debug)]
pub struct CayleyParam {
    /// r×r free block.
    pub x: Matrix,
    /// (q−r)×r free block; zero rows when q = r.
    pub y: Matrix,
}

impl CayleyParam {
    pub fn new(x: Matrix, y: Matrix) -> Self {
        assert_eq!(x.rows(), x.cols(), "X block must be square");
        assert_eq!(y.cols(), x.cols(), "Y block must have r columns");
        CayleyParam { x, y }
    }

    pub fn zeros(q: usize, r: usize) -> Self {
        assert!(q >= r, "cayley parameters need q >= r");
        CayleyParam {
            x: Matrix::zeros(r, r),
            y: Matrix::zeros(q - r, r),
        }
    }

    /// Output rows q = r + rows(Y).
    pub fn q(&self) -> usize {
        self.x.rows() + self.y.rows()
    }

    pub fn r(&self) -> usize {
        self.x.cols()
    }

    pub fn z(&self) -> Matrix {
        let skew = self.x.sub(&self.x.transpose());
        skew.add(&self.y.transpose().matmul(&self.y))
    }
}

/// q×r matrix with orthonormal columns (G^T G = I within 1e-9).
#[derive(Clone, Debug)]
pub struct SemiOrthogonal {
    g: Matrix,
}

impl SemiOrthogonal {
    /// Validating constructor for externally supplied matrices.
    pub fn new(g: Matrix) -> Self {
        assert!(g.rows() >= g.cols(), "semi-orthogonal matrices are tall");
        let r = g.cols();
        let defect = g.transpose().matmul(&g).sub(&Matrix::identity(r)).max_abs();
        assert!(defect < 1e-9, "columns are not orthonormal (defect {defect:e})");
        SemiOrthogonal { g }
    }

    /// For outputs of [`cayley_forward`], which are orthonormal by
    /// construction.
    pub(crate) fn from_forward(g: Matrix) -> Self {
        SemiOrthogonal { g }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.g
    }

    pub fn into_matrix(self) -> Matrix {
        self.g
    }
}

/// Forward Cayley transformation.
pub fn cayley_forward(f: &CayleyParam) -> SemiOrthogonal {
    let r = f.r();
    let z = f.z();
    let id = Matrix::identity(r);
    let m = id.add(&z);
    // top = (I−Z) M^{-1}, bottom = −2Y M^{-1}: both via one LU of M^T.
    let lu_mt = Lu::factor(&m.transpose());
    let top = lu_mt.solve(&id.sub(&z).transpose()).transpose();
    let bottom = if f.y.rows() > 0 {
        lu_mt.solve(&f.y.scale(-2.0).transpose()).transpose()
    } else {
        Matrix::zeros(0, r)
    };
    SemiOrthogonal::from_forward(top.vstack(&bottom))
}

/// Constructive inverse of the Cayley transformation.
///
/// X is pinned to Z/2 (the symmetric part of X is not identifiable), so
/// only the forward round trip is contracted, never parameter equality.
pub fn cayley_inverse(g: &SemiOrthogonal) -> Result<CayleyParam, CayleyError> {
    let gm = g.matrix();
    let r = gm.cols();
    let u = gm.row_block(0, r);
    let v = gm.row_block(r, gm.rows());
    let id = Matrix::identity(r);
    let i_plus_u = id.add(&u);
    let smallest = crate::svd::svd(&i_plus_u)
        .sigma
        .last()
        .copied()
        .unwrap_or(0.0);
    if smallest <= 1e-10 {
        return Err(CayleyError::SingularTopBlock);
    }
    let z = solve(&i_plus_u, &id.sub(&u));
    let x = z.scale(0.5);
    let y = if v.rows() > 0 {
        v.matmul(&id.add(&z)).scale(-0.5)
    } else {
        Matrix::zeros(0, r)
    };
    Ok(CayleyParam::new(x, y))
}

/// Pick signs s ∈ {−1, +1}^r so that I + diag(s)·Q^T is invertible.
///
/// Follows the iterative rank-one construction: A_1 = I, and for each k
/// the sign s_k = sgn(q_k^T A_k^{-1} e_k) (with sgn(0) = +1) makes the
/// Sherman-Morrison denominator 1 + |q_k^T A_k^{-1} e_k| ≥ 1, so every
/// A_{k+1} = A_k + s_k e_k q_k^T stays invertible, and A_{r+1} = I + PQ^T.
pub fn choose_sign_matrix(q_mat: &Matrix) -> Vec<f64> {
    assert_eq!(q_mat.rows(), q_mat.cols(), "sign selection needs a square matrix");
    let r = q_mat.rows();
    let mut ainv = Matrix::identity(r);
    let mut signs = Vec::with_capacity(r);
    for k in 0..r {
        // d = q_k^T A_k^{-1} e_k, with A_k^{-1} e_k the k-th column of ainv
        let mut d = 0.0;
        for i in 0..r {
            d += q_mat.get(i, k) * ainv.get(i, k);
        }
        let s = if d >= 0.0 { 1.0 } else { -1.0 };
        signs.push(s);
        let denom = 1.0 + s * d;
        // ainv ← ainv − s (ainv e_k)(q_k^T ainv) / denom
        let col: Vec<f64> = (0..r).map(|i| ainv.get(i, k)).collect();
        let row: Vec<f64> = (0..r)
            .map(|j| (0..r).map(|i| q_mat.get(i, k) * ainv.get(i, j)).sum())
            .collect();
        let scale = s / denom;
        for i in 0..r {
            for j in 0..r {
                let v = ainv.get(i, j) - scale * col[i] * row[j];
                ainv.set(i, j, v);
            }
        }
    }
    signs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Prng;

    fn random_param(q: usize, r: usize, rng: &mut Prng) -> CayleyParam {
        CayleyParam::new(
            Matrix::from_stream(r, r, rng, |g| g.gaussian()),
            Matrix::from_stream(q - r, r, rng, |g| g.gaussian()),
        )
    }

    fn gram_defect(g: &Matrix) -> f64 {
        let r = g.cols();
        g.transpose().matmul(g).sub(&Matrix::identity(r)).max_abs()
    }

    #[test]
    fn forward_at_zero_is_identity_stack() {
        let g = cayley_forward(&CayleyParam::zeros(5, 2));
        let expected = Matrix::identity(2).vstack(&Matrix::zeros(3, 2));
        assert!(g.matrix().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn scalar_case_by_hand() {
        // q=2, r=1, X=0, Y=1: Z = 1, top = 0, bottom = -2/2 = -1.
        let f = CayleyParam::new(Matrix::zeros(1, 1), Matrix::new(1, 1, vec![1.0]));
        let g = cayley_forward(&f);
        assert!((g.matrix().get(0, 0) - 0.0).abs() < 1e-15);
        assert!((g.matrix().get(1, 0) - (-1.0)).abs() < 1e-15);
    }

    #[test]
    fn forward_output_is_semi_orthogonal() {
        let mut rng = Prng::new(2);
        let g = cayley_forward(&random_param(7, 3, &mut rng));
        assert!(gram_defect(g.matrix()) < 1e-12);
    }

    #[test]
    fn forward_orthogonality_across_shapes() {
        let mut rng = Prng::new(3);
        for &(q, r) in &[(2usize, 1usize), (5, 3), (8, 8), (20, 6)] {
            for _ in 0..20 {
                let g = cayley_forward(&random_param(q, r, &mut rng));
                assert!(
                    gram_defect(g.matrix()) <= 1e-11 * r as f64,
                    "shape ({q},{r})"
                );
            }
        }
    }

    #[test]
    fn inverse_of_identity_stack_is_zero() {
        let g = SemiOrthogonal::new(Matrix::identity(3).vstack(&Matrix::zeros(2, 3)));
        let f = cayley_inverse(&g).unwrap();
        assert!(f.x.max_abs() < 1e-14);
        assert!(f.y.max_abs() < 1e-14);
    }

    #[test]
    fn round_trip_on_cayley_range() {
        let mut rng = Prng::new(4);
        let f = random_param(9, 4, &mut rng);
        let g = cayley_forward(&f);
        let f2 = cayley_inverse(&g).unwrap();
        let g2 = cayley_forward(&f2);
        assert!(g2.matrix().max_abs_diff(g.matrix()) < 1e-9);
    }

    #[test]
    fn minus_identity_top_block_errors() {
        let top = Matrix::identity(3).scale(-1.0);
        let g = SemiOrthogonal::new(top.vstack(&Matrix::zeros(2, 3)));
        assert!(matches!(
            cayley_inverse(&g),
            Err(CayleyError::SingularTopBlock)
        ));
    }

    #[test]
    fn sign_matrix_on_identity() {
        let p = choose_sign_matrix(&Matrix::identity(4));
        assert_eq!(p, vec![1.0; 4]);
        let p = choose_sign_matrix(&Matrix::identity(4).scale(-1.0));
        assert_eq!(p, vec![-1.0; 4]);
    }

    #[test]
    fn sign_matrix_makes_invertible() {
        let mut rng = Prng::new(6);
        for trial in 0..50 {
            let r = 1 + (trial % 6);
            let q = Matrix::from_stream(r, r, &mut rng, |g| g.gaussian());
            let p = choose_sign_matrix(&q);
            let mut m = Matrix::identity(r);
            for i in 0..r {
                for j in 0..r {
                    let v = m.get(i, j) + p[i] * q.get(j, i);
                    m.set(i, j, v);
                }
            }
            let smallest = crate::svd::svd(&m).sigma.last().copied().unwrap();
            assert!(smallest > 1e-8, "trial {trial}: smallest sigma {smallest:e}");
        }
    }

    #[test]
    fn sign_matrix_on_seeded_orthogonal() {
        let mut rng = Prng::new(7);
        let a = Matrix::from_stream(6, 6, &mut rng, |g| g.gaussian());
        let q = crate::svd::svd(&a).u; // 6x6 orthogonal
        let p = choose_sign_matrix(&q);
        let pq_t = Matrix::from_fn(6, 6, |i, j| p[i] * q.get(j, i));
        let m = Matrix::identity(6).add(&pq_t);
        let smallest = crate::svd::svd(&m).sigma.last().copied().unwrap();
        assert!(smallest > 1e-8);
    }

    #[test]
    fn square_case_has_empty_y() {
        let mut rng = Prng::new(8);
        let f = random_param(4, 4, &mut rng);
        assert_eq!(f.y.rows(), 0);
        let g = cayley_forward(&f);
        assert!(gram_defect(g.matrix()) < 1e-12);
        let f2 = cayley_inverse(&g).unwrap();
        let g2 = cayley_forward(&f2);
        assert!(g2.matrix().max_abs_diff(g.matrix()) < 1e-9);
    }

    #[test]
    fn z_symmetric_part_is_gram_of_y() {
        let mut rng = Prng::new(9);
        let f = random_param(6, 3, &mut rng);
        let z = f.z();
        let sym = z.add(&z.transpose()).scale(0.5);
        let gram = f.y.transpose().matmul(&f.y);
        assert!(sym.max_abs_diff(&gram) < 1e-12);
    }
}
