//! Spectral primitives: one-sided Jacobi SVD, Schatten norms,
//! singular-value dominance, and orthonormal basis completion.

use crate::matrix::Matrix;
use crate::rng::Prng;

/// Sweep budget for the Jacobi iteration. Exceeding it means the input
/// was not finite-well-scaled, which the constructors rule out.
const MAX_SWEEPS: usize = 60;

/// Convergence threshold on off-diagonal Gram terms, relative to the
/// Frobenius norm of the (internally unit-scaled) input.
const GRAM_TOL: f64 = 1e-12;

/// Fixed stream for basis-completion candidates, so `svd` and
/// `orthonormal_completion` are deterministic functions of their inputs.
const COMPLETION_SEED: u64 = 0x5eed_ba5e_0c0a_17e5;

/// Reduced SVD `m = u * diag(sigma) * v^T` with `k = min(rows, cols)`.
///
/// `u` (m×k) and `v` (n×k) have orthonormal columns and `sigma` is
/// non-negative and non-increasing.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

/// Strictly positive per-singular-value bounds `s`, i.e. S = diag(s).
#[derive(Clone, Debug)]
pub struct SingularBudget {
    s: Vec<f64>,
}

impl SingularBudget {
    pub fn new(s: Vec<f64>) -> Self {
        assert!(!s.is_empty(), "budget must have at least one entry");
        assert!(
            s.iter().all(|&x| x.is_finite() && x > 0.0),
            "all budget entries must be strictly positive"
        );
        SingularBudget { s }
    }

    pub fn uniform(rank: usize, value: f64) -> Self {
        SingularBudget::new(vec![value; rank])
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    /// Indices that sort the budget descending (stable), plus the sorted
    /// values. The sorted view is what σ-dominance compares against.
    pub fn sorted_desc(&self) -> (Vec<usize>, Vec<f64>) {
        let mut idx: Vec<usize> = (0..self.s.len()).collect();
        idx.sort_by(|&a, &b| self.s[b].partial_cmp(&self.s[a]).unwrap());
        let sorted = idx.iter().map(|&i| self.s[i]).collect();
        (idx, sorted)
    }
}

/// Schatten-norm exponent; the crate supports p ∈ {1, 2, ∞}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchattenP {
    One,
    Two,
    Infinity,
}

impl SchattenP {
    pub fn vector_norm(self, x: &[f64]) -> f64 {
        match self {
            SchattenP::One => x.iter().map(|v| v.abs()).sum(),
            SchattenP::Two => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            SchattenP::Infinity => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

// ── one-sided Jacobi core ────────────────────────────────────────────

/// Orthogonalize the rows of `work` (each row is a column of the matrix
/// being decomposed) by Jacobi rotations, accumulating the same
/// rotations into the rows of `vt`.
fn jacobi_rows(work: &mut Matrix, vt: &mut Matrix) {
    let n = work.rows();
    let m = work.cols();
    if n < 2 {
        return;
    }
    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                {
                    let (ri, rj) = row_pair(work, i, j, m);
                    for k in 0..m {
                        alpha += ri[k] * ri[k];
                        beta += rj[k] * rj[k];
                        gamma += ri[k] * rj[k];
                    }
                }
                if gamma.abs() <= GRAM_TOL {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(work, i, j, m, c, s);
                rotate_rows(vt, i, j, vt.cols(), c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    assert!(converged, "jacobi svd failed to converge within the sweep budget");
}

#[inline]
fn row_pair<'a>(m: &'a Matrix, i: usize, j: usize, len: usize) -> (&'a [f64], &'a [f64]) {
    let data = m.data();
    (&data[i * len..i * len + len], &data[j * len..j * len + len])
}

#[inline]
fn rotate_rows(m: &mut Matrix, i: usize, j: usize, len: usize, c: f64, s: f64) {
    debug_assert!(i < j);
    let data = m.data_mut();
    let (head, tail) = data.split_at_mut(j * len);
    let ri = &mut head[i * len..i * len + len];
    let rj = &mut tail[..len];
    for k in 0..len {
        let a = ri[k];
        let b = rj[k];
        ri[k] = c * a - s * b;
        rj[k] = s * a + c * b;
    }
}

/// SVD of `m`. Deterministic for fixed input; always converges for
/// finite input at desk scale.
pub fn svd(m: &Matrix) -> SvdResult {
    svd_with_guess(m, None)
}

/// SVD with an optional right-singular-vector warm start (n×n
/// orthogonal). A good guess cuts the Jacobi sweep count when a slowly
/// changing matrix is decomposed repeatedly.
pub fn svd_with_guess(m: &Matrix, v_guess: Option<&Matrix>) -> SvdResult {
    if m.rows() >= m.cols() {
        svd_tall(m, v_guess)
    } else {
        let r = svd_tall(&m.transpose(), None);
        SvdResult {
            u: r.v,
            sigma: r.sigma,
            v: r.u,
        }
    }
}

fn svd_tall(a: &Matrix, v_guess: Option<&Matrix>) -> SvdResult {
    let m = a.rows();
    let n = a.cols();
    debug_assert!(m >= n);
    // Unit Frobenius scaling keeps the Gram-term threshold meaningful at
    // any input magnitude; sigma is scaled back at the end.
    let norm = a.frob_norm();
    let scale = if norm > 0.0 { 1.0 / norm } else { 1.0 };

    // Work on A^T so the columns being orthogonalized are contiguous.
    let mut work = a.transpose().scale(scale);
    let mut vt = match v_guess {
        Some(v0) => {
            assert_eq!(v0.rows(), n);
            assert_eq!(v0.cols(), n);
            work = v0.transpose().matmul(&work);
            v0.transpose()
        }
        None => Matrix::identity(n),
    };
    jacobi_rows(&mut work, &mut vt);

    // Row norms are the singular values (of the scaled matrix).
    let mut sig: Vec<f64> = (0..n)
        .map(|i| work.row(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sig[y].partial_cmp(&sig[x]).unwrap());

    // Build U columns from the normalized rows; near-null directions get
    // replaced by orthonormal completion below.
    let zero_tol = 1e-12;
    let mut u = Matrix::zeros(m, n);
    let mut kept = 0;
    for (col, &src) in order.iter().enumerate() {
        if sig[src] > zero_tol {
            let inv = 1.0 / sig[src];
            for k in 0..m {
                u.set(k, col, work.get(src, k) * inv);
            }
            kept = col + 1;
        }
    }
    if kept < n {
        let partial = u.col_block(0, kept);
        let completed = complete_columns(&partial, n - kept, m);
        for col in kept..n {
            for k in 0..m {
                u.set(k, col, completed.get(k, col));
            }
        }
    }
    // Graded spectra leave small-σ directions slightly oblique; a
    // Gram-Schmidt polish against the larger columns restores
    // orthonormality without moving the reconstruction beyond tolerance.
    let sigma_max = order.first().map(|&i| sig[i]).unwrap_or(0.0);
    for col in 0..kept {
        if sig[order[col]] < 1e-6 * sigma_max {
            reorthogonalize_column(&mut u, col);
        }
    }

    let sigma: Vec<f64> = order.iter().map(|&i| sig[i] * norm).collect();
    sig.clear();
    let mut v = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            v.set(k, col, vt.get(src, k));
        }
    }
    SvdResult { u, sigma, v }
}

fn reorthogonalize_column(u: &mut Matrix, col: usize) {
    let m = u.rows();
    for _ in 0..2 {
        for prev in 0..col {
            let mut proj = 0.0;
            for k in 0..m {
                proj += u.get(k, prev) * u.get(k, col);
            }
            for k in 0..m {
                let v = u.get(k, col) - proj * u.get(k, prev);
                u.set(k, col, v);
            }
        }
    }
    let norm: f64 = (0..m).map(|k| u.get(k, col).powi(2)).sum::<f64>().sqrt();
    if norm > 1e-8 {
        for k in 0..m {
            let v = u.get(k, col) / norm;
            u.set(k, col, v);
        }
    }
}

/// Gram-Schmidt completion against `basis` (m×k with orthonormal
/// columns): candidate columns come from the fixed internal stream and
/// are redrawn whenever the post-projection residual is below 1e-6.
fn complete_columns(basis: &Matrix, extra: usize, m: usize) -> Matrix {
    let k = basis.cols();
    assert!(k + extra <= m, "not enough dimensions to complete the basis");
    let mut cols: Vec<Vec<f64>> = (0..k)
        .map(|j| (0..m).map(|i| basis.get(i, j)).collect())
        .collect();
    let mut rng = Prng::new(COMPLETION_SEED);
    while cols.len() < k + extra {
        let mut cand: Vec<f64> = (0..m).map(|_| rng.gaussian()).collect();
        // two Gram-Schmidt passes for orthogonality near machine precision
        for _ in 0..2 {
            for b in &cols {
                let proj: f64 = b.iter().zip(&cand).map(|(x, y)| x * y).sum();
                for (c, x) in cand.iter_mut().zip(b) {
                    *c -= proj * x;
                }
            }
        }
        let norm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue; // near-dependent draw, reject and redraw
        }
        cand.iter_mut().for_each(|x| *x /= norm);
        cols.push(cand);
    }
    Matrix::from_fn(m, k + extra, |i, j| cols[j][i])
}

/// Extend `u` (m×k, orthonormal columns) by `extra` orthonormal columns.
/// The first k columns of the result equal `u`.
pub fn orthonormal_completion(u: &Matrix, extra: usize) -> Matrix {
    let m = u.rows();
    let k = u.cols();
    assert!(k + extra <= m, "k + extra exceeds the ambient dimension");
    if k > 0 {
        let gram_err = u.transpose().matmul(u).sub(&Matrix::identity(k)).max_abs();
        assert!(gram_err < 1e-8, "input columns are not orthonormal ({gram_err:e})");
    }
    if extra == 0 {
        return u.clone();
    }
    complete_columns(u, extra, m)
}

/// Schatten p-norm: the vector p-norm of the singular values.
pub fn schatten_norm(m: &Matrix, p: SchattenP) -> f64 {
    p.vector_norm(&svd(m).sigma)
}

/// σ-dominance: true iff σ_j(a) ≤ b_sigma_j + tol for every j, with
/// singular values treated as 0 beyond either spectrum's length.
pub fn sigma_dominated(a: &Matrix, b_sigma: &[f64], tol: f64) -> bool {
    assert!(tol >= 0.0);
    let sig = svd(a).sigma;
    let len = sig.len().max(b_sigma.len());
    for j in 0..len {
        let sa = sig.get(j).copied().unwrap_or(0.0);
        let sb = b_sigma.get(j).copied().unwrap_or(0.0);
        if sa > sb + tol {
            return false;
        }
    }
    true
}
