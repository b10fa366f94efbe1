//! The two norm-bounded low-rank parameterizations.
//!
//! Both map unconstrained parameters onto the set W_S of matrices whose
//! j-th singular value is at most s_j, and both are complete: every
//! member of W_S is reachable, which the `inverse_*` constructions
//! realize explicitly.
//!
//! * Form I builds `W = U D V^T` from two Cayley factors with
//!   orthonormal columns and a diagonal D whose entries are projected
//!   into [-s, s] (or rescaled to meet a Schatten-norm budget), so the
//!   singular values of W are exactly |D|.
//! * Form II builds `W = 2 A^T S B` from a single Cayley factor split
//!   into A and B; the arithmetic-geometric mean inequality bounds each
//!   singular value by the corresponding S entry.

use thiserror::Error;

use crate::cayley::{cayley_forward, cayley_inverse, choose_sign_matrix, CayleyParam, SemiOrthogonal};
use crate::matrix::Matrix;
use crate::svd::{orthonormal_completion, sigma_dominated, svd, SchattenP, SingularBudget};

/// Dominance slack accepted by the inverse constructions.
pub const INVERSE_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("singular values exceed the budget beyond tolerance")]
    BudgetViolated,
    #[error("rank budget {rank} exceeds max(m, n) = {max_dim}")]
    RankBudgetExceeded { rank: usize, max_dim: usize },
    #[error("diagonal product bound violated at index {0}")]
    PreconditionViolated(usize),
}

/// Parameters of form I: Cayley factors for U (m×r) and V (n×r) plus the
/// diagonal seed `d`. Requires m ≥ r and n ≥ r.
#[derive(Clone, Debug)]
pub struct ParamsI {
    pub f_u: CayleyParam,
    pub f_v: CayleyParam,
    pub d: Vec<f64>,
}

impl ParamsI {
    pub fn new(f_u: CayleyParam, f_v: CayleyParam, d: Vec<f64>) -> Self {
        assert_eq!(f_u.r(), d.len());
        assert_eq!(f_v.r(), d.len());
        ParamsI { f_u, f_v, d }
    }

    pub fn zeros(m: usize, n: usize, r: usize) -> Self {
        assert!(m >= r && n >= r, "form I requires m >= r and n >= r");
        ParamsI {
            f_u: CayleyParam::zeros(m, r),
            f_v: CayleyParam::zeros(n, r),
            d: vec![0.0; r],
        }
    }

    pub fn m(&self) -> usize {
        self.f_u.q()
    }

    pub fn n(&self) -> usize {
        self.f_v.q()
    }

    pub fn r(&self) -> usize {
        self.d.len()
    }

    pub fn num_params(m: usize, n: usize, r: usize) -> usize {
        r * r + (m - r) * r + r * r + (n - r) * r + r
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::num_params(self.m(), self.n(), self.r()));
        out.extend_from_slice(self.f_u.x.data());
        out.extend_from_slice(self.f_u.y.data());
        out.extend_from_slice(self.f_v.x.data());
        out.extend_from_slice(self.f_v.y.data());
        out.extend_from_slice(&self.d);
        out
    }

    pub fn from_flat(m: usize, n: usize, r: usize, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), Self::num_params(m, n, r));
        let mut pos = 0;
        let mut take = |len: usize| {
            let s = &flat[pos..pos + len];
            pos += len;
            s.to_vec()
        };
        let f_u = CayleyParam::new(
            Matrix::new(r, r, take(r * r)),
            Matrix::new(m - r, r, take((m - r) * r)),
        );
        let f_v = CayleyParam::new(
            Matrix::new(r, r, take(r * r)),
            Matrix::new(n - r, r, take((n - r) * r)),
        );
        let d = take(r);
        ParamsI::new(f_u, f_v, d)
    }
}

/// Parameters of form II: one Cayley factor over the stacked (m+n)×r
/// space plus the diagonal seed `d` driving the normed variant.
///
/// The forward map is defined for any r ≤ m + n, but it is only a
/// *complete* parameterization of W_S when r ≤ max(m, n); past that
/// bound it collapses (for m = n = 1, r = 2 it is identically zero).
#[derive(Clone, Debug)]
pub struct ParamsII {
    pub f: CayleyParam,
    pub d: Vec<f64>,
    m: usize,
    n: usize,
}

impl ParamsII {
    pub fn new(f: CayleyParam, d: Vec<f64>, m: usize, n: usize) -> Self {
        assert_eq!(f.q(), m + n, "Cayley factor must cover the stacked space");
        assert_eq!(f.r(), d.len());
        ParamsII { f, d, m, n }
    }

    pub fn zeros(m: usize, n: usize, r: usize) -> Self {
        ParamsII::new(CayleyParam::zeros(m + n, r), vec![0.0; r], m, n)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.d.len()
    }

    pub fn num_params(m: usize, n: usize, r: usize) -> usize {
        r * r + (m + n - r) * r + r
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::num_params(self.m, self.n, self.r()));
        out.extend_from_slice(self.f.x.data());
        out.extend_from_slice(self.f.y.data());
        out.extend_from_slice(&self.d);
        out
    }

    pub fn from_flat(m: usize, n: usize, r: usize, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), Self::num_params(m, n, r));
        let mut pos = 0;
        let mut take = |len: usize| {
            let s = &flat[pos..pos + len];
            pos += len;
            s.to_vec()
        };
        let f = CayleyParam::new(
            Matrix::new(r, r, take(r * r)),
            Matrix::new(m + n - r, r, take((m + n - r) * r)),
        );
        let d = take(r);
        ParamsII::new(f, d, m, n)
    }
}

/// Rank and Schatten-norm budget for the normed variants.
#[derive(Clone, Debug)]
pub struct NormBudget {
    pub p: SchattenP,
    pub delta: f64,
    pub rank: usize,
}

impl NormBudget {
    pub fn new(p: SchattenP, delta: f64, rank: usize) -> Self {
        assert!(delta > 0.0, "norm budget must be positive");
        assert!(rank > 0);
        NormBudget { p, delta, rank }
    }
}

/// Elementwise projection of `d` onto [-s, s]:
/// `result_i = s_i d_i / max(|d_i|, s_i)`.
pub fn project_interval(d: &[f64], s: &[f64]) -> Vec<f64> {
    assert_eq!(d.len(), s.len());
    d.iter()
        .zip(s)
        .map(|(&di, &si)| {
            debug_assert!(si > 0.0);
            si * di / di.abs().max(si)
        })
        .collect()
}

/// Rescale `d` so its p-norm never exceeds `delta`:
/// `result = delta * d / max(||d||_p, 1)`.
pub fn scale_pnorm(d: &[f64], budget: &NormBudget) -> Vec<f64> {
    assert_eq!(d.len(), budget.rank);
    let denom = budget.p.vector_norm(d).max(1.0);
    d.iter().map(|&di| budget.delta * di / denom).collect()
}

/// Diagonal of the normed form-II budget: `delta |d| / max(||d||_p, 1)`,
/// always non-negative.
pub fn scale_pnorm_abs(d: &[f64], budget: &NormBudget) -> Vec<f64> {
    scale_pnorm(d, budget).iter().map(|x| x.abs()).collect()
}

// ── forward maps ─────────────────────────────────────────────────────

fn assemble_i(params: &ParamsI, diag: &[f64]) -> Matrix {
    let u = cayley_forward(&params.f_u).into_matrix();
    let v = cayley_forward(&params.f_v).into_matrix();
    u.mul_diag(diag).matmul(&v.transpose())
}

/// Form I with per-singular-value budget: `W = U diag(project(d, s)) V^T`.
pub fn forward_i(params: &ParamsI, s: &SingularBudget) -> Matrix {
    assert_eq!(params.r(), s.len());
    assemble_i(params, &project_interval(&params.d, s.values()))
}

/// Form I with Schatten-norm budget: `W = U diag(scale(d)) V^T`.
pub fn forward_i_normed(params: &ParamsI, budget: &NormBudget) -> Matrix {
    assemble_i(params, &scale_pnorm(&params.d, budget))
}

fn assemble_ii(params: &ParamsII, s_diag: &[f64]) -> Matrix {
    let g = cayley_forward(&params.f).into_matrix();
    let g_top = g.row_block(0, params.m);
    let g_bot = g.row_block(params.m, params.m + params.n);
    g_top.mul_diag(s_diag).matmul(&g_bot.transpose()).scale(2.0)
}

/// Form II with per-singular-value budget: `W = 2 A^T S B` where
/// `G = cayley(f)` partitions as `G^T = [A B]`.
pub fn forward_ii(params: &ParamsII, s: &SingularBudget) -> Matrix {
    assert_eq!(params.r(), s.len());
    assemble_ii(params, s.values())
}

/// Form II with Schatten-norm budget: S is the non-negative rescaling of
/// |d|.
pub fn forward_ii_normed(params: &ParamsII, budget: &NormBudget) -> Matrix {
    assemble_ii(params, &scale_pnorm_abs(&params.d, budget))
}

// ── completeness constructions ───────────────────────────────────────

/// Re-sign and column-permute a semi-orthogonal matrix so its top r×r
/// block admits the Cayley inverse, then invert.
///
/// `perm` maps sorted slots to original budget slots; the returned
/// parameters reproduce `g0`'s columns at the permuted positions with
/// the chosen signs, i.e. `cayley(F) = G0 * diag(p) * PI^T`.
fn sign_permute_invert(g0: &Matrix, perm: &[usize]) -> (CayleyParam, Vec<f64>) {
    let r = g0.cols();
    let top = g0.row_block(0, r);
    let q_sign = Matrix::from_fn(r, r, |k, j| top.get(perm[k], j));
    let p = choose_sign_matrix(&q_sign);
    let mut inv_perm = vec![0usize; r];
    for (k, &pk) in perm.iter().enumerate() {
        inv_perm[pk] = k;
    }
    let g_final = Matrix::from_fn(g0.rows(), r, |i, c| {
        let l = inv_perm[c];
        p[l] * g0.get(i, l)
    });
    let f = cayley_inverse(&SemiOrthogonal::new(g_final))
        .expect("sign selection guarantees an invertible top block");
    (f, p)
}

/// Recover form-I parameters for any `w` dominated by the budget.
pub fn inverse_i(w: &Matrix, s: &SingularBudget) -> Result<ParamsI, ParamError> {
    let (m, n, r) = (w.rows(), w.cols(), s.len());
    assert!(m >= r && n >= r, "form I requires m >= r and n >= r");
    let (perm, s_sorted) = s.sorted_desc();
    if !sigma_dominated(w, &s_sorted, INVERSE_TOL) {
        return Err(ParamError::BudgetViolated);
    }
    let dec = svd(w);
    let u_w = dec.u.col_block(0, r);
    let v_w = dec.v.col_block(0, r);

    let (f_u, p_u) = sign_permute_invert(&u_w, &perm);
    let (f_v, p_v) = sign_permute_invert(&v_w, &perm);

    // Slot perm[j] carries sigma_j with the signs absorbed from U and V.
    let mut d = vec![0.0; r];
    for j in 0..r {
        d[perm[j]] = p_u[j] * p_v[j] * dec.sigma[j].min(s_sorted[j]);
    }
    Ok(ParamsI::new(f_u, f_v, d))
}

/// Split J = sigma / s into the diagonal factors with
/// `Sigma_a^2 + Sigma_b^2 = I` and `2 Sigma_a Sigma_b = J`.
fn diag_factors(sigma: &[f64], s_sorted: &[f64]) -> (Vec<f64>, Vec<f64>) {
    sigma
        .iter()
        .zip(s_sorted)
        .map(|(&sig, &cap)| {
            // Budget-boundary round-off would make 1 - J negative; the
            // dominance precondition already bounded the overshoot.
            let mut j = (sig / cap).min(1.0);
            if j >= 1.0 - 1e-12 {
                j = 1.0;
            }
            let a = ((1.0 + j).sqrt() + (1.0 - j).sqrt()) / 2.0;
            let b = ((1.0 + j).sqrt() - (1.0 - j).sqrt()) / 2.0;
            (a, b)
        })
        .unzip()
}

/// Scale row j of `m` by `c[j]`.
fn diag_mul(c: &[f64], m: &Matrix) -> Matrix {
    assert_eq!(c.len(), m.rows());
    Matrix::from_fn(m.rows(), m.cols(), |i, j| c[i] * m.get(i, j))
}

/// Candidate factors (pre-sign, in sorted-budget coordinates) with
/// `w = 2 A0^T diag(s_sorted) B0` and `A0 A0^T + B0 B0^T = I`.
fn candidates_ii(w: &Matrix, s_sorted: &[f64]) -> (Matrix, Matrix) {
    let (m, n, r) = (w.rows(), w.cols(), s_sorted.len());
    if r <= m.min(n) {
        let dec = svd(w);
        let u_w = dec.u.col_block(0, r);
        let v_w = dec.v.col_block(0, r);
        let (sa, sb) = diag_factors(&dec.sigma[..r], s_sorted);
        let a0 = diag_mul(&sa, &u_w.transpose());
        let b0 = diag_mul(&sb, &v_w.transpose());
        (a0, b0)
    } else if m >= r {
        // Full-rank branch, m >= r > n: augment the SVD with an
        // orthonormal completion of U and pad Sigma with (1, 0) pairs.
        let dec = svd(w);
        let u_w = orthonormal_completion(&dec.u, r - n);
        let (mut sa, mut sb) = diag_factors(&dec.sigma, &s_sorted[..n]);
        sa.resize(r, 1.0);
        sb.resize(r, 0.0);
        let a0 = diag_mul(&sa, &u_w.transpose());
        let mut b0 = Matrix::zeros(r, n);
        for j in 0..n {
            for i in 0..n {
                b0.set(j, i, sb[j] * dec.v.get(i, j));
            }
        }
        (a0, b0)
    } else {
        // n >= r > m: work on the transpose and swap the partitions.
        let (a_t, b_t) = candidates_ii(&w.transpose(), s_sorted);
        (b_t, a_t)
    }
}

/// Recover form-II parameters for any `w` dominated by the budget.
///
/// The budget is sorted descending internally; the returned Cayley
/// factor bakes the un-permutation back in, so the public contract is
/// order-agnostic: `forward_ii(result, s) == w`.
pub fn inverse_ii(w: &Matrix, s: &SingularBudget) -> Result<ParamsII, ParamError> {
    let (m, n, r) = (w.rows(), w.cols(), s.len());
    if r > m.max(n) {
        return Err(ParamError::RankBudgetExceeded {
            rank: r,
            max_dim: m.max(n),
        });
    }
    let (perm, s_sorted) = s.sorted_desc();
    if !sigma_dominated(w, &s_sorted, INVERSE_TOL) {
        return Err(ParamError::BudgetViolated);
    }
    let (a0, b0) = candidates_ii(w, &s_sorted);
    let g0 = a0.transpose().vstack(&b0.transpose());
    let (f, _) = sign_permute_invert(&g0, &perm);
    Ok(ParamsII::new(f, s.values().to_vec(), m, n))
}

// ── norm-bounded nonlinear layers ────────────────────────────────────

#[derive(Clone, Copy, Debug)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }
}

/// Nonlinear layer `f(x) = U D1 phi(D2 V^T x)` built on form I.
/// The Jacobian stays inside W_S whenever `|d1_i d2_i| <= s_i`.
pub fn bounded_layer_i(
    params: &ParamsI,
    d1: &[f64],
    d2: &[f64],
    s: &SingularBudget,
    act: Activation,
    x: &[f64],
) -> Result<Vec<f64>, ParamError> {
    assert_eq!(d1.len(), params.r());
    assert_eq!(d2.len(), params.r());
    for (i, ((&a, &b), &cap)) in d1.iter().zip(d2).zip(s.values()).enumerate() {
        if (a * b).abs() > cap {
            return Err(ParamError::PreconditionViolated(i));
        }
    }
    let u = cayley_forward(&params.f_u).into_matrix();
    let v = cayley_forward(&params.f_v).into_matrix();
    let z: Vec<f64> = v
        .transpose()
        .matvec(x)
        .iter()
        .zip(d2)
        .map(|(&t, &c)| act.apply(c * t))
        .zip(d1)
        .map(|(h, &c1)| c1 * h)
        .collect();
    Ok(u.matvec(&z))
}

/// Nonlinear layer `f(x) = 2 A^T D1 phi(D2 B x)` built on form II.
/// Requires `0 <= d1_i d2_i <= s_i` so the AM-GM bound applies.
pub fn bounded_layer_ii(
    params: &ParamsII,
    d1: &[f64],
    d2: &[f64],
    s: &SingularBudget,
    act: Activation,
    x: &[f64],
) -> Result<Vec<f64>, ParamError> {
    assert_eq!(d1.len(), params.r());
    assert_eq!(d2.len(), params.r());
    for (i, ((&a, &b), &cap)) in d1.iter().zip(d2).zip(s.values()).enumerate() {
        let prod = a * b;
        if !(0.0..=cap).contains(&prod) {
            return Err(ParamError::PreconditionViolated(i));
        }
    }
    let g = cayley_forward(&params.f).into_matrix();
    let g_top = g.row_block(0, params.m);
    let g_bot = g.row_block(params.m, params.m + params.n);
    let z: Vec<f64> = g_bot
        .transpose()
        .matvec(x)
        .iter()
        .zip(d2)
        .map(|(&t, &c)| act.apply(c * t))
        .zip(d1)
        .map(|(h, &c1)| c1 * h)
        .collect();
    Ok(g_top.matvec(&z).iter().map(|v| 2.0 * v).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Prng;

    fn random_params_i(m: usize, n: usize, r: usize, scale: f64, rng: &mut Prng) -> ParamsI {
        ParamsI::new(
            CayleyParam::new(
                Matrix::from_stream(r, r, rng, |g| g.gaussian() * scale),
                Matrix::from_stream(m - r, r, rng, |g| g.gaussian() * scale),
            ),
            CayleyParam::new(
                Matrix::from_stream(r, r, rng, |g| g.gaussian() * scale),
                Matrix::from_stream(n - r, r, rng, |g| g.gaussian() * scale),
            ),
            (0..r).map(|_| rng.gaussian() * scale).collect(),
        )
    }

    fn random_params_ii(m: usize, n: usize, r: usize, scale: f64, rng: &mut Prng) -> ParamsII {
        ParamsII::new(
            CayleyParam::new(
                Matrix::from_stream(r, r, rng, |g| g.gaussian() * scale),
                Matrix::from_stream(m + n - r, r, rng, |g| g.gaussian() * scale),
            ),
            (0..r).map(|_| rng.gaussian() * scale).collect(),
            m,
            n,
        )
    }

    /// Target inside W_S: re-scale the singular values of a seeded matrix
    /// below the (sorted) budget.
    fn target_in_set(m: usize, n: usize, s: &SingularBudget, rng: &mut Prng) -> Matrix {
        let (_, sorted) = s.sorted_desc();
        let a = Matrix::from_stream(m, n, rng, |g| g.gaussian());
        let dec = svd(&a);
        let k = dec.sigma.len();
        let caps: Vec<f64> = (0..k)
            .map(|j| {
                if j < sorted.len() {
                    sorted[j] * rng.uniform()
                } else {
                    0.0
                }
            })
            .collect();
        dec.u.mul_diag(&caps).matmul(&dec.v.transpose())
    }

    #[test]
    fn project_interval_cases() {
        let s = [1.0, 1.0];
        assert_eq!(project_interval(&[0.5, -0.25], &s), vec![0.5, -0.25]);
        assert_eq!(project_interval(&[2.0, -2.0], &s), vec![1.0, -1.0]);
        let out = project_interval(&[-5.0, 0.1], &s);
        assert!((out[0] + 1.0).abs() < 1e-15);
        assert!((out[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn scale_pnorm_cases() {
        let b = NormBudget::new(SchattenP::Two, 1.0, 2);
        let out = scale_pnorm(&[3.0, 4.0], &b);
        assert!((out[0] - 0.6).abs() < 1e-15);
        assert!((out[1] - 0.8).abs() < 1e-15);
        let small = scale_pnorm(&[0.3, 0.4], &b);
        assert_eq!(small, vec![0.3, 0.4]);
        assert_eq!(scale_pnorm(&[0.0, 0.0], &b), vec![0.0, 0.0]);
    }

    #[test]
    fn forward_i_zero_d_is_zero() {
        let mut rng = Prng::new(1);
        let mut p = random_params_i(6, 4, 2, 1.0, &mut rng);
        p.d = vec![0.0, 0.0];
        let w = forward_i(&p, &SingularBudget::uniform(2, 1.0));
        assert_eq!(w.max_abs(), 0.0);
    }

    #[test]
    fn forward_i_at_zero_cayley_embeds_diag() {
        let mut p = ParamsI::zeros(5, 4, 2);
        p.d = vec![0.7, -0.3];
        let w = forward_i(&p, &SingularBudget::uniform(2, 1.0));
        let mut expected = Matrix::zeros(5, 4);
        expected.set(0, 0, 0.7);
        expected.set(1, 1, -0.3);
        assert!(w.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn forward_i_sigma_equals_projected_d() {
        let mut rng = Prng::new(2);
        let p = random_params_i(6, 4, 2, 1.0, &mut rng);
        let s = SingularBudget::new(vec![2.0, 1.0]);
        let w = forward_i(&p, &s);
        let mut expect: Vec<f64> = project_interval(&p.d, s.values())
            .iter()
            .map(|x| x.abs())
            .collect();
        expect.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let sig = svd(&w).sigma;
        for (a, b) in sig.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn forward_i_normed_budgets_hold() {
        let mut rng = Prng::new(3);
        for &p_kind in &[SchattenP::One, SchattenP::Two, SchattenP::Infinity] {
            let params = random_params_i(7, 5, 3, 1.0, &mut rng);
            let budget = NormBudget::new(p_kind, 0.5, 3);
            let w = forward_i_normed(&params, &budget);
            let norm = crate::svd::schatten_norm(&w, p_kind);
            assert!(norm <= 0.5 * (1.0 + 1e-9), "norm {norm}");
        }
    }

    #[test]
    fn forward_i_normed_saturates_nuclear() {
        let mut rng = Prng::new(4);
        let mut params = random_params_i(5, 4, 2, 1.0, &mut rng);
        params.d = vec![10.0, -10.0];
        let budget = NormBudget::new(SchattenP::One, 0.5, 2);
        let w = forward_i_normed(&params, &budget);
        let nuc = crate::svd::schatten_norm(&w, SchattenP::One);
        assert!((nuc - 0.5).abs() < 1e-9);
    }

    #[test]
    fn forward_ii_zero_params_is_zero() {
        let p = ParamsII::zeros(5, 3, 2);
        let w = forward_ii(&p, &SingularBudget::uniform(2, 1.0));
        assert_eq!(w.max_abs(), 0.0);
    }

    #[test]
    fn forward_ii_sharpness_at_unit_dims() {
        // m = n = 1, r = 2, S = I: A and B are orthogonal rows, so W = 0.
        let mut rng = Prng::new(5);
        let s = SingularBudget::uniform(2, 1.0);
        for _ in 0..100 {
            let p = random_params_ii(1, 1, 2, 1.0, &mut rng);
            let w = forward_ii(&p, &s);
            assert!(w.max_abs() <= 1e-12, "sharpness witness failed: {}", w.max_abs());
        }
    }

    #[test]
    fn forward_ii_dominated_by_budget() {
        let mut rng = Prng::new(6);
        let s = SingularBudget::new(vec![3.0, 2.0, 1.0]);
        for _ in 0..20 {
            let p = random_params_ii(8, 5, 3, 1.0, &mut rng);
            let w = forward_ii(&p, &s);
            assert!(sigma_dominated(&w, s.values(), 1e-9));
        }
    }

    #[test]
    fn forward_ii_normed_budgets_hold() {
        let mut rng = Prng::new(7);
        let params = random_params_ii(6, 4, 3, 1.0, &mut rng);
        let budget = NormBudget::new(SchattenP::Two, 1.0, 3);
        let w = forward_ii_normed(&params, &budget);
        assert!(crate::svd::schatten_norm(&w, SchattenP::Two) <= 1.0 + 1e-9);
    }

    #[test]
    fn forward_ii_normed_rank_drops_with_sparse_d() {
        let mut rng = Prng::new(8);
        let mut params = random_params_ii(6, 4, 3, 1.0, &mut rng);
        params.d = vec![1.0, 0.0, 0.0];
        let budget = NormBudget::new(SchattenP::One, 3.0, 3);
        let w = forward_ii_normed(&params, &budget);
        let sig = svd(&w).sigma;
        assert!(sig[0] <= 3.0 + 1e-9);
        assert!(sig.iter().filter(|&&x| x > 1e-9).count() <= 1);
    }

    #[test]
    fn inverse_i_round_trip() {
        let mut rng = Prng::new(9);
        let s = SingularBudget::new(vec![2.0, 1.0, 0.5]);
        for _ in 0..10 {
            let w = target_in_set(7, 5, &s, &mut rng);
            let p = inverse_i(&w, &s).unwrap();
            let back = forward_i(&p, &s);
            assert!(back.max_abs_diff(&w) < 1e-8);
        }
    }

    #[test]
    fn inverse_i_zero_matrix() {
        let s = SingularBudget::uniform(2, 1.0);
        let p = inverse_i(&Matrix::zeros(4, 3), &s).unwrap();
        assert!(p.d.iter().all(|&x| x.abs() < 1e-12));
        assert!(forward_i(&p, &s).max_abs() < 1e-12);
    }

    #[test]
    fn inverse_i_rejects_oversized() {
        let mut w = Matrix::zeros(4, 3);
        w.set(0, 0, 1.5);
        let s = SingularBudget::uniform(2, 1.0);
        assert!(matches!(inverse_i(&w, &s), Err(ParamError::BudgetViolated)));
    }

    #[test]
    fn inverse_i_unsorted_budget() {
        let mut rng = Prng::new(10);
        let s = SingularBudget::new(vec![0.5, 2.0, 1.0]);
        let w = target_in_set(6, 6, &s, &mut rng);
        let p = inverse_i(&w, &s).unwrap();
        assert!(forward_i(&p, &s).max_abs_diff(&w) < 1e-8);
    }

    #[test]
    fn inverse_ii_round_trip_low_rank() {
        let mut rng = Prng::new(11);
        let s = SingularBudget::new(vec![4.0, 3.0, 2.0, 1.0]);
        for _ in 0..10 {
            let w = target_in_set(10, 7, &s, &mut rng);
            let p = inverse_ii(&w, &s).unwrap();
            assert!(forward_ii(&p, &s).max_abs_diff(&w) < 1e-8);
        }
    }

    #[test]
    fn inverse_ii_zero_matrix() {
        let s = SingularBudget::uniform(3, 1.0);
        let p = inverse_ii(&Matrix::zeros(5, 4), &s).unwrap();
        assert!(forward_ii(&p, &s).max_abs() < 1e-10);
    }

    #[test]
    fn inverse_ii_full_rank_branch() {
        let mut rng = Prng::new(12);
        // m = 9, n = 3, r = 5: min < r <= max exercises the augmented SVD.
        let s = SingularBudget::new(vec![3.0, 2.5, 2.0, 1.5, 1.0]);
        for _ in 0..10 {
            let w = target_in_set(9, 3, &s, &mut rng);
            let p = inverse_ii(&w, &s).unwrap();
            assert!(forward_ii(&p, &s).max_abs_diff(&w) < 1e-8);
        }
    }

    #[test]
    fn inverse_ii_full_rank_transposed_branch() {
        let mut rng = Prng::new(13);
        let s = SingularBudget::new(vec![3.0, 2.5, 2.0, 1.5, 1.0]);
        for _ in 0..10 {
            let w = target_in_set(3, 9, &s, &mut rng);
            let p = inverse_ii(&w, &s).unwrap();
            assert!(forward_ii(&p, &s).max_abs_diff(&w) < 1e-8);
        }
    }

    #[test]
    fn inverse_ii_unsorted_budget() {
        let mut rng = Prng::new(14);
        let s = SingularBudget::new(vec![1.0, 4.0, 2.0]);
        let w = target_in_set(6, 5, &s, &mut rng);
        let p = inverse_ii(&w, &s).unwrap();
        assert!(forward_ii(&p, &s).max_abs_diff(&w) < 1e-8);
    }

    #[test]
    fn inverse_ii_rank_budget_error() {
        let s = SingularBudget::uniform(5, 1.0);
        let w = Matrix::zeros(3, 4);
        assert!(matches!(
            inverse_ii(&w, &s),
            Err(ParamError::RankBudgetExceeded { .. })
        ));
    }

    #[test]
    fn bounded_layer_relu_positive_region_is_linear() {
        let mut rng = Prng::new(15);
        let p = random_params_i(5, 4, 2, 0.3, &mut rng);
        let s = SingularBudget::uniform(2, 1.0);
        let d1 = vec![0.5, 0.4];
        let d2 = vec![0.6, 0.5];
        // pick x so the pre-activations are positive
        let v = cayley_forward(&p.f_v).into_matrix();
        let mut x = vec![0.0; 4];
        for j in 0..4 {
            x[j] = v.get(j, 0) + v.get(j, 1);
        }
        let z = v.transpose().matvec(&x);
        if z.iter().zip(&d2).any(|(&t, &c)| c * t <= 0.0) {
            // seeded draw guarantees positivity for this test; fail loudly otherwise
            panic!("pre-activations not positive for the seeded draw");
        }
        let out = bounded_layer_i(&p, &d1, &d2, &s, Activation::Relu, &x).unwrap();
        let u = cayley_forward(&p.f_u).into_matrix();
        let lin: Vec<f64> = u
            .matvec(
                &z.iter()
                    .zip(d2.iter().zip(&d1))
                    .map(|(&t, (&c2, &c1))| c1 * c2 * t)
                    .collect::<Vec<_>>(),
            )
            .to_vec();
        for (a, b) in out.iter().zip(&lin) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bounded_layer_zero_diagonals() {
        let mut rng = Prng::new(16);
        let p = random_params_ii(4, 3, 2, 0.5, &mut rng);
        let s = SingularBudget::uniform(2, 1.0);
        let out = bounded_layer_ii(&p, &[0.0, 0.0], &[0.0, 0.0], &s, Activation::Tanh, &[1.0, -2.0, 0.5])
            .unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bounded_layer_precondition_errors() {
        let p = ParamsI::zeros(4, 4, 2);
        let s = SingularBudget::uniform(2, 0.5);
        let err = bounded_layer_i(&p, &[1.0, 0.1], &[1.0, 0.1], &s, Activation::Relu, &[0.0; 4]);
        assert!(matches!(err, Err(ParamError::PreconditionViolated(0))));
        let p2 = ParamsII::zeros(4, 4, 2);
        let err2 = bounded_layer_ii(&p2, &[-1.0, 0.1], &[1.0, 0.1], &s, Activation::Tanh, &[0.0; 4]);
        assert!(matches!(err2, Err(ParamError::PreconditionViolated(0))));
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = Prng::new(17);
        let p = random_params_i(6, 5, 3, 1.0, &mut rng);
        let q = ParamsI::from_flat(6, 5, 3, &p.to_flat());
        assert_eq!(p.to_flat(), q.to_flat());
        let p2 = random_params_ii(6, 5, 3, 1.0, &mut rng);
        let q2 = ParamsII::from_flat(6, 5, 3, &p2.to_flat());
        assert_eq!(p2.to_flat(), q2.to_flat());
    }
}
