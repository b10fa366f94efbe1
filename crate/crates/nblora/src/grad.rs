//! Analytic gradients of scalar losses through both parameterizations,
//! a central-difference oracle, the nuclear-norm subgradient, and the
//! gradient of the Frobenius-normalized block rescaling.
//!
//! Everything here computes pullbacks of `L = <w_bar, W(theta)>`; a full
//! loss gradient is obtained by passing `w_bar = dL/dW`.

use crate::cayley::{cayley_forward, CayleyParam};
use crate::matrix::{Lu, Matrix};
use crate::params::{project_interval, scale_pnorm, NormBudget, ParamsI, ParamsII};
use crate::svd::{svd, SchattenP, SingularBudget};

/// Gradient with the same shapes as a Cayley parameter.
#[derive(Clone, Debug)]
pub struct CayleyGrad {
    pub x: Matrix,
    pub y: Matrix,
}

/// Gradient mirroring [`ParamsI`].
#[derive(Clone, Debug)]
pub struct GradI {
    pub f_u: CayleyGrad,
    pub f_v: CayleyGrad,
    pub d: Vec<f64>,
}

/// Gradient mirroring [`ParamsII`].
#[derive(Clone, Debug)]
pub struct GradII {
    pub f: CayleyGrad,
    pub d: Vec<f64>,
}

/// Gradient bundle for either parameter structure.
#[derive(Clone, Debug)]
pub enum GradientBundle {
    I(GradI),
    II(GradII),
}

impl GradI {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(self.f_u.x.data());
        out.extend_from_slice(self.f_u.y.data());
        out.extend_from_slice(self.f_v.x.data());
        out.extend_from_slice(self.f_v.y.data());
        out.extend_from_slice(&self.d);
        out
    }
}

impl GradII {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(self.f.x.data());
        out.extend_from_slice(self.f.y.data());
        out.extend_from_slice(&self.d);
        out
    }
}

impl GradientBundle {
    pub fn to_flat(&self) -> Vec<f64> {
        match self {
            GradientBundle::I(g) => g.to_flat(),
            GradientBundle::II(g) => g.to_flat(),
        }
    }
}

/// Pullback through the Cayley transformation.
///
/// With `G (I+Z) = [(I−Z); −2Y]`, implicit differentiation gives
///
/// ```text
/// Z_bar = −[(I + G_t)^T Ḡ_t + G_b^T Ḡ_b] (I+Z)^{-T}
/// X_bar = Z_bar − Z_bar^T
/// Y_bar = −2 Ḡ_b (I+Z)^{-T} + Y (Z_bar + Z_bar^T)
/// ```
///
/// so the backward pass costs one extra factorization and no explicit
/// inverse.
pub fn cayley_pullback(f: &CayleyParam, g_bar: &Matrix) -> CayleyGrad {
    let r = f.r();
    let q = f.q();
    assert_eq!(g_bar.rows(), q);
    assert_eq!(g_bar.cols(), r);
    let z = f.z();
    let id = Matrix::identity(r);
    let m = id.add(&z);
    let g = cayley_forward(f).into_matrix();
    let g_t = g.row_block(0, r);
    let g_b = g.row_block(r, q);
    let gbar_t = g_bar.row_block(0, r);
    let gbar_b = g_bar.row_block(r, q);

    let lu_m = Lu::factor(&m);
    // T1 = (I+G_t)^T Ḡ_t + G_b^T Ḡ_b ; Z_bar = −T1 M^{-T}
    let mut t1 = id.add(&g_t).transpose().matmul(&gbar_t);
    if q > r {
        t1 = t1.add(&g_b.transpose().matmul(&gbar_b));
    }
    let z_bar = lu_m.solve(&t1.transpose()).transpose().scale(-1.0);
    let x_bar = z_bar.sub(&z_bar.transpose());
    let sym2 = z_bar.add(&z_bar.transpose());
    let y_bar = if q > r {
        let direct = lu_m.solve(&gbar_b.transpose()).transpose().scale(-2.0);
        direct.add(&f.y.matmul(&sym2))
    } else {
        Matrix::zeros(0, r)
    };
    CayleyGrad { x: x_bar, y: y_bar }
}

/// Subgradient convention: at the projection/rescaling kinks the
/// pass-through branch is taken, and sign(0) = 0 inside norms.
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// VJP of `project_interval(d, s)`: pass-through where |d_i| ≤ s_i
/// (including equality), zero where the projection saturates.
pub fn project_interval_vjp(d: &[f64], s: &[f64], upstream: &[f64]) -> Vec<f64> {
    d.iter()
        .zip(s)
        .zip(upstream)
        .map(|((&di, &si), &up)| if di.abs() <= si { up } else { 0.0 })
        .collect()
}

/// VJP of `scale_pnorm(d, budget)`.
pub fn scale_pnorm_vjp(d: &[f64], budget: &NormBudget, upstream: &[f64]) -> Vec<f64> {
    let norm = budget.p.vector_norm(d);
    // pass-through branch at the ||d||_p = 1 kink
    if norm <= 1.0 {
        return upstream.iter().map(|&u| budget.delta * u).collect();
    }
    let norm_grad: Vec<f64> = match budget.p {
        SchattenP::One => d.iter().map(|&x| sgn(x)).collect(),
        SchattenP::Two => d.iter().map(|&x| x / norm).collect(),
        SchattenP::Infinity => {
            let mut imax = 0;
            for (i, x) in d.iter().enumerate() {
                if x.abs() > d[imax].abs() {
                    imax = i;
                }
            }
            let mut g = vec![0.0; d.len()];
            g[imax] = sgn(d[imax]);
            g
        }
    };
    let dot: f64 = upstream.iter().zip(d).map(|(u, x)| u * x).sum();
    upstream
        .iter()
        .zip(&norm_grad)
        .map(|(&u, &gi)| budget.delta * (u / norm - gi * dot / (norm * norm)))
        .collect()
}

/// VJP of the non-negative diagonal `d -> scale_pnorm(|d|, budget)` used
/// by the normed form II.
fn scale_pnorm_abs_vjp(d: &[f64], budget: &NormBudget, upstream: &[f64]) -> Vec<f64> {
    let abs_d: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let inner = scale_pnorm_vjp(&abs_d, budget, upstream);
    inner
        .iter()
        .zip(d)
        .map(|(&g, &di)| g * sgn(di))
        .collect()
}

/// Gradient of `<w_bar, forward_i(params, s)>`.
pub fn grad_forward_i(params: &ParamsI, s: &SingularBudget, w_bar: &Matrix) -> GradI {
    let d_hat = project_interval(&params.d, s.values());
    let (f_u, f_v, d_hat_bar) = grad_assemble_i(params, &d_hat, w_bar);
    let d = project_interval_vjp(&params.d, s.values(), &d_hat_bar);
    GradI { f_u, f_v, d }
}

/// Gradient of `<w_bar, forward_i_normed(params, budget)>`.
pub fn grad_forward_i_normed(params: &ParamsI, budget: &NormBudget, w_bar: &Matrix) -> GradI {
    let d_hat = scale_pnorm(&params.d, budget);
    let (f_u, f_v, d_hat_bar) = grad_assemble_i(params, &d_hat, w_bar);
    let d = scale_pnorm_vjp(&params.d, budget, &d_hat_bar);
    GradI { f_u, f_v, d }
}

fn grad_assemble_i(
    params: &ParamsI,
    d_hat: &[f64],
    w_bar: &Matrix,
) -> (CayleyGrad, CayleyGrad, Vec<f64>) {
    let u = cayley_forward(&params.f_u).into_matrix();
    let v = cayley_forward(&params.f_v).into_matrix();
    // W = U D V^T: U_bar = w_bar V D, V_bar = w_bar^T U D, D_bar = diag(U^T w_bar V)
    let wv = w_bar.matmul(&v);
    let u_bar = wv.mul_diag(d_hat);
    let v_bar = w_bar.transpose().matmul(&u).mul_diag(d_hat);
    let r = d_hat.len();
    let d_hat_bar: Vec<f64> = (0..r)
        .map(|j| (0..u.rows()).map(|i| u.get(i, j) * wv.get(i, j)).sum())
        .collect();
    (
        cayley_pullback(&params.f_u, &u_bar),
        cayley_pullback(&params.f_v, &v_bar),
        d_hat_bar,
    )
}

/// Gradient of `<w_bar, forward_ii(params, s)>`; `d` is unused by this
/// variant so its gradient is zero.
pub fn grad_forward_ii(params: &ParamsII, s: &SingularBudget, w_bar: &Matrix) -> GradII {
    let (f, _) = grad_assemble_ii(params, s.values(), w_bar);
    GradII {
        f,
        d: vec![0.0; params.r()],
    }
}

/// Gradient of `<w_bar, forward_ii_normed(params, budget)>`.
pub fn grad_forward_ii_normed(params: &ParamsII, budget: &NormBudget, w_bar: &Matrix) -> GradII {
    let s_diag: Vec<f64> = scale_pnorm(&params.d, budget)
        .iter()
        .map(|x| x.abs())
        .collect();
    let (f, s_bar) = grad_assemble_ii(params, &s_diag, w_bar);
    let d = scale_pnorm_abs_vjp(&params.d, budget, &s_bar);
    GradII { f, d }
}

fn grad_assemble_ii(params: &ParamsII, s_diag: &[f64], w_bar: &Matrix) -> (CayleyGrad, Vec<f64>) {
    let m = params.m();
    let n = params.n();
    let g = cayley_forward(&params.f).into_matrix();
    let g_top = g.row_block(0, m);
    let g_bot = g.row_block(m, m + n);
    // W = 2 G_top S G_bot^T
    let wb_gbot = w_bar.matmul(&g_bot); // m×r
    let gbar_top = wb_gbot.mul_diag(s_diag).scale(2.0);
    let gbar_bot = w_bar.transpose().matmul(&g_top).mul_diag(s_diag).scale(2.0);
    let s_bar: Vec<f64> = (0..s_diag.len())
        .map(|j| 2.0 * (0..m).map(|i| g_top.get(i, j) * wb_gbot.get(i, j)).sum::<f64>())
        .collect();
    let g_bar = gbar_top.vstack(&gbar_bot);
    (cayley_pullback(&params.f, &g_bar), s_bar)
}

/// Central-difference gradient of `loss` over a flat parameter vector.
pub fn finite_diff(loss: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0);
    let mut work = theta.to_vec();
    let mut grad = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let orig = work[i];
        work[i] = orig + h;
        let plus = loss(&work);
        work[i] = orig - h;
        let minus = loss(&work);
        work[i] = orig;
        grad[i] = (plus - minus) / (2.0 * h);
    }
    grad
}

/// Nuclear-norm subgradient `U V^T`, restricted to singular values above
/// `1e-10 * sigma_1`. Satisfies `<result, w> = ||w||_{S1}` up to the
/// truncated tail, and every singular value of the result is ≤ 1.
pub fn nuclear_subgrad(w: &Matrix) -> Matrix {
    let dec = svd(w);
    let s1 = dec.sigma.first().copied().unwrap_or(0.0);
    if s1 <= 0.0 {
        return Matrix::zeros(w.rows(), w.cols());
    }
    let kept = dec.sigma.iter().take_while(|&&s| s > 1e-10 * s1).count();
    let u = dec.u.col_block(0, kept);
    let v = dec.v.col_block(0, kept);
    u.matmul(&v.transpose())
}

/// Forward map of the Frobenius-normalized rescaling
/// `(X, Y, g, h) -> (g X / ||X||_F, h Y / ||Y||_F)`; a zero block maps
/// to zero.
pub fn reparam_scaled(x: &Matrix, y: &Matrix, g: f64, h: f64) -> (Matrix, Matrix) {
    let scale_block = |m: &Matrix, c: f64| {
        let norm = m.frob_norm();
        if norm == 0.0 {
            Matrix::zeros(m.rows(), m.cols())
        } else {
            m.scale(c / norm)
        }
    };
    (scale_block(x, g), scale_block(y, h))
}

/// Gradients of the rescaled blocks given upstream gradients for the
/// scaled outputs. At a zero block both the map and its gradient are
/// defined as zero.
pub fn reparam_scaled_grad(
    x: &Matrix,
    y: &Matrix,
    g: f64,
    h: f64,
    x_eff_bar: &Matrix,
    y_eff_bar: &Matrix,
) -> (Matrix, Matrix, f64, f64) {
    let block = |m: &Matrix, c: f64, up: &Matrix| -> (Matrix, f64) {
        let norm = m.frob_norm();
        if norm == 0.0 {
            return (Matrix::zeros(m.rows(), m.cols()), 0.0);
        }
        let c_bar = up.dot(m) / norm;
        let m_bar = up.scale(c / norm).sub(&m.scale(c * up.dot(m) / norm.powi(3)));
        (m_bar, c_bar)
    };
    let (x_bar, g_bar) = block(x, g, x_eff_bar);
    let (y_bar, h_bar) = block(y, h, y_eff_bar);
    (x_bar, y_bar, g_bar, h_bar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::CayleyParam;
    use crate::params::{forward_i, forward_ii, forward_ii_normed};
    use crate::rng::Prng;

    fn rand_params_i(m: usize, n: usize, r: usize, rng: &mut Prng) -> ParamsI {
        ParamsI::new(
            CayleyParam::new(
                Matrix::from_stream(r, r, rng, |g| g.gaussian()),
                Matrix::from_stream(m - r, r, rng, |g| g.gaussian()),
            ),
            CayleyParam::new(
                Matrix::from_stream(r, r, rng, |g| g.gaussian()),
                Matrix::from_stream(n - r, r, rng, |g| g.gaussian()),
            ),
            (0..r).map(|_| rng.gaussian()).collect(),
        )
    }

    fn rand_params_ii(m: usize, n: usize, r: usize, rng: &mut Prng) -> ParamsII {
        ParamsII::new(
            CayleyParam::new(
                Matrix::from_stream(r, r, rng, |g| g.gaussian()),
                Matrix::from_stream(m + n - r, r, rng, |g| g.gaussian()),
            ),
            (0..r).map(|_| rng.gaussian()).collect(),
            m,
            n,
        )
    }

    fn max_mismatch(analytic: &[f64], numeric: &[f64]) -> f64 {
        analytic
            .iter()
            .zip(numeric)
            .map(|(&a, &n)| {
                if a.abs() < 1e-8 {
                    (a - n).abs() / 1e-8_f64.max(n.abs())
                } else {
                    (a - n).abs() / a.abs()
                }
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_w_bar_gives_zero_bundle() {
        let mut rng = Prng::new(1);
        let p = rand_params_i(5, 4, 2, &mut rng);
        let s = SingularBudget::uniform(2, 1.0);
        let g = grad_forward_i(&p, &s, &Matrix::zeros(5, 4));
        assert!(g.to_flat().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unsaturated_d_gradient_is_diagonal_of_utwv() {
        let mut rng = Prng::new(2);
        let mut p = rand_params_i(6, 4, 2, &mut rng);
        p.d = vec![0.3, -0.4]; // strictly inside (−s, s)
        let s = SingularBudget::uniform(2, 1.0);
        let w_bar = Matrix::from_stream(6, 4, &mut rng, |g| g.gaussian());
        let g = grad_forward_i(&p, &s, &w_bar);
        let u = cayley_forward(&p.f_u).into_matrix();
        let v = cayley_forward(&p.f_v).into_matrix();
        let t = u.transpose().matmul(&w_bar).matmul(&v);
        for j in 0..2 {
            assert!((g.d[j] - t.get(j, j)).abs() < 1e-10);
        }
    }

    #[test]
    fn grad_i_matches_finite_differences() {
        let mut rng = Prng::new(3);
        let (m, n, r) = (6, 4, 2);
        let p = rand_params_i(m, n, r, &mut rng);
        let s = SingularBudget::new(vec![2.0, 1.0]);
        let w_bar = Matrix::from_stream(m, n, &mut rng, |g| g.gaussian());
        let g = grad_forward_i(&p, &s, &w_bar).to_flat();
        let loss = |flat: &[f64]| {
            let q = ParamsI::from_flat(m, n, r, flat);
            w_bar.dot(&forward_i(&q, &s))
        };
        let fd = finite_diff(loss, &p.to_flat(), 1e-5);
        assert!(max_mismatch(&g, &fd) < 1e-5, "mismatch {}", max_mismatch(&g, &fd));
    }

    #[test]
    fn grad_ii_matches_finite_differences() {
        let mut rng = Prng::new(4);
        let (m, n, r) = (7, 5, 3);
        let p = rand_params_ii(m, n, r, &mut rng);
        let s = SingularBudget::new(vec![3.0, 2.0, 1.0]);
        let w_bar = Matrix::from_stream(m, n, &mut rng, |g| g.gaussian());
        let g = grad_forward_ii(&p, &s, &w_bar).to_flat();
        let loss = |flat: &[f64]| {
            let q = ParamsII::from_flat(m, n, r, flat);
            w_bar.dot(&forward_ii(&q, &s))
        };
        let fd = finite_diff(loss, &p.to_flat(), 1e-5);
        assert!(max_mismatch(&g, &fd) < 1e-5, "mismatch {}", max_mismatch(&g, &fd));
    }

    #[test]
    fn grad_ii_normed_matches_finite_differences() {
        let mut rng = Prng::new(5);
        let (m, n, r) = (6, 5, 3);
        let p = rand_params_ii(m, n, r, &mut rng);
        for &pk in &[SchattenP::One, SchattenP::Two, SchattenP::Infinity] {
            let budget = NormBudget::new(pk, 1.5, r);
            let w_bar = Matrix::from_stream(m, n, &mut rng, |g| g.gaussian());
            let g = grad_forward_ii_normed(&p, &budget, &w_bar).to_flat();
            let loss = |flat: &[f64]| {
                let q = ParamsII::from_flat(m, n, r, flat);
                w_bar.dot(&forward_ii_normed(&q, &budget))
            };
            let fd = finite_diff(loss, &p.to_flat(), 1e-5);
            assert!(max_mismatch(&g, &fd) < 1e-5, "p = {pk:?}");
        }
    }

    #[test]
    fn grad_linear_in_w_bar() {
        let mut rng = Prng::new(6);
        let p = rand_params_ii(5, 4, 2, &mut rng);
        let s = SingularBudget::uniform(2, 1.0);
        let a = Matrix::from_stream(5, 4, &mut rng, |g| g.gaussian());
        let b = Matrix::from_stream(5, 4, &mut rng, |g| g.gaussian());
        let ga = grad_forward_ii(&p, &s, &a).to_flat();
        let gb = grad_forward_ii(&p, &s, &b).to_flat();
        let gab = grad_forward_ii(&p, &s, &a.add(&b)).to_flat();
        for ((x, y), z) in ga.iter().zip(&gb).zip(&gab) {
            assert!((x + y - z).abs() < 1e-12 * (1.0 + z.abs()));
        }
    }

    #[test]
    fn finite_diff_quadratic_exact() {
        let grad = finite_diff(|t| t[0] * t[0], &[3.0], 1e-5);
        assert!((grad[0] - 6.0).abs() < 1e-8);
        let zero = finite_diff(|_| 1.25, &[0.3, -0.7], 1e-5);
        assert!(zero.iter().all(|&g| g.abs() < 1e-12));
    }

    #[test]
    fn frobenius_loss_cross_oracle() {
        // loss = ||W||_F^2 has dL/dW = 2W; chain through grad_forward_ii.
        let mut rng = Prng::new(7);
        let (m, n, r) = (5, 4, 2);
        let p = rand_params_ii(m, n, r, &mut rng);
        let s = SingularBudget::new(vec![2.0, 1.0]);
        let w = forward_ii(&p, &s);
        let g = grad_forward_ii(&p, &s, &w.scale(2.0)).to_flat();
        let loss = |flat: &[f64]| {
            let q = ParamsII::from_flat(m, n, r, flat);
            let w = forward_ii(&q, &s);
            w.dot(&w)
        };
        let fd = finite_diff(loss, &p.to_flat(), 1e-5);
        assert!(max_mismatch(&g, &fd) < 1e-5);
    }

    #[test]
    fn nuclear_subgrad_cases() {
        let d = Matrix::from_fn(2, 2, |i, j| if i == j { [2.0, 3.0][i] } else { 0.0 });
        let sub = nuclear_subgrad(&d);
        assert!(sub.max_abs_diff(&Matrix::identity(2)) < 1e-10);
        assert_eq!(nuclear_subgrad(&Matrix::zeros(3, 2)).max_abs(), 0.0);
    }

    #[test]
    fn nuclear_subgrad_pairs_with_norm() {
        let mut rng = Prng::new(8);
        let w = Matrix::from_stream(6, 4, &mut rng, |g| g.gaussian());
        let sub = nuclear_subgrad(&w);
        let nuc = crate::svd::schatten_norm(&w, SchattenP::One);
        assert!((sub.dot(&w) - nuc).abs() < 1e-8 * (1.0 + nuc));
        let sig = svd(&sub).sigma;
        assert!(sig[0] <= 1.0 + 1e-9);
    }

    #[test]
    fn nuclear_subgrad_directional_derivative() {
        let mut rng = Prng::new(9);
        let w = Matrix::from_stream(5, 4, &mut rng, |g| g.gaussian());
        let dir = Matrix::from_stream(5, 4, &mut rng, |g| g.gaussian());
        let sub = nuclear_subgrad(&w);
        let h = 1e-6;
        let plus = crate::svd::schatten_norm(&w.add(&dir.scale(h)), SchattenP::One);
        let minus = crate::svd::schatten_norm(&w.sub(&dir.scale(h)), SchattenP::One);
        let numeric = (plus - minus) / (2.0 * h);
        let analytic = sub.dot(&dir);
        assert!((numeric - analytic).abs() < 1e-5 * (1.0 + analytic.abs()));
    }

    #[test]
    fn reparam_zero_and_unit_cases() {
        let zero = Matrix::zeros(3, 2);
        let y = Matrix::identity(2);
        let (xe, _) = reparam_scaled(&zero, &y, 1.0, 1.0);
        assert_eq!(xe.max_abs(), 0.0);
        let (xb, _, gb, _) = reparam_scaled_grad(&zero, &y, 1.0, 1.0, &Matrix::identity(3).col_block(0, 2), &y);
        assert_eq!(xb.max_abs(), 0.0);
        assert_eq!(gb, 0.0);

        // g = 0 kills the gradient w.r.t. x up to the norm-direction term
        let mut rng = Prng::new(10);
        let x = Matrix::from_stream(3, 2, &mut rng, |g| g.gaussian());
        let up = Matrix::from_stream(3, 2, &mut rng, |g| g.gaussian());
        let (xb, _, _, _) = reparam_scaled_grad(&x, &y, 0.0, 1.0, &up, &y);
        assert!(xb.max_abs() < 1e-14);
    }

    #[test]
    fn reparam_matches_finite_differences() {
        let mut rng = Prng::new(11);
        let x = Matrix::from_stream(3, 2, &mut rng, |g| g.gaussian());
        let y = Matrix::from_stream(2, 2, &mut rng, |g| g.gaussian());
        let up_x = Matrix::from_stream(3, 2, &mut rng, |g| g.gaussian());
        let up_y = Matrix::from_stream(2, 2, &mut rng, |g| g.gaussian());
        let (g0, h0) = (1.3, -0.4);
        let (xb, yb, gb, hb) = reparam_scaled_grad(&x, &y, g0, h0, &up_x, &up_y);

        let pack = |x: &Matrix, y: &Matrix, g: f64, h: f64| {
            let mut v = x.data().to_vec();
            v.extend_from_slice(y.data());
            v.push(g);
            v.push(h);
            v
        };
        let loss = |flat: &[f64]| {
            let x = Matrix::new(3, 2, flat[..6].to_vec());
            let y = Matrix::new(2, 2, flat[6..10].to_vec());
            let (xe, ye) = reparam_scaled(&x, &y, flat[10], flat[11]);
            up_x.dot(&xe) + up_y.dot(&ye)
        };
        let fd = finite_diff(loss, &pack(&x, &y, g0, h0), 1e-6);
        let analytic = pack(&xb, &yb, gb, hb);
        for (a, n) in analytic.iter().zip(&fd) {
            assert!((a - n).abs() < 1e-5 * (1.0 + n.abs()), "{a} vs {n}");
        }
    }
}
