//! Dual solver for the linearized proximal subproblem.
//!
//! At an iterate `x` with proximal parameter `t`, the direction problem
//!
//! ```text
//! min_{d, v}  ⟨∇f(x), d⟩ + g(A(x) + v) + (‖d‖² + ‖v‖²)/(2t)
//! s.t.        ∇h(x)d = 0,   v = ∇A(x)d
//! ```
//!
//! is strongly convex. Its dual in `(λ, μ)`
//!
//! ```text
//! G(λ, μ) = (t/2)‖w‖² + (t/2)‖μ‖² − M^t_g(A(x) + tμ),
//! w       = ∇f(x) + ∇h(x)ᵀλ + ∇A(x)ᵀμ
//! ```
//!
//! is smooth and convex, so it is minimized by accelerated gradient descent
//! until `‖∇G(λ, μ)‖ ≤ Δ`. The primal pair is then `d = −t·w` and
//! `v = prox_{tg}(A(x) + tμ) − A(x)`.
//!
//! When `A` is the identity the `μ` block can be eliminated and only `λ` is
//! iterated on; see [`LinearizedSubproblem::solve_identity_shortcut`].

use crate::composite::CompositeProblem;
use crate::error::{Error, Result};
use crate::linalg::{joint_norm, Mat};
use crate::manifold::{GramFactor, ManifoldSpec};

pub const DEFAULT_MAX_INNER: usize = 100_000;

/// Requests below this tolerance are clamped to it; an exact dual solve is
/// not reachable in floating point.
pub const MIN_TOLERANCE: f64 = 1e-14;

/// Multipliers of the linearized subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    /// Multiplier of the tangency constraint `∇h(x)d = 0`.
    pub lam: Mat,
    /// Multiplier of the coupling `v = ∇A(x)d`.
    pub mu: Mat,
    /// `‖∇G(λ, μ)‖` at return.
    pub dual_grad_norm: f64,
}

impl DualState {
    pub fn zeros(manifold: &ManifoldSpec, problem: &CompositeProblem) -> Self {
        let (lr, lc) = manifold.constraint_shape();
        let (mr, mc) = problem.range_shape();
        Self {
            lam: Mat::zeros(lr, lc),
            mu: Mat::zeros(mr, mc),
            dual_grad_norm: f64::INFINITY,
        }
    }
}

/// Primal direction `d` and shift `v` recovered from multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalRecovery {
    pub d: Mat,
    pub v: Mat,
}

/// The subproblem at one outer iterate, with `∇f(x)` and `A(x)` cached.
pub struct LinearizedSubproblem<'a> {
    problem: &'a CompositeProblem,
    manifold: &'a ManifoldSpec,
    x: &'a Mat,
    t: f64,
    grad_f: Mat,
    map_x: Mat,
}

impl<'a> LinearizedSubproblem<'a> {
    pub fn new(
        problem: &'a CompositeProblem,
        manifold: &'a ManifoldSpec,
        x: &'a Mat,
        t: f64,
    ) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "proximal parameter must be positive, got {t}"
            )));
        }
        if x.shape() != problem.point_shape() || x.shape() != manifold.point_shape() {
            return Err(Error::InvalidInput(format!(
                "point shape {:?} does not match the problem {:?} and manifold {:?}",
                x.shape(),
                problem.point_shape(),
                manifold.point_shape()
            )));
        }
        Ok(Self {
            problem,
            manifold,
            x,
            t,
            grad_f: problem.smooth_grad(x),
            map_x: problem.map_value(x),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn grad_f(&self) -> &Mat {
        &self.grad_f
    }

    fn check_multipliers(&self, lam: &Mat, mu: &Mat) -> Result<()> {
        if lam.shape() != self.manifold.constraint_shape() || mu.shape() != self.problem.range_shape() {
            return Err(Error::InvalidInput(format!(
                "multiplier shapes {:?}/{:?} do not match {:?}/{:?}",
                lam.shape(),
                mu.shape(),
                self.manifold.constraint_shape(),
                self.problem.range_shape()
            )));
        }
        Ok(())
    }

    /// `w = ∇f(x) + ∇h(x)ᵀλ + ∇A(x)ᵀμ`.
    fn stationarity_vector(&self, lam: &Mat, mu: &Mat) -> Result<Mat> {
        let mut w = &self.grad_f + self.manifold.jacobian_adjoint_apply(self.x, lam)?;
        w += self.problem.map_jac_adjoint(self.x, mu);
        Ok(w)
    }

    /// `G` minimized over `λ` at fixed `μ`: value, `∇_μ G` and the minimizing
    /// `λ = −H(x)⁻¹∇h(x)[∇f(x) + ∇A(x)ᵀμ]`. By Danskin's theorem `∇_μ G` at
    /// that `λ` is the gradient of the reduced function.
    fn reduced_value_and_gradient(&self, gram: &GramFactor, mu: &Mat) -> Result<(f64, Mat, Mat)> {
        let t = self.t;
        let c = &self.grad_f + self.problem.map_jac_adjoint(self.x, mu);
        let lam = -gram.solve(&self.manifold.jacobian_apply(self.x, &c)?);
        let w = c + self.manifold.jacobian_adjoint_apply(self.x, &lam)?;
        let shifted = &self.map_x + mu * t;
        let prox = self.problem.g_prox(t, &shifted);
        let envelope = self.problem.g_value(&prox) + (&shifted - &prox).norm_squared() / (2.0 * t);
        let value = 0.5 * t * w.norm_squared() + 0.5 * t * mu.norm_squared() - envelope;
        let grad_mu = self.problem.map_jac_apply(self.x, &(w * t)) + prox - &self.map_x;
        Ok((value, grad_mu, lam))
    }

    fn value_and_gradient(&self, lam: &Mat, mu: &Mat) -> Result<(f64, Mat, Mat)> {
        let t = self.t;
        let w = self.stationarity_vector(lam, mu)?;
        let shifted = &self.map_x + mu * t;
        let prox = self.problem.g_prox(t, &shifted);
        let envelope = self.problem.g_value(&prox) + (&shifted - &prox).norm_squared() / (2.0 * t);
        let value = 0.5 * t * w.norm_squared() + 0.5 * t * mu.norm_squared() - envelope;
        let tw = w * t;
        let grad_lam = self.manifold.jacobian_apply(self.x, &tw)?;
        let grad_mu = self.problem.map_jac_apply(self.x, &tw) + prox - &self.map_x;
        Ok((value, grad_lam, grad_mu))
    }

    /// Dual objective `G(λ, μ)`.
    pub fn dual_value(&self, lam: &Mat, mu: &Mat) -> Result<f64> {
        self.check_multipliers(lam, mu)?;
        Ok(self.value_and_gradient(lam, mu)?.0)
    }

    /// `(∇_λ G, ∇_μ G)`.
    pub fn dual_gradient(&self, lam: &Mat, mu: &Mat) -> Result<(Mat, Mat)> {
        self.check_multipliers(lam, mu)?;
        let (_, gl, gm) = self.value_and_gradient(lam, mu)?;
        Ok((gl, gm))
    }

    /// Primal pair from multipliers: `d = −t·w`, `v = prox_{tg}(A(x) + tμ) − A(x)`.
    pub fn recover(&self, lam: &Mat, mu: &Mat) -> Result<PrimalRecovery> {
        self.check_multipliers(lam, mu)?;
        let d = self.stationarity_vector(lam, mu)? * (-self.t);
        let v = self.problem.g_prox(self.t, &(&self.map_x + mu * self.t)) - &self.map_x;
        Ok(PrimalRecovery { d, v })
    }

    /// Minimizes `G` from `warm` (or zeros) until `‖∇G‖ ≤ delta`. `λ` is
    /// minimized out in closed form at every step, so only `μ` is iterated
    /// on and the `λ` part of `warm` is ignored.
    pub fn solve_inexact(
        &self,
        delta: f64,
        warm: Option<&DualState>,
        max_inner: usize,
    ) -> Result<(DualState, PrimalRecovery)> {
        let tol = clamp_tolerance(delta)?;
        let start = self.start_blocks(warm)?;
        let none = Mat::zeros(0, 0);
        let gram = self.manifold.gram_factor(self.x)?;
        let outcome = accelerated_descent(
            |z: &Blocks| {
                let (f, gm, _) = self.reduced_value_and_gradient(&gram, &z.mu)?;
                Ok((
                    f,
                    Blocks {
                        lam: none.clone(),
                        mu: gm,
                    },
                ))
            },
            Blocks {
                lam: none.clone(),
                mu: start.mu,
            },
            self.dual_lipschitz_guess(),
            tol,
            max_inner,
        )?;
        let mu = outcome.point.mu;
        let (_, _, lam) = self.reduced_value_and_gradient(&gram, &mu)?;
        self.finish(lam, mu, tol, outcome.converged, outcome.iterations)
    }

    /// Minimizes `G` jointly over `(λ, μ)` from `warm` (or zeros). Slower
    /// than [`solve_inexact`](Self::solve_inexact); kept as an independent
    /// path for cross-checks.
    pub fn solve_joint(
        &self,
        delta: f64,
        warm: Option<&DualState>,
        max_inner: usize,
    ) -> Result<(DualState, PrimalRecovery)> {
        let tol = clamp_tolerance(delta)?;
        let start = self.start_blocks(warm)?;
        let outcome = accelerated_descent(
            |z: &Blocks| {
                let (f, gl, gm) = self.value_and_gradient(&z.lam, &z.mu)?;
                Ok((f, Blocks { lam: gl, mu: gm }))
            },
            start,
            self.dual_lipschitz_guess(),
            tol,
            max_inner,
        )?;
        let Blocks { lam, mu } = outcome.point;
        self.finish(lam, mu, tol, outcome.converged, outcome.iterations)
    }

    fn start_blocks(&self, warm: Option<&DualState>) -> Result<Blocks> {
        Ok(match warm {
            Some(w) => {
                self.check_multipliers(&w.lam, &w.mu)?;
                Blocks {
                    lam: w.lam.clone(),
                    mu: w.mu.clone(),
                }
            }
            None => {
                let z = DualState::zeros(self.manifold, self.problem);
                Blocks { lam: z.lam, mu: z.mu }
            }
        })
    }

    fn dual_lipschitz_guess(&self) -> f64 {
        let c = &self.problem.constants;
        self.t * (self.manifold.c2 + c.bound_map_jac.powi(2) + 1.0) + 1.0
    }

    fn finish(
        &self,
        lam: Mat,
        mu: Mat,
        tol: f64,
        converged: bool,
        iterations: usize,
    ) -> Result<(DualState, PrimalRecovery)> {
        let (gl, gm) = self.dual_gradient(&lam, &mu)?;
        let state = DualState {
            dual_grad_norm: joint_norm(&gl, &gm),
            lam,
            mu,
        };
        if !converged || state.dual_grad_norm > tol {
            return Err(Error::SubproblemFailure {
                iterations,
                tolerance: tol,
                best: Box::new(state),
            });
        }
        let recovery = self.recover(&state.lam, &state.mu)?;
        Ok((state, recovery))
    }

    fn require_identity(&self) -> Result<()> {
        if !self.problem.is_identity_map() {
            return Err(Error::ContractViolation(
                "the identity shortcut needs A = I".into(),
            ));
        }
        Ok(())
    }

    /// `d(λ) = prox_{(t/2)g}(x − (t/2)(∇f(x) + ∇h(x)ᵀλ)) − x`, the minimizer of
    /// `⟨∇f + ∇h(x)ᵀλ, d⟩ + g(x + d) + ‖d‖²/t` (the reduced problem with
    /// `v = d`).
    pub fn shortcut_direction(&self, lam: &Mat) -> Result<Mat> {
        self.require_identity()?;
        Ok(self.shortcut_parts(lam)?.2)
    }

    fn shortcut_parts(&self, lam: &Mat) -> Result<(Mat, Mat, Mat)> {
        let c = &self.grad_f + self.manifold.jacobian_adjoint_apply(self.x, lam)?;
        let z = self.x - &c * (0.5 * self.t);
        let y = self.problem.g_prox(0.5 * self.t, &z);
        let d = &y - self.x;
        Ok((c, z, d))
    }

    fn shortcut_value_and_gradient(&self, lam: &Mat) -> Result<(f64, Mat)> {
        let half_t = 0.5 * self.t;
        let (c, z, d) = self.shortcut_parts(lam)?;
        let y = self.x + &d;
        let envelope = self.problem.g_value(&y) + (&z - &y).norm_squared() / (2.0 * half_t);
        let value = 0.25 * self.t * c.norm_squared() - envelope;
        let grad = -self.manifold.jacobian_apply(self.x, &d)?;
        Ok((value, grad))
    }

    /// Reduced dual `G̃(λ) = (t/4)‖∇f + ∇h(x)ᵀλ‖² − M^{t/2}_g(x − (t/2)(∇f + ∇h(x)ᵀλ))`.
    pub fn shortcut_value(&self, lam: &Mat) -> Result<f64> {
        self.require_identity()?;
        Ok(self.shortcut_value_and_gradient(lam)?.0)
    }

    /// `∇G̃(λ) = −∇h(x)d(λ)`.
    pub fn shortcut_gradient(&self, lam: &Mat) -> Result<Mat> {
        self.require_identity()?;
        Ok(self.shortcut_value_and_gradient(lam)?.1)
    }

    /// Solves the reduced dual in `λ` only (valid when `A = I`), then sets
    /// `d = d(λ)`, `v = d` and `μ = −d/t − (∇f(x) + ∇h(x)ᵀλ)`. The resulting
    /// `(λ, μ)` has `∇_μ G = 0` and `∇_λ G = ∇G̃(λ)`, so the full inexactness
    /// condition holds with the same tolerance.
    pub fn solve_identity_shortcut(
        &self,
        delta: f64,
        warm: Option<&Mat>,
        max_inner: usize,
    ) -> Result<(DualState, PrimalRecovery)> {
        self.require_identity()?;
        let tol = clamp_tolerance(delta)?;
        let lam0 = match warm {
            Some(l) if l.shape() == self.manifold.constraint_shape() => l.clone(),
            Some(l) => {
                return Err(Error::InvalidInput(format!(
                    "warm multiplier has shape {:?}, expected {:?}",
                    l.shape(),
                    self.manifold.constraint_shape()
                )))
            }
            None => {
                let (r, c) = self.manifold.constraint_shape();
                Mat::zeros(r, c)
            }
        };
        let lip0 = 0.5 * self.t * self.manifold.c2 + 1.0;
        let outcome = accelerated_descent(
            |z: &Blocks| {
                let (f, g) = self.shortcut_value_and_gradient(&z.lam)?;
                Ok((
                    f,
                    Blocks {
                        lam: g,
                        mu: Mat::zeros(0, 0),
                    },
                ))
            },
            Blocks {
                lam: lam0,
                mu: Mat::zeros(0, 0),
            },
            lip0,
            tol,
            max_inner,
        )?;
        let lam = outcome.point.lam;
        let (c, _, d) = self.shortcut_parts(&lam)?;
        let mu = -(&d / self.t) - c;
        let state = DualState {
            lam,
            mu,
            dual_grad_norm: outcome.grad_norm,
        };
        if !outcome.converged {
            return Err(Error::SubproblemFailure {
                iterations: outcome.iterations,
                tolerance: tol,
                best: Box::new(state),
            });
        }
        let v = d.clone();
        Ok((state, PrimalRecovery { d, v }))
    }

    /// Dispatches to the shortcut when `A = I`, otherwise to the full dual.
    pub fn solve(
        &self,
        delta: f64,
        warm: Option<&DualState>,
        max_inner: usize,
    ) -> Result<(DualState, PrimalRecovery)> {
        if self.problem.is_identity_map() {
            self.solve_identity_shortcut(delta, warm.map(|w| &w.lam), max_inner)
        } else {
            self.solve_inexact(delta, warm, max_inner)
        }
    }
}

fn clamp_tolerance(delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inexactness tolerance must be nonnegative, got {delta}"
        )));
    }
    Ok(delta.max(MIN_TOLERANCE))
}

/// A point in the product space of the two multiplier blocks.
#[derive(Clone)]
struct Blocks {
    lam: Mat,
    mu: Mat,
}

impl Blocks {
    fn norm(&self) -> f64 {
        joint_norm(&self.lam, &self.mu)
    }

    fn dot(&self, other: &Blocks) -> f64 {
        self.lam.dot(&other.lam) + self.mu.dot(&other.mu)
    }

    fn norm_sq(&self) -> f64 {
        self.lam.norm_squared() + self.mu.norm_squared()
    }

    /// `self + s·other`
    fn axpy(&self, s: f64, other: &Blocks) -> Blocks {
        Blocks {
            lam: &self.lam + &other.lam * s,
            mu: &self.mu + &other.mu * s,
        }
    }

    fn sub(&self, other: &Blocks) -> Blocks {
        self.axpy(-1.0, other)
    }
}

struct DescentOutcome {
    point: Blocks,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
}

/// Relative size below which a difference of two objective values is treated
/// as rounding noise in the backtracking test.
const VALUE_NOISE: f64 = 1e-12;

/// Accelerated gradient with backtracking on the local Lipschitz estimate and
/// function-value/gradient restart. Returns the iterate with the smallest
/// gradient norm seen when the iteration cap is hit.
fn accelerated_descent<F>(
    mut eval: F,
    start: Blocks,
    lip0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<DescentOutcome>
where
    F: FnMut(&Blocks) -> Result<(f64, Blocks)>,
{
    let (fx, gx) = eval(&start)?;
    let mut gnorm = gx.norm();
    let mut x = start;
    if gnorm <= tol {
        return Ok(DescentOutcome {
            point: x,
            grad_norm: gnorm,
            iterations: 0,
            converged: true,
        });
    }
    let mut best = (x.clone(), gnorm);
    let mut y = x.clone();
    let (mut fy, mut gy) = (fx, gx);
    let mut momentum = 1.0_f64;
    let mut lip = lip0.max(f64::MIN_POSITIVE);

    for it in 1..=max_iter {
        // backtracking from the extrapolated point y
        let (x_new, f_new, g_new) = loop {
            let cand = y.axpy(-1.0 / lip, &gy);
            let (fc, gc) = eval(&cand)?;
            let step = cand.sub(&y);
            let step_sq = step.norm_sq();
            if step_sq == 0.0 {
                break (cand, fc, gc);
            }
            let noise = VALUE_NOISE * fc.abs().max(fy.abs()).max(1.0);
            let local = if (fc - fy).abs() > noise {
                2.0 * (fc - fy - gy.dot(&step)) / step_sq
            } else {
                gc.sub(&gy).norm() / step_sq.sqrt()
            };
            if local <= lip * (1.0 + 1e-10) || !local.is_finite() && lip > 1e300 {
                break (cand, fc, gc);
            }
            lip = (2.0 * lip).max(local);
            if !lip.is_finite() {
                return Err(Error::InvalidInput("dual objective is not smooth".into()));
            }
        };
        gnorm = g_new.norm();
        if gnorm <= tol {
            return Ok(DescentOutcome {
                point: x_new,
                grad_norm: gnorm,
                iterations: it,
                converged: true,
            });
        }
        if gnorm < best.1 {
            best = (x_new.clone(), gnorm);
        }
        let restart = gy.dot(&x_new.sub(&x)) > 0.0;
        if restart {
            momentum = 1.0;
            y = x_new.clone();
            fy = f_new;
            gy = g_new;
        } else {
            let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next;
            momentum = next;
            y = x_new.axpy(beta, &x_new.sub(&x));
            let (fy_new, gy_new) = if beta == 0.0 { (f_new, g_new) } else { eval(&y)? };
            fy = fy_new;
            gy = gy_new;
        }
        x = x_new;
        lip *= 0.9;
    }
    Ok(DescentOutcome {
        point: best.0,
        grad_norm: best.1,
        iterations: max_iter,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::{
        spca_instance, ssc_instance, IdentityMap, L1Norm, LinearSmooth, ProblemConstants, ZeroTerm,
    };
    use crate::linalg::{gaussian, random_orthonormal, sym_sum};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_spca(seed: u64, n: usize, p: usize) -> (CompositeProblem, ManifoldSpec, Mat) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = gaussian(4, n, &mut rng);
        let prob = spca_instance(&b, 0.5, 0.3, p).unwrap();
        let m = ManifoldSpec::stiefel(n, p, 0.3).unwrap();
        let x = random_orthonormal(n, p, &mut rng);
        (prob, m, x)
    }

    fn zero_g_identity(grad: Mat) -> CompositeProblem {
        let shape = grad.shape();
        CompositeProblem::new(
            shape,
            Box::new(LinearSmooth {
                coeff: grad,
                offset: 0.0,
            }),
            Box::new(IdentityMap),
            Box::new(ZeroTerm),
            ProblemConstants {
                lip_f_grad: 0.0,
                bound_f_grad: 1.0,
                lip_g: 0.0,
                bound_map_jac: 1.0,
                lip_map_jac: 0.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn dual_value_with_zero_g_and_zero_multipliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let grad = gaussian(5, 2, &mut rng);
        let prob = zero_g_identity(grad.clone());
        let m = ManifoldSpec::stiefel(5, 2, 0.3).unwrap();
        let x = random_orthonormal(5, 2, &mut rng);
        let sub = LinearizedSubproblem::new(&prob, &m, &x, 0.7).unwrap();
        let z = DualState::zeros(&m, &prob);
        let g = sub.dual_value(&z.lam, &z.mu).unwrap();
        assert!((g - 0.35 * grad.norm_squared()).abs() < 1e-12);
        assert!(LinearizedSubproblem::new(&prob, &m, &x, 0.0).is_err());
    }

    #[test]
    fn dual_is_midpoint_convex() {
        let (prob, m, x) = small_spca(22, 6, 2);
        let sub = LinearizedSubproblem::new(&prob, &m, &x, 0.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let l1 = sym_sum(&gaussian(2, 2, &mut rng));
            let l2 = sym_sum(&gaussian(2, 2, &mut rng));
            let m1 = gaussian(6, 2, &mut rng);
            let m2 = gaussian(6, 2, &mut rng);
            let mid = sub
                .dual_value(&((&l1 + &l2) * 0.5), &((&m1 + &m2) * 0.5))
                .unwrap();
            let avg = 0.5 * (sub.dual_value(&l1, &m1).unwrap() + sub.dual_value(&l2, &m2).unwrap());
            assert!(mid <= avg + 1e-10 * avg.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_matches_recovered_residuals() {
        let (prob, m, x) = small_spca(24, 6, 2);
        let sub = LinearizedSubproblem::new(&prob, &m, &x, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let lam = sym_sum(&gaussian(2, 2, &mut rng));
        let mu = gaussian(6, 2, &mut rng);
        let (gl, gm) = sub.dual_gradient(&lam, &mu).unwrap();
        let PrimalRecovery { d, v } = sub.recover(&lam, &mu).unwrap();
        let e_d = m.jacobian_apply(&x, &d).unwrap();
        let e_v = prob.map_jac_apply(&x, &d) - &v;
        assert!((gl + e_d).norm() < 1e-12);
        assert!((gm + e_v).norm() < 1e-12);
    }

    #[test]
    fn loose_tolerance_keeps_starting_mu() {
        let (prob, m, x) = small_spca(26, 5, 2);
        let sub = LinearizedSubproblem::new(&prob, &m, &x, 0.3).unwrap();
        let z = DualState::zeros(&m, &prob);
        let (gl, gm) = sub.dual_gradient(&z.lam, &z.mu).unwrap();
        let g0 = joint_norm(&gl, &gm);
        let (state, _) = sub.solve_inexact(g0 * 1.01, None, 10).unwrap();
        assert_eq!(state.mu.norm(), 0.0);
        // λ is the exact minimizer for μ = 0
        let (gl, _) = sub.dual_gradient(&state.lam, &state.mu).unwrap();
        assert!(gl.norm() < 1e-12);
        assert!(sub.dual_value(&state.lam, &state.mu).unwrap() <= sub.dual_value(&z.lam, &z.mu).unwrap());
    }

    #[test]
    fn inexact_solve_meets_tolerance_and_residual_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for seed in 0..5 {
            let (prob, m, x0) = small_spca(100 + seed, 8, 3);
            // push the iterate slightly off the manifold
            let x = &x0 + gaussian(8, 3, &mut rng) * 0.02;
            let t = rng.random_range(0.05..2.0);
            let sub = LinearizedSubproblem::new(&prob, &m, &x, t).unwrap();
            for delta in [1e-2, 1e-6, 1e-10] {
                let (state, rec) = sub.solve_inexact(delta, None, DEFAULT_MAX_INNER).unwrap();
                assert!(state.dual_grad_norm <= delta);
                let (gl, gm) = sub.dual_gradient(&state.lam, &state.mu).unwrap();
                assert!((joint_norm(&gl, &gm) - state.dual_grad_norm).abs() < 1e-12);
                assert!(m.jacobian_apply(&x, &rec.d).unwrap().norm() <= delta);
                assert!((prob.map_jac_apply(&x, &rec.d) - &rec.v).norm() <= delta);
            }
        }
    }

    #[test]
    fn shortcut_is_consistent_with_full_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        for seed in 0..10 {
            let (prob, m, x) = small_spca(200 + seed, 7, 2);
            let t = rng.random_range(0.05..3.0);
            let sub = LinearizedSubproblem::new(&prob, &m, &x, t).unwrap();
            let (state, rec) = sub
                .solve_identity_shortcut(1e-10, None, DEFAULT_MAX_INNER)
                .unwrap();
            assert!(state.dual_grad_norm <= 1e-10);
            let (gl, gm) = sub.dual_gradient(&state.lam, &state.mu).unwrap();
            assert!(gm.norm() <= 1e-12, "grad_mu = {}", gm.norm());
            let gtilde = sub.shortcut_gradient(&state.lam).unwrap();
            assert!((gl - gtilde).norm() <= 1e-10);
            let full = sub.recover(&state.lam, &state.mu).unwrap();
            assert!((full.d - &rec.d).norm() < 1e-12);
            assert!((full.v - &rec.v).norm() < 1e-12);

            let (_, rec_full) = sub.solve_inexact(1e-10, None, DEFAULT_MAX_INNER).unwrap();
            assert!((rec_full.d - &rec.d).norm() < 1e-6);
        }
    }

    #[test]
    fn shortcut_gradient_matches_fd() {
        let (prob, m, x) = small_spca(29, 6, 2);
        let sub = LinearizedSubproblem::new(&prob, &m, &x, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let lam = sym_sum(&gaussian(2, 2, &mut rng));
        let g = sub.shortcut_gradient(&lam).unwrap();
        let step = 1e-6;
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let mut e = Mat::zeros(2, 2);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            let fd = (sub.shortcut_value(&(&lam + &e * step)).unwrap()
                - sub.shortcut_value(&(&lam - &e * step)).unwrap())
                / (2.0 * step);
            let an = g.dot(&e);
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0));
        }
    }

    #[test]
    fn shortcut_with_zero_g_gives_tangent_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let grad = gaussian(6, 2, &mut rng);
        let prob = zero_g_identity(grad.clone());
        let m = ManifoldSpec::stiefel(6, 2, 0.3).unwrap();
        let x = random_orthonormal(6, 2, &mut rng);
        let t = 0.6;
        let sub = LinearizedSubproblem::new(&prob, &m, &x, t).unwrap();
        let (state, rec) = sub
            .solve_identity_shortcut(1e-12, None, DEFAULT_MAX_INNER)
            .unwrap();
        // g ≡ 0: d = −(t/2)·P_T(∇f) with P_T the tangent projection at x
        let proj = m.quarter_gram_correction(&x, &grad).unwrap();
        assert!((&rec.d + proj * (0.5 * t)).norm() < 1e-10);
        let c = &grad + m.jacobian_adjoint_apply(&x, &state.lam).unwrap();
        assert!((&rec.d + c * (0.5 * t)).norm() < 1e-12);
    }

    #[test]
    fn shortcut_rejects_nonidentity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let l = sym_sum(&gaussian(5, 5, &mut rng));
        let prob = ssc_instance(&l, 0.5, 0.3, 2).unwrap();
        let m = ManifoldSpec::stiefel(5, 2, 0.3).unwrap();
        let x = random_orthonormal(5, 2, &mut rng);
        let sub = LinearizedSubproblem::new(&prob, &m, &x, 0.5).unwrap();
        assert!(matches!(
            sub.solve_identity_shortcut(1e-6, None, 100),
            Err(Error::ContractViolation(_))
        ));
        // the general solver handles it
        let (state, rec) = sub.solve(1e-8, None, DEFAULT_MAX_INNER).unwrap();
        assert!(state.dual_grad_norm <= 1e-8);
        assert!(m.jacobian_apply(&x, &rec.d).unwrap().norm() <= 1e-8);
    }

    #[test]
    fn iteration_cap_reports_best_state() {
        let (prob, m, x) = small_spca(33, 6, 2);
        let sub = LinearizedSubproblem::new(&prob, &m, &x, 1.0).unwrap();
        match sub.solve_inexact(0.0, None, 3) {
            Err(Error::SubproblemFailure { iterations, best, .. }) => {
                assert_eq!(iterations, 3);
                assert!(best.dual_grad_norm.is_finite());
            }
            other => panic!("expected subproblem failure, got {other:?}"),
        }
        assert!(sub.solve_inexact(-1.0, None, 3).is_err());
    }

    #[test]
    fn l1_with_identity_matches_explicit_instance() {
        // an instance assembled by hand behaves like spca_instance
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let grad = gaussian(5, 2, &mut rng);
        let prob = CompositeProblem::new(
            (5, 2),
            Box::new(LinearSmooth {
                coeff: grad,
                offset: 1.0,
            }),
            Box::new(IdentityMap),
            Box::new(L1Norm { weight: 0.2 }),
            ProblemConstants {
                lip_f_grad: 0.0,
                bound_f_grad: 1.0,
                lip_g: 0.2 * 10f64.sqrt(),
                bound_map_jac: 1.0,
                lip_map_jac: 0.0,
            },
        )
        .unwrap();
        let m = ManifoldSpec::oblique(5, 2, 0.3).unwrap();
        let x = m.project_to_manifold(&gaussian(5, 2, &mut rng)).unwrap();
        let sub = LinearizedSubproblem::new(&prob, &m, &x, 0.5).unwrap();
        let (_, a) = sub
            .solve_identity_shortcut(1e-11, None, DEFAULT_MAX_INNER)
            .unwrap();
        let (_, b) = sub.solve_inexact(1e-11, None, DEFAULT_MAX_INNER).unwrap();
        assert!((a.d - b.d).norm() < 1e-8);
    }
}
