//! Brute-force and finite-difference references.
//!
//! These are deliberately slow and independent of the fast paths they check:
//! central differences for gradients, grid search for scalar proxes, dense
//! null-space solves and a primal ADMM for the linearized subproblem. The
//! `selftest` subcommand of the CLI runs [`selftest`].

use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::composite::{soft_threshold, spca_instance, CompositeProblem};
use crate::dual::{DualState, LinearizedSubproblem, PrimalRecovery, DEFAULT_MAX_INNER};
use crate::error::{Error, Result};
use crate::linalg::{gaussian, inner, joint_norm, random_orthonormal, sym_sum, Mat};
use crate::manifold::{ManifoldKind, ManifoldSpec};

/// Central differences `(f(x + s·e_i) − f(x − s·e_i)) / 2s` per entry.
pub fn finite_diff_gradient(f: impl Fn(&Mat) -> f64, x: &Mat, step: f64) -> Mat {
    let mut g = Mat::zeros(x.nrows(), x.ncols());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let up = f(&probe);
        probe[i] = orig - step;
        let down = f(&probe);
        probe[i] = orig;
        g[i] = (up - down) / (2.0 * step);
    }
    g
}

const GRID_POINTS: usize = 10_000;
const GOLDEN_TOL: f64 = 1e-10;

/// `argmin_y g(y) + (y − z)²/(2t)` by a grid over `[z − 3|z| − 3, z + 3|z| + 3]`
/// followed by golden-section refinement around the best grid point.
///
/// Golden section on function values stalls near `√(ε_mach)` on smooth
/// stretches of the objective, so the result is polished by a three-point
/// parabolic step whenever two extra probes confirm the objective is locally
/// quadratic (no kink nearby).
pub fn scalar_prox_bruteforce(g: impl Fn(f64) -> f64, t: f64, z: f64) -> f64 {
    let obj = |y: f64| g(y) + (y - z).powi(2) / (2.0 * t);
    let lo = z - 3.0 * z.abs() - 3.0;
    let hi = z + 3.0 * z.abs() + 3.0;
    let h = (hi - lo) / (GRID_POINTS - 1) as f64;
    let mut best = (lo, obj(lo));
    for i in 1..GRID_POINTS {
        let y = lo + h * i as f64;
        let v = obj(y);
        if v < best.1 {
            best = (y, v);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (obj(c), obj(d));
    while b - a > GOLDEN_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = obj(d);
        }
    }
    parabolic_polish(&obj, 0.5 * (a + b))
}

fn parabolic_polish(obj: &impl Fn(f64) -> f64, y0: f64) -> f64 {
    let h = 1e-3 * (1.0 + y0.abs());
    let (fm, f0, fp) = (obj(y0 - h), obj(y0), obj(y0 + h));
    let slope = (fp - fm) / (2.0 * h);
    let curv = (fp - 2.0 * f0 + fm) / (h * h);
    if !(curv > 0.0) {
        return y0;
    }
    let step = -slope / curv;
    if step.abs() > h {
        return y0;
    }
    let model = |s: f64| f0 + slope * s + 0.5 * curv * s * s;
    let tol = 1e-10 * (1.0 + f0.abs());
    let quadratic = [-0.5 * h, 0.5 * h]
        .iter()
        .all(|&s| (obj(y0 + s) - model(s)).abs() <= tol);
    if quadratic {
        y0 + step
    } else {
        y0
    }
}

const BRUTE_STARTS: usize = 10;
const BRUTE_TOL: f64 = 1e-13;
const BRUTE_AGREEMENT: f64 = 1e-8;
const MAX_BRUTE_AMBIENT: usize = 50;

fn random_multiplier<R: Rng>(manifold: &ManifoldSpec, rng: &mut R) -> Mat {
    let (r, c) = manifold.constraint_shape();
    match manifold.kind() {
        ManifoldKind::Stiefel => sym_sum(&gaussian(r, c, rng)) * 0.5,
        ManifoldKind::Oblique => gaussian(r, c, rng),
    }
}

/// Solves the linearized subproblem through its full dual, jointly in
/// `(λ, μ)`, from several random multiplier starts at tolerance `1e-13`, and
/// checks that every start recovers the same `(d, v)` to `1e-8`, as strong
/// convexity of the primal requires.
pub fn brute_force_subproblem(
    prob: &CompositeProblem,
    manifold: &ManifoldSpec,
    x: &Mat,
    t: f64,
) -> Result<PrimalRecovery> {
    if manifold.ambient_dim() > MAX_BRUTE_AMBIENT {
        return Err(Error::InvalidInput(format!(
            "brute-force subproblem is limited to ambient dimension {MAX_BRUTE_AMBIENT}"
        )));
    }
    let sub = LinearizedSubproblem::new(prob, manifold, x, t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mr, mc) = prob.range_shape();
    let mut first: Option<PrimalRecovery> = None;
    for start in 0..BRUTE_STARTS {
        let warm = DualState {
            lam: random_multiplier(manifold, &mut rng),
            mu: gaussian(mr, mc, &mut rng),
            dual_grad_norm: f64::INFINITY,
        };
        let (_, rec) = sub.solve_joint(BRUTE_TOL, Some(&warm), 10 * DEFAULT_MAX_INNER)?;
        match &first {
            None => first = Some(rec),
            Some(f) => {
                let gap = joint_norm(&(&f.d - &rec.d), &(&f.v - &rec.v));
                if gap > BRUTE_AGREEMENT {
                    return Err(Error::OracleFailure(format!(
                        "start {start} disagrees with start 0 by {gap:e}"
                    )));
                }
            }
        }
    }
    Ok(first.expect("at least one start"))
}

/// Matrix of a linear operator between matrix spaces, columns indexed by the
/// column-major entries of the input.
fn operator_matrix(in_len: usize, in_shape: (usize, usize), op: impl Fn(&Mat) -> Mat) -> Mat {
    let mut cols = Vec::with_capacity(in_len);
    for j in 0..in_len {
        let mut e = Mat::zeros(in_shape.0, in_shape.1);
        e[j] = 1.0;
        cols.push(op(&e));
    }
    let out_len = cols.first().map_or(0, |c| c.len());
    Mat::from_fn(out_len, in_len, |i, j| cols[j][i])
}

/// Orthonormal basis of the null space of `jac`, via the eigenvectors of the
/// complementary projector.
fn null_space(jac: &Mat) -> Mat {
    let n = jac.ncols();
    let svd = jac.transpose().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let mut proj = Mat::identity(n, n);
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > 1e-10 * smax.max(1.0) {
            let col = u.column(k);
            proj -= col * col.transpose();
        }
    }
    let proj = (&proj + proj.transpose()) * 0.5;
    let eig = SymmetricEigen::new(proj);
    let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 0.5).collect();
    Mat::from_fn(n, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])])
}

struct ReducedSubproblem {
    basis: Mat,
    coupling: Mat,
    grad: DVector<f64>,
    map_x: DVector<f64>,
    point_shape: (usize, usize),
    range_shape: (usize, usize),
}

fn reduce(prob: &CompositeProblem, manifold: &ManifoldSpec, x: &Mat) -> Result<ReducedSubproblem> {
    let shape = prob.point_shape();
    let len = shape.0 * shape.1;
    let jh = operator_matrix(len, shape, |e| {
        manifold.jacobian_apply(x, e).expect("shapes checked")
    });
    let ja = operator_matrix(len, shape, |e| prob.map_jac_apply(x, e));
    let basis = null_space(&jh);
    let coupling = &ja * &basis;
    let g = prob.smooth_grad(x);
    let grad = basis.tr_mul(&DVector::from_column_slice(g.as_slice()));
    let ax = prob.map_value(x);
    Ok(ReducedSubproblem {
        basis,
        coupling,
        grad,
        map_x: DVector::from_column_slice(ax.as_slice()),
        point_shape: shape,
        range_shape: prob.range_shape(),
    })
}

impl ReducedSubproblem {
    fn recovery(&self, u: &DVector<f64>) -> PrimalRecovery {
        let d = &self.basis * u;
        let v = &self.coupling * u;
        PrimalRecovery {
            d: Mat::from_column_slice(self.point_shape.0, self.point_shape.1, d.as_slice()),
            v: Mat::from_column_slice(self.range_shape.0, self.range_shape.1, v.as_slice()),
        }
    }
}

/// Closed-form subproblem solution for `g ≡ 0`: with `Z` an orthonormal basis
/// of `ker ∇h(x)` and `K = ∇A(x)Z`, `d = Zu`, `v = Ku` where
/// `(I + KᵀK)u = −t·Zᵀ∇f(x)`. Meaningless when `g` is not zero.
pub fn dense_smooth_subproblem(
    prob: &CompositeProblem,
    manifold: &ManifoldSpec,
    x: &Mat,
    t: f64,
) -> Result<PrimalRecovery> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let red = reduce(prob, manifold, x)?;
    let k = red.basis.ncols();
    let system = Mat::identity(k, k) + red.coupling.tr_mul(&red.coupling);
    let chol = system
        .cholesky()
        .ok_or_else(|| Error::OracleFailure("reduced system is not positive definite".into()))?;
    let u = chol.solve(&(-&red.grad * t));
    Ok(red.recovery(&u))
}

const ADMM_TOL: f64 = 1e-13;
const ADMM_MAX_ITER: usize = 2_000_000;

/// Primal solve of the linearized subproblem by ADMM on the tangent-space
/// parameterization `d = Zu`, splitting `w = Ku`:
///
/// ```text
/// min_u ⟨Zᵀ∇f, u⟩ + (‖u‖² + ‖Ku‖²)/(2t) + g(A(x) + w)   s.t. Ku = w
/// ```
///
/// Shares no code with the dual solver beyond the problem evaluators.
pub fn primal_admm_subproblem(
    prob: &CompositeProblem,
    manifold: &ManifoldSpec,
    x: &Mat,
    t: f64,
) -> Result<PrimalRecovery> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let red = reduce(prob, manifold, x)?;
    let k = red.basis.ncols();
    let r = red.coupling.nrows();
    let rho = 1.0 / t;
    let ktk = red.coupling.tr_mul(&red.coupling);
    let system = (Mat::identity(k, k) + &ktk) / t + &ktk * rho;
    let chol = system
        .cholesky()
        .ok_or_else(|| Error::OracleFailure("ADMM system is not positive definite".into()))?;
    let (rr, rc) = red.range_shape;
    let prox = |z: &DVector<f64>| -> DVector<f64> {
        let m = Mat::from_column_slice(rr, rc, z.as_slice());
        DVector::from_column_slice(prob.g_prox(1.0 / rho, &m).as_slice())
    };
    let mut w = DVector::zeros(r);
    let mut s = DVector::zeros(r);
    let mut u = DVector::zeros(k);
    for _ in 0..ADMM_MAX_ITER {
        u = chol.solve(&(-&red.grad + red.coupling.tr_mul(&(&w - &s)) * rho));
        let ku = &red.coupling * &u;
        let w_new = prox(&(&red.map_x + &ku + &s)) - &red.map_x;
        let primal = (&ku - &w_new).norm();
        let dual = rho * red.coupling.tr_mul(&(&w_new - &w)).norm();
        s += &ku - &w_new;
        w = w_new;
        if primal <= ADMM_TOL && dual <= ADMM_TOL {
            return Ok(red.recovery(&u));
        }
    }
    Err(Error::OracleFailure(format!(
        "ADMM did not reach {ADMM_TOL:e} in {ADMM_MAX_ITER} iterations (last u norm {})",
        u.norm()
    )))
}

/// Step-size and bound constants from the convergence analysis. Only used to
/// check the solver's behavior against theory; none of them drive the method.
#[derive(Debug, Clone, Copy)]
pub struct TheoryConstants {
    pub l_f: f64,
    pub ell_f: f64,
    pub ell_g: f64,
    pub ell_a: f64,
    pub l_a: f64,
    pub kappa: f64,
    pub theta: f64,
    pub c1: f64,
    pub c2: f64,
    pub l_h: f64,
    pub alpha: f64,
    pub sigma: f64,
    /// `√C2 (ℓ_f + ℓ_g ℓ_A)`
    pub m1: f64,
    /// `κ (ℓ_f + ℓ_g ℓ_A)`
    pub m2: f64,
    /// `min{2κC1/(θ L_h C2), 1/C2}`
    pub tau_hat: f64,
}

impl TheoryConstants {
    pub fn new(prob: &CompositeProblem, manifold: &ManifoldSpec, alpha: f64, sigma: f64) -> Self {
        let c = prob.constants;
        let bound = c.composite_bound();
        Self {
            l_f: c.lip_f_grad,
            ell_f: c.bound_f_grad,
            ell_g: c.lip_g,
            ell_a: c.bound_map_jac,
            l_a: c.lip_map_jac,
            kappa: manifold.kappa,
            theta: manifold.theta,
            c1: manifold.c1,
            c2: manifold.c2,
            l_h: manifold.lip_h,
            alpha,
            sigma,
            m1: manifold.c2.sqrt() * bound,
            m2: manifold.kappa * bound,
            tau_hat: (2.0 * manifold.kappa * manifold.c1 / (manifold.theta * manifold.lip_h * manifold.c2))
                .min(1.0 / manifold.c2),
        }
    }

    /// Whether `α > max{M1/C1, M2 + σ τ̂²/2}`.
    pub fn alpha_is_admissible(&self) -> bool {
        self.alpha > (self.m1 / self.c1).max(self.m2 + 0.5 * self.sigma * self.tau_hat.powi(2))
    }

    fn delta_factor(&self) -> f64 {
        (self.ell_a + 1.0) / self.c1.sqrt() + 1.0
    }

    pub fn d_bound(&self, t: f64, delta: f64) -> f64 {
        t * (2.0 * self.ell_f + self.ell_g) + self.delta_factor() * delta
    }

    pub fn v_bound(&self, t: f64, delta: f64) -> f64 {
        t * (self.ell_f + 2.0 * self.ell_g) + self.delta_factor() * delta
    }

    pub fn lam_bound(&self, t: f64, delta: f64) -> f64 {
        ((3.0 + self.ell_a) * self.ell_f
            + (3.0 * self.ell_a + 1.0) * self.ell_g
            + self.delta_factor() * (self.ell_a + 1.0) * delta / t)
            / self.c1.sqrt()
    }

    pub fn mu_bound(&self, t: f64, delta: f64) -> f64 {
        self.ell_f + 3.0 * self.ell_g + self.delta_factor() * delta / t
    }

    pub fn eta_hat1(&self, t: f64, delta: f64) -> f64 {
        (self.theta / self.d_bound(t, delta)).min(1.0)
    }

    pub fn eta_hat2(&self, t: f64, delta: f64) -> f64 {
        let cap = 1.0 / (t * (self.l_f + self.ell_g * self.l_a + self.alpha * self.l_h + self.sigma));
        self.eta_hat1(t, delta).min(cap)
    }

    pub fn tau_hat2(&self) -> f64 {
        let b = self.theta / self.kappa;
        let second =
            2.0 * (self.alpha * self.c1 - self.m1) / (self.alpha * self.l_h * self.c2 * b + self.sigma);
        self.tau_hat.min(second)
    }

    /// Worst-case number of backtracks per outer iteration,
    /// `max{⌈log_γ(η̃/η̄)⌉, ⌈log_{γ/2}(τ̃/τ̄)⌉, 0}` with `η̃ = γη̂2(t̄, Δ̄)` and
    /// `τ̃ = (γ/2)τ̂2`.
    pub fn backtrack_bound(
        &self,
        gamma: f64,
        eta_bar: f64,
        tau_bar: f64,
        t_max: f64,
        delta_bar: f64,
    ) -> usize {
        let eta_tilde = gamma * self.eta_hat2(t_max, delta_bar);
        let tau_tilde = 0.5 * gamma * self.tau_hat2();
        let a = ((eta_tilde / eta_bar).ln() / gamma.ln()).ceil();
        let b = ((tau_tilde / tau_bar).ln() / (0.5 * gamma).ln()).ceil();
        a.max(b).max(0.0) as usize
    }
}

/// Outcome of one self-test check.
#[derive(Debug, Clone)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<String>) -> SelfCheck {
    match outcome {
        Ok(detail) => SelfCheck {
            name,
            passed: true,
            detail,
        },
        Err(e) => SelfCheck {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn fail(msg: String) -> Error {
    Error::OracleFailure(msg)
}

fn random_spca<R: Rng>(rng: &mut R, n: usize, p: usize) -> Result<(CompositeProblem, ManifoldSpec, Mat)> {
    let b = gaussian(4, n, rng);
    let mu = rng.random_range(0.05..1.0);
    let prob = spca_instance(&b, mu, 0.3, p)?;
    let manifold = ManifoldSpec::stiefel(n, p, 0.3)?;
    let x = random_orthonormal(n, p, rng);
    Ok((prob, manifold, x))
}

fn check_prox<R: Rng>(rng: &mut R, trials: usize) -> Result<String> {
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let mu = rng.random_range(0.0..3.0);
        let t = rng.random_range(0.01..5.0);
        let z = rng.random_range(-10.0..10.0);
        let fast = soft_threshold(z, mu * t);
        let slow = scalar_prox_bruteforce(|y| mu * y.abs(), t, z);
        worst = worst.max((fast - slow).abs());
    }
    if worst > 1e-8 {
        return Err(fail(format!("soft threshold off by {worst:e}")));
    }
    Ok(format!("{trials} triples, max error {worst:.2e}"))
}

fn check_dual_gradient<R: Rng>(rng: &mut R, trials: usize) -> Result<String> {
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let n = rng.random_range(3..=8);
        let (prob, manifold, x) = random_spca(rng, n, 2)?;
        let t = rng.random_range(0.1..2.0);
        let sub = LinearizedSubproblem::new(&prob, &manifold, &x, t)?;
        let lam = random_multiplier(&manifold, rng);
        let mu = gaussian(n, 2, rng);
        let (gl, gm) = sub.dual_gradient(&lam, &mu)?;
        let fd_mu = finite_diff_gradient(|m| sub.dual_value(&lam, m).expect("valid"), &mu, 1e-5);
        // λ lives in symmetric matrices: differentiate along symmetric directions
        let sym_fd = finite_diff_gradient(
            |s| sub.dual_value(&(&lam + sym_sum(s) * 0.5), &mu).expect("valid"),
            &Mat::zeros(2, 2),
            1e-5,
        );
        let fd_lam = sym_sum(&sym_fd) * 0.5;
        let err = joint_norm(&(&gl - &fd_lam), &(&gm - &fd_mu)) / joint_norm(&gl, &gm).max(1.0);
        worst = worst.max(err);
    }
    if worst > 1e-5 {
        return Err(fail(format!("relative gradient error {worst:e}")));
    }
    Ok(format!("{trials} instances, max relative error {worst:.2e}"))
}

fn check_manifold_constants<R: Rng>(rng: &mut R, trials: usize) -> Result<String> {
    let theta = 0.1;
    for kind in [ManifoldKind::Stiefel, ManifoldKind::Oblique] {
        let (n, p) = (6, 3);
        let m = match kind {
            ManifoldKind::Stiefel => ManifoldSpec::stiefel(n, p, theta)?,
            ManifoldKind::Oblique => ManifoldSpec::oblique(n, p, theta)?,
        };
        let mut accepted = 0;
        while accepted < trials {
            let base = m.project_to_manifold(&gaussian(n, p, rng))?;
            let x = &base + gaussian(n, p, rng) * rng.random_range(0.0..0.2);
            if m.distance_to_manifold(&x)? > 2.0 * theta {
                continue;
            }
            accepted += 1;
            let dist = m.distance_to_manifold(&x)?;
            let hn = m.infeasibility(&x)?;
            if dist > hn {
                return Err(fail(format!("{kind:?}: dist {dist} exceeds ‖h‖ {hn}")));
            }
            let s = random_multiplier(&m, rng);
            let q = inner(&s, &m.gram_apply(&x, &s)?) / s.norm_squared();
            if q < m.c1 - 1e-9 || q > m.c2 + 1e-9 {
                return Err(fail(format!(
                    "{kind:?}: Rayleigh quotient {q} outside [{}, {}]",
                    m.c1, m.c2
                )));
            }
        }
    }
    Ok(format!("{trials} points per manifold"))
}

fn check_shortcut<R: Rng>(rng: &mut R, trials: usize) -> Result<String> {
    let mut worst_mu = 0.0_f64;
    let mut worst_d = 0.0_f64;
    for _ in 0..trials {
        let (prob, manifold, x) = random_spca(rng, 5, 2)?;
        let t = rng.random_range(0.1..2.0);
        let sub = LinearizedSubproblem::new(&prob, &manifold, &x, t)?;
        let (state, rec) = sub.solve_identity_shortcut(1e-10, None, DEFAULT_MAX_INNER)?;
        let (gl, gm) = sub.dual_gradient(&state.lam, &state.mu)?;
        let gt = sub.shortcut_gradient(&state.lam)?;
        if (&gl - &gt).norm() > 1e-10 {
            return Err(fail("∇_λ G differs from the reduced gradient".into()));
        }
        worst_mu = worst_mu.max(gm.norm());
        let oracle = brute_force_subproblem(&prob, &manifold, &x, t)?;
        worst_d = worst_d.max((&rec.d - &oracle.d).norm());
    }
    if worst_mu > 1e-12 || worst_d > 1e-6 {
        return Err(fail(format!("‖∇_μ G‖ {worst_mu:e}, d error {worst_d:e}")));
    }
    Ok(format!(
        "{trials} instances, ‖∇_μ G‖ ≤ {worst_mu:.1e}, d error ≤ {worst_d:.1e}"
    ))
}

fn check_subproblem<R: Rng>(rng: &mut R, trials: usize) -> Result<String> {
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let (prob, manifold, x) = random_spca(rng, 6, 2)?;
        let t = rng.random_range(0.1..2.0);
        let sub = LinearizedSubproblem::new(&prob, &manifold, &x, t)?;
        let (_, rec) = sub.solve_inexact(1e-10, None, DEFAULT_MAX_INNER)?;
        let brute = brute_force_subproblem(&prob, &manifold, &x, t)?;
        let admm = primal_admm_subproblem(&prob, &manifold, &x, t)?;
        let e1 = joint_norm(&(&rec.d - &brute.d), &(&rec.v - &brute.v));
        let e2 = joint_norm(&(&admm.d - &brute.d), &(&admm.v - &brute.v));
        worst = worst.max(e1).max(e2);
    }
    if worst > 1e-6 {
        return Err(fail(format!("subproblem solutions disagree by {worst:e}")));
    }
    Ok(format!("{trials} instances, max disagreement {worst:.2e}"))
}

/// Runs the oracle cross-checks at reduced sample counts.
pub fn selftest(seed: u64) -> Vec<SelfCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check("prox vs brute force", check_prox(&mut rng, 300)),
        check(
            "dual gradient vs finite differences",
            check_dual_gradient(&mut rng, 10),
        ),
        check(
            "manifold error bound and Gram spectrum",
            check_manifold_constants(&mut rng, 200),
        ),
        check("identity shortcut consistency", check_shortcut(&mut rng, 5)),
        check(
            "subproblem: dual vs brute force vs ADMM",
            check_subproblem(&mut rng, 5),
        ),
    ]
}
