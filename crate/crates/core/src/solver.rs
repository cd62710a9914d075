//! The outer FSIPL iteration.
//!
//! Each outer step linearizes `h` and `A` at `x^k`, solves the resulting
//! strongly convex direction problem inexactly through its dual, moves along
//! the tangential direction `y = x + ηd`, and then either takes a gradient
//! step on `½‖h‖²` (when `y` is inside the safeguard radius) or projects onto
//! the manifold. The trial point is accepted by a nonmonotone test on the
//! merit `Φ_α = F + α‖h‖`; otherwise `η` and `τ` are shrunk and the step is
//! retried.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::composite::{CompositeProblem, ProblemConstants};
use crate::dual::{DualState, LinearizedSubproblem, PrimalRecovery, DEFAULT_MAX_INNER};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::manifold::ManifoldSpec;

/// Largest `‖h(x⁰)‖` accepted as a feasible starting point.
pub const START_FEASIBILITY_TOL: f64 = 1e-10;

/// Below this `‖x^k − x^{k−1}‖` the BB quotient is not formed.
pub const BB_MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Backtracking factor `γ ∈ (0, 1)`.
    pub gamma: f64,
    pub sigma: f64,
    /// Merit weight; `None` selects [`alpha_default`].
    pub alpha: Option<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub delta_bar: f64,
    pub eta_bar: f64,
    /// Initial correction step; `None` selects the manifold's
    /// [`ManifoldSpec::correction_step_bound`].
    pub tau_bar: Option<f64>,
    /// `ρ_0 = rho_scale·p·α`, `ρ_k = ρ_0 / k^rho_exponent`.
    pub rho_scale: f64,
    pub rho_exponent: f64,
    pub delta0: f64,
    /// `Δ_k = min{delta_c1‖d^{k−1}‖/t_{k−1}, delta_c2/k^delta_c3, Δ̄}`.
    pub delta_c1: f64,
    pub delta_c2: f64,
    pub delta_c3: f64,
    pub epsilon: f64,
    pub max_outer: usize,
    pub max_backtracks: usize,
    pub max_inner: usize,
    pub bb_rule: BbRule,
    /// The dual subproblem is solved to `min{Δ_k, inner_accuracy·ε·t_k}`.
    /// The acceptance test still uses `Δ_k`, which remains a valid bound.
    /// `inf` solves to `Δ_k` alone.
    pub inner_accuracy: f64,
}

/// Orientation of the BB quotient used for `t_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BbRule {
    /// `‖Δx‖² / |⟨Δx, ΔR⟩|`, a step length.
    #[default]
    Inverse,
    /// `|⟨Δx, ΔR⟩| / ‖Δx‖²`, a curvature estimate.
    Quotient,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            sigma: 2.0,
            alpha: None,
            t_min: 1e-3,
            t_max: 1e5,
            delta_bar: 0.5,
            eta_bar: 1.0,
            tau_bar: None,
            rho_scale: 15.0,
            rho_exponent: 1.01,
            delta0: 0.5,
            delta_c1: 1.0,
            delta_c2: 1.0,
            delta_c3: 1.01,
            epsilon: 1e-4,
            max_outer: 5000,
            max_backtracks: 60,
            max_inner: DEFAULT_MAX_INNER,
            bb_rule: BbRule::Inverse,
            inner_accuracy: 0.1,
        }
    }
}

impl SolverConfig {
    /// Sparse PCA preset for `St(n, p)`.
    pub fn for_spca(n: usize, p: usize) -> Self {
        let p2 = (p * p) as f64;
        Self {
            delta_c1: p2,
            delta_c2: p2,
            delta_c3: 1.01,
            epsilon: 1e-4_f64.min(1e-8 * (n * p) as f64),
            max_outer: 5000,
            ..Self::default()
        }
    }

    /// Sparse spectral clustering preset with `p` clusters. Uses the
    /// curvature form of the BB rule and solves the dual to `Δ_k` alone.
    pub fn for_ssc(p: usize) -> Self {
        Self {
            bb_rule: BbRule::Quotient,
            inner_accuracy: f64::INFINITY,
            delta_c1: 1.0 / p as f64,
            delta_c2: p as f64,
            delta_c3: 1.1,
            epsilon: 1e-4,
            max_outer: 1000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        let positive = [
            ("sigma", self.sigma),
            ("t_min", self.t_min),
            ("t_max", self.t_max),
            ("delta_bar", self.delta_bar),
            ("eta_bar", self.eta_bar),
            ("rho_scale", self.rho_scale),
            ("delta0", self.delta0),
            ("delta_c1", self.delta_c1),
            ("delta_c2", self.delta_c2),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if let Some(tb) = self.tau_bar {
            if !(tb > 0.0 && tb.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "tau_bar must be positive, got {tb}"
                )));
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "alpha must be positive, got {a}"
                )));
            }
        }
        if self.t_min > self.t_max {
            return bad("t_min must not exceed t_max");
        }
        if !(self.rho_exponent > 1.0) {
            return bad("rho_exponent must exceed 1 for a summable sequence");
        }
        if !(self.delta_c3 > 0.0) {
            return bad("delta_c3 must be positive");
        }
        if !(self.inner_accuracy > 0.0) {
            return bad("inner_accuracy must be positive");
        }
        if self.max_inner == 0 {
            return bad("max_inner must be at least 1");
        }
        Ok(())
    }

    /// Tolerance handed to the dual solver at outer iteration `k`.
    pub fn inner_tolerance(&self, delta: f64, t: f64) -> f64 {
        delta.min(self.inner_accuracy * self.epsilon * t)
    }

    pub fn clamp_t(&self, t: f64) -> f64 {
        t.max(self.t_min).min(self.t_max)
    }
}

/// `α = max{6(ℓ_f + ℓ_gℓ_A), ℓ_f + ℓ_gℓ_A + 1}`.
pub fn alpha_default(constants: &ProblemConstants) -> f64 {
    let b = constants.composite_bound();
    (6.0 * b).max(b + 1.0)
}

/// `ρ_k`: `ρ_0 = scale·p·α` and `ρ_0/k^exponent` afterwards.
pub fn rho_schedule(cfg: &SolverConfig, k: usize, p: usize, alpha: f64) -> f64 {
    let base = cfg.rho_scale * p as f64 * alpha;
    if k == 0 {
        base
    } else {
        base / (k as f64).powf(cfg.rho_exponent)
    }
}

/// `Δ_k`: `Δ_0` at `k = 0`, then `min{c1‖d^{k−1}‖/t_{k−1}, c2/k^c3, Δ̄}`.
pub fn delta_schedule(cfg: &SolverConfig, k: usize, prev_d_norm: f64, prev_t: f64) -> f64 {
    if k == 0 {
        return cfg.delta0.min(cfg.delta_bar);
    }
    (cfg.delta_c1 * prev_d_norm / prev_t)
        .min(cfg.delta_c2 / (k as f64).powf(cfg.delta_c3))
        .min(cfg.delta_bar)
}

/// `t_0 = 1/L_f`, clamped into `[t_min, t_max]` (`t_max` when `L_f = 0`).
pub fn initial_proximal_parameter(cfg: &SolverConfig, constants: &ProblemConstants) -> f64 {
    if constants.lip_f_grad > 0.0 {
        cfg.clamp_t(1.0 / constants.lip_f_grad)
    } else {
        cfg.t_max
    }
}

/// What the BB rule needs from one outer iterate.
#[derive(Debug, Clone)]
pub struct BbSnapshot {
    pub x: Mat,
    /// `∇f(x) − ¼∇h(x)ᵀ∇h(x)[∇f(x)]`
    pub proj_grad: Mat,
}

impl BbSnapshot {
    pub fn new(prob: &CompositeProblem, manifold: &ManifoldSpec, x: &Mat) -> Result<Self> {
        let g = prob.smooth_grad(x);
        Ok(Self {
            x: x.clone(),
            proj_grad: manifold.quarter_gram_correction(x, &g)?,
        })
    }
}

/// BB-type proximal parameter, by default `t_k = clamp(‖Δx‖² / |⟨Δx, ΔR⟩|)`
/// (see [`BbRule`]), with
/// `ΔR = gradf(x^k) − gradf(x^{k−1}) + (∇h(x^k) − ∇h(x^{k−1}))ᵀ(λ^{k−1} − λ^{k−2})`.
/// Returns `prev_t` when `‖Δx‖ < 1e-14`.
pub fn bb_proximal_parameter(
    cfg: &SolverConfig,
    manifold: &ManifoldSpec,
    current: &BbSnapshot,
    previous: &BbSnapshot,
    lam_diff: &Mat,
    prev_t: f64,
) -> Result<f64> {
    let dx = &current.x - &previous.x;
    let dx_sq = dx.norm_squared();
    if dx_sq.sqrt() < BB_MIN_STEP {
        return Ok(prev_t);
    }
    let mut dr = &current.proj_grad - &previous.proj_grad;
    dr += manifold.jacobian_adjoint_apply(&current.x, lam_diff)?;
    dr -= manifold.jacobian_adjoint_apply(&previous.x, lam_diff)?;
    let curvature = (dx.dot(&dr) / dx_sq).abs();
    let q = match cfg.bb_rule {
        BbRule::Inverse => 1.0 / curvature,
        BbRule::Quotient => curvature,
    };
    Ok(if q.is_finite() { cfg.clamp_t(q) } else { prev_t })
}

/// Correction or projection: `y − τ∇N(y)` when `‖h(y)‖ ≤ θ/κ`, otherwise
/// the projection of `y`. The flag is set on the projection branch.
pub fn trial_point(manifold: &ManifoldSpec, y: &Mat, tau: f64) -> Result<(Mat, bool)> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if manifold.infeasibility(y)? <= manifold.safeguard_radius() {
        let grad = manifold.correction_gradient(y)?;
        Ok((y - grad * tau, false))
    } else {
        Ok((manifold.project_to_manifold(y)?, true))
    }
}

/// Quantities of the acceptance inequality fixed for one outer iteration.
#[derive(Debug, Clone, Copy)]
pub struct AcceptanceTerms {
    pub merit_x: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub lip_g: f64,
    pub d_norm: f64,
    pub v_norm: f64,
    pub lam_norm: f64,
    pub mu_norm: f64,
    pub t: f64,
    pub delta: f64,
    pub rho: f64,
}

impl AcceptanceTerms {
    /// Right-hand side
    /// `Φ(x) − (σ/2)(η²‖d‖² + τ²‖h(y)‖) − (η/2t)‖v‖² + η(α + ℓ_g + ‖λ‖ + ‖μ‖)Δ + ρ`.
    pub fn bound(&self, eta: f64, tau: f64, h_y: f64) -> f64 {
        self.merit_x
            - 0.5 * self.sigma * (eta * eta * self.d_norm * self.d_norm + tau * tau * h_y)
            - eta / (2.0 * self.t) * self.v_norm * self.v_norm
            + eta * (self.alpha + self.lip_g + self.lam_norm + self.mu_norm) * self.delta
            + self.rho
    }
}

/// Safeguard `‖h(x̂)‖ ≤ θ/κ` and `Φ_α(x̂) ≤ bound`, compared exactly.
/// Returns the decision and `Φ_α(x̂)`.
pub fn accept_test(
    prob: &CompositeProblem,
    manifold: &ManifoldSpec,
    terms: &AcceptanceTerms,
    xhat: &Mat,
    h_y: f64,
    eta: f64,
    tau: f64,
) -> Result<(bool, f64)> {
    let h_hat = manifold.infeasibility(xhat)?;
    let merit = prob.objective(xhat) + terms.alpha * h_hat;
    if h_hat > manifold.safeguard_radius() {
        return Ok((false, merit));
    }
    Ok((merit <= terms.bound(eta, tau, h_y), merit))
}

/// `max{‖∇f(x) + ∇A(x)ᵀ(μ − v/t) + ∇h(x)ᵀλ‖, ‖v‖, ‖h(x)‖}`.
pub fn residual(
    prob: &CompositeProblem,
    manifold: &ManifoldSpec,
    x: &Mat,
    v: &Mat,
    lam: &Mat,
    mu: &Mat,
    t: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let sub = mu - v / t;
    let mut w = prob.smooth_grad(x) + prob.map_jac_adjoint(x, &sub);
    w += manifold.jacobian_adjoint_apply(x, lam)?;
    Ok(w.norm().max(v.norm()).max(manifold.infeasibility(x)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Residual,
    MaxOuter,
    SubproblemFailure,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Residual => "residual",
            Termination::MaxOuter => "max_outer",
            Termination::SubproblemFailure => "subproblem_failure",
        })
    }
}

/// One outer iteration. The line-search fields describe the accepted step
/// and are zero on the final row, where no step is taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub objective: f64,
    pub merit: f64,
    pub residual: f64,
    pub h_norm: f64,
    pub d_norm: f64,
    pub v_norm: f64,
    pub lam_norm: f64,
    pub mu_norm: f64,
    pub t: f64,
    pub delta: f64,
    /// Tolerance the dual solve was run to, at most `delta`.
    pub inner_tol: f64,
    pub rho: f64,
    pub dual_grad_norm: f64,
    pub stepped: bool,
    pub eta: f64,
    pub tau: f64,
    pub backtracks: usize,
    pub projected: bool,
    /// `‖h(y)‖` at the accepted `y`.
    pub h_y: f64,
    /// Distance of the accepted `y` to the manifold.
    pub dist_y: f64,
    /// Right-hand side of the acceptance inequality at the accepted step.
    pub accept_bound: f64,
    /// `Φ_α` at the accepted trial point.
    pub merit_next: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Final iterate, projected onto the manifold.
    pub x: Mat,
    /// `‖h‖` of the last iterate before the final projection.
    pub h_before_projection: f64,
    pub objective: f64,
    pub records: Vec<IterationRecord>,
    pub alpha: f64,
    pub proj_count: usize,
    pub termination: Termination,
    /// Description of the inner failure when `termination` is
    /// [`Termination::SubproblemFailure`].
    pub failure: Option<String>,
    pub seconds: f64,
}

impl SolveReport {
    /// Outer iterations in which a step was taken.
    pub fn iterations(&self) -> usize {
        self.records.iter().filter(|r| r.stepped).count()
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual)
    }
}

fn solve_direction(
    sub: &LinearizedSubproblem<'_>,
    delta: f64,
    warm: Option<&DualState>,
    max_inner: usize,
) -> std::result::Result<(DualState, PrimalRecovery), Error> {
    sub.solve(delta, warm, max_inner)
}

/// Runs the method from a feasible `x0`.
pub fn solve(
    prob: &CompositeProblem,
    manifold: &ManifoldSpec,
    cfg: &SolverConfig,
    x0: &Mat,
) -> Result<SolveReport> {
    solve_observed(prob, manifold, cfg, x0, |_, _| {})
}

/// [`solve`], calling `observer(k, x^k)` at every outer iterate.
pub fn solve_observed(
    prob: &CompositeProblem,
    manifold: &ManifoldSpec,
    cfg: &SolverConfig,
    x0: &Mat,
    mut observer: impl FnMut(usize, &Mat),
) -> Result<SolveReport> {
    cfg.validate()?;
    if x0.shape() != manifold.point_shape() || x0.shape() != prob.point_shape() {
        return Err(Error::InvalidInput(format!(
            "starting point has shape {:?}, expected {:?}",
            x0.shape(),
            manifold.point_shape()
        )));
    }
    let h0 = manifold.infeasibility(x0)?;
    if !(h0 <= START_FEASIBILITY_TOL) {
        return Err(Error::InvalidInput(format!(
            "starting point must lie on the manifold, ‖h(x0)‖ = {h0:e}"
        )));
    }
    let start = Instant::now();
    let alpha = cfg.alpha.unwrap_or_else(|| alpha_default(&prob.constants));
    let p = manifold.point_shape().1;
    let lip_g = prob.constants.lip_g;
    let tau_bar = cfg.tau_bar.unwrap_or_else(|| manifold.correction_step_bound());

    let mut x = x0.clone();
    let mut records = Vec::new();
    let mut proj_count = 0;
    let mut warm: Option<DualState> = None;
    let mut previous: Option<BbSnapshot> = None;
    let (lr, lc) = manifold.constraint_shape();
    // λ^{k−1} and λ^{k−2}
    let mut lam_prev = Mat::zeros(lr, lc);
    let mut lam_prev2 = Mat::zeros(lr, lc);
    let mut t = initial_proximal_parameter(cfg, &prob.constants);
    let mut prev_d_norm = 0.0;
    let mut failure = None;

    let mut k = 0;
    let termination = loop {
        observer(k, &x);
        let current = BbSnapshot::new(prob, manifold, &x)?;
        if let Some(prev) = &previous {
            let lam_diff = &lam_prev - &lam_prev2;
            t = bb_proximal_parameter(cfg, manifold, &current, prev, &lam_diff, t)?;
        }
        let delta = delta_schedule(cfg, k, prev_d_norm, t_prev_or(&records, t));
        let rho = rho_schedule(cfg, k, p, alpha);

        let sub = LinearizedSubproblem::new(prob, manifold, &x, t)?;
        let inner_tol = cfg.inner_tolerance(delta, t);
        let (state, rec) = match solve_direction(&sub, inner_tol, warm.as_ref(), cfg.max_inner) {
            Ok(out) => out,
            Err(e @ Error::SubproblemFailure { .. }) => {
                failure = Some(e.to_string());
                break Termination::SubproblemFailure;
            }
            Err(e) => return Err(e),
        };
        let h_norm = manifold.infeasibility(&x)?;
        let objective = prob.objective(&x);
        let merit = objective + alpha * h_norm;
        let res = residual(prob, manifold, &x, &rec.v, &state.lam, &state.mu, t)?;
        let mut row = IterationRecord {
            k,
            objective,
            merit,
            residual: res,
            h_norm,
            d_norm: rec.d.norm(),
            v_norm: rec.v.norm(),
            lam_norm: state.lam.norm(),
            mu_norm: state.mu.norm(),
            t,
            delta,
            inner_tol,
            rho,
            dual_grad_norm: state.dual_grad_norm,
            stepped: false,
            eta: 0.0,
            tau: 0.0,
            backtracks: 0,
            projected: false,
            h_y: 0.0,
            dist_y: 0.0,
            accept_bound: 0.0,
            merit_next: 0.0,
        };
        if res < cfg.epsilon {
            records.push(row);
            break Termination::Residual;
        }
        if k >= cfg.max_outer {
            records.push(row);
            break Termination::MaxOuter;
        }

        let terms = AcceptanceTerms {
            merit_x: merit,
            alpha,
            sigma: cfg.sigma,
            lip_g,
            d_norm: row.d_norm,
            v_norm: row.v_norm,
            lam_norm: row.lam_norm,
            mu_norm: row.mu_norm,
            t,
            delta,
            rho,
        };
        let (mut eta, mut tau) = (cfg.eta_bar, tau_bar);
        let mut backtracks = 0;
        let (x_next, projected, h_y, y, merit_next) = loop {
            let y = &x + &rec.d * eta;
            let h_y = manifold.infeasibility(&y)?;
            let (xhat, projected) = trial_point(manifold, &y, tau)?;
            let (ok, merit_hat) = accept_test(prob, manifold, &terms, &xhat, h_y, eta, tau)?;
            if ok {
                break (xhat, projected, h_y, y, merit_hat);
            }
            backtracks += 1;
            if backtracks > cfg.max_backtracks {
                return Err(Error::LineSearchFailure {
                    iteration: k,
                    max_backtracks: cfg.max_backtracks,
                });
            }
            eta *= cfg.gamma;
            tau *= 0.5 * cfg.gamma;
        };
        row.stepped = true;
        row.eta = eta;
        row.tau = tau;
        row.backtracks = backtracks;
        row.projected = projected;
        row.h_y = h_y;
        row.dist_y = manifold.distance_to_manifold(&y)?;
        row.accept_bound = terms.bound(eta, tau, h_y);
        row.merit_next = merit_next;
        records.push(row);
        if projected {
            proj_count += 1;
        }

        lam_prev2 = std::mem::replace(&mut lam_prev, state.lam.clone());
        prev_d_norm = rec.d.norm();
        previous = Some(current);
        warm = Some(state);
        x = x_next;
        k += 1;
    };

    let h_before_projection = manifold.infeasibility(&x)?;
    let x_final = manifold.project_to_manifold(&x)?;
    Ok(SolveReport {
        objective: prob.objective(&x_final),
        x: x_final,
        h_before_projection,
        records,
        alpha,
        proj_count,
        termination,
        failure,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `t_{k−1}` from the last stepped record.
fn t_prev_or(records: &[IterationRecord], fallback: f64) -> f64 {
    records.last().map_or(fallback, |r| r.t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::{spca_instance, IdentityMap, IsotropicQuadratic, ZeroTerm};
    use crate::linalg::{gaussian, random_orthonormal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constants(ell_f: f64, ell_g: f64, ell_a: f64) -> ProblemConstants {
        ProblemConstants {
            lip_f_grad: 1.0,
            bound_f_grad: ell_f,
            lip_g: ell_g,
            bound_map_jac: ell_a,
            lip_map_jac: 0.0,
        }
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_default(&constants(4.0, 3.0, 2.0)), 60.0);
        assert!((alpha_default(&constants(0.05, 0.05, 1.0)) - 1.1).abs() < 1e-15);
        for b in [0.01, 0.1, 1.0, 10.0, 1e4] {
            let a = alpha_default(&constants(b, 0.0, 1.0));
            assert!(a > (5.0 * b).max(b + 0.5));
        }
    }

    #[test]
    fn schedules_at_start_and_bounds() {
        let cfg = SolverConfig::for_spca(20, 3);
        assert_eq!(rho_schedule(&cfg, 0, 3, 10.0), 450.0);
        assert_eq!(delta_schedule(&cfg, 0, 0.0, 1.0), 0.5);
        for k in 1..200 {
            assert!(delta_schedule(&cfg, k, 100.0, 0.01) <= 0.5);
            assert!(rho_schedule(&cfg, k, 3, 10.0) <= rho_schedule(&cfg, k - 1, 3, 10.0));
        }
        assert!((delta_schedule(&cfg, 5, 1e-4, 1.0) - 9e-4).abs() < 1e-18);
    }

    #[test]
    fn rho_is_summable() {
        // Σ_{k≥1} k^{-1.01} ≤ 1 + ∫_1^∞ x^{-1.01} dx = 101
        let cfg = SolverConfig::default();
        let base = rho_schedule(&cfg, 0, 1, 1.0);
        let mut partial = 0.0;
        let mut last = 0.0;
        for k in 1..=1_000_000 {
            last = rho_schedule(&cfg, k, 1, 1.0) / base;
            partial += last;
        }
        assert!(partial < 101.0);
        assert!(last / partial < 1e-3);
    }

    #[test]
    fn presets() {
        let s = SolverConfig::for_spca(300, 5);
        assert_eq!((s.delta_c1, s.delta_c2, s.delta_c3), (25.0, 25.0, 1.01));
        assert_eq!(s.epsilon, 1.5e-5);
        let s = SolverConfig::for_spca(2000, 50);
        assert_eq!(s.epsilon, 1e-4);
        let c = SolverConfig::for_ssc(5);
        assert_eq!(
            (c.delta_c1, c.delta_c2, c.delta_c3, c.max_outer),
            (0.2, 5.0, 1.1, 1000)
        );
        assert_eq!(c.bb_rule, BbRule::Quotient);
        assert_eq!(c.inner_tolerance(0.3, 10.0), 0.3);
        assert!(s.validate().is_ok());
        let bad = SolverConfig {
            gamma: 1.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn bb_on_quadratic() {
        // f = (c/2)‖x‖²; snapshots carry the raw gradient so ΔR = cΔx
        let m = ManifoldSpec::stiefel(4, 1, 0.3).unwrap();
        let c = 7.0;
        let prob = CompositeProblem::new(
            (4, 1),
            Box::new(IsotropicQuadratic {
                curvature: c,
                center: Mat::zeros(4, 1),
            }),
            Box::new(IdentityMap),
            Box::new(ZeroTerm),
            constants(1.0, 0.0, 1.0),
        )
        .unwrap();
        let lam0 = Mat::zeros(1, 1);
        let y1 = gaussian(4, 1, &mut ChaCha8Rng::seed_from_u64(1));
        let y2 = gaussian(4, 1, &mut ChaCha8Rng::seed_from_u64(2));
        let s1 = BbSnapshot {
            x: y1.clone(),
            proj_grad: prob.smooth_grad(&y1),
        };
        let s2 = BbSnapshot {
            x: y2.clone(),
            proj_grad: prob.smooth_grad(&y2),
        };

        let quotient = SolverConfig {
            bb_rule: BbRule::Quotient,
            ..SolverConfig::default()
        };
        let t = bb_proximal_parameter(&quotient, &m, &s1, &s2, &lam0, 1.0).unwrap();
        assert!((t - c).abs() < 1e-12);
        let t = bb_proximal_parameter(&SolverConfig::default(), &m, &s1, &s2, &lam0, 1.0).unwrap();
        assert!((t - 1.0 / c).abs() < 1e-12);

        let narrow = SolverConfig {
            t_max: 2.0,
            ..quotient
        };
        assert_eq!(
            bb_proximal_parameter(&narrow, &m, &s1, &s2, &lam0, 1.0).unwrap(),
            2.0
        );
        let narrow = SolverConfig {
            t_min: 0.5,
            ..SolverConfig::default()
        };
        assert_eq!(
            bb_proximal_parameter(&narrow, &m, &s1, &s2, &lam0, 1.0).unwrap(),
            0.5
        );

        // repeated point: previous t is kept
        let a = BbSnapshot::new(&prob, &m, &y1).unwrap();
        assert_eq!(
            bb_proximal_parameter(&SolverConfig::default(), &m, &a, &a, &lam0, 0.25).unwrap(),
            0.25
        );
    }

    #[test]
    fn initial_t_is_clamped_inverse_lipschitz() {
        let cfg = SolverConfig::default();
        assert_eq!(initial_proximal_parameter(&cfg, &constants(1.0, 0.0, 1.0)), 1.0);
        let mut c = constants(1.0, 0.0, 1.0);
        c.lip_f_grad = 1e6;
        assert_eq!(initial_proximal_parameter(&cfg, &c), 1e-3);
    }

    #[test]
    fn trial_point_branches() {
        let m = ManifoldSpec::stiefel(5, 2, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = random_orthonormal(5, 2, &mut rng);
        let (xh, proj) = trial_point(&m, &y, 1.0).unwrap();
        assert!(!proj);
        assert!((xh - &y).norm() < 1e-14);
        let far = &y * 3.5;
        assert!(m.infeasibility(&far).unwrap() > 10.0 - 1e-9);
        let (xh, proj) = trial_point(&m, &far, 1.0).unwrap();
        assert!(proj);
        assert!(m.infeasibility(&xh).unwrap() <= 1e-12);
        assert!(trial_point(&m, &y, 0.0).is_err());
    }

    #[test]
    fn correction_reduces_infeasibility_for_small_tau() {
        let m = ManifoldSpec::stiefel(6, 3, 0.3).unwrap();
        let tau_hat = m.correction_step_bound();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut checked = 0;
        while checked < 200 {
            let y = random_orthonormal(6, 3, &mut rng) + gaussian(6, 3, &mut rng) * 0.05;
            let hy = m.infeasibility(&y).unwrap();
            if hy > m.safeguard_radius() {
                continue;
            }
            checked += 1;
            let (xh, proj) = trial_point(&m, &y, tau_hat).unwrap();
            assert!(!proj);
            assert!(m.infeasibility(&xh).unwrap() <= hy);
        }
    }

    #[test]
    fn accept_test_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = gaussian(4, 6, &mut rng);
        let prob = spca_instance(&b, 0.5, 0.3, 2).unwrap();
        let m = ManifoldSpec::stiefel(6, 2, 0.3).unwrap();
        let x = random_orthonormal(6, 2, &mut rng);
        let terms = AcceptanceTerms {
            merit_x: prob.merit(&m, 10.0, &x).unwrap(),
            alpha: 10.0,
            sigma: 2.0,
            lip_g: prob.constants.lip_g,
            d_norm: 0.0,
            v_norm: 0.0,
            lam_norm: 0.0,
            mu_norm: 0.0,
            t: 1.0,
            delta: 0.1,
            rho: 0.0,
        };
        assert!(accept_test(&prob, &m, &terms, &x, 0.0, 1.0, 1.0).unwrap().0);
        // a point just outside the safeguard is rejected whatever the merit
        let mut out = Mat::zeros(6, 2);
        out[(0, 0)] = (1.0f64 + 0.31).sqrt();
        out[(1, 1)] = 1.0;
        assert!((m.infeasibility(&out).unwrap() - 0.31).abs() < 1e-12);
        let loose = AcceptanceTerms { rho: 1e12, ..terms };
        assert!(!accept_test(&prob, &m, &loose, &out, 0.0, 1.0, 1.0).unwrap().0);
    }

    #[test]
    fn residual_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = gaussian(4, 6, &mut rng);
        let prob = spca_instance(&b, 0.3, 0.3, 2).unwrap();
        let m = ManifoldSpec::stiefel(6, 2, 0.3).unwrap();
        let x = random_orthonormal(6, 2, &mut rng) + gaussian(6, 2, &mut rng) * 0.01;
        for t in [0.05, 0.5, 3.0] {
            let sub = LinearizedSubproblem::new(&prob, &m, &x, t).unwrap();
            let (s, r) = sub.solve(1e-9, None, DEFAULT_MAX_INNER).unwrap();
            let res = residual(&prob, &m, &x, &r.v, &s.lam, &s.mu, t).unwrap();
            assert!(res >= m.infeasibility(&x).unwrap());
            // first term ≤ (‖d‖ + ℓ_A‖v‖)/t
            let first = (prob.smooth_grad(&x)
                + prob.map_jac_adjoint(&x, &(&s.mu - &r.v / t))
                + m.jacobian_adjoint_apply(&x, &s.lam).unwrap())
            .norm();
            assert!(first <= (r.d.norm() + r.v.norm()) / t + 1e-9);
        }
        assert!(residual(
            &prob,
            &m,
            &x,
            &Mat::zeros(6, 2),
            &Mat::zeros(2, 2),
            &Mat::zeros(6, 2),
            0.0
        )
        .is_err());
    }

    #[test]
    fn stationary_start_exits_immediately() {
        let prob = CompositeProblem::new(
            (5, 2),
            Box::new(ZeroTerm),
            Box::new(IdentityMap),
            Box::new(ZeroTerm),
            constants(0.0, 0.0, 1.0),
        )
        .unwrap();
        let m = ManifoldSpec::stiefel(5, 2, 0.3).unwrap();
        let x0 = random_orthonormal(5, 2, &mut ChaCha8Rng::seed_from_u64(7));
        let report = solve(&prob, &m, &SolverConfig::default(), &x0).unwrap();
        assert_eq!(report.termination, Termination::Residual);
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.iterations(), 0);
        assert!(report.records[0].d_norm < 1e-12);
        assert!((&report.x - &x0).norm() < 1e-12);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = gaussian(4, 6, &mut rng);
        let prob = spca_instance(&b, 0.5, 0.3, 2).unwrap();
        let m = ManifoldSpec::stiefel(6, 2, 0.3).unwrap();
        let x0 = random_orthonormal(6, 2, &mut rng) * 1.01;
        assert!(matches!(
            solve(&prob, &m, &SolverConfig::for_spca(6, 2), &x0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn small_spca_converges_inside_safeguard() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut b = gaussian(50, 20, &mut rng);
        for mut col in b.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        let prob = spca_instance(&b, 0.5, 0.3, 2).unwrap();
        let m = ManifoldSpec::stiefel(20, 2, 0.3).unwrap();
        let x0 = random_orthonormal(20, 2, &mut rng);
        let cfg = SolverConfig::for_spca(20, 2);
        let report = solve(&prob, &m, &cfg, &x0).unwrap();
        assert_eq!(
            report.termination,
            Termination::Residual,
            "{:?}",
            report.records.last()
        );
        assert!(report.final_residual() < cfg.epsilon);
        for r in &report.records[1..] {
            assert!(r.h_norm <= 0.3);
        }
        assert!(report.h_before_projection < 1e-4);
        assert!(m.infeasibility(&report.x).unwrap() <= 1e-12);
        let proj: usize = report.records.iter().filter(|r| r.projected).count();
        assert_eq!(proj, report.proj_count);
    }
}
