//! Composite objectives `F(x) = f(x) + g(A(x))`.
//!
//! A [`CompositeProblem`] bundles a smooth term `f`, a smooth inner map `A`
//! and a convex, Lipschitz outer term `g` with a cheap proximal operator,
//! together with the bounds the outer method needs (`ℓ_f`, `L_f`, `ℓ_g`, `ℓ_A`,
//! `L_A`). Sparse PCA and sparse spectral clustering are provided as ready
//! instances on the Stiefel manifold.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{finite, is_symmetric, Mat};
use crate::manifold::ManifoldSpec;

/// Smooth part `f`.
pub trait SmoothTerm: Send + Sync {
    fn value(&self, x: &Mat) -> f64;
    fn gradient(&self, x: &Mat) -> Mat;
}

/// Smooth inner map `A` with its Jacobian and adjoint Jacobian.
pub trait InnerMap: Send + Sync {
    fn range_shape(&self, point_shape: (usize, usize)) -> (usize, usize);
    fn apply(&self, x: &Mat) -> Mat;
    /// `∇A(x)[d]`
    fn jac_apply(&self, x: &Mat, d: &Mat) -> Mat;
    /// `∇A(x)ᵀ[m]`
    fn jac_adjoint(&self, x: &Mat, m: &Mat) -> Mat;
    fn is_identity(&self) -> bool {
        false
    }
}

/// Convex outer term `g` with a closed-form proximal map.
pub trait ProxTerm: Send + Sync {
    fn value(&self, z: &Mat) -> f64;
    /// `argmin_y g(y) + ‖y − z‖²/(2t)`, for `t > 0`.
    fn prox(&self, t: f64, z: &Mat) -> Mat;
}

/// `f(X) = −Tr(XᵀBᵀBX)`, evaluated through `BX` so `BᵀB` is never formed.
pub struct NegativeTraceQuadratic {
    pub data: Mat,
}

impl SmoothTerm for NegativeTraceQuadratic {
    fn value(&self, x: &Mat) -> f64 {
        -(&self.data * x).norm_squared()
    }

    fn gradient(&self, x: &Mat) -> Mat {
        let bx = &self.data * x;
        self.data.tr_mul(&bx) * -2.0
    }
}

/// `f(X) = Tr(LᵀXXᵀ)`.
pub struct TraceQuadratic {
    pub matrix: Mat,
}

impl SmoothTerm for TraceQuadratic {
    fn value(&self, x: &Mat) -> f64 {
        x.dot(&(self.matrix.transpose() * x))
    }

    fn gradient(&self, x: &Mat) -> Mat {
        let lx = &self.matrix * x;
        let ltx = self.matrix.tr_mul(x);
        lx + ltx
    }
}

/// `f(x) = ⟨c, x⟩ + offset`.
pub struct LinearSmooth {
    pub coeff: Mat,
    pub offset: f64,
}

impl SmoothTerm for LinearSmooth {
    fn value(&self, x: &Mat) -> f64 {
        self.coeff.dot(x) + self.offset
    }

    fn gradient(&self, _x: &Mat) -> Mat {
        self.coeff.clone()
    }
}

/// `f(x) = (c/2)‖x − center‖²`.
pub struct IsotropicQuadratic {
    pub curvature: f64,
    pub center: Mat,
}

impl SmoothTerm for IsotropicQuadratic {
    fn value(&self, x: &Mat) -> f64 {
        0.5 * self.curvature * (x - &self.center).norm_squared()
    }

    fn gradient(&self, x: &Mat) -> Mat {
        (x - &self.center) * self.curvature
    }
}

pub struct IdentityMap;

impl InnerMap for IdentityMap {
    fn range_shape(&self, point_shape: (usize, usize)) -> (usize, usize) {
        point_shape
    }
    fn apply(&self, x: &Mat) -> Mat {
        x.clone()
    }
    fn jac_apply(&self, _x: &Mat, d: &Mat) -> Mat {
        d.clone()
    }
    fn jac_adjoint(&self, _x: &Mat, m: &Mat) -> Mat {
        m.clone()
    }
    fn is_identity(&self) -> bool {
        true
    }
}

/// `A(X) = XXᵀ`, valued in dense `n×n` matrices.
pub struct OuterProductMap;

impl InnerMap for OuterProductMap {
    fn range_shape(&self, point_shape: (usize, usize)) -> (usize, usize) {
        (point_shape.0, point_shape.0)
    }
    fn apply(&self, x: &Mat) -> Mat {
        x * x.transpose()
    }
    fn jac_apply(&self, x: &Mat, d: &Mat) -> Mat {
        let dxt = d * x.transpose();
        let t = dxt.transpose();
        dxt + t
    }
    fn jac_adjoint(&self, x: &Mat, m: &Mat) -> Mat {
        m * x + m.tr_mul(x)
    }
}

/// `g(z) = w·Σ|z_ij|`, prox is entrywise soft-thresholding.
pub struct L1Norm {
    pub weight: f64,
}

#[inline]
pub fn soft_threshold(v: f64, thresh: f64) -> f64 {
    if v > thresh {
        v - thresh
    } else if v < -thresh {
        v + thresh
    } else {
        0.0
    }
}

impl ProxTerm for L1Norm {
    fn value(&self, z: &Mat) -> f64 {
        self.weight * z.iter().map(|v| v.abs()).sum::<f64>()
    }
    fn prox(&self, t: f64, z: &Mat) -> Mat {
        let thresh = t * self.weight;
        z.map(|v| soft_threshold(v, thresh))
    }
}

/// `g(z) = w·‖z‖_F`, prox is block soft-thresholding.
pub struct FrobeniusNorm {
    pub weight: f64,
}

impl ProxTerm for FrobeniusNorm {
    fn value(&self, z: &Mat) -> f64 {
        self.weight * z.norm()
    }
    fn prox(&self, t: f64, z: &Mat) -> Mat {
        let nrm = z.norm();
        let thresh = t * self.weight;
        if nrm <= thresh {
            Mat::zeros(z.nrows(), z.ncols())
        } else {
            z * (1.0 - thresh / nrm)
        }
    }
}

pub struct ZeroTerm;

impl SmoothTerm for ZeroTerm {
    fn value(&self, _x: &Mat) -> f64 {
        0.0
    }
    fn gradient(&self, x: &Mat) -> Mat {
        Mat::zeros(x.nrows(), x.ncols())
    }
}

impl ProxTerm for ZeroTerm {
    fn value(&self, _z: &Mat) -> f64 {
        0.0
    }
    fn prox(&self, _t: f64, z: &Mat) -> Mat {
        z.clone()
    }
}

/// Bounds on the problem data used by the outer method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    /// `L_f`, Lipschitz constant of `∇f`.
    pub lip_f_grad: f64,
    /// `ℓ_f`, bound on `‖∇f‖` over the `2θ`-neighborhood.
    pub bound_f_grad: f64,
    /// `ℓ_g`, Lipschitz constant of `g`.
    pub lip_g: f64,
    /// `ℓ_A`, bound on `‖∇A‖` over the `2θ`-neighborhood.
    pub bound_map_jac: f64,
    /// `L_A`, Lipschitz constant of `∇A` (zero for linear maps).
    pub lip_map_jac: f64,
}

impl ProblemConstants {
    fn validate(&self) -> Result<()> {
        let all = [
            self.lip_f_grad,
            self.bound_f_grad,
            self.lip_g,
            self.bound_map_jac,
            self.lip_map_jac,
        ];
        if all.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "problem constants must be finite and nonnegative: {self:?}"
            )));
        }
        Ok(())
    }

    /// `ℓ_f + ℓ_g·ℓ_A`, the quantity the merit weight is scaled by.
    pub fn composite_bound(&self) -> f64 {
        self.bound_f_grad + self.lip_g * self.bound_map_jac
    }
}

pub struct CompositeProblem {
    point_shape: (usize, usize),
    smooth: Box<dyn SmoothTerm>,
    map: Box<dyn InnerMap>,
    outer: Box<dyn ProxTerm>,
    pub constants: ProblemConstants,
}

impl std::fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("point_shape", &self.point_shape)
            .field("identity_map", &self.map.is_identity())
            .field("constants", &self.constants)
            .finish_non_exhaustive()
    }
}

impl CompositeProblem {
    pub fn new(
        point_shape: (usize, usize),
        smooth: Box<dyn SmoothTerm>,
        map: Box<dyn InnerMap>,
        outer: Box<dyn ProxTerm>,
        constants: ProblemConstants,
    ) -> Result<Self> {
        constants.validate()?;
        if map.is_identity() && constants.lip_map_jac != 0.0 {
            return Err(Error::InvalidParameter("identity map must have L_A = 0".into()));
        }
        Ok(Self {
            point_shape,
            smooth,
            map,
            outer,
            constants,
        })
    }

    pub fn point_shape(&self) -> (usize, usize) {
        self.point_shape
    }

    pub fn range_shape(&self) -> (usize, usize) {
        self.map.range_shape(self.point_shape)
    }

    pub fn is_identity_map(&self) -> bool {
        self.map.is_identity()
    }

    pub fn smooth_value(&self, x: &Mat) -> f64 {
        self.smooth.value(x)
    }

    pub fn smooth_grad(&self, x: &Mat) -> Mat {
        self.smooth.gradient(x)
    }

    pub fn map_value(&self, x: &Mat) -> Mat {
        self.map.apply(x)
    }

    pub fn map_jac_apply(&self, x: &Mat, d: &Mat) -> Mat {
        self.map.jac_apply(x, d)
    }

    pub fn map_jac_adjoint(&self, x: &Mat, m: &Mat) -> Mat {
        self.map.jac_adjoint(x, m)
    }

    pub fn g_value(&self, z: &Mat) -> f64 {
        self.outer.value(z)
    }

    pub fn g_prox(&self, t: f64, z: &Mat) -> Mat {
        self.outer.prox(t, z)
    }

    /// Moreau envelope `M^t_g(z)` and its gradient `(z − prox_{tg}(z))/t`.
    pub fn moreau_envelope(&self, t: f64, z: &Mat) -> Result<(f64, Mat)> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Moreau envelope parameter must be positive, got {t}"
            )));
        }
        let p = self.g_prox(t, z);
        let diff = z - &p;
        let value = self.g_value(&p) + diff.norm_squared() / (2.0 * t);
        Ok((value, diff / t))
    }

    /// `F(x) = f(x) + g(A(x))`.
    pub fn objective(&self, x: &Mat) -> f64 {
        self.smooth_value(x) + self.g_value(&self.map_value(x))
    }

    /// `Φ_α(x) = F(x) + α‖h(x)‖`.
    pub fn merit(&self, manifold: &ManifoldSpec, alpha: f64, x: &Mat) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "merit weight must be positive, got {alpha}"
            )));
        }
        Ok(self.objective(x) + alpha * manifold.infeasibility(x)?)
    }
}

/// Sparse PCA: `min −Tr(XᵀBᵀBX) + μ‖X‖₁` over `St(n, p)`, `B` of size `m×n`.
pub fn spca_instance(b: &Mat, mu: f64, theta: f64, p: usize) -> Result<CompositeProblem> {
    let n = b.ncols();
    if p == 0 || p > n {
        return Err(Error::InvalidInput(format!(
            "sparse PCA needs 1 <= p <= n, got n={n}, p={p}"
        )));
    }
    if !finite(b) {
        return Err(Error::InvalidInput("data matrix has non-finite entries".into()));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mu must be nonnegative, got {mu}"
        )));
    }
    let gram_norm = b.tr_mul(b).norm();
    let constants = ProblemConstants {
        lip_f_grad: 2.0 * gram_norm,
        bound_f_grad: 2.0 * (1.0 + theta) * b.norm_squared(),
        lip_g: mu * ((n * p) as f64).sqrt(),
        bound_map_jac: 1.0,
        lip_map_jac: 0.0,
    };
    CompositeProblem::new(
        (n, p),
        Box::new(NegativeTraceQuadratic { data: b.clone() }),
        Box::new(IdentityMap),
        Box::new(L1Norm { weight: mu }),
        constants,
    )
}

/// Sparse spectral clustering: `min Tr(LᵀXXᵀ) + μ‖XXᵀ‖₁` over `St(n, p)`.
pub fn ssc_instance(l: &Mat, mu: f64, theta: f64, p: usize) -> Result<CompositeProblem> {
    let n = l.nrows();
    if !l.is_square() || p == 0 || p > n {
        return Err(Error::InvalidInput(format!(
            "sparse spectral clustering needs a square L and 1 <= p <= n, got {:?}, p={p}",
            l.shape()
        )));
    }
    if !finite(l) {
        return Err(Error::InvalidInput("L has non-finite entries".into()));
    }
    if !is_symmetric(l, 1e-12) {
        return Err(Error::InvalidInput("L must be symmetric".into()));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mu must be nonnegative, got {mu}"
        )));
    }
    let lnorm = l.norm();
    let constants = ProblemConstants {
        lip_f_grad: 2.0 * lnorm,
        bound_f_grad: 2.0 * (1.0 + theta) * lnorm,
        lip_g: mu * n as f64,
        bound_map_jac: 2.0 * (1.0 + theta),
        lip_map_jac: 2.0,
    };
    CompositeProblem::new(
        (n, p),
        Box::new(TraceQuadratic { matrix: l.clone() }),
        Box::new(OuterProductMap),
        Box::new(L1Norm { weight: mu }),
        constants,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Spca,
    Ssc,
}

impl std::fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InstanceKind::Spca => "spca",
            InstanceKind::Ssc => "ssc",
        })
    }
}

/// Everything needed to build an SPCA or SSC instance on `St(n, p)`.
#[derive(Debug, Clone)]
pub struct ProblemInstanceConfig {
    pub kind: InstanceKind,
    /// `B` for SPCA, `L` for SSC.
    pub data: Mat,
    pub mu: f64,
    pub theta: f64,
    pub p: usize,
}

impl ProblemInstanceConfig {
    pub fn build(&self) -> Result<(CompositeProblem, ManifoldSpec)> {
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        let problem = match self.kind {
            InstanceKind::Spca => spca_instance(&self.data, self.mu, self.theta, self.p)?,
            InstanceKind::Ssc => ssc_instance(&self.data, self.mu, self.theta, self.p)?,
        };
        let (n, p) = problem.point_shape();
        let manifold = ManifoldSpec::stiefel(n, p, self.theta)?;
        Ok((problem, manifold))
    }
}

/// Reads a dense matrix from CSV: one row per line, comma-separated decimals,
/// no header.
pub fn load_matrix_csv(path: &Path) -> Result<Mat> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::InvalidInput(format!(
                    "{}: row {} has {} fields, expected {c}",
                    path.display(),
                    rows + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::InvalidInput(format!("{}: cannot parse {field:?}", path.display())))?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::InvalidInput(format!("{} is empty", path.display())))?;
    let m = Mat::from_row_slice(rows, cols, &values);
    if !finite(&m) {
        return Err(Error::InvalidInput(format!(
            "{} has non-finite entries",
            path.display()
        )));
    }
    Ok(m)
}
