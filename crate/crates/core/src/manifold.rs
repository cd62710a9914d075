//! Embedded submanifolds described by a global defining function `h`.
//!
//! Two matrix manifolds are supported, both on `n×p` points:
//!
//! - Stiefel `St(n,p)`: `h(X) = XᵀX − I_p`, valued in symmetric `p×p`
//!   matrices with the Frobenius inner product.
//! - Oblique `OB(n,p)`: `h(X) = (‖x_1‖² − 1, …, ‖x_p‖² − 1)`, stored as a
//!   `p×1` column.
//!
//! For both, the error bound `dist(x, M) ≤ κ‖h(x)‖` holds with `κ = 1`, `∇h`
//! is 2-Lipschitz, and on the `2θ`-neighborhood the Gram operator
//! `H(x) = ∇h(x)∇h(x)ᵀ` has spectrum in `[4(1−2θ)², 4(1+2θ)²]` for any
//! `0 < θ < 1/2`.

use nalgebra::{SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, sym_sum, Mat};

/// Smallest singular value accepted by the Stiefel projection.
pub const SVD_RANK_TOL: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    Stiefel,
    Oblique,
}

/// A manifold together with the constants of its error bound and Gram
/// spectrum. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ManifoldSpec {
    kind: ManifoldKind,
    rows: usize,
    cols: usize,
    /// Error-bound constant κ.
    pub kappa: f64,
    /// Safeguard radius θ.
    pub theta: f64,
    /// Lower eigenvalue bound of `H(x)` on the `2θ`-neighborhood.
    pub c1: f64,
    /// Upper eigenvalue bound of `H(x)` on the `2θ`-neighborhood.
    pub c2: f64,
    /// Lipschitz constant of `∇h`.
    pub lip_h: f64,
}

impl ManifoldSpec {
    pub fn stiefel(n: usize, p: usize, theta: f64) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::InvalidInput(format!(
                "Stiefel manifold needs 1 <= p <= n, got n={n}, p={p}"
            )));
        }
        Self::with_standard_constants(ManifoldKind::Stiefel, n, p, theta)
    }

    pub fn oblique(n: usize, p: usize, theta: f64) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidInput(format!(
                "oblique manifold needs n, p >= 1, got n={n}, p={p}"
            )));
        }
        Self::with_standard_constants(ManifoldKind::Oblique, n, p, theta)
    }

    fn with_standard_constants(kind: ManifoldKind, n: usize, p: usize, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0, 1/2), got {theta}"
            )));
        }
        Ok(Self {
            kind,
            rows: n,
            cols: p,
            kappa: 1.0,
            theta,
            c1: 4.0 * (1.0 - 2.0 * theta).powi(2),
            c2: 4.0 * (1.0 + 2.0 * theta).powi(2),
            lip_h: 2.0,
        })
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    /// Shape `(n, p)` of ambient points.
    pub fn point_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Shape of constraint values and of the multiplier λ.
    pub fn constraint_shape(&self) -> (usize, usize) {
        match self.kind {
            ManifoldKind::Stiefel => (self.cols, self.cols),
            ManifoldKind::Oblique => (self.cols, 1),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.rows * self.cols
    }

    /// Dimension of the constraint space (`p(p+1)/2` for Stiefel, `p` for
    /// oblique).
    pub fn constraint_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Stiefel => self.cols * (self.cols + 1) / 2,
            ManifoldKind::Oblique => self.cols,
        }
    }

    /// Feasibility radius `θ/κ` used by the safeguard.
    pub fn safeguard_radius(&self) -> f64 {
        self.theta / self.kappa
    }

    /// `τ̂ = min{2κC1/(θL_hC2), 1/C2}`: correction steps `y − τ∇N(y)` with
    /// `τ ≤ τ̂` do not increase `‖h‖` inside the safeguard radius.
    pub fn correction_step_bound(&self) -> f64 {
        (2.0 * self.kappa * self.c1 / (self.theta * self.lip_h * self.c2)).min(1.0 / self.c2)
    }

    fn check_point(&self, x: &Mat, what: &str) -> Result<()> {
        if x.shape() != self.point_shape() {
            return Err(Error::InvalidInput(format!(
                "{what} has shape {:?}, expected {:?}",
                x.shape(),
                self.point_shape()
            )));
        }
        Ok(())
    }

    fn check_constraint(&self, lam: &Mat) -> Result<()> {
        if lam.shape() != self.constraint_shape() {
            return Err(Error::InvalidInput(format!(
                "constraint vector has shape {:?}, expected {:?}",
                lam.shape(),
                self.constraint_shape()
            )));
        }
        Ok(())
    }

    /// `h(x)`.
    pub fn constraint_value(&self, x: &Mat) -> Result<Mat> {
        self.check_point(x, "point")?;
        Ok(match self.kind {
            ManifoldKind::Stiefel => {
                let mut g = x.tr_mul(x);
                // symmetrize the Gram product so h is exactly symmetric
                g = (&g + g.transpose()) * 0.5;
                for i in 0..self.cols {
                    g[(i, i)] -= 1.0;
                }
                g
            }
            ManifoldKind::Oblique => Mat::from_fn(self.cols, 1, |i, _| x.column(i).norm_squared() - 1.0),
        })
    }

    /// `∇h(x)[w]`.
    pub fn jacobian_apply(&self, x: &Mat, w: &Mat) -> Result<Mat> {
        self.check_point(x, "point")?;
        self.check_point(w, "direction")?;
        Ok(match self.kind {
            ManifoldKind::Stiefel => sym_sum(&x.tr_mul(w)),
            ManifoldKind::Oblique => Mat::from_fn(self.cols, 1, |i, _| 2.0 * x.column(i).dot(&w.column(i))),
        })
    }

    /// `∇h(x)ᵀ[λ]`. For Stiefel, `λ` must be symmetric and the result is `2Xλ`.
    pub fn jacobian_adjoint_apply(&self, x: &Mat, lam: &Mat) -> Result<Mat> {
        self.check_point(x, "point")?;
        self.check_constraint(lam)?;
        Ok(match self.kind {
            ManifoldKind::Stiefel => {
                if !is_symmetric(lam, SYMMETRY_TOL) {
                    return Err(Error::InvalidInput("Stiefel multiplier must be symmetric".into()));
                }
                x * lam * 2.0
            }
            ManifoldKind::Oblique => {
                let mut out = x.clone();
                for (i, mut col) in out.column_iter_mut().enumerate() {
                    col *= 2.0 * lam[(i, 0)];
                }
                out
            }
        })
    }

    /// `H(x)[λ] = ∇h(x)∇h(x)ᵀ[λ]`.
    pub fn gram_apply(&self, x: &Mat, lam: &Mat) -> Result<Mat> {
        let w = self.jacobian_adjoint_apply(x, lam)?;
        self.jacobian_apply(x, &w)
    }

    /// Factorization of `H(x)` for repeated solves at a fixed `x`.
    pub fn gram_factor(&self, x: &Mat) -> Result<GramFactor> {
        self.check_point(x, "point")?;
        Ok(match self.kind {
            ManifoldKind::Stiefel => {
                let eig = SymmetricEigen::new(x.tr_mul(x));
                GramFactor::Stiefel {
                    basis: eig.eigenvectors,
                    values: eig.eigenvalues.iter().copied().collect(),
                }
            }
            ManifoldKind::Oblique => GramFactor::Oblique {
                diag: x.column_iter().map(|c| 4.0 * c.norm_squared()).collect(),
            },
        })
    }

    /// Nearest point on the manifold: polar factor `UVᵀ` for Stiefel,
    /// column normalization for oblique (a zero column maps to `e_1`).
    pub fn project_to_manifold(&self, y: &Mat) -> Result<Mat> {
        self.check_point(y, "point")?;
        match self.kind {
            ManifoldKind::Stiefel => {
                let svd = SVD::new(y.clone(), true, true);
                let smallest = svd.singular_values.min();
                if !(smallest >= SVD_RANK_TOL) {
                    return Err(Error::DegenerateProjection {
                        smallest_singular_value: smallest,
                    });
                }
                let u = svd.u.expect("left singular vectors requested");
                let v_t = svd.v_t.expect("right singular vectors requested");
                Ok(u * v_t)
            }
            ManifoldKind::Oblique => {
                let mut out = y.clone();
                for mut col in out.column_iter_mut() {
                    let nrm = col.norm();
                    if nrm == 0.0 {
                        col[0] = 1.0;
                    } else {
                        col /= nrm;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Gradient of `N(y) = ½‖h(y)‖²`, i.e. `∇h(y)ᵀh(y)`.
    pub fn correction_gradient(&self, y: &Mat) -> Result<Mat> {
        let h = self.constraint_value(y)?;
        self.jacobian_adjoint_apply(y, &h)
    }

    /// Euclidean distance from `x` to the manifold.
    pub fn distance_to_manifold(&self, x: &Mat) -> Result<f64> {
        self.check_point(x, "point")?;
        Ok(match self.kind {
            ManifoldKind::Stiefel => {
                let sv = x.singular_values();
                sv.iter().map(|s| (s - 1.0).powi(2)).sum::<f64>().sqrt()
            }
            ManifoldKind::Oblique => x
                .column_iter()
                .map(|c| (c.norm() - 1.0).powi(2))
                .sum::<f64>()
                .sqrt(),
        })
    }

    /// `‖h(x)‖` (Frobenius).
    pub fn infeasibility(&self, x: &Mat) -> Result<f64> {
        Ok(self.constraint_value(x)?.norm())
    }

    /// Projection of an ambient direction onto the tangent space at a point of
    /// the manifold, `w − ¼∇h(x)ᵀ∇h(x)[w]`. At feasible points of both
    /// supported manifolds this is the orthogonal tangent projection.
    pub fn quarter_gram_correction(&self, x: &Mat, w: &Mat) -> Result<Mat> {
        let jw = self.jacobian_apply(x, w)?;
        let back = self.jacobian_adjoint_apply(x, &jw)?;
        Ok(w - back * 0.25)
    }
}

/// `H(x)⁻¹` in closed form. For Stiefel `H(x)[λ] = 2(Gλ + λG)` with
/// `G = XᵀX`, a Lyapunov equation diagonalized by the eigenbasis of `G`; for
/// oblique `H(x)` is diagonal.
#[derive(Debug, Clone)]
pub enum GramFactor {
    Stiefel { basis: Mat, values: Vec<f64> },
    Oblique { diag: Vec<f64> },
}

impl GramFactor {
    /// Solves `H(x)λ = rhs`.
    pub fn solve(&self, rhs: &Mat) -> Mat {
        match self {
            GramFactor::Stiefel { basis, values } => {
                let mut r = basis.tr_mul(&(rhs * basis));
                for j in 0..values.len() {
                    for i in 0..values.len() {
                        r[(i, j)] /= 2.0 * (values[i] + values[j]);
                    }
                }
                let lam = basis * r * basis.transpose();
                (&lam + lam.transpose()) * 0.5
            }
            GramFactor::Oblique { diag } => Mat::from_fn(diag.len(), 1, |i, _| rhs[(i, 0)] / diag[i]),
        }
    }
}
