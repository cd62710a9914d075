//! Dense matrix helpers shared by the solver modules.
//!
//! Every point, direction and multiplier is a [`Mat`]; inner products and
//! norms are Frobenius throughout.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub type Mat = DMatrix<f64>;

#[inline]
pub fn inner(a: &Mat, b: &Mat) -> f64 {
    a.dot(b)
}

#[inline]
pub fn norm(a: &Mat) -> f64 {
    a.norm()
}

/// Euclidean norm of the concatenation of two blocks.
#[inline]
pub fn joint_norm(a: &Mat, b: &Mat) -> f64 {
    (a.norm_squared() + b.norm_squared()).sqrt()
}

/// `S + Sᵀ`, exactly symmetric in floating point.
pub fn sym_sum(s: &Mat) -> Mat {
    let t = s.transpose();
    s + t
}

pub fn is_symmetric(s: &Mat, rel_tol: f64) -> bool {
    if !s.is_square() {
        return false;
    }
    let asym = (s - s.transpose()).norm();
    asym <= rel_tol * s.norm().max(1.0)
}

pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random point with orthonormal columns: Q factor of a Gaussian matrix,
/// sign-fixed so that `R` has a nonnegative diagonal.
pub fn random_orthonormal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    let g = gaussian(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn finite(a: &Mat) -> bool {
    a.iter().all(|v| v.is_finite())
}
