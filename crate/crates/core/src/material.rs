//! Stored energy functions, their quadratic expansion at the identity and
//! the relaxed bending constant.
//!
//! Two concrete models are provided: a plain squared-distance-to-rotations
//! energy and a St. Venant-Kirchhoff energy. Both are frame indifferent and
//! vanish exactly on SO(2).

use crate::math::{Mat2, Vec2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("analytic Hessian disagrees with finite differences (max abs err {err:.3e}, scale {scale:.3e})")]
    InternalConsistency { err: f64, scale: f64 },
    #[error("stationarity system for the relaxed constant is singular")]
    DegenerateForm,
}

/// Distance of `f` to the rotation group SO(2).
///
/// Uses the closed 2x2 formula
/// `dist^2 = |F|^2 + 2 - 2 sqrt((F11+F22)^2 + (F21-F12)^2)`,
/// valid for any sign of `det F` (for `det F > 0` this equals
/// `sqrt((s1-1)^2 + (s2-1)^2)` in terms of the singular values).
pub fn dist_so2(f: Mat2) -> f64 {
    dist_so2_sq(f).sqrt()
}

pub fn dist_so2_sq(f: Mat2) -> f64 {
    let t = f.a11 + f.a22;
    let u = f.a21 - f.a12;
    let d2 = f.norm_sq() + 2.0 - 2.0 * (t * t + u * u).sqrt();
    // roundoff can push the exact zero on SO(2) slightly negative
    d2.max(0.0)
}

/// Symmetric 4x4 coefficient array acting on vectorized 2x2 matrices
/// `(X11, X12, X21, X22)`; `apply` evaluates the quadratic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm2x2 {
    pub coeffs: [[f64; 4]; 4],
}

fn vectorize(x: Mat2) -> [f64; 4] {
    [x.a11, x.a12, x.a21, x.a22]
}

impl QuadraticForm2x2 {
    pub fn apply(&self, x: Mat2) -> f64 {
        let v = vectorize(x);
        let mut q = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                q += v[i] * self.coeffs[i][j] * v[j];
            }
        }
        q
    }

    /// `2 mu |e(X)|^2 + lam (tr e(X))^2` as a coefficient array.
    fn isotropic(mu: f64, lam: f64) -> Self {
        let mut c = [[0.0; 4]; 4];
        c[0][0] = 2.0 * mu + lam;
        c[3][3] = 2.0 * mu + lam;
        c[0][3] = lam;
        c[3][0] = lam;
        c[1][1] = mu;
        c[2][2] = mu;
        c[1][2] = mu;
        c[2][1] = mu;
        QuadraticForm2x2 { coeffs: c }
    }

    fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .fold(0.0f64, |m, &c| m.max(c.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyKind {
    /// `W(F) = c_w dist^2(F, SO(2))`.
    QuadraticDistance { c_w: f64 },
    /// `W(F) = mu |E|^2 + lam/2 (tr E)^2` with `E = (F^T F - Id)/2`.
    StVenantKirchhoff { mu: f64, lam: f64 },
}

/// A stored energy function together with its cached Hessian at the identity.
#[derive(Debug, Clone, Copy)]
pub struct StoredEnergyModel {
    pub kind: EnergyKind,
    hessian: QuadraticForm2x2,
}

impl StoredEnergyModel {
    pub fn quadratic_distance(c_w: f64) -> Result<Self, MaterialError> {
        Self::build(EnergyKind::QuadraticDistance { c_w })
    }

    pub fn st_venant_kirchhoff(mu: f64, lam: f64) -> Result<Self, MaterialError> {
        Self::build(EnergyKind::StVenantKirchhoff { mu, lam })
    }

    fn build(kind: EnergyKind) -> Result<Self, MaterialError> {
        let hessian = match kind {
            EnergyKind::QuadraticDistance { c_w } => QuadraticForm2x2::isotropic(c_w, 0.0),
            EnergyKind::StVenantKirchhoff { mu, lam } => QuadraticForm2x2::isotropic(mu, lam),
        };
        let model = StoredEnergyModel { kind, hessian };
        model.check_hessian()?;
        Ok(model)
    }

    pub fn eval_w(&self, f: Mat2) -> f64 {
        match self.kind {
            EnergyKind::QuadraticDistance { c_w } => c_w * dist_so2_sq(f),
            EnergyKind::StVenantKirchhoff { mu, lam } => {
                let e = green_strain(f);
                mu * e.norm_sq() + 0.5 * lam * e.trace() * e.trace()
            }
        }
    }

    /// Energy and its gradient with respect to the deformation gradient.
    pub fn eval_w_grad(&self, f: Mat2) -> (f64, Mat2) {
        match self.kind {
            EnergyKind::QuadraticDistance { c_w } => {
                let t = f.a11 + f.a22;
                let u = f.a21 - f.a12;
                let g = (t * t + u * u).sqrt();
                let w = c_w * dist_so2_sq(f);
                let mut grad = f * 2.0;
                if g > 1e-12 {
                    let s = 2.0 / g;
                    grad = grad - Mat2::new(s * t, -s * u, s * u, s * t);
                }
                (w, grad * c_w)
            }
            EnergyKind::StVenantKirchhoff { mu, lam } => {
                let e = green_strain(f);
                let w = mu * e.norm_sq() + 0.5 * lam * e.trace() * e.trace();
                // dW/dF = F (2 mu E + lam tr(E) Id)
                let s = e * (2.0 * mu) + Mat2::IDENTITY * (lam * e.trace());
                (w, f.mul_mat(s))
            }
        }
    }

    /// Constant `c` in the lower bound `W(F) >= c dist^2(F, SO(2))`.
    ///
    /// For the quadratic-distance model this is exact on all of R^{2x2}.
    /// St. Venant-Kirchhoff vanishes on the reflections O(2)\SO(2), so its
    /// constant `mu/4` is only valid on the orientation-preserving half
    /// `det F > 0`.
    pub fn nondegeneracy_constant(&self) -> f64 {
        match self.kind {
            EnergyKind::QuadraticDistance { c_w } => c_w,
            EnergyKind::StVenantKirchhoff { mu, .. } => 0.25 * mu,
        }
    }

    /// Hessian of `W` at the identity, i.e. `W(Id + X) = 1/2 Q(X) + o(|X|^2)`.
    pub fn hessian_at_identity(&self) -> &QuadraticForm2x2 {
        &self.hessian
    }

    fn check_hessian(&self) -> Result<(), MaterialError> {
        let step = 1e-4;
        let basis = [
            Mat2::new(1.0, 0.0, 0.0, 0.0),
            Mat2::new(0.0, 1.0, 0.0, 0.0),
            Mat2::new(0.0, 0.0, 1.0, 0.0),
            Mat2::new(0.0, 0.0, 0.0, 1.0),
        ];
        let scale = 1.0 + self.hessian.max_abs();
        let mut err = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let epp = self.eval_w(Mat2::IDENTITY + basis[i] * step + basis[j] * step);
                let epm = self.eval_w(Mat2::IDENTITY + basis[i] * step - basis[j] * step);
                let emp = self.eval_w(Mat2::IDENTITY - basis[i] * step + basis[j] * step);
                let emm = self.eval_w(Mat2::IDENTITY - basis[i] * step - basis[j] * step);
                let fd = (epp - epm - emp + emm) / (4.0 * step * step);
                err = err.max((fd - self.hessian.coeffs[i][j]).abs());
            }
        }
        if err > 1e-5 * scale {
            return Err(MaterialError::InternalConsistency { err, scale });
        }
        Ok(())
    }

    /// Relaxed bending constant `alpha = min_gamma Q(e1 (x) e1 + gamma (x) e2)`
    /// together with the coefficient of the linear minimizer map, so that
    /// `gamma(lambda) = lambda * gamma1`.
    pub fn relaxed_alpha(&self) -> Result<RelaxedAlpha, MaterialError> {
        let q = &self.hessian.coeffs;
        // X(gamma) = [[1, g1], [0, g2]] vectorizes to (1, g1, 0, g2); the
        // objective is quadratic in (g1, g2) with Hessian 2*A and linear
        // part 2*b below.
        let a = [[q[1][1], q[1][3]], [q[1][3], q[3][3]]];
        let b = [q[0][1], q[0][3]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let scale = a[0][0].abs().max(a[1][1].abs()).max(a[0][1].abs());
        if det.abs() <= 1e-14 * scale * scale.max(1.0) {
            return Err(MaterialError::DegenerateForm);
        }
        let g1 = (-b[0] * a[1][1] + b[1] * a[0][1]) / det;
        let g2 = (-b[1] * a[0][0] + b[0] * a[0][1]) / det;
        let gamma1 = Vec2::new(g1, g2);
        let x = Mat2::new(1.0, g1, 0.0, g2);
        let alpha = self.hessian.apply(x);
        Ok(RelaxedAlpha { alpha, gamma1 })
    }
}

/// Result of the relaxed-constant minimization.
#[derive(Debug, Clone, Copy)]
pub struct RelaxedAlpha {
    pub alpha: f64,
    /// `gamma(lambda) = lambda * gamma1`.
    pub gamma1: Vec2,
}

impl RelaxedAlpha {
    pub fn gamma(&self, lambda: f64) -> Vec2 {
        self.gamma1 * lambda
    }
}

fn green_strain(f: Mat2) -> Mat2 {
    (f.transpose().mul_mat(f) - Mat2::IDENTITY) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qd() -> StoredEnergyModel {
        StoredEnergyModel::quadratic_distance(1.0).unwrap()
    }

    fn svk(mu: f64, lam: f64) -> StoredEnergyModel {
        StoredEnergyModel::st_venant_kirchhoff(mu, lam).unwrap()
    }

    #[test]
    fn w_vanishes_on_rotations() {
        let m = qd();
        assert_eq!(m.eval_w(Mat2::IDENTITY), 0.0);
        assert!(m.eval_w(Mat2::rotation(0.3)) < 1e-15);
        let s = svk(1.0, 1.0);
        assert!(s.eval_w(Mat2::rotation(-1.2)) < 1e-15);
    }

    #[test]
    fn quadratic_distance_closed_form() {
        // dist^2(diag(1+t, 1), SO(2)) = t^2 for small t > 0
        let t = 1e-3;
        let f = Mat2::new(1.0 + t, 0.0, 0.0, 1.0);
        assert!((qd().eval_w(f) - t * t).abs() < 1e-9);
    }

    #[test]
    fn dist_so2_examples() {
        assert_eq!(dist_so2(Mat2::IDENTITY), 0.0);
        // singular values (2, 1)
        assert!((dist_so2(Mat2::new(2.0, 0.0, 0.0, 1.0)) - 1.0).abs() < 1e-12);
        // a reflection is at distance 2
        assert!((dist_so2(Mat2::new(1.0, 0.0, 0.0, -1.0)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hessian_vanishes_on_skew() {
        let skew = Mat2::new(0.0, -0.7, 0.7, 0.0);
        assert!(qd().hessian_at_identity().apply(skew).abs() < 1e-14);
        assert!(svk(2.0, 0.5).hessian_at_identity().apply(skew).abs() < 1e-14);
    }

    #[test]
    fn relaxed_alpha_quadratic_distance() {
        let r = qd().relaxed_alpha().unwrap();
        assert!((r.alpha - 2.0).abs() < 1e-12);
        assert!(r.gamma1.norm() < 1e-12);
    }

    #[test]
    fn relaxed_alpha_svk() {
        let r = svk(1.0, 1.0).relaxed_alpha().unwrap();
        assert!((r.alpha - 8.0 / 3.0).abs() < 1e-12);
        assert!((r.gamma1 - Vec2::new(0.0, -1.0 / 3.0)).norm() < 1e-12);
        // lambda = 0 gives gamma = 0 by linearity
        assert_eq!(r.gamma(0.0), Vec2::ZERO);
    }

    #[test]
    fn svk_lambda_zero_decouples() {
        let r = svk(1.0, 0.0).relaxed_alpha().unwrap();
        assert!((r.alpha - 2.0).abs() < 1e-12);
    }

    #[test]
    fn svk_gradient_matches_fd() {
        let m = svk(1.3, 0.7);
        let f = Mat2::new(1.1, 0.2, -0.1, 0.9);
        let (_, g) = m.eval_w_grad(f);
        let step = 1e-6;
        let basis = [
            Mat2::new(1.0, 0.0, 0.0, 0.0),
            Mat2::new(0.0, 1.0, 0.0, 0.0),
            Mat2::new(0.0, 0.0, 1.0, 0.0),
            Mat2::new(0.0, 0.0, 0.0, 1.0),
        ];
        let gv = [g.a11, g.a12, g.a21, g.a22];
        for (i, b) in basis.iter().enumerate() {
            let fd = (m.eval_w(f + *b * step) - m.eval_w(f - *b * step)) / (2.0 * step);
            assert!((fd - gv[i]).abs() < 1e-6, "component {i}: {fd} vs {}", gv[i]);
        }
    }

    #[test]
    fn qd_gradient_matches_fd() {
        let m = qd();
        let f = Mat2::new(1.05, 0.3, -0.2, 0.8);
        let (_, g) = m.eval_w_grad(f);
        let step = 1e-6;
        let basis = [
            Mat2::new(1.0, 0.0, 0.0, 0.0),
            Mat2::new(0.0, 1.0, 0.0, 0.0),
            Mat2::new(0.0, 0.0, 1.0, 0.0),
            Mat2::new(0.0, 0.0, 0.0, 1.0),
        ];
        let gv = [g.a11, g.a12, g.a21, g.a22];
        for (i, b) in basis.iter().enumerate() {
            let fd = (m.eval_w(f + *b * step) - m.eval_w(f - *b * step)) / (2.0 * step);
            assert!((fd - gv[i]).abs() < 1e-6, "component {i}: {fd} vs {}", gv[i]);
        }
    }
}
