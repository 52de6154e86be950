//! Riemannian gradient, Hessian, and Newton direction assembled from
//! Euclidean partial derivatives.
//!
//! An objective is specified through callbacks on the raw representative
//! matrix: the value `f(Y)`, the `n x n_d` matrix of partials `f_Y`, and
//! optionally the second-derivative bilinear form `f_YY(X, X')`. Callbacks
//! receive plain matrices rather than manifold points; finite-difference
//! fallbacks and line-search probes evaluate at small off-manifold
//! displacements, which is exactly what a matrix of partial derivatives is
//! about.
//!
//! The Riemannian gradient at a representative `Y` is the tangent vector
//! `grad` with `g(grad, T) = tr(f_Y^T T)` for every tangent `T`; blockwise,
//! `grad_i = f_{Y_i} - (Y_i Y_i^T f_{Y_i} + sum over j != i of Y_j f_{Y_j}^T Y_i)`.
//! The Hessian as a bilinear form is
//! `f_YY(X, X') - 1/2 [tr(f_Y^T Q B^T Q^T X') + tr(f_Y^T Q C^T Q^T X)]`
//! with `B`, `C` the generators of `X`, `X'`, which equals the second
//! derivative of `f` along geodesics.

use nalgebra::DMatrix;

use crate::error::{FlagError, Result};
use crate::linalg;
use crate::point::{isotropy_factor, StiefelPoint};
use crate::signature::FlagSignature;
use crate::tangent::{self, SkewGenerator, TangentVector};

/// Residual above which the construction-time quotient check warns.
pub const QUOTIENT_CHECK_TOL: f64 = 1e-10;

type ValueFn = dyn Fn(&DMatrix<f64>) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&DMatrix<f64>) -> DMatrix<f64> + Send + Sync;
type HessianFn = dyn Fn(&DMatrix<f64>, &DMatrix<f64>, &DMatrix<f64>) -> f64 + Send + Sync;

/// A smooth function on the flag manifold given by Euclidean derivatives.
pub struct ObjectiveFunction {
    sig: FlagSignature,
    value: Box<ValueFn>,
    gradient: Box<GradientFn>,
    hessian: Option<Box<HessianFn>>,
    fd_hessian: bool,
    quotient_residual: f64,
}

impl ObjectiveFunction {
    /// Wraps value and gradient callbacks.
    ///
    /// Construction probes well-definedness on the quotient: the value is
    /// compared at `Y` and `Y K` for a few random isotropy factors `K`. A
    /// residual beyond [`QUOTIENT_CHECK_TOL`] logs a warning (not an
    /// error); optimizing such a function is meaningful only upstairs on
    /// the Stiefel manifold.
    pub fn new(
        sig: FlagSignature,
        value: impl Fn(&DMatrix<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&DMatrix<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        let mut obj = Self {
            sig,
            value: Box::new(value),
            gradient: Box::new(gradient),
            hessian: None,
            fd_hessian: false,
            quotient_residual: 0.0,
        };
        obj.quotient_residual = obj.probe_quotient();
        if obj.quotient_residual > QUOTIENT_CHECK_TOL {
            log::warn!(
                "objective is not well-defined on {}: value changes by {:.3e} under isotropy rotations",
                obj.sig,
                obj.quotient_residual
            );
        }
        obj
    }

    /// Attaches the analytic second-derivative form `f_YY(X, X')`.
    pub fn with_euclidean_hessian(
        mut self,
        hessian: impl Fn(&DMatrix<f64>, &DMatrix<f64>, &DMatrix<f64>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Box::new(hessian));
        self
    }

    /// Enables the central-difference fallback for `f_YY` when no analytic
    /// form is attached (step `1e-5 (1 + |Y|_F)` on the gradient, accuracy
    /// around 1e-6).
    pub fn with_fd_hessian(mut self) -> Self {
        self.fd_hessian = true;
        self
    }

    /// The same objective with flipped sign (for maximization via
    /// minimization).
    pub fn negated(self) -> Self {
        let value = self.value;
        let gradient = self.gradient;
        let hessian = self.hessian;
        Self {
            sig: self.sig,
            value: Box::new(move |y| -value(y)),
            gradient: Box::new(move |y| -gradient(y)),
            hessian: hessian.map(|h| -> Box<HessianFn> { Box::new(move |y, x, xp| -h(y, x, xp)) }),
            fd_hessian: self.fd_hessian,
            quotient_residual: self.quotient_residual,
        }
    }

    pub fn signature(&self) -> &FlagSignature {
        &self.sig
    }

    /// Largest value deviation observed under isotropy rotations at
    /// construction time.
    pub fn quotient_residual(&self) -> f64 {
        self.quotient_residual
    }

    fn probe_quotient(&self) -> f64 {
        let p = StiefelPoint::random(&self.sig, 0x5f1a6);
        let f0 = (self.value)(p.matrix());
        let mut residual = 0.0f64;
        for k in 0..3 {
            let rot = isotropy_factor(&self.sig, 0xc0ffee + k);
            let f1 = (self.value)(&(p.matrix() * rot));
            residual = residual.max((f1 - f0).abs());
        }
        residual / (1.0 + f0.abs())
    }

    pub fn value(&self, p: &StiefelPoint) -> f64 {
        (self.value)(p.matrix())
    }

    pub fn value_ambient(&self, y: &DMatrix<f64>) -> f64 {
        (self.value)(y)
    }

    /// The matrix of partials `f_Y`, shape-checked.
    pub fn euclidean_gradient(&self, p: &StiefelPoint) -> Result<DMatrix<f64>> {
        let g = (self.gradient)(p.matrix());
        if g.nrows() != self.sig.ambient() || g.ncols() != self.sig.nd() {
            return Err(FlagError::ShapeMismatch {
                expected: format!("{}x{}", self.sig.ambient(), self.sig.nd()),
                got: format!("{}x{}", g.nrows(), g.ncols()),
            });
        }
        Ok(g)
    }

    pub fn has_second_derivatives(&self) -> bool {
        self.hessian.is_some() || self.fd_hessian
    }

    /// The Euclidean bilinear form `f_YY(x, xp)` at `y`, analytic when
    /// available, otherwise by central differences on the gradient.
    pub fn euclidean_hessian_form(
        &self,
        y: &DMatrix<f64>,
        x: &DMatrix<f64>,
        xp: &DMatrix<f64>,
    ) -> Result<f64> {
        if let Some(h) = &self.hessian {
            return Ok(h(y, x, xp));
        }
        if !self.fd_hessian {
            return Err(FlagError::MissingHessian);
        }
        let h = 1e-5 * (1.0 + y.norm());
        let plus = (self.gradient)(&(y + xp * h));
        let minus = (self.gradient)(&(y - xp * h));
        Ok(linalg::fro_inner(x, &(&plus - &minus)) / (2.0 * h))
    }
}

impl std::fmt::Debug for ObjectiveFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObjectiveFunction")
            .field("sig", &self.sig)
            .field("has_hessian", &self.hessian.is_some())
            .field("fd_hessian", &self.fd_hessian)
            .finish()
    }
}

/// The Riemannian gradient at `p`: the metric dual of the differential,
/// `grad_i = f_{Y_i} - (Y_i Y_i^T f_{Y_i} + sum_{j != i} Y_j f_{Y_j}^T Y_i)`.
///
/// It satisfies `g(grad, T) = tr(f_Y^T T)` for every tangent `T`, i.e. it
/// realizes the directional derivative along geodesics.
pub fn riemannian_gradient(f: &ObjectiveFunction, p: &StiefelPoint) -> Result<TangentVector> {
    if f.signature() != p.signature() {
        return Err(FlagError::SignatureMismatch);
    }
    let fy = f.euclidean_gradient(p)?;
    tangent::tangent_shape(p, &fy, 1.0)
}

/// The Riemannian Hessian as a symmetric bilinear form on tangent vectors
/// at `p`; equals `(d^2/dt^2) f(gamma(t))` at `t = 0` along the geodesic
/// with velocity `u` when `u = v`.
pub fn hessian_form(
    f: &ObjectiveFunction,
    p: &StiefelPoint,
    u: &TangentVector,
    v: &TangentVector,
) -> Result<f64> {
    let fy = f.euclidean_gradient(p)?;
    hessian_form_with(f, p, &fy, u, v)
}

fn hessian_form_with(
    f: &ObjectiveFunction,
    p: &StiefelPoint,
    fy: &DMatrix<f64>,
    u: &TangentVector,
    v: &TangentVector,
) -> Result<f64> {
    check_based_at(p, u)?;
    check_based_at(p, v)?;
    let quad = f.euclidean_hessian_form(p.matrix(), u.delta(), v.delta())?;
    let frame = p.frame();
    let b = u.generator().matrix();
    let c = v.generator().matrix();
    let fy_frame = frame.transpose() * fy;
    // tr(f_Y^T Q B^T Q^T X') = tr((Q^T f_Y)^T B^T (Q^T X')), and Q^T X' is
    // the leading columns of the generator C.
    let nd = p.signature().nd();
    let term_u = linalg::fro_inner(&fy_frame, &(b.transpose() * c.columns(0, nd)));
    let term_v = linalg::fro_inner(&fy_frame, &(c.transpose() * b.columns(0, nd)));
    Ok(quad - 0.5 * (term_u + term_v))
}

fn check_based_at(p: &StiefelPoint, v: &TangentVector) -> Result<()> {
    if v.base().signature() != p.signature() {
        return Err(FlagError::SignatureMismatch);
    }
    let scale = 1.0 + p.matrix().norm();
    if (v.base().matrix() - p.matrix()).norm() > 1e-12 * scale {
        return Err(FlagError::BaseMismatch);
    }
    Ok(())
}

/// Relative residual demanded of the Newton linear solve.
pub const NEWTON_RESIDUAL_TOL: f64 = 1e-8;

/// The Newton search direction: the tangent vector `X` with
/// `hess(X, T) = -g(grad, T)` for every tangent `T`.
///
/// The system is assembled densely over the canonical orthonormal basis of
/// `m` (`dim^2` Hessian evaluations, intended for desk-scale problems),
/// factored by partial-pivot LU, and Tikhonov-regularized once if the
/// factorization is singular or the residual misses
/// [`NEWTON_RESIDUAL_TOL`] relative to `|grad|`.
pub fn newton_direction(f: &ObjectiveFunction, p: &StiefelPoint) -> Result<TangentVector> {
    if !f.has_second_derivatives() {
        return Err(FlagError::MissingHessian);
    }
    let sig = p.signature().clone();
    let dim = sig.dimension();
    let grad = riemannian_gradient(f, p)?;
    let fy = f.euclidean_gradient(p)?;

    let basis: Vec<TangentVector> = SkewGenerator::basis(&sig)
        .iter()
        .map(|b| TangentVector::push(p, b))
        .collect::<Result<_>>()?;

    let mut h = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let val = hessian_form_with(f, p, &fy, &basis[a], &basis[b])?;
            h[(a, b)] = val;
            h[(b, a)] = val;
        }
    }
    let mut rhs = nalgebra::DVector::zeros(dim);
    for a in 0..dim {
        rhs[a] = -tangent::metric(&grad, &basis[a])?;
    }

    let grad_norm = grad.norm();
    let solve = |m: &DMatrix<f64>| m.clone().lu().solve(&rhs);
    let acceptable = |c: &nalgebra::DVector<f64>, m: &DMatrix<f64>| {
        (m * c - &rhs).norm() <= NEWTON_RESIDUAL_TOL * grad_norm.max(f64::MIN_POSITIVE)
    };

    let coeffs = match solve(&h) {
        Some(c) if acceptable(&c, &h) => c,
        _ => {
            let ridge = &h + DMatrix::identity(dim, dim) * (1e-10 * h.norm());
            match solve(&ridge) {
                Some(c) if acceptable(&c, &ridge) => c,
                _ => return Err(FlagError::SingularHessian),
            }
        }
    };

    let mut delta = DMatrix::zeros(sig.ambient(), sig.nd());
    for a in 0..dim {
        delta += basis[a].delta() * coeffs[a];
    }
    Ok(TangentVector::new_unchecked(p.clone(), delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::Geodesic;
    use crate::tangent::{metric, tangency_residual};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// tr(Y^T M Y) with analytic first and second derivatives.
    fn trace_objective(sig: &FlagSignature, m: DMatrix<f64>) -> ObjectiveFunction {
        let m1 = m.clone();
        let m2 = m.clone();
        ObjectiveFunction::new(
            sig.clone(),
            move |y| (y.transpose() * &m1 * y).trace(),
            move |y| &m2 * y * 2.0,
        )
        .with_euclidean_hessian(move |_y, x, xp| 2.0 * linalg::fro_inner(x, &(&m * xp)))
    }

    fn random_sym(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = linalg::gaussian_matrix(n, n, &mut rng);
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn gradient_reduces_to_grassmannian_formula() {
        let sig = FlagSignature::grassmannian(3, 8).unwrap();
        let m = random_sym(8, 1);
        let f = trace_objective(&sig, m.clone());
        let p = StiefelPoint::random(&sig, 2);
        let grad = riemannian_gradient(&f, &p).unwrap();
        let fy = &m * p.matrix() * 2.0;
        let closed = &fy - p.matrix() * (p.matrix().transpose() * &fy);
        assert!((grad.delta() - closed).norm() < 1e-12);
    }

    #[test]
    fn gradient_matches_blockwise_formula() {
        let sig = FlagSignature::new(vec![2, 3, 5], 9).unwrap();
        let f = trace_objective(&sig, random_sym(9, 3));
        let p = StiefelPoint::random(&sig, 4);
        let grad = riemannian_gradient(&f, &p).unwrap();
        assert!(tangency_residual(&p, grad.delta()) < 1e-10);

        let fy = f.euclidean_gradient(&p).unwrap();
        let y = p.matrix();
        for i in 1..=sig.depth() {
            let ri = sig.block_range(i);
            let yi = y.columns(ri.start, ri.len());
            let fyi = fy.columns(ri.start, ri.len());
            let mut di = fyi - &yi * (yi.transpose() * fyi);
            for j in 1..=sig.depth() {
                if j == i {
                    continue;
                }
                let rj = sig.block_range(j);
                let yj = y.columns(rj.start, rj.len());
                let fyj = fy.columns(rj.start, rj.len());
                di -= yj * (fyj.transpose() * yi);
            }
            let gi = grad.delta().columns(ri.start, ri.len());
            assert!((gi - di).norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_vanishes_at_an_eigenbasis() {
        let sig = FlagSignature::grassmannian(2, 5).unwrap();
        let m = DMatrix::from_diagonal(&nalgebra::dvector![5.0, 4.0, 3.0, 2.0, 1.0]);
        let f = trace_objective(&sig, m);
        let p = StiefelPoint::coordinate_flag(&sig);
        let grad = riemannian_gradient(&f, &p).unwrap();
        assert!(grad.delta().norm() < 1e-14);
    }

    #[test]
    fn gradient_realizes_directional_derivatives() {
        let sig = FlagSignature::new(vec![1, 3], 7).unwrap();
        let f = trace_objective(&sig, random_sym(7, 5));
        let p = StiefelPoint::random(&sig, 6);
        let grad = riemannian_gradient(&f, &p).unwrap();
        let fy = f.euclidean_gradient(&p).unwrap();
        let h = 1e-5;
        for seed in 0..10 {
            let t = TangentVector::random(&p, 7000 + seed);
            // Pairing identity against the differential.
            let lhs = metric(&grad, &t).unwrap();
            let pairing = linalg::fro_inner(&fy, t.delta());
            assert!((lhs - pairing).abs() < 1e-10 * (1.0 + lhs.abs()));
            // Finite differences along the geodesic with velocity t.
            let g = Geodesic::from_tangent(&t);
            let fd = (f.value(&g.point_at(h)) - f.value(&g.point_at(-h))) / (2.0 * h);
            assert!(
                (lhs - fd).abs() < 1e-6 * (1.0 + lhs.abs()),
                "slope {lhs} vs fd {fd}"
            );
        }
    }

    #[test]
    fn gradient_is_equivariant_under_isotropy() {
        let sig = FlagSignature::new(vec![2, 4], 9).unwrap();
        let f = trace_objective(&sig, random_sym(9, 7));
        let p = StiefelPoint::random(&sig, 8);
        let k = isotropy_factor(&sig, 9);
        let rotated = StiefelPoint::new(sig.clone(), p.matrix() * &k).unwrap();
        let g1 = riemannian_gradient(&f, &p).unwrap();
        let g2 = riemannian_gradient(&f, &rotated).unwrap();
        assert!((g1.delta() * &k - g2.delta()).norm() < 1e-10);
    }

    #[test]
    fn quotient_probe_warns_on_bad_objectives() {
        let sig = FlagSignature::new(vec![1, 2], 4).unwrap();
        // Depends on the representative, not the flag.
        let f = ObjectiveFunction::new(
            sig.clone(),
            |y| y[(0, 0)],
            |y| DMatrix::zeros(y.nrows(), y.ncols()),
        );
        assert!(f.quotient_residual() > QUOTIENT_CHECK_TOL);

        let good = trace_objective(&sig, random_sym(4, 11));
        assert!(good.quotient_residual() < QUOTIENT_CHECK_TOL);
    }

    #[test]
    fn hessian_is_symmetric_and_polarizes() {
        let sig = FlagSignature::new(vec![1, 3], 6).unwrap();
        let f = trace_objective(&sig, random_sym(6, 12));
        let p = StiefelPoint::random(&sig, 13);
        for seed in 0..5 {
            let u = TangentVector::random(&p, 7100 + seed);
            let v = TangentVector::random(&p, 7200 + seed);
            let huv = hessian_form(&f, &p, &u, &v).unwrap();
            let hvu = hessian_form(&f, &p, &v, &u).unwrap();
            assert!((huv - hvu).abs() < 1e-12 * (1.0 + huv.abs()));
            // Polarization from diagonal values.
            let sum = u.add(&v).unwrap();
            let polarized = 0.5
                * (hessian_form(&f, &p, &sum, &sum).unwrap()
                    - hessian_form(&f, &p, &u, &u).unwrap()
                    - hessian_form(&f, &p, &v, &v).unwrap());
            assert!((huv - polarized).abs() < 1e-12 * (1.0 + huv.abs()));
        }
    }

    #[test]
    fn hessian_reduces_on_grassmannians() {
        // d = 1: hess(u, v) = f_YY(u, v) - tr(u^T v Y^T f_Y).
        let sig = FlagSignature::grassmannian(2, 6).unwrap();
        let f = trace_objective(&sig, random_sym(6, 14));
        let p = StiefelPoint::random(&sig, 15);
        let fy = f.euclidean_gradient(&p).unwrap();
        for seed in 0..5 {
            let u = TangentVector::random(&p, 7300 + seed);
            let v = TangentVector::random(&p, 7400 + seed);
            let h = hessian_form(&f, &p, &u, &v).unwrap();
            let quad = f
                .euclidean_hessian_form(p.matrix(), u.delta(), v.delta())
                .unwrap();
            let reduction = quad
                - ((u.delta().transpose() * v.delta()) * (p.matrix().transpose() * &fy)).trace();
            assert!((h - reduction).abs() < 1e-10 * (1.0 + h.abs()));
        }
    }

    #[test]
    fn hessian_matches_second_finite_differences() {
        let sig = FlagSignature::new(vec![2, 3], 7).unwrap();
        let f = trace_objective(&sig, random_sym(7, 16));
        let p = StiefelPoint::random(&sig, 17);
        let h = 1e-4;
        for seed in 0..5 {
            let u = TangentVector::random(&p, 7500 + seed);
            let g = Geodesic::from_tangent(&u);
            let second =
                (f.value(&g.point_at(h)) - 2.0 * f.value(&p) + f.value(&g.point_at(-h))) / (h * h);
            let hess = hessian_form(&f, &p, &u, &u).unwrap();
            assert!(
                (hess - second).abs() < 1e-4 * (1.0 + hess.abs()),
                "hess {hess} vs fd {second}"
            );
        }
    }

    #[test]
    fn fd_hessian_fallback_tracks_the_analytic_form() {
        let sig = FlagSignature::new(vec![1, 2], 5).unwrap();
        let m = random_sym(5, 18);
        let analytic = trace_objective(&sig, m.clone());
        let m1 = m.clone();
        let m2 = m.clone();
        let fallback = ObjectiveFunction::new(
            sig.clone(),
            move |y| (y.transpose() * &m1 * y).trace(),
            move |y| &m2 * y * 2.0,
        )
        .with_fd_hessian();
        let p = StiefelPoint::random(&sig, 19);
        let u = TangentVector::random(&p, 20);
        let v = TangentVector::random(&p, 21);
        let a = hessian_form(&analytic, &p, &u, &v).unwrap();
        let b = hessian_form(&fallback, &p, &u, &v).unwrap();
        assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()));
    }

    #[test]
    fn missing_second_derivatives_error() {
        let sig = FlagSignature::new(vec![1], 3).unwrap();
        let f = ObjectiveFunction::new(
            sig.clone(),
            |_| 0.0,
            |y| DMatrix::zeros(y.nrows(), y.ncols()),
        );
        let p = StiefelPoint::random(&sig, 22);
        let u = TangentVector::random(&p, 23);
        assert!(matches!(
            hessian_form(&f, &p, &u, &u),
            Err(FlagError::MissingHessian)
        ));
        assert!(matches!(
            newton_direction(&f, &p),
            Err(FlagError::MissingHessian)
        ));
    }

    #[test]
    fn newton_direction_is_zero_at_critical_points() {
        let sig = FlagSignature::grassmannian(1, 3).unwrap();
        let m = DMatrix::from_diagonal(&nalgebra::dvector![3.0, 2.0, 1.0]);
        // Minimize -tr: the coordinate flag is the maximizer of tr, i.e. a
        // critical point with nondegenerate Hessian.
        let f = trace_objective(&sig, m).negated();
        let p = StiefelPoint::coordinate_flag(&sig);
        let x = newton_direction(&f, &p).unwrap();
        assert!(x.delta().norm() < 1e-12);
    }

    #[test]
    fn newton_system_residual_is_tiny() {
        let sig = FlagSignature::new(vec![1, 2], 4).unwrap();
        for seed in 0..5 {
            let f = trace_objective(&sig, random_sym(4, 800 + seed)).negated();
            let p = StiefelPoint::random(&sig, 900 + seed);
            let grad = riemannian_gradient(&f, &p).unwrap();
            let x = match newton_direction(&f, &p) {
                Ok(x) => x,
                // A singular Hessian is a legitimate outcome for a random
                // instance; the solvers fall back to steepest descent.
                Err(FlagError::SingularHessian) => continue,
                Err(e) => panic!("{e}"),
            };
            for b in SkewGenerator::basis(&sig) {
                let t = TangentVector::push(&p, &b).unwrap();
                let lhs = hessian_form(&f, &p, &x, &t).unwrap();
                let rhs = -metric(&grad, &t).unwrap();
                assert!(
                    (lhs - rhs).abs() <= 10.0 * NEWTON_RESIDUAL_TOL * (1.0 + grad.norm()),
                    "seed {seed}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn newton_iteration_converges_quadratically_on_the_circle() {
        // Rayleigh quotient on Gr(1, 2) near the top eigenvector: the
        // angle error must (at least) square with each full Newton step.
        let sig = FlagSignature::grassmannian(1, 2).unwrap();
        let m = DMatrix::from_diagonal(&nalgebra::dvector![2.0, 1.0]);
        let f = trace_objective(&sig, m).negated();
        let mut theta: f64 = 0.3;
        let mut errors = vec![theta.abs()];
        for _ in 0..3 {
            let y = DMatrix::from_column_slice(2, 1, &[theta.cos(), theta.sin()]);
            let p = StiefelPoint::new(sig.clone(), y).unwrap();
            let x = newton_direction(&f, &p).unwrap();
            let next = Geodesic::from_tangent(&x).point_at(1.0);
            theta = next.matrix()[(1, 0)].atan2(next.matrix()[(0, 0)]);
            // Map to the representative angle closest to zero.
            if theta > std::f64::consts::FRAC_PI_2 {
                theta -= std::f64::consts::PI;
            }
            if theta < -std::f64::consts::FRAC_PI_2 {
                theta += std::f64::consts::PI;
            }
            errors.push(theta.abs());
        }
        for k in 1..errors.len() {
            assert!(
                errors[k] <= 2.0 * errors[k - 1] * errors[k - 1] + 1e-14,
                "errors: {errors:?}"
            );
        }
        assert!(errors[3] < 1e-10, "errors: {errors:?}");
    }
}
