//! Minimization on the flag manifold: steepest descent, conjugate
//! gradient, and Newton iterations with geodesic line searches.
//!
//! All solvers minimize; wrap a maximization objective with
//! [`ObjectiveFunction::negated`]. One iteration moves along the geodesic
//! `t -> [Y, Y^perp] exp(tB) I_{n,n_d}` whose generator is lifted from the
//! search direction, with the step chosen by backtracking (Armijo) or by
//! golden-section search on a bracket derived from the geodesic's fastest
//! rotation rate. The full orthogonal frame is carried across iterations
//! and re-orthonormalized periodically to contain drift.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::calculus::{self, ObjectiveFunction};
use crate::error::{FlagError, Result};
use crate::geodesic::Geodesic;
use crate::linalg;
use crate::point::StiefelPoint;
use crate::tangent::{metric, TangentVector};

/// Step-length strategies along geodesics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearchMode {
    /// Backtracking with the sufficient-decrease condition
    /// `f(t) <= f(0) + c1 t f'(0)`; the first trial step doubles the
    /// previously accepted one.
    Armijo,
    /// Golden-section minimization on `[0, pi / max(rate, eps)]` to a
    /// relative width of 1e-8, with a backtracking safety net.
    GoldenExact,
}

/// Stopping thresholds and line-search parameters.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// On the Frobenius norm of the Riemannian gradient.
    pub grad_tol: f64,
    /// On the geodesic distance between successive iterates.
    pub step_tol: f64,
    pub line_search: LineSearchMode,
    pub armijo_c1: f64,
    pub armijo_shrink: f64,
    pub armijo_max_shrinks: usize,
    /// Armijo trial step of the very first iteration.
    pub initial_step: f64,
    /// Conjugate-gradient restart period; defaults to the manifold
    /// dimension when unset.
    pub cg_restart_period: Option<usize>,
    /// Frame re-orthonormalization cadence, in accepted steps.
    pub reorthonormalize_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            grad_tol: 1e-6,
            step_tol: 1e-10,
            line_search: LineSearchMode::Armijo,
            armijo_c1: 1e-4,
            armijo_shrink: 0.5,
            armijo_max_shrinks: 60,
            initial_step: 1.0,
            cg_restart_period: None,
            reorthonormalize_every: 50,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(FlagError::InvalidSignature(
                "max_iters must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("grad_tol", self.grad_tol),
            ("step_tol", self.step_tol),
            ("armijo_c1", self.armijo_c1),
            ("armijo_shrink", self.armijo_shrink),
            ("initial_step", self.initial_step),
        ] {
            if v.is_nan() || v < 0.0 || (name != "grad_tol" && name != "step_tol" && v == 0.0) {
                return Err(FlagError::NegativeParameter(v));
            }
        }
        Ok(())
    }
}

/// One accepted iteration (plus the initial state as record zero).
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iter: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub elapsed_ms: f64,
}

/// Which stopping rule fired, in priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradTol,
    StepTol,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub point: StiefelPoint,
    pub trajectory: Vec<IterationRecord>,
    pub termination: Termination,
}

impl SolveResult {
    /// Accepted iterations (the initial state is not counted).
    pub fn iterations(&self) -> usize {
        self.trajectory.len().saturating_sub(1)
    }

    pub fn final_f(&self) -> f64 {
        self.trajectory.last().expect("nonempty trajectory").f
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.trajectory
            .last()
            .expect("nonempty trajectory")
            .grad_norm
    }
}

/// Step length along a descent geodesic.
///
/// The initial slope `f'(0) = tr(f_Y^T gamma'(0))` must be negative. Armijo
/// backtracks from `t = 1`; golden-section brackets on
/// `[0, pi / max(rate, eps)]` where `rate` is the largest rotation rate of
/// the generator (half the quasi-period of the fastest component), refines
/// to a relative width of 1e-8, and falls back to backtracking if the
/// bracket minimum fails to decrease `f`.
pub fn line_search_geodesic(
    f: &ObjectiveFunction,
    g: &Geodesic,
    mode: LineSearchMode,
) -> Result<f64> {
    let cfg = SolverConfig {
        line_search: mode,
        ..SolverConfig::default()
    };
    let fy = f.euclidean_gradient(g.base())?;
    let slope = linalg::fro_inner(&fy, g.initial_velocity().delta());
    let f0 = f.value(g.base());
    search_step(f, g, f0, slope, cfg.initial_step, &cfg)
}

fn search_step(
    f: &ObjectiveFunction,
    g: &Geodesic,
    f0: f64,
    slope: f64,
    init: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    if slope >= 0.0 || slope.is_nan() {
        return Err(FlagError::NotDescentDirection { slope });
    }
    let path = g.path();
    let eval = |t: f64| f.value_ambient(&path.point_matrix_at(t));
    match cfg.line_search {
        LineSearchMode::Armijo => armijo(&eval, f0, slope, init, cfg),
        LineSearchMode::GoldenExact => {
            let t_max = std::f64::consts::PI / path.max_rate().max(1e-12);
            match bracket_then_golden(&eval, f0, t_max, init.min(t_max)) {
                Some(t) => Ok(t),
                // No dyadic parameter decreased f (the profile is at the
                // resolution floor); backtrack as a last resort.
                None => armijo(&eval, f0, slope, t_max * 0.5, cfg),
            }
        }
    }
}

/// Brackets a minimizer inside `[0, t_max]` by geometric expansion or
/// shrinkage from the warm start, then refines by golden section. The
/// two-phase shape matters: the quasi-period cap `t_max = pi / rate`
/// diverges as the gradient shrinks, while the actual minimizer sits at
/// the curvature scale, so a fixed-width section over `[0, t_max]` cannot
/// resolve it near convergence.
fn bracket_then_golden(eval: &impl Fn(f64) -> f64, f0: f64, t_max: f64, init: f64) -> Option<f64> {
    let mut t1 = if init > 0.0 {
        init.min(t_max)
    } else {
        t_max * 1e-3
    };
    let f1 = eval(t1);
    if f1 < f0 {
        // Expand while the profile keeps falling.
        let (mut a, mut b, mut fb) = (0.0f64, t1, f1);
        loop {
            if b >= t_max {
                return golden(eval, f0, a, t_max);
            }
            let c = (b * 2.0).min(t_max);
            let fc = eval(c);
            if fc >= fb {
                return golden(eval, f0, a, c);
            }
            a = b;
            b = c;
            fb = fc;
        }
    }
    // Shrink toward zero until some parameter decreases f.
    for _ in 0..60 {
        let m = t1 * 0.5;
        if eval(m) < f0 {
            return golden(eval, f0, 0.0, t1);
        }
        t1 = m;
    }
    None
}

fn armijo(
    eval: &impl Fn(f64) -> f64,
    f0: f64,
    slope: f64,
    init: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let mut t = init;
    for attempt in 0..cfg.armijo_max_shrinks {
        let ft = eval(t);
        if ft <= f0 + cfg.armijo_c1 * t * slope {
            if attempt == 0 {
                return Ok(t);
            }
            // The trial step was shrunk at least once, so the warm start
            // overshot; keep shrinking while the value strictly improves,
            // otherwise a doubled warm start can park the iteration at
            // twice the optimal step forever. Smaller steps with smaller
            // values still satisfy the sufficient-decrease condition.
            let mut best_t = t;
            let mut best_f = ft;
            for _ in 0..cfg.armijo_max_shrinks {
                let tn = best_t * cfg.armijo_shrink;
                let fnext = eval(tn);
                if fnext < best_f {
                    best_t = tn;
                    best_f = fnext;
                } else {
                    break;
                }
            }
            return Ok(best_t);
        }
        t *= cfg.armijo_shrink;
    }
    Err(FlagError::LineSearchStall {
        attempts: cfg.armijo_max_shrinks,
    })
}

/// Golden-section search on `[a0, b0]` to a relative width of 1e-8;
/// returns the best parameter seen provided it decreases `f0`, else
/// `None`.
fn golden(eval: &impl Fn(f64) -> f64, f0: f64, a0: f64, b0: f64) -> Option<f64> {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut a = a0;
    let mut b = b0;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    let (mut best_t, mut best_f) = if fc <= fd { (c, fc) } else { (d, fd) };
    let width = 1e-8 * (b0 - a0);
    while (b - a) > width {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = eval(c);
            if fc < best_f {
                best_f = fc;
                best_t = c;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = eval(d);
            if fd < best_f {
                best_f = fd;
                best_t = d;
            }
        }
    }
    (best_f < f0).then_some(best_t)
}

/// Mutable state carried across iterations: the full orthogonal frame, the
/// point, its value, and its gradient data.
struct RunState<'a> {
    f: &'a ObjectiveFunction,
    cfg: &'a SolverConfig,
    frame: DMatrix<f64>,
    point: StiefelPoint,
    fval: f64,
    fy: DMatrix<f64>,
    grad: TangentVector,
    grad_norm: f64,
    trajectory: Vec<IterationRecord>,
    started: Instant,
    accepted: usize,
    prev_step: f64,
}

impl<'a> RunState<'a> {
    fn start(f: &'a ObjectiveFunction, p0: &StiefelPoint, cfg: &'a SolverConfig) -> Result<Self> {
        if f.signature() != p0.signature() {
            return Err(FlagError::SignatureMismatch);
        }
        cfg.validate()?;
        let started = Instant::now();
        let point = p0.clone();
        let frame = point.frame();
        let fval = f.value(&point);
        let fy = f.euclidean_gradient(&point)?;
        let grad = crate::tangent::tangent_shape(&point, &fy, 1.0)?;
        let grad_norm = grad.delta().norm();
        let mut state = Self {
            f,
            cfg,
            frame,
            point,
            fval,
            fy,
            grad,
            grad_norm,
            trajectory: Vec::new(),
            started,
            accepted: 0,
            prev_step: cfg.initial_step,
        };
        state.record(0, 0.0);
        Ok(state)
    }

    fn record(&mut self, iter: usize, step: f64) {
        self.trajectory.push(IterationRecord {
            iter,
            f: self.fval,
            grad_norm: self.grad_norm,
            step,
            elapsed_ms: self.started.elapsed().as_secs_f64() * 1e3,
        });
    }

    /// Moves to `exp(t B)` along `geod`, shrinking `t` if the Pade-evaluated
    /// value regresses past the path-evaluated one by roundoff. Frame
    /// cleanup happens inside the acceptance loop, so the recorded values
    /// are monotone with respect to the frames actually kept.
    fn advance(&mut self, geod: &Geodesic, mut t: f64) -> Result<f64> {
        let clean = self.cfg.reorthonormalize_every > 0
            && (self.accepted + 1).is_multiple_of(self.cfg.reorthonormalize_every);
        let mut frame;
        let mut point;
        let mut fval;
        let mut shrinks = 0;
        loop {
            frame = geod.frame_at(t);
            if clean {
                let cleaned = linalg::thin_qr_positive(&frame);
                debug_assert!(
                    frame_point(self.point.signature(), &cleaned)
                        .same_flag(&frame_point(self.point.signature(), &frame), 1e-8)
                        .unwrap_or(false),
                    "re-orthonormalization moved the flag"
                );
                frame = cleaned;
            }
            point = frame_point(self.point.signature(), &frame);
            fval = self.f.value(&point);
            if fval <= self.fval {
                break;
            }
            shrinks += 1;
            if shrinks > self.cfg.armijo_max_shrinks {
                return Err(FlagError::LineSearchStall {
                    attempts: self.cfg.armijo_max_shrinks,
                });
            }
            t *= self.cfg.armijo_shrink;
        }
        self.accepted += 1;
        self.frame = frame;
        self.point = point;
        self.fval = fval;
        self.fy = self.f.euclidean_gradient(&self.point)?;
        self.grad = crate::tangent::tangent_shape(&self.point, &self.fy, 1.0)?;
        self.grad_norm = self.grad.delta().norm();
        Ok(t)
    }

    fn slope_along(&self, dir: &TangentVector) -> f64 {
        linalg::fro_inner(&self.fy, dir.delta())
    }

    fn finish(self, termination: Termination) -> SolveResult {
        SolveResult {
            point: self.point,
            trajectory: self.trajectory,
            termination,
        }
    }
}

fn frame_point(sig: &crate::signature::FlagSignature, frame: &DMatrix<f64>) -> StiefelPoint {
    let n = sig.ambient();
    let k = sig.nd();
    StiefelPoint::with_known_completion(
        sig.clone(),
        frame.columns(0, k).into_owned(),
        frame.columns(k, n - k).into_owned(),
    )
}

/// Steepest descent: move along the geodesic generated by the negative
/// Riemannian gradient, with the configured line search. Minimizes `f`.
pub fn steepest_descent(
    f: &ObjectiveFunction,
    p0: &StiefelPoint,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    descent_with(f, p0, cfg, |_state, grad| Ok(grad.scale(-1.0)))
}

/// Newton iteration: the descent loop with the Newton direction in place
/// of the negative gradient, an Armijo safeguard starting from the unit
/// step, and a fall back to steepest descent whenever the Newton system is
/// singular or its solution is not a descent direction.
pub fn newton_solve(
    f: &ObjectiveFunction,
    p0: &StiefelPoint,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    if !f.has_second_derivatives() {
        return Err(FlagError::MissingHessian);
    }
    let armijo_cfg = SolverConfig {
        line_search: LineSearchMode::Armijo,
        ..cfg.clone()
    };
    let mut state = RunState::start(f, p0, &armijo_cfg)?;
    let mut termination = Termination::MaxIters;
    for iter in 1..=armijo_cfg.max_iters {
        if state.grad_norm <= armijo_cfg.grad_tol {
            termination = Termination::GradTol;
            break;
        }
        let mut dir = match calculus::newton_direction(f, &state.point) {
            Ok(d) => d,
            Err(FlagError::SingularHessian) => state.grad.scale(-1.0),
            Err(e) => return Err(e),
        };
        if state.slope_along(&dir) >= 0.0 {
            dir = state.grad.scale(-1.0);
        }
        let slope = state.slope_along(&dir);
        if slope >= 0.0 {
            termination = Termination::StepTol;
            break;
        }
        let geod = Geodesic::from_tangent(&dir);
        // Full Newton step first; backtrack from there.
        let t = search_step(f, &geod, state.fval, slope, 1.0, &armijo_cfg)?;
        let t = state.advance(&geod, t)?;
        let step_len = geod.arclength(t)?;
        state.record(iter, t);
        if step_len <= armijo_cfg.step_tol {
            termination = Termination::StepTol;
            break;
        }
    }
    Ok(state.finish(termination))
}

fn descent_with(
    f: &ObjectiveFunction,
    p0: &StiefelPoint,
    cfg: &SolverConfig,
    mut direction: impl FnMut(&RunState, &TangentVector) -> Result<TangentVector>,
) -> Result<SolveResult> {
    let mut state = RunState::start(f, p0, cfg)?;
    let mut termination = Termination::MaxIters;
    for iter in 1..=cfg.max_iters {
        if state.grad_norm <= cfg.grad_tol {
            termination = Termination::GradTol;
            break;
        }
        let mut dir = direction(&state, &state.grad.clone())?;
        let mut slope = state.slope_along(&dir);
        if slope >= 0.0 {
            dir = state.grad.scale(-1.0);
            slope = state.slope_along(&dir);
        }
        if slope >= 0.0 {
            // Numerical stationarity: no direction makes progress.
            termination = Termination::StepTol;
            break;
        }
        let geod = Geodesic::from_tangent(&dir);
        let t = search_step(f, &geod, state.fval, slope, state.prev_step * 2.0, cfg)?;
        let t = state.advance(&geod, t)?;
        state.prev_step = t;
        let step_len = geod.arclength(t)?;
        state.record(iter, t);
        if step_len <= cfg.step_tol {
            termination = Termination::StepTol;
            break;
        }
    }
    Ok(state.finish(termination))
}

/// Conjugate gradient with Polak-Ribiere updates: the new direction is
/// `H_{k+1} = -G_{k+1} + gamma_k tau(H_k)` with
/// `gamma_k = g(G_{k+1} - tau(G_k), G_{k+1}) / g(G_k, G_k)`, both vectors
/// parallel-transported along the accepted geodesic step. Directions reset
/// to the negative gradient every `cg_restart_period` iterations (the
/// manifold dimension when unset) and whenever the update fails to be a
/// descent direction.
pub fn conjugate_gradient(
    f: &ObjectiveFunction,
    p0: &StiefelPoint,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let mut state = RunState::start(f, p0, cfg)?;
    let restart = cfg
        .cg_restart_period
        .unwrap_or_else(|| p0.signature().dimension())
        .max(1);
    let mut termination = Termination::MaxIters;
    let mut dir = state.grad.scale(-1.0);
    for iter in 1..=cfg.max_iters {
        if state.grad_norm <= cfg.grad_tol {
            termination = Termination::GradTol;
            break;
        }
        if state.slope_along(&dir) >= 0.0 {
            dir = state.grad.scale(-1.0);
        }
        let slope = state.slope_along(&dir);
        if slope >= 0.0 {
            termination = Termination::StepTol;
            break;
        }
        let grad_prev = state.grad.clone();
        let geod = Geodesic::from_tangent(&dir);
        let t = search_step(f, &geod, state.fval, slope, state.prev_step * 2.0, cfg)?;
        let t = state.advance(&geod, t)?;
        state.prev_step = t;
        let step_len = geod.arclength(t)?;
        state.record(iter, t);
        if step_len <= cfg.step_tol {
            termination = Termination::StepTol;
            break;
        }

        // Transport the previous direction and gradient to the new point.
        let tau_h = geod.transport(&dir, t)?;
        let tau_g = geod.transport(&grad_prev, t)?;
        let denom = metric(&grad_prev, &grad_prev)?;
        if iter % restart == 0 || denom <= 0.0 {
            dir = state.grad.scale(-1.0);
        } else {
            let diff = state.grad.sub(&tau_g)?;
            let gamma = metric(&diff, &state.grad)? / denom;
            dir = state.grad.scale(-1.0).add(&tau_h.scale(gamma))?;
        }
    }
    Ok(state.finish(termination))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{
        eigenflag_objective, gaussian_symmetric, principal_flag_objective, true_principal_flag,
    };
    use crate::signature::FlagSignature;
    use crate::tangent::{tangency_residual, SkewGenerator};

    fn maximize_principal(m: DMatrix<f64>, sig: &FlagSignature) -> ObjectiveFunction {
        principal_flag_objective(m, sig.clone()).unwrap().negated()
    }

    #[test]
    fn critical_start_terminates_immediately() {
        let sig = FlagSignature::grassmannian(1, 3).unwrap();
        let m = DMatrix::from_diagonal(&nalgebra::dvector![3.0, 2.0, 1.0]);
        let f = maximize_principal(m, &sig);
        let p0 = StiefelPoint::coordinate_flag(&sig);
        let out = steepest_descent(&f, &p0, &SolverConfig::default()).unwrap();
        assert_eq!(out.termination, Termination::GradTol);
        assert_eq!(out.iterations(), 0);
        assert_eq!(out.point.matrix(), p0.matrix());
    }

    #[test]
    fn steepest_descent_finds_the_top_eigenvector() {
        let sig = FlagSignature::grassmannian(1, 3).unwrap();
        let m = DMatrix::from_diagonal(&nalgebra::dvector![3.0, 2.0, 1.0]);
        let f = maximize_principal(m, &sig);
        let p0 = StiefelPoint::random(&sig, 7);
        let out = steepest_descent(&f, &p0, &SolverConfig::default()).unwrap();
        assert_eq!(out.termination, Termination::GradTol);
        // Maximum of tr is 3 at span(e1).
        assert!((out.final_f() + 3.0).abs() < 1e-9);
        assert!(out.point.matrix()[(0, 0)].abs() > 1.0 - 1e-6);
    }

    #[test]
    fn objective_is_monotone_along_the_trajectory() {
        let sig = FlagSignature::new(vec![1, 3], 8).unwrap();
        let f = eigenflag_objective(gaussian_symmetric(8, 3), sig.clone())
            .unwrap()
            .negated();
        let p0 = StiefelPoint::random(&sig, 4);
        for mode in [LineSearchMode::Armijo, LineSearchMode::GoldenExact] {
            let cfg = SolverConfig {
                max_iters: 120,
                line_search: mode,
                ..SolverConfig::default()
            };
            let out = steepest_descent(&f, &p0, &cfg).unwrap();
            for w in out.trajectory.windows(2) {
                assert!(w[1].f <= w[0].f, "mode {mode:?}");
            }
            // Every iterate stayed orthonormal.
            assert!(linalg::orthonormality_residual(out.point.matrix()) < 1e-10);
        }
    }

    #[test]
    fn trajectories_are_deterministic() {
        let sig = FlagSignature::new(vec![2, 4], 10).unwrap();
        let f1 = maximize_principal(gaussian_symmetric(10, 5), &sig);
        let f2 = maximize_principal(gaussian_symmetric(10, 5), &sig);
        let p0 = StiefelPoint::random(&sig, 6);
        let cfg = SolverConfig {
            max_iters: 40,
            ..SolverConfig::default()
        };
        let a = steepest_descent(&f1, &p0, &cfg).unwrap();
        let b = steepest_descent(&f2, &p0, &cfg).unwrap();
        assert_eq!(a.trajectory.len(), b.trajectory.len());
        for (x, y) in a.trajectory.iter().zip(&b.trajectory) {
            assert_eq!(x.f, y.f);
            assert_eq!(x.step, y.step);
            assert_eq!(x.grad_norm, y.grad_norm);
        }
        assert_eq!(a.point.matrix(), b.point.matrix());
    }

    #[test]
    fn principal_flag_converges_to_the_truth_small() {
        let sig = FlagSignature::new(vec![2, 4], 20).unwrap();
        let m = gaussian_symmetric(20, 8);
        let truth = true_principal_flag(&m, &sig).unwrap();
        let f = maximize_principal(m, &sig);
        let p0 = StiefelPoint::random(&sig, 9);
        let cfg = SolverConfig {
            max_iters: 400,
            line_search: LineSearchMode::GoldenExact,
            ..SolverConfig::default()
        };
        let out = steepest_descent(&f, &p0, &cfg).unwrap();
        let gap = (-out.final_f() - truth.value).abs() / truth.value.abs();
        assert!(gap < 1e-8, "relative gap {gap:.3e}");
        // The trace objective pins down the largest subspace only: the
        // maximizers form a whole set of flags sharing V_d, so compare the
        // top-cut projectors rather than the full tuple.
        let d = sig.depth();
        assert!(out.point.projector_distance_at(&truth.point, d).unwrap() < 1e-4);
    }

    #[test]
    fn cg_with_unit_restart_reproduces_steepest_descent() {
        let sig = FlagSignature::new(vec![1, 2], 6).unwrap();
        let m = gaussian_symmetric(6, 10);
        let f = maximize_principal(m.clone(), &sig);
        let g = maximize_principal(m, &sig);
        let p0 = StiefelPoint::random(&sig, 11);
        let cfg = SolverConfig {
            max_iters: 30,
            cg_restart_period: Some(1),
            ..SolverConfig::default()
        };
        let sd = steepest_descent(&f, &p0, &cfg).unwrap();
        let cg = conjugate_gradient(&g, &p0, &cfg).unwrap();
        assert_eq!(sd.trajectory.len(), cg.trajectory.len());
        for (a, b) in sd.trajectory.iter().zip(&cg.trajectory) {
            assert!((a.f - b.f).abs() < 1e-12 * (1.0 + a.f.abs()));
            assert!((a.step - b.step).abs() < 1e-12 * (1.0 + a.step.abs()));
        }
        assert!((sd.point.matrix() - cg.point.matrix()).norm() < 1e-10);
    }

    #[test]
    fn cg_is_no_slower_than_steepest_descent_on_a_quadratic() {
        let sig = FlagSignature::grassmannian(2, 12).unwrap();
        let m = gaussian_symmetric(12, 12);
        let f = maximize_principal(m.clone(), &sig);
        let g = maximize_principal(m, &sig);
        let p0 = StiefelPoint::random(&sig, 13);
        let cfg = SolverConfig {
            max_iters: 500,
            line_search: LineSearchMode::GoldenExact,
            ..SolverConfig::default()
        };
        let sd = steepest_descent(&f, &p0, &cfg).unwrap();
        let cg = conjugate_gradient(&g, &p0, &cfg).unwrap();
        assert_eq!(sd.termination, Termination::GradTol);
        assert_eq!(cg.termination, Termination::GradTol);
        assert!(
            cg.iterations() <= sd.iterations(),
            "cg {} vs sd {}",
            cg.iterations(),
            sd.iterations()
        );
    }

    #[test]
    fn cg_transports_stay_tangent() {
        // Mirror one CG iteration by hand and check the transported
        // gradient and direction are tangent at the new iterate.
        let sig = FlagSignature::new(vec![2, 3], 9).unwrap();
        let f = maximize_principal(gaussian_symmetric(9, 14), &sig);
        let mut p = StiefelPoint::random(&sig, 15);
        let mut dir: Option<TangentVector> = None;
        for _ in 0..5 {
            let grad = calculus::riemannian_gradient(&f, &p).unwrap();
            let h = match &dir {
                None => grad.scale(-1.0),
                Some(d) => d.clone(),
            };
            let geod = Geodesic::from_tangent(&h);
            let t = line_search_geodesic(&f, &geod, LineSearchMode::Armijo).unwrap();
            let next = geod.point_at(t);
            let tau_h = geod.transport(&h, t).unwrap();
            let tau_g = geod.transport(&grad, t).unwrap();
            assert!(tangency_residual(&next, tau_h.delta()) < 1e-9 * (1.0 + tau_h.delta().norm()));
            assert!(tangency_residual(&next, tau_g.delta()) < 1e-9 * (1.0 + tau_g.delta().norm()));
            let grad_next = calculus::riemannian_gradient(&f, &next).unwrap();
            let gamma = metric(&grad_next.sub(&tau_g).unwrap(), &grad_next).unwrap()
                / metric(&grad, &grad).unwrap();
            dir = Some(grad_next.scale(-1.0).add(&tau_h.scale(gamma)).unwrap());
            p = next;
        }
    }

    #[test]
    fn newton_converges_in_a_few_steps_on_the_circle() {
        let sig = FlagSignature::grassmannian(1, 2).unwrap();
        let m = DMatrix::from_diagonal(&nalgebra::dvector![2.0, 1.0]);
        let f = maximize_principal(m, &sig);
        let theta: f64 = 0.5;
        let y = DMatrix::from_column_slice(2, 1, &[theta.cos(), theta.sin()]);
        let p0 = StiefelPoint::new(sig, y).unwrap();
        let cfg = SolverConfig {
            grad_tol: 1e-12,
            ..SolverConfig::default()
        };
        let out = newton_solve(&f, &p0, &cfg).unwrap();
        assert_eq!(out.termination, Termination::GradTol);
        assert!(out.iterations() <= 5, "{} iterations", out.iterations());
        assert!((out.final_f() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn newton_falls_back_near_saddles() {
        // Start near the middle eigenvector of diag(3,2,1): an indefinite
        // Hessian for trace maximization on Gr(1,3). The run must still
        // decrease the (negated) objective.
        let sig = FlagSignature::grassmannian(1, 3).unwrap();
        let m = DMatrix::from_diagonal(&nalgebra::dvector![3.0, 2.0, 1.0]);
        let f = maximize_principal(m, &sig);
        let y = DMatrix::from_column_slice(2 + 1, 1, &[0.02, 0.9996, 0.02]);
        let y = linalg::thin_qr_positive(&y);
        let p0 = StiefelPoint::new(sig, y).unwrap();
        let f0 = f.value(&p0);
        let cfg = SolverConfig {
            max_iters: 50,
            ..SolverConfig::default()
        };
        let out = newton_solve(&f, &p0, &cfg).unwrap();
        assert!(out.final_f() < f0);
        // Global minimum of -tr is -3.
        assert!((out.final_f() + 3.0).abs() < 1e-6);
    }

    #[test]
    fn newton_requires_second_derivatives() {
        let sig = FlagSignature::grassmannian(1, 3).unwrap();
        let f = ObjectiveFunction::new(
            sig.clone(),
            |_| 0.0,
            |y| DMatrix::zeros(y.nrows(), y.ncols()),
        );
        let p0 = StiefelPoint::random(&sig, 1);
        assert!(matches!(
            newton_solve(&f, &p0, &SolverConfig::default()),
            Err(FlagError::MissingHessian)
        ));
    }

    #[test]
    fn step_tolerance_fires_when_gradient_threshold_is_off() {
        let sig = FlagSignature::grassmannian(1, 4).unwrap();
        let f = maximize_principal(gaussian_symmetric(4, 16), &sig);
        let p0 = StiefelPoint::random(&sig, 17);
        let cfg = SolverConfig {
            grad_tol: 0.0,
            step_tol: 1e-9,
            max_iters: 5000,
            ..SolverConfig::default()
        };
        let out = steepest_descent(&f, &p0, &cfg).unwrap();
        assert_eq!(out.termination, Termination::StepTol);
    }

    #[test]
    fn max_iters_is_the_last_resort() {
        let sig = FlagSignature::new(vec![1, 2], 8).unwrap();
        let f = maximize_principal(gaussian_symmetric(8, 18), &sig);
        let p0 = StiefelPoint::random(&sig, 19);
        let cfg = SolverConfig {
            max_iters: 3,
            grad_tol: 1e-15,
            step_tol: 0.0,
            ..SolverConfig::default()
        };
        let out = steepest_descent(&f, &p0, &cfg).unwrap();
        assert_eq!(out.termination, Termination::MaxIters);
        assert_eq!(out.iterations(), 3);
    }

    #[test]
    fn armijo_accepts_the_unit_step_on_gentle_slopes() {
        let sig = FlagSignature::grassmannian(1, 3).unwrap();
        let m = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 0.999, 0.0]);
        let f = maximize_principal(m, &sig);
        let p0 = StiefelPoint::random(&sig, 20);
        let grad = calculus::riemannian_gradient(&f, &p0).unwrap();
        let geod = Geodesic::from_tangent(&grad.scale(-1.0));
        let t = line_search_geodesic(&f, &geod, LineSearchMode::Armijo).unwrap();
        assert_eq!(t, 1.0);
    }

    #[test]
    fn golden_handles_boundary_minima() {
        // f(t) = cos(phi0 + t) decreases over almost the whole bracket
        // [0, pi]; the section must end near t_max.
        let sig = FlagSignature::grassmannian(1, 2).unwrap();
        let phi0: f64 = 0.05;
        let y = DMatrix::from_column_slice(2, 1, &[phi0.cos(), phi0.sin()]);
        let yperp = DMatrix::from_column_slice(2, 1, &[-phi0.sin(), phi0.cos()]);
        let p = StiefelPoint::with_known_completion(sig.clone(), y, yperp);
        let mut bm = DMatrix::zeros(2, 2);
        bm[(0, 1)] = -1.0;
        bm[(1, 0)] = 1.0;
        let b = SkewGenerator::project(&sig, &bm).unwrap();
        let geod = Geodesic::new(p, b).unwrap();
        // f(y) = first coordinate = cos(angle), minimized at angle pi,
        // i.e. at t = pi - phi0, within 2% of the bracket end.
        let f = ObjectiveFunction::new(
            sig,
            |y| y[(0, 0)],
            |y| {
                let mut g = DMatrix::zeros(y.nrows(), y.ncols());
                g[(0, 0)] = 1.0;
                g
            },
        );
        let t = line_search_geodesic(&f, &geod, LineSearchMode::GoldenExact).unwrap();
        let t_max = std::f64::consts::PI;
        assert!((t - (t_max - phi0)).abs() < 1e-6, "t = {t}");
        assert!(t > 0.9 * t_max);
    }

    #[test]
    fn golden_recovers_the_closed_form_rotation_angle() {
        // Principal problem on Gr(1,2): from angle phi0 moving toward zero,
        // the exact minimizer of -y^T M y along the geodesic is t = phi0.
        let sig = FlagSignature::grassmannian(1, 2).unwrap();
        let m = DMatrix::from_diagonal(&nalgebra::dvector![2.0, 1.0]);
        let f = maximize_principal(m, &sig);
        let phi0: f64 = 0.4;
        let y = DMatrix::from_column_slice(2, 1, &[phi0.cos(), phi0.sin()]);
        let yperp = DMatrix::from_column_slice(2, 1, &[-phi0.sin(), phi0.cos()]);
        let p = StiefelPoint::with_known_completion(sig.clone(), y, yperp);
        // Unit-rate rotation decreasing the angle.
        let mut bm = DMatrix::zeros(2, 2);
        bm[(0, 1)] = 1.0;
        bm[(1, 0)] = -1.0;
        let b = SkewGenerator::project(&sig, &bm).unwrap();
        let geod = Geodesic::new(p, b).unwrap();
        let t = line_search_geodesic(&f, &geod, LineSearchMode::GoldenExact).unwrap();
        assert!((t - phi0).abs() < 1e-6, "t = {t}");
    }

    #[test]
    fn non_descent_directions_are_rejected() {
        let sig = FlagSignature::grassmannian(1, 3).unwrap();
        let m = DMatrix::from_diagonal(&nalgebra::dvector![3.0, 2.0, 1.0]);
        let f = maximize_principal(m, &sig);
        let p0 = StiefelPoint::random(&sig, 21);
        let grad = calculus::riemannian_gradient(&f, &p0).unwrap();
        // The positive gradient ascends.
        let geod = Geodesic::from_tangent(&grad);
        assert!(matches!(
            line_search_geodesic(&f, &geod, LineSearchMode::Armijo),
            Err(FlagError::NotDescentDirection { .. })
        ));
    }
}
