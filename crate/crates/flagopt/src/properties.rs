//! Randomized verification of every geometric invariant the library
//! promises, aggregated into one pass/fail report. Each check runs a fixed
//! number of seeded instances at desk scale (`n <= 60`) and records the
//! worst residual observed against its tolerance.

use flag_manifold::calculus::{hessian_form, riemannian_gradient};
use flag_manifold::geodesic::{bracket_m, distance, exp_skew, Geodesic, SpectralForm};
use flag_manifold::objectives::{
    gaussian_symmetric, principal_flag_objective, ProblemFamily, SymmetricMatrixProblem,
};
use flag_manifold::point::{isotropy_factor, isotropy_factor_full};
use flag_manifold::tangent::{metric, SkewGenerator, TangentVector};
use flag_manifold::{FlagSignature, StiefelPoint};

/// Instances per check.
pub const SAMPLES: usize = 100;

#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl PropertyCheck {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(PropertyCheck::passed)
    }

    /// One line per invariant: status, name, sample count, worst residual,
    /// tolerance.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<42} samples {:>4}  max residual {:>12.3e}  tol {:>9.1e}\n",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.samples,
                c.max_residual,
                c.tolerance
            ));
        }
        out
    }
}

fn deep_sigs() -> Vec<FlagSignature> {
    vec![
        FlagSignature::new(vec![3, 7, 12], 60).unwrap(),
        FlagSignature::new(vec![2, 4, 6, 8], 24).unwrap(),
        FlagSignature::new(vec![1, 3], 9).unwrap(),
        FlagSignature::new(vec![2, 5], 12).unwrap(),
    ]
}

fn grassmann_sigs() -> Vec<FlagSignature> {
    vec![
        FlagSignature::grassmannian(2, 7).unwrap(),
        FlagSignature::grassmannian(5, 16).unwrap(),
        FlagSignature::grassmannian(2, 60).unwrap(),
    ]
}

fn small_sigs() -> Vec<FlagSignature> {
    vec![
        FlagSignature::new(vec![1, 3], 9).unwrap(),
        FlagSignature::new(vec![2, 5], 12).unwrap(),
        FlagSignature::grassmannian(3, 10).unwrap(),
    ]
}

/// Runs every invariant check on `SAMPLES` seeded instances each.
pub fn run_property_suite(seed: u64) -> PropertyReport {
    let mix = |a: u64, b: u64| crate::child_seed(seed.wrapping_add(a), b);
    let mut checks = Vec::new();

    // Gradient versus central finite differences of f along geodesics,
    // relative to the slope magnitude.
    checks.push(run_check("gradient-vs-geodesic-fd", 1e-5, |k| {
        let sigs = small_sigs();
        let sig = &sigs[k % sigs.len()];
        let m = gaussian_symmetric(sig.ambient(), mix(1, k as u64));
        let family = if k % 2 == 0 {
            ProblemFamily::Principal
        } else {
            ProblemFamily::Eigenflag
        };
        let f = SymmetricMatrixProblem::new(m, sig.clone(), family)
            .unwrap()
            .objective();
        let p = StiefelPoint::random(sig, mix(2, k as u64));
        let grad = riemannian_gradient(&f, &p).unwrap();
        let t = TangentVector::random(&p, mix(3, k as u64));
        let slope = metric(&grad, &t).unwrap();
        let g = Geodesic::from_tangent(&t);
        let h = 1e-5;
        let fd = (f.value(&g.point_at(h)) - f.value(&g.point_at(-h))) / (2.0 * h);
        (slope - fd).abs() / (1.0 + slope.abs())
    }));

    // Hessian diagonal versus second differences along geodesics.
    checks.push(run_check("hessian-diagonal-vs-second-fd", 1e-4, |k| {
        let sigs = small_sigs();
        let sig = &sigs[k % sigs.len()];
        let m = gaussian_symmetric(sig.ambient(), mix(4, k as u64));
        let family = if k % 2 == 0 {
            ProblemFamily::Principal
        } else {
            ProblemFamily::Eigenflag
        };
        let f = SymmetricMatrixProblem::new(m, sig.clone(), family)
            .unwrap()
            .objective();
        let p = StiefelPoint::random(sig, mix(5, k as u64));
        let u = TangentVector::random(&p, mix(6, k as u64));
        let hess = hessian_form(&f, &p, &u, &u).unwrap();
        let h = 1e-4;
        let g = Geodesic::from_tangent(&u);
        let fd = (f.value(&g.point_at(h)) - 2.0 * f.value(&p) + f.value(&g.point_at(-h))) / (h * h);
        (hess - fd).abs() / (1.0 + hess.abs())
    }));

    // Parallel transport preserves the metric.
    checks.push(run_check("transport-isometry", 1e-9, |k| {
        let sigs = deep_sigs();
        let sig = &sigs[k % sigs.len()];
        let p = StiefelPoint::random(sig, mix(7, k as u64));
        let g = Geodesic::new(p.clone(), SkewGenerator::random(sig, mix(8, k as u64))).unwrap();
        let u = TangentVector::random(&p, mix(9, k as u64));
        let v = TangentVector::random(&p, mix(10, k as u64));
        let t = 0.25 + (k as f64) * 0.02;
        let before = metric(&u, &v).unwrap();
        let after = metric(&g.transport(&u, t).unwrap(), &g.transport(&v, t).unwrap()).unwrap();
        (before - after).abs() / (1.0 + before.abs())
    }));

    // Geodesic points stay orthonormal out to t = 10.
    checks.push(run_check("geodesic-orthonormality", 1e-12, |k| {
        let sigs = deep_sigs();
        let sig = &sigs[k % sigs.len()];
        let p = StiefelPoint::random(sig, mix(11, k as u64));
        let b = SkewGenerator::random(sig, mix(12, k as u64));
        let b = b.scale(1.0 / b.matrix().norm());
        let g = Geodesic::new(p, b).unwrap();
        let mut worst = 0.0f64;
        for &t in &[0.1, 1.0, 10.0] {
            let y = g.point_at(t);
            let gram = y.matrix().transpose() * y.matrix();
            let id = flag_manifold::nalgebra::DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
            worst = worst.max((gram - id).norm());
        }
        worst
    }));

    // Stiefel -> projection -> Stiefel and Stiefel -> reduced -> Stiefel
    // preserve the flag.
    checks.push(run_check("coordinate-round-trips", 1e-10, |k| {
        let sigs = deep_sigs();
        let sig = &sigs[k % sigs.len()];
        let p = StiefelPoint::random(sig, mix(13, k as u64));
        let via_proj = p.to_projection().to_stiefel();
        let via_red = p.to_reduced().to_stiefel();
        let mut worst = 0.0f64;
        for i in 1..=sig.depth() {
            worst = worst.max(p.projector_distance_at(&via_proj, i).unwrap());
            worst = worst.max(p.projector_distance_at(&via_red, i).unwrap());
        }
        worst
    }));

    // Projectors are invariant under isotropy rotations of the
    // representative.
    checks.push(run_check("isotropy-invariance-of-projectors", 1e-12, |k| {
        let sigs = deep_sigs();
        let sig = &sigs[k % sigs.len()];
        let p = StiefelPoint::random(sig, mix(14, k as u64));
        let rot = isotropy_factor(sig, mix(15, k as u64));
        let q = StiefelPoint::new(sig.clone(), p.matrix() * rot).unwrap();
        let mut worst = 0.0f64;
        for i in 1..=sig.depth() {
            worst = worst.max(p.projector_distance_at(&q, i).unwrap());
        }
        worst
    }));

    // Lift and push are mutually inverse.
    checks.push(run_check("lift-push-round-trip", 1e-12, |k| {
        let sigs = deep_sigs();
        let sig = &sigs[k % sigs.len()];
        let p = StiefelPoint::random(sig, mix(16, k as u64));
        let b = SkewGenerator::random(sig, mix(17, k as u64));
        let v = TangentVector::push(&p, &b).unwrap();
        let rebuilt = TangentVector::new(p.clone(), v.delta().clone()).unwrap();
        let back = (rebuilt.generator().matrix() - b.matrix()).norm() / (1.0 + b.matrix().norm());
        let fwd = (TangentVector::push(&p, rebuilt.generator())
            .unwrap()
            .delta()
            - v.delta())
        .norm()
            / (1.0 + v.delta().norm());
        back.max(fwd)
    }));

    // The two metric expressions agree.
    checks.push(run_check("metric-two-forms-agree", 1e-12, |k| {
        let sigs = deep_sigs();
        let sig = &sigs[k % sigs.len()];
        let p = StiefelPoint::random(sig, mix(18, k as u64));
        let u = TangentVector::random(&p, mix(19, k as u64));
        let v = TangentVector::random(&p, mix(20, k as u64));
        let direct = metric(&u, &v).unwrap();
        let lifted = u.generator().inner(v.generator());
        (direct - lifted).abs() / (1.0 + direct.abs())
    }));

    // The metric does not depend on the representative.
    checks.push(run_check(
        "metric-representative-independence",
        1e-10,
        |k| {
            let sigs = deep_sigs();
            let sig = &sigs[k % sigs.len()];
            let p = StiefelPoint::random(sig, mix(21, k as u64));
            let rot = isotropy_factor(sig, mix(22, k as u64));
            let q = StiefelPoint::new(sig.clone(), p.matrix() * &rot).unwrap();
            let u = TangentVector::random(&p, mix(23, k as u64));
            let v = TangentVector::random(&p, mix(24, k as u64));
            let u2 = TangentVector::new(q.clone(), u.delta() * &rot).unwrap();
            let v2 = TangentVector::new(q, v.delta() * &rot).unwrap();
            let a = metric(&u, &v).unwrap();
            let b = metric(&u2, &v2).unwrap();
            (a - b).abs() / (1.0 + a.abs())
        },
    ));

    // Conjugation by block-diagonal orthogonal matrices preserves the
    // zero-block pattern of generators.
    checks.push(run_check("ad-invariance-of-m", 1e-12, |k| {
        let sigs = deep_sigs();
        let sig = &sigs[k % sigs.len()];
        let b = SkewGenerator::random(sig, mix(25, k as u64));
        let b = b.scale(1.0 / b.matrix().norm());
        let a = isotropy_factor_full(sig, mix(26, k as u64));
        let conj = &a * b.matrix() * a.transpose();
        let mut worst = 0.0f64;
        for i in 1..=sig.depth() + 1 {
            let r = sig.block_range(i);
            worst = worst.max(conj.view((r.start, r.start), (r.len(), r.len())).norm());
        }
        worst
    }));

    // Pade and spectral exponentials agree along geodesics.
    checks.push(run_check("exp-vs-spectral-geodesics", 1e-10, |k| {
        let sigs = deep_sigs();
        let sig = &sigs[k % sigs.len()];
        let b = SkewGenerator::random(sig, mix(27, k as u64));
        let s = SpectralForm::compute(&b);
        let mut worst = (s.reconstruct() - b.matrix()).norm();
        for &t in &[0.3, 1.0, 10.0] {
            worst = worst.max((s.exp_at(t) - exp_skew(&b, t)).norm());
        }
        worst
    }));

    // Arclength closed form equals the blockwise sum.
    checks.push(run_check("arclength-blockwise-identity", 1e-12, |k| {
        let sigs = deep_sigs();
        let sig = &sigs[k % sigs.len()];
        let p = StiefelPoint::random(sig, mix(28, k as u64));
        let b = SkewGenerator::random(sig, mix(29, k as u64));
        let g = Geodesic::new(p, b.clone()).unwrap();
        let mut blockwise = 0.0;
        for i in 1..=sig.depth() + 1 {
            for j in (i + 1)..=sig.depth() + 1 {
                blockwise += b.block(i, j).norm_squared();
            }
        }
        let t = 1.3;
        let arc = g.arclength(t).unwrap();
        (arc - t * blockwise.sqrt()).abs() / (1.0 + arc)
    }));

    // The bracket map vanishes identically on Grassmannians (exactly).
    checks.push(run_check("grassmannian-bracket-vanishes", 0.0, |k| {
        let sigs = grassmann_sigs();
        let sig = &sigs[k % sigs.len()];
        let b = SkewGenerator::random(sig, mix(30, k as u64));
        let x = SkewGenerator::random(sig, mix(31, k as u64));
        bracket_m(&b, &x).unwrap().matrix().norm()
    }));

    // On Grassmannians, transport reduces to the frame rotation
    // Q exp(tB) X.
    checks.push(run_check(
        "grassmannian-transport-closed-form",
        1e-12,
        |k| {
            let sigs = grassmann_sigs();
            let sig = &sigs[k % sigs.len()];
            let p = StiefelPoint::random(sig, mix(32, k as u64));
            let g =
                Geodesic::new(p.clone(), SkewGenerator::random(sig, mix(33, k as u64))).unwrap();
            let v = TangentVector::random(&p, mix(34, k as u64));
            let t = 0.7;
            let moved = g.transport(&v, t).unwrap();
            let closed = g.frame_at(t) * v.generator().matrix().columns(0, sig.nd());
            (moved.delta() - &closed).norm() / (1.0 + closed.norm())
        },
    ));

    // On Grassmannians, the gradient reduces to f_Y - Y Y^T f_Y.
    checks.push(run_check("grassmannian-gradient-closed-form", 1e-12, |k| {
        let sigs = grassmann_sigs();
        let sig = &sigs[k % sigs.len()];
        let m = gaussian_symmetric(sig.ambient(), mix(35, k as u64));
        let f = principal_flag_objective(m, sig.clone()).unwrap();
        let p = StiefelPoint::random(sig, mix(36, k as u64));
        let grad = riemannian_gradient(&f, &p).unwrap();
        let fy = f.euclidean_gradient(&p).unwrap();
        let closed = &fy - p.matrix() * (p.matrix().transpose() * &fy);
        (grad.delta() - &closed).norm() / (1.0 + closed.norm())
    }));

    // Representative-level distance equals the principal-angle distance on
    // Grassmannians for geodesic-generated pairs.
    checks.push(run_check(
        "grassmannian-distance-principal-angles",
        1e-8,
        |k| {
            let sigs = grassmann_sigs();
            let sig = &sigs[k % sigs.len()];
            let p = StiefelPoint::random(sig, mix(37, k as u64));
            let b = SkewGenerator::random(sig, mix(38, k as u64));
            let b = b.scale(1.0 / (b.matrix().norm() * 1.2));
            let g = Geodesic::new(p.clone(), b).unwrap();
            let t = 1.0;
            let q = g.point_at(t);
            let d = distance(
                &p.complete_basis(),
                &flag_manifold::OrthogonalPoint::new(sig.clone(), g.frame_at(t)).unwrap(),
            )
            .unwrap();
            let svd = (p.matrix().transpose() * q.matrix()).svd(false, false);
            let angles_sq: f64 = svd
                .singular_values
                .iter()
                .map(|&s| s.clamp(-1.0, 1.0).acos().powi(2))
                .sum();
            (d - angles_sq.sqrt()).abs()
        },
    ));

    // Geodesics preserve projector invariants, and transported projector
    // velocities stay consistent across coordinate systems.
    checks.push(run_check("projection-coordinate-consistency", 1e-9, |k| {
        let sigs = small_sigs();
        let sig = &sigs[k % sigs.len()];
        let p = StiefelPoint::random(sig, mix(39, k as u64));
        let v = TangentVector::random(&p, mix(40, k as u64));
        let pp = p.to_projection();
        let z = v.projection_velocity();
        let t = 0.4;
        let w = flag_manifold::tangent::velocity_to_tangent(&pp, &z).unwrap();
        let g = Geodesic::from_tangent(&w);
        let via_tuple = flag_manifold::geodesic::transport_projection_coords(&pp, &z, t).unwrap();
        let reference = g.transport(&w, t).unwrap().projection_velocity();
        let mut worst = 0.0f64;
        for (a, b) in via_tuple.iter().zip(&reference) {
            worst = worst.max((a - b).norm());
        }
        // Moved point still satisfies the projector axioms.
        let moved = g.point_at(t).to_projection();
        for i in 1..=sig.depth() {
            let pi = moved.projector(i);
            worst = worst.max((pi * pi - pi).norm());
            worst = worst.max((pi.trace() - sig.cut(i) as f64).abs());
        }
        worst
    }));

    PropertyReport { checks }
}

fn run_check(
    name: &'static str,
    tolerance: f64,
    mut instance: impl FnMut(usize) -> f64,
) -> PropertyCheck {
    let mut max_residual = 0.0f64;
    for k in 0..SAMPLES {
        max_residual = max_residual.max(instance(k));
    }
    PropertyCheck {
        name,
        samples: SAMPLES,
        max_residual,
        tolerance,
    }
}
