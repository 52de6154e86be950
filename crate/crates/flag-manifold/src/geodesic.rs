//! Geodesics, arclength, geodesic distance, and parallel transport.
//!
//! With the canonical metric, every geodesic through a representative `Y`
//! is `t -> [Y, Y^perp] exp(tB) I_{n,n_d}` for a generator `B` in `m`. Two
//! realizations of the exponential are kept side by side: a
//! scaling-and-squaring Pade approximation ([`exp_skew`]), used for the
//! iterates themselves, and a spectral factorization into planar rotations
//! ([`SpectralForm`]), which makes repeated evaluation along one geodesic
//! cheap and feeds the geodesic distance.
//!
//! Parallel transport composes the frame motion `exp(tB)` with the
//! operator `e^{-phi_tB}` on `m`, where `phi_B(X) = 1/2 [B, X]_m` is the
//! half-bracket followed by projection back onto `m` ([`bracket_m`]). The
//! operator is skew-adjoint for the canonical inner product, so transport
//! is an isometry.

use nalgebra::DMatrix;

use crate::error::{FlagError, Result};
use crate::point::{OrthogonalPoint, ProjectionPoint, StiefelPoint};
use crate::signature::FlagSignature;
use crate::tangent::{velocity_to_tangent, SkewGenerator, TangentVector};

/// Series terms allowed when applying `e^{-phi_tB}` before reporting
/// failure.
pub const TRANSPORT_SERIES_CAP: usize = 40;

/// Relative truncation threshold of the transport series.
pub const TRANSPORT_SERIES_TOL: f64 = 1e-15;

/// `|tB|_F` above which transport is split into equal substeps.
const TRANSPORT_SUBSTEP_THRESHOLD: f64 = 10.0;

/// Target `|tB|_F` per transport substep.
const TRANSPORT_SUBSTEP_SIZE: f64 = 5.0;

// Pade coefficients of the diagonal [m/m] approximants to exp, and the
// 1-norm thresholds below which each order meets double-precision backward
// error (Higham, SIAM J. Matrix Anal. Appl. 26(4), 2005).
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
#[allow(clippy::excessive_precision)]
const THETA3: f64 = 1.495585217958292e-2;
#[allow(clippy::excessive_precision)]
const THETA5: f64 = 2.539398330063230e-1;
#[allow(clippy::excessive_precision)]
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &DMatrix<f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|x| x.abs()).sum();
        best = best.max(s);
    }
    best
}

/// Matrix exponential by scaling and squaring with diagonal Pade
/// approximants.
pub(crate) fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    let norm = one_norm(a);
    if norm <= THETA9 {
        let coeffs: &[f64] = if norm <= THETA3 {
            &PADE3
        } else if norm <= THETA5 {
            &PADE5
        } else if norm <= THETA7 {
            &PADE7
        } else {
            &PADE9
        };
        return pade_low(a, coeffs);
    }
    let s = ((norm / THETA13).log2().ceil()).max(0.0) as u32;
    let scaled = a / 2f64.powi(s as i32);
    let mut e = pade13(&scaled);
    for _ in 0..s {
        e = &e * &e;
    }
    e
}

/// Evaluates a [m/m] Pade approximant for m in {3, 5, 7, 9} given the
/// coefficient table `b`: `U = A (b_m A^{m-1} + ... + b_1 I)`,
/// `V = b_{m-1} A^{m-1} + ... + b_0 I`, solve `(V - U) X = V + U`.
fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    let a2 = a * a;
    let mut even = DMatrix::<f64>::identity(n, n) * b[0];
    let mut odd = DMatrix::<f64>::identity(n, n) * b[1];
    let mut pow = DMatrix::<f64>::identity(n, n);
    let mut k = 2;
    while k < b.len() {
        pow = &pow * &a2;
        even += &pow * b[k];
        if k + 1 < b.len() {
            odd += &pow * b[k + 1];
        }
        k += 2;
    }
    let u = a * odd;
    solve_pade(&even, &u)
}

fn pade13(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let b = &PADE13;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    solve_pade(&v, &u)
}

fn solve_pade(v: &DMatrix<f64>, u: &DMatrix<f64>) -> DMatrix<f64> {
    let lhs = v - u;
    let rhs = v + u;
    lhs.lu().solve(&rhs).expect("Pade denominator is singular")
}

/// `exp(tB)` for a generator `B` in `m`; orthogonal to machine precision,
/// exactly the identity at `t = 0`.
pub fn exp_skew(b: &SkewGenerator, t: f64) -> DMatrix<f64> {
    expm(&(b.matrix() * t))
}

/// Planar-rotation factorization of a skew generator: `B = V D V^T` with
/// `V` orthogonal and `D` block-diagonal with `r` blocks
/// `[[0, -lambda_k], [lambda_k, 0]]` (descending rates) followed by zeros,
/// `2r = rank(B)`.
///
/// The factorization turns the geodesic into `r` independent plane
/// rotations: `exp(tB) = V Sigma(t) V^T` where `Sigma(t)` rotates each
/// plane by `t lambda_k`.
#[derive(Debug, Clone)]
pub struct SpectralForm {
    v: DMatrix<f64>,
    lambdas: Vec<f64>,
}

impl SpectralForm {
    /// Computes the factorization from the spectral decomposition of the
    /// symmetric matrix `B^T B`, whose eigenvalues are the squared rotation
    /// rates in pairs. Eigenvectors of one rate cluster are paired into
    /// invariant planes `(u, Bu / |Bu|)`.
    pub fn compute(b: &SkewGenerator) -> Self {
        Self::of_skew_matrix(b.matrix())
    }

    pub(crate) fn of_skew_matrix(bm: &DMatrix<f64>) -> Self {
        let n = bm.nrows();
        let k = bm.transpose() * bm;
        let (vals, vecs) = crate::linalg::sym_eigen_desc(&k);
        let lambda_max = vals.first().copied().unwrap_or(0.0).max(0.0).sqrt();
        let rate_floor = lambda_max * 1e-11;

        type Col = nalgebra::DVector<f64>;
        let mut paired: Vec<(Col, Col, f64)> = Vec::new();
        let mut kernel: Vec<Col> = Vec::new();

        // Walk the eigenvectors of B^T B in descending eigenvalue order.
        // Each vector is first orthogonalized against everything already
        // extracted: partners `v = Bu / |Bu|` of earlier pairs consume one
        // later eigen direction each, and near-kernel eigenvectors bleed
        // into close-by small-rate planes, so global deflation is what
        // keeps the count consistent.
        let orthogonalize = |c: &mut Col, paired: &[(Col, Col, f64)], kernel: &[Col]| {
            for (u, v, _) in paired {
                *c -= u * u.dot(c);
                *c -= v * v.dot(c);
            }
            for u in kernel {
                *c -= u * u.dot(c);
            }
        };
        for j in 0..n {
            if 2 * paired.len() + kernel.len() >= n {
                break;
            }
            let mut c: Col = vecs.column(j).into_owned();
            orthogonalize(&mut c, &paired, &kernel);
            let norm = c.norm();
            if norm < 0.5 {
                // Covered by an earlier plane.
                continue;
            }
            let u = c / norm;
            let w = bm * &u;
            let rate = w.norm();
            if rate <= rate_floor {
                kernel.push(u);
                continue;
            }
            let mut v = w / rate;
            orthogonalize(&mut v, &paired, &kernel);
            v -= &u * u.dot(&v);
            let vnorm = v.norm();
            if vnorm < 0.5 {
                // B maps u into already-extracted planes: numerically this
                // direction carries no independent rotation.
                kernel.push(u);
                continue;
            }
            paired.push((u, v / vnorm, rate));
        }

        paired.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
        let mut v = DMatrix::zeros(n, n);
        let mut lambdas = Vec::with_capacity(paired.len());
        for (idx, (u, w, rate)) in paired.iter().enumerate() {
            v.set_column(2 * idx, u);
            v.set_column(2 * idx + 1, w);
            lambdas.push(*rate);
        }
        for (idx, u) in kernel.iter().enumerate() {
            v.set_column(2 * paired.len() + idx, u);
        }
        // Complete any shortfall (skipped directions beyond the paired and
        // kernel columns) with the orthogonal complement of what we have.
        let have = 2 * paired.len() + kernel.len();
        if have < n {
            let partial = v.columns(0, have).into_owned();
            let rest = crate::linalg::orthonormal_complement(&partial);
            v.view_mut((0, have), (n, n - have)).copy_from(&rest);
        }
        Self { v, lambdas }
    }

    /// The orthogonal factor `V`.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Positive rotation rates, descending.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Number of rotation planes; `rank(B) = 2r`.
    pub fn r(&self) -> usize {
        self.lambdas.len()
    }

    /// Largest rotation rate (zero for the zero generator).
    pub fn max_rate(&self) -> f64 {
        self.lambdas.first().copied().unwrap_or(0.0)
    }

    /// The block-diagonal generator `D` with `V D V^T = B`.
    pub fn d_matrix(&self) -> DMatrix<f64> {
        let n = self.v.nrows();
        let mut d = DMatrix::zeros(n, n);
        for (k, &l) in self.lambdas.iter().enumerate() {
            d[(2 * k, 2 * k + 1)] = -l;
            d[(2 * k + 1, 2 * k)] = l;
        }
        d
    }

    /// `V D V^T`, which must reproduce `B`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.v * self.d_matrix() * self.v.transpose()
    }

    /// `Sigma(t) M`: rotates the row pairs of `M` by the plane angles
    /// `t lambda_k`, leaving trailing rows fixed.
    fn rotate_rows(&self, t: f64, m: &mut DMatrix<f64>) {
        for (k, &l) in self.lambdas.iter().enumerate() {
            let (c, s) = ((t * l).cos(), (t * l).sin());
            for j in 0..m.ncols() {
                let top = m[(2 * k, j)];
                let bot = m[(2 * k + 1, j)];
                m[(2 * k, j)] = c * top - s * bot;
                m[(2 * k + 1, j)] = s * top + c * bot;
            }
        }
    }

    /// `exp(tB) = V Sigma(t) V^T` assembled from the factors.
    pub fn exp_at(&self, t: f64) -> DMatrix<f64> {
        let mut vt = self.v.transpose();
        self.rotate_rows(t, &mut vt);
        &self.v * vt
    }
}

/// A geodesic `t -> [Y, Y^perp] exp(tB) I_{n,n_d}` with its frame cached.
#[derive(Debug, Clone)]
pub struct Geodesic {
    base: StiefelPoint,
    gen: SkewGenerator,
    frame: DMatrix<f64>,
}

impl Geodesic {
    pub fn new(base: StiefelPoint, gen: SkewGenerator) -> Result<Self> {
        if base.signature() != gen.signature() {
            return Err(FlagError::SignatureMismatch);
        }
        let frame = base.frame();
        Ok(Self { base, gen, frame })
    }

    /// The geodesic with initial velocity `v`.
    pub fn from_tangent(v: &TangentVector) -> Self {
        Self::new(v.base().clone(), v.generator().clone()).expect("tangent carries its base")
    }

    pub fn base(&self) -> &StiefelPoint {
        &self.base
    }

    pub fn generator(&self) -> &SkewGenerator {
        &self.gen
    }

    /// The full orthogonal frame `[Y, Y^perp] exp(tB)` at parameter `t`.
    pub fn frame_at(&self, t: f64) -> DMatrix<f64> {
        if t == 0.0 {
            return self.frame.clone();
        }
        &self.frame * exp_skew(&self.gen, t)
    }

    /// The point reached at parameter `t`; `t = 0` returns the base exactly.
    pub fn point_at(&self, t: f64) -> StiefelPoint {
        if t == 0.0 {
            return self.base.clone();
        }
        point_from_frame(self.base.signature(), self.frame_at(t))
    }

    /// The initial velocity `[Y, Y^perp] B I_{n,n_d}`.
    pub fn initial_velocity(&self) -> TangentVector {
        TangentVector::push(&self.base, &self.gen).expect("signatures agree")
    }

    /// Arclength up to parameter `t >= 0`: `t |B|_F / sqrt(2)`, equal to
    /// `t sqrt(sum of tr(B_ij^T B_ij))`.
    pub fn arclength(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(FlagError::NegativeParameter(t));
        }
        Ok(t * self.gen.matrix().norm() / 2f64.sqrt())
    }

    /// Precomputed spectral evaluator for repeated point queries along this
    /// geodesic (line searches evaluate dozens of parameters).
    pub fn path(&self) -> GeodesicPath {
        let spectral = SpectralForm::compute(&self.gen);
        let nd = self.base.signature().nd();
        let a = &self.frame * spectral.v();
        let w = spectral.v().rows(0, nd).transpose();
        GeodesicPath {
            sig: self.base.signature().clone(),
            a,
            w,
            spectral,
        }
    }

    /// Parallel transport of `v` (based at this geodesic's base point) to
    /// parameter `t`:
    /// `X(t) = [Y, Y^perp] exp(tB) e^{-phi_tB}(X) I_{n,n_d}`.
    ///
    /// The exponential series over `m` is truncated adaptively; steps with
    /// `|tB|_F` beyond a threshold are split into equal substeps, which is
    /// exact because the series operators at different parameters commute.
    pub fn transport(&self, v: &TangentVector, t: f64) -> Result<TangentVector> {
        if v.base().signature() != self.base.signature() {
            return Err(FlagError::SignatureMismatch);
        }
        let scale = 1.0 + self.base.matrix().norm();
        if (v.base().matrix() - self.base.matrix()).norm() > 1e-12 * scale {
            return Err(FlagError::BaseMismatch);
        }
        let sig = self.base.signature();
        let total = (self.gen.matrix() * t).norm();
        let steps = if total > TRANSPORT_SUBSTEP_THRESHOLD {
            (total / TRANSPORT_SUBSTEP_SIZE).ceil() as usize
        } else {
            1
        };
        let tau = t / steps as f64;
        let tb = self.gen.matrix() * tau;
        let mut s = v.generator().matrix().clone();
        for _ in 0..steps {
            s = exp_phi_apply(sig, &tb, &s)?;
        }
        let frame_t = self.frame_at(t);
        let delta = &frame_t * s.columns(0, sig.nd());
        Ok(TangentVector::new_unchecked(
            point_from_frame(sig, frame_t),
            delta,
        ))
    }
}

fn point_from_frame(sig: &FlagSignature, frame: DMatrix<f64>) -> StiefelPoint {
    let n = sig.ambient();
    let k = sig.nd();
    StiefelPoint::with_known_completion(
        sig.clone(),
        frame.columns(0, k).into_owned(),
        frame.columns(k, n - k).into_owned(),
    )
}

/// Applies `e^{-phi_tb}` to a matrix in `m` by the alternating series
/// `T_0 = X`, `T_{k+1} = -phi_tb(T_k) / (k + 1)`, truncated when the term
/// norm falls below [`TRANSPORT_SERIES_TOL`] relative to the accumulated
/// sum.
fn exp_phi_apply(sig: &FlagSignature, tb: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut acc = x.clone();
    let mut term = x.clone();
    for k in 1..=TRANSPORT_SERIES_CAP {
        term = half_bracket_m(sig, tb, &term) * (-1.0 / k as f64);
        acc += &term;
        if term.norm() <= TRANSPORT_SERIES_TOL * acc.norm() {
            return Ok(acc);
        }
    }
    Err(FlagError::TransportSeriesDiverged {
        max_terms: TRANSPORT_SERIES_CAP,
        norm: tb.norm(),
    })
}

/// `1/2 [B, X]` projected onto `m` (raw matrix form).
fn half_bracket_m(sig: &FlagSignature, b: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = (b * x - x * b) * 0.5;
    crate::tangent::zero_diagonal_blocks(sig, &mut m);
    m
}

/// The bracket map `phi_B(X) = 1/2 [B, X]_m`, the infinitesimal generator
/// of parallel transport. Identically zero on Grassmannians (`d = 1`).
pub fn bracket_m(b: &SkewGenerator, x: &SkewGenerator) -> Result<SkewGenerator> {
    if b.signature() != x.signature() {
        return Err(FlagError::SignatureMismatch);
    }
    let m = half_bracket_m(b.signature(), b.matrix(), x.matrix());
    SkewGenerator::project(b.signature(), &m)
}

/// Geodesic distance between two flags in orthogonal coordinates, for the
/// given representatives: the principal logarithm of `P^T Q` has rotation
/// angles `lambda_1, ..., lambda_r` in `(0, pi)`, and the distance is
/// `sqrt(sum of lambda_k^2)`.
///
/// The angles are read off the eigenvalues `cos(lambda)` (each twice) of
/// the symmetric part of `P^T Q`. An eigenvalue at `-1` makes the
/// logarithm's rotation plane ambiguous and is reported as degenerate.
pub fn distance(a: &OrthogonalPoint, b: &OrthogonalPoint) -> Result<f64> {
    if a.signature() != b.signature() {
        return Err(FlagError::SignatureMismatch);
    }
    let t = a.matrix().transpose() * b.matrix();
    let sym = (&t + t.transpose()) * 0.5;
    let (vals, _) = crate::linalg::sym_eigen_desc(&sym);
    let mut sum_sq = 0.0;
    for &c in &vals {
        if c <= -1.0 + 1e-13 {
            return Err(FlagError::DegenerateRotation);
        }
        let angle = c.clamp(-1.0, 1.0).acos();
        sum_sq += angle * angle;
    }
    Ok((0.5 * sum_sq).sqrt())
}

/// Geodesic in projection coordinates: `P_i(t) = Y_i(t) Y_i(t)^T` with
/// `Y_i(t) = [Y, Y^perp] exp(tB) I_{n,n_i}`, for the geodesic through `p`
/// with velocity tuple `z`.
pub fn geodesic_projection_coords(
    p: &ProjectionPoint,
    z: &[DMatrix<f64>],
    t: f64,
) -> Result<ProjectionPoint> {
    let v = velocity_to_tangent(p, z)?;
    let g = Geodesic::from_tangent(&v);
    Ok(g.point_at(t).to_projection())
}

/// Parallel transport of the velocity tuple `z` along its own geodesic in
/// projection coordinates:
/// `Z_i(t) = Y_i(t) X_i(t)^T + X_i(t) Y_i(t)^T`.
pub fn transport_projection_coords(
    p: &ProjectionPoint,
    z: &[DMatrix<f64>],
    t: f64,
) -> Result<Vec<DMatrix<f64>>> {
    let v = velocity_to_tangent(p, z)?;
    let g = Geodesic::from_tangent(&v);
    Ok(g.transport(&v, t)?.projection_velocity())
}

/// Cheap repeated evaluation along one geodesic via the spectral form:
/// `Y(t) = (Q V) Sigma(t) (V^T I_{n,n_d})`, one plane rotation per rate.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    sig: FlagSignature,
    a: DMatrix<f64>,
    w: DMatrix<f64>,
    spectral: SpectralForm,
}

impl GeodesicPath {
    /// The representative matrix at parameter `t`.
    pub fn point_matrix_at(&self, t: f64) -> DMatrix<f64> {
        let mut w = self.w.clone();
        self.spectral.rotate_rows(t, &mut w);
        &self.a * w
    }

    pub fn point_at(&self, t: f64) -> StiefelPoint {
        StiefelPoint::new_unchecked(self.sig.clone(), self.point_matrix_at(t))
    }

    /// Largest rotation rate of the generator; the geodesic's fastest
    /// component has (quasi-)period `2 pi / rate`.
    pub fn max_rate(&self) -> f64 {
        self.spectral.max_rate()
    }
}
