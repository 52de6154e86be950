//! Tangent vectors, the canonical metric, and tangent-space projections.
//!
//! Every tangent space of `Flag(n_1, ..., n_d; n)` is modeled on the space
//! `m` of skew-symmetric `n x n` matrices whose diagonal blocks (in the
//! `(b_1, ..., b_{d+1})` partition) vanish. A tangent vector at a Stiefel
//! representative `Y` is carried as the ambient `n x n_d` matrix
//! `X = [Y, Y^perp] B I_{n,n_d}` for a unique generator `B` in `m`; the
//! ambient form is the cheap one for gradient work and the generator is
//! materialized on demand.
//!
//! Writing `S = Y^T X` in blocks, tangency is equivalent to `S_ii = 0` and
//! `S_ij = -S_ji^T`; the canonical metric is
//! `g(X, W) = 1/2 tr(B^T C) = sum over i < j of tr(B_ij^T C_ij)`.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FlagError, Result};
use crate::linalg;
use crate::point::{ProjectionPoint, ReducedProjectionPoint, StiefelPoint};
use crate::signature::FlagSignature;

/// Relative tolerance of the tangency check, scaled by `1 + |X|_F`.
pub const TANGENCY_TOL: f64 = 1e-10;

/// Tolerance of the projection-coordinate velocity checks.
pub const VELOCITY_TOL: f64 = 1e-8;

/// An element of `m`: a skew-symmetric matrix with vanishing diagonal
/// blocks. Skew-symmetry and the block-zero pattern hold exactly by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewGenerator {
    sig: FlagSignature,
    b: DMatrix<f64>,
}

impl SkewGenerator {
    /// Projects an arbitrary square matrix onto `m`: antisymmetrize, then
    /// zero the diagonal blocks.
    pub fn project(sig: &FlagSignature, m: &DMatrix<f64>) -> Result<Self> {
        let n = sig.ambient();
        if m.nrows() != n || m.ncols() != n {
            return Err(FlagError::ShapeMismatch {
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] - m[(j, i)]);
                b[(i, j)] = v;
                b[(j, i)] = -v;
            }
        }
        zero_diagonal_blocks(sig, &mut b);
        Ok(Self {
            sig: sig.clone(),
            b,
        })
    }

    pub fn zero(sig: &FlagSignature) -> Self {
        Self {
            sig: sig.clone(),
            b: DMatrix::zeros(sig.ambient(), sig.ambient()),
        }
    }

    /// A generator with independent standard normal entries in the strictly
    /// upper block triangle.
    pub fn random(sig: &FlagSignature, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = linalg::gaussian_matrix(sig.ambient(), sig.ambient(), &mut rng);
        let mut b = DMatrix::zeros(sig.ambient(), sig.ambient());
        for bi in 1..=sig.depth() + 1 {
            for bj in (bi + 1)..=sig.depth() + 1 {
                let ri = sig.block_range(bi);
                let rj = sig.block_range(bj);
                for i in ri.clone() {
                    for j in rj.clone() {
                        b[(i, j)] = g[(i, j)];
                        b[(j, i)] = -g[(i, j)];
                    }
                }
            }
        }
        Self {
            sig: sig.clone(),
            b,
        }
    }

    /// The orthonormal basis of `m` with respect to the canonical inner
    /// product `1/2 tr(B^T C)`: one generator per free entry, enumerated by
    /// block pair `(i, j)`, `i < j`, then row-major within the block.
    pub fn basis(sig: &FlagSignature) -> Vec<Self> {
        let mut out = Vec::with_capacity(sig.dimension());
        for bi in 1..=sig.depth() + 1 {
            for bj in (bi + 1)..=sig.depth() + 1 {
                for i in sig.block_range(bi) {
                    for j in sig.block_range(bj) {
                        let mut b = DMatrix::zeros(sig.ambient(), sig.ambient());
                        b[(i, j)] = 1.0;
                        b[(j, i)] = -1.0;
                        out.push(Self {
                            sig: sig.clone(),
                            b,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn signature(&self) -> &FlagSignature {
        &self.sig
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Block `B_ij` for `1 <= i < j <= d + 1`.
    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let ri = self.sig.block_range(i);
        let rj = self.sig.block_range(j);
        self.b
            .view((ri.start, rj.start), (ri.len(), rj.len()))
            .into_owned()
    }

    /// Canonical inner product `1/2 tr(B^T C)`, equal to the sum of
    /// blockwise traces over `i < j`.
    pub fn inner(&self, other: &Self) -> f64 {
        0.5 * linalg::fro_inner(&self.b, &other.b)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            sig: self.sig.clone(),
            b: &self.b * s,
        }
    }

    pub(crate) fn from_m_matrix(sig: FlagSignature, b: DMatrix<f64>) -> Self {
        Self { sig, b }
    }
}

pub(crate) fn zero_diagonal_blocks(sig: &FlagSignature, m: &mut DMatrix<f64>) {
    for bi in 1..=sig.depth() + 1 {
        let r = sig.block_range(bi);
        for i in r.clone() {
            for j in r.clone() {
                m[(i, j)] = 0.0;
            }
        }
    }
}

/// Zeroes the `d` diagonal blocks of an `n_d x n_d` matrix (the inner block
/// square of the partition, excluding the complement block).
fn zero_inner_diagonal_blocks(sig: &FlagSignature, m: &mut DMatrix<f64>) {
    for bi in 1..=sig.depth() {
        let r = sig.block_range(bi);
        for i in r.clone() {
            for j in r.clone() {
                m[(i, j)] = 0.0;
            }
        }
    }
}

/// Residual of the tangency equations `S_ii = 0`, `S_ij + S_ji^T = 0` for
/// `S = Y^T X`.
pub fn tangency_residual(base: &StiefelPoint, ambient: &DMatrix<f64>) -> f64 {
    let sig = base.signature();
    let s = base.matrix().transpose() * ambient;
    let mut acc = 0.0;
    for i in 1..=sig.depth() {
        let ri = sig.block_range(i);
        let sii = s.view((ri.start, ri.start), (ri.len(), ri.len()));
        acc += sii.norm_squared();
        for j in (i + 1)..=sig.depth() {
            let rj = sig.block_range(j);
            let sij = s.view((ri.start, rj.start), (ri.len(), rj.len()));
            let sji = s.view((rj.start, ri.start), (rj.len(), ri.len()));
            acc += (sij + sji.transpose()).norm_squared();
        }
    }
    acc.sqrt()
}

/// A tangent vector: an ambient `n x n_d` matrix attached to a base
/// representative, with a lazily cached lift to its skew generator.
#[derive(Debug, Clone)]
pub struct TangentVector {
    base: StiefelPoint,
    delta: DMatrix<f64>,
    generator: OnceLock<SkewGenerator>,
}

impl TangentVector {
    /// Wraps an ambient matrix after verifying the tangency equations to
    /// [`TANGENCY_TOL`] scaled by `1 + |X|_F`.
    pub fn new(base: StiefelPoint, delta: DMatrix<f64>) -> Result<Self> {
        let sig = base.signature();
        if delta.nrows() != sig.ambient() || delta.ncols() != sig.nd() {
            return Err(FlagError::ShapeMismatch {
                expected: format!("{}x{}", sig.ambient(), sig.nd()),
                got: format!("{}x{}", delta.nrows(), delta.ncols()),
            });
        }
        let residual = tangency_residual(&base, &delta);
        let tolerance = TANGENCY_TOL * (1.0 + delta.norm());
        if residual > tolerance {
            return Err(FlagError::NotTangent {
                residual,
                tolerance,
            });
        }
        Ok(Self::new_unchecked(base, delta))
    }

    pub(crate) fn new_unchecked(base: StiefelPoint, delta: DMatrix<f64>) -> Self {
        Self {
            base,
            delta,
            generator: OnceLock::new(),
        }
    }

    pub fn zero(base: &StiefelPoint) -> Self {
        let sig = base.signature();
        Self::new_unchecked(base.clone(), DMatrix::zeros(sig.ambient(), sig.nd()))
    }

    /// Pushes a generator to the tangent space at `base`:
    /// `X = [Y, Y^perp] B I_{n,n_d}`.
    pub fn push(base: &StiefelPoint, gen: &SkewGenerator) -> Result<Self> {
        if base.signature() != gen.signature() {
            return Err(FlagError::SignatureMismatch);
        }
        let sig = base.signature();
        let cols = gen.matrix().columns(0, sig.nd());
        let delta = base.frame() * cols;
        let v = Self::new_unchecked(base.clone(), delta);
        let _ = v.generator.set(gen.clone());
        Ok(v)
    }

    /// A pseudo-random tangent vector, the push of a random generator.
    pub fn random(base: &StiefelPoint, seed: u64) -> Self {
        Self::push(base, &SkewGenerator::random(base.signature(), seed)).unwrap()
    }

    pub fn base(&self) -> &StiefelPoint {
        &self.base
    }

    pub fn delta(&self) -> &DMatrix<f64> {
        &self.delta
    }

    /// Lifts the ambient representation to its generator in `m`: the first
    /// `n_d` columns of `B` are `[Y, Y^perp]^T X`, the remaining columns are
    /// forced by skew-symmetry, and the diagonal blocks vanish exactly.
    pub fn generator(&self) -> &SkewGenerator {
        self.generator.get_or_init(|| {
            let sig = self.base.signature();
            let n = sig.ambient();
            let k = sig.nd();
            let c = self.base.frame().transpose() * &self.delta;
            let mut b = DMatrix::zeros(n, n);
            // Inner square: antisymmetrize to kill roundoff, zero diagonal blocks.
            let s = c.view((0, 0), (k, k));
            let mut inner = (s - s.transpose()) * 0.5;
            zero_inner_diagonal_blocks(sig, &mut inner);
            b.view_mut((0, 0), (k, k)).copy_from(&inner);
            // Complement rows, mirrored into the trailing columns.
            let p = c.view((k, 0), (n - k, k)).into_owned();
            b.view_mut((k, 0), (n - k, k)).copy_from(&p);
            b.view_mut((0, k), (k, n - k)).copy_from(&(-p.transpose()));
            SkewGenerator::from_m_matrix(sig.clone(), b)
        })
    }

    /// Canonical metric norm `sqrt(g(v, v))`.
    pub fn norm(&self) -> f64 {
        metric(self, self).expect("metric with itself").sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new_unchecked(self.base.clone(), &self.delta * s)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_base(self, other)?;
        Ok(Self::new_unchecked(
            self.base.clone(),
            &self.delta + &other.delta,
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same_base(self, other)?;
        Ok(Self::new_unchecked(
            self.base.clone(),
            &self.delta - &other.delta,
        ))
    }

    /// Velocities `Z_i = X_i Y_i^T + Y_i X_i^T` of the cumulative projectors
    /// `P_i = Y_i Y_i^T` along this tangent direction (`Y_i`, `X_i` the first
    /// `n_i` columns of `Y` and `X`).
    pub fn projection_velocity(&self) -> Vec<DMatrix<f64>> {
        let sig = self.base.signature();
        (1..=sig.depth())
            .map(|i| {
                let yi = self.base.matrix().columns(0, sig.cut(i));
                let xi = self.delta.columns(0, sig.cut(i));
                let m = xi * yi.transpose();
                &m + m.transpose()
            })
            .collect()
    }

    /// Velocities of the reduced projectors `R_i = W_i W_i^T` (blockwise
    /// columns instead of cumulative ones).
    pub fn reduced_velocity(&self) -> Vec<DMatrix<f64>> {
        let sig = self.base.signature();
        (1..=sig.depth())
            .map(|i| {
                let r = sig.block_range(i);
                let wi = self.base.matrix().columns(r.start, r.len());
                let xi = self.delta.columns(r.start, r.len());
                let m = xi * wi.transpose();
                &m + m.transpose()
            })
            .collect()
    }
}

fn check_same_base(u: &TangentVector, v: &TangentVector) -> Result<()> {
    if u.base.signature() != v.base.signature() {
        return Err(FlagError::SignatureMismatch);
    }
    let scale = 1.0 + u.base.matrix().norm();
    if (u.base.matrix() - v.base.matrix()).norm() > 1e-12 * scale {
        return Err(FlagError::BaseMismatch);
    }
    Ok(())
}

/// The canonical Riemannian metric `g(u, v) = 1/2 tr(B^T C)` evaluated
/// directly on the ambient representations:
/// `g = 1/2 tr((Y^T u)^T (Y^T v)) + tr(u^T (I - Y Y^T) v)`.
pub fn metric(u: &TangentVector, v: &TangentVector) -> Result<f64> {
    check_same_base(u, v)?;
    let y = u.base.matrix();
    let su = y.transpose() * &u.delta;
    let sv = y.transpose() * &v.delta;
    let perp_v = &v.delta - y * &sv;
    Ok(0.5 * linalg::fro_inner(&su, &sv) + linalg::fro_inner(&u.delta, &perp_v))
}

/// Orthogonal projection of an arbitrary ambient `n x n_d` matrix onto the
/// tangent space at `p`, with respect to the Frobenius pairing `tr(A^T X)`.
/// Idempotent and self-adjoint; the residual `A - proj(A)` is
/// Frobenius-orthogonal to every tangent vector.
///
/// In block form this keeps the complement component of each column block,
/// drops the isotropy (diagonal-block) component, and averages the paired
/// off-diagonal components to `(S_ij - S_ji^T) / 2`.
pub fn project_tangent(p: &StiefelPoint, ambient: &DMatrix<f64>) -> Result<TangentVector> {
    tangent_shape(p, ambient, 0.5)
}

/// Shared kernel of [`project_tangent`] and the Riemannian gradient: with
/// `S = Y^T A`, returns `(I - Y Y^T) A + Y K` where `K` is `scale * (S -
/// S^T)` with its diagonal blocks zeroed. `scale = 1/2` is the Frobenius
/// projection; `scale = 1` realizes the metric dual pairing
/// `g(out, T) = tr(A^T T)` used by the gradient.
pub(crate) fn tangent_shape(
    p: &StiefelPoint,
    ambient: &DMatrix<f64>,
    scale: f64,
) -> Result<TangentVector> {
    let sig = p.signature();
    if ambient.nrows() != sig.ambient() || ambient.ncols() != sig.nd() {
        return Err(FlagError::ShapeMismatch {
            expected: format!("{}x{}", sig.ambient(), sig.nd()),
            got: format!("{}x{}", ambient.nrows(), ambient.ncols()),
        });
    }
    let y = p.matrix();
    let s = y.transpose() * ambient;
    let mut k = (&s - s.transpose()) * scale;
    zero_inner_diagonal_blocks(sig, &mut k);
    let delta = ambient - y * s + y * k;
    Ok(TangentVector::new_unchecked(p.clone(), delta))
}

/// Whether a tuple `Z` of symmetric matrices is a valid velocity of the
/// nested projector tuple `P`: `Z_i P_i + P_i Z_i = Z_i = Z_i^T`,
/// `tr(Z_i) = 0`, and `Z_j P_i + P_j Z_i = Z_i` for `i < j`, each to `tol`.
pub fn check_projection_velocity(p: &ProjectionPoint, z: &[DMatrix<f64>], tol: f64) -> bool {
    let sig = p.signature();
    let n = sig.ambient();
    if z.len() != sig.depth() || z.iter().any(|m| m.nrows() != n || m.ncols() != n) {
        return false;
    }
    for (i, zi) in z.iter().enumerate() {
        if (zi - zi.transpose()).norm() > tol {
            return false;
        }
        if zi.trace().abs() > tol {
            return false;
        }
        let pi = p.projector(i + 1);
        if (zi * pi + pi * zi - zi).norm() > tol {
            return false;
        }
    }
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            let lhs = &z[j] * p.projector(i + 1) + p.projector(j + 1) * &z[i];
            if (lhs - &z[i]).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Reduced-coordinate variant: `R_i Z_i + Z_i R_i = Z_i = Z_i^T`,
/// `tr(Z_i) = 0`, and `Z_i R_j + R_i Z_j = 0` for `i < j`.
pub fn check_reduced_velocity(r: &ReducedProjectionPoint, z: &[DMatrix<f64>], tol: f64) -> bool {
    let sig = r.signature();
    let n = sig.ambient();
    if z.len() != sig.depth() || z.iter().any(|m| m.nrows() != n || m.ncols() != n) {
        return false;
    }
    for (i, zi) in z.iter().enumerate() {
        if (zi - zi.transpose()).norm() > tol {
            return false;
        }
        if zi.trace().abs() > tol {
            return false;
        }
        let ri = r.projector(i + 1);
        if (ri * zi + zi * ri - zi).norm() > tol {
            return false;
        }
    }
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            let lhs = &z[i] * r.projector(j + 1) + r.projector(i + 1) * &z[j];
            if lhs.norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Reconstructs the Stiefel-coordinate tangent vector consistent with a
/// projector-velocity tuple `Z` at `P`, based at `P.to_stiefel()`.
///
/// For each block `k`, the component of `X_k` outside `V_k` is read off
/// `Z_k Y_k`, and the components inside earlier blocks are forced by
/// skew-symmetry from the lower velocities.
pub fn velocity_to_tangent(p: &ProjectionPoint, z: &[DMatrix<f64>]) -> Result<TangentVector> {
    if !check_projection_velocity(p, z, VELOCITY_TOL) {
        return Err(FlagError::InconsistentVelocity(
            "tuple fails the projector-velocity equations".into(),
        ));
    }
    let base = p.to_stiefel();
    let sig = base.signature().clone();
    let n = sig.ambient();
    let y = base.matrix().clone();

    // u[k] = Z_k Y_k = (I - P_k) [X_1, ..., X_k]   (cumulative columns).
    let u: Vec<DMatrix<f64>> = (1..=sig.depth())
        .map(|k| &z[k - 1] * y.columns(0, sig.cut(k)))
        .collect();

    let mut delta = DMatrix::zeros(n, sig.nd());
    for k in 1..=sig.depth() {
        let rk = sig.block_range(k);
        let mut xk = u[k - 1].columns(sig.cut(k - 1), rk.len()).into_owned();
        for j in 1..k {
            let rj = sig.block_range(j);
            let wk = y.columns(rk.start, rk.len());
            let wj = y.columns(rj.start, rj.len());
            // s_kj = W_k^T (I - P_j) X_j, the block-k component of X_j.
            let outer_j = u[j - 1].columns(sig.cut(j - 1), rj.len());
            let skj = wk.transpose() * outer_j;
            xk += wj * (-skj.transpose());
        }
        delta.view_mut((0, rk.start), (n, rk.len())).copy_from(&xk);
    }
    TangentVector::new(base, delta).map_err(|_| {
        FlagError::InconsistentVelocity("reconstructed matrix fails the tangency equations".into())
    })
}
