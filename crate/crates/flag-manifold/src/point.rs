//! Point representations of a flag and conversions between them.
//!
//! A flag of signature `(n_1, ..., n_d; n)` can be carried in four extrinsic
//! coordinate systems:
//!
//! * **Stiefel coordinates** ([`StiefelPoint`]): an `n x n_d` orthonormal
//!   matrix `Y` whose first `n_i` columns span the `i`-th subspace. Not
//!   unique; `Y` and `Y K` represent the same flag for any block-diagonal
//!   orthogonal `K`. These are the working coordinates of the solvers.
//! * **Orthogonal coordinates** ([`OrthogonalPoint`]): a full `n x n`
//!   orthogonal matrix, unique up to a block-diagonal orthogonal right
//!   factor including the complement block.
//! * **Projection coordinates** ([`ProjectionPoint`]): the tuple of
//!   orthogonal projectors `P_i` onto the nested subspaces. Unique.
//! * **Reduced projection coordinates** ([`ReducedProjectionPoint`]): the
//!   tuple of projectors `R_i` onto the successive orthogonal complements
//!   `V_i ∩ V_{i-1}^perp`. Unique, mutually annihilating.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FlagError, Result};
use crate::linalg;
use crate::signature::FlagSignature;

/// Orthonormality residual allowed on construction of orthonormal matrices.
pub const ORTHONORMALITY_TOL: f64 = 1e-12;

/// Residual allowed on projector invariants (idempotency, symmetry, trace,
/// nesting/annihilation).
pub const PROJECTOR_TOL: f64 = 1e-10;

fn check_shape(m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(FlagError::ShapeMismatch {
            expected: format!("{rows}x{cols}"),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

fn check_orthonormal(m: &DMatrix<f64>) -> Result<()> {
    let residual = linalg::orthonormality_residual(m);
    let tolerance = ORTHONORMALITY_TOL * (m.ncols() as f64).sqrt().max(1.0);
    if residual > tolerance {
        return Err(FlagError::NotOrthonormal {
            residual,
            tolerance,
        });
    }
    Ok(())
}

/// A flag in Stiefel coordinates: `n x n_d` with orthonormal columns.
///
/// The orthonormal complement `Y^perp` is computed on first use and cached;
/// it is deterministic for a given `Y`.
#[derive(Debug, Clone)]
pub struct StiefelPoint {
    sig: FlagSignature,
    y: DMatrix<f64>,
    yperp: OnceLock<DMatrix<f64>>,
}

impl StiefelPoint {
    /// Wraps an orthonormal matrix as a flag representative.
    pub fn new(sig: FlagSignature, y: DMatrix<f64>) -> Result<Self> {
        check_shape(&y, sig.ambient(), sig.nd())?;
        check_orthonormal(&y)?;
        Ok(Self::new_unchecked(sig, y))
    }

    pub(crate) fn new_unchecked(sig: FlagSignature, y: DMatrix<f64>) -> Self {
        Self {
            sig,
            y,
            yperp: OnceLock::new(),
        }
    }

    pub(crate) fn with_known_completion(
        sig: FlagSignature,
        y: DMatrix<f64>,
        yperp: DMatrix<f64>,
    ) -> Self {
        let cell = OnceLock::new();
        let _ = cell.set(yperp);
        Self {
            sig,
            y,
            yperp: cell,
        }
    }

    /// A pseudo-random flag: an `n x n_d` standard normal matrix
    /// orthonormalized by sign-fixed thin QR. The construction is invariant
    /// in distribution under left multiplication by orthogonal matrices and
    /// is bitwise reproducible for a fixed seed.
    pub fn random(sig: &FlagSignature, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = linalg::gaussian_matrix(sig.ambient(), sig.nd(), &mut rng);
        Self::new_unchecked(sig.clone(), linalg::thin_qr_positive(&g))
    }

    /// The identity representative: the first `n_d` columns of `I_n`.
    pub fn coordinate_flag(sig: &FlagSignature) -> Self {
        let y = DMatrix::identity(sig.ambient(), sig.nd());
        Self::new_unchecked(sig.clone(), y)
    }

    pub fn signature(&self) -> &FlagSignature {
        &self.sig
    }

    /// The representative matrix `Y`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.y
    }

    /// The cached orthonormal complement `Y^perp`, `n x (n - n_d)`.
    pub fn completion(&self) -> &DMatrix<f64> {
        self.yperp
            .get_or_init(|| linalg::orthonormal_complement(&self.y))
    }

    /// The full orthogonal frame `[Y, Y^perp]`.
    pub fn frame(&self) -> DMatrix<f64> {
        let n = self.sig.ambient();
        let k = self.sig.nd();
        let mut q = DMatrix::zeros(n, n);
        q.view_mut((0, 0), (n, k)).copy_from(&self.y);
        q.view_mut((0, k), (n, n - k)).copy_from(self.completion());
        q
    }

    /// First `n_i` columns of `Y` (an orthonormal basis of the `i`-th
    /// subspace), `i` in `1..=d`.
    pub fn prefix(&self, i: usize) -> DMatrix<f64> {
        self.y.columns(0, self.sig.cut(i)).into_owned()
    }

    /// Columns of block `i` (basis of the `i`-th successive complement),
    /// `i` in `1..=d`.
    pub fn block(&self, i: usize) -> DMatrix<f64> {
        let r = self.sig.block_range(i);
        self.y.columns(r.start, r.len()).into_owned()
    }

    /// Extends `Y` by its complement into orthogonal coordinates. The first
    /// `n_d` columns of the result equal `Y` exactly.
    pub fn complete_basis(&self) -> OrthogonalPoint {
        OrthogonalPoint {
            sig: self.sig.clone(),
            q: self.frame(),
        }
    }

    /// Projection coordinates `P_i = Y_i Y_i^T` with `Y_i` the first `n_i`
    /// columns of `Y`.
    pub fn to_projection(&self) -> ProjectionPoint {
        let ps = (1..=self.sig.depth())
            .map(|i| {
                let yi = self.y.columns(0, self.sig.cut(i));
                symmetrize(yi * yi.transpose())
            })
            .collect();
        ProjectionPoint {
            sig: self.sig.clone(),
            ps,
        }
    }

    /// Reduced projection coordinates `R_i = W_i W_i^T` with `W_i` the
    /// columns of block `i`.
    pub fn to_reduced(&self) -> ReducedProjectionPoint {
        let rs = (1..=self.sig.depth())
            .map(|i| {
                let r = self.sig.block_range(i);
                let wi = self.y.columns(r.start, r.len());
                symmetrize(wi * wi.transpose())
            })
            .collect();
        ReducedProjectionPoint {
            sig: self.sig.clone(),
            rs,
        }
    }

    /// Whether two representatives describe the same flag: all cumulative
    /// projectors must agree to `tol` in Frobenius norm.
    pub fn same_flag(&self, other: &Self, tol: f64) -> Result<bool> {
        if self.sig != other.sig {
            return Err(FlagError::SignatureMismatch);
        }
        for i in 1..=self.sig.depth() {
            let a = self.prefix(i);
            let b = other.prefix(i);
            let diff = &a * a.transpose() - &b * b.transpose();
            if diff.norm() > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Representative-free distance between flags: the Frobenius norm of the
    /// difference of the cumulative projector tuples, normalized by `sqrt(d)`.
    pub fn projector_distance(&self, other: &Self) -> Result<f64> {
        if self.sig != other.sig {
            return Err(FlagError::SignatureMismatch);
        }
        let mut total = 0.0;
        for i in 1..=self.sig.depth() {
            total += self.projector_distance_at(other, i)?.powi(2);
        }
        Ok((total / self.sig.depth() as f64).sqrt())
    }

    /// `|P_i - P_i'|_F` for one cut `i` in `1..=d`: the representative-free
    /// distance between the `i`-th subspaces alone. The top cut `i = d`
    /// compares the largest subspaces, which is the quantity that block-trace
    /// objectives like `tr(Y^T M Y)` actually determine.
    pub fn projector_distance_at(&self, other: &Self, i: usize) -> Result<f64> {
        if self.sig != other.sig {
            return Err(FlagError::SignatureMismatch);
        }
        let a = self.prefix(i);
        let b = other.prefix(i);
        Ok((&a * a.transpose() - &b * b.transpose()).norm())
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let mt = m.transpose();
    (m + mt) * 0.5
}

/// A flag in orthogonal coordinates: a full `n x n` orthogonal matrix.
#[derive(Debug, Clone)]
pub struct OrthogonalPoint {
    sig: FlagSignature,
    q: DMatrix<f64>,
}

impl OrthogonalPoint {
    pub fn new(sig: FlagSignature, q: DMatrix<f64>) -> Result<Self> {
        check_shape(&q, sig.ambient(), sig.ambient())?;
        check_orthonormal(&q)?;
        Ok(Self { sig, q })
    }

    pub fn signature(&self) -> &FlagSignature {
        &self.sig
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Drops back to Stiefel coordinates (first `n_d` columns); the trailing
    /// columns are kept as the cached complement.
    pub fn stiefel(&self) -> StiefelPoint {
        let n = self.sig.ambient();
        let k = self.sig.nd();
        StiefelPoint::with_known_completion(
            self.sig.clone(),
            self.q.columns(0, k).into_owned(),
            self.q.columns(k, n - k).into_owned(),
        )
    }
}

/// A flag as the unique tuple of nested orthogonal projectors.
#[derive(Debug, Clone)]
pub struct ProjectionPoint {
    sig: FlagSignature,
    ps: Vec<DMatrix<f64>>,
}

impl ProjectionPoint {
    /// Validates symmetry, idempotency, trace `n_i`, and nesting
    /// `P_j P_i = P_i` for `i < j`, each to [`PROJECTOR_TOL`].
    pub fn new(sig: FlagSignature, ps: Vec<DMatrix<f64>>) -> Result<Self> {
        if ps.len() != sig.depth() {
            return Err(FlagError::InvalidProjector(format!(
                "expected {} projectors, got {}",
                sig.depth(),
                ps.len()
            )));
        }
        let n = sig.ambient();
        for (idx, p) in ps.iter().enumerate() {
            check_shape(p, n, n)?;
            validate_projector(p, sig.cut(idx + 1), idx + 1)?;
        }
        for i in 0..ps.len() {
            for j in (i + 1)..ps.len() {
                let residual = (&ps[j] * &ps[i] - &ps[i]).norm();
                if residual > PROJECTOR_TOL {
                    return Err(FlagError::InvalidProjector(format!(
                        "nesting P_{} P_{} = P_{} fails with residual {residual:.3e}",
                        j + 1,
                        i + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { sig, ps })
    }

    pub fn signature(&self) -> &FlagSignature {
        &self.sig
    }

    /// The projector `P_i`, `i` in `1..=d`.
    pub fn projector(&self, i: usize) -> &DMatrix<f64> {
        &self.ps[i - 1]
    }

    pub fn projectors(&self) -> &[DMatrix<f64>] {
        &self.ps
    }

    /// Recovers Stiefel coordinates: an orthonormal basis of `im(P_1)`
    /// extended block by block with bases of `im(P_i - P_{i-1})`, then
    /// cleaned up by a flag-preserving triangular orthonormalization.
    pub fn to_stiefel(&self) -> StiefelPoint {
        let n = self.sig.ambient();
        let mut y = DMatrix::zeros(n, self.sig.nd());
        let mut prev: Option<&DMatrix<f64>> = None;
        for i in 1..=self.sig.depth() {
            let step = match prev {
                None => self.ps[i - 1].clone(),
                Some(p) => &self.ps[i - 1] - p,
            };
            let r = self.sig.block_range(i);
            let basis = projector_range_basis(&step, r.len());
            y.view_mut((0, r.start), (n, r.len())).copy_from(&basis);
            prev = Some(&self.ps[i - 1]);
        }
        StiefelPoint::new_unchecked(self.sig.clone(), linalg::thin_qr_positive(&y))
    }
}

/// A flag as the unique tuple of mutually annihilating projectors onto the
/// successive complements.
#[derive(Debug, Clone)]
pub struct ReducedProjectionPoint {
    sig: FlagSignature,
    rs: Vec<DMatrix<f64>>,
}

impl ReducedProjectionPoint {
    /// Validates symmetry, idempotency, trace `n_i - n_{i-1}`, and
    /// annihilation `R_i R_j = 0` for `i < j`, each to [`PROJECTOR_TOL`].
    pub fn new(sig: FlagSignature, rs: Vec<DMatrix<f64>>) -> Result<Self> {
        if rs.len() != sig.depth() {
            return Err(FlagError::InvalidProjector(format!(
                "expected {} projectors, got {}",
                sig.depth(),
                rs.len()
            )));
        }
        let n = sig.ambient();
        for (idx, r) in rs.iter().enumerate() {
            check_shape(r, n, n)?;
            validate_projector(r, sig.cut(idx + 1) - sig.cut(idx), idx + 1)?;
        }
        for i in 0..rs.len() {
            for j in (i + 1)..rs.len() {
                let residual = (&rs[i] * &rs[j]).norm();
                if residual > PROJECTOR_TOL {
                    return Err(FlagError::InvalidProjector(format!(
                        "annihilation R_{} R_{} = 0 fails with residual {residual:.3e}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { sig, rs })
    }

    pub fn signature(&self) -> &FlagSignature {
        &self.sig
    }

    /// The projector `R_i`, `i` in `1..=d`.
    pub fn projector(&self, i: usize) -> &DMatrix<f64> {
        &self.rs[i - 1]
    }

    pub fn projectors(&self) -> &[DMatrix<f64>] {
        &self.rs
    }

    /// The nested tuple `P_i = R_1 + ... + R_i`.
    pub fn cumulative(&self) -> Result<ProjectionPoint> {
        let mut ps = Vec::with_capacity(self.rs.len());
        let mut acc = DMatrix::zeros(self.sig.ambient(), self.sig.ambient());
        for r in &self.rs {
            acc += r;
            ps.push(acc.clone());
        }
        ProjectionPoint::new(self.sig.clone(), ps)
    }

    /// Recovers Stiefel coordinates by stacking orthonormal bases of
    /// `im(R_1), ..., im(R_d)`.
    pub fn to_stiefel(&self) -> StiefelPoint {
        let n = self.sig.ambient();
        let mut y = DMatrix::zeros(n, self.sig.nd());
        for i in 1..=self.sig.depth() {
            let r = self.sig.block_range(i);
            let basis = projector_range_basis(&self.rs[i - 1], r.len());
            y.view_mut((0, r.start), (n, r.len())).copy_from(&basis);
        }
        StiefelPoint::new_unchecked(self.sig.clone(), linalg::thin_qr_positive(&y))
    }
}

fn validate_projector(p: &DMatrix<f64>, expected_trace: usize, index: usize) -> Result<()> {
    let sym = (p - p.transpose()).norm();
    if sym > PROJECTOR_TOL {
        return Err(FlagError::InvalidProjector(format!(
            "projector {index} is not symmetric (residual {sym:.3e})"
        )));
    }
    let idem = (p * p - p).norm();
    if idem > PROJECTOR_TOL {
        return Err(FlagError::InvalidProjector(format!(
            "projector {index} is not idempotent (residual {idem:.3e})"
        )));
    }
    let trace = p.trace();
    if (trace - expected_trace as f64).abs() > PROJECTOR_TOL {
        return Err(FlagError::InvalidProjector(format!(
            "projector {index} has trace {trace:.12} but rank {expected_trace} is required"
        )));
    }
    Ok(())
}

/// Orthonormal basis (deterministic) of the range of a rank-`k` projector:
/// the eigenvectors for the `k` eigenvalues near one.
fn projector_range_basis(p: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let (values, vectors) = linalg::sym_eigen_desc(p);
    debug_assert!(values[k - 1] > 0.5, "projector rank defect");
    vectors.columns(0, k).into_owned()
}

/// A pseudo-random element of the isotropy group in Stiefel coordinates:
/// an `n_d x n_d` block-diagonal orthogonal matrix with blocks of sizes
/// `b_1, ..., b_d`. Right-multiplying a representative by such a factor
/// leaves the flag unchanged.
pub fn isotropy_factor(sig: &FlagSignature, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = DMatrix::zeros(sig.nd(), sig.nd());
    for i in 1..=sig.depth() {
        let r = sig.block_range(i);
        let g = linalg::gaussian_matrix(r.len(), r.len(), &mut rng);
        let q = linalg::thin_qr_positive(&g);
        k.view_mut((r.start, r.start), (r.len(), r.len()))
            .copy_from(&q);
    }
    k
}

/// Like [`isotropy_factor`] but `n x n` with all `d + 1` diagonal blocks,
/// i.e. a random element of the full isotropy subgroup of the orthogonal
/// group.
pub fn isotropy_factor_full(sig: &FlagSignature, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sig.ambient();
    let mut k = DMatrix::zeros(n, n);
    for i in 1..=sig.depth() + 1 {
        let r = sig.block_range(i);
        let g = linalg::gaussian_matrix(r.len(), r.len(), &mut rng);
        let q = linalg::thin_qr_positive(&g);
        k.view_mut((r.start, r.start), (r.len(), r.len()))
            .copy_from(&q);
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig123() -> FlagSignature {
        FlagSignature::new(vec![1, 2], 3).unwrap()
    }

    #[test]
    fn random_point_is_orthonormal_and_deterministic() {
        let sig = FlagSignature::new(vec![3, 7, 12], 60).unwrap();
        let a = StiefelPoint::random(&sig, 42);
        let b = StiefelPoint::random(&sig, 42);
        assert_eq!(a.matrix(), b.matrix());
        assert!(linalg::orthonormality_residual(a.matrix()) < 1e-12);

        let c = StiefelPoint::random(&sig, 43);
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn random_point_on_circle_is_unit() {
        let sig = FlagSignature::new(vec![1], 2).unwrap();
        let p = StiefelPoint::random(&sig, 7);
        assert!((p.matrix().norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_orthonormal() {
        let sig = sig123();
        let mut y = DMatrix::identity(3, 2);
        y[(0, 1)] = 0.5;
        assert!(matches!(
            StiefelPoint::new(sig, y),
            Err(FlagError::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn complete_basis_prefixes_exactly() {
        let sig = sig123();
        let p = StiefelPoint::coordinate_flag(&sig);
        let q = p.complete_basis();
        // First n_d columns equal Y bitwise; the completion of I_{3,2} is
        // +-e_3.
        assert_eq!(q.matrix().columns(0, 2), p.matrix().columns(0, 2));
        assert!((q.matrix()[(2, 2)].abs() - 1.0).abs() < 1e-14);
        assert!(linalg::orthonormality_residual(q.matrix()) < 1e-12);

        let sig = FlagSignature::new(vec![2, 5], 11).unwrap();
        let p = StiefelPoint::random(&sig, 1);
        let q = p.complete_basis();
        assert!(linalg::orthonormality_residual(q.matrix()) < 1e-12);
        assert_eq!(q.matrix().columns(0, 5), p.matrix().columns(0, 5));
        assert_eq!(q.stiefel().matrix(), p.matrix());
    }

    #[test]
    fn projection_of_coordinate_flag() {
        let p = StiefelPoint::coordinate_flag(&sig123()).to_projection();
        let p1 = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 0.0, 0.0]);
        let p2 = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 1.0, 0.0]);
        assert_eq!(p.projector(1), &p1);
        assert_eq!(p.projector(2), &p2);
    }

    #[test]
    fn projection_is_nested_and_representative_free() {
        let sig = FlagSignature::new(vec![2, 4], 9).unwrap();
        let p = StiefelPoint::random(&sig, 5);
        let pp = p.to_projection();
        let nest = pp.projector(2) * pp.projector(1) - pp.projector(1);
        assert!(nest.norm() < 1e-12);

        // Y K for block-diagonal orthogonal K gives identical projectors.
        let k = isotropy_factor(&sig, 99);
        let rotated = StiefelPoint::new(sig, p.matrix() * k).unwrap();
        let qq = rotated.to_projection();
        for i in 1..=2 {
            assert!((pp.projector(i) - qq.projector(i)).norm() < 1e-12);
        }
    }

    #[test]
    fn projection_round_trip() {
        let sig = FlagSignature::new(vec![1, 3, 4], 8).unwrap();
        let p = StiefelPoint::random(&sig, 17);
        let pp = p.to_projection();
        let back = ProjectionPoint::new(sig, pp.projectors().to_vec())
            .unwrap()
            .to_stiefel();
        let again = back.to_projection();
        for i in 1..=3 {
            assert!((pp.projector(i) - again.projector(i)).norm() < 1e-10);
        }
        assert!(p.same_flag(&back, 1e-9).unwrap());
    }

    #[test]
    fn from_projection_of_coordinate_projectors() {
        let sig = sig123();
        let p1 = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 0.0, 0.0]);
        let p2 = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 1.0, 0.0]);
        let y = ProjectionPoint::new(sig.clone(), vec![p1, p2])
            .unwrap()
            .to_stiefel();
        assert!(y
            .same_flag(&StiefelPoint::coordinate_flag(&sig), 1e-12)
            .unwrap());
    }

    #[test]
    fn projector_rank_defect_is_rejected() {
        let sig = sig123();
        // trace(P_1) = 2 but n_1 = 1.
        let p1 = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 1.0, 0.0]);
        let p2 = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 1.0, 0.0]);
        assert!(matches!(
            ProjectionPoint::new(sig, vec![p1, p2]),
            Err(FlagError::InvalidProjector(_))
        ));
    }

    #[test]
    fn reduced_coordinates_of_coordinate_flag() {
        let r = StiefelPoint::coordinate_flag(&sig123()).to_reduced();
        let r1 = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 0.0, 0.0]);
        let r2 = DMatrix::from_diagonal(&nalgebra::dvector![0.0, 1.0, 0.0]);
        assert_eq!(r.projector(1), &r1);
        assert_eq!(r.projector(2), &r2);
    }

    #[test]
    fn reduced_annihilation_and_cumulative_sum() {
        let sig = FlagSignature::new(vec![2, 3, 5], 9).unwrap();
        let p = StiefelPoint::random(&sig, 23);
        let red = p.to_reduced();
        for i in 1..=3 {
            for j in (i + 1)..=3 {
                assert!((red.projector(i) * red.projector(j)).norm() < 1e-12);
            }
        }
        // P_i = sum of R_1..R_i.
        let pp = p.to_projection();
        let cum = red.cumulative().unwrap();
        for i in 1..=3 {
            assert!((pp.projector(i) - cum.projector(i)).norm() < 1e-12);
        }
        // Round trip through reduced coordinates preserves the flag.
        let back = red.to_stiefel();
        assert!(p.same_flag(&back, 1e-10).unwrap());
    }

    #[test]
    fn same_flag_under_isotropy_rotation() {
        let sig = FlagSignature::new(vec![2, 4, 5], 10).unwrap();
        let p = StiefelPoint::random(&sig, 3);
        let k = isotropy_factor(&sig, 4);
        let q = StiefelPoint::new(sig, p.matrix() * k).unwrap();
        assert!(p.same_flag(&q, 1e-12).unwrap());
        assert!(p.same_flag(&p, 0.0).unwrap());
    }

    #[test]
    fn same_flag_distinguishes_subspaces() {
        let sig = sig123();
        let a = StiefelPoint::coordinate_flag(&sig);
        // Columns (e_1, e_3): same first subspace, different second.
        let mut y = DMatrix::zeros(3, 2);
        y[(0, 0)] = 1.0;
        y[(2, 1)] = 1.0;
        let b = StiefelPoint::new(sig, y).unwrap();
        assert!(!a.same_flag(&b, 1e-8).unwrap());
        assert!(a.projector_distance(&b).unwrap() > 0.5);
    }

    #[test]
    fn same_flag_signature_mismatch() {
        let a = StiefelPoint::random(&sig123(), 0);
        let other = FlagSignature::new(vec![1, 2], 4).unwrap();
        let b = StiefelPoint::random(&other, 0);
        assert!(matches!(
            a.same_flag(&b, 1e-8),
            Err(FlagError::SignatureMismatch)
        ));
    }
}
