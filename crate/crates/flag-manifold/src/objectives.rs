//! Built-in benchmark objectives on flag manifolds.
//!
//! All of them are block-trace functions of a symmetric matrix `M`:
//! `f(Y) = sum over i of f_i(tr(Y_i^T M Y_i))` where `Y_i` is the `i`-th
//! column block of the representative. The principal flag problem takes
//! `f_i(x) = x` (so `f(Y) = tr(Y^T M Y)`, maximized by the eigenvector
//! flag of `M`, with value the sum of the top `n_d` eigenvalues); the
//! nonlinear eigenflag problem takes `f_i(x) = x^2` and has no closed-form
//! solution. Arbitrary twice-differentiable per-block functions are
//! accepted as well.
//!
//! These objectives are algebraically invariant under isotropy rotations,
//! since each block trace is. They are maximization problems; negate them
//! (`ObjectiveFunction::negated`) before handing them to the minimizing
//! solvers.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::ObjectiveFunction;
use crate::error::{FlagError, Result};
use crate::linalg;
use crate::point::StiefelPoint;
use crate::signature::FlagSignature;

/// Relative asymmetry tolerated before a matrix is considered non-symmetric
/// garbage rather than a victim of roundoff.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalue gap below which the maximizing flag is not unique.
pub const DEGENERATE_GAP_TOL: f64 = 1e-10;

/// A scalar `C^2` function with its first two derivatives, applied to one
/// block trace.
pub struct BlockFunction {
    pub f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub df: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d2f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl BlockFunction {
    pub fn new(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Box::new(f),
            df: Box::new(df),
            d2f: Box::new(d2f),
        }
    }
}

/// Which scalar functions are applied to the block traces.
pub enum ProblemFamily {
    /// `f_i(x) = x`: the principal flag problem `tr(Y^T M Y)`.
    Principal,
    /// `f_i(x) = x^2`: the nonlinear eigenflag problem.
    Eigenflag,
    /// One supplied function per block, `f_1, ..., f_d`.
    Custom(Vec<BlockFunction>),
}

impl ProblemFamily {
    fn eval(&self, block: usize, x: f64) -> (f64, f64, f64) {
        match self {
            ProblemFamily::Principal => (x, 1.0, 0.0),
            ProblemFamily::Eigenflag => (x * x, 2.0 * x, 2.0),
            ProblemFamily::Custom(fs) => {
                let b = &fs[block];
                ((b.f)(x), (b.df)(x), (b.d2f)(x))
            }
        }
    }
}

/// A block-trace objective `sum f_i(tr(Y_i^T M Y_i))` for a symmetric `M`.
pub struct SymmetricMatrixProblem {
    m: DMatrix<f64>,
    sig: FlagSignature,
    family: ProblemFamily,
}

impl SymmetricMatrixProblem {
    /// Builds the problem; `m` is symmetrized as `(M + M^T)/2` on ingestion
    /// and rejected if its asymmetry exceeds [`SYMMETRY_TOL`] relative to
    /// its norm.
    pub fn new(m: DMatrix<f64>, sig: FlagSignature, family: ProblemFamily) -> Result<Self> {
        let n = sig.ambient();
        if m.nrows() != n || m.ncols() != n {
            return Err(FlagError::ShapeMismatch {
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        let asym = (&m - m.transpose()).norm();
        if asym > SYMMETRY_TOL * m.norm().max(1.0) {
            return Err(FlagError::ShapeMismatch {
                expected: "symmetric matrix".into(),
                got: format!("asymmetry {asym:.3e}"),
            });
        }
        if let ProblemFamily::Custom(fs) = &family {
            if fs.len() != sig.depth() {
                return Err(FlagError::ShapeMismatch {
                    expected: format!("{} block functions", sig.depth()),
                    got: format!("{}", fs.len()),
                });
            }
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self {
            m: sym,
            sig,
            family,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn signature(&self) -> &FlagSignature {
        &self.sig
    }

    fn block_traces(&self, y: &DMatrix<f64>) -> Vec<f64> {
        (1..=self.sig.depth())
            .map(|i| {
                let r = self.sig.block_range(i);
                let yi = y.columns(r.start, r.len());
                (yi.transpose() * &self.m * yi).trace()
            })
            .collect()
    }

    fn value(&self, y: &DMatrix<f64>) -> f64 {
        self.block_traces(y)
            .iter()
            .enumerate()
            .map(|(i, &t)| self.family.eval(i, t).0)
            .sum()
    }

    /// `f_{Y_i} = f_i'(t_i) 2 M Y_i` blockwise.
    fn euclidean_gradient(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let traces = self.block_traces(y);
        let mut g = DMatrix::zeros(y.nrows(), y.ncols());
        for i in 1..=self.sig.depth() {
            let r = self.sig.block_range(i);
            let yi = y.columns(r.start, r.len());
            let (_, df, _) = self.family.eval(i - 1, traces[i - 1]);
            let gi = &self.m * yi * (2.0 * df);
            g.view_mut((0, r.start), (y.nrows(), r.len()))
                .copy_from(&gi);
        }
        g
    }

    /// `f_YY(X, X') = sum_i [ f_i'' 4 tr(X_i^T M Y_i) tr(X_i'^T M Y_i)
    ///                        + f_i' 2 tr(X_i^T M X_i') ]`.
    fn euclidean_hessian(&self, y: &DMatrix<f64>, x: &DMatrix<f64>, xp: &DMatrix<f64>) -> f64 {
        let traces = self.block_traces(y);
        let mut total = 0.0;
        for i in 1..=self.sig.depth() {
            let r = self.sig.block_range(i);
            let yi = y.columns(r.start, r.len());
            let xi = x.columns(r.start, r.len());
            let xpi = xp.columns(r.start, r.len());
            let (_, df, d2f) = self.family.eval(i - 1, traces[i - 1]);
            let myi = &self.m * yi;
            let dx = 2.0 * linalg::fro_inner(&xi.into_owned(), &myi);
            let dxp = 2.0 * linalg::fro_inner(&xpi.into_owned(), &myi);
            let cross = 2.0 * linalg::fro_inner(&xi.into_owned(), &(&self.m * xpi));
            total += d2f * dx * dxp + df * cross;
        }
        total
    }

    /// Packages the problem as a maximization [`ObjectiveFunction`] with
    /// analytic first and second derivatives.
    pub fn objective(self) -> ObjectiveFunction {
        let sig = self.sig.clone();
        let me = Arc::new(self);
        let v = Arc::clone(&me);
        let g = Arc::clone(&me);
        let h = Arc::clone(&me);
        ObjectiveFunction::new(sig, move |y| v.value(y), move |y| g.euclidean_gradient(y))
            .with_euclidean_hessian(move |y, x, xp| h.euclidean_hessian(y, x, xp))
    }
}

/// `tr(Y^T M Y)` as a maximization objective.
pub fn principal_flag_objective(m: DMatrix<f64>, sig: FlagSignature) -> Result<ObjectiveFunction> {
    Ok(SymmetricMatrixProblem::new(m, sig, ProblemFamily::Principal)?.objective())
}

/// `sum_i tr(Y_i^T M Y_i)^2` as a maximization objective.
pub fn eigenflag_objective(m: DMatrix<f64>, sig: FlagSignature) -> Result<ObjectiveFunction> {
    Ok(SymmetricMatrixProblem::new(m, sig, ProblemFamily::Eigenflag)?.objective())
}

/// The closed-form maximizer of the principal flag problem.
#[derive(Debug, Clone)]
pub struct PrincipalTruth {
    /// The eigenvector flag: columns are eigenvectors for the `n_d`
    /// largest eigenvalues, in descending order.
    pub point: StiefelPoint,
    /// The optimal value: the sum of the `n_d` largest eigenvalues.
    pub value: f64,
    /// Set when some cut `n_i` falls inside an eigenvalue cluster, in which
    /// case the optimal value is still well-defined but the flag is not
    /// unique.
    pub degenerate_gap: bool,
}

/// Ground truth for the principal flag problem: eigendecomposition of `M`
/// with descending eigenvalues and deterministic eigenvector signs.
pub fn true_principal_flag(m: &DMatrix<f64>, sig: &FlagSignature) -> Result<PrincipalTruth> {
    let n = sig.ambient();
    if m.nrows() != n || m.ncols() != n {
        return Err(FlagError::ShapeMismatch {
            expected: format!("{n}x{n}"),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let sym = (m + m.transpose()) * 0.5;
    let (values, vectors) = linalg::sym_eigen_desc(&sym);
    let scale = values.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
    let mut degenerate = false;
    for i in 1..=sig.depth() {
        let cut = sig.cut(i);
        if (values[cut - 1] - values[cut]).abs() <= DEGENERATE_GAP_TOL * scale {
            degenerate = true;
        }
    }
    let y = vectors.columns(0, sig.nd()).into_owned();
    let value = values[..sig.nd()].iter().sum();
    Ok(PrincipalTruth {
        point: StiefelPoint::new(sig.clone(), y)?,
        value,
        degenerate_gap: degenerate,
    })
}

/// A pseudo-random symmetric matrix `(A + A^T) / 2` with standard normal
/// `A`, reproducible from the seed.
pub fn gaussian_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = linalg::gaussian_matrix(n, n, &mut rng);
    (&a + a.transpose()) * 0.5
}
