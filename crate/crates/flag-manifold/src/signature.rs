//! Flag signatures: the integer data `(n_1, ..., n_d; n)` that fixes a flag
//! manifold `Flag(n_1, ..., n_d; n)` of nested subspaces of dimensions
//! `n_1 < ... < n_d` inside `R^n`.

use std::fmt;
use std::ops::Range;

use crate::error::{FlagError, Result};

/// The type `(n_1, ..., n_d; n)` of a flag manifold.
///
/// Stores the strictly increasing subspace dimensions `dims = (n_1, ..., n_d)`
/// and the ambient dimension `n` with `n_d < n`. The `d + 1` block sizes
/// `b_i = n_i - n_{i-1}` (with `n_0 = 0` and `n_{d+1} = n`) partition every
/// `n x n` matrix into the block structure used throughout the crate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlagSignature {
    dims: Vec<usize>,
    ambient: usize,
}

impl FlagSignature {
    /// Builds a signature, rejecting non-increasing dimension sequences,
    /// empty sequences, and `n_d >= n`.
    pub fn new(dims: impl Into<Vec<usize>>, ambient: usize) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(FlagError::InvalidSignature(
                "at least one subspace dimension is required".into(),
            ));
        }
        if dims[0] == 0 {
            return Err(FlagError::InvalidSignature(
                "subspace dimensions must be positive".into(),
            ));
        }
        for w in dims.windows(2) {
            if w[1] <= w[0] {
                return Err(FlagError::InvalidSignature(format!(
                    "dimensions must be strictly increasing: {} followed by {}",
                    w[0], w[1]
                )));
            }
        }
        let last = *dims.last().unwrap();
        if last >= ambient {
            return Err(FlagError::InvalidSignature(format!(
                "largest subspace dimension {last} must be smaller than the ambient dimension {ambient}"
            )));
        }
        Ok(Self { dims, ambient })
    }

    /// Convenience constructor for the Grassmannian `Gr(k, n) = Flag(k; n)`.
    pub fn grassmannian(k: usize, n: usize) -> Result<Self> {
        Self::new(vec![k], n)
    }

    /// The subspace dimensions `(n_1, ..., n_d)`.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// The ambient dimension `n`.
    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// The flag length `d`.
    pub fn depth(&self) -> usize {
        self.dims.len()
    }

    /// The dimension `n_d` of the largest proper subspace; Stiefel
    /// coordinates are `n x n_d` matrices.
    pub fn nd(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// Cumulative cut `n_i` for `i` in `0..=d+1`, with `n_0 = 0` and
    /// `n_{d+1} = n`.
    pub fn cut(&self, i: usize) -> usize {
        match i {
            0 => 0,
            i if i <= self.depth() => self.dims[i - 1],
            _ => self.ambient,
        }
    }

    /// Sizes `b_1, ..., b_{d+1}` of the diagonal blocks; they sum to `n`.
    pub fn block_sizes(&self) -> Vec<usize> {
        (1..=self.depth() + 1)
            .map(|i| self.cut(i) - self.cut(i - 1))
            .collect()
    }

    /// Column (or row) range of block `i`, `1`-based, `i` in `1..=d+1`.
    pub fn block_range(&self, i: usize) -> Range<usize> {
        self.cut(i - 1)..self.cut(i)
    }

    /// Manifold dimension: the number of free entries in the strictly
    /// upper-triangular block pattern, `sum over i < j of b_i * b_j`.
    pub fn dimension(&self) -> usize {
        let b = self.block_sizes();
        let mut dim = 0;
        for i in 0..b.len() {
            for j in (i + 1)..b.len() {
                dim += b[i] * b[j];
            }
        }
        dim
    }

    /// True when this is a Grassmannian (`d = 1`).
    pub fn is_grassmannian(&self) -> bool {
        self.depth() == 1
    }
}

impl fmt::Display for FlagSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Flag(")?;
        for (k, d) in self.dims.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ";{})", self.ambient)
    }
}
