//! Sparse Cholesky factorizations and positive-definite solves.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::operator::SparseOperator;
use crate::scalar::{norm, Scalar};

/// Relative residual required from [`solve_pd`].
pub const LINEAR_TOL: f64 = 1e-10;

/// Fill-reducing ordering and elimination tree of a sparsity pattern;
/// reusable across operators with identical structure.
#[derive(Debug, Clone)]
pub struct SymbolicFactor {
    inner: SymbolicLlt<usize>,
    n: usize,
}

impl SymbolicFactor {
    pub fn analyze<T: Scalar>(op: &SparseOperator<T>) -> Result<Self> {
        let mat = op.to_faer()?;
        let inner = SymbolicLlt::try_new(mat.symbolic(), Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(SymbolicFactor { inner, n: op.dim() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// Numeric Cholesky factor of a Hermitian positive-definite operator.
pub struct Factorization<T: Scalar> {
    llt: Llt<usize, T>,
    n: usize,
}

impl<T: Scalar> Factorization<T> {
    pub fn new(op: &SparseOperator<T>) -> Result<Self> {
        let symbolic = SymbolicFactor::analyze(op)?;
        Self::with_symbolic(&symbolic, op)
    }

    pub fn with_symbolic(symbolic: &SymbolicFactor, op: &SparseOperator<T>) -> Result<Self> {
        if symbolic.n != op.dim() {
            return Err(Error::ShapeMismatch {
                expected: symbolic.n,
                got: op.dim(),
            });
        }
        let mat = op.to_faer()?;
        let llt = Llt::try_new_with_symbolic(symbolic.inner.clone(), mat.as_ref(), Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Factorization { llt, n: op.dim() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut m = Mat::<T>::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(m.as_mut());
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }

    /// Solves for every column of `rhs` in place.
    pub fn solve_columns(&self, rhs: &mut [Vec<T>]) {
        if rhs.is_empty() {
            return;
        }
        let mut m = Mat::<T>::from_fn(self.n, rhs.len(), |i, j| rhs[j][i]);
        self.llt.solve_in_place(m.as_mut());
        for (j, col) in rhs.iter_mut().enumerate() {
            for (i, v) in col.iter_mut().enumerate() {
                *v = m[(i, j)];
            }
        }
    }
}

fn relative_residual<T: Scalar>(op: &SparseOperator<T>, x: &[T], b: &[T]) -> (Vec<T>, f64) {
    let ax = op.mul_vec(x);
    let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let scale = norm(b).max(f64::MIN_POSITIVE);
    let rel = norm(&r) / scale;
    (r, rel)
}

/// Solves `op · x = load` for a positive-definite operator, with up to three
/// steps of iterative refinement.
pub fn solve_pd<T: Scalar>(op: &SparseOperator<T>, load: &[T]) -> Result<Vec<T>> {
    let factor = Factorization::new(op)?;
    solve_pd_with(op, &factor, load)
}

pub fn solve_pd_with<T: Scalar>(
    op: &SparseOperator<T>,
    factor: &Factorization<T>,
    load: &[T],
) -> Result<Vec<T>> {
    if load.len() != op.dim() {
        return Err(Error::ShapeMismatch {
            expected: op.dim(),
            got: load.len(),
        });
    }
    if norm(load) == 0.0 {
        return Ok(vec![T::from_real(0.0); op.dim()]);
    }
    let mut x = factor.solve(load);
    let mut history = Vec::new();
    for _ in 0..4 {
        let (r, rel) = relative_residual(op, &x, load);
        history.push(rel);
        if !rel.is_finite() {
            break;
        }
        if rel <= LINEAR_TOL {
            return Ok(x);
        }
        let dx = factor.solve(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    Err(Error::LinearBreakdown {
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}
