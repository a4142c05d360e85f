//! Lowest eigenpairs of Hermitian positive-definite lattice operators by
//! shift-invert block Krylov iteration with Rayleigh–Ritz extraction.

use faer::{Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Factorization;
use crate::operator::SparseOperator;
use crate::scalar::{axpy, dot, norm, Scalar};

#[derive(Debug, Clone)]
pub struct EigenPair<T> {
    pub value: f64,
    /// Normalized so that `cell_area · Σ|v|² = 1`.
    pub vector: Vec<T>,
    /// `‖op·v − λv‖ / ‖v‖`
    pub residual_norm: f64,
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    pub tol: f64,
    /// Krylov block width; at least 3 so that near-degenerate pairs are
    /// resolved together.
    pub block_size: usize,
    /// Largest basis kept before restarting.
    pub max_basis: usize,
    pub max_restarts: usize,
    pub seed: u64,
    /// Relative gap below which neighbouring eigenvalues form a cluster.
    pub cluster_rel: f64,
    /// Operators up to this dimension are diagonalized densely.
    pub dense_below: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            block_size: 3,
            max_basis: 60,
            max_restarts: 40,
            seed: 0x5eed,
            cluster_rel: 1e-6,
            dense_below: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSolution<T> {
    pub pairs: Vec<EigenPair<T>>,
    /// Groups of indices whose eigenvalues lie within the cluster tolerance.
    pub clusters: Vec<Vec<usize>>,
    /// Number of factor solves performed.
    pub solves: usize,
}

impl<T> EigenSolution<T> {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    /// Whether eigenvalue `i` is separated from its neighbours.
    pub fn is_simple(&self, i: usize) -> bool {
        !self.clusters.iter().any(|c| c.len() > 1 && c.contains(&i))
    }

    pub fn multiplicity(&self, i: usize) -> usize {
        self.clusters
            .iter()
            .find(|c| c.contains(&i))
            .map_or(1, |c| c.len())
    }
}

/// The `count` smallest eigenpairs with default options.
pub fn smallest_eigenpairs<T: Scalar>(
    op: &SparseOperator<T>,
    count: usize,
    tol: f64,
) -> Result<Vec<EigenPair<T>>> {
    let opts = EigenOptions {
        tol,
        ..EigenOptions::default()
    };
    Ok(smallest_eigenpairs_with(op, count, &opts, None)?.pairs)
}

pub fn smallest_eigenpairs_with<T: Scalar>(
    op: &SparseOperator<T>,
    count: usize,
    opts: &EigenOptions,
    factor: Option<&Factorization<T>>,
) -> Result<EigenSolution<T>> {
    let n = op.dim();
    if count == 0 || count > n {
        return Err(Error::invalid(format!(
            "requested {count} eigenpairs of a {n}-dimensional operator"
        )));
    }
    let (pairs, solves) = if n <= opts.dense_below {
        (dense_pairs(op, count), 0)
    } else {
        let owned;
        let factor = match factor {
            Some(f) => f,
            None => {
                owned = Factorization::new(op)?;
                &owned
            }
        };
        krylov_pairs(op, factor, count, opts)?
    };
    let mut pairs = pairs;
    let area = op.cell_area();
    for p in &mut pairs {
        let s = 1.0 / (area.sqrt() * norm(&p.vector));
        for v in &mut p.vector {
            *v = v.scale_by(s);
        }
    }
    let clusters = clusters(&pairs, opts.cluster_rel);
    Ok(EigenSolution {
        pairs,
        clusters,
        solves,
    })
}

fn clusters<T>(pairs: &[EigenPair<T>], rel: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        match out.last_mut() {
            Some(last) if {
                let prev = pairs[*last.last().unwrap()].value;
                (p.value - prev).abs() < rel * prev.abs().max(p.value.abs())
            } =>
            {
                last.push(i)
            }
            _ => out.push(vec![i]),
        }
    }
    out
}

fn residual<T: Scalar>(op: &SparseOperator<T>, value: f64, v: &[T]) -> f64 {
    let hv = op.mul_vec(v);
    let r: f64 = hv
        .iter()
        .zip(v)
        .map(|(&a, &b)| (a - b.scale_by(value)).modulus_sq())
        .sum();
    r.sqrt() / norm(v)
}

fn dense_pairs<T: Scalar>(op: &SparseOperator<T>, count: usize) -> Vec<EigenPair<T>> {
    let n = op.dim();
    let mut m = Mat::<T>::zeros(n, n);
    for i in 0..n {
        for (j, v) in op.row(i) {
            m[(i, j)] = v;
        }
    }
    let (values, vectors) = hermitian_eigen(&m);
    (0..count)
        .map(|i| {
            let v: Vec<T> = (0..n).map(|r| vectors[(r, i)]).collect();
            EigenPair {
                value: values[i],
                residual_norm: residual(op, values[i], &v),
                vector: v,
            }
        })
        .collect()
}

/// Ascending eigenvalues and eigenvectors of a small Hermitian matrix.
fn hermitian_eigen<T: Scalar>(m: &Mat<T>) -> (Vec<f64>, Mat<T>) {
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .expect("dense Hermitian eigendecomposition");
    let s = eig.S();
    let values: Vec<f64> = (0..m.nrows()).map(|i| s[i].real_part()).collect();
    (values, eig.U().to_owned())
}

/// Orthogonalizes `w` against `basis` twice and normalizes it; `None` if it
/// is numerically dependent.
fn orthonormalize<T: Scalar>(basis: &[Vec<T>], mut w: Vec<T>) -> Option<Vec<T>> {
    let start = norm(&w);
    if start == 0.0 || !start.is_finite() {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, &w);
            axpy(-c, b, &mut w);
        }
    }
    let nrm = norm(&w);
    if nrm <= 1e-10 * start {
        return None;
    }
    for v in &mut w {
        *v = v.scale_by(1.0 / nrm);
    }
    Some(w)
}

fn krylov_pairs<T: Scalar>(
    op: &SparseOperator<T>,
    factor: &Factorization<T>,
    count: usize,
    opts: &EigenOptions,
) -> Result<(Vec<EigenPair<T>>, usize)> {
    let n = op.dim();
    let p = opts.block_size.max(3).max(count).min(n);
    let max_basis = opts.max_basis.max(3 * p).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut block: Vec<Vec<T>> = (0..p)
        .map(|_| (0..n).map(|_| T::sample(&mut rng)).collect())
        .collect();
    let mut solves = 0usize;
    let mut best = f64::INFINITY;

    for _restart in 0..opts.max_restarts {
        let mut basis: Vec<Vec<T>> = Vec::new();
        let mut images: Vec<Vec<T>> = Vec::new();
        let mut proj: Vec<Vec<T>> = Vec::new();
        let mut ritz: Option<(Vec<f64>, Mat<T>)> = None;
        loop {
            let before = basis.len();
            for w in block.drain(..) {
                if basis.len() >= max_basis {
                    break;
                }
                if let Some(v) = orthonormalize(&basis, w) {
                    let hv = op.mul_vec(&v);
                    // proj[i][j] = <v_i, H v_j>
                    let column: Vec<T> = basis.iter().map(|b| dot(b, &hv)).collect();
                    for (r, &c) in proj.iter_mut().zip(&column) {
                        r.push(c);
                    }
                    let mut row: Vec<T> = column.iter().map(|c| c.conjugate()).collect();
                    row.push(dot(&v, &hv));
                    proj.push(row);
                    basis.push(v);
                    images.push(hv);
                }
            }
            let m = basis.len();
            if m == before || m < count {
                break;
            }
            // proj[i][j] = <v_i, H v_j> up to rounding; symmetrize.
            let t = Mat::<T>::from_fn(m, m, |i, j| {
                let a = proj[i][j];
                let b = proj[j][i].conjugate();
                (a + b).scale_by(0.5)
            });
            let (values, vecs) = hermitian_eigen(&t);
            let mut worst: f64 = 0.0;
            for i in 0..count {
                let r = ritz_residual(&basis, &images, &vecs, i, values[i]);
                worst = worst.max(r);
            }
            best = best.min(worst);
            ritz = Some((values, vecs));
            if worst <= opts.tol {
                let (values, vecs) = ritz.take().unwrap();
                let pairs = (0..count)
                    .map(|i| {
                        let v = combine(&basis, &vecs, i);
                        EigenPair {
                            value: values[i],
                            residual_norm: residual(op, values[i], &v),
                            vector: v,
                        }
                    })
                    .collect();
                return Ok((pairs, solves));
            }
            if m + p > max_basis {
                break;
            }
            let mut next: Vec<Vec<T>> = basis[m - (m - before).min(p)..].to_vec();
            factor.solve_columns(&mut next);
            solves += next.len();
            block = next;
        }
        // Restart from the current best Ritz vectors.
        block = match ritz {
            Some((_, vecs)) => (0..p.min(basis.len())).map(|i| combine(&basis, &vecs, i)).collect(),
            None => (0..p)
                .map(|_| (0..n).map(|_| T::sample(&mut rng)).collect())
                .collect(),
        };
        let mut refreshed = block.clone();
        factor.solve_columns(&mut refreshed);
        solves += refreshed.len();
        block.extend(refreshed);
    }
    Err(Error::NoConvergence {
        iterations: solves,
        best_residual: best,
    })
}

fn combine<T: Scalar>(basis: &[Vec<T>], vecs: &Mat<T>, col: usize) -> Vec<T> {
    let n = basis[0].len();
    let mut x = vec![T::from_real(0.0); n];
    for (k, b) in basis.iter().enumerate() {
        axpy(vecs[(k, col)], b, &mut x);
    }
    x
}

fn ritz_residual<T: Scalar>(
    basis: &[Vec<T>],
    images: &[Vec<T>],
    vecs: &Mat<T>,
    col: usize,
    value: f64,
) -> f64 {
    let n = basis[0].len();
    let mut r = vec![T::from_real(0.0); n];
    for k in 0..basis.len() {
        let c = vecs[(k, col)];
        axpy(c, &images[k], &mut r);
        axpy(c.scale_by(-value), &basis[k], &mut r);
    }
    norm(&r)
}

/// Rotates `vector` by a unit factor so that the weighted overlap
/// `area · Σ twist_i v_i conj(reference_i)` is real and positive.
pub fn align_phase<T: Scalar>(
    vector: &mut [T],
    reference: &[T],
    twist: Option<&[T]>,
    area: f64,
) -> Result<T> {
    if vector.len() != reference.len() {
        return Err(Error::ShapeMismatch {
            expected: reference.len(),
            got: vector.len(),
        });
    }
    let mut overlap = T::from_real(0.0);
    for i in 0..vector.len() {
        let w = twist.map_or(T::from_real(1.0), |t| t[i]);
        overlap += w * vector[i] * reference[i].conjugate();
    }
    overlap = overlap.scale_by(area);
    let size = overlap.modulus();
    if size == 0.0 {
        return Err(Error::invalid("eigenvector is orthogonal to the reference"));
    }
    let rot = overlap.conjugate().scale_by(1.0 / size);
    for v in vector.iter_mut() {
        *v *= rot;
    }
    Ok(overlap * rot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::grid::{build_grid, DomainSpec};
    use crate::operator::{assemble_ab_laplacian, assemble_laplacian, SparseOperator, Symmetry};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn square_matches_lattice_closed_form() {
        let h = 1.0 / 32.0;
        let g = build_grid(&DomainSpec::unit_square(), h).unwrap();
        let op = assemble_laplacian(&g).unwrap();
        let sol = smallest_eigenpairs_with(&op, 3, &EigenOptions::default(), None).unwrap();
        let lattice = |p: f64, q: f64| (2.0 / (h * h)) * (2.0 - (p * PI * h).cos() - (q * PI * h).cos());
        assert!((sol.pairs[0].value - lattice(1.0, 1.0)).abs() < 1e-8 * lattice(1.0, 1.0));
        assert!((sol.pairs[1].value - lattice(1.0, 2.0)).abs() < 1e-7 * lattice(1.0, 2.0));
        assert!((sol.pairs[2].value - lattice(1.0, 2.0)).abs() < 1e-7 * lattice(1.0, 2.0));
        assert_eq!(sol.multiplicity(1), 2);
        assert!(sol.is_simple(0));
        for p in &sol.pairs {
            assert!(p.residual_norm <= 1e-8);
            let l2: f64 = p.vector.iter().map(|v| v * v).sum::<f64>() * h * h;
            assert!((l2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_matches_dense() {
        let g = build_grid(&DomainSpec::disk(Point::ORIGIN, 0.5), 1.0 / 24.0).unwrap();
        let op = assemble_ab_laplacian(&g, Point::new(0.1 + 1.0 / 48.0, 0.05 + 1.0 / 48.0)).unwrap();
        let opts = EigenOptions {
            dense_below: 0,
            ..Default::default()
        };
        let sparse = smallest_eigenpairs_with(&op, 4, &opts, None).unwrap();
        let dense = smallest_eigenpairs_with(
            &op,
            4,
            &EigenOptions {
                dense_below: usize::MAX,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        for (a, b) in sparse.pairs.iter().zip(&dense.pairs) {
            assert!((a.value - b.value).abs() < 1e-9 * b.value);
            assert!(a.residual_norm < 1e-8);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let g = build_grid(&DomainSpec::unit_disk(), 1.0 / 16.0).unwrap();
        let op = assemble_ab_laplacian(&g, Point::new(0.3 + 1.0 / 32.0, 1.0 / 32.0)).unwrap();
        let a = smallest_eigenpairs_with(&op, 2, &EigenOptions::default(), None).unwrap();
        let b = smallest_eigenpairs_with(&op, 2, &EigenOptions::default(), None).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(a.pairs[0].vector, b.pairs[0].vector);
    }

    #[test]
    fn nested_rectangles_are_monotone() {
        let h = 1.0 / 16.0;
        let mut last = f64::INFINITY;
        for w in [1.0, 1.25, 1.5, 2.0] {
            let g = build_grid(&DomainSpec::rectangle(Point::ORIGIN, Point::new(w, 1.0)), h).unwrap();
            let op = assemble_laplacian(&g).unwrap();
            let v = smallest_eigenpairs(&op, 1, 1e-8).unwrap()[0].value;
            assert!(v <= last + 1e-9);
            last = v;
        }
    }

    #[test]
    fn zero_count_rejected() {
        let op = SparseOperator::from_rows(vec![vec![(0, 1.0)]], Symmetry::Symmetric);
        assert!(smallest_eigenpairs(&op, 0, 1e-8).is_err());
    }

    #[test]
    fn phase_alignment() {
        let reference = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        let mut v: Vec<Complex64> = reference.iter().map(|z| z * Complex64::from_polar(1.0, 2.1)).collect();
        let overlap = align_phase(&mut v, &reference, None, 1.0).unwrap();
        assert!(overlap.im.abs() < 1e-15 && overlap.re > 0.0);
        for (a, b) in v.iter().zip(&reference) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
