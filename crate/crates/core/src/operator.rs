//! Sparse lattice operators: the magnetic Laplacian in the Peierls gauge
//! (complex) or in a cut gauge (real), the free Laplacian, and the energy
//! matrix of mixed Dirichlet/Neumann problems.

use std::io::Write;
use std::path::Path;

use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::{branched_angle, peierls_phase, subtended_angle, Point};
use crate::grid::{Grid, LinkTarget, Shape, DIRECTIONS};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Hermitian,
    Symmetric,
}

/// Gauge in which an operator's unknowns are expressed; needed to transport
/// boundary values onto lattice nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gauge {
    /// No magnetic field.
    Free,
    /// Edge phases are the exact line integrals of the potential of `pole`.
    Peierls { pole: Point },
    /// Real representation with sign flips across a cut ray.
    Cut(CutGauge),
}

/// Real gauge for the half-flux potential: the angle around `pole` is
/// taken on the branch starting at `direction`, so the cut is the ray from
/// the pole in that direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutGauge {
    pub pole: Point,
    pub direction: f64,
}

impl CutGauge {
    pub fn new(pole: Point, direction: f64) -> Self {
        CutGauge { pole, direction }
    }

    pub fn angle(&self, x: Point) -> Result<f64> {
        Ok(branched_angle(x - self.pole, self.direction)?.value)
    }

    /// Unit factor `e^{iθ(x)/2}` mapping a cut-gauge value at `x` to the
    /// Peierls gauge.
    pub fn phase(&self, x: Point) -> Result<Complex64> {
        Ok(Complex64::from_polar(1.0, 0.5 * self.angle(x)?))
    }

    /// ±1 carried by the edge from `x` to `y` in this gauge: −1 exactly when
    /// the segment crosses the cut.
    pub fn link_sign(&self, x: Point, y: Point) -> Result<f64> {
        let delta = subtended_angle(x, y, self.pole)?;
        let jump = self.angle(y)? - self.angle(x)?;
        Ok(if (delta - jump).abs() > std::f64::consts::PI {
            -1.0
        } else {
            1.0
        })
    }

    pub fn to_peierls(&self, grid: &Grid, v: &[f64]) -> Result<Vec<Complex64>> {
        check_len(grid.len(), v.len())?;
        grid.points()
            .zip(v)
            .map(|(x, &val)| Ok(self.phase(x)? * val))
            .collect()
    }

    /// Inverse of [`CutGauge::to_peierls`]; fails if the field is not real
    /// in this gauge up to `tol`.
    pub fn from_peierls(&self, grid: &Grid, u: &[Complex64], tol: f64) -> Result<Vec<f64>> {
        check_len(grid.len(), u.len())?;
        grid.points()
            .zip(u)
            .map(|(x, &val)| {
                let z = self.phase(x)?.conj() * val;
                f64::from_complex(z, tol)
                    .ok_or_else(|| Error::invalid("field is not real in the cut gauge"))
            })
            .collect()
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, got })
    }
}

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone)]
pub struct SparseOperator<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    symmetry: Symmetry,
    gauge: Gauge,
    /// Multiplier of an edge weight in a coupling (`1/h²` for the
    /// Laplacian, 1 for energy matrices).
    coupling_scale: f64,
    /// Quadrature weight of one node in the mesh 2-norm.
    cell_area: f64,
}

impl<T: Scalar> SparseOperator<T> {
    /// Builds from per-row `(column, value)` lists; duplicate columns are
    /// summed and columns sorted.
    pub fn from_rows(rows: Vec<Vec<(usize, T)>>, symmetry: Symmetry) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseOperator {
            n,
            row_ptr,
            cols,
            vals,
            symmetry,
            gauge: Gauge::Free,
            coupling_scale: 1.0,
            cell_area: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_area
    }

    pub fn coupling_scale(&self) -> f64 {
        self.coupling_scale
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map_or(T::from_real(0.0), |(_, v)| v)
    }

    /// `y = A x`
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::from_real(0.0); self.n];
        self.apply(x, &mut y);
        y
    }

    /// Whether `A[i][j] = conj(A[j][i])` holds exactly for every stored entry.
    pub fn is_hermitian(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.entry(j, i) == v.conjugate()))
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::from_real(0.0); self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, T>> {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                trip.push(Triplet::new(i, j, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &trip)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }

    /// Writes one `row col real imag` line per stored entry (0-based).
    pub fn write_coordinates(&self, out: &mut impl Write) -> std::io::Result<()> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let z = v.to_complex();
                writeln!(out, "{i} {j} {:.17e} {:.17e}", z.re, z.im)?;
            }
        }
        Ok(())
    }

    pub fn dump_coordinates(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_coordinates(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    fn with_meta(mut self, gauge: Gauge, coupling_scale: f64, cell_area: f64) -> Self {
        self.gauge = gauge;
        self.coupling_scale = coupling_scale;
        self.cell_area = cell_area;
        self
    }
}

/// Controls pole placement checks for [`assemble_ab_laplacian_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PoleOptions {
    /// Accept a pole outside the domain (the operator is then gauge
    /// equivalent to the free Laplacian).
    pub allow_outside: bool,
}

fn check_pole(grid: &Grid, pole: Point, opts: PoleOptions) -> Result<()> {
    if !pole.is_finite() {
        return Err(Error::invalid("pole must be finite"));
    }
    if !grid.strictly_in_plaquette(pole) {
        return Err(Error::PoleOnLattice(pole.x1, pole.x2));
    }
    if !opts.allow_outside && !grid.spec().contains(pole) {
        return Err(Error::PoleOutside(pole.x1, pole.x2));
    }
    Ok(())
}

/// Generic 5-point assembly: `coupling(x, y)` is the transport factor from
/// node `x` into row `y`.
fn assemble<T: Scalar>(
    grid: &Grid,
    scale: f64,
    symmetry: Symmetry,
    mut coupling: impl FnMut(Point, Point) -> Result<T>,
) -> Result<SparseOperator<T>> {
    let mut rows = Vec::with_capacity(grid.len());
    for y in 0..grid.len() {
        let py = grid.point(y);
        let mut row = Vec::with_capacity(5);
        let mut diag = 0.0;
        for link in grid.links(y) {
            match link.target {
                LinkTarget::Node(x) => {
                    diag += link.weight;
                    let c = coupling(grid.point(x), py)?;
                    row.push((x, -c.scale_by(link.weight * scale)));
                }
                LinkTarget::Wall { fraction, .. } => diag += link.weight / fraction,
                LinkTarget::Free => {}
            }
        }
        row.push((y, T::from_real(diag * scale)));
        rows.push(row);
    }
    Ok(SparseOperator::from_rows(rows, symmetry))
}

/// Magnetic Laplacian `(i∇ + A_pole)²` with exact Peierls phases on every
/// edge, Dirichlet nodes eliminated.
pub fn assemble_ab_laplacian(grid: &Grid, pole: Point) -> Result<SparseOperator<Complex64>> {
    assemble_ab_laplacian_with(grid, pole, PoleOptions::default())
}

pub fn assemble_ab_laplacian_with(
    grid: &Grid,
    pole: Point,
    opts: PoleOptions,
) -> Result<SparseOperator<Complex64>> {
    check_pole(grid, pole, opts)?;
    let h = grid.h();
    let op = assemble(grid, 1.0 / (h * h), Symmetry::Hermitian, |x, y| {
        peierls_phase(x, y, pole)
    })?;
    Ok(op.with_meta(Gauge::Peierls { pole }, 1.0 / (h * h), h * h))
}

/// The same operator written in a real cut gauge; unitarily equivalent to
/// [`assemble_ab_laplacian`] via [`CutGauge::to_peierls`].
pub fn assemble_ab_laplacian_real(
    grid: &Grid,
    gauge: CutGauge,
    opts: PoleOptions,
) -> Result<SparseOperator<f64>> {
    check_pole(grid, gauge.pole, opts)?;
    let h = grid.h();
    let op = assemble(grid, 1.0 / (h * h), Symmetry::Symmetric, |x, y| {
        gauge.link_sign(x, y)
    })?;
    Ok(op.with_meta(Gauge::Cut(gauge), 1.0 / (h * h), h * h))
}

/// Standard 5-point Dirichlet Laplacian.
pub fn assemble_laplacian(grid: &Grid) -> Result<SparseOperator<f64>> {
    let h = grid.h();
    let op = assemble(grid, 1.0 / (h * h), Symmetry::Symmetric, |_, _| Ok(1.0))?;
    Ok(op.with_meta(Gauge::Free, 1.0 / (h * h), h * h))
}

/// Data on the free part of the flat boundary, given through its exact cell
/// moments so singular but integrable data can be integrated in closed form.
pub trait NeumannData {
    /// `(∫_a^b g, ∫_a^b x g)`
    fn moments(&self, a: f64, b: f64) -> (f64, f64);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroData;

impl NeumannData for ZeroData {
    fn moments(&self, _a: f64, _b: f64) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// `g(x₁) = (k/2) x₁^{k/2−1}` on `0 < x₁ < 1`, zero elsewhere: the normal
/// derivative of `ψ_k` along the free part of the axis.
#[derive(Debug, Clone, Copy)]
pub struct SlitData {
    pub k: usize,
    pub factor: f64,
}

impl SlitData {
    pub fn new(k: usize) -> Result<Self> {
        crate::geom::check_odd(k)?;
        Ok(SlitData { k, factor: 1.0 })
    }
}

impl NeumannData for SlitData {
    fn moments(&self, a: f64, b: f64) -> (f64, f64) {
        let lo = a.max(0.0);
        let hi = b.min(1.0);
        if hi <= lo {
            return (0.0, 0.0);
        }
        let p = 0.5 * self.k as f64;
        // ∫ g = x^{p}, ∫ x g = p/(p+1) x^{p+1}
        let m0 = hi.powf(p) - lo.powf(p);
        let m1 = p / (p + 1.0) * (hi.powf(p + 1.0) - lo.powf(p + 1.0));
        (self.factor * m0, self.factor * m1)
    }
}

/// Any integrable function, integrated with 8-point Gauss–Legendre rules.
pub struct FnData<F: Fn(f64) -> f64>(pub F);

impl<F: Fn(f64) -> f64> NeumannData for FnData<F> {
    fn moments(&self, a: f64, b: f64) -> (f64, f64) {
        const X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
        const W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        for (x, w) in X.iter().zip(W) {
            for s in [-1.0, 1.0] {
                let t = mid + s * half * x;
                let g = (self.0)(t);
                m0 += w * g;
                m1 += w * t * g;
            }
        }
        (half * m0, half * m1)
    }
}

/// Dirichlet-energy matrix `K` (`uᵀKu = ∫|∇u|²` for the piecewise-linear
/// interpolant on the right-triangle mesh) and load `f_i = ∫ g φ_i` over the
/// free part of the flat boundary, for half-disk grids.
pub fn assemble_mixed_laplacian(
    grid: &Grid,
    data: &dyn NeumannData,
) -> Result<(SparseOperator<f64>, Vec<f64>)> {
    let radius = match grid.spec().shape {
        Shape::HalfDisk { radius } => radius,
        _ => {
            return Err(Error::InconsistentTags(
                "mixed problems are posed on half-disk grids".into(),
            ))
        }
    };
    let op = assemble(grid, 1.0, Symmetry::Symmetric, |_, _| Ok(1.0))?;
    let op = op.with_meta(Gauge::Free, 1.0, grid.h() * grid.h());
    let h = grid.h();
    let mut load = vec![0.0; grid.len()];
    for (n, f) in load.iter_mut().enumerate() {
        if !grid.is_free(n) {
            continue;
        }
        let x = grid.point(n).x1;
        let (lo, hi) = ((x - h).max(-radius), (x + h).min(radius));
        // Rising half of the hat: (t − (x − h))/h; falling half: (x + h − t)/h.
        let (a0, a1) = data.moments(lo, x);
        let (b0, b1) = data.moments(x, hi);
        *f = (a1 - (x - h) * a0) / h + ((x + h) * b0 - b1) / h;
    }
    Ok((op, load))
}

/// Right-hand side imposing boundary values `g` (given in the physical,
/// i.e. Peierls, gauge) at the wall points of the grid.
pub fn dirichlet_lift<T: Scalar>(
    grid: &Grid,
    op: &SparseOperator<T>,
    g: impl Fn(Point) -> Complex64,
) -> Result<Vec<T>> {
    check_len(grid.len(), op.dim())?;
    let scale = op.coupling_scale();
    let mut load = vec![T::from_real(0.0); grid.len()];
    for (y, slot) in load.iter_mut().enumerate() {
        let py = grid.point(y);
        let mut acc = Complex64::new(0.0, 0.0);
        for link in grid.links(y) {
            if let LinkTarget::Wall { point, fraction } = link.target {
                let value = g(point);
                if value == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let transported = match op.gauge() {
                    Gauge::Free => value,
                    Gauge::Peierls { pole } => peierls_phase(point, py, pole)? * value,
                    Gauge::Cut(cut) => cut.link_sign(point, py)? * cut.phase(point)?.conj() * value,
                };
                acc += transported * (link.weight * scale / fraction);
            }
        }
        *slot = T::from_complex(acc, 1e-9)
            .ok_or_else(|| Error::invalid("boundary data is not real in the operator's gauge"))?;
    }
    Ok(load)
}

/// Neighbour unknown in lattice direction `dir` (0 = east, 1 = north, ...).
pub fn neighbour(grid: &Grid, idx: usize, dir: usize) -> Option<usize> {
    let (i, j) = grid.lattice_index(idx);
    let (di, dj) = DIRECTIONS[dir];
    grid.unknown_at(i + di, j + dj)
}
