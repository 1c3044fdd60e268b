//! Dense complex linear algebra on small finite-dimensional Hilbert spaces.
//!
//! Everything here is sized for desk-scale dimensions (a few up to ~150).
//! Matrices are dense and row-major; there is no sparse representation.
//! All operations are pure functions of their inputs and freely shareable
//! across threads.

use alloc::vec;
use alloc::vec::Vec;
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I_UNIT: C64 = C64::new(0.0, 1.0);

/// Default tolerance for structural checks (Hermiticity, idempotence,
/// completeness). Caller-overridable where it matters.
pub const STRUCT_TOL: f64 = 1e-10;

/// Selects a tensor factor of a bipartite space `H_first (x) H_second`,
/// flattened row-major with the second factor as the fast index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl core::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl core::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        CMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from rows of real entries.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        CMatrix::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in add");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        CMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in sub");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        CMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        let data = self.data.iter().map(|a| a * s).collect();
        CMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale_re(&self, s: f64) -> CMatrix {
        self.scale(C64::new(s, 0.0))
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in mul");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Hermitian adjoint (conjugate transpose).
    pub fn dagger(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Entrywise complex conjugate (the antilinear conjugation in the
    /// standard basis).
    pub fn conj(&self) -> CMatrix {
        let data = self.data.iter().map(|z| z.conj()).collect();
        CMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).fold(ZERO, |acc, z| acc + z)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).fold(0.0, |a, b| a + b).sqrt()
    }

    /// `||A - A^dag||_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut d = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn anticommutator(&self, other: &CMatrix) -> CMatrix {
        self.mul(other).add(&other.mul(self))
    }

    pub fn apply(&self, v: &Ket) -> Ket {
        assert_eq!(self.cols, v.dim(), "shape mismatch in apply");
        let mut out = vec![ZERO; self.rows];
        for i in 0..self.rows {
            let mut acc = ZERO;
            for j in 0..self.cols {
                acc += self[(i, j)] * v.amp()[j];
            }
            out[i] = acc;
        }
        Ket::new(out)
    }

    /// Frobenius inner product `Tr(A^dag B)`.
    pub fn frobenius_inner(&self, other: &CMatrix) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .fold(ZERO, |acc, z| acc + z)
    }
}

/// State vector on a finite-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amp: Vec<C64>,
}

impl Ket {
    pub fn new(amp: Vec<C64>) -> Self {
        assert!(!amp.is_empty(), "ket must have positive dimension");
        Ket { amp }
    }

    /// Standard basis vector `|i>`.
    pub fn basis(dim: usize, i: usize) -> Self {
        assert!(i < dim);
        let mut amp = vec![ZERO; dim];
        amp[i] = ONE;
        Ket { amp }
    }

    pub fn from_real(amp: &[f64]) -> Self {
        Ket::new(amp.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.amp.len()
    }

    pub fn amp(&self) -> &[C64] {
        &self.amp
    }

    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).fold(0.0, |a, b| a + b).sqrt()
    }

    /// Checks `| ||psi|| - 1 | <= tol` (default flag tolerance is 1e-12).
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Ket> {
        let n = self.norm();
        if n <= 1e-300 {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Ket {
        Ket::new(self.amp.iter().map(|z| z * s).collect())
    }

    pub fn add(&self, other: &Ket) -> Ket {
        assert_eq!(self.dim(), other.dim());
        Ket::new(self.amp.iter().zip(&other.amp).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Ket) -> Ket {
        assert_eq!(self.dim(), other.dim());
        Ket::new(self.amp.iter().zip(&other.amp).map(|(a, b)| a - b).collect())
    }

    /// `<self|other>` (antilinear in `self`).
    pub fn inner(&self, other: &Ket) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| a.conj() * b)
            .fold(ZERO, |acc, z| acc + z)
    }

    /// Rank-one operator `|self><other|`.
    pub fn outer(&self, other: &Ket) -> CMatrix {
        CMatrix::from_fn(self.dim(), other.dim(), |i, j| self.amp[i] * other.amp[j].conj())
    }

    /// Tensor product, `self` on the slow (first) factor.
    pub fn tensor(&self, other: &Ket) -> Ket {
        let mut amp = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amp {
            for b in &other.amp {
                amp.push(a * b);
            }
        }
        Ket::new(amp)
    }

    /// Expectation `<psi|A|psi>`.
    pub fn expect(&self, a: &CMatrix) -> C64 {
        self.inner(&a.apply(self))
    }

    /// Max entrywise distance to another ket.
    pub fn max_abs_diff(&self, other: &Ket) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Reshapes a ket on `H_first (x) H_second` into the `d1 x d2` map
/// `psi~ : H_second -> H_first` with `psi~[i][k] = psi[i*d2 + k]`.
///
/// With the standard-basis conjugation this realises the correspondence
/// `(E (x) 1) psi <-> E psi~` and `(1 (x) P) psi <-> psi~ P^T`, and
/// `Tr_second(psi psi^dag) = psi~ psi~^dag`.
pub fn ket_as_map(psi: &Ket, dims: (usize, usize)) -> Result<CMatrix> {
    let (d1, d2) = dims;
    if psi.dim() != d1 * d2 {
        return Err(Error::DimensionMismatch { expected: d1 * d2, got: psi.dim() });
    }
    Ok(CMatrix::from_fn(d1, d2, |i, k| psi.amp()[i * d2 + k]))
}

/// Inverse of [`ket_as_map`].
pub fn map_as_ket(m: &CMatrix) -> Ket {
    let mut amp = Vec::with_capacity(m.rows() * m.cols());
    for i in 0..m.rows() {
        for k in 0..m.cols() {
            amp.push(m[(i, k)]);
        }
    }
    Ket::new(amp)
}

/// Kronecker product; `a` indexes the slow (first) factor.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..b.rows() {
                for l in 0..b.cols() {
                    out[(i * b.rows() + k, j * b.cols() + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Partial trace over one factor of `H_first (x) H_second`.
///
/// Preserves the trace and positivity of the input.
pub fn partial_trace(a: &CMatrix, dims: (usize, usize), keep: Subsystem) -> Result<CMatrix> {
    let (d1, d2) = dims;
    if !a.is_square() || a.rows() != d1 * d2 {
        return Err(Error::DimensionMismatch { expected: d1 * d2, got: a.rows() });
    }
    match keep {
        Subsystem::First => {
            let mut out = CMatrix::zeros(d1, d1);
            for i in 0..d1 {
                for j in 0..d1 {
                    let mut acc = ZERO;
                    for k in 0..d2 {
                        acc += a[(i * d2 + k, j * d2 + k)];
                    }
                    out[(i, j)] = acc;
                }
            }
            Ok(out)
        }
        Subsystem::Second => {
            let mut out = CMatrix::zeros(d2, d2);
            for k in 0..d2 {
                for l in 0..d2 {
                    let mut acc = ZERO;
                    for i in 0..d1 {
                        acc += a[(i * d2 + k, i * d2 + l)];
                    }
                    out[(k, l)] = acc;
                }
            }
            Ok(out)
        }
    }
}

/// Partial transpose on the second factor: `A (x) B -> A (x) B^T`.
/// Applying it twice returns the input.
pub fn partial_transpose(a: &CMatrix, dims: (usize, usize)) -> Result<CMatrix> {
    let (d1, d2) = dims;
    if !a.is_square() || a.rows() != d1 * d2 {
        return Err(Error::DimensionMismatch { expected: d1 * d2, got: a.rows() });
    }
    let mut out = CMatrix::zeros(d1 * d2, d1 * d2);
    for i in 0..d1 {
        for j in 0..d1 {
            for k in 0..d2 {
                for l in 0..d2 {
                    out[(i * d2 + l, j * d2 + k)] = a[(i * d2 + k, j * d2 + l)];
                }
            }
        }
    }
    Ok(out)
}

/// Orthogonal projector, validated Hermitian and idempotent on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    mat: CMatrix,
}

impl Projector {
    pub fn new(mat: CMatrix, tol: f64) -> Result<Self> {
        assert!(mat.is_square(), "projector must be square");
        let herm = mat.hermiticity_defect();
        if herm > tol {
            return Err(Error::NotProjector { defect: herm });
        }
        let idem = mat.mul(&mat).sub(&mat).max_abs();
        if idem > tol {
            return Err(Error::NotProjector { defect: idem });
        }
        Ok(Projector { mat })
    }

    pub fn zero(dim: usize) -> Self {
        Projector { mat: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Projector { mat: CMatrix::identity(dim) }
    }

    /// Projector onto the span of an orthonormal frame.
    pub fn from_frame(frame: &[Ket]) -> Result<Self> {
        assert!(!frame.is_empty());
        let dim = frame[0].dim();
        let mut mat = CMatrix::zeros(dim, dim);
        for v in frame {
            mat = mat.add(&v.outer(v));
        }
        Projector::new(mat, STRUCT_TOL)
    }

    /// Rank-one projector `|v><v| / <v|v>`.
    pub fn onto(v: &Ket) -> Result<Self> {
        let v = v.normalized()?;
        Projector::new(v.outer(&v), STRUCT_TOL)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// Rank as the rounded trace.
    pub fn rank(&self) -> usize {
        let t = self.mat.trace().re;
        (t + 0.5) as usize
    }

    /// `I - P`.
    pub fn complement(&self) -> Projector {
        Projector { mat: CMatrix::identity(self.dim()).sub(&self.mat) }
    }

    /// An orthonormal basis of the range, from the spectral decomposition.
    pub fn range_basis(&self) -> Vec<Ket> {
        let eig = eig_hermitian(&self.mat, STRUCT_TOL).expect("projector is Hermitian");
        eig.eigenvalues
            .iter()
            .zip(eig.eigenvectors)
            .filter(|(l, _)| **l > 0.5)
            .map(|(_, v)| v)
            .collect()
    }
}

/// Spectral decomposition of a Hermitian matrix: eigenvalues ascending,
/// eigenvectors orthonormal.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Ket>,
}

impl SpectralDecomposition {
    /// `sum_i lambda_i |v_i><v_i|`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.eigenvectors[0].dim();
        let mut out = CMatrix::zeros(n, n);
        for (l, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            out = out.add(&v.outer(v).scale_re(*l));
        }
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Errors if the input fails the Hermiticity check at `tol`.
pub fn eig_hermitian(a: &CMatrix, tol: f64) -> Result<SpectralDecomposition> {
    assert!(a.is_square(), "eigendecomposition of a non-square matrix");
    let defect = a.hermiticity_defect();
    if defect > tol {
        return Err(Error::NotHermitian { defect });
    }
    let n = a.rows();
    // Symmetrize away the sub-tolerance asymmetry.
    let mut m = CMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let mut v = CMatrix::identity(n);
    let scale = m.max_abs().max(1e-300);
    let conv = 1e-15 * scale;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[(i, j)].norm());
            }
        }
        if off <= conv {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                // Unit phase u with apq * conj(u) real; then a real rotation.
                let u = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U restricted to the (p,q) plane:
                //   U[p][p] = c          U[p][q] = s
                //   U[q][p] = -conj(u)s  U[q][q] = conj(u)c
                let ubar = u.conj();
                // Columns: M <- M U, V <- V U.
                for i in 0..n {
                    let mp = m[(i, p)];
                    let mq = m[(i, q)];
                    m[(i, p)] = mp * c - mq * (ubar * s);
                    m[(i, q)] = mp * s + mq * (ubar * c);
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = vp * c - vq * (ubar * s);
                    v[(i, q)] = vp * s + vq * (ubar * c);
                }
                // Rows: M <- U^dag M.
                for j in 0..n {
                    let mp = m[(p, j)];
                    let mq = m[(q, j)];
                    m[(p, j)] = mp * c - mq * (u * s);
                    m[(q, j)] = mp * s + mq * (u * c);
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).expect("finite eigenvalues"));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[(i, i)].re).collect();
    let eigenvectors: Vec<Ket> = order
        .iter()
        .map(|&col| Ket::new((0..n).map(|row| v[(row, col)]).collect()))
        .collect();
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// Eigenvalue threshold below 2 accepted as membership of the intersection
/// eigenspace of `P + Q`. The spectrum of `P + Q` lies in `[0, 2]` and the
/// gap below 2 is bounded away for non-intersecting subspaces at these
/// dimensions.
const MEET_EIG2_TOL: f64 = 1e-8;

/// Largest projector `R` with `R <= P` and `R <= Q`, computed as the
/// projector onto the eigenvalue-2 eigenspace of `P + Q`.
///
/// An empty intersection returns the zero projector.
pub fn meet(p: &Projector, q: &Projector, tol: f64) -> Result<Projector> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    let sum = p.matrix().add(q.matrix());
    let eig = eig_hermitian(&sum, tol.max(STRUCT_TOL))?;
    let frame: Vec<Ket> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors)
        .filter(|(l, _)| **l >= 2.0 - MEET_EIG2_TOL)
        .map(|(_, v)| v)
        .collect();
    if frame.is_empty() {
        return Ok(Projector::zero(p.dim()));
    }
    Projector::from_frame(&frame)
}

/// Smallest projector above both inputs: `join = I - meet(I-P, I-Q)`,
/// the projector onto the closed linear span of the two ranges.
pub fn join(p: &Projector, q: &Projector, tol: f64) -> Result<Projector> {
    let m = meet(&p.complement(), &q.complement(), tol)?;
    Ok(m.complement())
}

/// `P <= Q` as non-negativity of `Q - P` (min eigenvalue >= -tol).
pub fn ordering_le(p: &Projector, q: &Projector, tol: f64) -> bool {
    assert_eq!(p.dim(), q.dim(), "ordering_le dimension mismatch");
    let diff = q.matrix().sub(p.matrix());
    let eig = eig_hermitian(&diff, STRUCT_TOL).expect("difference of projectors is Hermitian");
    eig.min_eigenvalue() >= -tol
}

/// Relative eigenvalue threshold for the commutant null space.
const NULLSPACE_TOL: f64 = 1e-8;

/// Orthonormal (Frobenius) basis of the joint commutant `{A : [A, G] = 0}`
/// of a family of generators, via the null space of the positive operator
/// `sum_G L_G^dag L_G` with `L_G : A -> AG - GA`.
pub fn commutant_basis(generators: &[CMatrix]) -> Vec<CMatrix> {
    assert!(!generators.is_empty(), "commutant of an empty generator set");
    let d = generators[0].rows();
    for g in generators {
        assert!(g.is_square() && g.rows() == d, "generators must be square, same dimension");
    }
    let n = d * d;
    // Accumulate N = sum_G L_G^dag L_G acting on row-major vec(A).
    let mut big = CMatrix::zeros(n, n);
    for g in generators {
        let mut l = CMatrix::zeros(n, n);
        for i in 0..d {
            for k in 0..d {
                let row = i * d + k;
                // (A G)[i,k] = sum_m A[i,m] G[m,k]
                for m_ in 0..d {
                    l[(row, i * d + m_)] += g[(m_, k)];
                }
                // -(G A)[i,k] = -sum_m G[i,m] A[m,k]
                for m_ in 0..d {
                    l[(row, m_ * d + k)] -= g[(i, m_)];
                }
            }
        }
        big = big.add(&l.dagger().mul(&l));
    }
    let eig = eig_hermitian(&big, 1e-8 * big.max_abs().max(1.0))
        .expect("sum of L^dag L is Hermitian");
    let cutoff = NULLSPACE_TOL * eig.max_eigenvalue().max(1.0);
    eig.eigenvalues
        .iter()
        .zip(eig.eigenvectors)
        .filter(|(l, _)| **l <= cutoff)
        .map(|(_, v)| CMatrix::from_fn(d, d, |i, k| v.amp()[i * d + k]))
        .collect()
}

/// Trace distance `||a - b||_1 / 2` between Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = a.sub(b);
    let eig = eig_hermitian(&diff, 1e-8).expect("trace distance of non-Hermitian operands");
    0.5 * eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0, |x, y| x + y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma_x() -> CMatrix {
        CMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn ket_plus() -> Ket {
        Ket::from_real(&[core::f64::consts::FRAC_1_SQRT_2, core::f64::consts::FRAC_1_SQRT_2])
    }

    #[test]
    fn kron_identity_case() {
        let i2 = CMatrix::identity(2);
        let i3 = CMatrix::identity(3);
        assert_eq!(kron(&i2, &i3), CMatrix::identity(6));
    }

    #[test]
    fn kron_basis_case() {
        // |g><g| (x) |0><0| on C2 (x) C3 with the first factor slow:
        // single unit entry at (0,0).
        let gg = Ket::basis(2, 0).outer(&Ket::basis(2, 0));
        let oo = Ket::basis(3, 0).outer(&Ket::basis(3, 0));
        let k = kron(&gg, &oo);
        assert_eq!(k.rows(), 6);
        assert_eq!(k[(0, 0)], ONE);
        assert!((0..6).all(|i| (0..6).all(|j| (i, j) == (0, 0) || k[(i, j)] == ZERO)));
    }

    #[test]
    fn kron_mixed_product_matches_direct_multiplication() {
        // (sx (x) I)(I (x) sx) = sx (x) sx, against direct 4x4 multiplication.
        let sx = sigma_x();
        let i2 = CMatrix::identity(2);
        let lhs = kron(&sx, &i2).mul(&kron(&i2, &sx));
        let rhs = kron(&sx, &sx);
        assert!(lhs.sub(&rhs).max_abs() <= 1e-15);
    }

    #[test]
    fn eig_diagonal() {
        let a = CMatrix::from_real(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 3.0]]);
        let eig = eig_hermitian(&a, 1e-10).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 2.0, 3.0]);
        for (i, v) in eig.eigenvectors.iter().enumerate() {
            assert!((v.amp()[i].norm() - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn eig_sigma_x_hand_values() {
        let eig = eig_hermitian(&sigma_x(), 1e-10).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() <= 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() <= 1e-14);
        // Eigenvectors (|0> -+ |1>)/sqrt(2) up to phase.
        let minus = &eig.eigenvectors[0];
        assert!((minus.amp()[0].norm() - core::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-12);
        assert!((minus.amp()[0] + minus.amp()[1]).norm() <= 1e-12);
        let plus = &eig.eigenvectors[1];
        assert!((plus.amp()[0] - plus.amp()[1]).norm() <= 1e-12);
    }

    #[test]
    fn eig_projector_eigenvalues_are_01() {
        let p = Projector::onto(&ket_plus()).unwrap();
        let eig = eig_hermitian(p.matrix(), 1e-10).unwrap();
        for l in &eig.eigenvalues {
            assert!(l.abs().min((l - 1.0).abs()) <= 1e-10);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = CMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(eig_hermitian(&a, 1e-10), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eig_complex_hermitian_reconstructs() {
        // sigma_y has complex entries; reconstruction must hold.
        let sy = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => -I_UNIT,
            (1, 0) => I_UNIT,
            _ => ZERO,
        });
        let eig = eig_hermitian(&sy, 1e-10).unwrap();
        assert!(eig.reconstruct().sub(&sy).max_abs() <= 1e-13);
    }

    #[test]
    fn meet_commuting_is_product() {
        // Diagonal projectors: meet = PQ.
        let p = Projector::new(CMatrix::from_real(&[&[1., 0., 0.], &[0., 1., 0.], &[0., 0., 0.]]), 1e-10).unwrap();
        let q = Projector::new(CMatrix::from_real(&[&[0., 0., 0.], &[0., 1., 0.], &[0., 0., 1.]]), 1e-10).unwrap();
        let m = meet(&p, &q, 1e-10).unwrap();
        let pq = p.matrix().mul(q.matrix());
        assert!(m.matrix().sub(&pq).max_abs() <= 1e-10);
    }

    #[test]
    fn meet_idempotent() {
        let p = Projector::onto(&ket_plus()).unwrap();
        let m = meet(&p, &p, 1e-10).unwrap();
        assert!(m.matrix().sub(p.matrix()).max_abs() <= 1e-10);
    }

    #[test]
    fn meet_incompatible_rank_ones_is_zero() {
        // meet(|0><0|, |+><+|) = 0: the max eigenvalue of P+Q is
        // 1 + 1/sqrt(2) < 2.
        let p = Projector::onto(&Ket::basis(2, 0)).unwrap();
        let q = Projector::onto(&ket_plus()).unwrap();
        let sum = p.matrix().add(q.matrix());
        let eig = eig_hermitian(&sum, 1e-10).unwrap();
        assert!((eig.max_eigenvalue() - (1.0 + core::f64::consts::FRAC_1_SQRT_2)).abs() <= 1e-12);
        let m = meet(&p, &q, 1e-10).unwrap();
        assert!(m.matrix().max_abs() <= 1e-12);
    }

    #[test]
    fn join_least_element_and_span() {
        let p = Projector::onto(&Ket::basis(2, 0)).unwrap();
        let zero = Projector::zero(2);
        let j = join(&p, &zero, 1e-10).unwrap();
        assert!(j.matrix().sub(p.matrix()).max_abs() <= 1e-10);
        // Span of two non-parallel vectors in C2 is everything.
        let q = Projector::onto(&ket_plus()).unwrap();
        let j2 = join(&p, &q, 1e-10).unwrap();
        assert!(j2.matrix().sub(&CMatrix::identity(2)).max_abs() <= 1e-10);
    }

    #[test]
    fn join_commuting_inclusion_exclusion() {
        let p = Projector::new(CMatrix::from_real(&[&[1., 0., 0.], &[0., 1., 0.], &[0., 0., 0.]]), 1e-10).unwrap();
        let q = Projector::new(CMatrix::from_real(&[&[0., 0., 0.], &[0., 1., 0.], &[0., 0., 1.]]), 1e-10).unwrap();
        let j = join(&p, &q, 1e-10).unwrap();
        let expect = p.matrix().add(q.matrix()).sub(&p.matrix().mul(q.matrix()));
        assert!(j.matrix().sub(&expect).max_abs() <= 1e-10);
    }

    #[test]
    fn commutant_of_identity_is_everything() {
        let basis = commutant_basis(&[CMatrix::identity(3)]);
        assert_eq!(basis.len(), 9);
    }

    #[test]
    fn commutant_of_diagonal_rank_ones_is_diagonal() {
        let gens: Vec<CMatrix> = (0..3)
            .map(|k| Ket::basis(3, k).outer(&Ket::basis(3, k)))
            .collect();
        let basis = commutant_basis(&gens);
        assert_eq!(basis.len(), 3);
        for b in &basis {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        assert!(b[(i, j)].norm() <= 1e-9, "commutant element not diagonal");
                    }
                }
            }
        }
    }

    #[test]
    fn commutant_of_rank_one_resolution_on_c2() {
        let p = Projector::onto(&ket_plus()).unwrap();
        let gens = [p.matrix().clone(), p.complement().matrix().clone()];
        let basis = commutant_basis(&gens);
        assert_eq!(basis.len(), 2);
        for b in &basis {
            for g in &gens {
                assert!(b.commutator(g).max_abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn partial_trace_product_state() {
        let rho_a = CMatrix::from_real(&[&[0.25, 0.0], &[0.0, 0.75]]);
        let rho_b = CMatrix::from_real(&[&[0.5, 0.1], &[0.1, 0.5]]);
        let joint = kron(&rho_a, &rho_b);
        let back = partial_trace(&joint, (2, 2), Subsystem::First).unwrap();
        // Tr(rho_b) = 1, so the A factor comes back exactly.
        assert!(back.sub(&rho_a).max_abs() <= 1e-15);
        let back_b = partial_trace(&joint, (2, 2), Subsystem::Second).unwrap();
        assert!(back_b.sub(&rho_b).max_abs() <= 1e-15);
    }

    #[test]
    fn partial_trace_bell_state() {
        let bell = Ket::new(vec![
            C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0),
            ZERO,
            ZERO,
            C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        let rho = bell.outer(&bell);
        let red = partial_trace(&rho, (2, 2), Subsystem::First).unwrap();
        assert!(red.sub(&CMatrix::identity(2).scale_re(0.5)).max_abs() <= 1e-15);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let m = CMatrix::from_fn(6, 6, |i, j| C64::new((i * 7 + j) as f64 * 0.01, 0.0));
        let g = m.mul(&m.dagger()); // positive
        let red = partial_trace(&g, (2, 3), Subsystem::First).unwrap();
        assert!((red.trace() - g.trace()).norm() <= 1e-12);
    }

    #[test]
    fn partial_transpose_product_and_involution() {
        let a = CMatrix::from_fn(2, 2, |i, j| C64::new((i + 2 * j) as f64, 0.3));
        let b = CMatrix::from_fn(3, 3, |i, j| C64::new((2 * i + j) as f64, -0.1 * i as f64));
        let pt = partial_transpose(&kron(&a, &b), (2, 3)).unwrap();
        assert!(pt.sub(&kron(&a, &b.transpose())).max_abs() <= 1e-15);
        let back = partial_transpose(&pt, (2, 3)).unwrap();
        assert!(back.sub(&kron(&a, &b)).max_abs() <= 1e-15);
    }

    #[test]
    fn ket_as_map_vectorized_correspondence() {
        // psi = sum_i c_i |phi_i> (x) |xi_i> on C2 (x) C2 with explicit
        // complex coefficients; check (E (x) 1) psi <-> E psi~ and
        // (1 (x) P) psi <-> psi~ P^T.
        let c = [C64::new(0.6, 0.3), C64::new(-0.2, 0.7)];
        let phi = [Ket::basis(2, 0), Ket::basis(2, 1)];
        let xi = [Ket::basis(2, 0), Ket::basis(2, 1)];
        let mut psi = phi[0].tensor(&xi[0]).scale(c[0]);
        psi = psi.add(&phi[1].tensor(&xi[1]).scale(c[1]));
        let e = CMatrix::from_fn(2, 2, |i, j| C64::new(0.1 + (i as f64), 0.2 * j as f64));
        let tilde = ket_as_map(&psi, (2, 2)).unwrap();
        let lhs = ket_as_map(&kron(&e, &CMatrix::identity(2)).apply(&psi), (2, 2)).unwrap();
        let rhs = e.mul(&tilde);
        assert!(lhs.sub(&rhs).max_abs() <= 1e-14);
        let p = Projector::onto(&ket_plus()).unwrap();
        let lhs2 =
            ket_as_map(&kron(&CMatrix::identity(2), p.matrix()).apply(&psi), (2, 2)).unwrap();
        let rhs2 = tilde.mul(&p.matrix().transpose());
        assert!(lhs2.sub(&rhs2).max_abs() <= 1e-14);
    }

    #[test]
    fn ordering_examples() {
        let p = Projector::onto(&ket_plus()).unwrap();
        assert!(ordering_le(&Projector::zero(2), &p, 1e-10));
        assert!(ordering_le(&p, &Projector::identity(2), 1e-10));
        let q = Projector::onto(&Ket::basis(2, 0)).unwrap();
        assert!(!ordering_le(&p, &q, 1e-10));
    }

    #[test]
    fn trace_distance_diagonal() {
        let a = CMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let b = CMatrix::from_real(&[&[0.5, 0.0], &[0.0, 0.5]]);
        assert!((trace_distance(&a, &b) - 0.5).abs() <= 1e-12);
    }
}
