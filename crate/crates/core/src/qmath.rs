//! Dense complex linear algebra over explicitly labelled subsystems.
//!
//! Every [`Operator`] and [`Ket`] carries the ordered list of local
//! dimensions it lives on. Subsystem indices passed to [`partial_trace`]
//! and [`partial_transpose`] refer to positions in that list, and the
//! first subsystem is the most significant digit of a basis index.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Absolute tolerance for Hermiticity and normalization checks.
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Absolute tolerance for eigen-reconstruction.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

pub(crate) const ZERO: C64 = Complex::new(0.0, 0.0);
pub(crate) const ONE: C64 = Complex::new(1.0, 0.0);
pub(crate) const I: C64 = Complex::new(0.0, 1.0);

fn check_dims(dims: &[usize], side: usize) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::InvalidDims("empty dimension list".into()));
    }
    if let Some(d) = dims.iter().find(|&&d| d < 2) {
        return Err(Error::InvalidDims(format!("subsystem dimension {d} < 2")));
    }
    let prod: usize = dims.iter().product();
    if prod != side {
        return Err(Error::DimensionMismatch {
            expected: format!("side {prod} from dims {dims:?}"),
            found: format!("side {side}"),
        });
    }
    Ok(())
}

/// Row-major strides: the first subsystem varies slowest.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Flat offsets of every multi-index over `subset`, enumerated row-major.
fn offsets(dims: &[usize], strides: &[usize], subset: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &k in subset {
        let mut next = Vec::with_capacity(out.len() * dims[k]);
        for &base in &out {
            for i in 0..dims[k] {
                next.push(base + i * strides[k]);
            }
        }
        out = next;
    }
    out
}

/// A dense complex square matrix over a tensor product of subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
    dims: Vec<usize>,
}

impl Operator {
    pub fn new(mat: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: "square matrix".into(),
                found: format!("{}x{}", mat.nrows(), mat.ncols()),
            });
        }
        check_dims(&dims, mat.nrows())?;
        Ok(Self { mat, dims })
    }

    /// Builds an operator from row-major entries.
    pub fn from_rows(dims: Vec<usize>, rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: format!("{n} entries per row"),
                found: "ragged rows".into(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]), dims)
    }

    pub fn from_real(dims: Vec<usize>, entries: &[f64]) -> Result<Self> {
        let n = (entries.len() as f64).sqrt() as usize;
        if n * n != entries.len() {
            return Err(Error::InvalidDims(format!("{} entries is not a square", entries.len())));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| C64::new(entries[i * n + j], 0.0)), dims)
    }

    pub fn identity(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self { mat: DMatrix::identity(n, n), dims: dims.to_vec() }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self { mat: DMatrix::zeros(n, n), dims: dims.to_vec() }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side(&self) -> usize {
        self.mat.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    /// Reinterprets the same matrix over a different subsystem split.
    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        Self::new(self.mat, dims)
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint(), dims: self.dims.clone() }
    }

    pub fn transpose(&self) -> Self {
        Self { mat: self.mat.transpose(), dims: self.dims.clone() }
    }

    /// Entrywise complex conjugate in the computational basis.
    pub fn conj(&self) -> Self {
        Self { mat: self.mat.map(|z| z.conj()), dims: self.dims.clone() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { mat: self.mat.map(|z| z * s), dims: self.dims.clone() }
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Operator) -> C64 {
        assert_eq!(self.side(), other.side(), "trace_product: side mismatch");
        let n = self.side();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.mat[(i, k)] * other.mat[(k, i)];
            }
        }
        acc
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.side(), other.side(), "max_abs_diff: side mismatch");
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.side();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub(crate) fn ensure_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_error();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    /// Row-major entries as `[re, im]` pairs, the on-disk layout.
    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.side())
            .map(|i| (0..self.side()).map(|j| [self.mat[(i, j)].re, self.mat[(i, j)].im]).collect())
            .collect()
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.side(), rhs.side(), "operator add: side mismatch");
        Operator { mat: &self.mat + &rhs.mat, dims: self.dims.clone() }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.side(), rhs.side(), "operator sub: side mismatch");
        Operator { mat: &self.mat - &rhs.mat, dims: self.dims.clone() }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.side(), rhs.side(), "operator mul: side mismatch");
        Operator { mat: &self.mat * &rhs.mat, dims: self.dims.clone() }
    }
}

/// A normalized pure state over labelled subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amps: DVector<C64>,
    dims: Vec<usize>,
}

impl Ket {
    pub fn new(amps: DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, amps.len())?;
        let norm_sqr = amps.norm_squared();
        if (norm_sqr - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { amps, dims })
    }

    /// Normalizes `amps` before validating. Fails on the zero vector.
    pub fn normalized(amps: DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        let norm = amps.norm();
        if norm < 1e-300 {
            return Err(Error::NotNormalized { norm_sqr: 0.0 });
        }
        Self::new(amps / C64::new(norm, 0.0), dims)
    }

    pub fn from_slice(dims: Vec<usize>, amps: &[C64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amps), dims)
    }

    pub fn basis(dims: &[usize], index: usize) -> Self {
        let n: usize = dims.iter().product();
        let mut amps = DVector::zeros(n);
        amps[index] = ONE;
        Self { amps, dims: dims.to_vec() }
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Ket { amps: self.amps.kronecker(&other.amps), dims }
    }

    /// `|self⟩⟨self|`
    pub fn projector(&self) -> Operator {
        Operator { mat: &self.amps * self.amps.adjoint(), dims: self.dims.clone() }
    }

    pub fn apply(&self, op: &Operator) -> DVector<C64> {
        op.matrix() * &self.amps
    }

    /// `⟨self|op|self⟩`, real part.
    pub fn expectation(&self, op: &Operator) -> f64 {
        self.amps.dotc(&(op.matrix() * &self.amps)).re
    }
}

pub fn sigma_x() -> Operator {
    Operator { mat: DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]), dims: vec![2] }
}

pub fn sigma_y() -> Operator {
    Operator { mat: DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]), dims: vec![2] }
}

pub fn sigma_z() -> Operator {
    Operator { mat: DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]), dims: vec![2] }
}

/// Kronecker product; the result's dims are `a.dims ++ b.dims`.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    Operator { mat: a.mat.kronecker(&b.mat), dims }
}

/// Left-to-right Kronecker product of a nonempty list.
pub fn tensor_all(ops: &[&Operator]) -> Operator {
    let (first, rest) = ops.split_first().expect("tensor_all: empty operator list");
    rest.iter().fold((*first).clone(), |acc, op| tensor(&acc, op))
}

/// Traces out every subsystem not listed in `keep`. Kept subsystems stay in
/// their original relative order regardless of the order of `keep`.
pub fn partial_trace(m: &Operator, keep: &[usize]) -> Result<Operator> {
    let count = m.dims.len();
    if keep.is_empty() {
        return Err(Error::InvalidParameter("partial_trace: keep set is empty".into()));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    if let Some(&index) = kept.iter().find(|&&k| k >= count) {
        return Err(Error::InvalidSubsystem { index, count });
    }
    if kept.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("partial_trace: repeated subsystem index".into()));
    }
    let traced: Vec<usize> = (0..count).filter(|k| !kept.contains(k)).collect();
    let st = strides(&m.dims);
    let ko = offsets(&m.dims, &st, &kept);
    let to = offsets(&m.dims, &st, &traced);
    let k = ko.len();
    let out = DMatrix::from_fn(k, k, |i, j| {
        to.iter().map(|&t| m.mat[(ko[i] + t, ko[j] + t)]).sum::<C64>()
    });
    Ok(Operator { mat: out, dims: kept.iter().map(|&s| m.dims[s]).collect() })
}

/// Transposes the indices of one subsystem, leaving the others untouched.
pub fn partial_transpose(m: &Operator, subsystem: usize) -> Result<Operator> {
    let count = m.dims.len();
    if subsystem >= count {
        return Err(Error::InvalidSubsystem { index: subsystem, count });
    }
    let s = strides(&m.dims)[subsystem];
    let d = m.dims[subsystem];
    let n = m.side();
    let out = DMatrix::from_fn(n, n, |i, j| {
        let di = (i / s) % d;
        let dj = (j / s) % d;
        // swap the subsystem digits of row and column
        m.mat[(i - di * s + dj * s, j - dj * s + di * s)]
    });
    Ok(Operator { mat: out, dims: m.dims.clone() })
}

/// Spectrum of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Ket>,
}

impl Eigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    /// `Σ λ_i |v_i⟩⟨v_i|`
    pub fn reconstruct(&self) -> Operator {
        let dims = self.vectors[0].dims().to_vec();
        let mut acc = Operator::zeros(&dims);
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            acc = &acc + &v.projector().scale(*lambda);
        }
        acc
    }
}

pub fn hermitian_eig(m: &Operator) -> Result<Eigen> {
    m.ensure_hermitian()?;
    // symmetrize away sub-tolerance skew before handing to the solver
    let sym = (&m.mat + m.mat.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::try_new(sym, 1e-15, 0).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| Ket::normalized(eig.eigenvectors.column(k).into_owned(), m.dims.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Eigen { values, vectors })
}

/// Smallest eigenvalue of a Hermitian operator.
pub fn min_eigenvalue(m: &Operator) -> Result<f64> {
    Ok(hermitian_eig(m)?.min())
}
