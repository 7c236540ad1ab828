//! Dense even-order complex tensors acting as linear operators under the
//! Einstein product.
//!
//! A tensor of shape `I₁×…×I_N×I₁×…×I_N` is stored as `D²` complex entries,
//! `D = ∏ Iⱼ`, in row-major order over the concatenated `2N`-index. With that
//! layout the entry `(i₁..i_N, j₁..j_N)` sits at `lin(i)·D + lin(j)`, where
//! `lin` is the row-major linearization of a multi-index, so the unfolding is
//! simply the `D×D` row-major matrix over the same buffer.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for structural comparisons.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Mode sizes `I₁..I_N` of the row (and column) side of a square tensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape {
    modes: Vec<usize>,
    unfold_dim: usize,
}

impl Shape {
    pub fn new(modes: Vec<usize>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidShape("at least one mode is required".into()));
        }
        if let Some(pos) = modes.iter().position(|&m| m == 0) {
            return Err(Error::InvalidShape(format!("mode {pos} has size 0")));
        }
        let unfold_dim = modes
            .iter()
            .try_fold(1usize, |acc, &m| acc.checked_mul(m))
            .ok_or_else(|| Error::InvalidShape("mode product overflows".into()))?;
        Ok(Self { modes, unfold_dim })
    }

    /// Shape `[d]`: a plain `d×d` operator.
    pub fn square(d: usize) -> Result<Self> {
        Self::new(vec![d])
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn order(&self) -> usize {
        self.modes.len()
    }

    /// `D = ∏ Iⱼ`.
    pub fn unfold_dim(&self) -> usize {
        self.unfold_dim
    }

    /// Row-major linearization of a multi-index.
    pub fn linear_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.modes.len());
        index
            .iter()
            .zip(&self.modes)
            .fold(0, |acc, (&i, &m)| {
                debug_assert!(i < m);
                acc * m + i
            })
    }

    /// Inverse of [`Shape::linear_index`].
    pub fn multi_index(&self, mut lin: usize) -> Vec<usize> {
        let mut out = vec![0; self.modes.len()];
        for (slot, &m) in out.iter_mut().zip(&self.modes).rev() {
            *slot = lin % m;
            lin /= m;
        }
        out
    }
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = Error;

    fn try_from(modes: Vec<usize>) -> Result<Self> {
        Shape::new(modes)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(shape: Shape) -> Self {
        shape.modes
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.modes.iter().map(|m| m.to_string()).collect();
        write!(f, "[{}]", parts.join("x"))
    }
}

/// A square even-order complex tensor. Immutable after construction.
#[derive(Clone, PartialEq)]
pub struct EinsteinTensor {
    shape: Shape,
    entries: Vec<Complex64>,
}

impl fmt::Debug for EinsteinTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EinsteinTensor")
            .field("shape", &self.shape.modes)
            .field("unfolded", &self.unfold())
            .finish()
    }
}

impl EinsteinTensor {
    /// Builds a tensor from its row-major entry buffer.
    pub fn from_entries(shape: Shape, entries: Vec<Complex64>) -> Result<Self> {
        let d = shape.unfold_dim();
        if entries.len() != d * d {
            return Err(Error::LengthMismatch {
                left: entries.len(),
                right: d * d,
            });
        }
        if let Some(index) = entries.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { shape, entries })
    }

    /// Builds a tensor entrywise from `(i-multi-index, j-multi-index)`.
    pub fn from_fn<F>(shape: Shape, mut entry: F) -> Result<Self>
    where
        F: FnMut(&[usize], &[usize]) -> Complex64,
    {
        let d = shape.unfold_dim();
        let rows: Vec<Vec<usize>> = (0..d).map(|l| shape.multi_index(l)).collect();
        let mut entries = Vec::with_capacity(d * d);
        for i in &rows {
            for j in &rows {
                entries.push(entry(i, j));
            }
        }
        Self::from_entries(shape, entries)
    }

    /// Real diagonal tensor whose unfolding is `diag(values)`.
    pub fn from_diagonal(shape: Shape, values: &[f64]) -> Result<Self> {
        let d = shape.unfold_dim();
        if values.len() != d {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: d,
            });
        }
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for (k, &v) in values.iter().enumerate() {
            entries[k * d + k] = Complex64::new(v, 0.0);
        }
        Self::from_entries(shape, entries)
    }

    /// Order-2 tensor of shape `[1]` holding a single scalar.
    pub fn scalar(value: f64) -> Self {
        Self {
            shape: Shape::square(1).expect("[1] is a valid shape"),
            entries: vec![Complex64::new(value, 0.0)],
        }
    }

    pub fn identity(shape: &Shape) -> Self {
        let d = shape.unfold_dim();
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for k in 0..d {
            entries[k * d + k] = Complex64::new(1.0, 0.0);
        }
        Self {
            shape: shape.clone(),
            entries,
        }
    }

    pub fn zero(shape: &Shape) -> Self {
        let d = shape.unfold_dim();
        Self {
            shape: shape.clone(),
            entries: vec![Complex64::new(0.0, 0.0); d * d],
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.unfold_dim()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Entry at `(i₁..i_N, j₁..j_N)`.
    pub fn get(&self, i: &[usize], j: &[usize]) -> Complex64 {
        let d = self.dim();
        self.entries[self.shape.linear_index(i) * d + self.shape.linear_index(j)]
    }

    /// Entry `(row, col)` of the unfolding.
    pub fn unfolded_entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    /// `D×D` unfolding.
    pub fn unfold(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.entries)
    }

    /// Inverse of [`EinsteinTensor::unfold`].
    pub fn fold(matrix: &DMatrix<Complex64>, shape: &Shape) -> Result<Self> {
        let d = shape.unfold_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let mut entries = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                entries.push(matrix[(r, c)]);
            }
        }
        Self::from_entries(shape.clone(), entries)
    }

    fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                left: self.shape.modes.clone(),
                right: other.shape.modes.clone(),
            });
        }
        Ok(())
    }

    /// `X ⋆_N Y`: contraction of the trailing N indices of `self` with the
    /// leading N indices of `other`.
    pub fn einstein_product(&self, other: &Self) -> Result<Self> {
        self.ensure_same_shape(other)?;
        let d = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            let row = &self.entries[r * d..(r + 1) * d];
            let dst = &mut out[r * d..(r + 1) * d];
            for (k, &a) in row.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let src = &other.entries[k * d..(k + 1) * d];
                for (o, &b) in dst.iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Self::from_entries(self.shape.clone(), out)
    }

    /// Product of a non-empty chain of tensors, left to right.
    pub fn chain_product(factors: &[&Self]) -> Result<Self> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty product chain".into()))?;
        rest.iter()
            .try_fold((*first).clone(), |acc, t| acc.einstein_product(t))
    }

    pub fn conjugate_transpose(&self) -> Self {
        let d = self.dim();
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                entries[c * d + r] = self.entries[r * d + c].conj();
            }
        }
        Self {
            shape: self.shape.clone(),
            entries,
        }
    }

    pub fn trace(&self) -> Complex64 {
        let d = self.dim();
        (0..d).map(|k| self.entries[k * d + k]).sum()
    }

    /// `⟨X, Y⟩ = Tr(Xᴴ ⋆ Y)`.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        self.ensure_same_shape(other)?;
        // Tr(XᴴY) = Σ conj(x_rc)·y_rc
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| x.conj() * y)
            .sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.ensure_same_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Self::from_entries(self.shape.clone(), entries)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.ensure_same_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Self::from_entries(self.shape.clone(), entries)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    /// `self + shift·I`.
    pub fn shift_diagonal(&self, shift: f64) -> Self {
        let d = self.dim();
        let mut entries = self.entries.clone();
        for k in 0..d {
            entries[k * d + k] += shift;
        }
        Self {
            shape: self.shape.clone(),
            entries,
        }
    }

    /// `(X + Xᴴ)/2`.
    pub fn hermitian_part(&self) -> Self {
        let d = self.dim();
        let mut entries = self.entries.clone();
        for r in 0..d {
            entries[r * d + r] = Complex64::new(self.entries[r * d + r].re, 0.0);
            for c in (r + 1)..d {
                let avg = (self.entries[r * d + c] + self.entries[c * d + r].conj()) * 0.5;
                entries[r * d + c] = avg;
                entries[c * d + r] = avg.conj();
            }
        }
        Self {
            shape: self.shape.clone(),
            entries,
        }
    }

    /// `‖X − Xᴴ‖_F ≤ tol·‖X‖_F`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol * self.frobenius_norm()
    }

    /// `‖X − Xᴴ‖_F`.
    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for r in 0..d {
            for c in 0..d {
                acc += (self.entries[r * d + c] - self.entries[c * d + r].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `‖Xᴴ⋆X − I‖_F ≤ tol·D`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let gram = self
            .conjugate_transpose()
            .einstein_product(self)
            .expect("adjoint has the same shape");
        let residual = gram
            .checked_sub(&Self::identity(&self.shape))
            .expect("identity has the same shape");
        residual.frobenius_norm() <= tol * self.dim() as f64
    }

    /// Tensor inverse through the unfolding.
    ///
    /// Refuses inputs whose smallest singular value is at most
    /// `1e-13·σ_max`, reporting the offending value.
    pub fn inverse(&self) -> Result<Self> {
        let matrix = self.unfold();
        let sigma = matrix.clone().singular_values();
        let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
        let sigma_min = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(sigma_min > 1e-13 * sigma_max) {
            return Err(Error::Singular {
                sigma_min,
                sigma_max,
            });
        }
        let inv = matrix.try_inverse().ok_or(Error::Singular {
            sigma_min,
            sigma_max,
        })?;
        Self::fold(&inv, &self.shape)
    }
}

impl Add for &EinsteinTensor {
    type Output = EinsteinTensor;

    /// Panics on shape mismatch; use [`EinsteinTensor::checked_add`] otherwise.
    fn add(self, rhs: Self) -> EinsteinTensor {
        self.checked_add(rhs).expect("shape mismatch in tensor addition")
    }
}

impl Sub for &EinsteinTensor {
    type Output = EinsteinTensor;

    fn sub(self, rhs: Self) -> EinsteinTensor {
        self.checked_sub(rhs).expect("shape mismatch in tensor subtraction")
    }
}

impl Neg for &EinsteinTensor {
    type Output = EinsteinTensor;

    fn neg(self) -> EinsteinTensor {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &EinsteinTensor {
    type Output = EinsteinTensor;

    fn mul(self, rhs: f64) -> EinsteinTensor {
        self.scale(rhs)
    }
}
