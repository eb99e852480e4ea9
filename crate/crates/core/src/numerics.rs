//! Dense vectors and matrices with the handful of kernels the LSTM needs.
//!
//! Everything is `f64` and row-major. The public operations (`matvec`,
//! `sigmoid`, `tanh_elem`, `softmax`) work on [`Vector`]/[`Matrix`]; the
//! slice-level kernels below them are what the recurrence and BPTT loops
//! call directly to avoid per-timestep allocation.

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sigmoid arguments are clamped to this magnitude before exponentiation.
pub const SIGMOID_CLAMP: f64 = 500.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: matrix is {rows}x{cols} but vector has length {len}")]
    Shape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("matrix data has {actual} entries, expected {rows}x{cols} = {}", rows * cols)]
    DataLength {
        rows: usize,
        cols: usize,
        actual: usize,
    },
    #[error("vector must not be empty")]
    Empty,
    #[error("non-finite entry {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
}

fn check_finite(data: &[f64]) -> Result<(), NumericsError> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(NumericsError::NonFinite {
            index,
            value: data[index],
        }),
        None => Ok(()),
    }
}

/// A non-empty vector of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.is_empty() {
            return Err(NumericsError::Empty);
        }
        check_finite(&data)?;
        Ok(Self(data))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// Wraps data produced by a kernel that already guarantees the invariants.
    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        Self(data)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if rows * cols != data.len() {
            return Err(NumericsError::DataLength {
                rows,
                cols,
                actual: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(NumericsError::DataLength {
                    rows: rows.len(),
                    cols,
                    actual: data.len() + row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.cols.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// `out = self · x`. Shapes are the caller's responsibility.
    pub(crate) fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, x);
        }
    }

    /// `out += self · x`.
    pub(crate) fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o += dot(row, x);
        }
    }

    /// `out += selfᵀ · v`.
    pub(crate) fn matvec_t_acc(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (&vr, row) in v.iter().zip(self.data.chunks_exact(self.cols)) {
            if vr != 0.0 {
                for (o, &w) in out.iter_mut().zip(row) {
                    *o += vr * w;
                }
            }
        }
    }

    /// `self += a ⊗ b`.
    pub(crate) fn add_outer(&mut self, a: &[f64], b: &[f64]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (&ar, row) in a.iter().zip(self.data.chunks_exact_mut(self.cols)) {
            if ar != 0.0 {
                for (w, &bc) in row.iter_mut().zip(b) {
                    *w += ar * bc;
                }
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn matvec(m: &Matrix, v: &Vector) -> Result<Vector, NumericsError> {
    if v.len() != m.cols {
        return Err(NumericsError::Shape {
            rows: m.rows,
            cols: m.cols,
            len: v.len(),
        });
    }
    let mut out = vec![0.0; m.rows];
    m.matvec_into(v, &mut out);
    Ok(Vector::from_raw(out))
}

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    let x = x.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    1.0 / (1.0 + (-x).exp())
}

pub fn sigmoid(v: &Vector) -> Vector {
    Vector::from_raw(v.iter().map(|&x| sigmoid_scalar(x)).collect())
}

pub fn tanh_elem(v: &Vector) -> Vector {
    Vector::from_raw(v.iter().map(|x| x.tanh()).collect())
}

/// In-place softmax over a slice, with max subtraction.
pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

pub fn softmax(v: &Vector) -> Vector {
    let mut out = v.0.clone();
    softmax_in_place(&mut out);
    Vector::from_raw(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vector(data: &[f64]) -> Vector {
        Vector::new(data.to_vec()).unwrap()
    }

    #[test]
    fn matvec_identity_and_zeros() {
        let v = vector(&[1.0, 2.0, 3.0]);
        assert_eq!(
            matvec(&Matrix::identity(3), &v).unwrap().as_slice(),
            &[1.0, 2.0, 3.0]
        );
        let z = matvec(&Matrix::zeros(2, 3), &vector(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(z.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn matvec_hand_computed() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(
            matvec(&m, &vector(&[1.0, 1.0])).unwrap().as_slice(),
            &[3.0, 7.0]
        );
    }

    #[test]
    fn matvec_shape_error_names_both_shapes() {
        let err = matvec(&Matrix::zeros(2, 3), &vector(&[1.0, 2.0])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("length 2"), "{msg}");
    }

    #[test]
    fn vector_rejects_empty_and_non_finite() {
        assert_eq!(Vector::new(vec![]), Err(NumericsError::Empty));
        assert!(matches!(
            Vector::new(vec![1.0, f64::NAN]),
            Err(NumericsError::NonFinite { index: 1, .. })
        ));
        assert!(Matrix::from_vec(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(&vector(&[0.0]))[0], 0.5);
        let s = sigmoid(&vector(&[1e6, -1e6]));
        assert!((s[0] - 1.0).abs() < 1e-15 && s[1] >= 0.0 && s[1] < 1e-200);
        assert!(s.iter().all(|x| x.is_finite()));
        assert!((sigmoid(&vector(&[3f64.ln()]))[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn tanh_examples() {
        assert_eq!(tanh_elem(&vector(&[0.0]))[0], 0.0);
        assert!((tanh_elem(&vector(&[50.0]))[0] - 1.0).abs() < 1e-15);
        assert!((tanh_elem(&vector(&[0.5 * 3f64.ln()]))[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn softmax_examples() {
        let u = softmax(&Vector::zeros(6));
        assert!(u.iter().all(|&p| (p - 1.0 / 6.0).abs() < 1e-15));
        for c in [-7.5, 0.0, 3.0, 400.0] {
            let s = softmax(&vector(&[c, c + 2f64.ln()]));
            assert!((s[0] - 1.0 / 3.0).abs() < 1e-12 && (s[1] - 2.0 / 3.0).abs() < 1e-12);
        }
        let d = softmax(&vector(&[0.0, 1000.0, 0.0]));
        assert!((d[1] - 1.0).abs() < 1e-15 && d[0] < 1e-300);
    }

    fn naive_matvec(m: &Matrix, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; m.rows()];
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (c, x) in v.iter().enumerate() {
                acc += m.get(r, c) * x;
            }
            *o = acc;
        }
        out
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(v in prop::collection::vec(-50.0f64..50.0, 1..12)) {
            let s = softmax(&vector(&v));
            prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(s.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }

        #[test]
        fn softmax_shift_invariant(v in prop::collection::vec(-50.0f64..50.0, 1..12), c in -100.0f64..100.0) {
            let a = softmax(&vector(&v));
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let b = softmax(&vector(&shifted));
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn sigmoid_is_symmetric(x in -600.0f64..600.0) {
            prop_assert!((sigmoid_scalar(x) + sigmoid_scalar(-x) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn matvec_matches_naive(data in prop::collection::vec(-10.0f64..10.0, 64), v in prop::collection::vec(-10.0f64..10.0, 8)) {
            let m = Matrix::from_vec(8, 8, data).unwrap();
            let fast = matvec(&m, &vector(&v)).unwrap();
            let slow = naive_matvec(&m, &v);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
