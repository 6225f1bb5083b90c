//! Small dense helpers on top of faer. Diagonal operators (switches,
//! positions, indicator windows) are kept as plain `&[f64]` slices.

use faer::{c64, Mat, MatRef};

pub type CMat = Mat<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn real(x: f64) -> c64 {
    c64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { real(1.0) } else { ZERO })
}

pub fn from_diag(d: &[f64]) -> CMat {
    let n = d.len();
    Mat::from_fn(n, n, |i, j| if i == j { real(d[i]) } else { ZERO })
}

pub fn adjoint(a: MatRef<'_, c64>) -> CMat {
    a.adjoint().to_owned()
}

/// `D A` for diagonal `D`.
pub fn diag_left(d: &[f64], a: MatRef<'_, c64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[i])
}

/// `A D` for diagonal `D`.
pub fn diag_right(a: MatRef<'_, c64>, d: &[f64]) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[j])
}

/// `[A, D] = A D − D A` for diagonal `D`.
pub fn commutator_diag(a: MatRef<'_, c64>, d: &[f64]) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * (d[j] - d[i]))
}

pub fn commutator(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a * b - b * a
}

/// `V† A V`.
pub fn to_basis(v: MatRef<'_, c64>, a: MatRef<'_, c64>) -> CMat {
    v.adjoint() * (a * v)
}

/// `V† D V` for diagonal `D`.
pub fn diag_to_basis(v: MatRef<'_, c64>, d: &[f64]) -> CMat {
    v.adjoint() * diag_left(d, v)
}

/// `V A V†`.
pub fn from_basis(v: MatRef<'_, c64>, a: MatRef<'_, c64>) -> CMat {
    v * (a * v.adjoint())
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> c64 {
    let mut s = ZERO;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

/// `Σ_x w_x (A B)_{xx}`.
pub fn weighted_trace_product(w: &[f64], a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> c64 {
    let mut s = ZERO;
    for (x, &wx) in w.iter().enumerate() {
        if wx == 0.0 {
            continue;
        }
        let mut acc = ZERO;
        for y in 0..a.ncols() {
            acc += a[(x, y)] * b[(y, x)];
        }
        s += acc * wx;
    }
    s
}

pub fn trace(a: MatRef<'_, c64>) -> c64 {
    (0..a.nrows()).map(|i| a[(i, i)]).sum()
}

pub fn weighted_trace(w: &[f64], a: MatRef<'_, c64>) -> c64 {
    w.iter().enumerate().map(|(i, &wi)| a[(i, i)] * wi).sum()
}

pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn frobenius(a: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn hermitian_defect(a: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..=j.min(a.nrows() - 1) {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}
