//! Eigendecomposition and everything computed from it: projectors, matrix
//! functions, unitary evolution and exact time averages. The resolvent
//! (Helffer–Sjöstrand) route lives in [`hs`].

pub mod hs;
pub mod jet;
mod switch;

pub use hs::{apply_function_hs, gershgorin, HsGrid, HsResult, HsVariant, QuasiAnalyticExtension};
pub use switch::{switch_matrix, Orientation, Smoothness, SwitchProfile, ERF_STEEPNESS};

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, RwLock};

use faer::{c64, Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{matrix_hash, HamiltonianMatrix};
use crate::linalg::{self, CMat};

/// Eigenvalues closer than this to the Fermi level flag the projector.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SpectralData {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub eigenvectors: CMat,
    pub source_hash: String,
}

pub fn diagonalize(h: &HamiltonianMatrix) -> Result<SpectralData> {
    diagonalize_matrix(h.matrix.as_ref(), h.content_hash())
}

/// Diagonalizes a raw Hermitian matrix.
pub fn diagonalize_matrix(h: MatRef<'_, c64>, source_hash: String) -> Result<SpectralData> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension { expected: h.nrows(), got: h.ncols() });
    }
    let scale = linalg::max_abs(h).max(1.0);
    let defect = linalg::hermitian_defect(h);
    if defect > 1e-12 * scale {
        return Err(Error::NotHermitian(defect));
    }
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let eigenvalues = (0..h.nrows()).map(|i| s[i].re).collect();
    Ok(SpectralData { eigenvalues, eigenvectors: evd.U().to_owned(), source_hash })
}

/// Spectral projector together with its diagnostics.
#[derive(Clone, Debug)]
pub struct Projector {
    pub matrix: CMat,
    pub rank: usize,
    /// An eigenvalue sits within [`DEGENERACY_TOL`] of the Fermi level.
    pub near_degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeAverageKernel {
    /// `(1/T) ∫_0^T`.
    UniformWindow { t: f64 },
    /// `(1/T) ∫_0^∞ e^{−t/T}`.
    Exponential { t: f64 },
}

impl TimeAverageKernel {
    pub fn horizon(&self) -> f64 {
        match *self {
            TimeAverageKernel::UniformWindow { t } | TimeAverageKernel::Exponential { t } => t,
        }
    }

    /// Average of `e^{itδ}` over the kernel.
    pub fn filter(&self, delta: f64) -> c64 {
        match *self {
            TimeAverageKernel::UniformWindow { t } => {
                let x = t * delta;
                if x.abs() < 1e-8 {
                    c64::new(1.0 - x * x / 6.0, 0.5 * x)
                } else {
                    (c64::cis(x) - 1.0) / c64::new(0.0, x)
                }
            }
            TimeAverageKernel::Exponential { t } => c64::new(1.0, 0.0) / c64::new(1.0, -t * delta),
        }
    }
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vectors(&self) -> MatRef<'_, c64> {
        self.eigenvectors.as_ref()
    }

    pub fn fermi_projector(&self, e: f64) -> Projector {
        let near_degenerate = self.eigenvalues.iter().any(|&l| (l - e).abs() < DEGENERACY_TOL);
        let rank = self.eigenvalues.iter().filter(|&&l| l <= e).count();
        let v = self.vectors().subcols(0, rank);
        Projector { matrix: v * v.adjoint(), rank, near_degenerate }
    }

    /// `V f(Λ) V†`.
    pub fn apply_function<F: Fn(f64) -> c64>(&self, f: F) -> CMat {
        let fv: Vec<c64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.from_eigen_diag(&fv)
    }

    pub fn apply_real<F: Fn(f64) -> f64>(&self, f: F) -> CMat {
        self.apply_function(|l| c64::new(f(l), 0.0))
    }

    fn from_eigen_diag(&self, fv: &[c64]) -> CMat {
        let v = self.vectors();
        let n = self.dim();
        let vf = Mat::from_fn(n, n, |i, j| v[(i, j)] * fv[j]);
        &vf * v.adjoint()
    }

    /// `e^{−itH}`.
    pub fn evolve(&self, t: f64) -> CMat {
        self.apply_function(|l| c64::cis(-t * l))
    }

    /// Matrix of `A` in the eigenbasis.
    pub fn to_eigenbasis(&self, a: MatRef<'_, c64>) -> CMat {
        linalg::to_basis(self.vectors(), a)
    }

    pub fn diag_to_eigenbasis(&self, d: &[f64]) -> CMat {
        linalg::diag_to_basis(self.vectors(), d)
    }

    pub fn from_eigenbasis(&self, a: MatRef<'_, c64>) -> CMat {
        linalg::from_basis(self.vectors(), a)
    }

    /// Exact kernel average of `e^{itH} A e^{−itH}`.
    pub fn heisenberg_time_average(&self, a: MatRef<'_, c64>, kernel: TimeAverageKernel) -> CMat {
        let ae = self.to_eigenbasis(a);
        let avg = self.filter_eigen(ae.as_ref(), kernel);
        self.from_eigenbasis(avg.as_ref())
    }

    /// Multiplies eigenbasis entries `(i, j)` by `filter(λ_i − λ_j)`.
    pub fn filter_eigen(&self, ae: MatRef<'_, c64>, kernel: TimeAverageKernel) -> CMat {
        let l = &self.eigenvalues;
        Mat::from_fn(ae.nrows(), ae.ncols(), |i, j| ae[(i, j)] * kernel.filter(l[i] - l[j]))
    }

    /// `max |HV − VΛ|` and `max |V†V − I|`.
    pub fn residuals(&self, h: MatRef<'_, c64>) -> (f64, f64) {
        let v = self.vectors();
        let n = self.dim();
        let hv = h * v;
        let vl = Mat::from_fn(n, n, |i, j| v[(i, j)] * self.eigenvalues[j]);
        let gram = v.adjoint() * v;
        (linalg::max_abs_diff(hv.as_ref(), vl.as_ref()), linalg::max_abs_diff(gram.as_ref(), linalg::identity(n).as_ref()))
    }

    /// CSV with columns `index,eigenvalue`.
    pub fn write_eigenvalues_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["index", "eigenvalue"])?;
        for (i, l) in self.eigenvalues.iter().enumerate() {
            out.write_record([i.to_string(), format!("{l:.17e}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Per-realization cache of eigendecompositions keyed by matrix content.
#[derive(Default)]
pub struct SpectralCache {
    inner: RwLock<HashMap<String, Arc<SpectralData>>>,
}

impl SpectralCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.inner.read().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_compute(&self, h: &HamiltonianMatrix) -> Result<Arc<SpectralData>> {
        let key = matrix_hash(&h.matrix);
        if let Some(hit) = self.inner.read().ok().and_then(|m| m.get(&key).cloned()) {
            return Ok(hit);
        }
        let data = Arc::new(diagonalize_matrix(h.matrix.as_ref(), key.clone())?);
        let mut map = self.inner.write().map_err(|_| Error::Numerical("spectral cache poisoned".into()))?;
        Ok(map.entry(key).or_insert(data).clone())
    }
}
