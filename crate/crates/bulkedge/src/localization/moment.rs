use faer::{c64, Mat};
use serde::{Deserialize, Serialize};
use statrs::statistics::Statistics;

use super::{site_distance, EnergyBump};
use crate::error::{Error, Result};
use crate::lattice::Geometry;
use crate::linalg::ZERO;
use crate::spectral::{SpectralData, TimeAverageKernel};

/// Largest exponent accepted in the moment weight `e^{m|x|^ζ}`.
const MAX_EXPONENT: f64 = 600.0;

/// Mean and standard error over an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, stderr: f64::NAN, n };
        }
        let mean = xs.mean();
        let stderr = if n > 1 { xs.std_dev() / (n as f64).sqrt() } else { 0.0 };
        Estimate { mean, stderr, n }
    }
}

/// Index of the site at coordinate `(0, 0)`.
pub fn central_site(geometry: &Geometry) -> usize {
    let (o1, o2) = geometry.offset();
    geometry.index(o1 as usize, o2 as usize)
}

/// `M(t) = ‖e^{(m/2)|X|^ζ} e^{−itH} 𝒳(H) χ₀‖²₂` and its time averages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentProbe {
    pub m: f64,
    pub zeta: f64,
    pub bump: EnergyBump,
    /// Sites in the support of `χ₀`.
    pub chi0: Vec<usize>,
}

impl MomentProbe {
    pub fn validate(&self, geometry: &Geometry) -> Result<()> {
        self.bump.validate()?;
        if !(self.m >= 0.0 && self.m.is_finite()) {
            return Err(Error::InvalidArgument(format!("moment rate m must be finite and >= 0 (got {})", self.m)));
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(Error::InvalidArgument(format!("zeta must lie in (0, 1] (got {})", self.zeta)));
        }
        if self.chi0.is_empty() || self.chi0.iter().any(|&s| s >= geometry.dim()) {
            return Err(Error::InvalidArgument("chi0 must be a nonempty set of valid sites".into()));
        }
        Ok(())
    }

    /// `e^{m|x|^ζ}` per site, distance measured from the origin.
    pub fn weights(&self, geometry: &Geometry) -> Result<Vec<f64>> {
        let ex: Vec<f64> = geometry
            .coords()
            .into_iter()
            .map(|x| self.m * (site_distance(geometry, x, (0, 0)) as f64).powf(self.zeta))
            .collect();
        let max = ex.iter().cloned().fold(0.0, f64::max);
        if max > MAX_EXPONENT {
            return Err(Error::InvalidArgument(format!(
                "moment weight overflows: max exponent m|x|^zeta = {max:.1} exceeds {MAX_EXPONENT}"
            )));
        }
        Ok(ex.into_iter().map(f64::exp).collect())
    }

    /// Eigen-indices where the bump is nonzero.
    fn support(&self, sd: &SpectralData) -> Vec<usize> {
        (0..sd.dim()).filter(|&k| self.bump.value(sd.eigenvalues[k]) > 0.0).collect()
    }

    /// Moment at a single time.
    pub fn moment(&self, sd: &SpectralData, geometry: &Geometry, t: f64) -> Result<f64> {
        self.validate(geometry)?;
        let w = self.weights(geometry)?;
        let v = sd.vectors();
        let sup = self.support(sd);
        let n = sd.dim();
        let mut total = 0.0;
        for &s in &self.chi0 {
            // ψ = V (b e^{−itλ} ∘ V†e_s)
            let coef: Vec<c64> = sup
                .iter()
                .map(|&k| v[(s, k)].conj() * c64::cis(-t * sd.eigenvalues[k]) * self.bump.value(sd.eigenvalues[k]))
                .collect();
            for x in 0..n {
                let mut psi = ZERO;
                for (c, &k) in coef.iter().zip(&sup) {
                    psi += v[(x, k)] * c;
                }
                total += w[x] * psi.norm_sqr();
            }
        }
        Ok(total)
    }

    /// Exponentially time-averaged moments `(1/T)∫₀^∞ e^{−t/T} M(t) dt`, one
    /// per horizon, computed exactly in the eigenbasis.
    pub fn averaged(&self, sd: &SpectralData, geometry: &Geometry, horizons: &[f64]) -> Result<Vec<f64>> {
        self.validate(geometry)?;
        let w = self.weights(geometry)?;
        let v = sd.vectors();
        let sup = self.support(sd);
        let r = sup.len();
        let n = sd.dim();
        let lam: Vec<f64> = sup.iter().map(|&k| sd.eigenvalues[k]).collect();
        let b: Vec<f64> = lam.iter().map(|&l| self.bump.value(l)).collect();
        // Restricted V†WV and C_{lk} = Σ_s conj(V_sl) V_sk.
        let vs = Mat::from_fn(n, r, |x, a| v[(x, sup[a])]);
        let wv = Mat::from_fn(n, r, |x, a| vs[(x, a)] * w[x]);
        let we = vs.adjoint() * &wv;
        let c = Mat::from_fn(r, r, |l, k| self.chi0.iter().map(|&s| vs[(s, l)].conj() * vs[(s, k)]).sum::<c64>());
        let mut out = Vec::with_capacity(horizons.len());
        for &t in horizons {
            let kernel = TimeAverageKernel::Exponential { t };
            let mut s = ZERO;
            for l in 0..r {
                for k in 0..r {
                    s += c[(l, k)] * we[(k, l)] * (b[k] * b[l]) * kernel.filter(lam[k] - lam[l]);
                }
            }
            out.push(s.re);
        }
        Ok(out)
    }
}

/// Ensemble mean ± standard error of the averaged moment for each horizon.
pub fn averaged_moment(
    probe: &MomentProbe,
    spectra: &[&SpectralData],
    geometry: &Geometry,
    horizons: &[f64],
) -> Result<Vec<Estimate>> {
    let per: Vec<Vec<f64>> = spectra.iter().map(|sd| probe.averaged(sd, geometry, horizons)).collect::<Result<_>>()?;
    Ok((0..horizons.len())
        .map(|i| Estimate::from_samples(&per.iter().map(|row| row[i]).collect::<Vec<_>>()))
        .collect())
}
