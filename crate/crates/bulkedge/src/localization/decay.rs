use std::collections::BTreeMap;
use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use super::{axis_distance, site_distance};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Geometry};
use crate::linalg;
use crate::spectral::hs::resolvent;
use crate::spectral::SpectralData;

const MIN_BINS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZetaChoice {
    Fixed { zeta: f64 },
    /// Best residual over `ζ ∈ {0.3, 0.4, …, 1.0}`.
    Search,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayOptions {
    pub zeta: ZetaChoice,
    pub d_min: i64,
    /// Defaults to the largest distance present.
    pub d_max: Option<i64>,
    /// Bins whose mean norm is below this are dropped from the fit.
    pub floor: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { zeta: ZetaChoice::Fixed { zeta: 1.0 }, d_min: 1, d_max: None, floor: 1e-13 }
    }
}

/// `‖χ_x A χ_y‖ ≈ C e^{−m d^ζ}` fitted on `[window.0, window.1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub prefactor: f64,
    pub rate: f64,
    pub zeta: f64,
    /// RMS deviation of the binned log norms from the fit.
    pub fit_residual: f64,
    pub window: (i64, i64),
    pub bins_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    pub distance: i64,
    pub mean_lognorm: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub bins: Vec<ProfileBin>,
}

impl DecayProfile {
    /// Bins `ln|value|` by distance; zero entries are skipped.
    pub fn from_pairs(pairs: impl Iterator<Item = (i64, f64)>) -> Self {
        let mut acc: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
        for (d, v) in pairs {
            if v > 0.0 {
                let e = acc.entry(d).or_insert((0.0, 0));
                e.0 += v.ln();
                e.1 += 1;
            }
        }
        DecayProfile {
            bins: acc
                .into_iter()
                .map(|(distance, (s, count))| ProfileBin { distance, mean_lognorm: s / count as f64, count })
                .collect(),
        }
    }

    /// CSV with columns `distance_bin,mean_lognorm,count`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["distance_bin", "mean_lognorm", "count"])?;
        for b in &self.bins {
            out.write_record([b.distance.to_string(), format!("{:.10e}", b.mean_lognorm), b.count.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Incremental ordinary least squares.
struct LeastSquares {
    xtx: Mat<f64>,
    xty: Vec<f64>,
    yty: f64,
    count: usize,
}

impl LeastSquares {
    fn new(p: usize) -> Self {
        LeastSquares { xtx: Mat::zeros(p, p), xty: vec![0.0; p], yty: 0.0, count: 0 }
    }

    fn add(&mut self, x: &[f64], y: f64) {
        let p = self.xty.len();
        for i in 0..p {
            self.xty[i] += x[i] * y;
            for j in 0..p {
                self.xtx[(i, j)] += x[i] * x[j];
            }
        }
        self.yty += y * y;
        self.count += 1;
    }

    /// Coefficients and RMS residual.
    fn solve(&self) -> Result<(Vec<f64>, f64)> {
        let p = self.xty.len();
        if self.count < p {
            return Err(Error::Numerical(format!("least squares with {} points for {p} unknowns", self.count)));
        }
        let rhs = Mat::from_fn(p, 1, |i, _| self.xty[i]);
        let beta = self.xtx.partial_piv_lu().solve(&rhs);
        let beta: Vec<f64> = (0..p).map(|i| beta[(i, 0)]).collect();
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Numerical("singular least-squares system".into()));
        }
        let mut rss = self.yty;
        for i in 0..p {
            rss -= 2.0 * beta[i] * self.xty[i];
            for j in 0..p {
                rss += beta[i] * self.xtx[(i, j)] * beta[j];
            }
        }
        Ok((beta, (rss.max(0.0) / self.count as f64).sqrt()))
    }
}

fn zeta_grid(choice: ZetaChoice) -> Vec<f64> {
    match choice {
        ZetaChoice::Fixed { zeta } => vec![zeta],
        ZetaChoice::Search => (3..=10).map(|k| k as f64 / 10.0).collect(),
    }
}

/// Fits `mean_lognorm ≈ ln C − m d^ζ` on the usable bins.
pub fn fit_profile(profile: &DecayProfile, options: &DecayOptions) -> Result<DecayFit> {
    let d_max = options.d_max.unwrap_or(i64::MAX);
    let ln_floor = options.floor.ln();
    let used: Vec<&ProfileBin> = profile
        .bins
        .iter()
        .filter(|b| b.distance >= options.d_min && b.distance <= d_max && b.mean_lognorm > ln_floor)
        .collect();
    if used.len() < MIN_BINS {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least {MIN_BINS} distance bins above the floor, got {}",
            used.len()
        )));
    }
    let window = (used[0].distance, used[used.len() - 1].distance);
    let mut best: Option<DecayFit> = None;
    for zeta in zeta_grid(options.zeta) {
        if !(zeta > 0.0 && zeta <= 1.0) {
            return Err(Error::InvalidArgument(format!("zeta must lie in (0, 1] (got {zeta})")));
        }
        let mut ls = LeastSquares::new(2);
        for b in &used {
            ls.add(&[1.0, -(b.distance as f64).powf(zeta)], b.mean_lognorm);
        }
        let (beta, res) = ls.solve()?;
        let fit = DecayFit { prefactor: beta[0].exp(), rate: beta[1], zeta, fit_residual: res, window, bins_used: used.len() };
        if best.as_ref().map_or(true, |b| fit.fit_residual < b.fit_residual) {
            best = Some(fit);
        }
    }
    Ok(best.expect("zeta grid is nonempty"))
}

fn abs_profile(a: MatRef<'_, c64>, geometry: &Geometry) -> DecayProfile {
    let coords = geometry.coords();
    let n = coords.len();
    DecayProfile::from_pairs((0..n).flat_map(|y| {
        let coords = &coords;
        (0..n).map(move |x| (site_distance(geometry, coords[x], coords[y]), a[(x, y)].norm()))
    }))
}

fn check_square(a: MatRef<'_, c64>, geometry: &Geometry) -> Result<()> {
    let n = geometry.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Dimension { expected: n, got: a.nrows() });
    }
    Ok(())
}

/// Decay of `|P_xy|` with the distance between `x` and `y`.
pub fn projector_kernel_decay(p: MatRef<'_, c64>, geometry: &Geometry, options: &DecayOptions) -> Result<(DecayFit, DecayProfile)> {
    check_square(p, geometry)?;
    let profile = abs_profile(p, geometry);
    Ok((fit_profile(&profile, options)?, profile))
}

/// Three-factor decay of `[P, Λ₂]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorDecay {
    /// Rates of `|x₁−y₁|^ζ`, `|x₂|^ζ` and `|y₂|^ζ`, distances of `x₂`, `y₂`
    /// measured from the nearest step of `Λ₂`.
    pub rates: [f64; 3],
    pub prefactor: f64,
    pub zeta: f64,
    pub fit_residual: f64,
    pub points: usize,
    /// One-variable fit against `|x₁−y₁|` alone.
    pub longitudinal: DecayFit,
    pub profile_dx1: DecayProfile,
    pub profile_x2: DecayProfile,
    /// Largest entry between two sites where `Λ₂` takes the same value 0 or 1.
    pub same_side_max: f64,
}

/// Decay of `[P, Λ₂]` with `Λ₂` stepping at `x₂ = step`.
pub fn commutator_kernel_decay(
    p: MatRef<'_, c64>,
    l2: &[f64],
    step: f64,
    geometry: &Geometry,
    options: &DecayOptions,
) -> Result<CommutatorDecay> {
    check_square(p, geometry)?;
    if l2.len() != geometry.dim() {
        return Err(Error::Dimension { expected: geometry.dim(), got: l2.len() });
    }
    let c = linalg::commutator_diag(p, l2);
    let coords = geometry.coords();
    let n = coords.len();
    let (lo2, hi2) = geometry.coord_range(1);
    let d2 = |x2: i64| -> f64 {
        let d = (x2 as f64 - step).abs();
        if geometry.boundary(1) == Boundary::Periodic {
            let seam = (x2 as f64 - (hi2 as f64 + 0.5)).abs().min((x2 as f64 - (lo2 as f64 - 0.5)).abs());
            d.min(seam)
        } else {
            d
        }
    };

    let mut same_side_max = 0.0f64;
    let mut dx1_pairs = Vec::new();
    let mut x2_pairs = Vec::new();
    for y in 0..n {
        for x in 0..n {
            let v = c[(x, y)].norm();
            if l2[x] == l2[y] && (l2[x] == 0.0 || l2[x] == 1.0) {
                same_side_max = same_side_max.max(v);
            }
            dx1_pairs.push((axis_distance(geometry, 0, coords[x].0, coords[y].0), v));
            x2_pairs.push((d2(coords[x].1).round() as i64, v));
        }
    }
    let profile_dx1 = DecayProfile::from_pairs(dx1_pairs.into_iter());
    let profile_x2 = DecayProfile::from_pairs(x2_pairs.into_iter());
    let longitudinal = fit_profile(&profile_dx1, &DecayOptions { d_min: 0, ..*options })?;

    let mut best: Option<CommutatorDecay> = None;
    for zeta in zeta_grid(options.zeta) {
        let mut ls = LeastSquares::new(4);
        for y in 0..n {
            for x in 0..n {
                let v = c[(x, y)].norm();
                if v <= options.floor {
                    continue;
                }
                let dx = axis_distance(geometry, 0, coords[x].0, coords[y].0) as f64;
                ls.add(&[1.0, -dx.powf(zeta), -d2(coords[x].1).powf(zeta), -d2(coords[y].1).powf(zeta)], v.ln());
            }
        }
        let (beta, res) = ls.solve()?;
        let cand = CommutatorDecay {
            rates: [beta[1], beta[2], beta[3]],
            prefactor: beta[0].exp(),
            zeta,
            fit_residual: res,
            points: ls.count,
            longitudinal: longitudinal.clone(),
            profile_dx1: profile_dx1.clone(),
            profile_x2: profile_x2.clone(),
            same_side_max,
        };
        if best.as_ref().map_or(true, |b| cand.fit_residual < b.fit_residual) {
            best = Some(cand);
        }
    }
    Ok(best.expect("zeta grid is nonempty"))
}

/// Resolvent decay at one spectral parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtRow {
    pub z_re: f64,
    pub z_im: f64,
    /// Distance from `z` to the spectrum.
    pub eta: f64,
    pub fit: DecayFit,
}

/// Fits the decay of `|R(z)_xy|` for each `z`. Points closer than `1e−6` to
/// the spectrum are rejected.
pub fn combes_thomas_check(
    h: MatRef<'_, c64>,
    spectral: &SpectralData,
    geometry: &Geometry,
    z_list: &[c64],
    options: &DecayOptions,
) -> Result<Vec<CtRow>> {
    check_square(h, geometry)?;
    z_list
        .iter()
        .map(|&z| {
            let eta = spectral.eigenvalues.iter().map(|&l| (z - l).norm()).fold(f64::INFINITY, f64::min);
            if eta < 1e-6 {
                return Err(Error::InvalidArgument(format!(
                    "z = {}{:+}i is within {eta:.1e} of the spectrum",
                    z.re, z.im
                )));
            }
            let r = resolvent(h, z);
            let (fit, _) = projector_kernel_decay(r.as_ref(), geometry, options)?;
            Ok(CtRow { z_re: z.re, z_im: z.im, eta, fit })
        })
        .collect()
}

/// Fitted rates nondecreasing in `η` (rows are sorted by `η` first).
pub fn rates_nondecreasing(rows: &[CtRow]) -> bool {
    let mut sorted: Vec<&CtRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    sorted.windows(2).all(|w| w[1].fit.rate >= w[0].fit.rate)
}
