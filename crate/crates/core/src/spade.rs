//! Photon counting in Hermite-Gaussian modes and its Fisher information.
//!
//! With `u = s²/16σ²` the mean count in mode `q` is
//!
//! ```text
//! n_q = 2 N₀ · e^{-u} u^q / q! · c_q,      c_q = 1 + (-1)^q Re γ
//! ```
//!
//! and under Poisson statistics mode `q` carries `F_q = (∂n_q/∂s)² / n_q`.
//! Writing `n_q = 2N₀ r_q² c_q` with `r_q = √(e^{-u} u^q / q!)` gives
//!
//! ```text
//! F_q = 2 N₀ (2 r_q' √c_q + r_q c_q' / √c_q)²
//! ```
//!
//! where `r_q' = (q - u)/(4σ) · √(e^{-u} u^{q-1} / q!)`. Every factor is
//! finite at `s = 0`, so the zero-separation values come out of the same
//! expression as the analytic limits.

use num_complex::Complex;
use rayon::prelude::*;

use crate::coherence_map::{fixed_p_sector, gamma_of_p, PCoherence};
use crate::error::{domain, Result};
use crate::numerics::{five_point_diff, integrate, QuadratureSpec, DEFAULT_STEP_FRACTION};
use crate::optics::{poisson_weight, psf, SourcePairModel};
use crate::Real;

/// Default truncation of the mode sum.
pub const DEFAULT_Q_MAX: usize = 20;

/// How the degree of coherence behaves as the separation changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coherence<T> {
    /// `γ` held constant.
    FixedGamma(Complex<T>),
    /// Symmetric-mode weight `p` held constant; `γ` follows
    /// [`gamma_of_p`](crate::coherence_map::gamma_of_p).
    FixedP(PCoherence<T>),
}

impl<T: Real> Coherence<T> {
    pub fn real_gamma(gamma: T) -> Self {
        Self::FixedGamma(Complex::new(gamma, T::zero()))
    }

    pub fn fixed_p(p: T) -> Result<Self> {
        Ok(Self::FixedP(PCoherence::new(p)?))
    }

    /// Degree of coherence at separation `s`.
    pub fn gamma_at(&self, s: T, sigma: T) -> Result<Complex<T>> {
        match *self {
            Self::FixedGamma(g) => Ok(g),
            Self::FixedP(p) => Ok(Complex::new(gamma_of_p(p.value(), s, sigma)?, T::zero())),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Self::FixedGamma(g) = self {
            if !(g.norm_sqr() <= T::one()) {
                return domain("|gamma| must be <= 1");
            }
        }
        Ok(())
    }

    pub(crate) fn sector(&self, q: usize, s: T, sigma: T) -> SectorWeight<T> {
        let even = q.is_multiple_of(2);
        match *self {
            Self::FixedGamma(g) => {
                let c = if even {
                    T::one() + g.re
                } else {
                    T::one() - g.re
                };
                SectorWeight::constant(c.max(T::zero()))
            }
            Self::FixedP(p) => fixed_p_sector(p.value(), s, sigma, even),
        }
    }
}

/// Parity-sector multiplier `c_q` with its derivative in `s`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SectorWeight<T> {
    pub c: T,
    pub sqrt_c: T,
    pub slope: T,
    /// `c' / √c`, finite even where `c → 0`.
    pub slope_over_sqrt: T,
}

impl<T: Real> SectorWeight<T> {
    pub fn constant(c: T) -> Self {
        Self {
            c,
            sqrt_c: c.sqrt(),
            slope: T::zero(),
            slope_over_sqrt: T::zero(),
        }
    }
}

/// `(r_q, dr_q/ds)` for the separation-dependent amplitude factor.
fn radial<T: Real>(q: usize, s: T, sigma: T) -> (T, T) {
    let u = s * s / (T::lit(16.0) * sigma * sigma);
    let r = poisson_weight(u, q).sqrt();
    let dr = if q == 0 {
        -s / (T::lit(16.0) * sigma * sigma) * (-u / T::lit(2.0)).exp()
    } else {
        let qf = T::from_usize(q);
        (qf - u) / (T::lit(4.0) * sigma) * (poisson_weight(u, q - 1) / qf).sqrt()
    };
    (r, dr)
}

fn photon_number_at<T: Real>(n0: T, s: T, sigma: T, coherence: &Coherence<T>, q: usize) -> T {
    let (r, _) = radial(q, s, sigma);
    T::lit(2.0) * n0 * r * r * coherence.sector(q, s, sigma).c
}

fn photon_number_slope_at<T: Real>(n0: T, s: T, sigma: T, coherence: &Coherence<T>, q: usize) -> T {
    let (r, dr) = radial(q, s, sigma);
    let w = coherence.sector(q, s, sigma);
    T::lit(2.0) * n0 * r * (T::lit(2.0) * dr * w.c + r * w.slope)
}

fn mode_fisher_at<T: Real>(n0: T, s: T, sigma: T, coherence: &Coherence<T>, q: usize) -> T {
    let (r, dr) = radial(q, s, sigma);
    let w = coherence.sector(q, s, sigma);
    let amp = T::lit(2.0) * dr * w.sqrt_c + r * w.slope_over_sqrt;
    T::lit(2.0) * n0 * amp * amp
}

/// Mean photon count in Hermite-Gaussian mode `q`.
pub fn mode_photon_number<T: Real>(model: &SourcePairModel<T>, q: usize) -> T {
    let coherence = Coherence::FixedGamma(model.gamma());
    photon_number_at(model.n0(), model.separation(), model.sigma(), &coherence, q)
}

/// `∂n_q/∂s = n_q (2q/s - s/8σ²)` at fixed `γ`.
pub fn mode_photon_number_slope<T: Real>(model: &SourcePairModel<T>, q: usize) -> T {
    let coherence = Coherence::FixedGamma(model.gamma());
    photon_number_slope_at(model.n0(), model.separation(), model.sigma(), &coherence, q)
}

/// Mean photon count under an arbitrary coherence parametrization.
pub fn mode_photon_number_with<T: Real>(
    n0: T,
    s: T,
    sigma: T,
    coherence: &Coherence<T>,
    q: usize,
) -> Result<T> {
    check_scene(n0, s, sigma)?;
    coherence.validate()?;
    Ok(photon_number_at(n0, s, sigma, coherence, q))
}

/// `∂n_q/∂s` including the `dγ/ds` chain-rule term of a fixed-`p` scene.
pub fn mode_photon_number_slope_with<T: Real>(
    n0: T,
    s: T,
    sigma: T,
    coherence: &Coherence<T>,
    q: usize,
) -> Result<T> {
    check_scene(n0, s, sigma)?;
    coherence.validate()?;
    Ok(photon_number_slope_at(n0, s, sigma, coherence, q))
}

/// Poisson Fisher information about `s` carried by mode `q` at fixed `γ`.
pub fn mode_fisher<T: Real>(model: &SourcePairModel<T>, q: usize) -> T {
    let coherence = Coherence::FixedGamma(model.gamma());
    mode_fisher_at(model.n0(), model.separation(), model.sigma(), &coherence, q)
}

/// Per-mode Fisher information under an arbitrary coherence parametrization.
pub fn mode_fisher_with<T: Real>(
    n0: T,
    s: T,
    sigma: T,
    coherence: &Coherence<T>,
    q: usize,
) -> Result<T> {
    check_scene(n0, s, sigma)?;
    coherence.validate()?;
    Ok(mode_fisher_at(n0, s, sigma, coherence, q))
}

/// `Σ_{q ≤ q_max} F_q` at fixed `γ`.
pub fn total_fisher<T: Real>(model: &SourcePairModel<T>, q_max: usize) -> Result<T> {
    if q_max < 1 {
        return domain("q_max must be >= 1");
    }
    Ok((0..=q_max).fold(T::zero(), |acc, q| acc + mode_fisher(model, q)))
}

fn check_scene<T: Real>(n0: T, s: T, sigma: T) -> Result<()> {
    if !(n0 > T::zero()) {
        return domain("n0 must be > 0");
    }
    if !(s >= T::zero()) {
        return domain("s must be >= 0");
    }
    if !(sigma > T::zero()) {
        return domain("sigma must be > 0");
    }
    Ok(())
}

/// Per-mode photon numbers and Fisher information along a separation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherReport<T> {
    pub s_grid: Vec<T>,
    /// `per_mode[i][q]` is `F_q` at `s_grid[i]`.
    pub per_mode: Vec<Vec<T>>,
    /// `n_per_mode[i][q]` is `n_q` at `s_grid[i]`.
    pub n_per_mode: Vec<Vec<T>>,
    pub total: Vec<T>,
    pub q_max: usize,
    pub parametrization: Coherence<T>,
}

/// Evaluates one [`FisherReport`] per coherence setting.
///
/// Grid points are computed independently (in parallel), so the result does
/// not depend on evaluation order.
pub fn fisher_curve<T: Real>(
    n0: T,
    sigma: T,
    coherences: &[Coherence<T>],
    s_grid: &[T],
    q_max: usize,
) -> Result<Vec<FisherReport<T>>> {
    check_scene(n0, T::zero(), sigma)?;
    if q_max < 1 {
        return domain("q_max must be >= 1");
    }
    if s_grid.is_empty() || s_grid.iter().any(|&s| !(s >= T::zero()) || !s.is_finite()) {
        return domain("s grid must be non-empty with values >= 0");
    }
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("s grid must be strictly increasing");
    }
    coherences
        .iter()
        .map(|coherence| {
            coherence.validate()?;
            let rows: Vec<(Vec<T>, Vec<T>)> = s_grid
                .par_iter()
                .map(|&s| {
                    coherence.gamma_at(s, sigma)?;
                    let f = (0..=q_max)
                        .map(|q| mode_fisher_at(n0, s, sigma, coherence, q))
                        .collect();
                    let n = (0..=q_max)
                        .map(|q| photon_number_at(n0, s, sigma, coherence, q))
                        .collect();
                    Ok((f, n))
                })
                .collect::<Result<_>>()?;
            let (per_mode, n_per_mode): (Vec<Vec<T>>, Vec<Vec<T>>) = rows.into_iter().unzip();
            let total = per_mode
                .iter()
                .map(|row| row.iter().fold(T::zero(), |a, &b| a + b))
                .collect();
            Ok(FisherReport {
                s_grid: s_grid.to_vec(),
                per_mode,
                n_per_mode,
                total,
                q_max,
                parametrization: *coherence,
            })
        })
        .collect()
}

/// Fisher information of an ideal pixel-free intensity measurement,
/// `∫(∂I/∂s)² / I dx` with `I = Γ(x, x)`, using the default adaptive
/// quadrature.
pub fn direct_imaging_fisher<T: Real>(model: &SourcePairModel<T>) -> Result<T> {
    direct_imaging_fisher_with(model, &QuadratureSpec::adaptive(model.sigma()))
}

/// [`direct_imaging_fisher`] with explicit quadrature settings. The
/// separation derivative is a five-point difference with step `10⁻³σ`.
pub fn direct_imaging_fisher_with<T: Real>(
    model: &SourcePairModel<T>,
    spec: &QuadratureSpec<T>,
) -> Result<T> {
    let (n0, s, sigma, re_g) = (
        model.n0(),
        model.separation(),
        model.sigma(),
        model.gamma().re,
    );
    let half = T::lit(0.5);
    let intensity = move |x: T, sep: T| {
        let hp = psf(x + half * sep, sigma);
        let hm = psf(x - half * sep, sigma);
        n0 * (hp * hp + hm * hm + T::lit(2.0) * re_g * hp * hm)
    };
    let h = T::lit(DEFAULT_STEP_FRACTION) * sigma;
    let mut local = *spec;
    local.domain_halfwidth = spec.domain_halfwidth + half * s;
    local.abs_tol = spec.abs_tol * n0 / (sigma * sigma);
    integrate(
        |x| {
            let i = intensity(x, s);
            if !(i > T::min_positive_value()) {
                return T::zero();
            }
            let di = five_point_diff(|sep| intensity(x, sep), s, h).unwrap_or(T::zero());
            di * di / i
        },
        &local,
    )
}
