//! Gaussian imaging of two point sources with a complex degree of coherence.
//!
//! Positions are measured on the image plane. The source at `-s/2` produces
//! the field `h₊(x) = h(x + s/2)` and the source at `+s/2` produces
//! `h₋(x) = h(x - s/2)`, where `h` is the amplitude point-spread function
//!
//! ```text
//! h(x) = (2πσ²)^(-1/4) exp(-x² / 4σ²)
//! ```
//!
//! so that `|h|²` is a normalized Gaussian of standard deviation `σ`. The
//! Hermite-Gaussian modes are matched to the same width:
//! `φ_q(x) = h(x) He_q(x/σ) / √q!`, with `He_q` the probabilists' Hermite
//! polynomials (`φ₁ = (x/σ) h`).

use num_complex::Complex;

use crate::error::{domain, Result};
use crate::Real;

/// Largest mode index accepted by [`hg_amplitudes`].
///
/// The amplitudes are evaluated in log space, so nothing overflows for any
/// index; the cap only bounds the allocation.
pub const MAX_MODE_INDEX: usize = 10_000;

/// Two point sources imaged through a Gaussian point-spread function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePairModel<T> {
    n0: T,
    s: T,
    sigma: T,
    gamma: Complex<T>,
}

impl<T: Real> SourcePairModel<T> {
    /// `n0` is the expected photon number from one source, `s` the
    /// separation, `sigma` the PSF width and `gamma` the complex degree of
    /// coherence between the two source fields.
    pub fn new(n0: T, s: T, sigma: T, gamma: Complex<T>) -> Result<Self> {
        if !(n0 > T::zero()) || !n0.is_finite() {
            return domain("n0 must be > 0");
        }
        if !(s >= T::zero()) || !s.is_finite() {
            return domain("s must be >= 0");
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return domain("sigma must be > 0");
        }
        if !gamma.re.is_finite() || !gamma.im.is_finite() || gamma.norm_sqr() > T::one() {
            return domain("|gamma| must be <= 1");
        }
        Ok(Self {
            n0,
            s,
            sigma,
            gamma,
        })
    }

    /// Same as [`SourcePairModel::new`] with a real degree of coherence.
    pub fn real(n0: T, s: T, sigma: T, gamma: T) -> Result<Self> {
        Self::new(n0, s, sigma, Complex::new(gamma, T::zero()))
    }

    pub fn n0(&self) -> T {
        self.n0
    }

    pub fn separation(&self) -> T {
        self.s
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn gamma(&self) -> Complex<T> {
        self.gamma
    }

    /// Copy of the model at another separation.
    pub fn with_separation(&self, s: T) -> Result<Self> {
        Self::new(self.n0, s, self.sigma, self.gamma)
    }

    /// Copy of the model with another degree of coherence.
    pub fn with_gamma(&self, gamma: Complex<T>) -> Result<Self> {
        Self::new(self.n0, self.s, self.sigma, gamma)
    }

    /// Field of the source at `-s/2`.
    pub fn h_plus(&self, x: T) -> T {
        psf(x + self.s / T::lit(2.0), self.sigma)
    }

    /// Field of the source at `+s/2`.
    pub fn h_minus(&self, x: T) -> T {
        psf(x - self.s / T::lit(2.0), self.sigma)
    }

    /// Mean image-plane intensity `Γ(x, x)`.
    pub fn intensity(&self, x: T) -> T {
        let hp = self.h_plus(x);
        let hm = self.h_minus(x);
        self.n0 * (hp * hp + hm * hm + T::lit(2.0) * self.gamma.re * hp * hm)
    }
}

/// Amplitude point-spread function `h(x)`.
pub fn psf<T: Real>(x: T, sigma: T) -> T {
    let norm = (T::lit(2.0) * T::PI() * sigma * sigma).powf(T::lit(-0.25));
    norm * (-(x * x) / (T::lit(4.0) * sigma * sigma)).exp()
}

/// Hermite-Gaussian mode `φ_q(x)` matched to the PSF width.
pub fn hg_mode<T: Real>(q: usize, x: T, sigma: T) -> T {
    let t = x / sigma;
    let mut prev = T::zero();
    let mut cur = psf(x, sigma);
    for k in 1..=q {
        let kf = T::from_usize(k);
        let next = (t * cur - (kf - T::one()).sqrt() * prev) / kf.sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

/// Mutual coherence `Γ(x, x')` on the image plane.
pub fn mutual_coherence<T: Real>(model: &SourcePairModel<T>, x: T, x_prime: T) -> Complex<T> {
    let hp = model.h_plus(x);
    let hm = model.h_minus(x);
    let hp2 = model.h_plus(x_prime);
    let hm2 = model.h_minus(x_prime);
    let g = model.gamma;
    let incoherent = Complex::new(hp * hp2 + hm * hm2, T::zero());
    (incoherent + g * (hp * hm2) + g.conj() * (hm * hp2)).scale(model.n0)
}

/// PSF self-overlap `δ = ∫h₊h₋ dx` of the model.
pub fn overlap_delta<T: Real>(model: &SourcePairModel<T>) -> T {
    gaussian_overlap(model.s, model.sigma)
}

/// `exp(-s²/8σ²)`, the overlap of two copies of `h` displaced by `s`.
pub fn gaussian_overlap<T: Real>(s: T, sigma: T) -> T {
    (-(s * s) / (T::lit(8.0) * sigma * sigma)).exp()
}

/// `1 - δ(s)` without cancellation at small `s`.
pub(crate) fn one_minus_overlap<T: Real>(s: T, sigma: T) -> T {
    -(-(s * s) / (T::lit(8.0) * sigma * sigma)).exp_m1()
}

/// Overlap amplitudes `a_q(x₀) = ∫φ_q(x) h(x - x₀) dx` for `q = 0..=q_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeAmplitudes<T> {
    x0: T,
    sigma: T,
    values: Vec<T>,
}

impl<T: Real> ModeAmplitudes<T> {
    pub fn q_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn displacement(&self) -> T {
        self.x0
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, q: usize) -> Option<T> {
        self.values.get(q).copied()
    }

    /// `Σ a_q²`, the fraction of the displaced PSF captured by the modes.
    pub fn captured_power(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &a| acc + a * a)
    }
}

/// Overlaps of a PSF displaced by `x0` onto the first `q_max + 1` modes.
///
/// `a_q(x₀) = exp(-x₀²/8σ²) (x₀/2σ)^q / √q!`, accumulated in log space so
/// that neither the power nor the factorial is formed explicitly.
pub fn hg_amplitudes<T: Real>(x0: T, sigma: T, q_max: usize) -> Result<ModeAmplitudes<T>> {
    if !(sigma > T::zero()) {
        return domain("sigma must be > 0");
    }
    if !x0.is_finite() {
        return domain("displacement must be finite");
    }
    if q_max > MAX_MODE_INDEX {
        return domain(format!("q_max must be <= {MAX_MODE_INDEX}"));
    }
    let alpha = x0 / (T::lit(2.0) * sigma);
    let mut values = Vec::with_capacity(q_max + 1);
    if alpha == T::zero() {
        values.push(T::one());
        values.resize(q_max + 1, T::zero());
    } else {
        let half = T::lit(0.5);
        let ln_alpha = alpha.abs().ln();
        let mut ln_amp = -half * alpha * alpha;
        for q in 0..=q_max {
            if q > 0 {
                ln_amp = ln_amp + ln_alpha - half * T::from_usize(q).ln();
            }
            let sign = if alpha < T::zero() && q % 2 == 1 {
                -T::one()
            } else {
                T::one()
            };
            values.push(sign * ln_amp.exp());
        }
    }
    Ok(ModeAmplitudes { x0, sigma, values })
}

/// Poisson weight `e^{-u} u^q / q!`, which equals `a_q(x₀)²` for `u = x₀²/4σ²`.
pub(crate) fn poisson_weight<T: Real>(u: T, q: usize) -> T {
    if u == T::zero() {
        return if q == 0 { T::one() } else { T::zero() };
    }
    let mut ln_w = -u + T::from_usize(q) * u.ln();
    for k in 2..=q {
        ln_w = ln_w - T::from_usize(k).ln();
    }
    ln_w.exp()
}
