//! One-photon state on the nonorthogonal basis `{h₊, h₋, ∂ₛh₊, ∂ₛh₋}`.
//!
//! `ρ₁` and `∂ρ₁/∂s` are both of the form `Σ X_ab |f_a⟩⟨f_b|` on this basis.
//! With the Gram matrix `G = ⟨f_a|f_b⟩`, the symmetric (Löwdin) orthonormal
//! basis `f G^{-1/2}` carries them as `G^{1/2} X G^{1/2}`, which needs only
//! the positive square root of `G` and stays defined when `G` is singular.

use num_complex::Complex;

use super::{coefficient_matrix, epsilon_of, QfiConvention};
use crate::error::{Error, Result};
use crate::numerics::linalg::{hermitian_eigen, matmul, psd_sqrt};
use crate::optics::{gaussian_overlap, SourcePairModel};
use crate::Real;

/// Gram condition number above which the grid path takes over.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Pairs of `ρ₁` eigenvalues summing to less than this are rank-null
/// directions and are dropped from the SLD sum.
pub const EIGENVALUE_CUTOFF: f64 = 1e-12;

const NEGATIVE_EIGENVALUE_LIMIT: f64 = -1e-10;

/// Weak thermal state of one temporal mode, `(1 - ε)ρ₀ + ερ₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakSourceState<T> {
    pub epsilon: T,
    pub m_modes: usize,
    /// Overlaps of `{h₊, h₋, ∂ₛh₊, ∂ₛh₋}`.
    pub gram: [[T; 4]; 4],
    /// `ρ₁` coefficients over `{h₊, h₋}`, normalized to unit trace.
    pub coeff: [[Complex<T>; 2]; 2],
    coeff_slope: [[Complex<T>; 2]; 2],
    sqrt_gram: Vec<Vec<T>>,
    condition: T,
}

impl<T: Real> WeakSourceState<T> {
    /// Builds the state for `M` temporal modes; fails outside the weak-source
    /// regime and at `γ = -1`, `s = 0`, where there is no one-photon part.
    pub fn new(model: &SourcePairModel<T>, m_modes: usize) -> Result<Self> {
        let epsilon = epsilon_of(model, m_modes)?;
        let mut state = Self::for_qfi(model)?;
        state.epsilon = epsilon;
        state.m_modes = m_modes;
        Ok(state)
    }

    pub(crate) fn for_qfi(model: &SourcePairModel<T>) -> Result<Self> {
        let (s, sigma, gamma) = (model.separation(), model.sigma(), model.gamma());
        let delta = gaussian_overlap(s, sigma);
        let trace = T::lit(2.0) * (T::one() + gamma.re * delta);
        if !(trace > T::zero()) {
            return Err(Error::Degenerate(
                "no one-photon component for gamma = -1 at s = 0".into(),
            ));
        }
        let trace_slope = -T::lit(2.0) * gamma.re * s * delta / (T::lit(4.0) * sigma * sigma);
        let raw = coefficient_matrix(gamma);
        let mut coeff = raw;
        let mut coeff_slope = raw;
        for a in 0..2 {
            for b in 0..2 {
                coeff[a][b] = raw[a][b].unscale(trace);
                coeff_slope[a][b] = -raw[a][b].scale(trace_slope / (trace * trace));
            }
        }
        let gram = gram_matrix(s, sigma);
        let rows: Vec<Vec<T>> = gram.iter().map(|r| r.to_vec()).collect();
        let (sqrt_gram, condition) = psd_sqrt(&rows)?;
        Ok(Self {
            epsilon: T::nan(),
            m_modes: 0,
            gram,
            coeff,
            coeff_slope,
            sqrt_gram,
            condition,
        })
    }

    /// Spectral condition number of the Gram matrix.
    pub fn condition_number(&self) -> T {
        self.condition
    }

    fn orthonormal(&self, x: &[[Complex<T>; 4]; 4]) -> Vec<Vec<Complex<T>>> {
        let r: Vec<Vec<Complex<T>>> = self
            .sqrt_gram
            .iter()
            .map(|row| row.iter().map(|&v| Complex::new(v, T::zero())).collect())
            .collect();
        let xm: Vec<Vec<Complex<T>>> = x.iter().map(|row| row.to_vec()).collect();
        matmul(&matmul(&r, &xm), &r)
    }

    fn rho_coefficients(&self) -> [[Complex<T>; 4]; 4] {
        let zero = Complex::new(T::zero(), T::zero());
        let mut x = [[zero; 4]; 4];
        for a in 0..2 {
            for b in 0..2 {
                x[a][b] = self.coeff[a][b];
            }
        }
        x
    }

    fn slope_coefficients(&self, convention: QfiConvention) -> [[Complex<T>; 4]; 4] {
        let zero = Complex::new(T::zero(), T::zero());
        let mut x = [[zero; 4]; 4];
        for a in 0..2 {
            for b in 0..2 {
                x[a][b] = match convention {
                    QfiConvention::NormalizedState => self.coeff_slope[a][b],
                    QfiConvention::FrozenTrace => zero,
                };
                // |∂h_a⟩⟨h_b| + |h_a⟩⟨∂h_b|
                x[2 + a][b] = self.coeff[a][b];
                x[a][2 + b] = self.coeff[a][b];
            }
        }
        x
    }

    /// Eigenvalues of `ρ₁` (four of them, at most two nonzero).
    pub fn one_photon_spectrum(&self) -> Result<Vec<T>> {
        Ok(hermitian_eigen(&self.orthonormal(&self.rho_coefficients()))?.values)
    }

    /// SLD quantum Fisher information `Σ 2|⟨i|∂ρ|j⟩|²/(λ_i + λ_j)`.
    pub fn qfi(&self, convention: QfiConvention) -> Result<T> {
        let rho = self.orthonormal(&self.rho_coefficients());
        let drho = self.orthonormal(&self.slope_coefficients(convention));
        let eig = hermitian_eigen(&rho)?;
        if let Some(&min) = eig.values.first() {
            if min < T::lit(NEGATIVE_EIGENVALUE_LIMIT) {
                return Err(Error::Internal(format!(
                    "one-photon state has eigenvalue {min:e} < 0"
                )));
            }
        }
        let n = eig.values.len();
        let projected: Vec<Vec<Complex<T>>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, l| {
                            acc + drho[k][l] * eig.vectors[j][l]
                        })
                    })
                    .collect()
            })
            .collect();
        let cutoff = T::lit(EIGENVALUE_CUTOFF);
        let mut q = T::zero();
        for i in 0..n {
            for j in 0..n {
                let denom = eig.values[i] + eig.values[j];
                if denom > cutoff {
                    let elem = (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                        acc + eig.vectors[i][k].conj() * projected[j][k]
                    });
                    q = q + T::lit(2.0) * elem.norm_sqr() / denom;
                }
            }
        }
        Ok(q)
    }
}

/// Closed-form overlaps of `{h₊, h₋, ∂ₛh₊, ∂ₛh₋}`.
///
/// With `k(a, b) = ⟨h(·-a)|h(·-b)⟩ = exp(-(a-b)²/8σ²)`, centres `∓s/2` and
/// `∂ₛ(centre) = ∓1/2`, every entry is a derivative of `k`.
pub(crate) fn gram_matrix<T: Real>(s: T, sigma: T) -> [[T; 4]; 4] {
    let half = T::lit(0.5);
    let centre = [-half * s, half * s];
    let rate = [-half, half];
    let s2 = sigma * sigma;
    let mut g = [[T::zero(); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            let d = centre[i] - centre[j];
            let k = gaussian_overlap(d, sigma);
            let dk_db = d / (T::lit(4.0) * s2) * k;
            let d2k = (T::one() / (T::lit(4.0) * s2) - d * d / (T::lit(16.0) * s2 * s2)) * k;
            g[i][j] = k;
            g[i][2 + j] = rate[j] * dk_db;
            g[2 + i][j] = -rate[i] * dk_db;
            g[2 + i][2 + j] = rate[i] * rate[j] * d2k;
        }
    }
    g
}
