//! Quantum Fisher information of the weak thermal state.
//!
//! Over one temporal mode the state is `ρ = (1 - ε)ρ₀ + ερ₁` with `ρ₀` the
//! vacuum, `ρ₁ = Γ / Tr Γ` the one-photon state and `ε = Tr Γ / M`. Because
//! `ρ₀` is fixed and orthogonal to `ρ₁`,
//!
//! ```text
//! Q(ρ) = ε Q(ρ₁) + J(ε),     J(ε) = (∂ε/∂s)² / (ε(1 - ε))
//! ```
//!
//! When the two sources interfere, `ε` depends on `s` and the classical
//! term `J(ε)/ε` adds to the per-photon information `Q(ρ₁)`. Only the
//! separation `s` is treated as a parameter.

mod gram;
mod grid;

use num_complex::Complex;

use crate::error::{domain, Error, Result};
use crate::optics::{gaussian_overlap, SourcePairModel};
use crate::Real;

pub use gram::{WeakSourceState, CONDITION_LIMIT, EIGENVALUE_CUTOFF};
pub use grid::{grid_one_photon_qfi, GridSpec};

/// Upper end of the weak-source regime for `ε`.
pub const WEAK_SOURCE_LIMIT: f64 = 0.1;

/// Relative size of `J(ε)/ε` against `Q(ρ₁)` above which the correction is
/// flagged as significant.
pub const SIGNIFICANCE_THRESHOLD: f64 = 0.01;

/// Which derivative of the one-photon operator enters the SLD formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QfiConvention {
    /// `ρ₁ = Γ / Tr Γ` differentiated including its trace: `Q(ρ₁)`.
    #[default]
    NormalizedState,
    /// `Γ(s') / Tr Γ(s)` with the trace frozen at the evaluation point. Its
    /// SLD information is `Q(ρ₁) + (∂ε/∂s)²/ε²`, the per-photon total with
    /// the small-`ε` form of `J`.
    FrozenTrace,
}

/// Which evaluation path produced a one-photon QFI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfiMethod {
    /// Closed-form Gram matrix of `{h₊, h₋, ∂h₊, ∂h₋}`.
    GramBasis,
    /// Density matrix sampled on a spatial grid.
    Grid,
    /// Analytic `s → 0⁺` limit.
    CoincidenceLimit,
}

/// Exact `J = ε'²/(ε(1-ε))` or the small-`ε` form `ε'²/ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JForm {
    #[default]
    Exact,
    SmallEpsilon,
}

/// Information budget of one temporal mode, expressed per detected photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiReport<T> {
    /// `Q(ρ₁)`.
    pub q_rho1: T,
    /// `J(ε)` for one temporal mode.
    pub j_eps: T,
    /// `J(ε)/ε`.
    pub per_photon_correction: T,
    /// `Q(ρ₁) + J(ε)/ε = Q(ρ)/ε`.
    pub per_photon_total: T,
    pub epsilon: T,
    pub m_modes: usize,
    /// `J(ε)/ε` exceeds 1% of `Q(ρ₁)`.
    pub correction_significant: bool,
    pub method: QfiMethod,
}

impl<T: Real> QfiReport<T> {
    /// `M·Q(ρ)`, the information of all temporal modes together; this is the
    /// quantity that bounds the Fisher information of any photon-counting
    /// measurement on the full state.
    pub fn total_information(&self) -> T {
        T::from_usize(self.m_modes) * self.epsilon * self.per_photon_total
    }
}

/// `J(ε)` together with `J(ε)/ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JCorrection<T> {
    pub j_eps: T,
    pub per_photon_correction: T,
}

fn check_modes(m_modes: usize) -> Result<()> {
    if m_modes < 1 {
        return domain("m_modes must be >= 1");
    }
    Ok(())
}

/// Expected photons per temporal mode, `ε = 2N₀(1 + Re γ δ)/M`.
///
/// Fails unless `ε < 0.1`, the regime where multi-photon terms are negligible.
pub fn epsilon_of<T: Real>(model: &SourcePairModel<T>, m_modes: usize) -> Result<T> {
    check_modes(m_modes)?;
    let delta = gaussian_overlap(model.separation(), model.sigma());
    let eps =
        T::lit(2.0) * model.n0() * (T::one() + model.gamma().re * delta) / T::from_usize(m_modes);
    let eps = eps.max(T::zero());
    if !(eps < T::lit(WEAK_SOURCE_LIMIT)) {
        return Err(Error::WeakSourceRegime {
            epsilon: eps.to_f64_lossy(),
        });
    }
    Ok(eps)
}

/// `∂ε/∂s = -2N₀ Re γ (s/4σ²) δ / M`.
pub fn epsilon_slope<T: Real>(model: &SourcePairModel<T>, m_modes: usize) -> Result<T> {
    check_modes(m_modes)?;
    let (s, sigma) = (model.separation(), model.sigma());
    let delta = gaussian_overlap(s, sigma);
    Ok(-T::lit(2.0) * model.n0() * model.gamma().re * s * delta
        / (T::lit(4.0) * sigma * sigma * T::from_usize(m_modes)))
}

/// Classical information of the vacuum/one-photon split, `J(ε)`, and `J(ε)/ε`.
///
/// At `ε = 0` (`γ = -1`, `s = 0`) and wherever `∂ε/∂s = 0` both are 0.
pub fn j_correction<T: Real>(
    model: &SourcePairModel<T>,
    m_modes: usize,
    form: JForm,
) -> Result<JCorrection<T>> {
    let eps = epsilon_of(model, m_modes)?;
    let slope = epsilon_slope(model, m_modes)?;
    if eps == T::zero() || slope == T::zero() {
        return Ok(JCorrection {
            j_eps: T::zero(),
            per_photon_correction: T::zero(),
        });
    }
    let denom = match form {
        JForm::Exact => eps * (T::one() - eps),
        JForm::SmallEpsilon => eps,
    };
    let j_eps = slope * slope / denom;
    Ok(JCorrection {
        j_eps,
        per_photon_correction: j_eps / eps,
    })
}

/// `Q(ρ₁)`, the one-photon quantum Fisher information about `s`.
///
/// Uses the Gram-basis construction; falls back to the grid oracle (with a
/// warning) when the Gram matrix is too ill-conditioned. At `s = 0` the
/// `s → 0⁺` limit `(1 - Re γ) / (4σ²(1 + Re γ))` is returned (0 for `γ = -1`).
pub fn one_photon_qfi<T: Real>(model: &SourcePairModel<T>) -> Result<T> {
    Ok(one_photon_qfi_with(model, QfiConvention::NormalizedState)?.0)
}

/// [`one_photon_qfi`] under an explicit convention, also reporting the
/// evaluation path.
pub fn one_photon_qfi_with<T: Real>(
    model: &SourcePairModel<T>,
    convention: QfiConvention,
) -> Result<(T, QfiMethod)> {
    if model.separation() == T::zero() {
        return Ok((coincidence_limit(model), QfiMethod::CoincidenceLimit));
    }
    let state = WeakSourceState::for_qfi(model)?;
    if state.condition_number() > T::lit(CONDITION_LIMIT) {
        log::warn!(
            "Gram matrix condition number {:e} exceeds {:e} at s = {}; using the grid density matrix",
            state.condition_number(),
            CONDITION_LIMIT,
            model.separation()
        );
        let q = grid_one_photon_qfi(model, convention, &GridSpec::for_sigma(model.sigma()))?;
        return Ok((q, QfiMethod::Grid));
    }
    Ok((state.qfi(convention)?, QfiMethod::GramBasis))
}

fn coincidence_limit<T: Real>(model: &SourcePairModel<T>) -> T {
    let g = model.gamma().re;
    let sigma = model.sigma();
    if g <= -T::one() {
        return T::zero();
    }
    (T::one() - g) / (T::lit(4.0) * sigma * sigma * (T::one() + g))
}

/// Per-photon information `Q(ρ₁) + J(ε)/ε` with the exact `J`.
pub fn total_per_photon_information<T: Real>(
    model: &SourcePairModel<T>,
    m_modes: usize,
) -> Result<QfiReport<T>> {
    total_per_photon_information_with(model, m_modes, JForm::Exact)
}

pub fn total_per_photon_information_with<T: Real>(
    model: &SourcePairModel<T>,
    m_modes: usize,
    form: JForm,
) -> Result<QfiReport<T>> {
    let epsilon = epsilon_of(model, m_modes)?;
    let j = j_correction(model, m_modes, form)?;
    let (q_rho1, method) = one_photon_qfi_with(model, QfiConvention::NormalizedState)?;
    let correction_significant = j.per_photon_correction > T::lit(SIGNIFICANCE_THRESHOLD) * q_rho1;
    Ok(QfiReport {
        q_rho1,
        j_eps: j.j_eps,
        per_photon_correction: j.per_photon_correction,
        per_photon_total: q_rho1 + j.per_photon_correction,
        epsilon,
        m_modes,
        correction_significant,
        method,
    })
}

pub(crate) fn coefficient_matrix<T: Real>(gamma: Complex<T>) -> [[Complex<T>; 2]; 2] {
    let one = Complex::new(T::one(), T::zero());
    [[one, gamma], [gamma.conj(), one]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spade::total_fisher;
    use num_complex::Complex64;

    fn model(n0: f64, s: f64, g: f64) -> SourcePairModel<f64> {
        SourcePairModel::real(n0, s, 1.0, g).unwrap()
    }

    #[test]
    fn epsilon_examples() {
        for &s in &[0.0, 0.7, 3.0] {
            assert_eq!(epsilon_of(&model(1.0, s, 0.0), 100).unwrap(), 0.02);
        }
        assert!((epsilon_of(&model(1.0, 0.0, 1.0), 100).unwrap() - 0.04).abs() < 1e-17);
        assert_eq!(epsilon_of(&model(1.0, 0.0, -1.0), 100).unwrap(), 0.0);
    }

    #[test]
    fn epsilon_regime_guard() {
        let err = epsilon_of(&model(10.0, 1.0, 0.0), 100).unwrap_err();
        assert!(matches!(err, Error::WeakSourceRegime { .. }));
        assert!(err.to_string().contains("temporal mode count M"));
        assert!(epsilon_of(&model(1.0, 1.0, 0.0), 0).is_err());
    }

    #[test]
    fn j_vanishes_without_interference_or_at_coincidence() {
        for &s in &[0.0, 0.5, 2.0] {
            assert_eq!(
                j_correction(&model(1.0, s, 0.0), 1000, JForm::Exact)
                    .unwrap()
                    .j_eps,
                0.0
            );
        }
        for &g in &[-1.0, -0.3, 0.8] {
            let j = j_correction(&model(1.0, 0.0, g), 1000, JForm::Exact).unwrap();
            assert_eq!(j.j_eps, 0.0);
            assert_eq!(j.per_photon_correction, 0.0);
        }
    }

    #[test]
    fn small_epsilon_correction_is_scale_free() {
        let reference = j_correction(&model(0.1, 1.0, 0.5), 100, JForm::SmallEpsilon)
            .unwrap()
            .per_photon_correction;
        for &(n0, m) in &[(0.1, 10_000), (10.0, 10_000)] {
            let v = j_correction(&model(n0, 1.0, 0.5), m, JForm::SmallEpsilon)
                .unwrap()
                .per_photon_correction;
            assert!((v - reference).abs() <= 1e-10 * reference);
        }
        let exact = j_correction(&model(0.1, 1.0, 0.5), 100, JForm::Exact).unwrap();
        let approx = j_correction(&model(0.1, 1.0, 0.5), 100, JForm::SmallEpsilon).unwrap();
        assert!(exact.j_eps > approx.j_eps);
    }

    #[test]
    fn incoherent_sources_carry_a_quarter_over_sigma_squared() {
        for &s in &[0.5, 1.0, 2.0] {
            let q = one_photon_qfi(&model(1.0, s, 0.0)).unwrap();
            assert!((q - 0.25).abs() < 1e-10, "s = {s}: {q}");
        }
        let m = SourcePairModel::real(1.0f64, 1.0, 2.0, 0.0).unwrap();
        assert!((one_photon_qfi(&m).unwrap() - 0.25 / 4.0).abs() < 1e-11);
    }

    #[test]
    fn coincidence_limit_matches_small_separation() {
        for &g in &[-0.5, 0.0, 0.5, 1.0] {
            let at_zero = one_photon_qfi(&model(1.0, 0.0, g)).unwrap();
            let near = one_photon_qfi(&model(1.0, 1e-3, g)).unwrap();
            // The approach to the limit is quadratic in s.
            assert!(
                (at_zero - near).abs() < 1e-5,
                "g = {g}: {at_zero} vs {near}"
            );
        }
        let c = SourcePairModel::new(1.0, 1e-3, 1.0, Complex64::new(0.3, 0.4)).unwrap();
        let c0 = c.with_separation(0.0).unwrap();
        assert!((one_photon_qfi(&c).unwrap() - one_photon_qfi(&c0).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn correlated_sources_lose_information_at_coincidence() {
        assert_eq!(one_photon_qfi(&model(1.0, 0.0, 1.0)).unwrap(), 0.0);
        let near = one_photon_qfi(&model(1.0, 1e-2, 1.0)).unwrap();
        let grid = grid_one_photon_qfi(
            &model(1.0, 1e-2, 1.0),
            QfiConvention::NormalizedState,
            &GridSpec::for_sigma(1.0),
        )
        .unwrap();
        assert!(near < 1e-4 && grid < 1e-4);
        assert!((near - grid).abs() <= 1e-4 * near, "{near} vs {grid}");
    }

    #[test]
    fn frozen_trace_adds_small_epsilon_correction() {
        for &(s, g) in &[(0.5, 0.5), (1.0, -0.5), (2.0, 0.9)] {
            let m = model(1.0, s, g);
            let q = one_photon_qfi(&m).unwrap();
            let (full, _) = one_photon_qfi_with(&m, QfiConvention::FrozenTrace).unwrap();
            let j = j_correction(&m, 1000, JForm::SmallEpsilon)
                .unwrap()
                .per_photon_correction;
            assert!((full - (q + j)).abs() <= 1e-10 * full);
        }
    }

    #[test]
    fn report_flags_significant_correction() {
        let r = total_per_photon_information(&model(1.0, 1.0, 0.5), 1000).unwrap();
        assert!(r.per_photon_total > r.q_rho1);
        assert!(r.correction_significant);
        assert_eq!(r.method, QfiMethod::GramBasis);
        let r0 = total_per_photon_information(&model(1.0, 1.0, 0.0), 1000).unwrap();
        assert_eq!(r0.per_photon_total, r0.q_rho1);
        assert!(!r0.correction_significant);
        let rz = total_per_photon_information(&model(1.0, 0.0, 0.7), 1000).unwrap();
        assert_eq!(rz.per_photon_total, rz.q_rho1);
        assert_eq!(rz.method, QfiMethod::CoincidenceLimit);
    }

    #[test]
    fn mode_sorting_saturates_the_full_state_bound() {
        for &g in &[-0.5, 0.0, 0.5] {
            for &s in &[0.5, 1.0, 2.0] {
                let m = model(1.0, s, g);
                let r = total_per_photon_information_with(&m, 10_000, JForm::SmallEpsilon).unwrap();
                let f = total_fisher(&m, 60).unwrap();
                assert!(
                    (r.total_information() - f).abs() <= 1e-9 * f,
                    "g = {g}, s = {s}"
                );
            }
        }
    }
}
