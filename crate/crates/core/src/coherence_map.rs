//! Mapping between the degree of coherence `γ` and the symmetric-mode
//! weight `p`.
//!
//! For real `γ` the image-plane state splits into the symmetric field
//! `h₊ + h₋` and the antisymmetric field `h₊ - h₋`. The fraction of photons
//! in the symmetric one is
//!
//! ```text
//! p = (1 + γ)(1 + δ) / (2(1 + γδ)),     δ = exp(-s²/8σ²)
//! ```
//!
//! and inverting at fixed `p` gives `γ = (2p - 1 - δ) / (1 + δ(1 - 2p))`.
//! This relation is a reconstruction: it reproduces perfect
//! anticorrelation at `s = 0` for every `p < 1`, `γ ≡ 1` at `p = 1`, and
//! `γ → 2p - 1` for resolved sources.

use crate::error::{domain, Error, Result};
use crate::optics::{gaussian_overlap, one_minus_overlap};
use crate::Real;

/// Symmetric-mode weight `p ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PCoherence<T>(T);

impl<T: Real> PCoherence<T> {
    pub fn new(p: T) -> Result<Self> {
        if !(p >= T::zero() && p <= T::one()) {
            return domain("p must lie in [0, 1]");
        }
        Ok(Self(p))
    }

    pub fn value(self) -> T {
        self.0
    }
}

fn check_inputs<T: Real>(p: T, s: T, sigma: T) -> Result<()> {
    PCoherence::new(p)?;
    if !(s >= T::zero()) {
        return domain("s must be >= 0");
    }
    if !(sigma > T::zero()) {
        return domain("sigma must be > 0");
    }
    Ok(())
}

/// `1 + δ(1 - 2p)`, written to stay exact as `δ → 1`.
fn denominator<T: Real>(p: T, omd: T) -> T {
    T::lit(2.0) * (T::one() - p) - (T::one() - T::lit(2.0) * p) * omd
}

/// Degree of coherence implied by a fixed `p` at separation `s`.
pub fn gamma_of_p<T: Real>(p: T, s: T, sigma: T) -> Result<T> {
    check_inputs(p, s, sigma)?;
    if p == T::one() {
        return Ok(T::one());
    }
    let omd = one_minus_overlap(s, sigma);
    let num = T::lit(2.0) * (p - T::one()) + omd;
    let gamma = num / denominator(p, omd);
    if gamma.abs() > T::one() + T::lit(1e-12) {
        return Err(Error::Internal(format!(
            "gamma_of_p produced |gamma| = {} > 1",
            gamma.abs()
        )));
    }
    Ok(gamma.max(-T::one()).min(T::one()))
}

/// `dγ/ds` at fixed `p`, from `dδ/ds = -(s/4σ²) δ`.
pub fn dgamma_ds<T: Real>(p: T, s: T, sigma: T) -> Result<T> {
    check_inputs(p, s, sigma)?;
    if p == T::one() {
        return Ok(T::zero());
    }
    let omd = one_minus_overlap(s, sigma);
    let den = denominator(p, omd);
    let delta = gaussian_overlap(s, sigma);
    Ok(p * (T::one() - p) * s * delta / (sigma * sigma * den * den))
}

/// Symmetric-mode weight of a real degree of coherence at separation `s`.
pub fn p_of_gamma<T: Real>(gamma: T, s: T, sigma: T) -> Result<T> {
    if !(gamma.abs() <= T::one()) {
        return domain("|gamma| must be <= 1");
    }
    if !(s >= T::zero()) {
        return domain("s must be >= 0");
    }
    if !(sigma > T::zero()) {
        return domain("sigma must be > 0");
    }
    let delta = gaussian_overlap(s, sigma);
    let den = T::one() + gamma * delta;
    if den == T::zero() {
        return Err(Error::Degenerate(
            "p is undefined for gamma = -1 at s = 0 (no light)".into(),
        ));
    }
    let p = (T::one() + gamma) * (T::one() + delta) / (T::lit(2.0) * den);
    Ok(p.max(T::zero()).min(T::one()))
}

/// Per-parity photon-number multiplier `c = 1 ± γ(s)` at fixed `p`, its
/// square root, its `s`-derivative and the ratio `c'/√c`, each written so
/// that `s → 0` has no removable singularity.
pub(crate) fn fixed_p_sector<T: Real>(
    p: T,
    s: T,
    sigma: T,
    even: bool,
) -> crate::spade::SectorWeight<T> {
    use crate::spade::SectorWeight;
    if p == T::one() {
        return SectorWeight::constant(if even { T::lit(2.0) } else { T::zero() });
    }
    let two = T::lit(2.0);
    let one = T::one();
    let omd = one_minus_overlap(s, sigma);
    let delta = gaussian_overlap(s, sigma);
    let den = denominator(p, omd);
    let den32 = den * den.sqrt();
    let s2 = sigma * sigma;
    let slope_even = p * (one - p) * s * delta / (s2 * den * den);
    if even {
        let c = two * p * omd / den;
        // s / √(1 - δ) → √8 σ as s → 0
        let ratio = if s == T::zero() {
            T::lit(8.0).sqrt() * sigma
        } else {
            s / omd.sqrt()
        };
        let slope_over_sqrt = (one - p) * p.sqrt() * delta * ratio / (s2 * den32 * two.sqrt());
        SectorWeight {
            c,
            sqrt_c: c.sqrt(),
            slope: slope_even,
            slope_over_sqrt,
        }
    } else {
        let c = two * (one - p) * (one + delta) / den;
        let slope_over_sqrt =
            -p * (one - p).sqrt() * s * delta / (s2 * den32 * (two * (one + delta)).sqrt());
        SectorWeight {
            c,
            sqrt_c: c.sqrt(),
            slope: -slope_even,
            slope_over_sqrt,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::five_point_diff;
    use proptest::prelude::*;

    const PS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

    #[test]
    fn perfect_anticorrelation_at_coincidence() {
        for &p in &PS {
            assert!((gamma_of_p(p, 0.0, 1.0).unwrap() + 1.0).abs() <= 1e-12);
        }
        assert_eq!(gamma_of_p(0.0, 0.0, 1.0).unwrap(), -1.0);
    }

    #[test]
    fn unit_p_is_fully_correlated() {
        for i in 0..=40 {
            let s = 0.15 * i as f64;
            assert_eq!(gamma_of_p(1.0, s, 1.0).unwrap(), 1.0);
            assert_eq!(dgamma_ds(1.0, s, 1.0).unwrap(), 0.0);
            assert!((p_of_gamma(1.0, s, 1.0).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn resolved_limit_is_two_p_minus_one() {
        for &p in &PS {
            assert!((gamma_of_p(p, 60.0, 1.0).unwrap() - (2.0 * p - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn interpolates_monotonically_between_endpoints() {
        for &p in &PS {
            let mut prev = -1.0;
            for i in 0..=60 {
                let g = gamma_of_p(p, 0.1 * i as f64, 1.0).unwrap();
                assert!(g >= prev - 1e-15 && g <= 2.0 * p - 1.0 + 1e-15);
                prev = g;
            }
        }
    }

    #[test]
    fn derivative_vanishes_at_coincidence() {
        for &p in &PS {
            assert_eq!(dgamma_ds(p, 0.0, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn derivative_matches_five_point() {
        let h = 1e-3;
        let fd = five_point_diff(|s| gamma_of_p(0.5, s, 1.0).unwrap(), 1.0, h).unwrap();
        let an: f64 = dgamma_ds(0.5, 1.0, 1.0).unwrap();
        assert!((fd - an).abs() <= 1e-8 * an.abs(), "{fd} vs {an}");
    }

    #[test]
    fn inverse_examples() {
        assert!((p_of_gamma(0.0f64, 80.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let g: f64 = gamma_of_p(0.3, 1.0, 1.0).unwrap();
        assert!((p_of_gamma(g, 1.0, 1.0).unwrap() - 0.3).abs() <= 1e-12);
        assert!(matches!(
            p_of_gamma(-1.0, 0.0, 1.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn rejects_out_of_range_p() {
        assert!(gamma_of_p(1.2, 0.0, 1.0).is_err());
        assert!(gamma_of_p(-0.1, 0.0, 1.0).is_err());
        assert!(dgamma_ds(0.5, -1.0, 1.0).is_err());
        assert!(p_of_gamma(1.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn sector_weights_sum_to_two() {
        for &p in &PS {
            for i in 0..20 {
                let s = 0.3 * i as f64;
                let e = fixed_p_sector(p, s, 1.0, true);
                let o = fixed_p_sector(p, s, 1.0, false);
                let g = gamma_of_p(p, s, 1.0).unwrap();
                assert!((e.c - (1.0 + g)).abs() < 1e-14);
                assert!((o.c - (1.0 - g)).abs() < 1e-14);
                assert!((e.slope + o.slope).abs() < 1e-15);
                assert!((e.slope - dgamma_ds(p, s, 1.0).unwrap()).abs() < 1e-15);
                if e.c > 0.0 {
                    assert!(
                        (e.slope_over_sqrt - e.slope / e.sqrt_c).abs()
                            < 1e-12 * (1.0 + e.slope_over_sqrt.abs())
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn bounded_monotone_and_invertible(p in 0.0..=1.0f64, dp in 0.0..0.3f64, s in 0.0..8.0f64) {
            let g = gamma_of_p(p, s, 1.0).unwrap();
            prop_assert!(g.abs() <= 1.0);
            let p2 = (p + dp).min(1.0);
            prop_assert!(gamma_of_p(p2, s, 1.0).unwrap() >= g);
            if let Ok(back) = p_of_gamma(g, s, 1.0) {
                if s > 0.1 {
                    prop_assert!((back - p).abs() <= 1e-12, "p = {}, back = {}", p, back);
                }
            }
        }
    }
}
