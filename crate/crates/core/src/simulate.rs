//! Monte Carlo check of the Cramér–Rao bound for mode-sorting measurements.
//!
//! Each trial draws Poisson counts in the Hermite-Gaussian modes `0..=q_max`
//! and estimates the separation by maximum likelihood.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`). Trial `i` of a run with
//! seed `seed` uses `ChaCha8Rng::seed_from_u64(seed)` switched to stream `i`,
//! so each trial owns an independent substream and results do not depend on
//! scheduling. Poisson variates use sequential-search inversion for means
//! below 30 and Hörmann's transformed rejection with squeeze (PTRS) above.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::optics::SourcePairModel;
use crate::spade::{mode_photon_number, total_fisher};
use crate::Real;

/// Means at or above this use rejection sampling.
pub const INVERSION_LIMIT: f64 = 30.0;

/// Points of the coarse likelihood scan that precedes golden-section refinement.
pub const SCAN_POINTS: usize = 400;

/// Target bracket width of the refinement, in units of `σ`.
pub const MLE_TOLERANCE: f64 = 1e-7;

/// Parameters of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig<T> {
    /// Scene with the true separation.
    pub model: SourcePairModel<T>,
    pub q_max: usize,
    pub trials: usize,
    pub seed: u64,
    /// Search interval `(s_lo, s_hi)` of the estimator.
    pub bracket: (T, T),
}

impl<T: Real> TrialConfig<T> {
    /// Configuration with the [`default_bracket`] around the true separation.
    pub fn new(model: SourcePairModel<T>, q_max: usize, trials: usize, seed: u64) -> Result<Self> {
        let bracket = default_bracket(model.separation(), model.sigma());
        let config = Self {
            model,
            q_max,
            trials,
            seed,
            bracket,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_bracket(mut self, lo: T, hi: T) -> Result<Self> {
        self.bracket = (lo, hi);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return domain("trials must be >= 1");
        }
        if self.q_max < 1 {
            return domain("qmax must be >= 1");
        }
        let (lo, hi) = self.bracket;
        let s = self.model.separation();
        if !(lo >= T::zero() && lo < s && s < hi && hi.is_finite()) {
            return domain("bracket must satisfy 0 <= s_lo < s < s_hi");
        }
        Ok(())
    }
}

/// `(max(1e-4 σ, s/4), 4 s)`.
///
/// Near `s = 0` the estimator is biased towards the lower edge; the bias is
/// reported by [`run_trials`] and not folded into the variance bound.
pub fn default_bracket<T: Real>(s: T, sigma: T) -> (T, T) {
    let lo = (T::lit(1e-4) * sigma).max(s / T::lit(4.0));
    (lo, T::lit(4.0) * s)
}

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Poisson variate with the given mean.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    if mean < INVERSION_LIMIT {
        poisson_inversion(mean, rng)
    } else {
        poisson_ptrs(mean, rng)
    }
}

fn poisson_inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut k = 0u64;
    // The cap only matters when rounding leaves the cdf a few ulps short of u.
    while u > cdf && k < 1000 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

// W. Hörmann, "The transformed rejection method for generating Poisson
// random variables", Insurance: Mathematics and Economics 12 (1993).
fn poisson_ptrs<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln()
            <= -mean + k * loglam - ln_gamma(k + 1.0)
        {
            return k as u64;
        }
    }
}

/// Poisson counts `k_0..=k_{q_max}` with means `n_q(model)`.
pub fn sample_counts<T: Real, R: Rng + ?Sized>(
    model: &SourcePairModel<T>,
    q_max: usize,
    rng: &mut R,
) -> Vec<u64> {
    (0..=q_max)
        .map(|q| sample_poisson(mode_photon_number(model, q).to_f64_lossy(), rng))
        .collect()
}

/// Poisson log-likelihood of `counts` at separation `s`, up to a constant.
///
/// The constant is chosen so that each mode contributes
/// `k ln(n/k) - n + k`, which vanishes when `n = k`; this keeps the value
/// small near the maximum, where the refinement compares nearby values.
/// A mode with `k > 0` and `n_q(s) = 0` makes the result `-∞`.
pub fn log_likelihood<T: Real>(counts: &[T], template: &SourcePairModel<T>, s: T) -> Result<T> {
    let model = template.with_separation(s)?;
    let mut total = T::zero();
    for (q, &k) in counts.iter().enumerate() {
        let n = mode_photon_number(&model, q);
        if k > T::zero() {
            if !(n > T::zero()) {
                return Ok(T::neg_infinity());
            }
            total = total + k * (n / k).ln() - n + k;
        } else {
            total = total - n;
        }
    }
    Ok(total)
}

/// Maximum-likelihood separation for integer counts.
///
/// The separation of `template` is ignored; the counts index modes from 0.
pub fn mle_separation<T: Real>(
    counts: &[u64],
    template: &SourcePairModel<T>,
    bracket: (T, T),
) -> Result<T> {
    let real: Vec<T> = counts.iter().map(|&k| T::from_usize(k as usize)).collect();
    mle_separation_real(&real, template, bracket)
}

/// Maximum-likelihood separation for real-valued counts.
///
/// Accepts non-integer counts so that expected photon numbers can be fed
/// back in directly; the estimate then recovers the generating separation.
pub fn mle_separation_real<T: Real>(
    counts: &[T],
    template: &SourcePairModel<T>,
    bracket: (T, T),
) -> Result<T> {
    let (lo, hi) = bracket;
    if !(lo >= T::zero() && lo < hi && hi.is_finite()) {
        return domain("bracket must satisfy 0 <= s_lo < s_hi");
    }
    if counts.iter().any(|&k| !(k >= T::zero()) || !k.is_finite()) {
        return domain("counts must be finite and >= 0");
    }
    if counts.iter().all(|&k| k == T::zero()) {
        return Err(Error::UninformativeSample);
    }
    let ll = |s: T| log_likelihood(counts, template, s);

    // Coarse scan; the first maximum wins ties.
    let last = SCAN_POINTS - 1;
    let at = |i: usize| {
        if i == last {
            hi
        } else {
            lo + (hi - lo) * T::from_usize(i) / T::from_usize(last)
        }
    };
    let mut best = (0, ll(lo)?);
    for i in 1..SCAN_POINTS {
        let v = ll(at(i))?;
        if v > best.1 {
            best = (i, v);
        }
    }
    let mut a = at(best.0.saturating_sub(1));
    let mut b = at((best.0 + 1).min(last));

    // Golden-section refinement of the bracketing cell.
    let tol = T::lit(MLE_TOLERANCE) * template.sigma();
    let ratio = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = ll(c)?;
    let mut fd = ll(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = ll(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = ll(d)?;
        }
        if c >= d {
            break;
        }
    }
    let mid = (a + b) / T::lit(2.0);
    // The scan point itself can beat the refined interior when the
    // maximum sits on the bracket edge.
    let candidate = at(best.0);
    if best.1 > ll(mid)? {
        return Ok(candidate);
    }
    Ok(mid)
}

/// Result of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome<T> {
    pub counts: Vec<u64>,
    /// `None` when every count was zero.
    pub estimate: Option<T>,
    pub loglik_at_estimate: T,
    pub loglik_at_truth: T,
}

/// Aggregate statistics of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary<T> {
    pub true_separation: T,
    pub outcomes: Vec<TrialOutcome<T>>,
    /// Trials with an estimate.
    pub informative: usize,
    pub mean: T,
    pub bias: T,
    /// Sample variance of the estimates (unbiased normalization).
    pub variance: T,
    /// Mean squared error about the true separation.
    pub mse: T,
    /// Standard error of the mean estimate.
    pub std_error: T,
    /// Total Fisher information in modes `0..=q_max` at the truth.
    pub fisher: T,
    /// Cramér–Rao bound `1 / F`.
    pub crb: T,
    pub mse_over_crb: T,
    /// Trials whose estimate has a lower likelihood than the truth.
    pub loglik_violations: usize,
}

impl<T: Real> TrialSummary<T> {
    pub fn estimates(&self) -> impl Iterator<Item = T> + '_ {
        self.outcomes.iter().filter_map(|o| o.estimate)
    }
}

fn run_one<T: Real>(config: &TrialConfig<T>, trial: usize) -> Result<TrialOutcome<T>> {
    let mut rng = trial_rng(config.seed, trial as u64);
    let counts = sample_counts(&config.model, config.q_max, &mut rng);
    let real: Vec<T> = counts.iter().map(|&k| T::from_usize(k as usize)).collect();
    let truth = log_likelihood(&real, &config.model, config.model.separation())?;
    match mle_separation_real(&real, &config.model, config.bracket) {
        Ok(s_hat) => Ok(TrialOutcome {
            loglik_at_estimate: log_likelihood(&real, &config.model, s_hat)?,
            loglik_at_truth: truth,
            estimate: Some(s_hat),
            counts,
        }),
        Err(Error::UninformativeSample) => Ok(TrialOutcome {
            counts,
            estimate: None,
            loglik_at_estimate: truth,
            loglik_at_truth: truth,
        }),
        Err(e) => Err(e),
    }
}

/// Runs every trial, in parallel, and aggregates in trial order.
pub fn run_trials<T: Real>(config: &TrialConfig<T>) -> Result<TrialSummary<T>> {
    config.validate()?;
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|i| run_one(config, i))
        .collect::<Result<Vec<_>>>()?;

    let truth = config.model.separation();
    let estimates: Vec<T> = outcomes.iter().filter_map(|o| o.estimate).collect();
    if estimates.is_empty() {
        return Err(Error::UninformativeSample);
    }
    let n = T::from_usize(estimates.len());
    let mean = estimates.iter().fold(T::zero(), |acc, &s| acc + s) / n;
    let mse = estimates
        .iter()
        .fold(T::zero(), |acc, &s| acc + (s - truth) * (s - truth))
        / n;
    let variance = if estimates.len() > 1 {
        estimates
            .iter()
            .fold(T::zero(), |acc, &s| acc + (s - mean) * (s - mean))
            / (n - T::one())
    } else {
        T::zero()
    };
    let fisher = total_fisher(&config.model, config.q_max)?;
    let crb = T::one() / fisher;
    let loglik_violations = outcomes
        .iter()
        .filter(|o| o.estimate.is_some() && o.loglik_at_estimate < o.loglik_at_truth)
        .count();
    Ok(TrialSummary {
        true_separation: truth,
        informative: estimates.len(),
        mean,
        bias: mean - truth,
        variance,
        mse,
        std_error: (variance / n).sqrt(),
        fisher,
        crb,
        mse_over_crb: mse / crb,
        loglik_violations,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn model(n0: f64, s: f64, gamma: f64) -> SourcePairModel<f64> {
        SourcePairModel::real(n0, s, 1.0, gamma).unwrap()
    }

    fn moments(mean: f64, draws: usize, seed: u64) -> (f64, f64) {
        let mut rng = trial_rng(seed, 0);
        let xs: Vec<f64> = (0..draws)
            .map(|_| sample_poisson(mean, &mut rng) as f64)
            .collect();
        let m = xs.iter().sum::<f64>() / draws as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (draws - 1) as f64;
        (m, v)
    }

    #[test]
    fn zero_mean_gives_zero_counts() {
        let mut rng = trial_rng(1, 0);
        for _ in 0..100 {
            assert_eq!(sample_poisson(0.0, &mut rng), 0);
        }
        // Modes above q = 0 are dark for coincident, fully correlated sources.
        let counts = sample_counts(&model(50.0, 0.0, 1.0), 6, &mut rng);
        assert!(counts[1..].iter().all(|&k| k == 0));
    }

    #[test]
    fn poisson_moments_on_both_branches() {
        for &(mean, seed) in &[
            (0.3, 1u64),
            (4.0, 2),
            (29.5, 3),
            (30.0, 4),
            (250.0, 5),
            (1e4, 6),
        ] {
            let (m, v) = moments(mean, 100_000, seed);
            assert!(
                (m - mean).abs() < 4.0 * (mean / 1e5).sqrt(),
                "mean {mean}: {m}"
            );
            assert!((v / m - 1.0).abs() < 0.05, "mean {mean}: var {v}");
        }
    }

    #[test]
    fn ptrs_matches_pmf() {
        let mean = 40.0;
        let draws = 200_000;
        let mut rng = trial_rng(9, 0);
        let mut hist = vec![0usize; 200];
        for _ in 0..draws {
            hist[sample_poisson(mean, &mut rng) as usize] += 1;
        }
        for k in 30..50 {
            let pmf = (-mean + k as f64 * mean.ln() - ln_gamma(k as f64 + 1.0)).exp();
            let expected = pmf * draws as f64;
            assert!(
                (hist[k] as f64 - expected).abs() < 5.0 * expected.sqrt(),
                "k = {k}"
            );
        }
    }

    #[test]
    fn mode_one_sample_mean() {
        let m = model(100.0, 1.0, 0.0);
        let n1 = mode_photon_number(&m, 1);
        let draws = 100_000;
        let total: u64 = (0..draws)
            .map(|i| sample_counts(&m, 1, &mut trial_rng(42, i))[1])
            .sum();
        let mean = total as f64 / draws as f64;
        assert!(
            (mean - n1).abs() < 3.0 * (n1 / draws as f64).sqrt(),
            "{mean} vs {n1}"
        );
    }

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let m = model(1e3, 1.0, -0.5);
        let a = sample_counts(&m, 10, &mut trial_rng(7, 3));
        let b = sample_counts(&m, 10, &mut trial_rng(7, 3));
        let c = sample_counts(&m, 10, &mut trial_rng(7, 4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn expected_counts_recover_the_separation() {
        for &(s, g) in &[(1.0, -0.5), (2.0, 0.0), (0.7, 0.5)] {
            let m = model(1e4, s, g);
            let counts: Vec<f64> = (0..=20).map(|q| mode_photon_number(&m, q)).collect();
            let s_hat = mle_separation_real(&counts, &m, default_bracket(s, 1.0)).unwrap();
            assert!((s_hat - s).abs() < 1e-6, "s = {s}, g = {g}: {s_hat}");
        }
    }

    #[test]
    fn all_zero_counts_are_rejected() {
        let m = model(1.0, 1.0, 0.0);
        assert_eq!(
            mle_separation(&[0, 0, 0], &m, (0.1, 2.0)),
            Err(Error::UninformativeSample)
        );
    }

    #[test]
    fn dark_mode_with_counts_excludes_the_separation() {
        // Mode 1 is dark only at coincidence.
        let m = model(10.0, 1.0, 0.0);
        assert_eq!(
            log_likelihood(&[5.0, 1.0], &m, 0.0).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(log_likelihood(&[5.0, 1.0], &m, 0.5).unwrap().is_finite());
    }

    #[test]
    fn maximum_below_bracket_lands_on_lower_edge() {
        // n_0 = 40 exp(-s²/16) here, so a single mode-0 count of 40 peaks at s = 0.
        let m = model(10.0, 1.0, 1.0);
        let s_hat = mle_separation(&[40], &m, (0.2, 2.0)).unwrap();
        assert!((s_hat - 0.2).abs() < 1e-6, "{s_hat}");
    }

    #[test]
    fn validates_configuration() {
        let m = model(10.0, 1.0, 0.0);
        assert!(TrialConfig::new(m, 20, 0, 1).is_err());
        assert!(TrialConfig::new(m, 20, 10, 1)
            .unwrap()
            .with_bracket(1.5, 3.0)
            .is_err());
        let coincident = model(10.0, 0.0, 0.0);
        assert!(TrialConfig::new(coincident, 20, 10, 1).is_err());
        assert!(mle_separation(&[1, 2], &m, (2.0, 1.0)).is_err());
        let complex = SourcePairModel::new(10.0, 1.0, 1.0, Complex64::new(0.1, 0.2)).unwrap();
        assert!(TrialConfig::new(complex, 20, 10, 1).is_ok());
    }

    #[test]
    fn runs_are_bitwise_reproducible() {
        let config = TrialConfig::new(model(1e3, 1.0, 0.0), 10, 40, 11).unwrap();
        let a = run_trials(&config).unwrap();
        let b = run_trials(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.loglik_violations, 0);
        assert_eq!(a.informative, 40);
    }

    #[test]
    fn incoherent_estimator_is_consistent() {
        let config = TrialConfig::new(model(1e4, 2.0, 0.0), 20, 1000, 2024).unwrap();
        let r = run_trials(&config).unwrap();
        assert!(
            r.bias.abs() < 3.0 * r.std_error,
            "bias {} se {}",
            r.bias,
            r.std_error
        );
        assert!(r.mse >= r.crb * (1.0 - 3.0 / (1000f64).sqrt()));
        assert_eq!(r.loglik_violations, 0);
    }
}
