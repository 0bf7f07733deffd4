use crate::error::{domain, Error, Result};
use crate::Real;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Integration scheme for integrals over the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Gauss-Hermite rule with the Gaussian weight matched to `scale`.
    GaussHermite,
    /// Adaptive Simpson refinement on `[-domain_halfwidth, domain_halfwidth]`.
    AdaptiveSimpson,
}

/// Settings for [`integrate`] and [`integrate_2d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec<T> {
    pub scheme: Scheme,
    /// Gauss-Hermite order.
    pub nodes: usize,
    /// Half-width of the truncated domain of the adaptive scheme.
    pub domain_halfwidth: T,
    /// Width `σ` of the integrand's Gaussian envelope; the Gauss-Hermite
    /// variable is `x / (√2 σ)`.
    pub scale: T,
    pub abs_tol: T,
}

const MAX_DEPTH: u32 = 48;
const INITIAL_PANELS: usize = 32;

impl<T: Real> QuadratureSpec<T> {
    pub fn gauss_hermite(sigma: T) -> Self {
        Self {
            scheme: Scheme::GaussHermite,
            nodes: 200,
            domain_halfwidth: T::lit(12.0) * sigma,
            scale: sigma,
            abs_tol: T::lit(1e-12),
        }
    }

    pub fn adaptive(sigma: T) -> Self {
        Self {
            scheme: Scheme::AdaptiveSimpson,
            ..Self::gauss_hermite(sigma)
        }
    }

    pub fn with_abs_tol(mut self, abs_tol: T) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 16 {
            return domain("quadrature needs at least 16 nodes");
        }
        if !(self.abs_tol > T::zero()) {
            return domain("quadrature abs_tol must be > 0");
        }
        if !(self.scale > T::zero()) || !(self.domain_halfwidth > T::zero()) {
            return domain("quadrature scale and domain must be > 0");
        }
        Ok(())
    }
}

/// Gauss-Hermite nodes `t_i` and scaled weights `w_i exp(t_i²)` for the
/// weight `exp(-t²)`, ordered by increasing node.
///
/// Nodes are bracketed by Sturm-sequence bisection on the Jacobi matrix and
/// polished by one Newton step on the orthonormal recurrence; weights come
/// from the recurrence derivative. Rules are cached per order.
pub fn gauss_hermite_rule(n: usize) -> Arc<Vec<(f64, f64)>> {
    type Rule = Arc<Vec<(f64, f64)>>;
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&n) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build_gauss_hermite_rule(n));
    cache
        .lock()
        .expect("quadrature cache poisoned")
        .insert(n, Arc::clone(&rule));
    rule
}

/// Orthonormal Hermite value at `z` and its derivative.
fn hermite_orthonormal(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = std::f64::consts::PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal Jacobi
/// matrix of the Hermite weight (zero diagonal, off-diagonal `√(k/2)`).
fn sturm_count(n: usize, x: f64) -> usize {
    let mut count = 0;
    let mut d = -x;
    if d < 0.0 {
        count += 1;
    }
    for k in 1..n {
        let b2 = k as f64 / 2.0;
        let prev = if d == 0.0 { f64::EPSILON } else { d };
        d = -x - b2 / prev;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn build_gauss_hermite_rule(n: usize) -> Vec<(f64, f64)> {
    // All roots lie inside the Gershgorin disc of the Jacobi matrix.
    let bound = (2.0 * n as f64).sqrt() + 1.0;
    let mut rule = Vec::with_capacity(n);
    for k in 0..n {
        // The k-th root (ascending) is where the Sturm count steps from k to k+1.
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if sturm_count(n, mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut z = 0.5 * (lo + hi);
        let (p, dp) = hermite_orthonormal(n, z);
        if dp != 0.0 {
            let polished = z - p / dp;
            if polished > lo - 1e-12 && polished < hi + 1e-12 {
                z = polished;
            }
        }
        let (_, dp) = hermite_orthonormal(n, z);
        rule.push((z, (2.0f64.ln() - 2.0 * dp.abs().ln() + z * z).exp()));
    }
    rule
}

/// Integral of `f` over the real line.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, spec: &QuadratureSpec<T>) -> Result<T> {
    spec.validate()?;
    match spec.scheme {
        Scheme::GaussHermite => Ok(gauss_hermite_1d(&f, spec, &gauss_hermite_rule(spec.nodes))),
        Scheme::AdaptiveSimpson => adaptive_simpson(
            &f,
            -spec.domain_halfwidth,
            spec.domain_halfwidth,
            spec.abs_tol,
        ),
    }
}

/// Integral of `f(x, y)` over the plane, as an iterated integral.
pub fn integrate_2d<T: Real, F: Fn(T, T) -> T>(f: F, spec: &QuadratureSpec<T>) -> Result<T> {
    spec.validate()?;
    match spec.scheme {
        Scheme::GaussHermite => {
            let rule = gauss_hermite_rule(spec.nodes);
            Ok(gauss_hermite_1d(
                &|x: T| gauss_hermite_1d(&|y: T| f(x, y), spec, &rule),
                spec,
                &rule,
            ))
        }
        Scheme::AdaptiveSimpson => {
            let a = -spec.domain_halfwidth;
            let b = spec.domain_halfwidth;
            let width = b - a;
            let inner_tol = spec.abs_tol / width;
            let failure = std::cell::Cell::new(None::<f64>);
            let outer = adaptive_simpson(
                &|x: T| match adaptive_simpson(&|y: T| f(x, y), a, b, inner_tol) {
                    Ok(v) => v,
                    Err(Error::NoConvergence { residual }) => {
                        failure.set(Some(failure.get().unwrap_or(0.0).max(residual)));
                        T::zero()
                    }
                    Err(_) => T::nan(),
                },
                a,
                b,
                spec.abs_tol,
            )?;
            match failure.get() {
                Some(residual) => Err(Error::NoConvergence { residual }),
                None => Ok(outer),
            }
        }
    }
}

fn gauss_hermite_1d<T: Real, F: Fn(T) -> T>(
    f: &F,
    spec: &QuadratureSpec<T>,
    rule: &[(f64, f64)],
) -> T {
    let stretch = T::lit(std::f64::consts::SQRT_2) * spec.scale;
    let mut acc = T::zero();
    for &(t, w) in rule {
        let wt = T::lit(w);
        if !wt.is_finite() {
            continue;
        }
        let fx = f(stretch * T::lit(t));
        if fx == T::zero() {
            continue;
        }
        acc = acc + wt * fx;
    }
    acc * stretch
}

struct Panel<T> {
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
}

fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> Result<T> {
    let six = T::lit(6.0);
    let half = T::lit(0.5);
    let n = T::from_usize(INITIAL_PANELS);
    let mut stack = Vec::with_capacity(64);
    for k in (0..INITIAL_PANELS).rev() {
        let lo = a + (b - a) * T::from_usize(k) / n;
        let hi = a + (b - a) * T::from_usize(k + 1) / n;
        let (fa, fm, fb) = (f(lo), f(half * (lo + hi)), f(hi));
        stack.push(Panel {
            a: lo,
            b: hi,
            fa,
            fm,
            fb,
            whole: (hi - lo) * (fa + T::lit(4.0) * fm + fb) / six,
            tol: tol / n,
            depth: 0,
        });
    }
    let mut total = T::zero();
    let mut residual = 0.0f64;
    while let Some(p) = stack.pop() {
        let m = half * (p.a + p.b);
        let lm = half * (p.a + m);
        let rm = half * (m + p.b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - p.a) * (p.fa + T::lit(4.0) * flm + p.fm) / six;
        let right = (p.b - m) * (p.fm + T::lit(4.0) * frm + p.fb) / six;
        let diff = left + right - p.whole;
        if !diff.is_finite() {
            return Err(Error::NoConvergence {
                residual: f64::INFINITY,
            });
        }
        if diff.abs() <= T::lit(15.0) * p.tol || p.depth >= MAX_DEPTH {
            if diff.abs() > T::lit(15.0) * p.tol {
                residual += (diff.abs() / T::lit(15.0)).to_f64_lossy();
            }
            total = total + left + right + diff / T::lit(15.0);
        } else {
            let tol = p.tol * half;
            let depth = p.depth + 1;
            stack.push(Panel {
                a: m,
                b: p.b,
                fa: p.fm,
                fm: frm,
                fb: p.fb,
                whole: right,
                tol,
                depth,
            });
            stack.push(Panel {
                a: p.a,
                b: m,
                fa: p.fa,
                fm: flm,
                fb: p.fm,
                whole: left,
                tol,
                depth,
            });
        }
    }
    if residual > 0.0 {
        return Err(Error::NoConvergence { residual });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{gaussian_overlap, hg_mode, psf};
    use approx::assert_relative_eq;

    fn both(sigma: f64) -> [QuadratureSpec<f64>; 2] {
        [
            QuadratureSpec::gauss_hermite(sigma),
            QuadratureSpec::adaptive(sigma),
        ]
    }

    #[test]
    fn hermite_rule_moments() {
        let rule = gauss_hermite_rule(200);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let m0: f64 = rule.iter().map(|&(t, w)| w * (-t * t).exp()).sum();
        let m2: f64 = rule.iter().map(|&(t, w)| w * t * t * (-t * t).exp()).sum();
        assert_relative_eq!(m0, sqrt_pi, max_relative = 1e-13);
        assert_relative_eq!(m2, sqrt_pi / 2.0, max_relative = 1e-13);
        let small = gauss_hermite_rule(16);
        let m4: f64 = small
            .iter()
            .map(|&(t, w)| w * t.powi(4) * (-t * t).exp())
            .sum();
        assert_relative_eq!(m4, 0.75 * sqrt_pi, max_relative = 1e-13);
    }

    #[test]
    fn normalized_psf_and_mode() {
        for spec in both(1.3) {
            let p = integrate(|x| psf(x, 1.3).powi(2), &spec).unwrap();
            let m = integrate(|x| hg_mode(1, x, 1.3).powi(2), &spec).unwrap();
            assert!((p - 1.0).abs() < 1e-12, "{spec:?}: {p}");
            assert!((m - 1.0).abs() < 1e-12, "{spec:?}: {m}");
        }
    }

    #[test]
    fn displaced_overlap() {
        for spec in both(1.0) {
            let v = integrate(|x| psf(x + 1.0, 1.0) * psf(x - 1.0, 1.0), &spec).unwrap();
            assert!((v - gaussian_overlap(2.0, 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn schemes_agree_on_gaussian_kernels() {
        let integrands: Vec<Box<dyn Fn(f64) -> f64>> = vec![
            Box::new(|x| psf(x - 0.8, 1.0) * hg_mode(3, x, 1.0)),
            Box::new(|x| psf(x + 1.5, 1.0).powi(2) * x * x),
            Box::new(|x| hg_mode(5, x, 1.0) * psf(x - 2.0, 1.0)),
        ];
        let [gh, ad] = both(1.0);
        for f in &integrands {
            let a = integrate(f, &gh).unwrap();
            let b = integrate(f, &ad).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn two_dimensional() {
        let f = |x: f64, y: f64| psf(x, 1.0).powi(2) * psf(y - 0.5, 1.0).powi(2);
        let gh = integrate_2d(f, &QuadratureSpec::gauss_hermite(1.0)).unwrap();
        assert!((gh - 1.0).abs() < 1e-12);
        let ad = integrate_2d(f, &QuadratureSpec::adaptive(1.0).with_abs_tol(1e-9)).unwrap();
        assert!((ad - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reports_non_convergence() {
        let spec = QuadratureSpec::adaptive(1.0).with_abs_tol(1e-14);
        let err = integrate(
            |x: f64| if x > 0.3 { 1.0 / (x - 0.3).sqrt() } else { 0.0 },
            &spec,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoConvergence { residual } if residual > 0.0));
    }

    #[test]
    fn validates_spec() {
        let mut spec = QuadratureSpec::<f64>::gauss_hermite(1.0);
        spec.nodes = 8;
        assert!(integrate(|x| x, &spec).is_err());
        let spec = QuadratureSpec::<f64>::adaptive(1.0).with_abs_tol(0.0);
        assert!(integrate(|x| x, &spec).is_err());
    }
}
