//! Density-matrix QFI on a sampled spatial grid.
//!
//! An oracle for the Gram-basis path: fields are sampled on a uniform grid,
//! the support of `ρ₁` is orthonormalized by Gram–Schmidt, and `∂ρ₁/∂s` is a
//! five-point difference of the sampled operator.

use num_complex::Complex;

use super::{coefficient_matrix, QfiConvention, EIGENVALUE_CUTOFF};
use crate::error::{domain, Error, Result};
use crate::numerics::linalg::hermitian_eigen;
use crate::optics::{psf, SourcePairModel};
use crate::Real;

/// Sampling of the image plane for [`grid_one_photon_qfi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub dx: T,
    pub halfwidth: T,
    /// Step of the five-point separation derivative.
    pub step: T,
}

impl<T: Real> GridSpec<T> {
    /// `Δx = σ/100` on `±10σ`, derivative step `10⁻³σ`.
    pub fn for_sigma(sigma: T) -> Self {
        Self {
            dx: sigma / T::lit(100.0),
            halfwidth: T::lit(10.0) * sigma,
            step: T::lit(1e-3) * sigma,
        }
    }
}

struct Sampled<T> {
    xs: Vec<T>,
    weight: T,
    n0: T,
    sigma: T,
    gamma: Complex<T>,
}

impl<T: Real> Sampled<T> {
    fn fields(&self, s: T) -> [Vec<T>; 2] {
        let half = T::lit(0.5);
        let plus = self
            .xs
            .iter()
            .map(|&x| self.weight * psf(x + half * s, self.sigma))
            .collect();
        let minus = self
            .xs
            .iter()
            .map(|&x| self.weight * psf(x - half * s, self.sigma))
            .collect();
        [plus, minus]
    }

    fn trace(&self, s: T) -> T {
        let [p, m] = self.fields(s);
        let two = T::lit(2.0);
        p.iter().zip(&m).fold(T::zero(), |acc, (&a, &b)| {
            acc + a * a + b * b + two * self.gamma.re * a * b
        })
    }

    /// `Γ(s) ψ / norm` on the grid.
    fn apply(&self, s: T, norm: T, psi: &[Complex<T>]) -> Vec<Complex<T>> {
        let fields = self.fields(s);
        let c = coefficient_matrix(self.gamma);
        let proj: Vec<Complex<T>> = fields
            .iter()
            .map(|f| {
                f.iter()
                    .zip(psi)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &z)| {
                        acc + z.scale(a)
                    })
            })
            .collect();
        let mut out = vec![Complex::new(T::zero(), T::zero()); psi.len()];
        for a in 0..2 {
            let coef = (c[a][0] * proj[0] + c[a][1] * proj[1]).scale(self.n0 / norm);
            for (o, &f) in out.iter_mut().zip(&fields[a]) {
                *o = *o + coef.scale(f);
            }
        }
        out
    }
}

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| {
            acc + x.conj() * y
        })
}

/// One-photon QFI from the grid-sampled density matrix.
pub fn grid_one_photon_qfi<T: Real>(
    model: &SourcePairModel<T>,
    convention: QfiConvention,
    spec: &GridSpec<T>,
) -> Result<T> {
    if !(spec.dx > T::zero() && spec.halfwidth > spec.dx && spec.step > T::zero()) {
        return domain("grid spacing, half-width and step must be positive");
    }
    let count = (T::lit(2.0) * spec.halfwidth / spec.dx)
        .round()
        .to_usize()
        .unwrap_or(0)
        + 1;
    let xs = (0..count)
        .map(|k| -spec.halfwidth + T::from_usize(k) * spec.dx)
        .collect();
    let grid = Sampled {
        xs,
        weight: spec.dx.sqrt(),
        n0: model.n0(),
        sigma: model.sigma(),
        gamma: model.gamma(),
    };
    let s = model.separation();
    let norm_at = |sep: T| match convention {
        QfiConvention::NormalizedState => grid.n0 * grid.trace(sep),
        QfiConvention::FrozenTrace => grid.n0 * grid.trace(s),
    };
    let centre_norm = norm_at(s);
    if !(centre_norm > T::zero()) {
        return Err(Error::Degenerate(
            "no one-photon component on the grid".into(),
        ));
    }

    // orthonormal basis of span{h₊, h₋}
    let [p, m] = grid.fields(s);
    let mut basis: Vec<Vec<Complex<T>>> = Vec::new();
    for f in [&p, &m] {
        let mut v: Vec<Complex<T>> = f.iter().map(|&x| Complex::new(x, T::zero())).collect();
        let scale = dot(&v, &v).re.sqrt();
        for b in &basis {
            let overlap = dot(b, &v);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi = *vi - overlap * bi;
            }
        }
        let len = dot(&v, &v).re.sqrt();
        if len > T::lit(1e-10) * scale {
            basis.push(v.into_iter().map(|z| z.unscale(len)).collect());
        }
    }

    let images: Vec<Vec<Complex<T>>> = basis
        .iter()
        .map(|b| grid.apply(s, centre_norm, b))
        .collect();
    let reduced: Vec<Vec<Complex<T>>> = basis
        .iter()
        .map(|bi| images.iter().map(|img| dot(bi, img)).collect())
        .collect();
    let eig = hermitian_eigen(&reduced)?;
    let cutoff = T::lit(EIGENVALUE_CUTOFF);
    let support: Vec<(T, Vec<Complex<T>>)> = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .filter(|(&l, _)| l > cutoff)
        .map(|(&l, u)| {
            let mut psi = vec![Complex::new(T::zero(), T::zero()); count];
            for (uk, bk) in u.iter().zip(&basis) {
                for (pi, bi) in psi.iter_mut().zip(bk) {
                    *pi = *pi + *uk * bi;
                }
            }
            (l, psi)
        })
        .collect();

    let h = spec.step;
    let two = T::lit(2.0);
    let stencil = [
        (two, -T::one()),
        (T::one(), T::lit(8.0)),
        (-T::one(), -T::lit(8.0)),
        (-two, T::one()),
    ];
    let derivative = |psi: &[Complex<T>]| -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); psi.len()];
        for &(offset, w) in &stencil {
            let sep = s + offset * h;
            let img = grid.apply(sep, norm_at(sep), psi);
            for (o, v) in out.iter_mut().zip(img) {
                *o = *o + v.scale(w / (T::lit(12.0) * h));
            }
        }
        out
    };
    let d_support: Vec<Vec<Complex<T>>> = support.iter().map(|(_, psi)| derivative(psi)).collect();

    let mut q = T::zero();
    for (i, (li, _)) in support.iter().enumerate() {
        let mut inside = T::zero();
        for (lj, psi_j) in support.iter() {
            let elem = dot(psi_j, &d_support[i]).norm_sqr();
            inside = inside + elem;
            q = q + two * elem / (*li + *lj);
        }
        let outside = (dot(&d_support[i], &d_support[i]).re - inside).max(T::zero());
        q = q + T::lit(4.0) * outside / *li;
    }
    Ok(q)
}
