//! Deterministic quadrature over momentum space and the measurement-window
//! time integral.
//!
//! Nodes and weights are generated by fixed algorithms (Newton iteration on
//! the Legendre recurrence, Golub-Welsch via the Jacobi eigensolver for
//! Hermite), so a given `GridSpec` always produces bit-identical results.
//! Convergence is certified by comparing against the same rule with the
//! per-axis order raised by 4.

use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::linalg::{eigh, CMat};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Nodes of ∫e^{-t²}f(t)dt mapped by `p = center + scale·t`; the weight
    /// function is divided out, so the rule integrates plain ∫f(p)dp for
    /// integrands with Gaussian decay.
    GaussHermite,
    /// Finite box `[center - scale, center + scale]`.
    GaussLegendre,
}

/// One integration axis: rule, order, and the affine map to physical
/// momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub scheme: Scheme,
    pub order: usize,
    pub center: f64,
    pub scale: f64,
}

impl AxisSpec {
    pub fn hermite(order: usize, center: f64, scale: f64) -> Self {
        Self {
            scheme: Scheme::GaussHermite,
            order,
            center,
            scale,
        }
    }

    pub fn legendre(order: usize, center: f64, scale: f64) -> Self {
        Self {
            scheme: Scheme::GaussLegendre,
            order,
            center,
            scale,
        }
    }

    fn validate(&self) {
        assert!(self.order >= 2, "axis order must be at least 2");
        assert!(self.scale > 0.0, "axis scale must be positive");
    }

    /// Physical nodes and weights for integrating plain ∫f(p)dp.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        self.validate();
        match self.scheme {
            Scheme::GaussLegendre => gauss_legendre(self.order)
                .into_iter()
                .map(|(t, w)| (self.center + self.scale * t, self.scale * w))
                .collect(),
            Scheme::GaussHermite => gauss_hermite(self.order)
                .into_iter()
                .map(|(t, lnw)| {
                    // weight e^{+t²}w_i assembled in log space so large-order
                    // rules stay finite
                    (self.center + self.scale * t, self.scale * (lnw + t * t).exp())
                })
                .collect(),
        }
    }

    fn raised(&self, extra: usize) -> Self {
        Self {
            order: self.order + extra,
            ..*self
        }
    }
}

/// Tensor-product specification for 3D momentum integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub axes: [AxisSpec; 3],
}

impl GridSpec {
    pub fn hermite_isotropic(order: usize, center: Vec3, scale: f64) -> Self {
        Self {
            axes: [
                AxisSpec::hermite(order, center[0], scale),
                AxisSpec::hermite(order, center[1], scale),
                AxisSpec::hermite(order, center[2], scale),
            ],
        }
    }

    pub fn legendre_box(order: usize, center: Vec3, half_width: f64) -> Self {
        Self {
            axes: [
                AxisSpec::legendre(order, center[0], half_width),
                AxisSpec::legendre(order, center[1], half_width),
                AxisSpec::legendre(order, center[2], half_width),
            ],
        }
    }

    pub fn raised(&self, extra: usize) -> Self {
        Self {
            axes: [
                self.axes[0].raised(extra),
                self.axes[1].raised(extra),
                self.axes[2].raised(extra),
            ],
        }
    }
}

/// Result of a certified integral: the value at the refined order and the
/// difference between the declared and refined rules.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub converged: bool,
}

fn tensor_sum(f: &mut impl FnMut(Vec3) -> Complex64, spec: &GridSpec) -> Complex64 {
    let nx = spec.axes[0].nodes();
    let ny = spec.axes[1].nodes();
    let nz = spec.axes[2].nodes();
    let mut acc = Complex64::new(0.0, 0.0);
    for &(x, wx) in &nx {
        for &(y, wy) in &ny {
            let wxy = wx * wy;
            for &(z, wz) in &nz {
                acc += f([x, y, z]) * (wxy * wz);
            }
        }
    }
    acc
}

/// Tensor-product integral of `f` over momentum space with an order-raising
/// error estimate (declared order vs order+4). `rel_tol` flags
/// non-convergence relative to the integral magnitude.
pub fn integrate_3d(
    mut f: impl FnMut(Vec3) -> Complex64,
    spec: &GridSpec,
    rel_tol: f64,
) -> QuadResult {
    let coarse = tensor_sum(&mut f, spec);
    let fine = tensor_sum(&mut f, &spec.raised(4));
    let err = (fine - coarse).norm();
    let scale = fine.norm().max(1e-300);
    QuadResult {
        value: fine,
        error_estimate: err,
        converged: err <= rel_tol * scale,
    }
}

/// Plain (uncertified) tensor-product integral at the declared order.
pub fn integrate_3d_plain(mut f: impl FnMut(Vec3) -> Complex64, spec: &GridSpec) -> Complex64 {
    tensor_sum(&mut f, spec)
}

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p1, dp) = legendre_and_derivative(n, x);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Hermite nodes with log-weights, via Golub-Welsch on the symmetric
/// tridiagonal companion matrix (off-diagonal √(k/2)).
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let mut t = CMat::zeros(n, n);
    for k in 1..n {
        let off = (k as f64 / 2.0).sqrt();
        t[(k - 1, k)] = Complex64::new(off, 0.0);
        t[(k, k - 1)] = Complex64::new(off, 0.0);
    }
    let (nodes, vecs) = eigh(&t);
    let sqrt_pi = core::f64::consts::PI.sqrt();
    (0..n)
        .map(|i| {
            let v0 = vecs[(0, i)].norm();
            (nodes[i], sqrt_pi.ln() + 2.0 * v0.ln())
        })
        .collect()
}

/// Composite Gauss-Legendre evaluation of `∫₀¹ g(u) e^{ixu} du` for a window
/// profile `g`. The panel count grows with |x| so every oscillation is
/// resolved; the fixed subdivision also covers the endpoint regions where
/// bump profiles are flat to all orders.
pub fn oscillatory_unit_integral(g: impl Fn(f64) -> f64, x: f64) -> Complex64 {
    let panels = 48 + (x.abs() / core::f64::consts::PI) as usize;
    let nodes = gauss_legendre(24);
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let a = p as f64 / panels as f64;
        let b = (p + 1) as f64 / panels as f64;
        let h = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for &(t, w) in &nodes {
            let u = mid + h * t;
            let gv = g(u);
            if gv != 0.0 {
                acc += Complex64::new(0.0, x * u).exp() * (gv * w * h);
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        // ∫_{-1}^{1} x^4 dx = 2/5
        let nodes = gauss_legendre(6);
        let got: f64 = nodes.iter().map(|&(x, w)| w * x.powi(4)).sum();
        assert!((got - 0.4).abs() < 1e-14);
        let total: f64 = nodes.iter().map(|&(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-13);
    }

    #[test]
    fn hermite_normalization() {
        // ∫ e^{-t²} dt = √π through the log-weights
        let nodes = gauss_hermite(20);
        let got: f64 = nodes.iter().map(|&(_, lnw)| lnw.exp()).sum();
        assert!((got - core::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hermite_axis_gaussian_moment() {
        // ∫ e^{-p²/2σ²} p² dp = σ³√(2π)
        let sigma = 0.7;
        let axis = AxisSpec::hermite(24, 0.0, core::f64::consts::SQRT_2 * sigma);
        let got: f64 = axis
            .nodes()
            .iter()
            .map(|&(p, w)| w * (-p * p / (2.0 * sigma * sigma)).exp() * p * p)
            .sum();
        let expect = sigma * sigma * sigma * (2.0 * core::f64::consts::PI).sqrt();
        assert!((got - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn gaussian_moment_3d() {
        // ∫ d³p e^{-p²/2σ²} p_z² = σ² (2πσ²)^{3/2}
        let sigma = 1.3;
        let spec = GridSpec::hermite_isotropic(16, [0.0; 3], core::f64::consts::SQRT_2 * sigma);
        let res = integrate_3d(
            |p| {
                let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
                Complex64::new((-p2 / (2.0 * sigma * sigma)).exp() * p[2] * p[2], 0.0)
            },
            &spec,
            1e-10,
        );
        let expect = sigma * sigma * (2.0 * core::f64::consts::PI * sigma * sigma).powf(1.5);
        assert!(res.converged);
        assert!((res.value.re - expect).abs() < 1e-10 * expect);
        assert!(res.value.im.abs() < 1e-12 * expect);
    }

    #[test]
    fn oscillatory_gaussian_fourier() {
        // ∫ e^{-p²/2σ²} e^{ikp} dp = σ√(2π) e^{-k²σ²/2}
        let sigma = 0.9;
        let k = 2.5;
        let axis = AxisSpec::hermite(40, 0.0, core::f64::consts::SQRT_2 * sigma);
        let got: Complex64 = axis
            .nodes()
            .iter()
            .map(|&(p, w)| {
                Complex64::new(0.0, k * p).exp() * ((-p * p / (2.0 * sigma * sigma)).exp() * w)
            })
            .sum();
        let expect =
            sigma * (2.0 * core::f64::consts::PI).sqrt() * (-k * k * sigma * sigma / 2.0).exp();
        assert!((got.re - expect).abs() < 1e-12 * expect, "{got} vs {expect}");
        assert!(got.im.abs() < 1e-12 * expect);
    }

    #[test]
    fn nonconvergence_is_flagged() {
        // discontinuous integrand defeats a low-order Legendre rule
        let spec = GridSpec::legendre_box(4, [0.0; 3], 1.0);
        let res = integrate_3d(
            |p| Complex64::new(if p[0] > 0.33 { 1.0 } else { 0.0 }, 0.0),
            &spec,
            1e-10,
        );
        assert!(!res.converged);
    }
}
