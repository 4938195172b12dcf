//! Comparison functions for the soliton operator: spherical caps, the
//! boundary collar `ψ(r) = μ log(1 + k r)`, and the radial barriers used to
//! bound solutions from above near a point of the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, HoroError, Result};
use crate::operator::{f_rhs, StencilSample};
use crate::quadrature::{self, QuadOptions};

/// `F(s) = log √(1 + s⁻²)`, a decreasing diffeomorphism of `(0, ∞)`.
#[allow(non_snake_case)]
pub fn F_diffeo(s: f64) -> f64 {
    0.5 * (1.0 / (s * s)).ln_1p()
}

/// `F⁻¹(y) = 1/√(e^{2y} − 1)`.
#[allow(non_snake_case)]
pub fn F_inverse(y: f64) -> f64 {
    1.0 / (2.0 * y).exp_m1().sqrt()
}

/// Height-independent bounds on the boundary extension `φ̂` and the
/// distance function `r` over a tubular neighborhood of the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollarConstants {
    /// Bound for `1 + |Dφ̂|² + |D²φ̂|²`.
    pub c1: f64,
    /// Bound for `|Δφ̂| + |D²φ̂(Y, Y)|` over unit `Y`.
    pub c2: f64,
    /// Bound for `|D²r(Y, Y)|`.
    pub c3: f64,
    /// Bound for `−f` above the smallest boundary value.
    pub c_phi: f64,
}

/// Derivatives of the boundary extension at one sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSample {
    pub grad: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
}

impl CollarConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 >= 1.0 && self.c1.is_finite()) {
            return Err(invalid(format!("C1 must be at least 1, got {}", self.c1)));
        }
        for (v, name) in [(self.c2, "C2"), (self.c3, "C3")] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if !(self.c_phi > 0.0 && self.c_phi.is_finite()) {
            return Err(invalid(format!("C_phi must be positive, got {}", self.c_phi)));
        }
        Ok(())
    }

    /// Sampled bounds: `samples` are derivatives of `φ̂` over the collar,
    /// `d2r_norm` bounds the operator norm of `D²r` there, and `inf_phi` is
    /// the smallest boundary value. Frobenius norms bound the quadratic
    /// forms, so the result is conservative on the samples.
    pub fn from_samples(samples: &[ExtensionSample], d2r_norm: f64, inf_phi: f64, n: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(HoroError::InsufficientSamples("no extension samples".into()));
        }
        if !(d2r_norm >= 0.0) {
            return Err(invalid("curvature bound of the distance function must be nonnegative"));
        }
        let mut c1 = 1.0f64;
        let mut c2 = 0.0f64;
        for s in samples {
            let g2: f64 = s.grad.iter().map(|v| v * v).sum();
            let frob2: f64 = s.hess.iter().flatten().map(|v| v * v).sum();
            let lap: f64 = (0..s.hess.len()).map(|i| s.hess[i][i]).sum();
            c1 = c1.max(1.0 + g2 + frob2);
            c2 = c2.max(lap.abs() + frob2.sqrt());
        }
        let c = CollarConstants { c1, c2, c3: c1 * c1 * d2r_norm, c_phi: -f_rhs(inf_phi, n)? };
        c.validate()?;
        Ok(c)
    }

    /// The constant `C = C2 + C_phi`.
    pub fn c(&self) -> f64 {
        self.c2 + self.c_phi
    }
}

/// Boundary collar `ψ(r) = μ log(1 + k r)` on `r ∈ [0, width]`, added to a
/// constant extension `φ̂` of the boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Collar {
    pub mu: f64,
    pub kpar: f64,
    pub width: f64,
    pub phi_hat: f64,
}

impl Collar {
    pub fn psi(&self, r: f64) -> f64 {
        self.mu * (self.kpar * r).ln_1p()
    }

    pub fn psi_prime(&self, r: f64) -> f64 {
        self.mu * self.kpar / (1.0 + self.kpar * r)
    }

    pub fn psi_second(&self, r: f64) -> f64 {
        -self.psi_prime(r).powi(2) / self.mu
    }

    /// Bound on the normal derivative of a solution at the boundary.
    pub fn normal_derivative_bound(&self) -> f64 {
        self.mu * self.kpar
    }
}

/// Largest `Q[φ̂ + ψ(r)]` over `samples` equally spaced distances
/// `r ∈ (0, width]` from the boundary of a ball of `radius` in `dim`
/// variables, or of a half-space when `radius` is `None`.
pub fn collar_max_q(collar: &Collar, n: usize, dim: usize, radius: Option<f64>, samples: usize) -> Result<f64> {
    if dim == 0 || samples == 0 {
        return Err(invalid("need a positive dimension and sample count"));
    }
    if let Some(r0) = radius {
        if !(r0 > collar.width) {
            return Err(invalid(format!("ball radius {r0} does not contain the collar of width {}", collar.width)));
        }
    }
    let mut worst = f64::NEG_INFINITY;
    for i in 1..=samples {
        let r = collar.width * i as f64 / samples as f64;
        let (p, pp) = (collar.psi_prime(r), collar.psi_second(r));
        let u = collar.phi_hat + collar.psi(r);
        let w = p.hypot(1.0);
        // radial profile of the distance: normal part ψ''/W³, and the sphere
        // contributes −(dim−1)ψ'/((R − r)W) on the tangent directions
        let tangential = match radius {
            Some(r0) => -((dim - 1) as f64) * p / ((r0 - r) * w),
            None => 0.0,
        };
        let q = pp / (w * w * w) + tangential - f_rhs(u, n)? / w;
        worst = worst.max(q);
    }
    Ok(worst)
}

/// Largest value of the concave quadratic `(−1/μ + C)p² + C3 p + C·C1` over
/// `p ∈ [p_lo, p_hi]`.
fn collar_quadratic_max(mu: f64, bounds: &CollarConstants, p_lo: f64, p_hi: f64) -> f64 {
    let c = bounds.c();
    let a = -1.0 / mu + c;
    let q = |p: f64| a * p * p + bounds.c3 * p + c * bounds.c1;
    let mut best = q(p_lo).max(q(p_hi));
    if a < 0.0 {
        let vertex = -bounds.c3 / (2.0 * a);
        if vertex > p_lo && vertex < p_hi {
            best = best.max(q(vertex));
        }
    }
    best
}

/// Chooses `μ = B2 / log(1 + √k)` and the smallest `k = 2^j ρ⁻²` (`j ≥ 1`)
/// for which the collar estimate is negative on `[0, k^{-1/2}]`.
pub fn collar_barrier_params(b2: f64, bounds: &CollarConstants, rho: f64) -> Result<Collar> {
    collar_barrier_params_for(b2, bounds, rho, 0.0)
}

/// Same, recording `phi_hat` as the constant boundary extension.
pub fn collar_barrier_params_for(b2: f64, bounds: &CollarConstants, rho: f64, phi_hat: f64) -> Result<Collar> {
    if !(b2 > 0.0 && b2.is_finite()) {
        return Err(invalid(format!("height bound must be positive, got {b2}")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid(format!("collar radius must be positive, got {rho}")));
    }
    bounds.validate()?;
    let base = rho.powi(-2);
    for j in 1..=200 {
        let k = base * 2f64.powi(j);
        let mu = b2 / k.sqrt().ln_1p();
        // ψ' runs from μk (at r = 0) down to μk/(1+√k) (at r = k^{-1/2})
        let p_hi = mu * k;
        let p_lo = p_hi / (1.0 + k.sqrt());
        if collar_quadratic_max(mu, bounds, p_lo, p_hi) < 0.0 {
            return Ok(Collar { mu, kpar: k, width: 1.0 / k.sqrt(), phi_hat });
        }
    }
    Err(HoroError::SearchExhausted { k: base * 2f64.powi(200) })
}

fn barrier_quad() -> QuadOptions {
    QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 4000 }
}

/// `ω̃(r) = ∫_r^d F⁻¹(((n−1)/2) log(t/a)) dt` for `a ≤ r ≤ d`.
pub fn omega_tilde(r: f64, a: f64, d: f64, n: usize) -> Result<f64> {
    check_omega(r, a, d, n)?;
    if r == d {
        return Ok(0.0);
    }
    let m = (n - 1) as f64;
    // t = a + σ²: F⁻¹ of the log is ((1 + σ²/a)^{n−1} − 1)^{−1/2}, so
    // 2σ F⁻¹ tends to 2√(a/(n−1)) at σ = 0.
    let integrand = move |sigma: f64| {
        if sigma == 0.0 {
            return 2.0 * (a / m).sqrt();
        }
        let e = (m * (sigma * sigma / a).ln_1p()).exp_m1();
        2.0 * sigma / e.sqrt()
    };
    let q = quadrature::integrate(integrand, (r - a).sqrt(), (d - a).sqrt(), barrier_quad())?;
    Ok(q.value)
}

/// `ω(r) = ω̃(r) − (2d/(n−1)) f(u*) (d − r)`.
pub fn omega_full(r: f64, a: f64, d: f64, u_star: f64, n: usize) -> Result<f64> {
    let base = omega_tilde(r, a, d, n)?;
    let f = f_rhs(u_star, n)?;
    Ok(base - 2.0 * d / (n - 1) as f64 * f * (d - r))
}

fn check_omega(r: f64, a: f64, d: f64, n: usize) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("dimension n = {n} must be at least 2")));
    }
    if !(a > 0.0 && a < d && d.is_finite()) {
        return Err(invalid(format!("need 0 < a < d, got a = {a}, d = {d}")));
    }
    if !(r >= a && r <= d) {
        return Err(invalid(format!("r = {r} outside [{a}, {d}]")));
    }
    Ok(())
}

/// `∫_r^{a0} F⁻¹(θ(t − δ)) dt` for `δ ≤ r ≤ a0`.
pub fn lema2_barrier(r: f64, theta: f64, delta: f64, a0: f64) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(invalid(format!("θ must be positive, got {theta}")));
    }
    if !(delta >= 0.0 && delta < a0 && a0.is_finite()) {
        return Err(invalid(format!("need 0 ≤ δ < a0, got δ = {delta}, a0 = {a0}")));
    }
    if !(r >= delta && r <= a0) {
        return Err(invalid(format!("r = {r} outside [{delta}, {a0}]")));
    }
    if r == a0 {
        return Ok(0.0);
    }
    // t = δ + σ² removes the inverse square root at t = δ
    let integrand = move |sigma: f64| {
        if sigma == 0.0 {
            return 2.0 / (2.0 * theta).sqrt();
        }
        2.0 * sigma / (2.0 * theta * sigma * sigma).exp_m1().sqrt()
    };
    let lo = (r - delta).sqrt();
    let hi = (a0 - delta).sqrt();
    Ok(quadrature::integrate(integrand, lo, hi, barrier_quad())?.value)
}

/// The `δ → 0` bound `∫_0^{a0} F⁻¹(θ s) ds`.
pub fn lema2_limit(theta: f64, a0: f64) -> Result<f64> {
    lema2_barrier(0.0, theta, 0.0, a0)
}

/// `−ω'(r) = F⁻¹(θ(r − δ))` of the barrier above.
pub fn lema2_slope(r: f64, theta: f64, delta: f64) -> f64 {
    F_inverse(theta * (r - delta))
}

/// Upper bound `2ε + c0 − (2d²/(n−1)) f(c0)` with `d = 2·diam`.
pub fn nonexistence_bound(epsilon: f64, diam: f64, n: usize, c0: f64) -> Result<f64> {
    if !(epsilon >= 0.0 && diam > 0.0 && c0 > 0.0) {
        return Err(invalid("ε must be nonnegative; diameter and c0 positive"));
    }
    if n < 2 {
        return Err(invalid(format!("dimension n = {n} must be at least 2")));
    }
    let d = 2.0 * diam;
    let c = 2.0 * d * d / (n - 1) as f64;
    Ok(2.0 * epsilon + c0 - c * f_rhs(c0, n)?)
}

/// Exact value and derivatives of the upper hemisphere of radius `radius`
/// centered at `center` on the boundary, at the horizontal point `x`.
pub fn spherical_cap_sample(center: &[f64], radius: f64, x: &[f64]) -> Result<StencilSample> {
    if center.len() != x.len() {
        return Err(invalid("point and cap center differ in dimension"));
    }
    let y: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
    let h2 = radius * radius - y.iter().map(|v| v * v).sum::<f64>();
    if !(h2 > 0.0) {
        return Err(invalid("point outside the cap's shadow"));
    }
    let u = h2.sqrt();
    let grad = y.iter().map(|v| -v / u).collect();
    let hess = (0..y.len())
        .map(|i| (0..y.len()).map(|j| -(if i == j { 1.0 } else { 0.0 }) / u - y[i] * y[j] / (u * u * u)).collect())
        .collect();
    StencilSample::new(u, grad, hess)
}

/// Tagged family of comparison objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BarrierSpec {
    SphericalCap { center: Vec<f64>, radius: f64 },
    Constant { c: f64 },
    Collar(Collar),
    OmegaTilde { a: f64, d: f64 },
    OmegaFull { a: f64, d: f64, u_star: f64 },
    Lema2Omega { theta: f64, delta: f64, a0: f64 },
}

impl BarrierSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            BarrierSpec::SphericalCap { center, radius } => *radius > 0.0 && center.iter().all(|c| c.is_finite()),
            BarrierSpec::Constant { c } => *c > 0.0,
            BarrierSpec::Collar(c) => {
                c.mu > 0.0 && c.kpar > 0.0 && c.width > 0.0 && c.width <= c.kpar.powf(-0.5) * (1.0 + 1e-12)
            }
            BarrierSpec::OmegaTilde { a, d } => *a > 0.0 && a < d,
            BarrierSpec::OmegaFull { a, d, u_star } => *a > 0.0 && a < d && *u_star > 0.0,
            BarrierSpec::Lema2Omega { theta, delta, a0 } => *theta > 0.0 && *delta >= 0.0 && *a0 > *delta,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid barrier {self:?}")))
        }
    }

    /// Value at the point `x` (caps and constants) or at the radial
    /// coordinate `x[0]` (collar: distance to the boundary; the ω barriers:
    /// their radial variable).
    pub fn value(&self, x: &[f64], n: usize) -> Result<f64> {
        self.validate()?;
        match self {
            BarrierSpec::SphericalCap { center, radius } => {
                if center.len() != x.len() {
                    return Err(invalid("point and cap center differ in dimension"));
                }
                let d2: f64 = center.iter().zip(x).map(|(c, v)| (v - c).powi(2)).sum();
                let h2 = radius * radius - d2;
                if h2 <= 0.0 {
                    return Err(invalid("point outside the cap's shadow"));
                }
                Ok(h2.sqrt())
            }
            BarrierSpec::Constant { c } => Ok(*c),
            BarrierSpec::Collar(c) => Ok(c.phi_hat + c.psi(x[0])),
            BarrierSpec::OmegaTilde { a, d } => omega_tilde(x[0], *a, *d, n),
            BarrierSpec::OmegaFull { a, d, u_star } => omega_full(x[0], *a, *d, *u_star, n),
            BarrierSpec::Lema2Omega { theta, delta, a0 } => lema2_barrier(x[0], *theta, *delta, *a0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_pair() {
        assert!((F_diffeo(1.0) - 0.5 * 2f64.ln()).abs() < 1e-15);
        for s in [1e-4, 0.3, 1.0, 7.0, 1e4] {
            assert!((F_inverse(F_diffeo(s)) / s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(nonexistence_bound(0.0, 1.0, 2, 1.0).unwrap(), 25.0);
    }

    #[test]
    fn omega_endpoints() {
        assert_eq!(omega_tilde(1.0, 0.1, 1.0, 2).unwrap(), 0.0);
        assert_eq!(omega_full(1.0, 0.1, 1.0, 0.5, 2).unwrap(), 0.0);
        assert!(omega_tilde(0.05, 0.1, 1.0, 2).is_err());
        assert_eq!(lema2_barrier(0.5, 1.0, 0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn collar_search_flat_data() {
        let b = CollarConstants { c1: 1.0, c2: 0.0, c3: 0.5, c_phi: 3.0 };
        let c = collar_barrier_params(2.0, &b, 0.5).unwrap();
        assert_eq!(c.psi(0.0), 0.0);
        assert!((c.normal_derivative_bound() - c.psi_prime(0.0)).abs() < 1e-12 * c.psi_prime(0.0));
        assert!(c.kpar > 4.0);
    }
}
