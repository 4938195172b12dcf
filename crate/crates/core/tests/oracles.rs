//! Library values against independent computations done here: closed forms,
//! composite Simpson quadrature and a fixed-step RK4 shooter. The frozen
//! constants were produced by these oracles.

use approx::assert_relative_eq;

use horo_core::barriers;
use horo_core::profiles::{self, ShootingConfig};

/// Composite Simpson rule with `panels` (even) subintervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Grim reaper half-width function by Simpson in `s = √(h − t)`, which
/// removes the inverse square root at the apex.
fn grim_phi_oracle(z: f64, h: f64, n: f64) -> f64 {
    let integrand = |s: f64| {
        if s == 0.0 {
            // limit of 2s / √g(h − s²) with g ≈ (2n/h + 2/h²) s²
            return 2.0 / (2.0 * n / h + 2.0 / (h * h)).sqrt();
        }
        let t = h - s * s;
        let g = (h / t).powf(2.0 * n) * (2.0 / t - 2.0 / h).exp() - 1.0;
        2.0 * s / g.sqrt()
    };
    simpson(integrand, 0.0, (h - z).sqrt(), 20_000)
}

const GRIM_PHI_HALF_1_2: f64 = 0.40403194790253877;

#[test]
fn grim_phi_matches_simpson() {
    for (z, h, n) in [(0.5, 1.0, 2), (0.1, 1.0, 2), (0.3, 2.0, 3), (0.05, 0.5, 2)] {
        let lib = profiles::grim_phi(z, h, n).unwrap();
        assert_relative_eq!(lib, grim_phi_oracle(z, h, n as f64), max_relative = 1e-11);
    }
    assert_relative_eq!(profiles::grim_phi(0.5, 1.0, 2).unwrap(), GRIM_PHI_HALF_1_2, max_relative = 1e-12);
}

#[test]
fn grim_width_is_twice_the_bottom_offset() {
    for (h, n) in [(0.5, 2), (1.0, 3), (2.0, 2)] {
        let w = profiles::grim_width(h, n).unwrap();
        let half = grim_phi_oracle(1e-9 * h, h, n as f64);
        assert_relative_eq!(w, 2.0 * half, max_relative = 1e-8);
    }
}

/// Bowl of height `h` shot from a series start with fixed-step RK4 in
/// arclength; returns `r2` with the cubic boundary correction applied.
fn r2_oracle(h: f64, n: f64) -> f64 {
    let rhs = |y: [f64; 3]| {
        let (z, rho, a) = (y[0], y[1], y[2]);
        [a.cos(), a.sin(), (1.0 + n * z) * a.sin() / (z * z) + (n - 1.0) * a.cos() / rho]
    };
    let upp = -(1.0 + n * h) / (n * h * h);
    let r0 = 1e-3;
    let mut y = [h + 0.5 * upp * r0 * r0, r0, std::f64::consts::FRAC_PI_2 - (upp * r0).atan()];
    let z_stop = 2e-3;
    loop {
        let z = y[0];
        let ds = (1e-4f64).min(0.01 * z * z);
        let step = |y: [f64; 3], k: [f64; 3], c: f64| [y[0] + c * k[0], y[1] + c * k[1], y[2] + c * k[2]];
        let k1 = rhs(y);
        let k2 = rhs(step(y, k1, 0.5 * ds));
        let k3 = rhs(step(y, k2, 0.5 * ds));
        let k4 = rhs(step(y, k3, ds));
        let next: [f64; 3] = std::array::from_fn(|i| y[i] + ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        if next[0] < z_stop {
            // ρ − r2 ≈ (n−1) z³ / (3 r2) near the boundary
            let r = y[1];
            return r - (n - 1.0) * y[0].powi(3) / (3.0 * r);
        }
        y = next;
    }
}

const R2_OF_UNIT_BOWL: f64 = 0.7199275483;

#[test]
fn bowl_r2_matches_rk4_shooter() {
    for (h, n) in [(1.0, 2), (0.5, 3), (2.0, 2)] {
        let lib = profiles::r2_of_h(h, n).unwrap();
        assert_relative_eq!(lib, r2_oracle(h, n as f64), max_relative = 1e-7);
    }
    assert_relative_eq!(profiles::r2_of_h(1.0, 2).unwrap(), R2_OF_UNIT_BOWL, max_relative = 1e-9);
}

#[test]
fn bowl_tip_curvature_balances_the_series() {
    for (h, n) in [(1.0, 2), (0.5, 3), (2.0, 4)] {
        let bowl = profiles::bowl_shoot(h, n, &ShootingConfig::default()).unwrap();
        let nn = n as f64;
        let expect = -(1.0 + nn * h) / (nn * h * h);
        assert_relative_eq!(bowl.tip_second_derivative(0.05 * h).unwrap(), expect, max_relative = 1e-6);
    }
}

#[test]
fn f_diffeo_closed_form_and_integral() {
    assert_relative_eq!(barriers::F_diffeo(1.0), 2f64.sqrt().ln(), max_relative = 1e-15);
    // ∫_s^∞ dτ/(τ(1+τ²)) with τ = 1/x becomes ∫_0^{1/s} x/(1+x²) dx
    for s in [0.3, 1.0, 4.0] {
        let integral = simpson(|x| x / (1.0 + x * x), 0.0, 1.0 / s, 2_000);
        assert_relative_eq!(barriers::F_diffeo(s), integral, max_relative = 1e-11);
    }
    // F⁻¹(y) ≈ 1/√(2y) as y → 0
    let y = 1e-8;
    assert_relative_eq!(barriers::F_inverse(y) * (2.0 * y).sqrt(), 1.0, max_relative = 1e-7);
}

#[test]
fn omega_tilde_closed_forms() {
    // n = 2: the integrand is √a/√(t − a), so ω̃(r) = 2√a (√(d − a) − √(r − a))
    // n = 3: the integrand is a/√(t² − a²), so ω̃(a) = a·arccosh(d/a)
    let (a, d) = (0.1, 1.0);
    assert_relative_eq!(barriers::omega_tilde(a, a, d, 2).unwrap(), 0.6, max_relative = 1e-10);
    for r in [0.2, 0.5, 0.9] {
        let expect = 2.0 * a.sqrt() * ((d - a).sqrt() - (r - a).sqrt());
        assert_relative_eq!(barriers::omega_tilde(r, a, d, 2).unwrap(), expect, max_relative = 1e-10);
    }
    assert_relative_eq!(barriers::omega_tilde(a, a, d, 3).unwrap(), a * (d / a).acosh(), max_relative = 1e-10);
    assert_eq!(barriers::omega_tilde(d, a, d, 2).unwrap(), 0.0);
}

#[test]
fn nonexistence_bound_arithmetic() {
    assert_eq!(barriers::nonexistence_bound(0.0, 1.0, 2, 1.0).unwrap(), 25.0);
    let base = barriers::nonexistence_bound(0.0, 1.0, 3, 0.5).unwrap();
    assert_relative_eq!(barriers::nonexistence_bound(0.25, 1.0, 3, 0.5).unwrap() - base, 0.5, max_relative = 1e-12);
}
