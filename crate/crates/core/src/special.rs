//! Exponential integrals and the height transform used by the degenerate
//! continuation scheme.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `eˣ Eₚ(x)` for integer `p ≥ 1` and `x > 0`, by the continued fraction
/// for `x > 1` and the power series otherwise.
pub fn expint_scaled(p: u32, x: f64) -> f64 {
    assert!(p >= 1 && x > 0.0);
    let nm1 = (p - 1) as f64;
    if x > 1.0 {
        // modified Lentz
        let tiny = 1e-300;
        let mut b = x + p as f64;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (nm1 + i as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h
    } else {
        let mut ans = if p > 1 { 1.0 / nm1 } else { -x.ln() - EULER_GAMMA };
        let mut fact = 1.0;
        for i in 1..10_000u32 {
            fact *= -x / i as f64;
            let del = if i != p - 1 {
                -fact / (i as f64 - nm1)
            } else {
                let psi = -EULER_GAMMA + (1..p).map(|k| 1.0 / k as f64).sum::<f64>();
                fact * (-x.ln() + psi)
            };
            ans += del;
            if del.abs() < ans.abs() * 1e-17 {
                break;
            }
        }
        ans * x.exp()
    }
}

/// Increasing transform `Ψ(u) = u^{n+1} E_{n+2}(1/u)` with
/// `Ψ'(u) = uⁿ e^{−1/u}`. In the variable `v = Ψ(u)` the profiles that meet
/// `u = 0` vertically have bounded slope.
#[derive(Debug, Clone, Copy)]
pub struct HeightTransform {
    n: u32,
}

impl HeightTransform {
    pub fn new(n: usize) -> Self {
        HeightTransform { n: n as u32 }
    }

    pub fn ln_value(&self, u: f64) -> f64 {
        let x = 1.0 / u;
        (self.n + 1) as f64 * u.ln() - x + expint_scaled(self.n + 2, x).ln()
    }

    pub fn value(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.ln_value(u).exp()
    }

    pub fn derivative(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        (self.n as f64 * u.ln() - 1.0 / u).exp()
    }

    /// `Ψ⁻¹(v)` by safeguarded Newton iteration on `ln Ψ`.
    pub fn inverse(&self, v: f64) -> f64 {
        if !(v > 0.0) {
            return 0.0;
        }
        let target = v.ln();
        let n = self.n as f64;
        // large u: Ψ ≈ u^{n+1}/(n+1); small u: Ψ ≈ u^{n+2} e^{−1/u}
        let mut u = if target > 0.0 { ((n + 1.0) * v).powf(1.0 / (n + 1.0)) } else { (1.0 / (-target)).max(1e-3) };
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        for _ in 0..200 {
            let g = self.ln_value(u) - target;
            if g > 0.0 {
                hi = hi.min(u);
            } else {
                lo = lo.max(u);
            }
            // d lnΨ/du = Ψ'/Ψ
            let slope = (self.n as f64 * u.ln() - 1.0 / u - self.ln_value(u)).exp();
            let mut next = u - g / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * u };
            }
            if (next - u).abs() <= 1e-15 * u {
                return next;
            }
            u = next;
        }
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // reference values from 30-digit arithmetic
        assert!((expint_scaled(1, 1.0) * (-1f64).exp() - 0.21938393439552027).abs() < 1e-15);
        assert!((expint_scaled(2, 2.0) * (-2f64).exp() - 0.037534261820490453).abs() < 1e-16);
        assert!((expint_scaled(4, 0.5) * (-0.5f64).exp() - 0.16524282585834806).abs() < 1e-15);
    }

    #[test]
    fn transform_inverse_and_derivative() {
        let t = HeightTransform::new(2);
        for u in [0.01, 0.08, 0.3, 1.0, 4.0, 50.0] {
            let v = t.value(u);
            assert!((t.inverse(v) / u - 1.0).abs() < 1e-13, "u = {u}");
            let d = 1e-6 * u;
            let fd = (t.value(u + d) - t.value(u - d)) / (2.0 * d);
            assert!((fd / t.derivative(u) - 1.0).abs() < 1e-7, "u = {u}");
        }
    }
}
