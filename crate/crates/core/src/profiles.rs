//! Symmetric soliton profiles: grim-reaper cylinders from a closed-form
//! quadrature, and bowl / winglike rotational solitons by shooting.
//!
//! Rotational curves are integrated in the angle form
//! `z' = cos α, ρ' = sin α, α' = (1+nz) sin α / z² + (n−1) cos α / ρ`
//! (arclength `s`). Here `α` is measured from the `+z` axis toward `+ρ`, so a
//! curve leaving the rotation axis horizontally starts at `α = π/2` and a
//! curve hitting `z = 0` vertically ends at `α = π` (mod π). The graph
//! slope angle `θ` of `u(ρ)` is `π/2 − α`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, HoroError, Result};
use crate::fd;
use crate::ode::{self, OdeOptions, Output, Termination};
use crate::quadrature::{self, QuadOptions};
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    GrimReaper,
    Bowl,
    WingUpper,
    WingLower,
    Geodesic,
}

impl ProfileKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProfileKind::GrimReaper => "grim_reaper",
            ProfileKind::Bowl => "bowl",
            ProfileKind::WingUpper => "wing_upper",
            ProfileKind::WingLower => "wing_lower",
            ProfileKind::Geodesic => "geodesic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "grim_reaper" => ProfileKind::GrimReaper,
            "bowl" => ProfileKind::Bowl,
            "wing_upper" => ProfileKind::WingUpper,
            "wing_lower" => ProfileKind::WingLower,
            "geodesic" => ProfileKind::Geodesic,
            _ => return None,
        })
    }

    pub fn is_rotational(self) -> bool {
        matches!(self, ProfileKind::Bowl | ProfileKind::WingUpper | ProfileKind::WingLower)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub s: f64,
    pub z: f64,
    pub rho: f64,
    pub alpha: f64,
}

/// Distinguished points of a branch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BranchMarks {
    /// Height of the inflection point of the lower wing branch.
    pub lambda0: Option<f64>,
    /// Radii where the (upper, lower) wing branches reach `z = 0`.
    pub endpoints: Option<(f64, f64)>,
    /// `(z, ρ)` of the smallest radius on the lower wing branch.
    pub min_radius: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub kind: ProfileKind,
    pub n: usize,
    /// Maximal height.
    pub h: f64,
    /// Radius of the highest point (0 for bowls and grim reapers).
    pub tip_radius: f64,
    /// Radius where the branch reaches the boundary at infinity.
    pub r2: Option<f64>,
    pub samples: Vec<ProfileSample>,
    pub marks: BranchMarks,
    /// Largest ODE residual found by the kind-specific check.
    pub residual_max: f64,
}

impl ProfileCurve {
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind.as_str(),
            "n": self.n,
            "h": self.h,
            "R": self.tip_radius,
            "r2": self.r2,
            "lambda0": self.marks.lambda0,
            "endpoints": self.marks.endpoints.map(|(a, b)| vec![a, b]),
            "residual_max": self.residual_max,
        })
    }

    /// Chart-free residual `|dα/ds − α'(z, ρ, α)|`, with the derivative and
    /// the angle both recovered from sampled positions. Evaluated on samples
    /// with `z ≥ z_cut`, away from the first and last two samples and from
    /// the rotation axis.
    pub fn curvature_residual(&self, z_cut: f64) -> f64 {
        let rot = self.kind.is_rotational();
        let m = self.samples.len();
        if m < 7 {
            return f64::NAN;
        }
        let s: Vec<f64> = self.samples.iter().map(|p| p.s).collect();
        let z: Vec<f64> = self.samples.iter().map(|p| p.z).collect();
        let r: Vec<f64> = self.samples.iter().map(|p| p.rho).collect();
        let rho_scale = r.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut worst = 0.0f64;
        for i in 2..m - 2 {
            if z[i] < z_cut || (rot && r[i] < 1e-2 * rho_scale) {
                continue;
            }
            let (z1, z2) = fd::derivs5(&s, &z, i);
            let (r1, r2) = fd::derivs5(&s, &r, i);
            let speed2 = z1 * z1 + r1 * r1;
            let alpha_s = (z1 * r2 - r1 * z2) / speed2;
            let sp = speed2.sqrt();
            let (sin_a, cos_a) = (r1 / sp, z1 / sp);
            let nn = self.n as f64;
            let mut rhs = (1.0 + nn * z[i]) * sin_a / (z[i] * z[i]);
            if rot {
                rhs += (nn - 1.0) * cos_a / r[i];
            }
            worst = worst.max((alpha_s - rhs).abs());
        }
        worst
    }

    /// Residual of the rotational graph equation
    /// `u''/(1+u'²) + (n−1)u'/ρ + (1+nu)/u² = 0` where the curve is a graph
    /// `z = u(ρ)` with `|u'| ≤ 10`, `ρ ≥ 5%` of the largest radius and
    /// `z ≥ z_cut`. Derivatives come from sampled positions only.
    pub fn u_chart_residual(&self, z_cut: f64) -> f64 {
        let m = self.samples.len();
        if m < 7 {
            return f64::NAN;
        }
        let s: Vec<f64> = self.samples.iter().map(|p| p.s).collect();
        let z: Vec<f64> = self.samples.iter().map(|p| p.z).collect();
        let r: Vec<f64> = self.samples.iter().map(|p| p.rho).collect();
        let rho_scale = r.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let nn = self.n as f64;
        let rot = self.kind.is_rotational();
        let mut worst = 0.0f64;
        for i in 2..m - 2 {
            if z[i] < z_cut || r[i] < 0.05 * rho_scale {
                continue;
            }
            let (z1, z2) = fd::derivs5(&s, &z, i);
            let (r1, r2) = fd::derivs5(&s, &r, i);
            if r1.abs() < 0.1 * (z1 * z1 + r1 * r1).sqrt() {
                continue;
            }
            let up = z1 / r1;
            let upp = (r1 * z2 - z1 * r2) / r1.powi(3);
            let mut res = upp / (1.0 + up * up) + (1.0 + nn * z[i]) / (z[i] * z[i]);
            if rot {
                res += (nn - 1.0) * up / r[i];
            }
            worst = worst.max(res.abs());
        }
        worst
    }

    /// The kind-specific residual stored in `residual_max`: the quadrature
    /// check for grim reapers (a function of `h` and `n`), the graph
    /// residual for bowls and the curvature residual for wing branches.
    pub fn kind_residual(&self) -> Result<f64> {
        match self.kind {
            ProfileKind::GrimReaper => grim_residual(self.h, self.n, 100),
            ProfileKind::Bowl => Ok(self.u_chart_residual(1e-2 * self.h)),
            ProfileKind::WingUpper | ProfileKind::WingLower => Ok(self.curvature_residual(1e-2 * self.h)),
            ProfileKind::Geodesic => Err(invalid("geodesic curves carry no profile residual")),
        }
    }

    /// Smallest `dα/ds` over the samples off the rotation axis; positive
    /// for a strictly concave bowl.
    pub fn min_turning_rate(&self) -> f64 {
        let nn = self.n as f64;
        let rot = self.kind.is_rotational();
        self.samples
            .iter()
            .filter(|p| !(rot && p.rho <= 0.0))
            .map(|p| rhs([p.z, p.rho, p.alpha], nn, rot)[2])
            .fold(f64::INFINITY, f64::min)
    }

    /// Tangent angle at the last sample.
    pub fn terminal_angle(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |p| p.alpha)
    }

    /// Height of the branch above radius `rho` (branch must be a graph over
    /// ρ, e.g. a bowl). Cubic Hermite interpolation in arclength.
    pub fn height_at_radius(&self, rho: f64) -> Result<f64> {
        let seg = self
            .samples
            .windows(2)
            .position(|w| (w[0].rho - rho) * (w[1].rho - rho) <= 0.0 && w[0].rho != w[1].rho)
            .ok_or_else(|| invalid(format!("radius {rho} outside the sampled range")))?;
        let (a, b) = (self.samples[seg], self.samples[seg + 1]);
        let sr = roots::brent(|s| hermite(&a, &b, s).1 - rho, a.s, b.s, 1e-15 * b.s.abs().max(1.0), 100)?;
        Ok(hermite(&a, &b, sr).0)
    }

    /// Radius of the branch at height `z` (branch monotone in z).
    pub fn radius_at_height(&self, z: f64) -> Result<f64> {
        let seg = self
            .samples
            .windows(2)
            .position(|w| (w[0].z - z) * (w[1].z - z) <= 0.0 && w[0].z != w[1].z)
            .ok_or_else(|| invalid(format!("height {z} outside the sampled range")))?;
        let (a, b) = (self.samples[seg], self.samples[seg + 1]);
        let sz = roots::brent(|s| hermite(&a, &b, s).0 - z, a.s, b.s, 1e-15 * b.s.abs().max(1.0), 100)?;
        Ok(hermite(&a, &b, sz).1)
    }

    /// `u''(0)` of a bowl, from a least-squares fit
    /// `u − h = c₂ρ² + c₄ρ⁴ + c₆ρ⁶` over samples with `ρ ≤ ρ_max`.
    pub fn tip_second_derivative(&self, rho_max: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .samples
            .iter()
            .filter(|p| p.rho > 0.0 && p.rho <= rho_max && p.alpha < PI)
            .map(|p| ((p.rho / rho_max).powi(2), p.z - self.h))
            .collect();
        if pts.len() < 6 {
            return Err(HoroError::InsufficientSamples(format!("{} samples near the axis", pts.len())));
        }
        let c = least_squares(&pts, &[1, 2, 3])?;
        Ok(2.0 * c[0] / (rho_max * rho_max))
    }
}

/// Cubic Hermite interpolation of `(z, ρ)` between two samples, using the
/// unit tangents `(cos α, sin α)` as derivatives in `s`.
fn hermite(a: &ProfileSample, b: &ProfileSample, s: f64) -> (f64, f64) {
    let h = b.s - a.s;
    let t = (s - a.s) / h;
    let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
    let h10 = t * (1.0 - t) * (1.0 - t);
    let h01 = t * t * (3.0 - 2.0 * t);
    let h11 = t * t * (t - 1.0);
    let z = h00 * a.z + h10 * h * a.alpha.cos() + h01 * b.z + h11 * h * b.alpha.cos();
    let r = h00 * a.rho + h10 * h * a.alpha.sin() + h01 * b.rho + h11 * h * b.alpha.sin();
    (z, r)
}

/// Least squares for `y ≈ Σ c_k x^{p_k}` via normal equations.
pub(crate) fn least_squares(pts: &[(f64, f64)], powers: &[i32]) -> Result<Vec<f64>> {
    let m = powers.len();
    let mut a = vec![vec![0.0; m + 1]; m];
    for &(x, y) in pts {
        let basis: Vec<f64> = powers.iter().map(|&p| x.powi(p)).collect();
        for i in 0..m {
            for j in 0..m {
                a[i][j] += basis[i] * basis[j];
            }
            a[i][m] += basis[i] * y;
        }
    }
    // Gaussian elimination with partial pivoting on the small system.
    for k in 0..m {
        let p = (k..m).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        if a[k][k].abs() < 1e-300 {
            return Err(HoroError::InsufficientSamples("degenerate least-squares system".into()));
        }
        for i in k + 1..m {
            let l = a[i][k] / a[k][k];
            for j in k..=m {
                a[i][j] -= l * a[k][j];
            }
        }
    }
    let mut c = vec![0.0; m];
    for k in (0..m).rev() {
        let mut acc = a[k][m];
        for j in k + 1..m {
            acc -= a[k][j] * c[j];
        }
        c[k] = acc / a[k][k];
    }
    Ok(c)
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(invalid(format!("dimension n = {n} must be at least {min}")));
    }
    Ok(())
}

fn check_height(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(HoroError::NonpositiveHeight(h));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Grim reapers

/// Integrand of the profile quadrature after `t = h − σ²`:
/// `2σ · {(h/t)^{2n} e^{2/t − 2/h} − 1}^{−1/2}`.
fn grim_integrand(sigma: f64, h: f64, n: f64) -> f64 {
    if sigma == 0.0 {
        return 2.0 / (2.0 * n / h + 2.0 / (h * h)).sqrt();
    }
    let s2 = sigma * sigma;
    let t = h - s2;
    if t <= 0.0 {
        return 0.0;
    }
    let e = -2.0 * n * (-s2 / h).ln_1p() + 2.0 * s2 / (t * h);
    2.0 * sigma.abs() * (-0.5 * e).exp() / (-(-e).exp_m1()).sqrt()
}

fn grim_quad() -> QuadOptions {
    QuadOptions { abs_tol: 1e-17, rel_tol: 1e-15, max_intervals: 2000 }
}

/// `φ` as a function of `σ = √(h − z)`, extended oddly to `σ < 0`.
fn grim_phi_sigma(sigma: f64, h: f64, n: f64) -> Result<f64> {
    let v = quadrature::integrate(|s| grim_integrand(s, h, n), 0.0, sigma.abs(), grim_quad())?.value;
    Ok(v.copysign(sigma))
}

/// Horizontal distance from the top of the grim reaper of height `h` to its
/// point at height `z`:
/// `φ(z) = ∫_z^h {(h/t)^{2n} e^{2/t − 2/h} − 1}^{−1/2} dt`.
pub fn grim_phi(z: f64, h: f64, n: usize) -> Result<f64> {
    check_height(h)?;
    check_n(n, 1)?;
    if !(z > 0.0 && z <= h) {
        return Err(invalid(format!("height {z} outside (0, {h}]")));
    }
    if z == h {
        return Ok(0.0);
    }
    grim_phi_sigma((h - z).sqrt(), h, n as f64)
}

/// Closed-form slope `φ'(z) = −{(h/z)^{2n} e^{2/z − 2/h} − 1}^{−1/2}`.
pub fn grim_phi_prime(z: f64, h: f64, n: usize) -> Result<f64> {
    check_height(h)?;
    if !(z > 0.0 && z < h) {
        return Err(invalid(format!("height {z} outside (0, {h})")));
    }
    let nn = n as f64;
    let e = 2.0 * nn * (h / z).ln() + 2.0 * (h - z) / (z * h);
    Ok(-(-0.5 * e).exp() / (-(-e).exp_m1()).sqrt())
}

/// Full width of the grim reaper of height `h`, i.e. `2 φ(0⁺)`.
pub fn grim_width(h: f64, n: usize) -> Result<f64> {
    check_height(h)?;
    check_n(n, 1)?;
    Ok(2.0 * grim_phi_sigma(h.sqrt(), h, n as f64)?)
}

/// Height of the grim reaper whose width is `w`, found by a monotone root
/// search for `h ∈ [10⁻⁶, 10⁶]` to relative tolerance `tol`.
pub fn grim_height_for_width(w: f64, n: usize, tol: f64) -> Result<f64> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(invalid(format!("width must be positive, got {w}")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let lo = 1e-6;
    let hi = 1e6;
    if grim_width(lo, n)? > w || grim_width(hi, n)? < w {
        return Err(HoroError::BracketFailure(format!("width {w} not attained for heights in [{lo}, {hi}]")));
    }
    roots::solve_increasing(|h| Ok((grim_width(h, n)? / w).ln()), w, lo, hi, tol)
}

/// Height `u(x)` of the grim reaper of height `h`, centered at `x = 0`.
pub fn grim_height_at(x: f64, h: f64, n: usize) -> Result<f64> {
    GrimReaper::new(h, n)?.height_at(x)
}

/// Grim reaper of a fixed height with `φ` tabulated on a uniform grid in
/// `σ = √(h − z)`, for many evaluations of the same curve.
#[derive(Debug, Clone)]
pub struct GrimReaper {
    h: f64,
    n: f64,
    step: f64,
    phi: Vec<f64>,
}

const GRIM_PANELS: usize = 128;

impl GrimReaper {
    pub fn new(h: f64, n: usize) -> Result<Self> {
        check_height(h)?;
        check_n(n, 1)?;
        let nn = n as f64;
        let step = h.sqrt() / GRIM_PANELS as f64;
        let mut phi = Vec::with_capacity(GRIM_PANELS + 1);
        phi.push(0.0);
        for k in 0..GRIM_PANELS {
            let a = k as f64 * step;
            let v = quadrature::kronrod21_value(|s| grim_integrand(s, h, nn), a, a + step);
            phi.push(phi[k] + v);
        }
        Ok(GrimReaper { h, n: nn, step, phi })
    }

    pub fn height(&self) -> f64 {
        self.h
    }

    pub fn half_width(&self) -> f64 {
        self.phi[GRIM_PANELS]
    }

    fn phi_sigma(&self, sigma: f64) -> f64 {
        let k = ((sigma / self.step) as usize).min(GRIM_PANELS - 1);
        let a = k as f64 * self.step;
        self.phi[k] + quadrature::kronrod21_value(|s| grim_integrand(s, self.h, self.n), a, sigma)
    }

    /// Height at horizontal offset `x` from the axis.
    pub fn height_at(&self, x: f64) -> Result<f64> {
        let target = x.abs();
        let half = self.half_width();
        if target >= half {
            return Err(invalid(format!("|x| = {target} outside the grim reaper of half width {half}")));
        }
        if target == 0.0 {
            return Ok(self.h);
        }
        let k = self.phi.partition_point(|&p| p <= target) - 1;
        let (mut lo, mut hi) = (k as f64 * self.step, (k + 1) as f64 * self.step);
        let (p0, p1) = (self.phi[k], self.phi[k + 1]);
        let mut s = lo + (target - p0) / (p1 - p0) * self.step;
        for _ in 0..60 {
            let g = self.phi_sigma(s) - target;
            if g > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let d = grim_integrand(s, self.h, self.n);
            let mut next = s - g / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-15 * self.step || hi - lo <= 1e-15 * self.step {
                s = next;
                break;
            }
            s = next;
        }
        Ok(self.h - s * s)
    }
}

/// Residual of `φ_zz/(1+φ_z²) = (nz+1) φ_z / z²` at `points` equally spaced
/// interior heights, with derivatives of the quadrature values taken by
/// sixth-order central differences in `σ = √(h − z)`.
pub fn grim_residual(h: f64, n: usize, points: usize) -> Result<f64> {
    check_height(h)?;
    check_n(n, 1)?;
    let nn = n as f64;
    let d = 1e-3 * h.sqrt();
    let mut worst = 0.0f64;
    for k in 1..=points {
        let z = h * k as f64 / (points + 1) as f64;
        let sigma = (h - z).sqrt();
        let f = (-3..=3).map(|j| grim_phi_sigma(sigma + j as f64 * d, h, nn)).collect::<Result<Vec<_>>>()?;
        let ps = (-f[0] + 9.0 * f[1] - 45.0 * f[2] + 45.0 * f[4] - 9.0 * f[5] + f[6]) / (60.0 * d);
        let pss = (2.0 * (f[0] + f[6]) - 27.0 * (f[1] + f[5]) + 270.0 * (f[2] + f[4]) - 490.0 * f[3]) / (180.0 * d * d);
        // z = h − σ², so z_σ = −2σ and z_σσ = −2
        let pz = ps / (-2.0 * sigma);
        let pzz = (pss + 2.0 * pz) / (4.0 * sigma * sigma);
        let res = pzz / (1.0 + pz * pz) - (nn * z + 1.0) * pz / (z * z);
        worst = worst.max(res.abs());
    }
    Ok(worst)
}

/// Right half of the grim reaper of height `h`, sampled at
/// `z_i = h(1 − (i/m)²)`, `i = 0..m`, with `s` the arclength from the top.
pub fn grim_curve(h: f64, n: usize, samples: usize) -> Result<ProfileCurve> {
    check_height(h)?;
    check_n(n, 1)?;
    if samples < 8 {
        return Err(invalid(format!("need at least 8 samples, got {samples}")));
    }
    let nn = n as f64;
    let m = samples as f64;
    let mut out = Vec::with_capacity(samples);
    // arclength integrand in σ: ds = √(1+φ_z²) dz = √(4σ² + φ_σ²) dσ
    let speed = |s: f64| (4.0 * s * s + grim_integrand(s, h, nn).powi(2)).sqrt();
    let mut s_acc = 0.0;
    let mut sigma_prev = 0.0;
    for i in 0..samples {
        let t = i as f64 / m;
        let z = h * (1.0 - t * t);
        let sigma = h.sqrt() * t;
        s_acc += quadrature::integrate(speed, sigma_prev, sigma, grim_quad())?.value;
        sigma_prev = sigma;
        let rho = grim_phi_sigma(sigma, h, nn)?;
        let alpha = if i == 0 { FRAC_PI_2 } else { PI + grim_phi_prime(z, h, n)?.atan() };
        out.push(ProfileSample { s: s_acc, z, rho, alpha });
    }
    let residual_max = grim_residual(h, n, 100)?;
    Ok(ProfileCurve {
        kind: ProfileKind::GrimReaper,
        n,
        h,
        tip_radius: 0.0,
        r2: Some(0.5 * grim_width(h, n)?),
        samples: out,
        marks: BranchMarks::default(),
        residual_max,
    })
}

// ---------------------------------------------------------------------------
// Rotational shooting

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Integration stops at this height.
    pub z_floor: f64,
    pub max_steps: usize,
    /// Radius of the series patch at the rotation axis; defaults to
    /// `10⁻³·min(h, 1)`.
    pub series_radius: Option<f64>,
    /// Arclength spacing of recorded samples; defaults to `10⁻³·min(h, 1)`.
    pub sample_step: Option<f64>,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-13,
            z_floor: 1e-6,
            max_steps: 5_000_000,
            series_radius: None,
            sample_step: None,
        }
    }
}

impl ShootingConfig {
    pub fn with_z_floor(mut self, z_floor: f64) -> Self {
        self.z_floor = z_floor;
        self
    }

    fn resolve(&self, h: f64) -> Result<(f64, f64)> {
        let pos = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        pos(self.rel_tol, "rel_tol")?;
        pos(self.abs_tol, "abs_tol")?;
        pos(self.z_floor, "z_floor")?;
        if self.max_steps == 0 {
            return Err(invalid("max_steps must be positive"));
        }
        if self.z_floor >= 0.1 * h {
            return Err(invalid(format!("z_floor {} must be below h/10 = {}", self.z_floor, 0.1 * h)));
        }
        let series = self.series_radius.unwrap_or(1e-3 * h.min(1.0));
        pos(series, "series_radius")?;
        if series >= 0.1 * h {
            return Err(invalid(format!("series radius {series} must be below h/10")));
        }
        let ds = self.sample_step.unwrap_or(1e-3 * h.min(1.0));
        pos(ds, "sample_step")?;
        Ok((series, ds))
    }

    fn ode(&self) -> OdeOptions {
        OdeOptions { rtol: self.rel_tol, atol: self.abs_tol, h0: None, h_max: f64::INFINITY, max_steps: self.max_steps }
    }
}

/// Angle-form right-hand side `(z', ρ', α')` of the profile curve.
pub fn arclength_rhs(state: [f64; 3], n: usize, rotational: bool) -> Result<[f64; 3]> {
    let [z, rho, _] = state;
    if !(z > 0.0) {
        return Err(HoroError::NonpositiveHeight(z));
    }
    if rotational && !(rho > 0.0) {
        return Err(invalid(format!("radius must be positive on a rotational curve, got {rho}")));
    }
    Ok(rhs(state, n as f64, rotational))
}

#[inline]
fn rhs(state: [f64; 3], n: f64, rot: bool) -> [f64; 3] {
    let [z, rho, alpha] = state;
    if z <= 0.0 || (rot && rho <= 0.0) {
        return [f64::NAN; 3];
    }
    let (sa, ca) = alpha.sin_cos();
    let mut da = (1.0 + n * z) * sa / (z * z);
    if rot {
        da += (n - 1.0) * ca / rho;
    }
    [ca, sa, da]
}

/// Same curve with `z` as the independent variable: `(ρ, α, s)` as
/// functions of `z`.
#[inline]
fn rhs_height_chart(z: f64, y: [f64; 3], n: f64, rot: bool) -> [f64; 3] {
    let [rho, alpha, _] = y;
    if z <= 0.0 || (rot && rho <= 0.0) {
        return [f64::NAN; 3];
    }
    let ta = alpha.tan();
    let mut da = (1.0 + n * z) * ta / (z * z);
    if rot {
        da += (n - 1.0) / rho;
    }
    [ta, da, 1.0 / alpha.cos()]
}

struct Branch {
    samples: Vec<ProfileSample>,
    /// Extrapolated radius at `z = 0`.
    r_end: f64,
}

/// Integrates one branch from `start` down to `z_floor`. `allowed` bounds the
/// tangent angle; leaving it (or reaching the axis) is a branch failure.
fn shoot_branch(
    start: ProfileSample,
    n: usize,
    rot: bool,
    cfg: &ShootingConfig,
    ds: f64,
    allowed: (f64, f64),
    length_cap: f64,
) -> Result<Branch> {
    let nn = n as f64;
    let zf = cfg.z_floor;
    let switch = 10.0 * zf;
    let mut violation: Option<String> = None;
    let traj = ode::integrate(
        |_, y: &[f64; 3]| rhs(*y, nn, rot),
        start.s,
        [start.z, start.rho, start.alpha],
        start.s + length_cap,
        &cfg.ode(),
        &Output::Uniform(ds),
        |_, y| {
            if y[0] < switch {
                return true;
            }
            if rot && y[1] <= 0.0 {
                violation = Some(format!("branch reached the rotation axis at z = {}", y[0]));
                return true;
            }
            if y[2] < allowed.0 || y[2] > allowed.1 {
                violation = Some(format!("tangent angle {} left [{}, {}]", y[2], allowed.0, allowed.1));
                return true;
            }
            false
        },
    )?;
    if let Some(msg) = violation {
        return Err(HoroError::BranchMisclassified(msg));
    }
    if traj.termination != Termination::Stopped {
        return Err(HoroError::StepFailure {
            t: traj.last().0,
            reason: format!("curve did not reach height {switch} within arclength {length_cap}"),
        });
    }
    let mut samples: Vec<ProfileSample> =
        traj.t.iter().zip(&traj.y).map(|(&s, y)| ProfileSample { s, z: y[0], rho: y[1], alpha: y[2] }).collect();
    let last = *samples.last().unwrap();
    if last.z <= zf {
        return Ok(Branch { r_end: last.rho, samples });
    }
    // Near z = 0 the tangent is almost vertical; continue in the height chart.
    let mut heights: Vec<f64> = (0..=16).map(|k| zf * (1.0 + 0.25 * k as f64)).filter(|&z| z < last.z).collect();
    heights.reverse();
    let tail = ode::integrate(
        |z, y: &[f64; 3]| rhs_height_chart(z, *y, nn, rot),
        last.z,
        [last.rho, last.alpha, last.s],
        zf,
        &cfg.ode(),
        &Output::At(heights),
        |_, _| false,
    )?;
    let mut rho_f = f64::NAN;
    let mut rho_2f = f64::NAN;
    for (&z, y) in tail.t.iter().zip(&tail.y).skip(1) {
        samples.push(ProfileSample { s: y[2], z, rho: y[0], alpha: y[1] });
        if z == zf {
            rho_f = y[0];
        }
        if z == 2.0 * zf {
            rho_2f = y[0];
        }
    }
    // ρ(z) = ρ₀ + c z³ + O(z⁴): eliminate the cubic term.
    let r_end = if rho_2f.is_finite() { (8.0 * rho_f - rho_2f) / 7.0 } else { rho_f };
    Ok(Branch { samples, r_end })
}

/// Rotational soliton meeting the axis at height `h`: series start
/// `u = h + aρ² + bρ⁴` on the patch, then the angle form down to `z_floor`.
pub fn bowl_shoot(h: f64, n: usize, cfg: &ShootingConfig) -> Result<ProfileCurve> {
    check_height(h)?;
    check_n(n, 2)?;
    let (delta, ds) = cfg.resolve(h)?;
    let nn = n as f64;
    let a = -(1.0 + nn * h) / (2.0 * nn * h * h);
    let b = (8.0 * a.powi(3) + (2.0 + nn * h) * a / h.powi(3)) / (4.0 * nn + 8.0);
    let u = h + a * delta * delta + b * delta.powi(4);
    let up = 2.0 * a * delta + 4.0 * b * delta.powi(3);
    let upp = 2.0 * a + 12.0 * b * delta * delta;
    let series_res = upp / (1.0 + up * up) + (nn - 1.0) * up / delta + (1.0 + nn * u) / (u * u);
    let scale = (1.0 + nn * h) / (h * h);
    if (series_res / scale).abs() > 1e-9 {
        return Err(HoroError::SeriesRadiusTooLarge { mismatch: (series_res / scale).abs() });
    }
    let s0 = delta + 2.0 * a * a * delta.powi(3) / 3.0;
    let start = ProfileSample { s: s0, z: u, rho: delta, alpha: FRAC_PI_2 - up.atan() };
    let cap = 1e3 * (1.0 + h);
    let br = shoot_branch(start, n, true, cfg, ds, (FRAC_PI_2 - 1e-12, PI + 0.5), cap)?;
    let mut samples = vec![ProfileSample { s: 0.0, z: h, rho: 0.0, alpha: FRAC_PI_2 }];
    samples.extend(br.samples);
    let mut curve = ProfileCurve {
        kind: ProfileKind::Bowl,
        n,
        h,
        tip_radius: 0.0,
        r2: Some(br.r_end),
        samples,
        marks: BranchMarks::default(),
        residual_max: 0.0,
    };
    curve.residual_max = curve.kind_residual()?;
    Ok(curve)
}

fn extinction_config(h: f64) -> ShootingConfig {
    ShootingConfig { z_floor: 1e-6f64.min(1e-4 * h), ..Default::default() }
}

/// Radius where the bowl of height `h` reaches the boundary at infinity.
pub fn r2_of_h(h: f64, n: usize) -> Result<f64> {
    bowl_shoot(h, n, &extinction_config(h))?
        .r2
        .ok_or_else(|| HoroError::StepFailure { t: 0.0, reason: "no extinction radius".into() })
}

/// Height of the bowl with extinction radius `r`, by a monotone root
/// search in `h ∈ [10⁻⁶, 10⁶]` to relative tolerance `tol`.
pub fn h_of_r2(r: f64, n: usize, tol: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    roots::solve_increasing(|h| Ok((r2_of_h(h, n)? / r).ln()), r, 1e-6, 1e6, tol)
}

/// Winglike soliton through the horizontal tip `(z, ρ) = (h, R)`.
/// Returns the outer (upper) and inner (lower) branches.
pub fn wing_shoot(r_tip: f64, h: f64, n: usize, cfg: &ShootingConfig) -> Result<(ProfileCurve, ProfileCurve)> {
    check_height(h)?;
    check_n(n, 2)?;
    if !(r_tip > 0.0 && r_tip.is_finite()) {
        return Err(invalid(format!("tip radius must be positive, got {r_tip}")));
    }
    let (_, ds) = cfg.resolve(h)?;
    let cap = 1e3 * (1.0 + h + r_tip);
    // The tip is a regular point of the angle form; no series patch needed.
    let up = shoot_branch(
        ProfileSample { s: 0.0, z: h, rho: r_tip, alpha: FRAC_PI_2 },
        n,
        true,
        cfg,
        ds,
        (FRAC_PI_2 - 1e-12, PI + 0.5),
        cap,
    )?;
    let lo = shoot_branch(
        ProfileSample { s: 0.0, z: h, rho: r_tip, alpha: -FRAC_PI_2 },
        n,
        true,
        cfg,
        ds,
        (-1.5 * PI, -FRAC_PI_2 + 1e-12),
        cap,
    )?;
    let nn = n as f64;
    let turn = |p: &ProfileSample| rhs([p.z, p.rho, p.alpha], nn, true)[2];

    // Outer branch: α' > 0 throughout (concave in the height chart).
    if let Some(p) = up.samples.iter().skip(1).find(|p| turn(p) <= 0.0) {
        return Err(HoroError::BranchMisclassified(format!("outer branch stops turning at z = {}", p.z)));
    }
    // Inner branch: α' < 0 near the tip, exactly one sign change (inflection).
    let signs: Vec<(f64, f64)> = lo.samples.iter().skip(1).map(|p| (p.z, turn(p))).collect();
    let mut changes = Vec::new();
    for w in signs.windows(2) {
        if (w[0].1 < 0.0) != (w[1].1 < 0.0) {
            let (z0, t0) = w[0];
            let (z1, t1) = w[1];
            changes.push(z0 + (z1 - z0) * t0 / (t0 - t1));
        }
    }
    if signs.first().is_none_or(|s| s.1 >= 0.0) || changes.len() != 1 {
        return Err(HoroError::BranchMisclassified(format!(
            "inner branch has {} inflection points, expected one",
            changes.len()
        )));
    }
    let lambda0 = changes[0];
    // Smallest radius: where the inner branch turns back outward (α = −π).
    let k = lo.samples.iter().enumerate().min_by(|a, b| a.1.rho.total_cmp(&b.1.rho)).map(|(k, _)| k).unwrap();
    if k == 0 || k + 1 >= lo.samples.len() {
        return Err(HoroError::BranchMisclassified("inner branch radius has no interior minimum".into()));
    }
    let min_radius = refine_min_radius(&lo.samples[k - 1..=k + 1]);
    let marks =
        BranchMarks { lambda0: Some(lambda0), endpoints: Some((up.r_end, lo.r_end)), min_radius: Some(min_radius) };
    let mut upper = ProfileCurve {
        kind: ProfileKind::WingUpper,
        n,
        h,
        tip_radius: r_tip,
        r2: Some(up.r_end),
        samples: up.samples,
        marks,
        residual_max: 0.0,
    };
    let mut lower = ProfileCurve {
        kind: ProfileKind::WingLower,
        n,
        h,
        tip_radius: r_tip,
        r2: Some(lo.r_end),
        samples: lo.samples,
        marks,
        residual_max: 0.0,
    };
    upper.residual_max = upper.kind_residual()?;
    lower.residual_max = lower.kind_residual()?;
    Ok((upper, lower))
}

/// Smallest `φ_outer(z) − φ_inner(z)` over `points` heights equally spaced
/// in `(0, h)`, where the branches of a wing are graphs `ρ = φ(z)`; only
/// heights above both branches' lowest samples are used.
pub fn wing_branch_gap(upper: &ProfileCurve, lower: &ProfileCurve, points: usize) -> Result<f64> {
    let floor = |c: &ProfileCurve| c.samples.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
    let z_lo = floor(upper).max(floor(lower));
    let h = upper.h.min(lower.h);
    let mut gap = f64::INFINITY;
    for i in 1..=points {
        let z = z_lo + (h - z_lo) * i as f64 / (points + 1) as f64;
        gap = gap.min(upper.radius_at_height(z)? - lower.radius_at_height(z)?);
    }
    Ok(gap)
}

/// Smallest `u_high(ρ) − u_low(ρ)` for two bowls over `points` radii equally
/// spaced in `[0, r₂(low))`.
pub fn bowl_gap(low: &ProfileCurve, high: &ProfileCurve, points: usize) -> Result<f64> {
    let r_end = low.samples.last().map_or(0.0, |p| p.rho);
    let mut gap = high.h - low.h;
    for i in 1..points {
        let r = r_end * i as f64 / points as f64;
        gap = gap.min(high.height_at_radius(r)? - low.height_at_radius(r)?);
    }
    Ok(gap)
}

/// Parabolic refinement of the smallest radius from three samples
/// bracketing it (ρ as a function of s).
fn refine_min_radius(w: &[ProfileSample]) -> (f64, f64) {
    let (s0, s1, s2) = (w[0].s, w[1].s, w[2].s);
    let (r0, r1, r2) = (w[0].rho, w[1].rho, w[2].rho);
    let (z0, z1, z2) = (w[0].z, w[1].z, w[2].z);
    let d01 = (r1 - r0) / (s1 - s0);
    let d12 = (r2 - r1) / (s2 - s1);
    let curv = (d12 - d01) / (s2 - s0);
    if curv <= 0.0 {
        return (z1, r1);
    }
    let s_min = 0.5 * (s0 + s1) - d01 / (2.0 * curv);
    let lag = |y0: f64, y1: f64, y2: f64, s: f64| {
        y0 * (s - s1) * (s - s2) / ((s0 - s1) * (s0 - s2))
            + y1 * (s - s0) * (s - s2) / ((s1 - s0) * (s1 - s2))
            + y2 * (s - s0) * (s - s1) / ((s2 - s0) * (s2 - s1))
    };
    (lag(z0, z1, z2, s_min), lag(r0, r1, r2, s_min))
}

/// Result of fitting `ρ(z) ≈ A − C z³` near the end of a branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicFit {
    pub coefficient: f64,
    pub target: f64,
    /// Fitted `ρ(0⁺)`.
    pub rho0: f64,
    pub relative_error: f64,
}

/// Fits `ρ(z) = A − C z³` over the samples with `z ∈ [z_min, 5 z_min]`
/// (`z_min` the lowest sample) and compares `C` with `(n−1)/(3A)`.
pub fn cubic_asymptote_check(curve: &ProfileCurve) -> Result<CubicFit> {
    let z_min = curve.samples.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
    let pts: Vec<(f64, f64)> =
        curve.samples.iter().filter(|p| p.z <= 5.0 * z_min * (1.0 + 1e-12)).map(|p| (p.z / z_min, p.rho)).collect();
    if pts.len() < 3 {
        return Err(HoroError::InsufficientSamples(format!("{} samples in [z_floor, 5 z_floor], need 3", pts.len())));
    }
    let c = least_squares(&pts, &[0, 3])?;
    let rho0 = c[0];
    let coefficient = -c[1] / z_min.powi(3);
    let target = (curve.n as f64 - 1.0) / (3.0 * rho0);
    Ok(CubicFit { coefficient, target, rho0, relative_error: (coefficient / target - 1.0).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arclength_matches_graph_charts() {
        // φ'' = α'/cos³α in the height chart, for random admissible states
        let n = 3;
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let z = 0.1 + 2.0 * next();
            let rho = 0.1 + 2.0 * next();
            let alpha = -1.4 + 2.8 * next();
            let d = arclength_rhs([z, rho, alpha], n, true).unwrap();
            let phi_p = alpha.tan();
            // rotational height-chart equation solved for φ''
            let nn = n as f64;
            let phi_pp = (1.0 + phi_p * phi_p) * ((1.0 + nn * z) * phi_p / (z * z) + (nn - 1.0) / rho);
            let from_angle = d[2] / alpha.cos().powi(3);
            assert!((from_angle - phi_pp).abs() <= 1e-10 * phi_pp.abs().max(1.0));
        }
    }

    #[test]
    fn grim_phi_edges() {
        assert_eq!(grim_phi(1.0, 1.0, 2).unwrap(), 0.0);
        assert!(grim_phi(1.5, 1.0, 2).is_err());
        assert!(grim_phi(0.0, 1.0, 2).is_err());
        assert!(matches!(grim_phi(0.5, -1.0, 2), Err(HoroError::NonpositiveHeight(_))));
    }

    #[test]
    fn least_squares_recovers_polynomial() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| i as f64 * 0.1).map(|x| (x, 2.0 - 3.0 * x.powi(3))).collect();
        let c = least_squares(&pts, &[0, 3]).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] + 3.0).abs() < 1e-11);
    }
}
