//! Upper half-space model of hyperbolic space, the Ilmanen conformal
//! metric `e^{2/(k x₀)} g_H`, its sectional curvatures and geodesics in the
//! `x₀x₁`-plane.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, HoroError, Result};
use crate::grid::GridFunction;
use crate::ode::{self, OdeOptions, Output, Termination};
use crate::operator::{ResidualReport, CLASSIFICATION_TOL};
use crate::profiles::{ProfileCurve, ProfileKind, ProfileSample};
use crate::roots;

/// Hypersurface dimension `n` (ambient `n+1`) and the exponent parameter `k`
/// of the Ilmanen factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub n: usize,
    pub k: usize,
}

impl SolitonParams {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("dimension n = {n} must be at least 2")));
        }
        if !(2..=n).contains(&k) {
            return Err(invalid(format!("k = {k} must lie in [2, {n}]")));
        }
        Ok(SolitonParams { n, k })
    }

    /// `k = n`, the hypersurface case.
    pub fn hypersurface(n: usize) -> Result<Self> {
        SolitonParams::new(n, n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x0: f64,
    pub x: Vec<f64>,
}

impl Point {
    pub fn new(x0: f64, x: Vec<f64>, params: &SolitonParams) -> Result<Self> {
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(HoroError::NonpositiveHeight(x0));
        }
        if x.len() != params.n {
            return Err(invalid(format!("expected {} horizontal coordinates, got {}", params.n, x.len())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("horizontal coordinates must be finite"));
        }
        Ok(Point { x0, x })
    }
}

/// Reference metric the Ilmanen metric is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    Hyperbolic,
    Euclidean,
}

/// `λ` with `g_I = λ² g_base`.
pub fn conformal_factor(p: &Point, params: &SolitonParams, base: Base) -> f64 {
    ilmanen_factor(p.x0, params.k as f64, base)
}

/// Same as [`conformal_factor`] for a bare height and any `k > 0`.
pub fn ilmanen_factor(x0: f64, k: f64, base: Base) -> f64 {
    let e = (1.0 / (k * x0)).exp();
    match base {
        Base::Hyperbolic => e,
        Base::Euclidean => e / x0,
    }
}

/// Coordinate planes for the curvature formulas: `∂₀∧∂ⱼ` and `∂ᵢ∧∂ⱼ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    VerticalPair,
    HorizontalPair,
}

/// Sectional curvature of the Ilmanen metric (`k = n`) on a coordinate plane.
pub fn sectional_curvature_axis(x0: f64, params: &SolitonParams, plane: Plane) -> Result<f64> {
    if !(x0 > 0.0) {
        return Err(HoroError::NonpositiveHeight(x0));
    }
    let n = params.n as f64;
    let damp = (-2.0 / (n * x0)).exp();
    Ok(match plane {
        Plane::VerticalPair => -damp * (2.0 + n) / (n * x0),
        Plane::HorizontalPair => -damp * (1.0 + n * x0) / n,
    })
}

/// Sectional curvature of the plane spanned by `sin θ ∂₀ + cos θ ∂ᵢ` and
/// `∂ⱼ`, for `θ ∈ (0, 2π)`.
pub fn sectional_curvature_mixed(x0: f64, params: &SolitonParams, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < TAU) {
        return Err(invalid(format!("angle {theta} outside (0, 2π)")));
    }
    let v = sectional_curvature_axis(x0, params, Plane::VerticalPair)?;
    let h = sectional_curvature_axis(x0, params, Plane::HorizontalPair)?;
    let s = theta.sin();
    Ok(s * s * v + (1.0 - s * s) * h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicState {
    pub z: f64,
    pub w: f64,
    pub dz: f64,
    pub dw: f64,
}

impl GeodesicState {
    pub fn new(z: f64, w: f64, dz: f64, dw: f64) -> Result<Self> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(HoroError::NonpositiveHeight(z));
        }
        if ![w, dz, dw].iter().all(|v| v.is_finite()) {
            return Err(invalid("geodesic state must be finite"));
        }
        if dz == 0.0 && dw == 0.0 {
            return Err(invalid("geodesic velocity must be nonzero"));
        }
        Ok(GeodesicState { z, w, dz, dw })
    }

    /// Unit Euclidean velocity at angle `angle` from the `x₁` direction
    /// toward `x₀`.
    pub fn from_angle(z: f64, w: f64, angle: f64) -> Result<Self> {
        GeodesicState::new(z, w, angle.sin(), angle.cos())
    }

    fn to_array(self) -> [f64; 4] {
        [self.z, self.w, self.dz, self.dw]
    }
}

/// `(dz, dw, ddz, ddw)` of a geodesic of `e^{2/(nz)} g_H` in the `x₀x₁`-plane.
pub fn geodesic_rhs(s: &GeodesicState, n: usize) -> Result<[f64; 4]> {
    if !(s.z > 0.0) {
        return Err(HoroError::NonpositiveHeight(s.z));
    }
    Ok(rhs(&s.to_array(), n as f64))
}

#[inline]
fn rhs(y: &[f64; 4], n: f64) -> [f64; 4] {
    let [z, _, dz, dw] = *y;
    if z <= 0.0 {
        return [f64::NAN; 4];
    }
    let c = (1.0 + n * z) / (n * z * z);
    [dz, dw, c * (dz * dz - dw * dw), 2.0 * c * dz * dw]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeodesicEnd {
    /// Dropped below the height floor.
    Floor,
    /// Ran to the end of the parameter interval.
    Span,
}

impl GeodesicEnd {
    pub fn as_str(self) -> &'static str {
        match self {
            GeodesicEnd::Floor => "floor",
            GeodesicEnd::Span => "span",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicConfig {
    pub z_floor: f64,
    pub max_steps: usize,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig { z_floor: 1e-6, max_steps: 2_000_000 }
    }
}

/// Geodesic sampled at every accepted step, ordered by the (affine)
/// parameter `t`. The initial state sits at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicCurve {
    pub n: usize,
    pub tol: f64,
    pub z_floor: f64,
    pub t: Vec<f64>,
    pub states: Vec<GeodesicState>,
    /// How the backward and forward halves ended.
    pub ends: (GeodesicEnd, GeodesicEnd),
    init: GeodesicState,
}

/// Integrates the geodesic through `init` over `t_span = (t0, t1)` with
/// `t0 ≤ 0 ≤ t1`, stopping early where the height drops below the floor.
pub fn integrate_geodesic(
    init: GeodesicState,
    params: &SolitonParams,
    t_span: (f64, f64),
    tol: f64,
) -> Result<GeodesicCurve> {
    integrate_geodesic_with(init, params.n, t_span, tol, &GeodesicConfig::default())
}

pub fn integrate_geodesic_with(
    init: GeodesicState,
    n: usize,
    t_span: (f64, f64),
    tol: f64,
    cfg: &GeodesicConfig,
) -> Result<GeodesicCurve> {
    let init = GeodesicState::new(init.z, init.w, init.dz, init.dw)?;
    if n < 1 {
        return Err(invalid("dimension must be positive"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let (t0, t1) = t_span;
    if !(t0 <= 0.0 && t1 >= 0.0 && t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(invalid(format!("parameter interval ({t0}, {t1}) must contain 0")));
    }
    if !(cfg.z_floor > 0.0 && cfg.z_floor < init.z) {
        return Err(invalid(format!("height floor {} must lie in (0, z0)", cfg.z_floor)));
    }
    let half = |t_end: f64| -> Result<(Vec<f64>, Vec<[f64; 4]>, GeodesicEnd)> {
        let tr = ode::integrate(
            |_, y: &[f64; 4]| rhs(y, n as f64),
            0.0,
            init.to_array(),
            t_end,
            &geodesic_ode(tol, cfg.max_steps),
            &Output::Steps,
            |_, y| y[0] < cfg.z_floor,
        )?;
        let end = if tr.termination == Termination::Stopped { GeodesicEnd::Floor } else { GeodesicEnd::Span };
        Ok((tr.t, tr.y, end))
    };
    let (tb, yb, end_b) = half(t0)?;
    let (tf, yf, end_f) = half(t1)?;
    let mut t: Vec<f64> = tb.iter().rev().copied().collect();
    let mut y: Vec<[f64; 4]> = yb.iter().rev().copied().collect();
    t.extend(tf.iter().skip(1));
    y.extend(yf.iter().skip(1));
    let states = y.iter().map(|v| GeodesicState { z: v[0], w: v[1], dz: v[2], dw: v[3] }).collect();
    Ok(GeodesicCurve { n, tol, z_floor: cfg.z_floor, t, states, ends: (end_b, end_f), init })
}

fn geodesic_ode(tol: f64, max_steps: usize) -> OdeOptions {
    // integrate well below the tolerance the checks are judged against
    let local = tol * 1e-2;
    OdeOptions { rtol: local, atol: local, h0: None, h_max: f64::INFINITY, max_steps }
}

/// Outcome of the three shape checks on a geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicChecks {
    /// Parameter and height of the highest point (None for vertical lines).
    pub apex: Option<(f64, f64)>,
    /// Largest distance between the curve and its mirror image about the apex.
    pub symmetry_error: f64,
    /// Largest normalized turn against concavity of `z(w)`.
    pub concavity_violation: f64,
    /// Extrapolated `|dw/dz|` at the floor height on each end.
    pub end_slopes: (f64, f64),
    /// Whether `|dw/dz|` decreases monotonically approaching each end.
    pub slopes_monotone: bool,
    pub pass: bool,
}

impl GeodesicCurve {
    pub fn termination(&self) -> GeodesicEnd {
        if self.ends == (GeodesicEnd::Floor, GeodesicEnd::Floor) {
            GeodesicEnd::Floor
        } else {
            GeodesicEnd::Span
        }
    }

    pub fn is_vertical(&self) -> bool {
        self.init.dw == 0.0
    }

    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "kind": "geodesic",
            "tol": self.tol,
            "termination": self.termination().as_str(),
        })
    }

    /// Samples in the profile layout: `s` is the parameter, `ρ` the `x₁`
    /// coordinate and `α` the tangent angle from `+x₀` toward `+x₁`.
    pub fn to_profile(&self) -> ProfileCurve {
        let samples = self
            .t
            .iter()
            .zip(&self.states)
            .map(|(&s, st)| ProfileSample { s, z: st.z, rho: st.w, alpha: st.dw.atan2(st.dz) })
            .collect::<Vec<_>>();
        let h = self.states.iter().map(|s| s.z).fold(0.0, f64::max);
        ProfileCurve {
            kind: ProfileKind::Geodesic,
            n: self.n,
            h,
            tip_radius: 0.0,
            r2: None,
            samples,
            marks: Default::default(),
            residual_max: 0.0,
        }
    }

    fn state_at(&self, times: &[f64]) -> Result<Vec<GeodesicState>> {
        let opts = geodesic_ode(self.tol, 2_000_000);
        let mut out = vec![None; times.len()];
        for forward in [true, false] {
            let mut idx: Vec<usize> =
                (0..times.len()).filter(|&i| (times[i] > 0.0) == forward && times[i] != 0.0).collect();
            if idx.is_empty() {
                continue;
            }
            idx.sort_by(|&a, &b| {
                let c = times[a].total_cmp(&times[b]);
                if forward {
                    c
                } else {
                    c.reverse()
                }
            });
            let targets: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
            let end = *targets.last().unwrap();
            let tr = ode::integrate(
                |_, y: &[f64; 4]| rhs(y, self.n as f64),
                0.0,
                self.init.to_array(),
                end,
                &opts,
                &Output::At(targets.clone()),
                |_, _| false,
            )?;
            for (&i, &tt) in idx.iter().zip(&targets) {
                let k = tr.t.iter().position(|&x| x == tt).ok_or_else(|| HoroError::StepFailure {
                    t: tt,
                    reason: "requested output time not reached".into(),
                })?;
                let y = tr.y[k];
                out[i] = Some(GeodesicState { z: y[0], w: y[1], dz: y[2], dw: y[3] });
            }
        }
        Ok(times.iter().zip(out).map(|(_, s)| s.unwrap_or(self.init)).collect())
    }

    /// Parameter of the highest point, where `dz` changes sign.
    pub fn apex(&self) -> Result<Option<(f64, f64)>> {
        if self.is_vertical() {
            return Ok(None);
        }
        let Some(k) = self.states.windows(2).position(|w| w[0].dz > 0.0 && w[1].dz <= 0.0) else {
            return Ok(None);
        };
        let (ta, tb) = (self.t[k], self.t[k + 1]);
        let t_star = roots::brent(
            |t| self.state_at(&[t]).map(|s| s[0].dz).unwrap_or(f64::NAN),
            ta,
            tb,
            1e-14 * (1.0 + ta.abs()),
            200,
        )?;
        let z = self.state_at(&[t_star])?[0].z;
        Ok(Some((t_star, z)))
    }

    /// Mirror symmetry, concavity of `z(w)` and orthogonal approach to the
    /// boundary, each judged against `10·tol`.
    pub fn checks(&self) -> Result<GeodesicChecks> {
        let bound = 10.0 * self.tol;
        let apex = self.apex()?;
        let mut symmetry_error = 0.0f64;
        if let Some((t_star, _)) = apex {
            let reach = (t_star - self.t[0]).min(self.t[self.t.len() - 1] - t_star);
            let taus: Vec<f64> = (1..=40).map(|i| reach * 0.95 * i as f64 / 40.0).collect();
            let mut times = vec![t_star];
            for &tau in &taus {
                times.push(t_star + tau);
                times.push(t_star - tau);
            }
            let st = self.state_at(&times)?;
            let w_star = st[0].w;
            for i in 0..taus.len() {
                let (p, m) = (st[1 + 2 * i], st[2 + 2 * i]);
                symmetry_error = symmetry_error.max((p.z - m.z).hypot(p.w - (2.0 * w_star - m.w)));
            }
        }
        let concavity_violation = if self.is_vertical() { 0.0 } else { self.max_turn() };
        let (end_slopes, slopes_monotone) = if self.is_vertical() {
            ((0.0, 0.0), true)
        } else {
            let lo = self.end_slope(false)?;
            let hi = self.end_slope(true)?;
            ((lo.0, hi.0), lo.1 && hi.1)
        };
        let pass = (self.is_vertical() || apex.is_some())
            && symmetry_error < bound
            && concavity_violation <= bound
            && end_slopes.0 <= bound
            && end_slopes.1 <= bound
            && slopes_monotone;
        Ok(GeodesicChecks { apex, symmetry_error, concavity_violation, end_slopes, slopes_monotone, pass })
    }

    fn max_turn(&self) -> f64 {
        let sign = self.init.dw.signum();
        let mut worst = f64::NEG_INFINITY;
        for w in self.states.windows(3) {
            let (dw1, dz1) = (w[1].w - w[0].w, w[1].z - w[0].z);
            let (dw2, dz2) = (w[2].w - w[1].w, w[2].z - w[1].z);
            let norm = dw1.hypot(dz1) * dw2.hypot(dz2);
            if norm == 0.0 {
                continue;
            }
            worst = worst.max(sign * (dw1 * dz2 - dz1 * dw2) / norm);
        }
        worst.max(0.0)
    }

    /// Extrapolates `|dw/dz|` on one end down to the floor height by fitting
    /// `log|dw/dz| − log z = a + b/z` to the last samples, and reports whether
    /// the slope decreases monotonically over the final stretch.
    fn end_slope(&self, forward: bool) -> Result<(f64, bool)> {
        let pts: Vec<&GeodesicState> = if forward {
            self.states.iter().rev().take_while(|s| s.dz < 0.0).collect()
        } else {
            self.states.iter().take_while(|s| s.dz > 0.0).collect()
        };
        if pts.len() < 10 {
            return Err(HoroError::InsufficientSamples(format!("{} samples on the descending end", pts.len())));
        }
        // samples ordered from the end inward on the forward side
        let tail: Vec<&GeodesicState> = pts.iter().take(10).copied().collect();
        let slope = |s: &GeodesicState| (s.dw / s.dz).abs();
        let stretch = pts.len().min(50);
        let monotone = pts[..stretch].windows(2).all(|w| slope(w[0]) <= slope(w[1]) * (1.0 + 1e-12));
        let fit: Vec<(f64, f64)> = tail.iter().map(|s| (1.0 / s.z, slope(s).ln() - s.z.ln())).collect();
        let c = crate::profiles::least_squares(&fit, &[0, 1])?;
        if c[1] >= 0.0 {
            return Ok((f64::INFINITY, monotone));
        }
        let zf = self.z_floor;
        let last = tail[0];
        let at_floor = if last.z <= zf { slope(last) } else { (c[0] + c[1] / zf + zf.ln()).exp() };
        Ok((at_floor, monotone))
    }
}

/// Which conformal change the mean-curvature relation is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConformalChange {
    /// `λ ≡ 1`: both sides computed from the hyperbolic metric.
    Identity,
    /// Hyperbolic to Ilmanen.
    Ilmanen,
}

/// Euclidean conformal factor `Λ` of the target metric as a function of
/// height, and `Λ'/Λ`.
fn euclidean_factor(u: f64, change: Option<f64>) -> (f64, f64) {
    match change {
        None => (1.0 / u, -1.0 / u),
        Some(k) => ((1.0 / (k * u)).exp() / u, -1.0 / (k * u * u) - 1.0 / u),
    }
}

/// Scalar mean curvature (upward normal) of the graph of `u` in the
/// metric `Λ(x₀)² g_E`, from the discrete first variation of
/// `∫ Λ(u)ⁿ W dx` with central stencils of step `fd_step`. Nodes without a
/// full stencil get NaN.
fn graph_mean_curvature(u: &GridFunction, n: usize, change: Option<f64>, fd_step: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let dom = &u.domain;
    let dx = dom.spacing();
    let m_f = fd_step / dx[0];
    let m = m_f.round() as usize;
    if !(fd_step > 0.0) || m == 0 || (m_f - m as f64).abs() > 1e-9 * m_f {
        return Err(HoroError::DegenerateStencil(format!(
            "step {fd_step} is not a positive multiple of the grid spacing {}",
            dx[0]
        )));
    }
    if dom.dim() == 2 && (fd_step / dx[1] - m as f64).abs() > 1e-9 * m as f64 {
        return Err(HoroError::DegenerateStencil("planar grids need equal spacing on both axes".into()));
    }
    let last = dom.resolution - 1;
    if 2 * m + 1 > last + 1 || last < 2 * m + 2 {
        return Err(HoroError::DegenerateStencil(format!(
            "stride {m} leaves no interior node with a five-point stencil on {} nodes",
            dom.resolution
        )));
    }
    let s = m as f64 * dx[0];
    let nn = n as f64;
    let g = |v: f64| euclidean_factor(v, change).0.powf(nn);
    let v = &u.values;
    let mut h = vec![f64::NAN; v.len()];
    let mut wnode = vec![f64::NAN; v.len()];
    if dom.dim() == 1 {
        let r = dom.axis(0);
        for i in m..=last - m {
            let weight = |x: f64| if dom.is_radial() { (x / r[i]).powf(nn - 1.0) } else { 1.0 };
            if dom.is_radial() && r[i] == 0.0 {
                continue;
            }
            let p_hi = (v[i + m] - v[i]) / s;
            let p_lo = (v[i] - v[i - m]) / s;
            let flux_hi = weight(r[i] + 0.5 * s) * g(0.5 * (v[i] + v[i + m])) * p_hi / (1.0 + p_hi * p_hi).sqrt();
            let flux_lo = weight(r[i] - 0.5 * s) * g(0.5 * (v[i] + v[i - m])) * p_lo / (1.0 + p_lo * p_lo).sqrt();
            let pc = (v[i + m] - v[i - m]) / (2.0 * s);
            let w = (1.0 + pc * pc).sqrt();
            let (lam, dlog) = euclidean_factor(v[i], change);
            let el = nn * lam.powf(nn) * dlog * w - (flux_hi - flux_lo) / s;
            h[i] = -el / lam.powf(nn + 1.0);
            wnode[i] = w;
        }
    } else {
        let at = |i: usize, j: usize| v[dom.flatten(i, j)];
        for j in m..=last - m {
            for i in m..=last - m {
                let face_x = |a: usize| {
                    let p = (at(a + m, j) - at(a, j)) / s;
                    let q = ((at(a, j + m) - at(a, j - m)) + (at(a + m, j + m) - at(a + m, j - m))) / (4.0 * s);
                    g(0.5 * (at(a, j) + at(a + m, j))) * p / (1.0 + p * p + q * q).sqrt()
                };
                let face_y = |b: usize| {
                    let p = (at(i, b + m) - at(i, b)) / s;
                    let q = ((at(i + m, b) - at(i - m, b)) + (at(i + m, b + m) - at(i - m, b + m))) / (4.0 * s);
                    g(0.5 * (at(i, b) + at(i, b + m))) * p / (1.0 + p * p + q * q).sqrt()
                };
                let div = (face_x(i) - face_x(i - m) + face_y(j) - face_y(j - m)) / s;
                let px = (at(i + m, j) - at(i - m, j)) / (2.0 * s);
                let py = (at(i, j + m) - at(i, j - m)) / (2.0 * s);
                let w = (1.0 + px * px + py * py).sqrt();
                let (lam, dlog) = euclidean_factor(at(i, j), change);
                let el = nn * lam.powf(nn) * dlog * w - div;
                let idx = dom.flatten(i, j);
                h[idx] = -el / lam.powf(nn + 1.0);
                wnode[idx] = w;
            }
        }
    }
    Ok((h, wnode))
}

/// Mean curvature of the graph of `u` in the Ilmanen metric; vanishes
/// (up to discretization error) exactly on solitons when `k = n`.
pub fn ilmanen_mean_curvature(u: &GridFunction, params: &SolitonParams, fd_step: f64) -> Result<Vec<f64>> {
    Ok(graph_mean_curvature(u, params.n, Some(params.k as f64), fd_step)?.0)
}

/// Hyperbolic mean curvature of the graph of `u`.
pub fn hyperbolic_mean_curvature(u: &GridFunction, n: usize, fd_step: f64) -> Result<Vec<f64>> {
    Ok(graph_mean_curvature(u, n, None, fd_step)?.0)
}

/// Compares the Ilmanen mean curvature of the graph of `u` with the value
/// predicted from its hyperbolic mean curvature through the conformal
/// change, `λ⁻¹(H₁ − n·ν₁(log λ))`. Residuals are the pointwise
/// discrepancy.
pub fn conformal_mean_curvature_check(
    u: &GridFunction,
    params: &SolitonParams,
    fd_step: f64,
) -> Result<ResidualReport> {
    conformal_mean_curvature_check_with(u, params, fd_step, ConformalChange::Ilmanen)
}

pub fn conformal_mean_curvature_check_with(
    u: &GridFunction,
    params: &SolitonParams,
    fd_step: f64,
    change: ConformalChange,
) -> Result<ResidualReport> {
    let n = params.n;
    let k = params.k as f64;
    let (h1, w) = graph_mean_curvature(u, n, None, fd_step)?;
    let target = match change {
        ConformalChange::Identity => None,
        ConformalChange::Ilmanen => Some(k),
    };
    let (h2, _) = graph_mean_curvature(u, n, target, fd_step)?;
    let res = (0..h1.len())
        .map(|i| {
            if h1[i].is_nan() {
                return f64::NAN;
            }
            let predicted = match change {
                ConformalChange::Identity => h1[i],
                ConformalChange::Ilmanen => {
                    let x0 = u.values[i];
                    // ν₁(log λ) for the hyperbolic unit normal of the graph
                    let normal_log = -1.0 / (k * x0 * w[i]);
                    (h1[i] - n as f64 * normal_log) / ilmanen_factor(x0, k, Base::Hyperbolic)
                }
            };
            h2[i] - predicted
        })
        .collect();
    Ok(ResidualReport::from_residuals(res, CLASSIFICATION_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DomainSpec, Shape};

    #[test]
    fn params_validation() {
        assert!(SolitonParams::new(2, 2).is_ok());
        assert!(SolitonParams::new(3, 4).is_err());
        assert!(SolitonParams::new(1, 1).is_err());
        let p = SolitonParams::new(2, 2).unwrap();
        assert!(Point::new(0.0, vec![0.0, 0.0], &p).is_err());
        assert!(Point::new(1.0, vec![0.0], &p).is_err());
    }

    #[test]
    fn factor_values() {
        assert!((ilmanen_factor(1.0, 1.0, Base::Hyperbolic) - std::f64::consts::E).abs() < 1e-15);
        let p = SolitonParams::new(2, 2).unwrap();
        let pt = Point::new(0.5, vec![0.0, 0.0], &p).unwrap();
        assert!((conformal_factor(&pt, &p, Base::Euclidean) - 2.0 * std::f64::consts::E).abs() < 1e-14);
    }

    #[test]
    fn geodesic_rhs_values() {
        let d = geodesic_rhs(&GeodesicState { z: 1.0, w: 0.0, dz: 0.0, dw: 1.0 }, 1).unwrap();
        assert_eq!(d, [0.0, 1.0, -2.0, 0.0]);
        let d = geodesic_rhs(&GeodesicState { z: 0.7, w: 0.0, dz: 0.3, dw: 0.0 }, 2).unwrap();
        assert_eq!(d[3], 0.0);
    }

    #[test]
    fn identity_change_is_exact() {
        let d = DomainSpec::new(Shape::Interval { a: -1.0, b: 1.0 }, 41).unwrap();
        let u = GridFunction::from_fn(d, |x| 1.0 + 0.3 * (1.0 - x[0] * x[0])).unwrap();
        let p = SolitonParams::new(2, 2).unwrap();
        let step = d.spacing()[0] * 2.0;
        let r = conformal_mean_curvature_check_with(&u, &p, step, ConformalChange::Identity).unwrap();
        assert_eq!(r.max_abs, 0.0);
        assert!(conformal_mean_curvature_check(&u, &p, step * 1.25).is_err());
    }

    #[test]
    fn constant_graph_has_hyperbolic_curvature_n() {
        let d = DomainSpec::new(Shape::Interval { a: 0.0, b: 1.0 }, 11).unwrap();
        let u = GridFunction::new(d, vec![1.0; 11]).unwrap();
        let h = hyperbolic_mean_curvature(&u, 2, d.spacing()[0]).unwrap();
        for v in h.iter().filter(|v| !v.is_nan()) {
            assert!((v - 2.0).abs() < 1e-14);
        }
    }
}
