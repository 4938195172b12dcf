//! Dirichlet problem for the soliton operator on desk-scale domains.
//!
//! The discrete problem is the conservative residual of [`crate::operator`]
//! at interior nodes with nodal Dirichlet data. It is solved by damped
//! Newton iteration with a colored finite-difference Jacobian and a banded
//! LU factorization; cold starts that fail fall back to a homotopy from a
//! large constant boundary value. Balls and annuli are solved through their
//! radial cross-section, slabs on a truncated planar grid whose lateral
//! rows carry the cross-section solution.

use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{invalid, HoroError, Result};
use crate::exec::Exec;
use crate::grid::{DomainSpec, GridFunction, Shape, Side};
use crate::ode::{self, OdeOptions, Output};
use crate::operator::{f_unchecked, Stencil};
use crate::profiles::{self, GrimReaper, ShootingConfig};
use crate::special::HeightTransform;

/// Heights below this are never accepted by the iteration.
pub const U_MIN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryKind {
    Constant {
        c: f64,
    },
    /// One value per side, in the order lower, upper, bottom, top.
    PerSide {
        values: Vec<f64>,
    },
    /// One value per boundary node, in increasing node order.
    Sampled {
        trace: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    #[serde(flatten)]
    pub kind: BoundaryKind,
    /// Positivity floor for iterates.
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_floor() -> f64 {
    U_MIN
}

impl BoundaryData {
    pub fn constant(c: f64) -> Self {
        BoundaryData { kind: BoundaryKind::Constant { c }, floor: U_MIN }
    }

    pub fn per_side(values: Vec<f64>) -> Self {
        BoundaryData { kind: BoundaryKind::PerSide { values }, floor: U_MIN }
    }

    pub fn sampled(trace: Vec<f64>) -> Self {
        BoundaryData { kind: BoundaryKind::Sampled { trace }, floor: U_MIN }
    }

    fn values(&self) -> &[f64] {
        match &self.kind {
            BoundaryKind::Constant { c } => std::slice::from_ref(c),
            BoundaryKind::PerSide { values } => values,
            BoundaryKind::Sampled { trace } => trace,
        }
    }

    /// Checks shape compatibility and nonnegativity; `strict` additionally
    /// demands strictly positive data and a positive floor.
    pub fn validate(&self, dom: &DomainSpec, strict: bool) -> Result<()> {
        let vals = self.values();
        if let Some(v) = vals.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!("boundary value {v} must be finite and nonnegative")));
        }
        if !(self.floor >= 0.0 && self.floor.is_finite()) {
            return Err(invalid(format!("floor {} must be nonnegative", self.floor)));
        }
        match &self.kind {
            BoundaryKind::Constant { .. } => {}
            BoundaryKind::PerSide { values } => {
                if values.len() != dom.side_count() {
                    return Err(invalid(format!(
                        "{} side values given, the domain has {} sides",
                        values.len(),
                        dom.side_count()
                    )));
                }
            }
            BoundaryKind::Sampled { trace } => {
                let nb = dom.boundary_indices().len();
                if trace.len() != nb {
                    return Err(invalid(format!(
                        "{} trace values given, the grid has {nb} boundary nodes",
                        trace.len()
                    )));
                }
            }
        }
        if strict {
            if self.floor <= 0.0 {
                return Err(invalid("a positive floor is required outside continuation mode"));
            }
            if let Some(v) = vals.iter().find(|v| **v < self.floor.max(f64::MIN_POSITIVE)) {
                return Err(invalid(format!(
                    "boundary value {v} is below the floor; degenerate data needs continuation_to_zero_boundary"
                )));
            }
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.values().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether the data are the same on every boundary component.
    pub fn is_uniform(&self) -> bool {
        self.max() == self.min()
    }

    /// Nodal boundary values (NaN at interior nodes). Slab sides at the
    /// truncation carry NaN here; the solver fills them.
    fn nodal(&self, dom: &DomainSpec) -> Vec<f64> {
        let mut out = vec![f64::NAN; dom.len()];
        let bidx = dom.boundary_indices();
        for (k, &i) in bidx.iter().enumerate() {
            out[i] = match &self.kind {
                BoundaryKind::Constant { c } => *c,
                BoundaryKind::Sampled { trace } => trace[k],
                BoundaryKind::PerSide { values } => {
                    let side = dom.side(i).unwrap();
                    let slot = match side {
                        Side::Lower => 0,
                        Side::Upper => values.len().min(2) - 1,
                        Side::Bottom => 2,
                        Side::Top => 3,
                    };
                    values.get(slot).copied().unwrap_or(f64::NAN)
                }
            };
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// Constant equal to the largest boundary value.
    BoundaryMax,
    Constant(f64),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub initial: InitialGuess,
    pub exec: Exec,
}

impl SolveOptions {
    pub fn new(tol: f64) -> Self {
        SolveOptions { tol, max_iter: 60, initial: InitialGuess::BoundaryMax, exec: Exec::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    /// Lower and upper height bounds: the smallest boundary value and the
    /// top of a grim-reaper barrier over the boundary data.
    pub height_bounds: (f64, f64),
    /// Step length accepted in each Newton iteration.
    pub newton_damping_history: Vec<f64>,
    /// Number of boundary-data homotopy stages (0 for a direct solve).
    pub homotopy_stages: usize,
}

impl SolveReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "height_bounds": [self.height_bounds.0, self.height_bounds.1],
            "newton_damping_history": self.newton_damping_history,
            "homotopy_stages": self.homotopy_stages,
        })
    }
}

// ---------------------------------------------------------------------------
// Newton core

/// How iterates are kept positive.
#[derive(Debug, Clone, Copy)]
enum Floor {
    /// `x ≥ floor`; a clipped step that does not descend is an error.
    Absolute(f64),
    /// `x ≥ factor·x_old`.
    Relative(f64),
}

struct NewtonOutcome {
    x: Vec<f64>,
    iterations: usize,
    residual: f64,
    damping: Vec<f64>,
}

struct Sparsity {
    dim: usize,
    m: usize,
}

impl Sparsity {
    fn colors(&self) -> usize {
        if self.dim == 1 {
            3
        } else {
            9
        }
    }

    fn bandwidth(&self) -> usize {
        if self.dim == 1 {
            1
        } else {
            self.m + 1
        }
    }

    fn color_of(&self, idx: usize) -> usize {
        if self.dim == 1 {
            idx % 3
        } else {
            (idx % self.m) % 3 + 3 * ((idx / self.m) % 3)
        }
    }

    fn rows_touching(&self, idx: usize, len: usize, out: &mut Vec<usize>) {
        out.clear();
        if self.dim == 1 {
            out.extend(idx.saturating_sub(1)..=(idx + 1).min(len - 1));
        } else {
            let m = self.m;
            let (i, j) = (idx % m, idx / m);
            for jj in j.saturating_sub(1)..=(j + 1).min(m - 1) {
                for ii in i.saturating_sub(1)..=(i + 1).min(m - 1) {
                    out.push(jj * m + ii);
                }
            }
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Damped Newton on `residual(x) = 0` over the free entries of `x`.
fn newton<R>(
    residual: &R,
    x0: Vec<f64>,
    fixed: &[bool],
    sp: &Sparsity,
    floor: Floor,
    tol: f64,
    max_iter: usize,
    exec: Exec,
) -> Result<NewtonOutcome>
where
    R: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let len = x0.len();
    let mut x = x0;
    let mut r = residual(&x);
    let mut norm = max_abs(&r);
    if !norm.is_finite() {
        return Err(HoroError::NewtonDiverged { iterations: 0, residual: norm });
    }
    let mut damping = Vec::new();
    let bw = sp.bandwidth();
    for it in 0..max_iter {
        if norm <= tol {
            return Ok(NewtonOutcome { x, iterations: it, residual: norm, damping });
        }
        // colored finite-difference Jacobian
        let cols: Vec<(usize, Vec<f64>, Vec<f64>)> = exec.map_range(sp.colors(), |c| {
            let mut xp = x.clone();
            let mut eps = vec![0.0; len];
            for j in 0..len {
                if !fixed[j] && sp.color_of(j) == c {
                    let e = 1e-7 * x[j].abs().max(1e-7);
                    let e = (x[j] + e) - x[j];
                    xp[j] += e;
                    eps[j] = e;
                }
            }
            (c, eps, residual(&xp))
        });
        let mut jac = BandMatrix::zeros(len, bw, bw);
        let mut rows = Vec::with_capacity(9);
        for (c, eps, rp) in &cols {
            for j in 0..len {
                if fixed[j] || sp.color_of(j) != *c {
                    continue;
                }
                sp.rows_touching(j, len, &mut rows);
                for &i in &rows {
                    if !fixed[i] {
                        jac.set(i, j, (rp[i] - r[i]) / eps[j]);
                    }
                }
            }
        }
        for i in 0..len {
            if fixed[i] {
                jac.set(i, i, 1.0);
            }
        }
        let lu = jac.factor()?;
        let rhs: Vec<f64> = (0..len).map(|i| if fixed[i] { 0.0 } else { -r[i] }).collect();
        let dx = lu.solve(&rhs);

        let mut step = 1.0;
        let mut accepted = None;
        let mut clipped_any = false;
        while step >= 1.0 / 1024.0 {
            let mut clipped = false;
            let xn: Vec<f64> = (0..len)
                .map(|i| {
                    let v = x[i] + step * dx[i];
                    let lo = match floor {
                        Floor::Absolute(f) => f,
                        Floor::Relative(q) => q * x[i],
                    };
                    if v < lo {
                        clipped = true;
                        lo
                    } else {
                        v
                    }
                })
                .collect();
            clipped_any |= clipped;
            let rn = residual(&xn);
            let nn = max_abs(&rn);
            if nn.is_finite() && nn < norm * (1.0 - 1e-4 * step) {
                accepted = Some((xn, rn, nn));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((xn, rn, nn)) => {
                x = xn;
                r = rn;
                norm = nn;
                damping.push(step);
            }
            None => {
                if let (true, Floor::Absolute(f)) = (clipped_any, floor) {
                    return Err(HoroError::FloorViolation { floor: f });
                }
                return Err(HoroError::NewtonDiverged { iterations: it + 1, residual: norm });
            }
        }
    }
    if norm <= tol {
        return Ok(NewtonOutcome { x, iterations: max_iter, residual: norm, damping });
    }
    Err(HoroError::NewtonDiverged { iterations: max_iter, residual: norm })
}

// ---------------------------------------------------------------------------
// Standard scheme

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Solves `Q[u] = 0` with `u = φ` on the boundary.
pub fn solve(dom: &DomainSpec, bc: &BoundaryData, n: usize, tol: f64) -> Result<(GridFunction, SolveReport)> {
    solve_with(dom, bc, n, &SolveOptions::new(tol))
}

pub fn solve_with(
    dom: &DomainSpec,
    bc: &BoundaryData,
    n: usize,
    opts: &SolveOptions,
) -> Result<(GridFunction, SolveReport)> {
    dom.validate()?;
    check_tol(opts.tol)?;
    if n < 2 {
        return Err(invalid(format!("dimension n = {n} must be at least 2")));
    }
    bc.validate(dom, true)?;
    let mut phi = bc.nodal(dom);
    if let Shape::Slab { width, .. } = dom.shape {
        fill_slab_lateral(dom, bc, n, opts, width, &mut phi)?;
    }
    let fixed: Vec<bool> = (0..dom.len()).map(|i| dom.is_boundary(i)).collect();
    let x0 = initial_values(dom, &phi, &fixed, &opts.initial)?;
    let st = Stencil::new(dom, n)?;
    let sp = Sparsity { dim: dom.dim(), m: dom.resolution };
    let floor = Floor::Absolute(bc.floor);
    let residual = |x: &[f64]| st.residual_vec(x, opts.exec);

    let direct = newton(&residual, x0, &fixed, &sp, floor, opts.tol, opts.max_iter, opts.exec);
    let (out, stages) = match direct {
        Ok(o) => (o, 0),
        Err(HoroError::NewtonDiverged { .. })
        | Err(HoroError::FloorViolation { .. })
        | Err(HoroError::SingularMatrix { .. }) => homotopy(&residual, &phi, &fixed, &sp, floor, opts)?,
        Err(e) => return Err(e),
    };
    let u = GridFunction::new(*dom, out.x)?;
    let b2 = grim_upper_bound(dom, &phi, n)?;
    let report = SolveReport {
        iterations: out.iterations,
        final_residual: out.residual,
        height_bounds: (bc.min(), b2),
        newton_damping_history: out.damping,
        homotopy_stages: stages,
    };
    Ok((u, report))
}

fn initial_values(dom: &DomainSpec, phi: &[f64], fixed: &[bool], guess: &InitialGuess) -> Result<Vec<f64>> {
    let bmax = phi.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let mut x = match guess {
        InitialGuess::BoundaryMax => vec![bmax; dom.len()],
        InitialGuess::Constant(c) => {
            if !(*c > 0.0) {
                return Err(invalid(format!("initial constant must be positive, got {c}")));
            }
            vec![*c; dom.len()]
        }
        InitialGuess::Values(v) => {
            if v.len() != dom.len() || v.iter().any(|x| !(*x > 0.0)) {
                return Err(invalid("initial values must be positive and match the grid"));
            }
            v.clone()
        }
    };
    for i in 0..x.len() {
        if fixed[i] {
            x[i] = phi[i];
        }
    }
    Ok(x)
}

/// Boundary-data homotopy `φ_λ = C + λ(φ − C)` from a large constant `C`.
fn homotopy<R>(
    residual: &R,
    phi: &[f64],
    fixed: &[bool],
    sp: &Sparsity,
    floor: Floor,
    opts: &SolveOptions,
) -> Result<(NewtonOutcome, usize)>
where
    R: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let bmax = phi.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let big = (10.0 * bmax).max(10.0);
    let data = |lam: f64| -> Vec<f64> {
        phi.iter().zip(fixed).map(|(&p, &f)| if f { big + lam * (p - big) } else { f64::NAN }).collect()
    };
    let with_data = |x: &[f64], lam: f64| -> Vec<f64> {
        let d = data(lam);
        x.iter().zip(&d).map(|(&v, &b)| if b.is_nan() { v } else { b }).collect()
    };
    let run = |start: Vec<f64>| newton(residual, start, fixed, sp, floor, opts.tol, opts.max_iter, opts.exec);
    let mut last = run(with_data(&vec![big; phi.len()], 0.0))?;
    let mut lam: f64 = 0.0;
    let mut dl: f64 = 0.25;
    let mut stages = 1;
    while lam < 1.0 {
        let target = (lam + dl).min(1.0);
        match run(with_data(&last.x, target)) {
            Ok(o) => {
                last = o;
                lam = target;
                stages += 1;
                dl = (dl * 1.5).min(1.0);
            }
            Err(e @ HoroError::FloorViolation { .. }) if dl < 1.0 / 1024.0 => return Err(e),
            Err(_) if dl < 1.0 / 1024.0 => {
                return Err(HoroError::NewtonDiverged { iterations: stages, residual: f64::NAN })
            }
            Err(_) => dl *= 0.5,
        }
    }
    Ok((last, stages))
}

/// Solves the slab cross-section and copies it onto the truncation rows.
fn fill_slab_lateral(
    dom: &DomainSpec,
    bc: &BoundaryData,
    n: usize,
    opts: &SolveOptions,
    width: f64,
    phi: &mut [f64],
) -> Result<()> {
    if let BoundaryKind::Sampled { .. } = bc.kind {
        return Ok(());
    }
    let m = dom.resolution;
    let (lo, hi) = (phi[dom.flatten(0, m / 2)], phi[dom.flatten(m - 1, m / 2)]);
    let cross = DomainSpec::new(Shape::Interval { a: -0.5 * width, b: 0.5 * width }, m)?;
    let (u1, _) = solve_with(
        &cross,
        &BoundaryData { kind: BoundaryKind::PerSide { values: vec![lo, hi] }, floor: bc.floor },
        n,
        opts,
    )?;
    for i in 0..m {
        phi[dom.flatten(i, 0)] = u1.values[i];
        phi[dom.flatten(i, m - 1)] = u1.values[i];
    }
    Ok(())
}

/// Height of a grim reaper, centered on the domain's first axis, that lies
/// above the boundary data at every boundary node.
fn grim_upper_bound(dom: &DomainSpec, phi: &[f64], n: usize) -> Result<f64> {
    let (lo, hi) = dom.extent()[0];
    let (center, half) = if dom.is_radial() { (0.0, hi) } else { (0.5 * (lo + hi), 0.5 * (hi - lo)) };
    let pts: Vec<(f64, f64)> =
        dom.boundary_indices().into_iter().map(|i| ((dom.coords(i)[0] - center).abs(), phi[i])).collect();
    let mut h = grim_height_covering(half, n)?;
    for _ in 0..200 {
        let grim = GrimReaper::new(h, n)?;
        let mut ok = true;
        for &(x, p) in &pts {
            if grim.height_at(x)? < p {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(h);
        }
        h *= 2.0;
    }
    Err(HoroError::SearchExhausted { k: h })
}

/// Smallest power-of-two multiple of a starting height whose grim reaper is
/// wider than `2·half`.
fn grim_height_covering(half: f64, n: usize) -> Result<f64> {
    let mut h = half.max(1e-3);
    for _ in 0..200 {
        if GrimReaper::new(h, n)?.half_width() > half * (1.0 + 1e-9) {
            return Ok(h);
        }
        h *= 2.0;
    }
    Err(HoroError::SearchExhausted { k: h })
}

// ---------------------------------------------------------------------------
// Radial shooting oracle

/// Radial solution sampled at the grid radii.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Center height (ball) or inner slope `u'(r_in)` (annulus).
    pub parameter: f64,
}

/// `(u, u')` along the radius from the rotational graph equation.
fn radial_rhs(r: f64, y: &[f64; 2], n: f64) -> [f64; 2] {
    let [u, p] = *y;
    if u <= 0.0 || r <= 0.0 {
        return [f64::NAN; 2];
    }
    [p, -(1.0 + p * p) * ((n - 1.0) * p / r + (1.0 + n * u) / (u * u))]
}

/// Integrates from `(r0, u0, p0)` to the given radii. `None` when the
/// graph hits `u = 0` or turns vertical first.
fn radial_ivp(r0: f64, y0: [f64; 2], radii: &[f64], n: usize) -> Result<Option<Vec<f64>>> {
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
    let end = *radii.last().unwrap();
    let targets: Vec<f64> = radii.iter().copied().filter(|&r| r > r0).collect();
    let mut broke = false;
    let tr = ode::integrate(
        |r, y: &[f64; 2]| radial_rhs(r, y, n as f64),
        r0,
        y0,
        end,
        &opts,
        &Output::At(targets.clone()),
        |_, y| {
            broke = y[0] <= 1e-6 || y[1].abs() > 1e6;
            broke
        },
    );
    let tr = match tr {
        Ok(t) => t,
        Err(HoroError::StepFailure { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    if broke {
        return Ok(None);
    }
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        if r <= r0 {
            out.push(f64::NAN);
        } else {
            let k =
                tr.t.iter()
                    .position(|&t| t == r)
                    .ok_or_else(|| HoroError::StepFailure { t: r, reason: "radius not reached".into() })?;
            out.push(tr.y[k][0]);
        }
    }
    Ok(Some(out))
}

/// Bisection on a monotone shooting map `g(s) ∈ {below, value, above}`.
fn bisect<F: FnMut(f64) -> Result<Option<f64>>>(mut g: F, mut lo: f64, mut hi: f64, target: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        match g(mid)? {
            Some(v) if v >= target => hi = mid,
            _ => lo = mid,
        }
        if (hi - lo) <= 1e-15 * hi.abs().max(lo.abs()).max(1e-300) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two-point boundary value problem for the rotational graph equation on a
/// ball (shooting on the center height from the axis series) or an annulus
/// (shooting on `u'(r_in)`), solved to the grid radii.
pub fn solve_radial(dom: &DomainSpec, bc: &BoundaryData, n: usize, tol: f64) -> Result<RadialProfile> {
    dom.validate()?;
    check_tol(tol)?;
    if n < 2 {
        return Err(invalid(format!("dimension n = {n} must be at least 2")));
    }
    bc.validate(dom, true)?;
    if !dom.is_radial() {
        return Err(invalid("radial solve needs a ball or an annulus"));
    }
    let phi = bc.nodal(dom);
    let radii = dom.axis(0);
    let last = radii.len() - 1;
    let nn = n as f64;
    match dom.shape {
        Shape::Ball { radius } => {
            let c = phi[last];
            let shoot = |h: f64| -> Result<Option<Vec<f64>>> {
                let a = -(1.0 + nn * h) / (2.0 * nn * h * h);
                let b = (8.0 * a.powi(3) + (2.0 + nn * h) * a / h.powi(3)) / (4.0 * nn + 8.0);
                let d = (1e-4 * h.min(1.0)).min(0.25 * radii[1]);
                let u0 = h + a * d * d + b * d.powi(4);
                let p0 = 2.0 * a * d + 4.0 * b * d.powi(3);
                let vals = radial_ivp(d, [u0, p0], &radii, n)?;
                Ok(vals.map(|mut v| {
                    v[0] = h;
                    v
                }))
            };
            let end = |h: f64| -> Result<Option<f64>> { Ok(shoot(h)?.map(|v| v[last])) };
            // u(R; h) < h, so h = c undershoots; grow until it overshoots
            let lo = c;
            let mut hi = 2.0 * c.max(radius);
            let mut tries = 0;
            while end(hi)?.is_none_or(|v| v < c) {
                hi *= 2.0;
                tries += 1;
                if tries > 60 {
                    return Err(HoroError::BracketFailure("no center height reaches the boundary value".into()));
                }
            }
            let h = bisect(end, lo, hi, c)?;
            let values = shoot(h)?.ok_or_else(|| HoroError::BracketFailure("shooting lost the solution".into()))?;
            Ok(RadialProfile { radii, values, parameter: h })
        }
        Shape::Annulus { r_in, .. } => {
            let (c_in, c_out) = (phi[0], phi[last]);
            let shoot = |s: f64| -> Result<Option<Vec<f64>>> {
                Ok(radial_ivp(r_in, [c_in, s], &radii, n)?.map(|mut v| {
                    v[0] = c_in;
                    v
                }))
            };
            let end = |s: f64| -> Result<Option<f64>> { Ok(shoot(s)?.map(|v| v[last])) };
            let mut lo = -1.0;
            let mut hi = 1.0;
            let mut tries = 0;
            while end(lo)?.is_some_and(|v| v >= c_out) {
                lo *= 2.0;
                tries += 1;
                if tries > 60 {
                    return Err(HoroError::BracketFailure("no inner slope undershoots".into()));
                }
            }
            while end(hi)?.is_none_or(|v| v < c_out) {
                hi *= 2.0;
                tries += 1;
                if tries > 120 {
                    return Err(HoroError::BracketFailure("no inner slope overshoots".into()));
                }
            }
            let s = bisect(end, lo, hi, c_out)?;
            let values = shoot(s)?.ok_or_else(|| HoroError::BracketFailure("shooting lost the solution".into()))?;
            Ok(RadialProfile { radii, values, parameter: s })
        }
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// Degenerate boundary data

/// Iterates `u_j` of the continuation `φ = 1/j`, their extrapolated limit
/// and the monotonicity diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationResult {
    pub iterates: Vec<GridFunction>,
    /// `u_J + (J−1)(u_J − u_{J−1})`, zero on the boundary.
    pub limit: Vec<f64>,
    /// `u_{j+1} ≤ u_j + tol` at every node for every `j`.
    pub monotone: bool,
    /// Largest `u_{j+1} − u_j` seen.
    pub max_increase: f64,
    /// Center value of the hemisphere over a ball domain, which lies below
    /// every iterate.
    pub cap_lower_bound: Option<f64>,
}

/// Solves with boundary data `1/j`, `j = 1..=steps`, warm-starting each
/// solve from the previous one. Intervals, balls, annuli and slabs use the
/// transformed unknown `v = Ψ(u)` on their cross-section; rectangles use the
/// standard scheme.
pub fn continuation_to_zero_boundary(dom: &DomainSpec, n: usize, tol: f64, steps: usize) -> Result<ContinuationResult> {
    dom.validate()?;
    check_tol(tol)?;
    if n < 2 {
        return Err(invalid(format!("dimension n = {n} must be at least 2")));
    }
    if steps < 2 {
        return Err(invalid("continuation needs at least two steps"));
    }
    let mut iterates = Vec::with_capacity(steps);
    match dom.shape {
        Shape::Rectangle { .. } => {
            let mut prev: Option<Vec<f64>> = None;
            for j in 1..=steps {
                let mut opts = SolveOptions::new(tol);
                if let Some(p) = &prev {
                    let mut v = p.clone();
                    for (i, x) in v.iter_mut().enumerate() {
                        if dom.is_boundary(i) {
                            *x = 1.0 / j as f64;
                        }
                    }
                    opts.initial = InitialGuess::Values(v);
                }
                let (u, _) = solve_with(dom, &BoundaryData::constant(1.0 / j as f64), n, &opts)?;
                prev = Some(u.values.clone());
                iterates.push(u);
            }
        }
        _ => {
            let (cross, extend): (DomainSpec, Box<dyn Fn(&[f64]) -> Vec<f64>>) = match dom.shape {
                Shape::Slab { width, .. } => {
                    let m = dom.resolution;
                    (
                        DomainSpec::new(Shape::Interval { a: -0.5 * width, b: 0.5 * width }, m)?,
                        Box::new(move |v: &[f64]| (0..m * m).map(|k| v[k % m]).collect()),
                    )
                }
                _ => (*dom, Box::new(|v: &[f64]| v.to_vec())),
            };
            let scheme = TransformedScheme::new(&cross, n)?;
            let mut v: Option<Vec<f64>> = None;
            for j in 1..=steps {
                let eps = 1.0 / j as f64;
                let out = scheme.solve(eps, v.take(), tol)?;
                let u: Vec<f64> = out.iter().map(|&x| scheme.psi.inverse(x)).collect();
                v = Some(out);
                iterates.push(GridFunction::new(*dom, extend(&u))?);
            }
        }
    }
    let mut max_increase = f64::NEG_INFINITY;
    for w in iterates.windows(2) {
        for (a, b) in w[0].values.iter().zip(&w[1].values) {
            max_increase = max_increase.max(b - a);
        }
    }
    let jl = steps as f64;
    let (last, prev) = (&iterates[steps - 1], &iterates[steps - 2]);
    let limit = (0..dom.len())
        .map(|i| if dom.is_boundary(i) { 0.0 } else { last.values[i] + (jl - 1.0) * (last.values[i] - prev.values[i]) })
        .collect();
    let cap_lower_bound = match dom.shape {
        Shape::Ball { radius } => Some(radius),
        _ => None,
    };
    Ok(ContinuationResult { iterates, limit, monotone: max_increase <= tol, max_increase, cap_lower_bound })
}

/// Finite-volume scheme for one-dimensional cross-sections in the unknown
/// `v = Ψ(u)`: face fluxes from `u' = v'/Ψ'(u)` and cell sources integrated
/// by Gauss–Legendre quadrature over the piecewise-linear `v`.
struct TransformedScheme {
    dom: DomainSpec,
    n: f64,
    psi: HeightTransform,
    x: Vec<f64>,
    h: f64,
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
    (-0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
];

impl TransformedScheme {
    fn new(dom: &DomainSpec, n: usize) -> Result<Self> {
        if dom.dim() != 1 {
            return Err(invalid("transformed scheme needs a one-dimensional cross-section"));
        }
        Ok(TransformedScheme {
            dom: *dom,
            n: n as f64,
            psi: HeightTransform::new(n),
            x: dom.axis(0),
            h: dom.spacing()[0],
        })
    }

    fn weight(&self, r: f64) -> f64 {
        if self.dom.is_radial() {
            r.max(0.0).powf(self.n - 1.0)
        } else {
            1.0
        }
    }

    /// `∫ w(r) f(u)/W dr` over `[a, b]` where `v` is linear from `va` to
    /// `vb` and has slope `s`.
    fn source(&self, a: f64, b: f64, va: f64, vb: f64, s: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (g, wt) in GAUSS4 {
            let t = 0.5 * (g + 1.0);
            let r = a + t * (b - a);
            let v = va + t * (vb - va);
            let u = self.psi.inverse(v);
            let p = s / self.psi.derivative(u);
            acc += wt * self.weight(r) * f_unchecked(u, self.n) / (1.0 + p * p).sqrt();
        }
        acc * half
    }

    fn face_flux(&self, vl: f64, vr: f64) -> (f64, f64) {
        let s = (vr - vl) / self.h;
        let vm = 0.5 * (vl + vr);
        let p = s / self.psi.derivative(self.psi.inverse(vm));
        (p / (1.0 + p * p).sqrt(), s)
    }

    fn residual(&self, v: &[f64], exec: Exec) -> Vec<f64> {
        let len = v.len();
        let h = self.h;
        let mut out = vec![0.0; len];
        exec.fill(&mut out, |i| {
            if self.dom.is_boundary(i) {
                return 0.0;
            }
            let xi = self.x[i];
            let (fr, sr) = self.face_flux(v[i], v[i + 1]);
            let xr = xi + 0.5 * h;
            let vmr = 0.5 * (v[i] + v[i + 1]);
            let right_src = self.source(xi, xr, v[i], vmr, sr);
            if i == 0 {
                // ball center: half cell with zero flux through r = 0
                let measure = (0.5 * h).powf(self.n) / self.n;
                return (self.weight(xr) * fr - right_src) / measure;
            }
            let (fl, sl) = self.face_flux(v[i - 1], v[i]);
            let xl = xi - 0.5 * h;
            let vml = 0.5 * (v[i - 1] + v[i]);
            let left_src = self.source(xl, xi, vml, v[i], sl);
            let measure = if self.dom.is_radial() { (xr.powf(self.n) - xl.powf(self.n)) / self.n } else { h };
            (self.weight(xr) * fr - self.weight(xl) * fl - left_src - right_src) / measure
        });
        out
    }

    fn solve(&self, eps: f64, warm: Option<Vec<f64>>, tol: f64) -> Result<Vec<f64>> {
        let vb = self.psi.value(eps);
        let len = self.dom.len();
        let fixed: Vec<bool> = (0..len).map(|i| self.dom.is_boundary(i)).collect();
        let mut x0 = warm.unwrap_or_else(|| vec![self.psi.value(eps.max(1.0)); len]);
        for i in 0..len {
            if fixed[i] {
                x0[i] = vb;
            }
        }
        let exec = Exec::default();
        let res = |v: &[f64]| self.residual(v, exec);
        let sp = Sparsity { dim: 1, m: len };
        let out = newton(&res, x0, &fixed, &sp, Floor::Relative(1e-3), tol, 100, exec)?;
        Ok(out.x)
    }
}

// ---------------------------------------------------------------------------
// Post-solve verification

/// Height bounds and the boundary-maximum property of `H = −1/(uW)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeightReport {
    /// `min u − (min φ − tol)`; nonnegative when the lower bound holds.
    pub lower_margin: f64,
    /// `max (u − barrier)`; at most `tol` when the upper bound holds.
    pub upper_excess: f64,
    pub barrier: String,
    pub barrier_height: f64,
    pub h_boundary_min: f64,
    pub h_boundary_max: f64,
    pub h_interior_min: f64,
    pub h_interior_max: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub h_max_on_boundary: bool,
    pub pass: bool,
}

/// `H = −1/(uW)` at every node, gradients by second-order central and
/// one-sided differences (zero at a ball center).
pub fn soliton_mean_curvature(u: &GridFunction) -> Vec<f64> {
    let dom = &u.domain;
    let v = &u.values;
    let m = dom.resolution;
    let h = dom.spacing();
    let d1 = |vals: &dyn Fn(usize) -> f64, i: usize, hh: f64| {
        if i == 0 {
            (-3.0 * vals(0) + 4.0 * vals(1) - vals(2)) / (2.0 * hh)
        } else if i == m - 1 {
            (3.0 * vals(m - 1) - 4.0 * vals(m - 2) + vals(m - 3)) / (2.0 * hh)
        } else {
            (vals(i + 1) - vals(i - 1)) / (2.0 * hh)
        }
    };
    (0..dom.len())
        .map(|idx| {
            let g2 = if dom.dim() == 1 {
                if idx == 0 && matches!(dom.shape, Shape::Ball { .. }) {
                    0.0
                } else {
                    d1(&|k| v[k], idx, h[0]).powi(2)
                }
            } else {
                let (i, j) = dom.unflatten(idx);
                let gx = d1(&|k| v[dom.flatten(k, j)], i, h[0]);
                let gy = d1(&|k| v[dom.flatten(i, k)], j, h[1]);
                gx * gx + gy * gy
            };
            -1.0 / (v[idx] * (1.0 + g2).sqrt())
        })
        .collect()
}

/// Checks `min φ − tol ≤ u ≤ barrier` with a bowl (balls, annuli) or grim
/// reaper (other shapes) lying above the boundary data, and that
/// `H = −1/(uW)` is largest on the boundary.
pub fn verify_height_and_h(u: &GridFunction, bc: &BoundaryData, n: usize, tol: f64) -> Result<HeightReport> {
    let dom = &u.domain;
    bc.validate(dom, false)?;
    let mut phi = bc.nodal(dom);
    for i in dom.boundary_indices() {
        if phi[i].is_nan() {
            phi[i] = u.values[i];
        }
    }
    let bmin = dom.boundary_indices().iter().map(|&i| phi[i]).fold(f64::INFINITY, f64::min);
    let lower_margin = u.min() - (bmin - tol);
    let (barrier, height, upper): (&str, f64, Vec<f64>) = if dom.is_radial() {
        let (h, curve) = bowl_above(dom, &phi, n)?;
        let vals = dom.axis(0).iter().map(|&r| curve.height_at_radius(r)).collect::<Result<Vec<_>>>()?;
        ("bowl", h, vals)
    } else {
        let h = grim_upper_bound(dom, &phi, n)?;
        let grim = GrimReaper::new(h, n)?;
        let (lo, hi) = dom.extent()[0];
        let c = 0.5 * (lo + hi);
        let vals = (0..dom.len()).map(|i| grim.height_at(dom.coords(i)[0] - c)).collect::<Result<Vec<_>>>()?;
        ("grim_reaper", h, vals)
    };
    let upper_excess = u.values.iter().zip(&upper).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    let hv = soliton_mean_curvature(u);
    let (mut bmin_h, mut bmax_h, mut imin_h, mut imax_h) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (i, &x) in hv.iter().enumerate() {
        if dom.is_boundary(i) {
            bmin_h = bmin_h.min(x);
            bmax_h = bmax_h.max(x);
        } else {
            imin_h = imin_h.min(x);
            imax_h = imax_h.max(x);
        }
    }
    let lower_ok = lower_margin >= 0.0;
    let upper_ok = upper_excess <= tol;
    let h_max_on_boundary = imax_h <= bmax_h + tol;
    Ok(HeightReport {
        lower_margin,
        upper_excess,
        barrier: barrier.into(),
        barrier_height: height,
        h_boundary_min: bmin_h,
        h_boundary_max: bmax_h,
        h_interior_min: imin_h,
        h_interior_max: imax_h,
        lower_ok,
        upper_ok,
        h_max_on_boundary,
        pass: lower_ok && upper_ok && h_max_on_boundary,
    })
}

/// Bowl centered on the axis, lying above the boundary data at every
/// boundary radius.
fn bowl_above(dom: &DomainSpec, phi: &[f64], n: usize) -> Result<(f64, profiles::ProfileCurve)> {
    let radii = dom.axis(0);
    let pts: Vec<(f64, f64)> = dom.boundary_indices().into_iter().map(|i| (radii[i], phi[i])).collect();
    let r_max = radii[radii.len() - 1];
    let mut h = phi.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max).max(0.1);
    for _ in 0..60 {
        let cfg = ShootingConfig { z_floor: 1e-4 * h.min(1.0), ..Default::default() };
        let curve = profiles::bowl_shoot(h, n, &cfg)?;
        if curve.r2.is_some_and(|r2| r2 > r_max) {
            let mut ok = true;
            for &(r, p) in &pts {
                if curve.height_at_radius(r)? < p {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok((h, curve));
            }
        }
        h *= 2.0;
    }
    Err(HoroError::SearchExhausted { k: h })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_validation() {
        let d = DomainSpec::new(Shape::Annulus { r_in: 0.5, r_out: 1.0 }, 16).unwrap();
        assert!(BoundaryData::per_side(vec![1.0]).validate(&d, true).is_err());
        assert!(BoundaryData::per_side(vec![1.0, 0.5]).validate(&d, true).is_ok());
        assert!(BoundaryData::constant(0.0).validate(&d, true).is_err());
        assert!(BoundaryData::constant(0.0).validate(&d, false).is_ok());
        assert!(BoundaryData::sampled(vec![1.0; 3]).validate(&d, true).is_err());
    }

    #[test]
    fn problem_json_round_trip() {
        let bc: BoundaryData = serde_json::from_str(r#"{"kind":"per_side","values":[1.0,2.0]}"#).unwrap();
        assert_eq!(bc.floor, U_MIN);
        assert_eq!(bc.kind, BoundaryKind::PerSide { values: vec![1.0, 2.0] });
    }
}
