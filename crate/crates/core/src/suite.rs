//! Verification suite: named numerical checks of the library's invariants,
//! grouped by area, each recording a measured value against a threshold.

use std::f64::consts::{E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::barriers::{self, CollarConstants};
use crate::dirichlet::{self, BoundaryData, InitialGuess, SolveOptions};
use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::geometry::{self, Base, GeodesicState, Plane, Point, SolitonParams};
use crate::grid::{DomainSpec, GridFunction, Shape};
use crate::operator::{self, Classification};
use crate::profiles::{self, ProfileCurve, ShootingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Geometry,
    Profiles,
    Operator,
    Dirichlet,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "geometry" => Suite::Geometry,
            "profiles" => Suite::Profiles,
            "operator" => Suite::Operator,
            "dirichlet" => Suite::Dirichlet,
            "all" => Suite::All,
            _ => return None,
        })
    }

    fn includes(self, group: Suite) -> bool {
        self == Suite::All || self == group
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Short description of the property measured.
    pub anchor: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    pub fn new(checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Report { checks, pass }
    }

    /// Pretty JSON with fields in declaration order and a trailing newline.
    pub fn to_json_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub tol: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl SuiteConfig {
    pub fn new(tol: f64, seed: u64) -> Self {
        SuiteConfig { tol, seed, exec: Exec::default() }
    }
}

/// Measured value, threshold and verdict of one check.
struct Outcome {
    value: f64,
    threshold: f64,
    pass: bool,
}

fn at_most(value: f64, threshold: f64) -> Outcome {
    Outcome { value, threshold, pass: value <= threshold }
}

fn below(value: f64, threshold: f64) -> Outcome {
    Outcome { value, threshold, pass: value < threshold }
}

fn above(value: f64, threshold: f64) -> Outcome {
    Outcome { value, threshold, pass: value > threshold }
}

type CheckFn = fn(&SuiteConfig) -> Result<Outcome>;

struct Entry {
    group: Suite,
    name: &'static str,
    anchor: &'static str,
    run: CheckFn,
}

const fn entry(group: Suite, name: &'static str, anchor: &'static str, run: CheckFn) -> Entry {
    Entry { group, name, anchor, run }
}

const ENTRIES: &[Entry] = &[
    entry(Suite::Geometry, "sectional_curvatures_nonpositive", "ilmanen sectional curvature sign", curvature_sign),
    entry(Suite::Geometry, "conformal_factor_closed_form", "ilmanen conformal factor", conformal_factor_value),
    entry(Suite::Geometry, "geodesic_symmetry", "geodesic reflection symmetry", geodesic_symmetry),
    entry(Suite::Geometry, "geodesic_concavity", "geodesic concavity", geodesic_concavity),
    entry(Suite::Geometry, "geodesic_orthogonal_ends", "geodesic meets the boundary orthogonally", geodesic_ends),
    entry(Suite::Geometry, "vertical_geodesic", "vertical lines are geodesics", vertical_geodesic),
    entry(Suite::Geometry, "conformal_mean_curvature_order", "conformal mean curvature relation", conformal_order),
    entry(Suite::Profiles, "grim_residual", "grim reaper profile equation", grim_residual),
    entry(Suite::Profiles, "grim_bottom_orthogonal", "grim reaper meets the boundary orthogonally", grim_bottom),
    entry(Suite::Profiles, "grim_width_increasing", "grim reaper foliation", grim_width_increasing),
    entry(Suite::Profiles, "grim_width_roundtrip", "grim reaper height for width", grim_width_roundtrip),
    entry(Suite::Profiles, "bowl_r2_increasing", "bowl extinction radius monotone", bowl_r2_increasing),
    entry(Suite::Profiles, "bowl_family_ordered", "bowl foliation", bowl_family_ordered),
    entry(Suite::Profiles, "bowl_tip_curvature", "bowl tip curvature", bowl_tip),
    entry(Suite::Profiles, "bowl_strictly_concave", "bowl concavity", bowl_concave),
    entry(Suite::Profiles, "bowl_terminal_vertical", "bowl meets the boundary orthogonally", bowl_terminal),
    entry(Suite::Profiles, "bowl_radius_roundtrip", "bowl height for extinction radius", bowl_radius_roundtrip),
    entry(Suite::Profiles, "wing_branches_ordered", "wing branch ordering", wing_ordered),
    entry(Suite::Profiles, "wing_endpoints_separated", "wing boundary circles", wing_endpoints),
    entry(Suite::Profiles, "wing_single_inflection", "wing inner branch inflection", wing_inflection),
    entry(Suite::Profiles, "wing_cubic_asymptote", "wing boundary asymptotics", wing_cubic),
    entry(Suite::Operator, "spherical_cap_residual", "soliton operator on spherical caps", cap_residual),
    entry(Suite::Operator, "q_residual_second_order", "discrete operator consistency", q_second_order),
    entry(Suite::Operator, "raised_solution_supersolution", "shifted solution is a supersolution", raised_super),
    entry(Suite::Operator, "lowered_solution_subsolution", "shifted solution is a subsolution", lowered_sub),
    entry(Suite::Operator, "f_diffeo_inverse_pair", "F diffeomorphism inverse", f_inverse_pair),
    entry(Suite::Operator, "f_diffeo_decreasing", "F diffeomorphism monotone", f_decreasing),
    entry(Suite::Operator, "omega_tilde_vanishing", "small-radius barrier vanishes", omega_vanishing),
    entry(Suite::Operator, "omega_tilde_convex_decreasing", "small-radius barrier shape", omega_convex),
    entry(Suite::Operator, "omega_full_slope_bound", "corrected barrier slope", omega_full_slope),
    entry(Suite::Operator, "nonexistence_bound_value", "nonexistence height bound", nonexistence_value),
    entry(Suite::Operator, "collar_supersolution", "boundary collar barrier", collar_super),
    entry(Suite::Dirichlet, "annulus_matches_bowl", "annulus solve against the bowl", annulus_error),
    entry(Suite::Dirichlet, "annulus_second_order", "annulus grid convergence", annulus_order),
    entry(Suite::Dirichlet, "radial_oracle_matches_bowl", "radial shooting oracle", radial_oracle),
    entry(Suite::Dirichlet, "ball_recovers_bowl_cap", "uniqueness on a ball", ball_cap),
    entry(Suite::Dirichlet, "comparison_ordered_data", "discrete comparison principle", comparison),
    entry(Suite::Dirichlet, "initial_guess_independence", "uniqueness of the discrete solution", uniqueness),
    entry(Suite::Dirichlet, "height_bounds_and_h_maximum", "height bounds and boundary maximum of H", height_h),
    entry(Suite::Dirichlet, "h_bump_negative_control", "perturbed graph breaks the H maximum", h_bump),
    entry(Suite::Dirichlet, "annulus_h_between_boundary", "interior H between boundary values", annulus_h),
    entry(Suite::Dirichlet, "continuation_monotone", "monotone approximation of zero data", continuation_monotone),
    entry(Suite::Dirichlet, "slab_limit_matches_grim", "slab limit is the grim reaper", slab_grim),
    entry(Suite::Dirichlet, "ball_iterates_above_cap", "spherical cap lies below the iterates", ball_above_cap),
    entry(Suite::Dirichlet, "boundary_gradient_bound", "collar gradient estimate", gradient_bound),
];

/// Runs the selected checks (in parallel under `cfg.exec`) and collects
/// them in a fixed order.
pub fn run(suite: Suite, cfg: &SuiteConfig) -> Result<Report> {
    if !(cfg.tol > 0.0 && cfg.tol.is_finite()) {
        return Err(invalid(format!("tolerance must be positive, got {}", cfg.tol)));
    }
    let selected: Vec<&Entry> = ENTRIES.iter().filter(|e| suite.includes(e.group)).collect();
    let checks = cfg.exec.map(&selected, |e| {
        let (value, threshold, pass) = match (e.run)(cfg) {
            Ok(o) => (o.value, o.threshold, o.pass),
            Err(_) => (f64::NAN, f64::NAN, false),
        };
        Check { name: e.name.into(), anchor: e.anchor.into(), value, threshold, pass }
    });
    Ok(Report::new(checks))
}

/// Names of the checks in a suite, in report order.
pub fn check_names(suite: Suite) -> Vec<&'static str> {
    ENTRIES.iter().filter(|e| suite.includes(e.group)).map(|e| e.name).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn count_false<I: IntoIterator<Item = bool>>(it: I) -> f64 {
    it.into_iter().filter(|ok| !ok).count() as f64
}

// ---------------------------------------------------------------------------
// geometry

fn curvature_sign(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let x0 = 10f64.powf(rng.random_range(-2.0..2.0));
        let n = rng.random_range(2..=6usize);
        let theta = rng.random_range(1e-9..2.0 * PI - 1e-9);
        let p = SolitonParams::hypersurface(n)?;
        for k in [
            geometry::sectional_curvature_axis(x0, &p, Plane::VerticalPair)?,
            geometry::sectional_curvature_axis(x0, &p, Plane::HorizontalPair)?,
            geometry::sectional_curvature_mixed(x0, &p, theta)?,
        ] {
            worst = worst.max(k);
        }
    }
    Ok(at_most(worst, 0.0))
}

fn conformal_factor_value(_: &SuiteConfig) -> Result<Outcome> {
    let p = SolitonParams::new(2, 2)?;
    let pt = Point::new(0.5, vec![0.0, 0.0], &p)?;
    Ok(at_most((geometry::conformal_factor(&pt, &p, Base::Euclidean) - 2.0 * E).abs(), 1e-13))
}

fn sample_geodesic(cfg: &SuiteConfig) -> Result<geometry::GeodesicChecks> {
    let p = SolitonParams::new(2, 2)?;
    let init = GeodesicState::from_angle(1.0, 0.0, 0.3)?;
    geometry::integrate_geodesic(init, &p, (-25.0, 25.0), cfg.tol)?.checks()
}

fn geodesic_symmetry(cfg: &SuiteConfig) -> Result<Outcome> {
    Ok(at_most(sample_geodesic(cfg)?.symmetry_error, 10.0 * cfg.tol))
}

fn geodesic_concavity(cfg: &SuiteConfig) -> Result<Outcome> {
    Ok(at_most(sample_geodesic(cfg)?.concavity_violation, 10.0 * cfg.tol))
}

fn geodesic_ends(cfg: &SuiteConfig) -> Result<Outcome> {
    let c = sample_geodesic(cfg)?;
    let mut o = at_most(c.end_slopes.0.max(c.end_slopes.1), 10.0 * cfg.tol);
    o.pass &= c.slopes_monotone;
    Ok(o)
}

fn vertical_geodesic(cfg: &SuiteConfig) -> Result<Outcome> {
    let p = SolitonParams::new(2, 2)?;
    let c = geometry::integrate_geodesic(GeodesicState::new(1.0, 0.0, 1.0, 0.0)?, &p, (-25.0, 25.0), cfg.tol)?;
    let drift = c.states.iter().map(|s| s.w.abs() + s.dw.abs()).fold(0.0, f64::max);
    Ok(at_most(drift, cfg.tol))
}

fn conformal_order(_: &SuiteConfig) -> Result<Outcome> {
    let bowl = profiles::bowl_shoot(1.0, 2, &ShootingConfig::default())?;
    let d = DomainSpec::new(Shape::Ball { radius: 0.5 }, 257)?;
    let u = GridFunction::from_fn(d, |x| bowl.height_at_radius(x[0]).unwrap_or(f64::NAN))?;
    let p = SolitonParams::new(2, 2)?;
    let dx = d.spacing()[0];
    let coarse = geometry::conformal_mean_curvature_check(&u, &p, 4.0 * dx)?.max_abs;
    let fine = geometry::conformal_mean_curvature_check(&u, &p, 2.0 * dx)?.max_abs;
    Ok(at_most((coarse / fine - 4.0).abs(), 0.5))
}

// ---------------------------------------------------------------------------
// profiles

fn grim_residual(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for n in [2, 3] {
        for h in [0.5, 1.0, 2.0] {
            worst = worst.max(profiles::grim_residual(h, n, 100)?);
        }
    }
    Ok(below(worst, cfg.tol.max(1e-8)))
}

fn grim_bottom(_: &SuiteConfig) -> Result<Outcome> {
    let h = 1.0;
    let mut worst = profiles::grim_phi(h, h, 2)?.abs();
    for i in 1..=50 {
        let z = h / 50.0 * i as f64 / 50.0;
        worst = worst.max(profiles::grim_phi_prime(z, h, 2)?.abs());
    }
    Ok(below(worst, 1e-6))
}

fn grim_width_increasing(_: &SuiteConfig) -> Result<Outcome> {
    let widths =
        (0..20).map(|i| profiles::grim_width(0.1 * 50f64.powf(i as f64 / 19.0), 2)).collect::<Result<Vec<_>>>()?;
    Ok(at_most(count_false(widths.windows(2).map(|w| w[1] > w[0])), 0.0))
}

fn grim_width_roundtrip(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for w in [0.1, 1.0, 10.0] {
        let h = profiles::grim_height_for_width(w, 2, cfg.tol)?;
        worst = worst.max((profiles::grim_width(h, 2)? / w - 1.0).abs());
    }
    Ok(at_most(worst, 10.0 * cfg.tol))
}

fn bowl_r2_increasing(_: &SuiteConfig) -> Result<Outcome> {
    let r = [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|&h| profiles::r2_of_h(h, 2)).collect::<Result<Vec<_>>>()?;
    Ok(at_most(count_false(r.windows(2).map(|w| w[1] > w[0])), 0.0))
}

fn bowl_family_ordered(_: &SuiteConfig) -> Result<Outcome> {
    let bowls = [0.25, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&h| profiles::bowl_shoot(h, 2, &ShootingConfig::default()))
        .collect::<Result<Vec<_>>>()?;
    let mut gap = f64::INFINITY;
    for i in 0..bowls.len() {
        for j in i + 1..bowls.len() {
            gap = gap.min(profiles::bowl_gap(&bowls[i], &bowls[j], 200)?);
        }
    }
    Ok(above(gap, 0.0))
}

fn unit_bowl() -> Result<ProfileCurve> {
    profiles::bowl_shoot(1.0, 2, &ShootingConfig::default())
}

fn bowl_tip(_: &SuiteConfig) -> Result<Outcome> {
    Ok(at_most((unit_bowl()?.tip_second_derivative(0.05)? + 1.5).abs(), 1e-6))
}

fn bowl_concave(_: &SuiteConfig) -> Result<Outcome> {
    Ok(above(unit_bowl()?.min_turning_rate(), 0.0))
}

fn bowl_terminal(_: &SuiteConfig) -> Result<Outcome> {
    Ok(at_most((unit_bowl()?.terminal_angle() - PI).abs(), 1e-3))
}

fn bowl_radius_roundtrip(_: &SuiteConfig) -> Result<Outcome> {
    let h = profiles::h_of_r2(2.0, 2, 1e-12)?;
    Ok(below((profiles::r2_of_h(h, 2)? - 2.0).abs(), 1e-6))
}

fn unit_wing() -> Result<(ProfileCurve, ProfileCurve)> {
    profiles::wing_shoot(0.5, 1.0, 2, &ShootingConfig::default().with_z_floor(1e-3))
}

fn wing_ordered(_: &SuiteConfig) -> Result<Outcome> {
    let (up, lo) = unit_wing()?;
    Ok(above(profiles::wing_branch_gap(&up, &lo, 200)?, 0.0))
}

fn wing_endpoints(_: &SuiteConfig) -> Result<Outcome> {
    let (up, _) = unit_wing()?;
    let (q1, q2) = up.marks.endpoints.ok_or_else(|| invalid("wing without endpoints"))?;
    Ok(above((q1 - q2).abs(), 1e-3))
}

fn wing_inflection(_: &SuiteConfig) -> Result<Outcome> {
    let (_, lo) = unit_wing()?;
    let count = if lo.marks.lambda0.is_some() { 1.0 } else { 0.0 };
    Ok(Outcome { value: count, threshold: 1.0, pass: count == 1.0 })
}

fn wing_cubic(_: &SuiteConfig) -> Result<Outcome> {
    let (up, lo) = unit_wing()?;
    let a = profiles::cubic_asymptote_check(&up)?.relative_error;
    let b = profiles::cubic_asymptote_check(&lo)?.relative_error;
    Ok(at_most(a.max(b), 0.05))
}

// ---------------------------------------------------------------------------
// operator

fn cap_residual(_: &SuiteConfig) -> Result<Outcome> {
    let (radius, n) = (1.0, 2);
    let d = DomainSpec::new(Shape::Rectangle { wx: 2.0, wy: 2.0 }, 41)?;
    let mut worst = 0.0f64;
    for i in 0..d.len() {
        let x = d.coords(i);
        if x[0].hypot(x[1]) > 0.95 * radius {
            continue;
        }
        let s = barriers::spherical_cap_sample(&[0.0, 0.0], radius, &x)?;
        let expect = 1.0 / (s.u * radius);
        worst = worst.max((operator::q_pointwise(&s, n) / expect - 1.0).abs());
    }
    Ok(below(worst, 1e-6))
}

/// Discrete `Q` of the unit bowl sampled on a ball grid.
fn bowl_grid_residual(bowl: &ProfileCurve, m: usize, exec: Exec) -> Result<f64> {
    let d = DomainSpec::new(Shape::Ball { radius: 0.5 }, m)?;
    let u = GridFunction::from_fn(d, |x| bowl.height_at_radius(x[0]).unwrap_or(f64::NAN))?;
    Ok(operator::q_residual_with(&u, 2, 1e-8, exec)?.max_abs)
}

fn q_second_order(cfg: &SuiteConfig) -> Result<Outcome> {
    let bowl = unit_bowl()?;
    let coarse = bowl_grid_residual(&bowl, 33, cfg.exec)?;
    let fine = bowl_grid_residual(&bowl, 65, cfg.exec)?;
    Ok(at_most((coarse / fine - 4.0).abs(), 0.8))
}

fn small_ball_solution(cfg: &SuiteConfig) -> Result<GridFunction> {
    let d = DomainSpec::new(Shape::Ball { radius: 0.5 }, 33)?;
    let mut opts = SolveOptions::new(1e-2 * cfg.tol);
    opts.exec = cfg.exec;
    Ok(dirichlet::solve_with(&d, &BoundaryData::constant(0.8), 2, &opts)?.0)
}

fn shifted_classification(cfg: &SuiteConfig, sign: f64, want: Classification) -> Result<Outcome> {
    let u = small_ball_solution(cfg)?;
    let eps = 10.0 * cfg.tol;
    let shifted = GridFunction::new(u.domain, u.values.iter().map(|v| v + sign * eps).collect())?;
    let r = operator::q_residual_with(&shifted, 2, cfg.tol, cfg.exec)?;
    let extreme = r.evaluated().map(|(_, v)| sign * v).fold(f64::NEG_INFINITY, f64::max);
    Ok(Outcome { value: -sign * extreme, threshold: 0.0, pass: r.classification == want })
}

fn raised_super(cfg: &SuiteConfig) -> Result<Outcome> {
    shifted_classification(cfg, 1.0, Classification::Supersolution)
}

fn lowered_sub(cfg: &SuiteConfig) -> Result<Outcome> {
    shifted_classification(cfg, -1.0, Classification::Subsolution)
}

fn f_inverse_pair(_: &SuiteConfig) -> Result<Outcome> {
    let worst = (0..100)
        .map(|i| {
            let s = 10f64.powf(-4.0 + 8.0 * i as f64 / 99.0);
            (barriers::F_inverse(barriers::F_diffeo(s)) / s - 1.0).abs()
        })
        .fold(0.0, f64::max);
    Ok(below(worst, 1e-12))
}

fn f_decreasing(_: &SuiteConfig) -> Result<Outcome> {
    let vals: Vec<f64> = (0..200).map(|i| barriers::F_diffeo(10f64.powf(-4.0 + 8.0 * i as f64 / 199.0))).collect();
    Ok(at_most(count_false(vals.windows(2).map(|w| w[1] < w[0])), 0.0))
}

fn omega_vanishing(_: &SuiteConfig) -> Result<Outcome> {
    let vals = (0..13)
        .map(|i| {
            let a = 10f64.powf(-1.0 - 3.0 * i as f64 / 12.0);
            barriers::omega_tilde(a, a, 1.0, 2)
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = count_false(vals.windows(2).map(|w| w[1] < w[0]));
    let ratio = vals[12] / vals[0];
    Ok(Outcome { value: ratio, threshold: 0.1, pass: violations == 0.0 && ratio < 0.1 })
}

fn omega_convex(cfg: &SuiteConfig) -> Result<Outcome> {
    let (a, d) = (0.1, 1.0);
    let vals =
        (0..50).map(|i| barriers::omega_tilde(a + (d - a) * i as f64 / 49.0, a, d, 2)).collect::<Result<Vec<_>>>()?;
    let bad = count_false(vals.windows(2).map(|w| w[1] < w[0]))
        + count_false(vals.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2] >= -cfg.tol));
    Ok(at_most(bad, 0.0))
}

fn omega_full_slope(_: &SuiteConfig) -> Result<Outcome> {
    let (a, d, u_star, n) = (0.1, 1.0, 0.5, 2);
    let bound = 2.0 * d / (n - 1) as f64 * operator::f_rhs(u_star, n)?;
    let step = 1e-5;
    let mut worst = f64::NEG_INFINITY;
    for i in 1..=50 {
        let r = a + (d - a) * i as f64 / 51.0;
        let slope = (barriers::omega_full(r + step, a, d, u_star, n)?
            - barriers::omega_full(r - step, a, d, u_star, n)?)
            / (2.0 * step);
        worst = worst.max(slope - bound);
    }
    Ok(below(worst, 0.0))
}

fn nonexistence_value(_: &SuiteConfig) -> Result<Outcome> {
    Ok(at_most((barriers::nonexistence_bound(0.0, 1.0, 2, 1.0)? - 25.0).abs(), 0.0))
}

fn collar_super(_: &SuiteConfig) -> Result<Outcome> {
    let (phi_hat, b2, n, radius, rho) = (1.0, 2.0, 2, 1.0, 0.5);
    let bounds = CollarConstants { c1: 1.0, c2: 0.0, c3: 1.0 / (radius - rho), c_phi: -operator::f_rhs(phi_hat, n)? };
    let collar = barriers::collar_barrier_params_for(b2, &bounds, rho, phi_hat)?;
    let q = barriers::collar_max_q(&collar, n, 2, Some(radius), 400)?;
    let mut o = below(q, 0.0);
    o.pass &= collar.psi(0.0) == 0.0;
    Ok(o)
}

// ---------------------------------------------------------------------------
// dirichlet

const ANNULUS: (f64, f64) = (0.25, 0.625);

/// Annulus solve with bowl data at `Δρ = 1/k`: `(error, Δρ)`.
fn annulus_vs_bowl(k: usize, cfg: &SuiteConfig) -> Result<(f64, f64)> {
    let bowl = unit_bowl()?;
    let (ri, ro) = ANNULUS;
    let m = ((ro - ri) * k as f64).round() as usize + 1;
    let d = DomainSpec::new(Shape::Annulus { r_in: ri, r_out: ro }, m)?;
    let bc = BoundaryData::per_side(vec![bowl.height_at_radius(ri)?, bowl.height_at_radius(ro)?]);
    let mut opts = SolveOptions::new(1e-2 * cfg.tol);
    opts.exec = cfg.exec;
    let (u, _) = dirichlet::solve_with(&d, &bc, 2, &opts)?;
    let exact = d.axis(0).iter().map(|&r| bowl.height_at_radius(r)).collect::<Result<Vec<_>>>()?;
    Ok((max_abs_diff(&u.values, &exact), 1.0 / k as f64))
}

fn annulus_error(cfg: &SuiteConfig) -> Result<Outcome> {
    let (err, dr) = annulus_vs_bowl(64, cfg)?;
    Ok(below(err, 4.0 * dr * dr))
}

fn annulus_order(cfg: &SuiteConfig) -> Result<Outcome> {
    let (coarse, _) = annulus_vs_bowl(64, cfg)?;
    let (fine, _) = annulus_vs_bowl(128, cfg)?;
    Ok(at_most((coarse / fine - 4.0).abs(), 0.8))
}

fn radial_oracle(_: &SuiteConfig) -> Result<Outcome> {
    let bowl = unit_bowl()?;
    let (ri, ro) = ANNULUS;
    let d = DomainSpec::new(Shape::Annulus { r_in: ri, r_out: ro }, 25)?;
    let bc = BoundaryData::per_side(vec![bowl.height_at_radius(ri)?, bowl.height_at_radius(ro)?]);
    let rad = dirichlet::solve_radial(&d, &bc, 2, 1e-10)?;
    let exact = d.axis(0).iter().map(|&r| bowl.height_at_radius(r)).collect::<Result<Vec<_>>>()?;
    Ok(below(max_abs_diff(&rad.values, &exact), 1e-8))
}

fn ball_cap(cfg: &SuiteConfig) -> Result<Outcome> {
    let bowl = unit_bowl()?;
    let d = DomainSpec::new(Shape::Ball { radius: 0.5 }, 33)?;
    let mut opts = SolveOptions::new(1e-2 * cfg.tol);
    opts.exec = cfg.exec;
    let (u, _) = dirichlet::solve_with(&d, &BoundaryData::constant(bowl.height_at_radius(0.5)?), 2, &opts)?;
    let exact = d.axis(0).iter().map(|&r| bowl.height_at_radius(r)).collect::<Result<Vec<_>>>()?;
    let dr = d.spacing()[0];
    Ok(below(max_abs_diff(&u.values, &exact), 4.0 * dr * dr))
}

fn square(cfg: &SuiteConfig) -> Result<(DomainSpec, SolveOptions)> {
    let mut opts = SolveOptions::new(cfg.tol);
    opts.exec = cfg.exec;
    Ok((DomainSpec::new(Shape::Rectangle { wx: 1.0, wy: 1.0 }, 17)?, opts))
}

fn comparison(cfg: &SuiteConfig) -> Result<Outcome> {
    let (d, opts) = square(cfg)?;
    let lo = vec![0.6, 1.0, 0.8, 1.2];
    let hi: Vec<f64> = lo.iter().map(|v| v + 0.1).collect();
    let (u1, _) = dirichlet::solve_with(&d, &BoundaryData::per_side(lo), 2, &opts)?;
    let (u2, _) = dirichlet::solve_with(&d, &BoundaryData::per_side(hi), 2, &opts)?;
    let worst = u1.values.iter().zip(&u2.values).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    Ok(at_most(worst, 10.0 * cfg.tol))
}

fn uniqueness(cfg: &SuiteConfig) -> Result<Outcome> {
    let (d, mut opts) = square(cfg)?;
    let bc = BoundaryData::per_side(vec![0.6, 1.0, 0.8, 1.2]);
    opts.initial = InitialGuess::Constant(bc.min());
    let (a, rep) = dirichlet::solve_with(&d, &bc, 2, &opts)?;
    opts.initial = InitialGuess::Constant(rep.height_bounds.1);
    let (b, _) = dirichlet::solve_with(&d, &bc, 2, &opts)?;
    Ok(at_most(max_abs_diff(&a.values, &b.values), 10.0 * cfg.tol))
}

fn ball_solution(cfg: &SuiteConfig) -> Result<(GridFunction, BoundaryData)> {
    let bc = BoundaryData::constant(0.8);
    Ok((small_ball_solution(cfg)?, bc))
}

fn height_h(cfg: &SuiteConfig) -> Result<Outcome> {
    let (u, bc) = ball_solution(cfg)?;
    let r = dirichlet::verify_height_and_h(&u, &bc, 2, cfg.tol)?;
    Ok(Outcome { value: r.h_interior_max - r.h_boundary_max, threshold: cfg.tol, pass: r.pass })
}

fn h_bump(cfg: &SuiteConfig) -> Result<Outcome> {
    let (mut u, bc) = ball_solution(cfg)?;
    let m = u.values.len();
    u.values[m - 3] += 0.1;
    let r = dirichlet::verify_height_and_h(&u, &bc, 2, cfg.tol)?;
    Ok(Outcome { value: r.h_interior_max - r.h_boundary_max, threshold: cfg.tol, pass: !r.h_max_on_boundary })
}

fn annulus_h(cfg: &SuiteConfig) -> Result<Outcome> {
    let d = DomainSpec::new(Shape::Annulus { r_in: 0.5, r_out: 1.0 }, 33)?;
    let bc = BoundaryData::constant(0.8);
    let mut opts = SolveOptions::new(cfg.tol);
    opts.exec = cfg.exec;
    let (u, _) = dirichlet::solve_with(&d, &bc, 2, &opts)?;
    let r = dirichlet::verify_height_and_h(&u, &bc, 2, cfg.tol)?;
    let margin = (r.h_interior_min - r.h_boundary_min).min(r.h_boundary_max - r.h_interior_max);
    Ok(above(margin, 0.0))
}

fn slab_continuation(cfg: &SuiteConfig) -> Result<(DomainSpec, dirichlet::ContinuationResult)> {
    let d = DomainSpec::new(Shape::Slab { width: 1.0, length: 1.0 }, 17)?;
    Ok((d, dirichlet::continuation_to_zero_boundary(&d, 2, cfg.tol, 8)?))
}

fn continuation_monotone(cfg: &SuiteConfig) -> Result<Outcome> {
    let (_, c) = slab_continuation(cfg)?;
    Ok(at_most(c.max_increase, cfg.tol))
}

fn slab_grim(cfg: &SuiteConfig) -> Result<Outcome> {
    let (d, c) = slab_continuation(cfg)?;
    let grim = profiles::GrimReaper::new(profiles::grim_height_for_width(1.0, 2, 1e-12)?, 2)?;
    let mut err = 0.0f64;
    for i in d.interior_indices() {
        err = err.max((c.limit[i] - grim.height_at(d.coords(i)[0])?).abs());
    }
    let dx = d.spacing()[0];
    Ok(below(err, 5.0 * dx * dx))
}

fn ball_above_cap(cfg: &SuiteConfig) -> Result<Outcome> {
    let radius = 0.5;
    let d = DomainSpec::new(Shape::Ball { radius }, 33)?;
    let c = dirichlet::continuation_to_zero_boundary(&d, 2, cfg.tol, 6)?;
    let mut worst = f64::INFINITY;
    for u in &c.iterates {
        for (i, &r) in d.axis(0).iter().enumerate() {
            worst = worst.min(u.values[i] - (radius * radius - r * r).max(0.0).sqrt());
        }
    }
    Ok(Outcome { value: worst, threshold: 0.0, pass: worst >= 0.0 })
}

fn gradient_bound(cfg: &SuiteConfig) -> Result<Outcome> {
    let (u, bc) = ball_solution(cfg)?;
    let d = u.domain;
    let Shape::Ball { radius } = d.shape else { unreachable!() };
    let rho = 0.5 * radius;
    let b2 = u.max();
    let bounds = CollarConstants { c1: 1.0, c2: 0.0, c3: 1.0 / (radius - rho), c_phi: -operator::f_rhs(bc.min(), 2)? };
    let collar = barriers::collar_barrier_params_for(b2, &bounds, rho, bc.min())?;
    let m = u.values.len();
    let slope = (u.values[m - 2] - u.values[m - 1]).abs() / d.spacing()[0];
    Ok(at_most(slope, collar.normal_derivative_bound()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_all_is_large() {
        let names = check_names(Suite::All);
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert!(names.len() >= 20);
    }

    #[test]
    fn empty_report_passes() {
        let r = Report::new(vec![]);
        assert!(r.pass);
        assert_eq!(r.to_json_text(), "{\n  \"checks\": [],\n  \"pass\": true\n}\n");
    }

    #[test]
    fn one_failure_fails_the_report() {
        let c = |pass| Check { name: "x".into(), anchor: "y".into(), value: 0.0, threshold: 0.0, pass };
        assert!(!Report::new(vec![c(true), c(false)]).pass);
    }
}
