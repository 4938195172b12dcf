//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so the summary is always printed; exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use horo_core::barriers::{self, CollarConstants};
use horo_core::dirichlet::{self, BoundaryData, InitialGuess, SolveOptions};
use horo_core::geometry::{self, GeodesicState, Plane, SolitonParams};
use horo_core::grid::{DomainSpec, GridFunction, Shape};
use horo_core::operator;
use horo_core::profiles::{self, ShootingConfig};
use horo_core::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn grim_consistency() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for n in [2, 3] {
        for h in [0.5, 1.0, 2.0] {
            worst = worst.max(profiles::grim_residual(h, n, 100)?);
        }
    }
    let mut apex_ok = true;
    let mut slope = 0.0f64;
    for n in [2, 3] {
        for h in [0.5, 1.0, 2.0] {
            apex_ok &= profiles::grim_phi(h, h, n)? == 0.0;
            for k in 1..=100 {
                let z = h / 50.0 * k as f64 / 101.0;
                slope = slope.max(profiles::grim_phi_prime(z, h, n)?.abs());
            }
        }
    }
    outcome(
        worst < 1e-8 && apex_ok && slope < 1e-6,
        format!("residual {worst:.2e} < 1e-8, phi(h) = 0: {apex_ok}, max |phi'| below h/50 {slope:.2e} < 1e-6"),
    )
}

fn foliation() -> Result<Outcome> {
    let widths =
        (0..20).map(|i| profiles::grim_width(0.1 * 50f64.powf(i as f64 / 19.0), 2)).collect::<Result<Vec<_>>>()?;
    let heights = [0.25, 0.5, 1.0, 2.0, 4.0];
    let r2 = heights.iter().map(|&h| profiles::r2_of_h(h, 2)).collect::<Result<Vec<_>>>()?;
    let bowls =
        heights.iter().map(|&h| profiles::bowl_shoot(h, 2, &ShootingConfig::default())).collect::<Result<Vec<_>>>()?;
    let mut gap = f64::INFINITY;
    for i in 0..bowls.len() {
        for j in i + 1..bowls.len() {
            gap = gap.min(profiles::bowl_gap(&bowls[i], &bowls[j], 200)?);
        }
    }
    let (w_ok, r_ok) = (strictly_increasing(&widths), strictly_increasing(&r2));
    outcome(
        w_ok && r_ok && gap > 0.0,
        format!("width increasing: {w_ok}, r2 increasing: {r_ok}, min bowl gap {gap:.3e}"),
    )
}

fn bowl_shape() -> Result<Outcome> {
    let bowl = profiles::bowl_shoot(1.0, 2, &ShootingConfig::default())?;
    let turning = bowl.min_turning_rate();
    let tip = bowl.tip_second_derivative(0.05)?;
    let end = (bowl.terminal_angle() - PI).abs();
    outcome(
        turning > 0.0 && (tip + 1.5).abs() < 1e-6 && end < 1e-3,
        format!("min turning rate {turning:.3e} > 0, tip u'' {tip:.9}, terminal angle off vertical {end:.2e}"),
    )
}

/// Sign changes of the graph second derivative `d²ρ/dz²` along a branch,
/// away from the tip and the boundary.
fn inflections(curve: &profiles::ProfileCurve) -> Result<usize> {
    let mut signs = Vec::new();
    for p in &curve.samples {
        if p.z < 0.05 * curve.h || p.z > 0.95 * curve.h {
            continue;
        }
        let d = profiles::arclength_rhs([p.z, p.rho, p.alpha], curve.n, true)?;
        let phi_zz = d[2] / p.alpha.cos().powi(3);
        if phi_zz != 0.0 {
            signs.push(phi_zz > 0.0);
        }
    }
    Ok(signs.windows(2).filter(|w| w[0] != w[1]).count())
}

fn wing() -> Result<Outcome> {
    let (upper, lower) = profiles::wing_shoot(0.5, 1.0, 2, &ShootingConfig::default().with_z_floor(1e-3))?;
    let gap = profiles::wing_branch_gap(&upper, &lower, 200)?;
    let (q1, q2) = upper.marks.endpoints.expect("wing endpoints");
    let changes = inflections(&lower)?;
    let lambda_ok = lower.marks.lambda0.is_some_and(|l| l > 0.0 && l < 1.0);
    let cu = profiles::cubic_asymptote_check(&upper)?.relative_error;
    let cl = profiles::cubic_asymptote_check(&lower)?.relative_error;
    outcome(
        gap > 0.0 && (q1 - q2).abs() > 1e-3 && changes == 1 && lambda_ok && cu < 0.05 && cl < 0.05,
        format!(
            "branch gap {gap:.3e}, |q1 - q2| {:.3e}, inflections {changes}, cubic errors {cu:.2e} / {cl:.2e}",
            (q1 - q2).abs()
        ),
    )
}

fn operator_consistency() -> Result<Outcome> {
    let radius = 1.0;
    let mut cap = 0.0f64;
    let d = DomainSpec::new(Shape::Rectangle { wx: 2.0, wy: 2.0 }, 41)?;
    for i in 0..d.len() {
        let x = d.coords(i);
        if x[0].hypot(x[1]) > 0.95 * radius {
            continue;
        }
        let s = barriers::spherical_cap_sample(&[0.0, 0.0], radius, &x)?;
        cap = cap.max((operator::q_pointwise(&s, 2) * s.u * radius - 1.0).abs());
    }
    let bowl = profiles::bowl_shoot(1.0, 2, &ShootingConfig::default())?;
    let res = |m: usize| -> Result<f64> {
        let d = DomainSpec::new(Shape::Ball { radius: 0.5 }, m)?;
        let u = GridFunction::from_fn(d, |x| bowl.height_at_radius(x[0]).unwrap_or(f64::NAN))?;
        Ok(operator::q_residual(&u, 2)?.max_abs)
    };
    let ratio = res(33)? / res(65)?;
    outcome(
        cap < 1e-6 && (3.2..=4.8).contains(&ratio),
        format!("cap relative error {cap:.2e}, discrete residual ratio {ratio:.3}"),
    )
}

fn curvature_and_geodesics() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let x0 = 10f64.powf(rng.random_range(-2.0..2.0));
        let p = SolitonParams::hypersurface(rng.random_range(2..=6))?;
        let theta = rng.random_range(1e-9..2.0 * PI - 1e-9);
        worst = worst
            .max(geometry::sectional_curvature_axis(x0, &p, Plane::VerticalPair)?)
            .max(geometry::sectional_curvature_axis(x0, &p, Plane::HorizontalPair)?)
            .max(geometry::sectional_curvature_mixed(x0, &p, theta)?);
    }
    let tol = 1e-8;
    let p = SolitonParams::new(2, 2)?;
    let mut geo_ok = true;
    let mut sym = 0.0f64;
    for angle in [0.1, 0.3, 0.7] {
        let c = geometry::integrate_geodesic(GeodesicState::from_angle(1.0, 0.0, angle)?, &p, (-25.0, 25.0), tol)?
            .checks()?;
        sym = sym.max(c.symmetry_error);
        geo_ok &= c.symmetry_error <= 10.0 * tol
            && c.concavity_violation <= 10.0 * tol
            && c.end_slopes.0.max(c.end_slopes.1) <= 10.0 * tol
            && c.slopes_monotone;
    }
    outcome(
        worst <= 0.0 && geo_ok,
        format!("max sectional curvature {worst:.3e}, geodesic checks {geo_ok} (symmetry {sym:.2e})"),
    )
}

fn annulus_solve() -> Result<Outcome> {
    let tol = 1e-10;
    let bowl = profiles::bowl_shoot(1.0, 2, &ShootingConfig::default())?;
    let (ri, ro) = (0.25, 0.625);
    let bc = BoundaryData::per_side(vec![bowl.height_at_radius(ri)?, bowl.height_at_radius(ro)?]);
    let mut errs = Vec::new();
    let mut ok = true;
    for k in [64usize, 128] {
        let dr = 1.0 / k as f64;
        let m = ((ro - ri) * k as f64).round() as usize + 1;
        let d = DomainSpec::new(Shape::Annulus { r_in: ri, r_out: ro }, m)?;
        let (u, _) = dirichlet::solve(&d, &bc, 2, tol)?;
        let shot = dirichlet::solve_radial(&d, &bc, 2, 1e-12)?;
        let err = max_abs_diff(&u.values, &shot.values);
        ok &= err < 4.0 * dr * dr;
        errs.push(err);
    }
    let sq = DomainSpec::new(Shape::Rectangle { wx: 1.0, wy: 1.0 }, 17)?;
    let lo = vec![0.6, 1.0, 0.8, 1.2];
    let hi: Vec<f64> = lo.iter().map(|v| v + 0.1).collect();
    let (u1, rep) = dirichlet::solve(&sq, &BoundaryData::per_side(lo.clone()), 2, tol)?;
    let (u2, _) = dirichlet::solve(&sq, &BoundaryData::per_side(hi), 2, tol)?;
    let comparison = u1.values.iter().zip(&u2.values).all(|(a, b)| *a <= b + 10.0 * tol);
    let mut opts = SolveOptions::new(tol);
    opts.initial = InitialGuess::Constant(rep.height_bounds.0);
    let (a, _) = dirichlet::solve_with(&sq, &BoundaryData::per_side(lo.clone()), 2, &opts)?;
    opts.initial = InitialGuess::Constant(rep.height_bounds.1);
    let (b, _) = dirichlet::solve_with(&sq, &BoundaryData::per_side(lo), 2, &opts)?;
    let unique = max_abs_diff(&a.values, &b.values);
    outcome(
        ok && comparison && unique <= 10.0 * tol,
        format!(
            "errors {:.3e} (1/64), {:.3e} (1/128), comparison {comparison}, initialization spread {unique:.2e}",
            errs[0], errs[1]
        ),
    )
}

fn slab_continuation() -> Result<Outcome> {
    let width = 1.0;
    let d = DomainSpec::new(Shape::Slab { width, length: 1.0 }, 33)?;
    let c = dirichlet::continuation_to_zero_boundary(&d, 2, 1e-10, 8)?;
    let grim = profiles::GrimReaper::new(profiles::grim_height_for_width(width, 2, 1e-13)?, 2)?;
    let mut err = 0.0f64;
    for i in d.interior_indices() {
        err = err.max((c.limit[i] - grim.height_at(d.coords(i)[0])?).abs());
    }
    let dx = d.spacing()[0];
    let mut monotone = true;
    for w in c.iterates.windows(2) {
        monotone &= w[1].values.iter().zip(&w[0].values).all(|(next, prev)| *next <= prev + 1e-10);
    }
    outcome(
        monotone && c.monotone && err < 5.0 * dx * dx,
        format!("monotone {monotone}, limit error {err:.3e} < {:.3e}", 5.0 * dx * dx),
    )
}

fn barrier_formulas() -> Result<Outcome> {
    let inverse = (0..100)
        .map(|i| {
            let s = 10f64.powf(-4.0 + 8.0 * i as f64 / 99.0);
            (barriers::F_inverse(barriers::F_diffeo(s)) / s - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let omegas =
        [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&a| barriers::omega_tilde(a, a, 1.0, 2)).collect::<Result<Vec<_>>>()?;
    let vanishing = omegas.windows(2).all(|w| w[1] < w[0]) && omegas[3] < 0.05;
    let bound = barriers::nonexistence_bound(0.0, 1.0, 2, 1.0)?;
    let (phi_hat, b2, n, radius, rho) = (1.0, 2.0, 2, 1.0, 0.5);
    let consts = CollarConstants { c1: 1.0, c2: 0.0, c3: 1.0 / (radius - rho), c_phi: -operator::f_rhs(phi_hat, n)? };
    let collar = barriers::collar_barrier_params_for(b2, &consts, rho, phi_hat)?;
    let q = barriers::collar_max_q(&collar, n, 2, Some(radius), 400)?;
    outcome(
        inverse < 1e-12 && vanishing && bound == 25.0 && collar.psi(0.0) == 0.0 && q < 0.0,
        format!(
            "inverse error {inverse:.2e}, omega(a) {:.3e} -> {:.3e}, bound {bound}, collar max Q {q:.3e}",
            omegas[0], omegas[3]
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Result<Outcome>, u64);
    let criteria: [Criterion; 9] = [
        ("grim reaper consistency", grim_consistency, 5),
        ("foliation monotonicity", foliation, 30),
        ("bowl shape", bowl_shape, 5),
        ("wing structure", wing, 10),
        ("operator consistency", operator_consistency, 10),
        ("curvature sign and geodesics", curvature_and_geodesics, 10),
        ("dirichlet solver vs radial oracle", annulus_solve, 60),
        ("degenerate-data continuation", slab_continuation, 120),
        ("barrier formulas", barrier_formulas, 5),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(*budget);
        let (pass, detail) = match result {
            Ok(o) => (o.pass && in_time, o.detail),
            Err(e) => (false, format!("error {}: {e}", e.name())),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} {:<36} {}  [{:.2} s / {} s]  {}",
            k + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget,
            detail
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
