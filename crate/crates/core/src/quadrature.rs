//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature.
//!
//! Integrands with an inverse square-root singularity at one endpoint are
//! handled by [`integrate_sqrt_endpoint`], which substitutes
//! `t = endpoint ± σ²` so the transformed integrand is analytic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{HoroError, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_478_326,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances and work limit for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadOptions { abs_tol: tol, rel_tol: tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    roundoff: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(roundoff);
    }
    if !value.is_finite() {
        error = f64::INFINITY;
    }
    Segment { a, b, value, error, roundoff }
}

/// Single 21-point Kronrod rule over `[a, b]`, for smooth integrands on
/// short panels.
pub(crate) fn kronrod21_value<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    kronrod21(&mut f, a, b).value
}

/// Integrates `f` over `[a, b]` (either orientation).
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let first = kronrod21(&mut f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    let mut total = first.value;
    let mut total_err = first.error;
    heap.push(first);
    let mut intervals = 1;
    // Segments whose error is already at the roundoff floor cannot improve.
    let mut frozen_value = 0.0;
    let mut frozen_err = 0.0;
    let mut frozen_floor = 0.0;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let width = (worst.b - worst.a).abs();
        let mid = 0.5 * (worst.a + worst.b);
        let unsplittable = width <= 1e3 * f64::EPSILON * worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE)
            || mid == worst.a
            || mid == worst.b;
        if worst.error <= worst.roundoff || unsplittable {
            frozen_value += worst.value;
            frozen_err += worst.error;
            frozen_floor += worst.roundoff;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        if intervals >= opts.max_intervals {
            heap.push(worst);
            break;
        }
        let left = kronrod21(&mut f, worst.a, mid);
        let right = kronrod21(&mut f, mid, worst.b);
        evaluations += 42;
        intervals += 1;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Re-sum occasionally to avoid drift in the running totals.
        if intervals % 64 == 0 {
            total = frozen_value + heap.iter().map(|s| s.value).sum::<f64>();
            total_err = frozen_err + heap.iter().map(|s| s.error).sum::<f64>();
        }
    }
    let value = frozen_value + heap.iter().map(|s| s.value).sum::<f64>();
    let live_err: f64 = heap.iter().map(|s| s.error).sum();
    let live_floor: f64 = heap.iter().map(|s| s.roundoff).sum();
    let error = frozen_err + live_err;
    let tol = opts.abs_tol.max(opts.rel_tol * value.abs());
    let floor = live_floor + frozen_floor;
    if !value.is_finite() || (error > tol && error > 10.0 * floor) {
        return Err(HoroError::QuadratureFailure { estimate: error, requested: tol });
    }
    Ok(QuadResult { value, error, evaluations })
}

/// Which endpoint carries the `(t - endpoint)^{-1/2}` singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Lower,
    Upper,
}

/// Integrates `f` over `[a, b]`, `a < b`, after the substitution
/// `t = a + σ²` (lower) or `t = b − σ²` (upper).
pub fn integrate_sqrt_endpoint<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    at: Endpoint,
    opts: QuadOptions,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    if a > b {
        let r = integrate_sqrt_endpoint(f, b, a, flip(at), opts)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    let smax = (b - a).sqrt();
    match at {
        Endpoint::Lower => integrate(|s| 2.0 * s * f(a + s * s), 0.0, smax, opts),
        Endpoint::Upper => integrate(|s| 2.0 * s * f(b - s * s), 0.0, smax, opts),
    }
}

fn flip(e: Endpoint) -> Endpoint {
    match e {
        Endpoint::Lower => Endpoint::Upper,
        Endpoint::Upper => Endpoint::Lower,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_weights_sum_to_two() {
        let k: f64 = WGK[10] + 2.0 * WGK[..10].iter().sum::<f64>();
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-14);
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomials_are_exact() {
        for p in 0..=30 {
            let r = integrate(|x| x.powi(p), 0.0, 1.0, QuadOptions::default()).unwrap();
            let exact = 1.0 / (p as f64 + 1.0);
            assert!((r.value - exact).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn oscillatory_and_peaked() {
        let r = integrate(|x| (30.0 * x).sin(), 0.0, 3.0, QuadOptions::default()).unwrap();
        let exact = (1.0 - (90.0f64).cos()) / 30.0;
        assert!((r.value - exact).abs() < 1e-12);
        let r = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, QuadOptions::default()).unwrap();
        let exact = 2.0 * (1.0 / 1e-2f64).atan() / 1e-2;
        assert!((r.value - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let a = integrate(f64::exp, 0.0, 1.0, QuadOptions::default()).unwrap().value;
        let b = integrate(f64::exp, 1.0, 0.0, QuadOptions::default()).unwrap().value;
        assert!((a + b).abs() < 1e-15);
    }

    #[test]
    fn sqrt_singularities() {
        let r = integrate_sqrt_endpoint(|t| 1.0 / t.sqrt(), 0.0, 4.0, Endpoint::Lower, QuadOptions::default()).unwrap();
        assert!((r.value - 4.0).abs() < 1e-13);
        let r = integrate_sqrt_endpoint(|t| 1.0 / (1.0 - t).sqrt(), 0.0, 1.0, Endpoint::Upper, QuadOptions::default())
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
        // arcsine density integrates to pi
        let r = integrate_sqrt_endpoint(
            |t| 1.0 / (t * (1.0 - t)).sqrt(),
            0.0,
            0.5,
            Endpoint::Lower,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn nonintegrable_reports_failure() {
        let opts = QuadOptions { max_intervals: 50, ..Default::default() };
        let r = integrate(|x| 1.0 / x, 0.0, 1.0, opts);
        assert!(matches!(r, Err(HoroError::QuadratureFailure { .. })));
    }
}
