//! Globally adaptive Gauss-Kronrod (10/21) quadrature.
//!
//! Every routine returns the estimate together with its error bound, and a
//! [`Error::Quadrature`] carrying the achieved tolerance when the requested
//! one is not met.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
    0.123_491_976_262_065_851_077_600_010_212_420,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Stopping rule for the adaptive driver: stop once the summed error bound is
/// at most `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            max_intervals: 2000,
        }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n.max(1);
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
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
        self.err.total_cmp(&other.err)
    }
}

/// One 21-point Kronrod rule on [a, b] with the QUADPACK error heuristic.
fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_g = 0.0;
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
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
    let hh = h.abs();
    let value = res_k * h;
    res_abs *= hh;
    res_asc *= hh;
    let mut err = ((res_k - res_g) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() || !err.is_finite() {
        err = f64::INFINITY;
    }
    Segment { a, b, value, err }
}

fn too_narrow(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    (b - a).abs() <= 1e3 * f64::EPSILON * scale
}

/// Adaptive integration over consecutive pieces `[edges[i], edges[i+1]]`.
/// Returns the estimate and whether the tolerance was met.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    edges: &[f64],
    tol: Tolerance,
) -> (Estimate, bool) {
    let mut heap = BinaryHeap::new();
    let mut frozen_value = 0.0;
    let mut frozen_err = 0.0;
    let mut evals = 0usize;
    for w in edges.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        heap.push(kronrod21(&mut f, w[0], w[1]));
        evals += 21;
    }
    let mut intervals = heap.len();
    let exact_sums = |heap: &BinaryHeap<Segment>, fv: f64, fe: f64| {
        heap.iter().fold((fv, fe), |(v, e), s| (v + s.value, e + s.err))
    };
    let (mut value, mut err) = exact_sums(&heap, 0.0, 0.0);
    loop {
        if !value.is_finite() {
            let est = Estimate {
                value,
                abs_err: f64::INFINITY,
                evals,
            };
            return (est, false);
        }
        let mut done = err <= tol.target(value);
        if done || heap.is_empty() || intervals >= tol.max_intervals {
            // running sums drift; confirm with a fresh summation
            (value, err) = exact_sums(&heap, frozen_value, frozen_err);
            done = err <= tol.target(value);
            if done || heap.is_empty() || intervals >= tol.max_intervals {
                let est = Estimate {
                    value,
                    abs_err: err,
                    evals,
                };
                return (est, done);
            }
        }
        let worst = heap.pop().expect("heap is non-empty");
        if too_narrow(worst.a, worst.b) {
            frozen_value += worst.value;
            frozen_err += worst.err;
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod21(&mut f, worst.a, mid);
        let right = kronrod21(&mut f, mid, worst.b);
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        if !err.is_finite() || !worst.err.is_finite() {
            (value, err) = exact_sums(&heap, frozen_value, frozen_err);
            value += left.value + right.value;
            err += left.err + right.err;
        }
        heap.push(left);
        heap.push(right);
        evals += 42;
        intervals += 1;
    }
}

fn finish(est: Estimate, ok: bool, tol: Tolerance, context: impl FnOnce() -> String) -> Result<Estimate> {
    if ok {
        Ok(est)
    } else {
        Err(Error::Quadrature {
            context: context(),
            value: est.value,
            abs_err: est.abs_err,
            requested: tol.target(est.value),
        })
    }
}

/// Integral over [a, b].
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    let (est, ok) = integrate_pieces(f, &[a, b], tol);
    finish(est, ok, tol, || format!("on [{a:e}, {b:e}]"))
}

/// Integral over [a, b] split at the breakpoints lying strictly inside.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    let edges = edges_with_breaks(a, b, breaks);
    let (est, ok) = integrate_pieces(f, &edges, tol);
    finish(est, ok, tol, || format!("on [{a:e}, {b:e}] with {} breaks", edges.len() - 2))
}

/// Sorted, deduplicated edges `a < c_1 < ... < b` from the breaks inside (a, b).
pub fn edges_with_breaks(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut edges = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(b);
    edges
}

/// Integral over [a, ∞) through x = a + scale·v/(1−v).
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    let g = |v: f64| {
        let w = 1.0 - v;
        let x = a + scale * v / w;
        let fx = f(x);
        if fx == 0.0 {
            0.0
        } else {
            fx * scale / (w * w)
        }
    };
    let (est, ok) = integrate_pieces(g, &[0.0, 0.5, 1.0], tol);
    finish(est, ok, tol, || format!("on [{a:e}, inf)"))
}

/// Integral over (−∞, b] through x = b − scale·v/(1−v).
pub fn integrate_from_minus_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    b: f64,
    scale: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    integrate_to_infinity(|y| f(2.0 * b - y), b, scale, tol)
        .map_err(|e| e.within(format!("reflected tail ending at {b:e}")))
}

/// Integral over the whole real line, split at `centre`.
pub fn integrate_real_line<F: FnMut(f64) -> f64>(
    mut f: F,
    centre: f64,
    scale: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    let half = Tolerance {
        abs: 0.5 * tol.abs,
        ..tol
    };
    let left = integrate_from_minus_infinity(&mut f, centre, scale, half)?;
    let right = integrate_to_infinity(&mut f, centre, scale, half)?;
    Ok(Estimate {
        value: left.value + right.value,
        abs_err: left.abs_err + right.abs_err,
        evals: left.evals + right.evals,
    })
}
