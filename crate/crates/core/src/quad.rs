//! Adaptive Gauss-Kronrod (G10/K21) quadrature with global panel bisection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

// Kronrod abscissae on [0,1); index 1,3,5,7,9 are the Gauss nodes.
const XK: [f64; 10] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_424,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
];
const WK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_460,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_958_109_831,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_panels: usize,
}

impl<T: Real> Default for QuadOptions<T> {
    fn default() -> Self {
        QuadOptions {
            abs_tol: T::tol(1e-12),
            rel_tol: T::tol(1e-10),
            max_panels: 4000,
        }
    }
}

impl<T: Real> QuadOptions<T> {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        QuadOptions {
            abs_tol: T::tol(abs_tol),
            rel_tol: T::tol(rel_tol),
            ..Self::default()
        }
    }
}

/// Value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
}

impl<T: Real> Estimate<T> {
    pub fn zero() -> Self {
        Estimate { value: T::zero(), error: T::zero() }
    }
    pub fn scale(self, k: T) -> Self {
        Estimate { value: self.value * k, error: self.error * k.abs() }
    }
}

impl<T: Real> std::ops::Add for Estimate<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Estimate { value: self.value + o.value, error: self.error + o.error }
    }
}

/// One K21 panel: (integral, error, |f| integral).
pub fn gk21<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let fc = f(c);
    let mut rk = fc * T::lit(WK[10]);
    let mut rg = T::zero();
    let mut rabs = rk.abs();
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let dx = h * T::lit(XK[j]);
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let wk = T::lit(WK[j]);
        rk += wk * (f1 + f2);
        rabs += wk * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            rg += T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = rk * half;
    let mut rasc = T::lit(WK[10]) * (fc - mean).abs();
    for j in 0..10 {
        rasc += T::lit(WK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let hab = h.abs();
    let result = rk * h;
    rabs = rabs * hab;
    rasc = rasc * hab;
    let mut err = ((rk - rg) * h).abs();
    if rasc != T::zero() && err != T::zero() {
        let ratio = (T::lit(200.0) * err / rasc).powf(T::lit(1.5));
        err = rasc * if ratio < T::one() { ratio } else { T::one() };
    }
    let floor = T::epsilon() * T::lit(50.0) * rabs;
    if rabs > T::min_positive_value() / (T::epsilon() * T::lit(50.0)) && err < floor {
        err = floor;
    }
    (result, err)
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.partial_cmp(&o.error).unwrap_or(Ordering::Equal)
    }
}

/// Integrate over the consecutive panels delimited by `points` (sorted).
pub fn integrate_points<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    points: &[T],
    opts: &QuadOptions<T>,
) -> Result<Estimate<T>> {
    let mut heap = BinaryHeap::new();
    let mut frozen = Estimate::zero();
    let mut total = T::zero();
    let mut total_err = T::zero();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let (v, e) = gk21(&mut f, a, b);
        total += v;
        total_err += e;
        heap.push(Panel { a, b, value: v, error: e });
    }
    if !total.is_finite() {
        return Err(Error::Integration("non-finite integrand".into()));
    }
    let mut panels = heap.len();
    loop {
        let tol = {
            let r = opts.rel_tol * total.abs();
            if r > opts.abs_tol {
                r
            } else {
                opts.abs_tol
            }
        };
        if total_err <= tol {
            break;
        }
        let Some(p) = heap.pop() else { break };
        let mid = T::lit(0.5) * (p.a + p.b);
        // Too narrow to split further: accept as roundoff-limited.
        let scale = p.a.abs().max(p.b.abs()).max(T::min_positive_value());
        if !(mid > p.a && mid < p.b) || (p.b - p.a) < T::epsilon() * T::lit(16.0) * scale {
            frozen = frozen + Estimate { value: p.value, error: p.error };
            continue;
        }
        if panels >= opts.max_panels {
            heap.push(p);
            return Err(Error::Integration(format!(
                "no convergence after {} panels (estimate {:e}, error {:e})",
                panels,
                total.to_f64_(),
                total_err.to_f64_()
            )));
        }
        let (v1, e1) = gk21(&mut f, p.a, mid);
        let (v2, e2) = gk21(&mut f, mid, p.b);
        total = total - p.value + v1 + v2;
        total_err = total_err - p.error + e1 + e2;
        if !total.is_finite() {
            return Err(Error::Integration("non-finite integrand".into()));
        }
        heap.push(Panel { a: p.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: p.b, value: v2, error: e2 });
        panels += 1;
    }
    // Recompute from the panels to shed accumulated update rounding.
    let mut value = frozen.value;
    let mut error = frozen.error;
    let mut rest: Vec<Panel<T>> = heap.into_vec();
    rest.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(Ordering::Equal));
    for p in rest {
        value += p.value;
        error += p.error;
    }
    Ok(Estimate { value, error })
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    f: F,
    a: T,
    b: T,
    opts: &QuadOptions<T>,
) -> Result<Estimate<T>> {
    if b < a {
        return integrate(f, b, a, opts).map(|e| e.scale(-T::one()));
    }
    integrate_points(f, &[a, b], opts)
}

/// Integrate over `[a, b]` with interior breakpoints (unsorted, out-of-range ignored).
pub fn integrate_breaks<T: Real, F: FnMut(T) -> T>(
    f: F,
    a: T,
    b: T,
    breaks: &[T],
    opts: &QuadOptions<T>,
) -> Result<Estimate<T>> {
    let mut pts = Vec::with_capacity(breaks.len() + 2);
    pts.push(a);
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    pts.dedup();
    integrate_points(f, &pts, opts)
}

/// Integrate over `[a, inf)` using `x = a + t/(1-t)`.
pub fn integrate_to_inf<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    opts: &QuadOptions<T>,
) -> Result<Estimate<T>> {
    let one = T::one();
    let g = |t: T| {
        let u = one - t;
        let x = a + t / u;
        let v = f(x) / (u * u);
        // Overflow far out in the tail of a decaying integrand.
        if !v.is_finite() && t > T::lit(0.999) {
            T::zero()
        } else {
            v
        }
    };
    let pts = [T::zero(), T::lit(0.5), T::lit(0.75), T::lit(0.875), one];
    integrate_points(g, &pts, opts)
}

/// Composite fixed-order rule, for smooth integrands where adaptivity is wasteful.
pub fn fixed_gk<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, panels: usize) -> T {
    let n = panels.max(1);
    let h = (b - a) / T::from_usize_(n);
    let mut s = T::zero();
    for i in 0..n {
        let lo = a + h * T::from_usize_(i);
        let hi = if i + 1 == n { b } else { lo + h };
        s += gk21(&mut f, lo, hi).0;
    }
    s
}
