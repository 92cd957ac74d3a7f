//! Radial functions on `H^d`: tabulated profiles, the spherical function `Q_d`,
//! the `d = 3` spherical transform pair and radial convolution.

use std::cell::RefCell;
use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::geometry::{acosh1p, check_dim, radial_integral, sin_power_integral, sphere_measure};
use crate::quad::{integrate, integrate_breaks, integrate_points, QuadOptions};
use crate::real::{lit, Real};

/// A radial profile `r -> f(r)`.
pub trait Radial<T: Real>: Sync {
    fn eval(&self, r: T) -> T;
    /// The function vanishes beyond this radius (may be infinite).
    fn support(&self) -> T;
    /// Radii where the function or a low derivative is not smooth.
    fn breaks(&self) -> Vec<T> {
        Vec::new()
    }
}

impl<T: Real, R: Radial<T> + ?Sized> Radial<T> for &R {
    fn eval(&self, r: T) -> T {
        (**self).eval(r)
    }
    fn support(&self) -> T {
        (**self).support()
    }
    fn breaks(&self) -> Vec<T> {
        (**self).breaks()
    }
}

/// A radial function cut to zero beyond `range`.
pub struct Cut<T, R> {
    pub inner: R,
    pub range: T,
}

impl<T: Real, R: Radial<T>> Radial<T> for Cut<T, R> {
    fn eval(&self, r: T) -> T {
        if r > self.range {
            T::zero()
        } else {
            self.inner.eval(r)
        }
    }
    fn support(&self) -> T {
        self.range.min(self.inner.support())
    }
    fn breaks(&self) -> Vec<T> {
        self.inner.breaks().into_iter().filter(|&b| b < self.range).collect()
    }
}

/// Closure-backed radial function.
pub struct FnRadial<T, F> {
    pub f: F,
    pub support: T,
    pub breaks: Vec<T>,
}

impl<T: Real, F: Fn(T) -> T + Sync> Radial<T> for FnRadial<T, F> {
    fn eval(&self, r: T) -> T {
        if r > self.support {
            T::zero()
        } else {
            (self.f)(r)
        }
    }
    fn support(&self) -> T {
        self.support
    }
    fn breaks(&self) -> Vec<T> {
        self.breaks.clone()
    }
}

/// Pointwise product of radial functions.
pub struct Product<'a, T>(pub Vec<&'a dyn Radial<T>>);

impl<T: Real> Radial<T> for Product<'_, T> {
    fn eval(&self, r: T) -> T {
        let mut p = T::one();
        for f in &self.0 {
            p *= f.eval(r);
            if p == T::zero() {
                break;
            }
        }
        p
    }
    fn support(&self) -> T {
        self.0.iter().map(|f| f.support()).fold(T::infinity(), T::min)
    }
    fn breaks(&self) -> Vec<T> {
        let mut b: Vec<T> = self.0.iter().flat_map(|f| f.breaks()).collect();
        sort_dedup(&mut b);
        b
    }
}

fn sort_dedup<T: Real>(v: &mut Vec<T>) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * lit(8.0) * a.abs().max(T::one()));
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Tail<T> {
    /// Zero beyond the last node.
    #[default]
    Zero,
    /// `f(r_n) exp(-rate (r - r_n))` beyond the last node.
    Exponential { rate: T },
}

/// A tabulated radial profile with local cubic interpolation that never
/// reaches across a declared break.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RadialRepr<T>", into = "RadialRepr<T>", bound = "T: Real")]
pub struct RadialFunction<T> {
    pub d: usize,
    grid: Vec<T>,
    values: Vec<T>,
    breaks: Vec<T>,
    tail: Tail<T>,
    /// Right limits `(break, value)` where the profile jumps.
    jumps: Vec<(T, T)>,
    seg: Vec<usize>,
    right: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadialRepr<T> {
    d: usize,
    grid: Vec<T>,
    values: Vec<T>,
    #[serde(default)]
    breaks: Vec<T>,
    #[serde(default)]
    tail: Tail<T>,
    #[serde(default)]
    jumps: Vec<(T, T)>,
}

impl<T: Real> TryFrom<RadialRepr<T>> for RadialFunction<T> {
    type Error = Error;
    fn try_from(r: RadialRepr<T>) -> Result<Self> {
        Ok(RadialFunction::with_breaks(r.d, r.grid, r.values, r.breaks)?.with_tail(r.tail).with_jumps(r.jumps))
    }
}

impl<T: Real> From<RadialFunction<T>> for RadialRepr<T> {
    fn from(f: RadialFunction<T>) -> Self {
        RadialRepr { d: f.d, grid: f.grid, values: f.values, breaks: f.breaks, tail: f.tail, jumps: f.jumps }
    }
}

impl<T: Real> RadialFunction<T> {
    pub fn new(d: usize, grid: Vec<T>, values: Vec<T>) -> Result<Self> {
        Self::with_breaks(d, grid, values, Vec::new())
    }

    /// Breaks must coincide with grid nodes (the nearest node is used).
    pub fn with_breaks(d: usize, grid: Vec<T>, values: Vec<T>, breaks: Vec<T>) -> Result<Self> {
        check_dim(d)?;
        if grid.len() < 2 || grid.len() != values.len() {
            return argument("grid and values must have equal length >= 2");
        }
        if grid[0] != T::zero() {
            return argument("grid must start at 0");
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return argument("grid must be strictly increasing");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return argument("values must be finite");
        }
        let mut f = RadialFunction {
            d,
            grid,
            values,
            breaks,
            tail: Tail::Zero,
            jumps: Vec::new(),
            seg: Vec::new(),
            right: Vec::new(),
        };
        f.index_breaks();
        Ok(f)
    }

    fn index_breaks(&mut self) {
        let last = *self.grid.last().unwrap();
        self.breaks.retain(|&b| b > T::zero() && b < last);
        sort_dedup(&mut self.breaks);
        let mut seg = vec![0usize];
        for &b in &self.breaks {
            let i = nearest(&self.grid, b);
            if i > *seg.last().unwrap() && i < self.grid.len() - 1 {
                seg.push(i);
            }
        }
        seg.push(self.grid.len() - 1);
        self.right = seg
            .iter()
            .map(|&i| {
                let x = self.grid[i];
                self.jumps
                    .iter()
                    .find(|(b, _)| (*b - x).abs() <= T::epsilon() * lit(64.0) * x.max(T::one()))
                    .map_or(self.values[i], |j| j.1)
            })
            .collect();
        self.seg = seg;
    }

    /// Right-limit values at breaks where the profile is discontinuous.
    pub fn with_jumps(mut self, jumps: Vec<(T, T)>) -> Self {
        self.jumps = jumps;
        self.index_breaks();
        self
    }

    pub fn with_tail(mut self, tail: Tail<T>) -> Self {
        self.tail = tail;
        self
    }

    /// Tail fitted to the log-slope of the last two nodes.
    pub fn with_exponential_tail(self) -> Self {
        let n = self.grid.len();
        let (y0, y1) = (self.values[n - 2], self.values[n - 1]);
        if y0 > T::zero() && y1 > T::zero() && y1 < y0 {
            let rate = (y0 / y1).ln() / (self.grid[n - 1] - self.grid[n - 2]);
            self.with_tail(Tail::Exponential { rate })
        } else {
            self
        }
    }

    /// Tabulate `f` on a graded grid over `[0, range]`.
    pub fn sample<R: Radial<T> + ?Sized>(f: &R, d: usize, range: T, nodes: usize) -> Result<Self> {
        if !(range > T::zero()) || !range.is_finite() {
            return argument("sampling range must be positive and finite");
        }
        let breaks: Vec<T> = f.breaks().into_iter().filter(|&b| b > T::zero() && b < range).collect();
        let grid = graded_grid(range, &breaks, nodes);
        let nudge = |b: T| b * T::epsilon() * lit(4.0);
        let values = grid
            .iter()
            .map(|&r| if breaks.contains(&r) { f.eval(r - nudge(r)) } else { f.eval(r) })
            .collect();
        let jumps = breaks.iter().map(|&b| (b, f.eval(b + nudge(b)))).collect();
        Ok(Self::with_breaks(d, grid, values, breaks)?.with_jumps(jumps))
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn tail(&self) -> Tail<T> {
        self.tail
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

fn nearest<T: Real>(grid: &[T], x: T) -> usize {
    let i = grid.partition_point(|&g| g < x);
    if i == 0 {
        0
    } else if i >= grid.len() {
        grid.len() - 1
    } else if (grid[i] - x).abs() < (x - grid[i - 1]).abs() {
        i
    } else {
        i - 1
    }
}

/// Four-point Lagrange interpolation restricted to nodes `lo..=hi`.
fn local_cubic<T: Real>(xs: &[T], ys: &[T], lo: usize, y_lo: T, hi: usize, i: usize, x: T) -> T {
    let m = (hi - lo + 1).min(4);
    let start = if i < lo + 1 { lo } else { i - 1 };
    let start = start.min(hi + 1 - m).max(lo);
    let mut s = T::zero();
    for a in start..start + m {
        let mut w = T::one();
        for b in start..start + m {
            if a != b {
                w *= (x - xs[b]) / (xs[a] - xs[b]);
            }
        }
        s += w * if a == lo { y_lo } else { ys[a] };
    }
    s
}

impl<T: Real> Radial<T> for RadialFunction<T> {
    fn eval(&self, r: T) -> T {
        let r = r.abs();
        let n = self.grid.len();
        let last = self.grid[n - 1];
        if r >= last {
            return match self.tail {
                _ if r == last => self.values[n - 1],
                Tail::Zero => T::zero(),
                Tail::Exponential { rate } => self.values[n - 1] * (-(rate * (r - last))).exp(),
            };
        }
        let i = self.grid.partition_point(|&g| g <= r) - 1;
        let k = self.seg.partition_point(|&s| s <= i) - 1;
        let (lo, hi) = (self.seg[k], self.seg[k + 1]);
        local_cubic(&self.grid, &self.values, lo, self.right[k], hi, i, r)
    }
    fn support(&self) -> T {
        match self.tail {
            Tail::Zero => *self.grid.last().unwrap(),
            Tail::Exponential { .. } => T::infinity(),
        }
    }
    fn breaks(&self) -> Vec<T> {
        self.breaks.clone()
    }
}

/// Nodes on `[0, range]`, denser toward segment ends, with every break a node.
pub fn graded_grid<T: Real>(range: T, breaks: &[T], nodes: usize) -> Vec<T> {
    let mut pts = vec![T::zero()];
    let mut b: Vec<T> = breaks.iter().copied().filter(|&x| x > T::zero() && x < range).collect();
    sort_dedup(&mut b);
    pts.extend(b);
    pts.push(range);
    let nseg = pts.len() - 1;
    let budget = nodes.max(8 * nseg + 1) - 1;
    let mut grid = vec![T::zero()];
    for k in 0..nseg {
        let (a, c) = (pts[k], pts[k + 1]);
        let share = ((c - a) / range * T::from_usize_(budget)).to_f64_() as usize;
        let m = share.max(8);
        for j in 1..=m {
            let t = T::from_usize_(j) / T::from_usize_(m);
            let cheb = (T::one() - (T::PI() * t).cos()) * lit(0.5);
            let x = if j == m { c } else { a + (c - a) * (cheb + t) * lit(0.5) };
            if x > *grid.last().unwrap() {
                grid.push(x);
            }
        }
    }
    grid
}

/// Spectral-side samples `s -> F(s)`, zero beyond the last node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunction<T> {
    pub s_grid: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Real> SpectralFunction<T> {
    pub fn eval(&self, s: T) -> T {
        let n = self.s_grid.len();
        if n == 0 || s > self.s_grid[n - 1] || s < self.s_grid[0] {
            return T::zero();
        }
        if n == 1 {
            return self.values[0];
        }
        let i = (self.s_grid.partition_point(|&g| g <= s) - 1).min(n - 2);
        local_cubic(&self.s_grid, &self.values, 0, self.values[0], n - 1, i, s)
    }

    pub fn s_max(&self) -> T {
        self.s_grid.last().copied().unwrap_or(T::zero())
    }
}

/// Uniform grid on `[0, s_max]`.
pub fn spectral_grid<T: Real>(s_max: T, n: usize) -> Vec<T> {
    let n = n.max(2);
    (0..n).map(|i| s_max * T::from_usize_(i) / T::from_usize_(n - 1)).collect()
}

/// Spherical function at spectral parameter zero.
pub fn q_function<T: Real>(d: usize, r: T) -> Result<T> {
    check_dim(d)?;
    let r = r.abs();
    if r == T::zero() {
        return Ok(T::one());
    }
    if d == 3 {
        return Ok(r_over_sinh(r));
    }
    let e = (-r).exp();
    let one_m_t = lit::<T>(2.0) * e / (T::one() + e);
    let one_p_t = lit::<T>(2.0) / (T::one() + e);
    let t = T::one() - one_m_t;
    let num = one_m_t * one_p_t;
    let p = T::from_usize_(d - 1) * lit(0.5);
    let m = (d - 2) as i32;
    let f = |th: T| {
        let s = (th * lit(0.5)).sin();
        let w = num / (one_m_t * one_m_t + lit::<T>(4.0) * t * s * s);
        w.powf(p) * th.sin().powi(m)
    };
    let mut pts = vec![T::zero()];
    let mut th = one_m_t;
    while th < T::PI() {
        pts.push(th);
        th = th * lit(2.0);
    }
    pts.push(T::PI());
    let opts = QuadOptions::with_tol(1e-300, 1e-12);
    let v = integrate_points(f, &pts, &opts)?.value;
    Ok(sphere_measure::<T>(d - 2) / sphere_measure::<T>(d - 1) * v)
}

/// `r / sinh r`, finite for all `r`.
pub fn r_over_sinh<T: Real>(r: T) -> T {
    let r = r.abs();
    if r < lit(1e-4) {
        T::one() - r * r / lit(6.0)
    } else if r > lit(30.0) {
        let e = (-r).exp();
        lit::<T>(2.0) * r * e / (T::one() - e * e)
    } else {
        r / r.sinh()
    }
}

/// `f~(s) = (4 pi / s) int f(r) sin(sr) sinh(r) dr`, `f~(0) = 4 pi int f r sinh r`.
pub fn sph_transform_d3<T: Real, R: Radial<T> + ?Sized>(
    f: &R,
    s_grid: &[T],
    opts: &QuadOptions<T>,
) -> Result<SpectralFunction<T>> {
    let range = f.support();
    if !range.is_finite() {
        return argument("transform needs a function with finite support");
    }
    let breaks = f.breaks();
    let four_pi = lit::<T>(4.0) * T::PI();
    let values: Result<Vec<T>> = s_grid
        .par_iter()
        .map(|&s| {
            if s == T::zero() {
                let g = |r: T| f.eval(r) * r * r.sinh();
                return Ok(four_pi * integrate_breaks(g, T::zero(), range, &breaks, opts)?.value);
            }
            let g = |r: T| f.eval(r) * (s * r).sin() * r.sinh();
            let mut pts: Vec<T> = breaks.clone();
            let step = T::PI() / s;
            let mut k = 1usize;
            loop {
                let z = step * T::from_usize_(k);
                if z >= range {
                    break;
                }
                pts.push(z);
                k += 1;
            }
            let v = integrate_breaks(g, T::zero(), range, &pts, opts)?.value;
            Ok(four_pi / s * v)
        })
        .collect();
    Ok(SpectralFunction { s_grid: s_grid.to_vec(), values: values? })
}

/// Wynn epsilon extrapolation of a sequence of partial sums.
fn wynn_epsilon<T: Real>(s: &[T]) -> T {
    let n = s.len();
    if n < 3 {
        return *s.last().unwrap_or(&T::zero());
    }
    let mut prev = vec![T::zero(); n + 1];
    let mut cur: Vec<T> = s.to_vec();
    let mut best = s[n - 1];
    let mut k = 0;
    while cur.len() > 1 {
        let next: Vec<T> = (0..cur.len() - 1)
            .map(|i| {
                let diff = cur[i + 1] - cur[i];
                if diff == T::zero() {
                    T::infinity()
                } else {
                    prev[i + 1] + T::one() / diff
                }
            })
            .collect();
        prev = cur;
        cur = next;
        k += 1;
        if k % 2 == 0 {
            if let Some(&v) = cur.last() {
                if v.is_finite() {
                    best = v;
                }
            }
        }
    }
    best
}

/// Inverse of the `d = 3` transform for an analytic spectral function on `[0, s_max]`:
/// `f(r) = (1 / (2 pi^2 sinh r)) int s F(s) sin(sr) ds`.
pub fn sph_inverse_d3_fn<T: Real, F: Fn(T) -> T + Sync>(
    big_f: F,
    s_max: T,
    r_grid: &[T],
    opts: &QuadOptions<T>,
) -> Result<Vec<T>> {
    let c = T::one() / (lit::<T>(2.0) * T::PI() * T::PI());
    r_grid
        .par_iter()
        .map(|&r| {
            if r == T::zero() {
                let v = integrate(|s: T| s * s * big_f(s), T::zero(), s_max, opts)?.value;
                return Ok(c * v);
            }
            let g = |s: T| s * big_f(s) * (s * r).sin();
            let step = T::PI() / r;
            let mut partial = Vec::new();
            let mut sum = T::zero();
            let mut a = T::zero();
            while a < s_max {
                let b = (a + step).min(s_max);
                sum += integrate(g, a, b, opts)?.value;
                partial.push(sum);
                a = b;
            }
            let tail_small = partial.len() < 2 || {
                let n = partial.len();
                (partial[n - 1] - partial[n - 2]).abs() <= lit::<T>(1e-13) * sum.abs().max(T::min_positive_value())
            };
            let v = if tail_small {
                sum
            } else {
                let k = partial.len().min(24);
                wynn_epsilon(&partial[partial.len() - k..])
            };
            Ok(c * v / r.sinh())
        })
        .collect()
}

pub fn sph_inverse_d3<T: Real>(
    big_f: &SpectralFunction<T>,
    r_grid: &[T],
    opts: &QuadOptions<T>,
) -> Result<RadialFunction<T>> {
    if r_grid.first() != Some(&T::zero()) {
        return argument("r grid must start at 0");
    }
    let values = sph_inverse_d3_fn(|s| big_f.eval(s), big_f.s_max(), r_grid, opts)?;
    RadialFunction::new(3, r_grid.to_vec(), values)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConvOptions<T> {
    pub nodes: usize,
    pub quad: QuadOptions<T>,
}

impl<T: Real> Default for ConvOptions<T> {
    fn default() -> Self {
        ConvOptions { nodes: 2048, quad: QuadOptions::with_tol(1e-14, 1e-10) }
    }
}

/// Angle at the centre between the axis and a point at distance `c`,
/// for a triangle with the other two sides `r` and `s`.
fn theta_of<T: Real>(r: T, s: T, c: T) -> T {
    let h = lit::<T>(0.5);
    let x = lit::<T>(2.0) * ((c + r - s) * h).sinh() * ((c - r + s) * h).sinh() / (r.sinh() * s.sinh());
    let q = (x * h).max(T::zero());
    if q >= T::one() {
        T::PI()
    } else {
        lit::<T>(2.0) * q.sqrt().asin()
    }
}

/// `(f * g)(r) = S_{d-2} int g(s) sinh^{d-1}(s) int_0^pi f(c) sin^{d-2}(theta) dtheta ds`.
pub fn convolve_radial<T: Real, F: Radial<T> + ?Sized, G: Radial<T> + ?Sized>(
    f: &F,
    g: &G,
    d: usize,
    opts: &ConvOptions<T>,
) -> Result<RadialFunction<T>> {
    check_dim(d)?;
    let (rf, rg) = (f.support(), g.support());
    if !rf.is_finite() || !rg.is_finite() {
        return argument("convolution needs finitely supported inputs; truncate first");
    }
    let mut bf = f.breaks();
    bf.push(rf);
    let mut bg = g.breaks();
    bg.push(rg);
    let range = rf + rg;
    let mut out_breaks = Vec::new();
    for &x in &bf {
        for &y in &bg {
            out_breaks.push(x + y);
            out_breaks.push((x - y).abs());
        }
    }
    let grid = graded_grid(range, &out_breaks, opts.nodes);
    let values: Result<Vec<T>> = grid.par_iter().map(|&r| convolve_at(f, g, d, r, &bf, &bg, &opts.quad)).collect();
    RadialFunction::with_breaks(d, grid, values?, out_breaks)
}

/// Single value of the radial convolution at `r`.
pub fn convolve_at<T: Real, F: Radial<T> + ?Sized, G: Radial<T> + ?Sized>(
    f: &F,
    g: &G,
    d: usize,
    r: T,
    bf: &[T],
    bg: &[T],
    quad: &QuadOptions<T>,
) -> Result<T> {
    let (rf, rg) = (f.support(), g.support());
    let m = (d - 2) as i32;
    let p = (d - 1) as i32;
    let full = sin_power_integral::<T>(d - 2, T::PI());
    let s_low = sphere_measure::<T>(d - 2);
    if r == T::zero() {
        let h = |s: T| f.eval(s) * g.eval(s) * s.sinh().powi(p);
        let v = integrate_breaks(h, T::zero(), rf.min(rg), &[bf, bg].concat(), quad)?.value;
        return Ok(s_low * full * v);
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner = |s: T| -> T {
        if s == T::zero() {
            return f.eval(r) * full;
        }
        let lo = (r - s).abs();
        let hi = r + s;
        if lo >= rf {
            return T::zero();
        }
        let th_hi = if hi <= rf { T::PI() } else { theta_of(r, s, rf) };
        let mut pts = vec![T::zero()];
        for &b in bf {
            if b > lo && b < hi && b < rf {
                pts.push(theta_of(r, s, b));
            }
        }
        pts.push(th_hi);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        let rs2 = lit::<T>(2.0) * r.sinh() * s.sinh();
        let sh = ((r - s) * lit(0.5)).sinh();
        let base = lit::<T>(2.0) * sh * sh;
        let h = |th: T| {
            let st = (th * lit(0.5)).sin();
            let c = acosh1p(base + rs2 * st * st);
            f.eval(c) * th.sin().powi(m)
        };
        match integrate_points(h, &pts, quad) {
            Ok(e) => e.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                T::zero()
            }
        }
    };
    let outer = |s: T| {
        let gv = g.eval(s);
        if gv == T::zero() {
            T::zero()
        } else {
            gv * s.sinh().powi(p) * inner(s)
        }
    };
    let s_lo = (r - rf).max(T::zero());
    let s_hi = rg.min(r + rf);
    if s_hi <= s_lo {
        return Ok(T::zero());
    }
    let mut pts: Vec<T> = bg.to_vec();
    for &b in bf {
        pts.push((r - b).abs());
        pts.push(r + b);
    }
    let v = integrate_breaks(outer, s_lo, s_hi, &pts, quad)?.value;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(s_low * v)
}

/// Cached convolution powers `f, f*f, f*f*f, ...`.
pub struct ConvPowers<T: Real> {
    pub d: usize,
    powers: Vec<RadialFunction<T>>,
}

impl<T: Real> ConvPowers<T> {
    /// `f` is tabulated once on the same grading used for its powers.
    pub fn new<F: Radial<T> + ?Sized>(f: &F, d: usize, max_power: usize, opts: &ConvOptions<T>) -> Result<Self> {
        check_dim(d)?;
        let base = RadialFunction::sample(f, d, f.support(), opts.nodes)?;
        let mut powers = vec![base];
        for _ in 1..max_power.max(1) {
            let prev = powers.last().unwrap();
            let next = convolve_radial(f, prev, d, opts)?;
            powers.push(next);
        }
        Ok(ConvPowers { d, powers })
    }

    /// `f^{*k}` for `1 <= k <= max_power`.
    pub fn power(&self, k: usize) -> &RadialFunction<T> {
        &self.powers[k - 1]
    }

    pub fn max_power(&self) -> usize {
        self.powers.len()
    }
}

/// `f^{*n}(o,o)` as the integral of `f^{*floor(n/2)} f^{*ceil(n/2)}`.
/// `exact` supplies the analytic profile used for the first power.
pub fn loop_value<T: Real>(
    exact: &dyn Radial<T>,
    powers: &ConvPowers<T>,
    n: usize,
    opts: &QuadOptions<T>,
) -> Result<T> {
    if n < 2 {
        return argument("loop order must be >= 2");
    }
    let (a, b) = (n / 2, n - n / 2);
    if b > powers.max_power() {
        return argument(format!("loop order {n} needs power {b}"));
    }
    let pick = |k: usize| -> &dyn Radial<T> {
        if k == 1 {
            exact
        } else {
            powers.power(k)
        }
    };
    let prod = Product(vec![pick(a), pick(b)]);
    Ok(radial_integral(&prod, powers.d, opts)?.value)
}
