//! Adjacency-function families and their norms.

use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Error, Result};
use crate::geometry::{ball_volume, check_dim, radial_integral, sphere_measure};
use crate::quad::{integrate, integrate_to_inf, QuadOptions};
use crate::real::{lit, Real};
use crate::transform::{q_function, r_over_sinh, Cut, FnRadial, Radial};

/// Monotone (Fritsch-Carlson) cubic through `(r_i, v_i)`, clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomTable<T> {
    r: Vec<T>,
    v: Vec<T>,
    slope: Vec<T>,
}

impl<T: Real> CustomTable<T> {
    pub fn new(points: Vec<(T, T)>) -> Result<Self> {
        let (r, v): (Vec<T>, Vec<T>) = points.into_iter().unzip();
        if r.iter().chain(&v).any(|x| !x.is_finite()) {
            return argument("table entries must be finite");
        }
        if r.first().is_some_and(|&x| x < T::zero()) {
            return argument("table radii must be >= 0");
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return argument("table radii must be strictly increasing");
        }
        if v.iter().any(|&x| x < T::zero() || x > T::one()) {
            return argument("table values must lie in [0, 1]");
        }
        let slope = pchip_slopes(&r, &v);
        Ok(CustomTable { r, v, slope })
    }

    pub fn points(&self) -> Vec<(T, T)> {
        self.r.iter().copied().zip(self.v.iter().copied()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn end(&self) -> T {
        self.r.last().copied().unwrap_or(T::zero())
    }

    pub fn eval(&self, x: T) -> T {
        let n = self.r.len();
        if n == 0 || x < self.r[0] || x > self.r[n - 1] {
            return T::zero();
        }
        if n == 1 {
            return self.v[0];
        }
        let i = (self.r.partition_point(|&g| g <= x).max(1) - 1).min(n - 2);
        let h = self.r[i + 1] - self.r[i];
        let t = (x - self.r[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let two = lit::<T>(2.0);
        let three = lit::<T>(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        let y = h00 * self.v[i] + h10 * h * self.slope[i] + h01 * self.v[i + 1] + h11 * h * self.slope[i + 1];
        y.max(T::zero()).min(T::one())
    }
}

fn pchip_slopes<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    if n < 2 {
        return vec![T::zero(); n];
    }
    let delta: Vec<T> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut m = vec![T::zero(); n];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        if a * b > T::zero() {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let w1 = lit::<T>(2.0) * h1 + h0;
            let w2 = h1 + lit::<T>(2.0) * h0;
            m[i] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    let end = |h0: T, h1: T, d0: T, d1: T| {
        let s = ((lit::<T>(2.0) * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= T::zero() {
            T::zero()
        } else if d0 * d1 < T::zero() && s.abs() > lit::<T>(3.0) * d0.abs() {
            lit::<T>(3.0) * d0
        } else {
            s
        }
    };
    m[0] = end(x[1] - x[0], x[2] - x[1], delta[0], delta[1]);
    m[n - 1] = end(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], delta[n - 2], delta[n - 3]);
    m
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family<T> {
    /// `phi(r) = 1{r < L}`.
    BooleanDisc { l: T },
    /// `phi(r) = A (2 pi L)^{-3/2} (r / sinh r) exp(-L/2 - r^2/(2L))` on `H^3`.
    HeatKernel3 { l: T, amplitude: T },
    CustomRadial { table: CustomTable<T> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr<T>", into = "SpecRepr<T>", bound = "T: Real")]
pub struct AdjacencySpec<T> {
    pub d: usize,
    pub family: Family<T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecRepr<T> {
    d: usize,
    family: String,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    l: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amplitude: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Vec<(T, T)>>,
}

impl<T: Real> TryFrom<SpecRepr<T>> for AdjacencySpec<T> {
    type Error = Error;
    fn try_from(s: SpecRepr<T>) -> Result<Self> {
        let need_l = || s.l.ok_or_else(|| Error::Argument("field `L` is required".into()));
        match s.family.as_str() {
            "boolean" => AdjacencySpec::boolean(s.d, need_l()?),
            "heat3" => {
                if s.d != 3 {
                    return Err(Error::UnsupportedDimension(s.d));
                }
                AdjacencySpec::heat3(need_l()?, s.amplitude)
            }
            "custom" => AdjacencySpec::custom(s.d, s.table.clone().unwrap_or_default()),
            other => argument(format!("unknown family `{other}` (expected boolean, heat3 or custom)")),
        }
    }
}

impl<T: Real> From<AdjacencySpec<T>> for SpecRepr<T> {
    fn from(a: AdjacencySpec<T>) -> Self {
        match a.family {
            Family::BooleanDisc { l } => {
                SpecRepr { d: a.d, family: "boolean".into(), l: Some(l), amplitude: None, table: None }
            }
            Family::HeatKernel3 { l, amplitude } => SpecRepr {
                d: a.d,
                family: "heat3".into(),
                l: Some(l),
                amplitude: Some(amplitude),
                table: None,
            },
            Family::CustomRadial { table } => SpecRepr {
                d: a.d,
                family: "custom".into(),
                l: Some(table.end()),
                amplitude: None,
                table: Some(table.points()),
            },
        }
    }
}

/// `(2 pi L)^{3/2} e^{L/2}`, the amplitude making `phi(0) = 1`.
pub fn default_heat_amplitude<T: Real>(l: T) -> T {
    (lit::<T>(2.0) * T::PI() * l).powf(lit(1.5)) * (l * lit(0.5)).exp()
}

impl<T: Real> AdjacencySpec<T> {
    pub fn boolean(d: usize, l: T) -> Result<Self> {
        check_dim(d)?;
        if !(l > T::zero()) || !l.is_finite() {
            return argument("Boolean radius L must be positive");
        }
        Ok(AdjacencySpec { d, family: Family::BooleanDisc { l } })
    }

    /// Heat-kernel model on `H^3`; `None` selects the default amplitude.
    pub fn heat3(l: T, amplitude: Option<T>) -> Result<Self> {
        if !(l > T::zero()) || !l.is_finite() {
            return argument("heat-kernel L must be positive");
        }
        let max = default_heat_amplitude(l);
        let a = amplitude.unwrap_or(max);
        if !(a > T::zero()) || a > max * (T::one() + T::tol(1e-12)) {
            return argument(format!("amplitude must lie in (0, {max}] so that phi <= 1"));
        }
        Ok(AdjacencySpec { d: 3, family: Family::HeatKernel3 { l, amplitude: a } })
    }

    pub fn custom(d: usize, points: Vec<(T, T)>) -> Result<Self> {
        check_dim(d)?;
        Ok(AdjacencySpec { d, family: Family::CustomRadial { table: CustomTable::new(points)? } })
    }

    /// Stretch parameter `L` (table end for custom profiles).
    pub fn scale(&self) -> T {
        match &self.family {
            Family::BooleanDisc { l } | Family::HeatKernel3 { l, .. } => *l,
            Family::CustomRadial { table } => table.end(),
        }
    }

    pub fn is_boolean(&self) -> bool {
        matches!(self.family, Family::BooleanDisc { .. })
    }

    pub fn describe(&self) -> String {
        match &self.family {
            Family::BooleanDisc { l } => format!("boolean d={} L={}", self.d, l),
            Family::HeatKernel3 { l, amplitude } => format!("heat3 L={l} A={amplitude}"),
            Family::CustomRadial { table } => format!("custom d={} nodes={}", self.d, table.r.len()),
        }
    }

    /// Connection probability at distance `r`.
    pub fn phi(&self, r: T) -> T {
        let r = r.abs();
        match &self.family {
            Family::BooleanDisc { l } => {
                if r < *l {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Family::HeatKernel3 { l, amplitude } => {
                let l = *l;
                let e = amplitude.ln()
                    - lit::<T>(1.5) * (lit::<T>(2.0) * T::PI() * l).ln()
                    - l * lit(0.5)
                    - r * r / (lit::<T>(2.0) * l);
                (e.exp() * r_over_sinh(r)).min(T::one())
            }
            Family::CustomRadial { table } => table.eval(r),
        }
    }

    /// The profile cut at `effective_range(eps)`.
    pub fn truncated(&self, eps: T) -> Result<Cut<T, AdjacencySpec<T>>> {
        Ok(Cut { inner: self.clone(), range: effective_range(self, eps)? })
    }
}

impl<T: Real> Radial<T> for AdjacencySpec<T> {
    fn eval(&self, r: T) -> T {
        self.phi(r)
    }
    fn support(&self) -> T {
        match &self.family {
            Family::BooleanDisc { l } => *l,
            Family::HeatKernel3 { .. } => T::infinity(),
            Family::CustomRadial { table } => table.end(),
        }
    }
}

/// `||Phi||_{1->1} = int phi dmu`.
pub fn norm_1to1<T: Real>(spec: &AdjacencySpec<T>) -> Result<T> {
    let v = match &spec.family {
        Family::BooleanDisc { l } => ball_volume(spec.d, *l)?,
        Family::HeatKernel3 { amplitude, .. } => *amplitude,
        Family::CustomRadial { table } => {
            if table.is_empty() {
                T::zero()
            } else {
                radial_integral(spec, spec.d, &QuadOptions::default())?.value
            }
        }
    };
    if !(v > T::zero()) || !v.is_finite() {
        return Err(Error::Assumption(format!("int phi dmu = {v} must be positive and finite")));
    }
    Ok(v)
}

/// `||Phi||_{2->2} = S_{d-1} int phi Q_d sinh^{d-1}`; closed form for the heat kernel.
pub fn norm_2to2<T: Real>(spec: &AdjacencySpec<T>) -> Result<T> {
    match &spec.family {
        Family::HeatKernel3 { l, amplitude } => Ok(*amplitude * (-*l * lit(0.5)).exp()),
        _ => norm_2to2_quadrature(spec),
    }
}

/// Quadrature route for `||Phi||_{2->2}`, valid for every family.
pub fn norm_2to2_quadrature<T: Real>(spec: &AdjacencySpec<T>) -> Result<T> {
    norm_1to1(spec)?;
    let d = spec.d;
    let f = FnRadial {
        f: |r: T| {
            let p = spec.phi(r);
            if p == T::zero() {
                T::zero()
            } else {
                p * q_function(d, r).unwrap_or(T::nan())
            }
        },
        support: spec.support(),
        breaks: vec![],
    };
    let opts = QuadOptions::with_tol(1e-300, 1e-12);
    Ok(radial_integral(&f, d, &opts)?.value)
}

fn tail_mass<T: Real>(spec: &AdjacencySpec<T>, r: T, opts: &QuadOptions<T>) -> Result<T> {
    let p = (spec.d - 1) as i32;
    let f = |x: T| {
        let v = spec.phi(x);
        if v == T::zero() {
            T::zero()
        } else {
            v * x.sinh().powi(p)
        }
    };
    let sup = spec.support();
    let v = if sup.is_finite() {
        if r >= sup {
            T::zero()
        } else {
            integrate(f, r, sup, opts)?.value
        }
    } else {
        integrate_to_inf(f, r, opts)?.value
    };
    Ok(sphere_measure::<T>(spec.d - 1) * v)
}

/// `int_{d(o,x) >= r} phi dmu`.
pub fn mass_beyond<T: Real>(spec: &AdjacencySpec<T>, r: T) -> Result<T> {
    if !(r >= T::zero()) {
        return domain("r must be non-negative");
    }
    let n1 = norm_1to1(spec)?;
    let opts = QuadOptions { abs_tol: n1 * T::tol(1e-15), rel_tol: T::tol(1e-10), max_panels: 4000 };
    tail_mass(spec, r, &opts)
}

/// Smallest radius whose tail mass is at most `eps * ||Phi||_{1->1}`.
pub fn effective_range<T: Real>(spec: &AdjacencySpec<T>, eps: T) -> Result<T> {
    if !(eps > T::zero() && eps < T::one()) {
        return domain("eps must lie in (0, 1)");
    }
    if let Family::BooleanDisc { l } = spec.family {
        return Ok(l);
    }
    let n1 = norm_1to1(spec)?;
    let target = eps * n1;
    let opts = QuadOptions { abs_tol: target * lit(1e-3), rel_tol: T::tol(1e-8), max_panels: 4000 };
    let total = tail_mass(spec, T::zero(), &opts)?;
    if !total.is_finite() {
        return Err(Error::Assumption("tail integral diverges".into()));
    }
    let sup = spec.support();
    let mut hi = if sup.is_finite() { sup } else { spec.scale().max(T::one()) };
    while tail_mass(spec, hi, &opts)? > target {
        hi = hi * lit(2.0);
        if hi > lit(1e4) {
            return Err(Error::Assumption("tail integral does not decay".into()));
        }
    }
    let mut lo = T::zero();
    for _ in 0..200 {
        if hi - lo <= T::tol(1e-12) * hi.max(T::one()) {
            break;
        }
        let mid = (lo + hi) * lit(0.5);
        if tail_mass(spec, mid, &opts)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `int_0^R phi sinh^{d-1} / int_0^inf phi sinh^{d-1}`.
pub fn mass_fraction_within<T: Real>(spec: &AdjacencySpec<T>, r: T) -> Result<T> {
    let n1 = norm_1to1(spec)?;
    let opts = QuadOptions::with_tol(1e-300, 1e-11);
    let outside = tail_mass(spec, r, &opts)?;
    Ok(((n1 - outside) / n1).max(T::zero()))
}
