//! Hyperbolic geometry on the Poincare ball model.

use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Result};
use crate::quad::{fixed_gk, integrate, integrate_breaks, Estimate, QuadOptions};
use crate::real::{lit, Real};
use crate::transform::Radial;

/// A point of the open unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPoint<T> {
    coords: Vec<T>,
}

impl<T: Real> HPoint<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.len() < 2 {
            return argument(format!("dimension {} < 2", coords.len()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return domain("non-finite coordinate");
        }
        if norm2(&coords) >= T::one() {
            return domain("point not inside the unit ball");
        }
        Ok(HPoint { coords })
    }

    pub fn origin(d: usize) -> Self {
        HPoint { coords: vec![T::zero(); d] }
    }

    /// Point at hyperbolic distance `r` from `o` in direction `u` (unit vector).
    pub fn from_polar(r: T, u: &[T]) -> Result<Self> {
        if r < T::zero() {
            return domain("negative radius");
        }
        let t = (r * lit(0.5)).tanh();
        HPoint::new(u.iter().map(|&x| x * t).collect())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    /// Euclidean norm of the ball coordinates.
    pub fn norm(&self) -> T {
        norm2(&self.coords).sqrt()
    }

    /// Distance to the origin, `2 artanh |x|`.
    pub fn radius(&self) -> T {
        lit::<T>(2.0) * self.norm().atanh()
    }
}

fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, &x| s + x * x)
}

/// `acosh(1 + delta)` without cancellation for small `delta`.
#[inline]
pub fn acosh1p<T: Real>(delta: T) -> T {
    (delta + (delta * (delta + lit(2.0))).sqrt()).ln_1p()
}

pub fn dist<T: Real>(x: &HPoint<T>, y: &HPoint<T>) -> Result<T> {
    if x.dim() != y.dim() {
        return argument(format!("dimension mismatch {} vs {}", x.dim(), y.dim()));
    }
    let diff: T = x.coords.iter().zip(&y.coords).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b));
    let nx = x.norm();
    let ny = y.norm();
    let one = T::one();
    let denom = (one - nx) * (one + nx) * (one - ny) * (one + ny);
    Ok(acosh1p(lit::<T>(2.0) * diff / denom))
}

/// `Gamma(m/2)` for integer `m >= 1`, exact recursion from `Gamma(1/2)` or `Gamma(1)`.
fn gamma_half<T: Real>(m: usize) -> T {
    let (mut g, mut x) = if m % 2 == 0 {
        (T::one(), 2usize)
    } else {
        (T::PI().sqrt(), 1usize)
    };
    while x < m {
        g *= T::from_usize_(x) * lit(0.5);
        x += 2;
    }
    g
}

/// Surface measure of the unit sphere `S^k` in `R^{k+1}`.
pub fn sphere_measure<T: Real>(k: usize) -> T {
    let h = T::from_usize_(k + 1) * lit(0.5);
    lit::<T>(2.0) * T::PI().powf(h) / gamma_half::<T>(k + 1)
}

/// Measure of the unit sphere bounding the unit ball in `R^d`.
pub fn sphere_constant<T: Real>(d: usize) -> Result<T> {
    check_dim(d)?;
    Ok(sphere_measure(d - 1))
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return argument(format!("dimension d={d} must be >= 2"));
    }
    Ok(())
}

fn binom(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// `int_0^r sinh^n(t) dt`.
pub fn sinh_power_integral<T: Real>(n: usize, r: T) -> T {
    let two = lit::<T>(2.0);
    match n {
        0 => return r,
        1 => {
            let s = (r / two).sinh();
            return two * s * s;
        }
        _ => {}
    }
    if r <= two {
        return fixed_gk(|t: T| t.sinh().powi(n as i32), T::zero(), r, 8);
    }
    // Binomial expansion of sinh^n.
    let mut s = T::zero();
    for k in 0..=n {
        let m = n as i64 - 2 * k as i64;
        let c = T::lit(binom(n, k)) * if k % 2 == 0 { T::one() } else { -T::one() };
        let term = if m == 0 {
            r
        } else {
            let mf = T::lit(m as f64);
            (mf * r).exp_m1() / mf
        };
        s += c * term;
    }
    s / two.powi(n as i32)
}

/// Hyperbolic volume of a ball of radius `r` in `H^d`.
pub fn ball_volume<T: Real>(d: usize, r: T) -> Result<T> {
    check_dim(d)?;
    if !(r >= T::zero()) || !r.is_finite() {
        return domain(format!("ball radius {r} must be finite and >= 0"));
    }
    if d == 2 {
        let s = (r * lit(0.5)).sinh();
        return Ok(lit::<T>(4.0) * T::PI() * s * s);
    }
    Ok(sphere_measure::<T>(d - 1) * sinh_power_integral(d - 1, r))
}

/// `S_{d-1} int g(r) sinh^{d-1}(r) dr` over the support of `g`.
pub fn radial_integral<T: Real, G: Radial<T> + ?Sized>(
    g: &G,
    d: usize,
    opts: &QuadOptions<T>,
) -> Result<Estimate<T>> {
    check_dim(d)?;
    let sd = sphere_measure::<T>(d - 1);
    let p = (d - 1) as i32;
    let f = |r: T| {
        let v = g.eval(r);
        if v == T::zero() {
            T::zero()
        } else {
            v * r.sinh().powi(p)
        }
    };
    let sup = g.support();
    let breaks = g.breaks();
    let e = if sup.is_finite() {
        integrate_breaks(f, T::zero(), sup, &breaks, opts)?
    } else {
        let last = breaks.iter().copied().fold(T::one(), T::max);
        let head = integrate_breaks(f, T::zero(), last, &breaks, opts)?;
        let tail = crate::quad::integrate_to_inf(f, last, opts)?;
        head + tail
    };
    Ok(e.scale(sd))
}

/// Signed horocycle coordinate `log((1-|z|^2)/|z-b|^2)` for a boundary point `b`.
pub fn horocycle_coordinate<T: Real>(x: &HPoint<T>, b: &[T]) -> Result<T> {
    if b.len() != x.dim() {
        return argument("boundary point dimension mismatch");
    }
    if (norm2(b) - T::one()).abs() > T::tol(1e-10) {
        return argument("boundary point must have unit norm");
    }
    let n = x.norm();
    let gap: T = x.coords.iter().zip(b).fold(T::zero(), |s, (&z, &w)| s + (z - w) * (z - w));
    if gap <= T::zero() {
        return domain("point coincides with the boundary point");
    }
    Ok(((T::one() - n) * (T::one() + n) / gap).ln())
}

/// Cross-section of two congruent balls of radius `l` with centres `r` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensGeometry<T> {
    #[serde(rename = "L")]
    pub l: T,
    pub r: T,
    /// Half opening angle at a centre, between the axis and the rim.
    pub alpha: T,
    /// Distance from the midpoint of the axis to the rim.
    pub a: T,
}

/// `None` when the balls are disjoint (`r > 2L`).
pub fn lens_geometry<T: Real>(d: usize, l: T, r: T) -> Result<Option<LensGeometry<T>>> {
    check_dim(d)?;
    if !(l > T::zero()) || !(r >= T::zero()) {
        return domain("lens needs L > 0 and r >= 0");
    }
    let half = r * lit(0.5);
    if half > l {
        return Ok(None);
    }
    // 1 - cos(alpha) = (tanh L - tanh(r/2)) / tanh L, written without cancellation.
    let omc = (l - half).sinh() / (l.sinh() * half.cosh());
    let s = (omc * lit(0.5)).max(T::zero()).min(T::one()).sqrt();
    let alpha = lit::<T>(2.0) * s.asin();
    let a = (alpha.sin() * l.sinh()).asinh();
    Ok(Some(LensGeometry { l, r, alpha, a }))
}

/// `int_0^alpha sin^m`.
pub fn sin_power_integral<T: Real>(m: usize, alpha: T) -> T {
    if alpha < lit(0.5) || m > 12 {
        let panels = 2 + (alpha.to_f64_() * 2.0) as usize;
        return fixed_gk(|t: T| t.sin().powi(m as i32), T::zero(), alpha, panels);
    }
    let s = alpha.sin();
    let c = alpha.cos();
    let (mut lo, mut hi) = (alpha, T::one() - c);
    if m == 0 {
        return lo;
    }
    for k in 2..=m {
        let kf = T::from_usize_(k);
        let next = (-(s.powi(k as i32 - 1)) * c + (kf - T::one()) * lo) / kf;
        lo = hi;
        hi = next;
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LensMethod {
    /// Polar quadrature about one centre.
    Direct,
    /// Twice (spherical segment minus cone over the bisecting hyperplane).
    SegmentCone,
}

/// `mu(B_L(o) ∩ B_L(x))` with `dist(o,x) = r`.
pub fn ball_intersection_volume<T: Real>(d: usize, l: T, r: T) -> Result<T> {
    ball_intersection_volume_by(d, l, r, LensMethod::Direct, &QuadOptions::default())
}

pub fn ball_intersection_volume_by<T: Real>(
    d: usize,
    l: T,
    r: T,
    method: LensMethod,
    opts: &QuadOptions<T>,
) -> Result<T> {
    check_dim(d)?;
    if !(l > T::zero()) || !(r >= T::zero()) {
        return domain("lens needs L > 0 and r >= 0");
    }
    if r >= lit::<T>(2.0) * l {
        return Ok(T::zero());
    }
    if r == T::zero() {
        return ball_volume(d, l);
    }
    let s_low = sphere_measure::<T>(d - 2);
    let m = d - 2;
    let p = (d - 1) as i32;
    match method {
        LensMethod::Direct => {
            let half = lit::<T>(0.5);
            let (sr, two) = (r.sinh(), lit::<T>(2.0));
            let theta_max = |rho: T| {
                let x = two * ((l + rho - r) * half).sinh() * ((l - rho + r) * half).sinh() / (rho.sinh() * sr);
                let s = (x * half).max(T::zero());
                if s >= T::one() {
                    T::PI()
                } else {
                    two * s.sqrt().asin()
                }
            };
            let f = |rho: T| rho.sinh().powi(p) * sin_power_integral(m, theta_max(rho));
            let inner = (l - r).abs();
            let mut total = if r < l {
                sin_power_integral(m, T::PI()) * sinh_power_integral(d - 1, l - r)
            } else {
                T::zero()
            };
            total += integrate(f, inner, l, opts)?.value;
            Ok(s_low * total)
        }
        LensMethod::SegmentCone => {
            let g = lens_geometry(d, l, r)?.expect("r < 2L checked");
            let il = sinh_power_integral(d - 1, l);
            let seg = sin_power_integral(m, g.alpha) * il;
            let t = (r * lit(0.5)).tanh();
            let tl = l.tanh();
            let f = |th: T| {
                let x = (t / th.cos()).min(tl);
                let rho = if x >= tl { l } else { x.atanh() };
                th.sin().powi(m as i32) * sinh_power_integral(d - 1, rho)
            };
            let cone = integrate(f, T::zero(), g.alpha, opts)?.value;
            Ok(lit::<T>(2.0) * s_low * (seg - cone).max(T::zero()))
        }
    }
}

/// Angles opposite sides `a, b, c` from the cosine rule (clamped arccos).
pub fn solve_angles<T: Real>(a: T, b: T, c: T) -> Result<[T; 3]> {
    check_triangle(a, b, c)?;
    let ang = |a: T, b: T, c: T| {
        let x = (b.cosh() * c.cosh() - a.cosh()) / (b.sinh() * c.sinh());
        x.max(-T::one()).min(T::one()).acos()
    };
    Ok([ang(a, b, c), ang(b, c, a), ang(c, a, b)])
}

fn check_triangle<T: Real>(a: T, b: T, c: T) -> Result<()> {
    let ok = a > T::zero() && b > T::zero() && c > T::zero() && a < b + c && b < a + c && c < a + b;
    if !ok {
        return domain(format!("sides ({a}, {b}, {c}) violate the triangle inequality"));
    }
    Ok(())
}

// Minimal complex helpers for planar constructions.
#[derive(Clone, Copy, Debug)]
struct C<T> {
    re: T,
    im: T,
}

impl<T: Real> C<T> {
    fn new(re: T, im: T) -> Self {
        C { re, im }
    }
    fn sub(self, o: Self) -> Self {
        C::new(self.re - o.re, self.im - o.im)
    }
    fn mul(self, o: Self) -> Self {
        C::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
    fn conj(self) -> Self {
        C::new(self.re, -self.im)
    }
    fn div(self, o: Self) -> Self {
        let n = o.re * o.re + o.im * o.im;
        let p = self.mul(o.conj());
        C::new(p.re / n, p.im / n)
    }
    fn abs(self) -> T {
        self.re.hypot(self.im)
    }
    fn arg(self) -> T {
        self.im.atan2(self.re)
    }
}

/// Disc automorphism sending `p` to 0.
fn to_origin<T: Real>(p: C<T>, z: C<T>) -> C<T> {
    z.sub(p).div(C::new(T::one(), T::zero()).sub(p.conj().mul(z)))
}

/// A triangle in the Poincare disc with its geometrically measured data.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Triangle<T> {
    /// Side lengths, `sides[i]` opposite `angles[i]`.
    pub sides: [T; 3],
    pub angles: [T; 3],
    vertices: [[T; 2]; 3],
}

impl<T: Real> Triangle<T> {
    /// Measure sides by `dist` and angles conformally at each vertex.
    pub fn from_vertices(v: [[T; 2]; 3]) -> Result<Self> {
        let pts: Vec<HPoint<T>> = v.iter().map(|p| HPoint::new(p.to_vec())).collect::<Result<_>>()?;
        let sides = [dist(&pts[1], &pts[2])?, dist(&pts[0], &pts[2])?, dist(&pts[0], &pts[1])?];
        check_triangle(sides[0], sides[1], sides[2])?;
        let z: Vec<C<T>> = v.iter().map(|p| C::new(p[0], p[1])).collect();
        let mut angles = [T::zero(); 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let u = to_origin(z[i], z[j]);
            let w = to_origin(z[i], z[k]);
            angles[i] = w.div(u).arg().abs();
        }
        Ok(Triangle { sides, angles, vertices: v })
    }

    /// Standard placement: vertex 0 at `o`, vertex 1 on the positive real axis.
    pub fn from_sides(a: T, b: T, c: T) -> Result<Self> {
        let ang = solve_angles(a, b, c)?;
        let half = lit::<T>(0.5);
        let tb = (b * half).tanh();
        let v = [
            [T::zero(), T::zero()],
            [(c * half).tanh(), T::zero()],
            [tb * ang[0].cos(), tb * ang[0].sin()],
        ];
        Triangle::from_vertices(v)
    }

    /// Vertices moved so that vertex `i` sits at `o` and vertex `i+1` on the positive axis.
    fn normalized(&self, i: usize) -> [C<T>; 3] {
        let z: Vec<C<T>> = self.vertices.iter().map(|p| C::new(p[0], p[1])).collect();
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let b = to_origin(z[i], z[j]);
        let c = to_origin(z[i], z[k]);
        let rot = C::new(b.re / b.abs(), -b.im / b.abs());
        let mut c = c.mul(rot);
        if c.im < T::zero() {
            c = c.conj();
        }
        [C::new(T::zero(), T::zero()), C::new(b.abs(), T::zero()), c]
    }

    /// Signed distance from vertex `i` to the foot of the perpendicular dropped
    /// from vertex `i+2` onto the side through `i` and `i+1`.
    pub fn foot_distance(&self, i: usize) -> T {
        let [_, _, c] = self.normalized(i);
        if c.re == T::zero() {
            return T::zero();
        }
        let one = T::one();
        let m = (c.re * c.re + c.im * c.im + one) / (lit::<T>(2.0) * c.re);
        let h = m - m.signum() * ((m - one) * (m + one)).sqrt();
        lit::<T>(2.0) * h.atanh()
    }

    /// Area as `int_0^alpha (cosh rho(phi) - 1) dphi`, with `rho(phi)` the distance
    /// from vertex 0 to the opposite side along direction `phi`.
    pub fn area_by_quadrature(&self) -> Result<T> {
        let [_, b, c] = self.normalized(0);
        // Geodesic through b and c: circle orthogonal to the unit circle with centre q.
        let one = T::one();
        let half = lit::<T>(0.5);
        let (rb, rc) = ((b.re * b.re + b.im * b.im + one) * half, (c.re * c.re + c.im * c.im + one) * half);
        let det = b.re * c.im - b.im * c.re;
        if det.abs() < T::epsilon() {
            return domain("degenerate triangle");
        }
        let qx = (rb * c.im - b.im * rc) / det;
        let qy = (b.re * rc - rb * c.re) / det;
        let alpha = c.arg();
        let f = |phi: T| {
            let eq = phi.cos() * qx + phi.sin() * qy;
            let s = one / (eq + ((eq - one) * (eq + one)).sqrt());
            lit::<T>(2.0) * s * s / ((one - s) * (one + s))
        };
        Ok(integrate(f, T::zero(), alpha, &QuadOptions::default())?.value)
    }
}

/// Residuals of the classical identities for given sides and angles.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TriangleResiduals<T> {
    pub sine_rule: T,
    pub cosine_rule: T,
    pub right_angle: T,
    /// `pi - sum of angles`.
    pub angle_defect: T,
    pub area: T,
    pub area_residual: T,
}

/// Check sine rule, cosine rule, the right-angle identity on the two halves cut
/// by an altitude, and area = angle defect. Angles are taken as given.
pub fn triangle_checks<T: Real>(sides: [T; 3], angles: [T; 3]) -> Result<TriangleResiduals<T>> {
    let [a, b, c] = sides;
    check_triangle(a, b, c)?;
    if angles.iter().any(|&x| !(x > T::zero() && x < T::PI())) {
        return domain("angles must lie in (0, pi)");
    }
    let ratio: Vec<T> = (0..3).map(|i| angles[i].sin() / sides[i].sinh()).collect();
    let rmax = ratio.iter().copied().fold(T::zero(), T::max);
    let rmin = ratio.iter().copied().fold(T::infinity(), T::min);
    let sine_rule = (rmax - rmin) / rmax;
    let mut cosine_rule = T::zero();
    for i in 0..3 {
        let (x, y, z) = (sides[i], sides[(i + 1) % 3], sides[(i + 2) % 3]);
        let lhs = angles[i].cos() * y.sinh() * z.sinh();
        let rhs = y.cosh() * z.cosh() - x.cosh();
        cosine_rule = cosine_rule.max((lhs - rhs).abs() / (y.cosh() * z.cosh()));
    }
    // Build the triangle from sides b, c and angle alpha only; the identities
    // below then test the remaining data against it.
    let half = lit::<T>(0.5);
    let tb = (b * half).tanh();
    let v = [
        [T::zero(), T::zero()],
        [(c * half).tanh(), T::zero()],
        [tb * angles[0].cos(), tb * angles[0].sin()],
    ];
    let tri = Triangle::from_vertices(v)?;
    let mut right_angle = T::zero();
    for i in 0..3 {
        // Right triangle (vertex i, foot, vertex i+2); its hypotenuse is the side opposite vertex i+1.
        let ah = tri.foot_distance(i);
        let hyp = tri.sides[(i + 1) % 3];
        let res = (angles[i].cos() - ah.tanh() / hyp.tanh()).abs();
        right_angle = right_angle.max(res);
    }
    let angle_defect = T::PI() - angles[0] - angles[1] - angles[2];
    let area = tri.area_by_quadrature()?;
    let area_residual = (area - angle_defect).abs() / area.max(T::epsilon());
    Ok(TriangleResiduals { sine_rule, cosine_rule, right_angle, angle_defect, area, area_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_distance_matches_artanh() {
        let x = HPoint::new(vec![0.5, 0.0]).unwrap();
        let o = HPoint::origin(2);
        assert!((dist(&x, &o).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(dist(&o, &o).unwrap(), 0.0);
    }

    #[test]
    fn dist_errors() {
        let x = HPoint::new(vec![0.1, 0.0]).unwrap();
        let y = HPoint::new(vec![0.1, 0.0, 0.0]).unwrap();
        assert!(dist(&x, &y).is_err());
        assert!(HPoint::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn sphere_constants() {
        let pi = std::f64::consts::PI;
        assert!((sphere_constant::<f64>(2).unwrap() - 2.0 * pi).abs() < 1e-14);
        assert!((sphere_constant::<f64>(3).unwrap() - 4.0 * pi).abs() < 1e-13);
        assert!((sphere_constant::<f64>(4).unwrap() - 2.0 * pi * pi).abs() < 1e-13);
        assert_eq!(sphere_measure::<f64>(0), 2.0);
        assert!(sphere_constant::<f64>(1).is_err());
    }

    #[test]
    fn unit_volume_disc() {
        let r0 = 2.0 * (0.5 / std::f64::consts::PI.sqrt()).asinh();
        assert!((ball_volume(2, r0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(ball_volume(5, 0.0).unwrap(), 0.0);
        assert!(ball_volume(2, -1.0).is_err());
    }

    #[test]
    fn volume_d3_closed_form() {
        let pi = std::f64::consts::PI;
        for r in [0.1, 1.0, 2.5, 6.0] {
            let want = pi * ((2.0 * r as f64).sinh() - 2.0 * r);
            let got = ball_volume(3, r).unwrap();
            assert!((got - want).abs() / want < 1e-12, "r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn sinh_powers_agree_across_branches() {
        for n in 2..8 {
            let q = integrate(|t: f64| t.sinh().powi(n as i32), 0.0, 3.0, &QuadOptions::with_tol(0.0, 1e-14)).unwrap();
            let b = sinh_power_integral(n, 3.0);
            assert!((q.value - b).abs() / b < 1e-12, "n={n}");
        }
    }

    #[test]
    fn horocycle_axis() {
        let b = [1.0, 0.0];
        let o = HPoint::origin(2);
        assert_eq!(horocycle_coordinate(&o, &b).unwrap(), 0.0);
        let t = 1.3f64;
        let z = HPoint::new(vec![(t / 2.0).tanh(), 0.0]).unwrap();
        assert!((horocycle_coordinate(&z, &b).unwrap() - t).abs() < 1e-13);
        let z = HPoint::new(vec![-(t / 2.0).tanh(), 0.0]).unwrap();
        assert!((horocycle_coordinate(&z, &b).unwrap() + t).abs() < 1e-13);
        assert!(horocycle_coordinate(&z, &[0.5, 0.0]).is_err());
    }

    #[test]
    fn lens_endpoints() {
        let g = lens_geometry(2, 2.0, 0.0).unwrap().unwrap();
        assert!((g.alpha - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        let g = lens_geometry(2, 2.0f64, 4.0).unwrap().unwrap();
        assert!(g.alpha.abs() < 1e-7);
        assert!(lens_geometry(2, 2.0, 4.000001).unwrap().is_none());
        let g = lens_geometry(3, 2.0f64, 1.0).unwrap().unwrap();
        assert!((g.alpha - ((0.5f64).tanh() / 2f64.tanh()).acos()).abs() < 1e-14);
        assert!((g.a.sinh() - g.alpha.sin() * 2f64.sinh()).abs() < 1e-12);
    }

    #[test]
    fn lens_limits() {
        for d in 2..5 {
            let v = ball_volume(d, 1.5f64).unwrap();
            assert!((ball_intersection_volume(d, 1.5, 0.0).unwrap() - v).abs() < 1e-12 * v);
            assert_eq!(ball_intersection_volume(d, 1.5, 3.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn lens_methods_agree() {
        let opts = QuadOptions::default();
        for d in 2..6 {
            for l in [1.0f64, 2.0, 4.0] {
                for r in [0.3 * l, l, 1.7 * l] {
                    let a = ball_intersection_volume_by(d, l, r, LensMethod::Direct, &opts).unwrap();
                    let b = ball_intersection_volume_by(d, l, r, LensMethod::SegmentCone, &opts).unwrap();
                    assert!((a - b).abs() / a < 1e-8, "d={d} L={l} r={r}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn sin_powers() {
        for m in 0..8 {
            for a in [0.2, 1.0, 2.5, std::f64::consts::PI] {
                let q = fixed_gk(|t: f64| t.sin().powi(m), 0.0, a, 16);
                assert!((sin_power_integral(m as usize, a) - q).abs() < 1e-13, "m={m} a={a}");
            }
        }
    }

    #[test]
    fn triangles() {
        let t = Triangle::from_sides(1.0f64, 1.0, 1.0).unwrap();
        assert!((t.angles[0] - t.angles[1]).abs() < 1e-13 && (t.angles[1] - t.angles[2]).abs() < 1e-13);
        let t = Triangle::from_sides(1.0f64, 1.5, 2.0).unwrap();
        let r = triangle_checks(t.sides, t.angles).unwrap();
        assert!(r.sine_rule < 1e-10 && r.cosine_rule < 1e-10 && r.right_angle < 1e-10, "{r:?}");
        assert!(r.area_residual < 1e-9, "{r:?}");
        assert!(solve_angles(1.0, 1.0, 3.0).is_err());
    }

    #[test]
    fn right_triangle_identity() {
        // Legs a, b with right angle at C: cosh c = cosh a cosh b.
        let (a, b) = (0.7f64, 1.2f64);
        let c = (a.cosh() * b.cosh()).acosh();
        let ang = solve_angles(a, b, c).unwrap();
        assert!((ang[2] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((ang[0].cos() - b.tanh() / c.tanh()).abs() < 1e-12);
    }

    #[test]
    fn generic_f32_paths() {
        let v: f32 = ball_volume(3, 1.0f32).unwrap();
        assert!((v - std::f32::consts::PI * (2f32.sinh() - 2.0)).abs() < 1e-4);
        let x = HPoint::new(vec![0.5f32, 0.0]).unwrap();
        assert!((dist(&x, &HPoint::origin(2)).unwrap() - 3f32.ln()).abs() < 1e-6);
    }
}
