//! Poisson point processes in hyperbolic balls, keyed by `(root, stream)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Error, Result};
use crate::geometry::{acosh1p, ball_volume, check_dim, sinh_power_integral, HPoint};

/// Largest expected point count `sample_ppp` accepts.
pub const DEFAULT_POINT_CAP: f64 = 1e7;

/// Stream tags separating independent uses of one seed.
pub mod tag {
    pub const POINTS: u64 = 1;
    pub const EDGES: u64 = 2;
    pub const MARKS: u64 = 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seed {
    pub root: u64,
    pub stream: u64,
}

impl Seed {
    pub fn new(root: u64, stream: u64) -> Self {
        Seed { root, stream }
    }

    /// ChaCha8 keyed by `(root, stream, tag)`; distinct keys give independent streams.
    pub fn rng(&self, tag: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.root.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream.to_le_bytes());
        key[16..24].copy_from_slice(&tag.to_le_bytes());
        key[24..].copy_from_slice(b"hyperrcm");
        ChaCha8Rng::from_seed(key)
    }
}

/// Points of a hyperbolic ball `B_R(o)`, stored in polar form.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub d: usize,
    pub r_ball: f64,
    radii: Vec<f64>,
    /// Unit directions, `d` entries per point.
    dirs: Vec<f64>,
    pub palm_indices: Vec<usize>,
}

impl PointCloud {
    pub fn empty(d: usize, r_ball: f64) -> Result<Self> {
        check_dim(d)?;
        if !(r_ball > 0.0) || !r_ball.is_finite() {
            return argument("ball radius R must be positive and finite");
        }
        Ok(PointCloud { d, r_ball, radii: Vec::new(), dirs: Vec::new(), palm_indices: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn direction(&self, i: usize) -> &[f64] {
        &self.dirs[i * self.d..(i + 1) * self.d]
    }

    pub fn point(&self, i: usize) -> Result<HPoint<f64>> {
        HPoint::from_polar(self.radii[i], self.direction(i))
    }

    pub fn points(&self) -> Result<Vec<HPoint<f64>>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Ball coordinates `tanh(r/2) u`.
    pub fn ball_coords(&self, i: usize) -> Vec<f64> {
        let t = (self.radii[i] * 0.5).tanh();
        self.direction(i).iter().map(|x| x * t).collect()
    }

    /// Hyperbolic distance between points `i` and `j`.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        polar_dist(self.radii[i], self.direction(i), self.radii[j], self.direction(j))
    }

    fn push(&mut self, r: f64, u: &[f64]) {
        self.radii.push(r);
        self.dirs.extend_from_slice(u);
    }
}

/// `cosh d = cosh(r1 - r2) + sinh r1 sinh r2 |u1 - u2|^2 / 2`, evaluated via `acosh1p`.
#[inline]
pub fn polar_dist(r1: f64, u1: &[f64], r2: f64, u2: &[f64]) -> f64 {
    let chord2: f64 = u1.iter().zip(u2).map(|(a, b)| (a - b) * (a - b)).sum();
    let dr = r1 - r2;
    // cosh(dr) - 1 = 2 sinh^2(dr/2)
    let s = (dr * 0.5).sinh();
    let delta = 2.0 * s * s + r1.sinh() * r2.sinh() * chord2 * 0.5;
    acosh1p(delta)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CloudRepr {
    d: usize,
    #[serde(rename = "R")]
    r_ball: f64,
    points: Vec<Vec<f64>>,
    #[serde(default)]
    palm_indices: Vec<usize>,
}

impl Serialize for PointCloud {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CloudRepr {
            d: self.d,
            r_ball: self.r_ball,
            points: (0..self.len()).map(|i| self.ball_coords(i)).collect(),
            palm_indices: self.palm_indices.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PointCloud {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = CloudRepr::deserialize(de)?;
        let mut c = PointCloud::empty(r.d, r.r_ball).map_err(D::Error::custom)?;
        for x in r.points {
            let p = HPoint::new(x).map_err(D::Error::custom)?;
            if p.dim() != r.d {
                return Err(D::Error::custom("point dimension differs from d"));
            }
            c.push_point(&p);
        }
        if r.palm_indices.iter().any(|&i| i >= c.len()) {
            return Err(D::Error::custom("palm index out of range"));
        }
        c.palm_indices = r.palm_indices;
        Ok(c)
    }
}

impl PointCloud {
    fn push_point(&mut self, p: &HPoint<f64>) {
        let n = p.norm();
        let r = p.radius();
        if n == 0.0 {
            let mut u = vec![0.0; self.d];
            u[0] = 1.0;
            self.push(0.0, &u);
        } else {
            let u: Vec<f64> = p.coords().iter().map(|x| x / n).collect();
            self.push(r, &u);
        }
    }
}

/// Inverse CDF of the radial law `sinh^{d-1}(r) / int_0^R sinh^{d-1}` on `[0, R]`.
pub struct RadialSampler {
    d: usize,
    r_ball: f64,
    total: f64,
    /// Nodes `(r_k, F(r_k), F'(r_k))`, only for d >= 3.
    table: Vec<(f64, f64, f64)>,
}

const TABLE_NODES: usize = 4096;

impl RadialSampler {
    pub fn new(d: usize, r_ball: f64) -> Result<Self> {
        check_dim(d)?;
        let total = sinh_power_integral(d - 1, r_ball);
        let mut s = RadialSampler { d, r_ball, total, table: Vec::new() };
        if d >= 3 {
            s.table = (0..TABLE_NODES)
                .map(|k| {
                    let r = r_ball * k as f64 / (TABLE_NODES - 1) as f64;
                    (r, s.cdf(r), s.density(r))
                })
                .collect();
            s.table.last_mut().unwrap().1 = 1.0;
        }
        Ok(s)
    }

    pub fn cdf(&self, r: f64) -> f64 {
        if self.d == 2 {
            let a = (r.clamp(0.0, self.r_ball) * 0.5).sinh() / (self.r_ball * 0.5).sinh();
            return a * a;
        }
        (sinh_power_integral(self.d - 1, r.clamp(0.0, self.r_ball)) / self.total).min(1.0)
    }

    pub fn density(&self, r: f64) -> f64 {
        r.sinh().powi(self.d as i32 - 1) / self.total
    }

    pub fn inverse(&self, u: f64) -> f64 {
        if self.d == 2 {
            return 2.0 * (u.sqrt() * (self.r_ball * 0.5).sinh()).asinh();
        }
        let t = &self.table;
        let k = t.partition_point(|n| n.1 <= u).clamp(1, t.len() - 1) - 1;
        let (r0, f0, p0) = t[k];
        let (r1, f1, p1) = t[k + 1];
        let h = f1 - f0;
        if h <= 0.0 {
            return r0;
        }
        // Hermite interpolation of r(F) with slopes 1/F'.
        let secant = (r1 - r0) / h;
        let m0 = if p0 > 0.0 { (1.0 / p0).min(3.0 * secant) } else { 0.0 };
        let m1 = if p1 > 0.0 { (1.0 / p1).min(3.0 * secant) } else { 0.0 };
        let s = (u - f0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let mut r = (2.0 * s3 - 3.0 * s2 + 1.0) * r0
            + (s3 - 2.0 * s2 + s) * h * m0
            + (-2.0 * s3 + 3.0 * s2) * r1
            + (s3 - s2) * h * m1;
        let p = self.density(r);
        if p > 0.0 {
            r -= (self.cdf(r) - u) / p;
        }
        r.clamp(r0, r1)
    }
}

/// Uniform direction on `S^{d-1}`.
pub fn random_direction<R: Rng>(rng: &mut R, d: usize, out: &mut [f64]) {
    if d == 2 {
        let th = rng.random::<f64>() * std::f64::consts::TAU;
        out[0] = th.cos();
        out[1] = th.sin();
        return;
    }
    loop {
        let mut n2 = 0.0;
        for x in out.iter_mut() {
            *x = StandardNormal.sample(rng);
            n2 += *x * *x;
        }
        if n2 > 1e-300 {
            let n = n2.sqrt();
            out.iter_mut().for_each(|x| *x /= n);
            return;
        }
    }
}

pub fn sample_ppp(d: usize, lambda: f64, r_ball: f64, seed: Seed) -> Result<PointCloud> {
    sample_ppp_capped(d, lambda, r_ball, seed, DEFAULT_POINT_CAP)
}

pub fn sample_ppp_capped(d: usize, lambda: f64, r_ball: f64, seed: Seed, cap: f64) -> Result<PointCloud> {
    let sampler = RadialSampler::new(d, r_ball)?;
    sample_with(&sampler, lambda, seed, cap)
}

/// Like [`sample_ppp`] with a prebuilt radial table (reused across replicas).
pub fn sample_with(sampler: &RadialSampler, lambda: f64, seed: Seed, cap: f64) -> Result<PointCloud> {
    let (d, r_ball) = (sampler.d, sampler.r_ball);
    let mut cloud = PointCloud::empty(d, r_ball)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return domain("intensity must be finite and >= 0");
    }
    let mean = lambda * ball_volume(d, r_ball)?;
    if mean > cap {
        return Err(Error::Resource(format!("expected {mean:.3e} points exceeds cap {cap:.3e}")));
    }
    if mean == 0.0 {
        return Ok(cloud);
    }
    let mut rng = seed.rng(tag::POINTS);
    let n = Poisson::new(mean).map_err(|e| Error::Domain(e.to_string()))?.sample(&mut rng) as usize;
    cloud.radii.reserve(n);
    cloud.dirs.reserve(n * d);
    let mut u = vec![0.0; d];
    for _ in 0..n {
        let r = sampler.inverse(rng.random::<f64>());
        random_direction(&mut rng, d, &mut u);
        cloud.push(r, &u);
    }
    Ok(cloud)
}

/// Append deterministic points (multiset semantics) and record them as palm points.
pub fn add_palm(cloud: &PointCloud, points: &[HPoint<f64>]) -> Result<PointCloud> {
    let mut c = cloud.clone();
    for p in points {
        if p.dim() != c.d {
            return argument(format!("palm point dimension {} differs from d={}", p.dim(), c.d));
        }
        if p.radius() > c.r_ball * (1.0 + 1e-12) {
            return argument(format!("palm point at radius {} outside B_R, R={}", p.radius(), c.r_ball));
        }
        c.palm_indices.push(c.len());
        c.push_point(p);
    }
    Ok(c)
}

/// Append the origin as a palm point; returns its index.
pub fn add_origin(cloud: &mut PointCloud) -> usize {
    let i = cloud.len();
    let mut u = vec![0.0; cloud.d];
    u[0] = 1.0;
    cloud.push(0.0, &u);
    cloud.palm_indices.push(i);
    i
}

/// Append a palm point at polar position `(r, u)`; returns its index.
pub fn add_palm_polar(cloud: &mut PointCloud, r: f64, u: &[f64]) -> Result<usize> {
    if u.len() != cloud.d || !(r >= 0.0) || r > cloud.r_ball * (1.0 + 1e-12) {
        return argument("palm point outside B_R or of wrong dimension");
    }
    let i = cloud.len();
    cloud.push(r, u);
    cloud.palm_indices.push(i);
    Ok(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_is_empty() {
        assert!(sample_ppp(2, 0.0, 3.0, Seed::new(1, 0)).unwrap().is_empty());
        assert!(sample_ppp(2, -1.0, 3.0, Seed::new(1, 0)).is_err());
    }

    #[test]
    fn deterministic_and_inside_ball() {
        let a = sample_ppp(3, 0.5, 3.0, Seed::new(7, 3)).unwrap();
        let b = sample_ppp(3, 0.5, 3.0, Seed::new(7, 3)).unwrap();
        assert_eq!(a, b);
        assert!(a.len() > 10);
        assert!(a.radii().iter().all(|&r| (0.0..=3.0).contains(&r)));
        let c = sample_ppp(3, 0.5, 3.0, Seed::new(7, 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn inverse_cdf_roundtrip() {
        for d in [2, 3, 5] {
            let s = RadialSampler::new(d, 6.0).unwrap();
            for u in [1e-9, 1e-4, 0.1, 0.5, 0.9, 0.999999] {
                let r = s.inverse(u);
                assert!((s.cdf(r) - u).abs() < 1e-9 * u.max(1e-3), "d={d} u={u}");
            }
        }
    }

    #[test]
    fn polar_distance_matches_ball_model() {
        let c = sample_ppp(2, 1.0, 4.0, Seed::new(2, 2)).unwrap();
        for i in 0..c.len().min(20) {
            for j in 0..c.len().min(20) {
                let want = crate::geometry::dist(&c.point(i).unwrap(), &c.point(j).unwrap()).unwrap();
                assert!((c.dist(i, j) - want).abs() < 1e-9 * want.max(1.0));
            }
        }
    }

    #[test]
    fn cap_enforced() {
        let e = sample_ppp_capped(2, 1.0, 10.0, Seed::default(), 100.0).unwrap_err();
        assert!(matches!(e, Error::Resource(_)));
    }

    #[test]
    fn palm_points() {
        let c = PointCloud::empty(2, 2.0).unwrap();
        let o = HPoint::origin(2);
        let c = add_palm(&c, &[o.clone(), o.clone()]).unwrap();
        assert_eq!(c.palm_indices, vec![0, 1]);
        let edge = HPoint::from_polar(2.0, &[0.0, 1.0]).unwrap();
        assert!(add_palm(&c, &[edge]).is_ok());
        let out = HPoint::from_polar(2.1, &[0.0, 1.0]).unwrap();
        assert!(add_palm(&c, &[out]).is_err());
    }

    #[test]
    fn json_roundtrip_keeps_points() {
        let c = sample_ppp(2, 0.3, 3.0, Seed::new(9, 9)).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        let back: PointCloud = serde_json::from_str(&s).unwrap();
        assert_eq!(back.len(), c.len());
        for i in 0..c.len() {
            assert!((back.radius(i) - c.radius(i)).abs() < 1e-9);
        }
    }
}
