//! Random connection graphs over point clouds, clusters and lazy explorations.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::models::{effective_range, AdjacencySpec, Family};
use crate::sampler::{tag, PointCloud, Seed};
use crate::transform::Radial;

/// Relative tail mass ignored when a profile has unbounded support.
pub const EDGE_TAIL_EPS: f64 = 1e-9;

/// Distance beyond which no edge is ever drawn.
pub fn edge_range(spec: &AdjacencySpec<f64>) -> Result<f64> {
    let s = spec.support();
    if s.is_finite() {
        Ok(s)
    } else {
        effective_range(spec, EDGE_TAIL_EPS)
    }
}

/// Pair-keyed edge decisions: the outcome for `{i, j}` depends only on
/// `(seed, min(i,j), max(i,j))` and the distance.
#[derive(Clone)]
pub struct EdgeRule<'a> {
    spec: &'a AdjacencySpec<f64>,
    range: f64,
    boolean: Option<f64>,
    base: ChaCha8Rng,
}

impl<'a> EdgeRule<'a> {
    pub fn new(spec: &'a AdjacencySpec<f64>, seed: Seed) -> Result<Self> {
        let boolean = match spec.family {
            Family::BooleanDisc { l } => Some(l),
            _ => None,
        };
        Ok(EdgeRule { spec, range: edge_range(spec)?, boolean, base: seed.rng(tag::EDGES) })
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    /// Uniform variate attached to the unordered pair.
    pub fn pair_uniform(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (i.min(j) as u64, i.max(j) as u64);
        let mut r = self.base.clone();
        r.set_stream((a << 32) | (b & 0xffff_ffff));
        r.set_word_pos(0);
        r.random::<f64>()
    }

    #[inline]
    pub fn connects(&self, i: usize, j: usize, dist: f64) -> bool {
        if dist > self.range {
            return false;
        }
        if let Some(l) = self.boolean {
            return dist < l;
        }
        let p = self.spec.phi(dist);
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.pair_uniform(i, j) < p
        }
    }
}

struct Shell {
    r_lo: f64,
    keys: Vec<f64>,
    ids: Vec<u32>,
}

/// Radial shells of width `range`, each sorted by an angular key (the polar
/// angle in d=2, the angle to the first axis otherwise), so a query only scans
/// an angular window that can contain points within `range`.
pub struct SpatialIndex {
    range: f64,
    width: f64,
    wrap: bool,
    shells: Vec<Shell>,
    keys: Vec<f64>,
}

fn angular_key(u: &[f64]) -> f64 {
    if u.len() == 2 {
        u[1].atan2(u[0])
    } else {
        u[0].clamp(-1.0, 1.0).acos()
    }
}

impl SpatialIndex {
    pub fn new(cloud: &PointCloud, range: f64) -> Self {
        let r_max = cloud.radii().iter().copied().fold(cloud.r_ball, f64::max);
        let width = if range > 0.0 { range.max(r_max / 4096.0) } else { r_max.max(1.0) };
        let nshell = (r_max / width).floor() as usize + 1;
        let keys: Vec<f64> = (0..cloud.len()).map(|i| angular_key(cloud.direction(i))).collect();
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); nshell];
        for i in 0..cloud.len() {
            let k = ((cloud.radius(i) / width) as usize).min(nshell - 1);
            buckets[k].push(i as u32);
        }
        let shells = buckets
            .into_iter()
            .enumerate()
            .map(|(k, mut ids)| {
                ids.sort_by(|&a, &b| keys[a as usize].total_cmp(&keys[b as usize]).then(a.cmp(&b)));
                Shell { r_lo: k as f64 * width, keys: ids.iter().map(|&i| keys[i as usize]).collect(), ids }
            })
            .collect();
        SpatialIndex { range, width, wrap: cloud.d == 2, shells, keys }
    }

    /// Calls `f(j)` for every `j != i` that may lie within `range` of point `i`.
    pub fn candidates(&self, cloud: &PointCloud, i: usize, mut f: impl FnMut(usize)) {
        let r1 = cloud.radius(i);
        let key = self.keys[i];
        let lo = ((r1 - self.range).max(0.0) / self.width) as usize;
        let hi = (((r1 + self.range) / self.width) as usize).min(self.shells.len() - 1);
        let c = 2.0 * (0.5 * self.range).sinh().powi(2);
        for sh in &self.shells[lo.min(hi)..=hi] {
            if sh.ids.is_empty() {
                continue;
            }
            let r2 = sh.r_lo.max(r1 - self.range);
            let bound = if r1 > 0.0 && r2 > 0.0 { c / (2.0 * r1.sinh() * r2.sinh()) } else { f64::INFINITY };
            let mut visit = |a: usize, b: usize| {
                for &j in &sh.ids[a..b] {
                    if j as usize != i {
                        f(j as usize);
                    }
                }
            };
            if bound >= 1.0 {
                visit(0, sh.ids.len());
                continue;
            }
            let delta = 2.0 * bound.sqrt().asin() * (1.0 + 1e-9) + 1e-12;
            let pos = |x: f64| sh.keys.partition_point(|&k| k < x);
            let end = |x: f64| sh.keys.partition_point(|&k| k <= x);
            let pi = std::f64::consts::PI;
            if self.wrap && delta >= pi {
                visit(0, sh.ids.len());
            } else if self.wrap && key - delta < -pi {
                visit(0, end(key + delta));
                visit(pos(key - delta + 2.0 * pi).max(end(key + delta)), sh.ids.len());
            } else if self.wrap && key + delta > pi {
                let a = pos(key - delta);
                visit(0, end(key + delta - 2.0 * pi).min(a));
                visit(a, sh.ids.len());
            } else {
                visit(pos(key - delta), end(key + delta));
            }
        }
    }

    /// Calls `f(j)` for every neighbour `j` of `i` under `rule`.
    pub fn neighbours(&self, cloud: &PointCloud, rule: &EdgeRule, i: usize, mut f: impl FnMut(usize)) {
        self.candidates(cloud, i, |j| {
            if rule.connects(i, j, cloud.dist(i, j)) {
                f(j)
            }
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Configuration {
    pub cloud: PointCloud,
    pub spec: AdjacencySpec<f64>,
    /// Sorted pairs `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
    pub seed: Seed,
}

pub fn build_graph(cloud: &PointCloud, spec: &AdjacencySpec<f64>, seed: Seed) -> Result<Configuration> {
    if spec.d != cloud.d {
        return argument(format!("spec dimension {} differs from cloud dimension {}", spec.d, cloud.d));
    }
    let rule = EdgeRule::new(spec, seed)?;
    let index = SpatialIndex::new(cloud, rule.range());
    let per_point: Vec<Vec<(usize, usize)>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let mut v = Vec::new();
            index.candidates(cloud, i, |j| {
                if j > i && rule.connects(i, j, cloud.dist(i, j)) {
                    v.push((i, j));
                }
            });
            v.sort_unstable();
            v
        })
        .collect();
    let edges = per_point.into_iter().flatten().collect();
    Ok(Configuration { cloud: cloud.clone(), spec: spec.clone(), edges, seed })
}

/// Reference construction scanning all pairs.
pub fn build_graph_naive(cloud: &PointCloud, spec: &AdjacencySpec<f64>, seed: Seed) -> Result<Configuration> {
    let rule = EdgeRule::new(spec, seed)?;
    let mut edges = Vec::new();
    for i in 0..cloud.len() {
        for j in i + 1..cloud.len() {
            if rule.connects(i, j, cloud.dist(i, j)) {
                edges.push((i, j));
            }
        }
    }
    Ok(Configuration { cloud: cloud.clone(), spec: spec.clone(), edges, seed })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLabels {
    /// Label per point; labels are numbered by their smallest member.
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        match self.rank[a].cmp(&self.rank[b]) {
            Ordering::Less => self.parent[a] = b,
            Ordering::Greater => self.parent[b] = a,
            Ordering::Equal => {
                self.parent[b] = a;
                self.rank[a] += 1;
            }
        }
    }
}

pub fn cluster_labels(n: usize, edges: &[(usize, usize)]) -> Result<ClusterLabels> {
    let mut uf = UnionFind::new(n);
    for &(a, b) in edges {
        if a >= n || b >= n {
            return argument(format!("edge ({a}, {b}) out of range for {n} points"));
        }
        uf.union(a, b);
    }
    let mut label_of_root = vec![usize::MAX; n];
    let mut labels = vec![0; n];
    let mut sizes = Vec::new();
    for (i, l) in labels.iter_mut().enumerate() {
        let r = uf.find(i);
        if label_of_root[r] == usize::MAX {
            label_of_root[r] = sizes.len();
            sizes.push(0);
        }
        *l = label_of_root[r];
        sizes[*l] += 1;
    }
    Ok(ClusterLabels { labels, sizes })
}

pub fn clusters(config: &Configuration) -> Result<ClusterLabels> {
    cluster_labels(config.cloud.len(), &config.edges)
}

/// Index of the palm point at the origin.
pub fn origin_index(cloud: &PointCloud) -> Result<usize> {
    cloud
        .palm_indices
        .iter()
        .copied()
        .find(|&i| cloud.radius(i) == 0.0)
        .ok_or_else(|| crate::Error::Argument("the origin is not a palm point of the cloud".into()))
}

/// Whether the cluster of `o` contains a point at distance `>= shell` from `o`.
pub fn origin_cluster_reaches(config: &Configuration, labels: &ClusterLabels, shell: f64) -> Result<bool> {
    let o = origin_index(&config.cloud)?;
    if labels.labels.len() != config.cloud.len() {
        return argument("labels do not match the configuration");
    }
    let lo = labels.labels[o];
    Ok((0..config.cloud.len()).any(|i| labels.labels[i] == lo && config.cloud.radius(i) >= shell))
}

pub fn degree_of(config: &Configuration, index: usize) -> Result<usize> {
    if index >= config.cloud.len() {
        return argument(format!("index {index} out of range"));
    }
    Ok(config.edges.iter().filter(|&&(a, b)| a == index || b == index).count())
}

/// Neighbours of `i` by a direct scan, without building the graph.
pub fn incident(cloud: &PointCloud, rule: &EdgeRule, i: usize) -> Vec<usize> {
    (0..cloud.len()).filter(|&j| j != i && rule.connects(i, j, cloud.dist(i, j))).collect()
}

/// Breadth-first search from `start` until `stop(j)` holds for a visited point.
pub fn explore_until(
    cloud: &PointCloud,
    rule: &EdgeRule,
    index: &SpatialIndex,
    start: usize,
    mut stop: impl FnMut(usize) -> bool,
) -> bool {
    if stop(start) {
        return true;
    }
    let mut seen = vec![false; cloud.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        let mut hit = false;
        index.neighbours(cloud, rule, i, |j| {
            if !hit && !seen[j] {
                seen[j] = true;
                if stop(j) {
                    hit = true;
                }
                queue.push_back(j);
            }
        });
        if hit {
            return true;
        }
    }
    false
}

#[derive(PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Smallest `t` such that `start` connects to a point of radius `>= shell`
/// through points of weight `<= t` (the start point's weight is ignored);
/// `inf` if no such path exists.
pub fn bottleneck_to_shell(
    cloud: &PointCloud,
    rule: &EdgeRule,
    index: &SpatialIndex,
    start: usize,
    weights: &[f64],
    shell: f64,
) -> f64 {
    let mut best = vec![f64::INFINITY; cloud.len()];
    let mut done = vec![false; cloud.len()];
    best[start] = 0.0;
    let mut heap = BinaryHeap::from([Key(0.0, start)]);
    while let Some(Key(t, i)) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        if cloud.radius(i) >= shell {
            return t;
        }
        index.neighbours(cloud, rule, i, |j| {
            if !done[j] {
                let k = t.max(weights[j]);
                if k < best[j] {
                    best[j] = k;
                    heap.push(Key(k, j));
                }
            }
        });
    }
    f64::INFINITY
}
