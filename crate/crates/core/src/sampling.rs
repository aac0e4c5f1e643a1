//! Box domains, boundary segments and seeded collocation sets.
//!
//! Point arrays are flat `n × d` buffers. Grids are row-major with the last
//! axis varying fastest.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::deterministic_reduce;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let d = BoxDomain { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() || !(1..=3).contains(&self.lo.len()) {
            return Err(Error::config("domain bounds must have equal length between 1 and 3"));
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(l < h)) {
            return Err(Error::config(format!("domain needs lo < hi on every axis, got {:?} / {:?}", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn contains_open(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, &v)| self.lo[i] < v && v < self.hi[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Dirichlet,
    Neumann,
    Noslip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disk {
    /// Center in the free coordinates of the face (increasing axis order).
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Disk {
    fn contains(&self, free: &[f64]) -> bool {
        free.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>() < self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentShape {
    /// Product of intervals over the free axes (increasing axis order).
    Rect { ranges: Vec<[f64; 2]> },
    /// Disk on a face of a 3-d box.
    Disk { disk: Disk },
    /// Rectangle with disks removed.
    RectMinusDisks { ranges: Vec<[f64; 2]>, holes: Vec<Disk> },
}

/// Closed-form prescribed field on a boundary segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    Constant { value: Vec<f64> },
    /// Only `component` is nonzero: `peak - curvature * (x[axis] - center)^2`.
    Parabolic {
        component: usize,
        axis: usize,
        center: f64,
        peak: f64,
        curvature: f64,
    },
    /// Only `component` is nonzero: `peak * (1 - r^2 / radius^2)` with `r`
    /// the distance to `center` across the axes other than `component`.
    Paraboloid {
        component: usize,
        center: Vec<f64>,
        radius: f64,
        peak: f64,
    },
}

impl Profile {
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match self {
            Profile::Zero => {}
            Profile::Constant { value } => out.copy_from_slice(value),
            Profile::Parabolic {
                component,
                axis,
                center,
                peak,
                curvature,
            } => {
                let t = x[*axis] - center;
                out[*component] = peak - curvature * t * t;
            }
            Profile::Paraboloid {
                component,
                center,
                radius,
                peak,
            } => {
                let r2: f64 = (0..x.len())
                    .filter(|&k| k != *component)
                    .map(|k| (x[k] - center[k]) * (x[k] - center[k]))
                    .sum();
                out[*component] = peak * (1.0 - r2 / (radius * radius));
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let ok = match self {
            Profile::Zero => true,
            Profile::Constant { value } => value.len() == dim,
            Profile::Parabolic { component, axis, .. } => *component < dim && *axis < dim,
            Profile::Paraboloid {
                component,
                center,
                radius,
                ..
            } => *component < dim && center.len() == dim && *radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("profile {self:?} is inconsistent with dimension {dim}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySegment {
    pub name: String,
    pub kind: SegmentKind,
    pub fixed_axis: usize,
    pub fixed_value: f64,
    pub shape: SegmentShape,
    pub profile: Profile,
    /// Sample count; zero means the segment is handled by construction.
    pub points: usize,
}

impl BoundarySegment {
    pub fn validate(&self, domain: &BoxDomain) -> Result<()> {
        let d = domain.dim();
        let err = |msg: String| Err(Error::config(format!("segment `{}`: {msg}", self.name)));
        if self.fixed_axis >= d {
            return err(format!("fixed axis {} out of range", self.fixed_axis));
        }
        let a = self.fixed_axis;
        if self.fixed_value != domain.lo[a] && self.fixed_value != domain.hi[a] {
            return err(format!("fixed value {} is not a face of axis {a}", self.fixed_value));
        }
        let free: Vec<usize> = (0..d).filter(|&k| k != a).collect();
        let check_ranges = |ranges: &Vec<[f64; 2]>| -> Result<()> {
            if ranges.len() != free.len() {
                return Err(Error::config(format!("segment `{}`: needs {} ranges", self.name, free.len())));
            }
            for (r, &k) in ranges.iter().zip(&free) {
                if !(r[0] < r[1]) || r[0] < domain.lo[k] || r[1] > domain.hi[k] {
                    return Err(Error::config(format!(
                        "segment `{}`: range {:?} not inside axis {k} of the domain",
                        self.name, r
                    )));
                }
            }
            Ok(())
        };
        let check_disk = |disk: &Disk| -> Result<()> {
            if d != 3 || disk.center.len() != 2 || !(disk.radius > 0.0) {
                return Err(Error::config(format!("segment `{}`: disks need a 3-d domain and a 2-d center", self.name)));
            }
            for (c, &k) in disk.center.iter().zip(&free) {
                if c - disk.radius < domain.lo[k] || c + disk.radius > domain.hi[k] {
                    return Err(Error::config(format!("segment `{}`: disk leaves the face", self.name)));
                }
            }
            Ok(())
        };
        match &self.shape {
            SegmentShape::Rect { ranges } => check_ranges(ranges)?,
            SegmentShape::Disk { disk } => check_disk(disk)?,
            SegmentShape::RectMinusDisks { ranges, holes } => {
                check_ranges(ranges)?;
                for h in holes {
                    check_disk(h)?;
                }
            }
        }
        self.profile.validate(d)?;
        if self.measure() <= 0.0 {
            return err("non-positive measure".into());
        }
        Ok(())
    }

    fn free_axes(&self, dim: usize) -> Vec<usize> {
        (0..dim).filter(|&k| k != self.fixed_axis).collect()
    }

    /// Length (2-d) or area (3-d) of the segment; 1 for a point in 1-d.
    pub fn measure(&self) -> f64 {
        let rect = |ranges: &[[f64; 2]]| ranges.iter().map(|r| r[1] - r[0]).product::<f64>();
        let disk = |d: &Disk| std::f64::consts::PI * d.radius * d.radius;
        match &self.shape {
            SegmentShape::Rect { ranges } => rect(ranges),
            SegmentShape::Disk { disk: d } => disk(d),
            SegmentShape::RectMinusDisks { ranges, holes } => rect(ranges) - holes.iter().map(disk).sum::<f64>(),
        }
    }

    /// Outward unit normal of the face the segment lies on.
    pub fn normal(&self, domain: &BoxDomain) -> Vec<f64> {
        let mut n = vec![0.0; domain.dim()];
        n[self.fixed_axis] = if self.fixed_value == domain.hi[self.fixed_axis] { 1.0 } else { -1.0 };
        n
    }
}

pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over (seed, stream)
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.sample(Open01);
    lo + (hi - lo) * u
}

/// `n` i.i.d. uniform points in the open box.
pub fn sample_interior(domain: &BoxDomain, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = domain.dim();
    let mut out = Vec::with_capacity(n * d);
    for _ in 0..n {
        for k in 0..d {
            out.push(uniform_in(&mut rng, domain.lo[k], domain.hi[k]));
        }
    }
    out
}

/// `n` uniform points on a segment, fixed coordinate pinned exactly.
pub fn sample_boundary(segment: &BoundarySegment, domain: &BoxDomain, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = domain.dim();
    let free = segment.free_axes(d);
    let bbox: Vec<[f64; 2]> = match &segment.shape {
        SegmentShape::Rect { ranges } | SegmentShape::RectMinusDisks { ranges, .. } => ranges.clone(),
        SegmentShape::Disk { disk } => disk.center.iter().map(|c| [c - disk.radius, c + disk.radius]).collect(),
    };
    let mut out = Vec::with_capacity(n * d);
    let mut x = vec![0.0; d];
    let mut fx = vec![0.0; free.len()];
    let mut accepted = 0;
    while accepted < n {
        for (j, r) in bbox.iter().enumerate() {
            fx[j] = uniform_in(&mut rng, r[0], r[1]);
        }
        let keep = match &segment.shape {
            SegmentShape::Rect { .. } => true,
            SegmentShape::Disk { disk } => disk.contains(&fx),
            SegmentShape::RectMinusDisks { holes, .. } => !holes.iter().any(|h| h.contains(&fx)),
        };
        if !keep {
            continue;
        }
        x[segment.fixed_axis] = segment.fixed_value;
        for (j, &k) in free.iter().enumerate() {
            x[k] = fx[j];
        }
        out.extend_from_slice(&x);
        accepted += 1;
    }
    out
}

/// Tensor grid including endpoints, last axis fastest.
pub fn eval_grid(domain: &BoxDomain, resolution: &[usize]) -> Result<Vec<f64>> {
    grid(domain, resolution, false)
}

/// Cell-centred tensor grid (midpoint rule nodes), last axis fastest.
pub fn midpoint_grid(domain: &BoxDomain, resolution: &[usize]) -> Result<Vec<f64>> {
    grid(domain, resolution, true)
}

/// Cell midpoints each moved to a uniform random position inside their cell.
pub fn stratified_grid(domain: &BoxDomain, resolution: &[usize], seed: u64) -> Result<Vec<f64>> {
    let mut pts = grid(domain, resolution, true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = domain.dim();
    for x in pts.chunks_mut(d) {
        for k in 0..d {
            let h = (domain.hi[k] - domain.lo[k]) / resolution[k] as f64;
            x[k] += uniform_in(&mut rng, -0.5 * h, 0.5 * h);
        }
    }
    Ok(pts)
}

fn grid(domain: &BoxDomain, resolution: &[usize], centred: bool) -> Result<Vec<f64>> {
    let d = domain.dim();
    if resolution.len() != d {
        return Err(Error::config(format!("grid resolution needs {d} entries, got {}", resolution.len())));
    }
    let min = if centred { 1 } else { 2 };
    if resolution.iter().any(|&r| r < min) {
        return Err(Error::config(format!("grid resolution must be at least {min} per axis")));
    }
    let coord = |k: usize, i: usize| {
        let (lo, hi, r) = (domain.lo[k], domain.hi[k], resolution[k]);
        if centred {
            lo + (hi - lo) * (i as f64 + 0.5) / r as f64
        } else if i == r - 1 {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (r - 1) as f64
        }
    };
    let total: usize = resolution.iter().product();
    let mut out = Vec::with_capacity(total * d);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        for k in 0..d {
            out.push(coord(k, idx[k]));
        }
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < resolution[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(out)
}

/// `weight · Σ values` with `weight = measure / count`.
pub fn mc_estimate(values: &[f64], weight: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::numeric("mc_estimate", "no sample values"));
    }
    if !(weight > 0.0) {
        return Err(Error::config(format!("quadrature weight must be positive, got {weight}")));
    }
    Ok(weight * deterministic_reduce(values)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteriorSampling {
    Random { count: usize },
    /// Midpoints of a uniform cell grid.
    Grid { resolution: Vec<usize> },
    /// One uniform random point in every cell of a uniform grid.
    Stratified { resolution: Vec<usize> },
}

impl InteriorSampling {
    pub fn count(&self) -> usize {
        match self {
            InteriorSampling::Random { count } => *count,
            InteriorSampling::Grid { resolution } | InteriorSampling::Stratified { resolution } => {
                resolution.iter().product()
            }
        }
    }
}

/// Samples on one boundary segment.
#[derive(Debug, Clone)]
pub struct SegmentSamples {
    /// Index into the case's segment list.
    pub segment: usize,
    pub kind: SegmentKind,
    pub points: Vec<f64>,
    pub weight: f64,
    pub normal: Vec<f64>,
    /// Prescribed field at every point, `n × d`.
    pub prescribed: Vec<f64>,
}

impl SegmentSamples {
    pub fn len(&self) -> usize {
        self.points.len() / self.normal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Fixed collocation points of one run.
#[derive(Debug, Clone)]
pub struct CollocationSet {
    pub dim: usize,
    pub seed: u64,
    pub interior: Vec<f64>,
    pub interior_weight: f64,
    pub segments: Vec<SegmentSamples>,
}

impl CollocationSet {
    pub fn build(
        domain: &BoxDomain,
        interior: &InteriorSampling,
        segments: &[BoundarySegment],
        seed: u64,
    ) -> Result<Self> {
        domain.validate()?;
        let d = domain.dim();
        let pts = match interior {
            InteriorSampling::Random { count } => {
                if *count == 0 {
                    return Err(Error::config("interior sample count must be positive"));
                }
                sample_interior(domain, *count, sub_seed(seed, 0))
            }
            InteriorSampling::Grid { resolution } => midpoint_grid(domain, resolution)?,
            InteriorSampling::Stratified { resolution } => stratified_grid(domain, resolution, sub_seed(seed, 0))?,
        };
        let n = pts.len() / d;
        let mut segs = Vec::new();
        for (k, s) in segments.iter().enumerate() {
            s.validate(domain)?;
            if s.points == 0 {
                continue;
            }
            let points = sample_boundary(s, domain, s.points, sub_seed(seed, k as u64 + 1));
            let mut prescribed = vec![0.0; points.len()];
            for (x, g) in points.chunks(d).zip(prescribed.chunks_mut(d)) {
                s.profile.eval(x, g);
            }
            segs.push(SegmentSamples {
                segment: k,
                kind: s.kind,
                weight: s.measure() / s.points as f64,
                normal: s.normal(domain),
                points,
                prescribed,
            });
        }
        Ok(CollocationSet {
            dim: d,
            seed,
            interior_weight: domain.volume() / n as f64,
            interior: pts,
            segments: segs,
        })
    }

    pub fn interior_len(&self) -> usize {
        self.interior.len() / self.dim
    }
}
