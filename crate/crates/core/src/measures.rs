//! Hausdorff-measure engines for analytic sets, shades and meshes.

use std::f64::consts::PI;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Ball, Point, ShadeRegion, FLAT_TOL};
use crate::mesh::{simplex_distance, simplex_volume, SimplicialSet};
use crate::quadrature;
use crate::zoo::{AnalyticSet, Slab};

/// Cap on simultaneously tracked pieces in [`mesh_ball_measure`].
pub const DEFAULT_MAX_PIECES: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    SlicingQuadrature,
    Subdivision,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult {
    pub value: f64,
    pub abs_error: f64,
    pub method: Method,
    /// Quadrature panels, subdivision depth or sample count.
    pub samples_or_depth: usize,
}

impl MeasureResult {
    pub fn exact(value: f64) -> Self {
        Self { value, abs_error: 0.0, method: Method::ClosedForm, samples_or_depth: 0 }
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }

    /// Sum of two results; the method of a non-closed-form term wins.
    pub fn plus(self, other: MeasureResult) -> Self {
        let method = if self.method == Method::ClosedForm { other.method } else { self.method };
        Self {
            value: self.value + other.value,
            abs_error: self.abs_error + other.abs_error,
            method,
            samples_or_depth: self.samples_or_depth.max(other.samples_or_depth),
        }
    }

    pub fn scaled(self, k: f64) -> Self {
        Self { value: self.value * k, abs_error: self.abs_error * k.abs(), ..self }
    }
}

/// Length of `[lo, hi] ∩ [a, b]`.
fn overlap(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    (hi.min(b) - lo.max(a)).max(0.0)
}

/// `ℋᵈ(slab ∩ B)`: closed form for d = 1 and for full planes, slicing
/// along the base direction otherwise.
pub fn slab_ball_measure(slab: &Slab, ball: &Ball, tol: f64) -> MeasureResult {
    let c = slab.coords(&ball.center);
    let r = ball.radius;
    if c.h >= r {
        return MeasureResult::zero();
    }
    let rho = ((r - c.h) * (r + c.h)).sqrt();
    if slab.set_dim() == 1 {
        return MeasureResult::exact(overlap(slab.lo, slab.hi, c.t - rho, c.t + rho));
    }
    if slab.lo == f64::NEG_INFINITY && slab.hi == f64::INFINITY {
        return MeasureResult::exact(PI * rho * rho);
    }
    // s = s_c + ρ sin φ; the slice at s is the chord t_c ± ρ cos φ
    let (lo, hi, tc) = (slab.lo, slab.hi, c.t);
    let f = |phi: f64| {
        let w = rho * phi.cos();
        w * overlap(lo, hi, tc - w, tc + w)
    };
    let mut breaks = Vec::new();
    for edge in [lo, hi] {
        let q = (edge - tc).abs() / rho;
        if q.is_finite() && q < 1.0 {
            breaks.push(q.acos());
        }
    }
    let q = quadrature::integrate(f, 0.0, PI / 2.0, &breaks, tol / 2.0);
    MeasureResult {
        value: 2.0 * q.value,
        abs_error: 2.0 * q.abs_error,
        method: Method::SlicingQuadrature,
        samples_or_depth: q.panels,
    }
}

fn check_ball_dim(ambient: usize, ball: &Ball) -> Result<()> {
    if (ambient..4).any(|i| ball.center[i] != 0.0) {
        return Err(Error::DimensionMismatch { expected: ambient, found: 4 });
    }
    Ok(())
}

/// `ℋᵈ(set ∩ B)` to absolute error `tol`.
pub fn analytic_ball_measure(set: &AnalyticSet, ball: &Ball, tol: f64) -> Result<MeasureResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tolerance must be positive".into()));
    }
    check_ball_dim(set.ambient_dim(), ball)?;
    if set.has_overlaps() {
        return Err(Error::Unsupported("union with overlapping pieces".into()));
    }
    let n = set.pieces().len().max(1) as f64;
    let total = set
        .pieces()
        .iter()
        .map(|s| slab_ball_measure(s, ball, tol / n))
        .fold(MeasureResult::zero(), MeasureResult::plus);
    Ok(total)
}

/// `ℋᵈ(S_x ∩ B(x, r))` for a ball centered at the apex `x`.
pub fn shade_ball_measure(shade: &ShadeRegion, ball: &Ball, set_dim: usize, tol: f64) -> Result<MeasureResult> {
    if (ball.center - shade.apex).norm() > 1e-12 * (1.0 + shade.apex.norm()) {
        return Err(Error::OffApexBall);
    }
    let m = shade.flat.dim();
    if m >= set_dim {
        return Err(Error::PieceTooLarge { piece_dim: m, set_dim });
    }
    if m + 1 < set_dim || shade.is_degenerate() {
        return Ok(MeasureResult::zero());
    }
    let half = shade.as_half_flat()?;
    let slab = Slab::new(half.base, half.dir, 0.0, f64::INFINITY)?;
    Ok(slab_ball_measure(&slab, ball, tol))
}

/// Half-open angular intervals on `[0, 2π)`.
fn arc_constraint(a: f64, b: f64, c: f64) -> Vec<(f64, f64)> {
    // a + b cos θ + c sin θ ≥ 0
    let r = b.hypot(c);
    if a >= r {
        return vec![(0.0, 2.0 * PI)];
    }
    if a <= -r {
        return Vec::new();
    }
    let phi = c.atan2(b).rem_euclid(2.0 * PI);
    let g = (-a / r).clamp(-1.0, 1.0).acos();
    let (s, e) = (phi - g, phi + g);
    let mut out = Vec::new();
    for shift in [-2.0 * PI, 0.0, 2.0 * PI] {
        let (lo, hi) = ((s + shift).max(0.0), (e + shift).min(2.0 * PI));
        if hi > lo {
            out.push((lo, hi));
        }
    }
    out
}

fn intersect_arcs(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (l1, h1) in a {
        for (l2, h2) in b {
            let (lo, hi) = (l1.max(*l2), h1.min(*h2));
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// Length of `triangle ∩ ∂B(center, r)`.
fn triangle_sphere_arc(p: &[Point], center: &Point, r: f64) -> f64 {
    let u = p[1] - p[0];
    let v = p[2] - p[0];
    let e1 = u.normalize();
    let e2 = (v - e1 * e1.dot(&v)).normalize();
    let w = center - p[0];
    let (fx, fy) = (w.dot(&e1), w.dot(&e2));
    let h2 = (w - e1 * fx - e2 * fy).norm_squared();
    if h2 >= r * r {
        return 0.0;
    }
    let rho = (r * r - h2).sqrt();
    // barycentric coordinates λ1, λ2 of (x, y) from the 2x2 system
    let (bx, cx, cy) = (u.norm(), v.dot(&e1), v.dot(&e2));
    let det = bx * cy;
    // λ1 = (x·cy − y·cx)/det, λ2 = y·bx/det, λ0 = 1 − λ1 − λ2
    let l1 = (cy / det, -cx / det);
    let l2 = (0.0, bx / det);
    let l0 = (-(l1.0 + l2.0), -(l1.1 + l2.1));
    let mut arcs = vec![(0.0, 2.0 * PI)];
    for (k, (gx, gy)) in [(0.0, l1), (0.0, l2), (1.0, l0)] {
        let a = k + gx * fx + gy * fy;
        arcs = intersect_arcs(&arcs, &arc_constraint(a, gx * rho, gy * rho));
        if arcs.is_empty() {
            return 0.0;
        }
    }
    rho * arcs.iter().map(|(lo, hi)| hi - lo).sum::<f64>()
}

fn push_unique(points: &mut Vec<Point>, p: Point) {
    if points.iter().all(|q| (q - p).norm() > FLAT_TOL) {
        points.push(p);
    }
}

/// `ℋ^{d−1}(set ∩ ∂B(center, r))` for an analytic set: arcs for d = 2,
/// point counts for d = 1.
pub fn analytic_sphere_slice(set: &AnalyticSet, center: &Point, r: f64) -> Result<MeasureResult> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams("slice radius must be positive".into()));
    }
    if set.set_dim() == 2 {
        let mut total = 0.0;
        for slab in set.pieces() {
            let c = slab.coords(center);
            if c.h >= r {
                continue;
            }
            let rho = ((r - c.h) * (r + c.h)).sqrt();
            let q = |edge: f64| ((edge - c.t) / rho).clamp(-1.0, 1.0).acos();
            total += rho * 2.0 * (q(slab.lo) - q(slab.hi)).max(0.0);
        }
        return Ok(MeasureResult::exact(total));
    }
    let mut points = Vec::new();
    for slab in set.pieces() {
        let c = slab.coords(center);
        if c.h > r {
            continue;
        }
        let rho = ((r - c.h) * (r + c.h)).max(0.0).sqrt();
        for t in [c.t - rho, c.t + rho] {
            if t >= slab.lo - FLAT_TOL && t <= slab.hi + FLAT_TOL {
                push_unique(&mut points, slab.point_at(0.0, t));
            }
        }
    }
    Ok(MeasureResult::exact(points.len() as f64))
}

/// `ℋ^{d−1}(mesh ∩ ∂B(center, r))`, exact per simplex.
pub fn mesh_sphere_slice(mesh: &SimplicialSet, center: &Point, r: f64) -> Result<MeasureResult> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams("slice radius must be positive".into()));
    }
    if mesh.dim() == 2 {
        let arcs: Vec<f64> = (0..mesh.n_simplices())
            .into_par_iter()
            .map(|i| {
                let p = mesh.simplex_points(i);
                if simplex_distance(center, &p) >= r {
                    0.0
                } else {
                    triangle_sphere_arc(&p, center, r)
                }
            })
            .collect();
        return Ok(MeasureResult::exact(arcs.iter().sum()));
    }
    let mut points = Vec::new();
    for i in 0..mesh.n_simplices() {
        let p = mesh.simplex_points(i);
        let e = p[1] - p[0];
        let w = p[0] - center;
        let (a, b, c) = (e.norm_squared(), 2.0 * e.dot(&w), w.norm_squared() - r * r);
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        for s in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
            if (-1e-12..=1.0 + 1e-12).contains(&s) {
                push_unique(&mut points, p[0] + e * s.clamp(0.0, 1.0));
            }
        }
    }
    Ok(MeasureResult::exact(points.len() as f64))
}

#[derive(Clone, Copy)]
struct Piece {
    p: [Point; 3],
    k: usize,
    vol: f64,
}

enum Class {
    Inside(f64),
    Outside,
    Straddle(Piece),
}

fn classify(piece: Piece, ball: &Ball) -> Class {
    let pts = &piece.p[..piece.k];
    let r2 = ball.radius * ball.radius;
    if pts.iter().all(|v| (v - ball.center).norm_squared() <= r2) {
        return Class::Inside(piece.vol);
    }
    // cheap reject by the sphere about the centroid
    let g = pts.iter().sum::<Point>() / piece.k as f64;
    let spread = pts.iter().map(|v| (v - g).norm_squared()).fold(0.0, f64::max).sqrt();
    let gap = (g - ball.center).norm() - ball.radius;
    if gap >= spread || simplex_distance(&ball.center, pts) >= ball.radius {
        Class::Outside
    } else {
        Class::Straddle(piece)
    }
}

/// Midpoint split; children have equal volume.
fn split(piece: &Piece) -> ([Piece; 4], usize) {
    let p = &piece.p;
    if piece.k == 2 {
        let m = (p[0] + p[1]) * 0.5;
        let z = Point::zeros();
        let vol = 0.5 * piece.vol;
        let a = Piece { p: [p[0], m, z], k: 2, vol };
        ([a, Piece { p: [m, p[1], z], k: 2, vol }, a, a], 2)
    } else {
        let (m01, m12, m20) = ((p[0] + p[1]) * 0.5, (p[1] + p[2]) * 0.5, (p[2] + p[0]) * 0.5);
        let vol = 0.25 * piece.vol;
        (
            [
                Piece { p: [p[0], m01, m20], k: 3, vol },
                Piece { p: [m01, p[1], m12], k: 3, vol },
                Piece { p: [m20, m12, p[2]], k: 3, vol },
                Piece { p: [m01, m12, m20], k: 3, vol },
            ],
            4,
        )
    }
}

/// `ℋᵈ(mesh ∩ B)` by breadth-first subdivision of straddling simplices.
pub fn mesh_ball_measure(mesh: &SimplicialSet, ball: &Ball, tol: f64) -> MeasureResult {
    mesh_ball_measure_capped(mesh, ball, tol, DEFAULT_MAX_PIECES)
}

/// As [`mesh_ball_measure`] but stops refining once more than `max_pieces`
/// straddling pieces are tracked; the returned error may then exceed `tol`.
pub fn mesh_ball_measure_capped(mesh: &SimplicialSet, ball: &Ball, tol: f64, max_pieces: usize) -> MeasureResult {
    let k = mesh.dim() + 1;
    let initial: Vec<Class> = (0..mesh.n_simplices())
        .into_par_iter()
        .map(|i| {
            let mut p = [Point::zeros(); 3];
            for (j, v) in mesh.simplex(i).iter().enumerate() {
                p[j] = mesh.vertices()[*v];
            }
            let vol = simplex_volume(&p[..k]);
            classify(Piece { p, k, vol }, ball)
        })
        .collect();
    let mut inside = 0.0;
    let mut straddlers: Vec<Piece> = Vec::new();
    for c in initial {
        match c {
            Class::Inside(v) => inside += v,
            Class::Outside => {}
            Class::Straddle(p) => straddlers.push(p),
        }
    }
    let mut depth = 0;
    loop {
        let svol = straddlers.iter().fold(0.0, |acc, p| acc + p.vol);
        if svol <= tol || straddlers.len() > max_pieces {
            return MeasureResult {
                value: inside + 0.5 * svol,
                abs_error: 0.5 * svol,
                method: Method::Subdivision,
                samples_or_depth: depth,
            };
        }
        let mut next = Vec::with_capacity(straddlers.len() * 2);
        for chunk in straddlers.chunks(1 << 14) {
            let groups: Vec<[Class; 4]> = chunk
                .par_iter()
                .map(|p| {
                    let (children, n) = split(p);
                    let mut out = [Class::Outside, Class::Outside, Class::Outside, Class::Outside];
                    for (slot, c) in out.iter_mut().zip(&children[..n]) {
                        *slot = classify(*c, ball);
                    }
                    out
                })
                .collect();
            for c in groups.into_iter().flatten() {
                match c {
                    Class::Inside(v) => inside += v,
                    Class::Outside => {}
                    Class::Straddle(q) => next.push(q),
                }
            }
        }
        straddlers = next;
        depth += 1;
    }
}

fn sample_simplex<R: Rng + ?Sized>(p: &[Point], rng: &mut R) -> Point {
    if p.len() == 2 {
        let s: f64 = rng.random();
        return p[0] + (p[1] - p[0]) * s;
    }
    let (a, b): (f64, f64) = (rng.random(), rng.random());
    let sa = a.sqrt();
    p[0] * (1.0 - sa) + p[1] * (sa * (1.0 - b)) + p[2] * (sa * b)
}

/// Monte Carlo estimate of `ℋᵈ(mesh ∩ B)` with a 3σ error bar.
pub fn mesh_ball_measure_monte_carlo(mesh: &SimplicialSet, ball: &Ball, samples: usize, seed: u64) -> MeasureResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cumulative = Vec::with_capacity(mesh.n_simplices());
    let mut total = 0.0;
    for i in 0..mesh.n_simplices() {
        total += mesh.simplex_volume(i);
        cumulative.push(total);
    }
    let mut hits = 0usize;
    for _ in 0..samples {
        let u = rng.random::<f64>() * total;
        let i = cumulative.partition_point(|c| *c < u).min(cumulative.len() - 1);
        let p = sample_simplex(&mesh.simplex_points(i), &mut rng);
        if ball.contains(&p) {
            hits += 1;
        }
    }
    let n = samples as f64;
    let frac = hits as f64 / n;
    let sigma = (frac * (1.0 - frac) / n).sqrt().max(1.0 / n);
    MeasureResult {
        value: total * frac,
        abs_error: 3.0 * total * sigma,
        method: Method::MonteCarlo,
        samples_or_depth: samples,
    }
}

/// Common measure queries for analytic sets and meshes.
pub trait MeasuredSet: Sync {
    fn set_dim(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn ball_measure(&self, ball: &Ball, tol: f64) -> Result<MeasureResult>;
    fn sphere_slice(&self, center: &Point, r: f64, tol: f64) -> Result<MeasureResult>;
    fn contains(&self, p: &Point) -> bool;
    fn distance_to(&self, p: &Point) -> f64;
    fn sample_in_ball(&self, ball: &Ball, count: usize, rng: &mut dyn RngCore) -> Vec<Point>;
}

impl MeasuredSet for AnalyticSet {
    fn set_dim(&self) -> usize {
        AnalyticSet::set_dim(self)
    }

    fn ambient_dim(&self) -> usize {
        AnalyticSet::ambient_dim(self)
    }

    fn ball_measure(&self, ball: &Ball, tol: f64) -> Result<MeasureResult> {
        analytic_ball_measure(self, ball, tol)
    }

    fn sphere_slice(&self, center: &Point, r: f64, _tol: f64) -> Result<MeasureResult> {
        analytic_sphere_slice(self, center, r)
    }

    fn contains(&self, p: &Point) -> bool {
        AnalyticSet::contains(self, p)
    }

    fn distance_to(&self, p: &Point) -> f64 {
        self.distance(p)
    }

    fn sample_in_ball(&self, ball: &Ball, count: usize, rng: &mut dyn RngCore) -> Vec<Point> {
        AnalyticSet::sample_in_ball(self, ball, count, rng)
    }
}

impl MeasuredSet for SimplicialSet {
    fn set_dim(&self) -> usize {
        self.dim()
    }

    fn ambient_dim(&self) -> usize {
        SimplicialSet::ambient_dim(self)
    }

    fn ball_measure(&self, ball: &Ball, tol: f64) -> Result<MeasureResult> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParams("tolerance must be positive".into()));
        }
        Ok(mesh_ball_measure(self, ball, tol))
    }

    fn sphere_slice(&self, center: &Point, r: f64, _tol: f64) -> Result<MeasureResult> {
        mesh_sphere_slice(self, center, r)
    }

    fn contains(&self, p: &Point) -> bool {
        self.distance(p) <= FLAT_TOL
    }

    fn distance_to(&self, p: &Point) -> f64 {
        self.distance(p)
    }

    fn sample_in_ball(&self, ball: &Ball, count: usize, rng: &mut dyn RngCore) -> Vec<Point> {
        let near: Vec<Vec<Point>> = (0..self.n_simplices())
            .map(|i| self.simplex_points(i))
            .filter(|p| simplex_distance(&ball.center, p) < ball.radius)
            .collect();
        let mut cumulative = Vec::with_capacity(near.len());
        let mut total = 0.0;
        for p in &near {
            total += simplex_volume(p);
            cumulative.push(total);
        }
        let mut out = Vec::with_capacity(count);
        if near.is_empty() {
            return out;
        }
        let max_tries = 1000 * count.max(1);
        for _ in 0..max_tries {
            if out.len() == count {
                break;
            }
            let u = rng.random::<f64>() * total;
            let i = cumulative.partition_point(|c| *c < u).min(near.len() - 1);
            let p = sample_simplex(&near[i], rng);
            if ball.contains(&p) {
                out.push(p);
            }
        }
        out
    }
}

/// `ℋ^{d−1}(set ∩ ∂B(center, r))` for any measured set.
pub fn sphere_slice_measure(set: &dyn MeasuredSet, center: &Point, r: f64, tol: f64) -> Result<MeasureResult> {
    set.sphere_slice(center, r, tol)
}
