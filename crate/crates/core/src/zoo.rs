//! Canonical cones and their truncations.
//!
//! Every analytic set here is a finite union of [`Slab`]s: pieces of the
//! form `{p + t·dir : p ∈ base, lo ≤ t ≤ hi}` where `base` is a flat of
//! dimension `d − 1`. Planes, half-planes, strips and shades all fit that
//! shape, which is what makes exact measure queries cheap.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{
    check_ambient, AffineFlat, Ball, DistanceQuery, Point, ShadeRegion, Similarity, FLAT_TOL,
};

/// Volume of the unit ball in ℝᵈ for the supported set dimensions.
pub fn omega(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI * PI / 2.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Plane,
    HalfPlane,
    YCone,
    VCone,
    Shade,
    Truncation,
    FiniteUnion,
}

/// `{p + t·dir : p ∈ base, lo ≤ t ≤ hi}` with `dir` a unit vector
/// orthogonal to `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slab {
    pub base: AffineFlat,
    pub dir: Point,
    pub lo: f64,
    pub hi: f64,
}

/// Position of a point relative to the 2-flat (or line) spanned by a slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneCoords {
    /// Coordinate along the base (zero when the base is a point).
    pub s: f64,
    /// Coordinate along `dir`.
    pub t: f64,
    /// Distance from the point to the slab's affine span.
    pub h: f64,
}

impl Slab {
    pub fn new(base: AffineFlat, dir: Point, lo: f64, hi: f64) -> Result<Self> {
        let n = dir.norm();
        if !(n > 1e-12) {
            return Err(Error::InvalidDirection("zero direction".into()));
        }
        let dir = dir / n;
        if (base.tangential(&dir)).norm() > 1e-9 {
            return Err(Error::InvalidDirection("direction not orthogonal to base".into()));
        }
        if lo.is_nan() || hi.is_nan() || !(hi >= lo) {
            return Err(Error::InvalidParams(format!("empty slab range [{lo}, {hi}]")));
        }
        Ok(Self { base, dir, lo, hi })
    }

    pub fn set_dim(&self) -> usize {
        self.base.dim() + 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.ambient_dim()
    }

    pub fn coords(&self, p: &Point) -> PlaneCoords {
        let q = p - self.base.origin();
        let t = self.dir.dot(&q);
        let along = self.base.tangential(&q);
        let s = self.base.basis().first().map_or(0.0, |b| b.dot(&q));
        let h = (q - along - self.dir * t).norm();
        PlaneCoords { s, t, h }
    }

    /// Point with the given base coordinate `s` and `t`.
    pub fn point_at(&self, s: f64, t: f64) -> Point {
        let along = self.base.basis().first().map_or(Point::zeros(), |b| b * s);
        self.base.origin() + along + self.dir * t
    }

    pub fn contains(&self, p: &Point) -> bool {
        let c = self.coords(p);
        c.h <= FLAT_TOL && c.t >= self.lo - FLAT_TOL && c.t <= self.hi + FLAT_TOL
    }

    pub fn distance(&self, p: &Point) -> f64 {
        let c = self.coords(p);
        let dt = c.t - c.t.clamp(self.lo, self.hi);
        (c.h * c.h + dt * dt).sqrt()
    }

    /// Whether both slabs span the same affine d-flat.
    pub fn same_span(&self, other: &Slab) -> bool {
        let in_span = |p: &Point| self.coords(p).h <= 1e-9;
        let dir_in_span = |v: &Point| {
            let along = self.base.tangential(v) + self.dir * self.dir.dot(v);
            (v - along).norm() <= 1e-9
        };
        self.set_dim() == other.set_dim()
            && in_span(other.base.origin())
            && dir_in_span(&other.dir)
            && other.base.basis().iter().all(dir_in_span)
    }

    /// Interval of `other` in this slab's `t` coordinate, when both share a
    /// span and have parallel bases.
    fn interval_of(&self, other: &Slab) -> Option<(f64, f64)> {
        if !self.same_span(other) || (self.dir.dot(&other.dir).abs() - 1.0).abs() > 1e-9 {
            return None;
        }
        let t0 = self.dir.dot(&(other.base.origin() - self.base.origin()));
        let sign = self.dir.dot(&other.dir).signum();
        let (a, b) = (t0 + sign * other.lo, t0 + sign * other.hi);
        Some(if a <= b { (a, b) } else { (b, a) })
    }

    pub fn mapped(&self, sim: &Similarity) -> Result<Self> {
        let base = self.base.mapped(sim)?;
        // keep the parametrization: origin of the image base is the image origin
        let dir = sim.linear(&self.dir).normalize();
        let scale = sim.scale;
        Slab::new(base, dir, self.lo * scale, self.hi * scale)
    }

    /// `closure(self ∖ shade)`; `None` when nothing is left.
    fn truncated_by(&self, shade_base: &AffineFlat, shade_dir: &Point) -> Result<Option<Slab>> {
        let probe = Slab { base: shade_base.clone(), dir: *shade_dir, lo: 0.0, hi: f64::INFINITY };
        if !self.same_span(&probe) {
            return Ok(Some(self.clone()));
        }
        let Some((a, b)) = self.interval_of(&probe) else {
            return Err(Error::Unsupported(
                "coplanar shade whose boundary is not parallel to the piece".into(),
            ));
        };
        let (lo, hi) = if b.is_infinite() && b > 0.0 {
            (self.lo, self.hi.min(a))
        } else {
            (self.lo.max(b), self.hi)
        };
        if hi - lo > 1e-12 {
            Ok(Some(Slab { lo, hi, ..self.clone() }))
        } else {
            Ok(None)
        }
    }
}

/// A closed-form d-set: a finite union of slabs plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSet {
    kind: SetKind,
    center: Option<Point>,
    ambient_dim: usize,
    set_dim: usize,
    pieces: Vec<Slab>,
    overlapping: bool,
}

fn check_dims(set_dim: usize, ambient_dim: usize) -> Result<()> {
    check_ambient(ambient_dim)?;
    if !(1..=2).contains(&set_dim) || set_dim >= ambient_dim {
        return Err(Error::UnsupportedDimension(format!(
            "set dimension {set_dim} in ambient dimension {ambient_dim}"
        )));
    }
    Ok(())
}

fn unit_orthogonal(flat: &AffineFlat, v: &Point) -> Result<Point> {
    let n = v.norm();
    if !(n > 1e-12) {
        return Err(Error::InvalidDirection("zero direction".into()));
    }
    let u = v / n;
    if flat.tangential(&u).norm() > 1e-9 {
        return Err(Error::InvalidDirection("direction not orthogonal to the flat".into()));
    }
    if (flat.ambient_dim()..4).any(|i| u[i] != 0.0) {
        return Err(Error::InvalidDirection("direction outside the ambient space".into()));
    }
    Ok(u)
}

impl AnalyticSet {
    fn from_pieces(
        kind: SetKind,
        center: Option<Point>,
        ambient_dim: usize,
        set_dim: usize,
        pieces: Vec<Slab>,
    ) -> Self {
        let mut overlapping = false;
        for (i, a) in pieces.iter().enumerate() {
            for b in &pieces[i + 1..] {
                if a.same_span(b) {
                    match a.interval_of(b) {
                        Some((lo, hi)) => {
                            if hi.min(a.hi) - lo.max(a.lo) > 1e-12 {
                                overlapping = true;
                            }
                        }
                        None => overlapping = true,
                    }
                }
            }
        }
        Self { kind, center, ambient_dim, set_dim, pieces, overlapping }
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn center(&self) -> Option<&Point> {
        self.center.as_ref()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn set_dim(&self) -> usize {
        self.set_dim
    }

    pub fn pieces(&self) -> &[Slab] {
        &self.pieces
    }

    /// True when two pieces share a span and overlap in positive measure.
    pub fn has_overlaps(&self) -> bool {
        self.overlapping
    }

    /// The d-plane `flat` (of dimension 1 or 2).
    pub fn plane(flat: &AffineFlat) -> Result<Self> {
        let d = flat.dim();
        check_dims(d, flat.ambient_dim())?;
        let basis = flat.basis();
        let base = AffineFlat::new(*flat.origin(), basis[..d - 1].to_vec(), flat.ambient_dim())?;
        let slab = Slab::new(base, basis[d - 1], f64::NEG_INFINITY, f64::INFINITY)?;
        Ok(Self::from_pieces(SetKind::Plane, Some(*flat.origin()), flat.ambient_dim(), d, vec![slab]))
    }

    /// The closed half-plane `{p + t·direction : p ∈ flat, t ≥ 0}`.
    pub fn half_plane(flat: &AffineFlat, direction: &Point) -> Result<Self> {
        let d = flat.dim() + 1;
        check_dims(d, flat.ambient_dim())?;
        let u = unit_orthogonal(flat, direction)?;
        let slab = Slab::new(flat.clone(), u, 0.0, f64::INFINITY)?;
        Ok(Self::from_pieces(SetKind::HalfPlane, Some(*flat.origin()), flat.ambient_dim(), d, vec![slab]))
    }

    /// Three half-planes on `spine` at phases `phase + 2πk/3` in the 2-plane
    /// spanned by `frame`.
    pub fn y_cone(center: &Point, spine: &AffineFlat, frame: [Point; 2], phase: f64) -> Result<Self> {
        let d = spine.dim() + 1;
        let n = spine.ambient_dim();
        check_dims(d, n)?;
        if !spine.contains(center) {
            return Err(Error::InvalidFlat("spine does not contain the center".into()));
        }
        let [e1, e2] = frame;
        let ortho = (e1.norm() - 1.0).abs() <= 1e-9
            && (e2.norm() - 1.0).abs() <= 1e-9
            && e1.dot(&e2).abs() <= 1e-9
            && spine.tangential(&e1).norm() <= 1e-9
            && spine.tangential(&e2).norm() <= 1e-9;
        if !ortho {
            return Err(Error::InvalidDirection(
                "arm frame must be orthonormal and orthogonal to the spine".into(),
            ));
        }
        let base = AffineFlat::new(*center, spine.basis().to_vec(), n)?;
        let pieces = (0..3)
            .map(|k| {
                let a = phase + 2.0 * PI * k as f64 / 3.0;
                Slab::new(base.clone(), e1 * a.cos() + e2 * a.sin(), 0.0, f64::INFINITY)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_pieces(SetKind::YCone, Some(*center), n, d, pieces))
    }

    /// Two half-planes bounded by `flat` making an angle of at least 2π/3.
    pub fn v_cone(flat: &AffineFlat, dir1: &Point, dir2: &Point) -> Result<Self> {
        let d = flat.dim() + 1;
        check_dims(d, flat.ambient_dim())?;
        let u1 = unit_orthogonal(flat, dir1)?;
        let u2 = unit_orthogonal(flat, dir2)?;
        let inner = u1.dot(&u2);
        if inner > -0.5 + 1e-12 {
            return Err(Error::AngleTooSmall { inner });
        }
        let pieces = vec![
            Slab::new(flat.clone(), u1, 0.0, f64::INFINITY)?,
            Slab::new(flat.clone(), u2, 0.0, f64::INFINITY)?,
        ];
        Ok(Self::from_pieces(SetKind::VCone, Some(*flat.origin()), flat.ambient_dim(), d, pieces))
    }

    /// The shade of `flat` (dimension d − 1) seen from `apex`, as a set.
    pub fn shade(apex: &Point, flat: &AffineFlat) -> Result<Self> {
        let d = flat.dim() + 1;
        check_dims(d, flat.ambient_dim())?;
        let half = ShadeRegion::new(*apex, flat.clone()).as_half_flat()?;
        let slab = Slab::new(half.base, half.dir, 0.0, f64::INFINITY)?;
        Ok(Self::from_pieces(SetKind::Shade, None, flat.ambient_dim(), d, vec![slab]))
    }

    /// `closure(cone ∖ S_apex)` for the shade of `flat` seen from `apex`.
    pub fn truncate_by_shade(cone: &AnalyticSet, apex: &Point, flat: &AffineFlat) -> Result<Self> {
        if flat.dim() + 1 != cone.set_dim {
            return Err(Error::InvalidFlat("flat must have dimension d − 1".into()));
        }
        if flat.contains(apex) {
            return Err(Error::ApexOnFlat);
        }
        let foot = flat.project(cone.center.as_ref().unwrap_or(flat.origin()));
        let samples: Vec<Point> = match flat.basis().first() {
            None => vec![foot],
            Some(b) => (-8..=8).map(|k| foot + b * (k as f64 / 8.0)).collect(),
        };
        if !samples.iter().all(|p| cone.contains(p)) {
            return Err(Error::FlatNotContained);
        }
        let half = ShadeRegion::new(*apex, flat.clone()).as_half_flat()?;
        let mut pieces = Vec::new();
        for piece in &cone.pieces {
            if let Some(p) = piece.truncated_by(&half.base, &half.dir)? {
                pieces.push(p);
            }
        }
        Ok(Self::from_pieces(SetKind::Truncation, None, cone.ambient_dim, cone.set_dim, pieces))
    }

    /// Finite union of sets of equal dimensions.
    pub fn union(parts: &[AnalyticSet]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidParams("empty union".into()))?;
        if parts.iter().any(|p| p.set_dim != first.set_dim || p.ambient_dim != first.ambient_dim) {
            return Err(Error::InvalidParams("union of sets with different dimensions".into()));
        }
        let pieces = parts.iter().flat_map(|p| p.pieces.iter().cloned()).collect();
        Ok(Self::from_pieces(SetKind::FiniteUnion, None, first.ambient_dim, first.set_dim, pieces))
    }

    /// Declares `center` as the cone center used by [`AnalyticSet::density`].
    pub fn with_center(mut self, center: Point) -> Self {
        self.center = Some(center);
        self
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.pieces.iter().any(|s| s.contains(p))
    }

    pub fn distance(&self, p: &Point) -> f64 {
        self.pieces.iter().map(|s| s.distance(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn mapped(&self, sim: &Similarity) -> Result<Self> {
        let pieces = self.pieces.iter().map(|s| s.mapped(sim)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            pieces,
            center: self.center.map(|c| sim.apply(&c)),
            ..self.clone()
        })
    }

    /// Deterministic grid samples of the set inside `ball`.
    pub fn grid_samples(&self, ball: &Ball, spacing: f64) -> Vec<Point> {
        let mut out = Vec::new();
        for slab in &self.pieces {
            let c = slab.coords(&ball.center);
            if c.h >= ball.radius {
                continue;
            }
            let rho = (ball.radius * ball.radius - c.h * c.h).sqrt();
            let steps = (rho / spacing).ceil() as i64;
            let t_range = (-steps..=steps).map(|k| c.t + k as f64 * spacing);
            if slab.set_dim() == 1 {
                for t in t_range {
                    if t >= slab.lo && t <= slab.hi {
                        let p = slab.point_at(0.0, t);
                        if ball.contains(&p) {
                            out.push(p);
                        }
                    }
                }
            } else {
                for t in t_range {
                    if t < slab.lo || t > slab.hi {
                        continue;
                    }
                    for k in -steps..=steps {
                        let p = slab.point_at(c.s + k as f64 * spacing, t);
                        if ball.contains(&p) {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }

    /// Uniform samples of the set inside `ball`, pieces weighted by measure.
    pub fn sample_in_ball<R: Rng + ?Sized>(&self, ball: &Ball, count: usize, rng: &mut R) -> Vec<Point> {
        let weights: Vec<f64> = self
            .pieces
            .iter()
            .map(|s| crate::measures::slab_ball_measure(s, ball, 1e-9).value)
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let mut pick = rng.random::<f64>() * total;
            let mut idx = 0;
            while idx + 1 < weights.len() && pick >= weights[idx] {
                pick -= weights[idx];
                idx += 1;
            }
            let slab = &self.pieces[idx];
            let c = slab.coords(&ball.center);
            let rho = (ball.radius * ball.radius - c.h * c.h).max(0.0).sqrt();
            let tlo = slab.lo.max(c.t - rho);
            let thi = slab.hi.min(c.t + rho);
            if !(thi > tlo) {
                continue;
            }
            let t = tlo + (thi - tlo) * rng.random::<f64>();
            let s = if slab.set_dim() == 2 { c.s + rho * (2.0 * rng.random::<f64>() - 1.0) } else { 0.0 };
            let p = slab.point_at(s, t);
            if ball.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Checks that membership is invariant under dilations about `center`.
    pub fn is_cone_about(&self, center: &Point) -> bool {
        let ball = Ball { center: *center, radius: 1.0 };
        let samples = self.grid_samples(&ball, 0.125);
        !samples.is_empty()
            && samples.iter().all(|p| {
                [0.5, 1.7, 3.0].iter().all(|l| self.contains(&(center + (p - center) * *l)))
            })
    }

    /// `ℋᵈ(X ∩ B(c, 1))` for a cone `X` about its center `c`.
    pub fn density(&self) -> Result<f64> {
        let c = self.center.ok_or(Error::NotACone)?;
        if !self.is_cone_about(&c) {
            return Err(Error::NotACone);
        }
        let d = self.set_dim;
        match self.kind {
            SetKind::Plane => Ok(omega(d)),
            SetKind::HalfPlane => Ok(omega(d) / 2.0),
            SetKind::YCone => Ok(1.5 * omega(d)),
            SetKind::VCone => Ok(omega(d)),
            _ => {
                let ball = Ball { center: c, radius: 1.0 };
                Ok(crate::measures::analytic_ball_measure(self, &ball, 1e-6)?.value)
            }
        }
    }
}

impl DistanceQuery for AnalyticSet {
    fn distance_to(&self, p: &Point) -> f64 {
        self.distance(p)
    }

    fn samples_in_ball(&self, ball: &Ball, spacing: f64) -> Vec<Point> {
        self.grid_samples(ball, spacing)
    }
}
