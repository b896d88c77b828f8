//! Points, flats, balls, shades and the small amount of linear algebra the
//! rest of the crate builds on.
//!
//! Every point lives in a fixed four-component vector; an ambient space
//! ℝⁿ with n < 4 is embedded by zero padding and the ambient dimension is
//! carried alongside by the owning object.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector4<f64>;

/// Tolerance for "point lies in flat".
pub const FLAT_TOL: f64 = 1e-9;
/// Orthonormality tolerance for flat bases.
pub const ORTHO_TOL: f64 = 1e-12;
pub const MAX_AMBIENT: usize = 4;

/// Builds a point from up to four coordinates.
pub fn pt(coords: &[f64]) -> Point {
    assert!(coords.len() <= MAX_AMBIENT, "at most four coordinates");
    let mut p = Point::zeros();
    for (i, c) in coords.iter().enumerate() {
        p[i] = *c;
    }
    p
}

/// Unit basis vector `e_i`.
pub fn axis(i: usize) -> Point {
    let mut p = Point::zeros();
    p[i] = 1.0;
    p
}

pub(crate) fn check_ambient(n: usize) -> Result<()> {
    if (1..=MAX_AMBIENT).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(format!("ambient dimension {n}")))
    }
}

fn padded_ok(p: &Point, n: usize) -> bool {
    (n..MAX_AMBIENT).all(|i| p[i] == 0.0) && p.iter().all(|c| c.is_finite())
}

/// An m-dimensional affine subspace `origin + span(basis)` of ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFlat {
    origin: Point,
    basis: Vec<Point>,
    ambient_dim: usize,
}

impl AffineFlat {
    /// Validates that `basis` is orthonormal to within 1e-12.
    pub fn new(origin: Point, basis: Vec<Point>, ambient_dim: usize) -> Result<Self> {
        check_ambient(ambient_dim)?;
        if basis.len() > ambient_dim {
            return Err(Error::InvalidFlat(format!(
                "{} basis vectors in ambient dimension {ambient_dim}",
                basis.len()
            )));
        }
        if !padded_ok(&origin, ambient_dim) || !basis.iter().all(|b| padded_ok(b, ambient_dim)) {
            return Err(Error::InvalidFlat("coordinates outside the ambient space".into()));
        }
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                if (a.dot(b) - target).abs() > ORTHO_TOL {
                    return Err(Error::InvalidFlat(format!(
                        "basis not orthonormal at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { origin, basis, ambient_dim })
    }

    /// Orthonormalizes `directions` by Gram-Schmidt.
    pub fn from_spanning(origin: Point, directions: &[Point], ambient_dim: usize) -> Result<Self> {
        let mut basis: Vec<Point> = Vec::with_capacity(directions.len());
        for d in directions {
            let mut v = *d;
            // two passes keep the result orthonormal to machine precision
            for _ in 0..2 {
                for b in &basis {
                    v -= *b * b.dot(&v);
                }
            }
            let n = v.norm();
            if n <= 1e-12 * d.norm().max(1.0) {
                return Err(Error::InvalidFlat("spanning directions are dependent".into()));
            }
            basis.push(v / n);
        }
        Self::new(origin, basis, ambient_dim)
    }

    /// The zero-dimensional flat `{p}`.
    pub fn point(p: Point, ambient_dim: usize) -> Result<Self> {
        Self::new(p, Vec::new(), ambient_dim)
    }

    /// Line through `p` with direction `dir` (normalized).
    pub fn line(p: Point, dir: Point, ambient_dim: usize) -> Result<Self> {
        Self::from_spanning(p, &[dir], ambient_dim)
    }

    pub fn origin(&self) -> &Point {
        &self.origin
    }

    pub fn basis(&self) -> &[Point] {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Component of a direction vector along the flat.
    pub fn tangential(&self, v: &Point) -> Point {
        self.basis.iter().fold(Point::zeros(), |acc, b| acc + *b * b.dot(v))
    }

    /// Nearest point of the flat.
    pub fn project(&self, p: &Point) -> Point {
        self.origin + self.tangential(&(p - self.origin))
    }

    /// `p - project(p)`.
    pub fn normal_component(&self, p: &Point) -> Point {
        let q = p - self.origin;
        q - self.tangential(&q)
    }

    pub fn distance(&self, p: &Point) -> f64 {
        self.normal_component(p).norm()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.distance(p) <= FLAT_TOL
    }

    /// Coordinates of `project(p)` in the flat's basis.
    pub fn coords(&self, p: &Point) -> Vec<f64> {
        let q = p - self.origin;
        self.basis.iter().map(|b| b.dot(&q)).collect()
    }

    /// True when `other` lies inside this flat.
    pub fn contains_flat(&self, other: &AffineFlat) -> bool {
        self.contains(&other.origin)
            && other.basis.iter().all(|b| (b - self.tangential(b)).norm() <= 1e-9)
    }

    /// Same point set (as flats).
    pub fn same_flat(&self, other: &AffineFlat) -> bool {
        self.dim() == other.dim() && self.contains_flat(other)
    }

    /// Image under a similarity.
    pub fn mapped(&self, s: &Similarity) -> Result<Self> {
        let dirs: Vec<Point> = self.basis.iter().map(|b| s.linear(b)).collect();
        Self::from_spanning(s.apply(&self.origin), &dirs, self.ambient_dim)
    }
}

/// `x ↦ scale·R·x + shift` with `R` orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Similarity {
    pub rotation: Matrix4<f64>,
    pub scale: f64,
    pub shift: Point,
}

impl Similarity {
    pub fn identity() -> Self {
        Self { rotation: Matrix4::identity(), scale: 1.0, shift: Point::zeros() }
    }

    pub fn dilation(center: &Point, scale: f64) -> Self {
        Self { rotation: Matrix4::identity(), scale, shift: center * (1.0 - scale) }
    }

    /// Rotation by `angle` in the coordinate plane `(i, j)`.
    pub fn plane_rotation(i: usize, j: usize, angle: f64) -> Self {
        let mut r = Matrix4::identity();
        let (s, c) = angle.sin_cos();
        r[(i, i)] = c;
        r[(j, j)] = c;
        r[(i, j)] = -s;
        r[(j, i)] = s;
        Self { rotation: r, scale: 1.0, shift: Point::zeros() }
    }

    pub fn then(&self, next: &Similarity) -> Self {
        Self {
            rotation: next.rotation * self.rotation,
            scale: self.scale * next.scale,
            shift: next.apply(&self.shift),
        }
    }

    pub fn linear(&self, v: &Point) -> Point {
        self.rotation * v * self.scale
    }

    pub fn apply(&self, p: &Point) -> Point {
        self.linear(p) + self.shift
    }
}

/// Open ball `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParams(format!("ball radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, p: &Point) -> bool {
        (p - self.center).norm() < self.radius
    }
}

/// The shade `S_x` of the flat `L` seen from the apex `x`: all `y` with
/// `x + λ(y − x) ∈ L` for some `λ ∈ (0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadeRegion {
    pub apex: Point,
    pub flat: AffineFlat,
}

/// Half-flat `{p + t·dir : p ∈ base, t ≥ 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfFlat {
    pub base: AffineFlat,
    pub dir: Point,
}

impl ShadeRegion {
    pub fn new(apex: Point, flat: AffineFlat) -> Self {
        Self { apex, flat }
    }

    /// True when the apex lies on `L`, in which case the shade is `L`.
    pub fn is_degenerate(&self) -> bool {
        self.flat.contains(&self.apex)
    }

    pub fn contains(&self, y: &Point) -> bool {
        if self.is_degenerate() {
            return self.flat.contains(y);
        }
        let a = self.flat.normal_component(&self.apex);
        let v = y - self.apex;
        let v_perp = v - self.flat.tangential(&v);
        let vv = v_perp.norm_squared();
        if vv == 0.0 {
            return false;
        }
        let lambda = (-a.dot(&v_perp) / vv).clamp(0.0, 1.0);
        lambda > 0.0 && (a + v_perp * lambda).norm() <= FLAT_TOL
    }

    /// Points of the shade strictly beyond `L` (the shade minus `L`).
    pub fn contains_beyond(&self, y: &Point) -> bool {
        self.contains(y) && !self.flat.contains(y)
    }

    /// The shade as a half-flat based on `L`, pointing away from the apex.
    pub fn as_half_flat(&self) -> Result<HalfFlat> {
        if self.is_degenerate() {
            return Err(Error::ApexOnFlat);
        }
        let foot = self.flat.project(&self.apex);
        let u = (foot - self.apex).normalize();
        Ok(HalfFlat { base: self.flat.clone(), dir: u })
    }

    pub fn distance_to_flat(&self) -> f64 {
        self.flat.distance(&self.apex)
    }
}

/// A polytopal boundary piece: a flat, optionally cut down to the segment
/// `origin + s·basis[0]`, `s ∈ [lo, hi]` when the flat is a line.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPiece {
    pub flat: AffineFlat,
    pub extent: Option<(f64, f64)>,
}

impl BoundaryPiece {
    pub fn affine(flat: AffineFlat) -> Self {
        Self { flat, extent: None }
    }

    pub fn segment(a: Point, b: Point, ambient_dim: usize) -> Result<Self> {
        let len = (b - a).norm();
        if len <= 1e-12 {
            return Err(Error::InvalidFlat("segment endpoints coincide".into()));
        }
        let flat = AffineFlat::line(a, b - a, ambient_dim)?;
        Ok(Self { flat, extent: Some((0.0, len)) })
    }

    pub fn with_extent(flat: AffineFlat, lo: f64, hi: f64) -> Result<Self> {
        if flat.dim() != 1 || !(hi > lo) {
            return Err(Error::InvalidFlat("extents apply to lines with lo < hi".into()));
        }
        Ok(Self { flat, extent: Some((lo, hi)) })
    }

    pub fn dim(&self) -> usize {
        self.flat.dim()
    }

    pub fn is_affine(&self) -> bool {
        self.extent.is_none()
    }

    /// Endpoints of a segment piece.
    pub fn endpoints(&self) -> Option<(Point, Point)> {
        self.extent.map(|(lo, hi)| {
            let b = self.flat.basis()[0];
            (self.flat.origin() + b * lo, self.flat.origin() + b * hi)
        })
    }

    /// Nearest point of the piece.
    pub fn project(&self, p: &Point) -> Point {
        match self.extent {
            None => self.flat.project(p),
            Some((lo, hi)) => {
                let b = self.flat.basis()[0];
                let s = b.dot(&(p - self.flat.origin())).clamp(lo, hi);
                self.flat.origin() + b * s
            }
        }
    }

    pub fn distance(&self, p: &Point) -> f64 {
        (p - self.project(p)).norm()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.distance(p) <= FLAT_TOL
    }

    pub fn mapped(&self, s: &Similarity) -> Result<Self> {
        match self.endpoints() {
            Some((a, b)) => Self::segment(s.apply(&a), s.apply(&b), self.flat.ambient_dim()),
            None => Ok(Self::affine(self.flat.mapped(s)?)),
        }
    }
}

/// Number of distinct boundary points on a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Multiplicity {
    Finite(usize),
    /// The segment runs inside a piece along a set of positive length.
    Infinite,
}

impl Multiplicity {
    pub fn at_least_one(self) -> bool {
        !matches!(self, Multiplicity::Finite(0))
    }
}

/// Parameters `λ ∈ (0, 1]` at which `apex + λ(y − apex)` meets `piece`, or
/// `None` when the segment overlaps the piece along a positive length.
fn segment_hits(apex: &Point, y: &Point, piece: &BoundaryPiece) -> Option<Vec<f64>> {
    let flat = &piece.flat;
    let v = y - apex;
    let len = v.norm();
    let a = flat.normal_component(apex);
    let v_perp = v - flat.tangential(&v);
    let vv = v_perp.norm_squared();
    let in_range = |hit: &Point| match piece.extent {
        None => true,
        Some((lo, hi)) => {
            let s = flat.basis()[0].dot(&(hit - flat.origin()));
            s >= lo - FLAT_TOL && s <= hi + FLAT_TOL
        }
    };
    if v_perp.norm() <= FLAT_TOL * 1e-3 * len.max(1.0) {
        // segment parallel to the flat
        if a.norm() > FLAT_TOL {
            return Some(Vec::new());
        }
        return match piece.extent {
            None => None,
            Some((lo, hi)) => {
                let b = flat.basis()[0];
                let s0 = b.dot(&(apex - flat.origin()));
                let s1 = b.dot(&(y - flat.origin()));
                let (slo, shi) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
                let olo = slo.max(lo);
                let ohi = shi.min(hi);
                if ohi - olo > FLAT_TOL {
                    None
                } else if ohi - olo >= -FLAT_TOL {
                    let s = 0.5 * (olo + ohi);
                    let lam = if (s1 - s0).abs() > 0.0 { (s - s0) / (s1 - s0) } else { 1.0 };
                    Some(if lam > 0.0 && lam <= 1.0 { vec![lam] } else { Vec::new() })
                } else {
                    Some(Vec::new())
                }
            }
        };
    }
    let lam = -a.dot(&v_perp) / vv;
    let lam_c = lam.clamp(0.0, 1.0);
    if lam_c <= 0.0 {
        return Some(Vec::new());
    }
    let hit = apex + v * lam_c;
    if (a + v_perp * lam_c).norm() <= FLAT_TOL && in_range(&hit) {
        Some(vec![lam_c])
    } else {
        Some(Vec::new())
    }
}

/// Counts the distinct points of the boundary on the half-open segment
/// `(apex, y]`, merging hits closer than 1e-9 along the segment.
pub fn ray_multiplicity(y: &Point, pieces: &[BoundaryPiece], apex: &Point) -> Result<Multiplicity> {
    let len = (y - apex).norm();
    if len <= 0.0 {
        return Err(Error::DegenerateSegment);
    }
    let mut lams = Vec::new();
    for piece in pieces {
        match segment_hits(apex, y, piece) {
            None => return Ok(Multiplicity::Infinite),
            Some(h) => lams.extend(h),
        }
    }
    lams.sort_by(f64::total_cmp);
    let mut count = 0usize;
    let mut last = f64::NEG_INFINITY;
    for lam in lams {
        if (lam - last) * len > FLAT_TOL || count == 0 {
            count += 1;
            last = lam;
        }
    }
    Ok(Multiplicity::Finite(count))
}

/// Anything that can report distances and produce samples inside a ball.
pub trait DistanceQuery {
    fn distance_to(&self, p: &Point) -> f64;
    /// Samples of the set inside the open ball at the given spacing.
    fn samples_in_ball(&self, ball: &Ball, spacing: f64) -> Vec<Point>;
}

/// A finite point sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point>,
}

impl DistanceQuery for PointCloud {
    fn distance_to(&self, p: &Point) -> f64 {
        self.points.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)
    }

    fn samples_in_ball(&self, ball: &Ball, _spacing: f64) -> Vec<Point> {
        self.points.iter().copied().filter(|p| ball.contains(p)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalHausdorff {
    pub value: f64,
    /// Sample spacing used for sets given analytically.
    pub spacing: f64,
    pub samples: usize,
}

/// `r⁻¹ sup_{E∩B} dist(·,F) + r⁻¹ sup_{F∩B} dist(·,E)`; an empty supremum
/// counts as zero.
pub fn local_hausdorff_distance<E, F>(e: &E, f: &F, ball: &Ball, spacing: f64) -> LocalHausdorff
where
    E: DistanceQuery + ?Sized,
    F: DistanceQuery + ?Sized,
{
    let se = e.samples_in_ball(ball, spacing);
    let sf = f.samples_in_ball(ball, spacing);
    let sup = |pts: &[Point], other: &dyn Fn(&Point) -> f64| {
        pts.iter().map(other).fold(0.0_f64, f64::max)
    };
    let a = sup(&se, &|p| f.distance_to(p));
    let b = sup(&sf, &|p| e.distance_to(p));
    let value = if ball.radius > 0.0 { (a + b) / ball.radius } else { 0.0 };
    LocalHausdorff { value, spacing, samples: se.len() + sf.len() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_axis() -> AffineFlat {
        AffineFlat::new(Point::zeros(), vec![axis(2)], 3).unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(z_axis().project(&pt(&[1.0, 2.0, 3.0])), pt(&[0.0, 0.0, 3.0]));
        let x_axis = AffineFlat::new(Point::zeros(), vec![axis(0)], 2).unwrap();
        assert_eq!(x_axis.project(&pt(&[3.0, 4.0])), pt(&[3.0, 0.0]));
        let p = pt(&[0.0, 0.0, -7.5]);
        assert_eq!(z_axis().project(&p), p);
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let r = AffineFlat::new(Point::zeros(), vec![pt(&[1.0, 1e-6, 0.0])], 3);
        assert!(r.is_err());
        let r = AffineFlat::from_spanning(Point::zeros(), &[axis(0), axis(0) * 2.0], 3);
        assert!(r.is_err());
    }

    fn shade_example() -> ShadeRegion {
        let l = AffineFlat::new(pt(&[1.0, 0.0, 0.0]), vec![axis(1)], 3).unwrap();
        ShadeRegion::new(Point::zeros(), l)
    }

    #[test]
    fn shade_membership_examples() {
        let s = shade_example();
        assert!(s.contains(&pt(&[2.0, 0.0, 0.0])));
        assert!(!s.contains(&pt(&[0.5, 0.0, 0.0])));
        assert!(!s.contains(&pt(&[2.0, 0.0, 1.0])));
        assert!(s.contains(&pt(&[1.0, 5.0, 0.0])));
        assert!(s.contains(&pt(&[3.0, -2.0, 0.0])));
        assert!(!s.contains(&pt(&[-2.0, 0.0, 0.0])));
    }

    #[test]
    fn degenerate_shade_is_the_flat() {
        let l = AffineFlat::new(Point::zeros(), vec![axis(1)], 3).unwrap();
        let s = ShadeRegion::new(pt(&[0.0, 1.0, 0.0]), l);
        assert!(s.is_degenerate());
        assert!(s.contains(&pt(&[0.0, -3.0, 0.0])));
        assert!(!s.contains(&pt(&[1.0, 0.0, 0.0])));
    }

    #[test]
    fn multiplicity_examples() {
        let l1 = BoundaryPiece::affine(
            AffineFlat::new(pt(&[1.0, 0.0, 0.0]), vec![axis(1)], 3).unwrap(),
        );
        let l2 = BoundaryPiece::affine(
            AffineFlat::new(pt(&[1.5, 0.0, 0.0]), vec![axis(1)], 3).unwrap(),
        );
        let o = Point::zeros();
        let y = pt(&[2.0, 0.2, 0.0]);
        assert_eq!(ray_multiplicity(&y, std::slice::from_ref(&l1), &o).unwrap(), Multiplicity::Finite(1));
        assert_eq!(
            ray_multiplicity(&y, &[l1.clone(), l2.clone()], &o).unwrap(),
            Multiplicity::Finite(2)
        );
        assert_eq!(
            ray_multiplicity(&pt(&[-1.0, 0.0, 0.0]), &[l1.clone(), l2], &o).unwrap(),
            Multiplicity::Finite(0)
        );
        assert_eq!(ray_multiplicity(&o, &[l1], &o), Err(Error::DegenerateSegment));
    }

    #[test]
    fn multiplicity_merges_coincident_hits_and_reports_overflow() {
        let a = BoundaryPiece::affine(AffineFlat::new(pt(&[1.0, 0.0]), vec![axis(1)], 2).unwrap());
        let b = BoundaryPiece::segment(pt(&[0.0, -1.0]), pt(&[2.0, 1.0]), 2).unwrap();
        let y = pt(&[3.0, 0.0]);
        // both pieces pass through (1, 0)
        assert_eq!(ray_multiplicity(&y, &[a.clone(), b], &Point::zeros()).unwrap(), Multiplicity::Finite(1));
        let inside = pt(&[1.0, 4.0]);
        assert_eq!(
            ray_multiplicity(&inside, &[a], &pt(&[1.0, -1.0])).unwrap(),
            Multiplicity::Infinite
        );
    }

    #[test]
    fn segment_extent_limits_hits() {
        let seg = BoundaryPiece::segment(pt(&[1.0, -0.5]), pt(&[1.0, 0.5]), 2).unwrap();
        let o = Point::zeros();
        assert_eq!(ray_multiplicity(&pt(&[2.0, 0.0]), std::slice::from_ref(&seg), &o).unwrap(), Multiplicity::Finite(1));
        assert_eq!(ray_multiplicity(&pt(&[2.0, 3.0]), &[seg], &o).unwrap(), Multiplicity::Finite(0));
    }

    #[test]
    fn hausdorff_of_parallel_planes() {
        // grids on z = 0 and z = h
        let h = 0.1;
        let grid = |z: f64| PointCloud {
            points: (-20..=20)
                .flat_map(|i| (-20..=20).map(move |j| pt(&[i as f64 * 0.05, j as f64 * 0.05, z])))
                .collect(),
        };
        let ball = Ball::new(Point::zeros(), 0.5).unwrap();
        let e = grid(0.0);
        let f = grid(h);
        let d = local_hausdorff_distance(&e, &f, &ball, 0.05);
        assert!((d.value - 2.0 * h / 0.5).abs() < 1e-12);
        assert_eq!(local_hausdorff_distance(&e, &e, &ball, 0.05).value, 0.0);
        let far = Ball::new(pt(&[10.0, 10.0, 10.0]), 0.5).unwrap();
        assert_eq!(local_hausdorff_distance(&e, &f, &far, 0.05).value, 0.0);
    }
}
