//! The radial competitor: a retraction `π` of the sphere onto the cone over
//! the boundary, a cutoff `ħ`, and the map `φ` that glues them across the
//! annuli `r2 < |x| < r1 < |x| < r0`.
//!
//! All maps are centered at the boundary viewpoint. The retraction is built
//! on the sphere of radius `r0` and extended 1-homogeneously. For affine
//! pieces the nearest-point map onto a spherical cap is 1-Lipschitz up to the
//! curvature of the sphere, which gives `C₀ = π` on `R(τ₀)` with `τ₀ = r0/2`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{m_of_r, BoundaryConfig};
use crate::geom::{Point, FLAT_TOL};
use crate::measures::{MeasureResult, MeasuredSet};
use crate::mesh::{SimplicialSet, VertexTag};

/// Lipschitz constant of the nearest-point retraction onto a cap.
pub const C0: f64 = PI;

/// `τ₀` as a fraction of the sphere radius.
pub const TAU0_FRACTION: f64 = 0.5;

/// Radii and collar width of the construction.
#[derive(Debug, Clone)]
pub struct DeformationParams {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub tau: f64,
    pub boundary: BoundaryConfig,
}

impl DeformationParams {
    pub fn new(r0: f64, r1: f64, r2: f64, tau: f64, boundary: BoundaryConfig) -> Result<Self> {
        let p = Self { r0, r1, r2, tau, boundary };
        p.validate()?;
        Ok(p)
    }

    pub fn tau0(&self) -> f64 {
        TAU0_FRACTION * self.r0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > self.r1 && self.r1 > self.r2 && self.r2 > 0.0) || !self.r0.is_finite() {
            return Err(Error::InvalidParams(format!(
                "radii must satisfy r0 > r1 > r2 > 0, got {}, {}, {}",
                self.r0, self.r1, self.r2
            )));
        }
        let cap = 0.25 * self.tau0().min(self.r0);
        if !(self.tau > 0.0 && self.tau < cap) {
            return Err(Error::InvalidParams(format!("tau must lie in (0, {cap}), got {}", self.tau)));
        }
        Ok(())
    }
}

/// `L* ∩ ∂B` for one affine piece: the set of points `w` of the sphere in
/// the span of the piece and the viewpoint with `⟨w, u⟩ ≥ δ`.
#[derive(Debug, Clone)]
struct Cap {
    /// Unit vector towards the foot of the piece; `None` when the piece
    /// passes through the viewpoint.
    u: Option<Point>,
    delta: f64,
    /// Orthonormal directions of the piece.
    dirs: Vec<Point>,
    /// Foot of the piece relative to the center.
    foot: Point,
}

impl Cap {
    fn project_plane(&self, y: &Point) -> (f64, Point) {
        let along: Point = self.dirs.iter().map(|b| b * b.dot(y)).sum();
        (self.u.map_or(0.0, |u| u.dot(y)), along)
    }

    /// Nearest point of the cap on the sphere of radius `r`.
    fn nearest(&self, y: &Point, r: f64) -> Point {
        let (qu, ql) = self.project_plane(y);
        let q = self.u.map_or(ql, |u| u * qu + ql);
        let qn = q.norm();
        let w = if qn > 0.0 { q * (r / qn) } else { self.fallback(r) };
        match self.u {
            Some(u) if u.dot(&w) < self.delta => {
                let side = (r * r - self.delta * self.delta).max(0.0).sqrt();
                let ln = ql.norm();
                let dir = if ln > 0.0 { ql / ln } else { self.dirs.first().copied().unwrap_or_else(Point::zeros) };
                u * self.delta + dir * side
            }
            _ => w,
        }
    }

    fn fallback(&self, r: f64) -> Point {
        match (self.u, self.dirs.first()) {
            (Some(u), _) => u * r,
            (None, Some(b)) => b * r,
            (None, None) => Point::zeros(),
        }
    }

    /// Distance to the piece cut down to the closed ball of radius `r`.
    fn distance_in_ball(&self, x: &Point, r: f64) -> f64 {
        let side = (r * r - self.delta * self.delta).max(0.0).sqrt();
        let w: Point = self.dirs.iter().map(|b| b * b.dot(&(x - self.foot))).sum();
        let wn = w.norm();
        let p = if wn > side { self.foot + w * (side / wn) } else { self.foot + w };
        (x - p).norm()
    }
}

/// The retraction `π` on the closed ball of radius `r` about the viewpoint.
#[derive(Debug, Clone)]
pub struct Retraction {
    center: Point,
    r: f64,
    tau: f64,
    caps: Vec<Cap>,
}

/// Builds `π` for affine boundary pieces on the sphere of radius `r`.
pub fn build_retraction(boundary: &BoundaryConfig, r: f64, tau: f64) -> Result<Retraction> {
    if !(r > 0.0 && tau > 0.0) {
        return Err(Error::InvalidParams("retraction needs r > 0 and tau > 0".into()));
    }
    let center = *boundary.viewpoint();
    let mut caps = Vec::new();
    for piece in boundary.pieces() {
        if !piece.is_affine() {
            return Err(Error::Unsupported("retractions need affine boundary pieces".into()));
        }
        let foot = piece.flat.project(&center) - center;
        let delta = foot.norm();
        if delta > r {
            continue;
        }
        let u = (delta > FLAT_TOL).then(|| foot / delta);
        caps.push(Cap { u, delta, dirs: piece.flat.basis().to_vec(), foot });
    }
    Ok(Retraction { center, r, tau, caps })
}

impl Retraction {
    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    /// Bound on the Lipschitz constant of `π` on the closed ball.
    pub fn lipschitz_bound(&self) -> f64 {
        13.0 * C0
    }

    /// Nearest point of `L* ∩ ∂B` and its distance, for `y` relative to the
    /// center.
    fn nearest_rel(&self, y: &Point) -> Option<(Point, f64)> {
        self.caps
            .iter()
            .map(|c| {
                let p = c.nearest(y, self.r);
                (p, (y - p).norm())
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// `π₀`: nearest point of `L* ∩ ∂B` to a point of the sphere.
    pub fn pi0(&self, y: &Point) -> Option<Point> {
        self.nearest_rel(&(y - self.center)).map(|(p, _)| p + self.center)
    }

    /// `dist(y, L* ∩ ∂B)`, infinite when there is no boundary in the ball.
    pub fn cap_distance(&self, y: &Point) -> f64 {
        self.nearest_rel(&(y - self.center)).map_or(f64::INFINITY, |(_, d)| d)
    }

    fn on_sphere_rel(&self, y: &Point) -> Point {
        match self.nearest_rel(y) {
            Some((p, d)) if d <= self.tau => p,
            Some((p, d)) if d <= 2.0 * self.tau => {
                let a = d / self.tau - 1.0;
                y * a + p * (1.0 - a)
            }
            _ => *y,
        }
    }

    /// `π` on the sphere `∂B`.
    pub fn on_sphere(&self, y: &Point) -> Point {
        self.on_sphere_rel(&(y - self.center)) + self.center
    }

    /// `π(x) = (|x|/r)·π(r x/|x|)`.
    pub fn apply(&self, x: &Point) -> Point {
        let v = x - self.center;
        let n = v.norm();
        if n == 0.0 {
            return self.center;
        }
        self.on_sphere_rel(&(v * (self.r / n))) * (n / self.r) + self.center
    }

    /// `d(x) = dist(r x/|x|, L* ∩ ∂B)`.
    pub fn radial_distance(&self, x: &Point) -> f64 {
        let v = x - self.center;
        let n = v.norm();
        if n == 0.0 {
            return f64::INFINITY;
        }
        self.nearest_rel(&(v * (self.r / n))).map_or(f64::INFINITY, |(_, d)| d)
    }

    /// Distance from `x` to the boundary inside the closed ball.
    pub fn boundary_distance(&self, x: &Point) -> f64 {
        let v = x - self.center;
        self.caps.iter().map(|c| c.distance_in_ball(&v, self.r)).fold(f64::INFINITY, f64::min)
    }
}

/// Which piece of the construction a point falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Outside,
    A1,
    A2,
    B2,
}

/// The glued map `φ` and its homotopy `φ_t`.
#[derive(Debug, Clone)]
pub struct Deformation {
    params: DeformationParams,
    retraction: Retraction,
}

impl Deformation {
    pub fn new(params: DeformationParams) -> Result<Self> {
        params.validate()?;
        let retraction = build_retraction(&params.boundary, params.r0, params.tau)?;
        Ok(Self { params, retraction })
    }

    pub fn params(&self) -> &DeformationParams {
        &self.params
    }

    pub fn retraction(&self) -> &Retraction {
        &self.retraction
    }

    pub fn region(&self, x: &Point) -> Region {
        let n = (x - self.retraction.center).norm();
        let p = &self.params;
        if n >= p.r0 {
            Region::Outside
        } else if n >= p.r1 {
            Region::A1
        } else if n >= p.r2 {
            Region::A2
        } else {
            Region::B2
        }
    }

    /// `ħ(x) = [1 − dist(x, L)/τ − d(x)/τ]₊`.
    pub fn hbar(&self, x: &Point) -> f64 {
        let t = self.params.tau;
        let d = self.retraction.radial_distance(x);
        if !d.is_finite() {
            return 0.0;
        }
        (1.0 - self.retraction.boundary_distance(x) / t - d / t).max(0.0)
    }

    pub fn phi(&self, x: &Point) -> Point {
        let c = self.retraction.center;
        let p = &self.params;
        let n = (x - c).norm();
        match self.region(x) {
            Region::Outside => *x,
            Region::A1 => {
                let a1 = (n - p.r1) / (p.r0 - p.r1);
                x * a1 + self.retraction.apply(x) * (1.0 - a1)
            }
            Region::A2 => {
                let a2 = (n - p.r2) / (p.r1 - p.r2);
                let h = self.hbar(x);
                c + (self.retraction.apply(x) - c) * (a2 + (1.0 - a2) * h)
            }
            Region::B2 => {
                if n == 0.0 {
                    return c;
                }
                c + (self.retraction.apply(x) - c) * self.hbar(x)
            }
        }
    }

    /// `φ_t(x) = t x + (1 − t) φ(x)`.
    pub fn phi_t(&self, x: &Point, t: f64) -> Point {
        x * t + self.phi(x) * (1.0 - t)
    }
}

/// Post-hoc checks on a deformed mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeformAudit {
    /// Vertices outside `B0` that moved.
    pub moved_outside: usize,
    /// Largest `|φ(x) − c| − r0` over vertices inside `B0` (negative is good).
    pub max_image_excess: f64,
    /// Largest `|φ(x) − c| − |x − c|` inside `B1`.
    pub max_norm_increase: f64,
    /// Largest distance from an on-flat vertex image to its flat.
    pub max_sliding_error: f64,
    pub tagged: usize,
}

impl DeformAudit {
    pub fn passes(&self, tol: f64) -> bool {
        self.moved_outside == 0 && self.max_image_excess <= tol && self.max_norm_increase <= tol && self.max_sliding_error <= tol
    }
}

/// Maps every vertex by `φ`, keeping connectivity. Collapsed simplices are
/// kept with zero volume.
pub fn deform(mesh: &SimplicialSet, params: &DeformationParams) -> Result<(SimplicialSet, DeformAudit)> {
    let def = Deformation::new(params.clone())?;
    let pieces = params.boundary.pieces();
    for tag in mesh.tags() {
        if let VertexTag::OnFlat(i) = tag {
            if *i >= pieces.len() {
                return Err(Error::UnknownFlat(*i));
            }
        }
    }
    let images: Vec<Point> = mesh.vertices().par_iter().map(|x| def.phi(x)).collect();
    let c = *params.boundary.viewpoint();
    let mut audit = DeformAudit {
        moved_outside: 0,
        max_image_excess: f64::NEG_INFINITY,
        max_norm_increase: f64::NEG_INFINITY,
        max_sliding_error: 0.0,
        tagged: 0,
    };
    for ((x, y), tag) in mesh.vertices().iter().zip(&images).zip(mesh.tags()) {
        let (nx, ny) = ((x - c).norm(), (y - c).norm());
        if nx >= params.r0 {
            if x != y {
                audit.moved_outside += 1;
            }
        } else {
            audit.max_image_excess = audit.max_image_excess.max(ny - params.r0);
            if nx < params.r1 {
                audit.max_norm_increase = audit.max_norm_increase.max(ny - nx);
            }
        }
        if let VertexTag::OnFlat(i) = tag {
            audit.tagged += 1;
            audit.max_sliding_error = audit.max_sliding_error.max(pieces[*i].distance(y));
        }
    }
    Ok((mesh.with_vertices_unchecked(images), audit))
}

/// Jacobian of `x ↦ α(|x|)·x` on a `d`-plane making angle `θ` with the
/// radius, `α(ρ) = (ρ − r2)/(r1 − r2)`.
pub fn radial_jacobian(cos_theta: f64, rho: f64, r1: f64, r2: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&cos_theta) {
        return Err(Error::Domain(format!("cos θ = {cos_theta} outside [0, 1]")));
    }
    if !(r1 > r2) || !(r2 <= rho && rho <= r1) || d == 0 {
        return Err(Error::Domain(format!("need r2 ≤ ρ ≤ r1 with r1 > r2 and d ≥ 1, got ρ={rho}, r1={r1}, r2={r2}")));
    }
    let w = r1 - r2;
    let alpha = (rho - r2) / w;
    let c2 = cos_theta * cos_theta;
    let radial = (2.0 * rho - r2) / w;
    let beta = (c2 * radial * radial + (1.0 - c2) * alpha * alpha).sqrt();
    Ok(alpha.powi(d as i32 - 1) * beta)
}

/// `m(r) + (r/d)·ℋ^{d−1}(E ∩ ∂B(c, r))`, the measure of the cone over the
/// trace of `E` together with the cone over the boundary.
pub fn cone_competitor_measure(e: &dyn MeasuredSet, boundary: &BoundaryConfig, r: f64, tol: f64) -> Result<MeasureResult> {
    let d = e.set_dim();
    if boundary.set_dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: boundary.set_dim() });
    }
    let m = m_of_r(boundary, r)?;
    let slice = e.sphere_slice(boundary.viewpoint(), r, tol)?;
    Ok(m.plus(slice.scaled(r / d as f64)))
}
