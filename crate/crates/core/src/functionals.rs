//! Boundary correction terms seen from a viewpoint: the cone measure `m`,
//! its integral transform `H`, the multiplicity-weighted `H₁`, the shade of
//! a union of pieces, and the gauge integral `A`.
//!
//! Pieces are reduced to polar data. For `d = 1` a point piece is a radius
//! along a direction from the viewpoint. For `d = 2` a line or segment piece
//! is an angular interval in the plane it spans with the viewpoint, on which
//! its radius is `δ / cos(ψ − ψ_f)`. Every angular integral of such radii is
//! elementary, so `m`, `H₁` and the union shade are exact; only `H` needs
//! quadrature in the radius.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{BoundaryPiece, Point, Similarity, FLAT_TOL};
use crate::measures::{MeasureResult, Method};
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaugeFunction {
    Zero,
    Constant { c: f64 },
    Power { c: f64, beta: f64 },
}

impl GaugeFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GaugeFunction::Zero => Ok(()),
            GaugeFunction::Constant { c } if c >= 0.0 => Ok(()),
            GaugeFunction::Power { c, beta } if c >= 0.0 && beta > 0.0 => Ok(()),
            _ => Err(Error::InvalidParams(format!("gauge {self:?} is not nondecreasing and nonnegative"))),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            GaugeFunction::Zero => 0.0,
            GaugeFunction::Constant { c } => c,
            GaugeFunction::Power { c, beta } => c * t.powf(beta),
        }
    }

    /// Whether `∫₀ h(t) dt/t` is finite.
    pub fn satisfies_dini(&self) -> bool {
        !matches!(*self, GaugeFunction::Constant { c } if c > 0.0)
    }
}

/// `A(r) = ∫₀ʳ h(t) dt/t`.
pub fn gauge_a(h: &GaugeFunction, r: f64) -> Result<f64> {
    h.validate()?;
    if !(r >= 0.0) {
        return Err(Error::InvalidParams("radius must be nonnegative".into()));
    }
    match *h {
        GaugeFunction::Zero | GaugeFunction::Constant { c: 0.0 } => Ok(0.0),
        GaugeFunction::Constant { c } => Err(Error::DiniViolation { c }),
        GaugeFunction::Power { c, beta } => Ok(c * r.powf(beta) / beta),
    }
}

/// Point pieces on one ray from the viewpoint (`d = 1`).
#[derive(Debug, Clone)]
struct RayGroup {
    dir: Point,
    /// Sorted distances.
    radii: Vec<f64>,
}

/// One line piece seen in polar coordinates of its plane (`d = 2`).
#[derive(Debug, Clone, Copy)]
struct PolarSeg {
    delta: f64,
    foot: f64,
    a: f64,
    b: f64,
    /// Distance from the viewpoint to the piece.
    near: f64,
    /// Distances to the endpoints that lie at finite range.
    ends: [f64; 2],
}

impl PolarSeg {
    fn radius(&self, psi: f64) -> f64 {
        self.delta / (psi - self.foot).cos()
    }

    /// `∫_p^q ½ρ(ψ)² dψ`, the area swept by the cone over the piece.
    fn sweep(&self, p: f64, q: f64) -> f64 {
        0.5 * self.delta * self.delta * ((q - self.foot).tan() - (p - self.foot).tan())
    }

    fn covers(&self, psi: f64) -> bool {
        self.a <= psi && psi <= self.b
    }
}

#[derive(Debug, Clone)]
struct PlaneGroup {
    e1: Point,
    e2: Point,
    segs: Vec<PolarSeg>,
}

#[derive(Debug, Clone)]
enum Polar {
    Rays(Vec<RayGroup>),
    Planes(Vec<PlaneGroup>),
}

/// Boundary pieces together with the viewpoint they are seen from.
#[derive(Debug, Clone)]
pub struct BoundaryConfig {
    pieces: Vec<BoundaryPiece>,
    viewpoint: Point,
    set_dim: usize,
    polar: Polar,
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

impl BoundaryConfig {
    pub fn new(pieces: Vec<BoundaryPiece>, viewpoint: Point, set_dim: usize) -> Result<Self> {
        if !(1..=2).contains(&set_dim) {
            return Err(Error::UnsupportedDimension(format!("set dimension {set_dim}")));
        }
        for p in &pieces {
            if p.dim() >= set_dim {
                return Err(Error::PieceTooLarge { piece_dim: p.dim(), set_dim });
            }
        }
        let polar = if set_dim == 1 { Self::rays(&pieces, &viewpoint) } else { Self::planes(&pieces, &viewpoint) };
        Ok(Self { pieces, viewpoint, set_dim, polar })
    }

    fn rays(pieces: &[BoundaryPiece], v: &Point) -> Polar {
        let mut groups: Vec<RayGroup> = Vec::new();
        for p in pieces {
            let w = p.flat.origin() - v;
            let rho = w.norm();
            if rho <= FLAT_TOL {
                continue;
            }
            let dir = w / rho;
            match groups.iter_mut().find(|g| (g.dir - dir).norm() <= FLAT_TOL) {
                Some(g) => g.radii.push(rho),
                None => groups.push(RayGroup { dir, radii: vec![rho] }),
            }
        }
        for g in &mut groups {
            g.radii.sort_by(f64::total_cmp);
        }
        Polar::Rays(groups)
    }

    fn planes(pieces: &[BoundaryPiece], v: &Point) -> Polar {
        let mut groups: Vec<PlaneGroup> = Vec::new();
        for p in pieces.iter().filter(|p| p.dim() == 1) {
            let o = p.flat.origin();
            let b = p.flat.basis()[0];
            let s_f = b.dot(&(v - o));
            let f = o + b * s_f;
            let delta = (f - v).norm();
            if delta <= FLAT_TOL {
                // the cone over a line through the viewpoint is the line itself
                continue;
            }
            let u = (f - v) / delta;
            let in_plane = |g: &PlaneGroup, x: &Point| {
                (x - g.e1 * g.e1.dot(x) - g.e2 * g.e2.dot(x)).norm() <= FLAT_TOL
            };
            let gi = match groups.iter().position(|g| in_plane(g, &u) && in_plane(g, &b)) {
                Some(i) => i,
                None => {
                    groups.push(PlaneGroup { e1: u, e2: b, segs: Vec::new() });
                    groups.len() - 1
                }
            };
            let g = &mut groups[gi];
            let foot = u.dot(&g.e2).atan2(u.dot(&g.e1));
            let sigma = (-foot.sin() * b.dot(&g.e1) + foot.cos() * b.dot(&g.e2)).signum();
            let (lo, hi) = p.extent.map_or((f64::NEG_INFINITY, f64::INFINITY), |(l, h)| (l - s_f, h - s_f));
            let (x1, x2) = (foot + sigma * (lo / delta).atan(), foot + sigma * (hi / delta).atan());
            let (a, b_ang) = (x1.min(x2), x1.max(x2));
            if b_ang - a <= 0.0 {
                continue;
            }
            let near = p.distance(v);
            let end = |s: f64| if s.is_finite() { delta.hypot(s) } else { f64::INFINITY };
            let ends = [end(lo), end(hi)];
            let shift = wrap(a) - a;
            let (a, b_ang, foot) = (a + shift, b_ang + shift, foot + shift);
            if b_ang > PI {
                g.segs.push(PolarSeg { delta, foot, a, b: PI, near, ends });
                g.segs.push(PolarSeg { delta, foot: foot - 2.0 * PI, a: -PI, b: b_ang - 2.0 * PI, near, ends });
            } else {
                g.segs.push(PolarSeg { delta, foot, a, b: b_ang, near, ends });
            }
        }
        Polar::Planes(groups)
    }

    pub fn pieces(&self) -> &[BoundaryPiece] {
        &self.pieces
    }

    pub fn viewpoint(&self) -> &Point {
        &self.viewpoint
    }

    pub fn set_dim(&self) -> usize {
        self.set_dim
    }

    pub fn with_viewpoint(&self, viewpoint: Point) -> Self {
        Self::new(self.pieces.clone(), viewpoint, self.set_dim).expect("pieces were validated")
    }

    pub fn mapped(&self, sim: &Similarity) -> Result<Self> {
        let pieces = self.pieces.iter().map(|p| p.mapped(sim)).collect::<Result<Vec<_>>>()?;
        Self::new(pieces, sim.apply(&self.viewpoint), self.set_dim)
    }

    /// Smallest radius at which `m` becomes positive.
    pub fn first_radius(&self) -> f64 {
        match &self.polar {
            Polar::Rays(g) => g.iter().map(|g| g.radii[0]).fold(f64::INFINITY, f64::min),
            Polar::Planes(g) => g.iter().flat_map(|g| &g.segs).map(|s| s.near).fold(f64::INFINITY, f64::min),
        }
    }

    /// Radii where `m` changes its analytic form.
    fn radial_breaks(&self) -> Vec<f64> {
        let mut out = Vec::new();
        match &self.polar {
            Polar::Rays(groups) => {
                for g in groups {
                    out.extend(&g.radii);
                }
            }
            Polar::Planes(groups) => {
                for g in groups {
                    for (i, s) in g.segs.iter().enumerate() {
                        out.extend([s.near, s.delta, s.ends[0], s.ends[1]]);
                        for t in &g.segs[i + 1..] {
                            for psi in crossings(s, t) {
                                let (ri, rj) = (s.radius(psi), t.radius(psi));
                                if ri > 0.0 && rj > 0.0 && ri.is_finite() {
                                    out.push(ri);
                                }
                            }
                        }
                    }
                }
            }
        }
        out.retain(|x| x.is_finite());
        out
    }
}

/// Angles where the radii of two pieces agree.
fn crossings(s: &PolarSeg, t: &PolarSeg) -> [f64; 2] {
    let a = s.delta * t.foot.cos() - t.delta * s.foot.cos();
    let b = s.delta * t.foot.sin() - t.delta * s.foot.sin();
    let psi = a.atan2(-b);
    [wrap(psi), wrap(psi + PI)]
}

/// Splits `[−π, π]` into cells on which each covering piece keeps its
/// ordering relative to the others and to every radius in `levels`, then
/// hands each cell and its covering pieces (with midpoint radii) to `f`.
fn for_each_cell(g: &PlaneGroup, levels: &[f64], mut f: impl FnMut(f64, f64, &mut Vec<(usize, f64)>)) {
    let mut cuts = vec![-PI, PI];
    let mut push = |x: f64| {
        let w = wrap(x);
        cuts.push(w);
        if w <= -PI + 1e-15 {
            cuts.push(PI);
        }
    };
    for (i, s) in g.segs.iter().enumerate() {
        push(s.a);
        if s.b < PI {
            push(s.b);
        }
        for &t in levels {
            if t > s.delta {
                let w = (s.delta / t).acos();
                push(s.foot + w);
                push(s.foot - w);
            }
        }
        for t in &g.segs[i + 1..] {
            for psi in crossings(s, t) {
                push(psi);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut cover = Vec::new();
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q - p <= 1e-15 {
            continue;
        }
        let mid = 0.5 * (p + q);
        cover.clear();
        cover.extend(g.segs.iter().enumerate().filter(|(_, s)| s.covers(mid)).map(|(i, s)| (i, s.radius(mid))));
        if !cover.is_empty() {
            f(p, q, &mut cover);
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParams(format!("radius {r} must be finite and nonnegative")));
    }
    Ok(())
}

/// `m(r)`: measure of the cone from the viewpoint over `L′ ∩ B̄(r)`.
pub fn m_of_r(config: &BoundaryConfig, r: f64) -> Result<MeasureResult> {
    check_radius(r)?;
    Ok(MeasureResult::exact(m_exact(config, r)))
}

fn m_exact(config: &BoundaryConfig, r: f64) -> f64 {
    match &config.polar {
        Polar::Rays(groups) => groups
            .iter()
            .map(|g| g.radii.iter().copied().filter(|x| *x <= r).fold(0.0, f64::max))
            .sum(),
        Polar::Planes(groups) => {
            let mut total = 0.0;
            for g in groups {
                for_each_cell(g, &[r], |p, q, cover| {
                    let best = cover.iter().filter(|(_, rho)| *rho <= r).max_by(|x, y| x.1.total_cmp(&y.1));
                    if let Some((i, _)) = best {
                        total += g.segs[*i].sweep(p, q);
                    }
                });
            }
            total
        }
    }
}

/// `H(r) = d rᵈ ∫ m(t) t^{−d−1} dt`, integrated from the first radius where
/// `m > 0`.
pub fn h_of_r(config: &BoundaryConfig, r: f64, tol: f64) -> Result<MeasureResult> {
    check_radius(r)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tolerance must be positive".into()));
    }
    let t0 = config.first_radius();
    if !(r > t0) {
        return Ok(MeasureResult::zero());
    }
    let d = config.set_dim as f64;
    let scale = d * r.powi(config.set_dim as i32);
    let mut breaks = config.radial_breaks();
    if let Polar::Rays(_) = config.polar {
        // m is a step function: integrate each step exactly
        breaks.push(r);
        breaks.retain(|x| *x >= t0 && *x <= r);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let integral: f64 = breaks
            .windows(2)
            .map(|w| m_exact(config, w[0]) * (1.0 / w[0] - 1.0 / w[1]))
            .sum();
        return Ok(MeasureResult::exact(scale * integral));
    }
    let q = quadrature::integrate_sqrt_left(|t| m_exact(config, t) / (t * t * t), t0, r, &breaks, tol / scale);
    Ok(MeasureResult {
        value: scale * q.value,
        abs_error: scale * q.abs_error,
        method: Method::SlicingQuadrature,
        samples_or_depth: q.panels,
    })
}

fn distinct(radii: &mut Vec<(usize, f64)>) {
    radii.sort_by(|x, y| x.1.total_cmp(&y.1));
    radii.dedup_by(|x, y| (x.1 - y.1).abs() <= FLAT_TOL * y.1.max(1.0));
}

/// `H₁(r) = ∫_{S ∩ B(r)} N dℋᵈ`, where `N(y)` counts distinct boundary points
/// on the segment from the viewpoint to `y`.
pub fn h1_of_r(config: &BoundaryConfig, r: f64) -> Result<MeasureResult> {
    check_radius(r)?;
    let value = match &config.polar {
        Polar::Rays(groups) => groups
            .iter()
            .map(|g| {
                let mut hits: Vec<(usize, f64)> = g.radii.iter().map(|x| (0, *x)).collect();
                distinct(&mut hits);
                hits.iter().map(|(_, x)| (r - x).max(0.0)).sum::<f64>()
            })
            .sum(),
        Polar::Planes(groups) => {
            let mut total = 0.0;
            for g in groups {
                for_each_cell(g, &[r], |p, q, cover| {
                    cover.retain(|(_, rho)| *rho < r);
                    distinct(cover);
                    for (i, _) in cover.iter() {
                        total += 0.5 * r * r * (q - p) - g.segs[*i].sweep(p, q);
                    }
                });
            }
            total
        }
    };
    Ok(MeasureResult::exact(value))
}

/// `ℋᵈ(S ∩ B(r))` for the shade `S` of the union of all pieces.
pub fn shade_union_measure(config: &BoundaryConfig, r: f64) -> Result<MeasureResult> {
    check_radius(r)?;
    let value = match &config.polar {
        Polar::Rays(groups) => groups.iter().map(|g| (r - g.radii[0]).max(0.0)).sum(),
        Polar::Planes(groups) => {
            let mut total = 0.0;
            for g in groups {
                for_each_cell(g, &[r], |p, q, cover| {
                    let first = cover.iter().min_by(|x, y| x.1.total_cmp(&y.1)).expect("non-empty cover");
                    if first.1 < r {
                        total += 0.5 * r * r * (q - p) - g.segs[first.0].sweep(p, q);
                    }
                });
            }
            total
        }
    };
    Ok(MeasureResult::exact(value))
}

/// The three boundary terms at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShadeComparison {
    pub h: MeasureResult,
    pub h1: MeasureResult,
    pub shade: MeasureResult,
}

impl ShadeComparison {
    /// `H = ℋᵈ(S ∩ B)` within the combined error plus `slack`.
    pub fn h_equals_shade(&self, slack: f64) -> bool {
        (self.h.value - self.shade.value).abs() <= self.h.abs_error + self.shade.abs_error + slack
    }

    /// `shade ≤ H ≤ H₁` within the combined error plus `slack`.
    pub fn ordered(&self, slack: f64) -> bool {
        let e = self.h.abs_error + self.h1.abs_error + self.shade.abs_error + slack;
        self.shade.value <= self.h.value + e && self.h.value <= self.h1.value + e
    }
}

pub fn compare_shade(config: &BoundaryConfig, r: f64, tol: f64) -> Result<ShadeComparison> {
    Ok(ShadeComparison {
        h: h_of_r(config, r, tol)?,
        h1: h1_of_r(config, r)?,
        shade: shade_union_measure(config, r)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{axis, pt, AffineFlat};

    fn line(origin: Point, dir: Point) -> BoundaryPiece {
        BoundaryPiece::affine(AffineFlat::line(origin, dir, 3).unwrap())
    }

    fn shade_of_line(delta: f64, r: f64) -> f64 {
        if r <= delta {
            0.0
        } else {
            r * r * (delta / r).acos() - delta * (r * r - delta * delta).sqrt()
        }
    }

    #[test]
    fn gauge_examples() {
        assert_eq!(gauge_a(&GaugeFunction::Zero, 3.0).unwrap(), 0.0);
        assert_eq!(gauge_a(&GaugeFunction::Power { c: 0.6, beta: 0.5 }, 1.0).unwrap(), 1.2);
        assert_eq!(
            gauge_a(&GaugeFunction::Constant { c: 0.1 }, 1.0),
            Err(Error::DiniViolation { c: 0.1 })
        );
        assert!(!GaugeFunction::Constant { c: 0.1 }.satisfies_dini());
        assert!(GaugeFunction::Power { c: 1.0, beta: -1.0 }.validate().is_err());
    }

    #[test]
    fn one_dimensional_examples() {
        let p = BoundaryPiece::affine(AffineFlat::point(pt(&[0.3, 0.4]), 2).unwrap());
        let cfg = BoundaryConfig::new(vec![p], Point::zeros(), 1).unwrap();
        assert_eq!(m_of_r(&cfg, 0.4).unwrap().value, 0.0);
        assert_eq!(m_of_r(&cfg, 0.5).unwrap().value, 0.5);
        assert_eq!(m_of_r(&cfg, 7.0).unwrap().value, 0.5);
        let h = h_of_r(&cfg, 2.0, 1e-12).unwrap();
        // r|p| (1/|p| − 1/r) = r − |p|
        assert!((h.value - 1.5).abs() < 1e-15);
        assert_eq!(h_of_r(&cfg, 0.3, 1e-12).unwrap().value, 0.0);
        assert_eq!(h1_of_r(&cfg, 2.0).unwrap().value, 1.5);
    }

    #[test]
    fn line_at_distance() {
        let delta = 0.4;
        let cfg = BoundaryConfig::new(vec![line(pt(&[delta, 0.0, 0.0]), axis(1))], Point::zeros(), 2).unwrap();
        assert_eq!(m_of_r(&cfg, 0.3).unwrap().value, 0.0);
        let r = 1.1;
        let m = m_of_r(&cfg, r).unwrap().value;
        assert!((m - delta * (r * r - delta * delta).sqrt()).abs() < 1e-14);
        let tol = 1e-10;
        let h = h_of_r(&cfg, 2.0 * delta, tol).unwrap();
        assert!((h.value - shade_of_line(delta, 2.0 * delta)).abs() <= 2.0 * tol);
        let s = shade_union_measure(&cfg, r).unwrap().value;
        assert!((s - shade_of_line(delta, r)).abs() < 1e-14);
        assert!((h1_of_r(&cfg, r).unwrap().value - s).abs() < 1e-14);
    }

    #[test]
    fn segment_cone_is_a_triangle() {
        // segment from (1, 0) to (1, 2) seen from the origin
        let seg = BoundaryPiece::segment(pt(&[1.0, 0.0, 0.0]), pt(&[1.0, 2.0, 0.0]), 3).unwrap();
        let cfg = BoundaryConfig::new(vec![seg], Point::zeros(), 2).unwrap();
        assert!((m_of_r(&cfg, 10.0).unwrap().value - 1.0).abs() < 1e-14);
        let r: f64 = 1.5;
        assert!((m_of_r(&cfg, r).unwrap().value - 0.5 * (r * r - 1.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn lines_through_the_viewpoint_are_invisible() {
        let cfg = BoundaryConfig::new(vec![line(Point::zeros(), axis(0))], Point::zeros(), 2).unwrap();
        assert_eq!(m_of_r(&cfg, 1.0).unwrap().value, 0.0);
        assert_eq!(h_of_r(&cfg, 1.0, 1e-9).unwrap().value, 0.0);
    }

    #[test]
    fn too_large_pieces_are_rejected() {
        let plane = BoundaryPiece::affine(AffineFlat::new(Point::zeros(), vec![axis(0), axis(1)], 3).unwrap());
        assert!(matches!(
            BoundaryConfig::new(vec![plane], Point::zeros(), 2),
            Err(Error::PieceTooLarge { .. })
        ));
    }

    #[test]
    fn parallel_lines_double_count() {
        let a = line(pt(&[0.3, 0.0, 0.0]), axis(1));
        let b = line(pt(&[0.5, 0.0, 0.0]), axis(1));
        let cfg = BoundaryConfig::new(vec![a.clone(), b], Point::zeros(), 2).unwrap();
        let r = 1.0;
        let h1 = h1_of_r(&cfg, r).unwrap().value;
        let exact = shade_of_line(0.3, r) + shade_of_line(0.5, r);
        assert!((h1 - exact).abs() < 1e-13);
        assert!((shade_union_measure(&cfg, r).unwrap().value - shade_of_line(0.3, r)).abs() < 1e-13);
        let dup = BoundaryConfig::new(vec![a.clone(), a], Point::zeros(), 2).unwrap();
        assert!((h1_of_r(&dup, r).unwrap().value - shade_of_line(0.3, r)).abs() < 1e-13);
    }
}
