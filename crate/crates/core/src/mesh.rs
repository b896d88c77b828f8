//! Simplicial d-sets (d ∈ {1, 2}) with per-vertex sliding tags, their
//! OFF-style text format, and a few structured generators.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{check_ambient, AffineFlat, Point, Similarity, FLAT_TOL};

/// Minimum d-volume of a valid simplex.
pub const MIN_VOLUME: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexTag {
    Free,
    /// The vertex may slide inside the flat with this registry id.
    OnFlat(usize),
    Pinned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialSet {
    vertices: Vec<Point>,
    /// Vertex indices, `dim + 1` per simplex.
    simplices: Vec<usize>,
    tags: Vec<VertexTag>,
    dim: usize,
    ambient_dim: usize,
}

/// d-volume of the simplex with the given corners (`d + 1` of them).
pub fn simplex_volume(p: &[Point]) -> f64 {
    match p.len() {
        2 => (p[1] - p[0]).norm(),
        3 => {
            let u = p[1] - p[0];
            let v = p[2] - p[0];
            let g = u.norm_squared() * v.norm_squared() - u.dot(&v).powi(2);
            0.5 * g.max(0.0).sqrt()
        }
        _ => 0.0,
    }
}

/// Closest point of the segment `[a, b]` to `p`.
pub fn closest_on_segment(p: &Point, a: &Point, b: &Point) -> Point {
    let ab = b - a;
    let l2 = ab.norm_squared();
    if l2 == 0.0 {
        return *a;
    }
    a + ab * ((p - a).dot(&ab) / l2).clamp(0.0, 1.0)
}

/// Closest point of the triangle `abc` to `p` (works in any dimension).
pub fn closest_on_triangle(p: &Point, a: &Point, b: &Point, c: &Point) -> Point {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Distance from `p` to the simplex with the given corners.
pub fn simplex_distance(p: &Point, s: &[Point]) -> f64 {
    match s.len() {
        2 => (p - closest_on_segment(p, &s[0], &s[1])).norm(),
        3 => (p - closest_on_triangle(p, &s[0], &s[1], &s[2])).norm(),
        _ => (p - s[0]).norm(),
    }
}

impl SimplicialSet {
    pub fn new(
        vertices: Vec<Point>,
        simplices: Vec<usize>,
        tags: Vec<VertexTag>,
        dim: usize,
        ambient_dim: usize,
    ) -> Result<Self> {
        check_ambient(ambient_dim)?;
        if !(1..=2).contains(&dim) || dim >= ambient_dim {
            return Err(Error::UnsupportedDimension(format!(
                "mesh dimension {dim} in ambient dimension {ambient_dim}"
            )));
        }
        if tags.len() != vertices.len() {
            return Err(Error::Mesh("one tag per vertex required".into()));
        }
        if !simplices.len().is_multiple_of(dim + 1) {
            return Err(Error::Mesh("simplex index list length".into()));
        }
        if let Some(i) = simplices.iter().find(|i| **i >= vertices.len()) {
            return Err(Error::Mesh(format!("vertex index {i} out of range")));
        }
        if vertices.iter().any(|v| v.iter().any(|c| !c.is_finite()) || (ambient_dim..4).any(|i| v[i] != 0.0)) {
            return Err(Error::Mesh("vertex coordinates outside the ambient space".into()));
        }
        let mesh = Self { vertices, simplices, tags, dim, ambient_dim };
        mesh.check_nondegenerate()?;
        Ok(mesh)
    }

    pub fn check_nondegenerate(&self) -> Result<()> {
        for i in 0..self.n_simplices() {
            let volume = self.simplex_volume(i);
            if !(volume > MIN_VOLUME) {
                return Err(Error::DegenerateSimplex { index: i, volume });
            }
        }
        Ok(())
    }

    /// Fails when a vertex tagged `OnFlat(id)` is farther than 1e-9 from its flat.
    pub fn check_tags(&self, flats: &[AffineFlat]) -> Result<()> {
        for (v, tag) in self.vertices.iter().zip(&self.tags) {
            if let VertexTag::OnFlat(id) = tag {
                let flat = flats.get(*id).ok_or(Error::UnknownFlat(*id))?;
                if flat.distance(v) > FLAT_TOL {
                    return Err(Error::Mesh(format!(
                        "vertex off its flat {id} by {:e}",
                        flat.distance(v)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn tags(&self) -> &[VertexTag] {
        &self.tags
    }

    pub fn n_simplices(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    pub fn simplex(&self, i: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.simplices[i * k..(i + 1) * k]
    }

    pub fn simplex_indices(&self) -> &[usize] {
        &self.simplices
    }

    pub fn simplex_points(&self, i: usize) -> Vec<Point> {
        self.simplex(i).iter().map(|j| self.vertices[*j]).collect()
    }

    pub fn simplex_volume(&self, i: usize) -> f64 {
        simplex_volume(&self.simplex_points(i))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_simplices()).map(|i| self.simplex_volume(i)).sum()
    }

    /// Same connectivity and tags, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::Mesh("vertex count changed".into()));
        }
        Self::new(vertices, self.simplices.clone(), self.tags.clone(), self.dim, self.ambient_dim)
    }

    /// Like [`Self::with_vertices`] without the degeneracy check.
    pub(crate) fn with_vertices_unchecked(&self, vertices: Vec<Point>) -> Self {
        Self { vertices, ..self.clone() }
    }

    pub fn with_tags(mut self, tags: Vec<VertexTag>) -> Result<Self> {
        if tags.len() != self.vertices.len() {
            return Err(Error::Mesh("one tag per vertex required".into()));
        }
        self.tags = tags;
        Ok(self)
    }

    pub fn mapped(&self, sim: &Similarity) -> Result<Self> {
        self.with_vertices(self.vertices.iter().map(|v| sim.apply(v)).collect())
    }

    pub fn distance(&self, p: &Point) -> f64 {
        (0..self.n_simplices())
            .map(|i| simplex_distance(p, &self.simplex_points(i)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Disjoint union of two meshes with the same dimensions.
    pub fn merged(&self, other: &SimplicialSet) -> Result<Self> {
        if self.dim != other.dim || self.ambient_dim != other.ambient_dim {
            return Err(Error::Mesh("cannot merge meshes of different dimensions".into()));
        }
        let off = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut tags = self.tags.clone();
        tags.extend_from_slice(&other.tags);
        let mut simplices = self.simplices.clone();
        simplices.extend(other.simplices.iter().map(|i| i + off));
        Self::new(vertices, simplices, tags, self.dim, self.ambient_dim)
    }

    /// Keeps the part `{⟨normal, x⟩ ≤ offset}`; vertices created on the cut
    /// receive `cut_tag`. Triangles are re-triangulated by fans; slivers
    /// below the minimum volume are dropped.
    pub fn clip_halfspace(&self, normal: &Point, offset: f64, cut_tag: VertexTag) -> Result<Self> {
        let k = self.dim + 1;
        let level = |p: &Point| normal.dot(p) - offset;
        let mut vertices = self.vertices.clone();
        let mut tags = self.tags.clone();
        let mut cut_cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut out = Vec::new();
        let mut cut_vertex = |i: usize, j: usize, vertices: &mut Vec<Point>, tags: &mut Vec<VertexTag>| {
            let key = (i.min(j), i.max(j));
            *cut_cache.entry(key).or_insert_with(|| {
                let (a, b) = (vertices[key.0], vertices[key.1]);
                let (la, lb) = (level(&a), level(&b));
                let s = la / (la - lb);
                vertices.push(a + (b - a) * s);
                tags.push(cut_tag);
                vertices.len() - 1
            })
        };
        for si in 0..self.n_simplices() {
            let idx = self.simplex(si);
            let lv: Vec<f64> = idx.iter().map(|i| level(&self.vertices[*i])).collect();
            if lv.iter().all(|l| *l <= 0.0) {
                out.extend_from_slice(idx);
                continue;
            }
            if lv.iter().all(|l| *l >= 0.0) {
                continue;
            }
            // walk the boundary keeping the inside part
            let mut poly = Vec::new();
            for a in 0..k {
                let b = (a + 1) % k;
                if k == 2 && a == 1 {
                    break;
                }
                let (ia, ib) = (idx[a], idx[b]);
                if lv[a] <= 0.0 {
                    poly.push(ia);
                }
                if (lv[a] < 0.0 && lv[b] > 0.0) || (lv[a] > 0.0 && lv[b] < 0.0) {
                    poly.push(cut_vertex(ia, ib, &mut vertices, &mut tags));
                }
            }
            if k == 2 {
                if lv[1] <= 0.0 {
                    poly.push(idx[1]);
                }
                if poly.len() == 2 {
                    out.extend_from_slice(&poly);
                }
            } else {
                for t in 1..poly.len().saturating_sub(1) {
                    out.extend_from_slice(&[poly[0], poly[t], poly[t + 1]]);
                }
            }
        }
        let mut simplices = Vec::with_capacity(out.len());
        for s in out.chunks(k) {
            let pts: Vec<Point> = s.iter().map(|i| vertices[*i]).collect();
            if simplex_volume(&pts) > MIN_VOLUME {
                simplices.extend_from_slice(s);
            }
        }
        Self::new(vertices, simplices, tags, self.dim, self.ambient_dim)?.compacted()
    }

    /// Drops vertices not referenced by any simplex.
    pub fn compacted(&self) -> Result<Self> {
        let mut map = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        let mut tags = Vec::new();
        let mut simplices = Vec::with_capacity(self.simplices.len());
        for i in &self.simplices {
            if map[*i] == usize::MAX {
                map[*i] = vertices.len();
                vertices.push(self.vertices[*i]);
                tags.push(self.tags[*i]);
            }
            simplices.push(map[*i]);
        }
        Self::new(vertices, simplices, tags, self.dim, self.ambient_dim)
    }

    /// Splits every triangle (or segment) into 4 (or 2) by edge midpoints.
    /// Midpoints of edges whose endpoints share a tag inherit it.
    pub fn refined(&self) -> Result<Self> {
        let mut vertices = self.vertices.clone();
        let mut tags = self.tags.clone();
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |i: usize, j: usize, vertices: &mut Vec<Point>, tags: &mut Vec<VertexTag>| {
            let key = (i.min(j), i.max(j));
            *mids.entry(key).or_insert_with(|| {
                vertices.push((vertices[i] + vertices[j]) * 0.5);
                let tag = if tags[i] == tags[j] && tags[i] != VertexTag::Pinned {
                    tags[i]
                } else {
                    VertexTag::Free
                };
                tags.push(tag);
                vertices.len() - 1
            })
        };
        let mut simplices = Vec::new();
        for si in 0..self.n_simplices() {
            let s = self.simplex(si).to_vec();
            if self.dim == 1 {
                let m = mid(s[0], s[1], &mut vertices, &mut tags);
                simplices.extend_from_slice(&[s[0], m, m, s[1]]);
            } else {
                let m01 = mid(s[0], s[1], &mut vertices, &mut tags);
                let m12 = mid(s[1], s[2], &mut vertices, &mut tags);
                let m20 = mid(s[2], s[0], &mut vertices, &mut tags);
                simplices.extend_from_slice(&[
                    s[0], m01, m20, m01, s[1], m12, m20, m12, s[2], m01, m12, m20,
                ]);
            }
        }
        Self::new(vertices, simplices, tags, self.dim, self.ambient_dim)
    }

    /// OFF-style text; see `docs/formats.md`.
    pub fn to_off(&self) -> String {
        let mut s = String::new();
        if self.ambient_dim == 3 {
            s.push_str("OFF\n");
        } else {
            let _ = writeln!(s, "nOFF\n{}", self.ambient_dim);
        }
        let _ = writeln!(s, "{} {} 0", self.vertices.len(), self.n_simplices());
        for (v, tag) in self.vertices.iter().zip(&self.tags) {
            let coords: Vec<String> = (0..self.ambient_dim).map(|i| format!("{}", v[i])).collect();
            s.push_str(&coords.join(" "));
            match tag {
                VertexTag::Free => {}
                VertexTag::Pinned => s.push_str(" pinned"),
                VertexTag::OnFlat(id) => {
                    let _ = write!(s, " flat:{id}");
                }
            }
            s.push('\n');
        }
        for i in 0..self.n_simplices() {
            let idx: Vec<String> = self.simplex(i).iter().map(|j| j.to_string()).collect();
            let _ = writeln!(s, "{} {}", self.dim + 1, idx.join(" "));
        }
        s
    }

    pub fn from_off(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let (hl, header) = lines.next().ok_or_else(|| perr(0, "empty input"))?;
        let ambient_dim = match header {
            "OFF" => 3,
            "nOFF" => {
                let (l, n) = lines.next().ok_or_else(|| perr(hl, "missing dimension line"))?;
                n.parse::<usize>().map_err(|_| perr(l, "bad dimension"))?
            }
            _ => return Err(perr(hl, "expected OFF or nOFF header")),
        };
        check_ambient(ambient_dim).map_err(|e| perr(hl, &e.to_string()))?;
        let (cl, counts) = lines.next().ok_or_else(|| perr(hl, "missing counts line"))?;
        let counts: Vec<usize> = counts
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| perr(cl, "bad count")))
            .collect::<Result<_>>()?;
        if counts.len() < 2 {
            return Err(perr(cl, "expected vertex and simplex counts"));
        }
        let (nv, ns) = (counts[0], counts[1]);
        let mut vertices = Vec::with_capacity(nv);
        let mut tags = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (l, line) = lines.next().ok_or_else(|| perr(cl, "missing vertex line"))?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < ambient_dim || toks.len() > ambient_dim + 1 {
                return Err(perr(l, "wrong number of vertex fields"));
            }
            let mut p = Point::zeros();
            for (i, t) in toks[..ambient_dim].iter().enumerate() {
                p[i] = t.parse::<f64>().map_err(|_| perr(l, "bad coordinate"))?;
            }
            let tag = match toks.get(ambient_dim) {
                None | Some(&"free") => VertexTag::Free,
                Some(&"pinned") => VertexTag::Pinned,
                Some(t) => match t.strip_prefix("flat:").map(str::parse::<usize>) {
                    Some(Ok(id)) => VertexTag::OnFlat(id),
                    _ => return Err(perr(l, "bad vertex tag")),
                },
            };
            vertices.push(p);
            tags.push(tag);
        }
        let mut simplices = Vec::new();
        let mut dim = None;
        for _ in 0..ns {
            let (l, line) = lines.next().ok_or_else(|| perr(cl, "missing simplex line"))?;
            let toks: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| perr(l, "bad index")))
                .collect::<Result<_>>()?;
            let k = *toks.first().ok_or_else(|| perr(l, "empty simplex line"))?;
            if !(2..=3).contains(&k) || toks.len() != k + 1 {
                return Err(perr(l, "simplex must list 2 or 3 indices"));
            }
            if *dim.get_or_insert(k - 1) != k - 1 {
                return Err(perr(l, "mixed simplex dimensions"));
            }
            simplices.extend_from_slice(&toks[1..]);
        }
        if let Some((l, _)) = lines.next() {
            return Err(perr(l, "trailing content"));
        }
        Self::new(vertices, simplices, tags, dim.unwrap_or(2), ambient_dim)
    }
}

/// Triangulates the band between two rings of vertex ids ordered by angle.
fn ring_band(inner: &[(usize, f64)], outer: &[(usize, f64)], closed: bool, out: &mut Vec<usize>) {
    let (mut i, mut j) = (0usize, 0usize);
    let (ni, no) = (inner.len(), outer.len());
    let (ei, eo) = if closed { (ni, no) } else { (ni - 1, no - 1) };
    let ang = |ring: &[(usize, f64)], k: usize| {
        let n = ring.len();
        ring[k % n].1 + if k >= n { 2.0 * PI } else { 0.0 }
    };
    while i < ei || j < eo {
        let advance_outer = if i >= ei {
            true
        } else if j >= eo {
            false
        } else {
            // advance the ring whose next vertex comes first in angle
            ang(outer, j + 1) <= ang(inner, i + 1)
        };
        if advance_outer {
            out.extend_from_slice(&[inner[i % ni].0, outer[j % no].0, outer[(j + 1) % no].0]);
            j += 1;
        } else {
            out.extend_from_slice(&[inner[i % ni].0, outer[j % no].0, inner[(i + 1) % ni].0]);
            i += 1;
        }
    }
}

/// Polar patch around `center` in the plane spanned by the orthonormal
/// pair `(e1, e2)`: ring `k` sits at `radii[k]` with `counts[k]` vertices
/// on angles `[phi0, phi1]` (closed rings use `[0, 2π)`).
#[derive(Debug, Clone)]
pub struct PolarPatch {
    pub center: Point,
    pub e1: Point,
    pub e2: Point,
    pub phi0: f64,
    pub phi1: f64,
    pub closed: bool,
    pub radii: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Per ring, `(vertex id, angle)` pairs.
pub type Rings = Vec<Vec<(usize, f64)>>;

impl PolarPatch {
    /// Builds the mesh; returns vertex ids of each ring (center first).
    pub fn build(&self, ambient_dim: usize) -> Result<(SimplicialSet, Rings)> {
        let mut vertices = vec![self.center];
        let mut rings: Rings = vec![vec![(0, self.phi0)]];
        for (r, n) in self.radii.iter().zip(&self.counts) {
            let mut ring = Vec::with_capacity(*n);
            for j in 0..*n {
                let phi = if self.closed {
                    2.0 * PI * j as f64 / *n as f64
                } else {
                    self.phi0 + (self.phi1 - self.phi0) * j as f64 / (*n - 1) as f64
                };
                vertices.push(self.center + (self.e1 * phi.cos() + self.e2 * phi.sin()) * *r);
                ring.push((vertices.len() - 1, phi));
            }
            rings.push(ring);
        }
        let mut simplices = Vec::new();
        for w in rings.windows(2) {
            if w[0].len() == 1 {
                let c = w[0][0].0;
                let n = w[1].len();
                let m = if self.closed { n } else { n - 1 };
                for j in 0..m {
                    simplices.extend_from_slice(&[c, w[1][j].0, w[1][(j + 1) % n].0]);
                }
            } else {
                ring_band(&w[0], &w[1], self.closed, &mut simplices);
            }
        }
        let tags = vec![VertexTag::Free; vertices.len()];
        let mesh = SimplicialSet::new(vertices, simplices, tags, 2, ambient_dim)?;
        Ok((mesh, rings))
    }
}

/// Flat disk with `rings` uniform rings of `6k` vertices; the outer ring is pinned.
pub fn disk(center: Point, e1: Point, e2: Point, radius: f64, rings: usize, ambient_dim: usize) -> Result<SimplicialSet> {
    let patch = PolarPatch {
        center,
        e1,
        e2,
        phi0: 0.0,
        phi1: 2.0 * PI,
        closed: true,
        radii: (1..=rings).map(|k| radius * k as f64 / rings as f64).collect(),
        counts: (1..=rings).map(|k| 6 * k).collect(),
    };
    let (mesh, rings_ids) = patch.build(ambient_dim)?;
    let mut tags = mesh.tags().to_vec();
    for (id, _) in rings_ids.last().expect("at least one ring") {
        tags[*id] = VertexTag::Pinned;
    }
    mesh.with_tags(tags)
}

/// Half-disk `{foot + r(cos φ·along + sin φ·inward) : φ ∈ [0, π], r ≤ radius}`
/// with `3k + 1` vertices on ring `k`. Vertices on the diameter get
/// `OnFlat(flat_id)`, the outer arc is pinned.
pub fn half_disk(
    foot: Point,
    along: Point,
    inward: Point,
    radius: f64,
    rings: usize,
    flat_id: usize,
    ambient_dim: usize,
) -> Result<SimplicialSet> {
    let patch = PolarPatch {
        center: foot,
        e1: along,
        e2: inward,
        phi0: 0.0,
        phi1: PI,
        closed: false,
        radii: (1..=rings).map(|k| radius * k as f64 / rings as f64).collect(),
        counts: (1..=rings).map(|k| 3 * k + 1).collect(),
    };
    let (mesh, ring_ids) = patch.build(ambient_dim)?;
    let mut tags = mesh.tags().to_vec();
    tags[0] = VertexTag::OnFlat(flat_id);
    for ring in &ring_ids[1..] {
        tags[ring[0].0] = VertexTag::OnFlat(flat_id);
        tags[ring[ring.len() - 1].0] = VertexTag::OnFlat(flat_id);
    }
    for (id, _) in ring_ids.last().expect("at least one ring") {
        tags[*id] = VertexTag::Pinned;
    }
    mesh.with_tags(tags)
}

/// `n × n` grid of the square `center + [−side/2, side/2]²` in the plane of
/// `(e1, e2)`; boundary vertices pinned.
pub fn square_grid(center: Point, e1: Point, e2: Point, side: f64, n: usize, ambient_dim: usize) -> Result<SimplicialSet> {
    let mut vertices = Vec::new();
    let mut tags = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let (u, v) = (i as f64 / n as f64 - 0.5, j as f64 / n as f64 - 0.5);
            vertices.push(center + e1 * (u * side) + e2 * (v * side));
            let boundary = i == 0 || j == 0 || i == n || j == n;
            tags.push(if boundary { VertexTag::Pinned } else { VertexTag::Free });
        }
    }
    let id = |i: usize, j: usize| i * (n + 1) + j;
    let mut simplices = Vec::new();
    for i in 0..n {
        for j in 0..n {
            simplices.extend_from_slice(&[id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            simplices.extend_from_slice(&[id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    SimplicialSet::new(vertices, simplices, tags, 2, ambient_dim)
}

/// Open polyline through `points` (d = 1).
pub fn polyline(points: &[Point], tags: Vec<VertexTag>, ambient_dim: usize) -> Result<SimplicialSet> {
    let simplices = (0..points.len().saturating_sub(1)).flat_map(|i| [i, i + 1]).collect();
    SimplicialSet::new(points.to_vec(), simplices, tags, 1, ambient_dim)
}

/// Cone over the edges of a regular tetrahedron centered at the origin of
/// ℝ³: six planar sectors, each meshed out to `radius`.
pub fn tetra_cone(radius: f64, rings: usize, segments: usize) -> Result<SimplicialSet> {
    let s = 1.0 / 3.0_f64.sqrt();
    let v = [
        Point::new(s, s, s, 0.0),
        Point::new(s, -s, -s, 0.0),
        Point::new(-s, s, -s, 0.0),
        Point::new(-s, -s, s, 0.0),
    ];
    let gamma = (-1.0_f64 / 3.0).acos();
    let mut mesh: Option<SimplicialSet> = None;
    for i in 0..4 {
        for j in i + 1..4 {
            let a = v[i];
            let c = (v[j] - a * a.dot(&v[j])).normalize();
            let patch = PolarPatch {
                center: Point::zeros(),
                e1: a,
                e2: c,
                phi0: 0.0,
                phi1: gamma,
                closed: false,
                radii: (1..=rings).map(|k| radius * k as f64 / rings as f64).collect(),
                counts: vec![segments + 1; rings],
            };
            let (sector, _) = patch.build(3)?;
            mesh = Some(match mesh {
                None => sector,
                Some(m) => m.merged(&sector)?,
            });
        }
    }
    Ok(mesh.expect("six sectors"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{axis, pt};

    fn unit_square() -> SimplicialSet {
        let v = vec![pt(&[0.0, 0.0, 0.0]), pt(&[1.0, 0.0, 0.0]), pt(&[1.0, 1.0, 0.0]), pt(&[0.0, 1.0, 0.0])];
        SimplicialSet::new(v, vec![0, 1, 2, 0, 2, 3], vec![VertexTag::Free; 4], 2, 3).unwrap()
    }

    #[test]
    fn volumes() {
        assert!((unit_square().total_volume() - 1.0).abs() < 1e-15);
        let tri = [pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[0.5, 3f64.sqrt() / 2.0])];
        assert!((simplex_volume(&tri) - 3f64.sqrt() / 4.0).abs() < 1e-15);
        assert_eq!(simplex_volume(&[pt(&[0.0, 0.0]), pt(&[0.0, 1.0])]), 1.0);
    }

    #[test]
    fn rejects_degenerate_simplices() {
        let v = vec![pt(&[0.0, 0.0, 0.0]), pt(&[1.0, 0.0, 0.0]), pt(&[2.0, 0.0, 0.0])];
        let r = SimplicialSet::new(v, vec![0, 1, 2], vec![VertexTag::Free; 3], 2, 3);
        assert!(matches!(r, Err(Error::DegenerateSimplex { index: 0, .. })));
    }

    #[test]
    fn off_round_trip() {
        let mut m = unit_square();
        m.tags = vec![VertexTag::Pinned, VertexTag::OnFlat(2), VertexTag::Free, VertexTag::Free];
        let text = m.to_off();
        assert!(text.starts_with("OFF\n4 2 0\n0 0 0 pinned\n1 0 0 flat:2\n"));
        assert_eq!(SimplicialSet::from_off(&text).unwrap(), m);
        let line = polyline(&[pt(&[0.0, 0.0]), pt(&[0.5, 0.25])], vec![VertexTag::Free; 2], 2).unwrap();
        let text = line.to_off();
        assert!(text.starts_with("nOFF\n2\n2 1 0\n"));
        assert_eq!(SimplicialSet::from_off(&text).unwrap(), line);
    }

    #[test]
    fn off_errors_carry_line_numbers() {
        let bad = "OFF\n2 1 0\n0 0 0\n1 0 x\n2 0 1\n";
        assert_eq!(
            SimplicialSet::from_off(bad),
            Err(Error::Parse { line: 4, msg: "bad coordinate".into() })
        );
        assert!(SimplicialSet::from_off("PLY\n").is_err());
        assert!(SimplicialSet::from_off("OFF\n1 0 0\n0 0 0 wobbly\n").is_err());
    }

    #[test]
    fn generators_have_expected_sizes() {
        let h = half_disk(Point::zeros(), axis(0), axis(1), 1.0, 26, 0, 3).unwrap();
        assert_eq!(h.n_simplices(), 3 * 26 * 26);
        let exact_poly: f64 = 0.5 * 78.0 * (PI / 78.0).sin();
        assert!((h.total_volume() - exact_poly).abs() < 1e-12);
        let d = disk(Point::zeros(), axis(0), axis(1), 1.0, 5, 3).unwrap();
        assert!((d.total_volume() - 0.5 * 30.0 * (2.0 * PI / 30.0).sin()).abs() < 1e-12);
        let t = tetra_cone(1.0, 2, 8).unwrap();
        assert_eq!(t.n_simplices(), 6 * (8 + 16));
    }

    #[test]
    fn clipping_keeps_the_inside() {
        let sq = square_grid(Point::zeros(), axis(0), axis(1), 2.0, 7, 3).unwrap();
        let clipped = sq.clip_halfspace(&axis(0), 0.3, VertexTag::OnFlat(0)).unwrap();
        assert!((clipped.total_volume() - 2.0 * 1.3).abs() < 1e-12);
        let on_cut = clipped.tags().iter().filter(|t| **t == VertexTag::OnFlat(0)).count();
        assert!(on_cut >= 8);
        let refined = clipped.refined().unwrap();
        assert!((refined.total_volume() - clipped.total_volume()).abs() < 1e-12);
        assert_eq!(refined.n_simplices(), 4 * clipped.n_simplices());
    }

    #[test]
    fn closest_points() {
        let (a, b, c) = (pt(&[0.0, 0.0, 0.0]), pt(&[1.0, 0.0, 0.0]), pt(&[0.0, 1.0, 0.0]));
        let q = closest_on_triangle(&pt(&[0.2, 0.2, 5.0]), &a, &b, &c);
        assert!((q - pt(&[0.2, 0.2, 0.0])).norm() < 1e-15);
        assert_eq!(closest_on_triangle(&pt(&[-1.0, -1.0, 0.0]), &a, &b, &c), a);
        let q = closest_on_triangle(&pt(&[1.0, 1.0, 0.0]), &a, &b, &c);
        assert!((q - pt(&[0.5, 0.5, 0.0])).norm() < 1e-15);
        let q = closest_on_segment(&pt(&[0.5, 3.0]), &pt(&[0.0, 0.0]), &pt(&[1.0, 0.0]));
        assert_eq!(q, pt(&[0.5, 0.0]));
    }
}
