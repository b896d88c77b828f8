//! Discrete Plateau solver: projected gradient descent on total mesh volume
//! with pinned vertices and vertices sliding on flats.
//!
//! The solver only explores deformations of the initial mesh. It does not
//! remesh, so it approximates a minimizer within that deformation class.

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{AffineFlat, Point};
use crate::mesh::{SimplicialSet, VertexTag, MIN_VOLUME};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_steps: usize,
    pub step_init: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_steps: 100_000, step_init: 0.1, armijo_c: 1e-4, backtrack: 0.5, grad_tol: 1e-6, seed: 0 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_steps > 0
            && self.step_init > 0.0
            && self.grad_tol > 0.0
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("invalid solver options {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxSteps,
    /// Backtracking could not find a decreasing step.
    Stalled,
    /// Every trial step produced a degenerate simplex.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub area_history: Vec<f64>,
    pub steps_taken: usize,
    pub final_grad_norm: f64,
    pub constraint_violation_max: f64,
    pub termination: Termination,
}

/// Sum of simplex volumes; logs a warning when some simplex is degenerate.
pub fn total_area(mesh: &SimplicialSet) -> f64 {
    let vols: Vec<f64> = (0..mesh.n_simplices()).map(|i| mesh.simplex_volume(i)).collect();
    let degenerate = vols.iter().filter(|v| **v <= MIN_VOLUME).count();
    if degenerate > 0 {
        warn!("{degenerate} degenerate simplices in area evaluation");
    }
    vols.iter().sum()
}

fn simplex_gradient(p: &[Point]) -> [Point; 3] {
    let z = Point::zeros();
    if p.len() == 2 {
        let e = p[1] - p[0];
        let u = e / e.norm();
        return [-u, u, z];
    }
    // ∇_a area = ½|bc| times the unit in-plane normal of bc pointing to a
    let mut g = [z; 3];
    for i in 0..3 {
        let (a, b, c) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
        let e = c - b;
        let w = a - b;
        let perp = w - e * (w.dot(&e) / e.norm_squared());
        let n = perp.norm();
        if n > 0.0 {
            g[i] = perp * (0.5 * e.norm() / n);
        }
    }
    g
}

/// Exact gradient of [`total_area`] with respect to every vertex.
pub fn area_gradient(mesh: &SimplicialSet) -> Vec<Point> {
    let k = mesh.dim() + 1;
    let per: Vec<[Point; 3]> = (0..mesh.n_simplices())
        .into_par_iter()
        .map(|i| simplex_gradient(&mesh.simplex_points(i)))
        .collect();
    let mut g = vec![Point::zeros(); mesh.vertices().len()];
    for (i, gs) in per.iter().enumerate() {
        for (j, v) in mesh.simplex(i).iter().enumerate().take(k) {
            g[*v] += gs[j];
        }
    }
    g
}

/// Restricts a vertex gradient to the motions its tag allows.
pub fn sliding_project_gradient(g: &Point, tag: VertexTag, flats: &[AffineFlat]) -> Result<Point> {
    match tag {
        VertexTag::Free => Ok(*g),
        VertexTag::Pinned => Ok(Point::zeros()),
        VertexTag::OnFlat(i) => Ok(flats.get(i).ok_or(Error::UnknownFlat(i))?.tangential(g)),
    }
}

fn projected_gradient(mesh: &SimplicialSet, flats: &[AffineFlat]) -> Result<Vec<Point>> {
    area_gradient(mesh)
        .iter()
        .zip(mesh.tags())
        .map(|(g, t)| sliding_project_gradient(g, *t, flats))
        .collect()
}

fn constraint_violation(mesh: &SimplicialSet, flats: &[AffineFlat]) -> f64 {
    mesh.vertices()
        .iter()
        .zip(mesh.tags())
        .filter_map(|(v, t)| match t {
            VertexTag::OnFlat(i) => Some(flats[*i].distance(v)),
            _ => None,
        })
        .fold(0.0, f64::max)
}

/// Moves free and sliding vertices by `−t·g`, then snaps sliding vertices
/// back onto their flats. Pinned vertices keep their exact coordinates.
fn trial(mesh: &SimplicialSet, g: &[Point], t: f64, flats: &[AffineFlat]) -> Vec<Point> {
    mesh.vertices()
        .iter()
        .zip(g)
        .zip(mesh.tags())
        .map(|((v, gi), tag)| match tag {
            VertexTag::Pinned => *v,
            VertexTag::Free => v - gi * t,
            VertexTag::OnFlat(i) => flats[*i].project(&(v - gi * t)),
        })
        .collect()
}

fn min_volume(mesh: &SimplicialSet) -> f64 {
    (0..mesh.n_simplices()).map(|i| mesh.simplex_volume(i)).fold(f64::INFINITY, f64::min)
}

/// Projected gradient descent on total volume with Armijo backtracking.
pub fn relax(mesh: &SimplicialSet, flats: &[AffineFlat], opts: &SolverOptions) -> Result<(SimplicialSet, SolveReport)> {
    opts.validate()?;
    mesh.check_tags(flats)?;
    if mesh.tags().iter().all(|t| *t == VertexTag::Pinned) {
        return Err(Error::NoDegreesOfFreedom);
    }
    let mut cur = mesh.clone();
    let mut area = total_area(&cur);
    let mut history = vec![area];
    let mut step = opts.step_init;
    let mut steps = 0;
    let mut termination = Termination::MaxSteps;
    let mut gnorm;
    loop {
        let g = projected_gradient(&cur, flats)?;
        let g2: f64 = g.iter().map(|v| v.norm_squared()).sum();
        gnorm = g2.sqrt();
        if gnorm <= opts.grad_tol {
            termination = Termination::Converged;
            break;
        }
        if steps >= opts.max_steps {
            break;
        }
        let mut t = step;
        let mut saw_degenerate = false;
        let accepted = loop {
            let cand = cur.with_vertices_unchecked(trial(&cur, &g, t, flats));
            if min_volume(&cand) <= MIN_VOLUME {
                saw_degenerate = true;
            } else {
                let a = total_area(&cand);
                if a < area && a <= area - opts.armijo_c * t * g2 {
                    break Some((cand, a));
                }
            }
            t *= opts.backtrack;
            if t * gnorm < 1e-18 * (1.0 + area) {
                break None;
            }
        };
        match accepted {
            Some((cand, a)) => {
                cur = cand;
                area = a;
                history.push(a);
                steps += 1;
                step = 2.0 * t;
            }
            None => {
                termination = if saw_degenerate { Termination::Degenerate } else { Termination::Stalled };
                break;
            }
        }
    }
    debug!("relax: {steps} steps, |g| = {gnorm:.3e}, {termination:?}");
    let report = SolveReport {
        area_history: history,
        steps_taken: steps,
        final_grad_norm: gnorm,
        constraint_violation_max: constraint_violation(&cur, flats),
        termination,
    };
    Ok((cur, report))
}

/// Adds seeded noise of size up to `amplitude` to non-pinned vertices along
/// `direction`; sliding vertices are moved within their flat instead.
pub fn perturb(
    mesh: &SimplicialSet,
    flats: &[AffineFlat],
    direction: &Point,
    amplitude: f64,
    seed: u64,
) -> Result<SimplicialSet> {
    mesh.check_tags(flats)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let verts = mesh
        .vertices()
        .iter()
        .zip(mesh.tags())
        .map(|(v, tag)| {
            let s = amplitude * (2.0 * rng.random::<f64>() - 1.0);
            match tag {
                VertexTag::Pinned => *v,
                VertexTag::Free => v + direction * s,
                VertexTag::OnFlat(i) => {
                    let f = &flats[*i];
                    let t = f.basis().first().copied().unwrap_or_else(Point::zeros);
                    f.project(&(v + t * s))
                }
            }
        })
        .collect();
    mesh.with_vertices(verts)
}
