//! Scenario files: the JSON schema and its translation into library objects.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use monoshade::mesh::{disk, half_disk};
use monoshade::{AffineFlat, AnalyticSet, BoundaryConfig, BoundaryPiece, GaugeFunction, Mode, Point, SimplicialSet, SolverOptions};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub set: SetSpec,
    pub boundary: BoundarySpec,
    pub center: Vec<f64>,
    pub radii: RadiiSpec,
    #[serde(default)]
    pub gauge: Option<GaugeFunction>,
    /// Defaults to the set dimension.
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatSpec {
    pub origin: Vec<f64>,
    /// Spanning directions, orthonormalized on load.
    #[serde(default)]
    pub basis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Plane { flat: FlatSpec },
    HalfPlane { flat: FlatSpec, direction: Vec<f64> },
    YCone { center: Vec<f64>, spine: FlatSpec, frame: [Vec<f64>; 2], #[serde(default)] phase: f64 },
    VCone { flat: FlatSpec, dir1: Vec<f64>, dir2: Vec<f64> },
    Shade { apex: Vec<f64>, flat: FlatSpec },
    Truncation { cone: Box<SetSpec>, apex: Vec<f64>, flat: FlatSpec },
    Union { parts: Vec<SetSpec> },
    /// OFF file, relative to the scenario file.
    Mesh { path: PathBuf },
    /// Half-disk mesh whose diameter slides on boundary flat `flat`.
    HalfDisk { foot: Vec<f64>, along: Vec<f64>, inward: Vec<f64>, radius: f64, rings: usize, flat: usize },
    /// Flat disk mesh with a pinned rim.
    Disk { center: Vec<f64>, e1: Vec<f64>, e2: Vec<f64>, radius: f64, rings: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub origin: Vec<f64>,
    #[serde(default)]
    pub basis: Vec<Vec<f64>>,
    /// Segment endpoints; when present `origin` and `basis` must describe
    /// the line through them.
    #[serde(default)]
    pub vertices: Option<[Vec<f64>; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub flats: Vec<PieceSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiiSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl RadiiSpec {
    pub fn grid(&self) -> Result<Vec<f64>> {
        ensure!(self.min > 0.0 && self.max > self.min, "radii need 0 < min < max, got {} and {}", self.min, self.max);
        ensure!(self.count >= 2, "radii.count must be at least 2");
        Ok(match self.spacing {
            Spacing::Log => monoshade::monotone::log_radii(self.min, self.max, self.count)?,
            Spacing::Linear => (0..self.count)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub measure_tol: f64,
    pub slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { measure_tol: 1e-6, slack: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    #[default]
    Pass,
    Fail,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbSpec {
    pub direction: Vec<f64>,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    Scan,
    CheckMonotone {
        #[serde(default)]
        expect: Expect,
    },
    CheckConstant {
        #[serde(default)]
        expect: Expect,
        /// Restrict the check to radii in `[r_min, r_max]`.
        #[serde(default)]
        r_min: Option<f64>,
        #[serde(default)]
        r_max: Option<f64>,
        /// Expected constant value and its tolerance.
        #[serde(default)]
        value: Option<f64>,
        #[serde(default)]
        value_tol: Option<f64>,
    },
    ConeExtensionCheck {
        #[serde(default)]
        expect: Expect,
        annulus: [f64; 2],
        #[serde(default)]
        samples: Option<usize>,
        #[serde(default = "one")]
        min_rate: f64,
    },
    DifferentialInequality {
        #[serde(default)]
        expect: Expect,
    },
    Deform {
        #[serde(default)]
        expect: Expect,
        r0: f64,
        r1: f64,
        r2: f64,
        tau: f64,
    },
    Relax {
        #[serde(default)]
        expect: Expect,
        #[serde(default)]
        perturb: Option<PerturbSpec>,
        #[serde(default)]
        options: SolverOptions,
    },
}

fn one() -> f64 {
    1.0
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Scan => "scan",
            Action::CheckMonotone { .. } => "check_monotone",
            Action::CheckConstant { .. } => "check_constant",
            Action::ConeExtensionCheck { .. } => "cone_extension_check",
            Action::DifferentialInequality { .. } => "differential_inequality",
            Action::Deform { .. } => "deform",
            Action::Relax { .. } => "relax",
        }
    }
}

/// Parses scenario JSON, reporting the field path and position of any error.
pub fn parse(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        anyhow::anyhow!("line {} column {}: at `{path}`: {inner}", inner.line(), inner.column())
    })?;
    ensure!(!scenario.actions.is_empty(), "`actions` must not be empty");
    ensure!(!scenario.name.is_empty(), "`name` must not be empty");
    scenario.radii.grid().context("`radii`")?;
    Ok(scenario)
}

pub fn load(path: &Path) -> Result<(Scenario, PathBuf)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scenario = parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    scenario.check_files(&base)?;
    Ok((scenario, base))
}

pub fn point(v: &[f64], n: usize, what: &str) -> Result<Point> {
    ensure!(v.len() == n, "`{what}` has {} coordinates, expected {n}", v.len());
    Ok(monoshade::pt(v))
}

/// The set under study: exact or meshed.
#[derive(Debug, Clone)]
pub enum Subject {
    Analytic(AnalyticSet),
    Mesh(SimplicialSet),
}

impl Subject {
    pub fn as_measured(&self) -> &dyn monoshade::MeasuredSet {
        match self {
            Subject::Analytic(a) => a,
            Subject::Mesh(m) => m,
        }
    }
}

impl Scenario {
    pub fn ambient_dim(&self) -> usize {
        self.center.len()
    }

    fn check_files(&self, base: &Path) -> Result<()> {
        fn walk(s: &SetSpec, base: &Path) -> Result<()> {
            match s {
                SetSpec::Mesh { path } => {
                    let p = base.join(path);
                    ensure!(p.is_file(), "mesh file {} does not exist", p.display());
                    Ok(())
                }
                SetSpec::Truncation { cone, .. } => walk(cone, base),
                SetSpec::Union { parts } => parts.iter().try_for_each(|p| walk(p, base)),
                _ => Ok(()),
            }
        }
        walk(&self.set, base)
    }

    pub fn center_point(&self) -> Result<Point> {
        point(&self.center, self.ambient_dim(), "center")
    }

    fn flat(&self, f: &FlatSpec, what: &str) -> Result<AffineFlat> {
        let n = self.ambient_dim();
        let dirs = f.basis.iter().map(|b| point(b, n, what)).collect::<Result<Vec<_>>>()?;
        Ok(AffineFlat::from_spanning(point(&f.origin, n, what)?, &dirs, n)?)
    }

    pub fn build_set(&self, base: &Path) -> Result<Subject> {
        self.build(&self.set, base)
    }

    fn analytic(&self, s: &SetSpec, base: &Path) -> Result<AnalyticSet> {
        match self.build(s, base)? {
            Subject::Analytic(a) => Ok(a),
            Subject::Mesh(_) => bail!("meshes cannot be nested inside analytic sets"),
        }
    }

    fn build(&self, s: &SetSpec, base: &Path) -> Result<Subject> {
        let n = self.ambient_dim();
        let p = |v: &[f64], what| point(v, n, what);
        Ok(match s {
            SetSpec::Plane { flat } => Subject::Analytic(AnalyticSet::plane(&self.flat(flat, "set.flat")?)?),
            SetSpec::HalfPlane { flat, direction } => {
                Subject::Analytic(AnalyticSet::half_plane(&self.flat(flat, "set.flat")?, &p(direction, "set.direction")?)?)
            }
            SetSpec::YCone { center, spine, frame, phase } => Subject::Analytic(AnalyticSet::y_cone(
                &p(center, "set.center")?,
                &self.flat(spine, "set.spine")?,
                [p(&frame[0], "set.frame")?, p(&frame[1], "set.frame")?],
                *phase,
            )?),
            SetSpec::VCone { flat, dir1, dir2 } => Subject::Analytic(AnalyticSet::v_cone(
                &self.flat(flat, "set.flat")?,
                &p(dir1, "set.dir1")?,
                &p(dir2, "set.dir2")?,
            )?),
            SetSpec::Shade { apex, flat } => {
                Subject::Analytic(AnalyticSet::shade(&p(apex, "set.apex")?, &self.flat(flat, "set.flat")?)?)
            }
            SetSpec::Truncation { cone, apex, flat } => Subject::Analytic(AnalyticSet::truncate_by_shade(
                &self.analytic(cone, base)?,
                &p(apex, "set.apex")?,
                &self.flat(flat, "set.flat")?,
            )?),
            SetSpec::Union { parts } => {
                let parts = parts.iter().map(|s| self.analytic(s, base)).collect::<Result<Vec<_>>>()?;
                Subject::Analytic(AnalyticSet::union(&parts)?)
            }
            SetSpec::Mesh { path } => {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full).with_context(|| format!("reading {}", full.display()))?;
                let mesh = SimplicialSet::from_off(&text).with_context(|| format!("parsing {}", full.display()))?;
                ensure!(mesh.ambient_dim() == n, "mesh {} lives in dimension {}, scenario in {n}", full.display(), mesh.ambient_dim());
                Subject::Mesh(mesh)
            }
            SetSpec::HalfDisk { foot, along, inward, radius, rings, flat } => Subject::Mesh(half_disk(
                p(foot, "set.foot")?,
                p(along, "set.along")?.normalize(),
                p(inward, "set.inward")?.normalize(),
                *radius,
                *rings,
                *flat,
                n,
            )?),
            SetSpec::Disk { center, e1, e2, radius, rings } => Subject::Mesh(disk(
                p(center, "set.center")?,
                p(e1, "set.e1")?.normalize(),
                p(e2, "set.e2")?.normalize(),
                *radius,
                *rings,
                n,
            )?),
        })
    }

    pub fn pieces(&self) -> Result<Vec<BoundaryPiece>> {
        let n = self.ambient_dim();
        self.boundary
            .flats
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let what = format!("boundary.flats[{i}]");
                match &f.vertices {
                    Some([a, b]) => Ok(BoundaryPiece::segment(point(a, n, &what)?, point(b, n, &what)?, n)?),
                    None => Ok(BoundaryPiece::affine(self.flat(&FlatSpec { origin: f.origin.clone(), basis: f.basis.clone() }, &what)?)),
                }
            })
            .collect()
    }

    pub fn boundary_config(&self, set_dim: usize) -> Result<BoundaryConfig> {
        Ok(BoundaryConfig::new(self.pieces()?, self.center_point()?, set_dim)?)
    }

    /// Affine flats for sliding constraints, indexed like `boundary.flats`.
    pub fn sliding_flats(&self) -> Result<Vec<AffineFlat>> {
        Ok(self.pieces()?.into_iter().map(|p| p.flat).collect())
    }

    pub fn gauge(&self) -> GaugeFunction {
        self.gauge.unwrap_or(GaugeFunction::Zero)
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(Mode::Shade)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "set": {"kind": "plane", "flat": {"origin": [0, 0, 0], "basis": [[1, 0, 0], [0, 1, 0]]}},
        "boundary": {"flats": [{"origin": [0.5, 0, 0], "basis": [[0, 1, 0]]}]},
        "center": [0, 0, 0],
        "radii": {"min": 0.1, "max": 1, "count": 4},
        "actions": [{"action": "scan"}]
    }"#;

    #[test]
    fn parses_a_minimal_scenario() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.ambient_dim(), 3);
        assert_eq!(s.tolerances.measure_tol, 1e-6);
        assert_eq!(s.radii.spacing, Spacing::Log);
        assert!(matches!(s.build_set(Path::new(".")).unwrap(), Subject::Analytic(_)));
        assert_eq!(s.boundary_config(2).unwrap().pieces().len(), 1);
    }

    #[test]
    fn unknown_fields_name_their_path() {
        let bad = MINIMAL.replace("\"count\": 4", "\"count\": 4, \"step\": 2");
        let msg = format!("{:#}", parse(&bad).unwrap_err());
        assert!(msg.contains("radii"), "{msg}");
        assert!(msg.contains("step"), "{msg}");
    }

    #[test]
    fn rejects_empty_actions_and_bad_radii() {
        assert!(parse(&MINIMAL.replace(r#"[{"action": "scan"}]"#, "[]")).is_err());
        assert!(parse(&MINIMAL.replace("\"min\": 0.1", "\"min\": 0")).is_err());
    }

    #[test]
    fn wrong_coordinate_counts_are_reported() {
        let s = parse(&MINIMAL.replace("\"center\": [0, 0, 0]", "\"center\": [0, 0]")).unwrap();
        assert!(s.build_set(Path::new(".")).is_err());
    }
}
