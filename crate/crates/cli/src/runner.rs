//! Executes scenario actions and collects verdicts and artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::info;
use monoshade::competitor::deform;
use monoshade::monotone::{check_constant, check_monotone, cone_extension_check, differential_inequality_check, scan, ExtensionOptions};
use monoshade::plateau::{perturb, relax, Termination};
use monoshade::{DeformationParams, Error as CoreError, FunctionalProfile, MonotoneVerdict, SimplicialSet};
use serde::Serialize;
use serde_json::json;

use crate::scenario::{point, Action, Expect, RadiiSpec, Scenario, Subject};

/// Largest audit defect accepted from a deformation.
const DEFORM_TOL: f64 = 1e-9;

/// Command-line values that replace scenario fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub radii: Option<RadiiSpec>,
    pub a: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) {
        if let Some(t) = self.tol {
            s.tolerances.measure_tol = t;
        }
        if let Some(r) = self.radii {
            s.radii = r;
        }
        if let Some(a) = self.a {
            s.a = Some(a);
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Got {
    Pass,
    Inconclusive,
    Fail,
}

/// Overall result, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub action: &'static str,
    pub expected: Expect,
    pub got: Got,
    /// Distance from the decision threshold; negative means the check failed.
    pub margin: f64,
    pub runtime_s: f64,
    pub detail: serde_json::Value,
}

impl Verdict {
    pub fn status(&self) -> Status {
        match (self.got, self.expected) {
            (Got::Inconclusive, _) => Status::Inconclusive,
            (Got::Pass, Expect::Pass) | (Got::Fail, Expect::Fail) => Status::Pass,
            _ => Status::Fail,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: String,
    pub verdicts: Vec<Verdict>,
    pub profile: Option<FunctionalProfile>,
    pub mesh_out: Option<SimplicialSet>,
}

impl Outcome {
    pub fn status(&self) -> Status {
        self.verdicts.iter().map(Verdict::status).max().unwrap_or(Status::Pass)
    }

    /// Writes `<name>.profile.csv`, `<name>.verdicts.json` and, when a mesh
    /// was produced, `<name>.out.off`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        let mut put = |suffix: &str, body: String| -> Result<()> {
            let path = dir.join(format!("{}.{suffix}", self.name));
            std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
            Ok(())
        };
        if let Some(p) = &self.profile {
            put("profile.csv", p.to_csv())?;
        }
        let report = json!({ "scenario": self.name, "status": self.status(), "verdicts": self.verdicts });
        put("verdicts.json", serde_json::to_string_pretty(&report)? + "\n")?;
        if let Some(m) = &self.mesh_out {
            put("out.off", m.to_off())?;
        }
        Ok(written)
    }
}

struct State<'a> {
    scenario: &'a Scenario,
    subject: Subject,
    profile: Option<FunctionalProfile>,
    radii: Vec<f64>,
}

impl State<'_> {
    fn profile(&mut self) -> Result<&FunctionalProfile> {
        if self.profile.is_none() {
            let s = self.scenario;
            let e = self.subject.as_measured();
            let a = s.a.unwrap_or(e.set_dim() as f64);
            let boundary = s.boundary_config(e.set_dim())?;
            let p = scan(e, &boundary, &s.center_point()?, &self.radii, s.mode(), &s.gauge(), a, s.tolerances.measure_tol)?;
            self.profile = Some(p);
        }
        Ok(self.profile.as_ref().expect("profile just computed"))
    }

    fn mesh(&self, action: &str) -> Result<&SimplicialSet> {
        match &self.subject {
            Subject::Mesh(m) => Ok(m),
            Subject::Analytic(_) => bail!("`{action}` needs a mesh set"),
        }
    }
}

fn restrict(p: &FunctionalProfile, lo: f64, hi: f64) -> FunctionalProfile {
    let keep: Vec<usize> = (0..p.radii.len()).filter(|&i| p.radii[i] >= lo && p.radii[i] <= hi).collect();
    let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    FunctionalProfile {
        radii: pick(&p.radii),
        theta: pick(&p.theta),
        shade_term: pick(&p.shade_term),
        f: pick(&p.f),
        f_scaled: pick(&p.f_scaled),
        error_bars: pick(&p.error_bars),
        within_budget: keep.iter().map(|&i| p.within_budget[i]).collect(),
        ..p.clone()
    }
}

/// Runs every action in order.
pub fn run(scenario: &Scenario, base: &Path) -> Result<Outcome> {
    let subject = scenario.build_set(base)?;
    let mut st = State { scenario, subject, profile: None, radii: scenario.radii.grid()? };
    let mut verdicts = Vec::new();
    let mut mesh_out = None;
    let tol = scenario.tolerances.measure_tol;
    let slack = scenario.tolerances.slack;
    for action in &scenario.actions {
        let start = Instant::now();
        let verdict = match action {
            Action::Scan => {
                st.profile()?;
                None
            }
            Action::CheckMonotone { expect } => {
                let p = st.profile()?;
                let margin = (0..p.radii.len().saturating_sub(1))
                    .map(|i| {
                        let ulps = 8.0 * f64::EPSILON * p.f_scaled[i].abs().max(p.f_scaled[i + 1].abs());
                        p.scaled_error(i) + p.scaled_error(i + 1) + slack + ulps - (p.f_scaled[i] - p.f_scaled[i + 1])
                    })
                    .fold(f64::INFINITY, f64::min);
                let v = check_monotone(p, slack);
                let got = match v {
                    MonotoneVerdict::Monotone => Got::Pass,
                    MonotoneVerdict::Violated { .. } => Got::Fail,
                    MonotoneVerdict::Inconclusive { .. } => Got::Inconclusive,
                };
                Some((*expect, got, margin, json!({ "slack": slack, "verdict": v })))
            }
            Action::CheckConstant { expect, r_min, r_max, value, value_tol } => {
                let p = st.profile()?;
                let sub = restrict(p, r_min.unwrap_or(0.0), r_max.unwrap_or(f64::INFINITY));
                if sub.radii.is_empty() {
                    bail!("check_constant: no scanned radius in [{r_min:?}, {r_max:?}]");
                }
                let c = check_constant(&sub, tol);
                let mut margin = (0..sub.radii.len())
                    .map(|i| sub.error_bars[i] + tol - (sub.f[i] - c.median).abs())
                    .fold(f64::INFINITY, f64::min);
                if let Some(v) = value {
                    let worst = sub.error_bars.iter().copied().fold(0.0, f64::max);
                    margin = margin.min(value_tol.unwrap_or(tol) + worst - (c.median - v).abs());
                }
                let got = if margin < 0.0 || !c.constant {
                    Got::Fail
                } else if sub.within_budget.iter().all(|b| *b) {
                    Got::Pass
                } else {
                    Got::Inconclusive
                };
                Some((*expect, got, margin, json!({ "radii": sub.radii.len(), "median": c.median, "max_deviation": c.max_deviation })))
            }
            Action::ConeExtensionCheck { expect, annulus, samples, min_rate } => {
                let s = st.scenario;
                let e = st.subject.as_measured();
                let boundary = s.boundary_config(e.set_dim())?;
                let opts = ExtensionOptions { samples: samples.unwrap_or(400), seed: s.seed, ..ExtensionOptions::default() };
                match cone_extension_check(e, &boundary, (annulus[0], annulus[1]), &s.center_point()?, tol, opts) {
                    Ok(r) => {
                        let worst = r.outside_shade.min(r.radial).min(r.shade_in_cone.unwrap_or(1.0));
                        let got = if worst >= *min_rate { Got::Pass } else { Got::Fail };
                        Some((*expect, got, worst - min_rate, serde_json::to_value(&r)?))
                    }
                    Err(CoreError::Precondition(msg)) => Some((*expect, Got::Fail, f64::NEG_INFINITY, json!({ "precondition": msg }))),
                    Err(e) => return Err(e.into()),
                }
            }
            Action::DifferentialInequality { expect } => {
                let s = st.scenario;
                let e = st.subject.as_measured();
                let boundary = s.boundary_config(e.set_dim())?;
                let x = s.center_point()?;
                let mut margin = f64::INFINITY;
                for r in &st.radii {
                    let rep = differential_inequality_check(e, &boundary, &x, *r, &s.gauge(), tol * r.powi(e.set_dim() as i32))?;
                    margin = margin.min(rep.margin + rep.abs_error);
                }
                let got = if margin >= 0.0 { Got::Pass } else { Got::Fail };
                Some((*expect, got, margin, json!({ "radii": st.radii.len() })))
            }
            Action::Deform { expect, r0, r1, r2, tau } => {
                let mesh = st.mesh("deform")?;
                let boundary = scenario.boundary_config(mesh.dim())?;
                let params = DeformationParams::new(*r0, *r1, *r2, *tau, boundary)?;
                let (out, audit) = deform(mesh, &params)?;
                let worst = audit.max_image_excess.max(audit.max_norm_increase).max(audit.max_sliding_error);
                let got = if audit.passes(DEFORM_TOL) { Got::Pass } else { Got::Fail };
                let detail = serde_json::to_value(audit)?;
                st.subject = Subject::Mesh(out.clone());
                st.profile = None;
                mesh_out = Some(out);
                let margin = if audit.moved_outside > 0 { f64::NEG_INFINITY } else { DEFORM_TOL - worst };
                Some((*expect, got, margin, detail))
            }
            Action::Relax { expect, perturb: shake, options } => {
                let flats = scenario.sliding_flats()?;
                let mut mesh = st.mesh("relax")?.clone();
                if let Some(pspec) = shake {
                    let dir = point(&pspec.direction, scenario.ambient_dim(), "perturb.direction")?;
                    mesh = perturb(&mesh, &flats, &dir, pspec.amplitude, scenario.seed)?;
                }
                let (out, report) = relax(&mesh, &flats, options)?;
                let decreasing = report.area_history.windows(2).all(|w| w[1] <= w[0]);
                let ok = report.termination == Termination::Converged && report.constraint_violation_max <= 1e-9 && decreasing;
                let got = if ok { Got::Pass } else { Got::Fail };
                let detail = json!({
                    "termination": report.termination,
                    "steps": report.steps_taken,
                    "final_grad_norm": report.final_grad_norm,
                    "constraint_violation_max": report.constraint_violation_max,
                    "area_initial": report.area_history.first(),
                    "area_final": report.area_history.last(),
                });
                st.subject = Subject::Mesh(out.clone());
                st.profile = None;
                mesh_out = Some(out);
                Some((*expect, got, options.grad_tol - report.final_grad_norm, detail))
            }
        };
        if let Some((expected, got, margin, detail)) = verdict {
            let v = Verdict { action: action.name(), expected, got, margin, runtime_s: start.elapsed().as_secs_f64(), detail };
            info!("{}: {} -> {:?}", scenario.name, v.action, v.status());
            verdicts.push(v);
        }
    }
    Ok(Outcome { name: scenario.name.clone(), verdicts, profile: st.profile, mesh_out })
}
