mod runner;
mod scenario;
mod suite;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use monoshade::measures::mesh_ball_measure;
use monoshade::{pt, Ball, SimplicialSet};

use runner::{Overrides, Status};
use scenario::{RadiiSpec, Spacing};

#[derive(Parser)]
#[command(name = "monoshade", version, about = "Density monotonicity experiments for sliding minimal sets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Absolute tolerance on F at each radius.
    #[arg(long)]
    tol: Option<f64>,
    /// Radius grid as `min,max,count` or `min,max,count,linear`.
    #[arg(long, value_parser = parse_radii)]
    radii: Option<RadiiSpec>,
    /// Exponent multiplier in F·exp(a·A(r)).
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory.
    #[arg(long, env = "OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { tol: self.tol, radii: self.radii, a: self.a, seed: self.seed }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario file and write its artifacts.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run every bundled scenario (or every `*.json` in `--dir`).
    Suite {
        #[arg(long)]
        dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Measure a mesh inside a ball.
    Measure {
        mesh: PathBuf,
        /// Center coordinates followed by the radius, e.g. `0,0,0,1`.
        #[arg(long, value_parser = parse_ball, allow_hyphen_values = true)]
        ball: Ball,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Print the F profile of a scenario as CSV.
    Profile {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_radii(s: &str) -> Result<RadiiSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    let spacing = match parts.get(3) {
        None | Some(&"log") => Spacing::Log,
        Some(&"linear") => Spacing::Linear,
        Some(other) => return Err(format!("unknown spacing `{other}`")),
    };
    if !(3..=4).contains(&parts.len()) {
        return Err("expected min,max,count[,log|linear]".into());
    }
    let count = parts[2].parse::<usize>().map_err(|e| format!("`{}`: {e}", parts[2]))?;
    let spec = RadiiSpec { min: num(parts[0])?, max: num(parts[1])?, count, spacing };
    spec.grid().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn parse_ball(s: &str) -> Result<Ball, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    if !(3..=5).contains(&v.len()) {
        return Err("expected 2 to 4 center coordinates followed by a radius".into());
    }
    let (c, r) = v.split_at(v.len() - 1);
    Ball::new(pt(c), r[0]).map_err(|e| e.to_string())
}

fn load_with(path: &std::path::Path, common: &Common) -> Result<(scenario::Scenario, PathBuf)> {
    let (mut s, base) = scenario::load(path)?;
    common.overrides().apply(&mut s);
    Ok((s, base))
}

fn execute(cmd: Cmd) -> Result<Status> {
    match cmd {
        Cmd::Run { scenario, common } => {
            let (s, base) = load_with(&scenario, &common)?;
            let outcome = runner::run(&s, &base)?;
            for path in outcome.write(&common.out_dir)? {
                println!("wrote {}", path.display());
            }
            for v in &outcome.verdicts {
                println!("{:<24} expected {:?}, got {:?}, margin {:.3e}", v.action, v.expected, v.got, v.margin);
            }
            Ok(outcome.status())
        }
        Cmd::Suite { dir, common } => {
            let scenarios = match &dir {
                Some(d) => suite::load_dir(d)?,
                None => suite::load_bundled()?,
            };
            let result = suite::run_all(scenarios, &common.overrides(), &common.out_dir)?;
            print!("{}", result.table);
            Ok(result.status())
        }
        Cmd::Measure { mesh, ball, tol } => {
            let text = std::fs::read_to_string(&mesh).with_context(|| format!("reading {}", mesh.display()))?;
            let set = SimplicialSet::from_off(&text).with_context(|| format!("parsing {}", mesh.display()))?;
            if (set.ambient_dim()..4).any(|i| ball.center[i] != 0.0) {
                bail!("ball center has more coordinates than the mesh's ambient dimension {}", set.ambient_dim());
            }
            let m = mesh_ball_measure(&set, &ball, tol);
            println!("{}", serde_json::to_string(&m)?);
            Ok(if m.abs_error <= tol { Status::Pass } else { Status::Inconclusive })
        }
        Cmd::Profile { scenario, common } => {
            let (mut s, base) = load_with(&scenario, &common)?;
            s.actions = vec![scenario::Action::Scan];
            let outcome = runner::run(&s, &base)?;
            print!("{}", outcome.profile.context("no profile computed")?.to_csv());
            Ok(Status::Pass)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.cmd) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
