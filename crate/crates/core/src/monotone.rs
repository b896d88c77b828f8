//! Density ratios, the monotone functional `F`, radius scans and verdicts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{gauge_a, h_of_r, m_of_r, BoundaryConfig, GaugeFunction};
use crate::geom::{Ball, Point, ShadeRegion};
use crate::measures::{shade_ball_measure, MeasureResult, MeasuredSet};
use crate::zoo::AnalyticSet;

/// Which boundary term enters `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `r⁻ᵈ ℋᵈ(S_x ∩ B(x, r))`; needs a single affine flat.
    Shade,
    /// `r⁻ᵈ H(r)` for any boundary configuration.
    GeneralH,
}

/// `θ_x(r) = r⁻ᵈ ℋᵈ(E ∩ B(x, r))`; `tol` is the absolute error allowed on θ.
pub fn theta(e: &dyn MeasuredSet, x: &Point, r: f64, tol: f64) -> Result<MeasureResult> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!("radius {r} must be positive")));
    }
    let rd = r.powi(e.set_dim() as i32);
    let m = e.ball_measure(&Ball::new(*x, r)?, tol * rd)?;
    Ok(m.scaled(1.0 / rd))
}

/// The normalized boundary term `r⁻ᵈ·(shade or H)` at `x`.
pub fn boundary_term(
    boundary: &BoundaryConfig,
    set_dim: usize,
    x: &Point,
    r: f64,
    mode: Mode,
    tol: f64,
) -> Result<MeasureResult> {
    if boundary.set_dim() != set_dim {
        return Err(Error::DimensionMismatch { expected: set_dim, found: boundary.set_dim() });
    }
    let rd = r.powi(set_dim as i32);
    let raw = match mode {
        Mode::Shade => {
            let flat = match boundary.pieces() {
                [p] if p.is_affine() => &p.flat,
                _ => {
                    return Err(Error::ModeMismatch(
                        "shade mode needs exactly one affine flat; use general_h".into(),
                    ))
                }
            };
            let shade = ShadeRegion::new(*x, flat.clone());
            shade_ball_measure(&shade, &Ball::new(*x, r)?, set_dim, tol * rd)?
        }
        Mode::GeneralH => h_of_r(&boundary.with_viewpoint(*x), r, tol * rd)?,
    };
    Ok(raw.scaled(1.0 / rd))
}

/// One evaluation of `F_x(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FValue {
    pub theta: MeasureResult,
    pub term: MeasureResult,
    pub value: f64,
    pub abs_error: f64,
}

/// `F_x(r) = θ_x(r) + r⁻ᵈ·(shade or H)`, with `tol` split evenly between the
/// two terms.
pub fn f_functional(
    e: &dyn MeasuredSet,
    boundary: &BoundaryConfig,
    x: &Point,
    r: f64,
    mode: Mode,
    tol: f64,
) -> Result<FValue> {
    let term = boundary_term(boundary, e.set_dim(), x, r, mode, 0.5 * tol)?;
    let th = theta(e, x, r, 0.5 * tol)?;
    Ok(FValue { theta: th, term, value: th.value + term.value, abs_error: th.abs_error + term.abs_error })
}

/// `n` log-spaced radii from `lo` to `hi` inclusive.
pub fn log_radii(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(Error::InvalidParams("need 0 < lo < hi and at least two radii".into()));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut out: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    out[0] = lo;
    out[n - 1] = hi;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalProfile {
    pub center: Point,
    pub mode: Mode,
    pub radii: Vec<f64>,
    pub theta: Vec<f64>,
    pub shade_term: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Vec<f64>,
    #[serde(rename = "F_scaled")]
    pub f_scaled: Vec<f64>,
    pub a: f64,
    pub gauge: GaugeFunction,
    /// Absolute error of `F` at each radius.
    pub error_bars: Vec<f64>,
    /// Whether each radius met the requested tolerance.
    pub within_budget: Vec<bool>,
}

impl FunctionalProfile {
    /// `e^{aA(r_i)}`.
    pub fn gauge_factor(&self, i: usize) -> f64 {
        if self.f[i] == 0.0 {
            return 1.0;
        }
        self.f_scaled[i] / self.f[i]
    }

    pub fn scaled_error(&self, i: usize) -> f64 {
        self.error_bars[i] * self.gauge_factor(i)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,theta,shade_term,F,F_scaled,abs_error\n");
        for i in 0..self.radii.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.radii[i], self.theta[i], self.shade_term[i], self.f[i], self.f_scaled[i], self.error_bars[i]
            ));
        }
        out
    }
}

fn check_grid(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || !(radii[0] > 0.0) || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("radii must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// Evaluates `F` and `F·e^{aA(r)}` over a grid of radii in parallel.
#[allow(clippy::too_many_arguments)]
pub fn scan(
    e: &dyn MeasuredSet,
    boundary: &BoundaryConfig,
    x: &Point,
    radii: &[f64],
    mode: Mode,
    gauge: &GaugeFunction,
    a: f64,
    tol: f64,
) -> Result<FunctionalProfile> {
    check_grid(radii)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tolerance must be positive".into()));
    }
    let boundary = boundary.with_viewpoint(*x);
    let values: Vec<Result<(FValue, f64)>> = radii
        .par_iter()
        .map(|&r| Ok((f_functional(e, &boundary, x, r, mode, tol)?, gauge_a(gauge, r)?)))
        .collect();
    let mut p = FunctionalProfile {
        center: *x,
        mode,
        radii: radii.to_vec(),
        theta: Vec::new(),
        shade_term: Vec::new(),
        f: Vec::new(),
        f_scaled: Vec::new(),
        a,
        gauge: *gauge,
        error_bars: Vec::new(),
        within_budget: Vec::new(),
    };
    for v in values {
        let (fv, big_a) = v?;
        p.theta.push(fv.theta.value);
        p.shade_term.push(fv.term.value);
        p.f.push(fv.value);
        p.f_scaled.push(fv.value * (a * big_a).exp());
        p.error_bars.push(fv.abs_error);
        p.within_budget.push(fv.abs_error <= tol * (1.0 + 1e-9));
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub r1: f64,
    pub r2: f64,
    /// `F_scaled(r1) − F_scaled(r2)`.
    pub drop: f64,
    /// The drop tolerated by error bars and slack.
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MonotoneVerdict {
    Monotone,
    Violated { pairs: Vec<Violation> },
    /// No pair fails, but some radius missed its error budget.
    Inconclusive { radii: Vec<f64> },
}

/// Checks `F_scaled(r_{i+1}) ≥ F_scaled(r_i) − (err_i + err_{i+1} + slack)`,
/// plus a few ulps of `F_scaled` since closed forms report a zero error bar.
pub fn check_monotone(profile: &FunctionalProfile, slack: f64) -> MonotoneVerdict {
    let n = profile.radii.len();
    let mut pairs = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let drop = profile.f_scaled[i] - profile.f_scaled[i + 1];
        let ulps = 8.0 * f64::EPSILON * profile.f_scaled[i].abs().max(profile.f_scaled[i + 1].abs());
        let allowed = profile.scaled_error(i) + profile.scaled_error(i + 1) + slack + ulps;
        if drop > allowed {
            pairs.push(Violation { index: i, r1: profile.radii[i], r2: profile.radii[i + 1], drop, allowed });
        }
    }
    if !pairs.is_empty() {
        return MonotoneVerdict::Violated { pairs };
    }
    let missed: Vec<f64> = (0..n).filter(|i| !profile.within_budget[*i]).map(|i| profile.radii[i]).collect();
    if missed.is_empty() {
        MonotoneVerdict::Monotone
    } else {
        MonotoneVerdict::Inconclusive { radii: missed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantVerdict {
    pub constant: bool,
    pub median: f64,
    pub max_deviation: f64,
}

/// Constant iff `|F_i − median(F)| ≤ err_i + tol` at every radius.
pub fn check_constant(profile: &FunctionalProfile, tol: f64) -> ConstantVerdict {
    let mut sorted = profile.f.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n == 0 {
        0.0
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let mut constant = true;
    let mut max_deviation: f64 = 0.0;
    for (f, e) in profile.f.iter().zip(&profile.error_bars) {
        let dev = (f - median).abs();
        max_deviation = max_deviation.max(dev);
        if dev > e + tol {
            constant = false;
        }
    }
    ConstantVerdict { constant, median, max_deviation }
}

/// Pass rates of the three cone-extension clauses on an annulus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeExtensionReport {
    pub constancy: ConstantVerdict,
    pub samples: usize,
    /// Fraction of sampled `E` points outside the interior of the shade.
    pub outside_shade: f64,
    /// Fraction of sampled `E ∖ S` points whose radial segment across the
    /// annulus stays in `E` wherever it leaves the shade.
    pub radial: f64,
    /// Fraction of sampled shade points lying in the cone over `E` in the
    /// annulus; `None` when the clause does not apply or nothing was sampled.
    pub shade_in_cone: Option<f64>,
}

/// Options for [`cone_extension_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionOptions {
    pub samples: usize,
    pub seed: u64,
    /// Distance below which a point counts as a member of `E`.
    pub membership_tol: f64,
}

impl Default for ExtensionOptions {
    fn default() -> Self {
        Self { samples: 400, seed: 1, membership_tol: 1e-7 }
    }
}

/// Samples `E` on the annulus `R0 < |y − x| < R1` and tests the conclusions
/// that follow from `F` being constant there.
pub fn cone_extension_check(
    e: &dyn MeasuredSet,
    boundary: &BoundaryConfig,
    annulus: (f64, f64),
    x: &Point,
    tol: f64,
    opts: ExtensionOptions,
) -> Result<ConeExtensionReport> {
    let (r0, r1) = annulus;
    if !(r0 > 0.0 && r1 > r0) {
        return Err(Error::InvalidParams("annulus needs 0 < R0 < R1".into()));
    }
    let flat = match boundary.pieces() {
        [p] if p.is_affine() => p.flat.clone(),
        _ => return Err(Error::ModeMismatch("cone extension needs exactly one affine flat".into())),
    };
    let radii = log_radii(r0, r1, 8)?;
    let profile = scan(e, boundary, x, &radii, Mode::Shade, &GaugeFunction::Zero, 0.0, tol)?;
    let constancy = check_constant(&profile, tol);
    if !constancy.constant {
        return Err(Error::Precondition(format!(
            "F is not constant on the annulus (max deviation {:.3e})",
            constancy.max_deviation
        )));
    }
    let shade = ShadeRegion::new(*x, flat.clone());
    let in_shade_interior = |y: &Point| shade.contains(y) && flat.distance(y) > opts.membership_tol;
    let in_e = |y: &Point| e.distance_to(y) <= opts.membership_tol * (1.0 + y.norm());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let outer = Ball::new(*x, r1)?;
    let pts: Vec<Point> = e
        .sample_in_ball(&outer, 4 * opts.samples, &mut rng)
        .into_iter()
        .filter(|y| (y - x).norm() > r0)
        .take(opts.samples)
        .collect();
    let n = pts.len();
    let rate = |k: usize, of: usize| if of == 0 { 1.0 } else { k as f64 / of as f64 };
    let outside = pts.iter().filter(|y| !in_shade_interior(y)).count();
    let free: Vec<&Point> = pts.iter().filter(|y| !shade.contains(y)).collect();
    let ray = |y: &Point| {
        let dir = (y - x).normalize();
        (0..=8).map(move |k| x + dir * (r0 + (r1 - r0) * (0.02 + 0.96 * k as f64 / 8.0)))
    };
    // the cone over E may enter the shade, where E is not required to follow it
    let radial_ok = free.iter().filter(|y| ray(y).all(|z| shade.contains(&z) || in_e(&z))).count();
    let shade_in_cone = if r0 < flat.distance(x) {
        let s = AnalyticSet::shade(x, &flat)?;
        let spts = s.sample_in_ball(&outer, opts.samples, &mut rng);
        let ok = spts.iter().filter(|z| ray(z).any(|w| in_e(&w))).count();
        (!spts.is_empty()).then(|| rate(ok, spts.len()))
    } else {
        None
    };
    Ok(ConeExtensionReport {
        constancy,
        samples: n,
        outside_shade: rate(outside, n),
        radial: rate(radial_ok, free.len()),
        shade_in_cone,
    })
}

/// Terms of `m(r) + (r/d)·ℋ^{d−1}(E ∩ ∂B) + h(r)rᵈ − ℋᵈ(E ∩ B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DifferentialReport {
    pub m: f64,
    pub slice: f64,
    pub gauge_term: f64,
    pub measure: f64,
    pub margin: f64,
    pub abs_error: f64,
}

/// Evaluates the differential inequality at `r`, with the spherical slice
/// standing in for the pushed density.
pub fn differential_inequality_check(
    e: &dyn MeasuredSet,
    boundary: &BoundaryConfig,
    x: &Point,
    r: f64,
    gauge: &GaugeFunction,
    tol: f64,
) -> Result<DifferentialReport> {
    let d = e.set_dim();
    let m = m_of_r(&boundary.with_viewpoint(*x), r)?;
    let slice = e.sphere_slice(x, r, tol)?;
    let measure = e.ball_measure(&Ball::new(*x, r)?, tol)?;
    let gauge_term = gauge.eval(r) * r.powi(d as i32);
    let margin = m.value + r / d as f64 * slice.value + gauge_term - measure.value;
    let abs_error = m.abs_error + r / d as f64 * slice.abs_error + measure.abs_error;
    Ok(DifferentialReport { m: m.value, slice: slice.value, gauge_term, measure: measure.value, margin, abs_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{axis, pt, AffineFlat, BoundaryPiece};
    use std::f64::consts::PI;

    fn half_plane_scene() -> (AnalyticSet, BoundaryConfig) {
        let l = AffineFlat::line(pt(&[0.3, 0.0, 0.0]), axis(1), 3).unwrap();
        let h = AnalyticSet::half_plane(&l, &(-axis(0))).unwrap();
        let b = BoundaryConfig::new(vec![BoundaryPiece::affine(l)], Point::zeros(), 2).unwrap();
        (h, b)
    }

    #[test]
    fn theta_examples() {
        let plane = AnalyticSet::plane(&AffineFlat::new(Point::zeros(), vec![axis(0), axis(1)], 3).unwrap()).unwrap();
        assert!((theta(&plane, &Point::zeros(), 0.7, 1e-9).unwrap().value - PI).abs() < 1e-15);
        let spine = AffineFlat::line(Point::zeros(), axis(2), 3).unwrap();
        let y = AnalyticSet::y_cone(&Point::zeros(), &spine, [axis(0), axis(1)], 0.0).unwrap();
        let t = theta(&y, &Point::zeros(), 2.0, 1e-10).unwrap();
        assert!((t.value - 1.5 * PI).abs() <= 1e-10);
    }

    #[test]
    fn half_plane_is_exact() {
        let (h, b) = half_plane_scene();
        let radii = log_radii(0.01, 2.0, 12).unwrap();
        let p = scan(&h, &b, &Point::zeros(), &radii, Mode::Shade, &GaugeFunction::Zero, 2.0, 1e-8).unwrap();
        for (f, e) in p.f.iter().zip(&p.error_bars) {
            assert!((f - PI).abs() <= e + 1e-12, "{f}");
        }
        assert_eq!(p.f, p.f_scaled);
        assert_eq!(check_monotone(&p, 0.0), MonotoneVerdict::Monotone);
        assert!(check_constant(&p, 0.0).constant);
    }

    #[test]
    fn general_h_agrees_with_shade_for_one_line() {
        let (h, b) = half_plane_scene();
        for r in [0.2, 0.5, 1.3] {
            let s = f_functional(&h, &b, &Point::zeros(), r, Mode::Shade, 1e-9).unwrap();
            let g = f_functional(&h, &b, &Point::zeros(), r, Mode::GeneralH, 1e-9).unwrap();
            assert!((s.value - g.value).abs() <= s.abs_error + g.abs_error);
        }
    }

    #[test]
    fn dips_are_reported() {
        let (h, b) = half_plane_scene();
        let radii = log_radii(0.1, 1.0, 5).unwrap();
        let mut p = scan(&h, &b, &Point::zeros(), &radii, Mode::Shade, &GaugeFunction::Zero, 2.0, 1e-6).unwrap();
        for e in p.error_bars.iter_mut() {
            *e = 1e-6;
        }
        p.f_scaled[3] -= 1e-5;
        p.f[3] -= 1e-5;
        match check_monotone(&p, 0.0) {
            MonotoneVerdict::Violated { pairs } => assert_eq!(pairs.iter().map(|v| v.index).collect::<Vec<_>>(), [2]),
            v => panic!("{v:?}"),
        }
        assert!(!check_constant(&p, 0.0).constant);
    }

    #[test]
    fn mode_mismatch() {
        let (h, _) = half_plane_scene();
        let seg = BoundaryPiece::segment(pt(&[0.3, 0.0, 0.0]), pt(&[0.3, 1.0, 0.0]), 3).unwrap();
        let b = BoundaryConfig::new(vec![seg], Point::zeros(), 2).unwrap();
        assert!(matches!(
            f_functional(&h, &b, &Point::zeros(), 1.0, Mode::Shade, 1e-6),
            Err(Error::ModeMismatch(_))
        ));
        assert!(f_functional(&h, &b, &Point::zeros(), 1.0, Mode::GeneralH, 1e-6).is_ok());
    }

    #[test]
    fn csv_layout() {
        let (h, b) = half_plane_scene();
        let p = scan(&h, &b, &Point::zeros(), &[0.1, 0.2], Mode::Shade, &GaugeFunction::Zero, 2.0, 1e-6).unwrap();
        let csv = p.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "r,theta,shade_term,F,F_scaled,abs_error");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.1,"));
    }
}
