//! Classical planar width machinery for flat fixtures.
//!
//! The directional width w(θ) is the extent of the boundary's projection
//! onto the direction θ (the support-function difference), which is exact
//! for convex curves and still well-defined — it measures the convex hull —
//! for non-convex ones. The module provides the sampled width table, the
//! polished width/diameter extremes, and the Cauchy–Crofton consistency
//! check ∫ w dθ = 2L with the isoperimetric-style bound w/L ≤ 1/π.

use std::f64::consts::PI;

use serde::Serialize;

use crate::curve::BoundaryCurve;
use crate::error::Error;
use crate::exec;
use crate::surface::ChartKind;
use crate::tol;
use crate::Result;

#[derive(Clone, Debug, Serialize)]
pub struct DirectionalWidthTable {
    /// Uniform angles on [0, 2π).
    pub thetas: Vec<f64>,
    /// Directional width at each angle.
    pub w: Vec<f64>,
    pub w_min: f64,
    pub w_max: f64,
    /// One representative angle per contiguous run of minimising samples.
    pub argmins: Vec<f64>,
    /// Likewise for the maximising samples.
    pub argmaxes: Vec<f64>,
}

impl DirectionalWidthTable {
    /// `theta,w` rows.
    pub fn csv(&self) -> String {
        let mut out = String::from("theta,w\n");
        for (t, w) in self.thetas.iter().zip(&self.w) {
            out.push_str(&format!("{t:.12e},{w:.12e}\n"));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PlanarExtremes {
    /// Width: the minimum directional width.
    pub w: f64,
    /// Diameter: the maximum directional width (the farthest-pair distance).
    pub diam: f64,
    /// Angle attaining the width, polished.
    pub argmin: f64,
    /// Angle attaining the diameter, polished.
    pub argmax: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CroftonReport {
    /// Trapezoid value of ∫ w(θ) dθ over the table.
    pub integral: f64,
    pub two_l: f64,
    /// |integral − 2L|.
    pub deviation: f64,
    /// w / L.
    pub ratio: f64,
    /// ratio ≤ 1/π + 1e−9.
    pub ratio_ok: bool,
    /// |ratio − 1/π| ≤ 1e−4 (constant-width curves).
    pub equality: bool,
}

fn require_plane(curve: &BoundaryCurve, op: &'static str) -> Result<()> {
    match curve.chart().kind() {
        ChartKind::EuclideanPlane => Ok(()),
        _ => Err(Error::Config(format!(
            "{op} is defined for euclidean-plane fixtures only"
        ))),
    }
}

/// Golden-section argmax of `f` on `[lo, hi]`.
fn golden_max(mut lo: f64, mut hi: f64, iters: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..iters {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Width of the boundary in direction `theta`: coarse extent over the curve
/// samples, each touching extreme refined on the interpolated curve.
pub fn directional_width(curve: &BoundaryCurve, theta: f64) -> Result<f64> {
    require_plane(curve, "directional_width")?;
    let (sin, cos) = theta.sin_cos();
    let proj_sample = |i: usize| {
        let p = curve.sample_point(i);
        p.u * cos + p.v * sin
    };
    let n = curve.sample_count();
    let mut imax = 0;
    let mut imin = 0;
    let mut dmax = f64::NEG_INFINITY;
    let mut dmin = f64::INFINITY;
    for i in 0..n {
        let d = proj_sample(i);
        if d > dmax {
            dmax = d;
            imax = i;
        }
        if d < dmin {
            dmin = d;
            imin = i;
        }
    }
    let step = curve.length() / n as f64;
    let proj = |s: f64| {
        let p = curve.point_at(s);
        p.u * cos + p.v * sin
    };
    let s_hi = golden_max(
        curve.sample_s(imax) - step,
        curve.sample_s(imax) + step,
        48,
        proj,
    );
    let s_lo = golden_max(
        curve.sample_s(imin) - step,
        curve.sample_s(imin) + step,
        48,
        |s| -proj(s),
    );
    Ok(proj(s_hi) - proj(s_lo))
}

/// Cluster the sample indices whose value is within `tol` of `best` into
/// contiguous runs (wrapping), returning the best angle of each run.
fn cluster_extremes(
    thetas: &[f64],
    w: &[f64],
    best: f64,
    tol: f64,
    is_min: bool,
) -> Vec<f64> {
    let m = w.len();
    let hit = |i: usize| {
        if is_min {
            w[i] - best <= tol
        } else {
            best - w[i] <= tol
        }
    };
    let mut reps = Vec::new();
    let mut i = 0;
    while i < m {
        if !hit(i) {
            i += 1;
            continue;
        }
        // extend the run
        let start = i;
        let mut end = i;
        while end + 1 < m && hit(end + 1) {
            end += 1;
        }
        let mut run_best = start;
        for j in start..=end {
            let better = if is_min {
                w[j] < w[run_best]
            } else {
                w[j] > w[run_best]
            };
            if better {
                run_best = j;
            }
        }
        reps.push(thetas[run_best]);
        i = end + 1;
    }
    // wrap join: a run touching both ends of the table is one run
    if reps.len() > 1 && hit(0) && hit(m - 1) {
        reps.pop();
    }
    reps
}

/// Sampled width table on `m` uniform angles (parallel over angles).
pub fn width_table(curve: &BoundaryCurve, m: usize) -> Result<DirectionalWidthTable> {
    require_plane(curve, "width_table")?;
    if m < 8 {
        return Err(Error::Config(format!(
            "width table needs at least 8 angles, got {m}"
        )));
    }
    let thetas: Vec<f64> = (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
    let w: Vec<f64> = exec::par_map_indexed(m, |k| directional_width(curve, thetas[k]))
        .into_iter()
        .collect::<Result<_>>()?;
    let w_min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let w_max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let band = 1e-9 * curve.chart().scale();
    let argmins = cluster_extremes(&thetas, &w, w_min, band, true);
    let argmaxes = cluster_extremes(&thetas, &w, w_max, band, false);
    Ok(DirectionalWidthTable {
        thetas,
        w,
        w_min,
        w_max,
        argmins,
        argmaxes,
    })
}

/// Width and diameter: extremes of the 4096-angle table, golden-polished.
pub fn planar_width_diameter(curve: &BoundaryCurve) -> Result<PlanarExtremes> {
    let table = width_table(curve, tol::WIDTH_TABLE_ANGLES)?;
    let m = table.thetas.len();
    let dt = 2.0 * PI / m as f64;
    let kmin = table
        .w
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    let kmax = table
        .w
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    let wp = |t: f64| directional_width(curve, t).unwrap_or(f64::INFINITY);
    let argmin = golden_max(table.thetas[kmin] - dt, table.thetas[kmin] + dt, 48, |t| {
        -wp(t)
    });
    let argmax = golden_max(table.thetas[kmax] - dt, table.thetas[kmax] + dt, 48, wp);
    Ok(PlanarExtremes {
        w: wp(argmin).min(table.w_min),
        diam: wp(argmax).max(table.w_max),
        argmin: argmin.rem_euclid(2.0 * PI),
        argmax: argmax.rem_euclid(2.0 * PI),
    })
}

/// Cauchy–Crofton consistency: trapezoid ∫ w dθ against 2L, plus the
/// w/L ≤ 1/π bound with its constant-width equality flag. Convex fixtures
/// only (the identity fails with re-traced support lines otherwise).
pub fn cauchy_crofton_check(curve: &BoundaryCurve) -> Result<CroftonReport> {
    require_plane(curve, "cauchy_crofton_check")?;
    if curve.min_kappa() < -tol::CONVEXITY_GATE {
        return Err(Error::Curve(format!(
            "Cauchy-Crofton needs a convex curve; min curvature = {:.3e}",
            curve.min_kappa()
        )));
    }
    let table = width_table(curve, tol::WIDTH_TABLE_ANGLES)?;
    let m = table.w.len();
    // uniform periodic grid: the rectangle rule is the periodic trapezoid
    let integral = table.w.iter().sum::<f64>() * 2.0 * PI / m as f64;
    let extremes = planar_width_diameter(curve)?;
    let l = curve.length();
    let two_l = 2.0 * l;
    let ratio = extremes.w / l;
    Ok(CroftonReport {
        integral,
        two_l,
        deviation: (integral - two_l).abs(),
        ratio,
        ratio_ok: ratio <= 1.0 / PI + 1e-9,
        equality: (ratio - 1.0 / PI).abs() <= tol::TAG_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveSpec;
    use crate::surface::SurfaceChart;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn plane_curve(spec: &CurveSpec, n: usize) -> BoundaryCurve {
        let chart = Arc::new(
            SurfaceChart::new(ChartKind::EuclideanPlane, (-4.0, 4.0), (-4.0, 4.0)).unwrap(),
        );
        BoundaryCurve::build(chart, spec, n, true).unwrap()
    }

    fn circle() -> BoundaryCurve {
        plane_curve(
            &CurveSpec::Circle {
                center: (0.3, -0.1),
                radius: 1.0,
            },
            256,
        )
    }

    fn ellipse() -> BoundaryCurve {
        plane_curve(
            &CurveSpec::Ellipse {
                center: (0.0, 0.0),
                a: 2.0,
                b: 1.0,
            },
            512,
        )
    }

    #[test]
    fn circle_width_is_constant() {
        let c = circle();
        for k in 0..12 {
            let w = directional_width(&c, 0.5 * k as f64).unwrap();
            assert_relative_eq!(w, 2.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn ellipse_width_matches_the_support_form() {
        let c = ellipse();
        for k in 0..32 {
            let theta = 2.0 * PI * k as f64 / 32.0;
            let w = directional_width(&c, theta).unwrap();
            let exact =
                2.0 * ((2.0 * theta.cos()).powi(2) + theta.sin().powi(2)).sqrt();
            assert!(
                (w - exact).abs() <= 1e-4,
                "theta = {theta:.3}: w = {w}, exact = {exact}"
            );
        }
    }

    #[test]
    fn table_has_pi_periodicity_and_axis_extremes() {
        let c = ellipse();
        let t = width_table(&c, 512).unwrap();
        for k in 0..256 {
            assert!(
                (t.w[k] - t.w[k + 256]).abs() <= 1e-9,
                "w({k}) vs half-turn: {} vs {}",
                t.w[k],
                t.w[k + 256]
            );
        }
        assert!(t.w_min <= t.w_max);
        // minima along the y-axis directions, maxima along x
        assert_eq!(t.argmins.len(), 2);
        assert_eq!(t.argmaxes.len(), 2);
        for a in &t.argmins {
            let d = (a - PI / 2.0).rem_euclid(PI);
            assert!(d.min(PI - d) < 0.05, "argmin at {a}");
        }
        for a in &t.argmaxes {
            let d = a.rem_euclid(PI);
            assert!(d.min(PI - d) < 0.05, "argmax at {a}");
        }
    }

    #[test]
    fn ellipse_extremes_are_the_axes() {
        let c = ellipse();
        let e = planar_width_diameter(&c).unwrap();
        assert_relative_eq!(e.w, 2.0, epsilon = 1e-6);
        assert_relative_eq!(e.diam, 4.0, epsilon = 1e-6);
        let dmin = (e.argmin - PI / 2.0).rem_euclid(PI);
        assert!(dmin.min(PI - dmin) < 1e-3);
        let dmax = e.argmax.rem_euclid(PI);
        assert!(dmax.min(PI - dmax) < 1e-3);
    }

    #[test]
    fn crofton_on_the_circle_is_exact_and_tight() {
        let c = circle();
        let r = cauchy_crofton_check(&c).unwrap();
        assert_relative_eq!(r.integral, 4.0 * PI, epsilon = 1e-6);
        assert!(r.deviation <= 1e-6);
        assert!(r.ratio_ok);
        assert!(r.equality, "circle should flag width/L = 1/pi");
    }

    #[test]
    fn crofton_on_the_ellipse_holds_without_equality() {
        let c = ellipse();
        let r = cauchy_crofton_check(&c).unwrap();
        assert!(
            r.deviation <= 1e-3 * c.length(),
            "deviation = {:.3e}",
            r.deviation
        );
        assert!(r.ratio_ok);
        assert!(!r.equality);
    }

    #[test]
    fn crofton_rejects_a_dented_curve() {
        // a crescent-like closed spline with a concave arc
        let pts: Vec<(f64, f64)> = (0..24)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 24.0;
                let r = 1.0 - 0.35 * (2.0 * t).cos();
                (r * t.cos(), r * t.sin())
            })
            .collect();
        let chart = Arc::new(
            SurfaceChart::new(ChartKind::EuclideanPlane, (-4.0, 4.0), (-4.0, 4.0)).unwrap(),
        );
        let c =
            BoundaryCurve::build(chart, &CurveSpec::Polyline { points: pts }, 256, false).unwrap();
        assert!(c.min_kappa() < 0.0, "fixture should be non-convex");
        assert!(matches!(
            cauchy_crofton_check(&c),
            Err(Error::Curve(_))
        ));
    }

    #[test]
    fn non_planar_chart_is_rejected() {
        let chart = Arc::new(
            SurfaceChart::new(
                ChartKind::RoundSphere { radius: 1.0 },
                (0.0, 2.0 * PI),
                (PI / 2.0, PI),
            )
            .unwrap(),
        );
        let c = BoundaryCurve::build(
            chart,
            &crate::curve::CurveSpec::Latitude {
                v: PI / 2.0,
                inward: crate::curve::InwardSide::VPlus,
            },
            64,
            true,
        )
        .unwrap();
        assert!(directional_width(&c, 0.0).is_err());
    }
}
