//! Boundary curves: smooth embedded circles on a chart, resampled uniformly
//! by arclength, carrying unit tangents, inward normals and geodesic
//! curvature A(s).
//!
//! Orientation convention: after construction the curve runs so that the
//! inward normal (towards the disc it bounds) is the +90-degree rotation of
//! the unit tangent. A(s) >= 0 exactly when the curve is convex towards the
//! inward side.
//!
//! The sampled tables plus periodic cubic interpolation *are* the curve for
//! every downstream module; sample values themselves are computed from the
//! analytic parametrisation, so table entries carry no discretisation error.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::SpatialGrid;
use crate::spline::PeriodicSpline;
use crate::surface::{SurfaceChart, SurfacePoint, TangentVector, TAU};
use crate::tol;
use crate::{Error, Result};

/// Which side of a latitude circle the bounded disc lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InwardSide {
    VPlus,
    VMinus,
}

/// Geometric description of a boundary circle.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Circle {
        #[serde(default)]
        center: (f64, f64),
        radius: f64,
    },
    Ellipse {
        #[serde(default)]
        center: (f64, f64),
        a: f64,
        b: f64,
    },
    /// Latitude circle v = const on a periodic chart.
    Latitude { v: f64, inward: InwardSide },
    /// Closed periodic cubic spline through chart-coordinate control points.
    Polyline { points: Vec<(f64, f64)> },
}

/// Position / velocity / acceleration of the parametrisation at t in [0, tau).
struct ParamEval {
    pos: SurfacePoint,
    vel: TangentVector,
    acc: TangentVector,
}

enum Param {
    Circle {
        c: (f64, f64),
        r: f64,
    },
    Ellipse {
        c: (f64, f64),
        a: f64,
        b: f64,
    },
    Latitude {
        v: f64,
        rate: f64, // du/dt, signed
    },
    Polyline {
        su: PeriodicSpline,
        sv: PeriodicSpline,
    },
}

impl Param {
    fn eval(&self, t: f64) -> ParamEval {
        match self {
            Param::Circle { c, r } => {
                let (s, co) = t.sin_cos();
                ParamEval {
                    pos: SurfacePoint::new(c.0 + r * co, c.1 + r * s),
                    vel: TangentVector::new(-r * s, r * co),
                    acc: TangentVector::new(-r * co, -r * s),
                }
            }
            Param::Ellipse { c, a, b } => {
                let (s, co) = t.sin_cos();
                ParamEval {
                    pos: SurfacePoint::new(c.0 + a * co, c.1 + b * s),
                    vel: TangentVector::new(-a * s, b * co),
                    acc: TangentVector::new(-a * co, -b * s),
                }
            }
            Param::Latitude { v, rate } => ParamEval {
                pos: SurfacePoint::new(rate * t, *v),
                vel: TangentVector::new(*rate, 0.0),
                acc: TangentVector::new(0.0, 0.0),
            },
            Param::Polyline { su, sv } => ParamEval {
                pos: SurfacePoint::new(su.eval(t), sv.eval(t)),
                vel: TangentVector::new(su.deriv(t), sv.deriv(t)),
                acc: TangentVector::new(su.deriv2(t), sv.deriv2(t)),
            },
        }
    }

    fn reversed_eval(&self, t: f64) -> ParamEval {
        let e = self.eval(TAU - t);
        ParamEval {
            pos: e.pos,
            vel: e.vel.scale(-1.0),
            acc: e.acc,
        }
    }
}

/// Local frame of the curve at an arclength parameter.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub point: SurfacePoint,
    /// Unit tangent in the direction of increasing s.
    pub tangent: TangentVector,
    /// Unit inward normal (+90 degrees from the tangent).
    pub inward: TangentVector,
    /// Geodesic curvature A(s) with respect to the inward side.
    pub kappa: f64,
}

/// An arclength-sampled boundary circle.
pub struct BoundaryCurve {
    chart: Arc<SurfaceChart>,
    n: usize,
    length: f64,
    samples: Vec<SurfacePoint>,
    tangents: Vec<TangentVector>,
    inwards: Vec<TangentVector>,
    kappa: Vec<f64>,
    // interpolants (period = length); u is stored with the winding removed
    su: PeriodicSpline,
    sv: PeriodicSpline,
    sk: PeriodicSpline,
    winding_rate: f64, // winding * period / length for periodic charts
    cum_abs_kappa: Vec<f64>, // at samples, trapezoid over a 8x denser grid
    grid: SpatialGrid,
    gap_chart: f64,     // max chart-coordinate gap between adjacent samples
    stretch_floor: f64, // min over samples of Geometry::min_stretch
    declared_convex: bool,
}

impl BoundaryCurve {
    /// Build a curve with `n` arclength-uniform samples.
    ///
    /// `declared_convex` switches on the A(s) >= -CONVEXITY_GATE validation.
    pub fn build(
        chart: Arc<SurfaceChart>,
        spec: &CurveSpec,
        n: usize,
        declared_convex: bool,
    ) -> Result<Self> {
        if n < 32 {
            return Err(Error::Curve("need at least 32 samples".into()));
        }
        let param = Self::make_param(&chart, spec)?;

        // Orientation: plane-like closed curves are made counterclockwise in
        // chart coordinates so the +90 rotation of the tangent points inward.
        // (Latitude circles encode the inward side in their signed rate.)
        let reversed = match spec {
            CurveSpec::Latitude { .. } => false,
            _ => {
                let m = 256;
                let mut area2 = 0.0;
                let mut prev = param.eval(0.0).pos;
                for i in 1..=m {
                    let cur = param.eval(TAU * i as f64 / m as f64).pos;
                    area2 += prev.u * cur.v - cur.u * prev.v;
                    prev = cur;
                }
                area2 < 0.0
            }
        };
        let eval = |t: f64| -> ParamEval {
            if reversed {
                param.reversed_eval(t)
            } else {
                param.eval(t)
            }
        };

        let speed = |t: f64| -> Result<f64> {
            let e = eval(t);
            let geo = chart.geometry_at(e.pos)?;
            let sp = geo.norm(e.vel);
            if sp <= 0.0 {
                return Err(Error::Curve(format!("vanishing speed at t = {t}")));
            }
            Ok(sp)
        };

        // Total length by adaptive quadrature.
        let length = adaptive_simpson(&|t| speed(t), 0.0, TAU, tol::ARCLENGTH_REL_TOL)?;

        // Fine cumulative table for inverting s(t).
        let m = (8 * n).max(4096);
        let mut cum = vec![0.0; m + 1];
        for i in 0..m {
            let a = TAU * i as f64 / m as f64;
            let b = TAU * (i + 1) as f64 / m as f64;
            cum[i + 1] = cum[i] + simpson3(&|t| speed(t), a, b)?;
        }
        let table_total = cum[m];

        // Invert: t_i with arc(t_i) = i * length / n. The table seeds a
        // Newton iteration on the exact local quadrature.
        let mut ts = Vec::with_capacity(n);
        let mut k = 0usize;
        for i in 0..n {
            let target = table_total * i as f64 / n as f64;
            while k + 1 < m && cum[k + 1] < target {
                k += 1;
            }
            let t0 = TAU * k as f64 / m as f64;
            let frac = if cum[k + 1] > cum[k] {
                (target - cum[k]) / (cum[k + 1] - cum[k])
            } else {
                0.0
            };
            let mut t = t0 + frac * TAU / m as f64;
            for _ in 0..3 {
                let base = TAU * k as f64 / m as f64;
                let arc = cum[k] + simpson3(&|x| speed(x), base, t)?;
                let f = arc - target;
                let sp = speed(t)?;
                t -= f / sp;
            }
            ts.push(t);
        }

        // Analytic frames at the sample parameters.
        let mut samples = Vec::with_capacity(n);
        let mut u_unwrapped = Vec::with_capacity(n);
        let mut tangents = Vec::with_capacity(n);
        let mut inwards = Vec::with_capacity(n);
        let mut kappa = Vec::with_capacity(n);
        let mut prev_u: Option<f64> = None;
        for &t in &ts {
            let e = eval(t);
            let geo = chart.geometry_at(e.pos)?;
            let sp = geo.norm(e.vel);
            let tv = e.vel.scale(1.0 / sp);
            let jn = chart.rotate90(e.pos, tv)?;
            // Covariant acceleration of the parametrisation.
            let mut cov = [e.acc.du, e.acc.dv];
            let vel = [e.vel.du, e.vel.dv];
            for kk in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        cov[kk] += geo.christoffel[kk][i][j] * vel[i] * vel[j];
                    }
                }
            }
            let a = geo.dot(TangentVector::new(cov[0], cov[1]), jn) / (sp * sp);
            // Unwrap u along the curve for the interpolant.
            let u_raw = e.pos.u;
            let u_un = match (prev_u, chart.period()) {
                (Some(pu), Some(p)) => {
                    let mut du = (u_raw - pu) % p;
                    if du > 0.5 * p {
                        du -= p;
                    }
                    if du < -0.5 * p {
                        du += p;
                    }
                    pu + du
                }
                _ => u_raw,
            };
            prev_u = Some(u_un);
            u_unwrapped.push(u_un);
            samples.push(SurfacePoint::new(chart.wrap_u(u_raw), e.pos.v));
            tangents.push(tv);
            inwards.push(jn);
            kappa.push(a);
        }

        // Winding of u around a periodic chart over one loop.
        let winding_rate = match chart.period() {
            Some(p) => {
                let e0 = eval(ts[0]);
                let eend = eval(ts[0] + TAU);
                let w = ((eend.pos.u - e0.pos.u) / p).round();
                w * p / length
            }
            None => 0.0,
        };

        let h = length / n as f64;
        let su_data: Vec<f64> = (0..n)
            .map(|i| u_unwrapped[i] - winding_rate * (i as f64 * h))
            .collect();
        let sv_data: Vec<f64> = samples.iter().map(|p| p.v).collect();
        let su = PeriodicSpline::new(su_data, length)?;
        let sv = PeriodicSpline::new(sv_data, length)?;
        let sk = PeriodicSpline::new(kappa.clone(), length)?;

        // Cumulative integrated |A| at samples (8 subpanels per interval).
        let mut cum_abs_kappa = vec![0.0; n + 1];
        for i in 0..n {
            let mut acc = 0.0;
            let sub = 8;
            for j in 0..sub {
                let s0 = (i as f64 + j as f64 / sub as f64) * h;
                let s1 = (i as f64 + (j + 1) as f64 / sub as f64) * h;
                acc += 0.5 * (sk.eval(s0).abs() + sk.eval(s1).abs()) * (s1 - s0);
            }
            cum_abs_kappa[i + 1] = cum_abs_kappa[i] + acc;
        }

        let mut gap_chart = 0.0f64;
        let mut stretch_floor = f64::INFINITY;
        for i in 0..n {
            let a = samples[i];
            let b = samples[(i + 1) % n];
            let du = chart.du_wrapped(a.u, b.u);
            let dv = b.v - a.v;
            gap_chart = gap_chart.max((du * du + dv * dv).sqrt());
            stretch_floor = stretch_floor.min(chart.geometry_at(a)?.min_stretch());
        }
        let grid = SpatialGrid::build(&chart, &samples, (4.0 * gap_chart).max(1e-12));

        let curve = Self {
            chart,
            n,
            length,
            samples,
            tangents,
            inwards,
            kappa,
            su,
            sv,
            sk,
            winding_rate,
            cum_abs_kappa,
            grid,
            gap_chart,
            stretch_floor,
            declared_convex,
        };
        curve.validate(declared_convex)?;
        Ok(curve)
    }

    fn make_param(chart: &SurfaceChart, spec: &CurveSpec) -> Result<Param> {
        match spec {
            CurveSpec::Circle { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::Curve("circle radius must be > 0".into()));
                }
                Ok(Param::Circle {
                    c: *center,
                    r: *radius,
                })
            }
            CurveSpec::Ellipse { center, a, b } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return Err(Error::Curve("ellipse semi-axes must be > 0".into()));
                }
                Ok(Param::Ellipse {
                    c: *center,
                    a: *a,
                    b: *b,
                })
            }
            CurveSpec::Latitude { v, inward } => {
                let p = chart.period().ok_or_else(|| {
                    Error::Curve("latitude curves need a periodic chart".into())
                })?;
                let rate = match inward {
                    InwardSide::VPlus => p / TAU,
                    InwardSide::VMinus => -p / TAU,
                };
                Ok(Param::Latitude { v: *v, rate })
            }
            CurveSpec::Polyline { points } => {
                if points.len() < 8 {
                    return Err(Error::Curve(
                        "polyline curves need at least 8 control points".into(),
                    ));
                }
                let su = PeriodicSpline::new(points.iter().map(|p| p.0).collect(), TAU)?;
                let sv = PeriodicSpline::new(points.iter().map(|p| p.1).collect(), TAU)?;
                Ok(Param::Polyline { su, sv })
            }
        }
    }

    fn validate(&self, declared_convex: bool) -> Result<()> {
        let h = self.length / self.n as f64;
        // Adjacent chords close to h, measured in the chart metric.
        for i in 0..self.n {
            let j = (i + 1) % self.n;
            let d = self.local_dist(self.samples[i], self.samples[j]);
            if (d - h).abs() > 0.01 * h {
                return Err(Error::Curve(format!(
                    "sample spacing broke at {i}: chord {d:.6e} vs step {h:.6e}"
                )));
            }
        }
        // Simplicity: non-adjacent samples keep their distance.
        let floor = 0.1 * h;
        for i in 0..self.n {
            for j in (i + 2)..self.n {
                if i == 0 && j == self.n - 1 {
                    continue;
                }
                let d = self.local_dist(self.samples[i], self.samples[j]);
                if d < floor {
                    return Err(Error::Curve(format!(
                        "samples {i} and {j} nearly coincide (distance {d:.3e})"
                    )));
                }
            }
        }
        if declared_convex {
            let min_a = self.kappa.iter().cloned().fold(f64::INFINITY, f64::min);
            if min_a < -tol::CONVEXITY_GATE {
                return Err(Error::Curve(format!(
                    "declared convex but min A(s) = {min_a:.3e}"
                )));
            }
        }
        Ok(())
    }

    /// Chart-metric length of the chord between two nearby points.
    fn local_dist(&self, a: SurfacePoint, b: SurfacePoint) -> f64 {
        let w = TangentVector::new(self.chart.du_wrapped(a.u, b.u), b.v - a.v);
        let mid = SurfacePoint::new(
            self.chart.wrap_u(a.u + 0.5 * w.du),
            0.5 * (a.v + b.v),
        );
        self.chart
            .geometry_at(mid)
            .map(|g| g.norm(w))
            .unwrap_or_else(|_| (w.du * w.du + w.dv * w.dv).sqrt())
    }

    /// Whether the fixture declared this boundary totally convex (gates the
    /// shooting-fan distance route on curved charts).
    pub fn declared_convex(&self) -> bool {
        self.declared_convex
    }

    pub fn chart(&self) -> &Arc<SurfaceChart> {
        &self.chart
    }
    pub fn sample_count(&self) -> usize {
        self.n
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn samples(&self) -> &[SurfacePoint] {
        &self.samples
    }
    pub fn sample_s(&self, i: usize) -> f64 {
        self.length * (i % self.n) as f64 / self.n as f64
    }
    pub fn sample_point(&self, i: usize) -> SurfacePoint {
        self.samples[i % self.n]
    }
    pub fn sample_tangent(&self, i: usize) -> TangentVector {
        self.tangents[i % self.n]
    }
    pub fn sample_inward(&self, i: usize) -> TangentVector {
        self.inwards[i % self.n]
    }
    pub fn sample_kappa(&self, i: usize) -> f64 {
        self.kappa[i % self.n]
    }

    pub fn wrap_s(&self, s: f64) -> f64 {
        s.rem_euclid(self.length)
    }

    /// Interpolated point at arclength s.
    pub fn point_at(&self, s: f64) -> SurfacePoint {
        let s = self.wrap_s(s);
        let u = self.su.eval(s) + self.winding_rate * s;
        SurfacePoint::new(self.chart.wrap_u(u), self.sv.eval(s))
    }

    /// Interpolated frame at arclength s (tangent renormalised to unit
    /// metric length).
    pub fn frame_at(&self, s: f64) -> Result<Frame> {
        let s = self.wrap_s(s);
        let point = self.point_at(s);
        let raw = TangentVector::new(self.su.deriv(s) + self.winding_rate, self.sv.deriv(s));
        let geo = self.chart.geometry_at(point)?;
        let nrm = geo.norm(raw);
        if nrm <= 0.0 {
            return Err(Error::numerical("frame_at", "degenerate tangent"));
        }
        let tangent = raw.scale(1.0 / nrm);
        let inward = self.chart.rotate90(point, tangent)?;
        Ok(Frame {
            point,
            tangent,
            inward,
            kappa: self.sk.eval(s),
        })
    }

    /// Shorter-arc distance along the curve.
    pub fn intrinsic_distance(&self, s1: f64, s2: f64) -> f64 {
        let d = (self.wrap_s(s1) - self.wrap_s(s2)).abs();
        d.min(self.length - d)
    }

    /// Integrated |A| along the arc from s0 forward (increasing s) to s1.
    pub fn arc_abs_kappa(&self, s0: f64, s1: f64) -> f64 {
        let total = *self.cum_abs_kappa.last().unwrap();
        let cum = |s: f64| -> f64 {
            let s = self.wrap_s(s);
            let h = self.length / self.n as f64;
            let i = ((s / h) as usize).min(self.n - 1);
            let frac = (s - i as f64 * h) / h;
            self.cum_abs_kappa[i] + frac * (self.cum_abs_kappa[i + 1] - self.cum_abs_kappa[i])
        };
        let (c0, c1) = (cum(s0), cum(s1));
        if c1 >= c0 {
            c1 - c0
        } else {
            total - (c0 - c1)
        }
    }

    /// Total turning: integral of A ds over one loop.
    pub fn total_turning(&self) -> f64 {
        let h = self.length / self.n as f64;
        self.kappa.iter().map(|a| a * h).sum()
    }

    pub fn min_kappa(&self) -> f64 {
        self.kappa.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Cheap signed-offset probe against the nearest *sample* (first-order
    /// accurate in the sample spacing; no Newton). Used by the geodesic
    /// tracer to watch for boundary crossings. Returns the sample index and
    /// the signed inward offset at that sample.
    pub(crate) fn quick_offset(&self, x: SurfacePoint, chart_radius: f64) -> Option<(usize, f64)> {
        let i = self.grid.nearest(&self.chart, x, chart_radius)?;
        let p = self.samples[i];
        let w = TangentVector::new(self.chart.du_wrapped(p.u, x.u), x.v - p.v);
        let geo = self.chart.geometry_at(p).ok()?;
        Some((i, geo.dot(w, self.inwards[i])))
    }

    pub(crate) fn stretch_floor(&self) -> f64 {
        self.stretch_floor
    }

    pub(crate) fn gap_chart(&self) -> f64 {
        self.gap_chart
    }

    /// Locate the nearest curve point to `x` if it lies within `band`
    /// (chart-metric distance, approximated locally). Returns the arclength
    /// parameter and the signed offset (positive on the inward side).
    pub fn locate_within(&self, x: SurfacePoint, band: f64) -> Option<(f64, f64)> {
        // Convert the metric band to a chart-coordinate search radius. The
        // 0.5 safety factor absorbs metric variation off the sampled points.
        let chart_radius = band / (0.5 * self.stretch_floor) + 2.0 * self.gap_chart;
        let idx = self.grid.nearest(&self.chart, x, chart_radius)?;
        // Newton on <x - c(s), T(s)> = 0 seeded at the nearest sample.
        let mut s = self.sample_s(idx);
        for _ in 0..8 {
            let f = self.frame_at(s).ok()?;
            let w = TangentVector::new(
                self.chart.du_wrapped(f.point.u, x.u),
                x.v - f.point.v,
            );
            let geo = self.chart.geometry_at(f.point).ok()?;
            let along = geo.dot(w, f.tangent);
            s = self.wrap_s(s + along);
            if along.abs() < 1e-12 * self.length {
                break;
            }
        }
        let f = self.frame_at(s).ok()?;
        let w = TangentVector::new(self.chart.du_wrapped(f.point.u, x.u), x.v - f.point.v);
        let geo = self.chart.geometry_at(f.point).ok()?;
        let offset = geo.dot(w, f.inward);
        let across = geo.norm(w);
        if across <= band {
            Some((s, offset))
        } else {
            None
        }
    }
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn rec(
        f: &impl Fn(f64) -> Result<f64>,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol_abs: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm)?;
        let frm = f(rm)?;
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol_abs {
            return Ok(left + right + delta / 15.0);
        }
        Ok(rec(f, a, m, fa, flm, fm, left, 0.5 * tol_abs, depth - 1)?
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol_abs, depth - 1)?)
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = simpson(fa, fm, fb, a, b);
    let tol_abs = rel_tol * whole.abs().max(1e-300);
    rec(f, a, b, fa, fm, fb, whole, tol_abs, 28)
}

fn simpson3(f: &impl Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    if (b - a).abs() == 0.0 {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    Ok((b - a) / 6.0 * (f(a)? + 4.0 * f(m)? + f(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::ChartKind;
    use approx::assert_relative_eq;

    fn plane() -> Arc<SurfaceChart> {
        Arc::new(
            SurfaceChart::new(ChartKind::EuclideanPlane, (-4.0, 4.0), (-4.0, 4.0)).unwrap(),
        )
    }

    #[test]
    fn circle_frames_are_exact() {
        let c = BoundaryCurve::build(
            plane(),
            &CurveSpec::Circle {
                center: (0.3, -0.2),
                radius: 2.0,
            },
            64,
            true,
        )
        .unwrap();
        assert_relative_eq!(c.length(), 4.0 * std::f64::consts::PI, max_relative = 1e-12);
        for i in 0..c.sample_count() {
            assert_relative_eq!(c.sample_kappa(i), 0.5, epsilon = 1e-12);
            // inward normal points at the centre
            let p = c.sample_point(i);
            let n = c.sample_inward(i);
            let to_c = (0.3 - p.u, -0.2 - p.v);
            let dot = n.du * to_c.0 + n.dv * to_c.1;
            assert!(dot > 1.9, "inward normal misdirected at {i}");
        }
        assert_relative_eq!(
            c.total_turning(),
            2.0 * std::f64::consts::PI,
            epsilon = 1e-9
        );
    }

    #[test]
    fn ellipse_length_matches_elliptic_integral() {
        let c = BoundaryCurve::build(
            plane(),
            &CurveSpec::Ellipse {
                center: (0.0, 0.0),
                a: 2.0,
                b: 1.0,
            },
            128,
            true,
        )
        .unwrap();
        // 4 a E(m), m = 1 - b^2/a^2 = 0.75
        assert_relative_eq!(c.length(), 9.688448220547675, epsilon = 1e-6);
        // vertex (2, 0) is sample 0; its curvature is a/b^2 = 2
        let f = c.frame_at(0.0).unwrap();
        assert_relative_eq!(f.point.u, 2.0, epsilon = 1e-12);
        assert_relative_eq!(f.point.v, 0.0, epsilon = 1e-12);
        assert_relative_eq!(f.tangent.dv.abs(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(f.kappa, 2.0, epsilon = 1e-4);
        assert!(f.inward.du < -0.99, "inward should face the centre");
        assert_relative_eq!(
            c.total_turning(),
            2.0 * std::f64::consts::PI,
            epsilon = 1e-9
        );
    }

    #[test]
    fn sphere_latitude_has_cotangent_curvature() {
        let chart = Arc::new(
            SurfaceChart::new(
                ChartKind::RoundSphere { radius: 1.0 },
                (0.0, TAU),
                (0.0, std::f64::consts::PI),
            )
            .unwrap(),
        );
        let v0 = 1.0f64;
        let c = BoundaryCurve::build(
            chart,
            &CurveSpec::Latitude {
                v: v0,
                inward: InwardSide::VMinus,
            },
            64,
            true,
        )
        .unwrap();
        assert_relative_eq!(c.length(), TAU * v0.sin(), max_relative = 1e-10);
        for i in 0..c.sample_count() {
            assert_relative_eq!(c.sample_kappa(i), 1.0 / v0.tan(), epsilon = 1e-10);
            assert!(c.sample_inward(i).dv < 0.0, "inward should point to v-");
        }
        // Gauss-Bonnet for the polar cap: total turning = 2 pi cos v0
        assert_relative_eq!(c.total_turning(), TAU * v0.cos(), epsilon = 1e-9);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        // 16-gon control points of a unit circle, listed clockwise
        let pts: Vec<(f64, f64)> = (0..16)
            .map(|i| {
                let t = -TAU * i as f64 / 16.0;
                (t.cos(), t.sin())
            })
            .collect();
        let c = BoundaryCurve::build(plane(), &CurveSpec::Polyline { points: pts }, 64, false)
            .unwrap();
        assert_relative_eq!(c.length(), TAU, max_relative = 2e-3);
        assert!(c.total_turning() > 0.0, "orientation flip failed");
        let n = c.sample_inward(0);
        let p = c.sample_point(0);
        assert!(n.du * (0.0 - p.u) + n.dv * (0.0 - p.v) > 0.5);
    }

    #[test]
    fn locator_finds_nearby_points() {
        let c = BoundaryCurve::build(
            plane(),
            &CurveSpec::Ellipse {
                center: (0.0, 0.0),
                a: 2.0,
                b: 1.0,
            },
            128,
            true,
        )
        .unwrap();
        let (s, off) = c
            .locate_within(SurfacePoint::new(1.95, 0.0), 0.2)
            .expect("point near the vertex");
        assert!(off > 0.0, "inside the ellipse means positive offset");
        assert_relative_eq!(off, 0.05, epsilon = 1e-6);
        assert!(c.intrinsic_distance(s, 0.0) < 1e-6);
        assert!(c
            .locate_within(SurfacePoint::new(0.0, 0.0), 0.2)
            .is_none());
    }

    #[test]
    fn arc_kappa_accumulates_forward() {
        let c = BoundaryCurve::build(
            plane(),
            &CurveSpec::Circle {
                center: (0.0, 0.0),
                radius: 1.0,
            },
            64,
            true,
        )
        .unwrap();
        // A = 1 everywhere: integrated |A| equals arc length travelled
        let quarter = c.length() / 4.0;
        assert_relative_eq!(c.arc_abs_kappa(0.0, quarter), quarter, epsilon = 1e-9);
        // wrapping arc from 3/4 round to 1/4
        assert_relative_eq!(
            c.arc_abs_kappa(3.0 * quarter, quarter),
            2.0 * quarter,
            epsilon = 1e-9
        );
    }

    #[test]
    fn interpolant_stays_on_the_curve() {
        let c = BoundaryCurve::build(
            plane(),
            &CurveSpec::Ellipse {
                center: (0.0, 0.0),
                a: 2.0,
                b: 1.0,
            },
            128,
            true,
        )
        .unwrap();
        // off-sample interpolated points satisfy the implicit equation up to
        // the quartic interpolation error of the cubic spline at h = L/128
        for k in 0..40 {
            let s = c.length() * (k as f64 + 0.37) / 40.0;
            let p = c.point_at(s);
            let r = (p.u / 2.0).powi(2) + p.v.powi(2);
            assert!((r - 1.0).abs() < 5e-6, "drifted off ellipse: {}", r - 1.0);
        }
    }
}
