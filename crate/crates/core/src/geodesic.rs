//! Geodesic integration and the two-point connection problem.
//!
//! Two integration backends share one interface: plane-like charts step the
//! geodesic ODE in chart coordinates; sphere / revolution charts step in the
//! R^3 embedding (position + velocity constrained to the surface), which
//! stays regular across rotational poles where chart coordinates degenerate.
//!
//! Distances between boundary points are computed by one of three routes,
//! keyed on the chart kind:
//! * euclidean plane — the straight segment (the plane is complete and
//!   flat, so the segment is the unique geodesic between any two points);
//! * flat cylinder — straight segments of the universal cover, one per
//!   winding offset in {-2..2};
//! * everything else — a 720-ray shooting fan from the source with local
//!   pass detection against the targets, each candidate polished by a
//!   damped Newton solve on (departure angle, length).
//!
//! Arcs of the boundary curve itself are admitted as connectors whenever
//! their integrated geodesic curvature vanishes (they are then geodesics),
//! which is how equator-like boundaries contribute their minimizers.

use std::collections::HashMap;

use serde::Serialize;

use crate::curve::BoundaryCurve;
use crate::exec;
use crate::grid::SpatialGrid;
use crate::surface::{Geometry, SurfaceChart, SurfacePoint, TangentVector};
use crate::tol;
use crate::{Error, Result};

use std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Public path type
// ---------------------------------------------------------------------------

/// A unit-speed geodesic polyline.
#[derive(Clone, Debug, Serialize)]
pub struct GeodesicPath {
    /// Integration nodes (every step), chart coordinates.
    pub points: Vec<SurfacePoint>,
    pub length: f64,
    /// Arclength parameters on the boundary curve, when the endpoints lie
    /// on one.
    pub start_s: Option<f64>,
    pub end_s: Option<f64>,
    /// Unit chart tangents at departure and arrival.
    pub start_dir: TangentVector,
    pub end_dir: TangentVector,
    /// Conormal signature (sigma_p, sigma_q) when the endpoints lie on a
    /// boundary curve.
    pub sigma: Option<(f64, f64)>,
    /// True when the path exited the chart domain before reaching max_len.
    pub exited: bool,
}

/// One connection between two boundary points (lightweight summary; use
/// [`realize`] to reconstruct the full polyline).
#[derive(Clone, Debug, Serialize)]
pub struct Connector {
    pub s_p: f64,
    pub s_q: f64,
    pub length: f64,
    /// Departure angle from the boundary tangent at p (interior connectors).
    pub theta: Option<f64>,
    pub sigma_p: f64,
    pub sigma_q: f64,
    /// True for connectors that run along the boundary curve itself.
    pub boundary_arc: bool,
    /// Metric endpoint miss after polishing (0 for closed forms and arcs).
    pub residual: f64,
}

/// All connectors found for one boundary pair.
#[derive(Clone, Debug, Serialize)]
pub struct PairSet {
    pub s_p: f64,
    pub s_q: f64,
    /// Sorted by length, then by departure angle.
    pub connectors: Vec<Connector>,
    /// Number of minimizers before the storage cap was applied.
    pub raw_minimizer_count: usize,
    /// True when the minimizers form a continuum (e.g. antipodal pairs on a
    /// round profile) rather than an isolated set.
    pub family: bool,
}

impl PairSet {
    pub fn distance(&self) -> f64 {
        self.connectors.first().map(|c| c.length).unwrap_or(f64::NAN)
    }

    /// Connectors within the relative length window of the minimum.
    pub fn minimizers(&self) -> Vec<&Connector> {
        let d = self.distance();
        self.connectors
            .iter()
            .filter(|c| c.length <= d * (1.0 + tol::EPS_LEN))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Integrator core
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum State {
    Chart {
        p: SurfacePoint,
        v: TangentVector,
    },
    Embedded {
        x: [f64; 3],
        w: [f64; 3],
    },
}

fn add3(a: [f64; 3], b: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

struct Stepper<'a> {
    chart: &'a SurfaceChart,
}

impl<'a> Stepper<'a> {
    fn new(chart: &'a SurfaceChart) -> Self {
        Self { chart }
    }

    fn init(&self, p: SurfacePoint, v: TangentVector) -> State {
        if self.chart.embeds() {
            State::Embedded {
                x: self.chart.embed(p),
                w: self.chart.embed_tangent(p, v),
            }
        } else {
            State::Chart { p, v }
        }
    }

    fn position(&self, st: &State, fallback: SurfacePoint) -> SurfacePoint {
        match st {
            State::Chart { p, .. } => *p,
            State::Embedded { x, .. } => {
                let p = self.chart.chart_point(*x);
                if p.u.is_finite() && p.v.is_finite() {
                    p
                } else {
                    fallback
                }
            }
        }
    }

    fn velocity(&self, st: &State) -> Option<TangentVector> {
        match st {
            State::Chart { v, .. } => Some(*v),
            State::Embedded { x, w } => {
                let p = self.chart.chart_point(*x);
                self.chart.chart_tangent(p, *w)
            }
        }
    }

    fn in_domain(&self, st: &State) -> bool {
        match st {
            State::Chart { p, .. } => self.chart.contains(*p),
            State::Embedded { x, .. } => self.chart.contains3(*x),
        }
    }

    /// One RK4 step of metric length h, with renormalisation to unit speed.
    fn step(&self, st: &State, h: f64) -> Result<State> {
        match st {
            State::Chart { p, v } => {
                let f = |p: SurfacePoint, v: TangentVector| -> Result<(TangentVector, TangentVector)> {
                    let geo = self.chart.geometry_at(p)?;
                    let mut acc = [0.0f64; 2];
                    let vv = [v.du, v.dv];
                    for k in 0..2 {
                        for i in 0..2 {
                            for j in 0..2 {
                                acc[k] -= geo.christoffel[k][i][j] * vv[i] * vv[j];
                            }
                        }
                    }
                    Ok((v, TangentVector::new(acc[0], acc[1])))
                };
                let shift = |p: SurfacePoint, d: TangentVector, s: f64| {
                    SurfacePoint::new(p.u + s * d.du, p.v + s * d.dv)
                };
                let (k1p, k1v) = f(*p, *v)?;
                let (k2p, k2v) = f(shift(*p, k1p, 0.5 * h), v.add(k1v.scale(0.5 * h)))?;
                let (k3p, k3v) = f(shift(*p, k2p, 0.5 * h), v.add(k2v.scale(0.5 * h)))?;
                let (k4p, k4v) = f(shift(*p, k3p, h), v.add(k3v.scale(h)))?;
                let mut p2 = SurfacePoint::new(
                    p.u + h / 6.0 * (k1p.du + 2.0 * k2p.du + 2.0 * k3p.du + k4p.du),
                    p.v + h / 6.0 * (k1p.dv + 2.0 * k2p.dv + 2.0 * k3p.dv + k4p.dv),
                );
                p2.u = self.chart.wrap_u(p2.u);
                let v2 = TangentVector::new(
                    v.du + h / 6.0 * (k1v.du + 2.0 * k2v.du + 2.0 * k3v.du + k4v.du),
                    v.dv + h / 6.0 * (k1v.dv + 2.0 * k2v.dv + 2.0 * k3v.dv + k4v.dv),
                );
                if !self.chart.contains(p2) {
                    // caller checks in_domain; return the raw state
                    return Ok(State::Chart { p: p2, v: v2 });
                }
                let geo = self.chart.geometry_at(p2)?;
                let n = geo.norm(v2);
                if n <= 0.0 || !n.is_finite() {
                    return Err(Error::numerical("geodesic step", "velocity collapsed"));
                }
                Ok(State::Chart {
                    p: p2,
                    v: v2.scale(1.0 / n),
                })
            }
            State::Embedded { x, w } => {
                let f = |x: [f64; 3], w: [f64; 3]| -> ([f64; 3], [f64; 3]) {
                    (w, self.chart.accel3(x, w))
                };
                let (k1x, k1w) = f(*x, *w);
                let (k2x, k2w) = f(add3(*x, k1x, 0.5 * h), add3(*w, k1w, 0.5 * h));
                let (k3x, k3w) = f(add3(*x, k2x, 0.5 * h), add3(*w, k2w, 0.5 * h));
                let (k4x, k4w) = f(add3(*x, k3x, h), add3(*w, k3w, h));
                let mut x2 = [0.0; 3];
                let mut w2 = [0.0; 3];
                for i in 0..3 {
                    x2[i] = x[i] + h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
                    w2[i] = w[i] + h / 6.0 * (k1w[i] + 2.0 * k2w[i] + 2.0 * k3w[i] + k4w[i]);
                }
                let x2 = self.chart.project3(x2);
                let w2 = self.chart.tangentialize3(x2, w2);
                let n = crate::surface::norm3(w2);
                if n <= 0.0 || !n.is_finite() {
                    return Err(Error::numerical("geodesic step", "velocity collapsed"));
                }
                Ok(State::Embedded {
                    x: x2,
                    w: [w2[0] / n, w2[1] / n, w2[2] / n],
                })
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Ray tracing (fan internals)
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
enum Stop {
    MaxLength,
    DomainExit,
    BoundaryCross,
}

struct Trace {
    nodes: Vec<SurfacePoint>,
    h: f64,
    stop: Stop,
}

impl Trace {
    fn len_at(&self, m: usize) -> f64 {
        m as f64 * self.h
    }
}

/// Trace a unit-speed geodesic, recording every node. With a curve attached
/// and `watch_crossing`, the trace stops once it crosses the curve from the
/// inward to the outward side (valid stopping rule for totally convex
/// boundaries: such rays never return).
fn trace_ray(
    chart: &SurfaceChart,
    curve: Option<&BoundaryCurve>,
    start: SurfacePoint,
    dir: TangentVector,
    max_len: f64,
    h: f64,
    watch_crossing: bool,
) -> Result<Trace> {
    let stepper = Stepper::new(chart);
    let mut st = stepper.init(start, dir);
    let steps = (max_len / h).ceil() as usize;
    let mut nodes = Vec::with_capacity(steps + 1);
    nodes.push(start);

    // crossing watcher state
    let watcher = curve.filter(|_| watch_crossing).map(|c| {
        let radius_metric = 10.0 * h;
        let chart_radius = radius_metric / (0.5 * c.stretch_floor()) + 2.0 * c.gap_chart();
        (c, chart_radius, 4.0 * h)
    });
    let mut armed = false;
    let mut prev_off: Option<f64> = None;

    let mut stop = Stop::MaxLength;
    for m in 1..=steps {
        // An RK4 stage can poke past the chart box even before the node
        // itself leaves; either way the ray is gone.
        let next = match stepper.step(&st, h) {
            Ok(n) => n,
            Err(Error::OutsideDomain { .. }) => {
                stop = Stop::DomainExit;
                break;
            }
            Err(e) => return Err(e),
        };
        if !stepper.in_domain(&next) {
            stop = Stop::DomainExit;
            break;
        }
        st = next;
        let node = stepper.position(&st, *nodes.last().unwrap());
        nodes.push(node);

        if let Some((c, chart_radius, arm_off)) = watcher {
            if m % 4 == 0 || m == steps {
                match c.quick_offset(node, chart_radius) {
                    Some((_, off)) => {
                        if !armed {
                            if off > arm_off {
                                armed = true;
                            }
                        } else if prev_off.map_or(false, |p| p > 0.0) && off <= 0.0 {
                            stop = Stop::BoundaryCross;
                            break;
                        }
                        prev_off = Some(off);
                    }
                    None => {
                        armed = true;
                        prev_off = None;
                    }
                }
            }
        }
    }
    Ok(Trace { nodes, h, stop })
}

/// Integrate to an exact arclength; returns the endpoint and the unit chart
/// velocity there.
fn shoot_to(
    chart: &SurfaceChart,
    start: SurfacePoint,
    dir: TangentVector,
    h: f64,
    ell: f64,
) -> Result<(SurfacePoint, TangentVector)> {
    let stepper = Stepper::new(chart);
    let mut st = stepper.init(start, dir);
    let full = (ell / h).floor() as usize;
    let mut last = start;
    for _ in 0..full {
        st = stepper.step(&st, h)?;
        if !stepper.in_domain(&st) {
            return Err(Error::numerical("shoot_to", "left the chart domain"));
        }
        last = stepper.position(&st, last);
    }
    let rem = ell - full as f64 * h;
    if rem > 1e-14 * ell.max(1.0) {
        st = stepper.step(&st, rem)?;
        if !stepper.in_domain(&st) {
            return Err(Error::numerical("shoot_to", "left the chart domain"));
        }
        last = stepper.position(&st, last);
    }
    let vel = stepper
        .velocity(&st)
        .ok_or_else(|| Error::numerical("shoot_to", "endpoint at a chart pole"))?;
    Ok((last, vel))
}

fn chart_dist(chart: &SurfaceChart, a: SurfacePoint, b: SurfacePoint) -> f64 {
    let du = chart.du_wrapped(a.u, b.u);
    let dv = b.v - a.v;
    (du * du + dv * dv).sqrt()
}

// ---------------------------------------------------------------------------
// Public shoot (chart-level operation)
// ---------------------------------------------------------------------------

/// Integrate a unit-speed geodesic from `p` with initial direction `dir`
/// for at most `max_len`. Stops early (reporting `exited`) if the path
/// leaves the chart domain; erroring only when it exits immediately.
pub fn shoot(
    chart: &SurfaceChart,
    p: SurfacePoint,
    dir: TangentVector,
    max_len: f64,
) -> Result<GeodesicPath> {
    if !chart.contains(p) {
        return Err(Error::OutsideDomain { u: p.u, v: p.v });
    }
    if !(max_len > 0.0) {
        return Err(Error::numerical("shoot", "max_len must be positive"));
    }
    let geo = chart.geometry_at(p)?;
    let n = geo.norm(dir);
    if (n - 1.0).abs() > 1e-6 {
        return Err(Error::numerical(
            "shoot",
            format!("direction must be unit (|dir| = {n:.3e})"),
        ));
    }
    let h0 = tol::STEP_FRACTION * chart.scale();
    let h = max_len / (max_len / h0).ceil();
    let tr = trace_ray(chart, None, p, dir, max_len, h, false)?;
    if tr.nodes.len() < 2 {
        return Err(Error::numerical("shoot", "immediate domain exit"));
    }
    let exited = tr.stop == Stop::DomainExit;
    let ell = tr.len_at(tr.nodes.len() - 1);
    let (endp, endv) = shoot_to(chart, p, dir, h, ell)?;
    let mut points = tr.nodes;
    *points.last_mut().unwrap() = endp;
    Ok(GeodesicPath {
        points,
        length: ell,
        start_s: None,
        end_s: None,
        start_dir: dir,
        end_dir: endv,
        sigma: None,
        exited,
    })
}

// ---------------------------------------------------------------------------
// Newton polish of a fan candidate
// ---------------------------------------------------------------------------

struct PolishTarget {
    point: SurfacePoint,
    geo: Geometry,
}

/// Damped Newton on (theta, ell) for the endpoint equation
/// end(theta, ell) = target. The ell-column of the Jacobian is the exact
/// final velocity; the theta-column is a forward difference. Tikhonov
/// damping keeps the solve stable at near-conjugate (rank-deficient)
/// configurations.
#[allow(clippy::too_many_arguments)]
fn polish_candidate(
    chart: &SurfaceChart,
    start: SurfacePoint,
    e1: TangentVector,
    e2: TangentVector,
    target: &PolishTarget,
    h: f64,
    theta0: f64,
    ell0: f64,
    theta_range: (f64, f64),
    eps_end: f64,
    max_len: f64,
) -> Option<(f64, f64, TangentVector, f64)> {
    let dir_at = |theta: f64| -> TangentVector {
        let (s, c) = theta.sin_cos();
        TangentVector::new(
            c * e1.du + s * e2.du,
            c * e1.dv + s * e2.dv,
        )
    };
    let residual = |end: SurfacePoint| -> (f64, f64, f64) {
        let fu = chart.du_wrapped(target.point.u, end.u);
        let fv = end.v - target.point.v;
        let w = TangentVector::new(fu, fv);
        (fu, fv, target.geo.norm(w))
    };

    let mut theta = theta0;
    let mut ell = ell0.max(2.0 * h);
    let mut lambda = 0.0f64;
    let (mut end, mut vel) = shoot_to(chart, start, dir_at(theta), h, ell).ok()?;
    let (mut fu, mut fv, mut r) = residual(end);

    for _ in 0..12 {
        if r <= eps_end {
            let sigma_like = vel;
            return Some((theta, ell, sigma_like, r));
        }
        // Jacobian
        let dtheta = tol::FD_STEP.max(1e-9);
        let (end_t, _) = shoot_to(chart, start, dir_at(theta + dtheta), h, ell).ok()?;
        let jt = [
            chart.du_wrapped(end.u, end_t.u) / dtheta,
            (end_t.v - end.v) / dtheta,
        ];
        let jl = [vel.du, vel.dv];
        // normal equations with Tikhonov damping
        let a11 = jt[0] * jt[0] + jt[1] * jt[1];
        let a12 = jt[0] * jl[0] + jt[1] * jl[1];
        let a22 = jl[0] * jl[0] + jl[1] * jl[1];
        let b1 = -(jt[0] * fu + jt[1] * fv);
        let b2 = -(jl[0] * fu + jl[1] * fv);
        let scale = 0.5 * (a11 + a22);
        let lam = lambda.max(1e-12 * scale.max(1e-300));
        let d11 = a11 + lam;
        let d22 = a22 + lam;
        let det = d11 * d22 - a12 * a12;
        if det.abs() < 1e-300 {
            return None;
        }
        let mut dt = (b1 * d22 - b2 * a12) / det;
        let mut dl = (d11 * b2 - a12 * b1) / det;
        // step limits: a few fan gaps in angle, a fraction of length
        let max_dt = 0.03;
        let max_dl = 0.1 * max_len;
        if dt.abs() > max_dt {
            dt = dt.signum() * max_dt;
        }
        if dl.abs() > max_dl {
            dl = dl.signum() * max_dl;
        }

        let mut accepted = false;
        let mut frac = 1.0f64;
        for _ in 0..4 {
            let th_new = (theta + frac * dt).clamp(theta_range.0, theta_range.1);
            let ell_new = (ell + frac * dl).clamp(2.0 * h, max_len);
            if let Ok((e_new, v_new)) = shoot_to(chart, start, dir_at(th_new), h, ell_new) {
                let (fu2, fv2, r2) = residual(e_new);
                if r2 < r {
                    theta = th_new;
                    ell = ell_new;
                    end = e_new;
                    vel = v_new;
                    fu = fu2;
                    fv = fv2;
                    r = r2;
                    accepted = true;
                    lambda = lam * 0.25;
                    break;
                }
            }
            frac *= 0.5;
        }
        if !accepted {
            lambda = lam * 100.0;
            if lambda > 1e6 * scale {
                return None;
            }
        }
    }
    if r <= eps_end {
        Some((theta, ell, vel, r))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Fan solver for boundary pairs
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
struct Visit {
    best_d: f64,
    best_m: usize,
    last_m: usize,
}

/// Connects one boundary source point to many boundary targets with a
/// shooting fan over the inward half-disc of directions.
pub struct FanSolver<'c> {
    curve: &'c BoundaryCurve,
    h: f64,
    max_len: f64,
    fan: usize,
    eps_end: f64,
}

impl<'c> FanSolver<'c> {
    pub fn new(curve: &'c BoundaryCurve) -> Self {
        let chart = curve.chart();
        let h = tol::FAN_STEP_FRACTION * chart.scale();
        Self {
            curve,
            h,
            max_len: 0.55 * curve.length(),
            fan: tol::FAN_SIZE,
            eps_end: tol::ENDPOINT_TOL_REL * curve.length(),
        }
    }

    fn theta_k(&self, k: usize) -> f64 {
        PI * (k as f64 + 0.5) / self.fan as f64
    }

    /// Solve the two-point problem from the boundary point at arclength
    /// `s_p` to every target arclength in `targets`.
    pub fn solve(&self, s_p: f64, targets: &[f64]) -> Result<Vec<PairSet>> {
        let chart = self.curve.chart().clone();
        let frame_p = self.curve.frame_at(s_p)?;
        let e1 = frame_p.tangent;
        let e2 = frame_p.inward;

        // Phase A: shoot the fan (direction order is deterministic).
        let rays: Vec<Result<Trace>> = exec::par_map_indexed(self.fan, |k| {
            let th = self.theta_k(k);
            let (s, c) = th.sin_cos();
            let dir = TangentVector::new(
                c * e1.du + s * e2.du,
                c * e1.dv + s * e2.dv,
            );
            trace_ray(
                &chart,
                Some(self.curve),
                frame_p.point,
                dir,
                self.max_len,
                self.h,
                true,
            )
        });
        let mut traces = Vec::with_capacity(self.fan);
        for r in rays {
            traces.push(r?);
        }

        // Target data and the proximity grid.
        let mut tframes = Vec::with_capacity(targets.len());
        let mut tpoints = Vec::with_capacity(targets.len());
        for &s_q in targets {
            let f = self.curve.frame_at(s_q)?;
            let geo = chart.geometry_at(f.point)?;
            tpoints.push(f.point);
            tframes.push((s_q, f, geo));
        }
        let stretch = self.curve.stretch_floor();
        let floor_chart = 8.0 * self.h / (0.5 * stretch);
        let cell = (4.0 * self.curve.gap_chart()).max(2.0 * floor_chart);
        let tgrid = SpatialGrid::build(&chart, &tpoints, cell);

        // Phase B: pass detection. A candidate is a local closest approach
        // of a ray to a target within an adaptive radius (twice the actual
        // adjacent-ray gap at that arc length, plus a floor of a few steps).
        let dtheta = PI / self.fan as f64;
        let mut cands: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); targets.len()];
        for k in 0..self.fan {
            let nodes = &traces[k].nodes;
            let left = &traces[(k + self.fan - 1) % self.fan].nodes;
            let right = &traces[(k + 1) % self.fan].nodes;
            let mut visits: HashMap<usize, Visit> = HashMap::new();
            let mut m = 1usize;
            while m < nodes.len() {
                let node = nodes[m];
                let mut gap = (m as f64 * self.h) * dtheta * 4.0 / (0.5 * stretch);
                if m < left.len() {
                    gap = gap.max(2.0 * chart_dist(&chart, node, left[m]));
                }
                if m < right.len() {
                    gap = gap.max(2.0 * chart_dist(&chart, node, right[m]));
                }
                let radius = gap + floor_chart;
                tgrid.for_each_within(&chart, node, radius, |j, d| {
                    let e = visits.entry(j).or_insert(Visit {
                        best_d: f64::INFINITY,
                        best_m: m,
                        last_m: m,
                    });
                    if e.last_m + 4 < m {
                        // the previous visit ended; flush it
                        cands[j].push((k, e.best_m, e.best_d));
                        e.best_d = f64::INFINITY;
                        e.best_m = m;
                    }
                    if d < e.best_d {
                        e.best_d = d;
                        e.best_m = m;
                    }
                    e.last_m = m;
                });
                m += 2;
            }
            for (j, v) in visits {
                cands[j].push((k, v.best_m, v.best_d));
            }
        }

        // Phase C: polish and assemble per target.
        let mut out = Vec::with_capacity(targets.len());
        for (j, (s_q, frame_q, geo_q)) in tframes.iter().enumerate() {
            let mut list = cands[j].clone();
            list.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
            // Continuum families produce a candidate on almost every ray.
            let family_hint = list.len() > self.fan / 15;
            let raw_detected = list.len();
            // Adjacent rays tracking the same pass (k a step apart, arc
            // length drifting slowly) all polish onto one geodesic; group
            // them into runs and polish one representative per run — except
            // that a run covering a sizable slice of the fan is a continuum
            // family, which stays enumerable only if several members are
            // polished. The fan is a half-turn, not a cycle, so runs never
            // wrap in k.
            let mut reps: Vec<(usize, usize, f64)> = Vec::new();
            let mut i0 = 0usize;
            while i0 < list.len() {
                let mut best = list[i0];
                let mut prev = list[i0];
                let mut i1 = i0 + 1;
                while i1 < list.len() {
                    let (k1, m1, d1) = list[i1];
                    let (k0, m0, _) = prev;
                    let dm_tol = 16usize.max(m0.max(m1) / 8);
                    if k1 - k0 <= 2 && m1.abs_diff(m0) <= dm_tol {
                        if d1 < best.2 {
                            best = list[i1];
                        }
                        prev = list[i1];
                        i1 += 1;
                    } else {
                        break;
                    }
                }
                let run = &list[i0..i1];
                if run.len() >= 16 {
                    for t in 0..9 {
                        reps.push(run[t * (run.len() - 1) / 8]);
                    }
                } else {
                    reps.push(best);
                }
                i0 = i1;
            }
            if reps.len() > 48 {
                let n = reps.len();
                let mut kept = Vec::with_capacity(48);
                for i in 0..48 {
                    kept.push(reps[i * (n - 1) / 47]);
                }
                kept.dedup_by_key(|c| (c.0, c.1));
                reps = kept;
            }
            let list = reps;

            let target = PolishTarget {
                point: frame_q.point,
                geo: geo_q.clone(),
            };
            let mut interiors: Vec<Connector> = Vec::new();
            for &(k, m, _) in &list {
                let theta0 = self.theta_k(k);
                let ell0 = traces[k].len_at(m);
                if let Some((theta, ell, end_vel, res)) = polish_candidate(
                    &chart,
                    frame_p.point,
                    e1,
                    e2,
                    &target,
                    self.h,
                    theta0,
                    ell0,
                    (1e-7, PI - 1e-7),
                    self.eps_end,
                    self.max_len,
                ) {
                    let sigma_p = -theta.cos();
                    let sigma_q = geo_q.dot(end_vel, frame_q.tangent).clamp(-1.0, 1.0);
                    interiors.push(Connector {
                        s_p,
                        s_q: *s_q,
                        length: ell,
                        theta: Some(theta),
                        sigma_p,
                        sigma_q,
                        boundary_arc: false,
                        residual: res,
                    });
                }
            }
            let interiors = dedup_interiors(interiors, self.curve.length());
            let arcs = arc_connectors(self.curve, s_p, *s_q);
            let set = assemble_pair(
                self.curve,
                s_p,
                *s_q,
                interiors,
                arcs,
                family_hint,
                raw_detected,
            );
            out.push(set);
        }
        Ok(out)
    }

    /// Re-polish known connectors at a nearby pair (fan-free continuation,
    /// used by the critical-pair refinement descent).
    pub fn continue_pair(&self, s_p: f64, s_q: f64, seeds: &[Connector]) -> Result<PairSet> {
        let chart = self.curve.chart().clone();
        let frame_p = self.curve.frame_at(s_p)?;
        let frame_q = self.curve.frame_at(s_q)?;
        let geo_q = chart.geometry_at(frame_q.point)?;
        let target = PolishTarget {
            point: frame_q.point,
            geo: geo_q.clone(),
        };
        let mut interiors = Vec::new();
        let mut any_seed_failed = false;
        for seed in seeds.iter().filter(|s| !s.boundary_arc) {
            let theta0 = match seed.theta {
                Some(t) => t,
                None => continue,
            };
            match polish_candidate(
                &chart,
                frame_p.point,
                frame_p.tangent,
                frame_p.inward,
                &target,
                self.h,
                theta0,
                seed.length,
                (1e-7, PI - 1e-7),
                self.eps_end,
                self.max_len,
            ) {
                Some((theta, ell, end_vel, res)) => {
                    interiors.push(Connector {
                        s_p,
                        s_q,
                        length: ell,
                        theta: Some(theta),
                        sigma_p: -theta.cos(),
                        sigma_q: geo_q.dot(end_vel, frame_q.tangent).clamp(-1.0, 1.0),
                        boundary_arc: false,
                        residual: res,
                    });
                }
                None => any_seed_failed = true,
            }
        }
        if any_seed_failed || (interiors.is_empty() && seeds.iter().all(|s| !s.boundary_arc)) {
            // continuation lost a branch; redo the full fan for this target
            return Ok(self.solve(s_p, &[s_q])?.pop().unwrap());
        }
        let interiors = dedup_interiors(interiors, self.curve.length());
        let n_int = interiors.len();
        let arcs = arc_connectors(self.curve, s_p, s_q);
        Ok(assemble_pair(
            self.curve, s_p, s_q, interiors, arcs, false, n_int,
        ))
    }
}

/// Collapse polished duplicates: same departure angle and same length is
/// the same geodesic. Wrap-around branches share the angle but differ in
/// length, so both keys are needed; the cluster scan compares against all
/// kept entries because branches interleave in any single sort order.
fn dedup_interiors(mut interiors: Vec<Connector>, curve_len: f64) -> Vec<Connector> {
    interiors.sort_by(|a, b| {
        a.length
            .partial_cmp(&b.length)
            .unwrap()
            .then(a.theta.partial_cmp(&b.theta).unwrap())
            .then(a.residual.partial_cmp(&b.residual).unwrap())
    });
    let mut kept: Vec<Connector> = Vec::new();
    for c in interiors {
        let dup = kept.iter_mut().find(|k| {
            (k.theta.unwrap() - c.theta.unwrap()).abs() < tol::DEDUP_ANGLE
                && (k.length - c.length).abs() < 1e-3 * curve_len
        });
        match dup {
            Some(k) => {
                if c.residual < k.residual {
                    *k = c;
                }
            }
            None => kept.push(c),
        }
    }
    kept
}

/// Boundary arcs admitted as geodesic connectors (integrated |A| below the
/// arc-geodesic tolerance).
fn arc_connectors(curve: &BoundaryCurve, s_p: f64, s_q: f64) -> Vec<Connector> {
    let mut out = Vec::new();
    let fwd = curve.wrap_s(s_q - s_p);
    if fwd <= 0.0 || fwd >= curve.length() {
        return out;
    }
    if curve.arc_abs_kappa(s_p, s_q) <= tol::ARC_GEODESIC_TOL {
        out.push(Connector {
            s_p,
            s_q,
            length: fwd,
            theta: None,
            sigma_p: -1.0,
            sigma_q: 1.0,
            boundary_arc: true,
            residual: 0.0,
        });
    }
    if curve.arc_abs_kappa(s_q, s_p) <= tol::ARC_GEODESIC_TOL {
        out.push(Connector {
            s_p,
            s_q,
            length: curve.length() - fwd,
            theta: None,
            sigma_p: 1.0,
            sigma_q: -1.0,
            boundary_arc: true,
            residual: 0.0,
        });
    }
    out
}

/// Merge interior connectors with boundary arcs, drop interior duplicates
/// of admitted arcs, sort, flag families, and cap the stored set while
/// preserving the extreme signatures.
fn assemble_pair(
    curve: &BoundaryCurve,
    s_p: f64,
    s_q: f64,
    interiors: Vec<Connector>,
    arcs: Vec<Connector>,
    family_hint: bool,
    _raw_detected: usize,
) -> PairSet {
    let l = curve.length();
    let mut all: Vec<Connector> = Vec::new();
    for c in interiors {
        let dup_of_arc = arcs.iter().any(|a| {
            (c.length - a.length).abs() <= 1e-3 * l && (c.sigma_p - a.sigma_p).abs() <= 0.05
        });
        if !dup_of_arc {
            all.push(c);
        }
    }
    all.extend(arcs);
    all.sort_by(|a, b| {
        a.length
            .partial_cmp(&b.length)
            .unwrap()
            .then(a.sigma_p.partial_cmp(&b.sigma_p).unwrap())
    });
    if all.is_empty() {
        return PairSet {
            s_p,
            s_q,
            connectors: all,
            raw_minimizer_count: 0,
            family: false,
        };
    }
    let d = all[0].length;
    let window = d * (1.0 + tol::EPS_LEN);
    let n_min = all.iter().take_while(|c| c.length <= window).count();
    let spread = {
        let min_sp = all[..n_min]
            .iter()
            .map(|c| c.sigma_p)
            .fold(f64::INFINITY, f64::min);
        let max_sp = all[..n_min]
            .iter()
            .map(|c| c.sigma_p)
            .fold(f64::NEG_INFINITY, f64::max);
        max_sp - min_sp
    };
    let family = family_hint && n_min >= 16 && spread > 1.0;

    let mut kept: Vec<Connector>;
    if all.len() > tol::MAX_CONNECTORS_PER_PAIR {
        // keep every minimizer possible, subsampled evenly by sigma_p with
        // the extremes always present, then the shortest non-minimizers
        let mut mins: Vec<Connector> = all[..n_min].to_vec();
        mins.sort_by(|a, b| a.sigma_p.partial_cmp(&b.sigma_p).unwrap());
        let cap_min = tol::MAX_CONNECTORS_PER_PAIR.min(mins.len());
        let mut picked = Vec::with_capacity(cap_min);
        if cap_min == mins.len() {
            picked = mins;
        } else {
            for i in 0..cap_min {
                picked.push(mins[i * (mins.len() - 1) / (cap_min - 1)].clone());
            }
        }
        picked.sort_by(|a, b| a.length.partial_cmp(&b.length).unwrap());
        kept = picked;
        for c in all[n_min..].iter() {
            if kept.len() >= tol::MAX_CONNECTORS_PER_PAIR {
                break;
            }
            kept.push(c.clone());
        }
        kept.sort_by(|a, b| a.length.partial_cmp(&b.length).unwrap());
    } else {
        kept = all;
    }

    PairSet {
        s_p,
        s_q,
        connectors: kept,
        raw_minimizer_count: n_min,
        family,
    }
}

// ---------------------------------------------------------------------------
// Closed forms for the flat chart kinds
// ---------------------------------------------------------------------------

/// Straight-segment connector set for the euclidean plane (complete flat
/// surface: the segment is the unique geodesic, convex boundary or not).
fn segment_pair(curve: &BoundaryCurve, s_p: f64, s_q: f64) -> Result<PairSet> {
    let fp = curve.frame_at(s_p)?;
    let fq = curve.frame_at(s_q)?;
    let dx = fq.point.u - fp.point.u;
    let dy = fq.point.v - fp.point.v;
    let len = (dx * dx + dy * dy).sqrt();
    let mut interiors = Vec::new();
    if len > 0.0 {
        let dir = TangentVector::new(dx / len, dy / len);
        let sigma_p = -(dir.du * fp.tangent.du + dir.dv * fp.tangent.dv);
        let sigma_q = dir.du * fq.tangent.du + dir.dv * fq.tangent.dv;
        let theta = dir_angle(&fp, dir);
        interiors.push(Connector {
            s_p,
            s_q,
            length: len,
            theta: Some(theta),
            sigma_p: sigma_p.clamp(-1.0, 1.0),
            sigma_q: sigma_q.clamp(-1.0, 1.0),
            boundary_arc: false,
            residual: 0.0,
        });
    }
    let n_int = interiors.len();
    let arcs = arc_connectors(curve, s_p, s_q);
    Ok(assemble_pair(curve, s_p, s_q, interiors, arcs, false, n_int))
}

/// Universal-cover segments for the flat cylinder, one per winding offset.
fn cylinder_pair(curve: &BoundaryCurve, s_p: f64, s_q: f64) -> Result<PairSet> {
    let chart = curve.chart();
    let c = chart.period().expect("cylinder charts are periodic");
    let fp = curve.frame_at(s_p)?;
    let fq = curve.frame_at(s_q)?;
    let du0 = chart.du_wrapped(fp.point.u, fq.point.u);
    let dv = fq.point.v - fp.point.v;
    let mut interiors = Vec::new();
    for k in -2i32..=2 {
        let du = du0 + k as f64 * c;
        let len = (du * du + dv * dv).sqrt();
        if len <= 0.0 {
            continue;
        }
        let dir = TangentVector::new(du / len, dv / len);
        let sigma_p = -(dir.du * fp.tangent.du + dir.dv * fp.tangent.dv);
        let sigma_q = dir.du * fq.tangent.du + dir.dv * fq.tangent.dv;
        interiors.push(Connector {
            s_p,
            s_q,
            length: len,
            theta: Some(dir_angle(&fp, dir)),
            sigma_p: sigma_p.clamp(-1.0, 1.0),
            sigma_q: sigma_q.clamp(-1.0, 1.0),
            boundary_arc: false,
            residual: 0.0,
        });
    }
    interiors.sort_by(|a, b| a.length.partial_cmp(&b.length).unwrap());
    interiors.dedup_by(|b, a| {
        (a.length - b.length).abs() < 1e-12 && (a.sigma_p - b.sigma_p).abs() < 1e-12
    });
    let n_int = interiors.len();
    let arcs = arc_connectors(curve, s_p, s_q);
    Ok(assemble_pair(curve, s_p, s_q, interiors, arcs, false, n_int))
}

/// Angle of a unit chart direction relative to the frame (tangent, inward),
/// measured with the flat chart dot product (exact on flat kinds).
fn dir_angle(f: &crate::curve::Frame, dir: TangentVector) -> f64 {
    let c = dir.du * f.tangent.du + dir.dv * f.tangent.dv;
    let s = dir.du * f.inward.du + dir.dv * f.inward.dv;
    s.atan2(c)
}

// ---------------------------------------------------------------------------
// Boundary-pair dispatch
// ---------------------------------------------------------------------------

/// Route selector for boundary-pair connections. Flat kinds use closed
/// forms unconditionally; shooting kinds require the fixture to be declared
/// totally convex (the fan's completeness argument needs it).
pub fn boundary_pairs_from(curve: &BoundaryCurve, s_p: f64, targets: &[f64]) -> Result<Vec<PairSet>> {
    use crate::surface::ChartKind::*;
    match curve.chart().kind() {
        EuclideanPlane => targets
            .iter()
            .map(|&s_q| segment_pair(curve, s_p, s_q))
            .collect(),
        FlatCylinder { .. } => targets
            .iter()
            .map(|&s_q| cylinder_pair(curve, s_p, s_q))
            .collect(),
        _ => {
            if !curve.declared_convex() {
                return Err(Error::DeclarationRequired {
                    op: "distance".into(),
                    requirement: "a totally convex boundary declaration (curved charts)".into(),
                });
            }
            FanSolver::new(curve).solve(s_p, targets)
        }
    }
}

/// Single-pair convenience wrapper.
pub fn boundary_pair(curve: &BoundaryCurve, s_p: f64, s_q: f64) -> Result<PairSet> {
    Ok(boundary_pairs_from(curve, s_p, &[s_q])?.pop().unwrap())
}

/// Seeded re-solve of a single pair: on shooting charts the known connectors
/// are polished at the new pair instead of re-running the fan (falling back
/// to the fan when a branch is lost). Flat charts just use the closed form.
pub fn continue_boundary_pair(
    curve: &BoundaryCurve,
    s_p: f64,
    s_q: f64,
    seeds: &[Connector],
) -> Result<PairSet> {
    use crate::surface::ChartKind::*;
    match curve.chart().kind() {
        EuclideanPlane => segment_pair(curve, s_p, s_q),
        FlatCylinder { .. } => cylinder_pair(curve, s_p, s_q),
        _ => FanSolver::new(curve).continue_pair(s_p, s_q, seeds),
    }
}

/// Reconstruct the full polyline of a connector.
pub fn realize(curve: &BoundaryCurve, c: &Connector) -> Result<GeodesicPath> {
    let chart = curve.chart();
    if c.boundary_arc {
        let forward = c.sigma_p < 0.0;
        let n = 256;
        let mut points = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let s = if forward {
                c.s_p + t * c.length
            } else {
                c.s_p - t * c.length
            };
            points.push(curve.point_at(s));
        }
        let fp = curve.frame_at(c.s_p)?;
        let fq = curve.frame_at(c.s_q)?;
        let sgn = if forward { 1.0 } else { -1.0 };
        return Ok(GeodesicPath {
            points,
            length: c.length,
            start_s: Some(c.s_p),
            end_s: Some(c.s_q),
            start_dir: fp.tangent.scale(sgn),
            end_dir: fq.tangent.scale(sgn),
            sigma: Some((c.sigma_p, c.sigma_q)),
            exited: false,
        });
    }
    let fp = curve.frame_at(c.s_p)?;
    let theta = c
        .theta
        .ok_or_else(|| Error::numerical("realize", "interior connector without angle"))?;
    let (s, co) = theta.sin_cos();
    let dir = TangentVector::new(
        co * fp.tangent.du + s * fp.inward.du,
        co * fp.tangent.dv + s * fp.inward.dv,
    );
    let h = tol::STEP_FRACTION * chart.scale();
    let tr = trace_ray(chart, None, fp.point, dir, c.length, h, false)?;
    let (endp, endv) = shoot_to(chart, fp.point, dir, h, c.length)?;
    let mut points = tr.nodes;
    if points.len() >= 2 {
        *points.last_mut().unwrap() = endp;
    } else {
        points.push(endp);
    }
    Ok(GeodesicPath {
        points,
        length: c.length,
        start_s: Some(c.s_p),
        end_s: Some(c.s_q),
        start_dir: dir,
        end_dir: endv,
        sigma: Some((c.sigma_p, c.sigma_q)),
        exited: false,
    })
}

// ---------------------------------------------------------------------------
// Crate-internal helpers for the chord-shortening machinery
// ---------------------------------------------------------------------------

/// Direct two-point join for nearby points: (unit direction at `a`, length).
/// Seeded with the straight chart segment, so callers should keep the pair
/// well inside the injectivity radius (chord-shortening vertices are).
pub(crate) fn join_points(
    chart: &SurfaceChart,
    a: SurfacePoint,
    b: SurfacePoint,
) -> Result<(TangentVector, f64)> {
    use crate::surface::ChartKind::*;
    match chart.kind() {
        EuclideanPlane | FlatCylinder { .. } => {
            let du = chart.du_wrapped(a.u, b.u);
            let dv = b.v - a.v;
            let len = (du * du + dv * dv).sqrt();
            if len <= 0.0 {
                return Err(Error::numerical("join", "coincident points"));
            }
            Ok((TangentVector::new(du / len, dv / len), len))
        }
        _ => {
            let geo_a = chart.geometry_at(a)?;
            // metric length of the straight chart segment (16-point rule)
            let du = chart.du_wrapped(a.u, b.u);
            let dv = b.v - a.v;
            let mut ell0 = 0.0;
            let m = 16;
            for i in 0..m {
                let t = (i as f64 + 0.5) / m as f64;
                let p = SurfacePoint::new(chart.wrap_u(a.u + t * du), a.v + t * dv);
                let g = chart.geometry_at(p)?;
                ell0 += g.norm(TangentVector::new(du, dv)) / m as f64;
            }
            if ell0 <= 0.0 {
                return Err(Error::numerical("join", "coincident points"));
            }
            let e1 = {
                let raw = TangentVector::new(du, dv);
                let n = geo_a.norm(raw);
                raw.scale(1.0 / n)
            };
            let e2 = chart.rotate90(a, e1)?;
            let geo_b = chart.geometry_at(b)?;
            let target = PolishTarget { point: b, geo: geo_b };
            let h = tol::STEP_FRACTION * chart.scale();
            let (theta, ell, _, _) = polish_candidate(
                chart,
                a,
                e1,
                e2,
                &target,
                h,
                0.0,
                ell0,
                (-PI, PI),
                tol::ENDPOINT_TOL_REL * chart.scale(),
                4.0 * ell0 + 8.0 * h,
            )
            .ok_or_else(|| Error::numerical("join", "two-point solve did not converge"))?;
            let (s, c) = theta.sin_cos();
            Ok((
                TangentVector::new(c * e1.du + s * e2.du, c * e1.dv + s * e2.dv),
                ell,
            ))
        }
    }
}

/// Point at fraction `t` of the geodesic from `a` in direction `dir`.
pub(crate) fn point_along(
    chart: &SurfaceChart,
    a: SurfacePoint,
    dir: TangentVector,
    ell: f64,
) -> Result<SurfacePoint> {
    if ell <= 0.0 {
        return Ok(a);
    }
    let h = tol::STEP_FRACTION * chart.scale();
    let (p, _) = shoot_to(chart, a, dir, h.min(ell), ell)?;
    Ok(p)
}

/// A geodesic return to the boundary curve.
pub(crate) struct ReturnHit {
    pub ell: f64,
    pub s_q: f64,
    pub end_point: SurfacePoint,
    pub end_vel: TangentVector,
}

/// Shoot from the boundary point at `s_p` with unit direction `dir` and
/// find the first transversal return to the curve (start departure is
/// ignored via an arming offset). `None` when the ray never comes back
/// within `max_len`.
pub(crate) fn shoot_return(
    curve: &BoundaryCurve,
    s_p: f64,
    dir: TangentVector,
    max_len: f64,
) -> Result<Option<ReturnHit>> {
    let chart = curve.chart();
    let start = curve.frame_at(s_p)?.point;
    let h = tol::STEP_FRACTION * chart.scale();
    let stepper = Stepper::new(chart);
    let mut st = stepper.init(start, dir);
    let steps = (max_len / h).ceil() as usize;
    let chart_radius = (10.0 * h) / (0.5 * curve.stretch_floor()) + 2.0 * curve.gap_chart();
    let band = 12.0 * h;
    let mut armed = false;
    let mut prev_off: Option<f64> = None;
    let mut prev_pt = start;
    let mut hit: Option<usize> = None; // step whose segment brackets the crossing
    for m in 1..=steps {
        // A step that errors on an out-of-box RK4 stage is a domain exit
        // that the node-level check below never gets to see.
        let next = match stepper.step(&st, h) {
            Ok(n) => n,
            Err(Error::OutsideDomain { .. }) => {
                if armed && prev_off.is_some_and(|p| p > 0.0) {
                    hit = Some(m);
                }
                break;
            }
            Err(e) => return Err(e),
        };
        if !stepper.in_domain(&next) {
            // When the curve bounds the chart domain itself, the return
            // crossing shows up as a domain exit: the sign change is never
            // observed because the first outside node fails `in_domain`.
            if armed && prev_off.is_some_and(|p| p > 0.0) {
                hit = Some(m);
            }
            break;
        }
        st = next;
        let node = stepper.position(&st, prev_pt);
        match curve.quick_offset(node, chart_radius) {
            Some((_, off)) => {
                if !armed {
                    if off > 4.0 * h {
                        armed = true;
                    }
                } else if let Some(po) = prev_off {
                    if po > 0.0 && off <= 0.0 {
                        hit = Some(m);
                        break;
                    }
                }
                prev_off = Some(off);
            }
            None => {
                armed = true;
                prev_off = None;
            }
        }
        prev_pt = node;
    }
    let Some(m) = hit else {
        return Ok(None);
    };
    // refine the crossing length by bisection on the located offset; lengths
    // past the crossing may leave the domain, which counts as "outside"
    let mut lo = (m - 1) as f64 * h;
    let mut hi = m as f64 * h;
    let offset_at = |ell: f64| -> Option<f64> {
        let (p, _) = shoot_to(chart, start, dir, h, ell).ok()?;
        curve.locate_within(p, band).map(|(_, off)| off)
    };
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        match offset_at(mid) {
            Some(off) if off > 0.0 => lo = mid,
            Some(_) | None => hi = mid,
        }
        if hi - lo < 1e-12 * max_len.max(1.0) {
            break;
        }
    }
    let ell = lo;
    let (endp, endv) = shoot_to(chart, start, dir, h, ell)?;
    let Some((s_q, _)) = curve.locate_within(endp, band) else {
        return Ok(None);
    };
    Ok(Some(ReturnHit {
        ell,
        s_q,
        end_point: endp,
        end_vel: endv,
    }))
}

// ---------------------------------------------------------------------------
// Chart-level connect (no boundary curve)
// ---------------------------------------------------------------------------

/// All locally length-minimal geodesics between two chart points, sorted by
/// length and deduplicated by departure angle. Flat kinds use closed forms;
/// curved kinds shoot a full-circle fan.
pub fn connect(chart: &SurfaceChart, p: SurfacePoint, q: SurfacePoint) -> Result<Vec<GeodesicPath>> {
    if !chart.contains(p) {
        return Err(Error::OutsideDomain { u: p.u, v: p.v });
    }
    if !chart.contains(q) {
        return Err(Error::OutsideDomain { u: q.u, v: q.v });
    }
    if chart_dist(chart, p, q) < 1e-12 * chart.scale() {
        return Err(Error::numerical("connect", "p and q coincide"));
    }

    use crate::surface::ChartKind::*;
    match chart.kind() {
        EuclideanPlane => {
            let dx = q.u - p.u;
            let dy = q.v - p.v;
            let len = (dx * dx + dy * dy).sqrt();
            let dir = TangentVector::new(dx / len, dy / len);
            Ok(vec![segment_path(p, q, len, dir)])
        }
        FlatCylinder { .. } => {
            let c = chart.period().unwrap();
            let du0 = chart.du_wrapped(p.u, q.u);
            let dv = q.v - p.v;
            let mut out = Vec::new();
            for k in -2i32..=2 {
                let du = du0 + k as f64 * c;
                let len = (du * du + dv * dv).sqrt();
                if len <= 0.0 {
                    continue;
                }
                let dir = TangentVector::new(du / len, dv / len);
                out.push(segment_path(p, q, len, dir));
            }
            out.sort_by(|a, b| a.length.partial_cmp(&b.length).unwrap());
            Ok(out)
        }
        _ => connect_fan(chart, p, q),
    }
}

fn segment_path(p: SurfacePoint, q: SurfacePoint, len: f64, dir: TangentVector) -> GeodesicPath {
    let n = 64;
    let points = (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            SurfacePoint::new(p.u + t * len * dir.du, p.v + t * len * dir.dv)
        })
        .collect();
    let mut path = GeodesicPath {
        points,
        length: len,
        start_s: None,
        end_s: None,
        start_dir: dir,
        end_dir: dir,
        sigma: None,
        exited: false,
    };
    // the stored endpoint should be the exact target (wrap-safe)
    *path.points.last_mut().unwrap() = q;
    path
}

fn connect_fan(chart: &SurfaceChart, p: SurfacePoint, q: SurfacePoint) -> Result<Vec<GeodesicPath>> {
    let geo_p = chart.geometry_at(p)?;
    let e1_raw = TangentVector::new(1.0, 0.0);
    let n1 = geo_p.norm(e1_raw);
    let e1 = e1_raw.scale(1.0 / n1);
    let e2 = chart.rotate90(p, e1)?;
    let geo_q = chart.geometry_at(q)?;
    let target = PolishTarget {
        point: q,
        geo: geo_q.clone(),
    };

    let h = tol::STEP_FRACTION * chart.scale();
    let max_len = 4.0 * chart.scale();
    let fan = tol::FAN_SIZE;
    let eps_end = tol::ENDPOINT_TOL_REL * chart.scale();

    let dir_at = |theta: f64| -> TangentVector {
        let (s, c) = theta.sin_cos();
        TangentVector::new(c * e1.du + s * e2.du, c * e1.dv + s * e2.dv)
    };

    // shoot the full circle, record closest approaches to q
    let traces: Vec<Result<Trace>> = exec::par_map_indexed(fan, |k| {
        let theta = 2.0 * PI * (k as f64 + 0.5) / fan as f64;
        trace_ray(chart, None, p, dir_at(theta), max_len, h, false)
    });
    let mut cands: Vec<(f64, f64)> = Vec::new(); // (theta, ell seed)
    // passes happen near q: convert metric radii to chart units there
    let stretch_q = geo_q.min_stretch().max(1e-12);
    let floor_chart = 8.0 * h / (0.5 * stretch_q);
    for (k, tr) in traces.iter().enumerate() {
        let tr = tr.as_ref().map_err(|e| Error::numerical("connect", format!("{e}")))?;
        let theta = 2.0 * PI * (k as f64 + 0.5) / fan as f64;
        let dtheta = 2.0 * PI / fan as f64;
        // local minima of distance to q along the ray
        let mut best: Option<(usize, f64)> = None;
        let mut in_visit = false;
        for (m, node) in tr.nodes.iter().enumerate().skip(1) {
            let d = chart_dist(chart, *node, q);
            let radius = (m as f64 * h) * dtheta * 4.0 / (0.5 * stretch_q) + floor_chart;
            if d <= radius {
                in_visit = true;
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((m, d));
                }
            } else if in_visit {
                if let Some((bm, _)) = best.take() {
                    cands.push((theta, bm as f64 * h));
                }
                in_visit = false;
            }
        }
        if let Some((bm, _)) = best {
            cands.push((theta, bm as f64 * h));
        }
    }
    if cands.len() > 96 {
        let n = cands.len();
        let mut kept = Vec::with_capacity(96);
        for i in 0..96 {
            kept.push(cands[i * (n - 1) / 95]);
        }
        cands = kept;
    }

    let mut found: Vec<(f64, f64, TangentVector, f64)> = Vec::new();
    for &(theta0, ell0) in &cands {
        if let Some(hit) = polish_candidate(
            chart,
            p,
            e1,
            e2,
            &target,
            h,
            theta0,
            ell0,
            (f64::NEG_INFINITY, f64::INFINITY),
            eps_end,
            max_len,
        ) {
            found.push(hit);
        }
    }
    if found.is_empty() {
        return Err(Error::NoConnector { max_len });
    }
    // dedup by (angle mod 2pi, length); distinct wrap-around branches share
    // the departure angle but differ in length, so adjacency in angle alone
    // interleaves branches — compare against every kept entry instead
    found.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap()
            .then(a.0.partial_cmp(&b.0).unwrap())
    });
    let mut kept: Vec<(f64, f64, TangentVector, f64)> = Vec::new();
    for f in found {
        let dup = kept.iter().any(|k| {
            let mut dth = (k.0 - f.0).abs() % (2.0 * PI);
            if dth > PI {
                dth = 2.0 * PI - dth;
            }
            dth < tol::DEDUP_ANGLE && (k.1 - f.1).abs() < 1e-3 * chart.scale()
        });
        if !dup {
            kept.push(f);
        }
    }

    let mut out = Vec::with_capacity(kept.len());
    for (theta, ell, _, _) in kept {
        let dir = dir_at(theta);
        let tr = trace_ray(chart, None, p, dir, ell, h, false)?;
        let (endp, endv) = shoot_to(chart, p, dir, h, ell)?;
        let mut points = tr.nodes;
        if points.len() >= 2 {
            *points.last_mut().unwrap() = endp;
        } else {
            points.push(endp);
        }
        out.push(GeodesicPath {
            points,
            length: ell,
            start_s: None,
            end_s: None,
            start_dir: dir,
            end_dir: endv,
            sigma: None,
            exited: false,
        });
    }
    Ok(out)
}

/// Distance plus the full minimizer list at the chart level.
pub fn distance(
    chart: &SurfaceChart,
    p: SurfacePoint,
    q: SurfacePoint,
) -> Result<(f64, Vec<GeodesicPath>)> {
    let all = connect(chart, p, q)?;
    let d = all[0].length;
    let window = d * (1.0 + tol::EPS_LEN);
    let mins = all.into_iter().filter(|g| g.length <= window).collect();
    Ok((d, mins))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{BoundaryCurve, CurveSpec, InwardSide};
    use crate::surface::{ChartKind, TAU};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn plane() -> Arc<SurfaceChart> {
        Arc::new(
            SurfaceChart::new(ChartKind::EuclideanPlane, (-6.0, 6.0), (-6.0, 6.0)).unwrap(),
        )
    }

    fn sphere() -> Arc<SurfaceChart> {
        Arc::new(
            SurfaceChart::new(ChartKind::RoundSphere { radius: 1.0 }, (0.0, TAU), (0.0, PI))
                .unwrap(),
        )
    }

    #[test]
    fn shoot_plane_straight_line() {
        let chart = plane();
        let g = shoot(
            &chart,
            SurfacePoint::new(0.0, 0.0),
            TangentVector::new(1.0, 0.0),
            1.0,
        )
        .unwrap();
        let end = *g.points.last().unwrap();
        assert_relative_eq!(end.u, 1.0, epsilon = 1e-9);
        assert_relative_eq!(end.v, 0.0, epsilon = 1e-9);
        assert!(!g.exited);
    }

    #[test]
    fn shoot_sphere_meridian_over_pole() {
        let chart = sphere();
        // "due north" from an equator point: v decreasing
        let g = shoot(
            &chart,
            SurfacePoint::new(0.3, PI / 2.0),
            TangentVector::new(0.0, -1.0),
            PI,
        )
        .unwrap();
        let end = *g.points.last().unwrap();
        assert_relative_eq!(end.v, PI / 2.0, epsilon = 1e-6);
        let du = chart.du_wrapped(end.u, 0.3 + PI);
        assert!(du.abs() < 1e-6, "expected the opposite meridian, du = {du:.2e}");
    }

    #[test]
    fn shoot_conformal_trivial_factor_matches_plane() {
        let conf = Arc::new(
            SurfaceChart::new(
                ChartKind::ConformalPlane {
                    factor: crate::surface::LogFactor {
                        offset: 0.0,
                        bumps: vec![],
                    },
                },
                (-6.0, 6.0),
                (-6.0, 6.0),
            )
            .unwrap(),
        );
        let g = shoot(
            &conf,
            SurfacePoint::new(0.2, -0.4),
            TangentVector::new(0.6, 0.8),
            2.0,
        )
        .unwrap();
        let end = *g.points.last().unwrap();
        assert_relative_eq!(end.u, 0.2 + 1.2, epsilon = 1e-9);
        assert_relative_eq!(end.v, -0.4 + 1.6, epsilon = 1e-9);
    }

    #[test]
    fn shoot_checks_unit_direction() {
        let chart = plane();
        let err = shoot(
            &chart,
            SurfacePoint::new(0.0, 0.0),
            TangentVector::new(2.0, 0.0),
            1.0,
        );
        assert!(err.is_err());
    }

    #[test]
    fn shoot_path_is_unit_speed_geodesic() {
        let chart = sphere();
        let g = shoot(
            &chart,
            SurfacePoint::new(1.0, 1.1),
            TangentVector::new(1.0 / 1.1f64.sin(), 0.0),
            2.0,
        )
        .unwrap();
        // consecutive-segment speeds nearly equal (unit-speed invariant)
        let mut lens = Vec::new();
        for w in g.points.windows(2) {
            let mid = SurfacePoint::new(
                0.5 * (w[0].u + w[1].u),
                0.5 * (w[0].v + w[1].v),
            );
            let geo = chart.geometry_at(mid).unwrap();
            let dv = TangentVector::new(
                chart.du_wrapped(w[0].u, w[1].u),
                w[1].v - w[0].v,
            );
            lens.push(geo.norm(dv));
        }
        let h = lens[0];
        for &l in &lens {
            assert!((l - h).abs() <= 1e-6 * h, "speed wobble: {l} vs {h}");
        }
    }

    #[test]
    fn connect_plane_three_four_five() {
        let chart = plane();
        let paths = connect(
            &chart,
            SurfacePoint::new(0.0, 0.0),
            SurfacePoint::new(3.0, 4.0),
        )
        .unwrap();
        assert_eq!(paths.len(), 1);
        assert_relative_eq!(paths[0].length, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn connect_sphere_antipodal_multiplicity() {
        let chart = sphere();
        let p = SurfacePoint::new(0.0, PI / 2.0);
        let q = SurfacePoint::new(PI, PI / 2.0);
        let (d, mins) = distance(&chart, p, q).unwrap();
        assert_relative_eq!(d, PI, epsilon = 1e-6);
        assert!(
            mins.len() >= 2,
            "antipodal pair should keep >= 2 minimizers, got {}",
            mins.len()
        );
    }

    #[test]
    fn connect_sphere_quarter_equator() {
        let chart = sphere();
        let p = SurfacePoint::new(0.0, PI / 2.0);
        let q = SurfacePoint::new(PI / 2.0, PI / 2.0);
        let (d, mins) = distance(&chart, p, q).unwrap();
        assert_relative_eq!(d, PI / 2.0, epsilon = 1e-6);
        assert_eq!(mins.len(), 1);
    }

    #[test]
    fn fan_agrees_with_segments_on_a_plane_circle() {
        // dual-route check: force the shooting fan on a flat chart and
        // compare against the closed-form segment connectors
        let chart = plane();
        let curve = BoundaryCurve::build(
            chart,
            &CurveSpec::Circle {
                center: (0.0, 0.0),
                radius: 1.0,
            },
            64,
            true,
        )
        .unwrap();
        let solver = FanSolver::new(&curve);
        let quarter = curve.length() / 4.0;
        let fan_set = &solver.solve(0.0, &[quarter]).unwrap()[0];
        let seg_set = segment_pair(&curve, 0.0, quarter).unwrap();
        assert_relative_eq!(fan_set.distance(), seg_set.distance(), epsilon = 1e-7);
        assert_relative_eq!(
            fan_set.distance(),
            std::f64::consts::SQRT_2,
            epsilon = 1e-6
        );
        let f = &fan_set.connectors[0];
        let s = &seg_set.connectors[0];
        assert_relative_eq!(f.sigma_p, s.sigma_p, epsilon = 1e-6);
        assert_relative_eq!(f.sigma_q, s.sigma_q, epsilon = 1e-6);
    }

    #[test]
    fn hemisphere_boundary_pairs() {
        // southern hemisphere: chart domain is the surface, boundary = equator
        let chart = Arc::new(
            SurfaceChart::new(
                ChartKind::RoundSphere { radius: 1.0 },
                (0.0, TAU),
                (PI / 2.0, PI),
            )
            .unwrap(),
        );
        let curve = BoundaryCurve::build(
            chart,
            &CurveSpec::Latitude {
                v: PI / 2.0,
                inward: InwardSide::VPlus,
            },
            64,
            true,
        )
        .unwrap();
        let solver = FanSolver::new(&curve);
        let l = curve.length();
        // non-antipodal pair: the minimizer is the shorter equator arc
        let set = &solver.solve(0.0, &[l / 8.0]).unwrap()[0];
        assert_relative_eq!(set.distance(), l / 8.0, epsilon = 1e-6);
        // antipodal pair: meridian family + both arcs, all of length pi
        let set = &solver.solve(0.0, &[l / 2.0]).unwrap()[0];
        assert_relative_eq!(set.distance(), PI, epsilon = 1e-6);
        assert!(set.family, "antipodal minimizers should form a family");
        let mins = set.minimizers();
        assert!(mins.len() >= 8, "family too small: {}", mins.len());
        let has_arc_fwd = mins.iter().any(|c| c.boundary_arc && c.sigma_p < 0.0);
        let has_arc_bwd = mins.iter().any(|c| c.boundary_arc && c.sigma_p > 0.0);
        assert!(has_arc_fwd && has_arc_bwd, "equator arcs missing");
    }

    #[test]
    fn cylinder_waist_shortest_arc() {
        let chart = Arc::new(
            SurfaceChart::new(
                ChartKind::FlatCylinder {
                    circumference: TAU,
                },
                (0.0, TAU),
                (-3.0, 3.0),
            )
            .unwrap(),
        );
        let curve = BoundaryCurve::build(
            chart,
            &CurveSpec::Latitude {
                v: 0.0,
                inward: InwardSide::VPlus,
            },
            64,
            true,
        )
        .unwrap();
        let l = curve.length();
        for &frac in &[0.1, 0.3, 0.45] {
            let set = cylinder_pair(&curve, 0.0, frac * l).unwrap();
            let expect = (frac * l).min(l - frac * l);
            assert_relative_eq!(set.distance(), expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn step_halving_changes_little() {
        let chart = sphere();
        let p = SurfacePoint::new(0.2, 1.9);
        let dir = TangentVector::new(0.4 / 1.9f64.sin(), (1.0 - 0.16f64).sqrt());
        // normalise in the sphere metric: |dir|^2 = sin^2 v du^2 + dv^2
        let geo = chart.geometry_at(p).unwrap();
        let n = geo.norm(dir);
        let dir = dir.scale(1.0 / n);
        let g1 = shoot(&chart, p, dir, 1.5).unwrap();
        let e1 = *g1.points.last().unwrap();
        // halve the step by tracing manually
        let h = 0.5 * tol::STEP_FRACTION * chart.scale();
        let (e2, _) = shoot_to(&chart, p, dir, h, 1.5).unwrap();
        assert!(chart_dist(&chart, e1, e2) < 1e-7 * chart.scale());
    }
}
