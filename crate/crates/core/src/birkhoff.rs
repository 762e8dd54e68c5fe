//! Chord shortening and free-boundary geodesics.
//!
//! Three pieces live here. `birkhoff_shorten` runs the classical curve
//! shortening process on a polyline with endpoints sliding on the boundary:
//! odd vertices are replaced by geodesic midpoints of their neighbours, even
//! vertices are re-centred the same way, and the two endpoint vertices are
//! re-optimised along the boundary by 1D arclength minimisation of the
//! distance to their adjacent node. Every substep is accepted only when it
//! does not increase the measured total, so the recorded length trace is
//! non-increasing by construction; the process either collapses to a point
//! or stalls on a chord that meets the boundary orthogonally.
//!
//! `find_free_boundary_geodesics` scans inward-normal shots from the
//! boundary, Newton-polishes the start point until the returning velocity is
//! orthogonal to the curve, and merges rotationally symmetric hits into one
//! family representative.
//!
//! `free_boundary_index` discretises the second-variation eigenproblem
//!
//! ```text
//!   -u'' - K u = lambda u   on [0, a],
//!   -u'(0) = A_p u(0),   u'(a) = A_q u(a)
//! ```
//!
//! (K: Gauss curvature along the chord, A: boundary curvature at the feet)
//! with a mass-lumped linear-element scheme, solves the symmetric
//! tridiagonal eigenproblem by Sturm bisection at two resolutions, and
//! Richardson-extrapolates. The lumped scheme reproduces the flat-chord
//! Robin eigenfunction u = t - a/2 and the constant mode on a meridian
//! exactly, so the h^2 extrapolation leaves those eigenvalues at machine
//! precision.

use std::f64::consts::PI;

use serde::Serialize;

use crate::curve::BoundaryCurve;
use crate::error::Error;
use crate::exec;
use crate::geodesic::{self, GeodesicPath};
use crate::pairspace::PairPoint;
use crate::surface::{norm3, SurfaceChart, SurfacePoint, TangentVector};
use crate::tol;
use crate::Result;

/// Fewest inward-normal scan starts accepted by the free-boundary search.
const SCAN_MIN: usize = 64;
/// Normal shots are abandoned beyond this multiple of the boundary length
/// (long enough for pole-crossing chords on elongated caps, which exceed
/// half the boundary length).
const MAX_LEN_REL: f64 = 1.25;
/// Endpoint pairs closer than this (relative to L, quotient metric) are the
/// same chord.
const PAIR_DEDUP_REL: f64 = 1e-2;
/// A wrapped run of scan hits covering at least this fraction of the scan
/// collapses to one rotational-family representative.
const FAMILY_MIN_FRACTION: f64 = 0.25;
/// Newton target for the terminal conormal component (tighter than the
/// acceptance band so the kept chords sit well inside it).
const NEWTON_SIGMA_TOL: f64 = 1e-6;
/// Half-width (relative to L) of the sliding window used when re-optimising
/// an endpoint along the boundary. Keeps the update local, so degenerate
/// objectives (a chord through the centre of a disc) cannot teleport the
/// endpoint.
const ENDPOINT_WINDOW_REL: f64 = 0.02;

// ---------------------------------------------------------------------------
// Chord shortening
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ShortenOutcome {
    /// The polyline collapsed below the point threshold.
    Point { location: SurfacePoint },
    /// The process stalled on a chord: a discrete geodesic whose measured
    /// conormal signature is recorded on the path.
    FreeBoundaryGeodesic { path: GeodesicPath },
}

#[derive(Clone, Debug, Serialize)]
pub struct ShortenReport {
    pub outcome: ShortenOutcome,
    /// Total polyline length after every iteration; entry 0 is the input.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// The limit polyline crossed itself (flagged, not processed further).
    pub self_intersecting: bool,
}

impl ShortenReport {
    /// `iteration,length` rows, one per trace entry.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,length\n");
        for (i, v) in self.trace.iter().enumerate() {
            out.push_str(&format!("{i},{v:.12e}\n"));
        }
        out
    }
}

/// Metric length of the short geodesic joining `a` to `b` (0 when they
/// coincide to machine precision).
fn pair_len(chart: &SurfaceChart, a: SurfacePoint, b: SurfacePoint) -> Result<f64> {
    if chart_close(chart, a, b) {
        return Ok(0.0);
    }
    Ok(geodesic::join_points(chart, a, b)?.1)
}

fn chart_close(chart: &SurfaceChart, a: SurfacePoint, b: SurfacePoint) -> bool {
    let du = chart.du_wrapped(a.u, b.u);
    let dv = b.v - a.v;
    (du * du + dv * dv).sqrt() <= 1e-13 * chart.scale()
}

fn geodesic_midpoint(
    chart: &SurfaceChart,
    a: SurfacePoint,
    b: SurfacePoint,
) -> Result<SurfacePoint> {
    if chart_close(chart, a, b) {
        return Ok(a);
    }
    let (dir, len) = geodesic::join_points(chart, a, b)?;
    geodesic::point_along(chart, a, dir, 0.5 * len)
}

/// Golden-section argmin of `f` on `[lo, hi]`.
fn golden_min(mut lo: f64, mut hi: f64, iters: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..iters {
        if fa <= fb {
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

/// Strict proper-crossing test on the chart polyline (u unwrapped along the
/// vertex sequence on periodic charts). Advisory: shared endpoints and
/// tangential touches do not count.
fn polyline_self_intersects(chart: &SurfaceChart, vs: &[SurfacePoint]) -> bool {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(vs.len());
    let mut u = vs[0].u;
    pts.push((u, vs[0].v));
    for w in vs.windows(2) {
        u += chart.du_wrapped(w[0].u, w[1].u);
        pts.push((u, w[1].v));
    }
    let orient = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| -> f64 {
        (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
    };
    let n = pts.len() - 1;
    for i in 0..n {
        for j in i + 2..n {
            let (a, b) = (pts[i], pts[i + 1]);
            let (c, d) = (pts[j], pts[j + 1]);
            if orient(a, b, c) * orient(a, b, d) < 0.0 && orient(c, d, a) * orient(c, d, b) < 0.0 {
                return true;
            }
        }
    }
    false
}

/// Run the chord-shortening process on `path` (vertices in chart
/// coordinates, both endpoints on the boundary curve, at least two
/// segments). The trace of total lengths is non-increasing; the process
/// ends at a point (total below `1e-3 L`), at a free-boundary chord (length
/// decrease below `1e-10 L`), or errors out after `max_iters`.
pub fn birkhoff_shorten(
    curve: &BoundaryCurve,
    path: &[SurfacePoint],
    max_iters: usize,
) -> Result<ShortenReport> {
    let l = curve.length();
    let chart = curve.chart().clone();
    if path.len() < 3 {
        return Err(Error::Config(
            "chord shortening needs a polyline with at least two segments".into(),
        ));
    }
    let band = 1e-6 * l;
    let Some((sa, _)) = curve.locate_within(path[0], band) else {
        return Err(Error::Config(
            "polyline start does not lie on the boundary curve".into(),
        ));
    };
    let Some((sb, _)) = curve.locate_within(*path.last().unwrap(), band) else {
        return Err(Error::Config(
            "polyline end does not lie on the boundary curve".into(),
        ));
    };

    let mut vs = path.to_vec();
    let mut s_start = sa;
    let mut s_end = sb;
    vs[0] = curve.point_at(s_start);
    *vs.last_mut().unwrap() = curve.point_at(s_end);
    let m = vs.len() - 1; // segment count

    let total_of = |vs: &[SurfacePoint]| -> Result<f64> {
        let mut t = 0.0;
        for w in vs.windows(2) {
            t += pair_len(&chart, w[0], w[1])?;
        }
        Ok(t)
    };

    let mut total = total_of(&vs)?;
    let mut trace = vec![total];
    let window = (ENDPOINT_WINDOW_REL * l).max(3.0 * l / curve.sample_count() as f64);

    for it in 1..=max_iters {
        let prev = total;

        // midpoint replacement on odd vertices
        let mut cand = vs.clone();
        for i in (1..m).step_by(2) {
            cand[i] = geodesic_midpoint(&chart, vs[i - 1], vs[i + 1])?;
        }
        let t2 = total_of(&cand)?;
        if t2 <= total {
            vs = cand;
            total = t2;
        }

        // re-centre the even interior vertices
        let mut cand = vs.clone();
        for i in (2..m).step_by(2) {
            cand[i] = geodesic_midpoint(&chart, vs[i - 1], vs[i + 1])?;
        }
        let t2 = total_of(&cand)?;
        if t2 <= total {
            vs = cand;
            total = t2;
        }

        // Slide each endpoint to the local foot of its adjacent node. The
        // move must beat the current position by half the stall threshold:
        // degenerate objectives (a node equidistant from a whole arc, e.g.
        // the centre of a disc) otherwise let the endpoints wander the
        // window every iteration on interpolation noise.
        let margin = 0.5 * tol::BIRKHOFF_STALL_REL * l;
        let foot = |s_c: f64, target: SurfacePoint| -> f64 {
            let f = |s: f64| pair_len(&chart, curve.point_at(s), target).unwrap_or(f64::INFINITY);
            let s_new = golden_min(s_c - window, s_c + window, 40, f);
            if f(s_new) + margin < f(s_c) {
                s_new
            } else {
                s_c
            }
        };
        let ns = foot(s_start, vs[1]);
        let ne = foot(s_end, vs[m - 1]);
        let mut cand = vs.clone();
        cand[0] = curve.point_at(ns);
        cand[m] = curve.point_at(ne);
        let t2 = total_of(&cand)?;
        if t2 <= total {
            vs = cand;
            total = t2;
            s_start = curve.wrap_s(ns);
            s_end = curve.wrap_s(ne);
        }

        debug_assert!(total <= prev);
        trace.push(total);

        if total < tol::BIRKHOFF_POINT_REL * l {
            return Ok(ShortenReport {
                outcome: ShortenOutcome::Point {
                    location: curve.point_at(s_start),
                },
                trace,
                iterations: it,
                self_intersecting: false,
            });
        }
        if prev - total < tol::BIRKHOFF_STALL_REL * l {
            let path = realize_limit(curve, &chart, &vs, s_start, s_end, total)?;
            let selfx = polyline_self_intersects(&chart, &vs);
            return Ok(ShortenReport {
                outcome: ShortenOutcome::FreeBoundaryGeodesic { path },
                trace,
                iterations: it,
                self_intersecting: selfx,
            });
        }
    }
    Err(Error::numerical(
        "birkhoff_shorten",
        format!("no termination within {max_iters} iterations"),
    ))
}

/// Re-shoot the stalled polyline as one geodesic and record its boundary
/// data.
fn realize_limit(
    curve: &BoundaryCurve,
    chart: &SurfaceChart,
    vs: &[SurfacePoint],
    s_start: f64,
    s_end: f64,
    total: f64,
) -> Result<GeodesicPath> {
    let (dir0, _) = geodesic::join_points(chart, vs[0], vs[1])?;
    let mut p = geodesic::shoot(chart, vs[0], dir0, total)?;
    let fr_p = curve.frame_at(s_start)?;
    let fr_q = curve.frame_at(s_end)?;
    let geo_p = chart.geometry_at(fr_p.point)?;
    let geo_q = chart.geometry_at(*p.points.last().unwrap())?;
    let sp = geo_p.dot(p.start_dir, fr_p.tangent).clamp(-1.0, 1.0);
    let sq = geo_q.dot(p.end_dir, fr_q.tangent).clamp(-1.0, 1.0);
    p.start_s = Some(s_start);
    p.end_s = Some(s_end);
    p.sigma = Some((sp, sq));
    Ok(p)
}

// ---------------------------------------------------------------------------
// Free-boundary geodesic scan
// ---------------------------------------------------------------------------

/// A chord meeting the boundary orthogonally at both feet.
#[derive(Clone, Debug, Serialize)]
pub struct FreeBoundaryGeodesic {
    pub path: GeodesicPath,
    pub pair: PairPoint,
    /// True when a rotational family of scan hits collapsed to this entry.
    pub family: bool,
    /// Deduplicated scan hits merged into this entry.
    pub members: usize,
}

#[derive(Clone, Copy)]
struct NormalHit {
    s_p: f64,
    s_q: f64,
    ell: f64,
    sigma_q: f64,
}

/// Terminal conormal component of the inward-normal shot from `s`.
fn eval_normal(
    curve: &BoundaryCurve,
    s: f64,
    max_len: f64,
) -> Option<(f64, geodesic::ReturnHit)> {
    let fr = curve.frame_at(s).ok()?;
    let hit = geodesic::shoot_return(curve, s, fr.inward, max_len).ok()??;
    let frq = curve.frame_at(hit.s_q).ok()?;
    let geo = curve.chart().geometry_at(hit.end_point).ok()?;
    let sq = geo.dot(hit.end_vel, frq.tangent).clamp(-1.0, 1.0);
    Some((sq, hit))
}

/// Newton on the start arclength, driving the terminal conormal component
/// to zero. Steps are clamped to one scan cell so the iteration stays on
/// the branch it started on.
fn polish_normal_start(
    curve: &BoundaryCurve,
    s0: f64,
    max_len: f64,
    cell: f64,
) -> Option<NormalHit> {
    let l = curve.length();
    let mut s = s0;
    let (mut sig, mut hit) = eval_normal(curve, s, max_len)?;
    for _ in 0..12 {
        if sig.abs() <= NEWTON_SIGMA_TOL {
            break;
        }
        let delta = 1e-4 * l;
        let (sig_d, _) = eval_normal(curve, s + delta, max_len)?;
        let slope = (sig_d - sig) / delta;
        if !slope.is_finite() || slope.abs() < 1e-12 {
            return None;
        }
        let mut step = (-sig / slope).clamp(-cell, cell);
        // backtrack when the full step does not reduce |sigma|
        let mut accepted = false;
        for _ in 0..4 {
            let s_new = (s + step).rem_euclid(l);
            if let Some((sig_new, hit_new)) = eval_normal(curve, s_new, max_len) {
                if sig_new.abs() < sig.abs() {
                    s = s_new;
                    sig = sig_new;
                    hit = hit_new;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    (sig.abs() <= tol::TAG_TOL).then_some(NormalHit {
        s_p: s.rem_euclid(l),
        s_q: hit.s_q,
        ell: hit.ell,
        sigma_q: sig,
    })
}

/// Quotient-space distance between unordered boundary pairs.
fn pair_dist(a: &PairPoint, b: &PairPoint, l: f64) -> f64 {
    let ring = |x: f64, y: f64| {
        let d = (x - y).rem_euclid(l);
        d.min(l - d)
    };
    let direct = ring(a.s1, b.s1).max(ring(a.s2, b.s2));
    let swapped = ring(a.s1, b.s2).max(ring(a.s2, b.s1));
    direct.min(swapped)
}

/// Scan `scan >= 64` inward-normal shots, keep the chords whose polished
/// terminal conormal component is within `1e-4`, dedup by endpoint pair,
/// and collapse rotational families to one representative each. An empty
/// result is valid (nothing returned to the boundary orthogonally).
pub fn find_free_boundary_geodesics(
    curve: &BoundaryCurve,
    scan: usize,
) -> Result<Vec<FreeBoundaryGeodesic>> {
    if scan < SCAN_MIN {
        return Err(Error::Config(format!(
            "free-boundary scan needs at least {SCAN_MIN} starts, got {scan}"
        )));
    }
    let l = curve.length();
    let max_len = MAX_LEN_REL * l;
    let cell = l / scan as f64;
    let raw: Vec<Option<NormalHit>> = exec::par_map_indexed(scan, |k| {
        polish_normal_start(curve, k as f64 * cell, max_len, cell)
    });

    // endpoint-pair dedup, keeping the hit with the cleanest signature
    let mut kept: Vec<NormalHit> = Vec::new();
    for h in raw.into_iter().flatten() {
        let hp = PairPoint::new(h.s_p, h.s_q, l);
        match kept
            .iter_mut()
            .find(|k| pair_dist(&PairPoint::new(k.s_p, k.s_q, l), &hp, l) <= PAIR_DEDUP_REL * l)
        {
            Some(k) => {
                if h.sigma_q.abs() < k.sigma_q.abs() {
                    *k = h;
                }
            }
            None => kept.push(h),
        }
    }
    kept.sort_by(|a, b| {
        let pa = PairPoint::new(a.s_p, a.s_q, l);
        let pb = PairPoint::new(b.s_p, b.s_q, l);
        (pa.s1, pa.s2).partial_cmp(&(pb.s1, pb.s2)).unwrap()
    });

    // group survivors into runs of near-uniform neighbours (rotational
    // families cover the boundary densely; isolated chords do not)
    let run_gap = 2.5 * cell;
    let family_min = ((scan as f64 * FAMILY_MIN_FRACTION) as usize).max(2);
    let mut runs: Vec<Vec<NormalHit>> = Vec::new();
    for h in kept {
        let s1 = PairPoint::new(h.s_p, h.s_q, l).s1;
        match runs.last_mut() {
            Some(run)
                if s1 - PairPoint::new(run.last().unwrap().s_p, run.last().unwrap().s_q, l).s1
                    <= run_gap =>
            {
                run.push(h)
            }
            _ => runs.push(vec![h]),
        }
    }
    // wrap join: a run ending at the top of [0, L) continues one starting at 0
    if runs.len() > 1 {
        let first_s1 = PairPoint::new(runs[0][0].s_p, runs[0][0].s_q, l).s1;
        let last = runs.last().unwrap().last().unwrap();
        let last_s1 = PairPoint::new(last.s_p, last.s_q, l).s1;
        if first_s1 + l - last_s1 <= run_gap {
            let tail = runs.pop().unwrap();
            for h in tail {
                runs[0].push(h);
            }
        }
    }

    let mut out = Vec::new();
    for run in runs {
        let family = run.len() >= family_min;
        let members = run.len();
        let reps: Vec<NormalHit> = if family { vec![run[0]] } else { run };
        for rep in reps {
            let fr = curve.frame_at(rep.s_p)?;
            let chart = curve.chart();
            let mut path = geodesic::shoot(chart, fr.point, fr.inward, rep.ell)?;
            let geo_p = chart.geometry_at(fr.point)?;
            let sp = geo_p.dot(fr.inward, fr.tangent).clamp(-1.0, 1.0);
            path.start_s = Some(rep.s_p);
            path.end_s = Some(rep.s_q);
            path.sigma = Some((sp, rep.sigma_q));
            out.push(FreeBoundaryGeodesic {
                path,
                pair: PairPoint::new(rep.s_p, rep.s_q, l),
                family,
                members: if family { members } else { 1 },
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Second-variation index
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct IndexResult {
    /// Lowest six eigenvalues of the free-boundary second variation,
    /// ascending.
    pub eigenvalues: Vec<f64>,
    /// Count of eigenvalues below `-eps_eig`.
    pub index: usize,
    /// Count of eigenvalues within `eps_eig` of zero.
    pub nullity: usize,
    pub eps_eig: f64,
    /// Rayleigh quotient of the constant test function u = 1; when this is
    /// negative the chord is certainly unstable.
    pub rayleigh_constant: f64,
}

impl IndexResult {
    /// `k,lambda` rows for the reported eigenvalues.
    pub fn eigenvalues_csv(&self) -> String {
        let mut out = String::from("k,lambda\n");
        for (k, v) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!("{},{:.12e}\n", k + 1, v));
        }
        out
    }
}

fn not_free_boundary(detail: &str) -> Error {
    Error::numerical("free_boundary_index", detail.to_string())
}

/// Gauss curvature at arclength `t` along the chord, interpolated from a
/// table of samples uniform in arclength.
fn sample_curvature(kpath: &[f64], a: f64, t: f64) -> f64 {
    let x = (t / a).clamp(0.0, 1.0) * (kpath.len() - 1) as f64;
    let i = (x.floor() as usize).min(kpath.len() - 2);
    let frac = x - i as f64;
    kpath[i] * (1.0 - frac) + kpath[i + 1] * frac
}

/// Chord from `b` to `c` corrected to the arc of the circle through `a`,
/// `b`, `c`; collinear (or degenerate) triples fall back to the chord.
fn arc_between(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let bc = [c[0] - b[0], c[1] - b[1], c[2] - b[2]];
    let ac = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let chord = norm3(bc);
    let cr = [
        ab[1] * ac[2] - ab[2] * ac[1],
        ab[2] * ac[0] - ab[0] * ac[2],
        ab[0] * ac[1] - ab[1] * ac[0],
    ];
    let area2 = norm3(cr);
    if area2 <= 1e-12 * norm3(ab) * norm3(ac) {
        return chord;
    }
    let r = norm3(ab) * chord * norm3(ac) / (2.0 * area2);
    let half = (chord / (2.0 * r)).min(1.0);
    2.0 * r * half.asin()
}

/// Arclength of each path node along the chord. Traced spacing is close to
/// uniform but not exact (the final step is a remainder, and reassembled
/// paths splice legs), and the eigensolver is sensitive to the alignment
/// between the curvature profile and the Robin feet, so the spacing is
/// measured from the node geometry instead of assumed: embedded charts fit
/// a circle through consecutive node triples, flat and conformal charts
/// integrate the metric along the straight chart segment. The result is
/// rescaled so the total matches the path's analytic length — an overall
/// stretch shifts a near-zero eigenvalue linearly, while the remaining
/// local noise only enters at second order.
fn node_arclengths(chart: &SurfaceChart, pts: &[SurfacePoint], total: f64) -> Result<Vec<f64>> {
    let nseg = pts.len() - 1;
    let mut cum = vec![0.0; pts.len()];
    if chart.embeds() {
        let xs: Vec<[f64; 3]> = pts.iter().map(|&p| chart.embed(p)).collect();
        for i in 0..nseg {
            let third = if i == 0 { 2.min(nseg) } else { i - 1 };
            cum[i + 1] = cum[i] + arc_between(xs[third], xs[i], xs[i + 1]);
        }
    } else {
        const GL3: [(f64, f64); 3] = [
            (0.112_701_665_379_258_3, 5.0 / 18.0),
            (0.5, 8.0 / 18.0),
            (0.887_298_334_620_741_7, 5.0 / 18.0),
        ];
        for i in 0..nseg {
            let du = chart.du_wrapped(pts[i].u, pts[i + 1].u);
            let dv = pts[i + 1].v - pts[i].v;
            let vel = TangentVector::new(du, dv);
            let mut len = 0.0;
            for &(x, w) in &GL3 {
                let p = SurfacePoint::new(pts[i].u + x * du, pts[i].v + x * dv);
                len += w * chart.norm(p, vel)?;
            }
            cum[i + 1] = cum[i] + len;
        }
    }
    let sum = cum[nseg];
    if !(sum > 0.0) {
        return Err(not_free_boundary("degenerate node spacing"));
    }
    for c in &mut cum {
        *c *= total / sum;
    }
    Ok(cum)
}

/// Surface point at fraction `frac` between consecutive path nodes: the
/// ambient chord projected back to the surface when the chart embeds
/// (chart coordinates are discontinuous across rotation poles), the
/// straight chart segment otherwise.
fn between_nodes(
    chart: &SurfaceChart,
    p: SurfacePoint,
    q: SurfacePoint,
    frac: f64,
) -> SurfacePoint {
    if chart.embeds() {
        let xp = chart.embed(p);
        let xq = chart.embed(q);
        let x = [
            xp[0] + frac * (xq[0] - xp[0]),
            xp[1] + frac * (xq[1] - xp[1]),
            xp[2] + frac * (xq[2] - xp[2]),
        ];
        chart.chart_point(chart.project3(x))
    } else {
        let du = chart.du_wrapped(p.u, q.u);
        SurfacePoint::new(p.u + frac * du, p.v + frac * (q.v - p.v))
    }
}

/// Gauss curvature at `n` arclength-uniform stations along the path.
/// Stations on metric-singular points (rotation poles) borrow the nearest
/// valid neighbour, as the curvature itself is smooth there.
fn curvature_table(
    chart: &SurfaceChart,
    pts: &[SurfacePoint],
    cum: &[f64],
    n: usize,
) -> Result<Vec<f64>> {
    let a = cum[cum.len() - 1];
    let nseg = pts.len() - 1;
    let mut table: Vec<Option<f64>> = (0..n)
        .map(|j| {
            let t = a * j as f64 / (n - 1) as f64;
            let i = cum.partition_point(|&c| c <= t).clamp(1, nseg) - 1;
            let seg = (cum[i + 1] - cum[i]).max(1e-300);
            let frac = ((t - cum[i]) / seg).clamp(0.0, 1.0);
            let p = between_nodes(chart, pts[i], pts[i + 1], frac);
            chart.geometry_at(p).ok().map(|geo| geo.gauss)
        })
        .collect();
    if table.iter().all(|k| k.is_none()) {
        return Err(not_free_boundary("no valid curvature samples on the path"));
    }
    for i in 0..table.len() {
        if table[i].is_none() {
            let filled = (1..table.len())
                .find_map(|r| {
                    i.checked_sub(r)
                        .and_then(|j| table[j])
                        .or_else(|| table.get(i + r).copied().flatten())
                })
                .unwrap();
            table[i] = Some(filled);
        }
    }
    Ok(table.into_iter().map(Option::unwrap).collect())
}

/// Count of eigenvalues of the symmetric tridiagonal matrix below `x`
/// (Sturm sequence via the LDL^T pivots).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0f64;
    for i in 0..diag.len() {
        let sub = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] / d };
        d = diag[i] - x - sub;
        if d.abs() < 1e-300 {
            d = -1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
fn kth_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..diag.len() {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 }
            + if i < off.len() { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if sturm_count(diag, off, mid) >= k + 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Lowest `want` eigenvalues of the lumped linear-element discretisation on
/// `m` intervals.
fn lowest_eigs(kpath: &[f64], a: f64, a_p: f64, a_q: f64, m: usize, want: usize) -> Vec<f64> {
    let h = a / m as f64;
    let n = m + 1;
    let weight = |i: usize| if i == 0 || i == m { 0.5 * h } else { h };
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    for (i, d) in diag.iter_mut().enumerate() {
        let k = sample_curvature(kpath, a, i as f64 * h);
        let stiff = if i == 0 || i == m { 1.0 / h } else { 2.0 / h };
        let mut aii = stiff - weight(i) * k;
        if i == 0 {
            aii -= a_p;
        }
        if i == m {
            aii -= a_q;
        }
        *d = aii / weight(i);
    }
    for (i, o) in off.iter_mut().enumerate() {
        *o = (-1.0 / h) / (weight(i) * weight(i + 1)).sqrt();
    }
    (0..want).map(|k| kth_eigenvalue(&diag, &off, k)).collect()
}

/// Stability index of a free-boundary chord: eigenvalues of the
/// second-variation problem with Robin conditions from the boundary
/// curvature at the feet. Requires `|sigma| <= 1e-4` at both ends.
pub fn free_boundary_index(curve: &BoundaryCurve, g: &GeodesicPath) -> Result<IndexResult> {
    free_boundary_index_with_nodes(curve, g, tol::EIG_MIN_NODES)
}

/// Same as [`free_boundary_index`] with an explicit interval count
/// (validated to at least the default). The reported eigenvalues combine
/// solves at `m` and `2m` intervals by Richardson extrapolation.
pub fn free_boundary_index_with_nodes(
    curve: &BoundaryCurve,
    g: &GeodesicPath,
    intervals: usize,
) -> Result<IndexResult> {
    let Some((sp, sq)) = g.sigma else {
        return Err(not_free_boundary("the path has no conormal signature"));
    };
    if sp.abs() > tol::TAG_TOL || sq.abs() > tol::TAG_TOL {
        return Err(not_free_boundary(
            "the path does not meet the boundary orthogonally",
        ));
    }
    let (Some(ss), Some(se)) = (g.start_s, g.end_s) else {
        return Err(not_free_boundary(
            "the path endpoints carry no boundary parameters",
        ));
    };
    if g.points.len() < 2 || !(g.length > 0.0) {
        return Err(not_free_boundary("degenerate path"));
    }
    let a = g.length;
    let chart = curve.chart();
    let a_p = curve.frame_at(ss)?.kappa;
    let a_q = curve.frame_at(se)?.kappa;

    // The band separating "zero" from "negative" eigenvalues is tight, so
    // the curvature profile is sampled at the solver's own stations with
    // true arclength alignment; node-indexed sampling would smear the
    // profile by the spacing defect of the final traced step.
    let m = intervals.max(tol::EIG_MIN_NODES);
    let cum = node_arclengths(chart, &g.points, a)?;
    let k_fine = curvature_table(chart, &g.points, &cum, 2 * m + 1)?;
    let k_coarse: Vec<f64> = k_fine.iter().copied().step_by(2).collect();

    let coarse = lowest_eigs(&k_coarse, a, a_p, a_q, m, 6);
    let fine = lowest_eigs(&k_fine, a, a_p, a_q, 2 * m, 6);
    let eigenvalues: Vec<f64> = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();

    let eps_eig = tol::EIG_BAND_SCALE * (PI / a) * (PI / a);
    let index = eigenvalues.iter().filter(|&&x| x < -eps_eig).count();
    let nullity = eigenvalues.iter().filter(|&&x| x.abs() <= eps_eig).count();

    // trapezoid rule over the fine curvature stations
    let hk = a / (k_fine.len() - 1) as f64;
    let mut int_k = 0.0;
    for (i, k) in k_fine.iter().enumerate() {
        let w = if i == 0 || i == k_fine.len() - 1 { 0.5 } else { 1.0 };
        int_k += w * k * hk;
    }
    let rayleigh_constant = (-int_k - a_p - a_q) / a;

    Ok(IndexResult {
        eigenvalues,
        index,
        nullity,
        eps_eig,
        rayleigh_constant,
    })
}

// ---------------------------------------------------------------------------
// Stability survey
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct StarWitness {
    pub geodesic: FreeBoundaryGeodesic,
    pub index: IndexResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct StarReport {
    /// True when every free-boundary chord found is unstable (index >= 1).
    pub holds: bool,
    /// Number of chords examined (family representatives included).
    pub examined: usize,
    /// The stable chords, when any exist.
    pub witnesses: Vec<StarWitness>,
}

/// Check that no stable free-boundary chord exists: scan for free-boundary
/// geodesics and index each one. Requires the fixture to be declared
/// totally convex (the survey is meaningless otherwise).
pub fn property_star_check(curve: &BoundaryCurve, scan: usize) -> Result<StarReport> {
    if !curve.declared_convex() {
        return Err(Error::DeclarationRequired {
            op: "property_star_check",
            requirement: "totally convex",
        });
    }
    let chords = find_free_boundary_geodesics(curve, scan)?;
    let mut witnesses = Vec::new();
    for chord in &chords {
        let index = free_boundary_index(curve, &chord.path)?;
        if index.index == 0 {
            witnesses.push(StarWitness {
                geodesic: chord.clone(),
                index,
            });
        }
    }
    Ok(StarReport {
        holds: witnesses.is_empty(),
        examined: chords.len(),
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{BoundaryCurve, CurveSpec, InwardSide};
    use crate::surface::{ChartKind, Profile, TAU};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    // A diameter is an index-1 saddle of the shortening flow, so the
    // spline interpolation wiggle must stay below the stall threshold
    // (1e-10 L) or the process noise-chases its way off the saddle; the
    // quartic interpolation error makes 1024 samples comfortably enough.
    fn disc() -> BoundaryCurve {
        let chart = Arc::new(
            SurfaceChart::new(ChartKind::EuclideanPlane, (-2.0, 2.0), (-2.0, 2.0)).unwrap(),
        );
        BoundaryCurve::build(
            chart,
            &CurveSpec::Circle {
                center: (0.0, 0.0),
                radius: 1.0,
            },
            1024,
            true,
        )
        .unwrap()
    }

    fn ellipse() -> BoundaryCurve {
        let chart = Arc::new(
            SurfaceChart::new(ChartKind::EuclideanPlane, (-3.0, 3.0), (-3.0, 3.0)).unwrap(),
        );
        BoundaryCurve::build(
            chart,
            &CurveSpec::Ellipse {
                center: (0.0, 0.0),
                a: 2.0,
                b: 1.0,
            },
            256,
            true,
        )
        .unwrap()
    }

    fn hemisphere() -> BoundaryCurve {
        let chart = Arc::new(
            SurfaceChart::new(
                ChartKind::RoundSphere { radius: 1.0 },
                (0.0, TAU),
                (PI / 2.0, PI),
            )
            .unwrap(),
        );
        BoundaryCurve::build(
            chart,
            &CurveSpec::Latitude {
                v: PI / 2.0,
                inward: InwardSide::VPlus,
            },
            256,
            true,
        )
        .unwrap()
    }

    fn assert_monotone(trace: &[f64]) {
        for w in trace.windows(2) {
            assert!(w[1] <= w[0], "trace increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn straight_diameter_is_a_fixed_point() {
        let curve = disc();
        let path = [
            SurfacePoint::new(1.0, 0.0),
            SurfacePoint::new(0.0, 0.0),
            SurfacePoint::new(-1.0, 0.0),
        ];
        let rep = birkhoff_shorten(&curve, &path, 50).unwrap();
        assert_monotone(&rep.trace);
        assert!(!rep.self_intersecting);
        match rep.outcome {
            ShortenOutcome::FreeBoundaryGeodesic { path } => {
                assert_relative_eq!(path.length, 2.0, epsilon = 1e-9);
                let (sp, sq) = path.sigma.unwrap();
                assert!(sp.abs() < 1e-6 && sq.abs() < 1e-6, "sigma = ({sp}, {sq})");
            }
            other => panic!("expected a chord, got {other:?}"),
        }
    }

    #[test]
    fn bent_path_straightens_to_a_diameter() {
        let curve = disc();
        let path = [
            SurfacePoint::new(1.0, 0.0),
            SurfacePoint::new(0.05, 0.35),
            SurfacePoint::new(-1.0, 0.0),
        ];
        let rep = birkhoff_shorten(&curve, &path, 4000).unwrap();
        assert_monotone(&rep.trace);
        match rep.outcome {
            ShortenOutcome::FreeBoundaryGeodesic { path } => {
                assert_relative_eq!(path.length, 2.0, epsilon = 1e-4);
                let (sp, sq) = path.sigma.unwrap();
                assert!(sp.abs() < 1e-3 && sq.abs() < 1e-3, "sigma = ({sp}, {sq})");
            }
            other => panic!("expected a chord, got {other:?}"),
        }
    }

    #[test]
    fn shallow_chord_collapses_to_a_point() {
        let curve = disc();
        let a = 0.25f64;
        let path = [
            SurfacePoint::new(a.cos(), a.sin()),
            SurfacePoint::new(0.98 * a.cos(), 0.0),
            SurfacePoint::new(a.cos(), -a.sin()),
        ];
        let rep = birkhoff_shorten(&curve, &path, 4000).unwrap();
        assert_monotone(&rep.trace);
        assert!(
            matches!(rep.outcome, ShortenOutcome::Point { .. }),
            "expected collapse, got {:?}",
            rep.outcome
        );
        assert!(*rep.trace.last().unwrap() < 1e-3 * curve.length());
    }

    #[test]
    fn disc_normals_merge_into_one_diameter_family() {
        let curve = disc();
        let found = find_free_boundary_geodesics(&curve, 64).unwrap();
        assert_eq!(found.len(), 1, "expected one family, got {}", found.len());
        let f = &found[0];
        assert!(f.family);
        assert!(f.members >= 16, "family too small: {}", f.members);
        assert_relative_eq!(f.path.length, 2.0, epsilon = 1e-3);
        assert_relative_eq!(
            f.pair.ring_gap(curve.length()),
            curve.length() / 2.0,
            epsilon = 1e-2 * curve.length()
        );
    }

    #[test]
    fn ellipse_has_exactly_the_two_axis_chords() {
        let curve = ellipse();
        let mut found = find_free_boundary_geodesics(&curve, 64).unwrap();
        assert_eq!(found.len(), 2, "expected two chords, got {}", found.len());
        found.sort_by(|a, b| a.path.length.partial_cmp(&b.path.length).unwrap());
        assert!(!found[0].family && !found[1].family);
        assert_relative_eq!(found[0].path.length, 2.0, epsilon = 1e-3);
        assert_relative_eq!(found[1].path.length, 4.0, epsilon = 1e-3);
        // minor axis feet on the y-axis, major axis feet on the x-axis
        let minor = curve.point_at(found[0].pair.s1);
        let major = curve.point_at(found[1].pair.s1);
        assert!(minor.u.abs() < 1e-3, "minor foot at u = {}", minor.u);
        assert!(major.v.abs() < 1e-3, "major foot at v = {}", major.v);
    }

    #[test]
    fn disc_diameter_index_matches_the_robin_oracle() {
        let curve = disc();
        let found = find_free_boundary_geodesics(&curve, 64).unwrap();
        let idx = free_boundary_index(&curve, &found[0].path).unwrap();
        // lambda_1 = -mu^2 with mu tanh mu = 1
        let mut lo = 1.0f64;
        let mut hi = 1.3f64;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.tanh() < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = 0.5 * (lo + hi);
        assert_relative_eq!(idx.eigenvalues[0], -mu * mu, epsilon = 1e-5);
        // u = t - 1 is an exact discrete eigenfunction at lambda = 0
        assert!(
            idx.eigenvalues[1].abs() <= idx.eps_eig,
            "lambda_2 = {:.3e}",
            idx.eigenvalues[1]
        );
        assert_eq!(idx.index, 1);
        assert_eq!(idx.nullity, 1);
        assert_relative_eq!(idx.rayleigh_constant, -1.0, epsilon = 1e-9);
        assert!(idx.eigenvalues[0] <= idx.rayleigh_constant + 1e-9);
    }

    #[test]
    fn hemisphere_meridian_spectrum_is_k_squared_minus_one() {
        let curve = hemisphere();
        let found = find_free_boundary_geodesics(&curve, 64).unwrap();
        assert_eq!(found.len(), 1);
        assert!(found[0].family);
        assert_relative_eq!(found[0].path.length, PI, epsilon = 1e-3);
        let idx = free_boundary_index(&curve, &found[0].path).unwrap();
        for (k, lam) in idx.eigenvalues.iter().enumerate() {
            let exact = (k * k) as f64 - 1.0;
            assert!(
                (lam - exact).abs() <= 1e-3 * exact.abs().max(1.0),
                "lambda_{} = {lam}, expected {exact}",
                k + 1
            );
        }
        assert_eq!(idx.index, 1);
        assert_eq!(idx.nullity, 1);
    }

    fn revolution_cap(a: f64, delta: f64) -> BoundaryCurve {
        let chart = Arc::new(
            SurfaceChart::new(
                ChartKind::Revolution {
                    profile: Profile::Ellipsoid { a },
                },
                (0.0, TAU),
                (delta, a),
            )
            .unwrap(),
        );
        BoundaryCurve::build(
            chart,
            &CurveSpec::Latitude {
                v: delta,
                inward: InwardSide::VPlus,
            },
            256,
            true,
        )
        .unwrap()
    }

    // On a cap of revolution the rotational field restricted to an
    // over-pole chord is a Jacobi field compatible with the Robin feet and
    // vanishing only at the pole, so the second eigenvalue is exactly zero
    // and the chord has index one whatever the profile. Reference lengths
    // and flanking eigenvalues come from a dense independent solve of the
    // Robin problem with the meridian curvature profile.
    #[test]
    fn cap_chords_carry_the_rotational_zero_mode() {
        for (a, len, lam1, lam3) in [
            (0.5, 2.216_775_17, -1.301_022, 6.413_736),
            (2.0, 4.644_203_25, -1.552_852, 0.752_191),
        ] {
            let curve = revolution_cap(a, 0.1);
            let found = find_free_boundary_geodesics(&curve, 64).unwrap();
            assert_eq!(found.len(), 1, "a = {a}");
            assert!(found[0].family);
            let path = &found[0].path;
            assert_relative_eq!(path.length, len, epsilon = 1e-6);
            let idx = free_boundary_index(&curve, path).unwrap();
            assert_eq!((idx.index, idx.nullity), (1, 1), "a = {a}");
            assert!(
                idx.eigenvalues[1].abs() <= idx.eps_eig,
                "rotational mode off zero: {}",
                idx.eigenvalues[1]
            );
            assert_relative_eq!(idx.eigenvalues[0], lam1, epsilon = 1e-4);
            assert_relative_eq!(idx.eigenvalues[2], lam3, epsilon = 1e-4);
        }
    }

    #[test]
    fn doubling_the_eigen_grid_is_within_tolerance() {
        let curve = disc();
        let found = find_free_boundary_geodesics(&curve, 64).unwrap();
        let a = free_boundary_index_with_nodes(&curve, &found[0].path, 400).unwrap();
        let b = free_boundary_index_with_nodes(&curve, &found[0].path, 800).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!(
                (x - y).abs() <= 1e-4 * x.abs().max(1.0),
                "{x} vs {y} after doubling"
            );
        }
    }

    #[test]
    fn star_property_holds_on_the_disc() {
        let curve = disc();
        let rep = property_star_check(&curve, 64).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.examined, 1);
        assert!(rep.witnesses.is_empty());
    }
}
