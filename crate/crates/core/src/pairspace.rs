//! The space of unordered boundary pairs and criticality of the boundary
//! distance functional on it.
//!
//! A pair {p, q} is *regular* when some infinitesimal motion (v1, v2) of
//! the endpoints along the boundary strictly decreases the length of every
//! minimizing geodesic between them, and *critical* otherwise. With
//! one-dimensional tangent spaces this reduces to a planar alternative:
//! writing sigma(gamma) = (<-gamma'(0), T(p)>, <gamma'(a), T(q)>), the pair
//! is critical if and only if the origin lies in the convex hull of the
//! signatures of its minimizers. Both outcomes carry a finite certificate —
//! a separating direction, or a convex combination of signatures vanishing
//! at the origin — that can be re-verified independently.

use serde::Serialize;

use crate::curve::BoundaryCurve;
use crate::exec;
use crate::geodesic::{self, Connector, GeodesicPath, PairSet};
use crate::tol;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Pair space
// ---------------------------------------------------------------------------

/// An unordered pair of boundary arclength parameters, stored canonically
/// with `s1 <= s2` in `[0, L)`. Singletons represent the collapsed class of
/// coincident pairs.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PairPoint {
    pub s1: f64,
    pub s2: f64,
    pub is_singleton: bool,
}

impl PairPoint {
    pub fn new(a: f64, b: f64, curve_len: f64) -> Self {
        let l = curve_len;
        let mut s1 = a.rem_euclid(l);
        let mut s2 = b.rem_euclid(l);
        if s1 > s2 {
            std::mem::swap(&mut s1, &mut s2);
        }
        let ring = (s2 - s1).min(l - (s2 - s1));
        PairPoint {
            s1,
            s2,
            is_singleton: ring <= 1e-9 * l,
        }
    }

    /// Equality in the quotient space, to a relative tolerance.
    pub fn approx_eq(&self, other: &PairPoint, curve_len: f64) -> bool {
        if self.is_singleton && other.is_singleton {
            return true;
        }
        let tol = 1e-9 * curve_len;
        let near = |x: f64, y: f64| {
            let d = (x - y).abs();
            d <= tol || (curve_len - d) <= tol
        };
        near(self.s1, other.s1) && near(self.s2, other.s2)
    }

    /// Separation of the two points along the boundary (ring distance).
    pub fn ring_gap(&self, curve_len: f64) -> f64 {
        let d = self.s2 - self.s1;
        d.min(curve_len - d)
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Regular,
    Critical,
}

/// The verifiable side of a verdict.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// v1*sigma_p + v2*sigma_q <= -margin for every minimizer.
    Separating { v1: f64, v2: f64, margin: f64 },
    /// Convex coefficients over the stored minimizers with
    /// sum(lambda * sigma) = 0 on the stored (snapped) signatures;
    /// `raw_residual` is the hull-to-origin distance before snapping.
    Witness {
        lambdas: Vec<f64>,
        raw_residual: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum Classification {
    /// Some minimizer meets the boundary orthogonally at both ends.
    FreeBoundary,
    /// Two minimizers with sigma(g1) = -c * sigma(g2), c > 0.
    SimultaneouslyStationary { c: f64 },
    /// Both extremal connectors run along the boundary.
    BoundaryArcPair,
    /// Degenerate pair (endpoints closer than the resolution floor).
    Trivial,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalityReport {
    pub pair: PairPoint,
    pub distance: f64,
    /// Signatures of the stored minimizers (snapped when the verdict is
    /// critical; the snap size is the certificate's `raw_residual`).
    pub signatures: Vec<(f64, f64)>,
    pub minimizers: Vec<GeodesicPath>,
    pub verdict: Verdict,
    pub certificate: Certificate,
    pub classification: Vec<Classification>,
    pub family: bool,
    pub notes: String,
}

// ---------------------------------------------------------------------------
// Min-norm point in a 2D convex hull
// ---------------------------------------------------------------------------

struct MinNorm {
    /// Closest point of the hull to the origin.
    point: [f64; 2],
    /// Convex coefficients over the *input* points realizing it.
    lambdas: Vec<f64>,
}

fn min_norm_point(sigs: &[(f64, f64)]) -> MinNorm {
    let n = sigs.len();
    assert!(n > 0);
    let pt = |i: usize| [sigs[i].0, sigs[i].1];

    // interior containment: check triangles of a hull fan
    if let Some(lambdas) = origin_in_hull(sigs) {
        return MinNorm {
            point: [0.0, 0.0],
            lambdas,
        };
    }

    // otherwise the minimum is attained on a vertex or an edge of the hull;
    // scanning all O(n^2) segments contains all hull edges
    let mut best = MinNorm {
        point: pt(0),
        lambdas: {
            let mut l = vec![0.0; n];
            l[0] = 1.0;
            l
        },
    };
    let mut best_d = norm2(best.point);
    for i in 0..n {
        let a = pt(i);
        let da = norm2(a);
        if da < best_d {
            best_d = da;
            let mut l = vec![0.0; n];
            l[i] = 1.0;
            best = MinNorm {
                point: a,
                lambdas: l,
            };
        }
        for j in (i + 1)..n {
            let b = pt(j);
            let ab = [b[0] - a[0], b[1] - a[1]];
            let denom = ab[0] * ab[0] + ab[1] * ab[1];
            if denom <= 0.0 {
                continue;
            }
            let t = (-(a[0] * ab[0] + a[1] * ab[1]) / denom).clamp(0.0, 1.0);
            let c = [a[0] + t * ab[0], a[1] + t * ab[1]];
            let dc = norm2(c);
            if dc < best_d {
                best_d = dc;
                let mut l = vec![0.0; n];
                l[i] = 1.0 - t;
                l[j] = t;
                best = MinNorm {
                    point: c,
                    lambdas: l,
                };
            }
        }
    }
    best
}

fn norm2(p: [f64; 2]) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

/// Strict containment test with barycentric witness construction.
fn origin_in_hull(sigs: &[(f64, f64)]) -> Option<Vec<f64>> {
    let n = sigs.len();
    if n < 3 {
        return None;
    }
    // convex hull, monotone chain
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        sigs[a]
            .partial_cmp(&sigs[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx.dedup_by(|&mut a, &mut b| {
        (sigs[a].0 - sigs[b].0).abs() < 1e-15 && (sigs[a].1 - sigs[b].1).abs() < 1e-15
    });
    let cross = |o: usize, a: usize, b: usize| -> f64 {
        (sigs[a].0 - sigs[o].0) * (sigs[b].1 - sigs[o].1)
            - (sigs[a].1 - sigs[o].1) * (sigs[b].0 - sigs[o].0)
    };
    let mut hull: Vec<usize> = Vec::new();
    for &i in &idx {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in idx.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0
        {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    if hull.len() < 3 {
        return None;
    }
    // fan triangulation from hull[0]; find the triangle containing the origin
    for k in 1..hull.len() - 1 {
        let (a, b, c) = (hull[0], hull[k], hull[k + 1]);
        let m = [
            [sigs[b].0 - sigs[a].0, sigs[c].0 - sigs[a].0],
            [sigs[b].1 - sigs[a].1, sigs[c].1 - sigs[a].1],
        ];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() < 1e-300 {
            continue;
        }
        let rhs = [-sigs[a].0, -sigs[a].1];
        let beta = (rhs[0] * m[1][1] - rhs[1] * m[0][1]) / det;
        let gamma = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
        let alpha = 1.0 - beta - gamma;
        if alpha >= -1e-12 && beta >= -1e-12 && gamma >= -1e-12 {
            let mut l = vec![0.0; n];
            l[a] = alpha.max(0.0);
            l[b] = beta.max(0.0);
            l[c] = gamma.max(0.0);
            let s: f64 = l.iter().sum();
            for x in &mut l {
                *x /= s;
            }
            return Some(l);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Classification core
// ---------------------------------------------------------------------------

struct SigVerdict {
    verdict: Verdict,
    certificate: Certificate,
    /// Signatures after snapping (identical to input when regular).
    snapped: Vec<(f64, f64)>,
}

/// Decide criticality of a signature set: critical iff the convex hull of
/// the signatures comes within `eps` of the origin. Critical verdicts store
/// signatures translated by the (tiny) hull offset so the witness identity
/// sum(lambda*sigma) = 0 holds exactly on the stored data; the raw offset
/// is kept in the certificate.
fn classify_signatures(sigs: &[(f64, f64)], eps: f64) -> SigVerdict {
    let mn = min_norm_point(sigs);
    let r0 = norm2(mn.point);
    if r0 <= eps {
        let snapped = sigs
            .iter()
            .map(|&(a, b)| (a - mn.point[0], b - mn.point[1]))
            .collect();
        SigVerdict {
            verdict: Verdict::Critical,
            certificate: Certificate::Witness {
                lambdas: mn.lambdas,
                raw_residual: r0,
            },
            snapped,
        }
    } else {
        let v = [-mn.point[0] / r0, -mn.point[1] / r0];
        SigVerdict {
            verdict: Verdict::Regular,
            certificate: Certificate::Separating {
                v1: v[0],
                v2: v[1],
                margin: r0,
            },
            snapped: sigs.to_vec(),
        }
    }
}

fn tags_for(
    curve: &BoundaryCurve,
    pair: &PairPoint,
    mins: &[&Connector],
) -> Vec<Classification> {
    let mut tags = Vec::new();
    if pair.ring_gap(curve.length()) <= 1e-6 * curve.length() {
        tags.push(Classification::Trivial);
    }
    if mins
        .iter()
        .any(|c| c.sigma_p.abs() <= tol::TAG_TOL && c.sigma_q.abs() <= tol::TAG_TOL)
    {
        tags.push(Classification::FreeBoundary);
    }
    // simultaneously stationary: sigma(g1) = -c * sigma(g2) with c > 0
    let mut best: Option<(f64, f64)> = None; // (residual, c)
    for i in 0..mins.len() {
        for j in 0..mins.len() {
            if i == j {
                continue;
            }
            let s1 = (mins[i].sigma_p, mins[i].sigma_q);
            let s2 = (mins[j].sigma_p, mins[j].sigma_q);
            let n2 = (s2.0 * s2.0 + s2.1 * s2.1).sqrt();
            if n2 <= tol::TAG_TOL {
                continue; // free-boundary partner: stationarity is trivial
            }
            // least-squares c >= 0 minimising |s1 + c s2|
            let c = -(s1.0 * s2.0 + s1.1 * s2.1) / (n2 * n2);
            if c <= 0.0 {
                continue;
            }
            let res = ((s1.0 + c * s2.0).powi(2) + (s1.1 + c * s2.1).powi(2)).sqrt();
            if res <= tol::TAG_TOL && best.map_or(true, |(r, _)| res < r) {
                best = Some((res, c));
            }
        }
    }
    if let Some((_, c)) = best {
        tags.push(Classification::SimultaneouslyStationary { c });
    }
    if mins.len() >= 2 {
        let (lo, hi) = extreme_by_sigma_p(mins);
        if mins[lo].boundary_arc && mins[hi].boundary_arc {
            tags.push(Classification::BoundaryArcPair);
        }
    } else if mins.len() == 1 && mins[0].boundary_arc {
        tags.push(Classification::BoundaryArcPair);
    }
    tags
}

fn extreme_by_sigma_p(mins: &[&Connector]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, c) in mins.iter().enumerate() {
        if c.sigma_p < mins[lo].sigma_p {
            lo = i;
        }
        if c.sigma_p > mins[hi].sigma_p {
            hi = i;
        }
    }
    (lo, hi)
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Conormal signature of a geodesic whose endpoints lie on the curve:
/// (<-g'(0), T(p)>, <g'(a), T(q)>) in the surface metric.
pub fn signature(curve: &BoundaryCurve, g: &GeodesicPath) -> Result<(f64, f64)> {
    let chart = curve.chart();
    let band = 1e-6 * curve.length();
    let p = *g.points.first().ok_or_else(|| Error::numerical("signature", "empty path"))?;
    let q = *g.points.last().unwrap();
    let (sp, _) = curve
        .locate_within(p, band)
        .ok_or_else(|| Error::numerical("signature", "start point off the boundary curve"))?;
    let (sq, _) = curve
        .locate_within(q, band)
        .ok_or_else(|| Error::numerical("signature", "end point off the boundary curve"))?;
    let fp = curve.frame_at(sp)?;
    let fq = curve.frame_at(sq)?;
    let gp = chart.geometry_at(fp.point)?;
    let gq = chart.geometry_at(fq.point)?;
    let sigma_p = -gp.dot(g.start_dir, fp.tangent);
    let sigma_q = gq.dot(g.end_dir, fq.tangent);
    Ok((sigma_p.clamp(-1.0, 1.0), sigma_q.clamp(-1.0, 1.0)))
}

fn report_from_pairset(
    curve: &BoundaryCurve,
    pair: PairPoint,
    set: &PairSet,
    eps: f64,
    realize_paths: bool,
) -> Result<CriticalityReport> {
    report_windowed(curve, pair, set, eps, 0.0, realize_paths)
}

/// Like [`report_from_pairset`] but admits near-minimizers within `slack` of
/// the minimal length into the signature hull, so criticality carried by a
/// two-route length tie ("fold") within the probe's localisation radius is
/// visible at that radius.
fn report_windowed(
    curve: &BoundaryCurve,
    pair: PairPoint,
    set: &PairSet,
    eps: f64,
    slack: f64,
    realize_paths: bool,
) -> Result<CriticalityReport> {
    let d = set.distance();
    let window = d * (1.0 + tol::EPS_LEN) + slack;
    let mins: Vec<&Connector> = set
        .connectors
        .iter()
        .filter(|c| c.length <= window)
        .collect();
    if mins.is_empty() {
        return Err(Error::NoConnector {
            max_len: 0.55 * curve.length(),
        });
    }
    let sigs: Vec<(f64, f64)> = mins.iter().map(|c| (c.sigma_p, c.sigma_q)).collect();
    let sv = classify_signatures(&sigs, eps);
    let tags = tags_for(curve, &pair, &mins);
    let minimizers = if realize_paths {
        mins.iter()
            .map(|c| geodesic::realize(curve, c))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let notes = match &sv.certificate {
        Certificate::Separating { margin, .. } => {
            format!("separation margin {margin:.3e}")
        }
        Certificate::Witness { raw_residual, .. } => format!(
            "hull offset {raw_residual:.3e} (signatures snapped); {} raw minimizers",
            set.raw_minimizer_count
        ),
    };
    Ok(CriticalityReport {
        pair,
        distance: set.distance(),
        signatures: sv.snapped,
        minimizers,
        verdict: sv.verdict,
        certificate: sv.certificate,
        classification: tags,
        family: set.family,
        notes,
    })
}

/// Classify one boundary pair at the strict hull tolerance.
pub fn classify_pair(curve: &BoundaryCurve, pair: PairPoint) -> Result<CriticalityReport> {
    if pair.is_singleton {
        return Err(Error::numerical(
            "classify_pair",
            "singleton pairs are trivially critical; pass a separated pair",
        ));
    }
    let set = geodesic::boundary_pair(curve, pair.s1, pair.s2)?;
    report_from_pairset(curve, pair, &set, tol::HULL_TOL, true)
}

/// Classify a boundary pair at localisation radius `radius` (arclength): the
/// verdict certifies or excludes a critical pair within O(radius) of `pair`.
/// Connectors inside the fold window join the signature hull — a grid probe
/// next to a two-route length crossing sees both routes even though only one
/// minimizes at the probe itself — and the certificate threshold scales with
/// the signature drift across one radius. Grid argmax pairs, which are only
/// known to cell resolution, classify at `radius = L / grid`.
pub fn classify_pair_at(
    curve: &BoundaryCurve,
    pair: PairPoint,
    radius: f64,
) -> Result<CriticalityReport> {
    if pair.is_singleton {
        return Err(Error::numerical(
            "classify_pair_at",
            "singleton pairs are trivially critical; pass a separated pair",
        ));
    }
    let set = geodesic::boundary_pair(curve, pair.s1, pair.s2)?;
    let eps = scan_eps(curve, &set, radius);
    report_windowed(curve, pair, &set, eps, tol::FOLD_WINDOW * radius, true)
}

/// The two minimizers with extreme conormal signature at p, ordered so the
/// first has the smaller sigma_p (gamma_plus, then gamma_minus). They
/// coincide when the minimizer is unique.
pub fn extremal_geodesics(
    curve: &BoundaryCurve,
    pair: PairPoint,
) -> Result<(GeodesicPath, GeodesicPath)> {
    if pair.is_singleton {
        return Err(Error::numerical("extremal_geodesics", "singleton pair"));
    }
    let set = geodesic::boundary_pair(curve, pair.s1, pair.s2)?;
    let mins = set.minimizers();
    if mins.is_empty() {
        return Err(Error::NoConnector {
            max_len: 0.55 * curve.length(),
        });
    }
    let (lo, hi) = extreme_by_sigma_p(&mins);
    Ok((
        geodesic::realize(curve, mins[lo])?,
        geodesic::realize(curve, mins[hi])?,
    ))
}

// ---------------------------------------------------------------------------
// Grid scan
// ---------------------------------------------------------------------------

/// One connected component of critical cells found by the scan.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalComponent {
    pub representative: CriticalityReport,
    /// Grid cells (i, j), i < j, belonging to the component.
    pub members: Vec<(usize, usize)>,
    /// Continuum of critical pairs rather than an isolated point.
    pub family: bool,
    /// Fraction of boundary samples touched by the component's cells.
    pub coverage: f64,
    /// True when the representative was localised by bisection.
    pub refined: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanOutcome {
    pub grid: usize,
    pub components: Vec<CriticalComponent>,
    /// Margin (hull-to-origin distance) per scanned cell, row-major over
    /// canonical (i, j), i < j; diagnostic use.
    #[serde(skip)]
    pub margins: Vec<Vec<f64>>,
}

struct CellData {
    margin: f64,
    set: PairSet,
}

/// Scan all grid pairs, flag cells whose hull margin is small relative to
/// the local signature variation, merge flagged cells into components
/// (8-adjacency in the unordered-pair quotient), and localise isolated
/// components by bisection.
pub fn scan_components(curve: &BoundaryCurve, grid: usize) -> Result<ScanOutcome> {
    if grid < 32 {
        return Err(Error::Config("scan grid must be >= 32".into()));
    }
    let n = grid;
    let l = curve.length();
    let ds = l / n as f64;

    // Phase 1: distances + margins for all pairs, one fan per row.
    let rows: Vec<Result<Vec<Option<CellData>>>> = exec::par_map_indexed(n, |i| {
        let s_i = i as f64 * ds;
        let targets: Vec<f64> = ((i + 1)..n).map(|j| j as f64 * ds).collect();
        if targets.is_empty() {
            return Ok(Vec::new());
        }
        let sets = geodesic::boundary_pairs_from(curve, s_i, &targets)?;
        let mut row = Vec::with_capacity(sets.len());
        for set in sets {
            if set.connectors.is_empty() {
                row.push(None);
                continue;
            }
            let sigs: Vec<(f64, f64)> = set
                .minimizers()
                .iter()
                .map(|c| (c.sigma_p, c.sigma_q))
                .collect();
            let mn = min_norm_point(&sigs);
            row.push(Some(CellData {
                margin: norm2(mn.point),
                set,
            }));
        }
        Ok(row)
    });
    let mut cells: Vec<Vec<Option<CellData>>> = Vec::with_capacity(n);
    for r in rows {
        cells.push(r?);
    }
    let margin_at = |cells: &Vec<Vec<Option<CellData>>>, i: usize, j: usize| -> Option<f64> {
        // canonical cell (i, j), i != j, wrap to i < j
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if a == b {
            return None;
        }
        cells[a][b - a - 1].as_ref().map(|c| c.margin)
    };
    // Margin over the fold window: near-minimizers within the length slack
    // admitted by one cell of displacement join the hull, so criticality
    // carried by a two-route tie between grid cells (where the strict margin
    // stays large and jumps across the tie) is still seen by the flagging.
    let wide_margin_at = |cells: &Vec<Vec<Option<CellData>>>, i: usize, j: usize| -> Option<f64> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if a == b {
            return None;
        }
        cells[a][b - a - 1].as_ref().map(|c| {
            let d = c.set.distance();
            let win = d * (1.0 + tol::EPS_LEN) + tol::FOLD_WINDOW * ds;
            let sigs: Vec<(f64, f64)> = c
                .set
                .connectors
                .iter()
                .filter(|k| k.length <= win)
                .map(|k| (k.sigma_p, k.sigma_q))
                .collect();
            norm2(min_norm_point(&sigs).point)
        })
    };

    // Phase 2: flag cells. A cell is critical-ish when its fold-window
    // margin is small compared with the strict-margin variation across
    // neighbouring cells (the local modulus of the signature field), with
    // an absolute floor for exactly-vanishing margins.
    let mut flagged: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let Some(m) = wide_margin_at(&cells, i, j) else {
                continue;
            };
            let ms = margin_at(&cells, i, j).unwrap_or(m);
            let mut var: f64 = 0.0;
            for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let ni = (i as i64 + di).rem_euclid(n as i64) as usize;
                let nj = (j as i64 + dj).rem_euclid(n as i64) as usize;
                if let Some(nm) = margin_at(&cells, ni, nj) {
                    var = var.max((nm - ms).abs());
                }
            }
            if m <= (1.2 * var).max(1e-6) {
                flagged.push((i, j));
            }
        }
    }

    // Phase 3: union-find over flagged cells, 8-adjacency in the quotient
    // (unordered pairs with periodic wrap).
    let mut parent: Vec<usize> = (0..flagged.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = x;
        while parent[c] != r {
            let nxt = parent[c];
            parent[c] = r;
            c = nxt;
        }
        r
    }
    let index: std::collections::HashMap<(usize, usize), usize> = flagged
        .iter()
        .enumerate()
        .map(|(k, &c)| (c, k))
        .collect();
    let canon = |i: i64, j: i64| -> (usize, usize) {
        let a = i.rem_euclid(n as i64) as usize;
        let b = j.rem_euclid(n as i64) as usize;
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    };
    for (k, &(i, j)) in flagged.iter().enumerate() {
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let nb = canon(i as i64 + di, j as i64 + dj);
                if let Some(&k2) = index.get(&nb) {
                    let ra = find(&mut parent, k);
                    let rb = find(&mut parent, k2);
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<(usize, usize)>> =
        std::collections::BTreeMap::new();
    for k in 0..flagged.len() {
        let r = find(&mut parent, k);
        groups.entry(r).or_default().push(flagged[k]);
    }

    // Phase 4: per component — pick the min-margin cell, refine isolated
    // components by bisection, classify the representative.
    let mut components = Vec::new();
    for (_, members) in groups {
        let rep_cell = members
            .iter()
            .copied()
            .min_by(|a, b| {
                let ma = margin_at(&cells, a.0, a.1).unwrap_or(f64::INFINITY);
                let mb = margin_at(&cells, b.0, b.1).unwrap_or(f64::INFINITY);
                ma.partial_cmp(&mb).unwrap()
            })
            .unwrap();
        let mut touched = vec![false; n];
        for &(i, j) in &members {
            touched[i] = true;
            touched[j] = true;
        }
        let coverage = touched.iter().filter(|&&t| t).count() as f64 / n as f64;
        let family_cells = members.len() >= n / 2;
        let family_sets = members.iter().take(8).any(|&(i, j)| {
            cells[i][j - i - 1]
                .as_ref()
                .map(|c| c.set.family)
                .unwrap_or(false)
        });
        let family = family_cells || family_sets;

        let (mut s1, mut s2) = (rep_cell.0 as f64 * ds, rep_cell.1 as f64 * ds);
        let mut refined = false;
        let mut seeds: Vec<Connector> = cells[rep_cell.0][rep_cell.1 - rep_cell.0 - 1]
            .as_ref()
            .map(|c| c.set.connectors.clone())
            .unwrap_or_default();
        if !family {
            // bisection descent on the margin over shrinking cells
            let mut h = ds;
            while h > tol::COMPONENT_LOCALISE_REL * l {
                h *= 0.5;
                let mut best: Option<(f64, f64, f64, Vec<Connector>)> = None;
                for a in [-1.0, 0.0, 1.0] {
                    for b in [-1.0, 0.0, 1.0] {
                        let t1 = s1 + a * h;
                        let t2 = s2 + b * h;
                        let set = geodesic::continue_boundary_pair(curve, t1, t2, &seeds)?;
                        if set.connectors.is_empty() {
                            continue;
                        }
                        let win = set.distance() * (1.0 + tol::EPS_LEN) + tol::FOLD_WINDOW * h;
                        let sigs: Vec<(f64, f64)> = set
                            .connectors
                            .iter()
                            .filter(|c| c.length <= win)
                            .map(|c| (c.sigma_p, c.sigma_q))
                            .collect();
                        let m = norm2(min_norm_point(&sigs).point);
                        if best.as_ref().map_or(true, |(bm, ..)| m < *bm) {
                            best = Some((m, t1, t2, set.connectors));
                        }
                    }
                }
                if let Some((_, t1, t2, conn)) = best {
                    s1 = t1;
                    s2 = t2;
                    seeds = conn;
                }
            }
            refined = true;
        }

        let pair = PairPoint::new(s1, s2, l);
        let set = geodesic::continue_boundary_pair(curve, pair.s1, pair.s2, &seeds)?;
        // the scan certifies criticality at the localisation scale: the
        // residual hull offset of the refined representative is accepted
        // up to the signature variation across one refined cell, with the
        // matching fold window on the minimizer lengths
        let cell = tol::COMPONENT_LOCALISE_REL * l;
        let eps_local = scan_eps(curve, &set, cell);
        let mut rep = report_windowed(curve, pair, &set, eps_local, tol::FOLD_WINDOW * cell, true)?;
        if family {
            rep.family = true;
        }
        // a flagged cell whose refined representative fails certification is
        // a false alarm of the flagging heuristic, not a critical component
        if rep.verdict != Verdict::Critical {
            continue;
        }
        components.push(CriticalComponent {
            representative: rep,
            members,
            family,
            coverage,
            refined,
        });
    }

    // deterministic order: by representative pair
    components.sort_by(|a, b| {
        (a.representative.pair.s1, a.representative.pair.s2)
            .partial_cmp(&(b.representative.pair.s1, b.representative.pair.s2))
            .unwrap()
    });

    let margins = cells
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|c| c.map(|c| c.margin).unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    Ok(ScanOutcome {
        grid: n,
        components,
        margins,
    })
}

/// Tolerance for certifying a refined representative: the expected margin
/// drift across one localisation cell, bounded below by the strict hull
/// tolerance.
fn scan_eps(curve: &BoundaryCurve, set: &PairSet, cell: f64) -> f64 {
    // |d sigma / d s| <= |A| + geodesic curvature of the connector ~ O(1/L);
    // use the curve's curvature scale as the modulus estimate
    let kappa_scale = set
        .minimizers()
        .iter()
        .map(|c| {
            let k1 = curve.frame_at(c.s_p).map(|f| f.kappa.abs()).unwrap_or(0.0);
            let k2 = curve.frame_at(c.s_q).map(|f| f.kappa.abs()).unwrap_or(0.0);
            k1.max(k2)
        })
        .fold(0.0f64, f64::max)
        .max(crate::surface::TAU / curve.length());
    (2.0 * kappa_scale * cell).max(tol::HULL_TOL)
}

/// Spec-facing wrapper: one report per critical component.
pub fn scan_critical_pairs(curve: &BoundaryCurve, grid: usize) -> Result<Vec<CriticalityReport>> {
    Ok(scan_components(curve, grid)?
        .components
        .into_iter()
        .map(|c| c.representative)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{BoundaryCurve, CurveSpec, InwardSide};
    use crate::surface::{ChartKind, SurfaceChart, TAU};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn plane() -> Arc<SurfaceChart> {
        Arc::new(SurfaceChart::new(ChartKind::EuclideanPlane, (-6.0, 6.0), (-6.0, 6.0)).unwrap())
    }

    fn unit_circle(n: usize) -> BoundaryCurve {
        BoundaryCurve::build(
            plane(),
            &CurveSpec::Circle {
                center: (0.0, 0.0),
                radius: 1.0,
            },
            n,
            true,
        )
        .unwrap()
    }

    fn ellipse(n: usize) -> BoundaryCurve {
        BoundaryCurve::build(
            plane(),
            &CurveSpec::Ellipse {
                center: (0.0, 0.0),
                a: 2.0,
                b: 1.0,
            },
            n,
            true,
        )
        .unwrap()
    }

    #[test]
    fn min_norm_inside_and_outside() {
        // triangle around the origin
        let mn = min_norm_point(&[(1.0, 0.0), (-1.0, 1.0), (-1.0, -1.0)]);
        assert!(norm2(mn.point) < 1e-12);
        let s: f64 = mn.lambdas.iter().sum();
        assert_relative_eq!(s, 1.0, epsilon = 1e-12);
        // segment straddling the origin
        let mn = min_norm_point(&[(-1.0, 1.0), (1.0, -1.0)]);
        assert!(norm2(mn.point) < 1e-12);
        // offset cluster
        let mn = min_norm_point(&[(0.5, 0.5), (0.7, 0.4), (0.6, 0.9)]);
        let d = norm2(mn.point);
        assert_relative_eq!(d, (0.5f64 * 0.5 + 0.5 * 0.5).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn signature_of_realized_chord() {
        let curve = unit_circle(128);
        let l = curve.length();
        let set = geodesic::boundary_pair(&curve, 0.0, l / 4.0).unwrap();
        let path = geodesic::realize(&curve, &set.connectors[0]).unwrap();
        let (sp, sq) = signature(&curve, &path).unwrap();
        // chord from angle 0 to angle pi/2 meets the circle at 45 degrees
        assert_relative_eq!(sp, -(PI / 4.0).cos(), epsilon = 1e-6);
        assert_relative_eq!(sq, (PI / 4.0).cos(), epsilon = 1e-6);
    }

    #[test]
    fn circle_antipodal_pair_is_critical_free_boundary() {
        let curve = unit_circle(128);
        let l = curve.length();
        let rep = classify_pair(&curve, PairPoint::new(0.0, l / 2.0, l)).unwrap();
        assert_eq!(rep.verdict, Verdict::Critical);
        assert!(rep.classification.contains(&Classification::FreeBoundary));
        assert_relative_eq!(rep.distance, 2.0, epsilon = 1e-9);
        match &rep.certificate {
            Certificate::Witness { lambdas, .. } => {
                assert_relative_eq!(lambdas.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            }
            _ => panic!("expected a witness"),
        }
    }

    #[test]
    fn ellipse_axis_pairs() {
        let curve = ellipse(256);
        let l = curve.length();
        // major axis: s = 0 and s = L/2 by symmetry
        let rep = classify_pair(&curve, PairPoint::new(0.0, l / 2.0, l)).unwrap();
        assert_eq!(rep.verdict, Verdict::Critical);
        assert!(rep.classification.contains(&Classification::FreeBoundary));
        assert_relative_eq!(rep.distance, 4.0, epsilon = 1e-6);
        // an asymmetric pair is regular, and its certificate separates
        let rep = classify_pair(&curve, PairPoint::new(0.1 * l, 0.43 * l, l)).unwrap();
        assert_eq!(rep.verdict, Verdict::Regular);
        match rep.certificate {
            Certificate::Separating { v1, v2, margin } => {
                assert!(margin > 1e-4);
                for &(sp, sq) in &rep.signatures {
                    assert!(v1 * sp + v2 * sq <= -tol::HULL_TOL);
                }
            }
            _ => panic!("expected a separating certificate"),
        }
    }

    #[test]
    fn extremal_geodesics_on_hemisphere_antipodal_pair() {
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
        let l = curve.length();
        let (gp, gm) = extremal_geodesics(&curve, PairPoint::new(0.0, l / 2.0, l)).unwrap();
        let (sp1, sq1) = signature(&curve, &gp).unwrap();
        let (sp2, sq2) = signature(&curve, &gm).unwrap();
        // the extremes are the two equator arcs
        assert_relative_eq!(sp1, -1.0, epsilon = 1e-6);
        assert_relative_eq!(sq1, 1.0, epsilon = 1e-6);
        assert_relative_eq!(sp2, 1.0, epsilon = 1e-6);
        assert_relative_eq!(sq2, -1.0, epsilon = 1e-6);
        assert!(sp1 <= 0.0 && 0.0 <= sp2);
    }

    #[test]
    fn ellipse_scan_finds_exactly_the_axis_components() {
        let curve = ellipse(256);
        let l = curve.length();
        let out = scan_components(&curve, 64).unwrap();
        assert_eq!(
            out.components.len(),
            2,
            "expected the two axis components, got {:?}",
            out.components
                .iter()
                .map(|c| (c.representative.pair.s1, c.representative.pair.s2))
                .collect::<Vec<_>>()
        );
        for comp in &out.components {
            assert_eq!(comp.representative.verdict, Verdict::Critical);
            assert!(comp.refined);
            assert!(!comp.family);
            // each localises an axis: s2 - s1 = L/2 by symmetry
            let gap = comp.representative.pair.s2 - comp.representative.pair.s1;
            assert!(
                (gap - l / 2.0).abs() <= 4e-3 * l,
                "component not on a symmetry axis: gap {gap}"
            );
        }
        // distances: major axis 4, minor axis 2
        let mut ds: Vec<f64> = out
            .components
            .iter()
            .map(|c| c.representative.distance)
            .collect();
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(ds[0], 2.0, epsilon = 2e-2);
        assert_relative_eq!(ds[1], 4.0, epsilon = 2e-2);
    }

    #[test]
    fn circle_scan_finds_one_family_covering_the_boundary() {
        let curve = unit_circle(128);
        let out = scan_components(&curve, 64).unwrap();
        assert_eq!(out.components.len(), 1);
        let comp = &out.components[0];
        assert!(comp.family, "antipodal set should be flagged as a family");
        assert!(comp.coverage > 0.9);
        assert_eq!(comp.representative.verdict, Verdict::Critical);
    }
}
