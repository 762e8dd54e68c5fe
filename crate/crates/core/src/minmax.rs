//! Distance fields over boundary samples and the discrete min-max width.
//!
//! A sweepout is discretized as a lattice path on the ordered-pair cover:
//! nodes are integer pairs (x, y) with 0 <= y - x <= N, projected to the
//! sample pair (x mod N, y mod N); admissible steps move each index by at
//! most one. A path from the diagonal y = x to the shifted diagonal
//! y = x + N projects to a homotopically non-trivial loop of pairs, and the
//! width is the min over such paths of the max pair-distance met along the
//! way — a bottleneck shortest path.
//!
//! Steps that change y - x by two (the anti-diagonal moves) jump across a
//! whole level of the strip; a continuous family interpolating such a move
//! has to pass through the level in between, so those edges additionally
//! pay both skipped corner pairs. (With that augmentation an anti-diagonal
//! move is never strictly better than its two-step detours, which keeps
//! every path's bottleneck attained at a node of the skipped level — the
//! cylinder equality S = L/2 depends on this.)
//!
//! Three independent searches share the edge semantics: bottleneck
//! Dijkstra (primary), threshold binary search + flood fill, and, for tiny
//! fields, a threshold scan with exhaustive depth-first reachability.

use serde::Serialize;

use crate::curve::BoundaryCurve;
use crate::exec;
use crate::geodesic;
use crate::pairspace::{self, PairPoint, ScanOutcome};
use crate::tol;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Distance field
// ---------------------------------------------------------------------------

/// Pairwise geodesic distances between `n` equally spaced boundary samples.
#[derive(Clone, Debug, Serialize)]
pub struct DistanceField {
    n: usize,
    l: f64,
    /// Row-major n x n, symmetric, zero diagonal.
    d: Vec<f64>,
}

impl DistanceField {
    pub fn compute(curve: &BoundaryCurve, n: usize) -> Result<Self> {
        Self::compute_inner(curve, n, false)
    }

    /// Sequential twin of [`compute`] (identical results; used by the
    /// parallel-vs-serial consistency tests and benches).
    pub fn compute_serial(curve: &BoundaryCurve, n: usize) -> Result<Self> {
        Self::compute_inner(curve, n, true)
    }

    fn compute_inner(curve: &BoundaryCurve, n: usize, serial: bool) -> Result<Self> {
        if n < 8 {
            return Err(Error::Config("distance field needs N >= 8".into()));
        }
        if curve.sample_count() % n != 0 {
            return Err(Error::Config(format!(
                "field size {n} must divide the curve sample count {}",
                curve.sample_count()
            )));
        }
        let l = curve.length();
        let ds = l / n as f64;
        let row_job = |i: usize| -> Result<Vec<f64>> {
            let s_i = i as f64 * ds;
            let targets: Vec<f64> = ((i + 1)..n).map(|j| j as f64 * ds).collect();
            if targets.is_empty() {
                return Ok(Vec::new());
            }
            let sets = geodesic::boundary_pairs_from(curve, s_i, &targets)?;
            sets.iter()
                .map(|set| {
                    if set.connectors.is_empty() {
                        Err(Error::NoConnector {
                            max_len: 0.55 * curve.length(),
                        })
                    } else {
                        Ok(set.distance())
                    }
                })
                .collect()
        };
        let rows: Vec<Result<Vec<f64>>> = if serial {
            exec::seq_map_indexed(n, row_job)
        } else {
            exec::par_map_indexed(n, row_job)
        };
        let mut d = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, val) in row?.into_iter().enumerate() {
                let j = i + 1 + off;
                d[i * n + j] = val;
                d[j * n + i] = val;
            }
        }
        Ok(Self { n, l, d })
    }

    /// Wrap an explicit symmetric matrix (testing and random-field checks).
    pub fn from_matrix(n: usize, l: f64, d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::Config("matrix size mismatch".into()));
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::Config("diagonal must be zero".into()));
            }
            for j in 0..n {
                if (d[i * n + j] - d[j * n + i]).abs() > 0.0 {
                    return Err(Error::Config("matrix must be symmetric".into()));
                }
            }
        }
        Ok(Self { n, l, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn curve_len(&self) -> f64 {
        self.l
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.d[(i % self.n) * self.n + (j % self.n)]
    }

    pub fn sample_arclen(&self, i: usize) -> f64 {
        (i % self.n) as f64 * self.l / self.n as f64
    }
}

// ---------------------------------------------------------------------------
// The sweepout lattice
// ---------------------------------------------------------------------------

/// A lifted sweepout: integer pairs on the cover strip, from y = x to
/// y = x + N in steps of {(+-1,0),(0,+-1),(+-1,+-1)}.
#[derive(Clone, Debug, Serialize)]
pub struct Sweepout {
    pub lift: Vec<(i64, i64)>,
}

/// Strip node (x mod N, k = y - x), k in 0..=N.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct Node {
    x: usize,
    k: usize,
}

/// One admissible move; `corners` lists the skipped level's pairs whose
/// values the move must also pay (anti-diagonal moves only).
struct Move {
    dx: i64,
    dk: i64,
    corners: &'static [(i64, i64)],
}

const MOVES: [Move; 8] = [
    // (dx, dy) on the cover -> (dx, dk = dy - dx)
    Move { dx: 1, dk: -1, corners: &[] },  // (1, 0)
    Move { dx: -1, dk: 1, corners: &[] },  // (-1, 0)
    Move { dx: 0, dk: 1, corners: &[] },   // (0, 1)
    Move { dx: 0, dk: -1, corners: &[] },  // (0, -1)
    Move { dx: 1, dk: 0, corners: &[] },   // (1, 1)
    Move { dx: -1, dk: 0, corners: &[] },  // (-1, -1)
    // (1, -1): skips level k-1; corners (x, y-1) -> (0, -1) and (x+1, y) -> (1, 0)
    Move { dx: 1, dk: -2, corners: &[(0, -1), (1, 0)] },
    // (-1, 1): skips level k+1; corners (x-1, y) -> (-1, 0) and (x, y+1) -> (0, 1)
    Move { dx: -1, dk: 2, corners: &[(-1, 0), (0, 1)] },
];

/// Monotone subset (both endpoints only ever move forward).
const MONOTONE_MOVES: [Move; 3] = [
    Move { dx: 1, dk: -1, corners: &[] },
    Move { dx: 0, dk: 1, corners: &[] },
    Move { dx: 1, dk: 0, corners: &[] },
];

struct Lattice<'f> {
    f: &'f DistanceField,
    n: usize,
}

impl<'f> Lattice<'f> {
    fn new(f: &'f DistanceField) -> Self {
        Self { f, n: f.n }
    }

    fn value(&self, node: Node) -> f64 {
        self.f.at(node.x, node.x + node.k)
    }

    fn id(&self, node: Node) -> usize {
        node.k * self.n + node.x
    }

    fn node_count(&self) -> usize {
        (self.n + 1) * self.n
    }

    /// Apply a move; `None` when it leaves the strip. Returns the target
    /// and the extra bottleneck cost from skipped corners.
    fn apply(&self, node: Node, mv: &Move) -> Option<(Node, f64)> {
        let k2 = node.k as i64 + mv.dk;
        if k2 < 0 || k2 > self.n as i64 {
            return None;
        }
        let x2 = (node.x as i64 + mv.dx).rem_euclid(self.n as i64) as usize;
        let mut extra = f64::NEG_INFINITY;
        for &(cdx, cdy) in mv.corners {
            let cx = (node.x as i64 + cdx).rem_euclid(self.n as i64) as usize;
            let cy = node.x as i64 + node.k as i64 + cdy;
            let ck = cy - (node.x as i64 + cdx);
            debug_assert!(ck >= 0 && ck <= self.n as i64);
            extra = extra.max(self.f.at(cx, (cx as i64 + ck) as usize));
        }
        Some((
            Node { x: x2, k: k2 as usize },
            if mv.corners.is_empty() { f64::NEG_INFINITY } else { extra },
        ))
    }
}

// ---------------------------------------------------------------------------
// Route 1: bottleneck Dijkstra
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct WidthReport {
    pub s: f64,
    pub sweepout: Sweepout,
    /// Sample indices of the bottleneck pair on the optimal sweepout.
    pub argmax: (usize, usize),
    pub argmax_pair: PairPoint,
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);
impl Eq for HeapItem {}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on the bottleneck value; index tiebreak for determinism
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-max width by bottleneck Dijkstra, with the optimal sweepout and its
/// maximal pair.
pub fn width_minmax(f: &DistanceField) -> WidthReport {
    let lat = Lattice::new(f);
    let n = f.n;
    let mut dist = vec![f64::INFINITY; lat.node_count()];
    let mut pred: Vec<Option<(Node, i8)>> = vec![None; lat.node_count()];
    let mut heap = std::collections::BinaryHeap::new();
    for x in 0..n {
        let node = Node { x, k: 0 };
        let v = lat.value(node); // zero diagonal, kept explicit
        dist[lat.id(node)] = v;
        heap.push(HeapItem(v, lat.id(node)));
    }
    let mut final_node = None;
    while let Some(HeapItem(dv, id)) = heap.pop() {
        let node = Node { x: id % n, k: id / n };
        if dv > dist[id] {
            continue;
        }
        if node.k == n {
            final_node = Some(node);
            break;
        }
        for (mi, mv) in MOVES.iter().enumerate() {
            if let Some((nb, extra)) = lat.apply(node, mv) {
                let nid = lat.id(nb);
                let cand = dv.max(lat.value(nb)).max(extra);
                if cand < dist[nid] {
                    dist[nid] = cand;
                    pred[nid] = Some((node, mi as i8));
                    heap.push(HeapItem(cand, nid));
                }
            }
        }
    }
    let end = final_node.expect("strip is connected");
    let s = dist[lat.id(end)];

    // Reconstruct in strip coordinates, expanding each anti-diagonal move
    // into its cheaper two-step detour so the bottleneck value is attained
    // at a node of the path.
    let mut rev: Vec<Node> = vec![end];
    let mut cur = end;
    while let Some((prev, mi)) = pred[lat.id(cur)] {
        let mv = &MOVES[mi as usize];
        if !mv.corners.is_empty() {
            // corners of the skipped level, as nodes
            let cy0 = prev.x as i64 + prev.k as i64 + mv.corners[0].1;
            let cx0 = (prev.x as i64 + mv.corners[0].0).rem_euclid(n as i64) as usize;
            let c0 = Node { x: cx0, k: (cy0 - (prev.x as i64 + mv.corners[0].0)) as usize };
            let cy1 = prev.x as i64 + prev.k as i64 + mv.corners[1].1;
            let cx1 = (prev.x as i64 + mv.corners[1].0).rem_euclid(n as i64) as usize;
            let c1 = Node { x: cx1, k: (cy1 - (prev.x as i64 + mv.corners[1].0)) as usize };
            let via = if lat.value(c0) <= lat.value(c1) { c0 } else { c1 };
            rev.push(via);
        }
        rev.push(prev);
        cur = prev;
    }
    rev.reverse();

    // bottleneck node (first max along the path, deterministic)
    let mut arg = rev[0];
    let mut maxv = lat.value(rev[0]);
    for &nd in &rev {
        let v = lat.value(nd);
        if v > maxv {
            maxv = v;
            arg = nd;
        }
    }
    debug_assert!((maxv - s).abs() <= 1e-12 * s.max(1.0));

    // lift to cover coordinates
    let mut lift = Vec::with_capacity(rev.len());
    let mut x_cov = rev[0].x as i64;
    lift.push((x_cov, x_cov + rev[0].k as i64));
    for w in rev.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut dx = b.x as i64 - a.x as i64;
        if dx > 1 {
            dx -= n as i64;
        }
        if dx < -1 {
            dx += n as i64;
        }
        x_cov += dx;
        lift.push((x_cov, x_cov + b.k as i64));
    }

    let argmax = (arg.x, (arg.x + arg.k) % n);
    WidthReport {
        s,
        sweepout: Sweepout { lift },
        argmax,
        argmax_pair: PairPoint::new(
            f.sample_arclen(argmax.0),
            f.sample_arclen(argmax.1),
            f.l,
        ),
    }
}

// ---------------------------------------------------------------------------
// Route 2: threshold binary search + flood fill
// ---------------------------------------------------------------------------

fn connects_at(lat: &Lattice, t: f64) -> bool {
    let n = lat.n;
    let mut seen = vec![false; lat.node_count()];
    let mut stack: Vec<Node> = Vec::new();
    for x in 0..n {
        let node = Node { x, k: 0 };
        if lat.value(node) <= t {
            seen[lat.id(node)] = true;
            stack.push(node);
        }
    }
    while let Some(node) = stack.pop() {
        if node.k == n {
            return true;
        }
        for mv in MOVES.iter() {
            if let Some((nb, extra)) = lat.apply(node, mv) {
                let nid = lat.id(nb);
                if !seen[nid] && lat.value(nb) <= t && (mv.corners.is_empty() || extra <= t) {
                    seen[nid] = true;
                    stack.push(nb);
                }
            }
        }
    }
    false
}

/// Min-max width as the smallest field value whose sublevel set connects
/// the two ends of the strip (binary search over the sorted value set).
pub fn width_threshold(f: &DistanceField) -> f64 {
    let lat = Lattice::new(f);
    let mut vals: Vec<f64> = f.d.clone();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let mut lo = 0usize; // first index known connecting is in [lo, hi]
    let mut hi = vals.len() - 1;
    debug_assert!(connects_at(&lat, vals[hi]));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if connects_at(&lat, vals[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    vals[lo]
}

// ---------------------------------------------------------------------------
// Route 3: exhaustive threshold scan (tiny fields)
// ---------------------------------------------------------------------------

fn dfs_reaches(lat: &Lattice, t: f64, moves: &[Move]) -> bool {
    let n = lat.n;
    let mut seen = vec![false; lat.node_count()];
    fn go(lat: &Lattice, node: Node, t: f64, seen: &mut [bool], moves: &[Move]) -> bool {
        if node.k == lat.n {
            return true;
        }
        for mv in moves {
            if let Some((nb, extra)) = lat.apply(node, mv) {
                let nid = lat.id(nb);
                if !seen[nid] && lat.value(nb) <= t && (mv.corners.is_empty() || extra <= t) {
                    seen[nid] = true;
                    if go(lat, nb, t, seen, moves) {
                        return true;
                    }
                }
            }
        }
        false
    }
    for x in 0..n {
        let node = Node { x, k: 0 };
        if lat.value(node) <= t && !seen[lat.id(node)] {
            seen[lat.id(node)] = true;
            if go(lat, node, t, &mut seen, moves) {
                return true;
            }
        }
    }
    false
}

fn brute_force_with_moves(f: &DistanceField, moves: &[Move]) -> Result<f64> {
    if f.n > 12 {
        return Err(Error::Config(
            "brute-force width is limited to N <= 12".into(),
        ));
    }
    let lat = Lattice::new(f);
    let mut vals: Vec<f64> = f.d.clone();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    for &t in &vals {
        if dfs_reaches(&lat, t, moves) {
            return Ok(t);
        }
    }
    unreachable!("the all-values threshold always connects")
}

/// Exhaustive width oracle: ascending scan of every field value with
/// depth-first search over all admissible paths at each threshold.
pub fn brute_force_width(f: &DistanceField) -> Result<f64> {
    brute_force_with_moves(f, &MOVES)
}

/// Same, restricted to monotone sweepouts (both endpoints move forward
/// only). Never smaller than the unrestricted width.
pub fn brute_force_width_monotone(f: &DistanceField) -> Result<f64> {
    brute_force_with_moves(f, &MONOTONE_MOVES)
}

// ---------------------------------------------------------------------------
// Diameter
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct DiameterReport {
    pub diam: f64,
    pub argmax: (usize, usize),
    pub pair: PairPoint,
}

pub fn diameter(f: &DistanceField) -> DiameterReport {
    let mut best = (0usize, 0usize);
    let mut bv = 0.0f64;
    for i in 0..f.n {
        for j in (i + 1)..f.n {
            let v = f.at(i, j);
            if v > bv {
                bv = v;
                best = (i, j);
            }
        }
    }
    DiameterReport {
        diam: bv,
        argmax: best,
        pair: PairPoint::new(f.sample_arclen(best.0), f.sample_arclen(best.1), f.l),
    }
}

// ---------------------------------------------------------------------------
// Relations report
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ConstantWidthCheck {
    /// Farthest point unique at every sample (relative argmax gap, with the
    /// near-argmax arc treated as one point).
    pub unique: bool,
    /// d(x, farthest(x)) >= diam - tol at every sample.
    pub attains_diameter: bool,
    /// x -> farthest(x) winds monotonically once around the curve.
    pub monotone: bool,
    pub verdict: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremDCheck {
    /// max over pairs of |d(x,y) - shorter-arc length|.
    pub max_deviation: f64,
    /// S = L/2 iff every distance is realised by a boundary arc.
    pub verdict: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationsReport {
    pub s: f64,
    pub diam: f64,
    pub half_length: f64,
    /// S <= diam <= L/2 within tolerance.
    pub chain_ok: bool,
    pub constant_width: ConstantWidthCheck,
    pub theorem_d: TheoremDCheck,
    /// "two critical points" / "circle of critical points" / "other",
    /// from the pairspace scan when one is supplied.
    pub critical_structure: Option<String>,
}

/// Farthest-sample map; `None` when the argmax is ambiguous beyond the
/// near-argmax arc.
fn farthest(f: &DistanceField, i: usize) -> (usize, bool) {
    let n = f.n;
    let mut arg = 0usize;
    let mut m1 = f64::NEG_INFINITY;
    for j in 0..n {
        if j == i {
            continue;
        }
        let v = f.at(i, j);
        if v > m1 {
            m1 = v;
            arg = j;
        }
    }
    // uniqueness: everything at ring distance > n/8 from the argmax must be
    // below by a relative gap (discrete sampling blurs the argmax itself)
    let mut m2 = f64::NEG_INFINITY;
    for j in 0..n {
        if j == i {
            continue;
        }
        let ring = {
            let d = (j as i64 - arg as i64).rem_euclid(n as i64) as usize;
            d.min(n - d)
        };
        if ring > n / 8 {
            m2 = m2.max(f.at(i, j));
        }
    }
    let unique = m2 < m1 * (1.0 - tol::FARTHEST_GAP_REL);
    (arg, unique)
}

pub fn relations_report(
    curve: &BoundaryCurve,
    f: &DistanceField,
    scan: Option<&ScanOutcome>,
) -> RelationsReport {
    let n = f.n;
    let wr = width_minmax(f);
    let dr = diameter(f);
    let half = 0.5 * f.l;
    let chain_ok = wr.s <= dr.diam + 1e-6 && dr.diam <= half + 1e-6;

    // constant-width tests
    let mut unique = true;
    let mut attains = true;
    let mut phis = Vec::with_capacity(n);
    for i in 0..n {
        let (phi, uq) = farthest(f, i);
        unique &= uq;
        attains &= f.at(i, phi) >= dr.diam * (1.0 - 1e-3);
        phis.push(phi);
    }
    // monotone winding: unwrap phi and demand non-decreasing (1-sample
    // jitter allowed) with total winding exactly one turn
    let mut monotone = true;
    let mut unwrapped = vec![phis[0] as i64];
    for i in 1..n {
        let prev = *unwrapped.last().unwrap();
        let mut cur = phis[i] as i64;
        while cur < prev - n as i64 / 2 {
            cur += n as i64;
        }
        if cur < prev - 1 {
            monotone = false;
        }
        unwrapped.push(cur);
    }
    let closing = phis[0] as i64 + n as i64;
    if closing < *unwrapped.last().unwrap() - 1 || (closing - unwrapped[0]) != n as i64 {
        monotone = false;
    }
    let cw_verdict = unique && attains && monotone;

    // Theorem D: every distance equals the shorter boundary arc
    let mut max_dev = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let arc = curve.intrinsic_distance(f.sample_arclen(i), f.sample_arclen(j));
            max_dev = max_dev.max((f.at(i, j) - arc).abs());
        }
    }
    let theorem_d = TheoremDCheck {
        max_deviation: max_dev,
        verdict: max_dev <= tol::TAG_TOL * f.l,
    };

    let critical_structure = scan.map(|sc| {
        let nontrivial: Vec<_> = sc
            .components
            .iter()
            .filter(|c| {
                !c.representative
                    .classification
                    .contains(&pairspace::Classification::Trivial)
            })
            .collect();
        if nontrivial.len() == 1 && nontrivial[0].family && nontrivial[0].coverage >= 0.9 {
            "circle of critical points".to_string()
        } else if nontrivial.len() == 2 {
            "two critical points".to_string()
        } else {
            format!("other ({} components)", nontrivial.len())
        }
    });

    RelationsReport {
        s: wr.s,
        diam: dr.diam,
        half_length: half,
        chain_ok,
        constant_width: ConstantWidthCheck {
            unique,
            attains_diameter: attains,
            monotone,
            verdict: cw_verdict,
        },
        theorem_d,
        critical_structure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{BoundaryCurve, CurveSpec, InwardSide};
    use crate::surface::{ChartKind, SurfaceChart, TAU};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
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

    fn random_field(n: usize, seed: u64) -> DistanceField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v: f64 = rng.gen_range(0.1..1.0);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        DistanceField::from_matrix(n, 1.0, d).unwrap()
    }

    #[test]
    fn field_on_circle_has_chord_lengths() {
        let curve = unit_circle(64);
        let f = DistanceField::compute(&curve, 8).unwrap();
        assert_relative_eq!(f.at(0, 4), 2.0, epsilon = 1e-9); // diameter
        for i in 0..8 {
            assert_eq!(f.at(i, i), 0.0);
            for j in 0..8 {
                assert_relative_eq!(f.at(i, j), f.at(j, i), epsilon = 0.0);
            }
        }
        // chord between samples i and j: 2 sin(pi |i-j| / 8)
        assert_relative_eq!(
            f.at(0, 1),
            2.0 * (std::f64::consts::PI / 8.0).sin(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn serial_and_parallel_fields_match_exactly() {
        let curve = unit_circle(64);
        let a = DistanceField::compute(&curve, 16).unwrap();
        let b = DistanceField::compute_serial(&curve, 16).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(a.at(i, j), b.at(i, j));
            }
        }
    }

    #[test]
    fn cylinder_waist_field_is_arc_distance() {
        let chart = Arc::new(
            SurfaceChart::new(
                ChartKind::FlatCylinder { circumference: TAU },
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
        let f = DistanceField::compute(&curve, 8).unwrap();
        let l = curve.length();
        for i in 0..8usize {
            for j in 0..8usize {
                let ring = ((j as i64 - i as i64).rem_euclid(8)) as usize;
                let expect = (l / 8.0) * ring.min(8 - ring) as f64;
                assert_relative_eq!(f.at(i, j), expect, epsilon = 1e-9);
            }
        }
        // Theorem D equality: width = L/2 exactly on the lattice
        let w = width_minmax(&f);
        assert_relative_eq!(w.s, l / 2.0, epsilon = 1e-12);
        let rel = relations_report(&curve, &f, None);
        assert!(rel.theorem_d.verdict);
        assert!(rel.chain_ok);
    }

    #[test]
    fn circle_width_is_the_diameter() {
        let curve = unit_circle(64);
        let f = DistanceField::compute(&curve, 64).unwrap();
        let w = width_minmax(&f);
        assert_relative_eq!(w.s, 2.0, epsilon = 0.01);
        let d = diameter(&f);
        assert_relative_eq!(d.diam, 2.0, epsilon = 1e-9);
        // bottleneck pair is antipodal
        let ring = (w.argmax.0 as i64 - w.argmax.1 as i64).rem_euclid(64);
        assert_eq!(ring.min(64 - ring), 32);
        let rel = relations_report(&curve, &f, None);
        assert!(rel.constant_width.verdict);
        assert!(rel.chain_ok);
        assert!(!rel.theorem_d.verdict);
    }

    #[test]
    fn ellipse_width_is_minor_axis() {
        let curve = BoundaryCurve::build(
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
        let f = DistanceField::compute(&curve, 128).unwrap();
        let w = width_minmax(&f);
        assert_relative_eq!(w.s, 2.0, epsilon = 0.02);
        let d = diameter(&f);
        assert_relative_eq!(d.diam, 4.0, epsilon = 0.01);
        assert!(w.s < d.diam && d.diam < 0.5 * curve.length());
    }

    #[test]
    fn sweepout_lift_is_valid() {
        let curve = unit_circle(64);
        let f = DistanceField::compute(&curve, 32).unwrap();
        let w = width_minmax(&f);
        let lift = &w.sweepout.lift;
        let n = 32i64;
        assert_eq!(lift.first().map(|&(x, y)| y - x), Some(0));
        assert_eq!(lift.last().map(|&(x, y)| y - x), Some(n));
        for win in lift.windows(2) {
            let (dx, dy) = (win[1].0 - win[0].0, win[1].1 - win[0].1);
            assert!(dx.abs() <= 1 && dy.abs() <= 1 && (dx, dy) != (0, 0));
            let k = win[1].1 - win[1].0;
            assert!((0..=n).contains(&k));
        }
    }

    #[test]
    fn three_routes_agree_on_random_fields() {
        for seed in 0..8 {
            let f = random_field(8, seed);
            let w = width_minmax(&f);
            let t = width_threshold(&f);
            let b = brute_force_width(&f).unwrap();
            assert_eq!(w.s, b, "dijkstra vs dfs, seed {seed}");
            assert_eq!(t, b, "threshold vs dfs, seed {seed}");
            // the bottleneck is attained on the reported pair
            assert_relative_eq!(f.at(w.argmax.0, w.argmax.1), w.s, epsilon = 1e-12);
            // width >= cheapest equal-arc pair (every sweepout pays level N/2)
            let floor = (0..8).map(|i| f.at(i, i + 4)).fold(f64::INFINITY, f64::min);
            assert!(w.s >= floor - 1e-15);
            // monotone restriction can only raise the value
            let m = brute_force_width_monotone(&f).unwrap();
            assert!(m >= b);
        }
    }

    #[test]
    fn brute_force_rejects_large_fields() {
        let f = random_field(16, 1);
        assert!(brute_force_width(&f).is_err());
    }
}
