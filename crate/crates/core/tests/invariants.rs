//! Cross-route and structural invariants of the public API: the two width
//! routes agree bit-for-bit, sweepouts are admissible cover paths, distances
//! are symmetric metrics, criticality certificates check out against the
//! signatures they certify, and the shortening flow never lengthens.

use proptest::prelude::*;
use std::sync::Arc;
use sweepwidth::birkhoff::{birkhoff_shorten, free_boundary_index, ShortenOutcome};
use sweepwidth::curve::{BoundaryCurve, CurveSpec, InwardSide};
use sweepwidth::geodesic::{boundary_pair, realize};
use sweepwidth::minmax::{brute_force_width, width_minmax, width_threshold, DistanceField};
use sweepwidth::pairspace::{classify_pair, scan_components, Certificate, PairPoint, Verdict};
use sweepwidth::surface::{ChartKind, SurfaceChart, SurfacePoint, TAU};

const PI: f64 = std::f64::consts::PI;

fn plane(extent: f64) -> Arc<SurfaceChart> {
    Arc::new(
        SurfaceChart::new(ChartKind::EuclideanPlane, (-extent, extent), (-extent, extent))
            .unwrap(),
    )
}

fn unit_circle(samples: usize) -> BoundaryCurve {
    BoundaryCurve::build(
        plane(2.0),
        &CurveSpec::Circle {
            center: (0.0, 0.0),
            radius: 1.0,
        },
        samples,
        true,
    )
    .unwrap()
}

fn ellipse(samples: usize) -> BoundaryCurve {
    let chart = Arc::new(
        SurfaceChart::new(ChartKind::EuclideanPlane, (-3.0, 3.0), (-2.0, 2.0)).unwrap(),
    );
    BoundaryCurve::build(
        chart,
        &CurveSpec::Ellipse { a: 2.0, b: 1.0 },
        samples,
        true,
    )
    .unwrap()
}

fn hemisphere(samples: usize) -> BoundaryCurve {
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
        samples,
        true,
    )
    .unwrap()
}

/// Random symmetric zero-diagonal matrix as a synthetic distance field.
fn random_field(upper: Vec<f64>) -> DistanceField {
    let n = 8;
    assert_eq!(upper.len(), n * (n - 1) / 2);
    let mut d = vec![0.0; n * n];
    let mut it = upper.into_iter();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = it.next().unwrap();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    DistanceField::from_matrix(n, 10.0, d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // The bottleneck-Dijkstra width and the exhaustive sweepout search must
    // pick the same value bit-for-bit: both only ever select entries of the
    // field, never combine them arithmetically.
    #[test]
    fn width_routes_agree_on_random_fields(
        upper in proptest::collection::vec(0.5f64..10.0, 28)
    ) {
        let f = random_field(upper);
        let report = width_minmax(&f);
        let brute = brute_force_width(&f).unwrap();
        prop_assert_eq!(report.s, brute);
        prop_assert_eq!(report.s, width_threshold(&f));
        prop_assert_eq!(report.s, f.at(report.argmax.0, report.argmax.1));
    }

    // Pair canonicalisation is invariant under swapping the legs and
    // shifting either by a full period.
    #[test]
    fn pair_points_canonicalise(a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let l = 10.0;
        let p = PairPoint::new(a, b, l);
        prop_assert!(p.approx_eq(&PairPoint::new(b, a, l), l));
        prop_assert!(p.approx_eq(&PairPoint::new(a + l, b, l), l));
        prop_assert!(p.approx_eq(&PairPoint::new(a, b - l, l), l));
    }

    // On a flat chart connectors are straight segments, so the boundary
    // distance is the plane metric restricted to the curve: symmetric and
    // obeying the triangle inequality.
    #[test]
    fn flat_distance_is_a_metric(
        s in proptest::collection::vec(0.0f64..(TAU), 3)
    ) {
        let curve = unit_circle(64);
        let l = curve.length();
        let scale = l / TAU;
        let d = |x: f64, y: f64| {
            boundary_pair(&curve, x * scale, y * scale).unwrap().distance()
        };
        let (ab, ba) = (d(s[0], s[1]), d(s[1], s[0]));
        prop_assert!((ab - ba).abs() <= 1e-9 * ab.max(1.0));
        let (bc, ac) = (d(s[1], s[2]), d(s[0], s[2]));
        prop_assert!(ac <= ab + bc + 1e-9);
    }
}

#[test]
fn parallel_and_serial_fields_are_identical() {
    let curve = ellipse(128);
    let a = DistanceField::compute(&curve, 32).unwrap();
    let b = DistanceField::compute_serial(&curve, 32).unwrap();
    for i in 0..32 {
        for j in 0..32 {
            assert_eq!(a.at(i, j), b.at(i, j), "entry ({i}, {j})");
        }
    }
}

#[test]
fn sweepout_is_an_admissible_cover_path() {
    let curve = ellipse(256);
    let f = DistanceField::compute(&curve, 64).unwrap();
    let report = width_minmax(&f);
    let lift = &report.sweepout.lift;
    let n = f.n() as i64;
    assert_eq!(lift.first().map(|&(x, y)| y - x), Some(0));
    assert_eq!(lift.last().map(|&(x, y)| y - x), Some(n));
    for w in lift.windows(2) {
        let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        assert!(
            matches!((dx, dy), (0, 1) | (0, -1) | (1, 0) | (-1, 0) | (1, 1) | (-1, -1)),
            "inadmissible step ({dx}, {dy})"
        );
        let k = w[1].1 - w[1].0;
        assert!((0..=n).contains(&k), "left the strip: k = {k}");
    }
    let node_max = lift
        .iter()
        .map(|&(x, y)| f.at(x.rem_euclid(n) as usize, y.rem_euclid(n) as usize))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(node_max <= report.s + 1e-12);
    assert_eq!(report.s, f.at(report.argmax.0, report.argmax.1));
}

#[test]
fn sphere_distance_is_symmetric() {
    let curve = hemisphere(128);
    let l = curve.length();
    for frac in [0.23, 0.5] {
        let a = boundary_pair(&curve, 0.0, frac * l).unwrap().distance();
        let b = boundary_pair(&curve, frac * l, 0.0).unwrap().distance();
        assert!(
            (a - b).abs() <= 1e-6 * a.max(1.0),
            "d(0, {frac} L) = {a} vs reversed {b}"
        );
    }
}

#[test]
fn realized_connector_matches_its_record() {
    let curve = hemisphere(128);
    let l = curve.length();
    let pair = boundary_pair(&curve, 0.0, 0.31 * l).unwrap();
    let c = &pair.connectors[0];
    let g = realize(&curve, c).unwrap();
    assert!((g.length - c.length).abs() <= 1e-6 * c.length);
    let start = curve.point_at(c.s_p);
    let end = curve.point_at(c.s_q);
    let first = g.points.first().unwrap();
    let last = g.points.last().unwrap();
    assert!((first.u - start.u).abs() + (first.v - start.v).abs() <= 1e-6);
    assert!((last.u - end.u).hypot(last.v - end.v) <= 1e-3);
}

#[test]
fn certificates_match_the_signatures_they_certify() {
    let curve = ellipse(256);
    let scan = scan_components(&curve, 64).unwrap();
    assert!(!scan.components.is_empty());
    for comp in &scan.components {
        let rep = &comp.representative;
        assert_eq!(rep.verdict, Verdict::Critical);
        assert!(!comp.members.is_empty());
        assert!(comp.coverage > 0.0 && comp.coverage <= 1.0);
        match &rep.certificate {
            Certificate::Witness { lambdas, .. } => {
                assert_eq!(lambdas.len(), rep.signatures.len());
                let sum: f64 = lambdas.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-9, "lambdas sum to {sum}");
                assert!(lambdas.iter().all(|&x| x >= -1e-12));
                let (mut zp, mut zq) = (0.0, 0.0);
                for (lam, sig) in lambdas.iter().zip(&rep.signatures) {
                    zp += lam * sig.0;
                    zq += lam * sig.1;
                }
                assert!(
                    zp.hypot(zq) <= 1e-7,
                    "hull combination misses the origin by {}",
                    zp.hypot(zq)
                );
            }
            Certificate::Separating { .. } => {
                panic!("critical verdict with a separating certificate")
            }
        }
    }
}

#[test]
fn regular_pair_carries_a_separating_certificate() {
    let curve = ellipse(256);
    let l = curve.length();
    // an off-axis pair is regular: the distance strictly decreases when both
    // feet slide towards the nearer axis
    let report = classify_pair(&curve, PairPoint::new(0.1 * l, 0.45 * l, l)).unwrap();
    assert_eq!(report.verdict, Verdict::Regular);
    match &report.certificate {
        Certificate::Separating { v1, v2, margin } => {
            assert!(*margin > 0.0);
            for sig in &report.signatures {
                let pay = v1 * sig.0 + v2 * sig.1;
                assert!(
                    pay <= -margin + 1e-12,
                    "separating direction fails on signature {sig:?}"
                );
            }
        }
        Certificate::Witness { .. } => panic!("regular verdict with a hull witness"),
    }
}

#[test]
fn shortening_trace_never_increases() {
    let curve = unit_circle(1024);
    // bent three-leg seed across the disc
    let seed = [
        SurfacePoint::new(-1.0, 0.0),
        SurfacePoint::new(-0.3, 0.35),
        SurfacePoint::new(0.4, -0.25),
        SurfacePoint::new(1.0, 0.0),
    ];
    let report = birkhoff_shorten(&curve, &seed, 600).unwrap();
    for w in report.trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "length increased: {} -> {}", w[0], w[1]);
    }
    match &report.outcome {
        ShortenOutcome::FreeBoundaryGeodesic { path } => {
            assert!((path.length - 2.0).abs() <= 1e-3);
        }
        ShortenOutcome::Point { .. } => panic!("diameter seed collapsed to a point"),
    }
}

#[test]
fn negative_rayleigh_quotient_forces_instability() {
    let curve = unit_circle(1024);
    let l = curve.length();
    let pair = boundary_pair(&curve, 0.0, 0.5 * l).unwrap();
    let g = realize(&curve, &pair.connectors[0]).unwrap();
    let idx = free_boundary_index(&curve, &g).unwrap();
    // flat disc diameter: -int K - A_p - A_q = -2 over length 2
    assert!((idx.rayleigh_constant + 1.0).abs() <= 1e-3);
    assert!(idx.rayleigh_constant < 0.0);
    assert!(idx.index >= 1);
}

#[test]
fn scan_is_deterministic() {
    let curve = ellipse(256);
    let a = serde_json::to_string(&scan_components(&curve, 48).unwrap()).unwrap();
    let b = serde_json::to_string(&scan_components(&curve, 48).unwrap()).unwrap();
    assert_eq!(a, b);
}
