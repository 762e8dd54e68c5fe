//! Subcommand implementations. Every runner is a pure function from a
//! fixture configuration to artifact file contents plus a summary, so the
//! binary and the test suites exercise identical code paths and
//! determinism can be checked by comparing returned bytes.

use std::fmt::Write as _;

use serde_json::{json, Value};
use sweepwidth::birkhoff;
use sweepwidth::curve::BoundaryCurve;
use sweepwidth::geodesic::{self, GeodesicPath};
use sweepwidth::minmax::{self, DistanceField};
use sweepwidth::pairspace;
use sweepwidth::planar;
use sweepwidth::{Error, Result};

use crate::config::RunConfig;
use crate::render::Figure;

#[derive(Clone, Copy, Debug)]
pub enum Command {
    Width,
    Diameter,
    Critical,
    Geodesic { from: f64, to: f64 },
    Birkhoff { from: f64, to: f64, iters: usize },
    Fbg,
    Planar,
    Report,
    Render,
}

pub struct Outcome {
    /// Human-readable summary; numbers carry 9 significant digits.
    pub text: String,
    /// Machine summary (emitted on stdout under --json).
    pub summary: Value,
    /// Artifact files as (file name, contents).
    pub files: Vec<(String, String)>,
}

/// 9 significant digits, scientific.
fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// A JSON number rounded to 9 significant digits (summaries quote the same
/// precision the text output does).
fn round9(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::from(format!("{x:.8e}").parse::<f64>().unwrap())
}

pub fn run(cfg: &RunConfig, cmd: Command) -> Result<Outcome> {
    let curve = cfg.build_curve()?;
    match cmd {
        Command::Width => width(cfg, &curve),
        Command::Diameter => diameter(cfg, &curve),
        Command::Critical => critical(cfg, &curve),
        Command::Geodesic { from, to } => geodesic_cmd(cfg, &curve, from, to),
        Command::Birkhoff { from, to, iters } => birkhoff_cmd(cfg, &curve, from, to, iters),
        Command::Fbg => fbg(cfg, &curve),
        Command::Planar => planar_cmd(cfg, &curve),
        Command::Report => report(cfg, &curve),
        Command::Render => render(cfg, &curve),
    }
}

fn path_csv(g: &GeodesicPath) -> String {
    let mut csv = String::from("i,u,v\n");
    for (i, p) in g.points.iter().enumerate() {
        let _ = writeln!(csv, "{i},{},{}", sig9(p.u), sig9(p.v));
    }
    csv
}

fn width(cfg: &RunConfig, curve: &BoundaryCurve) -> Result<Outcome> {
    let field = DistanceField::compute(curve, cfg.grid)?;
    let wr = minmax::width_minmax(&field);
    let n = field.n();

    let mut csv = String::from("step,x,y,s1,s2,distance\n");
    for (k, &(x, y)) in wr.sweepout.lift.iter().enumerate() {
        let i = x.rem_euclid(n as i64) as usize;
        let j = y.rem_euclid(n as i64) as usize;
        let _ = writeln!(
            csv,
            "{k},{x},{y},{},{},{}",
            sig9(field.sample_arclen(i)),
            sig9(field.sample_arclen(j)),
            sig9(field.at(i, j)),
        );
    }

    let mut text = String::new();
    let _ = writeln!(text, "S = {}", sig9(wr.s));
    let _ = writeln!(
        text,
        "maximal pair: samples ({}, {}), s = ({}, {})",
        wr.argmax.0,
        wr.argmax.1,
        sig9(wr.argmax_pair.s1),
        sig9(wr.argmax_pair.s2),
    );
    let _ = writeln!(text, "sweepout steps = {}", wr.sweepout.lift.len());

    Ok(Outcome {
        text,
        summary: json!({
            "command": "width",
            "name": cfg.name,
            "grid": n,
            "s": round9(wr.s),
            "argmax": {
                "i": wr.argmax.0,
                "j": wr.argmax.1,
                "s1": round9(wr.argmax_pair.s1),
                "s2": round9(wr.argmax_pair.s2),
            },
            "sweepout_steps": wr.sweepout.lift.len(),
        }),
        files: vec![(format!("{}_sweepout.csv", cfg.name), csv)],
    })
}

fn diameter(cfg: &RunConfig, curve: &BoundaryCurve) -> Result<Outcome> {
    let field = DistanceField::compute(curve, cfg.grid)?;
    let dr = minmax::diameter(&field);

    let mut text = String::new();
    let _ = writeln!(text, "diam = {}", sig9(dr.diam));
    let _ = writeln!(
        text,
        "argmax pair: samples ({}, {}), s = ({}, {})",
        dr.argmax.0,
        dr.argmax.1,
        sig9(dr.pair.s1),
        sig9(dr.pair.s2),
    );

    Ok(Outcome {
        text,
        summary: json!({
            "command": "diameter",
            "name": cfg.name,
            "grid": field.n(),
            "diam": round9(dr.diam),
            "argmax": {
                "i": dr.argmax.0,
                "j": dr.argmax.1,
                "s1": round9(dr.pair.s1),
                "s2": round9(dr.pair.s2),
            },
        }),
        files: Vec::new(),
    })
}

fn critical(cfg: &RunConfig, curve: &BoundaryCurve) -> Result<Outcome> {
    let scan = pairspace::scan_components(curve, cfg.grid)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "critical components: {} (grid {})",
        scan.components.len(),
        scan.grid
    );
    for (k, c) in scan.components.iter().enumerate() {
        let r = &c.representative;
        let _ = writeln!(
            text,
            "  [{k}] pair s = ({}, {})  d = {}  {:?}  family = {}  coverage = {:.3}",
            sig9(r.pair.s1),
            sig9(r.pair.s2),
            sig9(r.distance),
            r.verdict,
            c.family,
            c.coverage,
        );
    }

    let components: Vec<Value> = scan
        .components
        .iter()
        .map(|c| {
            json!({
                "s1": round9(c.representative.pair.s1),
                "s2": round9(c.representative.pair.s2),
                "distance": round9(c.representative.distance),
                "verdict": c.representative.verdict,
                "family": c.family,
                "coverage": round9(c.coverage),
                "cells": c.members.len(),
            })
        })
        .collect();

    Ok(Outcome {
        text,
        summary: json!({
            "command": "critical",
            "name": cfg.name,
            "grid": scan.grid,
            "components": components,
        }),
        files: vec![(
            format!("{}_critical.json", cfg.name),
            serde_json::to_string_pretty(&scan)? + "\n",
        )],
    })
}

fn geodesic_cmd(cfg: &RunConfig, curve: &BoundaryCurve, from: f64, to: f64) -> Result<Outcome> {
    let set = geodesic::boundary_pair(curve, curve.wrap_s(from), curve.wrap_s(to))?;
    if set.connectors.is_empty() {
        return Err(Error::NoConnector {
            max_len: 0.55 * curve.length(),
        });
    }

    let mut files = vec![(
        format!("{}_geodesic.json", cfg.name),
        serde_json::to_string_pretty(&set)? + "\n",
    )];
    let mut text = String::new();
    let _ = writeln!(text, "d = {}", sig9(set.distance()));
    let _ = writeln!(
        text,
        "connectors = {} (family = {})",
        set.connectors.len(),
        set.family
    );
    for (k, c) in set.connectors.iter().enumerate() {
        let _ = writeln!(
            text,
            "  [{k}] len = {}  sigma = ({}, {})  {}",
            sig9(c.length),
            sig9(c.sigma_p),
            sig9(c.sigma_q),
            if c.boundary_arc { "boundary arc" } else { "interior" },
        );
        let g = geodesic::realize(curve, c)?;
        files.push((format!("{}_geodesic_{k}.csv", cfg.name), path_csv(&g)));
    }

    let connectors: Vec<Value> = set
        .connectors
        .iter()
        .map(|c| {
            json!({
                "length": round9(c.length),
                "sigma_p": round9(c.sigma_p),
                "sigma_q": round9(c.sigma_q),
                "boundary_arc": c.boundary_arc,
                "residual": round9(c.residual),
            })
        })
        .collect();

    Ok(Outcome {
        text,
        summary: json!({
            "command": "geodesic",
            "name": cfg.name,
            "s1": round9(set.s_p),
            "s2": round9(set.s_q),
            "distance": round9(set.distance()),
            "family": set.family,
            "connectors": connectors,
        }),
        files,
    })
}

/// Evenly subsample a realized path to at most `m` polyline vertices.
fn subsample(g: &GeodesicPath, m: usize) -> Vec<sweepwidth::surface::SurfacePoint> {
    let n = g.points.len();
    if n <= m {
        return g.points.clone();
    }
    (0..m)
        .map(|i| g.points[(i * (n - 1)) / (m - 1)])
        .collect()
}

fn birkhoff_cmd(
    cfg: &RunConfig,
    curve: &BoundaryCurve,
    from: f64,
    to: f64,
    iters: usize,
) -> Result<Outcome> {
    let set = geodesic::boundary_pair(curve, curve.wrap_s(from), curve.wrap_s(to))?;
    let Some(best) = set.connectors.first() else {
        return Err(Error::NoConnector {
            max_len: 0.55 * curve.length(),
        });
    };
    let seed = subsample(&geodesic::realize(curve, best)?, 17);
    let report = birkhoff::birkhoff_shorten(curve, &seed, iters)?;

    let outcome_kind = match &report.outcome {
        birkhoff::ShortenOutcome::Point { .. } => "point",
        birkhoff::ShortenOutcome::FreeBoundaryGeodesic { .. } => "free_boundary_geodesic",
    };
    let final_len = report.trace.last().copied().unwrap_or(f64::NAN);

    let mut text = String::new();
    let _ = writeln!(text, "outcome = {outcome_kind}");
    let _ = writeln!(text, "iterations = {}", report.iterations);
    let _ = writeln!(text, "final length = {}", sig9(final_len));
    let _ = writeln!(text, "self-intersecting = {}", report.self_intersecting);

    Ok(Outcome {
        text,
        summary: json!({
            "command": "birkhoff",
            "name": cfg.name,
            "outcome": outcome_kind,
            "iterations": report.iterations,
            "final_length": round9(final_len),
            "self_intersecting": report.self_intersecting,
        }),
        files: vec![
            (format!("{}_birkhoff_trace.csv", cfg.name), report.trace_csv()),
            (
                format!("{}_birkhoff.json", cfg.name),
                serde_json::to_string_pretty(&report)? + "\n",
            ),
        ],
    })
}

fn fbg(cfg: &RunConfig, curve: &BoundaryCurve) -> Result<Outcome> {
    let chords = birkhoff::find_free_boundary_geodesics(curve, cfg.scan)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "free-boundary chords: {} (scan {})",
        chords.len(),
        cfg.scan
    );
    let mut files = Vec::new();
    let mut items = Vec::new();
    for (k, g) in chords.iter().enumerate() {
        let idx = birkhoff::free_boundary_index(curve, &g.path)?;
        let (sp, sq) = g.path.sigma.unwrap_or((f64::NAN, f64::NAN));
        let _ = writeln!(
            text,
            "  [{k}] pair s = ({}, {})  len = {}  sigma = ({}, {})  index = {}  nullity = {}{}",
            sig9(g.pair.s1),
            sig9(g.pair.s2),
            sig9(g.path.length),
            sig9(sp),
            sig9(sq),
            idx.index,
            idx.nullity,
            if g.family {
                format!("  family ({} members)", g.members)
            } else {
                String::new()
            },
        );
        files.push((format!("{}_fbg_{k}.csv", cfg.name), path_csv(&g.path)));
        files.push((
            format!("{}_fbg_{k}_eigen.csv", cfg.name),
            idx.eigenvalues_csv(),
        ));
        items.push(json!({
            "s1": round9(g.pair.s1),
            "s2": round9(g.pair.s2),
            "length": round9(g.path.length),
            "sigma_p": round9(sp),
            "sigma_q": round9(sq),
            "family": g.family,
            "members": g.members,
            "index": idx.index,
            "nullity": idx.nullity,
            "eigenvalues": idx.eigenvalues.iter().map(|&l| round9(l)).collect::<Vec<_>>(),
            "rayleigh_constant": round9(idx.rayleigh_constant),
        }));
    }
    files.insert(
        0,
        (
            format!("{}_fbg.json", cfg.name),
            serde_json::to_string_pretty(&items)? + "\n",
        ),
    );

    Ok(Outcome {
        text,
        summary: json!({
            "command": "fbg",
            "name": cfg.name,
            "scan": cfg.scan,
            "chords": items,
        }),
        files,
    })
}

fn planar_cmd(cfg: &RunConfig, curve: &BoundaryCurve) -> Result<Outcome> {
    let table = planar::width_table(curve, cfg.grid.max(64))?;
    let ext = planar::planar_width_diameter(curve)?;
    let crofton = match planar::cauchy_crofton_check(curve) {
        Ok(c) => Some(c),
        Err(Error::Curve(_)) => None,
        Err(e) => return Err(e),
    };

    let mut text = String::new();
    let _ = writeln!(text, "w = {}  (theta = {})", sig9(ext.w), sig9(ext.argmin));
    let _ = writeln!(
        text,
        "diam = {}  (theta = {})",
        sig9(ext.diam),
        sig9(ext.argmax)
    );
    match &crofton {
        Some(c) => {
            let _ = writeln!(
                text,
                "crofton: integral = {}  2L = {}  deviation = {}",
                sig9(c.integral),
                sig9(c.two_l),
                sig9(c.deviation),
            );
            let _ = writeln!(
                text,
                "w/L = {}  ratio_ok = {}  equality = {}",
                sig9(c.ratio),
                c.ratio_ok,
                c.equality
            );
        }
        None => {
            let _ = writeln!(text, "crofton: skipped (boundary not convex)");
        }
    }

    Ok(Outcome {
        text,
        summary: json!({
            "command": "planar",
            "name": cfg.name,
            "w": round9(ext.w),
            "diam": round9(ext.diam),
            "argmin": round9(ext.argmin),
            "argmax": round9(ext.argmax),
            "crofton": crofton,
        }),
        files: vec![(format!("{}_width_table.csv", cfg.name), table.csv())],
    })
}

fn report(cfg: &RunConfig, curve: &BoundaryCurve) -> Result<Outcome> {
    let field = DistanceField::compute(curve, cfg.grid)?;
    let scan = pairspace::scan_components(curve, cfg.grid)?;
    let star = if curve.declared_convex() {
        Some(birkhoff::property_star_check(curve, cfg.scan)?)
    } else {
        None
    };
    let rel = minmax::relations_report(curve, &field, Some(&scan));

    let mut text = String::new();
    let _ = writeln!(
        text,
        "S = {}  diam = {}  L/2 = {}",
        sig9(rel.s),
        sig9(rel.diam),
        sig9(rel.half_length)
    );
    let _ = writeln!(text, "chain S <= diam <= L/2: {}", rel.chain_ok);
    let _ = writeln!(text, "constant width: {}", rel.constant_width.verdict);
    let _ = writeln!(
        text,
        "boundary-arc distances (S = L/2 test): max deviation = {}, verdict = {}",
        sig9(rel.theorem_d.max_deviation),
        rel.theorem_d.verdict
    );
    if let Some(cs) = &rel.critical_structure {
        let _ = writeln!(text, "critical structure: {cs}");
    }
    let _ = writeln!(text, "critical components = {}", scan.components.len());
    match &star {
        Some(st) => {
            let _ = writeln!(
                text,
                "stable-chord check: holds = {} (examined {}, witnesses {})",
                st.holds,
                st.examined,
                st.witnesses.len()
            );
        }
        None => {
            let _ = writeln!(text, "stable-chord check: skipped (not declared convex)");
        }
    }

    Ok(Outcome {
        text,
        summary: json!({
            "command": "report",
            "name": cfg.name,
            "grid": field.n(),
            "relations": rel,
            "star_holds": star.as_ref().map(|s| s.holds),
            "star_witnesses": star.as_ref().map(|s| s.witnesses.len()),
        }),
        files: vec![(
            format!("{}_report.json", cfg.name),
            serde_json::to_string_pretty(&json!({ "relations": rel, "star": star }))? + "\n",
        )],
    })
}

fn render(cfg: &RunConfig, curve: &BoundaryCurve) -> Result<Outcome> {
    let field = DistanceField::compute(curve, cfg.grid)?;
    let wr = minmax::width_minmax(&field);
    let set = geodesic::boundary_pair(curve, wr.argmax_pair.s1, wr.argmax_pair.s2)?;
    let chords = birkhoff::find_free_boundary_geodesics(curve, cfg.scan)?;

    let mut fig = Figure::new(curve.chart());
    fig.closed_curve(curve.samples().to_vec(), "curve");
    for g in &chords {
        fig.path(&g.path, "chord");
        if let (Some(a), Some(b)) = (g.path.points.first(), g.path.points.last()) {
            fig.marker(*a, "foot");
            fig.marker(*b, "foot");
        }
    }
    let mut sweeps = 0usize;
    for c in set.minimizers() {
        let g = geodesic::realize(curve, c)?;
        fig.path(&g, "sweep");
        sweeps += 1;
    }
    fig.marker(curve.point_at(wr.argmax_pair.s1), "mark");
    fig.marker(curve.point_at(wr.argmax_pair.s2), "mark");
    let svg = fig.svg();

    let text = format!(
        "{}.svg: curve + {sweeps} maximal-pair geodesics + {} chords\n",
        cfg.name,
        chords.len()
    );
    Ok(Outcome {
        text,
        summary: json!({
            "command": "render",
            "name": cfg.name,
            "s": round9(wr.s),
            "sweep_geodesics": sweeps,
            "chords": chords.len(),
        }),
        files: vec![(format!("{}.svg", cfg.name), svg)],
    })
}
