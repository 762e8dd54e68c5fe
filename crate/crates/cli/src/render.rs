//! Deterministic SVG figures drawn in chart coordinates: the boundary
//! curve, the maximal geodesics of the optimal sweepout, and the
//! free-boundary chords. Coordinates are formatted with a fixed precision
//! so repeated runs emit byte-identical files.

use sweepwidth::geodesic::GeodesicPath;
use sweepwidth::surface::{SurfaceChart, SurfacePoint};

const WIDTH_PX: f64 = 720.0;
const MARGIN_FRAC: f64 = 0.06;

pub struct Figure {
    /// (polyline in chart coordinates, css class).
    layers: Vec<(Vec<SurfacePoint>, &'static str)>,
    markers: Vec<(SurfacePoint, &'static str)>,
    period: Option<f64>,
}

impl Figure {
    pub fn new(chart: &SurfaceChart) -> Self {
        Figure {
            layers: Vec::new(),
            markers: Vec::new(),
            period: chart.period(),
        }
    }

    pub fn closed_curve(&mut self, mut pts: Vec<SurfacePoint>, class: &'static str) {
        if let Some(first) = pts.first().copied() {
            pts.push(first);
        }
        self.layers.push((pts, class));
    }

    pub fn path(&mut self, g: &GeodesicPath, class: &'static str) {
        self.layers.push((g.points.clone(), class));
    }

    pub fn marker(&mut self, p: SurfacePoint, class: &'static str) {
        self.markers.push((p, class));
    }

    /// Split a polyline where the u coordinate jumps across the periodic
    /// seam, so wrapped paths do not smear across the whole figure.
    fn split_segments(&self, pts: &[SurfacePoint]) -> Vec<Vec<SurfacePoint>> {
        let Some(period) = self.period else {
            return vec![pts.to_vec()];
        };
        let mut out = Vec::new();
        let mut cur: Vec<SurfacePoint> = Vec::new();
        for &p in pts {
            if let Some(&prev) = cur.last() {
                if (p.u - prev.u).abs() > 0.5 * period {
                    out.push(std::mem::take(&mut cur));
                }
            }
            cur.push(p);
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    }

    pub fn svg(&self) -> String {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut grow = |p: &SurfacePoint| {
            lo.0 = lo.0.min(p.u);
            lo.1 = lo.1.min(p.v);
            hi.0 = hi.0.max(p.u);
            hi.1 = hi.1.max(p.v);
        };
        for (pts, _) in &self.layers {
            pts.iter().for_each(&mut grow);
        }
        for (p, _) in &self.markers {
            grow(p);
        }
        if !lo.0.is_finite() {
            lo = (0.0, 0.0);
            hi = (1.0, 1.0);
        }
        let span_u = (hi.0 - lo.0).max(1e-9);
        let span_v = (hi.1 - lo.1).max(1e-9);
        let margin = MARGIN_FRAC * span_u.max(span_v);
        let k = WIDTH_PX / (span_u + 2.0 * margin);
        let height = ((span_v + 2.0 * margin) * k).ceil();
        // SVG y grows downward; chart v grows upward.
        let map = |p: &SurfacePoint| -> (f64, f64) {
            ((p.u - lo.0 + margin) * k, (hi.1 - p.v + margin) * k)
        };

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {:.0} {:.0}\">\n",
            WIDTH_PX, height
        ));
        out.push_str(
            "<style>\n\
             .curve{fill:none;stroke:#1a1a1a;stroke-width:2.2;stroke-linecap:round}\n\
             .sweep{fill:none;stroke:#c22f2f;stroke-width:1.6;stroke-linecap:round}\n\
             .chord{fill:none;stroke:#2356a8;stroke-width:1.4;stroke-dasharray:6 4;stroke-linecap:round}\n\
             .mark{fill:#c22f2f;stroke:none}\n\
             .foot{fill:#2356a8;stroke:none}\n\
             </style>\n",
        );
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
        for (pts, class) in &self.layers {
            for seg in self.split_segments(pts) {
                if seg.len() < 2 {
                    continue;
                }
                out.push_str(&format!("<path class=\"{class}\" d=\""));
                for (i, p) in seg.iter().enumerate() {
                    let (x, y) = map(p);
                    out.push_str(&format!(
                        "{}{:.3} {:.3}",
                        if i == 0 { "M" } else { " L" },
                        x,
                        y
                    ));
                }
                out.push_str("\"/>\n");
            }
        }
        for (p, class) in &self.markers {
            let (x, y) = map(p);
            out.push_str(&format!(
                "<circle class=\"{class}\" cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"4\"/>\n"
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}
