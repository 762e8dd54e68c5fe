//! Uniform bucket grid over chart points, with u-wrap on periodic charts.
//! Backs the curve locator and the fan solver's target lookup.

use std::collections::HashMap;

use crate::surface::{SurfaceChart, SurfacePoint};

pub(crate) struct SpatialGrid {
    cell: f64,
    u0: f64,
    v0: f64,
    period_cells: Option<i64>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<SurfacePoint>,
}

impl SpatialGrid {
    pub(crate) fn build(chart: &SurfaceChart, pts: &[SurfacePoint], cell: f64) -> Self {
        let period_cells = chart.period().map(|p| (p / cell).ceil().max(1.0) as i64);
        let u0 = chart.u_range().0;
        let v0 = chart.v_range().0;
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in pts.iter().enumerate() {
            let key = Self::key(cell, u0, v0, period_cells, *p);
            buckets.entry(key).or_default().push(i);
        }
        Self {
            cell,
            u0,
            v0,
            period_cells,
            buckets,
            points: pts.to_vec(),
        }
    }

    fn key(cell: f64, u0: f64, v0: f64, period_cells: Option<i64>, p: SurfacePoint) -> (i64, i64) {
        let mut cu = ((p.u - u0) / cell).floor() as i64;
        if let Some(pc) = period_cells {
            cu = cu.rem_euclid(pc);
        }
        let cv = ((p.v - v0) / cell).floor() as i64;
        (cu, cv)
    }

    /// Index of the nearest stored point within `radius`, by chart-coordinate
    /// distance with u-wrap. Callers convert metric radii beforehand.
    pub(crate) fn nearest(
        &self,
        chart: &SurfaceChart,
        x: SurfacePoint,
        radius: f64,
    ) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        self.for_each_within(chart, x, radius, |i, d| {
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, i));
            }
        });
        best.map(|(_, i)| i)
    }

    /// Visit every stored point within `radius` of `x` (chart-coordinate
    /// distance with u-wrap); the callback receives (index, distance).
    pub(crate) fn for_each_within(
        &self,
        chart: &SurfaceChart,
        x: SurfacePoint,
        radius: f64,
        mut f: impl FnMut(usize, f64),
    ) {
        let reach = (radius / self.cell).ceil() as i64 + 1;
        let ck = Self::key(self.cell, self.u0, self.v0, self.period_cells, x);
        // On a periodic chart a wide window must visit each wrapped column
        // exactly once.
        let (lo, hi) = match self.period_cells {
            Some(pc) if 2 * reach + 1 >= pc => (0, pc - 1),
            _ => (-reach, reach),
        };
        for du in lo..=hi {
            for dv in -reach..=reach {
                let mut ku = ck.0 + du;
                if let Some(pc) = self.period_cells {
                    ku = ku.rem_euclid(pc);
                }
                if let Some(items) = self.buckets.get(&(ku, ck.1 + dv)) {
                    for &i in items {
                        let q = self.points[i];
                        let duu = chart.du_wrapped(q.u, x.u);
                        let dvv = x.v - q.v;
                        let d = (duu * duu + dvv * dvv).sqrt();
                        if d <= radius {
                            f(i, d);
                        }
                    }
                }
            }
        }
    }
}
