//! Fixture configuration: a JSON file describing one chart, one boundary
//! curve, and the resolutions every subcommand runs at.
//!
//! Unknown keys are rejected so a typo in a fixture fails loudly instead of
//! silently falling back to a default.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use sweepwidth::curve::{BoundaryCurve, CurveSpec};
use sweepwidth::spline::NaturalSpline;
use sweepwidth::surface::{Bump, ChartKind, LogFactor, Profile, SurfaceChart, TAU};
use sweepwidth::{Error, Result};

/// Documented resolution bounds. Grids above the caps take hours on one
/// core, which is never what a fixture author meant.
pub const GRID_RANGE: (usize, usize) = (8, 4096);
pub const SCAN_RANGE: (usize, usize) = (64, 4096);
pub const SAMPLES_RANGE: (usize, usize) = (32, 1 << 16);

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    /// Flat plane, identity metric; the chart window must contain the curve
    /// and every chord between its points.
    EuclideanPlane { u_range: (f64, f64), v_range: (f64, f64) },
    /// Round sphere; u is longitude (full turn), v is colatitude in [0, pi].
    RoundSphere { radius: f64, v_range: (f64, f64) },
    /// Surface of revolution with the ellipsoid profile rho(z) =
    /// sqrt(1 - z^2 / a^2); u is the rotation angle, v the height.
    Ellipsoid { a: f64, v_range: (f64, f64) },
    /// Surface of revolution through sampled (height, radius) knots.
    SampledRevolution { knots: Vec<(f64, f64)>, v_range: (f64, f64) },
    /// Conformally flat plane e^{2f} * delta with f a constant offset plus
    /// Gaussian bumps.
    ConformalPlane {
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        bumps: Vec<BumpSpec>,
        u_range: (f64, f64),
        v_range: (f64, f64),
    },
    /// Flat cylinder of the given circumference; v is the axis coordinate.
    FlatCylinder { circumference: f64, v_range: (f64, f64) },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: (f64, f64),
    pub height: f64,
    pub sigma: f64,
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<SurfaceChart> {
        match self {
            SurfaceSpec::EuclideanPlane { u_range, v_range } => {
                SurfaceChart::new(ChartKind::EuclideanPlane, *u_range, *v_range)
            }
            SurfaceSpec::RoundSphere { radius, v_range } => SurfaceChart::new(
                ChartKind::RoundSphere { radius: *radius },
                (0.0, TAU),
                *v_range,
            ),
            SurfaceSpec::Ellipsoid { a, v_range } => SurfaceChart::new(
                ChartKind::Revolution {
                    profile: Profile::Ellipsoid { a: *a },
                },
                (0.0, TAU),
                *v_range,
            ),
            SurfaceSpec::SampledRevolution { knots, v_range } => {
                let (zs, rhos): (Vec<f64>, Vec<f64>) = knots.iter().copied().unzip();
                let profile = Profile::Sampled(NaturalSpline::new(zs, rhos)?);
                SurfaceChart::new(ChartKind::Revolution { profile }, (0.0, TAU), *v_range)
            }
            SurfaceSpec::ConformalPlane {
                offset,
                bumps,
                u_range,
                v_range,
            } => {
                let factor = LogFactor {
                    offset: *offset,
                    bumps: bumps
                        .iter()
                        .map(|b| Bump {
                            center: b.center,
                            height: b.height,
                            sigma: b.sigma,
                        })
                        .collect(),
                };
                SurfaceChart::new(ChartKind::ConformalPlane { factor }, *u_range, *v_range)
            }
            SurfaceSpec::FlatCylinder {
                circumference,
                v_range,
            } => SurfaceChart::new(
                ChartKind::FlatCylinder {
                    circumference: *circumference,
                },
                (0.0, *circumference),
                *v_range,
            ),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Fixture name; prefixes every artifact file name.
    pub name: String,
    pub surface: SurfaceSpec,
    pub curve: CurveSpec,
    /// Arclength samples held by the boundary curve. Must be a multiple of
    /// `grid` so field samples land on curve samples.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Declares the bounded disc totally convex. Switches on the convexity
    /// validation of the curve and licenses fan-based pair enumeration,
    /// critical scans and the stable-chord check.
    #[serde(default)]
    pub totally_convex: bool,
    /// Pair-grid resolution: distance fields, sweepouts, critical scans.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Inward-normal starts for the free-boundary chord scan.
    #[serde(default = "default_scan")]
    pub scan: usize,
}

fn default_samples() -> usize {
    512
}
fn default_grid() -> usize {
    64
}
fn default_scan() -> usize {
    64
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("fixture parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::Config(
                "fixture name must be non-empty [A-Za-z0-9_-] (it names output files)".into(),
            ));
        }
        let inside = |v: usize, (lo, hi): (usize, usize)| v >= lo && v <= hi;
        if !inside(self.samples, SAMPLES_RANGE) {
            return Err(Error::Config(format!(
                "samples = {} outside {:?}",
                self.samples, SAMPLES_RANGE
            )));
        }
        if !inside(self.grid, GRID_RANGE) {
            return Err(Error::Config(format!(
                "grid = {} outside {:?}",
                self.grid, GRID_RANGE
            )));
        }
        if !inside(self.scan, SCAN_RANGE) {
            return Err(Error::Config(format!(
                "scan = {} outside {:?}",
                self.scan, SCAN_RANGE
            )));
        }
        if self.samples % self.grid != 0 {
            return Err(Error::Config(format!(
                "samples = {} must be a multiple of grid = {}",
                self.samples, self.grid
            )));
        }
        Ok(())
    }

    /// Replace the pair-grid resolution (the --grid flag), re-checking the
    /// documented bounds and the divisibility requirement.
    pub fn override_grid(&mut self, grid: usize) -> Result<()> {
        self.grid = grid;
        self.validate()
    }

    /// Build the chart and the boundary curve this fixture describes.
    pub fn build_curve(&self) -> Result<BoundaryCurve> {
        let chart = Arc::new(self.surface.build()?);
        BoundaryCurve::build(chart, &self.curve, self.samples, self.totally_convex)
    }
}
