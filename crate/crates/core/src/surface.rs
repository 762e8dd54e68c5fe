//! Chart-based surface geometry.
//!
//! A surface is a single coordinate chart `(u, v)` with one of five metric
//! kinds. Closed forms are used for the metric, Christoffel symbols and
//! Gaussian curvature everywhere; finite-difference variants exist as
//! cross-checks for tests.
//!
//! Rotationally symmetric kinds (round sphere, surface of revolution) also
//! expose an isometric embedding into R^3. The geodesic integrator uses the
//! embedded form there, which keeps geodesics regular through the poles
//! where the chart itself degenerates.

use serde::{Deserialize, Serialize};

use crate::spline::NaturalSpline;
use crate::tol;
use crate::{Error, Result};

pub const TAU: f64 = std::f64::consts::TAU;

/// A point in chart coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub u: f64,
    pub v: f64,
}

impl SurfacePoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// A tangent vector in chart coordinates at some (implicit) base point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub du: f64,
    pub dv: f64,
}

impl TangentVector {
    pub fn new(du: f64, dv: f64) -> Self {
        Self { du, dv }
    }
    pub fn scale(self, c: f64) -> Self {
        Self {
            du: self.du * c,
            dv: self.dv * c,
        }
    }
    pub fn add(self, o: Self) -> Self {
        Self {
            du: self.du + o.du,
            dv: self.dv + o.dv,
        }
    }
}

/// Revolution profile: radius as a function of height.
#[derive(Clone, Debug)]
pub enum Profile {
    /// rho(z) = sqrt(1 - z^2 / a^2), the surface x^2 + y^2 + z^2/a^2 = 1.
    Ellipsoid { a: f64 },
    /// Cubic-spline interpolation of (height, radius) samples.
    Sampled(NaturalSpline),
}

impl Profile {
    pub fn rho(&self, z: f64) -> f64 {
        match self {
            Profile::Ellipsoid { a } => (1.0 - (z / a) * (z / a)).max(0.0).sqrt(),
            Profile::Sampled(sp) => sp.eval(z),
        }
    }

    pub fn drho(&self, z: f64) -> f64 {
        match self {
            Profile::Ellipsoid { a } => {
                let r = self.rho(z);
                if r <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -z / (a * a * r)
                }
            }
            Profile::Sampled(sp) => sp.deriv(z),
        }
    }

    pub fn ddrho(&self, z: f64) -> f64 {
        match self {
            Profile::Ellipsoid { a } => {
                let r = self.rho(z);
                if r <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let a2 = a * a;
                    -(a2 * r * r + z * z) / (a2 * a2 * r * r * r)
                }
            }
            Profile::Sampled(sp) => sp.deriv2(z),
        }
    }
}

/// The five supported chart kinds.
#[derive(Clone, Debug)]
pub enum ChartKind {
    /// Identity metric on a rectangle.
    EuclideanPlane,
    /// Round sphere of radius `r`; chart (longitude, colatitude).
    RoundSphere { radius: f64 },
    /// Surface of revolution; chart (angle, height).
    Revolution { profile: Profile },
    /// Metric e^{2 f(u,v)} (du^2 + dv^2); `f` is a constant plus Gaussian
    /// bumps, so all derivatives are closed-form.
    ConformalPlane { factor: LogFactor },
    /// Flat metric, u periodic with the given circumference.
    FlatCylinder { circumference: f64 },
}

/// Conformal log-factor f(u,v) = offset + sum of Gaussian bumps.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LogFactor {
    pub offset: f64,
    pub bumps: Vec<Bump>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Bump {
    pub center: (f64, f64),
    pub height: f64,
    pub sigma: f64,
}

impl LogFactor {
    /// f, f_u, f_v, f_uu + f_vv at (u, v).
    pub fn eval(&self, u: f64, v: f64) -> (f64, f64, f64, f64) {
        let mut f = self.offset;
        let (mut fu, mut fv, mut lap) = (0.0, 0.0, 0.0);
        for b in &self.bumps {
            let dx = u - b.center.0;
            let dy = v - b.center.1;
            let s2 = b.sigma * b.sigma;
            let r2 = dx * dx + dy * dy;
            let g = b.height * (-r2 / (2.0 * s2)).exp();
            f += g;
            fu += -g * dx / s2;
            fv += -g * dy / s2;
            lap += g * (r2 - 2.0 * s2) / (s2 * s2);
        }
        (f, fu, fv, lap)
    }
}

/// Pointwise metric data: metric, inverse, Christoffel symbols
/// (`christoffel[k][i][j]` = Gamma^k_{ij}) and Gaussian curvature.
#[derive(Clone, Copy, Debug)]
pub struct Geometry {
    pub g: [[f64; 2]; 2],
    pub ginv: [[f64; 2]; 2],
    pub christoffel: [[[f64; 2]; 2]; 2],
    pub gauss: f64,
}

impl Geometry {
    pub fn dot(&self, a: TangentVector, b: TangentVector) -> f64 {
        self.g[0][0] * a.du * b.du
            + self.g[0][1] * (a.du * b.dv + a.dv * b.du)
            + self.g[1][1] * a.dv * b.dv
    }
    pub fn norm(&self, a: TangentVector) -> f64 {
        self.dot(a, a).max(0.0).sqrt()
    }
    pub fn sqrt_det(&self) -> f64 {
        (self.g[0][0] * self.g[1][1] - self.g[0][1] * self.g[1][0])
            .max(0.0)
            .sqrt()
    }
    /// sqrt of the smallest metric eigenvalue: the minimal metric length of
    /// a chart-coordinate unit vector. Converts chart radii to lower bounds
    /// on metric radii.
    pub fn min_stretch(&self) -> f64 {
        let tr = self.g[0][0] + self.g[1][1];
        let det = self.g[0][0] * self.g[1][1] - self.g[0][1] * self.g[1][0];
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        (0.5 * (tr - disc)).max(0.0).sqrt()
    }
}

/// A surface chart with a rectangular coordinate domain.
#[derive(Clone, Debug)]
pub struct SurfaceChart {
    kind: ChartKind,
    u_range: (f64, f64),
    v_range: (f64, f64),
    scale: f64,
}

impl SurfaceChart {
    pub fn new(kind: ChartKind, u_range: (f64, f64), v_range: (f64, f64)) -> Result<Self> {
        if !(u_range.0 < u_range.1) || !(v_range.0 < v_range.1) {
            return Err(Error::Config("chart domain ranges must be non-empty".into()));
        }
        match &kind {
            ChartKind::RoundSphere { radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::Config("sphere radius must be > 0".into()));
                }
                if v_range.0 < -1e-12 || v_range.1 > std::f64::consts::PI + 1e-12 {
                    return Err(Error::Config(
                        "sphere colatitude range must lie within [0, pi]".into(),
                    ));
                }
            }
            ChartKind::Revolution { profile } => {
                if let Profile::Ellipsoid { a } = profile {
                    if !(*a > 0.0) {
                        return Err(Error::Config("ellipsoid semi-axis must be > 0".into()));
                    }
                    if v_range.0 < -*a - 1e-12 || v_range.1 > *a + 1e-12 {
                        return Err(Error::Config(
                            "revolution height range exceeds the profile support".into(),
                        ));
                    }
                }
                if let Profile::Sampled(sp) = profile {
                    let (z0, z1) = sp.range();
                    if v_range.0 < z0 - 1e-12 || v_range.1 > z1 + 1e-12 {
                        return Err(Error::Config(
                            "revolution height range exceeds the sampled profile".into(),
                        ));
                    }
                }
                // Interior radii must be positive (poles allowed at the ends).
                let probe = 64;
                for i in 1..probe {
                    let z = v_range.0 + (v_range.1 - v_range.0) * i as f64 / probe as f64;
                    if profile.rho(z) <= 0.0 {
                        return Err(Error::Config(
                            "revolution profile radius must be positive in the domain interior"
                                .into(),
                        ));
                    }
                }
            }
            ChartKind::FlatCylinder { circumference } => {
                if !(*circumference > 0.0) {
                    return Err(Error::Config("cylinder circumference must be > 0".into()));
                }
            }
            _ => {}
        }
        let scale = Self::compute_scale(&kind, u_range, v_range);
        Ok(Self {
            kind,
            u_range,
            v_range,
            scale,
        })
    }

    fn compute_scale(kind: &ChartKind, u_range: (f64, f64), v_range: (f64, f64)) -> f64 {
        match kind {
            ChartKind::EuclideanPlane | ChartKind::ConformalPlane { .. } => {
                let du = u_range.1 - u_range.0;
                let dv = v_range.1 - v_range.0;
                (du * du + dv * dv).sqrt()
            }
            ChartKind::RoundSphere { radius } => std::f64::consts::PI * radius,
            ChartKind::Revolution { profile } => {
                // Meridian length over the declared heights plus half the
                // largest circumference: an O(1)-correct diameter estimate.
                let n = 512;
                let (z0, z1) = v_range;
                let h = (z1 - z0) / n as f64;
                let mut meridian = 0.0;
                let mut rho_max: f64 = 0.0;
                for i in 0..n {
                    let z = z0 + (i as f64 + 0.5) * h;
                    let dr = profile.drho(z);
                    meridian += (1.0 + dr * dr).sqrt() * h;
                    rho_max = rho_max.max(profile.rho(z));
                }
                meridian + std::f64::consts::PI * rho_max
            }
            ChartKind::FlatCylinder { circumference } => {
                let dv = v_range.1 - v_range.0;
                (circumference * circumference + dv * dv).sqrt()
            }
        }
    }

    pub fn kind(&self) -> &ChartKind {
        &self.kind
    }

    /// Period of the u coordinate, if the chart wraps.
    pub fn period(&self) -> Option<f64> {
        match &self.kind {
            ChartKind::EuclideanPlane | ChartKind::ConformalPlane { .. } => None,
            ChartKind::RoundSphere { .. } | ChartKind::Revolution { .. } => Some(TAU),
            ChartKind::FlatCylinder { circumference } => Some(*circumference),
        }
    }

    /// Natural length scale of the domain; integration steps are
    /// `tol::STEP_FRACTION` times this.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn u_range(&self) -> (f64, f64) {
        self.u_range
    }

    pub fn v_range(&self) -> (f64, f64) {
        self.v_range
    }

    /// Wrap a u coordinate into the fundamental domain if periodic.
    pub fn wrap_u(&self, u: f64) -> f64 {
        match self.period() {
            Some(p) => self.u_range.0 + (u - self.u_range.0).rem_euclid(p),
            None => u,
        }
    }

    /// Difference `u1 - u0` reduced to the shortest representative.
    pub fn du_wrapped(&self, u0: f64, u1: f64) -> f64 {
        match self.period() {
            Some(p) => {
                let mut d = (u1 - u0).rem_euclid(p);
                if d > 0.5 * p {
                    d -= p;
                }
                d
            }
            None => u1 - u0,
        }
    }

    pub fn contains(&self, p: SurfacePoint) -> bool {
        let tolv = 1e-9 * self.scale.max(1.0);
        if !(p.v >= self.v_range.0 - tolv && p.v <= self.v_range.1 + tolv) {
            return false;
        }
        if self.period().is_none() {
            p.u >= self.u_range.0 - tolv && p.u <= self.u_range.1 + tolv
        } else {
            true
        }
    }

    /// Metric, Christoffel symbols and Gaussian curvature at `p`.
    ///
    /// Errors if `p` is outside the domain, or sits at a rotational pole
    /// where the chart parametrisation (not the surface) is singular.
    pub fn geometry_at(&self, p: SurfacePoint) -> Result<Geometry> {
        if !self.contains(p) {
            return Err(Error::OutsideDomain { u: p.u, v: p.v });
        }
        match &self.kind {
            ChartKind::EuclideanPlane | ChartKind::FlatCylinder { .. } => Ok(Geometry {
                g: [[1.0, 0.0], [0.0, 1.0]],
                ginv: [[1.0, 0.0], [0.0, 1.0]],
                christoffel: [[[0.0; 2]; 2]; 2],
                gauss: 0.0,
            }),
            ChartKind::RoundSphere { radius } => {
                let r = *radius;
                let sv = p.v.sin();
                if sv.abs() < 1e-12 {
                    return Err(Error::ChartSingular { u: p.u, v: p.v });
                }
                let cv = p.v.cos();
                let e = r * r * sv * sv;
                let g = r * r;
                let mut ch = [[[0.0; 2]; 2]; 2];
                ch[0][0][1] = cv / sv;
                ch[0][1][0] = cv / sv;
                ch[1][0][0] = -sv * cv;
                Ok(Geometry {
                    g: [[e, 0.0], [0.0, g]],
                    ginv: [[1.0 / e, 0.0], [0.0, 1.0 / g]],
                    christoffel: ch,
                    gauss: 1.0 / (r * r),
                })
            }
            ChartKind::Revolution { profile } => {
                let rho = profile.rho(p.v);
                if rho < 1e-12 {
                    return Err(Error::ChartSingular { u: p.u, v: p.v });
                }
                let dr = profile.drho(p.v);
                let ddr = profile.ddrho(p.v);
                let e = rho * rho;
                let g = 1.0 + dr * dr;
                let mut ch = [[[0.0; 2]; 2]; 2];
                ch[0][0][1] = dr / rho;
                ch[0][1][0] = dr / rho;
                ch[1][0][0] = -rho * dr / g;
                ch[1][1][1] = dr * ddr / g;
                Ok(Geometry {
                    g: [[e, 0.0], [0.0, g]],
                    ginv: [[1.0 / e, 0.0], [0.0, 1.0 / g]],
                    christoffel: ch,
                    gauss: -ddr / (rho * g * g),
                })
            }
            ChartKind::ConformalPlane { factor } => {
                let (f, fu, fv, lap) = factor.eval(p.u, p.v);
                let e2f = (2.0 * f).exp();
                let mut ch = [[[0.0; 2]; 2]; 2];
                ch[0][0][0] = fu;
                ch[0][0][1] = fv;
                ch[0][1][0] = fv;
                ch[0][1][1] = -fu;
                ch[1][0][0] = -fv;
                ch[1][0][1] = fu;
                ch[1][1][0] = fu;
                ch[1][1][1] = fv;
                Ok(Geometry {
                    g: [[e2f, 0.0], [0.0, e2f]],
                    ginv: [[1.0 / e2f, 0.0], [0.0, 1.0 / e2f]],
                    christoffel: ch,
                    gauss: -lap / e2f,
                })
            }
        }
    }

    /// Riemannian inner product of two tangent vectors at `p`.
    pub fn dot(&self, p: SurfacePoint, a: TangentVector, b: TangentVector) -> Result<f64> {
        Ok(self.geometry_at(p)?.dot(a, b))
    }

    pub fn norm(&self, p: SurfacePoint, a: TangentVector) -> Result<f64> {
        Ok(self.geometry_at(p)?.norm(a))
    }

    /// Rotation of `a` by +90 degrees in the oriented tangent plane at `p`
    /// (J such that (a, Ja) is a positively oriented orthogonal pair).
    pub fn rotate90(&self, p: SurfacePoint, a: TangentVector) -> Result<TangentVector> {
        let geo = self.geometry_at(p)?;
        let sd = geo.sqrt_det();
        // (Ja)^k = sqrt(det g) * g^{kl} eps_{lm} a^m with eps_{12} = +1.
        let cov = [-a.dv, a.du]; // eps_{lm} a^m, sign chosen so J(1,0) = (0,1) when g = id
        let du = sd * (geo.ginv[0][0] * cov[0] + geo.ginv[0][1] * cov[1]);
        let dv = sd * (geo.ginv[1][0] * cov[0] + geo.ginv[1][1] * cov[1]);
        Ok(TangentVector { du, dv })
    }

    /// Whether geodesics on this chart are integrated in the R^3 embedding.
    pub fn embeds(&self) -> bool {
        matches!(
            self.kind,
            ChartKind::RoundSphere { .. } | ChartKind::Revolution { .. }
        )
    }

    /// Embed a chart point into R^3 (sphere / revolution kinds only).
    pub fn embed(&self, p: SurfacePoint) -> [f64; 3] {
        match &self.kind {
            ChartKind::RoundSphere { radius } => {
                let r = *radius;
                [
                    r * p.v.sin() * p.u.cos(),
                    r * p.v.sin() * p.u.sin(),
                    r * p.v.cos(),
                ]
            }
            ChartKind::Revolution { profile } => {
                let rho = profile.rho(p.v);
                [rho * p.u.cos(), rho * p.u.sin(), p.v]
            }
            _ => unreachable!("embed called on a non-embedded chart kind"),
        }
    }

    /// Push a chart tangent vector forward into R^3.
    pub fn embed_tangent(&self, p: SurfacePoint, w: TangentVector) -> [f64; 3] {
        match &self.kind {
            ChartKind::RoundSphere { radius } => {
                let r = *radius;
                let (su, cu) = p.u.sin_cos();
                let (sv, cv) = p.v.sin_cos();
                let xu = [-r * sv * su, r * sv * cu, 0.0];
                let xv = [r * cv * cu, r * cv * su, -r * sv];
                [
                    xu[0] * w.du + xv[0] * w.dv,
                    xu[1] * w.du + xv[1] * w.dv,
                    xu[2] * w.du + xv[2] * w.dv,
                ]
            }
            ChartKind::Revolution { profile } => {
                let rho = profile.rho(p.v);
                let dr = profile.drho(p.v);
                let (su, cu) = p.u.sin_cos();
                let xu = [-rho * su, rho * cu, 0.0];
                let xv = [dr * cu, dr * su, 1.0];
                [
                    xu[0] * w.du + xv[0] * w.dv,
                    xu[1] * w.du + xv[1] * w.dv,
                    xu[2] * w.du + xv[2] * w.dv,
                ]
            }
            _ => unreachable!("embed_tangent called on a non-embedded chart kind"),
        }
    }

    /// Chart coordinates of an embedded point. At a rotational pole the
    /// longitude is not determined; atan2's value there is used as-is.
    pub fn chart_point(&self, x: [f64; 3]) -> SurfacePoint {
        match &self.kind {
            ChartKind::RoundSphere { radius } => {
                let r = *radius;
                let v = (x[2] / r).clamp(-1.0, 1.0).acos();
                let u = x[1].atan2(x[0]).rem_euclid(TAU);
                SurfacePoint { u, v }
            }
            ChartKind::Revolution { .. } => {
                let u = x[1].atan2(x[0]).rem_euclid(TAU);
                SurfacePoint { u, v: x[2] }
            }
            _ => unreachable!("chart_point called on a non-embedded chart kind"),
        }
    }

    /// Pull an R^3 tangent vector at the embedded image of `p` back to chart
    /// coordinates. Returns None at a rotational pole.
    pub fn chart_tangent(&self, p: SurfacePoint, w3: [f64; 3]) -> Option<TangentVector> {
        match &self.kind {
            ChartKind::RoundSphere { radius } => {
                let r = *radius;
                let (su, cu) = p.u.sin_cos();
                let (sv, cv) = p.v.sin_cos();
                if sv.abs() < 1e-12 {
                    return None;
                }
                let xu = [-r * sv * su, r * sv * cu, 0.0];
                let xv = [r * cv * cu, r * cv * su, -r * sv];
                let e = r * r * sv * sv;
                let g = r * r;
                Some(TangentVector {
                    du: dot3(w3, xu) / e,
                    dv: dot3(w3, xv) / g,
                })
            }
            ChartKind::Revolution { profile } => {
                let rho = profile.rho(p.v);
                if rho < 1e-12 {
                    return None;
                }
                let dr = profile.drho(p.v);
                let (su, cu) = p.u.sin_cos();
                let xu = [-rho * su, rho * cu, 0.0];
                let xv = [dr * cu, dr * su, 1.0];
                let e = rho * rho;
                let g = 1.0 + dr * dr;
                Some(TangentVector {
                    du: dot3(w3, xu) / e,
                    dv: dot3(w3, xv) / g,
                })
            }
            _ => unreachable!("chart_tangent called on a non-embedded chart kind"),
        }
    }

    /// Outward unit normal of the embedded surface at `x`.
    pub fn normal3(&self, x: [f64; 3]) -> [f64; 3] {
        let grad = self.level_grad(x);
        let n = norm3(grad);
        [grad[0] / n, grad[1] / n, grad[2] / n]
    }

    /// Gradient of the defining level-set function at `x`.
    fn level_grad(&self, x: [f64; 3]) -> [f64; 3] {
        match &self.kind {
            ChartKind::RoundSphere { .. } => [2.0 * x[0], 2.0 * x[1], 2.0 * x[2]],
            ChartKind::Revolution { profile } => match profile {
                // Use the quadric x^2 + y^2 + z^2/a^2 = 1: regular at poles.
                Profile::Ellipsoid { a } => {
                    [2.0 * x[0], 2.0 * x[1], 2.0 * x[2] / (a * a)]
                }
                Profile::Sampled(_) => {
                    let rho = profile.rho(x[2]);
                    let dr = profile.drho(x[2]);
                    [2.0 * x[0], 2.0 * x[1], -2.0 * rho * dr]
                }
            },
            _ => unreachable!(),
        }
    }

    /// Geodesic acceleration in the embedding: the normal component that
    /// keeps a unit-speed trajectory on the surface.
    #[inline]
    pub fn accel3(&self, x: [f64; 3], w: [f64; 3]) -> [f64; 3] {
        match &self.kind {
            ChartKind::RoundSphere { radius } => {
                let r2 = radius * radius;
                let c = -(dot3(w, w)) / r2;
                [c * x[0], c * x[1], c * x[2]]
            }
            ChartKind::Revolution { profile } => match profile {
                Profile::Ellipsoid { a } => {
                    let a2 = a * a;
                    let grad = [2.0 * x[0], 2.0 * x[1], 2.0 * x[2] / a2];
                    let hvv = 2.0 * (w[0] * w[0] + w[1] * w[1]) + 2.0 * w[2] * w[2] / a2;
                    let c = -hvv / dot3(grad, grad);
                    [c * grad[0], c * grad[1], c * grad[2]]
                }
                Profile::Sampled(_) => {
                    let rho = profile.rho(x[2]);
                    let dr = profile.drho(x[2]);
                    let ddr = profile.ddrho(x[2]);
                    let grad = [2.0 * x[0], 2.0 * x[1], -2.0 * rho * dr];
                    let hvv = 2.0 * (w[0] * w[0] + w[1] * w[1])
                        - 2.0 * (dr * dr + rho * ddr) * w[2] * w[2];
                    let c = -hvv / dot3(grad, grad);
                    [c * grad[0], c * grad[1], c * grad[2]]
                }
            },
            _ => unreachable!(),
        }
    }

    /// Project an off-surface point back onto the embedded surface (one or
    /// two Newton steps along the level-set gradient; ample for the tiny
    /// drift of an RK4 step).
    pub fn project3(&self, x: [f64; 3]) -> [f64; 3] {
        match &self.kind {
            ChartKind::RoundSphere { radius } => {
                let n = norm3(x);
                if n == 0.0 {
                    return x;
                }
                let c = radius / n;
                [x[0] * c, x[1] * c, x[2] * c]
            }
            ChartKind::Revolution { profile } => match profile {
                Profile::Ellipsoid { a } => {
                    let mut p = x;
                    for _ in 0..2 {
                        let a2 = a * a;
                        let f = p[0] * p[0] + p[1] * p[1] + p[2] * p[2] / a2 - 1.0;
                        let grad = [2.0 * p[0], 2.0 * p[1], 2.0 * p[2] / a2];
                        let gg = dot3(grad, grad);
                        if gg == 0.0 {
                            break;
                        }
                        let t = f / gg;
                        p = [p[0] - t * grad[0], p[1] - t * grad[1], p[2] - t * grad[2]];
                    }
                    p
                }
                Profile::Sampled(_) => {
                    let rho = profile.rho(x[2]);
                    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    if r == 0.0 {
                        return x;
                    }
                    let c = rho / r;
                    [x[0] * c, x[1] * c, x[2]]
                }
            },
            _ => unreachable!(),
        }
    }

    /// Remove the normal component from an embedded vector.
    pub fn tangentialize3(&self, x: [f64; 3], w: [f64; 3]) -> [f64; 3] {
        let n = self.normal3(x);
        let c = dot3(w, n);
        [w[0] - c * n[0], w[1] - c * n[1], w[2] - c * n[2]]
    }

    /// Domain membership for an embedded point: the height/colatitude range.
    pub fn contains3(&self, x: [f64; 3]) -> bool {
        let tolv = 1e-9 * self.scale.max(1.0);
        match &self.kind {
            ChartKind::RoundSphere { radius } => {
                let v = (x[2] / radius).clamp(-1.0, 1.0).acos();
                v >= self.v_range.0 - tolv && v <= self.v_range.1 + tolv
            }
            ChartKind::Revolution { .. } => {
                x[2] >= self.v_range.0 - tolv && x[2] <= self.v_range.1 + tolv
            }
            _ => unreachable!(),
        }
    }
}

#[inline]
pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

#[inline]
pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Finite-difference Christoffel symbols from central differences of the
/// metric (step `tol::FD_STEP`). Cross-check only.
pub fn christoffel_fd(chart: &SurfaceChart, p: SurfacePoint) -> Result<[[[f64; 2]; 2]; 2]> {
    let h = tol::FD_STEP;
    let gat = |u: f64, v: f64| -> Result<[[f64; 2]; 2]> {
        Ok(chart.geometry_at(SurfacePoint { u, v })?.g)
    };
    let gu_p = gat(p.u + h, p.v)?;
    let gu_m = gat(p.u - h, p.v)?;
    let gv_p = gat(p.u, p.v + h)?;
    let gv_m = gat(p.u, p.v - h)?;
    let geo = chart.geometry_at(p)?;
    let mut dg = [[[0.0; 2]; 2]; 2]; // dg[l][i][j] = d g_ij / d x^l
    for i in 0..2 {
        for j in 0..2 {
            dg[0][i][j] = (gu_p[i][j] - gu_m[i][j]) / (2.0 * h);
            dg[1][i][j] = (gv_p[i][j] - gv_m[i][j]) / (2.0 * h);
        }
    }
    let mut ch = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for l in 0..2 {
                    s += geo.ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                }
                ch[k][i][j] = 0.5 * s;
            }
        }
    }
    Ok(ch)
}

/// Finite-difference Gaussian curvature for orthogonal metrics
/// (all chart kinds here have g_12 = 0):
/// K = -(1 / 2 sqrt(EG)) [ d_u (G_u / sqrt(EG)) + d_v (E_v / sqrt(EG)) ].
/// Cross-check only.
pub fn gauss_fd(chart: &SurfaceChart, p: SurfacePoint) -> Result<f64> {
    let h = 1e-4 * chart.scale().max(1.0);
    let eg = |u: f64, v: f64| -> Result<(f64, f64)> {
        let g = chart.geometry_at(SurfacePoint { u, v })?.g;
        Ok((g[0][0], g[1][1]))
    };
    let gu = |u: f64, v: f64| -> Result<f64> {
        let (_, gp) = eg(u + h, v)?;
        let (_, gm) = eg(u - h, v)?;
        let (e, g) = eg(u, v)?;
        Ok((gp - gm) / (2.0 * h) / (e * g).sqrt())
    };
    let ev = |u: f64, v: f64| -> Result<f64> {
        let (ep, _) = eg(u, v + h)?;
        let (em, _) = eg(u, v - h)?;
        let (e, g) = eg(u, v)?;
        Ok((ep - em) / (2.0 * h) / (e * g).sqrt())
    };
    let term_u = (gu(p.u + h, p.v)? - gu(p.u - h, p.v)?) / (2.0 * h);
    let term_v = (ev(p.u, p.v + h)? - ev(p.u, p.v - h)?) / (2.0 * h);
    let (e, g) = eg(p.u, p.v)?;
    Ok(-(term_u + term_v) / (2.0 * (e * g).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(r: f64) -> SurfaceChart {
        SurfaceChart::new(
            ChartKind::RoundSphere { radius: r },
            (0.0, TAU),
            (0.0, std::f64::consts::PI),
        )
        .unwrap()
    }

    #[test]
    fn sphere_metric_at_equator_is_identity() {
        let s = sphere(1.0);
        let geo = s
            .geometry_at(SurfacePoint::new(0.3, std::f64::consts::FRAC_PI_2))
            .unwrap();
        assert!((geo.g[0][0] - 1.0).abs() < 1e-15);
        assert!((geo.g[1][1] - 1.0).abs() < 1e-15);
        assert!((geo.gauss - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ellipsoid_profile_derivatives_match_fd() {
        let pr = Profile::Ellipsoid { a: 2.0 };
        let h = 1e-6;
        for &z in &[0.1, 0.5, 1.0, 1.7] {
            let d_fd = (pr.rho(z + h) - pr.rho(z - h)) / (2.0 * h);
            assert!((pr.drho(z) - d_fd).abs() < 1e-8, "drho at {z}");
            let dd_fd = (pr.rho(z + h) - 2.0 * pr.rho(z) + pr.rho(z - h)) / (h * h);
            assert!((pr.ddrho(z) - dd_fd).abs() < 1e-3, "ddrho at {z}");
        }
    }

    #[test]
    fn revolution_of_unit_sphere_has_unit_curvature() {
        let c = SurfaceChart::new(
            ChartKind::Revolution {
                profile: Profile::Ellipsoid { a: 1.0 },
            },
            (0.0, TAU),
            (-0.9, 0.9),
        )
        .unwrap();
        for &z in &[-0.8, -0.3, 0.0, 0.4, 0.85] {
            let geo = c.geometry_at(SurfacePoint::new(1.0, z)).unwrap();
            assert!((geo.gauss - 1.0).abs() < 1e-10, "K at z={z}: {}", geo.gauss);
        }
    }

    #[test]
    fn christoffels_match_finite_differences() {
        let charts: Vec<SurfaceChart> = vec![
            sphere(1.3),
            SurfaceChart::new(
                ChartKind::Revolution {
                    profile: Profile::Ellipsoid { a: 2.0 },
                },
                (0.0, TAU),
                (0.05, 2.0),
            )
            .unwrap(),
            SurfaceChart::new(
                ChartKind::ConformalPlane {
                    factor: LogFactor {
                        offset: 0.1,
                        bumps: vec![Bump {
                            center: (0.5, -0.2),
                            height: 0.8,
                            sigma: 0.6,
                        }],
                    },
                },
                (-3.0, 3.0),
                (-3.0, 3.0),
            )
            .unwrap(),
        ];
        let probes = [
            SurfacePoint::new(0.7, 1.1),
            SurfacePoint::new(2.0, 0.9),
            SurfacePoint::new(1.1, 0.4),
        ];
        for chart in &charts {
            for &p in &probes {
                if chart.geometry_at(p).is_err() {
                    continue;
                }
                let exact = chart.geometry_at(p).unwrap().christoffel;
                let fd = christoffel_fd(chart, p).unwrap();
                for k in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            assert!(
                                (exact[k][i][j] - fd[k][i][j]).abs() < 1e-6,
                                "Gamma^{k}_{i}{j} mismatch: {} vs {}",
                                exact[k][i][j],
                                fd[k][i][j]
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn gauss_matches_finite_differences() {
        let c = SurfaceChart::new(
            ChartKind::ConformalPlane {
                factor: LogFactor {
                    offset: 0.0,
                    bumps: vec![Bump {
                        center: (0.0, 0.0),
                        height: 1.0,
                        sigma: 0.8,
                    }],
                },
            },
            (-4.0, 4.0),
            (-4.0, 4.0),
        )
        .unwrap();
        for &(u, v) in &[(0.0, 0.0), (0.5, 0.3), (1.2, -0.4)] {
            let p = SurfacePoint::new(u, v);
            let exact = c.geometry_at(p).unwrap().gauss;
            let fd = gauss_fd(&c, p).unwrap();
            assert!(
                (exact - fd).abs() < 1e-4 * (1.0 + exact.abs()),
                "K at ({u},{v}): {exact} vs {fd}"
            );
        }
        // Sphere through the revolution fallback formula.
        let s = sphere(2.0);
        let p = SurfacePoint::new(1.0, 1.2);
        let fd = gauss_fd(&s, p).unwrap();
        assert!((fd - 0.25).abs() < 1e-5);
    }

    #[test]
    fn embedding_round_trips() {
        let c = SurfaceChart::new(
            ChartKind::Revolution {
                profile: Profile::Ellipsoid { a: 2.0 },
            },
            (0.0, TAU),
            (0.1, 2.0),
        )
        .unwrap();
        let p = SurfacePoint::new(1.234, 0.77);
        let x = c.embed(p);
        let q = c.chart_point(x);
        assert!((p.u - q.u).abs() < 1e-12 && (p.v - q.v).abs() < 1e-12);
        // Pushed-forward tangents preserve the metric inner product.
        let w = TangentVector::new(0.3, -0.5);
        let w3 = c.embed_tangent(p, w);
        let geo = c.geometry_at(p).unwrap();
        assert!((dot3(w3, w3) - geo.dot(w, w)).abs() < 1e-12);
        // Pull-back inverts push-forward.
        let wb = c.chart_tangent(p, w3).unwrap();
        assert!((wb.du - w.du).abs() < 1e-10 && (wb.dv - w.dv).abs() < 1e-10);
    }

    #[test]
    fn rotate90_gives_inward_normal_for_ccw_circle() {
        let c = SurfaceChart::new(ChartKind::EuclideanPlane, (-2.0, 2.0), (-2.0, 2.0)).unwrap();
        // At (1, 0) of a CCW unit circle the tangent is (0,1); the +90
        // rotation must point at the centre.
        let j = c
            .rotate90(SurfacePoint::new(1.0, 0.0), TangentVector::new(0.0, 1.0))
            .unwrap();
        assert!((j.du + 1.0).abs() < 1e-15 && j.dv.abs() < 1e-15);
    }

    #[test]
    fn geometry_is_pure() {
        let c = sphere(1.0);
        let p = SurfacePoint::new(0.37, 0.91);
        let a = c.geometry_at(p).unwrap();
        let b = c.geometry_at(p).unwrap();
        assert_eq!(a.g, b.g);
        assert_eq!(a.christoffel, b.christoffel);
        assert!(a.gauss == b.gauss);
    }

    #[test]
    fn out_of_domain_is_an_error() {
        let c = SurfaceChart::new(ChartKind::EuclideanPlane, (0.0, 1.0), (0.0, 1.0)).unwrap();
        assert!(matches!(
            c.geometry_at(SurfacePoint::new(2.0, 0.5)),
            Err(Error::OutsideDomain { .. })
        ));
        // Periodic charts never reject on u.
        let s = sphere(1.0);
        assert!(s.geometry_at(SurfacePoint::new(9.0, 1.0)).is_ok());
    }
}
