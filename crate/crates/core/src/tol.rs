//! Numerical knobs shared across the crate, collected in one place so their
//! interplay stays auditable. Each constant records what it guards; the
//! grouping mirrors the pipeline (integration -> connection -> signatures ->
//! classification -> shortening -> spectra).

/// Integration step as a fraction of the chart's natural length scale.
pub const STEP_FRACTION: f64 = 1e-3;

/// Integration step for connection fans. Coarser than [`STEP_FRACTION`]:
/// RK4 error at this step is still orders below the signature tags, and the
/// fan dominates the cost of every distance field. Shooting that probes
/// thin non-convex features (return chords, shortening) keeps the fine step.
pub const FAN_STEP_FRACTION: f64 = 4e-3;

/// Number of equally spaced shooting directions in a connection fan.
pub const FAN_SIZE: usize = 720;

/// Two connectors whose initial angles differ by less than this (radians)
/// are treated as the same geodesic during deduplication.
pub const DEDUP_ANGLE: f64 = 1e-3;

/// Endpoint residual target for the two-point polish, relative to the
/// boundary length (or the chart scale when no curve is in play).
pub const ENDPOINT_TOL_REL: f64 = 1e-8;

/// Relative window for calling a connector "minimizing":
/// length <= d * (1 + EPS_LEN).
pub const EPS_LEN: f64 = 1e-4;

/// A boundary arc is admitted as a geodesic connector when its integrated
/// geodesic curvature does not exceed this.
pub const ARC_GEODESIC_TOL: f64 = 1e-6;

/// Algebraic tolerance for the convex-hull criticality certificate
/// (separating functional / witness residual).
pub const HULL_TOL: f64 = 1e-8;

/// Componentwise tolerance for signature-based tags (free-boundary,
/// simultaneous stationarity). Looser than HULL_TOL because signatures
/// inherit shooting error.
pub const TAG_TOL: f64 = 1e-4;

/// Maximum number of polished connectors kept per point pair. Families of
/// minimizers (e.g. antipodal points of a round sphere) produce one hit per
/// fan ray; this cap keeps the representative set bounded while the angular
/// spread of the kept set still exposes the extremal signatures.
pub const MAX_CONNECTORS_PER_PAIR: usize = 64;

/// Finite-difference step for metric derivatives (cross-checks only;
/// production Christoffels use closed forms).
pub const FD_STEP: f64 = 1e-6;

/// Convexity gate: a fixture declared convex must have A(s) >= -CONVEXITY_GATE.
pub const CONVEXITY_GATE: f64 = 1e-8;

/// Birkhoff shortening: relative length decrease below which the trace is
/// declared converged to a free-boundary geodesic.
pub const BIRKHOFF_STALL_REL: f64 = 1e-10;

/// Birkhoff shortening: relative total length below which the trace is
/// declared collapsed to a point.
pub const BIRKHOFF_POINT_REL: f64 = 1e-3;

/// Eigenvalue zero-band scale: eps_eig = EIG_BAND_SCALE * (pi / a)^2 for a
/// chord of length a. |lambda| below the band counts as nullity, lambda
/// below minus the band counts towards the index.
pub const EIG_BAND_SCALE: f64 = 1e-6;

/// Minimum number of interior nodes for the Sturm-Liouville discretisation.
pub const EIG_MIN_NODES: usize = 400;

/// Relative gap for the farthest-point uniqueness test in the
/// constant-width check.
pub const FARTHEST_GAP_REL: f64 = 1e-3;

/// Agreement required between the two independent bottleneck-width solvers.
pub const WIDTH_AGREE: f64 = 1e-12;

/// Number of table angles for directional widths of plane curves.
pub const WIDTH_TABLE_ANGLES: usize = 4096;

/// Relative accuracy target for curve arclength quadrature.
pub const ARCLENGTH_REL_TOL: f64 = 1e-9;

/// Localisation target for refined critical components, relative to L.
pub const COMPONENT_LOCALISE_REL: f64 = 1e-3;

/// Fold window: when classifying at localisation radius r, connectors within
/// length slack FOLD_WINDOW * r of the minimum join the signature hull. Each
/// route's length is 1-Lipschitz in each endpoint arclength, so two routes
/// that tie somewhere within radius r differ by at most 4 r at the probe.
pub const FOLD_WINDOW: f64 = 4.0;
