//! Cubic splines: natural (for revolution profiles given as samples) and
//! uniform periodic (for closed-curve tables). Both expose value, first and
//! second derivative.

use crate::{Error, Result};

/// Natural cubic spline over a strictly increasing knot vector.
#[derive(Clone, Debug)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>, // second derivatives at knots
}

impl NaturalSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::Config(
                "spline needs at least 3 samples of equal length".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "spline knots must be strictly increasing".into(),
            ));
        }
        // Thomas algorithm for the natural-boundary tridiagonal system.
        let mut a = vec![0.0; n];
        let mut b = vec![1.0; n];
        let mut c = vec![0.0; n];
        let mut r = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            a[i] = h0 / 6.0;
            b[i] = (h0 + h1) / 3.0;
            c[i] = h1 / 6.0;
            r[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        let mut cp = vec![0.0; n];
        let mut rp = vec![0.0; n];
        cp[0] = c[0] / b[0];
        rp[0] = r[0] / b[0];
        for i in 1..n {
            let den = b[i] - a[i] * cp[i - 1];
            cp[i] = c[i] / den;
            rp[i] = (r[i] - a[i] * rp[i - 1]) / den;
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rp[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = rp[i] - cp[i] * m[i + 1];
        }
        Ok(Self { xs, ys, m })
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let (t0, t1) = (x1 - x, x - x0);
        self.m[i] * t0 * t0 * t0 / (6.0 * h)
            + self.m[i + 1] * t1 * t1 * t1 / (6.0 * h)
            + (self.ys[i] / h - self.m[i] * h / 6.0) * t0
            + (self.ys[i + 1] / h - self.m[i + 1] * h / 6.0) * t1
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let (t0, t1) = (x1 - x, x - x0);
        -self.m[i] * t0 * t0 / (2.0 * h) + self.m[i + 1] * t1 * t1 / (2.0 * h)
            - (self.ys[i] / h - self.m[i] * h / 6.0)
            + (self.ys[i + 1] / h - self.m[i + 1] * h / 6.0)
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        (self.m[i] * (x1 - x) + self.m[i + 1] * (x - x0)) / h
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }
}

/// Periodic cubic spline over N uniformly spaced knots covering one period.
/// Knot i sits at `i * period / n`; values wrap around.
#[derive(Clone, Debug)]
pub struct PeriodicSpline {
    ys: Vec<f64>,
    m: Vec<f64>,
    period: f64,
    h: f64,
}

impl PeriodicSpline {
    pub fn new(ys: Vec<f64>, period: f64) -> Result<Self> {
        let n = ys.len();
        if n < 3 {
            return Err(Error::Config("periodic spline needs >= 3 samples".into()));
        }
        if !(period > 0.0) {
            return Err(Error::Config("periodic spline period must be > 0".into()));
        }
        let h = period / n as f64;
        // Cyclic tridiagonal system M_{i-1} + 4 M_i + M_{i+1} = 6 d2_i / h^2,
        // solved by Sherman-Morrison on top of two Thomas sweeps.
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let ym = ys[(i + n - 1) % n];
                let yp = ys[(i + 1) % n];
                6.0 * (ym - 2.0 * ys[i] + yp) / (h * h)
            })
            .collect();
        let m = solve_cyclic_const(4.0, 1.0, &rhs);
        Ok(Self { ys, m, period, h })
    }

    #[inline]
    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.ys.len();
        let mut t = x.rem_euclid(self.period);
        if !t.is_finite() {
            t = 0.0;
        }
        let mut i = (t / self.h) as usize;
        if i >= n {
            i = n - 1;
        }
        (i, t - i as f64 * self.h)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.ys.len();
        let (i, s) = self.locate(x);
        let j = (i + 1) % n;
        let h = self.h;
        let t0 = h - s;
        let t1 = s;
        self.m[i] * t0 * t0 * t0 / (6.0 * h)
            + self.m[j] * t1 * t1 * t1 / (6.0 * h)
            + (self.ys[i] / h - self.m[i] * h / 6.0) * t0
            + (self.ys[j] / h - self.m[j] * h / 6.0) * t1
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        let n = self.ys.len();
        let (i, s) = self.locate(x);
        let j = (i + 1) % n;
        let h = self.h;
        let t0 = h - s;
        let t1 = s;
        -self.m[i] * t0 * t0 / (2.0 * h) + self.m[j] * t1 * t1 / (2.0 * h)
            - (self.ys[i] / h - self.m[i] * h / 6.0)
            + (self.ys[j] / h - self.m[j] * h / 6.0)
    }

    #[inline]
    pub fn deriv2(&self, x: f64) -> f64 {
        let n = self.ys.len();
        let (i, s) = self.locate(x);
        let j = (i + 1) % n;
        (self.m[i] * (self.h - s) + self.m[j] * s) / self.h
    }
}

/// Solve the cyclic constant-coefficient tridiagonal system
/// `off * x_{i-1} + diag * x_i + off * x_{i+1} = r_i` (indices mod n).
fn solve_cyclic_const(diag: f64, off: f64, r: &[f64]) -> Vec<f64> {
    let n = r.len();
    debug_assert!(n >= 3);
    let gamma = -diag;
    // Modified diagonal for the rank-one update.
    let mut b = vec![diag; n];
    b[0] = diag - gamma;
    b[n - 1] = diag - off * off / gamma;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let mut cp = vec![0.0; n];
        let mut rp = vec![0.0; n];
        cp[0] = off / b[0];
        rp[0] = rhs[0] / b[0];
        for i in 1..n {
            let den = b[i] - off * cp[i - 1];
            cp[i] = off / den;
            rp[i] = (rhs[i] - off * rp[i - 1]) / den;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = rp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = rp[i] - cp[i] * x[i + 1];
        }
        x
    };
    let x = solve(r);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = off;
    let z = solve(&u);
    let fact = (x[0] + off * x[n - 1] / gamma) / (1.0 + z[0] + off * z[n - 1] / gamma);
    (0..n).map(|i| x[i] - fact * z[i]).collect()
}
