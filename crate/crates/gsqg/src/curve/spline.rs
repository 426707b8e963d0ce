//! Periodic cubic spline through irregularly spaced samples. Only used to
//! bootstrap arc-length parameterization from raw polygon input, where the
//! node spacing can be badly clustered and a local interpolant is much more
//! forgiving than a global trigonometric one.

use crate::vec2::Vec2;

pub(crate) struct PeriodicSpline {
    /// Breakpoints t_0 < ... < t_{n-1}, period appended as t_n = t_0 + period.
    t: Vec<f64>,
    y: Vec<Vec2>,
    /// Second derivatives at the breakpoints (wrapped, m[n] = m[0]).
    m: Vec<Vec2>,
}

impl PeriodicSpline {
    /// Fit through (t_j, y_j); `period` closes the curve: y(t_0 + period) = y_0.
    pub fn fit(t: &[f64], y: &[Vec2], period: f64) -> PeriodicSpline {
        let n = t.len();
        assert!(n >= 3 && y.len() == n);
        let mut h = vec![0.0; n];
        for j in 0..n {
            let next = if j + 1 == n { t[0] + period } else { t[j + 1] };
            h[j] = next - t[j];
            assert!(h[j] > 0.0, "breakpoints must be strictly increasing");
        }
        // Cyclic tridiagonal system for second derivatives, one per component.
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs_x = vec![0.0; n];
        let mut rhs_y = vec![0.0; n];
        for j in 0..n {
            let prev = (j + n - 1) % n;
            let next = (j + 1) % n;
            sub[j] = h[prev] / 6.0;
            diag[j] = (h[prev] + h[j]) / 3.0;
            sup[j] = h[j] / 6.0;
            let d_next = (y[next] - y[j]) / h[j];
            let d_prev = (y[j] - y[prev]) / h[prev];
            rhs_x[j] = d_next.x - d_prev.x;
            rhs_y[j] = d_next.y - d_prev.y;
        }
        let mx = cyclic_tridiag(&sub, &diag, &sup, &rhs_x);
        let my = cyclic_tridiag(&sub, &diag, &sup, &rhs_y);
        let mut m: Vec<Vec2> = mx
            .iter()
            .zip(&my)
            .map(|(a, b)| Vec2::new(*a, *b))
            .collect();
        m.push(m[0]);
        let mut tw = t.to_vec();
        tw.push(t[0] + period);
        let mut yw = y.to_vec();
        yw.push(y[0]);
        PeriodicSpline { t: tw, y: yw, m }
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.t.len() - 1;
        match self.t[..n].binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(j) => j.min(n - 1),
            Err(0) => 0,
            Err(j) => j - 1,
        }
    }

    /// Value at `t`, which must lie within one period of the breakpoints.
    pub fn eval(&self, t: f64) -> Vec2 {
        let j = self.segment(t);
        let (t0, t1) = (self.t[j], self.t[j + 1]);
        let hj = t1 - t0;
        let a = (t1 - t) / hj;
        let b = (t - t0) / hj;
        self.y[j] * a
            + self.y[j + 1] * b
            + (self.m[j] * (a * a * a - a) + self.m[j + 1] * (b * b * b - b)) * (hj * hj / 6.0)
    }

    /// Derivative dy/dt at `t`.
    pub fn deriv(&self, t: f64) -> Vec2 {
        let j = self.segment(t);
        let (t0, t1) = (self.t[j], self.t[j + 1]);
        let hj = t1 - t0;
        let a = (t1 - t) / hj;
        let b = (t - t0) / hj;
        (self.y[j + 1] - self.y[j]) / hj
            + (self.m[j] * (1.0 - 3.0 * a * a) + self.m[j + 1] * (3.0 * b * b - 1.0)) * (hj / 6.0)
    }

    pub fn t_start(&self) -> f64 {
        self.t[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().unwrap()
    }
}

/// Solves the cyclic tridiagonal system where row i couples x[i-1], x[i],
/// x[i+1] (indices mod n) via the Sherman-Morrison correction of a plain
/// Thomas solve.
fn cyclic_tridiag(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 3);
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - sub[0] * sup[n - 1] / gamma;
    let y = thomas(sub, &bb, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = sup[n - 1];
    let z = thomas(sub, &bb, sup, &u);
    // v = (1, 0, ..., 0, sub[0]/gamma)
    let vy = y[0] + sub[0] * y[n - 1] / gamma;
    let vz = z[0] + sub[0] * z[n - 1] / gamma;
    let factor = vy / (1.0 + vz);
    y.iter().zip(&z).map(|(yi, zi)| yi - factor * zi).collect()
}

/// Plain tridiagonal solve; `sub[0]` and `sup[n-1]` are ignored.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec2::Vec2;
    use std::f64::consts::TAU;

    #[test]
    fn cyclic_solver_matches_direct_substitution() {
        let sub = vec![1.0, 2.0, 0.5, 1.5, 0.7];
        let diag = vec![10.0, 9.0, 11.0, 8.0, 12.0];
        let sup = vec![0.3, 1.1, 0.9, 2.0, 0.4];
        let rhs = vec![1.0, -2.0, 3.0, 0.5, -1.0];
        let x = cyclic_tridiag(&sub, &diag, &sup, &rhs);
        let n = 5;
        for i in 0..n {
            let lhs =
                sub[i] * x[(i + n - 1) % n] + diag[i] * x[i] + sup[i] * x[(i + 1) % n];
            assert!((lhs - rhs[i]).abs() < 1e-12, "row {i}: {lhs} vs {}", rhs[i]);
        }
    }

    #[test]
    fn reproduces_circle_between_clustered_samples() {
        // Strongly clustered angles; spline error stays local to the gaps.
        let n = 64;
        let mut t = Vec::new();
        let mut y = Vec::new();
        for j in 0..n {
            let u = j as f64 / n as f64;
            let ang = TAU * u * u; // cluster near angle 0
            t.push(ang);
            y.push(Vec2::new(ang.cos(), ang.sin()));
        }
        // Degenerate first gap: drop duplicated t=0 region by offsetting slightly
        let spline = PeriodicSpline::fit(&t, &y, TAU);
        let mut worst: f64 = 0.0;
        for k in 0..1000 {
            let tt = TAU * k as f64 / 1000.0;
            let p = spline.eval(tt);
            worst = worst.max((p.norm() - 1.0).abs());
        }
        // Widest angular gap is about 2*TAU/n; quartic local error.
        assert!(worst < 2e-4, "worst radial deviation {worst}");
    }
}
