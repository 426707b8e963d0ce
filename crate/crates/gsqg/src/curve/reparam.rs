//! Constant-speed reparameterization.
//!
//! Three routes, tried in order of accuracy:
//!
//! 1. If the trigonometric interpolant through the raw nodes already has a
//!    moderate speed profile, it is polished directly by iterated
//!    equal-arclength resampling. Smoothly sampled input never leaves the
//!    spectral regime this way.
//! 2. Otherwise a chordal periodic cubic spline supplies arc-length
//!    estimates for the raw nodes, and a trigonometric polynomial is re-fit
//!    through the nodes at those parameters. The fit stays exactly on the
//!    data, so smooth shapes are recovered to near machine accuracy even
//!    from badly clustered samples; a cubic spline resample alone would
//!    freeze its O(h^4) interpolation error into the shape.
//! 3. If that solve is ill-conditioned (wildly irregular data) the spline
//!    itself is resampled at equal arc length, twice, as a robust fallback.
//!
//! Node 0 stays anchored at the first input vertex, so the whole pipeline is
//! deterministic.

use super::spline::PeriodicSpline;
use super::{polygon_signed_area, ClosedCurve, MIN_NODES};
use crate::error::{Error, Result};
use crate::quad;
use crate::vec2::Vec2;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::{PI, TAU};

#[derive(Clone, Debug)]
pub struct ReparamOptions {
    /// Target relative variation of |z'| across nodes, (max - min) / mean.
    pub speed_tol: f64,
    /// Polish iteration budget before giving up with an accuracy error.
    pub max_iterations: usize,
    /// Oversampling factor for the arc-length map (fine grid = factor * N).
    pub fine_factor: usize,
}

impl Default for ReparamOptions {
    fn default() -> Self {
        ReparamOptions {
            speed_tol: 1e-8,
            max_iterations: 40,
            fine_factor: 8,
        }
    }
}

/// Reparameterizes a raw closed polygon to constant speed with default
/// options. Clockwise input is reversed, so both orientations are accepted.
pub fn reparameterize_constant_speed(raw: &[Vec2]) -> Result<ClosedCurve> {
    reparameterize_with(raw, &ReparamOptions::default())
}

pub fn reparameterize_with(raw: &[Vec2], opts: &ReparamOptions) -> Result<ClosedCurve> {
    if raw.len() < MIN_NODES {
        return Err(Error::Resolution(format!(
            "{} nodes supplied; at least {MIN_NODES} are required",
            raw.len()
        )));
    }
    for (i, p) in raw.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::Geometry(format!("node {i} is not finite")));
        }
    }
    let mut nodes = raw.to_vec();
    let area = polygon_signed_area(&nodes);
    if area == 0.0 {
        return Err(Error::Geometry(
            "polygon encloses zero signed area".into(),
        ));
    }
    if area < 0.0 {
        // Reverse to counterclockwise, keeping the first vertex first.
        nodes[1..].reverse();
    }
    let n = nodes.len();
    for i in 0..n {
        if nodes[i].dist(nodes[(i + 1) % n]) == 0.0 {
            return Err(Error::Geometry(format!(
                "nodes {i} and {} coincide",
                (i + 1) % n
            )));
        }
    }
    if let Some((i, j)) = super::first_self_intersection(&nodes) {
        return Err(Error::Geometry(format!(
            "boundary polygon self-intersects: edge {i} crosses edge {j}"
        )));
    }

    // Already constant speed: return the input unchanged, so the operation
    // is exactly idempotent.
    let direct = ClosedCurve::from_nodes_unchecked(nodes.clone());
    let direct_variation = node_speed_variation(&direct);
    if direct_variation <= opts.speed_tol {
        return ClosedCurve::from_nodes(nodes);
    }

    let mut best: Option<(ClosedCurve, f64)> = None;
    let mut last_err: Option<Error> = None;

    // A moderate speed profile means the interpolant itself is trustworthy;
    // polishing it directly keeps full spectral accuracy. Strongly clustered
    // input would make the interpolant ring between nodes, so that case goes
    // straight to the seeded routes.
    if direct_variation <= 0.75 {
        match polish_attempt(direct, opts) {
            Ok((c, v)) if v <= opts.speed_tol => return ClosedCurve::from_nodes(c.nodes),
            Ok((c, v)) => keep_better(&mut best, c, v),
            Err(e) => last_err = Some(e),
        }
    }

    let arc = SplineArc::build(&nodes);
    if n <= REFIT_LIMIT {
        if let Some(seed) = trig_refit_seed(&nodes, &arc.node_params()) {
            match polish_attempt(ClosedCurve::from_nodes_unchecked(seed), opts) {
                Ok((c, v)) if v <= opts.speed_tol => return ClosedCurve::from_nodes(c.nodes),
                Ok((c, v)) => keep_better(&mut best, c, v),
                Err(e) => last_err = Some(e),
            }
        }
    }

    let pass1 = arc.resample(n);
    let seeded = SplineArc::build(&pass1).resample(n);
    match polish_attempt(ClosedCurve::from_nodes_unchecked(seeded), opts) {
        Ok((c, v)) if v <= opts.speed_tol => return ClosedCurve::from_nodes(c.nodes),
        Ok((c, v)) => keep_better(&mut best, c, v),
        Err(e) => last_err = Some(e),
    }

    match best {
        Some((_, v)) => Err(Error::accuracy(
            "constant-speed resampling stalled; the sampled shape may be under-resolved",
            v,
            opts.speed_tol,
        )),
        None => Err(last_err.expect("the spline route always reports an error or a result")),
    }
}

fn keep_better(best: &mut Option<(ClosedCurve, f64)>, curve: ClosedCurve, variation: f64) {
    if best.as_ref().is_none_or(|(_, bv)| variation < *bv) {
        *best = Some((curve, variation));
    }
}

/// Resamples an existing interpolant to uniform arc length without changing
/// the node count. Shape is preserved up to interpolation accuracy.
pub fn resample_uniform_arclength(
    curve: &ClosedCurve,
    opts: &ReparamOptions,
) -> Result<ClosedCurve> {
    let (out, variation) = polish_attempt(curve.clone(), opts)?;
    if variation <= opts.speed_tol {
        Ok(out)
    } else {
        Err(Error::accuracy(
            "constant-speed resampling stalled; the sampled shape may be under-resolved",
            variation,
            opts.speed_tol,
        ))
    }
}

/// Relative variation (max - min) / mean of |z'| over the nodes.
pub(crate) fn node_speed_variation(curve: &ClosedCurve) -> f64 {
    let n = curve.node_count();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut sum = 0.0;
    for j in 0..n {
        let s = curve.deriv(curve.param(j)).norm();
        lo = lo.min(s);
        hi = hi.max(s);
        sum += s;
    }
    let mean = sum / n as f64;
    if mean <= 0.0 {
        f64::INFINITY
    } else {
        (hi - lo) / mean
    }
}

/// Iterated equal-arclength resampling on the trigonometric interpolant.
/// The fixed point has the nodes equidistributed by arc length of their own
/// interpolant; the residual node-speed variation there is the aliasing level
/// of the shape at this node count. Analytic well-resolved shapes sit far
/// below the default tolerance, while under-resolved input stalls above it.
/// Returns the best curve reached together with its variation; errors only
/// on geometric breakdown (a cusp at this resolution).
fn polish_attempt(start: ClosedCurve, opts: &ReparamOptions) -> Result<(ClosedCurve, f64)> {
    let n = start.node_count();
    let fine = (opts.fine_factor.max(2) * n).next_power_of_two();
    let mut curve = start;
    let mut variation = node_speed_variation(&curve);
    for _ in 0..opts.max_iterations {
        if variation <= opts.speed_tol {
            break;
        }
        let map = ArcLengthMap::build(&curve, fine)?;
        let mut new_nodes = Vec::with_capacity(n);
        new_nodes.push(curve.eval(0.0));
        for k in 1..n {
            let target = map.total * k as f64 / n as f64;
            let xi = map.invert(&curve, target);
            new_nodes.push(curve.eval(xi));
        }
        let next = ClosedCurve::from_nodes_unchecked(new_nodes);
        let next_variation = node_speed_variation(&next);
        // The iteration contracts until it hits the aliasing floor; once the
        // decrease stops being substantial there is nothing left to gain.
        let stalled = next_variation > 0.9 * variation;
        if next_variation < variation {
            curve = next;
            variation = next_variation;
        }
        if stalled {
            break;
        }
    }
    Ok((curve, variation))
}

/// Spectral arc-length map s(xi) = integral of |z'| from 0 to xi, built from
/// an oversampled speed profile so partial integrals keep spectral accuracy.
struct ArcLengthMap {
    /// FFT-ordered modes of the speed profile.
    modes: Vec<Complex64>,
    /// Cumulative trapezoid table used for inversion initial guesses.
    coarse: Vec<f64>,
    total: f64,
}

impl ArcLengthMap {
    fn build(curve: &ClosedCurve, fine: usize) -> Result<ArcLengthMap> {
        let mut buf = Vec::with_capacity(fine);
        let mut speeds = Vec::with_capacity(fine);
        for j in 0..fine {
            let s = curve.deriv(TAU * j as f64 / fine as f64).norm();
            if s <= 0.0 {
                return Err(Error::Geometry(
                    "interpolant speed vanishes; curve has a cusp at this resolution".into(),
                ));
            }
            speeds.push(s);
            buf.push(Complex64::new(s, 0.0));
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(fine).process(&mut buf);
        let scale = 1.0 / fine as f64;
        for c in &mut buf {
            *c *= scale;
        }
        let h = TAU / fine as f64;
        let mut coarse = Vec::with_capacity(fine + 1);
        let mut acc = 0.0;
        coarse.push(0.0);
        for j in 0..fine {
            let next = speeds[(j + 1) % fine];
            acc += 0.5 * (speeds[j] + next) * h;
            coarse.push(acc);
        }
        let total = buf[0].re * TAU;
        Ok(ArcLengthMap {
            modes: buf,
            coarse,
            total,
        })
    }

    /// s(xi) by spectral antiderivative.
    fn eval(&self, xi: f64) -> f64 {
        let f = self.modes.len();
        let half = f / 2;
        let rot = Complex64::from_polar(1.0, xi);
        let rot_c = rot.conj();
        let mut fwd = Complex64::new(1.0, 0.0);
        let mut bwd = Complex64::new(1.0, 0.0);
        let mut acc = self.modes[0].re * xi;
        let top = if f % 2 == 0 { half - 1 } else { half };
        for k in 1..=top {
            fwd *= rot;
            bwd *= rot_c;
            let ik = Complex64::new(0.0, k as f64);
            // (c_k / (i k)) (e^{i k xi} - 1) + conjugate-frequency partner
            let term = self.modes[k] / ik * (fwd - 1.0) - self.modes[f - k] / ik * (bwd - 1.0);
            acc += term.re;
        }
        if f % 2 == 0 {
            let hh = half as f64;
            acc += self.modes[half].re * (hh * xi).sin() / hh;
        }
        acc
    }

    /// Inverse of the arc-length map by Newton with a table-based first guess.
    fn invert(&self, curve: &ClosedCurve, target: f64) -> f64 {
        let fine = self.coarse.len() - 1;
        let h = TAU / fine as f64;
        // Binary search on the monotone cumulative table.
        let mut lo = 0usize;
        let mut hi = fine;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.coarse[mid] <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let seg = self.coarse[hi] - self.coarse[lo];
        let frac = if seg > 0.0 {
            (target - self.coarse[lo]) / seg
        } else {
            0.0
        };
        let mut xi = h * (lo as f64 + frac);
        for _ in 0..5 {
            let err = self.eval(xi) - target;
            let speed = curve.deriv(xi).norm();
            let step = err / speed;
            xi -= step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        xi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_nodes(n: usize, r: f64) -> Vec<Vec2> {
        (0..n)
            .map(|j| {
                let a = TAU * j as f64 / n as f64;
                Vec2::new(r * a.cos(), r * a.sin())
            })
            .collect()
    }

    #[test]
    fn uniform_circle_is_already_constant_speed() {
        let c = reparameterize_constant_speed(&circle_nodes(64, 1.0)).unwrap();
        assert!(node_speed_variation(&c) <= 1e-8);
        for j in 0..64 {
            let s = c.deriv(c.param(j)).norm();
            assert!((s - 1.0).abs() < 1e-10, "speed {s} at node {j}");
        }
    }

    #[test]
    fn clockwise_input_is_reversed() {
        let mut nodes = circle_nodes(32, 2.0);
        nodes.reverse();
        let c = reparameterize_constant_speed(&nodes).unwrap();
        assert!(c.signed_area() > 0.0);
    }

    #[test]
    fn too_few_nodes_is_a_resolution_error() {
        let r = reparameterize_constant_speed(&circle_nodes(8, 1.0));
        assert!(matches!(r, Err(Error::Resolution(_))));
    }

    #[test]
    fn figure_eight_is_rejected() {
        let n = 32;
        let nodes: Vec<Vec2> = (0..n)
            .map(|j| {
                let a = TAU * j as f64 / n as f64;
                Vec2::new((2.0 * a).sin(), a.sin())
            })
            .collect();
        let r = reparameterize_constant_speed(&nodes);
        assert!(matches!(r, Err(Error::Geometry(_))), "{r:?}");
    }
}

/// Above this node count the dense trigonometric re-fit (cubic cost) is
/// skipped and the spline fallback is used directly.
const REFIT_LIMIT: usize = 768;

/// Chordal periodic cubic spline through a polygon together with its
/// arc-length tables. Supplies equal-arclength resamples and arc-length
/// parameters of the original vertices.
struct SplineArc {
    spline: PeriodicSpline,
    /// Chordal parameter of each vertex, scaled to [0, TAU).
    t: Vec<f64>,
    /// Arc length of each spline segment.
    seg_len: Vec<f64>,
    /// Cumulative arc length at each vertex; cum[n] is the total.
    cum: Vec<f64>,
    total: f64,
}

impl SplineArc {
    fn build(nodes: &[Vec2]) -> SplineArc {
        let n = nodes.len();
        let mut t = Vec::with_capacity(n);
        let mut acc = 0.0;
        for i in 0..n {
            t.push(acc);
            acc += nodes[i].dist(nodes[(i + 1) % n]);
        }
        let chord_total = acc;
        for v in &mut t {
            *v *= TAU / chord_total;
        }
        let spline = PeriodicSpline::fit(&t, nodes, TAU);

        let mut seg_len = Vec::with_capacity(n);
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut total = 0.0;
        let t_end = spline.t_end();
        for i in 0..n {
            let a = if i == 0 { spline.t_start() } else { t[i] };
            let b = if i + 1 == n { t_end } else { t[i + 1] };
            let mut f = |u: f64| spline.deriv(u).norm();
            let len = quad::gl(&mut f, a, b, 16);
            seg_len.push(len);
            total += len;
            cum.push(total);
        }
        SplineArc {
            spline,
            t,
            seg_len,
            cum,
            total,
        }
    }

    /// Arc-length parameter (scaled to [0, TAU)) of each original vertex.
    fn node_params(&self) -> Vec<f64> {
        self.cum[..self.cum.len() - 1]
            .iter()
            .map(|&s| TAU * s / self.total)
            .collect()
    }

    /// Points at m equal arc-length steps along the spline, starting at
    /// vertex 0.
    fn resample(&self, m: usize) -> Vec<Vec2> {
        let n = self.t.len();
        let t_end = self.spline.t_end();
        let mut out = Vec::with_capacity(m);
        for k in 0..m {
            let target = self.total * k as f64 / m as f64;
            // Locate the segment, then solve for the parameter inside it.
            let mut lo = 0usize;
            let mut hi = n;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if self.cum[mid] <= target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let a = if lo == 0 {
                self.spline.t_start()
            } else {
                self.t[lo]
            };
            let b = if lo + 1 == n { t_end } else { self.t[lo + 1] };
            let want = target - self.cum[lo];
            let mut u_lo = a;
            let mut u_hi = b;
            let mut u = if self.seg_len[lo] > 0.0 {
                a + (b - a) * want / self.seg_len[lo]
            } else {
                a
            };
            for _ in 0..40 {
                let mut f = |s: f64| self.spline.deriv(s).norm();
                let have = quad::gl(&mut f, a, u, 16);
                let err = have - want;
                if err.abs() < 1e-13 * self.total.max(1.0) {
                    break;
                }
                if err > 0.0 {
                    u_hi = u;
                } else {
                    u_lo = u;
                }
                let d = self.spline.deriv(u).norm();
                let mut next = u - err / d;
                if !(next > u_lo && next < u_hi) {
                    next = 0.5 * (u_lo + u_hi);
                }
                u = next;
            }
            out.push(self.spline.eval(u));
        }
        out
    }
}

/// Bandwidth-limited least-squares trigonometric fit of the raw nodes at the
/// given parameters, evaluated back at uniform parameters. The parameters
/// only need to be approximate arc lengths, and the bandwidth is capped by
/// the widest parameter gap so the fit cannot oscillate between sparse
/// samples; frequencies beyond that cap would be locally unconstrained.
/// Returns None when the fit fails to reproduce the data, which sends the
/// caller to the plain spline resample.
fn trig_refit_seed(nodes: &[Vec2], theta: &[f64]) -> Option<Vec<Vec2>> {
    let n = nodes.len();
    let mut gap_max = TAU + theta[0] - theta[n - 1];
    for j in 1..n {
        gap_max = gap_max.max(theta[j] - theta[j - 1]);
    }
    if !(gap_max > 0.0) {
        return None;
    }
    let k_top = ((0.8 * PI / gap_max) as usize).clamp(1, (n - 1) / 2);
    let cols = 2 * k_top + 1;

    // Normal equations of the n x cols system A c = w, A[j][col] =
    // e^{i (col - k_top) theta_j}, w = x + i y.
    let rhs: Vec<Complex64> = nodes.iter().map(|p| Complex64::new(p.x, p.y)).collect();
    let mut basis_row = vec![Complex64::default(); cols];
    let mut gram = vec![Complex64::default(); cols * cols];
    let mut proj = vec![Complex64::default(); cols];
    for (j, &th) in theta.iter().enumerate() {
        for (col, b) in basis_row.iter_mut().enumerate() {
            *b = Complex64::from_polar(1.0, (col as f64 - k_top as f64) * th);
        }
        for r in 0..cols {
            let br = basis_row[r].conj();
            proj[r] += br * rhs[j];
            for c in 0..cols {
                gram[r * cols + c] += br * basis_row[c];
            }
        }
    }
    let coef = solve_dense_complex(gram, proj)?;

    let refit_eval = |th: f64| -> Complex64 {
        let mut acc = Complex64::default();
        for (col, c) in coef.iter().enumerate() {
            acc += c * Complex64::from_polar(1.0, (col as f64 - k_top as f64) * th);
        }
        acc
    };

    let mean = nodes.iter().fold(Vec2::ZERO, |s, p| s + *p) * (1.0 / n as f64);
    let scale = nodes
        .iter()
        .map(|p| p.dist(mean))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for (j, &th) in theta.iter().enumerate() {
        let err = (refit_eval(th) - rhs[j]).norm();
        if !(err <= 1e-6 * scale) {
            return None;
        }
    }

    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let w = refit_eval(TAU * m as f64 / n as f64);
        if !w.re.is_finite() || !w.im.is_finite() {
            return None;
        }
        out.push(Vec2::new(w.re, w.im));
    }
    Some(out)
}

/// Dense complex LU solve with partial pivoting. Returns None when a pivot
/// collapses relative to the largest matrix entry.
fn solve_dense_complex(mut a: Vec<Complex64>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    let amax = a.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if amax == 0.0 {
        return None;
    }
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm_sqr();
        for row in col + 1..n {
            let v = a[row * n + col].norm_sqr();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best.sqrt() < 1e-13 * amax {
            return None;
        }
        if piv != col {
            for k in col..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == Complex64::default() {
                continue;
            }
            for k in col + 1..n {
                let v = a[col * n + k];
                a[row * n + k] -= f * v;
            }
            let bv = b[col];
            b[row] -= f * bv;
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Some(b)
}
