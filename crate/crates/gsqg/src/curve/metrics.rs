//! Distance and regularity measurements on families of closed curves.
//!
//! Every search here follows the same recipe: a dense deterministic parameter
//! grid produces a candidate, then coordinate-wise golden-section refinement
//! polishes it. Ties on the grid keep the earliest pair in enumeration order,
//! which is the lexicographically smallest (curve, parameter) combination, so
//! witnesses are reproducible across runs and thread counts.

use super::{torus_dist, ClosedCurve, DenseSamples};
use crate::error::{ContactReport, Error, Result};
use crate::search::{golden_max_closed, golden_min_closed};
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// A point on one curve of a family: curve index plus parameter on T.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointId {
    pub curve: usize,
    pub param: f64,
}

/// Extremal pair found by a distance search, with the achieved distance and
/// the unit direction from the second point towards the first.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DistanceWitness {
    pub distance: f64,
    pub a: PointId,
    pub b: PointId,
    /// (z_a - z_b) / distance; zero vector only when distance is zero.
    pub normal: Vec2,
}

/// Discrete estimate of the C^{1,gamma} norm of a curve. The true norm is a
/// supremum, so the estimate is a lower bound tagged with its grid size.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub gamma: f64,
    /// max(sup |z|, sup |z'|, gamma-seminorm of z').
    pub c1_norm: f64,
    pub sup_z: f64,
    pub sup_dz: f64,
    pub seminorm: f64,
    pub min_speed: f64,
    /// Number of parameter samples used (nodes plus midpoints).
    pub grid: usize,
}

/// A curve arc written as a graph over an axis: points are
/// `base_point + h v + f(h) v_perp` for h on a uniform grid in
/// [-half_width, half_width].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphFunction {
    pub base_point: Vec2,
    /// Unit axis direction v.
    pub axis: Vec2,
    pub half_width: f64,
    /// f values on the uniform h grid; the middle sample is f(0) = 0.
    pub samples: Vec<f64>,
    pub derivative_at_0: f64,
    /// Parameter range of the source arc.
    pub param_lo: f64,
    pub param_hi: f64,
}

impl GraphFunction {
    pub fn h_step(&self) -> f64 {
        2.0 * self.half_width / (self.samples.len() - 1) as f64
    }

    pub fn h_value(&self, j: usize) -> f64 {
        -self.half_width + self.h_step() * j as f64
    }

    /// Point of the plane reconstructed from sample `j`.
    pub fn point(&self, j: usize) -> Vec2 {
        self.base_point + self.axis * self.h_value(j) + self.axis.perp() * self.samples[j]
    }
}

/// Result of the tangent-alignment scan: the largest |tan angle| between
/// tangent lines of admissible close pairs, normalised by the chord raised to
/// gamma / (1 + gamma).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TangentAlignment {
    pub value: f64,
    /// True when no pair satisfied the distance and separation constraints.
    pub empty: bool,
    pub pair: Option<(PointId, PointId)>,
}

/// Slack applied to the separation constraint on the scan grid only; the
/// refinement stage clamps to the exact constraint set afterwards.
const SEP_SLACK: f64 = 1e-9;

fn scan_count(curve: &ClosedCurve) -> usize {
    (2 * curve.node_count()).max(256)
}

fn dense_all(curves: &[ClosedCurve]) -> Vec<DenseSamples> {
    curves.iter().map(|c| c.sample_dense(scan_count(c))).collect()
}

/// Coordinate-descent refinement of a two-parameter extremum. Each sweep runs
/// a golden-section search per coordinate on a window that shrinks by half,
/// clamped to the given bounds when present.
fn coord_refine(
    f: &mut impl FnMut(f64, f64) -> f64,
    start: (f64, f64),
    window: (f64, f64),
    bounds_x: Option<(f64, f64)>,
    bounds_y: Option<(f64, f64)>,
    maximize: bool,
) -> (f64, f64, f64) {
    let (mut x, mut y) = start;
    let (mut wx, mut wy) = window;
    let mut value = f(x, y);
    for _ in 0..4 {
        let (lo, hi) = clamped(x, wx, bounds_x);
        let (nx, vx) = if maximize {
            golden_max_closed(&mut |t| f(t, y), lo, hi, 48)
        } else {
            golden_min_closed(&mut |t| f(t, y), lo, hi, 48)
        };
        if better(vx, value, maximize) {
            x = nx;
            value = vx;
        }
        let (lo, hi) = clamped(y, wy, bounds_y);
        let (ny, vy) = if maximize {
            golden_max_closed(&mut |t| f(x, t), lo, hi, 48)
        } else {
            golden_min_closed(&mut |t| f(x, t), lo, hi, 48)
        };
        if better(vy, value, maximize) {
            y = ny;
            value = vy;
        }
        wx *= 0.5;
        wy *= 0.5;
    }
    (x, y, value)
}

fn better(candidate: f64, incumbent: f64, maximize: bool) -> bool {
    if maximize {
        candidate > incumbent
    } else {
        candidate < incumbent
    }
}

fn clamped(center: f64, half: f64, bounds: Option<(f64, f64)>) -> (f64, f64) {
    match bounds {
        None => (center - half, center + half),
        Some((lo, hi)) => ((center - half).max(lo).min(hi), (center + half).min(hi).max(lo)),
    }
}

/// Supremum of (|n - j| + |xi - eta|_T) / |z_n(xi) - z_j(eta)| over all
/// distinct pairs, the reciprocal arc-chord constant of the family. An exact
/// coincidence of two evaluated points is reported as a contact.
pub fn arc_chord_ratio(curves: &[ClosedCurve]) -> Result<(f64, DistanceWitness)> {
    if curves.is_empty() {
        return Err(Error::Parameter("arc-chord ratio of an empty family".into()));
    }
    let dense = dense_all(curves);
    // Boundary points reconstructed from the spectrum carry rounding of order
    // machine epsilon times the family extent; chords below that are touches.
    let extent = dense
        .iter()
        .flat_map(|s| s.pos.iter())
        .fold(0.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs()));
    let touch_tol = 1e-12 * extent.max(f64::MIN_POSITIVE);
    let mut best = f64::NEG_INFINITY;
    let mut arg: Option<(usize, f64, usize, f64)> = None;

    for ci in 0..curves.len() {
        for cj in ci..curves.len() {
            let same = ci == cj;
            let gap = (cj - ci) as f64;
            let (sa, sb) = (&dense[ci], &dense[cj]);
            for ia in 0..sa.count {
                let start_b = if same { ia + 1 } else { 0 };
                let za = sa.pos[ia];
                let pa = sa.param(ia);
                for ib in start_b..sb.count {
                    let chord = za.dist(sb.pos[ib]);
                    let pb = sb.param(ib);
                    if chord <= touch_tol {
                        return Err(touch_error(ci, cj, za, pa, pb));
                    }
                    let r = (gap + torus_dist(pa, pb)) / chord;
                    if r > best {
                        best = r;
                        arg = Some((ci, pa, cj, pb));
                    }
                }
            }
        }
    }
    let (ci, pa, cj, pb) = arg.expect("grid is never empty");
    let gap = (cj as f64 - ci as f64).abs();
    let (ca, cb) = (&curves[ci], &curves[cj]);
    let mut f = |x: f64, y: f64| {
        let chord = ca.eval(x).dist(cb.eval(y));
        if chord <= touch_tol {
            f64::INFINITY
        } else {
            (gap + torus_dist(x, y)) / chord
        }
    };
    let wx = 1.5 * TAU / scan_count(ca) as f64;
    let wy = 1.5 * TAU / scan_count(cb) as f64;
    let (x, y, value) = coord_refine(&mut f, (pa, pb), (wx, wy), None, None, true);
    let value = value.max(best);
    if !value.is_finite() {
        return Err(touch_error(ci, cj, ca.eval(x), x, y));
    }
    let (za, zb) = (ca.eval(x), cb.eval(y));
    let distance = za.dist(zb);
    Ok((
        value,
        DistanceWitness {
            distance,
            a: PointId { curve: ci, param: x.rem_euclid(TAU) },
            b: PointId { curve: cj, param: y.rem_euclid(TAU) },
            normal: (za - zb) / distance,
        },
    ))
}

fn touch_error(ci: usize, cj: usize, position: Vec2, pa: f64, pb: f64) -> Error {
    Error::Contact(ContactReport {
        time: 0.0,
        step_index: 0,
        patch_a: ci,
        patch_b: cj,
        position,
        separation: 0.0,
        detail: format!(
            "splash detected: boundary points at parameters {pa:.6} and {pb:.6} coincide"
        ),
    })
}

/// Discrete C^{1,gamma} data of a single curve over nodes plus midpoints.
pub fn holder_c1gamma_norm(curve: &ClosedCurve, gamma: f64) -> Result<HolderEstimate> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter(format!(
            "Holder exponent must lie in (0, 1], got {gamma}"
        )));
    }
    let grid = 2 * curve.node_count();
    let s = curve.sample_dense(grid);
    let mut sup_z = 0.0f64;
    let mut sup_dz = 0.0f64;
    let mut min_speed = f64::INFINITY;
    for j in 0..grid {
        sup_z = sup_z.max(s.pos[j].norm());
        let speed = s.der[j].norm();
        sup_dz = sup_dz.max(speed);
        min_speed = min_speed.min(speed);
    }
    let mut seminorm = 0.0f64;
    for j in 0..grid {
        for k in (j + 1)..grid {
            let d = torus_dist(s.param(j), s.param(k));
            let r = s.der[j].dist(s.der[k]) / d.powf(gamma);
            if r > seminorm {
                seminorm = r;
            }
        }
    }
    Ok(HolderEstimate {
        gamma,
        c1_norm: sup_z.max(sup_dz).max(seminorm),
        sup_z,
        sup_dz,
        seminorm,
        min_speed,
        grid,
    })
}

/// Minimum distance |z_n(xi) - z_j(eta)| over pairs separated by at least
/// `delta` in parameter on the same curve; pairs on different curves are
/// always admissible. The witness normal points from the second point to the
/// first.
pub fn min_fold_distance(curves: &[ClosedCurve], delta: f64) -> Result<DistanceWitness> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Parameter(format!(
            "separation threshold must be positive and finite, got {delta}"
        )));
    }
    if curves.is_empty() {
        return Err(Error::Parameter("fold distance of an empty family".into()));
    }
    let half = TAU / 2.0;
    let same_admissible = delta <= half + SEP_SLACK;
    if curves.len() == 1 && !same_admissible {
        return Err(Error::Parameter(format!(
            "separation threshold {delta} excludes every pair on a single curve \
             (parameter distances never exceed {half:.6})"
        )));
    }
    let dense = dense_all(curves);
    let mut best = f64::INFINITY;
    // (curve a, param a, curve b, offset-or-param b, same-curve flag)
    let mut arg: Option<(usize, f64, usize, f64, bool)> = None;

    for ci in 0..curves.len() {
        for cj in ci..curves.len() {
            let same = ci == cj;
            if same && !same_admissible {
                continue;
            }
            let (sa, sb) = (&dense[ci], &dense[cj]);
            for ia in 0..sa.count {
                let pa = sa.param(ia);
                let start_b = if same { ia + 1 } else { 0 };
                for ib in start_b..sb.count {
                    let pb = sb.param(ib);
                    if same && torus_dist(pa, pb) < delta - SEP_SLACK {
                        continue;
                    }
                    let d = sa.pos[ia].dist(sb.pos[ib]);
                    if d < best {
                        best = d;
                        let second = if same { (pb - pa).rem_euclid(TAU) } else { pb };
                        arg = Some((ci, pa, cj, second, same));
                    }
                }
            }
        }
    }
    let (ci, pa, cj, pb, same) = match arg {
        Some(a) => a,
        None => {
            return Err(Error::Parameter(
                "separation threshold excludes every sampled pair".into(),
            ))
        }
    };
    let (ca, cb) = (&curves[ci], &curves[cj]);
    let wx = 1.5 * TAU / scan_count(ca) as f64;
    let wy = 1.5 * TAU / scan_count(cb) as f64;
    let (x, y_final) = if same {
        // Same curve: refine in (xi, u) with eta = xi + u so the separation
        // constraint is a plain interval clamp on u.
        let mut f = |xi: f64, u: f64| ca.eval(xi).dist(ca.eval(xi + u));
        let u0 = pb.clamp(delta, TAU - delta);
        let (x, u, _) = coord_refine(
            &mut f,
            (pa, u0),
            (wx, wy),
            None,
            Some((delta, TAU - delta)),
            false,
        );
        (x, x + u)
    } else {
        let mut f = |xi: f64, eta: f64| ca.eval(xi).dist(cb.eval(eta));
        let (x, y, _) = coord_refine(&mut f, (pa, pb), (wx, wy), None, None, false);
        (x, y)
    };
    let (za, zb) = (ca.eval(x), cb.eval(y_final));
    let distance = za.dist(zb);
    let normal = if distance > 0.0 {
        (za - zb) / distance
    } else {
        Vec2::new(0.0, 0.0)
    };
    Ok(DistanceWitness {
        distance,
        a: PointId { curve: ci, param: x.rem_euclid(TAU) },
        b: PointId { curve: cj, param: y_final.rem_euclid(TAU) },
        normal,
    })
}

/// Writes the arc around `xi` as a graph over the axis `v`: solves
/// (z(s) - z(xi)) . v = h for a uniform grid of h in [-r1, r1] by marching
/// Newton steps away from the base point.
pub fn local_graph(curve: &ClosedCurve, xi: f64, v: Vec2, r1: f64) -> Result<GraphFunction> {
    if !(r1 > 0.0) || !r1.is_finite() {
        return Err(Error::Parameter(format!(
            "graph half-width must be positive and finite, got {r1}"
        )));
    }
    let vn = v.norm();
    if !(vn > 0.0) || !v.is_finite() {
        return Err(Error::Parameter("graph axis must be a nonzero vector".into()));
    }
    let axis = v / vn;
    let (z0, dz0) = curve.eval_both(xi);
    let tv = dz0.dot(axis);
    if tv.abs() < 0.5 * dz0.norm() {
        return Err(Error::Parameter(format!(
            "axis misaligned with the tangent at the base point: \
             |z'.v| = {:.3e} < 0.5 |z'| = {:.3e}",
            tv.abs(),
            0.5 * dz0.norm()
        )));
    }

    // Grid spacing: a quarter of the node arc spacing, so the marching
    // predictor stays inside the Newton basin.
    let node_arc = dz0.norm() * curve.param_step();
    let half = ((4.0 * r1 / node_arc).ceil() as usize).clamp(16, 4096);
    let h_step = r1 / half as f64;
    let tol = 1e-13 * r1.max(node_arc);

    let mut samples = vec![0.0f64; 2 * half + 1];
    let mut param_lo = xi;
    let mut param_hi = xi;
    for dir in [1.0f64, -1.0] {
        let mut s = xi;
        for i in 1..=half {
            let target = dir * h_step * i as f64;
            // Predictor from the previous solution, then Newton.
            let mut ds = dir * h_step / curve.deriv(s).dot(axis);
            s += ds;
            let mut ok = false;
            for _ in 0..30 {
                let (z, dz) = curve.eval_both(s);
                let err = (z - z0).dot(axis) - target;
                let slope = dz.dot(axis);
                if slope.abs() < 0.5 * dz.norm() {
                    return Err(graph_window_error(h_step, i, dir, target));
                }
                ds = -err / slope;
                // Keep steps comparable to the grid spacing; the solution
                // moves by about h_step / |slope| per target.
                let cap = 4.0 * h_step / slope.abs().max(1e-300) + curve.param_step();
                s += ds.clamp(-cap, cap);
                if err.abs() <= tol {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Err(graph_window_error(h_step, i, dir, target));
            }
            let (z, dz) = curve.eval_both(s);
            if dz.dot(axis).abs() < 0.5 * dz.norm() {
                return Err(graph_window_error(h_step, i, dir, target));
            }
            let idx = if dir > 0.0 { half + i } else { half - i };
            samples[idx] = (z - z0).dot(axis.perp());
            if dir > 0.0 {
                param_hi = s;
            } else {
                param_lo = s;
            }
        }
    }
    if param_lo > param_hi {
        std::mem::swap(&mut param_lo, &mut param_hi);
    }
    Ok(GraphFunction {
        base_point: z0,
        axis,
        half_width: r1,
        samples,
        derivative_at_0: dz0.dot(axis.perp()) / tv,
        param_lo,
        param_hi,
    })
}

fn graph_window_error(h_step: f64, i: usize, dir: f64, target: f64) -> Error {
    let admissible = h_step * (i - 1) as f64;
    let side = if dir > 0.0 { "positive" } else { "negative" };
    Error::Geometry(format!(
        "curve stops being a graph over the axis near h = {target:.6e} on the {side} side; \
         largest admissible half-width is {admissible:.6e}"
    ))
}

/// Empirical bound for the angle between tangent lines of nearby points:
/// max over admissible pairs of |tan angle| / chord^{gamma/(1+gamma)}. Pairs
/// must satisfy 0 < chord <= r_max, and same-curve pairs additionally need
/// parameter separation at least `delta`.
pub fn tangent_angle_ratio(
    curves: &[ClosedCurve],
    gamma: f64,
    r_max: f64,
    delta: f64,
) -> Result<TangentAlignment> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter(format!(
            "Holder exponent must lie in (0, 1], got {gamma}"
        )));
    }
    if !(r_max > 0.0) {
        return Err(Error::Parameter(format!(
            "chord cutoff must be positive, got {r_max}"
        )));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Parameter(format!(
            "separation threshold must be positive and finite, got {delta}"
        )));
    }
    let exponent = gamma / (1.0 + gamma);
    let dense = dense_all(curves);
    let mut best = f64::NEG_INFINITY;
    let mut pair = None;
    for ci in 0..curves.len() {
        for cj in ci..curves.len() {
            let same = ci == cj;
            let (sa, sb) = (&dense[ci], &dense[cj]);
            for ia in 0..sa.count {
                let pa = sa.param(ia);
                let start_b = if same { ia + 1 } else { 0 };
                for ib in start_b..sb.count {
                    let pb = sb.param(ib);
                    if same && torus_dist(pa, pb) < delta - SEP_SLACK {
                        continue;
                    }
                    let chord = sa.pos[ia].dist(sb.pos[ib]);
                    if chord <= 0.0 || chord > r_max {
                        continue;
                    }
                    let (da, db) = (sa.der[ia], sb.der[ib]);
                    let tan = da.cross(db).abs() / da.dot(db).abs();
                    let r = tan / chord.powf(exponent);
                    if r > best {
                        best = r;
                        pair = Some((
                            PointId { curve: ci, param: pa },
                            PointId { curve: cj, param: pb },
                        ));
                    }
                }
            }
        }
    }
    match pair {
        None => Ok(TangentAlignment {
            value: 0.0,
            empty: true,
            pair: None,
        }),
        Some(p) => Ok(TangentAlignment {
            value: best,
            empty: false,
            pair: Some(p),
        }),
    }
}
