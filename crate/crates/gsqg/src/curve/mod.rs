//! Closed patch boundaries as periodic trigonometric interpolants.
//!
//! A curve is stored as its nodes at the uniform parameters `xi_j = 2 pi j / N`
//! together with the spectrum of `w(xi) = x(xi) + i y(xi)`. Interpolation is
//! exact at the nodes, evaluation anywhere costs O(N), and derivatives come
//! from the spectrum, so no finite differencing happens anywhere downstream.
//! Orientation is always counterclockwise: enclosed area is positive and the
//! outward normal is the clockwise rotation of the unit tangent.

mod metrics;
mod reparam;
mod spline;

pub use metrics::{
    arc_chord_ratio, holder_c1gamma_norm, local_graph, min_fold_distance, tangent_angle_ratio,
    DistanceWitness, GraphFunction, HolderEstimate, PointId, TangentAlignment,
};
pub use reparam::{reparameterize_constant_speed, reparameterize_with, resample_uniform_arclength,
    ReparamOptions};

use crate::error::{Error, Result};
use crate::vec2::Vec2;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::TAU;

/// Minimum node count accepted anywhere; coarser input cannot carry the
/// spectral representation the diagnostics rely on.
pub const MIN_NODES: usize = 16;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Debug)]
pub struct ClosedCurve {
    nodes: Vec<Vec2>,
    /// FFT-ordered coefficients of w = x + i y (index k holds frequency k for
    /// k <= N/2, k - N above; the N/2 entry of an even-length transform is
    /// evaluated as a cosine so the interpolant matches per-component real
    /// trigonometric interpolation).
    modes: Vec<Complex64>,
}

/// Distance between parameters on the circle R / 2 pi Z.
pub fn torus_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

impl ClosedCurve {
    /// Builds the interpolant through `nodes` placed at uniform parameters and
    /// validates the full geometric contract: node count, finiteness, simple
    /// polygon, counterclockwise orientation.
    pub fn from_nodes(nodes: Vec<Vec2>) -> Result<ClosedCurve> {
        validate_polygon(&nodes)?;
        let area = polygon_signed_area(&nodes);
        if area <= 0.0 {
            return Err(Error::Geometry(format!(
                "orientation must be counterclockwise (signed area {area:.3e}); reverse the node order"
            )));
        }
        Ok(Self::from_nodes_unchecked(nodes))
    }

    /// Interpolant construction without the O(n^2) simplicity check. Used on
    /// intermediate integrator stages; the caller re-validates afterwards.
    pub(crate) fn from_nodes_unchecked(nodes: Vec<Vec2>) -> ClosedCurve {
        let n = nodes.len();
        let mut buf: Vec<Complex64> = nodes
            .iter()
            .map(|p| Complex64::new(p.x, p.y))
            .collect();
        PLANNER.with(|pl| {
            let fft = pl.borrow_mut().plan_fft_forward(n);
            fft.process(&mut buf);
        });
        let scale = 1.0 / n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        ClosedCurve { nodes, modes: buf }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn node(&self, j: usize) -> Vec2 {
        self.nodes[j]
    }

    /// Parameter of node `j`.
    pub fn param(&self, j: usize) -> f64 {
        TAU * j as f64 / self.nodes.len() as f64
    }

    /// Uniform parameter spacing between adjacent nodes.
    pub fn param_step(&self) -> f64 {
        TAU / self.nodes.len() as f64
    }

    /// Position at parameter `xi`.
    pub fn eval(&self, xi: f64) -> Vec2 {
        self.eval_both(xi).0
    }

    /// Derivative dz/dxi at parameter `xi`.
    pub fn deriv(&self, xi: f64) -> Vec2 {
        self.eval_both(xi).1
    }

    /// Position and derivative in one spectral pass.
    pub fn eval_both(&self, xi: f64) -> (Vec2, Vec2) {
        let n = self.modes.len();
        let half = n / 2;
        let rot = Complex64::from_polar(1.0, xi);
        let rot_c = rot.conj();
        let mut fwd = Complex64::new(1.0, 0.0);
        let mut bwd = Complex64::new(1.0, 0.0);
        let mut w = self.modes[0];
        let mut dw = Complex64::new(0.0, 0.0);
        let top = if n % 2 == 0 { half - 1 } else { half };
        for k in 1..=top {
            fwd *= rot;
            bwd *= rot_c;
            let kp = self.modes[k] * fwd;
            let km = self.modes[n - k] * bwd;
            w += kp + km;
            let ik = Complex64::new(0.0, k as f64);
            dw += ik * (kp - km);
        }
        if n % 2 == 0 {
            // Nyquist mode contributes c * cos(h xi); its derivative is
            // -c * h * sin(h xi).
            let h = half as f64;
            let (s, c) = (h * xi).sin_cos();
            w += self.modes[half] * c;
            dw -= self.modes[half] * (h * s);
        }
        (Vec2::new(w.re, w.im), Vec2::new(dw.re, dw.im))
    }

    /// Difference z(base + off) - z(base), evaluated without cancellation for
    /// small offsets: each mode uses exp(i k off) - 1 in stable form.
    pub fn eval_diff(&self, base: f64, off: f64) -> Vec2 {
        let n = self.modes.len();
        let half = n / 2;
        let rot = Complex64::from_polar(1.0, base);
        let rot_c = rot.conj();
        let mut fwd = Complex64::new(1.0, 0.0);
        let mut bwd = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        let top = if n % 2 == 0 { half - 1 } else { half };
        for k in 1..=top {
            fwd *= rot;
            bwd *= rot_c;
            let ku = k as f64 * off;
            let s2 = (0.5 * ku).sin();
            // exp(i ku) - 1 = -2 sin^2(ku/2) + i sin(ku)
            let em1 = Complex64::new(-2.0 * s2 * s2, ku.sin());
            acc += self.modes[k] * fwd * em1 + self.modes[n - k] * bwd * em1.conj();
        }
        if n % 2 == 0 {
            let h = half as f64;
            // cos(h(base+off)) - cos(h base) = -2 sin(h(base + off/2)) sin(h off / 2)
            let d = -2.0 * (h * (base + 0.5 * off)).sin() * (0.5 * h * off).sin();
            acc += self.modes[half] * d;
        }
        Vec2::new(acc.re, acc.im)
    }

    /// Unit outward normal at parameter `xi` (curve is counterclockwise, so
    /// the outward direction is the clockwise rotation of the tangent).
    pub fn outward_normal(&self, xi: f64) -> Vec2 {
        let t = self.deriv(xi);
        Vec2::new(t.y, -t.x).normalized()
    }

    /// Signed enclosed area, 1/2 * integral of (z1 z2' - z2 z1') d xi,
    /// evaluated on an oversampled grid so the product is alias-free.
    pub fn signed_area(&self) -> f64 {
        let m = 4 * self.nodes.len();
        let mut acc = 0.0;
        for j in 0..m {
            let xi = TAU * j as f64 / m as f64;
            let (z, dz) = self.eval_both(xi);
            acc += z.cross(dz);
        }
        0.5 * acc * TAU / m as f64
    }

    /// Total arc length of the interpolant.
    pub fn arc_length(&self) -> f64 {
        let m = 4 * self.nodes.len();
        let mut acc = 0.0;
        for j in 0..m {
            let xi = TAU * j as f64 / m as f64;
            acc += self.deriv(xi).norm();
        }
        acc * TAU / m as f64
    }

    /// Positions and derivatives at `count` uniform parameters.
    pub fn sample_dense(&self, count: usize) -> DenseSamples {
        let mut pos = Vec::with_capacity(count);
        let mut der = Vec::with_capacity(count);
        for j in 0..count {
            let xi = TAU * j as f64 / count as f64;
            let (z, dz) = self.eval_both(xi);
            pos.push(z);
            der.push(dz);
        }
        DenseSamples {
            count,
            pos,
            der,
        }
    }

    /// Parameter of the point closest to `x`: dense scan followed by golden
    /// section refinement. Returns (parameter, distance).
    pub fn nearest_param(&self, x: Vec2, scan: usize) -> (f64, f64) {
        let scan = scan.max(self.nodes.len());
        let step = TAU / scan as f64;
        let mut best_j = 0;
        let mut best = f64::INFINITY;
        for j in 0..scan {
            let d = self.eval(step * j as f64).dist(x);
            if d < best {
                best = d;
                best_j = j;
            }
        }
        let center = step * best_j as f64;
        let mut f = |xi: f64| self.eval(xi).dist(x);
        let (xi, d) = crate::search::golden_min(&mut f, center - step, center + step, 80);
        if d < best {
            (xi.rem_euclid(TAU), d)
        } else {
            (center, best)
        }
    }

    /// Curve mirrored across the horizontal axis. Node order is reversed so
    /// the result stays counterclockwise; node 0 is preserved.
    pub fn reflect_x(&self) -> ClosedCurve {
        let n = self.nodes.len();
        let mut m = Vec::with_capacity(n);
        for j in 0..n {
            m.push(self.nodes[(n - j) % n].reflect_x());
        }
        ClosedCurve::from_nodes_unchecked(m)
    }

    /// Rigid motion: rotate by `angle` about the origin then translate.
    pub fn transformed(&self, angle: f64, shift: Vec2) -> ClosedCurve {
        let moved = self
            .nodes
            .iter()
            .map(|p| p.rotated(angle) + shift)
            .collect();
        ClosedCurve::from_nodes_unchecked(moved)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CurveJson {
            nodes: self.nodes.clone(),
            orientation: "ccw".into(),
        })
        .expect("curve serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<ClosedCurve> {
        let doc: CurveJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("curve json: {e}")))?;
        if doc.orientation != "ccw" {
            return Err(Error::Parse(format!(
                "curve json: orientation must be \"ccw\", got \"{}\"",
                doc.orientation
            )));
        }
        ClosedCurve::from_nodes(doc.nodes)
    }
}

/// Dense uniform sampling of a curve, shared by scan-based searches.
#[derive(Clone, Debug)]
pub struct DenseSamples {
    pub count: usize,
    pub pos: Vec<Vec2>,
    pub der: Vec<Vec2>,
}

impl DenseSamples {
    pub fn param(&self, j: usize) -> f64 {
        TAU * j as f64 / self.count as f64
    }
}

#[derive(Serialize, Deserialize)]
struct CurveJson {
    nodes: Vec<Vec2>,
    orientation: String,
}

/// Serialization stores nodes only; the spectrum is a deterministic function
/// of them, so rebuilding through `from_nodes` reproduces the curve bit for
/// bit and re-checks the geometric contract on the way in.
impl Serialize for ClosedCurve {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CurveJson {
            nodes: self.nodes.clone(),
            orientation: "ccw".into(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClosedCurve {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = CurveJson::deserialize(d)?;
        if doc.orientation != "ccw" {
            return Err(serde::de::Error::custom(format!(
                "orientation must be \"ccw\", got \"{}\"",
                doc.orientation
            )));
        }
        ClosedCurve::from_nodes(doc.nodes).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn polygon_signed_area(nodes: &[Vec2]) -> f64 {
    let n = nodes.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += nodes[i].cross(nodes[(i + 1) % n]);
    }
    0.5 * acc
}

fn validate_polygon(nodes: &[Vec2]) -> Result<()> {
    if nodes.len() < MIN_NODES {
        return Err(Error::Resolution(format!(
            "{} nodes supplied; at least {MIN_NODES} are required",
            nodes.len()
        )));
    }
    for (i, p) in nodes.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::Geometry(format!("node {i} is not finite")));
        }
    }
    let n = nodes.len();
    for i in 0..n {
        let a = nodes[i];
        let b = nodes[(i + 1) % n];
        if a.dist(b) == 0.0 {
            return Err(Error::Geometry(format!(
                "nodes {i} and {} coincide",
                (i + 1) % n
            )));
        }
    }
    if let Some((i, j)) = first_self_intersection(nodes) {
        return Err(Error::Geometry(format!(
            "boundary polygon self-intersects: edge {i} crosses edge {j}"
        )));
    }
    Ok(())
}

/// First pair of non-adjacent polygon edges that intersect, if any.
pub(crate) fn first_self_intersection(nodes: &[Vec2]) -> Option<(usize, usize)> {
    let n = nodes.len();
    for i in 0..n {
        let p1 = nodes[i];
        let p2 = nodes[(i + 1) % n];
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue; // edges share node 0
            }
            let q1 = nodes[j];
            let q2 = nodes[(j + 1) % n];
            if segments_intersect(p1, p2, q1, q2) {
                return Some((i, j));
            }
        }
    }
    None
}

pub(crate) fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (q2 - q1).cross(p1 - q1);
    let d2 = (q2 - q1).cross(p2 - q1);
    let d3 = (p2 - p1).cross(q1 - p1);
    let d4 = (p2 - p1).cross(q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |d: f64, a: Vec2, b: Vec2, p: Vec2| -> bool {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(d1, q1, q2, p1) || on(d2, q1, q2, p2) || on(d3, p1, p2, q1) || on(d4, p1, p2, q2)
}

/// Even-odd point-in-polygon test on a dense polyline.
pub(crate) fn point_in_polygon(nodes: &[Vec2], x: Vec2) -> bool {
    let n = nodes.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = nodes[i];
        let b = nodes[j];
        if (a.y > x.y) != (b.y > x.y) {
            let t = (x.y - a.y) / (b.y - a.y);
            if x.x < a.x + t * (b.x - a.x) {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}
