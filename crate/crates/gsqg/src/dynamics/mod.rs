//! Time advancement of patch families by advecting boundary nodes with the
//! full velocity field. A step moves every node of every patch with the
//! configured Runge-Kutta scheme, guards the displacement against the local
//! node spacing, and halts with a contact report when boundaries touch.

use crate::curve::{resample_uniform_arclength, ClosedCurve, ReparamOptions};
use crate::error::{ContactReport, Error, Result};
use crate::vec2::Vec2;
use crate::velocity::{
    require_subcritical, Domain, FieldEval, Patch, PatchFamily, QuadratureSpec,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

mod running;
#[cfg(test)]
mod tests;

pub use running::{run, run_from};

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// Node positions of all patches, the shared mutable object of a run.
type NodeMatrix = Vec<Vec<Vec2>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rk4,
    Rk2,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Resample to uniform arc length every this many steps; 0 disables.
    pub redistribute_every: u64,
    /// Cap on node displacement per step relative to the local node spacing.
    pub cfl_guard: f64,
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Parameter(format!(
                "time step must be positive and finite; got {}",
                self.dt
            )));
        }
        if !(self.cfl_guard > 0.0 && self.cfl_guard <= 1.0) {
            return Err(Error::Parameter(format!(
                "cfl_guard must lie in (0, 1]; got {}",
                self.cfl_guard
            )));
        }
        Ok(())
    }
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 1e-2,
            scheme: Scheme::Rk4,
            redistribute_every: 5,
            cfl_guard: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationState {
    pub family: PatchFamily,
    pub time: f64,
    pub step_index: u64,
    /// Patch areas at the start of the run, the conserved reference.
    pub areas0: Vec<f64>,
}

impl SimulationState {
    pub fn new(family: PatchFamily) -> SimulationState {
        let areas0 = family
            .patches
            .iter()
            .map(|p| patch_area(&p.boundary))
            .collect();
        SimulationState {
            family,
            time: 0.0,
            step_index: 0,
            areas0,
        }
    }

    pub fn areas(&self) -> Vec<f64> {
        self.family
            .patches
            .iter()
            .map(|p| patch_area(&p.boundary))
            .collect()
    }

    /// Largest relative area deviation from the initial areas.
    pub fn area_drift(&self) -> f64 {
        self.areas()
            .iter()
            .zip(&self.areas0)
            .map(|(a, a0)| ((a - a0) / a0).abs())
            .fold(0.0, f64::max)
    }
}

/// Signed area enclosed by the boundary, half the contour integral of
/// z1 dz2 - z2 dz1; positive for counterclockwise curves.
pub fn patch_area(curve: &ClosedCurve) -> f64 {
    curve.signed_area()
}

/// Advances the state by one time step. The displacement of every node is
/// kept below `cfl_guard` times its local node spacing by halving dt (at
/// most 8 times), so the effective step may be shorter than configured.
pub fn step(
    state: &SimulationState,
    cfg: &StepperConfig,
    quad: &QuadratureSpec,
) -> Result<SimulationState> {
    cfg.validate()?;
    quad.validate()?;
    require_subcritical(state.family.alpha)?;

    let base = node_matrix(&state.family);
    if base.is_empty() {
        return Ok(SimulationState {
            family: state.family.clone(),
            time: state.time + cfg.dt,
            step_index: state.step_index + 1,
            areas0: state.areas0.clone(),
        });
    }
    let spacing = local_spacing(&base);
    // The first stage sees the current state, so it is shared by every
    // halving attempt.
    let k1 = node_velocities(&state.family, quad)?;

    let mut dt = cfg.dt;
    let mut worst_ratio = 0.0_f64;
    for _ in 0..=8 {
        match attempt(state, &base, &k1, dt, cfg.scheme, quad) {
            Ok(moved) => {
                let ratio = guard_ratio(&base, &moved, &spacing);
                worst_ratio = ratio;
                if ratio <= cfg.cfl_guard {
                    return finish(state, moved, dt);
                }
            }
            // A stage excursion that breaks the geometry is treated like a
            // guard violation: a shorter step stays closer to the valid
            // current state.
            Err(Error::Geometry(_)) => {}
            Err(e) => return Err(e),
        }
        dt *= 0.5;
    }
    Err(Error::Stiffness(format!(
        "node displacement still {:.3}x the local spacing after 8 halvings \
         of dt = {} at step {}; the flow is too fast for this resolution",
        worst_ratio / cfg.cfl_guard,
        cfg.dt,
        state.step_index
    )))
}

/// Resamples every boundary to uniform arc length without changing node
/// counts; shape, time, and conservation references are preserved.
pub fn redistribute(state: &SimulationState) -> Result<SimulationState> {
    let mut patches = Vec::with_capacity(state.family.patches.len());
    for (i, p) in state.family.patches.iter().enumerate() {
        let (lo, hi) = chord_extremes(p.boundary.nodes());
        if hi > 1e3 * lo {
            return Err(Error::Resolution(format!(
                "node spacing ratio {:.3e} on patch {i} exceeds 1000; the \
                 interpolant is too ill-conditioned to resample",
                hi / lo
            )));
        }
        patches.push(Patch {
            boundary: resample_uniform_arclength(&p.boundary, &ReparamOptions::default())?,
            strength: p.strength,
        });
    }
    let family = PatchFamily::new(patches, state.family.alpha, state.family.domain)?;
    Ok(SimulationState {
        family,
        time: state.time,
        step_index: state.step_index,
        areas0: state.areas0.clone(),
    })
}

/// Serializable snapshot of a run, sufficient to rebuild the state exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema_version: u32,
    /// Digest of the scenario that produced this run.
    pub scenario_hash: String,
    pub step_index: u64,
    pub time: f64,
    pub alpha: f64,
    pub domain: Domain,
    pub strengths: Vec<f64>,
    pub nodes: Vec<Vec<Vec2>>,
    pub areas0: Vec<f64>,
}

impl Checkpoint {
    pub fn capture(state: &SimulationState, scenario_hash: &str) -> Checkpoint {
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            scenario_hash: scenario_hash.to_string(),
            step_index: state.step_index,
            time: state.time,
            alpha: state.family.alpha,
            domain: state.family.domain,
            strengths: state.family.patches.iter().map(|p| p.strength).collect(),
            nodes: node_matrix(&state.family),
            areas0: state.areas0.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Checkpoint> {
        // The version is read before strict decoding so an old layout
        // reports as a version mismatch, not as corruption.
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::Integrity(format!("checkpoint is not valid JSON: {e}")))?;
        let found = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Integrity("checkpoint lacks a schema_version field".into()))?
            as u32;
        if found != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found,
                expected: CHECKPOINT_SCHEMA_VERSION,
            });
        }
        serde_json::from_value(value)
            .map_err(|e| Error::Integrity(format!("checkpoint fields are malformed: {e}")))
    }

    /// Rebuilds the simulation state through the validating constructors.
    pub fn restore(&self) -> Result<SimulationState> {
        if self.strengths.len() != self.nodes.len() || self.areas0.len() != self.nodes.len() {
            return Err(Error::Integrity(format!(
                "checkpoint patch counts disagree: {} node arrays, {} strengths, {} areas",
                self.nodes.len(),
                self.strengths.len(),
                self.areas0.len()
            )));
        }
        let patches = self
            .nodes
            .iter()
            .zip(&self.strengths)
            .map(|(nodes, &strength)| {
                Ok(Patch {
                    boundary: ClosedCurve::from_nodes(nodes.clone())?,
                    strength,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SimulationState {
            family: PatchFamily::new(patches, self.alpha, self.domain)?,
            time: self.time,
            step_index: self.step_index,
            areas0: self.areas0.clone(),
        })
    }
}

fn node_matrix(family: &PatchFamily) -> NodeMatrix {
    family
        .patches
        .iter()
        .map(|p| p.boundary.nodes().to_vec())
        .collect()
}

/// Smaller of the two adjacent node chords, per node.
fn local_spacing(nodes: &NodeMatrix) -> Vec<Vec<f64>> {
    nodes
        .iter()
        .map(|ring| {
            let n = ring.len();
            (0..n)
                .map(|j| {
                    let fwd = (ring[(j + 1) % n] - ring[j]).norm();
                    let bwd = (ring[j] - ring[(j + n - 1) % n]).norm();
                    fwd.min(bwd)
                })
                .collect()
        })
        .collect()
}

fn chord_extremes(ring: &[Vec2]) -> (f64, f64) {
    let n = ring.len();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for j in 0..n {
        let gap = (ring[(j + 1) % n] - ring[j]).norm();
        lo = lo.min(gap);
        hi = hi.max(gap);
    }
    (lo, hi)
}

/// Max over nodes of displacement / local spacing.
fn guard_ratio(base: &NodeMatrix, moved: &NodeMatrix, spacing: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, ring) in base.iter().enumerate() {
        for (j, &p) in ring.iter().enumerate() {
            worst = worst.max((moved[i][j] - p).norm() / spacing[i][j]);
        }
    }
    worst
}

fn shifted(base: &NodeMatrix, k: &NodeMatrix, c: f64) -> NodeMatrix {
    base.iter()
        .zip(k)
        .map(|(ring, kr)| ring.iter().zip(kr).map(|(&p, &v)| p + v * c).collect())
        .collect()
}

/// Rebuilds a family with the template's strengths, exponent, and domain on
/// new node positions; all geometric validation re-runs.
fn family_with_nodes(template: &PatchFamily, nodes: NodeMatrix) -> Result<PatchFamily> {
    let patches = template
        .patches
        .iter()
        .zip(nodes)
        .map(|(p, ring)| {
            Ok(Patch {
                boundary: ClosedCurve::from_nodes(ring)?,
                strength: p.strength,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PatchFamily::new(patches, template.alpha, template.domain)
}

/// Full velocity at every node of every patch; evaluations fan out over
/// nodes and join deterministically in index order.
fn node_velocities(family: &PatchFamily, quad: &QuadratureSpec) -> Result<NodeMatrix> {
    let eval = FieldEval::new(family)?;
    let counts: Vec<usize> = family
        .patches
        .iter()
        .map(|p| p.boundary.node_count())
        .collect();
    let flat: Vec<(usize, usize)> = counts
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| (0..n).map(move |j| (i, j)))
        .collect();
    let values = flat
        .par_iter()
        .map(|&(i, j)| eval.eval_at_node(i, j, quad))
        .collect::<Result<Vec<Vec2>>>()?;
    let mut out: NodeMatrix = counts.iter().map(|&n| Vec::with_capacity(n)).collect();
    for (&(i, _), v) in flat.iter().zip(values) {
        out[i].push(v);
    }
    Ok(out)
}

fn stage_velocities(
    template: &PatchFamily,
    nodes: NodeMatrix,
    quad: &QuadratureSpec,
) -> Result<NodeMatrix> {
    node_velocities(&family_with_nodes(template, nodes)?, quad)
}

fn attempt(
    state: &SimulationState,
    base: &NodeMatrix,
    k1: &NodeMatrix,
    dt: f64,
    scheme: Scheme,
    quad: &QuadratureSpec,
) -> Result<NodeMatrix> {
    let template = &state.family;
    match scheme {
        Scheme::Rk2 => {
            let k2 = stage_velocities(template, shifted(base, k1, 0.5 * dt), quad)?;
            Ok(shifted(base, &k2, dt))
        }
        Scheme::Rk4 => {
            let k2 = stage_velocities(template, shifted(base, k1, 0.5 * dt), quad)?;
            let k3 = stage_velocities(template, shifted(base, &k2, 0.5 * dt), quad)?;
            let k4 = stage_velocities(template, shifted(base, &k3, dt), quad)?;
            let mut out = base.clone();
            for (i, ring) in out.iter_mut().enumerate() {
                for (j, p) in ring.iter_mut().enumerate() {
                    let slope =
                        k1[i][j] + (k2[i][j] + k3[i][j]) * 2.0 + k4[i][j];
                    *p += slope * (dt / 6.0);
                }
            }
            Ok(out)
        }
    }
}

fn finish(state: &SimulationState, nodes: NodeMatrix, dt_eff: f64) -> Result<SimulationState> {
    let time = state.time + dt_eff;
    let step_index = state.step_index + 1;
    match family_with_nodes(&state.family, nodes.clone()) {
        Ok(family) => Ok(SimulationState {
            family,
            time,
            step_index,
            areas0: state.areas0.clone(),
        }),
        Err(Error::Geometry(msg)) => {
            match find_contact(&nodes, state.family.domain, time, step_index) {
                Some(report) => Err(Error::Contact(report)),
                None => Err(Error::Geometry(msg)),
            }
        }
        Err(e) => Err(e),
    }
}

/// Locates the first boundary contact in a node configuration: a node at or
/// below the wall, crossing segments within one ring or between two rings,
/// or one ring contained in another.
fn find_contact(
    nodes: &NodeMatrix,
    domain: Domain,
    time: f64,
    step_index: u64,
) -> Option<ContactReport> {
    let report = |a: usize, b: usize, position: Vec2, separation: f64, detail: String| {
        Some(ContactReport {
            time,
            step_index,
            patch_a: a,
            patch_b: b,
            position,
            separation,
            detail,
        })
    };

    if domain == Domain::HalfPlane {
        for (i, ring) in nodes.iter().enumerate() {
            for &p in ring {
                if p.y <= 0.0 {
                    return report(i, i, p, p.y, format!("patch {i} reached the wall"));
                }
            }
        }
    }

    for (i, ring) in nodes.iter().enumerate() {
        let n = ring.len();
        for a in 0..n {
            let (p1, p2) = (ring[a], ring[(a + 1) % n]);
            for b in a + 2..n {
                if a == 0 && b == n - 1 {
                    continue;
                }
                let (q1, q2) = (ring[b], ring[(b + 1) % n]);
                if let Some(x) = segment_crossing(p1, p2, q1, q2) {
                    return report(
                        i,
                        i,
                        x,
                        0.0,
                        format!("patch {i} boundary crossed itself"),
                    );
                }
            }
        }
    }

    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let (ra, rb) = (&nodes[i], &nodes[j]);
            for a in 0..ra.len() {
                let (p1, p2) = (ra[a], ra[(a + 1) % ra.len()]);
                for b in 0..rb.len() {
                    let (q1, q2) = (rb[b], rb[(b + 1) % rb.len()]);
                    if let Some(x) = segment_crossing(p1, p2, q1, q2) {
                        return report(
                            i,
                            j,
                            x,
                            0.0,
                            format!("boundaries of patches {i} and {j} crossed"),
                        );
                    }
                }
            }
            if crate::curve::point_in_polygon(ra, rb[0]) {
                return report(i, j, rb[0], 0.0, format!("patch {j} entered patch {i}"));
            }
            if crate::curve::point_in_polygon(rb, ra[0]) {
                return report(i, j, ra[0], 0.0, format!("patch {i} entered patch {j}"));
            }
        }
    }
    None
}

/// Intersection point of two open segments, None when they do not cross.
fn segment_crossing(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> Option<Vec2> {
    let r = p2 - p1;
    let s = q2 - q1;
    let denom = r.cross(s);
    if denom == 0.0 {
        return None;
    }
    let t = (q1 - p1).cross(s) / denom;
    let u = (q1 - p1).cross(r) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some(p1 + r * t)
    } else {
        None
    }
}
