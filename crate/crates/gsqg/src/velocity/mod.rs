//! Velocity field induced by a family of uniform patches under a power-law
//! kernel: u = (integral over each patch of) (x - y)^perp / |x - y|^{2+2a}.
//!
//! Two independent evaluation routes are provided. The production route
//! rewrites the area integral as a boundary integral via the divergence
//! theorem and integrates along curve panels; the oracle route integrates the
//! area form directly in polar coordinates centered at the evaluation point,
//! where the radial factor has a closed antiderivative. The principal-value
//! normal component extends the oracle route to the full exponent range with
//! symmetric ball excision and Richardson extrapolation.

mod contour;
mod polar;

pub use contour::{boundary_velocity, velocity_contour, velocity_halfplane};
pub use polar::{normal_velocity_pv, velocity_area_oracle};

pub(crate) use contour::FieldEval;

use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One uniform patch: a simple closed boundary and a nonzero strength.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Patch {
    pub boundary: ClosedCurve,
    pub strength: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    #[serde(rename = "plane")]
    Plane,
    #[serde(rename = "half-plane")]
    HalfPlane,
}

/// Patch family with a common kernel exponent and domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatchFamily {
    pub patches: Vec<Patch>,
    pub alpha: f64,
    pub domain: Domain,
}

impl PatchFamily {
    pub fn new(patches: Vec<Patch>, alpha: f64, domain: Domain) -> Result<PatchFamily> {
        let family = PatchFamily {
            patches,
            alpha,
            domain,
        };
        family.validate()?;
        Ok(family)
    }

    /// Checks the structural invariants: exponent range, nonzero strengths,
    /// pairwise disjoint boundaries at node resolution, and in half-plane
    /// mode strict positivity of every node's second coordinate.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "kernel exponent alpha must lie in (0, 1); got {}",
                self.alpha
            )));
        }
        for (i, p) in self.patches.iter().enumerate() {
            if p.strength == 0.0 || !p.strength.is_finite() {
                return Err(Error::Parameter(format!(
                    "patch {i} has strength {}; strengths must be finite and nonzero",
                    p.strength
                )));
            }
            if self.domain == Domain::HalfPlane {
                for (j, node) in p.boundary.nodes().iter().enumerate() {
                    if node.y <= 0.0 {
                        return Err(Error::Geometry(format!(
                            "half-plane patch {i} has node {j} at height {}; all nodes \
                             must lie strictly above the wall",
                            node.y
                        )));
                    }
                }
            }
        }
        for i in 0..self.patches.len() {
            for j in i + 1..self.patches.len() {
                let (a, b) = (&self.patches[i].boundary, &self.patches[j].boundary);
                if boundaries_cross(a, b) || one_contains_other(a, b) {
                    return Err(Error::Geometry(format!(
                        "supports of patches {i} and {j} overlap at node resolution"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Containment test between non-crossing node polygons; one node inside the
/// other polygon means a nested pair of supports.
fn one_contains_other(a: &ClosedCurve, b: &ClosedCurve) -> bool {
    crate::curve::point_in_polygon(a.nodes(), b.node(0))
        || crate::curve::point_in_polygon(b.nodes(), a.node(0))
}

/// Edge-against-edge crossing test between two node polygons.
fn boundaries_cross(a: &ClosedCurve, b: &ClosedCurve) -> bool {
    let pa = a.nodes();
    let pb = b.nodes();
    let (n, m) = (pa.len(), pb.len());
    for i in 0..n {
        let (p1, p2) = (pa[i], pa[(i + 1) % n]);
        for j in 0..m {
            let (q1, q2) = (pb[j], pb[(j + 1) % m]);
            if crate::curve::segments_intersect(p1, p2, q1, q2) {
                return true;
            }
        }
    }
    false
}

/// Panel counts and error targets for the velocity integrators.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Initial panels per curve for the boundary integral.
    pub panels: usize,
    /// Physical distance below which a target point counts as near-singular;
    /// also the base excision radius of the principal-value evaluation.
    pub singular_split_radius: f64,
    /// Target absolute error of a velocity evaluation.
    pub tolerance: f64,
}

impl QuadratureSpec {
    pub fn new(panels: usize, singular_split_radius: f64, tolerance: f64) -> Result<Self> {
        let spec = QuadratureSpec {
            panels,
            singular_split_radius,
            tolerance,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.panels < 64 {
            return Err(Error::Parameter(format!(
                "at least 64 panels per curve are required; got {}",
                self.panels
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Parameter(format!(
                "quadrature tolerance must be positive; got {}",
                self.tolerance
            )));
        }
        if !(self.singular_split_radius > 0.0) {
            return Err(Error::Parameter(format!(
                "singular split radius must be positive; got {}",
                self.singular_split_radius
            )));
        }
        Ok(())
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            panels: 128,
            singular_split_radius: 0.2,
            tolerance: 1e-8,
        }
    }
}

/// Rejects the full-velocity exponent range [1/2, 1), where only the normal
/// component is finite on boundaries.
pub(crate) fn require_subcritical(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!(
            "kernel exponent alpha must be positive; got {alpha}"
        )));
    }
    if alpha >= 0.5 {
        return Err(Error::Parameter(format!(
            "full velocity is undefined for alpha = {alpha} >= 1/2; \
             use normal_velocity_pv for the normal component"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
