//! Experiment descriptions: a JSON document selects the mode, the kernel
//! exponent, the initial patches (built-in shapes or node files), stepper
//! and quadrature settings, output cadence, and an optional sweep for the
//! static splash laboratory.

use crate::curve::ClosedCurve;
use crate::dynamics::StepperConfig;
use crate::error::{Error, Result};
use crate::vec2::Vec2;
use crate::velocity::{Domain, Patch, PatchFamily, QuadratureSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::TAU;

#[cfg(test)]
mod tests;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    SplashLab,
    Verify,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub mode: Mode,
    #[serde(default = "default_domain")]
    pub domain: Domain,
    pub alpha: f64,
    /// Holder exponent used in diagnostics and sweeps; defaults to the
    /// criterion exponent 2 alpha / (1 - 2 alpha), capped at 1.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub patches: Vec<PatchSpec>,
    #[serde(default)]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    /// Parameter separation defining m(t); defaults to pi/2.
    #[serde(default)]
    pub delta_override: Option<f64>,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub report_caps: crate::diagnostics::ReportCaps,
}

fn default_domain() -> Domain {
    Domain::Plane
}

fn default_horizon() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Time between metric samples.
    pub interval: f64,
    /// Output directory; when absent the dispatcher falls back to the
    /// GSQG_OUT_DIR environment variable, then to the working directory.
    #[serde(default)]
    pub directory: Option<String>,
    /// Steps between checkpoint files; 0 writes only the final checkpoint.
    #[serde(default)]
    pub checkpoint_every: u64,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            interval: 0.05,
            directory: None,
            checkpoint_every: 0,
        }
    }
}

/// One initial patch: a shape plus its strength.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    #[serde(flatten)]
    pub shape: ShapeSpec,
    pub strength: f64,
}

/// Built-in boundary shapes. All are produced counterclockwise on uniform
/// parameter nodes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Circle {
        center: [f64; 2],
        r: f64,
        nodes: usize,
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        angle: f64,
        #[serde(default)]
        center: [f64; 2],
        nodes: usize,
    },
    /// Polar graph r(t) = base_radius + sum_k (a_k cos kt + b_k sin kt),
    /// coefficients listed from k = 1.
    Fourier {
        #[serde(default)]
        center: [f64; 2],
        base_radius: f64,
        coefficients: Vec<[f64; 2]>,
        nodes: usize,
    },
    /// Cassini oval (x^2+y^2)^2 - 2 c^2 (x^2-y^2) = a^4 - c^4: a peanut
    /// whose neck narrows as `a` approaches `c` from above, seeding a
    /// two-arc near-contact at the waist.
    TwoFold {
        a: f64,
        c: f64,
        #[serde(default)]
        center: [f64; 2],
        nodes: usize,
    },
    /// Three-lobed clover r(t) = radius (1 - pinch cos 3t); the three waist
    /// arcs approach the center as pinch tends to 1.
    ThreeFold {
        radius: f64,
        pinch: f64,
        #[serde(default)]
        center: [f64; 2],
        nodes: usize,
    },
    /// JSON file holding an array of [x, y] node pairs.
    File { path: String },
}

impl ShapeSpec {
    pub fn build(&self) -> Result<ClosedCurve> {
        match *self {
            ShapeSpec::Circle { center, r, nodes } => {
                if !(r > 0.0) {
                    return Err(Error::Parameter(format!(
                        "circle radius must be positive; got {r}"
                    )));
                }
                polar_nodes(center, nodes, |t| r * Vec2::from_angle(t))
            }
            ShapeSpec::Ellipse {
                a,
                b,
                angle,
                center,
                nodes,
            } => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(Error::Parameter(format!(
                        "ellipse semi-axes must be positive; got ({a}, {b})"
                    )));
                }
                let (cs, sn) = (angle.cos(), angle.sin());
                polar_nodes(center, nodes, |t| {
                    let p = Vec2::new(a * t.cos(), b * t.sin());
                    Vec2::new(cs * p.x - sn * p.y, sn * p.x + cs * p.y)
                })
            }
            ShapeSpec::Fourier {
                center,
                base_radius,
                ref coefficients,
                nodes,
            } => {
                let radius = |t: f64| {
                    base_radius
                        + coefficients
                            .iter()
                            .enumerate()
                            .map(|(i, c)| {
                                let k = (i + 1) as f64;
                                c[0] * (k * t).cos() + c[1] * (k * t).sin()
                            })
                            .sum::<f64>()
                };
                let min_r = (0..4 * nodes.max(16))
                    .map(|j| radius(TAU * j as f64 / (4 * nodes.max(16)) as f64))
                    .fold(f64::INFINITY, f64::min);
                if !(min_r > 0.0) {
                    return Err(Error::Geometry(format!(
                        "polar radius dips to {min_r:.3e}; the profile must stay positive"
                    )));
                }
                polar_nodes(center, nodes, |t| Vec2::from_angle(t) * radius(t))
            }
            ShapeSpec::TwoFold { a, c, center, nodes } => {
                if !(a > c && c > 0.0) {
                    return Err(Error::Parameter(format!(
                        "two-fold seed needs a > c > 0 for a connected boundary; \
                         got a = {a}, c = {c}"
                    )));
                }
                polar_nodes(center, nodes, |t| {
                    let cos2 = (2.0 * t).cos();
                    let r2 = c * c * cos2
                        + (c.powi(4) * (cos2 * cos2 - 1.0) + a.powi(4)).sqrt();
                    Vec2::from_angle(t) * r2.sqrt()
                })
            }
            ShapeSpec::ThreeFold {
                radius,
                pinch,
                center,
                nodes,
            } => {
                if !(radius > 0.0 && (0.0..1.0).contains(&pinch)) {
                    return Err(Error::Parameter(format!(
                        "three-fold seed needs radius > 0 and pinch in [0, 1); \
                         got radius = {radius}, pinch = {pinch}"
                    )));
                }
                polar_nodes(center, nodes, |t| {
                    Vec2::from_angle(t) * (radius * (1.0 - pinch * (3.0 * t).cos()))
                })
            }
            ShapeSpec::File { ref path } => {
                let text = std::fs::read_to_string(path)?;
                let raw: Vec<[f64; 2]> = serde_json::from_str(&text).map_err(|e| {
                    Error::Parse(format!("node file {path} is not a JSON array of pairs: {e}"))
                })?;
                ClosedCurve::from_nodes(raw.iter().map(|p| Vec2::new(p[0], p[1])).collect())
            }
        }
    }
}

fn polar_nodes(
    center: [f64; 2],
    nodes: usize,
    f: impl Fn(f64) -> Vec2,
) -> Result<ClosedCurve> {
    let c = Vec2::new(center[0], center[1]);
    ClosedCurve::from_nodes(
        (0..nodes)
            .map(|j| c + f(TAU * j as f64 / nodes as f64))
            .collect(),
    )
}

impl Scenario {
    /// Parses and fully validates a JSON scenario document. Unknown keys
    /// are rejected.
    pub fn parse(text: &str) -> Result<Scenario> {
        let scenario: Scenario = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("scenario document: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(Error::Parse(format!(
                "scenario name {:?} must be nonempty and use only letters, \
                 digits, '-' and '_'",
                self.name
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Parse(format!(
                "alpha must lie in (0, 1); got {}",
                self.alpha
            )));
        }
        if self.mode == Mode::Simulate && self.alpha >= 0.5 {
            return Err(Error::Parse(format!(
                "simulate mode requires alpha < 1/2 (the full boundary velocity \
                 is unbounded from 1/2 on); alpha = {} runs only as static \
                 splash_lab diagnostics",
                self.alpha
            )));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::Parse(format!(
                    "gamma must lie in (0, 1]; got {g}"
                )));
            }
        }
        if let Some(d) = self.delta_override {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Parse(format!(
                    "delta_override must be positive and finite; got {d}"
                )));
            }
        }
        if !(self.outputs.interval > 0.0) {
            return Err(Error::Parse(format!(
                "output interval must be positive; got {}",
                self.outputs.interval
            )));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::Parse(format!(
                "horizon must be nonnegative and finite; got {}",
                self.horizon
            )));
        }
        self.stepper.validate()?;
        self.quadrature.validate()?;
        if self.mode == Mode::SplashLab && self.sweep.is_none() {
            return Err(Error::Parse(
                "splash_lab mode needs a sweep specification".into(),
            ));
        }
        if let Some(sweep) = &self.sweep {
            sweep.validate()?;
        }
        Ok(())
    }

    /// Effective Holder exponent: explicit gamma, else the criterion
    /// exponent 2 alpha / (1 - 2 alpha) capped at 1.
    pub fn effective_gamma(&self) -> f64 {
        self.gamma
            .unwrap_or_else(|| (2.0 * self.alpha / (1.0 - 2.0 * self.alpha)).min(1.0))
    }

    /// Effective parameter separation for m(t).
    pub fn effective_delta(&self) -> f64 {
        self.delta_override.unwrap_or(std::f64::consts::PI / 2.0)
    }

    /// Builds the initial patch family from the shape specs.
    pub fn build_family(&self) -> Result<PatchFamily> {
        let patches = self
            .patches
            .iter()
            .map(|spec| {
                Ok(Patch {
                    boundary: spec.shape.build()?,
                    strength: spec.strength,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        PatchFamily::new(patches, self.alpha, self.domain)
    }

    /// Digest of the defining fields, stamped into checkpoints so a resume
    /// can detect a mismatched scenario.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_json().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Sweep request for the static splash laboratory.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Which scale is swept: the separation m or the fold offset a.
    pub variable: SweepVariable,
    /// Log-spaced sweep bounds, inclusive.
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Fold profile family.
    #[serde(default = "default_profile")]
    pub profile: ProfileKind,
    /// For m-sweeps: a = a_over_m * m. Ignored in a-sweeps.
    #[serde(default = "default_a_over_m")]
    pub a_over_m: f64,
    /// For a-sweeps: the fixed separation m.
    #[serde(default)]
    pub m_fixed: Option<f64>,
    /// Slope coupling B in s = B a^{gamma/(1+gamma)}; 0 keeps folds level.
    #[serde(default)]
    pub slope_coupling: f64,
    /// Half-width of the integration window.
    #[serde(default = "default_window")]
    pub window: f64,
    /// Profile amplitude A.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    M,
    A,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// f(h) = a + s h + A |h|^{1+gamma}.
    Power,
    /// f(h) = a + s h + A h^2.
    Quadratic,
}

fn default_profile() -> ProfileKind {
    ProfileKind::Power
}

fn default_a_over_m() -> f64 {
    10.0
}

fn default_window() -> f64 {
    1.0
}

fn default_amplitude() -> f64 {
    1.0
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.stop > self.start) {
            return Err(Error::Parse(format!(
                "sweep bounds must satisfy 0 < start < stop; got [{}, {}]",
                self.start, self.stop
            )));
        }
        if self.points < 2 {
            return Err(Error::Parse(format!(
                "a sweep needs at least 2 points; got {}",
                self.points
            )));
        }
        if self.variable == SweepVariable::A && self.m_fixed.is_none() {
            return Err(Error::Parse(
                "an a-sweep needs m_fixed, the constant separation".into(),
            ));
        }
        if !(self.window > 0.0) || !(self.amplitude.is_finite()) {
            return Err(Error::Parse(format!(
                "sweep window must be positive and amplitude finite; got \
                 window = {}, amplitude = {}",
                self.window, self.amplitude
            )));
        }
        Ok(())
    }

    /// Log-spaced sweep grid from start to stop, inclusive.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                (self.start.ln() * (1.0 - t) + self.stop.ln() * t).exp()
            })
            .collect()
    }
}
