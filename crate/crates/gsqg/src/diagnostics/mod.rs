//! Per-time splash diagnostics and post-run analyses: the separated minimum
//! boundary distance m(t), the rate identity relating its derivative to the
//! velocity difference at the witness pair, exponential-decay fits, and the
//! regularity-criterion report.

use crate::curve::{
    arc_chord_ratio, holder_c1gamma_norm, min_fold_distance, ClosedCurve, DistanceWitness,
    HolderEstimate,
};
use crate::dynamics::SimulationState;
use crate::error::{ContactReport, Error, Result};
use crate::velocity::{boundary_velocity, QuadratureSpec};
use serde::{Deserialize, Serialize};

#[cfg(test)]
mod tests;

/// One diagnostic sample along a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplashMetrics {
    pub time: f64,
    /// Minimum boundary distance over parameter-separated pairs.
    pub m: f64,
    pub arc_chord: f64,
    /// C^{1,gamma} data of the patch with the largest norm.
    pub c1gamma: HolderEstimate,
    /// Smallest parameterization speed |z'| across all patches.
    pub min_speed: f64,
    pub witness: DistanceWitness,
    /// n . (u(a) - u(b)) at the witness pair: the instantaneous rate of
    /// change of m along smooth stretches.
    pub approach_rate: f64,
    pub areas: Vec<f64>,
}

/// Why a run stopped.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HaltReason {
    Horizon,
    Contact { report: ContactReport },
}

/// Full output of a run: ordered samples plus the halt cause.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub samples: Vec<SplashMetrics>,
    pub halt: HaltReason,
}

impl MetricsSeries {
    /// CSV with the fixed column contract: time, m, arc_chord, c1gamma_norm,
    /// min_speed, approach_rate, approach_bound, then one area column per
    /// patch. 12 significant digits.
    pub fn to_csv(&self) -> String {
        let npatch = self
            .samples
            .first()
            .map(|s| s.areas.len())
            .unwrap_or(0);
        let mut out = String::from(
            "time,m,arc_chord,c1gamma_norm,min_speed,approach_rate,approach_bound",
        );
        for k in 1..=npatch {
            out.push_str(&format!(",area_{k}"));
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!(
                "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
                s.time,
                s.m,
                s.arc_chord,
                s.c1gamma.c1_norm,
                s.min_speed,
                s.approach_rate,
                approach_bound_check(s),
            ));
            for a in &s.areas {
                out.push_str(&format!(",{a:.11e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Assembles one metrics sample from the current state. `gamma` is the
/// Holder exponent of the norm estimate and `delta` the parameter
/// separation defining m.
pub fn collect_metrics(
    state: &SimulationState,
    gamma: f64,
    delta: f64,
    quad: &QuadratureSpec,
) -> Result<SplashMetrics> {
    let curves: Vec<ClosedCurve> = state
        .family
        .patches
        .iter()
        .map(|p| p.boundary.clone())
        .collect();
    let witness = min_fold_distance(&curves, delta)?;
    let (arc_chord, _) = arc_chord_ratio(&curves)?;

    let mut best: Option<HolderEstimate> = None;
    let mut min_speed = f64::INFINITY;
    for curve in &curves {
        let est = holder_c1gamma_norm(curve, gamma)?;
        min_speed = min_speed.min(est.min_speed);
        if best.as_ref().is_none_or(|b| est.c1_norm > b.c1_norm) {
            best = Some(est);
        }
    }
    let c1gamma = best.expect("family validated non-empty by min_fold_distance");

    let ua = boundary_velocity(&state.family, witness.a.curve, witness.a.param, quad)?;
    let ub = boundary_velocity(&state.family, witness.b.curve, witness.b.param, quad)?;
    let approach_rate = witness.normal.dot(ua - ub);

    Ok(SplashMetrics {
        time: state.time,
        m: witness.distance,
        arc_chord,
        c1gamma,
        min_speed,
        witness,
        approach_rate,
        areas: state.areas(),
    })
}

/// Normalized approach constant max(0, -approach_rate) / m: the empirical
/// factor by which m can shrink per unit time.
pub fn approach_bound_check(metrics: &SplashMetrics) -> f64 {
    (-metrics.approach_rate).max(0.0) / metrics.m
}

/// Exponential-decay fit of m(t) over a window.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GronwallFit {
    pub window: (f64, f64),
    /// C in m(t) ~ m(t0) exp(-C (t - t0)).
    pub rate: f64,
    /// Max absolute deviation of log m from the fitted line.
    pub residual: f64,
}

/// Least-squares line fit of log m(t) on the window; rate is the negated
/// slope. Requires at least 8 samples inside the window, all with m > 0.
pub fn gronwall_fit(series: &MetricsSeries, window: (f64, f64)) -> Result<GronwallFit> {
    let pts: Vec<(f64, f64)> = series
        .samples
        .iter()
        .filter(|s| s.time >= window.0 && s.time <= window.1)
        .map(|s| (s.time, s.m))
        .collect();
    if pts.len() < 8 {
        return Err(Error::Resolution(format!(
            "exponential fit needs at least 8 samples in the window, found {}",
            pts.len()
        )));
    }
    if let Some((t, _)) = pts.iter().find(|(_, m)| !(*m > 0.0)) {
        return Err(Error::Parameter(format!(
            "separation is not positive at t = {t}; log fit undefined"
        )));
    }
    let (slope, intercept) = line_fit(pts.iter().map(|&(t, m)| (t, m.ln())));
    let residual = pts
        .iter()
        .map(|&(t, m)| (m.ln() - (intercept + slope * t)).abs())
        .fold(0.0, f64::max);
    Ok(GronwallFit {
        window,
        rate: -slope,
        residual,
    })
}

fn line_fit(pts: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, f64) {
    let n = pts.clone().count() as f64;
    let (sx, sy) = pts
        .clone()
        .fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxx, sxy) = pts.fold((0.0, 0.0), |(sxx, sxy), (x, y)| {
        (sxx + (x - mx) * (x - mx), sxy + (x - mx) * (y - my))
    });
    // A degenerate time axis (all samples at one instant) fits a flat line.
    if sxx == 0.0 {
        return (0.0, my);
    }
    (sxy / sxx, my - (sxy / sxx) * mx)
}

/// Thresholds for the regularity verdict; these are evidence-reporting
/// caps, not proven constants.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportCaps {
    /// The norm cap is this factor times the early-run maximum norm.
    pub norm_safety: f64,
    /// m may decay at most this factor faster than its fitted rate.
    pub envelope_slack: f64,
    /// Trailing window length (in samples) for the rolling decay rate.
    pub trailing_window: usize,
}

impl Default for ReportCaps {
    fn default() -> Self {
        ReportCaps {
            norm_safety: 10.0,
            envelope_slack: 2.0,
            trailing_window: 8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityRow {
    pub time: f64,
    pub m: f64,
    pub c1gamma_norm: f64,
    pub arc_chord: f64,
    /// Decay rate fitted over the trailing window; absent until enough
    /// samples accumulate.
    pub trailing_rate: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityReport {
    pub alpha: f64,
    /// Criterion exponent 2 alpha / (1 - 2 alpha), the Holder class whose
    /// boundedness rules out a splash.
    pub criterion_gamma: f64,
    /// True when alpha <= 1/4, where the no-splash criterion is proven.
    pub in_proven_range: bool,
    pub tag: String,
    pub norm_cap: f64,
    pub rows: Vec<RegularityRow>,
    pub verdict: String,
}

/// Emits per-time regularity evidence and a verdict: "consistent" when the
/// norm stays below its running cap while m decays no faster than its
/// fitted exponential envelope, otherwise a flag naming what gave way first.
pub fn regularity_report(
    series: &MetricsSeries,
    alpha: f64,
    caps: &ReportCaps,
) -> RegularityReport {
    let criterion_gamma = 2.0 * alpha / (1.0 - 2.0 * alpha);
    let in_proven_range = alpha > 0.0 && alpha <= 0.25;
    let tag = if in_proven_range {
        String::from("within the proven exponent range alpha <= 1/4")
    } else {
        String::from("outside the proven exponent range alpha <= 1/4; evidence only")
    };

    let samples = &series.samples;
    let early = samples.len().clamp(1, 4);
    let norm_cap = caps.norm_safety
        * samples
            .iter()
            .take(early)
            .map(|s| s.c1gamma.c1_norm)
            .fold(0.0, f64::max);

    let full_fit = full_window_fit(series);

    let mut rows = Vec::with_capacity(samples.len());
    let mut first_norm_violation: Option<f64> = None;
    let mut first_envelope_violation: Option<f64> = None;
    for (k, s) in samples.iter().enumerate() {
        let trailing_rate = if k + 1 >= caps.trailing_window {
            let lo = samples[k + 1 - caps.trailing_window].time;
            gronwall_fit(series, (lo, s.time)).ok().map(|f| f.rate)
        } else {
            None
        };
        if s.c1gamma.c1_norm > norm_cap && first_norm_violation.is_none() {
            first_norm_violation = Some(s.time);
        }
        if let Some(fit) = &full_fit {
            let t0 = samples[0].time;
            let envelope = samples[0].m
                * (-caps.envelope_slack * fit.rate.max(0.0) * (s.time - t0)).exp();
            if s.m < envelope * (1.0 - 1e-9) && first_envelope_violation.is_none() {
                first_envelope_violation = Some(s.time);
            }
        }
        rows.push(RegularityRow {
            time: s.time,
            m: s.m,
            c1gamma_norm: s.c1gamma.c1_norm,
            arc_chord: s.arc_chord,
            trailing_rate,
        });
    }

    let verdict = match (first_norm_violation, first_envelope_violation) {
        (None, None) => String::from(
            "consistent: regularity norm bounded and separation within its \
             exponential envelope",
        ),
        (Some(tn), Some(te)) if tn <= te => format!(
            "norm blow-up precedes or accompanies the approach (norm cap \
             exceeded at t = {tn:.6}, envelope broken at t = {te:.6})"
        ),
        (Some(tn), Some(te)) => format!(
            "separation broke its exponential envelope at t = {te:.6} before \
             the norm cap was exceeded at t = {tn:.6}"
        ),
        (Some(tn), None) => format!("regularity norm exceeded its cap at t = {tn:.6}"),
        (None, Some(te)) => format!(
            "separation decayed faster than its exponential envelope at t = {te:.6}"
        ),
    };

    RegularityReport {
        alpha,
        criterion_gamma,
        in_proven_range,
        tag,
        norm_cap,
        rows,
        verdict,
    }
}

fn full_window_fit(series: &MetricsSeries) -> Option<GronwallFit> {
    let (first, last) = (
        series.samples.first()?.time,
        series.samples.last()?.time,
    );
    gronwall_fit(series, (first, last)).ok()
}
