//! Run orchestration: step, redistribute on cadence, sample metrics on a
//! fixed time grid, write checkpoints, and halt at the horizon or on
//! boundary contact. Identical scenarios produce identical series, and a
//! resumed run continues exactly where the checkpointed one stood.

use super::{redistribute, step, Checkpoint, SimulationState};
use crate::diagnostics::{collect_metrics, HaltReason, MetricsSeries};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use std::path::Path;

/// Runs a scenario from its initial configuration.
pub fn run(scenario: &Scenario, out_dir: Option<&Path>) -> Result<MetricsSeries> {
    scenario.validate()?;
    let state = SimulationState::new(scenario.build_family()?);
    run_from(scenario, state, out_dir)
}

/// Continues a run from an existing state (a fresh one, or a restored
/// checkpoint). Samples are taken whenever the run crosses a multiple of
/// the output interval, plus one initial sample on fresh starts and one at
/// the end, so a resumed tail concatenates seamlessly onto the series that
/// produced the checkpoint.
pub fn run_from(
    scenario: &Scenario,
    mut state: SimulationState,
    out_dir: Option<&Path>,
) -> Result<MetricsSeries> {
    scenario.validate()?;
    let gamma = scenario.effective_gamma();
    let delta = scenario.effective_delta();
    let quad = &scenario.quadrature;
    let hash = scenario.hash();

    let mut series = MetricsSeries {
        samples: Vec::new(),
        halt: HaltReason::Horizon,
    };
    if state.family.patches.is_empty() {
        return Ok(series);
    }

    let interval = scenario.outputs.interval;
    // Next output boundary index; robust against a state time that sits
    // exactly on a boundary already sampled by the interrupted run.
    let mut k_next = (state.time / interval + 1e-9).floor() as u64 + 1;

    if state.step_index == 0 {
        series
            .samples
            .push(collect_metrics(&state, gamma, delta, quad).map_err(|e| annotate(e, 0))?);
    }

    let horizon = scenario.horizon;
    let slack = 1e-12 * horizon.max(1.0);
    let mut halted = false;
    while state.time < horizon - slack {
        let mut cfg = scenario.stepper.clone();
        // The last step lands exactly on the horizon.
        cfg.dt = cfg.dt.min(horizon - state.time);
        state = match step(&state, &cfg, quad) {
            Ok(next) => next,
            Err(Error::Contact(report)) => {
                series.halt = HaltReason::Contact { report };
                halted = true;
                break;
            }
            Err(e) => return Err(annotate(e, state.step_index + 1)),
        };
        if cfg.redistribute_every > 0 && state.step_index % cfg.redistribute_every == 0 {
            state = redistribute(&state).map_err(|e| annotate(e, state.step_index))?;
        }

        if let Some(report) = proximity_halt(&state, delta)? {
            sample(&mut series, &state, gamma, delta, quad)?;
            series.halt = HaltReason::Contact { report };
            halted = true;
            break;
        }

        while (k_next as f64) * interval <= state.time + 1e-9 * interval {
            sample(&mut series, &state, gamma, delta, quad)?;
            k_next += 1;
        }

        if let (Some(dir), every) = (out_dir, scenario.outputs.checkpoint_every) {
            if every > 0 && state.step_index % every == 0 {
                write_checkpoint(&state, &hash, dir, &format!("{:08}", state.step_index))?;
            }
        }
    }

    if !halted {
        sample(&mut series, &state, gamma, delta, quad)?;
    }
    if let Some(dir) = out_dir {
        write_checkpoint(&state, &hash, dir, "final")?;
    }
    Ok(series)
}

/// Appends a metrics sample unless the last one is already at this time.
fn sample(
    series: &mut MetricsSeries,
    state: &SimulationState,
    gamma: f64,
    delta: f64,
    quad: &crate::velocity::QuadratureSpec,
) -> Result<()> {
    if series
        .samples
        .last()
        .is_some_and(|s| s.time == state.time)
    {
        return Ok(());
    }
    let m = collect_metrics(state, gamma, delta, quad)
        .map_err(|e| annotate(e, state.step_index))?;
    series.samples.push(m);
    Ok(())
}

/// Halts when the separated minimum boundary distance falls below twice the
/// coarsest mean node spacing: closer approaches are no longer resolved.
fn proximity_halt(
    state: &SimulationState,
    delta: f64,
) -> Result<Option<crate::error::ContactReport>> {
    let curves: Vec<crate::curve::ClosedCurve> = state
        .family
        .patches
        .iter()
        .map(|p| p.boundary.clone())
        .collect();
    let witness = crate::curve::min_fold_distance(&curves, delta)
        .map_err(|e| annotate(e, state.step_index))?;
    let spacing = state
        .family
        .patches
        .iter()
        .map(|p| p.boundary.arc_length() / p.boundary.node_count() as f64)
        .fold(0.0, f64::max);
    if witness.distance < 2.0 * spacing {
        let position = (state.family.patches[witness.a.curve]
            .boundary
            .eval(witness.a.param)
            + state.family.patches[witness.b.curve]
                .boundary
                .eval(witness.b.param))
            * 0.5;
        return Ok(Some(crate::error::ContactReport {
            time: state.time,
            step_index: state.step_index,
            patch_a: witness.a.curve,
            patch_b: witness.b.curve,
            position,
            separation: witness.distance,
            detail: format!(
                "separation {:.3e} fell below twice the node spacing {:.3e}; \
                 the approach is no longer resolved",
                witness.distance, spacing
            ),
        }));
    }
    Ok(None)
}

fn write_checkpoint(
    state: &SimulationState,
    hash: &str,
    dir: &Path,
    label: &str,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("checkpoint_{label}.json"));
    std::fs::write(path, Checkpoint::capture(state, hash).to_json())?;
    Ok(())
}

/// Stamps the step index onto a propagated error message.
fn annotate(e: Error, step_index: u64) -> Error {
    let tag = |m: String| format!("step {step_index}: {m}");
    match e {
        Error::Parse(m) => Error::Parse(tag(m)),
        Error::Geometry(m) => Error::Geometry(tag(m)),
        Error::Resolution(m) => Error::Resolution(tag(m)),
        Error::Parameter(m) => Error::Parameter(tag(m)),
        Error::Accuracy {
            message,
            achieved,
            target,
        } => Error::Accuracy {
            message: tag(message),
            achieved,
            target,
        },
        Error::Stiffness(m) => Error::Stiffness(tag(m)),
        other => other,
    }
}
