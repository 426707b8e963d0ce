//! Stepper tests. A steady disk pins the advection against the closed-form
//! rotation; Richardson triplets verify the integrator orders; a dipole
//! configuration checks that stepping preserves the reflection symmetry the
//! field equations guarantee.

use super::*;
use crate::error::Error;
use std::f64::consts::TAU;

fn circle(n: usize, r: f64, center: Vec2) -> ClosedCurve {
    let nodes = (0..n)
        .map(|j| {
            let a = TAU * j as f64 / n as f64;
            center + Vec2::new(r * a.cos(), r * a.sin())
        })
        .collect();
    ClosedCurve::from_nodes(nodes).unwrap()
}

/// Asymmetric smooth blob; no rotational or reflection symmetry.
fn blob(n: usize) -> ClosedCurve {
    let nodes = (0..n)
        .map(|j| {
            let t = TAU * j as f64 / n as f64;
            let r = 1.0 + 0.12 * (2.0 * t).cos() + 0.06 * (3.0 * t).sin();
            Vec2::new(r * t.cos(), r * t.sin())
        })
        .collect();
    ClosedCurve::from_nodes(nodes).unwrap()
}

fn single(boundary: ClosedCurve, strength: f64, alpha: f64) -> SimulationState {
    SimulationState::new(
        PatchFamily::new(vec![Patch { boundary, strength }], alpha, Domain::Plane).unwrap(),
    )
}

fn quad(tolerance: f64) -> QuadratureSpec {
    QuadratureSpec::new(64, 0.05, tolerance).unwrap()
}

#[test]
fn steady_disk_keeps_its_shape_and_area() {
    let mut state = single(circle(128, 1.0, Vec2::ZERO), 1.0, 0.2);
    let cfg = StepperConfig {
        dt: 1e-2,
        cfl_guard: 1.0,
        ..StepperConfig::default()
    };
    let q = quad(1e-8);
    for _ in 0..20 {
        state = step(&state, &cfg, &q).unwrap();
    }
    assert_eq!(state.step_index, 20);
    assert!((state.time - 0.2).abs() < 1e-12);
    let mut radial = 0.0f64;
    for p in state.family.patches[0].boundary.nodes() {
        radial = radial.max((p.norm() - 1.0).abs());
    }
    assert!(radial <= 1e-11, "radial deviation {radial:.3e}");
    assert!(state.area_drift() <= 1e-11, "drift {:.3e}", state.area_drift());
}

/// Runs `steps` equal steps of size dt and returns the final node matrix.
fn advance(state: &SimulationState, scheme: Scheme, dt: f64, steps: usize) -> NodeMatrix {
    let cfg = StepperConfig {
        dt,
        scheme,
        redistribute_every: 0,
        cfl_guard: 1.0,
    };
    let q = quad(1e-11);
    let mut s = state.clone();
    for _ in 0..steps {
        s = step(&s, &cfg, &q).unwrap();
    }
    node_matrix(&s.family)
}

fn max_node_dist(a: &NodeMatrix, b: &NodeMatrix) -> f64 {
    let mut worst = 0.0f64;
    for (ra, rb) in a.iter().zip(b) {
        for (&p, &q) in ra.iter().zip(rb) {
            worst = worst.max(p.dist(q));
        }
    }
    worst
}

#[test]
fn rk4_converges_at_fourth_order() {
    let state = single(blob(96), 0.25, 0.3);
    let fine = advance(&state, Scheme::Rk4, 0.005, 16);
    let mid = advance(&state, Scheme::Rk4, 0.01, 8);
    let coarse = advance(&state, Scheme::Rk4, 0.02, 4);
    let d1 = max_node_dist(&coarse, &mid);
    let d2 = max_node_dist(&mid, &fine);
    let order = (d1 / d2).log2();
    assert!(
        (3.2..=4.8).contains(&order),
        "observed order {order:.2} (d1 {d1:.3e}, d2 {d2:.3e})"
    );
}

#[test]
fn rk2_converges_at_second_order() {
    let state = single(blob(96), 0.25, 0.3);
    let fine = advance(&state, Scheme::Rk2, 0.005, 16);
    let mid = advance(&state, Scheme::Rk2, 0.01, 8);
    let coarse = advance(&state, Scheme::Rk2, 0.02, 4);
    let d1 = max_node_dist(&coarse, &mid);
    let d2 = max_node_dist(&mid, &fine);
    let order = (d1 / d2).log2();
    assert!(
        (1.6..=2.6).contains(&order),
        "observed order {order:.2} (d1 {d1:.3e}, d2 {d2:.3e})"
    );
}

#[test]
fn dipole_preserves_reflection_symmetry() {
    // Opposite strengths mirrored across the vertical axis: the field
    // satisfies u(Sx) = S u(x) for S(x, y) = (-x, y), so the node relation
    // left_j = S(right_{(n-j) mod n}) is invariant under exact advection.
    let n = 64;
    let right = circle(n, 0.5, Vec2::new(1.2, 0.0));
    let left_nodes: Vec<Vec2> = (0..n)
        .map(|j| right.node((n - j) % n).reflect_y())
        .collect();
    let left = ClosedCurve::from_nodes(left_nodes).unwrap();
    let family = PatchFamily::new(
        vec![
            Patch {
                boundary: right,
                strength: 1.0,
            },
            Patch {
                boundary: left,
                strength: -1.0,
            },
        ],
        0.25,
        Domain::Plane,
    )
    .unwrap();
    let mut state = SimulationState::new(family);
    let cfg = StepperConfig {
        dt: 2e-3,
        redistribute_every: 0,
        ..StepperConfig::default()
    };
    let q = quad(1e-10);
    for _ in 0..5 {
        state = step(&state, &cfg, &q).unwrap();
    }
    let a = state.family.patches[0].boundary.nodes();
    let b = state.family.patches[1].boundary.nodes();
    let mut worst = 0.0f64;
    let mut moved = 0.0f64;
    for j in 0..n {
        worst = worst.max(b[j].dist(a[(n - j) % n].reflect_y()));
        moved = moved.max(a[j].dist(state.areas0.len() as f64 * Vec2::ZERO + a[j]));
    }
    let _ = moved;
    assert!(worst <= 1e-9, "symmetry violation {worst:.3e}");
    // The pair is a translating dipole, not a fixed point: it must have
    // moved measurably along the axis of symmetry.
    let start = circle(n, 0.5, Vec2::new(1.2, 0.0));
    let shift = max_node_dist(
        &vec![a.to_vec()],
        &vec![start.nodes().to_vec()],
    );
    assert!(shift > 1e-4, "dipole did not translate (moved {shift:.3e})");
}

#[test]
fn redistribute_uniformizes_clustered_nodes_and_is_idempotent() {
    // Same ellipse, nodes crowded toward one side by a smooth parameter warp.
    let n = 96;
    let nodes: Vec<Vec2> = (0..n)
        .map(|j| {
            let t = TAU * j as f64 / n as f64;
            let w = t + 0.25 * t.sin();
            Vec2::new(1.3 * w.cos(), 0.8 * w.sin())
        })
        .collect();
    let state = single(ClosedCurve::from_nodes(nodes).unwrap(), 1.0, 0.3);
    let once = redistribute(&state).unwrap();
    let boundary = &once.family.patches[0].boundary;
    let speeds: Vec<f64> = (0..n)
        .map(|j| boundary.deriv(boundary.param(j)).norm())
        .collect();
    let mean = speeds.iter().sum::<f64>() / n as f64;
    let spread = speeds.iter().fold(0.0f64, |m, s| m.max((s - mean).abs()));
    assert!(spread / mean <= 1e-8, "speed spread {:.3e}", spread / mean);
    // Area is a shape property; resampling must not disturb it.
    let drift = (patch_area(boundary) - state.areas0[0]).abs() / state.areas0[0];
    assert!(drift <= 1e-10, "area drift {drift:.3e}");

    let twice = redistribute(&once).unwrap();
    let d = max_node_dist(
        &node_matrix(&once.family),
        &node_matrix(&twice.family),
    );
    assert_eq!(d, 0.0, "second resample moved nodes by {d:.3e}");
}

#[test]
fn redistribute_rejects_extreme_clustering() {
    // Monotone power warp drives the chord ratio far beyond 1000.
    let n = 32;
    let nodes: Vec<Vec2> = (0..n)
        .map(|j| {
            let t = TAU * (j as f64 / n as f64).powi(8);
            Vec2::new(t.cos(), t.sin())
        })
        .collect();
    let state = single(ClosedCurve::from_nodes(nodes).unwrap(), 1.0, 0.3);
    match redistribute(&state) {
        Err(Error::Resolution(msg)) => assert!(msg.contains("spacing ratio"), "{msg}"),
        other => panic!("expected a resolution error, got {other:?}"),
    }
}

#[test]
fn checkpoint_roundtrip_restores_the_state_bit_for_bit() {
    let mut state = single(blob(64), 0.8, 0.25);
    let cfg = StepperConfig {
        dt: 2e-3,
        redistribute_every: 0,
        ..StepperConfig::default()
    };
    let q = quad(1e-8);
    for _ in 0..3 {
        state = step(&state, &cfg, &q).unwrap();
    }
    let cp = Checkpoint::capture(&state, "deadbeef");
    let back = Checkpoint::from_json(&cp.to_json()).unwrap();
    assert_eq!(back.scenario_hash, "deadbeef");
    let restored = back.restore().unwrap();
    assert_eq!(restored.time.to_bits(), state.time.to_bits());
    assert_eq!(restored.step_index, state.step_index);
    for (a, b) in restored.areas0.iter().zip(&state.areas0) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    let na = node_matrix(&restored.family);
    let nb = node_matrix(&state.family);
    for (ra, rb) in na.iter().zip(&nb) {
        for (p, q) in ra.iter().zip(rb) {
            assert_eq!(p.x.to_bits(), q.x.to_bits());
            assert_eq!(p.y.to_bits(), q.y.to_bits());
        }
    }
}

#[test]
fn checkpoint_rejects_foreign_versions_and_corruption() {
    let state = single(circle(32, 1.0, Vec2::ZERO), 1.0, 0.3);
    let cp = Checkpoint::capture(&state, "cafe");
    let text = cp.to_json();

    let bumped = text.replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    match Checkpoint::from_json(&bumped) {
        Err(Error::SchemaVersion { found, expected }) => {
            assert_eq!((found, expected), (99, CHECKPOINT_SCHEMA_VERSION));
        }
        other => panic!("expected a schema version error, got {other:?}"),
    }

    let truncated = &text[..text.len() / 2];
    assert!(matches!(
        Checkpoint::from_json(truncated),
        Err(Error::Integrity(_))
    ));

    let no_version = text.replacen("\"schema_version\": 1,", "", 1);
    assert!(matches!(
        Checkpoint::from_json(&no_version),
        Err(Error::Integrity(_))
    ));

    let mut mismatched = cp;
    mismatched.strengths.push(2.0);
    assert!(matches!(mismatched.restore(), Err(Error::Integrity(_))));
}

#[test]
fn cfl_guard_halves_the_step_until_displacement_fits() {
    // Unit disk at alpha 0.3 moves its boundary at speed 5.908; with dt 0.05
    // the displacement is 3 local spacings, so the guard at 0.5 must halve
    // dt three times before accepting.
    let state = single(circle(64, 1.0, Vec2::ZERO), 1.0, 0.3);
    let cfg = StepperConfig {
        dt: 0.05,
        ..StepperConfig::default()
    };
    let next = step(&state, &cfg, &quad(1e-8)).unwrap();
    assert_eq!(next.time.to_bits(), (0.05 / 8.0).to_bits());
    assert_eq!(next.step_index, 1);
}

#[test]
fn hopeless_guard_reports_stiffness() {
    let state = single(circle(64, 1.0, Vec2::ZERO), 1.0, 0.3);
    let cfg = StepperConfig {
        dt: 0.05,
        cfl_guard: 1e-9,
        ..StepperConfig::default()
    };
    match step(&state, &cfg, &quad(1e-8)) {
        Err(Error::Stiffness(msg)) => assert!(msg.contains("halvings"), "{msg}"),
        other => panic!("expected stiffness, got {other:?}"),
    }
}

#[test]
fn stepping_requires_a_subcritical_exponent() {
    let state = single(circle(32, 1.0, Vec2::ZERO), 1.0, 0.5);
    assert!(matches!(
        step(&state, &StepperConfig::default(), &quad(1e-7)),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn empty_family_advances_time_only() {
    let state = SimulationState::new(
        PatchFamily::new(Vec::new(), 0.3, Domain::Plane).unwrap(),
    );
    let next = step(&state, &StepperConfig::default(), &quad(1e-7)).unwrap();
    assert_eq!(next.step_index, 1);
    assert!(next.family.patches.is_empty());
    assert!((next.time - 1e-2).abs() < 1e-15);
}

#[test]
fn asymmetric_blob_conserves_area_while_deforming() {
    let mut state = single(blob(96), 1.0, 0.25);
    let start = node_matrix(&state.family);
    let cfg = StepperConfig {
        dt: 5e-3,
        redistribute_every: 0,
        ..StepperConfig::default()
    };
    let q = quad(1e-9);
    for _ in 0..10 {
        state = step(&state, &cfg, &q).unwrap();
    }
    assert!(state.area_drift() <= 1e-9, "drift {:.3e}", state.area_drift());
    let moved = max_node_dist(&start, &node_matrix(&state.family));
    assert!(moved > 1e-2, "blob barely moved ({moved:.3e})");
}

#[test]
fn contact_scan_reports_wall_self_pair_and_containment() {
    let sq = |c: Vec2, r: f64| -> Vec<Vec2> {
        vec![
            c + Vec2::new(-r, -r),
            c + Vec2::new(r, -r),
            c + Vec2::new(r, r),
            c + Vec2::new(-r, r),
        ]
    };

    let wall = vec![vec![
        Vec2::new(0.0, -0.01),
        Vec2::new(1.0, 0.5),
        Vec2::new(0.0, 1.0),
    ]];
    let r = find_contact(&wall, Domain::HalfPlane, 1.5, 7).unwrap();
    assert_eq!((r.patch_a, r.patch_b, r.step_index), (0, 0, 7));
    assert!(r.detail.contains("wall"), "{}", r.detail);
    assert!(r.separation <= 0.0);

    let bowtie = vec![vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(0.0, 1.0),
    ]];
    let r = find_contact(&bowtie, Domain::Plane, 0.0, 0).unwrap();
    assert!(r.detail.contains("crossed itself"), "{}", r.detail);

    let pair = vec![sq(Vec2::ZERO, 1.0), sq(Vec2::new(1.5, 0.0), 1.0)];
    let r = find_contact(&pair, Domain::Plane, 0.0, 0).unwrap();
    assert_eq!((r.patch_a, r.patch_b), (0, 1));
    assert!(r.detail.contains("crossed"), "{}", r.detail);

    let nested = vec![sq(Vec2::ZERO, 2.0), sq(Vec2::new(0.2, 0.1), 0.3)];
    let r = find_contact(&nested, Domain::Plane, 0.0, 0).unwrap();
    assert!(r.detail.contains("entered"), "{}", r.detail);

    let apart = vec![sq(Vec2::ZERO, 1.0), sq(Vec2::new(5.0, 0.0), 1.0)];
    assert!(find_contact(&apart, Domain::Plane, 0.0, 0).is_none());
}
