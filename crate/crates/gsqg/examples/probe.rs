use gsqg::dynamics::{patch_area, step, SimulationState, StepperConfig};
use gsqg::velocity::{Domain, Patch, PatchFamily, QuadratureSpec};
use gsqg::Vec2;
use std::f64::consts::TAU;
use std::time::Instant;

fn main() {
    let n = 256;
    let nodes: Vec<Vec2> = (0..n)
        .map(|j| {
            let t = TAU * j as f64 / n as f64;
            Vec2::new(t.cos(), t.sin())
        })
        .collect();
    let curve = gsqg::curve::ClosedCurve::from_nodes(nodes).unwrap();
    let family = PatchFamily::new(
        vec![Patch {
            boundary: curve,
            strength: 1.0,
        }],
        0.2,
        Domain::Plane,
    )
    .unwrap();
    let quad = QuadratureSpec::new(64, 0.05, 1e-7).unwrap();
    let cfg = StepperConfig {
        dt: 1e-2,
        ..StepperConfig::default()
    };
    let mut state = SimulationState::new(family);
    let area0 = patch_area(&state.family.patches[0].boundary);
    let t0 = Instant::now();
    state = step(&state, &cfg, &quad).unwrap();
    println!("one rk4 step (256 nodes): {:?}", t0.elapsed());
    let t1 = Instant::now();
    for _ in 0..9 {
        state = step(&state, &cfg, &quad).unwrap();
    }
    println!("next nine steps: {:?}", t1.elapsed());
    let mut dev = 0.0f64;
    for p in state.family.patches[0].boundary.nodes() {
        dev = dev.max((p.norm() - 1.0).abs());
    }
    println!("radial deviation after ten steps: {dev:.3e}");
    let drift = (patch_area(&state.family.patches[0].boundary) - area0).abs();
    println!("area drift: {drift:.3e}");
}
