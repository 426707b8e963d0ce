use gsqg::curve::ClosedCurve;
use gsqg::Vec2;
use gsqg::velocity::{
    boundary_velocity, normal_velocity_pv, velocity_area_oracle, velocity_contour,
    velocity_halfplane, Domain, Patch, PatchFamily, QuadratureSpec,
};
use std::f64::consts::TAU;

fn main() {
    let n = 128;
    let nodes: Vec<Vec2> = (0..n)
        .map(|k| {
            let t = TAU * k as f64 / n as f64;
            Vec2::new(1.2 * t.cos() + 0.1, 0.8 * t.sin() + 1.6)
        })
        .collect();
    let curve = ClosedCurve::from_nodes(nodes).unwrap();
    let spec = QuadratureSpec::new(128, 0.2, 1e-8).unwrap();

    let plane = PatchFamily::new(
        vec![Patch { boundary: curve.clone(), strength: 1.1 }],
        0.3,
        Domain::Plane,
    )
    .unwrap();
    let x = Vec2::new(2.4, 1.9);
    let u_contour = velocity_contour(x, &plane, &spec).unwrap();
    let u_oracle = velocity_area_oracle(x, &plane, &spec).unwrap();
    println!("contour  {:+.12e} {:+.12e}", u_contour.x, u_contour.y);
    println!("oracle   {:+.12e} {:+.12e}", u_oracle.x, u_oracle.y);
    assert!((u_contour - u_oracle).norm() < 1e-6, "routes disagree");

    let ub = boundary_velocity(&plane, 0, 0.9, &spec).unwrap();
    println!("boundary {:+.12e} {:+.12e}", ub.x, ub.y);

    let pv = normal_velocity_pv(0, 0.9, &plane, &spec).unwrap();
    println!("pv       {:+.12e}", pv);

    let half = PatchFamily::new(
        vec![Patch { boundary: curve, strength: 1.1 }],
        0.3,
        Domain::HalfPlane,
    )
    .unwrap();
    let wall = velocity_halfplane(Vec2::new(0.3, 0.0), &half, &spec).unwrap();
    println!("wall     {:+.12e} {:+.12e}", wall.x, wall.y);
    assert!(wall.y.abs() < 1e-7, "wall leaks");

    let json = serde_json::to_string(&half).unwrap();
    let back: PatchFamily = serde_json::from_str(&json).unwrap();
    let wall2 = velocity_halfplane(Vec2::new(0.3, 0.0), &back, &spec).unwrap();
    assert_eq!(wall.x.to_bits(), wall2.x.to_bits(), "serde round trip drifted");
    println!("serde round trip exact");
}
