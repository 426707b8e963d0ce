//! Velocity evaluator tests. The two routes (polar area integration and the
//! boundary-integral form) are independent implementations, so their
//! agreement at tight tolerances is the main correctness oracle; symmetry
//! configurations pin the absolute values.

use super::*;
use crate::vec2::Vec2;
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

fn ellipse(n: usize, a: f64, b: f64) -> ClosedCurve {
    let nodes = (0..n)
        .map(|j| {
            let t = TAU * j as f64 / n as f64;
            Vec2::new(a * t.cos(), b * t.sin())
        })
        .collect();
    ClosedCurve::from_nodes(nodes).unwrap()
}

fn single(boundary: ClosedCurve, strength: f64, alpha: f64) -> PatchFamily {
    PatchFamily::new(
        vec![Patch { boundary, strength }],
        alpha,
        Domain::Plane,
    )
    .unwrap()
}

fn spec(tolerance: f64) -> QuadratureSpec {
    QuadratureSpec::new(128, 0.2, tolerance).unwrap()
}

#[test]
fn oracle_vanishes_at_disk_center() {
    let family = single(circle(96, 1.0, Vec2::ZERO), 1.0, 0.25);
    let u = velocity_area_oracle(Vec2::ZERO, &family, &spec(1e-7)).unwrap();
    assert!(u.norm() <= 3e-7, "center velocity {:?}", u);
}

#[test]
fn oracle_is_tangential_on_disk_boundary() {
    let family = single(circle(96, 1.0, Vec2::ZERO), 1.0, 0.25);
    let x = Vec2::new(1.0, 0.0);
    let u = velocity_area_oracle(x, &family, &spec(1e-7)).unwrap();
    // Radial symmetry forces azimuthal flow; positive strength spins the
    // patch counterclockwise, so the top of the x axis moves upward.
    assert!(u.x.abs() <= 5e-7, "radial component {:.3e}", u.x);
    assert!(u.y > 1e-2, "tangential component {:.3e}", u.y);
}

#[test]
fn mirror_patch_pair_cancels_at_the_midpoint() {
    // Disks mirrored across the vertical axis with centers on the horizontal
    // axis: at the origin the reflection kills the horizontal component and
    // the extra point symmetry kills the vertical one.
    let family = PatchFamily::new(
        vec![
            Patch {
                boundary: circle(64, 0.5, Vec2::new(-1.4, 0.0)),
                strength: 0.8,
            },
            Patch {
                boundary: circle(64, 0.5, Vec2::new(1.4, 0.0)),
                strength: 0.8,
            },
        ],
        0.3,
        Domain::Plane,
    )
    .unwrap();
    let u = velocity_area_oracle(Vec2::ZERO, &family, &spec(1e-7)).unwrap();
    assert!(u.x.abs() <= 5e-7, "horizontal component {:.3e}", u.x);
    assert!(u.y.abs() <= 5e-7, "vertical component {:.3e}", u.y);
}

#[test]
fn contour_vanishes_at_disk_center() {
    let family = single(circle(96, 1.0, Vec2::ZERO), 1.0, 0.2);
    let u = velocity_contour(Vec2::ZERO, &family, &spec(1e-8)).unwrap();
    assert!(u.norm() <= 1e-7, "center velocity {:?}", u);
}

#[test]
fn contour_matches_oracle_at_an_exterior_point() {
    let family = single(ellipse(128, 1.3, 0.7), 1.0, 0.2);
    let x = Vec2::new(1.9, 0.4);
    let lhs = velocity_contour(x, &family, &spec(1e-8)).unwrap();
    let rhs = velocity_area_oracle(x, &family, &spec(1e-8)).unwrap();
    assert!(
        (lhs - rhs).norm() <= 1e-6,
        "route mismatch {:.3e}",
        (lhs - rhs).norm()
    );
}

#[test]
fn contour_matches_oracle_on_a_disk_boundary() {
    let family = single(circle(96, 1.0, Vec2::ZERO), 1.0, 0.25);
    let x = family.patches[0].boundary.eval(0.7);
    let lhs = velocity_contour(x, &family, &spec(1e-7)).unwrap();
    let rhs = velocity_area_oracle(x, &family, &spec(1e-7)).unwrap();
    assert!(
        (lhs - rhs).norm() <= 1e-5,
        "route mismatch {:.3e}",
        (lhs - rhs).norm()
    );
    // The boundary point moves tangentially: no radial component.
    let radial = lhs.dot(x.normalized());
    assert!(radial.abs() <= 1e-5, "radial component {:.3e}", radial);
}

#[test]
fn contour_handles_a_boundary_point_near_the_critical_exponent() {
    let family = single(ellipse(128, 1.2, 0.8), 1.0, 0.45);
    let x = family.patches[0].boundary.eval(2.1);
    let lhs = velocity_contour(x, &family, &spec(1e-7)).unwrap();
    let rhs = velocity_area_oracle(x, &family, &spec(1e-7)).unwrap();
    assert!(
        (lhs - rhs).norm() <= 1e-5,
        "route mismatch {:.3e}",
        (lhs - rhs).norm()
    );
}

#[test]
fn routes_agree_at_mixed_interior_and_exterior_points() {
    let points = [
        Vec2::new(1.9, 0.4),
        Vec2::new(0.3, -0.2),
        Vec2::new(1.45, 0.05),
        Vec2::new(0.0, 0.85),
        Vec2::new(-1.0, -0.5),
        Vec2::new(3.0, 2.0),
    ];
    for &alpha in &[0.1, 0.45] {
        let family = single(ellipse(128, 1.4, 0.8), 1.0, alpha);
        for &x in &points {
            let lhs = velocity_contour(x, &family, &spec(1e-7)).unwrap();
            let rhs = velocity_area_oracle(x, &family, &spec(1e-7)).unwrap();
            assert!(
                (lhs - rhs).norm() <= 2e-6,
                "alpha {alpha}, point {:?}: mismatch {:.3e}",
                x,
                (lhs - rhs).norm()
            );
        }
    }
}

#[test]
fn boundary_velocity_agrees_with_detected_on_curve_evaluation() {
    let family = single(ellipse(96, 1.3, 0.9), 1.0, 0.3);
    let xi = 0.7;
    let direct = boundary_velocity(&family, 0, xi, &spec(1e-8)).unwrap();
    let detected =
        velocity_contour(family.patches[0].boundary.eval(xi), &family, &spec(1e-8)).unwrap();
    assert!(
        (direct - detected).norm() <= 1e-8,
        "paths disagree by {:.3e}",
        (direct - detected).norm()
    );
}

#[test]
fn disk_boundary_speed_matches_the_gamma_closed_form() {
    // Unit disk, unit strength: the boundary moves tangentially with speed
    // |2 pi Gamma(1+p) / (Gamma(p/2) Gamma(2+p/2))| / (2a), p = -2a.
    let cases = [
        (0.2, 4.314_528_024_783_149_0),
        (0.25, 4.944_199_139_470_325_1),
        (0.3, 5.908_240_990_801_958_7),
        (0.45, 20.805_509_389_241_307),
    ];
    for (alpha, want) in cases {
        let family = single(circle(256, 1.0, Vec2::ZERO), 1.0, alpha);
        let u = boundary_velocity(&family, 0, 0.0, &spec(1e-9)).unwrap();
        // Node 0 sits at (1, 0); positive strength spins counterclockwise.
        assert!(u.x.abs() <= 1e-9, "alpha {alpha}: radial {:.3e}", u.x);
        assert!(
            (u.y - want).abs() <= 1e-8 * want,
            "alpha {alpha}: speed {:.12e} vs {:.12e}",
            u.y,
            want
        );
    }
}

#[test]
fn node_indexed_and_parameter_boundary_evaluations_agree() {
    // The node-indexed path samples the smooth kernel factor off the cached
    // dense grid; the parameter path samples it spectrally. Same weights,
    // same answer.
    let family = single(ellipse(128, 1.3, 0.7), 1.1, 0.45);
    let eval = FieldEval::new(&family).unwrap();
    let s = spec(1e-9);
    for node in [0usize, 17, 64, 100] {
        let xi = family.patches[0].boundary.param(node);
        let a = eval.eval_at_node(0, node, &s).unwrap();
        let b = eval.eval_on_curve(0, xi, &s).unwrap();
        assert!(
            (a - b).norm() <= 1e-11,
            "node {node}: paths differ by {:.3e}",
            (a - b).norm()
        );
    }
}

#[test]
fn boundary_velocity_matches_oracle_at_off_node_parameters() {
    for &alpha in &[0.1, 0.45] {
        let family = single(ellipse(128, 1.3, 0.7), 1.0, alpha);
        let s = spec(1e-8);
        for &xi in &[0.37, 2.9] {
            let lhs = boundary_velocity(&family, 0, xi, &s).unwrap();
            let rhs =
                velocity_area_oracle(family.patches[0].boundary.eval(xi), &family, &s).unwrap();
            assert!(
                (lhs - rhs).norm() <= 1e-6,
                "alpha {alpha}, xi {xi}: mismatch {:.3e}",
                (lhs - rhs).norm()
            );
        }
    }
}

#[test]
fn velocity_is_additive_and_homogeneous_in_strength() {
    let c1 = circle(64, 0.6, Vec2::new(-1.9, 0.2));
    let c2 = ellipse(64, 0.8, 0.5);
    let x = Vec2::new(0.4, 1.3);
    let s = spec(1e-9);
    let both = PatchFamily::new(
        vec![
            Patch {
                boundary: c1.clone(),
                strength: 0.7,
            },
            Patch {
                boundary: c2.clone(),
                strength: -1.1,
            },
        ],
        0.3,
        Domain::Plane,
    )
    .unwrap();
    let u_both = velocity_contour(x, &both, &s).unwrap();
    let u1 = velocity_contour(x, &single(c1.clone(), 0.7, 0.3), &s).unwrap();
    let u2 = velocity_contour(x, &single(c2, -1.1, 0.3), &s).unwrap();
    assert!(
        (u_both - (u1 + u2)).norm() <= 1e-8,
        "additivity violated by {:.3e}",
        (u_both - (u1 + u2)).norm()
    );

    let scaled = velocity_contour(x, &single(c1, 2.1, 0.3), &s).unwrap();
    let tripled = velocity_contour(x, &single(circle(64, 0.6, Vec2::new(-1.9, 0.2)), 0.7, 0.3), &s)
        .unwrap()
        * 3.0;
    assert!(
        (scaled - tripled).norm() <= 1e-8,
        "homogeneity violated by {:.3e}",
        (scaled - tripled).norm()
    );
}

#[test]
fn field_is_equivariant_under_rigid_motions() {
    let angle = 0.83;
    let shift = Vec2::new(0.7, -1.9);
    let base = single(ellipse(96, 1.2, 0.7), 1.0, 0.25);
    let moved = single(
        base.patches[0].boundary.transformed(angle, shift),
        1.0,
        0.25,
    );
    let s = spec(1e-9);
    for &x in &[Vec2::new(1.8, 0.3), Vec2::new(-0.4, 1.1)] {
        let u = velocity_contour(x, &base, &s).unwrap();
        let ut = velocity_contour(x.rotated(angle) + shift, &moved, &s).unwrap();
        assert!(
            (ut - u.rotated(angle)).norm() <= 1e-7,
            "equivariance broken by {:.3e}",
            (ut - u.rotated(angle)).norm()
        );
    }
}

#[test]
fn flux_through_a_patch_free_circle_vanishes() {
    // The field is a perpendicular gradient, hence exactly divergence-free:
    // its flux through any loop vanishes. (Its tangential circulation does
    // not: a power-law kernel spreads the stream function's Laplacian far
    // outside the patch, unlike the local Euler case.)
    let family = single(ellipse(96, 1.0, 0.6), 1.0, 0.3);
    let s = spec(1e-9);
    let (center, r, m) = (Vec2::new(2.4, 0.9), 0.3, 48);
    let mut flux = 0.0;
    for k in 0..m {
        let a = TAU * k as f64 / m as f64;
        let radial = Vec2::new(a.cos(), a.sin());
        let x = center + radial * r;
        flux += velocity_contour(x, &family, &s).unwrap().dot(radial);
    }
    flux *= TAU * r / m as f64;
    assert!(flux.abs() <= 1e-6, "flux {:.3e}", flux);
}

#[test]
fn pv_normal_component_vanishes_on_a_rotating_disk() {
    for &alpha in &[0.2, 0.5, 0.8] {
        let family = PatchFamily::new(
            vec![Patch {
                boundary: circle(128, 1.0, Vec2::ZERO),
                strength: 1.0,
            }],
            alpha,
            Domain::Plane,
        )
        .unwrap();
        let s = QuadratureSpec::new(128, 0.1, 1e-7).unwrap();
        let v = normal_velocity_pv(0, 1.1, &family, &s).unwrap();
        assert!(v.abs() <= 1e-6, "alpha {alpha}: normal speed {:.3e}", v);
    }
}

#[test]
fn pv_matches_the_oracle_normal_component_below_the_critical_exponent() {
    let family = single(ellipse(128, 1.3, 0.8), 1.0, 0.3);
    let s = QuadratureSpec::new(128, 0.1, 1e-7).unwrap();
    let xi = 0.9;
    let pv = normal_velocity_pv(0, xi, &family, &s).unwrap();
    let boundary = &family.patches[0].boundary;
    let full = velocity_area_oracle(boundary.eval(xi), &family, &s).unwrap();
    let expected = full.dot(boundary.outward_normal(xi));
    assert!(
        (pv - expected).abs() <= 1e-5,
        "pv {:.6e} vs oracle normal {:.6e}",
        pv,
        expected
    );
}

#[test]
fn pv_from_a_far_disk_is_antisymmetric_in_its_strength() {
    let two_disks = |strength2: f64| {
        PatchFamily::new(
            vec![
                Patch {
                    boundary: circle(96, 1.0, Vec2::new(-3.0, 0.0)),
                    strength: 1.0,
                },
                Patch {
                    boundary: circle(96, 1.0, Vec2::new(3.0, 0.0)),
                    strength: strength2,
                },
            ],
            0.3,
            Domain::Plane,
        )
        .unwrap()
    };
    let s = QuadratureSpec::new(128, 0.1, 1e-7).unwrap();

    // On the line of centers the far disk's field is perpendicular to the
    // line, so the nearest point feels no normal push; off the axis it does.
    let on_axis = normal_velocity_pv(0, 0.0, &two_disks(1.0), &s).unwrap();
    assert!(on_axis.abs() <= 1e-6, "on-axis normal {:.3e}", on_axis);

    let xi = TAU / 6.0;
    let push = normal_velocity_pv(0, xi, &two_disks(1.0), &s).unwrap();
    let pull = normal_velocity_pv(0, xi, &two_disks(-1.0), &s).unwrap();
    assert!(push.abs() > 1e-3, "off-axis normal too small {:.3e}", push);
    assert!(
        (push + pull).abs() <= 2e-6,
        "antisymmetry violated: {:.3e} vs {:.3e}",
        push,
        pull
    );
}

#[test]
fn halfplane_wall_stays_impermeable() {
    let family = PatchFamily::new(
        vec![Patch {
            boundary: circle(96, 0.6, Vec2::new(0.4, 1.5)),
            strength: 1.3,
        }],
        0.2,
        Domain::HalfPlane,
    )
    .unwrap();
    let s = spec(1e-8);
    let mut max_wall_normal: f64 = 0.0;
    let mut max_wall_slip: f64 = 0.0;
    for &t in &[-2.0, -0.5, 0.0, 0.8, 2.0] {
        let u = velocity_halfplane(Vec2::new(t, 0.0), &family, &s).unwrap();
        max_wall_normal = max_wall_normal.max(u.y.abs());
        max_wall_slip = max_wall_slip.max(u.x.abs());
    }
    assert!(max_wall_normal <= 1e-7, "wall leak {:.3e}", max_wall_normal);
    assert!(max_wall_slip > 1e-4, "wall flow suspiciously small");
}

#[test]
fn far_from_the_wall_the_mirror_correction_fades() {
    let s = spec(1e-9);
    let diff_at = |height: f64| {
        let boundary = circle(64, 0.5, Vec2::new(0.0, height));
        let x = Vec2::new(0.0, height - 0.5);
        let half = PatchFamily::new(
            vec![Patch {
                boundary: boundary.clone(),
                strength: 1.0,
            }],
            0.25,
            Domain::HalfPlane,
        )
        .unwrap();
        let plane = single(boundary, 1.0, 0.25);
        let uh = velocity_halfplane(x, &half, &s).unwrap();
        let up = velocity_contour(x, &plane, &s).unwrap();
        (uh - up).norm()
    };
    let near = diff_at(2.0);
    let far = diff_at(4.0);
    assert!(near > 1e-6, "mirror correction lost at height 2: {near:.3e}");
    assert!(
        far <= 0.7 * near,
        "mirror correction did not fade: {near:.3e} -> {far:.3e}"
    );
}

#[test]
fn patch_symmetric_about_a_vertical_line_flows_horizontally_on_it() {
    // Reflection across the symmetry line x = 0.7 (which the wall mirror
    // preserves) flips the sign of the vertical component on that line.
    let family = PatchFamily::new(
        vec![Patch {
            boundary: circle(96, 0.5, Vec2::new(0.7, 2.0)),
            strength: 1.0,
        }],
        0.2,
        Domain::HalfPlane,
    )
    .unwrap();
    let s = spec(1e-8);
    for &y in &[0.9, 1.2, 3.1] {
        let u = velocity_halfplane(Vec2::new(0.7, y), &family, &s).unwrap();
        assert!(
            u.y.abs() <= 1e-7,
            "vertical flow {:.3e} at height {y}",
            u.y
        );
    }
}

#[test]
fn supercritical_exponent_points_to_the_pv_entry() {
    let family = PatchFamily::new(
        vec![Patch {
            boundary: circle(64, 1.0, Vec2::ZERO),
            strength: 1.0,
        }],
        0.5,
        Domain::Plane,
    )
    .unwrap();
    let s = spec(1e-7);
    for err in [
        velocity_contour(Vec2::new(2.0, 0.0), &family, &s).unwrap_err(),
        velocity_area_oracle(Vec2::new(2.0, 0.0), &family, &s).unwrap_err(),
    ] {
        match err {
            Error::Parameter(msg) => {
                assert!(msg.contains("normal_velocity_pv"), "message: {msg}")
            }
            other => panic!("expected a parameter error, got {other:?}"),
        }
    }
    // The pv entry itself accepts the same family.
    assert!(normal_velocity_pv(0, 0.3, &family, &QuadratureSpec::new(128, 0.1, 1e-7).unwrap())
        .is_ok());
}

#[test]
fn family_and_spec_validation_rejects_bad_input() {
    let disk = circle(64, 1.0, Vec2::ZERO);
    assert!(matches!(
        PatchFamily::new(
            vec![Patch {
                boundary: disk.clone(),
                strength: 0.0
            }],
            0.3,
            Domain::Plane
        ),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(
        PatchFamily::new(
            vec![Patch {
                boundary: disk.clone(),
                strength: 1.0
            }],
            1.0,
            Domain::Plane
        ),
        Err(Error::Parameter(_))
    ));
    // Dips below the wall.
    assert!(matches!(
        PatchFamily::new(
            vec![Patch {
                boundary: circle(64, 1.0, Vec2::new(0.0, 0.5)),
                strength: 1.0
            }],
            0.3,
            Domain::HalfPlane
        ),
        Err(Error::Geometry(_))
    ));
    // Overlapping boundaries.
    assert!(matches!(
        PatchFamily::new(
            vec![
                Patch {
                    boundary: disk.clone(),
                    strength: 1.0
                },
                Patch {
                    boundary: circle(64, 1.0, Vec2::new(1.0, 0.0)),
                    strength: 1.0
                },
            ],
            0.3,
            Domain::Plane
        ),
        Err(Error::Geometry(_))
    ));
    // Nested boundaries never cross edge to edge but still overlap.
    assert!(matches!(
        PatchFamily::new(
            vec![
                Patch {
                    boundary: disk.clone(),
                    strength: 1.0
                },
                Patch {
                    boundary: circle(64, 0.3, Vec2::new(0.2, 0.0)),
                    strength: -1.0
                },
            ],
            0.3,
            Domain::Plane
        ),
        Err(Error::Geometry(_))
    ));
    assert!(matches!(
        QuadratureSpec::new(32, 0.2, 1e-8),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(
        QuadratureSpec::new(128, 0.2, 0.0),
        Err(Error::Parameter(_))
    ));

    let family = single(disk, 1.0, 0.3);
    assert!(matches!(
        normal_velocity_pv(3, 0.0, &family, &spec(1e-7)),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(
        velocity_halfplane(Vec2::new(0.0, 1.0), &family, &spec(1e-7)),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn empty_family_induces_no_flow() {
    let family = PatchFamily::new(Vec::new(), 0.3, Domain::Plane).unwrap();
    let u = velocity_contour(Vec2::new(0.3, -0.8), &family, &spec(1e-8)).unwrap();
    assert_eq!(u, Vec2::ZERO);
    let u = velocity_area_oracle(Vec2::new(0.3, -0.8), &family, &spec(1e-8)).unwrap();
    assert_eq!(u, Vec2::ZERO);
}

#[test]
fn point_below_the_wall_is_rejected() {
    let family = PatchFamily::new(
        vec![Patch {
            boundary: circle(64, 0.5, Vec2::new(0.0, 2.0)),
            strength: 1.0,
        }],
        0.3,
        Domain::HalfPlane,
    )
    .unwrap();
    match velocity_halfplane(Vec2::new(0.0, -0.1), &family, &spec(1e-7)) {
        Err(Error::Parameter(msg)) => assert!(msg.contains("wall"), "message: {msg}"),
        other => panic!("expected a parameter error, got {other:?}"),
    }
}
