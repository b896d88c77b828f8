use std::f64::consts::PI;

use monoshade::geom::{local_hausdorff_distance, ray_multiplicity, PointCloud};
use monoshade::measures::{analytic_ball_measure, mesh_ball_measure};
use monoshade::mesh::tetra_cone;
use monoshade::zoo::omega;
use monoshade::{axis, pt, AffineFlat, AnalyticSet, Ball, BoundaryPiece, Point, ShadeRegion, Similarity};
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -2.0..2.0f64
}

fn point3() -> impl Strategy<Value = Point> {
    (coord(), coord(), coord()).prop_map(|(x, y, z)| pt(&[x, y, z]))
}

fn rigid() -> impl Strategy<Value = Similarity> {
    (0.0..2.0 * PI, 0.0..2.0 * PI, point3()).prop_map(|(a, b, shift)| {
        let mut s = Similarity::plane_rotation(0, 1, a).then(&Similarity::plane_rotation(1, 2, b));
        s.shift = shift;
        s
    })
}

fn l_line() -> AffineFlat {
    AffineFlat::line(pt(&[0.5, 0.0, 0.0]), axis(2), 3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shade_membership_matches_multiplicity(apex in point3(), t in 0.0..3.0f64, s in -2.0..2.0f64) {
        let l = l_line();
        prop_assume!(l.distance(&apex) > 1e-3);
        let shade = ShadeRegion::new(apex, l.clone());
        // points on rays from the apex through L, and generic points
        let through = apex + (pt(&[0.5, 0.0, s]) - apex) * t;
        for y in [through, apex + pt(&[s, t, -s])] {
            prop_assume!((y - apex).norm() > 1e-6);
            let n = ray_multiplicity(&y, &[BoundaryPiece::affine(l.clone())], &apex).unwrap();
            prop_assert_eq!(shade.contains(&y), n.at_least_one(), "y = {:?}", y);
        }
    }

    #[test]
    fn projection_is_idempotent_and_contracting(p in point3(), q in point3(), o in point3()) {
        let flat = AffineFlat::from_spanning(o, &[pt(&[1.0, 1.0, 0.0]), pt(&[0.0, 1.0, -1.0])], 3).unwrap();
        let pp = flat.project(&p);
        prop_assert!((flat.project(&pp) - pp).norm() <= 1e-12);
        prop_assert!((pp - flat.project(&q)).norm() <= (p - q).norm() + 1e-12);
    }

    #[test]
    fn shade_membership_survives_dilation(apex in point3(), y in point3(), lambda in 0.25..4.0f64) {
        let l = l_line();
        prop_assume!(l.distance(&apex) > 1e-3);
        let dil = Similarity::dilation(&apex, lambda);
        let shade = ShadeRegion::new(apex, l.clone());
        let scaled = ShadeRegion::new(apex, l.mapped(&dil).unwrap());
        let sy = dil.apply(&y);
        // skip points within rounding distance of the shade boundary
        let foot_margin = shade.flat.distance(&y).min(scaled.flat.distance(&sy));
        prop_assume!(foot_margin > 1e-6);
        prop_assert_eq!(shade.contains(&y), scaled.contains(&sy));
    }

    #[test]
    fn local_hausdorff_is_symmetric_and_rigid(cloud in prop::collection::vec(point3(), 1..20), motion in rigid()) {
        let plane = AnalyticSet::plane(&AffineFlat::new(Point::zeros(), vec![axis(0), axis(1)], 3).unwrap()).unwrap();
        let e = PointCloud { points: cloud.clone() };
        let f = PointCloud { points: cloud.iter().map(|p| pt(&[p.x, p.y, 0.5 * p.z])).collect() };
        let ball = Ball::new(pt(&[0.1, 0.2, 0.0]), 1.5).unwrap();
        let ef = local_hausdorff_distance(&e, &f, &ball, 0.1).value;
        let fe = local_hausdorff_distance(&f, &e, &ball, 0.1).value;
        prop_assert!((ef - fe).abs() <= 1e-15);

        let moved = |c: &PointCloud| PointCloud { points: c.points.iter().map(|p| motion.apply(p)).collect() };
        let mball = Ball::new(motion.apply(&ball.center), ball.radius).unwrap();
        let moved_ef = local_hausdorff_distance(&moved(&e), &moved(&f), &mball, 0.1).value;
        prop_assert!((ef - moved_ef).abs() <= 1e-9, "{} vs {}", ef, moved_ef);

        // against an analytic set the sampling spacing bounds the drift
        let spacing = 0.05;
        let mplane = plane.mapped(&motion).unwrap();
        let a = local_hausdorff_distance(&e, &plane, &ball, spacing).value;
        let b = local_hausdorff_distance(&moved(&e), &mplane, &mball, spacing).value;
        prop_assert!((a - b).abs() <= 2.0 * spacing / ball.radius + 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn cone_densities_do_not_depend_on_radius(r in 0.1..5.0f64, phase in 0.0..PI) {
        let c = pt(&[0.2, -0.1, 0.4]);
        let spine = AffineFlat::line(c, axis(2), 3).unwrap();
        let cones = [
            AnalyticSet::plane(&AffineFlat::new(c, vec![axis(0), axis(2)], 3).unwrap()).unwrap(),
            AnalyticSet::half_plane(&spine, &axis(1)).unwrap(),
            AnalyticSet::y_cone(&c, &spine, [axis(0), axis(1)], phase).unwrap(),
            AnalyticSet::v_cone(&spine, &axis(0), &pt(&[phase.cos() - 2.0, phase.sin(), 0.0])).unwrap(),
        ];
        for x in &cones {
            let theta = analytic_ball_measure(x, &Ball::new(c, r).unwrap(), 1e-10).unwrap().value / (r * r);
            prop_assert!((theta - x.density().unwrap()).abs() <= 1e-9);
        }
    }
}

#[test]
fn flat_v_cone_is_a_plane() {
    let l = l_line();
    let v = AnalyticSet::v_cone(&l, &axis(0), &(-axis(0))).unwrap();
    assert!((v.density().unwrap() - omega(2)).abs() < 1e-15);
    let plane = AnalyticSet::plane(&AffineFlat::new(*l.origin(), vec![axis(2), axis(0)], 3).unwrap()).unwrap();
    for p in [pt(&[-3.0, 0.0, 1.0]), pt(&[2.0, 0.0, -4.0]), pt(&[0.5, 0.1, 0.0])] {
        assert_eq!(v.contains(&p), plane.contains(&p));
        assert!((v.distance(&p) - plane.distance(&p)).abs() < 1e-12);
    }
}

#[test]
fn only_planes_reach_the_minimal_density() {
    let o = Point::zeros();
    let spine = AffineFlat::line(o, axis(2), 3).unwrap();
    let plane = AnalyticSet::plane(&AffineFlat::new(o, vec![axis(0), axis(1)], 3).unwrap()).unwrap();
    let y = AnalyticSet::y_cone(&o, &spine, [axis(0), axis(1)], 0.0).unwrap();
    assert!((plane.density().unwrap() - omega(2)).abs() < 1e-15);
    assert!((y.density().unwrap() - 1.5 * PI).abs() < 1e-12);
    let tetra = mesh_ball_measure(&tetra_cone(1.5, 6, 12).unwrap(), &Ball::new(o, 1.0).unwrap(), 1e-3).value;
    assert!(tetra > omega(2) + 1.0);
    // cones bounded by L sit below or at ω₂
    let half = AnalyticSet::half_plane(&spine, &axis(0)).unwrap();
    let v = AnalyticSet::v_cone(&spine, &axis(0), &pt(&[-0.5, 0.8, 0.0])).unwrap();
    assert!((half.density().unwrap() - omega(2) / 2.0).abs() < 1e-15);
    assert!((v.density().unwrap() - omega(2)).abs() < 1e-15);
}

#[test]
fn truncation_and_shade_reassemble_the_arm() {
    let o = Point::zeros();
    let spine = AffineFlat::line(o, axis(2), 3).unwrap();
    let y = AnalyticSet::y_cone(&o, &spine, [axis(0), axis(1)], 0.0).unwrap();
    let l = l_line();
    let w = AnalyticSet::truncate_by_shade(&y, &o, &l).unwrap();
    let s = AnalyticSet::shade(&o, &l).unwrap();
    for (c, r) in [(o, 0.3), (o, 1.0), (pt(&[0.4, 0.1, 0.2]), 0.7), (pt(&[1.5, -0.2, 0.0]), 2.0)] {
        let ball = Ball::new(c, r).unwrap();
        let whole = analytic_ball_measure(&y, &ball, 1e-10).unwrap().value;
        let parts = analytic_ball_measure(&w, &ball, 1e-10).unwrap().value + analytic_ball_measure(&s, &ball, 1e-10).unwrap().value;
        assert!((whole - parts).abs() <= 3e-10, "ball {c:?} {r}: {whole} vs {parts}");
    }
}

#[test]
fn tetrahedral_cone_beats_the_y_threshold() {
    let mesh = tetra_cone(1.5, 12, 24).unwrap();
    let theta = mesh_ball_measure(&mesh, &Ball::new(Point::zeros(), 1.0).unwrap(), 1e-4).value;
    let gamma = (-1.0_f64 / 3.0).acos();
    assert!((theta - 3.0 * gamma).abs() <= 1e-4, "{theta}");
    assert!(theta > 1.5 * PI);
}
