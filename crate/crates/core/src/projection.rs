//! Local step: per-element target shapes for chamber and body elements and
//! spring targets.

use nalgebra::{Matrix3, Matrix3x4};
use rayon::prelude::*;

use crate::collision::{SpringElement, SpringSet};
use crate::geometry::{affine_map, center_shape, fit_rotation, singular_values, tet_volume, ElementShape, Vec3, VOLUME_EPSILON};
use crate::material::{strain_measure, StiffnessCurve};
use crate::mesh::{Region, TetMesh};

/// Target of a chamber element: the centered rest shape scaled by the cube
/// root of the volume ratio.
pub fn project_chamber(rest: &ElementShape, ratio: f64) -> ElementShape {
    center_shape(rest).scaled(ratio.cbrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyProjection {
    /// Centered target in the rest frame.
    pub target: ElementShape,
    pub rotation: Matrix3<f64>,
    pub strain: f64,
    pub blend_weight: f64,
    /// The rest-to-deformed rotation fit was ill-posed.
    pub degenerate_fit: bool,
    /// The blended shape had no volume; the rest shape was used instead.
    pub degenerate_blend: bool,
}

/// Blends the rigidly pulled-back deformed shape with the rest shape by the
/// strain-dependent weight, then rescales the blend to the rest volume.
pub fn project_body(rest: &ElementShape, deformed: &ElementShape, curve: &StiffnessCurve) -> BodyProjection {
    let rest_c = center_shape(rest);
    let def_c = center_shape(deformed);
    let fit = fit_rotation(&def_c, &rest_c);
    let r = fit.rotation;
    let strain = affine_map(rest, deformed)
        .map(|f| strain_measure(singular_values(&f).map(|s| s.max(f64::MIN_POSITIVE))).unwrap_or(0.0))
        .unwrap_or(0.0);
    let w = curve.eval(strain);
    let pulled = ElementShape(r.transpose() * def_c.0);
    let blend = ElementShape(pulled.0 * (1.0 - w) + rest_c.0 * w);
    let rest_volume = tet_volume(&rest_c);
    let blend_volume = tet_volume(&blend);
    let scale = rest_volume.abs().max(f64::MIN_POSITIVE);
    let (target, degenerate_blend) = if blend_volume <= VOLUME_EPSILON * scale {
        (rest_c, true)
    } else {
        (blend.scaled((rest_volume / blend_volume).cbrt()), false)
    };
    BodyProjection { target, rotation: r, strain, blend_weight: w, degenerate_fit: fit.degenerate, degenerate_blend }
}

pub fn project_spring(spring: &SpringElement) -> Vec3 {
    spring.target()
}

/// Output of one local step.
#[derive(Debug, Clone, Default)]
pub struct LocalTargets {
    /// Centered target shapes `V^t`.
    pub targets: Vec<ElementShape>,
    pub rotations: Vec<Matrix3<f64>>,
    /// `R V^t`, the shape the global step matches `N V^d` against.
    pub projected: Vec<Matrix3x4<f64>>,
    /// Energy weights (rest volumes).
    pub weights: Vec<f64>,
    /// (vertex, target, stiffness) for active springs, ascending by vertex.
    pub springs: Vec<(usize, Vec3, f64)>,
    pub degenerate_fits: usize,
    pub degenerate_blends: usize,
}

/// Per-tet element weights: absolute rest volumes.
pub fn element_weights(mesh: &TetMesh) -> Vec<f64> {
    mesh.rest_shapes.iter().map(|s| tet_volume(s).abs()).collect()
}

/// Computes targets for every element. `chamber_ratios[t]` is the volume
/// ratio chamber tet `t` should reach relative to its rest shape; it is
/// ignored for body tets.
pub fn local_step(mesh: &TetMesh, weights: &[f64], chamber_ratios: &[f64], curve: &StiffnessCurve, springs: &SpringSet) -> LocalTargets {
    let per: Vec<(ElementShape, Matrix3<f64>, bool, bool)> = (0..mesh.num_tets())
        .into_par_iter()
        .map(|t| {
            let rest = &mesh.rest_shapes[t];
            let deformed = mesh.deformed_shape(t);
            match mesh.regions[t] {
                Region::Body => {
                    let p = project_body(rest, &deformed, curve);
                    (p.target, p.rotation, p.degenerate_fit, p.degenerate_blend)
                }
                Region::Chamber => {
                    let target = project_chamber(rest, chamber_ratios[t]);
                    let fit = fit_rotation(&center_shape(&deformed), &target);
                    (target, fit.rotation, fit.degenerate, false)
                }
            }
        })
        .collect();
    let mut out = LocalTargets {
        targets: Vec::with_capacity(per.len()),
        rotations: Vec::with_capacity(per.len()),
        projected: Vec::with_capacity(per.len()),
        weights: weights.to_vec(),
        springs: springs.iter().filter(|(_, s)| s.active).map(|(&v, s)| (v, project_spring(s), s.stiffness)).collect(),
        degenerate_fits: 0,
        degenerate_blends: 0,
    };
    for (target, r, df, db) in per {
        out.projected.push(r * target.0);
        out.targets.push(target);
        out.rotations.push(r);
        out.degenerate_fits += df as usize;
        out.degenerate_blends += db as usize;
    }
    out
}

/// Elastic part of the energy: `sum w_e |N V^d - R V^t|^2`.
pub fn elastic_energy(mesh: &TetMesh, positions: &[Vec3], targets: &LocalTargets) -> f64 {
    mesh.tets
        .iter()
        .enumerate()
        .map(|(t, tet)| {
            let d = center_shape(&ElementShape::from_vertices(tet.map(|v| positions[v])));
            targets.weights[t] * (d.0 - targets.projected[t]).norm_squared()
        })
        .sum()
}

pub fn spring_energy(positions: &[Vec3], targets: &LocalTargets) -> f64 {
    targets.springs.iter().map(|&(v, t, k)| k * (positions[v] - t).norm_squared()).sum::<f64>() + 0.0
}

/// The quadratic minimized by the global step for fixed targets.
pub fn total_energy(mesh: &TetMesh, positions: &[Vec3], targets: &LocalTargets) -> f64 {
    elastic_energy(mesh, positions, targets) + spring_energy(positions, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation_about;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn tet() -> ElementShape {
        ElementShape::from_vertices([Vec3::new(0.1, 0.0, 0.0), Vec3::new(1.0, 0.2, 0.0), Vec3::new(0.0, 1.1, 0.1), Vec3::new(0.2, 0.1, 0.9)])
    }

    #[test]
    fn chamber_scaling() {
        let r = center_shape(&tet());
        assert_relative_eq!(project_chamber(&r, 1.0).0, r.0, epsilon = 1e-15);
        let t8 = project_chamber(&r, 8.0);
        assert_relative_eq!(t8.0, r.0 * 2.0, epsilon = 1e-14);
        let t5 = project_chamber(&r, 5.0);
        assert_relative_eq!(tet_volume(&t5) / tet_volume(&r), 5.0, max_relative = 1e-12);
    }

    #[test]
    fn body_fixed_point_and_rotation() {
        let c = StiffnessCurve::default();
        let r = tet();
        let p = project_body(&r, &r, &c);
        assert_relative_eq!(p.target.0, center_shape(&r).0, epsilon = 1e-12);
        assert_relative_eq!(p.rotation, Matrix3::identity(), epsilon = 1e-12);

        let q = rotation_about(&Vec3::new(1.0, 2.0, -0.5), 0.9);
        let p = project_body(&r, &r.transformed(&q).translated(&Vec3::new(3.0, -1.0, 2.0)), &c);
        assert_relative_eq!(p.target.0, center_shape(&r).0, epsilon = 1e-12);
        assert_relative_eq!(p.rotation, q, epsilon = 1e-12);
        let def = center_shape(&r.transformed(&q));
        assert!((def.0 - p.rotation * p.target.0).norm() < 1e-12);
    }

    #[test]
    fn inflated_body_keeps_rest_volume() {
        // Oracle: evaluate the blend and the volume rescale by hand.
        let c = StiffnessCurve::constant(0.5).unwrap();
        let r = tet();
        let p = project_body(&r, &r.scaled(2.0), &c);
        let rc = center_shape(&r);
        let blend = rc.0 * 0.5 + rc.0 * 2.0 * 0.5;
        let expected = blend * (tet_volume(&rc) / tet_volume(&ElementShape(blend))).cbrt();
        assert_relative_eq!(p.target.0, expected, epsilon = 1e-12);
        assert_relative_eq!(tet_volume(&p.target), tet_volume(&r), max_relative = 1e-10);
        assert_relative_eq!(p.strain, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_blend_falls_back_to_rest() {
        let c = StiffnessCurve::constant(1e-15).unwrap();
        let r = tet();
        let flat = ElementShape(Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0)) * r.0);
        let p = project_body(&r, &flat, &c);
        assert!(p.degenerate_blend);
        assert_relative_eq!(p.target.0, center_shape(&r).0, epsilon = 1e-15);
    }

    #[test]
    fn spring_target_is_correspondence() {
        use crate::collision::{CollisionKind, CollisionRecord, CorrespondenceMethod};
        let eps = 0.01;
        let s = SpringElement {
            record: CollisionRecord {
                vertex: 0,
                kind: CollisionKind::ObstacleContact(0),
                correspondence: Vec3::new(0.0, 0.0, eps),
                normal: Vec3::z(),
                method: CorrespondenceMethod::ClosestPoint,
            },
            stiffness: 4.0,
            active: true,
        };
        assert_eq!(project_spring(&s), Vec3::new(0.0, 0.0, eps));
        assert!(s.energy(&Vec3::new(0.0, 0.0, -0.3)) > 0.0);
        assert!(s.energy(&project_spring(&s)) < 4.0 * eps * eps);
    }

    fn shape_strategy() -> impl Strategy<Value = ElementShape> {
        prop::array::uniform12(-1.0f64..1.0).prop_filter_map("degenerate", |a| {
            let base = tet();
            let mut m = base.0;
            for (i, v) in a.iter().enumerate() {
                m[(i % 3, i / 3)] += 0.3 * v;
            }
            let s = ElementShape(m);
            (tet_volume(&s) > 0.05).then_some(s)
        })
    }

    proptest! {
        #[test]
        fn chamber_group_property(a in 0.2f64..5.0, b in 0.2f64..5.0) {
            let r = center_shape(&tet());
            let twice = project_chamber(&project_chamber(&r, a), b);
            let once = project_chamber(&r, a * b);
            prop_assert!((twice.0 - once.0).norm() <= 1e-12);
        }

        #[test]
        fn body_target_keeps_rest_volume(def in shape_strategy(), w in 0.05f64..0.95) {
            let c = StiffnessCurve::constant(w).unwrap();
            let r = tet();
            let p = project_body(&r, &def, &c);
            prop_assume!(!p.degenerate_blend);
            prop_assert!((tet_volume(&p.target) / tet_volume(&r) - 1.0).abs() <= 1e-10);
            let col_sum = p.target.0.column_sum();
            prop_assert!(col_sum.norm() <= 1e-12);
        }

        #[test]
        fn body_projection_is_rotation_equivariant(def in shape_strategy(), ax in prop::array::uniform3(-1.0f64..1.0), ang in 0.0f64..3.0) {
            prop_assume!(Vec3::from(ax).norm() > 0.1);
            let q = rotation_about(&Vec3::from(ax), ang);
            let c = StiffnessCurve::constant(0.4).unwrap();
            let r = tet();
            let p0 = project_body(&r, &def, &c);
            let p1 = project_body(&r, &def.transformed(&q), &c);
            prop_assert!((p1.rotation - q * p0.rotation).norm() <= 1e-9);
            let e0 = (center_shape(&def).0 - p0.rotation * p0.target.0).norm();
            let e1 = (center_shape(&def.transformed(&q)).0 - p1.rotation * p1.target.0).norm();
            prop_assert!((e0 - e1).abs() <= 1e-9);
        }

        #[test]
        fn blend_interpolates_between_limits(def in shape_strategy(), w in 0.05f64..0.95) {
            // Before the volume rescale, the blend is the convex combination of
            // the soft limit (pulled-back current shape) and the stiff limit
            // (rest shape); after rescale each vertex lies on the scaled segment.
            let r = tet();
            let soft = project_body(&r, &def, &StiffnessCurve::constant(1e-9).unwrap());
            let stiff = project_body(&r, &def, &StiffnessCurve::constant(1.0 - 1e-9).unwrap());
            prop_assume!(!soft.degenerate_blend);
            prop_assert!((stiff.target.0 - center_shape(&r).0).norm() <= 1e-6);
            let mid = project_body(&r, &def, &StiffnessCurve::constant(w).unwrap());
            prop_assume!(!mid.degenerate_blend);
            let pulled = soft.rotation.transpose() * center_shape(&def).0;
            let blend = pulled * (1.0 - w) + center_shape(&r).0 * w;
            let s = (tet_volume(&r) / tet_volume(&ElementShape(blend))).cbrt();
            prop_assert!((mid.target.0 - blend * s).norm() <= 1e-9);
        }
    }
}
