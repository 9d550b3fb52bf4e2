//! Per-element geometry: signed volumes, centering, rotation fitting and
//! distortion measures for linear tetrahedra.

use nalgebra::{Matrix3, Matrix3x4, Vector3};

/// Position or displacement in meters.
pub type Vec3 = Vector3<f64>;

/// Relative volume below which an element counts as degenerate.
pub const VOLUME_EPSILON: f64 = 1e-12;

/// The four vertices of a tetrahedron stored as the columns of a 3x4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementShape(pub Matrix3x4<f64>);

impl ElementShape {
    pub fn from_vertices(v: [Vec3; 4]) -> Self {
        ElementShape(Matrix3x4::from_columns(&v))
    }

    pub fn zeros() -> Self {
        ElementShape(Matrix3x4::zeros())
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> Vec3 {
        self.0.column(i).into_owned()
    }

    pub fn vertices(&self) -> [Vec3; 4] {
        [self.vertex(0), self.vertex(1), self.vertex(2), self.vertex(3)]
    }

    pub fn centroid(&self) -> Vec3 {
        (self.vertex(0) + self.vertex(1) + self.vertex(2) + self.vertex(3)) * 0.25
    }

    /// Applies a linear map to every column.
    pub fn transformed(&self, m: &Matrix3<f64>) -> Self {
        ElementShape(m * self.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        ElementShape(self.0 * s)
    }

    pub fn translated(&self, t: &Vec3) -> Self {
        let mut out = self.0;
        for mut c in out.column_iter_mut() {
            c += t;
        }
        ElementShape(out)
    }

    /// Squared Frobenius norm of the difference to `other`.
    pub fn distance_squared(&self, other: &ElementShape) -> f64 {
        (self.0 - other.0).norm_squared()
    }
}

/// Signed volume `det([v2-v1, v3-v1, v4-v1]) / 6`.
pub fn tet_volume(shape: &ElementShape) -> f64 {
    let [a, b, c, d] = shape.vertices();
    tet_volume_points(&a, &b, &c, &d)
}

#[inline]
pub fn tet_volume_points(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).dot(&(c - a).cross(&(d - a))) / 6.0
}

/// Subtracts the centroid from every column (right-multiplication by
/// `I - 1/4 * ones`).
pub fn center_shape(shape: &ElementShape) -> ElementShape {
    let c = shape.centroid();
    shape.translated(&(-c))
}

/// Result of a rotation fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationFit {
    pub rotation: Matrix3<f64>,
    /// Set when the target has rank < 2 or the deformed shape has no
    /// volume; the rotation is then the identity.
    pub degenerate: bool,
}

/// Proper rotation `R` minimizing `|deformed - R * target|_F` for two
/// centered shapes.
pub fn fit_rotation(deformed: &ElementShape, target: &ElementShape) -> RotationFit {
    let cov = target.0 * target.0.transpose();
    let scale = cov.trace();
    if !(scale > 0.0) {
        return RotationFit { rotation: Matrix3::identity(), degenerate: true };
    }
    let mut sv = cov.symmetric_eigenvalues();
    sv.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    if sv[1] <= 1e-12 * sv[0] {
        return RotationFit { rotation: Matrix3::identity(), degenerate: true };
    }
    let size = max_edge_length(deformed).powi(3);
    if tet_volume(deformed).abs() <= VOLUME_EPSILON * size {
        return RotationFit { rotation: Matrix3::identity(), degenerate: true };
    }
    let cross = deformed.0 * target.0.transpose();
    RotationFit { rotation: polar_rotation(&cross), degenerate: false }
}

/// Rotation factor of the polar decomposition of `m`, with the reflection
/// removed by negating the weakest singular direction.
pub fn polar_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Matrix3::identity();
    };
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let weakest = svd.singular_values.imin();
        let mut u = u;
        u.column_mut(weakest).neg_mut();
        r = u * v_t;
    }
    r
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix3<f64>) -> [f64; 3] {
    let s = m.singular_values();
    let mut out = [s[0], s[1], s[2]];
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Least-squares affine map taking centered `rest` onto centered `deformed`.
pub fn affine_map(rest: &ElementShape, deformed: &ElementShape) -> Option<Matrix3<f64>> {
    let rest = center_shape(rest);
    let deformed = center_shape(deformed);
    let gram = rest.0 * rest.0.transpose();
    let inv = gram.try_inverse()?;
    Some(deformed.0 * rest.0.transpose() * inv)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionReport {
    pub tet_id: usize,
    /// `Vol(deformed) / Vol(rest)`.
    pub volume_ratio: f64,
    /// `max(sigma_max, 1 / sigma_min)` over the affine map's singular values.
    pub sigma_norm: f64,
    pub singular_values: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("degenerate element (rest volume {volume:e})")]
    DegenerateElement { volume: f64 },
}

/// Distortion of `deformed` relative to `rest`.
pub fn measure_distortion(
    tet_id: usize,
    rest: &ElementShape,
    deformed: &ElementShape,
) -> Result<DistortionReport, GeometryError> {
    let rest_volume = tet_volume(rest);
    let scale = max_edge_length(rest).powi(3);
    if rest_volume <= VOLUME_EPSILON * scale || rest_volume <= 0.0 {
        return Err(GeometryError::DegenerateElement { volume: rest_volume });
    }
    let f = affine_map(rest, deformed)
        .ok_or(GeometryError::DegenerateElement { volume: rest_volume })?;
    let sv = singular_values(&f);
    let sigma_norm = if sv[2] > 0.0 { sv[0].max(1.0 / sv[2]) } else { f64::INFINITY };
    Ok(DistortionReport {
        tet_id,
        volume_ratio: tet_volume(deformed) / rest_volume,
        sigma_norm,
        singular_values: sv,
    })
}

pub fn max_edge_length(shape: &ElementShape) -> f64 {
    let v = shape.vertices();
    let mut m: f64 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            m = m.max((v[i] - v[j]).norm());
        }
    }
    m
}

/// Rotation matrix about a unit axis (Rodrigues).
pub fn rotation_about(axis: &Vec3, angle: f64) -> Matrix3<f64> {
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle).into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_tet() -> ElementShape {
        ElementShape::from_vertices([
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ])
    }

    fn regular_tet() -> ElementShape {
        ElementShape::from_vertices([
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
            Vec3::new(-1.0, 1.0, -1.0),
        ])
    }

    fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
        let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        rotation_about(&(axis + Vec3::new(1e-3, 0.0, 0.0)), rng.random_range(-3.1..3.1))
    }

    fn random_shape(rng: &mut impl Rng) -> ElementShape {
        ElementShape(Matrix3x4::from_fn(|_, _| rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn volume_of_unit_simplex() {
        assert_relative_eq!(tet_volume(&unit_tet()), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn coplanar_tet_has_zero_volume() {
        let s = ElementShape::from_vertices([
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.3, 0.4, 0.0),
        ]);
        assert_eq!(tet_volume(&s), 0.0);
    }

    #[test]
    fn volume_scales_cubically() {
        let s = unit_tet();
        assert_relative_eq!(tet_volume(&s.scaled(2.0)), 8.0 * tet_volume(&s), epsilon = 1e-14);
    }

    #[test]
    fn centering() {
        let p = Vec3::new(0.3, -2.0, 5.0);
        let c = center_shape(&ElementShape::from_vertices([p; 4]));
        assert_eq!(c.0.norm(), 0.0);

        let c = center_shape(&unit_tet());
        let expected = unit_tet().translated(&Vec3::new(-0.25, -0.25, -0.25));
        assert_relative_eq!(c.0, expected.0, epsilon = 1e-15);
        assert_relative_eq!(center_shape(&c).0, c.0, epsilon = 1e-15);
    }

    #[test]
    fn rotation_identity_and_recovery() {
        let t = center_shape(&regular_tet());
        let fit = fit_rotation(&t, &t);
        assert!(!fit.degenerate);
        assert_relative_eq!(fit.rotation, Matrix3::identity(), epsilon = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let q = random_rotation(&mut rng);
            let target = center_shape(&random_shape(&mut rng));
            let fit = fit_rotation(&target.transformed(&q), &target);
            assert!((fit.rotation - q).norm() < 1e-10);
        }
    }

    #[test]
    fn fitted_rotation_beats_random_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = center_shape(&random_shape(&mut rng));
            let b = center_shape(&random_shape(&mut rng));
            let fit = fit_rotation(&a, &b);
            let r = fit.rotation;
            assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-12);
            assert_relative_eq!(r.transpose() * r, Matrix3::identity(), epsilon = 1e-12);
            let best = a.distance_squared(&b.transformed(&r));
            for _ in 0..1000 {
                let q = random_rotation(&mut rng);
                assert!(best <= a.distance_squared(&b.transformed(&q)) + 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficient_target_flags() {
        let line = center_shape(&ElementShape::from_vertices([
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(3.0, 0.0, 0.0),
        ]));
        let fit = fit_rotation(&line, &line);
        assert!(fit.degenerate);
        assert_eq!(fit.rotation, Matrix3::identity());
    }

    #[test]
    fn distortion_of_identity_and_scaling() {
        let r = regular_tet();
        let d = measure_distortion(0, &r, &r).unwrap();
        assert_relative_eq!(d.volume_ratio, 1.0, epsilon = 1e-14);
        assert_relative_eq!(d.sigma_norm, 1.0, epsilon = 1e-12);

        let d = measure_distortion(0, &r, &r.scaled(2.0)).unwrap();
        assert_relative_eq!(d.volume_ratio, 8.0, epsilon = 1e-12);
        assert_relative_eq!(d.sigma_norm, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn anisotropic_stretch_matches_direct_svd() {
        let r = regular_tet();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_rotation(&mut rng);
        let f = q * Matrix3::from_diagonal(&Vec3::new(3.0, 1.0, 1.0));
        let d = measure_distortion(0, &r, &r.transformed(&f)).unwrap();
        // Oracle: singular values of the known affine map.
        let direct = f.singular_values();
        let expected = direct.max().max(1.0 / direct.min());
        assert_relative_eq!(d.sigma_norm, expected, epsilon = 1e-10);
        assert_relative_eq!(d.sigma_norm, 3.0, epsilon = 1e-10);
    }

    #[test]
    fn degenerate_rest_is_rejected() {
        let flat = ElementShape::from_vertices([
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ]);
        assert!(matches!(
            measure_distortion(0, &flat, &unit_tet()),
            Err(GeometryError::DegenerateElement { .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn centered_columns_sum_to_zero(coords in proptest::collection::vec(-100.0f64..100.0, 12)) {
            let s = ElementShape(Matrix3x4::from_column_slice(&coords));
            let c = center_shape(&s);
            let sum = c.0.column_sum();
            for k in 0..3 {
                proptest::prop_assert!(sum[k].abs() <= 1e-12);
            }
        }

        #[test]
        fn rotation_fit_is_equivariant(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = center_shape(&random_shape(&mut rng));
            let b = center_shape(&random_shape(&mut rng));
            let q = random_rotation(&mut rng);
            let r = fit_rotation(&a, &b).rotation;
            let rq = fit_rotation(&a.transformed(&q), &b).rotation;
            proptest::prop_assert!((rq - q * r).norm() < 1e-9);
        }
    }
}
