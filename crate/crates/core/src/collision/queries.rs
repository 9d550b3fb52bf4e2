//! Exact primitive tests: point in tet, ray/triangle, closest point on a
//! triangle, triangle solid angle.

use crate::geometry::{tet_volume_points, Vec3};

/// Strict interiority: all four barycentric coordinates are positive.
/// Points on a face, edge or vertex are outside.
#[inline]
pub fn point_strictly_in_tet(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> bool {
    let total = tet_volume_points(a, b, c, d);
    if total == 0.0 {
        return false;
    }
    let s = total.signum();
    let l0 = tet_volume_points(p, b, c, d) * s;
    if l0 <= 0.0 {
        return false;
    }
    let l1 = tet_volume_points(a, p, c, d) * s;
    if l1 <= 0.0 {
        return false;
    }
    let l2 = tet_volume_points(a, b, p, d) * s;
    if l2 <= 0.0 {
        return false;
    }
    tet_volume_points(a, b, c, p) * s > 0.0
}

/// Barycentric coordinates of `p` with respect to a tet.
pub fn barycentric(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> [f64; 4] {
    let total = tet_volume_points(a, b, c, d);
    [
        tet_volume_points(p, b, c, d) / total,
        tet_volume_points(a, p, c, d) / total,
        tet_volume_points(a, b, p, d) / total,
        tet_volume_points(a, b, c, p) / total,
    ]
}

/// Möller–Trumbore. Returns the ray parameter `t >= 0`; rays parallel to the
/// triangle plane (within a relative tolerance) miss.
pub fn ray_triangle(origin: &Vec3, dir: &Vec3, tri: &[Vec3; 3]) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if det.abs() <= 1e-12 * scale {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(&h) * inv;
    if !(-1e-12..=1.0 + 1e-12).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < -1e-12 || u + v > 1.0 + 1e-12 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t >= 0.0).then_some(t)
}

/// Closest point on a triangle (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle(p: &Vec3, tri: &[Vec3; 3]) -> Vec3 {
    let [a, b, c] = tri;
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Signed solid angle of a triangle seen from `p`, divided by 4π.
#[inline]
pub fn triangle_winding(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let a = a - p;
    let b = b - p;
    let c = c - p;
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(&b.cross(&c));
    let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
    2.0 * num.atan2(den) / (4.0 * std::f64::consts::PI)
}
