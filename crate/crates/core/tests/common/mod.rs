//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's projection code: rotations are built
//! as general 3x3 matrices from an axis and an angle, the perspective step
//! intersects rays with explicit planes in 3D, and the lens model is evaluated
//! with plain trigonometry.

#![allow(dead_code)]

use fisheye_mc::geometry::FisheyeCamera;
use fisheye_mc::Viewport;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rodrigues rotation about a unit axis.
pub fn axis_angle(axis: Vec3, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    let [x, y, z] = axis;
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

pub fn mul(m: &Mat3, v: Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(m: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

pub fn normalize(v: Vec3) -> Vec3 {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Camera-to-viewport rotation: +90° about x looks down, +90° about y looks left/right.
pub fn viewport_matrix(v: Viewport) -> Mat3 {
    match v {
        Viewport::FrontBack => axis_angle([0.0, 0.0, 1.0], 0.0),
        Viewport::BottomTop => axis_angle([1.0, 0.0, 0.0], std::f64::consts::FRAC_PI_2),
        Viewport::LeftRight => axis_angle([0.0, 1.0, 0.0], std::f64::consts::FRAC_PI_2),
    }
}

/// Equisolid unprojection with explicit angles.
pub fn lens_to_ray(cam: &FisheyeCamera<f64>, p: (f64, f64)) -> Vec3 {
    let c = cam.principal_point();
    let (dx, dy) = (p.0 - c.x, p.1 - c.y);
    let theta = 2.0 * (dx.hypot(dy) / (2.0 * cam.focal_length())).asin();
    let phi = dy.atan2(dx);
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

/// Equisolid projection with explicit angles.
pub fn ray_to_lens(cam: &FisheyeCamera<f64>, d: Vec3) -> (f64, f64) {
    let d = normalize(d);
    let theta = d[0].hypot(d[1]).atan2(d[2]);
    let phi = d[1].atan2(d[0]);
    let r = 2.0 * cam.focal_length() * (theta / 2.0).sin();
    let c = cam.principal_point();
    (c.x + r * phi.cos(), c.y + r * phi.sin())
}

/// Reference viewport pipeline: rotate with a matrix, intersect the ray with
/// the plane `z = +f` (front half) or `z = -f` (back half), translate the hit
/// point within that plane by `(dx, dy, 0)`, and map back.
///
/// On the back plane a 3D translation by `(dx, dy)` is the same as moving the
/// point-reflected signed-tangent coordinates by `(-dx, -dy)`.
pub fn oracle_map(
    cam: &FisheyeCamera<f64>,
    p: (f64, f64),
    v: Viewport,
    m: (f64, f64),
) -> (f64, f64) {
    let f = cam.focal_length();
    let rot = viewport_matrix(v);
    let d = mul(&rot, lens_to_ray(cam, p));
    let plane_z = if d[2] > 0.0 { f } else { -f };
    let t = plane_z / d[2];
    let hit = [t * d[0] + m.0, t * d[1] + m.1, plane_z];
    ray_to_lens(cam, mul(&transpose(&rot), hit))
}

/// Projection-based reprojection without any viewport: radius through
/// `f tan θ`, shift, `atan`, back through the lens. Valid for θ < π/2.
pub fn oracle_ptmc(cam: &FisheyeCamera<f64>, p: (f64, f64), m: (f64, f64)) -> (f64, f64) {
    let f = cam.focal_length();
    let c = cam.principal_point();
    let (dx, dy) = (p.0 - c.x, p.1 - c.y);
    let theta = 2.0 * (dx.hypot(dy) / (2.0 * f)).asin();
    let phi = dy.atan2(dx);
    let rp = f * theta.tan();
    let (xp, yp) = (rp * phi.cos() + m.0, rp * phi.sin() + m.1);
    let theta_m = (xp.hypot(yp) / f).atan();
    let phi_m = yp.atan2(xp);
    let rf = 2.0 * f * (theta_m / 2.0).sin();
    (c.x + rf * phi_m.cos(), c.y + rf * phi_m.sin())
}

/// The same virtual-plane point handled by an explicitly rotated opposite
/// camera (turned by π about its y axis), where it lies on the real plane.
pub fn oracle_opposite(
    cam: &FisheyeCamera<f64>,
    p: (f64, f64),
    v: Viewport,
    m: (f64, f64),
) -> (f64, f64) {
    let f = cam.focal_length();
    let rot = mat_mul(
        &axis_angle([0.0, 1.0, 0.0], std::f64::consts::PI),
        &viewport_matrix(v),
    );
    let d = mul(&rot, lens_to_ray(cam, p));
    assert!(d[2] > 0.0, "point must lie in front of the opposite camera");
    // y-axis turn mirrors the plane's x axis
    let (xp, yp) = (f * d[0] / d[2] - m.0, f * d[1] / d[2] + m.1);
    ray_to_lens(cam, mul(&transpose(&rot), [xp, yp, f]))
}

/// Uniform random pixel inside the image circle.
pub fn random_in_circle(cam: &FisheyeCamera<f64>, rng: &mut impl Rng) -> (f64, f64) {
    let r_max = cam.image_circle_radius();
    let c = cam.principal_point();
    loop {
        let x = rng.random_range(-r_max..r_max);
        let y = rng.random_range(-r_max..r_max);
        if x.hypot(y) <= r_max {
            return (c.x + x, c.y + y);
        }
    }
}

/// Rotated incident angle of a pixel under a viewport, computed via the oracle matrices.
pub fn rotated_theta(cam: &FisheyeCamera<f64>, p: (f64, f64), v: Viewport) -> f64 {
    let d = mul(&viewport_matrix(v), lens_to_ray(cam, p));
    d[0].hypot(d[1]).atan2(d[2])
}

pub fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}
