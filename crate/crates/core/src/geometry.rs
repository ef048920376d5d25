//! Coordinate transforms between the equisolid fisheye image, the unit sphere
//! and the perspective viewports.
//!
//! Conventions: image `x` points right and `y` points down. A direction on the
//! unit sphere is `(sin θ cos φ, sin θ sin φ, cos θ)` with `z` along the optical
//! axis and `φ` measured from `+x` toward `+y`. The perspective focal length of
//! every viewport equals the fisheye focal length.
//!
//! Rays with an incident angle above `π/2` land on the virtual image plane
//! (`z = -f`). The perspective projection uses the signed tangent, so such a
//! point appears point-reflected through the origin. Motion on that plane is
//! applied with the inverted vector and the unprojection flips `θ` and `φ` back,
//! which makes the round trip exact on both halves of a viewport pair.

use std::fmt;

use thiserror::Error;

use crate::scalar::{wrap_angle, Real};

/// Half-width of the band around `θ = π/2` where the tangent is considered singular.
pub const THETA_GUARD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error(
        "pixel ({x}, {y}) at radius {radius} lies outside the lens domain (radius limit {limit})"
    )]
    OutOfDomain {
        x: f64,
        y: f64,
        radius: f64,
        limit: f64,
    },
    #[error("incident angle {theta} is within the tangent guard around pi/2{}", fmt_source(.pixel))]
    Singularity {
        theta: f64,
        pixel: Option<(f64, f64)>,
    },
}

fn fmt_source(pixel: &Option<(f64, f64)>) -> String {
    match pixel {
        Some((x, y)) => format!(" (source pixel ({x}, {y}))"),
        None => String::new(),
    }
}

/// A position in fisheye image coordinates (pixel centers at integers).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PixelCoord<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> PixelCoord<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

/// Equisolid fisheye camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisheyeCamera<T> {
    focal_length: T,
    principal_point: PixelCoord<T>,
    fov: T,
    image_size: (usize, usize),
}

impl<T: Real> FisheyeCamera<T> {
    pub fn new(
        focal_length: T,
        principal_point: PixelCoord<T>,
        fov: T,
        image_size: (usize, usize),
    ) -> Result<Self, GeometryError> {
        let (w, h) = image_size;
        if w == 0 || h == 0 {
            return Err(GeometryError::InvalidCamera(
                "image size must be non-zero".into(),
            ));
        }
        if !focal_length.is_finite() || focal_length <= T::zero() {
            return Err(GeometryError::InvalidCamera(format!(
                "focal length must be positive, got {focal_length}"
            )));
        }
        let two_pi = T::PI() + T::PI();
        if !(fov > T::zero() && fov <= two_pi) {
            return Err(GeometryError::InvalidCamera(format!(
                "field of view must lie in (0, 2pi], got {fov}"
            )));
        }
        let (px, py) = (principal_point.x, principal_point.y);
        if !(px >= T::zero()
            && py >= T::zero()
            && px <= T::lit((w - 1) as f64)
            && py <= T::lit((h - 1) as f64))
        {
            return Err(GeometryError::InvalidCamera(format!(
                "principal point ({px}, {py}) outside the {w}x{h} image"
            )));
        }
        let cam = Self {
            focal_length,
            principal_point,
            fov,
            image_size,
        };
        let limit = T::lit(w.min(h) as f64 / 2.0 + 0.5);
        if cam.image_circle_radius() > limit {
            return Err(GeometryError::InvalidCamera(format!(
                "image circle radius {} exceeds half the frame ({limit})",
                cam.image_circle_radius()
            )));
        }
        Ok(cam)
    }

    /// Camera whose image circle touches the shorter frame edge, centered on the frame.
    pub fn from_fov(width: usize, height: usize, fov: T) -> Result<Self, GeometryError> {
        let r_max = T::lit(width.min(height) as f64 / 2.0);
        let f = r_max / (T::lit(2.0) * (fov / T::lit(4.0)).sin());
        Self::new(
            f,
            Self::default_principal_point(width, height),
            fov,
            (width, height),
        )
    }

    /// `((w - 1) / 2, (h - 1) / 2)`.
    pub fn default_principal_point(width: usize, height: usize) -> PixelCoord<T> {
        PixelCoord::new(
            T::lit((width as f64 - 1.0) / 2.0),
            T::lit((height as f64 - 1.0) / 2.0),
        )
    }

    pub fn focal_length(&self) -> T {
        self.focal_length
    }

    pub fn principal_point(&self) -> PixelCoord<T> {
        self.principal_point
    }

    pub fn fov(&self) -> T {
        self.fov
    }

    pub fn image_size(&self) -> (usize, usize) {
        self.image_size
    }

    /// `r_max = 2 f sin(fov / 4)`.
    pub fn image_circle_radius(&self) -> T {
        T::lit(2.0) * self.focal_length * (self.fov / T::lit(4.0)).sin()
    }

    pub fn radius_of(&self, p: PixelCoord<T>) -> T {
        (p.x - self.principal_point.x).hypot(p.y - self.principal_point.y)
    }

    pub fn in_circle(&self, p: PixelCoord<T>) -> bool {
        self.radius_of(p) <= self.image_circle_radius()
    }

    /// Equisolid image radius for an incident angle: `2 f sin(θ / 2)`.
    pub fn fisheye_radius(&self, theta: T) -> T {
        T::lit(2.0) * self.focal_length * (theta / T::lit(2.0)).sin()
    }

    /// Inverse equisolid projection: `θ = 2 asin(r / 2f)`.
    pub fn incident_angle(&self, radius: T) -> T {
        T::lit(2.0) * (radius / (T::lit(2.0) * self.focal_length)).asin()
    }
}

/// Point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitDirection<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> UnitDirection<T> {
    /// Normalizes an arbitrary non-zero vector.
    pub fn normalized(x: T, y: T, z: T) -> Self {
        let n = (x * x + y * y + z * z).sqrt();
        Self {
            x: x / n,
            y: y / n,
            z: z / n,
        }
    }

    pub fn from_angles(theta: T, phi: T) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            x: st * cp,
            y: st * sp,
            z: ct,
        }
    }

    /// Incident angle in `[0, π]`.
    pub fn theta(&self) -> T {
        self.x.hypot(self.y).atan2(self.z)
    }

    /// Azimuth in `(-π, π]`.
    pub fn phi(&self) -> T {
        wrap_angle(self.y.atan2(self.x))
    }

    pub fn norm(&self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

impl<T: Real> std::ops::Neg for UnitDirection<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// Orientation of the virtual perspective camera. Each kind covers an opposite pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Viewport {
    #[default]
    FrontBack,
    BottomTop,
    LeftRight,
}

impl Viewport {
    /// Fixed evaluation order, also the tie-break order.
    pub const ALL: [Viewport; 3] = [
        Viewport::FrontBack,
        Viewport::BottomTop,
        Viewport::LeftRight,
    ];

    /// Two-bit code used in side information.
    pub fn code(self) -> u8 {
        match self {
            Viewport::FrontBack => 0,
            Viewport::BottomTop => 1,
            Viewport::LeftRight => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Viewport::FrontBack),
            1 => Some(Viewport::BottomTop),
            2 => Some(Viewport::LeftRight),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Viewport::FrontBack => "front_back",
            Viewport::BottomTop => "bottom_top",
            Viewport::LeftRight => "left_right",
        }
    }
}

impl fmt::Display for Viewport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which of the two perspective image planes a point lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImagePlane {
    /// `z = +f`, incident angle below `π/2`.
    Real,
    /// `z = -f`, incident angle above `π/2`.
    Virtual,
}

/// Coordinates on a perspective image plane, tagged with the plane they belong to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePoint<T> {
    pub x: T,
    pub y: T,
    pub plane: ImagePlane,
}

/// Integer displacement. Lives in the perspective domain for the projection
/// based methods and in the fisheye domain for plain block matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct MotionVector {
    pub dx: i32,
    pub dy: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { dx: 0, dy: 0 };

    pub const fn new(dx: i32, dy: i32) -> Self {
        Self { dx, dy }
    }

    pub fn is_zero(self) -> bool {
        self.dx == 0 && self.dy == 0
    }

    /// Component-wise clamp to `[-range, range]`.
    pub fn clamped(self, range: i32) -> Self {
        Self {
            dx: self.dx.clamp(-range, range),
            dy: self.dy.clamp(-range, range),
        }
    }
}

impl fmt::Display for MotionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.dx, self.dy)
    }
}

/// Inverse equisolid projection onto the unit sphere.
///
/// With `u = r / 2f`, `θ = 2 asin(u)` gives `sin θ = 2u sqrt(1 - u²)` and
/// `cos θ = 1 - 2u²`, so the direction is formed without trigonometry.
pub fn fisheye_to_sphere<T: Real>(
    p: PixelCoord<T>,
    cam: &FisheyeCamera<T>,
) -> Result<UnitDirection<T>, GeometryError> {
    let dx = p.x - cam.principal_point.x;
    let dy = p.y - cam.principal_point.y;
    let radius = dx.hypot(dy);
    let limit = T::lit(2.0) * cam.focal_length;
    // NaN radii fall through to the error as well
    if radius.is_nan() || radius > limit {
        return Err(GeometryError::OutOfDomain {
            x: p.x.as_f64(),
            y: p.y.as_f64(),
            radius: radius.as_f64(),
            limit: limit.as_f64(),
        });
    }
    let u = radius / limit;
    let s = (T::one() - u * u).sqrt() / cam.focal_length;
    Ok(UnitDirection {
        x: dx * s,
        y: dy * s,
        z: T::one() - T::lit(2.0) * u * u,
    })
}

/// Equisolid projection, `r = 2f sin(θ / 2)` along azimuth `φ`.
pub fn sphere_to_fisheye<T: Real>(d: UnitDirection<T>, cam: &FisheyeCamera<T>) -> PixelCoord<T> {
    let c = cam.principal_point;
    if d.z >= T::zero() {
        // sin(θ/2) = ρ / sqrt(2 (1 + cos θ)), stable on the front hemisphere
        let s = cam.focal_length * (T::lit(2.0) / (T::one() + d.z)).sqrt();
        return PixelCoord::new(c.x + s * d.x, c.y + s * d.y);
    }
    let rho = d.x.hypot(d.y);
    let r = cam.fisheye_radius(rho.atan2(d.z));
    if rho == T::zero() {
        return PixelCoord::new(c.x + r, c.y);
    }
    PixelCoord::new(c.x + r * d.x / rho, c.y + r * d.y / rho)
}

pub fn rotate_to_viewport<T: Real>(d: UnitDirection<T>, v: Viewport) -> UnitDirection<T> {
    match v {
        Viewport::FrontBack => d,
        Viewport::BottomTop => UnitDirection {
            x: d.x,
            y: -d.z,
            z: d.y,
        },
        Viewport::LeftRight => UnitDirection {
            x: d.z,
            y: d.y,
            z: -d.x,
        },
    }
}

pub fn rotate_from_viewport<T: Real>(d: UnitDirection<T>, v: Viewport) -> UnitDirection<T> {
    match v {
        Viewport::FrontBack => d,
        Viewport::BottomTop => UnitDirection {
            x: d.x,
            y: d.z,
            z: -d.y,
        },
        Viewport::LeftRight => UnitDirection {
            x: -d.z,
            y: d.y,
            z: d.x,
        },
    }
}

/// Perspective projection with the signed tangent, `r = f tan θ` along `φ`,
/// i.e. `(f x / z, f y / z)`.
pub fn sphere_to_perspective<T: Real>(
    d: UnitDirection<T>,
    f: T,
) -> Result<PlanePoint<T>, GeometryError> {
    // |θ - π/2| < ε  <=>  |cos θ| < sin ε
    if d.z.abs() < T::lit(THETA_GUARD).sin() {
        return Err(GeometryError::Singularity {
            theta: d.theta().as_f64(),
            pixel: None,
        });
    }
    Ok(PlanePoint {
        x: f * d.x / d.z,
        y: f * d.y / d.z,
        plane: if d.z < T::zero() {
            ImagePlane::Virtual
        } else {
            ImagePlane::Real
        },
    })
}

/// Inverse perspective projection, `θ = atan(r / f)`, with the virtual-plane
/// corrections `θ' = π - θ` and `φ' = φ - π`.
///
/// The real-plane direction is `(x, y, f) / |(x, y, f)|`; the two corrections
/// together negate it.
pub fn perspective_to_sphere<T: Real>(p: PlanePoint<T>, f: T) -> UnitDirection<T> {
    let d = UnitDirection::normalized(p.x, p.y, f);
    match p.plane {
        ImagePlane::Real => d,
        ImagePlane::Virtual => -d,
    }
}

/// First half of the viewport pipeline: fisheye pixel to the rotated perspective plane.
pub fn project_to_viewport<T: Real>(
    p: PixelCoord<T>,
    v: Viewport,
    cam: &FisheyeCamera<T>,
) -> Result<PlanePoint<T>, GeometryError> {
    let d = rotate_to_viewport(fisheye_to_sphere(p, cam)?, v);
    sphere_to_perspective(d, cam.focal_length).map_err(|e| match e {
        GeometryError::Singularity { theta, .. } => GeometryError::Singularity {
            theta,
            pixel: Some((p.x.as_f64(), p.y.as_f64())),
        },
        other => other,
    })
}

/// Second half: apply the motion vector on the plane (inverted on the virtual
/// plane) and map back to fisheye pixel coordinates.
pub fn reproject_from_viewport<T: Real>(
    pp: PlanePoint<T>,
    v: Viewport,
    m: MotionVector,
    cam: &FisheyeCamera<T>,
) -> PixelCoord<T> {
    let (mx, my) = match pp.plane {
        ImagePlane::Real => (T::lit(m.dx as f64), T::lit(m.dy as f64)),
        ImagePlane::Virtual => (T::lit(-m.dx as f64), T::lit(-m.dy as f64)),
    };
    let moved = PlanePoint {
        x: pp.x + mx,
        y: pp.y + my,
        plane: pp.plane,
    };
    let d = rotate_from_viewport(perspective_to_sphere(moved, cam.focal_length), v);
    sphere_to_fisheye(d, cam)
}

/// Result of [`map_coordinates`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappedCoord<T> {
    pub point: PixelCoord<T>,
    /// Plane the source pixel was assigned to before the motion was applied.
    pub plane: ImagePlane,
    pub in_circle: bool,
}

/// Full per-pixel chain: fisheye, sphere, viewport rotation, perspective plane,
/// motion, back through the inverse steps to the fisheye image.
pub fn map_coordinates<T: Real>(
    p: PixelCoord<T>,
    v: Viewport,
    m: MotionVector,
    cam: &FisheyeCamera<T>,
) -> Result<MappedCoord<T>, GeometryError> {
    let pp = project_to_viewport(p, v, cam)?;
    let point = reproject_from_viewport(pp, v, m, cam);
    Ok(MappedCoord {
        point,
        plane: pp.plane,
        in_circle: cam.in_circle(point),
    })
}
