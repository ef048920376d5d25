//! Procedural axis-aligned scenes rendered through the equisolid lens, used as
//! ground truth for motion planes.
//!
//! Scene coordinates coincide with camera coordinates: `x` right, `y` down
//! (toward the ground), `z` along the optical axis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{fisheye_to_sphere, FisheyeCamera, PixelCoord, UnitDirection, Viewport};
use crate::sampling::{Frame, FrameError};

/// Default checkerboard / noise cell size in scene units.
pub const DEFAULT_TEXTURE_SCALE: f64 = 16.0;

const SUPERSAMPLE_OFFSETS: [(f64, f64); 4] =
    [(-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25)];
const LUMA_LOW: f64 = 16.0;
const LUMA_HIGH: f64 = 235.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("plane {index}: distance must be positive and finite, got {distance}")]
    Distance { index: usize, distance: f64 },
    #[error("plane {index}: texture scale must be positive, got {scale}")]
    TextureScale { index: usize, scale: f64 },
    #[error("displacement must be finite")]
    Displacement,
    #[error("motion lists {given} plane displacements for {planes} planes")]
    DisplacementCount { given: usize, planes: usize },
    #[error(
        "plane {index} passes the camera after displacement; the occlusion order would change"
    )]
    Occlusion { index: usize },
    #[error("invalid scene description: {0}")]
    Parse(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneOrientation {
    #[serde(alias = "bottom")]
    Ground,
    #[serde(alias = "top")]
    Ceiling,
    LeftWall,
    RightWall,
    FrontWall,
    BackWall,
}

impl PlaneOrientation {
    /// Normal axis (0 = x, 1 = y, 2 = z) and the side of the camera the plane sits on.
    fn axis_sign(self) -> (usize, f64) {
        match self {
            PlaneOrientation::Ground => (1, 1.0),
            PlaneOrientation::Ceiling => (1, -1.0),
            PlaneOrientation::LeftWall => (0, -1.0),
            PlaneOrientation::RightWall => (0, 1.0),
            PlaneOrientation::FrontWall => (2, 1.0),
            PlaneOrientation::BackWall => (2, -1.0),
        }
    }

    /// In-plane texture axes.
    fn tangent_axes(self) -> (usize, usize) {
        match self {
            PlaneOrientation::Ground | PlaneOrientation::Ceiling => (0, 2),
            PlaneOrientation::LeftWall | PlaneOrientation::RightWall => (2, 1),
            PlaneOrientation::FrontWall | PlaneOrientation::BackWall => (0, 1),
        }
    }

    /// Viewport whose perspective plane is parallel to this plane.
    pub fn matching_viewport(self) -> Viewport {
        match self {
            PlaneOrientation::Ground | PlaneOrientation::Ceiling => Viewport::BottomTop,
            PlaneOrientation::LeftWall | PlaneOrientation::RightWall => Viewport::LeftRight,
            PlaneOrientation::FrontWall | PlaneOrientation::BackWall => Viewport::FrontBack,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextureKind {
    Checkerboard,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Texture {
    pub kind: TextureKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    DEFAULT_TEXTURE_SCALE
}

impl Texture {
    pub fn noise(seed: u64) -> Self {
        Self {
            kind: TextureKind::Noise,
            seed,
            scale: DEFAULT_TEXTURE_SCALE,
        }
    }

    pub fn checkerboard() -> Self {
        Self {
            kind: TextureKind::Checkerboard,
            seed: 0,
            scale: DEFAULT_TEXTURE_SCALE,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    fn cell(&self, i: i64, j: i64, octave: u64) -> f64 {
        match self.kind {
            TextureKind::Checkerboard => ((i + j).rem_euclid(2)) as f64,
            TextureKind::Noise => {
                let h = splitmix64(
                    self.seed
                        ^ splitmix64(
                            octave.wrapping_mul(0x9E37_79B9)
                                ^ splitmix64((i as u64) ^ splitmix64(j as u64)),
                        ),
                );
                (h >> 11) as f64 / (1u64 << 53) as f64
            }
        }
    }

    /// Bilinear interpolation between cell centers at the given cell size.
    fn bilinear(&self, u: f64, v: f64, scale: f64, octave: u64) -> f64 {
        let tu = u / scale - 0.5;
        let tv = v / scale - 0.5;
        let (i, j) = (tu.floor(), tv.floor());
        let (fu, fv) = (tu - i, tv - j);
        let (i, j) = (i as i64, j as i64);
        let top = self.cell(i, j, octave) * (1.0 - fu) + self.cell(i + 1, j, octave) * fu;
        let bottom =
            self.cell(i, j + 1, octave) * (1.0 - fu) + self.cell(i + 1, j + 1, octave) * fu;
        top * (1.0 - fv) + bottom * fv
    }

    /// Texture value in `[0, 1]` at in-plane coordinates.
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        match self.kind {
            TextureKind::Checkerboard => self.bilinear(u, v, self.scale, 0),
            TextureKind::Noise => {
                0.65 * self.bilinear(u, v, self.scale, 0)
                    + 0.35 * self.bilinear(u, v, self.scale / 2.0, 1)
            }
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenePlane {
    pub orientation: PlaneOrientation,
    pub distance: f64,
    pub texture: Texture,
    /// Accumulated translation of the plane and its texture.
    #[serde(default, skip_serializing)]
    pub offset: [f64; 3],
}

impl ScenePlane {
    pub fn new(orientation: PlaneOrientation, distance: f64, texture: Texture) -> Self {
        Self {
            orientation,
            distance,
            texture,
            offset: [0.0; 3],
        }
    }

    /// Signed coordinate of the plane along its normal axis.
    fn position(&self) -> f64 {
        let (axis, sign) = self.orientation.axis_sign();
        sign * self.distance + self.offset[axis]
    }

    /// Ray parameter of the intersection, if in front of the camera.
    fn intersect(&self, d: &[f64; 3]) -> Option<f64> {
        let (axis, _) = self.orientation.axis_sign();
        if d[axis] == 0.0 {
            return None;
        }
        let t = self.position() / d[axis];
        (t > 0.0 && t.is_finite()).then_some(t)
    }

    fn shade(&self, d: &[f64; 3], t: f64) -> f64 {
        let (a, b) = self.orientation.tangent_axes();
        let u = t * d[a] - self.offset[a];
        let v = t * d[b] - self.offset[b];
        self.texture.eval(u, v)
    }
}

/// What a pixel's center ray sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    OutsideCircle,
    Background,
    Plane(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<Label>,
}

impl LabelMap {
    pub fn get(&self, x: usize, y: usize) -> Label {
        self.labels[y * self.width + x]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    #[serde(rename = "plane", default)]
    pub planes: Vec<ScenePlane>,
}

/// Translational motion between consecutive frames.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionSpec {
    /// Global camera translation per frame; moves every plane by its negative.
    #[serde(default)]
    pub camera_translation: [f64; 3],
    /// Optional per-plane translation per frame, indexed like the scene planes.
    #[serde(default)]
    pub plane_displacements: Vec<[f64; 3]>,
}

impl MotionSpec {
    pub fn camera(t: [f64; 3]) -> Self {
        Self {
            camera_translation: t,
            plane_displacements: Vec::new(),
        }
    }

    pub fn planes(displacements: Vec<[f64; 3]>) -> Self {
        Self {
            camera_translation: [0.0; 3],
            plane_displacements: displacements,
        }
    }
}

/// Scene plus motion as read from a text description.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SceneDescription {
    #[serde(flatten)]
    pub scene: Scene,
    #[serde(default)]
    pub motion: MotionSpec,
}

impl SceneDescription {
    pub fn from_toml_str(s: &str) -> Result<Self, SynthError> {
        let desc: Self = toml::from_str(s).map_err(|e| SynthError::Parse(e.to_string()))?;
        desc.scene.validate()?;
        desc.scene.displaced(&desc.motion, 0.0)?;
        Ok(desc)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scene description serializes")
    }
}

impl Scene {
    pub fn new(planes: Vec<ScenePlane>) -> Self {
        Self { planes }
    }

    /// Noise-textured ground plane below the camera.
    pub fn ground(seed: u64, height: f64) -> Self {
        Self::new(vec![ScenePlane::new(
            PlaneOrientation::Ground,
            height,
            Texture::noise(seed),
        )])
    }

    /// Noise-textured wall facing the camera.
    pub fn front_wall(seed: u64, distance: f64) -> Self {
        Self::new(vec![ScenePlane::new(
            PlaneOrientation::FrontWall,
            distance,
            Texture::noise(seed),
        )])
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        for (index, p) in self.planes.iter().enumerate() {
            if !(p.distance > 0.0 && p.distance.is_finite()) {
                return Err(SynthError::Distance {
                    index,
                    distance: p.distance,
                });
            }
            if !(p.texture.scale > 0.0 && p.texture.scale.is_finite()) {
                return Err(SynthError::TextureScale {
                    index,
                    scale: p.texture.scale,
                });
            }
        }
        Ok(())
    }

    /// Scene after `steps` frames of `spec`.
    pub fn displaced(&self, spec: &MotionSpec, steps: f64) -> Result<Scene, SynthError> {
        if !spec.plane_displacements.is_empty()
            && spec.plane_displacements.len() != self.planes.len()
        {
            return Err(SynthError::DisplacementCount {
                given: spec.plane_displacements.len(),
                planes: self.planes.len(),
            });
        }
        let all = spec
            .camera_translation
            .iter()
            .chain(spec.plane_displacements.iter().flatten());
        if all.into_iter().any(|v| !v.is_finite()) || !steps.is_finite() {
            return Err(SynthError::Displacement);
        }
        let mut out = self.clone();
        for (index, plane) in out.planes.iter_mut().enumerate() {
            let own = spec
                .plane_displacements
                .get(index)
                .copied()
                .unwrap_or([0.0; 3]);
            for ((o, d), t) in plane
                .offset
                .iter_mut()
                .zip(own)
                .zip(spec.camera_translation)
            {
                *o += steps * (d - t);
            }
            let (_, sign) = plane.orientation.axis_sign();
            if sign * plane.position() <= 0.0 || plane.position().is_nan() {
                return Err(SynthError::Occlusion { index });
            }
        }
        Ok(out)
    }

    /// Nearest plane hit by a ray.
    fn trace(&self, d: &[f64; 3]) -> Option<(usize, f64)> {
        self.planes
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.intersect(d).map(|t| (i, t)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    fn radiance(&self, d: UnitDirection<f64>) -> Option<(usize, f64)> {
        let d = [d.x, d.y, d.z];
        self.trace(&d)
            .map(|(i, t)| (i, self.planes[i].shade(&d, t)))
    }
}

fn to_luma(v: f64) -> f64 {
    LUMA_LOW + (LUMA_HIGH - LUMA_LOW) * v
}

/// Renders an 8-bit frame: 2x2 supersampling inside the image circle, zero outside.
pub fn render_fisheye_frame(scene: &Scene, cam: &FisheyeCamera<f64>) -> Result<Frame, SynthError> {
    scene.validate()?;
    let (w, h) = cam.image_size();
    let rows: Vec<Vec<u16>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let center = PixelCoord::new(x as f64, y as f64);
                    if !cam.in_circle(center) {
                        return 0;
                    }
                    let sum: f64 = SUPERSAMPLE_OFFSETS
                        .iter()
                        .map(|(ox, oy)| {
                            fisheye_to_sphere(PixelCoord::new(center.x + ox, center.y + oy), cam)
                                .ok()
                                .and_then(|d| scene.radiance(d))
                                .map_or(0.0, |(_, v)| to_luma(v))
                        })
                        .sum();
                    (sum / SUPERSAMPLE_OFFSETS.len() as f64).round() as u16
                })
                .collect()
        })
        .collect();
    Ok(Frame::new(w, h, 8, rows.concat())?)
}

pub fn label_map(scene: &Scene, cam: &FisheyeCamera<f64>) -> LabelMap {
    let (width, height) = cam.image_size();
    let labels = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .map(|(x, y)| {
            let p = PixelCoord::new(x as f64, y as f64);
            if !cam.in_circle(p) {
                return Label::OutsideCircle;
            }
            match fisheye_to_sphere(p, cam)
                .ok()
                .and_then(|d| scene.trace(&[d.x, d.y, d.z]))
            {
                Some((i, _)) => Label::Plane(i),
                None => Label::Background,
            }
        })
        .collect();
    LabelMap {
        width,
        height,
        labels,
    }
}

/// Reference frame, current frame and the planes seen by the current frame.
#[derive(Debug, Clone)]
pub struct FramePair {
    pub reference: Frame,
    pub current: Frame,
    pub labels: LabelMap,
}

pub fn generate_pair(
    scene: &Scene,
    spec: &MotionSpec,
    cam: &FisheyeCamera<f64>,
) -> Result<FramePair, SynthError> {
    let moved = scene.displaced(spec, 1.0)?;
    Ok(FramePair {
        reference: render_fisheye_frame(scene, cam)?,
        current: render_fisheye_frame(&moved, cam)?,
        labels: label_map(&moved, cam),
    })
}

/// Frames `0..count` of a sequence advancing by `spec` each frame.
pub fn render_sequence(
    scene: &Scene,
    spec: &MotionSpec,
    cam: &FisheyeCamera<f64>,
    count: usize,
) -> Result<Vec<Frame>, SynthError> {
    (0..count)
        .map(|k| render_fisheye_frame(&scene.displaced(spec, k as f64)?, cam))
        .collect()
}
