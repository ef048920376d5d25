//! Writes synthetic fisheye sequences to disk.

use std::path::Path;

use fisheye_mc::synth::{render_sequence, MotionSpec, Scene, SceneDescription};
use fisheye_mc::FisheyeCamera;

use crate::error::CliError;
use crate::input::write_gray;

/// Ground plane at height 100 with forward camera motion that shifts the
/// ground by `shift_px` perspective pixels per frame in the bottom viewport.
pub fn default_description(seed: u64, shift_px: f64, cam: &FisheyeCamera) -> SceneDescription {
    let height = 100.0;
    SceneDescription {
        scene: Scene::ground(seed, height),
        motion: MotionSpec::camera([0.0, 0.0, shift_px * height / cam.focal_length()]),
    }
}

/// Renders `count` frames plus the scene description that produced them.
pub fn write_sequence(
    desc: &SceneDescription,
    cam: &FisheyeCamera,
    count: usize,
    out: &Path,
) -> Result<(), CliError> {
    if count < 2 {
        return Err(CliError::Config(
            "a sequence needs at least two frames".into(),
        ));
    }
    let frames = render_sequence(&desc.scene, &desc.motion, cam, count)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::output(out, e))?;
    for (k, frame) in frames.iter().enumerate() {
        write_gray(frame, &out.join(format!("frame_{k:05}.png")))?;
    }
    let path = out.join("scene.toml");
    std::fs::write(&path, desc.to_toml_string()).map_err(|e| CliError::output(path, e))
}

pub fn read_description(path: &Path) -> Result<SceneDescription, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    Ok(SceneDescription::from_toml_str(&text)?)
}
