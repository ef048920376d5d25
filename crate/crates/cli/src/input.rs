//! Frame sources: directories of still images and y4m planar video.

use std::fs::File;
use std::io::BufReader;
use std::ops::Range;
use std::path::{Path, PathBuf};

use fisheye_mc::Frame;
use image::{DynamicImage, GrayImage};

use crate::error::CliError;

const IMAGE_EXTENSIONS: &[&str] = &[
    "png", "jpg", "jpeg", "bmp", "pgm", "ppm", "pnm", "tif", "tiff",
];

/// Decoded luma frames of one sequence, starting at frame index `first`.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub name: String,
    pub first: usize,
    pub frames: Vec<Frame>,
}

impl Sequence {
    /// Consecutive overlapping pairs `(reference, current, reference index)`.
    pub fn pairs(&self) -> impl Iterator<Item = (&Frame, &Frame, usize)> {
        self.frames
            .windows(2)
            .enumerate()
            .map(move |(k, w)| (&w[0], &w[1], self.first + k))
    }

    pub fn dimensions(&self) -> Option<(usize, usize)> {
        self.frames.first().map(|f| (f.width(), f.height()))
    }
}

/// Parses `A..B` into the half-open range of reference frames; each pair also
/// reads frame `B`.
pub fn parse_frame_range(s: &str) -> Result<Range<usize>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected A..B, got '{s}'"))?;
    let a: usize = a
        .trim()
        .parse()
        .map_err(|_| format!("bad start in '{s}'"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad end in '{s}'"))?;
    if b <= a {
        return Err(format!("empty frame range '{s}'"));
    }
    Ok(a..b)
}

fn sequence_name(path: &Path) -> String {
    path.file_stem()
        .or_else(|| path.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into())
}

/// Image files of a directory in lexicographic order.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::input(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::input(dir, e))?.path();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        if path.is_file() && IMAGE_EXTENSIONS.contains(&ext.as_str()) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// BT.601 luma of an 8-bit image; grayscale inputs pass through unchanged.
pub fn luma_bt601(img: &DynamicImage) -> Frame {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(g) => {
            Frame::from_fn_u8(w, h, |x, y| g.get_pixel(x as u32, y as u32)[0] as u16)
        }
        _ => {
            let rgb = img.to_rgb8();
            Frame::from_fn_u8(w, h, |x, y| {
                let [r, g, b] = rgb.get_pixel(x as u32, y as u32).0;
                (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as u16
            })
        }
    }
    .expect("image dimensions are non-zero")
}

pub fn read_image(path: &Path) -> Result<Frame, CliError> {
    let img = image::open(path).map_err(|e| CliError::input(path, e))?;
    if img.width() == 0 || img.height() == 0 {
        return Err(CliError::input(path, "empty image"));
    }
    Ok(luma_bt601(&img))
}

/// Writes an 8-bit grayscale PNG.
pub fn write_gray(frame: &Frame, path: &Path) -> Result<(), CliError> {
    let shift = frame.bit_depth().saturating_sub(8);
    let img = GrayImage::from_fn(frame.width() as u32, frame.height() as u32, |x, y| {
        image::Luma([(frame.get(x as usize, y as usize) >> shift) as u8])
    });
    img.save(path)
        .map_err(|e| CliError::output(path, std::io::Error::other(e)))
}

fn read_y4m(path: &Path, range: Option<Range<usize>>) -> Result<Sequence, CliError> {
    let file = File::open(path).map_err(|e| CliError::input(path, e))?;
    let mut dec = y4m::decode(BufReader::new(file)).map_err(|e| CliError::input(path, e))?;
    let (w, h) = (dec.get_width(), dec.get_height());
    let depth = dec.get_bit_depth();
    let wide = dec.get_bytes_per_sample() == 2;
    let (first, last) = match &range {
        Some(r) => (r.start, Some(r.end)),
        None => (0, None),
    };
    let mut frames = Vec::new();
    let mut index = 0;
    loop {
        if last.is_some_and(|l| index > l) {
            break;
        }
        let frame = match dec.read_frame() {
            Ok(f) => f,
            Err(y4m::Error::EOF) => break,
            Err(e) => return Err(CliError::input(path, format!("frame {index}: {e}"))),
        };
        if index >= first {
            let y = frame.get_y_plane();
            let data: Vec<u16> = if wide {
                y.chunks_exact(2)
                    .map(|c| u16::from_le_bytes([c[0], c[1]]))
                    .collect()
            } else {
                y.iter().map(|&v| v as u16).collect()
            };
            let f = Frame::new(w, h, depth as u8, data).map_err(|e| CliError::input(path, e))?;
            frames.push(f);
        }
        index += 1;
    }
    finish(sequence_name(path), first, frames, last, path)
}

fn read_directory(dir: &Path, range: Option<Range<usize>>) -> Result<Sequence, CliError> {
    let files = list_images(dir)?;
    let (first, end) = match &range {
        Some(r) => (r.start, (r.end + 1).min(files.len())),
        None => (0, files.len()),
    };
    let frames = files
        .get(first..end.max(first))
        .unwrap_or_default()
        .iter()
        .map(|p| read_image(p))
        .collect::<Result<Vec<_>, _>>()?;
    finish(sequence_name(dir), first, frames, range.map(|r| r.end), dir)
}

fn finish(
    name: String,
    first: usize,
    frames: Vec<Frame>,
    last: Option<usize>,
    path: &Path,
) -> Result<Sequence, CliError> {
    if let Some(l) = last {
        if frames.len() < l + 1 - first {
            return Err(CliError::input(
                path,
                format!(
                    "frames {first}..={l} requested, only {} available",
                    frames.len()
                ),
            ));
        }
    }
    if frames.len() < 2 {
        return Err(CliError::input(path, "at least two frames are needed"));
    }
    if let Some(bad) = frames.iter().position(|f| !f.same_shape(&frames[0])) {
        return Err(CliError::input(
            path,
            format!(
                "frame {} is {}x{}, expected {}x{}",
                first + bad,
                frames[bad].width(),
                frames[bad].height(),
                frames[0].width(),
                frames[0].height()
            ),
        ));
    }
    Ok(Sequence {
        name,
        first,
        frames,
    })
}

/// Loads a sequence from an image directory or a `.y4m` file. With a range
/// `A..B` frames `A..=B` are read.
pub fn load_sequence(path: &Path, range: Option<Range<usize>>) -> Result<Sequence, CliError> {
    if path.is_dir() {
        read_directory(path, range)
    } else if path.is_file() {
        read_y4m(path, range)
    } else {
        Err(CliError::input(path, "no such file or directory"))
    }
}
