//! Compensation runs over frame pairs and the records they produce.

use std::path::{Path, PathBuf};
use std::time::Instant;

use fisheye_mc::metrics::{psnr_masked, ssim_masked, CircularMask};
use fisheye_mc::motion::{
    compensate_frame, estimate_field, Method, MotionField, SearchConfig, Strategy,
};
use fisheye_mc::sideinfo::{compressor_by_name, encode_stream, pack_side_info};
use fisheye_mc::{FisheyeCamera, Frame, PixelCoord};
use serde::Serialize;

use crate::error::CliError;
use crate::input::Sequence;

/// Lens parameters given on the command line; resolved per frame size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraSpec {
    pub fov_deg: f64,
    pub focal_length: Option<f64>,
    pub principal_point: Option<(f64, f64)>,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self {
            fov_deg: 185.0,
            focal_length: None,
            principal_point: None,
        }
    }
}

impl CameraSpec {
    pub fn camera(&self, width: usize, height: usize) -> Result<FisheyeCamera, CliError> {
        let fov = self.fov_deg.to_radians();
        if self.focal_length.is_none() && self.principal_point.is_none() {
            return Ok(FisheyeCamera::from_fov(width, height, fov)?);
        }
        let pp = match self.principal_point {
            Some((x, y)) => PixelCoord::new(x, y),
            None => FisheyeCamera::default_principal_point(width, height),
        };
        let f = match self.focal_length {
            Some(f) => f,
            None => FisheyeCamera::from_fov(width, height, fov)?.focal_length(),
        };
        Ok(FisheyeCamera::new(f, pp, fov, (width, height))?)
    }
}

/// Everything a batch run needs apart from the input sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    pub block_sizes: Vec<usize>,
    pub search_range: i32,
    pub strategy: Strategy,
    pub camera: CameraSpec,
    pub compressor: String,
    /// Where compensated frames go; `None` skips writing them.
    pub frame_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            block_sizes: vec![16],
            search_range: 96,
            strategy: Strategy::Diamond,
            camera: CameraSpec::default(),
            compressor: "bzip2".into(),
            frame_dir: None,
        }
    }
}

impl RunConfig {
    pub fn search_configs(&self) -> Result<Vec<SearchConfig>, CliError> {
        if self.methods.is_empty() || self.block_sizes.is_empty() {
            return Err(CliError::Config(
                "at least one method and one block size are required".into(),
            ));
        }
        let mut out = Vec::new();
        for &b in &self.block_sizes {
            for &m in &self.methods {
                let cfg = SearchConfig::new(m, b)
                    .with_search_range(self.search_range)
                    .with_strategy(self.strategy);
                cfg.validate()?;
                out.push(cfg);
            }
        }
        Ok(out)
    }
}

/// One CSV row: a frame pair compensated with one method and block size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    pub sequence: String,
    pub ref_frame: usize,
    pub method: String,
    pub block_size: usize,
    pub psnr_db: f64,
    pub ssim: f64,
    pub bpp: f64,
    pub runtime_ms: f64,
}

/// Result of one pair: the record plus the field and prediction it came from.
pub struct PairOutcome {
    pub record: PairRecord,
    pub field: MotionField,
    pub prediction: Frame,
}

/// Estimates `current` from `reference`, compensates, and measures quality and rate.
pub fn compensate_pair(
    sequence: &str,
    ref_frame: usize,
    reference: &Frame,
    current: &Frame,
    cam: &FisheyeCamera,
    config: &SearchConfig,
    compressor: &str,
) -> Result<PairOutcome, CliError> {
    let backend = compressor_by_name(compressor)?;
    let mask = CircularMask::from_camera(cam);
    let start = Instant::now();
    let field = estimate_field(current, reference, cam, config)?;
    let prediction = compensate_frame(reference, &field, cam)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let raw = pack_side_info(&field, config.method)?;
    let stream = encode_stream(&raw, backend.as_ref(), current.width() * current.height())?;
    let record = PairRecord {
        sequence: sequence.to_string(),
        ref_frame,
        method: config.method.name().to_string(),
        block_size: config.block_size,
        psnr_db: psnr_masked(&prediction, current, &mask)?,
        ssim: ssim_masked(&prediction, current, &mask)?,
        bpp: stream.bits_per_pixel,
        runtime_ms,
    };
    Ok(PairOutcome {
        record,
        field,
        prediction,
    })
}

pub fn frame_file(dir: &Path, sequence: &str, cfg: &SearchConfig, ref_frame: usize) -> PathBuf {
    dir.join(sequence)
        .join(format!("{}_b{}", cfg.method.name(), cfg.block_size))
        .join(format!("frame_{:05}.png", ref_frame + 1))
}

/// Runs every (block size, method) combination over every pair of `seq`.
/// Records come out ordered by pair, then block size, then method.
pub fn run_sequence(seq: &Sequence, config: &RunConfig) -> Result<Vec<PairRecord>, CliError> {
    let (w, h) = seq
        .dimensions()
        .ok_or_else(|| CliError::Config(format!("sequence {} has no frames", seq.name)))?;
    let cam = config.camera.camera(w, h)?;
    let configs = config.search_configs()?;
    let mut records = Vec::new();
    for (reference, current, index) in seq.pairs() {
        for cfg in &configs {
            let out = compensate_pair(
                &seq.name,
                index,
                reference,
                current,
                &cam,
                cfg,
                &config.compressor,
            )?;
            if let Some(dir) = &config.frame_dir {
                let path = frame_file(dir, &seq.name, cfg, index);
                if let Some(parent) = path.parent() {
                    std::fs::create_dir_all(parent).map_err(|e| CliError::output(parent, e))?;
                }
                crate::input::write_gray(&out.prediction, &path)?;
            }
            records.push(out.record);
        }
    }
    Ok(records)
}

/// Per-run averages, one per (sequence, method, block size).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub sequence: String,
    pub method: String,
    pub block_size: usize,
    pub pairs: usize,
    pub mean_psnr_db: f64,
    pub mean_ssim: f64,
    pub mean_bpp: f64,
    /// Mean PSNR minus the tmc mean for the same sequence and block size.
    pub gain_vs_tmc_db: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Groups records in first-appearance order.
pub fn summarize(records: &[PairRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, String, usize)> = Vec::new();
    for r in records {
        let key = (r.sequence.clone(), r.method.clone(), r.block_size);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut rows: Vec<SummaryRow> = keys
        .into_iter()
        .map(|(sequence, method, block_size)| {
            let group: Vec<&PairRecord> = records
                .iter()
                .filter(|r| {
                    r.sequence == sequence && r.method == method && r.block_size == block_size
                })
                .collect();
            SummaryRow {
                pairs: group.len(),
                mean_psnr_db: mean(group.iter().map(|r| r.psnr_db)),
                mean_ssim: mean(group.iter().map(|r| r.ssim)),
                mean_bpp: mean(group.iter().map(|r| r.bpp)),
                gain_vs_tmc_db: None,
                sequence,
                method,
                block_size,
            }
        })
        .collect();
    let baselines: Vec<(String, usize, f64)> = rows
        .iter()
        .filter(|r| r.method == Method::Tmc.name())
        .map(|r| (r.sequence.clone(), r.block_size, r.mean_psnr_db))
        .collect();
    for row in &mut rows {
        row.gain_vs_tmc_db = baselines
            .iter()
            .find(|(s, b, _)| *s == row.sequence && *b == row.block_size)
            .map(|(_, _, p)| row.mean_psnr_db - p);
    }
    rows
}

/// One point of a rate curve, averaged over all sequences and pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub method: String,
    pub block_size: usize,
    pub mean_psnr_db: f64,
    pub mean_bpp: f64,
}

pub fn rate_curve(records: &[PairRecord]) -> Vec<RatePoint> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in records {
        let key = (r.method.clone(), r.block_size);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.sort_by(|a, b| (a.0.as_str(), a.1).cmp(&(b.0.as_str(), b.1)));
    keys.into_iter()
        .map(|(method, block_size)| {
            let group: Vec<&PairRecord> = records
                .iter()
                .filter(|r| r.method == method && r.block_size == block_size)
                .collect();
            RatePoint {
                mean_psnr_db: mean(group.iter().map(|r| r.psnr_db)),
                mean_bpp: mean(group.iter().map(|r| r.bpp)),
                method,
                block_size,
            }
        })
        .collect()
}

/// Writes serializable rows as CSV with a header line.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::output(parent, e))?;
    }
    let to_io = |e: csv::Error| CliError::output(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    for row in rows {
        w.serialize(row).map_err(to_io)?;
    }
    w.flush().map_err(|e| CliError::output(path, e))
}
