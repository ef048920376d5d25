//! Block matching for fisheye video: translatory (TMC), projection-based
//! (PTMC) and viewport-adaptive projection-based (VA-PTMC) estimation, plus
//! assembly of motion-compensated frames.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{
    project_to_viewport, reproject_from_viewport, FisheyeCamera, GeometryError, MotionVector,
    PixelCoord, PlanePoint, Viewport,
};
use crate::sampling::{round_sample, Frame, SubpelGrid};

/// Interpolated samples are multiples of `2^-FIXED_FRACTION_BITS`.
pub const FIXED_FRACTION_BITS: u32 = 20;
const FIXED_SCALE: f64 = (1u64 << FIXED_FRACTION_BITS) as f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error(
        "block dimension mismatch: {current} current samples vs {candidate} candidate samples"
    )]
    DimensionMismatch { current: usize, candidate: usize },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("method {method} does not support viewport {viewport}")]
    UnsupportedViewport { method: Method, viewport: Viewport },
    #[error("frames differ in shape: {0}")]
    FrameShape(String),
    #[error("motion field does not match the frame: {0}")]
    FieldMismatch(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Tmc,
    Ptmc,
    VaPtmc,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Tmc, Method::Ptmc, Method::VaPtmc];

    pub fn name(self) -> &'static str {
        match self {
            Method::Tmc => "tmc",
            Method::Ptmc => "ptmc",
            Method::VaPtmc => "va_ptmc",
        }
    }

    /// Viewports searched by this method, in tie-break order.
    pub fn viewports(self) -> &'static [Viewport] {
        match self {
            Method::Tmc | Method::Ptmc => &Viewport::ALL[..1],
            Method::VaPtmc => &Viewport::ALL,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "tmc" => Ok(Method::Tmc),
            "ptmc" => Ok(Method::Ptmc),
            "va_ptmc" | "vaptmc" => Ok(Method::VaPtmc),
            other => Err(format!(
                "unknown method '{other}' (expected tmc, ptmc or va_ptmc)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Strategy {
    #[default]
    Diamond,
    Exhaustive,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Diamond => "diamond",
            Strategy::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "diamond" => Ok(Strategy::Diamond),
            "exhaustive" | "full" => Ok(Strategy::Exhaustive),
            other => Err(format!(
                "unknown strategy '{other}' (expected diamond or exhaustive)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub block_size: usize,
    pub search_range: i32,
    pub strategy: Strategy,
    pub method: Method,
}

impl SearchConfig {
    pub fn new(method: Method, block_size: usize) -> Self {
        Self {
            block_size,
            search_range: 96,
            strategy: Strategy::Diamond,
            method,
        }
    }

    pub fn with_search_range(mut self, range: i32) -> Self {
        self.search_range = range;
        self
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        if self.block_size == 0 {
            return Err(MotionError::InvalidConfig(
                "block size must be positive".into(),
            ));
        }
        if self.search_range <= 0 {
            return Err(MotionError::InvalidConfig(format!(
                "search range must be positive, got {}",
                self.search_range
            )));
        }
        Ok(())
    }
}

/// Rectangular region of a frame. Edge blocks may be smaller than the block size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockSpec {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl BlockSpec {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y..self.y + self.height)
            .flat_map(move |y| (self.x..self.x + self.width).map(move |x| (x, y)))
    }

    pub fn extract(&self, frame: &Frame) -> Vec<f64> {
        self.pixels().map(|(x, y)| frame.get(x, y) as f64).collect()
    }
}

/// Raster-order block partition covering the whole frame.
pub fn block_grid(width: usize, height: usize, block_size: usize) -> Vec<BlockSpec> {
    let mut blocks = Vec::new();
    for y in (0..height).step_by(block_size) {
        for x in (0..width).step_by(block_size) {
            blocks.push(BlockSpec {
                x,
                y,
                width: block_size.min(width - x),
                height: block_size.min(height - y),
            });
        }
    }
    blocks
}

/// Sum of squared differences in fixed point, scaled by `2^(2 * FIXED_FRACTION_BITS)`.
///
/// Ordering and equality are exact, so stored and recomputed costs always agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cost(u128);

impl Cost {
    pub const ZERO: Cost = Cost(0);
    /// Sentinel for candidates that cannot be mapped.
    pub const INFINITE: Cost = Cost(u128::MAX);

    pub fn from_raw(raw: u128) -> Self {
        Cost(raw)
    }

    pub fn raw(self) -> u128 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self == Cost::INFINITE
    }

    /// SSD in sample units.
    pub fn as_f64(self) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            self.0 as f64 / (FIXED_SCALE * FIXED_SCALE)
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

#[inline]
fn to_fixed(v: f64) -> i64 {
    let scaled = v * FIXED_SCALE;
    debug_assert_eq!(
        scaled.fract(),
        0.0,
        "sample {v} is not on the 2^-20 lattice"
    );
    scaled as i64
}

pub fn ssd(current: &[f64], candidate: &[f64]) -> Result<Cost, MotionError> {
    if current.len() != candidate.len() {
        return Err(MotionError::DimensionMismatch {
            current: current.len(),
            candidate: candidate.len(),
        });
    }
    let sum = current
        .iter()
        .zip(candidate)
        .map(|(&a, &b)| {
            let d = (to_fixed(a) - to_fixed(b)).unsigned_abs() as u128;
            d * d
        })
        .sum();
    Ok(Cost(sum))
}

/// Per-pixel state of a block projected into one viewport.
#[derive(Debug, Clone, Copy)]
enum Projected {
    Plane(PlanePoint<f64>),
    /// Inside the tangent guard: only the zero vector is defined (identity).
    Singular,
    /// Beyond the lens domain (`r > 2f`): outside the picture, passed through unmoved.
    Outside,
}

/// Materialized prediction for one (viewport, vector) candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub samples: Vec<f64>,
    /// True when a pixel hit the tangent guard under a non-zero vector.
    pub unmappable: bool,
}

/// Caches the perspective-plane coordinates of a block's pixels so that each
/// motion candidate only pays for the return half of the pipeline.
pub struct BlockMapper<'a> {
    grid: &'a SubpelGrid<'a>,
    cam: &'a FisheyeCamera<f64>,
    block: BlockSpec,
    viewport: Viewport,
    method: Method,
    projected: Vec<Projected>,
}

impl<'a> BlockMapper<'a> {
    pub fn new(
        grid: &'a SubpelGrid<'a>,
        cam: &'a FisheyeCamera<f64>,
        block: BlockSpec,
        viewport: Viewport,
        method: Method,
    ) -> Result<Self, MotionError> {
        if !method.viewports().contains(&viewport) {
            return Err(MotionError::UnsupportedViewport { method, viewport });
        }
        let projected = match method {
            Method::Tmc => Vec::new(),
            Method::Ptmc | Method::VaPtmc => block
                .pixels()
                .map(|(x, y)| {
                    match project_to_viewport(PixelCoord::new(x as f64, y as f64), viewport, cam) {
                        Ok(pp) => Ok(Projected::Plane(pp)),
                        Err(GeometryError::Singularity { .. }) => Ok(Projected::Singular),
                        Err(GeometryError::OutOfDomain { .. }) => Ok(Projected::Outside),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<_, _>>()?,
        };
        Ok(Self {
            grid,
            cam,
            block,
            viewport,
            method,
            projected,
        })
    }

    pub fn block(&self) -> BlockSpec {
        self.block
    }

    pub fn viewport(&self) -> Viewport {
        self.viewport
    }

    pub fn materialize(&self, m: MotionVector) -> Candidate {
        let mut samples = Vec::with_capacity(self.block.len());
        let mut unmappable = false;
        match self.method {
            Method::Tmc => {
                let frame = self.grid.source();
                for (x, y) in self.block.pixels() {
                    let v = frame.get_clamped(x as i64 + m.dx as i64, y as i64 + m.dy as i64);
                    samples.push(v as f64);
                }
            }
            Method::Ptmc | Method::VaPtmc => {
                for ((x, y), proj) in self.block.pixels().zip(&self.projected) {
                    let p = match *proj {
                        Projected::Plane(pp) => {
                            reproject_from_viewport(pp, self.viewport, m, self.cam)
                        }
                        Projected::Singular => {
                            unmappable |= !m.is_zero();
                            PixelCoord::new(x as f64, y as f64)
                        }
                        Projected::Outside => PixelCoord::new(x as f64, y as f64),
                    };
                    samples.push(self.grid.sample_at(p));
                }
            }
        }
        Candidate {
            samples,
            unmappable,
        }
    }

    /// SSD of the candidate against the current block samples.
    pub fn cost(&self, current: &[f64], m: MotionVector) -> Result<Cost, MotionError> {
        let cand = self.materialize(m);
        if cand.unmappable {
            return Ok(Cost::INFINITE);
        }
        ssd(current, &cand.samples)
    }
}

/// Builds the prediction of `block` for one viewport and vector.
pub fn materialize_candidate(
    grid: &SubpelGrid<'_>,
    block: BlockSpec,
    viewport: Viewport,
    m: MotionVector,
    cam: &FisheyeCamera<f64>,
    method: Method,
) -> Result<Candidate, MotionError> {
    Ok(BlockMapper::new(grid, cam, block, viewport, method)?.materialize(m))
}

/// Outcome of one vector search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchResult {
    pub mv: MotionVector,
    pub cost: Cost,
    pub evaluations: usize,
}

/// Memoizing wrapper that also tracks the best candidate in probe order.
struct Probe<F> {
    eval: F,
    range: i32,
    seen: HashMap<MotionVector, Cost>,
    best: (MotionVector, Cost),
}

impl<F: FnMut(MotionVector) -> Cost> Probe<F> {
    fn new(mut eval: F, range: i32) -> Self {
        let c0 = eval(MotionVector::ZERO);
        let mut seen = HashMap::new();
        seen.insert(MotionVector::ZERO, c0);
        Self {
            eval,
            range,
            seen,
            best: (MotionVector::ZERO, c0),
        }
    }

    fn probe(&mut self, m: MotionVector) {
        let m = m.clamped(self.range);
        if self.seen.contains_key(&m) {
            return;
        }
        let c = (self.eval)(m);
        self.seen.insert(m, c);
        if c < self.best.1 {
            self.best = (m, c);
        }
    }

    fn finish(self) -> SearchResult {
        SearchResult {
            mv: self.best.0,
            cost: self.best.1,
            evaluations: self.seen.len(),
        }
    }
}

const LARGE_DIAMOND: [(i32, i32); 8] = [
    (0, -2),
    (1, -1),
    (2, 0),
    (1, 1),
    (0, 2),
    (-1, 1),
    (-2, 0),
    (-1, -1),
];
const SMALL_DIAMOND: [(i32, i32); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

/// Two-pattern diamond search starting at the zero vector.
pub fn diamond_search(eval: impl FnMut(MotionVector) -> Cost, search_range: i32) -> SearchResult {
    let mut probe = Probe::new(eval, search_range);
    loop {
        let center = probe.best.0;
        for (dx, dy) in LARGE_DIAMOND {
            probe.probe(MotionVector::new(center.dx + dx, center.dy + dy));
        }
        if probe.best.0 == center {
            break;
        }
    }
    let center = probe.best.0;
    for (dx, dy) in SMALL_DIAMOND {
        probe.probe(MotionVector::new(center.dx + dx, center.dy + dy));
    }
    probe.finish()
}

/// Full search over the square `[-range, range]²`, zero vector first, then raster order.
pub fn exhaustive_search(
    eval: impl FnMut(MotionVector) -> Cost,
    search_range: i32,
) -> SearchResult {
    let mut probe = Probe::new(eval, search_range);
    for dy in -search_range..=search_range {
        for dx in -search_range..=search_range {
            probe.probe(MotionVector::new(dx, dy));
        }
    }
    probe.finish()
}

pub fn run_search(eval: impl FnMut(MotionVector) -> Cost, config: &SearchConfig) -> SearchResult {
    match config.strategy {
        Strategy::Diamond => diamond_search(eval, config.search_range),
        Strategy::Exhaustive => exhaustive_search(eval, config.search_range),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockEstimate {
    pub mv: MotionVector,
    pub viewport: Viewport,
    pub cost: Cost,
    pub block: BlockSpec,
}

/// Best vector for one block restricted to a single viewport.
pub fn search_viewport(
    cur: &Frame,
    grid: &SubpelGrid<'_>,
    block: BlockSpec,
    viewport: Viewport,
    cam: &FisheyeCamera<f64>,
    config: &SearchConfig,
) -> Result<SearchResult, MotionError> {
    let current = block.extract(cur);
    let mapper = BlockMapper::new(grid, cam, block, viewport, config.method)?;
    // lengths always agree here, so cost() cannot fail
    Ok(run_search(
        |m| mapper.cost(&current, m).unwrap_or(Cost::INFINITE),
        config,
    ))
}

/// Searches every viewport allowed by the method and keeps the cheapest
/// (ties: earlier viewport, then earlier-probed vector).
pub fn estimate_block(
    cur: &Frame,
    grid: &SubpelGrid<'_>,
    block: BlockSpec,
    cam: &FisheyeCamera<f64>,
    config: &SearchConfig,
) -> Result<BlockEstimate, MotionError> {
    let mut best: Option<BlockEstimate> = None;
    for &viewport in config.method.viewports() {
        let r = search_viewport(cur, grid, block, viewport, cam, config)?;
        if best.is_none_or(|b| r.cost < b.cost) {
            best = Some(BlockEstimate {
                mv: r.mv,
                viewport,
                cost: r.cost,
                block,
            });
        }
    }
    Ok(best.expect("every method has at least one viewport"))
}

/// Per-block estimates for one frame pair, raster block order.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionField {
    pub width: usize,
    pub height: usize,
    pub config: SearchConfig,
    pub blocks: Vec<BlockEstimate>,
}

impl MotionField {
    /// Field where every block uses the zero vector and the front/back viewport.
    pub fn zero(width: usize, height: usize, config: SearchConfig) -> Self {
        let blocks = block_grid(width, height, config.block_size)
            .into_iter()
            .map(|block| BlockEstimate {
                mv: MotionVector::ZERO,
                viewport: Viewport::FrontBack,
                cost: Cost::ZERO,
                block,
            })
            .collect();
        Self {
            width,
            height,
            config,
            blocks,
        }
    }

    pub fn block_cols(&self) -> usize {
        self.width.div_ceil(self.config.block_size)
    }

    pub fn block_rows(&self) -> usize {
        self.height.div_ceil(self.config.block_size)
    }

    pub fn total_cost(&self) -> f64 {
        self.blocks.iter().map(|b| b.cost.as_f64()).sum()
    }
}

fn check_pair(cur: &Frame, reference: &Frame, cam: &FisheyeCamera<f64>) -> Result<(), MotionError> {
    if !cur.same_shape(reference) {
        return Err(MotionError::FrameShape(format!(
            "current {}x{}@{} vs reference {}x{}@{}",
            cur.width(),
            cur.height(),
            cur.bit_depth(),
            reference.width(),
            reference.height(),
            reference.bit_depth()
        )));
    }
    if cam.image_size() != (cur.width(), cur.height()) {
        return Err(MotionError::FrameShape(format!(
            "camera expects {:?}, frames are {}x{}",
            cam.image_size(),
            cur.width(),
            cur.height()
        )));
    }
    Ok(())
}

/// Estimates every block of `cur` against `reference`. Blocks are processed in
/// parallel; the result is independent of scheduling.
pub fn estimate_field(
    cur: &Frame,
    reference: &Frame,
    cam: &FisheyeCamera<f64>,
    config: &SearchConfig,
) -> Result<MotionField, MotionError> {
    config.validate()?;
    check_pair(cur, reference, cam)?;
    let grid = SubpelGrid::new(reference);
    let blocks = block_grid(cur.width(), cur.height(), config.block_size)
        .into_par_iter()
        .map(|block| estimate_block(cur, &grid, block, cam, config))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MotionField {
        width: cur.width(),
        height: cur.height(),
        config: *config,
        blocks,
    })
}

/// Rebuilds the prediction from stored vectors and viewports, rounding to the
/// frame's bit depth.
pub fn compensate_frame(
    reference: &Frame,
    field: &MotionField,
    cam: &FisheyeCamera<f64>,
) -> Result<Frame, MotionError> {
    if (field.width, field.height) != (reference.width(), reference.height()) {
        return Err(MotionError::FieldMismatch(format!(
            "field {}x{} vs frame {}x{}",
            field.width,
            field.height,
            reference.width(),
            reference.height()
        )));
    }
    let covered: usize = field.blocks.iter().map(|b| b.block.len()).sum();
    if covered != reference.width() * reference.height() {
        return Err(MotionError::FieldMismatch(format!(
            "blocks cover {covered} of {} pixels",
            reference.width() * reference.height()
        )));
    }
    let grid = SubpelGrid::new(reference);
    let method = field.config.method;
    let predicted = field
        .blocks
        .par_iter()
        .map(|est| {
            let cand = materialize_candidate(&grid, est.block, est.viewport, est.mv, cam, method)?;
            Ok((est.block, cand.samples))
        })
        .collect::<Result<Vec<_>, MotionError>>()?;
    let max = reference.max_value();
    let mut out = reference.clone();
    for (block, samples) in predicted {
        for ((x, y), v) in block.pixels().zip(samples) {
            out.set(x, y, round_sample(v, max));
        }
    }
    Ok(out)
}
