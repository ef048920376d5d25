use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fisheye_mc::motion::{Method, SearchConfig, Strategy};
use fisheye_mc_cli::decision_map::{render_decision_map, viewport_shares, DEFAULT_ALPHA};
use fisheye_mc_cli::experiment::{compensate_pair, rate_curve, run_sequence, summarize, write_csv};
use fisheye_mc_cli::input::parse_frame_range;
use fisheye_mc_cli::synth_gen::{default_description, read_description, write_sequence};
use fisheye_mc_cli::{
    load_sequence, CameraSpec, CliError, PairRecord, RunConfig, Sequence, SummaryRow,
};

#[derive(Parser, Debug)]
#[command(
    version,
    about = "Motion compensation experiments on equisolid fisheye video"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compensate consecutive frame pairs and write predictions, per-pair CSV and averages
    Compensate(RunArgs),
    /// Like `compensate` over several methods and block sizes, without writing frames
    Sweep(RunArgs),
    /// Mean PSNR and side-information rate per (method, block size)
    RateCurve(RunArgs),
    /// Overlay va_ptmc viewport decisions on the compensated frames
    DecisionMap {
        #[command(flatten)]
        run: RunArgs,
        /// Overlay opacity in [0, 1]
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Render a synthetic fisheye sequence (ground plane by default)
    SynthGen(SynthArgs),
}

#[derive(Args, Debug)]
struct CameraArgs {
    /// Lens field of view in degrees
    #[arg(long, default_value_t = 185.0)]
    fov: f64,
    /// Focal length in pixels; derived from the FOV and frame size when omitted
    #[arg(long)]
    focal_length: Option<f64>,
    /// Principal point as `x,y`; defaults to the frame centre
    #[arg(long, value_parser = parse_point)]
    principal_point: Option<(f64, f64)>,
}

impl CameraArgs {
    fn spec(&self) -> CameraSpec {
        CameraSpec {
            fov_deg: self.fov,
            focal_length: self.focal_length,
            principal_point: self.principal_point,
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Image directory or .y4m file; repeat for several sequences
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Reference frames `A..B`, each paired with its successor
    #[arg(long, value_parser = parse_frame_range)]
    frames: Option<std::ops::Range<usize>>,
    /// Methods, comma separated (tmc, ptmc, va_ptmc); defaults depend on the verb
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    /// Block sizes, comma separated; defaults depend on the verb
    #[arg(long, value_delimiter = ',')]
    block_size: Vec<usize>,
    #[arg(long, default_value_t = 96)]
    search_range: i32,
    /// diamond or exhaustive
    #[arg(long, default_value = "diamond")]
    strategy: Strategy,
    #[command(flatten)]
    camera: CameraArgs,
    /// Side-information compressor (bzip2 or identity)
    #[arg(long, default_value = "bzip2")]
    compressor: String,
    /// Output directory
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// CSV path; defaults to a file in the output directory
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Scene description (TOML); a textured ground plane when omitted
    #[arg(long)]
    input: Option<PathBuf>,
    /// Frames `A..B` of the motion, rendered inclusive of B
    #[arg(long, value_parser = parse_frame_range, default_value = "0..10")]
    frames: std::ops::Range<usize>,
    /// Square frame size in pixels
    #[arg(long, default_value_t = 512)]
    size: usize,
    #[command(flatten)]
    camera: CameraArgs,
    /// Texture seed of the default scene
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Per-frame ground shift of the default scene, in perspective pixels
    #[arg(long, default_value_t = 5.0)]
    shift: f64,
    #[arg(long, default_value = "synth")]
    output: PathBuf,
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected x,y, got '{s}'"))?;
    let x = x.trim().parse().map_err(|_| format!("bad x in '{s}'"))?;
    let y = y.trim().parse().map_err(|_| format!("bad y in '{s}'"))?;
    Ok((x, y))
}

impl RunArgs {
    fn config(
        &self,
        methods: &[Method],
        block_sizes: &[usize],
        frame_dir: Option<PathBuf>,
    ) -> RunConfig {
        RunConfig {
            methods: if self.method.is_empty() {
                methods.to_vec()
            } else {
                self.method.clone()
            },
            block_sizes: if self.block_size.is_empty() {
                block_sizes.to_vec()
            } else {
                self.block_size.clone()
            },
            search_range: self.search_range,
            strategy: self.strategy,
            camera: self.camera.spec(),
            compressor: self.compressor.clone(),
            frame_dir,
        }
    }

    fn sequences(&self) -> impl Iterator<Item = Result<Sequence, CliError>> + '_ {
        self.input
            .iter()
            .map(|p| load_sequence(p, self.frames.clone()))
    }

    fn csv_path(&self, default: &str) -> PathBuf {
        self.csv
            .clone()
            .unwrap_or_else(|| self.output.join(default))
    }
}

fn print_summary(rows: &[SummaryRow]) {
    println!(
        "{:<20} {:<8} {:>4} {:>6} {:>10} {:>8} {:>9} {:>10}",
        "sequence", "method", "B", "pairs", "psnr_db", "ssim", "bpp", "gain_db"
    );
    for r in rows {
        let gain = r
            .gain_vs_tmc_db
            .map(|g| format!("{g:+.3}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<20} {:<8} {:>4} {:>6} {:>10.3} {:>8.4} {:>9.5} {:>10}",
            r.sequence,
            r.method,
            r.block_size,
            r.pairs,
            r.mean_psnr_db,
            r.mean_ssim,
            r.mean_bpp,
            gain
        );
    }
}

fn run_all(args: &RunArgs, config: &RunConfig) -> Result<Vec<PairRecord>, CliError> {
    let mut records = Vec::new();
    for seq in args.sequences() {
        let seq = seq?;
        eprintln!("{}: {} frame pairs", seq.name, seq.frames.len() - 1);
        records.extend(run_sequence(&seq, config)?);
    }
    Ok(records)
}

fn compensate(args: &RunArgs, write_frames: bool, default_b: &[usize]) -> Result<(), CliError> {
    let frame_dir = write_frames.then(|| args.output.clone());
    let config = args.config(&Method::ALL, default_b, frame_dir);
    let records = run_all(args, &config)?;
    write_csv(&args.csv_path("results.csv"), &records)?;
    let summary = summarize(&records);
    write_csv(&args.output.join("summary.csv"), &summary)?;
    print_summary(&summary);
    Ok(())
}

fn rate(args: &RunArgs) -> Result<(), CliError> {
    let config = args.config(&Method::ALL, &[8, 16, 32, 64], None);
    let points = rate_curve(&run_all(args, &config)?);
    write_csv(&args.csv_path("rate_curve.csv"), &points)?;
    println!("{:<8} {:>4} {:>10} {:>9}", "method", "B", "psnr_db", "bpp");
    for p in &points {
        println!(
            "{:<8} {:>4} {:>10.3} {:>9.5}",
            p.method, p.block_size, p.mean_psnr_db, p.mean_bpp
        );
    }
    Ok(())
}

fn decision_maps(args: &RunArgs, alpha: f64) -> Result<(), CliError> {
    let config = args.config(&[Method::VaPtmc], &[16], None);
    if config.methods != [Method::VaPtmc] {
        return Err(CliError::Config(
            "decision maps are only defined for va_ptmc".into(),
        ));
    }
    let mut records = Vec::new();
    for seq in args.sequences() {
        let seq = seq?;
        let (w, h) = seq.dimensions().expect("loaded sequences hold frames");
        let cam = config.camera.camera(w, h)?;
        let dir = args.output.join(&seq.name);
        std::fs::create_dir_all(&dir).map_err(|e| CliError::output(&dir, e))?;
        for &b in &config.block_sizes {
            let cfg = SearchConfig::new(Method::VaPtmc, b)
                .with_search_range(config.search_range)
                .with_strategy(config.strategy);
            for (reference, current, index) in seq.pairs() {
                let out = compensate_pair(
                    &seq.name,
                    index,
                    reference,
                    current,
                    &cam,
                    &cfg,
                    &config.compressor,
                )?;
                let map = render_decision_map(&out.field, &out.prediction, alpha)?;
                let path = dir.join(format!("decision_b{b}_{:05}.png", index + 1));
                map.save(&path)
                    .map_err(|e| CliError::output(&path, std::io::Error::other(e)))?;
                let [front, bottom, left] = viewport_shares(&out.field);
                eprintln!(
                    "{}: front_back {:.1}%  bottom_top {:.1}%  left_right {:.1}%",
                    path.display(),
                    100.0 * front,
                    100.0 * bottom,
                    100.0 * left
                );
                records.push(out.record);
            }
        }
    }
    write_csv(&args.csv_path("decision_runs.csv"), &records)
}

fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let cam = args.camera.spec().camera(args.size, args.size)?;
    let mut desc = match &args.input {
        Some(path) => read_description(path)?,
        None => default_description(args.seed, args.shift, &cam),
    };
    let start = args.frames.start as f64;
    desc.scene = desc.scene.displaced(&desc.motion, start)?;
    let count = args.frames.end - args.frames.start + 1;
    write_sequence(&desc, &cam, count, &args.output)?;
    println!("wrote {count} frames to {}", args.output.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Compensate(a) => compensate(a, true, &[16]),
        Command::Sweep(a) => compensate(a, false, &[16, 32, 64]),
        Command::RateCurve(a) => rate(a),
        Command::DecisionMap { run, alpha } => decision_maps(run, *alpha),
        Command::SynthGen(a) => synth(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
