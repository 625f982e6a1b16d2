//! `satloss` command-line front end.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use satloss::descent::{
    make_synthetic_instance, optimize_with_observer, DescentConfig, SyntheticKind, SyntheticSpec, TopoMode,
};
use satloss::loss::{evaluate, loss_report_json};
use satloss::matching::{matching_json, overlay_svg, CreatorReference};
use satloss::persistence::{barcode_svg, diagram_of_image, write_diagram_csv};
use satloss::raster::{binarize, load_gray, load_mask, save_npy, save_npy_raw};
use satloss::{bench, metrics, Execution, FilteredComplex, LossConfig, MatchMode, JSON_SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "satloss", version, about = "Spatial-aware topological loss toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Vanilla,
    Spatial,
}

impl From<ModeArg> for MatchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Vanilla => MatchMode::Vanilla,
            ModeArg::Spatial => MatchMode::Spatial,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
    Table,
}

#[derive(Args, Clone, Debug)]
struct Common {
    #[arg(long, value_enum, default_value = "spatial")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    /// Pad with a ring of ones before computing diagrams (default).
    #[arg(long, overrides_with = "no_pad")]
    pad: bool,
    #[arg(long = "no-pad")]
    no_pad: bool,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Locate features by the creator's largest-valued corner instead of its
    /// determining corner.
    #[arg(long)]
    peak_locator: bool,
}

impl Common {
    fn pad(&self) -> bool {
        !self.no_pad
    }

    fn reference(&self) -> CreatorReference {
        if self.peak_locator {
            CreatorReference::Peak
        } else {
            CreatorReference::Determining
        }
    }

    fn loss_config(&self) -> LossConfig {
        LossConfig {
            mode: self.mode.into(),
            lambda: self.lambda,
            pad: self.pad(),
            reference: self.reference(),
            exec: Execution::default(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Persistence diagram of a grayscale image or mask.
    Diagram {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the barcode SVG here.
        #[arg(long)]
        barcode: Option<PathBuf>,
        /// Dump the cell grid (grid_row, grid_col, dim, value) instead.
        #[arg(long)]
        cells: bool,
    },
    /// Optimal matching between the diagrams of a likelihood and a mask.
    Match {
        likelihood: PathBuf,
        target: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the creator overlay SVG here.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Loss report (pixel, topological and total) as JSON.
    Loss {
        likelihood: PathBuf,
        target: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Gradient image written as an f4 NPY raster.
    Grad {
        likelihood: PathBuf,
        target: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Write `∇pixel + λ∇topo` instead of the topological gradient alone.
        #[arg(long)]
        total: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Segmentation metrics over paired predictions and masks.
    Eval {
        /// Prediction files, or one directory.
        #[arg(long, num_args = 1.., required = true)]
        pred: Vec<PathBuf>,
        /// Ground-truth masks, or one directory; paired in sorted order.
        #[arg(long, num_args = 1.., required = true)]
        truth: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Gradient descent on the likelihood itself.
    Optimize {
        /// Synthetic instance: two-blobs, ring or broken-line.
        #[arg(long, conflicts_with_all = ["likelihood", "target"])]
        instance: Option<String>,
        #[arg(long, requires = "target")]
        likelihood: Option<PathBuf>,
        #[arg(long, requires = "likelihood")]
        target: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long, default_value_t = 0.2)]
        noise: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        steps: usize,
        #[arg(long, default_value_t = 0.5)]
        lr: f64,
        #[arg(long, default_value_t = 10)]
        record_every: usize,
        /// Run without the topological term.
        #[arg(long)]
        no_topo: bool,
        #[command(flatten)]
        common: Common,
        /// Trace CSV (step,total,pixel,topo,b0err,b1err); stdout if absent.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Final likelihood as f4 NPY.
        #[arg(long)]
        final_image: Option<PathBuf>,
        /// Directory for overlay SVG snapshots at recorded steps.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Persistence timings across image sizes.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = bench::DEFAULT_SIZES.to_vec())]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Core(satloss::Error),
    Io(PathBuf, io::Error),
    Usage(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io(..) => "io",
            CliError::Usage(_) => "usage",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Io(path, e) => format!("i/o error on {}: {e}", path.display()),
            CliError::Usage(m) => m.clone(),
        }
    }
}

impl From<satloss::Error> for CliError {
    fn from(e: satloss::Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn require_format(format: Format, allowed: &[Format], command: &str) -> Result<()> {
    if allowed.contains(&format) {
        Ok(())
    } else {
        Err(usage(
            format!("{command} does not support --format {format:?}").to_lowercase(),
        ))
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("threshold {t} must lie in (0, 1)")))
    }
}

fn emit(output: Option<&Path>, content: &[u8]) -> Result<()> {
    match output {
        Some(path) => fs::write(path, content).map_err(|e| CliError::Io(path.to_path_buf(), e)),
        None => io::stdout()
            .write_all(content)
            .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e)),
    }
}

fn json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s.into_bytes()
}

/// Files directly inside a directory, or the given list as is.
fn expand(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    if let [dir] = paths {
        if dir.is_dir() {
            let entries = fs::read_dir(dir).map_err(|e| CliError::Io(dir.clone(), e))?;
            let mut files = Vec::new();
            for entry in entries {
                let path = entry.map_err(|e| CliError::Io(dir.clone(), e))?.path();
                if path.is_file() {
                    files.push(path);
                }
            }
            files.sort();
            return Ok(files);
        }
    }
    Ok(paths.to_vec())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Diagram {
            input,
            common,
            format,
            output,
            barcode,
            cells,
        } => {
            let img = load_gray(&input)?;
            if cells {
                require_format(format, &[Format::Csv], "diagram --cells")?;
                let mut buf = Vec::new();
                FilteredComplex::new(&img)
                    .write_csv(&mut buf)
                    .expect("writing to memory");
                return emit(output.as_deref(), &buf);
            }
            require_format(format, &[Format::Csv, Format::Json, Format::Svg], "diagram")?;
            let d = diagram_of_image(&img, common.pad());
            if let Some(path) = &barcode {
                emit(Some(path), barcode_svg(&d).as_bytes())?;
            }
            let bytes = match format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_diagram_csv(&d, &mut buf).expect("writing to memory");
                    buf
                }
                Format::Json => json_bytes(&json!({
                    "schema": JSON_SCHEMA_VERSION,
                    "padded": common.pad(),
                    "diagram": d,
                })),
                _ => barcode_svg(&d).into_bytes(),
            };
            emit(output.as_deref(), &bytes)
        }
        Command::Match {
            likelihood,
            target,
            common,
            format,
            output,
            overlay,
        } => {
            require_format(format, &[Format::Json, Format::Svg], "match")?;
            let ev = evaluate(&load_gray(&likelihood)?, &load_mask(&target)?, &common.loss_config())?;
            let svg = || overlay_svg(&ev.diagram_l, &ev.diagram_t, &ev.matching, common.reference());
            if let Some(path) = &overlay {
                emit(Some(path), svg().as_bytes())?;
            }
            match format {
                Format::Json => emit(output.as_deref(), &json_bytes(&matching_json(&ev.matching))),
                _ => emit(output.as_deref(), svg().as_bytes()),
            }
        }
        Command::Loss {
            likelihood,
            target,
            common,
            format,
            output,
        } => {
            require_format(format, &[Format::Json], "loss")?;
            let ev = evaluate(&load_gray(&likelihood)?, &load_mask(&target)?, &common.loss_config())?;
            emit(output.as_deref(), &json_bytes(&loss_report_json(&ev.report)))
        }
        Command::Grad {
            likelihood,
            target,
            common,
            total,
            output,
        } => {
            let ev = evaluate(&load_gray(&likelihood)?, &load_mask(&target)?, &common.loss_config())?;
            let g = if total { ev.total_gradient() } else { ev.topo_gradient };
            let (rows, cols) = g.shape();
            save_npy_raw(rows, cols, g.values(), &output)?;
            Ok(())
        }
        Command::Eval {
            pred,
            truth,
            common,
            format,
            output,
        } => {
            require_format(format, &[Format::Json, Format::Table], "eval")?;
            check_threshold(common.threshold)?;
            let (pred, truth) = (expand(&pred)?, expand(&truth)?);
            if pred.len() != truth.len() {
                return Err(usage(format!(
                    "{} predictions but {} ground-truth masks",
                    pred.len(),
                    truth.len()
                )));
            }
            let pairs = pred
                .iter()
                .zip(&truth)
                .map(|(p, t)| Ok((binarize(&load_gray(p)?, common.threshold)?, load_mask(t)?)))
                .collect::<Result<Vec<_>>>()?;
            let report = metrics::evaluate_batch(&pairs, Execution::default())?;
            let bytes = match format {
                Format::Json => json_bytes(&report.to_json()),
                _ => report.to_table().into_bytes(),
            };
            emit(output.as_deref(), &bytes)
        }
        Command::Optimize {
            instance,
            likelihood,
            target,
            size,
            noise,
            seed,
            steps,
            lr,
            record_every,
            no_topo,
            common,
            trace,
            final_image,
            snapshots,
        } => {
            check_threshold(common.threshold)?;
            let (l0, t) = match (instance, likelihood, target) {
                (Some(kind), _, _) => {
                    let kind: SyntheticKind = kind.parse()?;
                    make_synthetic_instance(&SyntheticSpec::new(kind, size, size, noise, seed))?
                }
                (None, Some(l), Some(t)) => (load_gray(&l)?, load_mask(&t)?),
                _ => return Err(usage("optimize needs --instance or both --likelihood and --target")),
            };
            let mode = match (no_topo, common.mode) {
                (true, _) => TopoMode::None,
                (false, ModeArg::Vanilla) => TopoMode::Vanilla,
                (false, ModeArg::Spatial) => TopoMode::Spatial,
            };
            let cfg = DescentConfig {
                steps,
                learning_rate: lr,
                lambda: common.lambda,
                mode,
                record_every,
                seed,
                pad: common.pad(),
                threshold: common.threshold,
                reference: common.reference(),
                ..DescentConfig::default()
            };
            if let Some(dir) = &snapshots {
                fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.clone(), e))?;
            }
            let mut snapshot_error = None;
            let result = optimize_with_observer(&l0, &t, &cfg, |step, _, ev| {
                if let (Some(dir), Some(ev)) = (&snapshots, ev) {
                    let path = dir.join(format!("step_{step:05}.svg"));
                    let svg = overlay_svg(&ev.diagram_l, &ev.diagram_t, &ev.matching, cfg.reference);
                    if let Err(e) = fs::write(&path, svg) {
                        snapshot_error.get_or_insert(CliError::Io(path, e));
                    }
                }
            })?;
            if let Some(e) = snapshot_error {
                return Err(e);
            }
            let mut csv = Vec::new();
            result.write_csv(&mut csv).expect("writing to memory");
            emit(trace.as_deref(), &csv)?;
            if let Some(path) = &final_image {
                save_npy(&result.final_image, path)?;
            }
            Ok(())
        }
        Command::Bench {
            sizes,
            repeats,
            seed,
            format,
            output,
        } => {
            require_format(format, &[Format::Json, Format::Table], "bench")?;
            let report = bench::scaling(&sizes, repeats, seed)?;
            let bytes = match format {
                Format::Json => json_bytes(&report.to_json()),
                _ => report.to_table().into_bytes(),
            };
            emit(output.as_deref(), &bytes)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("SATLOSS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("SATLOSS_THREADS must be a positive integer, got {value:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", json!({ "error": e.kind(), "message": e.message() }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let text: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            return fail(usage(text.join(" ").trim_start_matches("error: ")));
        }
    };
    if let Err(e) = configure_threads() {
        return fail(e);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
