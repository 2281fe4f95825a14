use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gaussgrid::geometry::DEFAULT_PADDING_SIGMAS;
use gaussgrid::io::{parse_points_csv, parse_xyz, read_npy, write_npy, write_points_csv, ChannelPolicy, StatsReport};
use gaussgrid::{
    generate_grid_with, reverse_grid, BoundingBox, GenOptions, GridSpec, LatticeCell, Mode, ParticleSet,
    ReversalConfig, SpecPolicy,
};
use gaussgrid_bench::{run_benchmark, BenchConfig, CorpusSource, DEFAULT_BOX_EDGE};

/// Gaussian-density voxel grids for typed point clouds.
#[derive(Parser, Debug)]
#[command(name = "gaussgrid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grid an XYZ or (channel, x, y, z) CSV file into an NPY tensor.
    Grid(GridArgs),
    /// Recover particle coordinates from an NPY grid.
    Reverse(ReverseArgs),
    /// Time dense vs sparse generation on a molecule corpus.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum InputFormat {
    Xyz,
    Csv,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long)]
    input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    /// Voxels per axis, `N` or `NX,NY,NZ`.
    #[arg(long, value_parser = parse_shape)]
    grid_size: [usize; 3],
    /// Gaussian width (standard deviation) in input units.
    #[arg(long)]
    variance: f64,
    /// `auto`, a channel count, or `single`.
    #[arg(long, default_value = "auto")]
    channels: ChannelPolicy,
    /// Bounding-box margin in widths, when the box is fitted to the input.
    #[arg(long, conflicts_with_all = ["periodic", "box_extents"])]
    padding_sigmas: Option<f64>,
    /// Periodic cell edges `a,b,c`; the grid covers the whole cell.
    #[arg(long, value_parser = parse_vec3, conflicts_with_all = ["box_origin", "box_extents"])]
    periodic: Option<[f64; 3]>,
    /// Lower corner of a fixed box (default origin).
    #[arg(long, value_parser = parse_vec3, requires = "box_extents")]
    box_origin: Option<[f64; 3]>,
    /// Edges of a fixed box instead of fitting one to the input.
    #[arg(long, value_parser = parse_vec3)]
    box_extents: Option<[f64; 3]>,
    #[arg(long, default_value = "sparse")]
    mode: Mode,
    #[arg(long)]
    output: PathBuf,
    /// Write the generation summary as JSON here.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReverseArgs {
    #[arg(long)]
    input: PathBuf,
    /// Gaussian width the grid was generated with.
    #[arg(long)]
    variance: f64,
    /// Box the grid covers (default origin).
    #[arg(long, value_parser = parse_vec3)]
    box_origin: Option<[f64; 3]>,
    /// Box edges (default unit cube).
    #[arg(long, value_parser = parse_vec3)]
    box_extents: Option<[f64; 3]>,
    #[arg(long, value_parser = parse_vec3, conflicts_with_all = ["box_origin", "box_extents"])]
    periodic: Option<[f64; 3]>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    persistence_threshold: Option<f64>,
    /// Recovered `(channel, x, y, z)` rows.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32, 64, 128])]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.25, 0.5])]
    variances: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Synthetic corpus size, or a directory of .xyz files.
    #[arg(long, default_value = "100")]
    corpus: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also time batch generation on this many threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Edge of the fixed cubic box centred on the origin.
    #[arg(long, default_value_t = DEFAULT_BOX_EDGE, conflicts_with = "per_molecule_box")]
    box_edge: f64,
    /// Fit a padded box to each molecule instead.
    #[arg(long)]
    per_molecule_box: bool,
    /// JSON report path; the table always goes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',').map(|v| v.trim().parse::<T>().map_err(|_| format!("invalid value '{v}'"))).collect()
}

fn parse_shape(s: &str) -> Result<[usize; 3], String> {
    match parse_list::<usize>(s)?.as_slice() {
        [n] => Ok([*n; 3]),
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(format!("expected N or NX,NY,NZ, got '{s}'")),
    }
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    match parse_list::<f64>(s)?.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(format!("expected three comma-separated numbers, got '{s}'")),
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Points and channel count under `policy`.
fn load_points(args: &GridArgs) -> anyhow::Result<(ParticleSet, usize)> {
    let format = match args.format {
        Some(f) => f,
        None => match args.input.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("xyz") => InputFormat::Xyz,
            Some("csv") => InputFormat::Csv,
            _ => bail!("cannot tell the format of {}; pass --format", args.input.display()),
        },
    };
    let text = read_text(&args.input)?;
    let ctx = || format!("{}", args.input.display());
    match format {
        InputFormat::Xyz => {
            let mol = parse_xyz(&text).with_context(ctx)?;
            let (set, names) = mol.to_particles(args.channels).with_context(ctx)?;
            log::info!("channels: {}", names.join(" "));
            Ok((set, names.len()))
        }
        InputFormat::Csv => {
            let mut set = parse_points_csv(&text).with_context(ctx)?;
            let used = set.channel_count();
            let channels = match args.channels {
                ChannelPolicy::Auto => used.max(1),
                ChannelPolicy::Fixed(k) if used > k => {
                    bail!("{}: channel {} does not fit in {k} channels", args.input.display(), used - 1)
                }
                ChannelPolicy::Fixed(k) => k,
                ChannelPolicy::Single => {
                    set.particles.iter_mut().for_each(|p| p.channel = 0);
                    1
                }
            };
            Ok((set, channels))
        }
    }
}

fn run_grid(args: GridArgs) -> anyhow::Result<()> {
    let (mut points, channels) = load_points(&args)?;
    let sigma = args.variance;
    let spec = if let Some(edges) = args.periodic {
        let cell = LatticeCell::new(edges)?;
        points = ParticleSet::periodic(points.particles, cell);
        GridSpec::periodic(args.grid_size, channels, cell, sigma)?
    } else if let Some(extents) = args.box_extents {
        let bbox = BoundingBox::new(args.box_origin.unwrap_or([0.0; 3]), extents)?;
        GridSpec::new(args.grid_size, channels, bbox, sigma)?
    } else {
        let padding_sigmas = args.padding_sigmas.unwrap_or(DEFAULT_PADDING_SIGMAS);
        let policy = SpecPolicy::PerMoleculeBbox { shape: args.grid_size, channels, sigma, padding_sigmas };
        policy.spec_for(&points).context("cannot fit a box to the input")?
    };
    log::info!("box origin {:?} extents {:?}", spec.bbox.origin, spec.bbox.extents);

    let (grid, stats) = generate_grid_with::<f32>(&points, &spec, GenOptions::new(args.mode))?;
    write_npy(&grid, &args.output).with_context(|| format!("cannot write {}", args.output.display()))?;
    let report = StatsReport::new(&grid, &stats);
    if let Some(path) = &args.stats {
        let json = serde_json::to_string_pretty(&report)?;
        fs::write(path, json).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let [c, nx, ny, nz] = grid.shape();
    println!("wrote ({c},{nx},{ny},{nz}) grid to {}, sum {:.4}", args.output.display(), report.sum);
    Ok(())
}

fn run_reverse(args: ReverseArgs) -> anyhow::Result<()> {
    let tensor = read_npy(&args.input).with_context(|| format!("cannot read {}", args.input.display()))?;
    let [c, nx, ny, nz] = tensor.grid_shape()?;
    let shape = [nx, ny, nz];
    let spec = match args.periodic {
        Some(edges) => GridSpec::periodic(shape, c, LatticeCell::new(edges)?, args.variance)?,
        None => {
            let bbox = BoundingBox::new(args.box_origin.unwrap_or([0.0; 3]), args.box_extents.unwrap_or([1.0; 3]))?;
            GridSpec::new(shape, c, bbox, args.variance)?
        }
    };
    let grid = tensor.into_grid(spec)?;

    let defaults = ReversalConfig::default();
    let config = ReversalConfig {
        learning_rate: args.learning_rate.unwrap_or(defaults.learning_rate),
        tolerance: args.tolerance.unwrap_or(defaults.tolerance),
        max_iters: args.max_iters.unwrap_or(defaults.max_iters),
        persistence_threshold: args.persistence_threshold.unwrap_or(defaults.persistence_threshold),
        ..defaults
    };
    // count mismatches are logged as warnings by the library
    let out = reverse_grid(&grid, &config)?;
    let file = fs::File::create(&args.output).with_context(|| format!("cannot write {}", args.output.display()))?;
    write_points_csv(&out.particles, BufWriter::new(file))?;
    match &out.state {
        Some(s) => println!(
            "recovered {} particles, loss {:.3e} after {} iterations ({:?})",
            out.particles.len(),
            s.loss,
            s.iterations,
            s.termination
        ),
        None => println!("grid is empty, no particles recovered"),
    }
    Ok(())
}

fn run_bench(args: BenchArgs) -> anyhow::Result<()> {
    let corpus = match args.corpus.parse::<usize>() {
        Ok(molecules) => CorpusSource::Synthetic { molecules, seed: args.seed },
        Err(_) => CorpusSource::XyzDir(PathBuf::from(&args.corpus)),
    };
    let config = BenchConfig {
        sizes: args.sizes,
        variances: args.variances,
        repeats: args.repeats,
        corpus,
        jobs: args.jobs,
        box_edge: (!args.per_molecule_box).then_some(args.box_edge),
    };
    let report = run_benchmark(&config)?;
    print!("{}", report.to_table());
    if let Some(path) = &args.output {
        fs::write(path, report.to_json()).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Grid(a) => run_grid(a),
        Command::Reverse(a) => run_reverse(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
