use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use bmf_core::analysis::{self, BenchConfig, BloomTestConfig, StructureKind, FPR_GRID};
use bmf_core::dataset::generate;
use bmf_core::persist::Structure;
use bmf_core::{
    BloomMatrix, BloomVector, Dataset, Distribution, GenConfig, HashFamily, LookupMode, MatrixLayout, MultiFilter,
};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bmf", version, about = "Multiple-set membership filters: Bloom Matrix, Sparse Bloom Matrix, Bloom Vector")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic item-label CSV.
    Gen(GenArgs),
    /// Build a structure from a CSV and save it.
    Build(BuildArgs),
    /// Query a saved structure; prints matching item ids, one per line.
    Lookup(LookupArgs),
    /// Sweep structures and target rates, writing one record per point.
    Bench(BenchArgs),
    /// Classify a dataset's label distribution and recommend a structure.
    Bloomtest(BloomtestArgs),
    /// Describe a saved structure.
    Info(InfoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Zipf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Bm,
    Sbm,
    Bv,
}

impl From<Kind> for StructureKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Bm => StructureKind::Bm,
            Kind::Sbm => StructureKind::Sbm,
            Kind::Bv => StructureKind::Bv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    And,
    Or,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    dist: Dist,
    #[arg(long)]
    items: usize,
    /// Size of the label universe.
    #[arg(long)]
    labels: usize,
    /// Assignment probability (uniform).
    #[arg(long)]
    p: Option<f64>,
    /// Zipf exponent.
    #[arg(long)]
    s: Option<f64>,
    /// Multiplier on the Zipf rank weight.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, env = "BMF_SEED", default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    /// Input CSV.
    data: PathBuf,
    #[arg(long, value_enum)]
    structure: Kind,
    /// Target false positive rate.
    #[arg(long, conflicts_with_all = ["m", "k"], required_unless_present = "m")]
    fpr: Option<f64>,
    /// Explicit bit count (rows for a matrix, bits per item for a vector).
    #[arg(long, requires = "k")]
    m: Option<usize>,
    #[arg(long, requires = "m")]
    k: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LookupArgs {
    file: PathBuf,
    #[arg(required = true)]
    labels: Vec<String>,
    #[arg(long, value_enum, default_value_t = Mode::And)]
    mode: Mode,
}

#[derive(Args)]
struct BenchArgs {
    data: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = FPR_GRID)]
    fprs: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Kind::Bm, Kind::Sbm, Kind::Bv])]
    structures: Vec<Kind>,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize])]
    batch_sizes: Vec<usize>,
    /// Labels sampled for lookup timing and observed rates.
    #[arg(long, default_value_t = 1000)]
    probes: usize,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[arg(long, env = "BMF_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BloomtestArgs {
    data: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    expected: f64,
    #[arg(long, default_value_t = 1000)]
    probes: usize,
    /// Observed/expected ratio above which the data counts as non-uniform.
    #[arg(long, default_value_t = 10.0)]
    threshold: f64,
    /// Observed rate that must also be exceeded.
    #[arg(long, default_value_t = 1e-2)]
    floor: f64,
    #[arg(long, env = "BMF_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InfoArgs {
    file: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn usage_error(msg: &str) -> ! {
    Cli::command().error(ErrorKind::MissingRequiredArgument, msg).exit()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(path: &Path) -> Result<Dataset> {
    Dataset::load_csv(path).with_context(|| format!("loading {}", path.display()))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(args) => gen(args),
        Command::Build(args) => build(args),
        Command::Lookup(args) => lookup(args),
        Command::Bench(args) => bench(args),
        Command::Bloomtest(args) => bloomtest(args),
        Command::Info(args) => info(args),
    }
}

fn gen(args: GenArgs) -> Result<()> {
    let distribution = match args.dist {
        Dist::Uniform => Distribution::Uniform {
            p: args.p.unwrap_or_else(|| usage_error("--dist uniform requires --p")),
        },
        Dist::Zipf => Distribution::Zipf {
            s: args.s.unwrap_or_else(|| usage_error("--dist zipf requires --s")),
            scale: args.scale,
        },
    };
    let config = GenConfig {
        items: args.items,
        label_universe: args.labels,
        distribution,
        seed: args.seed,
    };
    if let Err(e) = config.validate() {
        Cli::command().error(ErrorKind::ValueValidation, e).exit();
    }
    let dataset = generate(&config)?;
    let mut out = output(args.out.as_deref())?;
    dataset.write_csv(&mut out, Some(&config.header()))?;
    out.flush()?;
    Ok(())
}

fn build_structure(dataset: &Dataset, args: &BuildArgs) -> Result<Structure> {
    let layout = match args.structure {
        Kind::Sbm => MatrixLayout::Sparse,
        _ => MatrixLayout::Dense,
    };
    Ok(match (args.structure, args.fpr, args.m.zip(args.k)) {
        (Kind::Bv, Some(p), _) => Structure::Vector(BloomVector::build(dataset, p)?),
        (Kind::Bv, None, Some((m, k))) => {
            let mut bv = BloomVector::new(HashFamily::murmur(k)?);
            for row in dataset.rows() {
                bv.add_item_sized(&row.item, m, k)?;
            }
            for (label, items) in dataset.exact_index().inverted_items() {
                bv.add_label(label, &items)?;
            }
            Structure::Vector(bv)
        }
        (_, Some(p), _) => Structure::Matrix(BloomMatrix::build(dataset, p, layout)?),
        (_, None, Some((m, k))) => {
            Structure::Matrix(BloomMatrix::build_with(dataset, m, HashFamily::murmur(k)?, layout, false)?)
        }
        (_, None, None) => bail!("either --fpr or both --m and --k are required"),
    })
}

fn build(args: BuildArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let start = Instant::now();
    let structure = build_structure(&dataset, &args)?;
    let elapsed = start.elapsed();
    structure
        .save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("{}", describe(&structure));
    println!("build_ms={:.3}", elapsed.as_secs_f64() * 1e3);
    Ok(())
}

fn describe(structure: &Structure) -> String {
    match structure {
        Structure::Filter(bf) => format!("structure=filter stored_bits={} m={} k={}", bf.m(), bf.m(), bf.k()),
        Structure::Matrix(bm) => format!(
            "structure={} stored_bits={} m={} k={} items={}",
            match bm.layout() {
                MatrixLayout::Dense => "bm",
                MatrixLayout::Sparse => "sbm",
            },
            bm.stored_bits(),
            bm.m(),
            bm.k(),
            bm.item_count()
        ),
        Structure::Vector(bv) => {
            let ms = bv.filters().iter().map(|f| f.m());
            let ks = bv.filters().iter().map(|f| f.k());
            format!(
                "structure=bv stored_bits={} items={} m_min={} m_max={} m_mean={:.1} k_min={} k_max={}",
                bv.stored_bits(),
                bv.len(),
                ms.clone().min().unwrap_or(0),
                ms.clone().max().unwrap_or(0),
                bv.stored_bits() as f64 / bv.len().max(1) as f64,
                ks.clone().min().unwrap_or(0),
                ks.max().unwrap_or(0)
            )
        }
    }
}

fn load_structure(path: &Path) -> Result<Structure> {
    Structure::load(path).with_context(|| format!("reading {}", path.display()))
}

fn lookup(args: LookupArgs) -> Result<()> {
    let structure = load_structure(&args.file)?;
    let labels: Vec<&str> = args.labels.iter().map(String::as_str).collect();
    let mut out = io::stdout().lock();
    if let Structure::Filter(bf) = &structure {
        let hit = match args.mode {
            Mode::And => bf.lookup_all(&labels)?,
            Mode::Or => labels.iter().any(|l| bf.lookup(l)),
        };
        writeln!(out, "{hit}")?;
        return Ok(());
    }
    let multi: &dyn MultiFilter = structure.as_multi().expect("matrix or vector");
    let mode = match args.mode {
        Mode::And => LookupMode::And,
        Mode::Or => LookupMode::Or,
    };
    let mut items: Vec<&str> = multi.lookup_labels(&labels, mode)?.into_iter().collect();
    items.sort_unstable();
    for item in items {
        writeln!(out, "{item}")?;
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let config = BenchConfig {
        structures: args.structures.iter().map(|&k| k.into()).collect(),
        target_fprs: args.fprs,
        batch_sizes: args.batch_sizes,
        probe_labels: args.probes,
        repetitions: args.repetitions,
        seed: args.seed,
        dataset: args.data.display().to_string(),
    };
    let records = analysis::bench_sweep(&dataset, &config)?;
    let mut out = output(args.out.as_deref())?;
    match args.format {
        Format::Csv => analysis::write_csv(&records, &mut out)?,
        Format::Json => analysis::write_json(&records, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn bloomtest(args: BloomtestArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let config = BloomTestConfig {
        expected_fpr: args.expected,
        probe_labels: args.probes,
        ratio_threshold: args.threshold,
        observed_floor: args.floor,
        seed: args.seed,
    };
    println!("{}", analysis::bloom_test(&dataset, &config)?);
    Ok(())
}

fn info(args: InfoArgs) -> Result<()> {
    println!("{}", describe(&load_structure(&args.file)?));
    Ok(())
}
