use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ballmapper::artifact::{color_by, with_indicators, CoverArtifact, Session};
use ballmapper::error::{Error, Result};
use ballmapper::export::{self, ExportFormat, GraphDocument};
use ballmapper::io::{load_table, write_table, FormatSpec};
use ballmapper::pipeline::{run_pipeline, summary_from_colorings, Manifest, RunConfig};
use ballmapper::service::{self, AppState, ServiceConfig};
use ballmapper_core::synth::{generate_heavy_tailed, generate_y_cloud};
use ballmapper_core::{
    assign_unique, cluster_size_report, compare_balls, kmeans, ols_fit_table, residual_coloring,
    LandmarkStrategy, WinsorMode, WinsorSpec,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ballmapper", version, about = "Ball Mapper graphs for tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a cover and graph and write every output plus a manifest.
    Build(BuildArgs),
    /// Colour a stored cover by one or more variables.
    Color(ColorArgs),
    /// Compare two groups of balls of a stored cover.
    Compare(CompareArgs),
    /// Per-ball means of a stored cover.
    Summary(SummaryArgs),
    /// Least-squares fit with |t| statistics and significance stars.
    Regress(RegressArgs),
    /// Group sizes of the unique ball partition next to k-means runs.
    Kmeans(KmeansArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Re-export a stored cover in other formats.
    Export(ExportArgs),
}

#[derive(Args)]
struct TableArgs {
    /// Column holding row ids; rows are numbered from 1 when it is absent.
    #[arg(long, default_value = "id")]
    id_col: String,
    /// Text column with group labels (e.g. month).
    #[arg(long)]
    group_col: Option<String>,
    /// Input is tab-delimited.
    #[arg(long)]
    tab: bool,
}

impl TableArgs {
    fn format(&self) -> FormatSpec {
        FormatSpec {
            delimiter: if self.tab { b'\t' } else { b',' },
            id_column: Some(self.id_col.clone()),
            group_column: self.group_col.clone(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    First,
    Random,
}

impl From<Strategy> for LandmarkStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::First => LandmarkStrategy::First,
            Strategy::Random => LandmarkStrategy::Random,
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Replay a previous run from its manifest; other options are ignored
    /// except --out.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required_unless_present = "manifest")]
    axes: Vec<String>,
    /// Extra colouring variables; `group=label` colours by a group share.
    #[arg(long, value_delimiter = ',')]
    color: Vec<String>,
    #[arg(long, required_unless_present = "manifest", allow_negative_numbers = true)]
    epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "first")]
    strategy: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `lower,upper` quantiles, or `none`.
    #[arg(long, default_value = "0.005,0.995")]
    winsor: String,
    /// Drop rows outside the winsor bounds instead of clamping them.
    #[arg(long)]
    winsor_drop: bool,
    /// Compute winsor bounds within each group.
    #[arg(long)]
    winsor_per_group: bool,
    /// Keep only rows with this group label (e.g. one month of a panel).
    #[arg(long)]
    subset: Option<String>,
    #[command(flatten)]
    table: TableArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json,dot,csv")]
    format: Vec<ExportFormat>,
}

fn parse_winsor(text: &str, drop: bool, per_group: bool) -> Result<Option<WinsorSpec>> {
    if text.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bounds: Vec<f64> = parts.iter().filter_map(|p| p.parse().ok()).collect();
    let [lo, hi] = bounds[..] else {
        return Err(Error::Config(format!("--winsor expects lower,upper or none, got {text:?}")));
    };
    let mut spec = WinsorSpec::new(lo, hi)?;
    if drop {
        spec.mode = WinsorMode::Drop;
    }
    spec.per_group = per_group;
    Ok(Some(spec))
}

fn cmd_build(args: BuildArgs) -> Result<()> {
    let config = match &args.manifest {
        Some(path) => RunConfig { out_dir: args.out.clone(), ..Manifest::read(path)?.config },
        None => RunConfig {
            input: args.input.clone().expect("required by clap"),
            format: args.table.format(),
            subset: args.subset.clone(),
            axes: args.axes.clone(),
            colors: args.color.clone(),
            winsor: parse_winsor(&args.winsor, args.winsor_drop, args.winsor_per_group)?,
            epsilon: args.epsilon.expect("required by clap"),
            strategy: args.strategy.into(),
            seed: args.seed,
            formats: args.format.iter().copied().collect(),
            out_dir: args.out.clone(),
        },
    };
    let manifest = run_pipeline(&config)?;
    println!(
        "{} points ({} dropped), {} balls, {} edges -> {}",
        manifest.points,
        manifest.dropped_rows,
        manifest.balls,
        manifest.edges,
        config.out_dir.display()
    );
    Ok(())
}

fn open_cover(path: &Path) -> Result<Session> {
    CoverArtifact::read(path)?.open()
}

/// Writes to `out`, or stdout when absent.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

#[derive(Args)]
struct ColorArgs {
    /// `cover.json` written by `build`.
    #[arg(long)]
    cover: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    color: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_color(args: ColorArgs) -> Result<()> {
    let s = open_cover(&args.cover)?;
    let colorings = args
        .color
        .iter()
        .map(|v| color_by(&s.artifact.cover, &s.prepared.cloud, &s.prepared.table, v))
        .collect::<Result<Vec<_>>>()?;
    emit(args.out.as_deref(), &export::colorings_csv(&colorings))
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    cover: PathBuf,
    /// Ball ids, e.g. `1,2`.
    #[arg(long, value_delimiter = ',', required = true)]
    group_a: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    group_b: Vec<usize>,
    /// Defaults to the cover's axes.
    #[arg(long, value_delimiter = ',')]
    variables: Vec<String>,
    /// Print JSON instead of CSV.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let s = open_cover(&args.cover)?;
    let variables = if args.variables.is_empty() { &s.artifact.axes } else { &args.variables };
    let variables: Vec<&str> = variables.iter().map(String::as_str).collect();
    let table = with_indicators(&s.prepared.table, &variables)?;
    let report = compare_balls(
        &s.artifact.cover,
        &s.prepared.cloud,
        &table,
        &args.group_a,
        &args.group_b,
        &variables,
    )?;
    let text = if args.json {
        format!("{:#}\n", export::comparison_value(&report))
    } else {
        export::comparison_csv(&report)
    };
    emit(args.out.as_deref(), &text)
}

#[derive(Args)]
struct SummaryArgs {
    #[arg(long)]
    cover: PathBuf,
    /// Defaults to the cover's axes.
    #[arg(long, value_delimiter = ',')]
    variables: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_summary(args: SummaryArgs) -> Result<()> {
    let s = open_cover(&args.cover)?;
    let variables = if args.variables.is_empty() { &s.artifact.axes } else { &args.variables };
    let variables: Vec<&str> = variables.iter().map(String::as_str).collect();
    let colorings = variables
        .iter()
        .map(|v| color_by(&s.artifact.cover, &s.prepared.cloud, &s.prepared.table, v))
        .collect::<Result<Vec<_>>>()?;
    let rows = summary_from_colorings(&s.artifact.cover, &colorings);
    emit(args.out.as_deref(), &export::summary_csv(&rows, &variables))
}

#[derive(Args)]
struct RegressArgs {
    #[arg(long, required_unless_present = "cover")]
    input: Option<PathBuf>,
    #[arg(long)]
    response: String,
    #[arg(long, value_delimiter = ',', required = true)]
    regressors: Vec<String>,
    /// Fit only the rows whose group label equals this value.
    #[arg(long)]
    subset: Option<String>,
    #[command(flatten)]
    table: TableArgs,
    /// Fit on the data behind this cover and colour it by the residuals.
    #[arg(long, conflicts_with = "subset")]
    cover: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_regress(args: RegressArgs) -> Result<()> {
    let regressors: Vec<&str> = args.regressors.iter().map(String::as_str).collect();
    if let Some(path) = &args.cover {
        let s = open_cover(path)?;
        let fit = ols_fit_table(&s.prepared.table, &regressors, &args.response)?;
        let (mean, abs) = residual_coloring(&fit, &s.artifact.cover, &s.prepared.cloud)?;
        let mut text = export::regression_table(&fit);
        text.push('\n');
        text.push_str(&export::colorings_csv(&[mean, abs]));
        return emit(args.out.as_deref(), &text);
    }
    let input = args.input.as_ref().expect("required by clap");
    let bytes = fs::read(input).map_err(|e| Error::io(input, e))?;
    let mut table = load_table(bytes.as_slice(), &args.table.format())?;
    if let Some(label) = &args.subset {
        table = table.filter_group(label)?;
    }
    let fit = ols_fit_table(&table, &regressors, &args.response)?;
    emit(args.out.as_deref(), &export::regression_table(&fit))
}

#[derive(Args)]
struct KmeansArgs {
    #[arg(long)]
    cover: PathBuf,
    /// Cluster counts; defaults to the number of unique-partition groups.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_kmeans(args: KmeansArgs) -> Result<()> {
    let s = open_cover(&args.cover)?;
    let partition = assign_unique(&s.artifact.cover);
    let ks = if args.k.is_empty() { vec![partition.groups.len()] } else { args.k.clone() };
    let runs = ks
        .iter()
        .map(|&k| kmeans(&s.prepared.cloud, k, args.seed, args.max_iter))
        .collect::<ballmapper_core::Result<Vec<_>>>()?;
    let refs: Vec<_> = runs.iter().collect();
    let report = cluster_size_report(&partition, s.artifact.cover.params.epsilon, &refs);
    emit(args.out.as_deref(), &export::cluster_report_csv(&report))
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    /// Three arms meeting at a hub.
    Y,
    /// Laplace-distributed mass with a few far outliers.
    Heavy,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(value_enum)]
    shape: Shape,
    #[arg(long, default_value_t = 600)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Y arms: length of each arm.
    #[arg(long, default_value_t = 1.0)]
    arm_length: f64,
    /// Y arms: standard deviation of the added noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Heavy: number of columns.
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Heavy: number of isolated outliers.
    #[arg(long, default_value_t = 4)]
    outliers: usize,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let table = match args.shape {
        Shape::Y => generate_y_cloud(args.n, args.arm_length, args.noise, args.seed)?,
        Shape::Heavy => generate_heavy_tailed(args.n, args.dim, args.outliers, args.seed)?,
    };
    let mut buf = Vec::new();
    write_table(&table, &FormatSpec::default(), &mut buf).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&args.out, buf).map_err(|e| Error::io(&args.out, e))
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Largest table, in rows, a build request may cover.
    #[arg(long, default_value_t = 50_000)]
    max_points: usize,
    /// Cap on stored datasets and graphs, in MiB.
    #[arg(long, default_value_t = 512)]
    max_store_mib: usize,
    /// Also write uploaded datasets and built covers here.
    #[arg(long)]
    artifact_dir: Option<PathBuf>,
}

fn cmd_serve(args: ServeArgs) -> Result<()> {
    if let Some(dir) = &args.artifact_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let config = ServiceConfig {
        max_build_points: args.max_points,
        max_store_bytes: args.max_store_mib << 20,
        artifact_dir: args.artifact_dir,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io("<runtime>", e))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.addr).await.map_err(|e| Error::io("<bind>", e))?;
        eprintln!("listening on {}", args.addr);
        service::serve(listener, AppState::new(config)).await.map_err(|e| Error::io("<serve>", e))
    })
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    cover: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json,dot,csv")]
    format: Vec<ExportFormat>,
    /// Variables to colour by; the first also shades the DOT nodes.
    #[arg(long, value_delimiter = ',')]
    color: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_export(args: ExportArgs) -> Result<()> {
    let s = open_cover(&args.cover)?;
    let cover = &s.artifact.cover;
    let cloud = &s.prepared.cloud;
    let colorings = args
        .color
        .iter()
        .map(|v| color_by(cover, cloud, &s.prepared.table, v))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let formats: BTreeSet<ExportFormat> = args.format.iter().copied().collect();
    for format in formats {
        let (name, text) = match format {
            ExportFormat::Json => (
                "graph.json",
                GraphDocument::new(cover, &s.graph, cloud).with_colorings(&colorings).to_json(),
            ),
            ExportFormat::Dot => ("graph.dot", export::graph_to_dot(&s.graph, colorings.first())),
            ExportFormat::Csv => ("membership.csv", export::membership_csv(cover, cloud)),
        };
        let path = args.out.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Color(a) => cmd_color(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Summary(a) => cmd_summary(a),
        Command::Regress(a) => cmd_regress(a),
        Command::Kmeans(a) => cmd_kmeans(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
