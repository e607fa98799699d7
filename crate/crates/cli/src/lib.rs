//! Command-line front end: every pipeline stage as a subcommand, each reading
//! and writing plain files, plus `pipeline` which chains them.

pub mod document;
pub mod error;
pub mod files;

use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hicmapper::bootstrap::{bootstrap_distances, BootstrapConfig, ConfidenceReport, MapperSetup, DEFAULT_CONFIDENCE, DEFAULT_ITERATIONS};
use hicmapper::ingest::{
    band_fractions, bin_pairs, parse_pairs, smooth, split_by_sample, BandThresholds, ContactMap, FragmentPairRecord, PairFormat,
    DEFAULT_MITOTIC_MAX, DEFAULT_MITOTIC_MIN, DEFAULT_NEAR_MAX,
};
use hicmapper::mapper::{auto_cover, build_mapper, select_delta, MetricDataset, NodeFunction, DEFAULT_BETA, DEFAULT_DELTA_DRAWS, DEFAULT_GAIN};
use hicmapper::persistence::{mapper_diagrams, ExtendedDiagram};
use hicmapper::scc::{pairwise, SccOptions, SquareMatrix};
use hicmapper::spectral::{mds_filters, FilterValues};
use hicmapper::{io, Execution};

use crate::document::{MapperDocument, Metadata};
use crate::error::{CliError, CliResult};
use crate::files::{check_sample_id, expand_inputs, list_dir, Run};

pub use crate::error::{EXIT_DEGENERATE, EXIT_IO, EXIT_OTHER, EXIT_PARAMETER, EXIT_PARSE};

pub const DEFAULT_BIN_SIZE: u64 = 500_000;
pub const DEFAULT_SMOOTHING: usize = 1;
pub const DEFAULT_FILTERS: usize = 2;

#[derive(Debug, Parser)]
#[command(name = "hicmapper", version, about = "Mapper summaries and bootstrap confidence for Hi-C contact map collections")]
pub struct Cli {
    /// Worker threads for the parallel stages. Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bin fragment-pair TSV files into one contact map per sample.
    Bin(BinArgs),
    /// Moving-average smoothing of contact maps.
    Smooth(SmoothArgs),
    /// Near and mitotic band fractions per contact map.
    Bands(BandsArgs),
    /// Pairwise stratum-adjusted correlation and the derived distances.
    Scc(SccArgs),
    /// Classical-MDS filter coordinates from a distance matrix.
    Mds(MdsArgs),
    /// Mapper graph with automatically chosen scale and cover.
    Mapper(MapperArgs),
    /// Extended persistence diagram of every Mapper filter coordinate.
    Diagram(DiagramArgs),
    /// Bootstrap confidence for the Mapper diagram points.
    Bootstrap(BootstrapArgs),
    /// All stages, from fragment pairs or a distance matrix to a confidence report.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BinArgs {
    /// Pair files or directories of pair files (`sample_id<TAB>pos_a<TAB>pos_b`).
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BIN_SIZE)]
    pub bin_size: u64,
    /// Bins per map; inferred from the largest coordinate when omitted.
    #[arg(long)]
    pub n_bins: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SmoothArgs {
    /// Directory of `.coo` maps.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    pub h: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize, Clone, Copy)]
pub struct BandArgs {
    #[arg(long, default_value_t = DEFAULT_NEAR_MAX)]
    pub near_max: u64,
    #[arg(long, default_value_t = DEFAULT_MITOTIC_MIN)]
    pub mitotic_min: u64,
    #[arg(long, default_value_t = DEFAULT_MITOTIC_MAX)]
    pub mitotic_max: u64,
}

impl BandArgs {
    fn thresholds(&self) -> CliResult<BandThresholds> {
        let t = BandThresholds { near_max: self.near_max, mitotic_min: self.mitotic_min, mitotic_max: self.mitotic_max };
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BandsArgs {
    /// Directory of `.coo` maps.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub bands: BandArgs,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SccArgs {
    /// Directory of `.coo` maps, one per sample.
    #[arg(long)]
    pub input: PathBuf,
    /// Largest diagonal offset entering the correlation.
    #[arg(long)]
    pub cap_k: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize, Clone, Copy)]
pub struct MdsParams {
    /// Number of filter coordinates.
    #[arg(long, default_value_t = DEFAULT_FILTERS)]
    pub p: usize,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub scale_by_sqrt_eigenvalue: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct MdsArgs {
    #[arg(long)]
    pub distances: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: MdsParams,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

/// Which maps the pipeline computes band fractions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BandSource {
    Raw,
    Smoothed,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeFunctionArg {
    Mean,
    Midpoint,
}

impl From<NodeFunctionArg> for NodeFunction {
    fn from(v: NodeFunctionArg) -> Self {
        match v {
            NodeFunctionArg::Mean => NodeFunction::Mean,
            NodeFunctionArg::Midpoint => NodeFunction::Midpoint,
        }
    }
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct MapperParams {
    /// Cover gain per coordinate, each in (1/3, 1/2). A single value applies to all.
    #[arg(long, value_delimiter = ',', default_values_t = [DEFAULT_GAIN])]
    pub gains: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA_DRAWS)]
    pub delta_draws: usize,
    #[arg(long, value_enum, default_value_t = NodeFunctionArg::Mean)]
    pub node_function: NodeFunctionArg,
    /// CSV files `sample_id,<column>,...` averaged onto the Mapper nodes.
    #[arg(long)]
    pub metadata: Vec<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MapperArgs {
    #[arg(long)]
    pub distances: PathBuf,
    #[arg(long)]
    pub filters: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: MapperParams,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DiagramArgs {
    /// `mapper.json` written by the mapper stage.
    #[arg(long)]
    pub mapper: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize, Clone, Copy)]
pub struct BootstrapParams {
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    pub confidence: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct BootstrapArgs {
    #[arg(long)]
    pub distances: PathBuf,
    #[arg(long)]
    pub filters: PathBuf,
    #[arg(long)]
    pub mapper: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: BootstrapParams,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    /// Pair files or directories of pair files.
    #[arg(long, num_args = 1.., required_unless_present = "distances", conflicts_with = "distances")]
    pub input: Vec<PathBuf>,
    /// Start from a distance matrix instead of fragment pairs.
    #[arg(long)]
    pub distances: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BIN_SIZE)]
    pub bin_size: u64,
    #[arg(long)]
    pub n_bins: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    pub h: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub bands: BandArgs,
    #[arg(long, value_enum, default_value_t = BandSource::Raw)]
    pub bands_from: BandSource,
    #[arg(long)]
    pub cap_k: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub mds: MdsParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub mapper: MapperParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub bootstrap: BootstrapParams,
    /// Seeds the scale selection and the bootstrap.
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

/// Parses arguments and runs, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    with_workers(cli.workers, || dispatch(cli.command, exec))
}

#[cfg(feature = "parallel")]
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
    match workers {
        Some(0) => Err(CliError::Parameter("--workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Parameter(format!("cannot start {n} workers: {e}")))?;
            pool.install(f)
        }
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
    if workers == Some(0) {
        return Err(CliError::Parameter("--workers must be at least 1".into()));
    }
    f()
}

fn dispatch(command: Command, exec: Execution) -> CliResult<()> {
    match command {
        Command::Bin(a) => {
            let mut run = Run::new(&a.out_dir)?;
            stage_bin(&mut run, &a.input, a.bin_size, a.n_bins, "")?;
            run.finish("bin", &a)
        }
        Command::Smooth(a) => {
            let mut run = Run::new(&a.out_dir)?;
            let maps = load_maps(&mut run, &a.input)?;
            stage_smooth(&mut run, &maps, a.h, "")?;
            run.finish("smooth", &a)
        }
        Command::Bands(a) => {
            let mut run = Run::new(&a.out_dir)?;
            let maps = load_maps(&mut run, &a.input)?;
            stage_bands(&mut run, &maps, a.bands.thresholds()?)?;
            run.finish("bands", &a)
        }
        Command::Scc(a) => {
            let mut run = Run::new(&a.out_dir)?;
            let maps = load_maps(&mut run, &a.input)?;
            stage_scc(&mut run, &maps, a.cap_k, exec)?;
            run.finish("scc", &a)
        }
        Command::Mds(a) => {
            let mut run = Run::new(&a.out_dir)?;
            let (ids, d) = load_matrix(&mut run, &a.distances)?;
            stage_mds(&mut run, &ids, &d, a.params)?;
            run.finish("mds", &a)
        }
        Command::Mapper(a) => {
            let mut run = Run::new(&a.out_dir)?;
            let (ids, d) = load_matrix(&mut run, &a.distances)?;
            let filters = load_filters(&mut run, &a.filters, &ids)?;
            let metadata = load_metadata(&mut run, &a.params.metadata)?;
            stage_mapper(&mut run, &ids, d, &filters, &a.params, a.seed, metadata, exec)?;
            run.finish("mapper", &a)
        }
        Command::Diagram(a) => {
            let mut run = Run::new(&a.out_dir)?;
            let doc = load_document(&mut run, &a.mapper)?;
            stage_diagram(&mut run, &doc)?;
            run.finish("diagram", &a)
        }
        Command::Bootstrap(a) => {
            let mut run = Run::new(&a.out_dir)?;
            let (ids, d) = load_matrix(&mut run, &a.distances)?;
            let filters = load_filters(&mut run, &a.filters, &ids)?;
            let doc = load_document(&mut run, &a.mapper)?;
            if doc.sample_ids != ids {
                return Err(CliError::Input(format!("{} was built from different samples", a.mapper.display())));
            }
            let data = MetricDataset::new(d)?;
            let base = mapper_diagrams(&doc.graph())?;
            stage_bootstrap(&mut run, &data, &filters, &doc, &base, a.params, a.seed, exec)?;
            run.finish("bootstrap", &a)
        }
        Command::Pipeline(a) => {
            let mut run = Run::new(&a.out_dir)?;
            pipeline(&mut run, &a, exec)?;
            run.finish("pipeline", &a)
        }
    }
}

fn pipeline(run: &mut Run, a: &PipelineArgs, exec: Execution) -> CliResult<()> {
    let mut metadata = Metadata::default();
    let (ids, d) = match &a.distances {
        Some(path) => load_matrix(run, path)?,
        None => {
            let raw = stage_bin(run, &a.input, a.bin_size, a.n_bins, "maps/")?;
            let smoothed = stage_smooth(run, &raw, a.h, "smoothed/")?;
            let band_maps = if a.bands_from == BandSource::Raw { &raw } else { &smoothed };
            metadata = stage_bands(run, band_maps, a.bands.thresholds()?)?;
            stage_scc(run, &smoothed, a.cap_k, exec)?
        }
    };
    metadata.merge(load_metadata(run, &a.mapper.metadata)?)?;
    let filters = stage_mds(run, &ids, &d, a.mds)?;
    let (data, doc) = stage_mapper(run, &ids, d, &filters, &a.mapper, a.seed, metadata, exec)?;
    let base = stage_diagram(run, &doc)?;
    stage_bootstrap(run, &data, &filters, &doc, &base, a.bootstrap, a.seed, exec)?;
    Ok(())
}

type NamedMaps = Vec<(String, ContactMap)>;

fn stage_bin(run: &mut Run, inputs: &[PathBuf], bin_size: u64, n_bins: Option<usize>, prefix: &str) -> CliResult<NamedMaps> {
    if bin_size == 0 {
        return Err(CliError::Parameter("--bin-size must be positive".into()));
    }
    let mut records: Vec<FragmentPairRecord> = Vec::new();
    for path in expand_inputs(inputs)? {
        let bytes = run.read(&path)?;
        let parsed = parse_pairs(BufReader::new(bytes.as_slice()), PairFormat::Tsv3).map_err(|e| CliError::in_file(&path, e))?;
        records.extend(parsed);
    }
    let n_bins = match n_bins {
        Some(n) => n,
        None => records.iter().map(|r| (r.pos_a.max(r.pos_b) / bin_size) as usize + 1).max().unwrap_or(0),
    };
    // same order as reading the .coo files back from a directory
    let mut samples = split_by_sample(records);
    samples.sort_by(|a, b| a.0.cmp(&b.0));
    let mut maps = Vec::new();
    for (id, recs) in samples {
        check_sample_id(&id)?;
        let map = bin_pairs(&recs, bin_size, n_bins)?;
        run.write(&format!("{prefix}{id}.coo"), io::write_coo(&map).as_bytes())?;
        maps.push((id, map));
    }
    if maps.is_empty() {
        return Err(CliError::Input("no fragment pairs in the input".into()));
    }
    Ok(maps)
}

fn stage_smooth(run: &mut Run, maps: &NamedMaps, h: usize, prefix: &str) -> CliResult<NamedMaps> {
    maps.iter()
        .map(|(id, m)| {
            let s = smooth(m, h);
            run.write(&format!("{prefix}{id}.coo"), io::write_coo(&s).as_bytes())?;
            Ok((id.clone(), s))
        })
        .collect()
}

fn stage_bands(run: &mut Run, maps: &NamedMaps, thresholds: BandThresholds) -> CliResult<Metadata> {
    let mut text = String::from("sample_id,near,mitotic\n");
    let mut meta = Metadata { columns: vec!["near".into(), "mitotic".into()], ..Default::default() };
    for (id, m) in maps {
        let f = band_fractions(m, thresholds).map_err(|e| match e {
            hicmapper::Error::Degenerate(msg) => hicmapper::Error::Degenerate(format!("sample {id}: {msg}")),
            other => other,
        })?;
        text.push_str(&format!("{id},{},{}\n", f.near, f.mitotic));
        meta.rows.insert(id.clone(), vec![f.near, f.mitotic]);
    }
    run.write("bands.csv", text.as_bytes())?;
    Ok(meta)
}

fn stage_scc(run: &mut Run, maps: &NamedMaps, cap_k: Option<usize>, exec: Execution) -> CliResult<(Vec<String>, SquareMatrix)> {
    let ids: Vec<String> = maps.iter().map(|(id, _)| id.clone()).collect();
    let samples: Vec<ContactMap> = maps.iter().map(|(_, m)| m.clone()).collect();
    let opts = SccOptions { max_separation: cap_k, ..Default::default() };
    let res = pairwise(&samples, opts, exec)?;
    run.write("similarity.csv", io::write_matrix_csv(&ids, &res.similarity)?.as_bytes())?;
    run.write("distances.csv", io::write_matrix_csv(&ids, &res.distance)?.as_bytes())?;
    Ok((ids, res.distance))
}

fn stage_mds(run: &mut Run, ids: &[String], d: &SquareMatrix, params: MdsParams) -> CliResult<FilterValues> {
    let f = mds_filters(d, params.p, params.scale_by_sqrt_eigenvalue)?;
    run.write("filters.csv", io::write_filters_csv(ids, &f)?.as_bytes())?;
    Ok(f)
}

#[allow(clippy::too_many_arguments)]
fn stage_mapper(
    run: &mut Run,
    ids: &[String],
    d: SquareMatrix,
    filters: &FilterValues,
    params: &MapperParams,
    seed: u64,
    metadata: Metadata,
    exec: Execution,
) -> CliResult<(MetricDataset, MapperDocument)> {
    let data = MetricDataset::new(d)?;
    let gains = match params.gains.as_slice() {
        [g] => vec![*g; filters.p()],
        gs if gs.len() == filters.p() => gs.to_vec(),
        gs => return Err(CliError::Parameter(format!("{} gains for {} filter coordinates", gs.len(), filters.p()))),
    };
    let delta = select_delta(&data, params.beta, params.delta_draws, seed, exec)?;
    let cover = auto_cover(filters, delta.delta, &data, &gains)?;
    let node_function = NodeFunction::from(params.node_function);
    let graph = build_mapper(&data, filters, &cover, delta.delta, node_function, exec)?;
    let doc = MapperDocument::new(&graph, ids, params.beta, seed, delta, cover, node_function, &metadata)?;
    run.write("mapper.json", doc.to_json().as_bytes())?;
    run.write("mapper.dot", doc.to_dot().as_bytes())?;
    Ok((data, doc))
}

fn stage_diagram(run: &mut Run, doc: &MapperDocument) -> CliResult<Vec<ExtendedDiagram>> {
    if doc.nodes.is_empty() {
        return Err(hicmapper::Error::Degenerate("the Mapper graph has no nodes".into()).into());
    }
    let diagrams = mapper_diagrams(&doc.graph())?;
    for d in &diagrams {
        run.write(&format!("diagram_f{}.csv", d.coordinate + 1), io::write_diagram_csv(d).as_bytes())?;
    }
    Ok(diagrams)
}

#[allow(clippy::too_many_arguments)]
fn stage_bootstrap(
    run: &mut Run,
    data: &MetricDataset,
    filters: &FilterValues,
    doc: &MapperDocument,
    base: &[ExtendedDiagram],
    params: BootstrapParams,
    seed: u64,
    exec: Execution,
) -> CliResult<ConfidenceReport> {
    let config = BootstrapConfig::new(params.iterations, seed, params.confidence)?;
    let setup = MapperSetup { data, filters, cover: &doc.cover, delta: doc.delta.delta, node_function: doc.node_function };
    let report = bootstrap_distances(setup, base, &config, exec)?.report(base, &config)?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    run.write("report.json", json.as_bytes())?;
    run.write("confidence.csv", io::write_confidence_csv(&report).as_bytes())?;
    Ok(report)
}

fn load_maps(run: &mut Run, dir: &Path) -> CliResult<NamedMaps> {
    let files = list_dir(dir, Some("coo"))?;
    if files.is_empty() {
        return Err(CliError::Input(format!("{}: no .coo files", dir.display())));
    }
    files
        .into_iter()
        .map(|path| {
            let bytes = run.read(&path)?;
            let map = io::read_coo(bytes.as_slice()).map_err(|e| CliError::in_file(&path, e))?;
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            Ok((id, map))
        })
        .collect()
}

fn load_matrix(run: &mut Run, path: &Path) -> CliResult<(Vec<String>, SquareMatrix)> {
    let bytes = run.read(path)?;
    io::read_matrix_csv(bytes.as_slice()).map_err(|e| CliError::in_file(path, e))
}

fn load_filters(run: &mut Run, path: &Path, ids: &[String]) -> CliResult<FilterValues> {
    let bytes = run.read(path)?;
    let (fids, f) = io::read_filters_csv(bytes.as_slice()).map_err(|e| CliError::in_file(path, e))?;
    if fids != ids {
        return Err(CliError::Input(format!("{}: sample ids differ from the distance matrix", path.display())));
    }
    Ok(f)
}

fn load_metadata(run: &mut Run, paths: &[PathBuf]) -> CliResult<Metadata> {
    let mut meta = Metadata::default();
    for path in paths {
        let text = run.read_text(path)?;
        meta.merge(Metadata::parse(&text, &path.display().to_string())?)?;
    }
    Ok(meta)
}

fn load_document(run: &mut Run, path: &Path) -> CliResult<MapperDocument> {
    let text = run.read_text(path)?;
    MapperDocument::from_json(&text, path)
}
