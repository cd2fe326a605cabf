//! The `vismask` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 provider or I/O
//! failure. Diagnostics go to stderr; stdout carries only the declared data
//! format of the subcommand.

mod manifest;
mod settings;

pub use manifest::{manifest_path, quarantine_path, sha256_file, InputDigest, RunManifest};
pub use settings::{Layer, Settings, ENV_GROUNDING_ENDPOINT, ENV_GROUNDING_FIXTURES, ENV_WORDNET_DIR};

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::candidates::StopList;
use crate::collation::{open_jsonl, read_parallel_text, CollationConfig, CollationError, Collator, CorpusEntry};
use crate::concreteness::{load_label_table, Classifier, ConcretenessConfig, ConcretenessError, HypernymLabelTable};
use crate::detectors::{Detectors, Technique};
use crate::grounding::{load_fixtures, GroundingError, GroundingProvider, ImagePayload, MissMode, ProviderConfig};
use crate::metrics::{bleu4, whitespace_tokens};
use crate::selection::{SelectionConfig, Strategy};
use crate::wordnet::{WordNetError, WordNetGraph};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<WordNetError> for CliError {
    fn from(e: WordNetError) -> Self {
        match e {
            WordNetError::Io(_) | WordNetError::Open { .. } => Self::Io(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<ConcretenessError> for CliError {
    fn from(e: ConcretenessError) -> Self {
        match e {
            ConcretenessError::Io(_) => Self::Io(e.to_string()),
            ConcretenessError::InvalidThreshold(_) => Self::Usage(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<GroundingError> for CliError {
    fn from(e: GroundingError) -> Self {
        match e {
            GroundingError::MalformedFixture { .. } | GroundingError::InvalidRequest(_) => Self::Data(e.to_string()),
            GroundingError::Config(_) => Self::Usage(e.to_string()),
            _ => Self::Io(e.to_string()),
        }
    }
}

impl From<CollationError> for CliError {
    fn from(e: CollationError) -> Self {
        match e {
            CollationError::Io(_) => Self::Io(e.to_string()),
            CollationError::Config(_) => Self::Usage(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vismask", version, about = "Detect, select and mask visually grounded tokens in captioned parallel corpora")]
pub struct Cli {
    /// TOML file whose keys mirror the long flag names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log debug diagnostics to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit masked source/target/image variants as JSON lines.
    Collate(CollateArgs),
    /// Print detection statistics for a corpus as one JSON document.
    Stats(StatsArgs),
    /// Run one detector on one sentence and print outcomes as JSON lines.
    Detect(DetectArgs),
    /// Corpus BLEU-4 over whitespace-tokenized, line-aligned files.
    Bleu(BleuArgs),
    /// Grounding fixture utilities.
    Fixtures {
        #[command(subcommand)]
        command: FixturesCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum FixturesCommand {
    /// Parse a fixture file and report its size.
    Validate {
        #[arg(long)]
        fixtures: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct ResourceArgs {
    /// WordNet `dict` directory holding index.noun and data.noun.
    #[arg(long)]
    pub wordnet_dir: Option<PathBuf>,
    #[arg(long)]
    pub label_table: Option<PathBuf>,
    #[arg(long)]
    pub stop_list: Option<PathBuf>,
    /// Fraction such as `1/3`, `0.33` or `33%`.
    #[arg(long)]
    pub concrete_threshold: Option<String>,
    #[arg(long)]
    pub confidence_threshold: Option<f64>,
    #[arg(long)]
    pub grounding_fixtures: Option<PathBuf>,
    #[arg(long)]
    pub grounding_endpoint: Option<String>,
    /// Fail on fixture misses instead of treating them as "not grounded".
    #[arg(long)]
    pub strict_fixtures: bool,
    /// Send image bytes to the grounding service instead of paths.
    #[arg(long)]
    pub inline_images: bool,
    /// Seconds per grounding request.
    #[arg(long)]
    pub grounding_timeout: Option<f64>,
    #[arg(long)]
    pub max_inflight: Option<usize>,
    #[arg(long)]
    pub retries: Option<u32>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CorpusArgs {
    /// JSON-lines corpus of {"id", "src", "tgt", "image"} records.
    #[arg(long, conflicts_with_all = ["src", "tgt", "images"])]
    pub corpus: Option<PathBuf>,
    /// Source-language text file (plain-text mode).
    #[arg(long, requires_all = ["tgt", "images"])]
    pub src: Option<PathBuf>,
    #[arg(long, requires_all = ["src", "images"])]
    pub tgt: Option<PathBuf>,
    /// Image list, one reference per line.
    #[arg(long, requires_all = ["src", "tgt"])]
    pub images: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CollateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub resources: ResourceArgs,
    #[arg(long, value_enum)]
    pub detector: Option<Technique>,
    #[arg(long, value_enum)]
    pub selector: Option<Strategy>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mask_token: Option<String>,
    /// Emit the unmasked baseline instead.
    #[arg(long)]
    pub passthrough: bool,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest location; defaults to `<out stem>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub resources: ResourceArgs,
    #[arg(long, value_enum)]
    pub detector: Option<Technique>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write the stats here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub sentence: String,
    #[arg(long)]
    pub image: String,
    #[arg(long, value_enum)]
    pub technique: Option<Technique>,
    #[command(flatten)]
    pub resources: ResourceArgs,
}

#[derive(Debug, Args)]
pub struct BleuArgs {
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
}

impl ResourceArgs {
    fn layer(&self) -> Layer {
        Layer {
            wordnet_dir: self.wordnet_dir.clone(),
            label_table: self.label_table.clone(),
            stop_list: self.stop_list.clone(),
            concrete_threshold: self.concrete_threshold.clone(),
            confidence_threshold: self.confidence_threshold,
            grounding_fixtures: self.grounding_fixtures.clone(),
            grounding_endpoint: self.grounding_endpoint.clone(),
            strict_fixtures: self.strict_fixtures.then_some(true),
            inline_images: self.inline_images.then_some(true),
            grounding_timeout: self.grounding_timeout,
            max_inflight: self.max_inflight,
            retries: self.retries,
            ..Layer::default()
        }
    }
}

/// Loaded resources shared by the detection subcommands.
struct Resources {
    graph: Arc<WordNetGraph>,
    detectors: Detectors,
    inputs: Vec<InputDigest>,
}

fn open_text(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))
}

fn load_resources(settings: &Settings, technique: Technique, digests: bool) -> Result<Resources, CliError> {
    let dir = settings.wordnet_dir.as_ref().ok_or_else(|| {
        CliError::Usage(format!("no WordNet directory: pass --wordnet-dir or set {ENV_WORDNET_DIR}"))
    })?;
    let mut inputs = Vec::new();
    let mut note = |role: &str, path: &Path| -> Result<(), CliError> {
        if digests {
            inputs.push(manifest::digest(role, path)?);
        }
        Ok(())
    };
    let graph = Arc::new(WordNetGraph::open_dir(dir)?);
    note("wordnet-index", &dir.join("index.noun"))?;
    note("wordnet-data", &dir.join("data.noun"))?;

    let label_table = match &settings.label_table {
        Some(path) => {
            note("label-table", path)?;
            load_label_table(open_text(path)?)?
        }
        None => HypernymLabelTable::builtin(),
    };
    let stop_list = match &settings.stop_list {
        Some(path) => {
            note("stop-list", path)?;
            StopList::load(open_text(path)?)?
        }
        None => StopList::builtin(),
    };
    let classifier = Classifier::new(
        graph.clone(),
        ConcretenessConfig {
            threshold: settings.concrete_threshold,
            label_table: Arc::new(label_table),
        },
    );
    let mut detectors = Detectors::new(Arc::new(classifier), Arc::new(stop_list))
        .with_confidence_threshold(settings.confidence_threshold);
    if technique.needs_grounding() {
        let provider = build_provider(settings)?;
        if let Some(path) = &settings.grounding_fixtures {
            note("grounding-fixtures", path)?;
        }
        detectors = detectors.with_provider(provider);
    }
    Ok(Resources {
        graph,
        detectors,
        inputs,
    })
}

fn build_provider(settings: &Settings) -> Result<Arc<dyn GroundingProvider>, CliError> {
    let mut config = match (&settings.grounding_fixtures, &settings.grounding_endpoint) {
        (Some(path), _) => ProviderConfig::fixture(path),
        (None, Some(endpoint)) => ProviderConfig::remote(endpoint),
        (None, None) => {
            return Err(CliError::Usage(format!(
                "this detector needs grounding: pass --grounding-fixtures or --grounding-endpoint \
                 (or set {ENV_GROUNDING_FIXTURES} / {ENV_GROUNDING_ENDPOINT})"
            )))
        }
    };
    config.timeout = settings.grounding_timeout;
    config.max_inflight = settings.max_inflight;
    config.retries = settings.retries;
    if settings.strict_fixtures {
        config.miss_mode = MissMode::Strict;
    }
    if settings.inline_images {
        config.image_payload = ImagePayload::Base64;
    }
    Ok(config.build()?)
}

fn corpus_entries(
    args: &CorpusArgs,
    inputs: &mut Vec<InputDigest>,
) -> Result<Box<dyn Iterator<Item = Result<CorpusEntry, CollationError>>>, CliError> {
    match (&args.corpus, &args.src, &args.tgt, &args.images) {
        (Some(path), ..) => {
            inputs.push(manifest::digest("corpus", path)?);
            Ok(Box::new(open_jsonl(path)?))
        }
        (None, Some(src), Some(tgt), Some(images)) => {
            for (role, p) in [("corpus-src", src), ("corpus-tgt", tgt), ("corpus-images", images)] {
                inputs.push(manifest::digest(role, p)?);
            }
            Ok(Box::new(read_parallel_text(src, tgt, images)?.into_iter().map(Ok)))
        }
        _ => Err(CliError::Usage("pass --corpus, or --src with --tgt and --images".into())),
    }
}

fn layered(cli_config: Option<&Path>, env: &dyn Fn(&str) -> Option<String>, flags: Layer) -> Result<Settings, CliError> {
    let mut layer = Layer::default();
    if let Some(path) = cli_config {
        layer = layer.overlay(Layer::from_file(path)?);
    }
    layer = layer.overlay(Layer::from_env(env)).overlay(flags);
    Settings::resolve(layer)
}

fn command_line(args: &[OsString]) -> String {
    args.iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_json_line<W: Write + ?Sized, T: serde::Serialize>(w: &mut W, value: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
}

/// Resolve settings for a parsed command line. Exposed so the precedence
/// rules can be checked without running anything.
pub fn resolve_settings(cli: &Cli, env: &dyn Fn(&str) -> Option<String>) -> Result<Settings, CliError> {
    let flags = match &cli.command {
        Command::Collate(a) => Layer {
            detector: a.detector,
            selector: a.selector,
            n: a.n,
            seed: a.seed,
            mask_token: a.mask_token.clone(),
            passthrough: a.passthrough.then_some(true),
            workers: a.workers,
            ..a.resources.layer()
        },
        Command::Stats(a) => Layer {
            detector: a.detector,
            workers: a.workers,
            ..a.resources.layer()
        },
        Command::Detect(a) => Layer {
            detector: a.technique,
            ..a.resources.layer()
        },
        Command::Bleu(_) | Command::Fixtures { .. } => Layer::default(),
    };
    layered(cli.config.as_deref(), env, flags)
}

/// Parse `args` and run the subcommand. Returns the process exit code.
pub fn run<I, T>(args: I, env: &dyn Fn(&str) -> Option<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    let level = if cli.verbose { "debug" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();

    match dispatch(&cli, &args, env, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, args: &[OsString], env: &dyn Fn(&str) -> Option<String>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Collate(a) => collate(a, &resolve_settings(cli, env)?, args),
        Command::Stats(a) => stats(a, &resolve_settings(cli, env)?, args, stdout),
        Command::Detect(a) => detect(a, &resolve_settings(cli, env)?, stdout),
        Command::Bleu(a) => bleu(a, stdout),
        Command::Fixtures {
            command: FixturesCommand::Validate { fixtures },
        } => validate_fixtures(fixtures, stdout),
    }
}

fn collate(args: &CollateArgs, settings: &Settings, argv: &[OsString]) -> Result<(), CliError> {
    let started_at = manifest::now();
    let selection = SelectionConfig::new(settings.selector, settings.n, settings.seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let config = CollationConfig {
        technique: settings.detector,
        selection,
        mask_token: settings.mask_token.clone(),
        passthrough: settings.passthrough,
        workers: settings.workers,
    };
    let resources = load_resources(settings, settings.detector, true)?;
    let mut inputs = resources.inputs;
    let entries = corpus_entries(&args.corpus, &mut inputs)?;
    let collator = Collator::new(resources.detectors, config)?;

    let mut out = BufWriter::new(File::create(&args.out)?);
    let sidecar = quarantine_path(&args.out);
    let _ = std::fs::remove_file(&sidecar);
    let mut errors: Option<BufWriter<File>> = None;
    let summary = collator.collate(
        entries,
        |v| write_json_line(&mut out, v),
        |q| {
            if errors.is_none() {
                errors = Some(BufWriter::new(File::create(&sidecar)?));
            }
            write_json_line(errors.as_mut().expect("opened above"), q)
        },
    )?;
    out.flush()?;
    if let Some(mut e) = errors {
        e.flush()?;
    }
    log::info!(
        "{} entries, {} variants, {} without detections, {} quarantined",
        summary.entries,
        summary.variants,
        summary.without_detection,
        summary.quarantined
    );

    let manifest = RunManifest {
        tool: "vismask",
        tool_version: env!("CARGO_PKG_VERSION"),
        command: command_line(argv),
        config: serde_json::to_value(settings).expect("settings serialize"),
        inputs,
        wordnet_version: resources.graph.version().to_string(),
        seed: settings.seed,
        started_at,
        finished_at: manifest::now(),
        summary: serde_json::to_value(summary).expect("summary serializes"),
    };
    let path = args.manifest.clone().unwrap_or_else(|| manifest_path(&args.out));
    std::fs::write(path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    Ok(())
}

fn stats(args: &StatsArgs, settings: &Settings, argv: &[OsString], stdout: &mut dyn Write) -> Result<(), CliError> {
    let started_at = manifest::now();
    let resources = load_resources(settings, settings.detector, true)?;
    let mut inputs = resources.inputs;
    let entries = corpus_entries(&args.corpus, &mut inputs)?;
    let mut config = CollationConfig::new(settings.detector, SelectionConfig::default());
    config.workers = settings.workers;
    let collator = Collator::new(resources.detectors, config)?;
    let mut quarantined = Vec::new();
    let stats = collator.compute_stats(entries, |q| {
        quarantined.push(q.clone());
        Ok(())
    })?;
    let text = serde_json::to_string_pretty(&stats).expect("stats serialize");
    match &args.out {
        Some(path) => {
            std::fs::write(path, format!("{text}\n"))?;
            if !quarantined.is_empty() {
                let mut w = BufWriter::new(File::create(quarantine_path(path))?);
                for q in &quarantined {
                    write_json_line(&mut w, q)?;
                }
                w.flush()?;
            }
        }
        None => writeln!(stdout, "{text}")?,
    }
    for q in &quarantined {
        log::warn!("entry {:?} quarantined: {}", q.entry_id, q.error);
    }
    let manifest_at = args
        .manifest
        .clone()
        .or_else(|| args.out.as_deref().map(manifest_path));
    if let Some(path) = manifest_at {
        let manifest = RunManifest {
            tool: "vismask",
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command_line(argv),
            config: serde_json::to_value(settings).expect("settings serialize"),
            inputs,
            wordnet_version: stats.wordnet_version.clone(),
            seed: settings.seed,
            started_at,
            finished_at: manifest::now(),
            summary: serde_json::to_value(&stats).expect("stats serialize"),
        };
        std::fs::write(path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    }
    Ok(())
}

fn detect(args: &DetectArgs, settings: &Settings, stdout: &mut dyn Write) -> Result<(), CliError> {
    let resources = load_resources(settings, settings.detector, false)?;
    let outcomes = resources
        .detectors
        .detect(settings.detector, &args.sentence, &args.image)?;
    for o in &outcomes {
        write_json_line(stdout, o)?;
    }
    Ok(())
}

fn bleu(args: &BleuArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("cannot read {}: {e}", p.display())))
    };
    let hyp = whitespace_tokens(&read(&args.hyp)?);
    let reference = whitespace_tokens(&read(&args.reference)?);
    let report = bleu4(&hyp, &reference).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(stdout, "{}", serde_json::to_string(&report).expect("report serializes"))?;
    Ok(())
}

fn validate_fixtures(path: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let provider = load_fixtures(path)?;
    let report = serde_json::json!({
        "path": path,
        "records": provider.len(),
        "duplicates": provider.duplicates(),
    });
    writeln!(stdout, "{report}")?;
    Ok(())
}
