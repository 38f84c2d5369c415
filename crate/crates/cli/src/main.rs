//! `divmeter`: ingest conference data, print indices, export snapshots and
//! run the HTTP API.
//!
//! Exit codes: 0 ok, 1 usage or other error, 2 unparseable input, 3 vault
//! locked, 4 conflict or store busy, 5 not found, 6 cannot bind, 7 name leak.

mod output;

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use divmeter_api::{contribute, views, ApiConfig, ApiError, ErrorKind, Pipeline, Submission, TOKEN_ENV};
use divmeter_core::{CountryCode, EditionId, VaultKey, Venue};
use divmeter_ingest::{GenderProvider, HttpGenderProvider, IngestOptions, InstitutionRegistry, LexiconProvider};
use divmeter_store::{canonical_json, Store, StoreError};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "divmeter", version, about = "Diversity indices for conference editions")]
struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = "DIVMETER_STORE", default_value = "divmeter-store")]
    store: PathBuf,
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, enrich and store one edition, then print the ingest report.
    Ingest(IngestArgs),
    /// Print the diversity report of an edition.
    Report {
        #[command(flatten)]
        edition: EditionArgs,
        #[arg(long)]
        json: bool,
    },
    /// Print per-role percentages and country counts as JSON.
    Distributions {
        #[command(flatten)]
        edition: EditionArgs,
    },
    /// Print the CDI of every edition of a conference as JSON.
    Timeline {
        #[arg(long)]
        conference: String,
    },
    /// Print where an edition's CDI sits among all editions, as JSON.
    Context {
        #[command(flatten)]
        edition: EditionArgs,
    },
    /// List conferences as JSON.
    Conferences {
        /// Case-insensitive substring of slug or name.
        #[arg(long, short, default_value = "")]
        query: String,
    },
    /// Write the public snapshot of the whole store.
    Export {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP API until interrupted.
    Serve(ServeArgs),
}

#[derive(Args)]
struct EditionArgs {
    #[arg(long)]
    conference: String,
    #[arg(long)]
    year: String,
}

#[derive(Args)]
struct PipelineArgs {
    /// Institution registry CSV (canonical,aliases,type,country).
    #[arg(long)]
    registry: PathBuf,
    /// Offline given-name lexicon CSV (given_name,category,confidence).
    #[arg(long, conflicts_with = "provider_url")]
    lexicon: Option<PathBuf>,
    /// Remote name-to-gender service; key from DIVMETER_PROVIDER_KEY.
    #[arg(long)]
    provider_url: Option<String>,
    /// Minimum confidence for an inferred gender label.
    #[arg(long, default_value_t = 0.8)]
    threshold: f64,
    /// Venue country (alpha-2) or "virtual".
    #[arg(long)]
    venue: Option<String>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("input").required(true).multiple(true).args(["dblp", "annotations"]))]
struct IngestArgs {
    #[arg(long)]
    conference: String,
    #[arg(long)]
    year: i32,
    /// Display name for a conference seen for the first time.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    dblp: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    affiliations: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "DIVMETER_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Accept contributions using this registry; without it the API is read-only.
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long, requires = "registry", conflicts_with = "provider_url")]
    lexicon: Option<PathBuf>,
    #[arg(long, requires = "registry")]
    provider_url: Option<String>,
    #[arg(long, default_value_t = 0.8)]
    threshold: f64,
    /// Shared contribution token.
    #[arg(long, env = TOKEN_ENV, hide_env_values = true)]
    token: Option<String>,
    /// Contributions per client address and minute (0: unlimited).
    #[arg(long, default_value_t = 30)]
    rate_limit: u32,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        let code = match e.kind {
            ErrorKind::Unprocessable => 2,
            ErrorKind::VaultLocked => 3,
            ErrorKind::Conflict | ErrorKind::Busy => 4,
            ErrorKind::NotFound | ErrorKind::NoComparableData => 5,
            ErrorKind::LeakDetected => 7,
            _ => 1,
        };
        let mut message = format!("error: {}", e.message);
        if let Some(details) = &e.details {
            message.push_str(&format!("\n{}", canonical_json(details).trim_end()));
        }
        Self { code, message }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        ApiError::from(e).into()
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
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let key = VaultKey::from_env();
    match cli.command {
        Command::Ingest(args) => ingest(&cli.store, key, args),
        Command::Report { edition, json } => {
            let store = open(&cli.store, key)?;
            let id = edition_id(&edition)?;
            let report = views::report(&store, &id)?;
            if json {
                print!("{}", canonical_json(&report));
            } else {
                let revision = store.get_edition(&id, None)?.revision;
                print!("{}", output::report_table(&id, revision, &report));
            }
            Ok(())
        }
        Command::Distributions { edition } => {
            let store = open(&cli.store, key)?;
            print_json(views::distributions(&store, &edition_id(&edition)?)?)
        }
        Command::Timeline { conference } => {
            print_json(views::conference_timeline(&open(&cli.store, key)?, &conference)?)
        }
        Command::Context { edition } => {
            let store = open(&cli.store, key)?;
            print_json(views::context(&store, &edition_id(&edition)?)?)
        }
        Command::Conferences { query } => print_json(views::conferences(&open(&cli.store, key)?, &query)?),
        Command::Export { out } => {
            let snapshot = open(&cli.store, key)?.export_public(&out)?;
            let editions: usize = snapshot.conferences.iter().map(|c| c.editions.len()).sum();
            eprintln!("wrote {} ({} conferences, {editions} editions)", out.display(), snapshot.conferences.len());
            Ok(())
        }
        Command::Serve(args) => serve(&cli.store, key, args),
    }
}

fn print_json(value: Value) -> Result<(), Failure> {
    print!("{}", canonical_json(&value));
    Ok(())
}

fn open(dir: &Path, key: Option<VaultKey>) -> Result<Store, Failure> {
    Ok(Store::open(dir, key)?)
}

fn edition_id(args: &EditionArgs) -> Result<EditionId, Failure> {
    Ok(views::edition_id(&args.conference, &args.year)?)
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::new(1, format!("error: cannot read {}: {e}", path.display())))
}

fn parse_venue(s: &str) -> Result<Venue, Failure> {
    if s.eq_ignore_ascii_case("virtual") {
        return Ok(Venue::Virtual);
    }
    CountryCode::parse(s).map(Venue::Physical).map_err(|_| {
        Failure::new(1, format!("error: --venue expects an alpha-2 country code or \"virtual\", got {s:?}"))
    })
}

fn load_pipeline(
    registry: &Path,
    lexicon: Option<&Path>,
    provider_url: Option<&str>,
    threshold: f64,
    venue: Venue,
) -> Result<Pipeline, Failure> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Failure::new(1, "error: --threshold must lie in [0, 1]"));
    }
    let registry = InstitutionRegistry::from_csv(&read(registry)?[..]).map_err(ApiError::from)?;
    let provider: Option<Box<dyn GenderProvider>> = match (lexicon, provider_url) {
        (Some(path), _) => Some(Box::new(LexiconProvider::from_csv(&read(path)?[..]).map_err(ApiError::from)?)),
        (None, Some(url)) => Some(Box::new(HttpGenderProvider::from_env(url))),
        (None, None) => None,
    };
    Ok(Pipeline { registry, provider, options: IngestOptions { gender_threshold: threshold, venue } })
}

fn ingest(dir: &Path, key: Option<VaultKey>, args: IngestArgs) -> Result<(), Failure> {
    let p = &args.pipeline;
    let venue = p.venue.as_deref().map(parse_venue).transpose()?.unwrap_or(Venue::Unknown);
    let pipeline = load_pipeline(&p.registry, p.lexicon.as_deref(), p.provider_url.as_deref(), p.threshold, venue)?;
    let dblp = args.dblp.as_deref().map(read).transpose()?;
    let annotations = args.annotations.as_deref().map(read).transpose()?;
    let affiliations = args.affiliations.as_deref().map(read).transpose()?;

    let store = Store::create(dir, key)?;
    let contribution = contribute(
        &store,
        &pipeline,
        Submission {
            conference: &args.conference,
            year: args.year,
            conference_name: args.name.as_deref(),
            dblp: dblp.as_deref(),
            annotations: annotations.as_deref(),
            affiliations: affiliations.as_deref(),
        },
    )?;
    let value = serde_json::to_value(&contribution).expect("contributions serialize");
    if args.json {
        print!("{}", canonical_json(&value));
    } else {
        print!("{}", output::ingest_table(&value));
    }
    Ok(())
}

fn serve(dir: &Path, key: Option<VaultKey>, args: ServeArgs) -> Result<(), Failure> {
    let store = Arc::new(open(dir, key)?);
    if !store.is_unlocked() {
        log::warn!("vault key not set; contributions will be refused");
    }
    let pipeline = match &args.registry {
        Some(registry) => Some(load_pipeline(
            registry,
            args.lexicon.as_deref(),
            args.provider_url.as_deref(),
            args.threshold,
            Venue::Unknown,
        )?),
        None => None,
    };
    if pipeline.is_some() && args.token.as_deref().is_none_or(str::is_empty) {
        log::warn!("{TOKEN_ENV} not set; contributions will be refused");
    }
    let config = ApiConfig { token: args.token.clone(), contributions_per_minute: args.rate_limit };
    let app = divmeter_api::router(store, pipeline, config);

    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::new(1, format!("error: {e}")))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.listen)
            .await
            .map_err(|e| Failure::new(6, format!("error: cannot listen on {}: {e}", args.listen)))?;
        let addr = listener.local_addr().map_err(|e| Failure::new(6, format!("error: {e}")))?;
        eprintln!("listening on http://{addr}");
        divmeter_api::serve(listener, app, shutdown_signal())
            .await
            .map_err(|e| Failure::new(1, format!("error: server failed: {e}")))
    })
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
    log::info!("shutting down");
}
