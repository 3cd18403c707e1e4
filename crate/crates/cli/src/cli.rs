use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ontopurify_core::owl::{self, Format};
use ontopurify_core::{
    find_mismatches, purify, search, DiffError, Execution, MismatchReport, Ontology, OwlError,
    PurifyError, Query, SearchError, SearchOutcome,
};
use ontopurify_service::{Config, StartupError};
use serde_json::json;

use crate::bench::{self, BenchConfig};

pub mod exit {
    pub const OK: u8 = 0;
    pub const VIOLATIONS: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const MISMATCH: u8 = 3;
    pub const INCOMPATIBLE: u8 = 4;
    pub const SELF_CHECK: u8 = 5;
}

#[derive(Debug, Parser)]
#[command(
    name = "ontopurify",
    version,
    about = "Ontology diff, purification and domain search"
)]
pub struct Cli {
    /// Input format; sniffed from the content when omitted.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Owl,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Owl => Format::Owl,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report every structural violation (exit 1 if any).
    Validate { path: PathBuf },
    /// Print the node total N.
    Count { path: PathBuf },
    /// Mismatches between a local copy and a reference (exit 3 if mi > 0).
    Diff { local: PathBuf, reference: PathBuf },
    /// Repair a local copy until it matches the reference.
    Purify {
        local: PathBuf,
        reference: PathBuf,
        /// Where to write the purified ontology.
        #[arg(long)]
        out: PathBuf,
    },
    /// Keyword search within one domain.
    Search {
        path: PathBuf,
        query: String,
        /// Defaults to the ontology's own domain.
        #[arg(long)]
        domain: Option<String>,
        /// Reference consulted when the local copy has no answer.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Ontology-guided vs keyword retrieval on a synthetic corpus (CSV).
    Bench {
        ontology: PathBuf,
        #[arg(long, default_value_t = 1000)]
        pages: usize,
        #[arg(long, default_value_t = 50)]
        queries: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Use this label for every query instead of sampling node labels.
        #[arg(long)]
        query: Option<String>,
        /// Run queries one at a time.
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// TOML file with snapshot_path, reference_path_or_url, bind_addr,
    /// admin_token_env and auto_purify.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub snapshot: Option<PathBuf>,
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long)]
    pub bind: Option<SocketAddr>,
    /// Environment variable holding the admin token.
    #[arg(long)]
    pub token_env: Option<String>,
    #[arg(long)]
    pub no_auto_purify: bool,
}

/// A failure already mapped to its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn input(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::new(exit::INPUT, format!("{}: {err}", path.display()))
    }
}

impl From<DiffError> for Failure {
    fn from(err: DiffError) -> Self {
        let code = match err {
            DiffError::IncompatibleVersions { .. } => exit::INCOMPATIBLE,
            _ => exit::SELF_CHECK,
        };
        Self::new(code, err.to_string())
    }
}

impl From<PurifyError> for Failure {
    fn from(err: PurifyError) -> Self {
        match err {
            PurifyError::Diff(e) => e.into(),
            PurifyError::EmptyReference => Self::new(exit::INPUT, err.to_string()),
            PurifyError::NonConvergence { .. } => Self::new(exit::SELF_CHECK, err.to_string()),
        }
    }
}

impl From<SearchError> for Failure {
    fn from(err: SearchError) -> Self {
        match err {
            SearchError::Diff(e) => e.into(),
            other => Self::new(exit::INPUT, other.to_string()),
        }
    }
}

impl From<StartupError> for Failure {
    fn from(err: StartupError) -> Self {
        Self::new(exit::INPUT, err.to_string())
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(path, e))
}

impl Cli {
    fn format_of(&self, text: &str) -> Format {
        self.format
            .map_or_else(|| Format::sniff(text), Format::from)
    }

    fn load(&self, path: &Path) -> Result<(Ontology, Format), Failure> {
        let text = read(path)?;
        let format = self.format_of(&text);
        let o = owl::parse(&text, format).map_err(|e: OwlError| Failure::input(path, e))?;
        Ok((o, format))
    }

    pub fn run(&self) -> Outcome {
        match &self.command {
            Command::Validate { path } => self.validate(path),
            Command::Count { path } => self.count(path),
            Command::Diff { local, reference } => self.diff(local, reference),
            Command::Purify {
                local,
                reference,
                out,
            } => self.purify(local, reference, out),
            Command::Search {
                path,
                query,
                domain,
                reference,
            } => self.search(path, query, domain.as_deref(), reference.as_deref()),
            Command::Serve(args) => serve(args),
            Command::Bench {
                ontology,
                pages,
                queries,
                seed,
                query,
                sequential,
            } => {
                if *pages == 0 || *queries == 0 {
                    return Err(Failure::new(
                        exit::INPUT,
                        "--pages and --queries must be at least 1",
                    ));
                }
                let (o, _) = self.load(ontology)?;
                let config = BenchConfig {
                    pages: *pages,
                    queries: *queries,
                    seed: *seed,
                    query: query.clone(),
                    exec: if *sequential {
                        Execution::Sequential
                    } else {
                        Execution::default()
                    },
                };
                print!("{}", bench::to_csv(&bench::run(&o, &config)));
                Ok(exit::OK)
            }
        }
    }

    fn validate(&self, path: &Path) -> Outcome {
        let text = read(path)?;
        let doc = owl::parse_document(&text, self.format_of(&text))
            .map_err(|e| Failure::input(path, e))?;
        let violations = doc.into_ontology_lenient().validate();
        if self.json {
            println!("{}", json!({ "violations": violations }));
        } else if violations.is_empty() {
            println!("ok");
        } else {
            for v in &violations {
                println!("{v}");
            }
        }
        Ok(if violations.is_empty() {
            exit::OK
        } else {
            exit::VIOLATIONS
        })
    }

    fn count(&self, path: &Path) -> Outcome {
        let (o, _) = self.load(path)?;
        let n = o.count_nodes();
        if self.json {
            println!("{}", json!({ "N": n }));
        } else {
            println!("{n}");
        }
        Ok(exit::OK)
    }

    fn diff(&self, local: &Path, reference: &Path) -> Outcome {
        let (l, _) = self.load(local)?;
        let (r, _) = self.load(reference)?;
        let report = find_mismatches(&l, &r)?;
        if self.json {
            println!(
                "{}",
                serde_json::to_string(&report).expect("report serializes")
            );
        } else {
            print!("{}", render_table(&report));
            println!("{}", report.summary());
        }
        Ok(if report.is_clean() {
            exit::OK
        } else {
            exit::MISMATCH
        })
    }

    fn purify(&self, local: &Path, reference: &Path, out: &Path) -> Outcome {
        let (l, format) = self.load(local)?;
        let (r, _) = self.load(reference)?;
        let result = purify(&l, &r)?;
        let out_format = match out.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            Some("owl" | "rdf" | "xml") => Format::Owl,
            _ => format,
        };
        let text = owl::serialize(&result.purified, out_format);
        std::fs::write(out, &text).map_err(|e| Failure::input(out, e))?;

        // self-check on what actually landed on disk
        let written = owl::parse(&read(out)?, out_format).map_err(|e| {
            Failure::new(
                exit::SELF_CHECK,
                format!("purified output does not parse: {e}"),
            )
        })?;
        let check = find_mismatches(&written, &r)?;
        if !check.is_clean() || !written.canonical_eq(&r) {
            return Err(Failure::new(
                exit::SELF_CHECK,
                format!(
                    "self-check failed: purified output still differs ({})",
                    check.summary()
                ),
            ));
        }
        if self.json {
            let body = json!({
                "patchLog": result.log,
                "initial": result.initial,
                "final": check,
                "iterations": result.iterations,
            });
            println!("{body}");
        } else {
            for patch in &result.log {
                println!("{:>4}  {}", patch.seq, patch.op);
            }
            println!(
                "initial {}; {} ops in {} iterations",
                result.initial.summary(),
                result.log.len(),
                result.iterations
            );
            println!("mi = 0");
        }
        Ok(exit::OK)
    }

    fn search(
        &self,
        path: &Path,
        raw: &str,
        domain: Option<&str>,
        reference: Option<&Path>,
    ) -> Outcome {
        let (o, _) = self.load(path)?;
        let reference = reference
            .map(|p| self.load(p).map(|(r, _)| r))
            .transpose()?;
        let query = Query::new(raw, domain.unwrap_or(o.domain()))?;
        let outcome = search::search(&o, reference.as_ref(), &query)?;
        if self.json {
            println!(
                "{}",
                serde_json::to_string(&outcome).expect("outcome serializes")
            );
            return Ok(exit::OK);
        }
        match &outcome {
            SearchOutcome::Hits(results) => {
                for r in results {
                    let links: Vec<String> = r.links.iter().map(ToString::to_string).collect();
                    println!(
                        "{:>5}  {:>4}  {}  [{}]",
                        r.score.to_string(),
                        r.id,
                        r.path.join(" > "),
                        links.join(" ")
                    );
                }
            }
            SearchOutcome::NoMatch => println!("no match"),
            SearchOutcome::NeedsPurification(report) => {
                println!(
                    "mismatched ontology: {}; purify against the reference",
                    report.summary()
                )
            }
        }
        Ok(exit::OK)
    }
}

fn cell(s: &str, width: usize) -> String {
    let shown: String = s.chars().take(width).collect();
    format!("{shown:<width$}")
}

pub fn render_table(report: &MismatchReport) -> String {
    let mut out = format!(
        "{:>6}  {}  {}  {}\n",
        "id",
        cell("kinds", 28),
        cell("local label", 24),
        "reference label"
    );
    for m in report.mismatches() {
        let kinds: Vec<String> = m.kinds.iter().map(ToString::to_string).collect();
        let label = |r: &Option<ontopurify_core::NodeRecord>| {
            r.as_ref()
                .map_or_else(|| "-".to_string(), |n| n.label.clone())
        };
        out.push_str(&format!(
            "{:>6}  {}  {}  {}\n",
            m.id,
            cell(&kinds.join(","), 28),
            cell(&label(&m.local), 24),
            label(&m.reference)
        ));
    }
    out
}

fn serve(args: &ServeArgs) -> Outcome {
    let mut config = match (&args.config, &args.snapshot) {
        (Some(path), _) => Config::load(path)?,
        (None, Some(snapshot)) => Config::new(snapshot.clone()),
        (None, None) => {
            return Err(Failure::new(
                exit::INPUT,
                "--config or --snapshot is required",
            ))
        }
    };
    if let Some(s) = &args.snapshot {
        config.snapshot_path = s.clone();
    }
    if let Some(r) = &args.reference {
        config.reference_path_or_url = Some(r.clone());
    }
    if let Some(b) = args.bind {
        config.bind_addr = b;
    }
    if let Some(t) = &args.token_env {
        config.admin_token_env = t.clone();
    }
    if args.no_auto_purify {
        config.auto_purify = false;
    }
    let rt = tokio::runtime::Runtime::new()
        .map_err(|e| Failure::new(exit::INPUT, format!("cannot start runtime: {e}")))?;
    rt.block_on(async {
        let (running, _) = ontopurify_service::start(&config).await?;
        eprintln!("listening on {}", running.base_url());
        let _ = tokio::signal::ctrl_c().await;
        running
            .shutdown()
            .await
            .map_err(|e| Failure::new(exit::INPUT, e.to_string()))?;
        Ok(exit::OK)
    })
}
