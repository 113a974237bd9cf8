use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use hazlab::clock::{Clock, FixedClock, SystemClock};
use hazlab::generate::{GenerationSummary, RouteSummary, Strategy};
use hazlab::hazlang::{check_sources, parse, print, CheckOutcome, SourceFile};
use hazlab::model::Project;
use hazlab::review::{
    export_worksheet, summary_report, DecisionCommand, ProjectStore, StoreError, Verdict,
    WorksheetFormat,
};

#[derive(Parser)]
#[command(
    name = "hazlab",
    version,
    about = "Scenario-based hazard identification workbench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SheetFormat {
    Csv,
    Json,
}

impl From<SheetFormat> for WorksheetFormat {
    fn from(f: SheetFormat) -> Self {
        match f {
            SheetFormat::Csv => WorksheetFormat::Csv,
            SheetFormat::Json => WorksheetFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Deviation,
    Malfunction,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerdictArg {
    Hazardous,
    NotHazardous,
}

#[derive(clap::Args)]
struct ProjectArg {
    /// Project file (`<name>.hazproj.json`).
    #[arg(long, env = "HAZLAB_PROJECT")]
    project: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, resolve and validate model files.
    Check {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
    /// Print model files in canonical form.
    Fmt {
        path: PathBuf,
        /// Rewrite the file in place.
        #[arg(long)]
        write: bool,
    },
    /// Generate PHS from model files into a project file.
    Generate {
        paths: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "deviation")]
        strategy: StrategyArg,
        /// Malfunction catalog id or name; all catalogs when omitted.
        #[arg(long)]
        catalog: Option<String>,
        /// Existing project to regenerate; its review work is kept.
        #[arg(long, env = "HAZLAB_PROJECT")]
        project: Option<PathBuf>,
        /// Output file. Defaults to the project, else `<first file stem>.hazproj.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
    /// Record a decision on one PHS.
    Decide {
        phs: String,
        #[arg(long, value_enum)]
        status: VerdictArg,
        #[arg(long, default_value = "")]
        rationale: String,
        #[arg(long, env = "HAZLAB_REVIEWER", default_value = "")]
        reviewer: String,
        /// Version the decision is based on; the current one when omitted.
        #[arg(long)]
        expected_version: Option<u64>,
        #[command(flatten)]
        project: ProjectArg,
    },
    /// Write the review worksheet.
    Export {
        #[arg(long, value_enum, default_value = "csv")]
        format: SheetFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        project: ProjectArg,
    },
    /// Apply an edited worksheet.
    Import {
        file: PathBuf,
        /// Detected from the content when omitted.
        #[arg(long, value_enum)]
        format: Option<SheetFormat>,
        #[arg(long, env = "HAZLAB_REVIEWER", default_value = "")]
        reviewer: String,
        #[command(flatten)]
        project: ProjectArg,
    },
    /// Link hazards to the malfunctions that can cause their deviation.
    Trace {
        /// Hazard ids; all hazards when omitted.
        hazards: Vec<String>,
        #[arg(long)]
        catalog: Option<String>,
        #[command(flatten)]
        project: ProjectArg,
    },
    /// Summarize review progress.
    Report {
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
        #[command(flatten)]
        project: ProjectArg,
    },
    /// Serve the JSON API for the review UI.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        #[command(flatten)]
        project: ProjectArg,
    },
}

fn clock() -> Result<Arc<dyn Clock>> {
    match std::env::var("HAZLAB_CLOCK") {
        Ok(t) if !t.is_empty() => {
            Ok(Arc::new(FixedClock::parse(&t).with_context(|| {
                format!("HAZLAB_CLOCK `{t}` is not RFC 3339")
            })?))
        }
        _ => Ok(Arc::new(SystemClock)),
    }
}

fn open(project: &ProjectArg) -> Result<ProjectStore> {
    Ok(ProjectStore::open(&project.project)?.with_clock(clock()?))
}

fn read_sources(paths: &[PathBuf]) -> Result<Vec<SourceFile>, (String, String)> {
    let mut files = Vec::new();
    for p in paths {
        let shown = p.display().to_string();
        let bytes = fs::read(p).map_err(|e| (shown.clone(), e.to_string()))?;
        match SourceFile::from_bytes(shown.clone(), &bytes) {
            Ok(f) => files.push(f),
            Err(d) => return Err((shown.clone(), d.render(&shown))),
        }
    }
    Ok(files)
}

fn project_name(paths: &[PathBuf]) -> String {
    paths
        .first()
        .and_then(|p| p.file_name())
        .and_then(|n| n.to_str())
        .map(|n| n.split('.').next().unwrap_or(n).to_owned())
        .unwrap_or_else(|| "project".to_owned())
}

fn report_findings(out: &CheckOutcome, format: OutputFormat) {
    match format {
        OutputFormat::Text => {
            for f in &out.findings {
                eprintln!("{f}");
            }
            let errors = out.findings.iter().filter(|f| f.is_error()).count();
            let warnings = out.findings.len() - errors;
            eprintln!("{errors} error(s), {warnings} warning(s)");
        }
        OutputFormat::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&out.findings).expect("findings serialize")
            );
        }
    }
}

fn cmd_check(paths: &[PathBuf], format: OutputFormat) -> ExitCode {
    let files = match read_sources(paths) {
        Ok(f) => f,
        Err((path, msg)) => {
            eprintln!("{path}: {msg}");
            return ExitCode::from(2);
        }
    };
    let out = check_sources(&files, &project_name(paths));
    report_findings(&out, format);
    if out.has_errors() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_fmt(path: &Path, write: bool) -> Result<ExitCode> {
    let files = read_sources(&[path.to_owned()]).map_err(|(p, m)| anyhow!("{p}: {m}"))?;
    let (tree, diags) = parse(&files[0]);
    for d in &diags {
        eprintln!("{}", d.render(&files[0].path));
    }
    let Some(tree) = tree else {
        return Ok(ExitCode::from(1));
    };
    let text = print(&tree);
    if write {
        fs::write(path, text).with_context(|| path.display().to_string())?;
    } else {
        print!("{text}");
    }
    Ok(ExitCode::SUCCESS)
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

fn route_line(r: &RouteSummary) -> String {
    format!(
        "{} PHS ({})",
        r.total,
        plural(r.distinct_deviations, "distinct deviation")
    )
}

fn print_generation(s: &GenerationSummary, format: OutputFormat) {
    if let OutputFormat::Json = format {
        println!(
            "{}",
            serde_json::to_string_pretty(s).expect("summary serializes")
        );
        return;
    }
    match (&s.deviation, &s.malfunction) {
        (Some(d), Some(m)) => {
            println!("deviation route: {}", route_line(d));
            println!("malfunction route: {}", route_line(m));
        }
        (Some(r), None) | (None, Some(r)) => println!("{}", route_line(r)),
        (None, None) => {}
    }
    for c in &s.comparisons {
        println!(
            "catalog {}: count_PM {}, distinct_behaviors_PM {}, count_PD {}, reduction_ratio {:.1}, coverage_gaps {}",
            c.catalog,
            c.count_pm,
            c.distinct_behaviors_pm,
            c.count_pd,
            c.reduction_ratio,
            c.coverage_gaps.len()
        );
        for g in &c.coverage_gaps {
            let ms: Vec<_> = g.malfunctions.iter().map(|m| m.as_str()).collect();
            println!(
                "  gap {}/{} {}: {}",
                g.scenario,
                g.segment,
                g.deviation,
                ms.join(", ")
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    paths: &[PathBuf],
    strategy: StrategyArg,
    catalog: Option<&str>,
    project: Option<&Path>,
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<ExitCode> {
    let strategy = match strategy {
        StrategyArg::Deviation => Strategy::Deviation,
        StrategyArg::Malfunction => Strategy::Malfunction,
        StrategyArg::Both => Strategy::Both,
    };
    let existing = project.filter(|p| p.exists());
    if paths.is_empty() && existing.is_none() {
        bail!("no model files given and no existing project");
    }
    let model: Option<Project> = if paths.is_empty() {
        None
    } else {
        let files = read_sources(paths).map_err(|(p, m)| anyhow!("{p}: {m}"))?;
        let checked = check_sources(&files, &project_name(paths));
        for f in checked.findings.iter().filter(|f| f.is_error()) {
            eprintln!("{f}");
        }
        match checked.project {
            Some(p) => Some(p),
            None => return Ok(ExitCode::from(1)),
        }
    };
    let target: PathBuf = match (out, project) {
        (Some(o), _) => o.to_owned(),
        (None, Some(p)) => p.to_owned(),
        (None, None) => PathBuf::from(format!("{}.hazproj.json", project_name(paths))),
    };
    let store = match (existing, model) {
        (Some(path), model) => {
            let store = ProjectStore::open(path)?.with_clock(clock()?);
            if let Some(model) = model {
                store.mutate(|p, _| {
                    p.taxonomy = model.taxonomy;
                    p.catalogs = model.catalogs;
                    p.scenarios = model.scenarios;
                    Ok::<_, StoreError>(())
                })?;
            }
            store
        }
        (None, Some(model)) => ProjectStore::create(&target, model)?.with_clock(clock()?),
        (None, None) => unreachable!("checked above"),
    };
    let summary = store.generate(strategy, catalog)?;
    if store.path() != Some(target.as_path()) {
        store.save_as(&target)?;
    }
    print_generation(&summary, format);
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Check { paths, format } => Ok(cmd_check(&paths, format)),
        Command::Fmt { path, write } => cmd_fmt(&path, write),
        Command::Generate {
            paths,
            strategy,
            catalog,
            project,
            out,
            format,
        } => cmd_generate(
            &paths,
            strategy,
            catalog.as_deref(),
            project.as_deref(),
            out.as_deref(),
            format,
        ),
        Command::Decide {
            phs,
            status,
            rationale,
            reviewer,
            expected_version,
            project,
        } => {
            let store = open(&project)?;
            let snap = store.snapshot();
            let current = snap
                .phs(&phs)
                .ok_or_else(|| anyhow!("unknown PHS `{phs}`"))?;
            let cmd = DecisionCommand {
                phs: current.id.clone(),
                new_status: match status {
                    VerdictArg::Hazardous => Verdict::Hazardous,
                    VerdictArg::NotHazardous => Verdict::NotHazardous,
                },
                rationale,
                reviewer,
                expected_version: expected_version.unwrap_or(current.review.version),
            };
            let state = store.record_decision(&cmd)?;
            println!("{phs}: {} (version {})", state.status, state.version);
            Ok(ExitCode::SUCCESS)
        }
        Command::Export {
            format,
            out,
            project,
        } => {
            let store = open(&project)?;
            let text = export_worksheet(&store.snapshot(), format.into());
            match out {
                Some(path) => fs::write(&path, text).with_context(|| path.display().to_string())?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Import {
            file,
            format,
            reviewer,
            project,
        } => {
            let store = open(&project)?;
            let doc = fs::read_to_string(&file).with_context(|| file.display().to_string())?;
            let format = format
                .map(Into::into)
                .unwrap_or_else(|| WorksheetFormat::sniff(&doc));
            match store.import(&doc, format, &reviewer) {
                Ok(outcome) => {
                    for w in &outcome.warnings {
                        eprintln!("{}: {w}", file.display());
                    }
                    println!("{} applied", outcome.applied);
                    Ok(ExitCode::SUCCESS)
                }
                Err(StoreError::Import(e)) => {
                    for d in &e.0 {
                        eprintln!("{}: {d}", file.display());
                    }
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Trace {
            hazards,
            catalog,
            project,
        } => {
            let store = open(&project)?;
            let ids: Vec<String> = if hazards.is_empty() {
                store
                    .snapshot()
                    .hazards
                    .iter()
                    .map(|h| h.id.to_string())
                    .collect()
            } else {
                hazards
            };
            for id in ids {
                let links = store.trace(&id, catalog.as_deref())?;
                let ms: Vec<_> = links.iter().map(|l| l.malfunction.as_str()).collect();
                println!(
                    "{id}: {}",
                    if ms.is_empty() {
                        "-".to_owned()
                    } else {
                        ms.join(", ")
                    }
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { format, project } => {
            let store = open(&project)?;
            let report = summary_report(&store.snapshot());
            match format {
                OutputFormat::Text => print!("{report}"),
                OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&report)?),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            port,
            bind,
            project,
        } => {
            let store = Arc::new(open(&project)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(hazlab::service::serve(store, SocketAddr::new(bind, port)))
                .with_context(|| format!("cannot serve on {bind}:{port}"))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
