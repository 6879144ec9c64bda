//! `govern`: parse and validate community specs, run scenarios, check
//! governance properties over audit exports and re-verify their hash chains.
//!
//! Exit codes: 0 success with no violations, 1 violations or failed
//! expectations, 2 usage, parse or identifier errors, 3 integrity failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use odp_governance::runtime::{import_export, AuditTrail, RecordDetail};
use odp_governance::scenarios::{
    builtin_scenario, inject_violation, run_scenario, Scenario, ScenarioReport, BUILTIN_NAMES,
};
use odp_governance::spec_lang::{has_errors, parse_spec, parse_specs, validate_template, format_spec};
use odp_governance::verifier::{check_properties, export_violations, PropertyKind, PropertySpec};
use odp_governance::vocab::DeploymentMode;
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "govern", version, about = "Deontic governance for agent communities")]
struct Cli {
    /// TOML file with defaults for any long flag; flags given on the
    /// command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse community specs and print them in canonical form.
    Parse {
        #[arg(required = true)]
        specs: Vec<PathBuf>,
    },
    /// Parse and check community specs, printing every finding.
    Validate {
        #[arg(required = true)]
        specs: Vec<PathBuf>,
    },
    /// Run a scenario and write its audit export.
    Run(RunArgs),
    /// Check one property over an audit export.
    Verify(VerifyArgs),
    /// Re-verify the hash chain of an audit export.
    Audit {
        #[arg(long)]
        trace: PathBuf,
    },
    /// List the built-in scenarios, or run them all.
    Scenarios {
        #[arg(long)]
        run: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Name of a built-in scenario.
    #[arg(long, conflicts_with_all = ["spec", "script"])]
    scenario: Option<String>,
    /// Community spec files for `--script`.
    #[arg(long, requires = "script")]
    spec: Vec<PathBuf>,
    #[arg(long, requires = "spec")]
    script: Option<PathBuf>,
    /// Rewrite the scenario to violate one property kind.
    #[arg(long)]
    inject: Option<String>,
    /// Initial deployment mode for every community, overriding the script.
    #[arg(long)]
    mode: Option<String>,
    /// Audit export destination; defaults to `<scenario>.audit`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    trace: PathBuf,
    /// safety, authority, prohibition or accountability.
    #[arg(long)]
    property: Option<String>,
    /// Guarded action (safety), decision action (authority) or embargoed
    /// action (prohibition).
    #[arg(long)]
    action: Option<String>,
    /// Burden that must be discharged first (safety).
    #[arg(long)]
    guard: Option<String>,
    /// Role holding the decision (authority).
    #[arg(long)]
    role: Option<String>,
    /// Group under embargo (prohibition).
    #[arg(long)]
    group: Option<String>,
    /// Only check this community's trail.
    #[arg(long)]
    community: Option<String>,
    /// Violation report destination; printed to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Keys of the optional `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<String>,
    inject: Option<String>,
    out: Option<PathBuf>,
    property: Option<String>,
    action: Option<String>,
    guard: Option<String>,
    role: Option<String>,
    group: Option<String>,
    community: Option<String>,
}

enum Failure {
    Usage(String),
    Integrity(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Integrity(_) => 3,
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(msg.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_config(cli.config.as_deref()).and_then(|cfg| match cli.command {
        Command::Parse { specs } => parse(&specs),
        Command::Validate { specs } => validate(&specs),
        Command::Run(args) => run(args, cfg),
        Command::Verify(args) => verify(args, cfg),
        Command::Audit { trace } => audit(&trace),
        Command::Scenarios { run } => scenarios(run),
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            let (Failure::Usage(m) | Failure::Integrity(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    toml::from_str(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse(paths: &[PathBuf]) -> Outcome {
    for path in paths {
        let templates = parse_specs(&read(path)?).map_err(|e| usage(format!("{}:{e}", path.display())))?;
        for t in templates {
            print!("{}", format_spec(&t));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(paths: &[PathBuf]) -> Outcome {
    let mut invalid = false;
    for path in paths {
        let templates = parse_specs(&read(path)?).map_err(|e| usage(format!("{}:{e}", path.display())))?;
        for t in templates {
            let findings = validate_template(&t);
            for f in &findings {
                println!("{}:{f}", path.display());
            }
            invalid |= has_errors(&findings);
            println!("{}: community {}: {} findings", path.display(), t.name, findings.len());
        }
    }
    if invalid {
        return Err(usage("specification has errors"));
    }
    Ok(ExitCode::SUCCESS)
}

fn load_scenario(args: &RunArgs) -> Result<Scenario, Failure> {
    if let Some(name) = &args.scenario {
        return builtin_scenario(name).ok_or_else(|| {
            usage(format!("unknown scenario `{name}`; built-ins are {}", BUILTIN_NAMES.join(", ")))
        });
    }
    let Some(script_path) = &args.script else {
        return Err(usage("give either --scenario or --spec with --script"));
    };
    let mut templates = Vec::new();
    for path in &args.spec {
        let src = read(path)?;
        templates.extend(parse_specs(&src).map_err(|e| usage(format!("{}:{e}", path.display())))?);
    }
    let name = script_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    let script = odp_governance::scenarios::parse_script(&read(script_path)?)
        .map_err(|e| usage(format!("{}: {e}", script_path.display())))?;
    let scenario = Scenario::new(name, templates, script);
    scenario
        .check()
        .map_err(|e| usage(format!("{}: {e}", script_path.display())))?;
    Ok(scenario)
}

fn run(args: RunArgs, cfg: FileConfig) -> Outcome {
    let mut scenario = load_scenario(&args)?;
    if let Some(mode) = args.mode.or(cfg.mode) {
        let mode: DeploymentMode = mode.parse().map_err(usage)?;
        for b in &mut scenario.script.blocks {
            b.mode = mode;
        }
    }
    if let Some(kind) = args.inject.or(cfg.inject) {
        let kind: PropertyKind = kind.parse().map_err(usage)?;
        scenario = inject_violation(&scenario, kind).map_err(usage)?;
    }
    let report = run_scenario(&scenario).map_err(usage)?;
    let out = args
        .out
        .or(cfg.out)
        .unwrap_or_else(|| PathBuf::from(format!("{}.audit", report.scenario)));
    write(&out, &report.export())?;
    print!("{}", report.summary());
    println!("audit export written to {}", out.display());
    Ok(verdict(&report))
}

fn verdict(report: &ScenarioReport) -> ExitCode {
    if report.passed() && report.violations().next().is_none() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn import(path: &Path) -> Result<Vec<AuditTrail>, Failure> {
    import_export(&read(path)?).map_err(|e| Failure::Integrity(e.to_string()))
}

fn property_spec(args: &VerifyArgs, cfg: &FileConfig) -> Result<PropertySpec, Failure> {
    let pick = |flag: &Option<String>, key: &Option<String>, name: &str| {
        flag.clone()
            .or_else(|| key.clone())
            .ok_or_else(|| usage(format!("this property needs --{name}")))
    };
    let kind: PropertyKind = pick(&args.property, &cfg.property, "property")?
        .parse()
        .map_err(usage)?;
    let action = || pick(&args.action, &cfg.action, "action");
    Ok(match kind {
        PropertyKind::Safety => PropertySpec::safety(&action()?, &pick(&args.guard, &cfg.guard, "guard")?),
        PropertyKind::Authority => PropertySpec::authority(&action()?, &pick(&args.role, &cfg.role, "role")?),
        PropertyKind::Prohibition => {
            PropertySpec::prohibition(&action()?, &pick(&args.group, &cfg.group, "group")?)
        }
        PropertyKind::Accountability => PropertySpec::PrincipalTraceability,
    })
}

fn verify(args: VerifyArgs, cfg: FileConfig) -> Outcome {
    let spec = property_spec(&args, &cfg)?;
    let only = args.community.clone().or(cfg.community.clone());
    let trails = import(&args.trace)?;

    // A multi-community export is checked on every trail whose template
    // knows the property's identifiers.
    let mut checked = 0;
    let mut last_unknown = None;
    let mut violations = Vec::new();
    for trail in trails.iter().filter(|t| only.as_ref().is_none_or(|c| *c == t.community)) {
        let Some(RecordDetail::Genesis { template, .. }) = trail.genesis().map(|g| &g.detail) else {
            return Err(Failure::Integrity(format!("{}: no genesis record", trail.community)));
        };
        let template = parse_spec(template).map_err(|e| usage(format!("{}: {e}", trail.community)))?;
        if let Err(e) = spec.check_identifiers(&template) {
            last_unknown = Some(e.to_string());
            continue;
        }
        let found = check_properties(trail, std::slice::from_ref(&spec)).map_err(usage)?;
        println!("{}: {} records, {} violations", trail.community, trail.records.len(), found.len());
        violations.extend(found);
        checked += 1;
    }
    if checked == 0 {
        return Err(usage(
            last_unknown.unwrap_or_else(|| "no trail matches the requested community".into()),
        ));
    }
    let report = export_violations(&violations);
    match args.out.or(cfg.out) {
        Some(out) => write(&out, &report)?,
        None => print!("{report}"),
    }
    Ok(if violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn audit(trace: &Path) -> Outcome {
    let trails = import(trace)?;
    for t in &trails {
        let head = t.records.last().map(|r| r.hash.to_hex()).unwrap_or_default();
        println!("{}: {} records intact, head {head}", t.community, t.records.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn scenarios(run: bool) -> Outcome {
    if !run {
        for name in BUILTIN_NAMES {
            println!("{name}");
        }
        return Ok(ExitCode::SUCCESS);
    }
    let mut failed = 0;
    for name in BUILTIN_NAMES {
        let report = run_scenario(&builtin_scenario(name).expect("listed")).map_err(usage)?;
        print!("{}", report.summary());
        if !report.passed() {
            failed += 1;
        }
    }
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
