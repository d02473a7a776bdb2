use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use homlab_cli::catalogue::{self, CATALOGUE};
use homlab_cli::config::RunConfig;
use homlab_cli::run::{run, Table, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "homlab", version, about = "Run H-convergence and Schur-topology experiments from config files")]
struct Cli {
    /// Config file; experiment subcommands fall back to their shipped fixture.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV output (stdout otherwise).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `probes.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Treat warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    Solve1d,
    Laminate2d,
    Cell,
    Hconv,
    Qdind,
    SchurGap,
    Divcurl,
    Divtest,
    Evo,
    Recover,
    Thermo,
    Maxwell,
    Helmholtz,
    /// Run whatever `experiment.kind` in --config names.
    Run,
    /// Print the experiment catalogue.
    List,
    /// Statement and procedure behind one experiment.
    Describe { name: String },
    /// Print the shipped default config of an experiment.
    Fixture { name: String },
}

impl Cmd {
    fn kind(&self) -> Option<&'static str> {
        Some(match self {
            Cmd::Solve1d => "solve1d",
            Cmd::Laminate2d => "laminate2d",
            Cmd::Cell => "cell",
            Cmd::Hconv => "hconv",
            Cmd::Qdind => "qdind",
            Cmd::SchurGap => "schur-gap",
            Cmd::Divcurl => "divcurl",
            Cmd::Divtest => "divtest",
            Cmd::Evo => "evo",
            Cmd::Recover => "recover",
            Cmd::Thermo => "thermo",
            Cmd::Maxwell => "maxwell",
            Cmd::Helmholtz => "helmholtz",
            _ => return None,
        })
    }
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("ERROR code=2 {msg}");
    ExitCode::from(2)
}

fn lookup(name: &str) -> Result<&'static catalogue::Entry, ExitCode> {
    catalogue::find(name).ok_or_else(|| usage(format!("unknown experiment `{name}`; see `homlab list`")))
}

fn load(cli: &Cli) -> Result<RunConfig, ExitCode> {
    let kind = cli.cmd.kind();
    let (text, origin) = match (&cli.config, kind) {
        (Some(p), _) => (std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?, p.display().to_string()),
        (None, Some(k)) => (lookup(k)?.fixture.to_string(), format!("shipped fixture for {k}")),
        (None, None) => return Err(usage("`run` needs --config")),
    };
    let mut cfg = RunConfig::parse(&text).map_err(|e| usage(format!("{origin}: {e}")))?;
    match (kind, cfg.get("experiment", "kind")) {
        (Some(k), Some(c)) if c != k => return Err(usage(format!("{origin} is a `{c}` config, not `{k}`"))),
        (Some(k), None) => cfg.set("experiment", "kind", k),
        (None, None) => return Err(usage(format!("{origin}: missing required key `experiment.kind`"))),
        _ => {}
    }
    if let Some(s) = cli.seed {
        cfg.set("probes", "seed", s.to_string());
    }
    Ok(cfg)
}

fn csv(cfg: &RunConfig, kind: &str, t: &Table) -> String {
    let mut s = format!("# homlab schema={SCHEMA_VERSION} kind={kind} digest={}\n{}\n", cfg.digest(), t.columns);
    for r in &t.rows {
        s.push_str(r);
        s.push('\n');
    }
    s
}

fn experiment(cli: &Cli) -> ExitCode {
    let cfg = match load(cli) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let kind = cfg.get("experiment", "kind").unwrap_or_default().to_string();
    let table = match run(&cfg) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("ERROR kind={kind} code={} {e}", e.exit_code());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let text = csv(&cfg, &kind, &table);
    match &cli.out {
        Some(dir) => {
            let name = cfg.get("output", "name").map_or_else(|| kind.replace('-', "_"), str::to_string);
            let path = dir.join(format!("{name}.csv"));
            if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, &text)) {
                return usage(format!("cannot write {}: {e}", path.display()));
            }
            eprintln!("wrote {}", path.display());
        }
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
        }
    }
    let mut ok = true;
    for c in &table.checks {
        eprintln!("{} kind={kind} check={} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.pass;
    }
    for w in &table.warnings {
        let tag = if cli.strict { "FAIL" } else { "WARN" };
        eprintln!("{tag} kind={kind} check=warning {w}");
        ok &= !cli.strict;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return usage("--jobs must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            return usage(format!("cannot start {j} workers: {e}"));
        }
    }
    match &cli.cmd {
        Cmd::List => {
            for e in CATALOGUE {
                println!("{:<11} {}", e.name, e.statement);
            }
            ExitCode::SUCCESS
        }
        Cmd::Describe { name } => match lookup(name) {
            Ok(e) => {
                println!("{}\n\nExercises: {}\n\nProcedure: {}", e.name, e.statement, e.run);
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Cmd::Fixture { name } => match lookup(name) {
            Ok(e) => {
                print!("{}", e.fixture);
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        _ => experiment(&cli),
    }
}
