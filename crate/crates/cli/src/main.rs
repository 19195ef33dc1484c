use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use domino::atoms::{catalog, AtomTemplate};
use domino::codegen::{classify, compile, CompileOptions, MapOptions, ResourceLimits};
use domino::frontend::{load, print_body, ValidatedAst};
use domino::normalize::{normalize_passes, print_lines};
use domino::pipeline::{build_dep_graph, condense_sccs, pipeline, to_dot};
use domino::simulator::{check_equivalence, load_config, read_trace, run_pipeline, write_result, RunOptions};

/// Compile packet transactions to atom pipelines and simulate them.
#[derive(Parser)]
#[command(name = "domino", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a program for one stateful atom and write the pipeline config.
    Compile {
        file: PathBuf,
        #[command(flatten)]
        target: TargetArgs,
        /// Where to write the pipeline JSON (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Push a JSON-lines trace through a compiled pipeline.
    Run {
        #[arg(long)]
        pipeline: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Compile, then compare the pipeline against the reference on random packets.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value_t = 1000)]
        packets: usize,
        /// Trace seed; DOMINO_SEED takes precedence when set.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the least expressive atom the program compiles to, or "doesn't map".
    Classify {
        file: PathBuf,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Print intermediate forms.
    Dump {
        file: PathBuf,
        /// Program after one normalization pass.
        #[arg(long, value_enum)]
        dump_pass: Option<Pass>,
        /// Dependency graph and codelet DAG in DOT.
        #[arg(long)]
        dump_dag: bool,
        /// Scheduled codelet pipeline as JSON.
        #[arg(long)]
        dump_pipeline: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Pass {
    Branch,
    Flank,
    Ssa,
    Tac,
}

#[derive(Args)]
struct LimitArgs {
    #[arg(long, default_value_t = 32)]
    depth: usize,
    #[arg(long, default_value_t = 300)]
    stateless_per_stage: usize,
    #[arg(long, default_value_t = 10)]
    stateful_per_stage: usize,
    /// Bit width of the exhaustive synthesis check.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=4))]
    verify_width: u32,
}

#[derive(Args)]
struct TargetArgs {
    /// Stateful atom name (Write, RAW, PRAW, IfElseRAW, Sub, Nested, Pairs).
    #[arg(long)]
    target: String,
    #[command(flatten)]
    limits: LimitArgs,
}

impl LimitArgs {
    fn options(&self) -> CompileOptions {
        CompileOptions {
            limits: ResourceLimits {
                pipeline_depth: self.depth,
                stateless_per_stage: self.stateless_per_stage,
                stateful_per_stage: self.stateful_per_stage,
            },
            map: MapOptions { verify_width: self.verify_width, ..Default::default() },
        }
    }
}

impl TargetArgs {
    fn template(&self) -> Result<AtomTemplate> {
        let cat = catalog();
        match cat.get(&self.target) {
            Some(t) => Ok(t.clone()),
            None => bail!("unknown target `{}`; expected one of {}", self.target, cat.names().join(", ")),
        }
    }
}

/// Failure that maps to a specific exit status.
enum Failure {
    /// The program is valid but the compiler cannot fit it to the target.
    Rejected(String),
    Error(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Error(e.into())
    }
}

fn read_program(path: &Path) -> Result<ValidatedAst> {
    let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load(&src).map_err(|e| anyhow::anyhow!("{}", e.render(&path.display().to_string())))
}

fn seed(flag: u64) -> Result<u64> {
    match std::env::var("DOMINO_SEED") {
        Ok(s) => s.trim().parse().with_context(|| format!("DOMINO_SEED `{s}` is not an unsigned integer")),
        Err(_) => Ok(flag),
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    let mut stdout = io::stdout().lock();
    match cmd {
        Command::Compile { file, target, output } => {
            let t = target.template()?;
            let ast = read_program(&file)?;
            let cfg = compile(&pipeline(&domino::normalize::normalize(&ast)), &t, &target.limits.options())
                .map_err(|r| Failure::Rejected(r.to_string()))?;
            let json = serde_json::to_string_pretty(&cfg.to_json())? + "\n";
            match output {
                Some(path) => fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?,
                None => stdout.write_all(json.as_bytes())?,
            }
        }
        Command::Run { pipeline, trace } => {
            let text = fs::read_to_string(&pipeline).with_context(|| format!("reading {}", pipeline.display()))?;
            let cfg = load_config(&text)?;
            let file = fs::File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
            let packets = read_trace(BufReader::new(file), &cfg.packet_fields)?;
            let out = run_pipeline(&cfg, &packets, RunOptions::default())?;
            write_result(&mut stdout, &out.result)?;
        }
        Command::Verify { file, target, packets, seed: flag } => {
            let t = target.template()?;
            let seed = seed(flag)?;
            let ast = read_program(&file)?;
            let cfg = compile(&pipeline(&domino::normalize::normalize(&ast)), &t, &target.limits.options())
                .map_err(|r| Failure::Rejected(r.to_string()))?;
            let report = check_equivalence(&ast, &cfg, packets, seed)?;
            writeln!(stdout, "{report}")?;
            if !report.is_equivalent() {
                return Err(Failure::Error(anyhow::anyhow!("pipeline disagrees with the reference (seed {seed})")));
            }
        }
        Command::Classify { file, limits } => {
            let ast = read_program(&file)?;
            let verdict = classify(&pipeline(&domino::normalize::normalize(&ast)), &limits.options());
            writeln!(stdout, "{verdict}")?;
        }
        Command::Dump { file, dump_pass, dump_dag, dump_pipeline } => {
            if dump_pass.is_none() && !dump_dag && !dump_pipeline {
                return Err(Failure::Error(anyhow::anyhow!("nothing to dump; pass --dump-pass, --dump-dag or --dump-pipeline")));
            }
            let ast = read_program(&file)?;
            let passes = normalize_passes(&ast);
            if let Some(pass) = dump_pass {
                let text = match pass {
                    Pass::Branch => print_body(&ast.param, &passes.branch, 0),
                    Pass::Flank => print_lines(&passes.flank),
                    Pass::Ssa => print_lines(&passes.ssa),
                    Pass::Tac => passes.tac.print(),
                };
                stdout.write_all(text.as_bytes())?;
            }
            if dump_dag {
                let g = build_dep_graph(&passes.tac);
                let dag = condense_sccs(&passes.tac, &g);
                stdout.write_all(to_dot(&passes.tac, &g, &dag).as_bytes())?;
            }
            if dump_pipeline {
                let p = pipeline(&passes.tac);
                writeln!(stdout, "{}", serde_json::to_string_pretty(&p.to_json())?)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(report)) => {
            eprintln!("{report}");
            ExitCode::from(2)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
