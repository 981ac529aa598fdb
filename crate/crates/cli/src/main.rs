use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use joinmatch::compiler::{all_rules, compile_program, definitions, lower_or, CompileOptions, Pruning};
use joinmatch::frontend::{parse, typecheck, Program, TypedProgram};
use joinmatch::harness::{check, equiv, format_outputs, Verdict};
use joinmatch::lang::{Definition, Process};
use joinmatch::print::program_to_string;
use joinmatch::runtime::{explore, run, Machine, Mode, RuntimeError};

#[derive(Parser)]
#[command(name = "joinmatch", version, about = "Join calculus with algebraic pattern matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check and report non-exhaustive channels and unused match clauses.
    Check { file: PathBuf },
    /// Print the program after pattern compilation.
    Compile {
        file: PathBuf,
        /// Print plain join definitions: `or` groups expanded, dispatchers as rules.
        #[arg(long)]
        emit_core: bool,
        /// Print the pattern lattice of every transformed channel.
        #[arg(long)]
        dump_lattice: bool,
        /// Print the matching list of every definition.
        #[arg(long)]
        dump_matching: bool,
        #[command(flatten)]
        opt: OptFlags,
    },
    /// Run with a seeded random scheduler and print the trace.
    Run {
        file: PathBuf,
        #[arg(long, default_value = "direct")]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10000)]
        steps: usize,
        #[command(flatten)]
        opt: OptFlags,
    },
    /// Enumerate every reachable state up to a depth.
    Explore {
        file: PathBuf,
        #[arg(long, default_value = "direct")]
        mode: Mode,
        #[command(flatten)]
        bounds: Bounds,
        #[command(flatten)]
        opt: OptFlags,
    },
    /// Compare the source and compiled semantics up to a depth.
    Equiv {
        file: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
        #[command(flatten)]
        opt: OptFlags,
    },
}

#[derive(Args)]
struct OptFlags {
    /// Keep every lattice vertex in dispatchers.
    #[arg(long)]
    no_optimize: bool,
    /// Drop derived vertices without checking usefulness (unsound, for testing the harness).
    #[arg(long, hide = true)]
    unchecked_pruning: bool,
}

impl OptFlags {
    fn options(&self) -> CompileOptions {
        let pruning = if self.unchecked_pruning {
            Pruning::UncheckedDropDerived
        } else if self.no_optimize {
            Pruning::Off
        } else {
            Pruning::Usefulness
        };
        CompileOptions { pruning }
    }
}

#[derive(Args)]
struct Bounds {
    #[arg(long, default_value_t = 10)]
    depth: usize,
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
}

fn load(path: &Path) -> Result<TypedProgram> {
    let src = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let program = parse(&src).with_context(|| path.display().to_string())?;
    typecheck(&program).with_context(|| path.display().to_string())
}

fn core(p: &Process) -> Process {
    match p {
        Process::Null | Process::Send { .. } => p.clone(),
        Process::Parallel(l, r) => Process::par(core(l), core(r)),
        Process::Match(m) => {
            let mut m = (**m).clone();
            for (_, body) in &mut m.clauses {
                *body = core(body);
            }
            Process::Match(Box::new(m))
        }
        Process::Def(d, body) => {
            let mut rules = all_rules(&d.expand_or());
            for r in &mut rules {
                r.body = core(&r.body);
            }
            let mut d2 = Definition::new(rules);
            d2.channel_types = d.channel_types.clone();
            Process::def(d2, core(body))
        }
    }
}

fn exec(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Check { file } => {
            let t = load(&file)?;
            for d in check(&t)? {
                println!("{d}");
            }
            Ok(0)
        }
        Command::Compile { file, emit_core, dump_lattice, dump_matching, opt } => {
            let t = load(&file)?;
            let c = compile_program(&t, opt.options())?;
            if dump_lattice {
                for r in &c.reports {
                    if let Some(l) = &r.lattice {
                        println!("channel {} : {}", r.channel, r.ty);
                        print!("{}", l.dump(&t.env)?);
                    }
                }
            }
            if dump_matching {
                for (i, d) in definitions(&c.program.main).into_iter().enumerate() {
                    let cd = lower_or(d)?;
                    println!("definition {i}: slots {}", cd.slots.join(" "));
                    print!("{}", cd.dump());
                }
            }
            if emit_core {
                let p = Program { type_decls: c.program.type_decls.clone(), main: core(&c.program.main) };
                print!("{}", program_to_string(&p));
            } else if !dump_lattice && !dump_matching {
                print!("{}", program_to_string(&c.program));
            }
            Ok(0)
        }
        Command::Run { file, mode, seed, steps, opt } => {
            let t = load(&file)?;
            let mut m = Machine::load(&t, mode, opt.options())?;
            print!("{}", run(&mut m, seed, steps)?.dump());
            Ok(0)
        }
        Command::Explore { file, mode, bounds, opt } => {
            let t = load(&file)?;
            let m = Machine::load(&t, mode, opt.options())?;
            match explore(&m, bounds.depth, bounds.budget) {
                Ok(e) => {
                    println!("states {}", e.states);
                    let barbs: Vec<&str> = e.weak_barbs.iter().map(String::as_str).collect();
                    println!("BARBS {{{}}}", barbs.join(", "));
                    for o in &e.terminal_outputs {
                        println!("TERMINAL {}", format_outputs(o));
                    }
                    Ok(0)
                }
                Err(RuntimeError::StateBudgetExceeded(n)) => {
                    println!("inconclusive: state budget of {n} exceeded");
                    Ok(3)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Equiv { file, bounds, opt } => {
            let t = load(&file)?;
            let name = file.display().to_string();
            let v = equiv(&t, &name, bounds.depth, bounds.budget, opt.options())?;
            print!("{}", v.report());
            Ok(match v.verdict {
                Verdict::Equivalent => 0,
                Verdict::Distinguished(_) => 2,
                Verdict::Inconclusive(_) => 3,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match exec(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
