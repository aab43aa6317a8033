mod serve;

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use duotalk_core::nl::{ChatClient, EmbeddingClient, LlmGenerator, LlmParser, RulesParser, TemplateGenerator};
use duotalk_core::orchestrator::{bench, block, parse_script, render, replay, to_jsonl};
use duotalk_core::reasoner::{FactStore, Program};
use duotalk_core::shared_state::DeltaLog;
use duotalk_core::syntax::parse_literal;
use duotalk_core::{assets, Engine, FoodKind, MenuKb, Role, SharedStore, ShortageState, Snapshot, Sym, Term};

#[derive(Parser)]
#[command(name = "duotalk", version, about = "Dual-agent drive-through dialogue over a menu knowledge base")]
struct Cli {
    /// Menu file to load instead of the built-in menu.
    #[arg(long, global = true)]
    menu: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the menu knowledge base.
    #[command(subcommand)]
    Kb(KbCommand),
    /// Query the rule engine over the menu and a shortage state.
    #[command(subcommand)]
    Reason(ReasonCommand),
    /// Show shortages and the foods they make unavailable.
    #[command(subcommand)]
    State(StateCommand),
    /// Talk to one of the bots on the terminal.
    Chat {
        #[arg(long, value_enum)]
        role: RoleArg,
        #[command(flatten)]
        backend: Backend,
        /// Print extracted semantics and next-action predicates per round.
        #[arg(long)]
        trace: bool,
        /// Directory for the shortage delta log.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Replay a `manager:`/`customer:` script and print the transcript.
    Replay {
        script: PathBuf,
        /// Print line-delimited JSON instead of the readable transcript.
        #[arg(long)]
        jsonl: bool,
        /// Keep per-round timings in the JSON output.
        #[arg(long)]
        timings: bool,
        /// Use the LLM adapters configured in the environment.
        #[arg(long)]
        llm: bool,
    },
    /// Measure reasoning and total time per round.
    Bench {
        #[arg(long, default_value_t = 50)]
        rounds: usize,
        #[arg(long, default_value_t = 10)]
        requirements: usize,
        /// Pad the menu to this many facts.
        #[arg(long, default_value_t = bench::BENCH_FACTS)]
        facts: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        llm: bool,
    },
    /// Serve the HTTP+JSON session API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        llm: bool,
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum KbCommand {
    /// Load and validate a menu file.
    Validate { path: Option<PathBuf> },
    /// Facts matching a pattern; `_` is a wildcard argument.
    Lookup { predicate: String, args: Vec<String> },
}

#[derive(Subcommand)]
enum ReasonCommand {
    /// Solve a goal such as `unavailable(X, R)`.
    Query {
        goal: String,
        /// Mark a topping as run out.
        #[arg(long)]
        runout: Vec<String>,
        /// Print the justification tree.
        #[arg(long)]
        why: bool,
    },
}

#[derive(Subcommand)]
enum StateCommand {
    Show {
        #[arg(long)]
        runout: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    Manager,
    Customer,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Role {
        match r {
            RoleArg::Manager => Role::Manager,
            RoleArg::Customer => Role::Customer,
        }
    }
}

#[derive(Args)]
struct Backend {
    /// Rules parser and templates instead of the LLM adapters.
    #[arg(long)]
    deterministic: bool,
}

fn load_menu(path: Option<&PathBuf>) -> Result<MenuKb> {
    match path {
        Some(p) => MenuKb::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(assets::menu()),
    }
}

fn engine(kb: MenuKb, llm: bool, log_dir: Option<&PathBuf>) -> Result<Engine> {
    let mut store = SharedStore::new(kb, ShortageState::default(), assets::rules());
    if let Some(dir) = log_dir {
        store = store.with_log(DeltaLog::new(dir)?)?;
    }
    if !llm {
        return Ok(Engine::new(store, Box::new(RulesParser::default()), Box::new(TemplateGenerator::default())));
    }
    let Some(client) = ChatClient::from_env() else {
        bail!("no LLM endpoint configured: set DUOTALK_LLM_URL or use the deterministic backend");
    };
    let mut parser = LlmParser::new(client.clone());
    if let Some(e) = EmbeddingClient::from_env() {
        parser = parser.with_embeddings(e);
    }
    Ok(Engine::new(store, Box::new(parser), Box::new(LlmGenerator::new(client))))
}

fn snapshot(kb: MenuKb, runout: &[String]) -> Result<Snapshot> {
    for r in runout {
        if !kb.kind_of(r).is_some_and(|k| k.is_topping()) {
            bail!("{r} is not an ingredient or sauce on the menu");
        }
    }
    let state = ShortageState::new(runout.iter().map(|s| Sym::from(s.as_str())).collect());
    Ok(Snapshot::new(Arc::new(kb), Arc::new(state), assets::rules()))
}

fn kb_command(cmd: KbCommand, menu: Option<&PathBuf>) -> Result<()> {
    match cmd {
        KbCommand::Validate { path } => {
            let kb = load_menu(path.as_ref().or(menu))?;
            let count = |k| kb.names(&[k]).len();
            println!(
                "ok: {} facts; {} dishes, {} combos, {} ingredients, {} sauces",
                kb.len(),
                count(FoodKind::Dish),
                count(FoodKind::Combo),
                count(FoodKind::Ingredient),
                count(FoodKind::Sauce)
            );
        }
        KbCommand::Lookup { predicate, args } => {
            let kb = load_menu(menu)?;
            let pattern: Vec<Term> = args
                .iter()
                .enumerate()
                .map(|(i, a)| if a == "_" { Term::var(&format!("_{i}")) } else { Term::atom(a) })
                .collect();
            for f in kb.lookup(&predicate, &pattern)? {
                println!("{f}.");
            }
        }
    }
    Ok(())
}

fn reason_command(cmd: ReasonCommand, menu: Option<&PathBuf>) -> Result<()> {
    let ReasonCommand::Query { goal, runout, why } = cmd;
    let snap = snapshot(load_menu(menu)?, &runout)?;
    let goal = parse_literal(&goal).map_err(|e| anyhow::anyhow!("goal: {e}"))?;
    let program: Program = snap.program_with(FactStore::new())?;
    let answers = program.solver().query(&goal)?;
    if answers.is_empty() {
        println!("no");
        if why {
            let (_, j) = program.solver().holds(&goal)?;
            print!("{j}");
        }
        return Ok(());
    }
    for a in &answers {
        if a.bindings.is_empty() {
            println!("yes");
        } else {
            let b: Vec<String> = a.bindings.iter().map(|(v, t)| format!("{v} = {}", t.plain())).collect();
            println!("{}", b.join(", "));
        }
        if why {
            print!("{}", a.proof.render());
        }
    }
    Ok(())
}

fn state_command(cmd: StateCommand, menu: Option<&PathBuf>) -> Result<()> {
    let StateCommand::Show { runout } = cmd;
    let snap = snapshot(load_menu(menu)?, &runout)?;
    let names: Vec<&str> = snap.state.runout.iter().map(|s| &**s).collect();
    println!("runout: {}", if names.is_empty() { "none".to_string() } else { names.join(", ") });
    for (food, reason) in snap.unavailability(None)? {
        println!("unavailable: {food} ({})", reason.plain());
    }
    Ok(())
}

fn chat(engine: &Engine, role: Role, trace: bool) -> Result<()> {
    let opened = engine.open_session(role)?;
    let bot = if role == Role::Manager { "ManagerBot" } else { "ServiceBot" };
    println!("{bot}: {}", opened.greeting);
    let stdin = std::io::stdin();
    let mut out = std::io::stdout();
    let mut closed = false;
    for line in stdin.lock().lines() {
        let line = line?;
        let r = engine.run_round(&opened.id, line.trim())?;
        if trace {
            println!("    semantics: {}", block(&r.frames));
            println!("    next action: {}", block(&r.predicates));
        }
        println!("{bot}: {}", r.text);
        out.flush()?;
        if r.closed {
            closed = true;
            break;
        }
    }
    if !closed {
        engine.close_session(&opened.id)?;
    }
    if let Some(t) = engine.with_session(&opened.id, |s| s.ticket().cloned())? {
        for l in &t.lines {
            println!("  {} #{}: {}", l.food, l.instance, duotalk_core::term::format_cents(l.price.total));
        }
        println!("  total: {}", t.total);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let menu = cli.menu.as_ref();
    match cli.command {
        Command::Kb(c) => kb_command(c, menu),
        Command::Reason(c) => reason_command(c, menu),
        Command::State(c) => state_command(c, menu),
        Command::Chat { role, backend, trace, log_dir } => {
            let engine = engine(load_menu(menu)?, !backend.deterministic, log_dir.as_ref())?;
            chat(&engine, role.into(), trace)
        }
        Command::Replay { script, jsonl, timings, llm } => {
            let src = std::fs::read_to_string(&script).with_context(|| format!("reading {}", script.display()))?;
            let engine = engine(load_menu(menu)?, llm, None)?;
            let events = replay(&engine, &parse_script(&src)?)?;
            if jsonl {
                print!("{}", to_jsonl(&events, timings));
            } else {
                print!("{}", render(&events));
            }
            Ok(())
        }
        Command::Bench { rounds, requirements, facts, json, llm } => {
            let kb = match menu {
                Some(p) => load_menu(Some(p))?,
                None => bench::padded_menu(facts),
            };
            let engine = engine(kb, llm, None)?;
            let report = bench::run(&engine, rounds, requirements)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("menu facts: {}, rounds: {rounds}", report.kb_facts);
                println!("{:<28} {:>14} {:>14} {:>12}", "", "reasoning ms", "max ms", "total ms");
                let row = |name: &str, s: &bench::Stats| {
                    println!("{name:<28} {:>14.3} {:>14.3} {:>12.3}", s.mean_reasoning_ms, s.max_reasoning_ms, s.mean_total_ms)
                };
                row("manager", &report.manager);
                row(&format!("service, {requirements} requirements"), &report.service);
            }
            Ok(())
        }
        Command::Serve { port, host, llm, log_dir } => {
            let engine = engine(load_menu(menu)?, llm, log_dir.as_ref())?;
            serve::serve(Arc::new(engine), &host, port)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
