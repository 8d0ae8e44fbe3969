use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use rubicon_core::bench::{run_benchmark, Workload};
use rubicon_core::exec::{Engine, MetricsRecord, Outcome, Session};
use rubicon_core::plan::CostModel;
use rubicon_core::table::ResultTable;
use rubicon_core::Error;
use rubicon_server::ServerConfig;

#[derive(Parser)]
#[command(name = "rubicon", version, about = "Federated queries over wrapped sources")]
struct Cli {
    /// Catalog file listing the sources.
    #[arg(long, global = true, default_value = "fixtures/catalog.json", env = "RUBICON_CATALOG")]
    catalog: PathBuf,
    /// Principal that access rules are checked against.
    #[arg(long, global = true, default_value = "user")]
    principal: String,
    /// JSON overrides for the cost model.
    #[arg(long, global = true)]
    cost_model: Option<PathBuf>,
    /// Disable data-parallel execution.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read statements from stdin and run them one at a time.
    Repl {
        #[arg(long, default_value_t = 20)]
        max_rows: usize,
    },
    /// Run a script.
    Run {
        script: PathBuf,
        /// Optimize the whole script together and commit once.
        #[arg(long)]
        compiled: bool,
        /// Write the workspace (log.aql and tables) here afterwards.
        #[arg(long)]
        save: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        max_rows: usize,
    },
    /// Print plans for a script without contacting any source.
    Explain { script: PathBuf },
    /// Run a benchmark workload and score it.
    Bench {
        workload: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Per-statement timeout in seconds.
        #[arg(long, default_value_t = 30)]
        timeout: u64,
    },
}

fn engine(cli: &Cli) -> anyhow::Result<Arc<Engine>> {
    let mut engine = Engine::load(&cli.catalog)
        .map_err(describe)
        .with_context(|| format!("loading catalog {}", cli.catalog.display()))?;
    if let Some(path) = &cli.cost_model {
        let model = CostModel::load(path)
            .map_err(describe)
            .with_context(|| format!("loading cost model {}", path.display()))?;
        engine.set_cost_model(model).map_err(describe)?;
    }
    if cli.sequential {
        engine.set_parallel(false);
    }
    Ok(Arc::new(engine))
}

/// Engine errors with their stage, and a caret under the offending byte.
fn describe(e: Error) -> anyhow::Error {
    anyhow::anyhow!("[{}] {e}", e.stage())
}

fn positioned(e: Error, text: &str) -> anyhow::Error {
    let Some(offset) = e.offset() else { return describe(e) };
    let start = text[..offset.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let end = text[start..].find('\n').map_or(text.len(), |i| start + i);
    let column = text[start..offset.min(text.len())].chars().count();
    anyhow::anyhow!("[{}] {e}\n  {}\n  {}^", e.stage(), &text[start..end], " ".repeat(column))
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn cell(s: String, width: usize) -> String {
    if s.chars().count() > width {
        let mut t: String = s.chars().take(width - 1).collect();
        t.push('~');
        t
    } else {
        s
    }
}

fn print_table(out: &mut impl Write, t: &ResultTable, max_rows: usize) -> io::Result<()> {
    const WIDTH: usize = 40;
    let header: Vec<String> = t.schema.iter().map(|c| cell(c.name.clone(), WIDTH)).collect();
    let body: Vec<Vec<String>> = t
        .rows
        .iter()
        .take(max_rows)
        .map(|r| r.iter().map(|v| cell(v.to_string(), WIDTH)).collect())
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in &body {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join(" | ")
    };
    writeln!(out, "{}", line(&header))?;
    writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"))?;
    for r in &body {
        writeln!(out, "{}", line(r))?;
    }
    if t.len() > max_rows {
        writeln!(out, "... {} more rows", t.len() - max_rows)?;
    }
    Ok(())
}

fn metrics_line(m: &MetricsRecord) -> String {
    format!("k={} T_in={} T_out={} C={:.4} ttft={:.3}s", m.k, m.t_in, m.t_out, m.cost, m.ttft_s)
}

fn print_outcome(out: &mut impl Write, o: &Outcome, max_rows: usize) -> io::Result<()> {
    writeln!(out, "[{}] {}", o.index, o.message)?;
    if let Some(text) = &o.output {
        write!(out, "{text}")?;
    } else if let Some(t) = &o.table {
        print_table(out, t, max_rows)?;
    }
    writeln!(out, "    {}", metrics_line(&o.metrics))
}

fn repl(engine: Arc<Engine>, principal: &str, max_rows: usize) -> anyhow::Result<()> {
    let mut session = Session::new(engine, principal);
    let stdin = io::stdin();
    let mut stdout = io::stdout().lock();
    let mut buf = String::new();
    let mut failed = false;
    for line in stdin.lock().lines() {
        let line = line?;
        let trimmed = line.trim();
        if buf.is_empty() && trimmed.starts_with('.') {
            let mut parts = trimmed.splitn(2, ' ');
            match (parts.next().unwrap(), parts.next().map(str::trim)) {
                (".quit" | ".exit", _) => break,
                (".tables", _) => {
                    for (name, t) in session.workspace().tables() {
                        writeln!(stdout, "{name}\t{} rows", t.len())?;
                    }
                }
                (".log", _) => {
                    for e in session.workspace().log() {
                        writeln!(stdout, "{}\t{}\t{}", e.index, e.mode, e.text.replace('\n', " "))?;
                    }
                }
                (".save", Some(dir)) => match session.workspace().save(Path::new(dir)) {
                    Ok(()) => writeln!(stdout, "saved workspace to {dir}")?,
                    Err(e) => {
                        failed = true;
                        eprintln!("{}", describe(e));
                    }
                },
                (".explain", Some(text)) => match session.explain_script(text) {
                    Ok(plan) => writeln!(stdout, "{plan}")?,
                    Err(e) => {
                        failed = true;
                        eprintln!("{}", positioned(e, text));
                    }
                },
                (cmd, _) => eprintln!("unknown command {cmd}; try .tables .log .save DIR .explain STMT .quit"),
            }
            continue;
        }
        if !buf.is_empty() {
            buf.push('\n');
        }
        buf.push_str(&line);
        let complete = trimmed.ends_with(';') || (trimmed.is_empty() && !buf.trim().is_empty());
        if !complete {
            continue;
        }
        let text = std::mem::take(&mut buf);
        if text.trim().is_empty() {
            continue;
        }
        // Statements before a failing one stay committed, so print them first.
        let stmts = match rubicon_core::aql::parse_script(&text) {
            Ok(s) => s,
            Err(e) => {
                failed = true;
                eprintln!("{}", positioned(e, &text));
                continue;
            }
        };
        for stmt in &stmts {
            match session.run(stmt) {
                Ok(o) => print_outcome(&mut stdout, &o, max_rows)?,
                Err(e) => {
                    failed = true;
                    eprintln!("{}", describe(e));
                    break;
                }
            }
        }
        stdout.flush()?;
    }
    if !buf.trim().is_empty() {
        for o in session.execute(&buf).map_err(|e| positioned(e, &buf))? {
            print_outcome(&mut stdout, &o, max_rows)?;
        }
    }
    if failed {
        bail!("one or more statements failed");
    }
    Ok(())
}

fn run(engine: Arc<Engine>, cli: &Cli, script: &Path, compiled: bool, save: Option<&Path>, max_rows: usize) -> anyhow::Result<()> {
    let text = read(script)?;
    let mut session = Session::new(engine, &cli.principal);
    let mut stdout = io::stdout().lock();
    if compiled {
        let s = session.run_compiled_text(&text).map_err(|e| positioned(e, &text))?;
        for o in &s.outcomes {
            print_outcome(&mut stdout, o, max_rows)?;
        }
        writeln!(stdout, "{}", s.plan)?;
        writeln!(stdout, "total {}", metrics_line(&s.metrics))?;
    } else {
        let stmts = rubicon_core::aql::parse_script(&text).map_err(|e| positioned(e, &text))?;
        for stmt in &stmts {
            let o = session.run(stmt).map_err(describe)?;
            print_outcome(&mut stdout, &o, max_rows)?;
        }
    }
    if let Some(dir) = save {
        session.workspace().save(dir).map_err(describe)?;
        writeln!(stdout, "saved workspace to {}", dir.display())?;
    }
    Ok(())
}

fn bench(engine: Arc<Engine>, parallel: bool, workload: &Path, report: Option<&Path>) -> anyhow::Result<()> {
    let w = Workload::load(workload)
        .map_err(describe)
        .with_context(|| format!("loading workload {}", workload.display()))?;
    let r = run_benchmark(&engine, &w, parallel).map_err(describe)?;
    print!("{}", r.render_text());
    if let Some(path) = report {
        std::fs::write(path, r.to_json()).with_context(|| format!("writing {}", path.display()))?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn serve(engine: Arc<Engine>, principal: &str, host: &str, port: u16, timeout: u64) -> anyhow::Result<()> {
    let addr: SocketAddr = format!("{host}:{port}").parse().context("bad --host/--port")?;
    let config = ServerConfig {
        statement_timeout: Duration::from_secs(timeout),
        default_principal: principal.to_string(),
        ..ServerConfig::default()
    };
    let handle = rubicon_server::spawn(engine, addr, config).context("starting server")?;
    println!("listening on http://{}", handle.addr);
    io::stdout().flush()?;
    loop {
        std::thread::park();
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let engine = engine(&cli)?;
    let parallel = !cli.sequential;
    match &cli.command {
        Command::Repl { max_rows } => repl(engine, &cli.principal, *max_rows),
        Command::Run {
            script,
            compiled,
            save,
            max_rows,
        } => run(engine, &cli, script, *compiled, save.as_deref(), *max_rows),
        Command::Explain { script } => {
            let text = read(script)?;
            let session = Session::new(engine, &cli.principal);
            println!("{}", session.explain_script(&text).map_err(|e| positioned(e, &text))?);
            Ok(())
        }
        Command::Bench { workload, report } => bench(engine, parallel, workload, report.as_deref()),
        Command::Serve { port, host, timeout } => serve(engine, &cli.principal, host, *port, *timeout),
    }
}
