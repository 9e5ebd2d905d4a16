mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use patcharray::cache::ResultCache;
use patcharray::em::touchstone::{parse_csv, to_csv, to_touchstone};
use patcharray::em::{assembly_calls, find_resonance, frequency_grid};
use patcharray::experiments::{self, regenerate_report, run_study, sparam_svg, Study, StudyContext};
use patcharray::optimizer::{antenna_cost, design_to_genes, genes_to_design, run_ga, trace_csv};
use patcharray::simulation::{simulate, SimulationOutput};
use patcharray::Error;
use serde_json::json;

use config::RunConfig;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_TREND: u8 = 4;
const EXIT_IO: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "patcharray", version, about = "Simulate and optimize 2x2 concave microstrip patch arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Result cache directory (default: <out>/cache).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Worker threads for assembly and fitness evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Random seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One frequency sweep of the configured array.
    Simulate,
    /// A concavity study, or the optimum-versus-baseline comparison.
    Sweep {
        #[arg(value_enum)]
        study: StudyArg,
    },
    /// Fuzzy-adaptive GA over (W, L, ins, h1, h2).
    Optimize,
    /// Rebuild SVG plots and markdown summaries from CSV outputs.
    Report {
        /// Results directory (a study output or a parent of several).
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StudyArg {
    Width,
    Length,
    Both,
    Optimal,
}

impl From<StudyArg> for Study {
    fn from(s: StudyArg) -> Study {
        match s {
            StudyArg::Width => Study::Width,
            StudyArg::Length => Study::Length,
            StudyArg::Both => Study::Both,
            StudyArg::Optimal => Study::Optimal,
        }
    }
}

/// A failure with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), message: e.to_string() }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Geometry(_) | Error::Config { .. } | Error::Format { .. } => EXIT_CONFIG,
        Error::Mesh(_) | Error::Solver(_) => EXIT_SOLVER,
        Error::StudyPoint { source, .. } => exit_code(source),
        Error::Io { .. } => EXIT_IO,
    }
}

struct Env {
    cfg: RunConfig,
    out: PathBuf,
    cache: ResultCache,
}

impl Env {
    fn new(cli: &Cli) -> Result<Self, Failure> {
        let mut cfg = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if cli.seed.is_some() {
            cfg.seed = cli.seed;
        }
        cfg.validate()?;
        let out = cli.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
        let cache_dir = cli.cache.clone().or_else(|| cfg.output.cache.clone()).unwrap_or_else(|| out.join("cache"));
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        let cache = ResultCache::open(cache_dir)?;
        Ok(Env { cfg, out, cache })
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf, Failure> {
        let path = self.out.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn metadata(&self, command: &str, extra: serde_json::Value, solver_calls: u64) -> Result<(), Failure> {
        let mut meta = json!({
            "tool": "patcharray",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": self.cfg.ga().seed,
            "config": serde_json::to_value(&self.cfg).expect("configs serialize"),
            "config_toml": self.cfg.to_toml(),
            "cache_dir": self.cache.root().display().to_string(),
            "solver_calls": solver_calls,
        });
        if let (Some(m), serde_json::Value::Object(e)) = (meta.as_object_mut(), extra) {
            m.extend(e);
        }
        self.write("metadata.json", &(serde_json::to_string_pretty(&meta).expect("json") + "\n"))?;
        Ok(())
    }
}

fn sim_metadata(out: &SimulationOutput) -> serde_json::Value {
    json!({
        "eps_eff": out.eps_eff,
        "trace_width_mm": out.trace_width,
        "mesh": out.mesh,
        "cache_hits": out.cache_hits,
        "points_solved": out.solver_calls,
    })
}

/// Touchstone, CSV and SVG of one sweep under `stem`.
fn write_sweep(env: &Env, stem: &str, out: &SimulationOutput) -> Result<(), Failure> {
    env.write(&format!("{stem}.s4p"), &to_touchstone(&out.table))?;
    let csv = to_csv(&out.table);
    env.write(&format!("{stem}.csv"), &csv)?;
    let rows = parse_csv(&csv)?;
    env.write(&format!("{stem}.svg"), &sparam_svg(&[(stem.to_string(), rows)]))?;
    Ok(())
}

fn cmd_simulate(env: &Env) -> Result<(), Failure> {
    let w = &env.cfg.sweep;
    let calls0 = assembly_calls();
    let out = simulate(&env.cfg.scene(), &env.cfg.solver, &frequency_grid(w.f_start, w.f_stop, w.n_points), Some(&env.cache))?;
    write_sweep(env, "sparams", &out)?;
    let res = find_resonance(&out.table, 1).map_err(Error::from)?;
    println!(
        "resonance {:.4} GHz (|S11| {:.2} dB{}), {} unknowns, {} points solved",
        res.frequency_ghz,
        20.0 * res.magnitude.log10(),
        if res.bracketed { "" } else { ", at window edge" },
        out.mesh.unknowns,
        out.solver_calls
    );
    let mut extra = sim_metadata(&out);
    extra["resonance"] = json!(res);
    env.metadata("simulate", extra, assembly_calls() - calls0)
}

fn cmd_sweep(env: &Env, study: Study) -> Result<(), Failure> {
    let calls0 = assembly_calls();
    let scene = env.cfg.scene();
    let ctx = StudyContext { scene: &scene, solver: &env.cfg.solver, study: &env.cfg.study, cache: Some(&env.cache) };
    let outcome = run_study(study, &ctx, &env.out)?;
    let report = &outcome.report;
    for r in &report.rows {
        println!("{:>10}  resonance {:.4} GHz  max coupling {:.2} dB  cost {:.4}", r.label, r.resonance_ghz, r.max_coupling_ref_db, r.cost_f0);
    }
    for c in &report.checks {
        let tag = match (c.hard, c.passed) {
            (true, true) => "PASS",
            (true, false) => "FAIL",
            (false, true) => "agree",
            (false, false) => "disagree",
        };
        println!("[{tag}] {}: {}", c.name, c.detail);
    }
    let extra = json!({ "study": study.name(), "passed": report.passed(), "points_solved": outcome.solver_calls, "checks": report.checks });
    env.metadata(&format!("sweep {}", study.name()), extra, assembly_calls() - calls0)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_TREND, message: format!("{} study: trend assertion failed (report written to {})", study.name(), env.out.display()) })
    }
}

fn cmd_optimize(env: &Env) -> Result<(), Failure> {
    let calls0 = assembly_calls();
    let cfg = &env.cfg;
    let scene = cfg.scene();
    let obj = &cfg.objective;
    let objective = |genes: &[f64]| {
        let design = genes_to_design(genes);
        let rec = antenna_cost(&design, &scene, &cfg.solver, obj.f0, &obj.weights, Some(&env.cache));
        rec.s.map(|_| rec.cost)
    };
    let seeds = vec![design_to_genes(&cfg.design)];
    let result = run_ga(&cfg.ga(), &cfg.bounds, &seeds, objective, Some(obj.max_failure_fraction)).map_err(|e| Failure {
        code: EXIT_SOLVER,
        message: format!("generation {}: {} of {} evaluations failed to simulate", e.generation, e.failures, e.population),
    })?;
    env.write("ga_trace.csv", &trace_csv(&result.trace))?;
    let best = genes_to_design(&result.best.genes);
    let best_cfg = RunConfig { design: best, ..cfg.clone() };
    env.write("best_design.toml", &best_cfg.to_toml())?;
    let w = &cfg.sweep;
    let out = simulate(&scene.with_design(best), &cfg.solver, &frequency_grid(w.f_start, w.f_stop, w.n_points), Some(&env.cache))?;
    write_sweep(env, "best", &out)?;
    let baseline_cost = result.seed_costs[0];
    println!(
        "best cost {:.6} (baseline {:.6}) at W={} L={} ins={} h1={} h2={}",
        result.best.cost, baseline_cost, best.w, best.l, best.ins, best.h1, best.h2
    );
    let mut extra = sim_metadata(&out);
    extra["best_design"] = json!(best);
    extra["best_cost"] = json!(result.best.cost);
    extra["baseline_cost"] = json!(baseline_cost);
    extra["generations"] = json!(result.trace.len());
    env.metadata("optimize", extra, assembly_calls() - calls0)
}

fn has(dir: &Path, name: &str) -> bool {
    dir.join(name).is_file()
}

fn cmd_report(cli: &Cli, dir: &Path) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let bad = |m: String| Failure { code: EXIT_CONFIG, message: m };
    let entries = fs::read_dir(dir).map_err(|e| bad(format!("{}: {e}", dir.display())))?;
    let mut dirs = vec![dir.to_path_buf()];
    let mut subdirs: Vec<PathBuf> = entries.flatten().map(|e| e.path()).filter(|p| p.is_dir()).collect();
    subdirs.sort();
    dirs.extend(subdirs);
    let mut summaries = Vec::new();
    let mut regenerated = 0;
    for d in &dirs {
        if has(d, experiments::REPORT_FILE) {
            let report = regenerate_report(d, &cfg.study)?;
            println!("{}: {} study, {} points, {}", d.display(), report.study, report.rows.len(), if report.passed() { "PASS" } else { "FAIL" });
            for r in &report.rows {
                println!("  {:>10}  resonance {:.4} GHz", r.label, r.resonance_ghz);
            }
            summaries.push(fs::read_to_string(d.join(experiments::SUMMARY_MD)).map_err(|e| Error::io(d, e))?);
            regenerated += 1;
        }
        for stem in ["sparams", "best"] {
            let csv = d.join(format!("{stem}.csv"));
            if csv.is_file() {
                let rows = parse_csv(&fs::read_to_string(&csv).map_err(|e| Error::io(&csv, e))?)?;
                let svg = d.join(format!("{stem}.svg"));
                fs::write(&svg, sparam_svg(&[(stem.to_string(), rows)])).map_err(|e| Error::io(&svg, e))?;
                regenerated += 1;
            }
        }
    }
    if regenerated == 0 {
        return Err(bad(format!("{}: no report.csv or S-parameter CSV found", dir.display())));
    }
    if !has(dir, experiments::REPORT_FILE) && summaries.len() > 1 {
        let path = dir.join(experiments::SUMMARY_MD);
        fs::write(&path, summaries.join("\n")).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Failure { code: EXIT_CONFIG, message: format!("--threads: {e}") })?;
    }
    match &cli.command {
        Command::Report { dir } => cmd_report(cli, dir),
        Command::Simulate => cmd_simulate(&Env::new(cli)?),
        Command::Sweep { study } => cmd_sweep(&Env::new(cli)?, (*study).into()),
        Command::Optimize => cmd_optimize(&Env::new(cli)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

