//! `clexsim` — run routing and all-to-all experiments on clique-expander
//! networks (with a 3-D torus baseline) and compare the results.
//!
//! `clexsim run` executes one experiment described by a TOML config or a
//! built-in preset and emits a human table, a CSV, a JSON report, and
//! optionally an SVG decay plot. `clexsim compare` reads a saved JSON
//! report and prints the torus-baseline ratios.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use clexsim_core::engine::{estimate_memory_mb, memory_budget_mb, run_experiment};
use clexsim_core::metrics::{bandwidth_gain, hop_ratio, propagation_ratio, LevelMetrics};
use clexsim_core::report::{render_ata_table, render_decay_svg, render_table, write_csv};
use clexsim_core::topology::{build_clex, build_torus};
use clexsim_core::{clex_all_to_all, torus_all_to_all, AtaStats};

use config::Config;

#[derive(Parser)]
#[command(
    name = "clexsim",
    version,
    about = "Simulator for recursive clique-expander networks with a 3-D torus baseline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML config or a built-in preset.
    Run(RunArgs),
    /// Print torus-baseline ratios for a saved JSON report.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment description (TOML).
    #[arg(long, value_name = "PATH", conflicts_with = "table")]
    config: Option<PathBuf>,
    /// Built-in preset: 1/2 dense, 3/4 light reference scenarios.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    table: Option<u8>,
    /// Override the experiment seed (traffic and balancer).
    #[arg(long)]
    seed: Option<u64>,
    /// Scale the network: base (and per-node load with it) for clex,
    /// ring sizes for torus.
    #[arg(long, value_name = "FACTOR")]
    scale: Option<f64>,
    /// Also write the balancing-decay SVG plot.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// JSON report produced by `clexsim run`.
    report: PathBuf,
    /// Node count of the torus baseline; must match the report's network.
    n: u64,
    /// Per-link bandwidth for the effective-bandwidth figure (defaults to
    /// the report's model.B, then 1).
    #[arg(long)]
    bandwidth: Option<f64>,
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe (e.g. `clexsim run | head`) closes,
    // instead of panicking on the failed write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = match (&args.config, args.table) {
        (Some(path), None) => Config::load(path)?,
        (None, Some(table)) => Config::preset(table)?,
        (None, None) => bail!("pass --config PATH or --table N (1-4)"),
        (Some(_), Some(_)) => unreachable!("clap rejects --config with --table"),
    };
    if let Some(factor) = args.scale {
        cfg.apply_scale(factor)?;
    }
    if let Some(seed) = args.seed {
        cfg.traffic.seed = seed;
    }
    match (cfg.topology.kind.as_str(), cfg.traffic.pattern.as_str()) {
        ("torus", _) | ("clex", "all_to_all") => run_all_to_all(&cfg, &args),
        ("clex", _) => run_routed(&cfg, &args),
        (kind, _) => bail!("unknown topology kind \"{kind}\""),
    }
}

fn clex_size(cfg: &Config) -> Result<(u32, u32, u64)> {
    let base = cfg.topology.base.expect("validated clex config");
    let levels = cfg.topology.levels.expect("validated clex config");
    let n = (base as u64)
        .checked_pow(levels)
        .filter(|&n| n <= u64::from(u32::MAX))
        .ok_or_else(|| {
            anyhow!("base^levels = {base}^{levels} exceeds the 2^32 node-id space")
        })?;
    Ok((base, levels, n))
}

fn run_routed(cfg: &Config, args: &RunArgs) -> Result<()> {
    let (base, levels, n) = clex_size(cfg)?;
    // Refuse infeasible runs before any allocation happens.
    let estimate = estimate_memory_mb(n, cfg.traffic.per_node, levels);
    let budget = memory_budget_mb();
    if estimate > budget {
        bail!(
            "estimated {estimate} MiB for {n} nodes x {} messages/node exceeds the \
             {budget} MiB memory budget; shrink the run or set CLEXSIM_MEM_BUDGET_MB",
            cfg.traffic.per_node
        );
    }

    let t = build_clex(base, levels)?;
    let report = run_experiment(&t, &cfg.traffic_spec(), &cfg.engine_config())?;
    println!(
        "clex base {base}, levels {levels}: {n} nodes, {} msgs/node, pattern {}, seed {}",
        report.per_node, report.pattern, report.seed
    );
    println!("injected {}  delivered {}", report.injected, report.delivered);
    if cfg.wants("table") {
        println!();
        println!("{}", render_table(&report.level_metrics));
    }

    let dir = Path::new(&cfg.output.dir);
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output dir {}", dir.display()))?;
    let mut written = Vec::new();
    if cfg.wants("csv") {
        let path = dir.join("report.csv");
        fs::write(&path, write_csv(&report.level_metrics))?;
        written.push(path);
    }
    if cfg.wants("json") {
        let path = dir.join("report.json");
        let payload = serde_json::json!({ "config": cfg, "report": report });
        fs::write(&path, serde_json::to_string_pretty(&payload)?)?;
        written.push(path);
    }
    if cfg.wants("svg") || args.plot {
        let path = dir.join("decay.svg");
        fs::write(&path, render_decay_svg(&report.decay_series))?;
        written.push(path);
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_all_to_all(cfg: &Config, args: &RunArgs) -> Result<()> {
    let stats: AtaStats;
    match cfg.topology.kind.as_str() {
        "clex" => {
            let (base, levels, n) = clex_size(cfg)?;
            let t = build_clex(base, levels)?;
            stats = clex_all_to_all(&t, &t.embedding());
            println!("clex base {base}, levels {levels}: {n} nodes, all-to-all flood");
        }
        _ => {
            let (k1, k2, k3) = (
                cfg.topology.k1.expect("validated torus config"),
                cfg.topology.k2.expect("validated torus config"),
                cfg.topology.k3.expect("validated torus config"),
            );
            let t = build_torus(k1, k2, k3)?;
            stats = torus_all_to_all(&t);
            println!("torus {k1}x{k2}x{k3}: {} nodes, all-to-all flood", t.n());
        }
    }
    println!();
    println!("{}", render_ata_table(&stats));
    let model = cfg.delay_model();
    println!(
        "flood delay estimate: {:.2} time units (c_h {} per hop, c_p {} per unit length)",
        model.delay(u64::from(stats.max_depth), stats.max_propagation),
        model.c_h,
        model.c_p
    );

    let dir = Path::new(&cfg.output.dir);
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output dir {}", dir.display()))?;
    let mut written = Vec::new();
    if cfg.wants("csv") {
        let mut csv = String::from("level,traversals,share,per_link_load\n");
        for (i, &t) in stats.per_level_traversals.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{:.4},{:.2}\n",
                i + 1,
                t,
                stats.per_level_share[i],
                stats.per_link_load[i]
            ));
        }
        let path = dir.join("report.csv");
        fs::write(&path, csv)?;
        written.push(path);
    }
    if cfg.wants("json") {
        let path = dir.join("report.json");
        let payload = serde_json::json!({ "config": cfg, "all_to_all": stats });
        fs::write(&path, serde_json::to_string_pretty(&payload)?)?;
        written.push(path);
    }
    if args.plot {
        println!("note: decay plots apply to routed runs, not all-to-all floods");
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let text = fs::read_to_string(&args.report)
        .with_context(|| format!("cannot read report {}", args.report.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("{} is not valid JSON", args.report.display()))?;
    // Accept both the `run` output wrapper and a bare report object.
    let report = value.get("report").unwrap_or(&value);

    if let Some(kind) = report.get("kind").and_then(|v| v.as_str()) {
        if !kind.starts_with("clex") {
            bail!("comparison needs a clex routing report, got kind \"{kind}\"");
        }
    }
    let metrics: Vec<LevelMetrics> = report
        .get("level_metrics")
        .cloned()
        .map(serde_json::from_value)
        .transpose()
        .context("malformed level_metrics in report")?
        .unwrap_or_default();
    if metrics.is_empty() {
        bail!("report has no per-level metrics to compare");
    }
    let n = report
        .get("n")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| anyhow!("report lacks a node count `n`"))?;
    if n != args.n {
        bail!("torus size {} does not match the report's {n} nodes", args.n);
    }
    let base = report.get("base").and_then(|v| v.as_u64()).unwrap_or(2).max(2);
    let bandwidth = args
        .bandwidth
        .or_else(|| value.pointer("/config/model/B").and_then(|v| v.as_f64()))
        .unwrap_or(1.0);

    // Equal-size torus baseline: rings of k = n^(1/3), flood sweep radius
    // 3k/2, and per-level cluster growth of base^(1/3) in linear extent.
    let k = (n as f64).cbrt();
    let growth = (base as f64).cbrt();
    println!(
        "clex n {n} (base {base}) vs 3-D torus of {n} nodes (k = {k:.1}, sweep {:.1} hops)",
        1.5 * k
    );
    println!("bandwidth_gain    = {:.2}", bandwidth_gain(&metrics, n));
    println!("hop_ratio         = {:.2}", hop_ratio(&metrics, n));
    println!(
        "propagation_ratio = {:.2}   (growth {growth:.2} per level)",
        propagation_ratio(&metrics, growth)
    );
    let effective = if n <= 1 { bandwidth } else { 2.0 * bandwidth / (3.0 * k) };
    println!("torus_effective_bandwidth = {effective:.4}   (B = {bandwidth})");
    Ok(())
}
