mod output;
mod plot;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use eiconv::harness::{
    adversarial_lower_bound, divergence_experiment, random_mesh_experiment, rate_sweep, run_trial,
    AdversaryReport, ExperimentConfig, MeshExperiment, RateRow, RegretRecord,
};
use serde_json::json;

use crate::output::OutDir;

#[derive(Parser, Debug)]
#[command(name = "eiconv", version, about = "Expected-improvement convergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One trial per seed for the configured strategy and objective.
    Run(Common),
    /// Strategy × objective × seed sweep with fitted regret slopes.
    Rates(Common),
    /// Plateau-with-spike experiment comparing likelihood and robust scales.
    Diverge(Common),
    /// Bump-family lower bound for a deterministic strategy.
    Adversary(Common),
    /// Mesh norms of i.i.d. uniform designs.
    Mesh(Common),
    /// Render a per-step CSV as a log-log regret plot (SVG).
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment description (TOML).
    config: PathBuf,
    /// Replace the configured seeds by this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "EICONV_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// CSV with `n` and `regret` columns.
    input: PathBuf,
    /// Defaults to the input path with an `.svg` extension.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Step window `LO,HI` for the slope fit; defaults to the whole run.
    #[arg(long, value_parser = parse_window)]
    window: Option<(usize, usize)>,
}

fn parse_window(s: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo >= hi {
        return Err("LO must be below HI".into());
    }
    Ok((lo, hi))
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    let mut cfg: ExperimentConfig =
        toml::from_str(&text).with_context(|| format!("parsing {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        cfg.override_seed(seed);
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(c) => cmd_run(&c),
        Command::Rates(c) => cmd_rates(&c),
        Command::Diverge(c) => cmd_diverge(&c),
        Command::Adversary(c) => cmd_adversary(&c),
        Command::Mesh(c) => cmd_mesh(&c),
        Command::Plot(p) => cmd_plot(&p),
    }
}

fn cmd_run(c: &Common) -> Result<()> {
    let cfg = load(c)?;
    cfg.validate_trials()?;
    let out = OutDir::create(&c.out)?;
    for (si, strategy) in cfg.all_strategies().iter().enumerate() {
        for (oi, objective) in cfg.build_objectives()?.iter().enumerate() {
            for seed in cfg.seeds.seeds() {
                let record = run_trial(strategy, objective, cfg.steps, seed)?;
                let stem = format!("run_{}_s{si}_o{oi}_seed{seed}", strategy.variant);
                let path = out.csv(&stem, &step_header(&record), step_rows(&record))?;
                out.json(
                    &stem,
                    &json!({
                        "command": "run",
                        "seed": seed,
                        "steps": cfg.steps,
                        "domain": cfg.domain,
                        "strategy": record.strategy,
                        "objective": record.objective,
                        "min_value": record.min_value,
                        "min_exact": record.min_exact,
                    }),
                )?;
                println!("{} final regret {:.3e}", path.display(), last_regret(&record));
            }
        }
    }
    Ok(())
}

fn last_regret(record: &RegretRecord) -> f64 {
    record.steps.last().map_or(f64::NAN, |s| s.regret)
}

fn step_header(record: &RegretRecord) -> Vec<String> {
    let d = record.steps.first().map_or(0, |s| s.x.len());
    let theta_dim = record
        .steps
        .iter()
        .find_map(|s| s.theta_hat.as_ref().map(Vec::len))
        .unwrap_or(0);
    let mut h = vec!["n".to_string()];
    h.extend((0..d).map(|i| format!("x{i}")));
    h.extend(["z", "best_z"].map(String::from));
    h.extend((0..d).map(|i| format!("rec{i}")));
    h.extend(["rec_value", "regret", "sigma_hat"].map(String::from));
    h.extend((0..theta_dim).map(|i| format!("theta_hat{i}")));
    h
}

fn step_rows(record: &RegretRecord) -> Vec<Vec<String>> {
    let width = step_header(record).len();
    record
        .steps
        .iter()
        .map(|s| {
            let mut row = vec![s.n.to_string()];
            row.extend(s.x.iter().map(f64::to_string));
            row.push(s.z.to_string());
            row.push(s.best_z.to_string());
            row.extend(s.recommendation.iter().map(f64::to_string));
            row.push(s.rec_value.to_string());
            row.push(s.regret.to_string());
            row.push(s.sigma_hat.map_or(String::new(), |v| v.to_string()));
            if let Some(t) = &s.theta_hat {
                row.extend(t.iter().map(f64::to_string));
            }
            row.resize(width, String::new());
            row
        })
        .collect()
}

fn cmd_rates(c: &Common) -> Result<()> {
    let cfg = load(c)?;
    cfg.validate_trials()?;
    let window = cfg
        .rates
        .as_ref()
        .map(|r| r.window)
        .unwrap_or(((cfg.steps / 10).max(1), cfg.steps));
    let strategies = cfg.all_strategies();
    let objectives = cfg.build_objectives()?;
    let seeds = cfg.seeds.seeds();
    let rows = rate_sweep(&strategies, &objectives, &seeds, cfg.steps, window)?;
    let out = OutDir::create(&c.out)?;
    let header = ["strategy", "variant", "objective", "seed", "slope", "final_regret"].map(String::from);
    let path = out.csv("rates", &header, rows.iter().map(rate_row).collect())?;
    out.json(
        "rates",
        &json!({
            "command": "rates",
            "steps": cfg.steps,
            "window": window,
            "seeds": seeds,
            "domain": cfg.domain,
            "strategies": strategies,
            "objectives": cfg.all_objectives(),
        }),
    )?;
    for (si, s) in strategies.iter().enumerate() {
        for oi in 0..objectives.len() {
            let slopes: Vec<f64> = rows
                .iter()
                .filter(|r| r.strategy == si && r.objective == oi)
                .map(|r| r.slope)
                .collect();
            println!(
                "strategy {si} ({}) objective {oi}: median slope {:.3}",
                s.variant,
                eiconv::harness::median(&slopes)
            );
        }
    }
    println!("{}", path.display());
    Ok(())
}

fn rate_row(r: &RateRow) -> Vec<String> {
    vec![
        r.strategy.to_string(),
        r.variant.to_string(),
        r.objective.to_string(),
        r.seed.to_string(),
        r.slope.to_string(),
        r.final_regret.to_string(),
    ]
}

fn cmd_diverge(c: &Common) -> Result<()> {
    let cfg = load(c)?;
    let mut opts = cfg.diverge.clone().unwrap_or_default();
    if let Some(seed) = c.seed {
        opts.seed = seed;
    }
    let n_seeds = cfg.seeds.seeds().len();
    if cfg.steps == 0 || n_seeds == 0 {
        bail!("diverge needs steps > 0 and at least one seed");
    }
    let report = divergence_experiment(cfg.steps, n_seeds, &opts)?;
    let out = OutDir::create(&c.out)?;
    let header = ["variant", "seed", "stuck", "first_spike_hit", "final_regret"].map(String::from);
    let mut rows = Vec::new();
    for outcome in [&report.mle, &report.robust] {
        for (i, seed) in report.seeds.iter().enumerate() {
            rows.push(vec![
                outcome.variant.to_string(),
                seed.to_string(),
                outcome.stuck[i].to_string(),
                outcome.first_spike_hit[i].map_or(String::new(), |n| n.to_string()),
                outcome.final_regret[i].to_string(),
            ]);
        }
    }
    let path = out.csv("diverge", &header, rows)?;
    out.json(
        "diverge",
        &json!({
            "command": "diverge",
            "options": opts,
            "steps": cfg.steps,
            "seeds": report.seeds,
            "delta": report.delta,
            "min_g": report.min_g,
            "stuck_fraction": { "ei_mle": report.mle.stuck_fraction, "ei_robust": report.robust.stuck_fraction },
            "separation": report.separation(),
        }),
    )?;
    println!(
        "stuck fraction: ei_mle {:.2}, ei_robust {:.2} (delta {}, min g {})",
        report.mle.stuck_fraction, report.robust.stuck_fraction, report.delta, report.min_g
    );
    println!("{}", path.display());
    Ok(())
}

fn cmd_adversary(c: &Common) -> Result<()> {
    let cfg = load(c)?;
    let section = cfg.adversary.clone().context("config has no [adversary] table")?;
    let strategies = cfg.all_strategies();
    if strategies.is_empty() {
        bail!("no strategy configured");
    }
    let seeds = cfg.seeds.seeds();
    let mut reports: Vec<(usize, u64, AdversaryReport)> = Vec::new();
    for (si, strategy) in strategies.iter().enumerate() {
        for &k in &section.k {
            for &seed in &seeds {
                reports.push((si, seed, adversarial_lower_bound(strategy, k, section.nu, section.amplitude, seed)?));
            }
        }
    }
    let out = OutDir::create(&c.out)?;
    let header = [
        "strategy", "variant", "seed", "k", "d", "steps", "member", "replay_identical", "loss", "expected_loss",
    ]
    .map(String::from);
    let rows = reports
        .iter()
        .map(|(si, seed, r)| {
            vec![
                si.to_string(),
                strategies[*si].variant.to_string(),
                seed.to_string(),
                r.k.to_string(),
                r.d.to_string(),
                r.steps.to_string(),
                r.member.to_string(),
                r.replay_identical.to_string(),
                r.loss.to_string(),
                r.expected_loss.to_string(),
            ]
        })
        .collect();
    let path = out.csv("adversary", &header, rows)?;
    out.json(
        "adversary",
        &json!({
            "command": "adversary",
            "section": section,
            "strategies": strategies,
            "seeds": seeds,
            "reports": reports.iter().map(|r| &r.2).collect::<Vec<_>>(),
        }),
    )?;
    for (si, _, r) in &reports {
        println!(
            "strategy {si} k={} loss {:.6} expected {:.6} replay {}",
            r.k, r.loss, r.expected_loss, r.replay_identical
        );
    }
    println!("{}", path.display());
    Ok(())
}

fn cmd_mesh(c: &Common) -> Result<()> {
    let cfg = load(c)?;
    let section = cfg.mesh.clone().context("config has no [mesh] table")?;
    let seeds = cfg.seeds.seeds();
    let base = seeds.first().copied().unwrap_or(0);
    let experiments: Vec<MeshExperiment> = section
        .d
        .iter()
        .map(|&d| random_mesh_experiment(&section.n, seeds.len().max(1), d, section.resolution, base))
        .collect::<eiconv::Result<_>>()?;
    let out = OutDir::create(&c.out)?;
    let header = ["d", "n", "median_h", "p95_h", "p95_normalized"].map(String::from);
    let rows = experiments
        .iter()
        .flat_map(|e| {
            e.rows.iter().map(move |r| {
                vec![
                    e.d.to_string(),
                    r.n.to_string(),
                    r.median_h.to_string(),
                    r.p95_h.to_string(),
                    r.p95_normalized.to_string(),
                ]
            })
        })
        .collect();
    let path = out.csv("mesh", &header, rows)?;
    out.json(
        "mesh",
        &json!({ "command": "mesh", "section": section, "seed": base, "experiments": experiments }),
    )?;
    for e in &experiments {
        println!(
            "d={} Mann-Kendall S={} p(increasing)={:.3} monotone={}",
            e.d, e.trend_s, e.trend_p_increasing, e.monotone
        );
    }
    println!("{}", path.display());
    Ok(())
}

fn cmd_plot(p: &PlotArgs) -> Result<()> {
    let output = p
        .output
        .clone()
        .unwrap_or_else(|| Path::new(&p.input).with_extension("svg"));
    let series = plot::read_series(&p.input)?;
    let svg = plot::render(&series, p.window, &p.input.display().to_string())?;
    std::fs::write(&output, svg).with_context(|| format!("writing {}", output.display()))?;
    println!("{}", output.display());
    Ok(())
}
