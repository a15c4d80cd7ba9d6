//! `dabopt`: sweep the DAB module design space, evaluate single designs and
//! regenerate exports from a saved report.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand};
use log::info;

use dabopt_core::datastore::{load_config, Config, Databases};
use dabopt_core::report::{fmt_g6, SweepReport};
use dabopt_core::synthesis::{
    converter_spec, evaluate_configuration, grid_waveforms, run_sweep, Context, DesignEvaluation,
    DesignVariables,
};

/// Exit status when every evaluated design is infeasible.
const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "dabopt",
    version,
    about = "Cost/loss design-space optimization of DAB converter modules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every (N, f_sw, n) triple and write the reports.
    Sweep {
        /// System and design-space file
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if missing
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long, env = "DABOPT_JOBS")]
        jobs: Option<usize>,
    },
    /// Evaluate one design and print its losses and costs.
    Eval {
        /// System and design-space file
        #[arg(long)]
        config: PathBuf,
        /// Number of modules.
        #[arg(long = "N")]
        n_modules: u32,
        /// Switching frequency in Hz.
        #[arg(long)]
        fsw: f64,
        /// Transformer turns ratio N_s/N_p.
        #[arg(long)]
        n: f64,
        /// Evaluate even when the triple lies outside the configured space.
        #[arg(long)]
        force: bool,
        /// Also print the inductor-current breakpoints of every grid cell.
        #[arg(long)]
        verbose: bool,
    },
    /// Rebuild the CSV exports from an existing report.json.
    Report {
        /// Directory holding report.json from an earlier sweep
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep { config, out, jobs } => sweep(&config, &out, jobs),
        Command::Eval {
            config,
            n_modules,
            fsw,
            n,
            force,
            verbose,
        } => eval(
            &config,
            DesignVariables {
                n_modules,
                f_sw: fsw,
                n,
            },
            force,
            verbose,
        ),
        Command::Report { out } => report(&out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path) -> Result<(Config, Databases)> {
    let config = load_config(path).with_context(|| format!("loading config {}", path.display()))?;
    let dbs = Databases::load(&config.paths).context("loading component databases")?;
    Ok((config, dbs))
}

fn sweep(config_path: &Path, out: &Path, jobs: Option<usize>) -> Result<ExitCode> {
    let (config, dbs) = load(config_path)?;
    let jobs = match jobs {
        Some(0) => bail!("--jobs must be at least 1"),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let ctx = Context::new(&config, &dbs)?;
    info!("sweeping on {jobs} thread(s)");
    let result = run_sweep(&ctx, jobs)?;
    let report = SweepReport::new(&config, &dbs, result);
    let written = report.write_all(out)?;

    let feasible = report.evaluations.iter().filter(|e| e.feasible).count();
    println!(
        "{} designs evaluated, {feasible} feasible, {} on the Pareto front",
        report.evaluations.len(),
        report.pareto.len()
    );
    match report.recommended() {
        Some(e) => println!(
            "recommended: N = {}, f_sw = {} Hz, n = {}: {} USD for 350 kW, min full-load efficiency {}",
            e.vars.n_modules,
            fmt_g6(e.vars.f_sw),
            fmt_g6(e.vars.n),
            fmt_g6(e.scaled_cost.unwrap_or(f64::NAN)),
            fmt_g6(e.min_eff_full_load.unwrap_or(f64::NAN)),
        ),
        None => println!(
            "no design reaches {} full-load efficiency (best {})",
            fmt_g6(config.options.efficiency_threshold),
            report.best_full_load_efficiency.map_or("n/a".into(), fmt_g6)
        ),
    }
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(if feasible == 0 {
        ExitCode::from(EXIT_INFEASIBLE)
    } else {
        ExitCode::SUCCESS
    })
}

fn eval(config_path: &Path, vars: DesignVariables, force: bool, verbose: bool) -> Result<ExitCode> {
    let (config, dbs) = load(config_path)?;
    if !(vars.n_modules >= 1 && vars.f_sw > 0.0 && vars.n > 0.0) {
        bail!("N, fsw and n must be positive");
    }
    if !force && !config.space.contains(vars.n_modules, vars.f_sw, vars.n) {
        bail!(
            "N = {}, fsw = {}, n = {} lies outside the configured design space (use --force)",
            vars.n_modules,
            vars.f_sw,
            vars.n
        );
    }
    let ctx = Context::new(&config, &dbs)?;
    let e = evaluate_configuration(vars, &ctx);
    print_evaluation(&e);
    if verbose {
        let (spec, grid) = converter_spec(&vars, &config);
        if let Ok(waves) = grid_waveforms(&spec, &grid) {
            println!();
            println!("inductor current breakpoints (t [s], i_L [A]):");
            for (op, (w, _)) in grid.iter().zip(&waves) {
                let pts: Vec<String> = w
                    .breakpoints
                    .iter()
                    .map(|(t, i)| format!("({}, {})", fmt_g6(*t), fmt_g6(*i)))
                    .collect();
                println!(
                    "  v_out {:>5} V load {:>4}: d = {} {}",
                    fmt_g6(op.v_out),
                    fmt_g6(op.load_fraction),
                    fmt_g6(w.d),
                    pts.join(" ")
                );
            }
        }
    }
    Ok(if e.feasible {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INFEASIBLE)
    })
}

fn print_evaluation(e: &DesignEvaluation) {
    let v = &e.vars;
    println!(
        "design: N = {}, f_sw = {} Hz, n = {}",
        v.n_modules,
        fmt_g6(v.f_sw),
        fmt_g6(v.n)
    );
    if let Some(l) = e.l_lk {
        println!("leakage inductance: {} H", fmt_g6(l));
    }
    match &e.reason {
        Some(r) => println!("INFEASIBLE: {r}"),
        None => println!("feasible"),
    }
    let c = &e.components;
    if let Some(s) = &c.primary_switches {
        println!(
            "primary switches:   {} x{} per position ({} dies)",
            s.part_id, s.parallel_count, s.devices
        );
    }
    if let Some(s) = &c.secondary_switches {
        println!(
            "secondary switches: {} x{} per position ({} dies)",
            s.part_id, s.parallel_count, s.devices
        );
    }
    for (side, d) in [
        ("primary", &c.primary_cooling),
        ("secondary", &c.secondary_cooling),
    ] {
        if let Some(d) = d {
            let g = &d.geometry;
            println!(
                "{side} cooling: fan {}, L_s {} mm, h_f {} mm, t_f {} mm, {} fins, R_th {} K/W",
                d.fan.part_id,
                fmt_g6(g.l_s * 1e3),
                fmt_g6(g.h_f * 1e3),
                fmt_g6(g.t_f * 1e3),
                g.n_f,
                fmt_g6(d.r_th_s_a)
            );
        }
    }
    if let Some(t) = &c.transformer {
        let g = &t.geometry;
        println!(
            "transformer: w_core {} mm, d_core {} mm, h_wind {} mm, w_lk {} mm, foil {} mm, N_p {}, N_s {}, L_lk {} H, B_max {} T, hotspot {} °C",
            fmt_g6(g.w_core * 1e3),
            fmt_g6(g.d_core * 1e3),
            fmt_g6(g.h_wind * 1e3),
            fmt_g6(g.w_lk * 1e3),
            fmt_g6(g.w_foil * 1e3),
            g.n_p,
            g.n_s,
            fmt_g6(t.l_lk_tx),
            fmt_g6(t.b_max),
            fmt_g6(t.hotspots.max())
        );
    }
    if let Some(b) = &c.capacitor {
        println!(
            "capacitor bank: {} {}s x {}p, {} F (need {} F), ESR {} ohm",
            b.part_id,
            b.series_count,
            b.parallel_count,
            fmt_g6(b.capacitance()),
            fmt_g6(c.c_required.unwrap_or(0.0)),
            fmt_g6(b.esr())
        );
    }

    println!();
    println!("module cost breakdown [USD]:");
    let rows = [
        ("switches", e.cost.switches),
        ("cooling", e.cost.cooling),
        ("transformer", e.cost.transformer),
        ("capacitors", e.cost.capacitors),
        ("module total", e.cost.module()),
        ("350 kW total", e.scaled_cost),
    ];
    for (name, v) in rows {
        println!("  {name:<13} {}", v.map_or("-".into(), fmt_g6));
    }

    if e.points.is_empty() {
        return;
    }
    println!();
    println!("operating grid:");
    println!(
        "  {:>7} {:>5} {:>6} {:>9} {:>8} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "v_out", "load", "v_in", "p_out", "d", "switches", "core", "winding", "cap", "eff"
    );
    for p in &e.points {
        println!(
            "  {:>7} {:>5} {:>6} {:>9} {:>8} {:>9} {:>9} {:>9} {:>9} {:>9}",
            fmt_g6(p.v_out),
            fmt_g6(p.load_fraction),
            fmt_g6(p.v_in),
            fmt_g6(p.p_out),
            fmt_g6(p.d),
            fmt_g6(p.loss_switches()),
            fmt_g6(p.loss_core),
            fmt_g6(p.loss_winding),
            fmt_g6(p.loss_capacitor),
            fmt_g6(p.efficiency)
        );
    }
    println!();
    let show = |x: Option<f64>| x.map_or("-".into(), fmt_g6);
    println!("average module loss:          {} W", show(e.avg_loss));
    println!(
        "min efficiency at full load:  {}",
        show(e.min_eff_full_load)
    );
    println!(
        "mean efficiency at full load: {}",
        show(e.mean_eff_full_load)
    );
    println!("mean efficiency, all cells:   {}", show(e.avg_eff_all));
}

fn report(out: &Path) -> Result<ExitCode> {
    let path = out.join("report.json");
    if !path.exists() {
        bail!("{} not found; run `dabopt sweep` first", path.display());
    }
    let report = SweepReport::read(&path)?;
    for p in report.write_csvs(out)? {
        println!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}
