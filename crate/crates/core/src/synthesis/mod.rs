//! Full design evaluation of one (N, f_sw, n) triple, the parallel sweep over
//! the design space, and the reductions on its result: 350 kW scaling,
//! normalization, Pareto membership and the efficiency benchmark.

pub mod pareto;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capbank::{capacitor_loss, required_capacitance, select_bank, CapacitorBank};
use crate::cooling::{required_rth, CoolingCatalog, CoolingDesign, GeometryGrid};
use crate::datastore::{Config, Databases, DesignSpace};
use crate::electrical::{
    build_waveform, extract_current_stats, output_voltage_grid, size_leakage_inductance,
    solve_phase_shift, ConverterSpec, CurrentStats, OperatingPoint, WaveformSolution,
};
use crate::error::{Error, Result};
use crate::magnetics::{
    optimize_transformer, OperatingWaveform, TransformerDesign, TransformerRequirements,
    TransformerSpace,
};
use crate::semis::{position_losses, select_device, Bridge, SwitchSelection};
pub use pareto::{min_max, pareto_front};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignVariables {
    pub n_modules: u32,
    pub f_sw: f64,
    /// Transformer turns ratio N_s/N_p.
    pub n: f64,
}

/// Losses and efficiency of one module at one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub v_out: f64,
    pub load_fraction: f64,
    pub v_in: f64,
    pub p_out: f64,
    pub d: f64,
    pub loss_primary_switches: f64,
    pub loss_secondary_switches: f64,
    pub loss_core: f64,
    pub loss_winding: f64,
    pub loss_capacitor: f64,
    pub t_j_primary: f64,
    pub t_j_secondary: f64,
    pub efficiency: f64,
}

impl PointResult {
    pub fn loss_switches(&self) -> f64 {
        self.loss_primary_switches + self.loss_secondary_switches
    }

    pub fn loss_transformer(&self) -> f64 {
        self.loss_core + self.loss_winding
    }

    pub fn loss_total(&self) -> f64 {
        self.loss_switches() + self.loss_transformer() + self.loss_capacitor
    }
}

/// Module cost by component; a field stays empty when its stage was not
/// reached.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub switches: Option<f64>,
    pub cooling: Option<f64>,
    pub transformer: Option<f64>,
    pub capacitors: Option<f64>,
}

impl CostBreakdown {
    pub fn module(&self) -> Option<f64> {
        Some(self.switches? + self.cooling? + self.transformer? + self.capacitors?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchChoice {
    pub part_id: String,
    pub parallel_count: u32,
    pub devices: u32,
    pub cost: f64,
}

impl From<&SwitchSelection<'_>> for SwitchChoice {
    fn from(s: &SwitchSelection<'_>) -> Self {
        SwitchChoice {
            part_id: s.device.part_id.clone(),
            parallel_count: s.parallel_count,
            devices: s.devices_per_bridge(),
            cost: s.bridge_cost(),
        }
    }
}

/// Components chosen for a module, filled in stage by stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub primary_switches: Option<SwitchChoice>,
    pub secondary_switches: Option<SwitchChoice>,
    pub primary_cooling: Option<CoolingDesign>,
    pub secondary_cooling: Option<CoolingDesign>,
    pub transformer: Option<TransformerDesign>,
    pub capacitor: Option<CapacitorBank>,
    /// Worst-case output capacitance over the grid.
    pub c_required: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignEvaluation {
    pub vars: DesignVariables,
    pub feasible: bool,
    pub reason: Option<String>,
    pub l_lk: Option<f64>,
    pub cost: CostBreakdown,
    pub components: Components,
    pub points: Vec<PointResult>,
    /// Mean module loss over every grid cell.
    pub avg_loss: Option<f64>,
    pub min_eff_full_load: Option<f64>,
    pub mean_eff_full_load: Option<f64>,
    pub avg_eff_all: Option<f64>,
    pub scaled_cost: Option<f64>,
    pub scaled_loss: Option<f64>,
    pub norm_cost: Option<f64>,
    pub norm_loss: Option<f64>,
    pub pareto: bool,
    pub benchmark_pass: bool,
}

impl DesignEvaluation {
    fn new(vars: DesignVariables) -> Self {
        DesignEvaluation {
            vars,
            feasible: false,
            reason: None,
            l_lk: None,
            cost: CostBreakdown::default(),
            components: Components::default(),
            points: Vec::new(),
            avg_loss: None,
            min_eff_full_load: None,
            mean_eff_full_load: None,
            avg_eff_all: None,
            scaled_cost: None,
            scaled_loss: None,
            norm_cost: None,
            norm_loss: None,
            pareto: false,
            benchmark_pass: false,
        }
    }

    fn reject(mut self, why: impl Into<String>) -> Self {
        self.feasible = false;
        self.reason = Some(why.into());
        self
    }
}

/// Shared, read-only state of a sweep.
#[derive(Debug, Clone)]
pub struct Context<'a> {
    pub config: &'a Config,
    pub dbs: &'a Databases,
    pub catalog: CoolingCatalog,
    pub transformer_space: TransformerSpace,
}

impl<'a> Context<'a> {
    pub fn new(config: &'a Config, dbs: &'a Databases) -> Result<Self> {
        let catalog =
            CoolingCatalog::build(&dbs.fans, &dbs.heatsink_cost, &GeometryGrid::default())?;
        Ok(Context {
            config,
            dbs,
            catalog,
            transformer_space: TransformerSpace::default(),
        })
    }

    pub fn with_transformer_space(mut self, space: TransformerSpace) -> Self {
        self.transformer_space = space;
        self
    }
}

/// Operating grid of one design: output voltages outer, load fractions inner.
pub fn operating_grid(spec: &ConverterSpec, config: &Config) -> Vec<OperatingPoint> {
    let mut out = Vec::new();
    for v in output_voltage_grid(&config.system, config.space.v_out_grid_step) {
        for &load in &config.space.load_fractions {
            out.push(OperatingPoint::new(v, load, spec, &config.system));
        }
    }
    out
}

/// Converter ratings with the leakage inductance sized on the full-load cells.
pub fn converter_spec(
    vars: &DesignVariables,
    config: &Config,
) -> (ConverterSpec, Vec<OperatingPoint>) {
    let spec = ConverterSpec::for_modules(&config.system, vars.n_modules, vars.n, vars.f_sw);
    let grid = operating_grid(&spec, config);
    let full = config
        .space
        .load_fractions
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let full_points: Vec<OperatingPoint> = grid
        .iter()
        .filter(|p| p.load_fraction == full)
        .copied()
        .collect();
    let l_lk = size_leakage_inductance(&spec, &full_points, config.options.d_design);
    (spec.with_inductance(l_lk), grid)
}

/// Waveform at each grid cell, or the first unreachable cell's reason.
pub fn grid_waveforms(
    spec: &ConverterSpec,
    grid: &[OperatingPoint],
) -> std::result::Result<Vec<(WaveformSolution, CurrentStats)>, String> {
    grid.iter()
        .map(|op| {
            let d =
                solve_phase_shift(op, spec).map_err(|e| format!("electrical: {}", strip(&e)))?;
            let w = build_waveform(op, spec, d);
            let s = extract_current_stats(&w, op);
            Ok((w, s))
        })
        .collect()
}

fn strip(e: &Error) -> String {
    match e {
        Error::Infeasible(m) => m.clone(),
        other => other.to_string(),
    }
}

pub fn average_loss_metric(losses: &[f64]) -> f64 {
    losses.iter().sum::<f64>() / losses.len() as f64
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NEG_INFINITY, f64::max)
}

/// Runs the whole component pipeline for one design. Infeasibility at any
/// stage ends the evaluation with the reason recorded.
pub fn evaluate_configuration(vars: DesignVariables, ctx: &Context<'_>) -> DesignEvaluation {
    let config = ctx.config;
    let system = &config.system;
    let options = &config.options;
    let mut ev = DesignEvaluation::new(vars);

    let (spec, grid) = converter_spec(&vars, config);
    if !(spec.l_lk.is_finite() && spec.l_lk > 0.0) {
        return ev.reject("electrical: leakage inductance could not be sized");
    }
    ev.l_lk = Some(spec.l_lk);
    let waves = match grid_waveforms(&spec, &grid) {
        Ok(w) => w,
        Err(why) => return ev.reject(why),
    };

    // Switches
    let v_in_max = max_of(grid.iter().map(|p| p.v_in));
    let rms_p = max_of(waves.iter().map(|(_, s)| s.primary.rms));
    let rms_s = max_of(waves.iter().map(|(_, s)| s.secondary.rms));
    let db = &ctx.dbs.switches;
    let pick = |rms: f64, v: f64, b: Bridge| match select_device(rms, db, v, b, options) {
        Ok(Some(s)) => Ok(s),
        Ok(None) => Err(format!(
            "switches: no device carries {rms:.1} A rms on the {b} side at {v:.0} V"
        )),
        Err(e) => Err(format!("switches: {e}")),
    };
    let sel_p = match pick(rms_p, v_in_max, Bridge::Primary) {
        Ok(s) => s,
        Err(why) => return ev.reject(why),
    };
    let sel_s = match pick(rms_s, system.v_out_max, Bridge::Secondary) {
        Ok(s) => s,
        Err(why) => return ev.reject(why),
    };
    ev.components.primary_switches = Some((&sel_p).into());
    ev.components.secondary_switches = Some((&sel_s).into());
    ev.cost.switches = Some(sel_p.bridge_cost() + sel_s.bridge_cost());

    let mut points = Vec::with_capacity(grid.len());
    // Worst single-die loss per bridge; each package sits on its own interface pad.
    let mut die_max = [0.0f64; 2];
    for (op, (w, s)) in grid.iter().zip(&waves) {
        let lp = position_losses(&s.primary, &sel_p, vars.f_sw, op.v_in, system.t_c_max);
        let ls = position_losses(&s.secondary, &sel_s, vars.f_sw, op.v_out, system.t_c_max);
        for (l, side) in [(&lp, Bridge::Primary), (&ls, Bridge::Secondary)] {
            if !l.converged {
                return ev.reject(format!(
                    "switches: electro-thermal iteration diverged on the {side} side at {} V",
                    op.v_out
                ));
            }
            if l.over_temperature {
                return ev.reject(format!(
                    "switches: junction reaches {:.0} °C on the {side} side at {} V",
                    l.t_j, op.v_out
                ));
            }
        }
        let pos_p = lp.p_loss_sw * sel_p.parallel_count as f64;
        let pos_s = ls.p_loss_sw * sel_s.parallel_count as f64;
        die_max[0] = die_max[0].max(lp.p_loss_sw);
        die_max[1] = die_max[1].max(ls.p_loss_sw);
        points.push(PointResult {
            v_out: op.v_out,
            load_fraction: op.load_fraction,
            v_in: op.v_in,
            p_out: op.p_req,
            d: w.d,
            loss_primary_switches: 4.0 * pos_p,
            loss_secondary_switches: 4.0 * pos_s,
            loss_core: 0.0,
            loss_winding: 0.0,
            loss_capacitor: 0.0,
            t_j_primary: lp.t_j,
            t_j_secondary: ls.t_j,
            efficiency: 0.0,
        });
    }

    // Cooling, one heatsink per bridge
    let mut cooling_cost = 0.0;
    for (k, side) in [Bridge::Primary, Bridge::Secondary].into_iter().enumerate() {
        let p_tot = max_of(points.iter().map(|p| match side {
            Bridge::Primary => p.loss_primary_switches,
            Bridge::Secondary => p.loss_secondary_switches,
        }));
        let r_max = match required_rth(
            system.t_c_max,
            system.t_amb,
            die_max[k],
            options.r_th_cs,
            p_tot,
        ) {
            Ok(r) => r,
            Err(e) => return ev.reject(format!("cooling ({side}): {}", strip(&e))),
        };
        let Some(design) = ctx.catalog.best(r_max) else {
            return ev.reject(format!(
                "cooling ({side}): need R_th,s-a < {r_max:.4} K/W, best reachable {:.4} K/W",
                ctx.catalog.min_r_th()
            ));
        };
        cooling_cost += design.cost();
        match side {
            Bridge::Primary => ev.components.primary_cooling = Some(design),
            Bridge::Secondary => ev.components.secondary_cooling = Some(design),
        }
    }
    ev.cost.cooling = Some(cooling_cost);

    // Transformer
    let req = TransformerRequirements {
        f_sw: vars.f_sw,
        n: vars.n,
        l_lk: spec.l_lk,
        t_amb: system.t_amb,
        t_max: system.t_tx_max,
        loss_weight: options.transformer_loss_weight,
        harmonics: options.winding_harmonics,
        core: &ctx.dbs.core,
        winding: &ctx.dbs.winding,
    };
    let tx_points: Vec<OperatingWaveform> = grid
        .iter()
        .zip(&waves)
        .map(|(op, (w, _))| OperatingWaveform {
            v_in: op.v_in,
            current: w.inductor_current(),
        })
        .collect();
    let tx = match optimize_transformer(&req, &tx_points, &ctx.transformer_space) {
        Ok(t) => t,
        Err(e) => return ev.reject(strip(&e)),
    };
    ev.cost.transformer = Some(tx.cost.total());
    for (i, p) in points.iter_mut().enumerate() {
        p.loss_core = tx.p_core[i];
        p.loss_winding = tx.p_wind[i];
    }
    ev.components.transformer = Some(tx);

    // Output capacitor
    let c_req = max_of(
        waves
            .iter()
            .map(|(_, s)| required_capacitance(s, system.dv_c_max)),
    );
    ev.components.c_required = Some(c_req);
    let bank = match select_bank(
        c_req,
        system.v_out_max,
        options.capacitor_voltage_margin,
        &ctx.dbs.capacitors,
    ) {
        Ok(b) => b,
        Err(e) => return ev.reject(strip(&e)),
    };
    for (p, (_, s)) in points.iter_mut().zip(&waves) {
        p.loss_capacitor = capacitor_loss(&bank, s.capacitor_rms);
    }
    ev.cost.capacitors = Some(bank.cost());
    ev.components.capacitor = Some(bank);

    // Aggregation
    for p in &mut points {
        p.efficiency = p.p_out / (p.p_out + p.loss_total());
    }
    let full = config
        .space
        .load_fractions
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let full_eff: Vec<f64> = points
        .iter()
        .filter(|p| p.load_fraction == full)
        .map(|p| p.efficiency)
        .collect();
    let losses: Vec<f64> = points.iter().map(PointResult::loss_total).collect();
    let avg_loss = average_loss_metric(&losses);
    let module_cost = ev.cost.module().expect("all stages priced");
    ev.avg_loss = Some(avg_loss);
    ev.min_eff_full_load = Some(full_eff.iter().copied().fold(f64::INFINITY, f64::min));
    ev.mean_eff_full_load = Some(full_eff.iter().sum::<f64>() / full_eff.len() as f64);
    ev.avg_eff_all = Some(points.iter().map(|p| p.efficiency).sum::<f64>() / points.len() as f64);
    ev.scaled_cost = Some(vars.n_modules as f64 * module_cost);
    ev.scaled_loss = Some(vars.n_modules as f64 * avg_loss);
    ev.points = points;
    ev.feasible = true;
    ev
}

/// Every design triple in N-major, then f_sw, then n order.
pub fn design_grid(space: &DesignSpace) -> Vec<DesignVariables> {
    let mut out = Vec::new();
    for &n_modules in &space.n_modules_range {
        for &f_sw in &space.f_sw_range {
            for &n in &space.turns_ratio_range {
                out.push(DesignVariables { n_modules, f_sw, n });
            }
        }
    }
    out
}

/// Scaled axes of the feasible designs mapped to [0, 1].
pub fn scale_and_normalize(evals: &mut [DesignEvaluation]) {
    let idx: Vec<usize> = (0..evals.len()).filter(|&i| evals[i].feasible).collect();
    if idx.is_empty() {
        log::warn!("no feasible design to normalize");
        return;
    }
    let cost: Vec<f64> = idx.iter().map(|&i| evals[i].scaled_cost.unwrap()).collect();
    let loss: Vec<f64> = idx.iter().map(|&i| evals[i].scaled_loss.unwrap()).collect();
    for ((&i, c), l) in idx.iter().zip(min_max(&cost)).zip(min_max(&loss)) {
        evals[i].norm_cost = Some(c);
        evals[i].norm_loss = Some(l);
    }
}

/// Flags Pareto members among feasible designs on the normalized axes.
pub fn mark_pareto(evals: &mut [DesignEvaluation]) {
    let idx: Vec<usize> = (0..evals.len())
        .filter(|&i| evals[i].feasible && evals[i].norm_cost.is_some())
        .collect();
    let pts: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| (evals[i].norm_cost.unwrap(), evals[i].norm_loss.unwrap()))
        .collect();
    for e in evals.iter_mut() {
        e.pareto = false;
    }
    for (&i, m) in idx.iter().zip(pareto_front(&pts)) {
        evals[i].pareto = m;
    }
}

/// Cheapest design whose full-load efficiency stays at or above `threshold`
/// at every output voltage. Ties go to lower loss, then fewer modules.
pub fn benchmark_filter(evals: &[DesignEvaluation], threshold: f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, e) in evals.iter().enumerate() {
        if !e.feasible || e.min_eff_full_load.is_none_or(|m| m < threshold) {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let o = &evals[b];
                let key = |e: &DesignEvaluation| {
                    (
                        e.scaled_cost.unwrap(),
                        e.scaled_loss.unwrap(),
                        e.vars.n_modules,
                    )
                };
                let (a, b) = (key(e), key(o));
                a.0.total_cmp(&b.0)
                    .then(a.1.total_cmp(&b.1))
                    .then(a.2.cmp(&b.2))
                    .is_lt()
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub evaluations: Vec<DesignEvaluation>,
    pub recommended: Option<usize>,
    /// Highest minimum full-load efficiency among feasible designs.
    pub best_full_load_efficiency: Option<f64>,
}

impl SweepResult {
    pub fn recommended(&self) -> Option<&DesignEvaluation> {
        self.recommended.map(|i| &self.evaluations[i])
    }

    pub fn feasible_count(&self) -> usize {
        self.evaluations.iter().filter(|e| e.feasible).count()
    }
}

/// Applies normalization, Pareto marking and the benchmark to evaluations
/// in grid order.
pub fn reduce(mut evaluations: Vec<DesignEvaluation>, threshold: f64) -> SweepResult {
    scale_and_normalize(&mut evaluations);
    mark_pareto(&mut evaluations);
    let recommended = benchmark_filter(&evaluations, threshold);
    for e in &mut evaluations {
        e.benchmark_pass = e.feasible && e.min_eff_full_load.is_some_and(|m| m >= threshold);
    }
    let best_full_load_efficiency = evaluations
        .iter()
        .filter_map(|e| e.min_eff_full_load)
        .reduce(f64::max);
    SweepResult {
        evaluations,
        recommended,
        best_full_load_efficiency,
    }
}

/// Evaluates every design triple on `jobs` worker threads. Results come back
/// in grid order regardless of scheduling.
pub fn run_sweep(ctx: &Context<'_>, jobs: usize) -> Result<SweepResult> {
    let vars = design_grid(&ctx.config.space);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::validation("jobs", e.to_string()))?;
    let evaluations: Vec<DesignEvaluation> = pool.install(|| {
        vars.par_iter()
            .map(|v| {
                let e = evaluate_configuration(*v, ctx);
                debug!(
                    "N={} f={} n={}: {}",
                    v.n_modules,
                    v.f_sw,
                    v.n,
                    e.reason.as_deref().unwrap_or("feasible")
                );
                e
            })
            .collect()
    });
    Ok(reduce(evaluations, ctx.config.options.efficiency_threshold))
}
