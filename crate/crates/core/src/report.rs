//! Sweep report: the JSON round-trip format and the CSV exports derived
//! from it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datastore::{sha256_hex, Config, Databases};
use crate::error::{Error, Result};
use crate::synthesis::{reduce, DesignEvaluation, SweepResult};

pub const FORMAT_VERSION: u32 = 1;

pub const RESULTS_COLUMNS: [&str; 16] = [
    "N",
    "f_sw_hz",
    "turns_ratio",
    "feasible",
    "reason",
    "cost_switches_usd",
    "cost_cooling_usd",
    "cost_transformer_usd",
    "cost_capacitors_usd",
    "cost_module_usd",
    "cost_350kw_usd",
    "avg_loss_w",
    "min_eff_full_load",
    "avg_eff_all",
    "pareto",
    "benchmark_pass",
];

/// `%g` with six significant digits.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g6).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSizes {
    pub n_modules: usize,
    pub f_sw: usize,
    pub turns_ratio: usize,
    pub operating_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub format_version: u32,
    /// SHA-256 over the configuration and all databases.
    pub config_hash: String,
    /// Seconds since the Unix epoch at creation.
    pub created_unix: u64,
    pub grid: GridSizes,
    pub efficiency_threshold: f64,
    pub evaluations: Vec<DesignEvaluation>,
    pub recommended: Option<usize>,
    pub best_full_load_efficiency: Option<f64>,
    /// Indices of the Pareto members, in grid order.
    pub pareto: Vec<usize>,
}

pub fn config_hash(config: &Config, dbs: &Databases) -> String {
    sha256_hex(format!("{}:{}", config.source_hash, dbs.source_hash).as_bytes())
}

impl SweepReport {
    pub fn new(config: &Config, dbs: &Databases, result: SweepResult) -> Self {
        let s = &config.space;
        let v_points =
            crate::electrical::output_voltage_grid(&config.system, s.v_out_grid_step).len();
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        SweepReport {
            format_version: FORMAT_VERSION,
            config_hash: config_hash(config, dbs),
            created_unix,
            grid: GridSizes {
                n_modules: s.n_modules_range.len(),
                f_sw: s.f_sw_range.len(),
                turns_ratio: s.turns_ratio_range.len(),
                operating_points: v_points * s.load_fractions.len(),
            },
            efficiency_threshold: config.options.efficiency_threshold,
            pareto: pareto_indices(&result.evaluations),
            recommended: result.recommended,
            best_full_load_efficiency: result.best_full_load_efficiency,
            evaluations: result.evaluations,
        }
    }

    pub fn recommended(&self) -> Option<&DesignEvaluation> {
        self.recommended.map(|i| &self.evaluations[i])
    }

    /// Combines two partial sweeps of the same configuration. Duplicate
    /// design triples keep this report's row.
    pub fn merge(self, other: SweepReport) -> Result<SweepReport> {
        if self.config_hash != other.config_hash {
            return Err(Error::Report(format!(
                "cannot merge reports from different configurations ({} vs {})",
                &self.config_hash[..12.min(self.config_hash.len())],
                &other.config_hash[..12.min(other.config_hash.len())]
            )));
        }
        let mut evals = self.evaluations;
        for e in other.evaluations {
            if !evals.iter().any(|x| x.vars == e.vars) {
                evals.push(e);
            }
        }
        evals.sort_by(|a, b| {
            a.vars
                .n_modules
                .cmp(&b.vars.n_modules)
                .then(a.vars.f_sw.total_cmp(&b.vars.f_sw))
                .then(a.vars.n.total_cmp(&b.vars.n))
        });
        let result = reduce(evals, self.efficiency_threshold);
        Ok(SweepReport {
            pareto: pareto_indices(&result.evaluations),
            recommended: result.recommended,
            best_full_load_efficiency: result.best_full_load_efficiency,
            evaluations: result.evaluations,
            ..self
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Report(e.to_string()))
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let r: SweepReport = serde_json::from_str(text).map_err(|e| Error::Parse {
            origin: origin.to_string(),
            line: e.line(),
            message: format!("column {}: {e}", e.column()),
        })?;
        if r.format_version != FORMAT_VERSION {
            return Err(Error::Report(format!(
                "{origin}: unsupported report format {}",
                r.format_version
            )));
        }
        Ok(r)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = crate::datastore::read_file(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn results_csv(&self) -> String {
        let mut w = writer();
        w.write_record(RESULTS_COLUMNS).expect("in-memory write");
        for e in &self.evaluations {
            let v = &e.vars;
            w.write_record([
                v.n_modules.to_string(),
                fmt_g6(v.f_sw),
                fmt_g6(v.n),
                e.feasible.to_string(),
                e.reason.clone().unwrap_or_default(),
                opt(e.cost.switches),
                opt(e.cost.cooling),
                opt(e.cost.transformer),
                opt(e.cost.capacitors),
                opt(e.cost.module()),
                opt(e.scaled_cost),
                opt(e.avg_loss),
                opt(e.min_eff_full_load),
                opt(e.avg_eff_all),
                e.pareto.to_string(),
                e.benchmark_pass.to_string(),
            ])
            .expect("in-memory write");
        }
        finish(w)
    }

    pub fn pareto_csv(&self) -> String {
        let mut w = writer();
        w.write_record([
            "N",
            "f_sw_hz",
            "turns_ratio",
            "cost_350kw_usd",
            "loss_350kw_w",
            "norm_cost",
            "norm_loss",
            "min_eff_full_load",
        ])
        .expect("in-memory write");
        let mut idx = self.pareto.clone();
        idx.sort_by(|&a, &b| {
            let (x, y) = (&self.evaluations[a], &self.evaluations[b]);
            x.norm_cost
                .unwrap_or(0.0)
                .total_cmp(&y.norm_cost.unwrap_or(0.0))
                .then(a.cmp(&b))
        });
        for i in idx {
            let e = &self.evaluations[i];
            w.write_record([
                e.vars.n_modules.to_string(),
                fmt_g6(e.vars.f_sw),
                fmt_g6(e.vars.n),
                opt(e.scaled_cost),
                opt(e.scaled_loss),
                opt(e.norm_cost),
                opt(e.norm_loss),
                opt(e.min_eff_full_load),
            ])
            .expect("in-memory write");
        }
        finish(w)
    }

    /// Module cost split of the recommended design.
    pub fn cost_breakdown_csv(&self) -> String {
        let mut w = writer();
        w.write_record([
            "N",
            "f_sw_hz",
            "turns_ratio",
            "component",
            "cost_usd",
            "share",
        ])
        .expect("in-memory write");
        if let Some(e) = self.recommended() {
            let total = e.cost.module().unwrap_or(0.0);
            let rows = [
                ("switches", e.cost.switches),
                ("cooling", e.cost.cooling),
                ("transformer", e.cost.transformer),
                ("capacitors", e.cost.capacitors),
                ("module", e.cost.module()),
            ];
            for (name, c) in rows {
                let c = c.unwrap_or(0.0);
                w.write_record([
                    e.vars.n_modules.to_string(),
                    fmt_g6(e.vars.f_sw),
                    fmt_g6(e.vars.n),
                    name.to_string(),
                    fmt_g6(c),
                    fmt_g6(if total > 0.0 { c / total } else { 0.0 }),
                ])
                .expect("in-memory write");
            }
        }
        finish(w)
    }

    /// Writes every export into `dir` and returns the paths written.
    pub fn write_csvs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut files = vec![
            ("results.csv".to_string(), self.results_csv()),
            ("pareto.csv".to_string(), self.pareto_csv()),
            ("cost_breakdown.csv".to_string(), self.cost_breakdown_csv()),
        ];
        if let Some(e) = self.recommended() {
            files.push((efficiency_map_name(e), efficiency_map_csv(e)));
        }
        let mut out = Vec::new();
        for (name, body) in files {
            let p = dir.join(name);
            write(&p, &body)?;
            out.push(p);
        }
        Ok(out)
    }

    /// JSON plus every CSV.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let p = dir.join("report.json");
        write(&p, &self.to_json()?)?;
        let mut out = vec![p];
        out.extend(self.write_csvs(dir)?);
        Ok(out)
    }
}

fn pareto_indices(evals: &[DesignEvaluation]) -> Vec<usize> {
    (0..evals.len()).filter(|&i| evals[i].pareto).collect()
}

pub fn efficiency_map_name(e: &DesignEvaluation) -> String {
    format!(
        "efficiency_map_{}_{}_{}.csv",
        e.vars.n_modules,
        fmt_g6(e.vars.f_sw),
        fmt_g6(e.vars.n)
    )
}

/// Per-cell efficiency and loss split of one design.
pub fn efficiency_map_csv(e: &DesignEvaluation) -> String {
    let mut w = writer();
    w.write_record([
        "v_out_v",
        "load_fraction",
        "v_in_v",
        "p_out_w",
        "phase_shift",
        "efficiency",
        "loss_total_w",
        "loss_switches_w",
        "loss_transformer_w",
        "loss_capacitor_w",
    ])
    .expect("in-memory write");
    for p in &e.points {
        w.write_record([
            fmt_g6(p.v_out),
            fmt_g6(p.load_fraction),
            fmt_g6(p.v_in),
            fmt_g6(p.p_out),
            fmt_g6(p.d),
            fmt_g6(p.efficiency),
            fmt_g6(p.loss_total()),
            fmt_g6(p.loss_switches()),
            fmt_g6(p.loss_transformer()),
            fmt_g6(p.loss_capacitor),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
