//! Loading and validation of the run configuration and the component
//! databases.

mod fit;
pub mod format;
mod table;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use fit::{fit_capacitor_coeffs, fit_proportional, CapacitorSample, CapacitorSeries};
pub use format::Document;
pub use table::{ConductionTable, Curve, Lookup};

use crate::error::{Error, Result};

/// Density of aluminium used for heatsink mass, kg/m³.
pub const ALUMINUM_DENSITY: f64 = 2700.0;

/// Charger-level requirements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub p_max_total: f64,
    pub i_max_total: f64,
    pub v_out_min: f64,
    pub v_out_max: f64,
    pub v_in_min: f64,
    pub v_in_max: f64,
    pub t_amb: f64,
    pub t_c_max: f64,
    pub t_tx_max: f64,
    pub dv_c_max: f64,
}

impl SystemSpec {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("p_max_w", self.p_max_total),
            ("i_max_a", self.i_max_total),
            ("v_out_min_v", self.v_out_min),
            ("v_in_min_v", self.v_in_min),
            ("dv_c_max_v", self.dv_c_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(
                    name,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if self.v_out_min >= self.v_out_max {
            return Err(Error::validation(
                "v_out_min_v",
                format!(
                    "must be below v_out_max_v ({} >= {})",
                    self.v_out_min, self.v_out_max
                ),
            ));
        }
        if self.v_in_min >= self.v_in_max {
            return Err(Error::validation(
                "v_in_min_v",
                format!(
                    "must be below v_in_max_v ({} >= {})",
                    self.v_in_min, self.v_in_max
                ),
            ));
        }
        if self.t_amb >= self.t_c_max {
            return Err(Error::validation("t_c_max_c", "must exceed t_amb_c"));
        }
        if self.t_amb >= self.t_tx_max {
            return Err(Error::validation("t_tx_max_c", "must exceed t_amb_c"));
        }
        Ok(())
    }
}

/// The swept design variables and the operating grid definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpace {
    pub n_modules_range: Vec<u32>,
    pub f_sw_range: Vec<f64>,
    pub turns_ratio_range: Vec<f64>,
    pub v_out_grid_step: f64,
    pub load_fractions: Vec<f64>,
}

impl DesignSpace {
    fn validate(&self) -> Result<()> {
        if self.n_modules_range.is_empty() || self.n_modules_range.contains(&0) {
            return Err(Error::validation(
                "n_modules",
                "must be a non-empty list of N >= 1",
            ));
        }
        if self.f_sw_range.is_empty() || self.f_sw_range.iter().any(|&f| !(f > 0.0)) {
            return Err(Error::validation(
                "f_sw_hz",
                "must be a non-empty list of positive values",
            ));
        }
        if self.turns_ratio_range.is_empty() || self.turns_ratio_range.iter().any(|&n| !(n > 0.0)) {
            return Err(Error::validation(
                "turns_ratio",
                "must be a non-empty list of positive values",
            ));
        }
        if !(self.v_out_grid_step > 0.0) {
            return Err(Error::validation("v_out_grid_step_v", "must be positive"));
        }
        if self.load_fractions.is_empty()
            || self.load_fractions.iter().any(|&l| !(l > 0.0 && l <= 1.0))
        {
            return Err(Error::validation(
                "load_fractions",
                "each fraction must lie in (0, 1]",
            ));
        }
        Ok(())
    }

    /// True when each variable lies inside the span of its swept list.
    pub fn contains(&self, n_modules: u32, f_sw: f64, turns_ratio: f64) -> bool {
        let span = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        let nmin = *self.n_modules_range.iter().min().unwrap();
        let nmax = *self.n_modules_range.iter().max().unwrap();
        let (fmin, fmax) = span(&self.f_sw_range);
        let (rmin, rmax) = span(&self.turns_ratio_range);
        (nmin..=nmax).contains(&n_modules)
            && f_sw >= fmin * (1.0 - 1e-9)
            && f_sw <= fmax * (1.0 + 1e-9)
            && turns_ratio >= rmin - 1e-9
            && turns_ratio <= rmax + 1e-9
    }
}

/// Tunable modelling choices. Every field has a default; all can be set in the
/// optional `[options]` section of the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Options {
    /// Phase-shift ratio at which the leakage inductance is sized.
    pub d_design: f64,
    /// Allowed rms current per die as a fraction of its 100 °C rating.
    pub rms_margin: f64,
    /// Highest DC bus voltage as a fraction of the device rating.
    pub switch_voltage_margin: f64,
    /// Case-to-sink thermal resistance per package, K/W.
    pub r_th_cs: f64,
    /// Transformer objective weight, USD per W of averaged loss.
    pub transformer_loss_weight: f64,
    /// Capacitor bank voltage rating over the highest output voltage.
    pub capacitor_voltage_margin: f64,
    /// Minimum full-load efficiency for the recommended design.
    pub efficiency_threshold: f64,
    /// Harmonics used for the winding AC-resistance evaluation.
    pub winding_harmonics: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            d_design: 0.5,
            rms_margin: 0.8,
            switch_voltage_margin: 0.85,
            r_th_cs: 0.10,
            transformer_loss_weight: 1.0,
            capacitor_voltage_margin: 1.1,
            efficiency_threshold: 0.95,
            winding_harmonics: 50,
        }
    }
}

impl Options {
    fn validate(&self) -> Result<()> {
        if !(self.d_design > 0.0 && self.d_design <= 0.5) {
            return Err(Error::validation("d_design", "must lie in (0, 0.5]"));
        }
        if !(self.rms_margin > 0.0 && self.rms_margin <= 1.0) {
            return Err(Error::validation("rms_margin", "must lie in (0, 1]"));
        }
        if !(self.switch_voltage_margin > 0.0 && self.switch_voltage_margin <= 1.0) {
            return Err(Error::validation(
                "switch_voltage_margin",
                "must lie in (0, 1]",
            ));
        }
        if !(self.r_th_cs >= 0.0) {
            return Err(Error::validation("r_th_cs_k_per_w", "must be non-negative"));
        }
        if !(self.transformer_loss_weight >= 0.0) {
            return Err(Error::validation(
                "transformer_loss_weight_usd_per_w",
                "must be non-negative",
            ));
        }
        if !(self.capacitor_voltage_margin >= 1.0) {
            return Err(Error::validation(
                "capacitor_voltage_margin",
                "must be at least 1",
            ));
        }
        if self.winding_harmonics == 0 {
            return Err(Error::validation("winding_harmonics", "must be at least 1"));
        }
        Ok(())
    }
}

/// Locations of the component databases, resolved against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPaths {
    pub switches: PathBuf,
    pub fans: PathBuf,
    pub cores: PathBuf,
    pub capacitors: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub system: SystemSpec,
    pub space: DesignSpace,
    pub options: Options,
    pub paths: DataPaths,
    /// SHA-256 of the config file bytes.
    pub source_hash: String,
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = read_file(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, &path.display().to_string(), base)
}

pub fn parse_config(text: &str, origin: &str, base_dir: &Path) -> Result<Config> {
    let doc = Document::parse(text, origin)?;
    let sys = doc.require_section("system")?;
    let system = SystemSpec {
        p_max_total: sys.require("p_max_w")?,
        i_max_total: sys.require("i_max_a")?,
        v_out_min: sys.require("v_out_min_v")?,
        v_out_max: sys.require("v_out_max_v")?,
        v_in_min: sys.require("v_in_min_v")?,
        v_in_max: sys.require("v_in_max_v")?,
        t_amb: sys.require("t_amb_c")?,
        t_c_max: sys.require("t_c_max_c")?,
        t_tx_max: sys.require("t_tx_max_c")?,
        dv_c_max: sys.require("dv_c_max_v")?,
    };
    system.validate()?;

    let ds = doc.require_section("design_space")?;
    let list = |key: &str, default: Option<&str>| -> Result<Vec<f64>> {
        let raw = match (ds.raw(key), default) {
            (Some(v), _) => v,
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::Parse {
                    origin: origin.to_string(),
                    line: 0,
                    message: format!("[design_space] missing required key `{key}`"),
                })
            }
        };
        format::parse_list(raw).map_err(|message| Error::Parse {
            origin: origin.to_string(),
            line: ds.line_of(key),
            message: format!("[design_space] {key}: {message}"),
        })
    };
    let n_modules = list("n_modules", None)?;
    if n_modules.iter().any(|&n| n.fract() != 0.0 || n < 0.0) {
        return Err(Error::validation(
            "n_modules",
            "module counts must be integers",
        ));
    }
    let space = DesignSpace {
        n_modules_range: n_modules.into_iter().map(|n| n as u32).collect(),
        f_sw_range: list("f_sw_hz", None)?,
        turns_ratio_range: list("turns_ratio", None)?,
        v_out_grid_step: ds.get("v_out_grid_step_v")?.unwrap_or(50.0),
        load_fractions: list("load_fractions", Some("0.1,1.0"))?,
    };
    space.validate()?;

    let mut options = Options::default();
    if let Some(opt) = doc.section("options") {
        for key in opt.keys() {
            match key {
                "d_design" => options.d_design = opt.require(key)?,
                "rms_margin" => options.rms_margin = opt.require(key)?,
                "switch_voltage_margin" => options.switch_voltage_margin = opt.require(key)?,
                "r_th_cs_k_per_w" => options.r_th_cs = opt.require(key)?,
                "transformer_loss_weight_usd_per_w" => {
                    options.transformer_loss_weight = opt.require(key)?
                }
                "capacitor_voltage_margin" => {
                    options.capacitor_voltage_margin = opt.require(key)?
                }
                "efficiency_threshold" => options.efficiency_threshold = opt.require(key)?,
                "winding_harmonics" => options.winding_harmonics = opt.require(key)?,
                other => {
                    return Err(Error::Parse {
                        origin: origin.to_string(),
                        line: opt.line_of(other),
                        message: format!("[options] unknown key `{other}`"),
                    })
                }
            }
        }
    }
    options.validate()?;

    let p = doc.require_section("paths")?;
    let resolve = |key: &str| -> Result<PathBuf> {
        let raw: String = p.require(key)?;
        let path = PathBuf::from(raw);
        Ok(if path.is_absolute() {
            path
        } else {
            base_dir.join(path)
        })
    };
    let paths = DataPaths {
        switches: resolve("switches")?,
        fans: resolve("fans")?,
        cores: resolve("cores")?,
        capacitors: resolve("capacitors")?,
    };

    Ok(Config {
        system,
        space,
        options,
        paths,
        source_hash: sha256_hex(text.as_bytes()),
    })
}

/// Reference conditions of the datasheet switching-energy curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefConditions {
    pub r_g: f64,
    pub t_j: f64,
    pub v_ds: f64,
}

/// A SiC MOSFET with its lookup data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchDevice {
    pub part_id: String,
    pub v_rating: f64,
    pub r_ds_on_ref: f64,
    pub i_d_100c: f64,
    pub unit_cost: f64,
    pub r_th_jc: f64,
    pub t_j_max: f64,
    /// Forward channel drop v_sw(T_j, i).
    pub conduction: ConductionTable,
    /// Reverse-conduction drop v_d(T_j, i).
    pub diode: ConductionTable,
    pub e_on: Curve,
    pub e_off: Curve,
    pub e_rr: Curve,
    pub ref_conditions: RefConditions,
    /// E(R_G user)/E(R_G datasheet) for turn-on and turn-off.
    pub rg_scale_on: f64,
    pub rg_scale_off: f64,
    /// Linear temperature coefficients of the energies, 1/K relative to
    /// the reference junction temperature.
    pub tj_coeff_on: f64,
    pub tj_coeff_off: f64,
    pub tj_coeff_rr: f64,
}

pub fn load_switch_db(path: &Path) -> Result<Vec<SwitchDevice>> {
    let text = read_file(path)?;
    parse_switch_db(&text, &path.display().to_string())
}

pub fn parse_switch_db(text: &str, origin: &str) -> Result<Vec<SwitchDevice>> {
    let doc = Document::parse(text, origin)?;
    let devices = match doc.table("devices") {
        Some(t) if !t.is_empty() => t,
        _ => return Err(Error::Database(format!("{origin}: no devices"))),
    };
    let conduction = doc.require_table("conduction")?;
    let energy = doc.require_table("energy")?;

    let mut out = Vec::new();
    for row in devices.rows() {
        let part_id = devices.str(row, "part_id")?.to_string();
        let conduction_for = |kind: &str| -> Result<ConductionTable> {
            let mut by_temp: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
            for r in conduction.rows() {
                if conduction.str(r, "part_id")? != part_id || conduction.str(r, "kind")? != kind {
                    continue;
                }
                let t: f64 = conduction.num(r, "t_j_c")?;
                let point = (
                    conduction.num(r, "current_a")?,
                    conduction.num(r, "voltage_v")?,
                );
                match by_temp.iter_mut().find(|(tt, _)| *tt == t) {
                    Some((_, pts)) => pts.push(point),
                    None => by_temp.push((t, vec![point])),
                }
            }
            let what = format!("{part_id} {kind} conduction");
            if by_temp.is_empty() {
                return Err(Error::Database(format!("{origin}: {what} table missing")));
            }
            let curves = by_temp
                .into_iter()
                .map(|(t, pts)| Ok((t, Curve::new(pts, &format!("{what} at {t} °C"))?)))
                .collect::<Result<Vec<_>>>()?;
            ConductionTable::new(curves, &what)
        };
        let energy_for = |kind: &str| -> Result<Curve> {
            let mut pts = Vec::new();
            for r in energy.rows() {
                if energy.str(r, "part_id")? == part_id && energy.str(r, "kind")? == kind {
                    let e: f64 = energy.num(r, "energy_j")?;
                    if e < 0.0 {
                        return Err(Error::Database(format!(
                            "{origin}:{}: negative {kind} energy for {part_id}",
                            r.line
                        )));
                    }
                    pts.push((energy.num(r, "current_a")?, e));
                }
            }
            if pts.is_empty() {
                return Err(Error::Database(format!(
                    "{origin}: {part_id} has no E_{kind} table"
                )));
            }
            Curve::new(pts, &format!("{part_id} E_{kind}"))
        };

        let dev = SwitchDevice {
            v_rating: devices.num(row, "v_rating_v")?,
            r_ds_on_ref: devices.num(row, "r_ds_on_ohm")?,
            i_d_100c: devices.num(row, "i_d_100c_a")?,
            unit_cost: devices.num(row, "unit_cost_usd")?,
            r_th_jc: devices.num(row, "r_th_jc_k_per_w")?,
            t_j_max: devices.num_or(row, "t_j_max_c", 175.0)?,
            conduction: conduction_for("channel")?,
            diode: conduction_for("diode")?,
            e_on: energy_for("on")?,
            e_off: energy_for("off")?,
            e_rr: energy_for("rr")?,
            ref_conditions: RefConditions {
                r_g: devices.num(row, "ref_rg_ohm")?,
                t_j: devices.num(row, "ref_tj_c")?,
                v_ds: devices.num(row, "ref_vds_v")?,
            },
            rg_scale_on: devices.num_or(row, "rg_scale_on", 1.0)?,
            rg_scale_off: devices.num_or(row, "rg_scale_off", 1.0)?,
            tj_coeff_on: devices.num_or(row, "tj_coeff_on", 0.0)?,
            tj_coeff_off: devices.num_or(row, "tj_coeff_off", 0.0)?,
            tj_coeff_rr: devices.num_or(row, "tj_coeff_rr", 0.0)?,
            part_id,
        };
        if !(dev.i_d_100c > 0.0) {
            return Err(Error::validation(
                format!("{}.i_d_100c_a", dev.part_id),
                "must be positive",
            ));
        }
        if !(dev.unit_cost > 0.0) {
            return Err(Error::validation(
                format!("{}.unit_cost_usd", dev.part_id),
                "must be positive",
            ));
        }
        if !(dev.v_rating > 0.0 && dev.r_th_jc >= 0.0 && dev.ref_conditions.v_ds > 0.0) {
            return Err(Error::validation(
                dev.part_id.clone(),
                "ratings and reference conditions must be positive",
            ));
        }
        out.push(dev);
    }
    out.sort_by(|a, b| {
        a.unit_cost
            .total_cmp(&b.unit_cost)
            .then_with(|| a.part_id.cmp(&b.part_id))
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanModel {
    pub part_id: String,
    pub width: f64,
    pub height: f64,
    pub depth: f64,
    /// Free-air flow, m³/min.
    pub max_flow: f64,
    pub max_static_pressure: f64,
    pub unit_cost: f64,
}

impl FanModel {
    pub fn max_flow_m3s(&self) -> f64 {
        self.max_flow / 60.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatsinkCostModel {
    pub cost_per_kg: f64,
    pub aluminum_density: f64,
}

/// Fans plus the heatsink cost model derived from catalogue samples.
pub fn load_fan_db(path: &Path) -> Result<(Vec<FanModel>, HeatsinkCostModel)> {
    let text = read_file(path)?;
    parse_fan_db(&text, &path.display().to_string())
}

pub fn parse_fan_db(text: &str, origin: &str) -> Result<(Vec<FanModel>, HeatsinkCostModel)> {
    let doc = Document::parse(text, origin)?;
    let fans_t = doc.require_table("fans")?;
    if fans_t.is_empty() {
        return Err(Error::Database(format!("{origin}: no fans")));
    }
    let mut fans = Vec::new();
    for row in fans_t.rows() {
        let fan = FanModel {
            part_id: fans_t.str(row, "part_id")?.to_string(),
            width: fans_t.num(row, "width_m")?,
            height: fans_t.num(row, "height_m")?,
            depth: fans_t.num(row, "depth_m")?,
            max_flow: fans_t.num(row, "max_flow_m3_per_min")?,
            max_static_pressure: fans_t.num(row, "max_static_pressure_pa")?,
            unit_cost: fans_t.num(row, "unit_cost_usd")?,
        };
        if !(fan.max_flow > 0.0 && fan.max_static_pressure > 0.0 && fan.width > 0.0) {
            return Err(Error::validation(
                fan.part_id,
                "max_flow, max_static_pressure and width must be positive",
            ));
        }
        fans.push(fan);
    }
    fans.sort_by(|a, b| a.part_id.cmp(&b.part_id));

    let section = doc.section("heatsink");
    let density = match section {
        Some(s) => s.get("aluminum_density_kg_m3")?.unwrap_or(ALUMINUM_DENSITY),
        None => ALUMINUM_DENSITY,
    };
    if density != ALUMINUM_DENSITY {
        return Err(Error::validation(
            "aluminum_density_kg_m3",
            format!("fixed at {ALUMINUM_DENSITY}, got {density}"),
        ));
    }
    let override_cost: Option<f64> = match section {
        Some(s) => s.get("cost_per_kg_usd")?,
        None => None,
    };
    let cost_per_kg = match override_cost {
        Some(c) => c,
        None => {
            let t = doc.require_table("heatsinks")?;
            let pts = t
                .rows()
                .iter()
                .map(|r| Ok((t.num::<f64>(r, "mass_kg")?, t.num::<f64>(r, "cost_usd")?)))
                .collect::<Result<Vec<_>>>()?;
            fit_proportional(&pts, "heatsink cost per kg")?
        }
    };
    if !(cost_per_kg >= 0.0) {
        return Err(Error::validation("cost_per_kg_usd", "must be non-negative"));
    }
    Ok((
        fans,
        HeatsinkCostModel {
            cost_per_kg,
            aluminum_density: density,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreMaterial {
    pub name: String,
    pub b_sat: f64,
    pub steinmetz_k: f64,
    pub steinmetz_alpha: f64,
    pub steinmetz_beta: f64,
    pub cost_per_m3: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingMaterial {
    pub resistivity_20c: f64,
    pub temp_coefficient: f64,
    pub cost_per_m3: f64,
}

impl WindingMaterial {
    pub fn resistivity(&self, t: f64) -> f64 {
        self.resistivity_20c * (1.0 + self.temp_coefficient * (t - 20.0))
    }
}

pub fn load_core_db(path: &Path) -> Result<(CoreMaterial, WindingMaterial)> {
    let text = read_file(path)?;
    parse_core_db(&text, &path.display().to_string())
}

pub fn parse_core_db(text: &str, origin: &str) -> Result<(CoreMaterial, WindingMaterial)> {
    let doc = Document::parse(text, origin)?;
    let cm = doc.require_section("core_material")?;
    let cores = doc.require_table("cores")?;
    let core_pts = cores
        .rows()
        .iter()
        .map(|r| {
            Ok((
                cores.num::<f64>(r, "volume_m3")?,
                cores.num::<f64>(r, "cost_usd")?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let core = CoreMaterial {
        name: cm.require("name")?,
        b_sat: cm.require("b_sat_t")?,
        steinmetz_k: cm.require("steinmetz_k")?,
        steinmetz_alpha: cm.require("steinmetz_alpha")?,
        steinmetz_beta: cm.require("steinmetz_beta")?,
        density: cm.require("density_kg_m3")?,
        cost_per_m3: match cm.get("cost_per_m3_usd")? {
            Some(c) => c,
            None => fit_proportional(&core_pts, "core cost per m³")?,
        },
    };
    if !(core.b_sat > 0.0) {
        return Err(Error::validation("b_sat_t", "must be positive"));
    }
    if !(1.0 < core.steinmetz_alpha && core.steinmetz_alpha < core.steinmetz_beta) {
        return Err(Error::validation(
            "steinmetz_alpha",
            "Steinmetz exponents must satisfy 1 < alpha < beta",
        ));
    }

    let wm = doc.require_section("winding_material")?;
    let foils = doc.require_table("foils")?;
    let foil_pts = foils
        .rows()
        .iter()
        .map(|r| {
            let v = foils.num::<f64>(r, "thickness_m")?
                * foils.num::<f64>(r, "width_m")?
                * foils.num::<f64>(r, "length_m")?;
            Ok((v, foils.num::<f64>(r, "cost_usd")?))
        })
        .collect::<Result<Vec<_>>>()?;
    let winding = WindingMaterial {
        resistivity_20c: wm.require("resistivity_20c_ohm_m")?,
        temp_coefficient: wm.require("temp_coefficient_per_k")?,
        cost_per_m3: match wm.get("cost_per_m3_usd")? {
            Some(c) => c,
            None => fit_proportional(&foil_pts, "foil cost per m³")?,
        },
    };
    if !(winding.resistivity_20c > 0.0) {
        return Err(Error::validation(
            "resistivity_20c_ohm_m",
            "must be positive",
        ));
    }
    Ok((core, winding))
}

pub fn load_capacitor_db(path: &Path) -> Result<CapacitorSeries> {
    let text = read_file(path)?;
    parse_capacitor_db(&text, &path.display().to_string())
}

pub fn parse_capacitor_db(text: &str, origin: &str) -> Result<CapacitorSeries> {
    let doc = Document::parse(text, origin)?;
    let t = doc.require_table("capacitors")?;
    let samples = t
        .rows()
        .iter()
        .map(|r| {
            Ok(CapacitorSample {
                part_id: t.str(r, "part_id")?.to_string(),
                capacitance: t.num(r, "capacitance_f")?,
                rated_voltage: t.num(r, "rated_voltage_v")?,
                cost: t.num(r, "cost_usd")?,
                esr: t.num(r, "esr_ohm")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    fit_capacitor_coeffs(samples)
}

/// Every component database needed by an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Databases {
    pub switches: Vec<SwitchDevice>,
    pub fans: Vec<FanModel>,
    pub heatsink_cost: HeatsinkCostModel,
    pub core: CoreMaterial,
    pub winding: WindingMaterial,
    pub capacitors: CapacitorSeries,
    /// SHA-256 over the four database files, in a fixed order.
    pub source_hash: String,
}

impl Databases {
    pub fn load(paths: &DataPaths) -> Result<Self> {
        let mut hasher = Sha256::new();
        let mut read = |p: &Path| -> Result<String> {
            let text = read_file(p)?;
            hasher.update(text.as_bytes());
            Ok(text)
        };
        let sw = read(&paths.switches)?;
        let fa = read(&paths.fans)?;
        let co = read(&paths.cores)?;
        let ca = read(&paths.capacitors)?;
        let switches = parse_switch_db(&sw, &paths.switches.display().to_string())?;
        let (fans, heatsink_cost) = parse_fan_db(&fa, &paths.fans.display().to_string())?;
        let (core, winding) = parse_core_db(&co, &paths.cores.display().to_string())?;
        let capacitors = parse_capacitor_db(&ca, &paths.capacitors.display().to_string())?;
        Ok(Databases {
            switches,
            fans,
            heatsink_cost,
            core,
            winding,
            capacitors,
            source_hash: hex::encode(hasher.finalize()),
        })
    }
}
