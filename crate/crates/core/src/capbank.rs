//! Output capacitor: ripple-limited capacitance, bank composition from a
//! film-capacitor series and ESR loss.

use serde::{Deserialize, Serialize};

use crate::datastore::CapacitorSeries;
use crate::electrical::CurrentStats;
use crate::error::{Error, Result};

/// Upper bound on parallel strings before a unit is considered unusable.
pub const MAX_PARALLEL: u32 = 10_000;

/// Capacitance that keeps the ripple within `dv_c_max` for this waveform:
/// ∫|i_c| dt / (4·ΔV).
pub fn required_capacitance(stats: &CurrentStats, dv_c_max: f64) -> f64 {
    stats.capacitor_abs_integral / (4.0 * dv_c_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitorBank {
    pub part_id: String,
    pub unit_capacitance: f64,
    pub unit_voltage: f64,
    pub series_count: u32,
    pub parallel_count: u32,
    pub unit_cost: f64,
    pub unit_esr: f64,
}

impl CapacitorBank {
    pub fn units(&self) -> u32 {
        self.series_count * self.parallel_count
    }

    pub fn capacitance(&self) -> f64 {
        self.unit_capacitance * self.parallel_count as f64 / self.series_count as f64
    }

    pub fn voltage_rating(&self) -> f64 {
        self.unit_voltage * self.series_count as f64
    }

    pub fn cost(&self) -> f64 {
        self.unit_cost * self.units() as f64
    }

    pub fn esr(&self) -> f64 {
        self.unit_esr * self.series_count as f64 / self.parallel_count as f64
    }
}

/// ESR loss at a capacitor rms current.
pub fn capacitor_loss(bank: &CapacitorBank, i_c_rms: f64) -> f64 {
    bank.esr() * i_c_rms * i_c_rms
}

/// Bank for one (unit, series count): the fewest parallel strings that reach
/// `c_required`.
pub fn compose(
    series: &CapacitorSeries,
    unit: usize,
    series_count: u32,
    c_required: f64,
) -> Option<CapacitorBank> {
    let s = &series.samples[unit];
    let per_string = s.capacitance / series_count as f64;
    let parallel = ((c_required / per_string) * (1.0 - 1e-12)).ceil().max(1.0);
    if parallel > MAX_PARALLEL as f64 {
        return None;
    }
    Some(CapacitorBank {
        part_id: s.part_id.clone(),
        unit_capacitance: s.capacitance,
        unit_voltage: s.rated_voltage,
        series_count,
        parallel_count: parallel as u32,
        unit_cost: series.unit_cost(s.capacitance, s.rated_voltage),
        unit_esr: series.unit_esr(s.capacitance, s.rated_voltage),
    })
}

/// Cheapest bank built from catalogue units whose voltage rating covers
/// `margin·v_out_max` and whose capacitance covers `c_required`.
///
/// More units in series than the voltage needs only lowers capacitance per
/// string, so each unit is tried at its minimal series count.
pub fn select_bank(
    c_required: f64,
    v_out_max: f64,
    margin: f64,
    series: &CapacitorSeries,
) -> Result<CapacitorBank> {
    let v_need = margin * v_out_max;
    let mut best: Option<CapacitorBank> = None;
    for (i, s) in series.samples.iter().enumerate() {
        let n_series = ((v_need / s.rated_voltage) * (1.0 - 1e-12)).ceil().max(1.0) as u32;
        let Some(bank) = compose(series, i, n_series, c_required) else {
            continue;
        };
        if bank.unit_cost <= 0.0 {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => bank
                .cost()
                .total_cmp(&b.cost())
                .then(bank.esr().total_cmp(&b.esr()))
                .then_with(|| bank.part_id.cmp(&b.part_id))
                .is_lt(),
        };
        if better {
            best = Some(bank);
        }
    }
    best.ok_or_else(|| {
        Error::Infeasible(format!(
            "capacitor: no bank reaches {c_required:.3e} F at {v_need:.0} V"
        ))
    })
}
