//! Forced-convection cooling: a fan blowing through a straight-fin aluminium
//! heatsink, one per bridge. Flow comes from intersecting a linear fan curve
//! with the developing-laminar channel pressure drop; thermal resistance is a
//! one-dimensional chain of baseplate, finned convection and air heating.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::datastore::{FanModel, HeatsinkCostModel};
use crate::error::{Error, Result};

pub const BASEPLATE_THICKNESS: f64 = 0.003;
pub const K_ALUMINUM: f64 = 200.0;

/// Dry air near 40 °C.
pub mod air {
    pub const DENSITY: f64 = 1.127;
    pub const VISCOSITY: f64 = 1.912e-5;
    pub const CONDUCTIVITY: f64 = 0.0271;
    pub const HEAT_CAPACITY: f64 = 1007.0;
    pub const PRANDTL: f64 = 0.7;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatsinkGeometry {
    pub l_s: f64,
    pub w_s: f64,
    pub d_s: f64,
    pub h_f: f64,
    pub t_f: f64,
    pub n_f: u32,
}

impl HeatsinkGeometry {
    pub fn validate(&self) -> Result<()> {
        let dims = [self.l_s, self.w_s, self.d_s, self.h_f, self.t_f];
        if dims.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::validation("heatsink", "dimensions must be positive"));
        }
        if self.n_f < 2 {
            return Err(Error::validation(
                "n_f",
                "need at least two fins to form a channel",
            ));
        }
        if self.n_f as f64 * self.t_f >= self.w_s {
            return Err(Error::validation("n_f", "fins fill the whole sink width"));
        }
        Ok(())
    }

    pub fn channels(&self) -> f64 {
        (self.n_f - 1) as f64
    }

    /// Gap between neighbouring fins.
    pub fn channel_width(&self) -> f64 {
        (self.w_s - self.n_f as f64 * self.t_f) / self.channels()
    }

    pub fn hydraulic_diameter(&self) -> f64 {
        let s = self.channel_width();
        2.0 * s * self.h_f / (s + self.h_f)
    }

    pub fn flow_area(&self) -> f64 {
        self.channels() * self.channel_width() * self.h_f
    }
}

/// Fully developed f·Re of a rectangular duct of the given aspect ratio.
fn f_re_fully_developed(aspect: f64) -> f64 {
    let e = aspect.min(1.0 / aspect);
    24.0 * (1.0 - 1.3553 * e + 1.9467 * e.powi(2) - 1.7012 * e.powi(3) + 0.9564 * e.powi(4)
        - 0.2537 * e.powi(5))
}

fn reynolds(g: &HeatsinkGeometry, flow: f64) -> f64 {
    let v = flow / g.flow_area();
    air::DENSITY * v * g.hydraulic_diameter() / air::VISCOSITY
}

/// Static pressure across the fin channels at volume flow `flow`, including
/// entrance contraction and exit expansion.
pub fn pressure_drop(g: &HeatsinkGeometry, flow: f64) -> f64 {
    if flow <= 0.0 {
        return 0.0;
    }
    let s = g.channel_width();
    let dh = g.hydraulic_diameter();
    let v = flow / g.flow_area();
    let re = reynolds(g, flow);
    let l_star = g.l_s / (dh * re);
    let f_re = ((3.44 / l_star.sqrt()).powi(2) + f_re_fully_developed(s / g.h_f).powi(2)).sqrt();
    let f_app = f_re / re;
    let sigma = g.channels() * s / g.w_s;
    let k_c = 0.42 * (1.0 - sigma * sigma);
    let k_e = (1.0 - sigma).powi(2);
    (4.0 * f_app * g.l_s / dh + k_c + k_e) * 0.5 * air::DENSITY * v * v
}

/// Volume flow where the linear fan curve meets the channel pressure drop.
pub fn operating_flow(fan: &FanModel, g: &HeatsinkGeometry) -> Option<f64> {
    let q_max = fan.max_flow_m3s();
    let fan_dp = |q: f64| fan.max_static_pressure * (1.0 - q / q_max);
    let (mut lo, mut hi) = (0.0, q_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pressure_drop(g, mid) < fan_dp(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * q_max {
            break;
        }
    }
    let q = 0.5 * (lo + hi);
    (q > 0.0 && q.is_finite()).then_some(q)
}

/// 1/(h·A): the convective term of the sink resistance.
pub fn convection_resistance(h: f64, effective_area: f64) -> f64 {
    1.0 / (h * effective_area)
}

/// Mean heat transfer coefficient of a thermally developing laminar channel.
pub fn heat_transfer_coefficient(g: &HeatsinkGeometry, flow: f64) -> f64 {
    let dh = g.hydraulic_diameter();
    let gz = dh / g.l_s * reynolds(g, flow) * air::PRANDTL;
    let nu = 7.54 + 0.03 * gz / (1.0 + 0.016 * gz.powf(2.0 / 3.0));
    nu * air::CONDUCTIVITY / dh
}

/// Sink-to-ambient thermal resistance at a given volume flow.
pub fn thermal_resistance(g: &HeatsinkGeometry, flow: f64) -> f64 {
    let h = heat_transfer_coefficient(g, flow);
    let m = (2.0 * h / (K_ALUMINUM * g.t_f)).sqrt();
    let mh = m * g.h_f;
    let eta = mh.tanh() / mh;
    let area = g.n_f as f64 * 2.0 * g.h_f * g.l_s * eta + g.channels() * g.channel_width() * g.l_s;
    let r_base = g.d_s / (K_ALUMINUM * g.l_s * g.w_s);
    let r_air = 1.0 / (2.0 * air::DENSITY * flow * air::HEAT_CAPACITY);
    r_base + convection_resistance(h, area) + r_air
}

/// Volume flow and sink-to-ambient resistance of a fan/heatsink pairing.
pub fn evaluate_pair(fan: &FanModel, g: &HeatsinkGeometry) -> Result<(f64, f64)> {
    g.validate()?;
    let q = operating_flow(fan, g)
        .ok_or_else(|| Error::Infeasible(format!("{}: no fan operating point", fan.part_id)))?;
    Ok((q, thermal_resistance(g, q)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatsinkCost {
    pub volume: f64,
    pub mass: f64,
    pub cost: f64,
}

/// Baseplate plus `n_f + 1` fin slabs, then mass and cost.
pub fn heatsink_cost(g: &HeatsinkGeometry, model: &HeatsinkCostModel) -> HeatsinkCost {
    let volume = g.d_s * g.l_s * g.w_s + (g.n_f as f64 + 1.0) * g.h_f * g.l_s * g.t_f;
    let mass = volume * model.aluminum_density;
    HeatsinkCost {
        volume,
        mass,
        cost: mass * model.cost_per_kg,
    }
}

/// Maximum sink-to-ambient resistance that keeps every case at `t_c_max`.
pub fn required_rth(
    t_c_max: f64,
    t_amb: f64,
    p_loss_sw_max: f64,
    r_th_c_s: f64,
    p_loss_tot_max: f64,
) -> Result<f64> {
    if !(p_loss_tot_max > 0.0) {
        return Err(Error::validation("p_loss_tot_max", "must be positive"));
    }
    let r = (t_c_max - p_loss_sw_max * r_th_c_s - t_amb) / p_loss_tot_max;
    if r > 0.0 {
        Ok(r)
    } else {
        Err(Error::Infeasible(format!(
            "cooling: {p_loss_tot_max:.1} W cannot be removed within the case temperature limit"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryGrid {
    pub l_s: Vec<f64>,
    pub h_f_min: f64,
    pub h_f_step: f64,
    pub t_f: Vec<f64>,
    pub n_f: Vec<u32>,
}

impl Default for GeometryGrid {
    fn default() -> Self {
        GeometryGrid {
            l_s: (0..7).map(|k| (50 + 25 * k) as f64 * 1e-3).collect(),
            h_f_min: 0.010,
            h_f_step: 0.005,
            t_f: (1..=5).map(|k| k as f64 * 1e-3).collect(),
            n_f: (1..=16).map(|k| 3 * k).collect(),
        }
    }
}

impl GeometryGrid {
    /// Every valid geometry for a sink as wide as the fan; fin height runs up
    /// to the fan width.
    pub fn geometries(&self, fan: &FanModel) -> Vec<HeatsinkGeometry> {
        let w = fan.width;
        let mut out = Vec::new();
        let n_h = ((w - self.h_f_min) / self.h_f_step + 1e-9).floor() as usize;
        for &l_s in &self.l_s {
            for k in 0..=n_h {
                let h_f = round_nm(self.h_f_min + k as f64 * self.h_f_step);
                for &t_f in &self.t_f {
                    for &n_f in &self.n_f {
                        let g = HeatsinkGeometry {
                            l_s,
                            w_s: w,
                            d_s: BASEPLATE_THICKNESS,
                            h_f,
                            t_f,
                            n_f,
                        };
                        if g.validate().is_ok() {
                            out.push(g);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Drops binary noise from accumulated grid steps.
fn round_nm(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoolingDesign {
    pub fan: FanModel,
    pub geometry: HeatsinkGeometry,
    pub volume_flow: f64,
    pub r_th_s_a: f64,
    pub volume: f64,
    pub mass: f64,
    pub heatsink_cost: f64,
}

impl CoolingDesign {
    pub fn cost(&self) -> f64 {
        self.heatsink_cost + self.fan.unit_cost
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    fan: usize,
    geometry: HeatsinkGeometry,
    flow: f64,
    r_th: f64,
    hs: HeatsinkCost,
    cost: f64,
}

/// Every fan/geometry pairing evaluated once and ordered by cost, so a query
/// for a resistance limit is a scan for the first entry under it.
#[derive(Debug, Clone)]
pub struct CoolingCatalog {
    fans: Vec<FanModel>,
    entries: Vec<Entry>,
    min_r_th: f64,
}

fn geometry_key(g: &HeatsinkGeometry) -> [f64; 4] {
    [g.l_s, g.h_f, g.t_f, g.n_f as f64]
}

impl CoolingCatalog {
    pub fn build(
        fans: &[FanModel],
        model: &HeatsinkCostModel,
        grid: &GeometryGrid,
    ) -> Result<Self> {
        if fans.is_empty() {
            return Err(Error::Database("fan list is empty".into()));
        }
        let mut entries = Vec::new();
        for (i, fan) in fans.iter().enumerate() {
            for g in grid.geometries(fan) {
                let Ok((flow, r_th)) = evaluate_pair(fan, &g) else {
                    continue;
                };
                let hs = heatsink_cost(&g, model);
                entries.push(Entry {
                    fan: i,
                    geometry: g,
                    flow,
                    r_th,
                    hs,
                    cost: hs.cost + fan.unit_cost,
                });
            }
        }
        entries.sort_by(|a, b| {
            a.cost
                .total_cmp(&b.cost)
                .then(a.hs.mass.total_cmp(&b.hs.mass))
                .then_with(|| fans[a.fan].part_id.cmp(&fans[b.fan].part_id))
                .then_with(|| cmp_keys(&geometry_key(&a.geometry), &geometry_key(&b.geometry)))
        });
        let min_r_th = entries.iter().map(|e| e.r_th).fold(f64::INFINITY, f64::min);
        Ok(CoolingCatalog {
            fans: fans.to_vec(),
            entries,
            min_r_th,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lowest resistance any pairing reaches.
    pub fn min_r_th(&self) -> f64 {
        self.min_r_th
    }

    /// Cheapest design with `r_th_s_a < r_max`.
    pub fn best(&self, r_max: f64) -> Option<CoolingDesign> {
        let e = self.entries.iter().find(|e| e.r_th < r_max)?;
        Some(CoolingDesign {
            fan: self.fans[e.fan].clone(),
            geometry: e.geometry,
            volume_flow: e.flow,
            r_th_s_a: e.r_th,
            volume: e.hs.volume,
            mass: e.hs.mass,
            heatsink_cost: e.hs.cost,
        })
    }

    pub fn designs(&self) -> impl Iterator<Item = (&FanModel, HeatsinkGeometry, f64, f64)> + '_ {
        self.entries
            .iter()
            .map(|e| (&self.fans[e.fan], e.geometry, e.flow, e.r_th))
    }
}

fn cmp_keys(a: &[f64; 4], b: &[f64; 4]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Cheapest fan/heatsink pairing meeting `r_th_s_a < r_max` on `grid`.
pub fn optimize_cooling(
    r_max: f64,
    fans: &[FanModel],
    model: &HeatsinkCostModel,
    grid: &GeometryGrid,
) -> Result<CoolingDesign> {
    let catalog = CoolingCatalog::build(fans, model, grid)?;
    catalog.best(r_max).ok_or_else(|| {
        Error::Infeasible(format!(
            "cooling: need R_th,s-a < {r_max:.4} K/W, best reachable {:.4} K/W",
            catalog.min_r_th()
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fan() -> FanModel {
        FanModel {
            part_id: "F".into(),
            width: 0.04,
            height: 0.04,
            depth: 0.028,
            max_flow: 0.67,
            max_static_pressure: 300.0,
            unit_cost: 14.97,
        }
    }

    fn geom(n_f: u32) -> HeatsinkGeometry {
        HeatsinkGeometry {
            l_s: 0.1,
            w_s: 0.04,
            d_s: 0.003,
            h_f: 0.035,
            t_f: 0.001,
            n_f,
        }
    }

    #[test]
    fn required_rth_examples() {
        assert!((required_rth(100.0, 25.0, 100.0, 0.1, 400.0).unwrap() - 0.1625).abs() < 1e-12);
        assert!((required_rth(100.0, 25.0, 0.0, 0.1, 400.0).unwrap() - 0.1875).abs() < 1e-12);
        assert!(matches!(
            required_rth(100.0, 25.0, 800.0, 0.1, 4000.0),
            Err(Error::Infeasible(_))
        ));
        assert!(required_rth(100.0, 25.0, 0.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn heatsink_volume_example() {
        let g = HeatsinkGeometry {
            l_s: 0.1,
            w_s: 0.04,
            d_s: 0.003,
            h_f: 0.03,
            t_f: 0.002,
            n_f: 9,
        };
        let m = HeatsinkCostModel {
            cost_per_kg: 0.0,
            aluminum_density: 2700.0,
        };
        let c = heatsink_cost(&g, &m);
        assert!((c.volume - 7.2e-5).abs() < 1e-15);
        assert!((c.mass - 0.1944).abs() < 1e-12);
        assert_eq!(c.cost, 0.0);
    }

    #[test]
    fn fewer_fins_more_flow() {
        let f = fan();
        let mut last = 0.0;
        for n in [30, 24, 18, 12, 6] {
            let (q, _) = evaluate_pair(&f, &geom(n)).unwrap();
            assert!(q > last, "n_f {n}");
            last = q;
        }
    }

    #[test]
    fn operating_point_balances_pressures() {
        let f = fan();
        let g = geom(15);
        let q = operating_flow(&f, &g).unwrap();
        let fan_dp = f.max_static_pressure * (1.0 - q / f.max_flow_m3s());
        assert!((pressure_drop(&g, q) - fan_dp).abs() < 1e-6 * f.max_static_pressure);
    }

    #[test]
    fn convection_term_halves_with_double_area() {
        assert!(
            (convection_resistance(50.0, 0.02) - 2.0 * convection_resistance(50.0, 0.04)).abs()
                < 1e-15
        );
    }

    #[test]
    fn invalid_geometry() {
        assert!(geom(40).validate().is_err());
        assert!(geom(1).validate().is_err());
        assert!(evaluate_pair(&fan(), &geom(40)).is_err());
    }

    #[test]
    fn grid_size_and_bounds() {
        let gs = GeometryGrid::default().geometries(&fan());
        assert!(gs.len() > 1000);
        assert!(gs
            .iter()
            .all(|g| g.h_f <= 0.04 + 1e-12 && g.l_s <= 0.2 + 1e-12));
        assert!(gs.iter().any(|g| (g.h_f - 0.04).abs() < 1e-12));
    }
}
