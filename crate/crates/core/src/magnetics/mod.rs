//! Transformer design: an EE ferrite core with concentric copper-foil
//! windings on the centre leg, primary inside, secondary outside, separated
//! by a leakage gap that sets the series inductance.

pub mod loss;
pub mod thermal;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::datastore::{CoreMaterial, WindingMaterial};
use crate::electrical::PeriodicPwl;
use crate::error::{Error, Result};
pub use loss::{
    core_loss_igse, dowell_factor, foil_winding_loss, igse_ki, igse_loss_density, skin_depth,
    triangular_loss_density, FoilWinding, Spectrum, MU_0,
};
use loss::{harmonic_factors, tail_factor, weighted_ac_sum};
pub use thermal::{Hotspots, ThermalGeometry};

/// Insulation between each winding and the core leg it faces.
pub const WINDING_CLEARANCE: f64 = 2e-3;
/// Margin above and below the foil inside the window.
pub const FOIL_MARGIN: f64 = 2e-3;
/// Realized turns ratio may differ from the requested one by this much.
pub const TURNS_RATIO_TOLERANCE: f64 = 0.05;
pub const LEAKAGE_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformerGeometry {
    pub w_core: f64,
    pub d_core: f64,
    pub h_wind: f64,
    pub w_lk: f64,
    /// Foil thickness.
    pub w_foil: f64,
    pub n_p: u32,
    pub n_s: u32,
}

impl TransformerGeometry {
    /// Secondary turns for a requested ratio `n = N_s/N_p`, or `None` when
    /// integer rounding moves the ratio more than 5 %.
    pub fn secondary_turns(n_p: u32, n: f64) -> Option<u32> {
        let n_s = (n * n_p as f64).round();
        if n_s < 1.0 {
            return None;
        }
        let realized = n_s / n_p as f64;
        ((realized - n).abs() / n <= TURNS_RATIO_TOLERANCE).then_some(n_s as u32)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.w_core,
            self.d_core,
            self.h_wind,
            self.w_lk,
            self.w_foil,
        ];
        if dims.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::validation(
                "transformer",
                "dimensions must be positive",
            ));
        }
        if self.n_p == 0 || self.n_s == 0 {
            return Err(Error::validation(
                "transformer",
                "turn counts must be at least one",
            ));
        }
        if self.foil_height() <= 0.0 {
            return Err(Error::validation(
                "h_wind",
                "foil does not fit the window height",
            ));
        }
        Ok(())
    }

    pub fn core_area(&self) -> f64 {
        self.w_core * self.d_core
    }

    pub fn primary_build(&self) -> f64 {
        self.n_p as f64 * self.w_foil
    }

    pub fn secondary_build(&self) -> f64 {
        self.n_s as f64 * self.w_foil
    }

    /// Window width: both builds, the leakage gap and the clearances.
    pub fn w_wind(&self) -> f64 {
        self.primary_build() + self.w_lk + self.secondary_build() + 2.0 * WINDING_CLEARANCE
    }

    pub fn foil_height(&self) -> f64 {
        self.h_wind - 2.0 * FOIL_MARGIN
    }

    /// Length of a turn at distance `r` from the centre leg.
    pub fn turn_length_at(&self, r: f64) -> f64 {
        2.0 * (self.w_core + self.d_core) + 8.0 * r
    }

    pub fn primary_mlt(&self) -> f64 {
        self.turn_length_at(WINDING_CLEARANCE + self.primary_build() / 2.0)
    }

    pub fn secondary_mlt(&self) -> f64 {
        self.turn_length_at(
            WINDING_CLEARANCE + self.primary_build() + self.w_lk + self.secondary_build() / 2.0,
        )
    }

    pub fn primary_winding(&self) -> FoilWinding {
        FoilWinding {
            turns: self.n_p,
            mean_turn_length: self.primary_mlt(),
            thickness: self.w_foil,
            height: self.foil_height(),
            window_height: self.h_wind,
        }
    }

    pub fn secondary_winding(&self) -> FoilWinding {
        FoilWinding {
            turns: self.n_s,
            mean_turn_length: self.secondary_mlt(),
            ..self.primary_winding()
        }
    }

    pub fn core_volume(&self) -> f64 {
        2.0 * self.w_core * self.d_core * (self.h_wind + self.w_core + self.w_wind())
    }

    pub fn winding_volume(&self) -> f64 {
        let a = self.w_foil * self.foil_height();
        self.n_p as f64 * self.primary_mlt() * a + self.n_s as f64 * self.secondary_mlt() * a
    }

    /// Outer surfaces for the thermal network. The core is a box
    /// (2·w_core + 2·w_wind) × (h_wind + w_core) × d_core; the exposed
    /// winding is the end-turn region outside the core on both faces.
    pub fn thermal_geometry(&self) -> ThermalGeometry {
        let w_tot = 2.0 * (self.w_core + self.w_wind());
        let h_tot = self.h_wind + self.w_core;
        let core_area = 2.0 * (w_tot * h_tot + w_tot * self.d_core + h_tot * self.d_core);
        ThermalGeometry {
            core_area,
            core_length: h_tot,
            winding_area: 2.0 * self.h_wind * (self.w_core + 4.0 * self.w_wind()),
            winding_length: self.h_wind,
            contact_area: 2.0 * (self.w_core + self.d_core) * self.h_wind,
        }
    }

    fn key(&self) -> [f64; 7] {
        [
            self.w_core,
            self.d_core,
            self.h_wind,
            self.w_lk,
            self.w_foil,
            self.n_p as f64,
            self.n_s as f64,
        ]
    }
}

/// Peak flux density under a symmetric square-wave primary voltage.
pub fn flux_density(v_in: f64, f_sw: f64, n_p: u32, core_area: f64) -> f64 {
    v_in / (4.0 * f_sw * n_p as f64 * core_area)
}

/// Turn length weighting the leakage field energy: the gap at its centre,
/// each winding at the centroid of its ramped H² (3/4 of the primary build
/// outward, 1/4 of the secondary build). Equals the gap MLT when both builds
/// match.
pub fn leakage_mlt(g: &TransformerGeometry) -> f64 {
    let (bp, bs, w) = (g.primary_build(), g.secondary_build(), g.w_lk);
    let c = WINDING_CLEARANCE;
    let weighted = bp / 3.0 * g.turn_length_at(c + 0.75 * bp)
        + w * g.turn_length_at(c + bp + w / 2.0)
        + bs / 3.0 * g.turn_length_at(c + bp + w + 0.25 * bs);
    weighted / (w + (bp + bs) / 3.0)
}

/// Leakage inductance referred to the primary, from the stored field energy
/// of the winding window.
pub fn estimate_leakage(g: &TransformerGeometry) -> f64 {
    let np = g.n_p as f64;
    MU_0 * np * np * leakage_mlt(g) * (g.w_lk + (g.primary_build() + g.secondary_build()) / 3.0)
        / g.h_wind
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformerCost {
    pub v_core: f64,
    pub c_core: f64,
    pub v_winding: f64,
    pub c_winding: f64,
}

impl TransformerCost {
    pub fn total(&self) -> f64 {
        self.c_core + self.c_winding
    }
}

pub fn transformer_cost(
    g: &TransformerGeometry,
    core: &CoreMaterial,
    winding: &WindingMaterial,
) -> TransformerCost {
    let v_core = g.core_volume();
    let v_winding = g.winding_volume();
    TransformerCost {
        v_core,
        c_core: v_core * core.cost_per_m3,
        v_winding,
        c_winding: v_winding * winding.cost_per_m3,
    }
}

/// Steady-state core and winding temperatures, `None` if the network does
/// not converge.
pub fn thermal_check(
    p_core: f64,
    p_wind: f64,
    g: &TransformerGeometry,
    t_amb: f64,
) -> Option<Hotspots> {
    thermal::solve_network(p_core, p_wind, &g.thermal_geometry(), t_amb)
}

/// Discretized search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformerSpace {
    pub w_core: Vec<f64>,
    pub d_core: Vec<f64>,
    pub h_wind: Vec<f64>,
    pub w_lk: Vec<f64>,
    pub w_foil: Vec<f64>,
    pub n_p: Vec<u32>,
}

fn mm_range(lo: u32, step: u32, hi: u32) -> Vec<f64> {
    (lo..=hi)
        .step_by(step as usize)
        .map(|v| v as f64 * 1e-3)
        .collect()
}

impl Default for TransformerSpace {
    fn default() -> Self {
        TransformerSpace {
            w_core: mm_range(10, 10, 100),
            d_core: mm_range(10, 10, 200),
            h_wind: mm_range(10, 10, 200),
            w_lk: mm_range(10, 5, 50),
            w_foil: vec![0.1e-3, 0.2e-3, 0.5e-3, 1e-3, 2e-3],
            n_p: (3..=48).step_by(3).collect(),
        }
    }
}

/// Everything the transformer search needs from one converter design.
#[derive(Debug, Clone, Copy)]
pub struct TransformerRequirements<'a> {
    pub f_sw: f64,
    /// N_s/N_p.
    pub n: f64,
    pub l_lk: f64,
    pub t_amb: f64,
    pub t_max: f64,
    /// USD per W of average loss in the objective.
    pub loss_weight: f64,
    pub harmonics: usize,
    pub core: &'a CoreMaterial,
    pub winding: &'a WindingMaterial,
}

impl TransformerRequirements<'_> {
    /// Resistivity at the temperature limit, so losses are not underestimated.
    pub fn resistivity(&self) -> f64 {
        self.winding.resistivity(self.t_max)
    }
}

/// Primary winding current and input voltage at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingWaveform {
    pub v_in: f64,
    pub current: PeriodicPwl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformerDesign {
    pub geometry: TransformerGeometry,
    pub l_lk_tx: f64,
    pub b_max: f64,
    pub p_core: Vec<f64>,
    pub p_wind: Vec<f64>,
    pub avg_loss: f64,
    pub hotspots: Hotspots,
    pub cost: TransformerCost,
    pub objective: f64,
}

impl TransformerDesign {
    pub fn loss_at(&self, i: usize) -> f64 {
        self.p_core[i] + self.p_wind[i]
    }
}

/// Per-point harmonic content shared by every geometry of one search.
struct Prepared {
    spectra: Vec<Spectrum>,
    mean: Spectrum,
    v_in: Vec<f64>,
    v_in_max: f64,
    /// mean(v_in^β), for the grid-averaged core loss.
    v_in_beta_mean: f64,
}

impl Prepared {
    fn new(req: &TransformerRequirements<'_>, points: &[OperatingWaveform]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::validation("operating grid", "no operating points"));
        }
        let spectra: Vec<Spectrum> = points
            .iter()
            .map(|p| Spectrum::of(&p.current, req.harmonics))
            .collect();
        let mean = Spectrum::mean(&spectra).expect("non-empty");
        let v_in: Vec<f64> = points.iter().map(|p| p.v_in).collect();
        let beta = req.core.steinmetz_beta;
        Ok(Prepared {
            v_in_max: v_in.iter().copied().fold(0.0, f64::max),
            v_in_beta_mean: v_in.iter().map(|v| v.powf(beta)).sum::<f64>() / v_in.len() as f64,
            spectra,
            mean,
            v_in,
        })
    }
}

/// AC factors for one (foil, turns, window height) combination.
struct Factors {
    values: Vec<f64>,
    tail: f64,
}

impl Factors {
    fn new(w: &FoilWinding, rho: f64, f: f64, n_h: usize) -> Self {
        let values = harmonic_factors(w, rho, f, n_h);
        let tail = tail_factor(&values);
        Factors { values, tail }
    }

    /// R_ac/R_dc-weighted squared current, including DC.
    fn weigh(&self, s: &Spectrum) -> f64 {
        s.dc_sq + weighted_ac_sum(&self.values, self.tail, s)
    }
}

/// Lazily filled factor table indexed by (foil, turns, window height).
struct FactorCache {
    slots: Vec<Option<Factors>>,
    n_turns: usize,
    n_h: usize,
}

impl FactorCache {
    fn new(n_foil: usize, n_turns: usize, n_h: usize) -> Self {
        FactorCache {
            slots: (0..n_foil * n_turns * n_h).map(|_| None).collect(),
            n_turns,
            n_h,
        }
    }

    /// Fills the slot if needed and returns its index.
    fn ensure(
        &mut self,
        foil: usize,
        turns: u32,
        h: usize,
        make: impl FnOnce() -> Factors,
    ) -> usize {
        let idx = (foil * self.n_turns + turns as usize) * self.n_h + h;
        self.slots[idx].get_or_insert_with(make);
        idx
    }

    fn slot(&self, idx: usize) -> &Factors {
        self.slots[idx].as_ref().expect("slot filled by ensure")
    }
}

/// Losses of a geometry at each grid point: (core, winding).
fn point_losses(
    req: &TransformerRequirements<'_>,
    prep: &Prepared,
    g: &TransformerGeometry,
    fp: &Factors,
    fs: &Factors,
) -> (Vec<f64>, Vec<f64>) {
    let rho = req.resistivity();
    let r_p = g.primary_winding().dc_resistance(rho);
    let r_s = g.secondary_winding().dc_resistance(rho) / (req.n * req.n);
    let v_core = g.core_volume();
    let core = prep
        .v_in
        .iter()
        .map(|&v| {
            let b = flux_density(v, req.f_sw, g.n_p, g.core_area());
            triangular_loss_density(b, req.f_sw, req.core) * v_core
        })
        .collect();
    let wind = prep
        .spectra
        .iter()
        .map(|s| r_p * fp.weigh(s) + r_s * fs.weigh(s))
        .collect();
    (core, wind)
}

fn finish(
    req: &TransformerRequirements<'_>,
    prep: &Prepared,
    g: TransformerGeometry,
    fp: &Factors,
    fs: &Factors,
) -> std::result::Result<TransformerDesign, &'static str> {
    let b_max = flux_density(prep.v_in_max, req.f_sw, g.n_p, g.core_area());
    if b_max >= req.core.b_sat {
        return Err("flux density");
    }
    let l_lk_tx = estimate_leakage(&g);
    if (l_lk_tx - req.l_lk).abs() > LEAKAGE_TOLERANCE * req.l_lk {
        return Err("leakage");
    }
    let (p_core, p_wind) = point_losses(req, prep, &g, fp, fs);
    let worst_core = p_core.iter().copied().fold(0.0, f64::max);
    let worst_wind = p_wind.iter().copied().fold(0.0, f64::max);
    let hotspots =
        thermal_check(worst_core, worst_wind, &g, req.t_amb).ok_or("thermal divergence")?;
    if hotspots.max() > req.t_max {
        return Err("thermal");
    }
    let n = p_core.len() as f64;
    let avg_loss = (p_core.iter().sum::<f64>() + p_wind.iter().sum::<f64>()) / n;
    let cost = transformer_cost(&g, req.core, req.winding);
    Ok(TransformerDesign {
        geometry: g,
        l_lk_tx,
        b_max,
        p_core,
        p_wind,
        avg_loss,
        hotspots,
        objective: cost.total() + req.loss_weight * avg_loss,
        cost,
    })
}

/// Full evaluation of one geometry with every gate applied.
pub fn evaluate_design(
    req: &TransformerRequirements<'_>,
    points: &[OperatingWaveform],
    g: TransformerGeometry,
) -> Result<TransformerDesign> {
    g.validate()?;
    let prep = Prepared::new(req, points)?;
    let f = req.f_sw;
    let rho = req.resistivity();
    let fp = Factors::new(&g.primary_winding(), rho, f, req.harmonics);
    let fs = Factors::new(&g.secondary_winding(), rho, f, req.harmonics);
    finish(req, &prep, g, &fp, &fs)
        .map_err(|why| Error::Infeasible(format!("transformer: {why} gate")))
}

struct Candidate {
    objective: f64,
    cost: f64,
    g: TransformerGeometry,
    foil: usize,
    h: usize,
}

/// Exhaustive search for the geometry minimizing cost + λ·average loss
/// subject to saturation, leakage-band and temperature limits.
pub fn optimize_transformer(
    req: &TransformerRequirements<'_>,
    points: &[OperatingWaveform],
    space: &TransformerSpace,
) -> Result<TransformerDesign> {
    let prep = Prepared::new(req, points)?;
    let rho = req.resistivity();
    let f = req.f_sw;
    let n_max_turns = space
        .n_p
        .iter()
        .map(|&np| np.max((req.n * np as f64).round() as u32))
        .max()
        .unwrap_or(0) as usize
        + 1;
    let mut cache = FactorCache::new(space.w_foil.len(), n_max_turns, space.h_wind.len());

    let core_k = triangular_loss_density(1.0, f, req.core);
    let beta = req.core.steinmetz_beta;
    let n2 = req.n * req.n;

    let (mut sat_ok, mut lk_ok) = (false, false);
    let mut candidates = Vec::new();
    for &w_core in &space.w_core {
        for &d_core in &space.d_core {
            let a_c = w_core * d_core;
            for &n_p in &space.n_p {
                if flux_density(prep.v_in_max, f, n_p, a_c) >= req.core.b_sat {
                    continue;
                }
                let Some(n_s) = TransformerGeometry::secondary_turns(n_p, req.n) else {
                    continue;
                };
                sat_ok = true;
                // Average core-loss density scales as mean(v_in^β)/(4 f n_p A_c)^β.
                let core_density =
                    core_k * prep.v_in_beta_mean / (4.0 * f * n_p as f64 * a_c).powf(beta);
                for (fi, &w_foil) in space.w_foil.iter().enumerate() {
                    for &w_lk in &space.w_lk {
                        for (hi, &h_wind) in space.h_wind.iter().enumerate() {
                            let g = TransformerGeometry {
                                w_core,
                                d_core,
                                h_wind,
                                w_lk,
                                w_foil,
                                n_p,
                                n_s,
                            };
                            if g.foil_height() <= 0.0 {
                                continue;
                            }
                            let l = estimate_leakage(&g);
                            if (l - req.l_lk).abs() > LEAKAGE_TOLERANCE * req.l_lk {
                                continue;
                            }
                            lk_ok = true;
                            let (pw, sw) = (g.primary_winding(), g.secondary_winding());
                            let ip = cache
                                .ensure(fi, n_p, hi, || Factors::new(&pw, rho, f, req.harmonics));
                            let is = cache
                                .ensure(fi, n_s, hi, || Factors::new(&sw, rho, f, req.harmonics));
                            let kp = cache.slot(ip).weigh(&prep.mean);
                            let ks = cache.slot(is).weigh(&prep.mean);
                            let avg_loss = core_density * g.core_volume()
                                + pw.dc_resistance(rho) * kp
                                + sw.dc_resistance(rho) * ks / n2;
                            let cost = transformer_cost(&g, req.core, req.winding).total();
                            candidates.push(Candidate {
                                objective: cost + req.loss_weight * avg_loss,
                                cost,
                                g,
                                foil: fi,
                                h: hi,
                            });
                        }
                    }
                }
            }
        }
    }
    if !sat_ok {
        return Err(Error::Infeasible(
            "transformer: no core/turns combination stays below saturation".into(),
        ));
    }
    if !lk_ok {
        return Err(Error::Infeasible(format!(
            "transformer: no geometry within ±10 % of L_lk = {:.3e} H",
            req.l_lk
        )));
    }
    candidates.sort_by(|a, b| {
        a.objective
            .total_cmp(&b.objective)
            .then(a.cost.total_cmp(&b.cost))
            .then_with(|| cmp_key(&a.g.key(), &b.g.key()))
    });
    for c in &candidates {
        let g = c.g;
        let (pw, sw) = (g.primary_winding(), g.secondary_winding());
        let ip = cache.ensure(c.foil, g.n_p, c.h, || {
            Factors::new(&pw, rho, f, req.harmonics)
        });
        let is = cache.ensure(c.foil, g.n_s, c.h, || {
            Factors::new(&sw, rho, f, req.harmonics)
        });
        if let Ok(d) = finish(req, &prep, g, cache.slot(ip), cache.slot(is)) {
            return Ok(d);
        }
    }
    Err(Error::Infeasible(
        "transformer: no geometry meets the temperature limit".into(),
    ))
}

fn cmp_key(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}
