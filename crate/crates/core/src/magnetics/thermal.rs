//! Two-node steady-state thermal network of the transformer: core and
//! winding each lose heat to ambient by natural convection and radiation,
//! and exchange heat through the bobbin insulation.

use serde::{Deserialize, Serialize};

const STEFAN_BOLTZMANN: f64 = 5.670374419e-8;
const EMISSIVITY: f64 = 0.85;
const INSULATION_THICKNESS: f64 = 1e-3;
const INSULATION_CONDUCTIVITY: f64 = 0.2;
const TOLERANCE: f64 = 0.1;
const MAX_ITER: usize = 200;

/// Exposed areas and characteristic lengths of the two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalGeometry {
    pub core_area: f64,
    pub core_length: f64,
    pub winding_area: f64,
    pub winding_length: f64,
    /// Contact area between winding and centre leg.
    pub contact_area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hotspots {
    pub t_core: f64,
    pub t_winding: f64,
    pub iterations: usize,
}

impl Hotspots {
    pub fn max(&self) -> f64 {
        self.t_core.max(self.t_winding)
    }
}

/// Combined convective and linearized radiative coefficient [W/m²K].
pub fn surface_coefficient(t_surface: f64, t_amb: f64, length: f64) -> f64 {
    let dt = (t_surface - t_amb).max(0.0);
    let h_conv = 1.42 * (dt / length).powf(0.25);
    let (ts, ta) = (t_surface + 273.15, t_amb + 273.15);
    let h_rad = EMISSIVITY * STEFAN_BOLTZMANN * (ts * ts + ta * ta) * (ts + ta);
    h_conv + h_rad
}

pub fn coupling_resistance(g: &ThermalGeometry) -> f64 {
    INSULATION_THICKNESS / (INSULATION_CONDUCTIVITY * g.contact_area)
}

/// Solves the network by fixed-point iteration on the surface coefficients.
/// Returns `None` when the iteration does not settle to 0.1 °C.
pub fn solve_network(
    p_core: f64,
    p_wind: f64,
    g: &ThermalGeometry,
    t_amb: f64,
) -> Option<Hotspots> {
    let r_cw = coupling_resistance(g);
    let (mut tc, mut tw) = (t_amb, t_amb);
    for it in 1..=MAX_ITER {
        let g_ca = surface_coefficient(tc, t_amb, g.core_length) * g.core_area;
        let g_wa = surface_coefficient(tw, t_amb, g.winding_length) * g.winding_area;
        let g_cw = 1.0 / r_cw;
        // [g_ca + g_cw, -g_cw; -g_cw, g_wa + g_cw] · [θc; θw] = [p_core; p_wind]
        let (a, b, d) = (g_ca + g_cw, -g_cw, g_wa + g_cw);
        let det = a * d - b * b;
        let theta_c = (d * p_core - b * p_wind) / det;
        let theta_w = (a * p_wind - b * p_core) / det;
        let (nc, nw) = (t_amb + theta_c, t_amb + theta_w);
        if !(nc.is_finite() && nw.is_finite()) {
            return None;
        }
        let step = (nc - tc).abs().max((nw - tw).abs());
        // Average successive iterates; the undamped map oscillates on small cores.
        tc = 0.5 * (tc + nc);
        tw = 0.5 * (tw + nw);
        if step < TOLERANCE {
            return Some(Hotspots {
                t_core: nc,
                t_winding: nw,
                iterations: it,
            });
        }
    }
    None
}
