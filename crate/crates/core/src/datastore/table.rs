//! Piecewise-linear lookup tables with explicit clamping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of a table lookup. `clamped` is set when the query fell outside the
/// tabulated range and the edge value was used instead of extrapolating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lookup {
    pub value: f64,
    pub clamped: bool,
}

/// A one-dimensional table y(x) with strictly increasing x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Curve {
    pub fn new(points: Vec<(f64, f64)>, what: &str) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Database(format!("{what}: need at least two points")));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Database(format!("{what}: non-finite entry")));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Database(format!(
                "{what}: independent variable is not strictly increasing"
            )));
        }
        let (xs, ys) = points.into_iter().unzip();
        Ok(Curve { xs, ys })
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn eval(&self, x: f64) -> Lookup {
        let (lo, hi) = self.x_range();
        if x <= lo {
            return Lookup {
                value: self.ys[0],
                clamped: x < lo,
            };
        }
        if x >= hi {
            return Lookup {
                value: *self.ys.last().unwrap(),
                clamped: x > hi,
            };
        }
        let k = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let (y0, y1) = (self.ys[k - 1], self.ys[k]);
        Lookup {
            value: y0 + (y1 - y0) * (x - x0) / (x1 - x0),
            clamped: false,
        }
    }
}

/// Device voltage drop v(T_j, i): one current curve per junction temperature,
/// interpolated bilinearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductionTable {
    temps: Vec<f64>,
    curves: Vec<Curve>,
}

impl ConductionTable {
    pub fn new(mut curves: Vec<(f64, Curve)>, what: &str) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::Database(format!("{what}: no temperature curves")));
        }
        curves.sort_by(|a, b| a.0.total_cmp(&b.0));
        if curves.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Database(format!(
                "{what}: duplicate junction temperature"
            )));
        }
        for (t, c) in &curves {
            if c.points().any(|(_, v)| v < 0.0) {
                return Err(Error::Database(format!(
                    "{what}: negative voltage at {t} °C"
                )));
            }
            if c.points()
                .collect::<Vec<_>>()
                .windows(2)
                .any(|w| w[1].1 < w[0].1)
            {
                return Err(Error::Database(format!(
                    "{what}: voltage decreases with current at {t} °C"
                )));
            }
        }
        let (temps, curves) = curves.into_iter().unzip();
        Ok(ConductionTable { temps, curves })
    }

    pub fn temp_range(&self) -> (f64, f64) {
        (self.temps[0], *self.temps.last().unwrap())
    }

    pub fn eval(&self, t_j: f64, current: f64) -> Lookup {
        let (lo, hi) = self.temp_range();
        let t_clamped = t_j < lo || t_j > hi;
        let t = t_j.clamp(lo, hi);
        let k = self
            .temps
            .partition_point(|&v| v <= t)
            .clamp(1, self.temps.len());
        if self.temps.len() == 1 || k == self.temps.len() && t >= hi {
            let last = self.curves.last().unwrap().eval(current);
            return Lookup {
                value: last.value,
                clamped: last.clamped || t_clamped,
            };
        }
        let (t0, t1) = (self.temps[k - 1], self.temps[k]);
        let a = self.curves[k - 1].eval(current);
        let b = self.curves[k].eval(current);
        let w = (t - t0) / (t1 - t0);
        Lookup {
            value: a.value + (b.value - a.value) * w,
            clamped: a.clamped || b.clamped || t_clamped,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_interpolates_and_clamps() {
        let c = Curve::new(vec![(0.0, 0.0), (10.0, 1.0), (20.0, 4.0)], "t").unwrap();
        assert_eq!(c.eval(5.0).value, 0.5);
        assert_eq!(c.eval(15.0).value, 2.5);
        let above = c.eval(30.0);
        assert_eq!(above.value, 4.0);
        assert!(above.clamped);
        assert!(!c.eval(20.0).clamped);
    }

    #[test]
    fn curve_rejects_non_monotone() {
        assert!(Curve::new(vec![(0.0, 0.0), (0.0, 1.0)], "t").is_err());
        assert!(Curve::new(vec![(1.0, 0.0), (0.5, 1.0)], "t").is_err());
        assert!(Curve::new(vec![(1.0, 0.0)], "t").is_err());
    }

    #[test]
    fn bilinear_between_temperatures() {
        let c25 = Curve::new(vec![(0.0, 0.0), (100.0, 1.0)], "a").unwrap();
        let c125 = Curve::new(vec![(0.0, 0.0), (100.0, 2.0)], "b").unwrap();
        let t = ConductionTable::new(vec![(125.0, c125), (25.0, c25)], "t").unwrap();
        let v = t.eval(75.0, 50.0);
        assert!((v.value - 0.75).abs() < 1e-12);
        assert!(!v.clamped);
        let hot = t.eval(200.0, 50.0);
        assert!((hot.value - 1.0).abs() < 1e-12);
        assert!(hot.clamped);
        assert!((t.eval(125.0, 100.0).value - 2.0).abs() < 1e-12);
    }
}
