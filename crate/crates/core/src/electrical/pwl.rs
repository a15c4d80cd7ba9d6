//! Closed-form integrals over piecewise-linear signals.

use serde::{Deserialize, Serialize};

/// A straight line from (t0, y0) to (t1, y1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Segment {
    pub fn new(t0: f64, t1: f64, y0: f64, y1: f64) -> Self {
        Segment { t0, t1, y0, y1 }
    }

    pub fn dt(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn slope(&self) -> f64 {
        let dt = self.dt();
        if dt > 0.0 {
            (self.y1 - self.y0) / dt
        } else {
            0.0
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        let dt = self.dt();
        if dt <= 0.0 {
            return self.y0;
        }
        self.y0 + (self.y1 - self.y0) * (t - self.t0) / dt
    }

    pub fn scaled(&self, k: f64) -> Segment {
        Segment::new(self.t0, self.t1, k * self.y0, k * self.y1)
    }

    pub fn offset(&self, c: f64) -> Segment {
        Segment::new(self.t0, self.t1, self.y0 + c, self.y1 + c)
    }

    /// ∫ y dt
    pub fn integral(&self) -> f64 {
        0.5 * (self.y0 + self.y1) * self.dt()
    }

    /// ∫ y² dt
    pub fn integral_sq(&self) -> f64 {
        (self.y0 * self.y0 + self.y0 * self.y1 + self.y1 * self.y1) * self.dt() / 3.0
    }

    /// Splits at the zero crossing, if the segment changes sign strictly inside.
    pub fn split_at_zero(&self) -> (Segment, Option<Segment>) {
        if (self.y0 < 0.0 && self.y1 > 0.0) || (self.y0 > 0.0 && self.y1 < 0.0) {
            let tz = self.t0 + self.dt() * self.y0 / (self.y0 - self.y1);
            (
                Segment::new(self.t0, tz, self.y0, 0.0),
                Some(Segment::new(tz, self.t1, 0.0, self.y1)),
            )
        } else {
            (*self, None)
        }
    }

    fn pieces(&self) -> impl Iterator<Item = Segment> {
        let (a, b) = self.split_at_zero();
        std::iter::once(a).chain(b)
    }

    /// ∫ max(y, 0) dt and ∫ max(y, 0)² dt.
    pub fn positive_part(&self) -> (f64, f64) {
        self.pieces()
            .filter(|p| p.y0 + p.y1 > 0.0)
            .fold((0.0, 0.0), |(a, b), p| {
                (a + p.integral(), b + p.integral_sq())
            })
    }

    /// ∫ |y| dt
    pub fn integral_abs(&self) -> f64 {
        self.pieces().map(|p| p.integral().abs()).sum()
    }

    /// Complex Fourier integral ∫ y(t)·e^{-jωt} dt, returned as (re, im).
    pub fn fourier(&self, omega: f64) -> (f64, f64) {
        let s = self.slope();
        let prim = |t: f64, y: f64| {
            let (sn, cs) = (omega * t).sin_cos();
            (
                y * sn / omega + s * cs / (omega * omega),
                y * cs / omega - s * sn / (omega * omega),
            )
        };
        let (r1, i1) = prim(self.t1, self.y1);
        let (r0, i0) = prim(self.t0, self.y0);
        (r1 - r0, i1 - i0)
    }
}

/// A periodic piecewise-linear signal given by consecutive segments covering
/// exactly one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPwl {
    pub period: f64,
    pub segments: Vec<Segment>,
}

impl PeriodicPwl {
    pub fn mean(&self) -> f64 {
        self.segments.iter().map(Segment::integral).sum::<f64>() / self.period
    }

    pub fn rms(&self) -> f64 {
        (self.segments.iter().map(Segment::integral_sq).sum::<f64>() / self.period).sqrt()
    }

    pub fn integral_abs(&self) -> f64 {
        self.segments.iter().map(Segment::integral_abs).sum()
    }

    /// RMS value of harmonic `k` (k ≥ 1).
    pub fn harmonic_rms(&self, k: usize) -> f64 {
        let omega = 2.0 * std::f64::consts::PI * k as f64 / self.period;
        let (re, im) = self
            .segments
            .iter()
            .filter(|s| s.dt() > 0.0)
            .map(|s| s.fourier(omega))
            .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
        let amplitude = 2.0 / self.period * re.hypot(im);
        amplitude / std::f64::consts::SQRT_2
    }

    pub fn at(&self, t: f64) -> f64 {
        let t = t.rem_euclid(self.period);
        self.segments
            .iter()
            .find(|s| t >= s.t0 && t <= s.t1)
            .map_or(0.0, |s| s.at(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_rms_is_peak_over_root3() {
        let peak = 7.0;
        let w = PeriodicPwl {
            period: 2.0,
            segments: vec![
                Segment::new(0.0, 0.5, 0.0, peak),
                Segment::new(0.5, 1.5, peak, -peak),
                Segment::new(1.5, 2.0, -peak, 0.0),
            ],
        };
        assert!((w.rms() - peak / 3f64.sqrt()).abs() < 1e-12);
        assert!(w.mean().abs() < 1e-12);
        assert!((w.integral_abs() - peak).abs() < 1e-12);
    }

    #[test]
    fn positive_part_splits_at_crossing() {
        let s = Segment::new(0.0, 2.0, -1.0, 1.0);
        let (a, b) = s.positive_part();
        assert!((a - 0.5).abs() < 1e-12);
        assert!((b - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.integral_abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_wave_fundamental() {
        // ±1 square wave: fundamental amplitude 4/π.
        let w = PeriodicPwl {
            period: 1.0,
            segments: vec![
                Segment::new(0.0, 0.5, 1.0, 1.0),
                Segment::new(0.5, 1.0, -1.0, -1.0),
            ],
        };
        let expected = 4.0 / std::f64::consts::PI / std::f64::consts::SQRT_2;
        assert!((w.harmonic_rms(1) - expected).abs() < 1e-12);
        assert!(w.harmonic_rms(2) < 1e-12);
        assert!((w.harmonic_rms(3) - expected / 3.0).abs() < 1e-12);
    }

    #[test]
    fn parseval_on_triangle() {
        let w = PeriodicPwl {
            period: 1.0,
            segments: vec![
                Segment::new(0.0, 0.5, -1.0, 1.0),
                Segment::new(0.5, 1.0, 1.0, -1.0),
            ],
        };
        let sum: f64 = (1..400).map(|k| w.harmonic_rms(k).powi(2)).sum();
        assert!((sum - w.rms().powi(2)).abs() < 1e-6);
    }
}
