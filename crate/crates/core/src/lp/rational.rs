//! Rational approximation of fractional rates and even emission schedules.

pub const DEFAULT_MAX_DENOMINATOR: u64 = 1000;

/// Best rational approximation `p/q` of `x >= 0` with `q <= max_den`, via
/// continued fractions and semiconvergents. Exact for rationals whose reduced
/// denominator fits.
pub fn rationalize(x: f64, max_den: u64) -> (u64, u64) {
    let max_den = max_den.max(1);
    if x.is_nan() || x <= 0.0 || !x.is_finite() {
        return (0, 1);
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut v = x;
    loop {
        let a = v.floor();
        if a > u64::MAX as f64 / 2.0 {
            break;
        }
        let a = a as u64;
        let p2 = a.saturating_mul(p1).saturating_add(p0);
        let q2 = a.saturating_mul(q1).saturating_add(q0);
        if q2 > max_den {
            // largest semiconvergent still within the bound
            let m = (max_den - q0) / q1;
            let (ps, qs) = (m * p1 + p0, m * q1 + q0);
            if qs > 0 && (x - ps as f64 / qs as f64).abs() < (x - p1 as f64 / q1 as f64).abs() {
                return (ps, qs);
            }
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = v - a as f64;
        if frac < 1e-9 || (x - p1 as f64 / q1 as f64).abs() < 1e-12 * x.max(1.0) {
            break;
        }
        v = 1.0 / frac;
    }
    if q1 == 0 {
        (x.round() as u64, 1)
    } else {
        (p1, q1)
    }
}

/// `p` packets every `q` slots, spread as evenly as possible with the larger
/// counts first: 3/2 emits 2,1,2,1,...
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct EmissionSchedule {
    pub p: u64,
    pub q: u64,
}

impl EmissionSchedule {
    pub fn new(rate: f64, max_den: u64) -> Self {
        let (p, q) = rationalize(rate, max_den);
        Self { p, q }
    }

    pub fn rate(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// Packets due at offset `t` from the schedule start.
    pub fn count_at(&self, t: u64) -> u64 {
        let t = t % self.q;
        ceil_div((t + 1) * self.p, self.q) - ceil_div(t * self.p, self.q)
    }

    /// Packets due over offsets `0..t`.
    pub fn cumulative(&self, t: u64) -> u64 {
        (t / self.q) * self.p + ceil_div((t % self.q) * self.p, self.q)
    }
}

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_values() {
        assert_eq!(rationalize(1.5, 1000), (3, 2));
        assert_eq!(rationalize(0.0, 1000), (0, 1));
        assert_eq!(rationalize(2.0 / 3.0, 1000), (2, 3));
        assert_eq!(rationalize(3.0, 1000), (3, 1));
        assert_eq!(rationalize(0.001, 1000), (1, 1000));
    }

    #[test]
    fn irrational_is_close() {
        let (p, q) = rationalize(std::f64::consts::PI, 1000);
        assert_eq!((p, q), (355, 113));
        let (p, q) = rationalize(std::f64::consts::SQRT_2, 10);
        assert!(q <= 10);
        assert!((p as f64 / q as f64 - std::f64::consts::SQRT_2).abs() < 0.02);
    }

    #[test]
    fn schedule_spreads_evenly() {
        let s = EmissionSchedule::new(1.5, 1000);
        let out: Vec<u64> = (0..4).map(|t| s.count_at(t)).collect();
        assert_eq!(out, vec![2, 1, 2, 1]);
        let s = EmissionSchedule::new(0.4, 1000);
        let total: u64 = (0..5).map(|t| s.count_at(t)).sum();
        assert_eq!(total, 2);
        for t in 0..20 {
            assert_eq!(s.cumulative(t), (0..t).map(|u| s.count_at(u)).sum::<u64>());
        }
    }
}
