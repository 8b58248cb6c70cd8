//! Windowed velocity extrema and diameters, and their monotonicity checks.

/// Windowed velocity spread sampled on a time grid.
///
/// At each time `t` the extrema run over all agents and the trailing window
/// `[t - tau, t]`. `dk[m][k]` is the spread of component `k` at `times[m]`,
/// and `d[m]` its maximum over components.
#[derive(Debug, Clone, PartialEq)]
pub struct DiameterSeries {
    pub times: Vec<f64>,
    pub vmax: Vec<Vec<f64>>,
    pub vmin: Vec<Vec<f64>>,
    pub dk: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    /// Largest initial delayed position spread over connected pairs.
    pub x0: f64,
}

impl DiameterSeries {
    pub fn from_extrema(times: Vec<f64>, vmax: Vec<Vec<f64>>, vmin: Vec<Vec<f64>>, x0: f64) -> Self {
        let dk: Vec<Vec<f64>> = vmax
            .iter()
            .zip(&vmin)
            .map(|(hi, lo)| hi.iter().zip(lo).map(|(a, b)| a - b).collect())
            .collect();
        let d = dk
            .iter()
            .map(|row| row.iter().copied().fold(0.0, f64::max))
            .collect();
        Self {
            times,
            vmax,
            vmin,
            dk,
            d,
            x0,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vmax.first().map_or(0, Vec::len)
    }

    pub fn initial(&self) -> f64 {
        self.d[0]
    }

    pub fn last(&self) -> f64 {
        *self.d.last().unwrap()
    }

    /// First grid time with `D(t) < tol`.
    pub fn time_to_tolerance(&self, tol: f64) -> Option<f64> {
        self.times
            .iter()
            .zip(&self.d)
            .find(|(_, &d)| d < tol)
            .map(|(&t, _)| t)
    }

    /// Least-squares slope of `ln D(t)` against `t`, over samples with
    /// `D(t) > floor`. `None` with fewer than two usable samples.
    pub fn fitted_log_rate(&self, floor: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.d)
            .filter(|(_, &d)| d > floor && d > 0.0)
            .map(|(&t, &d)| (t, d.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        if sxx == 0.0 {
            return None;
        }
        Some(sxy / sxx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Diameter,
    Component(usize),
    UpperEnvelope(usize),
    LowerEnvelope(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneViolation {
    pub quantity: Quantity,
    /// Grid index where the violation shows up.
    pub index: usize,
    pub time: f64,
    /// The extreme value reached earlier (running min, or running max for
    /// the lower envelope).
    pub reference: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub tol: f64,
    pub violations: Vec<MonotoneViolation>,
    /// Largest excess over the running extreme, even when below `tol`.
    pub worst_excess: f64,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Flags any `t1 < t2` with `D^k(t2) > D^k(t1) + tol`, any rise of the upper
/// envelope and any fall of the lower envelope beyond `tol`. Comparing
/// against the running extreme covers every earlier `t1`, not only the
/// previous sample.
pub fn check_monotone_diameter(series: &DiameterSeries, tol: f64) -> MonotonicityReport {
    let mut violations = Vec::new();
    let mut worst_excess: f64 = 0.0;
    let d = series.dim();

    let mut scan = |quantity: Quantity, values: &mut dyn Iterator<Item = f64>, decreasing: bool| {
        let mut reference: Option<f64> = None;
        let mut flagged = false;
        for (m, value) in values.enumerate() {
            if let Some(r) = reference {
                let excess = if decreasing { value - r } else { r - value };
                worst_excess = worst_excess.max(excess);
                // one entry per quantity keeps reports readable
                if excess > tol && !flagged {
                    violations.push(MonotoneViolation {
                        quantity,
                        index: m,
                        time: series.times[m],
                        reference: r,
                        value,
                    });
                    flagged = true;
                }
            }
            reference = Some(match reference {
                None => value,
                Some(r) if decreasing => r.min(value),
                Some(r) => r.max(value),
            });
        }
    };

    scan(Quantity::Diameter, &mut series.d.iter().copied(), true);
    for k in 0..d {
        scan(Quantity::Component(k), &mut series.dk.iter().map(|r| r[k]), true);
        scan(Quantity::UpperEnvelope(k), &mut series.vmax.iter().map(|r| r[k]), true);
        scan(Quantity::LowerEnvelope(k), &mut series.vmin.iter().map(|r| r[k]), false);
    }
    MonotonicityReport {
        tol,
        violations,
        worst_excess,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(ds: &[f64]) -> DiameterSeries {
        let times = (0..ds.len()).map(|k| k as f64).collect();
        let vmax = ds.iter().map(|&d| vec![d / 2.0]).collect();
        let vmin = ds.iter().map(|&d| vec![-d / 2.0]).collect();
        DiameterSeries::from_extrema(times, vmax, vmin, 0.0)
    }

    #[test]
    fn monotone_series_passes() {
        let s = series(&[4.0, 3.0, 3.0, 1.0, 0.5]);
        assert!(check_monotone_diameter(&s, 1e-12).passed());
        assert_eq!(s.time_to_tolerance(1.0), Some(4.0));
        assert_eq!(s.time_to_tolerance(0.1), None);
    }

    #[test]
    fn bump_is_pinpointed() {
        let s = series(&[4.0, 3.0, 3.5, 1.0]);
        let r = check_monotone_diameter(&s, 1e-9);
        assert!(!r.passed());
        let v = &r.violations[0];
        assert_eq!(v.quantity, Quantity::Diameter);
        assert_eq!(v.index, 2);
        assert_eq!(v.reference, 3.0);
        assert!(r
            .violations
            .iter()
            .any(|v| v.quantity == Quantity::LowerEnvelope(0) && v.index == 2));
    }

    #[test]
    fn small_creep_is_caught_against_running_min() {
        // each step rises by less than tol, the total does not
        let s = series(&[1.0, 1.0 + 6e-10, 1.0 + 1.2e-9, 1.0 + 1.8e-9]);
        assert!(!check_monotone_diameter(&s, 1e-9).passed());
    }

    #[test]
    fn constant_series_passes() {
        assert!(check_monotone_diameter(&series(&[0.0; 5]), 0.0).passed());
    }

    #[test]
    fn fitted_rate_of_exponential() {
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let vmax: Vec<Vec<f64>> = times.iter().map(|t| vec![(-0.7 * t).exp()]).collect();
        let vmin = vec![vec![0.0]; 50];
        let s = DiameterSeries::from_extrema(times, vmax, vmin, 0.0);
        assert!((s.fitted_log_rate(0.0).unwrap() + 0.7).abs() < 1e-12);
    }
}
