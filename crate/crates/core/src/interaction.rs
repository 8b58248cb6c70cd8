//! Communication weights `psi` and per-edge delay profiles `tau_ij(t)`,
//! shared by the continuous and discrete engines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FlockError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    /// `kappa / (1 + r^2)^beta`
    CuckerSmale { beta: f64 },
    /// `psi == kappa`
    Constant,
    /// Piecewise-linear through `(radii[k], values[k])`, held constant past
    /// the last knot. Not admissible by construction; gate it with
    /// [`WeightFunction::verify_admissible`].
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

/// A bounded, non-increasing communication weight with upper bound `kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    kappa: f64,
    // multiplies every evaluation; 1 unless normalized by N
    scale: f64,
    kind: WeightKind,
}

impl WeightFunction {
    pub fn cucker_smale(kappa: f64, beta: f64) -> Result<Self> {
        check_kappa(kappa)?;
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(FlockError::InvalidParameter(format!(
                "beta must be finite and nonnegative, got {beta}"
            )));
        }
        Ok(Self {
            kappa,
            scale: 1.0,
            kind: WeightKind::CuckerSmale { beta },
        })
    }

    pub fn constant(kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        Ok(Self {
            kappa,
            scale: 1.0,
            kind: WeightKind::Constant,
        })
    }

    pub fn tabulated(kappa: f64, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_kappa(kappa)?;
        if radii.is_empty() || radii.len() != values.len() {
            return Err(FlockError::InvalidParameter(
                "tabulated weight needs matching, non-empty radii and values".into(),
            ));
        }
        if radii[0] != 0.0 {
            return Err(FlockError::InvalidParameter(
                "tabulated weight must start at r = 0".into(),
            ));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) || radii.iter().any(|r| !r.is_finite()) {
            return Err(FlockError::InvalidParameter(
                "tabulated radii must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FlockError::InvalidParameter(
                "tabulated values must be finite".into(),
            ));
        }
        Ok(Self {
            kappa,
            scale: 1.0,
            kind: WeightKind::Tabulated { radii, values },
        })
    }

    /// The original all-to-all normalization `kappa / N`.
    pub fn normalized_by(&self, n: usize) -> Self {
        let mut w = self.clone();
        w.kappa /= n as f64;
        w.scale /= n as f64;
        w
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    /// The decay exponent, for Cucker-Smale weights only.
    pub fn beta(&self) -> Option<f64> {
        match self.kind {
            WeightKind::CuckerSmale { beta } => Some(beta),
            _ => None,
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(FlockError::InvalidParameter(format!(
                "weight argument must be nonnegative, got {r}"
            )));
        }
        Ok(self.value(r))
    }

    /// Unchecked evaluation for `r >= 0` (distances are never negative).
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        match &self.kind {
            WeightKind::CuckerSmale { beta } => {
                if *beta == 0.0 {
                    self.kappa
                } else {
                    self.kappa * (1.0 + r * r).powf(-beta)
                }
            }
            WeightKind::Constant => self.kappa,
            WeightKind::Tabulated { radii, values } => {
                let k = radii.partition_point(|&x| x <= r);
                let v = if k >= radii.len() {
                    values[values.len() - 1]
                } else {
                    let (r0, r1) = (radii[k - 1], radii[k]);
                    let (v0, v1) = (values[k - 1], values[k]);
                    v0 + (v1 - v0) * (r - r0) / (r1 - r0)
                };
                v * self.scale
            }
        }
    }

    /// Samples `psi` on `[0, r_max]` and reports positivity, bound and
    /// monotonicity violations. Tabulated knots are always included.
    pub fn verify_admissible(&self, r_max: f64, n_samples: usize) -> AdmissibilityReport {
        let n_samples = n_samples.max(2);
        let mut radii: Vec<f64> = (0..n_samples)
            .map(|k| r_max * k as f64 / (n_samples - 1) as f64)
            .collect();
        if let WeightKind::Tabulated { radii: knots, .. } = &self.kind {
            radii.extend(knots.iter().copied());
            radii.sort_by(|a, b| a.total_cmp(b));
            radii.dedup();
        }
        let mut violations = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for &r in &radii {
            let v = self.value(r);
            if !(v > 0.0) {
                violations.push(AdmissibilityViolation::NonPositive { r, value: v });
            }
            if v > self.kappa * (1.0 + 1e-15) {
                violations.push(AdmissibilityViolation::ExceedsBound {
                    r,
                    value: v,
                    kappa: self.kappa,
                });
            }
            if let Some((r0, v0)) = prev {
                if v > v0 {
                    violations.push(AdmissibilityViolation::Increasing {
                        r1: r0,
                        psi1: v0,
                        r2: r,
                        psi2: v,
                    });
                }
            }
            prev = Some((r, v));
        }
        AdmissibilityReport {
            samples: radii.len(),
            violations,
        }
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa > 0.0 {
        Ok(())
    } else {
        Err(FlockError::InvalidParameter(format!(
            "kappa must be positive and finite, got {kappa}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdmissibilityViolation {
    NonPositive { r: f64, value: f64 },
    ExceedsBound { r: f64, value: f64, kappa: f64 },
    Increasing { r1: f64, psi1: f64, r2: f64, psi2: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub samples: usize,
    pub violations: Vec<AdmissibilityViolation>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DelayKind {
    Zero,
    Constant {
        value: f64,
    },
    /// `mean + amplitude * sin(2 pi t / period)`
    Sinusoidal {
        mean: f64,
        amplitude: f64,
        period: f64,
    },
    /// Each edge draws a fresh value in `[min, max]` on every hold interval
    /// `[k * hold, (k + 1) * hold)`. With `integer` set the draw is uniform
    /// over the integers in that range.
    PiecewiseRandom {
        seed: u64,
        hold: f64,
        min: f64,
        max: f64,
        integer: bool,
    },
}

/// Per-edge delays bounded by `tau`; the diagonal is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    tau: f64,
    kind: DelayKind,
}

impl DelayProfile {
    pub fn zero() -> Self {
        Self {
            tau: 0.0,
            kind: DelayKind::Zero,
        }
    }

    pub fn constant(tau: f64, value: f64) -> Result<Self> {
        check_tau(tau)?;
        if !(value >= 0.0 && value <= tau) {
            return Err(FlockError::Validation(format!(
                "constant delay {value} outside [0, tau = {tau}]"
            )));
        }
        Ok(Self {
            tau,
            kind: DelayKind::Constant { value },
        })
    }

    pub fn sinusoidal(tau: f64, mean: f64, amplitude: f64, period: f64) -> Result<Self> {
        check_tau(tau)?;
        if !(period.is_finite() && period > 0.0) {
            return Err(FlockError::InvalidParameter(format!(
                "sinusoid period must be positive, got {period}"
            )));
        }
        let (lo, hi) = (mean - amplitude.abs(), mean + amplitude.abs());
        if !(lo >= 0.0 && hi <= tau) {
            return Err(FlockError::Validation(format!(
                "sinusoidal delay range [{lo}, {hi}] outside [0, tau = {tau}]"
            )));
        }
        Ok(Self {
            tau,
            kind: DelayKind::Sinusoidal {
                mean,
                amplitude,
                period,
            },
        })
    }

    pub fn piecewise_random(
        tau: f64,
        seed: u64,
        hold: f64,
        min: f64,
        max: f64,
        integer: bool,
    ) -> Result<Self> {
        check_tau(tau)?;
        if !(hold.is_finite() && hold > 0.0) {
            return Err(FlockError::InvalidParameter(format!(
                "hold interval must be positive, got {hold}"
            )));
        }
        if !(min >= 0.0 && min <= max && max <= tau) {
            return Err(FlockError::Validation(format!(
                "random delay range [{min}, {max}] outside [0, tau = {tau}]"
            )));
        }
        if integer && (min.fract() != 0.0 || max.fract() != 0.0) {
            return Err(FlockError::NotIntegerValued(format!(
                "integer random delays need integral bounds, got [{min}, {max}]"
            )));
        }
        Ok(Self {
            tau,
            kind: DelayKind::PiecewiseRandom {
                seed,
                hold,
                min,
                max,
                integer,
            },
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn kind(&self) -> &DelayKind {
        &self.kind
    }

    /// False when the profile jumps in time.
    pub fn is_continuous_in_time(&self) -> bool {
        match self.kind {
            DelayKind::PiecewiseRandom { min, max, .. } => min == max,
            _ => true,
        }
    }

    /// `tau_ij(t)`, in `[0, tau]` and zero on the diagonal.
    #[inline]
    pub fn eval(&self, i: usize, j: usize, t: f64) -> f64 {
        if i == j {
            return 0.0;
        }
        match self.kind {
            DelayKind::Zero => 0.0,
            DelayKind::Constant { value } => value,
            DelayKind::Sinusoidal {
                mean,
                amplitude,
                period,
            } => {
                let v = mean + amplitude * (std::f64::consts::TAU * t / period).sin();
                v.clamp(0.0, self.tau)
            }
            DelayKind::PiecewiseRandom { .. } => {
                let slot = (t.max(0.0) / self.hold()).floor() as u64;
                self.draw(i, j, slot)
            }
        }
    }

    /// The integer bound `tau` for discrete use.
    pub fn integer_tau(&self) -> Result<usize> {
        if self.tau.fract() != 0.0 {
            return Err(FlockError::NotIntegerValued(format!(
                "tau = {} is not an integer",
                self.tau
            )));
        }
        Ok(self.tau as usize)
    }

    /// Checks that every value the profile can produce is an integer.
    pub fn ensure_integer_valued(&self) -> Result<()> {
        self.integer_tau()?;
        match self.kind {
            DelayKind::Zero => Ok(()),
            DelayKind::Constant { value } if value.fract() == 0.0 => Ok(()),
            DelayKind::Constant { value } => Err(FlockError::NotIntegerValued(format!(
                "constant delay {value}"
            ))),
            DelayKind::Sinusoidal { amplitude, mean, .. } => {
                if amplitude == 0.0 && mean.fract() == 0.0 {
                    Ok(())
                } else {
                    Err(FlockError::NotIntegerValued(
                        "sinusoidal delays take non-integer values".into(),
                    ))
                }
            }
            DelayKind::PiecewiseRandom { integer: true, .. } => Ok(()),
            DelayKind::PiecewiseRandom { min, max, .. } if min == max && min.fract() == 0.0 => {
                Ok(())
            }
            DelayKind::PiecewiseRandom { .. } => Err(FlockError::NotIntegerValued(
                "random delays are real-valued; set integer = true".into(),
            )),
        }
    }

    /// `tau_ij[t]` for the discrete model, with `t` a step index.
    pub fn eval_integer(&self, i: usize, j: usize, t: u64) -> Result<usize> {
        self.ensure_integer_valued()?;
        Ok(self.eval(i, j, t as f64).round() as usize)
    }

    fn hold(&self) -> f64 {
        match self.kind {
            DelayKind::PiecewiseRandom { hold, .. } => hold,
            _ => 1.0,
        }
    }

    // One ChaCha stream per ordered pair, positioned by hold slot, so any
    // (i, j, t) evaluates without replaying earlier draws.
    fn draw(&self, i: usize, j: usize, slot: u64) -> f64 {
        let DelayKind::PiecewiseRandom {
            seed,
            min,
            max,
            integer,
            ..
        } = self.kind
        else {
            unreachable!()
        };
        if min == max {
            return min;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((i as u64) << 32) | j as u64);
        rng.set_word_pos(u128::from(slot) * 16);
        if integer {
            rng.gen_range(min as u64..=max as u64) as f64
        } else {
            min + (max - min) * rng.gen::<f64>()
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(FlockError::InvalidParameter(format!(
            "tau must be finite and nonnegative, got {tau}"
        )))
    }
}
