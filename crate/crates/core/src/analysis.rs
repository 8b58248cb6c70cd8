//! Threshold constants, sufficient flocking conditions and checks of the
//! predicted geometric decay against simulated paths.
//!
//! All constants are evaluated in log space and exponentiated once.

use std::fmt;

use crate::dde::{InitialHistory, Trajectory};
use crate::diameter::DiameterSeries;
use crate::digraph::Hops;
use crate::discrete::{DiscreteHistory, DiscreteSystem, DiscreteTrajectory};
use crate::error::{FlockError, Result};
use crate::interaction::{WeightFunction, WeightKind};
use crate::network::Network;

/// Relative slack applied when comparing `D(0)` against a threshold, so
/// configurations that sit exactly on the boundary are not lost to
/// rounding.
pub const BOUNDARY_RTOL: f64 = 1e-12;

/// `|2 beta gamma_g - 1|` at or below this counts as the critical regime.
pub const CRITICAL_TOL: f64 = 1e-12;

/// Position bounds above this are reported as vacuous.
pub const VACUOUS_BOUND: f64 = 1e9;

const GRID_PER_DECADE: usize = 200;
const GRID_LO: f64 = 1e-6;
const GRID_HI: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    LongRange,
    Critical,
    ShortRange,
    NonCsWeight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Guaranteed,
    NotGuaranteed,
}

/// How the condition was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InequalityForm {
    /// `D(0) <= C rho psi(X(0) + rho)^gamma_g` at the reported finite `rho`.
    NonStrict,
    /// Critical regime only: `D(0)` meets the supremum `C kappa^gamma_g`,
    /// which no finite `rho` attains; `rho` is the largest grid value.
    LimitSupremum,
}

macro_rules! display_as {
    ($t:ty { $($v:pat => $s:expr),* $(,)? }) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($v => $s),* })
            }
        }
    };
}

display_as!(Model { Model::Continuous => "continuous", Model::Discrete => "discrete" });
display_as!(Regime {
    Regime::LongRange => "long-range",
    Regime::Critical => "critical",
    Regime::ShortRange => "short-range",
    Regime::NonCsWeight => "non-cs-weight",
});
display_as!(Verdict {
    Verdict::Guaranteed => "guaranteed",
    Verdict::NotGuaranteed => "not-guaranteed",
});
display_as!(InequalityForm {
    InequalityForm::NonStrict => "non-strict",
    InequalityForm::LimitSupremum => "limit-supremum",
});

/// Everything the closed-form constants depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub gamma_g: usize,
    pub n_infinity: usize,
    pub kappa: f64,
    /// Delay bound; a step count for the discrete model.
    pub tau: f64,
    pub d: usize,
    /// Step size, discrete model only.
    pub h: Option<f64>,
    /// Cucker-Smale exponent, when the weight is of that family.
    pub beta: Option<f64>,
}

impl ModelParams {
    pub fn new(gamma_g: usize, n_infinity: usize, kappa: f64, tau: f64, d: usize) -> Result<Self> {
        let p = Self {
            gamma_g,
            n_infinity,
            kappa,
            tau,
            d,
            h: None,
            beta: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_h(mut self, h: f64) -> Result<Self> {
        self.h = Some(h);
        self.validate()?;
        Ok(self)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        self.beta = Some(beta);
        self.validate()?;
        Ok(self)
    }

    /// Reads `gamma_g`, `n_inf`, `kappa`, `tau` and `beta` off a network.
    pub fn from_network(net: &Network, d: usize) -> Result<Self> {
        let m = net.metrics();
        let gamma_g = match m.gamma_g {
            Hops::Infinite => return Err(FlockError::NoSpanningTree),
            Hops::Finite(g) => g,
        };
        let p = Self {
            gamma_g,
            n_infinity: m.n_infinity,
            kappa: net.weight.kappa(),
            tau: net.delay.tau(),
            d,
            h: None,
            beta: net.weight.beta(),
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.gamma_g == 0 || self.n_infinity == 0 {
            return Err(FlockError::Degenerate(
                "the thresholds need at least two connected agents".into(),
            ));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(FlockError::InvalidParameter(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(FlockError::InvalidParameter(format!(
                "tau must be nonnegative, got {}",
                self.tau
            )));
        }
        if self.d == 0 {
            return Err(FlockError::InvalidParameter("dimension must be positive".into()));
        }
        if let Some(b) = self.beta {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(FlockError::InvalidParameter(format!(
                    "beta must be nonnegative, got {b}"
                )));
            }
        }
        if let Some(h) = self.h {
            let kh = self.kappa * h;
            let limit = 1.0 / self.n_infinity as f64;
            if !(kh > 0.0 && kh < limit) {
                return Err(FlockError::StabilityGate { kappa_h: kh, limit });
            }
        }
        Ok(())
    }

    fn nk(&self) -> f64 {
        self.n_infinity as f64 * self.kappa
    }

    fn g(&self) -> f64 {
        self.gamma_g as f64
    }

    /// Block length `gamma_g (2 tau + 1)` of the geometric decay estimate.
    pub fn block(&self) -> f64 {
        self.g() * (2.0 * self.tau + 1.0)
    }

    // ln of 2 sqrt(d) gamma_g (2 tau + 1) (1 + n kappa)^gamma_g
    fn ln_denominator(&self) -> f64 {
        std::f64::consts::LN_2
            + 0.5 * (self.d as f64).ln()
            + self.g().ln()
            + (2.0 * self.tau + 1.0).ln()
            + self.g() * self.nk().ln_1p()
    }
}

fn ln_c_infinity(p: &ModelParams) -> f64 {
    -p.nk() * p.g() * (3.0 * p.tau + 2.0) - p.ln_denominator()
}

fn ln_c_bar_infinity(p: &ModelParams, h: f64) -> f64 {
    p.g() * (3.0 * p.tau + 1.0) * (-h * p.nk()).ln_1p() + (p.g() - 1.0) * h.ln() - p.ln_denominator()
}

/// The continuous threshold constant `C_inf`.
pub fn c_infinity(p: &ModelParams) -> f64 {
    ln_c_infinity(p).exp()
}

/// The discrete threshold constant, which needs the step size.
pub fn c_bar_infinity(p: &ModelParams) -> Result<f64> {
    let h = p
        .h
        .ok_or_else(|| FlockError::InvalidParameter("discrete constant needs h".into()))?;
    Ok(ln_c_bar_infinity(p, h).exp())
}

/// Classifies by the sign of `2 beta gamma_g - 1`.
pub fn classify_regime(beta: f64, gamma_g: usize) -> Regime {
    let s = 2.0 * beta * gamma_g as f64 - 1.0;
    if s.abs() <= CRITICAL_TOL {
        Regime::Critical
    } else if s < 0.0 {
        Regime::LongRange
    } else {
        Regime::ShortRange
    }
}

/// Maximizer of `R(rho)` in the short-range regime.
pub fn rho_plus(x0: f64, beta: f64, gamma_g: usize) -> Result<f64> {
    let bg = beta * gamma_g as f64;
    let s = 2.0 * bg - 1.0;
    if s <= CRITICAL_TOL {
        return Err(FlockError::InvalidParameter(format!(
            "rho_+ needs 2 beta gamma_g > 1, got {}",
            2.0 * bg
        )));
    }
    if !(x0 >= 0.0) {
        return Err(FlockError::InvalidParameter(format!(
            "X(0) must be nonnegative, got {x0}"
        )));
    }
    Ok((x0 * (1.0 - bg) + (bg * bg * x0 * x0 + s).sqrt()) / s)
}

fn ln_psi(w: &WeightFunction, r: f64) -> f64 {
    match w.kind() {
        WeightKind::CuckerSmale { beta } => w.kappa().ln() - beta * (r * r).ln_1p(),
        _ => w.value(r).ln(),
    }
}

fn ln_threshold(ln_c: f64, rho: f64, x0: f64, w: &WeightFunction, gamma_g: usize) -> f64 {
    ln_c + rho.ln() + gamma_g as f64 * ln_psi(w, x0 + rho)
}

/// `R(rho) = C_inf kappa^gamma_g rho / (1 + (X(0) + rho)^2)^(beta gamma_g)`.
pub fn r_of_rho(rho: f64, x0: f64, p: &ModelParams) -> Result<f64> {
    let beta = p
        .beta
        .ok_or_else(|| FlockError::InvalidParameter("R(rho) needs a Cucker-Smale weight".into()))?;
    let w = WeightFunction::cucker_smale(p.kappa, beta)?;
    Ok(ln_threshold(ln_c_infinity(p), rho, x0, &w, p.gamma_g).exp())
}

/// Outcome of a sufficient-condition check.
#[derive(Debug, Clone, PartialEq)]
pub struct FlockingCertificate {
    pub model: Model,
    /// `C_inf` or its discrete counterpart.
    pub c_const: f64,
    pub rho: f64,
    /// Right-hand side of the condition at `rho` (or its supremum).
    pub threshold: f64,
    pub measured_d0: f64,
    pub measured_x0: f64,
    pub regime: Regime,
    pub delta: f64,
    /// `1 - delta`, kept separately because it can be far below epsilon.
    pub delta_gap: f64,
    pub verdict: Verdict,
    /// `threshold - D(0)`.
    pub margin: f64,
    pub form: InequalityForm,
    pub params: ModelParams,
}

impl FlockingCertificate {
    pub fn guaranteed(&self) -> bool {
        self.verdict == Verdict::Guaranteed
    }

    /// Block length in the time unit of the path (steps for the discrete
    /// model).
    pub fn block(&self) -> f64 {
        self.params.block()
    }

    /// `ln(1 / delta)`, accurate when `delta` is within rounding of 1.
    pub fn ln_inv_delta(&self) -> f64 {
        -(-self.delta_gap).ln_1p()
    }

    /// Decay rate of the bound `delta^(t / block)`, per unit of path time.
    pub fn theoretical_rate(&self) -> f64 {
        -self.ln_inv_delta() / self.block()
    }

    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        let num = |x: f64| format!("{x:.16e}");
        kv("model", self.model.to_string());
        kv("regime", self.regime.to_string());
        kv("verdict", self.verdict.to_string());
        kv("inequality", self.form.to_string());
        kv("gamma_g", p.gamma_g.to_string());
        kv("n_infinity", p.n_infinity.to_string());
        kv("kappa", num(p.kappa));
        kv("tau", num(p.tau));
        kv("d", p.d.to_string());
        kv("beta", p.beta.map_or("none".into(), num));
        kv("h", p.h.map_or("none".into(), num));
        kv("c_const", num(self.c_const));
        kv("rho", num(self.rho));
        kv("threshold", num(self.threshold));
        kv("D0", num(self.measured_d0));
        kv("X0", num(self.measured_x0));
        kv("margin", num(self.margin));
        kv("delta", num(self.delta));
        kv("delta_gap", num(self.delta_gap));
        out
    }
}

struct Choice {
    rho: f64,
    ln_thr: f64,
    form: InequalityForm,
    feasible: bool,
}

fn grid(x0: f64) -> Vec<f64> {
    let s = x0.max(1.0);
    let decades = (GRID_HI / GRID_LO).log10().round() as usize;
    let n = decades * GRID_PER_DECADE;
    (0..=n)
        .map(|k| s * GRID_LO * 10f64.powf(k as f64 / GRID_PER_DECADE as f64))
        .collect()
}

// Smallest feasible rho on the grid, bisected down to the feasibility
// edge; smaller rho means a larger psi(X0 + rho) and so a smaller delta.
fn search_rho(ln_c: f64, d0: f64, x0: f64, w: &WeightFunction, p: &ModelParams, regime: Regime) -> Choice {
    let f = |rho: f64| ln_threshold(ln_c, rho, x0, w, p.gamma_g);
    let ok = |ln_thr: f64| feasible(d0, ln_thr);
    let rhos = grid(x0);
    let vals: Vec<f64> = rhos.iter().map(|&r| f(r)).collect();
    if let Some(k) = vals.iter().position(|&v| ok(v)) {
        if k == 0 {
            return Choice {
                rho: rhos[0],
                ln_thr: vals[0],
                form: InequalityForm::NonStrict,
                feasible: true,
            };
        }
        let (mut lo, mut hi) = (rhos[k - 1], rhos[k]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if ok(f(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return Choice {
            rho: hi,
            ln_thr: f(hi),
            form: InequalityForm::NonStrict,
            feasible: true,
        };
    }
    if regime == Regime::Critical {
        let ln_sup = ln_c + p.g() * p.kappa.ln();
        if ok(ln_sup) {
            return Choice {
                rho: *rhos.last().unwrap(),
                ln_thr: ln_sup,
                form: InequalityForm::LimitSupremum,
                feasible: true,
            };
        }
    }
    // infeasible: report the best threshold found
    let k = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap();
    let a = rhos[k.saturating_sub(1)].ln();
    let b = rhos[(k + 1).min(rhos.len() - 1)].ln();
    let rho = golden_max(|s| f(s.exp()), a, b).exp();
    let (rho, ln_thr) = if f(rho) >= vals[k] {
        (rho, f(rho))
    } else {
        (rhos[k], vals[k])
    };
    Choice {
        rho,
        ln_thr,
        form: InequalityForm::NonStrict,
        feasible: false,
    }
}

fn feasible(d0: f64, ln_thr: f64) -> bool {
    d0 <= ln_thr.exp() * (1.0 + BOUNDARY_RTOL)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Decides the condition for measured `D(0)`, `X(0)`. `rho` overrides the
/// automatic choice.
pub fn certify(
    model: Model,
    params: &ModelParams,
    weight: &WeightFunction,
    d0: f64,
    x0: f64,
    rho: Option<f64>,
) -> Result<FlockingCertificate> {
    let ln_c = match model {
        Model::Continuous => ln_c_infinity(params),
        Model::Discrete => {
            let h = params.h.ok_or_else(|| {
                FlockError::InvalidParameter("discrete certificate needs h".into())
            })?;
            ln_c_bar_infinity(params, h)
        }
    };
    let regime = match weight.kind() {
        WeightKind::CuckerSmale { beta } => classify_regime(*beta, params.gamma_g),
        _ => Regime::NonCsWeight,
    };
    let choice = match (rho, regime) {
        (Some(r), _) => {
            if !(r > 0.0 && r.is_finite()) {
                return Err(FlockError::InvalidParameter(format!(
                    "rho must be positive, got {r}"
                )));
            }
            let ln_thr = ln_threshold(ln_c, r, x0, weight, params.gamma_g);
            Choice {
                rho: r,
                ln_thr,
                form: InequalityForm::NonStrict,
                feasible: feasible(d0, ln_thr),
            }
        }
        (None, Regime::ShortRange) => {
            let r = rho_plus(x0, weight.beta().unwrap(), params.gamma_g)?;
            let ln_thr = ln_threshold(ln_c, r, x0, weight, params.gamma_g);
            Choice {
                rho: r,
                ln_thr,
                form: InequalityForm::NonStrict,
                feasible: feasible(d0, ln_thr),
            }
        }
        (None, _) => search_rho(ln_c, d0, x0, weight, params, regime),
    };

    // 1 - delta = psi^g * (model factor) / (2 (1 + n kappa)^g)
    let g = params.g();
    let ln_psi_g = g * ln_psi(weight, x0 + choice.rho);
    let ln_factor = match model {
        Model::Continuous => -params.nk() * g * (3.0 * params.tau + 2.0),
        Model::Discrete => {
            let h = params.h.unwrap();
            g * h.ln() + g * (3.0 * params.tau + 1.0) * (-h * params.nk()).ln_1p()
        }
    };
    let gap = (ln_psi_g + ln_factor - std::f64::consts::LN_2 - g * params.nk().ln_1p()).exp();
    let threshold = choice.ln_thr.exp();
    let verdict = if choice.feasible && gap > 0.0 {
        Verdict::Guaranteed
    } else {
        Verdict::NotGuaranteed
    };
    Ok(FlockingCertificate {
        model,
        c_const: ln_c.exp(),
        rho: choice.rho,
        threshold,
        measured_d0: d0,
        measured_x0: x0,
        regime,
        delta: 1.0 - gap,
        delta_gap: gap,
        verdict,
        margin: threshold - d0,
        form: choice.form,
        params: params.clone(),
    })
}

fn admissible(weight: &WeightFunction, x0: f64) -> Result<()> {
    let report = weight.verify_admissible(10.0 * (1.0 + x0), 1000);
    match report.violations.first() {
        None => Ok(()),
        Some(v) => Err(FlockError::InadmissibleWeight(format!("{v:?}"))),
    }
}

/// Continuous-model certificate from initial data on `[-tau, 0]`.
pub fn check_continuous(
    history: &InitialHistory,
    net: &Network,
    rho: Option<f64>,
) -> Result<FlockingCertificate> {
    let params = ModelParams::from_network(net, history.dim())?;
    let tau = net.delay.tau();
    if !history.covers(tau) {
        return Err(FlockError::Validation(format!(
            "initial history does not cover [-{tau}, 0]"
        )));
    }
    let (vmax, vmin) = history.velocity_extrema(-tau, 0.0);
    let d0 = vmax.iter().zip(&vmin).map(|(a, b)| a - b).fold(0.0, f64::max);
    let x0 = history.delayed_position_spread(&net.graph, tau);
    admissible(&net.weight, x0)?;
    certify(Model::Continuous, &params, &net.weight, d0, x0, rho)
}

/// Discrete-model certificate from step data on `{-tau..=0}`.
pub fn check_discrete(
    history: &DiscreteHistory,
    sys: &DiscreteSystem,
    rho: Option<f64>,
) -> Result<FlockingCertificate> {
    let net = sys.network();
    let params = ModelParams::from_network(net, history.dim())?.with_h(sys.h())?;
    let tau = sys.tau();
    if history.depth() < tau {
        return Err(FlockError::Validation(format!(
            "history covers {} steps, delay bound is {tau}",
            history.depth()
        )));
    }
    let d0 = history.window_diameter(tau);
    let x0 = history.delayed_position_spread(net, tau);
    admissible(&net.weight, x0)?;
    certify(Model::Discrete, &params, &net.weight, d0, x0, rho)
}

/// Common view of continuous and discrete paths for the decay and
/// position checks. Times are in the path's own unit (steps for the
/// discrete model).
pub trait FlockPath {
    fn model(&self) -> Model;
    fn horizon(&self) -> f64;
    fn diameter_at(&self, t: f64) -> f64;
    fn diameter_series(&self, x0: f64) -> DiameterSeries;
    fn agents(&self) -> usize;
    fn dim(&self) -> usize;
    fn initial_positions(&self) -> Vec<f64>;
    fn max_pair_distance(&self, i: usize, j: usize) -> f64;
    /// Physical length of one unit of path time.
    fn time_unit(&self) -> f64;
}

impl FlockPath for Trajectory {
    fn model(&self) -> Model {
        Model::Continuous
    }
    fn horizon(&self) -> f64 {
        self.t_end()
    }
    fn diameter_at(&self, t: f64) -> f64 {
        Trajectory::diameter_at(self, t)
    }
    fn diameter_series(&self, x0: f64) -> DiameterSeries {
        self.diameters(x0)
    }
    fn agents(&self) -> usize {
        Trajectory::agents(self)
    }
    fn dim(&self) -> usize {
        Trajectory::dim(self)
    }
    fn initial_positions(&self) -> Vec<f64> {
        self.positions(0).to_vec()
    }
    fn max_pair_distance(&self, i: usize, j: usize) -> f64 {
        Trajectory::max_pair_distance(self, i, j)
    }
    fn time_unit(&self) -> f64 {
        1.0
    }
}

impl FlockPath for DiscreteTrajectory {
    fn model(&self) -> Model {
        Model::Discrete
    }
    fn horizon(&self) -> f64 {
        self.t_end() as f64
    }
    fn diameter_at(&self, t: f64) -> f64 {
        self.window_diameter_at(t.floor() as u64)
    }
    fn diameter_series(&self, x0: f64) -> DiameterSeries {
        self.diameters(x0)
    }
    fn agents(&self) -> usize {
        DiscreteTrajectory::agents(self)
    }
    fn dim(&self) -> usize {
        DiscreteTrajectory::dim(self)
    }
    fn initial_positions(&self) -> Vec<f64> {
        self.positions(0).to_vec()
    }
    fn max_pair_distance(&self, i: usize, j: usize) -> f64 {
        DiscreteTrajectory::max_pair_distance(self, i, j)
    }
    fn time_unit(&self) -> f64 {
        self.h()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayCheck {
    pub n: u64,
    pub t: f64,
    pub measured: f64,
    pub bound: f64,
}

impl DecayCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.measured <= self.bound * (1.0 + tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub tol: f64,
    pub checks: Vec<DecayCheck>,
    /// First failing check, if any.
    pub first_violation: Option<usize>,
    /// Least-squares slope of `ln D` on the path.
    pub fitted_rate: Option<f64>,
    /// Slope of the theoretical envelope `ln(delta) / block`.
    pub theoretical_rate: f64,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

fn ensure_matches(path: &impl FlockPath, cert: &FlockingCertificate) -> Result<()> {
    if path.model() != cert.model {
        return Err(FlockError::ScenarioMismatch(format!(
            "{} certificate applied to a {} path",
            cert.model,
            path.model()
        )));
    }
    if path.dim() != cert.params.d {
        return Err(FlockError::ScenarioMismatch("dimension differs".into()));
    }
    let d0 = path.diameter_at(0.0);
    if (d0 - cert.measured_d0).abs() > 1e-9 * cert.measured_d0.max(f64::MIN_POSITIVE) {
        return Err(FlockError::ScenarioMismatch(format!(
            "path starts at D(0) = {d0:e}, certificate measured {:e}",
            cert.measured_d0
        )));
    }
    Ok(())
}

/// Checks `D(n block) <= delta^n D(0) (1 + tol)` for every block end
/// within the horizon.
pub fn verify_decay(path: &impl FlockPath, cert: &FlockingCertificate, tol: f64) -> Result<DecayReport> {
    if !cert.guaranteed() {
        return Err(FlockError::NotCertified);
    }
    ensure_matches(path, cert)?;
    let block = cert.block();
    let ln_delta = -cert.ln_inv_delta();
    let mut checks = Vec::new();
    let mut first_violation = None;
    let mut n = 0u64;
    loop {
        let t = n as f64 * block;
        if t > path.horizon() * (1.0 + 1e-12) {
            break;
        }
        let check = DecayCheck {
            n,
            t,
            measured: path.diameter_at(t.min(path.horizon())),
            bound: (n as f64 * ln_delta).exp() * cert.measured_d0,
        };
        if first_violation.is_none() && !check.holds(tol) {
            first_violation = Some(checks.len());
        }
        checks.push(check);
        n += 1;
    }
    let series = path.diameter_series(cert.measured_x0);
    let floor = 1e-12 * cert.measured_d0;
    Ok(DecayReport {
        tol,
        checks,
        first_violation,
        fitted_rate: series.fitted_log_rate(floor),
        theoretical_rate: cert.theoretical_rate(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionReport {
    /// Largest per-pair bound.
    pub bound: f64,
    /// The delay-dependent part of the bound, shared by every pair.
    pub drift_term: f64,
    pub measured_max: f64,
    /// Pair with the largest measured distance relative to its bound.
    pub worst_pair: Option<(usize, usize)>,
    pub vacuous: bool,
    pub passed: bool,
}

/// Compares the largest pairwise distance on the path against
/// `sum_k |x_i^k(0) - x_j^k(0)| + d D(0) delta^-1 block / ln(delta^-1)`.
/// For the discrete model the block is converted to physical time.
pub fn position_bound(path: &impl FlockPath, cert: &FlockingCertificate) -> Result<PositionReport> {
    if !cert.guaranteed() {
        return Err(FlockError::NotCertified);
    }
    ensure_matches(path, cert)?;
    let (n, d) = (path.agents(), path.dim());
    let block = cert.block() * path.time_unit();
    let drift_term =
        d as f64 * cert.measured_d0 * block / (cert.delta * cert.ln_inv_delta());
    let x = path.initial_positions();
    let mut bound: f64 = 0.0;
    let mut measured_max: f64 = 0.0;
    let mut worst: Option<((usize, usize), f64)> = None;
    let mut passed = true;
    for i in 0..n {
        for j in i + 1..n {
            let l1: f64 = (0..d).map(|c| (x[i * d + c] - x[j * d + c]).abs()).sum();
            let b = l1 + drift_term;
            let m = path.max_pair_distance(i, j);
            bound = bound.max(b);
            measured_max = measured_max.max(m);
            if m > b {
                passed = false;
            }
            let ratio = m / b;
            if worst.map_or(true, |(_, r)| ratio > r) {
                worst = Some(((i, j), ratio));
            }
        }
    }
    Ok(PositionReport {
        bound,
        drift_term,
        measured_max,
        worst_pair: worst.map(|w| w.0),
        vacuous: drift_term > VACUOUS_BOUND,
        passed,
    })
}
