//! Forward-Euler recursion with integer step delays.

use std::collections::VecDeque;
use std::io::Write;

use crate::dde::{write_state_csv, InitialHistory};
use crate::diameter::DiameterSeries;
use crate::error::{FlockError, Result};
use crate::network::Network;

/// Snapshots for steps `-tau..=0`, oldest first, flat agent-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteHistory {
    n: usize,
    d: usize,
    x: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl DiscreteHistory {
    /// Constant extension of step-0 data to `tau` negative steps.
    pub fn constant(x0: Vec<f64>, v0: Vec<f64>, n: usize, tau: usize) -> Result<Self> {
        Self::from_steps(vec![x0; tau + 1], vec![v0; tau + 1], n)
    }

    /// Explicit per-step tables, oldest (step `-tau`) first.
    pub fn from_steps(x: Vec<Vec<f64>>, v: Vec<Vec<f64>>, n: usize) -> Result<Self> {
        if x.is_empty() || x.len() != v.len() {
            return Err(FlockError::Validation(format!(
                "history needs matching nonempty position and velocity tables, got {} and {}",
                x.len(),
                v.len()
            )));
        }
        if n == 0 || x[0].len() % n != 0 || x[0].is_empty() {
            return Err(FlockError::Validation(
                "history snapshot size is not a multiple of the agent count".into(),
            ));
        }
        let width = x[0].len();
        if x.iter().chain(&v).any(|s| s.len() != width) {
            return Err(FlockError::Validation(
                "history snapshots differ in size".into(),
            ));
        }
        if x.iter().chain(&v).flatten().any(|c| !c.is_finite()) {
            return Err(FlockError::Validation("history is not finite".into()));
        }
        Ok(Self {
            n,
            d: width / n,
            x,
            v,
        })
    }

    /// Samples a continuous history at `t = -k h` for `k = tau..=0`.
    pub fn sample(history: &InitialHistory, tau: usize, h: f64) -> Result<Self> {
        if !history.covers(tau as f64 * h) {
            return Err(FlockError::Validation(format!(
                "history does not reach back {} time units",
                tau as f64 * h
            )));
        }
        let (n, d) = (history.agents(), history.dim());
        let mut xs = Vec::with_capacity(tau + 1);
        let mut vs = Vec::with_capacity(tau + 1);
        for k in (0..=tau).rev() {
            let mut x = vec![0.0; n * d];
            let mut v = vec![0.0; n * d];
            for i in 0..n {
                history.state(
                    i,
                    -(k as f64) * h,
                    &mut x[i * d..(i + 1) * d],
                    &mut v[i * d..(i + 1) * d],
                )?;
            }
            xs.push(x);
            vs.push(v);
        }
        Self::from_steps(xs, vs, n)
    }

    pub fn depth(&self) -> usize {
        self.x.len() - 1
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Velocity diameter over the last `tau + 1` snapshots.
    pub fn window_diameter(&self, tau: usize) -> f64 {
        let first = self.v.len().saturating_sub(tau + 1);
        spread(&self.v[first..], self.d)
    }

    /// `max ||x_i[0] - x_j[s]||` over arcs `j -> i` and `s in {-tau..=0}`.
    pub fn delayed_position_spread(&self, net: &Network, tau: usize) -> f64 {
        let d = self.d;
        let x0 = self.x.last().unwrap();
        let first = self.x.len().saturating_sub(tau + 1);
        let mut spread: f64 = 0.0;
        for (j, i) in net.graph.arcs() {
            for xs in &self.x[first..] {
                let dist = (0..d)
                    .map(|c| (x0[i * d + c] - xs[j * d + c]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                spread = spread.max(dist);
            }
        }
        spread
    }
}

fn spread(snapshots: &[Vec<f64>], d: usize) -> f64 {
    (0..d)
        .map(|c| {
            let vals = snapshots.iter().flat_map(|s| s.iter().skip(c).step_by(d));
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Network, step size and the integer delay bound, validated against the
/// stability gate `0 < kappa h < 1 / n_inf`.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    net: Network,
    h: f64,
    tau: usize,
    in_theory: bool,
}

impl DiscreteSystem {
    pub fn new(net: Network, h: f64) -> Result<Self> {
        Self::build(net, h, false)
    }

    /// Skips the stability gate. Runs built this way are outside every
    /// discrete guarantee and are labeled as such.
    pub fn new_unsafe(net: Network, h: f64) -> Result<Self> {
        Self::build(net, h, true)
    }

    fn build(net: Network, h: f64, unsafe_h: bool) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(FlockError::InvalidParameter(format!(
                "step size must be positive, got {h}"
            )));
        }
        net.delay.ensure_integer_valued()?;
        let tau = net.delay.integer_tau()?;
        let in_theory = gate(net.weight.kappa(), h, net.metrics().n_infinity).is_ok();
        if !unsafe_h {
            gate(net.weight.kappa(), h, net.metrics().n_infinity)?;
        }
        Ok(Self {
            net,
            h,
            tau,
            in_theory,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    /// False when built with [`DiscreteSystem::new_unsafe`] and the gate
    /// fails.
    pub fn in_theory(&self) -> bool {
        self.in_theory
    }

    /// Advances `state` by one step.
    pub fn step(&self, state: &mut DiscreteState) -> Result<()> {
        let n = self.net.agents();
        let d = state.d;
        let t = state.t;
        let (xn, vn) = state.buffer.back().unwrap();
        let mut x_next = xn.clone();
        let mut v_next = vn.clone();
        let mut xj = vec![0.0; d];
        let mut vj = vec![0.0; d];
        for i in 0..n {
            let xi = &xn[i * d..(i + 1) * d];
            let vi = &vn[i * d..(i + 1) * d];
            for c in 0..d {
                x_next[i * d + c] += self.h * vi[c];
            }
            for j in 0..n {
                if !self.net.graph.chi(i, j) {
                    continue;
                }
                let lag = self.net.delay.eval_integer(i, j, t)?;
                state.delayed(j, lag, &mut xj, &mut vj)?;
                let dist = xj
                    .iter()
                    .zip(xi)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let w = self.h * self.net.weight.value(dist);
                for c in 0..d {
                    v_next[i * d + c] += w * (vj[c] - vi[c]);
                }
            }
        }
        state.push(x_next, v_next);
        Ok(())
    }
}

fn gate(kappa: f64, h: f64, n_inf: usize) -> Result<()> {
    let kh = kappa * h;
    let limit = if n_inf == 0 {
        f64::INFINITY
    } else {
        1.0 / n_inf as f64
    };
    if kh > 0.0 && kh < limit {
        Ok(())
    } else {
        Err(FlockError::StabilityGate { kappa_h: kh, limit })
    }
}

/// Current step index plus a ring buffer of the last `tau + 1` snapshots.
#[derive(Debug, Clone)]
pub struct DiscreteState {
    t: u64,
    d: usize,
    buffer: VecDeque<(Vec<f64>, Vec<f64>)>,
}

impl DiscreteState {
    pub fn new(history: &DiscreteHistory, tau: usize) -> Result<Self> {
        if history.depth() < tau {
            return Err(FlockError::Validation(format!(
                "history covers {} steps, delay bound is {tau}",
                history.depth()
            )));
        }
        let skip = history.depth() - tau;
        let buffer = history.x[skip..]
            .iter()
            .cloned()
            .zip(history.v[skip..].iter().cloned())
            .collect();
        Ok(Self {
            t: 0,
            d: history.d,
            buffer,
        })
    }

    pub fn step_index(&self) -> u64 {
        self.t
    }

    pub fn positions(&self) -> &[f64] {
        &self.buffer.back().unwrap().0
    }

    pub fn velocities(&self) -> &[f64] {
        &self.buffer.back().unwrap().1
    }

    fn delayed(&self, agent: usize, lag: usize, x: &mut [f64], v: &mut [f64]) -> Result<()> {
        let len = self.buffer.len();
        if lag >= len {
            return Err(FlockError::LookupOutOfRange {
                t: self.t as f64 - lag as f64,
                start: self.t as f64 - (len - 1) as f64,
                end: self.t as f64,
            });
        }
        let (xs, vs) = &self.buffer[len - 1 - lag];
        let d = self.d;
        x.copy_from_slice(&xs[agent * d..(agent + 1) * d]);
        v.copy_from_slice(&vs[agent * d..(agent + 1) * d]);
        Ok(())
    }

    fn push(&mut self, x: Vec<f64>, v: Vec<f64>) {
        self.buffer.pop_front();
        self.buffer.push_back((x, v));
        self.t += 1;
    }
}

/// Full path on steps `-tau..=t_end`.
#[derive(Debug, Clone)]
pub struct DiscreteTrajectory {
    n: usize,
    d: usize,
    tau: usize,
    h: f64,
    in_theory: bool,
    /// Snapshot `m` holds step `m - tau`.
    x: Vec<f64>,
    v: Vec<f64>,
    hull_excursion: f64,
    convexity_excursion: f64,
}

/// Runs `t_end` steps from `history`.
pub fn simulate_discrete(
    sys: &DiscreteSystem,
    history: &DiscreteHistory,
    t_end: u64,
) -> Result<DiscreteTrajectory> {
    let n = sys.net.agents();
    if history.agents() != n {
        return Err(FlockError::Validation(format!(
            "initial data has {} agents, graph has {n}",
            history.agents()
        )));
    }
    let tau = sys.tau;
    let d = history.d;
    let mut state = DiscreteState::new(history, tau)?;
    let stride = n * d;
    let steps = t_end as usize;
    let mut traj = DiscreteTrajectory {
        n,
        d,
        tau,
        h: sys.h,
        in_theory: sys.in_theory,
        x: Vec::with_capacity((tau + 1 + steps) * stride),
        v: Vec::with_capacity((tau + 1 + steps) * stride),
        hull_excursion: 0.0,
        convexity_excursion: 0.0,
    };
    for (x, v) in &state.buffer {
        traj.x.extend_from_slice(x);
        traj.v.extend_from_slice(v);
    }
    let (hull_max, hull_min) = traj.window_extrema(tau);
    for _ in 0..steps {
        let (win_max, win_min) = traj.window_extrema(traj.snapshots() - 1);
        sys.step(&mut state)?;
        let v = state.velocities();
        for (q, &val) in v.iter().enumerate() {
            if !val.is_finite() {
                return Err(FlockError::Divergence {
                    t: state.t as f64,
                    magnitude: val.abs(),
                    limit: f64::MAX,
                });
            }
            let c = q % d;
            traj.hull_excursion = traj
                .hull_excursion
                .max(val - hull_max[c])
                .max(hull_min[c] - val);
            traj.convexity_excursion = traj
                .convexity_excursion
                .max(val - win_max[c])
                .max(win_min[c] - val);
        }
        traj.x.extend_from_slice(state.positions());
        traj.v.extend_from_slice(v);
    }
    Ok(traj)
}

impl DiscreteTrajectory {
    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn in_theory(&self) -> bool {
        self.in_theory
    }

    fn snapshots(&self) -> usize {
        self.x.len() / (self.n * self.d)
    }

    /// Last step index.
    pub fn t_end(&self) -> u64 {
        (self.snapshots() - 1 - self.tau) as u64
    }

    /// Positions at step `t` (`t >= -tau`).
    pub fn positions(&self, t: i64) -> &[f64] {
        let s = self.n * self.d;
        let m = (t + self.tau as i64) as usize;
        &self.x[m * s..(m + 1) * s]
    }

    pub fn velocities(&self, t: i64) -> &[f64] {
        let s = self.n * self.d;
        let m = (t + self.tau as i64) as usize;
        &self.v[m * s..(m + 1) * s]
    }

    /// Largest excursion of any velocity component outside the step-0
    /// window hull.
    pub fn hull_excursion(&self) -> f64 {
        self.hull_excursion
    }

    /// Largest excursion of `v_i[t+1]` outside the window hull at step `t`.
    pub fn convexity_excursion(&self) -> f64 {
        self.convexity_excursion
    }

    /// `D[t]` for a step `t` in `0..=t_end`.
    pub fn window_diameter_at(&self, t: u64) -> f64 {
        let (hi, lo) = self.window_extrema(t as usize + self.tau);
        hi.iter().zip(&lo).map(|(a, b)| a - b).fold(0.0, f64::max)
    }

    // (max, min) over agents and snapshots m - tau ..= m
    fn window_extrema(&self, m: usize) -> (Vec<f64>, Vec<f64>) {
        let (n, d) = (self.n, self.d);
        let mut vmax = vec![f64::NEG_INFINITY; d];
        let mut vmin = vec![f64::INFINITY; d];
        for snap in m.saturating_sub(self.tau)..=m {
            let base = snap * n * d;
            for q in 0..n * d {
                let c = q % d;
                vmax[c] = vmax[c].max(self.v[base + q]);
                vmin[c] = vmin[c].min(self.v[base + q]);
            }
        }
        (vmax, vmin)
    }

    /// Windowed diameters on steps `0..=t_end`; series times are step
    /// indices.
    pub fn diameters(&self, x0: f64) -> DiameterSeries {
        let mut times = Vec::new();
        let mut vmax_rows = Vec::new();
        let mut vmin_rows = Vec::new();
        for m in self.tau..self.snapshots() {
            let (hi, lo) = self.window_extrema(m);
            times.push((m - self.tau) as f64);
            vmax_rows.push(hi);
            vmin_rows.push(lo);
        }
        DiameterSeries::from_extrema(times, vmax_rows, vmin_rows, x0)
    }

    /// Largest distance between agents `i` and `j` over steps `0..=t_end`.
    pub fn max_pair_distance(&self, i: usize, j: usize) -> f64 {
        let d = self.d;
        (0..=self.t_end() as i64)
            .map(|t| {
                let x = self.positions(t);
                (0..d)
                    .map(|c| (x[i * d + c] - x[j * d + c]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn final_mean_velocity(&self) -> Vec<f64> {
        let (n, d) = (self.n, self.d);
        let v = self.velocities(self.t_end() as i64);
        (0..d)
            .map(|c| (0..n).map(|i| v[i * d + c]).sum::<f64>() / n as f64)
            .collect()
    }

    /// Same schema as the continuous export. The time column holds step
    /// indices, or `step * h` with `physical_time`.
    pub fn write_csv<W: Write>(&self, out: W, physical_time: bool) -> Result<()> {
        let scale = if physical_time { self.h } else { 1.0 };
        let times: Vec<f64> = (0..self.snapshots())
            .map(|m| (m as f64 - self.tau as f64) * scale)
            .collect();
        write_state_csv(out, self.n, self.d, &times, &self.x, &self.v, "discrete")
    }
}
