//! Continuous delayed Cucker-Smale system integrated by classical RK4 with
//! method-of-steps history lookups.
//!
//! Every delayed state `x_j(t - tau_ij(t))`, `v_j(t - tau_ij(t))` is read from
//! already committed output: the initial history for arguments in
//! `[-tau, 0]`, cubic Hermite dense output on committed steps otherwise.
//! When a delay is shorter than the current stage offset the last committed
//! segment is extrapolated. A zero delay reads the current stage state, so
//! the undelayed system reduces to plain RK4.

pub mod hermite;
pub mod history;

use std::io::Write;

pub use history::InitialHistory;

use crate::diameter::DiameterSeries;
use crate::error::{FlockError, Result};
use crate::network::Network;

/// Multiple of the initial velocity scale beyond which a run is declared
/// divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Access to delayed agent states during integration.
pub trait DelayedLookup {
    /// Position and velocity of `agent` at time `s`.
    fn state_at(&self, agent: usize, s: f64, x: &mut [f64], v: &mut [f64]) -> Result<()>;
}

/// Velocity derivatives of every agent at time `t` for the current state
/// `(x, v)`; delayed neighbour states come from `lookup`. Position
/// derivatives are `v` itself.
pub fn rhs(
    t: f64,
    x: &[f64],
    v: &[f64],
    lookup: &impl DelayedLookup,
    net: &Network,
    accel: &mut [f64],
) -> Result<()> {
    let n = net.agents();
    let d = x.len() / n;
    let mut xj = vec![0.0; d];
    let mut vj = vec![0.0; d];
    accel.fill(0.0);
    for i in 0..n {
        let xi = &x[i * d..(i + 1) * d];
        let vi = &v[i * d..(i + 1) * d];
        for j in 0..n {
            if !net.graph.chi(i, j) {
                continue;
            }
            let lag = net.delay.eval(i, j, t);
            if lag == 0.0 {
                xj.copy_from_slice(&x[j * d..(j + 1) * d]);
                vj.copy_from_slice(&v[j * d..(j + 1) * d]);
            } else {
                lookup.state_at(j, t - lag, &mut xj, &mut vj)?;
            }
            let dist = xj
                .iter()
                .zip(xi)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let w = net.weight.value(dist);
            for c in 0..d {
                accel[i * d + c] += w * (vj[c] - vi[c]);
            }
        }
    }
    Ok(())
}

/// Sampled solution on `[-tau, t_end]`: the initial history followed by
/// RK4 knots with stored velocities and accelerations for Hermite output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    n: usize,
    d: usize,
    tau: f64,
    history: InitialHistory,
    times: Vec<f64>,
    x: Vec<f64>,
    v: Vec<f64>,
    a: Vec<f64>,
    hull_excursion: f64,
}

impl Trajectory {
    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn history(&self) -> &InitialHistory {
        &self.history
    }

    /// Knot times, starting at 0.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn positions(&self, knot: usize) -> &[f64] {
        let s = self.n * self.d;
        &self.x[knot * s..(knot + 1) * s]
    }

    pub fn velocities(&self, knot: usize) -> &[f64] {
        let s = self.n * self.d;
        &self.v[knot * s..(knot + 1) * s]
    }

    /// Largest distance by which any velocity component left the initial
    /// window hull `[v_min^k(0), v_max^k(0)]` at a knot.
    pub fn hull_excursion(&self) -> f64 {
        self.hull_excursion
    }

    /// State of `agent` at any `s` in `[-tau, t_end]`.
    pub fn state(&self, agent: usize, s: f64, x: &mut [f64], v: &mut [f64]) -> Result<()> {
        if s > self.t_end() * (1.0 + 1e-12) + 1e-12 || s < -self.tau - 1e-12 {
            return Err(FlockError::LookupOutOfRange {
                t: s,
                start: -self.tau,
                end: self.t_end(),
            });
        }
        self.lookup(agent, s.min(self.t_end()), x, v)
    }

    // Committed-history lookup; past the last knot the final segment is
    // extrapolated (or a first-order Taylor step with a single knot).
    fn lookup(&self, agent: usize, s: f64, x: &mut [f64], v: &mut [f64]) -> Result<()> {
        if s <= 0.0 {
            return self.history.state(agent, s, x, v);
        }
        let (n, d) = (self.n, self.d);
        let knots = self.times.len();
        let stride = n * d;
        let off = agent * d;
        if knots == 1 {
            let dt = s - self.times[0];
            for c in 0..d {
                x[c] = self.x[off + c] + dt * self.v[off + c];
                v[c] = self.v[off + c] + dt * self.a[off + c];
            }
            return Ok(());
        }
        let k = self
            .times
            .partition_point(|&t| t <= s)
            .saturating_sub(1)
            .min(knots - 2);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let theta = (s - t0) / h;
        let (p0, p1) = (k * stride + off, (k + 1) * stride + off);
        for c in 0..d {
            x[c] = hermite::eval(
                self.x[p0 + c],
                self.x[p1 + c],
                self.v[p0 + c],
                self.v[p1 + c],
                h,
                theta,
            );
            v[c] = hermite::eval(
                self.v[p0 + c],
                self.v[p1 + c],
                self.a[p0 + c],
                self.a[p1 + c],
                h,
                theta,
            );
        }
        Ok(())
    }

    /// Per-component `(max, min)` of all agents' velocities over `[lo, hi]`.
    pub fn velocity_extrema(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.d;
        let mut vmax = vec![f64::NEG_INFINITY; d];
        let mut vmin = vec![f64::INFINITY; d];
        if lo < 0.0 {
            let (hmax, hmin) = self.history.velocity_extrema(lo, hi.min(0.0));
            merge(&mut vmax, &mut vmin, &hmax, &hmin);
        }
        if hi > 0.0 {
            let lo = lo.max(0.0);
            let first = self.times.partition_point(|&t| t <= lo).saturating_sub(1);
            for k in first..self.times.len() - 1 {
                let (t0, t1) = (self.times[k], self.times[k + 1]);
                if t0 >= hi {
                    break;
                }
                let h = t1 - t0;
                let a = ((lo - t0) / h).max(0.0);
                let b = ((hi - t0) / h).min(1.0);
                self.segment_extrema(k, a, b, &mut vmax, &mut vmin);
            }
        }
        (vmax, vmin)
    }

    fn segment_extrema(&self, k: usize, a: f64, b: f64, vmax: &mut [f64], vmin: &mut [f64]) {
        let (n, d) = (self.n, self.d);
        let stride = n * d;
        let h = self.times[k + 1] - self.times[k];
        for i in 0..n {
            for c in 0..d {
                let p0 = k * stride + i * d + c;
                let p1 = p0 + stride;
                let (lo, hi) = hermite::extrema(self.v[p0], self.v[p1], self.a[p0], self.a[p1], h, a, b);
                vmax[c] = vmax[c].max(hi);
                vmin[c] = vmin[c].min(lo);
            }
        }
    }

    /// `D(t)` at an arbitrary time in `[0, t_end]`.
    pub fn diameter_at(&self, t: f64) -> f64 {
        let (vmax, vmin) = self.velocity_extrema(t - self.tau, t);
        vmax.iter().zip(&vmin).map(|(a, b)| a - b).fold(0.0, f64::max)
    }

    /// Windowed extrema and diameters on every knot.
    pub fn diameters(&self, x0: f64) -> DiameterSeries {
        let (n, d) = (self.n, self.d);
        let segments = self.times.len() - 1;
        // agent-aggregated extrema of each full segment
        let mut seg_max = vec![f64::NEG_INFINITY; segments * d];
        let mut seg_min = vec![f64::INFINITY; segments * d];
        for k in 0..segments {
            self.segment_extrema(
                k,
                0.0,
                1.0,
                &mut seg_max[k * d..(k + 1) * d],
                &mut seg_min[k * d..(k + 1) * d],
            );
        }
        let _ = n;
        let mut vmax_rows = Vec::with_capacity(self.times.len());
        let mut vmin_rows = Vec::with_capacity(self.times.len());
        for (m, &t) in self.times.iter().enumerate() {
            let lo = t - self.tau;
            let mut vmax = vec![f64::NEG_INFINITY; d];
            let mut vmin = vec![f64::INFINITY; d];
            if lo < 0.0 {
                let (hmax, hmin) = self.history.velocity_extrema(lo, 0.0);
                merge(&mut vmax, &mut vmin, &hmax, &hmin);
            }
            // the knot itself (covers m = 0 and tau = 0)
            let vel = self.velocities(m);
            for i in 0..n {
                for c in 0..d {
                    vmax[c] = vmax[c].max(vel[i * d + c]);
                    vmin[c] = vmin[c].min(vel[i * d + c]);
                }
            }
            let mut k = m;
            while k > 0 {
                k -= 1;
                let (t0, t1) = (self.times[k], self.times[k + 1]);
                if t1 <= lo {
                    break;
                }
                if t0 >= lo {
                    merge(
                        &mut vmax,
                        &mut vmin,
                        &seg_max[k * d..(k + 1) * d],
                        &seg_min[k * d..(k + 1) * d],
                    );
                } else {
                    let a = (lo - t0) / (t1 - t0);
                    self.segment_extrema(k, a, 1.0, &mut vmax, &mut vmin);
                    break;
                }
            }
            vmax_rows.push(vmax);
            vmin_rows.push(vmin);
        }
        DiameterSeries::from_extrema(self.times.clone(), vmax_rows, vmin_rows, x0)
    }

    /// Largest distance between agents `i` and `j` over all knots.
    pub fn max_pair_distance(&self, i: usize, j: usize) -> f64 {
        let d = self.d;
        (0..self.times.len())
            .map(|m| {
                let x = self.positions(m);
                (0..d)
                    .map(|c| (x[i * d + c] - x[j * d + c]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Mean velocity at the final knot.
    pub fn final_mean_velocity(&self) -> Vec<f64> {
        let (n, d) = (self.n, self.d);
        let v = self.velocities(self.times.len() - 1);
        (0..d)
            .map(|c| (0..n).map(|i| v[i * d + c]).sum::<f64>() / n as f64)
            .collect()
    }

    /// CSV with columns `t, agent, x1..xd, v1..vd` (agents 1-based).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_state_csv(out, self.n, self.d, &self.times, &self.x, &self.v, "trajectory")
    }
}

impl DelayedLookup for Trajectory {
    fn state_at(&self, agent: usize, s: f64, x: &mut [f64], v: &mut [f64]) -> Result<()> {
        if s < -self.tau - 1e-12 {
            return Err(FlockError::LookupOutOfRange {
                t: s,
                start: -self.tau,
                end: self.t_end(),
            });
        }
        self.lookup(agent, s, x, v)
    }
}

pub(crate) fn write_state_csv<W: Write>(
    mut out: W,
    n: usize,
    d: usize,
    times: &[f64],
    x: &[f64],
    v: &[f64],
    label: &str,
) -> Result<()> {
    writeln!(out, "# delayflock {label} v1")?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "agent".to_string()];
    header.extend((1..=d).map(|k| format!("x{k}")));
    header.extend((1..=d).map(|k| format!("v{k}")));
    w.write_record(&header)?;
    let stride = n * d;
    for (m, &t) in times.iter().enumerate() {
        for i in 0..n {
            let mut row = vec![fmt_f64(t), (i + 1).to_string()];
            let base = m * stride + i * d;
            row.extend(x[base..base + d].iter().map(|&c| fmt_f64(c)));
            row.extend(v[base..base + d].iter().map(|&c| fmt_f64(c)));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn merge(vmax: &mut [f64], vmin: &mut [f64], hi: &[f64], lo: &[f64]) {
    for c in 0..vmax.len() {
        vmax[c] = vmax[c].max(hi[c]);
        vmin[c] = vmin[c].min(lo[c]);
    }
}

/// Integrates the delayed system on `[0, t_end]` with fixed step `dt`
/// (the final step is shortened to land on `t_end`).
pub fn integrate(net: &Network, history: &InitialHistory, t_end: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(FlockError::InvalidParameter(format!(
            "step size must be positive, got {dt}"
        )));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(FlockError::InvalidParameter(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let n = net.agents();
    if history.agents() != n {
        return Err(FlockError::Validation(format!(
            "initial data has {} agents, graph has {n}",
            history.agents()
        )));
    }
    let tau = net.delay.tau();
    if !history.covers(tau) {
        return Err(FlockError::Validation(format!(
            "initial history starts at {}, needs to cover [-{tau}, 0]",
            history.start()
        )));
    }
    let d = history.dim();
    let stride = n * d;

    let (hull_max, hull_min) = history.velocity_extrema(-tau, 0.0);
    let scale = hull_max
        .iter()
        .chain(&hull_min)
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let guard = DIVERGENCE_FACTOR * scale;

    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let (x0, v0) = history.at_zero();
    let mut traj = Trajectory {
        n,
        d,
        tau,
        history: history.clone(),
        times: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity((steps + 1) * stride),
        v: Vec::with_capacity((steps + 1) * stride),
        a: Vec::with_capacity((steps + 1) * stride),
        hull_excursion: 0.0,
    };
    let mut a0 = vec![0.0; stride];
    // at t = 0 every delayed argument lies in the history
    rhs(0.0, &x0, &v0, &traj, net, &mut a0)?;
    traj.times.push(0.0);
    traj.x.extend_from_slice(&x0);
    traj.v.extend_from_slice(&v0);
    traj.a.extend_from_slice(&a0);

    let mut xs = vec![0.0; stride];
    let mut vs = vec![0.0; stride];
    let mut k2 = vec![0.0; stride];
    let mut k3 = vec![0.0; stride];
    let mut k4 = vec![0.0; stride];
    let mut v2 = vec![0.0; stride];
    let mut v3 = vec![0.0; stride];
    let mut v4 = vec![0.0; stride];
    let mut x_next = vec![0.0; stride];
    let mut v_next = vec![0.0; stride];
    let mut a_next = vec![0.0; stride];

    for step in 0..steps {
        let t = traj.times[step];
        let t1 = if step + 1 == steps {
            t_end
        } else {
            (step + 1) as f64 * dt
        };
        let h = t1 - t;
        let base = step * stride;
        let (xn, vn, an) = (
            traj.x[base..base + stride].to_vec(),
            traj.v[base..base + stride].to_vec(),
            traj.a[base..base + stride].to_vec(),
        );

        // stage 2
        for q in 0..stride {
            xs[q] = xn[q] + 0.5 * h * vn[q];
            vs[q] = vn[q] + 0.5 * h * an[q];
        }
        v2.copy_from_slice(&vs);
        rhs(t + 0.5 * h, &xs, &vs, &traj, net, &mut k2)?;
        // stage 3
        for q in 0..stride {
            xs[q] = xn[q] + 0.5 * h * v2[q];
            vs[q] = vn[q] + 0.5 * h * k2[q];
        }
        v3.copy_from_slice(&vs);
        rhs(t + 0.5 * h, &xs, &vs, &traj, net, &mut k3)?;
        // stage 4
        for q in 0..stride {
            xs[q] = xn[q] + h * v3[q];
            vs[q] = vn[q] + h * k3[q];
        }
        v4.copy_from_slice(&vs);
        rhs(t1, &xs, &vs, &traj, net, &mut k4)?;

        for q in 0..stride {
            x_next[q] = xn[q] + h / 6.0 * (vn[q] + 2.0 * v2[q] + 2.0 * v3[q] + v4[q]);
            v_next[q] = vn[q] + h / 6.0 * (an[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        }

        for (q, &val) in v_next.iter().enumerate() {
            if !val.is_finite() || val.abs() > guard {
                return Err(FlockError::Divergence {
                    t: t1,
                    magnitude: val.abs(),
                    limit: guard,
                });
            }
            let c = q % d;
            let excursion = (val - hull_max[c]).max(hull_min[c] - val);
            traj.hull_excursion = traj.hull_excursion.max(excursion);
        }

        rhs(t1, &x_next, &v_next, &traj, net, &mut a_next)?;
        traj.times.push(t1);
        traj.x.extend_from_slice(&x_next);
        traj.v.extend_from_slice(&v_next);
        traj.a.extend_from_slice(&a_next);
    }
    Ok(traj)
}
