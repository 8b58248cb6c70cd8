//! Initial data on `[-tau, 0]`.

use crate::digraph::Digraph;
use crate::error::{FlockError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Constant {
        x: Vec<f64>,
        v: Vec<f64>,
    },
    /// Piecewise-linear between sample times; last sample at `t = 0`.
    Tabulated {
        times: Vec<f64>,
        x: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
    },
}

/// Per-agent positions and velocities on `[-tau, 0]`. States are stored
/// flat, agent-major: component `k` of agent `i` sits at `i * d + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialHistory {
    n: usize,
    d: usize,
    kind: Kind,
}

fn flatten(rows: &[Vec<f64>], n: usize, d: usize, what: &str) -> Result<Vec<f64>> {
    if rows.len() != n {
        return Err(FlockError::Validation(format!(
            "{what}: expected {n} rows, got {}",
            rows.len()
        )));
    }
    let mut out = Vec::with_capacity(n * d);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(FlockError::Validation(format!(
                "{what}: row {} has {} components, expected {d}",
                i + 1,
                row.len()
            )));
        }
        if row.iter().any(|c| !c.is_finite()) {
            return Err(FlockError::Validation(format!(
                "{what}: row {} is not finite",
                i + 1
            )));
        }
        out.extend_from_slice(row);
    }
    Ok(out)
}

impl InitialHistory {
    /// Time-independent history from `n` rows of `d` components each.
    pub fn constant(positions: &[Vec<f64>], velocities: &[Vec<f64>]) -> Result<Self> {
        let n = positions.len();
        if n == 0 {
            return Err(FlockError::Validation("no agents in initial data".into()));
        }
        let d = positions[0].len();
        if d == 0 {
            return Err(FlockError::Validation("zero-dimensional state".into()));
        }
        Ok(Self {
            n,
            d,
            kind: Kind::Constant {
                x: flatten(positions, n, d, "positions")?,
                v: flatten(velocities, n, d, "velocities")?,
            },
        })
    }

    pub fn constant_flat(n: usize, d: usize, x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 || x.len() != n * d || v.len() != n * d {
            return Err(FlockError::Validation(
                "flat initial state has the wrong length".into(),
            ));
        }
        Ok(Self {
            n,
            d,
            kind: Kind::Constant { x, v },
        })
    }

    /// Sampled history: `positions[s]` and `velocities[s]` are the `n x d`
    /// tables at `times[s]`. Times must increase strictly and end at 0.
    pub fn tabulated(
        times: Vec<f64>,
        positions: &[Vec<Vec<f64>>],
        velocities: &[Vec<Vec<f64>>],
    ) -> Result<Self> {
        if times.is_empty() || positions.len() != times.len() || velocities.len() != times.len() {
            return Err(FlockError::Validation(
                "history table needs one position and velocity table per sample time".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FlockError::Validation(
                "history sample times must increase strictly".into(),
            ));
        }
        if *times.last().unwrap() != 0.0 {
            return Err(FlockError::Validation(
                "history table must end at t = 0".into(),
            ));
        }
        let n = positions[0].len();
        let d = positions[0].first().map_or(0, Vec::len);
        if n == 0 || d == 0 {
            return Err(FlockError::Validation("empty history table".into()));
        }
        let mut x = Vec::with_capacity(times.len());
        let mut v = Vec::with_capacity(times.len());
        for (s, t) in times.iter().enumerate() {
            x.push(flatten(&positions[s], n, d, &format!("positions at t = {t}"))?);
            v.push(flatten(&velocities[s], n, d, &format!("velocities at t = {t}"))?);
        }
        Ok(Self {
            n,
            d,
            kind: Kind::Tabulated { times, x, v },
        })
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Earliest time at which the history is defined.
    pub fn start(&self) -> f64 {
        match &self.kind {
            Kind::Constant { .. } => f64::NEG_INFINITY,
            Kind::Tabulated { times, .. } => times[0],
        }
    }

    pub fn covers(&self, tau: f64) -> bool {
        self.start() <= -tau
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant { .. })
    }

    /// Flat `(x, v)` at `t = 0`.
    pub fn at_zero(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.kind {
            Kind::Constant { x, v } => (x.clone(), v.clone()),
            Kind::Tabulated { x, v, .. } => (x.last().unwrap().clone(), v.last().unwrap().clone()),
        }
    }

    /// Position and velocity of `agent` at `s <= 0`.
    pub fn state(&self, agent: usize, s: f64, x_out: &mut [f64], v_out: &mut [f64]) -> Result<()> {
        let d = self.d;
        let range = agent * d..(agent + 1) * d;
        match &self.kind {
            Kind::Constant { x, v } => {
                x_out.copy_from_slice(&x[range.clone()]);
                v_out.copy_from_slice(&v[range]);
            }
            Kind::Tabulated { times, x, v } => {
                if s < times[0] || s > 0.0 {
                    return Err(FlockError::LookupOutOfRange {
                        t: s,
                        start: times[0],
                        end: 0.0,
                    });
                }
                let (k, w) = bracket(times, s);
                let k1 = (k + 1).min(times.len() - 1);
                for c in 0..d {
                    let idx = range.start + c;
                    x_out[c] = lerp(x[k][idx], x[k1][idx], w);
                    v_out[c] = lerp(v[k][idx], v[k1][idx], w);
                }
            }
        }
        Ok(())
    }

    /// Per-component `(max, min)` of the velocities of all agents over
    /// `s in [lo, hi]`, with `hi <= 0`.
    pub fn velocity_extrema(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let (n, d) = (self.n, self.d);
        let mut vmax = vec![f64::NEG_INFINITY; d];
        let mut vmin = vec![f64::INFINITY; d];
        let mut absorb = |v: &[f64]| {
            for i in 0..n {
                for c in 0..d {
                    let val = v[i * d + c];
                    vmax[c] = vmax[c].max(val);
                    vmin[c] = vmin[c].min(val);
                }
            }
        };
        match &self.kind {
            Kind::Constant { v, .. } => absorb(v),
            Kind::Tabulated { times, v, .. } => {
                let lo = lo.max(times[0]);
                let hi = hi.min(0.0);
                for s in [lo, hi] {
                    absorb(&self.velocities_at(s));
                }
                for (k, &t) in times.iter().enumerate() {
                    if t > lo && t < hi {
                        absorb(&v[k]);
                    }
                }
            }
        }
        (vmax, vmin)
    }

    fn velocities_at(&self, s: f64) -> Vec<f64> {
        match &self.kind {
            Kind::Constant { v, .. } => v.clone(),
            Kind::Tabulated { times, v, .. } => {
                let (k, w) = bracket(times, s);
                let k1 = (k + 1).min(times.len() - 1);
                v[k].iter().zip(&v[k1]).map(|(a, b)| lerp(*a, *b, w)).collect()
            }
        }
    }

    fn positions_at(&self, s: f64) -> Vec<f64> {
        match &self.kind {
            Kind::Constant { x, .. } => x.clone(),
            Kind::Tabulated { times, x, .. } => {
                let (k, w) = bracket(times, s);
                let k1 = (k + 1).min(times.len() - 1);
                x[k].iter().zip(&x[k1]).map(|(a, b)| lerp(*a, *b, w)).collect()
            }
        }
    }

    /// `max ||x_i(0) - x_j(s)||` over arcs `j -> i` and `s in [-tau, 0]`.
    /// Along each linear piece the distance is convex in `s`, so knots and
    /// window ends suffice.
    pub fn delayed_position_spread(&self, graph: &Digraph, tau: f64) -> f64 {
        let d = self.d;
        let (x0, _) = self.at_zero();
        let mut samples = vec![self.positions_at(-tau), x0.clone()];
        if let Kind::Tabulated { times, x, .. } = &self.kind {
            for (k, &t) in times.iter().enumerate() {
                if t > -tau && t < 0.0 {
                    samples.push(x[k].clone());
                }
            }
        }
        let mut spread: f64 = 0.0;
        for (j, i) in graph.arcs() {
            for xs in &samples {
                let dist = (0..d)
                    .map(|c| (x0[i * d + c] - xs[j * d + c]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                spread = spread.max(dist);
            }
        }
        spread
    }

    /// Same history with `f` applied to every velocity component and `g`
    /// applied to positions as a function of `(s, component value)`.
    pub fn map(&self, fv: impl Fn(usize, f64) -> f64, fx: impl Fn(usize, f64, f64) -> f64) -> Self {
        let d = self.d;
        let map_v = |v: &[f64]| v.iter().enumerate().map(|(k, &c)| fv(k % d, c)).collect();
        let map_x = |s: f64, x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(k, &c)| fx(k % d, s, c))
                .collect()
        };
        let kind = match &self.kind {
            Kind::Constant { x, v } => Kind::Constant {
                x: map_x(0.0, x),
                v: map_v(v),
            },
            Kind::Tabulated { times, x, v } => Kind::Tabulated {
                times: times.clone(),
                x: times.iter().zip(x).map(|(&s, xs)| map_x(s, xs)).collect(),
                v: v.iter().map(|vs| map_v(vs)).collect(),
            },
        };
        Self {
            n: self.n,
            d,
            kind,
        }
    }

    /// Relabels agents (agent `a` becomes `perm[a]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let d = self.d;
        let apply = |flat: &[f64]| {
            let mut out = vec![0.0; flat.len()];
            for (a, &p) in perm.iter().enumerate() {
                out[p * d..(p + 1) * d].copy_from_slice(&flat[a * d..(a + 1) * d]);
            }
            out
        };
        let kind = match &self.kind {
            Kind::Constant { x, v } => Kind::Constant {
                x: apply(x),
                v: apply(v),
            },
            Kind::Tabulated { times, x, v } => Kind::Tabulated {
                times: times.clone(),
                x: x.iter().map(|f| apply(f)).collect(),
                v: v.iter().map(|f| apply(f)).collect(),
            },
        };
        Self {
            n: self.n,
            d,
            kind,
        }
    }
}

// Index k and weight w with s between times[k] and times[k + 1].
fn bracket(times: &[f64], s: f64) -> (usize, f64) {
    if times.len() == 1 || s <= times[0] {
        return (0, 0.0);
    }
    let k = times.partition_point(|&t| t <= s).saturating_sub(1);
    if k + 1 >= times.len() {
        return (times.len() - 1, 0.0);
    }
    (k, (s - times[k]) / (times[k + 1] - times[k]))
}

#[inline]
fn lerp(a: f64, b: f64, w: f64) -> f64 {
    a + (b - a) * w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure_positions() -> Vec<Vec<f64>> {
        vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
        ]
    }

    #[test]
    fn spread_on_figure1_digraph() {
        let g = Digraph::from_labeled_arcs(4, &[(1, 2), (2, 3), (3, 1), (3, 4)]).unwrap();
        let v = vec![vec![0.0; 2]; 4];
        let h = InitialHistory::constant(&figure_positions(), &v).unwrap();
        assert!((h.delayed_position_spread(&g, 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut v = vec![vec![0.0; 2]; 3];
        assert!(InitialHistory::constant(&figure_positions(), &v).is_err());
        v.push(vec![1.0]);
        assert!(InitialHistory::constant(&figure_positions(), &v).is_err());
    }

    #[test]
    fn tabulated_interpolates_linearly() {
        let x = vec![vec![vec![0.0]], vec![vec![2.0]]];
        let v = vec![vec![vec![1.0]], vec![vec![3.0]]];
        let h = InitialHistory::tabulated(vec![-1.0, 0.0], &x, &v).unwrap();
        let (mut xo, mut vo) = ([0.0], [0.0]);
        h.state(0, -0.25, &mut xo, &mut vo).unwrap();
        assert!((xo[0] - 1.5).abs() < 1e-15 && (vo[0] - 2.5).abs() < 1e-15);
        assert!(h.state(0, -2.0, &mut xo, &mut vo).is_err());
        let (vmax, vmin) = h.velocity_extrema(-0.5, 0.0);
        assert_eq!((vmax[0], vmin[0]), (3.0, 2.0));
        assert!(h.covers(1.0) && !h.covers(1.5));
        assert!(InitialHistory::tabulated(vec![-1.0, -0.5], &x, &v).is_err());
    }
}
