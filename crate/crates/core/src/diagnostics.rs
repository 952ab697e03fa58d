//! Lyapunov functionals, nodal energy residuals, regularity bounds and decay fits.

use crate::error::{Error, Result};
use crate::kernel::{EdgeGrid, SimState};
use crate::network::NetworkGraph;

/// `(D²/2) dx sum_i (d+_i² + d-_i²)` for one pipe (midpoint rule).
pub fn edge_l0(graph: &NetworkGraph, grid: &EdgeGrid) -> f64 {
    let d = graph.pipes()[grid.pipe].diameter;
    let sum: f64 = grid
        .r_plus
        .iter()
        .zip(&grid.r_minus)
        .map(|(p, m)| p * p + m * m)
        .sum();
    0.5 * d * d * grid.dx * sum
}

pub fn lyapunov_l0(graph: &NetworkGraph, delta: &[EdgeGrid]) -> f64 {
    delta.iter().map(|g| edge_l0(graph, g)).sum()
}

/// L1 with the forward difference quotient `(delta^{n+1} - delta^n) / dt`
/// standing in for the time derivative.
pub fn lyapunov_l1(graph: &NetworkGraph, frames: &[Vec<EdgeGrid>], dt: f64) -> Result<f64> {
    let [.., prev, next] = frames else {
        return Err(Error::Numerical(
            "L1 needs two consecutive frames".to_string(),
        ));
    };
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::validation(format!("dt must be positive, got {dt}")));
    }
    Ok(l1_between(graph, prev, next, dt))
}

pub(crate) fn l1_between(
    graph: &NetworkGraph,
    prev: &[EdgeGrid],
    next: &[EdgeGrid],
    dt: f64,
) -> f64 {
    prev.iter()
        .zip(next)
        .map(|(a, b)| {
            let d = graph.pipes()[a.pipe].diameter;
            let sum: f64 = a
                .r_plus
                .iter()
                .zip(&b.r_plus)
                .chain(a.r_minus.iter().zip(&b.r_minus))
                .map(|(x, y)| {
                    let rate = (y - x) / dt;
                    rate * rate
                })
                .sum();
            0.5 * d * d * a.dx * sum
        })
        .sum()
}

/// `|sum D² |out|² - mu² sum D² |in|²|`, divided by the weighted in-sum
/// (zero when that sum vanishes).
pub fn nodal_energy_residual(
    delta_in: &[f64],
    delta_out: &[f64],
    mu: f64,
    diameters: &[f64],
) -> f64 {
    let weighted =
        |xs: &[f64]| -> f64 { xs.iter().zip(diameters).map(|(x, d)| d * d * x * x).sum() };
    let e_in = weighted(delta_in);
    if e_in == 0.0 {
        return 0.0;
    }
    (weighted(delta_out) - mu * mu * e_in).abs() / e_in
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LyapunovSeries {
    pub times: Vec<f64>,
    pub l0: Vec<f64>,
    /// `(t, L1)` pairs; L1 at `t` uses the frames at `t - dt` and `t`.
    pub l1: Vec<(f64, f64)>,
    pub per_edge_l0: Vec<Vec<f64>>,
}

impl LyapunovSeries {
    pub fn new(pipes: usize) -> Self {
        Self {
            per_edge_l0: vec![Vec::new(); pipes],
            ..Self::default()
        }
    }

    pub fn record(&mut self, graph: &NetworkGraph, t: f64, delta: &[EdgeGrid]) {
        let mut total = 0.0;
        for (g, series) in delta.iter().zip(self.per_edge_l0.iter_mut()) {
            let v = edge_l0(graph, g);
            series.push(v);
            total += v;
        }
        self.times.push(t);
        self.l0.push(total);
    }

    pub fn record_l1(&mut self, t: f64, value: f64) {
        self.l1.push((t, value));
    }

    /// Pairs `(t, L1)` as a separate series for fitting.
    pub fn l1_series(&self) -> (Vec<f64>, Vec<f64>) {
        self.l1.iter().copied().unzip()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Minus the least-squares slope of `ln L` against `t`, in 1/s.
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares fit of `ln L = b - rate t` over `t0 <= t <= t1`. Samples
/// after the first nonpositive value in the window are ignored.
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::validation("times and values differ in length"));
    }
    let (t0, t1) = window;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t0 && **t <= t1)
        .map_while(|(t, v)| (*v > 0.0).then(|| (*t, v.ln())))
        .collect();
    if pts.len() < 10 {
        return Err(Error::Numerical(format!(
            "decay fit needs at least 10 positive samples in [{t0}, {t1}], found {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in &pts {
        let (dt, dy) = (t - mean_t, y - mean_y);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(Error::Numerical(
            "decay fit window has a single time".into(),
        ));
    }
    let slope = sty / stt;
    let ss_res = (syy - slope * sty).max(0.0);
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * n {
        1.0
    } else {
        1.0 - ss_res / syy
    };
    Ok(DecayFit {
        rate: -slope,
        r_squared,
        samples: pts.len(),
    })
}

pub fn fit_series(series: &LyapunovSeries, window: (f64, f64)) -> Result<DecayFit> {
    fit_decay_rate(&series.times, &series.l0, window)
}

/// Running estimates of `M~ = max |S+ - S-|, |R+ - R-|` and
/// `B~ = max |d/dt (S+ - S-)|` over a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegularityBounds {
    pub m_tilde: f64,
    pub b_tilde: f64,
    last_s_diff: Option<Vec<Vec<f64>>>,
}

fn differences(state: &SimState) -> Vec<Vec<f64>> {
    state
        .grids
        .iter()
        .map(|g| {
            g.r_plus
                .iter()
                .zip(&g.r_minus)
                .map(|(p, m)| p - m)
                .collect()
        })
        .collect()
}

impl RegularityBounds {
    pub fn observe(&mut self, s: &SimState, r: &SimState) {
        let s_diff = differences(s);
        let max_abs = |d: &[Vec<f64>]| d.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        self.m_tilde = self
            .m_tilde
            .max(max_abs(&s_diff))
            .max(max_abs(&differences(r)));
        if let Some(prev) = &self.last_s_diff {
            let rate = prev
                .iter()
                .flatten()
                .zip(s_diff.iter().flatten())
                .fold(0.0f64, |m, (a, b)| m.max((b - a).abs() / s.dt));
            self.b_tilde = self.b_tilde.max(rate);
        }
        self.last_s_diff = Some(s_diff);
    }
}

/// `(M~, B~)` over stored trajectories of S and R (same length, same time step).
pub fn estimate_regularity_bounds(s_traj: &[SimState], r_traj: &[SimState]) -> (f64, f64) {
    let mut bounds = RegularityBounds::default();
    for (s, r) in s_traj.iter().zip(r_traj) {
        bounds.observe(s, r);
    }
    (bounds.m_tilde, bounds.b_tilde)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFrame {
    pub t: f64,
    pub pipes: Vec<PipeSnapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipeSnapshot {
    pub pipe: usize,
    pub x: Vec<f64>,
    pub delta_plus: Vec<f64>,
    pub delta_minus: Vec<f64>,
}

impl SnapshotFrame {
    pub fn capture(t: f64, delta: &[EdgeGrid]) -> Self {
        Self {
            t,
            pipes: delta
                .iter()
                .map(|g| PipeSnapshot {
                    pipe: g.pipe,
                    x: (0..g.n_cells()).map(|i| g.cell_center(i)).collect(),
                    delta_plus: g.r_plus.clone(),
                    delta_minus: g.r_minus.clone(),
                })
                .collect(),
        }
    }
}
