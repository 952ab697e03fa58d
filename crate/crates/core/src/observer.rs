//! Nodal observer (R) driven by measurements of the original system (S), and
//! the direct simulation of the error system `delta = R - S`.

use crate::error::{Error, Result};
use crate::kernel::{
    check_gains, incoming_traces, scatter_ghosts, system_outflow, transport_and_friction,
    BoundaryControl, EdgeGrid, Exec, NodeValues, SimState,
};
use crate::network::{boundary_outflow, check_gain, omega_v, weighted_sum, NetworkGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverConfig {
    /// One gain per node, `|mu| <= 1`. Zero injects the full measurement,
    /// one injects nothing.
    pub mu: Vec<f64>,
}

impl ObserverConfig {
    pub fn new(graph: &NetworkGraph, mu: Vec<f64>) -> Result<Self> {
        check_gains(graph, &mu)?;
        Ok(Self { mu })
    }

    pub fn uniform(graph: &NetworkGraph, mu: f64) -> Result<Self> {
        Self::new(graph, vec![mu; graph.node_count()])
    }

    /// Every pipe has an endpoint with `|mu| < 1`.
    pub fn decay_eligible(&self, graph: &NetworkGraph) -> bool {
        (0..graph.pipe_count()).all(|e| {
            let (a, b) = graph.pipe_ends(e);
            self.mu[a].abs() < 1.0 || self.mu[b].abs() < 1.0
        })
    }
}

/// Node traces of system (S): what flows in, and what its node conditions send out.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalMeasurement {
    pub s_in: NodeValues,
    pub s_out: NodeValues,
}

/// Snapshot of the nodal values of S at the state's current time level.
///
/// `s_in` are the boundary-adjacent cell values of the invariant travelling
/// into the node, `s_out` the values the node conditions of S assign to the
/// invariants leaving it.
pub fn measure_nodal(
    s_state: &SimState,
    graph: &NetworkGraph,
    mu: &[f64],
    controls: &dyn BoundaryControl,
) -> Result<NodalMeasurement> {
    check_gains(graph, mu)?;
    let s_in = incoming_traces(graph, &s_state.grids);
    let s_out = system_outflow(graph, &s_in, mu, controls, s_state.t())?;
    Ok(NodalMeasurement { s_in, s_out })
}

/// Outgoing observer invariants at one node.
///
/// Interior: `R_out^e = S_out^e - mu (R_in^e - S_in^e) + mu omega sum_g D_g² (R_in^g - S_in^g)`.
/// Boundary (`u` given, one pipe): `R_out = (1 - mu) u + mu R_in`.
pub fn observer_node_update(
    r_in: &[f64],
    s_in: &[f64],
    s_out: &[f64],
    mu: f64,
    diameters: &[f64],
    u: Option<f64>,
) -> Result<Vec<f64>> {
    check_gain(mu)?;
    let n = diameters.len();
    if r_in.len() != n {
        return Err(Error::validation(format!(
            "{} observer values for {n} pipes",
            r_in.len()
        )));
    }
    match u {
        Some(u) if n == 1 => Ok(vec![boundary_outflow(mu, u, r_in[0])]),
        Some(_) => Err(Error::validation("control value given at an interior node")),
        None if n == 1 => Err(Error::validation("boundary node requires a control value")),
        None => {
            if s_in.len() != n || s_out.len() != n {
                return Err(Error::validation(format!(
                    "measurement sizes ({}, {}) do not match {n} pipes",
                    s_in.len(),
                    s_out.len()
                )));
            }
            let omega = omega_v(diameters)?;
            let mut out = vec![0.0; n];
            observer_interior(r_in, s_in, s_out, mu, diameters, omega, &mut out);
            Ok(out)
        }
    }
}

fn observer_interior(
    r_in: &[f64],
    s_in: &[f64],
    s_out: &[f64],
    mu: f64,
    diameters: &[f64],
    omega: f64,
    out: &mut [f64],
) {
    let gap: Vec<f64> = r_in.iter().zip(s_in).map(|(r, s)| r - s).collect();
    let shared = mu * omega * weighted_sum(&gap, diameters);
    for ((o, so), g) in out.iter_mut().zip(s_out).zip(&gap) {
        *o = so - mu * g + shared;
    }
}

/// Node map of the error system: `-mu d_in + mu omega sum D² d_in` inside,
/// `mu d_in` at boundary nodes.
pub fn diff_node_outflow(delta_in: &[f64], mu: f64, diameters: &[f64], omega: f64) -> Vec<f64> {
    if delta_in.len() == 1 {
        return vec![mu * delta_in[0]];
    }
    let shared = mu * omega * weighted_sum(delta_in, diameters);
    delta_in.iter().map(|d| shared - mu * d).collect()
}

/// Incoming and outgoing error values at every node for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeExchange {
    pub delta_in: NodeValues,
    pub delta_out: NodeValues,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    /// Original system.
    pub s: SimState,
    /// Observer.
    pub r: SimState,
    pub config: ObserverConfig,
}

impl CoupledState {
    pub fn new(s: SimState, r: SimState, config: ObserverConfig) -> Result<Self> {
        if !s.same_layout(&r) || s.step_index != r.step_index {
            return Err(Error::validation(
                "original and observer states must share grids, time step and clock",
            ));
        }
        Ok(Self { s, r, config })
    }

    pub fn t(&self) -> f64 {
        self.s.t()
    }

    /// Error grids `R - S`.
    pub fn delta(&self) -> Vec<EdgeGrid> {
        delta_grids(&self.s, &self.r)
    }

    /// Advances S and R by one step. R's node maps read the S measurement
    /// from the same (current) time level; both share the boundary data.
    pub fn step(
        &mut self,
        graph: &NetworkGraph,
        controls: &dyn BoundaryControl,
        exec: Exec,
    ) -> Result<NodeExchange> {
        let mu = &self.config.mu;
        let t = self.s.t();
        let measurement = measure_nodal(&self.s, graph, mu, controls)?;
        let r_in = incoming_traces(graph, &self.r.grids);

        let mut r_out = Vec::with_capacity(graph.node_count());
        for v in 0..graph.node_count() {
            let out = if graph.is_boundary(v) {
                let u = controls.incoming(v, t)?;
                vec![boundary_outflow(mu[v], u, r_in[v][0])]
            } else {
                let mut out = vec![0.0; r_in[v].len()];
                observer_interior(
                    &r_in[v],
                    &measurement.s_in[v],
                    &measurement.s_out[v],
                    mu[v],
                    &graph.diameters_at(v),
                    graph.omega(v),
                    &mut out,
                );
                out
            };
            r_out.push(out);
        }

        let s_ghosts = scatter_ghosts(graph, &measurement.s_out);
        let r_ghosts = scatter_ghosts(graph, &r_out);
        let dt = self.s.dt;
        let (s_grids, r_grids) = (&mut self.s.grids, &mut self.r.grids);
        exec.join(
            || transport_and_friction(graph, s_grids, &s_ghosts, dt, exec),
            || transport_and_friction(graph, r_grids, &r_ghosts, dt, exec),
        );
        self.s.step_index += 1;
        self.r.step_index += 1;

        let diff = |a: &NodeValues, b: &NodeValues| -> NodeValues {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
                .collect()
        };
        Ok(NodeExchange {
            delta_in: diff(&r_in, &measurement.s_in),
            delta_out: diff(&r_out, &measurement.s_out),
        })
    }
}

pub fn delta_grids(s: &SimState, r: &SimState) -> Vec<EdgeGrid> {
    s.grids
        .iter()
        .zip(&r.grids)
        .map(|(gs, gr)| EdgeGrid {
            r_plus: gr
                .r_plus
                .iter()
                .zip(&gs.r_plus)
                .map(|(a, b)| a - b)
                .collect(),
            r_minus: gr
                .r_minus
                .iter()
                .zip(&gs.r_minus)
                .map(|(a, b)| a - b)
                .collect(),
            ..gs.clone()
        })
        .collect()
}

/// Advances the error system directly by one step.
///
/// `s_next` is the original system one step ahead of `delta`; its friction
/// differences enter the source `sigma(delta + S) - sigma(S)`.
pub fn direct_diff_step(
    delta: &mut SimState,
    graph: &NetworkGraph,
    mu: &[f64],
    s_next: &SimState,
    exec: Exec,
) -> Result<NodeExchange> {
    check_gains(graph, mu)?;
    if !delta.same_layout(s_next) {
        return Err(Error::Sequencing(
            "original-system state does not match the error grids".into(),
        ));
    }
    if s_next.step_index != delta.step_index + 1 {
        return Err(Error::Sequencing(format!(
            "error state is at step {} but the original system is at step {} (expected {})",
            delta.step_index,
            s_next.step_index,
            delta.step_index + 1
        )));
    }

    let delta_in = incoming_traces(graph, &delta.grids);
    let delta_out: NodeValues = (0..graph.node_count())
        .map(|v| diff_node_outflow(&delta_in[v], mu[v], &graph.diameters_at(v), graph.omega(v)))
        .collect();
    let ghosts = scatter_ghosts(graph, &delta_out);

    let dt = delta.dt;
    let failure = std::sync::Mutex::new(None);
    exec.for_each_mut(&mut delta.grids, |k, grid| {
        let (gp, gm) = ghosts[k];
        grid.advect(gp, gm);
        let a = 2.0 * dt * graph.pipes()[grid.pipe].nu();
        if a == 0.0 {
            return;
        }
        let s = &s_next.grids[k];
        for i in 0..grid.n_cells() {
            let d_star = grid.r_plus[i] - grid.r_minus[i];
            let d_s = s.r_plus[i] - s.r_minus[i];
            match diff_friction_root(d_star, d_s, a) {
                Ok(d) => {
                    let half = 0.5 * (d_star - d);
                    grid.r_plus[i] -= half;
                    grid.r_minus[i] += half;
                }
                Err(e) => {
                    *failure.lock().unwrap() = Some(e);
                    return;
                }
            }
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    delta.step_index += 1;
    Ok(NodeExchange {
        delta_in,
        delta_out,
    })
}

/// `|y| y(x + s) - |s| s` written to avoid cancellation when `x` is small.
fn signed_square_gap(x: f64, s: f64) -> f64 {
    let y = x + s;
    if (y >= 0.0) == (s >= 0.0) {
        x * (y.abs() + s.abs())
    } else {
        y.abs() * y - s.abs() * s
    }
}

/// Root `x` of `x + a (|x + s| (x + s) - |s| s) = d*` by safeguarded Newton.
///
/// The left side is increasing with slope `1 + 2 a |x + s| >= 1`, and the root
/// lies between 0 and `d*`.
pub fn diff_friction_root(d_star: f64, d_s: f64, a: f64) -> Result<f64> {
    if a == 0.0 || d_star == 0.0 {
        return Ok(d_star);
    }
    let h = |x: f64| x + a * signed_square_gap(x, d_s) - d_star;
    let (mut lo, mut hi) = if d_star > 0.0 {
        (0.0, d_star)
    } else {
        (d_star, 0.0)
    };
    let mut x = (d_star / (1.0 + 2.0 * a * d_s.abs())).clamp(lo, hi);
    for _ in 0..200 {
        let hx = h(x);
        if hx == 0.0 {
            return Ok(x);
        }
        if hx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - hx / (1.0 + 2.0 * a * (x + d_s).abs());
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-14 * next.abs() || next == lo || next == hi {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Numerical(format!(
        "friction solve for the error system did not converge (d* = {d_star}, S difference = {d_s})"
    )))
}
