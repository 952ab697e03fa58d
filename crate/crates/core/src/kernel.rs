//! Upwind transport of the invariant pair at speeds `±c` with an implicit
//! friction step, coupled through the node maps once per time step.
//!
//! One step of system (S):
//! 1. read the incoming invariant at every node from the boundary-adjacent cells,
//! 2. evaluate the node maps to get the outgoing invariants (ghost values),
//! 3. advect every pipe with those ghosts as inflow,
//! 4. apply the friction step cellwise.
//!
//! Steps 3 and 4 are independent per pipe and run through [`Exec`].

use crate::error::{Error, Result};
use crate::network::{boundary_outflow, check_gain, interior_outflow, End, NetworkGraph};

/// Per-edge execution policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Rayon work stealing over pipes (sequential when built without `parallel`).
    #[default]
    Parallel,
}

impl Exec {
    pub(crate) fn for_each_mut<T, F>(self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
            }
            _ => items.iter_mut().enumerate().for_each(|(i, x)| f(i, x)),
        }
    }

    pub(crate) fn join<A, B>(self, a: A, b: B)
    where
        A: FnOnce() + Send,
        B: FnOnce() + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                rayon::join(a, b);
            }
            _ => {
                a();
                b();
            }
        }
    }
}

/// How pipe lengths that are not multiples of `c dt` are meshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridMode {
    /// `n = floor(L / (c dt))`, `dx = L / n`, cfl <= 1, exact lengths.
    CflSafe,
    /// `n = round(L / (c dt))`, `dx = c dt`, cfl = 1, lengths snapped to `n dx`.
    #[default]
    ExactAdvection,
}

/// Cell-centered invariants on one pipe; cell `i` sits at `(i + 1/2) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGrid {
    pub pipe: usize,
    pub dx: f64,
    pub cfl: f64,
    pub r_plus: Vec<f64>,
    pub r_minus: Vec<f64>,
    /// `(n dx - L) / L`; zero in cfl-safe mode.
    pub length_perturbation: f64,
}

impl EdgeGrid {
    pub fn n_cells(&self) -> usize {
        self.r_plus.len()
    }

    pub fn effective_length(&self) -> f64 {
        self.n_cells() as f64 * self.dx
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    /// Invariant arriving at the given end: `R-` at x = 0, `R+` at x = L.
    pub fn incoming_trace(&self, end: End) -> f64 {
        match end {
            End::Start => self.r_minus[0],
            End::Finish => self.r_plus[self.n_cells() - 1],
        }
    }

    /// One upwind step. `inflow_plus` is the ghost for `R+` at x = 0,
    /// `inflow_minus` the ghost for `R-` at x = L.
    pub fn advect(&mut self, inflow_plus: f64, inflow_minus: f64) {
        let nu = self.cfl;
        let keep = 1.0 - nu;
        let n = self.n_cells();
        // Convex combination form: at cfl = 1 this is an exact shift.
        let rp = &mut self.r_plus;
        for i in (1..n).rev() {
            rp[i] = keep * rp[i] + nu * rp[i - 1];
        }
        rp[0] = keep * rp[0] + nu * inflow_plus;

        let rm = &mut self.r_minus;
        for i in 0..n - 1 {
            rm[i] = keep * rm[i] + nu * rm[i + 1];
        }
        rm[n - 1] = keep * rm[n - 1] + nu * inflow_minus;
    }

    fn apply_friction(&mut self, nu: f64, dt: f64) {
        if nu == 0.0 {
            return;
        }
        for (p, m) in self.r_plus.iter_mut().zip(self.r_minus.iter_mut()) {
            (*p, *m) = friction_step(*p, *m, nu, dt);
        }
    }
}

/// Pure-function form of [`EdgeGrid::advect`].
pub fn advect_step(grid: &EdgeGrid, inflow_plus: f64, inflow_minus: f64) -> EdgeGrid {
    let mut next = grid.clone();
    next.advect(inflow_plus, inflow_minus);
    next
}

/// Implicit Euler step for `d' = -2 nu |d| d` on `d = R+ - R-`; the sum
/// `R+ + R-` is untouched.
///
/// With `a = 2 dt nu` the update solves `d + a |d| d = d*`, whose root is
/// `sign(d*) (sqrt(1 + 4 a |d*|) - 1) / (2 a)`.
pub fn friction_step(r_plus: f64, r_minus: f64, nu: f64, dt: f64) -> (f64, f64) {
    let a = 2.0 * dt * nu;
    if a == 0.0 {
        return (r_plus, r_minus);
    }
    let d_star = r_plus - r_minus;
    if d_star == 0.0 {
        return (r_plus, r_minus);
    }
    let d = friction_root(d_star, a);
    // d - d* = -a |d| d, split evenly so the sum changes by one rounding at most.
    let half = 0.5 * (d_star - d);
    (r_plus - half, r_minus + half)
}

/// Root of `d + a |d| d = d*` for `a > 0`.
pub fn friction_root(d_star: f64, a: f64) -> f64 {
    let m = d_star.abs();
    // (sqrt(1 + 4am) - 1) / (2a) rewritten without cancellation.
    let root = 2.0 * m / (1.0 + (1.0 + 4.0 * a * m).sqrt());
    root.copysign(d_star)
}

/// Builds empty grids (all invariants zero) for every pipe.
pub fn build_grids(graph: &NetworkGraph, c: f64, dt: f64, mode: GridMode) -> Result<Vec<EdgeGrid>> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Config(format!(
            "sound speed must be positive, got {c}"
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let step = c * dt;
    graph
        .pipes()
        .iter()
        .enumerate()
        .map(|(k, pipe)| {
            let ratio = pipe.length / step;
            let n = match mode {
                GridMode::CflSafe => (ratio + 1e-9).floor(),
                GridMode::ExactAdvection => (ratio + 0.5).floor(),
            };
            if n < 2.0 {
                return Err(Error::Config(format!(
                    "time step {dt} s gives fewer than two cells on pipe `{}` ({} m); need dt <= {} s",
                    pipe.id,
                    pipe.length,
                    pipe.length / (2.0 * c)
                )));
            }
            let n = n as usize;
            let (dx, cfl) = match mode {
                GridMode::CflSafe => {
                    let dx = pipe.length / n as f64;
                    (dx, (step / dx).min(1.0))
                }
                GridMode::ExactAdvection => (step, 1.0),
            };
            Ok(EdgeGrid {
                pipe: k,
                dx,
                cfl,
                r_plus: vec![0.0; n],
                r_minus: vec![0.0; n],
                length_perturbation: (n as f64 * dx - pipe.length) / pipe.length,
            })
        })
        .collect()
}

/// Time step giving the shortest pipe `min_cells` cells at cfl = 1.
pub fn default_dt(graph: &NetworkGraph, c: f64, min_cells: usize) -> f64 {
    let shortest = graph
        .pipes()
        .iter()
        .map(|p| p.length)
        .fold(f64::INFINITY, f64::min);
    shortest / (min_cells as f64 * c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub grids: Vec<EdgeGrid>,
    pub dt: f64,
    pub step_index: u64,
}

impl SimState {
    pub fn new(grids: Vec<EdgeGrid>, dt: f64) -> Self {
        Self {
            grids,
            dt,
            step_index: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.step_index as f64 * self.dt
    }

    /// Sets every cell of every pipe to the same pair.
    pub fn fill(&mut self, plus: f64, minus: f64) {
        for g in &mut self.grids {
            g.r_plus.fill(plus);
            g.r_minus.fill(minus);
        }
    }

    pub(crate) fn same_layout(&self, other: &SimState) -> bool {
        self.dt == other.dt
            && self.grids.len() == other.grids.len()
            && self
                .grids
                .iter()
                .zip(&other.grids)
                .all(|(a, b)| a.n_cells() == b.n_cells() && a.dx == b.dx)
    }
}

/// Prescribed incoming invariant `u^e(t)` at boundary nodes.
pub trait BoundaryControl: Sync {
    fn incoming(&self, node: usize, t: f64) -> Result<f64>;
}

impl<F> BoundaryControl for F
where
    F: Fn(usize, f64) -> Result<f64> + Sync,
{
    fn incoming(&self, node: usize, t: f64) -> Result<f64> {
        self(node, t)
    }
}

/// Per-node invariant values, in the order of [`NetworkGraph::incident`].
pub type NodeValues = Vec<Vec<f64>>;

pub fn incoming_traces(graph: &NetworkGraph, grids: &[EdgeGrid]) -> NodeValues {
    (0..graph.node_count())
        .map(|v| {
            graph
                .incident(v)
                .iter()
                .map(|inc| grids[inc.pipe].incoming_trace(inc.end))
                .collect()
        })
        .collect()
}

pub(crate) fn check_gains(graph: &NetworkGraph, mu: &[f64]) -> Result<()> {
    if mu.len() != graph.node_count() {
        return Err(Error::validation(format!(
            "{} gains for {} nodes",
            mu.len(),
            graph.node_count()
        )));
    }
    mu.iter().try_for_each(|&m| check_gain(m))
}

/// Outgoing invariants of system (S) at every node.
pub fn system_outflow(
    graph: &NetworkGraph,
    incoming: &NodeValues,
    mu: &[f64],
    controls: &dyn BoundaryControl,
    t: f64,
) -> Result<NodeValues> {
    (0..graph.node_count())
        .map(|v| {
            let r_in = &incoming[v];
            if graph.is_boundary(v) {
                let u = controls.incoming(v, t)?;
                Ok(vec![boundary_outflow(mu[v], u, r_in[0])])
            } else {
                let mut out = vec![0.0; r_in.len()];
                interior_outflow(r_in, &graph.diameters_at(v), graph.omega(v), &mut out);
                Ok(out)
            }
        })
        .collect()
}

/// Ghost inflow values per pipe: `(R+ at x = 0, R- at x = L)`.
pub(crate) fn scatter_ghosts(graph: &NetworkGraph, outgoing: &NodeValues) -> Vec<(f64, f64)> {
    let mut ghosts = vec![(0.0, 0.0); graph.pipe_count()];
    for (v, out) in outgoing.iter().enumerate() {
        for (inc, value) in graph.incident(v).iter().zip(out) {
            match inc.end {
                End::Start => ghosts[inc.pipe].0 = *value,
                End::Finish => ghosts[inc.pipe].1 = *value,
            }
        }
    }
    ghosts
}

/// Transport with the given ghosts followed by friction, per pipe.
pub(crate) fn transport_and_friction(
    graph: &NetworkGraph,
    grids: &mut [EdgeGrid],
    ghosts: &[(f64, f64)],
    dt: f64,
    exec: Exec,
) {
    exec.for_each_mut(grids, |k, grid| {
        let (gp, gm) = ghosts[k];
        grid.advect(gp, gm);
        grid.apply_friction(graph.pipes()[grid.pipe].nu(), dt);
    });
}

/// Advances system (S) by one time step.
///
/// `mu` holds one gain per node; only boundary entries are read.
pub fn step_system(
    state: &mut SimState,
    graph: &NetworkGraph,
    controls: &dyn BoundaryControl,
    mu: &[f64],
    exec: Exec,
) -> Result<()> {
    check_gains(graph, mu)?;
    let incoming = incoming_traces(graph, &state.grids);
    let outgoing = system_outflow(graph, &incoming, mu, controls, state.t())?;
    let ghosts = scatter_ghosts(graph, &outgoing);
    transport_and_friction(graph, &mut state.grids, &ghosts, state.dt, exec);
    state.step_index += 1;
    Ok(())
}
