//! Scenario drivers: set up both systems from files and run them.

use crate::diagnostics::{
    edge_l0, fit_decay_rate, l1_between, nodal_energy_residual, DecayFit, LyapunovSeries,
    RegularityBounds, SnapshotFrame,
};
use crate::error::{Error, Result};
use crate::io::scenario::{InitialCondition, ScenarioSpec};
use crate::io::schedule::ScheduleControls;
use crate::kernel::{build_grids, default_dt, step_system, EdgeGrid, Exec, SimState};
use crate::network::NetworkGraph;
use crate::observer::{CoupledState, ObserverConfig};
use crate::physics::{PressureLaw, PA_PER_BAR};
use crate::theory::{
    decay_certificates, wellposedness_constants, DecayCertificate, WellposednessConstants,
};

/// Everything needed to start a run, resolved against a network.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Network with the scenario's friction override applied.
    pub graph: NetworkGraph,
    pub law: PressureLaw,
    pub c: f64,
    pub controls: ScheduleControls,
    pub mu: Vec<f64>,
    pub s0: SimState,
    pub r0: SimState,
    pub steps: u64,
    pub stride: u64,
    pub snapshot_steps: Vec<u64>,
    pub fit_window: Option<(f64, f64)>,
    /// Invariant level `J` of the rest state. Grids and controls hold
    /// `R - J`; the kernel maps commute with this shift, and deviations
    /// carry far less rounding than absolute levels near `c ln rho`.
    pub reference_level: f64,
}

impl Prepared {
    pub fn dt(&self) -> f64 {
        self.s0.dt
    }

    /// `max_e n_e dt`: travel time through the longest meshed pipe.
    pub fn t0_max(&self) -> f64 {
        self.s0.grids.iter().map(|g| g.n_cells()).max().unwrap_or(0) as f64 * self.dt()
    }

    pub fn with_mu(&self, mu: Vec<f64>) -> Self {
        Self { mu, ..self.clone() }
    }
}

fn fill_profile(
    grids: &mut [EdgeGrid],
    ics: &[InitialCondition],
    law: &PressureLaw,
    level: f64,
) -> Result<()> {
    for (g, ic) in grids.iter_mut().zip(ics) {
        let length = g.effective_length();
        for i in 0..g.n_cells() {
            let p = ic.pressure(g.cell_center(i), length);
            let r = law.rtilde(law.density(p * PA_PER_BAR)?)? - level;
            g.r_plus[i] = r;
            g.r_minus[i] = r;
        }
    }
    Ok(())
}

pub fn prepare(graph: &NetworkGraph, spec: &ScenarioSpec) -> Result<Prepared> {
    let graph = match spec.theta {
        Some(theta) => graph.with_theta(theta)?,
        None => graph.clone(),
    };
    let law = spec.pressure_law()?;
    let dt = spec
        .time_step()
        .unwrap_or_else(|| default_dt(&graph, spec.c, 10));
    let grids = build_grids(&graph, spec.c, dt, spec.mode)?;

    let reference_level = law.rtilde(law.density(spec.rest_pressure * PA_PER_BAR)?)?;
    let mut s0 = SimState::new(grids.clone(), dt);
    let mut r0 = SimState::new(grids, dt);
    fill_profile(
        &mut s0.grids,
        &spec.resolve_ic(&graph, false)?,
        &law,
        reference_level,
    )?;
    fill_profile(
        &mut r0.grids,
        &spec.resolve_ic(&graph, true)?,
        &law,
        reference_level,
    )?;

    let controls = ScheduleControls::new(&graph, law, spec.resolve_schedules(&graph)?)?
        .with_offset(reference_level);
    let mu = spec.resolve_mu(&graph)?;
    let step_of = |t: f64| (t / dt).round() as u64;
    let steps = step_of(spec.horizon).max(1);
    Ok(Prepared {
        controls,
        law,
        c: spec.c,
        mu,
        s0,
        r0,
        steps,
        stride: spec.stride as u64,
        snapshot_steps: spec.snapshot_times.iter().map(|&t| step_of(t)).collect(),
        fit_window: spec.fit_window,
        reference_level,
        graph,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub t: f64,
    pub node: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ObserveRun {
    pub series: LyapunovSeries,
    pub residuals: Vec<ResidualRow>,
    pub snapshots: Vec<SnapshotFrame>,
    pub bounds: RegularityBounds,
    /// Largest `|R± - J|` seen in either system.
    pub max_deviation: f64,
    /// Start of the final stretch on which L0 is exactly zero.
    pub sync_time: Option<f64>,
    pub state: CoupledState,
}

fn max_deviation(state: &SimState) -> f64 {
    state
        .grids
        .iter()
        .flat_map(|g| g.r_plus.iter().chain(&g.r_minus))
        .fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn run_observer(prep: &Prepared, exec: Exec) -> Result<ObserveRun> {
    let graph = &prep.graph;
    let config = ObserverConfig::new(graph, prep.mu.clone())?;
    let mut state = CoupledState::new(prep.s0.clone(), prep.r0.clone(), config)?;
    let mut series = LyapunovSeries::new(graph.pipe_count());
    let mut residuals = Vec::new();
    let mut snapshots = Vec::new();
    let mut bounds = RegularityBounds::default();
    let mut deviation = 0.0f64;
    let mut last_nonzero: Option<u64> = None;
    let dt = prep.dt();

    for n in 0..=prep.steps {
        let t = state.t();
        let delta = state.delta();
        let l0: f64 = delta.iter().map(|g| edge_l0(graph, g)).sum();
        if !l0.is_finite() {
            return Err(Error::Numerical(format!("L0 is not finite at t = {t}")));
        }
        if l0 != 0.0 {
            last_nonzero = Some(n);
        }
        bounds.observe(&state.s, &state.r);
        deviation = deviation
            .max(max_deviation(&state.s))
            .max(max_deviation(&state.r));
        if prep.snapshot_steps.contains(&n) {
            snapshots.push(SnapshotFrame::capture(t, &delta));
        }
        let record = n % prep.stride == 0;
        if record {
            series.record(graph, t, &delta);
        }
        if n == prep.steps {
            break;
        }
        let exchange = state.step(graph, &prep.controls, exec)?;
        if record {
            series.record_l1(t, l1_between(graph, &delta, &state.delta(), dt));
            for v in 0..graph.node_count() {
                residuals.push(ResidualRow {
                    t,
                    node: v,
                    residual: nodal_energy_residual(
                        &exchange.delta_in[v],
                        &exchange.delta_out[v],
                        prep.mu[v],
                        &graph.diameters_at(v),
                    ),
                });
            }
        }
    }

    let sync_time = match last_nonzero {
        None => Some(0.0),
        Some(n) if n < prep.steps => Some((n + 1) as f64 * dt),
        Some(_) => None,
    };
    Ok(ObserveRun {
        series,
        residuals,
        snapshots,
        bounds,
        max_deviation: deviation,
        sync_time,
        state,
    })
}

#[derive(Debug, Clone)]
pub struct Rates {
    pub window: (f64, f64),
    pub l0: Option<DecayFit>,
    pub l1: Option<DecayFit>,
    pub sync_time: Option<f64>,
}

/// Fits both series over the scenario window, or the whole run.
pub fn fit_rates(prep: &Prepared, run: &ObserveRun) -> Rates {
    let end = prep.steps as f64 * prep.dt();
    let window = prep.fit_window.unwrap_or((0.0, end));
    let (l1_t, l1_v) = run.series.l1_series();
    Rates {
        window,
        l0: fit_decay_rate(&run.series.times, &run.series.l0, window).ok(),
        l1: fit_decay_rate(&l1_t, &l1_v, window).ok(),
        sync_time: run.sync_time,
    }
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub horizon: f64,
    pub reference_level: f64,
    pub m: f64,
    pub wellposedness: WellposednessConstants,
    pub decay: DecayCertificate,
    pub decay_eligible: bool,
}

pub fn certify(prep: &Prepared, run: &ObserveRun) -> Result<Certificate> {
    let graph = &prep.graph;
    let horizon = prep.steps as f64 * prep.dt();
    let m = run.max_deviation;
    let config = ObserverConfig::new(graph, prep.mu.clone())?;
    Ok(Certificate {
        horizon,
        reference_level: prep.reference_level,
        m,
        wellposedness: wellposedness_constants(horizon, m, graph.max_nu()),
        decay: decay_certificates(
            graph,
            &prep.mu,
            prep.c,
            run.bounds.m_tilde,
            run.bounds.b_tilde,
        ),
        decay_eligible: config.decay_eligible(graph),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePressure {
    pub t: f64,
    pub node: usize,
    /// bar
    pub pressure: f64,
}

#[derive(Debug, Clone)]
pub struct SimulateRun {
    pub pressures: Vec<NodePressure>,
    pub state: SimState,
}

/// Pressure in the pipe cell next to each node; `level` is added back to the
/// stored deviations.
pub fn node_pressures(
    graph: &NetworkGraph,
    law: &PressureLaw,
    state: &SimState,
    level: f64,
) -> Result<Vec<f64>> {
    (0..graph.node_count())
        .map(|v| {
            let inc = graph.incident(v)[0];
            let g = &state.grids[inc.pipe];
            let i = match inc.end {
                crate::network::End::Start => 0,
                crate::network::End::Finish => g.n_cells() - 1,
            };
            Ok(law.pressure_from_riemann(g.r_plus[i] + level, g.r_minus[i] + level)? / PA_PER_BAR)
        })
        .collect()
}

/// Original system only.
pub fn run_simulate(prep: &Prepared, exec: Exec) -> Result<SimulateRun> {
    let mut state = prep.s0.clone();
    let mut pressures = Vec::new();
    for n in 0..=prep.steps {
        if n % prep.stride == 0 || n == prep.steps {
            let t = state.t();
            for (node, p) in node_pressures(&prep.graph, &prep.law, &state, prep.reference_level)?
                .into_iter()
                .enumerate()
            {
                pressures.push(NodePressure {
                    t,
                    node,
                    pressure: p,
                });
            }
        }
        if n < prep.steps {
            step_system(&mut state, &prep.graph, &prep.controls, &prep.mu, exec)?;
        }
    }
    Ok(SimulateRun { pressures, state })
}
