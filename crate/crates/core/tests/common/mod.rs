#![allow(dead_code)]

use gasnet::io::schedule::{Breakpoint, Schedule, ScheduleControls};
use gasnet::kernel::build_grids;
use gasnet::physics::PA_PER_BAR;
use gasnet::{GridMode, NetworkGraph, PipeSpec, PressureLaw, SimState};

pub const C: f64 = 340.0;
pub const THETA: f64 = 0.0137;

/// Five pipes, one loop, two boundary nodes. Lengths are multiples of
/// 340 m so a 1 s step meshes them exactly.
pub fn five_pipe(theta: f64) -> NetworkGraph {
    let nodes = ["0", "1", "2", "3", "4"].map(String::from).to_vec();
    let pipes = vec![
        PipeSpec::new("p0_1", "0", "1", 6800.0, 0.9, theta),
        PipeSpec::new("p1_2", "1", "2", 10200.0, 0.6, theta),
        PipeSpec::new("p2_3", "2", "3", 5100.0, 0.5, theta),
        PipeSpec::new("p1_3", "1", "3", 8500.0, 0.7, theta),
        PipeSpec::new("p3_4", "3", "4", 3400.0, 0.4, theta),
    ];
    NetworkGraph::new(nodes, pipes).unwrap()
}

pub fn law() -> PressureLaw {
    PressureLaw::isothermal(C).unwrap()
}

pub fn level(p_bar: f64) -> f64 {
    let law = law();
    law.rtilde(law.density(p_bar * PA_PER_BAR).unwrap())
        .unwrap()
}

/// Invariants are stored as deviations from the 60 bar rest level.
pub const REST_BAR: f64 = 60.0;

pub fn deviation(p_bar: f64) -> f64 {
    level(p_bar) - level(REST_BAR)
}

/// Rest state at `p_bar` on every cell.
pub fn rest(graph: &NetworkGraph, dt: f64, p_bar: f64) -> SimState {
    let mut s = SimState::new(
        build_grids(graph, C, dt, GridMode::ExactAdvection).unwrap(),
        dt,
    );
    let r = deviation(p_bar);
    s.fill(r, r);
    s
}

/// Raises the first half of pipe `k` by `h` bar above `base`.
pub fn half_step(state: &mut SimState, k: usize, base: f64, h: f64) {
    let g = &mut state.grids[k];
    let n = g.n_cells();
    let r = deviation(base + h);
    for i in 0..n / 2 {
        g.r_plus[i] = r;
        g.r_minus[i] = r;
    }
}

/// The 59.5 / 60.5 / 60 bar schedule at every boundary node; node "0"
/// injects, the others draw.
pub fn injecting_controls(graph: &NetworkGraph) -> ScheduleControls {
    let schedule = |m| {
        Schedule::new(vec![
            Breakpoint { t: 0.0, p: 59.5, m },
            Breakpoint {
                t: 100.0,
                p: 60.5,
                m,
            },
            Breakpoint {
                t: 200.0,
                p: 60.0,
                m,
            },
        ])
        .unwrap()
    };
    let schedules = (0..graph.node_count())
        .map(|v| {
            graph.is_boundary(v).then(|| {
                schedule(if graph.nodes()[v] == "0" {
                    41.788
                } else {
                    -4.323
                })
            })
        })
        .collect();
    ScheduleControls::new(graph, law(), schedules)
        .unwrap()
        .with_offset(level(REST_BAR))
}
