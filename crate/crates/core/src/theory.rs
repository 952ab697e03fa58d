//! Closed-form constants behind the well-posedness, observability and decay
//! results. Everything here is a pure function of network data, gains and
//! the regularity levels `M~` (bound on `|S+ - S-|`) and `B~` (bound on its
//! time derivative).

use crate::network::NetworkGraph;

/// Inputs shared by the certificates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub m_tilde: f64,
    pub b_tilde: f64,
    /// `max_e L^e / c`.
    pub t0_max: f64,
    /// `min_e L^e / c`; horizon of the a-priori bound.
    pub t0_min: f64,
    pub nu_max: f64,
    pub c: f64,
}

impl BoundInputs {
    pub fn new(graph: &NetworkGraph, c: f64, m_tilde: f64, b_tilde: f64) -> Self {
        let lengths = graph.pipes().iter().map(|p| p.length);
        let max_l = lengths.clone().fold(0.0, f64::max);
        let min_l = lengths.fold(f64::INFINITY, f64::min);
        Self {
            m_tilde,
            b_tilde,
            t0_max: max_l / c,
            t0_min: min_l / c,
            nu_max: graph.max_nu(),
            c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellposednessConstants {
    /// Contraction constant `16 T nu M`.
    pub l_kontr: f64,
    /// Largest admissible horizon `1 / (16 nu M)`.
    pub t_threshold: f64,
    /// Admissible data radius `(M/3)(1 - l_kontr)`; `None` once `l_kontr >= 1`.
    pub epsilon: Option<f64>,
    /// `exp(16 nu M T)`.
    pub gronwall_factor: f64,
}

impl WellposednessConstants {
    pub fn valid(&self) -> bool {
        self.epsilon.is_some()
    }

    /// A-priori bound `epsilon exp(16 nu M T)` on `|R± - J|`.
    pub fn apriori_bound(&self) -> Option<f64> {
        self.epsilon.map(|e| e * self.gronwall_factor)
    }
}

pub fn wellposedness_constants(t: f64, m: f64, nu_max: f64) -> WellposednessConstants {
    let l_kontr = 16.0 * t * nu_max * m;
    WellposednessConstants {
        l_kontr,
        t_threshold: 1.0 / (16.0 * nu_max * m),
        epsilon: (l_kontr < 1.0).then(|| m / 3.0 * (1.0 - l_kontr)),
        gronwall_factor: (16.0 * nu_max * m * t).exp(),
    }
}

/// Observability constant `C0 = 2 [2c + 4 L nu M~ exp(4 L nu M~ / c)]` of one pipe.
pub fn c0_constant(m_tilde: f64, length: f64, nu: f64, c: f64) -> f64 {
    let k = 4.0 * length * nu * m_tilde;
    2.0 * (2.0 * c + k * (k / c).exp())
}

/// `C0` maximised over pipes.
pub fn c0_network(graph: &NetworkGraph, m_tilde: f64, c: f64) -> f64 {
    graph
        .pipes()
        .iter()
        .map(|p| c0_constant(m_tilde, p.length, p.nu(), c))
        .fold(0.0, f64::max)
}

/// `max(M~², B~²) / (M~ + B~)`, zero when both vanish.
pub fn upsilon(m_tilde: f64, b_tilde: f64) -> f64 {
    let sum = m_tilde + b_tilde;
    if sum == 0.0 {
        0.0
    } else {
        (m_tilde * m_tilde).max(b_tilde * b_tilde) / sum
    }
}

/// `C1 = C0(M~) + 2c + max_e 16 nu L Upsilon exp(4 nu (M~ + B~) L / c)`.
pub fn c1_constant(graph: &NetworkGraph, m_tilde: f64, b_tilde: f64, c: f64) -> f64 {
    let ups = upsilon(m_tilde, b_tilde);
    let extra = graph
        .pipes()
        .iter()
        .map(|p| {
            16.0 * p.nu()
                * p.length
                * ups
                * (4.0 * p.nu() * (m_tilde + b_tilde) * p.length / c).exp()
        })
        .fold(0.0, f64::max);
    c0_network(graph, m_tilde, c) + 2.0 * c + extra
}

/// `min_e sum_{v at e} (1 - mu_v²) / (1 + mu_v²)`.
pub fn upsilon0(graph: &NetworkGraph, mu: &[f64]) -> f64 {
    let weight = |m: f64| (1.0 - m * m) / (1.0 + m * m);
    (0..graph.pipe_count())
        .map(|e| {
            let (a, b) = graph.pipe_ends(e);
            weight(mu[a]) + weight(mu[b])
        })
        .fold(f64::INFINITY, f64::min)
}

/// Quantities that exist in the decay argument but have no closed form.
pub const NOT_COMPUTED: &[&str] = &[
    "C(T): stability constant of the well-posedness result",
    "mu0, mu1: exponential rates of the L0 and L1 decay",
    "C~: constant of the L1 decay bound",
    "epsilon_n(T, M): radii of the time-extension argument",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCertificate {
    pub inputs: BoundInputs,
    pub upsilon0: f64,
    pub c0: f64,
    pub c1: f64,
    /// `1 / (1 + c upsilon0 / C0)`; bounds `L0(t + T0) / L0(t - T0)`.
    pub l0_window_factor: f64,
    /// `exp(8 nu_max B~ T0)`.
    pub delta_nu_t0: f64,
    /// `8 T0 Delta² nu_max`.
    pub h1_lhs: f64,
    /// `(c / C1) upsilon0`.
    pub h1_rhs: f64,
    pub h1_holds: bool,
}

pub fn decay_certificates(
    graph: &NetworkGraph,
    mu: &[f64],
    c: f64,
    m_tilde: f64,
    b_tilde: f64,
) -> DecayCertificate {
    let inputs = BoundInputs::new(graph, c, m_tilde, b_tilde);
    let t0 = inputs.t0_max;
    let nu = inputs.nu_max;
    let ups0 = upsilon0(graph, mu);
    let c0 = c0_network(graph, m_tilde, c);
    let c1 = c1_constant(graph, m_tilde, b_tilde, c);
    let delta = (8.0 * nu * b_tilde * t0).exp();
    let h1_lhs = 8.0 * t0 * delta * delta * nu;
    let h1_rhs = c / c1 * ups0;
    DecayCertificate {
        inputs,
        upsilon0: ups0,
        c0,
        c1,
        l0_window_factor: 1.0 / (1.0 + c / c0 * ups0),
        delta_nu_t0: delta,
        h1_lhs,
        h1_rhs,
        h1_holds: h1_lhs <= h1_rhs,
    }
}
