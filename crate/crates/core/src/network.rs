//! Pipe network graph and the linear node maps.
//!
//! Every pipe `e` is an interval `[0, L^e]` oriented from `from` (x = 0) to
//! `to` (x = L^e). At a node the invariant travelling *into* the node is
//! called incoming, the one leaving it outgoing:
//!
//! | end   | sign | incoming | outgoing |
//! |-------|------|----------|----------|
//! | x = 0 | -1   | `R-`     | `R+`     |
//! | x = L | +1   | `R+`     | `R-`     |

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

/// Friction coefficient used when a network file does not give one, in 1/m.
pub const DEFAULT_THETA: f64 = 0.0137;

#[derive(Debug, Clone, PartialEq)]
pub struct PipeSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Length in m.
    pub length: f64,
    /// Diameter in m.
    pub diameter: f64,
    /// Friction coefficient `lambda / D` in 1/m.
    pub theta: f64,
}

impl PipeSpec {
    pub fn new(
        id: impl Into<String>,
        from: impl Into<String>,
        to: impl Into<String>,
        length: f64,
        diameter: f64,
        theta: f64,
    ) -> Self {
        Self {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            length,
            diameter,
            theta,
        }
    }

    /// Source coefficient `nu = theta / 4`.
    pub fn nu(&self) -> f64 {
        self.theta / 4.0
    }

    pub fn cross_section(&self) -> f64 {
        std::f64::consts::PI * self.diameter * self.diameter / 4.0
    }

    fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::validation(format!(
                "pipe `{}`: length must be positive, got {}",
                self.id, self.length
            )));
        }
        if !(self.diameter.is_finite() && self.diameter > 0.0) {
            return Err(Error::validation(format!(
                "pipe `{}`: diameter must be positive, got {}",
                self.id, self.diameter
            )));
        }
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(Error::validation(format!(
                "pipe `{}`: friction must be nonnegative, got {}",
                self.id, self.theta
            )));
        }
        if self.from == self.to {
            return Err(Error::validation(format!(
                "pipe `{}` starts and ends at node `{}`",
                self.id, self.from
            )));
        }
        Ok(())
    }
}

/// Incidence sign of a pipe end: `-1` at x = 0, `+1` at x = L.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum End {
    Start,
    Finish,
}

impl End {
    pub fn sign(self) -> i8 {
        match self {
            End::Start => -1,
            End::Finish => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub pipe: usize,
    pub end: End,
}

/// Immutable network. Node and pipe indices are positions in declaration order.
#[derive(Debug, Clone)]
pub struct NetworkGraph {
    nodes: Vec<String>,
    node_index: HashMap<String, usize>,
    pipes: Vec<PipeSpec>,
    pipe_index: HashMap<String, usize>,
    ends: Vec<(usize, usize)>,
    incident: Vec<Vec<Incidence>>,
    omega: Vec<f64>,
}

impl NetworkGraph {
    pub fn new(nodes: Vec<String>, pipes: Vec<PipeSpec>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::validation("network has no nodes"));
        }
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, id) in nodes.iter().enumerate() {
            if node_index.insert(id.clone(), i).is_some() {
                return Err(Error::validation(format!("duplicate node `{id}`")));
            }
        }

        let mut pipe_index = HashMap::with_capacity(pipes.len());
        let mut ends = Vec::with_capacity(pipes.len());
        let mut incident = vec![Vec::new(); nodes.len()];
        for (k, pipe) in pipes.iter().enumerate() {
            pipe.validate()?;
            if pipe_index.insert(pipe.id.clone(), k).is_some() {
                return Err(Error::validation(format!("duplicate pipe `{}`", pipe.id)));
            }
            let lookup = |id: &str| {
                node_index.get(id).copied().ok_or_else(|| Error::Lookup {
                    kind: "node",
                    id: id.to_string(),
                })
            };
            let a = lookup(&pipe.from)?;
            let b = lookup(&pipe.to)?;
            ends.push((a, b));
            incident[a].push(Incidence {
                pipe: k,
                end: End::Start,
            });
            incident[b].push(Incidence {
                pipe: k,
                end: End::Finish,
            });
        }

        if let Some(v) = incident.iter().position(Vec::is_empty) {
            return Err(Error::validation(format!(
                "node `{}` has no incident pipe",
                nodes[v]
            )));
        }

        // Connectivity by breadth-first search from node 0.
        let mut seen = vec![false; nodes.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for inc in &incident[v] {
                let (a, b) = ends[inc.pipe];
                let w = if a == v { b } else { a };
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::validation(format!(
                "network is disconnected: node `{}` is not reachable from `{}`",
                nodes[v], nodes[0]
            )));
        }

        let omega = incident
            .iter()
            .map(|inc| {
                omega_v(
                    &inc.iter()
                        .map(|i| pipes[i.pipe].diameter)
                        .collect::<Vec<_>>(),
                )
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            nodes,
            node_index,
            pipes,
            pipe_index,
            ends,
            incident,
            omega,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn pipes(&self) -> &[PipeSpec] {
        &self.pipes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn pipe_count(&self) -> usize {
        self.pipes.len()
    }

    pub fn node(&self, id: &str) -> Result<usize> {
        self.node_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::Lookup {
                kind: "node",
                id: id.to_string(),
            })
    }

    pub fn pipe(&self, id: &str) -> Result<usize> {
        self.pipe_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::Lookup {
                kind: "pipe",
                id: id.to_string(),
            })
    }

    /// Pipes meeting at node `v`, in declaration order.
    pub fn incident(&self, v: usize) -> &[Incidence] {
        &self.incident[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incident[v].len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.incident[v].len() == 1
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&v| self.is_boundary(v))
    }

    /// `(start node, end node)` of pipe `e`.
    pub fn pipe_ends(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }

    pub fn omega(&self, v: usize) -> f64 {
        self.omega[v]
    }

    pub fn diameters_at(&self, v: usize) -> Vec<f64> {
        self.incident[v]
            .iter()
            .map(|i| self.pipes[i.pipe].diameter)
            .collect()
    }

    /// Signed incidence `s(v, e)` by identifier.
    pub fn incidence_sign(&self, node: &str, pipe: &str) -> Result<i8> {
        let v = self.node(node)?;
        let e = self.pipe(pipe)?;
        Ok(self.sign(v, e))
    }

    /// Signed incidence by index. A pipe never has both ends on one node.
    pub fn sign(&self, v: usize, e: usize) -> i8 {
        let (a, b) = self.ends[e];
        if a == v {
            -1
        } else if b == v {
            1
        } else {
            0
        }
    }

    pub fn max_nu(&self) -> f64 {
        self.pipes.iter().map(PipeSpec::nu).fold(0.0, f64::max)
    }

    /// Copy of the network with every friction coefficient replaced.
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        let pipes = self
            .pipes
            .iter()
            .map(|p| PipeSpec { theta, ..p.clone() })
            .collect();
        Self::new(self.nodes.clone(), pipes)
    }
}

/// `omega_v = 2 / sum (D^f)^2` over the pipes at a node.
pub fn omega_v(diameters: &[f64]) -> Result<f64> {
    if diameters.is_empty() {
        return Err(Error::validation("omega_v needs at least one diameter"));
    }
    if let Some(d) = diameters.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(Error::validation(format!(
            "diameter must be positive, got {d}"
        )));
    }
    Ok(2.0 / diameters.iter().map(|d| d * d).sum::<f64>())
}

/// Gain and prescribed value at a degree-one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryGain {
    pub mu: f64,
    pub u: f64,
}

pub(crate) fn check_gain(mu: f64) -> Result<()> {
    if !(mu.is_finite() && (-1.0..=1.0).contains(&mu)) {
        return Err(Error::validation(format!("gain mu = {mu} outside [-1, 1]")));
    }
    Ok(())
}

/// Outgoing invariants at a node given the incoming ones.
///
/// For two or more pipes this is the pressure-continuity/Kirchhoff map
/// `R_out^e = -R_in^e + omega_v sum_g (D^g)^2 R_in^g`; for a single pipe the
/// boundary rule `R_out = (1 - mu) u + mu R_in`.
pub fn junction_outflow(
    incoming: &[f64],
    diameters: &[f64],
    boundary: Option<BoundaryGain>,
) -> Result<Vec<f64>> {
    if incoming.len() != diameters.len() {
        return Err(Error::validation(format!(
            "{} incoming values for {} diameters",
            incoming.len(),
            diameters.len()
        )));
    }
    let omega = omega_v(diameters)?;
    match (incoming.len(), boundary) {
        (1, Some(gain)) => {
            check_gain(gain.mu)?;
            Ok(vec![boundary_outflow(gain.mu, gain.u, incoming[0])])
        }
        (1, None) => Err(Error::validation(
            "boundary node requires a gain and a control value",
        )),
        (_, Some(_)) => Err(Error::validation(
            "interior node must not be given a boundary gain",
        )),
        (_, None) => {
            let mut out = vec![0.0; incoming.len()];
            interior_outflow(incoming, diameters, omega, &mut out);
            Ok(out)
        }
    }
}

#[inline]
pub(crate) fn boundary_outflow(mu: f64, u: f64, incoming: f64) -> f64 {
    (1.0 - mu) * u + mu * incoming
}

#[inline]
pub(crate) fn weighted_sum(values: &[f64], diameters: &[f64]) -> f64 {
    values.iter().zip(diameters).map(|(r, d)| d * d * r).sum()
}

pub(crate) fn interior_outflow(incoming: &[f64], diameters: &[f64], omega: f64, out: &mut [f64]) {
    let shared = omega * weighted_sum(incoming, diameters);
    for (o, r) in out.iter_mut().zip(incoming) {
        *o = shared - r;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line() -> NetworkGraph {
        NetworkGraph::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                PipeSpec::new("e", "a", "b", 1000.0, 0.5, 0.0),
                PipeSpec::new("f", "b", "c", 500.0, 0.4, 0.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn incidence_signs() {
        let g = line();
        assert_eq!(g.incidence_sign("a", "e").unwrap(), -1);
        assert_eq!(g.incidence_sign("b", "e").unwrap(), 1);
        assert_eq!(g.incidence_sign("c", "e").unwrap(), 0);
        assert!(matches!(
            g.incidence_sign("z", "e"),
            Err(Error::Lookup { kind: "node", .. })
        ));
        assert!(matches!(
            g.incidence_sign("a", "zz"),
            Err(Error::Lookup { kind: "pipe", .. })
        ));
    }

    #[test]
    fn each_pipe_has_one_start_and_one_finish() {
        let g = line();
        for e in 0..g.pipe_count() {
            let signs: Vec<i8> = (0..g.node_count()).map(|v| g.sign(v, e)).collect();
            assert_eq!(signs.iter().filter(|&&s| s == -1).count(), 1);
            assert_eq!(signs.iter().filter(|&&s| s == 1).count(), 1);
        }
    }

    #[test]
    fn omega_examples() {
        assert_relative_eq!(omega_v(&[1.0, 1.0, 1.0]).unwrap(), 2.0 / 3.0);
        assert_eq!(omega_v(&[0.5]).unwrap(), 8.0);
        assert_relative_eq!(
            omega_v(&[0.4, 1.0]).unwrap(),
            1.724_137_931_034_482_8,
            epsilon = 1e-15
        );
        assert!(omega_v(&[]).is_err());
        assert!(omega_v(&[1.0, 0.0]).is_err());
        assert!(omega_v(&[-1.0]).is_err());
    }

    #[test]
    fn cached_omega_matches_formula() {
        let g = line();
        let b = g.node("b").unwrap();
        assert_relative_eq!(g.omega(b), 2.0 / (0.25 + 0.16));
    }

    #[test]
    fn junction_examples() {
        let (a, b) = (1.25, -7.5);
        assert_eq!(
            junction_outflow(&[a, b], &[1.0, 1.0], None).unwrap(),
            vec![b, a]
        );

        let gain = BoundaryGain { mu: 0.0, u: 5.0 };
        assert_eq!(
            junction_outflow(&[123.0], &[0.7], Some(gain)).unwrap(),
            vec![5.0]
        );

        let out = junction_outflow(&[3.0, 0.0, 0.0], &[1.0; 3], None).unwrap();
        for (o, want) in out.iter().zip([-1.0, 2.0, 2.0]) {
            assert_relative_eq!(*o, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn junction_errors() {
        assert!(junction_outflow(&[1.0, 2.0], &[1.0], None).is_err());
        assert!(junction_outflow(&[1.0], &[1.0], None).is_err());
        assert!(junction_outflow(
            &[1.0, 2.0],
            &[1.0, 1.0],
            Some(BoundaryGain { mu: 0.0, u: 0.0 })
        )
        .is_err());
        assert!(junction_outflow(&[1.0], &[1.0], Some(BoundaryGain { mu: 1.5, u: 0.0 })).is_err());
    }

    #[test]
    fn rejects_bad_graphs() {
        let nodes = || {
            vec![
                "a".to_string(),
                "b".to_string(),
                "c".to_string(),
                "d".to_string(),
            ]
        };
        // degree-0 node
        assert!(
            NetworkGraph::new(nodes(), vec![PipeSpec::new("e", "a", "b", 1.0, 1.0, 0.0)]).is_err()
        );
        // disconnected
        let err = NetworkGraph::new(
            nodes(),
            vec![
                PipeSpec::new("e", "a", "b", 1.0, 1.0, 0.0),
                PipeSpec::new("f", "c", "d", 1.0, 1.0, 0.0),
            ],
        )
        .unwrap_err();
        assert!(err.to_string().contains("disconnected"));
        // self loop, bad diameter, unknown endpoint
        let two = || vec!["a".to_string(), "b".to_string()];
        assert!(
            NetworkGraph::new(two(), vec![PipeSpec::new("e", "a", "a", 1.0, 1.0, 0.0)]).is_err()
        );
        assert!(
            NetworkGraph::new(two(), vec![PipeSpec::new("e", "a", "b", 1.0, -1.0, 0.0)]).is_err()
        );
        assert!(
            NetworkGraph::new(two(), vec![PipeSpec::new("e", "a", "x", 1.0, 1.0, 0.0)]).is_err()
        );
    }

    #[test]
    fn multi_edges_are_allowed() {
        let g = NetworkGraph::new(
            vec!["a".into(), "b".into()],
            vec![
                PipeSpec::new("e", "a", "b", 10.0, 1.0, 0.0),
                PipeSpec::new("f", "a", "b", 20.0, 0.5, 0.0),
            ],
        )
        .unwrap();
        assert_eq!(g.degree(0), 2);
        assert!(g.boundary_nodes().next().is_none());
    }

    #[test]
    fn nu_is_quarter_theta() {
        let p = PipeSpec::new("e", "a", "b", 1.0, 1.0, 0.0137);
        assert_eq!(p.nu(), 0.0137 / 4.0);
        assert_relative_eq!(p.nu(), 0.003425, epsilon = 1e-15);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn junction() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            (2usize..=6).prop_flat_map(|n| {
                (
                    proptest::collection::vec(-1e3..1e3f64, n),
                    proptest::collection::vec(0.4..1.0f64, n),
                )
            })
        }

        proptest! {
            #[test]
            fn kirchhoff_and_continuity((r_in, d) in junction()) {
                let out = junction_outflow(&r_in, &d, None).unwrap();
                let scale = r_in.iter().fold(1e-300f64, |m, x| m.max(x.abs()));
                let kirchhoff: f64 = out.iter().zip(&r_in).zip(&d).map(|((o, i), d)| d * d * (o - i)).sum();
                prop_assert!(kirchhoff.abs() <= 1e-12 * scale);
                let sums: Vec<f64> = out.iter().zip(&r_in).map(|(o, i)| o + i).collect();
                let spread = sums.iter().cloned().fold(f64::MIN, f64::max) - sums.iter().cloned().fold(f64::MAX, f64::min);
                prop_assert!(spread <= 1e-12 * scale);
            }

            #[test]
            fn linear((x, d) in junction(), alpha in -3.0..3.0f64, beta in -3.0..3.0f64, seed in any::<u64>()) {
                let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v * 0.37 + ((seed >> (i % 60)) & 0xff) as f64).collect();
                let fx = junction_outflow(&x, &d, None).unwrap();
                let fy = junction_outflow(&y, &d, None).unwrap();
                let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
                let fz = junction_outflow(&z, &d, None).unwrap();
                for i in 0..x.len() {
                    let want = alpha * fx[i] + beta * fy[i];
                    prop_assert!((fz[i] - want).abs() <= 1e-10 * (1.0 + want.abs()));
                }
            }

            #[test]
            fn equal_diameter_pair_is_involution(a in -1e3..1e3f64, b in -1e3..1e3f64, d in 0.4..1.0f64) {
                let once = junction_outflow(&[a, b], &[d, d], None).unwrap();
                let twice = junction_outflow(&once, &[d, d], None).unwrap();
                prop_assert!((twice[0] - a).abs() <= 1e-12 * (1.0 + a.abs()));
                prop_assert!((twice[1] - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}
