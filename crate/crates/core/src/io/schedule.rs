//! Piecewise linear boundary schedules of pressure and mass flow.

use crate::error::{Error, Result};
use crate::kernel::BoundaryControl;
use crate::network::{NetworkGraph, PipeSpec};
use crate::physics::{PressureLaw, PA_PER_BAR};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    /// s
    pub t: f64,
    /// bar
    pub p: f64,
    /// kg/s, positive into the network.
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    points: Vec<Breakpoint>,
}

impl Schedule {
    pub fn new(points: Vec<Breakpoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Schedule("schedule has no breakpoints".into()));
        }
        if let Some(bad) = points
            .iter()
            .find(|b| !(b.t.is_finite() && b.p.is_finite() && b.m.is_finite()))
        {
            return Err(Error::Schedule(format!("breakpoint {bad:?} is not finite")));
        }
        if let Some(w) = points.windows(2).find(|w| w[1].t <= w[0].t) {
            return Err(Error::Schedule(format!(
                "breakpoint times must increase strictly, got {} after {}",
                w[1].t, w[0].t
            )));
        }
        Ok(Self { points })
    }

    pub fn constant(p: f64, m: f64) -> Self {
        Self {
            points: vec![Breakpoint { t: 0.0, p, m }],
        }
    }

    pub fn points(&self) -> &[Breakpoint] {
        &self.points
    }

    /// `(p, m)` at time `t`: linear between breakpoints, constant outside.
    /// Times before the first breakpoint take its values.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let pts = &self.points;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if t <= first.t {
            return (first.p, first.m);
        }
        if t >= last.t {
            return (last.p, last.m);
        }
        let k = pts.partition_point(|b| b.t <= t);
        let (a, b) = (pts[k - 1], pts[k]);
        let w = (t - a.t) / (b.t - a.t);
        (a.p + w * (b.p - a.p), a.m + w * (b.m - a.m))
    }
}

/// Incoming invariant `u = R~(rho(p)) + m / (rho A)` at a boundary node.
///
/// The same expression holds at either pipe end: injection (m > 0) raises
/// the velocity into the pipe, which is `+v` at x = 0 and `-v` at x = L.
pub fn eval_boundary_schedule(
    schedule: &Schedule,
    t: f64,
    pipe: &PipeSpec,
    law: &PressureLaw,
) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Schedule(format!("schedule evaluated at t = {t}")));
    }
    let (p, m) = schedule.at(t);
    let rho = law.density(p * PA_PER_BAR)?;
    Ok(law.rtilde(rho)? + m / (rho * pipe.cross_section()))
}

/// Schedules attached to the boundary nodes of a network.
///
/// Values are returned relative to `offset`, so states stored as deviations
/// `R - J` from a reference level get matching boundary data.
#[derive(Debug, Clone)]
pub struct ScheduleControls {
    law: PressureLaw,
    offset: f64,
    /// Per node: schedule and the single incident pipe.
    entries: Vec<Option<(Schedule, PipeSpec)>>,
}

impl ScheduleControls {
    /// `schedules[v]` must be present for every boundary node `v`.
    pub fn new(
        graph: &NetworkGraph,
        law: PressureLaw,
        schedules: Vec<Option<Schedule>>,
    ) -> Result<Self> {
        if schedules.len() != graph.node_count() {
            return Err(Error::validation("one schedule slot per node required"));
        }
        let entries = schedules
            .into_iter()
            .enumerate()
            .map(|(v, s)| {
                if !graph.is_boundary(v) {
                    return Ok(None);
                }
                let s = s.ok_or_else(|| {
                    Error::Schedule(format!(
                        "boundary node `{}` has no schedule",
                        graph.nodes()[v]
                    ))
                })?;
                let pipe = graph.pipes()[graph.incident(v)[0].pipe].clone();
                Ok(Some((s, pipe)))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            law,
            offset: 0.0,
            entries,
        })
    }

    pub fn with_offset(self, offset: f64) -> Self {
        Self { offset, ..self }
    }
}

impl BoundaryControl for ScheduleControls {
    fn incoming(&self, node: usize, t: f64) -> Result<f64> {
        match self.entries.get(node) {
            Some(Some((s, pipe))) => {
                Ok(eval_boundary_schedule(s, t, pipe, &self.law)? - self.offset)
            }
            _ => Err(Error::Schedule(format!(
                "node {node} is not a scheduled boundary node"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ramp() -> Schedule {
        Schedule::new(vec![
            Breakpoint {
                t: 0.0,
                p: 59.5,
                m: 41.788,
            },
            Breakpoint {
                t: 100.0,
                p: 60.5,
                m: 41.788,
            },
            Breakpoint {
                t: 200.0,
                p: 60.0,
                m: 41.788,
            },
        ])
        .unwrap()
    }

    #[test]
    fn interpolation_examples() {
        let s = ramp();
        assert_eq!(s.at(0.0).0, 59.5);
        assert_eq!(s.at(100.0).0, 60.5);
        assert_eq!(s.at(200.0).0, 60.0);
        assert_eq!(s.at(1e4).0, 60.0);
        assert_eq!(s.at(50.0).0, 60.0);
        assert_eq!(s.at(150.0).0, 60.25);
        assert_eq!(s.at(-5.0), (59.5, 41.788));
    }

    #[test]
    fn rejects_non_monotone() {
        let b = |t| Breakpoint { t, p: 60.0, m: 0.0 };
        assert!(matches!(
            Schedule::new(vec![b(0.0), b(0.0)]),
            Err(Error::Schedule(_))
        ));
        assert!(Schedule::new(vec![b(1.0), b(0.5)]).is_err());
        assert!(Schedule::new(vec![]).is_err());
    }

    #[test]
    fn incoming_invariant() {
        let law = PressureLaw::isothermal(340.0).unwrap();
        let pipe = PipeSpec::new("e", "a", "b", 1000.0, 0.5, 0.0);
        let rho: f64 = 60e5 / (340.0 * 340.0);
        let area = std::f64::consts::PI * 0.25 / 4.0;
        let u = eval_boundary_schedule(&Schedule::constant(60.0, 10.0), 3.0, &pipe, &law).unwrap();
        assert_relative_eq!(
            u,
            340.0 * rho.ln() + 10.0 / (rho * area),
            max_relative = 1e-14
        );
        assert!(eval_boundary_schedule(&Schedule::constant(60.0, 0.0), -1.0, &pipe, &law).is_err());
    }
}
