//! Scenario files: `key = value` lines, `#` comments. See the README for the
//! full key list.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::schedule::{Breakpoint, Schedule};
use crate::kernel::GridMode;
use crate::network::{check_gain, NetworkGraph};
use crate::physics::PressureLaw;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawSpec {
    Isothermal,
    Isentropic { a: f64, gamma: f64 },
    Aga { rst: f64, alpha: f64 },
}

/// Initial pressure profile on one pipe, in bar. Velocity is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    Constant {
        p: f64,
    },
    /// `base + h` on the first half (x < L/2), `base` on the rest.
    HalfStep {
        base: f64,
        h: f64,
    },
    /// `base + h sin(f pi x / L)`.
    Sinusoidal {
        base: f64,
        h: f64,
        f: u32,
    },
}

impl InitialCondition {
    pub fn pressure(&self, x: f64, length: f64) -> f64 {
        match *self {
            InitialCondition::Constant { p } => p,
            InitialCondition::HalfStep { base, h } => {
                if x < 0.5 * length {
                    base + h
                } else {
                    base
                }
            }
            InitialCondition::Sinusoidal { base, h, f } => {
                base + h * (f as f64 * std::f64::consts::PI * x / length).sin()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuPreset {
    Uniform(f64),
    /// 0 at nodes with even index and at 1, 5, 7, 15, 17, 29; 1 elsewhere.
    Mixed,
}

const MIXED_ODD_ZEROS: &[u64] = &[1, 5, 7, 15, 17, 29];

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub law: LawSpec,
    /// m/s
    pub c: f64,
    pub rho_ref: f64,
    /// Overrides every pipe's friction coefficient when set.
    pub theta: Option<f64>,
    /// bar
    pub rest_pressure: f64,
    /// s
    pub horizon: f64,
    pub dt: Option<f64>,
    /// Target cell size; `dt = dx / c`. Exclusive with `dt`.
    pub dx: Option<f64>,
    pub mode: GridMode,
    /// Record every `stride` steps.
    pub stride: usize,
    pub snapshot_times: Vec<f64>,
    pub mu: MuPreset,
    pub mu_overrides: BTreeMap<String, f64>,
    pub ic_s: BTreeMap<String, InitialCondition>,
    pub ic_r: BTreeMap<String, InitialCondition>,
    pub schedule_default: Option<Schedule>,
    pub schedules: BTreeMap<String, Schedule>,
    pub fit_window: Option<(f64, f64)>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            law: LawSpec::Isothermal,
            c: 340.0,
            rho_ref: 1.0,
            theta: None,
            rest_pressure: 60.0,
            horizon: 600.0,
            dt: None,
            dx: None,
            mode: GridMode::ExactAdvection,
            stride: 1,
            snapshot_times: Vec::new(),
            mu: MuPreset::Uniform(0.0),
            mu_overrides: BTreeMap::new(),
            ic_s: BTreeMap::new(),
            ic_r: BTreeMap::new(),
            schedule_default: None,
            schedules: BTreeMap::new(),
            fit_window: None,
        }
    }
}

fn num(key: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| {
            Error::parse(
                format!("key `{key}`"),
                format!("`{raw}` is not a finite number"),
            )
        })
}

fn positive(key: &str, raw: &str) -> Result<f64> {
    let x = num(key, raw)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(Error::parse(
            format!("key `{key}`"),
            format!("must be positive, got {x}"),
        ))
    }
}

fn gain(key: &str, raw: &str) -> Result<f64> {
    let x = num(key, raw)?;
    check_gain(x)
        .map_err(|_| Error::parse(format!("key `{key}`"), format!("gain {x} outside [-1, 1]")))?;
    Ok(x)
}

fn list(key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split([',', ' '])
        .filter(|s| !s.trim().is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn initial_condition(key: &str, raw: &str) -> Result<InitialCondition> {
    let fields: Vec<&str> = raw.split_whitespace().collect();
    let bad = || {
        Error::parse(
            format!("key `{key}`"),
            "expected `constant <p>`, `half_step <base> <h>` or `sinusoidal <base> <h> <f>`",
        )
    };
    Ok(match fields.as_slice() {
        ["constant", p] => InitialCondition::Constant { p: num(key, p)? },
        ["half_step", base, h] => InitialCondition::HalfStep {
            base: num(key, base)?,
            h: num(key, h)?,
        },
        ["sinusoidal", base, h, f] => InitialCondition::Sinusoidal {
            base: num(key, base)?,
            h: num(key, h)?,
            f: f.parse().map_err(|_| {
                Error::parse(
                    format!("key `{key}`"),
                    format!("frequency `{f}` is not a nonnegative integer"),
                )
            })?,
        },
        _ => return Err(bad()),
    })
}

/// `t:p:m` breakpoints separated by commas.
fn schedule(key: &str, raw: &str) -> Result<Schedule> {
    let points = raw
        .split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split(':').collect();
            match parts.as_slice() {
                [t, p, m] => Ok(Breakpoint {
                    t: num(key, t)?,
                    p: num(key, p)?,
                    m: num(key, m)?,
                }),
                _ => Err(Error::parse(
                    format!("key `{key}`"),
                    format!("breakpoint `{}` is not `t:p:m`", item.trim()),
                )),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Schedule::new(points).map_err(|e| Error::parse(format!("key `{key}`"), e.to_string()))
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let mut spec = ScenarioSpec::default();
    let mut seen = BTreeMap::new();
    let (mut a, mut gamma, mut rst, mut alpha) = (None, None, None, None);
    let mut law_name = String::from("isothermal");

    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::parse(format!("line {}", k + 1), "expected `key = value`"))?;
        if seen.insert(key.to_string(), k + 1).is_some() {
            return Err(Error::parse(
                format!("line {}", k + 1),
                format!("duplicate key `{key}`"),
            ));
        }
        match key {
            "law" => law_name = value.to_string(),
            "c" => spec.c = positive(key, value)?,
            "a" => a = Some(positive(key, value)?),
            "gamma" => gamma = Some(num(key, value)?),
            "rst" => rst = Some(positive(key, value)?),
            "alpha" => alpha = Some(num(key, value)?),
            "rho_ref" => spec.rho_ref = positive(key, value)?,
            "theta" => {
                let t = num(key, value)?;
                if t < 0.0 {
                    return Err(Error::parse(
                        "key `theta`",
                        format!("must be nonnegative, got {t}"),
                    ));
                }
                spec.theta = Some(t);
            }
            "rest_pressure" => spec.rest_pressure = positive(key, value)?,
            "horizon" => spec.horizon = positive(key, value)?,
            "dt" => spec.dt = Some(positive(key, value)?),
            "dx" => spec.dx = Some(positive(key, value)?),
            "mode" => {
                spec.mode = match value {
                    "exact" => GridMode::ExactAdvection,
                    "cfl_safe" => GridMode::CflSafe,
                    _ => {
                        return Err(Error::parse(
                            "key `mode`",
                            format!("`{value}` is not `exact` or `cfl_safe`"),
                        ))
                    }
                }
            }
            "stride" => {
                spec.stride = value
                    .parse()
                    .ok()
                    .filter(|&s: &usize| s > 0)
                    .ok_or_else(|| {
                        Error::parse(
                            "key `stride`",
                            format!("`{value}` is not a positive integer"),
                        )
                    })?
            }
            "snapshot_times" => spec.snapshot_times = list(key, value)?,
            "fit_window" => match list(key, value)?.as_slice() {
                &[t0, t1] if t0 < t1 => spec.fit_window = Some((t0, t1)),
                _ => {
                    return Err(Error::parse(
                        "key `fit_window`",
                        "expected `<t0> <t1>` with t0 < t1",
                    ))
                }
            },
            "mu" => {
                spec.mu = if value == "mixed" {
                    MuPreset::Mixed
                } else {
                    MuPreset::Uniform(gain(key, value)?)
                }
            }
            "schedule.default" => spec.schedule_default = Some(schedule(key, value)?),
            _ => {
                if let Some(node) = key.strip_prefix("mu.") {
                    spec.mu_overrides
                        .insert(node.to_string(), gain(key, value)?);
                } else if let Some(pipe) = key.strip_prefix("ic.s.") {
                    spec.ic_s
                        .insert(pipe.to_string(), initial_condition(key, value)?);
                } else if let Some(pipe) = key.strip_prefix("ic.r.") {
                    spec.ic_r
                        .insert(pipe.to_string(), initial_condition(key, value)?);
                } else if let Some(node) = key.strip_prefix("schedule.") {
                    spec.schedules
                        .insert(node.to_string(), schedule(key, value)?);
                } else {
                    return Err(Error::parse(
                        format!("line {}", k + 1),
                        format!("unknown key `{key}`"),
                    ));
                }
            }
        }
    }

    if spec.dt.is_some() && spec.dx.is_some() {
        return Err(Error::parse(
            "scenario",
            "`dt` and `dx` are mutually exclusive",
        ));
    }
    let need = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| Error::parse("scenario", format!("law `{law_name}` needs key `{name}`")))
    };
    spec.law = match law_name.as_str() {
        "isothermal" => LawSpec::Isothermal,
        "isentropic" => LawSpec::Isentropic {
            a: need("a", a)?,
            gamma: need("gamma", gamma)?,
        },
        "aga" => LawSpec::Aga {
            rst: need("rst", rst)?,
            alpha: need("alpha", alpha)?,
        },
        other => return Err(Error::parse("key `law`", format!("unknown law `{other}`"))),
    };
    Ok(spec)
}

pub fn read_scenario(path: &Path) -> Result<ScenarioSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

/// Trailing decimal digits of a node id, e.g. `17` for `"N17"`.
fn node_index(id: &str) -> Option<u64> {
    let start = id.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    id[start..].parse().ok()
}

pub fn mixed_gain(id: &str) -> Result<f64> {
    let k = node_index(id).ok_or_else(|| {
        Error::validation(format!("mixed preset needs numbered nodes, got `{id}`"))
    })?;
    Ok(if k % 2 == 0 || MIXED_ODD_ZEROS.contains(&k) {
        0.0
    } else {
        1.0
    })
}

impl ScenarioSpec {
    pub fn pressure_law(&self) -> Result<PressureLaw> {
        match self.law {
            LawSpec::Isothermal => PressureLaw::isothermal(self.c),
            LawSpec::Isentropic { a, gamma } => PressureLaw::isentropic(a, gamma, self.rho_ref),
            LawSpec::Aga { rst, alpha } => PressureLaw::aga(rst, alpha, self.rho_ref),
        }
    }

    /// One gain per node, presets first, then per-node overrides.
    pub fn resolve_mu(&self, graph: &NetworkGraph) -> Result<Vec<f64>> {
        let mut mu = graph
            .nodes()
            .iter()
            .map(|id| match self.mu {
                MuPreset::Uniform(m) => Ok(m),
                MuPreset::Mixed => mixed_gain(id),
            })
            .collect::<Result<Vec<_>>>()?;
        for (id, &m) in &self.mu_overrides {
            mu[graph.node(id)?] = m;
        }
        Ok(mu)
    }

    /// Per-node schedules; boundary nodes without an entry fall back to
    /// `schedule.default`, then to the rest pressure with zero flow.
    pub fn resolve_schedules(&self, graph: &NetworkGraph) -> Result<Vec<Option<Schedule>>> {
        for id in self.schedules.keys() {
            let v = graph.node(id)?;
            if !graph.is_boundary(v) {
                return Err(Error::validation(format!(
                    "schedule given for interior node `{id}`"
                )));
            }
        }
        Ok((0..graph.node_count())
            .map(|v| {
                graph.is_boundary(v).then(|| {
                    self.schedules
                        .get(&graph.nodes()[v])
                        .or(self.schedule_default.as_ref())
                        .cloned()
                        .unwrap_or_else(|| Schedule::constant(self.rest_pressure, 0.0))
                })
            })
            .collect())
    }

    /// Initial profile of every pipe, for S (`observer = false`) or R.
    pub fn resolve_ic(
        &self,
        graph: &NetworkGraph,
        observer: bool,
    ) -> Result<Vec<InitialCondition>> {
        let map = if observer { &self.ic_r } else { &self.ic_s };
        let mut out = vec![
            InitialCondition::Constant {
                p: self.rest_pressure
            };
            graph.pipe_count()
        ];
        for (id, ic) in map {
            out[graph.pipe(id)?] = *ic;
        }
        Ok(out)
    }

    pub fn time_step(&self) -> Option<f64> {
        self.dt.or(self.dx.map(|dx| dx / self.c))
    }
}
