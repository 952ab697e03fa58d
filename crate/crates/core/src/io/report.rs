//! CSV and text artifacts. Floats use Rust's `Display`, which is locale
//! independent and round-trips.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::{DecayFit, SnapshotFrame};
use crate::error::{Error, Result};
use crate::io::run::{Certificate, ObserveRun, Rates, SimulateRun};
use crate::network::NetworkGraph;
use crate::theory::NOT_COMPUTED;

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn series_csv(header: &str, times: &[f64], values: &[f64]) -> String {
    let mut out = format!("t,{header}\n");
    for (t, v) in times.iter().zip(values) {
        writeln!(out, "{t},{v}").unwrap();
    }
    out
}

pub fn snapshot_csv(graph: &NetworkGraph, frame: &SnapshotFrame) -> String {
    let mut out = String::from("pipe,x,delta_plus,delta_minus\n");
    for p in &frame.pipes {
        let id = &graph.pipes()[p.pipe].id;
        for ((x, dp), dm) in p.x.iter().zip(&p.delta_plus).zip(&p.delta_minus) {
            writeln!(out, "{id},{x},{dp},{dm}").unwrap();
        }
    }
    out
}

fn fit_lines(out: &mut String, name: &str, fit: &Option<DecayFit>) {
    match fit {
        Some(f) => {
            writeln!(out, "{name}_rate = {}", f.rate).unwrap();
            writeln!(out, "{name}_r_squared = {}", f.r_squared).unwrap();
            writeln!(out, "{name}_samples = {}", f.samples).unwrap();
        }
        None => writeln!(out, "{name}_rate = none").unwrap(),
    }
}

pub fn rates_text(rates: &Rates) -> String {
    let mut out = String::new();
    writeln!(out, "fit_window = {} {}", rates.window.0, rates.window.1).unwrap();
    fit_lines(&mut out, "l0", &rates.l0);
    fit_lines(&mut out, "l1", &rates.l1);
    match rates.sync_time {
        Some(t) => {
            writeln!(out, "finite_time_sync = yes").unwrap();
            writeln!(out, "sync_time = {t}").unwrap();
        }
        None => writeln!(out, "finite_time_sync = no").unwrap(),
    }
    out
}

pub fn snapshot_name(t: f64) -> String {
    format!("t_{t}.csv")
}

pub fn write_snapshots(dir: &Path, graph: &NetworkGraph, frames: &[SnapshotFrame]) -> Result<()> {
    let sub = dir.join("snapshots");
    create_dir(&sub)?;
    for frame in frames {
        write(
            &sub.join(snapshot_name(frame.t)),
            &snapshot_csv(graph, frame),
        )?;
    }
    Ok(())
}

pub fn write_observe(
    dir: &Path,
    graph: &NetworkGraph,
    run: &ObserveRun,
    rates: &Rates,
) -> Result<()> {
    create_dir(dir)?;
    write(
        &dir.join("l0.csv"),
        &series_csv("l0", &run.series.times, &run.series.l0),
    )?;
    let (t1, l1) = run.series.l1_series();
    write(&dir.join("l1.csv"), &series_csv("l1", &t1, &l1))?;
    let mut res = String::from("t,node,residual\n");
    for r in &run.residuals {
        writeln!(res, "{},{},{}", r.t, graph.nodes()[r.node], r.residual).unwrap();
    }
    write(&dir.join("residuals.csv"), &res)?;
    write(&dir.join("rates.txt"), &rates_text(rates))?;
    write_snapshots(dir, graph, &run.snapshots)
}

pub fn certificate_text(cert: &Certificate) -> String {
    let d = &cert.decay;
    let w = &cert.wellposedness;
    let mut out = String::new();
    let mut line = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
    line("horizon", cert.horizon.to_string());
    line("reference_level_j", cert.reference_level.to_string());
    line("m", cert.m.to_string());
    line("m_tilde", d.inputs.m_tilde.to_string());
    line("b_tilde", d.inputs.b_tilde.to_string());
    line("nu_max", d.inputs.nu_max.to_string());
    line("c", d.inputs.c.to_string());
    line("t0_min", d.inputs.t0_min.to_string());
    line("t0_max", d.inputs.t0_max.to_string());
    line("l_kontr", w.l_kontr.to_string());
    line("t_threshold", w.t_threshold.to_string());
    line(
        "epsilon",
        w.epsilon
            .map_or_else(|| "invalid".to_string(), |e| e.to_string()),
    );
    line("gronwall_factor", w.gronwall_factor.to_string());
    line(
        "apriori_bound",
        w.apriori_bound()
            .map_or_else(|| "invalid".to_string(), |e| e.to_string()),
    );
    line("c0", d.c0.to_string());
    line("c1", d.c1.to_string());
    line("upsilon0", d.upsilon0.to_string());
    line("l0_window_factor", d.l0_window_factor.to_string());
    line("delta_nu_t0", d.delta_nu_t0.to_string());
    line("h1_lhs", d.h1_lhs.to_string());
    line("h1_rhs", d.h1_rhs.to_string());
    line("h1_holds", d.h1_holds.to_string());
    line("decay_eligible", cert.decay_eligible.to_string());
    for item in NOT_COMPUTED {
        writeln!(out, "not_computed = {item}").unwrap();
    }
    out
}

pub fn write_certificate(dir: &Path, cert: &Certificate) -> Result<()> {
    create_dir(dir)?;
    write(&dir.join("certificate.txt"), &certificate_text(cert))
}

/// `level` is the reference level the run's grids are stored against.
pub fn write_simulate(
    dir: &Path,
    graph: &NetworkGraph,
    run: &SimulateRun,
    level: f64,
) -> Result<()> {
    create_dir(dir)?;
    let mut out = String::from("t,node,pressure_bar\n");
    for p in &run.pressures {
        writeln!(out, "{},{},{}", p.t, graph.nodes()[p.node], p.pressure).unwrap();
    }
    write(&dir.join("pressures.csv"), &out)?;
    let mut state = String::from("pipe,x,r_plus,r_minus\n");
    for g in &run.state.grids {
        let id = &graph.pipes()[g.pipe].id;
        for i in 0..g.n_cells() {
            let (p, m) = (g.r_plus[i] + level, g.r_minus[i] + level);
            writeln!(state, "{id},{},{p},{m}", g.cell_center(i)).unwrap();
        }
    }
    write(&dir.join("state.csv"), &state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_decimal_output() {
        let csv = series_csv("l0", &[0.0, 0.5, 1234567.25], &[1e-20, 3.0, 0.125]);
        assert_eq!(
            csv,
            "t,l0\n0,0.00000000000000000001\n0.5,3\n1234567.25,0.125\n"
        );
        assert_eq!(snapshot_name(90.0), "t_90.csv");
        assert_eq!(snapshot_name(2.5), "t_2.5.csv");
    }
}
