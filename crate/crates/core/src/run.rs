//! Time loop with probes, CSV logging and snapshots.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::diagnostics::{com_displacement, probe_pressure, solid_mass_loss};
use crate::error::{Error, Result};
use crate::output::{write_background_vtk, write_solid_vtk, CsvLog, TimeSample};
use crate::scenario::ScenarioConfig;
use crate::sim::Simulation;

/// Passed to the progress callback after every step.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub max_speed: f64,
    pub mass_loss: f64,
}

/// Outcome of a completed run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub time: f64,
    pub samples: Vec<TimeSample>,
    pub snapshots: Vec<PathBuf>,
    /// Logged steps at which the penalty power was negative (should stay 0).
    pub negative_power_steps: usize,
    pub clamped_points: usize,
}

/// Observation hook invoked after every step, before output.
pub type StepHook<'a> = dyn FnMut(&Simulation) -> Result<()> + 'a;

pub fn sample(sim: &Simulation, config: &ScenarioConfig) -> Result<TimeSample> {
    let fluid = sim.fluid.as_ref();
    let solid = sim.solid.as_ref().map(|s| &s.body);
    let probe = |i: usize| fluid.map_or(Ok(f64::NAN), |f| probe_pressure(f, config.probes[i]));
    Ok(TimeSample {
        t: sim.time,
        p_det: probe(0)?,
        p_wall: probe(1)?,
        com_x: solid.map_or(0.0, |s| com_displacement(s)[0]),
        f_pen_x: sim.last.penalty_force[0],
        mass_loss: solid.map_or(0.0, solid_mass_loss),
    })
}

/// Runs `config` to its end time. With `out_dir`, writes `series.csv`, VTK
/// snapshots and the effective configuration there.
pub fn run(
    config: &ScenarioConfig,
    out_dir: Option<&Path>,
    progress: &mut dyn FnMut(&Progress),
    hook: &mut StepHook<'_>,
) -> Result<RunSummary> {
    let mut sim = config.build()?;
    let dt = config.dt();
    let n_steps = (config.end_time / dt - 1e-9).ceil() as usize;
    // Step index closest to each requested snapshot time the run reaches.
    let mut snapshot_steps: Vec<(usize, f64)> = config
        .output
        .snapshots
        .iter()
        .filter(|&&t| t <= config.end_time + 0.5 * dt)
        .map(|&t| (((t / dt).round() as usize).clamp(1, n_steps), t))
        .collect();
    snapshot_steps.sort_by_key(|s| s.0);

    let mut csv = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("config.json"), config.to_json()?)?;
            Some(CsvLog::create(&dir.join("series.csv"))?)
        }
        None => None,
    };
    let mut summary = RunSummary {
        steps: 0,
        time: 0.0,
        samples: Vec::new(),
        snapshots: Vec::new(),
        negative_power_steps: 0,
        clamped_points: 0,
    };
    let first = sample(&sim, config)?;
    if let Some(c) = csv.as_mut() {
        c.push(&first)?;
    }
    summary.samples.push(first);

    for step in 1..=n_steps {
        let report = match sim.advance(dt) {
            Ok(r) => r,
            Err(e) => {
                if let Some(dir) = out_dir {
                    if let Some(c) = csv.as_mut() {
                        c.flush()?;
                    }
                    write_snapshot(&sim, config, dir, "last_good")?;
                }
                return Err(e);
            }
        };
        hook(&sim)?;
        summary.clamped_points += report.clamped;
        let snap_here: Vec<f64> = snapshot_steps.iter().filter(|s| s.0 == step).map(|s| s.1).collect();
        if step % config.output.log_every == 0 || step == n_steps || !snap_here.is_empty() {
            if report.penalty_power < 0.0 {
                summary.negative_power_steps += 1;
            }
            let row = sample(&sim, config)?;
            if let Some(c) = csv.as_mut() {
                c.push(&row)?;
            }
            summary.samples.push(row);
        }
        if let Some(dir) = out_dir {
            for t in snap_here {
                let tag = format!("{:.0}us", t * 1e6);
                summary.snapshots.extend(write_snapshot(&sim, config, dir, &tag)?);
            }
        }
        let max_speed = sim.fluid.as_ref().map_or(0.0, |f| {
            f.y.values.iter().map(|y| (y[1] * y[1] + y[2] * y[2]).sqrt()).fold(0.0, f64::max)
        });
        progress(&Progress {
            step,
            time: sim.time,
            dt,
            max_speed,
            mass_loss: summary.samples.last().map_or(0.0, |s| s.mass_loss),
        });
    }
    if let Some(c) = csv.as_mut() {
        c.flush()?;
    }
    summary.steps = sim.steps;
    summary.time = sim.time;
    Ok(summary)
}

fn write_snapshot(sim: &Simulation, config: &ScenarioConfig, dir: &Path, tag: &str) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(f) = &sim.fluid {
        let path = dir.join(format!("background_{tag}.vtk"));
        write_background_vtk(File::create(&path)?, f, config.output.lattice, sim.time)?;
        written.push(path);
    }
    if let Some(s) = &sim.solid {
        let path = dir.join(format!("solid_{tag}.vtk"));
        write_solid_vtk(File::create(&path)?, &s.body, sim.time)?;
        written.push(path);
    }
    Ok(written)
}

/// Prints one line per `every` steps to `out`.
pub fn progress_printer<W: Write>(mut out: W, every: usize) -> impl FnMut(&Progress) {
    move |p: &Progress| {
        if p.step % every.max(1) == 0 {
            let _ = writeln!(
                out,
                "step {:>7}  t = {:.4e} s  dt = {:.3e} s  max|v| = {:.3e} m/s  mass loss = {:.4}",
                p.step, p.time, p.dt, p.max_speed, p.mass_loss
            );
        }
    }
}

/// Reads and validates a JSON configuration file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text)
}
