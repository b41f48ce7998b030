//! Subcommand bodies. Each returns the process outcome; I/O and config
//! problems surface as errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{info, warn};
use stokes_core::continuation::{continue_to_target_with, ContinuationRecord, FamilyMember};
use stokes_core::domain::{make_grid, ConformalGrid, SolverState, WaveParameters};
use stokes_core::fields::FieldKit;
use stokes_core::solver::wave_height;
use stokes_core::verify::{
    crest_angle_degrees, run_all_on, verification_grid, ExcisionPolicy, VerificationReport,
};

use crate::config::{load_state, params_from_state, RunConfig};
use crate::output::{write_atomic, write_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    NonConvergence,
    VerificationFailed,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PolicyArgs {
    pub epsilon: Option<f64>,
    pub margin: Option<f64>,
}

impl PolicyArgs {
    fn resolve(&self, grid: &ConformalGrid, g: f64) -> ExcisionPolicy {
        let mut policy = ExcisionPolicy::for_grid(grid, g);
        if let Some(e) = self.epsilon {
            policy.epsilon = e;
        }
        if let Some(m) = self.margin {
            policy.strict_margin = m;
        }
        policy
    }
}

fn grid_for(state: &SolverState, grid: Option<(usize, usize)>) -> Result<ConformalGrid> {
    Ok(match grid {
        Some((n, m)) => make_grid(n, m, state)?,
        None => verification_grid(state)?,
    })
}

fn log_lines(records: &[ContinuationRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        writeln!(out, "{}", serde_json::to_string(r)?)?;
    }
    Ok(out)
}

fn default_log_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".log.jsonl");
    out.with_file_name(name)
}

pub fn solve(config: &Path, out: &Path, log_path: Option<&Path>) -> Result<Outcome> {
    let cfg = RunConfig::load(config)?;
    let sched = cfg.schedule(true)?;
    let log_path = log_path.map_or_else(|| default_log_path(out), Path::to_path_buf);
    let result = continue_to_target_with(&cfg.params, &sched, |m| {
        info!(
            "converged {:?} s = {:.6} N = {}",
            m.record.target, m.record.s, m.record.modes
        );
    });
    let (state, members, outcome) = match result {
        Ok(members) => {
            let state = members.last().expect("family is never empty").state.clone();
            (state, members, Outcome::Ok)
        }
        Err(fail) => {
            warn!("{fail}");
            (fail.last_good, fail.completed, Outcome::NonConvergence)
        }
    };
    let records: Vec<_> = members.into_iter().map(|m| m.record).collect();
    write_text(out, &state.to_json())?;
    write_text(&log_path, &log_lines(&records)?)?;
    Ok(outcome)
}

pub fn fields(state_path: &Path, grid: Option<(usize, usize)>, out: &Path) -> Result<Outcome> {
    let state = load_state(state_path)?;
    let params = params_from_state(&state)?;
    let grid = match grid {
        Some((n, m)) => make_grid(n, m, &state)?,
        None => {
            let n = state.modes();
            make_grid(n, n / 4, &state)?
        }
    };
    let fg = FieldKit::new(&state, &params)?.sample_grid(&grid)?;
    write_atomic(out, |w| fg.write_csv(w))?;
    Ok(Outcome::Ok)
}

pub fn verify(
    state_path: &Path,
    config: Option<&Path>,
    policy: PolicyArgs,
    grid: Option<(usize, usize)>,
    out: &Path,
) -> Result<Outcome> {
    let state = load_state(state_path)?;
    let params = match config {
        Some(p) => RunConfig::load(p)?.params,
        None => params_from_state(&state)?,
    };
    let grid = grid_for(&state, grid)?;
    let report = run_all_on(
        &state,
        &params,
        Some(policy.resolve(&grid, params.g)),
        &grid,
    );
    for c in report.checks.iter().filter(|c| !c.pass) {
        warn!(
            "{} failed: worst margin {:?} at {:?}",
            c.name, c.worst_margin, c.worst_location
        );
    }
    write_text(out, &report.to_json())?;
    Ok(if report.overall_pass {
        Outcome::Ok
    } else {
        Outcome::VerificationFailed
    })
}

pub const SUMMARY_HEADER: &str = "s,c,H,crest_angle,worst_px_margin,worst_py_margin";

fn margin(report: &VerificationReport, name: &str) -> String {
    report
        .entry(name)
        .and_then(|e| e.strict_margin.or(e.worst_margin))
        .map_or_else(String::new, |m| format!("{m:?}"))
}

struct Sweep<'a> {
    dir: &'a Path,
    params: &'a WaveParameters,
    levels: Option<usize>,
    policy: PolicyArgs,
    summary: String,
    log: String,
    all_pass: bool,
    error: Option<anyhow::Error>,
}

impl Sweep<'_> {
    fn member(&mut self, index: usize, m: &FamilyMember) -> Result<()> {
        let state = &m.state;
        let grid = match self.levels {
            Some(levels) => make_grid(state.modes(), levels, state)?,
            None => verification_grid(state)?,
        };
        let policy = self.policy.resolve(&grid, self.params.g);
        let report = run_all_on(state, self.params, Some(policy), &grid);
        self.all_pass &= report.overall_pass;
        let stem = format!("member_{index:03}");
        write_text(
            &self.dir.join(format!("{stem}.state.json")),
            &state.to_json(),
        )?;
        write_text(
            &self.dir.join(format!("{stem}.report.json")),
            &report.to_json(),
        )?;
        writeln!(
            self.summary,
            "{:?},{:?},{:?},{:?},{},{}",
            m.record.s,
            state.c,
            wave_height(state)?,
            crest_angle_degrees(state)?,
            margin(&report, "pressure_x"),
            margin(&report, "pressure_y"),
        )?;
        writeln!(self.log, "{}", serde_json::to_string(&m.record)?)?;
        write_text(&self.dir.join("summary.csv"), &self.summary)?;
        write_text(&self.dir.join("log.jsonl"), &self.log)?;
        info!(
            "{stem}: s = {:.6}, pass = {}",
            m.record.s, report.overall_pass
        );
        Ok(())
    }
}

pub fn sweep(config: &Path, dir: &Path, policy: PolicyArgs) -> Result<Outcome> {
    let cfg = RunConfig::load(config)?;
    let sched = cfg.schedule(false)?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut sweep = Sweep {
        dir,
        params: &cfg.params,
        levels: cfg.levels,
        policy,
        summary: format!("{SUMMARY_HEADER}\n"),
        log: String::new(),
        all_pass: true,
        error: None,
    };
    let mut index = 0;
    let result = continue_to_target_with(&cfg.params, &sched, |m| {
        if sweep.error.is_none() {
            sweep.error = sweep.member(index, m).err();
        }
        index += 1;
    });
    if let Some(e) = sweep.error {
        return Err(e);
    }
    match result {
        Ok(_) => Ok(if sweep.all_pass {
            Outcome::Ok
        } else {
            Outcome::VerificationFailed
        }),
        Err(fail) => {
            warn!("{fail}");
            write_text(&dir.join("last_good.state.json"), &fail.last_good.to_json())?;
            Ok(Outcome::NonConvergence)
        }
    }
}
