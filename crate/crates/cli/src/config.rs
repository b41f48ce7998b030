//! Run configuration: the wave parameters plus grid size and schedule.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use stokes_core::continuation::{ContinuationSchedule, ModeRefinement};
use stokes_core::domain::{AmplitudeTarget, SolverState, WaveParameters};
use stokes_core::solver::{mean_depth, wave_height};

#[derive(Debug, Clone, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub params: WaveParameters,
    /// Initial collocation intervals.
    #[serde(rename = "N")]
    pub modes: usize,
    /// Rows of the verification grid; `N/4` when absent.
    #[serde(rename = "M", default)]
    pub levels: Option<usize>,
    #[serde(default)]
    pub schedule: Vec<AmplitudeTarget>,
    #[serde(default)]
    pub refinement: Option<ModeRefinement>,
    #[serde(default)]
    pub newton_tol: Option<f64>,
    #[serde(default)]
    pub max_newton_iters: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.params.validate()?;
        if let Some(m) = cfg.levels {
            if m < stokes_core::domain::MIN_GRID_LEVELS {
                bail!("M = {m} is below the minimum of 4");
            }
        }
        Ok(cfg)
    }

    /// Continuation schedule with the targets given, or the single config
    /// target when none are listed and `solo` is set.
    pub fn schedule(&self, solo: bool) -> Result<ContinuationSchedule> {
        let mut targets = self.schedule.clone();
        if targets.is_empty() && solo && !self.params.target.is_flat() {
            targets.push(self.params.target);
        }
        let mut sched = ContinuationSchedule::new(targets);
        sched.initial_modes = self.modes;
        if let Some(r) = self.refinement {
            sched.refinement = r;
        }
        sched.refinement.max_modes = sched.refinement.max_modes.max(self.modes);
        if let Some(tol) = self.newton_tol {
            sched.newton_tol = tol;
        }
        if let Some(it) = self.max_newton_iters {
            sched.max_newton_iters = it;
        }
        sched.validate()?;
        Ok(sched)
    }
}

pub fn load_state(path: &Path) -> Result<SolverState> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading state {}", path.display()))?;
    let state = SolverState::from_json(&text)
        .with_context(|| format!("parsing state {}", path.display()))?;
    state.validate()?;
    Ok(state)
}

/// `g = 1`, `P0 = 0` and the depth implied by the state.
pub fn params_from_state(state: &SolverState) -> Result<WaveParameters> {
    let d = mean_depth(state)?;
    let target = AmplitudeTarget::Height(wave_height(state)?);
    Ok(WaveParameters::new(d, target)?)
}

/// Parses `"256x64"`.
pub fn parse_grid(arg: &str) -> std::result::Result<(usize, usize), String> {
    let (n, m) = arg
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got {arg:?}"))?;
    let n = n
        .trim()
        .parse()
        .map_err(|e| format!("bad N in {arg:?}: {e}"))?;
    let m = m
        .trim()
        .parse()
        .map_err(|e| format!("bad M in {arg:?}: {e}"))?;
    Ok((n, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_args() {
        assert_eq!(parse_grid("256x64"), Ok((256, 64)));
        assert_eq!(parse_grid("8X4"), Ok((8, 4)));
        assert!(parse_grid("256").is_err());
        assert!(parse_grid("ax4").is_err());
    }

    #[test]
    fn solo_target_fills_empty_schedule() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"d": 1.0, "target": {"kind": "height", "value": 0.1}, "N": 32}"#,
        )
        .unwrap();
        assert_eq!(cfg.params.g, 1.0);
        let s = cfg.schedule(true).unwrap();
        assert_eq!(s.targets, vec![AmplitudeTarget::Height(0.1)]);
        assert_eq!(s.initial_modes, 32);
        assert!(cfg.schedule(false).unwrap().targets.is_empty());
    }

    #[test]
    fn max_modes_covers_n() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"d": 1.0, "target": {"kind": "height", "value": 0.0}, "N": 1024,
                "refinement": {"max_modes": 64}}"#,
        )
        .unwrap();
        assert_eq!(cfg.schedule(true).unwrap().refinement.max_modes, 1024);
    }
}
