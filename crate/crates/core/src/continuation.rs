//! Amplitude continuation from flat water toward the extreme wave.

use serde::{Deserialize, Serialize};

use crate::domain::{flat_water_state, AmplitudeTarget, SolverState, WaveParameters};
use crate::error::{Result, WaveError};
use crate::solver::{
    crest_speed_ratio, linear_seed, newton_core, tail_energy_fraction, wave_height, Collocation,
    NewtonOutcome,
};

/// When and how far to refine the mode count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRefinement {
    /// Double N while the energy above N/2 exceeds this fraction of the total.
    #[serde(default = "default_tail_fraction")]
    pub tail_fraction: f64,
    /// Upper bound on N.
    #[serde(default = "default_max_modes")]
    pub max_modes: usize,
    /// At `max_modes`, a state whose tail fraction exceeds this is rejected
    /// as unresolved and continuation stops.
    #[serde(default = "default_unresolved_tail")]
    pub unresolved_tail: f64,
}

fn default_tail_fraction() -> f64 {
    1e-14
}
fn default_max_modes() -> usize {
    512
}
fn default_unresolved_tail() -> f64 {
    1e-6
}

impl Default for ModeRefinement {
    fn default() -> Self {
        ModeRefinement {
            tail_fraction: default_tail_fraction(),
            max_modes: default_max_modes(),
            unresolved_tail: default_unresolved_tail(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSchedule {
    pub targets: Vec<AmplitudeTarget>,
    pub max_newton_iters: usize,
    pub newton_tol: f64,
    pub refinement: ModeRefinement,
    /// Mode count the branch starts with.
    pub initial_modes: usize,
}

impl ContinuationSchedule {
    pub fn new(targets: Vec<AmplitudeTarget>) -> Self {
        ContinuationSchedule {
            targets,
            max_newton_iters: 20,
            newton_tol: 1e-12,
            refinement: ModeRefinement::default(),
            initial_modes: 64,
        }
    }

    /// Targets must move monotonically toward the extreme: heights
    /// increasing, crest speed ratios decreasing, and any height targets
    /// before the first crest-speed target.
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(WaveError::InvalidSchedule("newton_tol must be > 0".into()));
        }
        if self.max_newton_iters == 0 {
            return Err(WaveError::InvalidSchedule(
                "max_newton_iters must be > 0".into(),
            ));
        }
        if self.initial_modes < crate::domain::MIN_GRID_MODES
            || self.refinement.max_modes < self.initial_modes
        {
            return Err(WaveError::InvalidSchedule(format!(
                "mode counts: initial {} max {}",
                self.initial_modes, self.refinement.max_modes
            )));
        }
        let mut seen_speed = false;
        for (i, t) in self.targets.iter().enumerate() {
            t.validate()?;
            if let Some(prev) = i.checked_sub(1).map(|j| self.targets[j]) {
                let ok = match (prev, *t) {
                    (AmplitudeTarget::Height(a), AmplitudeTarget::Height(b)) => b > a,
                    (AmplitudeTarget::CrestSpeedRatio(a), AmplitudeTarget::CrestSpeedRatio(b)) => {
                        b < a
                    }
                    (AmplitudeTarget::Height(_), AmplitudeTarget::CrestSpeedRatio(_)) => true,
                    (AmplitudeTarget::CrestSpeedRatio(_), AmplitudeTarget::Height(_)) => false,
                };
                if !ok {
                    return Err(WaveError::InvalidSchedule(format!(
                        "target {i} ({t:?}) does not move toward the extreme wave"
                    )));
                }
            }
            if matches!(t, AmplitudeTarget::CrestSpeedRatio(_)) {
                seen_speed = true;
            } else if seen_speed {
                return Err(WaveError::InvalidSchedule(
                    "height targets must precede crest speed targets".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Continuation log line, one per converged target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRecord {
    pub target: AmplitudeTarget,
    pub s: f64,
    pub c: f64,
    pub m: f64,
    #[serde(rename = "Q")]
    pub q_head: f64,
    pub residual_norm: f64,
    #[serde(rename = "N")]
    pub modes: usize,
    pub iters: usize,
}

/// A converged family member.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub state: SolverState,
    pub record: ContinuationRecord,
}

/// Continuation stopped early. Everything completed so far is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationFailure {
    pub cause: WaveError,
    pub failed_target: AmplitudeTarget,
    pub completed: Vec<FamilyMember>,
    /// Last converged state on the branch (possibly an intermediate step).
    pub last_good: SolverState,
    /// Crest speed ratio of `last_good`: how close to the extreme it got.
    pub last_good_s: f64,
}

impl std::fmt::Display for ContinuationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "continuation stopped at target {:?} after {} members (last good s = {:.6}): {}",
            self.failed_target,
            self.completed.len(),
            self.last_good_s,
            self.cause
        )
    }
}

impl std::error::Error for ContinuationFailure {}

fn measure(state: &SolverState, kind: AmplitudeTarget) -> Result<f64> {
    match kind {
        AmplitudeTarget::Height(_) => wave_height(state),
        AmplitudeTarget::CrestSpeedRatio(_) => crest_speed_ratio(state),
    }
}

fn max_step(kind: AmplitudeTarget, params: &WaveParameters) -> f64 {
    match kind {
        AmplitudeTarget::Height(_) => 0.05 * params.d.min(1.0),
        AmplitudeTarget::CrestSpeedRatio(_) => 0.05,
    }
}

struct Branch {
    current: SolverState,
    /// previous point on the branch at the same mode count, for the secant predictor
    previous: Option<(f64, SolverState)>,
    current_value: f64,
    colloc: Collocation,
}

impl Branch {
    fn solve(
        &self,
        start: &SolverState,
        params: &WaveParameters,
        target: AmplitudeTarget,
        schedule: &ContinuationSchedule,
    ) -> Result<NewtonOutcome> {
        newton_core(
            &self.colloc,
            start,
            params,
            target,
            schedule.newton_tol,
            schedule.max_newton_iters,
        )
    }

    fn predict(&self, params: &WaveParameters, target: AmplitudeTarget) -> SolverState {
        if self.current.is_flat() {
            return linear_seed(params, self.colloc.n, target);
        }
        match &self.previous {
            Some((v0, s0)) if s0.modes() == self.current.modes() && *v0 != self.current_value => {
                let t = (target.value() - self.current_value) / (self.current_value - v0);
                let lerp = |a: f64, b: f64| b + t * (b - a);
                let mut out = self.current.clone();
                // extrapolate surface amplitudes, which vary smoothly along the branch
                if let (Ok(a0), Ok(a1)) = (
                    s0.surface_coefficients(),
                    self.current.surface_coefficients(),
                ) {
                    let a: Vec<f64> = a0.iter().zip(&a1).map(|(x, y)| lerp(*x, *y)).collect();
                    let c = lerp(s0.c, self.current.c);
                    let m = lerp(s0.m, self.current.m);
                    let q = lerp(s0.q_head, self.current.q_head);
                    if let Ok(s) = SolverState::from_surface_coefficients(&a, c, m, q) {
                        out = s;
                    }
                }
                out
            }
            _ => self.current.clone(),
        }
    }

    fn accept(&mut self, state: SolverState, value: f64) {
        let old = std::mem::replace(&mut self.current, state);
        self.previous = Some((self.current_value, old));
        self.current_value = value;
    }

    fn refine(&mut self, modes: usize) {
        self.current = self.current.with_modes(modes);
        self.previous = None;
        self.colloc = Collocation::new(modes);
    }
}

/// Runs the schedule, calling `on_member` as each target converges.
///
/// Sub-steps between targets are chosen adaptively (halved on failure,
/// grown on fast convergence). After each target the mode count is doubled
/// while the tail energy rule asks for it.
pub fn continue_to_target_with<F>(
    params: &WaveParameters,
    schedule: &ContinuationSchedule,
    mut on_member: F,
) -> std::result::Result<Vec<FamilyMember>, ContinuationFailure>
where
    F: FnMut(&FamilyMember),
{
    let flat = flat_water_state(params, schedule.initial_modes);
    let fail_early = |cause: WaveError, target: AmplitudeTarget| ContinuationFailure {
        cause,
        failed_target: target,
        completed: Vec::new(),
        last_good: flat.clone(),
        last_good_s: 1.0,
    };
    if let Err(e) = params.validate() {
        return Err(fail_early(e, params.target));
    }
    if let Err(e) = schedule.validate() {
        return Err(fail_early(e, params.target));
    }
    if schedule.targets.is_empty() {
        let member = FamilyMember {
            record: make_record(&flat, params.target.with_value(0.0), 0.0, 0).expect("flat record"),
            state: flat,
        };
        on_member(&member);
        return Ok(vec![member]);
    }

    let mut branch = Branch {
        current: flat.clone(),
        previous: None,
        current_value: 0.0,
        colloc: Collocation::new(schedule.initial_modes),
    };
    let mut members = Vec::new();
    let mut kind: Option<AmplitudeTarget> = None;

    for &target in &schedule.targets {
        let fail =
            |cause: WaveError, branch: &Branch, members: &Vec<FamilyMember>| ContinuationFailure {
                cause,
                failed_target: target,
                completed: members.clone(),
                last_good: branch.current.clone(),
                last_good_s: crest_speed_ratio(&branch.current).unwrap_or(f64::NAN),
            };

        if kind.map(|k| std::mem::discriminant(&k)) != Some(std::mem::discriminant(&target)) {
            // switching parameterisation: restart the secant history
            branch.current_value = match measure(&branch.current, target) {
                Ok(v) => v,
                Err(e) => return Err(fail(e, &branch, &members)),
            };
            branch.previous = None;
            kind = Some(target);
        }

        let goal = target.value();
        let mut last = match step_to(&mut branch, params, schedule, target, goal) {
            Ok(out) => out,
            Err(e) => return Err(fail(e, &branch, &members)),
        };

        // mode refinement at the target
        loop {
            let tail = match tail_energy_fraction(&branch.current) {
                Ok(t) => t,
                Err(e) => return Err(fail(e, &branch, &members)),
            };
            let n = branch.current.modes();
            if tail <= schedule.refinement.tail_fraction {
                break;
            }
            if 2 * n > schedule.refinement.max_modes {
                if tail > schedule.refinement.unresolved_tail {
                    return Err(fail(
                        WaveError::Unresolved { modes: n, tail },
                        &branch,
                        &members,
                    ));
                }
                log::warn!("target {target:?}: tail fraction {tail:e} at the mode cap {n}");
                break;
            }
            log::info!(
                "target {target:?}: tail fraction {tail:e}, doubling N to {}",
                2 * n
            );
            branch.refine(2 * n);
            let start = branch.current.clone();
            match branch.solve(&start, params, target, schedule) {
                Ok(out) => {
                    branch.current = out.state.clone();
                    last = out;
                }
                Err(e) => return Err(fail(e, &branch, &members)),
            }
        }

        let member = match make_record(
            &branch.current,
            target,
            last.residual_norm(),
            last.iterations,
        ) {
            Ok(record) => FamilyMember {
                state: branch.current.clone(),
                record,
            },
            Err(e) => return Err(fail(e, &branch, &members)),
        };
        log::info!(
            "converged {:?}: s = {:.6}, c = {:.8}, N = {}",
            target,
            member.record.s,
            member.record.c,
            member.record.modes
        );
        on_member(&member);
        members.push(member);
    }
    Ok(members)
}

/// Ordered family of converged states, one per schedule target. An empty
/// schedule yields the flat state alone.
pub fn continue_to_target(
    params: &WaveParameters,
    schedule: &ContinuationSchedule,
) -> std::result::Result<Vec<FamilyMember>, ContinuationFailure> {
    continue_to_target_with(params, schedule, |_| {})
}

fn make_record(
    state: &SolverState,
    target: AmplitudeTarget,
    residual_norm: f64,
    iters: usize,
) -> Result<ContinuationRecord> {
    Ok(ContinuationRecord {
        target,
        s: crest_speed_ratio(state)?,
        c: state.c,
        m: state.m,
        q_head: state.q_head,
        residual_norm,
        modes: state.modes(),
        iters,
    })
}

const MIN_STEP_FRACTION: f64 = 1e-4;

fn step_to(
    branch: &mut Branch,
    params: &WaveParameters,
    schedule: &ContinuationSchedule,
    kind: AmplitudeTarget,
    goal: f64,
) -> Result<NewtonOutcome> {
    let full = (goal - branch.current_value).abs();
    if full == 0.0 {
        let start = branch.current.clone();
        let out = branch.solve(&start, params, kind, schedule)?;
        branch.current = out.state.clone();
        return Ok(out);
    }
    let direction = (goal - branch.current_value).signum();
    let cap = max_step(kind, params);
    let min_step = MIN_STEP_FRACTION * cap;
    let mut step = full.min(cap);
    if branch.current.is_flat() {
        // keep the first step inside the linear regime
        step = step.min(0.2 * cap);
    }
    loop {
        let remaining = (goal - branch.current_value).abs();
        let this = step.min(remaining);
        let value = if this == remaining {
            goal
        } else {
            branch.current_value + direction * this
        };
        let sub_target = kind.with_value(value);
        let guess = branch.predict(params, sub_target);
        match branch.solve(&guess, params, sub_target, schedule) {
            Ok(out) => {
                branch.accept(out.state.clone(), value);
                if value == goal {
                    return Ok(out);
                }
                if out.iterations <= 4 {
                    step = (step * 1.5).min(cap);
                }
            }
            Err(e) => {
                log::debug!("sub-step to {value} failed ({e}); halving");
                step *= 0.5;
                if step < min_step {
                    return Err(e);
                }
            }
        }
    }
}
