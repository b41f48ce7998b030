//! Machine-checkable sign and identity assertions on the pressure and the
//! auxiliary function `f = (c-u)v - gx` over the half-period conformal
//! grid, with a quarter disc of radius ε around the wave crest excised.
//!
//! Every check reports a signed slack: positive means satisfied, and the
//! node with the smallest slack is the reported worst location.
//!
//! On the trough-line the relevant identities are `v(π, y) = v_y(π, y) = 0`,
//! mirroring the crest-line statement by antisymmetry of `v`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::{make_grid, ConformalGrid, SolverState, WaveParameters};
use crate::error::{Result, WaveError};
use crate::fields::{governing_residuals, FieldGrid, FieldKit, NodeSample};
use crate::harmonic::{profile_ratios, HarmonicSeries};
use crate::oracles::{horizontal_mean_velocity, star_laplacian};

pub const RESIDUAL_TOL: f64 = 1e-7;
pub const SUPERHARMONIC_REL_TOL: f64 = 1e-3;
pub const MEAN_CURRENT_TOL: f64 = 1e-8;
pub const CREST_ANGLE_BAND: (f64, f64) = (105.0, 135.0);
pub const MEAN_CURRENT_DEPTHS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcisionPolicy {
    /// Excision radius in conformal distance from the crest `(0, 0)`.
    pub epsilon: f64,
    /// Strict inequalities must hold with at least this slack.
    pub strict_margin: f64,
    /// Tolerance for equalities on the crest and trough lines.
    pub line_tol: f64,
}

impl ExcisionPolicy {
    /// Two cell diagonals, `10⁻⁸ g` and `10⁻⁷ g`.
    pub fn for_grid(grid: &ConformalGrid, g: f64) -> Self {
        ExcisionPolicy {
            epsilon: minimum_epsilon(grid),
            strict_margin: 1e-8 * g,
            line_tol: 1e-7 * g,
        }
    }

    pub fn validate(&self, grid: &ConformalGrid) -> Result<()> {
        if !(self.epsilon >= minimum_epsilon(grid) * (1.0 - 1e-12)) {
            return Err(WaveError::InvalidParameters(format!(
                "epsilon {} below two cell diagonals ({})",
                self.epsilon,
                minimum_epsilon(grid)
            )));
        }
        if !(self.strict_margin > 0.0 && self.line_tol > 0.0) {
            return Err(WaveError::InvalidParameters(
                "margins must be positive".into(),
            ));
        }
        Ok(())
    }

    fn excised(&self, n: &NodeSample) -> bool {
        n.q.hypot(n.p) < self.epsilon
    }
}

pub fn minimum_epsilon(grid: &ConformalGrid) -> f64 {
    2.0 * grid.cell_diagonal()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub q: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub pass: bool,
    /// Smallest signed slack over everything the check tested; `null` when
    /// nothing was tested.
    pub worst_margin: Option<f64>,
    pub worst_location: Option<Location>,
    pub tolerance: f64,
    pub epsilon: Option<f64>,
    /// Zero-amplitude input: strict sign conditions were skipped.
    #[serde(default)]
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Smallest slack among the strict sign conditions alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckEntry>,
    pub overall_pass: bool,
    /// Smallest excision radius at which every strict sign condition holds.
    #[serde(default)]
    pub min_passing_epsilon: Option<f64>,
}

impl VerificationReport {
    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Running minimum of slack with its location. Ties keep the first node.
#[derive(Debug, Clone, Copy)]
struct Worst {
    slack: f64,
    at: Option<Location>,
    strict: Option<f64>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            slack: f64::INFINITY,
            at: None,
            strict: None,
        }
    }

    fn push(&mut self, slack: f64, q: f64, p: f64) {
        let slack = if slack.is_nan() { -f64::MAX } else { slack };
        if self.at.is_none() || slack < self.slack {
            self.slack = slack;
            self.at = Some(Location { q, p });
        }
    }

    fn node(&mut self, slack: f64, n: &NodeSample) {
        self.push(slack, n.q, n.p);
    }

    /// A strict sign condition, also tracked on its own.
    fn strict_node(&mut self, slack: f64, n: &NodeSample) {
        self.node(slack, n);
        let slack = if slack.is_nan() { -f64::MAX } else { slack };
        self.strict = Some(self.strict.map_or(slack, |s| s.min(slack)));
    }

    fn entry(self, name: &str, tolerance: f64, epsilon: Option<f64>) -> CheckEntry {
        CheckEntry {
            name: name.to_string(),
            pass: self.at.is_none() || self.slack > 0.0,
            worst_margin: self.at.map(|_| self.slack),
            worst_location: self.at,
            tolerance,
            epsilon,
            degenerate: false,
            note: None,
            strict_margin: self.strict,
        }
    }
}

fn is_degenerate(fields: &FieldGrid) -> bool {
    fields.nodes.iter().all(|n| n.v == 0.0)
}

fn interior(fields: &FieldGrid) -> impl Iterator<Item = &NodeSample> {
    let g = &fields.grid;
    (1..g.levels).flat_map(move |j| (1..g.modes).map(move |k| fields.at(j, k)))
}

fn line_columns(fields: &FieldGrid) -> impl Iterator<Item = &NodeSample> {
    let g = &fields.grid;
    (0..=g.levels).flat_map(move |j| [fields.at(j, 0), fields.at(j, g.modes)])
}

/// `P_x < 0` strictly between the crest and trough lines, `P_x = 0` on them.
pub fn check_pressure_x(fields: &FieldGrid, policy: &ExcisionPolicy) -> CheckEntry {
    let mut worst = Worst::new();
    let degenerate = is_degenerate(fields);
    if !degenerate {
        for n in interior(fields).filter(|n| !policy.excised(n)) {
            worst.strict_node(-n.p_x - policy.strict_margin, n);
        }
    }
    for n in line_columns(fields).filter(|n| !policy.excised(n)) {
        worst.node(policy.line_tol - n.p_x.abs(), n);
    }
    let mut e = worst.entry("pressure_x", policy.strict_margin, Some(policy.epsilon));
    e.degenerate = degenerate;
    if degenerate {
        e.note = Some("degenerate amplitude: strict part skipped".into());
    }
    e
}

/// `P_y < 0` at every node outside the excision and `P_y = -g` on the bed.
pub fn check_pressure_y(fields: &FieldGrid, policy: &ExcisionPolicy) -> CheckEntry {
    let mut worst = Worst::new();
    for n in fields.nodes.iter().filter(|n| !policy.excised(n)) {
        worst.strict_node(-n.p_y - policy.strict_margin, n);
    }
    for n in fields.bed() {
        worst.node(policy.line_tol - (n.p_y + fields.g).abs(), n);
    }
    worst.entry("pressure_y", policy.strict_margin, Some(policy.epsilon))
}

/// `f = 0` on the crest-line, `f = -gπ` on the trough-line, `f < 0` and
/// `f_q < 0` inside, and `f` non-increasing along the surface.
pub fn check_f_properties(fields: &FieldGrid, policy: &ExcisionPolicy) -> CheckEntry {
    let grid = &fields.grid;
    let g = fields.g;
    let mut worst = Worst::new();
    for j in 0..=grid.levels {
        let crest = fields.at(j, 0);
        worst.node(policy.line_tol - crest.f.abs(), crest);
        let trough = fields.at(j, grid.modes);
        worst.node(policy.line_tol - (trough.f + g * PI).abs(), trough);
    }
    for n in interior(fields).filter(|n| !policy.excised(n)) {
        worst.strict_node(-n.f - policy.strict_margin, n);
        worst.strict_node(-n.f_q - policy.strict_margin, n);
    }
    let round = 1e-13 * g;
    for pair in fields.surface().windows(2) {
        worst.node(pair[0].f - pair[1].f + round, &pair[1]);
    }
    worst.entry("f_properties", policy.strict_margin, Some(policy.epsilon))
}

/// Anything that can report the pressure at an arbitrary conformal point.
pub trait PressureOracle {
    fn pressure(&self, theta: f64, p: f64) -> f64;

    /// `P` at many `θ` on the line `p`.
    fn pressure_line(&self, p: f64, thetas: &[f64]) -> Vec<f64> {
        thetas.iter().map(|&t| self.pressure(t, p)).collect()
    }
}

impl PressureOracle for FieldKit {
    fn pressure(&self, theta: f64, p: f64) -> f64 {
        self.pressure_at(theta, p)
    }

    fn pressure_line(&self, p: f64, thetas: &[f64]) -> Vec<f64> {
        FieldKit::pressure_line(self, p, thetas)
    }
}

/// Finite-difference `ΔP` against `-2(u_x² + u_y²)` on interior nodes.
///
/// The stencil lives in `(q, p)`; the physical Laplacian is the conformal
/// one times `|dζ/dz|² = (c-u)² + v²`. Each row gets the step that balances
/// the Richardson truncation error, estimated from the spectrum at that
/// depth, against rounding, capped at half a grid cell.
pub fn check_superharmonic<O: PressureOracle>(
    fields: &FieldGrid,
    spectrum: &HarmonicSeries,
    oracle: &O,
) -> CheckEntry {
    let grid = &fields.grid;
    let c = fields.c;
    let max_step = 0.5 * grid.dq().min(grid.dp());
    let mut worst = Worst::new();
    let mut rhs_max = 0.0f64;
    let mut lap_max = 0.0f64;
    let offsets = [-2.0, -1.0, 0.0, 1.0, 2.0];
    for j in 1..grid.levels {
        let p = grid.p_nodes[j];
        let step = stencil_step(spectrum, p, max_step);
        // the centre line carries all five θ offsets, the others only θ_k
        let centre_thetas: Vec<f64> = (1..grid.modes)
            .flat_map(|k| offsets.map(|o| grid.theta[k] + o * step / c))
            .collect();
        let centre = oracle.pressure_line(p, &centre_thetas);
        let lines: Vec<Vec<f64>> = offsets
            .iter()
            .map(|&o| {
                if o == 0.0 {
                    Vec::new()
                } else {
                    oracle.pressure_line(p + o * step, &grid.theta[1..grid.modes])
                }
            })
            .collect();
        for k in 1..grid.modes {
            let n = fields.at(j, k);
            let i = k - 1;
            let lookup = |dq: f64, dp: f64| {
                if dp == 0.0 {
                    centre[5 * i + (2.0 + dq / step).round() as usize]
                } else {
                    lines[(2.0 + dp / step).round() as usize][i]
                }
            };
            let lap_qp = star_laplacian(lookup, step, step);
            let cu = c - n.u;
            let lap = lap_qp * (cu * cu + n.v * n.v);
            let rhs = -2.0 * (n.u_x * n.u_x + n.u_y * n.u_y);
            rhs_max = rhs_max.max(rhs.abs());
            lap_max = lap_max.max(lap.abs());
            if rhs != 0.0 {
                let rel = (lap - rhs).abs() / rhs.abs();
                worst.node(SUPERHARMONIC_REL_TOL - rel, n);
                if rhs >= 0.0 {
                    worst.node(-f64::MIN_POSITIVE, n);
                }
            }
        }
    }
    if rhs_max == 0.0 {
        let mut e = Worst::new();
        let abs_tol = 1e-8 * fields.g;
        if let Some(n) = interior(fields).next() {
            e.node(abs_tol - lap_max, n);
        }
        let mut entry = e.entry("superharmonic", abs_tol, None);
        entry.degenerate = true;
        entry.note = Some("both sides vanish: degenerate amplitude".into());
        return entry;
    }
    worst.entry("superharmonic", SUPERHARMONIC_REL_TOL, None)
}

/// Minimises `S δ⁴/90 + 20 ε/δ²` with `S = Σ |aₙ| Rₙ(p) kₙ⁶` bounding the
/// sixth derivatives of the series on the row `p`.
fn stencil_step(spectrum: &HarmonicSeries, p: f64, max_step: f64) -> f64 {
    let (ys, xs) = (
        (p + spectrum.m).max(0.0) / spectrum.c,
        spectrum.m / spectrum.c,
    );
    let mut sixth = 0.0;
    for (i, &a) in spectrum.amplitudes.iter().enumerate() {
        let n = (i + 1) as f64;
        let k = n / spectrum.c;
        let (rs, rc) = profile_ratios(n * ys, n * xs);
        sixth += a.abs() * rs.max(rc) * k.powi(6);
    }
    if sixth == 0.0 {
        return max_step;
    }
    (450.0 * f64::EPSILON / sixth).powf(1.0 / 6.0).min(max_step)
}

/// Included crest angle `2 arctan(1/max|η'|)` in degrees, the slope taken
/// at `4N + 1` points of the half period.
pub fn crest_angle_degrees(state: &SolverState) -> Result<f64> {
    let series = HarmonicSeries::new(state)?;
    let samples = 4 * state.modes().max(1);
    let mut steepest = 0.0f64;
    for k in 0..=samples {
        let pt = series.eval(PI * k as f64 / samples as f64, 0.0);
        steepest = steepest.max((pt.h_q / pt.h_p).abs());
    }
    Ok(2.0 * (1.0 / steepest).atan().to_degrees())
}

/// Crest angle trend along a family ordered by decreasing `s`.
pub fn check_crest_angle(states: &[SolverState]) -> Result<CheckEntry> {
    if states.len() < 3 {
        return Err(WaveError::InsufficientFamily(states.len()));
    }
    let angles = states
        .iter()
        .map(crest_angle_degrees)
        .collect::<Result<Vec<_>>>()?;
    let mut worst = Worst::new();
    for (i, w) in angles.windows(2).enumerate() {
        worst.push(w[0] - w[1], (i + 1) as f64, 0.0);
    }
    let decreasing = worst.at.is_none() || worst.slack > 0.0;
    let last = *angles.last().unwrap();
    let (lo, hi) = CREST_ANGLE_BAND;
    let band = (last - lo).min(hi - last);
    worst.push(band, (angles.len() - 1) as f64, 0.0);
    let mut e = worst.entry("crest_angle", 0.0, None);
    e.pass = decreasing && band >= 0.0;
    e.note = Some(format!(
        "angles (deg): {}; location q indexes the family member",
        angles
            .iter()
            .map(|a| format!("{a:.3}"))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    Ok(e)
}

fn single_crest_angle(state: &SolverState) -> CheckEntry {
    let mut worst = Worst::new();
    let note = match crest_angle_degrees(state) {
        Ok(a) => {
            worst.push((a - CREST_ANGLE_BAND.0).min(180.0 - a), 0.0, 0.0);
            format!("angle {a:.3} deg; the monotone trend needs a family")
        }
        Err(e) => {
            worst.push(f64::NAN, 0.0, 0.0);
            e.to_string()
        }
    };
    let mut e = worst.entry("crest_angle", 0.0, None);
    e.pass = worst.slack >= 0.0;
    e.note = Some(note);
    e
}

fn residual_entry(name: &str, value: f64, at: Option<(f64, f64)>) -> CheckEntry {
    let mut w = Worst::new();
    let (q, p) = at.unwrap_or((0.0, 0.0));
    w.push(RESIDUAL_TOL - value, q, p);
    w.entry(name, RESIDUAL_TOL, None)
}

/// `u`, `P` even and `v`, `f + gx` odd in `q`, checked by evaluating every
/// node's mirror image; plus `v = v_y = 0` on the crest and trough lines.
pub fn check_symmetry(fields: &FieldGrid, kit: &FieldKit, policy: &ExcisionPolicy) -> CheckEntry {
    let mut worst = Worst::new();
    let c = fields.c;
    let scale = fields.g.max(c * c);
    let tol = policy.line_tol;
    let grid = &fields.grid;
    for j in 0..=grid.levels {
        let mirrored: Vec<f64> = grid.theta.iter().map(|t| -t).collect();
        let row = kit.sample_line(grid.p_nodes[j], &mirrored);
        for k in 0..=grid.modes {
            let n = fields.at(j, k);
            match row.as_ref().map(|r| r[k]) {
                Ok(m) => {
                    let err = [
                        (m.u - n.u).abs(),
                        (m.v + n.v).abs(),
                        (m.pressure - n.pressure).abs() / scale,
                        ((m.f + fields.g * m.x) + (n.f + fields.g * n.x)).abs() / scale,
                    ]
                    .into_iter()
                    .fold(0.0, f64::max);
                    worst.node(tol - err, n);
                }
                Err(_) => worst.node(f64::NAN, n),
            }
        }
    }
    for n in line_columns(fields) {
        worst.node(tol - n.v.abs().max(n.v_y.abs()), n);
    }
    worst.entry("symmetry", tol, None)
}

/// Mean horizontal velocity on the bed and four levels between bed and
/// trough, by trapezoid quadrature in `x`.
pub fn mean_current_levels(fields: &FieldGrid, kit: &FieldKit) -> Result<Vec<(f64, f64)>> {
    let trough_y = fields.at(0, fields.grid.modes).y;
    let bed_y = -fields.d;
    let half = fields.grid.modes.max(64);
    (0..MEAN_CURRENT_DEPTHS)
        .map(|i| {
            let y = bed_y + (trough_y - bed_y) * i as f64 / MEAN_CURRENT_DEPTHS as f64;
            horizontal_mean_velocity(kit, y, half).map(|k| (y, k))
        })
        .collect()
}

pub fn check_mean_current(fields: &FieldGrid, kit: &FieldKit) -> CheckEntry {
    let mut worst = Worst::new();
    match mean_current_levels(fields, kit) {
        Ok(levels) => {
            let (lo, hi) = levels
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, k)| {
                    (lo.min(k), hi.max(k))
                });
            for &(y, k) in &levels {
                worst.push(MEAN_CURRENT_TOL - k.abs(), 0.0, y);
            }
            worst.push(MEAN_CURRENT_TOL - (hi - lo), 0.0, levels[0].0);
            // the location's p slot carries the physical level y
            let mut e = worst.entry("mean_current", MEAN_CURRENT_TOL, None);
            e.note = Some(format!(
                "kappa at y = {}",
                levels
                    .iter()
                    .map(|(y, k)| format!("{y:.4}: {k:.3e}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
            e
        }
        Err(err) => {
            worst.push(f64::NAN, 0.0, 0.0);
            let mut e = worst.entry("mean_current", MEAN_CURRENT_TOL, None);
            e.note = Some(err.to_string());
            e
        }
    }
}

/// Smallest excision radius, never below two cell diagonals, outside which
/// every strict sign condition holds.
pub fn min_passing_epsilon(fields: &FieldGrid, policy: &ExcisionPolicy) -> f64 {
    let mut radius = minimum_epsilon(&fields.grid);
    let degenerate = is_degenerate(fields);
    let m = policy.strict_margin;
    let mut bump = |n: &NodeSample| {
        let r = n.q.hypot(n.p);
        // any epsilon strictly beyond r excludes the node
        radius = radius.max(r * (1.0 + 1e-12) + f64::MIN_POSITIVE);
    };
    for n in &fields.nodes {
        if !(-n.p_y > m) {
            bump(n);
        }
    }
    for n in interior(fields) {
        if (!degenerate && !(-n.p_x > m)) || !(-n.f > m) || !(-n.f_q > m) {
            bump(n);
        }
    }
    radius
}

/// `N = state modes` columns and `M = max(N/4, 4)` rows.
pub fn verification_grid(state: &SolverState) -> Result<ConformalGrid> {
    let n = state.modes().max(crate::domain::MIN_GRID_MODES);
    let levels = (n / 4).max(crate::domain::MIN_GRID_LEVELS);
    make_grid(n, levels, state)
}

/// Every check on the [`verification_grid`] of `state`.
pub fn run_all(
    state: &SolverState,
    params: &WaveParameters,
    policy: Option<ExcisionPolicy>,
) -> VerificationReport {
    match verification_grid(state) {
        Ok(grid) => run_all_on(state, params, policy, &grid),
        Err(e) => failed_report("grid", e),
    }
}

fn failed_report(name: &str, err: WaveError) -> VerificationReport {
    let mut w = Worst::new();
    w.push(f64::NAN, 0.0, 0.0);
    let mut e = w.entry(name, 0.0, None);
    e.note = Some(err.to_string());
    VerificationReport {
        checks: vec![e],
        overall_pass: false,
        min_passing_epsilon: None,
    }
}

pub fn run_all_on(
    state: &SolverState,
    params: &WaveParameters,
    policy: Option<ExcisionPolicy>,
    grid: &ConformalGrid,
) -> VerificationReport {
    let policy = policy.unwrap_or_else(|| ExcisionPolicy::for_grid(grid, params.g));
    if let Err(e) = policy.validate(grid) {
        return failed_report("policy", e);
    }
    let kit = match FieldKit::new(state, params) {
        Ok(k) => k,
        Err(e) => return failed_report("fields", e),
    };
    let fields = match kit.sample_grid(grid) {
        Ok(f) => f,
        Err(e) => return failed_report("fields", e),
    };
    let res = governing_residuals(&fields);

    let mut euler = residual_entry(
        "euler",
        res.euler.max(res.dynamic),
        Some(if res.euler >= res.dynamic {
            res.euler_location
        } else {
            res.dynamic_location
        }),
    );
    euler.note = Some(format!(
        "momentum {:.3e}, surface |P - P0| {:.3e}",
        res.euler, res.dynamic
    ));
    let mass = residual_entry("mass_vorticity", res.continuity.max(res.irrotational), None);
    let kinematic = residual_entry("kinematic", res.kinematic, None);

    let checks = vec![
        check_pressure_x(&fields, &policy),
        check_pressure_y(&fields, &policy),
        check_f_properties(&fields, &policy),
        check_superharmonic(&fields, kit.series(), &kit),
        single_crest_angle(state),
        euler,
        mass,
        kinematic,
        check_symmetry(&fields, &kit, &policy),
        check_mean_current(&fields, &kit),
    ];
    let overall_pass = checks.iter().all(|c| c.pass);
    VerificationReport {
        checks,
        overall_pass,
        min_passing_epsilon: Some(min_passing_epsilon(&fields, &policy)),
    }
}
