//! Shared value types: physical parameters, the solver unknowns and the
//! conformal collocation grid.
//!
//! Lengths are scaled so the wavelength is exactly `2π`; gravity defaults
//! to one. Only the half period `θ = q/c ∈ [0, π]` is stored, the other
//! half follows from the crest-line symmetry (u, P, h even; v odd).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};

/// Physical wavelength. Fixed, not configurable.
pub const WAVELENGTH: f64 = 2.0 * PI;

/// Largest `sinh`/`cosh` argument accepted when converting between the
/// stored bed-anchored coefficients and surface amplitudes.
pub const MAX_SINH_ARGUMENT: f64 = 700.0;

/// Continuation or solve target: crest-to-trough height `H` or the crest
/// speed ratio `s = (c - u_crest) / c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum AmplitudeTarget {
    Height(f64),
    CrestSpeedRatio(f64),
}

impl AmplitudeTarget {
    pub fn value(&self) -> f64 {
        match *self {
            AmplitudeTarget::Height(h) => h,
            AmplitudeTarget::CrestSpeedRatio(s) => s,
        }
    }

    /// Same kind, different value.
    pub fn with_value(&self, value: f64) -> Self {
        match self {
            AmplitudeTarget::Height(_) => AmplitudeTarget::Height(value),
            AmplitudeTarget::CrestSpeedRatio(_) => AmplitudeTarget::CrestSpeedRatio(value),
        }
    }

    /// Zero amplitude: `H = 0` or `s = 1`.
    pub fn is_flat(&self) -> bool {
        match *self {
            AmplitudeTarget::Height(h) => h == 0.0,
            AmplitudeTarget::CrestSpeedRatio(s) => s == 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AmplitudeTarget::Height(h) if !(h.is_finite() && h >= 0.0) => Err(
                WaveError::InvalidParameters(format!("wave height must be >= 0, got {h}")),
            ),
            AmplitudeTarget::CrestSpeedRatio(s) if !(s > 0.0 && s <= 1.0) => {
                Err(WaveError::InvalidParameters(format!(
                    "crest speed ratio must lie in (0, 1], got {s}"
                )))
            }
            _ => Ok(()),
        }
    }
}

fn default_g() -> f64 {
    1.0
}

/// Physical constants and gauge choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParameters {
    #[serde(default = "default_g")]
    pub g: f64,
    pub d: f64,
    #[serde(rename = "P0", default)]
    pub p0: f64,
    pub target: AmplitudeTarget,
}

impl WaveParameters {
    pub fn new(d: f64, target: AmplitudeTarget) -> Result<Self> {
        let params = WaveParameters {
            g: 1.0,
            d,
            p0: 0.0,
            target,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(WaveError::InvalidParameters(format!(
                "g must be > 0, got {}",
                self.g
            )));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(WaveError::InvalidParameters(format!(
                "d must be > 0, got {}",
                self.d
            )));
        }
        if !self.p0.is_finite() {
            return Err(WaveError::InvalidParameters("P0 must be finite".into()));
        }
        self.target.validate()
    }

    /// Zero-amplitude limit of the wave speed, `c² = g tanh(d)` at unit
    /// wavenumber.
    pub fn linear_speed(&self) -> f64 {
        (self.g * self.d.tanh()).sqrt()
    }

    pub fn wavelength(&self) -> f64 {
        WAVELENGTH
    }
}

/// Unknowns of the fixed-boundary problem.
///
/// The height function is
/// `h(q,p) = b₀(p+m) + Σ_{n≥1} bₙ sinh(n(p+m)/c) cos(nq/c)`,
/// which vanishes on the bed `p = -m` term by term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState", into = "RawState")]
pub struct SolverState {
    /// `b[0]` multiplies `p + m`; `b[n]` multiplies the n-th sinh/cos mode.
    pub b: Vec<f64>,
    pub c: f64,
    pub m: f64,
    /// Hydraulic head.
    pub q_head: f64,
}

#[derive(Serialize, Deserialize)]
struct RawState {
    b: Vec<f64>,
    c: f64,
    m: f64,
    #[serde(rename = "Q")]
    q_head: f64,
    #[serde(rename = "N")]
    n: usize,
}

impl TryFrom<RawState> for SolverState {
    type Error = String;

    fn try_from(raw: RawState) -> std::result::Result<Self, String> {
        if raw.b.len() != raw.n + 1 {
            return Err(format!(
                "N = {} but b has {} entries (expected N + 1)",
                raw.n,
                raw.b.len()
            ));
        }
        Ok(SolverState {
            b: raw.b,
            c: raw.c,
            m: raw.m,
            q_head: raw.q_head,
        })
    }
}

impl From<SolverState> for RawState {
    fn from(s: SolverState) -> Self {
        RawState {
            n: s.modes(),
            b: s.b,
            c: s.c,
            m: s.m,
            q_head: s.q_head,
        }
    }
}

impl SolverState {
    /// Number of oscillatory modes N.
    pub fn modes(&self) -> usize {
        self.b.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.b.iter().all(|v| v.is_finite())
            && self.c.is_finite()
            && self.m.is_finite()
            && self.q_head.is_finite();
        if !finite || self.c <= 0.0 || self.m <= 0.0 || self.b.is_empty() {
            return Err(WaveError::InvalidState);
        }
        Ok(())
    }

    /// True when every oscillatory coefficient is zero.
    pub fn is_flat(&self) -> bool {
        self.b[1..].iter().all(|&v| v == 0.0)
    }

    /// Surface amplitudes `aₙ = bₙ sinh(n m / c)`, so that
    /// `h(q, 0) = b₀ m + Σ aₙ cos(nq/c)`. Entry 0 is `b₀`.
    pub fn surface_coefficients(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let ratio = self.m / self.c;
        let mut a = Vec::with_capacity(self.b.len());
        a.push(self.b[0]);
        for (n, &bn) in self.b.iter().enumerate().skip(1) {
            let arg = n as f64 * ratio;
            if arg > MAX_SINH_ARGUMENT {
                if bn == 0.0 {
                    a.push(0.0);
                    continue;
                }
                return Err(WaveError::Overflow { argument: arg });
            }
            a.push(bn * arg.sinh());
        }
        Ok(a)
    }

    /// Inverse of [`SolverState::surface_coefficients`].
    pub fn from_surface_coefficients(a: &[f64], c: f64, m: f64, q_head: f64) -> Result<Self> {
        if a.is_empty() || !(c > 0.0) || !(m > 0.0) {
            return Err(WaveError::InvalidState);
        }
        let ratio = m / c;
        let mut b = Vec::with_capacity(a.len());
        b.push(a[0]);
        for (n, &an) in a.iter().enumerate().skip(1) {
            let arg = n as f64 * ratio;
            if arg > MAX_SINH_ARGUMENT {
                if an == 0.0 {
                    b.push(0.0);
                    continue;
                }
                return Err(WaveError::Overflow { argument: arg });
            }
            b.push(an / arg.sinh());
        }
        let state = SolverState { b, c, m, q_head };
        state.validate()?;
        Ok(state)
    }

    /// Same wave with the mode count changed to `modes`, padding with zeros
    /// or truncating.
    pub fn with_modes(&self, modes: usize) -> SolverState {
        let mut b = self.b.clone();
        b.resize(modes + 1, 0.0);
        SolverState { b, ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Collocation nodes on the half-period rectangle `[0, cπ] × [-m, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalGrid {
    /// Number of θ intervals; there are `modes + 1` surface nodes.
    pub modes: usize,
    /// Number of vertical intervals; there are `levels + 1` rows.
    pub levels: usize,
    /// `θ_k = kπ/N`, `k = 0..=N`.
    pub theta: Vec<f64>,
    /// `q_k = c θ_k`.
    pub q_nodes: Vec<f64>,
    /// `p_j = -m j/M`, `j = 0..=M`; row 0 is the surface, row M the bed.
    pub p_nodes: Vec<f64>,
    pub c: f64,
    pub m: f64,
}

pub const MIN_GRID_MODES: usize = 8;
pub const MIN_GRID_LEVELS: usize = 4;

/// Builds the collocation grid for `state`. Endpoints `θ = 0, π` and
/// `p = 0, -m` are exact.
pub fn make_grid(modes: usize, levels: usize, state: &SolverState) -> Result<ConformalGrid> {
    if modes < MIN_GRID_MODES || levels < MIN_GRID_LEVELS {
        return Err(WaveError::GridTooCoarse { modes, levels });
    }
    state.validate()?;
    let theta: Vec<f64> = (0..=modes)
        .map(|k| {
            if k == modes {
                PI
            } else {
                PI * (k as f64 / modes as f64)
            }
        })
        .collect();
    let q_nodes = theta.iter().map(|t| state.c * t).collect();
    let p_nodes = (0..=levels)
        .map(|j| -state.m * (j as f64 / levels as f64))
        .collect();
    Ok(ConformalGrid {
        modes,
        levels,
        theta,
        q_nodes,
        p_nodes,
        c: state.c,
        m: state.m,
    })
}

impl ConformalGrid {
    pub fn node_count(&self) -> usize {
        (self.modes + 1) * (self.levels + 1)
    }

    /// Row-major index over (p, q).
    pub fn index(&self, level: usize, k: usize) -> usize {
        level * (self.modes + 1) + k
    }

    pub fn dq(&self) -> f64 {
        self.c * PI / self.modes as f64
    }

    pub fn dp(&self) -> f64 {
        self.m / self.levels as f64
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.dq().hypot(self.dp())
    }
}

/// The flat-water state at the linear dispersion speed:
/// `b₀ = 1/c`, `m = c d`, `Q = c² + 2gd`, all modes zero.
pub fn flat_water_state(params: &WaveParameters, modes: usize) -> SolverState {
    let c = params.linear_speed();
    flat_water_state_with_speed(params, modes, c)
}

pub(crate) fn flat_water_state_with_speed(
    params: &WaveParameters,
    modes: usize,
    c: f64,
) -> SolverState {
    let mut b = vec![0.0; modes + 1];
    b[0] = 1.0 / c;
    SolverState {
        b,
        c,
        m: c * params.d,
        q_head: c * c + 2.0 * params.g * params.d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> WaveParameters {
        WaveParameters::new(1.0, AmplitudeTarget::Height(0.0)).unwrap()
    }

    #[test]
    fn grid_nodes_and_endpoints() {
        let flat = flat_water_state(&params(), 8);
        let grid = make_grid(8, 4, &flat).unwrap();
        assert_eq!(grid.theta.len(), 9);
        assert_eq!(grid.p_nodes.len(), 5);
        for (k, t) in grid.theta.iter().enumerate() {
            assert!((t - k as f64 * PI / 8.0).abs() < 1e-15);
        }
        for (j, p) in grid.p_nodes.iter().enumerate() {
            assert!((p + flat.m * j as f64 / 4.0).abs() < 1e-15);
        }
        assert_eq!(grid.theta[0], 0.0);
        assert_eq!(grid.theta[8], PI);
        assert_eq!(grid.p_nodes[0], 0.0);
        assert_eq!(grid.p_nodes[4], -flat.m);

        let big = make_grid(256, 64, &flat).unwrap();
        assert_eq!((big.theta.len(), big.p_nodes.len()), (257, 65));
        assert_eq!(big.node_count(), 257 * 65);
        assert_eq!(*big.theta.last().unwrap(), PI);
    }

    #[test]
    fn grid_rejects_coarse() {
        let flat = flat_water_state(&params(), 8);
        assert!(matches!(
            make_grid(7, 4, &flat),
            Err(WaveError::GridTooCoarse { .. })
        ));
        assert!(matches!(
            make_grid(8, 3, &flat),
            Err(WaveError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn flat_state_closure() {
        let p = params();
        let flat = flat_water_state(&p, 16);
        let c = flat.c;
        assert!((c - 1f64.tanh().sqrt()).abs() < 1e-15);
        assert!((c - 0.872694).abs() < 1e-6);
        assert_eq!(flat.b[0], 1.0 / c);
        assert!(flat.is_flat());
        // (Q - 2g h)(h_q² + h_p²) at p = 0 with h = m/c, h_p = 1/c
        let h = flat.b[0] * flat.m;
        let closure = (flat.q_head - 2.0 * p.g * h) * flat.b[0] * flat.b[0];
        assert!((closure - 1.0).abs() < 1e-14);
    }

    #[test]
    fn parameter_validation() {
        assert!(WaveParameters::new(0.0, AmplitudeTarget::Height(0.1)).is_err());
        assert!(WaveParameters::new(1.0, AmplitudeTarget::Height(-0.1)).is_err());
        assert!(WaveParameters::new(1.0, AmplitudeTarget::CrestSpeedRatio(0.0)).is_err());
        assert!(WaveParameters::new(1.0, AmplitudeTarget::CrestSpeedRatio(1.2)).is_err());
        assert!(WaveParameters::new(1.0, AmplitudeTarget::CrestSpeedRatio(1.0)).is_ok());
    }

    #[test]
    fn parameters_json_schema() {
        let text = r#"{"g": 1.0, "d": 1.5, "P0": 0.25, "target": {"kind": "crest_speed_ratio", "value": 0.3}}"#;
        let p: WaveParameters = serde_json::from_str(text).unwrap();
        assert_eq!(p.d, 1.5);
        assert_eq!(p.p0, 0.25);
        assert_eq!(p.target, AmplitudeTarget::CrestSpeedRatio(0.3));
        let back: serde_json::Value = serde_json::to_value(p).unwrap();
        assert_eq!(back["target"]["kind"], "crest_speed_ratio");
        assert_eq!(back["P0"], 0.25);
    }

    #[test]
    fn state_json_keys_and_n_check() {
        let flat = flat_water_state(&params(), 8);
        let v: serde_json::Value = serde_json::from_str(&flat.to_json()).unwrap();
        for key in ["b", "c", "m", "Q", "N"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["N"], 8);
        let bad = r#"{"b": [1.0, 0.0], "c": 1.0, "m": 1.0, "Q": 3.0, "N": 5}"#;
        assert!(SolverState::from_json(bad).is_err());
    }

    #[test]
    fn surface_coefficient_overflow_guard() {
        let mut s = flat_water_state(&params(), 8);
        s.m = 200.0 * s.c;
        s.b[4] = 1e-300;
        assert!(matches!(
            s.surface_coefficients(),
            Err(WaveError::Overflow { .. })
        ));
    }
}
