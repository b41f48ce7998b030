//! Fourier collocation of the fixed-boundary problem on the conformal strip.
//!
//! Unknowns are `(b₀, a₁..a_N, c, m, Q)` where `aₙ` are surface amplitudes
//! (see [`SolverState::surface_coefficients`]). Equations are the Bernoulli
//! closure `(Q - 2gh)(h_q² + h_p²) = 1` at the `N + 1` surface nodes
//! `θ_k = kπ/N`, plus the mean-depth, zero-mean-current and amplitude gauges.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::{AmplitudeTarget, ConformalGrid, SolverState, WaveParameters};
use crate::error::{Result, WaveError};
use crate::harmonic::{coth_csch2, grid_sin_cos};

/// Relative stagnation guard: residuals are refused where
/// `h_q² + h_p² < STAGNATION_GUARD · c²`.
pub const STAGNATION_GUARD: f64 = 1e-12;

/// `(R_depth, R_flux, R_amp)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeResiduals {
    pub depth: f64,
    pub flux: f64,
    pub amplitude: f64,
}

impl GaugeResiduals {
    pub fn max_abs(&self) -> f64 {
        self.depth
            .abs()
            .max(self.flux.abs())
            .max(self.amplitude.abs())
    }
}

/// Precomputed trigonometric tables on the surface collocation nodes.
#[derive(Debug, Clone)]
pub(crate) struct Collocation {
    pub n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    weights: Vec<f64>,
}

/// Surface values at the collocation nodes.
#[derive(Debug, Clone)]
pub(crate) struct SurfaceValues {
    pub h: Vec<f64>,
    pub h_q: Vec<f64>,
    pub h_p: Vec<f64>,
}

/// Dense unknown vector layout `[b₀, a₁..a_N, c, m, Q]`.
#[derive(Debug, Clone)]
pub(crate) struct Unknowns<'a>(pub &'a [f64]);

impl<'a> Unknowns<'a> {
    fn n(&self) -> usize {
        self.0.len() - 4
    }
    fn b0(&self) -> f64 {
        self.0[0]
    }
    fn a(&self) -> &[f64] {
        &self.0[1..=self.n()]
    }
    fn c(&self) -> f64 {
        self.0[self.n() + 1]
    }
    fn m(&self) -> f64 {
        self.0[self.n() + 2]
    }
    fn q(&self) -> f64 {
        self.0[self.n() + 3]
    }
}

pub(crate) fn pack(state: &SolverState) -> Result<Vec<f64>> {
    let a = state.surface_coefficients()?;
    let mut z = a;
    z.push(state.c);
    z.push(state.m);
    z.push(state.q_head);
    Ok(z)
}

pub(crate) fn unpack(z: &[f64]) -> Result<SolverState> {
    let u = Unknowns(z);
    let n = u.n();
    SolverState::from_surface_coefficients(&z[..=n], u.c(), u.m(), u.q())
}

impl Collocation {
    pub fn new(n: usize) -> Self {
        let mut cos = vec![0.0; (n + 1) * n];
        let mut sin = vec![0.0; (n + 1) * n];
        for k in 0..=n {
            for mode in 1..=n {
                let (s, c) = grid_sin_cos(mode * k, n);
                cos[k * n + mode - 1] = c;
                sin[k * n + mode - 1] = s;
            }
        }
        let h = std::f64::consts::PI / n as f64;
        let mut weights = vec![h; n + 1];
        weights[0] *= 0.5;
        weights[n] *= 0.5;
        Collocation {
            n,
            cos,
            sin,
            weights,
        }
    }

    #[inline]
    fn cos(&self, k: usize, mode: usize) -> f64 {
        self.cos[k * self.n + mode - 1]
    }

    #[inline]
    fn sin(&self, k: usize, mode: usize) -> f64 {
        self.sin[k * self.n + mode - 1]
    }

    pub fn surface(&self, z: &[f64]) -> SurfaceValues {
        let u = Unknowns(z);
        let (b0, a, c, m) = (u.b0(), u.a(), u.c(), u.m());
        let coth: Vec<f64> = (1..=self.n)
            .map(|n| coth_csch2(n as f64 * m / c).0)
            .collect();
        let mut out = SurfaceValues {
            h: vec![b0 * m; self.n + 1],
            h_q: vec![0.0; self.n + 1],
            h_p: vec![b0; self.n + 1],
        };
        for k in 0..=self.n {
            let (mut h, mut hq, mut hp) = (0.0, 0.0, 0.0);
            for (i, &an) in a.iter().enumerate() {
                let mode = i + 1;
                let kn = mode as f64 / c;
                let cs = self.cos(k, mode);
                h += an * cs;
                hq -= an * kn * self.sin(k, mode);
                hp += an * kn * coth[i] * cs;
            }
            out.h[k] += h;
            out.h_q[k] = hq;
            out.h_p[k] += hp;
        }
        out
    }

    fn guard(&self, z: &[f64], s: &SurfaceValues) -> Result<()> {
        let c = Unknowns(z).c();
        for k in 0..=self.n {
            let gsq = s.h_q[k] * s.h_q[k] + s.h_p[k] * s.h_p[k];
            if !(gsq >= STAGNATION_GUARD * c * c) {
                return Err(WaveError::Stagnation {
                    node: k,
                    value: gsq,
                });
            }
        }
        Ok(())
    }

    pub fn bernoulli(&self, z: &[f64], g: f64) -> Result<Vec<f64>> {
        let s = self.surface(z);
        self.guard(z, &s)?;
        let q = Unknowns(z).q();
        Ok((0..=self.n)
            .map(|k| (q - 2.0 * g * s.h[k]) * (s.h_q[k] * s.h_q[k] + s.h_p[k] * s.h_p[k]) - 1.0)
            .collect())
    }

    pub fn gauges(
        &self,
        z: &[f64],
        params: &WaveParameters,
        target: AmplitudeTarget,
    ) -> GaugeResiduals {
        let u = Unknowns(z);
        let (b0, a, c, m) = (u.b0(), u.a(), u.c(), u.m());
        let n = self.n;
        let mut mean_h_hp = b0 * m * b0;
        for (i, &an) in a.iter().enumerate() {
            let mode = (i + 1) as f64;
            let (coth, _) = coth_csch2(mode * m / c);
            mean_h_hp += 0.5 * an * an * (mode / c) * coth;
        }
        let depth = c * mean_h_hp - params.d;

        // zero mean current on the bed: u = c - 1/h_p, dx = h_p dq
        let mut integral = 0.0;
        for k in 0..=n {
            let mut hp = b0;
            for (i, &an) in a.iter().enumerate() {
                let mode = i + 1;
                let arg = mode as f64 * m / c;
                if arg > 700.0 {
                    continue;
                }
                hp += an * (mode as f64 / c) / arg.sinh() * self.cos(k, mode);
            }
            integral += self.weights[k] * (c * hp - 1.0);
        }
        let flux = c / std::f64::consts::PI * integral;

        let s = self.surface(z);
        let amplitude = match target {
            AmplitudeTarget::Height(h) => s.h[0] - s.h[n] - h,
            AmplitudeTarget::CrestSpeedRatio(ratio) => 1.0 / s.h_p[0] - ratio * c,
        };
        GaugeResiduals {
            depth,
            flux,
            amplitude,
        }
    }

    pub fn residual(
        &self,
        z: &[f64],
        params: &WaveParameters,
        target: AmplitudeTarget,
    ) -> Result<Vec<f64>> {
        let mut r = self.bernoulli(z, params.g)?;
        let gauges = self.gauges(z, params, target);
        r.push(gauges.depth);
        r.push(gauges.flux);
        r.push(gauges.amplitude);
        Ok(r)
    }

    /// Analytic Jacobian of [`Collocation::residual`].
    pub fn jacobian(
        &self,
        z: &[f64],
        params: &WaveParameters,
        target: AmplitudeTarget,
    ) -> DMatrix<f64> {
        let u = Unknowns(z);
        let (b0, a, c, m, q) = (u.b0(), u.a(), u.c(), u.m(), u.q());
        let n = self.n;
        let dim = n + 4;
        let (ic, im, iq) = (n + 1, n + 2, n + 3);
        let g = params.g;
        let s = self.surface(z);

        let mut kn = vec![0.0; n];
        let mut coth = vec![0.0; n];
        let mut csch2 = vec![0.0; n];
        for i in 0..n {
            let mode = (i + 1) as f64;
            kn[i] = mode / c;
            let (ct, cs2) = coth_csch2(mode * m / c);
            coth[i] = ct;
            csch2[i] = cs2;
        }

        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..=n {
            let (h, hq, hp) = (s.h[k], s.h_q[k], s.h_p[k]);
            let gsq = hq * hq + hp * hp;
            let bern = q - 2.0 * g * h;
            let row = |dh: f64, dhq: f64, dhp: f64| {
                -2.0 * g * dh * gsq + 2.0 * bern * (hq * dhq + hp * dhp)
            };

            jac[(k, 0)] = row(m, 0.0, 1.0);
            let mut dhp_dc = 0.0;
            let mut dhp_dm = 0.0;
            for i in 0..n {
                let mode = i + 1;
                let cs = self.cos(k, mode);
                let sn = self.sin(k, mode);
                jac[(k, mode)] = row(cs, -kn[i] * sn, kn[i] * coth[i] * cs);
                dhp_dc += a[i] * cs * (-kn[i] * coth[i] / c + kn[i] * kn[i] * (m / c) * csch2[i]);
                dhp_dm -= a[i] * cs * kn[i] * kn[i] * csch2[i];
            }
            jac[(k, ic)] = row(0.0, -hq / c, dhp_dc);
            jac[(k, im)] = row(b0, 0.0, dhp_dm);
            jac[(k, iq)] = gsq;
        }

        // depth gauge
        let rd = n + 1;
        jac[(rd, 0)] = 2.0 * c * b0 * m;
        let mut d_dc = b0 * b0 * m;
        let mut d_dm = c * b0 * b0;
        for i in 0..n {
            let mode = (i + 1) as f64;
            jac[(rd, i + 1)] = a[i] * mode * coth[i];
            d_dc += 0.5 * a[i] * a[i] * mode * mode * m * csch2[i] / (c * c);
            d_dm -= 0.5 * a[i] * a[i] * mode * mode * csch2[i] / c;
        }
        jac[(rd, ic)] = d_dc;
        jac[(rd, im)] = d_dm;

        // flux gauge, kappa = c (c b0 - 1)
        let rf = n + 2;
        jac[(rf, 0)] = c * c;
        jac[(rf, ic)] = 2.0 * c * b0 - 1.0;

        // amplitude gauge
        let ra = n + 3;
        match target {
            AmplitudeTarget::Height(_) => {
                for i in 0..n {
                    if (i + 1) % 2 == 1 {
                        jac[(ra, i + 1)] = 2.0;
                    }
                }
            }
            AmplitudeTarget::CrestSpeedRatio(ratio) => {
                let hp0 = s.h_p[0];
                let w = -1.0 / (hp0 * hp0);
                jac[(ra, 0)] = w;
                let mut dhp_dc = 0.0;
                let mut dhp_dm = 0.0;
                for i in 0..n {
                    jac[(ra, i + 1)] = w * kn[i] * coth[i];
                    dhp_dc += a[i] * (-kn[i] * coth[i] / c + kn[i] * kn[i] * (m / c) * csch2[i]);
                    dhp_dm -= a[i] * kn[i] * kn[i] * csch2[i];
                }
                jac[(ra, ic)] = w * dhp_dc - ratio;
                jac[(ra, im)] = w * dhp_dm;
            }
        }
        jac
    }
}

fn check_grid(state: &SolverState, grid: &ConformalGrid) -> Result<()> {
    if grid.modes != state.modes() {
        return Err(WaveError::InconsistentGrid {
            grid_modes: grid.modes,
            state_modes: state.modes(),
        });
    }
    Ok(())
}

/// `(Q - 2g h)(h_q² + h_p²) - 1` at every surface collocation node.
pub fn bernoulli_residual(
    state: &SolverState,
    grid: &ConformalGrid,
    params: &WaveParameters,
) -> Result<Vec<f64>> {
    check_grid(state, grid)?;
    let z = pack(state)?;
    Collocation::new(grid.modes).bernoulli(&z, params.g)
}

/// Mean-depth, bed-current and amplitude defects of `state`.
///
/// The depth gauge is the exact mean of `h h_p` over a period (the mean
/// physical surface height, since `dx = h_p dq` on `p = 0`). The current is
/// the trapezoidal mean of `u` along the bed.
pub fn gauge_residuals(
    state: &SolverState,
    grid: &ConformalGrid,
    params: &WaveParameters,
    target: AmplitudeTarget,
) -> Result<GaugeResiduals> {
    check_grid(state, grid)?;
    let z = pack(state)?;
    Ok(Collocation::new(grid.modes).gauges(&z, params, target))
}

/// `s = (c - u)/c` at the wave crest `(q, p) = (0, 0)`.
pub fn crest_speed_ratio(state: &SolverState) -> Result<f64> {
    let z = pack(state)?;
    let n = state.modes();
    // h_q vanishes on the crest line
    let hp = if n == 0 {
        state.b[0]
    } else {
        Collocation::new(n.max(1)).surface(&z).h_p[0]
    };
    Ok(1.0 / (state.c * hp))
}

/// Crest-to-trough height `h(0,0) - h(cπ,0)`.
pub fn wave_height(state: &SolverState) -> Result<f64> {
    let a = state.surface_coefficients()?;
    Ok(a.iter()
        .enumerate()
        .skip(1)
        .filter(|(n, _)| n % 2 == 1)
        .map(|(_, v)| 2.0 * v)
        .sum())
}

/// Mean physical depth `(1/2π)∫ h dx` of the surface, exact in the
/// coefficients.
pub fn mean_depth(state: &SolverState) -> Result<f64> {
    let a = state.surface_coefficients()?;
    let (c, m) = (state.c, state.m);
    let mut mean = a[0] * a[0] * m;
    for (i, &an) in a.iter().enumerate().skip(1) {
        let n = i as f64;
        mean += 0.5 * an * an * (n / c) * coth_csch2(n * m / c).0;
    }
    Ok(c * mean)
}

/// Fraction of surface energy in modes above `N/2`.
pub fn tail_energy_fraction(state: &SolverState) -> Result<f64> {
    let a = state.surface_coefficients()?;
    let n = state.modes();
    let total: f64 = a[1..].iter().map(|v| v * v).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let tail: f64 = a.iter().skip(n / 2 + 1).map(|v| v * v).sum();
    Ok(tail / total)
}

/// First-order Stokes (Airy) seed on the branch at the linear speed.
///
/// The surface is `h(θ,0) = d + a₁ cos θ`; for a height target `a₁ = H/2`,
/// for a crest-speed target `a₁` matches `s` to first order.
pub fn linear_seed(params: &WaveParameters, modes: usize, target: AmplitudeTarget) -> SolverState {
    let c = params.linear_speed();
    let mut state = crate::domain::flat_water_state_with_speed(params, modes, c);
    let a1 = match target {
        AmplitudeTarget::Height(h) => 0.5 * h,
        AmplitudeTarget::CrestSpeedRatio(s) => (1.0 / s - 1.0) * params.d.tanh(),
    };
    if modes >= 1 {
        state.b[1] = a1 / (state.m / c).sinh();
    }
    state
}

/// Converged Newton solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub state: SolverState,
    pub iterations: usize,
    /// Max-norm of the combined residual before each iteration and at exit.
    pub residual_history: Vec<f64>,
}

impl NewtonOutcome {
    pub fn residual_norm(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&0.0)
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| {
        if x.is_nan() {
            f64::NAN
        } else {
            acc.max(x.abs())
        }
    })
}

/// Newton iteration on the square `(N+4)`-dimensional collocation system.
///
/// A flat starting state with a non-flat target is first replaced by the
/// linear seed, since the flat branch is a bifurcation point.
pub fn newton_solve(
    state0: &SolverState,
    grid: &ConformalGrid,
    params: &WaveParameters,
    target: AmplitudeTarget,
    tol: f64,
    max_iters: usize,
) -> Result<NewtonOutcome> {
    check_grid(state0, grid)?;
    target.validate()?;
    let colloc = Collocation::new(grid.modes);
    let start = if state0.is_flat() && !target.is_flat() {
        linear_seed(params, grid.modes, target)
    } else {
        state0.clone()
    };
    newton_core(&colloc, &start, params, target, tol, max_iters)
}

pub(crate) fn newton_core(
    colloc: &Collocation,
    start: &SolverState,
    params: &WaveParameters,
    target: AmplitudeTarget,
    tol: f64,
    max_iters: usize,
) -> Result<NewtonOutcome> {
    let mut z = pack(start)?;
    let mut history = Vec::new();
    let mut r = colloc.residual(&z, params, target)?;
    let mut norm = max_norm(&r);
    history.push(norm);
    let mut iterations = 0;
    while !(norm < tol) {
        if iterations >= max_iters || !norm.is_finite() {
            return Err(WaveError::NonConvergence {
                iterations,
                residual: norm,
            });
        }
        let jac = colloc.jacobian(&z, params, target);
        let rhs = DVector::from_vec(r.iter().map(|v| -v).collect());
        let step = jac
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or(WaveError::SingularJacobian {
                iteration: iterations,
            })?;
        iterations += 1;

        // backtrack only to keep c, m positive and the guard satisfied
        let mut lambda = 1.0;
        let n = colloc.n;
        let (next, next_r) = loop {
            let trial: Vec<f64> = z
                .iter()
                .zip(step.iter())
                .map(|(a, b)| a + lambda * b)
                .collect();
            let ok = trial[n + 1] > 0.0 && trial[n + 2] > 0.0;
            if ok {
                if let Ok(tr) = colloc.residual(&trial, params, target) {
                    break (trial, tr);
                }
            }
            lambda *= 0.5;
            if lambda < 1e-4 {
                return Err(WaveError::NonConvergence {
                    iterations,
                    residual: norm,
                });
            }
        };
        z = next;
        r = next_r;
        norm = max_norm(&r);
        history.push(norm);
    }
    log::debug!("newton converged in {iterations} iterations, residual {norm:e}");
    Ok(NewtonOutcome {
        state: unpack(&z)?,
        iterations,
        residual_history: history,
    })
}


#[cfg(test)]
mod dispersion_oracle {
    use super::*;
    use crate::domain::flat_water_state_with_speed;

    /// Coefficient of the mode-1 Bernoulli response about flat water at
    /// speed `c`, read off the linearised collocation system.
    fn mode_one_response(p: &WaveParameters, c: f64) -> f64 {
        let n = 8;
        let flat = flat_water_state_with_speed(p, n, c);
        let colloc = Collocation::new(n);
        let z = pack(&flat).unwrap();
        let jac = colloc.jacobian(&z, p, AmplitudeTarget::Height(0.0));
        // the crest row carries cos(0) = 1
        jac[(0, 1)]
    }

    #[test]
    fn zero_eigenvalue_at_linear_dispersion_speed() {
        let p = WaveParameters::new(1.0, AmplitudeTarget::Height(0.0)).unwrap();
        let (mut lo, mut hi) = (0.5, 1.2);
        assert!(mode_one_response(&p, lo) * mode_one_response(&p, hi) < 0.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mode_one_response(&p, lo) * mode_one_response(&p, mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!((root - 0.872_694).abs() < 1e-6, "root {root}");
        assert!((root - p.linear_speed()).abs() < 1e-12);
    }
}
