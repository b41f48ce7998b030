//! Termwise evaluation of the bed-anchored harmonic series for `h` and its
//! harmonic conjugate `x`.
//!
//! Internally each mode is carried by its surface amplitude
//! `aₙ = bₙ sinh(nm/c)` and the vertical profile ratios
//! `sinh(n(p+m)/c)/sinh(nm/c)` and `cosh(n(p+m)/c)/sinh(nm/c)`, evaluated in
//! exponential form so that large `n m / c` neither overflows nor loses
//! digits.

use std::f64::consts::PI;

use crate::domain::{ConformalGrid, SolverState};
use crate::error::{Result, WaveError};

/// Values of `h` and the conformal derivatives needed downstream, plus the
/// conjugate coordinate `x`, at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HarmonicPoint {
    pub h: f64,
    pub h_q: f64,
    pub h_p: f64,
    pub h_qq: f64,
    pub h_pq: f64,
    pub x: f64,
}

/// `h`, `h_q`, `h_p` sampled on a grid, row-major over (p, q).
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSamples {
    pub h: Vec<f64>,
    pub h_q: Vec<f64>,
    pub h_p: Vec<f64>,
}

/// Ratios `sinh(y)/sinh(x)` and `cosh(y)/sinh(x)` for `0 ≤ y`, `0 < x`.
#[inline]
pub(crate) fn profile_ratios(y: f64, x: f64) -> (f64, f64) {
    let scale = (y - x).exp() / (-(-2.0 * x).exp_m1());
    let e2y = (-2.0 * y).exp();
    (scale * (-(-2.0 * y).exp_m1()), scale * (1.0 + e2y))
}

/// `coth(x)` and `csch²(x)` for `x > 0`.
#[inline]
pub(crate) fn coth_csch2(x: f64) -> (f64, f64) {
    let e = (-2.0 * x).exp();
    let denom = -(-2.0 * x).exp_m1();
    let coth = (1.0 + e) / denom;
    let csch2 = 4.0 * e / (denom * denom);
    (coth, csch2)
}

/// `sin(nkπ/N)`, `cos(nkπ/N)` with the symmetry and zero-crossings of the
/// grid reproduced exactly.
#[inline]
pub(crate) fn grid_sin_cos(nk: usize, intervals: usize) -> (f64, f64) {
    let period = 2 * intervals;
    let r = nk % period;
    let (r_fold, sign) = if r > intervals {
        (period - r, -1.0)
    } else {
        (r, 1.0)
    };
    if r_fold == 0 {
        return (0.0, 1.0);
    }
    if r_fold == intervals {
        return (0.0, -1.0);
    }
    if 2 * r_fold == intervals {
        return (sign, 0.0);
    }
    let angle = PI * (r_fold as f64 / intervals as f64);
    let (s, c) = angle.sin_cos();
    (sign * s, c)
}

/// The harmonic series of one state, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct HarmonicSeries {
    pub b0: f64,
    /// Surface amplitudes, index n-1 for mode n.
    pub amplitudes: Vec<f64>,
    pub c: f64,
    pub m: f64,
}

impl HarmonicSeries {
    pub fn new(state: &SolverState) -> Result<Self> {
        let a = state.surface_coefficients()?;
        if a.iter().any(|v| !v.is_finite()) {
            return Err(WaveError::InvalidState);
        }
        Ok(HarmonicSeries {
            b0: a[0],
            amplitudes: a[1..].to_vec(),
            c: state.c,
            m: state.m,
        })
    }

    pub fn modes(&self) -> usize {
        self.amplitudes.len()
    }

    fn check_level(&self, p: f64) -> (f64, f64) {
        // 0 <= p + m guards against evaluation below the bed.
        let depth = (p + self.m).max(0.0);
        (depth / self.c, self.m / self.c)
    }

    /// Evaluates the series at `(θ, p)` with `q = cθ`.
    pub fn eval(&self, theta: f64, p: f64) -> HarmonicPoint {
        let (ys, xs) = self.check_level(p);
        let mut out = HarmonicPoint {
            h: self.b0 * (p + self.m),
            h_p: self.b0,
            x: self.b0 * self.c * theta,
            ..Default::default()
        };
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut c) = (0.0, 1.0);
        for (i, &a) in self.amplitudes.iter().enumerate() {
            (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
            if a == 0.0 {
                continue;
            }
            let n = (i + 1) as f64;
            let k = n / self.c;
            let (rs, rc) = profile_ratios(n * ys, n * xs);
            accumulate(&mut out, a, k, rs, rc, s, c);
        }
        out
    }

    /// Evaluates the series at many `θ` on the line `p`, the vertical
    /// profiles computed once.
    pub fn eval_line(&self, p: f64, thetas: &[f64]) -> Vec<HarmonicPoint> {
        let (ys, xs) = self.check_level(p);
        let ratios: Vec<(f64, f64)> = (1..=self.modes())
            .map(|n| profile_ratios(n as f64 * ys, n as f64 * xs))
            .collect();
        thetas
            .iter()
            .map(|&theta| {
                let mut out = HarmonicPoint {
                    h: self.b0 * (p + self.m),
                    h_p: self.b0,
                    x: self.b0 * self.c * theta,
                    ..Default::default()
                };
                let (s1, c1) = theta.sin_cos();
                let (mut s, mut c) = (0.0, 1.0);
                for (i, (&a, &(rs, rc))) in self.amplitudes.iter().zip(&ratios).enumerate() {
                    (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
                    if a != 0.0 {
                        accumulate(&mut out, a, (i + 1) as f64 / self.c, rs, rc, s, c);
                    }
                }
                out
            })
            .collect()
    }

    /// Evaluates the series at every node of `grid`, row-major over (p, q).
    pub fn eval_grid(&self, grid: &ConformalGrid) -> Vec<HarmonicPoint> {
        let nq = grid.modes + 1;
        let modes = self.modes();
        let mut sin_t = vec![0.0; nq * modes];
        let mut cos_t = vec![0.0; nq * modes];
        for k in 0..nq {
            for n in 1..=modes {
                let (s, c) = grid_sin_cos(n * k, grid.modes);
                sin_t[k * modes + n - 1] = s;
                cos_t[k * modes + n - 1] = c;
            }
        }
        let mut out = Vec::with_capacity(grid.node_count());
        let mut rs_t = vec![0.0; modes];
        let mut rc_t = vec![0.0; modes];
        for &p in &grid.p_nodes {
            let (ys, xs) = self.check_level(p);
            for n in 1..=modes {
                let nf = n as f64;
                let (rs, rc) = profile_ratios(nf * ys, nf * xs);
                rs_t[n - 1] = rs;
                rc_t[n - 1] = rc;
            }
            for (k, &theta) in grid.theta.iter().enumerate() {
                let mut pt = HarmonicPoint {
                    h: self.b0 * (p + self.m),
                    h_p: self.b0,
                    x: self.b0 * self.c * theta,
                    ..Default::default()
                };
                for (i, &a) in self.amplitudes.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let k_n = (i + 1) as f64 / self.c;
                    accumulate(
                        &mut pt,
                        a,
                        k_n,
                        rs_t[i],
                        rc_t[i],
                        sin_t[k * modes + i],
                        cos_t[k * modes + i],
                    );
                }
                out.push(pt);
            }
        }
        out
    }
}

#[inline]
fn accumulate(out: &mut HarmonicPoint, a: f64, k: f64, rs: f64, rc: f64, s: f64, c: f64) {
    let ars = a * rs;
    let arc = a * rc;
    out.h += ars * c;
    out.h_q -= ars * k * s;
    out.h_p += arc * k * c;
    out.h_qq -= ars * k * k * c;
    out.h_pq -= arc * k * k * s;
    out.x += arc * s;
}

/// Evaluates `h`, `h_q`, `h_p` on every node of `grid`.
///
/// `h(q, -m) = 0` holds exactly on the bed row.
pub fn harmonic_extend(state: &SolverState, grid: &ConformalGrid) -> Result<HarmonicSamples> {
    let series = HarmonicSeries::new(state)?;
    let pts = series.eval_grid(grid);
    Ok(HarmonicSamples {
        h: pts.iter().map(|p| p.h).collect(),
        h_q: pts.iter().map(|p| p.h_q).collect(),
        h_p: pts.iter().map(|p| p.h_p).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{flat_water_state, make_grid, AmplitudeTarget, WaveParameters};

    fn params() -> WaveParameters {
        WaveParameters::new(1.0, AmplitudeTarget::Height(0.0)).unwrap()
    }

    #[test]
    fn flat_state_is_linear_in_p() {
        let flat = flat_water_state(&params(), 16);
        let grid = make_grid(16, 8, &flat).unwrap();
        let s = harmonic_extend(&flat, &grid).unwrap();
        for j in 0..=grid.levels {
            for k in 0..=grid.modes {
                let i = grid.index(j, k);
                let expect = (grid.p_nodes[j] + flat.m) / flat.c;
                assert!((s.h[i] - expect).abs() < 1e-15);
                assert_eq!(s.h_q[i], 0.0);
                assert_eq!(s.h_p[i], 1.0 / flat.c);
            }
        }
    }

    #[test]
    fn single_mode_at_crest() {
        let mut st = flat_water_state(&params(), 8);
        st.b[1] = 0.003;
        let grid = make_grid(8, 4, &st).unwrap();
        let s = harmonic_extend(&st, &grid).unwrap();
        let expect = st.b[0] * st.m + st.b[1] * (st.m / st.c).sinh();
        assert!((s.h[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn bed_row_vanishes_exactly() {
        let mut st = flat_water_state(&params(), 12);
        for n in 1..=12 {
            st.b[n] = 0.01 / (n * n) as f64;
        }
        let grid = make_grid(12, 6, &st).unwrap();
        let s = harmonic_extend(&st, &grid).unwrap();
        for k in 0..=grid.modes {
            let i = grid.index(grid.levels, k);
            assert_eq!(s.h[i], 0.0);
            assert_eq!(s.h_q[i], 0.0);
        }
    }

    #[test]
    fn grid_trig_matches_libm() {
        for intervals in [8usize, 9, 64] {
            for nk in 0..(5 * intervals) {
                let (s, c) = grid_sin_cos(nk, intervals);
                let ang = PI * nk as f64 / intervals as f64;
                assert!((s - ang.sin()).abs() < 1e-13);
                assert!((c - ang.cos()).abs() < 1e-13);
            }
        }
        assert_eq!(grid_sin_cos(7 * 16, 16).0, 0.0);
    }

    #[test]
    fn grid_and_point_evaluation_agree() {
        let mut st = flat_water_state(&params(), 10);
        for n in 1..=10 {
            st.b[n] = 0.02 * (-(n as f64)).exp();
        }
        let grid = make_grid(10, 5, &st).unwrap();
        let series = HarmonicSeries::new(&st).unwrap();
        let pts = series.eval_grid(&grid);
        for j in 0..=grid.levels {
            for k in 0..=grid.modes {
                let a = pts[grid.index(j, k)];
                let b = series.eval(grid.theta[k], grid.p_nodes[j]);
                let c = series.eval_line(grid.p_nodes[j], &[grid.theta[k]])[0];
                assert_eq!(b, c);
                assert!((a.h - b.h).abs() < 1e-14);
                assert!((a.h_p - b.h_p).abs() < 1e-14);
                assert!((a.h_q - b.h_q).abs() < 1e-14);
                assert!((a.x - b.x).abs() < 1e-14);
                assert!((a.h_pq - b.h_pq).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn ratio_helpers() {
        let (rs, rc) = profile_ratios(0.7, 1.3);
        assert!((rs - 0.7f64.sinh() / 1.3f64.sinh()).abs() < 1e-15);
        assert!((rc - 0.7f64.cosh() / 1.3f64.sinh()).abs() < 1e-15);
        let (rs, rc) = profile_ratios(0.0, 1.3);
        assert_eq!(rs, 0.0);
        assert!((rc - 1.0 / 1.3f64.sinh()).abs() < 1e-15);
        let (coth, csch2) = coth_csch2(0.9);
        assert!((coth - 1.0 / 0.9f64.tanh()).abs() < 1e-14);
        assert!((csch2 - 1.0 / 0.9f64.sinh().powi(2)).abs() < 1e-14);
        let (_, csch2) = coth_csch2(800.0);
        assert_eq!(csch2, 0.0);
    }
}
