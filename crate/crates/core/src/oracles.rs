//! Low-tech cross-checks kept apart from the spectral machinery: first-order
//! linear theory, 5-point finite differences and the periodic trapezoid rule.

use log::warn;

use crate::domain::{flat_water_state, SolverState, WaveParameters};
use crate::error::{Result, WaveError};
use crate::fields::FieldKit;
use crate::harmonic::HarmonicSeries;

pub const MIN_QUADRATURE_SAMPLES: usize = 8;

/// First-order linear wave of surface elevation `a cos x` on the flat state.
pub fn airy_state(a: f64, params: &WaveParameters, modes: usize) -> SolverState {
    if a.abs() > 0.05 * params.d {
        warn!(
            "airy_state: a/d = {:.3} exceeds 0.05, linear theory is a poor approximation",
            a / params.d
        );
    }
    let mut st = flat_water_state(params, modes);
    if a != 0.0 && modes >= 1 {
        st.b[1] = a / (st.m / st.c).sinh();
    }
    st
}

/// Largest gap between the surface of `state` and the linear profile
/// `a cos x`, sampled at `samples` points of the half period.
pub fn airy_surface_gap(
    state: &SolverState,
    params: &WaveParameters,
    a: f64,
    samples: usize,
) -> Result<f64> {
    let series = HarmonicSeries::new(state)?;
    let mut worst = 0.0f64;
    for k in 0..=samples {
        let theta = std::f64::consts::PI * k as f64 / samples as f64;
        let pt = series.eval(theta, 0.0);
        let eta = pt.h - params.d;
        worst = worst.max((eta - a * pt.x.cos()).abs());
    }
    Ok(worst)
}

fn uniform_step(coords: &[f64]) -> Result<f64> {
    if coords.len() < 3 {
        return Err(WaveError::TooFewSamples {
            got: coords.len(),
            min: 3,
        });
    }
    let h = coords[1] - coords[0];
    if !(h > 0.0) {
        return Err(WaveError::NonUniformSpacing);
    }
    for w in coords.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-8 * h {
            return Err(WaveError::NonUniformSpacing);
        }
    }
    Ok(h)
}

/// 5-point Laplacian of `values` sampled on the tensor grid `xs × ys`,
/// row-major with `ys` as rows. Returns the interior estimates, row-major,
/// `(ys.len()-2) × (xs.len()-2)`.
pub fn fd_laplacian(values: &[f64], xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    let hx = uniform_step(xs)?;
    let hy = uniform_step(ys)?;
    let (nx, ny) = (xs.len(), ys.len());
    if values.len() != nx * ny {
        return Err(WaveError::InvalidParameters(format!(
            "expected {} samples, got {}",
            nx * ny,
            values.len()
        )));
    }
    let at = |j: usize, i: usize| values[j * nx + i];
    let mut out = Vec::with_capacity((nx - 2) * (ny - 2));
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let centre = at(j, i);
            let lxx = (at(j, i - 1) - 2.0 * centre + at(j, i + 1)) / (hx * hx);
            let lyy = (at(j - 1, i) - 2.0 * centre + at(j + 1, i)) / (hy * hy);
            out.push(lxx + lyy);
        }
    }
    Ok(out)
}

/// Richardson combination `(4 L_h - L_2h) / 3` of 5-point Laplacians at the
/// nodes where both steps fit, `(ys.len()-4) × (xs.len()-4)` row-major.
pub fn fd_laplacian_richardson(values: &[f64], xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    let fine = fd_laplacian(values, xs, ys)?;
    let (nx, ny) = (xs.len(), ys.len());
    if nx < 5 || ny < 5 {
        return Err(WaveError::TooFewSamples {
            got: nx.min(ny),
            min: 5,
        });
    }
    let mut out = Vec::with_capacity((nx - 4) * (ny - 4));
    let (hx, hy) = (xs[1] - xs[0], ys[1] - ys[0]);
    for j in 2..ny - 2 {
        for i in 2..nx - 2 {
            let c = values[j * nx + i];
            let coarse = (values[j * nx + i - 2] - 2.0 * c + values[j * nx + i + 2])
                / (4.0 * hx * hx)
                + (values[(j - 2) * nx + i] - 2.0 * c + values[(j + 2) * nx + i]) / (4.0 * hy * hy);
            let f = fine[(j - 1) * (nx - 2) + (i - 1)];
            out.push((4.0 * f - coarse) / 3.0);
        }
    }
    Ok(out)
}

/// Richardson-extrapolated 5-point Laplacian at a single point, from
/// `f(dx, dy)` evaluated on the star of half-widths `h` and `2h`.
pub fn star_laplacian<F: FnMut(f64, f64) -> f64>(mut f: F, hx: f64, hy: f64) -> f64 {
    let c = f(0.0, 0.0);
    let lap = |f: &mut F, sx: f64, sy: f64| {
        (f(-sx, 0.0) - 2.0 * c + f(sx, 0.0)) / (sx * sx)
            + (f(0.0, -sy) - 2.0 * c + f(0.0, sy)) / (sy * sy)
    };
    let fine = lap(&mut f, hx, hy);
    let coarse = lap(&mut f, 2.0 * hx, 2.0 * hy);
    (4.0 * fine - coarse) / 3.0
}

/// Trapezoid mean of equispaced samples over one period, the endpoint
/// excluded.
pub fn periodic_quadrature(samples: &[f64]) -> Result<f64> {
    if samples.len() < MIN_QUADRATURE_SAMPLES {
        return Err(WaveError::TooFewSamples {
            got: samples.len(),
            min: MIN_QUADRATURE_SAMPLES,
        });
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Mean of `u` along the horizontal line `y` by the trapezoid rule on
/// `2·half` equispaced physical abscissae, each located through the
/// inverse conformal map.
pub fn horizontal_mean_velocity(kit: &FieldKit, y: f64, half: usize) -> Result<f64> {
    let half = half.max(MIN_QUADRATURE_SAMPLES / 2);
    let n = 2 * half;
    let mut u = vec![0.0; n];
    // u is even in x, so samples on [0, π] fill the full period
    for j in 0..=half {
        let x = std::f64::consts::PI * j as f64 / half as f64;
        let (theta, p) = kit.locate(x, y)?;
        let val = kit.sample(theta, p)?.u;
        u[j] = val;
        if j > 0 && j < half {
            u[n - j] = val;
        }
    }
    periodic_quadrature(&u)
}
