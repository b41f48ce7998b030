//! Physical fields on the conformal grid.
//!
//! With `z = x + iy` analytic in `ζ = q + ip`, `z_ζ = h_p + i h_q` and the
//! complex velocity in the moving frame is `(c - u) + iv = 1/z_ζ`. All
//! derivatives are termwise differentiation of the basis mapped through
//! `∂_x = (c-u)∂_q + v∂_p`, `∂_y = -v∂_q + (c-u)∂_p`.

use std::io::Write;

use nalgebra::Complex;

use crate::domain::{ConformalGrid, SolverState, WaveParameters};
use crate::error::{Result, WaveError};
use crate::harmonic::{HarmonicPoint, HarmonicSeries};
use crate::solver::STAGNATION_GUARD;

/// Everything known about the flow at one conformal point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeSample {
    pub q: f64,
    pub p: f64,
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
    pub pressure: f64,
    pub psi: f64,
    pub phi: f64,
    pub f: f64,
    pub u_x: f64,
    pub u_y: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub f_q: f64,
    pub f_p: f64,
    pub h: f64,
    pub h_q: f64,
    pub h_p: f64,
}

impl NodeSample {
    /// `c - u`, positive away from stagnation.
    pub fn relative_speed(&self, c: f64) -> f64 {
        c - self.u
    }
}

/// Field samples on every node of a grid, row-major over (p, q).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub grid: ConformalGrid,
    pub nodes: Vec<NodeSample>,
    pub c: f64,
    pub g: f64,
    pub d: f64,
    pub p0: f64,
}

impl FieldGrid {
    pub fn at(&self, level: usize, k: usize) -> &NodeSample {
        &self.nodes[self.grid.index(level, k)]
    }

    pub fn surface(&self) -> &[NodeSample] {
        &self.nodes[..=self.grid.modes]
    }

    pub fn bed(&self) -> &[NodeSample] {
        let start = self.grid.index(self.grid.levels, 0);
        &self.nodes[start..]
    }

    pub const CSV_HEADER: &'static str = "q,p,x,y,u,v,P,psi,phi,f,u_x,u_y,v_x,v_y,P_x,P_y";

    /// Writes the field dump, one row per node in storage order. Values
    /// use the shortest representation that round-trips exactly.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for n in &self.nodes {
            let row = [
                n.q, n.p, n.x, n.y, n.u, n.v, n.pressure, n.psi, n.phi, n.f, n.u_x, n.u_y, n.v_x,
                n.v_y, n.p_x, n.p_y,
            ];
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Evaluator for the physical fields of one state.
#[derive(Debug, Clone)]
pub struct FieldKit {
    series: HarmonicSeries,
    pub c: f64,
    pub m: f64,
    pub q_head: f64,
    pub g: f64,
    pub d: f64,
    pub p0: f64,
}

impl FieldKit {
    pub fn new(state: &SolverState, params: &WaveParameters) -> Result<Self> {
        Ok(FieldKit {
            series: HarmonicSeries::new(state)?,
            c: state.c,
            m: state.m,
            q_head: state.q_head,
            g: params.g,
            d: params.d,
            p0: params.p0,
        })
    }

    pub fn series(&self) -> &HarmonicSeries {
        &self.series
    }

    fn build(&self, theta: f64, p: f64, hp: &HarmonicPoint) -> Result<NodeSample> {
        let c = self.c;
        let q = c * theta;
        let gsq = hp.h_q * hp.h_q + hp.h_p * hp.h_p;
        if !(gsq >= STAGNATION_GUARD * c * c) {
            return Err(WaveError::Stagnation {
                node: 0,
                value: gsq,
            });
        }
        let z_zeta = Complex::new(hp.h_p, hp.h_q);
        let z_zz = Complex::new(hp.h_pq, hp.h_qq);
        let w = z_zeta.inv();
        let w_q = -z_zz / (z_zeta * z_zeta);
        let w_p = Complex::new(0.0, 1.0) * w_q;

        let (cu, v) = (w.re, w.im);
        let (cu_q, v_q, cu_p, v_p) = (w_q.re, w_q.im, w_p.re, w_p.im);
        let (u_q, u_p) = (-cu_q, -cu_p);

        let pressure = self.p0 + 0.5 * self.q_head - 0.5 * (cu * cu + v * v) - self.g * hp.h;
        let pr_q = -(cu * cu_q + v * v_q) - self.g * hp.h_q;
        let pr_p = -(cu * cu_p + v * v_p) - self.g * hp.h_p;

        let dx = |fq: f64, fp: f64| cu * fq + v * fp;
        let dy = |fq: f64, fp: f64| -v * fq + cu * fp;

        Ok(NodeSample {
            q,
            p,
            x: hp.x,
            y: hp.h - self.d,
            u: c - cu,
            v,
            pressure,
            psi: -p,
            phi: -q,
            f: cu * v - self.g * hp.x,
            u_x: dx(u_q, u_p),
            u_y: dy(u_q, u_p),
            v_x: dx(v_q, v_p),
            v_y: dy(v_q, v_p),
            p_x: dx(pr_q, pr_p),
            p_y: dy(pr_q, pr_p),
            f_q: cu_q * v + cu * v_q - self.g * hp.h_p,
            f_p: cu_p * v + cu * v_p + self.g * hp.h_q,
            h: hp.h,
            h_q: hp.h_q,
            h_p: hp.h_p,
        })
    }

    /// Samples the flow at `(θ, p)`, `q = cθ`.
    pub fn sample(&self, theta: f64, p: f64) -> Result<NodeSample> {
        let hp = self.series.eval(theta, p);
        self.build(theta, p, &hp)
    }

    /// Samples at many `θ` on the line `p`.
    pub fn sample_line(&self, p: f64, thetas: &[f64]) -> Result<Vec<NodeSample>> {
        self.series
            .eval_line(p, thetas)
            .iter()
            .zip(thetas)
            .map(|(hp, &theta)| self.build(theta, p, hp))
            .collect()
    }

    pub fn sample_grid(&self, grid: &ConformalGrid) -> Result<FieldGrid> {
        let pts = self.series.eval_grid(grid);
        let mut nodes = Vec::with_capacity(pts.len());
        for (i, hp) in pts.iter().enumerate() {
            let (j, k) = (i / (grid.modes + 1), i % (grid.modes + 1));
            let node = self
                .build(grid.theta[k], grid.p_nodes[j], hp)
                .map_err(|e| match e {
                    WaveError::Stagnation { value, .. } => WaveError::Stagnation { node: i, value },
                    other => other,
                })?;
            nodes.push(node);
        }
        Ok(FieldGrid {
            grid: grid.clone(),
            nodes,
            c: self.c,
            g: self.g,
            d: self.d,
            p0: self.p0,
        })
    }

    fn pressure_from(&self, hp: &HarmonicPoint) -> f64 {
        let gsq = hp.h_q * hp.h_q + hp.h_p * hp.h_p;
        self.p0 + 0.5 * self.q_head - 0.5 / gsq - self.g * hp.h
    }

    /// `P` alone at `(θ, p)`, without the derivative chain.
    pub fn pressure_at(&self, theta: f64, p: f64) -> f64 {
        self.pressure_from(&self.series.eval(theta, p))
    }

    /// `P` at many `θ` on the line `p`.
    pub fn pressure_line(&self, p: f64, thetas: &[f64]) -> Vec<f64> {
        self.series
            .eval_line(p, thetas)
            .iter()
            .map(|hp| self.pressure_from(hp))
            .collect()
    }

    /// Inverse of the conformal map: the `(θ, p)` whose image is `(x, y)`.
    pub fn locate(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let c = self.c;
        let mut zeta = Complex::new(c * x, (c * (y + self.d) - self.m).min(0.0));
        for _ in 0..60 {
            let pt = self.series.eval(zeta.re / c, zeta.im);
            let resid = Complex::new(pt.x - x, pt.h - self.d - y);
            let deriv = Complex::new(pt.h_p, pt.h_q);
            let step = resid / deriv;
            zeta -= step;
            zeta.im = zeta.im.clamp(-self.m, 0.0);
            if step.norm() < 1e-14 * (1.0 + zeta.norm()) {
                return Ok((zeta.re / c, zeta.im));
            }
        }
        Err(WaveError::InverseMap { x, y })
    }
}

/// `(x, y)` at every node; `y = h - d`, `x` the harmonic conjugate with
/// `x(0, p) = 0`.
pub fn physical_map(
    state: &SolverState,
    grid: &ConformalGrid,
    params: &WaveParameters,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let series = HarmonicSeries::new(state)?;
    let pts = series.eval_grid(grid);
    Ok((
        pts.iter().map(|p| p.x).collect(),
        pts.iter().map(|p| p.h - params.d).collect(),
    ))
}

/// Full field reconstruction on `grid`.
pub fn field_grid(
    state: &SolverState,
    grid: &ConformalGrid,
    params: &WaveParameters,
) -> Result<FieldGrid> {
    FieldKit::new(state, params)?.sample_grid(grid)
}

/// `(u, v)` at every node.
pub fn velocity_field(
    state: &SolverState,
    grid: &ConformalGrid,
    params: &WaveParameters,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let fg = field_grid(state, grid, params)?;
    Ok((
        fg.nodes.iter().map(|n| n.u).collect(),
        fg.nodes.iter().map(|n| n.v).collect(),
    ))
}

/// `P = P0 + Q/2 - ((c-u)² + v²)/2 - g h` at every node.
pub fn pressure_field(
    state: &SolverState,
    grid: &ConformalGrid,
    params: &WaveParameters,
) -> Result<Vec<f64>> {
    Ok(field_grid(state, grid, params)?
        .nodes
        .iter()
        .map(|n| n.pressure)
        .collect())
}

/// `f = (c-u)v - g x` at every node.
pub fn f_field(
    state: &SolverState,
    grid: &ConformalGrid,
    params: &WaveParameters,
) -> Result<Vec<f64>> {
    Ok(field_grid(state, grid, params)?
        .nodes
        .iter()
        .map(|n| n.f)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalDerivatives {
    pub u_x: Vec<f64>,
    pub u_y: Vec<f64>,
    pub v_x: Vec<f64>,
    pub v_y: Vec<f64>,
    pub p_x: Vec<f64>,
    pub p_y: Vec<f64>,
}

pub fn physical_derivatives(
    state: &SolverState,
    grid: &ConformalGrid,
    params: &WaveParameters,
) -> Result<PhysicalDerivatives> {
    let fg = field_grid(state, grid, params)?;
    let col = |f: fn(&NodeSample) -> f64| fg.nodes.iter().map(f).collect::<Vec<_>>();
    Ok(PhysicalDerivatives {
        u_x: col(|n| n.u_x),
        u_y: col(|n| n.u_y),
        v_x: col(|n| n.v_x),
        v_y: col(|n| n.v_y),
        p_x: col(|n| n.p_x),
        p_y: col(|n| n.p_y),
    })
}

/// Max-norm residuals of the governing equations over a field grid.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GoverningResiduals {
    /// Horizontal and vertical momentum balance on interior nodes.
    pub euler: f64,
    pub euler_location: (f64, f64),
    /// `|u_x + v_y|` and `|u_y - v_x|` on interior nodes.
    pub continuity: f64,
    pub irrotational: f64,
    /// `|v - (u-c) η'|` on the surface row.
    pub kinematic: f64,
    /// `|P - P0|` on the surface row.
    pub dynamic: f64,
    pub dynamic_location: (f64, f64),
}

pub fn governing_residuals(fields: &FieldGrid) -> GoverningResiduals {
    let grid = &fields.grid;
    let c = fields.c;
    let mut out = GoverningResiduals::default();
    for j in 1..grid.levels {
        for k in 1..grid.modes {
            let n = fields.at(j, k);
            let ex = (n.u - c) * n.u_x + n.v * n.u_y + n.p_x;
            let ey = (n.u - c) * n.v_x + n.v * n.v_y + n.p_y + fields.g;
            let e = ex.abs().max(ey.abs());
            if e > out.euler {
                out.euler = e;
                out.euler_location = (n.q, n.p);
            }
            out.continuity = out.continuity.max((n.u_x + n.v_y).abs());
            out.irrotational = out.irrotational.max((n.u_y - n.v_x).abs());
        }
    }
    for n in fields.surface() {
        let slope = n.h_q / n.h_p;
        out.kinematic = out.kinematic.max((n.v - (n.u - c) * slope).abs());
        let dyn_err = (n.pressure - fields.p0).abs();
        if dyn_err > out.dynamic {
            out.dynamic = dyn_err;
            out.dynamic_location = (n.q, n.p);
        }
    }
    out
}

/// Integrates `dψ` and `dφ` along the grid lines with the trapezoid rule
/// and returns the largest departure from `ψ = -p`, `φ = -q`.
pub fn stream_potential_defect(fields: &FieldGrid) -> f64 {
    let grid = &fields.grid;
    let c = fields.c;
    let mut worst = 0.0f64;
    // along q at fixed p: dψ/dq = -v x_q + (u-c) y_q, dφ/dq = (u-c) x_q + v y_q
    for j in 0..=grid.levels {
        let mut psi = -grid.p_nodes[j];
        let mut phi = 0.0;
        for k in 1..=grid.modes {
            let (a, b) = (fields.at(j, k - 1), fields.at(j, k));
            let dq = b.q - a.q;
            let dpsi = |n: &NodeSample| -n.v * n.h_p + (n.u - c) * n.h_q;
            let dphi = |n: &NodeSample| (n.u - c) * n.h_p + n.v * n.h_q;
            psi += 0.5 * dq * (dpsi(a) + dpsi(b));
            phi += 0.5 * dq * (dphi(a) + dphi(b));
            worst = worst.max((psi - b.psi).abs()).max((phi - b.phi).abs());
        }
    }
    // along p at fixed q: dψ/dp = -v x_p + (u-c) y_p with x_p = -h_q, y_p = h_p
    for k in 0..=grid.modes {
        let mut psi = 0.0;
        for j in 1..=grid.levels {
            let (a, b) = (fields.at(j - 1, k), fields.at(j, k));
            let dp = b.p - a.p;
            let dpsi = |n: &NodeSample| n.v * n.h_q + (n.u - c) * n.h_p;
            psi += 0.5 * dp * (dpsi(a) + dpsi(b));
            worst = worst.max((psi - b.psi).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{flat_water_state, make_grid, AmplitudeTarget};
    use std::f64::consts::PI;

    fn params() -> WaveParameters {
        WaveParameters::new(1.0, AmplitudeTarget::Height(0.0)).unwrap()
    }

    #[test]
    fn flat_fields() {
        let p = params();
        let flat = flat_water_state(&p, 8);
        let grid = make_grid(8, 4, &flat).unwrap();
        let fg = field_grid(&flat, &grid, &p).unwrap();
        for n in &fg.nodes {
            assert!((n.x - n.q / flat.c).abs() < 1e-15);
            assert!((n.y - n.p / flat.c).abs() < 1e-15);
            assert_eq!(n.v, 0.0);
            assert!(n.u.abs() < 1e-15);
            assert!((n.pressure - (p.p0 - p.g * n.y)).abs() < 1e-14);
            assert!((n.f + p.g * n.x).abs() < 1e-15);
            assert!(n.p_x.abs() < 1e-15);
            assert!((n.p_y + p.g).abs() < 1e-14);
            assert_eq!(n.psi, -n.p);
            assert_eq!(n.phi, -n.q);
        }
        let bed = fg.bed();
        assert!((bed[3].pressure - (p.p0 + p.g * p.d)).abs() < 1e-14);
    }

    #[test]
    fn crest_line_and_period() {
        let p = params();
        let mut st = flat_water_state(&p, 8);
        st.b[1] = 0.004;
        st.b[2] = 0.0007;
        let grid = make_grid(8, 4, &st).unwrap();
        let (x, _) = physical_map(&st, &grid, &p).unwrap();
        for j in 0..=grid.levels {
            assert_eq!(x[grid.index(j, 0)], 0.0);
            // x(cπ) - x(-cπ) = 2 x(cπ) by odd symmetry
            assert!((2.0 * x[grid.index(j, 8)] - 2.0 * PI * st.b[0] * st.c).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let p = params();
        let flat = flat_water_state(&p, 8);
        let grid = make_grid(8, 4, &flat).unwrap();
        let fg = field_grid(&flat, &grid, &p).unwrap();
        let mut buf = Vec::new();
        fg.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], FieldGrid::CSV_HEADER);
        assert_eq!(lines.len(), 1 + 9 * 5);
        assert_eq!(lines[1].split(',').count(), 16);
    }

    #[test]
    fn locate_inverts_the_map() {
        let p = params();
        let mut st = flat_water_state(&p, 8);
        st.b[1] = 0.01;
        let kit = FieldKit::new(&st, &p).unwrap();
        let s = kit.sample(0.7, -0.3).unwrap();
        let (theta, pp) = kit.locate(s.x, s.y).unwrap();
        assert!((theta - 0.7).abs() < 1e-12 && (pp + 0.3).abs() < 1e-12);
    }

    fn solved(h: f64, n: usize) -> (SolverState, WaveParameters) {
        let p = WaveParameters::new(1.0, AmplitudeTarget::Height(h)).unwrap();
        let flat = flat_water_state(&p, n);
        let grid = make_grid(n, 4, &flat).unwrap();
        let out = crate::solver::newton_solve(&flat, &grid, &p, p.target, 1e-13, 20).unwrap();
        (out.state, p)
    }

    #[test]
    fn solved_wave_satisfies_the_equations() {
        let (st, p) = solved(0.1, 32);
        let grid = make_grid(64, 16, &st.with_modes(32)).unwrap();
        let fg = FieldKit::new(&st, &p).unwrap().sample_grid(&grid).unwrap();
        let r = governing_residuals(&fg);
        assert!(r.euler < 1e-12, "{r:?}");
        assert!(r.continuity < 1e-12 && r.irrotational < 1e-12, "{r:?}");
        assert!(r.kinematic < 1e-13, "{r:?}");
        assert!(r.dynamic < 1e-10, "{r:?}");
        for n in fg.bed() {
            assert_eq!(n.v, 0.0);
            assert!((n.p_y + p.g).abs() < 1e-12);
            assert!((n.y + p.d).abs() < 1e-15);
        }
        assert!(stream_potential_defect(&fg) < 1e-3);
    }

    #[test]
    fn zeroed_mode_breaks_the_surface_condition() {
        let (mut st, p) = solved(0.1, 32);
        st.b[1] = 0.0;
        let grid = make_grid(32, 8, &st).unwrap();
        let fg = field_grid(&st, &grid, &p).unwrap();
        assert!(governing_residuals(&fg).dynamic > 1e-3);
    }
}
