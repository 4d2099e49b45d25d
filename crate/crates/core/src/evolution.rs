//! Time evolution through the generalized modal expansion, the Green's
//! function and sum rule it implies, and a finite-difference reference.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jordan::{bilinear, inner, JordanBlock};
use crate::model::{Grid, Kind, LeftBoundary, SystemModel, TwoComponentState};
use crate::spectral::fmt_num;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("evolution is defined for t ≥ 0 only, got t = {t}")));
    }
    Ok(())
}

/// `(−it)^m/m!·e^{−iωt}` for `m < len`.
fn secular(omega: C64, t: f64, len: usize) -> Vec<C64> {
    let e = (-I * omega * t).exp();
    let mut out = Vec::with_capacity(len);
    let mut term = C64::new(1.0, 0.0);
    for m in 0..len {
        out.push(term * e);
        term *= -I * t / (m as f64 + 1.0);
    }
    out
}

/// `|f_{j,n}(t)⟩ = Σ_m |f_{j,n−m}⟩(−it)^m/m!·e^{−iω_jt}`.
pub fn time_basis(block: &JordanBlock, t: f64) -> Result<Vec<TwoComponentState>> {
    check_time(t)?;
    let c = secular(block.omega(), t, block.size());
    let b = block.basis();
    Ok((0..block.size())
        .map(|n| {
            let mut s = b[n].map(|v| v * c[0]);
            for m in 1..=n {
                s.axpy(c[m], &b[n - m]);
            }
            s
        })
        .collect())
}

/// Expansion coefficients `a_{j,n}`, one vector per block.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalCoefficients {
    pub blocks: Vec<Vec<C64>>,
}

/// A set of blocks sharing one grid, optionally with some members left out
/// of every sum.
#[derive(Debug, Clone)]
pub struct ModalBasis {
    blocks: Vec<JordanBlock>,
    excluded: Vec<(usize, usize)>,
}

impl ModalBasis {
    pub fn new(blocks: Vec<JordanBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Validation("at least one block is required".into()));
        }
        let g = blocks[0].grid();
        if blocks.iter().any(|b| !Arc::ptr_eq(b.grid(), g) && b.grid() != g) {
            return Err(Error::Validation("all blocks must be sampled on the same grid".into()));
        }
        Ok(ModalBasis {
            blocks,
            excluded: Vec::new(),
        })
    }

    /// Drop member `n` of block `j` from every sum (for ablations).
    pub fn without(mut self, j: usize, n: usize) -> Self {
        self.excluded.push((j, n));
        self
    }

    pub fn blocks(&self) -> &[JordanBlock] {
        &self.blocks
    }

    fn kept(&self, j: usize, n: usize) -> bool {
        !self.excluded.contains(&(j, n))
    }

    /// `a_{j,n} = −(f_{j,M−1−n}, φ)/W_{j,M}`.
    pub fn project(&self, state: &TwoComponentState) -> ModalCoefficients {
        ModalCoefficients {
            blocks: self
                .blocks
                .par_iter()
                .map(|b| {
                    let m = b.size();
                    (0..m)
                        .map(|n| -bilinear(&b.basis()[m - 1 - n], state) / b.w_lead())
                        .collect()
                })
                .collect(),
        }
    }

    /// `a_{j,n} = ⟨f^{j,n}|φ⟩ / ⟨f^{j,n}|f_{j,n}⟩` through the dual states.
    pub fn project_dual(&self, state: &TwoComponentState) -> Result<ModalCoefficients> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                (0..b.size())
                    .map(|n| {
                        let d = b.dual(n)?;
                        Ok(inner(&d, state) / inner(&d, &b.basis()[n]))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModalCoefficients { blocks })
    }

    /// Coefficients of the basis at time 0 that reproduce the evolved
    /// state: `b_k = e^{−iωt} Σ_{n≥k} a_n (−it)^{n−k}/(n−k)!`.
    pub fn advance(&self, a: &ModalCoefficients, t: f64) -> Result<ModalCoefficients> {
        check_time(t)?;
        Ok(ModalCoefficients {
            blocks: self
                .blocks
                .iter()
                .zip(&a.blocks)
                .enumerate()
                .map(|(j, (b, aj))| {
                    let m = b.size();
                    let c = secular(b.omega(), t, m);
                    (0..m)
                        .map(|k| {
                            (k..m)
                                .filter(|&n| self.kept(j, n))
                                .map(|n| aj[n] * c[n - k])
                                .sum()
                        })
                        .collect()
                })
                .collect(),
        })
    }

    /// Sum of `c_{j,n}|f_{j,n}⟩` over kept members.
    pub fn synthesize(&self, c: &ModalCoefficients) -> TwoComponentState {
        let mut out = TwoComponentState::zero(self.blocks[0].grid());
        for (b, cj) in self.blocks.iter().zip(&c.blocks) {
            for (n, s) in b.basis().iter().enumerate() {
                out.axpy(cj[n], s);
            }
        }
        out
    }

    /// `Σ_j Σ_n a_{j,n}|f_{j,n}(t)⟩` on the block grid.
    pub fn evolve(&self, a: &ModalCoefficients, t: f64) -> Result<TwoComponentState> {
        Ok(self.synthesize(&self.advance(a, t)?))
    }

    /// Field `φ(x, t)` of the expansion at arbitrary points.
    pub fn field_at(&self, a: &ModalCoefficients, t: f64, xs: &[f64]) -> Result<Vec<C64>> {
        let b = self.advance(a, t)?;
        Ok(xs
            .par_iter()
            .map(|&x| {
                let mut s = C64::new(0.0, 0.0);
                for (blk, bj) in self.blocks.iter().zip(&b.blocks) {
                    let f = blk.fields(x);
                    for (n, c) in bj.iter().enumerate() {
                        s += c * f[n][0];
                    }
                }
                s
            })
            .collect())
    }

    /// `G(x, y; t) = i Σ_j Σ_n f_{j,M−1−n}(y) f_{j,n}(x, t) / (f_{j,M−1−n}, f_{j,n})`.
    pub fn greens_kernel(&self, x: f64, y: f64, t: f64) -> Result<C64> {
        check_time(t)?;
        let mut g = C64::new(0.0, 0.0);
        for (j, b) in self.blocks.iter().enumerate() {
            let m = b.size();
            let fx = b.fields(x);
            let fy = b.fields(y);
            let c = secular(b.omega(), t, m);
            for n in (0..m).filter(|&n| self.kept(j, n)) {
                let fxt: C64 = (0..=n).map(|k| fx[n - k][0] * c[k]).sum();
                g += fy[m - 1 - n][0] * fxt / (-b.w_lead());
            }
        }
        Ok(I * g)
    }

    /// Truncated sum rule smeared against `exp(−(x−y)²/2w²)`: returns the
    /// magnitude of the first component and the error of the second
    /// against the test function's value at `y`.
    pub fn sum_rule_check(&self, y: f64, width: f64) -> (f64, f64) {
        let g = self.blocks[0].grid();
        let test = |x: f64| (-(x - y) * (x - y) / (2.0 * width * width)).exp();
        let mut state = TwoComponentState::zero(g);
        for (j, b) in self.blocks.iter().enumerate() {
            let m = b.size();
            let fy = b.fields(y);
            for n in (0..m).filter(|&n| self.kept(j, n)) {
                let c = I * fy[m - 1 - n][0] / (-b.w_lead());
                state.axpy(c, &b.basis()[n]);
            }
        }
        let mut first = C64::new(0.0, 0.0);
        let mut second = C64::new(0.0, 0.0);
        for k in 0..g.len() {
            let w = g.weights()[k] * test(g.points()[k]);
            first += w * state.phi()[k];
            second += w * state.phat()[k];
        }
        for (x, wt) in state.phat_points() {
            second += test(x) * wt;
        }
        (first.norm(), (second - test(y)).norm())
    }
}

pub fn project(blocks: &ModalBasis, state: &TwoComponentState) -> ModalCoefficients {
    blocks.project(state)
}

pub fn evolve_modal(blocks: &ModalBasis, state: &TwoComponentState, t: f64) -> Result<TwoComponentState> {
    blocks.evolve(&blocks.project(state), t)
}

pub fn greens_kernel(blocks: &ModalBasis, x: f64, y: f64, t: f64) -> Result<C64> {
    blocks.greens_kernel(x, y, t)
}

pub fn sum_rule_check(blocks: &ModalBasis, y: f64, width: f64) -> (f64, f64) {
    blocks.sum_rule_check(y, width)
}

/// Field, velocity and regular momentum density at the cavity nodes of
/// the reference grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub velocity: Vec<f64>,
    pub phat: Vec<f64>,
}

impl Snapshot {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,re_phi,im_phi,re_phat,im_phat\n");
        for i in 0..self.x.len() {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                fmt_num(self.x[i]),
                fmt_num(self.phi[i]),
                fmt_num(0.0),
                fmt_num(self.phat[i]),
                fmt_num(0.0)
            );
        }
        s
    }

    /// Trapezoid weights on the (uniform) snapshot nodes.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.x.len();
        let h = (self.x[n - 1] - self.x[0]) / (n - 1) as f64;
        (0..n).map(|i| if i == 0 || i + 1 == n { 0.5 * h } else { h }).collect()
    }

    /// The snapshot as a state on `reference_grid(model, dx)` with the
    /// same nodes, point masses and edge values included.
    pub fn to_state(&self, model: &SystemModel, grid: &Arc<Grid>) -> Result<TwoComponentState> {
        if grid.len() != self.x.len() || grid.points().iter().zip(&self.x).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Err(Error::Validation("snapshot nodes do not match the grid".into()));
        }
        let node = |x: f64| {
            let h = self.x[1] - self.x[0];
            ((x - self.x[0]) / h).round() as usize
        };
        let mut st = TwoComponentState::zero(grid);
        for k in 0..grid.len() {
            st.phi[k] = C64::new(self.phi[k], 0.0);
            st.phat[k] = C64::new(grid.momentum[k] * self.velocity[k], 0.0);
        }
        for (k, d) in model.deltas().iter().enumerate() {
            let i = node(d.x);
            let w = model.momentum_weight(model.value_at(d.x));
            st.point_value[k] = [C64::new(self.phi[i], 0.0), C64::new(w * self.velocity[i], 0.0)];
            st.point_weight[k] = [C64::new(0.0, 0.0), C64::new(model.delta_momentum_weight(d) * self.velocity[i], 0.0)];
        }
        let ext = model.momentum_weight(model.exterior_value());
        let last = self.x.len() - 1;
        st.right_edge = [C64::new(self.phi[last], 0.0), C64::new(ext * self.velocity[last], 0.0)];
        if grid.left_edge.is_some() {
            st.left_edge = [C64::new(self.phi[0], 0.0), C64::new(ext * self.velocity[0], 0.0)];
        }
        Ok(st)
    }
}

/// Relative L² distance `‖u − v‖/‖v‖` under the given weights.
pub fn relative_l2(u: &[C64], v: &[C64], w: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((a, b), &wi) in u.iter().zip(v).zip(w) {
        num += wi * (a - b).norm_sqr();
        den += wi * b.norm_sqr();
    }
    (num / den).sqrt()
}

/// `∫ρ` (Wave) or `∫V` (Klein–Gordon) over `[lo, hi]`, exterior included.
fn integrate_value(model: &SystemModel, lo: f64, hi: f64) -> f64 {
    let ext = model.exterior_value();
    let mut s = 0.0;
    let (l, a) = (model.domain_left(), model.a());
    s += ext * ((hi.min(l) - lo).max(0.0) + (hi - lo.max(a)).max(0.0));
    for seg in model.segments() {
        let o = hi.min(seg.x_hi) - lo.max(seg.x_lo);
        if o > 0.0 {
            s += o * seg.value;
        }
    }
    s
}

/// Leapfrog on `[domain_left, a + t + margin]` (also extended to the left
/// for models outgoing there) with lumped node masses. Initial data are
/// zero outside the cavity, so nothing returns from the exterior and no
/// boundary condition is needed at `a`. `phat0` is the regular momentum
/// density; the point masses start at rest relative to it. Returns one
/// snapshot per requested time.
pub fn evolve_reference(
    model: &SystemModel,
    phi0: impl Fn(f64) -> f64,
    phat0: impl Fn(f64) -> f64,
    times: &[f64],
    dx: f64,
    dt: f64,
) -> Result<Vec<Snapshot>> {
    for &t in times {
        check_time(t)?;
    }
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    let l = model.domain_left();
    let a = model.a();
    let n_cav = ((a - l) / dx).round().max(1.0) as usize;
    let h = (a - l) / n_cav as f64;
    for d in model.deltas() {
        let r = (d.x - l) / h;
        if (r - r.round()).abs() > 1e-8 {
            return Err(Error::Validation(format!(
                "delta at x = {} is not a grid node for spacing {h}",
                d.x
            )));
        }
    }
    let margin = 10.0 * h + 0.1;
    let ext_r = ((t_end + margin) / h).ceil() as usize;
    let ext_l = match model.boundary_left() {
        LeftBoundary::Node => 0,
        LeftBoundary::Outgoing => ext_r,
    };
    let n = ext_l + n_cav + ext_r + 1;
    let x0 = l - ext_l as f64 * h;
    let xs: Vec<f64> = (0..n).map(|i| x0 + i as f64 * h).collect();
    let kind = model.kind();
    let mut mass = vec![0.0; n];
    let mut pot = vec![0.0; n];
    for i in 0..n {
        let lo = xs[i] - 0.5 * h;
        let hi = xs[i] + 0.5 * h;
        match kind {
            Kind::Wave => mass[i] = integrate_value(model, lo, hi),
            Kind::KleinGordon => {
                mass[i] = h;
                pot[i] = integrate_value(model, lo, hi);
            }
        }
    }
    for d in model.deltas() {
        let i = ext_l + ((d.x - l) / h).round() as usize;
        match kind {
            Kind::Wave => mass[i] += d.mu,
            Kind::KleinGordon => pot[i] += d.mu,
        }
    }
    let min_density = mass.iter().map(|m| m / h).fold(f64::INFINITY, f64::min);
    let bound = h * min_density.sqrt();
    if dt > bound * (1.0 + 1e-9) {
        return Err(Error::Cfl { dt, bound });
    }
    let fixed_left = model.boundary_left() == LeftBoundary::Node;
    let cav = |i: usize| i >= ext_l && i <= ext_l + n_cav;
    let accel = |u: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let um = if i > 0 { u[i - 1] } else { 0.0 };
            let up = if i + 1 < n { u[i + 1] } else { 0.0 };
            out[i] = ((up - 2.0 * u[i] + um) / h - pot[i] * u[i]) / mass[i];
        }
        if fixed_left {
            out[0] = 0.0;
        }
    };
    let mut u0 = vec![0.0; n];
    let mut v0 = vec![0.0; n];
    for i in 0..n {
        if cav(i) {
            u0[i] = phi0(xs[i]);
            v0[i] = phat0(xs[i]) / model.momentum_weight(model.value_at(xs[i]));
        }
    }
    if fixed_left {
        u0[0] = 0.0;
        v0[0] = 0.0;
    }
    let steps_total = (t_end / dt).ceil() as usize;
    let dt = if steps_total > 0 { t_end / steps_total as f64 } else { dt };
    let mut order: Vec<(usize, f64)> = times.iter().cloned().enumerate().collect();
    order.sort_by(|p, q| p.1.total_cmp(&q.1));
    let mut out = vec![None; times.len()];
    let mut acc = vec![0.0; n];
    accel(&u0, &mut acc);
    let mut prev = u0.clone();
    let mut cur: Vec<f64> = (0..n).map(|i| u0[i] + dt * v0[i] + 0.5 * dt * dt * acc[i]).collect();
    if fixed_left {
        cur[0] = 0.0;
    }
    let snapshot = |t: f64, before: &[f64], at: &[f64], after: &[f64], dtv: f64| {
        let range = ext_l..=ext_l + n_cav;
        let velocity: Vec<f64> = range.clone().map(|i| (after[i] - before[i]) / (2.0 * dtv)).collect();
        Snapshot {
            t,
            x: xs[range.clone()].to_vec(),
            phi: at[range.clone()].to_vec(),
            phat: range
                .zip(&velocity)
                .map(|(i, v)| model.momentum_weight(model.value_at(xs[i])) * v)
                .collect(),
            velocity,
        }
    };
    let mut next = vec![0.0; n];
    let mut step = 1usize;
    let mut k = 0;
    while k < order.len() && order[k].1 == 0.0 {
        let back: Vec<f64> = (0..n).map(|i| u0[i] - dt * v0[i] + 0.5 * dt * dt * acc[i]).collect();
        out[order[k].0] = Some(snapshot(0.0, &back, &u0, &cur, dt));
        k += 1;
    }
    while k < order.len() {
        accel(&cur, &mut acc);
        for i in 0..n {
            next[i] = 2.0 * cur[i] - prev[i] + dt * dt * acc[i];
        }
        if fixed_left {
            next[0] = 0.0;
        }
        while k < order.len() && (order[k].1 / dt - step as f64).abs() < 1e-6 {
            out[order[k].0] = Some(snapshot(order[k].1, &prev, &cur, &next, dt));
            k += 1;
        }
        if k < order.len() && order[k].1 < step as f64 * dt - 1e-9 {
            return Err(Error::Validation(format!(
                "output time {} is not a multiple of the time step {dt}",
                order[k].1
            )));
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        step += 1;
    }
    Ok(out.into_iter().map(|s| s.unwrap()).collect())
}

/// Uniform cavity grid matching the reference solver's nodes.
pub fn reference_grid(model: &SystemModel, dx: f64) -> Arc<Grid> {
    let n = ((model.a() - model.domain_left()) / dx).round().max(1.0) as usize;
    Grid::uniform(model, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::{build_block_with, default_grid};
    use crate::model::builtin_double_pole_model;
    use crate::spectral::{SearchBox, SpectrumOptions, Wronskian};

    fn basis_for(model: &SystemModel, b: SearchBox) -> ModalBasis {
        let grid = default_grid(model);
        let rep = Wronskian::new(model).spectrum(&b, &SpectrumOptions::default()).unwrap();
        let blocks = rep
            .zeros
            .iter()
            .map(|z| build_block_with(model, z.omega, z.multiplicity, crate::jordan::BlockScale::Preferred, &grid).unwrap())
            .collect();
        ModalBasis::new(blocks).unwrap()
    }

    fn dp_basis() -> ModalBasis {
        basis_for(&builtin_double_pole_model(1.0).unwrap(), SearchBox::new(-20.0, 20.0, -8.0, -0.01).unwrap())
    }

    #[test]
    fn time_basis_at_zero_is_identity_and_shows_secular_term() {
        let basis = dp_basis();
        let j = basis.blocks().iter().position(|b| b.size() == 2).unwrap();
        let b = &basis.blocks()[j];
        let t0 = time_basis(b, 0.0).unwrap();
        for n in 0..2 {
            assert!(t0[n].max_abs_diff(&b.basis()[n]) < 1e-15);
        }
        let t = 0.7;
        let ft = time_basis(b, t).unwrap();
        let e = (-I * b.omega() * t).exp();
        let expect = &b.basis()[1].map(|v| v * e) + &b.basis()[0].map(|v| v * (-I * t * e));
        assert!(ft[1].max_abs_diff(&expect) < 1e-13);
        assert!(time_basis(b, -1.0).is_err());
    }

    #[test]
    fn projection_reproduces_labels() {
        let basis = dp_basis();
        for (j, b) in basis.blocks().iter().enumerate() {
            for n in 0..b.size() {
                let a = basis.project(&b.basis()[n]);
                for (k, ak) in a.blocks.iter().enumerate() {
                    for (m, v) in ak.iter().enumerate() {
                        let expect = if (k, m) == (j, n) { 1.0 } else { 0.0 };
                        assert!((v - expect).norm() < 1e-8, "({j},{n}) -> ({k},{m}) = {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn dual_and_bilinear_projections_agree() {
        let basis = dp_basis();
        let g = basis.blocks()[0].grid();
        let s = TwoComponentState::from_fn(g, |x| C64::new(x * (1.0 - x), 0.3 * x), |x| C64::new(0.1, x * x));
        let a = basis.project(&s);
        let b = basis.project_dual(&s).unwrap();
        for (p, q) in a.blocks.iter().flatten().zip(b.blocks.iter().flatten()) {
            assert!((p - q).norm() < 1e-10 * (1.0 + p.norm()));
        }
    }

    #[test]
    fn double_pole_member_evolves_with_linear_growth() {
        let basis = dp_basis();
        let j = basis.blocks().iter().position(|b| b.size() == 2).unwrap();
        let b = &basis.blocks()[j];
        let t = 1.3;
        let out = evolve_modal(&basis, &b.basis()[1], t).unwrap();
        let e = (-I * b.omega() * t).exp();
        let expect = &b.basis()[1].map(|v| v * e) + &b.basis()[0].map(|v| v * (-I * t * e));
        assert!(out.max_abs_diff(&expect) < 1e-8);
    }

    #[test]
    fn semigroup_of_coefficients() {
        let basis = dp_basis();
        let g = basis.blocks()[0].grid();
        let s = TwoComponentState::from_field(g, |x| (std::f64::consts::PI * x).sin().powi(4));
        let a = basis.project(&s);
        let (t1, t2) = (0.4, 1.1);
        let one = basis.advance(&a, t1 + t2).unwrap();
        let two = basis.advance(&basis.advance(&a, t1).unwrap(), t2).unwrap();
        for (p, q) in one.blocks.iter().flatten().zip(two.blocks.iter().flatten()) {
            assert!((p - q).norm() <= 1e-10 * (1.0 + p.norm()));
        }
    }

    #[test]
    fn simple_mode_products_follow_coefficient_dynamics() {
        let basis = dp_basis();
        let g = basis.blocks()[0].grid();
        let s = TwoComponentState::from_field(g, |x| (std::f64::consts::PI * x).sin().powi(4));
        let a = basis.project(&s);
        let t = 0.8;
        let st = basis.evolve(&a, t).unwrap();
        let s0 = basis.synthesize(&a);
        for b in basis.blocks().iter().filter(|b| b.size() == 1) {
            let f = &b.basis()[0];
            let lhs = bilinear(f, &st);
            let rhs = (-I * b.omega() * t).exp() * bilinear(f, &s0);
            assert!((lhs - rhs).norm() < 1e-8 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn greens_kernel_is_symmetric() {
        let basis = dp_basis();
        for &(x, y, t) in &[(0.2, 0.7, 0.5), (0.9, 0.1, 2.0), (0.5, 0.5, 0.0)] {
            let p = basis.greens_kernel(x, y, t).unwrap();
            let q = basis.greens_kernel(y, x, t).unwrap();
            assert!((p - q).norm() < 1e-12 * (1.0 + p.norm()));
        }
    }

    #[test]
    fn sum_rule_improves_with_more_modes_on_slab() {
        let m = SystemModel::slab(4.0, 1.0).unwrap();
        let few = basis_for(&m, SearchBox::new(-8.0, 8.0, -2.0, -0.01).unwrap());
        let many = basis_for(&m, SearchBox::new(-31.0, 31.0, -2.0, -0.01).unwrap());
        let (f1, s1) = few.sum_rule_check(0.5, 0.05);
        let (f2, s2) = many.sum_rule_check(0.5, 0.05);
        assert!(f2 < f1 && s2 < s1, "{f2} {f1} {s2} {s1}");
    }

    #[test]
    fn free_pulse_leaves_the_cavity() {
        let m = SystemModel::slab(1.0, 1.0).unwrap();
        let pulse = |x: f64| (-(x - 0.5f64).powi(2) / 0.005).exp();
        let dx = 1e-3;
        let snaps = evolve_reference(&m, pulse, |_| 0.0, &[0.0, 2.5], dx, 0.5 * dx).unwrap();
        let e0: f64 = snaps[0].phi.iter().map(|v| v * v).sum();
        let e1: f64 = snaps[1].phi.iter().map(|v| v * v).sum();
        assert!(e1 < 1e-8 * e0);
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let m = builtin_double_pole_model(1.0).unwrap();
        assert!(matches!(
            evolve_reference(&m, |_| 0.0, |_| 0.0, &[1.0], 1e-2, 1e-2),
            Err(Error::Cfl { .. })
        ));
    }

    #[test]
    fn slab_field_repeats_with_mode_decay() {
        // Every slab mode has the same damping and real parts at odd
        // multiples of π/4, so after t = 4 the field returns negated.
        let m = SystemModel::slab(4.0, 1.0).unwrap();
        let pulse = |x: f64| (std::f64::consts::PI * x).sin().powi(4);
        let dx = 1e-3;
        let snaps = evolve_reference(&m, pulse, |_| 0.0, &[6.0, 10.0], dx, dx).unwrap();
        let im0 = -3.0f64.ln() / 4.0;
        let ratio = -(4.0 * im0).exp();
        let w = snaps[0].weights();
        let u: Vec<C64> = snaps[1].phi.iter().map(|&v| C64::new(v, 0.0)).collect();
        let v: Vec<C64> = snaps[0].phi.iter().map(|&v| C64::new(v * ratio, 0.0)).collect();
        assert!(relative_l2(&u, &v, &w) < 1e-3, "{}", relative_l2(&u, &v, &w));
    }

    #[test]
    fn reference_projection_on_double_pole_has_secular_term() {
        let m = builtin_double_pole_model(1.0).unwrap();
        let dx = 1e-3;
        let grid = reference_grid(&m, dx);
        let rep = Wronskian::new(&m).spectrum(&SearchBox::new(-1.0, 1.0, -3.0, -1.0).unwrap(), &SpectrumOptions::default()).unwrap();
        let z = rep.zeros[0];
        assert_eq!(z.multiplicity, 2);
        let b = build_block_with(&m, z.omega, 2, crate::jordan::BlockScale::Preferred, &grid).unwrap();
        let basis = ModalBasis::new(vec![b]).unwrap();
        let pulse = |x: f64| (std::f64::consts::PI * x).sin().powi(2);
        let times = [0.0, 0.5, 1.0, 1.5, 2.0];
        let snaps = evolve_reference(&m, pulse, |_| 0.0, &times, dx, 0.25 * dx).unwrap();
        let a0 = basis.project(&snaps[0].to_state(&m, &grid).unwrap());
        assert!(a0.blocks[0][1].norm() > 1e-2);
        for (s, &t) in snaps.iter().zip(&times).skip(1) {
            let at = basis.project(&s.to_state(&m, &grid).unwrap());
            let expect = basis.advance(&a0, t).unwrap();
            for n in 0..2 {
                let d = (at.blocks[0][n] - expect.blocks[0][n]).norm();
                assert!(d < 1e-4 * a0.blocks[0][1].norm(), "t={t} n={n} d={d}");
            }
        }
    }
}
