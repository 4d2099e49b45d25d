//! Exact propagation of `f″ + k²(x, ω) f = 0` through piecewise-constant
//! media and point terms, for single frequencies and for Taylor chains in ω.

use std::sync::Arc;

use crate::model::{Kind, LeftBoundary, SystemModel};
use crate::tps::Tps;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Satisfies the left boundary condition (`f`).
    Left,
    /// Purely outgoing `e^{iωx}` beyond `a` (`g`).
    Right,
}

/// A constant-coefficient interval; model segments split at delta positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub x_lo: f64,
    pub x_hi: f64,
    pub value: f64,
    /// Point coefficient of a delta sitting at `x_hi`, if any.
    pub delta_at_end: Option<f64>,
}

/// Pieces of the cavity, shared by every solution of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    kind: Kind,
    boundary_left: LeftBoundary,
    pieces: Vec<Piece>,
}

impl Layout {
    pub fn new(model: &SystemModel) -> Arc<Layout> {
        let mut pieces = Vec::with_capacity(model.segments().len() + model.deltas().len());
        let mut deltas = model.deltas().iter().peekable();
        for s in model.segments() {
            let mut lo = s.x_lo;
            while let Some(d) = deltas.peek() {
                if d.x > s.x_hi {
                    break;
                }
                // Deltas at a joint close the segment ending there.
                pieces.push(Piece {
                    x_lo: lo,
                    x_hi: d.x,
                    value: s.value,
                    delta_at_end: Some(d.mu),
                });
                lo = d.x;
                deltas.next();
            }
            if lo < s.x_hi {
                pieces.push(Piece {
                    x_lo: lo,
                    x_hi: s.x_hi,
                    value: s.value,
                    delta_at_end: None,
                });
            }
        }
        Arc::new(Layout {
            kind: model.kind(),
            boundary_left: model.boundary_left(),
            pieces,
        })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn left(&self) -> f64 {
        self.pieces[0].x_lo
    }

    pub fn right(&self) -> f64 {
        self.pieces.last().unwrap().x_hi
    }

    /// Piece containing `x`; at an interior joint the piece to the right.
    pub fn locate(&self, x: f64) -> usize {
        let i = self.pieces.partition_point(|p| p.x_lo <= x);
        i.saturating_sub(1).min(self.pieces.len() - 1)
    }

    fn k_squared(&self, value: f64, omega: C64) -> C64 {
        match self.kind {
            Kind::Wave => omega * omega * value,
            Kind::KleinGordon => omega * omega - value,
        }
    }

    fn jump(&self, mu: f64, omega: C64) -> C64 {
        match self.kind {
            Kind::Wave => -omega * omega * mu,
            Kind::KleinGordon => C64::new(mu, 0.0),
        }
    }

    fn k_squared_tps(&self, value: f64, omega0: C64, len: usize) -> Tps {
        let mut z = Tps::zero(len);
        let (c0, c1, c2) = match self.kind {
            Kind::Wave => (omega0 * omega0 * value, 2.0 * omega0 * value, C64::new(value, 0.0)),
            Kind::KleinGordon => (omega0 * omega0 - value, 2.0 * omega0, ONE),
        };
        z[0] = c0;
        if len > 1 {
            z[1] = c1;
        }
        if len > 2 {
            z[2] = c2;
        }
        z
    }

    fn jump_tps(&self, mu: f64, omega0: C64, len: usize) -> Tps {
        match self.kind {
            Kind::Wave => self.k_squared_tps(mu, omega0, len).scale_real(-1.0),
            Kind::KleinGordon => Tps::constant(C64::new(mu, 0.0), len),
        }
    }
}

/// `cos(√z h)` and `sin(√z h)/√z`.
pub fn cos_sinc(z: C64, h: f64) -> (C64, C64) {
    let u = z * h * h;
    if u.norm() < 1e-8 {
        let c = ONE - u / 2.0 + u * u / 24.0;
        let s = (ONE - u / 6.0 + u * u / 120.0) * h;
        return (c, s);
    }
    let k = z.sqrt();
    let kh = k * h;
    (kh.cos(), kh.sin() / k)
}

/// Apply the segment transfer matrix to `(f, f′)` over a signed width `h`.
#[inline]
pub fn transfer(z: C64, h: f64, y: [C64; 2]) -> [C64; 2] {
    let (c, s) = cos_sinc(z, h);
    [c * y[0] + s * y[1], -z * s * y[0] + c * y[1]]
}

/// Taylor coefficients of `cos(√z h)` and `sin(√z h)/√z` in `z` about `z0`.
fn cos_sinc_coeffs(z0: C64, h: f64, n: usize) -> (Vec<C64>, Vec<C64>) {
    let u = -h * h;
    let w = z0 * u;
    let mut c = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut um = 1.0;
    let mut fact_2m = 1.0; // (2m)!
    for m in 0..n {
        let mf = m as f64;
        if m > 0 {
            um *= u;
            fact_2m *= (2.0 * mf - 1.0) * (2.0 * mf);
        }
        let series = |first: f64, odd: f64| {
            let mut t = C64::new(first, 0.0);
            let mut sum = t;
            for q in 0..60 {
                let qf = q as f64;
                let a = 2.0 * qf + 2.0 * mf + odd;
                t = t * w * ((qf + mf + 1.0) / (qf + 1.0)) / ((a + 1.0) * (a + 2.0));
                sum += t;
                if t.norm() <= 1e-18 * sum.norm() {
                    break;
                }
            }
            sum
        };
        c.push(series(1.0 / fact_2m, 0.0) * um);
        s.push(series(1.0 / (fact_2m * (2.0 * mf + 1.0)), 1.0) * (um * h));
    }
    (c, s)
}

/// Transfer of a Taylor pair `(f, f′)` over a signed width `h`.
pub fn transfer_tps(z: &Tps, h: f64, y: &[Tps; 2]) -> [Tps; 2] {
    let z0 = z[0];
    let steps = ((z0.norm() * h * h / 0.25).sqrt().ceil() as usize).max(1);
    let hs = h / steps as f64;
    let (cc, sc) = cos_sinc_coeffs(z0, hs, z.len());
    let c = z.compose(&cc);
    let s = z.compose(&sc);
    let zs = z * &s;
    let mut y = y.clone();
    for _ in 0..steps {
        let f = &(&c * &y[0]) + &(&s * &y[1]);
        let fp = &(&c * &y[1]) - &(&zs * &y[0]);
        y = [f, fp];
    }
    y
}

/// Solution at one frequency, stored as `(f, f′)` at the start of every
/// piece (after any point term there), plus both cavity edges.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    omega: C64,
    side: Side,
    layout: Arc<Layout>,
    starts: Vec<[C64; 2]>,
    /// `(f, f′)` at `a⁺`.
    right_edge: [C64; 2],
    /// `(f, f′)` at the left end.
    left_edge: [C64; 2],
}

impl ModeSolution {
    pub fn omega(&self) -> C64 {
        self.omega
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// `(f(x), f′(x))`; at a delta the right-side derivative. Outside the
    /// cavity the exterior continuation is returned.
    pub fn eval(&self, x: f64) -> [C64; 2] {
        let l = &self.layout;
        if x > l.right() {
            let z = l.k_squared(exterior_value(l.kind), self.omega);
            return transfer(z, x - l.right(), self.right_edge);
        }
        if x < l.left() {
            let z = l.k_squared(exterior_value(l.kind), self.omega);
            return transfer(z, x - l.left(), self.left_edge);
        }
        let i = l.locate(x);
        let p = &l.pieces[i];
        transfer(l.k_squared(p.value, self.omega), x - p.x_lo, self.starts[i])
    }

    pub fn value(&self, x: f64) -> C64 {
        self.eval(x)[0]
    }

    pub fn right_edge(&self) -> [C64; 2] {
        self.right_edge
    }

    pub fn left_edge(&self) -> [C64; 2] {
        self.left_edge
    }

    /// `(f(x⁻), f′(x⁻))` and `(f(x⁺), f′(x⁺))` at the end of every piece.
    pub fn piece_ends(&self) -> Vec<([C64; 2], [C64; 2])> {
        let l = &self.layout;
        l.pieces
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let z = l.k_squared(p.value, self.omega);
                let before = transfer(z, p.width(), self.starts[i]);
                let after = match p.delta_at_end {
                    Some(mu) => [before[0], before[1] + l.jump(mu, self.omega) * before[0]],
                    None => before,
                };
                (before, after)
            })
            .collect()
    }
}

impl Piece {
    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }
}

fn exterior_value(kind: Kind) -> f64 {
    match kind {
        Kind::Wave => 1.0,
        Kind::KleinGordon => 0.0,
    }
}

fn left_initial(layout: &Layout, omega: C64) -> [C64; 2] {
    match layout.boundary_left {
        LeftBoundary::Node => [ZERO, ONE],
        LeftBoundary::Outgoing => [ONE, -I * omega],
    }
}

fn right_initial(layout: &Layout, omega: C64) -> [C64; 2] {
    let e = (I * omega * layout.right()).exp();
    [e, I * omega * e]
}

/// `(f, f′)` at `a⁺` for the left solution, without storing anything.
pub fn left_at_edge(layout: &Layout, omega: C64) -> [C64; 2] {
    let mut y = left_initial(layout, omega);
    for p in &layout.pieces {
        y = transfer(layout.k_squared(p.value, omega), p.width(), y);
        if let Some(mu) = p.delta_at_end {
            y[1] += layout.jump(mu, omega) * y[0];
        }
    }
    y
}

pub fn propagate_left(model: &SystemModel, omega: C64) -> ModeSolution {
    propagate_left_on(&Layout::new(model), omega)
}

pub fn propagate_left_on(layout: &Arc<Layout>, omega: C64) -> ModeSolution {
    let l = layout;
    let left_edge = left_initial(l, omega);
    let mut y = left_edge;
    let mut starts = Vec::with_capacity(l.pieces.len());
    for p in &l.pieces {
        starts.push(y);
        y = transfer(l.k_squared(p.value, omega), p.width(), y);
        if let Some(mu) = p.delta_at_end {
            y[1] += l.jump(mu, omega) * y[0];
        }
    }
    ModeSolution {
        omega,
        side: Side::Left,
        layout: Arc::clone(l),
        starts,
        right_edge: y,
        left_edge,
    }
}

pub fn propagate_right(model: &SystemModel, omega: C64) -> ModeSolution {
    propagate_right_on(&Layout::new(model), omega)
}

pub fn propagate_right_on(layout: &Arc<Layout>, omega: C64) -> ModeSolution {
    let l = layout;
    let right_edge = right_initial(l, omega);
    let mut y = right_edge;
    let mut starts = vec![[ZERO; 2]; l.pieces.len()];
    for (i, p) in l.pieces.iter().enumerate().rev() {
        if let Some(mu) = p.delta_at_end {
            y[1] -= l.jump(mu, omega) * y[0];
        }
        y = transfer(l.k_squared(p.value, omega), -p.width(), y);
        starts[i] = y;
    }
    ModeSolution {
        omega,
        side: Side::Right,
        layout: Arc::clone(l),
        starts,
        right_edge,
        left_edge: y,
    }
}

/// Taylor coefficients `(1/n!) ∂_ωⁿ` of a solution about `omega0`, stored
/// like [`ModeSolution`] with series in place of numbers.
#[derive(Debug, Clone)]
pub struct TaylorChain {
    omega0: C64,
    side: Side,
    layout: Arc<Layout>,
    starts: Vec<[Tps; 2]>,
    right_edge: [Tps; 2],
    left_edge: [Tps; 2],
}

impl TaylorChain {
    pub fn omega0(&self) -> C64 {
        self.omega0
    }

    pub fn order(&self) -> usize {
        self.right_edge[0].len()
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// Series `(f, f′)` at `x`; conventions as [`ModeSolution::eval`].
    pub fn eval(&self, x: f64) -> [Tps; 2] {
        let l = &self.layout;
        let n = self.order();
        if x > l.right() {
            let z = l.k_squared_tps(exterior_value(l.kind), self.omega0, n);
            return transfer_tps(&z, x - l.right(), &self.right_edge);
        }
        if x < l.left() {
            let z = l.k_squared_tps(exterior_value(l.kind), self.omega0, n);
            return transfer_tps(&z, x - l.left(), &self.left_edge);
        }
        let i = l.locate(x);
        let p = &l.pieces[i];
        let z = l.k_squared_tps(p.value, self.omega0, n);
        transfer_tps(&z, x - p.x_lo, &self.starts[i])
    }

    /// Coefficient `n` of `(f, f′)` at `x`.
    pub fn coefficient(&self, n: usize, x: f64) -> [C64; 2] {
        let y = self.eval(x);
        [y[0][n], y[1][n]]
    }

    pub fn right_edge(&self) -> &[Tps; 2] {
        &self.right_edge
    }

    pub fn left_edge(&self) -> &[Tps; 2] {
        &self.left_edge
    }
}

/// Chain of `order` Taylor coefficients of the chosen solution about
/// `omega0`, exact up to rounding.
pub fn propagate_taylor(model: &SystemModel, omega0: C64, order: usize, side: Side) -> TaylorChain {
    propagate_taylor_on(&Layout::new(model), omega0, order, side)
}

pub fn propagate_taylor_on(layout: &Arc<Layout>, omega0: C64, order: usize, side: Side) -> TaylorChain {
    assert!(order >= 1, "Taylor order must be at least one");
    let l = layout;
    let n = order;
    let mut starts = vec![[Tps::zero(n), Tps::zero(n)]; l.pieces.len()];
    match side {
        Side::Left => {
            let left_edge = match l.boundary_left {
                LeftBoundary::Node => [Tps::zero(n), Tps::constant(ONE, n)],
                LeftBoundary::Outgoing => [Tps::constant(ONE, n), Tps::linear(-I * omega0, -I, n)],
            };
            let mut y = left_edge.clone();
            for (i, p) in l.pieces.iter().enumerate() {
                starts[i] = y.clone();
                let z = l.k_squared_tps(p.value, omega0, n);
                y = transfer_tps(&z, p.width(), &y);
                if let Some(mu) = p.delta_at_end {
                    let j = &l.jump_tps(mu, omega0, n) * &y[0];
                    y[1] += &j;
                }
            }
            TaylorChain {
                omega0,
                side,
                layout: Arc::clone(l),
                starts,
                right_edge: y,
                left_edge,
            }
        }
        Side::Right => {
            let g = Tps::exp_linear(I * omega0 * l.right(), I * l.right(), n);
            let gp = &Tps::linear(I * omega0, I, n) * &g;
            let right_edge = [g, gp];
            let mut y = right_edge.clone();
            for (i, p) in l.pieces.iter().enumerate().rev() {
                if let Some(mu) = p.delta_at_end {
                    let j = &l.jump_tps(mu, omega0, n) * &y[0];
                    y[1] -= &j;
                }
                let z = l.k_squared_tps(p.value, omega0, n);
                y = transfer_tps(&z, -p.width(), &y);
                starts[i] = y.clone();
            }
            TaylorChain {
                omega0,
                side,
                layout: Arc::clone(l),
                starts,
                right_edge,
                left_edge: y,
            }
        }
    }
}

/// `f′g − fg′` from two `(value, slope)` pairs at the same point.
#[inline]
pub fn wronskian_of(f: [C64; 2], g: [C64; 2]) -> C64 {
    f[1] * g[0] - f[0] * g[1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_double_pole_model, double_pole_gamma, Delta, Segment};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn free_half_line_left_solution_is_sine() {
        let m = SystemModel::slab(1.0, 1.0).unwrap();
        let w = c(2.3, -0.4);
        let f = propagate_left(&m, w);
        for &x in &[0.1, 0.5, 0.77, 1.0, 1.6] {
            let expect = (w * x).sin() / w;
            assert!((f.value(x) - expect).norm() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn free_half_line_right_solution_is_plane_wave() {
        let m = SystemModel::slab(1.0, 2.0).unwrap();
        let w = c(1.1, -0.7);
        let g = propagate_right(&m, w);
        for &x in &[0.0, 0.3, 1.9, 2.5] {
            assert!((g.value(x) - (I * w * x).exp()).norm() < 1e-13);
        }
    }

    #[test]
    fn slab_interior_is_scaled_sine() {
        let n = 1.7;
        let m = SystemModel::slab(n * n, 1.3).unwrap();
        let w = c(0.9, -0.2);
        let f = propagate_left(&m, w);
        for &x in &[0.2, 0.9, 1.3] {
            let expect = (n * w * x).sin() / (n * w);
            assert!((f.value(x) - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn double_pole_mode_is_sinh() {
        let k = 1.0;
        let m = builtin_double_pole_model(k).unwrap();
        let w = c(0.0, -double_pole_gamma(k));
        let f = propagate_left(&m, w);
        // f′(0) = 1 so f = sinh(Kx)/K inside.
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            assert!((f.value(x) - c((k * x).sinh() / k, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn right_solution_is_proportional_at_double_zero() {
        let m = builtin_double_pole_model(1.0).unwrap();
        let w = c(0.0, -double_pole_gamma(1.0));
        let f = propagate_left(&m, w);
        let g = propagate_right(&m, w);
        let ratio = g.eval(0.0)[1];
        for &x in &[0.0, 0.25, 0.6, 1.0] {
            assert!((g.value(x) - ratio * f.value(x)).norm() < 1e-12);
        }
    }

    #[test]
    fn delta_jump_condition_holds() {
        let m = SystemModel::new(
            Kind::Wave,
            LeftBoundary::Node,
            0.0,
            1.0,
            vec![Segment::new(0.0, 0.5, 2.0), Segment::new(0.5, 1.0, 3.0)],
            vec![Delta { x: 0.3, mu: 0.4 }, Delta { x: 1.0, mu: 0.2 }],
        )
        .unwrap();
        let w = c(1.3, -0.5);
        let f = propagate_left(&m, w);
        let ends = f.piece_ends();
        for (p, (before, after)) in f.layout().pieces().iter().zip(ends) {
            if let Some(mu) = p.delta_at_end {
                assert_eq!(before[0], after[0]);
                let jump = after[1] - before[1];
                assert!((jump + mu * w * w * before[0]).norm() < 1e-14);
            }
        }
        assert_eq!(f.right_edge(), f.piece_ends().last().unwrap().1);
    }

    #[test]
    fn taylor_chain_matches_finite_differences() {
        let m = builtin_double_pole_model(1.0).unwrap();
        let w0 = c(0.4, -1.7);
        let chain = propagate_taylor(&m, w0, 3, Side::Left);
        let h = 1e-5;
        for &x in &[0.3, 0.8, 1.0] {
            let fp = propagate_left(&m, w0 + h).value(x);
            let fm = propagate_left(&m, w0 - h).value(x);
            let f0 = propagate_left(&m, w0).value(x);
            let d1 = (fp - fm) / (2.0 * h);
            let d2 = (fp - 2.0 * f0 + fm) / (2.0 * h * h);
            let y = chain.eval(x);
            assert!((y[0][0] - f0).norm() < 1e-13);
            assert!((y[0][1] - d1).norm() < 1e-8, "x={x}: {} vs {d1}", y[0][1]);
            assert!((y[0][2] - d2).norm() < 1e-4);
        }
    }

    #[test]
    fn free_half_line_first_derivative() {
        let m = SystemModel::slab(1.0, 1.0).unwrap();
        let w = c(1.2, -0.3);
        let chain = propagate_taylor(&m, w, 2, Side::Left);
        // d/dω [sin(ωx)/ω] = x cos(ωx)/ω − sin(ωx)/ω²
        for &x in &[0.2, 0.7, 1.0] {
            let expect = x * (w * x).cos() / w - (w * x).sin() / (w * w);
            assert!((chain.eval(x)[0][1] - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn right_chain_matches_scalar_solution() {
        let m = builtin_double_pole_model(2.0).unwrap();
        let w0 = c(3.0, -0.8);
        let chain = propagate_taylor(&m, w0, 4, Side::Right);
        let g = propagate_right(&m, w0);
        let eps = c(1e-3, 2e-3);
        let ge = propagate_right(&m, w0 + eps);
        for &x in &[0.0, 0.5, 1.0] {
            let y = chain.eval(x);
            assert!((y[0][0] - g.value(x)).norm() < 1e-12);
            assert!((y[0].eval(eps) - ge.value(x)).norm() < 1e-10);
        }
    }

    #[test]
    fn high_frequency_chain_is_accurate() {
        let m = builtin_double_pole_model(1.0).unwrap();
        let w0 = c(35.0, -0.9);
        let chain = propagate_taylor(&m, w0, 3, Side::Left);
        let f = propagate_left(&m, w0);
        let eps = c(1e-4, 0.0);
        let fe = propagate_left(&m, w0 + eps);
        let y = chain.right_edge();
        assert_relative_eq!(y[0][0].re, f.right_edge()[0].re, max_relative = 1e-11, epsilon = 1e-13);
        assert!((y[1].eval(eps) - fe.right_edge()[1]).norm() < 1e-9 * fe.right_edge()[1].norm());
    }

    #[test]
    fn klein_gordon_outgoing_left_is_plane_wave_in_free_space() {
        let m = SystemModel::new(
            Kind::KleinGordon,
            LeftBoundary::Outgoing,
            -2.0,
            2.0,
            vec![Segment::new(-2.0, 2.0, 0.0)],
            vec![],
        )
        .unwrap();
        let w = c(0.8, -0.3);
        let f = propagate_left(&m, w);
        for &x in &[-3.0, -2.0, 0.0, 2.0, 2.5] {
            assert!((f.value(x) - (-I * w * (x + 2.0)).exp()).norm() < 1e-13);
        }
    }

    fn random_model(vals: &[f64], mus: &[f64]) -> SystemModel {
        let n = vals.len();
        let segs = (0..n)
            .map(|i| Segment::new(i as f64 / n as f64, if i + 1 == n { 1.0 } else { (i + 1) as f64 / n as f64 }, vals[i]))
            .collect();
        let deltas = mus
            .iter()
            .enumerate()
            .map(|(k, &mu)| Delta { x: (k as f64 + 0.5) / mus.len() as f64, mu })
            .collect();
        SystemModel::new(Kind::Wave, LeftBoundary::Node, 0.0, 1.0, segs, deltas).unwrap()
    }

    proptest! {
        #[test]
        fn wronskian_is_position_independent(
            vals in proptest::collection::vec(0.1f64..5.0, 1..6),
            mus in proptest::collection::vec(0.0f64..1.0, 0..3),
            re in -8.0f64..8.0, im in -2.0f64..0.5,
            xs in proptest::collection::vec(0.0f64..1.0, 3),
        ) {
            let m = random_model(&vals, &mus);
            let w = c(re, im);
            let f = propagate_left(&m, w);
            let g = propagate_right(&m, w);
            let w_edge = wronskian_of(f.right_edge(), g.right_edge());
            let scale = w_edge.norm().max(f.right_edge()[0].norm() * g.right_edge()[1].norm());
            for &x in &xs {
                let wx = wronskian_of(f.eval(x), g.eval(x));
                prop_assert!((wx - w_edge).norm() <= 1e-12 * scale.max(1.0), "{wx} vs {w_edge}");
            }
        }
    }
}
