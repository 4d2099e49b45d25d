//! Two-component states `(φ, φ̂)` sampled on a quadrature grid of the cavity.

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use crate::quadrature::gauss_legendre;
use crate::C64;

use super::{LeftBoundary, SystemModel};

/// Sample points and quadrature weights on `[domain_left, a]`, together
/// with the delta locations and the edges that carry surface terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub(crate) x: Vec<f64>,
    pub(crate) w: Vec<f64>,
    /// Segment used to evaluate piecewise-analytic fields at each node.
    pub(crate) seg: Vec<usize>,
    /// Momentum coefficient at each node (ρ, or 1 for Klein–Gordon); the
    /// mean of both sides at a segment joint.
    pub(crate) momentum: Vec<f64>,
    pub(crate) delta_x: Vec<f64>,
    pub(crate) delta_momentum: Vec<f64>,
    pub(crate) right_edge: f64,
    pub(crate) left_edge: Option<f64>,
}

impl Grid {
    /// Composite Gauss–Legendre grid: every segment is split into panels
    /// no longer than `max_panel`, each carrying an `order`-point rule.
    pub fn gauss(model: &SystemModel, max_panel: f64, order: usize) -> Arc<Grid> {
        let (gx, gw) = gauss_legendre(order);
        let mut g = Grid::empty(model);
        for (i, s) in model.segments().iter().enumerate() {
            let mom = model.momentum_weight(s.value);
            // Panels never straddle a delta, where f′ has a kink.
            let mut cuts = vec![s.x_lo];
            cuts.extend(model.deltas().iter().map(|d| d.x).filter(|&x| x > s.x_lo && x < s.x_hi));
            cuts.push(s.x_hi);
            for w in cuts.windows(2) {
                let width = w[1] - w[0];
                let panels = (width / max_panel).ceil().max(1.0) as usize;
                let h = width / panels as f64;
                for p in 0..panels {
                    let c = w[0] + (p as f64 + 0.5) * h;
                    for (&xi, &wi) in gx.iter().zip(&gw) {
                        g.x.push(c + 0.5 * h * xi);
                        g.w.push(0.5 * h * wi);
                        g.seg.push(i);
                        g.momentum.push(mom);
                    }
                }
            }
        }
        Arc::new(g)
    }

    /// Uniform trapezoid grid with spacing `(a − domain_left)/n`. Segment
    /// joints that fall between nodes are integrated approximately.
    pub fn uniform(model: &SystemModel, n: usize) -> Arc<Grid> {
        let mut g = Grid::empty(model);
        let lo = model.domain_left();
        let h = (model.a() - lo) / n as f64;
        for i in 0..=n {
            let x = if i == n { model.a() } else { lo + i as f64 * h };
            let w = if i == 0 || i == n { 0.5 * h } else { h };
            let seg = model.segment_index(x);
            let s = &model.segments()[seg];
            let mut mom = model.momentum_weight(s.value);
            if seg > 0 && x == s.x_lo {
                let prev = model.segments()[seg - 1].value;
                mom = 0.5 * (mom + model.momentum_weight(prev));
            }
            g.x.push(x);
            g.w.push(w);
            g.seg.push(seg);
            g.momentum.push(mom);
        }
        Arc::new(g)
    }

    fn empty(model: &SystemModel) -> Grid {
        Grid {
            x: Vec::new(),
            w: Vec::new(),
            seg: Vec::new(),
            momentum: Vec::new(),
            delta_x: model.deltas().iter().map(|d| d.x).collect(),
            delta_momentum: model
                .deltas()
                .iter()
                .map(|d| model.delta_momentum_weight(d))
                .collect(),
            right_edge: model.a(),
            left_edge: match model.boundary_left() {
                LeftBoundary::Node => None,
                LeftBoundary::Outgoing => Some(model.domain_left()),
            },
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.x
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn delta_locations(&self) -> &[f64] {
        &self.delta_x
    }

    pub fn right_edge(&self) -> f64 {
        self.right_edge
    }

    pub fn left_edge(&self) -> Option<f64> {
        self.left_edge
    }
}

/// A field/momentum pair on the cavity.
///
/// Delta-supported parts are kept separately: `point_weight[k]` are the
/// weights of `δ(x − x_k)` in each component and `point_value[k]` the
/// regular parts at `x_k`. `right_edge` holds `(φ(a), φ̂(a⁺))` and
/// `left_edge` the same pair at the left end of full-line models.
/// `flipped` marks images of outgoing states under the flip map, which
/// decides how the exterior part of the standard inner product collapses.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoComponentState {
    pub(crate) grid: Arc<Grid>,
    pub(crate) phi: Vec<C64>,
    pub(crate) phat: Vec<C64>,
    pub(crate) point_value: Vec<[C64; 2]>,
    pub(crate) point_weight: Vec<[C64; 2]>,
    pub(crate) right_edge: [C64; 2],
    pub(crate) left_edge: [C64; 2],
    pub(crate) flipped: bool,
}

const ZERO: C64 = C64::new(0.0, 0.0);

impl TwoComponentState {
    pub fn zero(grid: &Arc<Grid>) -> Self {
        let nd = grid.delta_x.len();
        TwoComponentState {
            grid: Arc::clone(grid),
            phi: vec![ZERO; grid.len()],
            phat: vec![ZERO; grid.len()],
            point_value: vec![[ZERO; 2]; nd],
            point_weight: vec![[ZERO; 2]; nd],
            right_edge: [ZERO; 2],
            left_edge: [ZERO; 2],
            flipped: false,
        }
    }

    /// Sample regular (delta-free) data `φ(x)`, `φ̂(x)`.
    pub fn from_fn(grid: &Arc<Grid>, phi: impl Fn(f64) -> C64, phat: impl Fn(f64) -> C64) -> Self {
        let mut s = Self::zero(grid);
        for (i, &x) in grid.x.iter().enumerate() {
            s.phi[i] = phi(x);
            s.phat[i] = phat(x);
        }
        for (k, &x) in grid.delta_x.iter().enumerate() {
            s.point_value[k] = [phi(x), phat(x)];
        }
        s.right_edge = [phi(grid.right_edge), phat(grid.right_edge)];
        if let Some(l) = grid.left_edge {
            s.left_edge = [phi(l), phat(l)];
        }
        s
    }

    /// Field released from rest: `φ̂ = 0`.
    pub fn from_field(grid: &Arc<Grid>, phi: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(phi(x), 0.0), |_| ZERO)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn phi(&self) -> &[C64] {
        &self.phi
    }

    pub fn phat(&self) -> &[C64] {
        &self.phat
    }

    pub fn phi_mut(&mut self) -> &mut [C64] {
        &mut self.phi
    }

    pub fn phat_mut(&mut self) -> &mut [C64] {
        &mut self.phat
    }

    /// `(x_k, weight)` pairs of the delta-supported momentum.
    pub fn phat_points(&self) -> Vec<(f64, C64)> {
        self.grid
            .delta_x
            .iter()
            .zip(&self.point_weight)
            .map(|(&x, w)| (x, w[1]))
            .collect()
    }

    pub fn set_point(&mut self, k: usize, value: [C64; 2], weight: [C64; 2]) {
        self.point_value[k] = value;
        self.point_weight[k] = weight;
    }

    pub fn set_right_edge(&mut self, edge: [C64; 2]) {
        self.right_edge = edge;
    }

    pub fn set_left_edge(&mut self, edge: [C64; 2]) {
        self.left_edge = edge;
    }

    pub fn right_edge(&self) -> [C64; 2] {
        self.right_edge
    }

    pub fn is_flipped(&self) -> bool {
        self.flipped
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert!(
            Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid,
            "states live on different grids"
        );
        assert_eq!(self.flipped, other.flipped, "cannot combine kets with flipped states");
        let pair = |a: [C64; 2], b: [C64; 2]| [f(a[0], b[0]), f(a[1], b[1])];
        TwoComponentState {
            grid: Arc::clone(&self.grid),
            phi: self.phi.iter().zip(&other.phi).map(|(&a, &b)| f(a, b)).collect(),
            phat: self.phat.iter().zip(&other.phat).map(|(&a, &b)| f(a, b)).collect(),
            point_value: self
                .point_value
                .iter()
                .zip(&other.point_value)
                .map(|(&a, &b)| pair(a, b))
                .collect(),
            point_weight: self
                .point_weight
                .iter()
                .zip(&other.point_weight)
                .map(|(&a, &b)| pair(a, b))
                .collect(),
            right_edge: pair(self.right_edge, other.right_edge),
            left_edge: pair(self.left_edge, other.left_edge),
            flipped: self.flipped,
        }
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        let pair = |a: [C64; 2]| [f(a[0]), f(a[1])];
        TwoComponentState {
            grid: Arc::clone(&self.grid),
            phi: self.phi.iter().map(|&a| f(a)).collect(),
            phat: self.phat.iter().map(|&a| f(a)).collect(),
            point_value: self.point_value.iter().map(|&a| pair(a)).collect(),
            point_weight: self.point_weight.iter().map(|&a| pair(a)).collect(),
            right_edge: pair(self.right_edge),
            left_edge: pair(self.left_edge),
            flipped: self.flipped,
        }
    }

    /// `self += c·other`.
    pub fn axpy(&mut self, c: C64, other: &Self) {
        assert_eq!(self.flipped, other.flipped, "cannot combine kets with flipped states");
        let add = |a: &mut C64, b: C64| *a += c * b;
        self.phi.iter_mut().zip(&other.phi).for_each(|(a, &b)| add(a, b));
        self.phat.iter_mut().zip(&other.phat).for_each(|(a, &b)| add(a, b));
        for (a, b) in self.point_value.iter_mut().zip(&other.point_value) {
            add(&mut a[0], b[0]);
            add(&mut a[1], b[1]);
        }
        for (a, b) in self.point_weight.iter_mut().zip(&other.point_weight) {
            add(&mut a[0], b[0]);
            add(&mut a[1], b[1]);
        }
        add(&mut self.right_edge[0], other.right_edge[0]);
        add(&mut self.right_edge[1], other.right_edge[1]);
        add(&mut self.left_edge[0], other.left_edge[0]);
        add(&mut self.left_edge[1], other.left_edge[1]);
    }

    /// Quadrature L² norm of the field component over the cavity.
    pub fn field_norm(&self) -> f64 {
        self.phi
            .iter()
            .zip(&self.grid.w)
            .map(|(p, &w)| w * p.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute difference over all stored entries.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = self.zip_with(other, |a, b| a - b);
        let mut m: f64 = 0.0;
        for v in d.phi.iter().chain(&d.phat) {
            m = m.max(v.norm());
        }
        for p in d.point_value.iter().chain(&d.point_weight) {
            m = m.max(p[0].norm()).max(p[1].norm());
        }
        m.max(d.right_edge[0].norm()).max(d.right_edge[1].norm())
    }

    pub fn max_abs(&self) -> f64 {
        let z = TwoComponentState::zero(&self.grid);
        let mut z = z;
        z.flipped = self.flipped;
        self.max_abs_diff(&z)
    }
}

impl Add for &TwoComponentState {
    type Output = TwoComponentState;
    fn add(self, rhs: &TwoComponentState) -> TwoComponentState {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &TwoComponentState {
    type Output = TwoComponentState;
    fn sub(self, rhs: &TwoComponentState) -> TwoComponentState {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<&TwoComponentState> for C64 {
    type Output = TwoComponentState;
    fn mul(self, rhs: &TwoComponentState) -> TwoComponentState {
        rhs.map(|a| self * a)
    }
}
