//! Normalized Jordan-block bases at Wronskian zeros, the bilinear map, the
//! flip and generalized duality maps, and dual bases from metric matrices.

mod products;

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;

pub use products::{bilinear, flip, gram_dual, inner, InnerProductSpace, METRIC_RCOND};

use crate::error::{Error, Result};
use crate::model::{Grid, Kind, SystemModel, TwoComponentState};
use crate::odeint::{propagate_taylor_on, Layout, Side, TaylorChain};
use crate::spectral::fmt_num;
use crate::tps::Tps;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Overall scale of a block basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockScale {
    /// `W_{j,M} = −2ω_j`.
    Preferred,
    /// `f_{j,0}′` at the left end equals the given value.
    EdgeSlope(C64),
}

/// Basis `f_{j,0..M−1}` of one Jordan block, normalized so that the
/// Wronskian has no Taylor terms of orders `M+1 .. 2M−1`.
#[derive(Debug, Clone)]
pub struct JordanBlock {
    model: Arc<SystemModel>,
    omega: C64,
    m: usize,
    w_lead: C64,
    chain: TaylorChain,
    /// `s·𝒩(ε)` truncated to `M` terms.
    norm: Tps,
    grid: Arc<Grid>,
    basis: Vec<TwoComponentState>,
}

/// Default sampling grid for block states.
pub fn default_grid(model: &SystemModel) -> Arc<Grid> {
    Grid::gauss(model, 0.05, 16)
}

/// Relative size below which a Taylor coefficient counts as zero when
/// checking a claimed multiplicity.
pub const MULTIPLICITY_TOLERANCE: f64 = 1e-6;

pub fn build_block(model: &SystemModel, omega: C64, m: usize) -> Result<JordanBlock> {
    build_block_with(model, omega, m, BlockScale::Preferred, &default_grid(model))
}

pub fn build_block_with(
    model: &SystemModel,
    omega: C64,
    m: usize,
    scale: BlockScale,
    grid: &Arc<Grid>,
) -> Result<JordanBlock> {
    if m == 0 {
        return Err(Error::Validation("block size must be at least one".into()));
    }
    let layout = Layout::new(model);
    let chain = propagate_taylor_on(&layout, omega, 2 * m, Side::Left);
    let [fa, fpa] = chain.right_edge();
    let iw = Tps::linear(I * omega, I, 2 * m);
    // D = f(a)(f′(a⁺) − iωf(a)) is the Wronskian with g tied to f(a).
    let d = fa * &(fpa - &(&iw * fa));
    let dmax = d.max_norm();
    for n in 0..m {
        if d[n].norm() > MULTIPLICITY_TOLERANCE * dmax {
            return Err(Error::MultiplicityMismatch {
                omega,
                detail: format!("Taylor coefficient {n} is {:.3e} (max {:.3e})", d[n].norm(), dmax),
            });
        }
    }
    if d[m].norm() <= MULTIPLICITY_TOLERANCE * dmax {
        return Err(Error::MultiplicityMismatch {
            omega,
            detail: format!("Taylor coefficient {m} vanishes; the zero has higher order"),
        });
    }
    let p = d.shift_down(m).truncated(m);
    let p0 = p[0];
    let unit = p.scale(p0.inv());
    let nrm = unit.powf_unit(-0.5);
    let slope0 = chain.left_edge()[1][0];
    let s = match scale {
        BlockScale::Preferred => {
            let mut s = (-2.0 * omega / p0).sqrt();
            let e = s * slope0;
            if e.im < 0.0 || (e.im == 0.0 && e.re < 0.0) {
                s = -s;
            }
            s
        }
        BlockScale::EdgeSlope(c) => c / slope0,
    };
    let norm = nrm.scale(s);
    let w_lead = s * s * p0;
    let mut block = JordanBlock {
        model: Arc::new(model.clone()),
        omega,
        m,
        w_lead,
        chain,
        norm,
        grid: Arc::clone(grid),
        basis: Vec::new(),
    };
    block.basis = (0..m).map(|n| block.sample(n)).collect();
    Ok(block)
}

impl JordanBlock {
    pub fn omega(&self) -> C64 {
        self.omega
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn w_lead(&self) -> C64 {
        self.w_lead
    }

    pub fn basis(&self) -> &[TwoComponentState] {
        &self.basis
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    /// `(f_{j,n}(x), f_{j,n}′(x))` for every `n < M`.
    pub fn fields(&self, x: f64) -> Vec<[C64; 2]> {
        let [f, fp] = self.chain.eval(x);
        let f = (&f.truncated(self.m) * &self.norm).into_coeffs();
        let fp = (&fp.truncated(self.m) * &self.norm).into_coeffs();
        f.into_iter().zip(fp).map(|(a, b)| [a, b]).collect()
    }

    pub fn field(&self, n: usize, x: f64) -> [C64; 2] {
        self.fields(x)[n]
    }

    fn momentum(&self, weight: f64, f: &[[C64; 2]], n: usize) -> C64 {
        let prev = if n > 0 { f[n - 1][0] } else { C64::new(0.0, 0.0) };
        -I * weight * (self.omega * f[n][0] + prev)
    }

    fn sample(&self, n: usize) -> TwoComponentState {
        let g = &self.grid;
        let mut st = TwoComponentState::zero(g);
        for (k, &x) in g.x.iter().enumerate() {
            let f = self.fields(x);
            st.phi[k] = f[n][0];
            st.phat[k] = self.momentum(g.momentum[k], &f, n);
        }
        let model = &self.model;
        for (k, d) in model.deltas().iter().enumerate() {
            let f = self.fields(d.x);
            let w = model.momentum_weight(model.segments()[model.segment_index(d.x)].value);
            st.point_value[k] = [f[n][0], self.momentum(w, &f, n)];
            st.point_weight[k] = [C64::new(0.0, 0.0), self.momentum(model.delta_momentum_weight(d), &f, n)];
        }
        let ext = model.momentum_weight(model.exterior_value());
        let f = self.fields(model.a());
        st.right_edge = [f[n][0], self.momentum(ext, &f, n)];
        if g.left_edge.is_some() {
            let f = self.fields(model.domain_left());
            st.left_edge = [f[n][0], self.momentum(ext, &f, n)];
        }
        st
    }

    /// `|f^{j,n}⟩ = ℱ|f_{j,M−1−n}⟩`.
    pub fn dual(&self, n: usize) -> Result<TwoComponentState> {
        if n >= self.m {
            return Err(Error::IndexOutOfRange { index: n, size: self.m });
        }
        Ok(flip(&self.basis[self.m - 1 - n]))
    }

    /// `(f_{j,n}, f_{j,m})` for all pairs.
    pub fn product_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.m, self.m, |a, b| bilinear(&self.basis[a], &self.basis[b]))
    }

    /// Largest relative residual of `H|f_n⟩ = ω|f_n⟩ + |f_{n−1}⟩`, checked
    /// pointwise through `f_n″ = −ρ(ω²f_n + 2ωf_{n−1} + f_{n−2})` with a
    /// five-point stencil on `f_n′`, and through the derivative jump at
    /// every delta.
    pub fn h_action_residual(&self, samples_per_piece: usize) -> f64 {
        let model = &self.model;
        let w = self.omega;
        let kind = model.kind();
        let rhs = |value: f64, f: &[[C64; 2]], n: usize| -> C64 {
            let g = |k: isize| if k >= 0 { f[k as usize][0] } else { C64::new(0.0, 0.0) };
            let n = n as isize;
            match kind {
                Kind::Wave => -value * (w * w * g(n) + 2.0 * w * g(n - 1) + g(n - 2)),
                Kind::KleinGordon => -(w * w * g(n) + 2.0 * w * g(n - 1) + g(n - 2)) + value * g(n),
            }
        };
        let mut worst: f64 = 0.0;
        let layout = Layout::new(model);
        for p in layout.pieces() {
            let h = 1e-3 * p.width();
            for i in 0..samples_per_piece {
                let x = p.x_lo + p.width() * (i as f64 + 0.5) / samples_per_piece as f64;
                let at = |dx: f64| self.fields(x + dx);
                let (a2, a1, b1, b2) = (at(2.0 * h), at(h), at(-h), at(-2.0 * h));
                let f = self.fields(x);
                for n in 0..self.m {
                    let d2 = (-a2[n][1] + 8.0 * a1[n][1] - 8.0 * b1[n][1] + b2[n][1]) / (12.0 * h);
                    let r = rhs(p.value, &f, n);
                    let scale = r.norm().max(f[n][0].norm() * w.norm_sqr()).max(1e-300);
                    worst = worst.max((d2 - r).norm() / scale);
                }
            }
        }
        for d in model.deltas() {
            let eps = 1e-13 * (1.0 + d.x.abs());
            let left = self.fields(d.x - eps);
            let f = self.fields(d.x);
            let right = self.fields(d.x + eps);
            for n in 0..self.m {
                let jump = right[n][1] - left[n][1];
                let expect = match kind {
                    Kind::Wave => rhs(d.mu, &f, n),
                    Kind::KleinGordon => f[n][0] * d.mu,
                };
                let scale = expect.norm().max(left[n][1].norm()).max(1e-300);
                worst = worst.max((jump - expect).norm() / scale);
            }
        }
        worst
    }

    /// CSV of `x` and the real and imaginary parts of `f_{j,n}` and the
    /// regular part of `f̂_{j,n}` for every `n`.
    pub fn to_csv(&self, xs: &[f64]) -> String {
        let mut s = String::from("x");
        for n in 0..self.m {
            let _ = write!(s, ",re_f{n},im_f{n},re_fhat{n},im_fhat{n}");
        }
        s.push('\n');
        let model = &self.model;
        for &x in xs {
            let f = self.fields(x);
            let w = model.momentum_weight(model.value_at(x));
            s.push_str(&fmt_num(x));
            for n in 0..self.m {
                let p = self.momentum(w, &f, n);
                let _ = write!(
                    s,
                    ",{},{},{},{}",
                    fmt_num(f[n][0].re),
                    fmt_num(f[n][0].im),
                    fmt_num(p.re),
                    fmt_num(p.im)
                );
            }
            s.push('\n');
        }
        s
    }

    pub fn to_structured(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "omega = [{}, {}]", fmt_num(self.omega.re), fmt_num(self.omega.im));
        let _ = writeln!(s, "multiplicity = {}", self.m);
        let _ = writeln!(s, "w_lead = [{}, {}]", fmt_num(self.w_lead.re), fmt_num(self.w_lead.im));
        let pm = self.product_matrix();
        s.push_str("products = [\n");
        for a in 0..self.m {
            s.push_str("  [");
            for b in 0..self.m {
                if b > 0 {
                    s.push_str(", ");
                }
                let _ = write!(s, "[{}, {}]", fmt_num(pm[(a, b)].re), fmt_num(pm[(a, b)].im));
            }
            s.push_str("],\n");
        }
        s.push_str("]\n");
        s
    }
}

/// Largest `|(f_{a,n}, f_{b,m})|` over both blocks.
pub fn inter_block_orthogonality_check(a: &JordanBlock, b: &JordanBlock) -> f64 {
    let mut worst: f64 = 0.0;
    for p in &a.basis {
        for q in &b.basis {
            worst = worst.max(bilinear(p, q).norm());
        }
    }
    worst
}

/// Raw-chain products `(f_n, g_m)` next to `−W_{n+m+1}` for
/// `n, m < M`, without any renormalization.
#[derive(Debug, Clone)]
pub struct ProductCheck {
    pub products: DMatrix<C64>,
    pub expected: DMatrix<C64>,
}

impl ProductCheck {
    pub fn max_residual(&self) -> f64 {
        (&self.products - &self.expected).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn unnormalized_product_check(model: &SystemModel, omega: C64, m: usize) -> ProductCheck {
    let layout = Layout::new(model);
    let grid = default_grid(model);
    let fc = propagate_taylor_on(&layout, omega, m, Side::Left);
    let gc = propagate_taylor_on(&layout, omega, m, Side::Right);
    let states = |c: &TaylorChain| -> Vec<TwoComponentState> {
        let mut out = vec![TwoComponentState::zero(&grid); m];
        let mom = |weight: f64, f: &Tps, n: usize| {
            let prev = if n > 0 { f[n - 1] } else { C64::new(0.0, 0.0) };
            -I * weight * (omega * f[n] + prev)
        };
        for (k, &x) in grid.x.iter().enumerate() {
            let [f, _] = c.eval(x);
            for (n, st) in out.iter_mut().enumerate() {
                st.phi[k] = f[n];
                st.phat[k] = mom(grid.momentum[k], &f, n);
            }
        }
        for (k, d) in model.deltas().iter().enumerate() {
            let [f, _] = c.eval(d.x);
            for (n, st) in out.iter_mut().enumerate() {
                st.point_value[k] = [f[n], C64::new(0.0, 0.0)];
                st.point_weight[k] = [C64::new(0.0, 0.0), mom(model.delta_momentum_weight(d), &f, n)];
            }
        }
        let [f, _] = c.eval(model.a());
        for (n, st) in out.iter_mut().enumerate() {
            st.right_edge = [f[n], mom(1.0, &f, n)];
        }
        if grid.left_edge.is_some() {
            let [f, _] = c.eval(model.domain_left());
            for (n, st) in out.iter_mut().enumerate() {
                st.left_edge = [f[n], mom(1.0, &f, n)];
            }
        }
        out
    };
    let fs = states(&fc);
    let gs = states(&gc);
    let w = crate::spectral::Wronskian::new(model).taylor(omega, 2 * m);
    ProductCheck {
        products: DMatrix::from_fn(m, m, |n, k| bilinear(&fs[n], &gs[k])),
        expected: DMatrix::from_fn(m, m, |n, k| -w[n + k + 1]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_double_pole_model, double_pole_gamma};
    use crate::spectral::{RefineOptions, Wronskian};

    fn k1_block() -> JordanBlock {
        let g = double_pole_gamma(1.0);
        build_block(&builtin_double_pole_model(1.0).unwrap(), C64::new(0.0, -g), 2).unwrap()
    }

    #[test]
    fn simple_slab_mode_has_preferred_norm() {
        let m = SystemModel::slab(4.0, 1.0).unwrap();
        let z = Wronskian::new(&m).refine_zero(C64::new(0.8, -0.3), &RefineOptions::default()).unwrap();
        let b = build_block(&m, z.omega, 1).unwrap();
        let norm = bilinear(&b.basis()[0], &b.basis()[0]);
        assert!((norm - 2.0 * z.omega).norm() < 1e-10 * z.omega.norm());
        assert!((b.w_lead() + 2.0 * z.omega).norm() < 1e-12);
    }

    #[test]
    fn simple_mode_norm_matches_density_form() {
        // (f, f) = 2ω∫ρf² + i f(a)² for a simple mode.
        let m = SystemModel::slab(4.0, 1.0).unwrap();
        let z = Wronskian::new(&m).refine_zero(C64::new(2.3, -0.3), &RefineOptions::default()).unwrap();
        let b = build_block(&m, z.omega, 1).unwrap();
        let s = &b.basis()[0];
        let g = b.grid();
        let mut integral = C64::new(0.0, 0.0);
        for k in 0..g.len() {
            integral += g.weights()[k] * 4.0 * s.phi()[k] * s.phi()[k];
        }
        let fa = s.right_edge()[0];
        let direct = 2.0 * z.omega * integral + I * fa * fa;
        assert!((direct - bilinear(s, s)).norm() < 1e-10 * direct.norm());
    }

    #[test]
    fn double_pole_block_is_antidiagonal() {
        let b = k1_block();
        let pm = b.product_matrix();
        let wl = b.w_lead();
        assert!((pm[(0, 1)] + wl).norm() < 1e-10 * wl.norm());
        assert!((pm[(1, 0)] + wl).norm() < 1e-10 * wl.norm());
        assert!(pm[(0, 0)].norm() < 1e-10 * wl.norm());
        assert!(pm[(1, 1)].norm() < 1e-10 * wl.norm());
    }

    #[test]
    fn dual_pairs_with_reversed_index() {
        let b = k1_block();
        let d0 = b.dual(0).unwrap();
        let f0 = &b.basis()[0];
        assert!((inner(&d0, f0) + b.w_lead()).norm() < 1e-10 * b.w_lead().norm());
        // flip(f₀) is a left eigenvector orthogonal to f₀ itself.
        assert!(inner(&flip(f0), f0).norm() < 1e-10);
        assert!(matches!(b.dual(2), Err(Error::IndexOutOfRange { index: 2, size: 2 })));
    }

    #[test]
    fn gram_duals_reproduce_generalized_duals() {
        let b = k1_block();
        let flipped: Vec<_> = b.basis().iter().map(flip).collect();
        let duals = gram_dual(b.basis(), &flipped).unwrap();
        let c = (-b.w_lead()).inv().conj();
        for n in 0..2 {
            let expect = b.dual(n).unwrap().map(|v| v * c);
            assert!(duals[n].max_abs_diff(&expect) < 1e-8);
        }
    }

    #[test]
    fn h_action_holds_on_double_pole_block() {
        let r = k1_block().h_action_residual(7);
        assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn wrong_multiplicity_is_rejected() {
        let g = double_pole_gamma(1.0);
        let m = builtin_double_pole_model(1.0).unwrap();
        assert!(matches!(build_block(&m, C64::new(0.0, -g), 1), Err(Error::MultiplicityMismatch { .. })));
        assert!(matches!(build_block(&m, C64::new(0.0, -g), 3), Err(Error::MultiplicityMismatch { .. })));
    }

    #[test]
    fn raw_products_follow_wronskian_coefficients() {
        let g = double_pole_gamma(1.0);
        let m = builtin_double_pole_model(1.0).unwrap();
        let chk = unnormalized_product_check(&m, C64::new(0.0, -g), 2);
        assert!(chk.max_residual() < 1e-10, "{}", chk.max_residual());
        assert!(chk.products[(0, 0)].norm() < 1e-10);
        let s = SystemModel::slab(4.0, 1.0).unwrap();
        let z = Wronskian::new(&s).refine_zero(C64::new(0.8, -0.3), &RefineOptions::default()).unwrap();
        let chk = unnormalized_product_check(&s, z.omega, 1);
        assert!(chk.max_residual() < 1e-10 * chk.expected[(0, 0)].norm());
    }

    /// Closed-form `f_{0,1} = f_a + f_b` for the `sinh(Kx)` double pole.
    fn closed_form_f01(k: f64, x: f64) -> C64 {
        let g = double_pole_gamma(k);
        let fa = I * (k / g) * x * (k * x).cosh();
        let fb = -I * (2.0 * k / (3.0 * g) + 0.5 / k) * k.tanh() * (k * x).sinh();
        fa + fb
    }

    #[test]
    fn second_basis_function_matches_closed_form() {
        for &k in &[0.5, 1.0, 2.0] {
            let g = double_pole_gamma(k);
            let m = builtin_double_pole_model(k).unwrap();
            let b = build_block_with(&m, C64::new(0.0, -g), 2, BlockScale::EdgeSlope(C64::new(k, 0.0)), &default_grid(&m)).unwrap();
            let mut plus: f64 = 0.0;
            let mut minus: f64 = 0.0;
            for i in 0..=200 {
                let x = i as f64 / 200.0;
                let f = b.fields(x);
                assert!((f[0][0] - (k * x).sinh()).norm() < 1e-12);
                let c = closed_form_f01(k, x);
                plus = plus.max((f[1][0] - c).norm());
                minus = minus.max((f[1][0] + c).norm());
            }
            assert!(plus.min(minus) < 1e-8, "K = {k}: {plus} {minus}");
            let norm = bilinear(&b.basis()[0], &b.basis()[1]);
            let expect = k.powi(3) / k.tanh() / (g * g);
            assert!((norm - expect).norm() < 1e-8 * expect, "K = {k}: {norm} vs {expect}");
            let self11 = bilinear(&b.basis()[1], &b.basis()[1]);
            assert!(self11.norm() < 1e-8 * b.w_lead().norm());
        }
    }

    #[test]
    fn distinct_blocks_are_orthogonal() {
        let m = builtin_double_pole_model(1.0).unwrap();
        let rep = crate::spectral::spectrum(&m, &crate::spectral::SearchBox::new(0.5, 15.0, -6.0, -0.01).unwrap()).unwrap();
        let z = rep.zeros[0];
        assert_eq!(z.multiplicity, 1);
        let simple = build_block(&m, z.omega, 1).unwrap();
        let dp = k1_block();
        assert!(inter_block_orthogonality_check(&dp, &simple) < 1e-8);
        let same = inter_block_orthogonality_check(&dp, &dp);
        assert!((same - dp.w_lead().norm()).abs() < 1e-8);
    }
}
