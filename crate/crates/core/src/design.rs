//! Inverse construction of wave models with a double zero at `ω = −iγ`
//! from a chosen mode profile, and the search for profiles that raise the
//! zero to third order.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Delta, Kind, LeftBoundary, SystemModel};
use crate::quadrature::integrate;
use crate::spectral::{fmt_num, Wronskian};
use crate::C64;

/// Absolute tolerance of every nested quadrature, for profiles with f(1) ≤ 1.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Segments used when a profile is turned into a model.
pub const DEFAULT_SEGMENTS: usize = 4000;

/// Below this x the ratio `∫₀ˣ f″f / f` is replaced by its leading term.
const SERIES_CUTOFF: f64 = 1e-6;

/// Mode profiles on `[0, 1]` with analytic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileFamily {
    /// `sinh(Kx)`.
    Sinh { k: f64 },
    /// `x + αxⁿ`.
    Power { alpha: f64, n: u32 },
    /// `x`.
    Linear,
    /// `c·f`.
    Scaled { c: f64, inner: Box<ProfileFamily> },
}

impl ProfileFamily {
    pub fn f(&self, x: f64) -> f64 {
        match self {
            ProfileFamily::Sinh { k } => (k * x).sinh(),
            ProfileFamily::Power { alpha, n } => x + alpha * x.powi(*n as i32),
            ProfileFamily::Linear => x,
            ProfileFamily::Scaled { c, inner } => c * inner.f(x),
        }
    }

    pub fn df(&self, x: f64) -> f64 {
        match self {
            ProfileFamily::Sinh { k } => k * (k * x).cosh(),
            ProfileFamily::Power { alpha, n } => 1.0 + alpha * *n as f64 * x.powi(*n as i32 - 1),
            ProfileFamily::Linear => 1.0,
            ProfileFamily::Scaled { c, inner } => c * inner.df(x),
        }
    }

    pub fn d2f(&self, x: f64) -> f64 {
        match self {
            ProfileFamily::Sinh { k } => k * k * (k * x).sinh(),
            ProfileFamily::Power { alpha, n } => {
                let n = *n as i32;
                alpha * (n * (n - 1)) as f64 * x.powi(n - 2)
            }
            ProfileFamily::Linear => 0.0,
            ProfileFamily::Scaled { c, inner } => c * inner.d2f(x),
        }
    }

    /// `f(0) = 0`, `f′(0) > 0` and `f″ > 0` on a sample of `(0, 1]`.
    pub fn check(&self) -> Result<()> {
        if self.f(0.0) != 0.0 || !(self.df(0.0) > 0.0) {
            return Err(Error::Validation(format!("profile {self:?} needs f(0) = 0 and f′(0) > 0")));
        }
        for i in 1..=1000 {
            let x = i as f64 / 1000.0;
            if !(self.d2f(x) > 0.0) {
                return Err(Error::Validation(format!("profile {self:?} has f″({x}) ≤ 0")));
            }
        }
        Ok(())
    }

    /// Quadrature tolerance scaled by `f(1)²`, since every functional here
    /// is homogeneous of degree two in f.
    fn tol(&self) -> f64 {
        QUADRATURE_TOL * self.f(1.0).powi(2).max(1.0)
    }

    /// `∫₀ˣ f″f`.
    fn inner(&self, x: f64) -> f64 {
        integrate(|y| self.d2f(y) * self.f(y), 0.0, x, self.tol())
    }

    /// `(∫₀ˣ f″f)/f(x)`.
    fn ratio(&self, x: f64) -> f64 {
        if x < SERIES_CUTOFF {
            0.5 * self.d2f(0.0) * x
        } else {
            self.inner(x) / self.f(x)
        }
    }
}

/// `∫₀¹ f′²`.
fn slope_energy(f: &ProfileFamily) -> f64 {
    integrate(|x| f.df(x).powi(2), 0.0, 1.0, f.tol())
}

/// `γ = 2∫₀¹ f′² / f(1)²`.
pub fn gamma_from_profile(f: &ProfileFamily) -> Result<f64> {
    let fa = f.f(1.0);
    if fa == 0.0 || !fa.is_finite() {
        return Err(Error::Domain(format!("profile {f:?} has f(1) = {fa}")));
    }
    Ok(2.0 * slope_energy(f) / (fa * fa))
}

/// `μ = 1/γ − f′(1⁻)/(γ²f(1))`.
pub fn delta_mass(f: &ProfileFamily, gamma: f64) -> f64 {
    1.0 / gamma - f.df(1.0) / (gamma * gamma * f.f(1.0))
}

/// Wave model with `ρ = f″/(γ²f)` sampled on `segments` equal cells and a
/// point mass `μ` at `x = 1`. Fails when `μ < 0`.
pub fn rho_from_profile(f: &ProfileFamily, gamma: f64, segments: usize) -> Result<SystemModel> {
    f.check()?;
    let mu = delta_mass(f, gamma);
    if mu < 0.0 {
        return Err(Error::InadmissibleProfile { mu });
    }
    let g2 = gamma * gamma;
    let deltas = if mu > 0.0 { vec![Delta { x: 1.0, mu }] } else { vec![] };
    SystemModel::sampled(
        Kind::Wave,
        LeftBoundary::Node,
        0.0,
        1.0,
        segments,
        |x| f.d2f(x) / (g2 * f.f(x)),
        deltas,
    )
}

/// `γ²W_{0,2} = 4∫₀¹ dx/f² [∫₀ˣ f″f]² − ∫₀¹ f′²`.
pub fn w02_functional(f: &ProfileFamily) -> f64 {
    4.0 * integrate(|x| f.ratio(x).powi(2), 0.0, 1.0, f.tol()) - slope_energy(f)
}

/// `iγ³W_{0,3} = 8∫₀¹ f″f [∫ₓ¹ dy/f² ∫₀ʸ f″f]² − 4∫₀¹ dx/f² [∫₀ˣ f″f]²`.
pub fn w03_functional(f: &ProfileFamily) -> f64 {
    let tol = f.tol();
    let tail = |x: f64| integrate(|y| f.ratio(y) / f.f(y), x.max(SERIES_CUTOFF), 1.0, tol)
        + if x < SERIES_CUTOFF { 0.5 * f.d2f(0.0) / f.df(0.0) * (SERIES_CUTOFF - x) } else { 0.0 };
    let first = integrate(|x| f.d2f(x) * f.f(x) * tail(x).powi(2), 0.0, 1.0, tol);
    8.0 * first - 4.0 * integrate(|x| f.ratio(x).powi(2), 0.0, 1.0, tol)
}

/// One zero of `α ↦ W₀₂(x + αxⁿ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThirdOrderRoot {
    pub alpha: f64,
    pub w02: f64,
    pub gamma: f64,
    pub mu: f64,
    pub admissible: bool,
    /// Zeros of the constructed model's Wronskian counted on a small
    /// circle about `−iγ`; present for admissible roots.
    pub multiplicity: Option<MultiplicityCheck>,
    pub model: Option<SystemModel>,
}

/// Scan with 200 points, bisect and polish by secant to 1e-8 in α.
pub fn third_order_search(n: u32, alpha_range: (f64, f64)) -> Result<Vec<ThirdOrderRoot>> {
    third_order_search_with(n, alpha_range, DEFAULT_SEGMENTS)
}

pub fn third_order_search_with(n: u32, alpha_range: (f64, f64), segments: usize) -> Result<Vec<ThirdOrderRoot>> {
    if n <= 2 {
        return Err(Error::Domain(format!("the power family needs n > 2, got {n}")));
    }
    let (lo, hi) = alpha_range;
    if !(lo < hi && lo > 0.0) {
        return Err(Error::Domain(format!("α range ({lo}, {hi}) must be positive and increasing")));
    }
    let w = |alpha: f64| w02_functional(&ProfileFamily::Power { alpha, n });
    let grid: Vec<f64> = (0..200).map(|i| lo + (hi - lo) * i as f64 / 199.0).collect();
    let vals: Vec<f64> = grid.par_iter().map(|&a| w(a)).collect();
    let brackets: Vec<(f64, f64, f64, f64)> = (0..199)
        .filter(|&i| vals[i].signum() != vals[i + 1].signum())
        .map(|i| (grid[i], grid[i + 1], vals[i], vals[i + 1]))
        .collect();
    brackets
        .par_iter()
        .map(|&(a, b, fa, fb)| {
            let alpha = solve_bracket(&w, a, b, fa, fb);
            let f = ProfileFamily::Power { alpha, n };
            let gamma = gamma_from_profile(&f)?;
            let mu = delta_mass(&f, gamma);
            let admissible = mu >= 0.0;
            let (multiplicity, model) = if admissible {
                let m = rho_from_profile(&f, gamma, segments)?;
                (Some(verify_multiplicity(&f, gamma, segments)?), Some(m))
            } else {
                (None, None)
            };
            Ok(ThirdOrderRoot {
                alpha,
                w02: w(alpha),
                gamma,
                mu,
                admissible,
                multiplicity,
                model,
            })
        })
        .collect()
}

fn solve_bracket(w: &(impl Fn(f64) -> f64 + Sync), mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    while b - a > 1e-5 {
        let m = 0.5 * (a + b);
        let fm = w(m);
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    let (mut x0, mut x1, mut f0, mut f1) = (a, b, fa, fb);
    for _ in 0..30 {
        if f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        let done = (x2 - x1).abs() < 1e-12;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = w(x1);
        if done || (x1 - x0).abs() < 1e-10 {
            break;
        }
    }
    if (a - 1e-5..=b + 1e-5).contains(&x1) {
        x1
    } else {
        0.5 * (a + b)
    }
}

/// Radius of the circle about `−iγ` used to count the zeros of a
/// constructed model. Segment sampling perturbs W by O(N⁻²), which spreads a
/// third-order zero over a cluster of radius O(N^{−2/3}) (about 0.07 at
/// N = 4000 for the power family).
pub const CLUSTER_RADIUS: f64 = 0.15;

/// Evidence for the order of the zero at `−iγ` of a constructed model.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityCheck {
    pub winding: usize,
    pub radius: f64,
    /// `|W_k|` at `−iγ` for `k = 0..=3` with N segments.
    pub taylor: [f64; 4],
    /// The same after Richardson extrapolation from N/2 and N segments.
    pub extrapolated: [f64; 4],
}

impl MultiplicityCheck {
    /// Largest `|W_k/W_M|` for `k < M` after extrapolation.
    pub fn lower_order_ratio(&self, m: usize) -> f64 {
        (0..m).map(|k| self.extrapolated[k] / self.extrapolated[m]).fold(0.0, f64::max)
    }
}

pub fn verify_multiplicity(f: &ProfileFamily, gamma: f64, segments: usize) -> Result<MultiplicityCheck> {
    let c = C64::new(0.0, -gamma);
    let fine = Wronskian::new(&rho_from_profile(f, gamma, segments)?);
    let coarse = Wronskian::new(&rho_from_profile(f, gamma, segments.div_ceil(2))?);
    let wf = fine.taylor(c, 3);
    let wc = coarse.taylor(c, 3);
    let mut taylor = [0.0; 4];
    let mut extrapolated = [0.0; 4];
    for k in 0..4 {
        taylor[k] = wf[k].norm();
        extrapolated[k] = ((4.0 * wf[k] - wc[k]) / 3.0).norm();
    }
    Ok(MultiplicityCheck {
        winding: fine.winding_on_circle(c, CLUSTER_RADIUS)?,
        radius: CLUSTER_RADIUS,
        taylor,
        extrapolated,
    })
}

/// The mode of the constructed model at `−iγ`, normalized to unit slope at
/// the origin, against `f/f′(0)`: the sup-norm gap.
pub fn profile_mismatch(f: &ProfileFamily, model: &SystemModel, gamma: f64) -> f64 {
    let sol = crate::odeint::propagate_left(model, C64::new(0.0, -gamma));
    let s0 = f.df(0.0);
    (0..=200)
        .map(|i| {
            let x = i as f64 / 200.0;
            (sol.eval(x)[0] - f.f(x) / s0).norm()
        })
        .fold(0.0, f64::max)
}

/// `alpha,W02,mu,admissible` rows.
pub fn roots_to_csv(roots: &[ThirdOrderRoot]) -> String {
    let mut s = String::from("alpha,W02,mu,admissible\n");
    for r in roots {
        let _ = writeln!(s, "{},{},{},{}", fmt_num(r.alpha), fmt_num(r.w02), fmt_num(r.mu), r.admissible);
    }
    s
}
