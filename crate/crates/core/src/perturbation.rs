//! Perturbations of a Jordan block: the splitting element, the fan of split
//! frequencies, the next-order shift, and a direct root-tracking check.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jordan::{bilinear, flip, JordanBlock};
use crate::model::{Kind, SystemModel, TwoComponentState};
use crate::spectral::{fmt_num, SearchBox, SpectrumOptions, Wronskian};
use crate::C64;

/// A piecewise-constant change of the model, one value per segment.
///
/// `InverseDensity` changes ρ⁻¹ (wave models). `Density` is an
/// infinitesimal change of ρ for wave models and of V for Klein–Gordon
/// models; its `deltas` entries change the point strengths.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    InverseDensity(Vec<f64>),
    Density { segments: Vec<f64>, deltas: Vec<f64> },
}

impl Perturbation {
    fn check(&self, model: &SystemModel) -> Result<()> {
        let ns = model.segments().len();
        match self {
            Perturbation::InverseDensity(v) => {
                if model.kind() != Kind::Wave {
                    return Err(Error::Validation("ρ⁻¹ perturbations apply to wave models only".into()));
                }
                if v.len() != ns {
                    return Err(Error::Validation(format!("expected {ns} segment values, got {}", v.len())));
                }
            }
            Perturbation::Density { segments, deltas } => {
                if segments.len() != ns || deltas.len() != model.deltas().len() {
                    return Err(Error::Validation(format!(
                        "expected {ns} segment and {} delta values, got {} and {}",
                        model.deltas().len(),
                        segments.len(),
                        deltas.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Equivalent change of ρ (or V) on each segment.
    fn segment_density(&self, model: &SystemModel) -> Vec<f64> {
        match self {
            Perturbation::InverseDensity(v) => model
                .segments()
                .iter()
                .zip(v)
                .map(|(s, d)| -s.value * s.value * d)
                .collect(),
            Perturbation::Density { segments, .. } => segments.clone(),
        }
    }

    fn delta_density(&self, model: &SystemModel) -> Vec<f64> {
        match self {
            Perturbation::InverseDensity(_) => vec![0.0; model.deltas().len()],
            Perturbation::Density { deltas, .. } => deltas.clone(),
        }
    }
}

/// `(χ, H′ψ)`. For wave models this is `∫δρ·v_χ·v_ψ` with `v = φ̂/ρ`; for
/// Klein–Gordon models `∫δV·χψ`.
pub fn perturbation_product(
    model: &SystemModel,
    p: &Perturbation,
    chi: &TwoComponentState,
    psi: &TwoComponentState,
) -> Result<C64> {
    p.check(model)?;
    let g = chi.grid();
    let seg = p.segment_density(model);
    let del = p.delta_density(model);
    let mut s = C64::new(0.0, 0.0);
    match model.kind() {
        Kind::Wave => {
            for k in 0..g.len() {
                let r = g.momentum[k];
                s += g.w[k] * seg[g.seg[k]] * chi.phat[k] * psi.phat[k] / (r * r);
            }
            for (k, d) in model.deltas().iter().enumerate() {
                let r = model.momentum_weight(model.value_at(d.x));
                s += del[k] * chi.point_value[k][1] * psi.point_value[k][1] / (r * r);
            }
        }
        Kind::KleinGordon => {
            for k in 0..g.len() {
                s += g.w[k] * seg[g.seg[k]] * chi.phi[k] * psi.phi[k];
            }
            for (k, _) in model.deltas().iter().enumerate() {
                s += del[k] * chi.point_value[k][0] * psi.point_value[k][0];
            }
        }
    }
    Ok(s)
}

/// `H′_{nm} = ⟨f^{j,n}|H′|f_{j,m}⟩/⟨f^{j,n}|f_{j,n}⟩`.
pub fn block_matrix(block: &JordanBlock, p: &Perturbation) -> Result<DMatrix<C64>> {
    let m = block.size();
    let b = block.basis();
    let norm = -block.w_lead();
    let mut h = DMatrix::zeros(m, m);
    for n in 0..m {
        for k in 0..m {
            h[(n, k)] = perturbation_product(block.model(), p, &b[m - 1 - n], &b[k])? / norm;
        }
    }
    Ok(h)
}

/// The splitting element `α = H′_{M−1,0} = (f_j, H′f_j)/(f_{j,M−1}, f_j)`.
pub fn splitting_alpha(block: &JordanBlock, p: &Perturbation) -> Result<C64> {
    let b = block.basis();
    let num = perturbation_product(block.model(), p, &b[0], &b[0])?;
    Ok(num / bilinear(&b[block.size() - 1], &b[0]))
}

/// Split frequencies `ω_j + s·e^{2πin/M}` with `s = (λα)^{1/M}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    #[serde(serialize_with = "ser_c64")]
    pub omega: C64,
    pub lambda: f64,
    #[serde(serialize_with = "ser_c64")]
    pub alpha: C64,
    #[serde(serialize_with = "ser_c64")]
    pub s: C64,
    #[serde(serialize_with = "ser_c64s")]
    pub frequencies: Vec<C64>,
    #[serde(serialize_with = "ser_opt_c64")]
    pub second_order: Option<C64>,
}

fn ser_c64<S: serde::Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

fn ser_c64s<S: serde::Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
}

fn ser_opt_c64<S: serde::Serializer>(z: &Option<C64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    z.map(|z| [z.re, z.im]).serialize(s)
}

pub fn split_block(block: &JordanBlock, lambda: f64, alpha: C64) -> Result<SplitReport> {
    split(block.omega(), block.size(), lambda, alpha)
}

fn split(omega: C64, m: usize, lambda: f64, alpha: C64) -> Result<SplitReport> {
    if alpha == C64::new(0.0, 0.0) {
        return Err(Error::NonGeneric);
    }
    let s = (lambda * alpha).powf(1.0 / m as f64);
    let frequencies = (0..m)
        .map(|n| omega + s * C64::from_polar(1.0, TAU * n as f64 / m as f64))
        .collect();
    Ok(SplitReport {
        omega,
        lambda,
        alpha,
        s,
        frequencies,
        second_order: None,
    })
}

impl SplitReport {
    /// Coefficients `s^m e^{2πinm/M}` of the n-th split eigenvector.
    pub fn eigenvector_coeffs(&self, n: usize) -> Vec<C64> {
        let m = self.frequencies.len();
        (0..m)
            .map(|k| self.s.powu(k as u32) * C64::from_polar(1.0, TAU * (n * k) as f64 / m as f64))
            .collect()
    }

    /// Split eigenvectors and their flip duals on the block grid.
    pub fn eigenvectors(&self, block: &JordanBlock) -> Vec<(TwoComponentState, TwoComponentState)> {
        (0..block.size())
            .map(|n| {
                let c = self.eigenvector_coeffs(n);
                let mut v = TwoComponentState::zero(block.grid());
                for (ck, f) in c.iter().zip(block.basis()) {
                    v.axpy(*ck, f);
                }
                let d = flip(&v);
                (v, d)
            })
            .collect()
    }

    /// λ > 0 and λ < 0 give shifts rotated against each other by π/M.
    pub fn behavior(&self) -> String {
        let d = self.frequencies[0] - self.omega;
        let dir = if d.re.abs() <= 1e-12 * d.norm() {
            "along the imaginary axis"
        } else if d.im.abs() <= 1e-12 * d.norm() {
            "along the real axis"
        } else {
            "off both axes"
        };
        format!(
            "{} split frequencies at radius {} around ω_j, the first {dir}",
            self.frequencies.len(),
            fmt_num(self.s.norm())
        )
    }

    pub fn to_structured(&self) -> String {
        let c = |z: C64| format!("[{}, {}]", fmt_num(z.re), fmt_num(z.im));
        let mut s = String::new();
        let _ = writeln!(s, "omega = {}", c(self.omega));
        let _ = writeln!(s, "lambda = {}", fmt_num(self.lambda));
        let _ = writeln!(s, "alpha = {}", c(self.alpha));
        let _ = writeln!(s, "s = {}", c(self.s));
        let f: Vec<String> = self.frequencies.iter().map(|&z| c(z)).collect();
        let _ = writeln!(s, "frequencies = [{}]", f.join(", "));
        if let Some(h) = self.second_order {
            let _ = writeln!(s, "second_order = {}", c(h));
        }
        let _ = writeln!(s, "behavior = \"{}\"", self.behavior());
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,re_omega,im_omega\n");
        for (n, z) in self.frequencies.iter().enumerate() {
            let _ = writeln!(s, "{n},{},{}", fmt_num(z.re), fmt_num(z.im));
        }
        s
    }
}

/// `H′₀₀ = (f_{0,1}, H′f₀)/(f_{0,1}, f₀)` for a double pole. With the
/// block normalized so that `(f_{0,1}, f_{0,1}) = 0`, this is the common
/// O(λ) shift of both split levels.
pub fn second_order_shift(block: &JordanBlock, p: &Perturbation) -> Result<C64> {
    if block.size() != 2 {
        return Err(Error::Validation(format!(
            "the next-order shift is implemented for double poles, got block size {}",
            block.size()
        )));
    }
    let b = block.basis();
    let num = perturbation_product(block.model(), p, &b[1], &b[0])?;
    Ok(num / bilinear(&b[1], &b[0]))
}

/// `λH̃′` in the basis of split eigenvectors, where `H̃′ = H′ − H′_s`.
pub fn transformed_perturbation(h: &DMatrix<C64>, lambda: f64) -> Result<DMatrix<C64>> {
    let m = h.nrows();
    let alpha = h[(m - 1, 0)];
    let rep = split(C64::new(0.0, 0.0), m, lambda, alpha)?;
    let mut ht = h.clone();
    ht[(m - 1, 0)] = C64::new(0.0, 0.0);
    let mf = m as f64;
    Ok(DMatrix::from_fn(m, m, |n, mm| {
        let mut sum = C64::new(0.0, 0.0);
        for k in 0..m {
            for l in 0..m {
                let ph = C64::from_polar(1.0, TAU * ((l * mm) as f64 - (n * k) as f64) / mf);
                sum += ph * ht[(k, l)] * rep.s.powi(l as i32 - k as i32) / mf;
            }
        }
        lambda * sum
    }))
}

/// Central difference `∂_λ W(ω_j)` of a model family.
pub fn lambda_derivative_of_wronskian(
    family: &(dyn Fn(f64) -> Result<SystemModel> + Sync),
    omega: C64,
    h: f64,
) -> Result<C64> {
    let wp = Wronskian::new(&family(h)?).eval(omega);
    let wm = Wronskian::new(&family(-h)?).eval(omega);
    Ok((wp - wm) / (2.0 * h))
}

/// Split roots of one perturbed model, sorted by Re then Im.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedRoots {
    pub lambda: f64,
    pub roots: Vec<C64>,
}

/// Fitted `ω(λ) ≈ ω_j + ω₁√λ + ω₂λ` for a split double pole.
#[derive(Debug, Clone, PartialEq)]
pub struct RootTrack {
    pub omega: C64,
    pub omega1_squared: C64,
    pub omega2: C64,
    pub tracked: Vec<TrackedRoots>,
}

impl RootTrack {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,root,re_omega,im_omega\n");
        for t in &self.tracked {
            for (k, z) in t.roots.iter().enumerate() {
                let _ = writeln!(s, "{},{k},{},{}", fmt_num(t.lambda), fmt_num(z.re), fmt_num(z.im));
            }
        }
        s
    }
}

/// The `M` zeros of `W` nearest to `omega` for one model, found in a square
/// that is grown or shrunk until it holds exactly `M` zeros.
pub fn track_split_roots(model: &SystemModel, omega: C64, m: usize, lambda: f64) -> Result<Vec<C64>> {
    let w = Wronskian::new(model);
    let opts = SpectrumOptions::default();
    let mut r = 3.0 * lambda.abs().powf(1.0 / m as f64).max(1e-12);
    for _ in 0..40 {
        let b = SearchBox::around(omega, r);
        match w.count_zeros(&b, opts.contour_tolerance) {
            Ok(c) if c == m => {
                let rep = w.spectrum(&b, &opts)?;
                let mut roots = Vec::new();
                for z in rep.zeros {
                    roots.extend(std::iter::repeat_n(z.omega, z.multiplicity));
                }
                return Ok(roots);
            }
            Ok(c) if c > m => r *= 0.6,
            Ok(_) => r *= 1.7,
            Err(_) => r *= 1.07,
        }
    }
    Err(Error::TrackingLost(format!(
        "could not isolate {m} zeros near {omega} for λ = {lambda}"
    )))
}

/// Tracks the two zeros split from a double pole over `lambdas` and fits
/// `((r₊ − r₋)/2)²/λ` and `(r₊ + r₋ − 2ω_j)/(2λ)` linearly in λ; the
/// intercepts are `ω₁²` and `ω₂`.
pub fn direct_root_track(
    family: &(dyn Fn(f64) -> Result<SystemModel> + Sync),
    block: &JordanBlock,
    lambdas: &[f64],
) -> Result<RootTrack> {
    if block.size() != 2 {
        return Err(Error::Validation("root tracking fits split double poles".into()));
    }
    if lambdas.len() < 2 {
        return Err(Error::Validation("at least two λ values are needed for the fit".into()));
    }
    let omega = block.omega();
    let tracked = lambdas
        .par_iter()
        .map(|&lambda| {
            let model = family(lambda)?;
            let roots = track_split_roots(&model, omega, 2, lambda)?;
            Ok(TrackedRoots { lambda, roots })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut y1 = Vec::new();
    let mut y2 = Vec::new();
    for t in &tracked {
        let (a, b) = (t.roots[0], t.roots[1]);
        let h = 0.5 * (a - b);
        y1.push(h * h / t.lambda);
        y2.push((a + b - 2.0 * omega) / (2.0 * t.lambda));
    }
    Ok(RootTrack {
        omega,
        omega1_squared: intercept(lambdas, &y1),
        omega2: intercept(lambdas, &y2),
        tracked,
    })
}

/// Least-squares intercept of `y ≈ c₀ + c₁x`.
fn intercept(x: &[f64], y: &[C64]) -> C64 {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<C64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm) * (v - xm)).sum();
    let sxy: C64 = x.iter().zip(y).map(|(v, w)| (v - xm) * (w - ym)).sum();
    ym - sxy / sxx * xm
}

/// Eigen-analysis of a 4×4 Jordan block perturbed by α in the (1,0) and
/// (3,2) entries.
#[derive(Debug, Clone)]
pub struct NongenericDemo {
    pub matrix: DMatrix<C64>,
    pub eigenvalues: Vec<C64>,
    /// Coefficients of `det(ω − H)`, constant term first.
    pub char_poly: Vec<C64>,
    /// Coefficients of `[(ω − ω_j)² − λα]²`, constant term first.
    pub expected_poly: Vec<C64>,
    /// `(rank(H − ω̃), rank((H − ω̃)²))` at each of `ω_j ± √(λα)`.
    pub ranks: Vec<(usize, usize)>,
}

pub fn nongeneric_4x4_demo(omega: C64, alpha: C64, lambda: f64) -> NongenericDemo {
    let mut h = DMatrix::from_fn(4, 4, |r, c| {
        if r == c {
            omega
        } else if c == r + 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    h[(1, 0)] += lambda * alpha;
    h[(3, 2)] += lambda * alpha;
    let (_, t) = h.clone().schur().unpack();
    let eigenvalues = t.diagonal().iter().copied().collect();
    let char_poly = characteristic_polynomial(&h);
    let la = lambda * alpha;
    // (x² − 2ωx + ω² − λα)²
    let q = [omega * omega - la, -2.0 * omega, C64::new(1.0, 0.0)];
    let mut expected_poly = vec![C64::new(0.0, 0.0); 5];
    for i in 0..3 {
        for j in 0..3 {
            expected_poly[i + j] += q[i] * q[j];
        }
    }
    let r = la.sqrt();
    let ranks = [omega + r, omega - r]
        .iter()
        .map(|&w| {
            let a = &h - DMatrix::identity(4, 4) * w;
            let a2 = &a * &a;
            (rank(&a), rank(&a2))
        })
        .collect();
    NongenericDemo {
        matrix: h,
        eigenvalues,
        char_poly,
        expected_poly,
        ranks,
    }
}

fn rank(a: &DMatrix<C64>) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.max().max(1.0);
    sv.iter().filter(|&&s| s > 1e-10 * smax).count()
}

/// Faddeev–LeVerrier coefficients of `det(xI − A)`, constant term first.
pub fn characteristic_polynomial(a: &DMatrix<C64>) -> Vec<C64> {
    let n = a.nrows();
    let mut c = vec![C64::new(0.0, 0.0); n + 1];
    c[n] = C64::new(1.0, 0.0);
    let mut m = DMatrix::<C64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + DMatrix::identity(n, n) * c[n - k + 1];
        let am = a * &m;
        c[n - k] = -am.trace() / k as f64;
    }
    c
}
