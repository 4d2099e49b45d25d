//! Pöschl–Teller potential `V₀ sech²x`: exact spectrum, hard truncation to
//! `[−L, L]`, and the critical-damping point of the truncated model.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Kind, LeftBoundary, SystemModel};
use crate::spectral::{find_double_pole_2d, fmt_num};
use crate::C64;

pub const DEFAULT_SEGMENTS: usize = 2000;

/// Agreement required between successive extrapolated critical values of
/// V₀ before the result is reported.
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// Both branches of `ω_j` for `j = 0..=j_max`.
pub fn pt_exact_frequencies(v0: f64, j_max: usize) -> Vec<[C64; 2]> {
    (0..=j_max)
        .map(|j| {
            let d = j as f64 + 0.5;
            if v0 >= 0.25 {
                let r = (v0 - 0.25).sqrt();
                [C64::new(r, -d), C64::new(-r, -d)]
            } else {
                let r = (0.25 - v0).sqrt();
                [C64::new(0.0, -(d + r)), C64::new(0.0, -(d - r))]
            }
        })
        .collect()
}

/// Klein–Gordon model on `[−L, L]`, outgoing at both ends, with `V₀ sech²x`
/// sampled at the midpoints of `segments` equal cells.
pub fn build_truncated_pt(v0: f64, l: f64, segments: usize) -> Result<SystemModel> {
    if segments < 100 {
        return Err(Error::Domain(format!("at least 100 segments are required, got {segments}")));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Domain(format!("truncation half-width must be positive, got {l}")));
    }
    SystemModel::sampled(
        Kind::KleinGordon,
        LeftBoundary::Outgoing,
        -l,
        l,
        segments,
        |x| v0 / x.cosh().powi(2),
        vec![],
    )
}

/// Critical point at a fixed segment count.
pub fn pt_critical_point_at(l: f64, segments: usize, seed: (f64, C64)) -> Result<(f64, C64)> {
    find_double_pole_2d(|v0| build_truncated_pt(v0, l, segments), seed, 60)
}

/// Converged critical point and the sequence of segment counts behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub l: f64,
    pub v0: f64,
    pub omega: C64,
    /// `(segments, V₀*, ω*)` per refinement level.
    pub levels: Vec<(usize, f64, C64)>,
}

impl CriticalPoint {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("L,V0_star,re_omega,im_omega\n");
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_num(self.l),
            fmt_num(self.v0),
            fmt_num(self.omega.re),
            fmt_num(self.omega.im)
        );
        s
    }

    pub fn to_structured(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "L = {}", fmt_num(self.l));
        let _ = writeln!(s, "V0_star = {}", fmt_num(self.v0));
        let _ = writeln!(s, "omega_star = [{}, {}]", fmt_num(self.omega.re), fmt_num(self.omega.im));
        let _ = writeln!(s, "i_omega_star = {}", fmt_num((C64::new(0.0, 1.0) * self.omega).re));
        for (n, v, w) in &self.levels {
            let _ = writeln!(s, "[[level]]\nsegments = {n}\nV0 = {}\nomega = [{}, {}]", fmt_num(*v), fmt_num(w.re), fmt_num(w.im));
        }
        s
    }
}

/// Doubles the segment count from `DEFAULT_SEGMENTS` and Richardson
/// extrapolates the O(N⁻²) sampling error until two extrapolated values of
/// V₀* agree to `CONVERGENCE_TOL` (or `tol`).
pub fn pt_critical_point(l: f64) -> Result<CriticalPoint> {
    pt_critical_point_with(l, CONVERGENCE_TOL)
}

pub fn pt_critical_point_with(l: f64, tol: f64) -> Result<CriticalPoint> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if !(l >= 1.0) {
        return Err(Error::Domain(format!("truncation half-width L = {l} is too small")));
    }
    let mut seed = (0.25, C64::new(0.0, -0.5));
    let mut levels = Vec::new();
    let mut last: Option<(f64, C64)> = None;
    let mut n = DEFAULT_SEGMENTS;
    for _ in 0..6 {
        let (v, w) = pt_critical_point_at(l, n, seed)?;
        seed = (v, w);
        levels.push((n, v, w));
        if levels.len() >= 2 {
            let (_, v1, w1) = levels[levels.len() - 2];
            let ev = (4.0 * v - v1) / 3.0;
            let ew = (4.0 * w - w1) / 3.0;
            if let Some((pv, _)) = last {
                if (ev - pv).abs() < tol {
                    return Ok(CriticalPoint { l, v0: ev, omega: ew, levels });
                }
            }
            last = Some((ev, ew));
        }
        n *= 2;
    }
    Err(Error::NonConvergence(format!(
        "critical point for L = {l} did not settle under segment doubling: {levels:?}"
    )))
}
