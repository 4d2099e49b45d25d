//! Wronskian evaluation, argument-principle zero counting, refinement with
//! multiplicities, and recursive spectrum search.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{Matrix4x3, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SystemModel;
use crate::odeint::{left_at_edge, propagate_left_on, propagate_right_on, propagate_taylor_on, wronskian_of, Layout, Side};
use crate::tps::Tps;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// `W(ω)` of one model with the piece layout cached.
#[derive(Debug, Clone)]
pub struct Wronskian {
    layout: Arc<Layout>,
    optical_length: f64,
}

impl Wronskian {
    pub fn new(model: &SystemModel) -> Self {
        Wronskian {
            layout: Layout::new(model),
            optical_length: model.optical_length(),
        }
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// `W = f′g − fg′` at `a⁺`, with `g = e^{iωx}` there.
    pub fn eval(&self, omega: C64) -> C64 {
        let y = left_at_edge(&self.layout, omega);
        let a = self.layout.right();
        (I * omega * a).exp() * (y[1] - I * omega * y[0])
    }

    /// `W_n = (1/n!) ∂ⁿW(ω₀)` for `n = 0..=order`.
    pub fn taylor(&self, omega0: C64, order: usize) -> Vec<C64> {
        let n = order + 1;
        let chain = propagate_taylor_on(&self.layout, omega0, n, Side::Left);
        let [f, fp] = chain.right_edge();
        let a = self.layout.right();
        let g = Tps::exp_linear(I * omega0 * a, I * a, n);
        let iw = Tps::linear(I * omega0, I, n);
        let w = &g * &(fp - &(&iw * f));
        w.into_coeffs()
    }

    /// `f′g − fg′` evaluated at an arbitrary position.
    pub fn eval_at(&self, omega: C64, x: f64) -> C64 {
        let f = propagate_left_on(&self.layout, omega);
        let g = propagate_right_on(&self.layout, omega);
        wronskian_of(f.eval(x), g.eval(x))
    }

    fn phase_step(&self) -> f64 {
        0.1 / (self.optical_length + 1.0)
    }
}

pub fn wronskian(model: &SystemModel, omega: C64) -> C64 {
    Wronskian::new(model).eval(omega)
}

pub fn wronskian_taylor(model: &SystemModel, omega0: C64, order: usize) -> Vec<C64> {
    Wronskian::new(model).taylor(omega0, order)
}

/// Closed rectangle in the complex ω-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let b = SearchBox { re_min, re_max, im_min, im_max };
        if !(re_min < re_max && im_min < im_max) || ![re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) {
            return Err(Error::Validation(format!("empty or non-finite search box {b:?}")));
        }
        Ok(b)
    }

    /// Square of half-width `r` about `center`.
    pub fn around(center: C64, r: f64) -> Self {
        SearchBox {
            re_min: center.re - r,
            re_max: center.re + r,
            im_min: center.im - r,
            im_max: center.im + r,
        }
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn diagonal(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }

    pub fn contains(&self, w: C64) -> bool {
        w.re >= self.re_min && w.re <= self.re_max && w.im >= self.im_min && w.im <= self.im_max
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_max, self.im_max),
            C64::new(self.re_min, self.im_max),
        ]
    }

    /// Halves across the longer side, cut at fraction `t`.
    fn split(&self, t: f64) -> (SearchBox, SearchBox) {
        let mut a = *self;
        let mut b = *self;
        if self.re_max - self.re_min >= self.im_max - self.im_min {
            let c = self.re_min + t * (self.re_max - self.re_min);
            a.re_max = c;
            b.re_min = c;
        } else {
            let c = self.im_min + t * (self.im_max - self.im_min);
            a.im_max = c;
            b.im_min = c;
        }
        (a, b)
    }
}

impl std::str::FromStr for SearchBox {
    type Err = Error;

    /// `re_min,re_max,im_min,im_max`.
    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("search box '{s}': {e}")))?;
        if v.len() != 4 {
            return Err(Error::Parse(format!("search box '{s}' needs four comma-separated numbers")));
        }
        SearchBox::new(v[0], v[1], v[2], v[3])
    }
}

/// Relative |W| floor on zero-counting contours.
pub const DEFAULT_CONTOUR_TOLERANCE: f64 = 1e-9;

struct Tracker<'a, F: Fn(C64) -> C64> {
    w: &'a F,
    min_abs: f64,
    samples: Vec<f64>,
}

impl<F: Fn(C64) -> C64> Tracker<'_, F> {
    /// Accumulated `arg W` along `p → q`, bisecting until every step turns
    /// the phase by less than π/2.
    fn edge(&mut self, p: C64, q: C64, step: f64) -> Result<f64> {
        let n = ((q - p).norm() / step).ceil().max(8.0) as usize;
        let mut total = 0.0;
        let at = |i: usize| if i == n { q } else { p + (q - p) * (i as f64 / n as f64) };
        let mut wp = (self.w)(p);
        self.note(wp);
        let mut mags = vec![wp.norm()];
        for i in 1..=n {
            let w1 = (self.w)(at(i));
            self.note(w1);
            total += self.segment(at(i - 1), wp, at(i), w1, 0)?;
            mags.push(w1.norm());
            wp = w1;
        }
        // A zero of even order on the contour leaves no phase jump; find it
        // through the dips of |W|.
        for i in 1..n {
            if mags[i] <= mags[i - 1] && mags[i] <= mags[i + 1] {
                self.dip(at(i - 1), at(i + 1));
            }
        }
        Ok(total)
    }

    /// Golden-section minimum of |W| on the segment `p → q`.
    fn dip(&mut self, p: C64, q: C64) {
        const R: f64 = 0.618_033_988_749_894_9;
        let f = |s: f64| (self.w)(p + (q - p) * s).norm();
        let (mut a, mut b) = (0.0, 1.0);
        let mut c = b - R * (b - a);
        let mut d = a + R * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - R * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + R * (b - a);
                fd = f(d);
            }
        }
        self.min_abs = self.min_abs.min(fc.min(fd));
    }

    /// A step is accepted when both halves turn by less than π/2 and add
    /// up to the whole; this rejects steps that alias a full turn, as
    /// happens next to close pairs of zeros.
    fn segment(&mut self, z0: C64, w0: C64, z1: C64, w1: C64, depth: u32) -> Result<f64> {
        let d = (w1 / w0).arg();
        let zm = 0.5 * (z0 + z1);
        let wm = (self.w)(zm);
        self.note(wm);
        let (a, b) = ((wm / w0).arg(), (w1 / wm).arg());
        let half = std::f64::consts::FRAC_PI_2;
        if d.abs() < half && a.abs() < half && b.abs() < half && (a + b - d).abs() < 1e-6 {
            return Ok(d);
        }
        if depth > 48 {
            return Err(Error::ContourTooClose {
                min_abs: self.min_abs,
                threshold: 0.0,
            });
        }
        Ok(self.segment(z0, w0, zm, wm, depth + 1)? + self.segment(zm, wm, z1, w1, depth + 1)?)
    }

    fn note(&mut self, w: C64) {
        let a = w.norm();
        self.min_abs = self.min_abs.min(a);
        self.samples.push(a);
    }
}

/// Winding number of `w` around the closed polygon `pts`, with phase
/// tracking at initial spacing `step`.
pub fn winding_number<F: Fn(C64) -> C64>(w: &F, pts: &[C64], step: f64, tolerance: f64) -> Result<i64> {
    let mut t = Tracker {
        w,
        min_abs: f64::INFINITY,
        samples: Vec::new(),
    };
    let mut total = 0.0;
    for k in 0..pts.len() {
        total += t.edge(pts[k], pts[(k + 1) % pts.len()], step)?;
    }
    t.samples.sort_by(f64::total_cmp);
    let median = t.samples[t.samples.len() / 2];
    let threshold = tolerance * median;
    if !(t.min_abs >= threshold) {
        return Err(Error::ContourTooClose {
            min_abs: t.min_abs,
            threshold,
        });
    }
    let n = total / std::f64::consts::TAU;
    let r = n.round();
    if (n - r).abs() > 1e-3 {
        return Err(Error::Invariant(format!("winding integral {n} is not an integer")));
    }
    Ok(r as i64)
}

fn circle(center: C64, r: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| center + C64::from_polar(r, std::f64::consts::TAU * k as f64 / n as f64))
        .collect()
}

impl Wronskian {
    pub fn count_zeros(&self, b: &SearchBox, tolerance: f64) -> Result<usize> {
        let w = |z: C64| self.eval(z);
        let n = winding_number(&w, &b.corners(), self.phase_step(), tolerance)?;
        usize::try_from(n).map_err(|_| Error::Invariant(format!("negative zero count {n}")))
    }

    /// Zeros inside a circle, counted with multiplicity.
    pub fn winding_on_circle(&self, center: C64, r: f64) -> Result<usize> {
        let w = |z: C64| self.eval(z);
        let step = self.phase_step().min(r);
        let n = winding_number(&w, &circle(center, r, 32), step, DEFAULT_CONTOUR_TOLERANCE)?;
        usize::try_from(n).map_err(|_| Error::Invariant(format!("negative zero count {n}")))
    }
}

pub fn count_zeros(model: &SystemModel, b: &SearchBox) -> Result<usize> {
    Wronskian::new(model).count_zeros(b, DEFAULT_CONTOUR_TOLERANCE)
}

#[derive(Debug, Clone, Copy)]
pub struct RefineOptions {
    /// Iterates farther than this from the seed abort the search.
    pub basin: f64,
    pub max_iter: usize,
    /// Circle radius for the multiplicity winding number.
    pub circle_radius: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            basin: 1.0,
            max_iter: 100,
            circle_radius: 1e-3,
        }
    }
}

/// A zero of `W` with its multiplicity and leading Taylor coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Zero {
    #[serde(serialize_with = "ser_c64")]
    pub omega: C64,
    pub multiplicity: usize,
    pub residual: f64,
    #[serde(serialize_with = "ser_c64")]
    pub w_lead: C64,
}

fn ser_c64<S: serde::Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

impl Wronskian {
    pub fn refine_zero(&self, seed: C64, opts: &RefineOptions) -> Result<Zero> {
        let mut w = seed;
        let mut converged = false;
        for _ in 0..opts.max_iter {
            let t = self.taylor(w, 2);
            if t[0] == C64::new(0.0, 0.0) {
                converged = true;
                break;
            }
            // Newton on W/W′, whose zeros are simple whatever the order of W.
            let den = t[1] * t[1] - 2.0 * t[0] * t[2];
            let step = if den.norm() > 0.0 {
                -t[0] * t[1] / den
            } else if t[1].norm() > 0.0 {
                -t[0] / t[1]
            } else {
                return Err(Error::NonConvergence(format!("W′ and W″ vanish at {w}")));
            };
            if !step.re.is_finite() || !step.im.is_finite() {
                return Err(Error::NonConvergence(format!("non-finite Newton step at {w}")));
            }
            w += step;
            if (w - seed).norm() > opts.basin {
                return Err(Error::NonConvergence(format!(
                    "iterate {w} left the basin of radius {} around {seed}",
                    opts.basin
                )));
            }
            if step.norm() <= 1e-14 * (1.0 + w.norm()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!(
                "no convergence from seed {seed} after {} iterations",
                opts.max_iter
            )));
        }
        let m = self.winding_on_circle(w, opts.circle_radius)?;
        if m == 0 {
            return Err(Error::NonConvergence(format!("converged point {w} encloses no zero")));
        }
        // A zero of order m is a simple zero of W^(m−1).
        for _ in 0..20 {
            let t = self.taylor(w, m);
            if t[m].norm() == 0.0 {
                break;
            }
            let step = -t[m - 1] / (m as f64 * t[m]);
            if step.norm() > opts.circle_radius {
                break;
            }
            w += step;
            if step.norm() <= 1e-15 * (1.0 + w.norm()) {
                break;
            }
        }
        let t = self.taylor(w, m);
        Ok(Zero {
            omega: w,
            multiplicity: m,
            residual: t[0].norm(),
            w_lead: t[m],
        })
    }
}

pub fn refine_zero(model: &SystemModel, seed: C64) -> Result<Zero> {
    Wronskian::new(model).refine_zero(seed, &RefineOptions::default())
}

/// Every zero in a box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub search_box: SearchBox,
    pub zeros: Vec<Zero>,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    pub contour_tolerance: f64,
    pub circle_radius: f64,
    pub max_depth: u32,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            contour_tolerance: DEFAULT_CONTOUR_TOLERANCE,
            circle_radius: 1e-3,
            max_depth: 40,
        }
    }
}

impl Wronskian {
    pub fn spectrum(&self, b: &SearchBox, opts: &SpectrumOptions) -> Result<SpectrumReport> {
        let total = self.count_zeros(b, opts.contour_tolerance)?;
        let mut zeros = self.search(b, total, opts, 0)?;
        zeros.sort_by(|p, q| p.omega.re.total_cmp(&q.omega.re).then(p.omega.im.total_cmp(&q.omega.im)));
        let found: usize = zeros.iter().map(|z| z.multiplicity).sum();
        if found != total {
            return Err(Error::Invariant(format!(
                "found {found} zeros (with multiplicity) but the box winds {total} times"
            )));
        }
        Ok(SpectrumReport { search_box: *b, zeros })
    }

    fn search(&self, b: &SearchBox, count: usize, opts: &SpectrumOptions, depth: u32) -> Result<Vec<Zero>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let small = b.diagonal() < 1.0;
        if count == 1 || small {
            let ro = RefineOptions {
                basin: b.diagonal(),
                circle_radius: opts.circle_radius.min(0.25 * b.diagonal()),
                ..RefineOptions::default()
            };
            if let Ok(z) = self.refine_zero(b.center(), &ro) {
                if b.contains(z.omega) && z.multiplicity == count {
                    return Ok(vec![z]);
                }
            }
        }
        if depth >= opts.max_depth {
            return Err(Error::NonConvergence(format!("zero search did not resolve {count} zeros in {b:?}")));
        }
        let (lo, hi, nlo, nhi) = self.split_counted(b, opts)?;
        if nlo + nhi != count {
            return Err(Error::Invariant(format!(
                "zero counts are not additive: {nlo} + {nhi} != {count}"
            )));
        }
        let (l, h) = rayon::join(
            || self.search(&lo, nlo, opts, depth + 1),
            || self.search(&hi, nhi, opts, depth + 1),
        );
        let mut out = l?;
        out.extend(h?);
        Ok(out)
    }

    fn split_counted(&self, b: &SearchBox, opts: &SpectrumOptions) -> Result<(SearchBox, SearchBox, usize, usize)> {
        let mut last = None;
        for &t in &[0.4637, 0.5391, 0.4219, 0.5813, 0.5] {
            let (lo, hi) = b.split(t);
            match (
                self.count_zeros(&lo, opts.contour_tolerance),
                self.count_zeros(&hi, opts.contour_tolerance),
            ) {
                (Ok(a), Ok(c)) => return Ok((lo, hi, a, c)),
                (Err(e), _) | (_, Err(e)) => last = Some(e),
            }
        }
        Err(last.unwrap())
    }
}

pub fn spectrum(model: &SystemModel, b: &SearchBox) -> Result<SpectrumReport> {
    Wronskian::new(model).spectrum(b, &SpectrumOptions::default())
}

/// Fifteen significant digits.
pub fn fmt_num(x: f64) -> String {
    // Normalizes −0 so that output does not depend on the sign of zero.
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.14e}")
}

impl SpectrumReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re_omega,im_omega,multiplicity,residual,re_W_lead,im_W_lead\n");
        for z in &self.zeros {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                fmt_num(z.omega.re),
                fmt_num(z.omega.im),
                z.multiplicity,
                fmt_num(z.residual),
                fmt_num(z.w_lead.re),
                fmt_num(z.w_lead.im)
            );
        }
        s
    }

    pub fn to_structured(&self) -> String {
        let b = &self.search_box;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "search_box = [{}, {}, {}, {}]\n",
            fmt_num(b.re_min),
            fmt_num(b.re_max),
            fmt_num(b.im_min),
            fmt_num(b.im_max)
        );
        for z in &self.zeros {
            let _ = writeln!(
                s,
                "[[zeros]]\nomega = [{}, {}]\nmultiplicity = {}\nresidual = {}\nw_lead = [{}, {}]\n",
                fmt_num(z.omega.re),
                fmt_num(z.omega.im),
                z.multiplicity,
                fmt_num(z.residual),
                fmt_num(z.w_lead.re),
                fmt_num(z.w_lead.im)
            );
        }
        s
    }
}

/// Gauss–Newton for a double zero in a one-parameter family: solves
/// `W(ω; p) = ∂_ωW(ω; p) = 0` for `(p, ω)`.
pub fn find_double_pole_2d<F>(family: F, seed: (f64, C64), max_iter: usize) -> Result<(f64, C64)>
where
    F: Fn(f64) -> Result<SystemModel>,
{
    let (mut p, mut w) = seed;
    let mut prev = f64::INFINITY;
    let residual = |p: f64, w: C64| -> Result<(C64, C64, C64)> {
        let t = Wronskian::new(&family(p)?).taylor(w, 2);
        Ok((t[0], t[1], t[2]))
    };
    for _ in 0..max_iter {
        let (w0, w1, w2) = residual(p, w)?;
        let hp = 1e-6 * p.abs().max(1.0);
        let (a0, a1, _) = residual(p + hp, w)?;
        let (b0, b1, _) = residual(p - hp, w)?;
        let dp0 = (a0 - b0) / (2.0 * hp);
        let dp1 = (a1 - b1) / (2.0 * hp);
        // Columns: p, Re ω, Im ω. Rows: Re/Im of W and of ∂_ωW.
        let dw1 = 2.0 * w2;
        let j = Matrix4x3::new(
            dp0.re, w1.re, (I * w1).re,
            dp0.im, w1.im, (I * w1).im,
            dp1.re, dw1.re, (I * dw1).re,
            dp1.im, dw1.im, (I * dw1).im,
        );
        let r = Vector4::new(w0.re, w0.im, w1.re, w1.im);
        let svd = j.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-13 * smax) {
            return Err(Error::SingularJacobian(format!(
                "double-pole Newton at p = {p}, ω = {w} (σ ratio {:.3e})",
                smin / smax
            )));
        }
        let dx = svd
            .solve(&(-r), 0.0)
            .map_err(|e| Error::SingularJacobian(e.to_string()))?;
        p += dx[0];
        w += C64::new(dx[1], dx[2]);
        let scale = 1.0 + p.abs() + w.norm();
        let step = dx.norm();
        // Below 1e-9 a step that no longer shrinks is at the rounding floor.
        if step <= 1e-13 * scale || (step <= 1e-9 * scale && step > 0.25 * prev) {
            return Ok((p, w));
        }
        prev = step;
    }
    Err(Error::NonConvergence(format!(
        "double-pole Newton did not converge in {max_iter} iterations (last p = {p}, ω = {w})"
    )))
}
