//! One-dimensional open systems: piecewise-constant density (wave equation)
//! or potential (Klein–Gordon) on a cavity, point masses or point
//! potentials, and a trivial outgoing exterior beyond `a`.

mod io;
mod state;

use serde::{Deserialize, Serialize};

pub use io::{load_model, parse_model};
pub use state::{Grid, TwoComponentState};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// `[ρ ∂_t² − ∂_x²] φ = 0`; segment values are densities.
    Wave,
    /// `[∂_t² − ∂_x² + V] φ = 0`; segment values are potentials.
    KleinGordon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeftBoundary {
    /// `φ(domain_left) = 0`.
    Node,
    /// Outgoing to the left of `domain_left` (full-line models).
    Outgoing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Segment {
    pub x_lo: f64,
    pub x_hi: f64,
    pub value: f64,
}

impl Segment {
    pub fn new(x_lo: f64, x_hi: f64, value: f64) -> Self {
        Segment { x_lo, x_hi, value }
    }

    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }
}

impl From<[f64; 3]> for Segment {
    fn from(v: [f64; 3]) -> Self {
        Segment::new(v[0], v[1], v[2])
    }
}

impl From<Segment> for [f64; 3] {
    fn from(s: Segment) -> Self {
        [s.x_lo, s.x_hi, s.value]
    }
}

/// Point mass `μ δ(x − x_k)` in ρ (wave) or point term in V (Klein–Gordon).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Delta {
    pub x: f64,
    pub mu: f64,
}

impl From<[f64; 2]> for Delta {
    fn from(v: [f64; 2]) -> Self {
        Delta { x: v[0], mu: v[1] }
    }
}

impl From<Delta> for [f64; 2] {
    fn from(d: Delta) -> Self {
        [d.x, d.mu]
    }
}

/// A validated open system. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    kind: Kind,
    #[serde(default = "default_left")]
    boundary_left: LeftBoundary,
    domain_left: f64,
    a: f64,
    segments: Vec<Segment>,
    #[serde(default)]
    deltas: Vec<Delta>,
}

fn default_left() -> LeftBoundary {
    LeftBoundary::Node
}

impl SystemModel {
    pub fn new(
        kind: Kind,
        boundary_left: LeftBoundary,
        domain_left: f64,
        a: f64,
        segments: Vec<Segment>,
        mut deltas: Vec<Delta>,
    ) -> Result<Self> {
        deltas.sort_by(|p, q| p.x.total_cmp(&q.x));
        let model = SystemModel {
            kind,
            boundary_left,
            domain_left,
            a,
            segments,
            deltas,
        };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.a.is_finite() && self.domain_left.is_finite()) {
            return bad("a and domain_left must be finite".into());
        }
        if self.a <= self.domain_left {
            return bad(format!(
                "a = {} must exceed domain_left = {}",
                self.a, self.domain_left
            ));
        }
        if self.segments.is_empty() {
            return bad("at least one segment is required".into());
        }
        let mut edge = self.domain_left;
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.x_lo.is_finite() && s.x_hi.is_finite() && s.value.is_finite()) {
                return bad(format!("segment {i} has non-finite entries"));
            }
            if s.x_lo != edge {
                return bad(format!(
                    "segments do not tile the cavity: segment {i} starts at {} but the previous edge is {edge}",
                    s.x_lo
                ));
            }
            if s.x_hi <= s.x_lo {
                return bad(format!("segment {i} is empty or reversed"));
            }
            if self.kind == Kind::Wave && s.value <= 0.0 {
                return bad(format!(
                    "density must be positive (segment {i} has value {})",
                    s.value
                ));
            }
            edge = s.x_hi;
        }
        if edge != self.a {
            return bad(format!(
                "segments do not tile the cavity: last edge {edge} differs from a = {}",
                self.a
            ));
        }
        for (k, d) in self.deltas.iter().enumerate() {
            if !(d.x.is_finite() && d.mu.is_finite()) {
                return bad(format!("delta {k} has non-finite entries"));
            }
            if d.x <= self.domain_left || d.x > self.a {
                return bad(format!(
                    "delta {k} at x = {} lies outside (domain_left, a]",
                    d.x
                ));
            }
            if self.kind == Kind::Wave && d.mu < 0.0 {
                return bad(format!(
                    "point mass must be non-negative (delta {k} has mu = {})",
                    d.mu
                ));
            }
        }
        for w in self.deltas.windows(2) {
            if w[0].x == w[1].x {
                return bad(format!("two deltas share the location x = {}", w[0].x));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn boundary_left(&self) -> LeftBoundary {
        self.boundary_left
    }

    pub fn domain_left(&self) -> f64 {
        self.domain_left
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn deltas(&self) -> &[Delta] {
        &self.deltas
    }

    /// ρ = 1 (wave) or V = 0 (Klein–Gordon) outside the cavity.
    pub fn exterior_value(&self) -> f64 {
        match self.kind {
            Kind::Wave => 1.0,
            Kind::KleinGordon => 0.0,
        }
    }

    /// `k²` on a segment with coefficient `value` at frequency ω.
    pub fn k_squared(&self, value: f64, omega: C64) -> C64 {
        match self.kind {
            Kind::Wave => omega * omega * value,
            Kind::KleinGordon => omega * omega - value,
        }
    }

    /// Coefficient relating ∂_tφ to the momentum density on a segment.
    pub fn momentum_weight(&self, value: f64) -> f64 {
        match self.kind {
            Kind::Wave => value,
            Kind::KleinGordon => 1.0,
        }
    }

    /// Momentum weight of a delta: μ for point masses, 0 for point potentials.
    pub fn delta_momentum_weight(&self, d: &Delta) -> f64 {
        match self.kind {
            Kind::Wave => d.mu,
            Kind::KleinGordon => 0.0,
        }
    }

    /// Jump `f′(x⁺) − f′(x⁻)` per unit `f(x)` across a delta.
    pub fn delta_jump(&self, d: &Delta, omega: C64) -> C64 {
        match self.kind {
            Kind::Wave => -omega * omega * d.mu,
            Kind::KleinGordon => C64::new(d.mu, 0.0),
        }
    }

    /// Index of the segment containing `x`; the right endpoint belongs to
    /// the last segment.
    pub fn segment_index(&self, x: f64) -> usize {
        match self
            .segments
            .binary_search_by(|s| s.x_lo.total_cmp(&x))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => (i - 1).min(self.segments.len() - 1),
        }
    }

    pub fn value_at(&self, x: f64) -> f64 {
        if x > self.a || x < self.domain_left {
            return self.exterior_value();
        }
        self.segments[self.segment_index(x)].value
    }

    /// Sum over segments of width times the local wave number per unit
    /// frequency; sets the phase rate of W(ω) along a contour.
    pub fn optical_length(&self) -> f64 {
        let cavity: f64 = self
            .segments
            .iter()
            .map(|s| match self.kind {
                Kind::Wave => s.width() * s.value.sqrt(),
                Kind::KleinGordon => s.width(),
            })
            .sum();
        cavity + (self.a - self.domain_left).abs()
    }

    /// Same model with segment values replaced (e.g. by a perturbation).
    pub fn with_segment_values(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.segments.len() {
            return Err(Error::Validation(format!(
                "expected {} segment values, got {}",
                self.segments.len(),
                values.len()
            )));
        }
        let segments = self
            .segments
            .iter()
            .zip(values)
            .map(|(s, &v)| Segment::new(s.x_lo, s.x_hi, v))
            .collect();
        SystemModel::new(
            self.kind,
            self.boundary_left,
            self.domain_left,
            self.a,
            segments,
            self.deltas.clone(),
        )
    }

    pub fn with_deltas(&self, deltas: Vec<Delta>) -> Result<Self> {
        SystemModel::new(
            self.kind,
            self.boundary_left,
            self.domain_left,
            self.a,
            self.segments.clone(),
            deltas,
        )
    }

    /// Uniform-density wave cavity `ρ = value` on `(0, a)`.
    pub fn slab(value: f64, a: f64) -> Result<Self> {
        SystemModel::new(
            Kind::Wave,
            LeftBoundary::Node,
            0.0,
            a,
            vec![Segment::new(0.0, a, value)],
            vec![],
        )
    }

    /// Piecewise-constant approximation of a smooth profile by `n` equal
    /// segments sampled at their midpoints.
    pub fn sampled(
        kind: Kind,
        boundary_left: LeftBoundary,
        domain_left: f64,
        a: f64,
        n: usize,
        profile: impl Fn(f64) -> f64,
        deltas: Vec<Delta>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("segment count must be positive".into()));
        }
        let h = (a - domain_left) / n as f64;
        let segments = (0..n)
            .map(|i| {
                let lo = if i == 0 { domain_left } else { domain_left + i as f64 * h };
                let hi = if i + 1 == n { a } else { domain_left + (i + 1) as f64 * h };
                Segment::new(lo, hi, profile(domain_left + (i as f64 + 0.5) * h))
            })
            .collect();
        SystemModel::new(kind, boundary_left, domain_left, a, segments, deltas)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("model serialization cannot fail")
    }
}

/// `γ = K·coth K + K²/sinh² K`, the decay rate of the double pole of the
/// `sinh(Kx)` construction.
pub fn double_pole_gamma(k: f64) -> f64 {
    let s = k.sinh();
    k / k.tanh() + k * k / (s * s)
}

/// Wave model with ρ = K²/γ² on (0,1), point mass K²/(γ² sinh² K) at x = 1,
/// whose Wronskian has a double zero at ω = −iγ.
pub fn builtin_double_pole_model(k: f64) -> Result<SystemModel> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("K must be positive, got {k}")));
    }
    let gamma = double_pole_gamma(k);
    let rho = k * k / (gamma * gamma);
    let mu = rho / (k.sinh() * k.sinh());
    SystemModel::new(
        Kind::Wave,
        LeftBoundary::Node,
        0.0,
        1.0,
        vec![Segment::new(0.0, 1.0, rho)],
        vec![Delta { x: 1.0, mu }],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub tiling_exact: bool,
    pub positivity: bool,
    pub discontinuity_at_a: bool,
    /// Only meaningful for models that are outgoing on the left.
    pub discontinuity_at_left: Option<bool>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.tiling_exact && self.positivity
    }
}

/// Report-only diagnostics, including the discontinuity condition that
/// guarantees completeness of the pole expansion.
pub fn validate(model: &SystemModel) -> ValidationReport {
    let tiling_exact = model.check().is_ok();
    let positivity = match model.kind {
        Kind::Wave => {
            model.segments.iter().all(|s| s.value > 0.0) && model.deltas.iter().all(|d| d.mu >= 0.0)
        }
        Kind::KleinGordon => true,
    };
    let ext = model.exterior_value();
    let last = model.segments.last().map(|s| s.value).unwrap_or(ext);
    let delta_at_a = model.deltas.iter().any(|d| d.x == model.a && d.mu != 0.0);
    let discontinuity_at_a = last != ext || delta_at_a;
    let mut warnings = Vec::new();
    if !discontinuity_at_a {
        warnings.push(
            "no discontinuity at a: completeness of the pole expansion is not guaranteed".to_string(),
        );
    }
    let discontinuity_at_left = match model.boundary_left {
        LeftBoundary::Node => None,
        LeftBoundary::Outgoing => {
            let first = model.segments[0].value;
            let d = first != ext;
            if !d {
                warnings.push(
                    "no discontinuity at the left edge: completeness is not guaranteed".to_string(),
                );
            }
            Some(d)
        }
    };
    if !positivity {
        warnings.push("density must be positive".to_string());
    }
    ValidationReport {
        tiling_exact,
        positivity,
        discontinuity_at_a,
        discontinuity_at_left,
        warnings,
    }
}
