use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::TwoComponentState;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Conjugation-free pairing
/// `i[∫(ψχ̂ + ψ̂χ) dx + ψ(a)χ(a)]`, plus the matching surface term at the
/// left end of models that are outgoing there.
pub fn bilinear(psi: &TwoComponentState, chi: &TwoComponentState) -> C64 {
    let g = psi.grid();
    let mut s = C64::new(0.0, 0.0);
    for k in 0..g.len() {
        s += g.w[k] * (psi.phi[k] * chi.phat[k] + psi.phat[k] * chi.phi[k]);
    }
    for (p, q) in psi
        .point_value
        .iter()
        .zip(&psi.point_weight)
        .zip(chi.point_value.iter().zip(&chi.point_weight))
    {
        let ((pv, pw), (qv, qw)) = (p, q);
        s += pv[0] * qw[1] + pw[1] * qv[0] + pv[1] * qw[0] + pw[0] * qv[1];
    }
    s += psi.right_edge[0] * chi.right_edge[0];
    if g.left_edge.is_some() {
        s += psi.left_edge[0] * chi.left_edge[0];
    }
    I * s
}

/// `ℱ(ψ₁, ψ₂) = −i(ψ₂*, ψ₁*)`.
pub fn flip(state: &TwoComponentState) -> TwoComponentState {
    let f = |a: C64, b: C64| [-I * b.conj(), -I * a.conj()];
    let mut out = state.clone();
    for k in 0..out.phi.len() {
        let [p, q] = f(state.phi[k], state.phat[k]);
        out.phi[k] = p;
        out.phat[k] = q;
    }
    for v in out.point_value.iter_mut().chain(out.point_weight.iter_mut()) {
        *v = f(v[0], v[1]);
    }
    out.right_edge = f(state.right_edge[0], state.right_edge[1]);
    out.left_edge = f(state.left_edge[0], state.left_edge[1]);
    out.flipped = !state.flipped;
    out
}

/// Standard inner product `∫(ζ*χ + ζ̂*χ̂)` over the half-line, with the
/// exterior collapsed to a surface term when exactly one argument is a
/// flipped outgoing state. For two states of the same type only the
/// cavity contributes.
pub fn inner(zeta: &TwoComponentState, chi: &TwoComponentState) -> C64 {
    let g = zeta.grid();
    let mut s = C64::new(0.0, 0.0);
    for k in 0..g.len() {
        s += g.w[k] * (zeta.phi[k].conj() * chi.phi[k] + zeta.phat[k].conj() * chi.phat[k]);
    }
    for (p, q) in zeta
        .point_value
        .iter()
        .zip(&zeta.point_weight)
        .zip(chi.point_value.iter().zip(&chi.point_weight))
    {
        let ((pv, pw), (qv, qw)) = (p, q);
        for c in 0..2 {
            s += pw[c].conj() * qv[c] + pv[c].conj() * qw[c];
        }
    }
    let surface = |z: [C64; 2], x: [C64; 2]| match (zeta.flipped, chi.flipped) {
        (true, false) => z[1].conj() * x[0],
        (false, true) => z[0].conj() * x[1],
        _ => C64::new(0.0, 0.0),
    };
    s += surface(zeta.right_edge, chi.right_edge);
    if g.left_edge.is_some() {
        s += surface(zeta.left_edge, chi.left_edge);
    }
    s
}

/// Vectors with an inner product and linear combinations, as needed for
/// dual-basis construction.
pub trait InnerProductSpace: Sized {
    fn inner(&self, other: &Self) -> C64;
    fn combination(coeffs: &[C64], vectors: &[Self]) -> Self;
}

impl InnerProductSpace for DVector<C64> {
    fn inner(&self, other: &Self) -> C64 {
        self.dotc(other)
    }

    fn combination(coeffs: &[C64], vectors: &[Self]) -> Self {
        let mut out = DVector::zeros(vectors[0].len());
        for (c, v) in coeffs.iter().zip(vectors) {
            out += v * *c;
        }
        out
    }
}

impl InnerProductSpace for TwoComponentState {
    fn inner(&self, other: &Self) -> C64 {
        inner(self, other)
    }

    fn combination(coeffs: &[C64], vectors: &[Self]) -> Self {
        let mut out = vectors[0].map(|_| C64::new(0.0, 0.0));
        for (c, v) in coeffs.iter().zip(vectors) {
            out.axpy(*c, v);
        }
        out
    }
}

/// Smallest-to-largest singular value ratio below which the metric is
/// treated as singular.
pub const METRIC_RCOND: f64 = 1e-10;

/// Duals `wᵐ ∈ span(w)` with `⟨wᵐ|vₙ⟩ = δᵐₙ`, from the metric matrix
/// `G_kn = ⟨w_k|v_n⟩`. Fails when `span(w)` contains a vector orthogonal to
/// all of `v`.
pub fn gram_dual<T: InnerProductSpace>(v: &[T], w: &[T]) -> Result<Vec<T>> {
    let m = v.len();
    if w.len() != m || m == 0 {
        return Err(Error::Validation(format!(
            "dual construction needs equal nonzero counts, got {} and {}",
            m,
            w.len()
        )));
    }
    let g = DMatrix::from_fn(m, m, |k, n| w[k].inner(&v[n]));
    let svd = g.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if !(ratio >= METRIC_RCOND) {
        return Err(Error::SingularMetric { ratio });
    }
    let ginv = svd
        .pseudo_inverse(0.0)
        .map_err(|e| Error::Invariant(format!("metric inversion failed: {e}")))?;
    // ⟨Σ_k c_mk w_k | v_n⟩ = Σ_k c̄_mk G_kn = δ_mn  ⇒  c = conj(G⁻¹).
    Ok((0..m)
        .map(|row| {
            let c: Vec<C64> = (0..m).map(|k| ginv[(row, k)].conj()).collect();
            T::combination(&c, w)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Grid, SystemModel};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn grid() -> Arc<crate::model::Grid> {
        let m = crate::model::builtin_double_pole_model(1.0).unwrap();
        Grid::gauss(&m, 0.1, 12)
    }

    fn random_state(g: &Arc<crate::model::Grid>, p: &[f64; 8]) -> TwoComponentState {
        let mut s = TwoComponentState::from_fn(
            g,
            |x| C64::new(p[0] * (p[1] * x).sin(), p[2] * x * x),
            |x| C64::new(p[3] * x, p[4] * (p[5] * x).cos()),
        );
        s.set_point(0, [C64::new(p[6], 0.1), C64::new(0.2, p[7])], [C64::new(0.0, 0.0), C64::new(p[7], p[6])]);
        s
    }

    proptest! {
        #[test]
        fn bilinear_is_symmetric(p in proptest::array::uniform8(-2.0f64..2.0), q in proptest::array::uniform8(-2.0f64..2.0)) {
            let g = grid();
            let a = random_state(&g, &p);
            let b = random_state(&g, &q);
            let d = bilinear(&a, &b) - bilinear(&b, &a);
            prop_assert!(d.norm() <= 1e-14 * (1.0 + bilinear(&a, &b).norm()));
        }

        #[test]
        fn flip_squared_is_identity(p in proptest::array::uniform8(-2.0f64..2.0)) {
            let a = random_state(&grid(), &p);
            let back = flip(&flip(&a));
            prop_assert_eq!(back.is_flipped(), a.is_flipped());
            prop_assert!(back.max_abs_diff(&a) <= 1e-15);
        }

        #[test]
        fn flipped_inner_product_is_bilinear(p in proptest::array::uniform8(-2.0f64..2.0), q in proptest::array::uniform8(-2.0f64..2.0)) {
            let g = grid();
            let a = random_state(&g, &p);
            let b = random_state(&g, &q);
            let d = inner(&flip(&a), &b) - bilinear(&a, &b);
            prop_assert!(d.norm() <= 1e-13 * (1.0 + bilinear(&a, &b).norm()));
            let e = inner(&b, &flip(&a)) - bilinear(&a, &b).conj();
            prop_assert!(e.norm() <= 1e-13 * (1.0 + bilinear(&a, &b).norm()));
        }
    }

    #[test]
    fn flip_of_static_real_field_has_zero_first_component() {
        let g = Grid::gauss(&SystemModel::slab(1.0, 1.0).unwrap(), 0.25, 8);
        let s = TwoComponentState::from_field(&g, |x| x * (1.0 - x));
        let f = flip(&s);
        assert!(f.phi().iter().all(|v| v.norm() == 0.0));
        assert!(f.phat().iter().any(|v| v.norm() > 0.0));
    }

    fn e(i: usize) -> DVector<C64> {
        let mut v = DVector::zeros(3);
        v[i] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn orthonormal_basis_is_self_dual() {
        let v = vec![e(0), e(1), e(2)];
        let d = gram_dual(&v, &v).unwrap();
        for (a, b) in d.iter().zip(&v) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn dual_space_containing_orthogonal_axis_is_singular() {
        let v = vec![e(0), e(1)];
        let w = vec![e(2), e(0)];
        assert!(matches!(gram_dual(&v, &w), Err(Error::SingularMetric { .. })));
    }

    #[test]
    fn generic_duals_are_biorthogonal() {
        let c = |a: f64, b: f64| C64::new(a, b);
        let v = vec![
            DVector::from_vec(vec![c(1.0, 0.2), c(0.3, -1.0), c(0.0, 0.5)]),
            DVector::from_vec(vec![c(-0.4, 0.0), c(1.0, 1.0), c(2.0, 0.0)]),
            DVector::from_vec(vec![c(0.1, 0.1), c(0.0, -0.7), c(0.9, 0.3)]),
        ];
        let w = vec![
            DVector::from_vec(vec![c(0.5, 0.0), c(0.2, 0.1), c(1.0, -1.0)]),
            DVector::from_vec(vec![c(1.0, 0.3), c(0.0, 0.0), c(0.3, 0.4)]),
            DVector::from_vec(vec![c(-0.2, 0.6), c(1.5, 0.0), c(0.0, 0.2)]),
        ];
        let d = gram_dual(&v, &w).unwrap();
        for (m, dm) in d.iter().enumerate() {
            for (n, vn) in v.iter().enumerate() {
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((dm.inner(vn) - expect).norm() < 1e-12);
            }
        }
    }
}
