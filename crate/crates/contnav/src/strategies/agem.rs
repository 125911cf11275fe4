//! Gradient projection against a reference (memory) gradient.

use crate::scalar::{dot, norm_sq, Scalar};

/// Project `g` so it no longer conflicts with `g_ref`:
/// when `g . g_ref < 0`, return `g - ((g . g_ref) / ||g_ref||^2) g_ref`,
/// otherwise `g` unchanged. A vanishing reference gradient leaves `g`
/// untouched.
pub fn agem_project<S: Scalar>(g: &[S], g_ref: &[S]) -> Vec<S> {
    assert_eq!(g.len(), g_ref.len(), "gradient length mismatch");
    let ref_sq = norm_sq(g_ref);
    if ref_sq.sqrt() < S::of(1e-12) {
        return g.to_vec();
    }
    let inner = dot(g, g_ref);
    if inner >= S::zero() {
        return g.to_vec();
    }
    let coef = inner / ref_sq;
    g.iter()
        .zip(g_ref)
        .map(|(&gi, &ri)| gi - coef * ri)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_gradient_is_unchanged() {
        let g = vec![1.0f64, 2.0];
        let r = vec![0.5f64, 0.5];
        assert_eq!(agem_project(&g, &r), g);
    }

    #[test]
    fn conflicting_gradient_projects_to_halfspace() {
        // g=(1,-1), g_ref=(0,1) -> (1,0).
        let out = agem_project(&[1.0f64, -1.0], &[0.0, 1.0]);
        assert_eq!(out, vec![1.0, 0.0]);
        // g=(0,-1), g_ref=(0,1) -> (0,0).
        let out = agem_project(&[0.0f64, -1.0], &[0.0, 1.0]);
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn tiny_reference_is_ignored() {
        let g = vec![1.0f64, -1.0];
        let r = vec![0.0f64, -1e-13];
        assert_eq!(agem_project(&g, &r), g);
    }

    #[test]
    fn projected_gradient_satisfies_sign_property() {
        let g = vec![0.3f64, -2.0, 1.5, -0.2];
        let r = vec![1.0f64, 1.0, -1.0, 0.5];
        let p = agem_project(&g, &r);
        let inner = dot(&p, &r);
        let bound = -1e-9 * norm_sq(&p).sqrt() * norm_sq(&r).sqrt();
        assert!(inner >= bound);
    }
}
