//! Orthogonal decomposition of L2 vector fields on the torus.
//!
//! The projection P onto curl-free (gradient) fields acts mode-by-mode as
//! u_hat(k) -> k (k . u_hat) / |k|^2, with the k = 0 mode mapped to zero.
//! Constants are divergence-free on the torus, so annihilating the zero mode
//! is the exact analogue of the decay-at-infinity condition of the continuum
//! problem; it also selects the mean-zero representative of the scalar
//! potential. P is idempotent and self-adjoint with respect to
//! [`grid::inner_product`], its range is the gradient fields and its kernel
//! the divergence-free fields.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{merge_components, split_components, Engine};
use crate::grid::{self, Region, ScalarField, VectorField};

/// Default relative curl-residual gate for [`recover_potential`].
pub const DEFAULT_CURL_TOLERANCE: f64 = 1e-8;

/// Orthogonal split u = curl_free + div_free.
#[derive(Clone, Debug)]
pub struct HelmholtzSplit {
    /// P u: the gradient-field part.
    pub curl_free: VectorField,
    /// (I - P) u: the divergence-free part.
    pub div_free: VectorField,
}

/// Apply P = grad Delta^{-1} div.
pub fn project_curl_free(u: &VectorField) -> VectorField {
    let engine = Engine::new(u.spec());
    let [cx, cy, cz] = split_components(u.data());
    let sx = engine.forward(&cx);
    let sy = engine.forward(&cy);
    let sz = engine.forward(&cz);
    let n = u.spec().node_count();
    let mut ox = vec![Complex64::default(); n];
    let mut oy = vec![Complex64::default(); n];
    let mut oz = vec![Complex64::default(); n];
    engine.for_each_mode(|idx, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 {
            let s = (sx[idx] * k[0] + sy[idx] * k[1] + sz[idx] * k[2]) / k2;
            ox[idx] = s * k[0];
            oy[idx] = s * k[1];
            oz[idx] = s * k[2];
        }
    });
    VectorField::from_data(
        *u.spec(),
        merge_components(
            engine.inverse_real(ox),
            engine.inverse_real(oy),
            engine.inverse_real(oz),
        ),
    )
    .expect("projection preserves field shape")
}

/// Apply I - P (projection onto divergence-free fields).
pub fn project_div_free(u: &VectorField) -> VectorField {
    u.try_sub(&project_curl_free(u))
        .expect("same spec by construction")
}

/// Both parts of the orthogonal decomposition.
pub fn decompose(u: &VectorField) -> HelmholtzSplit {
    let curl_free = project_curl_free(u);
    let div_free = u.try_sub(&curl_free).expect("same spec by construction");
    HelmholtzSplit { curl_free, div_free }
}

/// Stray field of a magnetization supported on `body`: h_s = -P[chi m].
///
/// The output is curl-free and satisfies div(chi m + h_s) = 0 up to FFT
/// roundoff, i.e. the Maxwell constraint.
pub fn stray_field(m: &VectorField, body: &Region) -> Result<VectorField> {
    m.spec().check_same(body.spec())?;
    let masked = m.masked(body)?;
    Ok(project_curl_free(&masked).scaled(-1.0))
}

/// Scalar potential of a curl-free field: phi with grad phi = -h and zero
/// mean. Errors when the relative curl residual of `h` exceeds `tol`.
pub fn recover_potential_with_tol(h: &VectorField, tol: f64) -> Result<ScalarField> {
    let c = grid::curl(h);
    let denom = h.norm().max(f64::MIN_POSITIVE);
    let residual = c.norm() / denom;
    if residual > tol {
        return Err(Error::NotCurlFree { residual, tol });
    }
    let engine = Engine::new(h.spec());
    let [cx, cy, cz] = split_components(h.data());
    let sx = engine.forward(&cx);
    let sy = engine.forward(&cy);
    let sz = engine.forward(&cz);
    let mut out = vec![Complex64::default(); h.spec().node_count()];
    engine.for_each_mode(|idx, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 {
            // grad phi = -h  =>  phi_hat = i (k . h_hat) / |k|^2
            let d = sx[idx] * k[0] + sy[idx] * k[1] + sz[idx] * k[2];
            out[idx] = Complex64::new(-d.im, d.re) / k2;
        }
    });
    ScalarField::from_data(*h.spec(), engine.inverse_real(out))
}

/// [`recover_potential_with_tol`] at the default gate.
pub fn recover_potential(h: &VectorField) -> Result<ScalarField> {
    recover_potential_with_tol(h, DEFAULT_CURL_TOLERANCE)
}

/// Largest relative residual of the two projector identities P^2 = P and
/// ker(P) ⊇ div-free on the given field; diagnostic helper for tests.
pub fn projection_residual(u: &VectorField) -> f64 {
    let p = project_curl_free(u);
    let pp = project_curl_free(&p);
    let denom = u.norm().max(f64::MIN_POSITIVE);
    pp.try_sub(&p).expect("same spec").norm() / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gradient_of_scalar, inner_product, random_band_limited, GridSpec};
    use std::f64::consts::TAU;

    const N: usize = 16;

    fn spec() -> GridSpec {
        GridSpec::unit(N).unwrap()
    }

    #[test]
    fn gradient_fields_are_fixed_points() {
        let s = spec();
        let k = TAU / s.edge_length();
        let phi = ScalarField::from_fn(s, |p| (k * p[0]).sin());
        let u = gradient_of_scalar(&phi);
        let pu = project_curl_free(&u);
        assert!(pu.max_node_dist(&u).unwrap() <= 1e-10 * u.max_abs());
    }

    #[test]
    fn constants_project_to_zero() {
        let u = VectorField::uniform(spec(), [1.0, 1.0, 1.0]);
        assert!(project_curl_free(&u).max_abs() < 1e-13);
    }

    #[test]
    fn mixed_field_splits_exactly() {
        let s = spec();
        let k = TAU / s.edge_length();
        // gradient part: grad sin(2 pi x / L)
        let grad_part = VectorField::from_fn(s, |p| [k * (k * p[0]).cos(), 0.0, 0.0]);
        // divergence-free part: single mode transverse to its wavevector
        let df_part = VectorField::from_fn(s, |p| [0.0, (k * p[0]).sin(), 0.0]);
        let u = grad_part.try_add(&df_part).unwrap();
        let split = decompose(&u);
        assert!(split.curl_free.max_node_dist(&grad_part).unwrap() <= 1e-10 * (1.0 + k));
        assert!(split.div_free.max_node_dist(&df_part).unwrap() <= 1e-10);
    }

    #[test]
    fn split_invariants_on_random_fields() {
        let s = spec();
        for seed in 0..5u64 {
            let u = random_band_limited(s, 100 + seed, 4, 10);
            let split = decompose(&u);
            let norm2 = inner_product(&u, &u).unwrap();
            let cross = inner_product(&split.curl_free, &split.div_free).unwrap();
            assert!(cross.abs() <= 1e-10 * norm2.max(1e-300));
            assert!(grid::curl(&split.curl_free).max_abs() <= 1e-10 * (1.0 + u.max_abs()));
            assert!(grid::divergence(&split.div_free).max_abs() <= 1e-10 * (1.0 + u.max_abs()));
        }
    }

    #[test]
    fn idempotent_self_adjoint_kernel() {
        let s = spec();
        for seed in 0..5u64 {
            let u = random_band_limited(s, 200 + seed, 4, 10);
            let v = random_band_limited(s, 300 + seed, 4, 10);
            assert!(projection_residual(&u) <= 1e-10);
            let pu = project_curl_free(&u);
            let pv = project_curl_free(&v);
            let lhs = inner_product(&pu, &v).unwrap();
            let rhs = inner_product(&u, &pv).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * u.norm() * v.norm());
            // kernel: divergence-free inputs are annihilated
            let df = grid::curl(&random_band_limited(s, 400 + seed, 4, 10));
            assert!(project_curl_free(&df).norm() <= 1e-10 * df.norm());
        }
    }

    #[test]
    fn stray_field_of_zero_is_zero() {
        let s = spec();
        let body = Region::full(s);
        let h = stray_field(&VectorField::zeros(s), &body).unwrap();
        assert!(h.max_abs() == 0.0);
    }

    #[test]
    fn uniform_magnetization_full_torus_has_no_stray_field() {
        let s = spec();
        let body = Region::full(s);
        let m = VectorField::uniform(s, [1.0, 0.0, 0.0]);
        let h = stray_field(&m, &body).unwrap();
        assert!(h.max_abs() < 1e-13);
    }

    #[test]
    fn cube_inclusion_stray_field_satisfies_maxwell() {
        let s = spec();
        let l = s.edge_length();
        let body = Region::cuboid(s, [l / 2.0; 3], [l / 4.0; 3]).unwrap();
        let m = VectorField::uniform(s, [1.0, 0.0, 0.0]);
        let h = stray_field(&m, &body).unwrap();
        let chi_m = m.masked(&body).unwrap();
        let total = chi_m.try_add(&h).unwrap();
        assert!(grid::curl(&h).norm() <= 1e-9 * (1.0 + h.norm()));
        assert!(grid::divergence(&total).norm() <= 1e-9 * (1.0 + total.norm()));
        // orthogonality of h_s and chi m - (-h_s) = chi m + h_s
        let cross = inner_product(&h, &total).unwrap();
        assert!(cross.abs() <= 1e-9 * (1.0 + chi_m.norm() * h.norm()));
    }

    #[test]
    fn potential_of_zero_field_is_zero() {
        let phi = recover_potential(&VectorField::zeros(spec())).unwrap();
        assert!(phi.max_abs() == 0.0);
    }

    #[test]
    fn potential_inverts_single_mode() {
        let s = spec();
        let k = TAU / s.edge_length();
        let target = ScalarField::from_fn(s, |p| (k * p[0]).sin());
        let h = gradient_of_scalar(&target).scaled(-1.0);
        let phi = recover_potential(&h).unwrap();
        assert!(phi.mean().abs() < 1e-12);
        for (i, v) in phi.data().iter().enumerate() {
            assert!((v - target.data()[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn potential_rejects_noisy_input() {
        let s = spec();
        let k = TAU / s.edge_length();
        let clean = VectorField::from_fn(s, |p| [-k * (k * p[0]).cos(), 0.0, 0.0]);
        let noise_raw = grid::curl(&random_band_limited(s, 9, 3, 6));
        let noise = noise_raw.scaled(1e-3 / noise_raw.norm());
        let h = clean.try_add(&noise).unwrap();
        match recover_potential_with_tol(&h, 1e-6) {
            Err(Error::NotCurlFree { residual, tol }) => {
                assert!(residual > tol);
            }
            other => panic!("expected NotCurlFree, got {other:?}"),
        }
    }
}
