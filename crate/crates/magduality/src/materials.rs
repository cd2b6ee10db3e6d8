//! Energy-density catalogue for the homogeneous example materials.
//!
//! Each variant carries both densities of the dual pair: `phi(b)` for the
//! single-field model and `phi_hat(m)` / `psi_hat(m)` for the
//! magnetization model, where `psi_hat = phi_hat + (mu0/2)|m|^2` is the
//! augmented density whose conjugate is `-phi`. Gradients, subdifferentials,
//! proximal maps and closed-form conjugates are provided per variant, along
//! with the convexity classification that routes each variant to the legal
//! solver path.
//!
//! All densities are spatially homogeneous; position enters only through the
//! body mask. The permanent magnet therefore carries a uniform prescribed
//! magnetization.
//!
//! Conventions worth noting:
//! - `PermanentMagnet`: `psi_hat` is the indicator of {m0} with value 0 at
//!   m0 (so `phi_hat(m0) = -(mu0/2)|m0|^2`). This is the normalization under
//!   which `phi(b) = -b·m0` is exactly `-psi_hat^diamond` and both model
//!   energies agree at critical states.
//! - `Langevin`: the scalar profile is
//!   `kappa * (x*atanh(x) + ln(1-x^2)/2)`, `x = |m|/m_s`, whose gradient is
//!   `(kappa/m_s) * atanh(x) * m/|m|`; `phi` has no independent closed form
//!   and is evaluated through the smooth conjugate transform of `psi_hat`.
//! - `HardSaturation` reproduces the non-involutive conjugate chain only; it
//!   is barred from both solvers.

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::legendre::{Convexity, ScalarFunction3};
use crate::vec3;

/// Relative tolerance for membership in measure-zero effective domains
/// (point and sphere indicators).
const DOMAIN_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub enum MaterialVariant {
    /// b = mu h with mu > mu0.
    Paramagnet { mu: f64 },
    /// b = mu h with 0 < mu < mu0.
    Diamagnet { mu: f64 },
    /// Paramagnetic along e1, diamagnetic along e2 and e3.
    AnisotropicMixed {
        mu_p: f64,
        mu_d: f64,
        frame: [[f64; 3]; 3],
    },
    /// Fixed magnetization m0 regardless of the field.
    PermanentMagnet { m0: [f64; 3] },
    /// Convex saturation constraint |m| <= m_s.
    SoftSaturation { m_s: f64 },
    /// Statistical-mechanics model with temperature parameter kappa;
    /// converges to soft saturation as kappa -> 0.
    Langevin { kappa: f64, m_s: f64 },
    /// Nonconvex constraint |m| = m_s; conjugate-chain demonstrations only.
    HardSaturation { m_s: f64 },
}

#[derive(Clone, Debug)]
pub struct MaterialModel {
    variant: MaterialVariant,
    mu0: f64,
}

/// Single-valued gradient or set-valued subdifferential of `psi_hat`.
#[derive(Clone, Debug)]
pub enum PsiHatSlope {
    Gradient([f64; 3]),
    /// The ray {base + t * direction : t >= 0}; `direction` is unit length.
    /// Arises from the normal cone of the saturation ball at its boundary.
    Ray { base: [f64; 3], direction: [f64; 3] },
    /// All of R^3 (point indicator at its point).
    FullSpace,
}

impl PsiHatSlope {
    /// Whether `v` belongs to the set, up to `tol`.
    pub fn contains(&self, v: [f64; 3], tol: f64) -> bool {
        match self {
            PsiHatSlope::Gradient(g) => vec3::dist(*g, v) <= tol,
            PsiHatSlope::Ray { base, direction } => {
                let w = vec3::sub(v, *base);
                let t = vec3::dot(w, *direction);
                t >= -tol && vec3::dist(w, vec3::scale(t, *direction)) <= tol
            }
            PsiHatSlope::FullSpace => true,
        }
    }

    pub fn gradient(&self) -> Option<[f64; 3]> {
        match self {
            PsiHatSlope::Gradient(g) => Some(*g),
            _ => None,
        }
    }
}

impl MaterialModel {
    pub fn new(variant: MaterialVariant, mu0: f64) -> Result<Self> {
        if !(mu0.is_finite() && mu0 > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "mu0 must be positive, got {mu0}"
            )));
        }
        match &variant {
            MaterialVariant::Paramagnet { mu } => {
                if !(mu.is_finite() && *mu > mu0) {
                    return Err(Error::InvalidMaterial(format!(
                        "paramagnet requires mu > mu0, got mu={mu}, mu0={mu0}"
                    )));
                }
            }
            MaterialVariant::Diamagnet { mu } => {
                if !(mu.is_finite() && *mu > 0.0 && *mu < mu0) {
                    return Err(Error::InvalidMaterial(format!(
                        "diamagnet requires 0 < mu < mu0, got mu={mu}, mu0={mu0}"
                    )));
                }
            }
            MaterialVariant::AnisotropicMixed { mu_p, mu_d, frame } => {
                if !(mu_d.is_finite() && mu_p.is_finite() && 0.0 < *mu_d && *mu_d < mu0 && mu0 < *mu_p)
                {
                    return Err(Error::InvalidMaterial(format!(
                        "anisotropic mix requires 0 < mu_d < mu0 < mu_p, got mu_d={mu_d}, mu_p={mu_p}, mu0={mu0}"
                    )));
                }
                for i in 0..3 {
                    for j in 0..3 {
                        let d = vec3::dot(frame[i], frame[j]);
                        let expect = if i == j { 1.0 } else { 0.0 };
                        if (d - expect).abs() > 1e-12 {
                            return Err(Error::InvalidMaterial(format!(
                                "frame not orthonormal: e{}·e{} = {d}",
                                i + 1,
                                j + 1
                            )));
                        }
                    }
                }
            }
            MaterialVariant::PermanentMagnet { m0 } => {
                if !vec3::is_finite(*m0) {
                    return Err(Error::InvalidMaterial("m0 must be finite".into()));
                }
            }
            MaterialVariant::SoftSaturation { m_s } | MaterialVariant::HardSaturation { m_s } => {
                if !(m_s.is_finite() && *m_s > 0.0) {
                    return Err(Error::InvalidMaterial(format!(
                        "saturation requires m_s > 0, got {m_s}"
                    )));
                }
            }
            MaterialVariant::Langevin { kappa, m_s } => {
                if !(m_s.is_finite() && *m_s > 0.0 && kappa.is_finite() && *kappa > 0.0) {
                    return Err(Error::InvalidMaterial(format!(
                        "langevin requires kappa > 0 and m_s > 0, got kappa={kappa}, m_s={m_s}"
                    )));
                }
            }
        }
        Ok(MaterialModel { variant, mu0 })
    }

    pub fn paramagnet(mu0: f64, mu: f64) -> Result<Self> {
        MaterialModel::new(MaterialVariant::Paramagnet { mu }, mu0)
    }

    pub fn diamagnet(mu0: f64, mu: f64) -> Result<Self> {
        MaterialModel::new(MaterialVariant::Diamagnet { mu }, mu0)
    }

    pub fn anisotropic_mixed(mu0: f64, mu_p: f64, mu_d: f64, frame: [[f64; 3]; 3]) -> Result<Self> {
        MaterialModel::new(MaterialVariant::AnisotropicMixed { mu_p, mu_d, frame }, mu0)
    }

    pub fn permanent_magnet(mu0: f64, m0: [f64; 3]) -> Result<Self> {
        MaterialModel::new(MaterialVariant::PermanentMagnet { m0 }, mu0)
    }

    pub fn soft_saturation(mu0: f64, m_s: f64) -> Result<Self> {
        MaterialModel::new(MaterialVariant::SoftSaturation { m_s }, mu0)
    }

    pub fn langevin(mu0: f64, kappa: f64, m_s: f64) -> Result<Self> {
        MaterialModel::new(MaterialVariant::Langevin { kappa, m_s }, mu0)
    }

    pub fn hard_saturation(mu0: f64, m_s: f64) -> Result<Self> {
        MaterialModel::new(MaterialVariant::HardSaturation { m_s }, mu0)
    }

    pub fn variant(&self) -> &MaterialVariant {
        &self.variant
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn variant_name(&self) -> &'static str {
        match self.variant {
            MaterialVariant::Paramagnet { .. } => "paramagnet",
            MaterialVariant::Diamagnet { .. } => "diamagnet",
            MaterialVariant::AnisotropicMixed { .. } => "anisotropic_mixed",
            MaterialVariant::PermanentMagnet { .. } => "permanent_magnet",
            MaterialVariant::SoftSaturation { .. } => "soft_saturation",
            MaterialVariant::Langevin { .. } => "langevin",
            MaterialVariant::HardSaturation { .. } => "hard_saturation",
        }
    }

    /// Quadratic coefficient c = mu0*mu/(mu - mu0) of the augmented density
    /// for the linear variants (positive for paramagnets, negative for
    /// diamagnets).
    fn quad_coefficient(mu0: f64, mu: f64) -> f64 {
        mu0 * mu / (mu - mu0)
    }

    // ---------------------------------------------------------------
    // classification
    // ---------------------------------------------------------------

    /// Convexity of b -> phi(b).
    pub fn phi_convexity(&self) -> Convexity {
        match self.variant {
            MaterialVariant::Diamagnet { .. } => Convexity::Convex,
            MaterialVariant::AnisotropicMixed { .. } => Convexity::Saddle,
            _ => Convexity::Concave,
        }
    }

    /// Convexity of m -> psi_hat(m).
    pub fn psi_hat_convexity(&self) -> Convexity {
        match self.variant {
            MaterialVariant::Paramagnet { .. }
            | MaterialVariant::PermanentMagnet { .. }
            | MaterialVariant::SoftSaturation { .. }
            | MaterialVariant::Langevin { .. } => Convexity::Convex,
            MaterialVariant::Diamagnet { .. } => Convexity::Concave,
            MaterialVariant::AnisotropicMixed { .. } => Convexity::Saddle,
            MaterialVariant::HardSaturation { .. } => Convexity::Unknown,
        }
    }

    /// The b-model integrand chi*phi(b) + |b - b_a|^2/(2 mu0) is convex for
    /// every variant except the hard saturation constraint.
    pub fn admits_solve_b(&self) -> bool {
        !matches!(self.variant, MaterialVariant::HardSaturation { .. })
    }

    /// Variants whose augmented density is convex admit the proximal
    /// magnetization solver.
    pub fn admits_solve_mh(&self) -> bool {
        self.psi_hat_convexity() == Convexity::Convex
    }

    /// Lipschitz constant of grad phi, used for the automatic step rule of
    /// the b-solver. None for the hard saturation constraint.
    pub fn grad_phi_lipschitz(&self) -> Option<f64> {
        let mu0 = self.mu0;
        match self.variant {
            MaterialVariant::Paramagnet { mu } | MaterialVariant::Diamagnet { mu } => {
                Some((1.0 / mu - 1.0 / mu0).abs())
            }
            MaterialVariant::AnisotropicMixed { mu_p, mu_d, .. } => {
                Some((1.0 / mu_p - 1.0 / mu0).abs().max((1.0 / mu_d - 1.0 / mu0).abs()))
            }
            MaterialVariant::PermanentMagnet { .. } => Some(0.0),
            MaterialVariant::SoftSaturation { .. } | MaterialVariant::Langevin { .. } => {
                Some(1.0 / mu0)
            }
            MaterialVariant::HardSaturation { .. } => None,
        }
    }

    // ---------------------------------------------------------------
    // phi and its gradient
    // ---------------------------------------------------------------

    /// Pointwise density of the single-field model. Finite for every variant.
    pub fn phi(&self, b: [f64; 3]) -> f64 {
        let mu0 = self.mu0;
        match &self.variant {
            MaterialVariant::Paramagnet { mu } | MaterialVariant::Diamagnet { mu } => {
                0.5 * (1.0 / mu - 1.0 / mu0) * vec3::norm_sq(b)
            }
            MaterialVariant::AnisotropicMixed { mu_p, mu_d, frame } => {
                let bp = vec3::dot(b, frame[0]);
                let bd1 = vec3::dot(b, frame[1]);
                let bd2 = vec3::dot(b, frame[2]);
                0.5 * (1.0 / mu_p - 1.0 / mu0) * bp * bp
                    + 0.5 * (1.0 / mu_d - 1.0 / mu0) * (bd1 * bd1 + bd2 * bd2)
            }
            MaterialVariant::PermanentMagnet { m0 } => -vec3::dot(b, *m0),
            MaterialVariant::SoftSaturation { m_s } => {
                let bn = vec3::norm(b);
                if bn <= mu0 * m_s {
                    -bn * bn / (2.0 * mu0)
                } else {
                    -bn * m_s + 0.5 * mu0 * m_s * m_s
                }
            }
            MaterialVariant::Langevin { kappa, m_s } => {
                // operational definition through the smooth conjugate of psi_hat
                -langevin_psi_hat_conjugate(*kappa, *m_s, mu0, b)
            }
            MaterialVariant::HardSaturation { m_s } => {
                -vec3::norm(b) * m_s + 0.5 * mu0 * m_s * m_s
            }
        }
    }

    /// Pointwise gradient of phi. The negated value is the constitutive
    /// magnetization m(b). Errors at the non-differentiable point of the
    /// hard saturation density (b = 0).
    pub fn grad_phi(&self, b: [f64; 3]) -> Result<[f64; 3]> {
        let mu0 = self.mu0;
        match &self.variant {
            MaterialVariant::Paramagnet { mu } | MaterialVariant::Diamagnet { mu } => {
                Ok(vec3::scale(1.0 / mu - 1.0 / mu0, b))
            }
            MaterialVariant::AnisotropicMixed { mu_p, mu_d, frame } => {
                let mut g = vec3::scale((1.0 / mu_p - 1.0 / mu0) * vec3::dot(b, frame[0]), frame[0]);
                for e in &frame[1..] {
                    g = vec3::add(g, vec3::scale((1.0 / mu_d - 1.0 / mu0) * vec3::dot(b, *e), *e));
                }
                Ok(g)
            }
            MaterialVariant::PermanentMagnet { m0 } => Ok(vec3::scale(-1.0, *m0)),
            MaterialVariant::SoftSaturation { m_s } => {
                let bn = vec3::norm(b);
                if bn <= mu0 * m_s {
                    Ok(vec3::scale(-1.0 / mu0, b))
                } else {
                    Ok(vec3::scale(-m_s / bn, b))
                }
            }
            MaterialVariant::Langevin { kappa, m_s } => {
                // grad phi = -(grad psi_hat)^{-1}
                Ok(vec3::scale(-1.0, langevin_grad_psi_hat_inverse(*kappa, *m_s, mu0, b)))
            }
            MaterialVariant::HardSaturation { m_s } => {
                let bn = vec3::norm(b);
                if bn == 0.0 {
                    return Err(Error::NotDifferentiable {
                        variant: "hard_saturation",
                        at: b,
                    });
                }
                Ok(vec3::scale(-m_s / bn, b))
            }
        }
    }

    // ---------------------------------------------------------------
    // psi_hat, phi_hat and slopes
    // ---------------------------------------------------------------

    /// Augmented density psi_hat(m) = phi_hat(m) + (mu0/2)|m|^2; extended real.
    pub fn psi_hat(&self, m: [f64; 3]) -> ExtReal {
        let mu0 = self.mu0;
        match &self.variant {
            MaterialVariant::Paramagnet { mu } | MaterialVariant::Diamagnet { mu } => {
                let c = Self::quad_coefficient(mu0, *mu);
                ExtReal::Finite(0.5 * c * vec3::norm_sq(m))
            }
            MaterialVariant::AnisotropicMixed { mu_p, mu_d, frame } => {
                let cp = Self::quad_coefficient(mu0, *mu_p);
                let cd = Self::quad_coefficient(mu0, *mu_d);
                let mp = vec3::dot(m, frame[0]);
                let md1 = vec3::dot(m, frame[1]);
                let md2 = vec3::dot(m, frame[2]);
                ExtReal::Finite(0.5 * cp * mp * mp + 0.5 * cd * (md1 * md1 + md2 * md2))
            }
            MaterialVariant::PermanentMagnet { m0 } => {
                if vec3::dist(m, *m0) <= DOMAIN_TOL * (1.0 + vec3::norm(*m0)) {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            }
            MaterialVariant::SoftSaturation { m_s } => {
                if vec3::norm(m) <= m_s * (1.0 + DOMAIN_TOL) {
                    ExtReal::Finite(0.5 * mu0 * vec3::norm_sq(m))
                } else {
                    ExtReal::PosInf
                }
            }
            MaterialVariant::Langevin { kappa, m_s } => {
                match langevin_profile(*kappa, *m_s, vec3::norm(m)) {
                    Some(v) => ExtReal::Finite(v + 0.5 * mu0 * vec3::norm_sq(m)),
                    None => ExtReal::PosInf,
                }
            }
            MaterialVariant::HardSaturation { m_s } => {
                if (vec3::norm(m) - m_s).abs() <= DOMAIN_TOL * m_s.max(1.0) {
                    ExtReal::Finite(0.5 * mu0 * m_s * m_s)
                } else {
                    ExtReal::PosInf
                }
            }
        }
    }

    /// Material density of the magnetization model: phi_hat = psi_hat - (mu0/2)|m|^2.
    pub fn phi_hat(&self, m: [f64; 3]) -> ExtReal {
        match self.psi_hat(m) {
            ExtReal::Finite(v) => ExtReal::Finite(v - 0.5 * self.mu0 * vec3::norm_sq(m)),
            inf => inf,
        }
    }

    /// Gradient of psi_hat where single-valued, the full subdifferential
    /// otherwise. Errors outside the effective domain.
    pub fn grad_or_subdiff_psi_hat(&self, m: [f64; 3]) -> Result<PsiHatSlope> {
        let mu0 = self.mu0;
        match &self.variant {
            MaterialVariant::Paramagnet { mu } | MaterialVariant::Diamagnet { mu } => {
                let c = Self::quad_coefficient(mu0, *mu);
                Ok(PsiHatSlope::Gradient(vec3::scale(c, m)))
            }
            MaterialVariant::AnisotropicMixed { mu_p, mu_d, frame } => {
                let cp = Self::quad_coefficient(mu0, *mu_p);
                let cd = Self::quad_coefficient(mu0, *mu_d);
                let mut g = vec3::scale(cp * vec3::dot(m, frame[0]), frame[0]);
                for e in &frame[1..] {
                    g = vec3::add(g, vec3::scale(cd * vec3::dot(m, *e), *e));
                }
                Ok(PsiHatSlope::Gradient(g))
            }
            MaterialVariant::PermanentMagnet { m0 } => {
                if vec3::dist(m, *m0) <= DOMAIN_TOL * (1.0 + vec3::norm(*m0)) {
                    Ok(PsiHatSlope::FullSpace)
                } else {
                    Err(Error::OutsideDomain {
                        of: "permanent_magnet psi_hat",
                        at: m,
                    })
                }
            }
            MaterialVariant::SoftSaturation { m_s } => {
                let mn = vec3::norm(m);
                if mn < m_s * (1.0 - DOMAIN_TOL) {
                    Ok(PsiHatSlope::Gradient(vec3::scale(mu0, m)))
                } else if mn <= m_s * (1.0 + DOMAIN_TOL) {
                    Ok(PsiHatSlope::Ray {
                        base: vec3::scale(mu0, m),
                        direction: vec3::unit_or_zero(m),
                    })
                } else {
                    Err(Error::OutsideDomain {
                        of: "soft_saturation psi_hat",
                        at: m,
                    })
                }
            }
            MaterialVariant::Langevin { kappa, m_s } => {
                let mn = vec3::norm(m);
                if mn >= *m_s {
                    return Err(Error::OutsideDomain {
                        of: "langevin psi_hat",
                        at: m,
                    });
                }
                if mn == 0.0 {
                    return Ok(PsiHatSlope::Gradient([0.0; 3]));
                }
                let radial = kappa / m_s * (mn / m_s).atanh();
                Ok(PsiHatSlope::Gradient(vec3::add(
                    vec3::scale(radial / mn, m),
                    vec3::scale(mu0, m),
                )))
            }
            MaterialVariant::HardSaturation { .. } => Err(Error::OutsideDomain {
                of: "hard_saturation psi_hat (nonconvex; no subdifferential shipped)",
                at: m,
            }),
        }
    }

    /// Proximal map of psi_hat: the unique minimizer of
    /// `psi_hat(z) + |z - v|^2 / (2 step)`. Only for convex psi_hat.
    pub fn prox_psi_hat(&self, step: f64, v: [f64; 3]) -> Result<[f64; 3]> {
        assert!(step > 0.0, "prox step must be positive");
        let mu0 = self.mu0;
        match &self.variant {
            MaterialVariant::Paramagnet { mu } => {
                let c = Self::quad_coefficient(mu0, *mu);
                Ok(vec3::scale(1.0 / (1.0 + step * c), v))
            }
            MaterialVariant::PermanentMagnet { m0 } => Ok(*m0),
            MaterialVariant::SoftSaturation { m_s } => {
                let t = vec3::norm(v) / (1.0 + mu0 * step);
                Ok(vec3::scale(t.min(*m_s), vec3::unit_or_zero(v)))
            }
            MaterialVariant::Langevin { kappa, m_s } => {
                let vn = vec3::norm(v);
                let t = invert_radial(*kappa, *m_s, mu0 + 1.0 / step, vn / step);
                Ok(vec3::scale(t, vec3::unit_or_zero(v)))
            }
            _ => Err(Error::ProxNonConvex {
                variant: self.variant_name(),
            }),
        }
    }

    // ---------------------------------------------------------------
    // closed-form conjugates
    // ---------------------------------------------------------------

    /// Closed-form value of psi_hat^diamond(b) = -phi(b) for every variant
    /// (formal convex conjugate for the hard saturation constraint).
    pub fn psi_hat_conjugate(&self, b: [f64; 3]) -> f64 {
        -self.phi(b)
    }

    /// Inverse of grad psi_hat for the smoothly invertible variants.
    pub fn grad_psi_hat_inverse(&self, b: [f64; 3]) -> Option<[f64; 3]> {
        let mu0 = self.mu0;
        match &self.variant {
            MaterialVariant::Paramagnet { mu } | MaterialVariant::Diamagnet { mu } => {
                let c = Self::quad_coefficient(mu0, *mu);
                Some(vec3::scale(1.0 / c, b))
            }
            MaterialVariant::AnisotropicMixed { mu_p, mu_d, frame } => {
                let cp = Self::quad_coefficient(mu0, *mu_p);
                let cd = Self::quad_coefficient(mu0, *mu_d);
                let mut m = vec3::scale(vec3::dot(b, frame[0]) / cp, frame[0]);
                for e in &frame[1..] {
                    m = vec3::add(m, vec3::scale(vec3::dot(b, *e) / cd, *e));
                }
                Some(m)
            }
            MaterialVariant::Langevin { kappa, m_s } => {
                Some(langevin_grad_psi_hat_inverse(*kappa, *m_s, mu0, b))
            }
            _ => None,
        }
    }

    /// Suggested scan radius for the brute-force conjugation oracle: large
    /// enough that every shipped conjugate attains its sup strictly inside.
    pub fn default_search_radius(&self, z_star: [f64; 3]) -> f64 {
        let base = 4.0_f64.max(4.0 * vec3::norm(z_star) / self.mu0);
        match &self.variant {
            MaterialVariant::SoftSaturation { m_s }
            | MaterialVariant::Langevin { m_s, .. }
            | MaterialVariant::HardSaturation { m_s } => base.max(4.0 * m_s),
            _ => base,
        }
    }

    /// phi packaged for the conjugation machinery. The closed conjugate
    /// uses phi^diamond(z) = -psi_hat(-z), valid for every convex-or-concave
    /// phi here (the saddle variant goes through the smooth transform).
    pub fn phi_function(&self) -> ScalarFunction3 {
        let model = self.clone();
        let mut f = ScalarFunction3::new(self.phi_convexity(), move |z| {
            ExtReal::Finite(model.phi(*z))
        });
        if !matches!(self.variant, MaterialVariant::HardSaturation { .. }) {
            let model = self.clone();
            f = f.with_grad(move |z| model.grad_phi(*z).expect("total gradient"));
        }
        let mu0 = self.mu0;
        match &self.variant {
            MaterialVariant::Paramagnet { mu } | MaterialVariant::Diamagnet { mu } => {
                let coeff = 1.0 / mu - 1.0 / mu0;
                f = f.with_grad_inv(move |w| vec3::scale(1.0 / coeff, *w));
            }
            MaterialVariant::AnisotropicMixed { mu_p, mu_d, frame } => {
                let cp = 1.0 / mu_p - 1.0 / mu0;
                let cd = 1.0 / mu_d - 1.0 / mu0;
                let frame = *frame;
                f = f.with_grad_inv(move |w| {
                    let mut b = vec3::scale(vec3::dot(*w, frame[0]) / cp, frame[0]);
                    for e in &frame[1..] {
                        b = vec3::add(b, vec3::scale(vec3::dot(*w, *e) / cd, *e));
                    }
                    b
                });
            }
            MaterialVariant::Langevin { .. } => {
                // grad phi = -(grad psi_hat)^{-1}, so its inverse is
                // b = grad psi_hat(-w)
                let model = self.clone();
                f = f.with_grad_inv(move |w| {
                    model
                        .grad_or_subdiff_psi_hat(vec3::scale(-1.0, *w))
                        .expect("inverse stays in the open ball")
                        .gradient()
                        .expect("smooth variant")
                });
            }
            _ => {}
        }
        // valid whenever psi_hat is convex or concave lsc, not for the
        // saddle (smooth route) or the hard constraint (neither)
        if !matches!(
            self.variant,
            MaterialVariant::AnisotropicMixed { .. } | MaterialVariant::HardSaturation { .. }
        ) {
            let model = self.clone();
            f = f.with_conjugate(move |z| -model.psi_hat(vec3::scale(-1.0, *z)));
        }
        f
    }

    /// phi_hat packaged for the conjugation machinery (evaluator and tag
    /// only; the tables conjugate it numerically).
    pub fn phi_hat_function(&self) -> ScalarFunction3 {
        let tag = match self.variant {
            MaterialVariant::Paramagnet { .. }
            | MaterialVariant::PermanentMagnet { .. }
            | MaterialVariant::SoftSaturation { .. }
            | MaterialVariant::Langevin { .. } => Convexity::Convex,
            MaterialVariant::Diamagnet { .. } => Convexity::Concave,
            MaterialVariant::AnisotropicMixed { .. } => Convexity::Saddle,
            MaterialVariant::HardSaturation { .. } => Convexity::Unknown,
        };
        let model = self.clone();
        let mut f = ScalarFunction3::new(tag, move |z| model.phi_hat(*z));
        if let MaterialVariant::PermanentMagnet { m0 } = self.variant {
            f = f.with_scan_hints(vec![m0]);
        }
        f
    }

    /// psi_hat packaged for the conjugation machinery: evaluator, gradient
    /// data where smooth, closed-form conjugate and convexity tag.
    pub fn psi_hat_function(&self) -> ScalarFunction3 {
        let model = self.clone();
        let mut f = ScalarFunction3::new(self.psi_hat_convexity(), move |z| model.psi_hat(*z));

        let has_grad = matches!(
            self.variant,
            MaterialVariant::Paramagnet { .. }
                | MaterialVariant::Diamagnet { .. }
                | MaterialVariant::AnisotropicMixed { .. }
                | MaterialVariant::Langevin { .. }
        );
        if has_grad {
            let model = self.clone();
            f = f.with_grad(move |z| {
                model
                    .grad_or_subdiff_psi_hat(*z)
                    .ok()
                    .and_then(|s| s.gradient())
                    .expect("smooth variant gradient")
            });
            let model = self.clone();
            f = f.with_grad_inv(move |z| {
                model
                    .grad_psi_hat_inverse(*z)
                    .expect("smooth variant gradient inverse")
            });
        }

        let model = self.clone();
        f = f.with_conjugate(move |z| ExtReal::Finite(model.psi_hat_conjugate(*z)));

        match self.variant {
            MaterialVariant::PermanentMagnet { m0 } => {
                f = f.with_scan_hints(vec![m0]);
            }
            // the sphere indicator's domain is measure-zero: seed the scan
            // with one point on it
            MaterialVariant::HardSaturation { m_s } => {
                f = f.with_scan_hints(vec![[m_s, 0.0, 0.0]]);
            }
            _ => {}
        }
        f
    }
}

// -------------------------------------------------------------------
// Langevin scalar profile and radial inversions
// -------------------------------------------------------------------

/// Radial Langevin density kappa*(x*atanh(x) + ln(1-x^2)/2) with x = r/m_s.
/// Returns None outside the closed ball; the boundary takes the continuous
/// limit kappa*ln(2).
fn langevin_profile(kappa: f64, m_s: f64, r: f64) -> Option<f64> {
    let x = r / m_s;
    if x > 1.0 {
        return None;
    }
    if x >= 1.0 {
        return Some(kappa * std::f64::consts::LN_2);
    }
    Some(kappa * (x * x.atanh() + 0.5 * (1.0 - x * x).ln()))
}

/// Solve (kappa/m_s) * atanh(r/m_s) + a*r = s for r in [0, m_s) with a > 0,
/// s >= 0. Safeguarded Newton on a strictly increasing profile.
fn invert_radial(kappa: f64, m_s: f64, a: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let g = |r: f64| kappa / m_s * (r / m_s).atanh() + a * r;
    let gp = |r: f64| kappa / (m_s * m_s) / (1.0 - (r / m_s) * (r / m_s)) + a;
    // largest radius whose ratio to m_s stays strictly below 1 in f64
    let mut hi = m_s * (1.0 - 1e-15);
    while hi / m_s >= 1.0 {
        hi = f64::from_bits(hi.to_bits() - 1);
    }
    if g(hi) <= s {
        // saturated at f64 resolution near the pole
        return hi;
    }
    let mut lo = 0.0;
    // linearization at the origin as the starting point
    let mut r = (s / (kappa / (m_s * m_s) + a)).min(0.9 * m_s);
    for _ in 0..200 {
        let gr = g(r);
        if (gr - s).abs() <= 1e-15 * (1.0 + s.abs()) {
            return r;
        }
        if gr > s {
            hi = r;
        } else {
            lo = r;
        }
        let mut next = r - (gr - s) / gp(r);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= f64::EPSILON * m_s {
            return next;
        }
        r = next;
    }
    r
}

/// (grad psi_hat)^{-1} for the Langevin variant: radial inversion of
/// (kappa/m_s) * atanh(r/m_s) + mu0 * r = |b|.
fn langevin_grad_psi_hat_inverse(kappa: f64, m_s: f64, mu0: f64, b: [f64; 3]) -> [f64; 3] {
    let bn = vec3::norm(b);
    let r = invert_radial(kappa, m_s, mu0, bn);
    vec3::scale(r, vec3::unit_or_zero(b))
}

/// Smooth conjugate of the Langevin augmented density:
/// psi_hat^diamond(b) = b . m - psi_hat(m) at m = (grad psi_hat)^{-1}(b).
fn langevin_psi_hat_conjugate(kappa: f64, m_s: f64, mu0: f64, b: [f64; 3]) -> f64 {
    let m = langevin_grad_psi_hat_inverse(kappa, m_s, mu0, b);
    let r = vec3::norm(m);
    let psi = langevin_profile(kappa, m_s, r).expect("inverse stays in the open ball")
        + 0.5 * mu0 * r * r;
    vec3::dot(b, m) - psi
}

// -------------------------------------------------------------------
// Hard-saturation conjugate chain (non-involution demonstration)
// -------------------------------------------------------------------

/// Indicator of the sphere |m| = m_s (the original constrained density).
pub fn hard_sat_phi_hat_sat(m_s: f64, m: [f64; 3]) -> ExtReal {
    if (vec3::norm(m) - m_s).abs() <= DOMAIN_TOL * m_s.max(1.0) {
        ExtReal::Finite(0.0)
    } else {
        ExtReal::PosInf
    }
}

/// Indicator of the ball |m| <= m_s (the convex hull of the sphere
/// indicator; identical to the soft-saturation material density).
pub fn hard_sat_phi_hat_c(m_s: f64, m: [f64; 3]) -> ExtReal {
    if vec3::norm(m) <= m_s * (1.0 + DOMAIN_TOL) {
        ExtReal::Finite(0.0)
    } else {
        ExtReal::PosInf
    }
}

/// Density recovered by pushing the formal conjugate of the sphere model
/// back through the reverse transformation:
/// (mu0/2)(m_s^2 - |m|^2) on the ball, +inf outside. Matches neither the
/// sphere indicator nor its convex hull.
pub fn hard_sat_phi_hat_sat_prime(mu0: f64, m_s: f64, m: [f64; 3]) -> ExtReal {
    let n2 = vec3::norm_sq(m);
    if n2.sqrt() <= m_s * (1.0 + DOMAIN_TOL) {
        ExtReal::Finite(0.5 * mu0 * (m_s * m_s - n2))
    } else {
        ExtReal::PosInf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn para2() -> MaterialModel {
        MaterialModel::paramagnet(1.0, 2.0).unwrap()
    }

    fn soft1() -> MaterialModel {
        MaterialModel::soft_saturation(1.0, 1.0).unwrap()
    }

    fn axes() -> [[f64; 3]; 3] {
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    }

    #[test]
    fn construction_invariants() {
        assert!(MaterialModel::paramagnet(1.0, 0.5).is_err());
        assert!(MaterialModel::diamagnet(1.0, 2.0).is_err());
        assert!(MaterialModel::anisotropic_mixed(1.0, 2.0, 0.5, axes()).is_ok());
        assert!(MaterialModel::anisotropic_mixed(1.0, 0.5, 2.0, axes()).is_err());
        let skew = [[1.0, 0.0, 0.0], [0.1, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(MaterialModel::anisotropic_mixed(1.0, 2.0, 0.5, skew).is_err());
        assert!(MaterialModel::soft_saturation(1.0, 0.0).is_err());
        assert!(MaterialModel::langevin(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn classification_table() {
        use Convexity::*;
        let frame = axes();
        let cases = [
            (para2(), Concave, Convex),
            (MaterialModel::diamagnet(1.0, 0.5).unwrap(), Convex, Concave),
            (
                MaterialModel::anisotropic_mixed(1.0, 2.0, 0.5, frame).unwrap(),
                Saddle,
                Saddle,
            ),
            (
                MaterialModel::permanent_magnet(1.0, [0.0, 0.0, 1.0]).unwrap(),
                Concave,
                Convex,
            ),
            (soft1(), Concave, Convex),
            (MaterialModel::langevin(1.0, 1.0, 1.0).unwrap(), Concave, Convex),
            (
                MaterialModel::hard_saturation(1.0, 1.0).unwrap(),
                Concave,
                Unknown,
            ),
        ];
        for (model, phi_c, psi_c) in cases {
            assert_eq!(model.phi_convexity(), phi_c, "{}", model.variant_name());
            assert_eq!(model.psi_hat_convexity(), psi_c, "{}", model.variant_name());
        }
    }

    #[test]
    fn phi_soft_saturation_branches() {
        let m = soft1();
        assert!((m.phi([0.5, 0.0, 0.0]) - (-0.125)).abs() < 1e-15);
        assert!((m.phi([2.0, 0.0, 0.0]) - (-1.5)).abs() < 1e-15);
        // branch continuity at |b| = mu0 m_s
        let b = [1.0, 0.0, 0.0];
        let inner = -vec3::norm_sq(b) / 2.0;
        let outer = -vec3::norm(b) + 0.5;
        assert!((inner - outer).abs() < 1e-15);
        assert!((m.phi(b) - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn phi_paramagnet_and_hard() {
        assert!((para2().phi([1.0, 0.0, 0.0]) - (-0.25)).abs() < 1e-15);
        let h = MaterialModel::hard_saturation(1.0, 1.0).unwrap();
        assert!((h.phi([2.0, 0.0, 0.0]) - (-1.5)).abs() < 1e-15);
    }

    #[test]
    fn grad_phi_examples() {
        let p = para2();
        let g = p.grad_phi([1.0, 0.0, 0.0]).unwrap();
        assert!(vec3::dist(vec3::scale(-1.0, g), [0.5, 0.0, 0.0]) < 1e-15);

        let s = soft1();
        let inner = s.grad_phi([0.5, 0.0, 0.0]).unwrap();
        assert!(vec3::dist(vec3::scale(-1.0, inner), [0.5, 0.0, 0.0]) < 1e-15);
        let outer = s.grad_phi([2.0, 0.0, 0.0]).unwrap();
        assert!(vec3::dist(vec3::scale(-1.0, outer), [1.0, 0.0, 0.0]) < 1e-15);

        let pm = MaterialModel::permanent_magnet(1.0, [0.0, 0.0, 1.0]).unwrap();
        for b in [[0.0; 3], [1.0, 2.0, 3.0], [-4.0, 0.0, 0.1]] {
            let g = pm.grad_phi(b).unwrap();
            assert!(vec3::dist(vec3::scale(-1.0, g), [0.0, 0.0, 1.0]) < 1e-15);
        }

        let h = MaterialModel::hard_saturation(1.0, 1.0).unwrap();
        assert!(matches!(
            h.grad_phi([0.0; 3]),
            Err(Error::NotDifferentiable { .. })
        ));
    }

    #[test]
    fn psi_hat_values() {
        assert_eq!(
            para2().psi_hat([0.5, 0.0, 0.0]),
            ExtReal::Finite(0.25),
            "paramagnet augmented density is |m|^2 at mu=2, mu0=1"
        );
        assert_eq!(soft1().psi_hat([2.0, 0.0, 0.0]), ExtReal::PosInf);
        let lan = MaterialModel::langevin(1.0, 1.0, 1.0).unwrap();
        assert_eq!(lan.psi_hat([0.0; 3]), ExtReal::Finite(0.0));
        // Permanent magnet: psi_hat is the indicator of {m0} normalized to 0,
        // which makes phi = -b.m0 its exact negative conjugate and gives both
        // models the energy -(mu0/2)|m0|^2*vol at the critical state.
        let pm = MaterialModel::permanent_magnet(1.0, [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(pm.psi_hat([0.0, 0.0, 1.0]), ExtReal::Finite(0.0));
        assert_eq!(pm.psi_hat([0.0, 0.0, 1.1]), ExtReal::PosInf);
        assert_eq!(pm.phi_hat([0.0, 0.0, 1.0]), ExtReal::Finite(-0.5));
    }

    #[test]
    fn grad_or_subdiff_examples() {
        let lan = MaterialModel::langevin(1.0, 1.0, 1.0).unwrap();
        match lan.grad_or_subdiff_psi_hat([0.0; 3]).unwrap() {
            PsiHatSlope::Gradient(g) => assert!(vec3::norm(g) == 0.0),
            other => panic!("expected gradient, got {other:?}"),
        }

        match para2().grad_or_subdiff_psi_hat([0.5, 0.0, 0.0]).unwrap() {
            PsiHatSlope::Gradient(g) => assert!(vec3::dist(g, [1.0, 0.0, 0.0]) < 1e-15),
            other => panic!("expected gradient, got {other:?}"),
        }

        let slope = soft1().grad_or_subdiff_psi_hat([1.0, 0.0, 0.0]).unwrap();
        assert!(slope.contains([1.0, 0.0, 0.0], 1e-12));
        assert!(slope.contains([2.0, 0.0, 0.0], 1e-12));
        assert!(!slope.contains([0.5, 0.0, 0.0], 1e-6));
        assert!(!slope.contains([1.0, 0.5, 0.0], 1e-6));

        assert!(soft1().grad_or_subdiff_psi_hat([1.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn prox_examples() {
        let pm = MaterialModel::permanent_magnet(1.0, [0.0, 0.0, 1.0]).unwrap();
        for v in [[0.0; 3], [9.0, -3.0, 2.0]] {
            assert!(vec3::dist(pm.prox_psi_hat(0.7, v).unwrap(), [0.0, 0.0, 1.0]) < 1e-15);
        }
        let s = soft1().prox_psi_hat(1.0, [4.0, 0.0, 0.0]).unwrap();
        assert!(vec3::dist(s, [1.0, 0.0, 0.0]) < 1e-15);
        let p = para2().prox_psi_hat(1.0, [3.0, 0.0, 0.0]).unwrap();
        assert!(vec3::dist(p, [1.0, 0.0, 0.0]) < 1e-15);
        assert!(matches!(
            MaterialModel::diamagnet(1.0, 0.5)
                .unwrap()
                .prox_psi_hat(1.0, [1.0, 0.0, 0.0]),
            Err(Error::ProxNonConvex { .. })
        ));
        assert!(MaterialModel::hard_saturation(1.0, 1.0)
            .unwrap()
            .prox_psi_hat(1.0, [1.0, 0.0, 0.0])
            .is_err());
    }

    /// Dense 1-D scan oracle for the radial prox problem.
    fn radial_prox_scan(model: &MaterialModel, step: f64, vn: f64, upper: f64) -> f64 {
        let n = 400_001;
        let mut best_t = 0.0;
        let mut best = f64::INFINITY;
        for i in 0..n {
            let t = upper * i as f64 / (n - 1) as f64;
            let psi = match model.psi_hat([t, 0.0, 0.0]) {
                ExtReal::Finite(v) => v,
                _ => continue,
            };
            let obj = psi + (t - vn) * (t - vn) / (2.0 * step);
            if obj < best {
                best = obj;
                best_t = t;
            }
        }
        best_t
    }

    #[test]
    fn prox_matches_dense_scan() {
        let cases = [
            (soft1(), 1.0, 4.0),
            (soft1(), 0.3, 0.7),
            (para2(), 1.0, 3.0),
            (para2(), 0.2, 5.0),
            (MaterialModel::langevin(1.0, 0.5, 1.0).unwrap(), 1.0, 2.5),
            (MaterialModel::langevin(1.0, 2.0, 1.5).unwrap(), 0.4, 3.0),
        ];
        for (model, step, vn) in cases {
            let upper = 2.0 * vn + 2.0;
            let t_scan = radial_prox_scan(&model, step, vn, upper);
            let p = model.prox_psi_hat(step, [vn, 0.0, 0.0]).unwrap();
            assert!(
                (vec3::norm(p) - t_scan).abs() <= 2.0 * upper / 400_000.0,
                "{}: prox {} vs scan {}",
                model.variant_name(),
                vec3::norm(p),
                t_scan
            );
        }
    }

    #[test]
    fn phi_hat_chain_values() {
        let sp0 = hard_sat_phi_hat_sat_prime(1.0, 1.0, [0.0; 3]);
        assert_eq!(sp0, ExtReal::Finite(0.5));
        assert_eq!(hard_sat_phi_hat_c(1.0, [0.5, 0.0, 0.0]), ExtReal::Finite(0.0));
        assert_eq!(hard_sat_phi_hat_c(1.0, [2.0, 0.0, 0.0]), ExtReal::PosInf);
        assert_eq!(hard_sat_phi_hat_sat(1.0, [1.0, 0.0, 0.0]), ExtReal::Finite(0.0));
        assert_eq!(hard_sat_phi_hat_sat(1.0, [0.5, 0.0, 0.0]), ExtReal::PosInf);
    }

    #[test]
    fn langevin_zero_temperature_limit() {
        // pointwise monotone decrease of psi_hat toward the soft-saturation
        // value (mu0/2)|m|^2 on the open ball
        let m = [0.9, 0.0, 0.0];
        let target = 0.5 * 0.81;
        let mut last = f64::INFINITY;
        for kappa in [1e-1, 1e-2, 1e-3] {
            let lan = MaterialModel::langevin(1.0, kappa, 1.0).unwrap();
            let v = lan.psi_hat(m).finite().unwrap();
            assert!(v > target && v < last, "kappa={kappa}: {v}");
            last = v;
        }
        assert!((last - target).abs() < 1e-3 * 0.5);
    }

    #[test]
    fn langevin_curie_limit_quadratic() {
        let kappa = 0.7;
        let m_s = 2.0;
        let lan = MaterialModel::langevin(1.0, kappa, m_s).unwrap();
        for t in [0.01, 0.05, 0.1] {
            let m = [t * m_s, 0.0, 0.0];
            let quad = kappa / (2.0 * m_s * m_s) * vec3::norm_sq(m);
            let got = lan.phi_hat(m).finite().unwrap();
            assert!(
                (got - quad).abs() <= 0.02 * quad,
                "t={t}: {got} vs quadratic {quad}"
            );
        }
    }

    #[test]
    fn diamagnet_phi_hat_unbounded_below() {
        let dia = MaterialModel::diamagnet(1.0, 0.5).unwrap();
        let m = [1.0, 0.0, 0.0];
        let f1 = dia.phi_hat(m).finite().unwrap();
        let f10 = dia.phi_hat(vec3::scale(10.0, m)).finite().unwrap();
        assert!(f1 < 0.0);
        assert!((f10 / f1 - 100.0).abs() < 1e-9, "quadratic blow-down: {f10} / {f1}");
    }

    #[test]
    fn anisotropic_with_rotated_frame() {
        let s = 1.0 / 2f64.sqrt();
        let frame = [[s, s, 0.0], [-s, s, 0.0], [0.0, 0.0, 1.0]];
        let model = MaterialModel::anisotropic_mixed(1.0, 2.0, 0.5, frame).unwrap();
        // constitutive inverse pair in the rotated frame
        for b in [[1.0, 0.0, 0.0], [0.3, -0.7, 0.4], [0.0, 2.0, -1.0]] {
            let m = vec3::scale(-1.0, model.grad_phi(b).unwrap());
            let back = model.grad_or_subdiff_psi_hat(m).unwrap().gradient().unwrap();
            assert!(vec3::dist(back, b) <= 1e-12 * (1.0 + vec3::norm(b)));
            let inv = model.grad_psi_hat_inverse(b).unwrap();
            let fwd = model.grad_or_subdiff_psi_hat(inv).unwrap().gradient().unwrap();
            assert!(vec3::dist(fwd, b) <= 1e-12 * (1.0 + vec3::norm(b)));
        }
        // along the paramagnetic axis e1 = (s, s, 0) the response matches the
        // isotropic paramagnet formula
        let b = [s, s, 0.0];
        let m = vec3::scale(-1.0, model.grad_phi(b).unwrap());
        let iso = MaterialModel::paramagnet(1.0, 2.0).unwrap();
        let m_iso = vec3::scale(-1.0, iso.grad_phi(b).unwrap());
        assert!(vec3::dist(m, m_iso) <= 1e-14);
        // smooth conjugate against the Newton oracle in the rotated frame
        let f = model.psi_hat_function();
        for z in [[0.8, 0.1, -0.4], [-0.2, 0.9, 0.3]] {
            let smooth = crate::legendre::smooth_conjugate(&f, z).unwrap();
            let newton = crate::legendre::numeric_smooth_conjugate(&f, z).unwrap();
            assert!((smooth - newton).abs() <= 1e-8 * (1.0 + smooth.abs()));
        }
    }

    #[test]
    fn phi_conjugate_closed_form_matches_smooth_route() {
        // phi^diamond(z) = -psi_hat(-z) against the gradient-inversion formula
        for model in [
            MaterialModel::paramagnet(1.0, 2.0).unwrap(),
            MaterialModel::diamagnet(1.0, 0.5).unwrap(),
            MaterialModel::langevin(1.0, 0.9, 1.1).unwrap(),
        ] {
            let f = model.phi_function();
            for z in [[0.4, 0.0, 0.0], [-0.3, 0.2, 0.5], [0.0, 0.0, -0.8]] {
                let closed = f.closed_conjugate(z).unwrap().finite().unwrap();
                let smooth = crate::legendre::smooth_conjugate(&f, z).unwrap();
                assert!(
                    (closed - smooth).abs() <= 1e-10 * (1.0 + closed.abs()),
                    "{}: {closed} vs {smooth} at {z:?}",
                    model.variant_name()
                );
            }
        }
    }

    #[test]
    fn langevin_phi_matches_legendre_smooth_transform() {
        let lan = MaterialModel::langevin(1.0, 0.8, 1.3).unwrap();
        let f = lan.psi_hat_function();
        for b in [[0.3, 0.0, 0.0], [1.0, -2.0, 0.5], [0.0, 4.0, 1.0]] {
            let via_transform = -crate::legendre::smooth_conjugate(&f, b).unwrap();
            assert!((lan.phi(b) - via_transform).abs() <= 1e-12 * (1.0 + via_transform.abs()));
        }
    }

    proptest! {
        /// Constitutive inverse pair on the smooth variants:
        /// grad_psi_hat(-grad_phi(b)) returns b.
        #[test]
        fn constitutive_inverse_pair(
            bx in -3.0f64..3.0, by in -3.0f64..3.0, bz in -3.0f64..3.0,
            which in 0usize..4
        ) {
            let model = match which {
                0 => para2(),
                1 => MaterialModel::diamagnet(1.0, 0.5).unwrap(),
                2 => MaterialModel::anisotropic_mixed(1.0, 2.0, 0.5, axes()).unwrap(),
                _ => MaterialModel::langevin(1.0, 1.0, 1.0).unwrap(),
            };
            let b = [bx, by, bz];
            let m = vec3::scale(-1.0, model.grad_phi(b).unwrap());
            let back = model
                .grad_or_subdiff_psi_hat(m)
                .unwrap()
                .gradient()
                .unwrap();
            prop_assert!(vec3::dist(back, b) <= 1e-9 * (1.0 + vec3::norm(b)));
        }

        /// Midpoint convexity of b -> phi(b) + |b - b_a|^2/(2 mu0) for every
        /// variant with convex psi_hat (strong-convexity transfer).
        #[test]
        fn b_integrand_midpoint_convex(
            ax in -2.0f64..2.0, ay in -2.0f64..2.0,
            bx in -2.0f64..2.0, by in -2.0f64..2.0, bz in -2.0f64..2.0,
            which in 0usize..4
        ) {
            let model = match which {
                0 => para2(),
                1 => soft1(),
                2 => MaterialModel::langevin(1.0, 1.0, 1.0).unwrap(),
                _ => MaterialModel::permanent_magnet(1.0, [0.0, 0.0, 1.0]).unwrap(),
            };
            let b_a = [ax, ay, 0.3];
            let b1 = [bx, by, bz];
            let b2 = [ay, bx, ax];
            let integrand = |b: [f64; 3]| {
                model.phi(b) + vec3::norm_sq(vec3::sub(b, b_a)) / (2.0 * model.mu0())
            };
            let mid = integrand(vec3::scale(0.5, vec3::add(b1, b2)));
            let avg = 0.5 * (integrand(b1) + integrand(b2));
            prop_assert!(mid <= avg + 1e-10);
        }

        /// Prox optimality against a coarse radial scan for the Langevin
        /// variant at random parameters.
        #[test]
        fn langevin_prox_first_order(
            kappa in 0.05f64..3.0, m_s in 0.3f64..2.0,
            step in 0.05f64..2.0, vn in 0.0f64..5.0
        ) {
            let lan = MaterialModel::langevin(1.0, kappa, m_s).unwrap();
            let p = lan.prox_psi_hat(step, [vn, 0.0, 0.0]).unwrap();
            let t = vec3::norm(p);
            prop_assert!(t < m_s);
            // optimality condition g(t) + (t - vn)/step = 0, measured in
            // t-units: near the saturation pole the slope of g blows up and
            // one ulp of t moves g by a visible amount, so divide by g'
            let g = kappa / m_s * (t / m_s).atanh() + t + (t - vn) / step;
            let gp = kappa / (m_s * m_s) / (1.0 - (t / m_s) * (t / m_s)) + 1.0 + 1.0 / step;
            prop_assert!(
                (g / gp).abs() <= 1e-9 * m_s,
                "t-space residual {}",
                g / gp
            );
        }
    }
}
