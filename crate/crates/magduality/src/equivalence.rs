//! Transfer maps between the two formulations and critical-state
//! certification.
//!
//! A triplet (m, h_s, b) is a critical state when the Maxwell constraints
//! hold (curl h_s = 0, div b = 0), the induction relation
//! b = b_a + mu0(chi m + h_s) holds, and m and b are constitutively dual.
//! At such states the two model energies coincide; away from them they
//! generally do not, and [`certify`] reports the gap either way.
//!
//! Duality is checked in its b-side form m = -grad phi(b), which stays
//! single-valued where the m-side slope may be a set (the saturation
//! boundary); the two forms are equivalent. The pointwise Fenchel identity
//! psi_hat(m) + psi_hat^d(b) = m.b is evaluated as an additional
//! per-node diagnostic.

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec, Region, ScalarField, VectorField};
use crate::helmholtz::{recover_potential_with_tol, stray_field};
use crate::legendre::fenchel_residual;
use crate::materials::MaterialModel;
use crate::solvers::{solve_b, solve_mh, SolveReport, SolveStatus, SolverConfig};
use crate::vec3;

/// A full magnetic state: magnetization (zero outside the body), stray
/// field, induction, and the mean-zero scalar potential of the stray field.
#[derive(Clone, Debug)]
pub struct MagneticState {
    pub m: VectorField,
    pub h_s: VectorField,
    pub b: VectorField,
    pub phi: ScalarField,
}

impl MagneticState {
    pub fn zero(spec: GridSpec) -> Self {
        MagneticState {
            m: VectorField::zeros(spec),
            h_s: VectorField::zeros(spec),
            b: VectorField::zeros(spec),
            phi: ScalarField::zeros(spec),
        }
    }

    /// Assemble from the three fields, recovering the potential from h_s
    /// (which must be curl-free up to the given tolerance).
    pub fn assemble(
        m: VectorField,
        h_s: VectorField,
        b: VectorField,
        curl_tol: f64,
    ) -> Result<Self> {
        m.spec().check_same(h_s.spec())?;
        m.spec().check_same(b.spec())?;
        let phi = recover_potential_with_tol(&h_s, curl_tol)?;
        Ok(MagneticState { m, h_s, b, phi })
    }

    pub fn spec(&self) -> &GridSpec {
        self.m.spec()
    }
}

/// Residual tolerances for certification.
#[derive(Clone, Copy, Debug)]
pub struct CertifyTolerances {
    pub curl_h: f64,
    pub div_b: f64,
    pub induction_gap: f64,
    pub duality: f64,
}

impl Default for CertifyTolerances {
    fn default() -> Self {
        CertifyTolerances {
            curl_h: 1e-8,
            div_b: 1e-8,
            induction_gap: 1e-6,
            duality: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EquivalenceVerdict {
    pub is_critical_state: bool,
    /// (curl_h, div_b, induction_gap). The first two are relative L2
    /// residuals; the induction gap is the worst node of the pointwise
    /// relation b = b_a + mu0(chi m + h_s), relative to the field scale.
    pub maxwell_residuals: (f64, f64, f64),
    /// b-side constitutive gap ||m + grad phi(b)|| over the body, relative.
    pub duality_residual: f64,
    /// Max over body nodes of the pointwise Fenchel identity gap.
    pub fenchel_residual_field: f64,
    pub energy_b: f64,
    pub energy_mh: f64,
    pub energy_gap: f64,
}

/// Physical induction relation: b = b_a + mu0 (chi m + h_s). The caller
/// supplies m already extended by zero outside the body (solver outputs
/// and [`b_to_mh`] results are).
pub fn mh_to_b(m: &VectorField, h_s: &VectorField, b_a: &VectorField) -> Result<VectorField> {
    m.spec().check_same(h_s.spec())?;
    m.spec().check_same(b_a.spec())?;
    let mu0 = m.spec().mu0();
    b_a.try_add(&m.try_add(h_s)?.scaled(mu0))
}

/// Constitutive transfer from the single-field model: m = -grad phi(b) on
/// the body (zero outside), h_s = -P[chi m]. Errors at set-valued points
/// (hard saturation at b = 0), naming the node.
pub fn b_to_mh(
    b: &VectorField,
    model: &MaterialModel,
    body: &Region,
) -> Result<(VectorField, VectorField)> {
    b.spec().check_same(body.spec())?;
    let mut m = VectorField::zeros(*b.spec());
    for (i, out) in m.data_mut().iter_mut().enumerate() {
        if body.contains(i) {
            let g = model.grad_phi(b.data()[i]).map_err(|e| match e {
                Error::NotDifferentiable { variant, at } => Error::SetValued {
                    node: i,
                    reason: format!("{variant} has no single-valued gradient at {at:?}"),
                },
                other => other,
            })?;
            *out = vec3::scale(-1.0, g);
        }
    }
    let h_s = stray_field(&m, body)?;
    Ok((m, h_s))
}

/// The alternative stray-field definition -chi m + (b - b_a)/mu0. Guarantees
/// the induction relation by construction but is curl-free only at critical
/// points; exposed as a diagnostic, the projection definition is the one the
/// transfers use.
pub fn alternative_stray_field(
    b: &VectorField,
    b_a: &VectorField,
    m: &VectorField,
    body: &Region,
) -> Result<VectorField> {
    b.spec().check_same(b_a.spec())?;
    b.spec().check_same(m.spec())?;
    let mu0 = b.spec().mu0();
    let chi_m = m.masked(body)?;
    b.try_sub(b_a)?.scaled(1.0 / mu0).try_sub(&chi_m)
}

/// Evaluate every residual of the triplet and the energies of both models.
/// `is_critical_state` is true iff the Maxwell residuals, induction gap and
/// duality residual all pass; the energy gap is reported unconditionally.
pub fn certify(
    state: &MagneticState,
    model: &MaterialModel,
    body: &Region,
    b_a: &VectorField,
    tolerances: &CertifyTolerances,
) -> Result<EquivalenceVerdict> {
    let spec = *state.spec();
    spec.check_same(body.spec())?;
    spec.check_same(b_a.spec())?;

    let curl_h = grid::curl(&state.h_s).norm() / (1.0 + state.h_s.norm());
    let div_b = grid::divergence(&state.b).norm() / (1.0 + state.b.norm());

    // the induction relation is pointwise, so measure its worst node
    let induced = mh_to_b(&state.m.masked(body)?, &state.h_s, b_a)?;
    let induction_gap =
        state.b.try_sub(&induced)?.max_abs() / (1.0 + state.b.max_abs());

    // b-side constitutive form: m = -grad phi(b) on the body
    let mut duality_num = 0.0;
    let mut fenchel_worst = 0.0_f64;
    let w = spec.cell_volume();
    let psi_fn = model.psi_hat_function();
    for i in 0..spec.node_count() {
        if !body.contains(i) {
            continue;
        }
        let bv = state.b.data()[i];
        let mv = state.m.data()[i];
        let g = model.grad_phi(bv)?;
        duality_num += vec3::norm_sq(vec3::add(mv, g)) * w;
        match fenchel_residual(&psi_fn, mv, bv) {
            Ok(r) => fenchel_worst = fenchel_worst.max(r.abs()),
            Err(Error::NonFinite(_)) => fenchel_worst = f64::INFINITY,
            Err(e) => return Err(e),
        }
    }
    let m_norm = state.m.masked(body)?.norm();
    let duality_residual = duality_num.sqrt() / (1.0 + m_norm);

    let energy_b = crate::solvers::energy_b(&state.b, b_a, model, body)?;
    let energy_mh = crate::solvers::energy_mh(&state.m, &state.h_s, b_a, model, body)?;
    let energy_gap = (energy_b - energy_mh).abs();

    let is_critical_state = curl_h <= tolerances.curl_h
        && div_b <= tolerances.div_b
        && induction_gap <= tolerances.induction_gap
        && duality_residual <= tolerances.duality;

    Ok(EquivalenceVerdict {
        is_critical_state,
        maxwell_residuals: (curl_h, div_b, induction_gap),
        duality_residual,
        fenchel_residual_field: fenchel_worst,
        energy_b,
        energy_mh,
        energy_gap,
    })
}

/// One direction of a roundtrip: the verdict of the transferred state, the
/// relative deviation between the solved field and its double transfer, and
/// the model energy gap.
#[derive(Clone, Debug)]
pub struct TransferRoundtrip {
    pub verdict: EquivalenceVerdict,
    pub field_deviation: f64,
    pub energy_gap: f64,
}

/// Outcome of [`roundtrip_check`]: solve in each admissible formulation,
/// transfer, certify, transfer back.
#[derive(Clone, Debug)]
pub struct RoundtripReport {
    pub solve_b_report: Option<SolveReport>,
    pub solve_mh_report: Option<SolveReport>,
    /// From the b-solution: b -> (m, h_s) -> b.
    pub b_route: Option<TransferRoundtrip>,
    /// From the mh-solution: m -> b -> m.
    pub mh_route: Option<TransferRoundtrip>,
    /// Relative deviation between the inductions found by the two solvers.
    pub cross_field_deviation: Option<f64>,
    /// |inf E - inf E_hat| relative: the min-min swap gap.
    pub minmin_gap: Option<f64>,
}

/// Solve whichever formulations the variant admits, transfer each solution
/// to the other formulation, certify the triplets, and measure roundtrip
/// deviations and energy gaps.
pub fn roundtrip_check(
    model: &MaterialModel,
    body: &Region,
    b_a: &VectorField,
    config: &SolverConfig,
) -> Result<RoundtripReport> {
    let tolerances = CertifyTolerances::default();
    let mut report = RoundtripReport {
        solve_b_report: None,
        solve_mh_report: None,
        b_route: None,
        mh_route: None,
        cross_field_deviation: None,
        minmin_gap: None,
    };

    {
        let rb = solve_b(model, body, b_a, config)?;
        if rb.status == SolveStatus::Converged {
            let state = &rb.state;
            let verdict = certify(state, model, body, b_a, &tolerances)?;
            // transfer back: the state's (m, h_s) came from b; reassemble b
            let back = mh_to_b(&state.m, &state.h_s, b_a)?;
            let field_deviation =
                back.try_sub(&state.b)?.norm() / (1.0 + state.b.norm());
            report.b_route = Some(TransferRoundtrip {
                energy_gap: verdict.energy_gap,
                verdict,
                field_deviation,
            });
        }
        report.solve_b_report = Some(rb);
    }

    {
        let rm = solve_mh(model, body, b_a, config)?;
        if rm.status == SolveStatus::Converged {
            let state = &rm.state;
            let verdict = certify(state, model, body, b_a, &tolerances)?;
            // transfer back: m -> b happened in the solver; now b -> m
            let (m_back, _) = b_to_mh(&state.b, model, body)?;
            let field_deviation =
                m_back.try_sub(&state.m)?.norm() / (1.0 + state.m.norm());
            report.mh_route = Some(TransferRoundtrip {
                energy_gap: verdict.energy_gap,
                verdict,
                field_deviation,
            });
        }
        report.solve_mh_report = Some(rm);
    }

    if let (Some(rb), Some(rm)) = (&report.solve_b_report, &report.solve_mh_report) {
        if rb.status == SolveStatus::Converged && rm.status == SolveStatus::Converged {
            report.cross_field_deviation =
                Some(rb.state.b.try_sub(&rm.state.b)?.norm() / (1.0 + rb.state.b.norm()));
            report.minmin_gap =
                Some((rb.energy_b - rm.energy_mh).abs() / (1.0 + rb.energy_b.abs()));
        }
    }

    Ok(report)
}
