//! Conjugate transforms and their verification machinery.
//!
//! Three routes to a conjugate value:
//! - [`smooth_conjugate`]: the gradient-inversion formula
//!   `f^d(z*) = z* . (grad f)^{-1}(z*) - f((grad f)^{-1}(z*))`, valid whenever
//!   the gradient is invertible (convexity not required);
//! - [`diamond_transform`]: the convex/concave dispatch, `f*` for convex f
//!   and `-(-f)*(-z*)` for concave f;
//! - [`numeric_conjugate`]: the brute-force sup oracle every closed form is
//!   checked against. A coarse scan locates the sup and a derivative-free
//!   local refinement polishes it; radially symmetric conjugands (detected
//!   numerically; every shipped one is radial) get an exact 1-D treatment
//!   along the dual direction.
//!
//! [`fenchel_residual`] measures the duality gap `f(z) + f^d(z*) - z.z*`
//! of a candidate pair, and [`involution_check`] measures how far
//! `(f^d)^d` is from `f`: zero for convex lsc or smooth-invertible
//! functions, infinite for the hard-saturation density.

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convexity {
    Convex,
    Concave,
    Saddle,
    Unknown,
}

type EvalFn = dyn Fn(&[f64; 3]) -> ExtReal + Send + Sync;
type VecFn = dyn Fn(&[f64; 3]) -> [f64; 3] + Send + Sync;

/// A pointwise density R^3 -> R u {+-inf} with whatever analytic structure
/// its owner can provide: gradient, gradient inverse, closed-form conjugate,
/// convexity tag, and scan hints (exact points of measure-zero effective
/// domains, so the sup oracle can see them).
pub struct ScalarFunction3 {
    eval: Box<EvalFn>,
    grad: Option<Box<VecFn>>,
    grad_inv: Option<Box<VecFn>>,
    conjugate: Option<Box<EvalFn>>,
    convexity: Convexity,
    scan_hints: Vec<[f64; 3]>,
}

impl ScalarFunction3 {
    pub fn new(
        convexity: Convexity,
        eval: impl Fn(&[f64; 3]) -> ExtReal + Send + Sync + 'static,
    ) -> Self {
        ScalarFunction3 {
            eval: Box::new(eval),
            grad: None,
            grad_inv: None,
            conjugate: None,
            convexity,
            scan_hints: Vec::new(),
        }
    }

    pub fn with_grad(mut self, g: impl Fn(&[f64; 3]) -> [f64; 3] + Send + Sync + 'static) -> Self {
        self.grad = Some(Box::new(g));
        self
    }

    pub fn with_grad_inv(
        mut self,
        gi: impl Fn(&[f64; 3]) -> [f64; 3] + Send + Sync + 'static,
    ) -> Self {
        self.grad_inv = Some(Box::new(gi));
        self
    }

    pub fn with_conjugate(
        mut self,
        c: impl Fn(&[f64; 3]) -> ExtReal + Send + Sync + 'static,
    ) -> Self {
        self.conjugate = Some(Box::new(c));
        self
    }

    pub fn with_scan_hints(mut self, hints: Vec<[f64; 3]>) -> Self {
        self.scan_hints = hints;
        self
    }

    pub fn eval(&self, z: [f64; 3]) -> ExtReal {
        (self.eval)(&z)
    }

    pub fn grad(&self, z: [f64; 3]) -> Option<[f64; 3]> {
        self.grad.as_ref().map(|g| g(&z))
    }

    pub fn grad_inv(&self, z: [f64; 3]) -> Option<[f64; 3]> {
        self.grad_inv.as_ref().map(|g| g(&z))
    }

    pub fn closed_conjugate(&self, z: [f64; 3]) -> Option<ExtReal> {
        self.conjugate.as_ref().map(|c| c(&z))
    }

    pub fn convexity(&self) -> Convexity {
        self.convexity
    }

    pub fn scan_hints(&self) -> &[[f64; 3]] {
        &self.scan_hints
    }

    pub fn has_grad_inv(&self) -> bool {
        self.grad_inv.is_some()
    }

    /// Check the construction invariant grad(grad_inv(z)) = z on the given
    /// probes.
    pub fn check_gradient_inverse(&self, probes: &[[f64; 3]], tol: f64) -> Result<()> {
        let (Some(g), Some(gi)) = (self.grad.as_ref(), self.grad_inv.as_ref()) else {
            return Err(Error::MissingGradientInverse);
        };
        for z in probes {
            let back = g(&gi(z));
            let err = vec3::dist(back, *z);
            if err > tol * (1.0 + vec3::norm(*z)) {
                return Err(Error::InversionFailed {
                    at: *z,
                    residual: err,
                });
            }
        }
        Ok(())
    }
}

/// Smooth transform: `z* . ginv(z*) - f(ginv(z*))`. Errors when no gradient
/// inverse is attached.
pub fn smooth_conjugate(f: &ScalarFunction3, z_star: [f64; 3]) -> Result<f64> {
    let Some(z) = f.grad_inv(z_star) else {
        return Err(Error::MissingGradientInverse);
    };
    let fz = f
        .eval(z)
        .finite()
        .ok_or(Error::NonFinite("smooth conjugate evaluation"))?;
    Ok(vec3::dot(z_star, z) - fz)
}

// -------------------------------------------------------------------
// Brute-force sup oracle
// -------------------------------------------------------------------

const SCAN_GRID: usize = 33;
const RADIAL_GRID: usize = 8193;

struct Best {
    point: [f64; 3],
    value: f64,
    from_hint: bool,
}

/// Tie-break toward the origin so flat objectives (affine conjugands at
/// their dual slope) settle on an interior point rather than a cube corner.
fn improves(candidate: f64, at: [f64; 3], best: &Option<Best>) -> bool {
    match best {
        None => true,
        Some(b) => {
            let tol = 1e-12 * (1.0 + b.value.abs());
            candidate > b.value + tol
                || ((candidate - b.value).abs() <= tol && vec3::norm(at) + 1e-15 < vec3::norm(b.point))
        }
    }
}

fn consider(
    eval: &dyn Fn([f64; 3]) -> ExtReal,
    z_star: [f64; 3],
    at: [f64; 3],
    from_hint: bool,
    best: &mut Option<Best>,
) {
    if let ExtReal::Finite(v) = eval(at) {
        let q = vec3::dot(z_star, at) - v;
        if improves(q, at, best) {
            *best = Some(Best {
                point: at,
                value: q,
                from_hint,
            });
        }
    }
}

/// The 26 neighbor directions of the compass refinement.
fn compass_directions() -> Vec<[f64; 3]> {
    let mut dirs = Vec::with_capacity(26);
    for dx in -1i32..=1 {
        for dy in -1i32..=1 {
            for dz in -1i32..=1 {
                if dx == 0 && dy == 0 && dz == 0 {
                    continue;
                }
                let d = [dx as f64, dy as f64, dz as f64];
                dirs.push(vec3::scale(1.0 / vec3::norm(d), d));
            }
        }
    }
    dirs
}

/// Numeric Fenchel conjugate sup_z (z*.z - f(z)) restricted to the cube of
/// half-width `radius`. Independent oracle for every closed-form conjugate.
///
/// Errors if the sup runs into the scan boundary (radius too small) or no
/// finite sample exists.
pub fn numeric_conjugate(f: &ScalarFunction3, z_star: [f64; 3], radius: f64) -> Result<f64> {
    numeric_conjugate_raw(&|z| f.eval(z), f.scan_hints(), z_star, radius)
}

fn numeric_conjugate_raw(
    eval: &dyn Fn([f64; 3]) -> ExtReal,
    hints: &[[f64; 3]],
    z_star: [f64; 3],
    radius: f64,
) -> Result<f64> {
    assert!(radius > 0.0 && radius.is_finite());
    if is_radial(eval, z_star, radius) {
        return radial_conjugate(eval, hints, z_star, radius);
    }
    let mut best: Option<Best> = None;
    let h = 2.0 * radius / (SCAN_GRID - 1) as f64;
    for i in 0..SCAN_GRID {
        let x = -radius + i as f64 * h;
        for j in 0..SCAN_GRID {
            let y = -radius + j as f64 * h;
            for k in 0..SCAN_GRID {
                let z = -radius + k as f64 * h;
                consider(eval, z_star, [x, y, z], false, &mut best);
            }
        }
    }
    for hint in hints {
        consider(eval, z_star, *hint, true, &mut best);
    }
    let Some(mut cur) = best else {
        return Err(Error::NoFiniteSample);
    };

    // derivative-free local refinement, confined to the cube; strictly
    // improving moves only (tie-breaking is a scan-phase rule; accepting
    // ties here would let flat objectives ratchet away from the optimum)
    let dirs = compass_directions();
    let mut step = h;
    let floor = 1e-9 * radius.max(1.0);
    while step > floor {
        let mut improved = false;
        for d in &dirs {
            let cand = vec3::add(cur.point, vec3::scale(step, *d));
            if cand.iter().any(|c| c.abs() > radius) {
                continue;
            }
            if let ExtReal::Finite(v) = eval(cand) {
                let qc = vec3::dot(z_star, cand) - v;
                if qc > cur.value {
                    cur = Best {
                        point: cand,
                        value: qc,
                        from_hint: false,
                    };
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }

    if !cur.from_hint && cur.point.iter().any(|c| c.abs() >= radius * (1.0 - 1e-9)) {
        return Err(Error::RadiusTooSmall { at: cur.point });
    }
    Ok(cur.value)
}

/// Numeric radial symmetry test: compare f along several directions at
/// several radii; infinities must match and finite values must agree.
fn is_radial(eval: &dyn Fn([f64; 3]) -> ExtReal, z_star: [f64; 3], radius: f64) -> bool {
    let s3 = 1.0 / 3f64.sqrt();
    let s2 = 1.0 / 2f64.sqrt();
    let mut dirs = vec![
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [s3, s3, s3],
        [s2, -s2, 0.0],
        [-s3, s3, -s3],
    ];
    if vec3::norm(z_star) > 0.0 {
        dirs.push(vec3::unit_or_zero(z_star));
    }
    for frac in [0.07, 0.23, 0.52, 0.88] {
        let t = frac * radius;
        let reference = eval(vec3::scale(t, dirs[0]));
        for d in &dirs[1..] {
            let v = eval(vec3::scale(t, *d));
            match (reference, v) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => {
                    if (a - b).abs() > 1e-10 * (1.0 + a.abs()) {
                        return false;
                    }
                }
                (a, b) if a == b => {}
                _ => return false,
            }
        }
    }
    true
}

/// 1-D treatment of a radially symmetric conjugand: the sup is attained on
/// the ray along z*, so scan and refine the scalar profile.
fn radial_conjugate(
    eval: &dyn Fn([f64; 3]) -> ExtReal,
    hints: &[[f64; 3]],
    z_star: [f64; 3],
    radius: f64,
) -> Result<f64> {
    let dir = if vec3::norm(z_star) > 0.0 {
        vec3::unit_or_zero(z_star)
    } else {
        [1.0, 0.0, 0.0]
    };
    let zn = vec3::norm(z_star);
    let q_at = |t: f64| -> Option<f64> {
        eval(vec3::scale(t, dir)).finite().map(|v| zn * t - v)
    };

    let mut best_t: Option<(f64, f64, bool)> = None; // (t, q, from_hint)
    let consider_t = |t: f64, from_hint: bool, best_t: &mut Option<(f64, f64, bool)>| {
        if let Some(q) = q_at(t) {
            let better = match best_t {
                None => true,
                Some((bt, bq, _)) => {
                    let tol = 1e-12 * (1.0 + bq.abs());
                    q > *bq + tol || ((q - *bq).abs() <= tol && t + 1e-15 < *bt)
                }
            };
            if better {
                *best_t = Some((t, q, from_hint));
            }
        }
    };

    let h = radius / (RADIAL_GRID - 1) as f64;
    for i in 0..RADIAL_GRID {
        consider_t(i as f64 * h, false, &mut best_t);
    }
    let mut hint_radii: Vec<f64> = hints.iter().map(|p| vec3::norm(*p)).collect();
    hint_radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for t in &hint_radii {
        consider_t(*t, true, &mut best_t);
    }

    // a hint point off the ray can still be the global winner (point-supported
    // conjugands are not radial about the ray)
    let mut best_point: Option<Best> = None;
    for hint in hints {
        consider(eval, z_star, *hint, true, &mut best_point);
    }

    let Some((mut t, mut q, from_hint)) = best_t else {
        return match best_point {
            Some(b) => Ok(b.value),
            None => Err(Error::NoFiniteSample),
        };
    };

    let mut step = h;
    let floor = 1e-10 * radius.max(1.0);
    while step > floor {
        let mut improved = false;
        for cand in [t + step, t - step] {
            if !(0.0..=radius).contains(&cand) {
                continue;
            }
            if let Some(qc) = q_at(cand) {
                if qc > q {
                    t = cand;
                    q = qc;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }

    if let Some(bp) = &best_point {
        if bp.value > q + 1e-12 * (1.0 + q.abs()) {
            return Ok(bp.value);
        }
    }
    let near_hint = hint_radii.iter().any(|hr| (hr - t).abs() <= 1e-9 * radius);
    if !from_hint && !near_hint && t >= radius * (1.0 - 1e-9) {
        return Err(Error::RadiusTooSmall {
            at: vec3::scale(t, dir),
        });
    }
    Ok(q)
}

// -------------------------------------------------------------------
// Newton-inversion oracle for the smooth transform
// -------------------------------------------------------------------

/// Independent check of a smooth conjugate: invert the attached gradient by
/// damped Newton with a finite-difference Jacobian (no use of the shipped
/// gradient inverse), then apply the transform formula.
pub fn numeric_smooth_conjugate(f: &ScalarFunction3, z_star: [f64; 3]) -> Result<f64> {
    let grad = f.grad.as_ref().ok_or(Error::MissingGradient)?;
    let starts = [
        [0.0; 3],
        z_star,
        vec3::scale(0.5, z_star),
        vec3::scale(-1.0, z_star),
        [0.3, -0.2, 0.1],
    ];
    let mut last_residual = f64::INFINITY;
    for start in starts {
        if let Some(x) = newton_invert(grad.as_ref(), z_star, start, &mut last_residual) {
            let fx = f
                .eval(x)
                .finite()
                .ok_or(Error::NonFinite("numeric smooth conjugate evaluation"))?;
            return Ok(vec3::dot(z_star, x) - fx);
        }
    }
    Err(Error::InversionFailed {
        at: z_star,
        residual: last_residual,
    })
}

fn newton_invert(
    grad: &VecFn,
    target: [f64; 3],
    start: [f64; 3],
    last_residual: &mut f64,
) -> Option<[f64; 3]> {
    let mut x = start;
    let tol = 1e-11 * (1.0 + vec3::norm(target));
    for _ in 0..100 {
        let r = vec3::sub(grad(&x), target);
        let rn = vec3::norm(r);
        *last_residual = rn.min(*last_residual);
        if rn <= tol {
            return Some(x);
        }
        // forward-difference Jacobian of the gradient
        let h = 1e-7 * (1.0 + vec3::norm(x));
        let g0 = grad(&x);
        let mut jac = [[0.0; 3]; 3];
        for col in 0..3 {
            let mut xp = x;
            xp[col] += h;
            let gp = grad(&xp);
            for row in 0..3 {
                jac[row][col] = (gp[row] - g0[row]) / h;
            }
        }
        let d = solve3(jac, r)?;
        // backtrack on the residual norm
        let mut tstep = 1.0;
        let mut accepted = false;
        while tstep >= 1e-6 {
            let cand = vec3::sub(x, vec3::scale(tstep, d));
            let rc = vec3::norm(vec3::sub(grad(&cand), target));
            if rc < rn * (1.0 - 0.25 * tstep) || rc < tol {
                x = cand;
                accepted = true;
                break;
            }
            tstep *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    None
}

/// 3x3 linear solve by Gaussian elimination with partial pivoting.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| {
            m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap()
        })?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        let pivot_row = m[col];
        for row in m.iter_mut().skip(col + 1) {
            let f = row[col] / pivot_row[col];
            for (rk, pk) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *rk -= f * pk;
            }
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = m[row][3];
        for k in row + 1..3 {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    Some(x)
}

// -------------------------------------------------------------------
// Diamond dispatch, Fenchel residual, involution
// -------------------------------------------------------------------

fn default_radius(z_star: [f64; 3]) -> f64 {
    4.0_f64.max(4.0 * vec3::norm(z_star))
}

/// Convex/concave Fenchel transform: `f*` when convex, `-(-f)*(-z*)` when
/// concave; uses the attached closed form when present, the numeric oracle
/// otherwise. Errors on saddle/unknown tags (those need [`smooth_conjugate`]).
pub fn diamond_transform(f: &ScalarFunction3, z_star: [f64; 3]) -> Result<ExtReal> {
    diamond_transform_with_radius(f, z_star, default_radius(z_star))
}

pub fn diamond_transform_with_radius(
    f: &ScalarFunction3,
    z_star: [f64; 3],
    radius: f64,
) -> Result<ExtReal> {
    match f.convexity {
        Convexity::Convex => {
            if let Some(v) = f.closed_conjugate(z_star) {
                return Ok(v);
            }
            numeric_conjugate(f, z_star, radius).map(ExtReal::Finite)
        }
        Convexity::Concave => {
            if let Some(v) = f.closed_conjugate(z_star) {
                return Ok(v);
            }
            let neg_eval = |z: [f64; 3]| -f.eval(z);
            let neg_z = vec3::scale(-1.0, z_star);
            numeric_conjugate_raw(&neg_eval, f.scan_hints(), neg_z, radius)
                .map(|v| ExtReal::Finite(-v))
        }
        tag => Err(Error::NotConvexOrConcave(tag)),
    }
}

/// Conjugate value used by the residual and involution checks: closed form
/// when attached, smooth transform when invertible, diamond otherwise.
fn conjugate_value(f: &ScalarFunction3, z_star: [f64; 3]) -> Result<ExtReal> {
    if let Some(v) = f.closed_conjugate(z_star) {
        return Ok(v);
    }
    if f.has_grad_inv() {
        return smooth_conjugate(f, z_star).map(ExtReal::Finite);
    }
    diamond_transform(f, z_star)
}

/// Duality gap `psi_hat(m) + psi_hat^d(b) - m.b`; zero exactly when (m, b)
/// is a constitutively dual pair. Errors when either value is infinite.
pub fn fenchel_residual(psi_hat: &ScalarFunction3, m: [f64; 3], b: [f64; 3]) -> Result<f64> {
    let fm = psi_hat
        .eval(m)
        .finite()
        .ok_or(Error::NonFinite("fenchel residual: psi_hat(m)"))?;
    let fc = conjugate_value(psi_hat, b)?
        .finite()
        .ok_or(Error::NonFinite("fenchel residual: conjugate at b"))?;
    Ok(fm + fc - vec3::dot(m, b))
}

/// Max over probes of |(f^d)^d - f|. Smooth-invertible functions use the
/// gradient-inversion route; convex/concave (and formally-convex unknown)
/// functions conjugate the attached closed form numerically. Returns
/// `f64::INFINITY` when a probe deviates infinitely (the expected outcome
/// for the hard-saturation density).
pub fn involution_check(f: &ScalarFunction3, probes: &[[f64; 3]]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for z in probes {
        let second = second_transform(f, *z)?;
        let original = f.eval(*z);
        worst = worst.max(second.abs_deviation(original));
    }
    Ok(worst)
}

fn second_transform(f: &ScalarFunction3, z: [f64; 3]) -> Result<ExtReal> {
    if f.has_grad_inv() {
        // (f^d)^d(z) = z . grad f(z) - f^d(grad f(z)), since grad of f^d is
        // the inverse gradient
        let gz = f.grad(z).ok_or(Error::MissingGradient)?;
        let inner = smooth_conjugate(f, gz)?;
        return Ok(ExtReal::Finite(vec3::dot(z, gz) - inner));
    }
    let radius = default_radius(z).max(
        f.scan_hints()
            .iter()
            .map(|p| 4.0 * vec3::norm(*p))
            .fold(0.0, f64::max),
    );
    match f.convexity {
        // Unknown is conjugated formally as a convex function; that is the
        // move whose non-involutivity the hard-saturation chain demonstrates.
        Convexity::Convex | Convexity::Unknown => {
            let g = |w: [f64; 3]| -> ExtReal {
                match conjugate_of(f, w, radius) {
                    Ok(v) => v,
                    Err(_) => ExtReal::PosInf,
                }
            };
            numeric_conjugate_raw(&g, &[], z, radius).map(ExtReal::Finite)
        }
        Convexity::Concave => {
            // (f^d)^d(z) = -(-f^d)*(-z) with -f^d(w) = (-f)*(-w)
            let g = |w: [f64; 3]| -> ExtReal {
                match conjugate_of(f, w, radius) {
                    Ok(v) => -v,
                    Err(_) => ExtReal::PosInf,
                }
            };
            numeric_conjugate_raw(&g, &[], vec3::scale(-1.0, z), radius)
                .map(|v| ExtReal::Finite(-v))
        }
        Convexity::Saddle => Err(Error::NotConvexOrConcave(Convexity::Saddle)),
    }
}

/// First transform inside the involution: closed form when attached (the
/// fast path the outer numeric conjugation needs), numeric otherwise.
fn conjugate_of(f: &ScalarFunction3, w: [f64; 3], radius: f64) -> Result<ExtReal> {
    if let Some(v) = f.closed_conjugate(w) {
        return Ok(v);
    }
    match f.convexity {
        Convexity::Convex | Convexity::Unknown => {
            numeric_conjugate(f, w, radius).map(ExtReal::Finite)
        }
        Convexity::Concave => {
            let neg_eval = |z: [f64; 3]| -f.eval(z);
            numeric_conjugate_raw(&neg_eval, f.scan_hints(), vec3::scale(-1.0, w), radius)
                .map(|v| ExtReal::Finite(-v))
        }
        Convexity::Saddle => Err(Error::InvolutionNeedsConjugate),
    }
}
