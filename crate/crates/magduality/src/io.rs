//! On-disk formats: CSV fields and deterministic JSON reports.
//!
//! Vector fields are CSV with the header `x_index,y_index,z_index,vx,vy,vz`
//! in row-major z-fastest order; scalar fields use `value` in place of the
//! three components. Floats are printed with 17 significant digits so that
//! identical runs produce byte-identical files; report JSON is emitted by
//! hand with a fixed key order for the same reason. Non-finite report values
//! become JSON `null` (refused solves carry no meaningful numbers); in CSV
//! they print as `inf`/`-inf`/`nan`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::equivalence::{EquivalenceVerdict, RoundtripReport, TransferRoundtrip};
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::solvers::SolveReport;

/// 17-significant-digit rendering, stable across runs.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt17_ext(x: ExtReal) -> String {
    fmt17(x.to_f64())
}

/// JSON number: `null` when non-finite.
fn json_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

// -------------------------------------------------------------------
// Fields
// -------------------------------------------------------------------

pub fn vector_field_csv(field: &VectorField) -> String {
    let spec = field.spec();
    let mut out = String::new();
    out.push_str("x_index,y_index,z_index,vx,vy,vz\n");
    for (idx, ix, iy, iz) in spec.nodes() {
        let v = field.data()[idx];
        let _ = writeln!(
            out,
            "{ix},{iy},{iz},{},{},{}",
            fmt17(v[0]),
            fmt17(v[1]),
            fmt17(v[2])
        );
    }
    out
}

pub fn scalar_field_csv(field: &ScalarField) -> String {
    let spec = field.spec();
    let mut out = String::new();
    out.push_str("x_index,y_index,z_index,value\n");
    for (idx, ix, iy, iz) in spec.nodes() {
        let _ = writeln!(out, "{ix},{iy},{iz},{}", fmt17(field.data()[idx]));
    }
    out
}

pub fn write_vector_field(path: &Path, field: &VectorField) -> Result<()> {
    fs::write(path, vector_field_csv(field))?;
    Ok(())
}

pub fn write_scalar_field(path: &Path, field: &ScalarField) -> Result<()> {
    fs::write(path, scalar_field_csv(field))?;
    Ok(())
}

/// Parse a vector field CSV; the row order must be exactly the canonical
/// z-fastest layout.
pub fn parse_vector_field_csv(text: &str, spec: GridSpec) -> Result<VectorField> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().trim();
    if header != "x_index,y_index,z_index,vx,vy,vz" {
        return Err(Error::Scenario(format!(
            "bad field CSV header: {header:?}"
        )));
    }
    let mut data = Vec::with_capacity(spec.node_count());
    let mut expected = spec.nodes();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(Error::Scenario(format!(
                "field CSV line {}: expected 6 columns, got {}",
                lineno + 2,
                cols.len()
            )));
        }
        let parse_idx = |s: &str| -> Result<usize> {
            s.trim()
                .parse()
                .map_err(|_| Error::Scenario(format!("field CSV line {}: bad index {s:?}", lineno + 2)))
        };
        let parse_val = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Scenario(format!("field CSV line {}: bad value {s:?}", lineno + 2)))
        };
        let (ix, iy, iz) = (parse_idx(cols[0])?, parse_idx(cols[1])?, parse_idx(cols[2])?);
        match expected.next() {
            Some((_, ex, ey, ez)) if (ex, ey, ez) == (ix, iy, iz) => {}
            _ => {
                return Err(Error::Scenario(format!(
                    "field CSV line {}: index ({ix},{iy},{iz}) out of canonical z-fastest order",
                    lineno + 2
                )))
            }
        }
        data.push([parse_val(cols[3])?, parse_val(cols[4])?, parse_val(cols[5])?]);
    }
    VectorField::from_data(spec, data)
}

pub fn read_vector_field(path: &Path, spec: GridSpec) -> Result<VectorField> {
    let text = fs::read_to_string(path)?;
    parse_vector_field_csv(&text, spec)
}

// -------------------------------------------------------------------
// Reports
// -------------------------------------------------------------------

pub fn grid_spec_json(spec: &GridSpec) -> String {
    format!(
        "{{\"edge_length\":{},\"resolution\":{},\"mu0\":{}}}",
        json_num(spec.edge_length()),
        spec.resolution(),
        json_num(spec.mu0())
    )
}

pub fn verdict_json(v: &EquivalenceVerdict) -> String {
    let (curl_h, div_b, induction_gap) = v.maxwell_residuals;
    format!(
        concat!(
            "{{\"is_critical_state\":{},",
            "\"residuals\":{{\"curl_h\":{},\"div_b\":{},\"induction_gap\":{},\"duality\":{},\"fenchel\":{}}},",
            "\"energies\":{{\"b\":{},\"mh\":{},\"gap\":{}}}}}"
        ),
        v.is_critical_state,
        json_num(curl_h),
        json_num(div_b),
        json_num(induction_gap),
        json_num(v.duality_residual),
        json_num(v.fenchel_residual_field),
        json_num(v.energy_b),
        json_num(v.energy_mh),
        json_num(v.energy_gap),
    )
}

pub fn solve_report_json(r: &SolveReport) -> String {
    format!(
        concat!(
            "{{\"status\":\"{}\",\"iterations\":{},",
            "\"energy_b\":{},\"energy_mh\":{},",
            "\"residual_b\":{},\"residual_mh\":{}}}"
        ),
        r.status.as_str(),
        r.iterations,
        json_num(r.energy_b),
        json_num(r.energy_mh),
        json_num(r.residual_b),
        json_num(r.residual_mh),
    )
}

fn route_json(route: &Option<TransferRoundtrip>) -> String {
    match route {
        None => "null".to_string(),
        Some(t) => format!(
            "{{\"verdict\":{},\"field_deviation\":{},\"energy_gap\":{}}}",
            verdict_json(&t.verdict),
            json_num(t.field_deviation),
            json_num(t.energy_gap)
        ),
    }
}

pub fn roundtrip_report_json(r: &RoundtripReport) -> String {
    let opt_report = |o: &Option<SolveReport>| match o {
        None => "null".to_string(),
        Some(rep) => solve_report_json(rep),
    };
    let opt_num = |o: &Option<f64>| match o {
        None => "null".to_string(),
        Some(x) => json_num(*x),
    };
    format!(
        concat!(
            "{{\"solve_b\":{},\"solve_mh\":{},",
            "\"b_route\":{},\"mh_route\":{},",
            "\"cross_field_deviation\":{},\"minmin_gap\":{}}}"
        ),
        opt_report(&r.solve_b_report),
        opt_report(&r.solve_mh_report),
        route_json(&r.b_route),
        route_json(&r.mh_route),
        opt_num(&r.cross_field_deviation),
        opt_num(&r.minmin_gap),
    )
}
