//! Python bindings for the restriction-variety toolkit.
//!
//! Thin wrappers around `ogres-core`: each function parses the text form of
//! a sequence (`"L2 L4 Q2_7"` together with the ambient dimension `n`),
//! calls the corresponding core operation, and returns either a plain
//! scalar or a JSON string using the same serialization as the CLI's
//! `--json` output.  Keeping the boundary at strings and scalars avoids
//! mirroring the whole data model as Python classes; consumers decode the
//! structured results with `json.loads`.
//!
//! Every core error surfaces as a `ValueError` carrying the core error
//! message, so Python callers see the same diagnostics as CLI users.

use ogres_core::degen::GateMode;
use ogres_core::fforacle::CountMode;
use ogres_core::seqmodel::Sequence;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

// ====================================================================
// Conversion helpers
// ====================================================================

fn to_py(e: ogres_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse(text: &str, n: u32) -> PyResult<Sequence> {
    ogres_core::parse_sequence(text, n).map_err(to_py)
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn gate(strict: bool) -> GateMode {
    if strict {
        GateMode::Strict
    } else {
        GateMode::Default
    }
}

// ====================================================================
// Sequence model and admissibility
// ====================================================================

/// Parse a sequence and echo its canonical text form (round-trip check).
#[pyfunction]
fn canonical_form(text: &str, n: u32) -> PyResult<String> {
    Ok(ogres_core::format_sequence(&parse(text, n)?))
}

/// Admissibility violations as a JSON list; an empty list means admissible.
#[pyfunction]
fn validate_json(text: &str, n: u32) -> PyResult<String> {
    let seq = parse(text, n)?;
    to_json(&ogres_core::validate(&seq))
}

/// Special indices (1-based, outermost first) of an admissible sequence.
#[pyfunction]
fn special_indices(text: &str, n: u32) -> PyResult<Vec<usize>> {
    Ok(ogres_core::special_indices(&parse(text, n)?))
}

/// The compressed partition triple of a sequence, as JSON.
#[pyfunction]
fn partitions_json(text: &str, n: u32) -> PyResult<String> {
    to_json(&ogres_core::to_partitions(&parse(text, n)?))
}

// ====================================================================
// Dimensions and the resolution tower
// ====================================================================

/// Full dimension report (per-step contributions and total), as JSON.
#[pyfunction]
fn dim_json(text: &str, n: u32) -> PyResult<String> {
    let seq = parse(text, n)?;
    to_json(&ogres_core::dim_restriction(&seq).map_err(to_py)?)
}

/// Total dimension of the restriction variety.
#[pyfunction]
fn dim_total(text: &str, n: u32) -> PyResult<i64> {
    let seq = parse(text, n)?;
    Ok(ogres_core::dim_restriction(&seq).map_err(to_py)?.total)
}

/// The resolution tower diagram, as JSON.
#[pyfunction]
fn tower_json(text: &str, n: u32) -> PyResult<String> {
    let seq = parse(text, n)?;
    to_json(&ogres_core::build_tower(&seq).map_err(to_py)?)
}

/// Dimension of the resolution tower (must agree with `dim_total`).
#[pyfunction]
fn tower_dim(text: &str, n: u32) -> PyResult<i64> {
    let seq = parse(text, n)?;
    Ok(ogres_core::tower_dim(
        &ogres_core::build_tower(&seq).map_err(to_py)?,
    ))
}

// ====================================================================
// Degeneration and singular loci
// ====================================================================

/// Components of the exceptional image, as a JSON list of loci.
#[pyfunction]
#[pyo3(signature = (text, n, strict = false))]
fn exceptional_json(text: &str, n: u32, strict: bool) -> PyResult<String> {
    let seq = parse(text, n)?;
    to_json(&ogres_core::exceptional_image(&seq, gate(strict)).map_err(to_py)?)
}

/// The singular-locus report (smooth flag plus components), as JSON.
#[pyfunction]
#[pyo3(signature = (text, n, strict = false))]
fn singular_locus_json(text: &str, n: u32, strict: bool) -> PyResult<String> {
    let seq = parse(text, n)?;
    to_json(&ogres_core::singular_locus(&seq, gate(strict)).map_err(to_py)?)
}

// ====================================================================
// Type-A Schubert baseline
// ====================================================================

/// Schubert baseline for jump sequences in the ordinary Grassmannian:
/// partition, dimension and singular components, as one JSON object.
#[pyfunction]
fn schubert_json(jumps: Vec<u32>, n: u32) -> PyResult<String> {
    let partition = ogres_core::schubert_partition(&jumps, n).map_err(to_py)?;
    let dim = ogres_core::schubert_dim(&jumps, n).map_err(to_py)?;
    let components = ogres_core::schubert_singular_locus(&jumps, n).map_err(to_py)?;
    to_json(&serde_json::json!({
        "partition": partition,
        "dim": dim,
        "components": components,
    }))
}

// ====================================================================
// Finite-field oracle
// ====================================================================

/// Exact point count of the open or closure cell over `F_q`, `q ∈ {3,5,7}`.
#[pyfunction]
#[pyo3(signature = (text, n, q, mode = "open"))]
fn oracle_count(text: &str, n: u32, q: u32, mode: &str) -> PyResult<u64> {
    let seq = parse(text, n)?;
    let mode = match mode {
        "open" => CountMode::Open,
        "closure" => CountMode::Closure,
        other => {
            return Err(PyValueError::new_err(format!(
                "mode must be \"open\" or \"closure\", got {other:?}"
            )))
        }
    };
    let real = ogres_core::realize_flag(&seq, q).map_err(to_py)?;
    ogres_core::count_cell_points(&seq, &real, mode).map_err(to_py)
}

/// Dimension estimate from open-cell counts at `q = 3` and `q = 5`.
#[pyfunction]
fn oracle_estimate(text: &str, n: u32) -> PyResult<i64> {
    let seq = parse(text, n)?;
    let r3 = ogres_core::realize_flag(&seq, 3).map_err(to_py)?;
    let r5 = ogres_core::realize_flag(&seq, 5).map_err(to_py)?;
    ogres_core::estimate_dim(&seq, &r3, &r5).map_err(to_py)
}

/// Check that every emitted singular-locus component is contained in the
/// closure of the variety, at `q = 3`.
#[pyfunction]
#[pyo3(signature = (text, n, strict = false))]
fn oracle_containment(text: &str, n: u32, strict: bool) -> PyResult<bool> {
    let seq = parse(text, n)?;
    let real = ogres_core::realize_flag(&seq, 3).map_err(to_py)?;
    let loci = ogres_core::exceptional_image(&seq, gate(strict)).map_err(to_py)?;
    for locus in &loci {
        if !ogres_core::check_sigma_containment(locus, &seq, &real).map_err(to_py)? {
            return Ok(false);
        }
    }
    Ok(true)
}

// ====================================================================
// Module registration
// ====================================================================

#[pymodule]
fn ogres_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(canonical_form, m)?)?;
    m.add_function(wrap_pyfunction!(validate_json, m)?)?;
    m.add_function(wrap_pyfunction!(special_indices, m)?)?;
    m.add_function(wrap_pyfunction!(partitions_json, m)?)?;
    m.add_function(wrap_pyfunction!(dim_json, m)?)?;
    m.add_function(wrap_pyfunction!(dim_total, m)?)?;
    m.add_function(wrap_pyfunction!(tower_json, m)?)?;
    m.add_function(wrap_pyfunction!(tower_dim, m)?)?;
    m.add_function(wrap_pyfunction!(exceptional_json, m)?)?;
    m.add_function(wrap_pyfunction!(singular_locus_json, m)?)?;
    m.add_function(wrap_pyfunction!(schubert_json, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_count, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_containment, m)?)?;
    Ok(())
}
