//! Deterministic JSON emission helpers.
//!
//! Every float is written with 17 significant digits (`{:.16e}`), enough to
//! round-trip any f64 exactly, so identical data always serializes to
//! identical bytes. Parsing stays on serde_json.

/// One f64 as a JSON number with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    debug_assert!(x.is_finite(), "JSON numbers must be finite, got {x}");
    format!("{x:.16e}")
}

/// `[a,b,c]` with 17-digit elements.
pub fn fmt_f64_slice(xs: &[f64]) -> String {
    let body: Vec<String> = xs.iter().map(|&x| fmt_f64(x)).collect();
    format!("[{}]", body.join(","))
}

/// `[[u,v],...]` for point lists.
pub fn fmt_point_list(points: impl Iterator<Item = [f64; 2]>) -> String {
    let body: Vec<String> = points.map(|p| fmt_f64_slice(&p)).collect();
    format!("[{}]", body.join(","))
}
