//! Fixed float formatting shared by every CSV the crate writes.

/// Formats `x` with 9 significant digits in positional notation.
///
/// The output depends only on the value, so repeated runs are byte-identical.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

/// Mix coordinates joined by `;` so they stay in one CSV field.
pub fn fmt_mix(p: &[f64]) -> String {
    p.iter().map(|x| fmt_float(*x)).collect::<Vec<_>>().join(";")
}
