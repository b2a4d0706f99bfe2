//! printf-compatible float formatting for the text file formats.
//!
//! Rust's `{:e}` omits the exponent sign and padding that C's `%e` emits, and
//! there is no `%g` at all; the trace CSV and bundle formats are defined in
//! terms of the C conversions, so they are reproduced here.

/// Format like C's `%.{precision}e`, e.g. `1.500000000000e+00`.
pub fn sci(x: f64, precision: usize) -> String {
    if let Some(s) = non_finite(x) {
        return s;
    }
    let s = format!("{:.*e}", precision, x);
    let (mantissa, exp) = split_exponent(&s);
    join_exponent(mantissa, exp)
}

/// Format like C's `%.{precision}g`.
pub fn general(x: f64, precision: usize) -> String {
    if let Some(s) = non_finite(x) {
        return s;
    }
    let p = precision.max(1);
    let s = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = split_exponent(&s);
    if exp < -4 || exp >= p as i32 {
        join_exponent(&strip_zeros(mantissa), exp)
    } else {
        let decimals = (p as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{:.*}", decimals, x))
    }
}

/// Shortest decimal that still round-trips, as `%.17g` would print it.
pub fn g17(x: f64) -> String {
    general(x, 17)
}

fn non_finite(x: f64) -> Option<String> {
    if x.is_nan() {
        Some("nan".to_string())
    } else if x.is_infinite() {
        Some(if x > 0.0 { "inf" } else { "-inf" }.to_string())
    } else {
        None
    }
}

fn split_exponent(s: &str) -> (&str, i32) {
    let (m, e) = s.split_once('e').expect("exponent form");
    (m, e.parse().expect("integer exponent"))
}

fn join_exponent(mantissa: &str, exp: i32) -> String {
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn strip_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0');
    t.trim_end_matches('.').to_string()
}
