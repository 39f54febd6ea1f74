//! Exact percentages with half-up rounding for presentation.

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

pub type Rational = Ratio<i64>;

/// `num / den` as an exact percentage; `None` for an empty denominator.
pub fn percent(num: i64, den: i64) -> Option<Rational> {
    (den != 0).then(|| Ratio::new(num * 100, den))
}

pub fn ratio(num: i64, den: i64) -> Option<Rational> {
    (den != 0).then(|| Ratio::new(num, den))
}

/// Rounds to `decimals` places, halves away from zero (half-up on magnitude).
pub fn round_to(x: Rational, decimals: u32) -> Rational {
    let scale = Ratio::from_integer(10i64.pow(decimals));
    (x * scale).round() / scale
}

/// Fixed-point rendering after rounding, e.g. `89.7`, `-0.6`.
pub fn fmt_fixed(x: Rational, decimals: u32) -> String {
    let r = round_to(x, decimals);
    let scaled = (r * Ratio::from_integer(10i64.pow(decimals))).to_integer();
    let sign = if scaled < 0 { "-" } else { "" };
    let mag = scaled.abs();
    if decimals == 0 {
        return format!("{sign}{mag}");
    }
    let p = 10i64.pow(decimals);
    format!("{sign}{}.{:0width$}", mag / p, mag % p, width = decimals as usize)
}

/// Like [`fmt_fixed`] with an explicit `+` on positive values.
pub fn fmt_signed(x: Rational, decimals: u32) -> String {
    let s = fmt_fixed(x, decimals);
    if round_to(x, decimals).is_positive() {
        format!("+{s}")
    } else if round_to(x, decimals).is_zero() {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// Rounded value as a float for machine-readable reports.
pub fn to_f64(x: Rational, decimals: u32) -> f64 {
    fmt_fixed(x, decimals).parse().unwrap_or_else(|_| round_to(x, decimals).to_f64().unwrap_or(f64::NAN))
}
