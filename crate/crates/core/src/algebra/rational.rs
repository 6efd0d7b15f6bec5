//! Exact fractions used only for read/download accounting.

use num::{BigInt, BigRational, ToPrimitive, Zero};

pub type Ratio = BigRational;

pub fn ratio(num: i64, den: i64) -> Ratio {
    Ratio::new(BigInt::from(num), BigInt::from(den))
}

/// Always `num/den`, even for integers, so tables stay uniform.
pub fn render(r: &Ratio) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Six-digit decimal rendering.
pub fn render_decimal(r: &Ratio) -> String {
    format!("{:.6}", to_f64(r))
}

pub fn to_f64(r: &Ratio) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Parse `num/den` or a bare integer.
pub fn parse(s: &str) -> Option<Ratio> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim().parse::<BigInt>().ok()?, d.trim().parse::<BigInt>().ok()?),
        None => (s.parse::<BigInt>().ok()?, BigInt::from(1)),
    };
    if d.is_zero() {
        return None;
    }
    Some(Ratio::new(n, d))
}
