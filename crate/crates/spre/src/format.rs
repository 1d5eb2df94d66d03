//! Number formatting and the CSV conventions shared by every output file.

use std::fmt::Write as _;

/// Formats `x` with `digits` significant digits, `%g` style: fixed notation
/// for moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -4 || exp >= digits as i32 {
        return format!("{}e{exp}", trim(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim(&format!("{x:.decimals$}")).to_string()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// 9 significant digits, the precision of every CSV output.
pub fn f9(x: f64) -> String {
    sig(x, 9)
}

/// Appends `values` to `line`, comma separated, each at 9 digits.
pub fn push_fields(line: &mut String, values: &[f64]) {
    for v in values {
        if !line.is_empty() {
            line.push(',');
        }
        let _ = write!(line, "{}", f9(*v));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(f9(1.0), "1");
        assert_eq!(f9(8.123456789123), "8.12345679");
        assert_eq!(f9(-0.5), "-0.5");
        assert_eq!(f9(5_123_456.25), "5123456.25");
        assert_eq!(f9(1.5e12), "1.5e12");
        assert_eq!(f9(2.5e-7), "2.5e-7");
        assert_eq!(f9(123456789.4), "123456789");
        assert_eq!(f9(0.0), "0");
    }

    #[test]
    fn round_trips_to_nine_digits() {
        for x in [std::f64::consts::PI, -2.718281828e-3, 6.02214076e23, 1.0 / 3.0] {
            let back: f64 = f9(x).parse().unwrap();
            assert!((back - x).abs() <= 5e-9 * x.abs());
        }
    }
}
