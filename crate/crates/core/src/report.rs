//! Plain-text formatting shared by CSV writers.

/// `x` to six significant digits; scientific notation outside `[1e-5, 1e15)`.
pub fn sig6(x: f64) -> String {
    sig(x, 6)
}

pub fn sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return "NA".to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let digits = digits.max(1);
    // round first so that 9.9999999 reports its exponent as 1
    let sci = format!("{:.*e}", digits - 1, x);
    let exp: i32 = sci.split('e').nth(1).and_then(|e| e.parse().ok()).unwrap_or(0);
    if !(-5..15).contains(&exp) {
        return sci;
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(-729.8), "-729.800");
        assert_eq!(sig6(0.2822), "0.282200");
        assert_eq!(sig6(0.005), "0.00500000");
        assert_eq!(sig6(1533.0), "1533.00");
        assert_eq!(sig6(9.9999999), "10.0000");
        assert_eq!(sig6(1.5e-9), "1.50000e-9");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(f64::NAN), "NA");
    }
}
