//! Locale-independent numeric formatting for CSV and report files.

/// Render a float with 17 significant digits so parsing the text recovers
/// the exact bit pattern. Infinities use the `inf` sentinel.
pub fn float17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

#[cfg(test)]
mod tests {
    use super::float17;

    #[test]
    fn float17_round_trips_exactly() {
        for &x in &[0.01, -1.0 / 3.0, 1e-15, 123456.789, f64::MIN_POSITIVE] {
            let text = float17(x);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{text}");
        }
    }

    #[test]
    fn float17_sentinels() {
        assert_eq!(float17(f64::INFINITY), "inf");
        assert_eq!(float17(f64::NEG_INFINITY), "-inf");
    }
}
