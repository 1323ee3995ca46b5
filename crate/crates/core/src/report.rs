//! `key,value` reports and the number format shared by every CSV writer.

use std::fmt::Write as _;

/// Renders `x` with the fewest significant digits (at most 17) that parse back
/// to the same `f64`.
///
/// Plain decimal notation is used for exponents in `[-5, 17)`, scientific
/// notation otherwise.
pub fn format_value(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:e}");
    let (_, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..17).contains(&exp) {
        x.to_string()
    } else {
        sci
    }
}

/// Ordered `key,value` rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    rows: Vec<(String, f64)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: f64) {
        self.rows.push((key.into(), value));
    }

    pub fn flag(&mut self, key: impl Into<String>, value: bool) {
        self.push(key, if value { 1.0 } else { 0.0 });
    }

    pub fn rows(&self) -> &[(String, f64)] {
        &self.rows
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.rows.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// Header `key,value`, one row per entry, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        for (k, v) in &self.rows {
            let _ = writeln!(out, "{k},{}", format_value(*v));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats() {
        assert_eq!(format_value(0.0), "0");
        assert_eq!(format_value(-0.0), "0");
        assert_eq!(format_value(400.0), "400");
        assert_eq!(format_value(0.5), "0.5");
        assert_eq!(format_value(4.0 / 3.0), "1.3333333333333333");
        assert_eq!(format_value(-2.5e-7), "-2.5e-7");
        assert_eq!(format_value(1.380649e-23), "1.380649e-23");
        assert_eq!(format_value(1e20), "1e20");
        assert_eq!(format_value(f64::NAN), "NaN");
    }

    #[test]
    fn report_csv() {
        let mut r = Report::new();
        r.push("delta_s_irr", 4.0 / 3.0);
        r.flag("ok", true);
        assert_eq!(
            r.to_csv(),
            "key,value\ndelta_s_irr,1.3333333333333333\nok,1\n"
        );
        assert_eq!(r.get("ok"), Some(1.0));
        assert_eq!(r.get("missing"), None);
    }

    proptest! {
        #[test]
        fn round_trips_every_finite_double(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = format_value(x).parse().unwrap();
            prop_assert!(back == x || (x == 0.0 && back == 0.0));
        }
    }
}
