//! Deterministic serialization: floats at 17 significant digits, JSON objects
//! in declaration order, CSV with a header row and LF line endings.

use serde::ser::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Formats a float with 17 significant digits, which round-trips exactly.
/// Non-finite values become `NaN`, `inf` or `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_owned()
    } else if v > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

/// A float serialized into JSON as a 17-significant-digit number (`null` if
/// not finite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(fmt_f64(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn to_csv<I, R>(header: &[&str], rows: I) -> anyhow::Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [1.0, 0.1, std::f64::consts::PI, -1.2345e-300, 6.02e23] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn json_numbers() {
        #[derive(serde::Serialize)]
        struct T {
            a: Num,
            b: Num,
        }
        let s = serde_json::to_string(&T { a: Num(0.5), b: Num(f64::NAN) }).unwrap();
        assert_eq!(s, r#"{"a":5.0000000000000000e-1,"b":null}"#);
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.5));
    }

    #[test]
    fn csv_uses_lf_and_quotes() {
        let s = to_csv(&["name", "detail"], [["a", "x, y"]]).unwrap();
        assert_eq!(s, "name,detail\na,\"x, y\"\n");
    }
}
