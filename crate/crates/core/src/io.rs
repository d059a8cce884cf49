//! Serialization helpers: every float leaves the crate with 17 significant digits.

use serde::Serializer;
use serde_json::{Number, Value};

/// Formats a float with 17 significant digits in scientific notation.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// JSON value for a float, written with 17 significant digits (`null` if not finite).
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(fmt17(x).parse::<Number>().expect("formatted float parses"))
    } else {
        Value::Null
    }
}

/// JSON array of floats.
pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().copied().map(num).collect())
}

pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    use serde::Serialize;
    num(*x).serialize(s)
}

pub fn ser_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::Serialize;
    nums(xs).serialize(s)
}

pub fn ser_arr3<S: Serializer>(xs: &[f64; 3], s: S) -> Result<S::Ok, S::Error> {
    ser_vec(xs, s)
}

pub fn ser_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::Serialize;
    match x {
        Some(v) => num(*v).serialize(s),
        None => s.serialize_none(),
    }
}

/// Pretty JSON text with a trailing newline.
pub fn to_json_string<T: serde::Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("serializable value");
    out.push('\n');
    out
}

/// Builds CSV text from a header and rows of floats.
pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(|x| fmt17(*x)))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

/// Builds CSV text from pre-formatted string rows.
pub fn csv_records(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn json_number_is_raw() {
        let v = num(0.5);
        assert_eq!(serde_json::to_string(&v).unwrap(), "5.0000000000000000e-1");
        assert_eq!(v.as_f64(), Some(0.5));
    }
}
