//! Shared pieces of the numeric JSON file format.
//!
//! Complex numbers are `[re, im]` pairs. Writers emit 17 significant digits
//! so files round-trip bit-exactly; readers go through serde_json.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::matcore::{ComplexMatrix, Ket};

pub(crate) type RawComplex = [f64; 2];
pub(crate) type RawVector = Vec<RawComplex>;
pub(crate) type RawMatrix = Vec<Vec<RawComplex>>;

pub(crate) fn number(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.16e}");
}

pub(crate) fn complex(out: &mut String, z: Complex64) {
    out.push('[');
    number(out, z.re);
    out.push_str(", ");
    number(out, z.im);
    out.push(']');
}

pub(crate) fn vector(out: &mut String, v: &Ket) {
    out.push('[');
    for (i, z) in v.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        complex(out, *z);
    }
    out.push(']');
}

pub(crate) fn matrix(out: &mut String, m: &ComplexMatrix, indent: &str) {
    out.push_str("[\n");
    for r in 0..m.nrows() {
        out.push_str(indent);
        out.push_str("  [");
        for col in 0..m.ncols() {
            if col > 0 {
                out.push_str(", ");
            }
            complex(out, m[(r, col)]);
        }
        out.push(']');
        if r + 1 < m.nrows() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str(indent);
    out.push(']');
}

pub(crate) fn ket_from_raw(raw: &RawVector) -> Ket {
    Ket::from_iterator(
        raw.len(),
        raw.iter().map(|[re, im]| Complex64::new(*re, *im)),
    )
}

pub(crate) fn matrix_from_raw(raw: &RawMatrix) -> Option<ComplexMatrix> {
    let rows = raw.len();
    let cols = raw.first().map_or(0, Vec::len);
    if raw.iter().any(|r| r.len() != cols) {
        return None;
    }
    Some(ComplexMatrix::from_fn(rows, cols, |i, j| {
        let [re, im] = raw[i][j];
        Complex64::new(re, im)
    }))
}

/// Plain decimal with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.00000000000".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (11 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit (9.99.. -> 10.0..)
    let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
    let leading_zeros = s
        .trim_start_matches('-')
        .chars()
        .take_while(|c| *c == '0' || *c == '.')
        .filter(|c| *c == '0')
        .count();
    if digits - leading_zeros > 12 && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_formats() {
        assert_eq!(sig12(1.0), "1.00000000000");
        assert_eq!(sig12(2.414213562373095), "2.41421356237");
        assert_eq!(sig12(0.6094757082487299), "0.609475708249");
        assert_eq!(sig12(0.0), "0.00000000000");
        assert_eq!(sig12(-0.5), "-0.500000000000");
        assert_eq!(sig12(12.5), "12.5000000000");
        assert_eq!(sig12(9.9999999999999), "10.0000000000");
        assert_eq!(sig12(10201.0), "10201.0000000");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            std::f64::consts::FRAC_1_SQRT_2,
            -1e-300,
            0.0,
        ] {
            let mut s = String::new();
            number(&mut s, x);
            let back: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }
}
