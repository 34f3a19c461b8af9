//! Plain-text snapshot format for spectral fields.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use super::field::SpectralField;
use super::lattice::Lattice;
use crate::error::{Result, RimflowError};

const MAGIC: &str = "rimflow-field";
const VERSION: &str = "v1";

pub fn write_field<W: Write>(f: &SpectralField, mut out: W) -> Result<()> {
    out.write_all(field_to_string(f).as_bytes())?;
    Ok(())
}

pub fn field_to_string(f: &SpectralField) -> String {
    let lat = f.lattice();
    let mut s = format!("{MAGIC} {VERSION} K={} L={} ell={:?}\n", lat.k_max(), lat.l_max(), lat.ell());
    for ((k, l), c) in lat.modes().zip(f.coeffs()) {
        writeln!(s, "{k} {l} {:?} {:?}", c.re, c.im).expect("write to string");
    }
    s
}

/// Parses a snapshot. The field is flagged real when its coefficients are
/// conjugate-symmetric to rounding.
pub fn read_field<R: BufRead>(input: R) -> Result<SpectralField> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| RimflowError::Parse("empty field file".into()))??;
    let lattice = parse_header(&header)?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); lattice.len()];
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || RimflowError::Parse(format!("line {}: malformed mode entry {line:?}", lineno + 2));
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let k: i64 = parts[0].parse().map_err(|_| bad())?;
        let l: i64 = parts[1].parse().map_err(|_| bad())?;
        let re: f64 = parts[2].parse().map_err(|_| bad())?;
        let im: f64 = parts[3].parse().map_err(|_| bad())?;
        if l < 0 || !lattice.contains(k, l) {
            return Err(RimflowError::Parse(format!("mode ({k}, {l}) outside the declared truncation")));
        }
        coeffs[lattice.index(k, l as usize)] = Complex64::new(re, im);
    }
    let mut f = SpectralField::from_coeffs(lattice, coeffs, false)?;
    if f.reality_defect() <= 1e-12 {
        f.symmetrize_reality();
    }
    Ok(f)
}

fn parse_header(header: &str) -> Result<Lattice> {
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MAGIC) || parts.next() != Some(VERSION) {
        return Err(RimflowError::Parse(format!("unrecognised header {header:?}")));
    }
    let (mut k, mut l, mut ell) = (None, None, None);
    for p in parts {
        let (key, value) = p.split_once('=').ok_or_else(|| RimflowError::Parse(format!("bad header token {p:?}")))?;
        let err = || RimflowError::Parse(format!("bad header value {p:?}"));
        match key {
            "K" => k = Some(value.parse::<usize>().map_err(|_| err())?),
            "L" => l = Some(value.parse::<usize>().map_err(|_| err())?),
            "ell" => ell = Some(value.parse::<f64>().map_err(|_| err())?),
            _ => return Err(RimflowError::Parse(format!("unknown header key {key:?}"))),
        }
    }
    match (k, l, ell) {
        (Some(k), Some(l), Some(ell)) => Lattice::new(k, l, ell),
        _ => Err(RimflowError::Parse("header must define K, L and ell".into())),
    }
}
