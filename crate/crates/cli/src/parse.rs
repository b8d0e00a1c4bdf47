//! Parsers for the small textual formats accepted on the command line:
//! complex literals, monomial-plus-constant polynomials, rational angles,
//! view windows and point lists.

use blaschke_div_core::polydyn::{Angle, Polynomial};
use blaschke_div_core::C64;

/// Parses a complex literal. Two forms are accepted: a comma pair `re,im`
/// and an algebraic literal such as `1+2i`, `-0.5i` or `3`.
pub fn parse_complex(text: &str) -> Result<C64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty complex literal".into());
    }
    if let Some((re, im)) = s.split_once(',') {
        let re: f64 = re
            .parse()
            .map_err(|_| format!("bad real part {re:?} in {text:?}"))?;
        let im: f64 = im
            .parse()
            .map_err(|_| format!("bad imaginary part {im:?} in {text:?}"))?;
        return Ok(C64::new(re, im));
    }
    if let Some(body) = s.strip_suffix('i') {
        let bytes = body.as_bytes();
        let mut split = None;
        for (k, ch) in body.char_indices().skip(1) {
            if (ch == '+' || ch == '-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
            }
        }
        return match split {
            Some(k) => {
                let re: f64 = body[..k]
                    .parse()
                    .map_err(|_| format!("bad real part in {text:?}"))?;
                Ok(C64::new(re, parse_signed_coefficient(&body[k..], text)?))
            }
            None => Ok(C64::new(0.0, parse_signed_coefficient(body, text)?)),
        };
    }
    let re: f64 = s
        .parse()
        .map_err(|_| format!("bad complex literal {text:?}"))?;
    Ok(C64::new(re, 0.0))
}

fn parse_signed_coefficient(text: &str, whole: &str) -> Result<f64, String> {
    match text {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        other => other
            .parse()
            .map_err(|_| format!("bad imaginary part in {whole:?}")),
    }
}

/// Parses a semicolon-separated list of complex literals.
pub fn parse_complex_list(text: &str) -> Result<Vec<C64>, String> {
    text.split(';').map(parse_complex).collect()
}

/// Parses a monic centered polynomial of the form `z^d` optionally followed
/// by a constant term, e.g. `z^2-1`, `z^3+0.1i`, `z^2`.
pub fn parse_polynomial(text: &str) -> Result<Polynomial, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let rest = s
        .strip_prefix("z^")
        .ok_or_else(|| format!("polynomial {text:?} must have the form z^d or z^d+c"))?;
    let split = rest.find(['+', '-']).unwrap_or(rest.len());
    let degree: u32 = rest[..split]
        .parse()
        .map_err(|_| format!("bad degree in {text:?}"))?;
    if degree < 2 {
        return Err(format!("polynomial degree must be at least 2, got {degree}"));
    }
    let constant = if split < rest.len() {
        parse_complex(&rest[split..])?
    } else {
        C64::new(0.0, 0.0)
    };
    let mut lower = vec![C64::new(0.0, 0.0); (degree - 1) as usize];
    lower[0] = constant;
    Polynomial::new(&lower).map_err(|e| e.to_string())
}

/// Parses a rational angle `num/den` measured in turns.
pub fn parse_angle(text: &str) -> Result<Angle, String> {
    let (num, den) = text
        .split_once('/')
        .ok_or_else(|| format!("angle {text:?} must have the form num/den"))?;
    let num: u64 = num.parse().map_err(|_| format!("bad numerator in {text:?}"))?;
    let den: u64 = den.parse().map_err(|_| format!("bad denominator in {text:?}"))?;
    Angle::new(num, den).map_err(|e| e.to_string())
}

/// Parses a view window `re_lo,re_hi,im_lo,im_hi`.
pub fn parse_window(text: &str) -> Result<[f64; 4], String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("window {text:?} must have four comma-separated entries"));
    }
    let mut window = [0.0; 4];
    for (slot, part) in window.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| format!("bad window entry {part:?}"))?;
    }
    Ok(window)
}

/// Parses a real interval `lo,hi`.
pub fn parse_interval(text: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = text
        .split_once(',')
        .ok_or_else(|| format!("interval {text:?} must have the form lo,hi"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad bound {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad bound {hi:?}"))?;
    Ok((lo, hi))
}
