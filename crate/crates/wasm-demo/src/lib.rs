//! Browser bindings: covering slices, certificate checks and abelianization.

use picard::covering::{render_covering, verify_certificate, CoveringCertificate, Slice};
use picard::fixtures;
use picard::presentation::{abelianization, Presentation};
use picard::ring::parse_rational;
use wasm_bindgen::prelude::*;

fn certificate(d: u32) -> Result<CoveringCertificate, String> {
    let text = fixtures::certificate(d).ok_or_else(|| format!("no certificate for d = {}", d))?;
    CoveringCertificate::parse(text, "certificate").map_err(|e| e.to_string())
}

/// SVG of the shipped covering for `d` cut at height `t` (a rational such as `2/3`).
#[wasm_bindgen]
pub fn render_slice(d: u32, t: &str) -> Result<String, String> {
    let t = parse_rational(t.trim()).map_err(|e| e.to_string())?;
    let cert = certificate(d)?;
    render_covering(&cert, &Slice::T(t)).map(|r| r.svg).map_err(|e| e.to_string())
}

/// Region-by-region check of a certificate. An empty `text` uses the shipped one for `d`.
#[wasm_bindgen]
pub fn check_certificate(d: u32, text: &str, audit: usize) -> Result<String, String> {
    let cert = if text.trim().is_empty() {
        certificate(d)?
    } else {
        CoveringCertificate::parse(text, "input").map_err(|e| e.to_string())?
    };
    verify_certificate(&cert, audit.min(32)).map(|r| r.to_string()).map_err(|e| e.to_string())
}

/// Invariant factors of the abelianization of a presentation such as `gens: a b` plus relator lines.
#[wasm_bindgen]
pub fn abelianize(text: &str) -> Result<String, String> {
    let p = Presentation::parse(text).map_err(|e| e.to_string())?;
    Ok(format!("{} generators, {} relators: {}", p.gens.len(), p.relators.len(), abelianization(&p)))
}

/// A shipped presentation to start from.
#[wasm_bindgen]
pub fn sample_presentation(d: u32) -> String {
    fixtures::theorem(d).map(|t| t.0.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_is_svg() {
        let svg = render_slice(2, "0").unwrap();
        assert!(svg.starts_with("<?xml") || svg.starts_with("<svg"));
        assert_eq!(svg, render_slice(2, " 0 ").unwrap());
        assert!(render_slice(7, "0").is_err());
        assert!(render_slice(2, "x").is_err());
    }

    #[test]
    fn certificate_checks() {
        assert!(check_certificate(2, "", 8).unwrap().ends_with("PASS\n"));
        assert!(check_certificate(2, "d 2\n", 0).is_err());
    }

    #[test]
    fn abelianizations() {
        assert!(abelianize(&sample_presentation(2)).unwrap().ends_with(": 2, 4"));
        assert!(abelianize(&sample_presentation(11)).unwrap().ends_with(": 2, 2, 2"));
        assert!(abelianize("gens: a\n[a,\n").is_err());
    }
}
