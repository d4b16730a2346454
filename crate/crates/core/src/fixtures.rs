//! Data files shipped with the crate.

/// Printed depth table for d = 2.
pub const POINTS_D2: &str = include_str!("../data/points_d2.txt");
pub const WITNESSES_D2: &str = include_str!("../data/witnesses_d2.txt");
pub const CERTIFICATE_D2: &str = include_str!("../data/certificate_d2.txt");
pub const CERTIFICATE_D11: &str = include_str!("../data/certificate_d11.txt");
pub const PRISM_D2: &str = include_str!("../data/prism_d2.txt");
pub const PRISM_D11: &str = include_str!("../data/prism_d11.txt");
pub const THEOREM_D2: &str = include_str!("../data/theorem_d2.txt");
pub const THEOREM_D2_MATRICES: &str = include_str!("../data/theorem_d2_matrices.txt");
pub const THEOREM_D11: &str = include_str!("../data/theorem_d11.txt");
pub const THEOREM_D11_MATRICES: &str = include_str!("../data/theorem_d11_matrices.txt");

pub fn points(d: u32) -> Option<&'static str> {
    (d == 2).then_some(POINTS_D2)
}

pub fn witnesses(d: u32) -> Option<&'static str> {
    (d == 2).then_some(WITNESSES_D2)
}

pub fn certificate(d: u32) -> Option<&'static str> {
    match d {
        2 => Some(CERTIFICATE_D2),
        11 => Some(CERTIFICATE_D11),
        _ => None,
    }
}

pub fn prism(d: u32) -> Option<&'static str> {
    match d {
        2 => Some(PRISM_D2),
        11 => Some(PRISM_D11),
        _ => None,
    }
}

/// Theorem presentation and its generator matrices.
pub fn theorem(d: u32) -> Option<(&'static str, &'static str)> {
    match d {
        2 => Some((THEOREM_D2, THEOREM_D2_MATRICES)),
        11 => Some((THEOREM_D11, THEOREM_D11_MATRICES)),
        _ => None,
    }
}
