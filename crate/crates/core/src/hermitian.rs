//! The Hermitian form ⟨Z,W⟩ = W*JZ of the Siegel model, lifts of boundary
//! points, levels, and the projective action of 3×3 matrices over O_d.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::heisenberg::HeisPoint;
use crate::ring::{gcd_all, parse_quad_int, QuadField, QuadInt, RingParams};

/// A vector in C³ with entries in Q(i√d).
pub type HVector = [QuadField; 3];
/// A vector with entries in O_d.
pub type IntVector = [QuadInt; 3];

/// Either ∞ or a finite boundary point (z, t√d).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryPoint {
    Infinity,
    Finite(HeisPoint),
}

impl BoundaryPoint {
    pub fn finite(&self) -> Option<&HeisPoint> {
        match self {
            BoundaryPoint::Infinity => None,
            BoundaryPoint::Finite(p) => Some(p),
        }
    }
}

impl From<HeisPoint> for BoundaryPoint {
    fn from(p: HeisPoint) -> Self {
        BoundaryPoint::Finite(p)
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryPoint::Infinity => write!(f, "inf"),
            BoundaryPoint::Finite(p) => write!(f, "{}", p),
        }
    }
}

/// ⟨Z,W⟩ = W*JZ with J the anti-diagonal matrix.
pub fn herm_product(z: &HVector, w: &HVector) -> QuadField {
    &(&(&w[0].conj() * &z[2]) + &(&w[1].conj() * &z[1])) + &(&w[2].conj() * &z[0])
}

/// The standard lift ψ(z, t√d, u) = ((−|z|² − u + i t√d)/2, z, 1).
pub fn standard_lift(z: &QuadField, t: &BigRational, u: &BigRational) -> HVector {
    let params = z.params;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let re = -(z.norm() + u) * &half;
    let first = &QuadField::from_rational(re, params) + &QuadField::i_sqrt_d(&(t * &half), params);
    [first, z.clone(), QuadField::one(params)]
}

pub fn to_field_vec(v: &IntVector) -> HVector {
    [v[0].to_field(), v[1].to_field(), v[2].to_field()]
}

/// The primitive integral lift, normalised so that its last nonzero entry is
/// the canonical unit-class representative.
pub fn primitive_integral_lift(p: &BoundaryPoint, params: RingParams) -> Result<IntVector> {
    let hp = match p {
        BoundaryPoint::Infinity => {
            return Ok([QuadInt::one(params), QuadInt::zero(params), QuadInt::zero(params)])
        }
        BoundaryPoint::Finite(hp) => hp,
    };
    let v = standard_lift(&hp.z, &hp.t, &BigRational::zero());
    primitive_from_field(&v)
}

/// Scale a nonzero field vector to a primitive integral vector.
pub fn primitive_from_field(v: &HVector) -> Result<IntVector> {
    let params = v[0].params;
    let mut den = BigInt::one();
    for x in v {
        den = num_integer::Integer::lcm(&den, &x.denom_lcm());
    }
    let scale = BigRational::from_integer(den);
    let iv: Vec<QuadInt> = v.iter().map(|x| x.scale(&scale).to_int().expect("cleared")).collect();
    let g = gcd_all(&iv)?;
    let mut out: Vec<QuadInt> = iv
        .iter()
        .map(|x| (&x.to_field() / &g.to_field()).to_int().expect("gcd divides"))
        .collect();
    let last = out.iter().rev().find(|x| !x.is_zero()).ok_or(Error::ZeroVector)?;
    let u = last.unit_to_rep();
    for x in out.iter_mut() {
        *x = &*x * &u;
    }
    let _ = params;
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

fn int_herm(p: &IntVector, q: &IntVector) -> QuadInt {
    &(&(&q[0].conj() * &p[2]) + &(&q[1].conj() * &p[1])) + &(&q[2].conj() * &p[0])
}

/// |⟨P₀,Q₀⟩|² for primitive integral lifts.
pub fn level(p: &BoundaryPoint, q: &BoundaryPoint, params: RingParams) -> Result<BigInt> {
    let pl = primitive_integral_lift(p, params)?;
    let ql = primitive_integral_lift(q, params)?;
    Ok(int_herm(&pl, &ql).norm())
}

/// level(p, ∞).
pub fn depth(p: &BoundaryPoint, params: RingParams) -> Result<BigInt> {
    level(p, &BoundaryPoint::Infinity, params)
}

/// cosh²(d(π(Z),π(W))/2) = |⟨Z,W⟩|² / (⟨Z,Z⟩⟨W,W⟩).
pub fn bergman_distance_cosh2(z: &HVector, w: &HVector) -> Result<BigRational> {
    let zz = herm_product(z, z);
    let ww = herm_product(w, w);
    let (zr, zi) = zz.isd();
    let (wr, wi) = ww.isd();
    debug_assert!(zi.is_zero() && wi.is_zero());
    if !zr.is_negative() || !wr.is_negative() {
        return Err(Error::NotNegative);
    }
    Ok(herm_product(z, w).norm() / (zr * wr))
}

/// A 3×3 matrix over O_d, unitary for J, taken up to a unit scalar.
#[derive(Clone, Debug, Hash, PartialEq, Eq)]
pub struct GroupMatrix {
    m: [[QuadInt; 3]; 3],
}

pub fn is_unitary(m: &[[QuadInt; 3]; 3]) -> bool {
    let params = m[0][0].params;
    let g = GroupMatrix { m: m.clone() };
    let p = g.star().mul(&GroupMatrix::j(params)).mul(&g);
    p == GroupMatrix::j(params)
}

impl GroupMatrix {
    /// Checks M*JM = J.
    pub fn new(m: [[QuadInt; 3]; 3]) -> Result<Self> {
        if !is_unitary(&m) {
            return Err(Error::NotUnitary(format!("{:?}", fmt_rows(&m))));
        }
        Ok(GroupMatrix { m })
    }

    /// For matrices known to be unitary (products, inverses of group elements).
    pub(crate) fn from_trusted(m: [[QuadInt; 3]; 3]) -> Self {
        debug_assert!(is_unitary(&m));
        GroupMatrix { m }
    }

    pub fn from_ints(rows: [[(i64, i64); 3]; 3], params: RingParams) -> Result<Self> {
        let m = rows.map(|r| r.map(|(a, b)| QuadInt::from_ints(a, b, params)));
        GroupMatrix::new(m)
    }

    pub fn identity(params: RingParams) -> Self {
        let mut m = [[(); 3]; 3].map(|r| r.map(|_| QuadInt::zero(params)));
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = QuadInt::one(params);
        }
        GroupMatrix { m }
    }

    /// The form matrix J.
    pub fn j(params: RingParams) -> Self {
        let mut m = [[(); 3]; 3].map(|r| r.map(|_| QuadInt::zero(params)));
        for (i, row) in m.iter_mut().enumerate() {
            row[2 - i] = QuadInt::one(params);
        }
        GroupMatrix { m }
    }

    pub fn params(&self) -> RingParams {
        self.m[0][0].params
    }

    pub fn entry(&self, i: usize, j: usize) -> &QuadInt {
        &self.m[i][j]
    }

    pub fn rows(&self) -> &[[QuadInt; 3]; 3] {
        &self.m
    }

    pub fn col(&self, j: usize) -> IntVector {
        [self.m[0][j].clone(), self.m[1][j].clone(), self.m[2][j].clone()]
    }

    pub fn mul(&self, o: &GroupMatrix) -> GroupMatrix {
        let params = self.params();
        let mut out = [[(); 3]; 3].map(|r| r.map(|_| QuadInt::zero(params)));
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let mut acc = QuadInt::zero(params);
                for k in 0..3 {
                    if !self.m[i][k].is_zero() && !o.m[k][j].is_zero() {
                        acc = &acc + &(&self.m[i][k] * &o.m[k][j]);
                    }
                }
                *cell = acc;
            }
        }
        GroupMatrix { m: out }
    }

    /// Conjugate transpose.
    pub fn star(&self) -> GroupMatrix {
        let m = [0, 1, 2].map(|i| [0, 1, 2].map(|j| self.m[j][i].conj()));
        GroupMatrix { m }
    }

    /// M⁻¹ = J M* J.
    pub fn inverse(&self) -> GroupMatrix {
        let s = self.star();
        let m = [0, 1, 2].map(|i| [0, 1, 2].map(|j| s.m[2 - i][2 - j].clone()));
        GroupMatrix { m }
    }

    pub fn scalar(&self, u: &QuadInt) -> GroupMatrix {
        GroupMatrix { m: self.m.clone().map(|r| r.map(|x| &x * u)) }
    }

    /// True iff the matrix is a unit multiple of the identity.
    pub fn is_unit_scalar(&self) -> bool {
        let d = &self.m[0][0];
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    if &self.m[i][j] != d {
                        return false;
                    }
                } else if !self.m[i][j].is_zero() {
                    return false;
                }
            }
        }
        d.is_unit()
    }

    /// Representative of the projective class: the first nonzero entry is
    /// made its unit-class representative.
    pub fn normalized(&self) -> GroupMatrix {
        let first = self.m.iter().flatten().find(|x| !x.is_zero()).expect("nonzero matrix");
        self.scalar(&first.unit_to_rep())
    }

    pub fn proj_eq(&self, o: &GroupMatrix) -> bool {
        self.normalized() == o.normalized()
    }

    pub fn apply_int(&self, v: &IntVector) -> IntVector {
        let params = self.params();
        [0, 1, 2].map(|i| {
            let mut acc = QuadInt::zero(params);
            for (k, x) in v.iter().enumerate() {
                acc = &acc + &(&self.m[i][k] * x);
            }
            acc
        })
    }

    pub fn apply_vec(&self, v: &HVector) -> HVector {
        let params = self.params();
        [0, 1, 2].map(|i| {
            let mut acc = QuadField::zero(params);
            for (k, x) in v.iter().enumerate() {
                acc = &acc + &(&self.m[i][k].to_field() * x);
            }
            acc
        })
    }

    /// Projective image of a boundary point.
    pub fn apply(&self, p: &BoundaryPoint) -> BoundaryPoint {
        let params = self.params();
        let v = match p {
            BoundaryPoint::Infinity => to_field_vec(&self.col(0)),
            BoundaryPoint::Finite(hp) => {
                self.apply_vec(&standard_lift(&hp.z, &hp.t, &BigRational::zero()))
            }
        };
        vector_to_point(&v, params)
    }
}

/// Projective boundary point of an isotropic vector.
pub fn vector_to_point(v: &HVector, params: RingParams) -> BoundaryPoint {
    if v[1].is_zero() && v[2].is_zero() {
        return BoundaryPoint::Infinity;
    }
    debug_assert!(!v[2].is_zero(), "vector is not isotropic");
    let z = &v[1] / &v[2];
    let f = &v[0] / &v[2];
    let t = f.im_coef() * BigRational::from_integer(BigInt::from(2));
    let _ = params;
    BoundaryPoint::Finite(HeisPoint::new(z, t))
}

fn fmt_rows(m: &[[QuadInt; 3]; 3]) -> String {
    m.iter()
        .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join(" / ")
}

impl fmt::Display for GroupMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.m.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let cells: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            write!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// A matrix with a name, as stored in matrix files.
#[derive(Clone, Debug)]
pub struct NamedMatrix {
    pub name: String,
    pub matrix: GroupMatrix,
}

/// Parse a matrix file: records of a header `name d` followed by nine
/// entries in row-major order. `#` starts a comment.
pub fn parse_matrix_file(text: &str, file: &str) -> Result<Vec<NamedMatrix>> {
    let mut out = Vec::new();
    let mut header: Option<(String, RingParams, usize)> = None;
    let mut cells: Vec<QuadInt> = Vec::new();
    let err = |line: usize, msg: String| Error::ParseAt { file: file.to_string(), line, msg };
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = ln + 1;
        match &header {
            None => {
                let mut it = line.split_whitespace();
                let name = it.next().unwrap_or("").to_string();
                let d: u32 = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(lineno, format!("expected header `name d`, got `{}`", line)))?;
                if it.next().is_some() {
                    return Err(err(lineno, "trailing tokens after header".into()));
                }
                let params = RingParams::new(d).map_err(|e| err(lineno, e.to_string()))?;
                header = Some((name, params, lineno));
            }
            Some((_, params, _)) => {
                for tok in line.split_whitespace() {
                    let x = parse_quad_int(tok, *params).map_err(|e| err(lineno, e.to_string()))?;
                    cells.push(x);
                }
                if cells.len() > 9 {
                    return Err(err(lineno, "more than 9 entries in matrix record".into()));
                }
                if cells.len() == 9 {
                    let (name, _, hl) = header.take().expect("header present");
                    let mut it = cells.drain(..);
                    let m = [0, 1, 2].map(|_| [0, 1, 2].map(|_| it.next().expect("9 cells")));
                    drop(it);
                    let matrix = GroupMatrix::new(m).map_err(|e| err(hl, format!("{}: {}", name, e)))?;
                    out.push(NamedMatrix { name, matrix });
                }
            }
        }
    }
    if let Some((name, _, hl)) = header {
        return Err(err(hl, format!("matrix {} has {} of 9 entries", name, cells.len())));
    }
    Ok(out)
}

pub fn write_matrix_file(ms: &[NamedMatrix]) -> String {
    let mut s = String::new();
    for nm in ms {
        s.push_str(&format!("{} {}\n{}\n\n", nm.name, nm.matrix.params().d(), nm.matrix));
    }
    s
}
