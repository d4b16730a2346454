//! Heisenberg group law, the Cygan metrics, and the cusp stabilizer Γ_∞ for
//! d = 2 and d = 11: normal forms and reduction into the prism D_∞.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::hermitian::GroupMatrix;
use crate::ring::{parse_quad, parse_rational, QuadField, QuadInt, RingParams};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// A boundary point (z, t√d) of the Heisenberg group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HeisPoint {
    pub z: QuadField,
    pub t: BigRational,
}

impl HeisPoint {
    pub fn new(z: QuadField, t: BigRational) -> Self {
        HeisPoint { z, t }
    }

    pub fn origin(params: RingParams) -> Self {
        HeisPoint::new(QuadField::zero(params), BigRational::zero())
    }

    pub fn params(&self) -> RingParams {
        self.z.params
    }

    /// Heisenberg product (z₁+z₂, v₁+v₂+2Im(z₁z̄₂)).
    pub fn mul(&self, o: &HeisPoint) -> HeisPoint {
        let cross = (&self.z * &o.z.conj()).im_coef();
        HeisPoint::new(&self.z + &o.z, &self.t + &o.t + cross * rat(2))
    }

    pub fn inverse(&self) -> HeisPoint {
        HeisPoint::new(-&self.z, -self.t.clone())
    }

    pub fn pow(&self, k: i64) -> HeisPoint {
        let kk = rat(k);
        HeisPoint::new(self.z.scale(&kk), &self.t * &kk)
    }

    /// The rotation R: (z, t) ↦ (−z, t).
    pub fn rotate(&self) -> HeisPoint {
        HeisPoint::new(-&self.z, self.t.clone())
    }

    /// Order key (Re z, Im z / √d, t).
    pub fn key(&self) -> (BigRational, BigRational, BigRational) {
        let (x, y) = self.z.isd();
        (x, y, self.t.clone())
    }

    /// Parse `z ; t`.
    pub fn parse(s: &str, params: RingParams) -> Result<HeisPoint> {
        let (z, t) = s
            .split_once(';')
            .ok_or_else(|| Error::Parse(format!("expected `z ; t`, got `{}`", s.trim())))?;
        Ok(HeisPoint::new(parse_quad(z, params)?, parse_rational(t)?))
    }
}

impl fmt::Display for HeisPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ; {}", self.z, self.t)
    }
}

/// Exact fourth power of the Cygan distance.
pub fn cygan_dist4(a: &HeisPoint, b: &HeisPoint) -> BigRational {
    extended_cygan_dist4(a, &BigRational::zero(), b, &BigRational::zero())
}

/// Exact fourth power of the extended Cygan distance between (a, u₁) and (b, u₂).
pub fn extended_cygan_dist4(a: &HeisPoint, u1: &BigRational, b: &HeisPoint, u2: &BigRational) -> BigRational {
    let dz = (&a.z - &b.z).norm();
    let vert = &a.t - &b.t + (&a.z * &b.z.conj()).im_coef() * rat(2);
    let d = rat(a.params().d() as i64);
    let h = dz + (u1 - u2).abs();
    &h * &h + d * &vert * &vert
}

/// Heisenberg translation matrix with field entries.
pub fn translation_field_matrix(a: &HeisPoint) -> [[QuadField; 3]; 3] {
    let p = a.params();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let corner = &QuadField::from_rational(-a.z.norm() * &half, p) + &QuadField::i_sqrt_d(&(&a.t * &half), p);
    let (o, z) = (QuadField::one(p), QuadField::zero(p));
    [[o.clone(), -a.z.conj(), corner], [z.clone(), o.clone(), a.z.clone()], [z.clone(), z, o]]
}

/// Heisenberg translation matrix, or `None` when its entries are not integral.
pub fn translation_matrix(a: &HeisPoint) -> Option<GroupMatrix> {
    let f = translation_field_matrix(a);
    let mut m: Vec<QuadInt> = Vec::with_capacity(9);
    for x in f.iter().flatten() {
        m.push(x.to_int()?);
    }
    let mut it = m.into_iter();
    let rows = [0, 1, 2].map(|_| [0, 1, 2].map(|_| it.next().expect("9 entries")));
    Some(GroupMatrix::from_trusted(rows))
}

/// diag(1, −1, 1).
pub fn rotation_matrix_r(params: RingParams) -> GroupMatrix {
    GroupMatrix::from_ints([[(1, 0), (0, 0), (0, 0)], [(0, 0), (-1, 0), (0, 0)], [(0, 0), (0, 0), (1, 0)]], params)
        .expect("R is unitary")
}

/// An element of Γ_∞ acting by x ↦ shift · R^flip(x).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CuspElement {
    pub flip: bool,
    pub shift: HeisPoint,
}

impl CuspElement {
    pub fn identity(params: RingParams) -> Self {
        CuspElement { flip: false, shift: HeisPoint::origin(params) }
    }

    pub fn translation(shift: HeisPoint) -> Self {
        CuspElement { flip: false, shift }
    }

    pub fn rotation(params: RingParams) -> Self {
        CuspElement { flip: true, shift: HeisPoint::origin(params) }
    }

    pub fn act(&self, p: &HeisPoint) -> HeisPoint {
        if self.flip {
            self.shift.mul(&p.rotate())
        } else {
            self.shift.mul(p)
        }
    }

    /// self ∘ o
    pub fn compose(&self, o: &CuspElement) -> CuspElement {
        let s = if self.flip { o.shift.rotate() } else { o.shift.clone() };
        CuspElement { flip: self.flip ^ o.flip, shift: self.shift.mul(&s) }
    }

    pub fn inverse(&self) -> CuspElement {
        let inv = self.shift.inverse();
        CuspElement { flip: self.flip, shift: if self.flip { inv.rotate() } else { inv } }
    }

    /// T_shift · R^flip.
    pub fn matrix(&self) -> GroupMatrix {
        let t = translation_matrix(&self.shift).expect("cusp element with integral matrix");
        if self.flip {
            t.mul(&rotation_matrix_r(self.shift.params()))
        } else {
            t
        }
    }
}

/// Exponents (p, n, m, l) of R^p T_vert^n T_x^m T_y^l.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CuspNormalForm {
    pub p: u8,
    pub n: i64,
    pub m: i64,
    pub l: i64,
}

impl CuspNormalForm {
    pub fn new(p: u8, n: i64, m: i64, l: i64) -> Self {
        CuspNormalForm { p, n, m, l }
    }

    pub fn is_identity(&self) -> bool {
        *self == CuspNormalForm::default()
    }
}

impl fmt::Display for CuspNormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.p, self.n, self.m, self.l)
    }
}

/// The cusp stabilizer Γ_∞ for d = 2 or d = 11 with its standard generators.
#[derive(Clone, Debug)]
pub struct CuspGroup {
    pub params: RingParams,
    pub vert: HeisPoint,
    pub x: HeisPoint,
    pub y: HeisPoint,
    /// Generator names in the order (vertical, x, y, R).
    pub names: [&'static str; 4],
}

impl CuspGroup {
    pub fn new(d: u32) -> Result<CuspGroup> {
        let params = RingParams::new(d)?;
        let pt = |a: i64, b: i64, t: i64| HeisPoint::new(QuadField::from_ints(a, b, params), rat(t));
        match d {
            2 => Ok(CuspGroup {
                params,
                vert: pt(0, 0, 2),
                x: pt(2, 0, 0),
                y: pt(0, 1, 0),
                names: ["T_v", "T_2", "T_i2", "R"],
            }),
            11 => Ok(CuspGroup {
                params,
                vert: pt(0, 0, 2),
                x: pt(1, 0, 1),
                y: pt(0, 1, 1),
                names: ["T_v", "T_1", "T_tau", "R"],
            }),
            _ => Err(Error::Unsupported(format!("cusp group for d = {}", d))),
        }
    }

    /// Vertical period in t.
    pub fn period(&self) -> BigRational {
        self.vert.t.clone()
    }

    pub fn element(&self, nf: &CuspNormalForm) -> CuspElement {
        let h = self.vert.pow(nf.n).mul(&self.x.pow(nf.m)).mul(&self.y.pow(nf.l));
        if nf.p == 1 {
            CuspElement { flip: true, shift: h.rotate() }
        } else {
            CuspElement { flip: false, shift: h }
        }
    }

    pub fn matrix(&self, nf: &CuspNormalForm) -> GroupMatrix {
        self.element(nf).matrix()
    }

    /// Lattice coordinates (α, β) with z = α·x.z + β·y.z.
    pub fn lattice_coords(&self, z: &QuadField) -> (BigRational, BigRational) {
        let (e1, e2) = (&self.x.z, &self.y.z);
        let det = &e1.a * &e2.b - &e1.b * &e2.a;
        let alpha = (&z.a * &e2.b - &z.b * &e2.a) / &det;
        let beta = (&e1.a * &z.b - &e1.b * &z.a) / &det;
        (alpha, beta)
    }

    pub fn normal_form_of(&self, e: &CuspElement) -> Result<CuspNormalForm> {
        let h = if e.flip { e.shift.rotate() } else { e.shift.clone() };
        let (alpha, beta) = self.lattice_coords(&h.z);
        if !alpha.is_integer() || !beta.is_integer() {
            return Err(Error::NotInCuspGroup(format!("horizontal part {} off the lattice", h.z)));
        }
        let m = alpha.to_integer().to_i64().ok_or_else(|| Error::NotInCuspGroup("huge".into()))?;
        let l = beta.to_integer().to_i64().ok_or_else(|| Error::NotInCuspGroup("huge".into()))?;
        let h0 = self.x.pow(m).mul(&self.y.pow(l));
        let n = (&h.t - &h0.t) / self.period();
        if !n.is_integer() {
            return Err(Error::NotInCuspGroup(format!("vertical part {} off the lattice", h.t)));
        }
        let n = n.to_integer().to_i64().ok_or_else(|| Error::NotInCuspGroup("huge".into()))?;
        Ok(CuspNormalForm { p: e.flip as u8, n, m, l })
    }

    /// Read a matrix fixing ∞ as a Γ_∞ element.
    pub fn element_of_matrix(&self, m: &GroupMatrix) -> Result<CuspElement> {
        let bad = |why: &str| Error::NotInCuspGroup(why.to_string());
        if !m.entry(1, 0).is_zero() || !m.entry(2, 0).is_zero() || !m.entry(2, 1).is_zero() {
            return Err(bad("not upper triangular"));
        }
        let lam = m.entry(2, 2);
        if !lam.is_unit() {
            return Err(bad("corner entry is not a unit"));
        }
        let m = m.scalar(&lam.conj());
        if !m.entry(0, 0).is_one() {
            return Err(bad("diagonal not realizable"));
        }
        let flip = if m.entry(1, 1).is_one() {
            false
        } else if (-m.entry(1, 1)).is_one() {
            true
        } else {
            return Err(bad("middle diagonal entry is not ±1"));
        };
        let z = m.entry(1, 2).to_field();
        let t = m.entry(0, 2).to_field().im_coef() * rat(2);
        let e = CuspElement { flip, shift: HeisPoint::new(z, t) };
        if e.matrix() != m {
            return Err(bad("entries inconsistent with a Heisenberg translation"));
        }
        Ok(e)
    }

    /// The normal form of a matrix in Γ_∞.
    pub fn normal_form(&self, m: &GroupMatrix) -> Result<CuspNormalForm> {
        self.normal_form_of(&self.element_of_matrix(m)?)
    }

    /// Closed base triangle test on lattice coordinates.
    pub fn in_base_triangle(&self, z: &QuadField) -> bool {
        let (a, b) = self.lattice_coords(z);
        !a.is_negative() && !b.is_negative() && (&a + &b) <= rat(1)
    }

    /// True if p lies in D_∞: z in the closed base triangle and 0 ≤ t < period.
    pub fn in_prism(&self, p: &HeisPoint) -> bool {
        self.in_base_triangle(&p.z) && !p.t.is_negative() && p.t < self.period()
    }

    /// Reduce p into D_∞. Returns the representative and g with g·p = rep.
    /// Boundary ties are broken by the smallest (Re z, Im z/√d, t).
    pub fn canonicalize(&self, p: &HeisPoint) -> (HeisPoint, CuspNormalForm) {
        let (rep, e) = self.canonicalize_element(p);
        let nf = self.normal_form_of(&e).expect("canonicalizing element lies in Γ_∞");
        (rep, nf)
    }

    pub fn canonicalize_element(&self, p: &HeisPoint) -> (HeisPoint, CuspElement) {
        let params = self.params;
        let (alpha, beta) = self.lattice_coords(&p.z);
        let m0 = -alpha.floor().to_integer().to_i64().expect("moderate coordinates");
        let l0 = -beta.floor().to_integer().to_i64().expect("moderate coordinates");
        let mut g = CuspElement::translation(self.x.pow(m0).mul(&self.y.pow(l0)));
        let q = g.act(p);
        let (a1, b1) = self.lattice_coords(&q.z);
        if a1 + b1 > rat(1) {
            let fold = CuspElement { flip: true, shift: self.x.mul(&self.y) };
            g = fold.compose(&g);
        }
        let base = g.act(p);
        debug_assert!(self.in_base_triangle(&base.z));
        let period = self.period();
        let mut best: Option<(HeisPoint, CuspElement)> = None;
        for flip in [false, true] {
            for m in -2..=2 {
                for l in -2..=2 {
                    let e = CuspElement { flip, shift: self.x.pow(m).mul(&self.y.pow(l)) };
                    let c = e.act(&base);
                    if !self.in_base_triangle(&c.z) {
                        continue;
                    }
                    let k = -(&c.t / &period).floor().to_integer().to_i64().expect("moderate t");
                    let v = CuspElement::translation(self.vert.pow(k));
                    let e = v.compose(&e);
                    let c = v.act(&c);
                    let better = match &best {
                        None => true,
                        Some((b, _)) => c.key().cmp(&b.key()) == Ordering::Less,
                    };
                    if better {
                        best = Some((c, e));
                    }
                }
            }
        }
        let (rep, e) = best.expect("base point itself is a candidate");
        let _ = params;
        (rep, e.compose(&g))
    }

    /// Some g with g·a = b, if a and b are Γ_∞-equivalent.
    pub fn orbit_match(&self, a: &HeisPoint, b: &HeisPoint) -> Option<CuspNormalForm> {
        let (ra, ga) = self.canonicalize_element(a);
        let (rb, gb) = self.canonicalize_element(b);
        if ra != rb {
            return None;
        }
        self.normal_form_of(&gb.inverse().compose(&ga)).ok()
    }

    pub fn prism(&self) -> FundamentalPrism {
        let p = self.params;
        let base = [QuadField::zero(p), self.x.z.clone(), self.y.z.clone()];
        let mut vertices = Vec::new();
        for t in [BigRational::zero(), self.period()] {
            for z in &base {
                vertices.push(HeisPoint::new(z.clone(), t.clone()));
            }
        }
        FundamentalPrism { d: p.d(), vertices }
    }

    /// Generators as named matrices, in the order of `names`.
    pub fn generator_matrices(&self) -> Vec<(String, GroupMatrix)> {
        let gens = [
            CuspNormalForm::new(0, 1, 0, 0),
            CuspNormalForm::new(0, 0, 1, 0),
            CuspNormalForm::new(0, 0, 0, 1),
            CuspNormalForm::new(1, 0, 0, 0),
        ];
        self.names.iter().zip(gens.iter()).map(|(n, g)| (n.to_string(), self.matrix(g))).collect()
    }

    /// The relators of Γ_∞ from the literature, in presentation-file syntax.
    pub fn relator_texts(&self) -> Vec<String> {
        let [v, x, y, r] = self.names;
        match self.params.d() {
            2 => vec![
                format!("{v}^4 [{x},{y}]"),
                format!("[{x},{v}]"),
                format!("[{y},{v}]"),
                format!("{r}^2"),
                format!("[{r},{v}]"),
                format!("({r} {x})^2"),
                format!("({r} {y})^2"),
            ],
            _ => vec![
                format!("{v} [{x},{y}]"),
                format!("[{x},{v}]"),
                format!("[{y},{v}]"),
                format!("{r}^2"),
                format!("[{r},{v}]"),
                format!("[{x},{r}] {x}^-2 {v}"),
                format!("[{y},{r}] {y}^-2 {v}"),
            ],
        }
    }

    /// Word (as generator-name/exponent pairs) for a normal form.
    pub fn word(&self, nf: &CuspNormalForm) -> Vec<(&'static str, i64)> {
        let [v, x, y, r] = self.names;
        let mut w = Vec::new();
        if nf.p == 1 {
            w.push((r, 1));
        }
        for (name, e) in [(v, nf.n), (x, nf.m), (y, nf.l)] {
            if e != 0 {
                w.push((name, e));
            }
        }
        w
    }
}

/// The prism D_∞: base triangle times one vertical period.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FundamentalPrism {
    pub d: u32,
    pub vertices: Vec<HeisPoint>,
}

impl FundamentalPrism {
    pub fn to_text(&self) -> String {
        let mut s = format!("prism {}\n", self.d);
        for v in &self.vertices {
            s.push_str(&format!("{}\n", v));
        }
        s
    }

    pub fn parse(text: &str) -> Result<FundamentalPrism> {
        let mut lines = text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty prism file".into()))?;
        let d: u32 = header
            .strip_prefix("prism")
            .and_then(|r| r.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad prism header `{}`", header)))?;
        let params = RingParams::new(d)?;
        let vertices = lines.map(|l| HeisPoint::parse(l, params)).collect::<Result<Vec<_>>>()?;
        Ok(FundamentalPrism { d, vertices })
    }
}
