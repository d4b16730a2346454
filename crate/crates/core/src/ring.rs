//! Exact arithmetic in Q(i√d) and its ring of integers O_d.
//!
//! Elements are stored in ω-coordinates `a + bω`, where ω = (1+i√d)/2 when
//! d ≡ 3 (mod 4) and ω = i√d otherwise. With this basis an element is
//! integral exactly when both coordinates are integers.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Parameters of the ring O_d.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingParams {
    d: u32,
}

impl RingParams {
    /// `d` must be a square-free positive integer.
    pub fn new(d: u32) -> Result<Self> {
        if d == 0 || (2..=d).any(|p| p * p <= d && d % (p * p) == 0) {
            return Err(Error::BadParams(d));
        }
        Ok(RingParams { d })
    }

    pub fn d(self) -> u32 {
        self.d
    }

    /// True when ω = (1+i√d)/2, i.e. d ≡ 3 (mod 4).
    pub fn half_omega(self) -> bool {
        self.d % 4 == 3
    }

    pub fn is_euclidean(self) -> bool {
        matches!(self.d, 1 | 2 | 3 | 7 | 11)
    }

    fn require_euclidean(self) -> Result<()> {
        if self.is_euclidean() {
            Ok(())
        } else {
            Err(Error::NotEuclidean(self.d))
        }
    }

    // ω² = c0 + c1·ω
    fn omega_sq(self) -> (i64, i64) {
        if self.half_omega() {
            (-((1 + self.d as i64) / 4), 1)
        } else {
            (-(self.d as i64), 0)
        }
    }
}

/// Coefficient types usable in [`Quad`].
pub trait Coeff: Clone + Ord + Signed + fmt::Display {
    fn from_i64(v: i64) -> Self;
}

impl Coeff for BigInt {
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
}

impl Coeff for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

/// The element `a + bω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quad<T> {
    pub a: T,
    pub b: T,
    pub params: RingParams,
}

/// An element of the field Q(i√d).
pub type QuadField = Quad<BigRational>;
/// An element of O_d.
pub type QuadInt = Quad<BigInt>;

impl<T: Coeff> Quad<T> {
    pub fn new(a: T, b: T, params: RingParams) -> Self {
        Quad { a, b, params }
    }

    pub fn from_ints(a: i64, b: i64, params: RingParams) -> Self {
        Quad::new(T::from_i64(a), T::from_i64(b), params)
    }

    pub fn zero(params: RingParams) -> Self {
        Quad::from_ints(0, 0, params)
    }

    pub fn one(params: RingParams) -> Self {
        Quad::from_ints(1, 0, params)
    }

    pub fn omega(params: RingParams) -> Self {
        Quad::from_ints(0, 1, params)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    /// Complex conjugate. For ω = (1+i√d)/2 we have ω̄ = 1 − ω.
    pub fn conj(&self) -> Self {
        if self.params.half_omega() {
            Quad::new(self.a.clone() + self.b.clone(), -self.b.clone(), self.params)
        } else {
            Quad::new(self.a.clone(), -self.b.clone(), self.params)
        }
    }

    /// N(x) = x·x̄.
    pub fn norm(&self) -> T {
        let (a, b) = (&self.a, &self.b);
        if self.params.half_omega() {
            let k = T::from_i64((1 + self.params.d as i64) / 4);
            a.clone() * a.clone() + a.clone() * b.clone() + b.clone() * b.clone() * k
        } else {
            let d = T::from_i64(self.params.d as i64);
            a.clone() * a.clone() + b.clone() * b.clone() * d
        }
    }

    pub fn scale(&self, k: &T) -> Self {
        Quad::new(self.a.clone() * k.clone(), self.b.clone() * k.clone(), self.params)
    }

    /// Lexicographic key on ω-coordinates.
    pub fn lex_gt(&self, other: &Self) -> bool {
        (&self.a, &self.b) > (&other.a, &other.b)
    }

    fn is_class_candidate(&self) -> bool {
        self.a.is_positive() || (self.a.is_zero() && self.b.is_positive())
    }
}

impl<'a, T: Coeff> Add<&'a Quad<T>> for &'a Quad<T> {
    type Output = Quad<T>;
    fn add(self, o: &Quad<T>) -> Quad<T> {
        debug_assert_eq!(self.params, o.params);
        Quad::new(self.a.clone() + o.a.clone(), self.b.clone() + o.b.clone(), self.params)
    }
}

impl<'a, T: Coeff> Sub<&'a Quad<T>> for &'a Quad<T> {
    type Output = Quad<T>;
    fn sub(self, o: &Quad<T>) -> Quad<T> {
        debug_assert_eq!(self.params, o.params);
        Quad::new(self.a.clone() - o.a.clone(), self.b.clone() - o.b.clone(), self.params)
    }
}

impl<'a, T: Coeff> Mul<&'a Quad<T>> for &'a Quad<T> {
    type Output = Quad<T>;
    fn mul(self, o: &Quad<T>) -> Quad<T> {
        debug_assert_eq!(self.params, o.params);
        let (c0, c1) = self.params.omega_sq();
        let bb = self.b.clone() * o.b.clone();
        let a = self.a.clone() * o.a.clone() + bb.clone() * T::from_i64(c0);
        let b = self.a.clone() * o.b.clone() + self.b.clone() * o.a.clone() + bb * T::from_i64(c1);
        Quad::new(a, b, self.params)
    }
}

impl<T: Coeff> Neg for &Quad<T> {
    type Output = Quad<T>;
    fn neg(self) -> Quad<T> {
        Quad::new(-self.a.clone(), -self.b.clone(), self.params)
    }
}

impl<T: Coeff> Neg for Quad<T> {
    type Output = Quad<T>;
    fn neg(self) -> Quad<T> {
        -&self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl<T: Coeff> $tr for Quad<T> {
            type Output = Quad<T>;
            fn $m(self, o: Quad<T>) -> Quad<T> {
                (&self).$m(&o)
            }
        }
        impl<'a, T: Coeff> $tr<&'a Quad<T>> for Quad<T> {
            type Output = Quad<T>;
            fn $m(self, o: &Quad<T>) -> Quad<T> {
                (&self).$m(o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// floor(x + 1/2)
fn round_rat(x: &BigRational) -> BigInt {
    (x + BigRational::new(BigInt::one(), BigInt::from(2))).floor().to_integer()
}

impl QuadField {
    pub fn from_rational(r: BigRational, params: RingParams) -> Self {
        Quad::new(r, BigRational::zero(), params)
    }

    /// Build from coordinates in the basis (1, i√d).
    pub fn from_isd(x: BigRational, y: BigRational, params: RingParams) -> Self {
        if params.half_omega() {
            let b = &y * rat(2);
            Quad::new(x - y, b, params)
        } else {
            Quad::new(x, y, params)
        }
    }

    /// Coordinates (X, Y) with self = X + Y·i√d.
    pub fn isd(&self) -> (BigRational, BigRational) {
        if self.params.half_omega() {
            let h = &self.b / rat(2);
            (&self.a + &h, h)
        } else {
            (self.a.clone(), self.b.clone())
        }
    }

    /// Real part.
    pub fn re(&self) -> BigRational {
        self.isd().0
    }

    /// Imaginary part divided by √d.
    pub fn im_coef(&self) -> BigRational {
        self.isd().1
    }

    /// t·i√d as a field element.
    pub fn i_sqrt_d(t: &BigRational, params: RingParams) -> Self {
        QuadField::from_isd(BigRational::zero(), t.clone(), params)
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.norm();
        let c = self.conj();
        Ok(Quad::new(c.a / &n, c.b / &n, self.params))
    }

    pub fn is_integral(&self) -> bool {
        self.a.is_integer() && self.b.is_integer()
    }

    pub fn to_int(&self) -> Option<QuadInt> {
        if self.is_integral() {
            Some(Quad::new(self.a.to_integer(), self.b.to_integer(), self.params))
        } else {
            None
        }
    }

    /// Least common multiple of the coordinate denominators.
    pub fn denom_lcm(&self) -> BigInt {
        self.a.denom().lcm(self.b.denom())
    }
}

impl<'a> Div<&'a QuadField> for &'a QuadField {
    type Output = QuadField;
    fn div(self, o: &QuadField) -> QuadField {
        self * &o.inv().expect("division by zero in QuadField")
    }
}

impl QuadInt {
    pub fn to_field(&self) -> QuadField {
        Quad::new(
            BigRational::from_integer(self.a.clone()),
            BigRational::from_integer(self.b.clone()),
            self.params,
        )
    }

    pub fn is_unit(&self) -> bool {
        self.norm().is_one()
    }

    /// Euclidean division `x = q·y + r` with N(r) < N(y).
    ///
    /// The quotient rounds x/y in (1, i√d)-coordinates and then takes the
    /// neighbouring lattice point with the smallest remainder norm.
    pub fn divmod(&self, y: &QuadInt) -> Result<(QuadInt, QuadInt)> {
        self.params.require_euclidean()?;
        if y.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let exact = &self.to_field() / &y.to_field();
        let (x0, y0) = exact.isd();
        let (a0, b0) = if self.params.half_omega() {
            let b = round_rat(&(&y0 * rat(2)));
            let a = round_rat(&(&x0 - BigRational::new(b.clone(), BigInt::from(2))));
            (a, b)
        } else {
            (round_rat(&x0), round_rat(&y0))
        };
        let mut best: Option<(BigInt, QuadInt, QuadInt)> = None;
        for da in [0i64, -1, 1] {
            for db in [0i64, -1, 1] {
                let q = Quad::new(&a0 + da, &b0 + db, self.params);
                let r = self - &(&q * y);
                let n = r.norm();
                if best.as_ref().map_or(true, |(bn, _, _)| n < *bn) {
                    best = Some((n, q, r));
                }
            }
        }
        let (_, q, r) = best.expect("nonempty candidate set");
        debug_assert!(r.norm() < y.norm());
        Ok((q, r))
    }

    /// Greatest common divisor, normalised to its unit-class representative.
    pub fn gcd(&self, y: &QuadInt) -> Result<QuadInt> {
        self.params.require_euclidean()?;
        if self.is_zero() && y.is_zero() {
            return Err(Error::ZeroGcd);
        }
        let (mut a, mut b) = (self.clone(), y.clone());
        while !b.is_zero() {
            let (_, r) = a.divmod(&b)?;
            a = b;
            b = r;
        }
        Ok(a.unit_rep())
    }

    /// The canonical associate: lexicographically largest (a, b) among
    /// associates with a > 0, or a = 0 and b > 0.
    pub fn unit_rep(&self) -> QuadInt {
        if self.is_zero() {
            return self.clone();
        }
        units(self.params)
            .iter()
            .map(|u| self * u)
            .filter(|x| x.is_class_candidate())
            .max_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)))
            .expect("some associate is a class candidate")
    }

    /// The unit u with `self · u == self.unit_rep()`.
    pub fn unit_to_rep(&self) -> QuadInt {
        let target = self.unit_rep();
        units(self.params)
            .into_iter()
            .find(|u| self * u == target)
            .unwrap_or_else(|| QuadInt::one(self.params))
    }
}

/// All units of O_d, in lexicographic order.
pub fn units(params: RingParams) -> Vec<QuadInt> {
    let mut out = Vec::new();
    for a in -2..=2 {
        for b in -2..=2 {
            let x = QuadInt::from_ints(a, b, params);
            if x.norm().is_one() {
                out.push(x);
            }
        }
    }
    out
}

/// All q with N(q) = k, one per unit class, sorted lexicographically.
pub fn solve_norm_equation(k: u64, params: RingParams) -> Vec<QuadInt> {
    let d = params.d as i128;
    let k = k as i128;
    let mut out: Vec<QuadInt> = Vec::new();
    // 4k = (2a+b)² + d·b² for half ω, k = a² + d·b² otherwise.
    let target = if params.half_omega() { 4 * k } else { k };
    let mut b: i128 = 0;
    while d * b * b <= target {
        for bs in [b, -b] {
            let rest = target - d * bs * bs;
            let s = isqrt(rest);
            if s * s != rest {
                continue;
            }
            for ss in [s, -s] {
                let (a, ok) = if params.half_omega() {
                    let num = ss - bs;
                    (num.div_euclid(2), num.rem_euclid(2) == 0)
                } else {
                    (ss, true)
                };
                if ok {
                    let q = Quad::new(BigInt::from(a), BigInt::from(bs), params).unit_rep();
                    if !out.contains(&q) {
                        out.push(q);
                    }
                }
            }
        }
        b += 1;
    }
    out.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
    out
}

fn isqrt(n: i128) -> i128 {
    if n < 0 {
        return -1;
    }
    let mut r = (n as f64).sqrt() as i128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// gcd of several entries (zeros skipped).
pub fn gcd_all(v: &[QuadInt]) -> Result<QuadInt> {
    let mut g: Option<QuadInt> = None;
    for x in v.iter().filter(|x| !x.is_zero()) {
        g = Some(match g {
            None => x.unit_rep(),
            Some(g) => g.gcd(x)?,
        });
    }
    g.ok_or(Error::ZeroVector)
}

/// True iff the gcd of the entries is a unit.
pub fn is_primitive(v: &[QuadInt]) -> Result<bool> {
    if let Some(x) = v.first() {
        x.params.require_euclidean()?;
    }
    Ok(gcd_all(v)?.is_unit())
}

impl<T: Coeff> fmt::Display for Quad<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let mag = self.b.abs();
        let bpart = if mag.is_one() { "w".to_string() } else { format!("{}*w", mag) };
        if self.a.is_zero() {
            if self.b.is_negative() {
                write!(f, "-{}", bpart)
            } else {
                write!(f, "{}", bpart)
            }
        } else {
            let sign = if self.b.is_negative() { '-' } else { '+' };
            write!(f, "{}{}{}", self.a, sign, bpart)
        }
    }
}

/// Parse a rational: integers, `p/q`, or finite decimals.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational `{}`", s));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let whole: BigInt = if ip.is_empty() { BigInt::zero() } else { ip.parse().map_err(|_| bad())? };
        let frac: BigInt = fp.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), fp.len());
        let v = BigRational::new(whole * &scale + frac, scale);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Parse an element in the grammar `a+b*w`, also accepting `i*sqrt(d)`,
/// `sqrt(-d)`, `tau` and (for d = 1) `i`.
pub fn parse_quad(s: &str, params: RingParams) -> Result<QuadField> {
    let src: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = |m: &str| Error::Parse(format!("bad ring element `{}`: {}", s.trim(), m));
    if src.is_empty() {
        return Err(bad("empty"));
    }
    let mut terms: Vec<(bool, String)> = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut neg = false;
    for (i, c) in src.chars().enumerate() {
        match c {
            '(' => {
                depth += 1;
                cur.push(c)
            }
            ')' => {
                depth -= 1;
                cur.push(c)
            }
            '+' | '-' if depth == 0 => {
                if i == 0 {
                    neg = c == '-';
                } else {
                    if cur.is_empty() {
                        return Err(bad("dangling sign"));
                    }
                    terms.push((neg, std::mem::take(&mut cur)));
                    neg = c == '-';
                }
            }
            _ => cur.push(c),
        }
    }
    if cur.is_empty() {
        return Err(bad("dangling sign"));
    }
    terms.push((neg, cur));

    let d = params.d();
    let mut total = QuadField::zero(params);
    for (neg, body) in terms {
        let mut coef = rat(1);
        let mut basis: Option<QuadField> = None;
        let mut has_i = false;
        let mut has_sqrt = false;
        for factor in body.split('*') {
            let sq = factor
                .strip_prefix("sqrt(")
                .and_then(|r| r.strip_suffix(')'))
                .map(|inner| inner.to_string());
            match factor {
                "w" | "tau" | "ω" | "τ" => {
                    if basis.is_some() {
                        return Err(bad("repeated basis symbol"));
                    }
                    basis = Some(QuadField::omega(params));
                }
                "i" => {
                    if has_i {
                        return Err(bad("repeated i"));
                    }
                    has_i = true;
                }
                _ if sq.is_some() => {
                    let inner = sq.unwrap();
                    let (imag, num) = match inner.strip_prefix('-') {
                        Some(r) => (true, r.to_string()),
                        None => (false, inner),
                    };
                    let dd: u32 = num.parse().map_err(|_| bad("bad sqrt argument"))?;
                    if dd != d {
                        return Err(bad(&format!("sqrt({}) in a d = {} ring", dd, d)));
                    }
                    if has_sqrt || (imag && has_i) {
                        return Err(bad("repeated sqrt"));
                    }
                    has_sqrt = true;
                    has_i |= imag;
                }
                _ => coef *= parse_rational(factor)?,
            }
        }
        let unit = match (basis, has_i, has_sqrt) {
            (Some(w), false, false) => w,
            (None, true, true) => QuadField::i_sqrt_d(&rat(1), params),
            (None, true, false) if d == 1 => QuadField::omega(params),
            (None, false, false) => QuadField::one(params),
            _ => return Err(bad("term is not rational, w, or i*sqrt(d)")),
        };
        let mut term = unit.scale(&coef);
        if neg {
            term = -term;
        }
        total = total + term;
    }
    Ok(total)
}

/// Parse an integral element.
pub fn parse_quad_int(s: &str, params: RingParams) -> Result<QuadInt> {
    parse_quad(s, params)?
        .to_int()
        .ok_or_else(|| Error::Parse(format!("`{}` is not integral", s.trim())))
}
