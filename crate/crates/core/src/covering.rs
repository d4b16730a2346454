//! Horoball heights, extended Cygan balls, and exact checking of covering
//! certificates for the prism at a fixed height, plus SVG slices.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heisenberg::{extended_cygan_dist4, CuspGroup, HeisPoint};
use crate::hermitian::{depth, BoundaryPoint};
use crate::ring::{parse_rational, RingParams};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Height 2/√n at which depth-n horoballs first touch H_u.
#[derive(Clone, Debug, PartialEq)]
pub struct Height {
    pub u_squared: BigRational,
    pub approx: f64,
}

pub fn height_of_depth(n: u64) -> Height {
    assert!(n >= 1, "depth must be positive");
    Height { u_squared: BigRational::new(4.into(), n.into()), approx: 2.0 / (n as f64).sqrt() }
}

/// r⁴ = 4/k for the extended Cygan ball of a depth-k point.
pub fn ball_radius4(k: u64) -> BigRational {
    assert!(k >= 1, "depth must be positive");
    BigRational::new(4.into(), k.into())
}

/// H_u meets its image under a map sending ∞ to a depth-k point iff u² ≤ 4/k.
pub fn horoballs_meet_depth(k: u64, u: &BigRational) -> bool {
    u * u <= ball_radius4(k)
}

pub fn horoballs_meet(p: &BoundaryPoint, u: &BigRational, params: RingParams) -> Result<bool> {
    let k = depth(p, params)?;
    if k.is_zero() {
        return Err(Error::Parse("the point ∞ has no depth".into()));
    }
    Ok(u * u * BigRational::from_integer(k) <= rat(4))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ball {
    pub name: String,
    pub center: HeisPoint,
    pub depth: u64,
    /// Explicit radius replacing the isometric-sphere radius of the depth.
    pub radius: Option<BigRational>,
}

impl Ball {
    pub fn radius4(&self) -> BigRational {
        match &self.radius {
            Some(r) => (r * r) * (r * r),
            None => ball_radius4(self.depth),
        }
    }

    /// Fourth power of the extended Cygan distance from (p, u) to the center.
    pub fn dist4(&self, p: &HeisPoint, u: &BigRational) -> BigRational {
        extended_cygan_dist4(p, u, &self.center, &BigRational::zero())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub name: String,
    pub ball: String,
    pub vertices: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveringCertificate {
    pub d: u32,
    pub u: BigRational,
    pub balls: Vec<Ball>,
    pub vertices: Vec<(String, HeisPoint)>,
    pub regions: Vec<Region>,
}

impl CoveringCertificate {
    pub fn is_empty(&self) -> bool {
        self.balls.is_empty() && self.vertices.is_empty() && self.regions.is_empty()
    }

    pub fn ball(&self, name: &str) -> Option<&Ball> {
        self.balls.iter().find(|b| b.name == name)
    }

    pub fn vertex(&self, name: &str) -> Option<&HeisPoint> {
        self.vertices.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    pub fn without_region(&self, name: &str) -> CoveringCertificate {
        let mut c = self.clone();
        c.regions.retain(|r| r.name != name);
        c
    }

    pub fn parse(text: &str, file: &str) -> Result<CoveringCertificate> {
        let mut d: Option<u32> = None;
        let mut u: Option<BigRational> = None;
        let mut section = "";
        let mut pending: Vec<(usize, &str, String)> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::ParseAt { file: file.to_string(), line: ln + 1, msg };
            if line.starts_with('[') {
                section = match line {
                    "[balls]" => "balls",
                    "[vertices]" => "vertices",
                    "[regions]" => "regions",
                    _ => return Err(err(format!("unknown section `{}`", line))),
                };
                continue;
            }
            if section.is_empty() {
                let (key, val) = line.split_once(' ').ok_or_else(|| err(format!("bad header `{}`", line)))?;
                match key {
                    "d" => d = Some(val.trim().parse().map_err(|_| err(format!("bad d `{}`", val)))?),
                    "u" => u = Some(parse_rational(val.trim()).map_err(|e| err(e.to_string()))?),
                    _ => return Err(err(format!("unknown header key `{}`", key))),
                }
                continue;
            }
            pending.push((ln + 1, section, line.to_string()));
        }
        let at = |line: usize, msg: String| Error::ParseAt { file: file.to_string(), line, msg };
        let d = d.ok_or_else(|| at(1, "missing `d` header".into()))?;
        let u = u.ok_or_else(|| at(1, "missing `u` header".into()))?;
        if !u.is_positive() {
            return Err(at(1, "height must be positive".into()));
        }
        let params = RingParams::new(d)?;
        let mut cert = CoveringCertificate { d, u, balls: Vec::new(), vertices: Vec::new(), regions: Vec::new() };
        for (ln, section, line) in pending {
            let parts: Vec<&str> = line.splitn(3, ':').map(str::trim).collect();
            match section {
                "balls" => {
                    let (head, pt) = line.split_once(':').ok_or_else(|| at(ln, "expected `name depth k : z ; t`".into()))?;
                    let h: Vec<&str> = head.split_whitespace().collect();
                    let bad = || at(ln, format!("bad ball header `{}`", head.trim()));
                    let (k, radius) = match h.as_slice() {
                        [_, "depth", k] => (k, None),
                        [_, "depth", k, "radius", r] => {
                            let r = parse_rational(r).ok().filter(|r| r.is_positive()).ok_or_else(bad)?;
                            (k, Some(r))
                        }
                        _ => return Err(bad()),
                    };
                    let k = k.parse::<u64>().ok().filter(|&k| k >= 1).ok_or_else(bad)?;
                    let center = HeisPoint::parse(pt, params).map_err(|e| at(ln, e.to_string()))?;
                    cert.balls.push(Ball { name: h[0].to_string(), center, depth: k, radius });
                }
                "vertices" => {
                    let (name, pt) = line.split_once(':').ok_or_else(|| at(ln, "expected `name : z ; t`".into()))?;
                    let p = HeisPoint::parse(pt, params).map_err(|e| at(ln, e.to_string()))?;
                    cert.vertices.push((name.trim().to_string(), p));
                }
                _ => {
                    if parts.len() != 3 {
                        return Err(at(ln, "expected `name : ball : vertices`".into()));
                    }
                    cert.regions.push(Region {
                        name: parts[0].to_string(),
                        ball: parts[1].to_string(),
                        vertices: parts[2].split_whitespace().map(str::to_string).collect(),
                    });
                }
            }
        }
        for r in &cert.regions {
            if cert.ball(&r.ball).is_none() {
                return Err(Error::Parse(format!("region {} uses unknown ball {}", r.name, r.ball)));
            }
            if let Some(v) = r.vertices.iter().find(|v| cert.vertex(v).is_none()) {
                return Err(Error::Parse(format!("region {} uses unknown vertex {}", r.name, v)));
            }
        }
        Ok(cert)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("d {}\nu {}\n\n[balls]\n", self.d, self.u);
        for b in &self.balls {
            match &b.radius {
                Some(r) => writeln!(s, "{} depth {} radius {} : {}", b.name, b.depth, r, b.center),
                None => writeln!(s, "{} depth {} : {}", b.name, b.depth, b.center),
            }
            .expect("write to String");
        }
        s.push_str("\n[vertices]\n");
        for (n, p) in &self.vertices {
            let _ = writeln!(s, "{} : {}", n, p);
        }
        s.push_str("\n[regions]\n");
        for r in &self.regions {
            let _ = writeln!(s, "{} : {} : {}", r.name, r.ball, r.vertices.join(" "));
        }
        s
    }
}

/// Per-vertex outcome of a region check.
#[derive(Clone, Debug)]
pub struct VertexCheck {
    pub name: String,
    pub dist4: BigRational,
    pub inside: bool,
}

impl VertexCheck {
    pub fn distance(&self) -> f64 {
        self.dist4.to_f64().unwrap_or(f64::NAN).powf(0.25)
    }
}

#[derive(Clone, Debug)]
pub struct RegionReport {
    pub region: String,
    pub ball: String,
    pub radius4: BigRational,
    pub checks: Vec<VertexCheck>,
}

impl RegionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.inside)
    }

    pub fn failing(&self) -> impl Iterator<Item = &VertexCheck> {
        self.checks.iter().filter(|c| !c.inside)
    }
}

impl fmt::Display for RegionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.radius4.to_f64().unwrap_or(f64::NAN).powf(0.25);
        writeln!(f, "{} in {} (radius {:.6}): {}", self.region, self.ball, r, if self.passed() { "pass" } else { "FAIL" })?;
        for c in &self.checks {
            writeln!(f, "  {:<6} {:.6}{}", c.name, c.distance(), if c.inside { "" } else { "  outside" })?;
        }
        Ok(())
    }
}

/// Every vertex, lifted to height u, lies strictly inside the ball.
pub fn verify_region(name: &str, vertices: &[(String, HeisPoint)], ball: &Ball, u: &BigRational) -> RegionReport {
    let r4 = ball.radius4();
    let checks = vertices
        .iter()
        .map(|(n, p)| {
            let dist4 = ball.dist4(p, u);
            let inside = dist4 < r4;
            VertexCheck { name: n.clone(), dist4, inside }
        })
        .collect();
    RegionReport { region: name.to_string(), ball: ball.name.clone(), radius4: r4, checks }
}

type Coords = [BigRational; 3];

fn coords(p: &HeisPoint) -> Coords {
    let (x, y) = p.z.isd();
    [x, y, p.t.clone()]
}

fn cross(a: &[BigInt; 3], b: &[BigInt; 3]) -> [BigInt; 3] {
    [&a[1] * &b[2] - &a[2] * &b[1], &a[2] * &b[0] - &a[0] * &b[2], &a[0] * &b[1] - &a[1] * &b[0]]
}

fn dot(a: &[BigInt; 3], b: &[BigInt; 3]) -> BigInt {
    &a[0] * &b[0] + &a[1] * &b[1] + &a[2] * &b[2]
}

fn sub(a: &[BigInt; 3], b: &[BigInt; 3]) -> [BigInt; 3] {
    [&a[0] - &b[0], &a[1] - &b[1], &a[2] - &b[2]]
}

/// Convex hull of finitely many rational points as an intersection of
/// half-spaces n·X ≤ c in coordinates scaled by `scale`.
#[derive(Clone, Debug)]
pub struct Hull {
    scale: BigInt,
    planes: Vec<([BigInt; 3], BigInt)>,
    fast: Option<Vec<([i128; 3], i128)>>,
}

impl Hull {
    pub fn new(points: &[Coords]) -> Hull {
        let mut scale = BigInt::one();
        for p in points {
            for c in p {
                scale = scale.lcm(c.denom());
            }
        }
        let sr = BigRational::from_integer(scale.clone());
        let pts: Vec<[BigInt; 3]> =
            points.iter().map(|p| [0, 1, 2].map(|i| (&p[i] * &sr).to_integer())).collect();
        let mut planes: Vec<([BigInt; 3], BigInt)> = Vec::new();
        let mut push = |n: [BigInt; 3], pts: &[[BigInt; 3]], on: &[BigInt; 3]| {
            if n.iter().all(Zero::is_zero) {
                return false;
            }
            let c = dot(&n, on);
            let (mut le, mut ge) = (true, true);
            for p in pts {
                let v = dot(&n, p);
                le &= v <= c;
                ge &= v >= c;
            }
            if le {
                planes.push((n.clone(), c.clone()));
            }
            if ge {
                planes.push((n.map(|x| -x), -c));
            }
            le && ge
        };
        let n = pts.len();
        let mut normal: Option<[BigInt; 3]> = None;
        let mut coplanar = true;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let nv = cross(&sub(&pts[j], &pts[i]), &sub(&pts[k], &pts[i]));
                    if nv.iter().all(Zero::is_zero) {
                        continue;
                    }
                    let flat = push(nv.clone(), &pts, &pts[i]);
                    coplanar &= flat;
                    normal.get_or_insert(nv);
                }
            }
        }
        match normal {
            Some(nv) if coplanar => {
                for i in 0..n {
                    for j in i + 1..n {
                        push(cross(&nv, &sub(&pts[j], &pts[i])), &pts, &pts[i]);
                    }
                }
            }
            Some(_) => {}
            None if n > 0 => {
                // collinear or a single point
                let e = pts.iter().map(|p| sub(p, &pts[0])).find(|v| v.iter().any(|x| !x.is_zero()));
                let axes = [[1, 0, 0], [0, 1, 0], [0, 0, 1]].map(|a| a.map(BigInt::from));
                match e {
                    None => {
                        for a in &axes {
                            push(a.clone(), &pts, &pts[0]);
                        }
                    }
                    Some(e) => {
                        for a in &axes {
                            push(cross(&e, a), &pts, &pts[0]);
                        }
                        for p in &pts {
                            push(e.clone(), &pts, p);
                        }
                    }
                }
            }
            None => {}
        }
        // reduce and dedupe
        let mut seen = std::collections::BTreeSet::new();
        planes = planes
            .into_iter()
            .map(|(n, c)| {
                let g = n.iter().fold(c.abs(), |g, x| g.gcd(x));
                if g.is_zero() || g.is_one() {
                    (n, c)
                } else {
                    (n.map(|x| x / &g), c / &g)
                }
            })
            .filter(|p| seen.insert(p.clone()))
            .collect();
        let fast = planes
            .iter()
            .map(|(n, c)| Some(([n[0].to_i128()?, n[1].to_i128()?, n[2].to_i128()?], c.to_i128()?)))
            .collect();
        Hull { scale, planes, fast }
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn contains(&self, p: &Coords) -> bool {
        if self.planes.is_empty() {
            return false;
        }
        let sr = BigRational::from_integer(self.scale.clone());
        let q: [BigRational; 3] = [0, 1, 2].map(|i| &p[i] * &sr);
        self.planes.iter().all(|(n, c)| {
            let v = q.iter().zip(n.iter()).fold(BigRational::zero(), |acc, (x, k)| acc + x * BigRational::from_integer(k.clone()));
            v <= BigRational::from_integer(c.clone())
        })
    }

    /// Membership of P/m with P integral and m > 0.
    fn contains_scaled(&self, p: &[BigInt; 3], m: &BigInt) -> bool {
        if self.planes.is_empty() {
            return false;
        }
        if let (Some(fast), Some(ps), Some(s), Some(mm)) = (
            &self.fast,
            [p[0].to_i128(), p[1].to_i128(), p[2].to_i128()].into_iter().collect::<Option<Vec<i128>>>(),
            self.scale.to_i128(),
            m.to_i128(),
        ) {
            let test = || -> Option<bool> {
                for (n, c) in fast {
                    let mut v: i128 = 0;
                    for i in 0..3 {
                        v = v.checked_add(n[i].checked_mul(ps[i])?)?;
                    }
                    if v.checked_mul(s)? > c.checked_mul(mm)? {
                        return Some(false);
                    }
                }
                Some(true)
            };
            if let Some(b) = test() {
                return b;
            }
        }
        self.planes.iter().all(|(n, c)| dot(n, p) * &self.scale <= c * m)
    }
}

/// Outcome of the grid coverage audit.
#[derive(Clone, Debug)]
pub struct AuditReport {
    pub resolution: usize,
    pub samples: usize,
    pub uncovered: Vec<HeisPoint>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.uncovered.is_empty()
    }
}

/// Sample the closed prism at (N+1)³ grid points over its bounding box and
/// test each against the region hulls.
pub fn coverage_audit(cert: &CoveringCertificate, n: usize) -> Result<AuditReport> {
    let g = CuspGroup::new(cert.d)?;
    let hulls: Vec<Hull> = cert
        .regions
        .iter()
        .map(|r| {
            let pts: Vec<Coords> = r.vertices.iter().map(|v| coords(cert.vertex(v).expect("validated"))).collect();
            Hull::new(&pts)
        })
        .collect();
    let corners: Vec<(BigRational, BigRational)> =
        [g.x.z.clone(), g.y.z.clone(), crate::ring::QuadField::zero(g.params)].iter().map(|z| z.isd()).collect();
    let xmin = corners.iter().map(|c| c.0.clone()).min().expect("3 corners");
    let xmax = corners.iter().map(|c| c.0.clone()).max().expect("3 corners");
    let ymin = corners.iter().map(|c| c.1.clone()).min().expect("3 corners");
    let ymax = corners.iter().map(|c| c.1.clone()).max().expect("3 corners");
    let period = g.period();
    let n = n.max(1);
    let nb = BigInt::from(n);
    let den = [&xmin, &xmax, &ymin, &ymax, &period].iter().fold(BigInt::one(), |a, r| a.lcm(r.denom())) * &nb;
    let mr = BigRational::from_integer(den.clone());
    let axis = |lo: &BigRational, hi: &BigRational| -> Vec<(BigRational, BigInt)> {
        (0..=n)
            .map(|i| {
                let v = lo + (hi - lo) * BigRational::new(BigInt::from(i), nb.clone());
                let s = (&v * &mr).to_integer();
                (v, s)
            })
            .collect()
    };
    let xs = axis(&xmin, &xmax);
    let ys = axis(&ymin, &ymax);
    let ts = axis(&BigRational::zero(), &period);
    let mut base: Vec<(HeisPoint, [BigInt; 2])> = Vec::new();
    for (x, sx) in &xs {
        for (y, sy) in &ys {
            let z = crate::ring::QuadField::from_isd(x.clone(), y.clone(), g.params);
            if g.in_base_triangle(&z) {
                base.push((HeisPoint::new(z, BigRational::zero()), [sx.clone(), sy.clone()]));
            }
        }
    }
    let samples: Vec<(usize, usize)> = (0..base.len()).flat_map(|i| (0..ts.len()).map(move |j| (i, j))).collect();
    let uncovered: Vec<HeisPoint> = samples
        .par_iter()
        .filter_map(|&(i, j)| {
            let (p, s) = &base[i];
            let (t, st) = &ts[j];
            let ps = [s[0].clone(), s[1].clone(), st.clone()];
            if hulls.iter().any(|h| h.contains_scaled(&ps, &den)) {
                None
            } else {
                Some(HeisPoint::new(p.z.clone(), t.clone()))
            }
        })
        .collect();
    Ok(AuditReport { resolution: n, samples: samples.len(), uncovered })
}

/// Seeded random audit: `count` points of the prism with dyadic coordinates
/// (denominator 2^16), each tested exactly against the region hulls.
/// The report carries resolution 0.
pub fn random_audit(cert: &CoveringCertificate, count: usize, seed: u64) -> Result<AuditReport> {
    use rand::{Rng, SeedableRng};
    let g = CuspGroup::new(cert.d)?;
    let hulls: Vec<Hull> = cert
        .regions
        .iter()
        .map(|r| {
            let pts: Vec<Coords> = r.vertices.iter().map(|v| coords(cert.vertex(v).expect("validated"))).collect();
            Hull::new(&pts)
        })
        .collect();
    let corners: Vec<(BigRational, BigRational)> =
        [g.x.z.clone(), g.y.z.clone(), crate::ring::QuadField::zero(g.params)].iter().map(|z| z.isd()).collect();
    let lo = |i: usize| corners.iter().map(|c| if i == 0 { c.0.clone() } else { c.1.clone() }).min().expect("3 corners");
    let hi = |i: usize| corners.iter().map(|c| if i == 0 { c.0.clone() } else { c.1.clone() }).max().expect("3 corners");
    let (x0, x1, y0, y1) = (lo(0), hi(0), lo(1), hi(1));
    let period = g.period();
    let scale = 1i64 << 16;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let mut draw = |a: &BigRational, b: &BigRational| a + (b - a) * BigRational::new(rng.gen_range(0..=scale).into(), scale.into());
        let z = crate::ring::QuadField::from_isd(draw(&x0, &x1), draw(&y0, &y1), g.params);
        let t = draw(&BigRational::zero(), &period);
        if g.in_base_triangle(&z) && t < period {
            pts.push(HeisPoint::new(z, t));
        }
    }
    let uncovered = pts.into_par_iter().filter(|p| !hulls.iter().any(|h| h.contains(&coords(p)))).collect();
    Ok(AuditReport { resolution: 0, samples: count, uncovered })
}

#[derive(Clone, Debug)]
pub struct CertificateReport {
    pub regions: Vec<RegionReport>,
    /// Balls whose horoball lies below H_u.
    pub phantom_balls: Vec<String>,
    pub audit: Option<AuditReport>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.regions.iter().all(RegionReport::passed)
            && self.phantom_balls.is_empty()
            && self.audit.as_ref().map_or(true, AuditReport::passed)
    }
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.regions {
            write!(f, "{}", r)?;
        }
        for b in &self.phantom_balls {
            writeln!(f, "ball {} does not reach height u", b)?;
        }
        if let Some(a) = &self.audit {
            writeln!(
                f,
                "audit N={}: {} samples, {} uncovered{}",
                a.resolution,
                a.samples,
                a.uncovered.len(),
                if a.passed() { "" } else { ":" }
            )?;
            for p in a.uncovered.iter().take(10) {
                writeln!(f, "  {}", p)?;
            }
        }
        writeln!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Check every region exactly, then run the grid audit at resolution `n`
/// (skipped when `n` is zero or the certificate is empty).
pub fn verify_certificate(cert: &CoveringCertificate, n: usize) -> Result<CertificateReport> {
    let regions: Vec<RegionReport> = cert
        .regions
        .par_iter()
        .map(|r| {
            let ball = cert.ball(&r.ball).expect("validated");
            let vs: Vec<(String, HeisPoint)> =
                r.vertices.iter().map(|v| (v.clone(), cert.vertex(v).expect("validated").clone())).collect();
            verify_region(&r.name, &vs, ball, &cert.u)
        })
        .collect();
    let phantom_balls =
        cert.balls.iter().filter(|b| !horoballs_meet_depth(b.depth, &cert.u)).map(|b| b.name.clone()).collect();
    let audit = if n == 0 || cert.is_empty() { None } else { Some(coverage_audit(cert, n)?) };
    Ok(CertificateReport { regions, phantom_balls, audit })
}

/// A planar slice of the prism at height u.
#[derive(Clone, Debug)]
pub enum Slice {
    /// The horizontal plane t = const, drawn in (Re z, Im z).
    T(BigRational),
    /// The vertical plane over the segment from one z to another, drawn in (arc length, t√d).
    Line(crate::ring::QuadField, crate::ring::QuadField),
}

struct Frame {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

fn fmt4(x: f64) -> String {
    let s = format!("{:.4}", x);
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

fn marching_squares<F: Fn(f64, f64) -> f64>(f: F, fr: &Frame, res: usize) -> Vec<[(f64, f64); 2]> {
    let pad_x = 0.02 * (fr.xmax - fr.xmin);
    let pad_y = 0.02 * (fr.ymax - fr.ymin);
    let (x0, y0) = (fr.xmin - pad_x, fr.ymin - pad_y);
    let dx = (fr.xmax - fr.xmin + 2.0 * pad_x) / res as f64;
    let dy = (fr.ymax - fr.ymin + 2.0 * pad_y) / res as f64;
    let vals: Vec<Vec<f64>> =
        (0..=res).map(|j| (0..=res).map(|i| f(x0 + i as f64 * dx, y0 + j as f64 * dy)).collect()).collect();
    let mut segs = Vec::new();
    let lerp = |a: f64, b: f64| if (a - b).abs() < 1e-300 { 0.5 } else { a / (a - b) };
    for j in 0..res {
        for i in 0..res {
            let c = [vals[j][i], vals[j][i + 1], vals[j + 1][i + 1], vals[j + 1][i]];
            let p = [
                (x0 + i as f64 * dx, y0 + j as f64 * dy),
                (x0 + (i + 1) as f64 * dx, y0 + j as f64 * dy),
                (x0 + (i + 1) as f64 * dx, y0 + (j + 1) as f64 * dy),
                (x0 + i as f64 * dx, y0 + (j + 1) as f64 * dy),
            ];
            let mut cut = Vec::new();
            for e in 0..4 {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                if (a < 0.0) != (b < 0.0) {
                    let s = lerp(a, b);
                    let (pa, pb) = (p[e], p[(e + 1) % 4]);
                    cut.push((pa.0 + s * (pb.0 - pa.0), pa.1 + s * (pb.1 - pa.1)));
                }
            }
            if cut.len() == 2 {
                segs.push([cut[0], cut[1]]);
            } else if cut.len() == 4 {
                segs.push([cut[0], cut[1]]);
                segs.push([cut[2], cut[3]]);
            }
        }
    }
    segs
}

fn hull2d(mut pts: Vec<(BigRational, BigRational)>) -> Vec<(BigRational, BigRational)> {
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: &(BigRational, BigRational), a: &(BigRational, BigRational), b: &(BigRational, BigRational)| {
        (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
    };
    let mut lower: Vec<(BigRational, BigRational)> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && !turn(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive() {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<(BigRational, BigRational)> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && !turn(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive() {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// One ball slice drawn in a rendering, for reporting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DrawnBall {
    pub name: String,
    pub depth: u64,
    /// Vertical shift (in periods) of the drawn copy.
    pub shift: i64,
}

#[derive(Clone, Debug)]
pub struct Rendering {
    pub svg: String,
    pub balls: Vec<DrawnBall>,
}

/// Draw the prism outline, the ball slices (with their vertical period
/// translates) and the region cross-sections in one slice.
pub fn render_covering(cert: &CoveringCertificate, slice: &Slice) -> Result<Rendering> {
    const RES: usize = 240;
    let g = CuspGroup::new(cert.d)?;
    let sd = (cert.d as f64).sqrt();
    let u = cert.u.to_f64().unwrap_or(0.0);
    let period = g.period();
    let pf = period.to_f64().unwrap_or(0.0);
    let corners: Vec<(f64, f64)> = [crate::ring::QuadField::zero(g.params), g.x.z.clone(), g.y.z.clone()]
        .iter()
        .map(|z| {
            let (x, y) = z.isd();
            (x.to_f64().unwrap_or(0.0), y.to_f64().unwrap_or(0.0) * sd)
        })
        .collect();

    // slice plane: map 2-D drawing coordinates to (x, y_isd, t) and a signed side function
    let (frame, outline, to3, side): (Frame, Vec<(f64, f64)>, Box<dyn Fn(f64, f64) -> (f64, f64, f64) + Sync>, Box<dyn Fn(&Coords) -> BigRational>) =
        match slice {
            Slice::T(t0) => {
                let t0f = t0.to_f64().unwrap_or(0.0);
                let xs = corners.iter().map(|c| c.0);
                let ys = corners.iter().map(|c| c.1);
                let fr = Frame {
                    xmin: xs.clone().fold(f64::INFINITY, f64::min),
                    xmax: xs.fold(f64::NEG_INFINITY, f64::max),
                    ymin: ys.clone().fold(f64::INFINITY, f64::min),
                    ymax: ys.fold(f64::NEG_INFINITY, f64::max),
                };
                let t0c = t0.clone();
                (fr, corners.clone(), Box::new(move |a, b| (a, b / sd, t0f)), Box::new(move |p: &Coords| &p[2] - &t0c))
            }
            Slice::Line(z0, z1) => {
                let (x0, y0) = z0.isd();
                let (x1, y1) = z1.isd();
                let (dx, dy) = (&x1 - &x0, &y1 - &y0);
                let len = ((&dx * &dx).to_f64().unwrap_or(0.0) + (&dy * &dy).to_f64().unwrap_or(0.0) * sd * sd).sqrt();
                if len == 0.0 {
                    return Err(Error::Parse("degenerate slice line".into()));
                }
                let fr = Frame { xmin: 0.0, xmax: len, ymin: 0.0, ymax: pf * sd };
                let outline = vec![(0.0, 0.0), (len, 0.0), (len, pf * sd), (0.0, pf * sd)];
                let (fx0, fy0, fdx, fdy) =
                    [&x0, &y0, &dx, &dy].map(|v| v.to_f64().unwrap_or(0.0)).into();
                let (sx0, sy0, sdx, sdy) = (x0.clone(), y0.clone(), dx.clone(), dy.clone());
                (
                    fr,
                    outline,
                    Box::new(move |s, v| (fx0 + s / len * fdx, fy0 + s / len * fdy, v / sd)),
                    Box::new(move |p: &Coords| (&p[0] - &sx0) * &sdy - (&p[1] - &sy0) * &sdx),
                )
            }
        };
    let project = |p: &Coords| -> (f64, f64) {
        match slice {
            Slice::T(_) => (p[0].to_f64().unwrap_or(0.0), p[1].to_f64().unwrap_or(0.0) * sd),
            Slice::Line(z0, z1) => {
                let (x0, y0) = z0.isd();
                let (x1, y1) = z1.isd();
                let (dx, dy) = ((&x1 - &x0).to_f64().unwrap_or(0.0), (&y1 - &y0).to_f64().unwrap_or(0.0));
                let px = (&p[0] - &x0).to_f64().unwrap_or(0.0);
                let py = (&p[1] - &y0).to_f64().unwrap_or(0.0);
                let len2 = dx * dx + (dy * dy) * sd * sd;
                let s = (px * dx + py * dy * sd * sd) / len2.sqrt();
                (s, p[2].to_f64().unwrap_or(0.0) * sd)
            }
        }
    };

    let w = frame.xmax - frame.xmin;
    let h = frame.ymax - frame.ymin;
    let margin = 0.05 * w.max(h);
    let stroke = 0.004 * w.max(h);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}">"#,
        fmt4(frame.xmin - margin),
        fmt4(-frame.ymax - margin),
        fmt4(w + 2.0 * margin),
        fmt4(h + 2.0 * margin)
    );
    let path = |pts: &[(f64, f64)]| -> String {
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{} {} ", if i == 0 { "M" } else { "L" }, fmt4(*x), fmt4(-*y));
        }
        d.push('Z');
        d
    };
    let _ = writeln!(
        svg,
        r##"<path id="prism" d="{}" fill="none" stroke="#000" stroke-width="{}"/>"##,
        path(&outline),
        fmt4(stroke * 1.5)
    );

    // region cross-sections
    for (ri, r) in cert.regions.iter().enumerate() {
        let pts: Vec<Coords> = r.vertices.iter().map(|v| coords(cert.vertex(v).expect("validated"))).collect();
        let mut cut: Vec<Coords> = Vec::new();
        for (i, a) in pts.iter().enumerate() {
            let sa = side(a);
            if sa.is_zero() {
                cut.push(a.clone());
            }
            for b in &pts[i + 1..] {
                let sb = side(b);
                if (sa.is_positive() && sb.is_negative()) || (sa.is_negative() && sb.is_positive()) {
                    let s = &sa / (&sa - &sb);
                    cut.push([0, 1, 2].map(|k| &a[k] + (&b[k] - &a[k]) * &s));
                }
            }
        }
        let poly2: Vec<(BigRational, BigRational)> = match slice {
            Slice::T(_) => cut.iter().map(|p| (p[0].clone(), p[1].clone())).collect(),
            Slice::Line(z0, z1) => {
                let (x0, y0) = z0.isd();
                let (x1, y1) = z1.isd();
                let (dx, dy) = (&x1 - &x0, &y1 - &y0);
                let dd = rat(cert.d as i64);
                cut.iter()
                    .map(|p| ((&p[0] - &x0) * &dx + (&p[1] - &y0) * &dy * &dd, p[2].clone()))
                    .collect()
            }
        };
        let hull = hull2d(poly2);
        if hull.len() < 3 {
            continue;
        }
        // map hull back through the 3-D cut points for drawing
        let drawn: Vec<(f64, f64)> = hull
            .iter()
            .map(|(a, b)| match slice {
                Slice::T(_) => (a.to_f64().unwrap_or(0.0), b.to_f64().unwrap_or(0.0) * sd),
                Slice::Line(z0, z1) => {
                    let (x0, y0) = z0.isd();
                    let (x1, y1) = z1.isd();
                    let (dx, dy) = (&x1 - &x0, &y1 - &y0);
                    let dd = rat(cert.d as i64);
                    let len2 = (&dx * &dx + &dy * &dy * &dd).to_f64().unwrap_or(1.0);
                    (a.to_f64().unwrap_or(0.0) / len2.sqrt(), b.to_f64().unwrap_or(0.0) * sd)
                }
            })
            .collect();
        let hue = (ri * 360) / cert.regions.len().max(1);
        let _ = writeln!(
            svg,
            r#"<path class="region" data-name="{}" d="{}" fill="hsl({},70%,80%)" fill-opacity="0.5" stroke="hsl({},60%,40%)" stroke-width="{}"/>"#,
            r.name,
            path(&drawn),
            hue,
            hue,
            fmt4(stroke)
        );
    }
    let _ = &project;

    // ball slices
    let mut drawn_balls = Vec::new();
    for b in &cert.balls {
        let c = coords(&b.center);
        let (cx, cy) = (c[0].to_f64().unwrap_or(0.0), c[1].to_f64().unwrap_or(0.0));
        let ct = c[2].to_f64().unwrap_or(0.0);
        let r4 = b.radius4().to_f64().unwrap_or(0.0);
        for k in -1i64..=1 {
            let tc = ct + k as f64 * pf;
            let f = |a: f64, bb: f64| {
                let (x, y, t) = to3(a, bb);
                let dz = (x - cx).powi(2) + sd * sd * (y - cy).powi(2);
                // im coefficient of z·conj(c) over √d
                let im = y * cx - x * cy;
                let vert = t - tc + 2.0 * im;
                (dz + u).powi(2) + sd * sd * vert * vert - r4
            };
            let segs = marching_squares(f, &frame, RES);
            if segs.is_empty() {
                continue;
            }
            drawn_balls.push(DrawnBall { name: b.name.clone(), depth: b.depth, shift: k });
            let mut d = String::new();
            for [p, q] in &segs {
                let _ = write!(d, "M{} {} L{} {} ", fmt4(p.0), fmt4(-p.1), fmt4(q.0), fmt4(-q.1));
            }
            let _ = writeln!(
                svg,
                r##"<path class="ball" data-name="{}" data-depth="{}" data-shift="{}" d="{}" fill="none" stroke="#c00" stroke-width="{}"/>"##,
                b.name,
                b.depth,
                k,
                d.trim_end(),
                fmt4(stroke)
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(Rendering { svg, balls: drawn_balls })
}

/// Number of distinct balls drawn, per depth.
pub fn drawn_depths(r: &Rendering) -> BTreeMap<u64, usize> {
    let mut names: BTreeMap<u64, std::collections::BTreeSet<&str>> = BTreeMap::new();
    for b in &r.balls {
        names.entry(b.depth).or_default().insert(&b.name);
    }
    names.into_iter().map(|(k, v)| (k, v.len())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const D2: &str = include_str!("../data/certificate_d2.txt");

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn heights_and_radii() {
        assert_eq!(height_of_depth(1).u_squared, rat(4));
        assert!((height_of_depth(44).approx - 0.301511).abs() < 1e-6);
        assert!((height_of_depth(17).approx - 0.485071).abs() < 1e-6);
        assert_eq!(ball_radius4(1), rat(4));
        assert_eq!(ball_radius4(4), rat(1));
        assert_eq!(ball_radius4(3), r(4, 3));
    }

    #[test]
    fn horoball_meeting() {
        let u = r(4852, 10000);
        assert!(horoballs_meet_depth(16, &u));
        assert!(!horoballs_meet_depth(17, &u));
        assert!(horoballs_meet_depth(1, &rat(2)));
        let p = RingParams::new(2).unwrap();
        let q = BoundaryPoint::Finite(HeisPoint::new(crate::ring::QuadField::zero(p), rat(1)));
        assert!(horoballs_meet(&q, &rat(1), p).unwrap());
        assert!(!horoballs_meet(&q, &r(142, 100), p).unwrap());
    }

    #[test]
    fn d2_certificate_regions() {
        let cert = CoveringCertificate::parse(D2, "d2").unwrap();
        assert_eq!(cert.regions.len(), 8);
        let rep = verify_certificate(&cert, 0).unwrap();
        assert!(rep.passed(), "{}", rep);
        let r1: Vec<String> = rep.regions[0].checks.iter().map(|c| format!("{:.4}", c.distance())).collect();
        assert_eq!(r1, ["0.6966", "1.2187", "1.3902", "1.4090", "0.7812", "1.3159", "1.0041", "1.3965"]);
        assert_eq!(CoveringCertificate::parse(&cert.to_text(), "rt").unwrap(), cert);
    }

    #[test]
    fn region_examples() {
        let cert = CoveringCertificate::parse(D2, "d2").unwrap();
        let ball = cert.ball("B1").unwrap().clone();
        let center = vec![("c".to_string(), ball.center.clone())];
        let rep = verify_region("single", &center, &ball, &cert.u);
        assert!(rep.passed());
        assert_eq!(rep.checks[0].dist4, &cert.u * &cert.u);
        let small = Ball { name: "S".into(), center: ball.center.clone(), depth: 16, radius: None };
        let r1 = &cert.regions[0];
        let vs: Vec<(String, HeisPoint)> = r1.vertices.iter().map(|v| (v.clone(), cert.vertex(v).unwrap().clone())).collect();
        let rep = verify_region("R1", &vs, &small, &cert.u);
        assert!(!rep.passed());
        assert_eq!(rep.failing().next().unwrap().name, "q1");
        // the ball printed for R6 does not contain it
        let r6 = cert.regions.iter().find(|r| r.name == "R6").unwrap();
        let vs: Vec<(String, HeisPoint)> = r6.vertices.iter().map(|v| (v.clone(), cert.vertex(v).unwrap().clone())).collect();
        assert!(!verify_region("R6", &vs, cert.ball("B4").unwrap(), &cert.u).passed());
    }

    #[test]
    fn shrunk_ball_fails() {
        let text = D2.replace("B1 depth 1 :", "B1 depth 1 radius 13/10 :");
        let cert = CoveringCertificate::parse(&text, "d2").unwrap();
        assert_eq!(cert.ball("B1").unwrap().radius, Some(r(13, 10)));
        assert_eq!(CoveringCertificate::parse(&cert.to_text(), "rt").unwrap(), cert);
        let rep = verify_certificate(&cert, 0).unwrap();
        assert!(!rep.passed());
        let bad: Vec<(String, String)> =
            rep.regions[0].failing().map(|c| (c.name.clone(), format!("{:.4}", c.distance()))).collect();
        assert!(bad.contains(&("q3".to_string(), "1.4090".to_string())), "{:?}", bad);
        assert!(rep.regions[1..].iter().all(|r| r.ball != "B1" || !r.passed()));
    }

    #[test]
    fn monotone_in_height() {
        let cert = CoveringCertificate::parse(D2, "d2").unwrap();
        for reg in &cert.regions {
            let ball = cert.ball(&reg.ball).unwrap();
            let vs: Vec<(String, HeisPoint)> = reg.vertices.iter().map(|v| (v.clone(), cert.vertex(v).unwrap().clone())).collect();
            for u in [r(4, 10), r(1, 10), r(1, 1000)] {
                assert!(verify_region(&reg.name, &vs, ball, &u).passed());
            }
        }
    }

    #[test]
    fn hull_membership() {
        let cube: Vec<Coords> = (0..8).map(|i| [rat(i & 1), rat((i >> 1) & 1), rat((i >> 2) & 1)]).collect();
        let h = Hull::new(&cube);
        assert!(h.contains(&[r(1, 2), r(1, 2), r(1, 2)]));
        assert!(h.contains(&[rat(1), rat(1), rat(0)]));
        assert!(!h.contains(&[r(11, 10), r(1, 2), r(1, 2)]));
        let flat = Hull::new(&[[rat(0), rat(0), rat(0)], [rat(1), rat(0), rat(0)], [rat(0), rat(1), rat(0)]]);
        assert!(flat.contains(&[r(1, 4), r(1, 4), rat(0)]));
        assert!(!flat.contains(&[r(1, 4), r(1, 4), r(1, 100)]));
        assert!(!flat.contains(&[r(3, 4), r(3, 4), rat(0)]));
        let seg = Hull::new(&[[rat(0), rat(0), rat(0)], [rat(2), rat(2), rat(2)]]);
        assert!(seg.contains(&[rat(1), rat(1), rat(1)]));
        assert!(!seg.contains(&[rat(1), rat(1), rat(0)]));
        assert!(!seg.contains(&[rat(3), rat(3), rat(3)]));
        assert!(!Hull::new(&[]).contains(&[rat(0), rat(0), rat(0)]));
    }

    #[test]
    fn render_t0() {
        let cert = CoveringCertificate::parse(D2, "d2").unwrap();
        let a = render_covering(&cert, &Slice::T(rat(0))).unwrap();
        let b = render_covering(&cert, &Slice::T(rat(0))).unwrap();
        assert_eq!(a.svg, b.svg);
        assert_eq!(drawn_depths(&a).get(&1), Some(&6));
        assert!(a.svg.contains(r#"viewBox="-0.1000 -1.5142 2.2000 1.6142""#), "{}", &a.svg[..300]);
        let empty = CoveringCertificate { d: 2, u: cert.u.clone(), balls: vec![], vertices: vec![], regions: vec![] };
        let e = render_covering(&empty, &Slice::T(rat(0))).unwrap();
        assert!(e.balls.is_empty());
        assert_eq!(e.svg.matches("<path").count(), 1);
        let d11 = CoveringCertificate::parse(include_str!("../data/certificate_d11.txt"), "d11").unwrap();
        let s = render_covering(&d11, &Slice::T(rat(1))).unwrap();
        let names: std::collections::BTreeSet<&str> = s.balls.iter().map(|b| b.name.as_str()).collect();
        // centered on the axis one unit below: (|z|²+u)² + 11 > 4 everywhere
        assert!(!names.contains("B1"));
        // centered in the slice with u² < r⁴ = 1
        assert!(names.contains("B10"));
    }
}
