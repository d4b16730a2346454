//! Enumeration of O_d-rational boundary points of bounded depth, reduced to
//! Γ_∞-orbit representatives in the prism, and depth-table files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heisenberg::{CuspGroup, HeisPoint};
use crate::hermitian::{depth, standard_lift, BoundaryPoint};
use crate::ring::{is_primitive, solve_norm_equation, QuadField, QuadInt, RingParams};

/// Orbit representatives grouped by depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthTable {
    pub d: u32,
    pub max_depth: u64,
    pub rows: BTreeMap<u64, Vec<HeisPoint>>,
}

impl DepthTable {
    pub fn new(d: u32, max_depth: u64) -> Self {
        DepthTable { d, max_depth, rows: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All (depth, point) pairs in row order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &HeisPoint)> {
        self.rows.iter().flat_map(|(&k, v)| v.iter().map(move |p| (k, p)))
    }

    pub fn truncate(&self, n: u64) -> DepthTable {
        DepthTable {
            d: self.d,
            max_depth: n.min(self.max_depth),
            rows: self.rows.range(..=n).map(|(k, v)| (*k, v.clone())).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("d {}\n", self.d);
        for (k, p) in self.iter() {
            s.push_str(&format!("depth {} : {}\n", k, p));
        }
        s
    }

    /// Parse lines `depth k : z ; t`. An optional `d N` line must agree with `d`.
    pub fn parse(text: &str, d: u32, file: &str) -> Result<DepthTable> {
        let params = RingParams::new(d)?;
        let mut table = DepthTable::new(d, 0);
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::ParseAt { file: file.to_string(), line: ln + 1, msg };
            if let Some(rest) = line.strip_prefix("d ") {
                let dd: u32 = rest.trim().parse().map_err(|_| err(format!("bad header `{}`", line)))?;
                if dd != d {
                    return Err(err(format!("table is for d = {}, expected d = {}", dd, d)));
                }
                continue;
            }
            let (head, pt) = line.split_once(':').ok_or_else(|| err("expected `depth k : z ; t`".into()))?;
            let k: u64 = head
                .trim()
                .strip_prefix("depth")
                .and_then(|r| r.trim().parse().ok())
                .filter(|&k| k >= 1)
                .ok_or_else(|| err(format!("bad depth `{}`", head.trim())))?;
            let p = HeisPoint::parse(pt, params).map_err(|e| err(e.to_string()))?;
            table.rows.entry(k).or_default().push(p);
            table.max_depth = table.max_depth.max(k);
        }
        Ok(table)
    }
}

/// Counts per depth.
pub fn depth_histogram(table: &DepthTable) -> BTreeMap<u64, usize> {
    table.rows.iter().filter(|(_, v)| !v.is_empty()).map(|(k, v)| (*k, v.len())).collect()
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Elements w ∈ O_d with w/q in the prism base expanded by one lattice step.
fn numerators(g: &CuspGroup, q: &QuadInt) -> Vec<QuadField> {
    let params = g.params;
    let qf = q.to_field();
    // |z| is at most 3(|e1| + |e2|) on the expanded box
    let e1 = g.x.z.norm().to_f64().unwrap_or(0.0).sqrt();
    let e2 = g.y.z.norm().to_f64().unwrap_or(0.0).sqrt();
    let zmax = 3.0 * (e1 + e2);
    let wmax = zmax * q.norm().to_f64().unwrap_or(0.0).sqrt();
    let sd = (params.d() as f64).sqrt();
    let bmax = (if params.half_omega() { 2.0 } else { 1.0 } * wmax / sd).ceil() as i64 + 1;
    let amax = (wmax + bmax as f64).ceil() as i64 + 1;
    let (lo, hi) = (rat(-1), rat(2));
    let mut out = Vec::new();
    for b in -bmax..=bmax {
        for a in -amax..=amax {
            let z = &QuadField::from_ints(a, b, params) / &qf;
            let (al, be) = g.lattice_coords(&z);
            if al >= lo && al <= hi && be >= lo && be <= hi {
                out.push(z);
            }
        }
    }
    out
}

/// Points of exact depth k reached from one q with N(q) = k.
fn points_for(g: &CuspGroup, k: u64, q: &QuadInt) -> BTreeSet<HeisPoint> {
    let period = g.period();
    let kk = BigInt::from(k);
    // k·t/2 must be the imaginary coefficient of an element of O_d, so t ∈ (1/k)Z
    let steps = (&period * BigRational::from_integer(kk.clone())).to_integer().to_i64().expect("small period");
    let qf = q.to_field();
    let mut found = BTreeSet::new();
    for z in numerators(g, q) {
        for j in 0..steps {
            let t = BigRational::new(BigInt::from(j), kk.clone());
            let lift = standard_lift(&z, &t, &BigRational::zero());
            let scaled: Option<Vec<QuadInt>> = lift.iter().map(|x| (&qf * x).to_int()).collect();
            let Some(v) = scaled else { continue };
            if !is_primitive(&v).unwrap_or(false) {
                continue;
            }
            let (rep, _) = g.canonicalize(&HeisPoint::new(z.clone(), t));
            found.insert(rep);
        }
    }
    found
}

/// All Γ_∞-orbit representatives of O_d-rational points of depth ≤ n.
pub fn enumerate_points(d: u32, n: u64) -> Result<DepthTable> {
    if n == 0 {
        return Err(Error::Parse("max depth must be at least 1".into()));
    }
    let g = CuspGroup::new(d)?;
    let jobs: Vec<(u64, QuadInt)> =
        (1..=n).flat_map(|k| solve_norm_equation(k, g.params).into_iter().map(move |q| (k, q))).collect();
    let found: Vec<(u64, BTreeSet<HeisPoint>)> = jobs.par_iter().map(|(k, q)| (*k, points_for(&g, *k, q))).collect();
    let mut merged: BTreeMap<u64, BTreeSet<HeisPoint>> = BTreeMap::new();
    for (k, s) in found {
        merged.entry(k).or_default().extend(s);
    }
    let mut table = DepthTable::new(d, n);
    for (k, s) in merged {
        if s.is_empty() {
            continue;
        }
        let mut v: Vec<HeisPoint> = s.into_iter().collect();
        v.sort_by_key(|p| p.key());
        table.rows.insert(k, v);
    }
    Ok(table)
}

/// One fixture entry compared against the enumeration.
#[derive(Clone, Debug)]
pub struct FixtureEntry {
    pub listed_depth: u64,
    pub point: HeisPoint,
    pub true_depth: BigInt,
    pub rep: HeisPoint,
    /// Earlier fixture entry (index) in the same Γ_∞-orbit.
    pub duplicate_of: Option<usize>,
    pub in_enumeration: bool,
}

/// Set comparison of a fixture table against an enumerated one, up to Γ_∞.
#[derive(Clone, Debug)]
pub struct FixtureDiff {
    pub entries: Vec<FixtureEntry>,
    /// Enumerated representatives with no fixture entry in their orbit.
    pub missing: Vec<(u64, HeisPoint)>,
}

impl FixtureDiff {
    pub fn wrong_depth(&self) -> impl Iterator<Item = &FixtureEntry> {
        self.entries.iter().filter(|e| e.true_depth != BigInt::from(e.listed_depth))
    }

    pub fn duplicates(&self) -> impl Iterator<Item = &FixtureEntry> {
        self.entries.iter().filter(|e| e.duplicate_of.is_some())
    }

    pub fn is_exact(&self) -> bool {
        self.missing.is_empty() && self.wrong_depth().next().is_none() && self.duplicates().next().is_none()
    }
}

impl fmt::Display for FixtureDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in self.wrong_depth() {
            writeln!(f, "listed at depth {} but has depth {}: {}", e.listed_depth, e.true_depth, e.point)?;
        }
        for e in self.duplicates() {
            let j = e.duplicate_of.expect("filtered");
            writeln!(f, "depth {}: {} is equivalent to {}", e.listed_depth, e.point, self.entries[j].point)?;
        }
        for (k, p) in &self.missing {
            writeln!(f, "depth {}: {} not listed", k, p)?;
        }
        if self.is_exact() {
            writeln!(f, "fixture matches enumeration")?;
        }
        Ok(())
    }
}

pub fn diff_tables(fixture: &DepthTable, enumerated: &DepthTable) -> Result<FixtureDiff> {
    let g = CuspGroup::new(fixture.d)?;
    let mut entries: Vec<FixtureEntry> = Vec::new();
    let mut first: BTreeMap<HeisPoint, usize> = BTreeMap::new();
    for (k, p) in fixture.iter() {
        let true_depth = depth(&BoundaryPoint::Finite(p.clone()), g.params)?;
        let (rep, _) = g.canonicalize(p);
        let duplicate_of = first.get(&rep).copied();
        first.entry(rep.clone()).or_insert(entries.len());
        let in_enumeration = true_depth.to_u64().and_then(|td| enumerated.rows.get(&td)).map_or(false, |row| row.contains(&rep));
        entries.push(FixtureEntry { listed_depth: k, point: p.clone(), true_depth, rep, duplicate_of, in_enumeration });
    }
    let missing = enumerated
        .iter()
        .filter(|(k, _)| *k <= fixture.max_depth)
        .filter(|(_, p)| !first.contains_key(*p))
        .map(|(k, p)| (k, p.clone()))
        .collect();
    Ok(FixtureDiff { entries, missing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::parse_quad;

    fn hp(z: &str, t: &str, d: u32) -> HeisPoint {
        let p = RingParams::new(d).unwrap();
        HeisPoint::new(parse_quad(z, p).unwrap(), crate::ring::parse_rational(t).unwrap())
    }

    #[test]
    fn small_depths_d2() {
        let t = enumerate_points(2, 5).unwrap();
        assert_eq!(t.rows[&1], vec![hp("0", "0", 2)]);
        assert_eq!(t.rows[&2], vec![hp("0", "1", 2)]);
        assert!(!t.rows.contains_key(&5));
        assert_eq!(depth_histogram(&t.truncate(4)), BTreeMap::from([(1, 1), (2, 1), (3, 2), (4, 2)]));
    }

    #[test]
    fn every_point_has_its_depth() {
        for d in [2, 11] {
            let t = enumerate_points(d, 12).unwrap();
            let g = CuspGroup::new(d).unwrap();
            for (k, p) in t.iter() {
                assert_eq!(depth(&BoundaryPoint::Finite(p.clone()), g.params).unwrap(), BigInt::from(k));
                assert!(g.in_prism(p));
                assert_eq!(&g.canonicalize(p).0, p);
            }
            for row in t.rows.values() {
                for (i, a) in row.iter().enumerate() {
                    for b in &row[i + 1..] {
                        assert!(g.orbit_match(a, b).is_none());
                    }
                }
            }
        }
    }

    #[test]
    fn missing_depths_d2() {
        let t = enumerate_points(2, 16).unwrap();
        let p = RingParams::new(2).unwrap();
        for k in [5u64, 7, 10, 13, 14, 15] {
            assert!(!t.rows.contains_key(&k));
            assert!(solve_norm_equation(k, p).is_empty());
        }
    }

    /// Direct scan over z = (x + y·i√2)/N and t ∈ (1/2N)Z, keeping depth ≤ 4.
    #[test]
    fn brute_force_oracle_d2() {
        let g = CuspGroup::new(2).unwrap();
        let p = g.params;
        let mut oracle: BTreeMap<u64, BTreeSet<HeisPoint>> = BTreeMap::new();
        for den in 1..=4i64 {
            for x in -2..=3 * den {
                for y in -1..=2 * den {
                    let z = QuadField::from_isd(BigRational::new(x.into(), den.into()), BigRational::new(y.into(), den.into()), p);
                    for j in 0..4 * den {
                        let t = BigRational::new(j.into(), (2 * den).into());
                        let pt = HeisPoint::new(z.clone(), t);
                        let k = depth(&BoundaryPoint::Finite(pt.clone()), p).unwrap();
                        if k <= BigInt::from(4) {
                            oracle.entry(k.to_u64().unwrap()).or_default().insert(g.canonicalize(&pt).0);
                        }
                    }
                }
            }
        }
        let t = enumerate_points(2, 4).unwrap();
        for (k, row) in &t.rows {
            let set: BTreeSet<HeisPoint> = row.iter().cloned().collect();
            assert_eq!(set, oracle[k], "depth {}", k);
        }
        assert_eq!(t.rows.len(), oracle.len());
    }

    #[test]
    fn table_round_trip() {
        let t = enumerate_points(11, 6).unwrap();
        let back = DepthTable::parse(&t.to_text(), 11, "t").unwrap();
        assert_eq!(back.rows, t.rows);
        assert!(DepthTable::parse("d 2\n", 11, "t").is_err());
        assert!(DepthTable::parse("depth x : 0 ; 0\n", 2, "t").is_err());
        let empty = DepthTable::parse("", 2, "t").unwrap();
        assert!(depth_histogram(&empty).is_empty());
    }

    #[test]
    fn orbit_match_examples() {
        let g = CuspGroup::new(2).unwrap();
        let a = hp("0", "2", 2);
        let o = hp("0", "0", 2);
        let nf = g.orbit_match(&a, &o).unwrap();
        assert_eq!(g.element(&nf).act(&a), o);
        assert_eq!(nf.n, -1);
        assert!(g.orbit_match(&hp("0", "1", 2), &o).is_none());
        assert!(g.orbit_match(&o, &o).unwrap().is_identity());
    }
}
