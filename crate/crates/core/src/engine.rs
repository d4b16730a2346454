//! Relation search: witnesses, exponent bounds and Macbeath relations.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heisenberg::{cygan_dist4, CuspElement, CuspGroup, CuspNormalForm, HeisPoint};
use crate::hermitian::{depth, parse_matrix_file, to_field_vec, vector_to_point, BoundaryPoint, GroupMatrix, NamedMatrix};
use crate::points::DepthTable;
use crate::presentation::{free_reduce, gen_of, inverse, letter, Presentation, Word};
use crate::ring::{QuadInt, RingParams};

/// Product of generator matrices along a word.
pub fn evaluate_word(w: &[i32], gens: &[GroupMatrix], params: RingParams) -> GroupMatrix {
    let inv: Vec<GroupMatrix> = gens.iter().map(|g| g.inverse()).collect();
    w.iter().fold(GroupMatrix::identity(params), |acc, &l| {
        let g = gen_of(l);
        acc.mul(if l > 0 { &gens[g] } else { &inv[g] })
    })
}

/// Indices of relators that do not evaluate to a unit scalar.
pub fn failing_relators(p: &Presentation, gens: &[GroupMatrix], params: RingParams) -> Vec<usize> {
    let inv: Vec<GroupMatrix> = gens.iter().map(|g| g.inverse()).collect();
    let bad: Vec<Option<usize>> = p
        .relators
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let m = w.iter().fold(GroupMatrix::identity(params), |acc, &l| {
                let g = gen_of(l);
                acc.mul(if l > 0 { &gens[g] } else { &inv[g] })
            });
            (!m.is_unit_scalar()).then_some(i)
        })
        .collect();
    bad.into_iter().flatten().collect()
}

/// Matrices for the generators of `p`, looked up by name.
pub fn generator_matrices(p: &Presentation, named: &[NamedMatrix]) -> Result<Vec<GroupMatrix>> {
    p.gens
        .iter()
        .map(|g| {
            named
                .iter()
                .find(|m| &m.name == g)
                .map(|m| m.matrix.clone())
                .ok_or_else(|| Error::Parse(format!("no matrix for generator `{}`", g)))
        })
        .collect()
}

/// A matrix sending ∞ to a boundary point.
#[derive(Clone, Debug)]
pub struct Witness {
    pub name: String,
    pub matrix: GroupMatrix,
    pub point: HeisPoint,
}

/// True iff A is unitary, integral, and A(∞) = p.
pub fn verify_witness(a: &GroupMatrix, p: &BoundaryPoint) -> bool {
    crate::hermitian::is_unitary(a.rows()) && &a.apply(&BoundaryPoint::Infinity) == p
}

#[derive(Clone, Debug)]
pub struct WitnessSet {
    pub d: u32,
    pub witnesses: Vec<Witness>,
    /// Records dropped while loading (repeated identical entries).
    pub notes: Vec<String>,
}

impl WitnessSet {
    pub fn from_matrices(d: u32, mats: Vec<NamedMatrix>) -> Result<WitnessSet> {
        let mut witnesses: Vec<Witness> = Vec::new();
        let mut notes = Vec::new();
        for nm in mats {
            if nm.matrix.params().d() != d {
                return Err(Error::Parse(format!("{} is over d = {}, expected {}", nm.name, nm.matrix.params().d(), d)));
            }
            if let Some(prev) = witnesses.iter().find(|w| w.name == nm.name) {
                if prev.matrix == nm.matrix {
                    notes.push(format!("{} is listed twice with identical entries; one copy kept", nm.name));
                    continue;
                }
                return Err(Error::Parse(format!("{} is listed twice with different entries", nm.name)));
            }
            let point = match nm.matrix.apply(&BoundaryPoint::Infinity) {
                BoundaryPoint::Finite(p) => p,
                BoundaryPoint::Infinity => {
                    return Err(Error::Verification(format!("{} fixes ∞ and witnesses no finite point", nm.name)))
                }
            };
            witnesses.push(Witness { name: nm.name, matrix: nm.matrix, point });
        }
        Ok(WitnessSet { d, witnesses, notes })
    }

    pub fn parse(text: &str, d: u32, file: &str) -> Result<WitnessSet> {
        WitnessSet::from_matrices(d, parse_matrix_file(text, file)?)
    }

    pub fn len(&self) -> usize {
        self.witnesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn push(&mut self, name: String, matrix: GroupMatrix) -> Result<()> {
        let mut extra = WitnessSet::from_matrices(self.d, vec![NamedMatrix { name, matrix }])?;
        self.witnesses.append(&mut extra.witnesses);
        Ok(())
    }

    /// For each Γ_∞-class with a witness: the first such witness c and h ∈ Γ_∞ with h·p_c = rep.
    pub fn class_index(&self, g: &CuspGroup) -> HashMap<HeisPoint, (usize, CuspElement)> {
        let mut idx = HashMap::new();
        for (i, w) in self.witnesses.iter().enumerate() {
            let (rep, h) = g.canonicalize_element(&w.point);
            idx.entry(rep).or_insert((i, h));
        }
        idx
    }
}

/// Witness check against a depth table, pairing matrices with points by image.
#[derive(Clone, Debug)]
pub struct WitnessReport {
    /// (witness name, image point, depth of image, matching table entry (depth, index in row)).
    pub rows: Vec<(String, HeisPoint, BigInt, Option<(u64, usize)>)>,
    /// Table entries no witness reaches.
    pub unmatched: Vec<(u64, HeisPoint)>,
    pub notes: Vec<String>,
    /// Per depth: (listed points, witnesses).
    pub per_depth: BTreeMap<u64, (usize, usize)>,
}

impl WitnessReport {
    pub fn all_verified(&self) -> bool {
        self.rows.iter().all(|r| r.3.is_some())
    }
}

impl fmt::Display for WitnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, p, dep, m) in &self.rows {
            match m {
                Some((k, j)) => writeln!(f, "{:<8} -> {}  depth {}  = p_{{{},{}}}  ok", name, p, dep, k, j + 1)?,
                None => writeln!(f, "{:<8} -> {}  depth {}  matches no listed point", name, p, dep)?,
            }
        }
        for n in &self.notes {
            writeln!(f, "note: {}", n)?;
        }
        for (k, p) in &self.unmatched {
            writeln!(f, "no witness for depth {} point {}", k, p)?;
        }
        for (k, (pts, ws)) in &self.per_depth {
            if pts != ws {
                writeln!(f, "depth {}: {} listed points, {} witnesses", k, pts, ws)?;
            }
        }
        Ok(())
    }
}

pub fn witness_report(ws: &WitnessSet, table: &DepthTable) -> Result<WitnessReport> {
    let params = RingParams::new(ws.d)?;
    let mut rows = Vec::new();
    let mut hit: HashSet<(u64, usize)> = HashSet::new();
    let mut per_depth: BTreeMap<u64, (usize, usize)> = table.rows.iter().map(|(k, v)| (*k, (v.len(), 0))).collect();
    for w in &ws.witnesses {
        let fp = BoundaryPoint::Finite(w.point.clone());
        let dep = depth(&fp, params)?;
        let found = table.rows.iter().find_map(|(k, row)| {
            row.iter().position(|p| p == &w.point && verify_witness(&w.matrix, &fp)).map(|j| (*k, j))
        });
        if let Some(m) = found {
            hit.insert(m);
            per_depth.entry(m.0).or_default().1 += 1;
        }
        rows.push((w.name.clone(), w.point.clone(), dep, found));
    }
    let unmatched = table
        .rows
        .iter()
        .flat_map(|(k, row)| row.iter().enumerate().map(move |(j, p)| (*k, j, p)))
        .filter(|(k, j, _)| !hit.contains(&(*k, *j)))
        .map(|(k, _, p)| (k, p.clone()))
        .collect();
    Ok(WitnessReport { rows, unmatched, notes: ws.notes.clone(), per_depth })
}

fn nf_len(nf: &CuspNormalForm) -> usize {
    nf.p as usize + (nf.n.unsigned_abs() + nf.m.unsigned_abs() + nf.l.unsigned_abs()) as usize
}

/// Best-effort search for a matrix sending ∞ to `target`: products
/// I₀·γ_k ⋯ I₀·γ_1 with γ_i ∈ Γ_∞, word length at most `budget`, explored
/// cheapest first over Γ_∞-classes, finished by the matching cusp element.
pub fn search_witness(g: &CuspGroup, target: &HeisPoint, budget: usize) -> Option<GroupMatrix> {
    let params = g.params;
    let i0 = GroupMatrix::j(params);
    let tdepth = depth(&BoundaryPoint::Finite(target.clone()), params).ok()?;
    let limit = (&tdepth * BigInt::from(4)).max(BigInt::from(64));
    let reach = |m: &GroupMatrix| -> Option<GroupMatrix> {
        let x = m.apply(&BoundaryPoint::Infinity);
        let x = x.finite()?;
        let nf = g.orbit_match(x, target)?;
        Some(g.matrix(&nf).mul(m))
    };
    if budget == 0 {
        return None;
    }
    let k = budget as i64;
    let mut moves: Vec<(usize, CuspNormalForm)> = Vec::new();
    for p in 0..=1u8 {
        for n in -k..=k {
            for m in -k..=k {
                for l in -k..=k {
                    let nf = CuspNormalForm::new(p, n, m, l);
                    let len = nf_len(&nf);
                    if len < budget {
                        moves.push((len, nf));
                    }
                }
            }
        }
    }
    moves.sort_by_key(|(len, nf)| (*len, nf.p, nf.n, nf.m, nf.l));
    let move_mats: Vec<(usize, GroupMatrix)> = moves.iter().map(|(len, nf)| (*len + 1, i0.mul(&g.matrix(nf)))).collect();
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::new();
    let mut states: Vec<GroupMatrix> = vec![GroupMatrix::identity(params)];
    let mut seen: HashSet<HeisPoint> = HashSet::new();
    heap.push(Reverse((0, 0)));
    while let Some(Reverse((cost, si))) = heap.pop() {
        let m = states[si].clone();
        for (mc, mm) in &move_mats {
            let c = cost + mc;
            if c > budget {
                break;
            }
            let next = mm.mul(&m);
            let BoundaryPoint::Finite(y) = next.apply(&BoundaryPoint::Infinity) else { continue };
            if let Some(found) = reach(&next) {
                return Some(found);
            }
            let dy = match depth(&BoundaryPoint::Finite(y.clone()), params) {
                Ok(v) => v,
                Err(_) => continue,
            };
            if dy > limit {
                continue;
            }
            let (rep, _) = g.canonicalize(&y);
            if seen.insert(rep) && states.len() < 4096 {
                states.push(next);
                heap.push(Reverse((c, states.len() - 1)));
            }
        }
    }
    None
}

/// Bounds on |n|, |m|, |l| in normal forms R^p T_v^n T_x^m T_y^l.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExponentBounds {
    pub n: i64,
    pub m: i64,
    pub l: i64,
}

impl ExponentBounds {
    pub fn contains(&self, nf: &CuspNormalForm) -> bool {
        nf.n.abs() <= self.n && nf.m.abs() <= self.m && nf.l.abs() <= self.l
    }

    pub fn dominates(&self, o: &ExponentBounds) -> bool {
        self.n >= o.n && self.m >= o.m && self.l >= o.l
    }

    /// All normal forms in the box, ordered by (p, n, m, l).
    pub fn elements(&self) -> Vec<CuspNormalForm> {
        let mut v = Vec::new();
        for p in 0..=1u8 {
            for n in -self.n..=self.n {
                for m in -self.m..=self.m {
                    for l in -self.l..=self.l {
                        v.push(CuspNormalForm::new(p, n, m, l));
                    }
                }
            }
        }
        v
    }
}

impl fmt::Display for ExponentBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.n, self.m, self.l)
    }
}

/// Where the witness-distance maximum came from.
#[derive(Clone, Debug, PartialEq)]
pub enum WitnessRadius {
    Computed(BigRational),
    Given(f64),
}

#[derive(Clone, Debug)]
pub struct BoundsReport {
    pub max_table_depth: u64,
    /// max d_C(p_i, p₀)⁴ over table points.
    pub max_p4: BigRational,
    pub max_w: WitnessRadius,
    pub max_p: f64,
    pub max_w_value: f64,
    /// (4 · max depth)^{1/4}.
    pub radius: f64,
    /// Radii for γ¹, γ³, γ* (Case 1), γ¹ and γ* (Case 2), γ¹ and γ* (Case 3).
    pub case_bounds: Vec<(&'static str, f64)>,
    pub bound: f64,
    pub bounds: ExponentBounds,
    /// (m, l) realizing the largest |n|.
    pub n_witness: (i64, i64),
    /// Lattice points whose feasibility was within rounding of the boundary (treated as feasible).
    pub near_boundary: usize,
}

impl fmt::Display for BoundsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "max table depth {}  radius (4n)^(1/4) = {:.4}", self.max_table_depth, self.radius)?;
        writeln!(f, "max d_C(p_i, p0) = {:.4}", self.max_p)?;
        match &self.max_w {
            WitnessRadius::Computed(_) => writeln!(f, "max d_C(p0, A_i^-1 inf) = {:.4}", self.max_w_value)?,
            WitnessRadius::Given(v) => writeln!(f, "max d_C(p0, A_i^-1 inf) = {:.4} (given)", v)?,
        }
        for (name, b) in &self.case_bounds {
            writeln!(f, "  {:<10} {:.4}", name, b)?;
        }
        writeln!(f, "bounds |n|,|m|,|l| <= {}  (|n| attained at (m,l) = {:?})", self.bounds, self.n_witness)
    }
}

fn fourth_root(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN).powf(0.25)
}

/// Largest feasible |n|, |m|, |l| with d_C(γp₀, p₀) ≤ radius.
pub fn exponent_box(g: &CuspGroup, radius: f64) -> (ExponentBounds, (i64, i64), usize) {
    let d = g.params.d() as f64;
    let r4 = radius.powi(4);
    let period = g.period().to_f64().unwrap_or(f64::NAN);
    let span = (4.0 * radius).ceil() as i64 + 2;
    let tol = 1e-9 * r4.max(1.0);
    let mut best = ExponentBounds { n: 0, m: 0, l: 0 };
    let mut nw = (0, 0);
    let mut near = 0;
    for m in -span..=span {
        for l in -span..=span {
            let h = g.x.pow(m).mul(&g.y.pow(l));
            let nz = h.z.norm().to_f64().unwrap_or(f64::NAN);
            let rest = r4 - nz * nz;
            if rest < -tol {
                continue;
            }
            if rest.abs() <= tol {
                near += 1;
            }
            let t0 = h.t.to_f64().unwrap_or(f64::NAN);
            let reach = (rest.max(0.0) / d).sqrt();
            // |n·period + t0| ≤ reach
            let lo = ((-reach - t0) / period - 1e-9).ceil() as i64;
            let hi = ((reach - t0) / period + 1e-9).floor() as i64;
            if lo > hi {
                continue;
            }
            for n in [lo, hi] {
                let v = d * (n as f64 * period + t0).powi(2) - rest;
                if v.abs() <= tol {
                    near += 1;
                }
            }
            best.m = best.m.max(m.abs());
            best.l = best.l.max(l.abs());
            let nmax = lo.abs().max(hi.abs());
            if nmax > best.n {
                best.n = nmax;
                nw = (m, l);
            }
        }
    }
    (best, nw, near)
}

/// Exponent bounds from the table and witness distance maxima.
pub fn exponent_bounds(g: &CuspGroup, table: &DepthTable, max_w: WitnessRadius) -> Result<BoundsReport> {
    let o = HeisPoint::origin(g.params);
    let max_p4 = table.iter().map(|(_, p)| cygan_dist4(p, &o)).max().unwrap_or_else(BigRational::zero);
    let max_table_depth = table.rows.keys().copied().max().unwrap_or(0);
    let radius = (4.0 * max_table_depth as f64).powf(0.25);
    let max_p = fourth_root(&max_p4);
    let max_w_value = match &max_w {
        WitnessRadius::Computed(r) => fourth_root(r),
        WitnessRadius::Given(v) => *v,
    };
    let case_bounds = vec![
        ("case1 g1", max_w_value + radius + max_p),
        ("case1 g3", radius + 2.0 * max_p),
        ("case1 g*", radius + 2.0 * max_w_value),
        ("case2 g1", max_w_value + max_p),
        ("case2 g*", max_w_value + max_p),
        ("case3 g1", 2.0 * max_p),
        ("case3 g*", 2.0 * max_w_value),
    ];
    let bound = case_bounds.iter().map(|c| c.1).fold(0.0, f64::max);
    let (bounds, n_witness, near_boundary) = exponent_box(g, bound);
    Ok(BoundsReport {
        max_table_depth,
        max_p4,
        max_w,
        max_p,
        max_w_value,
        radius,
        case_bounds,
        bound,
        bounds,
        n_witness,
        near_boundary,
    })
}

/// max d_C(p₀, A_i⁻¹∞)⁴ over the witnesses.
pub fn witness_radius4(ws: &WitnessSet) -> BigRational {
    let params = RingParams::new(ws.d).expect("validated");
    let o = HeisPoint::origin(params);
    ws.witnesses
        .iter()
        .filter_map(|w| w.matrix.inverse().apply(&BoundaryPoint::Infinity).finite().map(|q| cygan_dist4(&o, q)))
        .max()
        .unwrap_or_else(BigRational::zero)
}

/// What the Cygan distance identity allows for the third point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gate {
    /// A_a γ¹ p_b = ∞.
    Infinity,
    Depth(u64),
    Empty,
}

/// dep(p_c) = d_C(A_a⁻¹∞, γ¹p_b)⁴ · dep(p_a) · dep(p_b) / 4, if a positive integer ≤ n.
pub fn cygan_gate(g: &CuspGroup, a: &GroupMatrix, gamma1: &CuspNormalForm, pb: &HeisPoint, n: u64) -> Result<Gate> {
    let params = g.params;
    let Some(qa) = a.inverse().apply(&BoundaryPoint::Infinity).finite().cloned() else {
        return Err(Error::Parse("A_a fixes ∞".into()));
    };
    let pa = a.apply(&BoundaryPoint::Infinity);
    let x = g.element(gamma1).act(pb);
    let dist4 = cygan_dist4(&qa, &x);
    if dist4.is_zero() {
        return Ok(Gate::Infinity);
    }
    let da = depth(&pa, params)?;
    let db = depth(&BoundaryPoint::Finite(pb.clone()), params)?;
    let c = dist4 * BigRational::from_integer(da * db) / BigRational::from_integer(4.into());
    if !c.is_integer() {
        return Ok(Gate::Empty);
    }
    match c.to_integer().to_u64() {
        Some(k) if k >= 1 && k <= n && !crate::ring::solve_norm_equation(k, params).is_empty() => Ok(Gate::Depth(k)),
        _ => Ok(Gate::Empty),
    }
}

/// A slot in a relation: a witness index or the point ∞.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Witness(usize),
    Infinity,
}

#[derive(Clone, Debug)]
pub struct RawRelation {
    pub a: Slot,
    pub b: Slot,
    pub c: Slot,
    pub gamma1: CuspNormalForm,
    pub gamma3: CuspNormalForm,
    pub gamma_star: CuspNormalForm,
    /// (γ*)⁻¹ A_c⁻¹ (γ³)⁻¹ A_a γ¹ A_b over cusp generators then witnesses.
    pub word: Word,
}

/// Small exact arithmetic in O_d for the depth gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Sq {
    a: i128,
    b: i128,
}

#[derive(Clone, Copy)]
struct SqRing {
    half: bool,
    d: i128,
}

impl SqRing {
    fn mul(&self, x: Sq, y: Sq) -> Sq {
        let bb = x.b * y.b;
        if self.half {
            Sq { a: x.a * y.a - bb * ((1 + self.d) / 4), b: x.a * y.b + x.b * y.a + bb }
        } else {
            Sq { a: x.a * y.a - bb * self.d, b: x.a * y.b + x.b * y.a }
        }
    }

    fn add(&self, x: Sq, y: Sq) -> Sq {
        Sq { a: x.a + y.a, b: x.b + y.b }
    }

    fn norm(&self, x: Sq) -> i128 {
        if self.half {
            x.a * x.a + x.a * x.b + x.b * x.b * ((1 + self.d) / 4)
        } else {
            x.a * x.a + self.d * x.b * x.b
        }
    }
}

fn small(q: &QuadInt) -> Option<Sq> {
    Some(Sq { a: q.a.to_i128()?, b: q.b.to_i128()? })
}

fn small_matrix(m: &GroupMatrix) -> Option<[[Sq; 3]; 3]> {
    let mut out = [[Sq { a: 0, b: 0 }; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = small(m.entry(i, j))?;
        }
    }
    Some(out)
}

/// Tallies from a relation run.
#[derive(Clone, Debug, Default)]
pub struct RelationStats {
    pub triples: u64,
    pub gated: u64,
    pub case1: u64,
    pub case2: u64,
    pub case3: u64,
    /// Third points whose class has no witness.
    pub missing_witness: u64,
    /// Relations dropped because γ* left the exponent box.
    pub out_of_box: u64,
    pub raw: usize,
    pub distinct: usize,
}

impl fmt::Display for RelationStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "triples examined      {}", self.triples)?;
        writeln!(f, "passed depth gate     {}", self.gated)?;
        writeln!(f, "case 1 / 2 / 3        {} / {} / {}", self.case1, self.case2, self.case3)?;
        writeln!(f, "third point unwitnessed {}", self.missing_witness)?;
        writeln!(f, "gamma* outside box    {}", self.out_of_box)?;
        writeln!(f, "relations raw         {}", self.raw)?;
        write!(f, "relations distinct    {}", self.distinct)
    }
}

#[derive(Clone, Debug)]
pub struct RelationRun {
    pub generators: Vec<String>,
    pub relations: Vec<RawRelation>,
    pub stats: RelationStats,
}

/// Generator names: cusp generators then witnesses.
pub fn generator_names(g: &CuspGroup, ws: &WitnessSet) -> Vec<String> {
    g.names.iter().map(|s| s.to_string()).chain(ws.witnesses.iter().map(|w| w.name.clone())).collect()
}

/// Generator matrices in the order of [`generator_names`].
pub fn all_generator_matrices(g: &CuspGroup, ws: &WitnessSet) -> Vec<GroupMatrix> {
    g.generator_matrices().into_iter().map(|(_, m)| m).chain(ws.witnesses.iter().map(|w| w.matrix.clone())).collect()
}

fn cusp_word(nf: &CuspNormalForm) -> Word {
    let mut w = Vec::new();
    if nf.p == 1 {
        w.push(letter(3, false));
    }
    for (gen, e) in [(0usize, nf.n), (1, nf.m), (2, nf.l)] {
        for _ in 0..e.unsigned_abs() {
            w.push(letter(gen, e < 0));
        }
    }
    w
}

fn wit(i: usize, inv: bool) -> i32 {
    letter(4 + i, inv)
}

struct Ctx<'a> {
    g: &'a CuspGroup,
    ws: &'a WitnessSet,
    bounds: ExponentBounds,
    box_elems: Vec<CuspNormalForm>,
    box_mats: Vec<GroupMatrix>,
    classes: HashMap<HeisPoint, (usize, CuspElement)>,
    gens: Vec<GroupMatrix>,
    ring: SqRing,
    small_box: Vec<[[Sq; 3]; 3]>,
    small_cols: Vec<[Sq; 3]>,
    small_rows: Vec<[Sq; 3]>,
}

impl Ctx<'_> {
    fn verify(&self, word: &Word) -> Result<()> {
        if evaluate_word(word, &self.gens, self.g.params).is_unit_scalar() {
            Ok(())
        } else {
            Err(Error::Verification(format!("relation {:?} does not evaluate to a scalar", word)))
        }
    }

    fn gate_depth(&self, a: usize, gi: usize, b: usize) -> i128 {
        let r = self.ring;
        let gm = &self.small_box[gi];
        let col = &self.small_cols[b];
        let mut v = [Sq { a: 0, b: 0 }; 3];
        for (i, vi) in v.iter_mut().enumerate() {
            for (j, cj) in col.iter().enumerate() {
                *vi = r.add(*vi, r.mul(gm[i][j], *cj));
            }
        }
        let row = &self.small_rows[a];
        let mut s = Sq { a: 0, b: 0 };
        for j in 0..3 {
            s = r.add(s, r.mul(row[j], v[j]));
        }
        r.norm(s)
    }

    fn case12(&self, a: usize, gi: usize, b: usize, dep: i128, max_depth: u64, stats: &mut RelationStats) -> Result<Option<RawRelation>> {
        let g = self.g;
        let wa = &self.ws.witnesses[a];
        let wb = &self.ws.witnesses[b];
        let g1 = &self.box_elems[gi];
        let g1m = &self.box_mats[gi];
        if dep == 0 {
            let m = wa.matrix.mul(g1m).mul(&wb.matrix);
            let gs = g.normal_form(&m)?;
            if !self.bounds.contains(&gs) {
                stats.out_of_box += 1;
                return Ok(None);
            }
            let mut word = inverse(&cusp_word(&gs));
            word.push(wit(a, false));
            word.extend(cusp_word(g1));
            word.push(wit(b, false));
            let word = free_reduce(&word);
            self.verify(&word)?;
            stats.case2 += 1;
            let id = CuspNormalForm::new(0, 0, 0, 0);
            return Ok(Some(RawRelation { a: Slot::Witness(a), b: Slot::Witness(b), c: Slot::Infinity, gamma1: *g1, gamma3: id, gamma_star: gs, word }));
        }
        if dep as u128 > max_depth as u128 {
            return Ok(None);
        }
        let v = wa.matrix.apply_int(&g1m.apply_int(&wb.matrix.col(0)));
        let BoundaryPoint::Finite(x) = vector_to_point(&to_field_vec(&v), g.params) else {
            return Err(Error::Verification("depth gate disagrees with the image point".into()));
        };
        let (rep, gx) = g.canonicalize_element(&x);
        let Some((c, h)) = self.classes.get(&rep) else {
            stats.missing_witness += 1;
            return Ok(None);
        };
        let c = *c;
        // x = gx⁻¹·rep = gx⁻¹·h·p_c
        let g3 = gx.inverse().compose(h);
        let g3nf = g.normal_form_of(&g3)?;
        let wc = &self.ws.witnesses[c];
        let m = wc.matrix.inverse().mul(&g3.matrix().inverse()).mul(&wa.matrix).mul(g1m).mul(&wb.matrix);
        let gs = g.normal_form(&m)?;
        if !self.bounds.contains(&gs) {
            stats.out_of_box += 1;
            return Ok(None);
        }
        let mut word = inverse(&cusp_word(&gs));
        word.push(wit(c, true));
        word.extend(inverse(&cusp_word(&g3nf)));
        word.push(wit(a, false));
        word.extend(cusp_word(g1));
        word.push(wit(b, false));
        let word = free_reduce(&word);
        self.verify(&word)?;
        stats.case1 += 1;
        Ok(Some(RawRelation { a: Slot::Witness(a), b: Slot::Witness(b), c: Slot::Witness(c), gamma1: *g1, gamma3: g3nf, gamma_star: gs, word }))
    }

    /// γ·p_a is a witness point p_c: A_c⁻¹ γ A_a fixes ∞.
    fn case3(&self, a: usize, by_point: &HashMap<&HeisPoint, Vec<usize>>, stats: &mut RelationStats) -> Result<Vec<RawRelation>> {
        let g = self.g;
        let wa = &self.ws.witnesses[a];
        let mut out = Vec::new();
        for (gi, nf) in self.box_elems.iter().enumerate() {
            let y = g.element(nf).act(&wa.point);
            let Some(cs) = by_point.get(&y) else { continue };
            for &c in cs {
                let wc = &self.ws.witnesses[c];
                let m = wc.matrix.inverse().mul(&self.box_mats[gi]).mul(&wa.matrix);
                let gs = g.normal_form(&m)?;
                if !self.bounds.contains(&gs) {
                    stats.out_of_box += 1;
                    continue;
                }
                let mut word = inverse(&cusp_word(&gs));
                word.push(wit(c, true));
                word.extend(cusp_word(nf));
                word.push(wit(a, false));
                let word = free_reduce(&word);
                self.verify(&word)?;
                stats.case3 += 1;
                let g3 = g.normal_form_of(&g.element(nf).inverse())?;
                out.push(RawRelation {
                    a: Slot::Witness(a),
                    b: Slot::Infinity,
                    c: Slot::Witness(c),
                    gamma1: CuspNormalForm::new(0, 0, 0, 0),
                    gamma3: g3,
                    gamma_star: gs,
                    word,
                });
            }
        }
        Ok(out)
    }
}

/// Enumerate and verify the relations R_{a,b,c} over the exponent box.
/// Work is split over `a`; the output order is (a, case, γ¹, b) regardless of thread count.
pub fn enumerate_relations(g: &CuspGroup, ws: &WitnessSet, bounds: ExponentBounds, max_depth: u64) -> Result<RelationRun> {
    let box_elems = bounds.elements();
    let box_mats: Vec<GroupMatrix> = box_elems.iter().map(|nf| g.matrix(nf)).collect();
    let unsupported = || Error::Unsupported("matrix entries too large for the depth gate".into());
    let small_box = box_mats.iter().map(small_matrix).collect::<Option<Vec<_>>>().ok_or_else(unsupported)?;
    let mut small_cols = Vec::new();
    let mut small_rows = Vec::new();
    for w in &ws.witnesses {
        let m = small_matrix(&w.matrix).ok_or_else(unsupported)?;
        small_cols.push([m[0][0], m[1][0], m[2][0]]);
        small_rows.push(m[2]);
    }
    let ctx = Ctx {
        g,
        ws,
        bounds,
        box_elems,
        box_mats,
        classes: ws.class_index(g),
        gens: all_generator_matrices(g, ws),
        ring: SqRing { half: g.params.half_omega(), d: g.params.d() as i128 },
        small_box,
        small_cols,
        small_rows,
    };
    let mut by_point: HashMap<&HeisPoint, Vec<usize>> = HashMap::new();
    for (i, w) in ws.witnesses.iter().enumerate() {
        by_point.entry(&w.point).or_default().push(i);
    }
    let nw = ws.len();
    let per_a: Vec<Result<(Vec<RawRelation>, RelationStats)>> = (0..nw)
        .into_par_iter()
        .map(|a| {
            let mut stats = RelationStats::default();
            let mut rels = Vec::new();
            for gi in 0..ctx.box_elems.len() {
                for b in 0..nw {
                    stats.triples += 1;
                    let dep = ctx.gate_depth(a, gi, b);
                    if dep as u128 > max_depth as u128 {
                        continue;
                    }
                    stats.gated += 1;
                    if let Some(r) = ctx.case12(a, gi, b, dep, max_depth, &mut stats)? {
                        rels.push(r);
                    }
                }
            }
            rels.extend(ctx.case3(a, &by_point, &mut stats)?);
            Ok((rels, stats))
        })
        .collect();
    let mut relations = Vec::new();
    let mut stats = RelationStats::default();
    for r in per_a {
        let (rels, s) = r?;
        relations.extend(rels);
        stats.triples += s.triples;
        stats.gated += s.gated;
        stats.case1 += s.case1;
        stats.case2 += s.case2;
        stats.case3 += s.case3;
        stats.missing_witness += s.missing_witness;
        stats.out_of_box += s.out_of_box;
    }
    stats.raw = relations.len();
    stats.distinct = relations.iter().map(|r| &r.word).collect::<HashSet<_>>().len();
    Ok(RelationRun { generators: generator_names(g, ws), relations, stats })
}

fn slot_name(s: Slot, ws: &WitnessSet) -> String {
    match s {
        Slot::Witness(i) => ws.witnesses[i].name.clone(),
        Slot::Infinity => "inf".to_string(),
    }
}

/// One line per relation: `a b c : word`.
pub fn relation_log(run: &RelationRun, ws: &WitnessSet) -> String {
    let p = Presentation { gens: run.generators.clone(), relators: Vec::new() };
    let mut s = String::new();
    for r in &run.relations {
        s.push_str(&format!(
            "{} {} {} : {}\n",
            slot_name(r.a, ws),
            slot_name(r.b, ws),
            slot_name(r.c, ws),
            p.word_to_string(&r.word)
        ));
    }
    s
}

/// Cusp generators and relators together with the relation words.
pub fn assemble_presentation(g: &CuspGroup, ws: &WitnessSet, relations: &[RawRelation]) -> Result<Presentation> {
    let gens = generator_names(g, ws);
    let mut text = format!("gens: {}\n", gens.join(" "));
    for r in g.relator_texts() {
        text.push_str(&r);
        text.push('\n');
    }
    let cusp = Presentation::parse(&text)?;
    let mut relators = cusp.relators;
    let mut seen: HashSet<&Word> = HashSet::new();
    for r in relations {
        if seen.insert(&r.word) {
            relators.push(r.word.clone());
        }
    }
    Ok(Presentation::new(gens, relators))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::parse_quad;

    const W2: &str = include_str!("../data/witnesses_d2.txt");

    fn hp(z: &str, t: &str, d: u32) -> HeisPoint {
        let p = RingParams::new(d).unwrap();
        HeisPoint::new(parse_quad(z, p).unwrap(), crate::ring::parse_rational(t).unwrap())
    }

    #[test]
    fn witness_examples() {
        let ws = WitnessSet::parse(W2, 2, "w").unwrap();
        let a31 = ws.witnesses.iter().find(|w| w.name == "A_3_1").unwrap();
        assert!(verify_witness(&a31.matrix, &BoundaryPoint::Finite(hp("2/3+1/3*w", "2/3", 2))));
        let p = RingParams::new(2).unwrap();
        let p0 = BoundaryPoint::Finite(HeisPoint::origin(p));
        assert!(!verify_witness(&GroupMatrix::identity(p), &p0));
        assert!(verify_witness(&GroupMatrix::j(p), &p0));
    }

    #[test]
    fn duplicate_records() {
        let text = format!("{}\nA_2_1 2\n-1 0 w\n0 1 0\nw 0 1\n", W2);
        let ws = WitnessSet::parse(&text, 2, "w").unwrap();
        assert_eq!(ws.notes.len(), 2);
        assert!(ws.notes[0].starts_with("A_9_11"));
        assert_eq!(ws.len(), 50);
        let bad = format!("{}\nA_2_1 2\n1 0 0\n0 1 0\n0 0 1\n", W2);
        assert!(WitnessSet::parse(&bad, 2, "w").is_err());
    }

    #[test]
    fn search_small() {
        let g = CuspGroup::new(2).unwrap();
        let o = HeisPoint::origin(g.params);
        let m = search_witness(&g, &o, 1).unwrap();
        assert_eq!(m, GroupMatrix::j(g.params));
        let target = hp("0", "1", 2);
        let m = search_witness(&g, &target, 6).unwrap();
        assert!(verify_witness(&m, &BoundaryPoint::Finite(target)));
    }

    #[test]
    fn gate_examples() {
        let g = CuspGroup::new(2).unwrap();
        let i0 = GroupMatrix::j(g.params);
        let o = HeisPoint::origin(g.params);
        let id = CuspNormalForm::new(0, 0, 0, 0);
        assert_eq!(cygan_gate(&g, &i0, &id, &o, 16).unwrap(), Gate::Infinity);
        // p_b = (2, 0): distance 2 from p₀, both depth 1
        let x = CuspNormalForm::new(0, 0, 1, 0);
        assert_eq!(cygan_gate(&g, &i0, &x, &o, 16).unwrap(), Gate::Depth(4));
        // T_v^n moves (0,0) to (0, 2n): d⁴ = 2·4n², so depth 2n²; n = 3 gives 18 > 16
        assert_eq!(cygan_gate(&g, &i0, &CuspNormalForm::new(0, 3, 0, 0), &o, 16).unwrap(), Gate::Empty);
        assert_eq!(cygan_gate(&g, &i0, &CuspNormalForm::new(0, 1, 0, 0), &o, 16).unwrap(), Gate::Depth(2));
    }

    #[test]
    fn integer_gate_matches_cygan_gate() {
        use rand::{Rng, SeedableRng};
        let g = CuspGroup::new(2).unwrap();
        let ws = WitnessSet::parse(W2, 2, "w").unwrap();
        let ring = SqRing { half: false, d: 2 };
        let elems = ExponentBounds { n: 4, m: 2, l: 2 }.elements();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let a = &ws.witnesses[rng.gen_range(0..ws.len())];
            let b = &ws.witnesses[rng.gen_range(0..ws.len())];
            let nf = elems[rng.gen_range(0..elems.len())];
            let gm = small_matrix(&g.matrix(&nf)).unwrap();
            let am = small_matrix(&a.matrix).unwrap();
            let bm = small_matrix(&b.matrix).unwrap();
            let mut s = Sq { a: 0, b: 0 };
            for i in 0..3 {
                for j in 0..3 {
                    s = ring.add(s, ring.mul(am[2][i], ring.mul(gm[i][j], bm[j][0])));
                }
            }
            let dep = ring.norm(s);
            let gate = cygan_gate(&g, &a.matrix, &nf, &b.point, u64::MAX).unwrap();
            if dep == 0 {
                assert_eq!(gate, Gate::Infinity);
            } else {
                assert_eq!(gate, Gate::Depth(dep as u64));
            }
        }
    }

    #[test]
    fn smoke_box_relations_verify() {
        let g = CuspGroup::new(2).unwrap();
        let ws = WitnessSet::parse(W2, 2, "w").unwrap();
        let run = enumerate_relations(&g, &ws, ExponentBounds { n: 0, m: 0, l: 0 }, 16).unwrap();
        assert!(run.stats.raw > 0);
        assert!(run.relations.iter().all(|r| r.gamma1.n == 0 && r.gamma1.m == 0 && r.gamma1.l == 0));
        let mats = all_generator_matrices(&g, &ws);
        for r in &run.relations {
            assert!(evaluate_word(&r.word, &mats, g.params).is_unit_scalar());
        }
        assert_eq!(relation_log(&run, &ws).lines().count(), run.relations.len());
        let p = assemble_presentation(&g, &ws, &run.relations).unwrap();
        assert_eq!(p.gens.len(), 54);
        assert!(failing_relators(&p, &mats, g.params).is_empty());
    }

    #[test]
    fn box_scan_d2() {
        let g = CuspGroup::new(2).unwrap();
        let r = 2.0 * 2f64.sqrt() + 2.0 * 1.7684;
        let (b, nw, near) = exponent_box(&g, r);
        assert_eq!(b, ExponentBounds { n: 19, m: 3, l: 4 });
        assert_eq!(near, 0);
        assert!(nw.0.abs() <= 3 && nw.1.abs() <= 4);
    }
}
