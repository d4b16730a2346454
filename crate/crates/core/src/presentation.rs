//! Finitely presented groups: words, Tietze simplification, and
//! abelianization through the Smith normal form.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// A word: letter `g+1` is generator `g`, letter `-(g+1)` its inverse.
pub type Word = Vec<i32>;

pub fn letter(gen: usize, inverse: bool) -> i32 {
    let l = gen as i32 + 1;
    if inverse {
        -l
    } else {
        l
    }
}

pub fn gen_of(l: i32) -> usize {
    (l.unsigned_abs() - 1) as usize
}

/// Remove adjacent cancelling pairs.
pub fn free_reduce(w: &[i32]) -> Word {
    let mut out: Word = Vec::with_capacity(w.len());
    for &l in w {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// Free reduction followed by cancelling the ends against each other.
pub fn cyclic_reduce(w: &[i32]) -> Word {
    let w = free_reduce(w);
    let (mut i, mut j) = (0, w.len());
    while j - i >= 2 && w[i] == -w[j - 1] {
        i += 1;
        j -= 1;
    }
    w[i..j].to_vec()
}

pub fn inverse(w: &[i32]) -> Word {
    w.iter().rev().map(|l| -l).collect()
}

/// Least rotation of w or its inverse; identifies relators with the same normal closure.
fn canonical_cyclic(w: &[i32]) -> Word {
    let mut best: Option<Word> = None;
    for cand in [w.to_vec(), inverse(w)] {
        for k in 0..cand.len().max(1) {
            let mut r = cand[k..].to_vec();
            r.extend_from_slice(&cand[..k]);
            if best.as_ref().map_or(true, |b| r < *b) {
                best = Some(r);
            }
        }
    }
    best.unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    pub gens: Vec<String>,
    pub relators: Vec<Word>,
}

impl Presentation {
    /// Relators are stored freely and cyclically reduced; empty ones are dropped.
    pub fn new(gens: Vec<String>, relators: Vec<Word>) -> Self {
        let relators = relators.iter().map(|r| cyclic_reduce(r)).filter(|r| !r.is_empty()).collect();
        Presentation { gens, relators }
    }

    pub fn word_to_string(&self, w: &[i32]) -> String {
        w.iter()
            .map(|&l| {
                let name = &self.gens[gen_of(l)];
                if l < 0 {
                    format!("{}^-1", name)
                } else {
                    name.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("gens: {}\n", self.gens.join(" "));
        for r in &self.relators {
            s.push_str(&self.word_to_string(r));
            s.push('\n');
        }
        s
    }

    /// Parse the `gens:` line followed by one relator per line. Relators may
    /// use `x^k`, parenthesised groups with powers, and commutators
    /// `[u,v] = u v u^-1 v^-1`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Presentation> {
        Presentation::parse_named(text, "<input>")
    }

    pub fn parse_named(text: &str, file: &str) -> Result<Presentation> {
        let mut gens: Option<Vec<String>> = None;
        let mut relators = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::ParseAt { file: file.to_string(), line: ln + 1, msg };
            match &gens {
                None => {
                    let rest = line
                        .strip_prefix("gens:")
                        .ok_or_else(|| err("expected `gens:` line".to_string()))?;
                    let g: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                    let mut seen = HashSet::new();
                    for name in &g {
                        if !seen.insert(name) || !is_ident(name) {
                            return Err(err(format!("bad or repeated generator `{}`", name)));
                        }
                    }
                    gens = Some(g);
                }
                Some(g) => {
                    let w = parse_word(line, g).map_err(|e| err(e.to_string()))?;
                    relators.push(w);
                }
            }
        }
        let gens = gens.unwrap_or_default();
        Ok(Presentation::new(gens, relators))
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_') && !s.starts_with(|c: char| c.is_ascii_digit())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Pow(i64),
    Open(char),
    Close(char),
    Comma,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(cs[st..i].iter().collect()));
        } else if c == '^' {
            i += 1;
            let st = i;
            if i < cs.len() && (cs[i] == '-' || cs[i] == '+') {
                i += 1;
            }
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let num: String = cs[st..i].iter().collect();
            out.push(Tok::Pow(num.parse().map_err(|_| Error::Parse(format!("bad exponent in `{}`", s)))?));
        } else if c == '(' || c == '[' {
            out.push(Tok::Open(c));
            i += 1;
        } else if c == ')' || c == ']' {
            out.push(Tok::Close(c));
            i += 1;
        } else if c == ',' {
            out.push(Tok::Comma);
            i += 1;
        } else if c == '1' && out.is_empty() && cs[i + 1..].iter().all(|c| c.is_whitespace()) {
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected `{}` in `{}`", c, s)));
        }
    }
    Ok(out)
}

fn power(w: Word, e: i64) -> Word {
    let base = if e < 0 { inverse(&w) } else { w };
    let mut out = Vec::with_capacity(base.len() * e.unsigned_abs() as usize);
    for _ in 0..e.unsigned_abs() {
        out.extend_from_slice(&base);
    }
    out
}

struct WordParser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    gens: &'a HashMap<&'a str, usize>,
}

impl WordParser<'_> {
    fn word(&mut self) -> Result<Word> {
        let mut w = Vec::new();
        loop {
            let atom = match self.toks.get(self.pos) {
                Some(Tok::Ident(name)) => {
                    let g = *self
                        .gens
                        .get(name.as_str())
                        .ok_or_else(|| Error::Parse(format!("unknown generator `{}`", name)))?;
                    self.pos += 1;
                    vec![letter(g, false)]
                }
                Some(Tok::Open('(')) => {
                    self.pos += 1;
                    let inner = self.word()?;
                    self.expect(Tok::Close(')'))?;
                    inner
                }
                Some(Tok::Open('[')) => {
                    self.pos += 1;
                    let a = self.word()?;
                    self.expect(Tok::Comma)?;
                    let b = self.word()?;
                    self.expect(Tok::Close(']'))?;
                    let mut c = a.clone();
                    c.extend_from_slice(&b);
                    c.extend(inverse(&a));
                    c.extend(inverse(&b));
                    c
                }
                _ => return Ok(w),
            };
            let atom = if let Some(Tok::Pow(e)) = self.toks.get(self.pos) {
                self.pos += 1;
                power(atom, *e)
            } else {
                atom
            };
            w.extend(atom);
        }
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if self.toks.get(self.pos) == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!("expected {:?} at token {}", t, self.pos)))
        }
    }
}

/// Parse one word over the given generator names.
pub fn parse_word(s: &str, gens: &[String]) -> Result<Word> {
    let map: HashMap<&str, usize> = gens.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
    let mut p = WordParser { toks: tokenize(s)?, pos: 0, gens: &map };
    let w = p.word()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse(format!("trailing input in `{}`", s)));
    }
    Ok(w)
}

/// Invariant factors (all > 1, each dividing the next) and free rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianInvariants {
    pub factors: Vec<BigInt>,
    pub free_rank: usize,
}

impl AbelianInvariants {
    pub fn is_trivial(&self) -> bool {
        self.factors.is_empty() && self.free_rank == 0
    }
}

impl fmt::Display for AbelianInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.factors.iter().map(|x| x.to_string()).collect();
        parts.extend(std::iter::repeat("0".to_string()).take(self.free_rank));
        if parts.is_empty() {
            write!(f, "trivial")
        } else {
            write!(f, "{}", parts.join(", "))
        }
    }
}

pub type IntMatrix = Vec<Vec<BigInt>>;

/// Exponent-sum matrix: one row per relator, one column per generator.
pub fn exponent_sum_matrix(p: &Presentation) -> IntMatrix {
    p.relators
        .iter()
        .map(|r| {
            let mut row = vec![BigInt::zero(); p.gens.len()];
            for &l in r {
                row[gen_of(l)] += if l > 0 { 1 } else { -1 };
            }
            row
        })
        .collect()
}

pub fn abelianization(p: &Presentation) -> AbelianInvariants {
    let m = exponent_sum_matrix(p);
    let diag = invariant_diagonal(m, p.gens.len());
    let rank = diag.len();
    let factors: Vec<BigInt> = diag.into_iter().filter(|x| !x.is_one()).collect();
    AbelianInvariants { factors, free_rank: p.gens.len() - rank }
}

/// Nonzero diagonal of the Smith form, computed without transforms: rows
/// are folded one at a time into an echelon basis by extended-gcd row
/// operations, then the (at most `cols` rows) basis goes through the dense pass.
fn invariant_diagonal(m: IntMatrix, cols: usize) -> Vec<BigInt> {
    let mut basis: Vec<Option<Vec<BigInt>>> = vec![None; cols];
    for mut row in m {
        for c in 0..cols {
            if row[c].is_zero() {
                continue;
            }
            match &mut basis[c] {
                None => {
                    if row[c].is_negative() {
                        for x in row.iter_mut() {
                            *x = -&*x;
                        }
                    }
                    basis[c] = Some(row);
                    break;
                }
                Some(b) => {
                    let e = b[c].extended_gcd(&row[c]);
                    let (p, q) = (&b[c] / &e.gcd, &row[c] / &e.gcd);
                    let nb: Vec<BigInt> = b.iter().zip(row.iter()).map(|(x, y)| &e.x * x + &e.y * y).collect();
                    let nr: Vec<BigInt> = b.iter().zip(row.iter()).map(|(x, y)| &q * x - &p * y).collect();
                    *b = nb;
                    row = nr;
                }
            }
        }
    }
    let rows: Vec<Vec<BigInt>> = basis.into_iter().flatten().collect();
    let (d, _, _) = smith_impl(rows, cols, false);
    let n = d.len().min(cols);
    (0..n).map(|i| d[i][i].clone()).filter(|x| !x.is_zero()).map(|x| x.abs()).collect()
}

/// Smith normal form: returns (D, U, V) with U·M·V = D.
pub fn smith_normal_form(m: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let cols = m.first().map_or(0, |r| r.len());
    smith_impl(m.clone(), cols, true)
}

fn identity(n: usize) -> IntMatrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect()
}

fn smith_impl(mut a: IntMatrix, cols: usize, track: bool) -> (IntMatrix, IntMatrix, IntMatrix) {
    let rows = a.len();
    let mut u = if track { identity(rows) } else { Vec::new() };
    let mut v = if track { identity(cols) } else { Vec::new() };
    let row_sub = |a: &mut IntMatrix, dst: usize, src: usize, q: &BigInt| {
        let (s, d) = if src < dst {
            let (x, y) = a.split_at_mut(dst);
            (&x[src], &mut y[0])
        } else {
            let (x, y) = a.split_at_mut(src);
            (&y[0], &mut x[dst])
        };
        for (dv, sv) in d.iter_mut().zip(s.iter()) {
            if !sv.is_zero() {
                *dv -= q * sv;
            }
        }
    };
    let col_sub = |a: &mut IntMatrix, dst: usize, src: usize, q: &BigInt| {
        for r in a.iter_mut() {
            if !r[src].is_zero() {
                let t = q * &r[src];
                r[dst] -= t;
            }
        }
    };
    for t in 0..rows.min(cols) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for (i, row) in a.iter().enumerate().skip(t) {
                for (j, x) in row.iter().enumerate().skip(t) {
                    if !x.is_zero() && best.map_or(true, |(bi, bj)| x.abs() < a[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return (a, u, v);
            };
            a.swap(t, pi);
            if track {
                u.swap(t, pi);
            }
            for r in a.iter_mut() {
                r.swap(t, pj);
            }
            if track {
                for r in v.iter_mut() {
                    r.swap(t, pj);
                }
            }
            let mut clean = true;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&a[t][t]);
                row_sub(&mut a, i, t, &q);
                if track {
                    row_sub(&mut u, i, t, &q);
                }
                clean &= a[i][t].is_zero();
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&a[t][t]);
                col_sub(&mut a, j, t, &q);
                if track {
                    col_sub(&mut v, j, t, &q);
                }
                clean &= a[t][j].is_zero();
            }
            if !clean {
                continue;
            }
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !a[i][j].is_multiple_of(&a[t][t])));
            match bad {
                Some(i) => {
                    let neg = -BigInt::one();
                    row_sub(&mut a, t, i, &neg);
                    if track {
                        row_sub(&mut u, t, i, &neg);
                    }
                }
                None => break,
            }
        }
        if a[t][t].is_negative() {
            for x in a[t].iter_mut() {
                *x = -x.clone();
            }
            if track {
                for x in u[t].iter_mut() {
                    *x = -x.clone();
                }
            }
        }
    }
    (a, u, v)
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|r| {
            (0..n)
                .map(|j| r.iter().zip(b.iter()).fold(BigInt::zero(), |acc, (x, row)| acc + x * &row[j]))
                .collect()
        })
        .collect()
}

/// Determinant by fraction-free Bareiss elimination.
pub fn determinant(m: &IntMatrix) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Options for [`tietze_simplify`].
#[derive(Clone, Debug)]
pub struct TietzeOptions {
    pub max_rounds: usize,
    /// Generator names that must survive.
    pub preserve: Vec<String>,
    /// Longest defining word accepted when eliminating a generator.
    pub elimination_limit: usize,
    /// Relators up to this length drive subword replacement.
    pub substitution_length: usize,
}

impl Default for TietzeOptions {
    fn default() -> Self {
        TietzeOptions { max_rounds: 50, preserve: Vec::new(), elimination_limit: 30, substitution_length: 20 }
    }
}

/// An eliminated generator and its defining word (over the original generators).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Substitution {
    pub generator: usize,
    pub word: Word,
}

#[derive(Clone, Debug)]
pub struct Simplified {
    pub presentation: Presentation,
    /// Index into the input generator list for each output generator.
    pub kept: Vec<usize>,
    /// Eliminations in the order performed.
    pub log: Vec<Substitution>,
}

impl Simplified {
    /// Express an input generator as a word in the output generators.
    pub fn expand(&self, gen: usize) -> Word {
        let pos: HashMap<usize, usize> = self.kept.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let defs: HashMap<usize, &Word> = self.log.iter().map(|s| (s.generator, &s.word)).collect();
        fn go(g: usize, pos: &HashMap<usize, usize>, defs: &HashMap<usize, &Word>, out: &mut Word, inv: bool) {
            if let Some(&i) = pos.get(&g) {
                out.push(letter(i, inv));
                return;
            }
            let w = defs[&g];
            let seq: Word = if inv { inverse(w) } else { w.to_vec() };
            for l in seq {
                go(gen_of(l), pos, defs, out, l < 0);
            }
        }
        let mut out = Vec::new();
        go(gen, &pos, &defs, &mut out, false);
        free_reduce(&out)
    }
}

fn dedupe(rels: &mut Vec<Word>) -> bool {
    let before = rels.len();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rels.len());
    for r in rels.drain(..) {
        let r = cyclic_reduce(&r);
        if r.is_empty() {
            continue;
        }
        if seen.insert(canonical_cyclic(&r)) {
            out.push(r);
        }
    }
    *rels = out;
    rels.len() != before
}

fn substitute(w: &[i32], gen: usize, def: &[i32]) -> Word {
    let mut out = Vec::with_capacity(w.len());
    for &l in w {
        if gen_of(l) == gen {
            if l > 0 {
                out.extend_from_slice(def);
            } else {
                out.extend(inverse(def));
            }
        } else {
            out.push(l);
        }
    }
    cyclic_reduce(&out)
}

fn try_eliminate(rels: &mut Vec<Word>, alive: &[bool], preserved: &[bool], opts: &TietzeOptions) -> Option<Substitution> {
    let mut occurrences: BTreeMap<usize, usize> = BTreeMap::new();
    for r in rels.iter() {
        for &l in r {
            *occurrences.entry(gen_of(l)).or_default() += 1;
        }
    }
    let mut best: Option<(usize, usize, usize, usize)> = None; // (len, occ, gen, rel)
    for (ri, r) in rels.iter().enumerate() {
        if r.len() > opts.elimination_limit + 1 {
            continue;
        }
        let mut count: BTreeMap<usize, usize> = BTreeMap::new();
        for &l in r {
            *count.entry(gen_of(l)).or_default() += 1;
        }
        for (&g, &c) in &count {
            if c != 1 || preserved[g] || !alive[g] {
                continue;
            }
            let key = (r.len(), occurrences[&g], g, ri);
            if best.map_or(true, |b| key < b) {
                best = Some(key);
            }
        }
    }
    let (_, _, g, ri) = best?;
    let r = rels.remove(ri);
    let k = r.iter().position(|&l| gen_of(l) == g).expect("generator occurs");
    // rotate so the generator leads: g^e · rest = 1
    let mut rest = r[k + 1..].to_vec();
    rest.extend_from_slice(&r[..k]);
    let def = if r[k] > 0 { inverse(&rest) } else { rest };
    for w in rels.iter_mut() {
        if w.iter().any(|&l| gen_of(l) == g) {
            *w = substitute(w, g, &def);
        }
    }
    Some(Substitution { generator: g, word: def })
}

fn replace_subwords(rels: &mut [Word], max_len: usize) -> bool {
    // long half of a short relator -> inverse of its complement
    let mut table: HashMap<Word, (Word, usize)> = HashMap::new();
    let mut lens: Vec<usize> = Vec::new();
    for (ri, r) in rels.iter().enumerate() {
        let n = r.len();
        if n == 0 || n > max_len {
            continue;
        }
        let k = n / 2 + 1;
        for cand in [r.clone(), inverse(r)] {
            for s in 0..n {
                let rot: Word = cand[s..].iter().chain(cand[..s].iter()).copied().collect();
                let long = rot[..k].to_vec();
                let repl = inverse(&rot[k..]);
                table.entry(long).or_insert((repl, ri));
            }
        }
        if !lens.contains(&k) {
            lens.push(k);
        }
    }
    lens.sort_unstable_by(|a, b| b.cmp(a));
    let mut changed = false;
    // entries from a rewritten relator are stale; using them could make two
    // rewrites depend on each other
    let mut modified = vec![false; rels.len()];
    for (si, s) in rels.iter_mut().enumerate() {
        'again: loop {
            let n = s.len();
            for &k in &lens {
                if k > n {
                    continue;
                }
                for st in 0..n {
                    let sub: Word = (0..k).map(|i| s[(st + i) % n]).collect();
                    if let Some((repl, src)) = table.get(&sub) {
                        if *src == si || modified[*src] {
                            continue;
                        }
                        let mut rot: Word = s[st..].iter().chain(s[..st].iter()).copied().collect();
                        rot.splice(0..k, repl.iter().copied());
                        let new = cyclic_reduce(&rot);
                        if new.len() < n {
                            *s = new;
                            modified[si] = true;
                            changed = true;
                            continue 'again;
                        }
                    }
                }
            }
            break;
        }
    }
    changed
}

/// Simplify by Tietze moves only; deterministic for fixed options.
pub fn tietze_simplify(p: &Presentation, opts: &TietzeOptions) -> Simplified {
    let n = p.gens.len();
    let preserved: Vec<bool> = p.gens.iter().map(|g| opts.preserve.contains(g)).collect();
    let mut alive = vec![true; n];
    let mut rels: Vec<Word> = p.relators.clone();
    let mut log = Vec::new();
    dedupe(&mut rels);
    for _ in 0..opts.max_rounds {
        let mut progress = false;
        while let Some(s) = try_eliminate(&mut rels, &alive, &preserved, opts) {
            alive[s.generator] = false;
            log.push(s);
            dedupe(&mut rels);
            progress = true;
        }
        if replace_subwords(&mut rels, opts.substitution_length) {
            progress = true;
        }
        progress |= dedupe(&mut rels);
        if !progress {
            break;
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&g| alive[g]).collect();
    let remap: HashMap<usize, usize> = kept.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let relators = rels
        .iter()
        .map(|r| r.iter().map(|&l| letter(remap[&gen_of(l)], l < 0)).collect())
        .collect();
    let gens = kept.iter().map(|&g| p.gens[g].clone()).collect();
    Simplified { presentation: Presentation::new(gens, relators), kept, log }
}
