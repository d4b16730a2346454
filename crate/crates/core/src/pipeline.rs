//! Configuration and the subcommands behind the `picard` binary.
//!
//! Config files are flat `key = value` lines with `#` comments. Rational
//! values accept `p/q`, bounds are `n,m,l`, and path lists are comma separated.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::covering::{random_audit, render_covering, verify_certificate, CoveringCertificate, Slice};
use crate::engine::{
    assemble_presentation, enumerate_relations, exponent_bounds, relation_log, search_witness, witness_radius4,
    witness_report, ExponentBounds, RelationStats, WitnessRadius, WitnessSet,
};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::heisenberg::CuspGroup;
use crate::hermitian::{write_matrix_file, NamedMatrix};
use crate::points::{depth_histogram, diff_tables, enumerate_points, DepthTable};
use crate::presentation::{abelianization, tietze_simplify, AbelianInvariants, Presentation, TietzeOptions};
use crate::ring::{parse_quad, parse_rational, RingParams};

/// Published relation count for d = 2.
pub const REFERENCE_RELATIONS_D2: usize = 5837;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub d: u32,
    pub max_depth: Option<u64>,
    pub height: Option<BigRational>,
    pub bounds: Option<ExponentBounds>,
    /// Accept `bounds` and `max_depth` below the computed ones (smoke runs).
    pub restrict_bounds: bool,
    pub witnesses: Vec<PathBuf>,
    pub certificate: Option<PathBuf>,
    pub points: Option<PathBuf>,
    pub out: PathBuf,
    pub workers: usize,
    pub audit: usize,
    pub random_samples: usize,
    pub seed: u64,
    pub search_budget: usize,
    pub max_w: Option<f64>,
    pub strict: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            d: 2,
            max_depth: None,
            height: None,
            bounds: None,
            restrict_bounds: false,
            witnesses: Vec::new(),
            certificate: None,
            points: None,
            out: PathBuf::from("out"),
            workers: 0,
            audit: 64,
            random_samples: 0,
            seed: 20240601,
            search_budget: 8,
            max_w: None,
            strict: false,
        }
    }
}

pub fn parse_bounds(s: &str) -> Result<ExponentBounds> {
    let v: Vec<i64> = s
        .split(',')
        .map(|x| x.trim().parse::<i64>().ok().filter(|&x| x >= 0))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Config(format!("bounds must be `n,m,l` with non-negative integers, got `{}`", s)))?;
    match v[..] {
        [n, m, l] => Ok(ExponentBounds { n, m, l }),
        _ => Err(Error::Config(format!("bounds must have three entries, got `{}`", s))),
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("expected true or false, got `{}`", s))),
    }
}

impl PipelineConfig {
    /// Set one key. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("{} = `{}`: expected {}", key, value, what));
        let v = value.trim();
        match key.trim() {
            "d" => self.d = v.parse().map_err(|_| bad("an integer"))?,
            "max_depth" => self.max_depth = Some(v.parse().ok().filter(|&n| n >= 1).ok_or_else(|| bad("a positive integer"))?),
            "height" => {
                let h = parse_rational(v).map_err(|_| bad("a rational p/q"))?;
                if h <= BigRational::from_integer(0.into()) {
                    return Err(bad("a positive rational"));
                }
                self.height = Some(h)
            }
            "bounds" => self.bounds = Some(parse_bounds(v)?),
            "witnesses" => self.witnesses = v.split(',').map(|p| PathBuf::from(p.trim())).filter(|p| !p.as_os_str().is_empty()).collect(),
            "certificate" => self.certificate = Some(PathBuf::from(v)),
            "points" => self.points = Some(PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            "workers" => self.workers = v.parse().map_err(|_| bad("an integer"))?,
            "audit" => self.audit = v.parse().map_err(|_| bad("an integer"))?,
            "random_samples" => self.random_samples = v.parse().map_err(|_| bad("an integer"))?,
            "seed" => self.seed = v.parse().map_err(|_| bad("an integer"))?,
            "search_budget" => self.search_budget = v.parse().map_err(|_| bad("an integer"))?,
            "max_w" => self.max_w = Some(v.parse().ok().filter(|x: &f64| x.is_finite() && *x > 0.0).ok_or_else(|| bad("a positive number"))?),
            "strict" => self.strict = parse_bool(v)?,
            k => return Err(Error::Config(format!("unknown key `{}`", k))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<PipelineConfig> {
        let mut c = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            c.set(k, v).map_err(|e| Error::Config(format!("line {}: {}", i + 1, e)))?;
        }
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("d = {}\n", self.d);
        if let Some(n) = self.max_depth {
            let _ = writeln!(s, "max_depth = {}", n);
        }
        if let Some(h) = &self.height {
            let _ = writeln!(s, "height = {}", h);
        }
        if let Some(b) = &self.bounds {
            let _ = writeln!(s, "bounds = {},{},{}", b.n, b.m, b.l);
        }
        if !self.witnesses.is_empty() {
            let w: Vec<String> = self.witnesses.iter().map(|p| p.display().to_string()).collect();
            let _ = writeln!(s, "witnesses = {}", w.join(","));
        }
        if let Some(p) = &self.certificate {
            let _ = writeln!(s, "certificate = {}", p.display());
        }
        if let Some(p) = &self.points {
            let _ = writeln!(s, "points = {}", p.display());
        }
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "audit = {}", self.audit);
        let _ = writeln!(s, "random_samples = {}", self.random_samples);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "search_budget = {}", self.search_budget);
        if let Some(w) = self.max_w {
            let _ = writeln!(s, "max_w = {}", w);
        }
        let _ = writeln!(s, "strict = {}", self.strict);
        s
    }
}

/// Largest n with u² ≤ 4/n.
pub fn covering_depth(u: &BigRational) -> u64 {
    let q = BigRational::from_integer(4.into()) / (u * u);
    q.floor().to_integer().to_u64().unwrap_or(u64::MAX)
}

/// Config with files read and the overrides checked.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: PipelineConfig,
    pub group: CuspGroup,
    pub certificate: CoveringCertificate,
    pub max_depth: u64,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))
}

impl Resolved {
    pub fn load(config: &PipelineConfig) -> Result<Resolved> {
        let group = CuspGroup::new(config.d).map_err(|_| Error::Unsupported(format!("pipeline d = {} (supported: 2, 11)", config.d)))?;
        let mut certificate = match &config.certificate {
            Some(p) => CoveringCertificate::parse(&read(p)?, &p.display().to_string())?,
            None => CoveringCertificate::parse(fixtures::certificate(config.d).expect("supported d"), "certificate")?,
        };
        if certificate.d != config.d {
            return Err(Error::Config(format!("certificate is for d = {}, config has d = {}", certificate.d, config.d)));
        }
        if let Some(h) = &config.height {
            if h > &certificate.u {
                return Err(Error::Config(format!("height {} exceeds the certified height {}", h, certificate.u)));
            }
            certificate.u = h.clone();
        }
        let computed = covering_depth(&certificate.u);
        let max_depth = match config.max_depth {
            Some(n) if n < computed && !config.restrict_bounds => {
                return Err(Error::Config(format!("max_depth {} is below the covering depth {}", n, computed)))
            }
            Some(n) => n,
            None => computed,
        };
        Ok(Resolved { config: config.clone(), group, certificate, max_depth })
    }

    fn out_file(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.config.out)?;
        Ok(self.config.out.join(name))
    }

    pub fn fixture_table(&self) -> Result<Option<DepthTable>> {
        match &self.config.points {
            Some(p) => Ok(Some(DepthTable::parse(&read(p)?, self.config.d, &p.display().to_string())?)),
            None => fixtures::points(self.config.d).map(|t| DepthTable::parse(t, self.config.d, "points_d2.txt")).transpose(),
        }
    }

    pub fn witnesses(&self) -> Result<WitnessSet> {
        if self.config.witnesses.is_empty() {
            return match fixtures::witnesses(self.config.d) {
                Some(t) => WitnessSet::parse(t, self.config.d, "witnesses_d2.txt"),
                None => Ok(WitnessSet { d: self.config.d, witnesses: Vec::new(), notes: Vec::new() }),
            };
        }
        let mut mats: Vec<NamedMatrix> = Vec::new();
        for p in &self.config.witnesses {
            mats.extend(crate::hermitian::parse_matrix_file(&read(p)?, &p.display().to_string())?);
        }
        WitnessSet::from_matrices(self.config.d, mats)
    }
}

/// Text report plus whether the check passed.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: String,
    pub passed: bool,
}

pub fn cmd_enumerate_points(r: &Resolved) -> Result<(Outcome, DepthTable)> {
    let d = r.config.d;
    let table = enumerate_points(d, r.max_depth)?;
    let path = r.out_file(&format!("points_d{}.txt", d))?;
    fs::write(&path, table.to_text())?;
    let mut s = format!("d = {}, depth <= {}: {} representatives\n", d, r.max_depth, table.len());
    for (k, c) in depth_histogram(&table) {
        let _ = writeln!(s, "  depth {:>3}: {}", k, c);
    }
    let _ = writeln!(s, "wrote {}", path.display());
    let mut passed = true;
    if let Some(fixture) = r.fixture_table()? {
        let fixture = fixture.truncate(r.max_depth);
        let diff = diff_tables(&fixture, &table)?;
        let dpath = r.out_file(&format!("points_diff_d{}.txt", d))?;
        fs::write(&dpath, diff.to_string())?;
        let _ = writeln!(s, "fixture: {} listed, {} computed", fixture.len(), table.len());
        s.push_str(&diff.to_string());
        let _ = writeln!(s, "wrote {}", dpath.display());
        passed = diff.is_exact() || !r.config.strict;
    }
    Ok((Outcome { report: s, passed }, table))
}

pub fn cmd_verify_witnesses(r: &Resolved) -> Result<(Outcome, WitnessSet)> {
    let d = r.config.d;
    let mut ws = r.witnesses()?;
    let table = match r.fixture_table()? {
        Some(t) => t,
        None => enumerate_points(d, r.max_depth)?,
    };
    let report = witness_report(&ws, &table)?;
    let mut s = report.to_string();
    let passed = report.all_verified();
    let _ = writeln!(s, "{} of {} witnesses match a listed point", report.rows.iter().filter(|x| x.3.is_some()).count(), ws.len());
    // classes of the true table without a witness
    let g = &r.group;
    let truth = enumerate_points(d, r.max_depth)?;
    let classes = ws.class_index(g);
    let mut found: Vec<NamedMatrix> = Vec::new();
    let mut gaps = 0;
    for (k, p) in truth.iter() {
        if classes.contains_key(p) {
            continue;
        }
        gaps += 1;
        match search_witness(g, p, r.config.search_budget) {
            Some(m) => {
                let name = format!("S_{}_{}", k, found.len() + 1);
                let _ = writeln!(s, "found {} for depth {} point {}", name, k, p);
                found.push(NamedMatrix { name, matrix: m });
            }
            None => {
                let _ = writeln!(s, "no witness within budget {} for depth {} point {}", r.config.search_budget, k, p);
            }
        }
    }
    let _ = writeln!(s, "{} classes without a witness, {} filled by search", gaps, found.len());
    if !found.is_empty() {
        let path = r.out_file(&format!("witnesses_found_d{}.txt", d))?;
        fs::write(&path, write_matrix_file(&found))?;
        let _ = writeln!(s, "wrote {}", path.display());
        for m in found {
            ws.push(m.name, m.matrix)?;
        }
    }
    Ok((Outcome { report: s, passed }, ws))
}

pub fn cmd_verify_covering(r: &Resolved, render: Option<&Slice>) -> Result<Outcome> {
    let cert = &r.certificate;
    let rep = verify_certificate(cert, r.config.audit)?;
    let mut s = format!("d = {}, u = {}\n", cert.d, cert.u);
    s.push_str(&rep.to_string());
    let mut passed = rep.passed();
    if r.config.random_samples > 0 && !cert.is_empty() {
        let a = random_audit(cert, r.config.random_samples, r.config.seed)?;
        let _ = writeln!(s, "random audit (seed {}): {} samples, {} uncovered", r.config.seed, a.samples, a.uncovered.len());
        for p in a.uncovered.iter().take(10) {
            let _ = writeln!(s, "  {}", p);
        }
        passed &= a.passed();
    }
    if let Some(slice) = render {
        let path = r.out_file(&format!("covering_d{}.svg", cert.d))?;
        fs::write(&path, render_covering(cert, slice)?.svg)?;
        let _ = writeln!(s, "wrote {}", path.display());
    }
    Ok(Outcome { report: s, passed })
}

/// `t=<rational>` or `<z1>..<z2>`.
pub fn parse_slice(s: &str, params: RingParams) -> Result<Slice> {
    if let Some(t) = s.trim().strip_prefix("t=") {
        return Ok(Slice::T(parse_rational(t.trim()).map_err(|_| Error::Config(format!("bad slice height `{}`", t)))?));
    }
    if let Some((a, b)) = s.split_once("..") {
        return Ok(Slice::Line(parse_quad(a.trim(), params)?, parse_quad(b.trim(), params)?));
    }
    Err(Error::Config(format!("slice must be `t=p/q` or `z1..z2`, got `{}`", s)))
}

pub fn cmd_render_covering(r: &Resolved, slice: &Slice, output: &Path) -> Result<Outcome> {
    let rendering = render_covering(&r.certificate, slice)?;
    if let Some(dir) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(output, &rendering.svg)?;
    let mut s = format!("{} balls drawn\n", rendering.balls.len());
    let _ = writeln!(s, "wrote {}", output.display());
    Ok(Outcome { report: s, passed: true })
}

#[derive(Clone, Debug)]
pub struct RelationsOutput {
    pub presentation: Presentation,
    pub stats: RelationStats,
    pub bounds: ExponentBounds,
}

pub fn cmd_relations(r: &Resolved, ws: &WitnessSet, table: &DepthTable) -> Result<(Outcome, RelationsOutput)> {
    let g = &r.group;
    let d = r.config.d;
    let radius = match r.config.max_w {
        Some(w) => WitnessRadius::Given(w),
        None if ws.is_empty() => return Err(Error::Config(format!("no witnesses for d = {}", d))),
        None => WitnessRadius::Computed(witness_radius4(ws)),
    };
    let br = exponent_bounds(g, table, radius)?;
    let mut s = br.to_string();
    let bounds = match r.config.bounds {
        Some(b) if r.config.restrict_bounds => {
            let _ = writeln!(s, "restricted to {} (relations may be incomplete)", b);
            b
        }
        Some(b) if !b.dominates(&br.bounds) => {
            return Err(Error::Config(format!("bounds {} do not dominate the computed {}", b, br.bounds)))
        }
        Some(b) => b,
        None => br.bounds,
    };
    let run = enumerate_relations(g, ws, bounds, r.max_depth)?;
    let log = r.out_file(&format!("relations_d{}.log", d))?;
    fs::write(&log, relation_log(&run, ws))?;
    let p = assemble_presentation(g, ws, &run.relations)?;
    let pres = r.out_file(&format!("presentation_raw_d{}.txt", d))?;
    fs::write(&pres, p.to_text())?;
    let _ = writeln!(s, "{} generators", p.gens.len());
    let _ = writeln!(s, "{}", run.stats);
    if d == 2 {
        let _ = writeln!(s, "reference count {} relations", REFERENCE_RELATIONS_D2);
    }
    let _ = writeln!(s, "all {} relations verified as scalar matrices", run.stats.raw);
    let _ = writeln!(s, "wrote {}\nwrote {}", log.display(), pres.display());
    Ok((Outcome { report: s, passed: true }, RelationsOutput { presentation: p, stats: run.stats, bounds }))
}

pub fn read_presentation(path: &Path) -> Result<Presentation> {
    let text = read(path)?;
    Presentation::parse(&text).map_err(|e| match e {
        Error::ParseAt { line, msg, .. } => Error::ParseAt { file: path.display().to_string(), line, msg },
        e => e,
    })
}

pub fn cmd_simplify(p: &Presentation, output: Option<&Path>) -> Result<(Outcome, Presentation)> {
    let simp = tietze_simplify(p, &TietzeOptions::default());
    let q = simp.presentation;
    let mut s = format!(
        "{} generators, {} relators -> {} generators, {} relators\n",
        p.gens.len(),
        p.relators.len(),
        q.gens.len(),
        q.relators.len()
    );
    if let Some(path) = output {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, q.to_text())?;
        let _ = writeln!(s, "wrote {}", path.display());
    } else {
        s.push_str(&q.to_text());
    }
    Ok((Outcome { report: s, passed: true }, q))
}

pub fn cmd_abelianize(p: &Presentation) -> (Outcome, AbelianInvariants) {
    let a = abelianization(p);
    (Outcome { report: format!("{}\n", a), passed: true }, a)
}

/// Steps 4 to 9: points, witnesses, bounds and relations, simplification, abelianization.
pub fn cmd_pipeline(r: &Resolved) -> Result<Outcome> {
    let mut s = String::new();
    let mut passed = true;
    let d = r.config.d;
    s.push_str("== points\n");
    let (o, table) = cmd_enumerate_points(r)?;
    s.push_str(&o.report);
    passed &= o.passed;
    s.push_str("== witnesses\n");
    let (o, ws) = cmd_verify_witnesses(r)?;
    s.push_str(&o.report);
    s.push_str("== relations\n");
    let (o, rel) = cmd_relations(r, &ws, &table)?;
    s.push_str(&o.report);
    s.push_str("== simplify\n");
    let out = r.out_file(&format!("presentation_simplified_d{}.txt", d))?;
    let (o, simp) = cmd_simplify(&rel.presentation, Some(&out))?;
    s.push_str(&o.report);
    s.push_str("== abelianization\n");
    let raw = abelianization(&rel.presentation);
    let simple = abelianization(&simp);
    let _ = writeln!(s, "raw: {}\nsimplified: {}", raw, simple);
    if raw != simple {
        passed = false;
        let _ = writeln!(s, "simplification changed the abelianization");
    }
    Ok(Outcome { report: s, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let c = PipelineConfig::parse("d = 11\nheight = 3/10 # below certified\nbounds = 21,9,5\nwitnesses = a.txt, b.txt\nstrict = yes\n").unwrap();
        assert_eq!(c.d, 11);
        assert_eq!(c.height, Some(BigRational::new(3.into(), 10.into())));
        assert_eq!(c.witnesses.len(), 2);
        assert_eq!(PipelineConfig::parse(&c.to_text()).unwrap(), c);
        assert!(PipelineConfig::parse("colour = red\n").is_err());
        assert!(PipelineConfig::parse("bounds = 1,2\n").is_err());
        assert!(PipelineConfig::parse("height = -1/2\n").is_err());
        assert!(PipelineConfig::parse("d 2\n").is_err());
    }

    #[test]
    fn covering_depths() {
        assert_eq!(covering_depth(&BigRational::new(4852.into(), 10000.into())), 16);
        assert_eq!(covering_depth(&BigRational::new(3015114.into(), 10000000.into())), 43);
        assert_eq!(covering_depth(&BigRational::from_integer(2.into())), 1);
    }

    #[test]
    fn overrides_must_dominate() {
        let mut c = PipelineConfig::default();
        assert_eq!(Resolved::load(&c).unwrap().max_depth, 16);
        c.max_depth = Some(12);
        assert!(matches!(Resolved::load(&c), Err(Error::Config(_))));
        c.max_depth = Some(20);
        assert_eq!(Resolved::load(&c).unwrap().max_depth, 20);
        c.max_depth = None;
        c.height = Some(BigRational::new(1.into(), 2.into()));
        assert!(Resolved::load(&c).is_err());
        c.height = Some(BigRational::new(2.into(), 5.into()));
        assert_eq!(Resolved::load(&c).unwrap().max_depth, 25);
        c.d = 7;
        assert!(matches!(Resolved::load(&c), Err(Error::Unsupported(_))));
    }

    #[test]
    fn slices() {
        let p = RingParams::new(2).unwrap();
        assert!(matches!(parse_slice("t=1/2", p).unwrap(), Slice::T(_)));
        assert!(matches!(parse_slice("0..2+w", p).unwrap(), Slice::Line(_, _)));
        assert!(parse_slice("x=1", p).is_err());
    }
}
