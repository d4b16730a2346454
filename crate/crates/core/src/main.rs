use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use picard::pipeline::{
    cmd_abelianize, cmd_enumerate_points, cmd_pipeline, cmd_relations, cmd_render_covering, cmd_simplify,
    cmd_verify_covering, cmd_verify_witnesses, parse_bounds, parse_slice, read_presentation, Outcome, PipelineConfig,
    Resolved,
};
use picard::{Error, Result};

#[derive(Parser)]
#[command(name = "picard", version, about = "Presentations of Picard modular groups via Macbeath's theorem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// key = value config file
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    d: Option<u32>,
    #[arg(long)]
    max_depth: Option<u64>,
    /// Horosphere height u as p/q
    #[arg(long)]
    height: Option<String>,
    /// Exponent box n,m,l (may be smaller than the computed bounds)
    #[arg(long)]
    bounds: Option<String>,
    /// Witness matrix files, comma separated
    #[arg(long)]
    witnesses: Option<String>,
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Depth table to compare against
    #[arg(long)]
    points: Option<PathBuf>,
    /// Output directory
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Grid audit resolution N (0 skips the audit)
    #[arg(long)]
    audit: Option<usize>,
    /// Extra random audit samples
    #[arg(long)]
    random_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    search_budget: Option<usize>,
    /// Use this value for max d_C(p0, A^-1 inf) instead of computing it
    #[arg(long)]
    max_w: Option<f64>,
    /// Exit 1 when the fixture table differs from the enumeration
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate orbit representatives of rational points up to the covering depth
    EnumeratePoints(Common),
    /// Check witness matrices against the depth table and search for missing ones
    VerifyWitnesses(Common),
    /// Verify the covering certificate exactly and run the coverage audit
    VerifyCovering {
        #[command(flatten)]
        common: Common,
        /// Also render this slice (`t=p/q` or `z1..z2`)
        #[arg(long)]
        render: Option<String>,
    },
    /// Enumerate and verify relations, write the log and raw presentation
    Relations(Common),
    /// Tietze-simplify a presentation file
    Simplify {
        input: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Invariant factors of the abelianization of a presentation file
    Abelianize { input: PathBuf },
    /// Run points, witnesses, relations, simplification and abelianization
    Pipeline(Common),
    /// Draw one slice of the covering as SVG
    RenderCovering {
        #[command(flatten)]
        common: Common,
        /// `t=p/q` or `z1..z2`
        #[arg(long, default_value = "t=0")]
        slice: String,
        #[arg(long, default_value = "covering.svg")]
        output: PathBuf,
    },
}

fn config(c: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &c.config {
        Some(p) => PipelineConfig::parse(&std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {}", p.display(), e)))?)?,
        None => PipelineConfig::default(),
    };
    let mut set = |k: &str, v: Option<String>| v.map_or(Ok(()), |v| cfg.set(k, &v));
    set("d", c.d.map(|x| x.to_string()))?;
    set("height", c.height.clone())?;
    set("witnesses", c.witnesses.clone())?;
    set("certificate", c.certificate.as_ref().map(|p| p.display().to_string()))?;
    set("points", c.points.as_ref().map(|p| p.display().to_string()))?;
    set("out", c.out.as_ref().map(|p| p.display().to_string()))?;
    set("workers", c.workers.map(|x| x.to_string()))?;
    set("audit", c.audit.map(|x| x.to_string()))?;
    set("random_samples", c.random_samples.map(|x| x.to_string()))?;
    set("seed", c.seed.map(|x| x.to_string()))?;
    set("search_budget", c.search_budget.map(|x| x.to_string()))?;
    set("max_w", c.max_w.map(|x| x.to_string()))?;
    if c.strict {
        cfg.strict = true;
    }
    // explicit flags may restrict below the computed values
    if let Some(n) = c.max_depth {
        cfg.set("max_depth", &n.to_string())?;
        cfg.restrict_bounds = true;
    }
    if let Some(b) = &c.bounds {
        cfg.bounds = Some(parse_bounds(b)?);
        cfg.restrict_bounds = true;
    }
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(cfg)
}

fn resolve(c: &Common) -> Result<Resolved> {
    Resolved::load(&config(c)?)
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::EnumeratePoints(c) => Ok(cmd_enumerate_points(&resolve(&c)?)?.0),
        Command::VerifyWitnesses(c) => Ok(cmd_verify_witnesses(&resolve(&c)?)?.0),
        Command::VerifyCovering { common, render } => {
            let r = resolve(&common)?;
            let slice = render.map(|s| parse_slice(&s, r.group.params)).transpose()?;
            cmd_verify_covering(&r, slice.as_ref())
        }
        Command::Relations(c) => {
            let r = resolve(&c)?;
            let table = picard::points::enumerate_points(r.config.d, r.max_depth)?;
            let (o, ws) = cmd_verify_witnesses(&r)?;
            let (rel, _) = cmd_relations(&r, &ws, &table)?;
            Ok(Outcome { report: format!("{}{}", o.report, rel.report), passed: rel.passed })
        }
        Command::Simplify { input, output } => Ok(cmd_simplify(&read_presentation(&input)?, output.as_deref())?.0),
        Command::Abelianize { input } => Ok(cmd_abelianize(&read_presentation(&input)?).0),
        Command::Pipeline(c) => cmd_pipeline(&resolve(&c)?),
        Command::RenderCovering { common, slice, output } => {
            let r = resolve(&common)?;
            let s = parse_slice(&slice, r.group.params)?;
            cmd_render_covering(&r, &s, &output)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(o) => {
            print!("{}", o.report);
            if o.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
