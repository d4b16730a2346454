use picard::engine::{enumerate_relations, ExponentBounds, WitnessSet};
use picard::fixtures;
use picard::heisenberg::CuspGroup;
use picard::pipeline::{cmd_abelianize, cmd_enumerate_points, cmd_relations, PipelineConfig, Resolved};
use picard::points::enumerate_points;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn worker_count_does_not_change_results() {
    let a = in_pool(1, || enumerate_points(11, 20).unwrap());
    let b = in_pool(4, || enumerate_points(11, 20).unwrap());
    assert_eq!(a.to_text(), b.to_text());
    let g = CuspGroup::new(2).unwrap();
    let ws = WitnessSet::parse(fixtures::WITNESSES_D2, 2, "w").unwrap();
    let bounds = ExponentBounds { n: 2, m: 1, l: 1 };
    let x = in_pool(1, || enumerate_relations(&g, &ws, bounds, 16).unwrap());
    let y = in_pool(3, || enumerate_relations(&g, &ws, bounds, 16).unwrap());
    let words = |r: &picard::engine::RelationRun| r.relations.iter().map(|r| r.word.clone()).collect::<Vec<_>>();
    assert_eq!(words(&x), words(&y));
}

#[test]
fn relations_then_abelianize_d2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig { out: dir.path().to_path_buf(), ..PipelineConfig::default() };
    let r = Resolved::load(&cfg).unwrap();
    let (_, table) = cmd_enumerate_points(&r).unwrap();
    let ws = WitnessSet::parse(fixtures::WITNESSES_D2, 2, "w").unwrap();
    let (o, rel) = cmd_relations(&r, &ws, &table).unwrap();
    assert_eq!(rel.bounds, ExponentBounds { n: 19, m: 3, l: 4 });
    assert_eq!(rel.presentation.gens.len(), 54);
    assert!(o.report.contains("reference count 5837"));
    assert!((1000..10000).contains(&rel.stats.distinct));
    assert_eq!(cmd_abelianize(&rel.presentation).1.to_string(), "2, 4");
    // the written file parses back to the same presentation
    let back = picard::pipeline::read_presentation(&dir.path().join("presentation_raw_d2.txt")).unwrap();
    assert_eq!(back, rel.presentation);
}

#[test]
fn config_bounds_must_dominate() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::parse("bounds = 19,3,3\n").unwrap();
    cfg.out = dir.path().to_path_buf();
    let r = Resolved::load(&cfg).unwrap();
    let table = enumerate_points(2, 16).unwrap();
    let ws = WitnessSet::parse(fixtures::WITNESSES_D2, 2, "w").unwrap();
    let err = cmd_relations(&r, &ws, &table).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
