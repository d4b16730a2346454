use std::path::Path;
use std::process::Command;

fn picard(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_picard")).current_dir(dir).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = picard(dir.path(), &["enumerate-points", "--max-depth", "4"]);
    assert_eq!(code, 0);
    assert!(out.contains("6 representatives"));
    assert!(out.contains("fixture: 7 listed"));
    assert_eq!(picard(dir.path(), &["enumerate-points", "--max-depth", "4", "--strict"]).0, 1);
    let (code, _, err) = picard(dir.path(), &["enumerate-points", "-d", "7"]);
    assert_eq!(code, 2);
    assert!(err.contains("unsupported: pipeline d = 7"));
    std::fs::write(dir.path().join("bad.cfg"), "max_depth = 3\n").unwrap();
    assert_eq!(picard(dir.path(), &["enumerate-points", "--config", "bad.cfg"]).0, 2);
    std::fs::write(dir.path().join("typo.cfg"), "depth = 3\n").unwrap();
    assert_eq!(picard(dir.path(), &["enumerate-points", "--config", "typo.cfg"]).0, 2);
}

#[test]
fn presentation_commands() {
    let dir = tempfile::tempdir().unwrap();
    let thm2 = format!("{}/theorem_d2.txt", DATA);
    let (code, out, _) = picard(dir.path(), &["abelianize", &thm2]);
    assert_eq!((code, out.as_str()), (0, "2, 4\n"));
    let (code, out, _) = picard(dir.path(), &["abelianize", &format!("{}/theorem_d11.txt", DATA)]);
    assert_eq!((code, out.as_str()), (0, "2, 2, 2\n"));
    std::fs::write(dir.path().join("empty.txt"), "gens:\n").unwrap();
    assert_eq!(picard(dir.path(), &["abelianize", "empty.txt"]).1, "trivial\n");
    std::fs::write(dir.path().join("bad.txt"), "gens: a\n\na^2 b\n").unwrap();
    let (code, _, err) = picard(dir.path(), &["simplify", "bad.txt"]);
    assert_eq!(code, 2);
    assert!(err.contains("bad.txt:3"), "{}", err);
    let (code, _, _) = picard(dir.path(), &["simplify", &thm2, "-o", "s.txt"]);
    assert_eq!(code, 0);
    assert_eq!(picard(dir.path(), &["abelianize", "s.txt"]).1, "2, 4\n");
}

#[test]
fn covering_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = picard(dir.path(), &["verify-covering", "--render", "t=0", "--random-samples", "500"]);
    assert_eq!(code, 0, "{}", out);
    assert!(out.contains("PASS"));
    let svg = std::fs::read(dir.path().join("out/covering_d2.svg")).unwrap();
    picard(dir.path(), &["render-covering", "--slice", "t=0", "--output", "again.svg"]);
    assert_eq!(std::fs::read(dir.path().join("again.svg")).unwrap(), svg);

    let cert = std::fs::read_to_string(format!("{}/certificate_d2.txt", DATA)).unwrap();
    std::fs::write(dir.path().join("shrunk.txt"), cert.replace("B1 depth 1 :", "B1 depth 1 radius 13/10 :")).unwrap();
    let (code, out, _) = picard(dir.path(), &["verify-covering", "--certificate", "shrunk.txt", "--audit", "0"]);
    assert_eq!(code, 1);
    assert!(out.contains("q3     1.408971  outside"), "{}", out);
}

#[test]
fn smoke_relations() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = picard(dir.path(), &["relations", "--bounds", "0,0,0"]);
    assert_eq!(code, 0, "{}", out);
    assert!(out.contains("54 generators"));
    assert!(out.contains("A_9_11 is listed twice"));
    let log = std::fs::read_to_string(dir.path().join("out/relations_d2.log")).unwrap();
    assert!(log.lines().all(|l| l.split(" : ").count() == 2));
    assert!(log.lines().any(|l| l.split_whitespace().nth(1) == Some("inf")));
    let (code, out, _) = picard(dir.path(), &["abelianize", "out/presentation_raw_d2.txt"]);
    assert_eq!(code, 0);
    assert!(!out.is_empty());
}
