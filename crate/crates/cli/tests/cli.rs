use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bnzip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bnzip")).args(args).output().expect("run bnzip")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Small xorshift stream so the tests need no RNG crate.
struct Bits(u64);

impl Bits {
    fn next(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }
}

fn write_csv(dir: &TempDir, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> PathBuf {
    let p = path(dir, name);
    let mut text = format!("{header}\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    std::fs::write(&p, text).unwrap();
    p
}

fn compress(input: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["compress", s(input), "-o", s(out)];
    args.extend_from_slice(extra);
    let o = bnzip(&args);
    assert!(o.status.success(), "compress failed: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn inspect_json(archive: &Path) -> serde_json::Value {
    let o = bnzip(&["inspect", s(archive), "--json"]);
    assert!(o.status.success());
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn categorical_round_trip_is_lossless() {
    let dir = TempDir::new().unwrap();
    let mut r = Bits(7);
    let colours = ["red", "green", "blue"];
    let input = write_csv(
        &dir,
        "in.csv",
        "colour,size,flag",
        (0..400).map(|_| {
            let c = colours[(r.next() % 3) as usize];
            let size = if c == "red" { "big" } else { ["small", "medium"][(r.next() % 2) as usize] };
            format!("{c},{size},{}", if r.next() % 5 == 0 { "y" } else { "n" })
        }),
    );
    let archive = path(&dir, "a.sqsh");
    let o = compress(&input, &archive, &[]);
    let summary = stdout(&o);
    assert!(summary.starts_with("ratio="), "{summary}");
    for key in ["model_bits=", "data_bits=", "framing_bits="] {
        assert!(summary.contains(key), "{summary}");
    }
    let out = path(&dir, "out.csv");
    assert!(bnzip(&["decompress", s(&archive), "-o", s(&out)]).status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), std::fs::read_to_string(&input).unwrap());
}

#[test]
fn percent_tolerance_uses_declared_range() {
    let dir = TempDir::new().unwrap();
    let mut r = Bits(11);
    let values: Vec<f64> = (0..500).map(|_| (r.next() % 10_000) as f64 / 1000.0).collect();
    let input = write_csv(&dir, "in.csv", "x", values.iter().map(|v| format!("{v}")));
    let cfg = path(&dir, "cfg.txt");
    std::fs::write(&cfg, "column = x real range=0:10\n").unwrap();
    let archive = path(&dir, "a.sqsh");
    compress(&input, &archive, &["--config", s(&cfg), "--tolerance", "1%"]);
    let report = inspect_json(&archive);
    let tol = report["columns"][0]["tolerance"].as_f64().unwrap();
    assert!((tol - 0.1).abs() < 1e-12, "{tol}");
    let out = path(&dir, "out.csv");
    assert!(bnzip(&["decompress", s(&archive), "-o", s(&out)]).status.success());
    let back: Vec<f64> = std::fs::read_to_string(&out).unwrap().lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(back.len(), values.len());
    assert!(values.iter().zip(&back).all(|(a, b)| (a - b).abs() <= 0.1));
}

#[test]
fn structure_file_overrides_search() {
    let dir = TempDir::new().unwrap();
    let mut r = Bits(3);
    let input = write_csv(&dir, "in.csv", "a,b,c", (0..300).map(|_| format!("{},{},{}", r.next() % 2, r.next() % 3, r.next() % 2)));
    let net = path(&dir, "net.txt");
    std::fs::write(&net, "# chosen by hand\nc: a, b\n").unwrap();
    let archive = path(&dir, "a.sqsh");
    compress(&input, &archive, &["--structure", s(&net)]);
    let report = inspect_json(&archive);
    assert_eq!(report["edges"], 2);
    assert_eq!(report["columns"][2]["parents"], serde_json::json!(["a", "b"]));
    let bad = path(&dir, "bad.txt");
    std::fs::write(&bad, "a: b\nb: a\n").unwrap();
    let o = bnzip(&["compress", s(&input), "-o", s(&archive), "--structure", s(&bad)]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn truncated_archive_gives_partial_output() {
    let dir = TempDir::new().unwrap();
    let mut r = Bits(5);
    let input = write_csv(&dir, "in.csv", "k,v", (0..1000).map(|i| format!("{},{}", r.next() % 4, i % 17)));
    let archive = path(&dir, "a.sqsh");
    compress(&input, &archive, &[]);
    let bytes = std::fs::read(&archive).unwrap();
    let cut = path(&dir, "cut.sqsh");
    std::fs::write(&cut, &bytes[..bytes.len() - 300]).unwrap();
    let out = path(&dir, "out.csv");
    let o = bnzip(&["decompress", s(&cut), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(6));
    let original = std::fs::read_to_string(&input).unwrap();
    let partial = std::fs::read_to_string(&out).unwrap();
    let rows = partial.lines().count() - 1;
    assert!(rows > 0 && rows < 1000, "{rows}");
    assert!(original.starts_with(&partial));
}

#[test]
fn inspect_reports_accounting() {
    let dir = TempDir::new().unwrap();
    let input = write_csv(&dir, "in.csv", "a,b", (0..200).map(|i| format!("{},{}", i % 3, (i % 3) * 2)));
    let archive = path(&dir, "a.sqsh");
    compress(&input, &archive, &["--index"]);
    let r = inspect_json(&archive);
    let total = r["total_bits"].as_i64().unwrap();
    let parts = r["model_bits"].as_i64().unwrap() + r["data_bits"].as_i64().unwrap() + r["framing_bits"].as_i64().unwrap();
    assert_eq!(total, parts);
    assert_eq!(total, 8 * std::fs::metadata(&archive).unwrap().len() as i64);
    assert_eq!(r["rows"], 200);
    assert_eq!(r["index"], true);
    let text = stdout(&bnzip(&["inspect", s(&archive)]));
    assert!(text.contains("model_bits"), "{text}");
}

#[test]
fn get_requires_index() {
    let dir = TempDir::new().unwrap();
    let input = write_csv(&dir, "in.csv", "a", (0..50).map(|i| format!("{}", i % 4)));
    let archive = path(&dir, "a.sqsh");
    compress(&input, &archive, &["--delta"]);
    let o = bnzip(&["get", s(&archive), "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(bnzip(&["compress", s(&input), "-o", s(&archive), "--delta", "--index"]).status.code() == Some(2));
}

#[test]
fn random_rows_match_full_decode() {
    let dir = TempDir::new().unwrap();
    let mut r = Bits(9);
    let n = 2000u64;
    let input = write_csv(
        &dir,
        "in.csv",
        "city,temp,note",
        (0..n).map(|_| {
            let c = r.next() % 4;
            format!("c{c},{},n{}", c * 10 + r.next() % 7, r.next() % 3)
        }),
    );
    let archive = path(&dir, "a.sqsh");
    compress(&input, &archive, &["--index"]);
    let out = path(&dir, "out.csv");
    assert!(bnzip(&["decompress", s(&archive), "-o", s(&out)]).status.success());
    let full: Vec<String> = std::fs::read_to_string(&out).unwrap().lines().skip(1).map(str::to_string).collect();
    for _ in 0..100 {
        let i = (r.next() % n) as usize;
        let o = bnzip(&["get", s(&archive), &i.to_string()]);
        assert!(o.status.success());
        assert_eq!(stdout(&o).trim_end(), full[i]);
    }
    assert_eq!(bnzip(&["get", s(&archive), &n.to_string()]).status.code(), Some(2));
}

#[test]
fn pairwise_columns_give_fifty_edges() {
    let dir = TempDir::new().unwrap();
    let mut r = Bits(13);
    let header: Vec<String> = (0..100).map(|i| format!("a{i}")).collect();
    let input = write_csv(
        &dir,
        "in.csv",
        &header.join(","),
        (0..1000).map(|_| {
            let head: Vec<u64> = (0..50).map(|_| r.next() % 2).collect();
            head.iter().chain(&head).map(u64::to_string).collect::<Vec<_>>().join(",")
        }),
    );
    let archive = path(&dir, "a.sqsh");
    compress(&input, &archive, &[]);
    let report = inspect_json(&archive);
    assert_eq!(report["edges"], 50);
    for i in 0..50 {
        let p = |j: usize| report["columns"][j]["parents"].clone();
        let twin = |j: usize| serde_json::json!([format!("a{j}")]);
        assert!(p(i) == twin(i + 50) || p(i + 50) == twin(i), "column a{i}");
    }
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = TempDir::new().unwrap();
    let archive = path(&dir, "a.sqsh");
    let ragged = write_csv(&dir, "ragged.csv", "a,b", ["1,2".to_string(), "3".to_string()]);
    assert_eq!(bnzip(&["compress", s(&ragged), "-o", s(&archive)]).status.code(), Some(3));
    let missing = path(&dir, "missing.csv");
    assert_eq!(bnzip(&["compress", s(&missing), "-o", s(&archive)]).status.code(), Some(5));
    let good = write_csv(&dir, "good.csv", "a", ["1".to_string()]);
    let cfg = path(&dir, "cfg.txt");
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(bnzip(&["compress", s(&good), "-o", s(&archive), "--config", s(&cfg)]).status.code(), Some(4));
    let junk = path(&dir, "junk.sqsh");
    std::fs::write(&junk, b"not an archive").unwrap();
    assert_eq!(bnzip(&["inspect", s(&junk)]).status.code(), Some(6));
    assert_eq!(bnzip(&["frobnicate"]).status.code(), Some(2));
}
