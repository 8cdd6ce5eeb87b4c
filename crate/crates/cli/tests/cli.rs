use std::path::Path;
use std::process::{Command, Output};

fn crlcc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crlcc")).args(args).output().expect("run crlcc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field<'a>(out: &'a str, key: &str) -> Option<&'a str> {
    out.lines().find_map(|l| l.strip_prefix(key)).map(str::trim)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_message(dir: &Path, len: usize) -> std::path::PathBuf {
    let msg = dir.join("msg.bin");
    let bytes: Vec<u8> = (0..len).map(|i| (i * 37 + 11) as u8).collect();
    std::fs::write(&msg, bytes).unwrap();
    msg
}

#[test]
fn weak_round_trip_returns_true_bits() {
    let dir = tempfile::tempdir().unwrap();
    let msg = write_message(dir.path(), 64);
    let cw = dir.path().join("cw.crlcc");
    let o = crlcc(&["encode", "--mode", "weak", "--in", p(&msg), "--out", p(&cw), "--ell", "32", "--delta", "0.25", "--seed", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(&msg).unwrap();
    for i in [1usize, 9, 100, 512] {
        let o = crlcc(&["query", "--in", p(&cw), "--index", &i.to_string(), "--message-bit", "--rng", "3"]);
        assert!(o.status.success());
        let want = bytes[(i - 1) / 8] >> ((i - 1) % 8) & 1;
        assert_eq!(field(&stdout(&o), "verdict:"), Some(want.to_string().as_str()));
    }
}

#[test]
fn strong_round_trip_returns_true_bits() {
    let dir = tempfile::tempdir().unwrap();
    let msg = write_message(dir.path(), 16);
    let cw = dir.path().join("cw.crlcc");
    let o = crlcc(&["encode", "--mode", "strong", "--in", p(&msg), "--out", p(&cw), "--ell", "16", "--delta", "0.05", "--seed", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(&msg).unwrap();
    for i in [1usize, 64, 128] {
        let o = crlcc(&["query", "--in", p(&cw), "--index", &i.to_string(), "--message-bit"]);
        let want = bytes[(i - 1) / 8] >> ((i - 1) % 8) & 1;
        assert_eq!(field(&stdout(&o), "verdict:"), Some(want.to_string().as_str()));
    }
}

#[test]
fn corrupted_file_never_answers_wrong() {
    let dir = tempfile::tempdir().unwrap();
    let msg = write_message(dir.path(), 64);
    let cw = dir.path().join("cw.crlcc");
    let bad = dir.path().join("bad.crlcc");
    assert!(crlcc(&["encode", "--mode", "weak", "--in", p(&msg), "--out", p(&cw), "--ell", "32", "--delta", "0.25", "--seed", "1"])
        .status
        .success());
    // The weak budget at these parameters is 8 bits of n = 6144.
    let o = crlcc(&["corrupt", "--in", p(&cw), "--attack", "random_flip", "--budget-frac", "0.0013", "--out", p(&bad), "--attack-seed", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(Path::new(&format!("{}.mask", p(&bad))).exists());
    let mut answered = 0;
    for i in (1..6144).step_by(97) {
        let o = crlcc(&["query", "--in", p(&bad), "--index", &i.to_string(), "--rng", &i.to_string()]);
        let out = stdout(&o);
        let verdict = field(&out, "verdict:").unwrap();
        let truth = field(&out, "truth:").unwrap();
        if verdict != "⊥" {
            assert_eq!(verdict, truth, "index {i}");
            answered += 1;
        }
    }
    assert!(answered > 0);
}

#[test]
fn sweep_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    let records = dir.path().join("records.tsv");
    std::fs::write(
        &cfg,
        format!(
            "mode = \"weak\"\nell = 32\ndelta = 0.25\nk_prime = 16\nrounds = 20\nattacks = [\"random_flip\", \"label_swap\"]\nrecords = \"{}\"\n",
            p(&records)
        ),
    )
    .unwrap();
    let o = crlcc(&["sweep", "--config", p(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("random_flip") && out.contains("label_swap"), "{out}");
    let lines = std::fs::read_to_string(&records).unwrap();
    assert_eq!(lines.lines().count(), 41);
    assert!(lines.lines().skip(1).all(|l| !l.contains("\twrong\t")));
}

#[test]
fn verify_graph_passes_for_calibrated_degree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.cdag");
    let o = crlcc(&["verify-graph", "--n", "64", "--delta", "0.25", "--seed", "1", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("failures=0"));
    assert_eq!(&std::fs::read(&out).unwrap()[..4], b"CDAG");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // usage
    assert_eq!(crlcc(&["query"]).status.code(), Some(2));
    // malformed file
    let junk = dir.path().join("junk.crlcc");
    std::fs::write(&junk, b"CRW1garbage").unwrap();
    assert_eq!(crlcc(&["query", "--in", p(&junk), "--index", "1"]).status.code(), Some(3));
    std::fs::write(&junk, b"nope").unwrap();
    assert_eq!(crlcc(&["query", "--in", p(&junk), "--index", "1"]).status.code(), Some(3));
    // budget overflow
    let msg = write_message(dir.path(), 64);
    let cw = dir.path().join("cw.crlcc");
    assert!(crlcc(&["encode", "--mode", "weak", "--in", p(&msg), "--out", p(&cw), "--ell", "32", "--delta", "0.25", "--seed", "1"])
        .status
        .success());
    let out = dir.path().join("o.crlcc");
    let args = ["corrupt", "--in", p(&cw), "--attack", "random_flip", "--budget-frac", "0.1", "--out", p(&out)];
    assert_eq!(crlcc(&args).status.code(), Some(4));
    let mut relaxed = args.to_vec();
    relaxed.push("--out-of-theorem");
    assert_eq!(crlcc(&relaxed).status.code(), Some(0));
    // oracle size guard
    assert_eq!(crlcc(&["verify-graph", "--n", "64", "--delta", "0.25", "--max-r", "30"]).status.code(), Some(4));
}
