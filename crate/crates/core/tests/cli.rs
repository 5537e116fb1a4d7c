use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn olim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_olim"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn summary(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn gen_random(dir: &Path, name: &str, seed: &str) -> PathBuf {
    let out = dir.join(name);
    let o = olim(&[
        "gen",
        "random",
        "--seed",
        seed,
        "--slots",
        "288",
        "--p-min",
        "2",
        "--p-max",
        "50",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn gen_is_byte_identical_and_sized() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_random(dir.path(), "a.csv", "1");
    let b = gen_random(dir.path(), "b.csv", "1");
    let c = gen_random(dir.path(), "c.csv", "2");
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_ne!(bytes, std::fs::read(&c).unwrap());
    assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 289);
}

#[test]
fn gen_adversary_and_interleave() {
    let dir = tempfile::tempdir().unwrap();
    let adv = dir.path().join("adv.csv");
    let o = olim(&[
        "gen",
        "adversary",
        "--p-min",
        "1",
        "--p-max",
        "16",
        "--q",
        "1.5",
        "--steps",
        "50",
        "--out",
        s(&adv),
    ]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&adv).unwrap().lines().count(), 52);
    let inter = dir.path().join("inter.csv");
    let o = olim(&[
        "gen",
        "interleave",
        "--base",
        s(&adv),
        "--p-min",
        "1",
        "--p-max",
        "16",
        "--out",
        s(&inter),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read_to_string(&inter).unwrap().lines().count(),
        2 * 51 + 2
    );
    let o = olim(&[
        "gen",
        "adversary",
        "--p-min",
        "1",
        "--p-max",
        "16",
        "--q",
        "0.5",
        "--out",
        s(&adv),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.csv");
    std::fs::write(&flat, "index,price,demand\n1,3,1\n2,3,2\n3,3,0.5\n").unwrap();
    let out = dir.path().join("nostr.csv");
    let o = olim(&[
        "run",
        "--algo",
        "nostr",
        "--instance",
        s(&flat),
        "--p-min",
        "1",
        "--p-max",
        "6",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    assert_eq!(summary(&out.with_extension("json"))["cost"], 10.5);
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "t,price,demand,x,b\n1,3,1,1,0\n2,3,2,2,0\n3,3,0.5,0.5,0\n"
    );

    let inst = gen_random(dir.path(), "r.csv", "5");
    let mut costs = Vec::new();
    for algo in ["opt", "batman", "batmanrate"] {
        let out = dir.path().join(format!("{algo}.csv"));
        let o = olim(&[
            "run",
            "--algo",
            algo,
            "--instance",
            s(&inst),
            "--rho-c",
            "inf",
            "--rho-d",
            "INF",
            "--out",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let sm = summary(&out.with_extension("json"));
        assert_eq!(sm["feasible"], true);
        costs.push(sm["cost"].as_f64().unwrap());
    }
    assert!(costs[1] >= costs[0]);
    assert_eq!(
        std::fs::read(dir.path().join("batman.csv")).unwrap(),
        std::fs::read(dir.path().join("batmanrate.csv")).unwrap()
    );

    let o = olim(&[
        "run",
        "--algo",
        "batman",
        "--instance",
        s(&inst),
        "--rho-c",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_report() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["11", "12", "13"] {
        gen_random(dir.path(), &format!("day{seed}.csv"), seed);
    }
    let report = dir.path().join("report.csv");
    let pattern = dir.path().join("day*.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_olim"))
        .args([
            "compare",
            "--instances",
            s(&pattern),
            "--algos",
            "batman,nostr",
            "--out",
            s(&report),
        ])
        .env("OLIM_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("BatMan"));

    let mut rd = csv::Reader::from_path(&report).unwrap();
    let headers = rd.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let ratio: f64 = r[col("cost_ratio")].parse().unwrap();
        assert!(ratio >= 1.0 - 1e-7);
        if &r[col("algorithm")] == "BatMan" {
            assert_eq!(&r[col("bound_pass")], "pass");
        }
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(json["aggregates"].as_array().unwrap().len(), 3);

    let o = olim(&[
        "compare",
        "--instances",
        s(&dir.path().join("nothing*.csv")),
        "--out",
        s(&report),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
