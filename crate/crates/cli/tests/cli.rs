use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use smallworld::census::NeighborhoodDistribution;

fn smallworld(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smallworld")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = smallworld(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn records(text: &str, kind: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str::<Value>(l).unwrap()).filter(|r| r["type"] == kind).collect()
}

#[test]
fn ws_generate_writes_nk_edges() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &["generate", "--model", "ws", "--n", "1000", "--k", "2", "--phi", "0.3", "--seed", "7", "--out", "g.json"],
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("nodes=1000 edges=2000 "));
    let text = fs::read_to_string(dir.path().join("g.json")).unwrap();
    let header: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(header["type"], "header");
    assert_eq!(header["edges"], 2000);
    assert_eq!(records(&text, "node").len(), 1000);
    let edges = records(&text, "edge");
    assert_eq!(edges.len(), 2000);
    assert!(edges.iter().all(|e| e["u"].as_u64() < e["v"].as_u64()));
}

#[test]
fn kleinberg_generate_writes_one_shortcut_per_node_and_unit() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &["generate", "--model", "kleinberg", "--n", "64", "--q", "1", "--k", "1", "--ell", "2", "--seed", "7"],
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let shortcuts = records(&text, "edge").into_iter().filter(|e| e["kind"] == "shortcut").count();
    assert_eq!(shortcuts, 4096);
}

#[test]
fn generate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        ok(
            dir.path(),
            &["generate", "--model", "ws", "--n", "500", "--k", "3", "--phi", "0.4", "--seed", "11", "--out", name],
        );
    }
    assert_eq!(fs::read(dir.path().join("a.json")).unwrap(), fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn unrewired_ring_census_has_a_single_bucket() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "census", "--model", "ws", "--n", "200", "--k", "1", "--phi", "0", "--radius", "1", "--seed", "1", "--out",
            "c.json",
        ],
    );
    let doc: Value = serde_json::from_slice(&fs::read(dir.path().join("c.json")).unwrap()).unwrap();
    let buckets = doc["result"]["buckets"].as_array().unwrap();
    assert_eq!(buckets.len(), 1);
    assert_eq!(buckets[0]["mass"].as_f64(), Some(1.0));
}

#[test]
fn census_files_reserialize_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "census", "--model", "ws", "--n", "3000", "--k", "2", "--phi", "0.3", "--radius", "2", "--seed", "5",
            "--out", "c.json",
        ],
    );
    let bytes = fs::read(dir.path().join("c.json")).unwrap();
    let mut doc: Value = serde_json::from_slice(&bytes).unwrap();
    let dist: NeighborhoodDistribution = serde_json::from_value(doc["result"].take()).unwrap();
    doc["result"] = serde_json::to_value(&dist).unwrap();
    let mut again = serde_json::to_vec_pretty(&doc).unwrap();
    again.push(b'\n');
    assert_eq!(again, bytes);
}

#[test]
fn compare_rejects_censuses_with_different_parameters() {
    let dir = tempfile::tempdir().unwrap();
    for (r, name) in [("1", "r1.json"), ("2", "r2.json")] {
        ok(
            dir.path(),
            &[
                "census", "--model", "ws", "--n", "300", "--k", "1", "--phi", "0.3", "--radius", r, "--seed", "2",
                "--out", name,
            ],
        );
    }
    let out = smallworld(dir.path(), &["compare", "--censuses", "r1.json", "r2.json", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let same = ok(dir.path(), &["compare", "--censuses", "r1.json", "r1.json", "--seed", "0"]);
    let text = String::from_utf8(same.stdout).unwrap();
    let tv: f64 = text.lines().last().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(tv, 0.0);
}

#[test]
fn compare_sweep_emits_one_row_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &[
            "compare",
            "--model",
            "ws",
            "--k",
            "1",
            "--phi",
            "0",
            "--radius",
            "2",
            "--ns",
            "10,20",
            "--limit-samples",
            "50",
            "--seed",
            "3",
        ],
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n,tv,finite_samples,limit_samples,finite_buckets");
    assert_eq!(rows.len(), 3);
    assert!(rows[1..].iter().all(|r| r.split(',').nth(1).unwrap().parse::<f64>() == Ok(0.0)), "{text}");
}

#[test]
fn replay_reproduces_every_output_kind() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["generate", "--model", "kleinberg", "--n", "12", "--ell", "1.5", "--out", "o.json"],
        &[
            "census",
            "--model",
            "kleinberg",
            "--n",
            "12",
            "--ell",
            "1.5",
            "--radius",
            "1",
            "--epsilon",
            "0.1",
            "--out",
            "o.json",
        ],
        &["functionals", "degree-census", "--model", "ws", "--n", "400", "--k", "2", "--phi", "0.5", "--out", "o.json"],
        &[
            "functionals",
            "route-sweep",
            "--ns",
            "8,16",
            "--ells",
            "0,2",
            "--trials",
            "20",
            "--format",
            "json",
            "--out",
            "o.json",
        ],
    ];
    for args in runs {
        let first = ok(dir.path(), args);
        assert!(String::from_utf8_lossy(&first.stderr).contains("seed: "), "unseeded runs announce their seed");
        ok(dir.path(), &["--replay", "o.json", "--replay-out", "p.json"]);
        assert_eq!(
            fs::read(dir.path().join("o.json")).unwrap(),
            fs::read(dir.path().join("p.json")).unwrap(),
            "{args:?}"
        );
    }
}

#[test]
fn functionals_tables_have_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let ws = ["--model", "ws", "--n", "2000", "--k", "2", "--phi", "0.3", "--seed", "4"];
    let cases: [(&[&str], &str); 6] = [
        (&["clustering"], "nodes,global,limit,relative_gap,mean_local,triangles"),
        (&["pagerank"], "node,pagerank"),
        (&["pagerank", "--local-radius", "2", "--sample-nodes", "3"], "node,full,local,abs_error,bound"),
        (&["percolation", "--samples", "100"], "p,giant_fraction,local_estimate,samples"),
        (&["degree-census", "--filter", "in-shortcut"], "degree,count,fraction,poisson_pmf"),
        (&["route-sweep", "--ns", "8", "--ells", "2", "--trials", "5"], "n,ell,trials,mean_hops,std_error,minimizer"),
    ];
    for (sub, header) in cases {
        let mut args = vec!["functionals"];
        args.extend_from_slice(sub);
        if sub[0] != "route-sweep" {
            args.extend_from_slice(&ws);
        }
        let text = String::from_utf8(ok(dir.path(), &args).stdout).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# tool: smallworld "));
        assert!(lines.next().unwrap().starts_with("# config: {"));
        assert!(lines.next().unwrap().starts_with("# summary: {"));
        assert_eq!(lines.next(), Some(header), "{sub:?}");
    }
    let k = ["--model", "kleinberg", "--n", "32", "--ell", "3", "--seed", "4"];
    let text =
        String::from_utf8(ok(dir.path(), &[&["functionals", "shortcut-stats"][..], &k].concat()).stdout).unwrap();
    assert_eq!(text.lines().nth(3), Some("length,cdf"));
}

#[test]
fn graph_files_feed_functionals() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["generate", "--model", "ws", "--n", "800", "--k", "2", "--phi", "0.2", "--seed", "9", "--out", "g.json"],
    );
    let from_file = ok(dir.path(), &["functionals", "clustering", "--graph", "g.json", "--seed", "9"]);
    let generated = ok(
        dir.path(),
        &["functionals", "clustering", "--model", "ws", "--n", "800", "--k", "2", "--phi", "0.2", "--seed", "9"],
    );
    let row = |o: &Output| String::from_utf8_lossy(&o.stdout).lines().last().unwrap().to_string();
    assert_eq!(row(&from_file), row(&generated));
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(smallworld(dir.path(), &["bogus"]).status.code(), Some(1));
    assert_eq!(smallworld(dir.path(), &["functionals", "bogus"]).status.code(), Some(1));
    assert_eq!(smallworld(dir.path(), &["generate", "--model", "ws", "--n", "10"]).status.code(), Some(1));
    assert_eq!(smallworld(dir.path(), &[]).status.code(), Some(1));
    assert_eq!(smallworld(dir.path(), &["--help"]).status.code(), Some(0));
    let missing = smallworld(dir.path(), &["functionals", "clustering", "--graph", "missing.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let unwritable =
        ["generate", "--model", "ws", "--n", "10", "--phi", "0", "--seed", "1", "--out", "no/such/dir/g.json"];
    assert_eq!(smallworld(dir.path(), &unwritable).status.code(), Some(2));
    let no_limit =
        ["census", "--limit", "--samples", "5", "--model", "kleinberg", "--n", "8", "--ell", "2", "--seed", "1"];
    assert_eq!(smallworld(dir.path(), &no_limit).status.code(), Some(3));
}
