mod common;

use std::fs;
use std::path::Path;

use common::{circle60, hicmapper, snapshot, write_pairs};
use hicmapper_cli::{EXIT_DEGENERATE, EXIT_PARAMETER, EXIT_PARSE};

fn ok(out: &std::process::Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scc_on_one_sample_is_degenerate() {
    let tmp = tempfile::tempdir().unwrap();
    let pairs = tmp.path().join("one.tsv");
    fs::write(&pairs, "a\t100\t900000\na\t10\t20\n").unwrap();
    let maps = tmp.path().join("maps");
    ok(&hicmapper(&["bin", "--input", path(&pairs), "--bin-size", "500000", "--out-dir", path(&maps)]));
    let out = hicmapper(&["scc", "--input", path(&maps), "--out-dir", path(&tmp.path().join("scc"))]);
    assert_eq!(out.status.code(), Some(EXIT_DEGENERATE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 2 samples"));
}

#[test]
fn identity_smoothing_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    write_pairs(&tmp.path().join("pairs"), 4, 300, 1);
    let maps = tmp.path().join("maps");
    let smoothed = tmp.path().join("smoothed");
    ok(&hicmapper(&["bin", "--input", path(&tmp.path().join("pairs")), "--out-dir", path(&maps)]));
    ok(&hicmapper(&["smooth", "--input", path(&maps), "--h", "0", "--out-dir", path(&smoothed)]));
    let coo = |d: &Path| snapshot(d).into_iter().filter(|(n, _)| n.ends_with(".coo")).collect::<Vec<_>>();
    let a = coo(&maps);
    assert_eq!(a.len(), 4);
    assert_eq!(a, coo(&smoothed));
}

#[test]
fn error_classes_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.tsv");
    fs::write(&bad, "a\t1\t2\nb\tx\t3\n").unwrap();
    let out = hicmapper(&["bin", "--input", path(&bad), "--out-dir", path(&tmp.path().join("o1"))]);
    assert_eq!(out.status.code(), Some(EXIT_PARSE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let good = tmp.path().join("good.tsv");
    fs::write(&good, "a\t1\t2000000\n").unwrap();
    let out = hicmapper(&["bin", "--input", path(&good), "--n-bins", "2", "--out-dir", path(&tmp.path().join("o2"))]);
    assert_eq!(out.status.code(), Some(EXIT_PARAMETER));

    let out = hicmapper(&["diagram", "--mapper", path(&circle60()), "--out-dir", path(&tmp.path().join("o3"))]);
    assert_eq!(out.status.code(), Some(EXIT_PARSE));

    let mds = tmp.path().join("mds");
    ok(&hicmapper(&["mds", "--distances", path(&circle60()), "--out-dir", path(&mds)]));
    let out = hicmapper(&[
        "mapper", "--distances", path(&circle60()), "--filters", path(&mds.join("filters.csv")),
        "--gains", "0.6", "--seed", "1", "--out-dir", path(&tmp.path().join("o4")),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_PARAMETER));

    // collinear points leave one positive eigenvalue
    let line = tmp.path().join("line.csv");
    fs::write(&line, "sample_id,a,b,c\na,0,1,2\nb,1,0,1\nc,2,1,0\n").unwrap();
    let out = hicmapper(&["mds", "--distances", path(&line), "--p", "2", "--out-dir", path(&tmp.path().join("o5"))]);
    assert_eq!(out.status.code(), Some(EXIT_DEGENERATE));

    let out = hicmapper(&["mapper", "--distances", path(&circle60())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bundled_circle_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    ok(&hicmapper(&["pipeline", "--distances", path(&circle60()), "--seed", "7", "--out-dir", path(&out_dir)]));
    let mapper: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("mapper.json")).unwrap()).unwrap();
    assert_eq!(mapper["cycle_rank"], 1);
    assert_eq!(mapper["n_components"], 1);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    let points = report["per_point"].as_array().unwrap();
    let ext1: Vec<_> = points.iter().filter(|p| p["kind"] == "Ext1").collect();
    assert_eq!(ext1.len(), 2, "one loop seen by each of the two filters");
    assert!(
        ext1.iter().any(|p| p["significant"] == true),
        "no significant Ext1 point; d_c = {}, points = {ext1:?}",
        report["d_c"]
    );
}

#[test]
fn stages_compose_into_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    write_pairs(&t.join("pairs"), 16, 800, 3);
    let s = |p: &str| t.join(p).to_str().unwrap().to_string();
    let run = |args: &[&str]| ok(&hicmapper(args));
    run(&["bin", "--input", &s("pairs"), "--out-dir", &s("maps")]);
    run(&["smooth", "--input", &s("maps"), "--h", "1", "--out-dir", &s("smoothed")]);
    run(&["bands", "--input", &s("maps"), "--out-dir", &s("bands")]);
    run(&["scc", "--input", &s("smoothed"), "--out-dir", &s("scc")]);
    run(&["mds", "--distances", &s("scc/distances.csv"), "--out-dir", &s("mds")]);
    run(&[
        "mapper", "--distances", &s("scc/distances.csv"), "--filters", &s("mds/filters.csv"),
        "--metadata", &s("bands/bands.csv"), "--seed", "5", "--out-dir", &s("mapper"),
    ]);
    run(&["diagram", "--mapper", &s("mapper/mapper.json"), "--out-dir", &s("diagram")]);
    run(&[
        "bootstrap", "--distances", &s("scc/distances.csv"), "--filters", &s("mds/filters.csv"),
        "--mapper", &s("mapper/mapper.json"), "--iterations", "30", "--seed", "5", "--out-dir", &s("boot"),
    ]);
    run(&["pipeline", "--input", &s("pairs"), "--iterations", "30", "--seed", "5", "--out-dir", &s("all")]);

    let read = |p: &str| fs::read_to_string(t.join(p)).unwrap();
    for (stage, file) in [
        ("maps", "cell03.coo"),
        ("bands", "bands.csv"),
        ("scc", "distances.csv"),
        ("scc", "similarity.csv"),
        ("mds", "filters.csv"),
        ("mapper", "mapper.json"),
        ("mapper", "mapper.dot"),
        ("diagram", "diagram_f1.csv"),
        ("diagram", "diagram_f2.csv"),
        ("boot", "report.json"),
        ("boot", "confidence.csv"),
    ] {
        let piped = if stage == "maps" { format!("all/maps/{file}") } else { format!("all/{file}") };
        assert_eq!(read(&format!("{stage}/{file}")), read(&piped), "{stage}/{file}");
    }
    assert_eq!(read("smoothed/cell03.coo"), read("all/smoothed/cell03.coo"));

    let doc: serde_json::Value = serde_json::from_str(&read("mapper/mapper.json")).unwrap();
    let meta = &doc["nodes"][0]["metadata"];
    assert!(meta["near"].is_f64() && meta["mitotic"].is_f64());
    let dot = read("mapper/mapper.dot");
    assert!(dot.starts_with("graph mapper {") && dot.contains("\"near\"="));
}

#[test]
fn manifest_records_config_and_digests() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("mds");
    ok(&hicmapper(&["mds", "--distances", path(&circle60()), "--p", "2", "--out-dir", path(&out_dir)]));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "mds");
    assert_eq!(m["config"]["p"], 2);
    assert_eq!(m["config"]["scale_by_sqrt_eigenvalue"], true);
    assert!(m["config"].get("out_dir").is_none());
    assert_eq!(m["inputs"][0]["path"], path(&circle60()));
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["outputs"][0]["path"], "filters.csv");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, extra) in [(&a, "--sequential"), (&b, "--workers=3")] {
        ok(&hicmapper(&[
            extra, "pipeline", "--distances", path(&circle60()), "--iterations", "20", "--seed", "11", "--out-dir", path(dir),
        ]));
    }
    assert_eq!(snapshot(&a), snapshot(&b));
}

#[test]
fn bands_from_smoothed_maps() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    write_pairs(&t.join("pairs"), 6, 400, 4);
    let s = |p: &str| t.join(p).to_str().unwrap().to_string();
    ok(&hicmapper(&[
        "pipeline", "--input", &s("pairs"), "--bands-from", "smoothed", "--iterations", "5", "--seed", "1", "--out-dir", &s("all"),
    ]));
    ok(&hicmapper(&["bands", "--input", &s("all/smoothed"), "--out-dir", &s("b")]));
    let read = |p: &str| fs::read_to_string(t.join(p)).unwrap();
    assert_eq!(read("b/bands.csv"), read("all/bands.csv"));
    let m: serde_json::Value = serde_json::from_str(&read("all/manifest.json")).unwrap();
    assert_eq!(m["config"]["bands_from"], "smoothed");
}
