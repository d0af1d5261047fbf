use std::path::Path;
use std::process::{Command, Output};

fn nmsparse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmsparse"))
        .args(args)
        .env_remove("NM_SPARSE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn records(text: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn read_matrix(path: &Path) -> Vec<Vec<f64>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn fuzz_reports_all_cases() {
    let o = nmsparse(&[
        "roundtrip-fuzz",
        "--mode",
        "2:4",
        "--iters",
        "1000",
        "--seed",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("1000/1000 ok"));

    let o = nmsparse(&["roundtrip-fuzz", "--iters", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 cases"));
}

#[test]
fn packed_containers_validate() {
    let dir = tempfile::tempdir().unwrap();
    for (mode, tiled) in [("1:2", false), ("2:4", true), ("1:2", true)] {
        let path = dir
            .path()
            .join(format!("m{}{tiled}.nmcs", mode.replace(':', "")));
        let p = path.to_str().unwrap();
        let mut args = vec![
            "pack", "--mode", mode, "--rows", "64", "--cols", "64", "--out", p,
        ];
        if tiled {
            args.push("--tiled");
        }
        assert_eq!(nmsparse(&args).status.code(), Some(0));
        let o = nmsparse(&["roundtrip-fuzz", "--container", p]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("ok"));
    }
}

#[test]
fn corrupted_container_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.nmcs");
    let p = path.to_str().unwrap();
    assert_eq!(
        nmsparse(&["pack", "--mode", "2:4", "--out", p])
            .status
            .code(),
        Some(0)
    );
    let mut bytes = std::fs::read(&path).unwrap();
    // 0x1 keeps slot 1 twice, which no 2:4 group can encode
    let last = bytes.len() - 1;
    bytes[last] = (bytes[last] & 0xf0) | 0x1;
    std::fs::write(&path, &bytes).unwrap();
    let o = nmsparse(&["roundtrip-fuzz", "--container", p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("malformed nibble"), "{}", stderr(&o));

    std::fs::write(&path, b"NMCX").unwrap();
    assert_eq!(
        nmsparse(&["roundtrip-fuzz", "--container", p])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn attn_demo_rejects_unaligned_length() {
    let o = nmsparse(&["attn-demo", "--n", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alignment"), "{}", stderr(&o));
}

#[test]
fn attn_demo_heatmaps_dominate_dense_weights() {
    let dir = tempfile::tempdir().unwrap();
    let maps = dir.path().join("maps");
    let o = nmsparse(&[
        "attn-demo",
        "--n",
        "64",
        "--d",
        "16",
        "--mode",
        "2:4",
        "--seed",
        "5",
        "--dump-heatmaps",
        maps.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("rel_l2="));
    assert!(out.contains("row-stochastic check pass"));

    let dense = read_matrix(&maps.join("head0_dense.csv"));
    let sparse = read_matrix(&maps.join("head0_sparse.csv"));
    assert_eq!(dense.len(), 64);
    for (d_row, s_row) in dense.iter().zip(&sparse) {
        assert!((s_row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(s_row.iter().filter(|&&v| v != 0.0).count(), 32);
        for (&d, &s) in d_row.iter().zip(s_row) {
            assert!(s == 0.0 || s >= d, "{s} < {d}");
        }
    }
}

#[test]
fn quality_sweep_anchor_rows() {
    let args = [
        "quality-sweep",
        "--p",
        "1",
        "--sigma",
        "1",
        "--densities",
        "0.25,0.5",
        "--n",
        "64",
        "--samples",
        "3",
        "--seed",
        "2",
    ];
    let o = nmsparse(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("pattern,s,theory,empirical_mean,empirical_std\n"));
    let rows = records(&text);
    let theory = |pat: &str, s: &str| -> f64 {
        rows.iter().find(|r| r[0] == pat && r[1] == s).unwrap()[2]
            .parse()
            .unwrap()
    };
    assert!((theory("1:2", "0.5") - 0.7602).abs() < 1e-4);
    assert_eq!(theory("fixed", "0.5"), 0.5);
    // standard normal CDF at 1
    assert!((theory("topk", "0.5") - 0.841_344_746_068_542_9).abs() < 1e-12);
    assert_eq!(rows.len(), 6);

    let again = nmsparse(&args);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn speedup_table_flags_crossovers() {
    let o = nmsparse(&["speedup-table", "--n-list", "512,672,4096"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = records(&stdout(&o));
    let flagged = |flag: &str| rows.iter().find(|r| r[4] == flag).unwrap().clone();
    assert_eq!(flagged("performer_beats_dense")[0], "672");
    let be: f64 = flagged("crossover_topk_dense")[2].parse().unwrap();
    assert!((be - 384.0 / 8512.0).abs() < 1e-4);
    let pd: f64 = flagged("crossover_performer_dense")[0].parse().unwrap();
    assert!((600.0..=750.0).contains(&pd));
    let pn: f64 = flagged("crossover_performer_nm")[0].parse().unwrap();
    assert!((900.0..=1100.0).contains(&pn));
    for r in rows.iter().filter(|r| r[1] == "nm") {
        let v: f64 = r[3].parse().unwrap();
        assert!((v - 1.4953).abs() < 0.02, "{r:?}");
    }
}

#[test]
fn traffic_plug_in_rows() {
    let o = nmsparse(&[
        "traffic", "--kind", "full", "--n", "1024", "--d", "64", "--T", "128",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = records(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][5], "2097152");

    let o = nmsparse(&["traffic", "--kind", "topk", "--n", "1024", "--s", "1"]);
    let rows = records(&stdout(&o));
    assert_eq!(rows[0][7], (1024 * 64 * (1024 + 8 + 1)).to_string());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(nmsparse(&["traffic", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        nmsparse(&["roundtrip-fuzz", "--mode", "3:4"]).status.code(),
        Some(2)
    );
    assert_eq!(nmsparse(&["traffic", "--s", "1.5"]).status.code(), Some(2));
    assert_eq!(nmsparse(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_fills_missing_flags_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# fuzz settings\niters = 4\nmode=1:2\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert!(stdout(&nmsparse(&["roundtrip-fuzz", "--config", c])).contains("4/4 ok"));
    assert!(stdout(&nmsparse(&[
        "roundtrip-fuzz",
        "--config",
        c,
        "--iters",
        "2"
    ]))
    .contains("2/2 ok"));

    std::fs::write(&cfg, "colour=blue\n").unwrap();
    let o = nmsparse(&["roundtrip-fuzz", "--config", c]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_precedence() {
    let sweep = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_nmsparse"));
        cmd.args([
            "quality-sweep",
            "--n",
            "16",
            "--samples",
            "2",
            "--densities",
            "0.5",
        ])
        .args(extra);
        match env {
            Some(v) => cmd.env("NM_SPARSE_SEED", v),
            None => cmd.env_remove("NM_SPARSE_SEED"),
        };
        cmd.output().unwrap().stdout
    };
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("seed.cfg");
    std::fs::write(&cfg, "seed=4\n").unwrap();
    let c = cfg.to_str().unwrap();

    assert_eq!(sweep(&[], Some("3")), sweep(&["--seed", "3"], None));
    assert_ne!(sweep(&[], Some("3")), sweep(&[], None));
    assert_eq!(
        sweep(&["--config", c], Some("3")),
        sweep(&["--seed", "4"], None)
    );
    assert_eq!(
        sweep(&["--config", c, "--seed", "9"], Some("3")),
        sweep(&["--seed", "9"], None)
    );
}
