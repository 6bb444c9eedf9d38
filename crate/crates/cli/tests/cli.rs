use std::fs;
use std::path::Path;
use std::process::Command;

fn mrecon(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_mrecon")).args(args).output().unwrap();
    out.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn first_line(p: &Path) -> String {
    fs::read_to_string(p).unwrap().lines().next().unwrap_or_default().to_string()
}

#[test]
fn stages_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(mrecon(&["gen", "--n", "256", "--degree", "20", "--out", path(d)]), 0);
    let edges = d.join("edges.txt");
    assert!(first_line(&edges).starts_with("# n=256"));
    assert!(d.join("positions_cat1.csv").exists());

    let pruned = d.join("pruned.txt");
    assert_eq!(mrecon(&["prune", "--edges", path(&edges), "--m2", "3", "--out", path(&pruned)]), 0);
    assert_eq!(first_line(&pruned), "# pruned m2=3");

    let pairs = d.join("pairs.txt");
    fs::write(&pairs, "0 17\n3 200\n").unwrap();
    let est = d.join("estimates.csv");
    let code = mrecon(&[
        "twoball", "--edges", path(&edges), "--init", path(&edges), "--scale", "2", "--dim", "2", "--pairs",
        path(&pairs), "--out", path(&est),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&est).unwrap();
    assert!(text.lines().next().unwrap().contains("two-ball"), "{text}");
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3, "{text}");

    let code = mrecon(&[
        "eval", "--positions", path(&d.join("positions_cat0.csv")), "--estimates", path(&est), "--dim", "2",
        "--out", path(d),
    ]);
    assert_eq!(code, 0);
    assert!(d.join("distortion.json").exists());
}

#[test]
fn edp_writes_header() {
    let dir = tempfile::tempdir().unwrap();
    let side = 8u32;
    let mut pairs = Vec::new();
    for x in 0..side {
        for y in 0..side {
            let u = x * side + y;
            for v in [((x + 1) % side) * side + y, x * side + (y + 1) % side] {
                pairs.push((u.min(v), u.max(v)));
            }
        }
    }
    pairs.sort_unstable();
    let mut text = format!("# n={}\n", side * side);
    for (u, v) in pairs {
        text.push_str(&format!("{u} {v}\n"));
    }
    let grid = dir.path().join("grid.txt");
    fs::write(&grid, text).unwrap();
    let out = dir.path().join("edp.txt");
    assert_eq!(mrecon(&["edp", "--edges", path(&grid), "--p", "3", "--h", "3", "--out", path(&out)]), 0);
    assert!(first_line(&out).starts_with("# edp p=3 h=3 constdr="));
    let kept = fs::read_to_string(&out).unwrap().lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(kept, 128);
    assert_eq!(mrecon(&["edp", "--edges", path(&grid), "--adaptive", "--out", path(&out)]), 0);
    assert!(first_line(&out).starts_with("# edp p=3 h=3"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(mrecon(&["run", "--no_such_field", "1", "--out", path(d)]), 2);
    assert_eq!(mrecon(&["run", "--jitter", "1.5", "--out", path(d)]), 2);
    let bad = d.join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(mrecon(&["run", "--config", path(&bad), "--out", path(d)]), 2);

    let failing = d.join("failing");
    let code = mrecon(&["run", "--n", "256", "--degree", "20", "--amoeba_n", "5000", "--out", path(&failing)]);
    assert_eq!(code, 3);
    let summary = fs::read_to_string(failing.join("summary.json")).unwrap();
    assert!(summary.contains("\"stage\""), "{summary}");

    let checked = d.join("checked");
    let code = mrecon(&["run", "--n", "256", "--degree", "20", "--stages", "[\"generate\",\"prune\"]", "--check", "--out", path(&checked)]);
    assert_eq!(code, 0);
}

#[test]
fn sweep_writes_one_directory_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = mrecon(&[
        "sweep", "--n", "256", "--degree", "20", "--stages", "[\"generate\"]", "--axis", "seed=1,2", "--out", path(d),
    ]);
    assert_eq!(code, 0);
    assert!(d.join("run_000/edges.txt").exists());
    assert!(d.join("run_001/edges.txt").exists());
    assert!(d.join("sweep.json").exists());
    assert_ne!(fs::read(d.join("run_000/edges.txt")).unwrap(), fs::read(d.join("run_001/edges.txt")).unwrap());
    assert_eq!(mrecon(&["sweep", "--n", "256", "--out", path(d)]), 2);
}
