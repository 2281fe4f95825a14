use std::path::Path;
use std::process::{Command, Output};

use gaussgrid::io::{parse_points_csv, read_npy};

fn gaussgrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussgrid")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TWO_POINTS: &str = "0,0.5,0.5,0.5\n1,0.0,0.1,0.2\n";

#[test]
fn water_xyz_grid() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("water.xyz");
    std::fs::write(&input, "3\nwater\nO 0.000 0.000 0.117\nH 0.000 0.757 -0.467\nH 0.000 -0.757 -0.467\n").unwrap();
    let out = dir.path().join("g.npy");
    let stats = dir.path().join("stats.json");
    let o = gaussgrid(&[
        "grid",
        "--input",
        path(&input),
        "--grid-size",
        "32",
        "--variance",
        "0.05",
        "--channels",
        "auto",
        "--output",
        path(&out),
        "--stats",
        path(&stats),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_npy(&out).unwrap().shape, vec![2, 32, 32, 32]);
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert!((s["sum"].as_f64().unwrap() - 3.0).abs() < 1e-3, "{s}");
    let per = s["per_channel_sums"].as_array().unwrap();
    // H is channel 0, O channel 1
    assert!((per[0].as_f64().unwrap() - 2.0).abs() < 1e-3);
    assert!((per[1].as_f64().unwrap() - 1.0).abs() < 1e-3);
    for key in ["nonzero_voxels", "erf_evals", "elapsed_ms"] {
        assert!(s[key].is_number(), "{key}");
    }
}

#[test]
fn two_points_grid_and_reverse() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("points.csv");
    std::fs::write(&input, TWO_POINTS).unwrap();
    let out = dir.path().join("g.npy");
    let o = gaussgrid(&[
        "grid",
        "--input",
        path(&input),
        "--grid-size",
        "32",
        "--variance",
        "0.05",
        "--channels",
        "2",
        "--box-extents",
        "1,1,1",
        "--output",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_npy(&out).unwrap().shape, vec![2, 32, 32, 32]);

    let rec = dir.path().join("rec.csv");
    let o = gaussgrid(&["reverse", "--input", path(&out), "--variance", "0.05", "--output", path(&rec)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let got = parse_points_csv(&std::fs::read_to_string(&rec).unwrap()).unwrap();
    let want = parse_points_csv(TWO_POINTS).unwrap();
    assert_eq!(got.len(), 2);
    let voxel = 1.0 / 32.0;
    for w in &want.particles {
        let p = got.particles.iter().find(|p| p.channel == w.channel).expect("channel recovered");
        let d = (0..3).map(|a| (p.position[a] - w.position[a]).powi(2)).sum::<f64>().sqrt();
        assert!(d < 0.5 * voxel, "{w:?} -> {p:?}");
    }
}

#[test]
fn periodic_grid() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("p.csv");
    std::fs::write(&input, "channel,x,y,z\n0,0.0,0.0,0.0\n0,3.9,2.0,1.0\n").unwrap();
    let out = dir.path().join("g.npy");
    let stats = dir.path().join("s.json");
    let o = gaussgrid(&[
        "grid",
        "--input",
        path(&input),
        "--grid-size",
        "16,16,8",
        "--variance",
        "0.3",
        "--periodic",
        "4,4,2",
        "--output",
        path(&out),
        "--stats",
        path(&stats),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_npy(&out).unwrap().shape, vec![1, 16, 16, 8]);
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert!((s["sum"].as_f64().unwrap() - 2.0).abs() < 1e-3);
}

fn assert_one_line_failure(o: &Output) {
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("p.csv");
    std::fs::write(&input, TWO_POINTS).unwrap();
    let out = dir.path().join("g.npy");
    let (i, o) = (path(&input), path(&out));

    assert_one_line_failure(&gaussgrid(&["grid", "--bogus"]));
    assert_one_line_failure(&gaussgrid(&[
        "grid",
        "--input",
        i,
        "--grid-size",
        "8",
        "--variance",
        "0.1",
        "--periodic",
        "1,1,1",
        "--padding-sigmas",
        "2",
        "--output",
        o,
    ]));
    assert_one_line_failure(&gaussgrid(&[
        "grid",
        "--input",
        "/no/such/file.csv",
        "--grid-size",
        "8",
        "--variance",
        "0.1",
        "--output",
        o,
    ]));
    std::fs::write(&input, "0,1,2\n").unwrap();
    let r = gaussgrid(&["grid", "--input", i, "--grid-size", "8", "--variance", "0.1", "--output", o]);
    assert_one_line_failure(&r);
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 1"));
    std::fs::write(&input, TWO_POINTS).unwrap();
    assert_one_line_failure(&gaussgrid(&[
        "grid",
        "--input",
        i,
        "--grid-size",
        "8",
        "--variance",
        "0.1",
        "--channels",
        "1",
        "--output",
        o,
    ]));
    assert_one_line_failure(&gaussgrid(&["reverse", "--input", i, "--variance", "0.1", "--output", o]));
}

#[test]
fn bench_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = gaussgrid(&[
        "bench",
        "--sizes",
        "16",
        "--variances",
        "0.5",
        "--repeats",
        "1",
        "--corpus",
        "4",
        "--jobs",
        "2",
        "--output",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8_lossy(&o.stdout);
    assert_eq!(table.lines().count(), 3);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["cells"].as_array().unwrap().len(), 2);
    assert_eq!(r["molecules"], 4);
}
