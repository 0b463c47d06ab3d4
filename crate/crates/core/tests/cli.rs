use std::process::{Command, Output};

fn metaplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metaplan")).args(args).output().unwrap()
}

#[test]
fn missing_maze_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let r = metaplan(&["solve", "--maze", "no_such_maze.txt", "--iters", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("no_such_maze.txt"));
}

#[test]
fn malformed_maze_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let maze = dir.path().join("bad.txt");
    std::fs::write(&maze, "S.x\n..G\n").unwrap();
    let r = metaplan(&["solve", "--maze", maze.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn single_lambda_pareto_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = metaplan(&["pareto", "--four-rooms", "--lambdas", "0.1", "--iters", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(metaplan(&["--help"]).status.code(), Some(0));
    assert_eq!(metaplan(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(metaplan(&["solve"]).status.code(), Some(1));
}

#[test]
fn solve_writes_outputs_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let r = metaplan(&["solve", "--four-rooms", "--iters", "3", "--horizon", "20", "--seed", "4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["kl.csv", "costs.csv", "heatmap.svg", "run.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let kl = std::fs::read_to_string(dir.path().join("kl.csv")).unwrap();
    assert!(kl.starts_with("# seed=4 config_hash="));
}

#[test]
fn regress_prints_fit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    std::fs::write(&csv, "# seed=0\nx,y\n1,3\n2,5\n3,7\n").unwrap();
    let r = metaplan(&["regress", "--x", "x", "--y", "y", "--csv", csv.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    let text = String::from_utf8(r.stdout).unwrap();
    let row: Vec<f64> = text.lines().last().unwrap().split(',').filter_map(|v| v.parse().ok()).collect();
    assert_eq!(row, vec![3.0, 2.0, 1.0, 1.0], "{text}");
}
