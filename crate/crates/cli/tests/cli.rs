use std::path::Path;
use std::process::{Command, Output};

const TINY: &[&str] = &[
    "--set", "n_users=20",
    "--set", "n_items=100",
    "--set", "T=10",
    "--set", "t_init=2",
    "--replications", "3",
];

fn symbiosis(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symbiosis"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn with_tiny<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = extra.to_vec();
    args.extend_from_slice(TINY);
    args
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn simulate_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let args = with_tiny(&["simulate", "--seed", "9", "--set", "designs=data_diverted"]);
    let a = symbiosis(&args, &dir.path().join("a"));
    let b = symbiosis(&args, &dir.path().join("b"));
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(b.status.success());
    for name in ["replications.csv", "summary.csv"] {
        assert_eq!(read(&dir.path().join("a").join(name)), read(&dir.path().join("b").join(name)));
    }

    let csv = read(&dir.path().join("a/replications.csv"));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "replication,design,algo_t,algo_c,p,gamma_pref,take_up_t,take_up_c,tte_hat"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert_eq!(row[1], "data_diverted");
        assert_eq!((row[2], row[3]), ("ItemCF", "Random"));
        let t: f64 = row[6].parse().unwrap();
        let c: f64 = row[7].parse().unwrap();
        let tte: f64 = row[8].parse().unwrap();
        assert_eq!(format!("{:.16e}", t), row[6]);
        assert_eq!(tte, t - c);
    }

    // the metadata file alone reproduces the run
    let meta = dir.path().join("a/metadata.txt");
    let text = read(&meta);
    assert!(text.starts_with("# symbiosis "));
    assert!(text.contains("seed = 9\n") && text.contains("# command = simulate"));
    let again = symbiosis(&["simulate", "--config", meta.to_str().unwrap()], &dir.path().join("c"));
    assert!(again.status.success());
    assert_eq!(read(&dir.path().join("c/replications.csv")), csv);
}

#[test]
fn verify_passes_and_fails_on_zero_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let ok = symbiosis(&["verify"], &dir.path().join("ok"));
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let header = read(&dir.path().join("ok/verify.csv"));
    assert!(header.starts_with("instance,design,closed_form,brute_force,abs_diff\n"));
    assert_eq!(header.lines().count(), 401);

    let strict = symbiosis(&["verify", "--set", "verify_tolerance=0"], &dir.path().join("strict"));
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn configuration_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let unknown = symbiosis(&["verify", "--set", "gama_pref=10"], &out);
    assert!(!unknown.status.success());
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("gama_pref"));

    let bad_p = symbiosis(&["simulate", "--set", "p=1.5"], &out);
    assert!(!bad_p.status.success());
    let bad_items = symbiosis(&["simulate", "--set", "n_items=1001"], &out);
    assert!(!bad_items.status.success());

    let config = dir.path().join("bad.conf");
    std::fs::write(&config, "seed = 1\nnot a pair\n").unwrap();
    let malformed = symbiosis(&["verify", "--config", config.to_str().unwrap()], &out);
    assert!(!malformed.status.success());
    assert!(!out.join("metadata.txt").exists());
}

#[test]
fn theory_reads_graph_files() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("graph.txt");
    let clusters = dir.path().join("clusters.txt");
    // complete graph on four units without self loops
    let mut edges = String::new();
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                edges.push_str(&format!("{i} {j} 1\n"));
            }
        }
    }
    std::fs::write(&graph, edges).unwrap();
    std::fs::write(&clusters, "0 0\n1 0\n2 1\n3 1\n").unwrap();
    let g = format!("graph={}", graph.display());
    let c = format!("clusters={}", clusters.display());
    let out = dir.path().join("out");
    let run = symbiosis(&["theory", "--set", &g, "--set", &c, "--set", "gamma_00=1"], &out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let table = read(&out.join("theory.csv"));
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "design,closed_form,brute_force,abs_diff");
    let naive: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(naive[0], "naive");
    assert!((naive[1].parse::<f64>().unwrap() - 1.5).abs() < 1e-12);
    assert!(naive[3].parse::<f64>().unwrap() <= 1e-9);

    let quantities = read(&out.join("theory_quantities.csv"));
    let cut = quantities.lines().find(|l| l.starts_with("cluster_cut_quality")).unwrap();
    let cut: f64 = cut.split(',').nth(1).unwrap().parse().unwrap();
    assert!((cut - 8.0 / 12.0).abs() < 1e-12);

    let missing = symbiosis(&["theory", "--set", "graph=/nonexistent/graph.txt"], &dir.path().join("missing"));
    assert!(!missing.status.success());
    assert!(!dir.path().join("missing/theory.csv").exists());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let run = Command::new(env!("CARGO_BIN_EXE_symbiosis"))
        .args(["verify", "--set", "verify_instances=3"])
        .env(symbiosis_cli::OUT_DIR_ENV, &target)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(target.join("verify.csv").exists());
}

#[test]
fn counterfactual_lists_every_recommender() {
    let dir = tempfile::tempdir().unwrap();
    let run = symbiosis(&with_tiny(&["counterfactual"]), dir.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = read(&dir.path().join("counterfactual.csv"));
    let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["Oracle", "Random", "ItemCF", "UserCF"]);
}
