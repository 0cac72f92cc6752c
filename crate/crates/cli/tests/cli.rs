use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use uic_welfare::graph::LoadOptions;
use uic_welfare::oracle::{optimal_allocation, OracleLimits};
use uic_welfare::utility::CatalogConfig;
use uic_welfare::{fmt_f64, Allocation, Graph};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn uicw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uicw")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn welfare_column(csv: &str, row: usize) -> f64 {
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "welfare_mean").unwrap();
    csv.lines().nth(row + 1).unwrap().split(',').nth(col).unwrap().parse().unwrap()
}

#[test]
fn seqgrd_on_counterexample_gives_eight() {
    let g = fixture("two_node.txt");
    let c = fixture("fig3a.toml");
    let csv = stdout(&uicw(&["compare", "--graph", &g, "--catalog", &c, "--algos", "seqgrd", "--samples", "200"]));
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("seqgrd,"));
    assert!(row.ends_with(&format!("{},{}", fmt_f64(8.0), fmt_f64(0.0))), "{row}");
}

#[test]
fn missing_graph_exits_two() {
    let out = uicw(&["compare", "--graph", "/nonexistent/g.txt", "--catalog", &fixture("fig3a.toml")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("graph not found"));
}

#[test]
fn compare_three_algorithms_share_seed() {
    let args = |seed: &str| {
        vec![
            "compare".to_string(),
            "--graph".into(),
            fixture("compare10.txt"),
            "--catalog".into(),
            fixture("two_item.toml"),
            "--algos".into(),
            "seqgrd,round-robin,snake".into(),
            "--samples".into(),
            "300".into(),
            "--seed".into(),
            seed.into(),
        ]
    };
    let run = |seed: &str| {
        let a = args(seed);
        stdout(&uicw(&a.iter().map(String::as_str).collect::<Vec<_>>()))
    };
    let csv = run("5");
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], "algorithm,adopters_i,adopters_j,welfare_mean,welfare_stderr");
    let names: Vec<&str> = rows[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(names, ["seqgrd", "round-robin", "snake"]);
    assert_eq!(run("5"), csv);
    assert_ne!(run("6"), csv);
}

#[test]
fn oracle_counterexample_and_empty() {
    let g = fixture("two_node.txt");
    let c = fixture("fig3a.toml");
    let a = fixture("theorem1_allocation.txt");
    let csv = stdout(&uicw(&["oracle", "--graph", &g, "--catalog", &c, "--allocation", &a]));
    assert_eq!(welfare_column(&csv, 0), 8.0);
    let csv = stdout(&uicw(&["oracle", "--graph", &g, "--catalog", &c]));
    assert_eq!(welfare_column(&csv, 0), 0.0);
}

#[test]
fn oracle_optimal_matches_library() {
    let g = fixture("five_node.txt");
    let c = fixture("two_item.toml");
    let dir = tempfile::tempdir().unwrap();
    let alloc_path = dir.path().join("opt.txt");
    let csv = stdout(&uicw(&[
        "oracle",
        "--graph",
        &g,
        "--catalog",
        &c,
        "--optimal",
        "--allocation-out",
        alloc_path.to_str().unwrap(),
    ]));
    let graph = Graph::load_edge_list_with_header(fs::read(&g).unwrap().as_slice(), LoadOptions::default()).unwrap();
    let cfg = CatalogConfig::load(c.as_ref()).unwrap();
    let (alloc, w) = optimal_allocation(&graph, &cfg.catalog, &cfg.budgets, &Allocation::new(), &OracleLimits::default()).unwrap();
    assert_eq!(welfare_column(&csv, 0).to_bits(), w.to_bits());
    assert_eq!(fs::read_to_string(&alloc_path).unwrap(), alloc.to_text(&cfg.catalog));
}

#[test]
fn oracle_limit_exits_three() {
    let out = uicw(&[
        "oracle",
        "--graph",
        &fixture("compare10.txt"),
        "--catalog",
        &fixture("two_item.toml"),
        "--max-edges",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn convert_genres() {
    let text = stdout(&uicw(&["convert-utilities", "--probs", &fixture("genres.txt")]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    let want = [("indie", 7.0), ("rock", 6.8), ("industrial", 5.0), ("progressive_metal", 4.7)];
    for (line, (name, u)) in lines.iter().zip(want) {
        let (k, v) = line.split_once(" = ").unwrap();
        assert_eq!(k, format!("\"{name}\""));
        assert!((v.parse::<f64>().unwrap() - u).abs() < 0.05, "{line}");
    }
}

#[test]
fn validate_shipped_configs() {
    for name in ["fig3a", "table1", "c1", "c2", "c3", "c4", "table4", "table5", "two_item", "superior"] {
        let out = uicw(&["validate-config", "--catalog", &fixture(&format!("{name}.toml"))]);
        assert!(stdout(&out).starts_with("valuation: ok"), "{name}");
    }
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[[items]]\nid = \"a\"\nprice = 1.0\n\n[valuation]\n\"a\" = -1.0\n").unwrap();
    let out = uicw(&["validate-config", "--catalog", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn allocate_writes_file_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("a.txt");
    let out = uicw(&[
        "allocate",
        "--graph",
        &fixture("blocking.txt"),
        "--catalog",
        &fixture("table4.toml"),
        "--algo",
        "seqgrd",
        "--samples",
        "100",
        "--trace",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&out_path).unwrap(), "0 i\n10 k\n12 j\n");
    let trace = String::from_utf8(out.stderr).unwrap();
    assert!(trace.lines().any(|l| l.starts_with("algo=seqgrd phase=tentative item=1") && l.ends_with("decision=defer")));
}

#[test]
fn budgets_flag_and_errors() {
    let g = fixture("path_with_spur.txt");
    let c = fixture("two_item.toml");
    let a = stdout(&uicw(&["allocate", "--graph", &g, "--catalog", &c, "--algo", "maxgrd", "--budgets", "j=2"]));
    assert_eq!(a.lines().count(), 2);
    assert!(a.lines().all(|l| l.ends_with(" j")));
    let out = uicw(&["allocate", "--graph", &g, "--catalog", &c, "--algo", "maxgrd", "--budgets", "q=2"]);
    assert_eq!(out.status.code(), Some(1));
    let out = uicw(&["allocate", "--graph", &g, "--catalog", &c, "--algo", "imm"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn remap_sparse_labels() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("g.txt");
    fs::write(&input, "100 7 0.5\n7 42 0.25\n").unwrap();
    let labels = dir.path().join("labels.txt");
    let text = stdout(&uicw(&["remap", "--graph", input.to_str().unwrap(), "--labels", labels.to_str().unwrap()]));
    assert_eq!(text, "# nodes 3\n0 1 0.5\n1 2 0.25\n");
    assert_eq!(fs::read_to_string(labels).unwrap(), "100\n7\n42\n");
}

#[test]
fn weighted_cascade_required_without_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(&g, "0 1\n2 1\n").unwrap();
    let c = fixture("two_item.toml");
    let out = uicw(&["allocate", "--graph", g.to_str().unwrap(), "--catalog", &c, "--algo", "seqgrd"]);
    assert_eq!(out.status.code(), Some(1));
    let out = uicw(&[
        "estimate",
        "--graph",
        g.to_str().unwrap(),
        "--catalog",
        &c,
        "--weighted-cascade",
        "--undirected",
        "--allocation",
        &fixture("theorem1_allocation.txt"),
    ]);
    // `i1` is not an item of this catalog
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rr_stats_histogram() {
    let g = fixture("path_with_spur.txt");
    let csv = stdout(&uicw(&["rr-stats", "--graph", &g, "--count", "400"]));
    // roots u, v, x reach sizes 1, 2, 1 and w reaches all four nodes
    let rows: Vec<(usize, usize)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.iter().map(|r| r.1).sum::<usize>(), 400);
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), [1, 2, 4]);
    let marginal = stdout(&uicw(&["rr-stats", "--graph", &g, "--count", "400", "--fixed", "0"]));
    assert!(marginal.lines().nth(1).unwrap().starts_with("0,"));
}
