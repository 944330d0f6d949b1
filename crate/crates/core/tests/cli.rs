use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_butcher-kit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn count_to_ten() {
    let o = run(&["count", "--order", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let counts: Vec<usize> = text
        .lines()
        .filter_map(|l| l.strip_prefix("order ").and_then(|r| r.split(": ").nth(1)))
        .map(|n| n.parse().unwrap())
        .collect();
    assert_eq!(counts, [1, 1, 2, 4, 9, 20, 48, 115, 286, 719]);
    assert!(text.ends_with("total: 1205\n"));
}

#[test]
fn trees_order_four_listing() {
    let o = run(&["trees", "--order", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "[]\n[[]]\n[[],[]]\n[[[]]]\n[[],[],[]]\n[[],[[]]]\n[[[],[]]]\n[[[[]]]]\n"
    );
}

#[test]
fn rk4_conditions_match_golden() {
    let o = run(&[
        "conditions",
        "--order",
        "4",
        "--stages",
        "4",
        "--explicit",
        "--subst-c",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let golden = std::fs::read_to_string(fixture("golden/rk4_conditions.txt")).unwrap();
    assert_eq!(stdout(&o), golden);
}

#[test]
fn conditions_json_is_tagged() {
    let o = run(&[
        "conditions",
        "--order",
        "3",
        "--stages",
        "2",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "butcher-kit/1");
    assert_eq!(v["conditions"].as_array().unwrap().len(), 4);
    assert_eq!(v["conditions"][3]["tree"], "[[[]]]");
    assert_eq!(v["conditions"][3]["rhs"], "1/6");
}

#[test]
fn verify_exit_codes() {
    let rk4 = fixture("tableaux/rk4.json");
    let o = run(&["verify", &rk4, "--max-order", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("achieved order 4"));

    let o = run(&["verify", &rk4, "--max-order", "5"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("achieved order 4 (requested 5)"), "{text}");
    assert!(text.contains("1/120"));

    let o = run(&["verify", &rk4, "--max-order", "5", "--require", "4"]);
    assert_eq!(o.status.code(), Some(0));

    let o = run(&[
        "verify",
        &fixture("tableaux/butcher6.json"),
        "--max-order",
        "5",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["achieved_order"], 5);

    let o = run(&[
        "verify",
        &fixture("tableaux/midpoint.json"),
        "--max-order",
        "3",
        "--float",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("achieved order 2"));
}

#[test]
fn oracle_reports_agreement() {
    let o = run(&[
        "oracle",
        &fixture("fields/rot2d.json"),
        "--x0",
        "1,0",
        "--p",
        "5",
        "--tableau",
        &fixture("tableaux/rk4.json"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.contains("step and flow first differ at degree 5"),
        "{text}"
    );

    let o = run(&[
        "oracle",
        &fixture("fields/linear.json"),
        "--x0",
        "-1/2",
        "--p",
        "3",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "butcher-kit/1");
}

#[test]
fn bad_input_exits_two() {
    let dir = std::env::temp_dir().join(format!("butcher-kit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p.to_string_lossy().into_owned()
    };
    let bad_tableaux = [
        write(
            "dup.json",
            r#"{"stages": 1, "A": [["0"]], "b": ["1"], "b": ["1"]}"#,
        ),
        write("dim.json", r#"{"stages": 2, "A": [["0"]], "b": ["1"]}"#),
        write("rat.json", r#"{"stages": 1, "A": [["1/0"]], "b": ["1"]}"#),
        write(
            "unknown.json",
            r#"{"stages": 1, "A": [["0"]], "b": ["1"], "d": 3}"#,
        ),
        write("broken.json", "{"),
    ];
    for path in &bad_tableaux {
        let o = run(&["verify", path, "--max-order", "2"]);
        assert_eq!(o.status.code(), Some(2), "{path}");
        assert!(!o.stderr.is_empty());
    }
    let field = write("field.json", r#"{"dim": 2, "components": ["x1", "x3"]}"#);
    assert_eq!(
        run(&["oracle", &field, "--x0", "1,0", "--p", "2"])
            .status
            .code(),
        Some(2)
    );
    let rot = fixture("fields/rot2d.json");
    assert_eq!(
        run(&["oracle", &rot, "--x0", "1", "--p", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["oracle", &rot, "--x0", "1,0", "--p", "7"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["conditions", "--order", "3"]).status.code(), Some(2));
    assert_eq!(run(&["trees", "--order", "x"]).status.code(), Some(2));
    assert_eq!(
        run(&["verify", &rot, "--max-order", "2"]).status.code(),
        Some(2)
    );
    std::fs::remove_dir_all(&dir).unwrap();
}
