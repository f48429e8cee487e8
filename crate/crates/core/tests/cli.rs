use k3n_lattice::cli::{run_with_io, EXIT_DOMAIN, EXIT_OK, EXIT_PARSE, EXIT_VERIFY_FAILED};
use k3n_lattice::mbm::CurveClassJson;
use k3n_lattice::OrbitInvariant;
use serde_json::Value;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_stdin(args: &[&str], stdin: &str) -> Output {
    let mut argv = vec!["k3n"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with_io(argv, &mut stdin.as_bytes(), &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn run(args: &[&str]) -> Output {
    run_stdin(args, "")
}

fn json(out: &Output) -> Value {
    assert_eq!(out.code, EXIT_OK, "stderr: {}", out.stderr);
    serde_json::from_str(out.stdout.trim()).unwrap()
}

fn e23() -> String {
    let mut c = vec![0; 23];
    c[22] = 1;
    serde_json::to_string(&c).unwrap()
}

#[test]
fn invariants_of_e() {
    let out = run(&["invariants", "--n", "2", "--vec", &e23()]);
    assert_eq!(json(&out), serde_json::json!({"square": -2, "div": 2, "delta": [1]}));
}

#[test]
fn invariants_round_trip() {
    let out = run(&["invariants", "--n", "3", "--vec", r#"{"a":2,"b":1,"m":5}"#]);
    let inv: OrbitInvariant = serde_json::from_str(out.stdout.trim()).unwrap();
    assert_eq!(serde_json::to_value(&inv).unwrap(), json(&out));
}

#[test]
fn vector_forms_agree() {
    let full = run(&["square", "--n", "2", "--vec", &e23()]);
    let compact = run(&["square", "--n", "2", "--vec", r#"{"a":0,"b":1,"m":0}"#]);
    let named = run(&["square", "--n", "2", "--vec", &format!(r#"{{"lattice":"lambda_2","coords":{}}}"#, e23())]);
    let stdin = run_stdin(&["square", "--n", "2"], &e23());
    for out in [&compact, &named, &stdin] {
        assert_eq!(json(out), json(&full));
    }
    assert_eq!(json(&full)["square"], -2);
}

#[test]
fn pair_and_div() {
    let out = run(&["pair", "--n", "2", "--x", r#"{"a":1,"b":0,"m":0}"#, "--y", r#"{"a":1,"b":0,"m":3}"#]);
    assert_eq!(json(&out).as_object().unwrap().values().next().unwrap(), 3);
    let out = run(&["div", "--n", "4", "--vec", r#"{"a":3,"b":1,"m":0}"#]);
    assert_eq!(json(&out)["div"], 3);
}

#[test]
fn conjugate_output_feeds_back() {
    let out = run(&["conjugate", "--n", "2", "--inv", r#"{"square":-18,"div":2,"delta":[1]}"#]);
    let v = json(&out);
    assert_eq!((v["a"].clone(), v["b"].clone(), v["m"].clone()), (2.into(), (-1).into(), (-2).into()));
    let again = run(&["invariants", "--n", "2", "--vec", &v["vector"].to_string()]);
    assert_eq!(json(&again), serde_json::json!({"square": -18, "div": 2, "delta": [1]}));
}

#[test]
fn orbit_equality_up_to_sign() {
    let out = run(&["orbit-eq", "--n", "3", "--z1", r#"{"a":0,"b":1,"m":0}"#, "--z2", r#"{"a":0,"b":-1,"m":0}"#]);
    assert_eq!(json(&out), serde_json::json!({"stable": false, "monodromy": true}));
}

#[test]
fn table_text_and_json() {
    let text = run(&["table", "--n", "3"]);
    assert_eq!(text.code, EXIT_OK);
    assert!(text.stdout.contains("-9/4"));
    assert!(!text.stdout.contains("-2.25"));
    let rows = json(&run(&["--json", "table", "--n", "2"]));
    let squares: Vec<&str> = rows.as_array().unwrap().iter().map(|r| r["curve_square"].as_str().unwrap()).collect();
    assert_eq!(squares, ["-5/2", "-2", "-1/2"]);
    for key in ["tag", "curve_square", "denominator", "primitive_square", "primitive_div", "locus"] {
        assert!(rows[0].get(key).is_some(), "{key}");
    }
}

#[test]
fn pencil_and_classify() {
    let out = json(&run(&["pencil", "--n", "3", "--g", "1", "--k", "3", "--fiber-square", "0"]));
    assert_eq!(out["curve_square"], "-9/4");
    let class: CurveClassJson = serde_json::from_value(out.clone()).unwrap();
    let class = serde_json::to_string(&class).unwrap();
    let classified = json(&run(&["classify", "--n", "3", "--class", &class]));
    assert_eq!(classified["type"]["tag"], "b");

    let d = json(&run(&["classify", "--n", "3", "--class", r#"{"primitive_part":{"a":0,"b":1,"m":0},"denominator":4}"#]));
    assert_eq!(d["type"]["tag"], "d");
    assert_eq!(d["curve_square"], "-1/4");
}

#[test]
fn walls_and_chambers() {
    let basis = r#"[{"a":1,"b":0,"m":1},{"a":0,"b":1,"m":0}]"#;
    let walls = json(&run(&["--json", "walls", "--n", "2", "--basis", basis, "--bound", "3"]));
    assert_eq!(walls["bound"], 3);
    assert_eq!(walls["basis"].as_array().unwrap().len(), 2);
    let tags: Vec<&str> = walls["walls"].as_array().unwrap().iter().map(|w| w["tag"].as_str().unwrap()).collect();
    assert!(tags.contains(&"c"));

    let h = |m: i64| format!(r#"{{"a":1,"b":0,"m":{m}}}"#);
    let on_wall = run(&["chamber", "--n", "2", "--basis", basis, "--bound", "3", "--h1", &h(1), "--h2", &h(2)]);
    assert_eq!(on_wall.code, EXIT_DOMAIN);
    assert!(on_wall.stderr.contains("ON_WALL"));
}

#[test]
fn verify_reports() {
    let out = json(&run(&["--json", "verify", "--k", "3", "--bound", "3"]));
    assert_eq!(out["passed"], out["checked"]);
    assert_eq!(out["sublattice"], "U+U+<e>");
    assert!(out["failures"].as_array().unwrap().is_empty());
    let text = run(&["verify", "--k", "2", "--bound", "3", "--workers", "2"]);
    assert_eq!(text.code, EXIT_OK);
    assert!(text.stdout.contains("failures"));
    // failures above k = 5 are data
    let k6 = run(&["--json", "verify", "--k", "6", "--bound", "4"]);
    assert_eq!(k6.code, EXIT_OK);
    assert!(!json(&k6)["failures"].as_array().unwrap().is_empty());
    assert_ne!(EXIT_VERIFY_FAILED, EXIT_OK);
}

#[test]
fn k6_reports_one_orbit() {
    let out = json(&run(&["--json", "k6", "--bound", "4"]));
    assert_eq!(out["failing"], serde_json::json!([{"square": -2, "div": 2, "delta": [5]}]));
    assert_eq!(out["max_witness_det"], -80);
}

#[test]
fn user_lattice_file() {
    let dir = std::env::temp_dir().join(format!("k3n-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("a2.json");
    std::fs::write(&path, r#"{"name":"a2","gram":[[-2,1],[1,-2]]}"#).unwrap();
    let path = path.to_str().unwrap();
    let out = json(&run(&["--lattice", path, "square", "--vec", "[1,1]"]));
    assert_eq!(out["square"], -2);
    let not_eligible = run(&["--lattice", path, "orbit-eq", "--z1", "[1,0]", "--z2", "[0,1]"]);
    assert_eq!(not_eligible.code, EXIT_DOMAIN);
    assert!(not_eligible.stderr.contains("NOT_ELIGIBLE"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    let cases: [(&[&str], i32, &str); 8] = [
        (&["bogus"], EXIT_PARSE, "unrecognized"),
        (&["table", "--n", "4"], EXIT_DOMAIN, "UNSUPPORTED_N"),
        (&["div", "--n", "2", "--vec", "[1,2]"], EXIT_DOMAIN, "RANK_MISMATCH"),
        (&["square", "--n", "2", "--vec", "not json"], EXIT_PARSE, "PARSE_ERROR"),
        (&["verify", "--k", "3", "--bound", "2"], EXIT_PARSE, "PARSE_ERROR"),
        (&["invariants", "--n", "2", "--vec", r#"{"a":0,"b":3,"m":0}"#], EXIT_DOMAIN, "NOT_PRIMITIVE"),
        (&["conjugate", "--n", "2", "--inv", r#"{"square":-3,"div":1,"delta":[0]}"#], EXIT_DOMAIN, "NOT_REALIZABLE"),
        (&["square", "--n", "1", "--vec", "[1]"], EXIT_DOMAIN, "INVALID_N"),
    ];
    for (args, code, needle) in cases {
        let out = run(args);
        assert_eq!(out.code, code, "{args:?}: {}", out.stderr);
        assert!(out.stderr.contains(needle), "{args:?}: {}", out.stderr);
    }
    assert_eq!(run(&["--help"]).code, EXIT_OK);
}
