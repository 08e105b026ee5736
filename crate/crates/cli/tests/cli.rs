use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use fgrid_core::FormulaGrid;

const FIXTURE: &str = "instrument_id,class,attribute,timestamp,value
EQ1,Equity,TradePrice,2008-02-20T09:30:00Z,10
EQ1,Equity,TradePrice,2008-02-20T09:30:01Z,20
EQ1,Equity,TradePrice,2008-02-20T09:30:02Z,30
EQ1,Equity,TradeSize,2008-02-20T09:30:00Z,1
EQ1,Equity,TradeSize,2008-02-20T09:30:01Z,2
EQ1,Equity,TradeSize,2008-02-20T09:30:02Z,3
";

struct Env {
    dir: tempfile::TempDir,
}

impl Env {
    fn new() -> Env {
        Env { dir: tempfile::tempdir().unwrap() }
    }

    fn store(&self) -> PathBuf {
        self.dir.path().join("store")
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, contents).unwrap();
        p
    }

    /// Local-mode invocation against this environment's store.
    fn local(&self, args: &[&str]) -> Output {
        fgrid(&[&["--data", self.store().to_str().unwrap()], args].concat())
    }

    fn setup(&self) {
        ok(&self.local(&["class", "Equity"]));
        ok(&self.local(&["attr", "Equity", "TradePrice"]));
        ok(&self.local(&["attr", "Equity", "TradeSize", "--kind", "series"]));
        let grid = self.file("vwap.json", &FormulaGrid::vwap().to_json_pretty());
        let out = self.local(&["grid", "put", "Equity", "VWAP", grid.to_str().unwrap()]);
        assert_eq!(stdout(&out), "compiled: 6 cells, result A6\n");
        let csv = self.file("fixture.csv", FIXTURE);
        let out = self.local(&["ingest", csv.to_str().unwrap()]);
        assert_eq!((code(&out), stdout(&out).as_str()), (0, "6 points, 0 rejected\n"));
    }
}

fn fgrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgrid"))
        .args(args)
        .env_remove("FGRID_DATA_DIR")
        .env_remove("FGRID_SERVER")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(o: &Output) {
    assert_eq!(code(o), 0, "stdout: {}\nstderr: {}", stdout(o), stderr(o));
}

#[test]
fn walkthrough_local() {
    let env = Env::new();
    env.setup();

    let out = env.local(&["eval", "EQ1", "VWAP"]);
    assert_eq!((code(&out), stdout(&out).as_str()), (0, "23.333333333333332\n"));

    let out = env.local(&["eval", "EQ1", "TradePrice"]);
    ok(&out);
    let lines: Vec<_> = stdout(&out).lines().map(|l| l.split_whitespace().map(String::from).collect::<Vec<_>>()).collect();
    assert_eq!(lines[0], ["timestamp", "value"]);
    assert_eq!(lines[1..], [
        vec!["2008-02-20T09:30:00.000000Z".to_string(), "10".into()],
        vec!["2008-02-20T09:30:01.000000Z".into(), "20".into()],
        vec!["2008-02-20T09:30:02.000000Z".into(), "30".into()],
    ]);

    let out = env.local(&["eval", "EQ1", "VWAP", "--json"]);
    assert_eq!(stdout(&out), "{\"kind\":\"scalar\",\"value\":23.333333333333332}\n");

    let out = env.local(&["instruments", "--class", "Equity"]);
    assert_eq!(stdout(&out), "EQ1\tEquity\tEQ1\n");
}

#[test]
fn preview_output() {
    let env = Env::new();
    env.setup();
    let out = env.local(&["preview", "EQ1", "VWAP"]);
    ok(&out);
    let text = stdout(&out);
    let rows: Vec<_> = text.lines().collect();
    assert_eq!(rows.len(), 6);
    for (i, row) in rows.iter().enumerate() {
        assert!(row.starts_with(&format!("A{}", i + 1)), "{row}");
        assert_eq!(row.contains("hidden"), i < 5, "{row}");
    }
    assert!(rows[0].ends_with("series (3 points)"));
    assert!(rows[5].ends_with("23.333333333333332"));

    let out = env.local(&["preview", "EQ1", "VWAP", "--unfold", "A3"]);
    ok(&out);
    let text = stdout(&out);
    let table: Vec<_> = text.split("\nA3:\n").nth(1).unwrap().lines().skip(1).collect();
    let values: Vec<f64> = table.iter().map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values, [10.0 * 1.0, 20.0 * 2.0, 30.0 * 3.0]);

    let out = env.local(&["preview", "EQ1", "VWAP", "--unfold", "A6"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("not a series"), "{}", stderr(&out));
    let out = env.local(&["preview", "EQ1", "TradePrice"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn evaluation_errors_exit_3() {
    let env = Env::new();
    env.setup();
    let csv = env.file("sizes.csv", "instrument_id,class,attribute,timestamp,value\nEQ2,Equity,TradePrice,2008-02-20T09:30:00Z,10\n");
    ok(&env.local(&["ingest", csv.to_str().unwrap()]));
    let out = env.local(&["eval", "EQ2", "VWAP"]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).starts_with("#DIV/0 "), "{}", stdout(&out));
    assert_eq!(code(&env.local(&["eval", "EQ2", "VWAP", "--json"])), 3);
    assert_eq!(code(&env.local(&["preview", "EQ2", "VWAP"])), 3);
    let out = env.local(&["eval", "EQ9", "VWAP"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("unknown instrument"));
}

#[test]
fn grid_commands() {
    let env = Env::new();
    env.setup();
    let out = env.local(&["grid", "get", "Equity", "VWAP"]);
    ok(&out);
    assert_eq!(FormulaGrid::from_json(&stdout(&out)).unwrap(), FormulaGrid::vwap());
    assert_eq!(stdout(&out), format!("{}\n", FormulaGrid::vwap().to_json_pretty()));

    let cyclic = env.file("cyclic.json", r#"{"cells":{"A1":{"formula":"=B1"},"B1":{"formula":"=A1+1"}},"result":"A1"}"#);
    let out = env.local(&["grid", "put", "Equity", "VWAP", cyclic.to_str().unwrap()]);
    assert_eq!((code(&out), stderr(&out).as_str()), (2, "#CYCLE: A1,B1\n"));

    let parse = env.file("parse.json", r#"{"cells":{"A1":{"formula":"=1"},"A2":{"formula":"=A1+"}},"result":"A2"}"#);
    let out = env.local(&["grid", "put", "Equity", "VWAP", parse.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).starts_with("A2: #PARSE at 5"), "{}", stderr(&out));

    let junk = env.file("junk.json", "{");
    assert_eq!(code(&env.local(&["grid", "put", "Equity", "VWAP", junk.to_str().unwrap()])), 2);
    assert_eq!(code(&env.local(&["grid", "put", "Equity", "VWAP", "/nonexistent.json"])), 1);
    // The rejected grids left the original in place.
    assert_eq!(stdout(&env.local(&["eval", "EQ1", "VWAP"])), "23.333333333333332\n");
}

#[test]
fn ingest_exit_codes() {
    let env = Env::new();
    env.setup();
    let bad = env.file("bad.csv", &FIXTURE.replace("EQ1", "EQ3").replace("09:30:01Z,20", "notatime,20"));
    let out = env.local(&["ingest", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let text = stdout(&out);
    assert!(text.starts_with("5 points, 1 rejected\nline 3: "), "{text}");
    assert_eq!(code(&env.local(&["ingest", "/nonexistent.csv"])), 1);
    let empty = env.file("empty.csv", "");
    assert_eq!(code(&env.local(&["ingest", empty.to_str().unwrap()])), 2);
}

#[test]
fn store_is_required() {
    let out = fgrid(&["eval", "EQ1", "VWAP"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("--data"));
}

#[test]
fn serve_failures() {
    let env = Env::new();
    let store = env.store();
    let out = fgrid(&["serve", "--data", store.to_str().unwrap(), "--listen", "127.0.0.1:99999"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("invalid listen address"));
    let deep = env.dir.path().join("a/b");
    let out = fgrid(&["serve", "--data", deep.to_str().unwrap(), "--listen", "127.0.0.1:0"]);
    assert_eq!(code(&out), 1);
    assert_eq!(code(&fgrid(&["serve", "--listen", "127.0.0.1:0"])), 1);
}

struct Served {
    child: Child,
    url: String,
}

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn serve(store: &Path) -> Served {
    let mut child = Command::new(env!("CARGO_BIN_EXE_fgrid"))
        .args(["serve", "--data", store.to_str().unwrap(), "--listen", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let url = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected: {line:?}")).to_string();
    Served { child, url }
}

#[test]
fn remote_matches_local() {
    let env = Env::new();
    env.setup();
    let srv = serve(&env.store());
    let remote = |args: &[&str]| fgrid(&[&["--server", srv.url.as_str()], args].concat());

    for args in [
        &["eval", "EQ1", "VWAP", "--json"][..],
        &["eval", "EQ1", "TradePrice", "--json"],
        &["eval", "EQ1", "VWAP"],
        &["eval", "EQ1", "TradePrice"],
        &["preview", "EQ1", "VWAP", "--json"],
        &["preview", "EQ1", "VWAP", "--unfold", "A1", "--json"],
        &["preview", "EQ1", "VWAP", "--unfold", "A1"],
        &["instruments", "--json"],
        &["grid", "get", "Equity", "VWAP"],
    ] {
        let (l, r) = (env.local(args), remote(args));
        ok(&l);
        assert_eq!(code(&r), 0, "{args:?}: {}", stderr(&r));
        assert_eq!(l.stdout, r.stdout, "{args:?}");
    }

    let out = remote(&["preview", "EQ1", "VWAP", "--unfold", "A6"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("not a series"));
    assert_eq!(code(&remote(&["eval", "EQ9", "VWAP"])), 2);
}

#[test]
fn remote_definitions() {
    let env = Env::new();
    let srv = serve(&env.store());
    let remote = |args: &[&str]| fgrid(&[&["--server", srv.url.as_str()], args].concat());
    ok(&remote(&["class", "Equity"]));
    assert_eq!(code(&remote(&["class", "Equity"])), 2);
    ok(&remote(&["attr", "Equity", "TradePrice"]));
    ok(&remote(&["attr", "Equity", "TradeSize"]));
    let grid = env.file("vwap.json", &FormulaGrid::vwap().to_json_pretty());
    let out = remote(&["grid", "put", "Equity", "VWAP", grid.to_str().unwrap()]);
    assert_eq!(stdout(&out), "compiled: 6 cells, result A6\n");
    // A second put replaces.
    ok(&remote(&["grid", "put", "Equity", "VWAP", grid.to_str().unwrap()]));
    let cyclic = env.file("cyclic.json", r#"{"cells":{"A1":{"formula":"=B1"},"B1":{"formula":"=A1+1"}},"result":"A1"}"#);
    let out = remote(&["grid", "put", "Equity", "VWAP", cyclic.to_str().unwrap()]);
    assert_eq!((code(&out), stderr(&out).as_str()), (2, "#CYCLE: A1,B1\n"));
    let csv = env.file("fixture.csv", FIXTURE);
    assert_eq!(stdout(&remote(&["ingest", csv.to_str().unwrap()])), "6 points, 0 rejected\n");
    assert_eq!(stdout(&remote(&["eval", "EQ1", "VWAP"])), "23.333333333333332\n");
    let out = fgrid(&["--server", "http://127.0.0.1:1", "eval", "EQ1", "VWAP"]);
    assert_eq!(code(&out), 1);
}
