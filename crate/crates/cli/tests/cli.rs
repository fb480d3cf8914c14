//! Shell behavior: golden script stability, exit codes, metas, and the
//! database directory lifecycle.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rxo"))
}

fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../")).join(rel)
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rxo-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn golden_script_output_is_stable() {
    let out = bin()
        .arg("--script")
        .arg(repo_file("scripts/trade.rxo"))
        .output()
        .expect("run rxo");
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let expected = std::fs::read_to_string(repo_file("scripts/trade.golden")).unwrap();
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        expected,
        "golden output drifted; regenerate deliberately if the change is intended"
    );
    // determinism: a second run is byte-identical
    let again = bin()
        .arg("--script")
        .arg(repo_file("scripts/trade.rxo"))
        .output()
        .unwrap();
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn empty_script_succeeds_quietly() {
    let dir = temp_dir("empty");
    std::fs::create_dir_all(&dir).unwrap();
    let script = dir.join("empty.rxo");
    std::fs::write(&script, "// nothing\n").unwrap();
    let out = bin().arg("--script").arg(&script).output().unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn errors_set_exit_code_and_report_command_index() {
    let out = bin()
        .arg("--exec")
        .arg("CREATE R (i: INTEGER); GET missing; GET R;")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("error at command 2"), "got: {text}");
    // without --keep-going the third command never ran
    assert!(!text.contains("i\n-"), "got: {text}");

    let out = bin()
        .arg("--keep-going")
        .arg("--exec")
        .arg("CREATE R (i: INTEGER); GET missing; GET R;")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("error at command 2"));
    assert!(text.contains("i\n-"), "third command ran: {text}");
}

#[test]
fn tabs_mode_and_echo() {
    let out = bin()
        .args(["--tabs", "--echo", "--exec"])
        .arg("CREATE R (i: INTEGER, s: STRING); INSERT R VALUES (1, NULL); GET R;")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains(">> GET R;"), "echo on: {text}");
    assert!(text.contains("i\ts\n1\t\\N\n"), "tab mode: {text}");
}

#[test]
fn repl_metas_and_quit() {
    let mut child = bin()
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let script = "CLASS BANKS ( Name STRING );\n\
                  CLASS CONTRACTORS ( Name STRING, Bank BANKS, ID STRING ) KEY (ID);\n\
                  \\classes\n\
                  \\relvars\n\
                  \\schema real_R_CONTRACTORS\n\
                  \\save\n\
                  \\oops\n\
                  \\quit\n";
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(script.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("BANKS\nCONTRACTORS"),
        "classes listed: {text}"
    );
    assert!(
        text.contains("R_BANKS  (virtual)"),
        "relvars listed: {text}"
    );
    assert!(
        text.contains("real_R_BANKS  (real)"),
        "relvars listed: {text}"
    );
    assert!(text.contains("ID: STRING"), "schema shown: {text}");
    assert!(text.contains("KEY(ID)"), "key shown: {text}");
    assert!(
        text.contains("in-memory session; \\save needs an explicit path"),
        "got: {text}"
    );
    assert!(text.contains("unknown meta command"), "got: {text}");
    // meta errors surface in the exit code, session continued regardless
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn schema_of_generated_component_relation() {
    let mut child = bin()
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let script = "CLASS GOODS ( Art STRING ) KEY (Art);\n\
                  CLASS DOCS ( DocN STRING, Items SET OF ( Art STRING, Pieces INTEGER ) KEY (Art) ) KEY (DocN) REFERENCE Items (.Art) ON GOODS (.Art);\n\
                  \\schema R_DOCS.Items\n\
                  \\quit\n";
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(script.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("OID: dOID"), "got: {text}");
    assert!(text.contains("Art: STRING"), "got: {text}");
    assert!(text.contains("Pieces: INTEGER"), "got: {text}");
    assert!(text.contains("KEY(OID, Art)"), "got: {text}");
    assert!(text.contains("FKEY(Art) ON R_GOODS"), "got: {text}");
}

#[test]
fn multiline_commands_in_repl() {
    let mut child = bin()
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let script = "CREATE R (i: INTEGER);\nINSERT R\nVALUES (1),\n(2);\nGET R;\n";
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(script.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("i\n-\n1\n2"), "got: {text}");
}

#[test]
fn db_directory_round_trip() {
    let dir = temp_dir("db");
    // first run creates and saves
    let out = bin()
        .arg("--db")
        .arg(&dir)
        .arg("--exec")
        .arg(
            "CLASS GOODS ( Art STRING ) KEY (Art);\
             ALTER GOODS REALIZE Art AS STORED;\
             NEW GOODS WITH SET .Art := \"Axe\";",
        )
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.join("catalog.txt").exists());
    assert!(dir.join("real_R_GOODS.tup").exists());
    // second run loads it; the duplicate key proves the object survived
    let out = bin()
        .arg("--db")
        .arg(&dir)
        .arg("--exec")
        .arg("NEW GOODS WITH SET .Art := \"Axe\";")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("key violation"), "got: {text}");
    // a pristine query run sees the data
    let out = bin()
        .arg("--db")
        .arg(&dir)
        .arg("--exec")
        .arg("SELECT #g.Art FROM GOODS #g;")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("Axe"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn env_var_sets_default_db() {
    let dir = temp_dir("envdb");
    let out = bin()
        .env("RXO_DB", &dir)
        .arg("--exec")
        .arg("CREATE R (i: INTEGER);")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("catalog.txt").exists(), "RXO_DB directory saved");
    let _ = std::fs::remove_dir_all(&dir);
}
