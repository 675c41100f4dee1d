//! End-to-end checks of the command-line surface: subcommand output,
//! exit codes, determinism, and model-file ingestion.

use nilcohom_cli::{run, EXIT_HYPOTHESIS, EXIT_OK, EXIT_PARSE};

fn args(list: &[&str]) -> Vec<String> {
    std::iter::once("nilcohom".to_string())
        .chain(list.iter().map(|s| s.to_string()))
        .collect()
}

fn tmp(name: &str) -> String {
    let dir = std::env::temp_dir().join("nilcohom-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn cohomology_table_golden_values() {
    let out = tmp("coh.tsv");
    let code = run(args(&["cohomology", "--model", "iwasawa3", "--out", &out]));
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("1\t1\t6\t6\t4\t8"), "missing h_bc(1,1)=4 row:\n{text}");
    assert!(text.contains("2\t3\t3\t2\t3\t2"), "missing (2,3) row:\n{text}");
}

#[test]
fn lemma_report_for_torus() {
    let out = tmp("lemma.tsv");
    let code = run(args(&["lemma", "--model", "torus3", "--out", &out]));
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("ddbar_lemma\t1"));
    for line in text.lines().skip_while(|l| !l.starts_with("k\t")).skip(1) {
        if line.is_empty() {
            break;
        }
        assert!(line.ends_with("\t0"), "nonzero AT defect on torus: {line}");
    }
}

#[test]
fn scan_is_deterministic_and_flags_jumps() {
    let out1 = tmp("scan1.tsv");
    let out2 = tmp("scan2.tsv");
    for out in [&out1, &out2] {
        let code = run(args(&[
            "scan", "--model", "iwasawa3", "--order", "3", "--samples", "5", "--seed", "0",
            "--out", out,
        ]));
        assert_eq!(code, EXIT_OK);
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "scan output must be byte-identical for equal argv+seed");
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("semicontinuity_ok\t1"));
    assert!(text.contains("jump\t1\t0\tfailed: calB^{2,0}"));
    assert!(text.contains("jump\t2\t0\tfailed: B^{2,1}"));
    assert!(text.contains("jump\t2\t3\tfailed: invariance of h^{2,2}"));
}

#[test]
fn exit_codes() {
    // hypothesis refusal: extension at a bidegree whose condition fails
    let code = run(args(&[
        "extend", "--model", "iwasawa3", "--bidegree", "2,0", "--class", "0",
    ]));
    assert_eq!(code, EXIT_HYPOTHESIS);
    // parse error: broken model file
    let bad = tmp("bad.model");
    std::fs::write(&bad, "dim 2\nd p2 = q1^q2\n").unwrap();
    let code = run(args(&["cohomology", "--model", &bad]));
    assert_eq!(code, EXIT_PARSE);
    // parse error: unknown flag
    let code = run(args(&["cohomology", "--nonsense"]));
    assert_eq!(code, EXIT_PARSE);
    // unknown catalog name
    let code = run(args(&["cohomology", "--model", "nosuchmodel"]));
    assert_eq!(code, EXIT_PARSE);
}

#[test]
fn model_file_ingestion() {
    let path = tmp("kt.model");
    std::fs::write(&path, "# a Kodaira-Thurston surface\ndim 2\nname kt-file\nd p2 = p1^q1\n")
        .unwrap();
    let out = tmp("kt.tsv");
    let code = run(args(&["cohomology", "--model", &path, "--out", &out]));
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&out).unwrap();
    // b_1 = 3 for this surface
    assert!(text.contains("1\t3\t"), "unexpected betti row:\n{text}");
}

#[test]
fn kuranishi_summary_fields() {
    let out = tmp("kur.tsv");
    let code = run(args(&["kuranishi", "--model", "iwasawa3", "--order", "4", "--out", &out]));
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("parameters\t6"));
    assert!(text.contains("terminated\torder 2"));
    assert!(text.contains("mc_residual_zero\ttrue"));
    assert!(text.contains("unobstructed\ttrue"));
}

#[test]
fn pkahler_and_identities_pass() {
    let out = tmp("pk.txt");
    let code = run(args(&[
        "pkahler", "--model", "torus2", "--bidegree", "1,1", "--order", "3", "--samples", "3",
        "--out", &out,
    ]));
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("POSITIVITY=PositiveExact"));
    let out = tmp("ids.txt");
    let code = run(args(&[
        "identities", "--model", "torus2", "--samples", "50", "--seed", "3", "--out", &out,
    ]));
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().filter(|l| l.ends_with("PASS")).count() >= 8);
    assert!(text.lines().all(|l| !l.ends_with("FAIL")));
}
