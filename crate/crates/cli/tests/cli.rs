use std::fs;
use std::process::Command;

use certbound::{read_certificate, write_certificate, CertFormat};
use certbound_cli::{run, EXIT_CAPACITY, EXIT_INVALID, EXIT_OK, EXIT_STRUCTURAL, EXIT_USAGE};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("certbound").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn compute_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["json", "binary"] {
        let path = dir.path().join(format!("cert.{format}"));
        let path_str = path.to_str().unwrap();
        let (code, out, _) = call(&[
            "compute",
            "--problem",
            "edit",
            "--k",
            "2",
            "--h",
            "1",
            "--iters",
            "4",
            "--scale",
            "100000",
            "--out",
            path_str,
            "--format",
            format,
            "--quiet",
        ]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.trim(), "bound <= 1.0001");
        let (code, out, _) = call(&["verify", "--cert", path_str]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.trim(), "VALID: alpha_k <= 1.0001");
    }
}

#[test]
fn lcs_compute_prints_lower_bound() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lcs.json");
    let (code, out, _) = call(&[
        "compute",
        "--problem",
        "lcs",
        "--k",
        "2",
        "--h",
        "1",
        "--iters",
        "4",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.trim(), "bound >= 0.4999");
    let (_, out, _) = call(&["verify", "--cert", path.to_str().unwrap()]);
    assert_eq!(out.trim(), "VALID: gamma_k >= 0.4999");
}

#[test]
fn tampered_rate_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let (code, _, _) = call(&[
        "compute",
        "--problem",
        "edit",
        "--k",
        "2",
        "--h",
        "1",
        "--iters",
        "4",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(code, EXIT_OK);
    let mut cert = read_certificate(&path).unwrap();
    cert.r_num = 24_999;
    write_certificate(&cert, &path, CertFormat::Json).unwrap();
    let (code, out, _) = call(&["verify", "--cert", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(out.contains("ordinal 0"), "{out}");
    cert.r_num = 25_000;
    write_certificate(&cert, &path, CertFormat::Json).unwrap();
    let (code, out, _) = call(&["verify", "--cert", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.trim(), "VALID: alpha_k <= 0.5");
}

#[test]
fn truncated_certificate_is_structural() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.bin");
    let (code, _, _) = call(&[
        "compute",
        "--problem",
        "edit",
        "--k",
        "3",
        "--h",
        "2",
        "--iters",
        "10",
        "--out",
        path.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(code, EXIT_OK);
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
    let (code, _, err) = call(&["verify", "--cert", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_STRUCTURAL, "{err}");
    fs::write(&path, b"{\"format_version\": 1}").unwrap();
    assert_eq!(call(&["verify", "--cert", path.to_str().unwrap()]).0, EXIT_STRUCTURAL);
}

#[test]
fn bad_flags_and_budgets() {
    assert_eq!(
        call(&[
            "compute",
            "--problem",
            "hamming",
            "--k",
            "2",
            "--h",
            "1",
            "--iters",
            "4"
        ])
        .0,
        EXIT_USAGE
    );
    assert_eq!(
        call(&["compute", "--problem", "edit", "--h", "1", "--iters", "4"]).0,
        EXIT_USAGE
    );
    assert_eq!(
        call(&["compute", "--problem", "edit", "--k", "2", "--h", "1", "--iters", "1"]).0,
        EXIT_USAGE
    );
    assert_eq!(
        call(&["compute", "--problem", "edit", "--k", "1", "--h", "1", "--iters", "4"]).0,
        EXIT_USAGE
    );
    assert_eq!(
        call(&[
            "compute",
            "--problem",
            "edit",
            "--k",
            "3",
            "--h",
            "1",
            "--iters",
            "4",
            "--backend",
            "binary"
        ])
        .0,
        EXIT_USAGE
    );
    let (code, _, err) = call(&[
        "compute",
        "--problem",
        "edit",
        "--k",
        "2",
        "--h",
        "10",
        "--iters",
        "4",
        "--mem-gb",
        "0.001",
        "--quiet",
    ]);
    assert_eq!(code, EXIT_CAPACITY, "{err}");
    assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(call(&["--help"]).0, EXIT_OK);
}

#[test]
fn oracle_subcommands() {
    assert_eq!(call(&["oracle", "distance", "kitten", "sitting"]).1.trim(), "3");
    assert_eq!(call(&["oracle", "lcs", "ab", "ba"]).1.trim(), "1");
    let (code, out, _) = call(&[
        "oracle",
        "expected",
        "--problem",
        "edit",
        "--s",
        "a",
        "--t",
        "a",
        "--n",
        "2",
        "--k",
        "2",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.trim(), "8/16 = 0.5");
    let (_, out, _) = call(&["oracle", "mc", "--problem", "lcs", "--k", "2", "--n", "1"]);
    assert_eq!(out.trim(), "mean 0.5 (exact over 4 pairs)");
    let (_, a, _) = call(&[
        "oracle",
        "mc",
        "--problem",
        "edit",
        "--k",
        "2",
        "--n",
        "60",
        "--samples",
        "50",
        "--seed",
        "9",
    ]);
    let (_, b, _) = call(&[
        "oracle",
        "mc",
        "--problem",
        "edit",
        "--k",
        "2",
        "--n",
        "60",
        "--samples",
        "50",
        "--seed",
        "9",
    ]);
    assert_eq!(a, b);
    let (code, out, _) = call(&["oracle", "decomposition", "--samples", "500", "--k", "3"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.trim(), "1000 inequalities checked, 0 violations");
    let (code, _, _) = call(&[
        "oracle",
        "expected",
        "--problem",
        "edit",
        "--s",
        "a",
        "--t",
        "a",
        "--n",
        "20",
        "--k",
        "2",
    ]);
    assert_eq!(code, EXIT_CAPACITY);
}

#[test]
fn table_row_matches_published_value() {
    let (code, out, err) = call(&["table", "--recipe", "lcs-large", "--max-k", "5", "--max-h", "6"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines,
        [
            "problem,k,h,iters,bound,paper_bound,ok",
            "lcs,5,6,50,0.55686,0.55686,true"
        ]
    );
}

#[test]
fn oversized_alphabet_is_rejected() {
    // 1000^12 does not fit the packed code space
    let (code, _, err) = call(&[
        "compute",
        "--problem",
        "edit",
        "--k",
        "1000",
        "--h",
        "6",
        "--iters",
        "4",
    ]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("error:"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_certbound");
    let status = Command::new(exe)
        .args(["oracle", "distance", "abc", ""])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8_lossy(&status.stdout).trim(), "3");
    let status = Command::new(exe).args(["verify"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_USAGE));
    let status = Command::new(exe)
        .args(["verify", "--cert", "/nonexistent/cert.bin"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(certbound_cli::EXIT_IO));
}
