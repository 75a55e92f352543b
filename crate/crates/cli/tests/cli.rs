use std::path::{Path, PathBuf};
use std::process::Command;

use homogeom_cli::report::render;
use homogeom_cli::suite::{discover, REPORT_SUFFIX};
use homogeom_cli::{run, suite, Format, InputError, Kind, PolicySpec, RunOptions, Scenario, Verdict};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_homogeom"))
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn darboux_k2_reports_the_contact_lift() {
    let out = bin().arg("run").arg(scenarios().join("contact/darboux_k2.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("A = \"diag(1, 1, r, r)\""), "{text}");
    assert!(!text.contains("verdict = \"fail\""));
}

#[test]
fn euclidean_eta0_passes_but_is_not_integrable() {
    let sc = Scenario::load(&scenarios().join("riemannian/euclidean_eta0.toml")).unwrap();
    let rep = run(&sc, &RunOptions::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    let integ = rep.check("integrability").unwrap();
    assert_eq!(integ.facts["integrable"], false.into());
    assert_eq!(integ.facts["d_zero"], false.into());
    assert!(integ.witness.as_deref().is_some_and(|w| w.starts_with('D')), "{:?}", integ.witness);
}

#[test]
fn malformed_files_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.toml", "kind = \"contact\"\n[chart\n", "schema error"),
        ("unknown_kind.toml", "kind = \"kahler\"\n", "kahler"),
        ("unknown_key.toml", "kind = \"contact\"\ncolour = 1\n", "colour"),
        (
            "missing_theta.toml",
            "kind = \"contact\"\n[chart]\ncoords = [\"x\", \"u\", \"p\"]\n[objects]\nupsilon = {}\n",
            "objects",
        ),
        ("bad_form_key.toml", "kind = \"cosymplectic\"\n[chart]\ncoords = [\"x\"]\n[objects]\nOmega = {}\neta = { dq = \"1\" }\n", "objects.eta.dq"),
    ];
    for (name, text, needle) in cases {
        let p = write(&dir, name, text);
        let out = bin().arg("run").arg(&p).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{name}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(needle), "{name}: {err}");
    }
}

#[test]
fn dsl_errors_carry_pointer_and_position() {
    let text = "kind = \"contact\"\n[chart]\ncoords = [\"x\", \"u\", \"p\"]\n[objects]\ntheta = { du = \"1 + * p\" }\n";
    match Scenario::parse(text, "t") {
        Err(InputError::Dsl { pointer, source, .. }) => {
            assert_eq!(pointer, "objects.theta.du");
            assert!(source.to_string().contains("position"));
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
    let text = "kind = \"complex\"\n[chart]\ncoords = [\"x\"]\n[objects]\nframe = [[\"1\", \"w\"], [\"0\", \"mu\"]]\n";
    assert!(matches!(Scenario::parse(text, "t"), Err(InputError::Dsl { pointer, .. }) if pointer == "objects.frame[0][1]"));
}

#[test]
fn schema_rules() {
    let bad_check = "kind = \"group\"\nchecks = [\"torsion\"]\n[objects]\ngroup = \"Sp(1)\"\n";
    assert!(matches!(Scenario::parse(bad_check, "t"), Err(InputError::Schema { pointer, .. }) if pointer == "checks[0]"));
    let bad_group = "kind = \"group\"\n[objects]\ngroup = \"Spin(3)\"\n";
    assert!(matches!(Scenario::parse(bad_group, "t"), Err(InputError::Schema { pointer, .. }) if pointer == "objects.group"));
    let asym = "kind = \"riemannian\"\n[chart]\ncoords = [\"x\", \"y\"]\n[objects]\ng = [[\"1\", \"x\"], [\"0\", \"1\"]]\n";
    assert!(matches!(Scenario::parse(asym, "t"), Err(InputError::Schema { .. })));
    let bad_expect = "kind = \"group\"\n[objects]\ngroup = \"Sp(1)\"\n[expect]\nintegrable = true\n";
    assert!(matches!(Scenario::parse(bad_expect, "t"), Err(InputError::Schema { .. })));
    let constraint = "kind = \"contact\"\n[chart]\ncoords = [\"u\"]\nconstraints = [\"w > 0\"]\n[objects]\ntheta = { du = \"1\" }\n";
    assert!(matches!(Scenario::parse(constraint, "t"), Err(InputError::Schema { pointer, .. }) if pointer == "chart.constraints[0]"));
}

#[test]
fn engine_rejections_are_input_errors() {
    // an indefinite metric is invalid input, never a FALSIFICATION
    let text = "kind = \"riemannian\"\n[chart]\ncoords = [\"x\", \"y\"]\n[objects]\ng = [[\"1\", \"0\"], [\"0\", \"-1\"]]\n";
    let sc = Scenario::parse(text, "t").unwrap();
    assert!(matches!(run(&sc, &RunOptions::default()), Err(InputError::Invalid(_))));
}

#[test]
fn expectation_mismatch_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        &dir,
        "wrong.toml",
        "kind = \"complex\"\n[chart]\ncoords = [\"x\"]\n[objects]\nframe = [[\"1\", \"0\"], [\"0\", \"mu\"]]\n[expect]\n\"torsion.torsion_zero\" = false\n",
    );
    let out = bin().arg("run").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("torsion.torsion_zero: expected false, got true"), "{text}");
}

#[test]
fn json_output_parses() {
    let out = bin().args(["run", "--json"]).arg(scenarios().join("group/glc2.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"], "group");
    assert_eq!(v["policy"]["samples"], 20);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["verdict"] == "pass"));
}

#[test]
fn flags_override_the_policy() {
    let out = bin().args(["run", "--seed", "7", "--samples", "5", "--tol", "1e-6"]).arg(scenarios().join("group/gl3.toml")).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 7") && text.contains("samples = 5"), "{text}");
    let v: toml::Table = toml::from_str(&text).unwrap();
    assert_eq!(v["policy"]["tolerance"].as_float(), Some(1e-6));
}

#[test]
fn filter_selects_one_kind() {
    let files = discover(&scenarios(), Some("riemannian/*")).unwrap();
    assert!(!files.is_empty());
    assert!(files.iter().all(|(rel, _)| rel.starts_with("riemannian/")));
    let all = discover(&scenarios(), None).unwrap();
    assert!(all.iter().all(|(rel, _)| !rel.ends_with(REPORT_SUFFIX)));
    let rep = suite(&scenarios(), Some("riemannian/*"), &RunOptions::default()).unwrap();
    assert!(rep.reports.iter().all(|r| r.kind == Kind::Riemannian));
}

#[test]
fn seeded_suites_are_byte_identical() {
    let opts = RunOptions { policy: PolicySpec { seed: Some(7), ..Default::default() }, timing: false };
    let a = render(&suite(&scenarios(), None, &opts).unwrap(), Format::Toml);
    let b = render(&suite(&scenarios(), None, &opts).unwrap(), Format::Toml);
    assert_eq!(a, b);
    let one = bin().args(["suite", "--seed", "7", "--filter", "group/*"]).arg(scenarios()).output().unwrap();
    let two = bin().args(["suite", "--seed", "7", "--filter", "group/*"]).arg(scenarios()).output().unwrap();
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn suite_continues_past_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir, "bad.toml", "kind = 3\n");
    write(&dir, "good.toml", "kind = \"group\"\n[objects]\ngroup = \"GL(2)\"\nrandom = 3\n");
    let rep = suite(dir.path(), None, &RunOptions::default()).unwrap();
    assert_eq!(rep.summary.scenarios, 1);
    assert_eq!(rep.summary.input_errors, 1);
    assert_eq!(rep.errors[0].file, "bad.toml");
    assert_eq!(rep.exit_code(), 2);
}

/// Each bundled scenario with a golden report reproduces it byte for byte.
/// Set `HOMOGEOM_BLESS=1` to rewrite the golden files.
#[test]
fn golden_reports() {
    let bless = std::env::var_os("HOMOGEOM_BLESS").is_some();
    let mut compared = 0;
    for (rel, path) in discover(&scenarios(), None).unwrap() {
        let golden = path.with_file_name(format!("{}{REPORT_SUFFIX}", path.file_stem().unwrap().to_str().unwrap()));
        let sc = Scenario::load(&path).unwrap();
        let text = render(&run(&sc, &RunOptions::default()).unwrap(), Format::Toml);
        if bless {
            std::fs::write(&golden, &text).unwrap();
        } else {
            let want = std::fs::read_to_string(&golden).unwrap_or_else(|_| panic!("missing golden report for {rel}"));
            assert_eq!(text, want, "{rel} differs from its golden report");
        }
        compared += 1;
    }
    assert!(compared >= 20);
}

#[test]
fn dz_golden_tensors_are_exact() {
    let golden = std::fs::read_to_string(scenarios().join("riemannian/dz_euclidean.report.toml")).unwrap();
    let v: toml::Table = toml::from_str(&golden).unwrap();
    let checks = v["checks"].as_array().unwrap();
    let tensors = checks.iter().find(|c| c["name"].as_str() == Some("tensors")).unwrap();
    let facts = tensors["facts"].as_table().unwrap();
    // A is the identity on ker η and kills ∂_z
    assert_eq!(facts["A"].as_str(), Some("A[0][0] = 1; A[1][1] = 1"));
    for key in ["B", "C", "D"] {
        let s = facts[key].as_str().unwrap();
        assert!(s.split("; ").all(|t| t.split(" = ").nth(1).is_some_and(|c| c.parse::<i64>().is_ok())), "{key}: {s}");
    }
}
