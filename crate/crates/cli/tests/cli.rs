use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn cqed(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqed"))
        .args(args)
        .current_dir(dir)
        .env_remove("CQED_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const JC: &str = "omega_r = 50.0\nomega_q = 50.0\ng = 1.0\n";

const BLOCKADE: &str = "omega_r = 50.0\nomega_q = 50.0\ng = 1.0\nn_max = 4\nxi = [0.005]\n\
omega_d_min = 48.9\nomega_d_max = 49.1\n[rates]\ngamma1 = 0.01\ngamma_kappa = 0.01\n";

#[test]
fn minimal_config_gets_defaults() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "jc.toml", JC);
    let o = cqed(tmp.path(), &["jc-spectrum", "--config", cfg.to_str().unwrap(), "--out-dir", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&tmp.path().join("out"));
    assert_eq!(s["config"]["n_max"], 6);
    assert_eq!(s["config"]["tolerance"], 1e-10);
    assert_eq!(s["config"]["rwa"], true);
    assert_eq!(s["config"]["rates"]["gamma1"], 0.0);
    assert_eq!(s["converged"], true);
    let csv = std::fs::read_to_string(tmp.path().join("out/jc_spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 1 + 2 * 5);
}

#[test]
fn default_output_dir_is_named_after_command() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "jc.toml", JC);
    let o = cqed(tmp.path(), &["jc-spectrum", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp.path().join("out/jc-spectrum/summary.json").exists());
}

#[test]
fn flag_overrides_file_value() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "jc.toml", JC);
    let o = cqed(tmp.path(), &["jc-spectrum", "--config", cfg.to_str().unwrap(), "--out-dir", "out", "--g=0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&tmp.path().join("out"));
    assert_eq!(s["config"]["g"], 0.1);
    assert_eq!(s["results"]["hubbard_u"]["minus"].as_f64().unwrap() > 0.0, true);
}

#[test]
fn parameters_can_come_from_flags_alone() {
    let tmp = TempDir::new().unwrap();
    let o = cqed(tmp.path(), &["jc-spectrum", "--out-dir", "out", "--omega_r=50", "--omega_q=49", "--g=1", "--rates.gamma1=0.02"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&tmp.path().join("out"));
    assert_eq!(s["config"]["omega_q"], 49.0);
    assert_eq!(s["config"]["rates"]["gamma1"], 0.02);
}

#[test]
fn negative_rate_is_rejected_with_key_path() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "jc.toml", &format!("{JC}[rates]\ngamma1 = -0.1\n"));
    let o = cqed(tmp.path(), &["jc-spectrum", "--config", cfg.to_str().unwrap(), "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("rates.gamma1"), "{}", stderr(&o));
    assert!(!tmp.path().join("out/jc_spectrum.csv").exists());
}

#[test]
fn unknown_key_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "jc.toml", JC);
    let o = cqed(tmp.path(), &["jc-spectrum", "--config", cfg.to_str().unwrap(), "--out-dir", "out", "--rates.gamma2=1"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("rates") && err.contains("gamma2"), "{err}");
}

#[test]
fn type_mismatch_names_the_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "jc.toml", JC);
    let o = cqed(tmp.path(), &["jc-spectrum", "--config", cfg.to_str().unwrap(), "--out-dir", "out", "--n_max=six"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("n_max"), "{}", stderr(&o));
}

#[test]
fn missing_required_key_is_reported() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "jc.toml", "omega_r = 50.0\nomega_q = 50.0\n");
    let o = cqed(tmp.path(), &["jc-spectrum", "--config", cfg.to_str().unwrap(), "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`g`"), "{}", stderr(&o));
}

#[test]
fn config_for_another_command_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "jc.toml", &format!("command = \"modes\"\n{JC}"));
    let o = cqed(tmp.path(), &["jc-spectrum", "--config", cfg.to_str().unwrap(), "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("command"), "{}", stderr(&o));
}

#[test]
fn blockade_scan_emits_one_row_per_point() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "b.toml", BLOCKADE);
    let o = cqed(tmp.path(), &["blockade-scan", "--config", cfg.to_str().unwrap(), "--out-dir", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("out/blockade_scan.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 52);
    assert_eq!(lines[0], "xi,omega_d,re_a,im_a,abs_a,abs_a_norm,n_photon,g2");
}

#[test]
fn repeated_runs_are_byte_identical_and_thread_independent() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "b.toml", BLOCKADE);
    let cfg = cfg.to_str().unwrap();
    let mut files = Vec::new();
    for (dir, threads) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let o = cqed(tmp.path(), &["blockade-scan", "--config", cfg, "--out-dir", dir, "--threads", threads]);
        assert!(o.status.success(), "{}", stderr(&o));
        files.push(std::fs::read(tmp.path().join(dir).join("blockade_scan.csv")).unwrap());
        assert_eq!(summary(&tmp.path().join(dir))["threads"], threads.parse::<u64>().unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn thread_count_falls_back_to_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "jc.toml", JC);
    let o = Command::new(env!("CARGO_BIN_EXE_cqed"))
        .args(["jc-spectrum", "--config", cfg.to_str().unwrap(), "--out-dir", "out"])
        .current_dir(tmp.path())
        .env("CQED_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(summary(&tmp.path().join("out"))["threads"], 3);

    let bad = Command::new(env!("CARGO_BIN_EXE_cqed"))
        .args(["jc-spectrum", "--config", cfg.to_str().unwrap(), "--out-dir", "out"])
        .current_dir(tmp.path())
        .env("CQED_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

fn validator() -> jsonschema::Validator {
    let text = std::fs::read_to_string(repo().join("docs/summary.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, s: &Value) {
    let errors: Vec<String> = v.iter_errors(s).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn summaries_validate_against_schema() {
    let tmp = TempDir::new().unwrap();
    let v = validator();
    let net = repo().join("netlists/transmon.net");
    let cases: Vec<(&str, String)> = vec![
        ("jc-spectrum", JC.to_string()),
        ("blockade-scan", BLOCKADE.to_string()),
        ("sector-nonlinearity", "omega_r = 500.0\ng = 1.0\nhopping = -50.0\nn_sites = [2]\nn_max = 3\n".into()),
        ("modes", "ell = 4.2e-7\nc = 1.6e-10\nlength = 0.01\nchi_minus = 0.07\nchi_plus = 0.07\nz0 = 50.0\nc_out = 1e-15\n".into()),
        ("quantize", format!("netlist = {:?}\nlevels = 3\n", net.to_str().unwrap())),
        (
            "dimer-g2",
            "omega_r = 50.0\nomega_q = 50.0\ng = 1.0\nhopping = 0.05\nn_max = 2\nxi = 0.005\n\
             omega_d_min = 48.9\nomega_d_max = 49.1\npoints = 5\n[rates]\ngamma1 = 0.01\ngamma_kappa = 0.01\n"
                .into(),
        ),
        (
            "meanfield-lobes",
            "omega_r = 50.0\nomega_q = 50.0\ng = 1.0\nn_max = 4\nmu_points = 4\nzj_points = 3\nlobes = [1]\nboundary_points = 3\n".into(),
        ),
    ];
    let headers = documented_headers();
    for (cmd, text) in cases {
        let cfg = write(tmp.path(), &format!("{cmd}.toml"), &text);
        let o = cqed(tmp.path(), &[cmd, "--config", cfg.to_str().unwrap(), "--out-dir", cmd]);
        assert!(o.status.code() == Some(0) || o.status.code() == Some(2), "{cmd}: {}", stderr(&o));
        let s = summary(&tmp.path().join(cmd));
        assert_eq!(s["command"], cmd);
        assert_valid(&v, &s);
        for f in s["files"].as_array().unwrap() {
            let csv = std::fs::read_to_string(tmp.path().join(cmd).join(f.as_str().unwrap())).unwrap();
            let header = csv.lines().next().unwrap();
            assert!(headers.iter().any(|h| h == header), "{cmd}: undocumented header {header}");
        }
    }
}

/// Header lines exactly as listed in docs/csv.md.
fn documented_headers() -> Vec<String> {
    let doc = std::fs::read_to_string(repo().join("docs/csv.md")).unwrap();
    doc.lines().filter_map(|l| l.strip_prefix("    ")).map(str::to_string).collect()
}

#[test]
fn integer_flux_sweep_matches_zero_flux() {
    let tmp = TempDir::new().unwrap();
    let net = repo().join("netlists/asymmetric_squid.net");
    let o = cqed(
        tmp.path(),
        &[
            "quantize",
            "--out-dir",
            "out",
            &format!("--netlist={:?}", net.to_str().unwrap()),
            "--levels=3",
            "--sweep_loop=squid",
            "--sweep_start=0",
            "--sweep_stop=2",
            "--sweep_points=3",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("out/flux_sweep.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 9);
    for level in 0..3 {
        let e: Vec<f64> = rows.iter().filter(|r| r[1] as usize == level).map(|r| r[2]).collect();
        let scale = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
        assert!((e[0] - e[1]).abs() <= 1e-9 * scale && (e[0] - e[2]).abs() <= 1e-9 * scale, "{e:?}");
    }
}

#[test]
fn netlist_is_resolved_next_to_the_config() {
    let tmp = TempDir::new().unwrap();
    std::fs::create_dir(tmp.path().join("cfg")).unwrap();
    std::fs::copy(repo().join("netlists/lc.net"), tmp.path().join("cfg/lc.net")).unwrap();
    let cfg = write(&tmp.path().join("cfg"), "q.toml", "netlist = \"lc.net\"\nlevels = 3\n");
    let o = cqed(tmp.path(), &["quantize", "--config", cfg.to_str().unwrap(), "--out-dir", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn unconverged_spectrum_exits_with_two() {
    let tmp = TempDir::new().unwrap();
    let net = repo().join("netlists/cooper_pair_box.net");
    let o = cqed(
        tmp.path(),
        &["quantize", "--out-dir", "out", &format!("--netlist={:?}", net.to_str().unwrap()), "--charge_cutoff=1", "--tolerance=1e-12"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let s = summary(&tmp.path().join("out"));
    assert_eq!(s["converged"], false);
    assert_valid(&validator(), &s);
}

#[test]
fn malformed_netlist_is_an_input_error() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "bad.net", "GROUND gnd\nNODE a\nC a gnd -1\nX a gnd 1\n");
    let o = cqed(tmp.path(), &["quantize", "--out-dir", "out", "--netlist=bad.net"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 3") && err.contains("line 4"), "{err}");
}

#[test]
fn bistable_driven_mean_field_lists_two_fixed_points() {
    let tmp = TempDir::new().unwrap();
    let cfg = repo().join("configs/driven_mf_bistable.toml");
    let o = cqed(tmp.path(), &["driven-mf", "--config", cfg.to_str().unwrap(), "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(&tmp.path().join("out"));
    assert_valid(&validator(), &s);
    let point = &s["results"]["points"][0];
    assert_eq!(point["multistable"], true);
    let fps = point["fixed_points"].as_array().unwrap();
    assert!(fps.len() >= 2);
    let a0 = fps[0]["abs_psi"].as_f64().unwrap();
    let a1 = fps[1]["abs_psi"].as_f64().unwrap();
    assert!((a0 - a1).abs() > 0.1, "{a0} {a1}");
    let csv = std::fs::read_to_string(tmp.path().join("out/driven_mf.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}
