use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn xlmimo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xlmimo")).args(args).output().unwrap()
}

fn scenario(name: &str) -> String {
    format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("xlmimo-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_twice_gives_identical_files() {
    let dir = scratch("determinism");
    let cfg = scenario("sumrate_vs_M.toml");
    let (a, b) = (dir.join("a"), dir.join("b"));
    let small = write(
        &dir,
        "s.toml",
        &std::fs::read_to_string(&cfg).unwrap().replace("values = [256, 1024, 8192]", "values = [32, 64]"),
    );
    for out in [&a, &b] {
        let o = xlmimo(&["run", &small, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let fa = std::fs::read(a.join("sum-rate-scaling.csv")).unwrap();
    let fb = std::fs::read(b.join("sum-rate-scaling.csv")).unwrap();
    assert_eq!(fa, fb);
}

#[test]
fn seed_flag_overrides_the_file() {
    let dir = scratch("seed");
    let cfg = scenario("rayleigh_vs_M.toml");
    let o = xlmimo(&["run", &cfg, "--out", dir.to_str().unwrap(), "--seed", "99"]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.join("rayleigh-vs-elements.csv")).unwrap();
    assert!(text.lines().any(|l| l == "# seed: 99"));
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = scratch("invalid");
    let bad = write(
        &dir,
        "bad.toml",
        "name = \"x\"\nexperiment = \"rayleigh_vs_M\"\nfrequency_hz = -5\n[layout]\nkind = \"collocated_ula\"\nelements = 4\n",
    );
    for verb in ["validate", "run"] {
        let o = xlmimo(&[verb, &bad]);
        assert_eq!(o.status.code(), Some(1), "{verb}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("frequency_hz"));
    }
    let unparsable = write(&dir, "typo.toml", "name = \"x\"\nexperimnt = \"rayleigh_vs_M\"\n");
    assert_eq!(xlmimo(&["validate", &unparsable]).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = scratch("runtime");
    // Observation point behind the array: only detectable while evaluating.
    let cfg = write(
        &dir,
        "rt.toml",
        "name = \"x\"\nexperiment = \"nf_focusing_vs_dr\"\nfrequency_hz = 1e9\n[layout]\nkind = \"collocated_ula\"\nelements = 8\n[params]\ntarget_range_m = 10\nrange_offset_m = -20\n",
    );
    let o = xlmimo(&["run", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(xlmimo(&["validate", &dir.join("missing.toml").to_string_lossy()]).status.code(), Some(2));
}

#[test]
fn validate_passes_bundled_scenarios_and_prints_warnings() {
    let o = xlmimo(&["validate", &scenario("snr_vs_M.toml")]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: params.range_m"));
}

#[test]
fn list_experiments_names_all_ten() {
    let o = xlmimo(&["list-experiments"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in [
        "rayleigh_vs_D",
        "rayleigh_vs_M",
        "boundary_map",
        "rank_vs_distance",
        "snr_vs_M",
        "ff_beam_pattern",
        "nf_focusing_vs_dr",
        "sumrate_vs_M",
        "training_compare",
        "dam_isi_vs_M",
    ] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{name}: "))), "{name}");
    }
}

#[test]
fn export_codebook_writes_tagged_rows() {
    let o = xlmimo(&["export-codebook", &scenario("training_compare.toml")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("angle_index,ring,"), "{header}");
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() > 256 && rows.len() <= 256 * 6);
    // angle_index, ring, direction, range, then 256 complex entries.
    assert_eq!(rows[0].split(',').count(), 4 + 2 * 256);
}
