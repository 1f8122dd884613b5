//! End-to-end tests of the `igo-pca` binary: exit codes, output files and
//! seeded reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn igo_pca(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_igo-pca"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn synth_args(seed: &str) -> Vec<&str> {
    vec![
        "synth",
        "--out",
        "ds",
        "--n",
        "10",
        "--height",
        "32",
        "--width",
        "32",
        "--rank",
        "2",
        "--mode",
        "occlusion",
        "--fraction",
        "0.2",
        "--patch",
        "9",
        "--seed",
        seed,
    ]
}

#[test]
fn pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    assert_success(&igo_pca(&synth_args("7"), cwd));
    assert!(cwd.join("ds/manifest.toml").is_file());
    assert!(cwd.join("ds/img_009.pgm").is_file());
    assert!(cwd.join("ds/clean/img_009.pgm").is_file());

    let fit = igo_pca(
        &[
            "fit",
            "--manifest",
            "ds/manifest.toml",
            "--method",
            "igo",
            "--k",
            "3",
            "--out",
            "m.igo",
        ],
        cwd,
    );
    assert_success(&fit);
    assert!(String::from_utf8_lossy(&fit.stdout).contains("eigenvalues:"));

    let recon = igo_pca(
        &[
            "reconstruct",
            "--model",
            "m.igo",
            "--out",
            "recon",
            "ds/img_000.pgm",
            "ds/img_001.pgm",
        ],
        cwd,
    );
    assert_success(&recon);
    assert!(cwd.join("recon/reconstruction.csv").is_file());
    assert!(cwd.join("recon/img_000.ori").is_file());

    let compare = igo_pca(
        &[
            "compare",
            "--manifest",
            "ds/manifest.toml",
            "--k",
            "3",
            "--out",
            "cmp",
        ],
        cwd,
    );
    assert_success(&compare);
    let csv = std::fs::read_to_string(cwd.join("cmp/compare.csv")).unwrap();
    assert!(csv.starts_with("# igo-pca compare csv v1\n"));
    assert_eq!(csv.lines().count(), 2 + 10);

    let kstest = igo_pca(
        &[
            "kstest", "--trials", "10", "--height", "30", "--width", "30", "--seed", "5", "--out",
            "ks.csv",
        ],
        cwd,
    );
    assert_success(&kstest);
    assert_eq!(
        std::fs::read_to_string(cwd.join("ks.csv"))
            .unwrap()
            .lines()
            .count(),
        12
    );

    let spectrum = igo_pca(
        &[
            "spectrum",
            "--manifest",
            "ds/manifest.toml",
            "--out",
            "spec.csv",
        ],
        cwd,
    );
    assert_success(&spectrum);
    assert_eq!(
        std::fs::read_to_string(cwd.join("spec.csv"))
            .unwrap()
            .lines()
            .count(),
        12
    );
}

#[test]
fn seeded_commands_are_reproducible_in_serial_mode() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for cwd in [dir_a.path(), dir_b.path()] {
        let mut args = vec!["--serial"];
        args.extend(synth_args("99"));
        assert_success(&igo_pca(&args, cwd));
        assert_success(&igo_pca(
            &[
                "--serial", "kstest", "--trials", "8", "--height", "25", "--width", "25", "--seed",
                "3", "--out", "ks.csv",
            ],
            cwd,
        ));
    }
    for file in ["ds/img_004.pgm", "ds/manifest.toml", "ks.csv"] {
        let a = std::fs::read(dir_a.path().join(file)).unwrap();
        let b = std::fs::read(dir_b.path().join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical seeded runs");
    }
}

#[test]
fn rank_error_exits_nonzero_with_stable_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    assert_success(&igo_pca(&synth_args("11"), cwd));
    let out = igo_pca(
        &[
            "fit",
            "--manifest",
            "ds/manifest.toml",
            "--method",
            "l2",
            "--k",
            "10",
            "--out",
            "m.l2",
        ],
        cwd,
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error[rank]:"), "stderr: {stderr}");
}

#[test]
fn gaussian_filter_flows_through_fit_and_reconstruct() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    assert_success(&igo_pca(&synth_args("17"), cwd));
    assert_success(&igo_pca(
        &[
            "fit",
            "--manifest",
            "ds/manifest.toml",
            "--method",
            "igo",
            "--k",
            "3",
            "--filter",
            "gaussian-derivative",
            "--sigma",
            "1.5",
            "--out",
            "m.igo",
        ],
        cwd,
    ));
    // The stored filter spec drives orientation extraction for queries.
    assert_success(&igo_pca(
        &["reconstruct", "--model", "m.igo", "--out", "recon", "ds/img_000.pgm"],
        cwd,
    ));
    assert!(cwd.join("recon/img_000.ori").is_file());
}

#[test]
fn missing_manifest_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = igo_pca(
        &[
            "fit",
            "--manifest",
            "nope.toml",
            "--k",
            "2",
            "--out",
            "m.igo",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[manifest]:"));
}

#[test]
fn config_file_supplies_defaults_and_cli_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    assert_success(&igo_pca(&synth_args("13"), cwd));
    std::fs::write(cwd.join("cfg.toml"), "k = 2\nmethod = \"igo\"\n").unwrap();

    let from_config = igo_pca(
        &[
            "--config",
            "cfg.toml",
            "fit",
            "--manifest",
            "ds/manifest.toml",
            "--out",
            "m2.igo",
        ],
        cwd,
    );
    assert_success(&from_config);
    let eig_line = String::from_utf8_lossy(&from_config.stdout)
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(
        eig_line.split_whitespace().count(),
        3,
        "k = 2 -> two eigenvalues: {eig_line}"
    );

    let cli_override = igo_pca(
        &[
            "--config",
            "cfg.toml",
            "fit",
            "--manifest",
            "ds/manifest.toml",
            "--k",
            "4",
            "--out",
            "m4.igo",
        ],
        cwd,
    );
    assert_success(&cli_override);
    let eig_line = String::from_utf8_lossy(&cli_override.stdout)
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(
        eig_line.split_whitespace().count(),
        5,
        "k = 4 wins over config: {eig_line}"
    );
}

#[test]
fn reconstruction_of_training_image_under_full_rank_model_is_tight() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    let args = vec![
        "synth", "--out", "ds", "--n", "4", "--height", "24", "--width", "24", "--rank", "2",
        "--mode", "none", "--seed", "21",
    ];
    assert_success(&igo_pca(&args, cwd));
    assert_success(&igo_pca(
        &[
            "fit",
            "--manifest",
            "ds/manifest.toml",
            "--method",
            "igo",
            "--k",
            "4",
            "--out",
            "m.igo",
        ],
        cwd,
    ));
    assert_success(&igo_pca(
        &[
            "reconstruct",
            "--model",
            "m.igo",
            "--out",
            "recon",
            "ds/img_002.pgm",
        ],
        cwd,
    ));
    let csv = std::fs::read_to_string(cwd.join("recon/reconstruction.csv")).unwrap();
    let row = csv.lines().nth(2).unwrap();
    let d2: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!(d2 <= 1e-8, "training-image d2/p = {d2}");
}
