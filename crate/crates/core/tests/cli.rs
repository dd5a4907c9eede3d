use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

use fpmp::io::{read_image, write_image, BitDepth};
use fpmp::scenes;

fn fpmp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpmp")).current_dir(dir).args(args).output().expect("spawn fpmp")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = fpmp(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// A tempdir holding `clean.pgm` and a degraded `blurred.pgm` with its kernel.
fn workspace() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().to_path_buf();
    write_image(p.join("clean.pgm"), &scenes::cameraman(32), BitDepth::Eight).unwrap();
    ok(&p, &["degrade", "--in", "clean.pgm", "--psf", "gaussian:5:1", "--peak", "255", "--seed", "3", "--out", "blurred.pgm"]);
    (dir, p)
}

#[test]
fn degrade_is_deterministic() {
    let (_dir, p) = workspace();
    let out = ok(&p, &["degrade", "--in", "clean.pgm", "--psf", "gaussian:5:1", "--peak", "255", "--seed", "3", "--out", "again.pgm"]);
    assert!(out.contains("psnr(degraded, clean)"));
    assert_eq!(fs::read(p.join("blurred.pgm")).unwrap(), fs::read(p.join("again.pgm")).unwrap());
    assert!(p.join("blurred.kernel.txt").exists());
    ok(&p, &["degrade", "--in", "clean.pgm", "--psf", "gaussian:5:1", "--peak", "255", "--seed", "4", "--out", "other.pgm"]);
    assert_ne!(fs::read(p.join("blurred.pgm")).unwrap(), fs::read(p.join("other.pgm")).unwrap());
}

#[test]
fn deblur_writes_curves_with_quality_columns() {
    let (_dir, p) = workspace();
    let args = [
        "deblur", "--in", "blurred.pgm", "--kernel", "blurred.kernel.txt", "--out", "x.pgm", "--curves", "c.csv",
        "--ref", "clean.pgm", "--patch", "8", "--alpha", "1", "--max-iter", "15",
    ];
    let out = ok(&p, &args);
    assert!(out.contains("psnr,ssim,mse"));
    let csv = fs::read_to_string(p.join("c.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "iter,energy,rel_change,psnr,ssim");
    assert_eq!(lines.len(), 16);
    assert!(lines[1..].iter().all(|l| l.split(',').all(|f| !f.is_empty())));
    assert_eq!(read_image(p.join("x.pgm")).unwrap().field.dim(), (32, 32));

    let out = ok(&p, &["deblur", "--in", "blurred.pgm", "--kernel", "blurred.kernel.txt", "--out", "x0.pgm", "--norm", "l0", "--patch", "8", "--max-iter", "5"]);
    assert!(out.contains("after 5 iterations"));
}

#[test]
fn deblur_reads_config_file() {
    let (_dir, p) = workspace();
    fs::write(p.join("run.cfg"), "# small run\nin = blurred.pgm\nkernel = blurred.kernel.txt\nout = y.pgm\npatch = 8\nmax_iter = 3\n").unwrap();
    let out = ok(&p, &["deblur", "--config", "run.cfg"]);
    assert!(out.contains("after 3 iterations"));
    assert!(p.join("y.pgm").exists());

    fs::write(p.join("bad.cfg"), "in = blurred.pgm\nnot_a_key = 1\n").unwrap();
    let bad = fpmp(&p, &["deblur", "--config", "bad.cfg", "--kernel", "blurred.kernel.txt", "--out", "z.pgm"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("not_a_key"));
}

#[test]
fn blind_writes_image_kernel_and_rendering() {
    let (_dir, p) = workspace();
    let args = [
        "blind", "--in", "blurred.pgm", "--ksize", "5", "--out", "b.pgm", "--kout", "k.txt", "--curves", "outer.csv",
        "--patch", "8", "--outer-max-iter", "3", "--inner-iter", "3", "--varrho-over-mu", "0",
    ];
    ok(&p, &args);
    let k = fpmp::io::read_kernel(p.join("k.txt")).unwrap();
    assert_eq!(k.dim(), (5, 5));
    assert!((k.data().sum() - 1.0).abs() < 1e-9);
    assert_eq!(read_image(p.join("k.png")).unwrap().field.dim(), (5, 5));
    let csv = fs::read_to_string(p.join("outer.csv")).unwrap();
    assert!(csv.starts_with("outer,energy,rel_change,kernel_change,inner_iters\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn priors_writes_histograms_and_summary() {
    let (_dir, p) = workspace();
    let out = ok(&p, &["priors", "--clear", "clean.pgm", "--blurred", "blurred.pgm", "--out-dir", "h", "--patch", "5"]);
    assert!(out.starts_with("prior,zero_clear,zero_blurred,gap"));
    for tag in ["clear", "blurred"] {
        for kind in ["fpmp", "fdc", "pmp", "dc"] {
            let csv = fs::read_to_string(p.join("h").join(format!("{tag}_{kind}.csv"))).unwrap();
            assert_eq!(csv.lines().count(), 51, "{tag}_{kind}");
        }
    }
    assert_eq!(fs::read_to_string(p.join("h/summary.csv")).unwrap().lines().count(), 5);
}

#[test]
fn evaluate_identical_images() {
    let (_dir, p) = workspace();
    let out = ok(&p, &["evaluate", "--in", "clean.pgm", "--ref", "clean.pgm"]);
    let row: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row, vec![99.0, 1.0, 0.0]);
}

#[test]
fn missing_arguments_fail() {
    let (_dir, p) = workspace();
    assert!(!fpmp(&p, &["deblur", "--in", "blurred.pgm"]).status.success());
    assert!(!fpmp(&p, &["degrade", "--in", "clean.pgm", "--psf", "ring:3", "--peak", "1", "--seed", "0", "--out", "o.pgm"]).status.success());
    assert!(!fpmp(&p, &["evaluate", "--in", "nope.pgm", "--ref", "clean.pgm"]).status.success());
}
