use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fdlcp::io::load_cimg;
use fdlcp::metrics::METRIC_CSV_HEADER;
use fdlcp::sweep::SWEEP_CSV_HEADER;
use fdlcp::{Image64, SamplingMask};
use fdlcp_cli::RunManifest;
use tempfile::TempDir;

/// Runs the binary in `dir` with whitespace-separated `args`.
fn fdlcp(dir: &Path, args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdlcp"))
        .current_dir(dir)
        .args(args.split_whitespace())
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ok(dir: &Path, args: &str) -> Output {
    let out = fdlcp(dir, args);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(code(&out), 0, "{args}: {stderr}");
    out
}

fn image(dir: &Path, name: &str) -> Image64 {
    load_cimg(dir.join(name)).unwrap()
}

fn dist(a: &Image64, b: &Image64) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(p, q)| (p - q).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn manifest(dir: &Path, out: &str) -> RunManifest {
    let text = fs::read_to_string(dir.join(format!("{out}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn simulated(d: &Path, size: usize, rate: f64) {
    ok(d, &format!("phantom --size {size} --out x.cimg"));
    ok(
        d,
        &format!("mask --pattern random2d --rate {rate} --size {size} --seed 2 --out m.cimg"),
    );
    ok(d, "simulate --image x.cimg --mask m.cimg --out y.cimg");
}

#[test]
fn phantom_command() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, "phantom --size 128 --kind shepp_logan --out a.cimg");
    ok(d, "phantom --size 128 --kind shepp_logan --out b.cimg");
    let a = image(d, "a.cimg");
    assert_eq!(a.dims(), (128, 128));
    assert_eq!(a.peak(), 1.0);
    assert_eq!(
        fs::read(d.join("a.cimg")).unwrap(),
        fs::read(d.join("b.cimg")).unwrap()
    );
    let m = manifest(d, "a.cimg");
    assert_eq!(m.outputs, vec![d.join("a.cimg")]);
    assert_eq!(m.config["size"], 128);

    assert_eq!(code(&fdlcp(d, "phantom --size 16 --out c.cimg")), 2);
    assert!(!d.join("c.cimg").exists());
    assert_eq!(code(&fdlcp(d, "phantom --kind spiral --out c.cimg")), 2);
}

#[test]
fn mask_command() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let out = ok(
        d,
        "mask --pattern cartesian --rate 1.0 --size 64 --out full.cimg",
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("achieved rate 1"));
    let full = SamplingMask::from_image(&image(d, "full.cimg")).unwrap();
    assert!(full.is_full());

    ok(
        d,
        "mask --pattern cartesian --rate 0.33 --seed 7 --out c1.cimg",
    );
    ok(
        d,
        "mask --pattern cartesian --rate 0.33 --seed 7 --out c2.cimg",
    );
    assert_eq!(
        fs::read(d.join("c1.cimg")).unwrap(),
        fs::read(d.join("c2.cimg")).unwrap()
    );

    for size in [128, 256] {
        ok(
            d,
            &format!("mask --pattern radial --rate 0.18 --size {size} --out r.cimg"),
        );
        let rate = SamplingMask::from_image(&image(d, "r.cimg"))
            .unwrap()
            .rate();
        assert!((0.18..=0.20).contains(&rate), "{size}: {rate}");
        assert_eq!(manifest(d, "r.cimg").config["achieved_rate"], rate);
    }

    for bad in ["0", "1.5", "-0.2"] {
        let out = fdlcp(
            d,
            &format!("mask --pattern random2d --rate={bad} --out x.cimg"),
        );
        assert_eq!(code(&out), 2, "rate {bad}");
    }
}

#[test]
fn simulate_and_zerofill_round_trip() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    simulated(d, 64, 0.3);
    ok(
        d,
        "mask --pattern cartesian --rate 1 --size 64 --out full.cimg",
    );
    ok(d, "simulate --image x.cimg --mask full.cimg --out yf.cimg");

    let x = image(d, "x.cimg");
    let y = image(d, "y.cimg");
    let mask = SamplingMask::from_image(&image(d, "m.cimg")).unwrap();
    for (v, &k) in y.data().iter().zip(mask.kept()) {
        if !k {
            assert_eq!(v.norm(), 0.0);
        }
    }
    assert!(y.norm() <= x.norm());

    ok(
        d,
        "recon --kspace yf.cimg --mask full.cimg --method zerofill --truth x.cimg --out z.cimg",
    );
    let z = image(d, "z.cimg");
    assert!(dist(&z, &x) <= 1e-12 * x.norm());
    let csv = fs::read_to_string(d.join("z.cimg.metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(METRIC_CSV_HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[3], "zerofill");
    assert!(row[5].parse::<f64>().unwrap() < 1e-12);
}

#[test]
fn recon_records_default_settings_and_flags_non_convergence() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    simulated(d, 32, 0.4);

    let out = fdlcp(
        d,
        "recon --kspace y.cimg --mask m.cimg --max-iter 3 --trace t.csv --out r.cimg",
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("iteration limit"));
    assert_eq!(image(d, "r.cimg").dims(), (32, 32));
    let trace = fs::read_to_string(d.join("t.csv")).unwrap();
    assert_eq!(trace.lines().count(), 4);

    let m = manifest(d, "r.cimg");
    let c = &m.config;
    assert_eq!(c["method"], "fdlcp");
    assert_eq!(c["patch_size"], 8);
    assert_eq!(c["directions"], 71);
    assert_eq!(c["eta"], 0.2);
    assert_eq!(c["updates"], 1);
    assert_eq!(c["epsilon"], 1e-4);
    assert_eq!(c["penalty"], "l1");
    assert_eq!(c["beta"], 1e2);
    assert_eq!(m.inputs, vec![d.join("y.cimg"), d.join("m.cimg")]);
    assert_eq!(m.output_dir, d.to_path_buf());

    ok(
        d,
        "recon --kspace y.cimg --mask m.cimg --method zerofill --out z.cimg",
    );
    let l0 = fdlcp(
        d,
        "recon --kspace y.cimg --mask m.cimg --method sidwt --penalty l0 --max-iter 2 --out s.cimg",
    );
    assert_eq!(code(&l0), 3);
    assert_eq!(manifest(d, "s.cimg").config["beta"], 1e3);

    let missing = fdlcp(d, "recon --kspace nope.cimg --mask m.cimg --out q.cimg");
    assert_eq!(code(&missing), 2);
    let bad_flag = fdlcp(
        d,
        "recon --kspace y.cimg --mask m.cimg --method cg --out q.cimg",
    );
    assert_eq!(code(&bad_flag), 2);
    let unwritable = fdlcp(
        d,
        "recon --kspace y.cimg --mask m.cimg --method zerofill --out no/such/dir/q.cimg",
    );
    assert_eq!(code(&unwritable), 4);
}

#[test]
fn sweep_command() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, "phantom --size 32 --out x.cimg");
    ok(
        d,
        "sweep-sparsity --image x.cimg --fractions 0.1,0.5,1 --out s.csv",
    );
    let csv = fs::read_to_string(d.join("s.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(SWEEP_CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 12);
    for r in rows.iter().filter(|r| r[1] == "1") {
        assert!(r[2].parse::<f64>().unwrap() < 1e-10, "{r:?}");
    }

    let bad = fdlcp(
        d,
        "sweep-sparsity --image x.cimg --transforms haar2d,wavelet --out b.csv",
    );
    assert_eq!(code(&bad), 2);
}

#[test]
fn eval_command() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, "phantom --size 32 --out x.cimg");
    ok(d, "eval --recon x.cimg --truth x.cimg --out e.csv");
    ok(
        d,
        "eval --recon x.cimg --truth x.cimg --method sidwt --out e.csv",
    );
    let csv = fs::read_to_string(d.join("e.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], METRIC_CSV_HEADER);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 7);
        assert_eq!(f[5].parse::<f64>().unwrap(), 0.0);
        assert_eq!(f[6].parse::<f64>().unwrap(), 1.0);
    }
    assert!(csv.ends_with('\n') && !csv.contains('\r'));

    let missing = fdlcp(d, "eval --recon gone.cimg --truth x.cimg --out e.csv");
    assert_eq!(code(&missing), 2);
    fs::write(d.join("other.csv"), "a,b\n").unwrap();
    let clash = fdlcp(d, "eval --recon x.cimg --truth x.cimg --out other.csv");
    assert_eq!(code(&clash), 2);
}

#[test]
fn replay_reproduces_outputs_from_another_directory() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    simulated(d, 32, 0.5);
    let first = fdlcp(
        d,
        "--threads 1 recon --kspace y.cimg --mask m.cimg --T 0 --max-iter 15 --out r.cimg",
    );
    assert!(matches!(code(&first), 0 | 3));
    assert_eq!(manifest(d, "r.cimg").threads, 1);

    let elsewhere = TempDir::new().unwrap();
    let e = elsewhere.path();
    for name in ["x.cimg", "m.cimg", "y.cimg", "r.cimg"] {
        let recorded = d.join(format!("{name}.manifest.json"));
        let target = e.join(name);
        let replay = fdlcp(
            e,
            &format!(
                "replay --manifest {} --out {}",
                recorded.display(),
                target.display()
            ),
        );
        let expected = if name == "r.cimg" { code(&first) } else { 0 };
        assert_eq!(code(&replay), expected, "{name}");
        assert_eq!(
            fs::read(d.join(name)).unwrap(),
            fs::read(&target).unwrap(),
            "{name}"
        );
    }
    assert_eq!(code(&fdlcp(d, "replay --manifest absent.json")), 2);
}
