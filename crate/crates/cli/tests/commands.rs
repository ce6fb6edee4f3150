use std::path::{Path, PathBuf};
use std::process::Command as Process;

use ccid_cli::{run, Cli};
use ccid_core::filters::gaussian_filter;
use ccid_core::imagecore::{load_image, save_image, to_bytes};
use ccid_core::models::{ConfidenceNetSpec, DenoiserSpec};
use ccid_core::nn::save_params;
use ccid_core::synthetic;
use clap::Parser;
use tempfile::TempDir;

fn cli(args: &[&str]) -> anyhow::Result<()> {
    run(Cli::try_parse_from(std::iter::once("ccid").chain(args.iter().copied()))?)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Untrained but well-formed models plus one noisy scene.
struct Fixture {
    dir: TempDir,
    denoiser: PathBuf,
    confidence: PathBuf,
    clean: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let denoiser = dir.path().join("denoiser.params");
    let confidence = dir.path().join("confidence.params");
    save_params(&DenoiserSpec::new(3, 4).unwrap().init(1), &denoiser).unwrap();
    save_params(&ConfidenceNetSpec.init(2), &confidence).unwrap();
    let clean = dir.path().join("clean.png");
    save_image(&synthetic::scene(44, 52, 3), &clean).unwrap();
    Fixture {
        dir,
        denoiser,
        confidence,
        clean,
    }
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

fn csv_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn denoise_writes_all_outputs_and_respects_endpoints() {
    let f = fixture();
    for (w, same_as) in [("0", "reliable.png"), ("1", "dnn.png")] {
        let out = f.dir.path().join(format!("out{w}"));
        cli(&[
            "denoise", "-i", s(&f.clean), "--noise-sigma", "25", "--denoiser", s(&f.denoiser),
            "--confidence", s(&f.confidence), "-w", w, "--method", "dwt", "-o", s(&out),
        ])
        .unwrap();
        for name in ["reliable.png", "dnn.png", "residual.png", "fused.png"] {
            assert_eq!(load_image(out.join(name)).unwrap().dims(), (44, 52), "{name}");
        }
        let conf = image::open(out.join("confidence.png")).unwrap();
        assert_eq!((conf.height(), conf.width()), (48, 56));
        assert_eq!(read(&out.join("fused.png")), read(&out.join(same_as)));
        let leftovers = std::fs::read_dir(&out).unwrap().filter(|e| {
            e.as_ref().unwrap().file_name().to_string_lossy().starts_with(".partial")
        });
        assert_eq!(leftovers.count(), 0);
    }
}

#[test]
fn missing_model_is_named_and_leaves_no_outputs() {
    let f = fixture();
    let out = f.dir.path().join("out");
    let missing = f.dir.path().join("nowhere.params");
    let err = cli(&[
        "denoise", "-i", s(&f.clean), "--denoiser", s(&f.denoiser), "--confidence", s(&missing),
        "-o", s(&out),
    ])
    .unwrap_err();
    assert!(format!("{err:#}").contains(s(&missing)), "{err:#}");
    assert!(!out.exists() || std::fs::read_dir(&out).unwrap().count() == 0);

    let output = Process::new(env!("CARGO_BIN_EXE_ccid"))
        .args(["fuse", "-i", s(&f.clean), "--denoiser", s(&missing), "-o", s(&out.join("x.png"))])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains(s(&missing)));
}

#[test]
fn sweep_csv_rows_and_monotone_oracle() {
    let f = fixture();
    let clean = load_image(&f.clean).unwrap();
    let blurred = f.dir.path().join("blurred.png");
    save_image(&gaussian_filter(&clean, 4.0).unwrap(), &blurred).unwrap();
    let csv_path = f.dir.path().join("sweep.csv");
    cli(&[
        "sweep", "--reliable", s(&blurred), "--hallucinatory", s(&f.clean), "--clean", s(&f.clean),
        "--grid", "0,0.5,1", "-o", s(&csv_path),
    ])
    .unwrap();
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("w,psnr,ssim,mse\n"));
    assert_eq!(csv_rows(&csv).len(), 3);
    assert!(csv.contains("# best_psnr_w=1\n"), "{csv}");

    let fused_dir = f.dir.path().join("fused");
    cli(&[
        "sweep", "--reliable", s(&blurred), "--hallucinatory", s(&f.clean), "--clean", s(&f.clean),
        "--steps", "10", "--method", "dwt", "-o", s(&csv_path), "--fused-dir", s(&fused_dir),
    ])
    .unwrap();
    let rows = csv_rows(&std::fs::read_to_string(&csv_path).unwrap());
    assert_eq!(rows.len(), 11);
    assert!(rows.windows(2).all(|p| p[1][1] >= p[0][1]), "{rows:?}");
    assert_eq!(std::fs::read_dir(&fused_dir).unwrap().count(), 11);

    let err = cli(&["sweep", "-i", s(&f.clean), "--denoiser", s(&f.denoiser)]).unwrap_err();
    assert!(format!("{err}").contains("ground truth"));
}

#[test]
fn super_resolution_fuse_reaches_the_hr_image() {
    let f = fixture();
    let high = synthetic::scene(32, 40, 9);
    let low = ccid_core::Image::from_fn(8, 10, |y, x| high[(4 * y, 4 * x)]);
    let (hp, lp) = (f.dir.path().join("hr.png"), f.dir.path().join("lr.png"));
    save_image(&high, &hp).unwrap();
    save_image(&low, &lp).unwrap();
    let out = f.dir.path().join("sr.png");
    cli(&["fuse", "-i", s(&lp), "--mode", "super-resolution", "--hr", s(&hp), "-w", "1", "-o", s(&out)]).unwrap();
    assert_eq!(read(&out), read(&hp));
    cli(&["fuse", "-i", s(&lp), "--mode", "super-resolution", "--hr", s(&hp), "-w", "0.4", "-o", s(&out)]).unwrap();
    assert_eq!(load_image(&out).unwrap().dims(), (32, 40));
    assert!(cli(&["fuse", "-i", s(&lp), "--mode", "super-resolution", "--hr", s(&hp), "--guided"]).is_err());
}

#[test]
fn dataset_cache_is_reused_through_the_environment_override() {
    let f = fixture();
    let corpus = f.dir.path().join("corpus");
    cli(&["synth-corpus", "-o", s(&corpus), "--count", "2", "--height", "40", "--width", "48"]).unwrap();
    let cache = f.dir.path().join("cache");
    let gen = || {
        let out = Process::new(env!("CARGO_BIN_EXE_ccid"))
            .args(["gen-dataset", "--corpus", s(&corpus), "--denoiser", s(&f.denoiser), "--seed", "4"])
            .env("CCID_CACHE_DIR", &cache)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    assert!(gen().contains("16 items"));
    let listing = |dir: &Path| {
        let mut v: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name(), e.metadata().unwrap().modified().unwrap())
            })
            .collect();
        v.sort();
        v
    };
    let before = listing(&cache);
    assert_eq!(before.len(), 16);
    assert!(gen().contains("(0 computed, 16 reused)"));
    assert_eq!(listing(&cache), before);
}

#[test]
fn training_commands_write_one_loss_row_per_epoch_and_are_seeded() {
    let f = fixture();
    let corpus = f.dir.path().join("corpus");
    cli(&["synth-corpus", "-o", s(&corpus), "--count", "2", "--height", "40", "--width", "40"]).unwrap();
    let model = f.dir.path().join("models/den.params");
    cli(&[
        "train-denoiser", "--corpus", s(&corpus), "--depth", "3", "--width", "4", "--epochs", "3",
        "--batch-size", "4", "-o", s(&model),
    ])
    .unwrap();
    let csv = std::fs::read_to_string(model.with_extension("csv")).unwrap();
    assert!(csv.starts_with("epoch,loss\n"));
    assert_eq!(csv_rows(&csv).len(), 3);

    let cache = f.dir.path().join("cache");
    let train = |name: &str| {
        let out = f.dir.path().join(name);
        cli(&[
            "train-confidence", "--corpus", s(&corpus), "--denoiser", s(&model), "--cache-dir", s(&cache),
            "--epochs", "2", "--batch-size", "4", "--p-over", "4", "--p-under", "1", "--seed", "7",
            "-o", s(&out),
        ])
        .unwrap();
        (std::fs::read_to_string(out.with_extension("csv")).unwrap(), read(&out))
    };
    let (first, params) = train("a.params");
    assert_eq!(csv_rows(&first).len(), 2);
    assert!(first.starts_with("epoch,train_loss,val_loss\n"));
    assert_eq!(train("b.params"), (first, params));
}

#[tokio::test(flavor = "multi_thread")]
async fn service_metrics_match_the_sweep_rows() {
    use axum::body::Body;
    use axum::http::Request;
    use http_body_util::BodyExt;
    use tower::ServiceExt;

    let f = fixture();
    let csv_path = f.dir.path().join("sweep.csv");
    let noisy_path = f.dir.path().join("noisy.png");
    // Both interfaces start from the same 8-bit noisy image.
    let clean = load_image(&f.clean).unwrap();
    let noisy = ccid_core::imagecore::add_noise(&clean, &ccid_core::NoiseSpec::gaussian(20.0, 5)).unwrap();
    save_image(&noisy, &noisy_path).unwrap();
    cli(&[
        "sweep", "-i", s(&noisy_path), "--clean", s(&f.clean), "--denoiser", s(&f.denoiser),
        "--grid", "0,0.3,0.7", "--method", "dwt_corr", "-o", s(&csv_path),
    ])
    .unwrap();
    let rows = csv_rows(&std::fs::read_to_string(&csv_path).unwrap());

    let denoiser = ccid_cli::load_denoiser(&f.denoiser).unwrap();
    let state = ccid_service::AppState::new(ccid_core::pipeline::Pipeline::new(Some(denoiser), None).unwrap());
    let boundary = "b0undary";
    let mut body = Vec::new();
    for (name, path) in [("image", &noisy_path), ("clean", &f.clean)] {
        body.extend(format!("--{boundary}\r\nContent-Disposition: form-data; name=\"{name}\"; filename=\"x.png\"\r\n\r\n").bytes());
        body.extend(read(path));
        body.extend(b"\r\n");
    }
    body.extend(format!("--{boundary}--\r\n").bytes());
    let app = ccid_service::router(state);
    let req = Request::post("/api/sessions")
        .header("content-type", format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(body))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let created: serde_json::Value = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
    let id = created["id"].as_str().unwrap();
    for row in rows {
        let uri = format!("/api/sessions/{id}/metrics?method=dwt_corr&w={}", row[0]);
        let resp = app.clone().oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
        let m: serde_json::Value = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
        for (i, key) in [(1, "psnr"), (2, "ssim"), (3, "mse")] {
            let v = m[key].as_f64().unwrap();
            assert!((v - row[i]).abs() <= 1e-5 * v.abs(), "{key} at w={}: {v} vs {}", row[0], row[i]);
        }
    }

    let fused = f.dir.path().join("f.png");
    cli(&[
        "fuse", "-i", s(&noisy_path), "--denoiser", s(&f.denoiser), "--method", "dwt_corr", "-w", "0.3",
        "-o", s(&fused),
    ])
    .unwrap();
    let uri = format!("/api/sessions/{id}/fused?method=dwt_corr&w=0.3");
    let resp = app.oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
    let served = resp.into_body().collect().await.unwrap().to_bytes();
    let served = ccid_core::imagecore::decode_image(&served).unwrap();
    assert_eq!(to_bytes(&served), to_bytes(&load_image(&fused).unwrap()));
}
