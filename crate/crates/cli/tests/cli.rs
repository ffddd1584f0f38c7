use std::path::Path;
use std::process::{Command, Output};

use screenmark::io::{read_json, save_image};
use screenmark::metrics::iou;
use screenmark::synth::natural_rgb;
use screenmark::Quadrilateral;

fn sm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_screenmark"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn params_and_overrides() {
    let o = sm(&["params"]);
    assert!(o.status.success());
    let t = text(&o);
    assert!(t.contains("mark.target_psnr = 34.5"));
    assert!(t.contains("detect.t_ihm = 4"));
    assert!(t.contains("bbox.alpha = 13"));

    let o = sm(&["params", "--set", "bbox.beta=20", "--nominal", "640x480"]);
    assert!(o.status.success());
    assert!(text(&o).contains("bbox.beta = 20"));
    assert!(text(&o).contains("payload.nominal_size = [640,480]"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.conf");
    std::fs::write(&cfg, "# stricter\ndetect.t_ihm = 6\n").unwrap();
    let o = sm(&["params", "--config", p(&cfg)]);
    assert!(text(&o).contains("detect.t_ihm = 6"));

    let o = sm(&["params", "--set", "mark.bogus=1"]);
    assert!(!o.status.success());
    assert!(text(&o).contains("unknown key"));
}

#[test]
fn embed_simulate_locate_extract() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    save_image(&d("cover.png"), &natural_rgb(2048, 1536, 11)).unwrap();

    let o = sm(&["embed", "--in", p(&d("cover.png")), "--out", p(&d("marked.png")), "--psnr", "34.5", "--payload", "b7e1"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("100.0% in band"));

    let o = sm(&[
        "simulate", "--in", p(&d("marked.png")), "--out", p(&d("shot.png")),
        "--area", "0.5", "--angle", "10", "--seed", "3", "--preset", "clean",
    ]);
    assert!(o.status.success(), "{}", text(&o));
    let truth: Quadrilateral = read_json(&d("shot.json")).unwrap();

    let o = sm(&[
        "locate", "--in", p(&d("shot.png")), "--report", p(&d("report.json")),
        "--annotate", p(&d("ann.png")), "--quad", p(&d("found.json")),
        "--expect", "b7e1", "--nominal", "2048x1536", "--rectified", p(&d("rect.png")),
    ]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("located"), "{}", text(&o));
    let found: Quadrilateral = read_json(&d("found.json")).unwrap();
    assert!(iou(&found, &truth) >= 0.9, "iou {}", iou(&found, &truth));
    let report: serde_json::Value = read_json(&d("report.json")).unwrap();
    assert_eq!(report["status"], "located");
    assert_eq!(report["nc"], 1.0);
    assert!(d("ann.png").exists() && d("rect.png").exists());

    let o = sm(&[
        "extract", "--in", p(&d("shot.png")), "--quad", p(&d("shot.json")),
        "--payload-out", p(&d("payload.json")), "--expect", "b7e1", "--nominal", "2048x1536",
    ]);
    assert!(o.status.success(), "{}", text(&o));
    let pay: serde_json::Value = read_json(&d("payload.json")).unwrap();
    assert_eq!(pay["bits"], "b7e1");
    assert_eq!(pay["nc"], 1.0);
    assert!(pay["windowsUsed"].as_u64().unwrap() > 0);
}

#[test]
fn unmarked_and_broken_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cover = dir.path().join("cover.png");
    save_image(&cover, &natural_rgb(1024, 768, 12)).unwrap();
    let report = dir.path().join("r.json");
    let o = sm(&["locate", "--in", p(&cover), "--report", p(&report)]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("no watermark found"));
    let r: serde_json::Value = read_json(&report).unwrap();
    assert_eq!(r["status"], "no_watermark_found");

    let bad = dir.path().join("bad.png");
    std::fs::write(&bad, b"not an image").unwrap();
    let o = sm(&["locate", "--in", p(&bad)]);
    assert!(!o.status.success());
    assert!(text(&o).contains("bad.png"), "{}", text(&o));

    let o = sm(&["embed", "--in", p(&cover), "--out", p(&dir.path().join("x.png")), "--payload", "zz"]);
    assert!(!o.status.success());
}

#[test]
fn eval_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.csv");
    let csv = dir.path().join("out.csv");
    std::fs::write(&manifest, "image_id,path\n").unwrap();
    let o = sm(&["eval", "--manifest", p(&manifest), "--grid", "psnr=34.5;area=0.5;angle=0", "--csv", p(&csv)]);
    assert!(o.status.success(), "{}", text(&o));
    assert_eq!(
        std::fs::read_to_string(&csv).unwrap(),
        "image_id,psnr_constraint,area_proportion,angle_offset,iou,nc,runtime_ms\n"
    );

    std::fs::write(&manifest, "image_id,path\nghost,ghost.png\n").unwrap();
    let o = sm(&["eval", "--manifest", p(&manifest), "--csv", p(&csv)]);
    assert!(o.status.success(), "{}", text(&o));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1);

    let o = sm(&["eval", "--manifest", p(&manifest), "--grid", "tilt=4", "--csv", p(&csv)]);
    assert!(!o.status.success());
}
