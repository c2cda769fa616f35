//! LaTeX route through the bundled mathtext helper. Skipped when python3 with
//! matplotlib is not installed.

use std::path::PathBuf;
use std::process::Command;

use lomo_core::corpus::Instance;
use lomo_core::pipeline::{curate, PipelineConfig};
use lomo_core::render::{render_latex, render_routed, LatexError, RenderConfig, Route};

fn helper() -> Option<String> {
    let ok = Command::new("python3")
        .args(["-c", "import matplotlib"])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false);
    if !ok {
        eprintln!("python3 with matplotlib not found; skipping");
        return None;
    }
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scripts/render_mathtext.py");
    Some(format!(
        "python3 '{}' {{input_txt}} {{output_png}} {{math_font_size}}",
        script.display()
    ))
}

fn config(template: String) -> RenderConfig {
    RenderConfig {
        latex_command_template: Some(template),
        latex_timeout_secs: 60.0,
        ..RenderConfig::default()
    }
}

#[test]
fn math_span_renders_through_helper() {
    let Some(t) = helper() else { return };
    let c = render_routed(r"area $\pi r^2$ here", &config(t));
    assert_eq!(c.route, Route::Latex);
    assert!(c.width() > 20 && c.height() > 5);
    assert!(c.image.pixels().any(|p| p.0[0] < 128));
}

#[test]
fn invalid_math_falls_back() {
    let Some(t) = helper() else { return };
    let cfg = config(t);
    assert!(matches!(
        render_latex(r"broken $\frac{$ math", &cfg),
        Err(LatexError::NonZeroExit { .. })
    ));
    let c = render_routed(r"broken $\frac{$ and $x^{$", &cfg);
    assert_eq!(c.route, Route::LatexFallbackText);
}

#[test]
fn plain_span_skips_latex() {
    let Some(t) = helper() else { return };
    assert_eq!(render_routed("no math in here", &config(t)).route, Route::Text);
}

#[test]
fn curate_records_latex_route() {
    let Some(t) = helper() else { return };
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    let line = serde_json::to_string(&Instance::text_only("m1", r"Compute $\int_0^1 x\,dx$ exactly.", "1/2")).unwrap();
    std::fs::write(&input, line + "\n").unwrap();
    let output = dir.path().join("out.jsonl");
    let mut cfg = PipelineConfig {
        rewrite_ratio: 1.0,
        distortion_enabled: false,
        workers: 1,
        ..PipelineConfig::default()
    };
    cfg.render = config(t);
    let outcome = curate(&input, &output, &cfg).unwrap();
    let carrier = &outcome.manifest.per_instance_records[0].carriers[0];
    assert_eq!(carrier.route, Route::Latex);
    assert_eq!(outcome.stats.route_histogram.get("latex"), Some(&1));
}
