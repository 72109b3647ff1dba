use hdclt_runner::plot::{emit_plot, PlotKind, PlotPoint};
use hdclt_runner::RunnerError;

#[test]
fn single_point_gives_one_marker() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.svg");
    let info = emit_plot(&[PlotPoint { x: 2.0, y: 0.3, se: 0.01 }], PlotKind::LogLog, "t", "x", "y", &path).unwrap();
    assert_eq!(info.points, 1);
    assert!(info.fit.is_none());
    let svg = std::fs::read_to_string(&path).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("class=\"marker\"").count(), 1);
}

#[test]
fn power_law_slope_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pow.svg");
    let pts: Vec<PlotPoint> =
        [250.0f64, 500.0, 1000.0, 2000.0].iter().map(|x| PlotPoint { x: *x, y: x.powf(-0.5), se: 0.0 }).collect();
    let info = emit_plot(&pts, PlotKind::LogLog, "power law", "n", "y", &path).unwrap();
    let fit = info.fit.unwrap();
    assert!((fit.slope + 0.5).abs() < 1e-12, "{fit:?}");
    let svg = std::fs::read_to_string(&path).unwrap();
    let attr = svg.split("data-slope=\"").nth(1).unwrap().split('"').next().unwrap();
    assert!((attr.parse::<f64>().unwrap() + 0.5).abs() < 1e-12);
    assert!(svg.contains("slope = -0.5000"));
}

#[test]
fn empty_series_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.svg");
    assert!(matches!(emit_plot(&[], PlotKind::Linear, "t", "x", "y", &path), Err(RunnerError::EmptySeries)));
    assert!(!path.exists());
}

#[test]
fn linear_plot_has_error_bars_and_no_fit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lin.svg");
    let pts = [PlotPoint { x: 0.0, y: -1.0, se: 0.5 }, PlotPoint { x: 1.0, y: 1.0, se: 0.5 }];
    let info = emit_plot(&pts, PlotKind::Linear, "a < b & c", "x", "y", &path).unwrap();
    assert!(info.fit.is_none());
    let svg = std::fs::read_to_string(&path).unwrap();
    assert_eq!(svg.matches("stroke=\"gray\"").count(), 2);
    assert!(svg.contains("a &lt; b &amp; c"));
}
