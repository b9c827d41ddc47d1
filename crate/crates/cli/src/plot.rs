use std::path::Path;

use lieq_core::verify::{CheckReport, Series};
use plotters::coord::ranged1d::{AsRangedCoord, ValueFormatter};
use plotters::prelude::*;

const COLORS: [RGBColor; 5] = [BLUE, RED, GREEN, MAGENTA, BLACK];

fn range(values: impl Iterator<Item = f64>, log: bool) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite() && (!log || *v > 0.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    Some(if lo == hi { (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0)) } else { (lo, hi) })
}

fn draw<X, Y>(root: DrawingArea<SVGBackend, plotters::coord::Shift>, title: &str, series: &[Series], x: X, y: Y) -> Result<(), Box<dyn std::error::Error>>
where
    X: AsRangedCoord<Value = f64>,
    Y: AsRangedCoord<Value = f64>,
    X::CoordDescType: ValueFormatter<f64>,
    Y::CoordDescType: ValueFormatter<f64>,
{
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(64)
        .build_cartesian_2d(x, y)?;
    chart.configure_mesh().draw()?;
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<(f64, f64)> = s.x.iter().copied().zip(s.y.iter().copied()).filter(|(_, y)| y.is_finite()).collect();
        chart
            .draw_series(LineSeries::new(points.clone(), color.stroke_width(2)))?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
        chart.draw_series(points.into_iter().map(|p| Circle::new(p, 3, color.filled())))?;
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
    root.present()?;
    Ok(())
}

/// Line chart of a report's series; log–log when every series asks for it.
/// Returns `false` when there is nothing to plot.
pub fn write_svg(report: &CheckReport, path: &Path) -> Result<bool, Box<dyn std::error::Error>> {
    if report.series.is_empty() {
        return Ok(false);
    }
    let log = report.series.iter().all(|s| s.loglog);
    let xs = report.series.iter().flat_map(|s| s.x.iter().copied());
    let ys = report.series.iter().flat_map(|s| s.y.iter().copied());
    let (Some(xr), Some(yr)) = (range(xs, log), range(ys, log)) else {
        return Ok(false);
    };
    let root = SVGBackend::new(path, (640, 420)).into_drawing_area();
    let title = format!("{} ({})", report.name, report.geometry);
    if log {
        draw(root, &title, &report.series, (xr.0..xr.1).log_scale(), (yr.0..yr.1).log_scale())?;
    } else {
        draw(root, &title, &report.series, xr.0..xr.1, yr.0..yr.1)?;
    }
    Ok(true)
}
