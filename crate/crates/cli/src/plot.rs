//! Two-panel SVG of a Monte Carlo trajectory: distortions on the left,
//! variance on the right.

use jlsampler::mcsim::Trajectory;
use plotters::prelude::*;

use crate::error::{CliError, CliResult};

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo.min(0.0), hi + pad)
}

pub fn trajectory_svg(traj: &Trajectory) -> CliResult<String> {
    let err = |e: String| CliError::Io(format!("svg: {e}"));
    let rows = &traj.rows;
    let x_max = rows.last().map(|r| r.iter as f64).unwrap_or(1.0).max(1.0);
    let mut out = String::new();
    {
        let root = SVGBackend::with_string(&mut out, (1000, 400)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| err(e.to_string()))?;
        let (left, right) = root.split_horizontally(500);

        let (lo, hi) = range(
            rows.iter()
                .flat_map(|r| [r.sampled_distortion, r.mean_matrix_distortion]),
        );
        let mut c = ChartBuilder::on(&left)
            .caption("max distortion", ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(32)
            .y_label_area_size(48)
            .build_cartesian_2d(0f64..x_max, lo..hi)
            .map_err(|e| err(e.to_string()))?;
        c.configure_mesh()
            .x_desc("iteration")
            .draw()
            .map_err(|e| err(e.to_string()))?;
        c.draw_series(LineSeries::new(
            rows.iter().map(|r| (r.iter as f64, r.sampled_distortion)),
            &BLUE,
        ))
        .map_err(|e| err(e.to_string()))?
        .label("sampled matrix")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], BLUE));
        c.draw_series(LineSeries::new(
            rows.iter().map(|r| (r.iter as f64, r.mean_matrix_distortion)),
            &RED,
        ))
        .map_err(|e| err(e.to_string()))?
        .label("mean matrix")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], RED));
        c.configure_series_labels()
            .border_style(BLACK)
            .background_style(WHITE)
            .draw()
            .map_err(|e| err(e.to_string()))?;

        let (lo, hi) = range(rows.iter().map(|r| r.sigma2));
        let mut c = ChartBuilder::on(&right)
            .caption("variance", ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(32)
            .y_label_area_size(48)
            .build_cartesian_2d(0f64..x_max, lo..hi)
            .map_err(|e| err(e.to_string()))?;
        c.configure_mesh()
            .x_desc("iteration")
            .draw()
            .map_err(|e| err(e.to_string()))?;
        c.draw_series(LineSeries::new(rows.iter().map(|r| (r.iter as f64, r.sigma2)), &BLACK))
            .map_err(|e| err(e.to_string()))?;
        root.present().map_err(|e| err(e.to_string()))?;
    }
    Ok(out)
}
