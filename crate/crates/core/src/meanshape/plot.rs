use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointSet};
use crate::rng::RandomSource;

use super::shapes::{draw_shape, ShapeDistributionSpec};

const SIZE: f64 = 400.0;
const SILHOUETTE_DRAWS: usize = 20;
const SILHOUETTE_STREAM: u64 = 99;

/// SVG with the distribution's silhouette (gray scatter of 20 draws) under `x` (red).
/// Output depends only on the inputs.
pub fn render_svg(x: &PointSet, spec: &ShapeDistributionSpec) -> Result<String> {
    x.validate_nonempty()?;
    spec.validate()?;
    let mut rng = RandomSource::new(spec.seed).split(SILHOUETTE_STREAM);
    let mut silhouette = Vec::with_capacity(SILHOUETTE_DRAWS * spec.n_points);
    for _ in 0..SILHOUETTE_DRAWS {
        silhouette.extend(draw_shape(spec, &mut rng)?.into_inner());
    }

    // Fit the unit canvas plus anything that strays outside it, keeping a square aspect.
    let (lo, hi) = x
        .iter()
        .chain(&silhouette)
        .fold((Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 0.0)), |(lo, hi), p| (lo.min(p), hi.max(p)));
    let span = (hi.x - lo.x).max(hi.y - lo.y);
    let scale = (SIZE - 2.0 * (SIZE * 0.05)) / span;
    let to_px = |p: &Point3| {
        let px = SIZE * 0.05 + (p.x - lo.x) * scale;
        let py = SIZE - (SIZE * 0.05 + (p.y - lo.y) * scale);
        (px, py)
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SIZE} {SIZE}" width="{SIZE}" height="{SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(svg, r##"<g fill="#b0b0b0" fill-opacity="0.35">"##);
    for p in &silhouette {
        let (px, py) = to_px(p);
        let _ = writeln!(svg, r#"<circle cx="{px:.3}" cy="{py:.3}" r="1.2"/>"#);
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r##"<g fill="#d62728">"##);
    for p in x.iter() {
        let (px, py) = to_px(p);
        let _ = writeln!(svg, r#"<circle cx="{px:.3}" cy="{py:.3}" r="2.2"/>"#);
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(x: &PointSet, spec: &ShapeDistributionSpec, path: &Path) -> Result<()> {
    let svg = render_svg(x, spec)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanshape::shapes::Family;

    fn spec() -> ShapeDistributionSpec {
        let mut s = ShapeDistributionSpec::new(Family::default_for("bar_disk").unwrap());
        s.n_points = 32;
        s
    }

    #[test]
    fn empty_x_rejected() {
        assert!(matches!(render_svg(&PointSet::default(), &spec()), Err(Error::EmptySet)));
    }

    #[test]
    fn deterministic_bytes() {
        let x = PointSet::from_arrays(&[[0.1, 0.2, 0.0], [1.5, -0.3, 0.0]]);
        assert_eq!(render_svg(&x, &spec()).unwrap(), render_svg(&x, &spec()).unwrap());
    }

    #[test]
    fn every_circle_inside_view_box() {
        let x = PointSet::from_arrays(&[[0.1, 0.2, 0.0], [1.5, -0.3, 0.0], [-2.0, 3.0, 0.0]]);
        let svg = render_svg(&x, &spec()).unwrap();
        let mut circles = 0;
        for line in svg.lines().filter(|l| l.starts_with("<circle")) {
            let attr = |name: &str| -> f64 {
                let key = format!("{name}=\"");
                let start = line.find(&key).unwrap() + key.len();
                let end = start + line[start..].find('"').unwrap();
                line[start..end].parse().unwrap()
            };
            let (cx, cy) = (attr("cx"), attr("cy"));
            assert!((0.0..=SIZE).contains(&cx) && (0.0..=SIZE).contains(&cy), "{line}");
            circles += 1;
        }
        assert_eq!(circles, 20 * 32 + 3);
    }
}
