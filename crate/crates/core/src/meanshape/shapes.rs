//! The four synthetic shape families and uniform sampling along their outlines.
//!
//! All shapes live on the unit-square canvas at z = 0. Geometry constants are
//! defaults that every spec document may override.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point3, PointSet};
use crate::rng::RandomSource;

pub const DEFAULT_N_POINTS: usize = 256;
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircleRadius {
    pub center: [f64; 2],
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for CircleRadius {
    fn default() -> Self {
        CircleRadius { center: [0.5, 0.5], r_min: 0.2, r_max: 0.4 }
    }
}

/// An arc with triangular teeth, translated by `t·(1, 1)` with `t` uniform in
/// `[travel_min, travel_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpikyArc {
    /// Arc center at zero travel.
    pub start: [f64; 2],
    pub radius: f64,
    pub angle_start_deg: f64,
    pub angle_end_deg: f64,
    pub spikes: usize,
    pub spike_height: f64,
    pub travel_min: f64,
    pub travel_max: f64,
}

impl Default for SpikyArc {
    fn default() -> Self {
        SpikyArc {
            start: [0.3, 0.3],
            radius: 0.12,
            angle_start_deg: 45.0,
            angle_end_deg: 225.0,
            spikes: 5,
            spike_height: 0.05,
            travel_min: 0.0,
            travel_max: 0.4,
        }
    }
}

/// A horizontal bar with a square attached at one of its four corners,
/// chosen uniformly per draw. Corners are numbered top-left, top-right,
/// bottom-left, bottom-right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CornerSquare {
    pub center: [f64; 2],
    pub bar_width: f64,
    pub bar_height: f64,
    pub square_size: f64,
}

impl Default for CornerSquare {
    fn default() -> Self {
        CornerSquare { center: [0.5, 0.5], bar_width: 0.6, bar_height: 0.1, square_size: 0.1 }
    }
}

/// A horizontal bar with a disk above its middle, present with probability `p_disk`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarDisk {
    pub center: [f64; 2],
    pub bar_width: f64,
    pub bar_height: f64,
    pub disk_radius: f64,
    pub disk_gap: f64,
    pub p_disk: f64,
}

impl Default for BarDisk {
    fn default() -> Self {
        BarDisk {
            center: [0.5, 0.5],
            bar_width: 0.6,
            bar_height: 0.1,
            disk_radius: 0.08,
            disk_gap: 0.04,
            p_disk: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    CircleRadius(CircleRadius),
    SpikyArc(SpikyArc),
    CornerSquare(CornerSquare),
    BarDisk(BarDisk),
}

impl Family {
    pub const NAMES: [&'static str; 4] = ["circle_radius", "spiky_arc", "corner_square", "bar_disk"];

    pub fn name(&self) -> &'static str {
        match self {
            Family::CircleRadius(_) => "circle_radius",
            Family::SpikyArc(_) => "spiky_arc",
            Family::CornerSquare(_) => "corner_square",
            Family::BarDisk(_) => "bar_disk",
        }
    }

    /// The family with all-default geometry.
    pub fn default_for(name: &str) -> Result<Family> {
        Ok(match name {
            "circle_radius" => Family::CircleRadius(CircleRadius::default()),
            "spiky_arc" => Family::SpikyArc(SpikyArc::default()),
            "corner_square" => Family::CornerSquare(CornerSquare::default()),
            "bar_disk" => Family::BarDisk(BarDisk::default()),
            other => return Err(Error::UnknownFamily(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeDistributionSpec {
    #[serde(flatten)]
    pub family: Family,
    pub n_points: usize,
    pub seed: u64,
}

impl ShapeDistributionSpec {
    pub fn new(family: Family) -> Self {
        ShapeDistributionSpec { family, n_points: DEFAULT_N_POINTS, seed: DEFAULT_SEED }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::invalid("n_points", "must be at least 1"));
        }
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be finite"))
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be positive"))
            }
        };
        match &self.family {
            Family::CircleRadius(c) => {
                finite("center", c.center[0])?;
                finite("center", c.center[1])?;
                positive("r_min", c.r_min)?;
                positive("r_max", c.r_max)?;
                if c.r_min > c.r_max {
                    return Err(Error::invalid("r_min", "must not exceed r_max"));
                }
            }
            Family::SpikyArc(s) => {
                finite("start", s.start[0])?;
                finite("start", s.start[1])?;
                positive("radius", s.radius)?;
                finite("angle_start_deg", s.angle_start_deg)?;
                finite("angle_end_deg", s.angle_end_deg)?;
                if s.angle_end_deg <= s.angle_start_deg {
                    return Err(Error::invalid("angle_end_deg", "must exceed angle_start_deg"));
                }
                if s.spike_height < 0.0 || !s.spike_height.is_finite() {
                    return Err(Error::invalid("spike_height", "must be nonnegative"));
                }
                if s.spikes > 10_000 {
                    return Err(Error::invalid("spikes", "at most 10000"));
                }
                finite("travel_min", s.travel_min)?;
                finite("travel_max", s.travel_max)?;
                if s.travel_min > s.travel_max {
                    return Err(Error::invalid("travel_min", "must not exceed travel_max"));
                }
            }
            Family::CornerSquare(c) => {
                finite("center", c.center[0])?;
                finite("center", c.center[1])?;
                positive("bar_width", c.bar_width)?;
                positive("bar_height", c.bar_height)?;
                positive("square_size", c.square_size)?;
                if c.square_size > c.bar_width {
                    return Err(Error::invalid("square_size", "must not exceed bar_width"));
                }
            }
            Family::BarDisk(b) => {
                finite("center", b.center[0])?;
                finite("center", b.center[1])?;
                positive("bar_width", b.bar_width)?;
                positive("bar_height", b.bar_height)?;
                positive("disk_radius", b.disk_radius)?;
                if b.disk_gap < 0.0 || !b.disk_gap.is_finite() {
                    return Err(Error::invalid("disk_gap", "must be nonnegative"));
                }
                if !(0.0..=1.0).contains(&b.p_disk) {
                    return Err(Error::invalid("p_disk", "must lie in [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

/// Axis-aligned 2-d box `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Region {
    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.min[0] && p.x <= self.max[0] && p.y >= self.min[1] && p.y <= self.max[1]
    }

    pub fn grow(&self, margin: f64) -> Region {
        Region {
            min: [self.min[0] - margin, self.min[1] - margin],
            max: [self.max[0] + margin, self.max[1] + margin],
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Curve {
    Segment(Point3, Point3),
    Circle { center: Point3, radius: f64 },
}

impl Curve {
    fn length(&self) -> f64 {
        match *self {
            Curve::Segment(a, b) => a.dist(&b),
            Curve::Circle { radius, .. } => 2.0 * PI * radius,
        }
    }

    fn at(&self, t: f64) -> Point3 {
        match *self {
            Curve::Segment(a, b) => a + (b - a) * t,
            Curve::Circle { center, radius } => {
                let phi = 2.0 * PI * t;
                center + Point3::new(radius * phi.cos(), radius * phi.sin(), 0.0)
            }
        }
    }
}

fn p2(x: f64, y: f64) -> Point3 {
    Point3::new(x, y, 0.0)
}

fn rect_outline(r: &Region, out: &mut Vec<Curve>) {
    let [x0, y0] = r.min;
    let [x1, y1] = r.max;
    out.push(Curve::Segment(p2(x0, y0), p2(x1, y0)));
    out.push(Curve::Segment(p2(x1, y0), p2(x1, y1)));
    out.push(Curve::Segment(p2(x1, y1), p2(x0, y1)));
    out.push(Curve::Segment(p2(x0, y1), p2(x0, y0)));
}

pub(crate) fn bar_region(center: [f64; 2], width: f64, height: f64) -> Region {
    Region {
        min: [center[0] - width / 2.0, center[1] - height / 2.0],
        max: [center[0] + width / 2.0, center[1] + height / 2.0],
    }
}

impl CornerSquare {
    /// The square for each corner, in corner order.
    pub fn attachment_regions(&self) -> [Region; 4] {
        let bar = bar_region(self.center, self.bar_width, self.bar_height);
        let s = self.square_size;
        let left = [bar.min[0], bar.min[0] + s];
        let right = [bar.max[0] - s, bar.max[0]];
        let top = [bar.max[1], bar.max[1] + s];
        let bottom = [bar.min[1] - s, bar.min[1]];
        let mk = |xs: [f64; 2], ys: [f64; 2]| Region { min: [xs[0], ys[0]], max: [xs[1], ys[1]] };
        [mk(left, top), mk(right, top), mk(left, bottom), mk(right, bottom)]
    }
}

impl BarDisk {
    pub fn disk_center(&self) -> [f64; 2] {
        [self.center[0], self.center[1] + self.bar_height / 2.0 + self.disk_gap + self.disk_radius]
    }
}

/// Which categorical variant a draw realized, if the family has one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    None,
    Corner(usize),
    Disk(bool),
}

fn outline(family: &Family, rng: &mut RandomSource) -> (Vec<Curve>, Variant) {
    let mut curves = Vec::new();
    let variant = match family {
        Family::CircleRadius(c) => {
            let r = rng.uniform_range(c.r_min, c.r_max);
            curves.push(Curve::Circle { center: p2(c.center[0], c.center[1]), radius: r });
            Variant::None
        }
        Family::SpikyArc(s) => {
            let t = rng.uniform_range(s.travel_min, s.travel_max);
            let center = p2(s.start[0] + t, s.start[1] + t);
            spiky_polyline(s, center, &mut curves);
            Variant::None
        }
        Family::CornerSquare(c) => {
            let corner = rng.below(4);
            rect_outline(&bar_region(c.center, c.bar_width, c.bar_height), &mut curves);
            let sq = c.attachment_regions()[corner];
            // The edge shared with the bar is already part of the bar outline.
            let [x0, y0] = sq.min;
            let [x1, y1] = sq.max;
            let top = corner < 2;
            if top {
                curves.push(Curve::Segment(p2(x0, y0), p2(x0, y1)));
                curves.push(Curve::Segment(p2(x0, y1), p2(x1, y1)));
                curves.push(Curve::Segment(p2(x1, y1), p2(x1, y0)));
            } else {
                curves.push(Curve::Segment(p2(x0, y1), p2(x0, y0)));
                curves.push(Curve::Segment(p2(x0, y0), p2(x1, y0)));
                curves.push(Curve::Segment(p2(x1, y0), p2(x1, y1)));
            }
            Variant::Corner(corner)
        }
        Family::BarDisk(b) => {
            rect_outline(&bar_region(b.center, b.bar_width, b.bar_height), &mut curves);
            let present = rng.bernoulli(b.p_disk);
            if present {
                let [cx, cy] = b.disk_center();
                curves.push(Curve::Circle { center: p2(cx, cy), radius: b.disk_radius });
            }
            Variant::Disk(present)
        }
    };
    (curves, variant)
}

fn spiky_polyline(s: &SpikyArc, center: Point3, out: &mut Vec<Curve>) {
    const PER_SPIKE: usize = 16;
    let teeth = s.spikes.max(1);
    let steps = teeth * PER_SPIKE;
    let (a0, a1) = (s.angle_start_deg.to_radians(), s.angle_end_deg.to_radians());
    let vertex = |k: usize| {
        let u = k as f64 / steps as f64;
        let phase = (u * s.spikes as f64).fract();
        let tooth = if s.spikes == 0 { 0.0 } else { 1.0 - (2.0 * phase - 1.0).abs() };
        let r = s.radius + s.spike_height * tooth;
        let theta = a0 + (a1 - a0) * u;
        center + p2(r * theta.cos(), r * theta.sin())
    };
    let mut prev = vertex(0);
    for k in 1..=steps {
        let next = vertex(k);
        out.push(Curve::Segment(prev, next));
        prev = next;
    }
}

fn sample_curves(curves: &[Curve], n: usize, rng: &mut RandomSource) -> PointSet {
    let cumulative: Vec<f64> = curves
        .iter()
        .scan(0.0, |acc, c| {
            *acc += c.length();
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().unwrap_or(&0.0);
    (0..n)
        .map(|_| {
            let u = rng.uniform() * total;
            let k = cumulative.partition_point(|&c| c <= u).min(curves.len() - 1);
            let start = if k == 0 { 0.0 } else { cumulative[k - 1] };
            let len = cumulative[k] - start;
            let t = if len > 0.0 { ((u - start) / len).clamp(0.0, 1.0) } else { 0.0 };
            curves[k].at(t)
        })
        .collect()
}

/// One i.i.d. draw of `spec.n_points` points spread uniformly by arc length
/// over the drawn shape's outline.
pub fn draw_shape(spec: &ShapeDistributionSpec, rng: &mut RandomSource) -> Result<PointSet> {
    draw_shape_with_variant(spec, rng).map(|(ps, _)| ps)
}

pub fn draw_shape_with_variant(spec: &ShapeDistributionSpec, rng: &mut RandomSource) -> Result<(PointSet, Variant)> {
    spec.validate()?;
    let (curves, variant) = outline(&spec.family, rng);
    Ok((sample_curves(&curves, spec.n_points, rng), variant))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_radius_circle() {
        let spec = ShapeDistributionSpec::new(Family::CircleRadius(CircleRadius {
            center: [0.0, 0.0],
            r_min: 1.0,
            r_max: 1.0,
        }));
        let mut rng = RandomSource::new(1);
        for _ in 0..5 {
            let ps = draw_shape(&spec, &mut rng).unwrap();
            assert_eq!(ps.len(), 256);
            for p in ps.iter() {
                assert!((p.norm() - 1.0).abs() < 1e-12);
                assert_eq!(p.z, 0.0);
            }
        }
    }

    #[test]
    fn bar_only_when_disk_probability_zero() {
        let spec = ShapeDistributionSpec::new(Family::BarDisk(BarDisk { p_disk: 0.0, ..Default::default() }));
        let bar = bar_region([0.5, 0.5], 0.6, 0.1).grow(1e-12);
        let mut rng = RandomSource::new(3);
        for _ in 0..50 {
            let (ps, v) = draw_shape_with_variant(&spec, &mut rng).unwrap();
            assert_eq!(v, Variant::Disk(false));
            assert!(ps.iter().all(|p| bar.contains(p)));
        }
    }

    #[test]
    fn corner_square_points_on_bar_or_chosen_square() {
        let cs = CornerSquare::default();
        let spec = ShapeDistributionSpec::new(Family::CornerSquare(cs.clone()));
        let bar = bar_region(cs.center, cs.bar_width, cs.bar_height).grow(1e-12);
        let mut rng = RandomSource::new(4);
        for _ in 0..40 {
            let (ps, v) = draw_shape_with_variant(&spec, &mut rng).unwrap();
            let Variant::Corner(c) = v else { panic!("expected a corner") };
            let sq = cs.attachment_regions()[c].grow(1e-12);
            assert!(ps.iter().all(|p| bar.contains(p) || sq.contains(p)));
            assert!(ps.iter().any(|p| !bar.contains(p)));
        }
    }

    #[test]
    fn spiky_arc_stays_within_radius_band() {
        let s = SpikyArc { travel_min: 0.1, travel_max: 0.1, ..Default::default() };
        let spec = ShapeDistributionSpec::new(Family::SpikyArc(s.clone()));
        let center = p2(s.start[0] + 0.1, s.start[1] + 0.1);
        let mut rng = RandomSource::new(5);
        let ps = draw_shape(&spec, &mut rng).unwrap();
        for p in ps.iter() {
            let r = p.dist(&center);
            // Chords of the polyline dip slightly inside the analytic curve.
            assert!(r > s.radius - 1e-3 && r < s.radius + s.spike_height + 1e-9, "r = {r}");
        }
        let spread: f64 = ps.iter().map(|p| p.dist(&center)).fold(0.0, f64::max);
        assert!(spread > s.radius + 0.5 * s.spike_height);
    }

    #[test]
    fn validation_errors() {
        let bad = ShapeDistributionSpec::new(Family::CircleRadius(CircleRadius { r_min: 0.5, r_max: 0.1, ..Default::default() }));
        assert!(matches!(bad.validate(), Err(Error::InvalidParameter { .. })));
        let bad = ShapeDistributionSpec::new(Family::BarDisk(BarDisk { p_disk: 1.5, ..Default::default() }));
        assert!(matches!(bad.validate(), Err(Error::InvalidParameter { .. })));
        let mut ok = ShapeDistributionSpec::new(Family::default_for("spiky_arc").unwrap());
        ok.n_points = 0;
        assert!(ok.validate().is_err());
        assert!(matches!(Family::default_for("torus"), Err(Error::UnknownFamily(_))));
    }
}
