//! Mean shapes under a metric.
//!
//! A free point set `x` is fitted to a random shape distribution by plain SGD
//! on `E_s[d(x, s)]`: each step draws a minibatch of shapes, averages the
//! metric's gradient with respect to `x`, and moves `x` against it with
//! learning rate `lr₀ / (1 + t / half_life)`.

mod plot;
mod shapes;

use rayon::prelude::*;
use serde::Serialize;

pub use plot::{emit_plot, render_svg};
pub use shapes::{
    draw_shape, draw_shape_with_variant, BarDisk, CircleRadius, CornerSquare, Family, Region, ShapeDistributionSpec,
    SpikyArc, Variant, DEFAULT_N_POINTS, DEFAULT_SEED,
};

use crate::error::{Error, Result};
use crate::geom::{Point3, PointSet};
use crate::losses::{distance, Metric};
use crate::numeric::pairwise_sum;
use crate::rng::RandomSource;

const STREAM_INIT: u64 = 1;
const STREAM_SHAPES: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Uniform in the unit square at z = 0.
    #[default]
    UniformCanvas,
    /// A fresh draw from the distribution itself (requires `m == n_points`).
    Draw,
}

impl std::str::FromStr for Init {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" | "uniform_canvas" => Ok(Init::UniformCanvas),
            "draw" => Ok(Init::Draw),
            other => Err(format!("unknown init `{other}` (expected uniform|draw)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SgdConfig {
    pub metric: Metric,
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    /// Steps after which the learning rate has halved; `None` means `steps / 20`.
    pub lr_half_life: Option<usize>,
    pub init: Init,
    /// Points in `x`; `None` means the spec's `n_points`.
    pub m: Option<usize>,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            metric: Metric::Emd,
            steps: 2000,
            batch: 4,
            lr: 0.05,
            lr_half_life: None,
            init: Init::UniformCanvas,
            m: None,
            seed: DEFAULT_SEED,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self, spec: &ShapeDistributionSpec) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        if self.batch == 0 {
            return Err(Error::invalid("batch", "must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("lr", "must be positive"));
        }
        if self.lr_half_life == Some(0) {
            return Err(Error::invalid("lr_half_life", "must be at least 1"));
        }
        let m = self.points(spec);
        if m == 0 {
            return Err(Error::invalid("m", "must be at least 1"));
        }
        if (self.metric == Metric::Emd || self.init == Init::Draw) && m != spec.n_points {
            return Err(Error::invalid("m", format!("must equal n_points ({}) here", spec.n_points)));
        }
        Ok(())
    }

    pub fn points(&self, spec: &ShapeDistributionSpec) -> usize {
        self.m.unwrap_or(spec.n_points)
    }

    pub fn half_life(&self) -> f64 {
        self.lr_half_life.unwrap_or((self.steps / 20).max(1)) as f64
    }

    pub fn learning_rate(&self, step: usize) -> f64 {
        self.lr / (1.0 + step as f64 / self.half_life())
    }
}

#[derive(Debug, Clone)]
pub struct MeanShape {
    pub x: PointSet,
    /// Mean minibatch loss at each step, evaluated before the update.
    pub loss_trace: Vec<f64>,
}

pub fn initial_points(spec: &ShapeDistributionSpec, cfg: &SgdConfig) -> Result<PointSet> {
    let mut rng = RandomSource::new(cfg.seed).split(STREAM_INIT);
    match cfg.init {
        Init::UniformCanvas => Ok((0..cfg.points(spec))
            .map(|_| {
                let x = rng.uniform();
                let y = rng.uniform();
                Point3::new(x, y, 0.0)
            })
            .collect()),
        Init::Draw => draw_shape(spec, &mut rng),
    }
}

/// Mean minibatch loss and averaged gradient with respect to `x`.
pub fn minibatch_step(x: &PointSet, shapes: &[PointSet], metric: Metric) -> Result<(f64, Vec<Point3>)> {
    let per_shape: Vec<(f64, Vec<Point3>)> = shapes
        .par_iter()
        .map(|s| {
            let r = distance(x, s, metric, true)?;
            Ok((r.value, r.grad_a.expect("gradient requested")))
        })
        .collect::<Result<_>>()?;
    let scale = 1.0 / shapes.len() as f64;
    let losses: Vec<f64> = per_shape.iter().map(|(v, _)| *v).collect();
    let mut grad = vec![Point3::ZERO; x.len()];
    for (_, g) in &per_shape {
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc += *gi;
        }
    }
    for g in &mut grad {
        *g = *g * scale;
    }
    Ok((pairwise_sum(&losses) * scale, grad))
}

pub fn optimize_mean_shape(spec: &ShapeDistributionSpec, cfg: &SgdConfig) -> Result<MeanShape> {
    spec.validate()?;
    cfg.validate(spec)?;
    let mut x = initial_points(spec, cfg)?;
    let mut rng = RandomSource::new(cfg.seed).split(STREAM_SHAPES);
    let mut loss_trace = Vec::with_capacity(cfg.steps);
    let mut initial = None;

    for step in 0..cfg.steps {
        let shapes: Vec<PointSet> = (0..cfg.batch).map(|_| draw_shape(spec, &mut rng)).collect::<Result<_>>()?;
        let (loss, grad) = minibatch_step(&x, &shapes, cfg.metric)?;
        let reference = *initial.get_or_insert(loss);
        if !loss.is_finite() || loss > 1e6 * reference {
            return Err(Error::DivergenceDetected { step, loss, initial: reference });
        }
        loss_trace.push(loss);
        let lr = cfg.learning_rate(step);
        for (p, g) in x.iter_mut().zip(&grad) {
            *p -= *g * lr;
        }
    }
    Ok(MeanShape { x, loss_trace })
}

/// Exponential moving average with smoothing `2 / (window + 1)`.
pub fn ema(values: &[f64], window: usize) -> Vec<f64> {
    let alpha = 2.0 / (window as f64 + 1.0);
    let mut out = Vec::with_capacity(values.len());
    let mut acc = None;
    for &v in values {
        let next = match acc {
            None => v,
            Some(a) => alpha * v + (1.0 - alpha) * a,
        };
        acc = Some(next);
        out.push(next);
    }
    out
}

/// Root-mean-square deviation of the points' distances to `center` from their mean.
pub fn rms_radial_deviation(x: &PointSet, center: [f64; 2]) -> f64 {
    let c = Point3::new(center[0], center[1], 0.0);
    let radii: Vec<f64> = x.iter().map(|p| p.dist(&c)).collect();
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    (radii.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / radii.len() as f64).sqrt()
}

/// Standard deviation of a uniform radius on `[r_min, r_max]`.
pub fn radial_std(c: &CircleRadius) -> f64 {
    (c.r_max - c.r_min) / 12f64.sqrt()
}

/// Fraction of `x` inside each corner attachment square (grown by `margin`)
/// and outside the bar.
pub fn corner_fractions(x: &PointSet, cs: &CornerSquare, margin: f64) -> [f64; 4] {
    let bar = shapes::bar_region(cs.center, cs.bar_width, cs.bar_height);
    let regions = cs.attachment_regions();
    let mut out = [0.0; 4];
    for (k, r) in regions.iter().enumerate() {
        let grown = r.grow(margin);
        let hits = x.iter().filter(|p| grown.contains(p) && !bar.contains(p)).count();
        out[k] = hits as f64 / x.len() as f64;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed_circle() -> ShapeDistributionSpec {
        let mut spec = ShapeDistributionSpec::new(Family::CircleRadius(CircleRadius {
            center: [0.5, 0.5],
            r_min: 0.3,
            r_max: 0.3,
        }));
        spec.n_points = 64;
        spec
    }

    #[test]
    fn learning_rate_schedule() {
        let cfg = SgdConfig { steps: 100, lr: 0.1, ..Default::default() };
        assert_eq!(cfg.learning_rate(0), 0.1);
        assert!((cfg.learning_rate(5) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let spec = fixed_circle();
        let ok = SgdConfig::default();
        assert!(ok.validate(&spec).is_ok());
        assert!(SgdConfig { steps: 0, ..Default::default() }.validate(&spec).is_err());
        assert!(SgdConfig { batch: 0, ..Default::default() }.validate(&spec).is_err());
        assert!(SgdConfig { lr: -1.0, ..Default::default() }.validate(&spec).is_err());
        assert!(SgdConfig { m: Some(10), ..Default::default() }.validate(&spec).is_err());
        assert!(SgdConfig { m: Some(10), metric: Metric::Cd, ..Default::default() }.validate(&spec).is_ok());
    }

    #[test]
    fn seed_determinism() {
        let spec = fixed_circle();
        let cfg = SgdConfig { steps: 20, metric: Metric::Cd, ..Default::default() };
        let a = optimize_mean_shape(&spec, &cfg).unwrap();
        let b = optimize_mean_shape(&spec, &cfg).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.loss_trace, b.loss_trace);
    }

    #[test]
    fn divergence_is_detected() {
        let spec = fixed_circle();
        let cfg = SgdConfig { steps: 200, metric: Metric::Cd, lr: 5.0, lr_half_life: Some(1_000_000), ..Default::default() };
        assert!(matches!(optimize_mean_shape(&spec, &cfg), Err(Error::DivergenceDetected { .. })));
    }

    #[test]
    fn ema_constant_sequence() {
        assert_eq!(ema(&[2.0; 10], 50), vec![2.0; 10]);
    }

    #[test]
    fn radial_std_of_uniform() {
        let c = CircleRadius { center: [0.0, 0.0], r_min: 0.0, r_max: 12f64.sqrt() };
        assert!((radial_std(&c) - 1.0).abs() < 1e-15);
    }
}
