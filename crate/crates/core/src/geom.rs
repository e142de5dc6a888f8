//! Points, point sets and the distance result shared by every metric.

use std::ops::{Add, AddAssign, Deref, DerefMut, Mul, Neg, Sub, SubAssign};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ZERO: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    #[inline]
    pub fn axis(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    #[inline]
    pub fn axis_mut(&mut self, axis: usize) -> &mut f64 {
        match axis {
            0 => &mut self.x,
            1 => &mut self.y,
            _ => &mut self.z,
        }
    }

    #[inline]
    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Squared Euclidean distance. Every nearest-neighbor routine in the crate
    /// goes through this function so that brute-force and tree searches see
    /// bit-identical distances.
    #[inline]
    pub fn dist_sq(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    #[inline]
    pub fn dist(&self, other: &Point3) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn min(&self, other: &Point3) -> Point3 {
        Point3::new(self.x.min(other.x), self.y.min(other.y), self.z.min(other.z))
    }

    pub fn max(&self, other: &Point3) -> Point3 {
        Point3::new(self.x.max(other.x), self.y.max(other.y), self.z.max(other.z))
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

impl AddAssign for Point3 {
    fn add_assign(&mut self, o: Point3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl SubAssign for Point3 {
    fn sub_assign(&mut self, o: Point3) {
        self.x -= o.x;
        self.y -= o.y;
        self.z -= o.z;
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(p: [f64; 3]) -> Self {
        Point3::new(p[0], p[1], p[2])
    }
}

/// An ordered collection of points. Index identity matters: gradients are
/// reported per index, and duplicates are allowed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet(pub Vec<Point3>);

impl PointSet {
    pub fn new(points: Vec<Point3>) -> Self {
        PointSet(points)
    }

    pub fn from_arrays(points: &[[f64; 3]]) -> Self {
        PointSet(points.iter().map(|&p| p.into()).collect())
    }

    pub fn points(&self) -> &[Point3] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Point3> {
        self.0
    }

    /// Ok iff every coordinate is finite; otherwise reports the first offending index.
    pub fn validate(&self) -> Result<()> {
        match self.0.iter().position(|p| !p.is_finite()) {
            Some(i) => Err(Error::NonFiniteCoordinate(i)),
            None => Ok(()),
        }
    }

    /// Validation plus the nonempty requirement every metric imposes.
    pub(crate) fn validate_nonempty(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::EmptySet);
        }
        self.validate()
    }

    pub fn bounding_box(&self) -> Result<(Point3, Point3)> {
        let first = *self.0.first().ok_or(Error::EmptySet)?;
        Ok(self.0[1..]
            .iter()
            .fold((first, first), |(lo, hi), p| (lo.min(p), hi.max(p))))
    }

    pub fn translated(&self, t: Point3) -> PointSet {
        PointSet(self.0.iter().map(|&p| p + t).collect())
    }
}

impl Deref for PointSet {
    type Target = Vec<Point3>;
    fn deref(&self) -> &Vec<Point3> {
        &self.0
    }
}

impl DerefMut for PointSet {
    fn deref_mut(&mut self) -> &mut Vec<Point3> {
        &mut self.0
    }
}

impl From<Vec<Point3>> for PointSet {
    fn from(v: Vec<Point3>) -> Self {
        PointSet(v)
    }
}

impl FromIterator<Point3> for PointSet {
    fn from_iter<I: IntoIterator<Item = Point3>>(iter: I) -> Self {
        PointSet(iter.into_iter().collect())
    }
}

/// Scalar distance plus optional per-point gradients with respect to both inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    pub value: f64,
    pub grad_a: Option<Vec<Point3>>,
    pub grad_b: Option<Vec<Point3>>,
}

impl DistanceResult {
    pub fn value_only(value: f64) -> Self {
        DistanceResult { value, grad_a: None, grad_b: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_examples() {
        assert!(PointSet::from_arrays(&[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]).validate().is_ok());
        assert!(matches!(
            PointSet::from_arrays(&[[0.0, 0.0, f64::NAN]]).validate(),
            Err(Error::NonFiniteCoordinate(0))
        ));
        assert!(PointSet::default().validate().is_ok());
        assert!(matches!(
            PointSet::from_arrays(&[[0.0, 0.0, 0.0], [f64::INFINITY, 0.0, 0.0]]).validate(),
            Err(Error::NonFiniteCoordinate(1))
        ));
    }

    #[test]
    fn bounding_box_examples() {
        let bb = PointSet::from_arrays(&[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]).bounding_box().unwrap();
        assert_eq!(bb, (Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 2.0, 3.0)));
        let bb = PointSet::from_arrays(&[[5.0, 5.0, 5.0]]).bounding_box().unwrap();
        assert_eq!(bb, (Point3::new(5.0, 5.0, 5.0), Point3::new(5.0, 5.0, 5.0)));
        let bb = PointSet::from_arrays(&[[-1.0, 0.0, 2.0], [3.0, -2.0, 1.0]]).bounding_box().unwrap();
        assert_eq!(bb, (Point3::new(-1.0, -2.0, 1.0), Point3::new(3.0, 0.0, 2.0)));
        assert!(matches!(PointSet::default().bounding_box(), Err(Error::EmptySet)));
    }
}
