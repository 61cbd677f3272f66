use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Scalar;

/// Position in millimetres: `x` lateral, `y` axial (grows with depth).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2D<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2D<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    pub fn midpoint(self, other: Self) -> Self {
        let half = T::of(0.5);
        Self::new((self.x + other.x) * half, (self.y + other.y) * half)
    }

    pub fn lerp(self, other: Self, u: T) -> Self {
        self + (other - self) * u
    }

    pub fn cast<U: Scalar>(self) -> Point2D<U> {
        Point2D::new(U::of(self.x.to_f64_lossy()), U::of(self.y.to_f64_lossy()))
    }
}

impl<T: Scalar> Add for Point2D<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Scalar> Sub for Point2D<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Scalar> Mul<T> for Point2D<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

impl<T: Scalar> Neg for Point2D<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Rotation about the origin followed by a translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform<T> {
    pub angle: T,
    pub translation: Point2D<T>,
}

impl<T: Scalar> RigidTransform<T> {
    pub fn new(angle: T, translation: Point2D<T>) -> Self {
        Self { angle, translation }
    }

    pub fn identity() -> Self {
        Self::new(T::zero(), Point2D::new(T::zero(), T::zero()))
    }

    pub fn apply(&self, p: Point2D<T>) -> Point2D<T> {
        let (s, c) = self.angle.sin_cos();
        Point2D::new(c * p.x - s * p.y, s * p.x + c * p.y) + self.translation
    }
}
