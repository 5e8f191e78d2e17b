//! 2D vector and ray primitives.
//!
//! Everything here is a pure function over `Copy` values. Directions are
//! plain [`Vec2`]s that are expected to be unit-norm; the operations that
//! depend on that check it explicitly.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Tolerance used when validating that a direction is unit-norm.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Smallest forward distance accepted as an intersection. Keeps a ray that
/// just bounced off a surface from re-hitting that same surface.
pub const FORWARD_EPSILON: f64 = 1e-9;

/// A point or direction in the corridor plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Returns the unit vector along `self`, or `None` for a zero (or
    /// non-finite) vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(Vec2::new(self.x / n, self.y / n))
        } else {
            None
        }
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(self.x * c - self.y * s, self.x * s + self.y * c)
    }

    pub fn is_unit(self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOLERANCE
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

fn require_unit(what: &'static str, v: Vec2) -> Result<()> {
    if v.is_unit() {
        Ok(())
    } else {
        Err(Error::NonUnit {
            what,
            norm: v.norm(),
        })
    }
}

/// A launched ray carrying power along a straight segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec2,
    pub direction: Vec2,
    /// Watts.
    pub power: f64,
    pub bounce_count: u32,
}

impl Ray {
    pub fn new(origin: Vec2, direction: Vec2, power: f64) -> Result<Self> {
        require_unit("ray direction", direction)?;
        if !(power >= 0.0) {
            return Err(Error::invalid("ray power", format!("{power} < 0")));
        }
        Ok(Self {
            origin,
            direction,
            power,
            bounce_count: 0,
        })
    }

    pub fn at(&self, t: f64) -> Vec2 {
        self.origin + self.direction * t
    }
}

/// Receiver aperture disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("circle radius", format!("{radius} <= 0")));
        }
        Ok(Self { center, radius })
    }
}

/// Mirror `incident` about the plane with unit normal `normal`:
/// `r = i - 2 (i . n) n`.
pub fn reflect(incident: Vec2, normal: Vec2) -> Result<Vec2> {
    require_unit("incident direction", incident)?;
    require_unit("normal", normal)?;
    Ok(reflect_unchecked(incident, normal))
}

/// [`reflect`] without the unit-norm checks, for hot loops whose inputs
/// are already validated.
#[inline]
pub fn reflect_unchecked(incident: Vec2, normal: Vec2) -> Vec2 {
    incident - normal * (2.0 * incident.dot(normal))
}

/// Nearest strictly-forward intersection of `ray` with the segment `a`-`b`.
///
/// Returns the hit point and the ray parameter `t` (meters along the unit
/// direction). Parallel rays never intersect, including collinear overlap.
pub fn ray_segment_intersection(ray: &Ray, a: Vec2, b: Vec2) -> Option<(Vec2, f64)> {
    let seg = b - a;
    let denom = ray.direction.cross(seg);
    if denom == 0.0 {
        return None;
    }
    let ao = a - ray.origin;
    let t = ao.cross(seg) / denom;
    let s = ao.cross(ray.direction) / denom;
    if t > FORWARD_EPSILON && (0.0..=1.0).contains(&s) {
        Some((ray.at(t), t))
    } else {
        None
    }
}

/// Distance along `ray` at which it first enters `circle`, `0` if it starts
/// inside, or `None` if the forward half-line misses it.
pub fn ray_circle_entry(ray: &Ray, circle: &Circle) -> Option<f64> {
    let oc = circle.center - ray.origin;
    let r2 = circle.radius * circle.radius;
    let c = oc.dot(oc) - r2;
    if c <= 0.0 {
        return Some(0.0);
    }
    let tc = oc.dot(ray.direction);
    if tc < 0.0 {
        return None;
    }
    let perp2 = oc.dot(oc) - tc * tc;
    if perp2 > r2 {
        return None;
    }
    Some(tc - (r2 - perp2).max(0.0).sqrt())
}

/// True iff the forward half-line of `ray` passes within `circle`.
pub fn ray_circle_intersection(ray: &Ray, circle: &Circle) -> bool {
    ray_circle_entry(ray, circle).is_some()
}

/// Angle between two unit vectors in `[0, pi]`.
pub fn angle_between(a: Vec2, b: Vec2) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos()
}
