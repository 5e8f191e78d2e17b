//! The corridor world: an HSF-coated ceiling, a perfectly conducting floor,
//! open ends, the user-side transmitter and the base-station receiver.
//!
//! Coordinates are absolute meters with the floor at `y = 0`, the ceiling at
//! `y = H` and the origin of `x` at the user's sensed position.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::{angle_between, Circle, Ray, Vec2};

/// Flat-cone antenna: uniform gain inside `boresight ± beam_halfwidth`,
/// nothing outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Antenna {
    pub position: Vec2,
    pub boresight: Vec2,
    /// Radians.
    pub beam_halfwidth: f64,
    pub gain: f64,
}

impl Antenna {
    pub fn new(position: Vec2, boresight: Vec2, beam_halfwidth: f64, gain: f64) -> Result<Self> {
        if !boresight.is_unit() {
            return Err(Error::NonUnit {
                what: "antenna boresight",
                norm: boresight.norm(),
            });
        }
        if !(beam_halfwidth > 0.0 && beam_halfwidth <= std::f64::consts::PI) {
            return Err(Error::invalid(
                "beam_halfwidth",
                format!("{beam_halfwidth} rad outside (0, pi]"),
            ));
        }
        if !(gain >= 0.0) {
            return Err(Error::invalid("gain", format!("{gain} < 0")));
        }
        Ok(Self {
            position,
            boresight,
            beam_halfwidth,
            gain,
        })
    }

    /// Whether a direction leaving the antenna lies inside its cone.
    pub fn covers(&self, direction: Vec2) -> bool {
        angle_between(direction, self.boresight) <= self.beam_halfwidth
    }
}

/// Number of subunits of length `step` needed to tile `length`.
pub(crate) fn tile_count(length: f64, step: f64) -> usize {
    // 5.0 / 0.001 is 5000.000000000001 in f64; do not let that round up.
    ((length / step) - 1e-9).ceil().max(1.0) as usize
}

/// A ceiling coated with HSF subunits of constant virtual normal.
#[derive(Debug, Clone, PartialEq)]
pub struct HsfPanel {
    pub y_height: f64,
    pub x_start: f64,
    pub x_end: f64,
    pub subunit_length: f64,
    /// One entry per subunit `i = 0..=I`.
    pub normals: Vec<Vec2>,
}

impl HsfPanel {
    /// Plain ceiling: every subunit acts as an ordinary mirror.
    pub fn mirror(x_start: f64, x_end: f64, y_height: f64, subunit_length: f64) -> Result<Self> {
        if !(subunit_length > 0.0) {
            return Err(Error::invalid("subunit_length", "must be > 0"));
        }
        if !(x_end > x_start) {
            return Err(Error::invalid("panel extent", "x_end must exceed x_start"));
        }
        let n = tile_count(x_end - x_start, subunit_length);
        Ok(Self {
            y_height,
            x_start,
            x_end,
            subunit_length,
            normals: vec![Vec2::new(0.0, -1.0); n],
        })
    }

    /// Same geometry, new per-subunit normals.
    pub fn with_normals(&self, normals: Vec<Vec2>) -> Result<Self> {
        if normals.len() != self.normals.len() {
            return Err(Error::invalid(
                "normals",
                format!("expected {} entries, got {}", self.normals.len(), normals.len()),
            ));
        }
        if let Some((i, n)) = normals
            .iter()
            .enumerate()
            .find(|(_, n)| !n.is_unit() || !(n.y < 0.0))
        {
            return Err(Error::invalid(
                "normals",
                format!("subunit {i} normal ({}, {}) is not a downward unit vector", n.x, n.y),
            ));
        }
        Ok(Self {
            normals,
            ..self.clone()
        })
    }

    /// `I`, the index of the last subunit.
    pub fn last_index(&self) -> usize {
        self.normals.len() - 1
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn subunit_center(&self, i: usize) -> Result<Vec2> {
        if i > self.last_index() {
            return Err(Error::IndexOutOfRange {
                index: i,
                max: self.last_index(),
            });
        }
        Ok(Vec2::new(
            self.x_start + (i as f64 + 0.5) * self.subunit_length,
            self.y_height,
        ))
    }

    /// Subunit covering abscissa `x`, clamped to the panel.
    pub fn subunit_at(&self, x: f64) -> usize {
        let k = ((x - self.x_start) / self.subunit_length).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.last_index())
        }
    }

    pub fn normal_at(&self, x: f64) -> Vec2 {
        self.normals[self.subunit_at(x)]
    }
}

/// Geometric inputs for [`Scene::from_params`]. Defaults reproduce the
/// 5 m x 3 m evaluation corridor.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    /// Ceiling height `H`, m.
    pub ceiling_height: f64,
    /// Corridor length `L`, m.
    pub length: f64,
    /// Distance from the left end to the user's origin, m.
    pub offset: f64,
    /// User (Tx) height `h`, m.
    pub user_height: f64,
    /// Receiver abscissa `X`, m.
    pub rx_x: f64,
    /// Receiver height above the user plane `Y`, m.
    pub rx_y_rel: f64,
    /// HSF subunit length, m.
    pub delta_hsf: f64,
    /// Aperture radius `delta`, m.
    pub aperture: f64,
    /// Full Tx cone width, degrees.
    pub tx_beam_deg: f64,
    /// Full Rx cone width, degrees.
    pub rx_beam_deg: f64,
    /// Rx boresight rotation from +y, counter-clockwise, degrees.
    pub rx_tilt_ccw_deg: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            ceiling_height: 3.0,
            length: 5.0,
            offset: 1.0,
            user_height: 1.0,
            rx_x: 3.6,
            rx_y_rel: 1.4,
            delta_hsf: 0.001,
            aperture: 0.05,
            tx_beam_deg: 30.0,
            rx_beam_deg: 60.0,
            rx_tilt_ccw_deg: 77.0,
        }
    }
}

/// The full corridor description shared read-only by the tracer.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub ceiling: HsfPanel,
    pub floor_y: f64,
    pub corridor_x_min: f64,
    pub corridor_x_max: f64,
    pub tx: Antenna,
    pub rx: Antenna,
    pub rx_aperture: Circle,
    pub user_height: f64,
    pub ceiling_height: f64,
}

impl Scene {
    pub fn from_params(p: &SceneParams) -> Result<Self> {
        let positive = [
            ("scene.H", p.ceiling_height),
            ("scene.L", p.length),
            ("scene.h", p.user_height),
            ("scene.delta_hsf", p.delta_hsf),
            ("scene.aperture", p.aperture),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} must be positive")));
            }
        }
        let x_min = -p.offset;
        let x_max = p.length - p.offset;
        let rx_pos = Vec2::new(p.rx_x, p.user_height + p.rx_y_rel);
        let tilt = p.rx_tilt_ccw_deg.to_radians();

        let tx = Antenna::new(
            Vec2::new(0.0, p.user_height),
            Vec2::new(0.0, 1.0),
            (p.tx_beam_deg / 2.0).to_radians(),
            1.0,
        )?;
        let rx = Antenna::new(
            rx_pos,
            Vec2::new(-tilt.sin(), tilt.cos()),
            (p.rx_beam_deg / 2.0).to_radians(),
            1.0,
        )?;
        let scene = Self {
            ceiling: HsfPanel::mirror(x_min, x_max, p.ceiling_height, p.delta_hsf)?,
            floor_y: 0.0,
            corridor_x_min: x_min,
            corridor_x_max: x_max,
            tx,
            rx,
            rx_aperture: Circle::new(rx_pos, p.aperture)?,
            user_height: p.user_height,
            ceiling_height: p.ceiling_height,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.floor_y == 0.0
            && self.user_height > self.floor_y
            && self.user_height < self.ceiling_height)
        {
            return Err(Error::invalid(
                "scene heights",
                format!(
                    "need 0 = floor < h ({}) < H ({})",
                    self.user_height, self.ceiling_height
                ),
            ));
        }
        let c = self.rx_aperture.center;
        if !(c.x > self.corridor_x_min
            && c.x < self.corridor_x_max
            && c.y > self.floor_y
            && c.y < self.ceiling_height)
        {
            return Err(Error::invalid(
                "rx position",
                format!("({}, {}) is outside the corridor", c.x, c.y),
            ));
        }
        if self.tx.position.y != self.user_height {
            return Err(Error::invalid("tx position", "must sit at the user height"));
        }
        if self.ceiling.y_height != self.ceiling_height {
            return Err(Error::invalid("ceiling", "panel height differs from H"));
        }
        Ok(())
    }

    /// Transmitter position after moving `dislocation` meters along +x.
    pub fn user_position(&self, dislocation: f64) -> Vec2 {
        Vec2::new(self.tx.position.x + dislocation, self.tx.position.y)
    }

    pub fn rx_position(&self) -> Vec2 {
        self.rx_aperture.center
    }

    /// Half-span on the ceiling lit by the Tx cone, `(H - h) tan(halfwidth)`.
    pub fn tx_footprint_halfwidth(&self) -> f64 {
        let hw = self.tx.beam_halfwidth.min(FRAC_PI_2);
        (self.ceiling_height - self.user_height) * hw.tan()
    }
}

/// The evaluation corridor with a plain (mirror) ceiling.
pub fn build_default_scene() -> Scene {
    Scene::from_params(&SceneParams::default()).expect("default scene parameters are valid")
}

/// `n_rays` rays spread uniformly in angle over the Tx cone, in increasing
/// (counter-clockwise) angle order, launched from the dislocated user.
pub fn tx_ray_fan(
    scene: &Scene,
    dislocation: f64,
    n_rays: usize,
    total_power: f64,
) -> Result<Vec<Ray>> {
    if n_rays < 2 {
        return Err(Error::invalid("n_rays", format!("{n_rays} < 2")));
    }
    if !(total_power >= 0.0) {
        return Err(Error::invalid("total_power", format!("{total_power} < 0")));
    }
    let origin = scene.user_position(dislocation);
    let per_ray = total_power * scene.tx.gain / n_rays as f64;
    let hw = scene.tx.beam_halfwidth;
    let span = (n_rays - 1) as f64;
    Ok((0..n_rays)
        .map(|k| {
            let angle = hw * (2.0 * k as f64 / span - 1.0);
            Ray {
                origin,
                direction: scene.tx.boresight.rotated(angle),
                power: per_ray,
                bounce_count: 0,
            }
        })
        .collect())
}

/// Whether the receiver's cone admits a ray travelling along `arrival_direction`.
pub fn rx_accepts(scene: &Scene, arrival_direction: Vec2) -> bool {
    scene.rx.covers(-arrival_direction)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scene_matches_corridor() {
        let s = build_default_scene();
        assert_eq!(s.ceiling_height, 3.0);
        assert_eq!(s.ceiling.subunit_length, 0.001);
        assert_eq!(s.ceiling.len(), 5000);
        assert_eq!(s.rx_position(), Vec2::new(3.6, 2.4));
        assert_eq!((s.corridor_x_min, s.corridor_x_max), (-1.0, 4.0));
        assert_eq!(s.tx.position, Vec2::new(0.0, 1.0));
        assert!((s.tx.beam_halfwidth - 15f64.to_radians()).abs() < 1e-15);
        assert!((s.rx.beam_halfwidth - 30f64.to_radians()).abs() < 1e-15);
        assert_eq!(s.rx_aperture.radius, 0.05);
    }

    #[test]
    fn rx_height_matches_target_direction() {
        // (X - x, Y - (H - h)) from the ceiling point (x, H) must point at the Rx.
        let s = build_default_scene();
        let p = SceneParams::default();
        for x in [-0.5, 0.0, 0.7, 2.0] {
            let from = Vec2::new(x, p.ceiling_height);
            let dir = Vec2::new(p.rx_x - x, p.rx_y_rel - (p.ceiling_height - p.user_height));
            let to = s.rx_position() - from;
            assert!(dir.cross(to).abs() < 1e-12 && dir.dot(to) > 0.0);
        }
    }

    #[test]
    fn fan_of_three() {
        let s = build_default_scene();
        let fan = tx_ray_fan(&s, 0.0, 3, 1.0).unwrap();
        let angles: Vec<f64> = fan
            .iter()
            .map(|r| (-r.direction.x).atan2(r.direction.y).to_degrees())
            .collect();
        for (a, e) in angles.iter().zip([-15.0, 0.0, 15.0]) {
            assert!((a - e).abs() < 1e-12, "{angles:?}");
        }
        assert!(fan.iter().all(|r| r.origin == Vec2::new(0.0, 1.0)));
        assert!(fan.iter().all(|r| r.bounce_count == 0));
    }

    #[test]
    fn fan_power_split() {
        let s = build_default_scene();
        let fan = tx_ray_fan(&s, 0.3, 4, 0.1).unwrap();
        assert!(fan.iter().all(|r| r.power == 0.025));
        assert!(fan.iter().all(|r| r.origin == Vec2::new(0.3, 1.0)));
        assert!(tx_ray_fan(&s, 0.0, 1, 0.1).is_err());
    }

    #[test]
    fn fan_is_symmetric() {
        let s = build_default_scene();
        let fan = tx_ray_fan(&s, 0.0, 1001, 0.1).unwrap();
        let total: f64 = fan.iter().map(|r| r.power).sum();
        assert!((total - 0.1).abs() <= 1e-12 * 0.1);
        for k in 0..fan.len() {
            let a = fan[k].direction;
            let b = fan[fan.len() - 1 - k].direction;
            assert!((a.x + b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12);
        }
    }

    #[test]
    fn rx_cone() {
        let s = build_default_scene();
        assert!(rx_accepts(&s, -s.rx.boresight));
        // -y rotated 77 degrees counter-clockwise is exactly -boresight.
        let tilt = 77f64.to_radians();
        let arrival = Vec2::new(0.0, -1.0).rotated(tilt);
        assert!((arrival - Vec2::new(tilt.sin(), -tilt.cos())).norm() < 1e-15);
        assert!(angle_between(-arrival, s.rx.boresight) < 1e-7);
        assert!(rx_accepts(&s, arrival));
        // 31 degrees off a 30 degree halfwidth
        assert!(!rx_accepts(&s, (-s.rx.boresight).rotated(31f64.to_radians())));
        assert!(rx_accepts(&s, (-s.rx.boresight).rotated(29f64.to_radians())));
    }

    #[test]
    fn subunit_centers() {
        let s = build_default_scene();
        let p = &s.ceiling;
        let c0 = p.subunit_center(0).unwrap();
        assert!((c0.x + 0.9995).abs() < 1e-12 && c0.y == 3.0);
        let c = p.subunit_center(2500).unwrap();
        assert!((c.x - 1.5005).abs() < 1e-12);
        let last = p.subunit_center(p.last_index()).unwrap();
        assert!((p.x_end - last.x).abs() < p.subunit_length);
        assert!(matches!(
            p.subunit_center(5000),
            Err(Error::IndexOutOfRange { index: 5000, max: 4999 })
        ));
        for i in 1..p.len() {
            let d = p.subunit_center(i).unwrap().x - p.subunit_center(i - 1).unwrap().x;
            assert!(d > 0.0 && (d - p.subunit_length).abs() < 1e-12);
        }
    }

    #[test]
    fn subunit_lookup_clamps() {
        let s = build_default_scene();
        let p = &s.ceiling;
        assert_eq!(p.subunit_at(-5.0), 0);
        assert_eq!(p.subunit_at(99.0), 4999);
        assert_eq!(p.subunit_at(p.subunit_center(1234).unwrap().x), 1234);
    }

    #[test]
    fn invalid_scenes_rejected() {
        let bad = SceneParams {
            user_height: 3.5,
            ..SceneParams::default()
        };
        assert!(Scene::from_params(&bad).is_err());
        let bad = SceneParams {
            rx_x: 7.0,
            ..SceneParams::default()
        };
        assert!(Scene::from_params(&bad).is_err());
        assert!(Antenna::new(Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), 0.0, 1.0).is_err());
        assert!(Antenna::new(Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), 0.1, -1.0).is_err());
    }

    #[test]
    fn panel_normals_validated() {
        let s = build_default_scene();
        let mut n = s.ceiling.normals.clone();
        n[3] = Vec2::new(0.0, 1.0);
        assert!(s.ceiling.with_normals(n).is_err());
        assert!(s.ceiling.with_normals(vec![Vec2::new(0.0, -1.0)]).is_err());
    }
}
