//! Deterministic 2D ray launching through the corridor.
//!
//! Each Tx ray is followed segment by segment. On every straight segment the
//! receiver aperture is tested first: a ray that enters the aperture circle
//! before reaching the next surface, travelling inside the Rx cone, is
//! absorbed there. Otherwise it reflects off the ceiling (through the virtual
//! normal of the subunit it lands on) or the floor (specular, perfect
//! conductor), leaves through an open end, or is dropped once it has used up
//! its bounce budget.
//!
//! [`analytic_received_power`] evaluates the same single-bounce power integral
//! by midpoint quadrature over the lit stretch of ceiling instead of by ray
//! launching, and serves as a cross-check for [`received_power`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ray_circle_entry, ray_segment_intersection, reflect_unchecked, Ray, Vec2};
use crate::scene::{rx_accepts, tx_ray_fan, HsfPanel, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpreadingMode {
    /// Captured power is the launched ray power.
    #[default]
    Geometric,
    /// Captured power is scaled by `(1 m / path length)^2`.
    InverseSquare,
}

impl SpreadingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpreadingMode::Geometric => "geometric",
            SpreadingMode::InverseSquare => "inverse_square",
        }
    }
}

impl std::str::FromStr for SpreadingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "geometric" => Ok(SpreadingMode::Geometric),
            "inverse_square" | "inverse-square" => Ok(SpreadingMode::InverseSquare),
            other => Err(format!(
                "unknown spreading mode `{other}` (expected geometric or inverse_square)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracerConfig {
    pub n_rays: usize,
    pub max_bounces: u32,
    pub spreading: SpreadingMode,
    pub record_paths: bool,
}

impl Default for TracerConfig {
    fn default() -> Self {
        Self {
            n_rays: 100_001,
            max_bounces: 16,
            spreading: SpreadingMode::Geometric,
            record_paths: false,
        }
    }
}

impl TracerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rays < 2 {
            return Err(Error::invalid("tracer.n_rays", format!("{} < 2", self.n_rays)));
        }
        if self.max_bounces < 1 {
            return Err(Error::invalid("tracer.max_bounces", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    Captured,
    Escaped,
    Terminated,
}

impl Fate {
    pub fn as_str(&self) -> &'static str {
        match self {
            Fate::Captured => "captured",
            Fate::Escaped => "escaped",
            Fate::Terminated => "terminated",
        }
    }
}

/// What happened to one ray.
#[derive(Debug, Clone, PartialEq)]
pub struct RayOutcome {
    pub fate: Fate,
    /// Power delivered to the receiver for captured rays, otherwise the
    /// power the ray still carried when it left or was dropped.
    pub power: f64,
    /// Vertices from the launch point to the final point; empty unless
    /// paths are recorded.
    pub path: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayRecord {
    pub fate: Fate,
    pub path: Vec<Vec2>,
}

/// Aggregate over a whole Tx fan.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceOutcome {
    pub emitted_power: f64,
    pub captured_power: f64,
    pub escaped_power: f64,
    pub terminated_power: f64,
    pub per_ray_records: Option<Vec<RayRecord>>,
}

/// Neumaier-compensated running sum. Used for every power reduction so that
/// totals over ~1e5 rays stay exact to a few ulps.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Surface {
    OpenEnd,
    Ceiling,
    Floor,
}

fn next_surface(scene: &Scene, ray: &Ray) -> Option<(Surface, Vec2, f64)> {
    let (x0, x1) = (scene.corridor_x_min, scene.corridor_x_max);
    let (y0, y1) = (scene.floor_y, scene.ceiling_height);
    let walls = [
        (Surface::OpenEnd, Vec2::new(x0, y0), Vec2::new(x0, y1)),
        (Surface::OpenEnd, Vec2::new(x1, y0), Vec2::new(x1, y1)),
        (Surface::Ceiling, Vec2::new(x0, y1), Vec2::new(x1, y1)),
        (Surface::Floor, Vec2::new(x0, y0), Vec2::new(x1, y0)),
    ];
    let mut best: Option<(Surface, Vec2, f64)> = None;
    for (kind, a, b) in walls {
        if let Some((p, t)) = ray_segment_intersection(ray, a, b) {
            if best.is_none_or(|(_, _, bt)| t < bt) {
                best = Some((kind, p, t));
            }
        }
    }
    best
}

/// Follow a single ray until it is captured, escapes, or runs out of bounces.
pub fn trace_ray(scene: &Scene, panel: &HsfPanel, ray: Ray, cfg: &TracerConfig) -> RayOutcome {
    let mut ray = ray;
    let mut travelled = 0.0;
    let mut path = Vec::new();
    if cfg.record_paths {
        path.push(ray.origin);
    }
    let finish = |fate, power, path| RayOutcome { fate, power, path };

    loop {
        let hit = next_surface(scene, &ray);
        let surface_t = hit.map_or(f64::INFINITY, |(_, _, t)| t);

        if rx_accepts(scene, ray.direction) {
            if let Some(tc) = ray_circle_entry(&ray, &scene.rx_aperture) {
                if tc <= surface_t {
                    let length = travelled + tc;
                    let power = match cfg.spreading {
                        SpreadingMode::Geometric => ray.power,
                        SpreadingMode::InverseSquare => ray.power / (length * length),
                    };
                    if cfg.record_paths {
                        path.push(ray.at(tc));
                    }
                    return finish(Fate::Captured, power, path);
                }
            }
        }

        let Some((surface, point, t)) = hit else {
            return finish(Fate::Escaped, ray.power, path);
        };
        if cfg.record_paths {
            path.push(point);
        }
        travelled += t;
        let normal = match surface {
            Surface::OpenEnd => return finish(Fate::Escaped, ray.power, path),
            _ if ray.bounce_count >= cfg.max_bounces => {
                return finish(Fate::Terminated, ray.power, path)
            }
            Surface::Ceiling => panel.normal_at(point.x),
            Surface::Floor => Vec2::new(0.0, 1.0),
        };
        let direction = reflect_unchecked(ray.direction, normal);
        // A virtual normal steep enough to send the ray back into the
        // ceiling leaves it nowhere to go; the surface absorbs it.
        if surface == Surface::Ceiling && direction.y >= 0.0 {
            return finish(Fate::Terminated, ray.power, path);
        }
        ray = Ray {
            origin: point,
            direction,
            power: ray.power,
            bounce_count: ray.bounce_count + 1,
        };
    }
}

/// Launch the Tx fan from the dislocated user and aggregate the fates.
///
/// Rays are traced in parallel on the current rayon pool; the reduction
/// runs sequentially in ray-index order, so the result does not depend on
/// the number of workers.
pub fn received_power(
    scene: &Scene,
    panel: &HsfPanel,
    dislocation: f64,
    tx_power: f64,
    cfg: &TracerConfig,
) -> Result<TraceOutcome> {
    cfg.validate()?;
    let fan = tx_ray_fan(scene, dislocation, cfg.n_rays, tx_power)?;
    let outcomes: Vec<RayOutcome> = fan
        .par_iter()
        .map(|&ray| trace_ray(scene, panel, ray, cfg))
        .collect();

    let mut emitted = CompensatedSum::default();
    let mut captured = CompensatedSum::default();
    let mut escaped = CompensatedSum::default();
    let mut terminated = CompensatedSum::default();
    for (ray, out) in fan.iter().zip(&outcomes) {
        emitted.add(ray.power);
        match out.fate {
            Fate::Captured => captured.add(out.power),
            Fate::Escaped => escaped.add(out.power),
            Fate::Terminated => terminated.add(out.power),
        }
    }
    let per_ray_records = cfg.record_paths.then(|| {
        outcomes
            .into_iter()
            .map(|o| RayRecord {
                fate: o.fate,
                path: o.path,
            })
            .collect()
    });
    Ok(TraceOutcome {
        emitted_power: emitted.value(),
        captured_power: captured.value(),
        escaped_power: escaped.value(),
        terminated_power: terminated.value(),
        per_ray_records,
    })
}

/// `P_rx / P_tx`.
pub fn efficiency(outcome: &TraceOutcome, emitted: f64) -> Result<f64> {
    if !(emitted > 0.0) {
        return Err(Error::invalid("emitted power", format!("{emitted} must be > 0")));
    }
    Ok(outcome.captured_power / emitted)
}

/// Single-bounce received power by midpoint quadrature over the ceiling.
///
/// The Tx cone lights `x in [d - x_b, d + x_b]` with `x_b = (H - h) tan(halfwidth)`.
/// A uniform angular fan deposits power per unit length
/// `P G (H - h) / (2 halfwidth ((x - d)^2 + (H - h)^2))` there. Each ceiling
/// point contributes if its reflected ray enters the aperture, inside the
/// Rx cone, before reaching the floor or an open end.
pub fn analytic_received_power(
    scene: &Scene,
    panel: &HsfPanel,
    dislocation: f64,
    tx_power: f64,
    quad_points: usize,
) -> Result<f64> {
    if quad_points < 10 {
        return Err(Error::invalid("quad_points", format!("{quad_points} < 10")));
    }
    let user = scene.user_position(dislocation);
    let rise = scene.ceiling_height - user.y;
    let half_span = scene.tx_footprint_halfwidth();
    let dx = 2.0 * half_span / quad_points as f64;
    let density = tx_power * scene.tx.gain * rise / (2.0 * scene.tx.beam_halfwidth);
    let aperture = &scene.rx_aperture;

    let mut total = CompensatedSum::default();
    for k in 0..quad_points {
        let x = user.x - half_span + (k as f64 + 0.5) * dx;
        if x < scene.corridor_x_min || x > scene.corridor_x_max {
            continue;
        }
        let offset = x - user.x;
        let incident = Vec2::new(offset, rise) * (1.0 / offset.hypot(rise));
        let out = reflect_unchecked(incident, panel.normal_at(x));
        if out.y >= 0.0 || !rx_accepts(scene, out) {
            continue;
        }
        let from = Vec2::new(x, scene.ceiling_height);
        let probe = Ray {
            origin: from,
            direction: out,
            power: 0.0,
            bounce_count: 1,
        };
        let Some(tc) = ray_circle_entry(&probe, aperture) else {
            continue;
        };
        let entry = probe.at(tc);
        if entry.y < scene.floor_y
            || entry.x < scene.corridor_x_min
            || entry.x > scene.corridor_x_max
        {
            continue;
        }
        total.add(density / (offset * offset + rise * rise) * dx);
    }
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::build_default_scene;
    use crate::steering::{build_schedule, materialize_normals, PositionGrid, SteeringMode};

    fn static_panel(scene: &Scene) -> HsfPanel {
        let g = PositionGrid::new(0.002, 0.5).unwrap();
        let s = build_schedule(SteeringMode::Static, scene.ceiling.last_index(), g).unwrap();
        materialize_normals(&s, scene).unwrap()
    }

    fn up_from(x: f64) -> Ray {
        Ray::new(Vec2::new(x, 1.0), Vec2::new(0.0, 1.0), 1.0).unwrap()
    }

    #[test]
    fn vertical_ray_in_mirror_corridor_runs_out_of_bounces() {
        let scene = build_default_scene();
        let cfg = TracerConfig {
            record_paths: true,
            ..Default::default()
        };
        let out = trace_ray(&scene, &scene.ceiling, up_from(0.0), &cfg);
        assert_eq!(out.fate, Fate::Terminated);
        assert_eq!(out.power, 1.0);
        // launch + 16 bounces + the final surface hit
        assert_eq!(out.path.len(), 18);
        assert!(out.path.iter().all(|p| p.x.abs() < 1e-12));
    }

    #[test]
    fn static_panel_captures_aligned_ray() {
        let scene = build_default_scene();
        let panel = static_panel(&scene);
        let cfg = TracerConfig {
            record_paths: true,
            ..Default::default()
        };
        let out = trace_ray(&scene, &panel, up_from(0.0), &cfg);
        assert_eq!(out.fate, Fate::Captured);
        assert_eq!(out.path.len(), 3);
        assert!(out.path[2].distance(scene.rx_position()) <= 0.05 + 1e-12);
    }

    #[test]
    fn dislocated_ray_misses_on_first_bounce() {
        let scene = build_default_scene();
        let panel = static_panel(&scene);
        let cfg = TracerConfig {
            record_paths: true,
            ..Default::default()
        };
        let out = trace_ray(&scene, &panel, up_from(0.2), &cfg);
        // captured on the first bounce would mean a 3-vertex path
        assert!(!(out.fate == Fate::Captured && out.path.len() == 3));
    }

    #[test]
    fn mirror_two_bounce_path() {
        // From (0,1) heading at slope 1: ceiling at (2,3), floor at (5,0)
        // is past the corridor, so it leaves through x = 4 at y = 1.
        let scene = build_default_scene();
        let d = Vec2::new(1.0, 1.0).normalized().unwrap();
        let ray = Ray::new(Vec2::new(0.0, 1.0), d, 1.0).unwrap();
        let cfg = TracerConfig {
            record_paths: true,
            ..Default::default()
        };
        let out = trace_ray(&scene, &scene.ceiling, ray, &cfg);
        assert_eq!(out.fate, Fate::Escaped);
        assert_eq!(out.path.len(), 3);
        assert!(out.path[1].distance(Vec2::new(2.0, 3.0)) < 1e-12);
        assert!(out.path[2].distance(Vec2::new(4.0, 1.0)) < 1e-12);

        // Steeper: slope 3 from (-1,... ) -> ceiling, floor, ceiling.
        let d = Vec2::new(1.0, 3.0).normalized().unwrap();
        let ray = Ray::new(Vec2::new(-0.5, 1.0), d, 1.0).unwrap();
        let out = trace_ray(&scene, &scene.ceiling, ray, &cfg);
        let expect = [
            Vec2::new(-0.5, 1.0),
            Vec2::new(-0.5 + 2.0 / 3.0, 3.0),
            Vec2::new(-0.5 + 2.0 / 3.0 + 1.0, 0.0),
            Vec2::new(-0.5 + 2.0 / 3.0 + 2.0, 3.0),
        ];
        for (p, e) in out.path.iter().zip(expect) {
            assert!(p.distance(e) < 1e-12, "{p:?} vs {e:?}");
        }
    }

    #[test]
    fn zero_width_rx_cone_captures_nothing() {
        let mut scene = build_default_scene();
        scene.rx.beam_halfwidth = 0.0;
        let panel = static_panel(&scene);
        let cfg = TracerConfig {
            n_rays: 2001,
            max_bounces: 1,
            ..Default::default()
        };
        let out = received_power(&scene, &panel, 0.0, 0.1, &cfg).unwrap();
        assert_eq!(out.captured_power, 0.0);
        assert_eq!(analytic_received_power(&scene, &panel, 0.0, 0.1, 1000).unwrap(), 0.0);
    }

    #[test]
    fn efficiency_ratio() {
        let o = TraceOutcome {
            captured_power: 0.086,
            ..Default::default()
        };
        assert!((efficiency(&o, 0.1).unwrap() - 0.86).abs() < 1e-15);
        let o = TraceOutcome {
            captured_power: 0.1,
            ..Default::default()
        };
        assert_eq!(efficiency(&o, 0.1).unwrap(), 1.0);
        assert_eq!(efficiency(&TraceOutcome::default(), 0.1).unwrap(), 0.0);
        assert!(efficiency(&o, 0.0).is_err());
    }

    #[test]
    fn footprint_half_span() {
        let scene = build_default_scene();
        let xb = scene.tx_footprint_halfwidth();
        assert!((xb - 0.535898384862245).abs() < 1e-12);
    }

    #[test]
    fn quadrature_rejects_few_points() {
        let scene = build_default_scene();
        assert!(analytic_received_power(&scene, &scene.ceiling, 0.0, 0.1, 9).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = TracerConfig {
            n_rays: 1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.n_rays = 2;
        cfg.max_bounces = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn inverse_square_weights_by_path_length() {
        let scene = build_default_scene();
        let panel = static_panel(&scene);
        let cfg = TracerConfig {
            spreading: SpreadingMode::InverseSquare,
            record_paths: true,
            ..Default::default()
        };
        let out = trace_ray(&scene, &panel, up_from(0.0), &cfg);
        assert_eq!(out.fate, Fate::Captured);
        let len = out.path[0].distance(out.path[1]) + out.path[1].distance(out.path[2]);
        assert!((out.power - 1.0 / (len * len)).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_is_exact_for_repeated_terms() {
        let mut s = CompensatedSum::default();
        for _ in 0..100_001 {
            s.add(0.1 / 100_001.0);
        }
        assert!((s.value() - 0.1).abs() <= 2.0 * f64::EPSILON * 0.1);
    }
}
