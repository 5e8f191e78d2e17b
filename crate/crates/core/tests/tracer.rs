use hsf_core::geometry::Vec2;
use hsf_core::scene::{build_default_scene, HsfPanel, Scene, SceneParams};
use hsf_core::steering::{build_schedule, materialize_normals, PositionGrid, SteeringMode};
use hsf_core::tracer::{
    analytic_received_power, received_power, Fate, SpreadingMode, TracerConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TX_POWER: f64 = 0.1;

fn panel(scene: &Scene, mode: SteeringMode) -> HsfPanel {
    let grid = PositionGrid::new(0.002, 0.5).unwrap();
    let s = build_schedule(mode, scene.ceiling.last_index(), grid).unwrap();
    materialize_normals(&s, scene).unwrap()
}

fn single_bounce(n_rays: usize) -> TracerConfig {
    TracerConfig {
        n_rays,
        max_bounces: 1,
        ..Default::default()
    }
}

#[test]
fn static_panel_at_origin_captures_everything_single_bounce() {
    let scene = build_default_scene();
    let p = panel(&scene, SteeringMode::Static);
    let out = received_power(&scene, &p, 0.0, TX_POWER, &single_bounce(20_001)).unwrap();
    assert!((out.captured_power - TX_POWER).abs() < 1e-12);
    assert_eq!(out.escaped_power, 0.0);
}

#[test]
fn ray_fan_and_quadrature_agree_on_unbiased_panel() {
    // The unbiased panel interleaves 251 targets subunit by subunit, so the
    // integrand is a fine comb; both discretizations must still agree.
    let scene = build_default_scene();
    let p = panel(&scene, SteeringMode::Unbiased);
    for d in [0.0, 0.05, 0.1, 0.25] {
        let mc = received_power(&scene, &p, d, TX_POWER, &single_bounce(100_000))
            .unwrap()
            .captured_power;
        let quad = analytic_received_power(&scene, &p, d, TX_POWER, 100_000).unwrap();
        assert!(quad > 0.0);
        let rel = (mc - quad).abs() / quad;
        assert!(rel <= 0.02, "d={d}: rays {mc} vs quadrature {quad} ({rel})");
    }
}

#[test]
fn ray_fan_and_quadrature_agree_at_partial_capture() {
    // Near the edge of the static capture window only part of the lit
    // ceiling still reaches the aperture.
    let scene = build_default_scene();
    let p = panel(&scene, SteeringMode::Static);
    for d in [0.026, 0.028, 0.031] {
        let mc = received_power(&scene, &p, d, TX_POWER, &single_bounce(100_000))
            .unwrap()
            .captured_power;
        let quad = analytic_received_power(&scene, &p, d, TX_POWER, 100_000).unwrap();
        assert!(quad > 0.0 && quad < TX_POWER, "d={d}: {quad}");
        assert!((mc - quad).abs() / quad <= 0.02, "d={d}: {mc} vs {quad}");
    }
}

#[test]
fn quadrature_converges() {
    let scene = build_default_scene();
    let p = panel(&scene, SteeringMode::Static);
    let full = analytic_received_power(&scene, &p, 0.0, TX_POWER, 1000).unwrap();
    assert!((full - TX_POWER).abs() < 1e-7, "{full}");
    let coarse = analytic_received_power(&scene, &p, 0.027, TX_POWER, 10_000).unwrap();
    let fine = analytic_received_power(&scene, &p, 0.027, TX_POWER, 200_000).unwrap();
    assert!((coarse - fine).abs() / fine < 0.01);
}

#[test]
fn larger_aperture_never_captures_less() {
    let cfg = TracerConfig {
        n_rays: 5001,
        ..Default::default()
    };
    for mode in [SteeringMode::Static, SteeringMode::Unbiased] {
        let mut last = 0.0;
        for aperture in [0.01, 0.03, 0.05, 0.1, 0.2, 0.4] {
            let params = SceneParams {
                aperture,
                ..SceneParams::default()
            };
            let scene = Scene::from_params(&params).unwrap();
            let p = panel(&scene, mode);
            let got = received_power(&scene, &p, 0.08, TX_POWER, &cfg)
                .unwrap()
                .captured_power;
            assert!(got >= last, "{mode:?} aperture {aperture}: {got} < {last}");
            last = got;
        }
    }
}

#[test]
fn power_is_conserved_for_random_panels() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let scene = build_default_scene();
        let normals = (0..scene.ceiling.len())
            .map(|_| {
                let a: f64 = rng.gen_range(-1.2..1.2);
                Vec2::new(a.sin(), -a.cos())
            })
            .collect();
        let p = scene.ceiling.with_normals(normals).unwrap();
        let cfg = TracerConfig {
            n_rays: 10_001,
            max_bounces: rng.gen_range(1..40),
            ..Default::default()
        };
        let out = received_power(&scene, &p, rng.gen_range(-0.5..2.0), TX_POWER, &cfg).unwrap();
        let total = out.captured_power + out.escaped_power + out.terminated_power;
        assert!((total - TX_POWER).abs() <= 1e-12 * TX_POWER, "{total}");
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let scene = build_default_scene();
    let p = panel(&scene, SteeringMode::Biased { bias_p: 0.3, j_c: 0 });
    let cfg = TracerConfig {
        n_rays: 30_001,
        ..Default::default()
    };
    let run = |workers| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap()
            .install(|| received_power(&scene, &p, 0.13, TX_POWER, &cfg).unwrap())
    };
    let one = run(1);
    for w in [2, 5, 8] {
        let other = run(w);
        assert_eq!(one.captured_power.to_bits(), other.captured_power.to_bits());
        assert_eq!(one.escaped_power.to_bits(), other.escaped_power.to_bits());
        assert_eq!(one.terminated_power.to_bits(), other.terminated_power.to_bits());
    }
}

#[test]
fn recorded_paths_match_fates() {
    let scene = build_default_scene();
    let p = panel(&scene, SteeringMode::Static);
    let cfg = TracerConfig {
        n_rays: 101,
        record_paths: true,
        ..Default::default()
    };
    let out = received_power(&scene, &p, 0.2, TX_POWER, &cfg).unwrap();
    let recs = out.per_ray_records.as_ref().unwrap();
    assert_eq!(recs.len(), 101);
    for r in recs {
        assert!(r.path.len() >= 2);
        assert_eq!(r.path[0], Vec2::new(0.2, 1.0));
        let end = *r.path.last().unwrap();
        match r.fate {
            Fate::Captured => assert!(end.distance(scene.rx_position()) <= 0.05 + 1e-9),
            Fate::Escaped => assert!(
                (end.x - scene.corridor_x_min).abs() < 1e-9
                    || (end.x - scene.corridor_x_max).abs() < 1e-9
            ),
            Fate::Terminated => {}
        }
    }
    // At 20 cm the first ceiling bounce no longer reaches the receiver.
    assert!(recs
        .iter()
        .all(|r| !(r.fate == Fate::Captured && r.path.len() == 3)));
}

#[test]
fn inverse_square_scales_capture_down() {
    let scene = build_default_scene();
    let p = panel(&scene, SteeringMode::Static);
    let geo = received_power(&scene, &p, 0.0, TX_POWER, &single_bounce(2001)).unwrap();
    let inv = received_power(
        &scene,
        &p,
        0.0,
        TX_POWER,
        &TracerConfig {
            spreading: SpreadingMode::InverseSquare,
            ..single_bounce(2001)
        },
    )
    .unwrap();
    // every captured path is between 5 and 7 m long
    let ratio = inv.captured_power / geo.captured_power;
    assert!(ratio > 1.0 / 49.0 && ratio < 1.0 / 25.0, "{ratio}");
}
