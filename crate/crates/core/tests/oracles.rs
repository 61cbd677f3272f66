use myostrain::evaluation::mean_distance_error;
use myostrain::geometry::{build_segment_layout, MyocardialMesh, Point2D, View};
use myostrain::phantom::{gaussian_integral, GeometryConfig, MotionModel, Phantom, Region, ScattererField};
use myostrain::pipeline::{run_case, simulate, SimulationConfig, TrackingMode};
use myostrain::speckle::{render_complex, BModeFrame, GridConfig, PsfSpec, RenderMode};
use myostrain::strain::StrainOptions;
use myostrain::tracking::{estimate_flow, ncc, propagate_mesh_flow, warp_mesh, DisplacementField, TrackerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn gaussian_integral_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let a = rng.random_range(-20.0..20.0);
        let b = a + rng.random_range(0.0..10.0);
        let c = rng.random_range(-20.0..20.0);
        let s = rng.random_range(0.3..6.0);
        let oracle = simpson(|x| (-(x - c) * (x - c) / (2.0 * s * s)).exp(), a, b, 2000);
        assert!((gaussian_integral(a, b, c, s) - oracle).abs() < 1e-9);
    }
}

#[test]
fn segment_boundaries_match_brute_force_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let n = rng.random_range(9..45);
        let mut pts = vec![Point2D::new(0.0, 0.0)];
        for _ in 1..n {
            let last = *pts.last().unwrap();
            pts.push(Point2D::new(last.x + rng.random_range(0.1..2.0), rng.random_range(-1.0..1.0)));
        }
        let apex = rng.random_range(4..n - 4);
        let layout = build_segment_layout(&pts, apex, View::FourChamber).unwrap();

        // Independent scan: each boundary is the vertex nearest a third of
        // the wall's arc length, ties to the basal side.
        let scan = |wall: &[Point2D<f64>]| {
            let mut cum = vec![0.0];
            for w in wall.windows(2) {
                cum.push(cum.last().unwrap() + w[0].distance(w[1]));
            }
            let total = *cum.last().unwrap();
            let pick = |target: f64, lo: usize, hi: usize| {
                let mut best = lo;
                for i in lo..=hi {
                    if (cum[i] - target).abs() < (cum[best] - target).abs() {
                        best = i;
                    }
                }
                best
            };
            let b1 = pick(total / 3.0, 1, wall.len() - 3);
            (b1, pick(2.0 * total / 3.0, b1 + 1, wall.len() - 2))
        };
        let (b1, b2) = scan(&pts[..=apex]);
        let mut second = pts[apex..].to_vec();
        second.reverse();
        let (r1, r2) = scan(&second);
        let s = layout.segments();
        assert_eq!((s[0].end, s[1].end, s[2].end), (b1, b2, apex));
        assert_eq!((s[3].end, s[4].end), (n - 1 - r2, n - 1 - r1));
    }
}

#[test]
fn single_scatterer_matches_psf_formula() {
    let psf = PsfSpec::default();
    let grid = GridConfig { width: 40, height: 40, pixel_pitch: 0.25 };
    let p = Point2D::new(4.93, 5.11);
    let field = ScattererField::new(0, 1.0, vec![p], vec![1.7], vec![true], vec![Region::Myocardium]).unwrap();
    let image = render_complex(&field, &psf, &grid, RenderMode::Deterministic).unwrap();
    for r in 0..grid.height {
        for c in 0..grid.width {
            let dx = c as f64 * 0.25 - p.x;
            let dy = r as f64 * 0.25 - p.y;
            let inside = dx.abs() <= 3.0 * psf.sigma_lateral && dy.abs() <= 3.0 * psf.sigma_axial;
            let expected = if inside {
                let mag = 1.7 * (-dx * dx / (2.0 * 0.64) - dy * dy / (2.0 * 0.09)).exp();
                let phase = 2.0 * std::f64::consts::PI * dy / 0.44;
                (mag * phase.cos(), mag * phase.sin())
            } else {
                (0.0, 0.0)
            };
            let got = image.at(c, r);
            assert!((got.re - expected.0).abs() < 1e-12 && (got.im - expected.1).abs() < 1e-12, "pixel ({c}, {r})");
        }
    }
}

#[test]
fn parallel_render_matches_sequential() {
    let case = simulate(&SimulationConfig { motion: short_motion(), ..SimulationConfig::default() }, 5).unwrap();
    let psf = PsfSpec::default();
    let grid = GridConfig::default();
    let a = render_complex(&case.scatterers[1], &psf, &grid, RenderMode::Deterministic).unwrap();
    let b = render_complex(&case.scatterers[1], &psf, &grid, RenderMode::Parallel).unwrap();
    for (x, y) in a.data.iter().zip(&b.data) {
        assert!((x - y).norm() < 1e-9);
    }
}

fn short_motion() -> myostrain::phantom::MotionConfig {
    myostrain::phantom::MotionConfig { n_frames: 4, es_index: 2, ..Default::default() }
}

#[test]
fn warp_matches_four_neighbour_interpolation() {
    let (w, h) = (20, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let vectors: Vec<[f32; 2]> = (0..w * h)
        .map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
        .collect();
    let field = DisplacementField::new(w, h, 0.5, 0, 1, vectors.clone()).unwrap();
    let random_contour = |rng: &mut ChaCha8Rng| -> Vec<Point2D<f64>> {
        (0..9)
            .map(|_| Point2D::new(rng.random_range(0.0..9.5), rng.random_range(0.0..7.5)))
            .collect()
    };
    let endo = random_contour(&mut rng);
    let epi = random_contour(&mut rng);
    let mesh = MyocardialMesh::from_estimate(endo, epi, 4, 0).unwrap();
    let warped = warp_mesh(&mesh, &field).unwrap();
    for (p, q) in mesh.vertices().zip(warped.mesh.vertices()) {
        let (x, y) = (p.x / 0.5, p.y / 0.5);
        let (c, r) = (x.floor() as usize, y.floor() as usize);
        let (fx, fy) = (x - c as f64, y - r as f64);
        let v = |c: usize, r: usize, k: usize| vectors[r * w + c][k] as f64;
        for k in 0..2 {
            let d = v(c, r, k) * (1.0 - fx) * (1.0 - fy)
                + v(c + 1, r, k) * fx * (1.0 - fy)
                + v(c, r + 1, k) * (1.0 - fx) * fy
                + v(c + 1, r + 1, k) * fx * fy;
            let moved = if k == 0 { q.x - p.x } else { q.y - p.y };
            assert!((moved - d * 0.5).abs() < 1e-9);
        }
    }
}

#[test]
fn analytic_fields_propagate_forward_and_backward() {
    let model = MotionModel::raised_cosine(16, 0, 7, 0.2, 0.3).unwrap();
    let phantom = Phantom::new(&GeometryConfig::default(), &model, &[]).unwrap();
    let gt = phantom.meshes().unwrap();
    let mut fields = Vec::new();
    for t in 0..15 {
        fields.push(phantom.analytic_flow(t, t + 1, 128, 128, 0.25).unwrap());
        fields.push(phantom.analytic_flow(t + 1, t, 128, 128, 0.25).unwrap());
    }
    let from_es = propagate_mesh_flow(&gt[7], &fields, 16).unwrap();
    let err = mean_distance_error(&from_es, &gt, None).unwrap();
    assert!(err.sequence_mean < 0.5, "{}", err.sequence_mean);
}

fn shifted_frames(dx: usize, dy: usize) -> (BModeFrame, BModeFrame) {
    let case = simulate(&SimulationConfig { motion: short_motion(), ..SimulationConfig::default() }, 21).unwrap();
    let a = &case.frames[0];
    let (w, h) = (a.width, a.height);
    let mut moved = vec![0u8; w * h];
    for r in 0..h {
        for c in 0..w {
            let (sc, sr) = (c.saturating_sub(dx), r.saturating_sub(dy));
            moved[r * w + c] = a.intensities[sr * w + sc];
        }
    }
    (a.clone(), BModeFrame::new(w, h, a.pixel_pitch, 1, moved).unwrap())
}

#[test]
fn rigid_integer_translation_is_recovered() {
    let (a, b) = shifted_frames(2, 1);
    let field = estimate_flow(&a, &b, &TrackerConfig::default()).unwrap();
    let mut bad = 0;
    for r in 24..104 {
        for c in 24..104 {
            let v = field.at(c, r);
            if (v[0] - 2.0).abs() > 0.05 || (v[1] - 1.0).abs() > 0.05 {
                bad += 1;
            }
        }
    }
    assert!(bad * 100 < 80 * 80, "{bad} interior pixels off the shift");
}

#[test]
fn frame_similarity_falls_with_coherence() {
    let mut means = Vec::new();
    for ratio in [1.0, 0.9, 0.7, 0.5] {
        let mut total = 0.0;
        for seed in 0..3 {
            let mut config = SimulationConfig { motion: short_motion(), ..SimulationConfig::default() };
            config.motion.peak_longitudinal_shortening = 0.0;
            config.motion.peak_radial_thickening = 0.0;
            config.scatterers.coherence_ratio = ratio;
            let case = simulate(&config, seed).unwrap();
            let f = |t: usize| case.frames[t].intensities.iter().map(|&v| v as f64).collect::<Vec<_>>();
            total += ncc(&f(0), &f(1));
        }
        means.push(total / 3.0);
    }
    assert_eq!(means[0], 1.0);
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

#[test]
fn coherent_scatterers_keep_amplitudes() {
    let mut config = SimulationConfig { motion: short_motion(), ..SimulationConfig::default() };
    config.scatterers.coherence_ratio = 0.7;
    let case = simulate(&config, 4).unwrap();
    let first = &case.scatterers[0];
    let n_myo = first.count(Region::Myocardium);
    let coherent = first.coherent[..n_myo].iter().filter(|&&c| c).count();
    assert_eq!(coherent, (0.7 * n_myo as f64 + 1e-9).floor() as usize);
    let sorted = |f: &ScattererField| {
        let mut a: Vec<f64> = (0..n_myo).filter(|&i| f.coherent[i]).map(|i| f.amplitudes[i]).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        a
    };
    for later in &case.scatterers[1..] {
        assert_eq!(sorted(first), sorted(later));
        assert_eq!(first.positions[n_myo..], later.positions[n_myo..]);
        let redrawn = (0..n_myo).filter(|&i| !first.coherent[i]).any(|i| first.amplitudes[i] != later.amplitudes[i]);
        assert!(redrawn);
    }
}

#[test]
fn trajectories_beat_flow_on_clean_speckle() {
    let mut config = SimulationConfig::default();
    config.scatterers.coherence_ratio = 1.0;
    let tracker = TrackerConfig::default();
    let options = StrainOptions::default();
    let traj = run_case(&config, 0, TrackingMode::Trajectory, &tracker, &options).unwrap();
    let flow = run_case(&config, 0, TrackingMode::Flow, &tracker, &options).unwrap();
    assert!(
        traj.distance.sequence_mean < flow.distance.sequence_mean,
        "{} vs {}",
        traj.distance.sequence_mean,
        flow.distance.sequence_mean
    );
}
