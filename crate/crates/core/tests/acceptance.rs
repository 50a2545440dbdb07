//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its runtime. Tolerances and thresholds are pinned in the assertions.

use std::time::Instant;

use glv_surgery::*;
use nalgebra::Vector3;

fn params(a: f64, b: f64, c: f64) -> SystemParams {
    SystemParams::new(a, b, c).unwrap()
}

fn default_run(p: SystemParams, ic: [f64; 3]) -> Trajectory {
    integrate(
        p,
        State::at_origin_time(ic[0], ic[1], ic[2]),
        &IntegratorConfig::default(),
    )
    .expect("integration failed")
}

/// Radial interval of an orbit about its own centroid.
fn radial_interval(traj: &Trajectory) -> (f64, f64) {
    let samples = traj.samples();
    let centroid: Vector3<f64> =
        samples.iter().map(|s| s.position()).sum::<Vector3<f64>>() / samples.len() as f64;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for s in samples {
        let r = (s.position() - centroid).norm();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

#[test]
fn acceptance_1_fixed_point_oracle() {
    let start = Instant::now();
    let p = params(3.0, 3.0, 3.0);
    let v = rhs(p, State::at_origin_time(1.0, 1.0, 1.0));
    assert!(v.x.abs() <= 1e-15 && v.y.abs() <= 1e-15 && v.z.abs() <= 1e-15);

    let cfg = IntegratorConfig {
        t_end: 100.0,
        ..Default::default()
    };
    let traj = integrate(p, State::at_origin_time(1.0, 1.0, 1.0), &cfg).unwrap();
    for s in traj.samples() {
        assert!((s.position() - Vector3::new(1.0, 1.0, 1.0)).norm() <= 1e-6);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("ACCEPTANCE 1 fixed-point oracle: PASS ({elapsed:.2?})");
}

#[test]
fn acceptance_2_spherical_regime() {
    let start = Instant::now();
    let p = params(3.0, 3.0, 3.0);
    let ics = [
        [1.0, 1.59, 0.81],
        [1.0, 1.3, 0.89],
        [1.0, 1.18, 0.95],
        [1.0, 1.08, 0.98],
    ];
    let mut intervals = Vec::new();
    for ic in ics {
        let traj = default_run(p, ic);
        let report = classify(&traj);
        assert_eq!(
            report.verdict,
            Verdict::Spherical,
            "IC {ic:?} gave {:?}: {}",
            report.verdict,
            report.evidence_notes
        );
        intervals.push(radial_interval(&traj));
    }
    // Strict nesting: ordered by outer radius, both interval endpoints must
    // decrease strictly (no two orbits' [min, max] orderings interleave).
    for w in intervals.windows(2) {
        let ((min_outer, max_outer), (min_inner, max_inner)) = (w[0], w[1]);
        assert!(
            max_outer > max_inner && min_outer > min_inner,
            "shell intervals interleave: {w:?}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("ACCEPTANCE 2 spherical regime: PASS ({elapsed:.2?})");
}

#[test]
fn acceptance_3_toroidal_regime() {
    let start = Instant::now();
    let p = params(2.9851, 3.0, 3.0);
    for ic in [[1.1075, 1.0, 1.0], [1.0, 1.0, 0.95], [1.0, 1.0, 0.9]] {
        let traj = default_run(p, ic);
        let report = classify(&traj);
        assert_eq!(
            report.verdict,
            Verdict::Toroidal,
            "IC {ic:?} gave {:?}: {}",
            report.verdict,
            report.evidence_notes
        );
        assert!(report.winding_count >= 2, "IC {ic:?}: {report:?}");
        let gap = report.loop_gap.expect("toroidal verdict carries loop gap");
        assert!(gap <= 0.10, "IC {ic:?}: loop gap {gap}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("ACCEPTANCE 3 toroidal regime: PASS ({elapsed:.2?})");
}

#[test]
fn acceptance_4_fractal_torus_shell() {
    let start = Instant::now();
    let p = params(2.9851, 3.0, 3.0);
    let traj = default_run(p, [1.45, 1.0, 1.45]);
    assert!(
        (traj.t_end() - 500.0).abs() < 1e-6,
        "run did not reach t_end = 500"
    );
    for s in traj.samples() {
        assert!(s.position().norm() < 100.0, "unbounded at t = {}", s.t);
    }
    let report = classify(&traj);
    let toroidal_median = {
        let mut recs: Vec<f64> = [[1.1075, 1.0, 1.0], [1.0, 1.0, 0.95], [1.0, 1.0, 0.9]]
            .iter()
            .map(|&ic| classify(&default_run(p, ic)).recurrence_distance)
            .collect();
        recs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        recs[1]
    };
    let ok = match report.verdict {
        Verdict::Chaotic => true,
        Verdict::Toroidal => report.recurrence_distance >= 10.0 * toroidal_median,
        other => panic!("fractal shell gave {other:?}: {}", report.evidence_notes),
    };
    assert!(
        ok,
        "verdict {:?} with recurrence {:.3e} (toroidal median {:.3e})",
        report.verdict, report.recurrence_distance, toroidal_median
    );
    let elapsed = start.elapsed();
    println!("ACCEPTANCE 4 fractal torus shell: PASS ({elapsed:.2?})");
}

#[test]
fn acceptance_5_boundary_bracketing() {
    let start = Instant::now();
    let spec = SweepSpec {
        c_range: RangeSpec::new(3.0, 3.0, 1),
        ratio_range: RangeSpec::new(0.95, 1.05, 11),
        fixed_a: 3.0,
        ics: SweepSpec::default_ics(),
        integrator: IntegratorConfig::default(),
        thresholds: ClassifierThresholds::default(),
    };
    let result = run_sweep(&spec).unwrap();
    let boundary = boundary_estimate(&result);
    assert!(!boundary.is_empty(), "no verdict transition found");
    let step = spec.ratio_range.step();
    for (_, ratio) in &boundary {
        assert!(
            (ratio - 1.0).abs() <= step + 1e-12,
            "boundary cell at ratio {ratio} is more than one grid step from 1.0"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 5 boundary bracketing: PASS ({elapsed:.2?}, boundary cells {:?})",
        boundary.iter().map(|(_, r)| *r).collect::<Vec<_>>()
    );
}

#[test]
fn acceptance_6_surgery_topology_flip() {
    let start = Instant::now();
    for k in 0..50 {
        let s = k as f64 / 49.0;
        let mesh = morph_surface(&MorphParams {
            s,
            ..Default::default()
        })
        .unwrap();
        assert!(mesh.is_edge_manifold(), "non-manifold at s = {s}");
        let chi = euler_characteristic(&mesh).unwrap();
        assert_eq!(
            chi,
            if s < 0.5 { 2 } else { 0 },
            "Euler characteristic at s = {s}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("ACCEPTANCE 6 surgery topology flip: PASS ({elapsed:.2?})");
}

#[test]
fn acceptance_7_solid_surgery_nesting() {
    let start = Instant::now();
    let mp = MorphParams {
        s: 1.0,
        ..Default::default()
    };
    let meshes = solid_layers(&mp, &[1.0, 0.75, 0.5, 0.25]).unwrap();
    assert_eq!(meshes.len(), 4);
    for mesh in &meshes {
        assert_eq!(euler_characteristic(mesh).unwrap(), 0);
    }
    // Pairwise disjoint: the triangle-intersection oracle finds no crossing
    // pair, and every inner torus is contained in its outer neighbour.
    for i in 0..meshes.len() {
        for j in i + 1..meshes.len() {
            assert!(
                !oracle::meshes_intersect(&meshes[i], &meshes[j]),
                "layers {i} and {j} intersect"
            );
        }
    }
    for w in meshes.windows(2) {
        let (outer, inner) = (&w[0], &w[1]);
        for (idx, v) in inner.vertices.iter().enumerate().step_by(23) {
            assert!(
                outer.contains_point(&Vector3::from(*v)),
                "inner vertex {idx} escapes its outer layer"
            );
        }
    }
    let circle = limit_circle(&mp).unwrap();
    assert_eq!(circle.first(), circle.last());
    for p in &circle {
        assert!(p.z.abs() <= 1e-12, "limit circle leaves the equatorial plane");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("ACCEPTANCE 7 solid surgery nesting: PASS ({elapsed:.2?})");
}

#[test]
fn acceptance_8_integrator_order() {
    let start = Instant::now();
    let p = params(3.0, 3.0, 3.0);
    let ic = State::at_origin_time(1.0, 1.59, 0.81);
    let end = |h: f64| {
        integrate_fixed(p, ic, h, 10.0)
            .unwrap()
            .last()
            .unwrap()
            .position()
    };
    let (e1, e2, e3) = (end(0.02), end(0.01), end(0.005));
    let order = ((e1 - e2).norm() / (e2 - e3).norm()).log2();
    assert!(
        (3.8..=5.2).contains(&order),
        "Richardson order {order:.3} outside [3.8, 5.2]"
    );
    let elapsed = start.elapsed();
    println!("ACCEPTANCE 8 integrator order: PASS ({elapsed:.2?}, order {order:.3})");
}

/// Triangle-triangle intersection oracle with a uniform-grid broad phase.
mod oracle {
    use glv_surgery::SurgeryMesh;
    use nalgebra::Vector3;
    use std::collections::HashMap;

    type Tri = [Vector3<f64>; 3];

    fn triangles(mesh: &SurgeryMesh) -> Vec<Tri> {
        mesh.faces
            .iter()
            .map(|f| [mesh.vertex(f[0]), mesh.vertex(f[1]), mesh.vertex(f[2])])
            .collect()
    }

    /// Segment-triangle intersection (strict interior, parametric in (0,1)).
    fn segment_hits_triangle(p: &Vector3<f64>, q: &Vector3<f64>, tri: &Tri) -> bool {
        let dir = q - p;
        let e1 = tri[1] - tri[0];
        let e2 = tri[2] - tri[0];
        let pvec = dir.cross(&e2);
        let det = e1.dot(&pvec);
        if det.abs() < 1e-16 {
            return false;
        }
        let inv = 1.0 / det;
        let tvec = p - tri[0];
        let u = tvec.dot(&pvec) * inv;
        if !(0.0..=1.0).contains(&u) {
            return false;
        }
        let qvec = tvec.cross(&e1);
        let v = dir.dot(&qvec) * inv;
        if v < 0.0 || u + v > 1.0 {
            return false;
        }
        let t = e2.dot(&qvec) * inv;
        (1e-12..=1.0 - 1e-12).contains(&t)
    }

    fn tris_intersect(a: &Tri, b: &Tri) -> bool {
        for i in 0..3 {
            if segment_hits_triangle(&a[i], &a[(i + 1) % 3], b)
                || segment_hits_triangle(&b[i], &b[(i + 1) % 3], a)
            {
                return true;
            }
        }
        false
    }

    fn cell_of(p: &Vector3<f64>, origin: &Vector3<f64>, size: f64) -> (i64, i64, i64) {
        (
            ((p.x - origin.x) / size).floor() as i64,
            ((p.y - origin.y) / size).floor() as i64,
            ((p.z - origin.z) / size).floor() as i64,
        )
    }

    pub fn meshes_intersect(a: &SurgeryMesh, b: &SurgeryMesh) -> bool {
        let tris_a = triangles(a);
        let tris_b = triangles(b);
        let origin = Vector3::new(-2.0, -2.0, -2.0);
        let size = 0.08;
        let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, t) in tris_a.iter().enumerate() {
            let mut cells = Vec::new();
            for v in t {
                let c = cell_of(v, &origin, size);
                if !cells.contains(&c) {
                    cells.push(c);
                }
            }
            // Cover the AABB of the triangle, not just its corners.
            let lo = cell_of(&t.iter().fold(t[0], |m, v| m.inf(v)), &origin, size);
            let hi = cell_of(&t.iter().fold(t[0], |m, v| m.sup(v)), &origin, size);
            for x in lo.0..=hi.0 {
                for y in lo.1..=hi.1 {
                    for z in lo.2..=hi.2 {
                        grid.entry((x, y, z)).or_default().push(i);
                    }
                }
            }
            let _ = cells;
        }
        for tb in &tris_b {
            let lo = cell_of(&tb.iter().fold(tb[0], |m, v| m.inf(v)), &origin, size);
            let hi = cell_of(&tb.iter().fold(tb[0], |m, v| m.sup(v)), &origin, size);
            let mut seen = Vec::new();
            for x in lo.0..=hi.0 {
                for y in lo.1..=hi.1 {
                    for z in lo.2..=hi.2 {
                        if let Some(list) = grid.get(&(x, y, z)) {
                            for &ia in list {
                                if !seen.contains(&ia) {
                                    seen.push(ia);
                                    if tris_intersect(&tris_a[ia], tb) {
                                        return true;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        false
    }
}
