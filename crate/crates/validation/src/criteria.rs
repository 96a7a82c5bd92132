//! The acceptance criteria, one function per criterion.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use tempfile::tempdir;

use rosl_core::{
    contraction_rate, exclusion_radius, ivt_bisect, project, scan_solution_set, solve, AxisBox,
    BuiltinMap, ConvexSet, Error, IterationTrace, Scheme, SolveConfig, Status, Vector,
};

use crate::{fixtures, Checks};

fn v2(a: f64, b: f64) -> Vector {
    Vector::new(vec![a, b]).unwrap()
}

fn v1(a: f64) -> Vector {
    Vector::scalar(a).unwrap()
}

fn ratios_within(trace: &IterationTrace, expected: f64, eps: f64) -> Option<(usize, f64)> {
    trace
        .defect_ratios()
        .into_iter()
        .enumerate()
        .find(|(_, r)| (r - expected).abs() > eps)
}

pub fn criterion_1(c: &mut Checks) {
    for lip in [0.5, 1.0, 1.5, 1.9] {
        let map = match BuiltinMap::rotation_2d(-1.0, lip) {
            Ok(map) => map,
            Err(e) => {
                c.check(false, || format!("L={lip}: no such map ({e})"));
                continue;
            }
        };
        let config = SolveConfig::new(Scheme::Basic, -1.0, Some(lip));
        let trace = solve(&map, &v2(0.0, 0.0), &v2(1.0, 0.0), &config).unwrap();
        let bad = ratios_within(&trace, lip / 2.0, 1e-9);
        c.check(bad.is_none(), || {
            format!("L={lip}: ratio {bad:?} differs from {}", lip / 2.0)
        });
        let steps = trace.len() - 1;
        c.check(trace.status == Status::Converged && steps <= 200, || {
            format!(
                "L={lip}: {} after {steps} iterations (limit 200), final defect {:e}",
                trace.status.as_str(),
                trace.final_defect().unwrap()
            )
        });
    }
}

pub fn criterion_2(c: &mut Checks) {
    for lip in [2.1, 2.5] {
        let map = BuiltinMap::rotation_2d(-1.0, lip).unwrap();
        let config = SolveConfig::new(Scheme::Basic, -1.0, Some(lip));
        let trace = solve(&map, &v2(0.0, 0.0), &v2(1.0, 0.0), &config).unwrap();
        c.check(trace.status == Status::Diverged, || {
            format!("L={lip}: status {}", trace.status.as_str())
        });
        let bad = ratios_within(&trace, lip / 2.0, 1e-9);
        c.check(bad.is_none(), || {
            format!("L={lip}: growth {bad:?} differs from {}", lip / 2.0)
        });
    }
}

pub fn criterion_3(c: &mut Checks) {
    let run = |lip: f64| {
        let map = BuiltinMap::piecewise_1d(-1.0, lip).unwrap();
        let config = SolveConfig::new(Scheme::Basic, -1.0, Some(lip));
        solve(&map, &v1(0.0), &v1(0.5), &config).unwrap()
    };
    for (lip, factor) in [(3.0, 0.5), (3.8, 0.9)] {
        let trace = run(lip);
        c.check(trace.status == Status::Converged, || {
            format!("L={lip}: not converged")
        });
        let bad = ratios_within(&trace, factor, 1e-9);
        c.check(bad.is_none(), || {
            format!("L={lip}: ratio {bad:?} differs from {factor}")
        });
    }
    let trace = run(4.0);
    c.check(trace.status == Status::MaxIter, || {
        format!("L=4: status {}", trace.status.as_str())
    });
    let bad = ratios_within(&trace, 1.0, 1e-9);
    c.check(bad.is_none(), || {
        format!("L=4: ratio {bad:?} differs from 1")
    });
    let trace = run(4.2);
    let escaped = trace.iterates.iter().any(|x| x.coords()[0].abs() > 1.0);
    c.check(escaped, || "L=4.2: trajectory stays in [-1, 1]".into());
}

pub fn criterion_4(c: &mut Checks) {
    let l = -1.0f64;
    for lip in [2.0, 3.0, 3.8] {
        let kappa = 0.5f64.max((1.0 + lip / (2.0 * l)).abs());
        let library = contraction_rate(Scheme::Basic, l, Some(lip), 1).unwrap();
        c.check((library - kappa).abs() <= 1e-15, || {
            format!("L={lip}: rate {library} vs {kappa}")
        });
        let map = BuiltinMap::piecewise_1d(l, lip).unwrap();
        let config = SolveConfig::new(Scheme::Basic, l, Some(lip));
        for i in 0..=20 {
            let x0 = -1.0 + 0.1 * i as f64;
            let trace = solve(&map, &v1(0.0), &v1(x0), &config).unwrap();
            let worst = trace.defect_ratios().into_iter().fold(0.0, f64::max);
            c.check(worst <= kappa + 1e-9, || {
                format!("L={lip}, x0={x0}: ratio {worst} > {kappa}")
            });
        }
    }
}

/// Largest singular value of a 2×2 matrix in closed form.
fn spectral_norm_2x2(m: [[f64; 2]; 2]) -> f64 {
    let s = m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    ((s + (s * s - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
}

pub fn criterion_5(c: &mut Checks) {
    // Oracle: the refined step is x ↦ (I - (l/L²)(l I + α J)) x on the
    // rotation map, with J x = (x₂, -x₁).
    for (l, lip) in [
        (-1.0f64, 2f64.sqrt()),
        (-1.0, 1.2),
        (-2.0, 2.5),
        (-0.5, 0.6),
    ] {
        let alpha = (lip * lip - l * l).sqrt();
        let s = l / (lip * lip);
        let m = [[1.0 - s * l, -s * alpha], [s * alpha, 1.0 - s * l]];
        let oracle = spectral_norm_2x2(m);
        let closed = (lip * lip - l * l).sqrt() / lip;
        let library = contraction_rate(Scheme::LipschitzRefined, l, Some(lip), 2).unwrap();
        c.check(
            (oracle - closed).abs() <= 1e-12 && (library - oracle).abs() <= 1e-12,
            || {
                format!(
                    "l={l}, L={lip}: matrix norm {oracle}, closed form {closed}, library {library}"
                )
            },
        );
    }

    let lip = 2f64.sqrt();
    let map = BuiltinMap::rotation_2d(-1.0, lip).unwrap();
    let config = SolveConfig::new(Scheme::LipschitzRefined, -1.0, Some(lip));
    for x0 in [v2(1.0, 0.0), v2(-2.0, 3.0)] {
        let trace = solve(&map, &v2(0.0, 0.0), &x0, &config).unwrap();
        c.check(trace.status == Status::Converged, || {
            format!("x0={x0}: not converged")
        });
        for w in trace.iterates.windows(2) {
            let ratio = w[1].norm() / w[0].norm();
            c.check((ratio - 0.5f64.sqrt()).abs() <= 1e-9, || {
                format!("x0={x0}: contraction {ratio}")
            });
        }
    }

    let linear = BuiltinMap::rotation_2d(-2.0, 2.0).unwrap();
    let config = SolveConfig::new(Scheme::LipschitzRefined, -2.0, Some(2.0));
    let trace = solve(&linear, &v2(0.0, 0.0), &v2(3.0, -1.0), &config).unwrap();
    c.check(
        trace.status == Status::Converged && trace.len() == 2,
        || {
            format!(
                "linear case: {} after {} steps",
                trace.status.as_str(),
                trace.len() - 1
            )
        },
    );
}

pub fn criterion_6(c: &mut Checks) {
    // Oracle: on a scalar map with slopes s ∈ [-L, l] the step multiplies the
    // error by 1 - ½(1/l - 1/L) s; take the worst slope by brute force.
    for (l, lip) in [
        (-1.0f64, 1.0f64),
        (-1.0, 1.5),
        (-1.0, 2.0),
        (-2.0, 3.0),
        (-0.5, 0.9),
    ] {
        let gain = 0.5 * (1.0 / l - 1.0 / lip);
        let worst = (0..=100_000)
            .map(|i| {
                let s = -lip + (l + lip) * i as f64 / 100_000.0;
                (1.0 - gain * s).abs()
            })
            .fold(0.0, f64::max);
        let library = contraction_rate(Scheme::LipschitzRefined1d, l, Some(lip), 1).unwrap();
        c.check((worst - library).abs() <= 1e-12, || {
            format!("l={l}, L={lip}: brute force {worst}, library {library}")
        });
    }

    let map = BuiltinMap::piecewise_1d(-1.0, 2.0).unwrap();
    let config = SolveConfig::new(Scheme::LipschitzRefined1d, -1.0, Some(2.0));
    for x0 in [0.25, 0.5, 1.0] {
        let trace = solve(&map, &v1(0.0), &v1(x0), &config).unwrap();
        let worst = trace.defect_ratios().into_iter().fold(0.0, f64::max);
        c.check(worst <= 0.5 + 1e-9, || format!("x0={x0}: ratio {worst}"));
        c.check(
            trace.status == Status::Converged
                && trace.final_defect().unwrap() < 1e-10
                && trace.len() - 1 <= 60,
            || {
                format!(
                    "x0={x0}: {} after {} steps",
                    trace.status.as_str(),
                    trace.len() - 1
                )
            },
        );
    }
}

pub fn criterion_7(c: &mut Checks) {
    for lip in [1.0, 1.5, 1.9] {
        let map = BuiltinMap::rotation_2d(-1.0, lip).unwrap();
        let config = SolveConfig::new(Scheme::Basic, -1.0, Some(lip));
        for x0 in [v2(1.0, 0.0), v2(-2.0, 3.0)] {
            let trace = solve(&map, &v2(0.0, 0.0), &x0, &config).unwrap();
            for (x, cert) in trace.iterates.iter().zip(&trace.certificates) {
                let gap = cert.inclusion_center.norm() - cert.inclusion_radius;
                c.check(gap.abs() <= 1e-9, || {
                    format!("L={lip}, x={x}: |center| - radius = {gap}")
                });
                let excl = cert.exclusion_radius.unwrap();
                c.check(x.norm() >= excl - 1e-9, || {
                    format!("L={lip}, x={x}: exclusion {excl}")
                });
            }
        }
    }
    let map = BuiltinMap::piecewise_1d(-1.0, 3.0).unwrap();
    let r = exclusion_radius(&map, &v1(0.0), &v1(1.0), 3.0).unwrap();
    c.check((r - 1.0).abs() <= 1e-12, || {
        format!("piecewise exclusion radius at 1 is {r}")
    });
}

pub fn criterion_8(c: &mut Checks) {
    let square = ConvexSet::polytope(vec![
        v2(-1.0, -1.0),
        v2(1.0, -1.0),
        v2(1.0, 1.0),
        v2(-1.0, 1.0),
    ])
    .unwrap();
    let map = BuiltinMap::rotated_polytope(vec![vec![-3.0, 0.0], vec![0.0, -3.0]], square).unwrap();
    let config = SolveConfig::new(Scheme::Basic, -2.0, Some(3.0));
    let bounds = AxisBox::cube(2, -3.0, 3.0).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let scan = pool
        .install(|| scan_solution_set(&map, &v2(0.0, 0.0), &bounds, &[21, 21], &config))
        .unwrap();
    c.check(scan.len() == 441 && scan.all_converged(), || {
        format!("{}/{} converged", scan.converged_count(), scan.len())
    });
    let worst_residual = scan
        .membership_residuals
        .iter()
        .flatten()
        .fold(0.0, |a: f64, &b| a.max(b));
    c.check(worst_residual <= 1e-8, || {
        format!("membership residual {worst_residual}")
    });
    let worst_ratio = scan
        .max_defect_ratios
        .iter()
        .flatten()
        .fold(0.0, |a: f64, &b| a.max(b));
    c.check(worst_ratio <= 0.75 + 1e-6, || {
        format!("defect ratio {worst_ratio}")
    });
}

fn unit(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn in_triangle(y: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> bool {
    let area = cross(a, b, c);
    if area.abs() < 1e-12 {
        return false;
    }
    let s = area.signum();
    s * cross(a, b, y) >= 0.0 && s * cross(b, c, y) >= 0.0 && s * cross(c, a, y) >= 0.0
}

/// Nearest hull point by brute force. Points inside some vertex triangle are
/// their own projection; otherwise every segment `(1-t) a + t b` is sampled
/// densely and the best sample is refined by repeated zooming.
fn brute_force_projection(y: &[f64], vertices: &[[f64; 2]]) -> [f64; 2] {
    let n = vertices.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if in_triangle(y, &vertices[i], &vertices[j], &vertices[k]) {
                    return [y[0], y[1]];
                }
            }
        }
    }
    let point =
        |a: &[f64; 2], b: &[f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let dist2 = |p: [f64; 2]| (p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2);
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for i in 0..n {
        for j in i..n {
            let (a, b) = (&vertices[i], &vertices[j]);
            let (mut lo, mut hi, mut t_best) = (0.0f64, 1.0f64, 0.0f64);
            for samples in [2_000usize, 400, 400, 400, 400] {
                let step = (hi - lo) / samples as f64;
                let mut level_best = f64::INFINITY;
                for s in 0..=samples {
                    let t = lo + step * s as f64;
                    let d = dist2(point(a, b, t));
                    if d < level_best {
                        level_best = d;
                        t_best = t;
                    }
                }
                lo = (t_best - 2.0 * step).max(0.0);
                hi = (t_best + 2.0 * step).min(1.0);
            }
            let p = point(a, b, t_best);
            if dist2(p) < best.0 {
                best = (dist2(p), p);
            }
        }
    }
    best.1
}

pub fn criterion_9(c: &mut Checks) {
    let mut rng = SplitMix64::seed_from_u64(20_240_601);
    for poly in 0..100 {
        let count = 1 + (rng.next_u64() % 8) as usize;
        let vertices: Vec<[f64; 2]> = (0..count)
            .map(|_| [10.0 * unit(&mut rng) - 5.0, 10.0 * unit(&mut rng) - 5.0])
            .collect();
        let set = ConvexSet::polytope(vertices.iter().map(|p| v2(p[0], p[1])).collect()).unwrap();
        for _ in 0..10 {
            let y = [10.0 * unit(&mut rng) - 5.0, 10.0 * unit(&mut rng) - 5.0];
            let p = project(&v2(y[0], y[1]), &set).unwrap();
            let p = p.coords();
            let oracle = brute_force_projection(&y, &vertices);
            let err = ((p[0] - oracle[0]).powi(2) + (p[1] - oracle[1]).powi(2)).sqrt();
            c.check(err <= 1e-6, || {
                format!("polytope {poly}, y={y:?}: off by {err:e}")
            });
            for v in &vertices {
                let inner = (y[0] - p[0]) * (v[0] - p[0]) + (y[1] - p[1]) * (v[1] - p[1]);
                c.check(inner <= 1e-9, || {
                    format!("polytope {poly}, y={y:?}: <y-p, v-p> = {inner:e}")
                });
            }
        }
    }
}

pub fn criterion_10(c: &mut Checks) {
    let map = BuiltinMap::piecewise_1d(-1.0, 3.0).unwrap();
    let root = ivt_bisect(&map, 0.0, -2.0, 2.0, 1e-10).unwrap();
    c.check(root.x.abs() <= 1e-10, || format!("root {}", root.x));
    c.check(root.bisections <= 36, || {
        format!("{} bisections", root.bisections)
    });
    let err = ivt_bisect(&map, 0.0, 1.0, 2.0, 1e-10);
    c.check(matches!(err, Err(Error::Bracket { .. })), || {
        format!("[1, 2] gave {err:?}")
    });
}

pub fn criterion_11(c: &mut Checks) {
    let dir = tempdir().unwrap();
    for (i, case) in fixtures::builtin_cases().iter().enumerate() {
        let good = fixtures::write_json(dir.path(), &format!("g{i}.json"), &case.problem);
        let under = fixtures::write_json(
            dir.path(),
            &format!("u{i}.json"),
            &fixtures::scale_lipschitz(&case.problem, 0.7),
        );
        for (k, x0) in case.starts.iter().enumerate() {
            let trace = dir.path().join(format!("g{i}_{k}.csv"));
            let solved = fixtures::solve(&good, Some(x0), &trace);
            c.check(solved.code == 0, || {
                format!("{} from {x0}: solve exit {}", case.label, solved.code)
            });
            let audit = fixtures::audit(&trace, &good);
            c.check(audit.code == 0, || {
                format!("{} from {x0}: audit exit {}", case.label, audit.code)
            });

            let trace_under = dir.path().join(format!("u{i}_{k}.csv"));
            let audit_under = match fixtures::solve(&under, Some(x0), &trace_under).code {
                0 => fixtures::audit(&trace_under, &under).code,
                code => code,
            };
            c.check(audit_under != 0, || {
                format!("{} from {x0}: understated L audits clean", case.label)
            });
        }
    }
}
