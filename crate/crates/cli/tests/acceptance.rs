//! Acceptance criteria. Runs without the test harness and prints one
//! `PASS`/`FAIL` line per criterion; exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, ExitCode};

use kinematica::affine::{transform_worldline, AffineElement, Event, WorldLine};
use kinematica::classify::{bracket_closure, case_label, classify_algebra, collinearity_defect, Outcome};
use kinematica::groups::{
    boost_closed_form, cartan_decompose, in_k, in_normalizer, membership, p_basis, p_generator,
    random_element_with, random_k,
};
use kinematica::isotypic::{m3_basis, skew_basis};
use kinematica::matcore::{bracket, mat_exp, Metric};
use kinematica::{CaseLabel, Group, Mutation, Sigma, SquareMatrix, DEFAULT_TOL};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIMS: [usize; 2] = [2, 3];
const SIGMAS: [Sigma; 5] = [
    Sigma::Finite(1.0),
    Sigma::Finite(0.5),
    Sigma::Finite(-1.0),
    Sigma::Finite(0.0),
    Sigma::Infinite,
];
const TRIALS: usize = 200;
const LARGE_TRIALS: usize = 1000;

/// Result of one criterion: failures found and the worst residual seen.
#[derive(Default)]
struct Verdict {
    checks: usize,
    worst: f64,
    failure: Option<String>,
}

impl Verdict {
    /// Records `residual <= bound`; NaN fails.
    fn within(&mut self, residual: f64, bound: f64, what: impl FnOnce() -> String) {
        if residual.is_nan() || residual > self.worst {
            self.worst = if residual.is_nan() { f64::INFINITY } else { residual };
        }
        self.holds(residual <= bound, what);
    }

    fn holds(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(what());
        }
    }
}

fn rng(criterion: u64, n: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(criterion * 1000 + n as u64)
}

fn vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn unit(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = vector(n, rng);
        if v.norm() > 0.1 {
            return v.normalize();
        }
    }
}

fn matrix(m: DMatrix<f64>) -> SquareMatrix {
    SquareMatrix::new(m).expect("finite square matrix")
}

fn conjugate(k: &SquareMatrix, z: &SquareMatrix) -> SquareMatrix {
    &(k * z) * &k.transpose()
}

/// Rotation basis plus a boost basis for `sigma` (none for Aristotle),
/// rotated by a random `k` and recombined with random coefficients.
fn generated_basis(n: usize, sigma: Option<Sigma>, rng: &mut ChaCha8Rng) -> Vec<SquareMatrix> {
    let k = random_k(n, rng);
    let mut gens = skew_basis(n);
    let skew = gens.len();
    if let Some(s) = sigma {
        gens.extend(p_basis(n, s));
    }
    let mut out: Vec<SquareMatrix> = gens.iter().map(|g| conjugate(&k, g)).collect();
    // Mix boosts with each other but keep rotations separate so the set spans
    // the same algebra.
    let boosts = out.split_off(skew);
    for i in 0..boosts.len() {
        let mixed = boosts
            .iter()
            .enumerate()
            .fold(SquareMatrix::zeros(n + 1), |acc, (j, b)| {
                let w = if i == j { 2.0 } else { rng.random_range(-0.5..0.5) };
                acc + b * w
            });
        out.push(mixed);
    }
    out
}

fn classification_soundness() -> Verdict {
    let mut v = Verdict::default();
    for n in DIMS {
        let mut rng = rng(1, n);
        let cases = SIGMAS.iter().map(|&s| Some(s)).chain([None]);
        for sigma in cases {
            let expected = sigma.map_or(CaseLabel::Aristotle, CaseLabel::for_sigma);
            for trial in 0..TRIALS {
                let gens = generated_basis(n, sigma, &mut rng);
                let result = classify_algebra(&gens, DEFAULT_TOL).expect("nonempty input");
                let label = case_label(&result).ok();
                v.holds(label == Some(expected), || {
                    format!("n={n} trial {trial}: expected {expected}, got {:?}", result.outcome)
                });
                if let (Some(s), Outcome::Kinematical(found)) = (sigma, result.outcome) {
                    let err = match (s, found) {
                        (Sigma::Finite(a), Sigma::Finite(b)) => (a - b).abs() / (1.0 + a.abs()),
                        (Sigma::Infinite, Sigma::Infinite) => 0.0,
                        _ => f64::INFINITY,
                    };
                    v.within(err, 1e-9, || format!("n={n} trial {trial}: recovered {found} for {s}"));
                }
            }
        }
    }
    v
}

fn random_m0(n: usize, rng: &mut ChaCha8Rng) -> SquareMatrix {
    let (lambda, mu) = (rng.random_range(0.5..2.0), rng.random_range(-2.0..2.0));
    matrix(DMatrix::from_fn(n + 1, n + 1, |i, j| match (i == j, i == n) {
        (true, false) => lambda,
        (true, true) => mu,
        _ => 0.0,
    }))
}

fn random_m2(n: usize, rng: &mut ChaCha8Rng) -> SquareMatrix {
    let w = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let sym = &w + w.transpose();
    let sym = &sym - DMatrix::identity(n, n) * (sym.trace() / n as f64);
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&(&sym / sym.norm()));
    matrix(m)
}

fn negative_classification() -> Verdict {
    let mut v = Verdict::default();
    for n in DIMS {
        let mut rng = rng(2, n);
        for trial in 0..TRIALS {
            let sigma = SIGMAS[trial % SIGMAS.len()];
            let mut gens = generated_basis(n, Some(sigma), &mut rng);
            gens.push(random_m0(n, &mut rng));
            let r = classify_algebra(&gens, DEFAULT_TOL).expect("nonempty input");
            v.holds(!r.is_kinematical(), || format!("n={n} trial {trial}: M0 contamination accepted"));

            let mut gens = generated_basis(n, Some(sigma), &mut rng);
            gens.push(random_m2(n, &mut rng));
            let r = classify_algebra(&gens, DEFAULT_TOL).expect("nonempty input");
            v.holds(!r.is_kinematical(), || format!("n={n} trial {trial}: M2 contamination accepted"));

            let mut gens = skew_basis(n);
            gens.push(p_generator(&unit(n, &mut rng), Sigma::Finite(1.0)));
            gens.push(p_generator(&unit(n, &mut rng), Sigma::Finite(2.0)));
            let r = classify_algebra(&gens, DEFAULT_TOL).expect("nonempty input");
            v.holds(!r.is_kinematical(), || format!("n={n} trial {trial}: mixed sigma accepted"));
        }
    }
    v
}

fn collinearity_identity() -> Verdict {
    let mut v = Verdict::default();
    for n in DIMS {
        let mut rng = rng(3, n);
        for trial in 0..LARGE_TRIALS {
            let (b, c) = (vector(n, &mut rng) * 3.0, vector(n, &mut rng) * 3.0);
            let mut z = DMatrix::zeros(n + 1, n + 1);
            z.view_mut((0, n), (n, 1)).copy_from(&b);
            z.view_mut((n, 0), (1, n)).copy_from(&c.transpose());
            let mut a = DMatrix::zeros(n + 1, n + 1);
            a.view_mut((0, 0), (n, n)).copy_from(&(&b * c.transpose() - &c * b.transpose()));
            let (z, a) = (matrix(z), matrix(a));
            let nested = bracket(&z, &bracket(&z, &a).unwrap()).unwrap();
            let entry = nested.as_matrix()[(n, n)];
            let direct = 2.0 * (b.norm_squared() * c.norm_squared() - b.dot(&c).powi(2));
            v.within((entry - direct).abs(), 1e-10, || format!("n={n} trial {trial}: {entry} vs {direct}"));
            v.within((collinearity_defect(&b, &c) - direct).abs(), 1e-10, || {
                format!("n={n} trial {trial}: defect differs from the identity")
            });
        }
    }
    v
}

fn cartan_round_trip() -> Verdict {
    let mut v = Verdict::default();
    for n in DIMS {
        let mut rng = rng(4, n);
        for trial in 0..TRIALS {
            let s: f64 = match trial % 3 {
                0 => 1.0,
                1 => 0.5,
                _ => rng.random_range(0.1..4.0),
            };
            let lambda: f64 = rng.random_range(0.1..10.0);
            let k = random_k(n, &mut rng);
            // The operator norm of Z is |b| max(1, σ).
            let b = unit(n, &mut rng) * (rng.random_range(0.0..2.0) / s.max(1.0));
            let z = p_generator(&b, Sigma::Finite(s));
            v.holds(z.op_norm() <= 2.0 + 1e-12, || format!("n={n} trial {trial}: |Z| > 2"));
            let a = &(&k * &mat_exp(&z)) * lambda.sqrt();
            let f = match cartan_decompose(&a, s, DEFAULT_TOL) {
                Ok(f) => f,
                Err(e) => {
                    v.holds(false, || format!("n={n} trial {trial}: {e}"));
                    continue;
                }
            };
            let at = || format!("n={n} sigma={s} trial {trial}");
            v.within((f.lambda - lambda).abs(), 1e-10, || format!("{}: lambda {}", at(), f.lambda));
            v.within((&f.k - &k).max_abs(), 1e-8, || format!("{}: k differs", at()));
            v.within((&f.z - &z).max_abs(), 1e-8, || format!("{}: Z differs", at()));
            v.within((&f.reconstruct() - &a).max_abs(), 1e-8, || format!("{}: reconstruction", at()));
        }
    }
    v
}

fn normalizer_characterization() -> Verdict {
    let mut v = Verdict::default();
    for n in DIMS {
        let mut rng = rng(5, n);
        let mut rejected = 0;
        for trial in 0..TRIALS {
            let s = [1.0, 0.5, -1.0, -0.5][trial % 4];
            let sigma = Sigma::Finite(s);
            let lambda: f64 = rng.random_range(0.1..10.0);
            let k = random_k(n, &mut rng);
            let b = unit(n, &mut rng) * rng.random_range(0.0..2.0);
            let a = &(&k * &mat_exp(&p_generator(&b, sigma))) * lambda.sqrt();
            let check = in_normalizer(&a, s, DEFAULT_TOL).expect("invertible");
            v.holds(check.member, || format!("n={n} sigma={s} trial {trial}: member rejected"));

            // Perturb until the a⁺a residual is at least 1e-3.
            loop {
                let e = DMatrix::from_fn(n + 1, n + 1, |_, _| rng.random_range(-1.0..1.0));
                let off = &a + &matrix(e * 1e-2 * lambda.sqrt());
                let Ok(c) = in_normalizer(&off, s, DEFAULT_TOL) else { continue };
                if c.residual < 1e-3 {
                    continue;
                }
                v.holds(!c.member, || format!("n={n} sigma={s} trial {trial}: perturbed matrix accepted"));
                rejected += usize::from(!c.member);
                break;
            }
        }
        v.holds(rejected == TRIALS, || format!("n={n}: {rejected}/{TRIALS} perturbed matrices rejected"));
    }
    v
}

fn closure_and_invariance() -> Verdict {
    let mut v = Verdict::default();
    let groups = [
        Group::for_sigma(Sigma::Finite(1.0)),
        Group::for_sigma(Sigma::Finite(0.0)),
        Group::for_sigma(Sigma::Finite(-1.0)),
        Group::for_sigma(Sigma::Infinite),
        Group::Aristotle,
    ];
    for n in DIMS {
        let mut rng = rng(6, n);
        for group in &groups {
            for trial in 0..TRIALS {
                let at = || format!("n={n} {} trial {trial}", group.case());
                let g = random_element_with(group, n, 2.5, &mut rng);
                let h = random_element_with(group, n, 2.5, &mut rng);
                let gh = &g * &h;
                let g_inv = g.inverse().expect("invertible member");
                for (name, m) in [("g", &g), ("gh", &gh), ("g^-1", &g_inv)] {
                    v.holds(membership(m, group, DEFAULT_TOL), || format!("{}: {name} not a member", at()));
                }
                for m in [&g, &gh] {
                    let blocks = m.as_matrix();
                    match group.sigma() {
                        Some(Sigma::Finite(s)) if s != 0.0 => {
                            let gamma = Metric::plus(s).unwrap().gram(n + 1);
                            let moved = &(&m.transpose() * &gamma) * m;
                            v.within((&moved - &gamma).max_abs(), 1e-9 * (1.0 + m.max_abs()).powi(2), || {
                                format!("{}: metric not preserved", at())
                            });
                        }
                        Some(Sigma::Finite(_)) => {
                            let row = blocks.row(n);
                            let exact = row.columns(0, n).iter().all(|&x| x == 0.0) && row[n].abs() == 1.0;
                            v.holds(exact, || format!("{}: dt not preserved exactly", at()));
                        }
                        Some(Sigma::Infinite) => {
                            let x = vector(n + 1, &mut rng) * 3.0;
                            let y = blocks * &x;
                            let (before, after) = (x.rows(0, n).norm(), y.rows(0, n).norm());
                            v.within((after - before).abs(), 1e-10 * (1.0 + before), || {
                                format!("{}: |dr| not preserved", at())
                            });
                        }
                        None => v.holds(in_k(m, 1e-9), || format!("{}: not in K", at())),
                    }
                }
            }
        }
    }
    v
}

fn invariant_speed() -> Verdict {
    let mut v = Verdict::default();
    let lorentz = Group::for_sigma(Sigma::Finite(1.0));
    for n in DIMS {
        let mut rng = rng(7, n);
        for trial in 0..LARGE_TRIALS {
            let linear = random_element_with(&lorentz, n, 5.0, &mut rng);
            let f = AffineElement::new(linear, vector(n + 1, &mut rng) * 10.0).unwrap();
            let origin = Event::new(vector(n, &mut rng), rng.random_range(-5.0..5.0));
            let dir = unit(n, &mut rng);
            let light = WorldLine::with_velocity(origin.clone(), dir.clone());
            let slow = WorldLine::with_velocity(origin, dir * 0.5);
            match transform_worldline(&f, &light).ok().and_then(|w| w.speed()) {
                Some(speed) => v.within((speed - 1.0).abs(), 1e-8, || format!("n={n} trial {trial}: speed {speed}")),
                None => v.holds(false, || format!("n={n} trial {trial}: light ray lost its velocity")),
            }
            match transform_worldline(&f, &slow).ok().and_then(|w| w.speed()) {
                Some(speed) => v.holds(speed < 1.0, || format!("n={n} trial {trial}: slow speed {speed}")),
                None => v.holds(false, || format!("n={n} trial {trial}: slow line lost its velocity")),
            }
        }
    }
    v
}

fn wraparound_and_closed_forms() -> Verdict {
    let mut v = Verdict::default();
    for n in DIMS {
        let mut rng = rng(8, n);
        for trial in 0..50 {
            let u = unit(n, &mut rng);
            let half = boost_closed_form(&(&u * PI), Sigma::Finite(-1.0));
            v.holds(in_k(&half, 1e-9), || format!("n={n} trial {trial}: half-period boost not in K"));
        }
        let regimes = [1.0, 0.5, 3.0, -1.0, -0.25, 0.0].map(Sigma::Finite).into_iter().chain([Sigma::Infinite]);
        for sigma in regimes {
            for trial in 0..TRIALS {
                let b = unit(n, &mut rng) * rng.random_range(0.0..5.0);
                let closed = boost_closed_form(&b, sigma);
                let series = mat_exp(&p_generator(&b, sigma));
                v.within((&closed - &series).max_abs(), 1e-10, || {
                    format!("n={n} sigma={sigma} trial {trial}: closed form differs from series")
                });
            }
        }
    }
    v
}

fn nonalgebra_witness() -> Verdict {
    let mut v = Verdict::default();
    for n in DIMS {
        let mut basis = skew_basis(n);
        basis.extend(m3_basis(n));
        let report = bracket_closure(&basis, DEFAULT_TOL).expect("nonempty basis");
        v.holds(!report.closed, || format!("n={n}: M1 + M3 reported closed"));
        v.holds(report.worst_residual >= 1.0, || {
            format!("n={n}: closure residual {} below 1", report.worst_residual)
        });
        v.worst = v.worst.max(report.worst_residual);
    }
    v
}

fn binary() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_kinematica"))
}

fn cli_end_to_end() -> Verdict {
    let mut v = Verdict::default();
    let dir = std::env::temp_dir().join(format!("kinematica-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let cases: [(&str, Option<&str>, &str); 5] = [
        ("lorentz", Some("1"), "Lorentz"),
        ("galilei", None, "Galilei"),
        ("orthogonal", Some("-1"), "Orthogonal"),
        ("carroll", None, "Carroll"),
        ("aristotle", None, "Aristotle"),
    ];
    for n in DIMS {
        for (case, sigma, expected) in cases {
            let mut generate = Command::new(binary());
            generate.args(["generate", "--kind", "generators", "--case", case, "--n", &n.to_string(), "--count", "2"]);
            if let Some(s) = sigma {
                generate.arg(format!("--sigma={s}"));
            }
            let out = generate.output().expect("run generate");
            v.holds(out.status.success(), || format!("generate {case} n={n} failed"));
            let path = dir.join(format!("{case}-{n}.json"));
            std::fs::write(&path, &out.stdout).expect("write temp file");
            let out = Command::new(binary()).arg("classify").arg(&path).output().expect("run classify");
            let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or_default();
            v.holds(out.status.success() && report["case"] == expected, || {
                format!("classify {case} n={n}: exit {:?}, case {}", out.status.code(), report["case"])
            });
        }
    }
    let _ = std::fs::remove_dir_all(&dir);

    let verify = |mutation: Option<Mutation>| {
        let mut cmd = Command::new(binary());
        cmd.arg("verify");
        if let Some(m) = mutation {
            cmd.args(["--mutation", m.name()]);
        }
        cmd.output().expect("run verify").status.code()
    };
    let clean = verify(None);
    v.holds(clean == Some(0), || format!("verify exited {clean:?} on the correct build"));
    for m in Mutation::ALL {
        let code = verify(Some(m));
        v.holds(code.is_some_and(|c| c != 0), || format!("verify exited {code:?} under {m}"));
    }
    v
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("classification soundness", classification_soundness),
        ("negative classification", negative_classification),
        ("collinearity identity", collinearity_identity),
        ("cartan round trip", cartan_round_trip),
        ("normalizer characterization", normalizer_characterization),
        ("closure and invariance", closure_and_invariance),
        ("invariant speed", invariant_speed),
        ("wrap-around and closed forms", wraparound_and_closed_forms),
        ("non-subalgebra witness", nonalgebra_witness),
        ("cli end to end", cli_end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        let status = if v.failure.is_none() { "PASS" } else { "FAIL" };
        print!("criterion {:>2} {name:<30} {status}  ({} checks, worst residual {:.2e})", i + 1, v.checks, v.worst);
        match &v.failure {
            Some(why) => {
                failed += 1;
                println!("  first failure: {why}");
            }
            None => println!(),
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
