//! End-to-end acceptance checks. Each test writes one PASS/FAIL line to
//! stderr (bypassing the harness capture) before asserting.

use std::io::Write;
use std::path::Path;
use std::process::Command;

use abflow::accel::{modified_ab_run_with, AccelConfig};
use abflow::lab::{
    make_known_sqrt_problem, make_pencil_problem, run_experiment, ConvergenceTrace, ExperimentKind,
    KnownSqrt, ProblemSpec, Similarity, SolverParams, SpectrumEntry,
};
use abflow::msqrt::{
    accel_q_step, binomial_step, cayley_factor, cayley_residual, embed_pencil, newton_step,
    q_chain, sqrtm_ab, sqrtm_ab_observed, SqrtProblem,
};
use abflow::numerics::{lu_solve, LuFactorization};
use abflow::pencil::{
    ab_run, breakdown_check, closed_form_iterate, combine, eigenvalue_map, AbChain, AbIterate,
    ExtComplex, PencilError,
};
use abflow::{ComplexMatrix, Pencil, C64};
use abflow_cli::{matrix_to_json, parse_matrix_str, MatrixFormat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr().lock(),
        "criterion {id:>2} {verdict} {name}: {detail}"
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn chain(p: &Pencil, len: usize) -> Vec<AbIterate> {
    AbChain::new(p).take(len).collect::<Result<_, _>>().unwrap()
}

fn iterate_diff(x: &AbIterate, y: &AbIterate) -> f64 {
    x.a.rel_diff(&y.a).max(x.b.rel_diff(&y.b))
}

/// Eigenvalues in `|z| < 0.9`, random similarity of condition up to 100,
/// mixed B.
fn stable_pencil(seed: u64) -> Pencil {
    let mut r = rng(seed);
    let n = 1 + (seed as usize % 8);
    let spectrum = (0..n)
        .map(|_| {
            let z = C64::from_polar(
                0.9 * r.gen_range(0.0f64..1.0).sqrt(),
                r.gen_range(0.0..std::f64::consts::TAU),
            );
            SpectrumEntry::simple(z)
        })
        .collect();
    let cond = 10f64.powf(r.gen_range(0.0..2.0));
    let spec = ProblemSpec::new(spectrum, seed)
        .with_similarity(Similarity::Random { condition: cond })
        .with_mixing(true);
    make_pencil_problem(&spec).unwrap().pencil
}

fn drift(chain: &[AbIterate], p: &Pencil) -> f64 {
    let scale = p.a().norm_fro() + p.b().norm_fro();
    chain
        .iter()
        .map(|it| it.difference_drift(p) / scale)
        .fold(0.0, f64::max)
}

fn suite_1_pencils() -> Vec<Pencil> {
    (0..20).map(|s| stable_pencil(100 + s)).collect()
}

fn suite_2_pencils() -> Vec<Pencil> {
    suite_1_pencils()
        .iter()
        .map(|p| Pencil::standard(lu_solve(p.b(), p.a()).unwrap()).unwrap())
        .collect()
}

#[test]
fn criterion_01_flow_property() {
    let mut worst = 0.0f64;
    for p in suite_1_pencils() {
        let its = chain(&p, 12);
        for i in 1..=11 {
            for j in 1..=(12 - i) {
                let c = combine(&its[i - 1], &its[j - 1]).unwrap();
                assert_eq!(c.k, i + j);
                worst = worst.max(iterate_diff(&c, &its[i + j - 1]));
            }
        }
    }
    report(
        1,
        "flow property",
        worst <= 1e-9,
        format!("max rel diff {worst:.2e} (tol 1e-9)"),
    );
}

#[test]
fn criterion_02_closed_form() {
    let mut worst = 0.0f64;
    for p in suite_2_pencils() {
        for (idx, it) in chain(&p, 10).iter().enumerate() {
            let cf = closed_form_iterate(p.a(), idx + 1).unwrap();
            worst = worst.max(iterate_diff(it, &cf));
        }
    }
    report(
        2,
        "closed-form oracle",
        worst <= 1e-9,
        format!("max rel diff {worst:.2e} (tol 1e-9)"),
    );
}

#[test]
fn criterion_03_difference_invariant() {
    let mut worst = 0.0f64;
    for p in suite_1_pencils() {
        let its = chain(&p, 12);
        worst = worst.max(drift(&its, &p));
        for i in 1..=11 {
            for j in 1..=(12 - i) {
                let c = combine(&its[i - 1], &its[j - 1]).unwrap();
                worst = worst.max(c.difference_drift(&p) / (p.a().norm_fro() + p.b().norm_fro()));
            }
        }
    }
    for p in suite_2_pencils() {
        worst = worst.max(drift(&chain(&p, 10), &p));
    }
    report(
        3,
        "difference invariant",
        worst <= 1e-10,
        format!("max scaled drift {worst:.2e} (tol 1e-10)"),
    );
}

#[test]
fn criterion_04_acceleration_identity() {
    let mut worst = 0.0f64;
    let mut compared = 0;
    for p in suite_1_pencils().iter().take(10) {
        let plain = chain(p, 27);
        for (r, count) in [(2usize, 5usize), (3, 4), (4, 3)] {
            let cfg = AccelConfig::new(r, 1e-300, count).unwrap();
            let mut outer = Vec::new();
            let _ = modified_ab_run_with(p, &cfg, |_, it| outer.push(it.clone()));
            assert_eq!(outer.len(), count, "r={r}");
            for (k, it) in outer.iter().enumerate() {
                let idx = r.pow(k as u32);
                assert_eq!(it.k, idx);
                worst = worst.max(iterate_diff(it, &plain[idx - 1]));
                compared += 1;
            }
        }
    }
    report(
        4,
        "acceleration identity",
        worst <= 1e-8,
        format!("{compared} outer iterates, max rel diff {worst:.2e} (tol 1e-8)"),
    );
}

#[test]
fn criterion_05_eigenvalue_transport() {
    let mut r = rng(5);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let lambdas: Vec<C64> = (0..4)
            .map(|_| {
                let modulus = if r.gen_bool(0.5) {
                    r.gen_range(0.1..0.8)
                } else {
                    r.gen_range(1.25..2.0)
                };
                C64::from_polar(modulus, r.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        let p = Pencil::standard(ComplexMatrix::from_diag(&lambdas)).unwrap();
        let its = chain(&p, 6);
        for (j, &lam) in lambdas.iter().enumerate() {
            for i in 1..=6 {
                let own = its[i - 1].a[(j, j)] / its[i - 1].b[(j, j)];
                worst = worst.max((own - lam.powu(i as u32)).norm());
                for k in 1..=6 {
                    let cross = its[i - 1].a[(j, j)] / its[k - 1].b[(j, j)];
                    let mapped = eigenvalue_map(ExtComplex::Finite(lam), i, k)
                        .unwrap()
                        .finite()
                        .unwrap();
                    worst = worst.max((cross - mapped).norm());
                }
            }
        }
    }
    report(
        5,
        "eigenvalue transport",
        worst <= 1e-9,
        format!("max abs error {worst:.2e} (tol 1e-9)"),
    );
}

#[test]
fn criterion_06_breakdown_prediction() {
    let omega = C64::from_polar(1.0, std::f64::consts::TAU / 3.0);
    let mut hits = 0;
    let mut notes = Vec::new();
    for case in 0..10u64 {
        let mut r = rng(600 + case);
        let bad = if case % 2 == 0 {
            C64::new(-1.0, 0.0)
        } else {
            omega
        };
        let mut values = vec![
            bad,
            C64::from_polar(r.gen_range(0.1..0.8), r.gen_range(0.0..6.0)),
        ];
        values.push(C64::from_polar(
            r.gen_range(1.3..2.5),
            r.gen_range(0.0..6.0),
        ));
        let spectrum = values.iter().map(|&z| SpectrumEntry::simple(z)).collect();
        let spec = ProblemSpec::new(spectrum, case)
            .with_similarity(Similarity::Random {
                condition: 10f64.powf(r.gen_range(0.0..2.0)),
            })
            .with_mixing(case % 3 == 0);
        let prob = make_pencil_problem(&spec).unwrap();
        let predicted = breakdown_check(&values, 10).unwrap();
        let tagged = prob.expected_breakdown;
        let got = ab_run(&prob.pencil, 1e-12, 50, None);
        let ok = tagged == Some(predicted)
            && got.as_ref().err() == Some(&PencilError::Breakdown { k: predicted + 1 });
        if ok {
            hits += 1;
        } else {
            notes.push(format!(
                "case {case}: predicted {predicted}, got {:?}",
                got.err()
            ));
        }
    }
    report(
        6,
        "breakdown prediction",
        hits == 10,
        format!("{hits}/10 at the predicted index {}", notes.join("; ")),
    );
}

/// Spectrum with `Re in [0.5, 3]`, `|Im| <= 1`; similarity condition drawn
/// log-uniformly up to `max_cond`.
fn sqrt_problem(n: usize, max_cond: f64, seed: u64) -> (KnownSqrt, f64) {
    let mut r = rng(seed ^ 0x7777);
    let spectrum = (0..n)
        .map(|_| SpectrumEntry::simple(C64::new(r.gen_range(0.5..3.0), r.gen_range(-1.0..1.0))))
        .collect();
    let cond = max_cond.powf(r.gen_range(0.0..1.0));
    let spec =
        ProblemSpec::new(spectrum, seed).with_similarity(Similarity::Random { condition: cond });
    (make_known_sqrt_problem(&spec).unwrap(), cond)
}

#[test]
fn criterion_07_sqrt_correctness() {
    let mut worst_err = (0.0f64, 0, 0, 0.0);
    let mut worst_res = 0.0f64;
    for case in 0..20u64 {
        let n = 2 + (case as usize % 7);
        let (k, cond) = sqrt_problem(n, 1e3, 700 + case);
        for r in [2usize, 3] {
            let res = sqrtm_ab(&SqrtProblem::new(k.s.clone()).order(r)).unwrap();
            let err = (&res.x - &k.x_true).norm_fro() / k.x_true.norm_fro();
            if err > worst_err.0 {
                worst_err = (err, case, r, cond);
            }
            worst_res = worst_res.max(res.residual);
        }
    }
    let pass = worst_err.0 <= 1e-9 && worst_res <= 1e-10;
    report(
        7,
        "square-root correctness",
        pass,
        format!(
            "max rel error {:.2e} (case {}, r={}, cond {:.0}; tol 1e-9), max residual {worst_res:.2e} (tol 1e-10)",
            worst_err.0, worst_err.1, worst_err.2, worst_err.3
        ),
    );
}

fn terminal_order(t: &ConvergenceTrace) -> f64 {
    *t.order_estimates()
        .last()
        .expect("order estimates available")
}

#[test]
fn criterion_08_convergence_orders() {
    let specs: Vec<ProblemSpec> = (0..5u64)
        .map(|s| {
            let mut r = rng(800 + s);
            let values: Vec<f64> = (0..2 + s as usize).map(|_| r.gen_range(1.0..4.0)).collect();
            ProblemSpec::from_values(&values, s)
        })
        .chain(std::iter::once(ProblemSpec::from_values(&[2.0, 3.0], 7)))
        .collect();
    let mut lines = Vec::new();
    let mut pass = true;
    for spec in &specs {
        let q2 = terminal_order(
            &run_experiment(ExperimentKind::Sqrt, spec, &SolverParams::with_order(2)).unwrap(),
        );
        let q3 = terminal_order(
            &run_experiment(ExperimentKind::Sqrt, spec, &SolverParams::with_order(3)).unwrap(),
        );
        let plain = SolverParams {
            plain: true,
            ..SolverParams::default()
        };
        let q1 = terminal_order(&run_experiment(ExperimentKind::Sqrt, spec, &plain).unwrap());
        pass &= (1.8..=2.2).contains(&q2) && (2.6..=3.4).contains(&q3) && (q1 - 1.0).abs() <= 0.1;
        lines.push(format!("{q2:.3}/{q3:.3}/{q1:.3}"));
    }
    report(
        8,
        "convergence orders",
        pass,
        format!("r=2/r=3/plain terminal orders: {}", lines.join(", ")),
    );
}

#[test]
fn criterion_09_newton_equivalence() {
    let mut worst = 0.0f64;
    for case in 0..10u64 {
        let (k, _) = sqrt_problem(2 + (case as usize % 5), 10.0, 900 + case);
        let mut outer = Vec::new();
        let prob = SqrtProblem::new(k.s.clone()).order(2).tol(1e-300).kmax(10);
        sqrtm_ab_observed(&prob, |_, q| outer.push(q.clone())).unwrap();
        let mut newton = ComplexMatrix::identity(k.s.rows());
        for (idx, q) in outer.iter().enumerate() {
            if idx > 0 {
                newton = newton_step(&newton, &k.s).unwrap();
            }
            worst = worst.max(q.rel_diff(&newton));
        }
    }
    report(
        9,
        "Newton equivalence",
        worst <= 1e-11,
        format!("max rel diff {worst:.2e} (tol 1e-11)"),
    );
}

#[test]
fn criterion_10_binomial_form() {
    let mut worst = 0.0f64;
    for case in 0..10u64 {
        let (k, _) = sqrt_problem(2 + (case as usize % 5), 10.0, 1000 + case);
        for r in 2..=5 {
            let mut q = ComplexMatrix::identity(k.s.rows());
            for outer in 2..=4 {
                let stepped = accel_q_step(&q, &k.s, r, outer).unwrap();
                worst = worst.max(binomial_step(&q, &k.s, r).unwrap().rel_diff(&stepped));
                q = stepped;
            }
        }
    }
    report(
        10,
        "binomial-form oracle",
        worst <= 1e-9,
        format!("max rel diff {worst:.2e} (tol 1e-9)"),
    );
}

#[test]
fn criterion_11_cayley_identities() {
    let mut worst = 0.0f64;
    for case in 0..10u64 {
        let (k, _) = sqrt_problem(2 + (case as usize % 5), 10.0, 1100 + case);
        let x = &k.x_true;
        let c = cayley_factor(x, 1.0).unwrap();
        let id = ComplexMatrix::identity(x.rows());
        for (idx, q) in q_chain(&k.s, 1.0, 20).unwrap().iter().enumerate() {
            let ck = c.powi(idx as u32 + 1);
            let expect = LuFactorization::new(&(&id - &ck))
                .unwrap()
                .solve_right(&(x * &(&id + &ck)))
                .unwrap();
            worst = worst.max(q.rel_diff(&expect));
        }
    }
    // r_k = ||C(Q_k)|| = |c|^k on scalar and diagonal problems, so r_i^j = r_j^i
    let mut power_worst = 0.0f64;
    let cases = [vec![2.0], vec![0.5], vec![2.0, 0.5, 3.0], vec![1.5, 4.0]];
    for roots in &cases {
        let x = ComplexMatrix::from_real_diag(roots);
        let s = &x * &x;
        let res: Vec<f64> = q_chain(&s, 1.0, 8)
            .unwrap()
            .iter()
            .map(|q| cayley_residual(q, &x).unwrap())
            .collect();
        for i in 1..=8 {
            for j in 1..=8 {
                let lhs = res[i - 1].powi(j as i32);
                let rhs = res[j - 1].powi(i as i32);
                power_worst = power_worst.max((lhs - rhs).abs() / lhs.max(rhs));
            }
        }
    }
    report(
        11,
        "Cayley identities",
        worst <= 1e-8 && power_worst <= 1e-8,
        format!(
            "closed form max rel diff {worst:.2e}, power relations {power_worst:.2e} (tol 1e-8)"
        ),
    );
}

#[test]
fn criterion_12_singular_case() {
    let zero = SpectrumEntry {
        value: C64::new(0.0, 0.0),
        multiplicity: 1,
        semisimple: true,
    };
    let mut pass = true;
    let mut lines = Vec::new();
    for seed in 0..4u64 {
        let spec = ProblemSpec::new(vec![zero, SpectrumEntry::real(1.0)], 1200 + seed);
        for r in [2usize, 3] {
            let t =
                run_experiment(ExperimentKind::Sqrt, &spec, &SolverParams::with_order(r)).unwrap();
            let ratios = t.leading_error_ratios(1e-2);
            let last = *ratios.last().unwrap();
            let target = 1.0 / r as f64;
            pass &= ratios.len() >= 3 && (last - target).abs() <= 0.2 * target;
            lines.push(format!("r={r}: {last:.3}"));
        }
        let plain = SolverParams {
            plain: true,
            kmax: 200,
            ..SolverParams::default()
        };
        let t = run_experiment(ExperimentKind::Sqrt, &spec, &plain).unwrap();
        let ratios = t.leading_error_ratios(0.0);
        let last = *ratios.last().unwrap();
        let tail_rising = ratios[ratios.len() - 20..]
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-6);
        pass &= last > 0.98 && last < 1.0 + 1e-6 && tail_rising;
        lines.push(format!("plain: {last:.4}"));
    }
    report(
        12,
        "singular case",
        pass,
        format!("final error ratios {}", lines.join(", ")),
    );
}

#[test]
fn criterion_13_block_structure() {
    let mut worst = 0.0f64;
    for case in 0..12u64 {
        let n = 1 + (case as usize % 4);
        let (k, _) = sqrt_problem(n, 10.0, 1300 + case);
        let s = &k.s;
        let gamma = 0.5 + 0.25 * (case % 5) as f64;
        let pencil = embed_pencil(s, gamma).unwrap();
        let qs = q_chain(s, gamma, 8).unwrap();
        let id = ComplexMatrix::identity(n);
        let s_scale = s.norm_fro().max(1.0);
        for (idx, it) in AbChain::new(&pencil).take(8).enumerate() {
            let it = it.unwrap();
            let q = &qs[idx];
            worst = worst
                .max((&it.a.block(0, n, n, n) + &id).norm_fro())
                .max((&it.b.block(0, n, n, n) - &id).norm_fro())
                .max((&it.a.block(n, 0, n, n) + s).norm_fro() / s_scale)
                .max((&it.b.block(n, 0, n, n) - s).norm_fro() / s_scale);
            for blk in [
                it.a.block(0, 0, n, n),
                it.a.block(n, n, n, n),
                it.b.block(0, 0, n, n),
                it.b.block(n, n, n, n),
            ] {
                worst = worst.max(blk.rel_diff(q));
            }
        }
    }
    report(
        13,
        "block structure",
        worst <= 1e-9,
        format!("max deviation {worst:.2e} (tol 1e-9)"),
    );
}

fn abflow(args: &[&str], out_dir: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_abflow"))
        .args(args)
        .env("ABFLOW_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

#[test]
fn criterion_14_cli_end_to_end() {
    let dir = std::env::temp_dir().join(format!("abflow-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let mut notes = Vec::new();

    std::fs::write(p("diag49.txt"), "4 0\n0 9\n").unwrap();
    let code = abflow(
        &[
            "sqrt",
            "--input",
            &p("diag49.txt"),
            "--order",
            "2",
            "--out",
            &p("X.json"),
        ],
        &dir,
    );
    let x = parse_matrix_str(
        &std::fs::read_to_string(p("X.json")).unwrap_or_default(),
        MatrixFormat::Json,
    );
    let sqrt_ok = code == 0
        && x.as_ref()
            .map(|x| x.rel_diff(&ComplexMatrix::from_real_diag(&[2.0, 3.0])) <= 1e-12)
            .unwrap_or(false);
    notes.push(format!("sqrt exit {code}"));

    std::fs::write(p("neg1.txt"), "-1 0 0\n0 0.5 0\n0 0 2\n").unwrap();
    std::fs::write(p("id.txt"), "1 0 0\n0 1 0\n0 0 1\n").unwrap();
    let code = abflow(
        &[
            "pencil",
            "--a",
            &p("neg1.txt"),
            "--b",
            &p("id.txt"),
            "--out",
            &p("U.json"),
        ],
        &dir,
    );
    let pencil_ok = code == 2 && !dir.join("U.json").exists();
    notes.push(format!("pencil exit {code}"));

    let bench_dir = dir.join("bench");
    let code = abflow(
        &[
            "bench",
            "--kind",
            "sqrt",
            "--spectrum",
            "2,3",
            "--orders",
            "2",
            "--seed",
            "7",
            "--out-dir",
            &bench_dir.to_string_lossy(),
        ],
        &dir,
    );
    let csv = std::fs::read_to_string(bench_dir.join("sqrt_r2.csv")).unwrap_or_default();
    let last_order = csv
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(3).and_then(|v| v.parse::<f64>().ok()))
        .last();
    let bench_ok = code == 0 && last_order.is_some_and(|q| (1.8..=2.2).contains(&q));
    notes.push(format!("bench exit {code}, terminal order {last_order:?}"));

    let usage = abflow(&["sqrt"], &dir);
    let usage_ok = usage == 1;
    notes.push(format!("usage exit {usage}"));

    let mut r = rng(1400);
    let mut round_trip_ok = true;
    for _ in 0..50 {
        let rows = r.gen_range(1..6);
        let cols = r.gen_range(1..6);
        let data = (0..rows * cols)
            .map(|_| {
                let mag = 10f64.powi(r.gen_range(-300..300));
                C64::new(
                    r.gen_range(-1.0..1.0) * mag,
                    f64::from_bits(r.gen::<u64>() & 0x7fef_ffff_ffff_ffff),
                )
            })
            .collect();
        let m = ComplexMatrix::new(rows, cols, data).unwrap();
        let back = parse_matrix_str(&matrix_to_json(&m), MatrixFormat::Json).unwrap();
        round_trip_ok &= back.shape() == m.shape()
            && m.as_slice()
                .iter()
                .zip(back.as_slice())
                .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits());
    }
    notes.push(format!(
        "json round trip {}",
        if round_trip_ok { "exact" } else { "lossy" }
    ));
    let _ = std::fs::remove_dir_all(&dir);

    report(
        14,
        "CLI end to end",
        sqrt_ok && pencil_ok && bench_ok && usage_ok && round_trip_ok,
        notes.join(", "),
    );
}
