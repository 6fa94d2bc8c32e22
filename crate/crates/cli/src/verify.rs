//! Built-in verification suites: compiled-energy identity, grid convergence
//! bound, spin identity and reduction-gadget soundness. Each suite prints
//! one line per check and the command exits nonzero if any line fails.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmpc::error::Result;
use qmpc::model::{euler_discretize, ContinuousDynamics, DiscreteModel};
use qmpc::pmpc::{assemble_objective, MpcConfig, ObjectiveData};
use qmpc::polyalg::{MonomialBasis, PolyVec};
use qmpc::predict::build_omega;
use qmpc::qubo::{
    build_affine_qubo, penalty_value, reduce_degree, to_ising, BinPoly, BinaryEncoding,
    IsingProblem, QuboProblem,
};
use qmpc::solve::solve_exhaustive;

fn bits_of(word: u64, m: usize) -> Vec<u8> {
    (0..m).map(|i| ((word >> i) & 1) as u8) .collect()
}

fn scalar_model(a: f64, b: f64) -> DiscreteModel {
    let basis = MonomialBasis::build(2, 1);
    let field = PolyVec::from_terms(
        1,
        basis,
        &[(0, vec![1, 0], a - 1.0), (0, vec![0, 1], b)],
    )
    .unwrap();
    let plant = ContinuousDynamics::new(field, 1, 1).unwrap();
    euler_discretize(&plant, 1.0).unwrap()
}

struct Instance {
    cfg: MpcConfig,
    obj: ObjectiveData,
}

fn random_instance(rng: &mut ChaCha8Rng, n_c: usize, n_bits: u32) -> Instance {
    let model = scalar_model(rng.gen_range(-0.8..0.8), rng.gen_range(0.5..1.2));
    let horizon = rng.gen_range(n_c.max(2)..=5);
    let blocks = if n_c == 1 {
        vec![horizon]
    } else {
        vec![1, horizon - 1]
    };
    let cfg = MpcConfig {
        horizon,
        state_weight: DVector::from_row_slice(&[rng.gen_range(0.5..2.0)]),
        terminal_weight: DVector::from_row_slice(&[rng.gen_range(0.5..2.0)]),
        input_weight: DVector::from_row_slice(&[rng.gen_range(0.2..1.0)]),
        blocks,
        alpha: 1,
        c_lo: DVector::from_element(n_c, rng.gen_range(-2.0..-0.5)),
        c_hi: DVector::from_element(n_c, rng.gen_range(0.5..2.0)),
        n_bits,
    };
    let gamma = cfg.blocking(1).unwrap();
    let op = build_omega(
        &model,
        &DVector::from_row_slice(&[rng.gen_range(-1.0..1.0)]),
        &DVector::from_row_slice(&[0.0]),
        &gamma,
        horizon,
        1,
    )
    .unwrap();
    let reference = DVector::from_fn(horizon, |_, _| rng.gen_range(-0.5..0.5));
    let obj = assemble_objective(&cfg, &op, &reference).unwrap();
    Instance { cfg, obj }
}

fn check(ok: bool, line: &str, failures: &mut usize) {
    if ok {
        println!("PASS {line}");
    } else {
        println!("FAIL {line}");
        *failures += 1;
    }
}

/// Compiled energy plus constant equals the objective on every word.
pub fn suite_qubo_identity(seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for i in 0..5 {
        let n_c = rng.gen_range(1..=2);
        let n_bits = rng.gen_range(2..=3);
        let inst = random_instance(&mut rng, n_c, n_bits);
        let enc = BinaryEncoding::new(inst.cfg.c_lo.clone(), inst.cfg.c_hi.clone(), n_bits)?;
        let problem = build_affine_qubo(&inst.obj, &enc)?;
        let m0 = enc.m0();
        let mut worst = 0.0f64;
        for w in 0..(1u64 << m0) {
            let bits = bits_of(w, m0);
            let direct = inst.obj.eval(&problem.decode(&bits)?)?;
            let err = (problem.value(&bits) - direct).abs() / (1.0 + direct.abs());
            worst = worst.max(err);
        }
        check(
            worst <= 1e-9,
            &format!("qubo-identity[{i}] m={m0} worst_rel_err={worst:.2e}"),
            &mut failures,
        );
    }
    Ok(failures)
}

/// Exhaustive grid solutions approach the continuous optimum at the grid
/// rate for every bit width.
pub fn suite_theorem1(seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for i in 0..3 {
        let inst = random_instance(&mut rng, 1, 2);
        let lo = inst.cfg.c_lo[0];
        let hi = inst.cfg.c_hi[0];
        // fine-grid oracle and sampled gradient bound
        let points = 2001;
        let mut j_star = f64::INFINITY;
        let mut c_star = lo;
        for k in 0..points {
            let c = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            let v = inst.obj.eval(&DVector::from_row_slice(&[c]))?;
            if v < j_star {
                j_star = v;
                c_star = c;
            }
        }
        let mut gamma = 0.0f64;
        for k in 0..=100 {
            let c = lo + (hi - lo) * k as f64 / 100.0;
            let g = inst.obj.grad(&DVector::from_row_slice(&[c]))?;
            gamma = gamma.max(g[0].abs());
        }
        for n_bits in 2..=8u32 {
            let enc = BinaryEncoding::new(inst.cfg.c_lo.clone(), inst.cfg.c_hi.clone(), n_bits)?;
            let problem = build_affine_qubo(&inst.obj, &enc)?;
            let sol = solve_exhaustive(&problem)?;
            let c_breve = problem.decode(&sol.xi_best)?[0];
            let bound = (hi - lo) / ((1u64 << n_bits) - 1) as f64;
            let dist = (c_breve - c_star).abs();
            let j_gap = (inst.obj.eval(&DVector::from_row_slice(&[c_breve]))? - j_star).abs();
            let j_bound = gamma * bound;
            check(
                dist <= bound + 1e-12 && j_gap <= j_bound + 1e-12,
                &format!(
                    "theorem1[{i}] nb={n_bits} dist={dist:.3e} bound={bound:.3e} \
                     jgap={j_gap:.3e} jbound={j_bound:.3e}"
                ),
                &mut failures,
            );
        }
    }
    Ok(failures)
}

/// Spin form reproduces the binary energy exhaustively.
pub fn suite_ising(seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for i in 0..5 {
        let m = rng.gen_range(2..=10);
        let q = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
        let problem = QuboProblem::new(q, 0.0);
        let ising = to_ising(&problem);
        let mut worst = 0.0f64;
        for w in 0..(1u64 << m) {
            let bits = bits_of(w, m);
            let spins = IsingProblem::spins_from_bits(&bits);
            worst = worst.max((problem.energy(&bits) - ising.energy(&spins)).abs());
        }
        check(
            worst <= 1e-12,
            &format!("ising[{i}] m={m} worst_abs_err={worst:.2e}"),
            &mut failures,
        );
    }
    Ok(failures)
}

/// Degree reduction plus consistency penalty preserves exhaustive minima.
pub fn suite_gadget(seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for i in 0..10 {
        let n = rng.gen_range(3..=5);
        let mut poly = BinPoly::zero();
        for _ in 0..rng.gen_range(3..9) {
            let deg = rng.gen_range(1..=4.min(n));
            let mut vars: Vec<usize> = (0..n).collect();
            for k in (1..vars.len()).rev() {
                vars.swap(k, rng.gen_range(0..=k));
            }
            vars.truncate(deg);
            poly.add_term(&vars, rng.gen_range(-2.0..2.0));
        }
        let (reduced, upsilon, total) = reduce_degree(&poly, 2, n)?;
        let lambda = 2.0 * poly.abs_coeff_sum();
        let mut best_orig = f64::INFINITY;
        for w in 0..(1u64 << n) {
            best_orig = best_orig.min(poly.eval(&bits_of(w, n)));
        }
        let mut best_red = f64::INFINITY;
        for w in 0..(1u64 << total) {
            let bits = bits_of(w, total);
            best_red =
                best_red.min(reduced.eval(&bits) + lambda * penalty_value(&upsilon, &bits));
        }
        let gap = (best_orig - best_red).abs();
        check(
            gap <= 1e-9 * (1.0 + best_orig.abs()),
            &format!("gadget[{i}] vars={n}->{total} min_gap={gap:.2e}"),
            &mut failures,
        );
    }
    Ok(failures)
}

/// Run one suite (or all) and return the number of failed checks.
pub fn cmd_verify(suite: &str, seed: u64) -> Result<usize> {
    let failures = match suite {
        "qubo-identity" => suite_qubo_identity(seed)?,
        "theorem1" => suite_theorem1(seed)?,
        "ising" => suite_ising(seed)?,
        "gadget" => suite_gadget(seed)?,
        "all" => {
            suite_qubo_identity(seed)?
                + suite_theorem1(seed)?
                + suite_ising(seed)?
                + suite_gadget(seed)?
        }
        other => {
            return Err(qmpc::Error::Config(format!(
                "unknown suite {other:?}; expected qubo-identity, theorem1, ising, gadget or all"
            )))
        }
    };
    if failures == 0 {
        println!("verify {suite}: PASS");
    } else {
        println!("verify {suite}: FAIL ({failures} checks)");
    }
    Ok(failures)
}
