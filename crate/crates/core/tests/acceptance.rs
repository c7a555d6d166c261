//! Acceptance suite. Runs every criterion, prints one line per criterion
//! and exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twoweight::constants::examples::{a2_rows, exp_pair, meeting_intervals, swapped_ratio};
use twoweight::constants::{a2, norm_lower_bound, testing_constant, CubeFamily, Resolution, Variant};
use twoweight::geometry::{Cube, Rational, Rect, ShiftedGrid};
use twoweight::measures::{CellSet, Lattice, LatticeFunction, Measure};
use twoweight::operators::Operator;
use twoweight::proofcheck::{
    build_level_sets, build_linearization, check_a2ljk, fractional_instance, maximal_instance, principal_suite,
    verify_fractional, verify_maximal, A2ljkReport, FracParams, Generator, GridData, Instance, MaximalReport,
    ProofParams,
};
use twoweight::whitney::{whitney_decompose, WhitneyConfig};

fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Simpson's rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn c1_a2_divergence() -> Outcome {
    let rows = a2_rows(0.0, &[r(2, 1), r(5, 1), r(10, 1)]).unwrap();
    let golden = [1.597, 5.897, 220.3];
    let mut pass = true;
    let mut parts = Vec::new();
    for (row, g) in rows.iter().zip(golden) {
        // closed form recomputed here, and the quoted three-digit values
        let oracle = (row.r.to_f64().exp() - 1.0) / row.r.to_f64().powi(2);
        let rel = (row.computed - oracle).abs() / oracle;
        pass &= rel < 0.01 && (row.computed - g).abs() / g < 0.01;
        parts.push(format!("R={}: {:.4}", row.r, row.computed));
    }
    outcome(pass, parts.join(", "))
}

fn c2_triple_testing_bounded() -> Outcome {
    let (sigma, omega) = exp_pair();
    let fam = meeting_intervals(r(-6, 1), r(8, 1), r(1, 16)).unwrap();
    let rep = testing_constant(
        Operator::Maximal,
        &sigma,
        &omega,
        &fam,
        Variant::Lambda { lambda: r(3, 1) },
        Resolution::PerSide(32),
    )
    .unwrap();
    let bound = 6f64.exp() / 3.0;
    let w = rep.witness.cube.map(|q| q.to_string()).unwrap_or_default();
    outcome(
        fam.len() >= 10_000 && rep.value_sq < bound,
        format!("{} intervals, max ratio {:.4} at {w} < e^6/3 = {bound:.1}", fam.len(), rep.value_sq),
    )
}

fn c3_swapped_blowup() -> Outcome {
    let ratio = |big: i128| swapped_ratio(Operator::Maximal, r(big, 1), Resolution::PerSide(64 * big as u32)).unwrap();
    let (r5, r10) = (ratio(5), ratio(10));
    let lower = |b: f64| simpson(|y| y.exp() / (y * y), 1.0, b, 20_000);
    let oracle = lower(10.0) / lower(5.0);
    let q = r10 / r5;
    outcome(
        q >= 10.0 && q <= 4.0 * oracle && q >= oracle / 4.0,
        format!("ratio(10)/ratio(5) = {q:.2}, oracle {oracle:.2}"),
    )
}

/// Union of random boxes with dyadic corners inside `[-6, 6]^n`.
fn random_open_set(lat: &Lattice, rng: &mut ChaCha8Rng) -> CellSet {
    let n = lat.dim();
    let h = lat.spacing();
    let cells_per_unit = (Rational::ONE / h).to_f64() as i128;
    let mut set = CellSet::empty(lat);
    for _ in 0..rng.gen_range(1..=6) {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for _ in 0..n {
            let side = rng.gen_range(2..=4 * cells_per_unit);
            let a = rng.gen_range(-6 * cells_per_unit..=6 * cells_per_unit - side);
            lo.push(h * Rational::int(a));
            hi.push(h * Rational::int(a + side));
        }
        set = set.union(&CellSet::inside_rect(lat, &Rect::new(lo, hi).unwrap())).unwrap();
    }
    set
}

fn c4_whitney() -> Outcome {
    let mut pass = true;
    let mut c_w = [0usize; 2];
    let mut count = 0;
    for (slot, (n, h)) in [(1usize, r(1, 256)), (2, r(1, 32))].into_iter().enumerate() {
        let lat = Lattice::window(n, r(-8, 1), r(8, 1), h).unwrap();
        let cfg = WhitneyConfig::standard(ShiftedGrid::standard(n));
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let set = random_open_set(&lat, &mut rng);
            let rep = whitney_decompose(&set, &cfg).unwrap().verify();
            let again = whitney_decompose(&set, &cfg).unwrap().verify();
            pass &= rep.all_pass() && again.c_w == rep.c_w;
            c_w[slot] = c_w[slot].max(rep.c_w);
            count += 1;
        }
    }
    outcome(pass, format!("{count} open sets, all five properties, measured C_W 1D {} 2D {}", c_w[0], c_w[1]))
}

fn maximal_suite() -> Vec<Instance> {
    (0..20u64).map(|s| maximal_instance(Generator::Random, 1, s).unwrap()).collect()
}

fn c5_max_principle(reports: &[MaximalReport]) -> Outcome {
    let points: usize = reports.iter().map(|r| r.max_principle.points).sum();
    let violations: usize = reports.iter().map(|r| r.max_principle.violations).sum();
    let inst = maximal_instance(Generator::Random, 1, 0).unwrap();
    let low = ProofParams { m: 1, ..ProofParams::defaults(1) };
    let neg = verify_maximal(&inst, &low).unwrap();
    outcome(
        violations == 0 && points > 0 && neg.max_principle.violations >= 1,
        format!(
            "m = {}: {points} points, {violations} violations on {} instances; m = 1 control: {} violations",
            reports[0].params.m,
            reports.len(),
            neg.max_principle.violations
        ),
    )
}

fn c6_a2ljk() -> Outcome {
    let params = ProofParams::defaults(1);
    let grid = ShiftedGrid::standard(1);
    let mut total = A2ljkReport::default();
    for seed in 0..100u64 {
        let inst = maximal_instance(Generator::Random, 1, 1000 + seed).unwrap();
        let d = GridData::prepare(&inst, &grid, &params).unwrap();
        let sets = build_level_sets(&d, &params).unwrap();
        for cs in &sets.cubes {
            if cs.h_out.is_empty() {
                continue;
            }
            let lin = build_linearization(&d.cell_set(&cs.h_out), &d.grid).unwrap();
            let rep = check_a2ljk(&cs.cube.cube, &lin, &d.sigma_m, &d.omega_m).unwrap();
            total = A2ljkReport::merge([total, rep]);
        }
    }
    let slack = total.worst_slack.unwrap_or(f64::NAN);
    outcome(
        total.violations == 0 && total.checked > 0 && slack >= -1e-9,
        format!("{} checks on 100 instances, worst relative slack {slack:.3e}", total.checked),
    )
}

fn c7_principal(reports: &[MaximalReport], insts: &[Instance]) -> Outcome {
    let mut pass = true;
    let mut pairs = 0;
    for rep in reports {
        let p = rep.principal.as_ref().unwrap();
        pass &= p.prop_i_violations == 0 && p.prop_ii_violations == 0 && p.energy_ratio.is_finite();
        pairs += p.cubes;
    }
    // refinement stability on the standard grid
    let params = ProofParams::defaults(1);
    let grid = ShiftedGrid::standard(1);
    let mut worst: f64 = 1.0;
    for inst in insts.iter().take(5) {
        let energy = |i: &Instance| {
            let d = GridData::prepare(i, &grid, &params).unwrap();
            principal_suite(&d, &params).unwrap().energy_ratio
        };
        let (a, b) = (energy(inst), energy(&inst.refined(2).unwrap()));
        worst = worst.max(a / b).max(b / a);
    }
    pass &= worst <= 2.0;
    outcome(
        pass,
        format!(
            "eta = 4, {pairs} forest cubes on {} instances, energy ratio change under refinement <= x{worst:.3}",
            reports.len()
        ),
    )
}

fn c8_packing(reports: &[MaximalReport]) -> Outcome {
    let mut extra = Vec::new();
    for (g, dim) in [(Generator::LacunarySigma, 1), (Generator::LacunarySigma, 2), (Generator::PointMass, 1)] {
        let inst = maximal_instance(g, dim, 0).unwrap();
        extra.push(verify_maximal(&inst, &ProofParams::defaults(dim)).unwrap());
    }
    let all: Vec<&MaximalReport> = reports.iter().chain(&extra).collect();
    let violations: usize = all.iter().map(|r| r.principal.as_ref().unwrap().packing.violations).sum();
    let worst = all.iter().map(|r| r.principal.as_ref().unwrap().packing.worst_ratio).fold(0.0, f64::max);
    let lac = extra[0].principal.as_ref().unwrap().packing.worst_ratio;
    outcome(
        violations == 0 && extra.iter().all(|r| r.principal.is_some()),
        format!("D = 2 C_W, {} instances, worst ratio {worst:.4} (lacunary {lac:.4}) <= 2", all.len()),
    )
}

fn c9_good_lambda() -> Outcome {
    let params = FracParams::defaults(0.5);
    let mut pass = true;
    let mut rows = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let inst = fractional_instance(Generator::Random, seed, 0.5).unwrap();
        let rep = verify_fractional(&inst, &params).unwrap();
        pass &= rep.good_lambda.identity && rep.good_lambda.violations == 0 && rep.good_lambda.rows.len() == 16;
        rows += rep.good_lambda.rows.len();
        for row in &rep.good_lambda.rows {
            let rhs = row.lhs + row.slack;
            if rhs > 0.0 {
                worst = worst.max(row.lhs / rhs);
            }
        }
    }
    let identity = Rational::int(9) / Rational::int(27) + Rational::int(9) * r(1, 27) == r(2, 3);
    outcome(pass && identity, format!("{rows} (instance, lambda) rows, max lhs/rhs {worst:.3e}, 9C_W/D + 9 beta = 2/3"))
}

fn c10_uniform_constant() -> Outcome {
    let d = 4.0;
    let mut worst: f64 = 0.0;
    let mut worst_literal: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = rng.gen_range(16..=64usize);
        let h = r(1, 16);
        let lat = Lattice::new(vec![Rational::ZERO], h, vec![cells]).unwrap();
        let spread = rng.gen_range(0.5..4.0);
        let mut weights = || -> Vec<f64> { (0..cells).map(|_| h.to_f64() * (spread * rng.gen_range(-1.0..1.0f64)).exp()).collect() };
        let sigma = Measure::lattice(lat.clone(), weights()).unwrap();
        let omega = Measure::lattice(lat.clone(), weights()).unwrap();
        let fam = CubeFamily::aligned(&lat.extent(), h).unwrap();
        let mut fs: Vec<LatticeFunction> = fam
            .cubes()
            .iter()
            .step_by(7)
            .map(|q: &Cube| LatticeFunction::indicator(&lat, q))
            .collect();
        for _ in 0..20 {
            fs.push(LatticeFunction::from_fn(&lat, |_| 0.0).unwrap());
            let last = fs.len() - 1;
            let vals: Vec<f64> = (0..cells).map(|_| (3.0 * rng.gen_range(-1.0..1.0f64)).exp()).collect();
            fs[last] = LatticeFunction::new(lat.clone(), vals).unwrap();
        }
        let norm = norm_lower_bound(Operator::Maximal, &sigma, &omega, &fs, 1).unwrap().value;
        let p = testing_constant(Operator::Maximal, &sigma, &omega, &fam, Variant::DParental { d }, Resolution::Spacing(h))
            .unwrap()
            .value;
        let a = a2(&sigma, &omega, &fam).unwrap().value;
        worst = worst.max(norm / (p + a.sqrt()));
        worst_literal = worst_literal.max(norm / (p + a));
    }
    outcome(
        worst <= 10.0,
        format!("50 pairs, D = {d}: C = {worst:.3} for N <= C (P^D + A2^(1/2)); {worst_literal:.3} with A2 unsquared"),
    )
}

fn timed(label: &str, limit: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = run();
    let took = start.elapsed();
    let pass = out.pass && took <= limit;
    println!(
        "criterion {label}: {} | {} | {:.2} s (limit {} s)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= timed("1 (A2 divergence)", secs(1), c1_a2_divergence);
    ok &= timed("2 (triple testing bounded)", secs(60), c2_triple_testing_bounded);
    ok &= timed("3 (swapped blow-up)", secs(60), c3_swapped_blowup);
    ok &= timed("4 (Whitney properties)", secs(120), c4_whitney);

    let start = Instant::now();
    let insts = maximal_suite();
    let params = ProofParams::defaults(1);
    let reports: Vec<MaximalReport> = insts.iter().map(|i| verify_maximal(i, &params).unwrap()).collect();
    let shared = start.elapsed();
    println!("maximal suite on {} instances: {:.2} s (counted in criteria 5, 7, 8)", insts.len(), shared.as_secs_f64());

    ok &= timed("5 (maximum principle)", secs(120).saturating_sub(shared), || c5_max_principle(&reports));
    ok &= timed("6 (a2ljk inequality)", secs(60), c6_a2ljk);
    ok &= timed("7 (principal cubes)", secs(120).saturating_sub(shared), || c7_principal(&reports, &insts));
    ok &= timed("8 (parental packing)", secs(60).saturating_sub(shared), || c8_packing(&reports));
    ok &= timed("9 (good lambda)", secs(300), c9_good_lambda);
    ok &= timed("10 (uniform constant)", secs(600), c10_uniform_constant);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
