use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twoweight::geometry::{cover_cube, Cube, Rational, Rect, ShiftedGrid};
use twoweight::constants::{a2, CubeFamily};
use twoweight::measures::{CellSet, Lattice, LatticeFunction, Measure, Sampling};
use twoweight::operators::maximal_field;

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n as i128, d as i128).unwrap()
}

/// A cube with corner on the 1/64 lattice in [-8, 8)^n and side 2^j / 64.
fn cube(dim: usize) -> impl Strategy<Value = Cube> {
    (prop::collection::vec(-512i64..512, dim), 0i32..9)
        .prop_map(|(c, j)| Cube::new(c.into_iter().map(|x| rat(x, 64)).collect(), Rational::pow2(j - 6)).unwrap())
}

fn lattice_measure(dim: usize, seed: u64) -> Measure {
    let lat = Lattice::window(dim, Rational::int(-8), Rational::int(8), rat(1, 4)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let masses = (0..lat.len()).map(|_| rng.gen_range(0.0..2.0)).collect();
    Measure::lattice(lat, masses).unwrap()
}

fn measures(dim: usize, seed: u64) -> Vec<Measure> {
    let unit = Rect::new(vec![Rational::ZERO; dim], vec![Rational::ONE; dim]).unwrap();
    let mut out = vec![Measure::lebesgue(dim), Measure::indicator(unit), lattice_measure(dim, seed)];
    if dim == 1 {
        out.push(Measure::exp_1d());
    }
    out
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn mass_is_additive_over_children(q in (1usize..3).prop_flat_map(cube), seed in 0u64..4) {
        for mu in measures(q.dim(), seed) {
            let whole = mu.mass(&q).unwrap();
            let parts: f64 = q.children().iter().map(|c| mu.mass(c).unwrap()).sum();
            prop_assert!(close(whole, parts), "{q}: {whole} vs {parts}");
        }
    }

    #[test]
    fn restriction_splits_the_mass(q in cube(2), seed in 0u64..8, cut in 0.0f64..1.0) {
        let mu = lattice_measure(2, seed);
        let lat = mu.as_lattice().unwrap().lattice().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let mask = (0..lat.len()).map(|_| rng.gen::<f64>() < cut).collect();
        let e = CellSet::from_mask(&lat, mask).unwrap();
        let inside = mu.restrict(&e).unwrap().mass(&q).unwrap();
        let outside = mu.restrict(&e.complement()).unwrap().mass(&q).unwrap();
        prop_assert!(inside >= 0.0 && outside >= 0.0);
        prop_assert!(close(inside + outside, mu.mass(&q).unwrap()));
    }

    #[test]
    fn children_and_parents_are_inverse(q in cube(2)) {
        let kids = q.children();
        prop_assert_eq!(kids.len(), 4);
        let vol: Rational = kids.iter().fold(Rational::ZERO, |acc, c| acc + c.volume());
        prop_assert_eq!(vol, q.volume());
        for c in &kids {
            prop_assert!(q.contains(c));
            prop_assert!(c.parents().contains(&q));
        }
        for p in q.parents() {
            prop_assert!(p.contains(&q));
            prop_assert!(p.children().contains(&q));
        }
    }

    #[test]
    fn shifted_grid_cubes_nest(shifts in prop::collection::vec(0u8..3, 1..3), j in -4i32..4, seed in any::<u64>()) {
        let g = ShiftedGrid::new(shifts).unwrap();
        let n = g.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Rational> = (0..n).map(|_| rat(rng.gen_range(-3000..3000), 243)).collect();
        let k = g.index_of(j, &x).unwrap();
        let q = g.cube(j, &k).unwrap();
        prop_assert!(q.contains_point(&x));
        prop_assert_eq!(q.side(), Rational::pow2(j));
        let parent = g.cube(j + 1, &g.parent_index(j, &k)).unwrap();
        prop_assert!(parent.contains(&q));
        let kids = g.child_indices(j, &k);
        prop_assert_eq!(kids.len(), 1 << n);
        let vol = kids.iter().fold(Rational::ZERO, |acc, c| acc + g.cube(j - 1, c).unwrap().volume());
        prop_assert_eq!(vol, q.volume());
        for c in kids {
            prop_assert!(q.contains(&g.cube(j - 1, &c).unwrap()));
        }
        prop_assert_eq!(g.locate(&q), Some((j, k)));
    }

    #[test]
    fn grid_native_lattices_are_aligned(shifts in prop::collection::vec(0u8..3, 1..3), level in -3i32..1, q in cube(2)) {
        let g = ShiftedGrid::new(shifts).unwrap();
        let n = g.dim();
        let rect = Rect::new(q.corner()[..n].to_vec(), q.upper()[..n].to_vec()).unwrap();
        let lat = Lattice::grid_native(&g, level, &rect).unwrap();
        let (j, k0) = lat.grid_alignment(&g).expect("native lattice is aligned");
        prop_assert_eq!(j, level);
        prop_assert_eq!(lat.cell_cube(0), g.cube(level, &k0).unwrap());
        prop_assert!(lat.extent().contains_rect(&rect));
    }
}

#[test]
fn one_third_cover_on_ten_thousand_cubes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let nine_tenths = rat(9, 10);
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let dim = 1 + i % 2;
        let corner = (0..dim).map(|_| rat(rng.gen_range(-4096..4096), 512)).collect();
        let side = rat(rng.gen_range(1..2048), 512);
        let q = Cube::new(corner, side).unwrap();
        let rep = cover_cube(&q).unwrap();
        assert!(rep.cube.dilate(nine_tenths).unwrap().contains(&q), "{q} not inside 9/10 of {}", rep.cube);
        assert_eq!(rep.grid.locate(&rep.cube).map(|(j, _)| j), Some(rep.level));
        worst = worst.max(rep.side_ratio);
    }
    assert!(worst <= 4.0, "side ratio {worst}");
}

#[test]
fn midpoint_discretization_converges_quadratically() {
    let exp = Measure::exp_1d();
    let q = Cube::interval(rat(-3, 1), rat(2, 1)).unwrap();
    let truth = 2f64.exp() - (-3f64).exp();
    let err = |h: Rational| {
        let lat = Lattice::window(1, Rational::int(-4), Rational::int(4), h).unwrap();
        let d = exp.discretize(&lat, Sampling::Midpoint).unwrap();
        (d.mass(&q).unwrap() - truth).abs()
    };
    let errs: Vec<f64> = (2..7).map(|k| err(Rational::pow2(-k))).collect();
    for w in errs.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!((rate - 2.0).abs() < 0.1, "rate {rate} from {errs:?}");
    }
    let exact = exp.discretize(&Lattice::window(1, Rational::int(-4), Rational::int(4), rat(1, 4)).unwrap(), Sampling::Exact);
    assert!(close(exact.unwrap().mass(&q).unwrap(), truth));
}

fn small_lattice_pair(seed: u64) -> (Lattice, Measure, LatticeFunction, LatticeFunction) {
    let lat = Lattice::window(1, Rational::int(0), Rational::int(4), rat(1, 8)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = Measure::lattice(lat.clone(), (0..lat.len()).map(|_| rng.gen_range(0.1..3.0)).collect()).unwrap();
    let f: Vec<f64> = (0..lat.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let g: Vec<f64> = f.iter().map(|x| x + rng.gen_range(0.0..1.0)).collect();
    (lat.clone(), sigma, LatticeFunction::new(lat.clone(), f).unwrap(), LatticeFunction::new(lat, g).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn maximal_operator_is_monotone_and_homogeneous(seed in any::<u64>(), c in 0.1f64..10.0) {
        let (_, sigma, f, g) = small_lattice_pair(seed);
        let mf = maximal_field(&f, &sigma, 1).unwrap();
        let mg = maximal_field(&g, &sigma, 1).unwrap();
        let mcf = maximal_field(&f.scaled(c).unwrap(), &sigma, 1).unwrap();
        for i in 0..mf.values().len() {
            prop_assert!(mf.values()[i] <= mg.values()[i] * (1.0 + 1e-12));
            prop_assert!(close(mcf.values()[i], c * mf.values()[i]));
        }
    }

    #[test]
    fn a2_scales_linearly_in_each_weight(seed in any::<u64>(), c in 0.1f64..10.0) {
        let (lat, sigma, _, _) = small_lattice_pair(seed);
        let omega = lattice_measure_on(&lat, seed ^ 0x5555);
        let scaled = Measure::lattice(lat.clone(), sigma.as_lattice().unwrap().masses().iter().map(|m| c * m).collect()).unwrap();
        let fam = CubeFamily::aligned(&lat.extent(), rat(1, 8)).unwrap();
        let base = a2(&sigma, &omega, &fam).unwrap();
        let bumped = a2(&scaled, &omega, &fam).unwrap();
        prop_assert!(close(bumped.value_sq, c * base.value_sq));
        prop_assert_eq!(bumped.witness.cube, base.witness.cube);
    }
}

fn lattice_measure_on(lat: &Lattice, seed: u64) -> Measure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Measure::lattice(lat.clone(), (0..lat.len()).map(|_| rng.gen_range(0.1..3.0)).collect()).unwrap()
}
