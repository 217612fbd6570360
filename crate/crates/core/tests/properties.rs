use certbound::codec::{canonicalize, decode_pair, encode_pair, enumerate_canonical, CanonicalSpace, Permutation};
use certbound::engine::{iterate, RunConfig};
use certbound::fixedpoint::shift;
use certbound::oracle::exact_expected_min;
use certbound::{
    compute_bound, verify, Alphabet, Backend, Error, FxScale, FxVector, Letter, MemoryBudget, PairCode, Problem,
    TransformPlan, Verdict,
};
use proptest::prelude::*;

const P: i64 = FxScale::DEFAULT_P;

fn plan(k: u32, h: u32, problem: Problem, backend: Backend) -> TransformPlan {
    TransformPlan::build(
        &Alphabet::new(k, h).unwrap(),
        problem,
        backend,
        MemoryBudget::unlimited(),
    )
    .unwrap()
}

fn backends(k: u32) -> Vec<Backend> {
    if k == 2 {
        vec![Backend::Binary, Backend::Dense, Backend::Sparse]
    } else {
        vec![Backend::Dense, Backend::Sparse]
    }
}

fn vector(values: Vec<i64>) -> FxVector {
    FxVector::new(FxScale::default(), values)
}

/// The transformation evaluated straight from its definition: every
/// appended letter is enumerated, every successor canonicalized, and the
/// average taken with exact integer division.
fn reference_apply(space: &CanonicalSpace, problem: Problem, prev: &[i64], prev2: &[i64]) -> Vec<i64> {
    let alphabet = *space.alphabet();
    let k = alphabet.k() as i64;
    let ord = |u: &[Letter], v: &[Letter]| -> usize {
        let code = encode_pair(u, v, &alphabet).unwrap();
        space.ordinal_of(canonicalize(code, &alphabet).unwrap().0).unwrap() as usize
    };
    let cat = |a: &[Letter], b: &[Letter]| -> Vec<Letter> { a.iter().chain(b).copied().collect() };
    space
        .iter()
        .map(|idx| {
            let (u, v) = decode_pair(idx.class_rep, &alphabet).unwrap();
            let (s, t) = (&u[1..], &v[1..]);
            let letters = 0..alphabet.k();
            let both: i64 = letters
                .clone()
                .flat_map(|c| letters.clone().map(move |c2| (c, c2)))
                .map(|(c, c2)| prev2[ord(&cat(s, &[c]), &cat(t, &[c2]))])
                .sum();
            let left: i64 = letters.clone().map(|c| prev[ord(&cat(s, &[c]), &v)]).sum();
            let right: i64 = letters.clone().map(|c| prev[ord(&u, &cat(t, &[c]))]).sum();
            // compare everything over the common denominator k²
            let (both, left, right) = (both, left * k, right * k);
            let k2 = k * k;
            match (problem, u[0] == v[0]) {
                (Problem::Edit, true) => both.div_euclid(k2) + i64::from(both.rem_euclid(k2) != 0),
                (Problem::Edit, false) => {
                    let m = both.min(left).min(right);
                    P + m.div_euclid(k2) + i64::from(m.rem_euclid(k2) != 0)
                }
                (Problem::Lcs, true) => P + both.div_euclid(k2),
                (Problem::Lcs, false) => left.max(right).div_euclid(k2),
            }
        })
        .collect()
}

#[test]
fn backends_match_the_definition() {
    for (k, h) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (4, 2), (5, 1)] {
        let alphabet = Alphabet::new(k, h).unwrap();
        let space = enumerate_canonical(&alphabet, MemoryBudget::unlimited()).unwrap();
        let len = space.len() as usize;
        let prev: Vec<i64> = (0..len as i64).map(|i| (i * 7919) % (4 * P) - P).collect();
        let prev2: Vec<i64> = (0..len as i64).map(|i| (i * 104_729 + 13) % (3 * P)).collect();
        for problem in [Problem::Edit, Problem::Lcs] {
            let expected = reference_apply(&space, problem, &prev, &prev2);
            for backend in backends(k) {
                let got = plan(k, h, problem, backend)
                    .apply(&vector(prev.clone()), &vector(prev2.clone()))
                    .unwrap();
                assert_eq!(got.values(), &expected[..], "k={k} h={h} {problem} {backend}");
            }
        }
    }
}

#[test]
fn engine_chains_from_zero() {
    let run = |problem| {
        let config = RunConfig::new(problem, Alphabet::new(2, 1).unwrap(), 4).with_budget(MemoryBudget::unlimited());
        iterate(&config).unwrap()
    };
    let edit = run(Problem::Edit);
    assert_eq!(edit.last.values(), &[50_000, 150_000]);
    assert_eq!(edit.prev.values(), &[0, 100_000]);
    let lcs = run(Problem::Lcs);
    assert_eq!(lcs.last.values(), &[150_000, 75_000]);
    assert_eq!(lcs.prev.values(), &[100_000, 50_000]);
}

#[test]
fn published_values_at_small_scale() {
    // h = 1 is vacuous for edit distance, but already proves something for LCS
    let config = RunConfig::new(Problem::Lcs, Alphabet::new(2, 1).unwrap(), 4).with_budget(MemoryBudget::unlimited());
    assert_eq!(compute_bound(&config).unwrap().bound().decimal(), "0.4999");
    let config = RunConfig::new(Problem::Edit, Alphabet::new(2, 6).unwrap(), 60).with_budget(MemoryBudget::unlimited());
    let bound = compute_bound(&config).unwrap().bound();
    assert!(bound.to_f64() < 0.4 && bound.to_f64() > 0.17372, "{bound}");
}

#[test]
fn tight_rate_is_minimal_and_monotone() {
    let config = RunConfig::new(Problem::Edit, Alphabet::new(3, 2).unwrap(), 25).with_budget(MemoryBudget::unlimited());
    let mut cert = compute_bound(&config).unwrap().certificate;
    let proposed = cert.r_num;
    // binary search for the smallest valid rate below the proposal
    let (mut lo, mut hi) = (proposed - 10 * P, proposed);
    cert.r_num = lo;
    assert!(!verify(&cert).unwrap().is_valid());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        cert.r_num = mid;
        if verify(&cert).unwrap().is_valid() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    for r in hi..hi + 200 {
        cert.r_num = r;
        assert!(verify(&cert).unwrap().is_valid(), "r={r}");
    }
    cert.r_num = hi - 1;
    assert!(matches!(verify(&cert).unwrap(), Verdict::Invalid { .. }));
}

#[test]
fn lowering_a_value_breaks_its_own_inequality() {
    let config = RunConfig::new(Problem::Edit, Alphabet::new(2, 4).unwrap(), 30).with_budget(MemoryBudget::unlimited());
    let cert = compute_bound(&config).unwrap().certificate;
    for i in [0, 5, cert.values.len() - 1] {
        let mut dented = cert.clone();
        dented.values[i] -= 5 * P;
        assert_eq!(verify(&dented).unwrap(), Verdict::Invalid { witness: i as u64 });
    }
}

#[test]
fn expectation_is_permutation_invariant() {
    for k in [2u32, 3] {
        let perms: Vec<Permutation> = match k {
            2 => vec![Permutation::from_images(vec![1, 0]).unwrap()],
            _ => vec![
                Permutation::from_images(vec![1, 2, 0]).unwrap(),
                Permutation::from_images(vec![0, 2, 1]).unwrap(),
            ],
        };
        for s in 0..k {
            for t in 0..k {
                for problem in [Problem::Edit, Problem::Lcs] {
                    let base = exact_expected_min(problem, &[s], &[t], 2, k).unwrap();
                    for perm in &perms {
                        let moved = exact_expected_min(problem, &[perm.apply(s)], &[perm.apply(t)], 2, k).unwrap();
                        assert_eq!(base, moved, "k={k} s={s} t={t} {problem}");
                    }
                }
            }
        }
    }
}

#[test]
fn class_counts() {
    for (k, h, classes) in [(2, 1, 2), (2, 2, 8), (3, 1, 2), (3, 2, 14), (4, 2, 15), (5, 2, 15)] {
        let space = enumerate_canonical(&Alphabet::new(k, h).unwrap(), MemoryBudget::unlimited()).unwrap();
        assert_eq!(space.len(), classes, "k={k} h={h}");
    }
}

#[test]
fn plan_budget_and_shape_errors() {
    let alphabet = Alphabet::new(3, 3).unwrap();
    let tiny = MemoryBudget::from_bytes(16);
    assert!(matches!(
        TransformPlan::build(&alphabet, Problem::Edit, Backend::Dense, tiny),
        Err(Error::Capacity { .. })
    ));
    let p = plan(3, 2, Problem::Edit, Backend::Dense);
    let short = vector(vec![0; 3]);
    assert!(p.apply(&short, &short).is_err());
    let big = vector(vec![i64::MAX / 2; 14]);
    assert!(matches!(p.apply(&big, &big), Err(Error::Overflow(_))));
}

fn shape() -> impl Strategy<Value = (u32, u32)> {
    prop_oneof![Just((2, 1)), Just((2, 3)), Just((3, 2)), Just((4, 2)), Just((3, 3))]
}

fn classes(k: u32, h: u32) -> usize {
    enumerate_canonical(&Alphabet::new(k, h).unwrap(), MemoryBudget::unlimited())
        .unwrap()
        .len() as usize
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_and_monotonicity(
        (k, h) in shape(),
        lcs in any::<bool>(),
        seed in prop::collection::vec(-3 * P..3 * P, 128),
        bumps in prop::collection::vec(0..P, 128),
        m in -2 * P..2 * P,
    ) {
        let problem = if lcs { Problem::Lcs } else { Problem::Edit };
        let len = classes(k, h);
        let prev = vector((0..len).map(|i| seed[i % 128]).collect());
        let prev2 = vector((0..len).map(|i| seed[(i * 7 + 3) % 128]).collect());
        for backend in backends(k) {
            let p = plan(k, h, problem, backend);
            let base = p.apply(&prev, &prev2).unwrap();
            let moved = p.apply(&shift(&prev, m).unwrap(), &shift(&prev2, m).unwrap()).unwrap();
            prop_assert_eq!(&moved, &shift(&base, m).unwrap());
            let hi = vector(prev.values().iter().enumerate().map(|(i, v)| v + bumps[i % 128]).collect());
            let hi2 = vector(prev2.values().iter().enumerate().map(|(i, v)| v + bumps[(i + 5) % 128]).collect());
            let upper = p.apply(&hi, &hi2).unwrap();
            prop_assert!(upper.values().iter().zip(base.values()).all(|(a, b)| a >= b));
        }
    }

    #[test]
    fn canonical_form_is_stable(k in 2u32..6, code_seed in any::<u64>(), swap in any::<(u8, u8)>()) {
        let alphabet = Alphabet::new(k, 2).unwrap();
        let code = PairCode(code_seed % alphabet.code_space());
        let (canon, perm) = canonicalize(code, &alphabet).unwrap();
        prop_assert_eq!(canonicalize(canon, &alphabet).unwrap().0, canon);
        let (u, v) = decode_pair(code, &alphabet).unwrap();
        let (cu, cv) = decode_pair(canon, &alphabet).unwrap();
        prop_assert_eq!(perm.apply_word(&u), cu);
        prop_assert_eq!(perm.apply_word(&v), cv);
        let mut images: Vec<Letter> = (0..k).collect();
        images.swap(swap.0 as usize % k as usize, swap.1 as usize % k as usize);
        let sigma = Permutation::from_images(images).unwrap();
        let moved = encode_pair(&sigma.apply_word(&u), &sigma.apply_word(&v), &alphabet).unwrap();
        prop_assert_eq!(canonicalize(moved, &alphabet).unwrap().0, canon);
    }
}
