use bvattack_core::attacks::{self, AttackVerdict, Evidence, ImpossibleCertificate, KeyStatus};
use bvattack_core::boolfn::{BooleanFunction, VectorFunction};
use bvattack_core::bv::{OracleFunction, QueryLedger};
use bvattack_core::ciphers::{self, EvenMansour, Preset, ToyCipher};
use bvattack_core::lsfind::Structure;
use bvattack_core::{dot, rng, Dyadic};
use proptest::prelude::*;
use rand::Rng;

fn naive_walsh(f: &BooleanFunction) -> Vec<i32> {
    let size = 1u32 << f.n();
    (0..size)
        .map(|w| (0..size).map(|x| if f.eval(x) ^ dot(w, x) { -1 } else { 1 }).sum())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_transform_matches_direct_sum(n in 1u32..=8, seed in any::<u64>()) {
        let mut r = rng::stream(seed, 0);
        let f = BooleanFunction::from_fn(n, |_| r.gen()).unwrap();
        prop_assert_eq!(f.walsh_spectrum().scaled_values().to_vec(), naive_walsh(&f));
    }

    #[test]
    fn solution_set_matches_enumeration(width in 1u32..=8, rows in 0usize..10, seed in any::<u64>()) {
        let mut r = rng::stream(seed, 0);
        let mut system = bvattack_core::gf2::Gf2System::new(width).unwrap();
        for _ in 0..rows {
            system.push(r.gen_range(0..1u32 << width), r.gen());
        }
        let set = system.solve();
        let brute: Vec<u32> = (0..1u32 << width).filter(|&x| system.is_satisfied_by(x)).collect();
        prop_assert_eq!(set.len(), brute.len() as u64);
        for x in 0..1u32 << width {
            prop_assert_eq!(set.contains(x), system.is_satisfied_by(x));
        }
    }

    #[test]
    fn vector_search_replays_and_agrees_with_samples(seed in any::<u64>()) {
        let (n, key_bits) = (4u32, 3u32);
        let mut r = rng::stream(seed, 0);
        let g = OracleFunction::new(ciphers::random_function(n + key_bits, n, &mut r).unwrap());
        let run = |s| attacks::algorithm5(&g.session(&QueryLedger::new()), key_bits, 40, s).unwrap();
        let first = run(seed);
        prop_assert_eq!(&first, &run(seed));
        if let Some(Structure { input_diff, output_diff }) = first.structure {
            prop_assert!(input_diff != 0 && input_diff < 1 << n);
            for (j, sets) in first.per_component.iter().enumerate() {
                let bit = dot(input_diff, sets.pivot);
                prop_assert!(sets.samples.iter().all(|&w| dot(input_diff, w) == bit));
                prop_assert_eq!(output_diff >> (n - 1 - j as u32) & 1 == 1, bit);
            }
        }
    }
}

#[test]
fn even_mansour_zero_first_key_is_degenerate() {
    let mut r = rng::stream(5, 0);
    let perm = ciphers::random_permutation(6, &mut r).unwrap();
    let e = EvenMansour::new(perm.clone(), 0, 0x2d).unwrap();
    let f = ciphers::even_mansour_function(&e, &perm).unwrap();
    assert!(f.table().iter().all(|&y| y == 0x2d));
    let report = attacks::algorithm4_recover_k1(&e, &perm, 6, 1).unwrap();
    match report.verdict {
        AttackVerdict::Key(a) => assert_ne!(a, e.k1()),
        other => panic!("unexpected verdict {other:?}"),
    }
}

#[test]
fn weak_preset_planted_differential_holds_for_every_key() {
    let cipher = ToyCipher::generate(4, Preset::Weak, 11).unwrap();
    let planted = cipher.planted_differentials();
    assert!(!planted.is_empty());
    for d in planted {
        for k in 0..1u32 << cipher.key_bits() {
            assert_eq!(cipher.differential_probability(k, d.input_diff, d.output_diff), Dyadic::ONE);
        }
    }
}

#[test]
fn counting_with_a_false_differential_rarely_finds_the_key() {
    let n = 4;
    let (mut planted_hits, mut control_hits) = (0, 0);
    let trials = 200;
    for t in 0..trials {
        let seed = rng::trial_seed(77, t);
        let mut r = rng::stream(seed, 0);
        let cipher = ToyCipher::generate(n, Preset::Weak, seed).unwrap();
        let (k, s) = (r.gen_range(0..1u32 << cipher.key_bits()), r.gen_range(0..1u32 << n));
        let target = cipher.instance(k, s);
        let planted = cipher.planted_differentials()[0];
        let control = loop {
            let d = Structure { input_diff: r.gen_range(1..1u32 << n), output_diff: r.gen_range(0..1u32 << n) };
            if cipher.differential_probability(k, d.input_diff, d.output_diff) < Dyadic::new(1, 2) {
                break d;
            }
        };
        let hit = |d| attacks::differential_key_recovery(&cipher, &target, d, 64, seed).unwrap().verdict == AttackVerdict::Subkey(s);
        planted_hits += hit(planted) as u32;
        control_hits += hit(control) as u32;
    }
    assert!(planted_hits as f64 / trials as f64 >= 0.95, "planted {planted_hits}/{trials}");
    assert!((control_hits as f64 / trials as f64) < 0.5, "control {control_hits}/{trials}");
}

#[test]
fn bogus_certificate_is_flagged_by_brute_force() {
    let n = 4;
    let cipher = ToyCipher::generate(n, Preset::Weak, 3).unwrap();
    let bogus = (0..n)
        .flat_map(|j| (1..1u32 << n).flat_map(move |a| [false, true].map(move |v| (j, a, v))))
        .find(|&(j, a, v)| !cipher.is_impossible(j, a, v))
        .map(|(component, input_diff, value)| ImpossibleCertificate { component, input_diff, value })
        .unwrap();
    assert!(!cipher.is_impossible(bogus.component, bogus.input_diff, bogus.value));
    let sieved = (0..20u64)
        .filter(|&t| {
            let s = t as u32 % (1 << n);
            let target = cipher.instance(t as u32, s);
            let report = attacks::impossible_sieve(&cipher, &target, bogus, 64, t).unwrap();
            let Evidence::Sieve { table, .. } = report.evidence else { unreachable!() };
            table.statuses[s as usize] == KeyStatus::Sieved
        })
        .count();
    assert!(sieved > 0);
}

#[test]
fn codebook_of_identity_is_identity() {
    let id = VectorFunction::identity(5).unwrap();
    assert_eq!(ciphers::codebook(&id).unwrap(), id);
}
