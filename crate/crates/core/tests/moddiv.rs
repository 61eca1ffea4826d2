use std::collections::HashSet;
use std::io::BufReader;

use patternlab::moddiv::{generate, is_prime, ExportMeta, ModDivDataset, Split};
use proptest::prelude::*;

/// Exact expected accuracy of "answer 0 when a = 0, otherwise guess uniformly",
/// counting correct (example, guess) pairs over all `p` equally likely guesses.
fn brute_force_peak(data: &ModDivDataset, split: Split) -> (u64, u64) {
    let p = data.p();
    let (mut correct, mut total) = (0u64, 0u64);
    for e in data.split(split) {
        for guess in 0..p {
            let answer = if e.a == 0 { 0 } else { guess };
            correct += u64::from(answer == e.c);
            total += 1;
        }
    }
    (correct, total)
}

#[test]
fn every_row_divides_correctly_and_every_pair_appears_once() {
    for p in [2, 3, 5, 7, 13, 31, 97] {
        let data = generate(p, 0.5, 1).unwrap();
        assert_eq!(data.len() as u64, p * (p - 1));
        let mut seen = HashSet::new();
        for e in data.examples() {
            assert_ne!(e.b, 0);
            assert!(e.a < p && e.b < p && e.c < p);
            assert_eq!(e.c * e.b % p, e.a, "{e:?} mod {p}");
            // c is the only residue that solves c * b = a
            assert_eq!((0..p).filter(|c| c * e.b % p == e.a).count(), 1);
            assert!(seen.insert((e.a, e.b)));
        }
    }
}

#[test]
fn modulus_97_counts() {
    let data = generate(97, 0.5, 0).unwrap();
    assert_eq!(data.len(), 9312);
    assert_eq!(data.zero_dividend_stats().total, 96);
    let expected = (96.0 + 9216.0 / 97.0) / 9312.0;
    assert!((data.predicted_peak_accuracy(Split::All).unwrap() - expected).abs() <= 1e-12);
}

#[test]
fn non_primes_are_rejected() {
    assert!(!is_prime(1) && !is_prime(91) && is_prime(97));
    assert!(generate(91, 0.5, 0).is_err());
    assert!(generate(97, 1.0, 0).is_err());
}

#[test]
fn export_round_trips_through_files() {
    let data = generate(13, 0.3, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let tokens = dir.path().join("data.txt");
    data.write_tokens(std::fs::File::create(&tokens).unwrap()).unwrap();
    let meta_path = dir.path().join("data.txt.json");
    std::fs::write(&meta_path, serde_json::to_vec(&data.export_meta()).unwrap()).unwrap();

    let meta: ExportMeta = serde_json::from_slice(&std::fs::read(&meta_path).unwrap()).unwrap();
    let back = ModDivDataset::read_tokens(BufReader::new(std::fs::File::open(&tokens).unwrap()), &meta).unwrap();
    assert_eq!(back, data);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn peak_formula_equals_brute_force(
        p in prop::sample::select(vec![3u64, 5, 7, 11, 29, 53, 97]),
        fraction in 0.05..0.95,
        seed in any::<u64>(),
    ) {
        let data = generate(p, fraction, seed).unwrap();
        for split in [Split::Train, Split::Test, Split::All] {
            let Ok((num, den)) = data.peak_accuracy_fraction(split) else {
                prop_assert_eq!(data.split(split).count(), 0);
                continue;
            };
            let (correct, total) = brute_force_peak(&data, split);
            prop_assert_eq!(num * total, correct * den);
        }
    }

    #[test]
    fn split_is_deterministic(p in prop::sample::select(vec![5u64, 11, 97]), fraction in 0.05..0.95, seed in any::<u64>()) {
        let a = generate(p, fraction, seed).unwrap();
        let b = generate(p, fraction, seed).unwrap();
        prop_assert_eq!(a.in_train(), b.in_train());
        let expected = (fraction * a.len() as f64).floor() as usize;
        prop_assert_eq!(a.split(Split::Train).count(), expected);
    }
}
