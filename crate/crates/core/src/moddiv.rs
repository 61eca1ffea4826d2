//! Modular-division dataset: every `a / b = c (mod p)` with `b != 0`.
//!
//! Token layout: residues `0..p` map to ids `0..p`, the division sign is
//! `p` and the equals sign is `p + 1`. Each exported line reads
//! `a op b eq c`; the answer is the final token.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MODULUS: u64 = 97;
pub const MAX_MODULUS: u64 = 1_000_000;
/// Generation materializes every example; this bounds memory use.
pub const MAX_EXAMPLES: u64 = 50_000_000;
/// Index of the answer token within an exported line.
pub const ANSWER_POSITION: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Example {
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
    All,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "all" => Ok(Split::All),
            _ => Err(Error::invalid("split", format!("expected train, test or all, got {s:?}"))),
        }
    }
}

/// Examples in canonical order (dividend-major, then divisor) with a
/// train/test flag per example.
#[derive(Debug, Clone, PartialEq)]
pub struct ModDivDataset {
    p: u64,
    examples: Vec<Example>,
    in_train: Vec<bool>,
    train_fraction: f64,
    seed: u64,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

fn check_modulus(p: u64) -> Result<()> {
    if p > MAX_MODULUS {
        return Err(Error::invalid("p", format!("{p} exceeds {MAX_MODULUS}")));
    }
    if !is_prime(p) {
        return Err(Error::invalid("p", format!("{p} is not prime")));
    }
    if p * (p - 1) > MAX_EXAMPLES {
        return Err(Error::invalid(
            "p",
            format!("{p} would produce more than {MAX_EXAMPLES} examples"),
        ));
    }
    Ok(())
}

fn check_fraction(train_fraction: f64) -> Result<()> {
    if train_fraction > 0.0 && train_fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "train_fraction",
            format!("{train_fraction} is outside (0, 1)"),
        ))
    }
}

fn enumerate(p: u64) -> Vec<Example> {
    // inverses by Fermat; p is prime
    let inverse: Vec<u64> = (0..p).map(|b| pow_mod(b, p - 2, p)).collect();
    (0..p)
        .flat_map(|a| {
            let inverse = &inverse;
            (1..p).map(move |b| Example {
                a,
                b,
                c: a * inverse[b as usize] % p,
            })
        })
        .collect()
}

/// Train membership: shuffle indices, the first `floor(fraction * total)` train.
fn split_flags(total: usize, train_fraction: f64, seed: u64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (train_fraction * total as f64).floor() as usize;
    let mut in_train = vec![false; total];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    in_train
}

pub fn generate(p: u64, train_fraction: f64, seed: u64) -> Result<ModDivDataset> {
    check_modulus(p)?;
    check_fraction(train_fraction)?;
    let examples = enumerate(p);
    let in_train = split_flags(examples.len(), train_fraction, seed);
    Ok(ModDivDataset {
        p,
        examples,
        in_train,
        train_fraction,
        seed,
    })
}

/// Counts of `0 / b = 0` examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroDividendStats {
    pub total: usize,
    pub in_train: usize,
    pub in_test: usize,
}

/// Sidecar written next to an exported token file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportMeta {
    pub p: u64,
    pub vocab_size: u64,
    pub op_id: u64,
    pub eq_id: u64,
    pub train_fraction: f64,
    pub seed: u64,
    /// Line indices (0-based) of training examples, ascending.
    pub train_indices: Vec<usize>,
    pub answer_position: usize,
}

impl ModDivDataset {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn in_train(&self) -> &[bool] {
        &self.in_train
    }

    pub fn train_fraction(&self) -> f64 {
        self.train_fraction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn op_id(&self) -> u64 {
        self.p
    }

    pub fn eq_id(&self) -> u64 {
        self.p + 1
    }

    pub fn vocab_size(&self) -> u64 {
        self.p + 2
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Example> + '_ {
        self.examples
            .iter()
            .zip(&self.in_train)
            .filter(move |(_, &train)| match split {
                Split::Train => train,
                Split::Test => !train,
                Split::All => true,
            })
            .map(|(e, _)| e)
    }

    pub fn zero_dividend_stats(&self) -> ZeroDividendStats {
        let (mut in_train, mut in_test) = (0, 0);
        for (e, &train) in self.examples.iter().zip(&self.in_train) {
            if e.a == 0 {
                if train {
                    in_train += 1;
                } else {
                    in_test += 1;
                }
            }
        }
        ZeroDividendStats {
            total: in_train + in_test,
            in_train,
            in_test,
        }
    }

    /// Expected accuracy of a classifier that is always right on `0 / b`
    /// and guesses uniformly elsewhere, as the exact fraction
    /// `(z * p + (n - z)) / (n * p)`.
    pub fn peak_accuracy_fraction(&self, split: Split) -> Result<(u64, u64)> {
        let (mut n, mut z) = (0u64, 0u64);
        for e in self.split(split) {
            n += 1;
            z += u64::from(e.a == 0);
        }
        if n == 0 {
            return Err(Error::invalid("split", "selected split is empty"));
        }
        Ok((z * self.p + (n - z), n * self.p))
    }

    /// Accuracy when every zero-dividend example is right and the rest are at
    /// chance `1/p`.
    pub fn predicted_peak_accuracy(&self, split: Split) -> Result<f64> {
        let (num, den) = self.peak_accuracy_fraction(split)?;
        Ok(num as f64 / den as f64)
    }

    pub fn tokens(&self, e: &Example) -> [u64; 5] {
        [e.a, self.op_id(), e.b, self.eq_id(), e.c]
    }

    pub fn export_meta(&self) -> ExportMeta {
        ExportMeta {
            p: self.p,
            vocab_size: self.vocab_size(),
            op_id: self.op_id(),
            eq_id: self.eq_id(),
            train_fraction: self.train_fraction,
            seed: self.seed,
            train_indices: self
                .in_train
                .iter()
                .enumerate()
                .filter_map(|(i, &t)| t.then_some(i))
                .collect(),
            answer_position: ANSWER_POSITION,
        }
    }

    /// One example per line: ASCII decimal ids separated by single spaces.
    pub fn write_tokens<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.examples {
            let [a, op, b, eq, c] = self.tokens(e);
            writeln!(out, "{a} {op} {b} {eq} {c}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Rebuilds a dataset from an exported token file and its sidecar.
    pub fn read_tokens<R: BufRead>(input: R, meta: &ExportMeta) -> Result<Self> {
        let p = meta.p;
        check_modulus(p)?;
        check_fraction(meta.train_fraction)?;
        if meta.op_id != p || meta.eq_id != p + 1 || meta.vocab_size != p + 2 {
            return Err(Error::Parse("sidecar vocabulary does not match p".into()));
        }
        let mut examples = Vec::new();
        for (line_no, line) in input.lines().enumerate() {
            let line = line?;
            let bad = |msg: &str| Error::Parse(format!("line {}: {msg}", line_no + 1));
            let ids = line
                .split(' ')
                .map(|tok| tok.parse::<u64>().map_err(|_| bad("bad token id")))
                .collect::<Result<Vec<_>>>()?;
            let [a, op, b, eq, c] = ids[..] else {
                return Err(bad("expected 5 tokens"));
            };
            if op != p || eq != p + 1 || a >= p || b == 0 || b >= p || c >= p {
                return Err(bad("token out of place"));
            }
            if c * b % p != a {
                return Err(bad("c * b != a (mod p)"));
            }
            examples.push(Example { a, b, c });
        }
        let mut in_train = vec![false; examples.len()];
        for &i in &meta.train_indices {
            *in_train
                .get_mut(i)
                .ok_or_else(|| Error::Parse(format!("train index {i} out of range")))? = true;
        }
        Ok(ModDivDataset {
            p,
            examples,
            in_train,
            train_fraction: meta.train_fraction,
            seed: meta.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes() {
        let small: Vec<u64> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(is_prime(97));
        assert!(!is_prime(97 * 89));
    }

    #[test]
    fn p5_contents() {
        let d = generate(5, 0.5, 1).unwrap();
        assert_eq!(d.len(), 20);
        for b in 1..5 {
            assert!(d.examples().contains(&Example { a: 0, b, c: 0 }));
        }
        assert!(d.examples().contains(&Example { a: 3, b: 2, c: 4 }));
        assert_eq!(d.zero_dividend_stats().total, 4);
        assert_eq!(d.vocab_size(), 7);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(generate(4, 0.5, 0).unwrap_err().field(), Some("p"));
        assert_eq!(generate(1, 0.5, 0).unwrap_err().field(), Some("p"));
        assert_eq!(generate(999_983, 0.5, 0).unwrap_err().field(), Some("p"));
        for f in [0.0, 1.0, -0.2, f64::NAN] {
            assert_eq!(generate(5, f, 0).unwrap_err().field(), Some("train_fraction"));
        }
    }

    #[test]
    fn split_size_and_determinism() {
        let d = generate(97, 0.3, 9).unwrap();
        let n_train = d.in_train().iter().filter(|&&t| t).count();
        assert_eq!(n_train, (0.3 * 9312.0f64).floor() as usize);
        assert_eq!(d, generate(97, 0.3, 9).unwrap());
        assert_ne!(d.in_train(), generate(97, 0.3, 10).unwrap().in_train());
    }

    #[test]
    fn token_line_format() {
        let d = generate(5, 0.5, 0).unwrap();
        let mut buf = Vec::new();
        d.write_tokens(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().any(|l| l == "3 5 2 6 4"));
        assert!(text.ends_with('\n'));
        assert_eq!(text.lines().count(), 20);
    }

    #[test]
    fn token_round_trip() {
        let d = generate(13, 0.4, 77).unwrap();
        let mut buf = Vec::new();
        d.write_tokens(&mut buf).unwrap();
        let meta = d.export_meta();
        let json = serde_json::to_string(&meta).unwrap();
        let meta: ExportMeta = serde_json::from_str(&json).unwrap();
        assert_eq!(ModDivDataset::read_tokens(buf.as_slice(), &meta).unwrap(), d);
    }

    #[test]
    fn read_rejects_wrong_equations() {
        let d = generate(5, 0.5, 0).unwrap();
        let meta = d.export_meta();
        assert!(ModDivDataset::read_tokens("3 5 2 6 3\n".as_bytes(), &meta).is_err());
        assert!(ModDivDataset::read_tokens("3 5 2 6\n".as_bytes(), &meta).is_err());
        assert!(ModDivDataset::read_tokens("3  5 2 6 4\n".as_bytes(), &meta).is_err());
    }

    #[test]
    fn peak_accuracy_edge_cases() {
        let d = generate(97, 0.5, 3).unwrap();
        // a split holding only zero-dividend examples
        let mut only_zero = d.clone();
        only_zero.in_train = d.examples.iter().map(|e| e.a == 0).collect();
        assert_eq!(only_zero.predicted_peak_accuracy(Split::Train).unwrap(), 1.0);
        // a split with no zero-dividend examples
        assert_eq!(only_zero.predicted_peak_accuracy(Split::Test).unwrap(), 1.0 / 97.0);
        let mut empty = d.clone();
        empty.in_train = vec![false; d.len()];
        assert!(empty.predicted_peak_accuracy(Split::Train).is_err());
    }
}
