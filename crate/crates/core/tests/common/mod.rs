//! Shared fixtures: an exact rational coder and synthetic dataset families.
#![allow(dead_code)]

use bnzip::codec::ProbabilityInterval;
use bnzip::schema::{Column, Dataset, Schema, Value};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Q = BigRational;
pub type QInterval = ProbabilityInterval<Q>;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(l: Q, r: Q) -> QInterval {
    QInterval::new(l, r).expect("valid rational interval")
}

/// Nearest rational for an `f64` (exact: every finite double is dyadic).
pub fn q_from_f64(x: f64) -> Q {
    Q::from_float(x).expect("finite")
}

fn bits_of(value: &BigInt, k: u32) -> String {
    let s = value.to_str_radix(2);
    format!("{}{}", "0".repeat(k as usize - s.len().min(k as usize)), s)
}

/// Exact-arithmetic encoder: emit settled halves after every product, then
/// the shortest dyadic cell inside what remains (nothing for the unit interval).
pub fn ref_encode(intervals: &[QInterval]) -> String {
    let mut it = QInterval::unit();
    let mut out = String::new();
    for iv in intervals {
        it = it.product(iv);
        while let Some(k) = it.dyadic_half() {
            out.push(if k { '1' } else { '0' });
            it = it.zoom(k);
        }
    }
    for k in 0u32.. {
        let scale = BigInt::from(1) << k;
        let lo = (it.lo() * Q::from_integer(scale.clone())).ceil().to_integer();
        if Q::new(lo.clone() + 1, scale.clone()) <= *it.hi() {
            if k > 0 {
                out.push_str(&bits_of(&lo, k));
            }
            return out;
        }
    }
    unreachable!()
}

/// Working interval left after encoding `intervals` and emitting every settled bit.
pub fn ref_working_interval(intervals: &[QInterval]) -> QInterval {
    let mut it = QInterval::unit();
    for iv in intervals {
        it = it.product(iv);
        while let Some(k) = it.dyadic_half() {
            it = it.zoom(k);
        }
    }
    it
}

/// One branch decision of [`RefDecoder`]: the state right after `I_t` absorbed
/// the chosen branch, before renormalization.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub it: QInterval,
    pub ib: QInterval,
    pub input: String,
    pub branch: usize,
}

/// Exact decoder keeping the decoded interval `I_t` and the read-bits interval `I_b`.
pub struct RefDecoder {
    bits: Vec<bool>,
    pos: usize,
    it: QInterval,
    ib: QInterval,
    pub trace: Vec<TraceStep>,
}

impl RefDecoder {
    pub fn new(code: &str) -> Self {
        RefDecoder {
            bits: code.chars().map(|c| c == '1').collect(),
            pos: 0,
            it: QInterval::unit(),
            ib: QInterval::unit(),
            trace: Vec::new(),
        }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }

    /// `None` when the input runs out before a branch is determined.
    pub fn next_branch(&mut self, branches: &[QInterval]) -> Option<usize> {
        loop {
            if let Some(i) = branches.iter().position(|b| self.it.product(b).contains(&self.ib)) {
                self.it = self.it.product(&branches[i]);
                let input = self.bits[..self.pos].iter().map(|&b| if b { '1' } else { '0' }).collect();
                self.trace.push(TraceStep { it: self.it.clone(), ib: self.ib.clone(), input, branch: i });
                while let Some(k) = self.it.dyadic_half() {
                    self.it = self.it.zoom(k);
                    self.ib = self.ib.zoom(k);
                }
                return Some(i);
            }
            let x = *self.bits.get(self.pos)?;
            self.pos += 1;
            self.ib = self.ib.product(&QInterval::half(x));
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn binary_schema(names: impl IntoIterator<Item = String>) -> Schema {
    Schema::new(names.into_iter().map(|n| Column::categorical(n, 2)).collect()).unwrap()
}

/// 100 binary columns; the last 50 copy the first 50, which are fair coins.
pub fn pairwise(n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let rows = (0..n)
        .map(|_| {
            let head: Vec<usize> = (0..50).map(|_| r.gen_range(0..2)).collect();
            head.iter().chain(&head).map(|&v| Value::Cat(v)).collect()
        })
        .collect();
    Dataset::new(binary_schema((0..100).map(|i| format!("a{i}"))), rows).unwrap()
}

/// Four-state chain over `m` columns: uniform start, stay with 2/3, move to each other state with 1/9.
pub fn markov(m: usize, n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let schema = Schema::new((0..m).map(|i| Column::categorical(format!("s{i}"), 4)).collect()).unwrap();
    let rows = (0..n)
        .map(|_| {
            let mut s = r.gen_range(0..4usize);
            (0..m)
                .map(|j| {
                    if j > 0 {
                        let u: f64 = r.gen();
                        if u >= 2.0 / 3.0 {
                            s = (s + 1 + (((u - 2.0 / 3.0) * 9.0) as usize).min(2)) % 4;
                        }
                    }
                    Value::Cat(s)
                })
                .collect()
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

/// Entropy rate of [`markov`] in bits per column after the first.
pub fn markov_rate() -> f64 {
    -(2.0 / 3.0 * (2.0f64 / 3.0).log2() + 3.0 / 9.0 * (1.0f64 / 9.0).log2())
}

/// Cluster column (fair coin) followed by 100 binary columns, each its
/// cluster centre's bit flipped with probability `flip`.
pub fn clustered(n: usize, flip: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let centres: Vec<Vec<usize>> = (0..2).map(|_| (0..100).map(|_| r.gen_range(0..2)).collect()).collect();
    let rows = (0..n)
        .map(|_| {
            let c = r.gen_range(0..2usize);
            std::iter::once(Value::Cat(c))
                .chain(centres[c].iter().map(|&b| Value::Cat(b ^ r.gen_bool(flip) as usize)))
                .collect()
        })
        .collect();
    Dataset::new(binary_schema(std::iter::once("cluster".to_string()).chain((0..100).map(|i| format!("a{i}")))), rows)
        .unwrap()
}

/// A random categorical network with its exact joint law.
pub struct RandomNetwork {
    pub cards: Vec<usize>,
    pub parents: Vec<Vec<usize>>,
    /// Per column, one distribution per parent configuration (first parent most significant).
    pub cpts: Vec<Vec<Vec<f64>>>,
}

impl RandomNetwork {
    pub fn generate(seed: u64, max_cols: usize, max_card: usize, max_parents: usize) -> Self {
        let mut r = rng(seed);
        let m = r.gen_range(2..=max_cols);
        let cards: Vec<usize> = (0..m).map(|_| r.gen_range(2..=max_card)).collect();
        let mut parents = Vec::with_capacity(m);
        let mut cpts = Vec::with_capacity(m);
        for j in 0..m {
            let k = r.gen_range(0..=max_parents.min(j));
            let ps = rand::seq::index::sample(&mut r, j, k).into_vec();
            let configs: usize = ps.iter().map(|&p| cards[p]).product();
            let table = (0..configs)
                .map(|_| {
                    // Squared uniforms give skewed rows, so there is structure to find.
                    let w: Vec<f64> = (0..cards[j]).map(|_| r.gen::<f64>().powi(2) + 1e-3).collect();
                    let s: f64 = w.iter().sum();
                    w.into_iter().map(|x| x / s).collect()
                })
                .collect();
            parents.push(ps);
            cpts.push(table);
        }
        RandomNetwork { cards, parents, cpts }
    }

    fn config(&self, j: usize, row: &[usize]) -> usize {
        self.parents[j].iter().fold(0, |acc, &p| acc * self.cards[p] + row[p])
    }

    pub fn schema(&self) -> Schema {
        Schema::new(self.cards.iter().enumerate().map(|(i, &c)| Column::categorical(format!("x{i}"), c)).collect())
            .unwrap()
    }

    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        let mut r = rng(seed);
        let m = self.cards.len();
        let rows = (0..n)
            .map(|_| {
                let mut row = vec![0usize; m];
                for j in 0..m {
                    let dist = &self.cpts[j][self.config(j, &row)];
                    let u: f64 = r.gen();
                    let mut acc = 0.0;
                    row[j] = dist.len() - 1;
                    for (v, &p) in dist.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            row[j] = v;
                            break;
                        }
                    }
                }
                row.into_iter().map(Value::Cat).collect()
            })
            .collect();
        Dataset::new(self.schema(), rows).unwrap()
    }

    /// Joint entropy in bits, by enumerating every assignment.
    pub fn entropy(&self) -> f64 {
        let m = self.cards.len();
        let mut row = vec![0usize; m];
        let mut h = 0.0;
        loop {
            let p: f64 = (0..m).map(|j| self.cpts[j][self.config(j, &row)][row[j]]).product();
            if p > 0.0 {
                h -= p * p.log2();
            }
            let mut j = m;
            loop {
                if j == 0 {
                    return h;
                }
                j -= 1;
                row[j] += 1;
                if row[j] < self.cards[j] {
                    break;
                }
                row[j] = 0;
            }
        }
    }
}
