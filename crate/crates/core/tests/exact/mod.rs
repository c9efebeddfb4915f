//! Exact observation probabilities for tiny graphs.
//!
//! The asynchronous engine is a Markov chain on (active set, informed set).
//! Messages to non-curious nodes are hidden, so the probability that the
//! observation starts with a given list of senders is a forward recursion
//! through the chain's fundamental matrix `(I - T)^-1`, where `T` holds the
//! hidden transitions. The probability that it is exactly that list adds the
//! mass that then informs everyone without another observed message. All
//! arithmetic is over exact rationals.

#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// (active mask, informed mask)
type State = (u32, u32);

pub struct ExactChain {
    n: usize,
    /// Curious nodes are the top `f` ids.
    f: usize,
    s: Q,
    states: Vec<State>,
    index: HashMap<State, usize>,
    /// Fundamental matrix of the hidden transitions.
    fundamental: Vec<Vec<Q>>,
    /// Per state, probability of finishing with hidden messages only.
    finish_hidden: Vec<Q>,
}

/// Mass over transient states, plus mass of runs that have already informed
/// every node (and can produce no further observations).
#[derive(Clone)]
pub struct Dist {
    pub live: Vec<Q>,
    pub done: Q,
}

impl Dist {
    pub fn total(&self) -> Q {
        self.live.iter().fold(self.done.clone(), |acc, p| acc + p)
    }
}

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |b| mask & (1 << b) != 0)
}

impl ExactChain {
    pub fn new(n: usize, f: usize, s: Q) -> Self {
        assert!(n <= 8 && f + 2 <= n);
        let full = (1u32 << n) - 1;
        let mut chain = ExactChain {
            n,
            f,
            s,
            states: Vec::new(),
            index: HashMap::new(),
            fundamental: Vec::new(),
            finish_hidden: Vec::new(),
        };
        // Every state reachable from any honest source.
        let mut stack: Vec<State> = (0..n - f).map(|i| (1 << i, 1 << i)).collect();
        while let Some(x) = stack.pop() {
            if chain.index.contains_key(&x) {
                continue;
            }
            chain.index.insert(x, chain.states.len());
            chain.states.push(x);
            for (_, _, y) in chain.moves(x) {
                if y.1 != full && !chain.index.contains_key(&y) {
                    stack.push(y);
                }
            }
        }
        chain.fundamental = chain.invert_hidden();
        // One-step hidden moves into the absorbing (all informed) states.
        let last_step: Vec<Q> = chain
            .states
            .iter()
            .map(|&x| {
                chain
                    .moves(x)
                    .into_iter()
                    .filter(|(_, (_, j), y)| !chain.is_curious(*j) && y.1 == full)
                    .fold(Q::zero(), |acc, (p, _, _)| acc + p)
            })
            .collect();
        chain.finish_hidden = chain
            .fundamental
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&last_step)
                    .fold(Q::zero(), |acc, (g, b)| acc + g * b)
            })
            .collect();
        chain
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn honest(&self) -> usize {
        self.n - self.f
    }

    fn is_curious(&self, node: usize) -> bool {
        node >= self.n - self.f
    }

    /// Every (probability, (sender, receiver), next state) out of `x`.
    fn moves(&self, (active, informed): State) -> Vec<(Q, (usize, usize), State)> {
        let k = active.count_ones() as i64;
        let pick = q(1, k * self.n as i64);
        let mut out = Vec::new();
        for a in bits(active) {
            for j in 0..self.n {
                for (p, stays) in [(self.s.clone(), true), (Q::one() - &self.s, false)] {
                    if p.is_zero() {
                        continue;
                    }
                    let kept = if stays { active } else { active & !(1 << a) };
                    let next = (kept | 1 << j, informed | 1 << j);
                    out.push((&pick * &p, (a, j), next));
                }
            }
        }
        out
    }

    fn invert_hidden(&self) -> Vec<Vec<Q>> {
        let m = self.states.len();
        let full = (1u32 << self.n) - 1;
        // a = I - T, augmented with the identity.
        let mut a: Vec<Vec<Q>> = (0..m)
            .map(|r| {
                let mut row = vec![Q::zero(); 2 * m];
                row[r] = Q::one();
                row[m + r] = Q::one();
                row
            })
            .collect();
        for (r, &x) in self.states.iter().enumerate() {
            for (p, (_, j), y) in self.moves(x) {
                if self.is_curious(j) || y.1 == full {
                    continue;
                }
                let c = self.index[&y];
                a[r][c] -= p;
            }
        }
        for col in 0..m {
            let pivot = (col..m)
                .find(|&r| !a[r][col].is_zero())
                .expect("I - T is invertible");
            a.swap(col, pivot);
            let inv = a[col][col].recip();
            for v in a[col].iter_mut() {
                *v *= &inv;
            }
            let pivot_row = a[col].clone();
            for (r, row) in a.iter_mut().enumerate() {
                if r == col || row[col].is_zero() {
                    continue;
                }
                let factor = row[col].clone();
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    if !p.is_zero() {
                        *v -= &factor * p;
                    }
                }
            }
        }
        a.into_iter().map(|row| row[m..].to_vec()).collect()
    }

    pub fn start(&self, source: usize) -> Dist {
        let mut live = vec![Q::zero(); self.states.len()];
        live[self.index[&(1 << source, 1 << source)]] = Q::one();
        Dist {
            live,
            done: Q::zero(),
        }
    }

    /// Extends the observation by one entry sent by `sender`.
    pub fn observe(&self, dist: &Dist, sender: usize) -> Dist {
        let m = self.states.len();
        let full = (1u32 << self.n) - 1;
        // Mass at each state just before the next observed message.
        let mut before = vec![Q::zero(); m];
        for (x, px) in dist.live.iter().enumerate() {
            if px.is_zero() {
                continue;
            }
            for (z, g) in self.fundamental[x].iter().enumerate() {
                if !g.is_zero() {
                    before[z] += px * g;
                }
            }
        }
        let mut out = Dist {
            live: vec![Q::zero(); m],
            done: Q::zero(),
        };
        for (z, pz) in before.iter().enumerate() {
            if pz.is_zero() {
                continue;
            }
            for (p, (a, j), y) in self.moves(self.states[z]) {
                if a != sender || !self.is_curious(j) {
                    continue;
                }
                let mass = pz * &p;
                if y.1 == full {
                    out.done += mass;
                } else {
                    out.live[self.index[&y]] += mass;
                }
            }
        }
        out
    }

    /// Probability that the observation ends right after the entries that
    /// led to `dist`.
    pub fn ends_here(&self, dist: &Dist) -> Q {
        dist.live
            .iter()
            .zip(&self.finish_hidden)
            .fold(dist.done.clone(), |acc, (p, h)| acc + p * h)
    }

    /// Probability, per honest source, that the observation starts with
    /// `senders`.
    pub fn prefix_probabilities(&self, senders: &[usize]) -> Vec<Q> {
        (0..self.honest())
            .map(|source| {
                senders
                    .iter()
                    .fold(self.start(source), |d, &s| self.observe(&d, s))
                    .total()
            })
            .collect()
    }
}

/// A counterexample to first-in-prior optimality.
#[derive(Debug)]
pub struct Violation {
    pub senders: Vec<usize>,
    /// Whether the sequence is the whole observation or only its start.
    pub complete: bool,
    pub prior: u32,
    pub predicted: usize,
    pub better: usize,
}

#[derive(Debug, Default)]
pub struct MapCheck {
    pub sequences: usize,
    pub checks: usize,
    pub violations: Vec<Violation>,
}

/// Walks every observation prefix of up to `max_len` entries that has
/// positive probability under some honest source. For every non-empty prior
/// over honest nodes it checks that the first sender in the prior has the
/// largest likelihood among prior members. This is checked both for
/// observations that start with the prefix and for observations that are
/// exactly the prefix.
pub fn check_first_in_prior(chain: &ExactChain, max_len: usize) -> MapCheck {
    let honest = chain.honest();
    let mut report = MapCheck::default();
    let starts: Vec<Dist> = (0..honest).map(|i| chain.start(i)).collect();
    let mut path = Vec::new();
    walk(chain, &starts, &mut path, max_len, &mut report);
    report
}

fn walk(
    chain: &ExactChain,
    dists: &[Dist],
    path: &mut Vec<usize>,
    left: usize,
    report: &mut MapCheck,
) {
    if left == 0 {
        return;
    }
    let honest = chain.honest();
    for sender in 0..chain.n() {
        let next: Vec<Dist> = dists.iter().map(|d| chain.observe(d, sender)).collect();
        let starts_with: Vec<Q> = next.iter().map(Dist::total).collect();
        if starts_with.iter().all(Zero::is_zero) {
            continue;
        }
        let exactly: Vec<Q> = next.iter().map(|d| chain.ends_here(d)).collect();
        path.push(sender);
        report.sequences += 1;
        for prior in 1u32..(1 << honest) {
            let Some(&first) = path.iter().find(|&&s| s < honest && prior & (1 << s) != 0) else {
                continue;
            };
            for (likelihood, complete) in [(&starts_with, false), (&exactly, true)] {
                if complete && likelihood.iter().all(Zero::is_zero) {
                    continue;
                }
                report.checks += 1;
                for i in bits(prior) {
                    if likelihood[i] > likelihood[first] {
                        report.violations.push(Violation {
                            senders: path.clone(),
                            complete,
                            prior,
                            predicted: first,
                            better: i,
                        });
                    }
                }
            }
        }
        walk(chain, &next, path, left - 1, report);
        path.pop();
    }
}
