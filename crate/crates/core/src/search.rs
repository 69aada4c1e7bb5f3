//! Optimal sequence search.
//!
//! [`search_optimal`] walks all sequences of each length in [`seq_order`],
//! checking every window of `l'` consecutive gates against the canonical
//! database. A window that is not canonical means an equivalent, earlier
//! sequence has already been compared with the target, so the walk jumps:
//! the window is replaced by its canonical successor and every less
//! significant gate is reset to `G1`. When the window has no successor the
//! jump carries into the next more significant gate.
//!
//! The enumeration of each length is split into 24 partitions by the most
//! significant gate. Partition results are merged in partition order with
//! the same tie-break the serial walk uses, so the partitioned and
//! single-threaded paths return identical results.
//!
//! [`seq_order`]: crate::canondb::seq_order

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use log::warn;

use crate::canondb::{seq_order, unpack_key, window_key, CanonDb};
use crate::error::{Error, Result};
use crate::gateset::{GateId, GateSeq, NUM_GATES};
use crate::unitary::{distance, Distance, Unitary2};

/// Distances closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Largest length accepted by [`search_exhaustive`].
pub const EXHAUSTIVE_CAP: usize = 6;

/// Budgets above this are accepted with a warning.
pub const DESK_LMAX: usize = 21;

/// How the 24 partitions of each length are executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchOptions {
    /// Worker threads. `0` uses the global pool, `1` runs serially.
    pub shards: usize,
}

impl SearchOptions {
    pub fn serial() -> Self {
        SearchOptions { shards: 1 }
    }
}

/// Best sequence found among some set of candidates.
#[derive(Clone, Debug, PartialEq)]
pub struct Best {
    pub seq: GateSeq,
    pub dist: Distance,
    pub t_count: usize,
    /// Candidates within [`TIE_TOL`] of `dist`.
    pub optima_count: u64,
}

impl Best {
    fn new(seq: GateSeq, dist: Distance) -> Self {
        let t_count = seq.t_count();
        Best {
            seq,
            dist,
            t_count,
            optima_count: 1,
        }
    }

    /// Tie-break order: smaller distance, then fewer `T`, then earlier in
    /// sequence order. Distances within [`TIE_TOL`] tie.
    fn beats(&self, other: &Best) -> bool {
        let (a, b) = (self.dist.value(), other.dist.value());
        if a < b - TIE_TOL {
            return true;
        }
        if a > b + TIE_TOL {
            return false;
        }
        match self.t_count.cmp(&other.t_count) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => seq_order(&self.seq, &other.seq) == Ordering::Less,
        }
    }

    /// Folds `other` into `self`.
    fn merge(&mut self, other: Best) {
        let tied = (self.dist.value() - other.dist.value()).abs() <= TIE_TOL;
        let count = if tied {
            self.optima_count + other.optima_count
        } else if other.dist.value() < self.dist.value() {
            other.optima_count
        } else {
            self.optima_count
        };
        if other.beats(self) {
            *self = other;
        }
        self.optima_count = count;
    }
}

fn merge_opt(acc: &mut Option<Best>, other: Option<Best>) {
    match (acc.as_mut(), other) {
        (_, None) => {}
        (None, Some(o)) => *acc = Some(o),
        (Some(a), Some(o)) => a.merge(o),
    }
}

/// Outcome of a search up to some budget.
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub best_seq: GateSeq,
    pub best_dist: Distance,
    pub t_count: usize,
    pub optima_count: u64,
    /// Sequences compared with the target.
    pub sequences_visited: u64,
    /// Sequences never compared. Exact while below 2^53; `24^l` outgrows
    /// every integer counter past `l = 27`.
    pub sequences_skipped: f64,
    pub wall_time: Duration,
    /// Best sequence of each exact length `0..=lmax`.
    pub per_length: Vec<Best>,
}

impl SearchResult {
    /// Fraction of the `Σ 24^k` candidate space that was skipped.
    pub fn skipped_fraction(&self) -> f64 {
        let visited = self.sequences_visited as f64;
        self.sequences_skipped / (visited + self.sequences_skipped)
    }

    /// Best over all lengths up to and including `l`.
    pub fn best_up_to(&self, l: usize) -> Best {
        let mut acc: Option<Best> = None;
        for b in self.per_length.iter().take(l + 1) {
            merge_opt(&mut acc, Some(b.clone()));
        }
        acc.expect("length 0 is always present")
    }
}

/// One point of a convergence curve.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub target: String,
    pub l: usize,
    pub dist: Distance,
    pub seq: Option<GateSeq>,
    pub t_count: usize,
}

#[derive(Clone, Debug, Default)]
struct PartitionResult {
    best: Option<Best>,
    visited: u64,
}

/// Walk state for the sequences of one length whose most significant gate is
/// fixed.
struct Walk<'a> {
    db: &'a CanonDb,
    target: &'a Unitary2,
    width: usize,
    digits: Vec<u8>,
    /// `prods[i]` is the product of the first `i` gates.
    prods: Vec<Unitary2>,
    /// `prods[..=valid]` are up to date.
    valid: usize,
}

impl<'a> Walk<'a> {
    fn new(db: &'a CanonDb, target: &'a Unitary2, len: usize, first: u8) -> Self {
        let mut digits = vec![0u8; len];
        digits[0] = first;
        Walk {
            db,
            target,
            width: len.min(db.lprime()),
            digits,
            prods: vec![Unitary2::IDENTITY; len + 1],
            valid: 0,
        }
    }

    /// Index of the most significant non-canonical window starting at or
    /// after `from`, with its key.
    fn first_bad_window(&self, from: usize) -> Option<(usize, u64)> {
        let n = self.digits.len();
        (from..=n - self.width).find_map(|k| {
            let key = window_key(&self.digits[k..k + self.width]);
            (!self.db.contains_window(self.width, key)).then_some((k, key))
        })
    }

    fn current(&mut self) -> Unitary2 {
        let n = self.digits.len();
        for i in self.valid..n {
            self.prods[i + 1] = self.prods[i] * *GateId::from_digit(self.digits[i]).matrix();
        }
        self.valid = n;
        self.prods[n]
    }

    /// Adds one to the counter at `pos`, carrying upwards. Returns the most
    /// significant position changed, or `None` past the first gate.
    fn increment(&mut self, mut pos: usize) -> Option<usize> {
        loop {
            if (self.digits[pos] as usize) < NUM_GATES - 1 {
                self.digits[pos] += 1;
                return Some(pos);
            }
            self.digits[pos] = 0;
            if pos == 0 {
                return None;
            }
            pos -= 1;
        }
    }

    fn run(mut self) -> PartitionResult {
        let n = self.digits.len();
        let w = self.width;
        let mut out = PartitionResult::default();
        // positions >= changed differ from the last verified state
        let mut changed = 0usize;
        loop {
            let from = (changed + 1).saturating_sub(w);
            let next_changed = match self.first_bad_window(from) {
                None => {
                    let u = self.current();
                    let d = distance(self.target, &u);
                    out.visited += 1;
                    match out.best.as_mut() {
                        Some(b) if (d.value() - b.dist.value()).abs() <= TIE_TOL => {
                            b.optima_count += 1;
                            let t = self
                                .digits
                                .iter()
                                .filter(|&&x| x as usize == NUM_GATES - 1)
                                .count();
                            if t < b.t_count {
                                let count = b.optima_count;
                                *b = Best::new(GateSeq::from_digits(&self.digits), d);
                                b.optima_count = count;
                            }
                        }
                        Some(b) if d.value() < b.dist.value() => {
                            *b = Best::new(GateSeq::from_digits(&self.digits), d);
                        }
                        Some(_) => {}
                        None => out.best = Some(Best::new(GateSeq::from_digits(&self.digits), d)),
                    }
                    self.increment(n - 1)
                }
                Some((k, key)) => match self.db.successor_window(w, key) {
                    Some(succ) => {
                        let old: Vec<u8> = self.digits[k..k + w].to_vec();
                        unpack_key(succ, &mut self.digits[k..k + w]);
                        self.digits[k + w..].fill(0);
                        let first_diff =
                            (0..w).find(|&i| old[i] != self.digits[k + i]).unwrap_or(0);
                        Some(k + first_diff)
                    }
                    None => {
                        self.digits[k..].fill(0);
                        if k == 0 {
                            None
                        } else {
                            self.increment(k - 1)
                        }
                    }
                },
            };
            match next_changed {
                None | Some(0) => return out,
                Some(p) => {
                    changed = p;
                    self.valid = self.valid.min(p);
                }
            }
        }
    }
}

fn run_partitions<F>(options: SearchOptions, f: F) -> Vec<PartitionResult>
where
    F: Fn(u8) -> PartitionResult + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let go = || {
            (0..NUM_GATES as u8)
                .into_par_iter()
                .map(&f)
                .collect::<Vec<_>>()
        };
        match options.shards {
            1 => {}
            0 => return go(),
            k => {
                if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                    return pool.install(go);
                }
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = options;
    (0..NUM_GATES as u8).map(f).collect()
}

fn skipped_at(len: usize, visited: u64) -> f64 {
    match (NUM_GATES as u128).checked_pow(len as u32) {
        Some(total) => (total - visited as u128) as f64,
        None => (NUM_GATES as f64).powi(len as i32) - visited as f64,
    }
}

fn assemble(per_length: Vec<Best>, visited: u64, skipped: f64, started: Instant) -> SearchResult {
    let mut acc: Option<Best> = None;
    for b in &per_length {
        merge_opt(&mut acc, Some(b.clone()));
    }
    let best = acc.expect("length 0 is always present");
    SearchResult {
        best_seq: best.seq,
        best_dist: best.dist,
        t_count: best.t_count,
        optima_count: best.optima_count,
        sequences_visited: visited,
        sequences_skipped: skipped,
        wall_time: started.elapsed(),
        per_length,
    }
}

/// The sequence of at most `lmax` gates closest to `target`, using the
/// canonical database to skip redundant candidates.
pub fn search_optimal(target: &Unitary2, lmax: usize, db: &CanonDb) -> Result<SearchResult> {
    search_optimal_with(target, lmax, db, SearchOptions::default())
}

pub fn search_optimal_with(
    target: &Unitary2,
    lmax: usize,
    db: &CanonDb,
    options: SearchOptions,
) -> Result<SearchResult> {
    if db.lprime() < 1 {
        return Err(Error::InvalidParameter(
            "search needs a database with l' >= 1".into(),
        ));
    }
    if lmax > DESK_LMAX {
        warn!("lmax {lmax} exceeds {DESK_LMAX}; runtime grows exponentially with the budget");
    }
    let started = Instant::now();
    let mut per_length = vec![Best::new(
        GateSeq::empty(),
        distance(target, &Unitary2::IDENTITY),
    )];
    let mut visited = 1u64;
    let mut skipped = 0f64;
    for len in 1..=lmax {
        let parts = run_partitions(options, |first| Walk::new(db, target, len, first).run());
        let mut acc: Option<Best> = None;
        let mut len_visited = 0u64;
        for p in parts {
            len_visited += p.visited;
            merge_opt(&mut acc, p.best);
        }
        visited += len_visited;
        skipped += skipped_at(len, len_visited);
        per_length.push(acc.expect("every length has a canonical sequence"));
    }
    Ok(assemble(per_length, visited, skipped, started))
}

/// Compares every one of the `Σ 24^k` sequences with the target. Only for
/// validating [`search_optimal`].
pub fn search_exhaustive(target: &Unitary2, lmax: usize) -> Result<SearchResult> {
    if lmax > EXHAUSTIVE_CAP {
        return Err(Error::ExhaustiveCap {
            cap: EXHAUSTIVE_CAP,
            requested: lmax,
        });
    }
    let started = Instant::now();
    let mut per_length = vec![Best::new(
        GateSeq::empty(),
        distance(target, &Unitary2::IDENTITY),
    )];
    let mut visited = 1u64;
    for len in 1..=lmax {
        let mut acc: Option<Best> = None;
        for first in 0..NUM_GATES as u8 {
            let mut digits = vec![0u8; len];
            digits[0] = first;
            let mut prods = vec![Unitary2::IDENTITY; len + 1];
            let mut from = 0;
            let mut part: Option<Best> = None;
            loop {
                for i in from..len {
                    prods[i + 1] = prods[i] * *GateId::from_digit(digits[i]).matrix();
                }
                let cand = Best::new(GateSeq::from_digits(&digits), distance(target, &prods[len]));
                visited += 1;
                merge_opt(&mut part, Some(cand));
                // counter increment below the fixed first gate
                let mut pos = len - 1;
                loop {
                    if pos == 0 {
                        break;
                    }
                    if (digits[pos] as usize) < NUM_GATES - 1 {
                        digits[pos] += 1;
                        break;
                    }
                    digits[pos] = 0;
                    pos -= 1;
                }
                if pos == 0 {
                    break;
                }
                from = pos;
            }
            merge_opt(&mut acc, part);
        }
        per_length.push(acc.expect("non-empty"));
    }
    Ok(assemble(per_length, visited, 0.0, started))
}

/// Best distance for every budget `l = 0..=lmax`, from a single walk.
/// Values are non-increasing in `l`.
pub fn convergence_curve(
    target: &Unitary2,
    lmax: usize,
    db: &CanonDb,
) -> Result<Vec<ConvergenceRecord>> {
    convergence_curve_with(target, lmax, db, SearchOptions::default())
}

pub fn convergence_curve_with(
    target: &Unitary2,
    lmax: usize,
    db: &CanonDb,
    options: SearchOptions,
) -> Result<Vec<ConvergenceRecord>> {
    let res = search_optimal_with(target, lmax, db, options)?;
    Ok(curve_from(&res))
}

pub(crate) fn curve_from(res: &SearchResult) -> Vec<ConvergenceRecord> {
    let mut acc: Option<Best> = None;
    res.per_length
        .iter()
        .enumerate()
        .map(|(l, b)| {
            merge_opt(&mut acc, Some(b.clone()));
            let best = acc.as_ref().unwrap();
            ConvergenceRecord {
                target: String::new(),
                l,
                dist: best.dist,
                seq: Some(best.seq.clone()),
                t_count: best.t_count,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canondb::build_canon_db;
    use crate::gateset::{evaluate, gate_matrix, reduce_clifford_run};
    use std::f64::consts::PI;

    fn seq(s: &str) -> GateSeq {
        s.parse().unwrap()
    }

    #[test]
    fn exact_gates_are_found() {
        let db = build_canon_db(3).unwrap();
        let r = search_optimal(&gate_matrix(GateId::H), 1, &db).unwrap();
        assert_eq!(r.best_seq, seq("H"));
        assert_eq!(r.best_dist.value(), 0.0);
        let r = search_optimal(&Unitary2::phase(PI / 4.0), 1, &db).unwrap();
        assert_eq!(r.best_seq, seq("T"));
        assert!(r.best_dist.value() < 1e-15);
    }

    #[test]
    fn t_dagger_takes_two_gates() {
        let db = build_canon_db(3).unwrap();
        let tdg = Unitary2::phase(-PI / 4.0);
        let r1 = search_optimal(&tdg, 1, &db).unwrap();
        assert!(r1.best_dist.value() > 0.1);
        let r = search_optimal(&tdg, 2, &db).unwrap();
        assert_eq!(r.best_seq.len(), 2);
        assert_eq!(r.t_count, 1);
        assert!(r.best_dist.value() < 1e-12);
        let sdt = evaluate(&seq("Sd T"));
        assert!(distance(&sdt, &tdg).value() < 1e-12);
    }

    #[test]
    fn zero_budget_is_identity() {
        let db = build_canon_db(2).unwrap();
        let u = Unitary2::from_euler(0.3, 0.7, 1.1);
        let r = search_optimal(&u, 0, &db).unwrap();
        assert!(r.best_seq.is_empty());
        assert_eq!(r.best_dist, distance(&u, &Unitary2::IDENTITY));
        let e = search_exhaustive(&u, 0).unwrap();
        assert!(e.best_seq.is_empty());
        assert_eq!(e.best_dist, r.best_dist);
        let e = search_exhaustive(&Unitary2::IDENTITY, 3).unwrap();
        assert!(e.best_seq.is_empty());
        assert_eq!(e.best_dist.value(), 0.0);
    }

    #[test]
    fn exhaustive_cap() {
        assert!(matches!(
            search_exhaustive(&Unitary2::IDENTITY, 7),
            Err(Error::ExhaustiveCap { .. })
        ));
    }

    #[test]
    fn needs_nonempty_db() {
        let db = build_canon_db(0).unwrap();
        assert!(search_optimal(&Unitary2::IDENTITY, 2, &db).is_err());
    }

    #[test]
    fn agrees_with_exhaustive_small() {
        for lprime in 1..=3 {
            let db = build_canon_db(lprime).unwrap();
            for (i, &(a, b, t)) in [(0.3, 0.7, 1.1), (2.0, 5.0, 0.4), (4.0, 1.0, 3.0)]
                .iter()
                .enumerate()
            {
                let u = Unitary2::from_euler(a, b, t);
                let fast = search_optimal_with(&u, 3, &db, SearchOptions::serial()).unwrap();
                let slow = search_exhaustive(&u, 3).unwrap();
                assert_eq!(fast.best_dist, slow.best_dist, "target {i} l'={lprime}");
                assert_eq!(fast.best_seq, slow.best_seq, "target {i} l'={lprime}");
                assert!(fast.sequences_visited <= slow.sequences_visited);
            }
        }
    }

    #[test]
    fn result_is_achievable_and_alternating() {
        let db = build_canon_db(4).unwrap();
        let u = Unitary2::from_euler(1.3, 0.2, 2.2);
        let r = search_optimal(&u, 7, &db).unwrap();
        let d = distance(&evaluate(&r.best_seq), &u).value();
        assert!((d - r.best_dist.value()).abs() < 1e-14);
        assert_eq!(reduce_clifford_run(&r.best_seq).len(), r.best_seq.len());
        assert!(r.sequences_skipped > 0.0);
        assert!(r.skipped_fraction() > 0.9);
    }

    #[test]
    fn curve_is_monotone() {
        let db = build_canon_db(4).unwrap();
        let curve = convergence_curve(&Unitary2::phase(PI / 8.0), 8, &db).unwrap();
        assert_eq!(curve.len(), 9);
        for w in curve.windows(2) {
            assert!(w[1].dist <= w[0].dist);
        }
        let exact = convergence_curve(&Unitary2::phase(PI / 4.0), 3, &db).unwrap();
        assert!(exact[0].dist.value() > 0.0);
        assert!(exact[1..].iter().all(|r| r.dist.value() < 1e-15));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let db = build_canon_db(4).unwrap();
        let u = Unitary2::from_euler(0.9, 2.9, 1.7);
        let a = search_optimal_with(&u, 8, &db, SearchOptions::serial()).unwrap();
        let b = search_optimal_with(&u, 8, &db, SearchOptions { shards: 3 }).unwrap();
        assert_eq!(a.best_seq, b.best_seq);
        assert_eq!(a.best_dist, b.best_dist);
        assert_eq!(a.sequences_visited, b.sequences_visited);
    }
}
