//! Counting and ranking of chirp-index sets under a cyclic minimum gap, and
//! the bit ↔ (indices, PSK symbols) mapping built on top of it.
//!
//! An index set `0 ≤ i_0 < … < i_{L−1} < M` has gaps
//! `s_q = i_q − i_{q−1} − 1` for `1 ≤ q < L` and the wrap-around gap
//! `s_L = M − 1 − i_{L−1} + i_0`; all gaps must be at least `Δ`.
//! Ranks are 1-based.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

/// `binom(n, k)` in arbitrary precision; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of gap vectors `(s_1..s_L)` with every part `≥ Δ` summing to `z`.
pub fn compositions_count(l: usize, delta: usize, z: usize) -> BigUint {
    if l == 0 {
        return BigUint::from(u32::from(z == 0));
    }
    if z < l * delta {
        return BigUint::from(0u32);
    }
    binomial((z - l * delta + l - 1) as u64, (l - 1) as u64)
}

/// Number of admissible index sets, `(M/L)·binom(M − LΔ − 1, L − 1)`.
pub fn index_count(l: usize, delta: usize, m: usize) -> BigUint {
    if l == 0 || m < l * (delta + 1) {
        return BigUint::from(0u32);
    }
    binomial((m - l * delta - 1) as u64, (l - 1) as u64) * m / l
}

/// `⌊log2 x⌋` for `x ≥ 1`, `None` for zero.
pub fn floor_log2(x: &BigUint) -> Option<u64> {
    (x.bits() > 0).then(|| x.bits() - 1)
}

/// Largest `Δ` whose index count keeps the same number of whole bits as the
/// unconstrained `binom(M, L)`.
pub fn delta_no_loss(m: usize, l: usize) -> Result<usize> {
    if l < 1 || m < 2 * l {
        return Err(Error::InvalidArgument(format!("need L >= 1 and M >= 2L, got M={m}, L={l}")));
    }
    let target = floor_log2(&binomial(m as u64, l as u64));
    let mut delta = 0;
    while floor_log2(&index_count(l, delta + 1, m)) == target {
        delta += 1;
    }
    Ok(delta)
}

/// Whole-bit capacity of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitCapacity {
    /// Bits carried by the index set.
    pub p1: usize,
    /// Bits carried by the PSK symbols.
    pub p2: usize,
    pub p: usize,
}

pub fn bit_capacity(m: usize, l: usize, h: usize, delta: usize) -> Result<BitCapacity> {
    if !h.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("PSK order {h} is not a power of two")));
    }
    let p1 = floor_log2(&index_count(l, delta, m))
        .ok_or_else(|| Error::InvalidConfig(format!("no index set with M={m}, L={l}, delta={delta}")))?
        as usize;
    let p2 = l * h.trailing_zeros() as usize;
    Ok(BitCapacity { p1, p2, p: p1 + p2 })
}

fn check_rank(k: &BigUint, count: &BigUint) -> Result<()> {
    if k.bits() == 0 || k > count {
        return Err(Error::RankOutOfRange { rank: k.to_string(), count: count.to_string() });
    }
    Ok(())
}

/// Gap vector of rank `k` among the compositions of `z` into `l` parts
/// `≥ Δ`. The last part varies slowest.
pub fn rank_to_gaps(k: &BigUint, z: usize, l: usize, delta: usize) -> Result<Vec<usize>> {
    if l == 0 {
        return Err(Error::InvalidArgument("need at least one gap".into()));
    }
    check_rank(k, &compositions_count(l, delta, z))?;
    let mut gaps = vec![0; l];
    let mut k = k.clone();
    let mut z = z;
    for parts in (2..=l).rev() {
        let mut x = delta;
        loop {
            let c = compositions_count(parts - 1, delta, z - x);
            if c >= k {
                break;
            }
            k -= c;
            x += 1;
        }
        gaps[parts - 1] = x;
        z -= x;
    }
    // One part left: the composition is forced and the residual rank is 1.
    gaps[0] = z;
    Ok(gaps)
}

/// Inverse of [`rank_to_gaps`].
pub fn gaps_to_rank(s: &[usize], z: usize, l: usize, delta: usize) -> Result<BigUint> {
    if s.len() != l || l == 0 {
        return Err(Error::LengthMismatch { expected: l, actual: s.len() });
    }
    if s.iter().sum::<usize>() != z {
        return Err(Error::InvalidArgument(format!("gaps {s:?} do not sum to {z}")));
    }
    if let Some(q) = s.iter().position(|&v| v < delta) {
        return Err(Error::SeparationViolated { gap: q + 1, value: s[q] as i64, delta });
    }
    let mut rank = BigUint::from(1u32);
    let mut z = z;
    for parts in (2..=l).rev() {
        for x in delta..s[parts - 1] {
            rank += compositions_count(parts - 1, delta, z - x);
        }
        z -= s[parts - 1];
    }
    Ok(rank)
}

/// Gap-sum budget when the smallest index is `i0`: for `i0 ≥ Δ` the last
/// gap is counted relative to its floor `i0`. `None` when no set can start
/// at `i0`.
fn budget(m: usize, l: usize, delta: usize, i0: usize) -> Option<usize> {
    if i0 < delta {
        Some(m - l)
    } else {
        (m - l + delta).checked_sub(i0)
    }
}

/// Ranks and unranks index sets for one `(M, L, Δ)`, caching the
/// per-leading-index counts.
#[derive(Debug, Clone)]
pub struct IndexCodec {
    m: usize,
    l: usize,
    delta: usize,
    /// `prefix[a]` = number of sets whose smallest index is `< a`.
    prefix: Vec<BigUint>,
}

impl IndexCodec {
    pub fn new(m: usize, l: usize, delta: usize) -> Result<Self> {
        if l == 0 || l > m {
            return Err(Error::InvalidConfig(format!("need 1 <= L <= M, got M={m}, L={l}")));
        }
        if index_count(l, delta, m).bits() == 0 {
            return Err(Error::InvalidConfig(format!(
                "no index set satisfies M={m}, L={l}, delta={delta}"
            )));
        }
        let mut prefix = Vec::with_capacity(m + 1);
        let mut acc = BigUint::from(0u32);
        prefix.push(acc.clone());
        for a in 0..m {
            if let Some(z) = budget(m, l, delta, a) {
                acc += compositions_count(l, delta, z);
            }
            prefix.push(acc.clone());
        }
        debug_assert_eq!(acc, index_count(l, delta, m));
        Ok(Self { m, l, delta, prefix })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn count(&self) -> &BigUint {
        &self.prefix[self.m]
    }

    /// The `n`th admissible index set.
    pub fn unrank(&self, n: &BigUint) -> Result<Vec<usize>> {
        check_rank(n, self.count())?;
        let i0 = self.prefix.partition_point(|a| a < n) - 1;
        let k = n - &self.prefix[i0];
        let z = budget(self.m, self.l, self.delta, i0).expect("nonempty prefix bucket");
        let gaps = rank_to_gaps(&k, z, self.l, self.delta)?;
        let mut idx = Vec::with_capacity(self.l);
        idx.push(i0);
        for s in &gaps[..self.l - 1] {
            let prev = *idx.last().unwrap();
            idx.push(prev + 1 + s);
        }
        Ok(idx)
    }

    /// Checks the ordering and gap rules and returns the cyclic gaps
    /// `(s_1, …, s_L)`.
    pub fn gaps(&self, idx: &[usize]) -> Result<Vec<usize>> {
        cyclic_gaps(idx, self.m, self.l, self.delta)
    }

    /// Rank of an admissible index set.
    pub fn rank(&self, idx: &[usize]) -> Result<BigUint> {
        let mut gaps = self.gaps(idx)?;
        let i0 = idx[0];
        let z = budget(self.m, self.l, self.delta, i0).expect("validated set");
        if i0 >= self.delta {
            gaps[self.l - 1] -= i0 - self.delta;
        }
        Ok(&self.prefix[i0] + gaps_to_rank(&gaps, z, self.l, self.delta)?)
    }
}

/// Validates an index set and returns its cyclic gaps.
pub fn cyclic_gaps(idx: &[usize], m: usize, l: usize, delta: usize) -> Result<Vec<usize>> {
    if idx.len() != l {
        return Err(Error::LengthMismatch { expected: l, actual: idx.len() });
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= m) {
        return Err(Error::InvalidArgument(format!("index {bad} outside 0..{m}")));
    }
    let mut gaps = Vec::with_capacity(l);
    for q in 1..l {
        let g = idx[q] as i64 - idx[q - 1] as i64 - 1;
        if g < delta as i64 {
            return Err(Error::SeparationViolated { gap: q, value: g, delta });
        }
        gaps.push(g as usize);
    }
    let last = m as i64 - 1 - idx[l - 1] as i64 + idx[0] as i64;
    if last < delta as i64 {
        return Err(Error::SeparationViolated { gap: l, value: last, delta });
    }
    gaps.push(last as usize);
    Ok(gaps)
}

pub fn rank_to_indices(n: &BigUint, m: usize, l: usize, delta: usize) -> Result<Vec<usize>> {
    IndexCodec::new(m, l, delta)?.unrank(n)
}

pub fn indices_to_rank(idx: &[usize], m: usize, l: usize, delta: usize) -> Result<BigUint> {
    IndexCodec::new(m, l, delta)?.rank(idx)
}

/// Chirp indices, PSK integers and the constraint they were drawn under.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexWord {
    pub indices: Vec<usize>,
    pub symbols: Vec<usize>,
    pub delta: usize,
    pub m: usize,
    pub h: usize,
}

/// Maps information bits to index words and back.
///
/// The first `p1` bits (MSB first) give `n − 1`; the remaining bits are
/// consumed `log2 H` at a time, MSB first, as the natural-binary PSK
/// integers of the active chirps in ascending index order.
#[derive(Debug, Clone)]
pub struct WordCodec {
    codec: IndexCodec,
    h: usize,
    capacity: BitCapacity,
}

impl WordCodec {
    pub fn new(m: usize, l: usize, h: usize, delta: usize) -> Result<Self> {
        let capacity = bit_capacity(m, l, h, delta)?;
        Ok(Self { codec: IndexCodec::new(m, l, delta)?, h, capacity })
    }

    pub fn capacity(&self) -> BitCapacity {
        self.capacity
    }

    pub fn index_codec(&self) -> &IndexCodec {
        &self.codec
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn bits_to_word(&self, bits: &[bool]) -> Result<IndexWord> {
        if bits.len() != self.capacity.p {
            return Err(Error::LengthMismatch { expected: self.capacity.p, actual: bits.len() });
        }
        let (head, tail) = bits.split_at(self.capacity.p1);
        let mut n = BigUint::from(0u32);
        for &b in head {
            n <<= 1u32;
            if b {
                n += 1u32;
            }
        }
        n += 1u32;
        let indices = self.codec.unrank(&n)?;
        let width = self.h.trailing_zeros() as usize;
        let symbols = if width == 0 {
            vec![0; self.codec.l]
        } else {
            tail.chunks(width)
                .map(|c| c.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize))
                .collect()
        };
        Ok(IndexWord { indices, symbols, delta: self.codec.delta, m: self.codec.m, h: self.h })
    }

    /// Inverse of [`WordCodec::bits_to_word`]. Index sets ranked beyond
    /// `2^p1` carry no bit pattern and are rejected.
    pub fn word_to_bits(&self, word: &IndexWord) -> Result<Vec<bool>> {
        if word.symbols.len() != self.codec.l {
            return Err(Error::LengthMismatch { expected: self.codec.l, actual: word.symbols.len() });
        }
        if let Some(&z) = word.symbols.iter().find(|&&z| z >= self.h) {
            return Err(Error::InvalidArgument(format!("PSK integer {z} >= H = {}", self.h)));
        }
        let v = self.codec.rank(&word.indices)? - 1u32;
        if v.bits() as usize > self.capacity.p1 {
            return Err(Error::RankOutOfRange {
                rank: (v + 1u32).to_string(),
                count: (BigUint::from(1u32) << self.capacity.p1).to_string(),
            });
        }
        let mut bits = Vec::with_capacity(self.capacity.p);
        for i in (0..self.capacity.p1).rev() {
            bits.push(v.bit(i as u64));
        }
        let width = self.h.trailing_zeros() as usize;
        for &z in &word.symbols {
            for i in (0..width).rev() {
                bits.push((z >> i) & 1 == 1);
            }
        }
        Ok(bits)
    }
}
