use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// Arithmetic and storage tally of one estimator invocation.
///
/// Memory follows a dataflow model: each pipeline stage owns the buffers it
/// materializes for the whole invocation, so `peak_memory_words` is the sum
/// of every buffer allocated through [`OpCounter::alloc`]. Counts are in
/// complex words; real-valued buffers are charged one word per element.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    pub complex_mults: u64,
    pub complex_adds: u64,
    pub divisions: u64,
    pub sqrt_ops: u64,
    pub peak_memory_words: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn mults(&mut self, n: usize) {
        self.complex_mults += n as u64;
    }

    #[inline]
    pub fn adds(&mut self, n: usize) {
        self.complex_adds += n as u64;
    }

    /// Multiply-accumulate: `n` products summed into one result.
    #[inline]
    pub fn macs(&mut self, n: usize) {
        self.complex_mults += n as u64;
        self.complex_adds += n.saturating_sub(1) as u64;
    }

    #[inline]
    pub fn divs(&mut self, n: usize) {
        self.divisions += n as u64;
    }

    #[inline]
    pub fn sqrts(&mut self, n: usize) {
        self.sqrt_ops += n as u64;
    }

    #[inline]
    pub fn alloc(&mut self, words: usize) {
        self.peak_memory_words += words as u64;
    }
}

impl AddAssign for OpCounter {
    fn add_assign(&mut self, rhs: Self) {
        self.complex_mults += rhs.complex_mults;
        self.complex_adds += rhs.complex_adds;
        self.divisions += rhs.divisions;
        self.sqrt_ops += rhs.sqrt_ops;
        self.peak_memory_words += rhs.peak_memory_words;
    }
}

impl Add for OpCounter {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}
