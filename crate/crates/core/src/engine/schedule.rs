use rand::RngCore;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("a population needs at least two agents, got {0}")]
pub struct PopulationTooSmall(pub usize);

/// Draws an ordered pair of distinct agents, uniformly over all `n(n-1)`.
///
/// Consumes exactly one `u64` from `rng` per call. The pair index is taken by
/// a widening multiply, whose bias is below `n^2 / 2^64`.
pub fn schedule_pair<R: RngCore + ?Sized>(
    rng: &mut R,
    n: usize,
) -> Result<(usize, usize), PopulationTooSmall> {
    if n < 2 {
        return Err(PopulationTooSmall(n));
    }
    Ok(draw_pair(rng, n))
}

#[inline]
pub(crate) fn draw_pair<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> (usize, usize) {
    let m = (n as u128) * (n as u128 - 1);
    let idx = ((rng.next_u64() as u128 * m) >> 64) as u64;
    let span = (n - 1) as u64;
    let initiator = (idx / span) as usize;
    let mut responder = (idx % span) as usize;
    if responder >= initiator {
        responder += 1;
    }
    (initiator, responder)
}

/// Source of interaction pairs for a trial.
pub trait Scheduler {
    fn next_pair(&mut self, n: usize) -> (usize, usize);
}

/// The uniform random scheduler.
#[derive(Debug, Clone)]
pub struct UniformScheduler<R> {
    rng: R,
}

impl<R: RngCore> UniformScheduler<R> {
    pub fn new(rng: R) -> Self {
        UniformScheduler { rng }
    }

    pub fn into_inner(self) -> R {
        self.rng
    }
}

impl<R: RngCore> Scheduler for UniformScheduler<R> {
    #[inline]
    fn next_pair(&mut self, n: usize) -> (usize, usize) {
        draw_pair(&mut self.rng, n)
    }
}

/// Relabels the pairs of an inner scheduler through a permutation.
///
/// Running a permuted population under this scheduler reproduces the original
/// trace up to relabelling.
#[derive(Debug, Clone)]
pub struct PermutedScheduler<S> {
    inner: S,
    perm: Vec<usize>,
}

impl<S: Scheduler> PermutedScheduler<S> {
    /// `perm[i]` is the new index of agent `i`.
    pub fn new(inner: S, perm: Vec<usize>) -> Self {
        PermutedScheduler { inner, perm }
    }
}

impl<S: Scheduler> Scheduler for PermutedScheduler<S> {
    fn next_pair(&mut self, n: usize) -> (usize, usize) {
        let (i, r) = self.inner.next_pair(n);
        (self.perm[i], self.perm[r])
    }
}
