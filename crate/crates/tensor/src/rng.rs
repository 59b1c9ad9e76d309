use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Margin keeping uniform draws away from {0, 1} before taking logs.
pub const UNIFORM_MARGIN: f64 = 1e-12;

/// Seeded random stream. Identical seeds and call sequences give identical
/// draws on every platform.
#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream position in 32-bit words consumed.
    pub fn counter(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Derives an independent stream, advancing this one.
    pub fn fork(&mut self) -> RngState {
        RngState::new(self.inner.next_u64())
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform on `[ε, 1 − ε]` with ε = [`UNIFORM_MARGIN`].
    pub fn uniform_open(&mut self) -> f64 {
        self.uniform().clamp(UNIFORM_MARGIN, 1.0 - UNIFORM_MARGIN)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn gumbel(&mut self) -> f64 {
        gumbel_from_uniform(self.uniform_open())
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }

    /// `count` distinct indices from `0..n`, in draw order.
    pub fn choose_distinct(&mut self, n: usize, count: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.inner, n, count).into_vec()
    }
}

/// `-ln(-ln u)`.
pub fn gumbel_from_uniform(u: f64) -> f64 {
    -(-u.ln()).ln()
}

/// `n` i.i.d. standard Gumbel draws.
pub fn sample_gumbel(rng: &mut RngState, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gumbel()).collect()
}
