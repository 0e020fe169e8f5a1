/// 64-bit linear congruential generator.
///
/// The constants are fixed so that traces are reproducible bit for bit from
/// the seed alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub const MULTIPLIER: u64 = 6364136223846793005;
    pub const INCREMENT: u64 = 1442695040888963407;

    pub fn new(seed: u64) -> Self {
        Lcg64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MULTIPLIER).wrapping_add(Self::INCREMENT);
        self.state
    }

    /// Fair coin from the top bit (the low bits of an LCG have short periods).
    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Uniform integer in `0..bound`; `bound` must be positive.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "below(0)");
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }

    /// Derives an independent stream, e.g. one per repetition.
    pub fn fork(&mut self) -> Lcg64 {
        Lcg64::new(self.next_u64() ^ 0x9e37_79b9_7f4a_7c15)
    }
}
