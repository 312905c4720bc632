use rand::{Rng, RngExt, SeedableRng};
use rand_pcg::Pcg64;

/// Number of photons in one coincidence window, drawn from `Poisson(lambda)`
/// by sequential search on the inverse CDF.
///
/// Exact for the small means used here (`lambda < 10`); larger means still
/// work but cost `O(lambda)` per draw.
pub fn sample_window<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u32 {
    debug_assert!(lambda > 0.0 && lambda.is_finite());
    let u: f64 = rng.random();
    let mut k = 0u32;
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    while u > cdf {
        k += 1;
        pmf *= lambda / k as f64;
        if pmf == 0.0 {
            // Remaining mass is below double precision.
            break;
        }
        cdf += pmf;
    }
    k
}

/// Routes `k` photons independently: each survives with probability
/// `efficiency` and then lands on D1 with probability `p_upper`, else on D2.
/// Returns which detectors saw at least one photon.
pub fn route_photons<R: Rng + ?Sized>(
    k: u32,
    p_upper: f64,
    efficiency: f64,
    rng: &mut R,
) -> (bool, bool) {
    let (mut d1, mut d2) = (false, false);
    for _ in 0..k {
        if efficiency < 1.0 && rng.random::<f64>() >= efficiency {
            continue;
        }
        if rng.random::<f64>() < p_upper {
            d1 = true;
        } else {
            d2 = true;
        }
        if d1 && d2 {
            break;
        }
    }
    (d1, d2)
}

/// Seed for the simulator. Every stream derived from it is reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RngSeed(pub u64);

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// PCG-64 (period 2^128) for sub-stream `stream` of `seed`.
///
/// Stream 0 drives the sequential noise path; stream `i + 1` drives bin `i`.
/// Both the state and the increment depend on the stream so neighbouring
/// streams do not start from related states.
pub fn stream_rng(seed: RngSeed, stream: u64) -> Pcg64 {
    let hi = splitmix64(seed.0);
    let lo = splitmix64(seed.0 ^ splitmix64(stream.wrapping_add(0xA076_1D64_78BD_642F)));
    let state = ((hi as u128) << 64) | lo as u128;
    let increment = ((splitmix64(stream) as u128) << 64) | stream as u128;
    Pcg64::new(state, increment)
}

/// A plain seeded generator, for callers that want one stream.
pub fn seeded_rng(seed: RngSeed) -> Pcg64 {
    Pcg64::seed_from_u64(seed.0)
}
