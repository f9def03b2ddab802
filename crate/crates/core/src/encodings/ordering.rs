use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qsim::MAX_QUBITS;

/// How image pixels are laid out over state amplitudes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrderingKind {
    /// Row-major: the lowest gate mixes 4-pixel horizontal runs.
    Flatten,
    /// Z-order: every 2×2 pixel block occupies 4 consecutive amplitudes.
    Squared,
    /// 4×4 tiles with the two low bits along x and the next two along y.
    VHLines,
    /// Seeded uniform permutation.
    Random,
}

impl OrderingKind {
    pub const ALL: [OrderingKind; 4] = [
        OrderingKind::Flatten,
        OrderingKind::Squared,
        OrderingKind::VHLines,
        OrderingKind::Random,
    ];
}

impl fmt::Display for OrderingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderingKind::Flatten => "flatten",
            OrderingKind::Squared => "squared",
            OrderingKind::VHLines => "vhlines",
            OrderingKind::Random => "random",
        })
    }
}

impl FromStr for OrderingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flatten" => Ok(OrderingKind::Flatten),
            "squared" => Ok(OrderingKind::Squared),
            "vhlines" | "vh_lines" => Ok(OrderingKind::VHLines),
            "random" => Ok(OrderingKind::Random),
            other => Err(Error::config(format!("unknown ordering {other:?}"))),
        }
    }
}

/// Bijection from flattened pixel index (channel-major, then row-major) to
/// amplitude index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ordering {
    permutation: Vec<usize>,
}

impl Ordering {
    pub fn new(permutation: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; permutation.len()];
        for &p in &permutation {
            if p >= seen.len() || seen[p] {
                return Err(Error::shape(format!(
                    "ordering is not a bijection on 0..{}",
                    seen.len()
                )));
            }
            seen[p] = true;
        }
        Ok(Ordering { permutation })
    }

    pub fn identity(len: usize) -> Self {
        Ordering {
            permutation: (0..len).collect(),
        }
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.permutation.len()];
        for (i, &p) in self.permutation.iter().enumerate() {
            inv[p] = i;
        }
        inv
    }
}

/// Interleaves the bits of `y` and `x` with `x` in the lowest position.
fn morton(y: usize, x: usize) -> u64 {
    let mut code = 0u64;
    for b in 0..32 {
        code |= (((x >> b) & 1) as u64) << (2 * b);
        code |= (((y >> b) & 1) as u64) << (2 * b + 1);
    }
    code
}

/// Ranks pixels of an `h × w` plane by a sort key; ties are impossible for
/// the keys used here.
fn rank_by_key<K: Ord>(h: usize, w: usize, key: impl Fn(usize, usize) -> K) -> Vec<usize> {
    let mut pixels: Vec<usize> = (0..h * w).collect();
    pixels.sort_by_key(|&p| key(p / w, p % w));
    let mut spatial = vec![0; h * w];
    for (rank, p) in pixels.into_iter().enumerate() {
        spatial[p] = rank;
    }
    spatial
}

/// Builds the amplitude ordering for an `(H, W, C)` image. Channels are laid
/// out as contiguous planes and each plane uses the same spatial permutation.
pub fn build_ordering(
    kind: OrderingKind,
    image_shape: (usize, usize, usize),
    seed: Option<u64>,
) -> Result<Ordering> {
    let (h, w, c) = image_shape;
    let plane = h * w;
    let total = plane * c;
    if total == 0 {
        return Err(Error::shape("image shape has a zero dimension"));
    }
    if total > 1usize << MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "{total} pixels exceed the {MAX_QUBITS}-qubit amplitude budget"
        )));
    }
    let spatial: Vec<usize> = match kind {
        OrderingKind::Flatten => (0..plane).collect(),
        OrderingKind::Squared => rank_by_key(h, w, morton),
        OrderingKind::VHLines => rank_by_key(h, w, |y, x| (y / 4, x / 4, y % 4, x % 4)),
        OrderingKind::Random => {
            let seed = seed.ok_or_else(|| Error::config("random ordering needs a seed"))?;
            let mut perm: Vec<usize> = (0..plane).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            perm
        }
    };
    let permutation = (0..c)
        .flat_map(|ch| spatial.iter().map(move |&s| ch * plane + s))
        .collect();
    Ordering::new(permutation)
}

/// The 4-index groups mixed by a two-qubit gate at position `p`, i.e. on the
/// qubits owning amplitude bits `p` and `p + 1`. Groups are listed by their
/// smallest index and each group is `(l, l + 2^p, l + 2·2^p, l + 3·2^p)`.
pub fn mixing_groups(p: usize, n_total_qubits: usize) -> Result<Vec<[usize; 4]>> {
    if n_total_qubits < 2 || p + 2 > n_total_qubits {
        return Err(Error::shape(format!(
            "gate position {p} invalid for {n_total_qubits} qubits"
        )));
    }
    if n_total_qubits > MAX_QUBITS {
        return Err(Error::Capacity(format!("{n_total_qubits} qubits")));
    }
    let step = 1usize << p;
    let pair_mask = 3usize << p;
    Ok((0..1usize << n_total_qubits)
        .filter(|l| l & pair_mask == 0)
        .map(|l| [l, l + step, l + 2 * step, l + 3 * step])
        .collect())
}

/// Qubit pair `(first, second)` of a gate at position `p` on `n` qubits.
pub fn position_qubits(p: usize, n: usize) -> (usize, usize) {
    (n - 2 - p, n - 1 - p)
}
