//! The K3 lattice `U^3 + E8(-1)^2`, element counts in `(Z_o)^k`, and the
//! quadratic Gauss sums `sum_g zeta_o^(-s g.g/2)` over `H^2(S, mu_o)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::cyclotomic::CyclotomicNumber;
use crate::error::{Error, Result};
use crate::ntheory::{big_pow, divisors, exact_order_elements, gcd, jacobi, mobius, mod_inverse};
use crate::par::Execution;

/// Orthogonal summands of the K3 lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    /// The hyperbolic plane `[[0, 1], [1, 0]]`.
    U,
    /// The negative-definite `E8` lattice.
    E8Neg,
}

const E8_EDGES: [(usize, usize); 7] = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (4, 7)];

impl Block {
    pub fn rank(self) -> usize {
        match self {
            Block::U => 2,
            Block::E8Neg => 8,
        }
    }

    pub fn gram(self) -> Vec<Vec<i64>> {
        match self {
            Block::U => vec![vec![0, 1], vec![1, 0]],
            Block::E8Neg => {
                let mut g = vec![vec![0i64; 8]; 8];
                for (i, row) in g.iter_mut().enumerate() {
                    row[i] = -2;
                }
                for (a, b) in E8_EDGES {
                    g[a][b] = 1;
                    g[b][a] = 1;
                }
                g
            }
        }
    }
}

/// An orthogonal sum of blocks with the induced even bilinear form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct K3Lattice {
    pub blocks: Vec<Block>,
}

impl Default for K3Lattice {
    fn default() -> Self {
        Self::k3()
    }
}

impl K3Lattice {
    /// `U^3 + E8(-1)^2`, rank 22.
    pub fn k3() -> Self {
        use Block::*;
        Self {
            blocks: vec![U, U, U, E8Neg, E8Neg],
        }
    }

    /// `U + E8(-1)`, rank 10; small enough to enumerate for `o = 3`.
    pub fn reduced() -> Self {
        Self {
            blocks: vec![Block::U, Block::E8Neg],
        }
    }

    pub fn rank(&self) -> usize {
        self.blocks.iter().map(|b| b.rank()).sum()
    }

    /// Full Gram matrix, block diagonal.
    pub fn gram(&self) -> Vec<Vec<i64>> {
        let n = self.rank();
        let mut g = vec![vec![0i64; n]; n];
        let mut off = 0;
        for b in &self.blocks {
            let bg = b.gram();
            for (i, row) in bg.iter().enumerate() {
                g[off + i][off..off + row.len()].copy_from_slice(row);
            }
            off += b.rank();
        }
        g
    }

    pub fn pair(&self, g: &[i64], h: &[i64]) -> i64 {
        let gram = self.gram();
        let mut total = 0;
        for (i, row) in gram.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                total += g[i] * a * h[j];
            }
        }
        total
    }
}

/// Determinant by fraction-free elimination.
pub fn determinant(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    (sign * a[n - 1][n - 1]) as i64
}

/// `#{g in (Z_n)^k : order(g) = o}`.
pub fn exact_order_count(n: u64, k: u32, o: u64) -> Result<BigInt> {
    if o == 0 || n % o != 0 {
        return Err(Error::OrderDoesNotDivide { order: o, modulus: n });
    }
    Ok(exact_order_elements(o, k))
}

/// The sign `epsilon(s)`: `(s/2 | r)` for even `s`, `((s + r)/2 | r)` for odd `s`.
/// A Jacobi symbol when `r` is composite.
pub fn epsilon(s: i64, r: u64) -> Result<i32> {
    if r % 2 == 0 {
        return Err(Error::EvenModulus(r));
    }
    let half = if s.rem_euclid(2) == 0 { s / 2 } else { (s + r as i64) / 2 };
    Ok(jacobi(half, r))
}

/// `g.g / 2` for an integer vector on the lattice.
pub fn half_norm(lattice: &K3Lattice, g: &[i64]) -> i64 {
    lattice.pair(g, g) / 2
}

/// `zeta_o^(-s g.g/2)`, which equals `e^(pi i (o-1)/o s g.g)` as the lattice is even.
pub fn discriminant_phase(lattice: &K3Lattice, g: &[i64], o: u64, s: i64) -> CyclotomicNumber {
    let q = half_norm(lattice, g).rem_euclid(o as i64);
    CyclotomicNumber::root_of_unity(o, -(s * q))
}

/// Histograms of `g.g/2 mod o` over `(Z_o)^rank`: all vectors, and those of exact order `o`.
pub fn norm_histogram(gram: &[Vec<i64>], o: u64, exec: Execution) -> (Vec<u64>, Vec<u64>) {
    let n = gram.len();
    let om = o as i64;
    let mut prefix = 0;
    let mut tasks = 1u64;
    while prefix < n && tasks < 256 {
        prefix += 1;
        tasks *= o;
    }
    let parts = exec.map_range(tasks, |task| {
        let mut all = vec![0u64; o as usize];
        let mut exact = vec![0u64; o as usize];
        let mut g = vec![0i64; n];
        let mut t = task;
        for c in g.iter_mut().take(prefix) {
            *c = (t % o) as i64;
            t /= o;
        }
        // gg[i] = (G g)_i, q = g.G.g / 2, both exact on the lift in [0, o).
        let mut gg: Vec<i64> = (0..n).map(|i| (0..n).map(|j| gram[i][j] * g[j]).sum()).collect();
        let mut q: i64 = (0..n).map(|i| g[i] * gg[i]).sum::<i64>() / 2;
        let prefix_gcd = g[..prefix].iter().fold(om, |acc, &c| gcd(acc, c));
        loop {
            let bucket = q.rem_euclid(om) as usize;
            all[bucket] += 1;
            if g[prefix..].iter().fold(prefix_gcd, |acc, &c| gcd(acc, c)) == 1 {
                exact[bucket] += 1;
            }
            // Odometer over the free coordinates.
            let mut i = prefix;
            loop {
                if i == n {
                    return (all, exact);
                }
                let delta = if g[i] == om - 1 { -(om - 1) } else { 1 };
                q += delta * gg[i] + delta * delta * gram[i][i] / 2;
                for (k, v) in gg.iter_mut().enumerate() {
                    *v += delta * gram[k][i];
                }
                g[i] += delta;
                if delta == 1 {
                    break;
                }
                i += 1;
            }
        }
    });
    let mut all = vec![0u64; o as usize];
    let mut exact = vec![0u64; o as usize];
    for (a, e) in parts {
        for k in 0..o as usize {
            all[k] += a[k];
            exact[k] += e[k];
        }
    }
    (all, exact)
}

fn phase_sum(hist: &[u64], o: u64, t: i64) -> CyclotomicNumber {
    let mut poly = vec![BigRational::zero(); o as usize];
    for (v, &count) in hist.iter().enumerate() {
        if count > 0 {
            let k = (-(t * v as i64)).rem_euclid(o as i64) as usize;
            poly[k] += BigRational::from_integer(count.into());
        }
    }
    CyclotomicNumber::from_polynomial(o, poly)
}

/// Direct enumeration of the full and exact-order sums over `(Z_o)^rank`.
pub fn brute_force_gauss_sum(
    lattice: &K3Lattice,
    o: u64,
    s: i64,
    exec: Execution,
) -> (CyclotomicNumber, CyclotomicNumber) {
    let (all, exact) = norm_histogram(&lattice.gram(), o, exec);
    (phase_sum(&all, o, s), phase_sum(&exact, o, s))
}

fn block_histogram(block: Block, d: u64) -> Arc<Vec<u64>> {
    type Cache = RwLock<HashMap<(Block, u64), Arc<Vec<u64>>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(h) = cache.read().unwrap().get(&(block, d)) {
        return h.clone();
    }
    let h = Arc::new(norm_histogram(&block.gram(), d, Execution::default()).0);
    cache.write().unwrap().insert((block, d), h.clone());
    h
}

/// Splits `d` into a prime power and a coprime cofactor, if it is not a prime power.
fn coprime_split(d: u64) -> Option<(u64, u64)> {
    let p = crate::ntheory::prime_factors(d).into_iter().next()?;
    let mut pp = 1;
    while d % (pp * p) == 0 {
        pp *= p;
    }
    (pp != d).then_some((pp, d / pp))
}

/// `sum_{x in (Z_d)^rank} zeta_d^(-t x.x/2)` for a single block.
///
/// Composite `d` is split by the Chinese remainder theorem, so enumeration
/// only ever happens at prime powers.
pub fn block_sum(block: Block, d: u64, t: i64) -> CyclotomicNumber {
    if d == 1 {
        return CyclotomicNumber::one();
    }
    if let Some((d1, d2)) = coprime_split(d) {
        // 1/d = u1/d1 + u2/d2 with u1 = d2^-1 mod d1 and u2 = d1^-1 mod d2.
        let u1 = mod_inverse(d2 as i64, d1 as i64).expect("coprime");
        let u2 = mod_inverse(d1 as i64, d2 as i64).expect("coprime");
        return &block_sum(block, d1, t * u1) * &block_sum(block, d2, t * u2);
    }
    phase_sum(&block_histogram(block, d), d, t.rem_euclid(d as i64))
}

/// `S_{<=d}`: the sum over the elements of `(Z_o)^rank` killed by `d`.
fn subgroup_sum(lattice: &K3Lattice, o: u64, d: u64, s: i64) -> CyclotomicNumber {
    let t = (s * (o / d) as i64).rem_euclid(d as i64);
    lattice
        .blocks
        .iter()
        .fold(CyclotomicNumber::one(), |acc, &b| &acc * &block_sum(b, d, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderFilter {
    All,
    Exact,
}

/// `sum_g zeta_o^(-s g.g/2)` over `(Z_o)^22`, or only over elements of order `o`.
pub fn gauss_sum(o: u64, s: i64, filter: OrderFilter) -> CyclotomicNumber {
    gauss_sum_on(&K3Lattice::k3(), o, s, filter)
}

pub fn gauss_sum_on(lattice: &K3Lattice, o: u64, s: i64, filter: OrderFilter) -> CyclotomicNumber {
    assert!(o >= 1, "order must be positive");
    match filter {
        OrderFilter::All => subgroup_sum(lattice, o, o, s),
        OrderFilter::Exact => divisors(o).into_iter().fold(CyclotomicNumber::zero(), |acc, d| {
            match mobius(o / d) {
                0 => acc,
                m => &acc + &subgroup_sum(lattice, o, d, s).scale(&BigRational::from_integer(m.into())),
            }
        }),
    }
}

/// Where the exact-order Gauss sums come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderMode {
    /// `o^11` for nonzero twist and the element count for zero twist.
    Asserted,
    /// The honest lattice sum.
    Lattice,
}

/// Cached exact-order Gauss sums `W(o, s)`.
#[derive(Debug)]
pub struct GaussSumProvider {
    mode: ProviderMode,
    cache: Mutex<HashMap<(u64, i64), CyclotomicNumber>>,
}

impl GaussSumProvider {
    pub fn new(mode: ProviderMode) -> Self {
        Self {
            mode,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn mode(&self) -> ProviderMode {
        self.mode
    }

    pub fn exact_order_sum(&self, o: u64, s: i64) -> CyclotomicNumber {
        let key = (o, s.rem_euclid(o as i64));
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return v.clone();
        }
        let value = match self.mode {
            ProviderMode::Asserted if key.1 == 0 => CyclotomicNumber::from_integer(exact_order_elements(o, 22)),
            ProviderMode::Asserted => CyclotomicNumber::from_integer(big_pow(o, 11)),
            ProviderMode::Lattice => gauss_sum(o, key.1, OrderFilter::Exact),
        };
        self.cache.lock().unwrap().insert(key, value.clone());
        value
    }
}
