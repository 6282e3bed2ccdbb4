//! Small numerical utilities shared across modules: deterministic reductions,
//! a counter-based random stream and a matrix-free conjugate-gradient solver.

/// Pairwise reduction over a fixed (lexicographic) element order.
///
/// Used for every quadrature in the crate so that results are bit-reproducible
/// across runs and platforms; it also keeps rounding error at O(log n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const CHUNK: usize = 8;
    match values.len() {
        0 => 0.0,
        n if n <= CHUNK => values.iter().sum(),
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Counter-based random stream: SplitMix64 keyed by (seed, stream name).
///
/// Draws depend only on the seed, the name and the draw index, never on global
/// state, so probe directions are reproducible no matter in which order the
/// checks run.
#[derive(Debug, Clone)]
pub struct RandomStream {
    state: u64,
}

impl RandomStream {
    pub fn new(seed: u64, name: &str) -> Self {
        // FNV-1a over the name keeps the key stable across platforms.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in name.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        RandomStream {
            state: seed ^ h,
        }
    }

    fn next_u64(&mut self) -> u64 {
        // SplitMix64 step.
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform draw in [-1, 1).
    pub fn next_symmetric(&mut self) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        2.0 * u - 1.0
    }

    /// Uniform draw in [0, 1).
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn fill_symmetric(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.next_symmetric();
        }
    }
}

/// Matrix-free conjugate gradient for symmetric positive semidefinite systems.
///
/// Solves A x = b up to `tol` on the residual norm relative to `b`. With a
/// consistent right-hand side (b in the range of A) the iteration converges in
/// the quotient by ker A, which is exactly what the gauge projections need.
pub fn conjugate_gradient<F>(apply: F, b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let mut rs_old = dot(&r, &r);
    for _ in 0..max_iter {
        if rs_old.sqrt() <= tol * b_norm {
            break;
        }
        let ap = apply(&p);
        let denom = dot(&p, &ap);
        if denom.abs() < f64::MIN_POSITIVE {
            break;
        }
        let alpha = rs_old / denom;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
    }
    let res = norm(&r) / b_norm;
    (x, res)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&prods)
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Observed convergence order from a sequence of errors under halving of the
/// control parameter: median of log2(e_k / e_{k+1}).
pub fn observed_order(errors: &[f64]) -> f64 {
    let mut orders: Vec<f64> = errors
        .windows(2)
        .filter(|w| w[0] > 0.0 && w[1] > 0.0)
        .map(|w| (w[0] / w[1]).log2())
        .collect();
    if orders.is_empty() {
        return f64::INFINITY;
    }
    orders.sort_by(|a, b| a.partial_cmp(b).unwrap());
    orders[orders.len() / 2]
}
