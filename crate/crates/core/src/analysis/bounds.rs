use crate::error::{Error, Result};
use crate::scalar::Knowledge;

use super::paths::{DoubleInteraction, Path};

/// `k` interactions between two sites with no deaths.
pub fn pair_recursion<S: Knowledge>(x0: S, y0: S, mu: S, k: usize) -> (S, S) {
    let one = S::one();
    (0..k).fold((x0, y0), |(x, y), _| (x + mu * y * (one - x), y + mu * x * (one - y)))
}

/// `1 − (1 − μ/2)^n`, the guaranteed knowledge of the learner after `n`
/// interactions with a teacher holding at least one half.
pub fn lemma1_lower_bound<S: Knowledge>(mu: S, n: u32) -> S {
    if mu <= S::zero() || n == 0 {
        return S::zero();
    }
    let half = S::of(0.5);
    -(S::of(n as f64) * (-(mu * half)).ln_1p()).exp_m1()
}

/// Smallest `n` with `(1 − μ/2)^n ≤ 1/2`.
pub fn min_interactions<S: Knowledge>(mu: S) -> Result<u32> {
    let mu = mu.as_f64();
    if mu <= 0.0 {
        return Err(Error::NoFiniteInteractions);
    }
    if mu > 1.0 || mu.is_nan() {
        return Err(Error::InvalidParameter(format!("mu = {mu} outside (0, 1]")));
    }
    let base = 1.0 - mu / 2.0;
    let holds = |n: u32| base.powi(n as i32) <= 0.5;
    let mut n = ((0.5f64).ln() / base.ln()).ceil().max(1.0) as u32;
    // the logarithm ratio can land one off in either direction
    while n > 1 && holds(n - 1) {
        n -= 1;
    }
    while !holds(n) {
        n += 1;
    }
    Ok(n)
}

/// Largest `T` with `e^{−(2d+1)T} ≥ 1 − ε/2`.
pub fn invade_time(epsilon: f64, dim: usize) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 2.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} outside (0, 2)")));
    }
    Ok(-(-epsilon / 2.0).ln_1p() / (2 * dim + 1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailSide {
    /// Bounds `P(Poisson(m) ≤ n)`, needs `n ≤ m`.
    Lower,
    /// Bounds `P(Poisson(m) ≥ n)`, needs `n ≥ m`.
    Upper,
}

/// Chernoff bound `(e·m/n)^n · e^{−m}` on a Poisson tail.
pub fn poisson_tail_bound(mean: f64, n: u64, side: TailSide) -> Result<f64> {
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::InvalidParameter(format!("Poisson mean must be positive, got {mean}")));
    }
    let nf = n as f64;
    let valid = match side {
        TailSide::Lower => nf <= mean,
        TailSide::Upper => nf >= mean,
    };
    if !valid {
        return Err(Error::InvalidParameter(format!(
            "{side:?} tail bound needs n on the other side of the mean (n = {n}, m = {mean})"
        )));
    }
    if n == 0 {
        return Ok((-mean).exp());
    }
    Ok((nf * (1.0 + mean.ln() - nf.ln()) - mean).exp())
}

/// `2dλμ − 1`, the exponential rate of the mean total knowledge of the
/// dominating process.
pub fn drift_coefficient<S: Knowledge>(dim: usize, lambda: f64, mu: S) -> f64 {
    2.0 * dim as f64 * lambda * mu.as_f64() - 1.0
}

/// Smallest μ with `μ^{L³} ≥ 5/6` and `(2μ/5)(2 − 2μ/5) ≥ 3/5`.
pub fn mu_threshold(scale: u32) -> Result<f64> {
    if scale == 0 {
        return Err(Error::InvalidParameter("block scale must be >= 1".into()));
    }
    let cube = (scale as f64).powi(3);
    let length_cond = (5.0f64 / 6.0).powf(1.0 / cube);
    // a(2 − a) = 3/5 with a = 2μ/5, smaller root a = 1 − sqrt(2/5)
    let jump_cond = 2.5 * (1.0 - (0.4f64).sqrt());
    Ok(length_cond.max(jump_cond))
}

/// Lower bound on the star-invasion probability from the Chernoff estimate:
/// `(1 − (eλT/n)^n e^{−λT})^{2d}`, zero while `λT < n`.
pub fn invade_success_bound(lambda: f64, horizon: f64, n: u32, dim: usize) -> f64 {
    let m = lambda * horizon;
    match poisson_tail_bound(m, n as u64, TailSide::Lower) {
        Ok(b) => (1.0 - b.min(1.0)).max(0.0).powi(2 * dim as i32),
        Err(_) => 0.0,
    }
}

/// Smallest λ for which [`invade_success_bound`] reaches `1 − ε/2` at
/// `T = invade_time(ε, d)` and `n = min_interactions(μ)`.
pub fn lambda_plus<S: Knowledge>(epsilon: f64, mu: S, dim: usize) -> Result<f64> {
    let horizon = invade_time(epsilon, dim)?;
    let n = min_interactions(mu)?;
    let target = 1.0 - epsilon / 2.0;
    let ok = |l: f64| invade_success_bound(l, horizon, n, dim) >= target;
    let mut lo = n as f64 / horizon;
    let mut hi = lo.max(1.0);
    const CAP: f64 = 1e15;
    while !ok(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > CAP {
            return Err(Error::SearchCap(format!("no lambda below {CAP} meets the invasion bound")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Knowledge carried along a path in the worst case where every site is
/// ignorant before the path reaches it.
#[derive(Clone, Debug, PartialEq)]
pub struct PathReplay<S> {
    /// `values[i]` is the knowledge at `x_i` once the path has passed it.
    pub values: Vec<S>,
    /// Knowledge at the receiving site right before the double interaction.
    pub before_double: Option<S>,
    pub double_at: Option<usize>,
}

/// Worst-case replay along a path of length `len`: each hop multiplies the
/// carried value by μ, and a double interaction at hop `i` lifts the receiver
/// from `v` to `v + μ·w·(1 − v)`, `w` being the sender's value.
pub fn replay_knowledge<S: Knowledge>(
    len: usize,
    mu: S,
    initial: S,
    double_at: Option<usize>,
) -> Result<PathReplay<S>> {
    if !(initial >= S::zero() && initial <= S::one()) {
        return Err(Error::InvalidParameter(format!("initial knowledge {initial} outside [0, 1]")));
    }
    if let Some(i) = double_at {
        if i == 0 || i > len {
            return Err(Error::InvalidParameter(format!("double interaction at hop {i} outside 1..={len}")));
        }
    }
    let mut values = Vec::with_capacity(len + 1);
    values.push(initial);
    let mut before_double = None;
    for i in 1..=len {
        let sender = values[i - 1];
        let mut v = mu * sender;
        if double_at == Some(i) {
            before_double = Some(v);
            v = v + mu * sender * (S::one() - v);
        }
        values.push(v);
    }
    Ok(PathReplay {
        values,
        before_double,
        double_at,
    })
}

/// [`replay_knowledge`] for an extracted path, using its first double
/// interaction if one is given.
pub fn replay_path_knowledge<S: Knowledge>(
    path: &Path,
    mu: S,
    initial: S,
    first_double: Option<&DoubleInteraction>,
) -> Result<PathReplay<S>> {
    replay_knowledge(path.len(), mu, initial, first_double.map(|d| d.index))
}
