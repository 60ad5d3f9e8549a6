//! Reference computations that share no code with the library: dense matrix
//! exponentials, Perron vectors by repeated squaring and brute-force searches.

#![allow(dead_code)]

pub type M2 = [[f64; 2]; 2];

pub fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `exp(a)` by scaling and squaring with a 30-term Taylor series.
pub fn expm(a: &M2) -> M2 {
    let norm = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let scale = 2f64.powi(s);
    let b = [[a[0][0] / scale, a[0][1] / scale], [a[1][0] / scale, a[1][1] / scale]];
    let mut sum = [[1.0, 0.0], [0.0, 1.0]];
    let mut term = sum;
    for k in 1..30 {
        term = mul(&term, &b);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = mul(&sum, &sum);
    }
    sum
}

/// Spectral radius of a positive 2x2 matrix: repeated normalized squaring
/// isolates the Perron vector `v`, then `rho = (M v)_i / v_i`.
pub fn spectral_radius(m: &M2) -> f64 {
    let scale = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    let m = &[[m[0][0] / scale, m[0][1] / scale], [m[1][0] / scale, m[1][1] / scale]];
    let mut p = *m;
    for _ in 0..64 {
        p = mul(&p, &p);
        let n = p.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        for row in p.iter_mut() {
            for v in row.iter_mut() {
                *v /= n;
            }
        }
    }
    let v = [p[0][0] + p[0][1], p[1][0] + p[1][1]];
    let i = if v[0].abs() >= v[1].abs() { 0 } else { 1 };
    scale * (m[i][0] * v[0] + m[i][1] * v[1]) / v[i]
}

/// Generator of an ON/OFF chain (state 0 = OFF) with OFF->ON rate `up`.
pub fn generator(up: f64, down: f64) -> M2 {
    [[-up, up], [down, -down]]
}

/// Largest eigenvalue of `Q + diag(0, x)` via `ln rho(exp(Q + diag(0, x)))`,
/// shifted by the largest diagonal entry so the exponential stays finite.
pub fn tilted_growth(up: f64, down: f64, x: f64) -> f64 {
    let q = generator(up, down);
    let c = q[0][0].max(q[1][1] + x);
    let a = [[q[0][0] - c, q[0][1]], [q[1][0], q[1][1] + x - c]];
    c + spectral_radius(&expm(&a)).ln()
}

pub fn psi(gamma: f64, rate: f64) -> f64 {
    (2f64.powf(rate) - 1.0) / gamma
}

pub fn channel_rates(gamma: f64, rate: f64, kappa: f64) -> (f64, f64) {
    let p_on = (-psi(gamma, rate)).exp();
    (kappa * p_on, kappa * (1.0 - p_on))
}

/// Effective capacity as `-Lambda(-theta)/theta` of the fluid service process.
pub fn capacity(gamma: f64, rate: f64, kappa: f64, theta: f64) -> f64 {
    let (nu, mu) = channel_rates(gamma, rate, kappa);
    -tilted_growth(nu, mu, -theta * rate) / theta
}

pub fn dtms_bandwidth(p11: f64, p22: f64, lambda: f64, theta: f64) -> f64 {
    let e = (theta * lambda).exp();
    let m = [[p11, (1.0 - p11) * e], [1.0 - p22, p22 * e]];
    spectral_radius(&m).ln() / theta
}

pub fn mfs_bandwidth(alpha: f64, beta: f64, lambda: f64, theta: f64) -> f64 {
    tilted_growth(alpha, beta, theta * lambda) / theta
}

/// Poisson arrivals at intensity `lambda` while ON, tilt over one block.
pub fn mmps_bandwidth(alpha: f64, beta: f64, lambda: f64, theta: f64) -> f64 {
    tilted_growth(alpha, beta, (theta.exp() - 1.0) * lambda) / theta
}

/// Root of an increasing function by bisection on `[lo, hi]`.
pub fn increasing_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Grid argmax of `f` on `[lo, hi]` with the given step.
pub fn grid_argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .map(|i| lo + i as f64 * step)
        .map(|x| (x, f(x)))
        .fold((lo, f64::NEG_INFINITY), |b, p| if p.1 > b.1 { p } else { b })
}

/// Stationary law of a 2x2 stochastic matrix from the balance equation.
pub fn stationary(p: &M2) -> [f64; 2] {
    let (a, b) = (p[0][1], p[1][0]);
    [b / (a + b), a / (a + b)]
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut impl rand::Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn log_uniform(rng: &mut impl rand::Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}
