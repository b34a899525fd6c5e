//! Reference coherence of a resonantly driven two-level emitter from the optical
//! Bloch equations and the quantum regression theorem, integrated with RK4.
//! Shares no code with the closed-form expression it checks.

use num_complex::Complex64;

type M2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

// Basis order (|e⟩, |g⟩).
const LOWER: M2 = [[ZERO, ZERO], [ONE, ZERO]];
const RAISE: M2 = [[ZERO, ONE], [ZERO, ZERO]];

fn mul(a: &M2, b: &M2) -> M2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

fn combine(a: &M2, k: f64, b: &M2) -> M2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] + b[i][j] * k))
}

/// dρ/dt for Γ = 1 and Rabi frequency `rabi`.
fn lindblad(rabi: f64, rho: &M2) -> M2 {
    let half = ONE * (0.5 * rabi);
    let h: M2 = [[ZERO, half], [half, ZERO]];
    let minus_i = Complex64::new(0.0, -1.0);
    let (hr, rh) = (mul(&h, rho), mul(rho, &h));
    let jump = mul(&mul(&LOWER, rho), &RAISE);
    let n = mul(&RAISE, &LOWER);
    let (nr, rn) = (mul(&n, rho), mul(rho, &n));
    std::array::from_fn(|a| {
        std::array::from_fn(|b| minus_i * (hr[a][b] - rh[a][b]) + jump[a][b] - (nr[a][b] + rn[a][b]) * 0.5)
    })
}

fn rk4(rabi: f64, x: &M2, dt: f64) -> M2 {
    let k1 = lindblad(rabi, x);
    let k2 = lindblad(rabi, &combine(x, 0.5 * dt, &k1));
    let k3 = lindblad(rabi, &combine(x, 0.5 * dt, &k2));
    let k4 = lindblad(rabi, &combine(x, dt, &k3));
    std::array::from_fn(|i| {
        std::array::from_fn(|j| x[i][j] + (k1[i][j] + k2[i][j] * 2.0 + k3[i][j] * 2.0 + k4[i][j]) * (dt / 6.0))
    })
}

/// ⟨σ₊(τ)σ₋(0)⟩/⟨σ₊σ₋⟩ at τ = i·dt for i = 0..=steps, for saturation `s`.
pub fn bloch_g1(s: f64, dt: f64, steps: usize) -> Vec<f64> {
    let rabi = (0.5 * s).sqrt();
    let mut rho: M2 = [[ZERO, ZERO], [ZERO, ONE]];
    for _ in 0..(120.0 / dt).round() as usize {
        rho = rk4(rabi, &rho, dt);
    }
    let mut x = mul(&LOWER, &rho);
    let trace = |m: &M2| m[0][0] + m[1][1];
    let norm = trace(&mul(&RAISE, &x));
    let mut out = Vec::with_capacity(steps + 1);
    for _ in 0..=steps {
        out.push((trace(&mul(&RAISE, &x)) / norm).re);
        x = rk4(rabi, &x, dt);
    }
    out
}
