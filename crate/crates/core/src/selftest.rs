//! Chained triple-CHSH functional on each wing of the network.
//!
//! Correlators are indexed Charlie-first, `E_{z,x}`, with `z = 1, 2, 3`
//! and `x = 1..6`. On the right wing Daisy plays Charlie's role and Bob
//! plays Alice's.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{ProbabilityTable, Setting, Wing};

/// Maximum signaling tolerated before a table is rejected.
pub const SIGNALING_TOL: f64 = 1e-7;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// `(z, x, coefficient)`, one-based, grouped by CHSH line.
pub const CHAINED_TERMS: [[(usize, usize, f64); 4]; 3] = [
    [(1, 1, 1.0), (1, 2, 1.0), (2, 1, 1.0), (2, 2, -1.0)],
    [(1, 3, 1.0), (1, 4, 1.0), (3, 3, -1.0), (3, 4, 1.0)],
    [(2, 5, 1.0), (2, 6, 1.0), (3, 5, -1.0), (3, 6, 1.0)],
];

pub const CLASSICAL_BOUND: f64 = 6.0;

/// `6√2`
pub fn quantum_target() -> f64 {
    6.0 * std::f64::consts::SQRT_2
}

/// `p(c, a | z, x)` for the six auxiliary-only settings.
#[derive(Clone, Debug, PartialEq)]
pub struct WingMarginal {
    /// Indexed `[z][x][c][a]`, zero-based, slot 0 is `+1`.
    values: [[[[f64; 2]; 2]; 6]; 3],
}

impl WingMarginal {
    pub fn new(values: [[[[f64; 2]; 2]; 6]; 3]) -> Result<Self> {
        for (z, row) in values.iter().enumerate() {
            for (x, block) in row.iter().enumerate() {
                let sum: f64 = block.iter().flatten().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!("marginal at z={} x={} sums to {sum}", z + 1, x + 1)));
                }
            }
        }
        Ok(Self { values })
    }

    /// One-based lookup.
    pub fn probability(&self, z: usize, x: usize, c: usize, a: usize) -> f64 {
        self.values[z - 1][x - 1][c][a]
    }

    /// `E_{z,x} = Σ c·a·p(c,a|z,x)`, one-based.
    pub fn correlator(&self, z: usize, x: usize) -> f64 {
        let p = &self.values[z - 1][x - 1];
        p[0][0] - p[0][1] - p[1][0] + p[1][1]
    }
}

fn log3(n: usize) -> Option<usize> {
    let mut k = 0;
    let mut m = 1;
    while m < n {
        m *= 3;
        k += 1;
    }
    (m == n && k > 0).then_some(k)
}

/// Marginal of one wing, read at the first setting of the other wing and
/// checked against every other setting of it. In the high-dimensional
/// layout only the first Bell pair is read: the aux party's setting string
/// is `(j, Z, Z, ...)` and its outcome is the first sign.
pub fn wing_marginal(table: &ProbabilityTable, wing: Wing) -> Result<WingMarginal> {
    let [nz, nx, ny, nw] = table.settings_shape();
    let [nc, _, _, nd] = table.outcomes_shape();
    let (n_aux_settings, n_aux_out, n_relay, n_other_relay, n_other_aux) = match wing {
        Wing::Left => (nz, nc, nx, ny, nw),
        Wing::Right => (nw, nd, ny, nx, nz),
    };
    let qubits = log3(n_aux_settings)
        .ok_or_else(|| Error::InvalidIndex(format!("{n_aux_settings} auxiliary settings is not a power of 3")))?;
    if n_aux_out != 1 << qubits {
        return Err(Error::InvalidIndex(format!("{n_aux_out} auxiliary outcomes for {qubits} qubits")));
    }
    if n_relay < 6 {
        return Err(Error::InvalidIndex(format!("wing has {n_relay} relay settings, need 6")));
    }
    let stride = 3usize.pow(qubits as u32 - 1);
    let shift = qubits - 1;

    let read = |j: usize, x: usize, other_relay: usize, other_aux: usize| -> [[f64; 2]; 2] {
        let mut block = [[0.0; 2]; 2];
        let setting = match wing {
            Wing::Left => Setting { z: j * stride, x, y: other_relay, w: other_aux },
            Wing::Right => Setting { z: other_aux, x: other_relay, y: x, w: j * stride },
        };
        for o in table.all_outcomes() {
            let (aux_out, relay_out) = match wing {
                Wing::Left => (o.c, o.a),
                Wing::Right => (o.d, o.b),
            };
            block[aux_out >> shift][relay_out] += table.get(setting, o);
        }
        block
    };

    let mut values = [[[[0.0; 2]; 2]; 6]; 3];
    let mut deviation = 0.0f64;
    for (j, row) in values.iter_mut().enumerate() {
        for (x, slot) in row.iter_mut().enumerate() {
            *slot = read(j, x, 0, 0);
            for other_relay in 0..n_other_relay {
                for other_aux in 0..n_other_aux {
                    let alt = read(j, x, other_relay, other_aux);
                    for c in 0..2 {
                        for a in 0..2 {
                            deviation = deviation.max((alt[c][a] - slot[c][a]).abs());
                        }
                    }
                }
            }
        }
    }
    if deviation > SIGNALING_TOL {
        return Err(Error::Signaling { deviation });
    }
    WingMarginal::new(values)
}

/// Each of the three CHSH lines.
pub fn chsh_lines(m: &WingMarginal) -> [f64; 3] {
    CHAINED_TERMS.map(|line| line.iter().map(|&(z, x, k)| k * m.correlator(z, x)).sum())
}

/// `J = E11 + E12 + E21 - E22 + E13 + E14 - E33 + E34 + E25 + E26 - E35 + E36`
pub fn chained_chsh(m: &WingMarginal) -> f64 {
    chsh_lines(m).iter().sum()
}

/// Best deterministic local strategy for `J`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalOptimum {
    pub value: f64,
    /// Charlie's outputs for `z = 1..3`.
    pub charlie: [i8; 3],
    /// Alice's outputs for `x = 1..6`.
    pub alice: [i8; 6],
    /// Maximum of each line on its own.
    pub line_max: [f64; 3],
}

fn deterministic_value(lines: &[[(usize, usize, f64); 4]], charlie: u32, alice: u32) -> f64 {
    let sign = |bits: u32, k: usize| if bits >> (k - 1) & 1 == 0 { 1.0 } else { -1.0 };
    lines.iter().flatten().map(|&(z, x, k)| k * sign(charlie, z) * sign(alice, x)).sum()
}

/// Exhaustive search over all `2³ · 2⁶` deterministic assignments.
pub fn classical_bound_search() -> ClassicalOptimum {
    let mut best = (f64::NEG_INFINITY, 0u32, 0u32);
    for charlie in 0..8u32 {
        for alice in 0..64u32 {
            let v = deterministic_value(&CHAINED_TERMS, charlie, alice);
            if v > best.0 {
                best = (v, charlie, alice);
            }
        }
    }
    let line_max = std::array::from_fn(|l| {
        (0..8u32)
            .flat_map(|c| (0..64u32).map(move |a| (c, a)))
            .map(|(c, a)| deterministic_value(&CHAINED_TERMS[l..=l], c, a))
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let bit = |bits: u32, k: usize| if bits >> k & 1 == 0 { 1 } else { -1 };
    ClassicalOptimum {
        value: best.0,
        charlie: std::array::from_fn(|k| bit(best.1, k)),
        alice: std::array::from_fn(|k| bit(best.2, k)),
        line_max,
    }
}

pub fn classical_bound_bruteforce() -> f64 {
    classical_bound_search().value
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfTestReport {
    pub j_left: f64,
    pub j_right: f64,
    pub target: f64,
    pub tolerance: f64,
    /// `max(target - J)` over both wings, zero or negative at the target.
    pub deficit: f64,
    pub passed: bool,
}

pub fn selftest_check(table: &ProbabilityTable, tolerance: f64) -> Result<SelfTestReport> {
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance {tolerance} must be non-negative")));
    }
    let target = quantum_target();
    let j_left = chained_chsh(&wing_marginal(table, Wing::Left)?);
    let j_right = chained_chsh(&wing_marginal(table, Wing::Right)?);
    let passed = (j_left - target).abs() <= tolerance && (j_right - target).abs() <= tolerance;
    Ok(SelfTestReport { j_left, j_right, target, tolerance, deficit: (target - j_left).max(target - j_right), passed })
}

/// Marginal of the Charlie–Alice pair computed from `ρ_CA₀` alone, without
/// the rest of the network.
pub fn two_party_marginal(cfg: &crate::network::NetworkConfig, wing: Wing) -> Result<WingMarginal> {
    use crate::qmath::tensor;
    let (rho, aux, relay) = match wing {
        Wing::Left => (&cfg.rho_ca0, &cfg.charlie, &cfg.alice),
        Wing::Right => (&cfg.rho_b0d, &cfg.daisy, &cfg.bob),
    };
    let mut values = [[[[0.0; 2]; 2]; 6]; 3];
    for (z, row) in values.iter_mut().enumerate() {
        for (x, block) in row.iter_mut().enumerate() {
            for (c, line) in block.iter_mut().enumerate() {
                for (a, p) in line.iter_mut().enumerate() {
                    let op = match wing {
                        Wing::Left => tensor(aux.effect(z, c), relay.effect(x, a)),
                        Wing::Right => tensor(relay.effect(x, a), aux.effect(z, c)),
                    };
                    *p = op.trace_product(rho.op()).re;
                }
            }
        }
    }
    WingMarginal::new(values)
}
