//! The certification inequality `I ≥ 0` and the end-to-end pipeline.
//!
//! `I = Σ ω_{ij} p(c_i, +, +, d_j | z_i, ★, ★, w_j)`, where label `i` of
//! the witness expansion fixes Charlie's setting and outcome and label
//! `j` fixes Daisy's.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{canonical_config, conjugate_config, probability_table, NetworkConfig, Outcome, ProbabilityTable, Setting, Wing};
use crate::selftest::{selftest_check, SelfTestReport};
use crate::states::{check_unit_interval, isotropic, random_separable, DensityMatrix};
use crate::witness::{witness_from_state, Omega, WitnessSpec};

/// `I` must fall below `-DETECTION_MARGIN` to count as a violation.
pub const DETECTION_MARGIN: f64 = 1e-9;
/// Isotropic visibility of the default reference witness.
pub const REFERENCE_VISIBILITY: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Entangled,
    NotDetected,
    SelftestFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub config_digest: String,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationReport {
    /// `None` when the self-test failed and `I` was not evaluated.
    pub i_value: Option<f64>,
    pub selftest: SelfTestReport,
    /// `tr[W ρ_AB]`
    pub witness_trace: f64,
    pub verdict: Verdict,
    pub provenance: Provenance,
}

/// Weighted sum of the joint-setting probabilities with both relay
/// outcomes `+`.
pub fn certification_functional(table: &ProbabilityTable, omega: &Omega) -> Result<f64> {
    let [nz, _, _, nw] = table.settings_shape();
    let [nc, na, nb, nd] = table.outcomes_shape();
    let (fa, fb) = (omega.family_a(), omega.family_b());
    if fa.settings() != nz || fa.outcomes() != nc || fb.settings() != nw || fb.outcomes() != nd {
        return Err(Error::DimensionMismatch {
            expected: format!("table with {nz}x{nc} Charlie and {nw}x{nd} Daisy labels"),
            found: format!("omega over {}x{} and {}x{}", fa.settings(), fa.outcomes(), fb.settings(), fb.outcomes()),
        });
    }
    if na < 1 || nb < 1 {
        return Err(Error::InvalidIndex("relay parties have no outcomes".into()));
    }
    let [Some(x), Some(y)] = table.star() else {
        return Err(Error::InvalidIndex("table has no joint setting for Alice and Bob".into()));
    };
    let mut total = 0.0;
    for (i, j, weight) in omega.iter() {
        if weight == 0.0 {
            continue;
        }
        let setting = Setting { z: i / nc, x, y, w: j / nd };
        let outcome = Outcome { c: i % nc, a: 0, b: 0, d: j % nd };
        total += weight * table.get(setting, outcome);
    }
    Ok(total)
}

/// Self-test and, if it passes, the certification functional on an
/// arbitrary network.
pub fn evaluate_config(cfg: &NetworkConfig, witness: &WitnessSpec, tolerance: f64) -> Result<CertificationReport> {
    if cfg.rho_ab.dims() != witness.dims() {
        return Err(Error::DimensionMismatch {
            expected: format!("witness dims {:?}", witness.dims()),
            found: format!("state dims {:?}", cfg.rho_ab.dims()),
        });
    }
    let table = probability_table(cfg)?;
    let selftest = selftest_check(&table, tolerance)?;
    let (i_value, verdict) = if selftest.passed {
        let i = certification_functional(&table, witness.omega())?;
        let v = if i < -DETECTION_MARGIN { Verdict::Entangled } else { Verdict::NotDetected };
        (Some(i), v)
    } else {
        (None, Verdict::SelftestFailed)
    };
    Ok(CertificationReport {
        i_value,
        selftest,
        witness_trace: witness.value(&cfg.rho_ab),
        verdict,
        provenance: Provenance { config_digest: table.config_digest().to_string(), seeds: Vec::new() },
    })
}

/// Canonical network at auxiliary visibility `visibility_aux`, witness
/// built from `rho_ab` unless one is supplied.
pub fn run_pipeline(
    rho_ab: &DensityMatrix,
    visibility_aux: f64,
    selftest_tolerance: f64,
    witness: Option<&WitnessSpec>,
) -> Result<CertificationReport> {
    let built;
    let witness = match witness {
        Some(w) => w,
        None => {
            built = witness_from_state(rho_ab)?;
            &built
        }
    };
    let cfg = canonical_config(rho_ab, visibility_aux)?;
    evaluate_config(&cfg, witness, selftest_tolerance)
}

/// Which wings are complex-conjugated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConjugationVariant {
    pub left: bool,
    pub right: bool,
}

impl ConjugationVariant {
    pub const ALL: [ConjugationVariant; 4] = [
        ConjugationVariant { left: false, right: false },
        ConjugationVariant { left: true, right: false },
        ConjugationVariant { left: false, right: true },
        ConjugationVariant { left: true, right: true },
    ];

    pub fn apply(self, cfg: &NetworkConfig) -> NetworkConfig {
        let mut out = cfg.clone();
        if self.left {
            out = conjugate_config(&out, Wing::Left);
        }
        if self.right {
            out = conjugate_config(&out, Wing::Right);
        }
        out
    }
}

/// Reports for all four wing-conjugation variants of the canonical network.
pub fn conjugation_variants(
    rho_ab: &DensityMatrix,
    witness: &WitnessSpec,
    visibility_aux: f64,
    tolerance: f64,
) -> Result<Vec<(ConjugationVariant, CertificationReport)>> {
    let cfg = canonical_config(rho_ab, visibility_aux)?;
    ConjugationVariant::ALL
        .iter()
        .map(|&v| Ok((v, evaluate_config(&v.apply(&cfg), witness, tolerance)?)))
        .collect()
}

/// Witness of `isotropic(0.8)`, the default for baselines.
pub fn reference_witness() -> Result<WitnessSpec> {
    witness_from_state(&isotropic(REFERENCE_VISIBILITY)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineSummary {
    pub min_i: f64,
    /// Seed of the separable sample that attained `min_i`.
    pub worst_seed: u64,
    pub num_states: usize,
    pub num_terms: usize,
    pub seed: u64,
    pub adversarial: bool,
}

/// Runs the ideal pipeline on seeded separable states with a fixed
/// witness and reports the smallest `I`. In adversarial mode every
/// wing-conjugation variant is tried per state.
pub fn separable_baseline_with(
    witness: &WitnessSpec,
    num_states: usize,
    num_terms: usize,
    seed: u64,
    adversarial: bool,
) -> Result<BaselineSummary> {
    if num_states == 0 {
        return Err(Error::InvalidParameter("num_states must be at least 1".into()));
    }
    if witness.dims() != [2, 2] {
        return Err(Error::InvalidParameter("separable baseline needs a two-qubit witness".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let variants: &[ConjugationVariant] =
        if adversarial { &ConjugationVariant::ALL } else { &ConjugationVariant::ALL[..1] };
    let base = canonical_config(&isotropic(1.0)?, 1.0)?;
    let mut min_i = f64::INFINITY;
    let mut worst_seed = 0;
    for _ in 0..num_states {
        let state_seed = master.next_u64();
        let sigma = random_separable(num_terms, state_seed)?;
        let cfg = base.with_target(sigma)?;
        for v in variants {
            let report = evaluate_config(&v.apply(&cfg), witness, crate::selftest::DEFAULT_TOLERANCE)?;
            // the ideal auxiliaries always pass, so I is always present
            let i = report.i_value.ok_or_else(|| Error::InvalidParameter("self-test failed on ideal auxiliaries".into()))?;
            if i < min_i {
                min_i = i;
                worst_seed = state_seed;
            }
        }
    }
    Ok(BaselineSummary { min_i, worst_seed, num_states, num_terms, seed, adversarial })
}

/// [`separable_baseline_with`] using [`reference_witness`].
pub fn separable_baseline(num_states: usize, num_terms: usize, seed: u64, adversarial: bool) -> Result<f64> {
    Ok(separable_baseline_with(&reference_witness()?, num_states, num_terms, seed, adversarial)?.min_i)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    #[serde(rename = "v")]
    pub visibility: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "I")]
    pub i: f64,
    pub detected: bool,
}

fn sweep_point(rho_ab: &DensityMatrix, witness: &WitnessSpec, v: f64) -> Result<SweepRecord> {
    let table = probability_table(&canonical_config(rho_ab, v)?)?;
    let st = selftest_check(&table, 0.0)?;
    let i = certification_functional(&table, witness.omega())?;
    Ok(SweepRecord { visibility: v, j: st.j_left.min(st.j_right), i, detected: i < -DETECTION_MARGIN })
}

/// `J` and `I` of the canonical network across auxiliary visibilities,
/// sorted by visibility. `I` is evaluated whether or not the self-test
/// passes.
pub fn noise_sweep(rho_ab: &DensityMatrix, v_grid: &[f64], witness: Option<&WitnessSpec>) -> Result<Vec<SweepRecord>> {
    for &v in v_grid {
        check_unit_interval("grid visibility", v)?;
    }
    let built;
    let witness = match witness {
        Some(w) => w,
        None => {
            built = witness_from_state(rho_ab)?;
            &built
        }
    };
    let mut grid = v_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.iter().map(|&v| sweep_point(rho_ab, witness, v)).collect()
}

/// `n` evenly spaced points on `[0, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

/// Smallest auxiliary visibility at which `I < -1e-9`, by bisection to
/// `1e-12`. Assumes detection is monotone in visibility; `None` if even
/// `v = 1` is not detected.
pub fn detection_threshold(rho_ab: &DensityMatrix, witness: Option<&WitnessSpec>) -> Result<Option<f64>> {
    let built;
    let witness = match witness {
        Some(w) => w,
        None => {
            built = witness_from_state(rho_ab)?;
            &built
        }
    };
    if !sweep_point(rho_ab, witness, 1.0)?.detected {
        return Ok(None);
    }
    if sweep_point(rho_ab, witness, 0.0)?.detected {
        return Ok(Some(0.0));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if sweep_point(rho_ab, witness, mid)?.detected {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// CSV with header `v,J,I,detected`.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
