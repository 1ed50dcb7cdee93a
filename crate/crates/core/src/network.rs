//! The four-party network: Charlie and Alice share one auxiliary pair,
//! Bob and Daisy the other, and Alice and Bob hold the target state.
//!
//! Global subsystem order is `C, A₀, A, B, B₀, D`. Auxiliary states are
//! stored as `(C, A₀)` and `(B₀, D)`. Alice's joint setting acts on
//! `(A₀, A)` and Bob's on `(B, B₀)`.
//!
//! Probabilities are computed by steering: Charlie's effect conditions
//! `A₀` to an unnormalized state, which is then folded into Alice's effect
//! to give an operator on `A` alone. The same happens on Bob's side, so
//! every entry reduces to `tr[(E_A ⊗ E_B) ρ_AB]`.

use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::qmath::{partial_trace, tensor, tensor_all, Operator};
use crate::states::{bell_phi_plus, check_unit_interval, DensityMatrix, PauliAxis, PSD_FLOOR};
use crate::witness::{ProjectorFamily, ProjectorLabel};

/// Completeness tolerance for POVMs.
pub const POVM_TOL: f64 = 1e-9;
/// Normalization and no-signaling tolerance for probability tables.
pub const TABLE_TOL: f64 = 1e-9;
const ENTRY_SLACK: f64 = 1e-12;

/// Index of the joint (Bell-projector) setting in canonical families.
pub const STAR: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Wing {
    /// Charlie and Alice.
    Left,
    /// Bob and Daisy.
    Right,
}

/// A POVM; effect `k` is outcome slot `k` (slot 0 is `+1`).
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    effects: Vec<Operator>,
}

impl Povm {
    pub fn new(effects: Vec<Operator>) -> Result<Self> {
        let first = effects.first().ok_or_else(|| Error::InvalidPovm("no effects".into()))?;
        let dims = first.dims().to_vec();
        let mut sum = Operator::zeros(&dims);
        for (k, e) in effects.iter().enumerate() {
            if e.dims() != dims.as_slice() {
                return Err(Error::InvalidPovm(format!("effect {k} has dims {:?}, expected {dims:?}", e.dims())));
            }
            let min = crate::qmath::min_eigenvalue(e)?;
            if min < PSD_FLOOR {
                return Err(Error::InvalidPovm(format!("effect {k} has eigenvalue {min:.3e}")));
            }
            sum = &sum + e;
        }
        let deviation = sum.max_abs_diff(&Operator::identity(&dims));
        if deviation > POVM_TOL {
            return Err(Error::InvalidPovm(format!("effects sum to identity only within {deviation:.3e}")));
        }
        Ok(Self { effects })
    }

    /// Two-outcome POVM `{(1 + O)/2, (1 - O)/2}` for a ±1 observable.
    pub fn from_observable(observable: &Operator) -> Result<Self> {
        let id = Operator::identity(observable.dims());
        Self::new(vec![(&id + observable).scale(0.5), (&id - observable).scale(0.5)])
    }

    /// Two-outcome POVM `{P, 1 - P}`.
    pub fn from_projector(p: &Operator) -> Result<Self> {
        Self::new(vec![p.clone(), &Operator::identity(p.dims()) - p])
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn dims(&self) -> &[usize] {
        self.effects[0].dims()
    }

    fn conj(&self) -> Self {
        Self { effects: self.effects.iter().map(Operator::conj).collect() }
    }
}

/// Which subsystems a setting of Alice or Bob acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Support {
    /// The auxiliary half only (`A₀` or `B₀`).
    Auxiliary,
    /// Auxiliary half and target half together.
    Joint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSetting {
    pub povm: Povm,
    pub support: Support,
}

/// Indexed measurement settings of one party.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementFamily {
    settings: Vec<MeasurementSetting>,
}

impl MeasurementFamily {
    pub fn new(settings: Vec<MeasurementSetting>) -> Result<Self> {
        if settings.is_empty() {
            return Err(Error::InvalidPovm("measurement family has no settings".into()));
        }
        let n = settings[0].povm.outcomes();
        if settings.iter().any(|s| s.povm.outcomes() != n) {
            return Err(Error::InvalidPovm("all settings of a party must share an outcome count".into()));
        }
        Ok(Self { settings })
    }

    pub fn local(povms: Vec<Povm>) -> Result<Self> {
        Self::new(povms.into_iter().map(|povm| MeasurementSetting { povm, support: Support::Auxiliary }).collect())
    }

    pub fn settings(&self) -> &[MeasurementSetting] {
        &self.settings
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    pub fn outcomes(&self) -> usize {
        self.settings[0].povm.outcomes()
    }

    pub fn effect(&self, setting: usize, outcome: usize) -> &Operator {
        &self.settings[setting].povm.effects[outcome]
    }

    /// First setting with joint support.
    pub fn star_index(&self) -> Option<usize> {
        self.settings.iter().position(|s| s.support == Support::Joint)
    }

    fn conj_auxiliary(&self) -> Self {
        let settings = self
            .settings
            .iter()
            .map(|s| match s.support {
                Support::Auxiliary => MeasurementSetting { povm: s.povm.conj(), support: s.support },
                Support::Joint => s.clone(),
            })
            .collect();
        Self { settings }
    }

    fn conj_all(&self) -> Self {
        let settings =
            self.settings.iter().map(|s| MeasurementSetting { povm: s.povm.conj(), support: s.support }).collect();
        Self { settings }
    }
}

/// A full network: three states and four measurement families.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    pub rho_ca0: DensityMatrix,
    pub rho_ab: DensityMatrix,
    pub rho_b0d: DensityMatrix,
    pub charlie: MeasurementFamily,
    pub alice: MeasurementFamily,
    pub bob: MeasurementFamily,
    pub daisy: MeasurementFamily,
}

fn pair_dims(rho: &DensityMatrix, name: &str) -> Result<[usize; 2]> {
    match rho.dims() {
        [a, b] => Ok([*a, *b]),
        other => Err(Error::InvalidDims(format!("{name} must be bipartite, got dims {other:?}"))),
    }
}

fn expect_dims(what: &str, found: &[usize], expected: &[usize]) -> Result<()> {
    if found != expected {
        return Err(Error::DimensionMismatch { expected: format!("{what} dims {expected:?}"), found: format!("{found:?}") });
    }
    Ok(())
}

impl NetworkConfig {
    pub fn new(
        rho_ca0: DensityMatrix,
        rho_ab: DensityMatrix,
        rho_b0d: DensityMatrix,
        charlie: MeasurementFamily,
        alice: MeasurementFamily,
        bob: MeasurementFamily,
        daisy: MeasurementFamily,
    ) -> Result<Self> {
        let [dc, da0] = pair_dims(&rho_ca0, "rho_CA0")?;
        let [da, db] = pair_dims(&rho_ab, "rho_AB")?;
        let [db0, dd] = pair_dims(&rho_b0d, "rho_B0D")?;
        for s in charlie.settings() {
            expect_dims("Charlie effect", s.povm.dims(), &[dc])?;
        }
        for s in daisy.settings() {
            expect_dims("Daisy effect", s.povm.dims(), &[dd])?;
        }
        for s in alice.settings() {
            match s.support {
                Support::Auxiliary => expect_dims("Alice effect", s.povm.dims(), &[da0])?,
                Support::Joint => expect_dims("Alice joint effect", s.povm.dims(), &[da0, da])?,
            }
        }
        for s in bob.settings() {
            match s.support {
                Support::Auxiliary => expect_dims("Bob effect", s.povm.dims(), &[db0])?,
                Support::Joint => expect_dims("Bob joint effect", s.povm.dims(), &[db, db0])?,
            }
        }
        Ok(Self { rho_ca0, rho_ab, rho_b0d, charlie, alice, bob, daisy })
    }

    pub fn target_dims(&self) -> [usize; 2] {
        let d = self.rho_ab.dims();
        [d[0], d[1]]
    }

    /// SHA-256 over dims and entry bits of every state and effect.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let mut feed = |op: &Operator| {
            for &d in op.dims() {
                h.update((d as u64).to_le_bytes());
            }
            for z in op.matrix().iter() {
                h.update(z.re.to_bits().to_le_bytes());
                h.update(z.im.to_bits().to_le_bytes());
            }
        };
        for rho in [&self.rho_ca0, &self.rho_ab, &self.rho_b0d] {
            feed(rho.op());
        }
        for fam in [&self.charlie, &self.alice, &self.bob, &self.daisy] {
            for s in fam.settings() {
                for e in s.povm.effects() {
                    feed(e);
                }
            }
        }
        hex::encode(h.finalize())
    }

    /// Replaces the target state, keeping auxiliaries and measurements.
    pub fn with_target(&self, rho_ab: DensityMatrix) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.rho_ab = rho_ab;
        Self::new(cfg.rho_ca0, cfg.rho_ab, cfg.rho_b0d, cfg.charlie, cfg.alice, cfg.bob, cfg.daisy)
    }
}

fn rotated_observables() -> [Operator; 6] {
    let (z, x, y) = (PauliAxis::Z.observable(), PauliAxis::X.observable(), PauliAxis::Y.observable());
    let r = 1.0 / 2f64.sqrt();
    [
        (&z + &x).scale(r),
        (&z - &x).scale(r),
        (&z + &y).scale(r),
        (&z - &y).scale(r),
        (&x + &y).scale(r),
        (&x - &y).scale(r),
    ]
}

fn pauli_string_family(fam: ProjectorFamily) -> Result<MeasurementFamily> {
    let povms = (0..fam.settings())
        .map(|s| {
            let effects = (0..fam.outcomes())
                .map(|o| ProjectorLabel::from_indices(fam.qubits(), s, o).projector().with_dims(vec![fam.dimension()]))
                .collect::<Result<Vec<_>>>()?;
            Povm::new(effects)
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementFamily::local(povms)
}

/// Six rotated observables on the first qubit of the auxiliary half plus
/// the Bell-projector setting. `Φ⁺` is symmetric under exchanging its
/// halves, so the same joint effect serves `(A₀, A)` and `(B, B₀)`.
fn relay_family(d: usize) -> Result<MeasurementFamily> {
    let mut settings = Vec::with_capacity(7);
    let rest = d / 2;
    for obs in rotated_observables() {
        let obs = if rest > 1 { tensor(&obs, &Operator::identity(&[rest])).with_dims(vec![d])? } else { obs };
        settings.push(MeasurementSetting { povm: Povm::from_observable(&obs)?, support: Support::Auxiliary });
    }
    let bell = bell_phi_plus(d)?.projector();
    settings.push(MeasurementSetting { povm: Povm::from_projector(&bell)?, support: Support::Joint });
    MeasurementFamily::new(settings)
}

/// The ideal strategy with white noise of visibility `visibility_aux` on
/// both auxiliary pairs. Local dimensions of `rho_ab` must be powers of two;
/// for `2^n` the auxiliaries are `n` Bell pairs and Charlie/Daisy measure
/// Pauli strings.
pub fn canonical_config(rho_ab: &DensityMatrix, visibility_aux: f64) -> Result<NetworkConfig> {
    check_unit_interval("visibility_aux", visibility_aux)?;
    let [da, db] = pair_dims(rho_ab, "rho_AB")?;
    let fam_a = ProjectorFamily::for_dimension(da)?;
    let fam_b = ProjectorFamily::for_dimension(db)?;
    let aux = |d: usize| -> Result<DensityMatrix> {
        DensityMatrix::pure(&bell_phi_plus(d)?).with_white_noise(visibility_aux)
    };
    NetworkConfig::new(
        aux(da)?,
        rho_ab.clone(),
        aux(db)?,
        pauli_string_family(fam_a)?,
        relay_family(da)?,
        relay_family(db)?,
        pauli_string_family(fam_b)?,
    )
}

/// Complex-conjugates one wing's auxiliary strategy: every effect of
/// Charlie (Daisy) and the auxiliary-only settings of Alice (Bob). For
/// qubits this turns Charlie's `σ_y` into `-σ_y`. The joint setting is
/// left alone.
pub fn conjugate_config(cfg: &NetworkConfig, wing: Wing) -> NetworkConfig {
    let mut out = cfg.clone();
    match wing {
        Wing::Left => {
            out.charlie = cfg.charlie.conj_all();
            out.alice = cfg.alice.conj_auxiliary();
        }
        Wing::Right => {
            out.daisy = cfg.daisy.conj_all();
            out.bob = cfg.bob.conj_auxiliary();
        }
    }
    out
}

/// `tr_remote[(effect ⊗ 1) ρ_aux]`, the unnormalized state left on the
/// other half. `remote` is the position (0 or 1) of the measured half.
pub fn steering_operator(rho_aux: &DensityMatrix, effect: &Operator, remote: usize) -> Result<Operator> {
    let [d0, d1] = pair_dims(rho_aux, "auxiliary state")?;
    let (d_remote, keep) = match remote {
        0 => (d0, 1),
        1 => (d1, 0),
        _ => return Err(Error::InvalidSubsystem { index: remote, count: 2 }),
    };
    if effect.side() != d_remote {
        return Err(Error::DimensionMismatch {
            expected: format!("effect of side {d_remote}"),
            found: format!("side {}", effect.side()),
        });
    }
    let effect = effect.clone().with_dims(vec![d_remote])?;
    let lifted = if remote == 0 {
        tensor(&effect, &Operator::identity(&[d1]))
    } else {
        tensor(&Operator::identity(&[d0]), &effect)
    };
    partial_trace(&(&lifted * rho_aux.op()), &[keep])
}

/// Setting labels `(z, x, y, w)`, zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Setting {
    pub z: usize,
    pub x: usize,
    pub y: usize,
    pub w: usize,
}

/// Outcome slots `(c, a, b, d)`, zero-based; slot 0 is `+1` for binary outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub c: usize,
    pub a: usize,
    pub b: usize,
    pub d: usize,
}

fn check_index(name: &str, value: usize, bound: usize) -> Result<()> {
    if value >= bound {
        return Err(Error::InvalidIndex(format!("{name} = {value} out of range 0..{bound}")));
    }
    Ok(())
}

impl NetworkConfig {
    fn check_indices(&self, s: Setting, o: Outcome) -> Result<()> {
        check_index("z", s.z, self.charlie.len())?;
        check_index("x", s.x, self.alice.len())?;
        check_index("y", s.y, self.bob.len())?;
        check_index("w", s.w, self.daisy.len())?;
        check_index("c", o.c, self.charlie.outcomes())?;
        check_index("a", o.a, self.alice.outcomes())?;
        check_index("b", o.b, self.bob.outcomes())?;
        check_index("d", o.d, self.daisy.outcomes())?;
        Ok(())
    }

    /// Alice's effect on `(A₀, A)`.
    fn alice_lifted(&self, x: usize, a: usize) -> Operator {
        let [da, _] = self.target_dims();
        let s = &self.alice.settings[x];
        let e = &s.povm.effects[a];
        match s.support {
            Support::Auxiliary => tensor(e, &Operator::identity(&[da])),
            Support::Joint => e.clone(),
        }
    }

    /// Bob's effect on `(B, B₀)`.
    fn bob_lifted(&self, y: usize, b: usize) -> Operator {
        let [_, db] = self.target_dims();
        let s = &self.bob.settings[y];
        let e = &s.povm.effects[b];
        match s.support {
            Support::Auxiliary => tensor(&Operator::identity(&[db]), e),
            Support::Joint => e.clone(),
        }
    }

    /// Operator on `A` equal to `tr_{A₀}[(σ_{c|z} ⊗ 1) M_{a|x}]`.
    pub fn alice_effective(&self, z: usize, c: usize, x: usize, a: usize) -> Result<Operator> {
        let [da, _] = self.target_dims();
        let sigma = steering_operator(&self.rho_ca0, self.charlie.effect(z, c), 0)?;
        let m = self.alice_lifted(x, a);
        partial_trace(&(&tensor(&sigma, &Operator::identity(&[da])) * &m), &[1])
    }

    /// Operator on `B` equal to `tr_{B₀}[(1 ⊗ τ_{d|w}) M_{b|y}]`.
    pub fn bob_effective(&self, w: usize, d: usize, y: usize, b: usize) -> Result<Operator> {
        let [_, db] = self.target_dims();
        let tau = steering_operator(&self.rho_b0d, self.daisy.effect(w, d), 1)?;
        let m = self.bob_lifted(y, b);
        partial_trace(&(&tensor(&Operator::identity(&[db]), &tau) * &m), &[0])
    }
}

/// `p(c,a,b,d | z,x,y,w)` on the reduced space `A₀ ⊗ A ⊗ B ⊗ B₀`.
pub fn joint_probability(cfg: &NetworkConfig, setting: Setting, outcome: Outcome) -> Result<f64> {
    cfg.check_indices(setting, outcome)?;
    let sigma = steering_operator(&cfg.rho_ca0, cfg.charlie.effect(setting.z, outcome.c), 0)?;
    let tau = steering_operator(&cfg.rho_b0d, cfg.daisy.effect(setting.w, outcome.d), 1)?;
    let state = tensor_all(&[&sigma, cfg.rho_ab.op(), &tau]);
    let effect = tensor(&cfg.alice_lifted(setting.x, outcome.a), &cfg.bob_lifted(setting.y, outcome.b));
    Ok(effect.trace_product(&state).re)
}

/// Exact statistics of every setting and outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTable {
    settings: [usize; 4],
    outcomes: [usize; 4],
    star: [Option<usize>; 2],
    values: Vec<f64>,
    digest: String,
}

impl ProbabilityTable {
    pub fn settings_shape(&self) -> [usize; 4] {
        self.settings
    }

    pub fn outcomes_shape(&self) -> [usize; 4] {
        self.outcomes
    }

    /// Index of the joint setting for Alice (`[0]`) and Bob (`[1]`).
    pub fn star(&self) -> [Option<usize>; 2] {
        self.star
    }

    pub fn config_digest(&self) -> &str {
        &self.digest
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn index(&self, s: Setting, o: Outcome) -> usize {
        let [nz, nx, ny, nw] = self.settings;
        let [nc, na, nb, nd] = self.outcomes;
        debug_assert!(s.z < nz && s.x < nx && s.y < ny && s.w < nw);
        let si = ((s.z * nx + s.x) * ny + s.y) * nw + s.w;
        (((si * nc + o.c) * na + o.a) * nb + o.b) * nd + o.d
    }

    pub fn get(&self, s: Setting, o: Outcome) -> f64 {
        self.values[self.index(s, o)]
    }

    pub fn try_get(&self, s: Setting, o: Outcome) -> Result<f64> {
        let [nz, nx, ny, nw] = self.settings;
        let [nc, na, nb, nd] = self.outcomes;
        check_index("z", s.z, nz)?;
        check_index("x", s.x, nx)?;
        check_index("y", s.y, ny)?;
        check_index("w", s.w, nw)?;
        check_index("c", o.c, nc)?;
        check_index("a", o.a, na)?;
        check_index("b", o.b, nb)?;
        check_index("d", o.d, nd)?;
        Ok(self.get(s, o))
    }

    pub fn all_settings(&self) -> impl Iterator<Item = Setting> + '_ {
        let [nz, nx, ny, nw] = self.settings;
        (0..nz).flat_map(move |z| {
            (0..nx).flat_map(move |x| (0..ny).flat_map(move |y| (0..nw).map(move |w| Setting { z, x, y, w })))
        })
    }

    pub fn all_outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        let [nc, na, nb, nd] = self.outcomes;
        (0..nc).flat_map(move |c| {
            (0..na).flat_map(move |a| (0..nb).flat_map(move |b| (0..nd).map(move |d| Outcome { c, a, b, d })))
        })
    }

    /// Largest deviation of any per-setting sum from 1.
    pub fn normalization_error(&self) -> f64 {
        let block: usize = self.outcomes.iter().product();
        self.values.chunks(block).map(|c| (c.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn entry_range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Worst-case dependence of any party subset's marginal on the settings
    /// of the complementary parties.
    pub fn signaling_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for mask in 1u8..15 {
            worst = worst.max(self.subset_signaling(mask));
        }
        worst
    }

    fn subset_signaling(&self, mask: u8) -> f64 {
        // marginal over outcomes of parties outside `mask`, for every full setting
        let keep = |k: usize| mask & (1 << k) != 0;
        let mut kept_settings = 1;
        let mut kept_outcomes = 1;
        for k in 0..4 {
            if keep(k) {
                kept_settings *= self.settings[k];
                kept_outcomes *= self.outcomes[k];
            }
        }
        let mut reference: Vec<Option<f64>> = vec![None; kept_settings * kept_outcomes];
        let mut marg = vec![0.0; kept_settings * kept_outcomes];
        let mut worst = 0.0f64;
        let key = |vals: [usize; 4], dims: [usize; 4]| {
            (0..4).filter(|&k| keep(k)).fold(0usize, |acc, k| acc * dims[k] + vals[k])
        };
        for s in self.all_settings() {
            marg.iter_mut().for_each(|m| *m = 0.0);
            let sv = [s.z, s.x, s.y, s.w];
            let sk = key(sv, self.settings);
            for o in self.all_outcomes() {
                let ok = key([o.c, o.a, o.b, o.d], self.outcomes);
                marg[sk * kept_outcomes + ok] += self.get(s, o);
            }
            for ok in 0..kept_outcomes {
                let idx = sk * kept_outcomes + ok;
                let v = marg[idx];
                match reference[idx] {
                    None => reference[idx] = Some(v),
                    Some(r) => worst = worst.max((r - v).abs()),
                }
            }
        }
        worst
    }

    /// Checks entry range, normalization and no-signaling.
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.entry_range();
        if lo < -ENTRY_SLACK || hi > 1.0 + ENTRY_SLACK {
            return Err(Error::InvalidParameter(format!("probability outside [0, 1]: [{lo}, {hi}]")));
        }
        let norm = self.normalization_error();
        if norm > TABLE_TOL {
            return Err(Error::InvalidParameter(format!("normalization error {norm:.3e}")));
        }
        let deviation = self.signaling_deviation();
        if deviation > TABLE_TOL {
            return Err(Error::Signaling { deviation });
        }
        Ok(())
    }

    fn setting_label(idx: usize, star: Option<usize>) -> String {
        if Some(idx) == star {
            "star".into()
        } else {
            (idx + 1).to_string()
        }
    }

    fn pauli_setting_label(n: usize, idx: usize) -> String {
        if n == 3 {
            return (idx + 1).to_string();
        }
        let qubits = (n as f64).log(3.0).round() as usize;
        ProjectorLabel::from_indices(qubits, idx, 0).axes.iter().map(|a| a.letter()).collect()
    }

    fn outcome_label(n: usize, idx: usize) -> String {
        if n == 2 {
            return if idx == 0 { "1".into() } else { "-1".into() };
        }
        let qubits = n.trailing_zeros() as usize;
        ProjectorLabel::from_indices(qubits, 0, idx).signs.iter().map(|s| s.symbol()).collect()
    }

    pub fn rows(&self) -> Vec<TableRow> {
        let [nz, _, _, nw] = self.settings;
        let [nc, na, nb, nd] = self.outcomes;
        let mut rows = Vec::with_capacity(self.values.len());
        for s in self.all_settings() {
            for o in self.all_outcomes() {
                rows.push(TableRow {
                    z: Self::pauli_setting_label(nz, s.z),
                    x: Self::setting_label(s.x, self.star[0]),
                    y: Self::setting_label(s.y, self.star[1]),
                    w: Self::pauli_setting_label(nw, s.w),
                    c: Self::outcome_label(nc, o.c),
                    a: Self::outcome_label(na, o.a),
                    b: Self::outcome_label(nb, o.b),
                    d: Self::outcome_label(nd, o.d),
                    p: self.get(s, o),
                });
            }
        }
        rows
    }

    /// CSV with header `z,x,y,w,c,a,b,d,p`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        for row in self.rows() {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> TableExport {
        TableExport { config_digest: self.digest.clone(), rows: self.rows() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub z: String,
    pub x: String,
    pub y: String,
    pub w: String,
    pub c: String,
    pub a: String,
    pub b: String,
    pub d: String,
    pub p: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableExport {
    pub config_digest: String,
    pub rows: Vec<TableRow>,
}

/// Full table. Each Bob-side effective operator is folded into `ρ_AB`
/// once, so entries cost a `d_A × d_A` trace.
pub fn probability_table(cfg: &NetworkConfig) -> Result<ProbabilityTable> {
    let settings = [cfg.charlie.len(), cfg.alice.len(), cfg.bob.len(), cfg.daisy.len()];
    let outcomes = [cfg.charlie.outcomes(), cfg.alice.outcomes(), cfg.bob.outcomes(), cfg.daisy.outcomes()];
    let [nz, nx, ny, nw] = settings;
    let [nc, na, nb, nd] = outcomes;
    let [da, db] = cfg.target_dims();

    // alice[z][c][x][a]
    let mut alice = Vec::with_capacity(nz * nc * nx * na);
    for z in 0..nz {
        for c in 0..nc {
            for x in 0..nx {
                for a in 0..na {
                    alice.push(cfg.alice_effective(z, c, x, a)?);
                }
            }
        }
    }
    // conditioned[y][b][w][d] = tr_B[(1 ⊗ E_B) ρ_AB]
    let id_a = Operator::identity(&[da]);
    let mut conditioned = Vec::with_capacity(ny * nb * nw * nd);
    for y in 0..ny {
        for b in 0..nb {
            for w in 0..nw {
                for d in 0..nd {
                    let eb = cfg.bob_effective(w, d, y, b)?.with_dims(vec![db])?;
                    let lifted = tensor(&id_a, &eb);
                    conditioned.push(partial_trace(&(&lifted * cfg.rho_ab.op()), &[0])?);
                }
            }
        }
    }

    let mut table = ProbabilityTable {
        settings,
        outcomes,
        star: [cfg.alice.star_index(), cfg.bob.star_index()],
        values: vec![0.0; nz * nx * ny * nw * nc * na * nb * nd],
        digest: cfg.digest(),
    };
    for z in 0..nz {
        for x in 0..nx {
            for y in 0..ny {
                for w in 0..nw {
                    for c in 0..nc {
                        for a in 0..na {
                            let ea = &alice[((z * nc + c) * nx + x) * na + a];
                            for b in 0..nb {
                                for d in 0..nd {
                                    let g = &conditioned[((y * nb + b) * nw + w) * nd + d];
                                    let idx = table.index(Setting { z, x, y, w }, Outcome { c, a, b, d });
                                    table.values[idx] = ea.trace_product(g).re;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(table)
}
