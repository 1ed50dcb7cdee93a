//! Entanglement witnesses and their expansion over Pauli projectors.
//!
//! For a local dimension `2^n` the projector family consists of all
//! tensor products of `n` single-qubit projectors `π_{c|j}`, so there are
//! `6^n` of them. The family over-spans the Hermitian operators, and the
//! coefficients are fixed by pairing with the dual frame
//! `D_{c|j} = 1/6 + c σ_j / 2`, which spreads the identity weight evenly
//! over the three axes.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmath::{self, hermitian_eig, partial_trace, partial_transpose, tensor, Ket, Operator};
use crate::states::{self, haar_ket, DensityMatrix, PauliAxis, PauliProjector, Sign, ENTANGLEMENT_MARGIN};

/// Entrywise tolerance for `Σ ω π⊗π = W`.
pub const RECONSTRUCTION_TOL: f64 = 1e-9;
/// Lower bound on the number of restarts in the product-state search.
pub const MIN_RESTARTS: usize = 20;
const CONVERGENCE: f64 = 1e-10;
const MAX_SWEEPS: usize = 10_000;

/// One element of the projector family: a string of `(sign, axis)` pairs,
/// first qubit first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProjectorLabel {
    pub signs: Vec<Sign>,
    pub axes: Vec<PauliAxis>,
}

impl ProjectorLabel {
    pub fn qubit(sign: Sign, axis: PauliAxis) -> Self {
        Self { signs: vec![sign], axes: vec![axis] }
    }

    pub fn qubits(&self) -> usize {
        self.axes.len()
    }

    /// Base-3 index of the axis string, first qubit most significant.
    pub fn setting_index(&self) -> usize {
        self.axes.iter().fold(0, |acc, a| acc * 3 + a.position())
    }

    /// Binary index of the sign string (`-` is 1), first qubit most significant.
    pub fn outcome_index(&self) -> usize {
        self.signs.iter().fold(0, |acc, s| acc * 2 + s.slot())
    }

    pub fn from_indices(qubits: usize, setting: usize, outcome: usize) -> Self {
        let mut axes = Vec::with_capacity(qubits);
        let mut signs = Vec::with_capacity(qubits);
        for k in (0..qubits).rev() {
            axes.push(PauliAxis::ALL[(setting / 3usize.pow(k as u32)) % 3]);
            signs.push(Sign::from_slot((outcome >> k) & 1));
        }
        Self { signs, axes }
    }

    pub fn projector(&self) -> Operator {
        let factors: Vec<Operator> =
            self.signs.iter().zip(&self.axes).map(|(s, a)| PauliProjector::new(*s, *a).op().clone()).collect();
        qmath::tensor_all(&factors.iter().collect::<Vec<_>>())
    }

    fn dual(&self) -> Operator {
        let factors: Vec<Operator> = self
            .signs
            .iter()
            .zip(&self.axes)
            .map(|(s, a)| &Operator::identity(&[2]).scale(1.0 / 6.0) + &a.observable().scale(s.value() / 2.0))
            .collect();
        qmath::tensor_all(&factors.iter().collect::<Vec<_>>())
    }
}

impl fmt::Display for ProjectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, a) in self.signs.iter().zip(&self.axes) {
            write!(f, "{}{}", s.symbol(), a.letter())?;
        }
        Ok(())
    }
}

/// The `6^n` Pauli-projector strings on `n` qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProjectorFamily {
    qubits: usize,
}

impl ProjectorFamily {
    pub fn new(qubits: usize) -> Result<Self> {
        if qubits == 0 {
            return Err(Error::InvalidParameter("projector family needs at least one qubit".into()));
        }
        Ok(Self { qubits })
    }

    pub fn for_dimension(d: usize) -> Result<Self> {
        if d < 2 || !d.is_power_of_two() {
            return Err(Error::UnsupportedDimension(d));
        }
        Self::new(d.trailing_zeros() as usize)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dimension(&self) -> usize {
        1 << self.qubits
    }

    pub fn settings(&self) -> usize {
        3usize.pow(self.qubits as u32)
    }

    pub fn outcomes(&self) -> usize {
        self.dimension()
    }

    pub fn len(&self) -> usize {
        self.settings() * self.outcomes()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index is `setting * outcomes + outcome`.
    pub fn label(&self, flat: usize) -> ProjectorLabel {
        ProjectorLabel::from_indices(self.qubits, flat / self.outcomes(), flat % self.outcomes())
    }

    pub fn flat_index(&self, label: &ProjectorLabel) -> usize {
        label.setting_index() * self.outcomes() + label.outcome_index()
    }

    pub fn labels(&self) -> impl Iterator<Item = ProjectorLabel> + '_ {
        (0..self.len()).map(|i| self.label(i))
    }
}

/// Coefficients `ω_{ij}` of `W = Σ ω_{ij} π_i ⊗ π_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Omega {
    family_a: ProjectorFamily,
    family_b: ProjectorFamily,
    values: Vec<f64>,
}

impl Omega {
    pub fn zeros(family_a: ProjectorFamily, family_b: ProjectorFamily) -> Self {
        Self { family_a, family_b, values: vec![0.0; family_a.len() * family_b.len()] }
    }

    pub fn family_a(&self) -> ProjectorFamily {
        self.family_a
    }

    pub fn family_b(&self) -> ProjectorFamily {
        self.family_b
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.family_b.len() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let n = self.family_b.len();
        self.values[i * n + j] = value;
    }

    /// Two-qubit accessor `ω^{zw}_{cd}`.
    pub fn qubit(&self, c: Sign, d: Sign, z: PauliAxis, w: PauliAxis) -> f64 {
        let i = self.family_a.flat_index(&ProjectorLabel::qubit(c, z));
        let j = self.family_b.flat_index(&ProjectorLabel::qubit(d, w));
        self.get(i, j)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.family_b.len();
        self.values.iter().enumerate().map(move |(k, &v)| (k / n, k % n, v))
    }

    pub fn reconstruct(&self) -> Operator {
        let dims = [self.family_a.dimension(), self.family_b.dimension()];
        let pa: Vec<Operator> = self.family_a.labels().map(|l| l.projector()).collect();
        let pb: Vec<Operator> = self.family_b.labels().map(|l| l.projector()).collect();
        let mut acc = Operator::zeros(&dims);
        for (i, j, v) in self.iter() {
            if v != 0.0 {
                acc = &acc + &tensor(&pa[i], &pb[j]).scale(v);
            }
        }
        acc.with_dims(dims.to_vec()).expect("family dimensions match")
    }

    pub fn export(&self) -> OmegaExport {
        let nb = self.family_b.len();
        OmegaExport {
            dims: [self.family_a.dimension(), self.family_b.dimension()],
            row_labels: self.family_a.labels().map(|l| l.to_string()).collect(),
            col_labels: self.family_b.labels().map(|l| l.to_string()).collect(),
            omega: self.values.chunks(nb).map(|r| r.to_vec()).collect(),
        }
    }
}

/// Audit form of [`Omega`]: rows are Alice-side labels like `+Z`.
#[derive(Clone, Debug, Serialize)]
pub struct OmegaExport {
    pub dims: [usize; 2],
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub omega: Vec<Vec<f64>>,
}

fn bipartite_families(w: &Operator) -> Result<(ProjectorFamily, ProjectorFamily)> {
    match w.dims() {
        [da, db] => Ok((ProjectorFamily::for_dimension(*da)?, ProjectorFamily::for_dimension(*db)?)),
        other => Err(Error::InvalidDims(format!("witness must be bipartite, got dims {other:?}"))),
    }
}

/// Two-qubit expansion in closed form:
/// `ω^{zw}_{cd} = t₀₀/9 + c t_{z0}/3 + d t_{0w}/3 + c d t_{zw}`,
/// `t_{jk} = tr[W σ_j⊗σ_k]/4`.
pub fn decompose_pauli(w: &Operator) -> Result<Omega> {
    if w.side() != 4 {
        return Err(Error::DimensionMismatch { expected: "4x4 operator".into(), found: format!("side {}", w.side()) });
    }
    w.ensure_hermitian()?;
    let paulis: Vec<Operator> = std::iter::once(Operator::identity(&[2]))
        .chain(PauliAxis::ALL.iter().map(|a| a.observable()))
        .collect();
    let mut t = [[0.0; 4]; 4];
    for (j, sj) in paulis.iter().enumerate() {
        for (k, sk) in paulis.iter().enumerate() {
            t[j][k] = w.trace_product(&tensor(sj, sk)).re / 4.0;
        }
    }
    let fam = ProjectorFamily::new(1)?;
    let mut omega = Omega::zeros(fam, fam);
    for c in Sign::ALL {
        for d in Sign::ALL {
            for z in PauliAxis::ALL {
                for ww in PauliAxis::ALL {
                    let (zi, wi) = (z.index(), ww.index());
                    let value = t[0][0] / 9.0
                        + c.value() * t[zi][0] / 3.0
                        + d.value() * t[0][wi] / 3.0
                        + c.value() * d.value() * t[zi][wi];
                    let i = fam.flat_index(&ProjectorLabel::qubit(c, z));
                    let j = fam.flat_index(&ProjectorLabel::qubit(d, ww));
                    omega.set(i, j, value);
                }
            }
        }
    }
    Ok(omega)
}

/// Expansion for any `2^n × 2^m` witness via the dual frame,
/// `ω_{ij} = tr[W (D_i ⊗ D_j)]`.
pub fn decompose(w: &Operator) -> Result<Omega> {
    w.ensure_hermitian()?;
    let (fa, fb) = bipartite_families(w)?;
    let da: Vec<Operator> = fa.labels().map(|l| l.dual()).collect();
    let db: Vec<Operator> = fb.labels().map(|l| l.dual()).collect();
    let mut omega = Omega::zeros(fa, fb);
    for (i, di) in da.iter().enumerate() {
        for (j, dj) in db.iter().enumerate() {
            omega.set(i, j, w.trace_product(&tensor(di, dj)).re);
        }
    }
    Ok(omega)
}

/// A Hermitian witness together with its projector expansion.
#[derive(Clone, Debug)]
pub struct WitnessSpec {
    w: Operator,
    omega: Omega,
}

impl WitnessSpec {
    /// Validates `w` and computes its canonical coefficients.
    pub fn new(w: Operator) -> Result<Self> {
        let omega = if w.dims() == [2, 2] { decompose_pauli(&w)? } else { decompose(&w)? };
        let deviation = omega.reconstruct().max_abs_diff(&w);
        if deviation > RECONSTRUCTION_TOL {
            return Err(Error::InvalidParameter(format!("witness expansion residual {deviation:.3e}")));
        }
        Ok(Self { w, omega })
    }

    pub fn operator(&self) -> &Operator {
        &self.w
    }

    pub fn omega(&self) -> &Omega {
        &self.omega
    }

    pub fn dims(&self) -> &[usize] {
        self.w.dims()
    }

    /// `tr(W ρ)`
    pub fn value(&self, rho: &DensityMatrix) -> f64 {
        self.w.trace_product(rho.op()).re
    }
}

/// `W = (|η⟩⟨η|)^{T_B}` for the most negative eigenvector `η` of `ρ^{T_B}`.
pub fn witness_from_state(rho: &DensityMatrix) -> Result<WitnessSpec> {
    let spectrum = states::pt_spectrum(rho)?;
    if spectrum.min() >= -ENTANGLEMENT_MARGIN {
        return Err(Error::PptInput);
    }
    let eta = &spectrum.vectors[0];
    WitnessSpec::new(partial_transpose(&eta.projector(), 1)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub target_value: f64,
    pub min_separable_value: f64,
    pub restarts: usize,
}

/// Evaluates `W` on the target and searches for its minimum over product
/// states by seeded alternating minimization. `samples` restarts are used,
/// never fewer than [`MIN_RESTARTS`].
pub fn verify_witness(ws: &WitnessSpec, rho: &DensityMatrix, samples: usize, seed: u64) -> Result<WitnessReport> {
    if rho.dims() != ws.dims() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", ws.dims()),
            found: format!("{:?}", rho.dims()),
        });
    }
    let restarts = samples.max(MIN_RESTARTS);
    let min_separable_value = min_product_value(ws.operator(), restarts, seed)?;
    Ok(WitnessReport { target_value: ws.value(rho), min_separable_value, restarts })
}

/// `min ⟨a⊗b| W |a⊗b⟩` over pure product states, local search with restarts.
pub fn min_product_value(w: &Operator, restarts: usize, seed: u64) -> Result<f64> {
    let [da, db] = match w.dims() {
        [a, b] => [*a, *b],
        other => return Err(Error::InvalidDims(format!("witness must be bipartite, got dims {other:?}"))),
    };
    w.ensure_hermitian()?;
    let id_a = Operator::identity(&[da]);
    let id_b = Operator::identity(&[db]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..restarts.max(1) {
        let mut a: Ket = haar_ket(&mut rng, da);
        let mut b: Ket;
        let mut value = f64::INFINITY;
        for _ in 0..MAX_SWEEPS {
            let on_b = partial_trace(&(w * &tensor(&a.projector(), &id_b)), &[1])?;
            let eig = hermitian_eig(&on_b)?;
            b = eig.vectors[0].clone();
            let on_a = partial_trace(&(w * &tensor(&id_a, &b.projector())), &[0])?;
            let eig = hermitian_eig(&on_a)?;
            a = eig.vectors[0].clone();
            let improved = eig.min();
            let done = value - improved < CONVERGENCE;
            value = value.min(improved);
            if done {
                break;
            }
        }
        best = best.min(value);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{bell_phi_plus, isotropic, random_mixed, random_separable};

    fn singlet_witness() -> Operator {
        let phi = bell_phi_plus(2).unwrap().projector();
        &Operator::identity(&[2, 2]).scale(0.5) - &phi
    }

    #[test]
    fn label_indexing_roundtrip() {
        for n in 1..=3 {
            let fam = ProjectorFamily::new(n).unwrap();
            assert_eq!(fam.len(), 6usize.pow(n as u32));
            for flat in 0..fam.len() {
                assert_eq!(fam.flat_index(&fam.label(flat)), flat);
            }
        }
        let fam = ProjectorFamily::for_dimension(4).unwrap();
        assert_eq!(fam.qubits(), 2);
        assert!(ProjectorFamily::for_dimension(3).is_err());
        assert_eq!(ProjectorLabel::from_indices(2, 5, 2).to_string(), "-X+Y");
    }

    #[test]
    fn isotropic_witness_is_singlet_projector_transpose() {
        let rho = isotropic(0.8).unwrap();
        let ws = witness_from_state(&rho).unwrap();
        // no normalization is applied, so the match is exact up to phase-free scale 1
        assert!(ws.operator().max_abs_diff(&singlet_witness()) < 1e-9);
        assert!((ws.value(&rho) + 0.35).abs() < 1e-9);
    }

    #[test]
    fn ppt_states_are_refused() {
        assert!(matches!(witness_from_state(&isotropic(0.2).unwrap()), Err(Error::PptInput)));
        assert!(matches!(witness_from_state(&isotropic(1.0 / 3.0).unwrap()), Err(Error::PptInput)));
        assert!(matches!(witness_from_state(&random_separable(2, 3).unwrap()), Err(Error::PptInput)));
    }

    #[test]
    fn phi_plus_target_value() {
        let rho = isotropic(1.0).unwrap();
        let ws = witness_from_state(&rho).unwrap();
        assert!((ws.value(&rho) + 0.5).abs() < 1e-9);
    }

    #[test]
    fn singlet_witness_coefficients() {
        let omega = decompose_pauli(&singlet_witness()).unwrap();
        let v = omega.qubit(Sign::Plus, Sign::Plus, PauliAxis::Z, PauliAxis::Z);
        assert!((v + 2.0 / 9.0).abs() < 1e-12);
        // t00/9 + cd t_YY with t_YY = +1/4
        let v = omega.qubit(Sign::Plus, Sign::Minus, PauliAxis::Y, PauliAxis::Y);
        assert!((v - (1.0 / 36.0 - 0.25)).abs() < 1e-12);
        let v = omega.qubit(Sign::Plus, Sign::Plus, PauliAxis::Z, PauliAxis::X);
        assert!((v - 1.0 / 36.0).abs() < 1e-12);
        assert!(omega.reconstruct().max_abs_diff(&singlet_witness()) < 1e-12);
    }

    #[test]
    fn identity_spreads_evenly() {
        let omega = decompose_pauli(&Operator::identity(&[2, 2])).unwrap();
        assert!(omega.iter().all(|(_, _, v)| (v - 1.0 / 9.0).abs() < 1e-15));
        assert!(omega.reconstruct().max_abs_diff(&Operator::identity(&[2, 2])) < 1e-14);
    }

    #[test]
    fn closed_form_matches_dual_frame() {
        for seed in 0..10 {
            let w = random_mixed(&[2, 2], seed).unwrap().into_op();
            let a = decompose_pauli(&w).unwrap();
            let b = decompose(&w).unwrap();
            assert!(a.iter().zip(b.iter()).all(|((_, _, x), (_, _, y))| (x - y).abs() < 1e-13));
        }
    }

    #[test]
    fn high_dimensional_reconstruction() {
        let w = random_mixed(&[4, 2], 11).unwrap().into_op();
        let omega = decompose(&w).unwrap();
        assert_eq!(omega.family_a().len(), 36);
        assert!(omega.reconstruct().max_abs_diff(&w) < RECONSTRUCTION_TOL);
        assert!(decompose(&Operator::identity(&[3, 2])).is_err());
    }

    #[test]
    fn decomposition_rejects_non_hermitian() {
        let mut rows = vec![vec![qmath::C64::new(0.0, 0.0); 4]; 4];
        rows[0][1] = qmath::C64::new(1.0, 0.0);
        let w = Operator::from_rows(vec![2, 2], &rows).unwrap();
        assert!(matches!(decompose_pauli(&w), Err(Error::NotHermitian { .. })));
        assert!(matches!(WitnessSpec::new(w), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn verify_isotropic_witness() {
        let rho = isotropic(0.8).unwrap();
        let ws = witness_from_state(&rho).unwrap();
        let report = verify_witness(&ws, &rho, 20, 1).unwrap();
        assert!((report.target_value + 0.35).abs() < 1e-9);
        assert!(report.min_separable_value >= -1e-9);
        // product states orthogonal to the singlet reach zero
        assert!(report.min_separable_value.abs() < 1e-8);
    }

    #[test]
    fn verify_identity_witness() {
        let ws = WitnessSpec::new(Operator::identity(&[2, 2])).unwrap();
        let report = verify_witness(&ws, &isotropic(0.5).unwrap(), 5, 2).unwrap();
        assert_eq!(report.restarts, MIN_RESTARTS);
        assert!((report.min_separable_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn verify_rejects_mismatched_dims() {
        let ws = WitnessSpec::new(Operator::identity(&[2, 2])).unwrap();
        let rho = DensityMatrix::maximally_mixed(&[2, 4]);
        assert!(verify_witness(&ws, &rho, 1, 0).is_err());
    }
}
