//! States used by the protocol, the single-qubit Pauli building blocks,
//! seeded samplers and the PPT entanglement oracle.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::qmath::{self, hermitian_eig, partial_transpose, Ket, Operator, C64, HERMITIAN_TOL};

/// Eigenvalue floor below which an operator is not accepted as a state.
pub const PSD_FLOOR: f64 = -1e-7;
/// A bipartite state is reported NPT when its partial transpose has an
/// eigenvalue strictly below `-ENTANGLEMENT_MARGIN`.
pub const ENTANGLEMENT_MARGIN: f64 = 1e-9;

/// A validated density matrix: Hermitian, unit trace, PSD.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        op.ensure_hermitian()?;
        let trace = op.trace();
        if (trace.re - 1.0).abs() > HERMITIAN_TOL || trace.im.abs() > HERMITIAN_TOL {
            return Err(Error::BadTrace { trace: trace.re });
        }
        let min_eigenvalue = qmath::min_eigenvalue(&op)?;
        if min_eigenvalue < PSD_FLOOR {
            return Err(Error::NotPsd { min_eigenvalue });
        }
        Ok(Self { op })
    }

    pub fn pure(ket: &Ket) -> Self {
        Self { op: ket.projector() }
    }

    pub fn maximally_mixed(dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        Self { op: Operator::identity(dims).scale(1.0 / n as f64) }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_op(self) -> Operator {
        self.op
    }

    pub fn dims(&self) -> &[usize] {
        self.op.dims()
    }

    /// `v·self + (1-v)·1/n`
    pub fn with_white_noise(&self, visibility: f64) -> Result<Self> {
        check_unit_interval("visibility", visibility)?;
        let n = self.op.side() as f64;
        let noise = Operator::identity(self.dims()).scale((1.0 - visibility) / n);
        Ok(Self { op: &self.op.scale(visibility) + &noise })
    }

    /// Partial transpose on one subsystem. Separable inputs stay states.
    pub fn partial_transpose(&self, subsystem: usize) -> Result<Operator> {
        partial_transpose(&self.op, subsystem)
    }

    pub fn expectation(&self, observable: &Operator) -> f64 {
        self.op.trace_product(observable).re
    }
}

pub(crate) fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

/// Measurement axis, numbered in the order `1 → σ_z, 2 → σ_x, 3 → σ_y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliAxis {
    Z,
    X,
    Y,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::Z, PauliAxis::X, PauliAxis::Y];

    pub fn from_index(index: usize) -> Result<Self> {
        match index {
            1 => Ok(PauliAxis::Z),
            2 => Ok(PauliAxis::X),
            3 => Ok(PauliAxis::Y),
            _ => Err(Error::InvalidIndex(format!("Pauli axis {index} not in 1..=3"))),
        }
    }

    /// One-based label.
    pub fn index(self) -> usize {
        self.position() + 1
    }

    /// Zero-based position.
    pub fn position(self) -> usize {
        match self {
            PauliAxis::Z => 0,
            PauliAxis::X => 1,
            PauliAxis::Y => 2,
        }
    }

    pub fn observable(self) -> Operator {
        match self {
            PauliAxis::Z => qmath::sigma_z(),
            PauliAxis::X => qmath::sigma_x(),
            PauliAxis::Y => qmath::sigma_y(),
        }
    }

    pub fn letter(self) -> char {
        match self {
            PauliAxis::Z => 'Z',
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
        }
    }
}

/// A two-valued outcome. Outcome slot 0 is `+1`, slot 1 is `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const ALL: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn slot(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn from_slot(slot: usize) -> Self {
        if slot == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// `π_{c|j} = (1 + c σ_j) / 2`
#[derive(Clone, Debug, PartialEq)]
pub struct PauliProjector {
    pub outcome: Sign,
    pub axis: PauliAxis,
    op: Operator,
}

impl PauliProjector {
    pub fn new(outcome: Sign, axis: PauliAxis) -> Self {
        let op = (&Operator::identity(&[2]) + &axis.observable().scale(outcome.value())).scale(0.5);
        Self { outcome, axis, op }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }
}

/// `(1/√d) Σ_i |ii⟩` over dims `[d, d]`.
pub fn bell_phi_plus(d: usize) -> Result<Ket> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("local dimension {d} < 2")));
    }
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut amps = DVector::zeros(d * d);
    for i in 0..d {
        amps[i * d + i] = amp;
    }
    Ket::new(amps, vec![d, d])
}

/// `p |Φ+⟩⟨Φ+| + (1 - p) 1/4`
pub fn isotropic(p: f64) -> Result<DensityMatrix> {
    check_unit_interval("p", p)?;
    DensityMatrix::pure(&bell_phi_plus(2)?).with_white_noise(p)
}

/// Labels of the six Pauli eigenstates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EigenLabel {
    Zero,
    One,
    Plus,
    Minus,
    R,
    L,
}

impl EigenLabel {
    pub const ALL: [EigenLabel; 6] =
        [EigenLabel::Zero, EigenLabel::One, EigenLabel::Plus, EigenLabel::Minus, EigenLabel::R, EigenLabel::L];

    /// The Pauli projector that fixes this state.
    pub fn stabilizer(self) -> (Sign, PauliAxis) {
        match self {
            EigenLabel::Zero => (Sign::Plus, PauliAxis::Z),
            EigenLabel::One => (Sign::Minus, PauliAxis::Z),
            EigenLabel::Plus => (Sign::Plus, PauliAxis::X),
            EigenLabel::Minus => (Sign::Minus, PauliAxis::X),
            EigenLabel::R => (Sign::Plus, PauliAxis::Y),
            EigenLabel::L => (Sign::Minus, PauliAxis::Y),
        }
    }
}

impl FromStr for EigenLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(EigenLabel::Zero),
            "1" => Ok(EigenLabel::One),
            "+" => Ok(EigenLabel::Plus),
            "-" | "−" => Ok(EigenLabel::Minus),
            "R" => Ok(EigenLabel::R),
            "L" => Ok(EigenLabel::L),
            other => Err(Error::InvalidParameter(format!("unknown eigenstate label {other:?}"))),
        }
    }
}

impl fmt::Display for EigenLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EigenLabel::Zero => "0",
            EigenLabel::One => "1",
            EigenLabel::Plus => "+",
            EigenLabel::Minus => "-",
            EigenLabel::R => "R",
            EigenLabel::L => "L",
        };
        f.write_str(s)
    }
}

pub fn pauli_eigenstate(label: EigenLabel) -> Ket {
    let h = 1.0 / 2f64.sqrt();
    let amps = match label {
        EigenLabel::Zero => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        EigenLabel::One => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        EigenLabel::Plus => [C64::new(h, 0.0), C64::new(h, 0.0)],
        EigenLabel::Minus => [C64::new(h, 0.0), C64::new(-h, 0.0)],
        EigenLabel::R => [C64::new(h, 0.0), C64::new(0.0, h)],
        EigenLabel::L => [C64::new(h, 0.0), C64::new(0.0, -h)],
    };
    Ket::from_slice(vec![2], &amps).expect("Pauli eigenstates are normalized")
}

/// Haar-random pure state of dimension `d`.
pub fn haar_ket<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Ket {
    loop {
        let amps = DVector::from_fn(d, |_, _| {
            C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        if let Ok(k) = Ket::normalized(amps, vec![d]) {
            return k;
        }
    }
}

/// Convex mixture of `num_terms` Haar-random pure product states on
/// `dims = [d_A, d_B]` with flat-Dirichlet weights.
pub fn random_separable_dims(dims: [usize; 2], num_terms: usize, seed: u64) -> Result<DensityMatrix> {
    if num_terms == 0 {
        return Err(Error::InvalidParameter("num_terms must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..num_terms).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = Operator::zeros(&dims);
    for w in weights {
        let a = haar_ket(&mut rng, dims[0]);
        let b = haar_ket(&mut rng, dims[1]);
        acc = &acc + &a.tensor(&b).projector().scale(w / total);
    }
    DensityMatrix::new(acc)
}

/// Two-qubit separable sample, see [`random_separable_dims`].
pub fn random_separable(num_terms: usize, seed: u64) -> Result<DensityMatrix> {
    random_separable_dims([2, 2], num_terms, seed)
}

/// Full-rank random state `G G† / tr(G G†)` with complex Gaussian `G`
/// (Hilbert–Schmidt measure).
pub fn random_mixed(dims: &[usize], seed: u64) -> Result<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = dims.iter().product();
    let g = DMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let gg = &g * g.adjoint();
    let tr = gg.trace().re;
    DensityMatrix::new(Operator::new(gg / C64::new(tr, 0.0), dims.to_vec())?)
}

/// Minimum eigenvalue of the partial transpose on the second subsystem.
pub fn min_pt_eigenvalue(rho: &DensityMatrix) -> Result<f64> {
    if rho.dims().len() != 2 {
        return Err(Error::InvalidDims(format!("expected a bipartite state, got dims {:?}", rho.dims())));
    }
    qmath::min_eigenvalue(&rho.partial_transpose(1)?)
}

/// Peres–Horodecki test: true iff the partial transpose has an eigenvalue
/// below `-1e-9`. Exact for two qubits and qubit–qutrit.
pub fn is_entangled_ppt(rho: &DensityMatrix) -> Result<bool> {
    Ok(min_pt_eigenvalue(rho)? < -ENTANGLEMENT_MARGIN)
}

/// Spectrum of the partial transpose, used by the witness builder.
pub(crate) fn pt_spectrum(rho: &DensityMatrix) -> Result<qmath::Eigen> {
    if rho.dims().len() != 2 {
        return Err(Error::InvalidDims(format!("expected a bipartite state, got dims {:?}", rho.dims())));
    }
    hermitian_eig(&rho.partial_transpose(1)?)
}
