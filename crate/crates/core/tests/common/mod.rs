//! Reference computations shared by the integration tests. Everything here
//! works on raw matrices and avoids the library's reduction code paths.
#![allow(dead_code)]

use dicert::network::{
    MeasurementFamily, MeasurementSetting, NetworkConfig, Outcome, Povm, Setting, Support,
};
use dicert::qmath::{Operator, C64};
use dicert::states::{haar_ket, random_mixed, DensityMatrix};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

fn eye(n: usize) -> DMatrix<C64> {
    DMatrix::identity(n, n)
}

fn lifted(set: &MeasurementSetting, outcome: usize, aux_first: bool, target_dim: usize) -> DMatrix<C64> {
    let e = set.povm.effects()[outcome].matrix().clone();
    match (set.support, aux_first) {
        (Support::Joint, _) => e,
        (Support::Auxiliary, true) => kron(&e, &eye(target_dim)),
        (Support::Auxiliary, false) => kron(&eye(target_dim), &e),
    }
}

/// `tr[(M_C ⊗ M_A₀A ⊗ M_BB₀ ⊗ M_D)(ρ_CA₀ ⊗ ρ_AB ⊗ ρ_B₀D)]` on the full
/// six-party space.
pub fn direct_probability(cfg: &NetworkConfig, s: Setting, o: Outcome) -> f64 {
    let [da, db] = cfg.target_dims();
    let state = kron(&kron(cfg.rho_ca0.op().matrix(), cfg.rho_ab.op().matrix()), cfg.rho_b0d.op().matrix());
    let mc = cfg.charlie.effect(s.z, o.c).matrix().clone();
    let ma = lifted(&cfg.alice.settings()[s.x], o.a, true, da);
    let mb = lifted(&cfg.bob.settings()[s.y], o.b, false, db);
    let md = cfg.daisy.effect(s.w, o.d).matrix().clone();
    let m = kron(&kron(&kron(&mc, &ma), &mb), &md);
    (m * state).trace().re
}

/// Partial transpose of the second factor of a `da·db` square matrix.
pub fn partial_transpose_b(m: &DMatrix<C64>, da: usize, db: usize) -> DMatrix<C64> {
    DMatrix::from_fn(da * db, da * db, |r, c| {
        let (i, k) = (r / db, r % db);
        let (j, l) = (c / db, c % db);
        m[(i * db + l, j * db + k)]
    })
}

pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of `ρ^{T_B}`, which equals `tr[W ρ]` for the
/// unnormalized witness built from the corresponding eigenvector.
pub fn pt_min(rho: &DensityMatrix) -> f64 {
    let d = rho.dims();
    min_eigenvalue(&partial_transpose_b(rho.op().matrix(), d[0], d[1]))
}

/// Seeded Hilbert–Schmidt two-qubit state with a negative partial
/// transpose, found by rejection.
pub fn npt_state(seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let rho = random_mixed(&[2, 2], rng.next_u64()).unwrap();
        if pt_min(&rho) < -1e-6 {
            return rho;
        }
    }
}

fn random_projector_povm<R: Rng>(rng: &mut R, d: usize, dims: Vec<usize>) -> Povm {
    let p = haar_ket(rng, d).projector().with_dims(dims).unwrap();
    Povm::from_projector(&p).unwrap()
}

fn random_qubit_povm<R: Rng>(rng: &mut R) -> Povm {
    // rank-one projector plus a random unsharp split of it
    let p = haar_ket(rng, 2).projector();
    let t: f64 = rng.random_range(0.2..1.0);
    let e0 = p.scale(t);
    let e1 = &Operator::identity(&[2]) - &e0;
    Povm::new(vec![e0, e1]).unwrap()
}

/// Two-qubit network with random mixed states and random measurements,
/// including one joint setting for each relay.
pub fn random_config(seed: u64) -> NetworkConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = || random_mixed(&[2, 2], rng.next_u64()).unwrap();
    let (ca0, ab, b0d) = (state(), state(), state());
    let aux_family = |rng: &mut ChaCha8Rng| {
        MeasurementFamily::local((0..3).map(|_| random_qubit_povm(rng)).collect()).unwrap()
    };
    let relay_family = |rng: &mut ChaCha8Rng| {
        let mut settings: Vec<MeasurementSetting> = (0..6)
            .map(|_| MeasurementSetting { povm: random_qubit_povm(rng), support: Support::Auxiliary })
            .collect();
        settings.push(MeasurementSetting {
            povm: random_projector_povm(rng, 4, vec![2, 2]),
            support: Support::Joint,
        });
        MeasurementFamily::new(settings).unwrap()
    };
    let charlie = aux_family(&mut rng);
    let alice = relay_family(&mut rng);
    let bob = relay_family(&mut rng);
    let daisy = aux_family(&mut rng);
    NetworkConfig::new(ca0, ab, b0d, charlie, alice, bob, daisy).unwrap()
}

/// Random Hermitian operator with entries of order one.
pub fn random_hermitian(seed: u64, dims: &[usize]) -> Operator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = dims.iter().product();
    let g = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let h = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    Operator::new(h, dims.to_vec()).unwrap()
}
