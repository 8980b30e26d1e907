use super::*;
use crate::oracle::{equal_up_to_global_phase, DenseState};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAP: usize = 1 << 20;

fn m(d: u32) -> Modulus {
    Modulus::new(d).unwrap()
}

fn amps(t: &ParityTableau) -> Vec<Complex64> {
    t.expand_amplitudes(CAP).unwrap().amplitudes().to_vec()
}

fn assert_amps(t: &ParityTableau, expected: &[(usize, Complex64)]) {
    let got = amps(t);
    let mut want = vec![Complex64::new(0.0, 0.0); got.len()];
    for &(i, a) in expected {
        want[i] = a;
    }
    let a = DenseState::from_amplitudes(t.modulus(), t.labels().to_vec(), got).unwrap();
    let b = DenseState::from_amplitudes(t.modulus(), t.labels().to_vec(), want).unwrap();
    assert!(equal_up_to_global_phase(&a, &b, 1e-12), "{:?}", a.amplitudes());
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn bell(d: u32) -> ParityTableau {
    let mut t = ParityTableau::new(m(d), &[Prep::Plus, Prep::Zero]);
    t.apply_cnot(1, 2).unwrap();
    t
}

#[test]
fn new_plus_zero() {
    let t = ParityTableau::new(m(2), &[Prep::Plus, Prep::Zero]);
    assert_eq!(t.num_indeterminates(), 1);
    assert_eq!(t.coefficient_rows(), &[vec![1, 0, 0], vec![0, 1, 0]]);
    assert_eq!(t.phase_vector(), &[0, 0]);
    t.check_invariants().unwrap();
}

#[test]
fn new_three_plus() {
    let t = ParityTableau::new(m(2), &[Prep::Plus; 3]);
    assert_eq!(t.num_indeterminates(), 3);
    assert_eq!(t.rank(), 4);
}

#[test]
fn qutrit_plus_expansion() {
    let t = ParityTableau::new(m(3), &[Prep::Plus]);
    let a = 1.0 / 3f64.sqrt();
    assert_amps(&t, &[(0, c(a)), (1, c(a)), (2, c(a))]);
}

#[test]
fn pauli_x_rules() {
    let mut t = ParityTableau::new(m(2), &[Prep::Zero]);
    t.apply_x(1, 1).unwrap();
    assert_amps(&t, &[(1, c(1.0))]);

    let mut t = ParityTableau::new(m(2), &[Prep::Plus]);
    t.apply_x(1, 1).unwrap();
    assert_eq!(t.formula(1).unwrap(), vec![1, 1]);

    let mut t = ParityTableau::new(m(3), &[Prep::Zero]);
    t.apply_x(1, 1).unwrap();
    t.apply_x(1, 2).unwrap();
    assert_amps(&t, &[(0, c(1.0))]);
}

#[test]
fn pauli_z_rules() {
    let mut t = ParityTableau::new(m(2), &[Prep::Zero]);
    t.apply_z(1, 1).unwrap();
    assert_eq!(t.phase_vector(), &[0]);

    let mut t = ParityTableau::new(m(2), &[Prep::Plus]);
    t.apply_z(1, 1).unwrap();
    assert_eq!(t.phase_vector(), &[0, 1]);
    t.apply_z(1, 1).unwrap();
    assert_eq!(t.phase_vector(), &[0, 0]);
}

#[test]
fn cnot_rules() {
    let mut t = ParityTableau::new(m(2), &[Prep::Zero, Prep::Zero]);
    t.apply_x(1, 1).unwrap();
    t.apply_cnot(1, 2).unwrap();
    assert_amps(&t, &[(3, c(1.0))]);

    let mut t = ParityTableau::new(m(2), &[Prep::Plus, Prep::Plus]);
    t.apply_cnot(1, 2).unwrap();
    assert_eq!(t.formula(2).unwrap(), vec![0, 1, 1]);

    let mut t = ParityTableau::new(m(3), &[Prep::Zero, Prep::Zero]);
    t.apply_x(1, 2).unwrap();
    t.apply_x(2, 2).unwrap();
    t.apply_add(1, 2, 1).unwrap();
    assert_amps(&t, &[(2 * 3 + 1, c(1.0))]);

    assert_eq!(t.apply_cnot(1, 1), Err(TableauError::SameQubit(1)));
    assert_eq!(t.apply_cnot(1, 9), Err(TableauError::UnknownQubit(9)));
}

#[test]
fn measure_x_isolated_plus_is_deterministic() {
    let mut t = ParityTableau::new(m(2), &[Prep::Plus, Prep::Zero]);
    let before = t.clone();
    let r = t.measure_x(1, &mut OutcomeSource::forced([])).unwrap();
    assert_eq!(r, Measurement { outcome: 0, random: false });
    assert_eq!(t.canonicalize(), before.canonicalize());
}

#[test]
fn measure_x_on_bell_pair() {
    let mut t = bell(2);
    let r = t.measure_x(1, &mut OutcomeSource::forced([0])).unwrap();
    assert!(r.random);
    assert_eq!(t.num_indeterminates(), 2);
    let h = 0.5;
    // X outcome +1 on qubit 1 leaves |+⟩|+⟩
    assert_amps(&t, &[(0, c(h)), (1, c(h)), (2, c(h)), (3, c(h))]);
}

#[test]
fn measure_x_on_constant_qubit() {
    let mut t = ParityTableau::new(m(2), &[Prep::Zero]);
    let r = t.measure_x(1, &mut OutcomeSource::forced([1])).unwrap();
    assert_eq!(r, Measurement { outcome: 1, random: true });
    assert_eq!(t.num_indeterminates(), 1);
    assert_eq!(t.phase_vector(), &[0, 1]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert_amps(&t, &[(0, c(h)), (1, c(-h))]);
}

#[test]
fn qudit_x_outcome_is_eigenvalue_exponent() {
    // Z^2|+⟩ over d = 5 is the X eigenvector with eigenvalue ω^{-2}
    let mut t = ParityTableau::new(m(5), &[Prep::Plus]);
    t.apply_z(1, 2).unwrap();
    let r = t.measure_x(1, &mut OutcomeSource::forced([])).unwrap();
    assert_eq!(r, Measurement { outcome: 3, random: false });
}

#[test]
fn second_x_measurement_is_deterministic() {
    for d in [2, 3, 5] {
        let mut t = bell(d);
        let first = t.measure_x(2, &mut OutcomeSource::forced([d - 1])).unwrap();
        let second = t.measure_x(2, &mut OutcomeSource::forced([])).unwrap();
        assert!(first.random && !second.random);
        assert_eq!(first.outcome, second.outcome);
    }
}

#[test]
fn measure_z_cases() {
    let mut t = ParityTableau::new(m(2), &[Prep::Zero]);
    assert_eq!(t.measure_z(1, &mut OutcomeSource::forced([])).unwrap(), Measurement { outcome: 0, random: false });

    let mut t = bell(2);
    let r = t.measure_z(1, &mut OutcomeSource::forced([1])).unwrap();
    assert_eq!(r, Measurement { outcome: 1, random: true });
    assert_eq!(t.num_indeterminates(), 0);
    assert_eq!(t.formula(1).unwrap(), vec![1]);
    assert_eq!(t.formula(2).unwrap(), vec![1]);
    assert_amps(&t, &[(3, c(1.0))]);
}

#[test]
fn destructive_measurements() {
    let mut t = ParityTableau::new(m(2), &[Prep::Plus, Prep::Zero]);
    t.measure_z_destructive(2, &mut OutcomeSource::forced([])).unwrap();
    assert_eq!(t.labels(), &[1]);
    assert_eq!(t.num_indeterminates(), 1);

    let mut t = bell(2);
    t.measure_z_destructive(1, &mut OutcomeSource::forced([0])).unwrap();
    assert_eq!(t.labels(), &[2]);
    assert_eq!(t.formula(2).unwrap(), vec![0]);

    let mut t = ParityTableau::new(m(2), &[Prep::Plus, Prep::Zero, Prep::Zero]);
    t.apply_cnot(1, 2).unwrap();
    t.apply_cnot(2, 3).unwrap();
    t.measure_z_destructive(2, &mut OutcomeSource::forced([1])).unwrap();
    assert_eq!(t.labels(), &[1, 3]);
    assert_amps(&t, &[(3, c(1.0))]);
}

#[test]
fn measuring_the_only_qubit_leaves_a_valid_tableau() {
    let mut t = ParityTableau::new(m(3), &[Prep::Plus]);
    t.measure_z_destructive(1, &mut OutcomeSource::forced([2])).unwrap();
    assert_eq!(t.num_qubits(), 0);
    assert_eq!(t.num_indeterminates(), 0);
    t.check_invariants().unwrap();
}

#[test]
fn phase_correction_examples() {
    let t = bell(2);
    assert!(t.find_phase_correction().is_empty());

    let mut t = ParityTableau::new(m(2), &[Prep::Plus]);
    t.apply_z(1, 1).unwrap();
    assert_eq!(t.find_phase_correction(), vec![(1, 1)]);
    t.apply_corrections(&[(1, 1)]).unwrap();
    assert!(t.is_phase_free());
}

#[test]
fn terminate_middle_of_chain_gives_bell_pair() {
    for d in [2, 3, 5] {
        for s in 0..d {
            let mut t = ParityTableau::new(m(d), &[Prep::Plus, Prep::Zero, Prep::Zero]);
            t.apply_cnot(1, 2).unwrap();
            t.apply_cnot(2, 3).unwrap();
            let rec = t.terminate(2, &mut OutcomeSource::forced([s]), TerminateMode::Remove).unwrap();
            assert!(rec.measurement.random);
            assert!(t.is_phase_free());
            let expected = DenseState::ghz_product(m(d), &[vec![1, 3]]).unwrap();
            assert!(equal_up_to_global_phase(&t.expand_amplitudes(CAP).unwrap(), &expected, 1e-12));
        }
    }
}

#[test]
fn terminate_product_plus_is_a_no_op() {
    let mut t = bell(2);
    t.prepare(3, Prep::Plus).unwrap();
    let before = t.clone();
    let rec = t.terminate(3, &mut OutcomeSource::forced([]), TerminateMode::RetainPlus).unwrap();
    assert_eq!(rec.measurement, Measurement { outcome: 0, random: false });
    assert!(rec.corrections.is_empty());
    assert_eq!(t.canonicalize(), before.canonicalize());
}

#[test]
fn terminate_retain_keeps_qubit_as_plus() {
    let mut t = bell(3);
    t.terminate(2, &mut OutcomeSource::forced([2]), TerminateMode::RetainPlus).unwrap();
    let mut expected = ParityTableau::new(m(3), &[Prep::Plus, Prep::Plus]);
    expected.clear_global_phase();
    assert_eq!(t.canonicalize(), expected.canonicalize());
}

#[test]
fn discard_rejects_entangled_qubit() {
    let mut t = bell(2);
    assert_eq!(t.discard(1), Err(TableauError::Entangled(1)));
    assert!(!t.is_disentangled(2).unwrap());
}

#[test]
fn reprepare_disentangled_qubit() {
    let mut t = bell(2);
    t.measure_z(2, &mut OutcomeSource::forced([1])).unwrap();
    t.prepare(2, Prep::Plus).unwrap();
    assert_eq!(t.num_indeterminates(), 1);
    t.check_invariants().unwrap();
}

#[test]
fn expansion_of_bell_states() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut t = bell(2);
    assert_amps(&t, &[(0, c(h)), (3, c(h))]);
    t.apply_z(1, 1).unwrap();
    assert_eq!(t.phase_vector(), &[0, 1]);
    assert_amps(&t, &[(0, c(h)), (3, c(-h))]);
}

#[test]
fn expansion_cap() {
    let t = ParityTableau::new(m(2), &[Prep::Plus; 5]);
    assert!(matches!(t.expand_amplitudes(16), Err(TableauError::ExpansionTooLarge { .. })));
}

#[test]
fn expansion_uses_label_order() {
    let mut t = ParityTableau::empty(m(2));
    t.prepare(7, Prep::Zero).unwrap();
    t.prepare(3, Prep::Zero).unwrap();
    t.apply_x(7, 1).unwrap();
    let s = t.expand_amplitudes(CAP).unwrap();
    assert_eq!(s.qubits(), &[3, 7]);
    assert!((s.amplitudes()[1] - c(1.0)).norm() < 1e-12);
}

#[test]
fn new_tableau_is_canonical() {
    let t = ParityTableau::new(m(3), &[Prep::Plus, Prep::Zero, Prep::Plus]);
    assert_eq!(t.canonicalize(), t);
}

#[test]
fn json_round_trip() {
    let mut t = bell(3);
    t.apply_z(2, 2).unwrap();
    let text = serde_json::to_string(&t).unwrap();
    let back: ParityTableau = serde_json::from_str(&text).unwrap();
    assert_eq!(back, t);
    assert!(serde_json::from_str::<ParityTableau>(r#"{"d":2,"labels":[1],"c":[[1,0],[0,0]],"p":[0,0]}"#).is_err());
}

// ---- randomized ------------------------------------------------------------

/// A tableau reached by a random sequence of QLNC operations.
pub(crate) fn random_tableau(rng: &mut ChaCha8Rng, d: Modulus, n: u32, steps: usize) -> ParityTableau {
    let preps: Vec<Prep> = (0..n).map(|_| if rng.random() { Prep::Plus } else { Prep::Zero }).collect();
    let mut t = ParityTableau::new(d, &preps);
    let mut src = OutcomeSource::seeded(rng.random());
    for _ in 0..steps {
        let q = rng.random_range(1..=n);
        let e = rng.random_range(1..d.get());
        match rng.random_range(0..10) {
            0 => t.apply_x(q, e).unwrap(),
            1 | 2 => t.apply_z(q, e).unwrap(),
            3..=6 => {
                let r = rng.random_range(1..=n);
                if r != q {
                    t.apply_add(q, r, e).unwrap();
                }
            }
            7 => {
                t.measure_x(q, &mut src).unwrap();
            }
            8 => {
                t.measure_z(q, &mut src).unwrap();
            }
            _ => {
                t.terminate(q, &mut src, TerminateMode::RetainPlus).unwrap();
            }
        }
    }
    t
}

/// Left-multiply by a random invertible `Q` with `Q e0 = e0`.
fn shuffle_rows(t: &ParityTableau, rng: &mut ChaCha8Rng) -> ParityTableau {
    let mut s = t.clone();
    let rows = s.rows.len();
    let d = s.d;
    for _ in 0..20 {
        if rows < 2 {
            break;
        }
        let a = rng.random_range(1..rows);
        let b = rng.random_range(0..rows);
        match rng.random_range(0..3) {
            0 if b != 0 => {
                s.rows.swap(a, b);
                s.phase.swap(a, b);
            }
            1 => s.scale_row(a, rng.random_range(1..d.get())),
            _ if b != a => s.add_row_multiple(b, a, rng.random_range(1..d.get())),
            _ => {}
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonical_form_is_idempotent_and_row_invariant(seed in any::<u64>(), d in prop::sample::select(vec![2u32, 3, 5]), n in 1u32..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tableau(&mut rng, m(d), n, 25);
        let canon = t.canonicalize();
        prop_assert_eq!(canon.canonicalize(), canon.clone());
        let shuffled = shuffle_rows(&t, &mut rng);
        shuffled.check_invariants().unwrap();
        prop_assert_eq!(shuffled.canonicalize(), canon);
    }

    #[test]
    fn canonical_equality_matches_state_equality(seed in any::<u64>(), n in 1u32..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_tableau(&mut rng, m(2), n, 12);
        let b = random_tableau(&mut rng, m(2), n, 12);
        let same = equal_up_to_global_phase(&a.expand_amplitudes(CAP).unwrap(), &b.expand_amplitudes(CAP).unwrap(), 1e-9);
        prop_assert_eq!(a.canonicalize() == b.canonicalize(), same);
    }

    #[test]
    fn phase_correction_clears_phase(seed in any::<u64>(), d in prop::sample::select(vec![2u32, 3, 5, 7]), n in 1u32..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = random_tableau(&mut rng, m(d), n, 40);
        let fix = t.find_phase_correction();
        t.apply_corrections(&fix).unwrap();
        prop_assert!(t.is_phase_free());
    }

    #[test]
    fn indeterminate_bookkeeping(seed in any::<u64>(), d in prop::sample::select(vec![2u32, 3, 5]), n in 1u32..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = random_tableau(&mut rng, m(d), n, 20);
        let q = rng.random_range(1..=n);
        let before = t.num_indeterminates();
        let r = t.measure_x(q, &mut OutcomeSource::seeded(seed)).unwrap();
        prop_assert_eq!(t.num_indeterminates(), before + r.random as usize);
        let before = t.num_indeterminates();
        let q = rng.random_range(1..=n);
        let r = t.measure_z(q, &mut OutcomeSource::seeded(seed)).unwrap();
        prop_assert_eq!(t.num_indeterminates() + r.random as usize, before);
        t.check_invariants().unwrap();
    }
}
