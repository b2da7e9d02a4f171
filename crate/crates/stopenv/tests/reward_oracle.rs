//! Exhaustive reward-equivalence check against an independently written
//! closed-form evaluator: every mode, action, correctness flag,
//! confidence level, and bonus regime, exact to 1e-9.

use stopenv::{compute_reward, RewardConfig, RewardInputs, RewardMode};

/// Reference evaluator, written from the published constants directly.
/// Kept deliberately separate from the implementation under test.
fn oracle(mode: RewardMode, inp: &RewardInputs, action: u8) -> f64 {
    const ZETA: f64 = 0.2;
    const XI: f64 = 0.1;
    const OMEGA: f64 = 0.01;
    const TAU: f64 = 0.85;
    let (alpha, beta, sigma, lambda) = match mode {
        RewardMode::Accuracy => (5.0, 0.5, 5.0, 0.0005),
        RewardMode::Balanced => (3.0, 0.3, 3.0, 0.001),
        RewardMode::Speed => (2.0, 0.5, 2.0, 0.005),
    };
    if action == 0 {
        let mut r = -lambda;
        if matches!(mode, RewardMode::Accuracy)
            && inp.max_confidence > TAU
            && inp.confidence_stability < 0.02
        {
            r -= OMEGA;
        }
        return r;
    }
    let correct = if inp.correct { 1.0 } else { 0.0 };
    let mut r = alpha * correct + beta * inp.max_confidence - sigma * (1.0 - correct);
    // early-stop bonus
    if inp.max_confidence > TAU {
        let shrink = 1.0 - inp.t as f64 / inp.t_max as f64;
        let in_window = match inp.t_first_correct {
            Some(tfc) => inp.t >= tfc && inp.t < tfc + 5,
            None => false,
        };
        r += if in_window { ZETA * shrink } else { 0.5 * ZETA * shrink };
    }
    // consecutive-correct bonus
    if inp.n_consec > 2 {
        r += XI * inp.n_consec as f64;
    }
    r
}

#[test]
fn reward_matches_oracle_on_full_grid() {
    let modes = [RewardMode::Accuracy, RewardMode::Balanced, RewardMode::Speed];
    let confidences: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let consec_counts = [0usize, 3, 5];
    let stabilities = [0.01f64, 0.05];
    // early-bonus regimes: no first-correct yet, inside the 5-step
    // window, outside it
    let tfc_cases: [Option<i64>; 3] = [None, Some(-2), Some(-20)];
    let times = [15usize, 20, 60, 124];

    let mut cases = 0usize;
    for mode in modes {
        let cfg = RewardConfig::for_mode(mode);
        for action in [0u8, 1] {
            for correct in [false, true] {
                for &conf in &confidences {
                    for &n_consec in &consec_counts {
                        for &sigma in &stabilities {
                            for tfc_offset in tfc_cases {
                                for &t in &times {
                                    let t_first_correct = tfc_offset
                                        .map(|off| (t as i64 + off).max(1) as usize);
                                    let inp = RewardInputs {
                                        t,
                                        t_max: 124,
                                        correct,
                                        max_confidence: conf,
                                        confidence_stability: sigma,
                                        n_consec,
                                        t_first_correct,
                                    };
                                    let got = compute_reward(&cfg, &inp, action);
                                    let want = oracle(mode, &inp, action);
                                    assert!(
                                        (got - want).abs() < 1e-9,
                                        "mode {mode:?} action {action} correct {correct} \
                                         conf {conf} n {n_consec} sigma {sigma} \
                                         tfc {t_first_correct:?} t {t}: {got} vs {want}"
                                    );
                                    cases += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(cases >= 3 * 2 * 2 * 10 * 3 * 2 * 3, "grid covered {cases} cases");
}
