//! Agent-level verification: TD gradient check at 64-bit, schedule and
//! action-frequency checks, soft-update algebra, replay statistics, and
//! exact checkpoint resumption.

use dqn::qnet::{ACTIONS, STATE_DIM};
use dqn::{Agent, AgentHyper, QNetwork, ReplayBuffer, Transition};
use numkit::gradcheck::central_difference_check;
use numkit::{Parameter, Prng, Tensor};

fn state_from(rng: &mut Prng) -> [f64; STATE_DIM] {
    let mut s = [0.0; STATE_DIM];
    for v in s.iter_mut() {
        *v = rng.uniform();
    }
    s
}

struct TdRig {
    net: QNetwork<f64>,
    states: Tensor<f64>,
    actions: Vec<usize>,
    targets: Vec<f64>,
}

impl TdRig {
    fn loss(&mut self) -> f64 {
        let q = self.net.forward(&self.states).unwrap();
        let n = self.actions.len();
        let mut loss = 0.0;
        for i in 0..n {
            let err = q.data()[i * ACTIONS + self.actions[i]] - self.targets[i];
            loss += err * err / n as f64;
        }
        loss
    }

    fn backward(&mut self) {
        let q = self.net.forward(&self.states).unwrap();
        let n = self.actions.len();
        let mut grad = Tensor::zeros(&[n, ACTIONS]);
        {
            let gd = grad.data_mut();
            for i in 0..n {
                let err = q.data()[i * ACTIONS + self.actions[i]] - self.targets[i];
                gd[i * ACTIONS + self.actions[i]] = 2.0 * err / n as f64;
            }
        }
        self.net.backward(&grad).unwrap();
    }

    fn params(&mut self) -> Vec<&mut Parameter<f64>> {
        self.net.params_mut()
    }
}

#[test]
fn td_loss_gradients_match_finite_differences() {
    // every parameter element is checked; the per-layer multi-seed
    // checks live in the numkit suite
    for seed in [1u64, 2] {
        let mut rng = Prng::new(seed);
        let n = 3;
        let states = Tensor::from_fn(&[n, STATE_DIM], |_| rng.uniform());
        let actions: Vec<usize> = (0..n).map(|_| (rng.uniform() < 0.5) as usize).collect();
        let targets: Vec<f64> = (0..n).map(|_| rng.uniform() * 2.0 - 1.0).collect();
        let mut rig = TdRig {
            net: QNetwork::new(seed),
            states,
            actions,
            targets,
        };
        let result = central_difference_check(
            &mut rig,
            |r| r.params(),
            |r| r.backward(),
            |r| r.loss(),
            1e-6,
        );
        assert!(
            result.max_rel_err < 1e-4,
            "seed {seed}: max rel err {:.3e}, worst {}",
            result.max_rel_err,
            result.worst
        );
    }
}

#[test]
fn epsilon_one_acts_uniformly() {
    let hyper = AgentHyper {
        epsilon_initial: 1.0,
        epsilon_final: 1.0,
        ..AgentHyper::default()
    };
    let mut agent = Agent::new(hyper, 7).unwrap();
    let mut rng = Prng::new(3);
    let n = 10_000;
    let mut stops = 0usize;
    for _ in 0..n {
        let s = state_from(&mut rng);
        if agent.act(&s, 0, true).unwrap() == 1 {
            stops += 1;
        }
    }
    let freq = stops as f64 / n as f64;
    assert!((freq - 0.5).abs() < 0.02, "stop frequency {freq}");
}

#[test]
fn epsilon_zero_is_pure_greedy() {
    let hyper = AgentHyper {
        epsilon_initial: 0.0,
        epsilon_final: 0.0,
        ..AgentHyper::default()
    };
    let mut agent = Agent::new(hyper, 11).unwrap();
    let mut rng = Prng::new(5);
    for _ in 0..200 {
        let s = state_from(&mut rng);
        let a = agent.act(&s, 0, true).unwrap();
        let g = agent.greedy(&s).unwrap();
        assert_eq!(a, g);
    }
}

#[test]
fn schedule_clamps_after_explore_horizon() {
    let hyper = AgentHyper {
        explore_steps: 100,
        ..AgentHyper::default()
    };
    let sched = hyper.schedule();
    assert_eq!(sched.value(100), hyper.epsilon_final);
    assert_eq!(sched.value(10_000), hyper.epsilon_final);
    assert_eq!(sched.value(0), hyper.epsilon_initial);
}

#[test]
fn soft_update_blends_parameters() {
    // scalar probes through the full-parameter path
    let mut agent = Agent::new(AgentHyper { tau: 0.01, ..AgentHyper::default() }, 0).unwrap();
    // force online = 1.0, target = 0.0 everywhere
    for p in agent.online_mut().params_mut() {
        p.value.fill(1.0);
    }
    for p in agent.target_mut().params_mut() {
        p.value.fill(0.0);
    }
    agent.soft_update().unwrap();
    for p in agent.target_mut().params_mut() {
        for &v in p.value.data() {
            assert!((v - 0.01).abs() < 1e-7, "blended value {v}");
        }
    }
    // geometric convergence at rate (1 - tau)
    let mut gap: f64 = 1.0 - 0.01;
    for _ in 0..50 {
        agent.soft_update().unwrap();
        gap *= 1.0 - 0.01;
    }
    let got = agent.target_mut().params_mut()[0].value.data()[0] as f64;
    assert!(
        ((1.0 - got) - gap).abs() < 1e-4,
        "after 51 updates gap {} vs geometric {gap}",
        1.0 - got
    );
}

#[test]
fn soft_update_tau_extremes() {
    for (tau, expect) in [(1.0, 1.0f32), (0.005, 0.005)] {
        let mut agent = Agent::new(AgentHyper { tau, ..AgentHyper::default() }, 0).unwrap();
        for p in agent.online_mut().params_mut() {
            p.value.fill(1.0);
        }
        for p in agent.target_mut().params_mut() {
            p.value.fill(0.0);
        }
        agent.soft_update().unwrap();
        let got = agent.target_mut().params_mut()[0].value.data()[0];
        assert!((got - expect).abs() < 1e-9, "tau {tau}: {got}");
    }
}

#[test]
fn replay_sampling_is_uniform_chi_squared() {
    let mut buf = ReplayBuffer::new(10);
    for i in 0..10 {
        buf.push(Transition {
            state: [i as f32; STATE_DIM],
            action: 0,
            reward: i as f32,
            next_state: [0.0; STATE_DIM],
            done: false,
        });
    }
    let mut rng = Prng::new(42);
    let draws = 100_000usize;
    let per_draw = 5usize;
    let mut counts = [0usize; 10];
    for _ in 0..draws / per_draw {
        for t in buf.sample(&mut rng, per_draw).unwrap() {
            counts[t.reward as usize] += 1;
        }
    }
    let expected = draws as f64 / 10.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    // 9 degrees of freedom, p > 0.01 ⇔ chi2 < 21.666
    assert!(chi2 < 21.666, "chi-squared {chi2}, counts {counts:?}");
}

#[test]
fn fixed_point_batch_has_zero_loss_and_zero_gradient() {
    let mut agent = Agent::new(AgentHyper::default(), 9).unwrap();
    // make Q identically 1: zero all weights, then set the final bias
    for p in agent.online_mut().params_mut() {
        p.value.fill(0.0);
    }
    let last = agent.online_mut().params_mut().len() - 1;
    agent.online_mut().params_mut()[last].value.fill(1.0);
    let snapshot: Vec<Vec<f32>> = agent
        .online_mut()
        .params_mut()
        .iter()
        .map(|p| p.value.data().to_vec())
        .collect();

    let batch: Vec<Transition> = (0..4)
        .map(|i| Transition {
            state: [i as f32 * 0.1; STATE_DIM],
            action: (i % 2) as u8,
            reward: 1.0,
            next_state: [0.0; STATE_DIM],
            done: true,
        })
        .collect();
    let loss = agent.td_update(&batch).unwrap();
    assert_eq!(loss, 0.0);
    // zero gradient: Adam leaves parameters unchanged
    for (p, before) in agent.online_mut().params_mut().iter().zip(&snapshot) {
        assert_eq!(p.value.data(), before.as_slice(), "param {} moved", p.name);
    }
}

#[test]
fn gamma_zero_reduces_target_to_reward() {
    let hyper = AgentHyper {
        gamma: 0.0,
        ..AgentHyper::default()
    };
    let mut agent = Agent::new(hyper, 13).unwrap();
    for p in agent.online_mut().params_mut() {
        p.value.fill(0.0);
    }
    for p in agent.target_mut().params_mut() {
        p.value.fill(0.0);
    }
    // Q == 0 everywhere, non-terminal: loss = mean(r^2) exactly
    let batch: Vec<Transition> = [0.5f32, -1.5]
        .iter()
        .map(|&r| Transition {
            state: [0.2; STATE_DIM],
            action: 1,
            reward: r,
            next_state: [0.9; STATE_DIM],
            done: false,
        })
        .collect();
    let loss = agent.td_update(&batch).unwrap();
    let expect = (0.25 + 2.25) / 2.0;
    assert!((loss - expect).abs() < 1e-6, "loss {loss} vs {expect}");
}

#[test]
fn hand_built_two_transition_batch_matches_hand_computation() {
    let hyper = AgentHyper {
        gamma: 0.9,
        ..AgentHyper::default()
    };
    let mut agent = Agent::new(hyper, 13).unwrap();
    // zero nets: Q == 0 and Q_target == 0
    for p in agent.online_mut().params_mut() {
        p.value.fill(0.0);
    }
    for p in agent.target_mut().params_mut() {
        p.value.fill(0.0);
    }
    let batch = vec![
        Transition {
            state: [0.1; STATE_DIM],
            action: 0,
            reward: 2.0,
            next_state: [0.3; STATE_DIM],
            done: false, // target = 2.0 + 0.9 * 0 = 2.0
        },
        Transition {
            state: [0.7; STATE_DIM],
            action: 1,
            reward: -1.0,
            next_state: [0.0; STATE_DIM],
            done: true, // target = -1.0
        },
    ];
    let loss = agent.td_update(&batch).unwrap();
    // predictions are 0: loss = (0-2)^2/2 + (0-(-1))^2/2 = 2.5
    assert!((loss - 2.5).abs() < 1e-6, "loss {loss}");
}

#[test]
fn save_load_resume_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mk_stream = |seed: u64, n: usize| -> Vec<Transition> {
        let mut rng = Prng::new(seed);
        (0..n)
            .map(|_| Transition {
                state: state_from(&mut rng).map(|v| v as f32),
                action: (rng.uniform() < 0.5) as u8,
                reward: (rng.uniform() * 2.0 - 1.0) as f32,
                next_state: state_from(&mut rng).map(|v| v as f32),
                done: rng.uniform() < 0.2,
            })
            .collect()
    };
    let hyper = AgentHyper {
        batch_size: 8,
        buffer_capacity: 64,
        explore_steps: 100,
        ..AgentHyper::default()
    };

    let feed = |agent: &mut Agent, stream: &[Transition]| {
        for t in stream {
            agent.remember(t.clone());
            agent.bump_step();
            agent.train_step().unwrap();
            agent.soft_update().unwrap();
        }
    };

    let part1 = mk_stream(100, 40);
    let part2 = mk_stream(200, 40);

    // straight-through run
    let mut a = Agent::new(hyper.clone(), 5).unwrap();
    feed(&mut a, &part1);
    feed(&mut a, &part2);
    let doc_a = a.to_checkpoint().to_document();

    // checkpointed run
    let mut b = Agent::new(hyper, 5).unwrap();
    feed(&mut b, &part1);
    let base = dir.path().join("agent-mid");
    b.save(&base).unwrap();
    let mut b2 = Agent::load(&base).unwrap();
    feed(&mut b2, &part2);
    let doc_b = b2.to_checkpoint().to_document();

    assert_eq!(doc_a, doc_b, "resumed agent diverged");
}
