//! Agents acting in environments driven by a finite-state map over events.
//!
//! An event is `e = (a, o, r)`, encoded as `(o * |A| + a) * |R| + r`. That is
//! the joint code of the pair `x = (o, a)`, `y = r`, so maps over events run
//! unchanged on the paired view.

use nalgebra::DMatrix;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{Criterion, PenaltyScheme};
use crate::feature_map::{memory_bound, FeatureMap};
use crate::rng::{stream_rng, streams};
use crate::selection::{select, Data, SelectionResult};
use crate::seq::{Alphabet, PairedSequence, SymbolSequence};

const TOL: f64 = 1e-12;
const KAPPA_MAX: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventAlphabet {
    pub actions: usize,
    pub observations: usize,
    pub rewards: usize,
}

impl EventAlphabet {
    pub fn new(actions: usize, observations: usize, rewards: usize) -> Result<Self> {
        if actions == 0 || observations == 0 || rewards == 0 {
            return Err(Error::input("action, observation and reward alphabets must be non-empty"));
        }
        Ok(EventAlphabet {
            actions,
            observations,
            rewards,
        })
    }

    pub fn size(&self) -> usize {
        self.actions * self.observations * self.rewards
    }

    pub fn encode(&self, e: Event) -> usize {
        (e.o * self.actions + e.a) * self.rewards + e.r
    }

    pub fn decode(&self, code: usize) -> Event {
        let r = code % self.rewards;
        let x = code / self.rewards;
        Event {
            a: x % self.actions,
            o: x / self.actions,
            r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub a: usize,
    pub o: usize,
    pub r: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    events: EventAlphabet,
    event_map: FeatureMap,
    /// `emissions[s * |A| + a]` is a distribution over `o * |R| + r`.
    emissions: Vec<Vec<f64>>,
}

impl Environment {
    pub fn new(events: EventAlphabet, event_map: FeatureMap, emissions: Vec<Vec<f64>>) -> Result<Self> {
        if event_map.alphabet_size() != events.size() {
            return Err(Error::input(format!(
                "event map consumes {} symbols, event alphabet has {}",
                event_map.alphabet_size(),
                events.size()
            )));
        }
        if !memory_bound(&event_map, KAPPA_MAX).bounded {
            return Err(Error::input(format!("event map {} is not bounded-memory", event_map.id())));
        }
        let rows = event_map.state_count() * events.actions;
        if emissions.len() != rows {
            return Err(Error::input(format!("expected {rows} (state, action) rows, got {}", emissions.len())));
        }
        let width = events.observations * events.rewards;
        for (i, row) in emissions.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.len() != width || row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > TOL {
                return Err(Error::input(format!(
                    "emission row for state {} action {} is not a distribution over {width} (o, r) pairs",
                    i / events.actions,
                    i % events.actions
                )));
            }
        }
        Ok(Environment {
            events,
            event_map,
            emissions,
        })
    }

    pub fn events(&self) -> EventAlphabet {
        self.events
    }

    pub fn event_map(&self) -> &FeatureMap {
        &self.event_map
    }

    pub fn emissions(&self) -> &[Vec<f64>] {
        &self.emissions
    }

    pub fn emission(&self, state: usize, action: usize, o: usize, r: usize) -> f64 {
        self.emissions[state * self.events.actions + action][o * self.events.rewards + r]
    }
}

/// Map over events whose state is the last reward, starting at reward 0.
pub fn last_reward_map(events: EventAlphabet) -> FeatureMap {
    let psi = (0..events.rewards)
        .flat_map(|_| (0..events.size()).map(move |e| e % events.rewards))
        .collect();
    FeatureMap::general(Some("last-reward".into()), events.size(), events.rewards, 0, psi).expect("valid table")
}

/// Stationary policy: `table[(s, a)] = pi(a | s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    table: DMatrix<f64>,
}

impl Policy {
    pub fn new(table: DMatrix<f64>) -> Result<Self> {
        for s in 0..table.nrows() {
            let row = table.row(s);
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (row.sum() - 1.0).abs() > TOL {
                return Err(Error::input(format!("policy row {s} is not a distribution")));
            }
        }
        Ok(Policy { table })
    }

    pub fn uniform(states: usize, actions: usize) -> Self {
        Policy {
            table: DMatrix::from_element(states, actions, 1.0 / actions as f64),
        }
    }

    pub fn table(&self) -> &DMatrix<f64> {
        &self.table
    }

    fn check(&self, env: &Environment) -> Result<()> {
        if self.table.nrows() != env.event_map.state_count() || self.table.ncols() != env.events.actions {
            return Err(Error::input(format!(
                "policy is {}x{}, environment needs {}x{}",
                self.table.nrows(),
                self.table.ncols(),
                env.event_map.state_count(),
                env.events.actions
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSequence {
    pub alphabet: EventAlphabet,
    pub events: Vec<Event>,
}

impl EventSequence {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn symbols(&self) -> SymbolSequence {
        let items = self.events.iter().map(|&e| self.alphabet.encode(e)).collect();
        SymbolSequence::new(Alphabet::new(self.alphabet.size()).expect("non-empty"), items).expect("in range")
    }

    /// `x_t = (o_t, a_t)` coded `o * |A| + a`, `y_t = r_t`.
    pub fn to_paired(&self) -> PairedSequence {
        let a = self.alphabet;
        let items = self.events.iter().map(|e| (e.o * a.actions + e.a, e.r)).collect();
        PairedSequence::new(
            Alphabet::new(a.observations * a.actions).expect("non-empty"),
            Alphabet::new(a.rewards).expect("non-empty"),
            items,
        )
        .expect("in range")
    }
}

/// `a_t ~ pi(. | s_{t-1})`, `(o_t, r_t) ~ env(s_{t-1}, a_t)`,
/// `s_t = psi(s_{t-1}, e_t)`.
pub fn rollout(env: &Environment, policy: &Policy, n: usize, seed: u64) -> Result<EventSequence> {
    policy.check(env)?;
    let mut rng = stream_rng(seed, streams::POLICY);
    let acts: Vec<_> = (0..policy.table.nrows())
        .map(|s| WeightedIndex::new(policy.table.row(s).iter().copied()).expect("validated policy"))
        .collect();
    let outs: Vec<_> = env
        .emissions
        .iter()
        .map(|row| WeightedIndex::new(row.iter().copied()).expect("validated emission"))
        .collect();
    let ev = env.events;
    let mut s = env.event_map.start_state();
    let mut events = Vec::with_capacity(n);
    for _ in 0..n {
        let a = acts[s].sample(&mut rng);
        let or = outs[s * ev.actions + a].sample(&mut rng);
        let e = Event {
            a,
            o: or / ev.rewards,
            r: or % ev.rewards,
        };
        s = env.event_map.next(s, ev.encode(e));
        events.push(e);
    }
    Ok(EventSequence { alphabet: ev, events })
}

/// `T(s, s') = sum_a pi(a | s) sum_{(o, r) : psi(s, (a, o, r)) = s'} Pr(o, r | s, a)`.
pub fn induced_chain(env: &Environment, policy: &Policy) -> Result<DMatrix<f64>> {
    policy.check(env)?;
    let ev = env.events;
    let s_count = env.event_map.state_count();
    let mut t = DMatrix::zeros(s_count, s_count);
    for s in 0..s_count {
        for a in 0..ev.actions {
            for o in 0..ev.observations {
                for r in 0..ev.rewards {
                    let next = env.event_map.next(s, ev.encode(Event { a, o, r }));
                    t[(s, next)] += policy.table[(s, a)] * env.emission(s, a, o, r);
                }
            }
        }
    }
    Ok(t)
}

/// ICost selection on the paired view `x = (o, a)`, `y = r`.
pub fn active_select(events: &EventSequence, maps: &[FeatureMap], scheme: &PenaltyScheme) -> Result<SelectionResult> {
    select(maps, Data::Paired(&events.to_paired()), Criterion::ICost, scheme)
}
