//! Generation under masks: an event source proposes candidates, the engine
//! filters them, and only constraint-complete bundles ever leave this module.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Blueprint, Payload, Sink};

use super::{
    dispatch, render, CodeBundle, ConstraintState, EmissionEvent, EmitError, Framework,
};

pub trait EventProposer {
    /// Next candidate event, possibly invalid; `None` means the proposer has
    /// nothing further to say.
    fn next_candidate(&mut self, state: &ConstraintState) -> Option<EmissionEvent>;
}

/// The dispatcher itself as a proposer; admissible by construction.
pub struct ReferenceProposer {
    events: VecDeque<EmissionEvent>,
}

impl ReferenceProposer {
    pub fn new(bp: &Blueprint, mu: Framework) -> ReferenceProposer {
        ReferenceProposer {
            events: dispatch(bp, mu).into(),
        }
    }
}

impl EventProposer for ReferenceProposer {
    fn next_candidate(&mut self, _state: &ConstraintState) -> Option<EmissionEvent> {
        self.events.pop_front()
    }
}

/// Wraps the reference stream and injects invalid candidates: mangled tags,
/// bogus files, corrupted binding values, illegal sinks, and duplicate binds.
/// The injection rate is floored so at least `min_invalid` of all proposals
/// are invalid.
pub struct FuzzProposer {
    reference: VecDeque<EmissionEvent>,
    rng: ChaCha8Rng,
    corrupt_prob: f64,
    min_invalid: f64,
    proposed: u64,
    injected: u64,
    last_accepted_bind: Option<EmissionEvent>,
}

impl FuzzProposer {
    pub fn new(bp: &Blueprint, mu: Framework, seed: u64) -> FuzzProposer {
        FuzzProposer {
            reference: dispatch(bp, mu).into(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            corrupt_prob: 0.35,
            min_invalid: 0.30,
            proposed: 0,
            injected: 0,
            last_accepted_bind: None,
        }
    }

    pub fn injected_invalid(&self) -> u64 {
        self.injected
    }

    pub fn proposed(&self) -> u64 {
        self.proposed
    }

    /// A candidate that is inadmissible no matter what the engine expects:
    /// names and values are mangled with a reserved marker, sinks are moved
    /// off their type's allowed set, or an already-consumed bind is replayed.
    fn corrupt(&mut self, next: &EmissionEvent) -> EmissionEvent {
        let pick = self.rng.gen_range(0..6);
        match (pick, next) {
            (0, _) => EmissionEvent::CloseTag("__fuzz__".into()),
            (1, _) => EmissionEvent::FileStart("__fuzz__.txt".into()),
            (2, _) => EmissionEvent::OpenTag("__fuzz__".into()),
            (
                3,
                EmissionEvent::BindProp {
                    template_id,
                    prop,
                    sink,
                    value,
                },
            ) => EmissionEvent::BindProp {
                template_id: template_id.clone(),
                prop: prop.clone(),
                sink: *sink,
                value: match value {
                    Payload::None => Payload::Text("__fuzz__".into()),
                    v => match v {
                        Payload::Text(s) => Payload::Text(format!("{s}__fuzz__")),
                        Payload::Url(s) => Payload::Url(format!("{s}__fuzz__")),
                        Payload::ImageSrc(s) => Payload::ImageSrc(format!("{s}__fuzz__")),
                        Payload::Placeholder(s) => Payload::Placeholder(format!("{s}__fuzz__")),
                        Payload::None => unreachable!(),
                    },
                },
            },
            (
                4,
                EmissionEvent::BindProp {
                    template_id,
                    prop,
                    sink,
                    value,
                },
            ) => EmissionEvent::BindProp {
                template_id: template_id.clone(),
                prop: prop.clone(),
                // a sink outside the prop type's allowed set
                sink: match sink {
                    Sink::Placeholder => Sink::TextContent,
                    _ => Sink::Placeholder,
                },
                value: value.clone(),
            },
            (5, _) if self.last_accepted_bind.is_some() => {
                self.last_accepted_bind.clone().unwrap()
            }
            (_, _) => EmissionEvent::Attr {
                name: "__fuzz__".into(),
                value: "x".into(),
            },
        }
    }
}

impl EventProposer for FuzzProposer {
    fn next_candidate(&mut self, _state: &ConstraintState) -> Option<EmissionEvent> {
        let next = self.reference.front()?.clone();
        self.proposed += 1;
        let behind_target =
            (self.injected as f64) < self.min_invalid * (self.proposed as f64);
        if behind_target || self.rng.gen_bool(self.corrupt_prob) {
            self.injected += 1;
            return Some(self.corrupt(&next));
        }
        self.reference.pop_front();
        if matches!(next, EmissionEvent::BindProp { .. }) {
            self.last_accepted_bind = Some(next.clone());
        }
        Some(next)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FilterStats {
    pub proposed: u64,
    pub accepted: u64,
    pub rejected: u64,
}

impl FilterStats {
    pub fn rejection_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.rejected as f64 / self.proposed as f64
        }
    }
}

/// Greedy generation loop: request candidates, step the admissible ones,
/// reject the rest, and render once the proposer is exhausted. The result is
/// always constraint-complete or an error; no partially-constrained bundle
/// can be returned.
pub fn propose_and_filter(
    bp: &Blueprint,
    mu: Framework,
    proposer: &mut dyn EventProposer,
    fuel: u64,
) -> Result<(CodeBundle, FilterStats), EmitError> {
    let mut state = ConstraintState::new(bp, mu);
    let mut accepted_events: Vec<EmissionEvent> = Vec::new();
    let mut stats = FilterStats::default();
    let mut fuel_left = fuel;
    while let Some(candidate) = proposer.next_candidate(&state) {
        if fuel_left == 0 {
            return Err(EmitError::FuelExhausted {
                accepted: stats.accepted,
                rejected: stats.rejected,
            });
        }
        fuel_left -= 1;
        stats.proposed += 1;
        if state.admissible(&candidate) {
            state
                .step(&candidate)
                .expect("admissible events always step");
            accepted_events.push(candidate);
            stats.accepted += 1;
        } else {
            stats.rejected += 1;
        }
    }
    if !state.is_complete() {
        return Err(EmitError::IncompleteStream(format!(
            "proposer exhausted with {} of {} props bound",
            state.bound_count(),
            state.ledger_size()
        )));
    }
    let bundle = render(bp, &accepted_events, mu)?;
    Ok((bundle, stats))
}

/// Reference emission: dispatch and render in one step.
pub fn emit_bundle(bp: &Blueprint, mu: Framework) -> Result<CodeBundle, EmitError> {
    let events = dispatch(bp, mu);
    render(bp, &events, mu).map_err(|e| match e {
        // the reference stream failing its own engine is a dispatcher bug
        EmitError::InadmissibleEvent { event, .. } => {
            EmitError::InternalConstraintViolation(event)
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::mine::{mine, MinerConfig};

    fn mined() -> Blueprint {
        mine(&demo::repeated_cards(3), &MinerConfig::default()).unwrap()
    }

    #[test]
    fn reference_proposer_completes_with_zero_rejections() {
        let bp = mined();
        for mu in Framework::ALL {
            let mut proposer = ReferenceProposer::new(&bp, mu);
            let (bundle, stats) = propose_and_filter(&bp, mu, &mut proposer, 1_000_000).unwrap();
            assert_eq!(stats.rejected, 0, "{mu}");
            assert_eq!(bundle, emit_bundle(&bp, mu).unwrap(), "{mu}");
        }
    }

    #[test]
    fn fuel_one_on_nonempty_blueprint_exhausts() {
        let bp = mined();
        let mut proposer = ReferenceProposer::new(&bp, Framework::React);
        let err = propose_and_filter(&bp, Framework::React, &mut proposer, 1).unwrap_err();
        assert!(matches!(err, EmitError::FuelExhausted { .. }), "{err}");
    }

    #[test]
    fn fuzz_proposer_completes_and_reports_rejections() {
        let bp = mined();
        let mut proposer = FuzzProposer::new(&bp, Framework::React, 42);
        let reference_len = dispatch(&bp, Framework::React).len() as u64;
        let (bundle, stats) =
            propose_and_filter(&bp, Framework::React, &mut proposer, reference_len * 50)
                .unwrap();
        assert!(stats.rejected > 0);
        assert!(
            stats.rejected as f64 >= 0.30 * stats.proposed as f64,
            "invalid fraction too low: {stats:?}"
        );
        assert_eq!(bundle, emit_bundle(&bp, Framework::React).unwrap());
    }
}
