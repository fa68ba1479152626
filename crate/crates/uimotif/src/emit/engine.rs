//! The admissibility engine: every candidate event is filtered through the
//! intersection of three masks before it may advance the emission state.
//!
//! * syntactic — file-block discipline, balanced tags, attribute position,
//!   and agreement with the grammar the blueprint induces;
//! * binding — a prop may bind only while its instance site is open, at most
//!   once, and only to the field value the blueprint still owes;
//! * type — a binding's sink must be allowed for the prop's type.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::model::{Blueprint, NodeId, Payload, Sink};

use super::plan::{build_plan, PlanItem};
use super::{EmissionEvent, EmitError, Framework};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskReport {
    pub syn: bool,
    pub bind: bool,
    pub ty: bool,
}

impl MaskReport {
    pub fn all(&self) -> bool {
        self.syn && self.bind && self.ty
    }
}

#[derive(Debug, Clone)]
struct PlannedBind {
    prop: String,
    sink: Sink,
    value: Payload,
    bound: bool,
}

#[derive(Debug, Clone)]
enum Slot {
    Exact(EmissionEvent),
    /// All bindings of one open instance site; order within the window is
    /// free, totality is not.
    Window {
        template_id: String,
        instance: NodeId,
        binds: Vec<PlannedBind>,
    },
}

/// Emission state: the grammar cursor, the raw syntactic state, and the
/// binding ledger (one monotone bit per instance/prop pair).
#[derive(Debug, Clone)]
pub struct ConstraintState {
    slots: Vec<Slot>,
    cursor: usize,
    tag_stack: Vec<String>,
    file_open: bool,
    loop_open: bool,
    attr_position: bool,
    ledger: BTreeMap<(NodeId, String), bool>,
    prop_sinks: HashMap<(String, String), BTreeSet<Sink>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// Instance resolved for a binding event; the engine consumes the first
    /// unbound matching field in document order.
    pub resolved_instance: Option<NodeId>,
}

impl ConstraintState {
    pub fn new(bp: &Blueprint, mu: Framework) -> ConstraintState {
        let plan = build_plan(bp, mu);
        let mut slots: Vec<Slot> = Vec::with_capacity(plan.len());
        for item in plan {
            match item {
                PlanItem::Event(e) => slots.push(Slot::Exact(e)),
                PlanItem::Bind {
                    instance,
                    template_id,
                    prop,
                    sink,
                    value,
                } => {
                    let planned = PlannedBind {
                        prop,
                        sink,
                        value,
                        bound: false,
                    };
                    match slots.last_mut() {
                        Some(Slot::Window {
                            instance: open,
                            binds,
                            ..
                        }) if *open == instance => binds.push(planned),
                        _ => slots.push(Slot::Window {
                            template_id,
                            instance,
                            binds: vec![planned],
                        }),
                    }
                }
            }
        }
        let mut ledger = BTreeMap::new();
        let mut prop_sinks = HashMap::new();
        for (id, inst) in &bp.instances {
            if let Some(t) = bp.template(&inst.template_id) {
                for p in &t.props {
                    ledger.insert((*id, p.name.clone()), false);
                    prop_sinks.insert(
                        (t.template_id.clone(), p.name.clone()),
                        p.sinks.clone(),
                    );
                }
            }
        }
        ConstraintState {
            slots,
            cursor: 0,
            tag_stack: Vec::new(),
            file_open: false,
            loop_open: false,
            attr_position: false,
            ledger,
            prop_sinks,
        }
    }

    /// Raw structural legality, independent of the grammar cursor.
    fn raw_syntactic(&self, event: &EmissionEvent) -> bool {
        match event {
            EmissionEvent::FileStart(_) => !self.file_open,
            EmissionEvent::FileEnd => {
                self.file_open && self.tag_stack.is_empty() && !self.loop_open
            }
            EmissionEvent::OpenTag(_) => self.file_open,
            EmissionEvent::CloseTag(name) => {
                self.file_open && self.tag_stack.last() == Some(name)
            }
            EmissionEvent::Attr { .. } => self.file_open && self.attr_position,
            EmissionEvent::TextContent(_) => self.file_open && !self.tag_stack.is_empty(),
            EmissionEvent::LoopStart { .. } => self.file_open && !self.loop_open,
            EmissionEvent::LoopEnd => self.loop_open,
            EmissionEvent::BindProp { .. } => self.file_open,
        }
    }

    /// The composed admissibility masks for one candidate event.
    pub fn masks(&self, event: &EmissionEvent) -> MaskReport {
        let raw = self.raw_syntactic(event);
        match event {
            EmissionEvent::BindProp {
                template_id,
                prop,
                sink,
                value,
            } => {
                let ty = self
                    .prop_sinks
                    .get(&(template_id.clone(), prop.clone()))
                    .map(|sinks| sinks.contains(sink))
                    .unwrap_or(false);
                let (bind, planned_sink) = match self.slots.get(self.cursor) {
                    Some(Slot::Window {
                        template_id: open_template,
                        binds,
                        ..
                    }) if open_template == template_id => {
                        match binds.iter().find(|b| b.prop == *prop) {
                            Some(b) if !b.bound && b.value == *value => (true, Some(b.sink)),
                            _ => (false, None),
                        }
                    }
                    _ => (false, None),
                };
                // the grammar pins the exact sink the reference stream uses
                let syn = raw && planned_sink.map(|s| s == *sink).unwrap_or(false);
                MaskReport { syn, bind, ty }
            }
            _ => {
                let grammar = matches!(self.slots.get(self.cursor), Some(Slot::Exact(e)) if e == event);
                MaskReport {
                    syn: raw && grammar,
                    bind: true,
                    ty: true,
                }
            }
        }
    }

    /// Pure admissibility predicate over the current state.
    pub fn admissible(&self, event: &EmissionEvent) -> bool {
        self.masks(event).all()
    }

    /// Advance by one admissible event; inadmissible events are an error,
    /// never silently accepted.
    pub fn step(&mut self, event: &EmissionEvent) -> Result<StepInfo, EmitError> {
        let masks = self.masks(event);
        if !masks.all() {
            return Err(EmitError::InadmissibleEvent {
                event: format!("{event:?}"),
                masks,
            });
        }
        match event {
            EmissionEvent::BindProp { prop, .. } => {
                let Slot::Window {
                    instance, binds, ..
                } = &mut self.slots[self.cursor]
                else {
                    unreachable!("bind admissibility implies an open window");
                };
                let instance = *instance;
                let b = binds
                    .iter_mut()
                    .find(|b| b.prop == *prop && !b.bound)
                    .expect("admissibility located the bind");
                b.bound = true;
                *self
                    .ledger
                    .get_mut(&(instance, prop.clone()))
                    .expect("ledger has every instance prop") = true;
                if binds.iter().all(|b| b.bound) {
                    self.cursor += 1;
                }
                self.attr_position = false;
                Ok(StepInfo {
                    resolved_instance: Some(instance),
                })
            }
            _ => {
                match event {
                    EmissionEvent::FileStart(_) => {
                        self.file_open = true;
                    }
                    EmissionEvent::FileEnd => {
                        self.file_open = false;
                    }
                    EmissionEvent::OpenTag(name) => {
                        self.tag_stack.push(name.clone());
                    }
                    EmissionEvent::CloseTag(_) => {
                        self.tag_stack.pop();
                    }
                    EmissionEvent::LoopStart { .. } => {
                        self.loop_open = true;
                    }
                    EmissionEvent::LoopEnd => {
                        self.loop_open = false;
                    }
                    EmissionEvent::Attr { .. } | EmissionEvent::TextContent(_) => {}
                    EmissionEvent::BindProp { .. } => unreachable!(),
                }
                self.attr_position = matches!(
                    event,
                    EmissionEvent::OpenTag(_) | EmissionEvent::Attr { .. }
                );
                self.cursor += 1;
                Ok(StepInfo {
                    resolved_instance: None,
                })
            }
        }
    }

    /// Completion: balanced tags, no open file block or loop, and a full
    /// binding ledger (every prop of every instantiated template bound).
    pub fn is_complete(&self) -> bool {
        !self.file_open
            && self.tag_stack.is_empty()
            && !self.loop_open
            && self.ledger.values().all(|b| *b)
    }

    pub fn tag_depth(&self) -> usize {
        self.tag_stack.len()
    }

    pub fn bound_count(&self) -> usize {
        self.ledger.values().filter(|b| **b).count()
    }

    pub fn ledger_size(&self) -> usize {
        self.ledger.len()
    }

    /// Events the reference plan expects next; used by tests and the fuzz
    /// proposer's corruption targeting.
    pub fn expected_events(&self) -> Vec<EmissionEvent> {
        match self.slots.get(self.cursor) {
            Some(Slot::Exact(e)) => vec![e.clone()],
            Some(Slot::Window {
                template_id, binds, ..
            }) => binds
                .iter()
                .filter(|b| !b.bound)
                .map(|b| EmissionEvent::BindProp {
                    template_id: template_id.clone(),
                    prop: b.prop.clone(),
                    sink: b.sink,
                    value: b.value.clone(),
                })
                .collect(),
            None => vec![],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::emit::dispatch;
    use crate::mine::{mine, MinerConfig};

    fn mined() -> Blueprint {
        mine(&demo::repeated_cards(3), &MinerConfig::default()).unwrap()
    }

    #[test]
    fn reference_stream_is_fully_admissible_for_all_frameworks() {
        let bp = mined();
        for mu in Framework::ALL {
            let mut state = ConstraintState::new(&bp, mu);
            for e in dispatch(&bp, mu) {
                assert!(state.admissible(&e), "{mu}: rejected {e:?}");
                state.step(&e).unwrap();
            }
            assert!(state.is_complete(), "{mu}: incomplete after reference stream");
        }
    }

    #[test]
    fn close_tag_must_match_stack_top() {
        let bp = mined();
        let mut state = ConstraintState::new(&bp, Framework::Html);
        let events = dispatch(&bp, Framework::Html);
        // step until a div is open
        for e in &events[..3] {
            state.step(e).unwrap();
        }
        let report = state.masks(&EmissionEvent::CloseTag("span".into()));
        assert!(!report.syn);
        assert!(!state.admissible(&EmissionEvent::CloseTag("span".into())));
    }

    #[test]
    fn open_then_close_restores_depth() {
        let bp = Blueprint::from_tree(demo::tree_of(&[(0, "frame", "", &[])]));
        let mut state = ConstraintState::new(&bp, Framework::Html);
        state.step(&EmissionEvent::FileStart("index.html".into())).unwrap();
        assert_eq!(state.tag_depth(), 0);
        state.step(&EmissionEvent::OpenTag("div".into())).unwrap();
        assert_eq!(state.tag_depth(), 1);
        state
            .step(&EmissionEvent::Attr { name: "class".into(), value: "frame".into() })
            .unwrap();
        state.step(&EmissionEvent::CloseTag("div".into())).unwrap();
        assert_eq!(state.tag_depth(), 0);
    }

    #[test]
    fn url_prop_rejects_wrong_sink_via_type_mask() {
        let bp = mined();
        let template = &bp.templates[0];
        let link_prop = template
            .props
            .iter()
            .find(|p| matches!(p.prop_type, crate::model::PropType::UrlVal))
            .expect("card template has a url prop");
        let mut state = ConstraintState::new(&bp, Framework::React);
        let events = dispatch(&bp, Framework::React);
        for e in &events {
            if matches!(e, EmissionEvent::LoopStart { .. }) {
                state.step(e).unwrap();
                break;
            }
            state.step(e).unwrap();
        }
        // a url value may not land in a placeholder sink
        let instance = bp.loop_groups[0].members[0];
        let value = bp.instances[&instance].binding[&link_prop.name].clone();
        let bad = EmissionEvent::BindProp {
            template_id: template.template_id.clone(),
            prop: link_prop.name.clone(),
            sink: crate::model::Sink::Placeholder,
            value,
        };
        let report = state.masks(&bad);
        assert!(!report.ty);
        assert!(!state.admissible(&bad));
    }

    #[test]
    fn double_binding_is_rejected_and_ledger_is_monotone() {
        let bp = mined();
        let mut state = ConstraintState::new(&bp, Framework::React);
        let events = dispatch(&bp, Framework::React);
        let mut first_bind: Option<EmissionEvent> = None;
        for e in &events {
            if matches!(e, EmissionEvent::BindProp { .. }) {
                first_bind = Some(e.clone());
                let before = state.bound_count();
                state.step(e).unwrap();
                assert_eq!(state.bound_count(), before + 1, "one ledger bit per bind");
                break;
            }
            state.step(e).unwrap();
        }
        let again = first_bind.unwrap();
        let report = state.masks(&again);
        assert!(!report.bind, "second identical bind must fail the bind mask");
        assert!(state.step(&again).is_err());
    }

    #[test]
    fn fresh_state_with_zero_instances_is_complete() {
        let bp = Blueprint::from_tree(demo::tree_of(&[(0, "frame", "", &[])]));
        let state = ConstraintState::new(&bp, Framework::React);
        assert!(state.is_complete());
    }

    #[test]
    fn partial_ledger_or_open_file_blocks_completion() {
        let bp = mined();
        let mut state = ConstraintState::new(&bp, Framework::Html);
        assert!(!state.is_complete(), "unbound props block completion");
        let events = dispatch(&bp, Framework::Html);
        let last = events.len() - 1;
        for e in &events[..last] {
            state.step(e).unwrap();
        }
        // everything bound, but the file block is still open
        assert_eq!(state.bound_count(), state.ledger_size());
        assert!(!state.is_complete());
        state.step(&events[last]).unwrap();
        assert!(state.is_complete());
    }

    #[test]
    fn full_card_emission_sets_every_ledger_bit() {
        let bp = mined();
        let props = bp.templates[0].props.len();
        let mut state = ConstraintState::new(&bp, Framework::Vue);
        for e in dispatch(&bp, Framework::Vue) {
            state.step(&e).unwrap();
        }
        assert_eq!(state.bound_count(), 3 * props);
        assert!(state.is_complete());
    }
}
