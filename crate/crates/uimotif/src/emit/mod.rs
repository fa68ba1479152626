//! Schema-driven synthesis: a deterministic dispatcher lowers blueprints to
//! framework-specific emission events, a constraint engine masks every event
//! for syntactic, binding, and type admissibility, and a renderer realizes
//! validated streams as pretty-printed source bundles.

mod audit;
mod engine;
mod plan;
mod propose;
mod render;

pub use audit::{audit_tag_balance, audit_type_sinks};
pub use engine::{ConstraintState, MaskReport, StepInfo};
pub use plan::dispatch;
pub use propose::{
    emit_bundle, propose_and_filter, EventProposer, FilterStats, FuzzProposer, ReferenceProposer,
};
pub use render::render;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{NodeId, Payload, Sink};

/// Target frameworks; a closed set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Framework {
    Html,
    React,
    Vue,
    Angular,
}

impl Framework {
    pub const ALL: [Framework; 4] = [
        Framework::Html,
        Framework::React,
        Framework::Vue,
        Framework::Angular,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Framework::Html => "html",
            Framework::React => "react",
            Framework::Vue => "vue",
            Framework::Angular => "angular",
        }
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Framework {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Framework::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown framework \"{s}\" (expected html|react|vue|angular)"))
    }
}

/// The token alphabet of the emission protocol. One document stream per
/// bundle; `FileStart`/`FileEnd` must strictly alternate.
#[derive(Debug, Clone, PartialEq)]
pub enum EmissionEvent {
    OpenTag(String),
    CloseTag(String),
    Attr { name: String, value: String },
    TextContent(String),
    BindProp {
        template_id: String,
        prop: String,
        sink: Sink,
        value: Payload,
    },
    LoopStart {
        template_id: String,
        items_ref: String,
    },
    LoopEnd,
    FileStart(String),
    FileEnd,
}

/// Ordered set of rendered files for one framework.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeBundle {
    pub framework: Framework,
    pub files: Vec<(String, String)>,
}

impl CodeBundle {
    pub fn file(&self, path: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(p, _)| p == path)
            .map(|(_, c)| c.as_str())
    }

    /// Entry file: always the last one (Angular's entry is its final two
    /// files; this returns the class file's companion template first).
    pub fn entry(&self) -> &(String, String) {
        self.files.last().expect("bundles are never empty")
    }

    pub fn concatenated_text(&self) -> String {
        let mut out = String::new();
        for (path, content) in &self.files {
            out.push_str(path);
            out.push('\n');
            out.push_str(content);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("inadmissible event {event} (syn={}, bind={}, type={})", masks.syn, masks.bind, masks.ty)]
    InadmissibleEvent { event: String, masks: MaskReport },
    #[error("event stream ended with unmet constraints: {0}")]
    IncompleteStream(String),
    #[error("proposer could not complete the bundle within fuel ({accepted} accepted, {rejected} rejected)")]
    FuelExhausted { accepted: u64, rejected: u64 },
    #[error("dispatcher produced an event its own engine rejects: {0}")]
    InternalConstraintViolation(String),
    #[error("blueprint references unknown template \"{0}\"")]
    UnknownTemplate(String),
}

/// Instance ids for this blueprint in document order, with loop members and
/// the loop-group index of each first member; shared by the plan builder,
/// renderer, and the metrics scanners.
pub(crate) struct InstanceLayout {
    pub loop_of_first: std::collections::HashMap<NodeId, usize>,
    pub loop_members: std::collections::HashSet<NodeId>,
}

impl InstanceLayout {
    pub fn of(bp: &crate::model::Blueprint) -> InstanceLayout {
        InstanceLayout {
            loop_of_first: bp
                .loop_groups
                .iter()
                .enumerate()
                .map(|(i, g)| (g.members[0], i))
                .collect(),
            loop_members: bp.loop_member_ids(),
        }
    }
}

/// Collection name for a loop group, stable across every consumer.
pub(crate) fn items_ref_name(group_index: usize) -> String {
    format!("items_{group_index}")
}
