//! Evidence serialization and hard-prompt assembly.
//!
//! Each selected path becomes one line tagged with its hop role. Arrows show
//! the stored edge orientation relative to the reading order:
//!
//! ```text
//! [EXPLICIT] (movie) -[has_genre]-> (drama)
//! [RELATIONAL] (little women) -[has_theme]-> (sisterhood) <-[has_theme]- (eleanor oliphant)
//! ```
//!
//! Entity and relation names must not contain the delimiter sequences
//! `) -[`, `) <-[`, `]-> (` or `]- (`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{Direction, ItemCatalog, KnowledgeGraph, UserHistory};
use crate::retrieval::{HopRole, ReasoningPath};

pub const DEFAULT_INSTRUCTION: &str = "You are a recommendation assistant. In one or two sentences, explain why the \
target item suits this user. Mention only attributes supported by the knowledge evidence, and prefer attributes \
that match what the user liked before.";

pub fn render_path(p: &ReasoningPath, g: &KnowledgeGraph) -> String {
    let mut out = format!("[{}] ({})", p.role().tag(), g.entity_name(p.entities[0]));
    for i in 0..p.hops() {
        let rel = g.relation_name(p.relations[i]);
        match p.directions[i] {
            Direction::Outgoing => out.push_str(&format!(" -[{rel}]-> ")),
            Direction::Incoming => out.push_str(&format!(" <-[{rel}]- ")),
        }
        out.push('(');
        out.push_str(g.entity_name(p.entities[i + 1]));
        out.push(')');
    }
    out
}

/// One evidence line per path, in the given order.
pub fn serialize_paths(paths: &[ReasoningPath], g: &KnowledgeGraph) -> Result<Vec<String>> {
    if paths.is_empty() {
        return Err(Error::EmptyInput("evidence paths"));
    }
    for p in paths {
        if p.entities.iter().any(|&e| !g.contains(e)) || p.relations.iter().any(|r| r.index() >= g.num_relations()) {
            return Err(Error::unknown("path element", format!("{p:?}")));
        }
        if HopRole::for_hops(p.hops()).is_none() {
            return Err(Error::Config(format!("paths have 1 to 3 hops, got {}", p.hops())));
        }
    }
    Ok(paths.iter().map(|p| render_path(p, g)).collect())
}

/// An evidence line split into names, before id resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidenceLine {
    pub role: HopRole,
    pub entities: Vec<String>,
    pub relations: Vec<String>,
    pub directions: Vec<Direction>,
}

impl EvidenceLine {
    /// Name of the target attribute: the last entity of a one-hop line, the
    /// one before the target otherwise.
    pub fn target_attribute(&self) -> Option<&str> {
        match self.role {
            HopRole::Explicit => self.entities.last().map(String::as_str),
            _ if self.entities.len() >= 2 => Some(&self.entities[self.entities.len() - 2]),
            _ => None,
        }
    }
}

fn line_error(line: &str, message: &str) -> Error {
    Error::Parse {
        source_name: "evidence".into(),
        line: 0,
        message: format!("{message}: `{line}`"),
    }
}

pub fn parse_line(line: &str) -> Result<EvidenceLine> {
    let line = line.trim();
    let rest = line.strip_prefix('[').ok_or_else(|| line_error(line, "missing hop tag"))?;
    let (tag, rest) = rest.split_once("] ").ok_or_else(|| line_error(line, "missing hop tag"))?;
    let role = HopRole::from_tag(tag).ok_or_else(|| line_error(line, "unknown hop tag"))?;
    let mut rest = rest.strip_prefix('(').ok_or_else(|| line_error(line, "expected `(`"))?;
    let mut entities = Vec::new();
    let mut relations = Vec::new();
    let mut directions = Vec::new();
    loop {
        let out_at = rest.find(") -[");
        let in_at = rest.find(") <-[");
        let next = match (out_at, in_at) {
            (Some(o), Some(i)) if o < i => Some((o, Direction::Outgoing)),
            (Some(_), Some(i)) => Some((i, Direction::Incoming)),
            (Some(o), None) => Some((o, Direction::Outgoing)),
            (None, Some(i)) => Some((i, Direction::Incoming)),
            (None, None) => None,
        };
        let Some((at, dir)) = next else {
            let name = rest.strip_suffix(')').ok_or_else(|| line_error(line, "expected `)`"))?;
            entities.push(name.to_owned());
            break;
        };
        entities.push(rest[..at].to_owned());
        let (open, close) = match dir {
            Direction::Outgoing => (") -[", "]-> ("),
            Direction::Incoming => (") <-[", "]- ("),
        };
        let after = &rest[at + open.len()..];
        let end = after.find(close).ok_or_else(|| line_error(line, "unterminated relation"))?;
        relations.push(after[..end].to_owned());
        directions.push(dir);
        rest = &after[end + close.len()..];
    }
    if HopRole::for_hops(relations.len()) != Some(role) {
        return Err(line_error(line, "hop tag does not match path length"));
    }
    Ok(EvidenceLine {
        role,
        entities,
        relations,
        directions,
    })
}

/// Parses evidence lines back into id paths against `g`.
pub fn parse_evidence(lines: &[String], g: &KnowledgeGraph) -> Result<Vec<ReasoningPath>> {
    lines
        .iter()
        .map(|l| {
            let parsed = parse_line(l)?;
            Ok(ReasoningPath {
                entities: parsed.entities.iter().map(|n| g.entity(n)).collect::<Result<_>>()?,
                relations: parsed.relations.iter().map(|n| g.relation(n)).collect::<Result<_>>()?,
                directions: parsed.directions,
            })
        })
        .collect()
}

/// Discrete prompt sections, in assembly order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub instruction: String,
    pub history: String,
    pub target: String,
    /// Empty when the knowledge graph is not used.
    pub evidence: Vec<String>,
}

impl PromptBundle {
    pub fn text(&self) -> String {
        let mut out = String::new();
        out.push_str("### Instruction\n");
        out.push_str(&self.instruction);
        out.push_str("\n\n### User History\n");
        out.push_str(&self.history);
        out.push_str("\n\n### Target Item\n");
        out.push_str(&self.target);
        out.push('\n');
        if !self.evidence.is_empty() {
            out.push_str("\n### Knowledge Evidence\n");
            for l in &self.evidence {
                out.push_str(l);
                out.push('\n');
            }
        }
        out
    }
}

pub fn assemble_prompt(instruction: &str, history: &str, target: &str, evidence: Vec<String>) -> PromptBundle {
    PromptBundle {
        instruction: instruction.trim().to_owned(),
        history: history.trim().to_owned(),
        target: target.trim().to_owned(),
        evidence,
    }
}

/// One line per history item: its title and the features the user liked there.
pub fn history_text(history: &UserHistory, catalog: &ItemCatalog) -> Result<String> {
    let mut lines = Vec::new();
    for it in &history.interactions {
        let item = catalog.get(&it.item)?;
        let liked: Vec<&str> = it
            .features
            .iter()
            .filter(|m| m.polarity.sign() > 0.0)
            .map(|m| m.feature.as_str())
            .collect();
        if liked.is_empty() {
            lines.push(format!("- {}", item.title));
        } else {
            lines.push(format!("- {} (liked: {})", item.title, liked.join(", ")));
        }
    }
    Ok(lines.join("\n"))
}
