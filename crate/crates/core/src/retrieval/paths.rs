//! Candidate reasoning paths around a target item.
//!
//! One-hop paths run from the target to one of its attribute entities
//! (neighbors that are not catalogued items). Two- and three-hop paths are
//! simple paths from a history item to the target.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{Direction, EntityId, ItemCatalog, KnowledgeGraph, RelationId, UserHistory};

pub const MAX_HOPS: usize = 3;
pub const DEFAULT_CANDIDATE_CAP: usize = 512;

/// Semantic role of a path, by hop count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HopRole {
    /// One hop: a directly verifiable attribute of the target.
    Explicit,
    /// Two hops: an association through a history item.
    Relational,
    /// Three hops: a higher-order pattern linking history and target.
    Implicit,
}

impl HopRole {
    pub fn for_hops(hops: usize) -> Option<Self> {
        match hops {
            1 => Some(HopRole::Explicit),
            2 => Some(HopRole::Relational),
            3 => Some(HopRole::Implicit),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            HopRole::Explicit => "EXPLICIT",
            HopRole::Relational => "RELATIONAL",
            HopRole::Implicit => "IMPLICIT",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "EXPLICIT" => Some(HopRole::Explicit),
            "RELATIONAL" => Some(HopRole::Relational),
            "IMPLICIT" => Some(HopRole::Implicit),
            _ => None,
        }
    }
}

/// Alternating entity/relation sequence. `directions[i]` is the orientation
/// of the triple joining `entities[i]` and `entities[i + 1]`, viewed from
/// `entities[i]`.
///
/// One-hop paths are stored target-first; longer paths end at the target.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReasoningPath {
    pub entities: Vec<EntityId>,
    pub relations: Vec<RelationId>,
    pub directions: Vec<Direction>,
}

impl ReasoningPath {
    pub fn hops(&self) -> usize {
        self.relations.len()
    }

    pub fn role(&self) -> HopRole {
        HopRole::for_hops(self.hops()).expect("paths have 1 to 3 hops")
    }

    pub fn target(&self) -> EntityId {
        if self.hops() == 1 {
            self.entities[0]
        } else {
            *self.entities.last().expect("non-empty path")
        }
    }

    /// Entities contributing evidence: every entity except the target.
    pub fn evidence_nodes(&self) -> impl Iterator<Item = EntityId> + '_ {
        let t = self.target();
        self.entities.iter().copied().filter(move |&e| e != t)
    }

    /// The entity adjacent to the target, i.e. the target attribute the path reaches.
    pub fn target_attribute(&self) -> EntityId {
        if self.hops() == 1 {
            self.entities[1]
        } else {
            self.entities[self.entities.len() - 2]
        }
    }

    /// True if the path is simple and every step is an edge of `g`.
    pub fn is_valid_in(&self, g: &KnowledgeGraph) -> bool {
        let n = self.hops();
        if !(1..=MAX_HOPS).contains(&n) || self.entities.len() != n + 1 || self.directions.len() != n {
            return false;
        }
        let mut seen = std::collections::HashSet::new();
        if !self.entities.iter().all(|e| seen.insert(*e)) {
            return false;
        }
        (0..n).all(|i| g.has_edge(self.entities[i], self.relations[i], self.entities[i + 1], self.directions[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSet {
    pub paths: Vec<ReasoningPath>,
    /// More candidates existed than the cap allowed.
    pub truncated: bool,
}

fn sort_key(p: &ReasoningPath) -> (usize, &[EntityId], &[RelationId], &[Direction]) {
    (p.hops(), &p.entities, &p.relations, &p.directions)
}

/// Enumerates candidate paths in (hop count, id sequence) order, keeping at most `cap`.
pub fn enumerate_paths(
    g: &KnowledgeGraph,
    catalog: &ItemCatalog,
    history: &UserHistory,
    target: &str,
    max_hops: usize,
    cap: usize,
) -> Result<PathSet> {
    if !(1..=MAX_HOPS).contains(&max_hops) {
        return Err(Error::Config(format!("max_hops must be in 1..=3, got {max_hops}")));
    }
    let t = catalog.get(target)?.entity;
    if !g.contains(t) {
        return Err(Error::unknown("entity", target));
    }

    let mut out: Vec<ReasoningPath> = Vec::new();
    let mut total = 0usize;

    let mut one_hop: Vec<ReasoningPath> = g
        .neighbors(t)?
        .iter()
        .filter(|e| !catalog.is_item(e.neighbor))
        .map(|e| ReasoningPath {
            entities: vec![t, e.neighbor],
            relations: vec![e.relation],
            directions: vec![e.direction],
        })
        .collect();
    one_hop.sort_by(|a, b| sort_key(a).cmp(&sort_key(b)));
    total += one_hop.len();
    out.extend(one_hop);

    let mut anchors: Vec<EntityId> = history
        .items()
        .filter_map(|it| catalog.get(it).ok().map(|i| i.entity))
        .filter(|&e| e != t)
        .collect();
    anchors.sort_unstable();
    anchors.dedup();

    for hops in 2..=max_hops {
        let mut layer = Vec::new();
        for &a in &anchors {
            let mut stack = PathStack::new(a);
            walk(g, t, hops, &mut stack, &mut layer)?;
        }
        layer.sort_by(|a, b| sort_key(a).cmp(&sort_key(b)));
        total += layer.len();
        out.extend(layer);
    }

    let truncated = total > cap;
    out.truncate(cap);
    Ok(PathSet { paths: out, truncated })
}

struct PathStack {
    entities: Vec<EntityId>,
    relations: Vec<RelationId>,
    directions: Vec<Direction>,
}

impl PathStack {
    fn new(start: EntityId) -> Self {
        PathStack {
            entities: vec![start],
            relations: Vec::new(),
            directions: Vec::new(),
        }
    }
}

/// Depth-first search for simple paths of exactly `hops` edges ending at `target`,
/// which may only appear as the final entity.
fn walk(g: &KnowledgeGraph, target: EntityId, hops: usize, stack: &mut PathStack, out: &mut Vec<ReasoningPath>) -> Result<()> {
    let here = *stack.entities.last().expect("non-empty");
    let depth = stack.relations.len();
    for e in g.neighbors(here)? {
        let last_step = depth + 1 == hops;
        if last_step != (e.neighbor == target) || stack.entities.contains(&e.neighbor) {
            continue;
        }
        stack.entities.push(e.neighbor);
        stack.relations.push(e.relation);
        stack.directions.push(e.direction);
        if last_step {
            out.push(ReasoningPath {
                entities: stack.entities.clone(),
                relations: stack.relations.clone(),
                directions: stack.directions.clone(),
            });
        } else {
            walk(g, target, hops, stack, out)?;
        }
        stack.entities.pop();
        stack.relations.pop();
        stack.directions.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Interaction;

    fn hist(items: &[&str]) -> UserHistory {
        UserHistory::new(
            "u",
            items
                .iter()
                .enumerate()
                .map(|(i, it)| Interaction {
                    item: it.to_string(),
                    timestamp: i as i64,
                    features: vec![],
                })
                .collect(),
            10,
        )
    }

    fn catalog(g: &KnowledgeGraph, items: &[&str]) -> ItemCatalog {
        let text: String = items.iter().map(|i| format!("{{\"item\":\"{i}\"}}\n")).collect();
        ItemCatalog::from_str_jsonl(&text, g).unwrap()
    }

    #[test]
    fn attribute_edges_give_one_hop_paths() {
        let g = KnowledgeGraph::from_str_tsv("t\tr\ta\nt\tr\tb\nc\ts\tt\nt\tq\td\nh\tr\tz\n").unwrap();
        let cat = catalog(&g, &["t", "h"]);
        let ps = enumerate_paths(&g, &cat, &hist(&["h"]), "t", 3, 512).unwrap();
        assert_eq!(ps.paths.len(), 4);
        assert!(ps.paths.iter().all(|p| p.hops() == 1 && p.entities[0] == g.entity("t").unwrap()));
        assert!(!ps.truncated);
    }

    #[test]
    fn triangle_has_one_two_hop_path() {
        let g = KnowledgeGraph::from_str_tsv("h\tr\te\ne\ts\tt\nh\tq\tt\n").unwrap();
        let cat = catalog(&g, &["t", "h"]);
        let ps = enumerate_paths(&g, &cat, &hist(&["h"]), "t", 3, 512).unwrap();
        let two: Vec<_> = ps.paths.iter().filter(|p| p.hops() == 2).collect();
        assert_eq!(two.len(), 1);
        let names: Vec<&str> = two[0].entities.iter().map(|&e| g.entity_name(e)).collect();
        assert_eq!(names, vec!["h", "e", "t"]);
        // the target's only non-item neighbor is e
        assert_eq!(ps.paths.iter().filter(|p| p.hops() == 1).count(), 1);
        // h-t edge used twice would revisit t; nothing of length 3 survives
        assert_eq!(ps.paths.iter().filter(|p| p.hops() == 3).count(), 0);
    }

    #[test]
    fn target_is_never_an_intermediate() {
        // h - t - x - t would need t twice; h - a - t - b - ... cannot pass t
        let g = KnowledgeGraph::from_str_tsv("h\tr\ta\na\tr\tt\nt\tr\tb\nb\tr\tc\nc\tr\th\n").unwrap();
        let cat = catalog(&g, &["t", "h"]);
        let ps = enumerate_paths(&g, &cat, &hist(&["h"]), "t", 3, 512).unwrap();
        let t = g.entity("t").unwrap();
        for p in &ps.paths {
            assert!(p.is_valid_in(&g));
            if p.hops() > 1 {
                assert_eq!(p.entities.iter().filter(|&&e| e == t).count(), 1);
                assert_eq!(*p.entities.last().unwrap(), t);
            }
        }
        // h-a-t and h-c-b-t
        assert_eq!(ps.paths.iter().filter(|p| p.hops() == 2).count(), 1);
        assert_eq!(ps.paths.iter().filter(|p| p.hops() == 3).count(), 1);
    }

    #[test]
    fn ordering_and_truncation() {
        let g = KnowledgeGraph::from_str_tsv("t\tr\ta\nh\tr\ta\nt\tr\tb\nh\tr\tb\nt\tr\tc\n").unwrap();
        let cat = catalog(&g, &["t", "h"]);
        let all = enumerate_paths(&g, &cat, &hist(&["h"]), "t", 3, 512).unwrap();
        let keys: Vec<_> = all.paths.iter().map(sort_key).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        let capped = enumerate_paths(&g, &cat, &hist(&["h"]), "t", 3, 2).unwrap();
        assert!(capped.truncated);
        assert_eq!(capped.paths, all.paths[..2].to_vec());
        let one = enumerate_paths(&g, &cat, &hist(&["h"]), "t", 1, 512).unwrap();
        assert!(one.paths.iter().all(|p| p.hops() == 1));
    }

    #[test]
    fn bad_inputs() {
        let g = KnowledgeGraph::from_str_tsv("t\tr\ta\n").unwrap();
        let cat = catalog(&g, &["t"]);
        assert!(enumerate_paths(&g, &cat, &hist(&[]), "nope", 3, 10).is_err());
        assert!(enumerate_paths(&g, &cat, &hist(&[]), "t", 4, 10).is_err());
    }
}
