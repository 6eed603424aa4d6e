//! Search spaces: the set of triples an explanation may be drawn from,
//! expressed as a conjunction of Boolean constraints over triples.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Triple};

/// Named constraint bundles, one per row of the usual explainer taxonomy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Every training triple.
    TrainAll,
    /// Training triples whose subject or object is `s_x` or `ô_x`.
    SharesEntity,
    /// Training triples with subject `s_x`.
    SubjectMatch,
    /// Training triples with object `ô_x`.
    ObjectMatch,
    /// Training triples with `s_x` as subject or object.
    Incident,
    /// Training triples touching an entity within one hop of `s_x`.
    OneHop,
    /// Training triples in the weakly connected component of `s_x`.
    Wcc,
    /// Unobserved triples of `E × R × E`, enumerated lazily.
    Unobserved,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::TrainAll,
        Preset::SharesEntity,
        Preset::SubjectMatch,
        Preset::ObjectMatch,
        Preset::Incident,
        Preset::OneHop,
        Preset::Wcc,
        Preset::Unobserved,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::TrainAll => "train-all",
            Preset::SharesEntity => "shares-entity",
            Preset::SubjectMatch => "subject-match",
            Preset::ObjectMatch => "object-match",
            Preset::Incident => "incident",
            Preset::OneHop => "one-hop",
            Preset::Wcc => "wcc",
            Preset::Unobserved => "unobserved",
        }
    }

    pub fn needs_prediction(self) -> bool {
        !matches!(self, Preset::TrainAll | Preset::Unobserved)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown search-space preset `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    InTrain,
    NotInTrain,
    Excludes(Triple),
    SubjectIs(EntityId),
    ObjectIs(EntityId),
    ContainsEntity(EntityId),
    ContainsAnyOf(HashSet<EntityId>),
    SameComponentAs(EntityId),
}

impl Constraint {
    pub fn holds(&self, kg: &KnowledgeGraph, t: &Triple) -> bool {
        match self {
            Constraint::InTrain => kg.in_train(t),
            Constraint::NotInTrain => !kg.in_train(t),
            Constraint::Excludes(x) => t != x,
            Constraint::SubjectIs(e) => t.subject == *e,
            Constraint::ObjectIs(e) => t.object == *e,
            Constraint::ContainsEntity(e) => t.contains_entity(*e),
            Constraint::ContainsAnyOf(set) => set.contains(&t.subject) || set.contains(&t.object),
            // Component membership of a train triple is decided by its subject.
            Constraint::SameComponentAs(e) => kg.same_component(t.subject, *e),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchSpace {
    preset: Preset,
    constraints: Vec<Constraint>,
    explicit: Option<Vec<Triple>>,
}

impl SearchSpace {
    /// Builds the space for `preset`. The prediction itself, when given,
    /// is never part of the space.
    pub fn build(kg: &KnowledgeGraph, preset: Preset, prediction: Option<&Triple>) -> Result<Self> {
        if preset.needs_prediction() && prediction.is_none() {
            return Err(Error::config(format!(
                "search-space preset `{preset}` requires a prediction"
            )));
        }
        if let Some(p) = prediction {
            kg.check_triple(p)?;
        }
        let mut constraints = Vec::new();
        if preset == Preset::Unobserved {
            constraints.push(Constraint::NotInTrain);
        } else {
            constraints.push(Constraint::InTrain);
        }
        if let Some(p) = prediction {
            constraints.push(Constraint::Excludes(*p));
            let (sx, ox) = (p.subject, p.object);
            match preset {
                Preset::TrainAll | Preset::Unobserved => {}
                Preset::SharesEntity => {
                    constraints.push(Constraint::ContainsAnyOf(HashSet::from([sx, ox])))
                }
                Preset::SubjectMatch => constraints.push(Constraint::SubjectIs(sx)),
                Preset::ObjectMatch => constraints.push(Constraint::ObjectIs(ox)),
                Preset::Incident => constraints.push(Constraint::ContainsEntity(sx)),
                Preset::OneHop => {
                    let mut hood: HashSet<_> = kg.train_neighbors(sx).into_iter().collect();
                    hood.insert(sx);
                    constraints.push(Constraint::ContainsAnyOf(hood));
                }
                Preset::Wcc => constraints.push(Constraint::SameComponentAs(sx)),
            }
        }
        let mut space = Self {
            preset,
            constraints,
            explicit: None,
        };
        if preset != Preset::Unobserved {
            let members = kg
                .train()
                .iter()
                .copied()
                .filter(|t| space.contains(kg, t))
                .collect();
            space.explicit = Some(members);
        }
        Ok(space)
    }

    pub fn preset(&self) -> Preset {
        self.preset
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn contains(&self, kg: &KnowledgeGraph, t: &Triple) -> bool {
        self.constraints.iter().all(|c| c.holds(kg, t))
    }

    pub fn is_explicit(&self) -> bool {
        self.explicit.is_some()
    }

    /// Members of an explicit space, in train order.
    pub fn members(&self) -> Option<&[Triple]> {
        self.explicit.as_deref()
    }

    /// Enumerates the space; for the unobserved preset this walks
    /// `E × R × E` in `(s, r, o)` order without materialising it.
    pub fn iter<'a>(&'a self, kg: &'a KnowledgeGraph) -> Box<dyn Iterator<Item = Triple> + 'a> {
        match &self.explicit {
            Some(v) => Box::new(v.iter().copied()),
            None => {
                let (ne, nr) = (kg.num_entities(), kg.num_relations());
                Box::new(
                    (0..ne)
                        .flat_map(move |s| {
                            (0..nr).flat_map(move |r| (0..ne).map(move |o| Triple::new(s, r, o)))
                        })
                        .filter(move |t| self.contains(kg, t)),
                )
            }
        }
    }
}
