//! Knowledge-graph data model.
//!
//! Entities and relations are interned into dense integer ids at load time;
//! everything downstream works on ids and only the I/O boundary sees labels.
//! A [`KnowledgeGraph`] is immutable once built. Perturbed training sets used
//! by retraining operators are plain `Vec<Triple>` values derived from it.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::union_find::UnionFind;

pub type EntityId = usize;
pub type RelationId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
}

impl Triple {
    pub const fn new(subject: EntityId, relation: RelationId, object: EntityId) -> Self {
        Self {
            subject,
            relation,
            object,
        }
    }

    pub fn contains_entity(&self, entity: EntityId) -> bool {
        self.subject == entity || self.object == entity
    }

    /// Replaces every occurrence of `from` (subject or object) with `to`.
    pub fn swap_entity(&self, from: EntityId, to: EntityId) -> Triple {
        let swap = |e: EntityId| if e == from { to } else { e };
        Triple::new(swap(self.subject), self.relation, swap(self.object))
    }
}

/// Bidirectional label <-> id map. Ids are assigned in first-insertion order.
#[derive(Clone, Debug, Default)]
pub struct Dictionary {
    labels: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_insert(&mut self, label: &str) -> usize {
        if let Some(&id) = self.ids.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_owned());
        self.ids.insert(label.to_owned(), id);
        id
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.ids.get(label).copied()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => "train.txt",
            Split::Valid => "valid.txt",
            Split::Test => "test.txt",
        }
    }
}

/// Problems found while building a graph. None of them is fatal.
#[derive(Clone, Debug, Default, Serialize)]
pub struct LoadReport {
    /// Triples repeated inside one split (dropped).
    pub duplicates_dropped: usize,
    /// Valid/test triples that also appear in an earlier split (dropped).
    pub cross_split_dropped: usize,
    /// Valid/test triples mentioning an entity or relation absent from train.
    /// They are stored but excluded from rank evaluation.
    pub unseen_valid: Vec<Triple>,
    pub unseen_test: Vec<Triple>,
}

impl LoadReport {
    pub fn is_clean(&self) -> bool {
        self.duplicates_dropped == 0
            && self.cross_split_dropped == 0
            && self.unseen_valid.is_empty()
            && self.unseen_test.is_empty()
    }

    fn log(&self) {
        log::info!(
            "load report: {}",
            serde_json::to_string(self).unwrap_or_default()
        );
        if self.duplicates_dropped > 0 {
            log::warn!("dropped {} duplicate triples", self.duplicates_dropped);
        }
        if self.cross_split_dropped > 0 {
            log::warn!(
                "dropped {} valid/test triples already present in an earlier split",
                self.cross_split_dropped
            );
        }
        let unseen = self.unseen_valid.len() + self.unseen_test.len();
        if unseen > 0 {
            log::warn!("{unseen} valid/test triples use entities or relations unseen in train");
        }
    }
}

#[derive(Debug)]
pub struct KnowledgeGraph {
    entities: Dictionary,
    relations: Dictionary,
    train: Vec<Triple>,
    valid: Vec<Triple>,
    test: Vec<Triple>,
    train_index: HashMap<Triple, usize>,
    known: HashSet<Triple>,
    known_objects: HashMap<(EntityId, RelationId), Vec<EntityId>>,
    known_subjects: HashMap<(RelationId, EntityId), Vec<EntityId>>,
    adjacency: Vec<Vec<(Split, usize)>>,
    unseen: HashSet<Triple>,
    report: LoadReport,
    components: OnceLock<Vec<usize>>,
}

impl Clone for KnowledgeGraph {
    fn clone(&self) -> Self {
        Self {
            entities: self.entities.clone(),
            relations: self.relations.clone(),
            train: self.train.clone(),
            valid: self.valid.clone(),
            test: self.test.clone(),
            train_index: self.train_index.clone(),
            known: self.known.clone(),
            known_objects: self.known_objects.clone(),
            known_subjects: self.known_subjects.clone(),
            adjacency: self.adjacency.clone(),
            unseen: self.unseen.clone(),
            report: self.report.clone(),
            components: OnceLock::new(),
        }
    }
}

impl KnowledgeGraph {
    /// Reads `train.txt`, `valid.txt` and `test.txt` from `dir`.
    ///
    /// Lines are `subject<TAB>relation<TAB>object`. Blank lines are skipped.
    /// Ids follow first appearance over train, then valid, then test.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut entities = Dictionary::new();
        let mut relations = Dictionary::new();
        let mut splits: [Vec<Triple>; 3] = Default::default();
        for (slot, split) in splits.iter_mut().zip(Split::ALL) {
            let path = dir.join(split.file_name());
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.strip_suffix('\r').unwrap_or(line);
                if line.trim().is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != 3 {
                    return Err(Error::Parse {
                        path: path.clone(),
                        line: lineno + 1,
                        message: format!("expected 3 tab-separated fields, found {}", fields.len()),
                    });
                }
                let s = entities.get_or_insert(fields[0]);
                let r = relations.get_or_insert(fields[1]);
                let o = entities.get_or_insert(fields[2]);
                slot.push(Triple::new(s, r, o));
            }
        }
        let [train, valid, test] = splits;
        let kg = Self::from_parts(entities, relations, train, valid, test);
        kg.report.log();
        Ok(kg)
    }

    /// Builds a graph from labelled triples. Convenient for fixtures.
    pub fn from_labeled<S: AsRef<str>>(
        train: &[(S, S, S)],
        valid: &[(S, S, S)],
        test: &[(S, S, S)],
    ) -> Self {
        let mut entities = Dictionary::new();
        let mut relations = Dictionary::new();
        let mut intern = |rows: &[(S, S, S)]| -> Vec<Triple> {
            rows.iter()
                .map(|(s, r, o)| {
                    let s = entities.get_or_insert(s.as_ref());
                    let r = relations.get_or_insert(r.as_ref());
                    let o = entities.get_or_insert(o.as_ref());
                    Triple::new(s, r, o)
                })
                .collect()
        };
        let train = intern(train);
        let valid = intern(valid);
        let test = intern(test);
        Self::from_parts(entities, relations, train, valid, test)
    }

    /// Builds a graph over pre-interned dictionaries.
    ///
    /// Duplicates are removed (train wins over valid, valid over test).
    pub fn from_parts(
        entities: Dictionary,
        relations: Dictionary,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Self {
        let mut report = LoadReport::default();
        let mut known = HashSet::new();
        let mut dedup = |rows: Vec<Triple>, report: &mut LoadReport, split: Split| {
            let mut local = HashSet::new();
            let mut out = Vec::with_capacity(rows.len());
            for t in rows {
                if !local.insert(t) {
                    report.duplicates_dropped += 1;
                } else if !known.insert(t) {
                    debug_assert_ne!(split, Split::Train);
                    report.cross_split_dropped += 1;
                } else {
                    out.push(t);
                }
            }
            out
        };
        let train = dedup(train, &mut report, Split::Train);
        let valid = dedup(valid, &mut report, Split::Valid);
        let test = dedup(test, &mut report, Split::Test);

        let mut entity_in_train = vec![false; entities.len()];
        let mut relation_in_train = vec![false; relations.len()];
        for t in &train {
            entity_in_train[t.subject] = true;
            entity_in_train[t.object] = true;
            relation_in_train[t.relation] = true;
        }
        let is_unseen = |t: &Triple| {
            !entity_in_train[t.subject]
                || !entity_in_train[t.object]
                || !relation_in_train[t.relation]
        };
        report.unseen_valid = valid.iter().copied().filter(is_unseen).collect();
        report.unseen_test = test.iter().copied().filter(is_unseen).collect();
        let unseen = report
            .unseen_valid
            .iter()
            .chain(&report.unseen_test)
            .copied()
            .collect();

        let mut adjacency = vec![Vec::new(); entities.len()];
        let mut known_objects: HashMap<_, Vec<_>> = HashMap::new();
        let mut known_subjects: HashMap<_, Vec<_>> = HashMap::new();
        for (split, rows) in [
            (Split::Train, &train),
            (Split::Valid, &valid),
            (Split::Test, &test),
        ] {
            for (i, t) in rows.iter().enumerate() {
                adjacency[t.subject].push((split, i));
                if t.object != t.subject {
                    adjacency[t.object].push((split, i));
                }
                known_objects
                    .entry((t.subject, t.relation))
                    .or_default()
                    .push(t.object);
                known_subjects
                    .entry((t.relation, t.object))
                    .or_default()
                    .push(t.subject);
            }
        }
        let train_index = train.iter().enumerate().map(|(i, t)| (*t, i)).collect();

        Self {
            entities,
            relations,
            train,
            valid,
            test,
            train_index,
            known,
            known_objects,
            known_subjects,
            adjacency,
            unseen,
            report,
            components: OnceLock::new(),
        }
    }

    pub fn entities(&self) -> &Dictionary {
        &self.entities
    }

    pub fn relations(&self) -> &Dictionary {
        &self.relations
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn train(&self) -> &[Triple] {
        &self.train
    }

    pub fn valid(&self) -> &[Triple] {
        &self.valid
    }

    pub fn test(&self) -> &[Triple] {
        &self.test
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    /// Test triples usable for rank evaluation (all ids seen in train).
    pub fn evaluable_test(&self) -> Vec<Triple> {
        self.test
            .iter()
            .copied()
            .filter(|t| !self.unseen.contains(t))
            .collect()
    }

    pub fn evaluable_valid(&self) -> Vec<Triple> {
        self.valid
            .iter()
            .copied()
            .filter(|t| !self.unseen.contains(t))
            .collect()
    }

    pub fn is_evaluable(&self, t: &Triple) -> bool {
        !self.unseen.contains(t)
    }

    /// Position of `t` in the train split, used as its stable id.
    pub fn train_id(&self, t: &Triple) -> Option<usize> {
        self.train_index.get(t).copied()
    }

    pub fn in_train(&self, t: &Triple) -> bool {
        self.train_index.contains_key(t)
    }

    /// Membership in any split.
    pub fn contains(&self, t: &Triple) -> bool {
        self.known.contains(t)
    }

    /// Objects `o` with `(s, r, o)` in any split.
    pub fn known_objects(&self, subject: EntityId, relation: RelationId) -> &[EntityId] {
        self.known_objects
            .get(&(subject, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Subjects `s` with `(s, r, o)` in any split.
    pub fn known_subjects(&self, relation: RelationId, object: EntityId) -> &[EntityId] {
        self.known_subjects
            .get(&(relation, object))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Incident triples of `entity` across all splits, once per triple.
    pub fn incident(&self, entity: EntityId) -> impl Iterator<Item = (Split, Triple)> + '_ {
        self.adjacency[entity]
            .iter()
            .map(move |&(split, i)| (split, self.split(split)[i]))
    }

    /// Train triples incident to `entity`, in train order.
    pub fn train_incident(&self, entity: EntityId) -> Vec<Triple> {
        self.adjacency[entity]
            .iter()
            .filter(|(split, _)| *split == Split::Train)
            .map(|&(_, i)| self.train[i])
            .collect()
    }

    /// Undirected train neighbours of `entity`, sorted, without duplicates.
    pub fn train_neighbors(&self, entity: EntityId) -> Vec<EntityId> {
        let mut out: Vec<_> = self
            .train_incident(entity)
            .into_iter()
            .map(|t| {
                if t.subject == entity {
                    t.object
                } else {
                    t.subject
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn check_entity(&self, entity: EntityId) -> Result<()> {
        if entity < self.num_entities() {
            Ok(())
        } else {
            Err(Error::domain(format!("unknown entity id {entity}")))
        }
    }

    pub fn check_triple(&self, t: &Triple) -> Result<()> {
        self.check_entity(t.subject)?;
        self.check_entity(t.object)?;
        if t.relation < self.num_relations() {
            Ok(())
        } else {
            Err(Error::domain(format!("unknown relation id {}", t.relation)))
        }
    }

    /// Component label per entity over the undirected train graph.
    fn components(&self) -> &[usize] {
        self.components.get_or_init(|| {
            let mut uf = UnionFind::new(self.num_entities());
            for t in &self.train {
                uf.union(t.subject, t.object);
            }
            (0..self.num_entities()).map(|e| uf.find(e)).collect()
        })
    }

    pub fn same_component(&self, a: EntityId, b: EntityId) -> bool {
        let c = self.components();
        c[a] == c[b]
    }

    /// Train triples of the weakly connected component containing `entity`.
    pub fn weakly_connected_component(&self, entity: EntityId) -> Result<Vec<Triple>> {
        self.check_entity(entity)?;
        let c = self.components();
        let root = c[entity];
        Ok(self
            .train
            .iter()
            .copied()
            .filter(|t| c[t.subject] == root)
            .collect())
    }

    /// Undirected hop distance from `source` to every entity over train.
    pub fn distances_from(&self, source: EntityId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_entities()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for v in self.train_neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// `G_train \ removed`, preserving train order.
    pub fn train_without(&self, removed: &[Triple]) -> Vec<Triple> {
        let removed: HashSet<_> = removed.iter().collect();
        self.train
            .iter()
            .copied()
            .filter(|t| !removed.contains(t))
            .collect()
    }

    /// `G_train ∪ added`; added triples already in train are ignored.
    pub fn train_with(&self, added: &[Triple]) -> Vec<Triple> {
        let mut out = self.train.clone();
        let mut seen: HashSet<Triple> = self.train.iter().copied().collect();
        out.extend(added.iter().copied().filter(|t| seen.insert(*t)));
        out
    }

    /// Stable content hash over both dictionaries and all three splits.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for label in self.entities.labels() {
            h.update(label.as_bytes());
            h.update([0u8]);
        }
        h.update([1u8]);
        for label in self.relations.labels() {
            h.update(label.as_bytes());
            h.update([0u8]);
        }
        for rows in [&self.train, &self.valid, &self.test] {
            h.update([2u8]);
            for t in rows.iter() {
                for v in [t.subject, t.relation, t.object] {
                    h.update((v as u64).to_le_bytes());
                }
            }
        }
        hex::encode(h.finalize())
    }

    /// Human-readable `(s, r, o)` labels.
    pub fn labels_of(&self, t: &Triple) -> (String, String, String) {
        let e = |id| self.entities.label(id).unwrap_or("?").to_owned();
        (
            e(t.subject),
            self.relations.label(t.relation).unwrap_or("?").to_owned(),
            e(t.object),
        )
    }

    /// Resolves a labelled triple to ids.
    pub fn resolve(&self, s: &str, r: &str, o: &str) -> Option<Triple> {
        Some(Triple::new(
            self.entities.id(s)?,
            self.relations.id(r)?,
            self.entities.id(o)?,
        ))
    }
}
