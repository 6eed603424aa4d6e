use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple};
use crate::kge::TrainConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Complex bilinear scorer `Re(<e_s, w_r, conj(e_o)>)`.
    ComplEx,
    /// Reserved; not implemented.
    TransE,
    /// Reserved; not implemented.
    DistMult,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `(s, r, ?)`
    Object,
    /// `(?, r, o)`, answered as `(o, r⁻¹, ?)`
    Subject,
}

/// Entity and relation embeddings of a complex bilinear model.
///
/// Every embedding is `d` complex numbers stored as `2d` reals laid out as
/// `[re_0..re_d, im_0..im_d]`. Relations come in pairs: row `r` is the
/// forward relation and row `r + |R|` its reciprocal, used for subject
/// completion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub(crate) kind: ModelKind,
    pub(crate) dim: usize,
    pub(crate) num_entities: usize,
    pub(crate) num_relations: usize,
    pub(crate) entities: Vec<f64>,
    pub(crate) relations: Vec<f64>,
}

/// Partial derivatives of one triple's score.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreGradient {
    pub subject: Vec<f64>,
    pub relation: Vec<f64>,
    pub object: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedPrediction {
    pub triple: Triple,
    pub score: f64,
    pub rank: usize,
    pub direction: Direction,
}

impl EmbeddingModel {
    /// Draws every entry i.i.d. from `N(0, 1/d)` using `config.seed`.
    pub fn init(kg: &KnowledgeGraph, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        Self::init_sized(kg.num_entities(), kg.num_relations(), config)
    }

    pub fn init_sized(
        num_entities: usize,
        num_relations: usize,
        config: &TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        if config.model != ModelKind::ComplEx {
            return Err(Error::config(format!(
                "model kind {:?} is not implemented",
                config.model
            )));
        }
        if num_entities == 0 || num_relations == 0 {
            return Err(Error::config(
                "entity and relation dictionaries must be non-empty",
            ));
        }
        let dim = config.dimension;
        let normal = Normal::new(0.0, 1.0 / (dim as f64).sqrt())
            .map_err(|e| Error::config(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let entities = (0..num_entities * 2 * dim)
            .map(|_| normal.sample(&mut rng))
            .collect();
        let relations = (0..2 * num_relations * 2 * dim)
            .map(|_| normal.sample(&mut rng))
            .collect();
        Ok(Self {
            kind: config.model,
            dim,
            num_entities,
            num_relations,
            entities,
            relations,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    /// Number of forward relations (reciprocals excluded).
    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn entity(&self, e: EntityId) -> &[f64] {
        let w = 2 * self.dim;
        &self.entities[e * w..(e + 1) * w]
    }

    pub fn entity_mut(&mut self, e: EntityId) -> &mut [f64] {
        let w = 2 * self.dim;
        &mut self.entities[e * w..(e + 1) * w]
    }

    /// Relation row; `row >= |R|` addresses reciprocals.
    pub fn relation_row(&self, row: usize) -> &[f64] {
        let w = 2 * self.dim;
        &self.relations[row * w..(row + 1) * w]
    }

    pub fn relation_row_mut(&mut self, row: usize) -> &mut [f64] {
        let w = 2 * self.dim;
        &mut self.relations[row * w..(row + 1) * w]
    }

    pub fn inverse_row(&self, relation: RelationId) -> usize {
        relation + self.num_relations
    }

    pub fn entity_table(&self) -> &[f64] {
        &self.entities
    }

    pub fn relation_table(&self) -> &[f64] {
        &self.relations
    }

    pub fn is_finite(&self) -> bool {
        self.entities
            .iter()
            .chain(&self.relations)
            .all(|v| v.is_finite())
    }

    pub(crate) fn check(&self, t: &Triple) -> Result<()> {
        if t.subject >= self.num_entities || t.object >= self.num_entities {
            return Err(Error::domain(format!("entity id out of range in {t:?}")));
        }
        if t.relation >= self.num_relations {
            return Err(Error::domain(format!("relation id out of range in {t:?}")));
        }
        Ok(())
    }

    /// `e_s ⊙ w_r` in real coordinates.
    pub fn query_vector(&self, subject: EntityId, relation_row: usize) -> Vec<f64> {
        let d = self.dim;
        let es = self.entity(subject);
        let wr = self.relation_row(relation_row);
        let mut q = vec![0.0; 2 * d];
        for k in 0..d {
            let (a, b) = (es[k], es[d + k]);
            let (c, e) = (wr[k], wr[d + k]);
            q[k] = a * c - b * e;
            q[d + k] = a * e + b * c;
        }
        q
    }

    fn dot_row(&self, q: &[f64], e: EntityId) -> f64 {
        self.entity(e).iter().zip(q).map(|(x, y)| x * y).sum()
    }

    /// Scores of `(subject, relation_row, e)` for every entity `e`.
    pub fn scores_for_query(&self, subject: EntityId, relation_row: usize) -> Vec<f64> {
        let q = self.query_vector(subject, relation_row);
        (0..self.num_entities)
            .map(|e| self.dot_row(&q, e))
            .collect()
    }

    /// Score over a raw relation row (forward or reciprocal).
    pub fn score_row(&self, subject: EntityId, relation_row: usize, object: EntityId) -> f64 {
        let q = self.query_vector(subject, relation_row);
        self.dot_row(&q, object)
    }

    pub fn score(&self, t: &Triple) -> Result<f64> {
        self.check(t)?;
        Ok(self.score_row(t.subject, t.relation, t.object))
    }

    /// Filtered rank of `t` in the given direction.
    ///
    /// `1 + |{e ∈ E' : score(e) > score(target)}|`, where `E'` drops every
    /// candidate that forms a known triple in any split. Ties never count.
    pub fn rank(
        &self,
        kg: &KnowledgeGraph,
        t: &Triple,
        direction: Direction,
    ) -> Result<RankedPrediction> {
        self.check(t)?;
        let (scores, target, known) = match direction {
            Direction::Object => (
                self.scores_for_query(t.subject, t.relation),
                t.object,
                kg.known_objects(t.subject, t.relation),
            ),
            Direction::Subject => (
                self.scores_for_query(t.object, self.inverse_row(t.relation)),
                t.subject,
                kg.known_subjects(t.relation, t.object),
            ),
        };
        let rank = filtered_rank(&scores, target, |e| known.contains(&e));
        Ok(RankedPrediction {
            triple: *t,
            score: scores[target],
            rank,
            direction,
        })
    }

    /// Object-completion filtered rank.
    pub fn object_rank(&self, kg: &KnowledgeGraph, t: &Triple) -> Result<usize> {
        Ok(self.rank(kg, t, Direction::Object)?.rank)
    }

    /// `∂score/∂e_s`, equal to `conj(w_r) ⊙ e_o` read as real coordinates.
    pub fn grad_score_wrt_subject(&self, t: &Triple) -> Result<Vec<f64>> {
        Ok(self.score_gradient(t)?.subject)
    }

    pub fn score_gradient(&self, t: &Triple) -> Result<ScoreGradient> {
        self.check(t)?;
        let d = self.dim;
        let es = self.entity(t.subject);
        let wr = self.relation_row(t.relation);
        let eo = self.entity(t.object);
        let mut subject = vec![0.0; 2 * d];
        let mut relation = vec![0.0; 2 * d];
        let object = self.query_vector(t.subject, t.relation);
        for k in 0..d {
            let (sa, sb) = (es[k], es[d + k]);
            let (ra, rb) = (wr[k], wr[d + k]);
            let (oa, ob) = (eo[k], eo[d + k]);
            subject[k] = ra * oa + rb * ob;
            subject[d + k] = ra * ob - rb * oa;
            relation[k] = sa * oa + sb * ob;
            relation[d + k] = sa * ob - sb * oa;
        }
        Ok(ScoreGradient {
            subject,
            relation,
            object,
        })
    }
}

/// `1 + #{e ≠ target, !excluded(e), scores[e] > scores[target]}`.
pub fn filtered_rank(scores: &[f64], target: usize, excluded: impl Fn(usize) -> bool) -> usize {
    let ts = scores[target];
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(e, &s)| e != target && s > ts && !excluded(e))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_model(entities: &[(f64, f64)], relations: &[(f64, f64)]) -> EmbeddingModel {
        EmbeddingModel {
            kind: ModelKind::ComplEx,
            dim: 1,
            num_entities: entities.len(),
            num_relations: relations.len(),
            entities: entities.iter().flat_map(|&(a, b)| [a, b]).collect(),
            relations: relations
                .iter()
                .chain(relations)
                .flat_map(|&(a, b)| [a, b])
                .collect(),
        }
    }

    #[test]
    fn identity_embeddings_score_one() {
        let m = unit_model(&[(1.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0)]);
        assert_eq!(m.score(&Triple::new(0, 0, 1)).unwrap(), 1.0);
    }

    #[test]
    fn conjugating_object_keeps_score_for_real_subject_and_relation() {
        let m = unit_model(&[(0.7, 0.0), (0.3, 0.9)], &[(1.3, 0.0)]);
        let m2 = unit_model(&[(0.7, 0.0), (0.3, -0.9)], &[(1.3, 0.0)]);
        let t = Triple::new(0, 0, 1);
        assert_eq!(m.score(&t).unwrap(), m2.score(&t).unwrap());
    }

    #[test]
    fn gradient_unit_case() {
        let m = unit_model(&[(0.5, 0.5), (1.0, 0.0)], &[(1.0, 0.0)]);
        assert_eq!(
            m.grad_score_wrt_subject(&Triple::new(0, 0, 1)).unwrap(),
            vec![1.0, 0.0]
        );
        let z = unit_model(&[(0.5, 0.5), (0.0, 0.0)], &[(1.0, 0.0)]);
        assert_eq!(
            z.grad_score_wrt_subject(&Triple::new(0, 0, 1)).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn invalid_ids_are_domain_errors() {
        let m = unit_model(&[(1.0, 0.0)], &[(1.0, 0.0)]);
        assert!(matches!(
            m.score(&Triple::new(0, 0, 3)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            m.score(&Triple::new(0, 2, 0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn filtered_rank_basics() {
        assert_eq!(filtered_rank(&[0.1, 0.9, 0.2], 1, |_| false), 1);
        assert_eq!(filtered_rank(&[0.5, 0.5, 0.5], 1, |_| false), 1);
        assert_eq!(filtered_rank(&[0.9, 0.1, 0.8], 1, |_| false), 3);
        assert_eq!(filtered_rank(&[0.9, 0.1, 0.8], 1, |e| e == 0), 2);
    }

    #[test]
    fn init_shapes_and_determinism() {
        let kg = KnowledgeGraph::from_labeled(&[("a", "r", "b"), ("b", "r", "c")], &[], &[]);
        let cfg = TrainConfig {
            dimension: 1,
            ..TrainConfig::default()
        };
        let m = EmbeddingModel::init(&kg, &cfg).unwrap();
        assert_eq!(m.entity_table().len(), 3 * 2);
        assert_eq!(m.relation_table().len(), 2 * 2);
        assert_eq!(m, EmbeddingModel::init(&kg, &cfg).unwrap());
        let other = EmbeddingModel::init(
            &kg,
            &TrainConfig {
                seed: cfg.seed + 1,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_ne!(m, other);
    }

    #[test]
    fn reserved_kinds_are_rejected() {
        let kg = KnowledgeGraph::from_labeled(&[("a", "r", "b")], &[], &[]);
        let cfg = TrainConfig {
            model: ModelKind::TransE,
            ..TrainConfig::default()
        };
        assert!(matches!(
            EmbeddingModel::init(&kg, &cfg),
            Err(Error::Config(_))
        ));
    }
}
