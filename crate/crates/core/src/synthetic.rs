//! Seeded synthetic graphs with learnable structure, for desk-scale runs.
//!
//! Entities are split into clusters, each with a hub. Facts are
//! `part_of`/`has_part` hub links (an inverse pair), symmetric
//! `similar_to` links inside clusters and `likes` links to the next
//! cluster. Held-out triples are chosen so that their inverse or
//! symmetric counterpart stays in train.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, Split};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub num_entities: usize,
    pub num_clusters: usize,
    pub similar_per_entity: usize,
    pub likes_per_entity: usize,
    pub test_fraction: f64,
    pub valid_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_entities: 50,
            num_clusters: 5,
            similar_per_entity: 2,
            likes_per_entity: 1,
            test_fraction: 0.1,
            valid_fraction: 0.05,
            seed: 7,
        }
    }
}

type Row = (String, String, String);

/// Labelled train/valid/test rows.
pub fn generate_rows(cfg: &SyntheticConfig) -> Result<[Vec<Row>; 3]> {
    if cfg.num_clusters == 0 || cfg.num_entities < 2 * cfg.num_clusters {
        return Err(Error::config("need at least two entities per cluster"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.num_entities;
    let k = cfg.num_clusters;
    let cluster = |e: usize| e % k;
    let hub = |c: usize| c;
    let members = |c: usize| (0..n).filter(move |&e| cluster(e) == c);
    let label = |e: usize| format!("e{e:03}");

    // (s, r, o, counterpart index or none)
    let mut facts: Vec<(usize, &str, usize)> = Vec::new();
    let mut seen = HashSet::new();
    let mut push = |facts: &mut Vec<_>, t: (usize, &'static str, usize)| {
        if seen.insert(t) {
            facts.push(t);
        }
    };
    for e in 0..n {
        let c = cluster(e);
        if e != hub(c) {
            push(&mut facts, (e, "part_of", hub(c)));
            push(&mut facts, (hub(c), "has_part", e));
        }
    }
    for e in 0..n {
        let c = cluster(e);
        let mut peers: Vec<usize> = members(c).filter(|&f| f != e).collect();
        peers.shuffle(&mut rng);
        for &f in peers.iter().take(cfg.similar_per_entity) {
            push(&mut facts, (e, "similar_to", f));
            push(&mut facts, (f, "similar_to", e));
        }
        let next: Vec<usize> = members((c + 1) % k).collect();
        for _ in 0..cfg.likes_per_entity {
            let f = next[rng.random_range(0..next.len())];
            push(&mut facts, (e, "likes", f));
        }
    }

    let counterpart = |&(s, r, o): &(usize, &str, usize)| -> Option<(usize, &'static str, usize)> {
        match r {
            "part_of" => Some((o, "has_part", s)),
            "has_part" => Some((o, "part_of", s)),
            "similar_to" => Some((o, "similar_to", s)),
            _ => None,
        }
    };
    let mut order: Vec<usize> = (0..facts.len()).collect();
    order.shuffle(&mut rng);
    let n_test = (facts.len() as f64 * cfg.test_fraction).round() as usize;
    let n_valid = (facts.len() as f64 * cfg.valid_fraction).round() as usize;
    let mut locked: HashSet<(usize, &str, usize)> = HashSet::new();
    let mut held: HashSet<usize> = HashSet::new();
    let mut test = Vec::new();
    let mut valid = Vec::new();
    for i in order {
        if test.len() >= n_test && valid.len() >= n_valid {
            break;
        }
        let f = facts[i];
        let Some(cp) = counterpart(&f) else { continue };
        if locked.contains(&f) {
            continue;
        }
        locked.insert(cp);
        held.insert(i);
        if test.len() < n_test {
            test.push(f);
        } else {
            valid.push(f);
        }
    }
    let to_row = |(s, r, o): (usize, &str, usize)| (label(s), r.to_owned(), label(o));
    let train = facts
        .iter()
        .enumerate()
        .filter(|(i, _)| !held.contains(i))
        .map(|(_, f)| to_row(*f))
        .collect();
    Ok([
        train,
        valid.into_iter().map(to_row).collect(),
        test.into_iter().map(to_row).collect(),
    ])
}

pub fn generate(cfg: &SyntheticConfig) -> Result<KnowledgeGraph> {
    let [train, valid, test] = generate_rows(cfg)?;
    Ok(KnowledgeGraph::from_labeled(&train, &valid, &test))
}

/// Writes the dataset as `train.txt`, `valid.txt`, `test.txt` under `dir`.
pub fn write_dataset(cfg: &SyntheticConfig, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let rows = generate_rows(cfg)?;
    for (split, rows) in Split::ALL.into_iter().zip(rows) {
        let path = dir.join(split.file_name());
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        for (s, r, o) in rows {
            writeln!(f, "{s}\t{r}\t{o}").map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}
