//! Synthetic corpora with known ground truth.
//!
//! Every text is rendered from its triples, one sentence each, so the
//! expressed set of a point is exactly its annotation plus its missing
//! triples. Entity names have a fixed width (`Ent00042`), so no name is a
//! substring of another and table-driven backends find exactly the planted
//! entities.

use crate::model::{normalize_surface, DataPoint, Triple, TripleSet};
use crate::rng::SeedStream;

const OPENERS: [&str; 4] = ["", "Notably, ", "It is known that ", "Records show that "];

pub fn entity(k: usize) -> String {
    format!("Ent{k:05}")
}

/// One sentence per triple; `variant` picks an opener so that points sharing
/// an annotation still get distinct texts.
pub fn render_text(triples: &TripleSet, variant: usize) -> String {
    let opener = OPENERS[variant % OPENERS.len()];
    let mut sentences: Vec<String> = triples
        .iter()
        .map(|t| {
            format!(
                "{} {} {}.",
                normalize_surface(t.head()),
                normalize_surface(t.relation()),
                normalize_surface(t.tail())
            )
        })
        .collect();
    if sentences.is_empty() {
        sentences.push("Nothing is stated.".into());
    }
    let mut text = format!("{opener}{}", sentences.join(" "));
    if variant >= OPENERS.len() {
        text.push_str(&format!(" (version {variant})"));
    }
    text
}

fn point(id: String, triples: TripleSet, variant: usize) -> DataPoint {
    let text = render_text(&triples, variant);
    DataPoint::new(id, text, triples).expect("generated point is valid")
}

/// Points whose annotation sizes are given, each triple over fresh entities,
/// relations cycling through `relations`.
pub fn sized_points(sizes: &[usize], relations: &[&str]) -> Vec<DataPoint> {
    let mut next = 0;
    sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| {
            let triples: TripleSet = (0..size)
                .map(|j| {
                    let t = Triple::new(entity(next), relations[j % relations.len()], entity(next + 1)).unwrap();
                    next += 2;
                    t
                })
                .collect();
            point(format!("s{i}"), triples, 0)
        })
        .collect()
}

/// `n` points with between `min` and `max` triples each. Triples of a point
/// link entities from a private pool of `max + 1` names, so heads and tails
/// repeat within a point but never across points.
pub fn random_points(n: usize, min: usize, max: usize, relations: &[&str], seed: u64) -> Vec<DataPoint> {
    assert!(min <= max && !relations.is_empty());
    let pool = max + 1;
    (0..n)
        .map(|i| {
            let mut stream = SeedStream::for_point(seed, i as u64);
            let size = min + stream.below((max - min + 1) as u64) as usize;
            let mut triples = TripleSet::new();
            while triples.len() < size {
                let h = stream.below(pool as u64) as usize;
                let mut t = stream.below(pool as u64 - 1) as usize;
                if t >= h {
                    t += 1;
                }
                let r = relations[stream.below(relations.len() as u64) as usize];
                triples.insert(Triple::new(entity(i * pool + h), r, entity(i * pool + t)).unwrap());
            }
            point(format!("r{i}"), triples, 0)
        })
        .collect()
}

/// Subset chains for detection benchmarks. Each group has a base annotation
/// of one to three triples, carried by one or two points, and one or two
/// strictly larger annotations built on top of it. Every added triple
/// introduces a new entity, so a hallucinated text always mentions something
/// its sample's annotation does not.
pub fn chain_points(groups: usize, relations: &[&str], seed: u64) -> Vec<DataPoint> {
    let mut points = Vec::new();
    let mut next = 0usize;
    let mut fresh = || {
        next += 1;
        entity(next)
    };
    for g in 0..groups {
        let mut stream = SeedStream::for_point(seed, g as u64);
        let mut relation = || relations[stream.below(relations.len() as u64) as usize];
        let anchor = fresh();
        let base_size = 1 + (g % 3);
        let mut annotation = TripleSet::new();
        for _ in 0..base_size {
            annotation.insert(Triple::new(anchor.as_str(), relation(), fresh().as_str()).unwrap());
        }
        let copies = 1 + (g % 2);
        for c in 0..copies {
            points.push(point(format!("g{g}-base{c}"), annotation.clone(), c));
        }
        let levels = 1 + (g % 4 == 0) as usize;
        for level in 0..levels {
            let extra = 1 + ((g + level) % 2);
            for _ in 0..extra {
                annotation.insert(Triple::new(anchor.as_str(), relation(), fresh().as_str()).unwrap());
            }
            points.push(point(format!("g{g}-up{level}"), annotation.clone(), 0));
        }
    }
    points
}

/// Points drawing up to `max` triples from a small shared pool, so equal
/// annotations, incidental subsets and empty annotations all occur.
pub fn pool_points(n: usize, pool: usize, max: usize, seed: u64) -> Vec<DataPoint> {
    let triples: Vec<Triple> = (0..pool)
        .map(|k| Triple::new(entity(90_000 + k), "linkedTo", entity(90_000 + pool + k)).unwrap())
        .collect();
    (0..n)
        .map(|i| {
            let mut stream = SeedStream::for_point(seed, i as u64);
            let size = stream.below(max as u64 + 1) as usize;
            let chosen: TripleSet = stream
                .choose_distinct(pool, size)
                .into_iter()
                .map(|k| triples[k].clone())
                .collect();
            point(format!("pool{i}"), chosen, i + OPENERS.len())
        })
        .collect()
}
