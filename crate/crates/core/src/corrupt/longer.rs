use std::collections::HashMap;

use rayon::prelude::*;

use super::{CorruptError, SeededPipelineConfig};
use crate::model::{Dataset, Triple};
use crate::rng::SeedStream;

/// Longer-texts corruption: appends to every text the text of another point whose annotation
/// shares no triple with it. Annotations are unchanged, so everything the
/// donor text expresses is a hallucination of the host.
///
/// Donors are drawn uniformly from the eligible points, independently per
/// host; one donor may serve several hosts. The donor of each host is listed
/// in the provenance record.
pub fn corrupt_longer_texts(
    ds: &Dataset,
    cfg: &SeededPipelineConfig,
) -> Result<Dataset, CorruptError> {
    let n = ds.len();
    if n < 2 {
        return Err(CorruptError::TooFewPoints { needed: 2, found: n });
    }

    let mut postings: HashMap<&Triple, Vec<usize>> = HashMap::new();
    for (index, point) in ds.points().iter().enumerate() {
        for triple in point.triples() {
            postings.entry(triple).or_default().push(index);
        }
    }

    let donors: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|host| {
            // points sharing a triple with the host, plus the host itself
            let mut blocked: Vec<usize> = ds.points()[host]
                .triples()
                .iter()
                .flat_map(|t| postings[t].iter().copied())
                .chain(std::iter::once(host))
                .collect();
            blocked.sort_unstable();
            blocked.dedup();

            let eligible = n - blocked.len();
            if eligible == 0 {
                return Err(CorruptError::NoEligibleDonor(ds.points()[host].id().to_owned()));
            }
            let mut stream = SeedStream::for_point(cfg.seed, host as u64);
            let rank = stream.index(eligible);
            Ok(nth_unblocked(&blocked, rank))
        })
        .collect::<Result<_, _>>()?;

    let mut record = cfg.record(ds);
    let points = ds
        .points()
        .iter()
        .zip(&donors)
        .map(|(host, &donor)| {
            let donor = &ds.points()[donor];
            record
                .details
                .insert(host.id().to_owned(), donor.id().to_owned());
            let mut point = host.clone();
            point.set_text(format!("{} {}", host.text(), donor.text()));
            point
        })
        .collect();
    Ok(ds.derive(points, record)?)
}

/// The `rank`-th index (from zero) that is not in the sorted `blocked` list.
fn nth_unblocked(blocked: &[usize], rank: usize) -> usize {
    let mut candidate = rank;
    for &b in blocked {
        if b <= candidate {
            candidate += 1;
        } else {
            break;
        }
    }
    candidate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DataPoint, Split, TripleSet};

    fn t(h: &str) -> Triple {
        Triple::new(h, "r", "x").unwrap()
    }

    fn point(id: &str, triples: &[&str]) -> DataPoint {
        let set: TripleSet = triples.iter().map(|h| t(h)).collect();
        DataPoint::new(id, format!("Text {id}."), set).unwrap()
    }

    #[test]
    fn nth_unblocked_skips_blocked() {
        assert_eq!(nth_unblocked(&[], 3), 3);
        assert_eq!(nth_unblocked(&[0, 1], 0), 2);
        assert_eq!(nth_unblocked(&[1, 3], 1), 2);
        assert_eq!(nth_unblocked(&[1, 3], 2), 4);
    }

    #[test]
    fn two_disjoint_points_swap_texts() {
        let ds = Dataset::new("d", Split::Train, vec![point("a", &["A"]), point("b", &["B"])]).unwrap();
        let out = corrupt_longer_texts(&ds, &SeededPipelineConfig::new("lt", 1)).unwrap();
        assert_eq!(out.points()[0].text(), "Text a. Text b.");
        assert_eq!(out.points()[1].text(), "Text b. Text a.");
        assert_eq!(out.points()[0].triples(), ds.points()[0].triples());
        assert_eq!(out.provenance()[0].details["a"], "b");
    }

    #[test]
    fn no_eligible_donor() {
        let ds = Dataset::new(
            "d",
            Split::Train,
            vec![point("a", &["A"]), point("b", &["A"]), point("c", &["A", "C"])],
        )
        .unwrap();
        match corrupt_longer_texts(&ds, &SeededPipelineConfig::new("lt", 1)) {
            Err(CorruptError::NoEligibleDonor(id)) => assert_eq!(id, "a"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn donors_never_share_triples() {
        let points: Vec<DataPoint> = (0..60)
            .map(|i| {
                let a = format!("E{}", i % 7);
                let b = format!("F{}", i % 5);
                point(&format!("p{i}"), &[&a, &b])
            })
            .collect();
        let ds = Dataset::new("d", Split::Train, points).unwrap();
        let out = corrupt_longer_texts(&ds, &SeededPipelineConfig::new("lt", 9)).unwrap();
        let by_id: HashMap<&str, &DataPoint> = ds.points().iter().map(|p| (p.id(), p)).collect();
        for (host, donor) in &out.provenance()[0].details {
            assert_ne!(host, donor);
            assert!(by_id[host.as_str()].triples().is_disjoint(by_id[donor.as_str()].triples()));
        }
    }

    #[test]
    fn needs_two_points() {
        let ds = Dataset::new("d", Split::Train, vec![point("a", &["A"])]).unwrap();
        assert!(matches!(
            corrupt_longer_texts(&ds, &SeededPipelineConfig::new("lt", 1)),
            Err(CorruptError::TooFewPoints { needed: 2, found: 1 })
        ));
    }
}
