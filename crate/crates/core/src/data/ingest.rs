use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::cohort::CitationSequence;
use crate::data::{DataError, PaperRecord};

/// Bookkeeping of reference entries that did not become counted citations.
///
/// `counted_citations + duplicate_references + self_citations +
/// dangling_references + citations_before_publication` always equals
/// `reference_entries`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub papers: usize,
    pub reference_entries: usize,
    pub counted_citations: usize,
    pub duplicate_references: usize,
    pub self_citations: usize,
    pub dangling_references: usize,
    pub citations_before_publication: usize,
}

#[derive(Debug, Clone)]
pub struct IngestOutput {
    pub sequences: BTreeMap<String, CitationSequence>,
    pub anomalies: AnomalyReport,
    /// Latest publication year in the corpus; every sequence runs to it.
    pub end_year: i32,
}

/// Builds per-paper citation sequences from raw records.
///
/// A citation event is dated by the citing paper's publication year, so paper
/// `d` gains one new citation at offset `year(citer) - year(d)` for every
/// distinct citer. Self-citations are excluded, references to unknown ids are
/// ignored, and citations dated before the cited paper's publication are
/// dropped; all three are tallied in the anomaly report. Input order is
/// irrelevant: any permutation of the records yields identical output.
pub fn ingest(records: &[PaperRecord]) -> Result<IngestOutput, DataError> {
    let mut years: BTreeMap<&str, i32> = BTreeMap::new();
    for record in records {
        if record.id.is_empty() {
            return Err(DataError::InvalidRecord {
                id: "<empty>".into(),
                reason: "empty paper id".into(),
            });
        }
        if !(1800..=2100).contains(&record.year) {
            return Err(DataError::InvalidRecord {
                id: record.id.clone(),
                reason: format!("publication year {} outside 1800..=2100", record.year),
            });
        }
        match years.insert(&record.id, record.year) {
            Some(prev) if prev != record.year => {
                return Err(DataError::ConflictingYears {
                    id: record.id.clone(),
                    year_a: prev,
                    year_b: record.year,
                });
            }
            _ => {}
        }
    }
    if years.is_empty() {
        return Ok(IngestOutput {
            sequences: BTreeMap::new(),
            anomalies: AnomalyReport::default(),
            end_year: 0,
        });
    }

    let end_year = years.values().copied().max().unwrap();
    let mut anomalies = AnomalyReport { papers: years.len(), ..Default::default() };

    // Distinct citers per Def of citation count: a citer's repeated
    // references to the same target collapse to one edge, across duplicate
    // records of the same citer too.
    let mut cited_by: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for record in records {
        let targets = cited_by.entry(&record.id).or_default();
        for target in &record.references {
            anomalies.reference_entries += 1;
            if !targets.insert(target) {
                anomalies.duplicate_references += 1;
            }
        }
    }

    let mut yearly: BTreeMap<&str, Vec<u32>> = years
        .iter()
        .map(|(&id, &year)| (id, vec![0u32; (end_year - year) as usize + 1]))
        .collect();

    for (citer, targets) in &cited_by {
        let citer_year = years[citer];
        for target in targets {
            if target == citer {
                anomalies.self_citations += 1;
                continue;
            }
            let Some(&target_year) = years.get(*target) else {
                anomalies.dangling_references += 1;
                continue;
            };
            if citer_year < target_year {
                anomalies.citations_before_publication += 1;
                continue;
            }
            yearly.get_mut(*target).unwrap()[(citer_year - target_year) as usize] += 1;
            anomalies.counted_citations += 1;
        }
    }

    let sequences = yearly
        .into_iter()
        .map(|(id, counts)| {
            let seq = CitationSequence::from_yearly(id.to_string(), years[id], counts);
            (id.to_string(), seq)
        })
        .collect();

    Ok(IngestOutput { sequences, anomalies, end_year })
}
