//! Hamming ranking and mAP@k evaluation.

use crate::codes::{hamming_unchecked, last_mask_for, BitCodeSet, CodeRef};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::householder::NORM_FLOOR;
use crate::matrix::{dot, norm_sq};

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub per_query_ap: Vec<f64>,
    pub map_at_k: f64,
    pub k_eval: usize,
}

/// Orders the database for one query: ascending Hamming distance, then
/// ascending cosine distance between the continuous embeddings, then index.
///
/// Cosine distances are only computed for items that share their Hamming
/// distance with another item; a zero-norm embedding there is an error.
pub fn rank_database(
    query_code: CodeRef<'_>,
    db_codes: &BitCodeSet,
    query_emb: &[f64],
    db_emb: &EmbeddingSet,
) -> Result<Vec<usize>> {
    let k = db_codes.bits();
    if query_code.k != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: query_code.k,
        });
    }
    if db_emb.len() != db_codes.len() {
        return Err(Error::DimensionMismatch {
            expected: db_codes.len(),
            actual: db_emb.len(),
        });
    }
    if query_emb.len() != db_emb.dim() {
        return Err(Error::DimensionMismatch {
            expected: db_emb.dim(),
            actual: query_emb.len(),
        });
    }
    let n = db_codes.len();
    let mask = last_mask_for(k);
    let dist: Vec<u32> = (0..n)
        .map(|i| hamming_unchecked(query_code.bytes, db_codes.code(i).bytes, mask))
        .collect();
    let mut bucket = vec![0usize; k + 1];
    for &d in &dist {
        bucket[d as usize] += 1;
    }

    let mut cos_dist = vec![0.0f64; n];
    if dist.iter().any(|&d| bucket[d as usize] > 1) {
        let qn = norm_sq(query_emb).sqrt();
        if !(qn > NORM_FLOOR) {
            return Err(Error::ZeroRow { row: 0 });
        }
        for i in 0..n {
            if bucket[dist[i] as usize] > 1 {
                let d = db_emb.row(i);
                let dn = norm_sq(d).sqrt();
                if !(dn > NORM_FLOOR) {
                    return Err(Error::ZeroRow { row: i });
                }
                cos_dist[i] = 1.0 - dot(query_emb, d) / (qn * dn);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| {
        dist[a]
            .cmp(&dist[b])
            .then(cos_dist[a].total_cmp(&cos_dist[b]))
            .then(a.cmp(&b))
    });
    Ok(order)
}

/// AP over the first `k_eval` ranks; 0 when nothing relevant is retrieved.
pub fn average_precision_at_k(relevance: &[bool], k_eval: usize) -> f64 {
    assert!(k_eval >= 1, "k_eval must be at least 1");
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (j, &rel) in relevance.iter().take(k_eval).enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (j + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

/// Whether two sorted label lists share an element.
fn intersects(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

fn sorted_labels(e: &EmbeddingSet) -> Result<Vec<Vec<u32>>> {
    let labels = e.labels().ok_or(Error::MissingLabels { index: 0 })?;
    labels
        .iter()
        .enumerate()
        .map(|(index, l)| {
            if l.is_empty() {
                return Err(Error::MissingLabels { index });
            }
            let mut l = l.clone();
            l.sort_unstable();
            l.dedup();
            Ok(l)
        })
        .collect()
}

/// mAP@`k_eval` of the queries against the database. An item is relevant to
/// a query when their label sets intersect.
pub fn map_at_k(
    query_emb: &EmbeddingSet,
    query_codes: &BitCodeSet,
    db_emb: &EmbeddingSet,
    db_codes: &BitCodeSet,
    k_eval: usize,
) -> Result<RetrievalResult> {
    if k_eval == 0 {
        return Err(Error::InvalidConfig("k_eval must be at least 1".into()));
    }
    if query_emb.is_empty() {
        return Err(Error::EmptyQuerySet);
    }
    if query_codes.len() != query_emb.len() {
        return Err(Error::DimensionMismatch {
            expected: query_emb.len(),
            actual: query_codes.len(),
        });
    }
    if query_codes.bits() != db_codes.bits() {
        return Err(Error::DimensionMismatch {
            expected: db_codes.bits(),
            actual: query_codes.bits(),
        });
    }
    let q_labels = sorted_labels(query_emb)?;
    let db_labels = sorted_labels(db_emb)?;

    let mut per_query_ap = Vec::with_capacity(query_emb.len());
    let mut relevance = Vec::with_capacity(k_eval.min(db_emb.len()));
    for (q, labels) in q_labels.iter().enumerate() {
        let order = rank_database(query_codes.code(q), db_codes, query_emb.row(q), db_emb)?;
        relevance.clear();
        relevance.extend(order.iter().take(k_eval).map(|&i| intersects(labels, &db_labels[i])));
        per_query_ap.push(average_precision_at_k(&relevance, k_eval));
    }
    let map_at_k = per_query_ap.iter().sum::<f64>() / per_query_ap.len() as f64;
    Ok(RetrievalResult {
        per_query_ap,
        map_at_k,
        k_eval,
    })
}
