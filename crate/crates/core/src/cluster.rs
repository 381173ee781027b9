//! Agglomerative clustering over dissimilarity matrices and a side-by-side
//! comparison of two measures on the same correlations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corr::CorrelationMatrix;
use crate::dissimilarity::{apply_measure, DissimilarityMatrix, MeasureKind};
use crate::error::{Error, Result};
use crate::verify::{coherence_index, Coherence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkageKind {
    Single,
    Complete,
    Average,
}

impl LinkageKind {
    pub fn name(self) -> &'static str {
        match self {
            LinkageKind::Single => "single",
            LinkageKind::Complete => "complete",
            LinkageKind::Average => "average",
        }
    }
}

impl fmt::Display for LinkageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkageKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(LinkageKind::Single),
            "complete" => Ok(LinkageKind::Complete),
            "average" => Ok(LinkageKind::Average),
            _ => Err(format!(
                "unknown linkage `{s}` (expected single, complete or average)"
            )),
        }
    }
}

/// Clusters `0..n` are the leaves; the cluster created by merge `s` has id
/// `n + s`. `cluster_a < cluster_b` always.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaf_names: Vec<String>,
}

impl Dendrogram {
    pub fn n_leaves(&self) -> usize {
        self.leaf_names.len()
    }
}

/// Index sets, each sorted, ordered by smallest member.
pub type Partition = Vec<Vec<usize>>;

/// Naive `O(n^3)` agglomeration with Lance-Williams updates. Each step
/// merges the active pair with the smallest linkage value; ties go to the
/// lexicographically smallest `(cluster_a, cluster_b)`.
pub fn cluster(d: &DissimilarityMatrix, linkage: LinkageKind) -> Result<Dendrogram> {
    let n = d.n();
    if n < 2 {
        return Err(Error::TooFewVariables { got: n, need: 2 });
    }
    let total = 2 * n - 1;
    let mut dist = vec![f64::NAN; total * total];
    for i in 0..n {
        for j in 0..n {
            dist[i * total + j] = d.get(i, j);
        }
    }
    let mut size = vec![0usize; total];
    size[..n].fill(1);
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for (p, &a) in active.iter().enumerate() {
            for &b in &active[p + 1..] {
                let h = dist[a * total + b];
                if best.is_none_or(|(bh, _, _)| h < bh) {
                    best = Some((h, a, b));
                }
            }
        }
        let (height, a, b) = best.expect("at least two active clusters");
        let m = n + step;
        size[m] = size[a] + size[b];
        active.retain(|&x| x != a && x != b);
        for &x in &active {
            let da = dist[a * total + x];
            let db = dist[b * total + x];
            let v = match linkage {
                LinkageKind::Single => da.min(db),
                LinkageKind::Complete => da.max(db),
                LinkageKind::Average => {
                    (size[a] as f64 * da + size[b] as f64 * db) / size[m] as f64
                }
            };
            dist[m * total + x] = v;
            dist[x * total + m] = v;
        }
        active.push(m);
        merges.push(Merge {
            cluster_a: a,
            cluster_b: b,
            height,
            size: size[m],
        });
    }

    let leaf_names = match d.names() {
        Some(names) => names.to_vec(),
        None => (0..n).map(|i| i.to_string()).collect(),
    };
    Ok(Dendrogram { merges, leaf_names })
}

/// Undoes the last `k - 1` merges.
pub fn cut(dend: &Dendrogram, k: usize) -> Result<Partition> {
    let n = dend.n_leaves();
    if k < 1 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    for m in &dend.merges[..n - k] {
        let mut a = members[m.cluster_a].take().unwrap_or_default();
        let b = members[m.cluster_b].take().unwrap_or_default();
        a.extend(b);
        members.push(Some(a));
    }
    let mut parts: Partition = members
        .into_iter()
        .flatten()
        .map(|mut set| {
            set.sort_unstable();
            set
        })
        .collect();
    parts.sort_by_key(|set| set[0]);
    Ok(parts)
}

fn labels(p: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut out = vec![usize::MAX; n];
    for (c, set) in p.iter().enumerate() {
        for &i in set {
            out[i] = c;
        }
    }
    out
}

/// Fraction of unordered pairs on which the two partitions agree (together
/// in both or apart in both). 1 when fewer than two items.
pub fn rand_index(a: &[Vec<usize>], b: &[Vec<usize>]) -> f64 {
    let n = a.iter().map(Vec::len).sum::<usize>();
    if n < 2 {
        return 1.0;
    }
    let la = labels(a, n);
    let lb = labels(b, n);
    let mut agree = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if (la[i] == la[j]) == (lb[i] == lb[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / (n * (n - 1) / 2) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceComparison {
    pub measure_a: MeasureKind,
    pub measure_b: MeasureKind,
    pub linkage: LinkageKind,
    pub coherence_a: Coherence,
    pub coherence_b: Coherence,
    pub dendrogram_a: Dendrogram,
    pub dendrogram_b: Dendrogram,
    pub partitions_at_k: BTreeMap<usize, (Partition, Partition)>,
    pub agreement_at_k: BTreeMap<usize, f64>,
}

pub fn compare_measures(
    c: &CorrelationMatrix,
    a: MeasureKind,
    b: MeasureKind,
    linkage: LinkageKind,
    ks: &[usize],
) -> Result<CoherenceComparison> {
    let da = apply_measure(c, a);
    let db = apply_measure(c, b);
    let coherence_a = coherence_index(&da)?;
    let coherence_b = coherence_index(&db)?;
    let dendrogram_a = cluster(&da, linkage)?;
    let dendrogram_b = cluster(&db, linkage)?;
    let mut partitions_at_k = BTreeMap::new();
    let mut agreement_at_k = BTreeMap::new();
    for &k in ks {
        let pa = cut(&dendrogram_a, k)?;
        let pb = cut(&dendrogram_b, k)?;
        agreement_at_k.insert(k, rand_index(&pa, &pb));
        partitions_at_k.insert(k, (pa, pb));
    }
    Ok(CoherenceComparison {
        measure_a: a,
        measure_b: b,
        linkage,
        coherence_a,
        coherence_b,
        dendrogram_a,
        dendrogram_b,
        partitions_at_k,
        agreement_at_k,
    })
}
