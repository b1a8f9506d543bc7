//! Four-stage school-record cleaning cascade.
//!
//! Stage order is fixed: keyword filter, proximity dedup, fuzzy-name
//! dedup, settlement filter. Both dedup stages group conflicting records
//! by transitive closure and keep one representative per group: the
//! record with the lexicographically smallest id, carrying the OR of the
//! group's connectivity labels (one connected duplicate means the school
//! is connected). Grouping depends only on ids and geometry, never on
//! input order.

use std::collections::BTreeMap;

use crate::features::{extract_buffer_values, BufferSpec};
use crate::geodata::{haversine_distance, Connectivity, RasterLayer, SchoolRecord};

/// Name substrings (case-insensitive) that mark records outside the study
/// scope.
pub const EXCLUDED_KEYWORDS: [&str; 3] = ["preschool", "nursery", "kindergarten"];

/// Records closer than this are duplicates (25 m buffers overlap).
pub const PROXIMITY_LIMIT_M: f64 = 50.0;

/// Name dedup pairs records within this distance...
pub const NAME_RADIUS_M: f64 = 300.0;

/// ...whose normalized name similarity reaches this threshold.
pub const NAME_SIMILARITY_THRESHOLD: f64 = 0.85;

/// Settlement filter buffer radius.
pub const SETTLEMENT_RADIUS_M: f64 = 150.0;

/// What each cleaning stage did. `removed_*` hold the dropped ids per
/// stage; `groups` maps each surviving representative to the ids it
/// absorbed across both dedup stages.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CleaningReport {
    pub input_count: usize,
    pub removed_keyword: Vec<String>,
    pub removed_proximity: Vec<String>,
    pub removed_name: Vec<String>,
    pub removed_settlement: Vec<String>,
    pub surviving: Vec<String>,
    pub groups: BTreeMap<String, Vec<String>>,
}

impl CleaningReport {
    pub fn removed_total(&self) -> usize {
        self.removed_keyword.len()
            + self.removed_proximity.len()
            + self.removed_name.len()
            + self.removed_settlement.len()
    }

    /// Structured text form, one `key: value` line per fact, groups last.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("input: {}\n", self.input_count));
        out.push_str(&format!("removed.keyword: {}\n", self.removed_keyword.len()));
        out.push_str(&format!("removed.proximity: {}\n", self.removed_proximity.len()));
        out.push_str(&format!("removed.name: {}\n", self.removed_name.len()));
        out.push_str(&format!("removed.settlement: {}\n", self.removed_settlement.len()));
        out.push_str(&format!("surviving: {}\n", self.surviving.len()));
        for (stage, ids) in [
            ("keyword", &self.removed_keyword),
            ("proximity", &self.removed_proximity),
            ("name", &self.removed_name),
            ("settlement", &self.removed_settlement),
        ] {
            for id in ids {
                out.push_str(&format!("removed {stage}: {id}\n"));
            }
        }
        for (rep, members) in &self.groups {
            out.push_str(&format!("group {rep}: {}\n", members.join(" ")));
        }
        out
    }
}

/// Drops records whose name contains any excluded keyword.
pub fn filter_keywords(schools: &[SchoolRecord]) -> (Vec<SchoolRecord>, Vec<SchoolRecord>) {
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for record in schools {
        let name = record.name.to_lowercase();
        if EXCLUDED_KEYWORDS.iter().any(|k| name.contains(k)) {
            removed.push(record.clone());
        } else {
            kept.push(record.clone());
        }
    }
    (kept, removed)
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            self.parent[i] = self.find(self.parent[i]);
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Transitive-closure grouping over a pairwise conflict predicate.
/// Returns survivors (one representative per group, in input order of the
/// representative) and the merged groups (representative id to absorbed
/// ids, sorted).
fn dedup_by<F>(schools: &[SchoolRecord], conflict: F) -> (Vec<SchoolRecord>, BTreeMap<String, Vec<String>>)
where
    F: Fn(&SchoolRecord, &SchoolRecord) -> bool,
{
    let n = schools.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if conflict(&schools[i], &schools[j]) {
                uf.union(i, j);
            }
        }
    }

    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        members.entry(uf.find(i)).or_default().push(i);
    }

    let mut survivors: Vec<(usize, SchoolRecord)> = Vec::new();
    let mut groups = BTreeMap::new();
    for group in members.values() {
        let rep = *group
            .iter()
            .min_by(|&&a, &&b| schools[a].id.cmp(&schools[b].id))
            .expect("groups are nonempty");
        let mut record = schools[rep].clone();
        if group.len() > 1 {
            let labels: Vec<Option<Connectivity>> = group.iter().map(|&i| schools[i].label).collect();
            record.label = if labels.contains(&Some(Connectivity::Connected)) {
                Some(Connectivity::Connected)
            } else if labels.contains(&Some(Connectivity::Unconnected)) {
                Some(Connectivity::Unconnected)
            } else {
                None
            };
            let mut absorbed: Vec<String> = group
                .iter()
                .filter(|&&i| i != rep)
                .map(|&i| schools[i].id.clone())
                .collect();
            absorbed.sort();
            groups.insert(record.id.clone(), absorbed);
        }
        survivors.push((rep, record));
    }
    survivors.sort_by_key(|(pos, _)| *pos);
    (survivors.into_iter().map(|(_, r)| r).collect(), groups)
}

/// Merges records whose locations are closer than [`PROXIMITY_LIMIT_M`]
/// (strictly), transitively.
pub fn dedup_by_proximity(schools: &[SchoolRecord]) -> (Vec<SchoolRecord>, BTreeMap<String, Vec<String>>) {
    dedup_by(schools, |a, b| {
        haversine_distance(a.location, b.location) < PROXIMITY_LIMIT_M
    })
}

/// Similarity in [0, 1]: one minus the edit distance over the longer
/// length. Inputs are whitespace-trimmed and case-folded first; two empty
/// strings are identical.
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.trim().to_lowercase().chars().collect();
    let b: Vec<char> = b.trim().to_lowercase().chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&a, &b) as f64 / longest as f64
}

/// Unit-cost insert/delete/substitute edit distance, one rolling row.
fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut current = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            current.push(substitute.min(prev[j + 1] + 1).min(current[j] + 1));
        }
        prev = current;
    }
    prev[b.len()]
}

/// Merges records within `radius_m` of each other whose names reach the
/// similarity `threshold`, transitively.
pub fn dedup_by_name(
    schools: &[SchoolRecord],
    radius_m: f64,
    threshold: f64,
) -> (Vec<SchoolRecord>, BTreeMap<String, Vec<String>>) {
    dedup_by(schools, |a, b| {
        haversine_distance(a.location, b.location) <= radius_m
            && normalized_levenshtein(&a.name, &b.name) >= threshold
    })
}

/// Keeps records whose 150 m buffer holds a nonzero pixel sum in BOTH
/// rasters. Nodata counts as zero, and a buffer with no valid pixels
/// counts as sum zero, so such records are removed rather than erroring.
pub fn settlement_filter(
    schools: &[SchoolRecord],
    footprints: &RasterLayer,
    ghsl: &RasterLayer,
    radius_m: f64,
) -> (Vec<SchoolRecord>, Vec<SchoolRecord>) {
    let spec = BufferSpec { radius_m };
    let buffer_sum = |raster: &RasterLayer, record: &SchoolRecord| -> f64 {
        extract_buffer_values(raster, record.location, spec)
            .map(|values| values.iter().sum())
            .unwrap_or(0.0)
    };
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for record in schools {
        if buffer_sum(footprints, record) != 0.0 && buffer_sum(ghsl, record) != 0.0 {
            kept.push(record.clone());
        } else {
            removed.push(record.clone());
        }
    }
    (kept, removed)
}

/// Which cascade stages to run. The settlement stage additionally needs
/// both rasters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CascadeToggles {
    pub keywords: bool,
    pub proximity: bool,
    pub name: bool,
    pub settlement: bool,
}

impl Default for CascadeToggles {
    fn default() -> Self {
        Self {
            keywords: true,
            proximity: true,
            name: true,
            settlement: true,
        }
    }
}

/// Runs the full cascade in stage order and accounts for every record:
/// removed-per-stage counts plus survivors always sum to the input count.
pub fn clean_cascade(
    schools: &[SchoolRecord],
    toggles: CascadeToggles,
    settlement_layers: Option<(&RasterLayer, &RasterLayer)>,
) -> (Vec<SchoolRecord>, CleaningReport) {
    let mut report = CleaningReport {
        input_count: schools.len(),
        ..Default::default()
    };
    let ids = |records: &[SchoolRecord]| -> Vec<String> {
        let mut ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
        ids.sort();
        ids
    };

    let mut current: Vec<SchoolRecord> = schools.to_vec();
    if toggles.keywords {
        let (kept, removed) = filter_keywords(&current);
        report.removed_keyword = ids(&removed);
        current = kept;
    }
    if toggles.proximity {
        let (kept, groups) = dedup_by_proximity(&current);
        report.removed_proximity = absorb(&mut report.groups, groups);
        current = kept;
    }
    if toggles.name {
        let (kept, groups) = dedup_by_name(&current, NAME_RADIUS_M, NAME_SIMILARITY_THRESHOLD);
        report.removed_name = absorb(&mut report.groups, groups);
        current = kept;
    }
    if toggles.settlement {
        if let Some((footprints, ghsl)) = settlement_layers {
            let (kept, removed) = settlement_filter(&current, footprints, ghsl, SETTLEMENT_RADIUS_M);
            report.removed_settlement = ids(&removed);
            current = kept;
        }
    }
    report.surviving = ids(&current);
    (current, report)
}

/// Folds one dedup stage's groups into the accumulated group map, keeping
/// groups transitive across stages: when a later stage absorbs an earlier
/// representative, that representative's own members move along. Returns
/// the ids this stage removed, sorted.
fn absorb(accumulated: &mut BTreeMap<String, Vec<String>>, groups: BTreeMap<String, Vec<String>>) -> Vec<String> {
    let mut stage_removed = Vec::new();
    for (rep, members) in groups {
        for member in members {
            stage_removed.push(member.clone());
            let inherited = accumulated.remove(&member).unwrap_or_default();
            let entry = accumulated.entry(rep.clone()).or_default();
            entry.push(member);
            entry.extend(inherited);
        }
    }
    for members in accumulated.values_mut() {
        members.sort();
    }
    stage_removed.sort();
    stage_removed
}
