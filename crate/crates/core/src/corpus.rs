//! Synthetic text collections with known semantic clusters.
//!
//! Texts are built from item subsets: two texts are truly equivalent iff they
//! were generated from the same subset of canonical items, regardless of item
//! order or which surface synonym was chosen. Equality of sets is an
//! equivalence relation, so the ground-truth clusters are well-defined.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterAssignment;
use crate::entropy::ProbabilityVector;
use crate::error::{Error, Result};
use crate::seed;

/// A named list of canonical items, each with one or more surface phrasings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemList {
    name: String,
    items: Vec<Vec<String>>,
}

impl ItemList {
    pub fn new(name: impl Into<String>, items: Vec<Vec<String>>) -> Result<Self> {
        let name = name.into();
        if items.is_empty() {
            return Err(Error::InvalidInput(
                "item list needs at least one item".into(),
            ));
        }
        for (idx, group) in items.iter().enumerate() {
            if group.is_empty() || group.iter().any(|s| s.trim().is_empty()) {
                return Err(Error::InvalidInput(format!(
                    "item {idx} has an empty synonym group or blank phrasing"
                )));
            }
        }
        for i in 0..items.len() {
            for j in (i + 1)..items.len() {
                if items[i][0] == items[j][0] {
                    return Err(Error::InvalidInput(format!(
                        "duplicate canonical item {:?}",
                        items[i][0]
                    )));
                }
            }
        }
        Ok(Self { name, items })
    }

    /// Parses the plain text format: one canonical item per non-empty line,
    /// synonyms separated by `" / "`. Lines starting with `#` are comments.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut items = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let group: Vec<String> = line
                .split(" / ")
                .map(|s| s.trim().to_owned())
                .filter(|s| !s.is_empty())
                .collect();
            items.push(group);
        }
        Self::new(name, items)
    }

    /// Loads a list from disk; the name is the file stem.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("items")
            .to_owned();
        let text = std::fs::read_to_string(path)?;
        Self::parse(name, &text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of canonical items `N`.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Synonym groups, one per canonical item.
    pub fn items(&self) -> &[Vec<String>] {
        &self.items
    }
}

/// The two built-in item lists: free-time hobbies and December-3 historical
/// events (paired paraphrases as whole-sentence synonym groups).
pub fn builtin_lists() -> (ItemList, ItemList) {
    let hobbies = ItemList::new(
        "hobbies",
        vec![
            vec!["running".into(), "jogging".into()],
            vec!["Drone flying".into(), "pilot Aerial drones".into()],
            vec!["jazzercise".into(), "aerobics".into()],
            vec!["making pottery".into(), "making ceramics".into()],
            vec!["water gardening".into(), "aquatic gardening".into()],
            vec!["caving".into(), "spelunking".into(), "potholing".into()],
            vec!["cycling".into(), "bicycling".into(), "biking".into()],
            vec!["reading".into()],
            vec![
                "writing journals".into(),
                "journal writings".into(),
                "journaling".into(),
            ],
            vec!["sculling".into(), "rowing".into()],
        ],
    )
    .expect("builtin hobbies list is valid");

    let events = ItemList::new(
        "december3-events",
        vec![
            vec![
                "Pope John X crowns Berengar I of Italy as Holy Roman Emperor".into(),
                "Berengar I of Italy was crowned Emperor by Pope John X.".into(),
            ],
            vec![
                "USS Alfred becomes the first vessel to fly the Grand Union Flag; the flag is hoisted by John Paul Jones.".into(),
                "John Paul Jones hoisted the the Grand Union Flag on USS Alfred, the first vessel to fly Grand Union Flag.".into(),
            ],
            vec![
                "French General Jean Victor Marie Moreau decisively defeats the Archduke John of Austria near Munich in the Battle of Hohenlinden.".into(),
                "Archduke John of Austria was defeated by French General Jean Victor Marie Moreau near Munich in the Battle of Hohenlinden.".into(),
            ],
            vec![
                "Illinois becomes the 21st U.S. state.".into(),
                "Illinois joined U.S. as its 21st state.".into(),
            ],
            vec![
                "The Zollverein (German Customs Union) begins the first regular census in Germany".into(),
                "The first regular census was conducted by The Zollverein (German Customs Union) in Germany.".into(),
            ],
            vec![
                "The Duquesne Country and Athletic Club defeats an all-star collection of early football players 16\u{2013}0.".into(),
            ],
            vec![
                "Following more than a month of Turkish\u{2013}Armenian War, the Turkish-dictated Treaty of Alexandropol is concluded.".into(),
                "The Turkish-dictated Treaty of Alexandropol concluded after a month of Turkish\u{2013}Armenian War.".into(),
            ],
            vec![
                "President Herbert Hoover delivers his first State of the Union message to Congress. It is presented in the form of a written message rather than a speech.".into(),
                "President Herbert Hoover presents a written message as his first State of the Union message to Congress rather than a speech.".into(),
            ],
            vec![
                "The current flag of Singapore is adopted, six months after Singapore became self-governing within the British Empire.".into(),
                "Singapore adopts it current flag six months after it self-govern within the British Empire.".into(),
            ],
            vec![
                "Ayatollah Ruhollah Khomeini becomes the first Supreme Leader of Iran.".into(),
                "Iran has its first Supreme Leader: Ayatollah Ruhollah Khomeini.".into(),
            ],
        ],
    )
    .expect("builtin events list is valid");

    (hobbies, events)
}

/// Sentence frame a text is rendered through.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    /// "In his free time, John likes a, b, and c as his hobbies." The default.
    #[default]
    FreeTime,
    /// "John enjoys a, b, and c whenever he has a spare moment."
    Enjoys,
    /// "Whenever there is time left in the day, John turns to a, b, and c."
    SpareTime,
    /// "On December 3, s1; s2; s3." for whole-sentence items.
    DateEvents,
    /// Uniformly one of the three phrase frames per text.
    Mixed,
}

impl Template {
    pub fn id(&self) -> &'static str {
        match self {
            Template::FreeTime => "free-time",
            Template::Enjoys => "enjoys",
            Template::SpareTime => "spare-time",
            Template::DateEvents => "date-events",
            Template::Mixed => "mixed",
        }
    }

    fn render(&self, items: &[String], rng: &mut rand_chacha::ChaCha8Rng) -> String {
        match self {
            Template::FreeTime => format!(
                "In his free time, John likes {} as his hobbies.",
                join_list(items)
            ),
            Template::Enjoys => format!(
                "John enjoys {} whenever he has a spare moment.",
                join_list(items)
            ),
            Template::SpareTime => format!(
                "Whenever there is time left in the day, John turns to {}.",
                join_list(items)
            ),
            Template::DateEvents => format!("On December 3, {}.", items.join("; ")),
            Template::Mixed => {
                let choice = [Template::FreeTime, Template::Enjoys, Template::SpareTime]
                    [rng.gen_range(0..3)];
                choice.render(items, rng)
            }
        }
    }
}

fn join_list(items: &[String]) -> String {
    match items.len() {
        0 => String::new(),
        1 => items[0].clone(),
        2 => format!("{} and {}", items[0], items[1]),
        _ => {
            let head = items[..items.len() - 1].join(", ");
            format!("{head}, and {}", items[items.len() - 1])
        }
    }
}

/// Generation settings echoed in the output collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub list_name: String,
    pub m: usize,
    pub ratios: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub template: Template,
}

/// Metadata of one generated text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextMeta {
    /// Identifies the generating collection; cross-collection comparisons are rejected.
    pub collection_id: u64,
    pub index: usize,
    pub label: usize,
    /// Sorted canonical item indices of the generating subset.
    pub subset: Vec<usize>,
    /// Item indices in rendered order.
    pub ordered_items: Vec<usize>,
}

/// A generated collection: texts, ground truth, and the chosen subsets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratedCollection {
    pub id: u64,
    pub texts: Vec<String>,
    pub meta: Vec<TextMeta>,
    pub truth: ClusterAssignment,
    /// The K chosen item subsets (sorted canonical indices), by cluster.
    pub subsets: Vec<Vec<usize>>,
    pub config: GenConfig,
}

/// `C(n, k)` saturating at `u128::MAX`.
fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Largest-remainder allocation of `n` items across `ratios`, ties broken by
/// lower cluster index. Counts always sum to exactly `n`.
pub fn allocate_counts(ratios: &ProbabilityVector, n: usize) -> Vec<usize> {
    let targets: Vec<f64> = ratios.values().iter().map(|r| r * n as f64).collect();
    let mut counts: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = targets[a] - targets[a].floor();
        let fb = targets[b] - targets[b].floor();
        fb.partial_cmp(&fa)
            .expect("fractions are finite")
            .then(a.cmp(&b))
    });
    for &idx in order.iter().take(n - assigned) {
        counts[idx] += 1;
    }
    counts
}

/// Generates `n` texts in `K = ratios.k()` clusters from distinct `M`-subsets
/// of the item list.
///
/// Cluster counts come from largest-remainder allocation of the ratios; each
/// text renders a fresh uniform permutation of its subset with surface forms
/// drawn uniformly from each item's synonym group. Deterministic in
/// `(list, M, ratios, n, seed, template)`.
pub fn generate_collection(
    list: &ItemList,
    m: usize,
    ratios: &ProbabilityVector,
    n: usize,
    master_seed: u64,
    template: Template,
) -> Result<GeneratedCollection> {
    let big_n = list.len();
    if m < 1 || m > big_n {
        return Err(Error::InvalidInput(format!(
            "M = {m} must satisfy 1 <= M <= N = {big_n}"
        )));
    }
    let k = ratios.k();
    let distinct = binomial(big_n, m);
    if (k as u128) > distinct {
        return Err(Error::InvalidInput(format!(
            "K = {k} clusters need distinct {m}-subsets but only {distinct} exist"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }

    let mut rng = seed::rng(master_seed, 0xC0_11EC);
    // K distinct M-subsets, rejection-sampled
    let mut subsets: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut guard = 0usize;
    while subsets.len() < k {
        guard += 1;
        if guard > 100_000 * k {
            return Err(Error::InvalidInput(
                "could not draw distinct subsets; K too close to C(N, M)?".into(),
            ));
        }
        let mut indices: Vec<usize> = (0..big_n).collect();
        indices.shuffle(&mut rng);
        let mut subset: Vec<usize> = indices[..m].to_vec();
        subset.sort_unstable();
        if !subsets.contains(&subset) {
            subsets.push(subset);
        }
    }

    let counts = allocate_counts(ratios, n);
    let id = seed::derive2(
        master_seed,
        0x1D,
        // config-dependent discriminator
        (m as u64) ^ ((n as u64) << 8) ^ ((k as u64) << 40),
    );

    let mut texts = Vec::with_capacity(n);
    let mut meta = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (cluster, (&count, subset)) in counts.iter().zip(&subsets).enumerate() {
        for _ in 0..count {
            let mut ordered = subset.clone();
            ordered.shuffle(&mut rng);
            let surfaces: Vec<String> = ordered
                .iter()
                .map(|&item| {
                    let group = &list.items()[item];
                    group[rng.gen_range(0..group.len())].clone()
                })
                .collect();
            let text = template.render(&surfaces, &mut rng);
            meta.push(TextMeta {
                collection_id: id,
                index: texts.len(),
                label: cluster,
                subset: subset.clone(),
                ordered_items: ordered,
            });
            texts.push(text);
            labels.push(cluster);
        }
    }

    let truth = ClusterAssignment::new(labels, k)?;
    Ok(GeneratedCollection {
        id,
        texts,
        meta,
        truth,
        subsets,
        config: GenConfig {
            list_name: list.name().to_owned(),
            m,
            ratios: ratios.values().to_vec(),
            n,
            seed: master_seed,
            template,
        },
    })
}

/// Ground-truth equivalence: same generating subset, as sets.
///
/// Item order and surface-synonym choice are ignored. Texts from different
/// collections cannot be compared.
pub fn true_equivalent(a: &TextMeta, b: &TextMeta) -> Result<bool> {
    if a.collection_id != b.collection_id {
        return Err(Error::InvalidInput(
            "texts come from different collections".into(),
        ));
    }
    Ok(a.subset == b.subset)
}
