//! Protagonist identification, gender resolution, anonymization, and
//! per-sentence agent roles.
//!
//! The protagonist is the character with the most coreference mentions.
//! Conceptual gender comes from gendered pronouns only; names never vote.
//! Anonymization replaces every character mention with a gender-neutral
//! placeholder (`PersonX` for the protagonist) so downstream inference sees
//! no surface gender signal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::BackendError;
use crate::corpus::{tokenize, Sentence, Story, StoryId};
use crate::util::slice_chars;

/// Conceptual gender resolved from pronouns. `Unresolved` stories are
/// excluded from gendered aggregation downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    #[serde(rename = "F")]
    Female,
    #[serde(rename = "M")]
    Male,
    #[serde(rename = "UNRESOLVED")]
    Unresolved,
}

impl Gender {
    pub fn code(&self) -> &'static str {
        match self {
            Gender::Female => "F",
            Gender::Male => "M",
            Gender::Unresolved => "UNRESOLVED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MentionKind {
    #[serde(rename = "NAME")]
    Name,
    #[serde(rename = "PRONOUN")]
    Pronoun,
    #[serde(rename = "NOMINAL")]
    Nominal,
}

/// One textual mention of a character. Spans are character offsets into the
/// owning sentence's text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub sentence_index: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub surface: String,
    pub kind: MentionKind,
}

impl Mention {
    fn order_key(&self) -> (usize, usize) {
        (self.sentence_index, self.char_start)
    }

    /// True when the surface carries a possessive marker or is itself a
    /// possessive pronoun. "her" is treated as objective; see `anonymize`.
    pub fn is_possessive(&self) -> bool {
        let lower = self.surface.to_lowercase();
        lower.ends_with("'s")
            || lower.ends_with("\u{2019}s")
            || POSSESSIVE_PRONOUNS.contains(&lower.as_str())
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ClusterId(pub usize);

/// All mentions of one character within a story, sorted by position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionCluster {
    pub cluster_id: ClusterId,
    pub mentions: Vec<Mention>,
}

impl MentionCluster {
    pub fn first_mention(&self) -> &Mention {
        &self.mentions[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SentenceRole {
    #[serde(rename = "PROT_AGENT")]
    ProtAgent,
    #[serde(rename = "OTHER_AGENT")]
    OtherAgent,
    #[serde(rename = "NO_AGENT")]
    NoAgent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtagonistAnnotation {
    pub story_id: StoryId,
    pub protagonist_cluster: ClusterId,
    pub gender: Gender,
    pub pronoun_counts: BTreeMap<String, usize>,
    pub sentence_roles: Vec<SentenceRole>,
}

/// A story with every character mention replaced by a placeholder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnonymizedStory {
    pub story: Story,
    pub placeholder_map: BTreeMap<ClusterId, String>,
}

#[derive(Debug, Error)]
pub enum ProtagonistError {
    #[error("coreference backend failed on story {story_id}: {source}")]
    Backend {
        story_id: StoryId,
        #[source]
        source: BackendError,
    },
    #[error("invalid cluster from backend on story {story_id}: {reason}")]
    InvalidCluster { story_id: StoryId, reason: String },
    #[error("no protagonist: story has no mention clusters")]
    NoProtagonist,
    #[error("annotation conflict in sentence {sentence_index}: mentions of clusters {a:?} and {b:?} overlap")]
    AnnotationConflict {
        sentence_index: usize,
        a: ClusterId,
        b: ClusterId,
    },
    #[error("cluster {0:?} does not belong to the story")]
    ForeignCluster(ClusterId),
}

/// Gendered pronoun surfaces that vote for `M` in gender resolution.
pub const MALE_PRONOUNS: &[&str] = &["he", "him", "his"];
/// Gendered pronoun surfaces that vote for `F` in gender resolution.
pub const FEMALE_PRONOUNS: &[&str] = &["she", "her", "hers"];
/// First-person surfaces; a cluster containing any of these stays unresolved.
pub const FIRST_PERSON_PRONOUNS: &[&str] = &[
    "i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves",
];
/// Every gendered surface that must be absent after anonymization.
pub const GENDERED_PRONOUNS: &[&str] = &[
    "he", "him", "his", "himself", "she", "her", "hers", "herself",
];

const POSSESSIVE_PRONOUNS: &[&str] = &[
    "his", "hers", "my", "mine", "our", "ours", "their", "theirs", "its",
];

/// Closed pronoun set used for mention-kind classification.
pub const PRONOUNS: &[&str] = &[
    "he", "him", "his", "himself", "she", "her", "hers", "herself", "i", "me", "my", "mine",
    "myself", "we", "us", "our", "ours", "ourselves", "they", "them", "their", "theirs",
    "themselves", "it", "its", "itself", "you", "your", "yours", "yourself", "yourselves",
];

pub fn is_pronoun(surface: &str) -> bool {
    PRONOUNS.contains(&surface.to_lowercase().as_str())
}

/// Strips a possessive suffix from a name surface: "Anna's" -> "Anna".
pub fn strip_possessive(surface: &str) -> &str {
    surface
        .strip_suffix("'s")
        .or_else(|| surface.strip_suffix("\u{2019}s"))
        .unwrap_or(surface)
}

/// Raw cluster span as produced by a coreference backend: character offsets
/// into one sentence's text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionSpan {
    pub sentence_index: usize,
    pub char_start: usize,
    pub char_end: usize,
}

/// Coreference strategy contract. Implementations receive the story and
/// return clusters of mention spans; surfaces and kinds are derived here.
pub trait CorefBackend: Send + Sync {
    fn id(&self) -> &str;
    fn version(&self) -> &str;
    fn resolve(&self, story: &Story) -> Result<Vec<Vec<MentionSpan>>, BackendError>;
}

/// Runs the backend and lifts its spans into validated [`MentionCluster`]s.
pub fn coref_annotate(
    story: &Story,
    backend: &dyn CorefBackend,
) -> Result<Vec<MentionCluster>, ProtagonistError> {
    let spans = backend.resolve(story).map_err(|source| ProtagonistError::Backend {
        story_id: story.story_id.clone(),
        source,
    })?;
    let mut clusters = Vec::with_capacity(spans.len());
    for (idx, cluster_spans) in spans.into_iter().enumerate() {
        if cluster_spans.is_empty() {
            return Err(ProtagonistError::InvalidCluster {
                story_id: story.story_id.clone(),
                reason: format!("cluster {idx} is empty"),
            });
        }
        let mut mentions = Vec::with_capacity(cluster_spans.len());
        for span in cluster_spans {
            let sentence = story.sentences.get(span.sentence_index).ok_or_else(|| {
                ProtagonistError::InvalidCluster {
                    story_id: story.story_id.clone(),
                    reason: format!("sentence index {} out of range", span.sentence_index),
                }
            })?;
            let surface = slice_chars(&sentence.text, span.char_start, span.char_end)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| ProtagonistError::InvalidCluster {
                    story_id: story.story_id.clone(),
                    reason: format!(
                        "span {}..{} out of range in sentence {}",
                        span.char_start, span.char_end, span.sentence_index
                    ),
                })?
                .to_string();
            mentions.push(Mention {
                sentence_index: span.sentence_index,
                char_start: span.char_start,
                char_end: span.char_end,
                surface: surface.clone(),
                kind: classify_surface(&surface),
            });
        }
        mentions.sort_by_key(Mention::order_key);
        for pair in mentions.windows(2) {
            if pair[0].sentence_index == pair[1].sentence_index
                && pair[1].char_start < pair[0].char_end
            {
                return Err(ProtagonistError::InvalidCluster {
                    story_id: story.story_id.clone(),
                    reason: format!(
                        "overlapping mentions within cluster {idx} in sentence {}",
                        pair[0].sentence_index
                    ),
                });
            }
        }
        clusters.push(MentionCluster {
            cluster_id: ClusterId(idx),
            mentions,
        });
    }
    Ok(clusters)
}

fn classify_surface(surface: &str) -> MentionKind {
    if is_pronoun(surface) {
        MentionKind::Pronoun
    } else {
        let core = strip_possessive(surface);
        let mut chars = core.chars();
        match chars.next() {
            Some(first) if first.is_uppercase() => MentionKind::Name,
            _ => MentionKind::Nominal,
        }
    }
}

/// Picks the cluster with the most mentions; ties break to the earliest
/// first mention. Permutation-invariant over the input order.
pub fn select_protagonist(clusters: &[MentionCluster]) -> Result<ClusterId, ProtagonistError> {
    clusters
        .iter()
        .max_by(|a, b| {
            a.mentions
                .len()
                .cmp(&b.mentions.len())
                .then_with(|| b.first_mention().order_key().cmp(&a.first_mention().order_key()))
        })
        .map(|c| c.cluster_id)
        .ok_or(ProtagonistError::NoProtagonist)
}

/// Majority vote over gendered pronoun mentions. Zero pronouns or an exact
/// tie stays unresolved, as does any first-person cluster.
pub fn resolve_gender(cluster: &MentionCluster) -> Gender {
    let mut male = 0usize;
    let mut female = 0usize;
    for mention in &cluster.mentions {
        let lower = mention.surface.to_lowercase();
        if FIRST_PERSON_PRONOUNS.contains(&lower.as_str()) {
            return Gender::Unresolved;
        }
        if MALE_PRONOUNS.contains(&lower.as_str()) {
            male += 1;
        } else if FEMALE_PRONOUNS.contains(&lower.as_str()) {
            female += 1;
        }
    }
    match male.cmp(&female) {
        std::cmp::Ordering::Greater => Gender::Male,
        std::cmp::Ordering::Less => Gender::Female,
        std::cmp::Ordering::Equal => Gender::Unresolved,
    }
}

/// Pronoun surface frequencies (lowercased) within one cluster.
pub fn pronoun_counts(cluster: &MentionCluster) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for mention in &cluster.mentions {
        if mention.kind == MentionKind::Pronoun {
            *counts.entry(mention.surface.to_lowercase()).or_insert(0) += 1;
        }
    }
    counts
}

/// Placeholder for the i-th non-protagonist cluster (0-based), ordered by
/// first mention: PersonY, PersonZ, then PersonN3, PersonN4, ...
fn other_placeholder(i: usize) -> String {
    match i {
        0 => "PersonY".to_string(),
        1 => "PersonZ".to_string(),
        n => format!("PersonN{}", n + 1),
    }
}

/// Replaces every mention of every cluster with a gender-neutral
/// placeholder. The protagonist becomes `PersonX`; possessive surfaces get
/// `'s` appended. Sentence text is rebuilt and re-tokenized, so token spans
/// stay consistent.
pub fn anonymize(
    story: &Story,
    clusters: &[MentionCluster],
    protagonist: ClusterId,
) -> Result<AnonymizedStory, ProtagonistError> {
    if !clusters.is_empty() && !clusters.iter().any(|c| c.cluster_id == protagonist) {
        return Err(ProtagonistError::ForeignCluster(protagonist));
    }
    let mut placeholder_map: BTreeMap<ClusterId, String> = BTreeMap::new();
    let mut others: Vec<&MentionCluster> = clusters
        .iter()
        .filter(|c| c.cluster_id != protagonist)
        .collect();
    others.sort_by_key(|c| c.first_mention().order_key());
    for cluster in clusters {
        if cluster.cluster_id == protagonist {
            placeholder_map.insert(cluster.cluster_id, "PersonX".to_string());
        }
    }
    for (i, cluster) in others.iter().enumerate() {
        placeholder_map.insert(cluster.cluster_id, other_placeholder(i));
    }

    // Group mentions per sentence and reject cross-cluster overlaps.
    let mut per_sentence: BTreeMap<usize, Vec<(&Mention, ClusterId)>> = BTreeMap::new();
    for cluster in clusters {
        for mention in &cluster.mentions {
            if mention.sentence_index >= story.sentences.len() {
                return Err(ProtagonistError::ForeignCluster(cluster.cluster_id));
            }
            per_sentence
                .entry(mention.sentence_index)
                .or_default()
                .push((mention, cluster.cluster_id));
        }
    }
    for mentions in per_sentence.values_mut() {
        mentions.sort_by_key(|(m, _)| m.char_start);
        for pair in mentions.windows(2) {
            let (a, a_cluster) = pair[0];
            let (b, b_cluster) = pair[1];
            if b.char_start < a.char_end {
                return Err(ProtagonistError::AnnotationConflict {
                    sentence_index: a.sentence_index,
                    a: a_cluster,
                    b: b_cluster,
                });
            }
        }
    }

    let mut sentences = Vec::with_capacity(story.sentences.len());
    for sentence in &story.sentences {
        let text = match per_sentence.get(&sentence.index) {
            None => sentence.text.clone(),
            Some(mentions) => {
                let mut rebuilt = String::with_capacity(sentence.text.len());
                let mut cursor = 0usize;
                for (mention, cluster_id) in mentions {
                    rebuilt.push_str(
                        slice_chars(&sentence.text, cursor, mention.char_start)
                            .expect("validated span"),
                    );
                    let placeholder = &placeholder_map[cluster_id];
                    rebuilt.push_str(placeholder);
                    if mention.is_possessive() {
                        rebuilt.push_str("'s");
                    }
                    cursor = mention.char_end;
                }
                let tail_end = sentence.text.chars().count();
                rebuilt.push_str(
                    slice_chars(&sentence.text, cursor, tail_end).expect("validated span"),
                );
                rebuilt
            }
        };
        let tokens = tokenize(&text);
        sentences.push(Sentence {
            index: sentence.index,
            text,
            tokens,
        });
    }
    let token_count = sentences.iter().map(|s| s.tokens.len()).sum();
    Ok(AnonymizedStory {
        story: Story {
            story_id: story.story_id.clone(),
            title: story.title.clone(),
            sentences,
            source: story.source,
            token_count,
        },
        placeholder_map,
    })
}

/// Per-sentence agent roles via the earliest-mention heuristic: the first
/// character mention in a sentence is its agent.
pub fn assign_sentence_roles(
    story: &Story,
    clusters: &[MentionCluster],
    protagonist: ClusterId,
) -> Vec<SentenceRole> {
    let mut earliest: Vec<Option<(usize, ClusterId)>> = vec![None; story.sentences.len()];
    for cluster in clusters {
        for mention in &cluster.mentions {
            let Some(slot) = earliest.get_mut(mention.sentence_index) else {
                continue;
            };
            let better = match slot {
                None => true,
                Some((start, _)) => mention.char_start < *start,
            };
            if better {
                *slot = Some((mention.char_start, cluster.cluster_id));
            }
        }
    }
    earliest
        .into_iter()
        .map(|slot| match slot {
            None => SentenceRole::NoAgent,
            Some((_, id)) if id == protagonist => SentenceRole::ProtAgent,
            Some(_) => SentenceRole::OtherAgent,
        })
        .collect()
}

/// Tokens in `story` that still leak a cluster name or gendered pronoun.
/// Comparison is token-wise, case-insensitive, with possessives stripped.
pub fn leaked_surfaces(story: &Story, clusters: &[MentionCluster]) -> Vec<String> {
    let mut banned: Vec<String> = GENDERED_PRONOUNS.iter().map(|p| p.to_string()).collect();
    for cluster in clusters {
        for mention in &cluster.mentions {
            if mention.kind == MentionKind::Name {
                banned.push(strip_possessive(&mention.surface).to_lowercase());
            }
        }
    }
    let mut leaks = Vec::new();
    for sentence in &story.sentences {
        for token in &sentence.tokens {
            let lower = strip_possessive(&token.surface).to_lowercase();
            if banned.contains(&lower) {
                leaks.push(token.surface.clone());
            }
        }
    }
    leaks
}

/// Full annotation for one story: coref, protagonist selection, gender,
/// roles, and anonymization.
pub fn annotate_story(
    story: &Story,
    backend: &dyn CorefBackend,
) -> Result<(ProtagonistAnnotation, AnonymizedStory), ProtagonistError> {
    let clusters = coref_annotate(story, backend)?;
    let protagonist = select_protagonist(&clusters)?;
    let cluster = clusters
        .iter()
        .find(|c| c.cluster_id == protagonist)
        .expect("selected cluster exists");
    let gender = resolve_gender(cluster);
    let annotation = ProtagonistAnnotation {
        story_id: story.story_id.clone(),
        protagonist_cluster: protagonist,
        gender,
        pronoun_counts: pronoun_counts(cluster),
        sentence_roles: assign_sentence_roles(story, &clusters, protagonist),
    };
    let anonymized = anonymize(story, &clusters, protagonist)?;
    Ok((annotation, anonymized))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::RuleBasedCoref;
    use crate::corpus::{SentenceSplitter, Source};

    fn story(text: &str) -> Story {
        Story::from_text("t", "T", text, Source::Human, &SentenceSplitter::default()).unwrap()
    }

    fn mention(sent: usize, start: usize, surface: &str) -> Mention {
        Mention {
            sentence_index: sent,
            char_start: start,
            char_end: start + surface.chars().count(),
            surface: surface.to_string(),
            kind: classify_surface(surface),
        }
    }

    fn cluster(id: usize, mentions: Vec<Mention>) -> MentionCluster {
        let mut mentions = mentions;
        mentions.sort_by_key(Mention::order_key);
        MentionCluster {
            cluster_id: ClusterId(id),
            mentions,
        }
    }

    #[test]
    fn fallback_links_pronoun_to_name() {
        let s = story("Anna ran. She won.");
        let clusters = coref_annotate(&s, &RuleBasedCoref::default()).unwrap();
        assert_eq!(clusters.len(), 1);
        let surfaces: Vec<&str> = clusters[0]
            .mentions
            .iter()
            .map(|m| m.surface.as_str())
            .collect();
        assert_eq!(surfaces, vec!["Anna", "She"]);
    }

    #[test]
    fn fallback_prefers_subject_antecedent() {
        let s = story("Tom met Sam. He smiled.");
        let clusters = coref_annotate(&s, &RuleBasedCoref::default()).unwrap();
        assert_eq!(clusters.len(), 2);
        let tom: Vec<&str> = clusters[0]
            .mentions
            .iter()
            .map(|m| m.surface.as_str())
            .collect();
        assert_eq!(tom, vec!["Tom", "He"]);
        let sam: Vec<&str> = clusters[1]
            .mentions
            .iter()
            .map(|m| m.surface.as_str())
            .collect();
        assert_eq!(sam, vec!["Sam"]);
    }

    #[test]
    fn no_character_mentions_yields_no_clusters() {
        let s = story("It rained all day.");
        let clusters = coref_annotate(&s, &RuleBasedCoref::default()).unwrap();
        assert!(clusters.is_empty());
    }

    #[test]
    fn select_prefers_largest_then_earliest() {
        let big = cluster(0, vec![mention(0, 0, "Anna"), mention(1, 0, "She"), mention(2, 0, "her")]);
        let small = cluster(1, vec![mention(0, 9, "Tom"), mention(1, 5, "him")]);
        assert_eq!(select_protagonist(&[small.clone(), big.clone()]).unwrap(), ClusterId(0));

        let first = cluster(0, vec![mention(0, 0, "Anna"), mention(2, 0, "She")]);
        let second = cluster(1, vec![mention(1, 0, "Tom"), mention(2, 5, "him")]);
        assert_eq!(
            select_protagonist(&[second.clone(), first.clone()]).unwrap(),
            ClusterId(0)
        );

        let only = cluster(7, vec![mention(0, 0, "Max")]);
        assert_eq!(select_protagonist(&[only]).unwrap(), ClusterId(7));

        assert!(matches!(
            select_protagonist(&[]),
            Err(ProtagonistError::NoProtagonist)
        ));
    }

    #[test]
    fn select_is_permutation_invariant() {
        let a = cluster(0, vec![mention(0, 0, "Anna"), mention(1, 0, "She")]);
        let b = cluster(1, vec![mention(0, 9, "Tom"), mention(2, 0, "He")]);
        let c = cluster(2, vec![mention(3, 0, "Sam")]);
        let forward = select_protagonist(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let reversed = select_protagonist(&[c, b, a]).unwrap();
        assert_eq!(forward, reversed);
    }

    #[test]
    fn gender_majority_and_ties() {
        let f = cluster(0, vec![mention(0, 0, "Anna"), mention(1, 0, "she"), mention(2, 0, "her")]);
        assert_eq!(resolve_gender(&f), Gender::Female);

        let mixed = cluster(
            0,
            vec![mention(0, 0, "he"), mention(1, 0, "she"), mention(2, 0, "her")],
        );
        assert_eq!(resolve_gender(&mixed), Gender::Female);

        let first_person = cluster(0, vec![mention(0, 0, "I"), mention(1, 0, "me"), mention(2, 0, "my")]);
        assert_eq!(resolve_gender(&first_person), Gender::Unresolved);

        let names_only = cluster(0, vec![mention(0, 0, "Anna")]);
        assert_eq!(resolve_gender(&names_only), Gender::Unresolved);

        let tie = cluster(0, vec![mention(0, 0, "he"), mention(1, 0, "she")]);
        assert_eq!(resolve_gender(&tie), Gender::Unresolved);
    }

    #[test]
    fn gender_ignores_name_surfaces_and_order() {
        let a = cluster(
            0,
            vec![mention(0, 0, "Henrietta"), mention(1, 0, "she"), mention(2, 0, "she")],
        );
        assert_eq!(resolve_gender(&a), Gender::Female);
        let reversed = cluster(
            0,
            vec![mention(2, 0, "she"), mention(1, 0, "she"), mention(0, 0, "Henrietta")],
        );
        assert_eq!(resolve_gender(&reversed), Gender::Female);
    }

    #[test]
    fn anonymize_replaces_names_and_pronouns() {
        let s = story("Anna ran. She won.");
        let clusters = coref_annotate(&s, &RuleBasedCoref::default()).unwrap();
        let anon = anonymize(&s, &clusters, ClusterId(0)).unwrap();
        let texts: Vec<&str> = anon.story.sentences.iter().map(|x| x.text.as_str()).collect();
        assert_eq!(texts, vec!["PersonX ran.", "PersonX won."]);
        assert!(leaked_surfaces(&anon.story, &clusters).is_empty());
    }

    #[test]
    fn anonymize_handles_possessives() {
        let s = story("His car broke.");
        let clusters = coref_annotate(&s, &RuleBasedCoref::default()).unwrap();
        assert_eq!(clusters.len(), 1);
        let anon = anonymize(&s, &clusters, clusters[0].cluster_id).unwrap();
        assert_eq!(anon.story.sentences[0].text, "PersonX's car broke.");
    }

    #[test]
    fn anonymize_with_no_clusters_is_identity() {
        let s = story("It rained all day.");
        let anon = anonymize(&s, &[], ClusterId(0)).unwrap();
        assert_eq!(anon.story.sentences[0].text, s.sentences[0].text);
        assert!(anon.placeholder_map.is_empty());
    }

    #[test]
    fn anonymize_rejects_cross_cluster_overlap() {
        let s = story("Anna ran.");
        let a = cluster(0, vec![mention(0, 0, "Anna")]);
        let b = cluster(1, vec![Mention {
            sentence_index: 0,
            char_start: 2,
            char_end: 6,
            surface: "na r".to_string(),
            kind: MentionKind::Nominal,
        }]);
        let err = anonymize(&s, &[a, b], ClusterId(0)).unwrap_err();
        assert!(matches!(err, ProtagonistError::AnnotationConflict { .. }));
    }

    #[test]
    fn anonymize_names_other_clusters_in_order() {
        let s = story("Bea met Cal and Dee. Bea waved. Cal nodded. Dee left. Eve ran.");
        let clusters = coref_annotate(&s, &RuleBasedCoref::default()).unwrap();
        let protagonist = select_protagonist(&clusters).unwrap();
        let anon = anonymize(&s, &clusters, protagonist).unwrap();
        let joined = anon.story.joined_text();
        assert!(joined.contains("PersonX met PersonY and PersonZ."));
        assert!(joined.contains("PersonN3 ran."));
    }

    #[test]
    fn roles_follow_earliest_mention() {
        let s = story("Anna ran home. Tom hugged Anna. It rained.");
        let clusters = coref_annotate(&s, &RuleBasedCoref::default()).unwrap();
        let protagonist = select_protagonist(&clusters).unwrap();
        let roles = assign_sentence_roles(&s, &clusters, protagonist);
        assert_eq!(
            roles,
            vec![
                SentenceRole::ProtAgent,
                SentenceRole::OtherAgent,
                SentenceRole::NoAgent
            ]
        );
    }

    #[test]
    fn anonymize_is_idempotent_and_preserves_roles() {
        let s = story("Anna met Tom. She smiled. Tom waved at her. His dog barked.");
        let backend = RuleBasedCoref::default();
        let clusters = coref_annotate(&s, &backend).unwrap();
        let protagonist = select_protagonist(&clusters).unwrap();
        let roles = assign_sentence_roles(&s, &clusters, protagonist);
        let anon = anonymize(&s, &clusters, protagonist).unwrap();

        // Re-running the pipeline on the anonymized text is a no-op.
        let clusters2 = coref_annotate(&anon.story, &backend).unwrap();
        let prot2 = clusters2
            .iter()
            .find(|c| c.mentions.iter().any(|m| strip_possessive(&m.surface) == "PersonX"))
            .map(|c| c.cluster_id)
            .unwrap();
        let anon2 = anonymize(&anon.story, &clusters2, prot2).unwrap();
        assert_eq!(anon.story, anon2.story);

        let roles2 = assign_sentence_roles(&anon.story, &clusters2, prot2);
        assert_eq!(roles, roles2);
    }

    #[test]
    fn annotate_story_produces_consistent_annotation() {
        let s = story("Maya trained daily. She felt strong. Liam cheered for her.");
        let (annotation, anon) = annotate_story(&s, &RuleBasedCoref::default()).unwrap();
        assert_eq!(annotation.gender, Gender::Female);
        assert_eq!(annotation.sentence_roles.len(), s.sentences.len());
        assert_eq!(annotation.pronoun_counts.get("she"), Some(&1));
        assert_eq!(annotation.pronoun_counts.get("her"), Some(&1));
        assert_eq!(
            anon.placeholder_map.get(&annotation.protagonist_cluster),
            Some(&"PersonX".to_string())
        );
    }
}
