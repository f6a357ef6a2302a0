//! Deterministic rule-based coreference fallback: exact-name matching plus
//! nearest-antecedent pronoun linking with subject preference.
//!
//! The rules, in walking order over tokens:
//!
//! 1. A capitalized token (possessive suffix stripped) that is not a
//!    pronoun or function word is a NAME mention. Identical name strings
//!    corefer ("exact-name matching").
//! 2. First-person pronouns collect into a single narrator cluster.
//! 3. A third-person pronoun links to the best preceding NAME mention,
//!    ranked by gender affinity (clusters whose pronouns already match the
//!    gender, then genderless clusters, never contradicting ones), then
//!    subject position (earliest mention of its sentence), then textual
//!    nearness. With no preceding name it joins the nearest compatible
//!    pronoun-only cluster, else starts one.
//! 4. `it`/`you` forms never refer to characters here and are skipped.
//!
//! Names never vote on gender; only linked pronouns do. The fallback
//! over-captures sentence-initial capitalized words it does not know;
//! the function-word list covers the common ones.

use crate::backends::BackendError;
use crate::corpus::Story;
use crate::protagonist::{strip_possessive, CorefBackend, MentionSpan};

const FUNCTION_WORDS: &[&str] = &[
    // determiners, conjunctions, prepositions, auxiliaries
    "a", "about", "above", "after", "again", "all", "also", "although", "an", "and", "any",
    "as", "at", "because", "before", "behind", "being", "below", "beside", "both", "but", "by",
    "despite", "did", "do", "does", "down", "during", "each", "either", "even", "every",
    "for", "from", "had", "has", "have", "here", "how", "if", "in", "inside", "into", "just",
    "last", "later", "like", "many", "maybe", "more", "most", "much", "near", "neither",
    "never", "next", "no", "none", "nor", "not", "nothing", "now", "of", "off", "on", "once",
    "one", "only", "onto", "or", "other", "our", "out", "outside", "over", "perhaps", "since",
    "so", "some", "soon", "still", "such", "than", "that", "the", "then", "there", "these",
    "this", "those", "though", "through", "to", "today", "tomorrow", "too", "under", "until",
    "up", "upon", "was", "were", "what", "when", "where", "which", "while", "who", "whom",
    "whose", "why", "with", "within", "without", "yes", "yesterday", "yet",
    // frequent capitalized sentence starters
    "afterwards", "eventually", "everybody", "everyone", "finally", "however", "instead",
    "luckily", "meanwhile", "nobody", "people", "sadly", "somebody", "someone", "suddenly",
    "unfortunately",
    // titles whose following surname is the real name
    "dr", "miss", "mr", "mrs", "ms", "prof",
    // weekdays and months
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday", "january",
    "february", "march", "april", "may", "june", "july", "august", "september", "october",
    "november", "december",
];

const FIRST_PERSON: &[&str] = &[
    "i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves",
];
const MALE: &[&str] = &["he", "him", "his", "himself"];
const FEMALE: &[&str] = &["she", "her", "hers", "herself"];
const NEUTRAL: &[&str] = &["they", "them", "their", "theirs", "themselves"];
const SKIPPED: &[&str] = &[
    "it", "its", "itself", "you", "your", "yours", "yourself", "yourselves",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PronounGender {
    Male,
    Female,
    Neutral,
}

#[derive(Default)]
struct ClusterState {
    spans: Vec<MentionSpan>,
    has_male: bool,
    has_female: bool,
    has_name: bool,
}

impl ClusterState {
    fn compatible(&self, gender: PronounGender) -> bool {
        match gender {
            PronounGender::Male => !self.has_female,
            PronounGender::Female => !self.has_male,
            PronounGender::Neutral => true,
        }
    }

    /// 2 = pronouns already match this gender, 1 = no contradiction,
    /// 0 = contradicting gender.
    fn affinity(&self, gender: PronounGender) -> u8 {
        match gender {
            PronounGender::Male if self.has_male => 2,
            PronounGender::Female if self.has_female => 2,
            _ => self.compatible(gender) as u8,
        }
    }

    fn absorb(&mut self, gender: PronounGender) {
        match gender {
            PronounGender::Male => self.has_male = true,
            PronounGender::Female => self.has_female = true,
            PronounGender::Neutral => {}
        }
    }
}

struct NameOccurrence {
    cluster: usize,
    position: (usize, usize),
    is_subject: bool,
}

/// The in-repo fallback backend. See the module docs for the exact rules.
#[derive(Debug, Default, Clone)]
pub struct RuleBasedCoref;

impl RuleBasedCoref {
    fn is_name_candidate(core: &str) -> bool {
        let mut chars = core.chars();
        let Some(first) = chars.next() else {
            return false;
        };
        if !first.is_uppercase() {
            return false;
        }
        if !chars.all(|c| c.is_alphabetic() || c == '-' || c == '\'') {
            return false;
        }
        !FUNCTION_WORDS.contains(&core.to_lowercase().as_str())
    }
}

impl CorefBackend for RuleBasedCoref {
    fn id(&self) -> &str {
        "rule"
    }

    fn version(&self) -> &str {
        "1"
    }

    fn resolve(&self, story: &Story) -> Result<Vec<Vec<MentionSpan>>, BackendError> {
        let mut clusters: Vec<ClusterState> = Vec::new();
        let mut name_index: std::collections::HashMap<String, usize> =
            std::collections::HashMap::new();
        let mut name_occurrences: Vec<NameOccurrence> = Vec::new();
        let mut narrator: Option<usize> = None;

        for sentence in &story.sentences {
            let mut sentence_has_mention = false;
            for token in &sentence.tokens {
                let lower = token.surface.to_lowercase();
                let span = MentionSpan {
                    sentence_index: sentence.index,
                    char_start: token.char_start,
                    char_end: token.char_end,
                };
                let position = (sentence.index, token.char_start);

                if SKIPPED.contains(&lower.as_str()) {
                    continue;
                }
                if FIRST_PERSON.contains(&lower.as_str()) {
                    let idx = *narrator.get_or_insert_with(|| {
                        clusters.push(ClusterState::default());
                        clusters.len() - 1
                    });
                    clusters[idx].spans.push(span);
                    sentence_has_mention = true;
                    continue;
                }
                let gender = if MALE.contains(&lower.as_str()) {
                    Some(PronounGender::Male)
                } else if FEMALE.contains(&lower.as_str()) {
                    Some(PronounGender::Female)
                } else if NEUTRAL.contains(&lower.as_str()) {
                    Some(PronounGender::Neutral)
                } else {
                    None
                };
                if let Some(gender) = gender {
                    let best_name = name_occurrences
                        .iter()
                        .max_by_key(|occ| {
                            (
                                clusters[occ.cluster].affinity(gender),
                                occ.is_subject,
                                occ.position,
                            )
                        })
                        .map(|occ| occ.cluster);
                    let target = match best_name {
                        Some(cluster) => cluster,
                        None => {
                            // No names yet: join the nearest compatible
                            // pronoun-only cluster or start a new one.
                            let found = clusters
                                .iter()
                                .enumerate()
                                .rev()
                                .filter(|(idx, c)| {
                                    !c.has_name
                                        && Some(*idx) != narrator
                                        && c.compatible(gender)
                                })
                                .map(|(idx, _)| idx)
                                .next();
                            match found {
                                Some(idx) => idx,
                                None => {
                                    clusters.push(ClusterState::default());
                                    clusters.len() - 1
                                }
                            }
                        }
                    };
                    clusters[target].spans.push(span);
                    clusters[target].absorb(gender);
                    sentence_has_mention = true;
                    continue;
                }

                let core = strip_possessive(&token.surface);
                if Self::is_name_candidate(core) {
                    let idx = match name_index.get(core) {
                        Some(&idx) => idx,
                        None => {
                            clusters.push(ClusterState::default());
                            let idx = clusters.len() - 1;
                            name_index.insert(core.to_string(), idx);
                            idx
                        }
                    };
                    clusters[idx].spans.push(span);
                    clusters[idx].has_name = true;
                    name_occurrences.push(NameOccurrence {
                        cluster: idx,
                        position,
                        is_subject: !sentence_has_mention,
                    });
                    sentence_has_mention = true;
                }
            }
        }
        Ok(clusters.into_iter().map(|c| c.spans).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SentenceSplitter, Source, Story};
    use crate::protagonist::coref_annotate;

    fn story(text: &str) -> Story {
        Story::from_text("t", "T", text, Source::Human, &SentenceSplitter::default()).unwrap()
    }

    fn cluster_surfaces(text: &str) -> Vec<Vec<String>> {
        let s = story(text);
        coref_annotate(&s, &RuleBasedCoref::default())
            .unwrap()
            .into_iter()
            .map(|c| c.mentions.into_iter().map(|m| m.surface).collect())
            .collect()
    }

    #[test]
    fn exact_names_corefer_including_possessives() {
        let clusters = cluster_surfaces("Anna ran. Anna's dog followed. Anna laughed.");
        assert_eq!(clusters, vec![vec!["Anna", "Anna's", "Anna"]]);
    }

    #[test]
    fn gender_affinity_beats_nearness() {
        // The second "She" must reach past Liam back to Maya, whose cluster
        // already carries a feminine pronoun.
        let clusters = cluster_surfaces("Maya trained. She ran far. Liam cheered for her.");
        assert_eq!(
            clusters,
            vec![vec!["Maya", "She", "her"], vec!["Liam"]]
        );
    }

    #[test]
    fn contradicting_clusters_are_avoided() {
        // "She" skips the subject Mia once Mia's cluster turned male.
        let clusters = cluster_surfaces("Mia met Tom. He waved. She smiled.");
        assert_eq!(clusters, vec![vec!["Mia", "He"], vec!["Tom", "She"]]);
    }

    #[test]
    fn subject_preference_breaks_ties() {
        let clusters = cluster_surfaces("Tom met Sam. He smiled.");
        assert_eq!(clusters, vec![vec!["Tom", "He"], vec!["Sam"]]);
    }

    #[test]
    fn first_person_forms_one_narrator_cluster() {
        let clusters = cluster_surfaces("I lost my keys. We searched everywhere.");
        assert_eq!(clusters, vec![vec!["I", "my", "We"]]);
    }

    #[test]
    fn pronoun_only_story_forms_cluster() {
        let clusters = cluster_surfaces("His car broke. He walked home.");
        assert_eq!(clusters, vec![vec!["His", "He"]]);
    }

    #[test]
    fn opposite_gender_pronouns_without_names_split_clusters() {
        let clusters = cluster_surfaces("He waved. She waved back. He left.");
        assert_eq!(clusters, vec![vec!["He", "He"], vec!["She"]]);
    }

    #[test]
    fn function_words_and_it_are_not_mentions() {
        let clusters = cluster_surfaces("The rain fell. It was cold. Nobody cared.");
        assert!(clusters.is_empty());
    }

    #[test]
    fn titles_attach_to_surname() {
        let clusters = cluster_surfaces("Mr. Smith arrived. He sat down.");
        assert_eq!(clusters, vec![vec!["Smith", "He"]]);
    }
}
