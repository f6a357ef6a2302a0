//! The pipeline stages behind each CLI subcommand. Each stage reads the
//! artifacts of its prerequisites from the workspace, writes its own
//! artifact plus an updated manifest, and leaves its completion flag unset
//! on failure so a rerun resumes cleanly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use storyaudit::backends::BackendRegistry;
use storyaudit::corpus::{corpus_stats, read_corpus, save_corpus, Corpus, StoryId};
use storyaudit::inference::{
    read_records, run_inference_pass, write_records, InferenceCache, InferenceRecord, SocialAxis,
};
use storyaudit::lexicons::{
    load_embeddings, AffectLexicon, CategoryDictionary, EmbeddingStore, Lexicon,
};
use storyaudit::metrics::{
    affect_aggregate, association_score, axis_score, axis_tokens, bow_leakage_probe,
    build_classifier_inputs, build_semantic_axis, inference_gender_classifier,
    motivation_regression, story_axis_aggregate, zscore_group_medians, BowStory,
    CategoryObservation, CategoryRegression, ProbeResult, ScoreError, ScoreRow, ScoreTable,
    SemanticAxis, SkippedCategory, StatsError,
};
use storyaudit::protagonist::{
    annotate_story, AnonymizedStory, Gender, ProtagonistAnnotation, ProtagonistError,
};
use storyaudit::sha256_hex;

use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::manifest::Manifest;
use crate::workspace::{Stage, Workspace};

/// Anonymized corpus artifact: the stories with placeholders substituted,
/// plus the ids excluded for having no mention clusters.
#[derive(Debug, Serialize, Deserialize)]
pub struct AnonymizedArtifact {
    pub name: String,
    pub provenance: String,
    pub excluded_no_protagonist: Vec<StoryId>,
    pub stories: Vec<AnonymizedStory>,
}

impl AnonymizedArtifact {
    pub fn as_corpus(&self) -> Corpus {
        Corpus {
            name: self.name.clone(),
            provenance: self.provenance.clone(),
            stories: self.stories.iter().map(|a| a.story.clone()).collect(),
        }
    }
}

/// Per-(axis, metric) group medians of pooled z-scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MedianEntry {
    pub axis: String,
    pub metric: String,
    pub median_z_f: Option<f64>,
    pub median_z_m: Option<f64>,
    pub n_f: usize,
    pub n_m: usize,
    pub missing: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MediansArtifact {
    pub pooling: String,
    pub associations: Vec<MedianEntry>,
    pub affect: Vec<MedianEntry>,
    pub missing_scores: BTreeMap<String, usize>,
    pub notes: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RegressionArtifact {
    pub covariate: String,
    pub seed: u64,
    pub n_female: usize,
    pub n_male: usize,
    pub dictionary_digest: String,
    pub categories: Vec<CategoryRegression>,
    pub skipped: Vec<SkippedCategory>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct ProbeExclusions {
    pub unresolved_stories: usize,
    pub classifier_missing_axes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProbesArtifact {
    pub seed: u64,
    pub input_digests: BTreeMap<String, String>,
    pub results: Vec<ProbeResult>,
    pub exclusions: ProbeExclusions,
}

pub fn digest_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| {
        CliError::Validation(format!("cannot read {}: {e}", path.display()))
    })?;
    Ok(sha256_hex(&bytes))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value).expect("artifact serializes");
    std::fs::write(path, json + "\n")
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{} is corrupt: {e}", path.display())))
}

fn write_annotations(
    annotations: &[ProtagonistAnnotation],
    path: &Path,
) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
    let mut writer = BufWriter::new(file);
    for annotation in annotations {
        let line = serde_json::to_string(annotation).expect("annotation serializes");
        writeln!(writer, "{line}")
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

pub fn read_annotations(path: &Path) -> Result<Vec<ProtagonistAnnotation>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut annotations = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let annotation: ProtagonistAnnotation = serde_json::from_str(&line).map_err(|e| {
            CliError::Validation(format!("{}:{}: corrupt annotation: {e}", path.display(), idx + 1))
        })?;
        annotations.push(annotation);
    }
    Ok(annotations)
}

fn check_config_digest(manifest: &Manifest, loaded: &LoadedConfig) -> Result<(), CliError> {
    if manifest.config_digest != loaded.digest {
        return Err(CliError::Validation(
            "config changed since this workspace was ingested; rerun `audit ingest`".to_string(),
        ));
    }
    Ok(())
}

pub fn ingest(ws: &Workspace, loaded: &LoadedConfig) -> Result<(), CliError> {
    let config = &loaded.config;
    let format = config.corpus_format()?;
    let corpus = storyaudit::corpus::load_corpus(&config.corpus.path, format)?;
    save_corpus(&corpus, &ws.corpus_path())?;
    let mut manifest = Manifest::new(
        &loaded.digest,
        config.analysis.seed,
        config.analysis.beam_size,
        config.analysis.token_pooling,
    );
    manifest.corpus_digest = Some(digest_file(&ws.corpus_path())?);
    Stage::Ingest.mark_done(&mut manifest.stages);
    manifest.save(&ws.manifest_path())?;
    println!(
        "ingest: {} stories from {}",
        corpus.stories.len(),
        config.corpus.path.display()
    );
    Ok(())
}

pub fn annotate(ws: &Workspace, loaded: &LoadedConfig) -> Result<(), CliError> {
    let mut manifest = ws.manifest()?;
    check_config_digest(&manifest, loaded)?;
    ws.require(&manifest, Stage::Ingest)?;
    let corpus = read_corpus(&ws.corpus_path())?;
    let registry = BackendRegistry::with_builtins();
    let backend = registry.build_coref(
        &loaded.config.backends.coref,
        &loaded.config.backends.coref_options.to_options(),
    )?;
    let mut annotations = Vec::new();
    let mut anonymized = Vec::new();
    let mut excluded = Vec::new();
    for story in &corpus.stories {
        match annotate_story(story, backend.as_ref()) {
            Ok((annotation, anon)) => {
                annotations.push(annotation);
                anonymized.push(anon);
            }
            Err(ProtagonistError::NoProtagonist) => excluded.push(story.story_id.clone()),
            Err(e) => return Err(e.into()),
        }
    }
    write_annotations(&annotations, &ws.annotations_path())?;
    let artifact = AnonymizedArtifact {
        name: corpus.name.clone(),
        provenance: corpus.provenance.clone(),
        excluded_no_protagonist: excluded,
        stories: anonymized,
    };
    write_json(&artifact, &ws.anonymized_path())?;
    manifest.record_backend("coref", backend.id(), backend.version());
    Stage::Annotate.mark_done(&mut manifest.stages);
    manifest.touch();
    manifest.save(&ws.manifest_path())?;
    let resolved = annotations
        .iter()
        .filter(|a| a.gender != Gender::Unresolved)
        .count();
    println!(
        "annotate: {} annotated ({} gender-resolved), {} excluded without clusters",
        annotations.len(),
        resolved,
        artifact.excluded_no_protagonist.len()
    );
    Ok(())
}

pub fn infer(ws: &Workspace, loaded: &LoadedConfig) -> Result<(), CliError> {
    let mut manifest = ws.manifest()?;
    check_config_digest(&manifest, loaded)?;
    ws.require(&manifest, Stage::Annotate)?;
    let artifact: AnonymizedArtifact = read_json(&ws.anonymized_path())?;
    let corpus = artifact.as_corpus();
    let annotations = read_annotations(&ws.annotations_path())?;
    let registry = BackendRegistry::with_builtins();
    let backend = registry.build_inference(
        &loaded.config.backends.inference,
        &loaded.config.backends.inference_options.to_options(),
    )?;
    let cache = InferenceCache::open(&ws.cache_path()).map_err(CliError::from)?;
    let outcome = run_inference_pass(
        &corpus,
        &annotations,
        backend.as_ref(),
        &cache,
        loaded.config.analysis.beam_size,
    );
    write_records(&outcome.records, &ws.inferences_path())?;
    manifest.record_backend("inference", backend.id(), backend.version());
    manifest.touch();
    if outcome.failures.is_empty() {
        Stage::Infer.mark_done(&mut manifest.stages);
    }
    manifest.save(&ws.manifest_path())?;
    println!(
        "infer: {} records, {} unresolved stories skipped",
        outcome.records.len(),
        outcome.skipped_unresolved
    );
    if !outcome.failures.is_empty() {
        for failure in &outcome.failures {
            eprintln!(
                "infer: story {} failed{}: {}",
                failure.story_id,
                if failure.retriable { " (retriable)" } else { "" },
                failure.error
            );
        }
        return Err(CliError::Backend(format!(
            "{} stories failed inference; completed work is cached, rerun `audit infer`",
            outcome.failures.len()
        )));
    }
    Ok(())
}

/// The (axis, metric) pairs scored by the `score` stage, in report order.
pub const ASSOCIATION_METRICS: [&str; 3] = ["intellect", "power", "appearance"];
pub const AFFECT_AXES: [SocialAxis; 3] = [
    SocialAxis::MentalState,
    SocialAxis::ReactionToOthers,
    SocialAxis::ImpactOnOthers,
];
pub const AFFECT_METRICS: [&str; 2] = ["valence", "arousal"];

struct ScoreContext {
    embeddings: EmbeddingStore,
    intellect: Lexicon,
    appearance: Lexicon,
    power_axis: SemanticAxis,
    affect: AffectLexicon,
}

fn score_error(e: ScoreError) -> CliError {
    CliError::validation(e)
}

fn association_scorer<'a>(
    context: &'a ScoreContext,
    metric: &str,
) -> Box<dyn FnMut(&str) -> Result<Option<f64>, ScoreError> + 'a> {
    match metric {
        "intellect" => Box::new(move |t| association_score(t, &context.intellect, &context.embeddings)),
        "appearance" => {
            Box::new(move |t| association_score(t, &context.appearance, &context.embeddings))
        }
        "power" => Box::new(move |t| axis_score(t, &context.power_axis, &context.embeddings)),
        other => unreachable!("unknown association metric {other}"),
    }
}

pub fn score(ws: &Workspace, loaded: &LoadedConfig) -> Result<(), CliError> {
    let mut manifest = ws.manifest()?;
    check_config_digest(&manifest, loaded)?;
    ws.require(&manifest, Stage::Infer)?;
    let annotations = read_annotations(&ws.annotations_path())?;
    let records = read_records(&ws.inferences_path())?;
    let lex = &loaded.config.lexicons;

    let embeddings = load_embeddings(&lex.embeddings, loaded.config.embedding_format()?)?;
    let intellect = Lexicon::load(&lex.intellect)?;
    let appearance = Lexicon::load(&lex.appearance)?;
    let strength = Lexicon::load(&lex.strength)?;
    let weakness = Lexicon::load(&lex.weakness)?;
    let affect = AffectLexicon::load(&lex.affect)?;
    for (name, path) in [
        ("embeddings", &lex.embeddings),
        ("intellect", &lex.intellect),
        ("appearance", &lex.appearance),
        ("strength", &lex.strength),
        ("weakness", &lex.weakness),
        ("affect", &lex.affect),
    ] {
        manifest
            .lexicon_digests
            .insert(name.to_string(), digest_file(path)?);
    }
    let power_axis =
        build_semantic_axis("power", &strength, &weakness, &embeddings).map_err(score_error)?;
    let context = ScoreContext {
        embeddings,
        intellect,
        appearance,
        power_axis,
        affect,
    };

    let mut by_story_axis: BTreeMap<(&StoryId, SocialAxis), Vec<&InferenceRecord>> =
        BTreeMap::new();
    for record in &records {
        by_story_axis
            .entry((&record.story_id, record.axis))
            .or_default()
            .push(record);
    }
    let mut gendered: Vec<&ProtagonistAnnotation> = annotations
        .iter()
        .filter(|a| a.gender != Gender::Unresolved)
        .collect();
    gendered.sort_by(|a, b| a.story_id.cmp(&b.story_id));

    let mut table = ScoreTable::default();
    for annotation in &gendered {
        let attr_records = by_story_axis
            .get(&(&annotation.story_id, SocialAxis::Attributes))
            .cloned()
            .unwrap_or_default();
        for metric in ASSOCIATION_METRICS {
            let value = story_axis_aggregate(&attr_records, association_scorer(&context, metric))
                .map_err(score_error)?;
            table.push(ScoreRow {
                story_id: annotation.story_id.clone(),
                gender: annotation.gender,
                axis: SocialAxis::Attributes,
                metric: metric.to_string(),
                value,
            });
        }
        for axis in AFFECT_AXES {
            let axis_records = by_story_axis
                .get(&(&annotation.story_id, axis))
                .cloned()
                .unwrap_or_default();
            let affect_scores = affect_aggregate(&axis_records, &context.affect);
            for (metric, value) in [
                ("valence", affect_scores.map(|(v, _)| v)),
                ("arousal", affect_scores.map(|(_, a)| a)),
            ] {
                table.push(ScoreRow {
                    story_id: annotation.story_id.clone(),
                    gender: annotation.gender,
                    axis,
                    metric: metric.to_string(),
                    value,
                });
            }
        }
    }
    table
        .validate()
        .map_err(|e| CliError::Validation(format!("score table invariant broken: {e}")))?;
    let file = File::create(ws.scores_path())
        .map_err(|e| CliError::Validation(format!("cannot write scores.csv: {e}")))?;
    table
        .write_csv(file)
        .map_err(|e| CliError::Validation(format!("cannot write scores.csv: {e}")))?;

    let token_pooling = loaded.config.analysis.token_pooling;
    let mut notes = Vec::new();
    let mut missing_scores = BTreeMap::new();
    let mut associations = Vec::new();
    let mut affect_medians = Vec::new();

    let median_for = |axis: SocialAxis,
                          metric: &str,
                          values: Vec<(Gender, f64)>,
                          missing: usize,
                          out: &mut Vec<MedianEntry>,
                          notes: &mut Vec<String>| {
        match zscore_group_medians(&values) {
            Ok(medians) => out.push(MedianEntry {
                axis: axis.code().to_string(),
                metric: metric.to_string(),
                median_z_f: medians.female,
                median_z_m: medians.male,
                n_f: medians.n_female,
                n_m: medians.n_male,
                missing,
            }),
            Err(e @ StatsError::TooFew(_)) | Err(e @ StatsError::ConstantScores) => notes.push(
                format!("{}/{}: medians skipped: {e}", axis.code(), metric),
            ),
        }
    };

    for metric in ASSOCIATION_METRICS {
        let axis = SocialAxis::Attributes;
        let missing = table.missing_count(axis, metric);
        missing_scores.insert(format!("{}/{}", axis.code(), metric), missing);
        let values = if token_pooling {
            let mut values = Vec::new();
            for annotation in &gendered {
                let records = by_story_axis
                    .get(&(&annotation.story_id, axis))
                    .cloned()
                    .unwrap_or_default();
                let mut scorer = association_scorer(&context, metric);
                for token in axis_tokens(&records) {
                    if let Some(score) = scorer(&token).map_err(score_error)? {
                        values.push((annotation.gender, score));
                    }
                }
            }
            values
        } else {
            table.values_for(axis, metric)
        };
        median_for(axis, metric, values, missing, &mut associations, &mut notes);
    }
    for axis in AFFECT_AXES {
        for metric in AFFECT_METRICS {
            let missing = table.missing_count(axis, metric);
            missing_scores.insert(format!("{}/{}", axis.code(), metric), missing);
            let values = if token_pooling {
                let mut values = Vec::new();
                for annotation in &gendered {
                    let records = by_story_axis
                        .get(&(&annotation.story_id, axis))
                        .cloned()
                        .unwrap_or_default();
                    for token in axis_tokens(&records) {
                        if let Some((v, a)) = context.affect.get(&token) {
                            let score = if metric == "valence" { v } else { a };
                            values.push((annotation.gender, score));
                        }
                    }
                }
                values
            } else {
                table.values_for(axis, metric)
            };
            median_for(axis, metric, values, missing, &mut affect_medians, &mut notes);
        }
    }

    let medians = MediansArtifact {
        pooling: if token_pooling { "token" } else { "story" }.to_string(),
        associations,
        affect: affect_medians,
        missing_scores,
        notes,
    };
    write_json(&medians, &ws.medians_path())?;
    Stage::Score.mark_done(&mut manifest.stages);
    manifest.touch();
    manifest.save(&ws.manifest_path())?;
    println!(
        "score: {} rows over {} stories ({} pooling)",
        table.rows.len(),
        gendered.len(),
        medians.pooling
    );
    Ok(())
}

pub fn regress(ws: &Workspace, loaded: &LoadedConfig) -> Result<(), CliError> {
    let mut manifest = ws.manifest()?;
    check_config_digest(&manifest, loaded)?;
    ws.require(&manifest, Stage::Infer)?;
    let annotations = read_annotations(&ws.annotations_path())?;
    let records = read_records(&ws.inferences_path())?;
    let dictionary = CategoryDictionary::load_dic(&loaded.config.lexicons.categories)?;
    let dictionary_digest = digest_file(&loaded.config.lexicons.categories)?;
    manifest
        .lexicon_digests
        .insert("categories".to_string(), dictionary_digest.clone());

    let mut motivation_records: BTreeMap<&StoryId, Vec<&InferenceRecord>> = BTreeMap::new();
    for record in &records {
        if record.axis == SocialAxis::Motivations {
            motivation_records
                .entry(&record.story_id)
                .or_default()
                .push(record);
        }
    }
    let mut observations = Vec::new();
    for annotation in &annotations {
        if annotation.gender == Gender::Unresolved {
            continue;
        }
        let story_records = motivation_records
            .get(&annotation.story_id)
            .cloned()
            .unwrap_or_default();
        let tokens = axis_tokens(&story_records);
        let mut category_counts: BTreeMap<String, usize> = BTreeMap::new();
        for token in &tokens {
            for category in storyaudit::lexicons::category_match(token, &dictionary) {
                *category_counts.entry(category).or_insert(0) += 1;
            }
        }
        observations.push(CategoryObservation {
            story_id: annotation.story_id.clone(),
            gender: annotation.gender,
            category_counts,
            total_tokens: tokens.len(),
        });
    }
    let categories: Vec<String> = dictionary.category_names().map(|c| c.to_string()).collect();
    let table = motivation_regression(&observations, &categories)?;
    let artifact = RegressionArtifact {
        covariate: "motivation_tokens".to_string(),
        seed: manifest.seed,
        n_female: table.n_female,
        n_male: table.n_male,
        dictionary_digest,
        categories: table.categories,
        skipped: table.skipped,
    };
    write_json(&artifact, &ws.regression_path())?;
    Stage::Regress.mark_done(&mut manifest.stages);
    manifest.touch();
    manifest.save(&ws.manifest_path())?;
    println!(
        "regress: {} categories fit, {} skipped ({} F / {} M stories)",
        artifact.categories.len(),
        artifact.skipped.len(),
        artifact.n_female,
        artifact.n_male
    );
    Ok(())
}

pub fn probe(ws: &Workspace, loaded: &LoadedConfig) -> Result<(), CliError> {
    let mut manifest = ws.manifest()?;
    check_config_digest(&manifest, loaded)?;
    ws.require(&manifest, Stage::Infer)?;
    let artifact: AnonymizedArtifact = read_json(&ws.anonymized_path())?;
    let annotations = read_annotations(&ws.annotations_path())?;
    let records = read_records(&ws.inferences_path())?;
    let seed = manifest.seed;
    let genders: BTreeMap<StoryId, Gender> = annotations
        .iter()
        .map(|a| (a.story_id.clone(), a.gender))
        .collect();
    let unresolved = annotations
        .iter()
        .filter(|a| a.gender == Gender::Unresolved)
        .count();

    let mut results = Vec::new();
    let mut exclusions = ProbeExclusions {
        unresolved_stories: unresolved,
        classifier_missing_axes: 0,
    };
    if loaded.config.probes.bow {
        let stories: Vec<BowStory> = artifact
            .stories
            .iter()
            .filter_map(|anon| {
                genders.get(&anon.story.story_id).map(|gender| BowStory {
                    story_id: anon.story.story_id.clone(),
                    gender: *gender,
                    sentences: anon
                        .story
                        .sentences
                        .iter()
                        .map(|s| s.tokens.iter().map(|t| t.surface.clone()).collect())
                        .collect(),
                })
            })
            .collect();
        results.push(bow_leakage_probe(&stories, seed)?);
    }
    if loaded.config.probes.inference_classifier {
        let registry = BackendRegistry::with_builtins();
        let backend = registry.build_classifier(
            &loaded.config.backends.classifier,
            &loaded.config.backends.classifier_options.to_options(),
        )?;
        let (stories, excluded) = build_classifier_inputs(&records, &genders);
        exclusions.classifier_missing_axes = excluded;
        results.push(inference_gender_classifier(
            &stories,
            backend.as_ref(),
            seed,
            excluded,
        )?);
        manifest.record_backend("classifier", backend.id(), backend.version());
    }

    let mut input_digests = BTreeMap::new();
    input_digests.insert(
        "anonymized".to_string(),
        digest_file(&ws.anonymized_path())?,
    );
    input_digests.insert(
        "inferences".to_string(),
        digest_file(&ws.inferences_path())?,
    );
    let artifact = ProbesArtifact {
        seed,
        input_digests,
        results,
        exclusions,
    };
    write_json(&artifact, &ws.probes_path())?;
    Stage::Probe.mark_done(&mut manifest.stages);
    manifest.touch();
    manifest.save(&ws.manifest_path())?;
    for result in &artifact.results {
        println!("probe: {} accuracy {:.4}", result.probe, result.accuracy);
    }
    Ok(())
}

/// Corpus stats the report embeds.
#[derive(Debug, Serialize, Deserialize)]
pub struct CorpusSection {
    pub name: String,
    pub stories: usize,
    pub annotated: usize,
    pub female: usize,
    pub male: usize,
    pub unresolved: usize,
    pub mean_tokens: f64,
}

pub fn corpus_section(ws: &Workspace) -> Result<CorpusSection, CliError> {
    let corpus = read_corpus(&ws.corpus_path())?;
    let annotations = read_annotations(&ws.annotations_path())?;
    let stats = corpus_stats(&corpus, &annotations)?;
    Ok(CorpusSection {
        name: corpus.name,
        stories: stats.stories,
        annotated: stats.annotated,
        female: stats.female,
        male: stats.male,
        unresolved: stats.unresolved,
        mean_tokens: stats.mean_tokens,
    })
}
