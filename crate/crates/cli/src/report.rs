//! Report assembly from prior-stage artifacts: every number traces back to
//! a score, regression, or probe artifact row. Output is byte-deterministic
//! for a fixed workspace, config, and seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use storyaudit::metrics::{CategoryRegression, ProbeResult, SkippedCategory};

use crate::error::CliError;
use crate::figures::{emit_median_figure, emit_regression_figure, fmt_value, median_entries};
use crate::manifest::{Manifest, ManifestSummary};
use crate::stages::{
    corpus_section, read_annotations, AnonymizedArtifact, CorpusSection, MedianEntry,
    MediansArtifact, ProbesArtifact, RegressionArtifact,
};
use crate::workspace::{Stage, Workspace};

pub const REPORT_SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize, Deserialize)]
pub struct RegressionSection {
    pub covariate: String,
    pub n_female: usize,
    pub n_male: usize,
    pub dictionary_digest: String,
    pub categories: Vec<CategoryRegression>,
    pub skipped: Vec<SkippedCategory>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExclusionsSection {
    pub no_protagonist: usize,
    pub unresolved_stories: usize,
    pub classifier_missing_axes: usize,
    pub missing_scores: BTreeMap<String, usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub tool_version: String,
    pub manifest: ManifestSummary,
    pub corpus: CorpusSection,
    pub pooling: String,
    pub associations: Vec<MedianEntry>,
    pub affect: Vec<MedianEntry>,
    pub regression: RegressionSection,
    pub probes: Vec<ProbeResult>,
    pub exclusions: ExclusionsSection,
    pub notes: Vec<String>,
}

pub fn build_report(ws: &Workspace, manifest: &Manifest) -> Result<Report, CliError> {
    let corpus = corpus_section(ws)?;
    let medians: MediansArtifact = read_json(ws, &ws.medians_path())?;
    let regression: RegressionArtifact = read_json(ws, &ws.regression_path())?;
    let probes: Option<ProbesArtifact> = if ws.probes_path().exists() {
        Some(read_json(ws, &ws.probes_path())?)
    } else {
        None
    };
    let anonymized: AnonymizedArtifact = read_json(ws, &ws.anonymized_path())?;
    let annotations = read_annotations(&ws.annotations_path())?;
    let unresolved = annotations
        .iter()
        .filter(|a| a.gender == storyaudit::protagonist::Gender::Unresolved)
        .count();

    let mut notes = medians.notes.clone();
    let (probe_results, classifier_missing) = match probes {
        Some(artifact) => (artifact.results, artifact.exclusions.classifier_missing_axes),
        None => {
            notes.push("probes disabled in config".to_string());
            (Vec::new(), 0)
        }
    };
    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        manifest: ManifestSummary::from(manifest),
        corpus,
        pooling: medians.pooling,
        associations: medians.associations,
        affect: medians.affect,
        regression: RegressionSection {
            covariate: regression.covariate,
            n_female: regression.n_female,
            n_male: regression.n_male,
            dictionary_digest: regression.dictionary_digest,
            categories: regression.categories,
            skipped: regression.skipped,
        },
        probes: probe_results,
        exclusions: ExclusionsSection {
            no_protagonist: anonymized.excluded_no_protagonist.len(),
            unresolved_stories: unresolved,
            classifier_missing_axes: classifier_missing,
            missing_scores: medians.missing_scores,
        },
        notes,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(
    _ws: &Workspace,
    path: &std::path::Path,
) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{} is corrupt: {e}", path.display())))
}

/// Writes figure files for the report, returning notes about skipped ones.
pub fn emit_figures(report: &Report, ws: &Workspace) -> Result<Vec<String>, CliError> {
    let dir = ws.figures_dir();
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", dir.display())))?;
    let mut notes = Vec::new();

    let mut bar = |stem: &str, title: &str, entries: Vec<(String, Option<f64>, Option<f64>)>| {
        if entries
            .iter()
            .all(|(_, f, m)| f.is_none() && m.is_none())
        {
            notes.push(format!("figure {stem} skipped: no gendered medians"));
            return Ok(());
        }
        if entries.iter().any(|(_, f, m)| f.is_none() || m.is_none()) {
            notes.push(format!("figure {stem}: one gender group empty for some bars"));
        }
        emit_median_figure(&dir, stem, title, &entries)
    };
    bar(
        "association",
        "Median association z-scores",
        median_entries(&report.associations, None),
    )?;
    bar(
        "valence",
        "Median valence z-scores",
        median_entries(&report.affect, Some("valence")),
    )?;
    bar(
        "arousal",
        "Median arousal z-scores",
        median_entries(&report.affect, Some("arousal")),
    )?;

    let plotted: Vec<&CategoryRegression> = report
        .regression
        .categories
        .iter()
        .filter(|c| c.coefficient.is_some() && c.significance.is_significant())
        .collect();
    if plotted.is_empty() {
        notes.push("figure regression skipped: no significant categories".to_string());
    } else {
        emit_regression_figure(&dir, &plotted)?;
    }
    Ok(notes)
}

/// Markdown projection of the same numbers as report.json.
pub fn render_markdown(report: &Report) -> String {
    let mut md = String::new();
    let _ = writeln!(md, "# Protagonist gender bias report\n");
    let _ = writeln!(
        md,
        "Corpus `{}`: {} stories, {} annotated ({} F / {} M / {} unresolved), mean {} tokens.\n",
        report.corpus.name,
        report.corpus.stories,
        report.corpus.annotated,
        report.corpus.female,
        report.corpus.male,
        report.corpus.unresolved,
        fmt_value(report.corpus.mean_tokens),
    );

    let median_table = |md: &mut String, title: &str, entries: &[MedianEntry]| {
        let _ = writeln!(md, "## {title}\n");
        let _ = writeln!(md, "| axis | metric | median z (F) | median z (M) | n F | n M | missing |");
        let _ = writeln!(md, "|---|---|---|---|---|---|---|");
        for e in entries {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} |",
                e.axis,
                e.metric,
                e.median_z_f.map(fmt_value).unwrap_or_else(|| "-".into()),
                e.median_z_m.map(fmt_value).unwrap_or_else(|| "-".into()),
                e.n_f,
                e.n_m,
                e.missing
            );
        }
        let _ = writeln!(md);
    };
    median_table(&mut md, "Portrayal associations", &report.associations);
    median_table(&mut md, "Mental states (valence / arousal)", &report.affect);

    let _ = writeln!(md, "## Motivation categories (GLM)\n");
    let _ = writeln!(
        md,
        "Response: gender (F=1); covariates: category count + {} ({} F / {} M stories).\n",
        report.regression.covariate, report.regression.n_female, report.regression.n_male
    );
    let _ = writeln!(md, "| category | coefficient | std error | p | mark |");
    let _ = writeln!(md, "|---|---|---|---|---|");
    for c in &report.regression.categories {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} |",
            c.category,
            c.coefficient.map(fmt_value).unwrap_or_else(|| "sep".into()),
            c.std_error.map(fmt_value).unwrap_or_else(|| "-".into()),
            c.p_value.map(fmt_value).unwrap_or_else(|| "-".into()),
            c.significance.mark(),
        );
    }
    if !report.regression.skipped.is_empty() {
        let _ = writeln!(md, "\nSkipped categories:");
        for s in &report.regression.skipped {
            let _ = writeln!(md, "- {} ({})", s.category, s.reason);
        }
    }
    let _ = writeln!(md, "\n## Leakage probes\n");
    if report.probes.is_empty() {
        let _ = writeln!(md, "(disabled)");
    } else {
        let _ = writeln!(md, "| probe | accuracy | train | test | seed |");
        let _ = writeln!(md, "|---|---|---|---|---|");
        for p in &report.probes {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} |",
                p.probe,
                fmt_value(p.accuracy),
                p.train_instances,
                p.test_instances,
                p.seed
            );
        }
    }
    let _ = writeln!(md, "\n## Exclusions\n");
    let _ = writeln!(
        md,
        "- stories without clusters: {}\n- unresolved gender: {}\n- classifier stories missing axes: {}",
        report.exclusions.no_protagonist,
        report.exclusions.unresolved_stories,
        report.exclusions.classifier_missing_axes
    );
    for (key, count) in &report.exclusions.missing_scores {
        let _ = writeln!(md, "- missing {key} scores: {count}");
    }
    if !report.notes.is_empty() {
        let _ = writeln!(md, "\n## Notes\n");
        for note in &report.notes {
            let _ = writeln!(md, "- {note}");
        }
    }
    md
}

/// The `report` stage: assemble, emit figures, write report.json (and
/// optionally report.md).
pub fn report_stage(
    ws: &Workspace,
    loaded: &crate::config::LoadedConfig,
    markdown: bool,
) -> Result<(), CliError> {
    let mut manifest = ws.manifest()?;
    if manifest.config_digest != loaded.digest {
        return Err(CliError::Validation(
            "config changed since this workspace was ingested; rerun `audit ingest`".to_string(),
        ));
    }
    ws.require(&manifest, Stage::Score)?;
    ws.require(&manifest, Stage::Regress)?;
    if loaded.config.probes.bow || loaded.config.probes.inference_classifier {
        ws.require(&manifest, Stage::Probe)?;
    }
    let mut report = build_report(ws, &manifest)?;
    let figure_notes = emit_figures(&report, ws)?;
    report.notes.extend(figure_notes);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(ws.report_json_path(), json + "\n")
        .map_err(|e| CliError::Validation(format!("cannot write report.json: {e}")))?;
    if markdown {
        std::fs::write(ws.report_md_path(), render_markdown(&report))
            .map_err(|e| CliError::Validation(format!("cannot write report.md: {e}")))?;
    }
    Stage::Report.mark_done(&mut manifest.stages);
    manifest.touch();
    manifest.save(&ws.manifest_path())?;
    println!(
        "report: wrote {}{}",
        ws.report_json_path().display(),
        if markdown { " and report.md" } else { "" }
    );
    Ok(())
}
