//! Reading and writing instances, bids and reports.
//!
//! An instance is a directory holding `instance.toml` (loads, regions,
//! authorship, conflicts) and one CSV file per similarity matrix. Matrix and
//! bid files have a header row `paper,<reviewer ids...>` and one row per
//! paper. Lines starting with `#` are comments.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use bidguard_core::instance::{BidLevel, BidMatrix, ConferenceInstance, Pair};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const INSTANCE_FILE: &str = "instance.toml";
pub const TEXT_FILE: &str = "text_similarity.csv";
pub const SUBJECT_FILE: &str = "subject_overlap.csv";
pub const BIDS_FILE: &str = "bids.csv";

/// Identifies the configuration and root seed an output came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    /// Hex SHA-256 of `text`.
    pub fn hash_text(text: &str) -> String {
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn comment(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash, self.seed)
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Serializes `value` as a TOML document with a leading `provenance` table.
pub fn to_toml_with_provenance<T: Serialize>(value: &T, provenance: &Provenance) -> Result<String> {
    let body = toml::to_string(value).map_err(|e| CliError::Config(format!("cannot serialize report: {e}")))?;
    let head = toml::to_string(&BTreeMap::from([("provenance", provenance)]))
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(format!("{body}\n{head}"))
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T, provenance: &Provenance) -> Result<()> {
    write_file(path, &to_toml_with_provenance(value, provenance)?)
}

/// Tab-separated table with a provenance comment line and a header row.
pub fn write_tsv(path: &Path, header: &[&str], rows: &[Vec<String>], provenance: &Provenance) -> Result<()> {
    let mut out = provenance.comment();
    out.push_str(&header.join("\t"));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    write_file(path, &out)
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(text.as_bytes())
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Header of a matrix file: the reviewer ids after the leading `paper`.
fn read_header(path: &Path, reader: &mut csv::Reader<&[u8]>) -> Result<Vec<String>> {
    let header = reader
        .headers()
        .map_err(|e| CliError::schema(path, format!("unreadable header: {e}")))?
        .clone();
    if header.get(0) != Some("paper") {
        return Err(CliError::schema(path, "header must start with `paper`"));
    }
    let ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    check_unique(path, "reviewer", &ids)?;
    Ok(ids)
}

fn check_unique(path: &Path, what: &str, ids: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if id.is_empty() {
            return Err(CliError::schema(path, format!("empty {what} id")));
        }
        if !seen.insert(id) {
            return Err(CliError::schema(path, format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

/// A real-valued paper × reviewer matrix with its ids.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMatrix {
    pub paper_ids: Vec<String>,
    pub reviewer_ids: Vec<String>,
    pub values: Array2<f64>,
}

pub fn read_matrix_csv(path: &Path) -> Result<LabeledMatrix> {
    let text = read_file(path)?;
    let mut reader = csv_reader(&text);
    let reviewer_ids = read_header(path, &mut reader)?;
    let n = reviewer_ids.len();
    let mut paper_ids = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::schema(path, e.to_string()))?;
        let line = line_of(&record);
        let paper = record.get(0).unwrap_or_default().to_string();
        if record.len() != n + 1 {
            return Err(CliError::schema(
                path,
                format!(
                    "line {line}: row `{paper}` has {} values, expected {n}",
                    record.len().saturating_sub(1)
                ),
            ));
        }
        for (i, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                CliError::schema(
                    path,
                    format!("line {line}: row `{paper}`, reviewer `{}`: `{cell}` is not a number", reviewer_ids[i]),
                )
            })?;
            values.push(v);
        }
        paper_ids.push(paper);
    }
    check_unique(path, "paper", &paper_ids)?;
    let values = Array2::from_shape_vec((paper_ids.len(), n), values).expect("rows were length-checked");
    Ok(LabeledMatrix {
        paper_ids,
        reviewer_ids,
        values,
    })
}

fn matrix_csv(
    paper_ids: &[String],
    reviewer_ids: &[String],
    cell: impl Fn(usize, usize) -> String,
    provenance: Option<&Provenance>,
) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("paper").chain(reviewer_ids.iter().map(String::as_str));
    let csv_err = |e: csv::Error| CliError::Config(format!("cannot write CSV: {e}"));
    writer.write_record(header).map_err(csv_err)?;
    for (p, id) in paper_ids.iter().enumerate() {
        let row = std::iter::once(id.clone()).chain((0..reviewer_ids.len()).map(|r| cell(p, r)));
        writer.write_record(row).map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Config(format!("cannot write CSV: {e}")))?;
    let mut out = provenance.map(Provenance::comment).unwrap_or_default();
    out.push_str(&String::from_utf8(bytes).expect("CSV of UTF-8 input is UTF-8"));
    Ok(out)
}

pub fn write_matrix_csv(
    path: &Path,
    paper_ids: &[String],
    reviewer_ids: &[String],
    values: &Array2<f64>,
    provenance: Option<&Provenance>,
) -> Result<()> {
    // `{}` prints the shortest representation that parses back exactly.
    let text = matrix_csv(paper_ids, reviewer_ids, |p, r| values[[p, r]].to_string(), provenance)?;
    write_file(path, &text)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdPair {
    pub reviewer: String,
    pub paper: String,
}

/// Contents of `instance.toml`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub paper_load: usize,
    pub reviewer_cap: usize,
    #[serde(default = "default_text_file")]
    pub text_similarity: String,
    #[serde(default = "default_subject_file")]
    pub subject_overlap: String,
    /// Declared region labels; defaults to those used below.
    #[serde(default)]
    pub regions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    /// Region per reviewer id. Empty means one region for everybody.
    #[serde(default)]
    pub reviewer_regions: BTreeMap<String, String>,
    /// Region of each paper's authors, by paper id.
    #[serde(default)]
    pub paper_regions: BTreeMap<String, String>,
    #[serde(default)]
    pub authorship: Vec<IdPair>,
    /// Conflicts besides authorship.
    #[serde(default)]
    pub conflicts: Vec<IdPair>,
}

fn default_text_file() -> String {
    TEXT_FILE.to_string()
}

fn default_subject_file() -> String {
    SUBJECT_FILE.to_string()
}

pub fn save_instance(dir: &Path, instance: &ConferenceInstance, provenance: Option<&Provenance>) -> Result<()> {
    let ids = |pairs: &mut dyn Iterator<Item = &Pair>| -> Vec<IdPair> {
        pairs
            .map(|p| IdPair {
                reviewer: instance.reviewer_ids[p.reviewer].clone(),
                paper: instance.paper_ids[p.paper].clone(),
            })
            .collect()
    };
    let labels = |ids: &[String], regions: &[String]| -> BTreeMap<String, String> {
        ids.iter().cloned().zip(regions.iter().cloned()).collect()
    };
    let file = InstanceFile {
        paper_load: instance.paper_load,
        reviewer_cap: instance.reviewer_cap,
        text_similarity: TEXT_FILE.into(),
        subject_overlap: SUBJECT_FILE.into(),
        regions: instance.regions.clone(),
        provenance: provenance.cloned(),
        reviewer_regions: labels(&instance.reviewer_ids, &instance.reviewer_region),
        paper_regions: labels(&instance.paper_ids, &instance.paper_region),
        authorship: ids(&mut instance.authorship.iter()),
        conflicts: ids(&mut instance.conflicts.difference(&instance.authorship)),
    };
    let text = toml::to_string(&file).map_err(|e| CliError::Config(format!("cannot serialize instance: {e}")))?;
    write_file(&dir.join(INSTANCE_FILE), &text)?;
    for (name, values) in [
        (TEXT_FILE, &instance.text_similarity),
        (SUBJECT_FILE, &instance.subject_overlap),
    ] {
        write_matrix_csv(&dir.join(name), &instance.paper_ids, &instance.reviewer_ids, values, provenance)?;
    }
    Ok(())
}

fn index_of(ids: &[String]) -> BTreeMap<&str, usize> {
    ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
}

pub fn load_instance(dir: &Path) -> Result<ConferenceInstance> {
    let meta_path = dir.join(INSTANCE_FILE);
    let file: InstanceFile =
        toml::from_str(&read_file(&meta_path)?).map_err(|e| CliError::schema(&meta_path, e.to_string()))?;
    let text_path = dir.join(&file.text_similarity);
    let subject_path = dir.join(&file.subject_overlap);
    let text = read_matrix_csv(&text_path)?;
    let subject = read_matrix_csv(&subject_path)?;
    if subject.paper_ids != text.paper_ids || subject.reviewer_ids != text.reviewer_ids {
        return Err(CliError::schema(
            &subject_path,
            format!("paper and reviewer ids differ from {}", text_path.display()),
        ));
    }

    let (m, n) = text.values.dim();
    let mut instance = ConferenceInstance::new(m, n, file.paper_load, file.reviewer_cap);
    instance.paper_ids = text.paper_ids;
    instance.reviewer_ids = text.reviewer_ids;
    instance.text_similarity = text.values;
    instance.subject_overlap = subject.values;

    let papers = index_of(&instance.paper_ids);
    let reviewers = index_of(&instance.reviewer_ids);
    let resolve = |pair: &IdPair, list: &str| -> Result<Pair> {
        let paper = papers.get(pair.paper.as_str()).copied();
        let reviewer = reviewers.get(pair.reviewer.as_str()).copied();
        match (paper, reviewer) {
            (Some(p), Some(r)) => Ok(Pair::new(p, r)),
            (None, _) => Err(CliError::schema(&meta_path, format!("{list}: unknown paper `{}`", pair.paper))),
            (_, None) => Err(CliError::schema(
                &meta_path,
                format!("{list}: unknown reviewer `{}`", pair.reviewer),
            )),
        }
    };
    let authors = file
        .authorship
        .iter()
        .map(|pair| resolve(pair, "authorship"))
        .collect::<Result<Vec<_>>>()?;
    let conflicts = file
        .conflicts
        .iter()
        .map(|pair| resolve(pair, "conflicts"))
        .collect::<Result<Vec<_>>>()?;
    for p in authors {
        instance.add_author(p.reviewer, p.paper);
    }
    for p in conflicts {
        instance.add_conflict(p.reviewer, p.paper);
    }

    if !file.reviewer_regions.is_empty() || !file.paper_regions.is_empty() {
        let lookup = |what: &str, ids: &[String], map: &BTreeMap<String, String>| -> Result<Vec<String>> {
            if let Some(unknown) = map.keys().find(|k| !ids.contains(k)) {
                return Err(CliError::schema(&meta_path, format!("{what}_regions: unknown id `{unknown}`")));
            }
            ids.iter()
                .map(|id| {
                    map.get(id)
                        .cloned()
                        .ok_or_else(|| CliError::schema(&meta_path, format!("{what}_regions: no region for `{id}`")))
                })
                .collect()
        };
        let reviewer_region = lookup("reviewer", &instance.reviewer_ids, &file.reviewer_regions)?;
        let paper_region = lookup("paper", &instance.paper_ids, &file.paper_regions)?;
        instance.set_regions(reviewer_region, paper_region);
    }
    if !file.regions.is_empty() {
        instance.regions = file.regions;
    }
    Ok(instance)
}

/// Writes every bid; missing bids are empty cells.
pub fn save_bids(
    path: &Path,
    instance: &ConferenceInstance,
    bids: &BidMatrix,
    provenance: Option<&Provenance>,
) -> Result<()> {
    let cell = |p: usize, r: usize| match bids.get(p, r) {
        BidLevel::NoBid => String::new(),
        level => level.as_str().to_string(),
    };
    let text = matrix_csv(&instance.paper_ids, &instance.reviewer_ids, cell, provenance)?;
    write_file(path, &text)
}

/// Reads bids by id. Rows and columns may come in any order or be absent;
/// absent bids are missing bids. Level names are case-insensitive.
pub fn load_bids(path: &Path, instance: &ConferenceInstance) -> Result<BidMatrix> {
    let text = read_file(path)?;
    let mut reader = csv_reader(&text);
    let header = read_header(path, &mut reader)?;
    let reviewers = index_of(&instance.reviewer_ids);
    let papers = index_of(&instance.paper_ids);
    let columns: Vec<usize> = header
        .iter()
        .map(|id| {
            reviewers
                .get(id.as_str())
                .copied()
                .ok_or_else(|| CliError::schema(path, format!("unknown reviewer `{id}`")))
        })
        .collect::<Result<_>>()?;
    let mut bids = BidMatrix::empty(instance.n_papers(), instance.n_reviewers());
    let mut seen = BTreeSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::schema(path, e.to_string()))?;
        let line = line_of(&record);
        let id = record.get(0).unwrap_or_default();
        let &p = papers
            .get(id)
            .ok_or_else(|| CliError::schema(path, format!("line {line}: unknown paper `{id}`")))?;
        if !seen.insert(p) {
            return Err(CliError::schema(path, format!("line {line}: paper `{id}` repeats")));
        }
        if record.len() != columns.len() + 1 {
            return Err(CliError::schema(
                path,
                format!(
                    "line {line}: row `{id}` has {} bids, expected {}",
                    record.len().saturating_sub(1),
                    columns.len()
                ),
            ));
        }
        for (cell, &r) in record.iter().skip(1).zip(&columns) {
            let level: BidLevel = cell
                .parse()
                .map_err(|e| CliError::schema(path, format!("line {line}: row `{id}`: {e}")))?;
            bids.set(p, r, level);
        }
    }
    Ok(bids)
}

/// Instance directory plus optional bids next to it.
pub fn load_instance_with_bids(dir: &Path) -> Result<(ConferenceInstance, Option<BidMatrix>)> {
    let instance = load_instance(dir)?;
    let bids_path: PathBuf = dir.join(BIDS_FILE);
    let bids = if bids_path.exists() {
        Some(load_bids(&bids_path, &instance)?)
    } else {
        None
    };
    Ok((instance, bids))
}
