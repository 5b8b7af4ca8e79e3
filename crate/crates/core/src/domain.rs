//! Task vocabulary: learning factors, reference types, templates, student
//! records, label vectors and datasets.
//!
//! A [`TemplateRegistry`] fixes the label space. The position of a template
//! in the registry is its label index, so bit `j` of every [`LabelVector`]
//! refers to `registry.templates()[j]`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The nine learning factors, in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorId {
    Marks,
    HoursStudied,
    Understandability,
    Difficulty,
    Deadlines,
    HealthIssues,
    PersonalIssues,
    LecturesAttended,
    Revision,
}

/// Measurement scale of a factor's weekly values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// 0..=100
    Percent,
    /// non-negative hours
    Hours,
    /// 1..=5
    Likert,
    /// non-negative counts
    Count,
}

impl Scale {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            Scale::Percent => (0.0, 100.0),
            Scale::Hours | Scale::Count => (0.0, f64::INFINITY),
            Scale::Likert => (1.0, 5.0),
        }
    }

    pub fn contains(self, v: f64) -> bool {
        let (lo, hi) = self.bounds();
        v.is_finite() && v >= lo && v <= hi
    }
}

impl FactorId {
    pub const COUNT: usize = 9;

    pub const ALL: [FactorId; 9] = [
        FactorId::Marks,
        FactorId::HoursStudied,
        FactorId::Understandability,
        FactorId::Difficulty,
        FactorId::Deadlines,
        FactorId::HealthIssues,
        FactorId::PersonalIssues,
        FactorId::LecturesAttended,
        FactorId::Revision,
    ];

    /// Stable code, 1..=9.
    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get((code as usize).checked_sub(1)?).copied()
    }

    /// Zero-based position, handy for indexing per-factor arrays.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FactorId::Marks => "marks",
            FactorId::HoursStudied => "hours_studied",
            FactorId::Understandability => "understandability",
            FactorId::Difficulty => "difficulty",
            FactorId::Deadlines => "deadlines",
            FactorId::HealthIssues => "health_issues",
            FactorId::PersonalIssues => "personal_issues",
            FactorId::LecturesAttended => "lectures_attended",
            FactorId::Revision => "revision",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn scale(self) -> Scale {
        match self {
            FactorId::Marks => Scale::Percent,
            FactorId::HoursStudied => Scale::Hours,
            FactorId::Understandability
            | FactorId::Difficulty
            | FactorId::Deadlines
            | FactorId::HealthIssues
            | FactorId::PersonalIssues => Scale::Likert,
            FactorId::LecturesAttended | FactorId::Revision => Scale::Count,
        }
    }
}

impl fmt::Display for FactorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How a template talks about its factor. Declaration order is the
/// tie-break order used when selecting between templates of one factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceType {
    Trend,
    Weeks,
    Average,
    Other,
}

impl ReferenceType {
    pub const ALL: [ReferenceType; 4] = [
        ReferenceType::Trend,
        ReferenceType::Weeks,
        ReferenceType::Average,
        ReferenceType::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReferenceType::Trend => "trend",
            ReferenceType::Weeks => "weeks",
            ReferenceType::Average => "average",
            ReferenceType::Other => "other",
        }
    }
}

impl fmt::Display for ReferenceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Named placeholders allowed in a template's surface text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Average,
    TrendWord,
    FirstWeekValue,
    LastWeekValue,
    PerWeekList,
}

impl Slot {
    pub const ALL: [Slot; 5] = [
        Slot::Average,
        Slot::TrendWord,
        Slot::FirstWeekValue,
        Slot::LastWeekValue,
        Slot::PerWeekList,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Slot::Average => "average",
            Slot::TrendWord => "trend_word",
            Slot::FirstWeekValue => "first_week_value",
            Slot::LastWeekValue => "last_week_value",
            Slot::PerWeekList => "per_week_list",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// A piece of surface text: either literal text or a slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment<'a> {
    Text(&'a str),
    Slot(Slot),
}

/// Splits a surface text into literal and slot segments.
///
/// Returns the offending name when a `{...}` group is not a known slot or
/// a brace is left unclosed.
pub fn parse_surface(text: &str) -> std::result::Result<Vec<Segment<'_>>, String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            out.push(Segment::Text(&rest[..open]));
        }
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or_else(|| after.to_string())?;
        let name = &after[..close];
        let slot = Slot::from_name(name).ok_or_else(|| name.to_string())?;
        out.push(Segment::Slot(slot));
        rest = &after[close + 1..];
    }
    if !rest.is_empty() {
        out.push(Segment::Text(rest));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub id: u32,
    pub factor: FactorId,
    pub reference: ReferenceType,
    pub surface_text: String,
}

impl Template {
    pub fn segments(&self) -> Vec<Segment<'_>> {
        // validated at registry construction
        parse_surface(&self.surface_text).unwrap_or_default()
    }
}

#[derive(Serialize, Deserialize)]
struct RegistryFile {
    version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    templates: Vec<Template>,
}

/// Ordered, validated set of templates. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateRegistry {
    version: String,
    note: Option<String>,
    templates: Vec<Template>,
    index_by_id: HashMap<u32, usize>,
}

const DEFAULT_REGISTRY: &str = include_str!("../data/default_registry.json");

impl TemplateRegistry {
    pub fn new(version: impl Into<String>, templates: Vec<Template>) -> Result<Self> {
        Self::build(version.into(), None, templates)
    }

    fn build(version: String, note: Option<String>, templates: Vec<Template>) -> Result<Self> {
        if templates.is_empty() {
            return Err(Error::EmptyRegistry);
        }
        let mut index_by_id = HashMap::with_capacity(templates.len());
        let mut pairs: HashMap<(FactorId, ReferenceType), u32> = HashMap::new();
        for (j, t) in templates.iter().enumerate() {
            if index_by_id.insert(t.id, j).is_some() {
                return Err(Error::DuplicateTemplateId(t.id));
            }
            if let Some(first) = pairs.insert((t.factor, t.reference), t.id) {
                return Err(Error::DuplicatePair {
                    id: t.id,
                    first,
                    factor: t.factor.to_string(),
                    reference: t.reference.to_string(),
                });
            }
            parse_surface(&t.surface_text).map_err(|slot| Error::UnknownSlot { id: t.id, slot })?;
        }
        Ok(TemplateRegistry {
            version,
            note,
            templates,
            index_by_id,
        })
    }

    /// The shipped stand-in registry of 29 templates.
    pub fn default_registry() -> Self {
        Self::from_json_str(DEFAULT_REGISTRY).expect("shipped registry is valid")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: RegistryFile = serde_json::from_str(s)?;
        Self::build(file.version, file.note, file.templates)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }

    pub fn to_json_string(&self) -> String {
        let file = RegistryFile {
            version: self.version.clone(),
            note: self.note.clone(),
            templates: self.templates.clone(),
        };
        serde_json::to_string_pretty(&file).expect("registry serializes")
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn get(&self, label: usize) -> Option<&Template> {
        self.templates.get(label)
    }

    pub fn label_index(&self, id: u32) -> Option<usize> {
        self.index_by_id.get(&id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.templates.iter().map(|t| t.id)
    }

    pub fn find(&self, factor: FactorId, reference: ReferenceType) -> Option<usize> {
        self.templates
            .iter()
            .position(|t| t.factor == factor && t.reference == reference)
    }

    /// SHA-256 over the canonical JSON of version and templates. The
    /// free-text note does not contribute.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(&(&self.version, &self.templates)).expect("serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn labelset_to_vector(&self, ids: &BTreeSet<u32>) -> Result<LabelVector> {
        let mut v = LabelVector::zeros(self.len());
        for &id in ids {
            let j = self.label_index(id).ok_or(Error::UnknownTemplateId(id))?;
            v.set(j, true);
        }
        Ok(v)
    }

    pub fn vector_to_labelset(&self, v: &LabelVector) -> Result<BTreeSet<u32>> {
        if v.len() != self.len() {
            return Err(Error::LengthMismatch(format!(
                "label vector has {} bits, registry has {} templates",
                v.len(),
                self.len()
            )));
        }
        Ok(v.ones().map(|j| self.templates[j].id).collect())
    }
}

/// One binary decision per template, indexed by label index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelVector {
    bits: Vec<bool>,
}

impl LabelVector {
    pub fn zeros(len: usize) -> Self {
        LabelVector {
            bits: vec![false; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        LabelVector { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, j: usize) -> bool {
        self.bits[j]
    }

    pub fn set(&mut self, j: usize, value: bool) {
        self.bits[j] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(j, _)| j)
    }

    /// Restriction to the given label indices, in the given order.
    pub fn project(&self, labels: &[usize]) -> LabelVector {
        LabelVector {
            bits: labels.iter().map(|&j| self.bits[j]).collect(),
        }
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for LabelVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for LabelVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(serde::de::Error::custom(format!(
                    "invalid label bit `{other}`"
                ))),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(LabelVector::from_bits)
    }
}

/// One student's weekly series over all nine factors, optionally with the
/// set of template ids an expert chose for them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RecordRepr")]
pub struct StudentRecord {
    pub student_id: String,
    pub weeks: usize,
    pub series: BTreeMap<FactorId, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expert_labels: Option<BTreeSet<u32>>,
}

#[derive(Deserialize)]
struct RecordRepr {
    student_id: String,
    weeks: usize,
    series: BTreeMap<FactorId, Vec<f64>>,
    #[serde(default)]
    expert_labels: Option<BTreeSet<u32>>,
}

impl TryFrom<RecordRepr> for StudentRecord {
    type Error = Error;

    fn try_from(r: RecordRepr) -> Result<Self> {
        StudentRecord::new(r.student_id, r.weeks, r.series, r.expert_labels)
    }
}

impl StudentRecord {
    pub fn new(
        student_id: impl Into<String>,
        weeks: usize,
        series: BTreeMap<FactorId, Vec<f64>>,
        expert_labels: Option<BTreeSet<u32>>,
    ) -> Result<Self> {
        let record = StudentRecord {
            student_id: student_id.into(),
            weeks,
            series,
            expert_labels,
        };
        record.validate()?;
        Ok(record)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidRecord {
            student_id: self.student_id.clone(),
            reason,
        };
        if self.weeks == 0 {
            return Err(invalid("week count must be positive".into()));
        }
        for factor in FactorId::ALL {
            let values = self
                .series
                .get(&factor)
                .ok_or_else(|| invalid(format!("missing series for {factor}")))?;
            if values.len() != self.weeks {
                return Err(invalid(format!(
                    "series for {factor} has {} values, expected {}",
                    values.len(),
                    self.weeks
                )));
            }
            let scale = factor.scale();
            if let Some(v) = values.iter().find(|&&v| !scale.contains(v)) {
                let (lo, hi) = scale.bounds();
                return Err(invalid(format!("{factor} value {v} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn series(&self, factor: FactorId) -> &[f64] {
        &self.series[&factor]
    }

    /// Same record without its expert labels.
    pub fn unlabeled(&self) -> StudentRecord {
        StudentRecord {
            expert_labels: None,
            ..self.clone()
        }
    }
}

/// Reads JSON Lines records. Blank lines are skipped.
pub fn read_records(reader: impl BufRead) -> Result<Vec<StudentRecord>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: StudentRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_records<'a>(
    mut writer: impl Write,
    records: impl IntoIterator<Item = &'a StudentRecord>,
) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Records sharing one registry and one week count.
#[derive(Debug, Clone)]
pub struct Dataset {
    registry: TemplateRegistry,
    records: Vec<StudentRecord>,
    weeks: usize,
}

impl Dataset {
    pub fn new(registry: TemplateRegistry, records: Vec<StudentRecord>) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyDataset)?;
        let weeks = first.weeks;
        for r in &records {
            if r.weeks != weeks {
                return Err(Error::WeekMismatch {
                    student_id: r.student_id.clone(),
                    expected: weeks,
                    found: r.weeks,
                });
            }
            if let Some(labels) = &r.expert_labels {
                if let Some(&id) = labels
                    .iter()
                    .find(|id| registry.label_index(**id).is_none())
                {
                    return Err(Error::InvalidRecord {
                        student_id: r.student_id.clone(),
                        reason: format!("expert label {id} is not a registry template id"),
                    });
                }
            }
        }
        Ok(Dataset {
            registry,
            records,
            weeks,
        })
    }

    pub fn load(path: impl AsRef<Path>, registry: TemplateRegistry) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let records = read_records(std::io::BufReader::new(file))?;
        Self::new(registry, records)
    }

    pub fn registry(&self) -> &TemplateRegistry {
        &self.registry
    }

    pub fn records(&self) -> &[StudentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn weeks(&self) -> usize {
        self.weeks
    }

    pub fn n_labels(&self) -> usize {
        self.registry.len()
    }

    /// Gold label vectors for every record; fails on the first unlabeled one.
    pub fn label_vectors(&self) -> Result<Vec<LabelVector>> {
        self.records
            .iter()
            .map(|r| {
                let ids = r
                    .expert_labels
                    .as_ref()
                    .ok_or_else(|| Error::Unlabeled(r.student_id.clone()))?;
                self.registry.labelset_to_vector(ids)
            })
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        write_records(&mut buf, &self.records).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}
