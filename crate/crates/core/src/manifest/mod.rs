//! Data model and manifest ingestion.
//!
//! A dataset is a flat list of samples: one annotated box per sample, with
//! camera, timestamp, identity (entity = one side of one individual), side,
//! and optionally a 15-keypoint skeleton. The on-disk manifest is a single
//! JSON document (see [`parse_manifest`]); feature grids live next to it as
//! `FGRD` binary files (see [`write_fgrd`]).
//!
//! Samples with an unknown identity are retained (they are still useful for
//! detection evaluation) but barred from re-ID splits, as are frontal/back
//! views; only left/right sides carry usable stripe identity.

mod synth;

pub use synth::{synth_generate, synth_generate_with_parts, SynthConfig};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{FeatureGrid, Keypoint, Rect, Skeleton, KEYPOINT_COUNT};
use crate::{Error, Result};

/// Which side of the animal a sample shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Frontal,
    Back,
}

impl Side {
    /// Flank views are the only ones whose stripe pattern identifies an entity.
    pub fn is_flank(&self) -> bool {
        matches!(self, Side::Left | Side::Right)
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Frontal => "frontal",
            Side::Back => "back",
        };
        f.write_str(s)
    }
}

/// Where a sample's box came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    GroundTruth,
    Detector,
}

/// An identity label; the reserved string `"unknown"` marks samples whose
/// identity could not be established.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Identity {
    Known(String),
    Unknown,
}

impl Identity {
    pub fn parse(s: &str) -> Self {
        if s == UNKNOWN_IDENTITY {
            Identity::Unknown
        } else {
            Identity::Known(s.to_string())
        }
    }

    pub fn as_known(&self) -> Option<&str> {
        match self {
            Identity::Known(id) => Some(id),
            Identity::Unknown => None,
        }
    }

    pub fn is_known(&self) -> bool {
        matches!(self, Identity::Known(_))
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Identity::Known(id) => f.write_str(id),
            Identity::Unknown => f.write_str(UNKNOWN_IDENTITY),
        }
    }
}

/// Reserved identity string for unidentified samples.
pub const UNKNOWN_IDENTITY: &str = "unknown";

/// One annotated box: the unit of both re-ID and detection evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub sample_id: String,
    pub camera_id: String,
    pub timestamp_ms: i64,
    pub entity: Identity,
    pub tiger: Identity,
    pub side: Side,
    pub bbox: Rect,
    pub keypoints: Option<Skeleton>,
    pub source: SourceKind,
}

impl Sample {
    /// Eligible for re-ID splits and queries: known identity on a flank view.
    pub fn reid_eligible(&self) -> bool {
        self.entity.is_known() && self.side.is_flank()
    }
}

/// An immutable collection of samples with entity and camera indexes.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Vec<Sample>,
    id_index: BTreeMap<String, usize>,
    entity_index: BTreeMap<String, Vec<usize>>,
    camera_index: BTreeMap<String, Vec<usize>>,
}

impl Dataset {
    /// Build a dataset and its indexes. No invariant checking happens here;
    /// run [`validate_dataset`] to collect violations.
    pub fn from_samples(samples: Vec<Sample>) -> Self {
        let mut id_index = BTreeMap::new();
        let mut entity_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut camera_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, s) in samples.iter().enumerate() {
            id_index.entry(s.sample_id.clone()).or_insert(i);
            if let Identity::Known(e) = &s.entity {
                entity_index.entry(e.clone()).or_default().push(i);
            }
            camera_index.entry(s.camera_id.clone()).or_default().push(i);
        }
        Self {
            samples,
            id_index,
            entity_index,
            camera_index,
        }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, sample_id: &str) -> Option<&Sample> {
        self.id_index.get(sample_id).map(|&i| &self.samples[i])
    }

    /// Known entities and the positions of their samples.
    pub fn entity_index(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.entity_index
    }

    pub fn camera_index(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.camera_index
    }

    pub fn reid_eligible_count(&self) -> usize {
        self.samples.iter().filter(|s| s.reid_eligible()).count()
    }

    /// Re-ID-eligible samples grouped by entity; entities with no eligible
    /// sample are absent.
    pub fn reid_entities(&self) -> BTreeMap<String, Vec<usize>> {
        let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            if s.reid_eligible() {
                out.entry(s.entity.to_string()).or_default().push(i);
            }
        }
        out
    }

    /// Distinct cameras among the given sample positions.
    pub fn cameras_of(&self, positions: &[usize]) -> BTreeSet<String> {
        positions
            .iter()
            .map(|&i| self.samples[i].camera_id.clone())
            .collect()
    }
}

/// Camera multiplicity of an entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraCategory {
    SingleCamera,
    CrossCamera,
}

/// One invariant violation found by [`validate_dataset`].
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub sample_id: Option<String>,
    pub message: String,
}

/// Per-entity statistics reported alongside violations.
#[derive(Debug, Clone, Serialize)]
pub struct EntityStats {
    pub n_samples: usize,
    pub cameras: BTreeSet<String>,
    pub category: CameraCategory,
}

/// Result of dataset validation: empty `violations` iff the dataset is valid.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub entities: BTreeMap<String, EntityStats>,
    pub n_samples: usize,
    pub n_reid_eligible: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every sample against the model invariants and summarize entities.
pub fn validate_dataset(ds: &Dataset) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for s in ds.samples() {
        let mut push = |msg: String| {
            violations.push(Violation {
                sample_id: Some(s.sample_id.clone()),
                message: msg,
            })
        };
        if !seen_ids.insert(s.sample_id.clone()) {
            push(format!("duplicate sample id '{}'", s.sample_id));
        }
        if s.timestamp_ms < 0 {
            push(format!("negative timestamp {}", s.timestamp_ms));
        }
        if !(s.bbox.width() > 0.0 && s.bbox.height() > 0.0) {
            push(format!(
                "bbox must have positive extent, got {} x {}",
                s.bbox.width(),
                s.bbox.height()
            ));
        }
        if !s.bbox.is_finite() {
            push("bbox has non-finite coordinates".into());
        }
        if let Some(sk) = &s.keypoints {
            if !(sk.scale > 0.0 && sk.scale.is_finite()) {
                push(format!("skeleton scale must be positive, got {}", sk.scale));
            }
            if sk.points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
                push("skeleton has non-finite keypoints".into());
            }
            if let Some(err) = sk.center_midpoint_error() {
                if err > 1.0 {
                    push(format!(
                        "center keypoint is {err:.2} px from the nose/tail-root midpoint (tolerance 1 px)"
                    ));
                }
            }
        }
    }

    let mut entities = BTreeMap::new();
    for (entity, positions) in ds.entity_index() {
        let cameras = ds.cameras_of(positions);
        let category = if cameras.len() <= 1 {
            CameraCategory::SingleCamera
        } else {
            CameraCategory::CrossCamera
        };
        entities.insert(
            entity.clone(),
            EntityStats {
                n_samples: positions.len(),
                cameras,
                category,
            },
        );
    }

    ValidationReport {
        violations,
        entities,
        n_samples: ds.len(),
        n_reid_eligible: ds.reid_eligible_count(),
    }
}

// ---------------------------------------------------------------------------
// Manifest JSON
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RawManifest {
    samples: Vec<RawSample>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawSample {
    id: String,
    camera: String,
    t_ms: i64,
    entity: String,
    tiger: String,
    side: Side,
    bbox: [f64; 4],
    keypoints: Option<Vec<[f64; 3]>>,
    source: SourceKind,
}

fn sample_from_raw(raw: RawSample) -> Result<Sample> {
    let context = raw.id.clone();
    let bbox = Rect::from_xywh(raw.bbox[0], raw.bbox[1], raw.bbox[2], raw.bbox[3])
        .map_err(|e| Error::Validation(format!("sample '{context}': {e}")))?;
    let keypoints = match raw.keypoints {
        None => None,
        Some(slots) => {
            if slots.len() != KEYPOINT_COUNT {
                return Err(Error::Validation(format!(
                    "sample '{context}': expected {KEYPOINT_COUNT} keypoints, got {}",
                    slots.len()
                )));
            }
            let mut points = [Keypoint {
                x: 0.0,
                y: 0.0,
                visible: false,
            }; KEYPOINT_COUNT];
            for (i, slot) in slots.iter().enumerate() {
                points[i] = Keypoint {
                    x: slot[0],
                    y: slot[1],
                    visible: slot[2] > 0.0,
                };
            }
            // Object scale for keypoint similarity: sqrt of the box area.
            let scale = bbox.area().sqrt();
            Some(Skeleton::new(points, scale).map_err(|e| {
                Error::Validation(format!("sample '{context}': {e}"))
            })?)
        }
    };
    Ok(Sample {
        sample_id: raw.id,
        camera_id: raw.camera,
        timestamp_ms: raw.t_ms,
        entity: Identity::parse(&raw.entity),
        tiger: Identity::parse(&raw.tiger),
        side: raw.side,
        bbox,
        keypoints,
        source: raw.source,
    })
}

fn sample_to_raw(s: &Sample) -> RawSample {
    RawSample {
        id: s.sample_id.clone(),
        camera: s.camera_id.clone(),
        t_ms: s.timestamp_ms,
        entity: s.entity.to_string(),
        tiger: s.tiger.to_string(),
        side: s.side,
        bbox: [
            s.bbox.x_min,
            s.bbox.y_min,
            s.bbox.width(),
            s.bbox.height(),
        ],
        keypoints: s.keypoints.as_ref().map(|sk| {
            sk.points
                .iter()
                .map(|p| [p.x, p.y, if p.visible { 1.0 } else { 0.0 }])
                .collect()
        }),
        source: s.source,
    }
}

/// Parse a manifest JSON document into a validated [`Dataset`].
pub fn parse_manifest(json: &str) -> Result<Dataset> {
    let raw: RawManifest = serde_json::from_str(json).map_err(|e| Error::Schema {
        context: "manifest".into(),
        message: e.to_string(),
    })?;
    let mut samples = Vec::with_capacity(raw.samples.len());
    let mut seen = BTreeSet::new();
    for raw_sample in raw.samples {
        if !seen.insert(raw_sample.id.clone()) {
            return Err(Error::Validation(format!(
                "duplicate sample id '{}'",
                raw_sample.id
            )));
        }
        samples.push(sample_from_raw(raw_sample)?);
    }
    let ds = Dataset::from_samples(samples);
    let report = validate_dataset(&ds);
    if let Some(first) = report.violations.first() {
        return Err(Error::Validation(format!(
            "{} violation(s); first: sample {:?}: {}",
            report.violations.len(),
            first.sample_id,
            first.message
        )));
    }
    Ok(ds)
}

/// Load and validate a manifest file.
pub fn load_manifest(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Lookup(format!("cannot read manifest '{}': {e}", path.display()))
    })?;
    parse_manifest(&text).map_err(|e| match e {
        Error::Schema { message, .. } => Error::Schema {
            context: path.display().to_string(),
            message,
        },
        other => other,
    })
}

/// Serialize a dataset back to manifest JSON (pretty-printed, stable order).
pub fn manifest_to_json(ds: &Dataset) -> Result<String> {
    let raw = RawManifest {
        samples: ds.samples().iter().map(sample_to_raw).collect(),
    };
    Ok(serde_json::to_string_pretty(&raw)?)
}

pub fn save_manifest(ds: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, manifest_to_json(ds)? + "\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Train/test split
// ---------------------------------------------------------------------------

/// `round(frac_num/frac_den * n)` with halves rounded up, in exact integers.
fn round_half_up_frac(n: usize, frac_num: usize, frac_den: usize) -> usize {
    (2 * frac_num * n + frac_den) / (2 * frac_den)
}

/// Split re-ID-eligible entities into train and test sets.
///
/// Entities are classified single-camera vs cross-camera over their eligible
/// samples; 60% of single-camera and 40% of cross-camera entities (rounded
/// half up) are drawn into the training set with a seeded shuffle. The
/// remainder forms the test set. Unknown identities and frontal/back views
/// never enter either side.
pub fn split_entities(ds: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    let groups = ds.reid_entities();
    let mut single: Vec<&String> = Vec::new();
    let mut cross: Vec<&String> = Vec::new();
    for (entity, positions) in &groups {
        if ds.cameras_of(positions).len() <= 1 {
            single.push(entity);
        } else {
            cross.push(entity);
        }
    }
    if single.is_empty() {
        return Err(Error::Validation(
            "cannot split: no single-camera entities".into(),
        ));
    }
    if cross.is_empty() {
        return Err(Error::Validation(
            "cannot split: no cross-camera entities".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    single.shuffle(&mut rng);
    cross.shuffle(&mut rng);
    let n_single_train = round_half_up_frac(single.len(), 3, 5);
    let n_cross_train = round_half_up_frac(cross.len(), 2, 5);

    let mut train_entities: BTreeSet<&String> = BTreeSet::new();
    train_entities.extend(single.iter().take(n_single_train));
    train_entities.extend(cross.iter().take(n_cross_train));

    let mut train_positions = Vec::new();
    let mut test_positions = Vec::new();
    for (entity, positions) in &groups {
        if train_entities.contains(entity) {
            train_positions.extend(positions.iter().copied());
        } else {
            test_positions.extend(positions.iter().copied());
        }
    }
    train_positions.sort_unstable();
    test_positions.sort_unstable();

    let collect = |positions: &[usize]| {
        Dataset::from_samples(
            positions
                .iter()
                .map(|&i| ds.samples()[i].clone())
                .collect(),
        )
    };
    Ok((collect(&train_positions), collect(&test_positions)))
}

// ---------------------------------------------------------------------------
// FGRD binary grid files
// ---------------------------------------------------------------------------

const FGRD_MAGIC: &[u8; 4] = b"FGRD";

/// Write a grid as `FGRD`, C/H/W as u32 little-endian, then channel-major
/// f32 little-endian values.
pub fn write_fgrd<W: Write>(mut w: W, grid: &FeatureGrid) -> Result<()> {
    let (c, h, wd) = grid.dims();
    w.write_all(FGRD_MAGIC)?;
    for dim in [c, h, wd] {
        w.write_all(&(dim as u32).to_le_bytes())?;
    }
    for v in grid.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Read a grid written by [`write_fgrd`].
pub fn read_fgrd<R: Read>(mut r: R) -> Result<FeatureGrid> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FGRD_MAGIC {
        return Err(Error::Schema {
            context: "fgrd".into(),
            message: format!("bad magic {magic:?}"),
        });
    }
    let mut dim = [0u8; 4];
    let mut dims = [0usize; 3];
    for slot in &mut dims {
        r.read_exact(&mut dim)?;
        *slot = u32::from_le_bytes(dim) as usize;
    }
    let [c, h, w] = dims;
    let count = c * h * w;
    let mut values = Vec::with_capacity(count);
    let mut buf = [0u8; 4];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        values.push(f32::from_le_bytes(buf));
    }
    FeatureGrid::from_values(c, h, w, values)
}

pub fn write_fgrd_file(path: &Path, grid: &FeatureGrid) -> Result<()> {
    let mut buf = Vec::new();
    write_fgrd(&mut buf, grid)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_fgrd_file(path: &Path) -> Result<FeatureGrid> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Lookup(format!("cannot read grid '{}': {e}", path.display())))?;
    read_fgrd(&bytes[..])
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn make_sample(
        id: &str,
        camera: &str,
        t_ms: i64,
        entity: &str,
        side: Side,
    ) -> Sample {
        Sample {
            sample_id: id.to_string(),
            camera_id: camera.to_string(),
            timestamp_ms: t_ms,
            entity: Identity::parse(entity),
            tiger: Identity::parse(entity),
            side,
            bbox: Rect::from_xywh(0.0, 0.0, 100.0, 50.0).unwrap(),
            keypoints: None,
            source: SourceKind::GroundTruth,
        }
    }

    const MANIFEST_TWO: &str = r#"{
        "samples": [
            {"id": "a", "camera": "c1", "t_ms": 0, "entity": "t1_left", "tiger": "t1",
             "side": "left", "bbox": [0, 0, 10, 10], "keypoints": null, "source": "ground_truth"},
            {"id": "b", "camera": "c1", "t_ms": 1000, "entity": "unknown", "tiger": "unknown",
             "side": "left", "bbox": [5, 5, 10, 10], "keypoints": null, "source": "ground_truth"}
        ]
    }"#;

    #[test]
    fn parse_retains_unknown_but_flags_ineligible() {
        let ds = parse_manifest(MANIFEST_TWO).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.reid_eligible_count(), 1);
        assert!(!ds.get("b").unwrap().entity.is_known());
    }

    #[test]
    fn parse_populates_keypoint_slots_in_order() {
        let kps: Vec<[f64; 3]> = (0..15).map(|i| [i as f64, 2.0 * i as f64, 1.0]).collect();
        let json = serde_json::json!({
            "samples": [{
                "id": "a", "camera": "c1", "t_ms": 0, "entity": "t1_left", "tiger": "t1",
                "side": "left", "bbox": [0, 0, 40, 20], "keypoints": kps, "source": "ground_truth"
            }]
        });
        // Break the center-midpoint invariant check by keeping slot order but
        // choosing coordinates where slot 15 is the midpoint of 3 and 14:
        // x: slot3=2, slot14=13 -> mid 7.5; slot15 index 14 -> x=14. So mark
        // slot 15 invisible instead.
        let mut json = json;
        json["samples"][0]["keypoints"][14][2] = serde_json::json!(0.0);
        let ds = parse_manifest(&json.to_string()).unwrap();
        let sk = ds.get("a").unwrap().keypoints.as_ref().unwrap();
        for (i, p) in sk.points.iter().enumerate() {
            assert_eq!(p.x, i as f64);
            assert_eq!(p.y, 2.0 * i as f64);
        }
        assert_eq!(sk.scale, (40.0f64 * 20.0).sqrt());
    }

    #[test]
    fn parse_rejects_fourteen_keypoints() {
        let kps: Vec<[f64; 3]> = (0..14).map(|i| [i as f64, i as f64, 1.0]).collect();
        let json = serde_json::json!({
            "samples": [{
                "id": "a", "camera": "c1", "t_ms": 0, "entity": "t1_left", "tiger": "t1",
                "side": "left", "bbox": [0, 0, 40, 20], "keypoints": kps, "source": "ground_truth"
            }]
        });
        let err = parse_manifest(&json.to_string()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn parse_rejects_duplicate_sample_ids() {
        let json = MANIFEST_TWO.replace("\"id\": \"b\"", "\"id\": \"a\"");
        assert!(matches!(
            parse_manifest(&json).unwrap_err(),
            Error::Validation(_)
        ));
    }

    #[test]
    fn parse_reports_malformed_json_as_schema_error() {
        assert!(matches!(
            parse_manifest("{ not json").unwrap_err(),
            Error::Schema { .. }
        ));
    }

    #[test]
    fn validate_flags_negative_timestamp() {
        let mut s = make_sample("a", "c1", 0, "e1", Side::Left);
        s.timestamp_ms = -5;
        let report = validate_dataset(&Dataset::from_samples(vec![s]));
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].sample_id.as_deref(), Some("a"));
    }

    #[test]
    fn validate_clean_dataset_is_empty() {
        let ds = Dataset::from_samples(vec![
            make_sample("a", "c1", 0, "e1", Side::Left),
            make_sample("b", "c2", 10, "e1", Side::Left),
        ]);
        let report = validate_dataset(&ds);
        assert!(report.is_valid());
        assert_eq!(
            report.entities["e1"].category,
            CameraCategory::CrossCamera
        );
    }

    fn two_category_dataset(n_single: usize, n_cross: usize) -> Dataset {
        let mut samples = Vec::new();
        for e in 0..n_single {
            for s in 0..3 {
                samples.push(make_sample(
                    &format!("s{e}_{s}"),
                    "cam0",
                    (samples.len() as i64) * 2000,
                    &format!("single{e}"),
                    Side::Left,
                ));
            }
        }
        for e in 0..n_cross {
            for s in 0..3 {
                samples.push(make_sample(
                    &format!("x{e}_{s}"),
                    &format!("cam{}", s % 2),
                    (samples.len() as i64) * 2000,
                    &format!("cross{e}"),
                    Side::Left,
                ));
            }
        }
        Dataset::from_samples(samples)
    }

    #[test]
    fn split_takes_60_and_40_percent() {
        let ds = two_category_dataset(10, 10);
        let (train, test) = split_entities(&ds, 7).unwrap();
        let train_groups = train.reid_entities();
        let n_single = train_groups.keys().filter(|e| e.starts_with("single")).count();
        let n_cross = train_groups.keys().filter(|e| e.starts_with("cross")).count();
        assert_eq!(n_single, 6);
        assert_eq!(n_cross, 4);
        assert_eq!(test.reid_entities().len(), 10);
    }

    #[test]
    fn split_is_deterministic() {
        let ds = two_category_dataset(8, 5);
        let (train_a, test_a) = split_entities(&ds, 42).unwrap();
        let (train_b, test_b) = split_entities(&ds, 42).unwrap();
        let ids = |d: &Dataset| d.samples().iter().map(|s| s.sample_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&train_a), ids(&train_b));
        assert_eq!(ids(&test_a), ids(&test_b));
    }

    #[test]
    fn split_counts_on_benchmark_shaped_input() {
        // 132 single-camera and 50 cross-camera entities. Rounding rule:
        // round-half-up(0.6 * 132) = 79, round-half-up(0.4 * 50) = 20.
        assert_eq!(round_half_up_frac(132, 3, 5), 79);
        assert_eq!(round_half_up_frac(50, 2, 5), 20);
        let ds = two_category_dataset(132, 50);
        let (train, _) = split_entities(&ds, 3).unwrap();
        let groups = train.reid_entities();
        let n_single = groups.keys().filter(|e| e.starts_with("single")).count();
        let n_cross = groups.keys().filter(|e| e.starts_with("cross")).count();
        assert_eq!(n_single, 79);
        assert_eq!(n_cross, 20);
    }

    #[test]
    fn split_partitions_entities_and_preserves_categories() {
        let ds = two_category_dataset(9, 7);
        let before = ds.reid_entities();
        let (train, test) = split_entities(&ds, 123).unwrap();
        let train_groups = train.reid_entities();
        let test_groups = test.reid_entities();
        // Disjoint and exhaustive over entities.
        for entity in train_groups.keys() {
            assert!(!test_groups.contains_key(entity));
        }
        assert_eq!(train_groups.len() + test_groups.len(), before.len());
        // Category preserved: camera sets carried intact per entity.
        for (entity, positions) in &before {
            let want = ds.cameras_of(positions);
            let have = if let Some(p) = train_groups.get(entity) {
                train.cameras_of(p)
            } else {
                test.cameras_of(test_groups.get(entity).unwrap())
            };
            assert_eq!(want, have, "entity {entity}");
        }
    }

    #[test]
    fn split_requires_both_categories() {
        let mut samples = Vec::new();
        for s in 0..3 {
            samples.push(make_sample(
                &format!("a{s}"),
                "cam0",
                s * 2000,
                "only_single",
                Side::Left,
            ));
        }
        let err = split_entities(&Dataset::from_samples(samples), 1).unwrap_err();
        assert!(err.to_string().contains("cross-camera"));
    }

    #[test]
    fn split_excludes_unknown_and_non_flank() {
        let mut ds_samples = vec![
            make_sample("u0", "cam0", 0, "unknown", Side::Left),
            make_sample("f0", "cam0", 2000, "front_e", Side::Frontal),
        ];
        for e in 0..2 {
            for s in 0..2 {
                ds_samples.push(make_sample(
                    &format!("e{e}_{s}"),
                    if e == 0 { "cam0" } else { &format!("cam{s}") },
                    (10 + ds_samples.len() as i64) * 2000,
                    &format!("e{e}"),
                    Side::Left,
                ));
            }
        }
        let ds = Dataset::from_samples(ds_samples);
        let (train, test) = split_entities(&ds, 9).unwrap();
        for s in train.samples().iter().chain(test.samples()) {
            assert!(s.reid_eligible());
            assert_ne!(s.sample_id, "u0");
            assert_ne!(s.sample_id, "f0");
        }
    }

    #[test]
    fn fgrd_round_trip() {
        let grid =
            FeatureGrid::from_values(2, 3, 4, (0..24).map(|i| i as f32 * 0.5 - 3.0).collect())
                .unwrap();
        let mut buf = Vec::new();
        write_fgrd(&mut buf, &grid).unwrap();
        assert_eq!(&buf[0..4], b"FGRD");
        let back = read_fgrd(&buf[..]).unwrap();
        assert_eq!(back, grid);
    }

    #[test]
    fn fgrd_rejects_bad_magic() {
        let mut buf = Vec::new();
        write_fgrd(&mut buf, &FeatureGrid::zeros(1, 2, 2)).unwrap();
        buf[0] = b'X';
        assert!(matches!(
            read_fgrd(&buf[..]).unwrap_err(),
            Error::Schema { .. }
        ));
    }

    #[test]
    fn manifest_round_trip() {
        let ds = parse_manifest(MANIFEST_TWO).unwrap();
        let json = manifest_to_json(&ds).unwrap();
        let back = parse_manifest(&json).unwrap();
        assert_eq!(back.len(), ds.len());
        assert_eq!(back.samples()[1].entity, Identity::Unknown);
    }
}
