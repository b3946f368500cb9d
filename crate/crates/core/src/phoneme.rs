//! Phoneme vocabularies, alignment ingestion and frame-level phoneme targets.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::FrameSpec;
use crate::error::{PaapError, Result};
use crate::features::{has_extension, read_matrix_header, write_file};

/// 40 phonemes plus silence.
pub const NUM_PHONEMES: usize = 41;
pub const SIL: &str = "SIL";

/// Default inventory: 39 ARPAbet phonemes, the flap `DX`, then `SIL`.
pub const DEFAULT_VOCAB: [&str; NUM_PHONEMES] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "DX", "EH", "ER", "EY", "F", "G",
    "HH", "IH", "IY", "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH", "T", "TH",
    "UH", "UW", "V", "W", "Y", "Z", "ZH", "SIL",
];

/// Broad class used to group phonemes in per-phoneme plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhonemeCategory {
    Vowel,
    Dorsal,
    Labial,
    Coronal,
    Laryngeal,
    Silence,
    Other,
}

impl PhonemeCategory {
    /// Category of an ARPAbet symbol; consonants by place of articulation.
    pub fn of(label: &str) -> Self {
        use PhonemeCategory::*;
        match label {
            "AA" | "AE" | "AH" | "AO" | "AW" | "AY" | "EH" | "ER" | "EY" | "IH" | "IY" | "OW"
            | "OY" | "UH" | "UW" => Vowel,
            "G" | "K" | "NG" | "Y" => Dorsal,
            "B" | "P" | "M" | "F" | "V" | "W" => Labial,
            "CH" | "D" | "DH" | "DX" | "JH" | "L" | "N" | "R" | "S" | "SH" | "T" | "TH" | "Z"
            | "ZH" => Coronal,
            "HH" => Laryngeal,
            SIL => Silence,
            _ => Other,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PhonemeCategory::Vowel => "vowel",
            PhonemeCategory::Dorsal => "dorsal",
            PhonemeCategory::Labial => "labial",
            PhonemeCategory::Coronal => "coronal",
            PhonemeCategory::Laryngeal => "laryngeal",
            PhonemeCategory::Silence => "silence",
            PhonemeCategory::Other => "other",
        }
    }
}

/// Ordered list of 41 unique labels, one of which is `SIL`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhonemeVocab {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    sil: usize,
}

impl Default for PhonemeVocab {
    fn default() -> Self {
        PhonemeVocab::new(DEFAULT_VOCAB.iter().map(|s| s.to_string()).collect())
            .expect("default vocabulary is valid")
    }
}

impl PhonemeVocab {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.len() != NUM_PHONEMES {
            return Err(PaapError::Validation(format!(
                "vocabulary must have {NUM_PHONEMES} entries, got {}",
                labels.len()
            )));
        }
        let mut index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(PaapError::Validation(format!("duplicate vocabulary label {l:?}")));
            }
        }
        let sil = *index
            .get(SIL)
            .ok_or_else(|| PaapError::Validation("vocabulary lacks SIL".into()))?;
        Ok(PhonemeVocab { labels, index, sil })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| PaapError::Vocabulary(label.to_string()))
    }

    pub fn sil_index(&self) -> usize {
        self.sil
    }

    pub fn category(&self, i: usize) -> PhonemeCategory {
        PhonemeCategory::of(&self.labels[i])
    }

    /// Loads a JSON array of 41 labels.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PaapError::io(path, e))?;
        let labels: Vec<String> = serde_json::from_str(&text)
            .map_err(|e| PaapError::format(format!("{}: {e}", path.display())))?;
        PhonemeVocab::new(labels)
    }
}

/// A labeled time span in seconds, half-open `[start_s, end_s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub phoneme: String,
    pub start_s: f64,
    pub end_s: f64,
}

impl Interval {
    pub fn new(phoneme: &str, start_s: f64, end_s: f64) -> Self {
        Interval {
            phoneme: phoneme.to_string(),
            start_s,
            end_s,
        }
    }
}

/// Ingested aligner output.
#[derive(Debug, Clone, PartialEq)]
pub enum AlignmentContent {
    /// Contiguous intervals from 0 to the document duration; gaps already filled with `SIL`.
    Intervals(Vec<Interval>),
    /// Frame-level scores at `hop` samples per frame.
    Logits {
        values: Vec<[f64; NUM_PHONEMES]>,
        hop: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentDoc {
    pub content: AlignmentContent,
    pub vocab: PhonemeVocab,
    pub sample_rate: u32,
}

#[derive(Deserialize, Serialize)]
struct RawAlignment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_rate: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vocab: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intervals: Option<Vec<Interval>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    logits: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hop: Option<usize>,
}

const TIME_EPS: f64 = 1e-9;

impl AlignmentDoc {
    /// Validates intervals and fills gaps (including a leading one) with `SIL`.
    pub fn from_intervals(intervals: Vec<Interval>, vocab: PhonemeVocab, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(PaapError::format("sample_rate must be positive"));
        }
        let mut filled = Vec::with_capacity(intervals.len());
        let mut prev_end = 0.0;
        for (i, iv) in intervals.into_iter().enumerate() {
            vocab.index_of(&iv.phoneme)?;
            if !(iv.start_s.is_finite() && iv.end_s.is_finite()) || iv.start_s < 0.0 || iv.end_s < iv.start_s {
                return Err(PaapError::format(format!(
                    "interval {i} ({}, {}, {}) has invalid bounds",
                    iv.phoneme, iv.start_s, iv.end_s
                )));
            }
            if iv.start_s < prev_end - TIME_EPS {
                return Err(PaapError::format(format!(
                    "intervals {} and {i} overlap or are out of order",
                    i.saturating_sub(1)
                )));
            }
            if iv.start_s > prev_end + TIME_EPS {
                filled.push(Interval::new(SIL, prev_end, iv.start_s));
            }
            prev_end = iv.end_s;
            filled.push(iv);
        }
        Ok(AlignmentDoc {
            content: AlignmentContent::Intervals(filled),
            vocab,
            sample_rate,
        })
    }

    pub fn from_logits(values: Vec<Vec<f64>>, hop: usize, vocab: PhonemeVocab, sample_rate: u32) -> Result<Self> {
        if hop == 0 || sample_rate == 0 {
            return Err(PaapError::format("logits hop and sample_rate must be positive"));
        }
        if values.is_empty() {
            return Err(PaapError::format("logits matrix is empty"));
        }
        let rows = values
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let arr: [f64; NUM_PHONEMES] = row.try_into().map_err(|r: Vec<f64>| {
                    PaapError::format(format!("logits row {i} has {} entries, expected {NUM_PHONEMES}", r.len()))
                })?;
                if arr.iter().any(|v| !v.is_finite()) {
                    return Err(PaapError::format(format!("logits row {i} has a non-finite entry")));
                }
                Ok(arr)
            })
            .collect::<Result<_>>()?;
        Ok(AlignmentDoc {
            content: AlignmentContent::Logits { values: rows, hop },
            vocab,
            sample_rate,
        })
    }

    /// End time of the last interval, or of the last logits frame.
    pub fn duration_s(&self) -> f64 {
        match &self.content {
            AlignmentContent::Intervals(iv) => iv.last().map_or(0.0, |i| i.end_s),
            AlignmentContent::Logits { values, hop } => (values.len() * hop) as f64 / self.sample_rate as f64,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        AlignmentDoc::from_json_with_vocab(text, &PhonemeVocab::default())
    }

    /// Parses alignment JSON, using `default_vocab` when the document has no `vocab` key.
    pub fn from_json_with_vocab(text: &str, default_vocab: &PhonemeVocab) -> Result<Self> {
        let raw: RawAlignment = serde_json::from_str(text).map_err(|e| PaapError::format(e.to_string()))?;
        let vocab = match raw.vocab {
            Some(labels) => PhonemeVocab::new(labels)?,
            None => default_vocab.clone(),
        };
        match (raw.intervals, raw.logits) {
            (Some(iv), None) => {
                let sr = raw
                    .sample_rate
                    .ok_or_else(|| PaapError::format("interval alignment requires sample_rate"))?;
                AlignmentDoc::from_intervals(iv, vocab, sr)
            }
            (None, Some(lg)) => {
                let hop = raw.hop.ok_or_else(|| PaapError::format("logits alignment requires hop"))?;
                AlignmentDoc::from_logits(lg, hop, vocab, raw.sample_rate.unwrap_or(crate::SAMPLE_RATE_HZ))
            }
            _ => Err(PaapError::format("alignment must contain exactly one of `intervals` or `logits`")),
        }
    }

    pub fn to_json(&self) -> String {
        let vocab = (self.vocab != PhonemeVocab::default()).then(|| self.vocab.labels.clone());
        let raw = match &self.content {
            AlignmentContent::Intervals(iv) => RawAlignment {
                sample_rate: Some(self.sample_rate),
                vocab,
                intervals: Some(iv.clone()),
                logits: None,
                hop: None,
            },
            AlignmentContent::Logits { values, hop } => RawAlignment {
                sample_rate: Some(self.sample_rate),
                vocab,
                intervals: None,
                logits: Some(values.iter().map(|r| r.to_vec()).collect()),
                hop: Some(*hop),
            },
        };
        serde_json::to_string_pretty(&raw).expect("alignment serializes")
    }
}

/// Reads an alignment JSON file. A `vocab` key in the file overrides `vocab`.
pub fn parse_alignment(path: impl AsRef<Path>, vocab: &PhonemeVocab) -> Result<AlignmentDoc> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| PaapError::io(path, e))?;
    AlignmentDoc::from_json_with_vocab(&text, vocab).map_err(|e| match e {
        PaapError::Format(msg) => PaapError::format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

const LOGITS_MAGIC: &[u8; 6] = b"PAAPP1";

/// N frames by 41 phoneme scores.
#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeLogits {
    pub values: Vec<[f64; NUM_PHONEMES]>,
    pub vocab: PhonemeVocab,
    pub frame_spec: FrameSpec,
}

impl PhonemeLogits {
    pub fn n_frames(&self) -> usize {
        self.values.len()
    }

    /// Binary layout: magic `PAAPP1`, u32 N, u32 41, then little-endian f32 row-major.
    pub fn to_bin(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(14 + self.values.len() * NUM_PHONEMES * 4);
        out.extend_from_slice(LOGITS_MAGIC);
        out.extend_from_slice(&(self.values.len() as u32).to_le_bytes());
        out.extend_from_slice(&(NUM_PHONEMES as u32).to_le_bytes());
        for row in &self.values {
            for &v in row {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bin(bytes: &[u8], vocab: PhonemeVocab, frame_spec: FrameSpec) -> Result<Self> {
        let (rows, cols, body) = read_matrix_header(bytes, LOGITS_MAGIC)?;
        if cols != NUM_PHONEMES {
            return Err(PaapError::format(format!("logits file has {cols} columns, expected {NUM_PHONEMES}")));
        }
        let mut values = Vec::with_capacity(rows);
        for chunk in body.chunks_exact(NUM_PHONEMES * 4) {
            let mut row = [0.0; NUM_PHONEMES];
            for (k, b) in chunk.chunks_exact(4).enumerate() {
                row[k] = f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(PaapError::format("logits file has a non-finite entry"));
            }
            values.push(row);
        }
        Ok(PhonemeLogits { values, vocab, frame_spec })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_bin())
    }

    /// Loads `.bin` logits directly, or converts an alignment `.json` to
    /// `n_frames` rows.
    pub fn load(path: impl AsRef<Path>, vocab: &PhonemeVocab, frame_spec: FrameSpec, n_frames: usize, sr: u32) -> Result<Self> {
        let path = path.as_ref();
        if has_extension(path, "json") {
            let doc = parse_alignment(path, vocab)?;
            return to_frame_logits(&doc, n_frames, &frame_spec, sr);
        }
        let bytes = std::fs::read(path).map_err(|e| PaapError::io(path, e))?;
        PhonemeLogits::from_bin(&bytes, vocab.clone(), frame_spec)
            .map_err(|e| PaapError::format(format!("{}: {e}", path.display())))
    }
}

/// Maps an alignment onto `n_frames` STFT frames by frame-center lookup.
pub fn to_frame_logits(doc: &AlignmentDoc, n_frames: usize, spec: &FrameSpec, sr: u32) -> Result<PhonemeLogits> {
    if n_frames == 0 {
        return Err(PaapError::arg("n_frames must be positive"));
    }
    if sr == 0 {
        return Err(PaapError::arg("sample rate must be positive"));
    }
    let center = |i: usize| (i * spec.hop) as f64 / sr as f64;
    let values = match &doc.content {
        AlignmentContent::Intervals(intervals) => {
            let sil = doc.vocab.sil_index();
            let mut cursor = 0;
            (0..n_frames)
                .map(|i| {
                    let t = center(i);
                    while cursor < intervals.len() && intervals[cursor].end_s <= t {
                        cursor += 1;
                    }
                    let idx = match intervals.get(cursor) {
                        Some(iv) if iv.start_s <= t => doc.vocab.index_of(&iv.phoneme)?,
                        _ => sil,
                    };
                    let mut row = [0.0; NUM_PHONEMES];
                    row[idx] = 1.0;
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?
        }
        AlignmentContent::Logits { values, hop } => {
            let last = values.len() - 1;
            (0..n_frames)
                .map(|i| {
                    let src = (center(i) * doc.sample_rate as f64 / *hop as f64).round() as usize;
                    values[src.min(last)]
                })
                .collect()
        }
    };
    Ok(PhonemeLogits {
        values,
        vocab: doc.vocab.clone(),
        frame_spec: *spec,
    })
}

/// Index of the largest score per frame; ties go to the lowest index.
pub fn argmax_phonemes(p: &PhonemeLogits) -> Vec<usize> {
    p.values
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best })
                .0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(json: &str) -> Result<AlignmentDoc> {
        AlignmentDoc::from_json(json)
    }

    #[test]
    fn default_vocab_shape_and_categories() {
        let v = PhonemeVocab::default();
        assert_eq!(v.len(), 41);
        assert_eq!(v.sil_index(), 40);
        assert_eq!(v.category(v.index_of("HH").unwrap()), PhonemeCategory::Laryngeal);
        assert_eq!(v.category(v.index_of("K").unwrap()), PhonemeCategory::Dorsal);
        assert_eq!(v.category(v.index_of("P").unwrap()), PhonemeCategory::Labial);
        assert_eq!(v.category(v.index_of("DH").unwrap()), PhonemeCategory::Coronal);
        assert_eq!(v.category(40), PhonemeCategory::Silence);
        assert!((0..40).all(|i| v.category(i) != PhonemeCategory::Other));
    }

    #[test]
    fn vocab_validation() {
        let mut labels: Vec<String> = DEFAULT_VOCAB.iter().map(|s| s.to_string()).collect();
        labels[3] = "AA".into();
        assert!(PhonemeVocab::new(labels.clone()).is_err());
        labels.pop();
        assert!(PhonemeVocab::new(labels).is_err());
        let mut no_sil: Vec<String> = DEFAULT_VOCAB.iter().map(|s| s.to_string()).collect();
        no_sil[40] = "XX".into();
        assert!(PhonemeVocab::new(no_sil).is_err());
    }

    #[test]
    fn well_formed_intervals() {
        let d = doc(r#"{"sample_rate":16000,"intervals":[{"phoneme":"SIL","start_s":0,"end_s":0.1},{"phoneme":"AA","start_s":0.1,"end_s":0.2}]}"#).unwrap();
        assert!((d.duration_s() - 0.2).abs() < 1e-12);
        assert_eq!(d.sample_rate, 16000);
    }

    #[test]
    fn unknown_label_is_named() {
        let err = doc(r#"{"sample_rate":16000,"intervals":[{"phoneme":"ZZ","start_s":0,"end_s":0.1}]}"#).unwrap_err();
        match err {
            PaapError::Vocabulary(l) => assert_eq!(l, "ZZ"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overlap_names_intervals() {
        let err = doc(r#"{"sample_rate":16000,"intervals":[{"phoneme":"AA","start_s":0,"end_s":0.2},{"phoneme":"IY","start_s":0.1,"end_s":0.3}]}"#).unwrap_err();
        assert!(matches!(&err, PaapError::Format(m) if m.contains("0 and 1")), "{err}");
    }

    #[test]
    fn gaps_become_silence() {
        let d = doc(r#"{"sample_rate":16000,"intervals":[{"phoneme":"AA","start_s":0,"end_s":0.1},{"phoneme":"IY","start_s":0.15,"end_s":0.2}]}"#).unwrap();
        let AlignmentContent::Intervals(iv) = &d.content else { panic!() };
        assert_eq!(iv.len(), 3);
        assert_eq!(iv[1], Interval::new(SIL, 0.1, 0.15));
        let lead = doc(r#"{"sample_rate":16000,"intervals":[{"phoneme":"AA","start_s":0.05,"end_s":0.1}]}"#).unwrap();
        let AlignmentContent::Intervals(iv) = &lead.content else { panic!() };
        assert_eq!(iv[0], Interval::new(SIL, 0.0, 0.05));
    }

    #[test]
    fn schema_errors() {
        assert!(doc(r#"{"intervals":[]}"#).is_err());
        assert!(doc(r#"{"sample_rate":16000}"#).is_err());
        assert!(doc(r#"{"logits":[[1,2]],"hop":160}"#).is_err());
        assert!(doc(r#"{"logits":[]}"#).is_err());
        assert!(doc("not json").is_err());
    }

    #[test]
    fn frame_center_lookup() {
        let d = doc(r#"{"sample_rate":16000,"intervals":[{"phoneme":"SIL","start_s":0,"end_s":0.1},{"phoneme":"AA","start_s":0.1,"end_s":0.2}]}"#).unwrap();
        let p = to_frame_logits(&d, 21, &FrameSpec::default(), 16000).unwrap();
        let idx = argmax_phonemes(&p);
        let aa = d.vocab.index_of("AA").unwrap();
        assert!(idx[..10].iter().all(|&j| j == 40));
        assert!(idx[10..20].iter().all(|&j| j == aa));
        assert_eq!(idx[20], 40);
        assert!(p.values.iter().all(|r| r.iter().sum::<f64>() == 1.0));
        assert!(to_frame_logits(&d, 0, &FrameSpec::default(), 16000).is_err());
    }

    #[test]
    fn single_interval_is_constant() {
        let d = doc(r#"{"sample_rate":16000,"intervals":[{"phoneme":"IY","start_s":0,"end_s":5}]}"#).unwrap();
        let p = to_frame_logits(&d, 50, &FrameSpec::default(), 16000).unwrap();
        assert!(p.values.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn logits_are_resampled_by_nearest_center() {
        // source frames every 320 samples; target every 160
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|k| {
                let mut r = vec![0.0; 41];
                r[k] = 1.0;
                r
            })
            .collect();
        let d = AlignmentDoc::from_logits(rows, 320, PhonemeVocab::default(), 16000).unwrap();
        let p = to_frame_logits(&d, 10, &FrameSpec::default(), 16000).unwrap();
        // target frame i sits at source position i / 2, rounded half away from zero
        assert_eq!(argmax_phonemes(&p), vec![0, 1, 1, 2, 2, 3, 3, 3, 3, 3]);
    }

    #[test]
    fn argmax_ties_and_shift() {
        let vocab = PhonemeVocab::default();
        let p = PhonemeLogits {
            values: vec![[0.5; NUM_PHONEMES]],
            vocab,
            frame_spec: FrameSpec::default(),
        };
        assert_eq!(argmax_phonemes(&p), vec![0]);
    }

    #[test]
    fn json_round_trip() {
        let d = doc(r#"{"sample_rate":16000,"intervals":[{"phoneme":"AA","start_s":0,"end_s":0.1},{"phoneme":"IY","start_s":0.15,"end_s":0.2}]}"#).unwrap();
        assert_eq!(AlignmentDoc::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn parse_alignment_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        std::fs::write(&path, r#"{"sample_rate":16000,"intervals":[{"phoneme":"B","start_s":0,"end_s":0.3}]}"#).unwrap();
        let d = parse_alignment(&path, &PhonemeVocab::default()).unwrap();
        assert!((d.duration_s() - 0.3).abs() < 1e-12);
        assert!(matches!(parse_alignment(dir.path().join("missing.json"), &PhonemeVocab::default()), Err(PaapError::Io { .. })));
    }

    proptest! {
        #[test]
        fn argmax_is_shift_invariant(row in proptest::array::uniform32(-10.0f64..10.0), extra in proptest::collection::vec(-10.0f64..10.0, 9), c in -100.0f64..100.0) {
            let mut full = [0.0; NUM_PHONEMES];
            full[..32].copy_from_slice(&row);
            full[32..].copy_from_slice(&extra);
            let shifted = full.map(|v| v + c);
            let vocab = PhonemeVocab::default();
            let a = PhonemeLogits { values: vec![full], vocab: vocab.clone(), frame_spec: FrameSpec::default() };
            let b = PhonemeLogits { values: vec![shifted], vocab, frame_spec: FrameSpec::default() };
            prop_assert_eq!(argmax_phonemes(&a), argmax_phonemes(&b));
        }

        #[test]
        fn interval_labels_survive_frame_lookup(lens in proptest::collection::vec((1usize..30, 0usize..40), 1..12)) {
            // intervals on exact frame boundaries, 10 ms frames
            let vocab = PhonemeVocab::default();
            let mut t = 0usize;
            let mut intervals = Vec::new();
            let mut expected = Vec::new();
            for &(len, label) in &lens {
                intervals.push(Interval::new(vocab.label(label), t as f64 / 100.0, (t + len) as f64 / 100.0));
                expected.extend(std::iter::repeat_n(label, len));
                t += len;
            }
            let d = AlignmentDoc::from_intervals(intervals, vocab, 16000).unwrap();
            let p = to_frame_logits(&d, t + 3, &FrameSpec::default(), 16000).unwrap();
            let idx = argmax_phonemes(&p);
            prop_assert_eq!(&idx[..t], &expected[..]);
            prop_assert!(idx[t..].iter().all(|&j| j == 40));
        }
    }
}
