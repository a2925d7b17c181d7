//! Batch orchestration: run the full synthesis chain per sample, record the
//! results in an append-friendly manifest, and render previews.
//!
//! One sample flows through: read inputs, align the depth map to the image
//! grid, normalize, derive confidence (all ones when no flipped-depth input
//! is given), sample a disparity scale, build/sharpen/dilate the disparity,
//! forward warp, fill holes, write every output, append one manifest
//! record.
//!
//! Reproducibility: sample `i` of a run seeded `s` draws from an
//! independent ChaCha stream `(s, i)`, so results are identical whatever
//! the worker count, and re-runs are byte-identical.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::depth::{flip_consistency_confidence, normalize_inverse_depth};
use crate::disparity::{disparity_from_depth, sample_scale, StatsEntry};
use crate::error::{Error, Result};
use crate::inpaint::{composite_external, neighbor_fill, random_background_fill, BackendKind};
use crate::io::{read_image, read_mask, read_pfm, read_scalar, write_image, write_mask, write_pfm};
use crate::raster::{BinaryMask, ImagePlane, MapKind, ScalarMap};
use crate::warp::{dilate_disparity, forward_warp, sharpen_disparity};

/// One input sample of a batch list (one JSON object per line).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    /// Left image (PNG).
    pub left: PathBuf,
    /// Raw monocular inverse depth (PFM, or grayscale PNG).
    pub depth: PathBuf,
    /// Raw inverse depth predicted on the horizontally flipped image.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_flipped: Option<PathBuf>,
    /// Dataset tag for grouped statistics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    /// Pre-inpainted image for the external backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external: Option<PathBuf>,
}

/// Output files of one successful sample, relative to the output root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOutputs {
    pub right_image: PathBuf,
    pub disparity_pfm: PathBuf,
    pub confidence_pfm: PathBuf,
    pub m_noc_png: PathBuf,
    pub m_inp_png: PathBuf,
    pub warped_png: PathBuf,
}

impl RecordOutputs {
    fn for_stem(stem: &str) -> Self {
        Self {
            right_image: format!("{stem}.right.png").into(),
            disparity_pfm: format!("{stem}.disp.pfm").into(),
            confidence_pfm: format!("{stem}.conf.pfm").into(),
            m_noc_png: format!("{stem}.mnoc.png").into(),
            m_inp_png: format!("{stem}.minp.png").into(),
            warped_png: format!("{stem}.warped.png").into(),
        }
    }

    pub fn all_paths(&self) -> [&PathBuf; 6] {
        [
            &self.right_image,
            &self.disparity_pfm,
            &self.confidence_pfm,
            &self.m_noc_png,
            &self.m_inp_png,
            &self.warped_png,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    Failed,
}

/// One manifest line: the provenance of one generated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub left_image: PathBuf,
    pub depth: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_flipped: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    /// Disparity scale drawn for this sample; absent if the sample failed
    /// before sampling.
    pub sampled_s: Option<f64>,
    /// Global run seed; the per-sample stream is `(seed, sample_index)`.
    pub seed: u64,
    pub sample_index: u64,
    pub outputs: Option<RecordOutputs>,
    pub backend: String,
    pub tool_version: String,
    pub status: RecordStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

/// The RNG stream for sample `index` of a run seeded `seed`.
///
/// Each sample owns an independent ChaCha stream, so batch output does not
/// depend on worker scheduling, and any sample can be regenerated alone.
pub fn sample_stream(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Reads a raw depth input and aligns it to the image grid.
fn load_depth_for(path: &Path, width: usize, height: usize) -> Result<ScalarMap> {
    let raw = read_scalar(path, MapKind::InverseDepth)?;
    if raw.dims() != (width, height) {
        log::info!(
            "resampling depth {:?} from {}x{} to image grid {width}x{height}",
            path,
            raw.width(),
            raw.height()
        );
    }
    raw.resize_bilinear(width, height)
}

/// Runs the full synthesis chain for one sample and writes every output
/// under `out_dir` with the given file stem.
///
/// Deterministic: the sample's RNG stream is derived from
/// `(cfg.seed, sample_index)` alone.
pub fn generate(
    spec: &SampleSpec,
    cfg: &PipelineConfig,
    out_dir: &Path,
    stem: &str,
    sample_index: u64,
) -> Result<GenerationRecord> {
    cfg.validate()?;
    let left = stage("read left image", read_image(&spec.left))?;
    let (w, h) = left.dims();

    let depth = stage("read depth", load_depth_for(&spec.depth, w, h))?;
    let depth = stage("normalize depth", normalize_inverse_depth(&depth))?;

    let confidence = match &spec.depth_flipped {
        Some(path) => {
            let flipped = stage("read flipped depth", load_depth_for(path, w, h))?;
            let flipped = stage("normalize flipped depth", normalize_inverse_depth(&flipped))?;
            stage(
                "flip-consistency confidence",
                flip_consistency_confidence(&depth, &flipped),
            )?
        }
        None => {
            let mut ones = ScalarMap::new(w, h, MapKind::Confidence)?;
            ones.data_mut().fill(1.0);
            ones
        }
    };

    let mut rng = sample_stream(cfg.seed, sample_index);
    let s = stage("sample scale", sample_scale(&cfg.scale, &mut rng))?;

    let disparity = stage("build disparity", disparity_from_depth(&depth, s, w))?;
    let disparity = stage(
        "sharpen disparity",
        sharpen_disparity(&disparity, cfg.warp.sharpen_threshold),
    )?;
    let disparity = stage(
        "dilate disparity",
        dilate_disparity(&disparity, cfg.warp.dilate_kernel),
    )?;

    let fw = stage("forward warp", forward_warp(&left, &disparity))?;

    let right = match cfg.inpaint.backend {
        BackendKind::NeighborFill => stage("neighbor fill", neighbor_fill(&fw.warped, &fw.holes))?,
        BackendKind::RandomBackground => {
            let texture_path = cfg.inpaint.texture.as_ref().expect("validated");
            let texture = stage("read texture", read_image(texture_path))?;
            stage(
                "random background fill",
                random_background_fill(&fw.warped, &fw.holes, &texture, &mut rng),
            )?
        }
        BackendKind::External => {
            let path = spec.external.as_ref().ok_or(Error::InvalidConfig {
                detail: "external backend requires an external image per sample".into(),
            })?;
            let external = stage("read external image", read_image(path))?;
            stage(
                "composite external",
                composite_external(&fw.warped, &fw.holes, &external),
            )?
        }
    };

    let outputs = RecordOutputs::for_stem(stem);
    stage(
        "write outputs",
        write_outputs(out_dir, &outputs, &right, &disparity, &confidence, &fw),
    )?;

    Ok(GenerationRecord {
        left_image: spec.left.clone(),
        depth: spec.depth.clone(),
        depth_flipped: spec.depth_flipped.clone(),
        dataset: spec.dataset.clone(),
        sampled_s: Some(s),
        seed: cfg.seed,
        sample_index,
        outputs: Some(outputs),
        backend: cfg.inpaint.backend.name().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        status: RecordStatus::Ok,
        error: None,
    })
}

fn write_outputs(
    out_dir: &Path,
    outputs: &RecordOutputs,
    right: &ImagePlane,
    disparity: &ScalarMap,
    confidence: &ScalarMap,
    fw: &crate::warp::ForwardWarp,
) -> Result<()> {
    write_image(right, out_dir.join(&outputs.right_image))?;
    write_pfm(disparity, out_dir.join(&outputs.disparity_pfm))?;
    write_pfm(confidence, out_dir.join(&outputs.confidence_pfm))?;
    write_mask(&fw.non_occluded, out_dir.join(&outputs.m_noc_png))?;
    write_mask(&fw.holes, out_dir.join(&outputs.m_inp_png))?;
    write_image(&fw.warped, out_dir.join(&outputs.warped_png))?;
    Ok(())
}

fn failure_record(
    spec: &SampleSpec,
    cfg: &PipelineConfig,
    sample_index: u64,
    err: &Error,
) -> GenerationRecord {
    GenerationRecord {
        left_image: spec.left.clone(),
        depth: spec.depth.clone(),
        depth_flipped: spec.depth_flipped.clone(),
        dataset: spec.dataset.clone(),
        sampled_s: None,
        seed: cfg.seed,
        sample_index,
        outputs: None,
        backend: cfg.inpaint.backend.name().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        status: RecordStatus::Failed,
        error: Some(err.to_string()),
    }
}

/// Result of a batch run.
#[derive(Debug)]
pub struct BatchOutcome {
    pub records: Vec<GenerationRecord>,
    pub ok: usize,
    pub failed: usize,
    pub manifest_path: PathBuf,
}

fn sample_stem(index: usize, spec: &SampleSpec) -> String {
    let base = spec
        .left
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("sample");
    format!("{index:06}_{base}")
}

/// Runs every sample on a bounded worker pool and writes
/// `manifest.jsonl` under `out_dir`.
///
/// Per-sample failures are recorded and do not stop the batch. The manifest
/// (record order, content, and every output byte) is independent of
/// `workers`.
pub fn batch(
    specs: &[SampleSpec],
    cfg: &PipelineConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<BatchOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig {
            detail: format!("worker pool: {e}"),
        })?;

    let records: Vec<GenerationRecord> = pool.install(|| {
        use rayon::prelude::*;
        specs
            .par_iter()
            .enumerate()
            .map(|(i, spec)| {
                let stem = sample_stem(i, spec);
                match generate(spec, cfg, out_dir, &stem, i as u64) {
                    Ok(record) => record,
                    Err(e) => {
                        log::warn!("sample {i} ({:?}) failed: {e}", spec.left);
                        failure_record(spec, cfg, i as u64, &e)
                    }
                }
            })
            .collect()
    });

    let manifest_path = out_dir.join("manifest.jsonl");
    write_manifest(&records, &manifest_path)?;
    let ok = records
        .iter()
        .filter(|r| r.status == RecordStatus::Ok)
        .count();
    Ok(BatchOutcome {
        failed: records.len() - ok,
        ok,
        records,
        manifest_path,
    })
}

/// Serializes records as one JSON object per line.
pub fn write_manifest(records: &[GenerationRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(|e| Error::ManifestParse {
            path: path.to_path_buf(),
            line: 0,
            detail: e.to_string(),
        })?;
        out.push(b'\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Reads a JSONL manifest, reporting the first offending line on error.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<GenerationRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::ManifestParse {
            path: path.to_path_buf(),
            line: i + 1,
            detail: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Reads a JSONL sample list for [`batch`].
pub fn read_sample_list(path: impl AsRef<Path>) -> Result<Vec<SampleSpec>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut specs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let spec = serde_json::from_str(&line).map_err(|e| Error::ManifestParse {
            path: path.to_path_buf(),
            line: i + 1,
            detail: e.to_string(),
        })?;
        specs.push(spec);
    }
    Ok(specs)
}

/// Stats entries for the successful records of a manifest, with disparity
/// paths resolved against the manifest's directory. Untagged records group
/// under `"all"`.
pub fn stats_entries(records: &[GenerationRecord], manifest_dir: &Path) -> Vec<StatsEntry> {
    records
        .iter()
        .filter(|r| r.status == RecordStatus::Ok)
        .filter_map(|r| {
            r.outputs.as_ref().map(|o| StatsEntry {
                dataset: r.dataset.clone().unwrap_or_else(|| "all".to_string()),
                disparity_pfm: manifest_dir.join(&o.disparity_pfm),
            })
        })
        .collect()
}

/// Checks the manifest-completeness invariant: every file under `out_dir`
/// (except the manifest itself) is referenced by exactly one record.
pub fn verify_manifest_complete(records: &[GenerationRecord], out_dir: &Path) -> Result<()> {
    let mut referenced: BTreeSet<PathBuf> = BTreeSet::new();
    for record in records {
        if let Some(outputs) = &record.outputs {
            for p in outputs.all_paths() {
                if !referenced.insert(out_dir.join(p)) {
                    return Err(Error::InvalidConfig {
                        detail: format!("output {p:?} referenced by more than one record"),
                    });
                }
            }
        }
    }
    let mut stack = vec![out_dir.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().and_then(|n| n.to_str()) != Some("manifest.jsonl")
                && !referenced.remove(&path)
            {
                return Err(Error::InvalidConfig {
                    detail: format!("file {path:?} not referenced by any record"),
                });
            }
        }
    }
    if let Some(missing) = referenced.iter().next() {
        return Err(Error::MissingOutput {
            path: missing.clone(),
        });
    }
    Ok(())
}

// --- preview rendering ---

/// Jet-style colormap on `[0, 1]`: dark blue at the low end through green
/// to dark red at the high end.
fn colormap(t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0);
    [
        (1.5 - (4.0 * t - 3.0).abs()).clamp(0.0, 1.0),
        (1.5 - (4.0 * t - 2.0).abs()).clamp(0.0, 1.0),
        (1.5 - (4.0 * t - 1.0).abs()).clamp(0.0, 1.0),
    ]
}

fn colorize(map: &ScalarMap) -> ImagePlane {
    let (w, h) = map.dims();
    let (_, hi) = map.min_max();
    let mut out = ImagePlane::new(w, h).expect("same dims");
    for y in 0..h {
        for x in 0..w {
            let t = if hi > 0.0 { map.get(x, y) / hi } else { 0.0 };
            out.set_pixel(x, y, colormap(t));
        }
    }
    out
}

fn grayscale(map: &ScalarMap) -> ImagePlane {
    let (w, h) = map.dims();
    let mut out = ImagePlane::new(w, h).expect("same dims");
    for y in 0..h {
        for x in 0..w {
            let v = map.get(x, y).clamp(0.0, 1.0);
            out.set_pixel(x, y, [v, v, v]);
        }
    }
    out
}

fn mask_panel(mask: &BinaryMask) -> ImagePlane {
    let (w, h) = mask.dims();
    let mut out = ImagePlane::new(w, h).expect("same dims");
    for y in 0..h {
        for x in 0..w {
            let v = mask.get(x, y) as f64;
            out.set_pixel(x, y, [v, v, v]);
        }
    }
    out
}

/// Mid-gray cell with a dark cross, marking an absent panel.
fn absent_panel(w: usize, h: usize) -> ImagePlane {
    let mut out = ImagePlane::from_vec(w, h, vec![0.5; w * h * 3]).expect("dims");
    for y in 0..h {
        let x1 = y * w.max(1) / h.max(1);
        for x in [x1.min(w - 1), (w - 1 - x1.min(w - 1))] {
            out.set_pixel(x, y, [0.1, 0.1, 0.1]);
        }
    }
    out
}

/// Renders a 3x3 collage of one record's inputs and outputs:
///
/// ```text
/// left      | warped      | right
/// disparity | confidence  | non-occlusion mask
/// hole mask | (empty)     | (empty)
/// ```
///
/// The disparity panel is colormapped with zero at the low end and the map
/// maximum at the high end. A missing confidence file renders as an
/// "absent" placeholder; any other missing output is an error. Paths
/// resolve against `base_dir` (the manifest's directory).
pub fn preview(record: &GenerationRecord, base_dir: &Path) -> Result<ImagePlane> {
    let outputs = record.outputs.as_ref().ok_or(Error::InvalidConfig {
        detail: "cannot preview a failed record".into(),
    })?;
    let resolve = |p: &PathBuf| base_dir.join(p);
    let require = |p: &PathBuf| -> Result<PathBuf> {
        let full = resolve(p);
        if full.exists() {
            Ok(full)
        } else {
            Err(Error::MissingOutput { path: full })
        }
    };

    let left = read_image(&record.left_image).or_else(|_| read_image(resolve(&record.left_image)))?;
    let warped = read_image(require(&outputs.warped_png)?)?;
    let right = read_image(require(&outputs.right_image)?)?;
    let disparity = read_pfm(require(&outputs.disparity_pfm)?, MapKind::Disparity)?;
    let non_occluded = read_mask(require(&outputs.m_noc_png)?)?;
    let holes = read_mask(require(&outputs.m_inp_png)?)?;
    let (w, h) = left.dims();
    let confidence_panel = match read_pfm(resolve(&outputs.confidence_pfm), MapKind::Confidence) {
        Ok(c) => grayscale(&c),
        Err(_) => absent_panel(w, h),
    };

    let empty = absent_panel(w, h);
    let panels: [[&ImagePlane; 3]; 3] = [
        [&left, &warped, &right],
        [&colorize(&disparity), &confidence_panel, &mask_panel(&non_occluded)],
        [&mask_panel(&holes), &empty, &empty],
    ];

    let mut collage = ImagePlane::new(3 * w, 3 * h)?;
    for (row, row_panels) in panels.iter().enumerate() {
        for (col, panel) in row_panels.iter().enumerate() {
            for y in 0..h.min(panel.height()) {
                for x in 0..w.min(panel.width()) {
                    collage.set_pixel(col * w + x, row * h + y, panel.pixel(x, y));
                }
            }
        }
    }
    Ok(collage)
}
