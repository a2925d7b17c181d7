//! `stereoforge` - synthesize pseudo stereo pairs and supervision from
//! single images plus monocular inverse depth, evaluate the loss stack, and
//! score disparity maps.
//!
//! Exit codes: 0 success, 1 fatal error, 2 batch finished with some failed
//! samples.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use stereoforge::config::PipelineConfig;
use stereoforge::depth::{flip_consistency_confidence, normalize_inverse_depth};
use stereoforge::disparity::{disparity_from_depth, sample_scale};
use stereoforge::inpaint::{composite_external, BackendKind};
use stereoforge::io::{
    read_image, read_mask, read_pfm, read_scalar, write_image, write_mask, write_pfm,
};
use stereoforge::metrics::{disparity_cap_mask, evaluate_pair};
use stereoforge::pipeline::{
    batch, generate, preview, read_manifest, read_sample_list, sample_stream, stats_entries,
    SampleSpec,
};
use stereoforge::warp::{dilate_disparity, forward_warp, sharpen_disparity};
use stereoforge::{BinaryMask, MapKind};

#[derive(Parser)]
#[command(name = "stereoforge", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file; omitted sections take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global RNG seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn load_config(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn ensure_out(&self) -> anyhow::Result<()> {
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("creating output directory {:?}", self.out))
    }
}

/// Per-field overrides of the generation config, mirroring the TOML file.
#[derive(Args, Clone)]
struct GenOverrides {
    /// Flying-pixel gradient threshold in px/px (overrides config).
    #[arg(long)]
    sharpen_threshold: Option<f64>,
    /// Odd dilation kernel edge; 1 disables dilation (overrides config).
    #[arg(long)]
    dilate_kernel: Option<usize>,
    /// Hole-filling backend: neighbor_fill | random_background | external.
    #[arg(long, value_parser = parse_backend)]
    backend: Option<BackendKind>,
    /// Texture image for the random-background backend.
    #[arg(long)]
    texture: Option<PathBuf>,
}

impl GenOverrides {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(v) = self.sharpen_threshold {
            cfg.warp.sharpen_threshold = v;
        }
        if let Some(v) = self.dilate_kernel {
            cfg.warp.dilate_kernel = v;
        }
        if let Some(v) = self.backend {
            cfg.inpaint.backend = v;
        }
        if let Some(v) = &self.texture {
            cfg.inpaint.texture = Some(v.clone());
        }
    }
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    match s {
        "neighbor_fill" | "neighbor" => Ok(BackendKind::NeighborFill),
        "random_background" | "random" => Ok(BackendKind::RandomBackground),
        "external" => Ok(BackendKind::External),
        other => Err(format!(
            "unknown backend {other:?}; use neighbor_fill, random_background, or external"
        )),
    }
}

/// Per-field overrides of the loss config.
#[derive(Args, Clone)]
struct LossOverrides {
    /// SSIM share of the photometric loss (overrides config).
    #[arg(long)]
    beta: Option<f64>,
    /// Weight of the low-confidence photometric branch (overrides config).
    #[arg(long)]
    mu: Option<f64>,
    /// Odd SSIM window edge length (overrides config).
    #[arg(long)]
    ssim_window: Option<usize>,
    /// Average the combined map over mask-kept pixels only.
    #[arg(long)]
    mean_over_kept: bool,
}

impl LossOverrides {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(v) = self.beta {
            cfg.loss.beta = v;
        }
        if let Some(v) = self.mu {
            cfg.loss.mu = v;
        }
        if let Some(v) = self.ssim_window {
            cfg.loss.ssim_window = v;
        }
        if self.mean_over_kept {
            cfg.loss.mean_over_kept = true;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one stereo sample: right image, disparity, confidence,
    /// and masks.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Left image (PNG).
        #[arg(long)]
        left: PathBuf,
        /// Raw inverse-depth map (PFM or grayscale PNG).
        #[arg(long)]
        depth: PathBuf,
        /// Inverse depth predicted on the horizontally flipped image;
        /// omitting it yields all-ones confidence.
        #[arg(long)]
        depth_flipped: Option<PathBuf>,
        /// Dataset tag recorded for grouped statistics.
        #[arg(long)]
        dataset: Option<String>,
        /// Externally inpainted image (external backend).
        #[arg(long)]
        external: Option<PathBuf>,
        /// Output file stem; defaults to the left image's stem.
        #[arg(long)]
        stem: Option<String>,
        /// Per-sample RNG stream index.
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[command(flatten)]
        overrides: GenOverrides,
    },
    /// Run a JSONL sample list on a worker pool, writing a manifest.
    Batch {
        #[command(flatten)]
        common: Common,
        /// Sample list: one JSON object per line with "left", "depth", and
        /// optional "depth_flipped", "dataset", "external".
        #[arg(long)]
        list: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        overrides: GenOverrides,
    },
    /// Compute a flip-consistency confidence map from two raw depth maps.
    Confidence {
        #[command(flatten)]
        common: Common,
        /// Raw inverse depth of the image.
        #[arg(long)]
        depth: PathBuf,
        /// Raw inverse depth of the horizontally flipped image.
        #[arg(long)]
        depth_flipped: PathBuf,
        /// Output PFM path; defaults to `<out>/confidence.pfm`.
        #[arg(long)]
        out_file: Option<PathBuf>,
    },
    /// Report mean and max disparity per dataset over a manifest.
    Stats {
        #[command(flatten)]
        common: Common,
        /// Manifest written by `batch`.
        #[arg(long)]
        manifest: PathBuf,
        /// Emit JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Export the warped image and hole mask for an external inpainter
    /// (`<stem>.warped.png`, `<stem>.minp.png`).
    InpaintExport {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        depth: PathBuf,
        /// Output file stem; defaults to the left image's stem.
        #[arg(long)]
        stem: Option<String>,
        /// Per-sample RNG stream index (match the later generate call).
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[command(flatten)]
        overrides: GenOverrides,
    },
    /// Composite an externally inpainted image over the exported warped
    /// image, writing `<stem>.inpainted.png`.
    InpaintApply {
        #[command(flatten)]
        common: Common,
        /// File stem used at export time (files live in `--out`).
        #[arg(long)]
        stem: String,
        /// The inpainter's output image.
        #[arg(long)]
        external: PathBuf,
        /// Output path; defaults to `<out>/<stem>.inpainted.png`.
        #[arg(long)]
        out_file: Option<PathBuf>,
    },
    /// Evaluate the loss stack on one instance and print a JSON summary.
    Loss {
        #[command(flatten)]
        common: Common,
        /// Estimated disparity (PFM).
        #[arg(long)]
        pred: PathBuf,
        /// Pseudo-label disparity (PFM).
        #[arg(long)]
        disp: PathBuf,
        /// Confidence map (PFM); defaults to all ones.
        #[arg(long)]
        conf: Option<PathBuf>,
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Non-occlusion mask (PNG).
        #[arg(long)]
        mnoc: PathBuf,
        /// Hole/inpainting mask (PNG).
        #[arg(long)]
        minp: PathBuf,
        /// Also write every per-term map as PFM into `--out`.
        #[arg(long)]
        dump_maps: bool,
        #[command(flatten)]
        overrides: LossOverrides,
    },
    /// Score disparity maps: EPE and bad-tau percentages.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Pairs `pred.pfm:gt.pfm[:valid.png]`.
        #[arg(required = true)]
        pairs: Vec<String>,
        /// Bad-pixel thresholds in pixels.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0, 3.0])]
        tau: Vec<f64>,
        /// Only score pixels with ground truth strictly below this cap.
        #[arg(long)]
        cap: Option<f64>,
    },
    /// Render a 3x3 collage of one manifest record.
    Preview {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        /// Record index within the manifest.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Output PNG; defaults to `<out>/preview_<index>.png`.
        #[arg(long)]
        out_file: Option<PathBuf>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Generate {
            common,
            left,
            depth,
            depth_flipped,
            dataset,
            external,
            stem,
            index,
            overrides,
        } => {
            let mut cfg = common.load_config()?;
            overrides.apply(&mut cfg);
            common.ensure_out()?;
            let stem = stem.unwrap_or_else(|| file_stem(&left));
            let spec = SampleSpec {
                left,
                depth,
                depth_flipped,
                dataset,
                external,
            };
            let record = generate(&spec, &cfg, &common.out, &stem, index)?;
            println!("{}", serde_json::to_string(&record)?);
            Ok(0)
        }

        Command::Batch {
            common,
            list,
            workers,
            overrides,
        } => {
            let mut cfg = common.load_config()?;
            overrides.apply(&mut cfg);
            let specs = read_sample_list(&list)?;
            let outcome = batch(&specs, &cfg, &common.out, workers)?;
            println!(
                "{}",
                json!({
                    "manifest": outcome.manifest_path,
                    "ok": outcome.ok,
                    "failed": outcome.failed,
                })
            );
            Ok(if outcome.failed > 0 { 2 } else { 0 })
        }

        Command::Confidence {
            common,
            depth,
            depth_flipped,
            out_file,
        } => {
            common.ensure_out()?;
            let d = normalize_inverse_depth(&read_scalar(&depth, MapKind::InverseDepth)?)?;
            let df = normalize_inverse_depth(&read_scalar(&depth_flipped, MapKind::InverseDepth)?)?;
            let confidence = flip_consistency_confidence(&d, &df)?;
            let out = out_file.unwrap_or_else(|| common.out.join("confidence.pfm"));
            write_pfm(&confidence, &out)?;
            println!("{}", json!({ "confidence": out }));
            Ok(0)
        }

        Command::Stats {
            common: _,
            manifest,
            json: as_json,
        } => {
            let records = read_manifest(&manifest)?;
            let dir = manifest.parent().unwrap_or(Path::new("."));
            let entries = stats_entries(&records, dir);
            let stats = stereoforge::disparity::disparity_stats(&entries)?;
            if as_json {
                println!("{}", serde_json::to_string(&stats)?);
            } else {
                println!("{:<16} {:>6} {:>12} {:>10} {:>10}", "dataset", "maps", "pixels", "mean", "max");
                for g in &stats {
                    println!(
                        "{:<16} {:>6} {:>12} {:>10.3} {:>10.3}",
                        g.dataset, g.maps, g.pixels, g.mean, g.max
                    );
                }
            }
            Ok(0)
        }

        Command::InpaintExport {
            common,
            left,
            depth,
            stem,
            index,
            overrides,
        } => {
            let mut cfg = common.load_config()?;
            overrides.apply(&mut cfg);
            common.ensure_out()?;
            let stem = stem.unwrap_or_else(|| file_stem(&left));
            let image = read_image(&left)?;
            let (w, h) = image.dims();
            let raw = read_scalar(&depth, MapKind::InverseDepth)?.resize_bilinear(w, h)?;
            let normalized = normalize_inverse_depth(&raw)?;
            let mut rng = sample_stream(cfg.seed, index);
            let s = sample_scale(&cfg.scale, &mut rng)?;
            let d = disparity_from_depth(&normalized, s, w)?;
            let d = sharpen_disparity(&d, cfg.warp.sharpen_threshold)?;
            let d = dilate_disparity(&d, cfg.warp.dilate_kernel)?;
            let fw = forward_warp(&image, &d)?;
            let warped_path = common.out.join(format!("{stem}.warped.png"));
            let mask_path = common.out.join(format!("{stem}.minp.png"));
            write_image(&fw.warped, &warped_path)?;
            write_mask(&fw.holes, &mask_path)?;
            println!(
                "{}",
                json!({
                    "warped": warped_path,
                    "mask": mask_path,
                    "sampled_s": s,
                    "seed": cfg.seed,
                    "index": index,
                })
            );
            Ok(0)
        }

        Command::InpaintApply {
            common,
            stem,
            external,
            out_file,
        } => {
            let warped = read_image(common.out.join(format!("{stem}.warped.png")))?;
            let holes = read_mask(common.out.join(format!("{stem}.minp.png")))?;
            let ext = read_image(&external)?;
            let composited = composite_external(&warped, &holes, &ext)?;
            let out = out_file.unwrap_or_else(|| common.out.join(format!("{stem}.inpainted.png")));
            write_image(&composited, &out)?;
            println!("{}", json!({ "inpainted": out }));
            Ok(0)
        }

        Command::Loss {
            common,
            pred,
            disp,
            conf,
            left,
            right,
            mnoc,
            minp,
            dump_maps,
            overrides,
        } => {
            let mut cfg = common.load_config()?;
            overrides.apply(&mut cfg);
            let d_hat = read_pfm(&pred, MapKind::Disparity)?;
            let d = read_pfm(&disp, MapKind::Disparity)?;
            let left_img = read_image(&left)?;
            let right_img = read_image(&right)?;
            let non_occluded = read_mask(&mnoc)?;
            let holes = read_mask(&minp)?;
            let confidence = match conf {
                Some(path) => read_pfm(&path, MapKind::Confidence)?,
                None => {
                    let (w, h) = d_hat.dims();
                    BinaryMask::ones(w, h)?.to_scalar(MapKind::Confidence)
                }
            };
            let report = stereoforge::loss::evaluate(
                &d_hat,
                &d,
                &confidence,
                &left_img,
                &right_img,
                &non_occluded,
                &holes,
                &cfg.loss,
            )?;
            if dump_maps {
                common.ensure_out()?;
                write_pfm(&report.disparity_l1, common.out.join("loss_disparity_l1.pfm"))?;
                write_pfm(&report.photometric, common.out.join("loss_photometric.pfm"))?;
                write_pfm(
                    &report.masked_photometric,
                    common.out.join("loss_masked_photometric.pfm"),
                )?;
                write_pfm(&report.combined, common.out.join("loss_combined.pfm"))?;
            }
            println!("{}", serde_json::to_string(&report.summary())?);
            Ok(0)
        }

        Command::Eval {
            common: _,
            pairs,
            tau,
            cap,
        } => {
            let mut total_pixels = 0usize;
            let mut epe_weighted = 0.0;
            let mut bad_weighted = vec![0.0; tau.len()];
            for pair in &pairs {
                let (pred_path, gt_path, mask_path) = parse_pair(pair)?;
                let pred = read_pfm(&pred_path, MapKind::Disparity)?;
                let gt = read_pfm(&gt_path, MapKind::Disparity)?;
                let mut valid = match &mask_path {
                    Some(p) => read_mask(p)?,
                    None => BinaryMask::ones(gt.width(), gt.height())?,
                };
                if let Some(cap) = cap {
                    valid = valid.and(&disparity_cap_mask(&gt, cap))?;
                }
                let m = evaluate_pair(&pred, &gt, &valid, &tau)?;
                println!(
                    "{}",
                    json!({
                        "pred": pred_path,
                        "gt": gt_path,
                        "epe": m.epe,
                        "bad": m.bad,
                        "valid_pixels": m.valid_pixels,
                    })
                );
                total_pixels += m.valid_pixels;
                epe_weighted += m.epe * m.valid_pixels as f64;
                for (acc, (_, pct)) in bad_weighted.iter_mut().zip(&m.bad) {
                    *acc += pct * m.valid_pixels as f64;
                }
            }
            let aggregate_bad: Vec<(f64, f64)> = tau
                .iter()
                .zip(&bad_weighted)
                .map(|(&t, &w)| (t, w / total_pixels as f64))
                .collect();
            println!(
                "{}",
                json!({
                    "aggregate": true,
                    "pairs": pairs.len(),
                    "valid_pixels": total_pixels,
                    "epe": epe_weighted / total_pixels as f64,
                    "bad": aggregate_bad,
                })
            );
            Ok(0)
        }

        Command::Preview {
            common,
            manifest,
            index,
            out_file,
        } => {
            common.ensure_out()?;
            let records = read_manifest(&manifest)?;
            let record = records.get(index).with_context(|| {
                format!("manifest has {} records, no index {index}", records.len())
            })?;
            let dir = manifest.parent().unwrap_or(Path::new("."));
            let collage = preview(record, dir)?;
            let out = out_file.unwrap_or_else(|| common.out.join(format!("preview_{index}.png")));
            write_image(&collage, &out)?;
            println!("{}", json!({ "preview": out }));
            Ok(0)
        }
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("sample")
        .to_string()
}

fn parse_pair(pair: &str) -> anyhow::Result<(PathBuf, PathBuf, Option<PathBuf>)> {
    let parts: Vec<&str> = pair.split(':').collect();
    match parts.as_slice() {
        [pred, gt] => Ok((pred.into(), gt.into(), None)),
        [pred, gt, mask] => Ok((pred.into(), gt.into(), Some(mask.into()))),
        _ => bail!("pair {pair:?} must be pred.pfm:gt.pfm[:valid.png]"),
    }
}
