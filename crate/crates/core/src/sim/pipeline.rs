//! Closed-loop coding simulation over a GOP plan.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frame::{FlowField2D, Frame, FrameVolume, VoxelFlowStack};
use crate::gop::{validate_plan, GopEntry, GopPlan};
use crate::sim::block_match::{estimate_flow_block_matching, DEFAULT_BLOCK, DEFAULT_RADIUS};
use crate::sim::diagnostics::{diagnostics, DiagnosticMaps};
use crate::sim::fit::{fit_voxel_flows_with_depth, FitParams};
use crate::sim::metrics::{ms_ssim, mse, psnr, PSNR_CAP_DB};
use crate::sim::rate::{
    flow_rate_proxy, rd_report, residual_entropy_proxy, DistortionMetric, FrameReport, RdConfig,
    RdSummary,
};
use crate::splat::ImportanceConfig;
use crate::tensor_io::{read_frame_ppm, read_tensor, write_frame_ppm, Tensor};
use crate::trajectory::{predict_backward_flow, ReferenceFlowSet};
use crate::warp::{backward_warp_bilinear, weighted_voxel_warp, WarpConfig};

/// Where inter-reference flows `f(a -> b)` come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowSource {
    /// Block matching between reconstructed references.
    BlockMatch { block: usize, radius: usize },
    /// Precomputed `flow_{a}_{b}.vten` files (2 x H x W) in a directory.
    Files(PathBuf),
}

impl Default for FlowSource {
    fn default() -> Self {
        FlowSource::BlockMatch {
            block: DEFAULT_BLOCK,
            radius: DEFAULT_RADIUS,
        }
    }
}

pub fn frame_file_name(display: usize) -> String {
    format!("{display:04}.ppm")
}

pub fn flow_file_name(from: usize, to: usize) -> String {
    format!("flow_{from}_{to}.vten")
}

impl FlowSource {
    fn flow(&self, from: usize, to: usize, recon: &BTreeMap<usize, Frame>) -> Result<FlowField2D> {
        match self {
            FlowSource::BlockMatch { block, radius } => {
                let a = recon.get(&from).ok_or(Error::MissingFrame(from))?;
                let b = recon.get(&to).ok_or(Error::MissingFrame(to))?;
                estimate_flow_block_matching(a, b, *block, *radius)
            }
            FlowSource::Files(dir) => read_tensor(dir.join(flow_file_name(from, to)))?.to_flow(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub rd: RdConfig,
    pub fit: FitParams,
    pub flow_source: FlowSource,
    /// Use flow prediction when a frame has more than one reference.
    pub gfp: bool,
    /// Also try block matching the target as a fit initialization.
    pub motion_search: bool,
    /// Upper bound on the polynomial order; the effective order is
    /// `min(n_refs - 1, max_order)`.
    pub max_order: usize,
    pub importance: ImportanceConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            rd: RdConfig::default(),
            fit: FitParams::default(),
            flow_source: FlowSource::default(),
            gfp: true,
            motion_search: true,
            max_order: 2,
            importance: ImportanceConfig::default(),
        }
    }
}

/// Everything produced for one coded frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedFrame {
    pub report: FrameReport,
    pub reconstruction: Frame,
    /// Motion-compensated prediction (the intra frame itself for intra frames).
    pub prediction: Frame,
    pub flows: Option<VoxelFlowStack>,
    pub diagnostics: Option<DiagnosticMaps>,
    /// Predicted backward flow toward the nearest reference and its holes.
    pub predicted_flow: Option<(FlowField2D, Vec<bool>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    /// In coding order.
    pub frames: Vec<CodedFrame>,
    /// Aggregate over inter frames (over all frames if there are none).
    pub summary: RdSummary,
    pub lambda: f64,
}

impl SimOutput {
    pub fn reports(&self) -> Vec<&FrameReport> {
        self.frames.iter().map(|f| &f.report).collect()
    }

    pub fn inter_reports(&self) -> Vec<FrameReport> {
        self.frames
            .iter()
            .filter(|f| !f.report.is_intra)
            .map(|f| f.report.clone())
            .collect()
    }

    /// Line-oriented `key=value` report, one `frame` line per coded frame
    /// followed by one `summary` line.
    pub fn report_text(&self) -> String {
        let mut s = String::new();
        for f in &self.frames {
            let r = &f.report;
            let gfp = r
                .gfp_psnr
                .iter()
                .map(|v| format!("{v:.6}"))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(
                s,
                "frame display={} order={} intra={} prediction_psnr={:.6} residual_bpp={:.6} \
                 flow_bpp={:.6} rate={:.6} distortion={:.9} rd_cost={:.6} hole_fraction={:.6} gfp_psnr={}",
                r.display_index,
                r.coding_order,
                u8::from(r.is_intra),
                r.prediction_psnr,
                r.residual_entropy_bits_per_pixel,
                r.flow_bits_per_pixel,
                r.rate_proxy,
                r.distortion,
                r.rd_cost,
                r.hole_fraction,
                gfp
            )
            .unwrap();
        }
        let sm = &self.summary;
        writeln!(
            s,
            "summary frames={} lambda={} mean_rate={:.6} mean_distortion={:.9} mean_cost={:.6}",
            sm.frames, self.lambda, sm.mean_rate, sm.mean_distortion, sm.mean_cost
        )
        .unwrap();
        s
    }

    /// Writes `report.txt`, `recon_NNNN.ppm` and, for inter frames,
    /// `flows_NNNN.vten`, `diag_NNNN.vten`, and when flow prediction ran
    /// `gfp_flow_NNNN.vten` / `holes_NNNN.vten`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let report = dir.join("report.txt");
        fs::write(&report, self.report_text()).map_err(|e| Error::io(&report, e))?;
        for f in &self.frames {
            let d = f.report.display_index;
            write_frame_ppm(&f.reconstruction, dir.join(format!("recon_{d:04}.ppm")))?;
            if let Some(flows) = &f.flows {
                Tensor::from_voxel_flows(flows).write(dir.join(format!("flows_{d:04}.vten")))?;
            }
            if let Some(diag) = &f.diagnostics {
                diag.to_tensor()
                    .write(dir.join(format!("diag_{d:04}.vten")))?;
            }
            if let Some((flow, holes)) = &f.predicted_flow {
                Tensor::from_flow(flow).write(dir.join(format!("gfp_flow_{d:04}.vten")))?;
                Tensor::from_mask(holes, flow.height(), flow.width())
                    .write(dir.join(format!("holes_{d:04}.vten")))?;
            }
        }
        Ok(())
    }
}

/// Loads `NNNN.ppm` for every display index `0..len`.
pub fn load_frames(dir: &Path, len: usize) -> Result<Vec<Frame>> {
    (0..len)
        .map(|d| {
            let path = dir.join(frame_file_name(d));
            if !path.exists() {
                return Err(Error::MissingFrame(d));
            }
            read_frame_ppm(path)
        })
        .collect()
}

fn nearest(t: usize, candidates: &[usize]) -> usize {
    *candidates
        .iter()
        .min_by_key(|&&c| ((c as i64 - t as i64).abs(), c))
        .expect("nonempty candidates")
}

/// Runs flow prediction with origin `origin`, using the other prediction
/// references as trajectory samples.
fn predict_from_origin(
    entry: &GopEntry,
    origin: usize,
    recon: &BTreeMap<usize, Frame>,
    cfg: &SimConfig,
) -> Result<(FlowField2D, Vec<bool>)> {
    let others: Vec<usize> = entry
        .pred_refs
        .iter()
        .copied()
        .filter(|&r| r != origin)
        .collect();
    let k = others.len().min(cfg.max_order);
    let candidates = others
        .iter()
        .map(|&r| Ok((r as i64, cfg.flow_source.flow(origin, r, recon)?)))
        .collect::<Result<Vec<_>>>()?;
    let refs = ReferenceFlowSet::new(origin as i64, candidates)?;
    let frames: Vec<(i64, &Frame)> = entry
        .pred_refs
        .iter()
        .map(|&r| (r as i64, &recon[&r]))
        .collect();
    let pred = predict_backward_flow(&refs, &frames, entry.display as f64, k, &cfg.importance)?;
    Ok((pred.reversal.flow, pred.reversal.holes))
}

/// Block-wise mode decision: each `block x block` tile takes the candidate
/// whose single-frame bilinear warp has the lowest squared error there.
/// Ties keep the earlier candidate.
fn pick_per_block(
    volume: &FrameVolume,
    target: &Frame,
    candidates: &[(usize, FlowField2D)],
    block: usize,
) -> Result<(FlowField2D, Vec<f64>)> {
    let (h, w, c) = (target.height(), target.width(), target.channels());
    let warped = candidates
        .iter()
        .map(|(d, f)| backward_warp_bilinear(volume.frame(*d), f))
        .collect::<Result<Vec<_>>>()?;
    let mut flow = FlowField2D::zeros(h, w);
    let mut depth = vec![0.0; h * w];
    for by in (0..h).step_by(block) {
        for bx in (0..w).step_by(block) {
            let (ys, xs) = (by..(by + block).min(h), bx..(bx + block).min(w));
            let sse = |k: usize| {
                let mut e = 0.0;
                for ch in 0..c {
                    for y in ys.clone() {
                        for x in xs.clone() {
                            let r = warped[k].get(ch, y, x) - target.get(ch, y, x);
                            e += r * r;
                        }
                    }
                }
                e
            };
            let mut best = 0;
            let mut best_err = sse(0);
            for k in 1..candidates.len() {
                let e = sse(k);
                if e < best_err {
                    best = k;
                    best_err = e;
                }
            }
            let (d, f) = &candidates[best];
            for y in ys.clone() {
                for x in xs.clone() {
                    let p = y * w + x;
                    flow.dx[p] = f.dx[p];
                    flow.dy[p] = f.dy[p];
                    depth[p] = *d as f64;
                }
            }
        }
    }
    Ok((flow, depth))
}

fn code_inter(
    entry: &GopEntry,
    target: &Frame,
    recon: &BTreeMap<usize, Frame>,
    cfg: &SimConfig,
) -> Result<CodedFrame> {
    let t = entry.display;
    let warp_frames: Vec<Frame> = entry.warp_refs.iter().map(|r| recon[r].clone()).collect();
    let volume = FrameVolume::new(
        warp_frames,
        entry.warp_refs.iter().map(|&r| r as i64).collect(),
    )?;
    let primary = nearest(t, &entry.warp_refs);
    let anchor_depth = volume.nearest_depth(t as i64);

    let use_gfp = cfg.gfp && entry.pred_refs.len() > 1 && cfg.max_order > 0;
    let mut gfp_psnr = Vec::new();
    let mut predicted_flow = None;
    if use_gfp {
        for &origin in &entry.warp_refs {
            let (flow, holes) = predict_from_origin(entry, origin, recon, cfg)?;
            let predicted = backward_warp_bilinear(&recon[&origin], &flow)?;
            gfp_psnr.push(psnr(target, &predicted)?);
            if origin == primary {
                predicted_flow = Some((flow, holes));
            }
        }
    }
    // starting flows paired with the depth of the frame they point into
    let mut candidates: Vec<(usize, FlowField2D)> = predicted_flow
        .iter()
        .map(|(f, _)| (anchor_depth, f.clone()))
        .collect();
    if cfg.motion_search {
        for (d, frame) in volume.frames().iter().enumerate() {
            candidates.push((
                d,
                estimate_flow_block_matching(target, frame, DEFAULT_BLOCK, DEFAULT_RADIUS)?,
            ));
        }
    }
    let (init, depth) = match candidates.len() {
        0 => (None, vec![anchor_depth as f64; target.pixels()]),
        _ => {
            let (f, d) = pick_per_block(&volume, target, &candidates, DEFAULT_BLOCK)?;
            (Some(f), d)
        }
    };
    let fit = fit_voxel_flows_with_depth(&volume, target, init.as_ref(), &depth, &cfg.fit)?;
    let prediction = weighted_voxel_warp(&volume, &fit.flows, &WarpConfig::default())?;

    let q = cfg.rd.quant_step;
    let n = target.data().len();
    let mut residual = vec![0.0; n];
    let mut rec = vec![0.0; n];
    for i in 0..n {
        let r = target.data()[i] - prediction.data()[i];
        let rq = (r / q).round() * q;
        residual[i] = r;
        rec[i] = (prediction.data()[i] + rq).clamp(0.0, 1.0);
    }
    let residual = Frame::new(target.height(), target.width(), target.channels(), residual)?;
    let reconstruction = Frame::new(target.height(), target.width(), target.channels(), rec)?;

    let residual_bpp = residual_entropy_proxy(&residual, q);
    let flow_bpp = flow_rate_proxy(&fit.flows);
    let rate = residual_bpp + flow_bpp;
    let distortion = match cfg.rd.distortion_metric {
        DistortionMetric::Mse => mse(target, &reconstruction)?,
        DistortionMetric::MsSsim => 1.0 - ms_ssim(target, &reconstruction)?.value,
    };
    let hole_fraction = predicted_flow
        .as_ref()
        .map(|(_, holes)| holes.iter().filter(|&&h| h).count() as f64 / holes.len() as f64)
        .unwrap_or(0.0);
    let report = FrameReport {
        display_index: t,
        coding_order: entry.order,
        is_intra: false,
        prediction_psnr: psnr(target, &prediction)?,
        residual_entropy_bits_per_pixel: residual_bpp,
        flow_bits_per_pixel: flow_bpp,
        rate_proxy: rate,
        distortion,
        rd_cost: rate + cfg.rd.lambda * distortion,
        hole_fraction,
        gfp_psnr,
    };
    Ok(CodedFrame {
        report,
        reconstruction,
        prediction,
        diagnostics: Some(diagnostics(&fit.flows, volume.depth())?),
        flows: Some(fit.flows),
        predicted_flow,
    })
}

/// Codes `frames` (indexed by display order) following `plan`; reconstructed
/// frames serve as references for later frames.
pub fn simulate_sequence(frames: &[Frame], plan: &GopPlan, cfg: &SimConfig) -> Result<SimOutput> {
    cfg.rd.validate()?;
    let violations = validate_plan(plan);
    if !violations.is_empty() {
        let msg = violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::InvalidPlan(msg));
    }
    if plan.is_empty() {
        return Err(Error::InvalidPlan("plan has no frames".into()));
    }
    let mut recon: BTreeMap<usize, Frame> = BTreeMap::new();
    let mut coded = Vec::with_capacity(plan.len());
    for entry in &plan.entries {
        let target = frames
            .get(entry.display)
            .ok_or(Error::MissingFrame(entry.display))?;
        let frame = if entry.is_intra {
            CodedFrame {
                report: FrameReport {
                    display_index: entry.display,
                    coding_order: entry.order,
                    is_intra: true,
                    prediction_psnr: PSNR_CAP_DB,
                    residual_entropy_bits_per_pixel: 0.0,
                    flow_bits_per_pixel: 0.0,
                    rate_proxy: 0.0,
                    distortion: 0.0,
                    rd_cost: 0.0,
                    hole_fraction: 0.0,
                    gfp_psnr: vec![],
                },
                reconstruction: target.clone(),
                prediction: target.clone(),
                flows: None,
                diagnostics: None,
                predicted_flow: None,
            }
        } else {
            code_inter(entry, target, &recon, cfg)?
        };
        recon.insert(entry.display, frame.reconstruction.clone());
        coded.push(frame);
    }
    let inter: Vec<FrameReport> = coded
        .iter()
        .filter(|f| !f.report.is_intra)
        .map(|f| f.report.clone())
        .collect();
    let summary = if inter.is_empty() {
        let all: Vec<FrameReport> = coded.iter().map(|f| f.report.clone()).collect();
        rd_report(&all, cfg.rd.lambda)?
    } else {
        rd_report(&inter, cfg.rd.lambda)?
    };
    Ok(SimOutput {
        frames: coded,
        summary,
        lambda: cfg.rd.lambda,
    })
}

/// Directory-level driver: loads `NNNN.ppm` frames, simulates, writes outputs.
pub fn simulate_dir(
    frames_dir: &Path,
    plan: &GopPlan,
    cfg: &SimConfig,
    out_dir: &Path,
) -> Result<SimOutput> {
    let frames = load_frames(frames_dir, plan.len())?;
    let out = simulate_sequence(&frames, plan, cfg)?;
    out.write_to(out_dir)?;
    Ok(out)
}
