use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use voxflow::gop::{plan_gop, GopConfig, GopMode, GopPlan};
use voxflow::sim::fit::FitParams;
use voxflow::sim::metrics::{ms_ssim, psnr};
use voxflow::sim::pipeline::{simulate_dir, FlowSource, SimConfig};
use voxflow::sim::rate::{DistortionMetric, RdConfig};
use voxflow::splat::{softmax_splat_reverse, ImportanceConfig, ImportanceMask, DEFAULT_EPS};
use voxflow::tensor_io::{read_frame_ppm, read_tensor, write_frame_ppm, Tensor};
use voxflow::trajectory::{predict_backward_flow, ReferenceFlowSet};
use voxflow::warp::{weighted_voxel_warp, WarpConfig, DEFAULT_FLOW_COUNT};

#[derive(Parser)]
#[command(
    name = "voxflow",
    version,
    about = "Voxel-flow motion compensation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ldp,
    Ldb,
    Ra,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowSourceArg {
    Files,
    Blockmatch,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Mse,
    MsSsim,
}

#[derive(Subcommand)]
enum Command {
    /// Warp a D x C x H x W volume with a (4M) x H x W voxel-flow tensor.
    Warp {
        #[arg(long)]
        volume: PathBuf,
        #[arg(long)]
        flows: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict the backward flow f(t -> J) from flows f(J -> t_i).
    PredictFlow {
        /// Comma-separated `timestamp:frame.ppm` entries, including the origin.
        #[arg(long)]
        refs: String,
        /// Comma-separated `timestamp:flow.vten` entries holding f(J -> timestamp).
        #[arg(long)]
        flows: String,
        #[arg(long = "t-origin", allow_hyphen_values = true)]
        t_origin: i64,
        #[arg(long = "t-target", allow_hyphen_values = true)]
        t_target: f64,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        out: PathBuf,
        /// Optional 1 x H x W hole mask output.
        #[arg(long)]
        holes: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        beta: f64,
    },
    /// Reverse a forward flow by softmax splatting with importance mask Z.
    ReverseFlow {
        #[arg(long)]
        flow: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        holes: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Write a coding schedule.
    PlanGop {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        length: usize,
        #[arg(long = "intra-period", default_value_t = 12)]
        intra_period: usize,
        #[arg(long = "n-refs", default_value_t = 3)]
        n_refs: usize,
        #[arg(long = "warp-refs", default_value_t = 2)]
        warp_refs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the closed-loop codec simulation on a directory of NNNN.ppm frames.
    Simulate {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = DEFAULT_FLOW_COUNT)]
        m: usize,
        #[arg(long = "flow-source", value_enum, default_value_t = FlowSourceArg::Blockmatch)]
        flow_source: FlowSourceArg,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = FitParams::default().iters)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "quant-step", default_value_t = 1.0 / 255.0)]
        quant_step: f64,
        #[arg(long, value_enum, default_value_t = MetricArg::Mse)]
        metric: MetricArg,
        /// Maximum polynomial order for flow prediction.
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long = "no-gfp")]
        no_gfp: bool,
    },
    /// Print PSNR and MS-SSIM between two PPM frames.
    Metrics {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

fn parse_pairs(list: &str) -> anyhow::Result<Vec<(i64, PathBuf)>> {
    list.split(',')
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (t, path) = item
                .split_once(':')
                .with_context(|| format!("expected `timestamp:path`, got {item:?}"))?;
            let t = t
                .trim()
                .parse::<i64>()
                .with_context(|| format!("bad timestamp in {item:?}"))?;
            Ok((t, PathBuf::from(path)))
        })
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Warp { volume, flows, out } => {
            let vol = read_tensor(&volume)?.to_volume()?;
            let stack = read_tensor(&flows)?.to_voxel_flows()?;
            let frame = weighted_voxel_warp(&vol, &stack, &WarpConfig::default())?;
            write_frame_ppm(&frame, &out)?;
        }
        Command::PredictFlow {
            refs,
            flows,
            t_origin,
            t_target,
            order,
            out,
            holes,
            alpha,
            beta,
        } => {
            let frames = parse_pairs(&refs)?
                .into_iter()
                .map(|(t, p)| Ok((t, read_frame_ppm(&p)?)))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let flow_set = parse_pairs(&flows)?
                .into_iter()
                .map(|(t, p)| Ok((t, read_tensor(&p)?.to_flow()?)))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let set = ReferenceFlowSet::new(t_origin, flow_set)?;
            let frame_refs: Vec<(i64, &voxflow::Frame)> =
                frames.iter().map(|(t, f)| (*t, f)).collect();
            let pred = predict_backward_flow(
                &set,
                &frame_refs,
                t_target,
                order,
                &ImportanceConfig { alpha, beta },
            )?;
            Tensor::from_flow(&pred.reversal.flow).write(&out)?;
            if let Some(h) = holes {
                let f = &pred.reversal.flow;
                Tensor::from_mask(&pred.reversal.holes, f.height(), f.width()).write(&h)?;
            }
        }
        Command::ReverseFlow {
            flow,
            mask,
            out,
            holes,
            eps,
        } => {
            let forward = read_tensor(&flow)?.to_flow()?;
            let z = read_tensor(&mask)?;
            let (h, w) = (forward.height(), forward.width());
            if z.data.len() != h * w {
                bail!("importance mask has dims {:?}, flow is {h}x{w}", z.dims);
            }
            let z = ImportanceMask::new(h, w, z.data.iter().map(|&v| v as f64).collect())?;
            let rev = softmax_splat_reverse(&forward, &z, eps)?;
            Tensor::from_flow(&rev.flow).write(&out)?;
            Tensor::from_mask(&rev.holes, h, w).write(&holes)?;
        }
        Command::PlanGop {
            mode,
            length,
            intra_period,
            n_refs,
            warp_refs,
            out,
        } => {
            let mode = match mode {
                ModeArg::Ldp => GopMode::Ldp,
                ModeArg::Ldb => GopMode::Ldb,
                ModeArg::Ra => GopMode::Ra,
            };
            let plan = plan_gop(&GopConfig {
                mode,
                intra_period,
                n_refs,
                warp_refs,
                sequence_length: length,
            })?;
            fs::write(&out, plan.to_text())
                .with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Simulate {
            frames,
            plan,
            lambda,
            m,
            flow_source,
            out_dir,
            iters,
            seed,
            quant_step,
            metric,
            order,
            no_gfp,
        } => {
            let text =
                fs::read_to_string(&plan).with_context(|| format!("reading {}", plan.display()))?;
            let plan = GopPlan::from_text(&text)?;
            let cfg = SimConfig {
                rd: RdConfig {
                    lambda,
                    quant_step,
                    distortion_metric: match metric {
                        MetricArg::Mse => DistortionMetric::Mse,
                        MetricArg::MsSsim => DistortionMetric::MsSsim,
                    },
                },
                fit: FitParams {
                    m,
                    iters,
                    seed,
                    ..FitParams::default()
                },
                flow_source: match flow_source {
                    FlowSourceArg::Files => FlowSource::Files(frames.clone()),
                    FlowSourceArg::Blockmatch => FlowSource::default(),
                },
                gfp: !no_gfp,
                max_order: order,
                ..SimConfig::default()
            };
            let out = simulate_dir(&frames, &plan, &cfg, &out_dir)?;
            print!("{}", out.report_text());
        }
        Command::Metrics { a, b } => {
            let fa = read_frame_ppm(&a)?;
            let fb = read_frame_ppm(&b)?;
            let p = psnr(&fa, &fb)?;
            let s = ms_ssim(&fa, &fb)?;
            println!("psnr={p:.6} ms_ssim={:.9} scales={}", s.value, s.scales);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
