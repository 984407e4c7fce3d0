//! Exhaustive SAD block matching.

use crate::error::Result;
use crate::frame::{FlowField2D, Frame};

pub const DEFAULT_BLOCK: usize = 8;
pub const DEFAULT_RADIUS: usize = 8;

/// Estimates a piecewise-constant flow `f` such that `src[p] ~ dst[p + f(p)]`.
///
/// Each non-overlapping `block x block` tile (edge tiles may be smaller)
/// searches every integer displacement within `radius`; `dst` is sampled
/// with clamp-to-edge. Ties prefer the smaller displacement magnitude, then
/// the lexicographically smaller `(dx, dy)`.
pub fn estimate_flow_block_matching(
    src: &Frame,
    dst: &Frame,
    block: usize,
    search_radius: usize,
) -> Result<FlowField2D> {
    src.ensure_same_shape(dst, "block matching")?;
    assert!(block >= 1, "block size must be >= 1");
    let (h, w, ch) = (src.height(), src.width(), src.channels());
    let r = search_radius as i64;
    let mut flow = FlowField2D::zeros(h, w);
    for by in (0..h).step_by(block) {
        for bx in (0..w).step_by(block) {
            let (ey, ex) = ((by + block).min(h), (bx + block).min(w));
            let mut best: Option<(f64, i64, i64, i64)> = None;
            for dx in -r..=r {
                for dy in -r..=r {
                    let mut sad = 0.0;
                    for c in 0..ch {
                        for y in by..ey {
                            let qy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                            for x in bx..ex {
                                let qx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                                sad += (src.get(c, y, x) - dst.get(c, qy, qx)).abs();
                            }
                        }
                    }
                    let mag = dx * dx + dy * dy;
                    let better = match best {
                        None => true,
                        Some((bs, bm, bdx, bdy)) => {
                            sad < bs || (sad == bs && (mag, dx, dy) < (bm, bdx, bdy))
                        }
                    };
                    if better {
                        best = Some((sad, mag, dx, dy));
                    }
                }
            }
            let (_, _, dx, dy) = best.expect("at least one candidate");
            for y in by..ey {
                for x in bx..ex {
                    flow.dx[y * w + x] = dx as f64;
                    flow.dy[y * w + x] = dy as f64;
                }
            }
        }
    }
    Ok(flow)
}
