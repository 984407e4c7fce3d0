//! Per-pixel polynomial motion trajectories.
//!
//! For every pixel of the origin frame `tj` the forward displacement to
//! time `t` is modeled as `f(t) = sum_{l=1..k} a_l (t - tj)^l`. The
//! coefficients come from `k` estimated flows `f(tj -> t_i)` by solving the
//! time (Vandermonde-like) system once and reusing the factorization for
//! every pixel. The predicted forward flow is then reversed by softmax
//! splatting to give the backward flow `f(t -> tj)`.

use crate::error::{Error, Result};
use crate::frame::{FlowField2D, Frame};
use crate::splat::{
    importance_mask, softmax_splat_reverse, ImportanceConfig, Reversal, DEFAULT_EPS,
};

/// Pivots smaller than this make the time matrix singular.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

/// Default polynomial order for `n` prediction references: `min(n - 1, 2)`.
pub fn default_order(n_refs: usize) -> usize {
    n_refs.saturating_sub(1).min(2)
}

/// Flows from an origin frame to `k` other reference timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFlowSet {
    origin: i64,
    flows: Vec<(i64, FlowField2D)>,
}

impl ReferenceFlowSet {
    pub fn new(origin: i64, flows: Vec<(i64, FlowField2D)>) -> Result<Self> {
        let Some((_, first)) = flows.first() else {
            return Err(Error::InvalidConfig("reference flow set is empty".into()));
        };
        let (h, w) = (first.height(), first.width());
        for (i, (t, f)) in flows.iter().enumerate() {
            if *t == origin {
                return Err(Error::ZeroOffset(*t));
            }
            if flows[..i].iter().any(|(u, _)| u == t) {
                return Err(Error::DuplicateTimestamp(*t));
            }
            f.ensure_matches(h, w, "reference flow")?;
        }
        Ok(Self { origin, flows })
    }

    /// Keeps the `k` candidates nearest to `origin` (earlier timestamp on
    /// ties), ordered by distance.
    pub fn nearest(origin: i64, mut candidates: Vec<(i64, FlowField2D)>, k: usize) -> Result<Self> {
        if k == 0 || k > candidates.len() {
            return Err(Error::InvalidConfig(format!(
                "cannot select {k} nearest of {} reference flows",
                candidates.len()
            )));
        }
        candidates.sort_by_key(|(t, _)| ((t - origin).abs(), *t));
        candidates.truncate(k);
        Self::new(origin, candidates)
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.flows.iter().map(|(t, _)| *t).collect()
    }

    pub fn flows(&self) -> &[(i64, FlowField2D)] {
        &self.flows
    }

    pub fn height(&self) -> usize {
        self.flows[0].1.height()
    }

    pub fn width(&self) -> usize {
        self.flows[0].1.width()
    }
}

/// Polynomial coefficients `a_1..a_k` for both axes, laid out `k x 2 x H x W`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMotionField {
    pub k: usize,
    pub origin: i64,
    pub height: usize,
    pub width: usize,
    pub coeffs: Vec<f64>,
}

impl PolyMotionField {
    /// Coefficient `a_l` (1-based) for `axis` 0 = x, 1 = y.
    pub fn coeff(&self, l: usize, axis: usize) -> &[f64] {
        let n = self.height * self.width;
        let off = ((l - 1) * 2 + axis) * n;
        &self.coeffs[off..off + n]
    }
}

/// Rows `[(t_i - tj), (t_i - tj)^2, ..., (t_i - tj)^k]` for `k = timestamps.len()`.
pub fn build_time_matrix(origin: i64, timestamps: &[i64]) -> Result<Vec<Vec<f64>>> {
    for (i, &t) in timestamps.iter().enumerate() {
        if timestamps[..i].contains(&t) {
            return Err(Error::DuplicateTimestamp(t));
        }
        if t == origin {
            return Err(Error::ZeroOffset(t));
        }
    }
    let k = timestamps.len();
    Ok(timestamps
        .iter()
        .map(|&t| {
            let d = (t - origin) as f64;
            let mut row = Vec::with_capacity(k);
            let mut v = 1.0;
            for _ in 0..k {
                v *= d;
                row.push(v);
            }
            row
        })
        .collect())
}

/// LU factorization with partial pivoting of a small dense matrix.
#[derive(Debug, Clone)]
struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut lu: Vec<f64> = rows.iter().flatten().copied().collect();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&a, &b| lu[a * n + col].abs().total_cmp(&lu[b * n + col].abs()))
                .unwrap();
            let pivot = lu[piv * n + col];
            if pivot.abs() < PIVOT_THRESHOLD {
                return Err(Error::SingularSystem { pivot });
            }
            if piv != col {
                for j in 0..n {
                    lu.swap(col * n + j, piv * n + j);
                }
                perm.swap(col, piv);
            }
            for r in col + 1..n {
                let f = lu[r * n + col] / pivot;
                lu[r * n + col] = f;
                for j in col + 1..n {
                    lu[r * n + j] -= f * lu[col * n + j];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    /// Solves in place; `b` is in original row order, `x` receives the solution.
    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[self.perm[i]];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
    }
}

/// Solves the per-pixel coefficients with `k = refs.len()`.
pub fn solve_poly_coeffs(refs: &ReferenceFlowSet) -> Result<PolyMotionField> {
    let k = refs.len();
    let matrix = build_time_matrix(refs.origin(), &refs.timestamps())?;
    let lu = Lu::factor(&matrix)?;
    let (h, w) = (refs.height(), refs.width());
    let n = h * w;
    let mut coeffs = vec![0.0; k * 2 * n];
    let mut rhs = vec![0.0; k];
    let mut sol = vec![0.0; k];
    for axis in 0..2 {
        for p in 0..n {
            for (i, (_, f)) in refs.flows().iter().enumerate() {
                rhs[i] = if axis == 0 { f.dx[p] } else { f.dy[p] };
            }
            lu.solve(&rhs, &mut sol);
            for (l, &a) in sol.iter().enumerate() {
                coeffs[(l * 2 + axis) * n + p] = a;
            }
        }
    }
    if coeffs.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { pivot: f64::NAN });
    }
    Ok(PolyMotionField {
        k,
        origin: refs.origin(),
        height: h,
        width: w,
        coeffs,
    })
}

/// Evaluates the forward flow `f(tj -> t)` with Horner's scheme.
pub fn eval_forward_flow(poly: &PolyMotionField, t: f64) -> FlowField2D {
    let n = poly.height * poly.width;
    let tau = t - poly.origin as f64;
    let mut axes = [vec![0.0; n], vec![0.0; n]];
    for (axis, out) in axes.iter_mut().enumerate() {
        for (p, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for l in (1..=poly.k).rev() {
                acc = (acc + poly.coeff(l, axis)[p]) * tau;
            }
            *o = acc;
        }
    }
    let [dx, dy] = axes;
    FlowField2D::new(poly.height, poly.width, dx, dy).expect("finite coefficients give finite flow")
}

/// Output of [`predict_backward_flow`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPrediction {
    /// Predicted forward flow `f(tj -> t)`.
    pub forward: FlowField2D,
    /// Predicted backward flow `f(t -> tj)` with its hole mask.
    pub reversal: Reversal,
}

/// Predicts the backward flow from target time `t` to the origin of `refs`.
///
/// The `k` references nearest to the origin are used both for the
/// polynomial solve and for the importance mask. `frames` must contain the
/// origin frame and every selected reference by timestamp.
pub fn predict_backward_flow(
    refs: &ReferenceFlowSet,
    frames: &[(i64, &Frame)],
    t: f64,
    k: usize,
    importance: &ImportanceConfig,
) -> Result<FlowPrediction> {
    let selected = ReferenceFlowSet::nearest(refs.origin(), refs.flows().to_vec(), k)?;
    let lookup = |ts: i64| -> Result<&Frame> {
        frames
            .iter()
            .find(|(u, _)| *u == ts)
            .map(|(_, f)| *f)
            .ok_or(Error::MissingFrame(ts.max(0) as usize))
    };
    let origin = lookup(selected.origin())?;
    origin_matches(origin, &selected)?;
    let mut neighbors = Vec::with_capacity(k);
    let mut flows = Vec::with_capacity(k);
    for (ts, f) in selected.flows() {
        neighbors.push(lookup(*ts)?.clone());
        flows.push(f.clone());
    }
    let poly = solve_poly_coeffs(&selected)?;
    let forward = eval_forward_flow(&poly, t);
    let z = importance_mask(origin, &neighbors, &flows, importance)?;
    let reversal = softmax_splat_reverse(&forward, &z, DEFAULT_EPS)?;
    Ok(FlowPrediction { forward, reversal })
}

fn origin_matches(frame: &Frame, refs: &ReferenceFlowSet) -> Result<()> {
    if frame.height() != refs.height() || frame.width() != refs.width() {
        return Err(Error::ShapeMismatch(format!(
            "origin frame is {}x{}, flows are {}x{}",
            frame.height(),
            frame.width(),
            refs.height(),
            refs.width()
        )));
    }
    Ok(())
}
