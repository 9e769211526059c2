//! Training targets and the three-term detection loss, with analytic
//! gradients so an external trainer can use this as a differentiable kernel.
//!
//! The detection term is a penalty-reduced focal loss against a target built
//! by placing a Gaussian on every event onset and taking the pointwise max.
//! Regression (L1, seconds) and classification (cross-entropy) terms are
//! averaged over onset frames only.

use crate::error::{Error, Result};
use crate::types::{EventBox, FramePredictions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Focusing exponent on the prediction.
    pub alpha: f64,
    /// Penalty-reduction exponent on the target.
    pub beta: f64,
    /// Gaussian sharpness: variance is `duration_frames^2 / s`.
    pub s: f64,
    /// Weight of the regression term.
    pub lambda: f64,
    /// Weight of the classification term.
    pub rho: f64,
    /// Probabilities are clamped to `[epsilon, 1 - epsilon]` before logs.
    pub epsilon: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 4.0,
            s: 6.0,
            lambda: 1.0,
            rho: 1.0,
            epsilon: 1e-7,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(positive(self.alpha) && positive(self.beta) && positive(self.s)) {
            return Err(Error::Config("alpha, beta and s must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.rho >= 0.0) {
            return Err(Error::Config("lambda and rho must be non-negative".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::Config("epsilon must lie in (0, 0.5)".into()));
        }
        Ok(())
    }
}

/// Per-frame training targets for one recording and one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSeries {
    frame_rate: f64,
    p_target: Vec<f64>,
    onset_frames: Vec<usize>,
    dur_target: Vec<f64>,
    class_target: Vec<usize>,
    is_onset: Vec<bool>,
}

impl TargetSeries {
    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn num_frames(&self) -> usize {
        self.p_target.len()
    }

    pub fn p_target(&self) -> &[f64] {
        &self.p_target
    }

    /// Sorted, distinct.
    pub fn onset_frames(&self) -> &[usize] {
        &self.onset_frames
    }

    /// Duration targets in seconds, aligned with [`Self::onset_frames`].
    pub fn dur_target(&self) -> &[f64] {
        &self.dur_target
    }

    pub fn class_target(&self) -> &[usize] {
        &self.class_target
    }

    pub fn is_onset(&self, frame: usize) -> bool {
        self.is_onset[frame]
    }
}

/// Nearest frame to a time in seconds.
pub fn frame_of(seconds: f64, frame_rate: f64) -> f64 {
    (seconds * frame_rate).round()
}

/// Builds the smoothed detection target and the per-onset regression and
/// class targets.
///
/// When several events round to the same onset frame the longest one
/// supplies the duration and class targets.
pub fn build_targets(
    events: &[EventBox],
    frame_rate: f64,
    num_frames: usize,
    cfg: &LossConfig,
) -> Result<TargetSeries> {
    cfg.validate()?;
    if !(frame_rate.is_finite() && frame_rate > 0.0) {
        return Err(Error::Config(format!("frame rate {frame_rate} must be positive")));
    }
    let mut p_target = vec![0.0; num_frames];
    let mut at_frame: Vec<Option<(f64, usize)>> = vec![None; num_frames];

    for (i, ev) in events.iter().enumerate() {
        let onset = frame_of(ev.onset(), frame_rate);
        if !(onset >= 0.0 && onset < num_frames as f64) {
            return Err(Error::Range(format!(
                "event {i} ({ev}) has onset frame {onset} outside [0, {num_frames})"
            )));
        }
        let frame = onset as usize;
        let dur_frames = ev.duration() * frame_rate;
        let variance = dur_frames * dur_frames / cfg.s;
        for (t, p) in p_target.iter_mut().enumerate() {
            let dt = t as f64 - onset;
            let g = (-(dt * dt) / variance).exp();
            if g > *p {
                *p = g;
            }
        }
        p_target[frame] = 1.0;
        match at_frame[frame] {
            Some((dur, _)) if dur >= ev.duration() => {}
            _ => at_frame[frame] = Some((ev.duration(), ev.class_id())),
        }
    }

    let mut onset_frames = Vec::new();
    let mut dur_target = Vec::new();
    let mut class_target = Vec::new();
    let mut is_onset = vec![false; num_frames];
    for (t, slot) in at_frame.iter().enumerate() {
        if let Some((dur, class)) = *slot {
            onset_frames.push(t);
            dur_target.push(dur);
            class_target.push(class);
            is_onset[t] = true;
        }
    }
    Ok(TargetSeries {
        frame_rate,
        p_target,
        onset_frames,
        dur_target,
        class_target,
        is_onset,
    })
}

/// A scalar loss and its gradient with respect to the head's outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

fn check_len(what: &str, got: usize, targets: &TargetSeries) -> Result<()> {
    if got != targets.num_frames() {
        return Err(Error::Shape(format!(
            "{what} has {got} frames but targets have {}",
            targets.num_frames()
        )));
    }
    Ok(())
}

/// Focal detection loss over all frames.
///
/// Frames in the onset set use `(1-q)^a ln q`; all others use
/// `(1-p)^b q^a ln(1-q)`, with `q` the clamped prediction. Clamped entries
/// get a zero gradient.
pub fn detection_loss(p_hat: &[f64], targets: &TargetSeries, cfg: &LossConfig) -> Result<LossGrad> {
    check_len("p_hat", p_hat.len(), targets)?;
    let t_len = p_hat.len();
    if t_len == 0 {
        return Ok(LossGrad {
            loss: 0.0,
            grad: Vec::new(),
        });
    }
    let (a, b, eps) = (cfg.alpha, cfg.beta, cfg.epsilon);
    let scale = -1.0 / t_len as f64;
    let mut sum = 0.0;
    let mut grad = vec![0.0; t_len];
    for (t, (&raw, g)) in p_hat.iter().zip(grad.iter_mut()).enumerate() {
        let q = raw.clamp(eps, 1.0 - eps);
        let inside = raw > eps && raw < 1.0 - eps;
        let (term, dterm) = if targets.is_onset[t] {
            let w = (1.0 - q).powf(a);
            let term = w * q.ln();
            let d = -a * (1.0 - q).powf(a - 1.0) * q.ln() + w / q;
            (term, d)
        } else {
            let pen = (1.0 - targets.p_target[t]).powf(b);
            let log1m = (1.0 - q).ln();
            let term = pen * q.powf(a) * log1m;
            let d = pen * (a * q.powf(a - 1.0) * log1m - q.powf(a) / (1.0 - q));
            (term, d)
        };
        sum += term;
        if inside {
            *g = scale * dterm;
        }
    }
    Ok(LossGrad {
        loss: scale * sum,
        grad,
    })
}

/// Mean absolute duration error (seconds) over onset frames.
pub fn regression_loss(dur_reg: &[f64], targets: &TargetSeries, _cfg: &LossConfig) -> Result<LossGrad> {
    check_len("dur_reg", dur_reg.len(), targets)?;
    let mut grad = vec![0.0; dur_reg.len()];
    let n = targets.onset_frames.len();
    if n == 0 {
        return Ok(LossGrad { loss: 0.0, grad });
    }
    let inv = 1.0 / n as f64;
    let mut sum = 0.0;
    for (&t, &target) in targets.onset_frames.iter().zip(&targets.dur_target) {
        let diff = dur_reg[t] - target;
        sum += diff.abs();
        // sign(0) = 0 is the chosen subgradient.
        grad[t] = if diff > 0.0 {
            inv
        } else if diff < 0.0 {
            -inv
        } else {
            0.0
        };
    }
    Ok(LossGrad {
        loss: sum * inv,
        grad,
    })
}

/// Mean cross-entropy over onset frames; `class_logits` is row-major
/// `num_frames * num_classes`.
pub fn classification_loss(
    class_logits: &[f64],
    num_classes: usize,
    targets: &TargetSeries,
    _cfg: &LossConfig,
) -> Result<LossGrad> {
    if num_classes == 0 || !class_logits.len().is_multiple_of(num_classes) {
        return Err(Error::Shape(format!(
            "{} logits do not split into rows of {num_classes}",
            class_logits.len()
        )));
    }
    check_len("class_logits", class_logits.len() / num_classes, targets)?;
    let mut grad = vec![0.0; class_logits.len()];
    let n = targets.onset_frames.len();
    if n == 0 {
        return Ok(LossGrad { loss: 0.0, grad });
    }
    let inv = 1.0 / n as f64;
    let mut sum = 0.0;
    for (&t, &class) in targets.onset_frames.iter().zip(&targets.class_target) {
        if class >= num_classes {
            return Err(Error::Index(format!(
                "class target {class} at frame {t} outside [0, {num_classes})"
            )));
        }
        let row = &class_logits[t * num_classes..(t + 1) * num_classes];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        let log_z = max + z.ln();
        sum += log_z - row[class];
        let g = &mut grad[t * num_classes..(t + 1) * num_classes];
        for (k, (gk, &v)) in g.iter_mut().zip(row).enumerate() {
            let softmax = (v - log_z).exp();
            *gk = inv * (softmax - if k == class { 1.0 } else { 0.0 });
        }
    }
    Ok(LossGrad {
        loss: sum * inv,
        grad,
    })
}

/// Weighted loss `det + lambda * reg + rho * cls` and per-head gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalLoss {
    pub total: f64,
    pub detection: f64,
    pub regression: f64,
    pub classification: f64,
    pub grad_p_det: Vec<f64>,
    pub grad_dur_reg: Vec<f64>,
    pub grad_logits: Vec<f64>,
}

pub fn total_loss(preds: &FramePredictions, targets: &TargetSeries, cfg: &LossConfig) -> Result<TotalLoss> {
    cfg.validate()?;
    let det = detection_loss(preds.p_det(), targets, cfg)?;
    let reg = regression_loss(preds.dur_reg(), targets, cfg)?;
    let cls = classification_loss(preds.class_logits(), preds.num_classes(), targets, cfg)?;
    Ok(TotalLoss {
        total: det.loss + cfg.lambda * reg.loss + cfg.rho * cls.loss,
        detection: det.loss,
        regression: reg.loss,
        classification: cls.loss,
        grad_p_det: det.grad,
        grad_dur_reg: reg.grad.into_iter().map(|g| cfg.lambda * g).collect(),
        grad_logits: cls.grad.into_iter().map(|g| cfg.rho * g).collect(),
    })
}

/// Worst componentwise disagreement between analytic and central-difference
/// gradients for one head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    /// Components failing both the relative and the absolute tolerance.
    pub failures: usize,
    pub checked: usize,
}

/// Finite-difference comparison of every head's gradient of [`total_loss`].
///
/// Frames where a prediction sits within `h` of a clamp bound or an L1 kink
/// are skipped since the loss is not differentiable there.
pub fn gradient_report(
    preds: &FramePredictions,
    targets: &TargetSeries,
    cfg: &LossConfig,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<[GradCheck; 3]> {
    let base = total_loss(preds, targets, cfg)?;
    let eval = |p: &[f64], d: &[f64], l: &[f64]| -> Result<f64> {
        let fp = FramePredictions::new(
            preds.frame_rate(),
            p.to_vec(),
            d.to_vec(),
            l.to_vec(),
            preds.num_classes(),
            preds.direction(),
        )?;
        Ok(total_loss(&fp, targets, cfg)?.total)
    };
    let compare = |analytic: &[f64], numeric: Vec<Option<f64>>| {
        let mut out = GradCheck {
            max_abs_err: 0.0,
            max_rel_err: 0.0,
            failures: 0,
            checked: 0,
        };
        for (&a, n) in analytic.iter().zip(numeric) {
            let Some(n) = n else { continue };
            let abs = (a - n).abs();
            let rel = abs / a.abs().max(n.abs()).max(f64::MIN_POSITIVE);
            out.checked += 1;
            out.max_abs_err = out.max_abs_err.max(abs);
            if abs > abs_tol {
                out.max_rel_err = out.max_rel_err.max(rel);
                if rel > rel_tol {
                    out.failures += 1;
                }
            }
        }
        out
    };

    let (p, d, l) = (preds.p_det(), preds.dur_reg(), preds.class_logits());
    let eps = cfg.epsilon;

    let mut num_p = Vec::with_capacity(p.len());
    for t in 0..p.len() {
        if p[t] - h <= eps || p[t] + h >= 1.0 - eps {
            num_p.push(None);
            continue;
        }
        let mut plus = p.to_vec();
        let mut minus = p.to_vec();
        plus[t] += h;
        minus[t] -= h;
        num_p.push(Some((eval(&plus, d, l)? - eval(&minus, d, l)?) / (2.0 * h)));
    }

    let mut num_d = Vec::with_capacity(d.len());
    for t in 0..d.len() {
        let near_kink = targets
            .onset_frames
            .binary_search(&t)
            .map(|k| (d[t] - targets.dur_target[k]).abs() <= h)
            .unwrap_or(false);
        if near_kink || d[t] < h {
            num_d.push(None);
            continue;
        }
        let mut plus = d.to_vec();
        let mut minus = d.to_vec();
        plus[t] += h;
        minus[t] -= h;
        num_d.push(Some((eval(p, &plus, l)? - eval(p, &minus, l)?) / (2.0 * h)));
    }

    let mut num_l = Vec::with_capacity(l.len());
    for k in 0..l.len() {
        let mut plus = l.to_vec();
        let mut minus = l.to_vec();
        plus[k] += h;
        minus[k] -= h;
        num_l.push(Some((eval(p, d, &plus)? - eval(p, d, &minus)?) / (2.0 * h)));
    }

    Ok([
        compare(&base.grad_p_det, num_p),
        compare(&base.grad_dur_reg, num_d),
        compare(&base.grad_logits, num_l),
    ])
}
