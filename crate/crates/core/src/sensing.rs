//! The eavesdropper's motion detector.
//!
//! Each CSI frame is flattened into a vector of `K·N_R·N_T` complex entries.
//! Only magnitudes are used. Every component gets a trailing-window
//! population standard deviation, and the per-component deviations are
//! averaged into one scalar per time step, the *observation*. Motion is
//! declared when the observation exceeds a threshold calibrated on a quiet
//! reference recording as `median + C·MAD`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::CsiFrame;
use crate::error::{Error, Result};

/// Flattened CSI vector: subcarrier-major, column-major within each antenna
/// matrix.
pub fn vectorize(frame: &CsiFrame) -> Vec<Complex64> {
    frame.values.clone()
}

/// Magnitudes of every vector component over time, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeMatrix {
    pub n_subcarriers: usize,
    /// Spatial channels per subcarrier (`N_R·N_T`).
    pub spatial: usize,
    pub n_frames: usize,
    data: Vec<f64>,
}

impl MagnitudeMatrix {
    pub fn from_frames(frames: &[CsiFrame]) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::contract("no frames"))?;
        let (k, s) = (first.n_subcarriers, first.spatial_channels());
        let n = k * s;
        let t = frames.len();
        let mut data = vec![0.0; n * t];
        for (ti, f) in frames.iter().enumerate() {
            if f.n_subcarriers != k || f.spatial_channels() != s || f.values.len() != n {
                return Err(Error::contract(format!("frame {ti} differs in shape from frame 0")));
            }
            for (c, v) in f.values.iter().enumerate() {
                data[c * t + ti] = v.norm();
            }
        }
        Ok(Self {
            n_subcarriers: k,
            spatial: s,
            n_frames: t,
            data,
        })
    }

    /// All-zero matrix to be filled with [`MagnitudeMatrix::write_frame`].
    pub fn zeros(n_subcarriers: usize, spatial: usize, n_frames: usize) -> Self {
        Self {
            n_subcarriers,
            spatial,
            n_frames,
            data: vec![0.0; n_subcarriers * spatial * n_frames],
        }
    }

    /// Stores the magnitudes of `frame` as time step `t`, keeping only the
    /// listed subcarriers when `subcarriers` is given.
    pub fn write_frame(&mut self, t: usize, frame: &CsiFrame, subcarriers: Option<&[usize]>) -> Result<()> {
        let s = frame.spatial_channels();
        if s != self.spatial || t >= self.n_frames {
            return Err(Error::contract("frame does not fit the magnitude matrix"));
        }
        let mut write = |slot: usize, k: usize| {
            for j in 0..s {
                self.data[(slot * s + j) * self.n_frames + t] = frame.values[k * s + j].norm();
            }
        };
        match subcarriers {
            Some(sel) => {
                if sel.len() != self.n_subcarriers || sel.iter().any(|&k| k >= frame.n_subcarriers) {
                    return Err(Error::contract("subcarrier selection does not fit the frame"));
                }
                for (slot, &k) in sel.iter().enumerate() {
                    write(slot, k);
                }
            }
            None => {
                if frame.n_subcarriers != self.n_subcarriers {
                    return Err(Error::contract("frame does not fit the magnitude matrix"));
                }
                for k in 0..frame.n_subcarriers {
                    write(k, k);
                }
            }
        }
        Ok(())
    }

    pub fn n_components(&self) -> usize {
        self.n_subcarriers * self.spatial
    }

    /// Magnitude series of vector component `c`.
    pub fn component(&self, c: usize) -> &[f64] {
        &self.data[c * self.n_frames..(c + 1) * self.n_frames]
    }

    /// Series of spatial channel `s` on subcarrier `k`.
    pub fn series(&self, k: usize, s: usize) -> &[f64] {
        self.component(k * self.spatial + s)
    }

    /// Keeps the listed subcarriers, in order.
    pub fn select(&self, subcarriers: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(subcarriers.len() * self.spatial * self.n_frames);
        for &k in subcarriers {
            if k >= self.n_subcarriers {
                return Err(Error::contract(format!("subcarrier {k} out of range")));
            }
            let span = self.spatial * self.n_frames;
            data.extend_from_slice(&self.data[k * span..(k + 1) * span]);
        }
        Ok(Self {
            n_subcarriers: subcarriers.len(),
            spatial: self.spatial,
            n_frames: self.n_frames,
            data,
        })
    }
}

/// Pearson correlation; zero when either series is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Picks the `k` subcarriers whose magnitude series correlate best with the
/// rest. The correlation of a subcarrier pair is averaged over spatial
/// channels; a subcarrier's score is its mean correlation to all others.
/// Ties go to the lower index. Returned indices are ascending.
pub fn select_subcarriers(frames: &[CsiFrame], k: usize) -> Result<Vec<usize>> {
    if frames.len() < 2 {
        return Err(Error::contract(
            "subcarrier selection needs at least two reference frames",
        ));
    }
    select_subcarriers_from(&MagnitudeMatrix::from_frames(frames)?, k)
}

pub fn select_subcarriers_from(mags: &MagnitudeMatrix, k: usize) -> Result<Vec<usize>> {
    let total = mags.n_subcarriers;
    if k > total {
        return Err(Error::contract(format!("cannot select {k} of {total} subcarriers")));
    }
    if mags.n_frames < 2 {
        return Err(Error::contract(
            "subcarrier selection needs at least two reference frames",
        ));
    }
    let scores = subcarrier_scores(mags);
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut picked = order[..k].to_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Mean pairwise correlation of each subcarrier to all others.
pub fn subcarrier_scores(mags: &MagnitudeMatrix) -> Vec<f64> {
    let (total, spatial, t) = (mags.n_subcarriers, mags.spatial, mags.n_frames);
    // standardized series; constant series become all-zero
    let z: Vec<Vec<f64>> = (0..total * spatial)
        .map(|c| {
            let x = mags.component(c);
            let m = x.iter().sum::<f64>() / t as f64;
            let ss = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
            if ss == 0.0 {
                vec![0.0; t]
            } else {
                let inv = 1.0 / ss.sqrt();
                x.iter().map(|v| (v - m) * inv).collect()
            }
        })
        .collect();
    let mut corr = vec![0.0; total * total];
    for a in 0..total {
        for b in a + 1..total {
            let mut acc = 0.0;
            for s in 0..spatial {
                let (za, zb) = (&z[a * spatial + s], &z[b * spatial + s]);
                acc += za.iter().zip(zb).map(|(x, y)| x * y).sum::<f64>();
            }
            let c = acc / spatial as f64;
            corr[a * total + b] = c;
            corr[b * total + a] = c;
        }
    }
    (0..total)
        .map(|a| {
            if total < 2 {
                0.0
            } else {
                (0..total).filter(|&b| b != a).map(|b| corr[a * total + b]).sum::<f64>() / (total - 1) as f64
            }
        })
        .collect()
}

/// Population standard deviation of one window; exactly zero for a constant
/// window.
fn window_std(w: &[f64]) -> f64 {
    let x0 = w[0];
    let n = w.len() as f64;
    let mean = x0 + w.iter().map(|v| v - x0).sum::<f64>() / n;
    let ss = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (ss / n).sqrt()
}

/// Trailing-window population standard deviation. Output `i` covers input
/// samples `i..i + n_w`, so the output is `n_w − 1` samples shorter.
pub fn sliding_std(series: &[f64], n_w: usize) -> Result<Vec<f64>> {
    if n_w < 2 {
        return Err(Error::contract(format!(
            "window must span at least 2 samples, got {n_w}"
        )));
    }
    if series.len() < n_w {
        return Err(Error::contract(format!(
            "series of {} samples is shorter than the {n_w}-sample window",
            series.len()
        )));
    }
    Ok(series.windows(n_w).map(window_std).collect())
}

/// Window length in samples: `round(window_s · sample_rate)`.
pub fn window_samples(window_s: f64, sample_rate: f64) -> usize {
    (window_s * sample_rate).round().max(0.0) as usize
}

/// Where an observation came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationMeta {
    pub label: String,
    pub seed: u64,
    /// Frame index of the first output sample (the end of its window).
    pub start_index: u64,
}

/// Averaged sliding-window standard deviation over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSeries {
    pub values: Vec<f64>,
    pub sample_rate: f64,
    pub window_s: f64,
    pub meta: ObservationMeta,
}

impl ObservationSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time stamp of sample `i`: the end of its window.
    pub fn t_seconds(&self, i: usize) -> f64 {
        (self.meta.start_index + i as u64) as f64 / self.sample_rate
    }

    pub fn window_samples(&self) -> usize {
        window_samples(self.window_s, self.sample_rate)
    }
}

/// Observation from a frame sequence.
pub fn observe(frames: &[CsiFrame], sample_rate: f64, window_s: f64) -> Result<ObservationSeries> {
    let mags = MagnitudeMatrix::from_frames(frames)?;
    let mut obs = observe_magnitudes(&mags, sample_rate, window_s)?;
    obs.meta.start_index += frames[0].t_index;
    Ok(obs)
}

pub fn observe_magnitudes(mags: &MagnitudeMatrix, sample_rate: f64, window_s: f64) -> Result<ObservationSeries> {
    let n_w = window_samples(window_s, sample_rate);
    if n_w < 2 {
        return Err(Error::contract(format!(
            "window of {window_s} s at {sample_rate} frames/s spans fewer than 2 samples"
        )));
    }
    if mags.n_frames < n_w {
        return Err(Error::contract(format!(
            "{} frames are fewer than the {n_w}-sample window",
            mags.n_frames
        )));
    }
    let out_len = mags.n_frames - n_w + 1;
    let mut acc = vec![0.0; out_len];
    let n = mags.n_components();
    for c in 0..n {
        for (a, s) in acc.iter_mut().zip(sliding_std(mags.component(c), n_w)?) {
            *a += s;
        }
    }
    for a in &mut acc {
        *a /= n as f64;
    }
    Ok(ObservationSeries {
        values: acc,
        sample_rate,
        window_s,
        meta: ObservationMeta {
            start_index: (n_w - 1) as u64,
            ..ObservationMeta::default()
        },
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Median absolute deviation, without a consistency constant.
pub fn mad(values: &[f64]) -> f64 {
    let m = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    median(&dev)
}

/// Linear-interpolated percentile, `q` in `[0, 100]`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = (q / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// `median + C·MAD` of the reference observation.
pub fn calibrate_threshold(reference: &[f64], c: f64) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::contract("empty reference observation"));
    }
    Ok(median(reference) + c * mad(reference))
}

/// Largest reference value: the lowest threshold with no false positives on
/// the reference.
pub fn max_threshold(reference: &[f64]) -> Result<f64> {
    reference
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or_else(|| Error::contract("empty reference observation"))
}

/// Threshold rule used by the detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `median + C·MAD`.
    MedianMad { c: f64 },
    /// Maximum of the reference.
    MaxReference,
}

impl ThresholdRule {
    pub fn apply(&self, reference: &[f64]) -> Result<f64> {
        match *self {
            ThresholdRule::MedianMad { c } => calibrate_threshold(reference, c),
            ThresholdRule::MaxReference => max_threshold(reference),
        }
    }
}

/// Per-sample decisions `value > u` and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub threshold: f64,
    pub decisions: Vec<bool>,
    pub detection_rate: f64,
}

pub fn detect(obs: &[f64], u: f64) -> Result<Detection> {
    if obs.is_empty() {
        return Err(Error::contract("empty observation"));
    }
    let decisions: Vec<bool> = obs.iter().map(|&v| v > u).collect();
    let hits = decisions.iter().filter(|&&d| d).count();
    Ok(Detection {
        threshold: u,
        detection_rate: hits as f64 / obs.len() as f64,
        decisions,
    })
}

/// Receiver operating characteristic over all thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roc {
    /// `(fpr, tpr)` pairs from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps the threshold from `+∞` down through every observed value to `−∞`.
/// Positives are `motion` samples above the threshold; false positives are
/// `reference` samples above it.
pub fn roc(motion: &[f64], reference: &[f64]) -> Result<Roc> {
    if motion.is_empty() || reference.is_empty() {
        return Err(Error::contract("ROC needs non-empty motion and reference observations"));
    }
    let mut pos = motion.to_vec();
    let mut neg = reference.to_vec();
    pos.sort_by(|a, b| b.total_cmp(a));
    neg.sort_by(|a, b| b.total_cmp(a));
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut i, mut j) = (0, 0);
    while i < pos.len() || j < neg.len() {
        // next threshold: the largest value not yet passed
        let u = match (pos.get(i), neg.get(j)) {
            (Some(&a), Some(&b)) => a.max(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        // samples strictly above the next lower threshold are those >= u
        while i < pos.len() && pos[i] >= u {
            i += 1;
        }
        while j < neg.len() && neg[j] >= u {
            j += 1;
        }
        points.push((j as f64 / nn, i as f64 / np));
    }
    points.dedup();
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(Roc { points, auc })
}

/// Everything the attacker learns from one motion recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub threshold: f64,
    pub rule: ThresholdRule,
    pub decisions: Vec<bool>,
    /// Fraction of motion samples above the threshold.
    pub detection_rate: f64,
    pub tpr: f64,
    /// Fraction of reference samples above the threshold.
    pub fpr: f64,
    pub roc_points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Calibrates on `reference`, then scores `motion`.
pub fn evaluate(motion: &[f64], reference: &[f64], rule: ThresholdRule) -> Result<DetectionReport> {
    let u = rule.apply(reference)?;
    let hit = detect(motion, u)?;
    let fa = detect(reference, u)?;
    let curve = roc(motion, reference)?;
    Ok(DetectionReport {
        threshold: u,
        rule,
        detection_rate: hit.detection_rate,
        tpr: hit.detection_rate,
        fpr: fa.detection_rate,
        decisions: hit.decisions,
        roc_points: curve.points,
        auc: curve.auc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectorize_shapes() {
        let f = CsiFrame::zeros(0, 1, 1, 1);
        assert_eq!(vectorize(&f).len(), 1);
        let f = CsiFrame::zeros(0, 28, 3, 3);
        assert_eq!(vectorize(&f).len(), 252);
        let mut f = CsiFrame::zeros(0, 3, 3, 3);
        let i = f.index(1, 0, 0); // 1-based (k=2, rx=1, tx=1)
        f.values[i] = Complex64::new(7.0, 0.0);
        assert_eq!(vectorize(&f)[9], Complex64::new(7.0, 0.0));
    }

    #[test]
    fn sliding_std_examples() {
        assert_eq!(sliding_std(&[3.0; 10], 4).unwrap(), vec![0.0; 7]);
        assert_eq!(sliding_std(&[0.0, 0.0, 2.0, 2.0], 2).unwrap(), vec![0.0, 1.0, 0.0]);
        let alt: Vec<f64> = (0..400).map(|i| if i % 2 == 0 { 1.5 } else { -1.5 }).collect();
        for s in sliding_std(&alt, 200).unwrap() {
            assert!((s - 1.5).abs() < 1e-12);
        }
        assert!(sliding_std(&[1.0, 2.0], 3).is_err());
        assert!(sliding_std(&[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn constant_window_is_exactly_zero() {
        assert_eq!(sliding_std(&[0.1; 70], 70).unwrap(), vec![0.0]);
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(calibrate_threshold(&[1.0, 1.0, 1.0], 11.0).unwrap(), 1.0);
        assert_eq!(calibrate_threshold(&[1.0, 2.0, 3.0, 4.0, 5.0], 1.0).unwrap(), 4.0);
        assert_eq!(calibrate_threshold(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.0).unwrap(), 3.0);
        assert!(calibrate_threshold(&[], 1.0).is_err());
    }

    #[test]
    fn max_threshold_examples() {
        assert_eq!(max_threshold(&[0.1, 0.5, 0.3]).unwrap(), 0.5);
        assert_eq!(max_threshold(&[0.0; 5]).unwrap(), 0.0);
        assert_eq!(max_threshold(&[0.2, 9.9, 0.1]).unwrap(), 9.9);
    }

    #[test]
    fn detect_examples() {
        let d = detect(&[1.0, 2.0, 3.0], 2.0).unwrap();
        assert_eq!(d.decisions, vec![false, false, true]);
        assert!((d.detection_rate - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(detect(&[0.0, 1.0], -1.0).unwrap().detection_rate, 1.0);
        assert_eq!(detect(&[1.0, 3.0, 2.0], 3.0).unwrap().detection_rate, 0.0);
    }

    #[test]
    fn roc_examples() {
        let r = roc(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(r.points, vec![(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)]);
        assert_eq!(r.auc, 0.5);
        let r = roc(&[5.0, 6.0, 7.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.auc, 1.0);
        let r = roc(&[1.0, 2.0], &[5.0, 6.0, 7.0]).unwrap();
        assert_eq!(r.auc, 0.0);
    }

    #[test]
    fn select_identical_series_takes_first() {
        let frames: Vec<CsiFrame> = (0..20)
            .map(|t| {
                let mut f = CsiFrame::zeros(t, 8, 1, 1);
                for v in &mut f.values {
                    *v = Complex64::new((t as f64 * 0.7).sin() + 2.0, 0.0);
                }
                f
            })
            .collect();
        assert_eq!(select_subcarriers(&frames, 3).unwrap(), vec![0, 1, 2]);
        assert_eq!(select_subcarriers(&frames, 8).unwrap(), (0..8).collect::<Vec<_>>());
        assert!(select_subcarriers(&frames, 9).is_err());
        assert!(select_subcarriers(&frames[..1], 2).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 50.0), 3.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 5.0);
        assert!((percentile(&v, 1.0) - 1.04).abs() < 1e-12);
    }

    #[test]
    fn report_with_max_rule_has_zero_fpr() {
        let rep = evaluate(&[0.5, 3.0], &[0.1, 0.9, 0.4], ThresholdRule::MaxReference).unwrap();
        assert_eq!(rep.fpr, 0.0);
        assert_eq!(rep.threshold, 0.9);
        assert_eq!(rep.detection_rate, 0.5);
    }
}
