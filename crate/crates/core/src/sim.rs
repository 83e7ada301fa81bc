//! Synthetic periodic CAN traffic with labeled fabrication attacks.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::frame::{Aid, CanFrame, LabeledFrame, STANDARD_AID_LIMIT};
use crate::labels::{AttackMetadata, PayloadPattern};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadGen {
    Constant(Vec<u8>),
    /// `len` bytes; byte 0 counts frames modulo 256, the rest are zero.
    Counter(usize),
    /// `len` uniformly random bytes per frame.
    Random(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AidSpec {
    pub aid: Aid,
    /// Nominal period in seconds.
    pub period: f64,
    /// Standard deviation of the per-frame timing jitter, in seconds.
    pub jitter_sigma: f64,
    /// Time of the first nominal arrival.
    pub offset: f64,
    pub payload: PayloadGen,
}

impl AidSpec {
    pub fn new(aid: u32, period: f64) -> Self {
        AidSpec { aid: Aid(aid), period, jitter_sigma: 0.0, offset: 0.0, payload: PayloadGen::Counter(8) }
    }

    pub fn jitter(mut self, sigma: f64) -> Self {
        self.jitter_sigma = sigma;
        self
    }

    pub fn offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn payload(mut self, payload: PayloadGen) -> Self {
        self.payload = payload;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusSpec {
    pub aids: Vec<AidSpec>,
    /// Capture length in seconds; frames fall in `[0, duration)`.
    pub duration: f64,
    pub seed: u64,
}

impl BusSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidBus(m));
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration {} must be positive", self.duration));
        }
        let mut seen = BTreeSet::new();
        for a in &self.aids {
            if !seen.insert(a.aid) {
                return bad(format!("AID {} listed twice", a.aid));
            }
            if !(a.period.is_finite() && a.period > 0.0) {
                return bad(format!("AID {}: period must be positive", a.aid));
            }
            if !(a.jitter_sigma >= 0.0 && a.jitter_sigma < a.period / 4.0) {
                return bad(format!("AID {}: jitter sigma must lie in [0, period/4)", a.aid));
            }
            if !(a.offset.is_finite() && a.offset >= 0.0) {
                return bad(format!("AID {}: offset must be non-negative", a.aid));
            }
            let len = match &a.payload {
                PayloadGen::Constant(b) => b.len(),
                PayloadGen::Counter(n) | PayloadGen::Random(n) => *n,
            };
            if len > 8 {
                return bad(format!("AID {}: payload longer than 8 bytes", a.aid));
            }
        }
        Ok(())
    }
}

/// Rounds to whole microseconds, the resolution of the capture format.
fn to_micros(t: f64) -> f64 {
    (t * 1e6).round() / 1e6
}

fn aid_rng(seed: u64, aid: Aid) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(aid.0) + 1);
    rng
}

fn sort_frames(frames: &mut [LabeledFrame]) {
    frames.sort_by(|a, b| a.frame.timestamp.total_cmp(&b.frame.timestamp));
}

/// Periodic ambient traffic: arrival `k` of each AID is at
/// `offset + k·period + jitter`, jitter being normal and clipped at ±3σ.
/// Output is time-sorted (stable in AID listing order) and all labels are false.
pub fn generate_ambient(spec: &BusSpec) -> Result<Vec<LabeledFrame>, SimError> {
    spec.validate()?;
    let mut out = Vec::new();
    for a in &spec.aids {
        let mut rng = aid_rng(spec.seed, a.aid);
        let jitter = (a.jitter_sigma > 0.0).then(|| Normal::new(0.0, a.jitter_sigma).expect("sigma validated"));
        let mut k = 0u64;
        loop {
            let nominal = a.offset + k as f64 * a.period;
            if nominal >= spec.duration - 1e-9 {
                break;
            }
            let dt = jitter.as_ref().map_or(0.0, |d| {
                let clip = 3.0 * a.jitter_sigma;
                d.sample(&mut rng).clamp(-clip, clip)
            });
            let payload = match &a.payload {
                PayloadGen::Constant(b) => b.clone(),
                PayloadGen::Counter(n) => {
                    let mut b = vec![0u8; *n];
                    if let Some(first) = b.first_mut() {
                        *first = (k % 256) as u8;
                    }
                    b
                }
                PayloadGen::Random(n) => (0..*n).map(|_| rng.random()).collect(),
            };
            let t = to_micros((nominal + dt).max(0.0));
            let frame = CanFrame::new(t, a.aid.0, &payload).expect("validated spec yields valid frames");
            out.push(LabeledFrame::ambient(frame));
            k += 1;
        }
    }
    sort_frames(&mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AttackKind {
    /// Extra target frames at `period / multiplier`.
    FloodingTargeted { target: Aid, multiplier: f64 },
    /// One extra target frame `offset` seconds after every genuine one.
    FlamTargeted { target: Aid, offset: f64 },
    /// Random standard AIDs and random 8-byte payloads at `median period / multiplier`.
    Fuzzing { multiplier: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub start: f64,
    pub end: f64,
    /// Payload of injected frames (ignored by fuzzing).
    pub payload: Vec<u8>,
    /// Seed of the fuzzing generator.
    pub seed: u64,
}

/// Ambient capture plus one attack.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackCapture {
    pub frames: Vec<LabeledFrame>,
    /// Metadata in the dataset convention; the interval spans the first to
    /// the last injected frame.
    pub metadata: AttackMetadata,
    pub injected: usize,
}

fn median(xs: &mut [f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) })
}

/// Median gap of `aid` in a capture.
fn median_period(frames: &[LabeledFrame], aid: Aid) -> Option<f64> {
    let times: Vec<f64> = frames.iter().filter(|f| f.frame.aid == aid).map(|f| f.frame.timestamp).collect();
    let mut gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    median(&mut gaps)
}

/// Adds one attack to an ambient capture; ambient labels are kept.
pub fn inject_attack(ambient: &[LabeledFrame], attack: &AttackSpec) -> Result<AttackCapture, SimError> {
    let bad = |m: String| Err(SimError::InvalidAttack(m));
    let last = ambient.iter().map(|f| f.frame.timestamp).fold(0.0, f64::max);
    if !(attack.start >= 0.0 && attack.start < attack.end && attack.end <= last + 1e-9) {
        return bad(format!("interval [{}, {}] is not inside the capture [0, {last}]", attack.start, attack.end));
    }
    if attack.payload.len() > 8 {
        return bad("payload longer than 8 bytes".into());
    }
    let inside = |t: f64| t >= attack.start && t <= attack.end;
    let mut injected: Vec<CanFrame> = Vec::new();
    let (injection_id, pattern) = match &attack.kind {
        AttackKind::FlamTargeted { target, offset } => {
            let period =
                median_period(ambient, *target).ok_or_else(|| SimError::TargetAidAbsent(target.to_string()))?;
            if !(*offset > 0.0 && *offset < period) {
                return bad(format!("flam offset {offset} must lie in (0, {period})"));
            }
            for f in ambient.iter().filter(|f| f.frame.aid == *target && inside(f.frame.timestamp)) {
                let t = to_micros(f.frame.timestamp + offset);
                injected.push(CanFrame::new(t, target.0, &attack.payload).expect("checked payload"));
            }
            (Some(*target), hex_pattern(&attack.payload))
        }
        AttackKind::FloodingTargeted { target, multiplier } => {
            let period =
                median_period(ambient, *target).ok_or_else(|| SimError::TargetAidAbsent(target.to_string()))?;
            if !(*multiplier > 0.0 && multiplier.is_finite()) {
                return bad(format!("multiplier {multiplier} must be positive"));
            }
            let step = period / multiplier;
            let mut j = 0u64;
            loop {
                let t = attack.start + j as f64 * step;
                if t >= attack.end {
                    break;
                }
                injected.push(CanFrame::new(to_micros(t), target.0, &attack.payload).expect("checked payload"));
                j += 1;
            }
            (Some(*target), hex_pattern(&attack.payload))
        }
        AttackKind::Fuzzing { multiplier } => {
            let aids: BTreeSet<Aid> = ambient.iter().map(|f| f.frame.aid).collect();
            let mut periods: Vec<f64> = aids.iter().filter_map(|&a| median_period(ambient, a)).collect();
            let period = median(&mut periods)
                .ok_or_else(|| SimError::InvalidAttack("no periodic AID to pace fuzzing".into()))?;
            if !(*multiplier > 0.0 && multiplier.is_finite()) {
                return bad(format!("multiplier {multiplier} must be positive"));
            }
            let step = period / multiplier;
            let mut rng = ChaCha8Rng::seed_from_u64(attack.seed);
            let mut j = 0u64;
            loop {
                let t = attack.start + j as f64 * step;
                if t >= attack.end {
                    break;
                }
                let aid = rng.random_range(0..STANDARD_AID_LIMIT);
                let payload: [u8; 8] = rng.random();
                injected.push(CanFrame::new(to_micros(t), aid, &payload).expect("standard id"));
                j += 1;
            }
            (None, "XX".repeat(8))
        }
    };
    let (first, last) = match (injected.first(), injected.last()) {
        (Some(a), Some(b)) => (a.timestamp, b.timestamp),
        _ => return bad("the attack interval contains no injection opportunity".into()),
    };
    let metadata = AttackMetadata {
        injection_id,
        injection_data: PayloadPattern::parse(&pattern).expect("hex pattern"),
        interval_start: first.min(last),
        interval_end: last.max(first),
    };
    let count = injected.len();
    let mut frames: Vec<LabeledFrame> = ambient.to_vec();
    frames.extend(injected.into_iter().map(LabeledFrame::injected));
    sort_frames(&mut frames);
    Ok(AttackCapture { frames, metadata, injected: count })
}

fn hex_pattern(payload: &[u8]) -> String {
    payload.iter().map(|b| format!("{b:02X}")).collect()
}

/// Fuzzing pace relative to the median AID rate of the ambient capture.
pub const DEFAULT_FUZZ_MULTIPLIER: f64 = 10.0;

/// Target AID of the desk fixture (10 ms period).
pub const DESK_TARGET: Aid = Aid(0x0D0);
pub const DESK_DURATION: f64 = 60.0;
pub const DESK_ATTACK: (f64, f64) = (25.0, 35.0);
pub const DESK_FLAM_OFFSET: f64 = 0.001;

/// AIDs and periods of the desk fixture.
pub const DESK_AIDS: [(u32, f64); 10] = [
    (0x0D0, 0.010),
    (0x0F1, 0.020),
    (0x130, 0.020),
    (0x1A0, 0.050),
    (0x260, 0.050),
    (0x2C4, 0.100),
    (0x370, 0.100),
    (0x3E9, 0.200),
    (0x4B0, 0.250),
    (0x5F0, 0.500),
];

/// Ten-AID bus, 60 s. Jitter σ = period/14, so the gap standard deviation is
/// about a tenth of the period; AIDs are phase-shifted against each other.
pub fn desk_bus(seed: u64) -> BusSpec {
    let aids = DESK_AIDS
        .iter()
        .enumerate()
        .map(|(i, &(aid, period))| {
            AidSpec::new(aid, period)
                .jitter(period / 14.0)
                .offset(period * (0.5 + i as f64) / DESK_AIDS.len() as f64)
                .payload(PayloadGen::Counter(8))
        })
        .collect();
    BusSpec { aids, duration: DESK_DURATION, seed }
}

/// Flam on the fixture's target AID over 25–35 s: one injection 1 ms after
/// each genuine frame, doubling its rate.
pub fn desk_flam(seed: u64) -> AttackSpec {
    AttackSpec {
        kind: AttackKind::FlamTargeted { target: DESK_TARGET, offset: DESK_FLAM_OFFSET },
        start: DESK_ATTACK.0,
        end: DESK_ATTACK.1,
        payload: vec![0xFF; 8],
        seed,
    }
}

/// Training capture plus attacked test capture.
#[derive(Debug, Clone, PartialEq)]
pub struct DeskFixture {
    pub train: Vec<LabeledFrame>,
    pub test: AttackCapture,
}

impl DeskFixture {
    pub fn train_frames(&self) -> Vec<CanFrame> {
        self.train.iter().map(|f| f.frame.clone()).collect()
    }

    pub fn test_frames(&self) -> Vec<CanFrame> {
        self.test.frames.iter().map(|f| f.frame.clone()).collect()
    }

    pub fn test_labels(&self) -> Vec<bool> {
        self.test.frames.iter().map(|f| f.label).collect()
    }
}

/// The seeded desk-scale benchmark: an ambient training capture and an
/// independently jittered test capture carrying the flam attack.
pub fn desk_fixture(seed: u64) -> Result<DeskFixture, SimError> {
    let train = generate_ambient(&desk_bus(seed))?;
    let test_seed = seed ^ 0x5DEE_CE66_D1CE_5EED;
    let ambient = generate_ambient(&desk_bus(test_seed))?;
    let test = inject_attack(&ambient, &desk_flam(test_seed))?;
    Ok(DeskFixture { train, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::derive_labels;

    fn one(aid: u32, period: f64, jitter: f64, duration: f64, seed: u64) -> BusSpec {
        BusSpec { aids: vec![AidSpec::new(aid, period).jitter(jitter)], duration, seed }
    }

    #[test]
    fn jitter_free_periodic() {
        let frames = generate_ambient(&one(0x10, 0.1, 0.0, 1.0, 0)).unwrap();
        let times: Vec<f64> = frames.iter().map(|f| f.frame.timestamp).collect();
        assert_eq!(times, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        assert!(frames.iter().all(|f| !f.label));
    }

    #[test]
    fn merged_output_sorted_and_reproducible() {
        let spec = BusSpec {
            aids: vec![AidSpec::new(1, 0.01).jitter(0.001), AidSpec::new(2, 0.013).jitter(0.001).offset(0.004)],
            duration: 5.0,
            seed: 9,
        };
        let a = generate_ambient(&spec).unwrap();
        assert!(a.windows(2).all(|w| w[0].frame.timestamp <= w[1].frame.timestamp));
        assert_eq!(a, generate_ambient(&spec).unwrap());
        let other = generate_ambient(&BusSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_ambient(&one(1, 0.1, 0.03, 1.0, 0)).is_err());
        assert!(generate_ambient(&one(1, -0.1, 0.0, 1.0, 0)).is_err());
        let dup = BusSpec { aids: vec![AidSpec::new(1, 0.1), AidSpec::new(1, 0.2)], duration: 1.0, seed: 0 };
        assert!(matches!(generate_ambient(&dup), Err(SimError::InvalidBus(_))));
    }

    #[test]
    fn flam_one_per_genuine_frame() {
        let ambient = generate_ambient(&one(0xD0, 0.01, 0.0, 2.0, 0)).unwrap();
        let atk = AttackSpec {
            kind: AttackKind::FlamTargeted { target: Aid(0xD0), offset: 0.001 },
            start: 0.5,
            end: 0.7,
            payload: vec![0xAB],
            seed: 0,
        };
        let cap = inject_attack(&ambient, &atk).unwrap();
        assert_eq!(cap.injected, 21);
        assert_eq!(cap.frames.len(), ambient.len() + 21);
        assert_eq!(cap.frames.iter().filter(|f| f.label).count(), 21);
        // relabeling from the metadata reproduces the ground truth
        let frames: Vec<CanFrame> = cap.frames.iter().map(|f| f.frame.clone()).collect();
        let derived = derive_labels(&frames, std::slice::from_ref(&cap.metadata));
        assert!(derived.iter().zip(&cap.frames).all(|(d, f)| d.label == f.label));
    }

    #[test]
    fn flooding_rate() {
        let ambient = generate_ambient(&one(0x55, 0.1, 0.0, 3.0, 0)).unwrap();
        let atk = AttackSpec {
            kind: AttackKind::FloodingTargeted { target: Aid(0x55), multiplier: 10.0 },
            start: 1.0,
            end: 2.0,
            payload: vec![1, 2],
            seed: 0,
        };
        let cap = inject_attack(&ambient, &atk).unwrap();
        assert!((99..=101).contains(&cap.injected), "{}", cap.injected);
    }

    #[test]
    fn fuzzing_and_missing_target() {
        let ambient = generate_ambient(&one(0x55, 0.1, 0.0, 3.0, 0)).unwrap();
        let fuzz = AttackSpec {
            kind: AttackKind::Fuzzing { multiplier: 10.0 },
            start: 1.0,
            end: 2.0,
            payload: vec![],
            seed: 4,
        };
        let cap = inject_attack(&ambient, &fuzz).unwrap();
        assert_eq!(cap.metadata.injection_id, None);
        assert!(cap.frames.iter().filter(|f| f.label).all(|f| f.frame.payload.len() == 8 && f.frame.aid.is_standard()));
        let missing = AttackSpec { kind: AttackKind::FlamTargeted { target: Aid(0x99), offset: 0.001 }, ..fuzz };
        assert!(matches!(inject_attack(&ambient, &missing), Err(SimError::TargetAidAbsent(_))));
    }

    #[test]
    fn desk_fixture_shape() {
        let fx = desk_fixture(1).unwrap();
        assert!((998..=1_001).contains(&fx.test.injected), "{}", fx.test.injected);
        let aids: BTreeSet<Aid> = fx.train.iter().map(|f| f.frame.aid).collect();
        assert_eq!(aids.len(), 10);
        assert!((fx.test.metadata.interval_start - 25.0).abs() < 0.01);
        let during = fx
            .test
            .frames
            .iter()
            .filter(|f| f.frame.aid == DESK_TARGET && f.frame.timestamp >= 25.5 && f.frame.timestamp < 34.5);
        assert!((1_790..=1_810).contains(&during.count()));
    }
}
