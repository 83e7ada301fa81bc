//! Threshold-free per-frame scoring.

use std::collections::{HashMap, VecDeque};

use super::{Method, UnscoredReason};
use crate::frame::{Aid, CanFrame};
use crate::profile::{AidProfile, ProfileView};
use crate::scalar::Scalar;
use crate::stats::{gaussian_pvalue, kde_pvalue, GaussianFit, KdeModel};

/// Everything the threshold stage needs to know about one arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score<T> {
    Unscored(UnscoredReason),
    /// Not enough history yet: the first frame of an AID, or fewer than
    /// `window` Binning timestamps.
    Warmup,
    /// Mean: the gap to the previous same-AID frame.
    Gap {
        gap: T,
        mu: T,
    },
    /// Binning: time from the oldest to the newest of the last `window` frames.
    Span {
        span: T,
        mu: T,
    },
    /// Gaussian / KDE: two-sided p-value of the gap.
    PValue {
        gap: T,
        pv: T,
    },
}

#[derive(Debug, Clone, Copy)]
enum Model<'p, T> {
    Unknown,
    Degenerate,
    Mean(T),
    Binning(T),
    Gaussian(&'p GaussianFit<T>),
    Kde(&'p KdeModel<T>),
}

#[derive(Debug, Clone)]
struct Slot<'p, T> {
    model: Model<'p, T>,
    last: Option<f64>,
    /// Binning arrival times, oldest first.
    arrivals: VecDeque<f64>,
}

/// Per-AID arrival history plus the bound profile.
#[derive(Debug, Clone)]
pub struct Scorer<'p, T> {
    method: Method,
    window: usize,
    profiles: HashMap<Aid, &'p AidProfile<T>>,
    slots: HashMap<Aid, Slot<'p, T>>,
}

impl<'p, T: Scalar> Scorer<'p, T> {
    pub fn new(method: Method, window: usize, profiles: &ProfileView<'p, T>) -> Self {
        Scorer {
            method,
            window: window.max(1),
            profiles: profiles.iter().map(|(&a, &p)| (a, p)).collect(),
            slots: HashMap::new(),
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Forgets all arrival history (start of a new capture).
    pub fn reset(&mut self) {
        self.slots.clear();
    }

    fn bind(&self, aid: Aid) -> Model<'p, T> {
        let Some(&p) = self.profiles.get(&aid) else {
            return Model::Unknown;
        };
        let usable_mu = p.mu > T::zero() && p.mu.is_finite();
        match self.method {
            Method::Mean if usable_mu => Model::Mean(p.mu),
            Method::Binning if usable_mu => Model::Binning(p.mu),
            Method::Gaussian => {
                p.gaussian.as_ref().filter(|g| g.sigma > T::zero()).map_or(Model::Degenerate, Model::Gaussian)
            }
            Method::Kde => p.kde.as_ref().map_or(Model::Degenerate, Model::Kde),
            _ => Model::Degenerate,
        }
    }

    pub fn score(&mut self, frame: &CanFrame) -> Score<T> {
        let window = self.window;
        if !self.slots.contains_key(&frame.aid) {
            let model = self.bind(frame.aid);
            self.slots.insert(frame.aid, Slot { model, last: None, arrivals: VecDeque::with_capacity(window) });
        }
        let slot = self.slots.get_mut(&frame.aid).expect("slot inserted above");
        let t = frame.timestamp;
        match slot.model {
            Model::Unknown => Score::Unscored(UnscoredReason::UnknownAid),
            Model::Degenerate => Score::Unscored(UnscoredReason::Degenerate),
            Model::Binning(mu) => {
                if slot.arrivals.len() == window {
                    slot.arrivals.pop_front();
                }
                slot.arrivals.push_back(t);
                if slot.arrivals.len() < window {
                    Score::Warmup
                } else {
                    Score::Span { span: T::of(t - slot.arrivals[0]), mu }
                }
            }
            model => {
                let Some(prev) = slot.last.replace(t) else {
                    return Score::Warmup;
                };
                let gap = T::of(t - prev);
                match model {
                    Model::Mean(mu) => Score::Gap { gap, mu },
                    Model::Gaussian(fit) => {
                        Score::PValue { gap, pv: gaussian_pvalue(fit, gap).expect("sigma checked at bind") }
                    }
                    Model::Kde(kde) => Score::PValue { gap, pv: kde_pvalue(kde, gap) },
                    _ => unreachable!("handled above"),
                }
            }
        }
    }
}
