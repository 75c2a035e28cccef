//! Seeded synthetic application traffic.
//!
//! Each profile is a compact order-1 Markov byte chain: the next byte
//! reverts toward a per-application center with tunable pull and jitter, and
//! an optional positional marker stamps a fixed value every N bytes. The
//! parameters are deliberately coarse so that different applications produce
//! visibly different byte histograms and local structure a small network can
//! learn.

use rand::Rng;

use crate::error::{Error, Result};
use crate::packet::{LabeledDataset, PacketVector, VECTOR_LEN};
use crate::seed;

/// Generator parameters for one synthetic application.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthAppProfile {
    pub id: u32,
    pub name: String,
    /// Stationary byte level the chain reverts to.
    pub center: u8,
    /// Mean-reversion strength in percent: 0 resets to the center every
    /// byte, 100 is a pure random walk.
    pub pull: u8,
    /// Half-width of the uniform jitter added at every step.
    pub noise: u8,
    /// Stamp `marker_value` every `marker_every` bytes; 0 disables markers.
    pub marker_every: u16,
    pub marker_value: u8,
    /// Payload length triangular distribution (min, mode, max).
    pub len_min: u16,
    pub len_mode: u16,
    pub len_max: u16,
}

impl SynthAppProfile {
    pub fn validate(&self) -> Result<()> {
        if self.len_min == 0 || self.len_max as usize > VECTOR_LEN {
            return Err(Error::Validation(format!(
                "profile {}: payload length must lie in 1..={VECTOR_LEN}",
                self.id
            )));
        }
        if !(self.len_min <= self.len_mode && self.len_mode <= self.len_max) {
            return Err(Error::Validation(format!(
                "profile {}: need len_min <= len_mode <= len_max",
                self.id
            )));
        }
        if self.pull > 100 {
            return Err(Error::Validation(format!(
                "profile {}: pull is a percentage, got {}",
                self.id, self.pull
            )));
        }
        Ok(())
    }

    fn sample_len<R: Rng>(&self, rng: &mut R) -> usize {
        let (a, m, b) = (
            f64::from(self.len_min),
            f64::from(self.len_mode),
            f64::from(self.len_max),
        );
        if a == b {
            return a as usize;
        }
        let u: f64 = rng.random_range(0.0..1.0);
        let cut = (m - a) / (b - a);
        let x = if u < cut {
            a + (u * (b - a) * (m - a)).sqrt()
        } else {
            b - ((1.0 - u) * (b - a) * (b - m)).sqrt()
        };
        (x.round() as usize).clamp(self.len_min as usize, self.len_max as usize)
    }

    fn sample_payload<R: Rng>(&self, rng: &mut R) -> Vec<u8> {
        let len = self.sample_len(rng);
        let center = f64::from(self.center);
        let pull = f64::from(self.pull) / 100.0;
        let noise = i32::from(self.noise);
        let mut payload = Vec::with_capacity(len);
        let mut value = center + f64::from(rng.random_range(-noise..=noise));
        for pos in 0..len {
            if self.marker_every > 0 && pos % self.marker_every as usize == 0 {
                payload.push(self.marker_value);
                continue;
            }
            let byte = value.round().clamp(0.0, 255.0) as u8;
            payload.push(byte);
            let jitter = f64::from(rng.random_range(-noise..=noise));
            value = center + pull * (f64::from(byte) - center) + jitter;
        }
        payload
    }
}

/// Draws one application's packets from its own derived seed stream.
pub fn generate_packets(
    profile: &SynthAppProfile,
    count: usize,
    seed_val: u64,
) -> Result<Vec<PacketVector>> {
    profile.validate()?;
    if count == 0 {
        return Err(Error::Validation("packet count must be positive".into()));
    }
    let mut rng = seed::rng(seed_val, &format!("synth.app{}", profile.id));
    (0..count)
        .map(|_| PacketVector::from_payload(&profile.sample_payload(&mut rng)))
        .collect()
}

/// Generates `per_class` packets for every profile. Labels follow profile
/// order (0, 1, ...); display names come from the profiles.
pub fn synth_generate(
    profiles: &[SynthAppProfile],
    per_class: usize,
    seed_val: u64,
) -> Result<LabeledDataset> {
    if profiles.len() < 2 {
        return Err(Error::Validation(
            "need at least two profiles to build a labeled dataset".into(),
        ));
    }
    let mut ids = std::collections::BTreeSet::new();
    for p in profiles {
        if !ids.insert(p.id) {
            return Err(Error::Validation(format!("duplicate app id {}", p.id)));
        }
    }
    let mut dataset = LabeledDataset::new();
    for (label, profile) in profiles.iter().enumerate() {
        dataset.set_class_name(label as u32, profile.name.clone());
        for vector in generate_packets(profile, per_class, seed_val)? {
            dataset.push(vector, Some(label as u32));
        }
    }
    Ok(dataset)
}

pub fn profiles_from_json(text: &str) -> Result<Vec<SynthAppProfile>> {
    let profiles: Vec<SynthAppProfile> =
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("profile config: {e}")))?;
    for p in &profiles {
        p.validate()?;
    }
    Ok(profiles)
}

pub fn profiles_to_json(profiles: &[SynthAppProfile]) -> String {
    serde_json::to_string_pretty(profiles).expect("profiles serialize")
}

/// Six well-separated applications. The default open-world scenario treats
/// the first four as existing classes and the last two as unknown.
pub fn default_profiles() -> Vec<SynthAppProfile> {
    let make = |id: u32,
                name: &str,
                center: u8,
                pull: u8,
                noise: u8,
                marker_every: u16,
                marker_value: u8,
                lens: (u16, u16, u16)| SynthAppProfile {
        id,
        name: name.to_string(),
        center,
        pull,
        noise,
        marker_every,
        marker_value,
        len_min: lens.0,
        len_mode: lens.1,
        len_max: lens.2,
    };
    vec![
        make(0, "alpha-stream", 36, 45, 6, 0, 0, (300, 900, 1456)),
        make(1, "bravo-chat", 96, 25, 5, 16, 250, (120, 420, 900)),
        make(2, "charlie-bulk", 150, 60, 7, 24, 8, (600, 1100, 1456)),
        make(3, "delta-voice", 210, 30, 5, 0, 0, (90, 380, 800)),
        make(4, "echo-game", 66, 40, 6, 12, 185, (250, 700, 1300)),
        make(5, "foxtrot-sync", 178, 45, 8, 20, 60, (400, 1000, 1456)),
    ]
}
