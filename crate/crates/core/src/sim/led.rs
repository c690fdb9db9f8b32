//! LED effects.
//!
//! An effect is a pure function of the frame index: `t = frame * frame_dt` and
//! `period = 1 / rate`.
//!
//! | effect        | color at time `t`                                       |
//! |---------------|---------------------------------------------------------|
//! | `Fill`        | base color                                              |
//! | `Fade`        | black ramping linearly to the base color over one period, then held |
//! | `Flash`       | base color for one period, then black                   |
//! | `Blink`       | base color when `floor(2·rate·t)` is even, else black    |
//! | `BlinkFast`   | `Blink` at `4·rate`                                     |
//! | `Wipe`        | the k-th member (id order) lights once `floor(rate·t) >= k` |
//! | `Rainbow`     | static hue `360·k/n` for drone `k`                       |
//! | `RainbowFill` | every member shows hue `360·rate·t mod 360`             |
//!
//! Drones outside the effect's group keep their previous color, reported as `None`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Color {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Color {
    pub const BLACK: Color = Color { r: 0, g: 0, b: 0 };

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    fn scaled(self, factor: f64) -> Color {
        let f = factor.clamp(0.0, 1.0);
        let ch = |c: u8| (c as f64 * f + 1e-9).round().min(255.0) as u8;
        Color::new(ch(self.r), ch(self.g), ch(self.b))
    }

    /// Fully saturated, full value color for `hue` degrees.
    pub fn from_hue(hue: f64) -> Color {
        let h = hue.rem_euclid(360.0) / 60.0;
        let x = 1.0 - ((h % 2.0) - 1.0).abs();
        let (r, g, b) = match h as u32 {
            0 => (1.0, x, 0.0),
            1 => (x, 1.0, 0.0),
            2 => (0.0, 1.0, x),
            3 => (0.0, x, 1.0),
            4 => (x, 0.0, 1.0),
            _ => (1.0, 0.0, x),
        };
        // exact half channels must not fall to the wrong side on hue rounding error
        let ch = |v: f64| (v * 255.0 + 1e-9).round().min(255.0) as u8;
        Color::new(ch(r), ch(g), ch(b))
    }
}

macro_rules! named_enum {
    ($name:ident, $what:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name() == s)
                    .ok_or_else(|| format!(concat!("unknown ", $what, " `{}`"), s))
            }
        }
    };
}

named_enum!(Effect, "LED effect", {
    Fill => "fill",
    Fade => "fade",
    Flash => "flash",
    Blink => "blink",
    BlinkFast => "blink_fast",
    Wipe => "wipe",
    Rainbow => "rainbow",
    RainbowFill => "rainbow_fill",
});

named_enum!(Group, "LED group", {
    All => "all",
    Random => "random",
    Even => "even",
    Odd => "odd",
    Formation2D => "formation2d",
});

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSpec {
    pub effect: Effect,
    pub group: Group,
    pub base_color: Color,
    /// Hz, positive.
    pub rate: f64,
}

impl EffectSpec {
    pub fn new(effect: Effect, group: Group, base_color: Color, rate: f64) -> Self {
        Self {
            effect,
            group,
            base_color,
            rate,
        }
    }
}

// absorbs representation error in frame * dt * rate at exact phase boundaries
const PHASE_EPS: f64 = 1e-9;

fn phase(frame: u64, frame_dt: f64, rate: f64) -> f64 {
    frame as f64 * frame_dt * rate + PHASE_EPS
}

/// Which of `n` drones an effect applies to.
///
/// `altitudes` is only consulted for [`Group::Formation2D`], whose members are
/// the drones within `tolerance` of the most common altitude; without
/// altitudes every drone is a member.
pub fn group_members(
    group: Group,
    n: usize,
    seed: u64,
    altitudes: Option<&[f64]>,
    tolerance: f64,
) -> Vec<bool> {
    match group {
        Group::All => vec![true; n],
        Group::Even => (0..n).map(|k| k % 2 == 0).collect(),
        Group::Odd => (0..n).map(|k| k % 2 == 1).collect(),
        Group::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.gen_bool(0.5)).collect()
        }
        Group::Formation2D => match altitudes {
            None => vec![true; n],
            Some(z) => {
                let near = |a: f64, b: f64| (a - b).abs() <= tolerance;
                let mut modal = None;
                let mut best = 0usize;
                for &candidate in z {
                    let count = z.iter().filter(|&&o| near(o, candidate)).count();
                    let better = count > best
                        || (count == best && modal.is_some_and(|m: f64| candidate < m));
                    if better {
                        best = count;
                        modal = Some(candidate);
                    }
                }
                match modal {
                    Some(m) => z.iter().map(|&h| near(h, m)).collect(),
                    None => vec![false; n],
                }
            }
        },
    }
}

/// Colors for one frame given an explicit membership mask.
pub fn frame_colors(spec: &EffectSpec, members: &[bool], frame: u64, frame_dt: f64) -> Vec<Option<Color>> {
    let n = members.len();
    let c = spec.base_color;
    let mut rank = 0u64;
    (0..n)
        .map(|k| {
            if !members[k] {
                return None;
            }
            let my_rank = rank;
            rank += 1;
            let color = match spec.effect {
                Effect::Fill => c,
                Effect::Fade => c.scaled(frame as f64 * frame_dt * spec.rate),
                Effect::Flash => {
                    if phase(frame, frame_dt, spec.rate) < 1.0 {
                        c
                    } else {
                        Color::BLACK
                    }
                }
                Effect::Blink | Effect::BlinkFast => {
                    let rate = if spec.effect == Effect::Blink {
                        spec.rate
                    } else {
                        4.0 * spec.rate
                    };
                    if (2.0 * phase(frame, frame_dt, rate)).floor() as u64 % 2 == 0 {
                        c
                    } else {
                        Color::BLACK
                    }
                }
                Effect::Wipe => {
                    if phase(frame, frame_dt, spec.rate).floor() as u64 >= my_rank {
                        c
                    } else {
                        return None;
                    }
                }
                Effect::Rainbow => Color::from_hue(360.0 * k as f64 / n as f64),
                Effect::RainbowFill => {
                    Color::from_hue(360.0 * (frame as f64 * frame_dt * spec.rate).fract())
                }
            };
            Some(color)
        })
        .collect()
}

/// Colors for frame `frame_index` of `spec` on a swarm of `n` drones.
pub fn led_frame(spec: &EffectSpec, n: usize, frame_index: u64, frame_dt: f64, seed: u64) -> Vec<Option<Color>> {
    let members = group_members(spec.group, n, seed, None, 0.0);
    frame_colors(spec, &members, frame_index, frame_dt)
}
