mod oracles;

use sib_core::sim::led::group_members;
use sib_core::sim::{led_frame, Color, Effect, EffectSpec, Group};

const N: usize = 6;
const FRAMES: u64 = 100;
// frame_dt = 1/20 s; rates are p/q Hz so phases are exact fractions
const DT: f64 = 0.05;
const BASE: Color = Color::new(200, 100, 50);

/// Hue `num/den` degrees through the reference conversion.
fn hue(num: u64, den: u64) -> Color {
    let (r, g, b) = oracles::hue_to_rgb(num, den);
    Color::new(r, g, b)
}

/// `floor(frame · dt · rate)` with rate = p/q, in integers.
fn whole_periods(frame: u64, p: u64, q: u64) -> u64 {
    frame * p / (20 * q)
}

fn expected(effect: Effect, members: &[bool], frame: u64, p: u64, q: u64) -> Vec<Option<Color>> {
    let mut rank = 0;
    (0..members.len())
        .map(|k| {
            if !members[k] {
                return None;
            }
            rank += 1;
            let on = |yes: bool| if yes { BASE } else { Color::BLACK };
            Some(match effect {
                Effect::Fill => BASE,
                Effect::Fade => {
                    // c · min(frame·p / 20q, 1), halves up
                    let (num, den) = ((frame * p).min(20 * q), 20 * q);
                    let ch = |c: u8| ((2 * c as u64 * num + den) / (2 * den)) as u8;
                    Color::new(ch(BASE.r), ch(BASE.g), ch(BASE.b))
                }
                Effect::Flash => on(whole_periods(frame, p, q) == 0),
                Effect::Blink => on(whole_periods(frame, 2 * p, q) % 2 == 0),
                Effect::BlinkFast => on(whole_periods(frame, 8 * p, q) % 2 == 0),
                Effect::Wipe => {
                    if whole_periods(frame, p, q) >= rank - 1 {
                        BASE
                    } else {
                        return None;
                    }
                }
                Effect::Rainbow => hue(360 * k as u64, members.len() as u64),
                Effect::RainbowFill => {
                    let num = frame * p % (20 * q);
                    hue(360 * num, 20 * q)
                }
            })
        })
        .collect()
}

#[test]
fn every_effect_matches_its_closed_form() {
    assert_eq!(Effect::ALL.len(), 8);
    for &effect in Effect::ALL {
        for (p, q) in [(1, 1), (5, 2), (1, 3)] {
            for group in [Group::All, Group::Even, Group::Odd] {
                let spec = EffectSpec::new(effect, group, BASE, p as f64 / q as f64);
                let members: Vec<bool> = (0..N)
                    .map(|k| match group {
                        Group::All => true,
                        Group::Even => k % 2 == 0,
                        _ => k % 2 == 1,
                    })
                    .collect();
                for frame in 0..FRAMES {
                    assert_eq!(
                        led_frame(&spec, N, frame, DT, 0),
                        expected(effect, &members, frame, p, q),
                        "{effect} rate {p}/{q} {group} frame {frame}"
                    );
                }
            }
        }
    }
}

#[test]
fn rainbow_uses_the_six_primary_hues() {
    let spec = EffectSpec::new(Effect::Rainbow, Group::All, BASE, 1.0);
    let want = [
        Color::new(255, 0, 0),
        Color::new(255, 255, 0),
        Color::new(0, 255, 0),
        Color::new(0, 255, 255),
        Color::new(0, 0, 255),
        Color::new(255, 0, 255),
    ];
    for frame in 0..FRAMES {
        let got: Vec<Color> = led_frame(&spec, N, frame, DT, 0).into_iter().map(Option::unwrap).collect();
        assert_eq!(got, want);
        for (k, c) in got.iter().enumerate() {
            assert_eq!(*c, hue(60 * k as u64, 1));
        }
    }
}

#[test]
fn hue_conversion_matches_reference_everywhere() {
    for tenth in 0..3600 {
        assert_eq!(Color::from_hue(tenth as f64 / 10.0), hue(tenth, 10), "hue {tenth}/10");
    }
}

#[test]
fn random_group_depends_only_on_the_seed() {
    let a = group_members(Group::Random, 32, 9, None, 0.0);
    assert_eq!(a, group_members(Group::Random, 32, 9, None, 0.0));
    assert!(a.iter().any(|&m| m) && a.iter().any(|&m| !m));
    assert!((0..20).any(|s| group_members(Group::Random, 32, s, None, 0.0) != a));
}

#[test]
fn planar_group_picks_the_common_altitude() {
    let z = [1.0, 1.0, 2.0, 1.05, 3.0, 1.0];
    assert_eq!(
        group_members(Group::Formation2D, 6, 0, Some(&z), 0.1),
        vec![true, true, false, true, false, true]
    );
}
