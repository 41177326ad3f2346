use super::*;
use crate::calib::{compensate_stream, CompensationParams};
use approx::assert_relative_eq;

fn prism(rotation_hz: f64) -> PrismConfig {
    PrismConfig::new(1f64.to_radians(), 1.55, rotation_hz).unwrap()
}

fn cfg(r: f64, theta_b_deg: f64, rotation_hz: f64) -> SynthConfig {
    let params = CompensationParams::new(r, theta_b_deg.to_radians(), (60.0, 45.0)).unwrap();
    SynthConfig::new(0.2, prism(rotation_hz), params).unwrap()
}

fn static_edges_spec() -> SceneSpec {
    SceneSpec {
        width: 120,
        height: 90,
        pattern: Pattern::Edges { angles_deg: vec![0.0, 45.0, 90.0, 135.0], spacing_px: 22.0 },
        motion: Motion::Static,
        duration_s: 0.25,
        low: 0.15,
        high: 0.85,
        seed: 11,
    }
}

#[test]
fn static_scene_without_prism_fades_to_silence() {
    let stream = synth_events_from_scene(&static_edges_spec(), 400.0, &cfg(5.0, 30.0, 12.0), false)
        .unwrap();
    assert!(stream.is_empty(), "got {} events", stream.len());
}

#[test]
fn static_scene_with_prism_keeps_producing_events() {
    let stream =
        synth_events_from_scene(&static_edges_spec(), 600.0, &cfg(5.0, 30.0, 12.0), true).unwrap();
    assert!(stream.len() > 1000, "got {} events", stream.len());
    let theta = stream.theta().unwrap();
    assert_eq!(theta.len(), stream.len());
    assert!(theta.iter().all(|t| (0.0..std::f64::consts::TAU).contains(t)));
}

#[test]
fn exact_double_threshold_step_emits_two_events() {
    // One pixel brightens by exactly 2C between two frames.
    let c = 0.2;
    let low = 1.0 - 1e-3;
    let high = (2.0f64 * c).exp() - 1e-3;
    let mut f0 = vec![low; 16];
    let mut f1 = vec![low; 16];
    f0[5] = low;
    f1[5] = high;
    let seq = FrameSequence::new(4, 4, vec![(0, f0), (1000, f1)], 1000.0).unwrap();
    let mut config = cfg(0.0, 0.0, 0.0);
    config.refractory_us = 0;
    let stream = synth_events_from_frames(&seq, &config, false).unwrap();
    assert_eq!(stream.len(), 2);
    assert!(stream.events().iter().all(|e| e.polarity == Polarity::Pos));
    assert!(stream.events().iter().all(|e| (e.x, e.y) == (1, 1)));
    // Crossings interpolate to the C and 2C levels.
    assert_eq!(stream.events()[0].t_us, 500);
    assert_eq!(stream.events()[1].t_us, 1000);
}

#[test]
fn monotone_brightening_emits_only_positive_events() {
    let n = 20;
    let frames: Vec<(u64, Vec<f64>)> = (0..n)
        .map(|k| {
            let level = 0.1 * (1.0 + k as f64);
            (k as u64 * 1000, vec![level; 64])
        })
        .collect();
    let seq = FrameSequence::new(8, 8, frames, 1000.0).unwrap();
    let mut config = cfg(0.0, 0.0, 0.0);
    config.refractory_us = 0;
    let stream = synth_events_from_frames(&seq, &config, false).unwrap();
    assert!(!stream.is_empty());
    assert!(stream.events().iter().all(|e| e.polarity == Polarity::Pos));
}

#[test]
fn refractory_period_suppresses_rapid_repeats() {
    // A 4C jump in one millisecond fires 4 crossings ~250 us apart; a 400 us
    // refractory keeps every other one.
    let c = 0.2;
    let low = 1.0 - 1e-3;
    let high = (4.0f64 * c).exp() - 1e-3;
    let seq = FrameSequence::new(
        4,
        4,
        vec![(0, vec![low; 16]), (1000, {
            let mut f = vec![low; 16];
            f[5] = high;
            f
        })],
        1000.0,
    )
    .unwrap();
    let mut config = cfg(0.0, 0.0, 0.0);
    config.refractory_us = 400;
    let stream = synth_events_from_frames(&seq, &config, false).unwrap();
    assert_eq!(stream.len(), 2);
}

#[test]
fn prism_too_fast_is_rejected() {
    // 40 px radius at 12 Hz needs ~3 kfps; 200 fps trips the check.
    let err = synth_events_from_scene(&static_edges_spec(), 200.0, &cfg(40.0, 0.0, 12.0), true)
        .unwrap_err();
    assert!(matches!(err, TranslateError::PrismTooFast { .. }));
}

#[test]
fn events_path_with_zero_radius_is_identity() {
    let events = vec![
        Event { t_us: 10, x: 5, y: 5, polarity: Polarity::Pos },
        Event { t_us: 20, x: 6, y: 7, polarity: Polarity::Neg },
    ];
    let (stream, _) = EventStream::from_unsorted(120, 90, events.clone()).unwrap();
    let (out, dropped) = synth_ami_from_events(&stream, &cfg(0.0, 77.0, 12.0)).unwrap();
    assert_eq!(dropped, 0);
    assert_eq!(out.events(), &events[..]);
}

#[test]
fn events_path_round_trips_through_compensation() {
    // Relocate, then warp back: each event returns to within nearest-pixel
    // quantization of its source.
    let events: Vec<Event> = (0..500)
        .map(|i| Event {
            t_us: i * 137,
            x: 20 + (i % 60) as u16,
            y: 15 + (i % 40) as u16,
            polarity: Polarity::Pos,
        })
        .collect();
    let (stream, _) = EventStream::from_unsorted(120, 90, events.clone()).unwrap();
    let config = cfg(6.0, 25.0, 12.0);
    let (ami, dropped) = synth_ami_from_events(&stream, &config).unwrap();
    assert_eq!(dropped, 0);
    assert_eq!(ami.len(), events.len());
    let warped = compensate_stream(&ami, &config.params).unwrap();
    // Compare multisets of rounded positions at each timestamp.
    let mut original: Vec<(u64, u16, u16)> = events.iter().map(|e| (e.t_us, e.x, e.y)).collect();
    original.sort_unstable();
    let mut recovered: Vec<(u64, f64, f64)> =
        warped.events().iter().map(|e| (e.t_us, e.x, e.y)).collect();
    recovered.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    for ((t0, x0, y0), (t1, x1, y1)) in original.into_iter().zip(recovered) {
        assert_eq!(t0, t1);
        assert!((x0 as f64 - x1).abs() <= 1.0 && (y0 as f64 - y1).abs() <= 1.0);
    }
}

#[test]
fn combined_path_degenerates_to_each_input_alone() {
    let spec = SceneSpec { duration_s: 0.05, ..static_edges_spec() };
    let seq = generate_scene(&spec, 600.0).unwrap();
    let config = cfg(4.0, 10.0, 12.0);

    let (t0, t1) = seq.time_range().unwrap();
    let empty_events = EventStream::from_sorted(120, 90, Vec::new());
    let frames_only = synth_events_from_frames(&seq, &config, true).unwrap();
    let (combined, _) = synth_ami_from_frames_plus_events(&seq, &empty_events, &config).unwrap();
    assert_eq!(combined.events(), frames_only.events());

    // Events landing between the frame range merge through unchanged when
    // the frame sequence is a single (eventless) frame.
    let lone_frame =
        FrameSequence::new(120, 90, vec![(t0, vec![0.5; 120 * 90])], 600.0).unwrap();
    let sparse: Vec<Event> = (0..20)
        .map(|i| Event {
            t_us: t0 + i * ((t1 - t0) / 20),
            x: 30,
            y: (10 + i) as u16,
            polarity: Polarity::Pos,
        })
        .collect();
    let (sparse_stream, _) = EventStream::from_unsorted(120, 90, sparse).unwrap();
    let (events_only, _) = synth_ami_from_events(&sparse_stream, &config).unwrap();
    let (combined, _) =
        synth_ami_from_frames_plus_events(&lone_frame, &sparse_stream, &config).unwrap();
    assert_eq!(combined.events(), events_only.events());
}

#[test]
fn combined_path_dedups_within_refractory() {
    let frame = vec![0.5; 16];
    let seq = FrameSequence::new(4, 4, vec![(0, frame.clone()), (1000, frame)], 1000.0).unwrap();
    // Duplicate events at the same pixel 50 us apart; default refractory is
    // 100 us, so one survives.
    let dupes = vec![
        Event { t_us: 100, x: 2, y: 2, polarity: Polarity::Pos },
        Event { t_us: 150, x: 2, y: 2, polarity: Polarity::Pos },
    ];
    let (stream, _) = EventStream::from_unsorted(4, 4, dupes).unwrap();
    let config = cfg(0.0, 0.0, 12.0);
    let (combined, _) = synth_ami_from_frames_plus_events(&seq, &stream, &config).unwrap();
    assert_eq!(combined.len(), 1);
    assert_eq!(combined.events()[0].t_us, 100);
}

#[test]
fn combined_path_rejects_disjoint_ranges() {
    let frame = vec![0.5; 16];
    let seq = FrameSequence::new(4, 4, vec![(0, frame.clone()), (1000, frame)], 1000.0).unwrap();
    let late = vec![Event { t_us: 50_000, x: 1, y: 1, polarity: Polarity::Pos }];
    let (stream, _) = EventStream::from_unsorted(4, 4, late).unwrap();
    assert!(matches!(
        synth_ami_from_frames_plus_events(&seq, &stream, &cfg(0.0, 0.0, 12.0)),
        Err(TranslateError::TimeRangeMismatch)
    ));
}

#[test]
fn timestamps_stay_within_source_range_and_sorted() {
    let stream =
        synth_events_from_scene(&static_edges_spec(), 600.0, &cfg(5.0, 0.0, 12.0), true).unwrap();
    let (t0, t1) = stream.time_range().unwrap();
    assert!(t0 <= t1);
    assert!(t1 <= (0.25f64 * 1e6).ceil() as u64 + 2000);
    assert!(stream
        .events()
        .windows(2)
        .all(|w| w[0].sort_key() <= w[1].sort_key()));
}

#[test]
fn synthetic_encoder_covers_and_wraps() {
    let p = prism(12.0);
    let samples = synthetic_encoder(&p, 0, 500_000, 4800.0, 0.0, 1);
    assert!(samples.len() >= 2000);
    assert!(samples.first().unwrap().t_us == 0);
    assert!(samples.last().unwrap().t_us >= 500_000);
    assert!(samples.iter().all(|s| (0.0..std::f64::consts::TAU).contains(&s.theta)));
    assert!(samples.windows(2).all(|w| w[1].t_us > w[0].t_us));
    // Quarter period of 12 Hz rotation sweeps 90 degrees; sample 100 sits
    // exactly at 1/48 s.
    let quarter = &samples[100];
    assert_eq!(quarter.t_us, 20_833);
    assert_relative_eq!(quarter.theta.to_degrees(), 90.0, epsilon = 0.01);
}

#[test]
fn jittered_encoder_still_strictly_increasing() {
    let p = prism(12.0);
    let samples = synthetic_encoder(&p, 0, 200_000, 2000.0, 100.0, 42);
    assert!(samples.windows(2).all(|w| w[1].t_us > w[0].t_us));
}

#[test]
fn noise_injection_adds_the_requested_fraction() {
    let stream =
        synth_events_from_scene(&static_edges_spec(), 600.0, &cfg(5.0, 0.0, 12.0), true).unwrap();
    let noisy = add_uniform_noise(&stream, 0.10, &prism(12.0), 9);
    let expected = stream.len() + (stream.len() as f64 * 0.10).round() as usize;
    assert_eq!(noisy.len(), expected);
    assert!(noisy.theta().is_some());
    assert!(noisy.events().windows(2).all(|w| w[0].sort_key() <= w[1].sort_key()));
}

#[test]
fn pgm_dir_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let frames_dir = dir.path().join("frames");
    let ts = dir.path().join("timestamps.csv");
    let spec = SceneSpec { duration_s: 0.01, ..static_edges_spec() };
    let seq = generate_scene(&spec, 300.0).unwrap();
    seq.write_pgm_dir(&frames_dir, &ts).unwrap();
    let loaded = FrameSequence::from_pgm_dir(&frames_dir, &ts).unwrap();
    assert_eq!(loaded.resolution(), seq.resolution());
    assert_eq!(loaded.num_frames(), seq.num_frames());
    for i in 0..seq.num_frames() {
        assert_eq!(loaded.timestamp_us(i), seq.timestamp_us(i));
        // 8-bit quantization on disk.
        let (_, a) = seq.frame(i);
        let (_, b) = loaded.frame(i);
        for (va, vb) in a.iter().zip(b) {
            assert!((va - vb).abs() < 1.0 / 255.0 + 1e-9);
        }
    }
}
