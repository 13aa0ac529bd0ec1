use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;

use danmaku_mod_core::emotion::LexiconClassifier;
use danmaku_mod_core::engine::{
    plan_captions, plan_from_jsonl, plan_to_jsonl, AdminSettings, EngineResources, LiveEngine,
    StylePolicy, WindowDuration, WindowOutcome,
};
use danmaku_mod_core::generate::CaptionGenerator;
use danmaku_mod_core::ingest::{decode_event, encode_event, parse_bilibili_xml, StreamEvent};
use danmaku_mod_core::{DanmakuLog, DanmakuMessage};

const TEXTS: [&str; 10] = ["哈哈哈", "气死我了", "什么情况", "好可爱啊", "嗯", "卧槽居然", "垃圾", "原来如此", "呜呜呜", "666"];

fn msg(id: u64, t: u64, text: &str) -> DanmakuMessage {
    DanmakuMessage {
        id,
        video_id: "p".into(),
        video_time_ms: t,
        wall_time_ms: 0,
        text: text.into(),
        user_hash: String::new(),
        display_color: 0xFFFFFF,
        display_mode: Default::default(),
    }
}

fn arb_log() -> impl Strategy<Value = DanmakuLog> {
    prop::collection::vec((0u64..90_000, 0usize..TEXTS.len()), 0..80).prop_map(|raw| {
        let msgs = raw.into_iter().enumerate().map(|(i, (t, k))| msg(i as u64, t, TEXTS[k])).collect();
        DanmakuLog::new("p", msgs).unwrap()
    })
}

fn arb_duration() -> impl Strategy<Value = WindowDuration> {
    prop_oneof![Just(WindowDuration::Eight), Just(WindowDuration::Twelve)]
}

fn resources(seed: u64) -> EngineResources {
    EngineResources {
        classifier: Arc::new(LexiconClassifier::default()),
        model: None,
        generator: CaptionGenerator::template_only(),
        seed,
    }
}

fn settings(duration: WindowDuration, theta: f64) -> AdminSettings {
    AdminSettings { window_duration_s: duration, comment_threshold: theta, ..Default::default() }
}

fn run_live(engine: &mut LiveEngine, log: &DanmakuLog) -> Vec<WindowOutcome> {
    let mut out = Vec::new();
    for m in log.messages() {
        out.extend(engine.push(m.clone()).closed);
    }
    out.extend(engine.flush());
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raising_threshold_never_adds_captions(log in arb_log(), d in arb_duration(), a in 0.0f64..6.0, b in 0.0f64..6.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let classifier = LexiconClassifier::default();
        let generator = CaptionGenerator::template_only();
        let fired = |theta| -> BTreeSet<u64> {
            plan_captions(&log, &settings(d, theta), None, &classifier, &generator, 1).iter().map(|e| e.window_index).collect()
        };
        prop_assert!(fired(hi).is_subset(&fired(lo)));
    }

    #[test]
    fn at_most_one_caption_per_nonempty_window(log in arb_log(), d in arb_duration(), theta in 0.0f64..4.0) {
        let plan = plan_captions(&log, &settings(d, theta), None, &LexiconClassifier::default(), &CaptionGenerator::template_only(), 3);
        let windows: BTreeSet<u64> = plan.iter().map(|e| e.window_index).collect();
        prop_assert_eq!(windows.len(), plan.len());
        let occupied: BTreeSet<u64> = log.messages().iter().map(|m| m.video_time_ms / d.millis()).collect();
        prop_assert!(windows.is_subset(&occupied));
        for e in &plan {
            prop_assert!(e.triggered_by.weighted_frequency >= theta);
            prop_assert_eq!(e.caption.render.display_start_ms, e.triggered_by.end_ms);
        }
    }

    #[test]
    fn live_engine_matches_batch_plan(log in arb_log(), d in arb_duration(), seed in 0u64..1000) {
        let s = settings(d, 1.0);
        let batch = plan_captions(&log, &s, None, &LexiconClassifier::default(), &CaptionGenerator::template_only(), seed);
        let mut engine = LiveEngine::new(resources(seed), s);
        let live: Vec<_> = run_live(&mut engine, &log).into_iter().filter_map(|o| o.entry).collect();
        prop_assert_eq!(plan_to_jsonl(&live), plan_to_jsonl(&batch));
    }

    #[test]
    fn settings_change_never_rewrites_closed_windows(log in arb_log(), d in arb_duration(), split in 0usize..80) {
        let before = settings(d, 1.0);
        let after = AdminSettings {
            window_duration_s: WindowDuration::Twelve,
            comment_threshold: 0.0,
            style_policy: StylePolicy::Original,
            ..Default::default()
        };
        let split = split.min(log.len());
        let mut reference = LiveEngine::new(resources(5), before.clone());
        let reference_out = run_live(&mut reference, &log);

        let mut engine = LiveEngine::new(resources(5), before);
        let mut closed_before = Vec::new();
        for m in &log.messages()[..split] {
            closed_before.extend(engine.push(m.clone()).closed);
        }
        let open = engine.open_window();
        engine.update_settings(after);
        let mut rest = Vec::new();
        for m in &log.messages()[split..] {
            rest.extend(engine.push(m.clone()).closed);
        }
        rest.extend(engine.flush());

        // Everything closed before the change, and the window open at the
        // time, is processed exactly as without the change.
        prop_assert_eq!(&closed_before[..], &reference_out[..closed_before.len()]);
        if let Some(open) = open {
            prop_assert_eq!(&rest[0], &reference_out[closed_before.len()]);
            prop_assert_eq!(rest[0].summary.window_index, open.index);
        }
        for o in rest.iter().skip(usize::from(open.is_some())) {
            prop_assert_eq!(o.summary.end_ms - o.summary.start_ms, 12_000);
        }
        let seen: usize = closed_before.iter().chain(&rest).map(|o| o.summary.message_count).sum();
        prop_assert_eq!(seen, log.len());
    }

    #[test]
    fn plans_and_caption_events_round_trip(log in arb_log(), d in arb_duration()) {
        let plan = plan_captions(&log, &settings(d, 0.5), None, &LexiconClassifier::default(), &CaptionGenerator::template_only(), 9);
        let text = plan_to_jsonl(&plan);
        let back = plan_from_jsonl(&text).unwrap();
        prop_assert_eq!(plan_to_jsonl(&back), text);
        for (seq, e) in plan.iter().enumerate() {
            let event = StreamEvent::Caption { seq: seq as u64, payload: e.caption.clone() };
            let line = encode_event(&event);
            prop_assert_eq!(decode_event(&line).unwrap(), event);
        }
    }

    #[test]
    fn xml_logs_parse_back(entries in prop::collection::vec((0u32..600_000, 0usize..TEXTS.len(), 0u32..0xFFFFFF), 1..40)) {
        let body: String = entries
            .iter()
            .enumerate()
            .map(|(i, (ms, k, color))| {
                format!(r#"<d p="{}.{:03},1,25,{color},1700000000,0,u{i},{}">{}</d>"#, ms / 1000, ms % 1000, i + 1, TEXTS[*k])
            })
            .collect();
        let xml = format!(r#"<?xml version="1.0" encoding="UTF-8"?><i><chatid>77</chatid>{body}</i>"#);
        let report = parse_bilibili_xml(xml.as_bytes()).unwrap();
        prop_assert_eq!(report.skipped, 0);
        prop_assert_eq!(report.log.len(), entries.len());
        for m in report.log.messages() {
            let (ms, k, color) = entries[m.id as usize - 1];
            prop_assert_eq!(m.video_time_ms, ms as u64);
            prop_assert_eq!(m.text.as_str(), TEXTS[k]);
            prop_assert_eq!(m.display_color, color);
            prop_assert_eq!(m.video_id.as_str(), "77");
        }
        prop_assert!(report.log.messages().windows(2).all(|w| (w[0].video_time_ms, w[0].id) < (w[1].video_time_ms, w[1].id)));
    }
}
