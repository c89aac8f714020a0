use bems_core::{AttributeValue, RateSchedule};
use bems_home::{
    device_template, span_schedules, CompareOp, FiredAction, HomeCore, HomeState, NewSchedule, ScheduleEdit, Scheduler,
    Trigger,
};
use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use proptest::prelude::*;

fn t0() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2018, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

fn core() -> HomeCore {
    let mut s = HomeState::empty("test", t0());
    for name in ["Living Room Light", "Kitchen Light", "Coffee Maker", "Dishwasher", "EV Charger", "AC", "Kettle"] {
        let d = device_template(name).unwrap();
        s.devices.insert(d.device_id.clone(), d);
    }
    HomeCore::new(s)
}

fn at(minute: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(minute / 60, minute % 60, 0).unwrap()
}

fn brightness_at(minute: u32, level: u32) -> NewSchedule {
    NewSchedule {
        device_id: "living_room_light".into(),
        attribute: "brightness".into(),
        value: (level as f64).into(),
        trigger: Trigger::daily(at(minute)),
        label: None,
    }
}

#[test]
fn coffee_maker_daily_at_seven() {
    let mut c = core();
    let mut s = Scheduler::new(t0());
    let e = s
        .create(
            &c.state,
            NewSchedule {
                device_id: "Coffee Maker".into(),
                attribute: "power".into(),
                value: "on".into(),
                trigger: Trigger::daily(at(7 * 60)),
                label: None,
            },
        )
        .unwrap();
    let fired = s.tick(t0() + Duration::hours(7), &mut c).unwrap();
    assert_eq!(fired.len(), 1);
    assert_eq!(fired[0].instant, t0() + Duration::hours(7));
    assert_eq!(c.state.devices["coffee_maker"].attributes["power"], AttributeValue::Bool(true));
    assert!(s.tick(t0() + Duration::hours(8), &mut c).unwrap().is_empty());
    s.change(&c.state, &e.schedule_id, ScheduleEdit::Disable).unwrap();
    assert!(s.tick(t0() + Duration::days(3), &mut c).unwrap().is_empty());
}

#[test]
fn off_peak_charging_uses_pricing_windows() {
    let mut c = core();
    let mut s = Scheduler::new(t0());
    let (start, end) = RateSchedule::default().off_peak_span().unwrap();
    for new in span_schedules("ev_charger", "power", true.into(), false.into(), start, end, "off-peak charging") {
        s.create(&c.state, new).unwrap();
    }
    // Walk a day in 15-minute steps and compare with the pricing windows 00:00-17:00 and 20:00-24:00.
    let mut now = t0() + Duration::hours(20);
    s.tick(now, &mut c).unwrap();
    for _ in 0..96 {
        now += Duration::minutes(15);
        s.tick(now, &mut c).unwrap();
        let h = now.time().format("%H").to_string().parse::<u32>().unwrap();
        let want = h < 17 || h >= 20;
        assert_eq!(c.state.devices["ev_charger"].attributes["power"], AttributeValue::Bool(want), "{now}");
    }
}

#[test]
fn dishwasher_keeps_kitchen_light_on_once() {
    let mut c = core();
    let mut s = Scheduler::new(t0());
    s.create(
        &c.state,
        NewSchedule {
            device_id: "kitchen_light".into(),
            attribute: "power".into(),
            value: true.into(),
            trigger: Trigger::when("dishwasher", "power", CompareOp::Eq, true.into()),
            label: None,
        },
    )
    .unwrap();
    assert!(s.tick(t0() + Duration::minutes(1), &mut c).unwrap().is_empty());
    c.execute("dishwasher", "power", &true.into(), bems_home::CommandSource::User).unwrap();
    let fired = s.tick(t0() + Duration::minutes(2), &mut c).unwrap();
    assert_eq!(fired.len(), 1);
    assert_eq!(c.state.devices["kitchen_light"].attributes["power"], AttributeValue::Bool(true));
    for m in 3..6 {
        assert!(s.tick(t0() + Duration::minutes(m), &mut c).unwrap().is_empty());
    }
}

#[test]
fn two_triggers_in_one_window_fire_in_time_order() {
    let mut c = core();
    let mut s = Scheduler::new(t0());
    s.create(&c.state, brightness_at(9 * 60, 30)).unwrap();
    s.create(&c.state, brightness_at(8 * 60, 70)).unwrap();
    let fired = s.tick(t0() + Duration::hours(10), &mut c).unwrap();
    let order: Vec<u32> = fired.iter().map(|f| f.value.as_f64().unwrap() as u32).collect();
    assert_eq!(order, vec![70, 30]);
    assert_eq!(c.state.devices["living_room_light"].attributes["brightness"], AttributeValue::Number(30.0));
}

#[test]
fn clock_jump_coalesces_missed_instants() {
    let mut c = core();
    let mut s = Scheduler::new(t0());
    s.create(&c.state, brightness_at(6 * 60, 10)).unwrap();
    let fired = s.tick(t0() + Duration::days(5), &mut c).unwrap();
    assert_eq!(fired.len(), 1);
    assert_eq!(fired[0].coalesced, 5);
    assert_eq!(fired[0].instant, t0() + Duration::days(4) + Duration::hours(6));
}

#[test]
fn offline_target_is_recorded_not_raised() {
    let mut c = core();
    let mut s = Scheduler::new(t0());
    s.create(
        &c.state,
        NewSchedule {
            device_id: "kettle".into(),
            attribute: "power".into(),
            value: true.into(),
            trigger: Trigger::daily(at(60)),
            label: None,
        },
    )
    .unwrap();
    let fired = s.tick(t0() + Duration::hours(2), &mut c).unwrap();
    assert!(!fired[0].ok);
    assert!(fired[0].error.as_deref().unwrap().contains("offline"));
}

#[test]
fn crud_example_leaves_two_edited_entries() {
    let c = core();
    let mut s = Scheduler::new(t0());
    let a = s.create(&c.state, brightness_at(60, 10)).unwrap().schedule_id;
    let b = s.create(&c.state, brightness_at(120, 20)).unwrap().schedule_id;
    let d = s.create(&c.state, brightness_at(180, 30)).unwrap().schedule_id;
    let edit = ScheduleEdit::Modify { trigger: None, attribute: None, value: Some(25.0.into()) };
    s.change(&c.state, &b, edit).unwrap();
    assert_eq!(s.change(&c.state, &d, ScheduleEdit::Delete).unwrap(), None);
    let left = s.sync(None);
    assert_eq!(left.iter().map(|e| e.schedule_id.as_str()).collect::<Vec<_>>(), vec![a.as_str(), b.as_str()]);
    assert_eq!(left[1].value, AttributeValue::Number(25.0));
    assert!(s.sync(Some("coffee_maker")).is_empty());
    assert!(s.change(&c.state, &d, ScheduleEdit::Delete).is_err());
}

fn fired_keys(f: &[FiredAction]) -> Vec<(String, NaiveDateTime)> {
    f.iter().map(|a| (a.schedule_id.clone(), a.instant)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn day_replay_fires_each_trigger_once_per_instant(
        minutes in prop::collection::vec(0u32..1440, 1..12),
        steps in prop::collection::vec(1u32..=1440, 2..60),
    ) {
        // Windows no longer than a day, so no instant is coalesced with another.
        let mut cuts = Vec::new();
        let mut acc = 0;
        for st in steps {
            acc += st;
            if acc >= 2880 {
                break;
            }
            cuts.push(acc);
        }
        let mut c = core();
        let mut s = Scheduler::new(t0());
        let mut ids = Vec::new();
        for (k, m) in minutes.iter().enumerate() {
            ids.push(s.create(&c.state, brightness_at(*m, (k * 7 % 100) as u32)).unwrap().schedule_id);
        }
        let mut last = cuts.last().copied().unwrap_or(0);
        while last + 1440 < 2880 {
            last += 1440;
            cuts.push(last);
        }
        cuts.push(2880);
        let mut all = Vec::new();
        for cut in cuts {
            let fired = s.tick(t0() + Duration::minutes(cut as i64), &mut c).unwrap();
            all.extend(fired);
        }
        // Oracle: every (entry, day, time) in (t0, t0 + 2 days], sorted by instant then creation order.
        let mut want: Vec<(NaiveDateTime, usize)> = Vec::new();
        for day in 0..3i64 {
            for (k, m) in minutes.iter().enumerate() {
                let inst = t0() + Duration::days(day) + Duration::minutes(*m as i64);
                if inst > t0() && inst <= t0() + Duration::days(2) {
                    want.push((inst, k));
                }
            }
        }
        want.sort();
        let mut got = fired_keys(&all);
        let want_keys: Vec<(String, NaiveDateTime)> = want.iter().map(|(i, k)| (ids[*k].clone(), *i)).collect();
        prop_assert_eq!(&got, &want_keys);
        got.dedup();
        prop_assert_eq!(got.len(), want_keys.len());
        prop_assert!(all.iter().all(|f| f.coalesced == 1 && f.ok));
    }

    #[test]
    fn edge_rules_fire_once_per_rising_edge(toggles in prop::collection::vec(any::<bool>(), 1..60)) {
        let mut c = core();
        let mut s = Scheduler::new(t0());
        s.create(&c.state, NewSchedule {
            device_id: "kitchen_light".into(),
            attribute: "power".into(),
            value: true.into(),
            trigger: Trigger::when("dishwasher", "power", CompareOp::Eq, true.into()),
            label: None,
        }).unwrap();
        let mut prev = false;
        let mut want = 0;
        let mut got = 0;
        for (k, on) in toggles.iter().enumerate() {
            c.execute("dishwasher", "power", &(*on).into(), bems_home::CommandSource::User).unwrap();
            if *on && !prev {
                want += 1;
            }
            prev = *on;
            got += s.tick(t0() + Duration::minutes(k as i64 + 1), &mut c).unwrap().len();
        }
        prop_assert_eq!(got, want);
    }

    #[test]
    fn deleted_entries_behave_as_never_created(
        specs in prop::collection::vec((0u32..1440, 0u32..=100, 0u8..4), 1..10),
    ) {
        // Each spec is (minute, level, fate) with fate 0 keep, 1 delete, 2 disable, 3 retime by +17 minutes.
        let base = core();
        let mut with_crud = Scheduler::new(t0());
        let mut ids = Vec::new();
        for (m, lvl, _) in &specs {
            ids.push(with_crud.create(&base.state, brightness_at(*m, *lvl)).unwrap().schedule_id);
        }
        let mut clean = Scheduler::new(t0());
        for ((m, lvl, fate), id) in specs.iter().zip(&ids) {
            match fate {
                1 => { with_crud.change(&base.state, id, ScheduleEdit::Delete).unwrap(); }
                2 => { with_crud.change(&base.state, id, ScheduleEdit::Disable).unwrap(); }
                3 => {
                    let edit = ScheduleEdit::Modify { trigger: Some(Trigger::daily(at((m + 17) % 1440))), attribute: None, value: None };
                    with_crud.change(&base.state, id, edit).unwrap();
                    clean.create(&base.state, brightness_at((m + 17) % 1440, *lvl)).unwrap();
                }
                _ => { clean.create(&base.state, brightness_at(*m, *lvl)).unwrap(); }
            }
        }
        let (mut a, mut b) = (base.clone(), base.clone());
        for h in 1..=48 {
            let now = t0() + Duration::hours(h);
            let fa = with_crud.tick(now, &mut a).unwrap();
            let fb = clean.tick(now, &mut b).unwrap();
            let va: Vec<_> = fa.iter().map(|f| (f.instant, f.value.clone())).collect();
            let vb: Vec<_> = fb.iter().map(|f| (f.instant, f.value.clone())).collect();
            prop_assert_eq!(va, vb);
            prop_assert_eq!(&a.state, &b.state);
        }
    }
}
