use bems_agent::*;
use bems_core::ingestion::synth_month;
use bems_core::{BuildingProfile, IntentLabel, Secondary, TokenUsage, Window};
use bems_home::Outcome;
use proptest::prelude::*;
use serde_json::{json, Value};

fn env() -> (AgentEnv, AgentProfile) {
    let profile = BuildingProfile::preset("TX-01").unwrap();
    let series = synth_month(11, &profile, profile.days, profile.season).unwrap();
    (AgentEnv::from_profile(profile.clone(), series), AgentProfile::new(profile))
}

fn provider(id: &str, script: Script) -> ScriptedProvider {
    let mut f = Fixture::default();
    f.insert(id, script);
    ScriptedProvider::new(f)
}

fn run(env: &AgentEnv, profile: &AgentProfile, id: &str, script: Script) -> AgentRun {
    let query = script.query.clone();
    run_query(&query, env, profile, &provider(id, script), &RunOptions::deterministic(Some(id.into())))
}

fn assert_well_formed(r: &AgentRun) {
    assert_eq!(r.state, RunState::End);
    assert_eq!(r.transitions.first().map(|t| t.from), Some(RunState::Queued));
    for w in r.transitions.windows(2) {
        assert_eq!(w[0].to, w[1].from);
    }
    assert!(r.transitions.iter().all(|t| t.from.can_go(t.to)));
    assert_eq!(r.transitions.iter().filter(|t| t.to == RunState::End).count(), 1);
    assert_eq!(r.transitions.last().unwrap().to, RunState::End);
    let sum: TokenUsage = r.turns.iter().map(|t| t.usage).sum();
    assert_eq!(r.token_usage, sum);
    for c in &r.tool_calls {
        assert_eq!(r.turns[c.turn].outcome, TurnOutcome::ToolCalls);
    }
}

const TABLE: [(&str, Secondary); 24] = [
    ("How much energy did I use last month?", Secondary::HistoricalEnergy),
    ("What is the predicted energy use for the next month?", Secondary::EnergyPrediction),
    ("How can I reduce my energy consumption during peak hours?", Secondary::EnergyOptimization),
    ("Based on my past month energy use, can you give me some suggestions to save energy?", Secondary::EnergySuggestions),
    ("Can you show me a pie chart of my energy energy use by device or system?", Secondary::EnergyVisualization),
    ("How much did I spend on AC last month?", Secondary::CostInformation),
    ("How much money will I save from my PV panels next month?", Secondary::CostPrediction),
    ("Based on my past month energy cost, can you give me some suggestions to save money on energy?", Secondary::CostSuggestions),
    ("Show me the cost I spent on charging my car over the past month in a plot.", Secondary::CostVisualization),
    ("What is my PV panel meter reading?", Secondary::MeterStatus),
    ("Is the living room light currently on?", Secondary::DeviceStatus),
    ("Set the AC to 20 degrees.", Secondary::DeviceOperation),
    ("Turn off all kitchen appliances.", Secondary::GroupManagement),
    ("Set the living room light to a brightness level good for reading.", Secondary::CustomConfiguration),
    ("Have I set a schedule for my car charger?", Secondary::ScheduleInformation),
    ("Turn on my coffee maker at 7 in the morning.", Secondary::GeneralScheduling),
    ("If the dishwasher is on, keep the kitchen light on.", Secondary::ConditionalAutomation),
    ("Remove the schedule I set for AC.", Secondary::ScheduleManagement),
    ("What device do I usually turn on at sunset time?", Secondary::MemoryInformation),
    ("Remember that I usually like to have the fan on for my AC.", Secondary::MemoryCreation),
    ("Forget my preference for the AC fan mode settings.", Secondary::MemoryManagement),
    ("Guide me through the process of controlling my smart devices.", Secondary::Guidance),
    ("My kettle doesn't work, can you help me check it?", Secondary::Troubleshooting),
    ("What should I do if I want to add a new device to my smart network?", Secondary::Faq),
];

#[test]
fn rule_classifier_labels_every_example_query() {
    for (q, s) in TABLE {
        assert_eq!(rule_classifier(q), IntentLabel::of(s), "{q}");
    }
    assert_eq!(rule_classifier("blorp fizzle wug"), IntentLabel::of(Secondary::Faq));
}

fn brightness_script() -> Script {
    Script::new("Set the living room light to a brightness level good for reading.", "The living room light is now at {{2/device/attributes/brightness}}% brightness, which works well for reading.")
        .classify("Device Status & Control", "Device Custom Configurations", "brightness change")
        .turn(vec![ScriptedCall::new("devices.sync", json!({}))])
        .turn(vec![ScriptedCall::new("devices.query", json!({"device": "Living Room Light"}))])
        .turn(vec![ScriptedCall::new(
            "devices.execute",
            json!({"device": "{{1/device/device_id}}", "attribute": "brightness", "value": 75}),
        )])
}

#[test]
fn brightness_runs_sync_query_execute() {
    let (env, profile) = env();
    let r = run(&env, &profile, "q1", brightness_script());
    assert_well_formed(&r);
    assert_eq!(r.tool_names(), ["devices.sync", "devices.query", "devices.execute"]);
    assert!(r.tool_calls.iter().all(|c| c.ok), "{:?}", r.tool_calls);
    assert_eq!(env.home.devices_query("living_room_light").unwrap().attributes["brightness"].as_f64(), Some(75.0));
    assert_eq!(r.response.response_type, ResponseType::Answer);
    assert!(r.response.text.contains("75"), "{}", r.response.text);
    assert_eq!(r.classification.as_ref().and_then(|c| c.label()), Some(IntentLabel::of(Secondary::CustomConfiguration)));
    assert_eq!(r.state_changes.len(), 1);
    assert!(r.to_markdown().contains("devices.execute"));
    // Transitions: queued, then three requires_action round trips for the tools plus one for classification.
    assert_eq!(r.transitions.iter().filter(|t| t.to == RunState::RequiresAction).count(), 4);
}

#[test]
fn offline_kettle_ends_advisory_without_state_change() {
    let (env, profile) = env();
    let script = Script::new("Turn on the kettle.", "I couldn't turn on the kettle: {{2/error/message}}. Please check the kettle's power and network settings.")
        .classify("Device Status & Control", "Device General Operation", "")
        .turn(vec![ScriptedCall::new("devices.sync", json!({}))])
        .turn(vec![ScriptedCall::new("devices.query", json!({"device": "Kettle"}))])
        .turn(vec![ScriptedCall::new("devices.execute", json!({"device": "kettle", "attribute": "power", "value": true}))]);
    let before = env.home.devices_query("kettle").unwrap();
    let r = run(&env, &profile, "k", script);
    assert_well_formed(&r);
    assert_eq!(r.response.response_type, ResponseType::Advisory);
    assert_eq!(env.home.devices_query("kettle").unwrap(), before);
    assert!(r.state_changes.iter().all(|a| a.applied.is_none() && matches!(a.outcome, Outcome::Rejected { .. })));
    assert!(!r.tool_calls[2].ok);
}

#[test]
fn memory_query_may_skip_classification() {
    let (env, profile) = env();
    let script = Script::new("What are my AC preferences?", "You have {{0/memories}} saved.")
        .turn(vec![ScriptedCall::new("memory.sync", json!({"device": "AC"}))]);
    let r = run(&env, &profile, "m", script);
    assert_well_formed(&r);
    assert!(!r.classification_executed());
    assert_eq!(r.tool_names(), ["memory.sync"]);
}

#[test]
fn schema_violations_and_unknown_tools_are_surfaced_not_run() {
    let (env, profile) = env();
    let before = env.home.snapshot();
    let script = Script::new("Set the AC to 20 degrees.", "Done?")
        .turn(vec![
            ScriptedCall::new("devices.execute", json!({"device": "ac", "attribute": "setpoint"})),
            ScriptedCall::new("devices.execute", json!({"device": "ac", "attribute": "setpoint", "value": 20, "force": true})),
            ScriptedCall::new("shell.exec", json!({"cmd": "rm -rf /"})),
        ]);
    let r = run(&env, &profile, "s", script);
    assert_well_formed(&r);
    let codes: Vec<_> = r.tool_calls.iter().map(|c| c.error_code.clone().unwrap()).collect();
    assert_eq!(codes, ["invalid_arguments", "invalid_arguments", "unknown_tool"]);
    assert!(r.state_changes.is_empty());
    assert_eq!(env.home.snapshot(), before);
    assert_eq!(r.response.response_type, ResponseType::Advisory);
}

#[test]
fn invalid_classification_is_a_failure_record() {
    let (env, profile) = env();
    let script = Script::new("How much energy did I use last month?", "ok").classify("Memory", "Historical Energy Data", "");
    let r = run(&env, &profile, "c", script);
    assert!(r.classification_executed());
    assert!(matches!(r.classification, Some(ClassificationRecord::Failure { .. })));
    let script = Script::new("x", "ok").classify("Energy", "Nope", "");
    let r = run(&env, &profile, "c2", script);
    assert!(matches!(r.classification, Some(ClassificationRecord::Failure { .. })));
}

#[test]
fn standalone_classification() {
    let (_, profile) = env();
    let p = provider("x", Script::new("What is my PV panel meter reading?", "").classify("Device Status & Control", "Meter Status Check", "meter"));
    let (label, why) = classify_intent("What is my PV panel meter reading?", &profile, &p).unwrap();
    assert_eq!(label, IntentLabel::of(Secondary::MeterStatus));
    assert_eq!(why, "meter");
    let p = provider("x", Script::new("What is my PV panel meter reading?", "").classify("Memory", "Meter Status Check", ""));
    assert!(matches!(classify_intent("What is my PV panel meter reading?", &profile, &p), Err(ClassifyError::Invalid { .. })));
    let p = provider("x", Script::new("other", ""));
    assert!(matches!(classify_intent("What is my PV panel meter reading?", &profile, &p), Err(ClassifyError::Provider(_))));
}

struct Down;

impl Provider for Down {
    fn chat(&self, _: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        Err(ProviderError::Unavailable("connection refused".into()))
    }
}

#[test]
fn provider_failure_ends_in_error_response() {
    let (env, profile) = env();
    let r = run_query("hello", &env, &profile, &Down, &RunOptions::deterministic(None));
    assert_well_formed(&r);
    assert_eq!(r.response.response_type, ResponseType::Error);
    assert_eq!(r.error.as_ref().unwrap().code, "provider_unavailable");
    let states: Vec<_> = r.transitions.iter().map(|t| t.to).collect();
    assert_eq!(states, [RunState::InProgress, RunState::End]);
}

#[test]
fn fixture_miss_is_an_error_run() {
    let (env, profile) = env();
    let r = run_query("unscripted", &env, &profile, &ScriptedProvider::default(), &RunOptions::deterministic(Some("nope".into())));
    assert_eq!(r.error.unwrap().code, "fixture_miss");
}

#[test]
fn runaway_tool_loops_stop_at_max_turns() {
    let (env, profile) = env();
    let mut script = Script::new("loop", "never");
    for _ in 0..20 {
        script = script.turn(vec![ScriptedCall::new("devices.sync", json!({}))]);
    }
    let p = provider("l", script);
    let opts = RunOptions { max_turns: 5, ..RunOptions::deterministic(Some("l".into())) };
    let r = run_query("loop", &env, &profile, &p, &opts);
    assert_well_formed(&r);
    assert_eq!(r.turns.len(), 5);
    assert_eq!(r.error.unwrap().code, "max_turns");
}

#[test]
fn scripted_runs_are_reproducible() {
    let a = {
        let (env, profile) = env();
        run(&env, &profile, "q1", brightness_script()).to_json()
    };
    let b = {
        let (env, profile) = env();
        run(&env, &profile, "q1", brightness_script()).to_json()
    };
    assert_eq!(a, b);
    assert!(a["wall_time_ms"].as_u64().unwrap() > 0);
}

#[test]
fn clarifying_question_without_action() {
    let (env, profile) = env();
    let script = Script::new("Set the AC to 21 degrees when I go to sleep.", "What time do you usually go to sleep?")
        .classify("Device Scheduling & Automation", "General Scheduling", "");
    let r = run(&env, &profile, "z", script);
    assert_eq!(r.response.response_type, ResponseType::NeedsClarification);
}

#[test]
fn analysis_tool_results_match_the_engines() {
    let (env, profile) = env();
    let script = Script::new("pie", "done")
        .turn(vec![
            ScriptedCall::new("analysis.run", json!({"kind": "device_breakdown", "window": "month", "chart": "pie"})),
            ScriptedCall::new("analysis.run", json!({"kind": "peak_hours", "k": 3})),
            ScriptedCall::new("analysis.run", json!({"kind": "cost", "window": "all"})),
        ]);
    let r = run(&env, &profile, "a", script);
    assert!(r.tool_calls.iter().all(|c| c.ok), "{:?}", r.tool_calls);
    let pie = &r.response.artifacts[0];
    assert_eq!(pie.kind, ChartKind::Pie);
    pie.validate().unwrap();
    assert!((pie.shares().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(r.tool_calls[1].result["result"]["hours"].as_array().unwrap().len(), 3);
    let oracle = bems_core::tariff::cost(&env.series, &env.rates, &Window::parse("all", &env.series).unwrap()).unwrap();
    assert_eq!(r.tool_calls[2].result["result"]["gross_total"].as_f64(), Some(oracle.gross_total.as_decimal()));
    let doc = pie.to_document();
    assert_eq!(doc["mark"], "arc");
}

#[test]
fn pricing_tool_reads_the_document_or_fails() {
    let (env, profile) = env();
    let s = || Script::new("p", "done").turn(vec![ScriptedCall::new("pricing.search", json!({"topic": "EV"}))]);
    let r = run(&env, &profile, "p", s());
    assert_eq!(r.tool_calls[0].result["focus"]["window"], "00:00-06:00");
    let env = env.with_pricing_document(None);
    let r = run(&env, &profile, "p", s());
    assert_eq!(r.tool_calls[0].error_code.as_deref(), Some("pricing_missing"));
}

#[test]
fn schedule_and_memory_tools_round_trip() {
    let (env, profile) = env();
    let script = Script::new("s", "ok")
        .turn(vec![ScriptedCall::new(
            "schedule.create",
            json!({"device": "EV Charger", "attribute": "power", "value": true,
                   "trigger": {"type": "time", "at": "20:00", "recurrence": "daily"},
                   "until": {"at": "17:00", "value": false}}),
        )])
        .turn(vec![ScriptedCall::new("schedule.sync", json!({"device": "EV Charger"}))])
        .turn(vec![ScriptedCall::new("schedule.change", json!({"schedule_id": "{{1/schedules/0/schedule_id}}", "action": "disable"}))])
        .turn(vec![ScriptedCall::new("memory.create", json!({"utterance": "Remember that I like the coffee maker turned on at 7 in the morning."}))])
        .turn(vec![ScriptedCall::new("memory.change", json!({"memory_id": "{{3/memory/memory_id}}", "action": "delete"}))]);
    let r = run(&env, &profile, "s", script);
    assert!(r.tool_calls.iter().all(|c| c.ok), "{:#?}", r.tool_calls);
    assert_eq!(r.tool_calls[0].result["created"].as_array().unwrap().len(), 2);
    assert_eq!(env.home.schedule_sync(Some("ev_charger")).iter().filter(|e| e.enabled).count(), 1);
    assert!(env.memory_snapshot().sync(&bems_home::MemoryFilter::All).is_empty());
}

#[test]
fn group_commands_report_each_device() {
    let (env, profile) = env();
    let script = Script::new("g", "ok").turn(vec![ScriptedCall::new(
        "devices.execute",
        json!({"selector": {"by": "tag", "value": "kitchen_appliance"}, "attribute": "power", "value": false}),
    )]);
    let r = run(&env, &profile, "g", script);
    let outcomes = r.tool_calls[0].result["outcomes"].as_array().unwrap();
    assert!(outcomes.len() >= 4);
    assert!(outcomes.iter().any(|o| o["ok"] == false && o["name"] == "Kettle"));
}

fn arb_call() -> impl Strategy<Value = ScriptedCall> {
    prop_oneof![
        Just(ScriptedCall::new("devices.sync", json!({}))),
        Just(ScriptedCall::new("meters.query", json!({}))),
        Just(ScriptedCall::new("devices.query", json!({"device": "AC"}))),
        Just(ScriptedCall::new("devices.query", json!({"device": "Toaster"}))),
        Just(ScriptedCall::new("devices.execute", json!({"device": "ac", "attribute": "setpoint", "value": 99}))),
        Just(ScriptedCall::new("bogus.tool", json!({}))),
        Just(ScriptedCall::new("schedule.sync", json!({}))),
        Just(ScriptedCall::new("memory.sync", json!({"text": "coffee"}))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_run_is_well_formed(
        classify in any::<bool>(),
        turns in prop::collection::vec(prop::collection::vec(arb_call(), 1..3), 0..5),
        final_q in any::<bool>(),
    ) {
        let (env, profile) = env();
        let mut script = Script::new("q", if final_q { "Which one?" } else { "Done." });
        if classify {
            script = script.classify("Device Status & Control", "Device Status Check", "");
        }
        script.turns = turns.clone();
        let r = run(&env, &profile, "q", script);
        assert_well_formed(&r);
        prop_assert_eq!(r.tool_calls.len(), turns.iter().map(Vec::len).sum::<usize>());
        prop_assert_eq!(r.classification_executed(), classify);
        prop_assert!(r.state_changes.iter().all(|a| a.applied.is_none()));
    }
}

mod live {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::time::Duration;

    /// Serves one request with `status` and `body`, returning what the client sent.
    fn serve_once(status: u16, body: Value, delay: Duration) -> (String, std::thread::JoinHandle<(String, Value)>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        let h = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line.to_ascii_lowercase().starts_with("content-length:") {
                    len = line[15..].trim().parse().unwrap();
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                head.push_str(&line);
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            std::thread::sleep(delay);
            let text = body.to_string();
            let mut stream = stream;
            let _ = write!(stream, "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}", text.len());
            (head, serde_json::from_slice(&buf).unwrap())
        });
        (url, h)
    }

    fn request() -> ChatRequest {
        ChatRequest {
            model: "m".into(),
            messages: vec![Message::system("s"), Message::user("Turn on the bedroom light.")],
            tools: ToolRegistry::shared().specs(),
            query_id: None,
        }
    }

    fn config(url: String, secs: u64) -> LiveConfig {
        LiveConfig { base_url: url, api_key: "sk-secret".into(), timeout: Duration::from_secs(secs) }
    }

    #[test]
    fn tool_calls_and_usage_round_trip() {
        let body = json!({
            "choices": [{"message": {"role": "assistant", "content": null, "tool_calls": [
                {"id": "c1", "type": "function", "function": {"name": "devices_sync", "arguments": "{}"}}
            ]}}],
            "usage": {"prompt_tokens": 120, "completion_tokens": 7, "total_tokens": 127}
        });
        let (url, h) = serve_once(200, body, Duration::ZERO);
        let p = LiveProvider::new(config(url, 5));
        let resp = p.chat(&request()).unwrap();
        let (head, sent) = h.join().unwrap();
        assert!(head.contains("Bearer sk-secret"));
        assert_eq!(sent["tools"][1]["function"]["name"], "analysis_run");
        assert_eq!(resp.usage, TokenUsage::new(120, 7));
        match resp.reply {
            Reply::ToolCalls { calls } => assert_eq!(calls[0].name, "devices.sync"),
            other => panic!("{other:?}"),
        }
        assert!(!format!("{p:?}").contains("sk-secret"));
    }

    #[test]
    fn final_text_reply() {
        let body = json!({"choices": [{"message": {"role": "assistant", "content": "Hi."}}]});
        let (url, _h) = serve_once(200, body, Duration::ZERO);
        let resp = LiveProvider::new(config(url, 5)).chat(&request()).unwrap();
        assert_eq!(resp.reply, Reply::Final { text: "Hi.".into(), response_type: None });
    }

    #[test]
    fn server_errors_and_timeouts_map_to_provider_errors() {
        let (url, _h) = serve_once(503, json!({}), Duration::ZERO);
        assert!(matches!(LiveProvider::new(config(url, 5)).chat(&request()), Err(ProviderError::Unavailable(_))));
        let (url, _h) = serve_once(200, json!({}), Duration::from_secs(3));
        assert_eq!(LiveProvider::new(config(url, 1)).chat(&request()), Err(ProviderError::Timeout(1)));
        let (url, _h) = serve_once(200, json!({"nothing": 1}), Duration::ZERO);
        assert!(matches!(LiveProvider::new(config(url, 5)).chat(&request()), Err(ProviderError::Protocol(_))));
        let dead = LiveProvider::new(config("http://127.0.0.1:9/v1".into(), 2));
        assert!(matches!(dead.chat(&request()), Err(ProviderError::Unavailable(_))));
    }

    #[test]
    fn live_provider_drives_a_run() {
        let body = json!({"choices": [{"message": {"content": "All set."}}], "usage": {"prompt_tokens": 10, "completion_tokens": 2}});
        let (url, _h) = serve_once(200, body, Duration::ZERO);
        let (env, profile) = env();
        let r = run_query("hi", &env, &profile, &LiveProvider::new(config(url, 5)), &RunOptions::default());
        assert_eq!(r.response.text, "All set.");
        assert_eq!(r.token_usage.total_tokens, 12);
    }
}
