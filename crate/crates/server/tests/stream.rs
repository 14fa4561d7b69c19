use std::sync::Arc;

use futures::StreamExt;
use learnsim::config::ModelChoice;
use learnsim::{ModelParams, TeachingControl};
use learnsim_server::api::update_stream;
use learnsim_server::{ClassConfig, Hub, StudentSpec, Update};

fn class() -> ClassConfig {
    let p = ModelParams::simple(vec![2.0, 1.0, 0.6, 0.3], vec![1.0, 0.3, 0.08, 0.01]).unwrap();
    ClassConfig::new(
        ModelChoice::Four,
        vec![StudentSpec {
            id: None,
            params: p,
            initial_state: None,
        }],
    )
}

async fn subscribe(hub: &Arc<Hub>, id: &str) -> impl futures::Stream<Item = Update> + Unpin {
    let (state, rx) = hub.subscribe(id).await.unwrap();
    Box::pin(update_stream(Arc::clone(hub), id.to_owned(), state, rx))
}

#[tokio::test]
async fn three_advances_give_three_snapshots_in_order() {
    let hub = Arc::new(Hub::default());
    let id = hub.create(class()).unwrap().snapshot.session;
    let mut stream = subscribe(&hub, &id).await;
    for _ in 0..3 {
        hub.command(&id, |s| s.advance(0.25)).await.unwrap();
    }
    let first = stream.next().await.unwrap();
    assert!(matches!(first, Update::State(_)));
    let mut clocks = Vec::new();
    for _ in 0..3 {
        match stream.next().await.unwrap() {
            Update::Snapshot(s) => clocks.push(s.clock),
            other => panic!("unexpected {other:?}"),
        }
    }
    assert_eq!(clocks, [0.25, 0.5, 0.75]);
}

#[tokio::test]
async fn subscribers_see_identical_sequences() {
    let hub = Arc::new(Hub::default());
    let id = hub.create(class()).unwrap().snapshot.session;
    let a = subscribe(&hub, &id).await;
    let b = subscribe(&hub, &id).await;
    hub.command(&id, |s| s.set_control(TeachingControl::teach(5.0))).await.unwrap();
    hub.command(&id, |s| s.advance(1.0)).await.unwrap();
    hub.command(&id, |s| s.give_quiz(0.5)).await.unwrap();
    hub.with(&id, |s| s.set_running(true)).await.unwrap();
    hub.remove(&id).await.unwrap();
    let a: Vec<Update> = a.collect().await;
    let b: Vec<Update> = b.collect().await;
    assert_eq!(a, b);
    let kinds: Vec<&str> = a.iter().map(Update::kind).collect();
    assert_eq!(kinds, ["state", "control", "snapshot", "quiz", "running", "closed"]);
    assert!(a.windows(2).all(|w| w[1].clock() >= w[0].clock()));
    assert!(a.windows(2).all(|w| w[1].seq() == w[0].seq() + 1));
}

#[tokio::test]
async fn reconnect_starts_from_current_state() {
    let hub = Arc::new(Hub::default());
    let id = hub.create(class()).unwrap().snapshot.session;
    hub.command(&id, |s| s.set_control(TeachingControl::teach(8.0))).await.unwrap();
    hub.command(&id, |s| s.advance(2.0)).await.unwrap();
    hub.command(&id, |s| s.give_quiz(1.0)).await.unwrap();
    let expected = hub.with(&id, |s| s.state()).await.unwrap();

    let mut stream = subscribe(&hub, &id).await;
    let Update::State(state) = stream.next().await.unwrap() else { panic!("state first") };
    assert_eq!(state, expected);
    assert_eq!(state.quiz_log.len(), 1);
    hub.command(&id, |s| s.advance(1.0)).await.unwrap();
    let Update::Snapshot(next) = stream.next().await.unwrap() else { panic!("snapshot next") };
    assert_eq!(next.seq, state.snapshot.seq + 1);
    assert_eq!(next.clock, 3.0);
}

#[tokio::test]
async fn lagging_subscriber_resyncs_with_state() {
    let hub = Arc::new(Hub::default());
    let id = hub.create(class()).unwrap().snapshot.session;
    let mut stream = subscribe(&hub, &id).await;
    let _ = stream.next().await;
    for _ in 0..(learnsim_server::hub::UPDATE_BUFFER + 10) {
        hub.command(&id, |s| s.advance(0.01)).await.unwrap();
    }
    let Update::State(state) = stream.next().await.unwrap() else { panic!("resync state") };
    assert_eq!(state.snapshot.seq, (learnsim_server::hub::UPDATE_BUFFER + 10) as u64);
}
