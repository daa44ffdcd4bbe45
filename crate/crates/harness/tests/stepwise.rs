use std::time::Duration;

use coexplorer_core::config::StartMode;
use coexplorer_core::policy::greedy_action;
use coexplorer_core::reward::RewardModel;
use coexplorer_core::space::snap_to_grid;
use coexplorer_core::{ActionId, Config, FeedbackEvent, Session, Sign, Valence};
use coexplorer_harness::oracle::OracleUser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// A user one second behind each move, rewarding steps toward the bottom edge.
// The reinforced action is not the tie-break winner of an untrained model.
#[test]
fn stepwise_feedback_turns_the_greedy_action_toward_the_target() {
    let config = Config { n: 2, step: 0.05, mode: StartMode::Stepwise, seed: 0, ..Config::default() };
    let mut session = Session::new(config).unwrap();
    let space = session.space().clone();
    let oracle = OracleUser::new(snap_to_grid(&[0.5, 0.0], &space).unwrap(), 1);
    let toward = ActionId::new(1, Sign::Minus);

    // Nothing has been done yet, so the opening feedback only triggers a move.
    let mut before = session.current().clone();
    let mut after = session.step_on_feedback(FeedbackEvent::guiding(Valence::Positive, session.now())).unwrap();
    let mut turned_at = None;
    for step in 1..=30 {
        session.advance_clock(Duration::from_secs(1));
        let valence = oracle.judge(&before, &after);
        before = after;
        after = session.step_on_feedback(FeedbackEvent::guiding(valence, session.now())).unwrap();
        if turned_at.is_none() && greedy_action(&after, &space, session.model()) == toward {
            turned_at = Some(step);
        }
    }
    let turned_at = turned_at.expect("greedy action never pointed at the target");
    assert!(turned_at <= 30, "turned after {turned_at} steps");
    let untrained = RewardModel::from_config(session.config(), &mut ChaCha8Rng::seed_from_u64(0));
    assert_ne!(greedy_action(&space.center(), &space, &untrained), toward);
    assert!(session.current().linf_distance(&oracle.target) < space.center().linf_distance(&oracle.target));
}
