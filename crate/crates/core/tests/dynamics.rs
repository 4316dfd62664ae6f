//! Simulated mountain-car extremes against the work-energy bound.

use projsim::mountain_car::mc_step;
use projsim::physics::{max_reach, Direction, PhysicsParams};
use projsim::{DynamicsOrder, McAction, McState};

/// Position where the velocity first changes sign under a constant action.
fn first_turning_point(action: McAction, order: DynamicsOrder) -> f64 {
    let mut s = McState::BOTTOM;
    let mut moved = false;
    for _ in 0..1000 {
        let next = mc_step(s, action, order).state;
        if moved && next.v * s.v <= 0.0 {
            return next.x;
        }
        moved |= next.v != 0.0;
        s = next;
    }
    panic!("no turning point for {action:?}");
}

fn extreme_over(steps: usize, action: McAction, order: DynamicsOrder) -> (f64, f64) {
    let mut s = McState::BOTTOM;
    let (mut lo, mut hi) = (s.x, s.x);
    for _ in 0..steps {
        s = mc_step(s, action, order).state;
        lo = lo.min(s.x);
        hi = hi.max(s.x);
    }
    (lo, hi)
}

#[test]
fn conventional_order_tracks_the_energy_bound() {
    let params = PhysicsParams::default();
    let order = DynamicsOrder::Conventional;

    let (_, hi) = extreme_over(500, McAction::Forward, order);
    assert!(hi < -0.25, "always-forward peak {hi}");
    assert!((hi - max_reach(-0.5, Direction::Right, &params)).abs() < 0.02);

    let (lo, _) = extreme_over(500, McAction::Reverse, order);
    assert!((lo - -0.834).abs() < 0.02, "always-reverse trough {lo}");
    assert!((lo - max_reach(-0.5, Direction::Left, &params)).abs() < 0.02);
}

#[test]
fn printed_order_overshoots_on_the_first_swing() {
    // x + v_old is explicit Euler, which pumps energy into the oscillation.
    let forward = first_turning_point(McAction::Forward, DynamicsOrder::Printed);
    let reverse = first_turning_point(McAction::Reverse, DynamicsOrder::Printed);
    assert!((forward - -0.2496).abs() < 5e-4, "{forward}");
    assert!((reverse - -0.8593).abs() < 5e-4, "{reverse}");

    let conv_forward = first_turning_point(McAction::Forward, DynamicsOrder::Conventional);
    let conv_reverse = first_turning_point(McAction::Reverse, DynamicsOrder::Conventional);
    assert!(forward > conv_forward && reverse < conv_reverse);
}
