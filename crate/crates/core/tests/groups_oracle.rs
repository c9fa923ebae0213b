mod common;

use lpcomp::groups::{wreath_ball_size, DEFAULT_BALL_BUDGET};
use lpcomp::{Ball, Error, MarkedGroup};

fn check_against_bfs(group: &MarkedGroup, r: u32) {
    let oracle = common::bfs_lengths(group, r);
    let ball = Ball::enumerate(group, r).unwrap();
    assert_eq!(ball.len(), oracle.len(), "{}", group.name());
    for (i, g) in ball.elements().enumerate() {
        let d = oracle[g];
        assert_eq!(ball.length(i), d, "{g}");
        if group.family().is_wreath() {
            assert_eq!(group.word_length(g).unwrap(), d as u64, "{g}");
        }
    }
}

#[test]
fn parry_length_matches_bfs() {
    for name in ["C2wrZ", "C3wrZ", "ZwrZ"] {
        check_against_bfs(&MarkedGroup::parse(name).unwrap(), 6);
    }
}

#[test]
fn lattice_and_free_balls_match_bfs() {
    for name in ["Z", "Z^2", "Z^3", "F2", "F3"] {
        check_against_bfs(&MarkedGroup::parse(name).unwrap(), 5);
    }
}

#[test]
fn sphere_sizes_closed_forms() {
    let z2 = Ball::enumerate(&MarkedGroup::int_lattice(2).unwrap(), 10).unwrap();
    assert_eq!(z2.sphere_sizes()[1..], (1..=10).map(|k| 4 * k).collect::<Vec<_>>()[..]);
    let f2 = Ball::enumerate(&MarkedGroup::free_group(2).unwrap(), 7).unwrap();
    assert_eq!(f2.sphere_sizes()[1..], (1..=7).map(|k| 4 * 3usize.pow(k - 1)).collect::<Vec<_>>()[..]);
}

#[test]
fn streamed_size_matches_ball() {
    for name in ["C2wrZ", "ZwrZ"] {
        let g = MarkedGroup::parse(name).unwrap();
        assert_eq!(wreath_ball_size(&g, 8), Ball::enumerate(&g, 8).unwrap().len() as u64);
    }
}

#[test]
fn budget_error_reports_radius() {
    let f3 = MarkedGroup::free_group(3).unwrap();
    let err = Ball::enumerate_with_budget(&f3, 20, 10_000).unwrap_err();
    assert!(matches!(err, Error::Resource(_)));
    assert!(err.to_string().contains("radius"), "{err}");
    const { assert!(DEFAULT_BALL_BUDGET >= 10_000_000) };
}
