//! Infinite-deck Blackjack with hit/stick only.
//!
//! Cards are drawn with replacement: ranks 1..=9 with probability 1/13 each
//! and ten-valued cards with probability 4/13. The dealer stands on every 17
//! (soft included), naturals pay the same as an ordinary win, and there is no
//! doubling or splitting.

use crate::env::DiscreteEnv;
use crate::error::{Error, Result};
use crate::mdp::{ActionId, StateId, Transition};
use crate::rng::RngStream;

pub const STICK: ActionId = ActionId(0);
pub const HIT: ActionId = ActionId(1);

pub const MIN_PLAYER_SUM: u8 = 4;
pub const NUM_STATES: usize = 18 * 10 * 2;

/// Probability of drawing a card of value `v` (1 = ace, 10 = any ten-valued card).
pub fn card_probability(v: u8) -> f64 {
    match v {
        1..=9 => 1.0 / 13.0,
        10 => 4.0 / 13.0,
        _ => 0.0,
    }
}

#[inline]
pub fn draw_card(rng: &mut RngStream) -> u8 {
    (rng.below(13) as u8 + 1).min(10)
}

/// A hand as its hard total (aces counted as 1) plus whether it holds an ace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Hand {
    pub hard_total: u8,
    pub has_ace: bool,
}

impl Hand {
    pub fn from_cards(cards: &[u8]) -> Self {
        cards.iter().fold(Hand::default(), |h, &c| h.add(c))
    }

    #[inline]
    pub fn add(self, card: u8) -> Self {
        Hand {
            hard_total: self.hard_total + card,
            has_ace: self.has_ace || card == 1,
        }
    }

    #[inline]
    pub fn usable_ace(self) -> bool {
        self.has_ace && self.hard_total + 10 <= 21
    }

    #[inline]
    pub fn score(self) -> u8 {
        if self.usable_ace() {
            self.hard_total + 10
        } else {
            self.hard_total
        }
    }

    #[inline]
    pub fn is_bust(self) -> bool {
        self.hard_total > 21
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlackjackState {
    pub player_sum: u8,
    /// 1 = ace.
    pub dealer_showing: u8,
    pub usable_ace: bool,
}

impl BlackjackState {
    pub fn new(player_sum: u8, dealer_showing: u8, usable_ace: bool) -> Self {
        Self {
            player_sum,
            dealer_showing,
            usable_ace,
        }
    }

    pub fn from_hand(hand: Hand, dealer_showing: u8) -> Self {
        Self::new(hand.score(), dealer_showing, hand.usable_ace())
    }

    /// The player's hand, recovered from the observation. A usable ace is
    /// demoted to a hard count of one.
    pub fn hand(self) -> Hand {
        if self.usable_ace {
            Hand {
                hard_total: self.player_sum - 10,
                has_ace: true,
            }
        } else {
            Hand {
                hard_total: self.player_sum,
                has_ace: false,
            }
        }
    }

    /// `(player_sum − 4)·20 + (dealer_showing − 1)·2 + usable_ace`.
    pub fn id(self) -> StateId {
        StateId(
            (self.player_sum - MIN_PLAYER_SUM) as usize * 20
                + (self.dealer_showing - 1) as usize * 2
                + self.usable_ace as usize,
        )
    }

    pub fn from_id(id: StateId) -> Self {
        let player_sum = (id.0 / 20) as u8 + MIN_PLAYER_SUM;
        let dealer_showing = ((id.0 % 20) / 2) as u8 + 1;
        Self::new(player_sum, dealer_showing, id.0 % 2 == 1)
    }

    /// Whether the state can occur in play. Soft totals below 12 are
    /// enumerated for density but never reached.
    pub fn is_reachable(self) -> bool {
        (MIN_PLAYER_SUM..=21).contains(&self.player_sum)
            && (1..=10).contains(&self.dealer_showing)
            && (!self.usable_ace || self.player_sum >= 12)
    }

    fn validate(self) -> Result<()> {
        if self.is_reachable() {
            Ok(())
        } else {
            Err(Error::usage(format!("invalid blackjack state {self:?}")))
        }
    }
}

/// Plays out the dealer's hand from the up-card: draws the hole card, then
/// hits until the score reaches 17. Returns the final hand.
pub fn dealer_play(showing: u8, rng: &mut RngStream) -> Hand {
    let mut hand = Hand::from_cards(&[showing, draw_card(rng)]);
    while hand.score() < 17 {
        hand = hand.add(draw_card(rng));
    }
    hand
}

/// +1 win, 0 draw, −1 loss for a standing player score against a finished
/// dealer hand.
pub fn settle(player_score: u8, dealer: Hand) -> f64 {
    if dealer.is_bust() {
        return 1.0;
    }
    match player_score.cmp(&dealer.score()) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Equal => 0.0,
        std::cmp::Ordering::Less => -1.0,
    }
}

#[derive(Debug, Clone, Default)]
pub struct Blackjack {
    current: Option<BlackjackState>,
}

impl Blackjack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset_state(&mut self, rng: &mut RngStream) -> BlackjackState {
        let player = Hand::from_cards(&[draw_card(rng), draw_card(rng)]);
        let showing = draw_card(rng);
        let state = BlackjackState::from_hand(player, showing);
        self.current = Some(state);
        state
    }

    /// One transition from `state`, independent of episode bookkeeping.
    /// Terminal transitions carry `s_next == s`.
    pub fn transition(
        state: BlackjackState,
        action: ActionId,
        rng: &mut RngStream,
    ) -> Result<(Transition, Option<BlackjackState>)> {
        state.validate()?;
        let s = state.id();
        match action {
            HIT => {
                let hand = state.hand().add(draw_card(rng));
                if hand.is_bust() {
                    Ok((terminal(s, action, -1.0), None))
                } else {
                    let next = BlackjackState::from_hand(hand, state.dealer_showing);
                    let t = Transition {
                        s,
                        a: action,
                        r: 0.0,
                        s_next: next.id(),
                        terminal: false,
                        truncated: false,
                    };
                    Ok((t, Some(next)))
                }
            }
            STICK => {
                let dealer = dealer_play(state.dealer_showing, rng);
                Ok((terminal(s, action, settle(state.player_sum, dealer)), None))
            }
            other => Err(Error::usage(format!("blackjack has no action {}", other.0))),
        }
    }
}

fn terminal(s: StateId, a: ActionId, r: f64) -> Transition {
    Transition {
        s,
        a,
        r,
        s_next: s,
        terminal: true,
        truncated: false,
    }
}

impl DiscreteEnv for Blackjack {
    fn num_states(&self) -> usize {
        NUM_STATES
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn reset(&mut self, rng: &mut RngStream) -> StateId {
        self.reset_state(rng).id()
    }

    fn step(&mut self, action: ActionId, rng: &mut RngStream) -> Result<Transition> {
        let state = self
            .current
            .ok_or_else(|| Error::usage("blackjack stepped without an active hand"))?;
        let (t, next) = Self::transition(state, action, rng)?;
        self.current = next;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_and_hard_hands() {
        let h = Hand::from_cards(&[1, 5]);
        assert_eq!(BlackjackState::from_hand(h, 3), BlackjackState::new(16, 3, true));
        let h = Hand::from_cards(&[10, 10]);
        assert_eq!(BlackjackState::from_hand(h, 3), BlackjackState::new(20, 3, false));
        let h = Hand::from_cards(&[1, 1]);
        assert_eq!(BlackjackState::from_hand(h, 3), BlackjackState::new(12, 3, true));
        // Ace demoted once the soft count would bust.
        let h = Hand::from_cards(&[1, 5, 9]);
        assert_eq!(h.score(), 15);
        assert!(!h.usable_ace());
    }

    #[test]
    fn enumeration_is_dense_and_injective() {
        let mut seen = vec![false; NUM_STATES];
        for sum in 4..=21u8 {
            for d in 1..=10u8 {
                for ace in [false, true] {
                    let s = BlackjackState::new(sum, d, ace);
                    let id = s.id();
                    assert!(id.0 < NUM_STATES);
                    assert!(!seen[id.0]);
                    seen[id.0] = true;
                    assert_eq!(BlackjackState::from_id(id), s);
                }
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn hitting_hard_21_busts() {
        let mut rng = RngStream::new(1);
        for _ in 0..200 {
            let (t, next) =
                Blackjack::transition(BlackjackState::new(21, 10, false), HIT, &mut rng).unwrap();
            assert_eq!(t.r, -1.0);
            assert!(t.terminal);
            assert!(next.is_none());
        }
    }

    #[test]
    fn hitting_hard_11_never_busts() {
        let mut rng = RngStream::new(2);
        for _ in 0..200 {
            let (t, next) =
                Blackjack::transition(BlackjackState::new(11, 5, false), HIT, &mut rng).unwrap();
            assert!(!t.terminal);
            assert_eq!(t.r, 0.0);
            let next = next.unwrap();
            assert!((12..=21).contains(&next.player_sum));
        }
    }

    #[test]
    fn stepping_without_hand_is_usage_error() {
        let mut env = Blackjack::new();
        let mut rng = RngStream::new(3);
        assert!(matches!(env.step(HIT, &mut rng), Err(Error::Usage(_))));
        env.reset(&mut rng);
        let t = env.step(STICK, &mut rng).unwrap();
        assert!(t.terminal);
        assert!(matches!(env.step(HIT, &mut rng), Err(Error::Usage(_))));
    }

    #[test]
    fn dealer_upcard_distribution() {
        let mut env = Blackjack::new();
        let mut rng = RngStream::new(99);
        let n = 1_000_000;
        let tens = (0..n)
            .filter(|_| env.reset_state(&mut rng).dealer_showing == 10)
            .count();
        let p = tens as f64 / n as f64;
        let expect = 4.0 / 13.0;
        let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((p - expect).abs() < 4.0 * sigma, "p = {p}");
    }

    #[test]
    fn dealer_stands_on_soft_17() {
        let h = Hand::from_cards(&[1, 6]);
        assert_eq!(h.score(), 17);
        let mut rng = RngStream::new(5);
        for _ in 0..1000 {
            let d = dealer_play(1, &mut rng);
            assert!(d.is_bust() || (17..=21).contains(&d.score()));
        }
    }

    #[test]
    fn nonterminal_states_respect_invariants() {
        let mut env = Blackjack::new();
        let mut rng = RngStream::new(8);
        for _ in 0..20_000 {
            let mut s = env.reset_state(&mut rng);
            loop {
                assert!((4..=21).contains(&s.player_sum));
                if s.usable_ace {
                    assert!(s.player_sum - 10 <= 11);
                }
                let (t, next) = Blackjack::transition(s, HIT, &mut rng).unwrap();
                match next {
                    Some(n) if !t.terminal => s = n,
                    _ => break,
                }
            }
        }
    }
}
