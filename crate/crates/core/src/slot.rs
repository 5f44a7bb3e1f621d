//! Discrete time: 15-minute slots over a 96-slot day.
//!
//! Slot `k` (1-based) is the instant `(k - 1) * 15` minutes after midnight.
//! Internally most arithmetic happens on an absolute axis of *offsets*:
//! `abs = day * 96 + (k - 1)`, which can be negative for days before day 0.

use core::fmt;

/// Number of slots in a day.
pub const SLOTS_PER_DAY: u16 = 96;

const DAY: i64 = SLOTS_PER_DAY as i64;

/// A slot index in `1..=96`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Slot(u8);

impl Slot {
    pub const FIRST: Slot = Slot(1);
    pub const LAST: Slot = Slot(SLOTS_PER_DAY as u8);

    pub const fn new(k: u16) -> Option<Slot> {
        if k >= 1 && k <= SLOTS_PER_DAY {
            Some(Slot(k as u8))
        } else {
            None
        }
    }

    /// # Panics
    /// Panics when `k` is outside `1..=96`.
    pub const fn of(k: u16) -> Slot {
        match Slot::new(k) {
            Some(s) => s,
            None => panic!("slot index out of range"),
        }
    }

    #[inline]
    pub const fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position within the day.
    #[inline]
    pub const fn offset(self) -> i64 {
        self.0 as i64 - 1
    }

    /// Maps any absolute offset back into the day.
    #[inline]
    pub fn from_offset(abs: i64) -> Slot {
        Slot((abs.rem_euclid(DAY) + 1) as u8)
    }

    /// Slot reached `delta` slots later (modular).
    #[inline]
    pub fn shifted(self, delta: i64) -> Slot {
        Slot::from_offset(self.offset() + delta)
    }

    /// Shortest distance around the day between two slots.
    pub fn circular_distance(self, other: Slot) -> u8 {
        let d = (self.0 as i16 - other.0 as i16).unsigned_abs() as u8;
        d.min(SLOTS_PER_DAY as u8 - d)
    }

    pub fn all() -> impl DoubleEndedIterator<Item = Slot> + Clone {
        (1..=SLOTS_PER_DAY as u8).map(Slot)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Day index of an absolute offset.
#[inline]
pub fn day_of(abs: i64) -> i64 {
    abs.div_euclid(DAY)
}

/// A subset of the 96 slots, stored as a bitmask (bit `k - 1` for slot `k`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SlotSet(u128);

const FULL_MASK: u128 = (1u128 << SLOTS_PER_DAY) - 1;

impl SlotSet {
    pub const EMPTY: SlotSet = SlotSet(0);
    pub const FULL: SlotSet = SlotSet(FULL_MASK);

    pub const fn from_bits(bits: u128) -> SlotSet {
        SlotSet(bits & FULL_MASK)
    }

    pub const fn bits(self) -> u128 {
        self.0
    }

    pub fn single(slot: Slot) -> SlotSet {
        SlotSet(1u128 << slot.offset())
    }

    /// Slots `from..=to` walking forward around the day (wraps past 96).
    pub fn interval(from: Slot, to: Slot) -> SlotSet {
        let mut set = SlotSet::EMPTY;
        let len = (to.offset() - from.offset()).rem_euclid(DAY) + 1;
        for i in 0..len {
            set.insert(from.shifted(i));
        }
        set
    }

    #[inline]
    pub fn contains(self, slot: Slot) -> bool {
        self.0 >> slot.offset() & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, slot: Slot) {
        self.0 |= 1u128 << slot.offset();
    }

    #[inline]
    pub fn remove(&mut self, slot: Slot) {
        self.0 &= !(1u128 << slot.offset());
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn intersection(self, other: SlotSet) -> SlotSet {
        SlotSet(self.0 & other.0)
    }

    #[inline]
    pub fn union(self, other: SlotSet) -> SlotSet {
        SlotSet(self.0 | other.0)
    }

    #[inline]
    pub fn is_subset(self, other: SlotSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn first(self) -> Option<Slot> {
        (self.0 != 0).then(|| Slot(self.0.trailing_zeros() as u8 + 1))
    }

    pub fn last(self) -> Option<Slot> {
        (self.0 != 0).then(|| Slot(128 - self.0.leading_zeros() as u8))
    }

    /// Ascending iteration.
    pub fn iter(self) -> SlotIter {
        SlotIter(self.0)
    }

    /// Set rotated forward by `delta` slots: contains `s + delta` for every `s`.
    pub fn rotated(self, delta: i64) -> SlotSet {
        let d = delta.rem_euclid(DAY) as u32;
        if d == 0 {
            return self;
        }
        let up = self.0 << d;
        let wrapped = self.0 >> (SLOTS_PER_DAY as u32 - d);
        SlotSet((up | wrapped) & FULL_MASK)
    }

    /// Latest absolute offset `<= deadline` whose slot is in the set.
    pub fn latest_at_or_before(self, deadline: i64) -> Option<i64> {
        if self.0 == 0 {
            return None;
        }
        let day = day_of(deadline);
        let off = deadline.rem_euclid(DAY) as u32;
        let mask = if off >= 127 { u128::MAX } else { (1u128 << (off + 1)) - 1 };
        let within = self.0 & mask;
        if within != 0 {
            Some(day * DAY + (127 - within.leading_zeros()) as i64)
        } else {
            Some((day - 1) * DAY + (127 - self.0.leading_zeros()) as i64)
        }
    }

    /// Earliest absolute offset `>= ready` whose slot is in the set.
    pub fn earliest_at_or_after(self, ready: i64) -> Option<i64> {
        if self.0 == 0 {
            return None;
        }
        let day = day_of(ready);
        let off = ready.rem_euclid(DAY) as u32;
        let within = self.0 & !((1u128 << off) - 1);
        if within != 0 {
            Some(day * DAY + within.trailing_zeros() as i64)
        } else {
            Some((day + 1) * DAY + self.0.trailing_zeros() as i64)
        }
    }
}

impl FromIterator<Slot> for SlotSet {
    fn from_iter<I: IntoIterator<Item = Slot>>(iter: I) -> Self {
        let mut set = SlotSet::EMPTY;
        for s in iter {
            set.insert(s);
        }
        set
    }
}

impl fmt::Debug for SlotSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|s| s.get())).finish()
    }
}

#[derive(Clone)]
pub struct SlotIter(u128);

impl Iterator for SlotIter {
    type Item = Slot;

    fn next(&mut self) -> Option<Slot> {
        if self.0 == 0 {
            return None;
        }
        let tz = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(Slot(tz as u8 + 1))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl DoubleEndedIterator for SlotIter {
    fn next_back(&mut self) -> Option<Slot> {
        if self.0 == 0 {
            return None;
        }
        let top = 127 - self.0.leading_zeros();
        self.0 &= !(1u128 << top);
        Some(Slot(top as u8 + 1))
    }
}

impl ExactSizeIterator for SlotIter {}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn slot_bounds() {
        assert!(Slot::new(0).is_none());
        assert!(Slot::new(97).is_none());
        assert_eq!(Slot::new(96), Some(Slot::LAST));
        assert_eq!(Slot::from_offset(-1), Slot::LAST);
        assert_eq!(Slot::from_offset(96), Slot::FIRST);
        assert_eq!(Slot::of(81).shifted(48), Slot::of(33));
    }

    #[test]
    fn circular_distance_wraps() {
        assert_eq!(Slot::of(2).circular_distance(Slot::of(95)), 3);
        assert_eq!(Slot::of(10).circular_distance(Slot::of(20)), 10);
        assert_eq!(Slot::of(1).circular_distance(Slot::of(49)), 48);
    }

    #[test]
    fn interval_wraps_midnight() {
        let s = SlotSet::interval(Slot::of(95), Slot::of(2));
        assert_eq!(s.iter().map(|x| x.get()).collect::<Vec<_>>(), [1, 2, 95, 96]);
        assert_eq!(SlotSet::interval(Slot::of(5), Slot::of(5)).len(), 1);
        assert_eq!(SlotSet::interval(Slot::of(1), Slot::of(96)), SlotSet::FULL);
    }

    #[test]
    fn latest_and_earliest_search() {
        let s: SlotSet = [Slot::of(10), Slot::of(50)].into_iter().collect();
        // deadline at day 1, slot 40 -> slot 10 on day 1
        assert_eq!(s.latest_at_or_before(96 + 39), Some(96 + 9));
        // deadline at day 1, slot 5 -> slot 50 on day 0
        assert_eq!(s.latest_at_or_before(96 + 4), Some(49));
        assert_eq!(s.latest_at_or_before(49), Some(49));
        assert_eq!(s.earliest_at_or_after(10), Some(49));
        assert_eq!(s.earliest_at_or_after(50), Some(96 + 9));
        assert_eq!(s.earliest_at_or_after(-87), Some(-87));
        assert_eq!(SlotSet::EMPTY.latest_at_or_before(3), None);
        assert_eq!(SlotSet::FULL.latest_at_or_before(95), Some(95));
    }

    #[test]
    fn rotation_matches_shift() {
        let s: SlotSet = [Slot::of(1), Slot::of(90)].into_iter().collect();
        let r = s.rotated(10);
        assert!(r.contains(Slot::of(11)));
        assert!(r.contains(Slot::of(4)));
        assert_eq!(r.len(), 2);
        assert_eq!(s.rotated(-10).rotated(10), s);
    }

    #[test]
    fn iteration_both_ends() {
        let s: SlotSet = [Slot::of(3), Slot::of(96), Slot::of(40)].into_iter().collect();
        assert_eq!(s.iter().rev().map(|x| x.get()).collect::<Vec<_>>(), [96, 40, 3]);
        assert_eq!(s.first(), Some(Slot::of(3)));
        assert_eq!(s.last(), Some(Slot::of(96)));
    }
}
