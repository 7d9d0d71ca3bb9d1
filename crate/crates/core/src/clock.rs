//! Time source abstraction for the time-limited parts of the search.

use core::time::Duration;

/// Monotone elapsed-time source.
///
/// `elapsed` is measured from an arbitrary fixed origin, typically the
/// start of a run.
pub trait Clock {
    fn elapsed(&self) -> Duration;
}

impl<C: Clock + ?Sized> Clock for &C {
    fn elapsed(&self) -> Duration {
        (**self).elapsed()
    }
}

/// A clock that never advances. Time limits never fire under it, which
/// makes runs depend on the seed alone.
#[derive(Clone, Copy, Debug, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn elapsed(&self) -> Duration {
        Duration::ZERO
    }
}

/// Deadline relative to a clock reading taken at construction.
pub(crate) struct Deadline<'c> {
    clock: &'c dyn Clock,
    end: Option<Duration>,
}

impl<'c> Deadline<'c> {
    pub(crate) fn after(clock: &'c dyn Clock, budget: Option<Duration>) -> Self {
        let end = budget.map(|b| clock.elapsed().saturating_add(b));
        Deadline { clock, end }
    }

    pub(crate) fn expired(&self) -> bool {
        match self.end {
            Some(end) => self.clock.elapsed() >= end,
            None => false,
        }
    }
}
