use crate::designs::Arm;
use crate::error::{Error, Result};

/// One consumption: `user` consumed `item` in `period`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Record {
    pub user: usize,
    pub item: usize,
    pub period: usize,
    /// Arm of the user at consumption time; `None` before randomization.
    pub arm: Option<Arm>,
}

/// Append-only consumption history.
///
/// Rejects a second consumption of the same item by a user and a second
/// consumption by a user within one period.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionLog {
    n_users: usize,
    n_items: usize,
    records: Vec<Record>,
    consumed: Vec<bool>,
    last_period: Vec<usize>,
}

impl InteractionLog {
    pub fn new(n_users: usize, n_items: usize) -> Self {
        Self {
            n_users,
            n_items,
            records: Vec::new(),
            consumed: vec![false; n_users * n_items],
            last_period: vec![0; n_users],
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn push(&mut self, record: Record) -> Result<()> {
        if record.user >= self.n_users || record.item >= self.n_items {
            return Err(Error::param(
                "record",
                format!("({}, {}) outside the population", record.user, record.item),
            ));
        }
        if record.period == 0 {
            return Err(Error::param("record", "periods are 1-based"));
        }
        if self.has_consumed(record.user, record.item) {
            return Err(Error::Configuration(format!(
                "user {} already consumed item {}",
                record.user, record.item
            )));
        }
        if self.last_period[record.user] >= record.period {
            return Err(Error::Configuration(format!(
                "user {} already consumed in period {} or later",
                record.user, self.last_period[record.user]
            )));
        }
        self.consumed[record.user * self.n_items + record.item] = true;
        self.last_period[record.user] = record.period;
        self.records.push(record);
        Ok(())
    }

    #[inline]
    pub fn has_consumed(&self, user: usize, item: usize) -> bool {
        self.consumed[user * self.n_items + item]
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
