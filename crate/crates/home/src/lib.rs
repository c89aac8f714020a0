//! The simulated smart home behind the agent's perception and action tools: meters,
//! devices, schedules and the long-term preference memory.

pub mod automation;
pub mod catalog;
pub mod home;
pub mod memory;

pub use automation::{
    span_schedules, AutomationError, CompareOp, FiredAction, NewSchedule, Recurrence, ScheduleEdit, ScheduleEntry,
    Scheduler, Trigger,
};
pub use catalog::{device_id_for, device_template};
pub use home::{
    AuditEntry, CommandSource, GroupOutcome, Home, HomeCore, HomeError, HomeEvent, HomeSnapshot, HomeState, Listener,
    Outcome, Selector,
};
pub use memory::{
    MemoryDraft, MemoryEdit, MemoryEntry, MemoryError, MemoryFilter, MemorySource, MemoryStore, Moment, TimeCondition,
};
