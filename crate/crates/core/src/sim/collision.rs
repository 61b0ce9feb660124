use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::map::EnvironmentMap;
use crate::model::{AgentId, AgentState};

/// One overlap observed at a single tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Contact {
    Pedestrian { id: AgentId },
    Environment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionKind {
    Pedestrian,
    Environment,
}

/// A contiguous run of ticks overlapping the same pedestrian (or the
/// environment).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub kind: CollisionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other: Option<AgentId>,
    pub start_tick: u64,
    pub end_tick: u64,
}

impl CollisionEvent {
    fn open(contact: Contact, tick: u64) -> Self {
        let (kind, other) = match contact {
            Contact::Pedestrian { id } => (CollisionKind::Pedestrian, Some(id)),
            Contact::Environment => (CollisionKind::Environment, None),
        };
        CollisionEvent {
            kind,
            other,
            start_tick: tick,
            end_tick: tick,
        }
    }
}

/// Pedestrian contact iff centre distance < radius sum; environment
/// contact iff an occupied cell lies within the robot radius. Contacts are
/// returned sorted.
pub fn detect_collisions(
    robot: &AgentState,
    pedestrians: &[AgentState],
    env: &EnvironmentMap,
) -> Vec<Contact> {
    let mut contacts: Vec<Contact> = pedestrians
        .iter()
        .filter(|p| robot.position().distance(p.position()) < robot.radius + p.radius)
        .map(|p| Contact::Pedestrian { id: p.id })
        .collect();
    if env.disc_collides(robot.position(), robot.radius) {
        contacts.push(Contact::Environment);
    }
    contacts.sort();
    contacts.dedup();
    contacts
}

/// Merges per-tick contacts into events. Input must be ordered by tick.
pub fn coalesce_collision_events(per_tick: &[(u64, Vec<Contact>)]) -> Vec<CollisionEvent> {
    let mut tracker = EventTracker::default();
    for (tick, contacts) in per_tick {
        tracker.observe(*tick, contacts);
    }
    tracker.into_events()
}

/// Online form of [`coalesce_collision_events`].
#[derive(Debug, Clone, Default)]
pub struct EventTracker {
    events: Vec<CollisionEvent>,
    active: BTreeMap<Contact, usize>,
}

impl EventTracker {
    pub fn observe(&mut self, tick: u64, contacts: &[Contact]) {
        let mut sorted = contacts.to_vec();
        sorted.sort();
        sorted.dedup();
        let mut next_active = BTreeMap::new();
        for c in sorted {
            match self.active.get(&c) {
                Some(&idx) if self.events[idx].end_tick + 1 == tick => {
                    self.events[idx].end_tick = tick;
                    next_active.insert(c, idx);
                }
                _ => {
                    self.events.push(CollisionEvent::open(c, tick));
                    next_active.insert(c, self.events.len() - 1);
                }
            }
        }
        self.active = next_active;
    }

    pub fn events(&self) -> &[CollisionEvent] {
        &self.events
    }

    pub fn pedestrian_events(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == CollisionKind::Pedestrian)
            .count()
    }

    pub fn into_events(self) -> Vec<CollisionEvent> {
        self.events
    }
}
