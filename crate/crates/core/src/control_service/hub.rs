use std::collections::BTreeMap;

use super::protocol::{parse_line, ErrorCode, Message, ProtocolError};
use super::session::{Session, TickOutput};

pub type ClientId = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub client: ClientId,
    pub line: String,
}

#[derive(Debug, Clone, Copy, Default)]
struct Client {
    /// Telemetry every `div` ticks; 0 when not subscribed.
    div: u32,
}

/// Multi-client front of a [`Session`]: one controller at a time, any number
/// of telemetry subscribers. Transport-free so it can be driven directly.
pub struct Hub {
    session: Session,
    clients: BTreeMap<ClientId, Client>,
    controller: Option<ClientId>,
    next_id: ClientId,
}

impl Hub {
    pub fn new(session: Session) -> Self {
        Hub {
            session,
            clients: BTreeMap::new(),
            controller: None,
            next_id: 1,
        }
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn controller(&self) -> Option<ClientId> {
        self.controller
    }

    pub fn client_count(&self) -> usize {
        self.clients.len()
    }

    pub fn connect(&mut self) -> ClientId {
        let id = self.next_id;
        self.next_id += 1;
        self.clients.insert(id, Client::default());
        id
    }

    /// Drops a client. If it held control the session stops.
    pub fn disconnect(&mut self, id: ClientId) {
        self.clients.remove(&id);
        if self.controller == Some(id) {
            self.controller = None;
            self.session.force_stop();
        }
    }

    /// Handles one received line and returns exactly one reply line.
    pub fn handle_line(&mut self, id: ClientId, bytes: &[u8]) -> String {
        match self.dispatch(id, bytes) {
            Ok(reply) => reply.to_string(),
            Err(e) => e.to_string(),
        }
    }

    fn dispatch(&mut self, id: ClientId, bytes: &[u8]) -> Result<&'static str, ProtocolError> {
        if !self.clients.contains_key(&id) {
            return Err(ProtocolError::with(ErrorCode::Internal, "unknown client"));
        }
        let msg = parse_line(bytes)?;
        match msg {
            Message::Ping => return Ok("OK PONG"),
            Message::Subscribe { div } => {
                if let Some(c) = self.clients.get_mut(&id) {
                    c.div = div;
                }
                return Ok("OK");
            }
            _ => {}
        }
        debug_assert!(msg.needs_control());
        match self.controller {
            Some(owner) if owner != id => {
                return Err(ProtocolError::with(
                    ErrorCode::Busy,
                    format!("client {owner} has control"),
                ))
            }
            Some(_) => {}
            None => {
                tracing::info!(client = id, "control acquired");
                self.controller = Some(id);
            }
        }
        self.session.apply_message(&msg)?;
        Ok("OK")
    }

    /// Runs one session tick and returns the lines to send: the telemetry
    /// record to each subscriber due this tick, and any tick error to the
    /// controller and every subscriber.
    pub fn tick(&mut self) -> (TickOutput, Vec<Delivery>) {
        let index = self.session.tick_index();
        let out = self.session.tick();
        let mut deliveries = Vec::new();
        let line = out.telemetry.to_string();
        for (&client, c) in &self.clients {
            if let Some(err) = &out.error {
                if c.div > 0 || self.controller == Some(client) {
                    deliveries.push(Delivery {
                        client,
                        line: err.to_string(),
                    });
                }
            }
            if c.div > 0 && index.is_multiple_of(u64::from(c.div)) {
                deliveries.push(Delivery {
                    client,
                    line: line.clone(),
                });
            }
        }
        (out, deliveries)
    }
}
