use std::collections::HashMap;
use std::future::Future;
use std::io;
use std::time::Duration;

use tokio::io::{AsyncBufRead, AsyncBufReadExt, AsyncWriteExt, BufReader, BufWriter};
use tokio::net::tcp::OwnedWriteHalf;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, oneshot};
use tokio::time::MissedTickBehavior;

use super::hub::{ClientId, Hub};
use super::protocol::MAX_LINE_BYTES;

/// Queued outgoing lines per client before it is treated as stalled.
const OUTBOX: usize = 4096;

enum Event {
    Connect {
        outbox: mpsc::Sender<String>,
        id: oneshot::Sender<ClientId>,
    },
    Line {
        client: ClientId,
        bytes: Vec<u8>,
    },
    Disconnect {
        client: ClientId,
    },
}

/// Reads one `\n`-terminated line, keeping at most `MAX_LINE_BYTES + 2`
/// bytes of it so an oversized line is still recognised as too long.
/// Returns the number of bytes consumed, 0 at end of stream.
pub async fn read_bounded_line<R: AsyncBufRead + Unpin>(
    reader: &mut R,
    buf: &mut Vec<u8>,
) -> io::Result<usize> {
    buf.clear();
    let mut consumed = 0;
    loop {
        let available = reader.fill_buf().await?;
        if available.is_empty() {
            return Ok(consumed);
        }
        let (take, done) = match available.iter().position(|&b| b == b'\n') {
            Some(i) => (i + 1, true),
            None => (available.len(), false),
        };
        let room = (MAX_LINE_BYTES + 2).saturating_sub(buf.len());
        buf.extend_from_slice(&available[..take.min(room)]);
        reader.consume(take);
        consumed += take;
        if done {
            return Ok(consumed);
        }
    }
}

async fn write_lines(writer: OwnedWriteHalf, mut outbox: mpsc::Receiver<String>) {
    let mut w = BufWriter::new(writer);
    while let Some(line) = outbox.recv().await {
        let mut ok = w.write_all(line.as_bytes()).await.is_ok() && w.write_all(b"\n").await.is_ok();
        if ok && outbox.is_empty() {
            ok = w.flush().await.is_ok();
        }
        if !ok {
            return;
        }
    }
    let _ = w.flush().await;
}

async fn connection(stream: TcpStream, events: mpsc::Sender<Event>) {
    let peer = stream.peer_addr().ok();
    let (rd, wr) = stream.into_split();
    let (out_tx, out_rx) = mpsc::channel(OUTBOX);
    let (id_tx, id_rx) = oneshot::channel();
    let connect = Event::Connect {
        outbox: out_tx,
        id: id_tx,
    };
    if events.send(connect).await.is_err() {
        return;
    }
    let Ok(client) = id_rx.await else {
        return;
    };
    tracing::info!(client, ?peer, "client connected");
    let writer = tokio::spawn(write_lines(wr, out_rx));

    let mut reader = BufReader::new(rd);
    let mut buf = Vec::with_capacity(MAX_LINE_BYTES + 2);
    loop {
        match read_bounded_line(&mut reader, &mut buf).await {
            Ok(0) | Err(_) => break,
            Ok(_) => {
                let line = Event::Line {
                    client,
                    bytes: buf.clone(),
                };
                if events.send(line).await.is_err() {
                    break;
                }
            }
        }
    }
    let _ = events.send(Event::Disconnect { client }).await;
    let _ = writer.await;
    tracing::info!(client, "client disconnected");
}

async fn control_loop(
    mut hub: Hub,
    mut events: mpsc::Receiver<Event>,
    shutdown: oneshot::Receiver<()>,
) -> Hub {
    let period = Duration::from_secs_f64(1.0 / hub.session().tick_rate());
    let mut ticker = tokio::time::interval(period);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Burst);
    let mut outboxes: HashMap<ClientId, mpsc::Sender<String>> = HashMap::new();
    let mut shutdown = std::pin::pin!(shutdown);

    let send = |outboxes: &mut HashMap<ClientId, mpsc::Sender<String>>,
                hub: &mut Hub,
                client: ClientId,
                line: String| {
        let stalled = match outboxes.get(&client) {
            Some(tx) => tx.try_send(line).is_err(),
            None => false,
        };
        if stalled {
            tracing::warn!(client, "client not reading, dropping");
            outboxes.remove(&client);
            hub.disconnect(client);
        }
    };

    loop {
        tokio::select! {
            biased;
            _ = &mut shutdown => break,
            ev = events.recv() => match ev {
                None => break,
                Some(Event::Connect { outbox, id }) => {
                    let client = hub.connect();
                    outboxes.insert(client, outbox);
                    let _ = id.send(client);
                }
                Some(Event::Line { client, bytes }) => {
                    if outboxes.contains_key(&client) {
                        let reply = hub.handle_line(client, &bytes);
                        send(&mut outboxes, &mut hub, client, reply);
                    }
                }
                Some(Event::Disconnect { client }) => {
                    outboxes.remove(&client);
                    hub.disconnect(client);
                }
            },
            _ = ticker.tick() => {
                let (_, deliveries) = hub.tick();
                for d in deliveries {
                    send(&mut outboxes, &mut hub, d.client, d.line);
                }
            }
        }
    }
    hub
}

/// Accepts clients on `listener` and runs the control loop until `shutdown`
/// resolves. On the way out the session is stopped and ticked once so the
/// backend is left at zero current. Returns the final hub.
pub async fn serve(
    listener: TcpListener,
    hub: Hub,
    shutdown: impl Future<Output = ()>,
) -> io::Result<Hub> {
    let (ev_tx, ev_rx) = mpsc::channel(1024);
    let (stop_tx, stop_rx) = oneshot::channel();
    let control = tokio::spawn(control_loop(hub, ev_rx, stop_rx));
    let mut shutdown = std::pin::pin!(shutdown);
    loop {
        tokio::select! {
            _ = &mut shutdown => break,
            accepted = listener.accept() => {
                let (stream, _) = accepted?;
                let _ = stream.set_nodelay(true);
                tokio::spawn(connection(stream, ev_tx.clone()));
            }
        }
    }
    let _ = stop_tx.send(());
    let mut hub = control.await.map_err(io::Error::other)?;
    let controller = hub.controller();
    if let Some(c) = controller {
        hub.disconnect(c);
    }
    hub.tick();
    Ok(hub)
}
