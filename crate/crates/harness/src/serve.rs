//! Session endpoint for UI clients: newline-delimited JSON over TCP.
//!
//! The simulation loop owns the session. Reader threads parse client lines
//! into commands and hand them over a channel; the loop applies them between
//! frames and fans frames out to per-client writer threads. A client that
//! sends a malformed line gets an error frame and is disconnected; nobody
//! else notices.

use crate::config::{BlockEntry, ScenarioConfig};
use crate::session::{Session, SessionError};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender, SyncSender, TrySendError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};
use thiserror::Error;
use winds_core::modes::Mode;

/// Longest accepted client line, bytes.
pub const MAX_LINE: usize = 1 << 20;
/// Frames queued per client before new ones are dropped for it.
const CLIENT_QUEUE: usize = 8;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("socket: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMsg {
    Layout { blocks: Vec<BlockEntry> },
    Mode { mode: Mode, seed: Option<u64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMsg {
    pub t: String,
    pub msg: String,
}

impl ErrorMsg {
    pub fn new(msg: impl Into<String>) -> Self {
        Self {
            t: "error".into(),
            msg: msg.into(),
        }
    }
}

/// Parses and checks one client line.
pub fn parse_client_line(line: &str, max_blocks: usize) -> Result<ClientMsg, String> {
    let msg: ClientMsg = serde_json::from_str(line).map_err(|e| format!("malformed message: {e}"))?;
    if let ClientMsg::Layout { blocks } = &msg {
        if blocks.len() > max_blocks {
            return Err(format!(
                "layout has {} blocks; at most {max_blocks} allowed",
                blocks.len()
            ));
        }
        for (k, b) in blocks.iter().enumerate() {
            if ![b.x, b.y, b.rot].iter().all(|v| v.is_finite()) {
                return Err(format!("blocks[{k}]: coordinates must be finite"));
            }
            if [b.w, b.h].iter().flatten().any(|&s| !(s > 0.0 && s.is_finite())) {
                return Err(format!("blocks[{k}]: sizes must be positive"));
            }
        }
    }
    Ok(msg)
}

enum Outgoing {
    Line(Arc<str>),
    Close(String),
}

struct Client {
    tx: SyncSender<Outgoing>,
    stream: TcpStream,
}

fn spawn_client(stream: TcpStream, commands: Sender<ClientMsg>, max_blocks: usize) -> std::io::Result<Client> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    let (tx, rx) = mpsc::sync_channel::<Outgoing>(CLIENT_QUEUE);
    let mut writer = stream.try_clone()?;
    std::thread::spawn(move || {
        for out in rx {
            let ok = match out {
                Outgoing::Line(line) => writer.write_all(line.as_bytes()).and_then(|_| writer.write_all(b"\n")),
                Outgoing::Close(msg) => {
                    let text = serde_json::to_string(&ErrorMsg::new(msg)).expect("error serializes");
                    let _ = writeln!(writer, "{text}");
                    let _ = writer.shutdown(Shutdown::Both);
                    break;
                }
            };
            if ok.is_err() {
                break;
            }
        }
    });
    let reader = stream.try_clone()?;
    let err_tx = tx.clone();
    std::thread::spawn(move || {
        let mut reader = BufReader::new(reader);
        let mut buf = Vec::new();
        loop {
            buf.clear();
            let n = match (&mut reader).take(MAX_LINE as u64 + 1).read_until(b'\n', &mut buf) {
                Ok(n) => n,
                Err(_) => return,
            };
            if n == 0 {
                return;
            }
            if buf.last() != Some(&b'\n') && buf.len() > MAX_LINE {
                let _ = err_tx.send(Outgoing::Close(format!("message longer than {MAX_LINE} bytes")));
                return;
            }
            let parsed = std::str::from_utf8(&buf)
                .map_err(|_| "message is not UTF-8".to_string())
                .and_then(|text| {
                    let text = text.trim();
                    if text.is_empty() {
                        Err("empty message".to_string())
                    } else {
                        parse_client_line(text, max_blocks)
                    }
                });
            match parsed {
                Ok(msg) => {
                    if commands.send(msg).is_err() {
                        return;
                    }
                }
                Err(e) => {
                    // Blocks until the writer has room, so the error frame
                    // is never dropped.
                    let _ = err_tx.send(Outgoing::Close(e));
                    return;
                }
            }
        }
    });
    Ok(Client { tx, stream })
}

fn apply(session: &mut Session, msg: ClientMsg) -> Result<(), SessionError> {
    match msg {
        ClientMsg::Layout { blocks } => session.set_layout(&blocks),
        ClientMsg::Mode { mode, seed } => session.set_mode(mode, seed)?,
    }
    Ok(())
}

/// Runs the session loop on `listener` until `stop` is set.
pub fn serve(cfg: ScenarioConfig, listener: TcpListener, stop: Arc<AtomicBool>) -> Result<(), ServeError> {
    let budget = Duration::from_millis(cfg.serve.frame_ms);
    let every = cfg.serve.snapshot_every;
    let max_blocks = cfg.serve.max_blocks;
    let mut session = Session::new(cfg)?;
    listener.set_nonblocking(true)?;
    let (cmd_tx, cmd_rx): (Sender<ClientMsg>, Receiver<ClientMsg>) = mpsc::channel();
    let mut clients: Vec<Client> = Vec::new();

    while !stop.load(Ordering::Relaxed) {
        let start = Instant::now();
        loop {
            match listener.accept() {
                Ok((stream, _)) => {
                    if let Ok(c) = spawn_client(stream, cmd_tx.clone(), max_blocks) {
                        clients.push(c);
                    }
                }
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => break,
                Err(_) => break,
            }
        }
        // Commands never interleave with a step.
        while let Ok(msg) = cmd_rx.try_recv() {
            apply(&mut session, msg)?;
        }
        session.step()?;
        session.take_events();
        if session.step_count() % every == 0 {
            let line: Arc<str> = serde_json::to_string(&session.snapshot())
                .expect("frame serializes")
                .into();
            clients.retain(|c| match c.tx.try_send(Outgoing::Line(line.clone())) {
                Ok(()) | Err(TrySendError::Full(_)) => true,
                Err(TrySendError::Disconnected(_)) => false,
            });
        }
        if let Some(rest) = budget.checked_sub(start.elapsed()) {
            std::thread::sleep(rest);
        }
    }
    for c in clients {
        let _ = c.stream.shutdown(Shutdown::Both);
    }
    Ok(())
}

/// A server running on a background thread.
pub struct ServerHandle {
    pub addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<Result<(), ServeError>>>,
}

impl ServerHandle {
    pub fn spawn(cfg: ScenarioConfig, addr: &str) -> Result<Self, ServeError> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let thread = std::thread::spawn(move || serve(cfg, listener, flag));
        Ok(Self {
            addr,
            stop,
            thread: Some(thread),
        })
    }

    pub fn is_running(&self) -> bool {
        self.thread.as_ref().is_some_and(|t| !t.is_finished())
    }

    pub fn stop(mut self) -> Result<(), ServeError> {
        self.stop.store(true, Ordering::Relaxed);
        match self.thread.take().map(JoinHandle::join) {
            Some(Ok(r)) => r,
            Some(Err(_)) => Err(ServeError::Io(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_message_parses() {
        let line = r#"{"t":"layout","blocks":[{"class":"ice","x":10.5,"y":80,"rot":0.3}]}"#;
        let ClientMsg::Layout { blocks } = parse_client_line(line, 20).unwrap() else {
            panic!("wrong variant");
        };
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].x, 10.5);
    }

    #[test]
    fn mode_message_parses() {
        let line = r#"{"t":"mode","mode":"moving_mountains","seed":9}"#;
        assert_eq!(
            parse_client_line(line, 20).unwrap(),
            ClientMsg::Mode {
                mode: Mode::MovingMountains,
                seed: Some(9)
            }
        );
    }

    #[test]
    fn bad_messages_are_rejected() {
        for line in [
            "{",
            r#"{"t":"dance"}"#,
            r#"{"t":"layout","blocks":[{"class":"lava","x":1,"y":1}]}"#,
            r#"{"t":"layout","blocks":[],"extra":1}"#,
            r#"{"t":"layout","blocks":[{"class":"low","x":1,"y":1,"w":0}]}"#,
        ] {
            assert!(parse_client_line(line, 20).is_err(), "{line}");
        }
        let many: Vec<String> = (0..21).map(|k| format!(r#"{{"class":"low","x":{k},"y":1}}"#)).collect();
        let line = format!(r#"{{"t":"layout","blocks":[{}]}}"#, many.join(","));
        assert!(parse_client_line(&line, 20).unwrap_err().contains("at most 20"));
    }
}
