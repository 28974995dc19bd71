#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::time::Duration;
use winds_harness::scenarios;
use winds_harness::ScenarioConfig;

pub fn reference() -> ScenarioConfig {
    scenarios::bundled("reference").unwrap().unwrap()
}

pub struct Client {
    pub reader: BufReader<TcpStream>,
    pub writer: TcpStream,
}

impl Client {
    pub fn connect(addr: SocketAddr) -> Self {
        let s = TcpStream::connect(addr).unwrap();
        s.set_read_timeout(Some(Duration::from_secs(20))).unwrap();
        Self {
            writer: s.try_clone().unwrap(),
            reader: BufReader::new(s),
        }
    }

    pub fn send(&mut self, line: &str) {
        self.writer.write_all(line.as_bytes()).unwrap();
        self.writer.write_all(b"\n").unwrap();
    }

    /// Next message, or None at end of stream.
    pub fn next(&mut self) -> Option<serde_json::Value> {
        let mut line = String::new();
        match self.reader.read_line(&mut line) {
            Ok(0) | Err(_) => None,
            Ok(_) => Some(serde_json::from_str(&line).expect("server sends JSON lines")),
        }
    }
}

pub fn layout_line(blocks: &[(&str, f64, f64, f64)]) -> String {
    let items: Vec<String> = blocks
        .iter()
        .map(|(c, x, y, r)| format!(r#"{{"class":"{c}","x":{x},"y":{y},"rot":{r}}}"#))
        .collect();
    format!(r#"{{"t":"layout","blocks":[{}]}}"#, items.join(","))
}
