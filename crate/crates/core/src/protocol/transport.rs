use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
#[cfg(unix)]
use std::os::unix::net::{UnixListener, UnixStream};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use super::message::{decode, encode, Message};
use crate::error::{Error, Result};

pub const DEFAULT_BIND: &str = "127.0.0.1:6400";

/// Where the server listens: `host:port` or `unix:/path/to/socket`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Tcp(String),
    Unix(PathBuf),
}

impl Default for Endpoint {
    fn default() -> Self {
        Endpoint::Tcp(DEFAULT_BIND.to_string())
    }
}

impl FromStr for Endpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("unix:") {
            if path.is_empty() {
                return Err(Error::invalid("empty unix socket path"));
            }
            return Ok(Endpoint::Unix(PathBuf::from(path)));
        }
        if !s.contains(':') {
            return Err(Error::invalid(format!(
                "endpoint `{s}` is neither host:port nor unix:PATH"
            )));
        }
        Ok(Endpoint::Tcp(s.to_string()))
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Tcp(a) => f.write_str(a),
            Endpoint::Unix(p) => write!(f, "unix:{}", p.display()),
        }
    }
}

#[derive(Debug)]
pub enum Stream {
    Tcp(TcpStream),
    #[cfg(unix)]
    Unix(UnixStream),
}

impl Stream {
    pub fn connect(endpoint: &Endpoint) -> Result<Stream> {
        let wrap = |e: io::Error| Error::Protocol(format!("cannot connect to {endpoint}: {e}"));
        match endpoint {
            Endpoint::Tcp(addr) => {
                let s = TcpStream::connect(addr.as_str()).map_err(wrap)?;
                s.set_nodelay(true).map_err(wrap)?;
                Ok(Stream::Tcp(s))
            }
            #[cfg(unix)]
            Endpoint::Unix(path) => Ok(Stream::Unix(UnixStream::connect(path).map_err(wrap)?)),
            #[cfg(not(unix))]
            Endpoint::Unix(_) => Err(Error::invalid(
                "unix sockets are not available on this platform",
            )),
        }
    }

    pub fn try_clone(&self) -> io::Result<Stream> {
        match self {
            Stream::Tcp(s) => s.try_clone().map(Stream::Tcp),
            #[cfg(unix)]
            Stream::Unix(s) => s.try_clone().map(Stream::Unix),
        }
    }

    pub fn set_read_timeout(&self, timeout: Option<Duration>) -> io::Result<()> {
        match self {
            Stream::Tcp(s) => s.set_read_timeout(timeout),
            #[cfg(unix)]
            Stream::Unix(s) => s.set_read_timeout(timeout),
        }
    }

    pub fn shutdown(&self) -> io::Result<()> {
        match self {
            Stream::Tcp(s) => s.shutdown(Shutdown::Both),
            #[cfg(unix)]
            Stream::Unix(s) => s.shutdown(Shutdown::Both),
        }
    }
}

impl Read for Stream {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        match self {
            Stream::Tcp(s) => s.read(buf),
            #[cfg(unix)]
            Stream::Unix(s) => s.read(buf),
        }
    }
}

impl Write for Stream {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match self {
            Stream::Tcp(s) => s.write(buf),
            #[cfg(unix)]
            Stream::Unix(s) => s.write(buf),
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match self {
            Stream::Tcp(s) => s.flush(),
            #[cfg(unix)]
            Stream::Unix(s) => s.flush(),
        }
    }
}

#[derive(Debug)]
pub enum Listener {
    Tcp(TcpListener),
    #[cfg(unix)]
    Unix(UnixListener, PathBuf),
}

impl Listener {
    pub fn bind(endpoint: &Endpoint) -> Result<Listener> {
        let wrap = |e: io::Error| Error::Protocol(format!("cannot bind {endpoint}: {e}"));
        match endpoint {
            Endpoint::Tcp(addr) => Ok(Listener::Tcp(
                TcpListener::bind(addr.as_str()).map_err(wrap)?,
            )),
            #[cfg(unix)]
            Endpoint::Unix(path) => {
                if path.exists() {
                    std::fs::remove_file(path).map_err(wrap)?;
                }
                Ok(Listener::Unix(
                    UnixListener::bind(path).map_err(wrap)?,
                    path.clone(),
                ))
            }
            #[cfg(not(unix))]
            Endpoint::Unix(_) => Err(Error::invalid(
                "unix sockets are not available on this platform",
            )),
        }
    }

    /// Actual address, with the port filled in when binding to port 0.
    pub fn local_endpoint(&self) -> Result<Endpoint> {
        match self {
            Listener::Tcp(l) => Ok(Endpoint::Tcp(l.local_addr()?.to_string())),
            #[cfg(unix)]
            Listener::Unix(_, path) => Ok(Endpoint::Unix(path.clone())),
        }
    }

    /// Waits for one client, giving up after `timeout`.
    pub fn accept_timeout(&self, timeout: Duration) -> Result<Stream> {
        let deadline = Instant::now() + timeout;
        self.set_nonblocking(true)?;
        let result = loop {
            let attempt = match self {
                Listener::Tcp(l) => l.accept().map(|(s, _)| Stream::Tcp(s)),
                #[cfg(unix)]
                Listener::Unix(l, _) => l.accept().map(|(s, _)| Stream::Unix(s)),
            };
            match attempt {
                Ok(s) => break Ok(s),
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        break Err(Error::Protocol(format!(
                            "no client connected within {timeout:?}"
                        )));
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(e) => break Err(e.into()),
            }
        };
        self.set_nonblocking(false)?;
        let stream = result?;
        match &stream {
            Stream::Tcp(s) => {
                s.set_nonblocking(false)?;
                s.set_nodelay(true)?;
            }
            #[cfg(unix)]
            Stream::Unix(s) => s.set_nonblocking(false)?,
        }
        Ok(stream)
    }

    fn set_nonblocking(&self, on: bool) -> io::Result<()> {
        match self {
            Listener::Tcp(l) => l.set_nonblocking(on),
            #[cfg(unix)]
            Listener::Unix(l, _) => l.set_nonblocking(on),
        }
    }
}

#[cfg(unix)]
impl Drop for Listener {
    fn drop(&mut self) {
        if let Listener::Unix(_, path) = self {
            let _ = std::fs::remove_file(path);
        }
    }
}

/// Why a receive produced no message.
#[derive(Debug)]
pub enum RecvError {
    /// Peer closed the connection.
    Closed,
    /// Nothing arrived before the deadline.
    Deadline,
    /// A line arrived but did not parse; the connection is still usable.
    Malformed(Error),
    Io(io::Error),
}

impl fmt::Display for RecvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecvError::Closed => f.write_str("connection closed"),
            RecvError::Deadline => f.write_str("receive deadline exceeded"),
            RecvError::Malformed(e) => write!(f, "{e}"),
            RecvError::Io(e) => write!(f, "{e}"),
        }
    }
}

/// Line-oriented message reader. Partial lines survive a timed-out read.
pub struct MessageReader {
    inner: BufReader<Stream>,
    pending: Vec<u8>,
}

impl MessageReader {
    pub fn new(stream: Stream) -> Self {
        MessageReader {
            inner: BufReader::new(stream),
            pending: Vec::new(),
        }
    }

    pub fn get_ref(&self) -> &Stream {
        self.inner.get_ref()
    }

    /// Next raw line without its newline. `timeout = None` blocks.
    pub fn recv_line(
        &mut self,
        timeout: Option<Duration>,
    ) -> std::result::Result<String, RecvError> {
        let deadline = timeout.map(|t| Instant::now() + t);
        loop {
            let remaining = match deadline {
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        return Err(RecvError::Deadline);
                    }
                    Some(d - now)
                }
                None => None,
            };
            self.inner
                .get_ref()
                .set_read_timeout(remaining)
                .map_err(RecvError::Io)?;
            match self.inner.read_until(b'\n', &mut self.pending) {
                Ok(0) => return Err(RecvError::Closed),
                Ok(_) if self.pending.ends_with(b"\n") => {
                    let mut line = std::mem::take(&mut self.pending);
                    line.pop();
                    if line.ends_with(b"\r") {
                        line.pop();
                    }
                    return String::from_utf8(line).map_err(|_| {
                        RecvError::Malformed(Error::Protocol("message is not valid UTF-8".into()))
                    });
                }
                // EOF in the middle of a line
                Ok(_) => return Err(RecvError::Closed),
                Err(e)
                    if matches!(
                        e.kind(),
                        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                    ) =>
                {
                    continue
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e)
                    if matches!(
                        e.kind(),
                        io::ErrorKind::ConnectionReset | io::ErrorKind::BrokenPipe
                    ) =>
                {
                    return Err(RecvError::Closed)
                }
                Err(e) => return Err(RecvError::Io(e)),
            }
        }
    }

    pub fn recv(&mut self, timeout: Option<Duration>) -> std::result::Result<Message, RecvError> {
        let line = self.recv_line(timeout)?;
        decode(&line).map_err(RecvError::Malformed)
    }
}

/// Writes one message per line and flushes.
pub fn send(writer: &mut impl Write, message: &Message) -> Result<()> {
    writer.write_all(encode(message)?.as_bytes())?;
    writer.flush()?;
    Ok(())
}
