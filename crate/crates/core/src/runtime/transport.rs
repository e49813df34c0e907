//! Byte transports. The loop logic does not depend on which one is used.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, UdpSocket};
use std::time::Duration;

use super::frame::{CommandFrame, FrameError, SensorFrame, SENSOR_FRAME_LEN, SENSOR_MAGIC};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Received {
    Frame(SensorFrame),
    /// Bytes that did not form a valid frame and were skipped.
    Corrupt(FrameError),
}

pub trait FrameSource {
    /// Next frame, or `None` at end of stream.
    fn recv(&mut self) -> io::Result<Option<Received>>;
}

pub trait FrameSink {
    fn send(&mut self, frame: &CommandFrame) -> io::Result<()>;
    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Concatenated frames over any reader (file, stdin, pipe). After a bad
/// frame it resynchronizes on the next magic byte.
pub struct StreamSource<R> {
    reader: R,
    buf: Vec<u8>,
    eof: bool,
}

impl<R: Read> StreamSource<R> {
    pub fn new(reader: R) -> Self {
        Self { reader, buf: Vec::with_capacity(4 * SENSOR_FRAME_LEN), eof: false }
    }

    fn fill(&mut self) -> io::Result<()> {
        let mut tmp = [0u8; 4096];
        while !self.eof && self.buf.len() < SENSOR_FRAME_LEN {
            match self.reader.read(&mut tmp) {
                Ok(0) => self.eof = true,
                Ok(n) => self.buf.extend_from_slice(&tmp[..n]),
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }
}

impl<R: Read> FrameSource for StreamSource<R> {
    fn recv(&mut self) -> io::Result<Option<Received>> {
        self.fill()?;
        if self.buf.is_empty() {
            return Ok(None);
        }
        if self.buf.len() < SENSOR_FRAME_LEN {
            let got = self.buf.len();
            self.buf.clear();
            return Ok(Some(Received::Corrupt(FrameError::Truncated { expected: SENSOR_FRAME_LEN, got })));
        }
        match SensorFrame::decode(&self.buf[..SENSOR_FRAME_LEN]) {
            Ok(f) => {
                self.buf.drain(..SENSOR_FRAME_LEN);
                Ok(Some(Received::Frame(f)))
            }
            Err(e) => {
                let skip = self.buf[1..].iter().position(|&b| b == SENSOR_MAGIC).map_or(self.buf.len(), |p| p + 1);
                self.buf.drain(..skip);
                Ok(Some(Received::Corrupt(e)))
            }
        }
    }
}

pub struct StreamSink<W> {
    writer: W,
}

impl<W: Write> StreamSink<W> {
    pub fn new(writer: W) -> Self {
        Self { writer }
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}

impl<W: Write> FrameSink for StreamSink<W> {
    fn send(&mut self, frame: &CommandFrame) -> io::Result<()> {
        self.writer.write_all(&frame.encode())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.writer.flush()
    }
}

/// One sensor frame per datagram. The stream ends after `idle` without
/// traffic.
pub struct UdpSource {
    socket: UdpSocket,
}

impl UdpSource {
    pub fn bind(addr: SocketAddr, idle: Duration) -> io::Result<Self> {
        let socket = UdpSocket::bind(addr)?;
        socket.set_read_timeout(Some(idle))?;
        Ok(Self { socket })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }
}

impl FrameSource for UdpSource {
    fn recv(&mut self) -> io::Result<Option<Received>> {
        let mut buf = [0u8; 512];
        match self.socket.recv(&mut buf) {
            Ok(n) => Ok(Some(match SensorFrame::decode(&buf[..n]) {
                Ok(f) => Received::Frame(f),
                Err(e) => Received::Corrupt(e),
            })),
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// One command frame per datagram.
pub struct UdpSink {
    socket: UdpSocket,
    peer: SocketAddr,
}

impl UdpSink {
    pub fn connect(peer: SocketAddr) -> io::Result<Self> {
        let local: SocketAddr = if peer.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" }.parse().expect("literal address");
        Ok(Self { socket: UdpSocket::bind(local)?, peer })
    }
}

impl FrameSink for UdpSink {
    fn send(&mut self, frame: &CommandFrame) -> io::Result<()> {
        self.socket.send_to(&frame.encode(), self.peer).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn bytes(n: u16) -> Vec<u8> {
        (0..n).flat_map(|i| SensorFrame::new(i, i as u32 * 10_000, [i as f32; 16]).encode()).collect()
    }

    fn drain(src: &mut impl FrameSource) -> Vec<Received> {
        std::iter::from_fn(|| src.recv().unwrap()).collect()
    }

    #[test]
    fn reads_back_to_back_frames() {
        let got = drain(&mut StreamSource::new(Cursor::new(bytes(5))));
        assert_eq!(got.len(), 5);
        assert!(matches!(got[4], Received::Frame(f) if f.sequence == 4));
    }

    #[test]
    fn resyncs_after_corruption() {
        let mut b = bytes(4);
        b[SENSOR_FRAME_LEN + 20] ^= 0xFF;
        let got = drain(&mut StreamSource::new(Cursor::new(b)));
        let seqs: Vec<u16> = got
            .iter()
            .filter_map(|r| match r {
                Received::Frame(f) => Some(f.sequence),
                _ => None,
            })
            .collect();
        assert_eq!(seqs, vec![0, 2, 3]);
        assert!(got.iter().any(|r| matches!(r, Received::Corrupt(FrameError::CrcMismatch { .. }))));
    }

    #[test]
    fn trailing_partial_frame_is_truncated() {
        let mut b = bytes(2);
        b.truncate(SENSOR_FRAME_LEN + 10);
        let got = drain(&mut StreamSource::new(Cursor::new(b)));
        assert_eq!(got.len(), 2);
        assert!(matches!(got[1], Received::Corrupt(FrameError::Truncated { got: 10, .. })));
    }

    #[test]
    fn udp_round_trip() {
        let mut src = UdpSource::bind("127.0.0.1:0".parse().unwrap(), Duration::from_millis(200)).unwrap();
        let tx = UdpSocket::bind("127.0.0.1:0").unwrap();
        let f = SensorFrame::new(9, 90_000, [0.5; 16]);
        tx.send_to(&f.encode(), src.local_addr().unwrap()).unwrap();
        assert_eq!(src.recv().unwrap(), Some(Received::Frame(f)));
        assert_eq!(src.recv().unwrap(), None);
    }
}
