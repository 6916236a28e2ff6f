"""Raw capture ingest: UDP packet reassembly, byte-layout decode, capture files.

Wire format, per datagram:

    [u32 seq LE][u48 byte_offset LE][payload]      payload <= 1456 bytes

``seq`` counts packets from 0; ``byte_offset`` is the cumulative payload byte
count before this packet, which lets reassembly infer the byte extent of lost
packets and zero-fill it instead of dropping frames.

Frame byte layout: chirps outer, rx middle, samples inner; each sample is
int16 I then int16 Q, little-endian. This matches the DataCube axis order so
decoding is a single reshape.

Capture file layout:

    "ORAD" | u16 version(=1) LE | u32 blob length | config blob | u32 frames | frame bytes...

where the config blob is canonical key-sorted JSON text of the RadarConfig.
"""

from __future__ import annotations

import dataclasses
import json
import queue
import socket
import struct
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

from .core import ConfigError, DataCube, RadarConfig, RadarError, validate_config

MAGIC = b"ORAD"
FORMAT_VERSION = 1
PACKET_HEADER_BYTES = 10
DEFAULT_PAYLOAD_BYTES = 1456  # fits a 1500-byte MTU with the 10-byte header


class TransportError(RadarError):
    """Packet stream is internally inconsistent (e.g. conflicting duplicates)."""


class SizeError(RadarError):
    """Byte buffer length does not match the frame size implied by the config."""


class FormatError(RadarError):
    """Capture file violates the on-disk format."""


class BindError(RadarError):
    """UDP listen port could not be bound."""


@dataclass(frozen=True)
class CapturePacket:
    """One sequenced UDP payload unit."""

    seq: int
    byte_offset: int
    payload: bytes

    def encode(self) -> bytes:
        """Serialize to the on-wire datagram."""
        return (
            struct.pack("<I", self.seq)
            + int(self.byte_offset).to_bytes(6, "little")
            + self.payload
        )

    @classmethod
    def decode(cls, datagram: bytes) -> "CapturePacket":
        if len(datagram) < PACKET_HEADER_BYTES:
            raise TransportError(
                f"datagram of {len(datagram)} bytes is shorter than the "
                f"{PACKET_HEADER_BYTES}-byte header"
            )
        seq = struct.unpack_from("<I", datagram)[0]
        offset = int.from_bytes(datagram[4:10], "little")
        return cls(seq=seq, byte_offset=offset, payload=datagram[10:])


@dataclass(frozen=True)
class DropReport:
    """Loss/reorder accounting of one reassembly span."""

    packets_received: int = 0
    packets_dropped: int = 0
    bytes_zero_filled: int = 0
    reordered_count: int = 0

    def __sub__(self, other: "DropReport") -> "DropReport":
        return DropReport(
            self.packets_received - other.packets_received,
            self.packets_dropped - other.packets_dropped,
            self.bytes_zero_filled - other.bytes_zero_filled,
            self.reordered_count - other.reordered_count,
        )


class PacketReassembler:
    """Incremental seq-ordered byte reassembly with bounded reorder tolerance.

    ``window`` is the maximum out-of-order displacement tolerated: a packet
    displaced at most ``window`` arrival positions from its in-order position
    is always recovered. A missing seq is given up (declared lost and its
    byte extent zero-filled) once the arrival position passes seq + window.

    Late arrivals of already-emitted or already-dropped seqs are ignored and
    not counted, which keeps packets_received + packets_dropped equal to
    max_seq_seen + 1 after ``flush``.
    """

    def __init__(self, window: int):
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        self.window = window
        self._pending: dict[int, CapturePacket] = {}
        self._next_seq = 0
        self._emitted_bytes = 0
        self._arrivals = 0
        self._max_seq = -1
        self._received = 0
        self._dropped = 0
        self._zero_filled = 0
        self._reordered = 0

    @property
    def report(self) -> DropReport:
        return DropReport(
            packets_received=self._received,
            packets_dropped=self._dropped,
            bytes_zero_filled=self._zero_filled,
            reordered_count=self._reordered,
        )

    def feed(self, packet: CapturePacket) -> bytes:
        """Accept one packet; return whatever bytes became emittable."""
        seq = packet.seq
        if seq < self._next_seq:
            return b""  # late duplicate of an emitted or zero-filled seq
        if seq in self._pending:
            if self._pending[seq].payload != packet.payload:
                raise TransportError(f"duplicate seq {seq} with conflicting payload")
            return b""
        if seq < self._max_seq:
            self._reordered += 1
        self._max_seq = max(self._max_seq, seq)
        self._pending[seq] = packet
        self._received += 1
        position = self._arrivals
        self._arrivals += 1
        out = bytearray(self._drain_in_order())
        # Give up on the oldest missing seq once its arrival deadline passed.
        while self._pending and position > self._next_seq + self.window:
            out += self._zero_fill_to(min(self._pending))
            out += self._drain_in_order()
        return bytes(out)

    def flush(self) -> bytes:
        """End of stream: zero-fill every known gap and emit the remainder."""
        out = bytearray()
        while self._pending:
            out += self._zero_fill_to(min(self._pending))
            out += self._drain_in_order()
        return bytes(out)

    def _drain_in_order(self) -> bytes:
        out = bytearray()
        while self._next_seq in self._pending:
            pkt = self._pending.pop(self._next_seq)
            if pkt.byte_offset != self._emitted_bytes:
                raise TransportError(
                    f"seq {pkt.seq} byte_offset {pkt.byte_offset} != "
                    f"{self._emitted_bytes} bytes emitted"
                )
            out += pkt.payload
            self._emitted_bytes += len(pkt.payload)
            self._next_seq += 1
        return bytes(out)

    def _zero_fill_to(self, seq: int) -> bytes:
        """Declare seqs next.._seq-1 lost; zero-fill their byte extent."""
        gap_packets = seq - self._next_seq
        gap_bytes = self._pending[seq].byte_offset - self._emitted_bytes
        if gap_bytes < 0:
            raise TransportError(
                f"seq {seq} byte_offset {self._pending[seq].byte_offset} "
                f"precedes {self._emitted_bytes} bytes already emitted"
            )
        self._dropped += gap_packets
        self._zero_filled += gap_bytes
        self._emitted_bytes += gap_bytes
        self._next_seq = seq
        return b"\x00" * gap_bytes


def reassemble(
    packets: Iterable[CapturePacket], window: int
) -> tuple[bytes, DropReport]:
    """Reassemble a finite packet stream into its seq-ordered byte stream."""
    r = PacketReassembler(window)
    out = bytearray()
    for pkt in packets:
        out += r.feed(pkt)
    out += r.flush()
    return bytes(out), r.report


def frame_byte_count(cfg: RadarConfig) -> int:
    """Serialized size of one frame: chirps * rx * samples * 4 bytes."""
    return cfg.chirps_per_frame * cfg.num_rx * cfg.samples_per_chirp * 4


def serialize_cube(cube: DataCube) -> bytes:
    """Encode a cube in the frame byte layout.

    Quantization: round to nearest (ties to even), saturate to int16 range.
    """
    i = np.clip(np.rint(cube.data.real), -32768, 32767).astype("<i2")
    q = np.clip(np.rint(cube.data.imag), -32768, 32767).astype("<i2")
    interleaved = np.stack([i, q], axis=-1)
    return interleaved.tobytes()


def deinterleave(buf: bytes, cfg: RadarConfig, frame_index: int = 0) -> DataCube:
    """Decode one frame's bytes into a (chirp, rx, sample) complex cube."""
    validate_config(cfg)
    expected = frame_byte_count(cfg)
    if len(buf) != expected:
        raise SizeError(f"expected {expected} frame bytes, got {len(buf)}")
    flat = np.frombuffer(buf, dtype="<i2").astype(np.float64)
    iq = flat.reshape(cfg.chirps_per_frame, cfg.num_rx, cfg.samples_per_chirp, 2)
    data = iq[..., 0] + 1j * iq[..., 1]
    return DataCube(data=data, frame_index=frame_index, config=cfg)


def _config_blob(cfg: RadarConfig) -> bytes:
    return json.dumps(
        dataclasses.asdict(cfg), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")


def _config_from_blob(blob: bytes) -> RadarConfig:
    try:
        d = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"config blob is not valid JSON: {e}") from e
    field_names = {f.name for f in dataclasses.fields(RadarConfig)}
    unknown = set(d) - field_names
    if unknown:
        raise FormatError(f"config blob has unknown keys {sorted(unknown)}")
    missing = field_names - set(d) - {"rx_spacing_wavelengths", "tx_spacing_wavelengths"}
    if missing:
        raise FormatError(f"config blob missing keys {sorted(missing)}")
    try:
        return validate_config(RadarConfig(**d))
    except ConfigError as e:
        raise FormatError(f"config blob invalid: {e}") from e


@dataclass(frozen=True)
class CaptureFileHeader:
    """Decoded capture file header."""

    version: int
    config: RadarConfig
    frame_count: int


def write_capture_file(path, cfg: RadarConfig, cubes: Iterable[DataCube]) -> None:
    """Write cubes to a capture file; ``read_capture_file`` is its inverse."""
    validate_config(cfg)
    frames = list(cubes)
    blob = _config_blob(cfg)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<H", FORMAT_VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(struct.pack("<I", len(frames)))
        for cube in frames:
            f.write(serialize_cube(cube))


def _read_exact(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated {what}: expected {n} bytes, got {len(buf)}")
    return buf


def read_capture_header(f) -> CaptureFileHeader:
    magic = _read_exact(f, 4, "magic")
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version = struct.unpack("<H", _read_exact(f, 2, "version"))[0]
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported version {version}, expected {FORMAT_VERSION}")
    blob_len = struct.unpack("<I", _read_exact(f, 4, "config length"))[0]
    cfg = _config_from_blob(_read_exact(f, blob_len, "config blob"))
    frame_count = struct.unpack("<I", _read_exact(f, 4, "frame count"))[0]
    return CaptureFileHeader(version=version, config=cfg, frame_count=frame_count)


def read_capture_file(path) -> tuple[RadarConfig, list[DataCube]]:
    """Read a capture file back into its config and frames."""
    with open(path, "rb") as f:
        header = read_capture_header(f)
        per_frame = frame_byte_count(header.config)
        cubes = [
            deinterleave(_read_exact(f, per_frame, f"frame {i}"), header.config, i)
            for i in range(header.frame_count)
        ]
    return header.config, cubes


class CaptureListener:
    """Background UDP receiver turning datagrams into complete frames.

    Runs as a daemon thread; completed frames are delivered through a bounded
    queue with a drop-oldest backpressure policy (``frames_dropped_backpressure``
    counts casualties). Frames are never partially emitted: bytes accumulate
    until a full frame extent is available.
    """

    def __init__(
        self,
        port: int,
        cfg: RadarConfig,
        window: int,
        host: str = "0.0.0.0",
        queue_frames: int = 64,
    ):
        validate_config(cfg)
        self.cfg = cfg
        self._frame_bytes = frame_byte_count(cfg)
        self._reassembler = PacketReassembler(window)
        self._buffer = bytearray()
        self._queue: queue.Queue = queue.Queue(maxsize=queue_frames)
        self._stop = threading.Event()
        self._frame_index = 0
        self._last_report = DropReport()
        self.frames_dropped_backpressure = 0
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 1 << 23)
            self._sock.bind((host, port))
        except OSError as e:
            self._sock.close()
            raise BindError(f"cannot bind UDP {host}:{port}: {e}") from e
        self._sock.settimeout(0.2)
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    @property
    def port(self) -> int:
        return self._sock.getsockname()[1]

    def _run(self):
        try:
            while not self._stop.is_set():
                try:
                    datagram = self._sock.recv(65536)
                except socket.timeout:
                    continue
                except OSError:
                    break
                self._ingest(self._reassembler.feed(CapturePacket.decode(datagram)))
            self._ingest(self._reassembler.flush())
        finally:
            self._sock.close()

    def _ingest(self, data: bytes):
        self._buffer += data
        while len(self._buffer) >= self._frame_bytes:
            frame = bytes(self._buffer[: self._frame_bytes])
            del self._buffer[: self._frame_bytes]
            cube = deinterleave(frame, self.cfg, self._frame_index)
            report = self._reassembler.report
            item = (cube, report - self._last_report)
            self._last_report = report
            self._frame_index += 1
            while True:
                try:
                    self._queue.put_nowait(item)
                    break
                except queue.Full:
                    try:
                        self._queue.get_nowait()
                        self.frames_dropped_backpressure += 1
                    except queue.Empty:
                        pass

    def frames(
        self, max_frames: Optional[int] = None, idle_timeout_s: Optional[float] = None
    ) -> Iterator[tuple[DataCube, DropReport]]:
        """Yield (cube, per-frame DropReport) until a limit or idle timeout."""
        yielded = 0
        while max_frames is None or yielded < max_frames:
            try:
                yield self._queue.get(timeout=idle_timeout_s)
                yielded += 1
            except queue.Empty:
                return

    def stop(self):
        self._stop.set()
        self._thread.join(timeout=5.0)


def listen(
    port: int,
    cfg: RadarConfig,
    window: int,
    host: str = "0.0.0.0",
    max_frames: Optional[int] = None,
    idle_timeout_s: Optional[float] = None,
    queue_frames: int = 64,
) -> Iterator[tuple[DataCube, DropReport]]:
    """Receive UDP capture traffic and yield completed frames with drop reports.

    Blocks between frames; stops after ``max_frames`` frames or once no frame
    completes within ``idle_timeout_s`` (None = wait forever). Frames with
    zero-filled loss are emitted, not suppressed.
    """
    listener = CaptureListener(port, cfg, window, host=host, queue_frames=queue_frames)
    try:
        yield from listener.frames(max_frames=max_frames, idle_timeout_s=idle_timeout_s)
    finally:
        listener.stop()
