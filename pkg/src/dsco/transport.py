"""Rank-addressed collective communication over two interchangeable backends.

Both backends implement the same synchronous (rendezvous) collectives with a
fixed rank-ascending reduction order, so identical call sequences produce
bit-identical results on either backend.
"""

import json
import socket
import struct
import threading

import numpy as np

PROTO_VERSION = 1
DEFAULT_TIMEOUT = 30.0

SUM = "sum"
MAX = "max"
MIN = "min"


class TransportError(Exception):
    pass


class Timeout(TransportError):
    pass


class PeerDisconnected(TransportError):
    pass


class ProtocolViolation(TransportError):
    pass


class ChunkCountMismatch(TransportError):
    pass


class LengthMismatch(TransportError):
    pass


def _as_payload(buf):
    a = np.ascontiguousarray(np.asarray(buf, dtype=np.float64).ravel())
    return a


def _reduce(arrays, op):
    lengths = {a.shape[0] for a in arrays}
    if len(lengths) > 1:
        raise LengthMismatch(f"reduce buffers have lengths {sorted(lengths)}")
    out = arrays[0].copy()
    for a in arrays[1:]:
        if op == SUM:
            out += a
        elif op == MAX:
            np.maximum(out, a, out=out)
        elif op == MIN:
            np.minimum(out, a, out=out)
        else:
            raise ProtocolViolation(f"unknown reduce op {op!r}")
    return out


class CommWorld:
    """One handle per rank context.  Subclasses provide _collective()."""

    rank: int
    size: int
    backend: str

    def _collective(self, op, root, payload, aux=None):
        raise NotImplementedError

    def broadcast(self, root, buf):
        return self._collective("broadcast", root, _as_payload(buf))

    def scatter(self, root, chunks):
        if self.rank == root:
            if len(chunks) != self.size:
                raise ChunkCountMismatch(f"expected {self.size} chunks, got {len(chunks)}")
            parts = [_as_payload(c) for c in chunks]
            if len({p.shape[0] for p in parts}) > 1:
                raise LengthMismatch("scatter chunks must have equal lengths")
            payload = np.concatenate(parts) if parts else np.zeros(0)
            aux = parts[0].shape[0]
        else:
            payload = np.zeros(0)
            aux = None
        return self._collective("scatter", root, payload, aux)

    def gather(self, root, buf):
        out = self._collective("gather", root, _as_payload(buf))
        return out if self.rank == root else None

    def allgather(self, buf):
        return self._collective("allgather", 0, _as_payload(buf))

    def reduce(self, root, buf, op=SUM):
        out = self._collective("reduce", root, _as_payload(buf), op)
        return out if self.rank == root else None

    def allreduce(self, buf, op=SUM):
        return self._collective("allreduce", 0, _as_payload(buf), op)

    def barrier(self):
        self._collective("barrier", 0, np.zeros(0))

    def close(self):
        pass


def _serve_collective(op, root, payloads, aux, size):
    """Compute per-rank results for one collective.  Shared by both backends."""
    if op == "broadcast":
        return [payloads[root].copy() for _ in range(size)]
    if op == "barrier":
        return [np.zeros(0) for _ in range(size)]
    if op == "scatter":
        chunk = int(aux[root])
        return [payloads[root][r * chunk:(r + 1) * chunk].copy() for r in range(size)]
    if op in ("gather", "allgather"):
        lengths = {p.shape[0] for p in payloads}
        if len(lengths) > 1:
            raise LengthMismatch(f"gather buffers have lengths {sorted(lengths)}")
        cat = np.concatenate(payloads)
        if op == "gather":
            return [cat.copy() if r == root else np.zeros(0) for r in range(size)]
        return [cat.copy() for _ in range(size)]
    if op in ("reduce", "allreduce"):
        red = _reduce(payloads, aux[0])
        if op == "reduce":
            return [red.copy() if r == root else np.zeros(0) for r in range(size)]
        return [red.copy() for _ in range(size)]
    raise ProtocolViolation(f"unknown collective {op!r}")


# ---------------------------------------------------------------------------
# in-process backend

class _InprocShared:
    def __init__(self, size, timeout):
        self.size = size
        self.timeout = timeout
        self.meta = [None] * size
        self.slots = [None] * size
        self.results = None
        self.error = None
        self.enter = threading.Barrier(size)
        self.leave = threading.Barrier(size)


class InprocWorld(CommWorld):
    backend = "inproc"

    def __init__(self, rank, shared):
        self.rank = rank
        self.size = shared.size
        self._shared = shared

    def _collective(self, op, root, payload, aux=None):
        sh = self._shared
        sh.meta[self.rank] = (op, root, aux)
        sh.slots[self.rank] = payload
        try:
            sh.enter.wait(timeout=sh.timeout)
        except threading.BrokenBarrierError:
            raise Timeout(f"rank {self.rank}: peers did not reach collective {op!r}")
        try:
            if self.rank == 0:
                sh.error = None
                ops = {m[0] for m in sh.meta}
                roots = {m[1] for m in sh.meta}
                if len(ops) > 1 or len(roots) > 1:
                    sh.error = ProtocolViolation(
                        f"mismatched collective across ranks: ops={sorted(ops)} roots={sorted(roots)}")
                else:
                    aux_all = [m[2] for m in sh.meta]
                    try:
                        sh.results = _serve_collective(op, root, sh.slots, aux_all, self.size)
                    except TransportError as exc:
                        sh.error = exc
        finally:
            try:
                sh.leave.wait(timeout=sh.timeout)
            except threading.BrokenBarrierError:
                raise Timeout(f"rank {self.rank}: peers did not leave collective {op!r}")
        if sh.error is not None:
            raise sh.error
        return sh.results[self.rank]


class InprocCluster:
    """N rank contexts in one process; hand each thread its own world."""

    def __init__(self, size, timeout=DEFAULT_TIMEOUT):
        self._shared = _InprocShared(size, timeout)
        self.worlds = [InprocWorld(r, self._shared) for r in range(size)]

    def __getitem__(self, rank):
        return self.worlds[rank]


# ---------------------------------------------------------------------------
# TCP loopback backend
#
# Wire format: every frame is an 8-byte little-endian length followed by the
# body.  The first frame on a connection is the JSON handshake
# {proto_version, rank, size, collective_seq}.  Each collective is a JSON
# header frame then a payload frame of IEEE-754 little-endian doubles.

def _send_frame(sock, body):
    sock.sendall(struct.pack("<Q", len(body)) + body)


def _recv_exact(sock, nbytes):
    chunks = []
    got = 0
    while got < nbytes:
        try:
            part = sock.recv(min(nbytes - got, 1 << 20))
        except socket.timeout:
            raise Timeout("socket read timed out")
        if not part:
            raise PeerDisconnected("connection closed mid-frame")
        chunks.append(part)
        got += len(part)
    return b"".join(chunks)


def _recv_frame(sock):
    header = _recv_exact(sock, 8)
    (length,) = struct.unpack("<Q", header)
    return _recv_exact(sock, length)


def _send_json(sock, obj):
    _send_frame(sock, json.dumps(obj).encode())


def _recv_json(sock):
    return json.loads(_recv_frame(sock).decode())


def _send_doubles(sock, arr):
    _send_frame(sock, np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _recv_doubles(sock):
    return np.frombuffer(_recv_frame(sock), dtype="<f8").copy()


class TcpHub:
    """Central switchboard: accepts N rank connections and serves collectives."""

    def __init__(self, size, port=0, host="127.0.0.1", timeout=DEFAULT_TIMEOUT):
        self.size = size
        self.timeout = timeout
        self._listener = socket.create_server((host, port))
        self._listener.settimeout(timeout)
        self.host, self.port = self._listener.getsockname()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def _run(self):
        socks = [None] * self.size
        try:
            for _ in range(self.size):
                conn, _ = self._listener.accept()
                conn.settimeout(self.timeout)
                hs = _recv_json(conn)
                if hs.get("proto_version") != PROTO_VERSION or hs.get("size") != self.size:
                    _send_json(conn, {"error": "ProtocolViolation",
                                      "detail": "handshake version/size mismatch"})
                    conn.close()
                    return
                socks[hs["rank"]] = conn
            self._serve(socks)
        except (OSError, Timeout, PeerDisconnected):
            pass
        finally:
            for s in socks:
                if s is not None:
                    s.close()
            self._listener.close()

    def _serve(self, socks):
        closed = 0
        while closed < self.size:
            headers, payloads = [None] * self.size, [None] * self.size
            for r, s in enumerate(socks):
                if s is None:
                    continue
                headers[r] = _recv_json(s)
                if headers[r]["op"] == "shutdown":
                    s.close()
                    socks[r] = None
                    closed += 1
                    continue
                payloads[r] = _recv_doubles(s)
            live = [r for r in range(self.size) if socks[r] is not None]
            if not live:
                return
            if closed:
                for r in live:
                    _send_json(socks[r], {"error": "PeerDisconnected",
                                          "detail": "a peer left the world"})
                return
            ops = {headers[r]["op"] for r in live}
            roots = {headers[r]["root"] for r in live}
            if len(ops) > 1 or len(roots) > 1:
                for r in live:
                    _send_json(socks[r], {"error": "ProtocolViolation",
                                          "detail": f"ops={sorted(ops)} roots={sorted(roots)}"})
                continue
            op, root = headers[0]["op"], headers[0]["root"]
            aux = [headers[r].get("aux") for r in range(self.size)]
            try:
                results = _serve_collective(op, root, payloads, aux, self.size)
            except TransportError as exc:
                for r in live:
                    _send_json(socks[r], {"error": type(exc).__name__, "detail": str(exc)})
                continue
            for r in live:
                _send_json(socks[r], {"ok": True})
                _send_doubles(socks[r], results[r])

    def join(self):
        self._thread.join(self.timeout)


_ERROR_TYPES = {
    "ProtocolViolation": ProtocolViolation,
    "LengthMismatch": LengthMismatch,
    "ChunkCountMismatch": ChunkCountMismatch,
    "PeerDisconnected": PeerDisconnected,
    "Timeout": Timeout,
}


class TcpWorld(CommWorld):
    backend = "tcp"

    def __init__(self, rank, size, host, port, timeout=DEFAULT_TIMEOUT):
        self.rank = rank
        self.size = size
        self._seq = 0
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._sock.settimeout(timeout)
        _send_json(self._sock, {"proto_version": PROTO_VERSION, "rank": rank,
                                "size": size, "collective_seq": 0})

    def _collective(self, op, root, payload, aux=None):
        self._seq += 1
        _send_json(self._sock, {"op": op, "root": root, "aux": aux, "seq": self._seq})
        _send_doubles(self._sock, payload)
        reply = _recv_json(self._sock)
        if "error" in reply:
            raise _ERROR_TYPES.get(reply["error"], TransportError)(reply.get("detail", ""))
        return _recv_doubles(self._sock)

    def close(self):
        try:
            _send_json(self._sock, {"op": "shutdown", "root": 0, "aux": None, "seq": -1})
        except OSError:
            pass
        self._sock.close()
