"""Hash-chained, append-only witness ledger with verification and replay.

On-disk form: an 8-byte magic header, then one record per entry::

    u32 length | body | self_hash (32 bytes)

    body = u64 seq | str act | str decision | str policy_version
           | ctx_abs (32 bytes) | u32 n_tags, str tag... | prev_hash (32 bytes)

where ``str`` is a u32 length followed by UTF-8 bytes and every integer is
big-endian. ``self_hash`` is SHA-256 over ``body``. Request contexts are
kept in a content-addressed side file keyed by ``ctx_abs`` so replay can
re-run the decision function.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

from .errors import LedgerError, OutOfBandAppend, ReplayMismatch, ReplayUnavailable
from .policy import MediationRequest, adjudicate
from .state import Decision

MAGIC = b"GKWL\x00\x01\r\n"
ZERO_HASH = "00" * 32


@dataclass(frozen=True)
class WitnessRecord:
    seq: int
    act: str
    decision: str
    policy_version: str
    ctx_abs: str
    tag_set: Tuple[str, ...]
    prev_hash: str
    self_hash: str

    def to_json(self):
        return {
            "seq": self.seq,
            "act": self.act,
            "decision": self.decision,
            "policy_version": self.policy_version,
            "ctx_abs": self.ctx_abs,
            "tag_set": list(self.tag_set),
            "prev_hash": self.prev_hash,
            "self_hash": self.self_hash,
        }


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    first_bad_seq: Optional[int]
    checked: int
    reason: str = ""

    def to_json(self):
        return {"ok": self.ok, "first_bad_seq": self.first_bad_seq, "checked": self.checked, "reason": self.reason}


def _s(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack(">I", len(raw)) + raw


def _digest_bytes(hexstr: str) -> bytes:
    raw = bytes.fromhex(hexstr)
    if len(raw) != 32:
        raise ValueError("digest must be 32 bytes")
    return raw


def record_body(seq, act, decision, policy_version, ctx_abs, tag_set, prev_hash) -> bytes:
    tags = sorted(tag_set)
    return b"".join([
        struct.pack(">Q", seq),
        _s(act),
        _s(decision),
        _s(policy_version),
        _digest_bytes(ctx_abs),
        struct.pack(">I", len(tags)),
        *(_s(t) for t in tags),
        _digest_bytes(prev_hash),
    ])


def compute_hash(seq, act, decision, policy_version, ctx_abs, tag_set, prev_hash) -> str:
    return hashlib.sha256(record_body(seq, act, decision, policy_version, ctx_abs, tag_set, prev_hash)).hexdigest()


def make_record(seq, act, decision, policy_version, ctx_abs, tag_set, prev_hash) -> WitnessRecord:
    tags = tuple(sorted(tag_set))
    h = compute_hash(seq, act, decision, policy_version, ctx_abs, tags, prev_hash)
    return WitnessRecord(seq, act, decision, policy_version, ctx_abs, tags, prev_hash, h)


def encode_record(rec: WitnessRecord) -> bytes:
    body = record_body(rec.seq, rec.act, rec.decision, rec.policy_version, rec.ctx_abs, rec.tag_set, rec.prev_hash)
    payload = body + bytes.fromhex(rec.self_hash)
    return struct.pack(">I", len(payload)) + payload


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise ValueError("truncated record")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self):
        return struct.unpack(">I", self.take(4))[0]

    def string(self):
        return self.take(self.u32()).decode("utf-8")


def decode_record(payload: bytes) -> WitnessRecord:
    r = _Reader(payload)
    seq = struct.unpack(">Q", r.take(8))[0]
    act = r.string()
    decision = r.string()
    version = r.string()
    ctx = r.take(32).hex()
    tags = tuple(r.string() for _ in range(r.u32()))
    prev = r.take(32).hex()
    self_hash = r.take(32).hex()
    if r.pos != len(payload):
        raise ValueError("trailing bytes in record")
    return WitnessRecord(seq, act, decision, version, ctx, tags, prev, self_hash)


class Ledger:
    """Append-only witness store.

    Appends are accepted only with the token handed out by
    :meth:`bind_executor`; any other attempt is refused and logged in
    :attr:`incidents`.
    """

    def __init__(self):
        self._blobs: List[bytes] = []
        self._records: List[WitnessRecord] = []
        self.contexts: Dict[str, bytes] = {}
        self.incidents: List[dict] = []
        self._token = None

    def __len__(self):
        return len(self._blobs)

    @property
    def head_hash(self) -> str:
        return self._records[-1].self_hash if self._records else ZERO_HASH

    @property
    def records(self) -> List[WitnessRecord]:
        return list(self._records)

    def blobs(self) -> List[bytes]:
        return list(self._blobs)

    def bind_executor(self):
        if self._token is not None:
            raise LedgerError("ledger already bound to an executor")
        self._token = object()
        return self._token

    def prepare(self, act, decision, policy_version, ctx_abs, tag_set) -> WitnessRecord:
        """Build (but do not append) the next record."""
        return make_record(len(self._blobs), act, str(getattr(decision, "value", decision)),
                           policy_version, ctx_abs, [getattr(t, "value", t) for t in tag_set], self.head_hash)

    def append(self, rec: WitnessRecord, token=None, ctx_bytes: Optional[bytes] = None) -> WitnessRecord:
        if token is None or token is not self._token:
            self.incidents.append({"kind": "OUT_OF_BAND_APPEND", "act": rec.act, "seq": len(self._blobs)})
            raise OutOfBandAppend(f"append of {rec.act!r} outside the executor commit point")
        if rec.seq != len(self._blobs) or rec.prev_hash != self.head_hash:
            raise LedgerError("record does not extend the current head")
        blob = encode_record(rec)
        if ctx_bytes is not None:
            self.contexts[rec.ctx_abs] = ctx_bytes
        self._blobs.append(blob)
        self._records.append(rec)
        return rec

    def anchor(self, act, decision, policy_version, ctx_abs, tag_set, token=None, ctx_bytes=None) -> WitnessRecord:
        return self.append(self.prepare(act, decision, policy_version, ctx_abs, tag_set), token, ctx_bytes)

    def tamper_byte(self, seq: int, offset: int):
        """Flip one byte of an anchored record (violation injection only)."""
        blob = bytearray(self._blobs[seq])
        blob[4 + offset] ^= 0x01
        self._blobs[seq] = bytes(blob)

    def to_bytes(self) -> bytes:
        return MAGIC + b"".join(self._blobs)

    def save(self, path):
        path = Path(path)
        path.write_bytes(self.to_bytes())
        ctx_lines = [json.dumps({"ctx_abs": k, "ctx": v.decode()}, sort_keys=True) for k, v in sorted(self.contexts.items())]
        Path(str(path) + ".ctx.jsonl").write_text("".join(line + "\n" for line in ctx_lines))

    def export_json(self) -> list:
        out = []
        for i, blob in enumerate(self._blobs):
            try:
                out.append(decode_record(blob[4:]).to_json())
            except (ValueError, UnicodeDecodeError):
                out.append({"seq": i, "unreadable": blob.hex()})
        return out

    @classmethod
    def from_bytes(cls, data: bytes) -> "Ledger":
        if not data.startswith(MAGIC):
            raise LedgerError("not a witness ledger file")
        led = cls()
        pos = len(MAGIC)
        while pos < len(data):
            if pos + 4 > len(data):
                led._blobs.append(data[pos:])
                break
            n = struct.unpack(">I", data[pos:pos + 4])[0]
            led._blobs.append(data[pos:pos + 4 + n])
            pos += 4 + n
        for blob in led._blobs:
            try:
                led._records.append(decode_record(blob[4:]))
            except (ValueError, UnicodeDecodeError):
                break
        return led

    @classmethod
    def load(cls, path) -> "Ledger":
        path = Path(path)
        led = cls.from_bytes(path.read_bytes())
        ctx_path = Path(str(path) + ".ctx.jsonl")
        if ctx_path.exists():
            for line in ctx_path.read_text().splitlines():
                if line.strip():
                    entry = json.loads(line)
                    led.contexts[entry["ctx_abs"]] = entry["ctx"].encode()
        return led


def verify_records(records) -> VerificationReport:
    prev = ZERO_HASH
    for i, r in enumerate(records):
        if r.seq != i:
            return VerificationReport(False, i, i, "sequence gap")
        if r.prev_hash != prev:
            return VerificationReport(False, i, i, "broken link")
        try:
            h = compute_hash(r.seq, r.act, r.decision, r.policy_version, r.ctx_abs, r.tag_set, r.prev_hash)
        except ValueError:
            return VerificationReport(False, i, i, "malformed digest")
        if h != r.self_hash or tuple(sorted(r.tag_set)) != tuple(r.tag_set):
            return VerificationReport(False, i, i, "hash mismatch")
        prev = r.self_hash
    return VerificationReport(True, None, len(records))


def verify_chain(ledger) -> VerificationReport:
    """Recompute every hash and link; report the first failing sequence number."""
    if not isinstance(ledger, Ledger):
        return verify_records(list(ledger))
    records = []
    for i, blob in enumerate(ledger.blobs()):
        try:
            if len(blob) < 4 or struct.unpack(">I", blob[:4])[0] != len(blob) - 4:
                raise ValueError("bad length prefix")
            records.append(decode_record(blob[4:]))
        except (ValueError, UnicodeDecodeError):
            report = verify_records(records)
            if not report.ok:
                return report
            return VerificationReport(False, i, i, "unparseable record")
    return verify_records(records)


def replay(w: WitnessRecord, policy_registry: Mapping, contexts: Mapping[str, bytes],
           policy_version: Optional[str] = None) -> Decision:
    """Re-run adjudication for ``w`` and check it against the stored decision.

    ``policy_version`` overrides the pinned version (used to show that a
    different version does not reproduce the decision).
    """
    version = policy_version or w.policy_version
    if version not in policy_registry:
        raise ReplayUnavailable(f"seq {w.seq}: policy version {version!r} not in registry")
    ctx = contexts.get(w.ctx_abs)
    if ctx is None:
        raise ReplayUnavailable(f"seq {w.seq}: context {w.ctx_abs[:12]} not stored")
    if hashlib.sha256(ctx).hexdigest() != w.ctx_abs:
        raise ReplayUnavailable(f"seq {w.seq}: stored context does not match its digest")
    req = MediationRequest.from_context(ctx, w.act)
    decision = adjudicate(req, policy_registry[version])
    if decision.value != w.decision:
        raise ReplayMismatch(w.seq, w.decision, decision.value)
    return decision
