"""JSON files for verifiers, provers, channels and state sets.

Complex entries are stored as ``["re", "im"]`` pairs of decimal strings with
17 significant digits, which round-trips every double exactly.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from ..channels import ChannelImage, HullSet, MixedCircuit
from ..errors import PreconditionError
from ..games import (
    ROLE_MESSAGE,
    ROLE_NO_MESSAGE,
    ROLE_PRIVATE,
    ROLE_YES_MESSAGE,
    DqipVerifier,
    QipVerifier,
)
from ..linalg import SpaceLayout
from ..transcript import ProverStrategy

FORMAT_VERSION = 1
ROLE_ORDER = {ROLE_YES_MESSAGE: 0, ROLE_MESSAGE: 0, ROLE_PRIVATE: 1, ROLE_NO_MESSAGE: 2}


def encode_matrix(a) -> list:
    a = np.asarray(a, dtype=complex)
    return [[[format(z.real, ".17g"), format(z.imag, ".17g")] for z in row] for row in a]


def decode_matrix(rows) -> np.ndarray:
    try:
        out = np.array([[complex(float(re), float(im)) for re, im in row] for row in rows], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise PreconditionError(f"malformed matrix entry: {exc}") from None
    if out.ndim != 2:
        raise PreconditionError("a matrix must be a list of rows of [re, im] pairs")
    return out


def _layout_doc(layout: SpaceLayout, roles: dict) -> list:
    return [{"label": label, "dim": dim, "role": roles[label]} for label, dim in layout.factors]


def _layout_from_doc(doc) -> tuple[SpaceLayout, dict]:
    try:
        factors = [(f["label"], int(f["dim"])) for f in doc]
        roles = {f["label"]: f["role"] for f in doc}
    except (KeyError, TypeError) as exc:
        raise PreconditionError(f"malformed layout: {exc}") from None
    order = [ROLE_ORDER.get(roles[label], -1) for label, _ in factors]
    if -1 in order:
        raise PreconditionError(f"unknown role in layout: {sorted(set(roles.values()))}")
    if order != sorted(order):
        raise PreconditionError("layout factors must be ordered: yes-prover messages, verifier, no-prover messages")
    return SpaceLayout(factors), roles


def _header(kind: str) -> dict:
    return {"format": "refgame", "version": FORMAT_VERSION, "kind": kind}


def _check_header(doc: dict, kinds) -> str:
    if not isinstance(doc, dict) or doc.get("format") != "refgame":
        raise PreconditionError("not a refgame file")
    if doc.get("version") != FORMAT_VERSION:
        raise PreconditionError(f"unsupported version {doc.get('version')!r}")
    kind = doc.get("kind")
    if kind not in kinds:
        raise PreconditionError(f"expected a file of kind {sorted(kinds)}, got {kind!r}")
    return kind


def game_to_doc(verifier) -> dict:
    if isinstance(verifier, QipVerifier):
        doc = _header("qip")
        doc["rounds"] = {"verifier": [encode_matrix(u) for u in verifier.rounds]}
    elif isinstance(verifier, DqipVerifier):
        doc = _header("dqip")
        doc["rounds"] = {"yes": [encode_matrix(u) for u in verifier.yes_rounds],
                         "no": [encode_matrix(u) for u in verifier.no_rounds]}
    else:
        raise PreconditionError("expected a QipVerifier or DqipVerifier")
    doc["layout"] = _layout_doc(verifier.layout, verifier.roles)
    doc["output"] = verifier.output
    return doc


def game_from_doc(doc: dict):
    kind = _check_header(doc, {"qip", "dqip"})
    layout, roles = _layout_from_doc(doc.get("layout"))
    rounds = doc.get("rounds") or {}
    try:
        if kind == "qip":
            return QipVerifier(layout, roles, doc["output"], tuple(decode_matrix(m) for m in rounds["verifier"]))
        return DqipVerifier(layout, roles, doc["output"], tuple(decode_matrix(m) for m in rounds["yes"]),
                            tuple(decode_matrix(m) for m in rounds["no"]))
    except KeyError as exc:
        raise PreconditionError(f"game file lacks {exc}") from None


def prover_to_doc(prover: ProverStrategy, role: str) -> dict:
    doc = _header("prover")
    doc.update(role=role, env_dim=prover.env_dim, unitaries=[encode_matrix(u) for u in prover.unitaries])
    return doc


def prover_from_doc(doc: dict) -> tuple[ProverStrategy, str]:
    _check_header(doc, {"prover"})
    try:
        return ProverStrategy([decode_matrix(u) for u in doc["unitaries"]], int(doc["env_dim"])), doc["role"]
    except KeyError as exc:
        raise PreconditionError(f"prover file lacks {exc}") from None


def channel_to_doc(channel: MixedCircuit) -> dict:
    doc = _header("channel")
    doc.update(in_dim=channel.in_dim, out_dim=channel.out_dim, env_dim=channel.env_dim,
               stinespring=encode_matrix(channel.unitary))
    return doc


def channel_from_doc(doc: dict) -> MixedCircuit:
    _check_header(doc, {"channel"})
    try:
        return MixedCircuit(decode_matrix(doc["stinespring"]), int(doc["in_dim"]), int(doc["out_dim"]),
                            int(doc["env_dim"]))
    except KeyError as exc:
        raise PreconditionError(f"channel file lacks {exc}") from None


def sets_from_doc(doc: dict):
    """Two convex sets, each ``{"hull": [matrices]}`` or ``{"channel": channel-doc}``."""
    _check_header(doc, {"sets"})
    out = []
    for entry in doc.get("sets", []):
        if "hull" in entry:
            out.append(HullSet([decode_matrix(m) for m in entry["hull"]]))
        elif "channel" in entry:
            out.append(ChannelImage(channel_from_doc(entry["channel"])))
        else:
            raise PreconditionError("each set needs a 'hull' or a 'channel' entry")
    if len(out) != 2:
        raise PreconditionError("a sets file lists exactly two sets")
    return out


def sets_to_doc(sets) -> dict:
    doc = _header("sets")
    entries = []
    for s in sets:
        if isinstance(s, HullSet):
            entries.append({"hull": [encode_matrix(m) for m in s.states]})
        elif isinstance(s, ChannelImage):
            entries.append({"channel": channel_to_doc(s.channel)})
        else:
            raise PreconditionError(f"cannot serialise {type(s).__name__}")
    doc["sets"] = entries
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def write_doc(doc: dict, path) -> None:
    Path(path).write_text(dumps(doc))


def read_doc(path_or_name) -> dict:
    """Read a file, falling back to a bundled fixture of that name."""
    path = Path(path_or_name)
    if not path.exists():
        bundled = resources.files("refgame") / "fixtures" / f"{path_or_name}.json"
        if bundled.is_file():
            return json.loads(bundled.read_text())
        raise PreconditionError(f"no such file or bundled fixture: {path_or_name}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise PreconditionError(f"{path} is not valid JSON: {exc}") from None


def bundled_fixtures() -> list[str]:
    folder = resources.files("refgame") / "fixtures"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))
