"""Versioned flat-text format for trained plans and policies.

Layout::

    riskplan-params 1
    domain: navigation
    representation: drp
    activation: relu
    seed: 0
    config_hash: 3f2a...
    shapes: 2x256 256 256x128 128 ...
    values:
    <one value per line, 17 significant digits, row-major>
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .planners import Plan, PolicyParams

MAGIC = "riskplan-params"
VERSION = 1


class ParamsFormatError(ValueError):
    pass


class ParamsMismatchError(ValueError):
    pass


@dataclass
class ParamsHeader:
    domain: str
    representation: str
    seed: int
    config_hash: str
    shapes: list[tuple[int, ...]]
    activation: str = "relu"


def dump_params(path, representation, domain: str, seed: int, config_hash: str = ""):
    params = representation.parameters()
    shapes = " ".join("x".join(str(d) for d in p.shape) or "scalar" for p in params)
    lines = [
        f"{MAGIC} {VERSION}",
        f"domain: {domain}",
        f"representation: {representation.kind}",
        f"activation: {getattr(representation, 'activation', 'none')}",
        f"seed: {seed}",
        f"config_hash: {config_hash}",
        f"shapes: {shapes}",
        "values:",
    ]
    lines += [f"{v:.17g}" for p in params for v in np.asarray(p, dtype=float).reshape(-1)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _shape(token: str) -> tuple[int, ...]:
    return () if token == "scalar" else tuple(int(d) for d in token.split("x"))


def read_header(path) -> tuple[ParamsHeader, list[str]]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith(MAGIC):
        raise ParamsFormatError(f"{path}: not a params file")
    version = int(lines[0].split()[1])
    if version != VERSION:
        raise ParamsFormatError(f"{path}: unsupported version {version}")
    fields = {}
    k = 1
    while k < len(lines) and lines[k] != "values:":
        key, _, val = lines[k].partition(":")
        fields[key.strip()] = val.strip()
        k += 1
    try:
        header = ParamsHeader(
            domain=fields["domain"],
            representation=fields["representation"],
            seed=int(fields["seed"]),
            config_hash=fields.get("config_hash", ""),
            shapes=[_shape(t) for t in fields["shapes"].split()],
            activation=fields.get("activation", "relu"),
        )
    except KeyError as exc:
        raise ParamsFormatError(f"{path}: missing header field {exc}") from None
    return header, lines[k + 1:]


def load_params(path, expect_domain: str | None = None):
    """Read a params file; returns ``(representation, header)``."""
    header, body = read_header(path)
    if expect_domain is not None and header.domain != expect_domain:
        raise ParamsMismatchError(
            f"{path} was trained on domain {header.domain!r}, config asks for {expect_domain!r}")
    values = np.array([float(v) for v in body if v.strip()])
    sizes = [int(np.prod(s)) for s in header.shapes]
    if sum(sizes) != values.size:
        raise ParamsFormatError(f"{path}: expected {sum(sizes)} values, found {values.size}")
    arrays, k = [], 0
    for shape, size in zip(header.shapes, sizes):
        arrays.append(values[k:k + size].reshape(shape))
        k += size
    if header.representation == "slp":
        rep = Plan(arrays[0])
    elif header.representation == "drp":
        rep = PolicyParams(arrays[0::2], arrays[1::2], header.activation)
    else:
        raise ParamsFormatError(f"{path}: unknown representation {header.representation!r}")
    return rep, header
