"""Behavioral datasets for the four paradigms: records, I/O, splits and text."""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import DomainError, EmptyDataset, SchemaMismatch, TooFewParticipants

WM_SET_SIZES = (3, 6)


class ParadigmKind(enum.Enum):
    DECISION = "decision"
    LEARNING_PARTIAL = "learning_partial"
    LEARNING_FULL = "learning_full"
    PLANNING = "planning"
    WORKING_MEMORY = "working_memory"

    @property
    def is_learning(self):
        return self in (ParadigmKind.LEARNING_PARTIAL, ParadigmKind.LEARNING_FULL)

    @property
    def decisions_per_trial(self):
        return 2 if self is ParadigmKind.PLANNING else 1

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {
            "dm": "decision", "decision_making": "decision",
            "learning": "learning_full", "full": "learning_full",
            "partial": "learning_partial", "bandit": "learning_partial",
            "twostep": "planning", "two_step": "planning",
            "wm": "working_memory", "rlwm": "working_memory", "memory": "working_memory",
        }
        key = aliases.get(key, key)
        for k in cls:
            if k.value == key:
                return k
        raise SchemaMismatch(f"unknown paradigm {name!r}")


def _int(x, what):
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)) and float(x).is_integer():
        return int(x)
    if isinstance(x, str):
        try:
            return int(x.strip())
        except ValueError:
            pass
    raise DomainError(f"{what}: expected an integer, got {x!r}")


def _check(cond, msg):
    if not cond:
        raise DomainError(msg)


@dataclass(frozen=True)
class DecisionTrial:
    features_a: tuple
    features_b: tuple
    validities: tuple
    choice: int  # 0 = A, 1 = B

    def __post_init__(self):
        fa = tuple(_int(v, "features_a") for v in self.features_a)
        fb = tuple(_int(v, "features_b") for v in self.features_b)
        val = tuple(float(v) for v in self.validities)
        object.__setattr__(self, "features_a", fa)
        object.__setattr__(self, "features_b", fb)
        object.__setattr__(self, "validities", val)
        object.__setattr__(self, "choice", _int(self.choice, "choice"))
        _check(len(fa) == len(fb) == len(val) and len(fa) > 0,
               "features_a, features_b and validities must have equal non-zero length")
        _check(all(v >= 0 for v in fa + fb), "features must be non-negative")
        _check(all(0.0 <= v <= 1.0 for v in val), "validities must lie in [0, 1]")
        _check(all(val[i] >= val[i + 1] for i in range(len(val) - 1)),
               "validities must be sorted in descending order")
        _check(self.choice in (0, 1), f"choice must be 0 or 1, got {self.choice}")


@dataclass(frozen=True)
class LearningTrial:
    block: int
    action: int
    reward: int
    forgone_reward: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "block", _int(self.block, "block"))
        object.__setattr__(self, "action", _int(self.action, "action"))
        object.__setattr__(self, "reward", _int(self.reward, "reward"))
        if self.forgone_reward is not None:
            object.__setattr__(self, "forgone_reward", _int(self.forgone_reward, "forgone_reward"))
            _check(self.forgone_reward in (-1, 0, 1), "forgone_reward must be -1, 0 or 1")
        _check(self.block >= 0, "block must be >= 0")
        _check(self.action in (0, 1), f"action must be 0 or 1, got {self.action}")
        _check(self.reward in (-1, 0, 1), f"reward must be -1, 0 or 1, got {self.reward}")


@dataclass(frozen=True)
class PlanningTrial:
    action_1: int
    state_2: int
    action_2: int
    reward: int

    def __post_init__(self):
        for f in ("action_1", "state_2", "action_2", "reward"):
            v = _int(getattr(self, f), f)
            _check(v in (0, 1), f"{f} must be 0 or 1, got {v}")
            object.__setattr__(self, f, v)


@dataclass(frozen=True)
class WMTrial:
    block: int
    set_size: int
    stimulus: int
    action: int
    reward: int

    def __post_init__(self):
        for f in ("block", "set_size", "stimulus", "action", "reward"):
            object.__setattr__(self, f, _int(getattr(self, f), f))
        _check(self.block >= 0, "block must be >= 0")
        _check(self.set_size in WM_SET_SIZES, f"set_size must be one of {WM_SET_SIZES}")
        _check(0 <= self.stimulus < self.set_size,
               f"stimulus {self.stimulus} outside set of size {self.set_size}")
        _check(self.action in (0, 1, 2), f"action must be 0, 1 or 2, got {self.action}")
        _check(self.reward in (0, 1), f"reward must be 0 or 1, got {self.reward}")


RECORD_TYPES = {
    ParadigmKind.DECISION: DecisionTrial,
    ParadigmKind.LEARNING_PARTIAL: LearningTrial,
    ParadigmKind.LEARNING_FULL: LearningTrial,
    ParadigmKind.PLANNING: PlanningTrial,
    ParadigmKind.WORKING_MEMORY: WMTrial,
}


@dataclass(frozen=True)
class ParticipantData:
    participant_id: str
    trials: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "participant_id", str(self.participant_id))
        object.__setattr__(self, "trials", tuple(self.trials))
        if not self.trials:
            raise EmptyDataset(f"participant {self.participant_id!r} has no trials")
        t0 = type(self.trials[0])
        if any(type(t) is not t0 for t in self.trials):
            raise SchemaMismatch(f"participant {self.participant_id!r} mixes trial types")

    def __len__(self):
        return len(self.trials)

    def block_starts(self):
        """Boolean array marking the first trial of every block."""
        n = len(self.trials)
        out = np.zeros(n, dtype=bool)
        if n == 0:
            return out
        out[0] = True
        if hasattr(self.trials[0], "block"):
            b = [t.block for t in self.trials]
            for i in range(1, n):
                out[i] = b[i] != b[i - 1]
        return out

    def column(self, name, dtype=None):
        return np.array([getattr(t, name) for t in self.trials], dtype=dtype)


def _infer_alphabet(kind, participants):
    if not kind.is_learning:
        return (0, 1)
    seen = set()
    for p in participants:
        for t in p.trials:
            seen.add(t.reward)
            if t.forgone_reward is not None:
                seen.add(t.forgone_reward)
    if -1 in seen and 0 in seen:
        raise DomainError("rewards mix the {-1, 1} and {0, 1} alphabets")
    return (-1, 1) if -1 in seen else (0, 1)


@dataclass(frozen=True)
class Dataset:
    kind: ParadigmKind
    participants: tuple
    provenance: str = ""
    reward_alphabet: tuple = field(default=(0, 1), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ParadigmKind.parse(self.kind))
        object.__setattr__(self, "participants", tuple(self.participants))
        if not self.participants:
            raise EmptyDataset("dataset has no participants")
        rec = RECORD_TYPES[self.kind]
        ids = set()
        for p in self.participants:
            if p.participant_id in ids:
                raise SchemaMismatch(f"duplicate participant id {p.participant_id!r}")
            ids.add(p.participant_id)
            if not isinstance(p.trials[0], rec):
                raise SchemaMismatch(
                    f"participant {p.participant_id!r} has {type(p.trials[0]).__name__} "
                    f"records, expected {rec.__name__} for {self.kind.value}")
            if self.kind.is_learning:
                full = self.kind is ParadigmKind.LEARNING_FULL
                for t in p.trials:
                    if (t.forgone_reward is not None) != full:
                        raise SchemaMismatch(
                            "forgone_reward must be present for full feedback and absent for partial")
            if self.kind is ParadigmKind.DECISION:
                nf = len(self.participants[0].trials[0].features_a)
                if any(len(t.features_a) != nf for t in p.trials):
                    raise SchemaMismatch("all decision trials must have the same number of features")
        object.__setattr__(self, "reward_alphabet", _infer_alphabet(self.kind, self.participants))

    def __len__(self):
        return len(self.participants)

    def __iter__(self):
        return iter(self.participants)

    @property
    def ids(self):
        return [p.participant_id for p in self.participants]

    def subset(self, ids, provenance=None):
        lookup = {p.participant_id: p for p in self.participants}
        return Dataset(self.kind, [lookup[i] for i in ids],
                       self.provenance if provenance is None else provenance)

    @property
    def n_features(self):
        if self.kind is not ParadigmKind.DECISION:
            return 0
        return len(self.participants[0].trials[0].features_a)


# ---------------------------------------------------------------------------
# CSV / JSON
# ---------------------------------------------------------------------------

def _csv_columns(kind, n_features=4):
    if kind is ParadigmKind.DECISION:
        return (["participant", "trial"] + [f"fa{i + 1}" for i in range(n_features)]
                + [f"fb{i + 1}" for i in range(n_features)] + ["choice"])
    if kind is ParadigmKind.LEARNING_PARTIAL:
        return ["participant", "block", "trial", "action", "reward"]
    if kind is ParadigmKind.LEARNING_FULL:
        return ["participant", "block", "trial", "action", "reward", "forgone"]
    if kind is ParadigmKind.PLANNING:
        return ["participant", "trial", "action1", "state2", "action2", "reward"]
    return ["participant", "block", "set_size", "trial", "stimulus", "action", "reward"]


def _validities_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".validities.json")


def _load_csv(path, kind):
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not any(c.strip() for c in rows[0]):
        raise EmptyDataset(f"{path}: no header")
    header = [c.strip() for c in rows[0]]
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    if kind is ParadigmKind.DECISION:
        nf = sum(1 for c in header if c.startswith("fa"))
        expected = _csv_columns(kind, nf)
    else:
        expected = _csv_columns(kind)
    if header != expected:
        missing = [c for c in expected if c not in header]
        extra = [c for c in header if c not in expected]
        raise SchemaMismatch(
            f"{path}: columns {header} do not match {kind.value} schema {expected}"
            f" (missing {missing}, extra {extra})")
    if not body:
        raise EmptyDataset(f"{path}: no rows")
    validities = None
    if kind is ParadigmKind.DECISION:
        vp = _validities_path(path)
        if not vp.exists():
            raise SchemaMismatch(f"decision data requires a validities sidecar {vp.name}")
        validities = json.loads(vp.read_text(encoding="utf-8"))
    order = []
    trials = {}
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise SchemaMismatch(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        rec = dict(zip(header, (c.strip() for c in row)))
        pid = rec["participant"]
        if pid not in trials:
            order.append(pid)
            trials[pid] = []
        try:
            if _int(rec["trial"], "trial") < 0:
                raise DomainError("trial must be >= 0")
            trials[pid].append(_record_from_csv(kind, rec, header, validities, pid))
        except DomainError as exc:
            raise DomainError(f"{path}:{lineno}: {exc}") from None
    return Dataset(kind, [ParticipantData(pid, trials[pid]) for pid in order], str(path))


def _record_from_csv(kind, rec, header, validities, pid):
    if kind is ParadigmKind.DECISION:
        nf = sum(1 for c in header if c.startswith("fa"))
        val = validities.get(pid) if isinstance(validities, dict) else validities
        if val is None:
            raise DomainError(f"no validities for participant {pid!r}")
        return DecisionTrial(tuple(rec[f"fa{i + 1}"] for i in range(nf)),
                             tuple(rec[f"fb{i + 1}"] for i in range(nf)),
                             tuple(val), rec["choice"])
    if kind.is_learning:
        return LearningTrial(rec["block"], rec["action"], rec["reward"],
                             rec["forgone"] if kind is ParadigmKind.LEARNING_FULL else None)
    if kind is ParadigmKind.PLANNING:
        return PlanningTrial(rec["action1"], rec["state2"], rec["action2"], rec["reward"])
    return WMTrial(rec["block"], rec["set_size"], rec["stimulus"], rec["action"], rec["reward"])


def _within_block_index(p):
    starts = p.block_starts()
    idx, k = [], -1
    for s in starts:
        k = 0 if s else k + 1
        idx.append(k)
    return idx


def _save_csv(d, path):
    path = Path(path)
    cols = _csv_columns(d.kind, d.n_features or 4)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for p in d.participants:
            within = _within_block_index(p)
            for i, t in enumerate(p.trials):
                if d.kind is ParadigmKind.DECISION:
                    w.writerow([p.participant_id, i, *t.features_a, *t.features_b, t.choice])
                elif d.kind is ParadigmKind.LEARNING_PARTIAL:
                    w.writerow([p.participant_id, t.block, within[i], t.action, t.reward])
                elif d.kind is ParadigmKind.LEARNING_FULL:
                    w.writerow([p.participant_id, t.block, within[i], t.action, t.reward,
                                t.forgone_reward])
                elif d.kind is ParadigmKind.PLANNING:
                    w.writerow([p.participant_id, i, t.action_1, t.state_2, t.action_2, t.reward])
                else:
                    w.writerow([p.participant_id, t.block, t.set_size, within[i], t.stimulus,
                                t.action, t.reward])
    if d.kind is ParadigmKind.DECISION:
        vals = {p.participant_id: list(p.trials[0].validities) for p in d.participants}
        for p in d.participants:
            if any(t.validities != p.trials[0].validities for t in p.trials):
                raise SchemaMismatch("CSV export needs constant validities per participant")
        _validities_path(path).write_text(json.dumps(vals, indent=1) + "\n", encoding="utf-8")


def _meta_to_json(meta):
    def conv(x):
        if isinstance(x, dict):
            return {str(k): conv(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [conv(v) for v in x]
        if isinstance(x, np.integer):
            return int(x)
        if isinstance(x, np.floating):
            return float(x)
        if isinstance(x, np.ndarray):
            return conv(x.tolist())
        return x
    return conv(meta)


def _meta_from_json(meta):
    # block-keyed maps come back with string keys
    out = {}
    for k, v in meta.items():
        if isinstance(v, dict) and v and all(str(kk).lstrip("-").isdigit() for kk in v):
            v = {int(kk): vv for kk, vv in v.items()}
        out[k] = v
    return out


def dataset_to_dict(d):
    tf = [f.name for f in fields(RECORD_TYPES[d.kind])]
    parts = []
    for p in d.participants:
        trials = []
        for t in p.trials:
            rec = {}
            for name in tf:
                v = getattr(t, name)
                if name == "forgone_reward" and d.kind is ParadigmKind.LEARNING_PARTIAL:
                    continue
                rec[name] = list(v) if isinstance(v, tuple) else v
            trials.append(rec)
        entry = {"participant_id": p.participant_id, "trials": trials}
        if p.meta:
            entry["meta"] = _meta_to_json(p.meta)
        parts.append(entry)
    return {"kind": d.kind.value, "provenance": d.provenance, "participants": parts}


def dataset_from_dict(obj, kind=None):
    try:
        file_kind = ParadigmKind.parse(obj["kind"])
        raw_parts = obj["participants"]
    except (KeyError, TypeError):
        raise SchemaMismatch("JSON dataset needs 'kind' and 'participants'") from None
    if kind is not None and ParadigmKind.parse(kind) is not file_kind:
        raise SchemaMismatch(f"file holds {file_kind.value} data, not {ParadigmKind.parse(kind).value}")
    if not raw_parts:
        raise EmptyDataset("dataset has no participants")
    rec = RECORD_TYPES[file_kind]
    names = [f.name for f in fields(rec)]
    required = set(names)
    if file_kind is ParadigmKind.LEARNING_PARTIAL:
        required.discard("forgone_reward")
    parts = []
    for p in raw_parts:
        trials = []
        for t in p.get("trials", []):
            keys = set(t)
            if not required <= keys or not keys <= set(names):
                raise SchemaMismatch(
                    f"trial fields {sorted(keys)} do not match {file_kind.value} schema {sorted(required)}")
            if file_kind is ParadigmKind.LEARNING_PARTIAL and t.get("forgone_reward") is not None:
                raise SchemaMismatch("partial-feedback data must not carry forgone_reward")
            trials.append(rec(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in t.items()}))
        parts.append(ParticipantData(p["participant_id"], trials, _meta_from_json(p.get("meta", {}))))
    return Dataset(file_kind, parts, obj.get("provenance", ""))


def _fmt(path, format):
    if format:
        return format.lower()
    return "json" if Path(path).suffix.lower() == ".json" else "csv"


def load(path, kind=None, format=None):
    """Read a dataset from CSV or JSON. ``kind`` is required for CSV."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    fmt = _fmt(path, format)
    if fmt == "json":
        with open(path, encoding="utf-8") as fh:
            return dataset_from_dict(json.load(fh), kind)
    if fmt != "csv":
        raise SchemaMismatch(f"unsupported format {format!r}")
    if kind is None:
        raise SchemaMismatch("CSV files need an explicit paradigm kind")
    return _load_csv(path, ParadigmKind.parse(kind))


def save(d, path, format=None):
    path = Path(path)
    fmt = _fmt(path, format)
    if fmt == "json":
        path.write_text(json.dumps(dataset_to_dict(d), indent=1) + "\n", encoding="utf-8")
    elif fmt == "csv":
        _save_csv(d, path)
    else:
        raise SchemaMismatch(f"unsupported format {format!r}")
    return path


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    prompt_fraction: float = 0.2
    validation_fraction: float = 0.4
    test_fraction: float = 0.4
    seed: int = 0

    def __post_init__(self):
        fr = (self.prompt_fraction, self.validation_fraction, self.test_fraction)
        if any(not (0.0 < f < 1.0) for f in fr) or not math.isclose(sum(fr), 1.0, abs_tol=1e-9):
            raise DomainError(f"split fractions must be positive and sum to 1, got {fr}")


def split_sizes(n, fractions):
    """Largest-remainder apportionment of ``n`` items."""
    raw = [f * n for f in fractions]
    sizes = [int(math.floor(r)) for r in raw]
    rem = n - sum(sizes)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - sizes[i]), i))
    for i in order[:rem]:
        sizes[i] += 1
    return sizes


def split(d, s=None):
    """Partition participants into (prompt, validation, test) datasets."""
    s = s or SplitSpec()
    n = len(d.participants)
    sizes = split_sizes(n, (s.prompt_fraction, s.validation_fraction, s.test_fraction))
    if min(sizes) == 0:
        raise TooFewParticipants(f"{n} participants cannot fill a three-way split {sizes}")
    perm = np.random.default_rng(s.seed).permutation(n)
    ids = [d.participants[i].participant_id for i in perm]
    a, b = sizes[0], sizes[0] + sizes[1]
    groups = (ids[:a], ids[a:b], ids[b:])
    names = ("prompt", "validation", "test")
    return tuple(d.subset(g, f"{d.provenance}#{nm}") for g, nm in zip(groups, names))


# ---------------------------------------------------------------------------
# text serialization
# ---------------------------------------------------------------------------

CARPETS = ("A", "B")
PLANETS = ("Blue Mountain", "Pink Mountain")
LAMPS = (("S", "D"), ("W", "K"))


def _fmt_num(v):
    return f"{v:g}"


def trial_lines(kind, p, max_trials=None):
    """Text lines for the first ``max_trials`` trials of one participant."""
    trials = p.trials if max_trials is None else p.trials[:max_trials]
    within = _within_block_index(p)
    out = []
    for i, t in enumerate(trials):
        if kind is ParadigmKind.DECISION:
            a = " ".join(str(v) for v in t.features_a)
            b = " ".join(str(v) for v in t.features_b)
            out.append(f"Trial {i + 1}: Product A ratings: [{a}]. Product B ratings: [{b}]. "
                       f"Chosen option: {'AB'[t.choice]}")
        elif kind is ParadigmKind.LEARNING_FULL:
            out.append(f"Block: {t.block + 1}, Trial: {within[i] + 1}, Chosen action: {t.action}, "
                       f"Reward for the chosen action: {t.reward}, "
                       f"Reward for the unchosen action: {t.forgone_reward}")
        elif kind is ParadigmKind.LEARNING_PARTIAL:
            out.append(f"Block: {t.block + 1}, Trial: {within[i] + 1}, Chosen action: {t.action}, "
                       f"Reward for the chosen action: {t.reward}")
        elif kind is ParadigmKind.PLANNING:
            coins = "coin" if t.reward == 1 else "coins"
            out.append(f"Trial {i}: The participant chose magic carpet {CARPETS[t.action_1]} "
                       f"and ended up on the {PLANETS[t.state_2]}.")
            out.append(f"The participant rubbed the lamp {LAMPS[t.state_2][t.action_2]} "
                       f"and received {t.reward} {coins}.")
        else:
            out.append(f"Block: {t.block}, Set size:{t.set_size}, Trial: {within[i]}, "
                       f"State: {t.stimulus}, Chosen action: {t.action}, Reward: {t.reward}")
    return out


def to_prompt_text(d, max_participants=None, max_trials=None):
    """Serialize participants into the line format shown to the proposal engine."""
    parts = d.participants if max_participants is None else d.participants[:max_participants]
    chunks = []
    for k, p in enumerate(parts, start=1):
        lines = [f"Data from participant {k}:"]
        if d.kind is ParadigmKind.DECISION:
            v = ", ".join(_fmt_num(x) for x in p.trials[0].validities)
            lines.append(f"Expert validities: {v}")
        lines.extend(trial_lines(d.kind, p, max_trials))
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + ("\n" if chunks else "")


def with_meta(p, **meta):
    m = dict(p.meta)
    m.update(meta)
    return replace(p, meta=m)
