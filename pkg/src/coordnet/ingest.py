"""Commit stream ingestion.

Turns a git history (or a pre-extracted contribution log) into a time-ordered
list of :class:`CommitRecord` objects with function-level attribution.
"""

from __future__ import annotations

import json
import logging
import os
import re
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

log = logging.getLogger(__name__)

FILE_SENTINEL = "<file>"

C_LIKE_SUFFIXES = {
    ".c", ".h", ".cc", ".cpp", ".cxx", ".c++", ".hh", ".hpp", ".hxx", ".inl",
    ".java", ".js", ".jsx", ".ts", ".tsx", ".cs", ".go", ".rs", ".php", ".m",
    ".mm", ".scala", ".kt", ".swift", ".groovy",
}
INDENT_SUFFIXES = {".py"}

# words that may precede "(...) {" without introducing a function body
_NOT_FUNCTIONS = {
    "if", "for", "while", "switch", "catch", "return", "sizeof", "do", "else",
    "struct", "union", "enum", "class", "namespace", "typedef", "using",
    "synchronized", "foreach", "with", "elif", "try", "new", "throw", "case",
    "defined", "__attribute__", "alignof", "decltype", "typeof", "function",
}


class IngestError(RuntimeError):
    """Fatal ingestion problem (unreadable repository, malformed log)."""


@dataclass(frozen=True)
class DeveloperId:
    canonical_key: str
    display_name: str = field(default="", compare=False, hash=False)

    def __post_init__(self):
        if not self.canonical_key:
            raise ValueError("developer key must be non-empty")


@dataclass(frozen=True, order=True)
class ArtifactId:
    file_path: str
    artifact_name: str
    kind: str = "function"

    def __post_init__(self):
        if self.kind not in ("function", "file"):
            raise ValueError(f"unknown artifact kind {self.kind!r}")

    @classmethod
    def file_level(cls, path: str) -> "ArtifactId":
        return cls(path, FILE_SENTINEL, "file")


@dataclass
class CommitRecord:
    commit_id: str
    author: DeveloperId
    timestamp: int
    touched: frozenset
    artifact_texts: dict = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, CommitRecord):
            return NotImplemented
        return (
            self.commit_id == other.commit_id
            and self.author == other.author
            and self.author.display_name == other.author.display_name
            and self.timestamp == other.timestamp
            and self.touched == other.touched
            and self.artifact_texts == other.artifact_texts
        )


# ---------------------------------------------------------------------------
# identities


def normalize_email(email: str, aliases: Mapping[str, str] | None = None) -> str:
    key = email.strip().lower()
    if aliases:
        seen = set()
        while key in aliases and key not in seen:
            seen.add(key)
            key = aliases[key].strip().lower()
    return key


def load_alias_map(path) -> dict[str, str]:
    """Read an alias map: JSON object or two-column text (``alias canonical``)."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = re.split(r"[\s,]+", line)
            if len(parts) != 2:
                raise IngestError(f"{path}: bad alias line {line!r}")
            raw[parts[0]] = parts[1]
    return {k.strip().lower(): v.strip().lower() for k, v in raw.items()}


def make_developer(email: str, name: str = "", aliases=None) -> DeveloperId:
    key = normalize_email(email, aliases)
    if not key:
        key = name.strip().lower()
    return DeveloperId(key, name)


# ---------------------------------------------------------------------------
# function boundary scanning


@dataclass(frozen=True)
class FunctionSpan:
    name: str
    start: int  # 1-based, inclusive
    end: int


def _mask_c_source(text: str) -> str | None:
    """Blank out comments, string and char literals, keeping newlines.

    Returns None on an unterminated block comment.
    """
    out = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        nxt = text[i + 1] if i + 1 < n else ""
        if ch == "/" and nxt == "/":
            j = text.find("\n", i)
            j = n if j < 0 else j
            out.append(" " * (j - i))
            i = j
        elif ch == "/" and nxt == "*":
            j = text.find("*/", i + 2)
            if j < 0:
                return None
            chunk = text[i:j + 2]
            out.append(re.sub(r"[^\n]", " ", chunk))
            i = j + 2
        elif ch in "\"'":
            j = i + 1
            while j < n and text[j] != ch and text[j] != "\n":
                j += 2 if text[j] == "\\" else 1
            j = min(j, n - 1)
            out.append(ch + re.sub(r"[^\n]", " ", text[i + 1:j]) + (text[j] if j > i else ""))
            i = j + 1
        elif ch == "#" and (i == 0 or text[i - 1] == "\n"):
            # preprocessor line (with continuations)
            j = i
            while True:
                k = text.find("\n", j)
                if k < 0:
                    k = n
                    break
                if k > 0 and text[k - 1] == "\\":
                    j = k + 1
                    continue
                break
            out.append(re.sub(r"[^\n]", " ", text[i:k]))
            i = k
        else:
            out.append(ch)
            i += 1
    return "".join(out)


_HEADER_RE = re.compile(
    r"([A-Za-z_~][\w:~]*(?:\s*<[^<>{};]*>)?)\s*\((?:[^(){};]|\([^(){};]*\))*\)"
    r"[\s\w:&*,<>()\[\]=-]*$"
)


def _c_functions(text: str) -> list[FunctionSpan] | None:
    masked = _mask_c_source(text)
    if masked is None:
        return None
    spans = []
    depth = 0
    stmt_start = 0  # offset after the last top-level ';', '{' or '}'
    open_at = None
    header_name = None
    header_line = 0
    # depth at which function bodies may open; raised inside namespace/extern/class blocks
    scope_stack: list[bool] = []  # True if the block is a transparent container
    line = 1
    for pos, ch in enumerate(masked):
        if ch == "\n":
            line += 1
            continue
        container_depth = sum(1 for c in scope_stack if c)
        at_top = depth == container_depth
        if ch == "{":
            if at_top and open_at is None:
                header = masked[stmt_start:pos]
                stripped = header.strip()
                if re.match(r"^(extern|mod)\b[^()]*$", stripped) \
                        or re.search(r"\b(namespace|class|struct|interface|impl|trait|enum)\b[^()]*$", stripped):
                    scope_stack.append(True)
                    depth += 1
                    stmt_start = pos + 1
                    continue
                m = _HEADER_RE.search(header)
                if m:
                    name = m.group(1).split("<")[0].strip()
                    short = name.split("::")[-1].lstrip("~") or name
                    if short not in _NOT_FUNCTIONS and not short.isdigit():
                        open_at = depth
                        header_name = name
                        lead = len(header) - len(header.lstrip())
                        header_line = masked.count("\n", 0, stmt_start + lead) + 1
            scope_stack.append(False)
            depth += 1
        elif ch == "}":
            if depth == 0:
                return None
            depth -= 1
            scope_stack.pop()
            if open_at is not None and depth == open_at:
                spans.append(FunctionSpan(header_name, header_line, line))
                open_at = None
                header_name = None
            if depth == sum(1 for c in scope_stack if c):
                stmt_start = pos + 1
        elif ch == ";" and at_top:
            stmt_start = pos + 1
    if depth != 0:
        return None
    return spans


_PY_DEF = re.compile(r"^(\s*)(?:async\s+)?def\s+(\w+)")


def _indent_functions(text: str) -> list[FunctionSpan]:
    lines = text.splitlines()
    spans = []
    open_defs: list[tuple[int, str, int]] = []  # (indent, name, start)
    last_code = 0

    def close(until_indent, at_line):
        while open_defs and open_defs[-1][0] >= until_indent:
            ind, name, start = open_defs.pop()
            spans.append(FunctionSpan(name, start, max(at_line, start)))

    for idx, raw in enumerate(lines, start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        indent = len(raw) - len(raw.lstrip())
        close(indent, last_code)
        m = _PY_DEF.match(raw)
        if m:
            open_defs.append((len(m.group(1)), m.group(2), idx))
        last_code = idx
    close(-1, last_code)
    spans.sort(key=lambda s: (s.start, -s.end))
    return spans


def find_functions(path: str, text: str) -> list[FunctionSpan] | None:
    """Locate function bodies in a source file.

    Returns None when the file type is unsupported or the boundaries cannot be
    determined (unbalanced braces, unterminated comments).
    """
    suffix = os.path.splitext(path)[1].lower()
    if suffix in C_LIKE_SUFFIXES:
        return _c_functions(text)
    if suffix in INDENT_SUFFIXES:
        return _indent_functions(text)
    return None


def enclosing_function(spans: list[FunctionSpan], line: int) -> FunctionSpan | None:
    best = None
    for s in spans:
        if s.start <= line <= s.end:
            if best is None or (s.end - s.start) < (best.end - best.start):
                best = s
    return best


# ---------------------------------------------------------------------------
# diff parsing and attribution


@dataclass
class FileDiff:
    old_path: str | None
    new_path: str | None
    new_lines: list[int] = field(default_factory=list)  # touched lines, post-image numbering
    binary: bool = False

    @property
    def path(self) -> str:
        return self.new_path or self.old_path


_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def _strip_prefix(p: str) -> str | None:
    p = p.strip()
    if p == "/dev/null":
        return None
    if p.startswith('"') and p.endswith('"'):
        p = p[1:-1].encode("latin-1", "backslashreplace").decode("unicode_escape").encode("latin-1").decode("utf-8", "replace")
    if p[:2] in ("a/", "b/"):
        p = p[2:]
    return p


def parse_unified_diff(diff: str) -> list[FileDiff]:
    """Parse unified-diff text (as produced by ``git diff -U0``)."""
    files: list[FileDiff] = []
    cur: FileDiff | None = None
    for line in diff.splitlines():
        if line.startswith("diff --git "):
            m = re.match(r"diff --git (\"?a/.*?\"?) (\"?b/.*\"?)$", line)
            old = new = None
            if m:
                old, new = _strip_prefix(m.group(1)), _strip_prefix(m.group(2))
            cur = FileDiff(old, new)
            files.append(cur)
        elif cur is None:
            if line.startswith("--- "):
                cur = FileDiff(_strip_prefix(line[4:]), None)
                files.append(cur)
            continue
        elif line.startswith("--- "):
            cur.old_path = _strip_prefix(line[4:].split("\t")[0])
        elif line.startswith("+++ "):
            cur.new_path = _strip_prefix(line[4:].split("\t")[0])
        elif line.startswith("Binary files") or line.startswith("GIT binary patch"):
            cur.binary = True
        elif line.startswith("deleted file mode"):
            cur.new_path = None
        elif line.startswith("rename to "):
            cur.new_path = line[len("rename to "):]
        elif line.startswith("rename from "):
            cur.old_path = line[len("rename from "):]
        elif line.startswith("@@"):
            m = _HUNK_RE.match(line)
            if not m:
                continue
            start = int(m.group(3))
            count = 1 if m.group(4) is None else int(m.group(4))
            if count == 0:
                # pure deletion: the hunk sits after line `start` of the new file
                cur.new_lines.append(max(start, 1) if start > 0 else 0)
            else:
                cur.new_lines.extend(range(start, start + count))
    return files


def _outside_text(text: str, spans: list[FunctionSpan]) -> str:
    lines = text.splitlines()
    inside = set()
    for s in spans:
        inside.update(range(s.start, s.end + 1))
    return "\n".join(l for i, l in enumerate(lines, start=1) if i not in inside)


def extract_artifacts(
    diff,
    mode: str = "function_heuristic",
    snapshot: Callable[[str], str | None] | None = None,
) -> dict[ArtifactId, str | None]:
    """Attribute a commit's diff to artifacts, with their post-commit texts.

    ``diff`` is unified-diff text or a list of :class:`FileDiff`. ``snapshot``
    returns the post-commit content of a path (or None if unavailable).
    """
    files = parse_unified_diff(diff) if isinstance(diff, str) else list(diff)
    if mode not in ("function_heuristic", "file_level"):
        raise ValueError(f"unknown granularity {mode!r}")
    out: dict[ArtifactId, str | None] = {}
    for fd in files:
        path = fd.path
        if path is None:
            continue
        text = snapshot(fd.new_path) if (snapshot and fd.new_path and not fd.binary) else None
        if mode == "file_level" or fd.new_path is None or fd.binary or text is None:
            out[ArtifactId.file_level(path)] = text
            continue
        spans = find_functions(path, text)
        if spans is None:
            out[ArtifactId.file_level(path)] = text
            continue
        lines = text.splitlines()
        hit_outside = not fd.new_lines
        for ln in fd.new_lines:
            span = enclosing_function(spans, ln)
            if span is None:
                hit_outside = True
                continue
            aid = ArtifactId(path, span.name, "function")
            body = "\n".join(lines[span.start - 1:span.end])
            prev = out.get(aid)
            if prev is not None and body not in prev:
                body = prev + "\n" + body
            out[aid] = body
        if hit_outside:
            out[ArtifactId.file_level(path)] = _outside_text(text, spans)
    return out


def extract_contributions(diff, mode: str = "function_heuristic", snapshot=None) -> set[ArtifactId]:
    """Set of artifacts a diff touches; never empty for a non-empty diff."""
    return set(extract_artifacts(diff, mode, snapshot))


# ---------------------------------------------------------------------------
# git


def _git(repo, *args, text=True) -> str:
    try:
        res = subprocess.run(
            ["git", "-C", str(repo), *args],
            capture_output=True, check=True,
        )
    except FileNotFoundError as e:
        raise IngestError("git executable not found") from e
    except subprocess.CalledProcessError as e:
        raise IngestError(f"git {' '.join(args[:2])} failed: {e.stderr.decode(errors='replace').strip()}") from e
    return res.stdout.decode("utf-8", errors="replace") if text else res.stdout


class _BlobReader:
    """Persistent ``git cat-file --batch`` process."""

    def __init__(self, repo):
        self.proc = subprocess.Popen(
            ["git", "-C", str(repo), "cat-file", "--batch"],
            stdin=subprocess.PIPE, stdout=subprocess.PIPE,
        )

    def read(self, rev: str, path: str) -> str | None:
        self.proc.stdin.write(f"{rev}:{path}\n".encode())
        self.proc.stdin.flush()
        header = self.proc.stdout.readline().decode()
        if header.endswith("missing\n") or not header.strip():
            return None
        size = int(header.split()[2])
        data = self.proc.stdout.read(size)
        self.proc.stdout.read(1)
        if b"\0" in data[:8000]:
            return None
        return data.decode("utf-8", errors="replace")

    def close(self):
        if self.proc.poll() is None:
            self.proc.stdin.close()
            self.proc.wait()


_COMMIT_MARK = "\x1ecoordnet-commit\x1f"


def linearize_history(
    repo_path,
    branch: str = "master",
    granularity: str = "function",
    aliases: Mapping[str, str] | None = None,
) -> list[CommitRecord]:
    """First-parent linearization of ``branch``, sorted by commit time.

    Merge commits carry no diff of their own here, so side-branch work that
    lands through a merge is not attributed. Commits whose diff touches no
    file are dropped.
    """
    repo = Path(repo_path)
    if not repo.exists():
        raise IngestError(f"repository path {repo} does not exist")
    _git(repo, "rev-parse", "--git-dir")
    try:
        _git(repo, "rev-parse", "--verify", "--quiet", f"{branch}^{{commit}}")
    except IngestError as e:
        raise IngestError(f"branch {branch!r} not found in {repo}") from e
    mode = "file_level" if granularity in ("file", "file_level") else "function_heuristic"

    raw = _git(
        repo, "log", "--first-parent", "--diff-merges=off", "-p", "-U0",
        "--no-color", "--no-ext-diff", "--no-renames",
        f"--format={_COMMIT_MARK}%H%x1f%ae%x1f%an%x1f%ct", branch,
    )
    blobs = _BlobReader(repo) if mode == "function_heuristic" else None
    records: list[CommitRecord] = []
    skipped = dropped = 0
    try:
        for chunk in raw.split(_COMMIT_MARK)[1:]:
            header, _, body = chunk.partition("\n")
            parts = header.split("\x1f")
            if len(parts) != 4:
                skipped += 1
                continue
            sha, email, name, ts = parts
            try:
                ts = int(ts)
            except ValueError:
                skipped += 1
                continue
            snap = (lambda p, _s=sha: blobs.read(_s, p)) if blobs else None
            try:
                arts = extract_artifacts(body, mode, snap)
            except Exception as e:  # noqa: BLE001 - never abort on one bad commit
                log.warning("skipping unparsable commit %s: %s", sha[:10], e)
                skipped += 1
                continue
            if not arts:
                dropped += 1
                continue
            records.append(CommitRecord(
                sha, make_developer(email, name, aliases), ts, frozenset(arts),
                {a: t for a, t in arts.items() if t is not None},
            ))
    finally:
        if blobs:
            blobs.close()
    if skipped:
        log.warning("%d commits could not be parsed and were skipped", skipped)
    if dropped:
        log.info("%d commits without file changes dropped", dropped)
    records.sort(key=lambda r: r.timestamp)
    return records


# ---------------------------------------------------------------------------
# contribution log (JSONL)


def _check(cond, lineno, msg):
    if not cond:
        raise IngestError(f"contribution log line {lineno}: {msg}")


def load_contribution_log(path, aliases: Mapping[str, str] | None = None) -> list[CommitRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise IngestError(f"contribution log line {lineno}: invalid JSON ({e.msg})") from e
            _check(isinstance(obj, dict), lineno, "expected an object")
            for key, typ in (("commit", str), ("author_email", str), ("author_name", str), ("ts", int)):
                _check(key in obj, lineno, f"missing field {key!r}")
                _check(isinstance(obj[key], typ) and not isinstance(obj[key], bool), lineno,
                       f"field {key!r} must be {typ.__name__}")
            _check(isinstance(obj.get("artifacts"), list), lineno, "field 'artifacts' must be a list")
            arts = {}
            for a in obj["artifacts"]:
                _check(isinstance(a, dict), lineno, "artifact entries must be objects")
                _check(isinstance(a.get("file"), str) and isinstance(a.get("name"), str), lineno,
                       "artifact needs string 'file' and 'name'")
                _check(a.get("kind") in ("function", "file"), lineno, "artifact kind must be 'function' or 'file'")
                text = a.get("text")
                _check(text is None or isinstance(text, str), lineno, "artifact text must be a string or null")
                aid = ArtifactId(a["file"], a["name"], a["kind"])
                if text is not None or aid not in arts:
                    arts[aid] = text
            if not arts:
                log.warning("contribution log line %d: commit %s touches nothing, dropped", lineno, obj["commit"])
                continue
            records.append(CommitRecord(
                obj["commit"], make_developer(obj["author_email"], obj["author_name"], aliases),
                obj["ts"], frozenset(arts), {a: t for a, t in arts.items() if t is not None},
            ))
    if any(b.timestamp < a.timestamp for a, b in zip(records, records[1:])):
        log.warning("%s: records out of timestamp order, re-sorting", path)
        records.sort(key=lambda r: r.timestamp)
    return records


def record_to_json(rec: CommitRecord) -> dict:
    return {
        "commit": rec.commit_id,
        "author_email": rec.author.canonical_key,
        "author_name": rec.author.display_name,
        "ts": rec.timestamp,
        "artifacts": [
            {"file": a.file_path, "name": a.artifact_name, "kind": a.kind,
             "text": rec.artifact_texts.get(a)}
            for a in sorted(rec.touched)
        ],
    }


def write_contribution_log(records: Iterable[CommitRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_json(rec), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
