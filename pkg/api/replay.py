"""
Replay fixtures

    <fixture_dir>/<request_key>/prompt.txt      prompt that produced the responses
    <fixture_dir>/<request_key>/digest.txt      sha256 of prompt.txt (recorded or pinned fixtures)
    <fixture_dir>/<request_key>/response_<i>.txt

ReplayBackend serves responses byte-for-byte; RecordingBackend wraps a live
backend and writes what it gets into the same layout. PinningBackend writes
prompt.txt and digest.txt for fixtures that were written by hand.
"""
import os
import threading

from __init__ import app
from api.generator import request_digest
from model.errors import BackendError


FALLBACK_KEYS = {"source_pool": "source_inputs", "transformation_single": "transformation"}


def fixture_path(fixture_dir, key):
    return os.path.join(fixture_dir, key)


class ReplayBackend:
    backend_id = "replay"

    def _directory(self, ctx, cfg):
        if not cfg.fixture_dir:
            raise BackendError("replay backend needs a fixture directory")
        key = ctx.request_key
        path = fixture_path(cfg.fixture_dir, key)
        if not os.path.isdir(path) and key in FALLBACK_KEYS:
            path = fixture_path(cfg.fixture_dir, FALLBACK_KEYS[key])
        if not os.path.isdir(path):
            raise BackendError(f"no replay fixtures for '{key}' under {cfg.fixture_dir}")
        return path, os.path.basename(path) == key

    def count(self, ctx, cfg, prompt):
        path, exact = self._directory(ctx, cfg)
        digest_file = os.path.join(path, "digest.txt")
        # a fallback directory was recorded for another prompt
        if exact and os.path.exists(digest_file):
            with open(digest_file, "r", encoding="utf-8") as f:
                recorded = f.read().strip()
            if recorded != request_digest(prompt):
                raise BackendError(f"prompt drift: fixture {path} was recorded for a different prompt")
        else:
            app.logger.debug(f"Replaying unpinned fixture {path}")
        count = 0
        while count < cfg.repetitions and os.path.exists(os.path.join(path, f"response_{count}.txt")):
            count += 1
        return count

    def complete(self, ctx, cfg, prompt, index):
        path = os.path.join(self._directory(ctx, cfg)[0], f"response_{index}.txt")
        try:
            with open(path, "rb") as f:
                return f.read().decode("utf-8")
        except OSError as e:
            raise BackendError(f"cannot read fixture {path}: {e}")


class RecordingBackend:
    """Forwards to a live backend and captures every exchange as a fixture."""

    def __init__(self, inner, fixture_dir):
        self.inner = inner
        self.fixture_dir = fixture_dir
        self.backend_id = inner.backend_id
        self._lock = threading.Lock()

    def count(self, ctx, cfg, prompt):
        path = fixture_path(self.fixture_dir, ctx.request_key)
        with self._lock:
            os.makedirs(path, exist_ok=True)
            for entry in os.listdir(path):
                if entry.startswith("response_"):
                    os.remove(os.path.join(path, entry))
            with open(os.path.join(path, "prompt.txt"), "w", encoding="utf-8") as f:
                f.write(prompt)
            with open(os.path.join(path, "digest.txt"), "w", encoding="utf-8") as f:
                f.write(request_digest(prompt) + "\n")
        return self.inner.count(ctx, cfg, prompt)

    def complete(self, ctx, cfg, prompt, index):
        text = self.inner.complete(ctx, cfg, prompt, index)
        path = fixture_path(self.fixture_dir, ctx.request_key)
        with open(os.path.join(path, f"response_{index}.txt"), "wb") as f:
            f.write(text.encode("utf-8"))
        return text


class PinningBackend(ReplayBackend):
    """Replays fixtures and writes the requesting prompt next to each exact fixture directory.

    Fallback directories are left unpinned: they answer a prompt recorded
    under another request key.
    """

    def __init__(self):
        self.pinned = {}
        self._lock = threading.Lock()

    def count(self, ctx, cfg, prompt):
        path, exact = self._directory(ctx, cfg)
        if exact:
            digest = request_digest(prompt)
            with self._lock:
                if self.pinned.get(path, digest) != digest:
                    raise BackendError(f"fixture {path} is requested by two different prompts")
                with open(os.path.join(path, "prompt.txt"), "w", encoding="utf-8") as f:
                    f.write(prompt)
                with open(os.path.join(path, "digest.txt"), "w", encoding="utf-8") as f:
                    f.write(digest + "\n")
                self.pinned[path] = digest
            app.logger.info(f"Pinned {path} to prompt {digest[:12]}")
        return super().count(ctx, cfg, prompt)
