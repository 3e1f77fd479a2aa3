""" Chat-completions backend: one POST per repetition, first choice's message content back """
import os
import random
import time

import requests

from __init__ import app
from api.prompts import split_messages
from model.errors import BackendError


BACKOFF_BASE_SECONDS = 0.5
RETRY_STATUSES = {429, 500, 502, 503, 504}
BAD_ENDPOINT_ERRORS = (
    requests.exceptions.MissingSchema,
    requests.exceptions.InvalidSchema,
    requests.exceptions.InvalidURL,
)


class HttpBackend:
    backend_id = "http"

    def __init__(self, session=None, sleep=time.sleep):
        self.session = session or requests
        self.sleep = sleep

    def count(self, ctx, cfg, prompt):
        if not cfg.endpoint_url:
            raise BackendError("http backend needs endpoint-url")
        return cfg.repetitions

    def _headers(self, cfg):
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(cfg.auth_token_env_var)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, ctx, cfg, prompt, index):
        """POST the prompt; retries transport errors and 429/5xx with jittered backoff.

        Args:
            ctx: request context (unused beyond logging).
            cfg: GenConfig carrying endpoint, model, timeout and retry budget.
            prompt: assembled prompt text.
            index: repetition index, mixed into the request seed.

        Returns:
            the first choice's message content.
        """
        body = {
            "model": cfg.model,
            "messages": split_messages(prompt),
            "temperature": cfg.temperature,
            "seed": cfg.seed + index,
        }
        jitter = random.Random(cfg.seed * 1_000_003 + index)
        last_error = None
        for attempt in range(cfg.max_retries + 1):
            try:
                response = self.session.post(cfg.endpoint_url, headers=self._headers(cfg), json=body,
                                             timeout=cfg.timeout_seconds)
            except BAD_ENDPOINT_ERRORS as e:
                raise BackendError(f"invalid chat endpoint '{cfg.endpoint_url}': {e}")
            except requests.exceptions.RequestException as e:
                last_error = str(e)
            else:
                if response.status_code not in RETRY_STATUSES:
                    return self._content(response)
                last_error = f"HTTP {response.status_code}"
            if attempt < cfg.max_retries:
                delay = BACKOFF_BASE_SECONDS * (2 ** attempt) * (1 + jitter.random())
                app.logger.warning(f"{ctx.request_key} repetition {index}: {last_error}, retrying in {delay:.2f}s")
                self.sleep(delay)
        raise BackendError(f"chat endpoint unreachable after {cfg.max_retries + 1} attempt(s): {last_error}")

    @staticmethod
    def _content(response):
        try:
            response.raise_for_status()
        except requests.exceptions.HTTPError as e:
            raise BackendError(f"chat endpoint rejected the request: {e}")
        try:
            return response.json()["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise BackendError(f"malformed chat response: {e}")
