"""Line-oriented TCP bridge so external agents can drive an environment.

Each line is one JSON object with a ``type`` and a ``session`` field. A
connection owns one session and one environment; requests are handled
strictly in order and every request gets a reply. See docs/bridge.md for
the message reference.
"""
from __future__ import annotations

import itertools
import json
import logging
import socket
import socketserver
import threading
from typing import Any, Mapping

from .config import with_overrides
from .domain import ConfigError, SimConfig
from .engine import EpisodeFinished, IllegalAction
from .env import OffloadEnv

log = logging.getLogger(__name__)

CLIENT_TYPES = ("hello", "reset", "act")


class ProtocolError(Exception):
    pass


class Session:
    def __init__(self, config: SimConfig, session_id: str = "s1"):
        self.id = session_id
        self.config = config
        self.env = OffloadEnv(config)
        self.resets = 0

    def _obs_message(self, obs) -> dict[str, Any]:
        return {
            "type": "obs",
            "session": self.id,
            "time": self.env.state.time,
            "obs": {str(a): o.vector.tolist() for a, o in obs.items()},
            "masks": {str(a): o.action_mask.tolist() for a, o in obs.items()},
        }

    def hello(self, msg) -> list[dict]:
        return [{
            "type": "hello",
            "session": self.id,
            "agents": self.env.agents,
            "obs_width": self.env.observation_width,
            "n_actions": self.env.n_actions,
            "horizon": self.config.horizon,
        }]

    def reset(self, msg) -> list[dict]:
        overrides = msg.get("config")
        if overrides:
            if self.resets:
                raise ProtocolError("reconfiguration requires a new session")
            if not isinstance(overrides, Mapping):
                raise ProtocolError("config must be an object of dotted keys")
            try:
                self.config = with_overrides(self.config, overrides)
                self.env = OffloadEnv(self.config)
            except ConfigError as e:
                raise ProtocolError(str(e)) from None
        seed = msg.get("seed")
        if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
            raise ProtocolError("seed must be an integer")
        try:
            obs = self.env.reset(seed)
        except ConfigError as e:
            raise ProtocolError(str(e)) from None
        self.resets += 1
        return [self._obs_message(obs)]

    def act(self, msg) -> list[dict]:
        if self.env.state is None:
            raise ProtocolError("reset required before act")
        raw = msg.get("actions")
        if not isinstance(raw, Mapping):
            raise ProtocolError("actions must be an object mapping agent id to index")
        try:
            actions = {int(k): v for k, v in raw.items()}
        except ValueError:
            raise ProtocolError("agent ids must be integers") from None
        missing = [a for a in self.env.agents if a not in actions]
        if missing:
            raise ProtocolError(f"incomplete joint action: missing agents {missing}")
        unknown = sorted(set(actions) - set(self.env.agents))
        if unknown:
            raise ProtocolError(f"unknown agents {unknown}")
        try:
            obs, rewards, done, _ = self.env.step(actions)
        except (IllegalAction, EpisodeFinished) as e:
            raise ProtocolError(str(e)) from None
        replies = [{"type": "reward", "session": self.id, "time": self.env.state.time,
                    "rewards": {str(a): r for a, r in rewards.items()}}]
        if done:
            replies.append({"type": "done", "session": self.id, "time": self.env.state.time,
                            "metrics": self.env.metrics.to_dict()})
        else:
            replies.append(self._obs_message(obs))
        return replies

    def handle(self, line: str) -> list[dict]:
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as e:
            raise ProtocolError(f"malformed line: {e.msg}") from None
        if not isinstance(msg, dict):
            raise ProtocolError("malformed line: expected a JSON object")
        kind = msg.get("type")
        if kind not in CLIENT_TYPES:
            raise ProtocolError(f"unknown message type {kind!r}")
        if kind != "hello" and msg.get("session") != self.id:
            raise ProtocolError(f"unknown session {msg.get('session')!r}")
        return getattr(self, kind)(msg)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        session = Session(self.server.config, self.server.next_session_id())
        log.info("session %s opened from %s", session.id, self.client_address)
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            try:
                replies = session.handle(line)
            except ProtocolError as e:
                replies = [{"type": "error", "session": session.id, "reason": str(e)}]
            try:
                for r in replies:
                    self.wfile.write((json.dumps(r) + "\n").encode())
                self.wfile.flush()
            except OSError:
                break
        log.info("session %s closed", session.id)


class BridgeServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, config: SimConfig, host: str = "127.0.0.1", port: int = 0):
        self.config = config
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        super().__init__((host, port), _Handler)

    def next_session_id(self) -> str:
        with self._lock:
            return f"s{next(self._ids)}"

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start_background(self) -> threading.Thread:
        t = threading.Thread(target=self.serve_forever, daemon=True)
        t.start()
        return t


def serve_bridge(port: int, config: SimConfig, host: str = "127.0.0.1") -> None:
    """Serve sessions until interrupted."""
    with BridgeServer(config, host, port) as server:
        log.info("bridge listening on %s:%d", host, server.port)
        server.serve_forever()


class BridgeClient:
    """Minimal synchronous client, mostly for scripts and tests."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, timeout: float = 30.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self._r = self.sock.makefile("r", encoding="utf-8")
        self.session: str | None = None

    def close(self) -> None:
        self._r.close()
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def send_raw(self, line: str) -> None:
        self.sock.sendall((line.rstrip("\n") + "\n").encode())

    def recv(self) -> dict:
        line = self._r.readline()
        if not line:
            raise ConnectionError("bridge closed the connection")
        return json.loads(line)

    def request(self, msg: dict, replies: int = 1) -> list[dict]:
        msg = {"session": self.session, **msg}
        self.send_raw(json.dumps(msg))
        out = [self.recv()]
        if out[0]["type"] != "error":
            out.extend(self.recv() for _ in range(replies - 1))
        return out

    def hello(self) -> dict:
        (reply,) = self.request({"type": "hello"})
        self.session = reply.get("session")
        return reply

    def reset(self, seed: int | None = None, config: dict | None = None) -> dict:
        msg: dict[str, Any] = {"type": "reset"}
        if seed is not None:
            msg["seed"] = seed
        if config:
            msg["config"] = config
        return self.request(msg)[0]

    def act(self, actions: Mapping[int, int]) -> list[dict]:
        return self.request({"type": "act", "actions": {str(k): v for k, v in actions.items()}},
                            replies=2)
